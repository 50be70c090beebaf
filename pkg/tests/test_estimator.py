import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardygauge import (
    DomainError,
    Exponents,
    Interval,
    OptimizerOptions,
    Power,
    SampledFunction,
    Scenario,
    UnsupportedVariantError,
    estimate_best_constant,
    gm_transform,
    hardy_ratio,
    make_grid,
    spectral_constant,
    witness_convex,
    witness_family,
    witness_nonconvex,
)
from hardygauge.estimator import ascent_direction

UNIT = Interval(0.0, 1.0)
ONE = Power(1.0, 0.0)


def scen(p, q, v=ONE, w=ONE, iv=UNIT):
    return Scenario(iv, v, w, Exponents(p, q))


def test_hardy_ratio_examples():
    g = make_grid(UNIT, 2000, "linear")
    f = SampledFunction(g, np.ones(g.n))
    assert hardy_ratio(f, scen(2, 2)) == pytest.approx(3 ** -0.5, abs=1e-4)
    f = SampledFunction(g, 1.0 - g.nodes)
    assert hardy_ratio(f, scen(2, 1)) == pytest.approx(3 ** -0.5, abs=1e-4)
    with pytest.raises(ValueError):
        hardy_ratio(SampledFunction(g, np.zeros(g.n)), scen(2, 2))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=16, max_size=16).filter(lambda x: sum(x) > 0),
       st.floats(1e-3, 1e3), st.sampled_from([(2, 2), (1, 1), (3, 1.5), (2, 0.5)]))
def test_hardy_ratio_scale_invariant(vals, lam, pq):
    g = make_grid(UNIT, 16)
    s = scen(*pq)
    f = np.array(vals)
    r1 = hardy_ratio(SampledFunction(g, f), s)
    r2 = hardy_ratio(SampledFunction(g, lam * f), s)
    assert r2 == pytest.approx(r1, rel=1e-12)


def test_estimate_nonconvex_and_p1():
    s = scen(2, 1)
    g = make_grid(UNIT, 512)
    est = estimate_best_constant(s, g)
    assert est.value == pytest.approx(3 ** -0.5, rel=0.01)
    assert est.spectral_crosscheck is None and est.converged
    est = estimate_best_constant(scen(1, 1), g)
    assert est.value == pytest.approx(1.0, rel=0.01)


def test_estimate_spectral_agreement():
    s = Scenario(Interval(0.0, math.inf), ONE, Power(1.0, -2.0), Exponents(2, 2))
    g = make_grid(s.interval, 512)
    est = estimate_best_constant(s, g)
    assert 1.85 < est.value < 2.0
    assert abs(est.value - est.spectral_crosscheck) / est.value <= 1e-6
    assert spectral_constant(s, g) == est.spectral_crosscheck
    with pytest.raises(ValueError):
        spectral_constant(scen(2, 1), g)


@pytest.mark.parametrize("pq", [(2, 2), (2, 1), (1, 1), (3, 1.5), (1.5, 3), (2, 0.5), (1, 0.5)])
def test_estimate_invariants(pq):
    s = scen(*pq, v=Power(1.0, 0.3), w=Power(2.0, -0.4))
    g = make_grid(UNIT, 256)
    est = estimate_best_constant(s, g, OptimizerOptions(max_iters=400, restarts=3))
    assert hardy_ratio(est.maximizer, s) == pytest.approx(est.value, rel=1e-9)
    for ratio, f in witness_family(s, g):
        assert ratio <= est.value + 1e-9
    assert est.witness_lb <= est.value + 1e-9
    assert est.restarts_used >= 4


def test_estimate_deterministic():
    s = scen(3, 1.5, w=Power(1.0, 1.0))
    g = make_grid(UNIT, 128)
    opts = OptimizerOptions(restarts=4, rng_seed=7)
    a = estimate_best_constant(s, g, opts)
    b = estimate_best_constant(s, g, opts)
    assert a.value == b.value
    np.testing.assert_array_equal(a.maximizer.values, b.maximizer.values)


def test_non_convergence_is_flagged():
    s = scen(3, 1.5, w=Power(1.0, 1.0))
    est = estimate_best_constant(s, make_grid(UNIT, 128), OptimizerOptions(max_iters=1, restarts=1))
    assert not est.converged and est.residual > 1e-10


def test_optimizer_options_validation():
    for kw in ({"max_iters": 0}, {"restarts": -1}, {"step_init": 0.0}, {"tol": -1.0}):
        with pytest.raises(ValueError):
            OptimizerOptions(**kw)


def test_witness_convex_examples():
    g = make_grid(UNIT, 64)
    s = scen(2, 2)
    f = witness_convex(s, 1.0, 20, g).values
    assert np.all(f[21:] == 0) and np.ptp(f[:21]) < 1e-12 * f[0]
    s = scen(1, 1)
    for eps in (0.5, 2.0):
        f = witness_convex(s, eps, 30, g).values
        assert np.count_nonzero(f) == 1 and f[0] > 0
    with pytest.raises(ValueError):
        witness_convex(scen(2, 1), 1.0, 3, g)
    with pytest.raises(ValueError):
        witness_convex(s, 1.0, 64, g)


def test_witness_convex_p1_classes():
    # v = t^-1 gives V = t: dyadic classes of t, one spike per class below t_idx
    g = make_grid(UNIT, 200, "log", 1e-3, 1.0)
    s = scen(1, 2, v=Power(1.0, -1.0))
    f = witness_convex(s, 1.0, g.n - 1, g).values
    n_classes = len(np.unique(np.ceil(np.log2(g.nodes) - 1e-12)))
    assert np.count_nonzero(f) == n_classes


def test_witness_ratios_bounded():
    s = Scenario(Interval(0.0, math.inf), ONE, Power(1.0, -2.0), Exponents(2, 2))
    g = make_grid(s.interval, 256)
    est = estimate_best_constant(s, g)
    for t in (0, 50, 128, 255):
        assert hardy_ratio(witness_convex(s, 1.0, t, g), s) <= est.value + 1e-9


def test_witness_nonconvex():
    s = scen(2, 1)
    g = make_grid(UNIT, 512)
    f = witness_nonconvex(s, 1.0, g)
    assert np.all(np.isfinite(f.values))
    assert np.all(np.diff(f.values) <= 1e-15)  # tail-weighted: nonincreasing for v = 1
    est = estimate_best_constant(s, g)
    assert hardy_ratio(f, s) >= 0.5 * est.value
    with pytest.raises(UnsupportedVariantError):
        witness_nonconvex(scen(1, 0.5), 1.0, g)
    with pytest.raises(ValueError):
        witness_nonconvex(scen(2, 2), 1.0, g)


def test_witness_nonconvex_finite_under_truncation():
    # w = t^-2 on (0, inf): B_2 diverges, the truncated witness stays finite
    s = scen(2, 1, w=Power(1.0, -2.0), iv=Interval(0.0, math.inf))
    f = witness_nonconvex(s, 1.0, make_grid(s.interval, 128))
    assert np.all(np.isfinite(f.values)) and np.any(f.values > 0)


def test_gm_transform_examples():
    g = make_grid(UNIT, 2000)
    c = SampledFunction(g, np.full(g.n, 2.5))
    np.testing.assert_allclose(gm_transform(c).values, 2.5, rtol=1e-12)
    t = g.nodes
    np.testing.assert_allclose(gm_transform(SampledFunction(g, t)).values, t / math.e, atol=1e-4)
    np.testing.assert_allclose(gm_transform(SampledFunction(g, np.exp(t))).values,
                               np.exp(t / 2), atol=1e-4)
    vals = t.copy()
    vals[3] = 0.0
    with pytest.raises(DomainError):
        gm_transform(SampledFunction(g, vals))
    with pytest.raises(DomainError):
        gm_transform(SampledFunction(make_grid(Interval(1.0, 2.0), 16), np.ones(16)))


@pytest.mark.parametrize("pq", [(2, 2), (2, 1), (1, 1), (3, 1.5), (1.5, 0.7)])
def test_gradient_matches_finite_differences(pq):
    s = scen(*pq, v=Power(1.0, 0.5), w=Power(1.0, -0.5))
    g = make_grid(UNIT, 64)
    rng = np.random.default_rng(3)
    for _ in range(5):
        f = rng.uniform(0.2, 1.0, g.n)
        grad = ascent_direction(SampledFunction(g, f), s)
        fd = np.empty(g.n)
        for j in range(g.n):
            h = 1e-6 * f[j]
            up, dn = f.copy(), f.copy()
            up[j] += h
            dn[j] -= h
            fd[j] = (hardy_ratio(SampledFunction(g, up), s) - hardy_ratio(SampledFunction(g, dn), s)) / (2 * h)
        assert np.linalg.norm(grad - fd) <= 1e-5 * np.linalg.norm(grad)


def test_estimate_with_infinite_v_profile():
    # v^(1-p') = t^-2 is not integrable at 0: V is infinite, the witnesses degenerate
    s = scen(2, 1, v=Power(1.0, 2.0))
    g = make_grid(UNIT, 64)
    f = witness_nonconvex(s, 1.0, g)
    assert np.count_nonzero(f.values) == 1
    est = estimate_best_constant(s, g, OptimizerOptions(max_iters=200, restarts=1))
    assert math.isfinite(est.value) and est.value > 0
