"""Best-constant estimation for the discrete Hardy inequality.

The discrete inequality lives on the grid nodes: ``F = L f`` is the
cumulative trapezoid integral from the window's lower edge, and both sides
are weighted by the exact masses of ``w`` and ``v`` over the node-centred
dual cells::

    ratio(f) = (sum_i dw_i F_i^q)^(1/q) / (sum_i dv_i f_i^p)^(1/p)

The supremum of this ratio over ``f >= 0`` is found by projected ascent with
restarts; for ``p = q = 2`` it is also the square root of the top eigenvalue
of a symmetric matrix, computed independently by power iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .conditions import Scenario, _Context, default_epsilons
from .errors import DomainError, UnsupportedVariantError
from .quadrature import Grid, SampledFunction

SIGMA = 2.0
_WITNESS_T_SAMPLES = 256
_WARM_WITNESSES = 4


@dataclass(frozen=True)
class OptimizerOptions:
    max_iters: int = 2000
    restarts: int = 8
    step_init: float = 1.0
    tol: float = 1e-10
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iters <= 0 or self.restarts < 0:
            raise ValueError("max_iters must be positive and restarts nonnegative")
        if not (self.step_init > 0 and self.tol > 0):
            raise ValueError("step_init and tol must be positive")


@dataclass(frozen=True, eq=False)
class BestConstantEstimate:
    value: float
    maximizer: SampledFunction
    iterations: int
    restarts_used: int
    residual: float
    spectral_crosscheck: float | None
    witness_lb: float
    converged: bool


class _Discrete:
    """Operator coefficients and dual-cell weight masses for one scenario/grid."""

    def __init__(self, s: Scenario, grid: Grid):
        if grid.interval != s.interval:
            raise ValueError("grid and scenario intervals differ")
        de = grid.dual_edges
        self.s, self.grid = s, grid
        self.p, self.q = s.exp.p, s.exp.q
        self.head, self.cl, self.cr = grid.head, grid.cl, grid.cr
        self.dw = np.ascontiguousarray(s.w.cell_integrals(de))
        self.dv = np.ascontiguousarray(s.v.cell_integrals(de))

    def ratio_grad(self, f):
        return kernels.hardy_ratio_grad(f, self.head, self.cl, self.cr,
                                        self.dw, self.dv, self.p, self.q)

    def ratio(self, f) -> float:
        F = kernels.hardy_apply(f, self.head, self.cl, self.cr)
        num = float(np.dot(self.dw, F ** self.q))
        den = float(np.dot(self.dv, f ** self.p))
        if den <= 0:
            raise ValueError("f must not vanish identically")
        return num ** (1.0 / self.q) / den ** (1.0 / self.p)

    def normalize(self, f):
        den = float(np.dot(self.dv, f ** self.p))
        return f / den ** (1.0 / self.p)


def hardy_ratio(f: SampledFunction, s: Scenario) -> float:
    """(integral F^q w)^{1/q} / (integral f^p v)^{1/p}, F the discrete Hardy transform of f."""
    vals = f.values
    if not np.any(vals > 0):
        raise ValueError("f must not vanish identically")
    return _Discrete(s, f.grid).ratio(vals)


def ascent_direction(f: SampledFunction, s: Scenario) -> np.ndarray:
    """Gradient of hardy_ratio with respect to the sample values of f."""
    return _Discrete(s, f.grid).ratio_grad(f.values)[1]


# ---------------------------------------------------------------- witnesses

def _v_nodes(s: Scenario, grid: Grid) -> np.ndarray:
    return np.asarray(s.v(grid.nodes), dtype=float)


def witness_convex(s: Scenario, eps: float, t_idx: int, grid: Grid) -> SampledFunction:
    """Test function supported on the nodes up to ``t_idx``.

    p > 1: V^{1+eps-p'} v^{1-p'}.  p = 1: one spike per class
    E_k = {sigma^k < V <= sigma^{k+1}}, of height V^eps / (v |G_k|) at the
    first node of the class where 1/v exceeds sigma^k.
    """
    if not s.exp.convex:
        raise ValueError("witness_convex needs p <= q")
    if not 0 <= t_idx < grid.n:
        raise ValueError(f"t_idx {t_idx} outside 0..{grid.n - 1}")
    ctx = _Context(s, grid)
    V = ctx.V.values
    v = _v_nodes(s, grid)
    f = np.zeros(grid.n)
    k1 = t_idx + 1
    if s.exp.p > 1:
        pc = s.exp.p_conj
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            f[:k1] = V[:k1] ** (1 + eps - pc) * v[:k1] ** (1 - pc)
        f[~np.isfinite(f)] = 0.0
    else:
        Vt = V[:k1]
        finite = np.isfinite(Vt) & (Vt > 0)
        cls = np.full(k1, np.iinfo(np.int64).min)
        cls[finite] = np.ceil(np.log(Vt[finite]) / math.log(SIGMA) - 1e-12).astype(np.int64) - 1
        widths = grid.cell_weights
        for k in np.unique(cls[finite]):
            members = np.flatnonzero(cls == k)
            above = members[1.0 / v[members] > SIGMA ** k]
            j = int(above[0]) if above.size else int(members[np.argmax(1.0 / v[members])])
            f[j] += Vt[j] ** eps / (v[j] * widths[j])
    if not np.any(f > 0):
        f[0] = 1.0
    return SampledFunction(grid, _Discrete(s, grid).normalize(f))


def witness_nonconvex(s: Scenario, eps: float, grid: Grid) -> SampledFunction:
    """(integral_x^b I^{r/q} V^{-p'} d[-V^{-eps r}])^{1/p} v(x)^{1-p'},
    I(t) the integral of V^{q(eps+1)} w from a to t."""
    if s.exp.convex:
        raise ValueError("witness_nonconvex needs q < p")
    if s.exp.p == 1:
        raise UnsupportedVariantError("the non-convex witness is built for p > 1 only")
    p, q, r, pc = s.exp.p, s.exp.q, s.exp.r, s.exp.p_conj
    ctx = _Context(s, grid)
    Ve = ctx.Ve
    I = ctx.inner(q * (eps + 1))[0]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        h = I ** (r / q) * Ve ** (-pc)
        M = Ve ** (-eps * r)
        mass = np.where(np.isinf(M[:-1]), 0.0, M[:-1] - M[1:])
        cells = 0.5 * (h[:-1] + h[1:]) * mass
    cells[~np.isfinite(cells)] = 0.0
    v_b = ctx.V.v_at_b
    M_b = 0.0 if v_b == math.inf else v_b ** (-eps * r)
    tail_cell = h[-1] * (M[-1] - M_b) if np.isfinite(h[-1]) and M[-1] > M_b else 0.0
    # tails from node i = edge i + 1
    tails = np.cumsum(cells[::-1])[::-1][1:] + tail_cell
    v = _v_nodes(s, grid)
    f = np.maximum(tails, 0.0) ** (1.0 / p) * v ** (1 - pc)
    f[~np.isfinite(f)] = 0.0
    if not np.any(f > 0):
        f[0] = 1.0
    return SampledFunction(grid, _Discrete(s, grid).normalize(f))


def _t_indices(n: int) -> np.ndarray:
    if n <= _WITNESS_T_SAMPLES:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, _WITNESS_T_SAMPLES).round().astype(int))


def witness_family(s: Scenario, grid: Grid, epsilons=None) -> list[tuple[float, SampledFunction]]:
    """All witnesses for the scenario: (ratio, function) pairs, best first."""
    if epsilons is None:
        epsilons = default_epsilons(s.exp)
    disc = _Discrete(s, grid)
    out = []
    for eps in epsilons:
        if s.exp.convex:
            fs = [witness_convex(s, eps, int(t), grid) for t in _t_indices(grid.n)]
        elif s.exp.p > 1:
            fs = [witness_nonconvex(s, eps, grid)]
        else:
            fs = []
        out.extend((disc.ratio(f.values), f) for f in fs)
    out.sort(key=lambda pair: -pair[0])
    return out


def witness_lower_bound(s: Scenario, eps: float, grid: Grid) -> float:
    fam = witness_family(s, grid, [eps])
    return fam[0][0] if fam else 0.0


# ---------------------------------------------------------------- optimizer

def _ascend(disc: _Discrete, f0: np.ndarray, opts: OptimizerOptions):
    """Projected ascent with doubling/halving step; returns (f, ratio, iters, residual)."""
    f = disc.normalize(np.maximum(f0, 0.0))
    R, G = disc.ratio_grad(f)
    history = [R]
    tau = opts.step_init
    dv = disc.dv
    residual = math.inf
    it = 0
    for it in range(1, opts.max_iters + 1):
        if R <= 0:
            break
        d = G / dv
        accepted = False
        for _ in range(40):
            trial = np.maximum(f + (tau / R) * d, 0.0)
            if not np.any(trial > 0):
                tau *= 0.5
                continue
            trial = disc.normalize(trial)
            R_new, G_new = disc.ratio_grad(trial)
            if R_new >= R:
                f, R, G = trial, R_new, G_new
                tau = min(tau * 2.0, 1e6)
                accepted = True
                break
            tau *= 0.5
        history.append(R)
        if not accepted:
            residual = 0.0
            break
        if len(history) > 10:
            residual = (history[-1] - history[-11]) / history[-1]
            if residual < opts.tol:
                break
    return f, R, it, residual


def _vertex_scan(disc: _Discrete) -> np.ndarray:
    """Best single-node spike; exact maximizer when p = 1 and q = 1."""
    n = disc.grid.n
    # column j of L: head/cr at row j, cr + cl below it
    diag = np.concatenate(([disc.head], disc.cr))
    below = np.concatenate((disc.cl, [0.0])) + diag
    tail_w = np.concatenate((np.cumsum(disc.dw[::-1])[::-1][1:], [0.0]))
    q = disc.q
    num = disc.dw * diag ** q + tail_w * below ** q
    score = num ** (1.0 / q) / disc.dv ** (1.0 / disc.p)
    f = np.zeros(n)
    f[int(np.argmax(score))] = 1.0
    return f


def spectral_constant(s: Scenario, grid: Grid, tol: float = 1e-14, max_iters: int = 200000) -> float:
    """sqrt of the top eigenvalue of D_v^{-1/2} L^T D_w L D_v^{-1/2} (p = q = 2)."""
    if not (s.exp.p == 2 and s.exp.q == 2):
        raise ValueError("the spectral route needs p = q = 2")
    disc = _Discrete(s, grid)
    isd = 1.0 / np.sqrt(disc.dv)
    x = np.sqrt(disc.dv)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iters):
        y = kernels.spectral_matvec(x, disc.head, disc.cl, disc.cr, disc.dw, isd)
        lam_new = float(np.dot(x, y))
        x = y / np.linalg.norm(y)
        if abs(lam_new - lam) <= tol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return math.sqrt(lam)


def estimate_best_constant(s: Scenario, grid: Grid, opts: OptimizerOptions | None = None,
                           epsilons=None) -> BestConstantEstimate:
    """Maximize the discrete ratio from the constant function, seeded random
    starts and the best witnesses; the best candidate wins (lowest start id
    on ties)."""
    opts = opts or OptimizerOptions()
    disc = _Discrete(s, grid)
    n = grid.n
    fam = witness_family(s, grid, epsilons)
    witness_lb = fam[0][0] if fam else 0.0
    rng = np.random.default_rng(opts.rng_seed)
    starts = [np.ones(n)]
    starts += [f.values for _, f in fam[:_WARM_WITNESSES]]
    if s.exp.p == 1:
        starts.append(_vertex_scan(disc))
    starts += [rng.uniform(0.05, 1.0, n) for _ in range(opts.restarts)]
    best = None
    total_iters = 0
    for f0 in starts:
        f, R, it, res = _ascend(disc, f0, opts)
        total_iters += it
        if best is None or R > best[1]:
            best = (f, R, res)
    f, R, res = best
    if fam and fam[0][0] > R:
        f, res = fam[0][1].values, 0.0
    maximizer = SampledFunction(grid, f)
    spectral = spectral_constant(s, grid) if (s.exp.p == 2 and s.exp.q == 2) else None
    return BestConstantEstimate(
        value=disc.ratio(maximizer.values),
        maximizer=maximizer,
        iterations=total_iters,
        restarts_used=len(starts),
        residual=res,
        spectral_crosscheck=spectral,
        witness_lb=witness_lb,
        converged=res < opts.tol,
    )


# ---------------------------------------------------------------- geometric mean

def gm_transform(f: SampledFunction) -> SampledFunction:
    """Gf(t) = exp((1/t) integral_0^t log f).

    Below the first node log f is continued along the power law through the
    first two nodes; between nodes the trapezoid rule in t is used.
    """
    grid = f.grid
    if grid.interval.a != 0:
        raise DomainError("the geometric mean operator integrates from 0; the interval must start at 0")
    vals = f.values
    if np.any(vals <= 0):
        raise DomainError("gm_transform needs f > 0 at every node")
    t = grid.nodes
    L = np.log(vals)
    slope = (L[1] - L[0]) / math.log(t[1] / t[0])
    head = t[0] * (L[0] - slope)
    cum = np.concatenate(([head], head + np.cumsum(0.5 * (L[:-1] + L[1:]) * np.diff(t))))
    return SampledFunction(grid, np.exp(cum / t))
