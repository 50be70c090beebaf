"""Characterizing functionals of the two-weight Hardy inequality.

All functionals are evaluated on the grid's edge set (window edges plus
nodes).  Integrals against ``w dt`` use the exact cell masses of ``w`` and
the mean of the smooth factor at the two cell ends; integrals against
``d[-V^{-s}]`` use the telescoping masses of V.  When both weights are power
laws on an interval starting at 0 the part of each integral below the window
(or inside the first cell, if the window starts at 0) is taken in closed
form, and divergence at 0 or infinity is detected from the exponents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RegimeError, UnsupportedVariantError
from .quadrature import Grid
from .weights import INF, Exponents, Interval, Power, Weight, v_profile

KINDS = ("A_eps", "B1_eps", "B2_eps", "A_PS", "Muckenhoupt", "MuckenhouptP1", "MazyaRosin")
_EXPO_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    interval: Interval
    v: Weight
    w: Weight
    exp: Exponents

    def __post_init__(self):
        self.v.check_domain(self.interval.a, self.interval.b)
        self.w.check_domain(self.interval.a, self.interval.b)


@dataclass(frozen=True)
class ConditionValue:
    kind: str
    value: float
    err_estimate: float
    grid_n: int
    epsilon: float | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)


def default_epsilons(exp: Exponents) -> list[float]:
    eps = {0.25, 0.5, 1.0, 2.0, 4.0}
    if exp.p > 1:
        eps.add(exp.p_conj - 1.0)
    return sorted(eps)


@dataclass(frozen=True)
class _Law:
    """coef * t**expo on (0, inf)."""

    coef: float
    expo: float

    def __mul__(self, other):
        return _Law(self.coef * other.coef, self.expo + other.expo)

    def __pow__(self, k):
        return _Law(self.coef ** k, self.expo * k)

    def antiderivative(self) -> "_Law | None":
        if self.expo <= -1:
            return None
        return _Law(self.coef / (self.expo + 1), self.expo + 1)

    def int0(self, x: float) -> float:
        anti = self.antiderivative()
        return INF if anti is None else anti.coef * x ** anti.expo

    def int_inf(self, x: float) -> float:
        if self.expo >= -1:
            return INF
        return -self.coef * x ** (self.expo + 1) / (self.expo + 1)


class _Context:
    """Per-(scenario, grid) arrays shared by all functionals."""

    def __init__(self, s: Scenario, grid: Grid):
        if grid.interval != s.interval:
            raise ValueError("grid and scenario intervals differ")
        self.s, self.grid = s, grid
        self.exp = s.exp
        self.a, self.b = s.interval.a, s.interval.b
        self.E = grid.edges
        self.lo_is_a = self.E[0] == self.a
        self.V = v_profile(s.v, s.exp.p, grid)
        self.Ve = self.V.edge_values
        self.W = s.w.cell_integrals(self.E)
        self.v_law, self.w_law, self.V_law = self._laws()
        self.pure = self.w_law is not None

    def _laws(self):
        v, w, exp = self.s.v, self.s.w, self.exp
        if not (isinstance(v, Power) and isinstance(w, Power) and self.a == 0):
            return None, None, None
        v_law, w_law = _Law(v.c, v.alpha), _Law(w.c, w.alpha)
        if exp.p == 1:
            V_law = _Law(1.0 / v.c, -v.alpha) if v.alpha <= 0 else None
        else:
            pc = exp.p_conj
            e = v.alpha * (1 - pc) + 1
            V_law = _Law((v.c ** (1 - pc) / e) ** (1 / pc), e / pc) if e > 0 else None
        return v_law, w_law, V_law

    @property
    def V_infinite(self) -> bool:
        return bool(np.isinf(self.Ve[1:]).any()) or (self.pure and self.V_law is None)

    def sup_slice(self) -> slice:
        # an edge sitting on the endpoint a carries only the limit V(a+)
        return slice(1 if self.lo_is_a else 0, None)

    def w_tail(self) -> np.ndarray:
        """Integral of w from each edge to b (exact)."""
        tail = self.s.w.integral(self.E[-1], self.b) if self.b > self.E[-1] else 0.0
        rev = np.cumsum(self.W[::-1])[::-1]
        return np.concatenate((tail + rev, [tail]))

    def inner(self, beta: float):
        """I(t) = integral of V^beta w from a to each edge, its head error and law."""
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = self.Ve ** beta
        cells = _mean_cells(phi, self.W)
        head, err, law = 0.0, 0.0, None
        if self.pure and self.V_law is None:
            return np.full(self.E.size, INF), 0.0, None
        if self.pure:
            law = (self.V_law ** beta * self.w_law).antiderivative()
            if law is None:
                return np.full(self.E.size, INF), 0.0, None
            if self.lo_is_a:
                cells[0] = law.coef * self.E[1] ** law.expo
            else:
                head = law.coef * self.E[0] ** law.expo
        elif self.E[0] > self.a:
            err = float(phi[0] * self.s.w.integral(self.a, self.E[0]))
        I = np.empty(self.E.size)
        I[0] = head
        I[1:] = head + np.cumsum(cells)
        return I, err, law


def _mean_cells(phi, mass):
    """(phi_j + phi_{j+1}) / 2 * mass_j with zero-mass cells contributing 0."""
    with np.errstate(invalid="ignore", over="ignore"):
        c = 0.5 * (phi[:-1] + phi[1:]) * mass
    c[mass == 0] = 0.0
    c[np.isnan(c)] = INF
    return c


def _gap(phi, mass):
    with np.errstate(invalid="ignore", over="ignore"):
        g = 0.5 * np.abs(np.diff(phi)) * mass
    g[mass == 0] = 0.0
    g[np.isnan(g)] = INF
    return float(np.sum(g))


def _root_err(value, err, k):
    if not math.isfinite(value) or value <= 0:
        return 0.0 if value == 0 and err == 0 else (INF if err else 0.0)
    return abs((value + err) ** (1.0 / k) - value ** (1.0 / k))


def _require_eps(eps):
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"epsilon must be positive and finite, got {eps}")


def _require_convex(s: Scenario, name: str):
    if not s.exp.convex:
        raise RegimeError(f"{name} needs 1 <= p <= q (got p={s.exp.p}, q={s.exp.q})")


def _require_nonconvex(s: Scenario, name: str):
    if s.exp.convex:
        raise RegimeError(f"{name} needs q < p (got p={s.exp.p}, q={s.exp.q})")


def _sup_diverges(kappa: float, b: float) -> bool:
    """Does sup over (0, b) of t**kappa diverge?"""
    if abs(kappa) < _EXPO_TOL:
        return False
    return kappa < 0 or b == INF


def _integral_diverges(expo: float, b: float) -> bool:
    """Does the integral over (0, b) of t**expo diverge?"""
    return expo <= -1 or b == INF


def _infinite(kind, s, grid, eps, why, **diag):
    return ConditionValue(kind, INF, 0.0, grid.n, eps, {"divergent": why, **diag})


def a_eps(s: Scenario, eps: float, grid: Grid, *, _kind: str = "A_eps") -> ConditionValue:
    """sup_t V(t)^-eps (integral_a^t V^{q(eps+1)} w)^{1/q}."""
    _require_convex(s, "A_eps")
    _require_eps(eps)
    ctx = _Context(s, grid)
    q = s.exp.q
    if ctx.V_infinite:
        return _infinite(_kind, s, grid, eps, "V")
    I, ierr, law = ctx.inner(q * (eps + 1))
    if law is None and ctx.pure:
        return _infinite(_kind, s, grid, eps, "inner integral at a")
    if ctx.pure and _sup_diverges(-eps * ctx.V_law.expo + law.expo / q, ctx.b):
        return _infinite(_kind, s, grid, eps, "power-law sup")
    sl = ctx.sup_slice()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        terms = ctx.Ve[sl] ** (-eps) * I[sl] ** (1.0 / q)
    if np.any(np.isnan(terms)) or np.any(np.isinf(terms)):
        return _infinite(_kind, s, grid, eps, "discrete sup")
    k = int(np.argmax(terms))
    value = float(terms[k])
    near = terms[max(k - 1, 0):k + 2]
    err = float(np.max(np.abs(near - value)))
    if ierr:
        Ik = I[sl][k]
        err += float(ctx.Ve[sl][k] ** (-eps) * ((Ik + ierr) ** (1 / q) - Ik ** (1 / q)))
    t_star = float(ctx.E[sl][k])
    return ConditionValue(_kind, value, err, grid.n, eps, {"argmax_t": t_star})


def _b_parts(s: Scenario, eps: float, grid: Grid) -> dict:
    """Shared pieces of B_{1,eps}, B_{2,eps} and their identity.

    Returns the B1 integral (before the 1/r root), the Stieltjes part X, the
    boundary part Y = V(b)^{-eps r} I(b)^{r/q}, error estimates and a
    divergence reason (or None).
    """
    _require_nonconvex(s, "B_{i,eps}")
    _require_eps(eps)
    ctx = _Context(s, grid)
    p, q, r = s.exp.p, s.exp.q, s.exp.r
    beta = q * (eps + 1)
    out = {"ctx": ctx, "divergent": None}
    if ctx.V_infinite:
        out["divergent"] = "V"
        return out
    I, ierr, ilaw = ctx.inner(beta)
    if ctx.pure and ilaw is None:
        out["divergent"] = "inner integral at a"
        return out
    Ve, W, E = ctx.Ve, ctx.W, ctx.E
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        phi = I ** (r / p) * Ve ** (beta - eps * r)
        g = I ** (r / q)
        M = Ve ** (-eps * r)
    if ctx.lo_is_a and not math.isfinite(phi[0]):
        phi[0] = 0.0
    b1_cells = _mean_cells(phi, W)
    b1_err = _gap(phi, W)
    with np.errstate(invalid="ignore"):
        mass = np.where(np.isinf(M[:-1]), 0.0, M[:-1] - M[1:])
    x_cells = _mean_cells(g, mass)
    x_err = _gap(g, mass)
    b1_head = x_head = 0.0
    if ctx.pure:
        V_law = ctx.V_law
        b1_law = ilaw ** (r / p) * V_law ** (beta - eps * r) * ctx.w_law
        if V_law.expo > 0:
            dM = _Law(eps * r * V_law.expo * V_law.coef ** (-eps * r), -V_law.expo * eps * r - 1)
            x_law = ilaw ** (r / q) * dM
        else:
            x_law = None
        if _integral_diverges(b1_law.expo, ctx.b):
            out["divergent"] = "B1 integrand"
            return out
        if x_law is not None and _integral_diverges(x_law.expo, ctx.b):
            out["divergent"] = "Stieltjes integrand"
            return out
        if ctx.lo_is_a:
            b1_cells[0] = b1_law.int0(E[1])
            x_cells[0] = x_law.int0(E[1]) if x_law else 0.0
        else:
            b1_head = b1_law.int0(E[0])
            x_head = x_law.int0(E[0]) if x_law else 0.0
    else:
        if np.isinf(M[0]):
            # the skipped first cell: by parts it is bounded by (r/q) * its B1 share
            x_err += (r / q) * float(b1_cells[0])
        if E[0] > ctx.a:
            w_head = s.w.integral(ctx.a, E[0])
            b1_err += float(phi[0] * w_head)
            x_err += (r / q) * float(phi[0] * w_head)
    v_b = ctx.V.v_at_b
    M_b = 0.0 if v_b == INF else v_b ** (-eps * r)
    x_tail = float(g[-1] * (M[-1] - M_b)) if M[-1] > M_b else 0.0
    out.update(
        b1r=b1_head + float(np.sum(b1_cells)),
        b1r_err=b1_err + (r / p) * ierr,
        X=x_head + float(np.sum(x_cells)) + x_tail,
        X_err=x_err,
        Y=0.0 if v_b == INF else float(M_b * g[-1]),
        I_end=float(I[-1]),
        v_b=v_b,
    )
    return out


def b1_eps(s: Scenario, eps: float, grid: Grid, *, _kind: str = "B1_eps") -> ConditionValue:
    """(integral (integral_a^t V^{q(eps+1)} w)^{r/p} V^{q(eps+1)-eps r} w dt)^{1/r}."""
    parts = _b_parts(s, eps, grid)
    if parts["divergent"]:
        return _infinite(_kind, s, grid, eps, parts["divergent"])
    r = s.exp.r
    val = parts["b1r"]
    return ConditionValue(_kind, val ** (1 / r), _root_err(val, parts["b1r_err"], r), grid.n, eps,
                          {"integral": val})


def b2_eps(s: Scenario, eps: float, grid: Grid) -> ConditionValue:
    """X^{1/r} + V(b)^{-eps} (integral_a^b V^{q(eps+1)} w)^{1/q}, X the
    integral of (integral_a^t V^{q(eps+1)} w)^{r/q} against d[-V^{-eps r}]."""
    parts = _b_parts(s, eps, grid)
    if parts["divergent"]:
        return _infinite("B2_eps", s, grid, eps, parts["divergent"])
    r, q = s.exp.r, s.exp.q
    X, v_b = parts["X"], parts["v_b"]
    second = 0.0 if v_b == INF else v_b ** (-eps) * parts["I_end"] ** (1 / q)
    return ConditionValue("B2_eps", X ** (1 / r) + second, _root_err(X, parts["X_err"], r),
                          grid.n, eps, {"X": X, "Y": parts["Y"], "boundary_term": second})


def b1_b2_identity_residual(s: Scenario, eps: float, grid: Grid) -> float:
    """Relative gap between B1^r and (q/r)(X + Y); zero in the continuum."""
    parts = _b_parts(s, eps, grid)
    if parts["divergent"]:
        return 0.0
    q, r = s.exp.q, s.exp.r
    lhs = parts["b1r"]
    rhs = (q / r) * (parts["X"] + parts["Y"])
    if math.isinf(lhs) and math.isinf(rhs):
        return 0.0
    if math.isinf(lhs) or math.isinf(rhs):
        return 1.0
    scale = max(lhs, rhs)
    return 0.0 if scale == 0 else abs(lhs - rhs) / scale


def a_ps(s: Scenario, grid: Grid) -> ConditionValue:
    """The single-functional criterion A_PS: A_eps (p <= q) or B_{1,eps} (q < p)
    at eps = p' - 1."""
    if s.exp.p == 1:
        raise RegimeError("A_PS is defined for p > 1 only")
    eps = s.exp.p_conj - 1.0
    if s.exp.convex:
        return a_eps(s, eps, grid, _kind="A_PS")
    return b1_eps(s, eps, grid, _kind="A_PS")


def muckenhoupt(s: Scenario, grid: Grid) -> ConditionValue:
    """sup_t (integral_t^b w)^{1/q} V(t), V from the p > 1 or the p = 1 branch."""
    _require_convex(s, "the Muckenhoupt condition")
    kind = "MuckenhouptP1" if s.exp.p == 1 else "Muckenhoupt"
    ctx = _Context(s, grid)
    q = s.exp.q
    if ctx.V_infinite:
        return _infinite(kind, s, grid, None, "V")
    if ctx.pure:
        aw, gamma = ctx.w_law.expo, ctx.V_law.expo
        if ctx.b == INF and aw >= -1:
            return _infinite(kind, s, grid, None, "w not integrable at infinity")
        if aw < -1 and _sup_diverges((aw + 1) / q + gamma, ctx.b):
            return _infinite(kind, s, grid, None, "power-law sup")
        if aw == -1 and gamma == 0:
            return _infinite(kind, s, grid, None, "logarithmic growth at 0")
    sl = ctx.sup_slice()
    T = ctx.w_tail()
    with np.errstate(invalid="ignore", over="ignore"):
        terms = T[sl] ** (1.0 / q) * ctx.Ve[sl]
    if np.any(~np.isfinite(terms)):
        return _infinite(kind, s, grid, None, "discrete sup")
    k = int(np.argmax(terms))
    value = float(terms[k])
    err = float(np.max(np.abs(terms[max(k - 1, 0):k + 2] - value)))
    return ConditionValue(kind, value, err, grid.n, None, {"argmax_t": float(ctx.E[sl][k])})


def mazya_rosin(s: Scenario, grid: Grid) -> ConditionValue:
    """integral (integral_t^b w)^{r/q} (integral_a^t v^{1-p'})^{r/q'} v^{1-p'} dt
    for 1 <= q < p, p > 1.  The 1/r root is reported in the diagnostics."""
    _require_nonconvex(s, "the Mazya-Rosin condition")
    p, q, r = s.exp.p, s.exp.q, s.exp.r
    if q < 1 or p == 1:
        raise UnsupportedVariantError("the Mazya-Rosin condition is stated for 1 <= q < p, p > 1")
    ctx = _Context(s, grid)
    pc = s.exp.p_conj
    rq_conj = r * (1.0 - 1.0 / q)
    diag = {"q_conj_infinite": q == 1}
    if ctx.V_infinite:
        return _infinite("MazyaRosin", s, grid, None, "V", **diag)
    E, v = ctx.E, s.v
    U = v.cell_integrals(E, 1.0 - pc)
    T = ctx.w_tail()
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        psi = T ** (r / q) * (ctx.Ve ** pc) ** rq_conj
    cells = _mean_cells(psi, U)
    err = _gap(psi, U)
    if not math.isfinite(psi[0]):
        cells[0] = psi[1] * U[0]
        err += float(cells[0])
    head = tail = 0.0
    law = None
    if ctx.pure:
        aw = ctx.w_law.expo
        small_t = (aw + 1) * r / q if aw < -1 else 0.0
        density = (ctx.V_law ** pc) ** rq_conj * ctx.v_law ** (1.0 - pc)
        lam = small_t + density.expo
        if lam <= -1 or (aw == -1 and lam <= -1 + _EXPO_TOL):
            return _infinite("MazyaRosin", s, grid, None, "integrand at 0", **diag)
        if ctx.b == INF:
            if aw >= -1:
                return _infinite("MazyaRosin", s, grid, None, "w not integrable at infinity", **diag)
            T_law = _Law(-ctx.w_law.coef / (aw + 1), aw + 1)
            law = T_law ** (r / q) * density
            if _integral_diverges(law.expo, INF):
                return _infinite("MazyaRosin", s, grid, None, "power-law integrand", **diag)
    if E[0] > ctx.a:
        u_head = v.integral(ctx.a, E[0], 1.0 - pc)
        if law is not None:
            head = law.int0(E[0])
        else:
            err += float(psi[0] * u_head)
    if ctx.b > E[-1]:
        if law is not None:
            tail = law.int_inf(E[-1])
        else:
            u_tail = v.integral(E[-1], ctx.b, 1.0 - pc)
            err += float(psi[-1] * u_tail) if psi[-1] > 0 else 0.0
    value = head + float(np.sum(cells)) + tail
    diag["root"] = value ** (1.0 / r)
    return ConditionValue("MazyaRosin", value, err, grid.n, None, diag)
