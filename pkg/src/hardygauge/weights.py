"""Intervals, exponents, weights and the V-profile.

A weight is stored in one of three concrete representations.  Every
representation integrates its own powers exactly, so the V-profile and the
cell masses used by the conditions carry no quadrature error of their own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError

INF = math.inf


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if math.isnan(self.a) or math.isnan(self.b) or not self.a < self.b:
            raise ValueError(f"interval needs a < b, got ({self.a}, {self.b})")
        if self.a == INF or self.b == -INF:
            raise ValueError("interval endpoints out of order")

    def contains(self, t) -> bool:
        return self.a < t < self.b


@dataclass(frozen=True)
class Exponents:
    p: float
    q: float

    def __post_init__(self):
        if not (1.0 <= self.p < INF):
            raise ValueError(f"p must lie in [1, inf), got {self.p}")
        if not (0.0 < self.q < INF):
            raise ValueError(f"q must lie in (0, inf), got {self.q}")

    @property
    def p_conj(self) -> float:
        return INF if self.p == 1.0 else self.p / (self.p - 1.0)

    @property
    def r(self) -> float | None:
        if self.q >= self.p:
            return None
        return self.p * self.q / (self.p - self.q)

    @property
    def convex(self) -> bool:
        return self.p <= self.q


def _power_antiderivative(e, x0, x1):
    """Integral of t**(e - 1) over [x0, x1] with 0 <= x0 <= x1 <= inf (vectorized)."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    out = np.zeros(np.broadcast(x0, x1).shape)
    x0, x1 = np.broadcast_arrays(x0, x1)
    live = x1 > x0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if e == 0.0:
            out[live] = np.log(x1[live]) - np.log(x0[live])
            out[live & ((x0 == 0) | np.isinf(x1))] = INF
            # log-difference loses digits for short cells; use log1p there
            short = live & (x0 > 0) & np.isfinite(x1)
            out[short] = np.log1p((x1[short] - x0[short]) / x0[short])
            return out
        zero = live & (x0 == 0)
        out[zero] = x1[zero] ** e / e if e > 0 else INF
        inf = live & np.isinf(x1) & (x0 > 0)
        out[inf] = -(x0[inf] ** e) / e if e < 0 else INF
        mid = live & (x0 > 0) & np.isfinite(x1)
        ratio_log = np.log1p((x1[mid] - x0[mid]) / x0[mid])
        out[mid] = x0[mid] ** e * np.expm1(e * ratio_log) / e
    out[zero & np.isinf(x1)] = INF
    return out


class Weight:
    """Base class; concrete weights are frozen dataclasses."""

    support = (-INF, INF)

    def __call__(self, t):
        raise NotImplementedError

    def scaled(self, lam: float) -> "Weight":
        raise NotImplementedError

    def cell_integrals(self, edges, power: float = 1.0) -> np.ndarray:
        """Exact integrals of ``w**power`` over consecutive ``edges``."""
        raise NotImplementedError

    def integral(self, x0: float, x1: float, power: float = 1.0) -> float:
        if x1 <= x0:
            return 0.0
        return float(self.cell_integrals(np.array([x0, x1]), power)[0])

    def sup_inverse(self, x0, points) -> np.ndarray:
        """ess sup of 1/w over (x0, t) for each t in ``points``."""
        raise NotImplementedError

    def sup_inverse_right_limit(self, x0: float) -> float:
        """lim_{t -> x0+} of ess sup of 1/w over (x0, t)."""
        raise NotImplementedError

    def check_domain(self, lo: float, hi: float):
        s0, s1 = self.support
        if lo < s0 or hi > s1:
            raise DomainError(
                f"{type(self).__name__} is valid on {self.support}, not on ({lo}, {hi})"
            )


@dataclass(frozen=True)
class Power(Weight):
    """w(t) = c * t**alpha on (0, inf)."""

    c: float
    alpha: float
    support = (0.0, INF)

    def __post_init__(self):
        if not (0.0 < self.c < INF) or not math.isfinite(self.alpha):
            raise ValueError(f"invalid power weight c={self.c}, alpha={self.alpha}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0) or np.any(~np.isfinite(t)):
            raise DomainError("power weights are defined on (0, inf)")
        out = self.c * t ** self.alpha
        return float(out) if out.ndim == 0 else out

    def scaled(self, lam):
        return Power(self.c * lam, self.alpha)

    def cell_integrals(self, edges, power=1.0):
        edges = np.asarray(edges, dtype=float)
        if edges.size and edges[0] < 0:
            raise DomainError("power weights are defined on (0, inf)")
        e = self.alpha * power + 1.0
        return self.c ** power * _power_antiderivative(e, edges[:-1], edges[1:])

    def sup_inverse(self, x0, points):
        points = np.asarray(points, dtype=float)
        if self.alpha < 0:
            with np.errstate(divide="ignore"):
                return points ** (-self.alpha) / self.c
        if self.alpha == 0:
            return np.full(points.shape, 1.0 / self.c)
        val = INF if x0 == 0 else x0 ** (-self.alpha) / self.c
        return np.full(points.shape, val)

    def sup_inverse_right_limit(self, x0):
        if self.alpha == 0:
            return 1.0 / self.c
        if x0 == 0:
            return 0.0 if self.alpha < 0 else INF
        return x0 ** (-self.alpha) / self.c


@dataclass(frozen=True)
class PiecewiseConstant(Weight):
    """Right-continuous step weight: ``values[j]`` on [breakpoints[j-1], breakpoints[j])."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bk = tuple(float(x) for x in self.breakpoints)
        vals = tuple(float(x) for x in self.values)
        object.__setattr__(self, "breakpoints", bk)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(bk) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if any(not (0.0 < v < INF) for v in vals):
            raise ValueError("weight values must be positive and finite")
        if any(not math.isfinite(x) for x in bk) or any(
            x1 <= x0 for x0, x1 in zip(bk, bk[1:])
        ):
            raise ValueError("breakpoints must be finite and strictly increasing")

    @property
    def _bk(self):
        return np.array(self.breakpoints, dtype=float)

    @property
    def _vals(self):
        return np.array(self.values, dtype=float)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(t)):
            raise DomainError("step weights are evaluated at finite points only")
        out = self._vals[np.searchsorted(self._bk, t, side="right")]
        return float(out) if out.ndim == 0 else out

    def scaled(self, lam):
        return PiecewiseConstant(self.breakpoints, tuple(lam * v for v in self.values))

    def cell_integrals(self, edges, power=1.0):
        edges = np.asarray(edges, dtype=float)
        x0, x1 = edges[:-1], edges[1:]
        bk, vp = self._bk, self._vals ** power
        with np.errstate(invalid="ignore"):
            out = vp[np.searchsorted(bk, x0, side="right")] * (x1 - x0)
            # each breakpoint inside a cell swaps the level for the rest of it
            for k, b in enumerate(bk):
                hit = (x0 < b) & (b < x1)
                if hit.any():
                    out[hit] += (vp[k + 1] - vp[k]) * (x1[hit] - b)
        out[np.isinf(x0) | np.isinf(x1)] = INF
        out[x1 <= x0] = 0.0
        return out

    def sup_inverse(self, x0, points):
        points = np.asarray(points, dtype=float)
        inv = 1.0 / self._vals
        start = int(np.searchsorted(self._bk, x0, side="right"))
        running = np.maximum.accumulate(inv[start:])
        stop = np.searchsorted(self._bk, points, side="left")
        return running[np.clip(stop - start, 0, running.size - 1)]

    def sup_inverse_right_limit(self, x0):
        if x0 == -INF:
            return 1.0 / self.values[0]
        return 1.0 / self.values[int(np.searchsorted(self._bk, x0, side="right"))]


@dataclass(frozen=True)
class Tabulated(Weight):
    """Samples ``values[j]`` at ``nodes[j]``, held constant to the next node.

    Below the first node the first value is used.
    """

    nodes: tuple
    values: tuple
    interpolation: str = "piecewise-constant"
    _step: PiecewiseConstant = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(float(x) for x in self.nodes)
        vals = tuple(float(x) for x in self.values)
        if len(nodes) != len(vals) or not nodes:
            raise ValueError("nodes and values must be nonempty and equally long")
        if self.interpolation != "piecewise-constant":
            raise ValueError("only piecewise-constant interpolation is supported")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_step", PiecewiseConstant(nodes[1:], vals))

    def __call__(self, t):
        return self._step(t)

    def scaled(self, lam):
        return Tabulated(self.nodes, tuple(lam * v for v in self.values))

    def cell_integrals(self, edges, power=1.0):
        return self._step.cell_integrals(edges, power)

    def sup_inverse(self, x0, points):
        return self._step.sup_inverse(x0, points)

    def sup_inverse_right_limit(self, x0):
        return self._step.sup_inverse_right_limit(x0)


WeightLike = Union[Power, PiecewiseConstant, Tabulated]


def eval_weight(w: Weight, t: float) -> float:
    """Evaluate ``w`` at a single point."""
    return float(w(t))


def scale_weight(w: Weight, lam: float) -> Weight:
    if not lam > 0 or not math.isfinite(lam):
        raise ValueError(f"scale factor must be positive, got {lam}")
    if lam == 1:
        return w
    return w.scaled(lam)


@dataclass(frozen=True, eq=False)
class VProfile:
    """V sampled on a grid.

    ``edge_values`` holds V at the window edges and nodes (length n + 2);
    ``values`` is the node part.  At a window edge that coincides with the
    interval endpoint ``a`` the right limit V(a+) is stored.
    """

    grid: object
    edge_values: np.ndarray
    p: float
    v_at_b: float

    @property
    def values(self) -> np.ndarray:
        return self.edge_values[1:-1]

    @property
    def is_infinite(self) -> bool:
        return bool(np.isinf(self.edge_values[1:]).all())


def v_profile(v: Weight, p: float, grid) -> VProfile:
    """V(t) from the weight ``v``: the 1/p'-power of the integral of v^(1-p')
    from ``a`` for p > 1, the running ess sup of 1/v for p = 1."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a, b = grid.interval.a, grid.interval.b
    edges = grid.edges
    v.check_domain(a, b)
    if p == 1.0:
        vals = np.asarray(v.sup_inverse(a, edges), dtype=float)
        if edges[0] == a:
            vals[0] = v.sup_inverse_right_limit(a)
        vals = np.maximum.accumulate(vals)
        v_b = float(v.sup_inverse(a, np.array([b]))[0])
        return VProfile(grid, vals, p, max(v_b, float(vals[-1])))
    pc = p / (p - 1.0)
    beta = 1.0 - pc
    head = v.integral(a, edges[0], beta) if edges[0] > a else 0.0
    if not math.isfinite(head):
        return VProfile(grid, np.full(edges.size, INF), p, INF)
    cells = v.cell_integrals(edges, beta)
    cum = np.empty(edges.size)
    cum[0] = head
    cum[1:] = head + np.cumsum(cells)
    total = cum[-1] + (v.integral(edges[-1], b, beta) if b > edges[-1] else 0.0)
    vals = cum ** (1.0 / pc)
    return VProfile(grid, vals, p, total ** (1.0 / pc))
