"""Grids, composite trapezoid quadrature, the discrete Hardy transform and
Stieltjes sums against the monotone measure d[-V^{-s}].

A grid carries ``n`` interior nodes plus the two window edges ``trunc_lo`` and
``trunc_hi``.  Integrals run over the whole window: the end cells between an
edge and its nearest node hold the function constant (in the native variable
of the spacing), everything in between is trapezoidal.  Logarithmic grids
integrate in ``u = log t`` with the Jacobian ``t`` folded into the
coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .weights import INF, Interval, VProfile

DEFAULT_TRUNC_LO = 1e-6
DEFAULT_TRUNC_HI = 1e6
SPACINGS = ("linear", "log")


@dataclass(frozen=True, eq=False)
class Grid:
    interval: Interval
    nodes: np.ndarray
    spacing: str
    trunc_lo: float
    trunc_hi: float

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if self.spacing not in SPACINGS:
            raise ValueError(f"unknown spacing {self.spacing!r}")
        if nodes.size < 3:
            raise ValueError("a grid needs at least 3 nodes")
        if not (self.interval.a <= self.trunc_lo < nodes[0]
                and nodes[-1] < self.trunc_hi <= self.interval.b):
            raise ValueError("nodes must lie inside (trunc_lo, trunc_hi) within the interval")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")

    @property
    def n(self) -> int:
        return int(self.nodes.size)

    @cached_property
    def edges(self) -> np.ndarray:
        """Window edges and nodes: (trunc_lo, t_1, ..., t_n, trunc_hi)."""
        return np.concatenate(([self.trunc_lo], self.nodes, [self.trunc_hi]))

    @cached_property
    def _coefficients(self):
        e = self.edges
        if self.spacing == "linear":
            h = np.diff(e)
            mid = h[1:-1] / 2.0
            return float(h[0]), mid, mid.copy(), float(h[-1])
        du = np.log(e[1:] / e[:-1])
        t = self.nodes
        return (float(t[0] * du[0]), t[:-1] * du[1:-1] / 2.0,
                t[1:] * du[1:-1] / 2.0, float(t[-1] * du[-1]))

    @property
    def head(self) -> float:
        return self._coefficients[0]

    @property
    def cl(self) -> np.ndarray:
        return self._coefficients[1]

    @property
    def cr(self) -> np.ndarray:
        return self._coefficients[2]

    @property
    def tail(self) -> float:
        return self._coefficients[3]

    @cached_property
    def cell_weights(self) -> np.ndarray:
        head, cl, cr, tail = self._coefficients
        w = np.zeros(self.n)
        w[:-1] += cl
        w[1:] += cr
        w[0] += head
        w[-1] += tail
        return w

    @cached_property
    def dual_edges(self) -> np.ndarray:
        """Boundaries of the node-centred dual cells, from trunc_lo to trunc_hi."""
        t = self.nodes
        mids = (t[:-1] + t[1:]) / 2.0 if self.spacing == "linear" else np.sqrt(t[:-1] * t[1:])
        return np.concatenate(([self.trunc_lo], mids, [self.trunc_hi]))


def default_spacing(interval: Interval) -> str:
    a, b = interval.a, interval.b
    return "log" if a >= 0 and (a == 0 or b == INF) else "linear"


def make_grid(interval: Interval, n: int, spacing: str = "auto",
              trunc_lo: float | None = None, trunc_hi: float | None = None) -> Grid:
    """Grid of ``n`` nodes placed at k/(n+1), k = 1..n, of the window
    (uniformly in t or in log t)."""
    if n < 3:
        raise ValueError("a grid needs at least 3 nodes")
    if spacing == "auto":
        spacing = default_spacing(interval)
    if spacing not in SPACINGS:
        raise ValueError(f"unknown spacing {spacing!r}")
    a, b = interval.a, interval.b
    if trunc_lo is None:
        if a == -INF:
            trunc_lo = -DEFAULT_TRUNC_HI
        elif spacing == "log" and a == 0:
            trunc_lo = DEFAULT_TRUNC_LO
        else:
            trunc_lo = a
    if trunc_hi is None:
        trunc_hi = DEFAULT_TRUNC_HI if b == INF else b
    trunc_lo, trunc_hi = float(trunc_lo), float(trunc_hi)
    if not (math.isfinite(trunc_lo) and math.isfinite(trunc_hi)):
        raise ValueError("truncation window must be finite")
    if not trunc_lo < trunc_hi:
        raise ValueError(f"need trunc_lo < trunc_hi, got {trunc_lo} >= {trunc_hi}")
    if trunc_lo < a or trunc_hi > b:
        raise ValueError("truncation window must lie inside the interval")
    frac = np.arange(1, n + 1) / (n + 1)
    if spacing == "log":
        if trunc_lo <= 0:
            raise ValueError("logarithmic spacing needs trunc_lo > 0")
        lo, hi = math.log(trunc_lo), math.log(trunc_hi)
        nodes = np.exp(lo + (hi - lo) * frac)
    else:
        nodes = trunc_lo + (trunc_hi - trunc_lo) * frac
    return Grid(interval, nodes, spacing, trunc_lo, trunc_hi)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        if np.any(np.isnan(vals)) or np.any(vals < 0):
            raise ValueError("sampled functions must be nonnegative")
        object.__setattr__(self, "values", vals)


def _edge_range(grid: Grid, start, stop):
    n = grid.n
    for idx in (start, stop):
        if idx is not None and not (0 <= idx < n):
            raise ValueError(f"node index {idx} outside 0..{n - 1}")
    s = 0 if start is None else start + 1
    e = n + 1 if stop is None else stop + 1
    if s > e:
        raise ValueError("start index must not exceed stop index")
    return s, e


def _cell_contributions(f: SampledFunction):
    g = f.grid
    v = f.values
    with np.errstate(invalid="ignore"):
        inner_l = g.cl * v[:-1]
        inner_r = g.cr * v[1:]
    cells = np.concatenate(([g.head * v[0]], inner_l + inner_r, [g.tail * v[-1]]))
    gap = np.abs(inner_r - inner_l)
    width = g.cl + g.cr
    err = np.concatenate(([gap[0] * g.head / width[0]], gap, [gap[-1] * g.tail / width[-1]]))
    return cells, err


def integrate_with_error(f: SampledFunction, start: int | None = None,
                         stop: int | None = None) -> tuple[float, float]:
    """Trapezoid integral between two nodes (``None`` = window edge) and half
    the upper-minus-lower Darboux gap as an error estimate."""
    s, e = _edge_range(f.grid, start, stop)
    cells, err = _cell_contributions(f)
    return float(np.sum(cells[s:e])), float(np.sum(err[s:e]))


def integrate(f: SampledFunction, start: int | None = None, stop: int | None = None) -> float:
    return integrate_with_error(f, start, stop)[0]


def cumulative_integral(f: SampledFunction) -> SampledFunction:
    """F(t_i) = integral of f from trunc_lo to t_i: the discrete Hardy transform."""
    g = f.grid
    return SampledFunction(g, kernels.hardy_apply(f.values, g.head, g.cl, g.cr))


def _stieltjes_cells(g: SampledFunction, V: VProfile, s: float, start, stop):
    if V.grid is not g.grid:
        raise ValueError("g and V must live on the same grid")
    lo, hi = _edge_range(g.grid, start, stop)
    with np.errstate(divide="ignore"):
        M = V.edge_values ** (-s)
    gv = g.values
    ge = np.concatenate(([gv[0]], gv, [gv[-1]]))
    left, right = ge[lo:hi], ge[lo + 1:hi + 1]
    m0, m1 = M[lo:hi], M[lo + 1:hi + 1]
    singular = np.isinf(m0)
    with np.errstate(invalid="ignore"):
        mass = np.where(singular, 0.0, m0 - m1)
    return left, right, mass, singular, m0, m1


def stieltjes_bounds(g: SampledFunction, V: VProfile, s: float,
                     start: int | None = None, stop: int | None = None):
    """Lower (left value) and upper (right value) sums of g d[-V^{-s}], plus
    the head term of cells where V vanishes at the left end."""
    left, right, mass, singular, m0, m1 = _stieltjes_cells(g, V, s, start, stop)
    pos = mass > 0
    lower = float(np.sum(left[pos] * mass[pos]))
    upper = float(np.sum(right[pos] * mass[pos]))
    head = INF if np.any(singular & (right > 0)) else 0.0
    return lower, upper, head


def stieltjes_vmeasure(g: SampledFunction, V: VProfile, s: float,
                       start: int | None = None, stop: int | None = None) -> float:
    """Integral of g against d[-V^{-s}] over the node range, cell by cell as
    the mean of g at the cell ends times the telescoping mass
    V(t_i)^{-s} - V(t_{i+1})^{-s}.  Cells where V vanishes are skipped."""
    left, right, mass, _, _, _ = _stieltjes_cells(g, V, s, start, stop)
    pos = mass > 0
    return float(np.sum(0.5 * (left[pos] + right[pos]) * mass[pos]))
