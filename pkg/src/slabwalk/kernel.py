"""Exact heat kernels of lazy random walks on finite weighted graphs.

All evolutions push a probability vector forward one step at a time:

    lazy:   v'(u) = v(u)/2 + 1/2 * sum_w v(w) W(w, u) / deg(w)
    simple: v'(u) =              sum_w v(w) W(w, u) / deg(w)

which for a symmetric weight matrix is ``W @ (v / deg)``.  Nothing here
samples; Monte Carlo lives only in the test oracles.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats

from .graph import GraphError, WeightedGraph

__all__ = [
    "KernelSeries",
    "TabooEvolution",
    "EscapeInterval",
    "Decomposition",
    "RatioTable",
    "HorizonError",
    "FirstReturnMismatch",
    "lazy_step",
    "simple_step",
    "kernel_series",
    "heat_kernel_diag",
    "binomial_weights",
    "binomial_lazy",
    "lazy_from_simple",
    "lattice_simple_return",
    "lattice_diag",
    "taboo_kernel",
    "first_return",
    "renewal_first_return",
    "escape_prob",
    "escape_from_series",
    "estimate_alpha",
    "estimate_beta",
    "visit_decomposition",
    "ratio_experiment",
]

# Beyond this many steps double-precision drift is no longer negligible
# against the 1e-12 tolerances used downstream.
STABILITY_BUDGET = 100_000


class HorizonError(RuntimeError):
    def __init__(self, message: str, achievable: Optional[int]):
        super().__init__(message)
        self.achievable = achievable


class FirstReturnMismatch(RuntimeError):
    """Renewal and taboo computations of first-return probabilities disagree."""


@dataclass
class KernelSeries:
    """``values[t]`` for ``t = 0..T``; ``exact_horizon`` is None when the values
    are exact at every ``t`` (untruncated graph)."""

    values: np.ndarray
    exact_horizon: Optional[int]
    semantics: str = "lazy"

    @property
    def T(self) -> int:
        return len(self.values) - 1

    def exact_through(self, t: int) -> bool:
        return self.exact_horizon is None or t <= self.exact_horizon


def _inv_degree(g: WeightedGraph) -> np.ndarray:
    deg = g.degree
    if np.any(deg <= 0):
        raise GraphError(f"{int(np.sum(deg <= 0))} vertices have no neighbours")
    return 1.0 / deg


def lazy_step(g: WeightedGraph, v: np.ndarray, inv_deg: Optional[np.ndarray] = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (g.n,):
        raise ValueError(f"distribution has shape {v.shape}, graph has {g.n} vertices")
    if inv_deg is None:
        inv_deg = _inv_degree(g)
    return 0.5 * v + 0.5 * (g.weights @ (v * inv_deg))


def simple_step(g: WeightedGraph, v: np.ndarray, inv_deg: Optional[np.ndarray] = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (g.n,):
        raise ValueError(f"distribution has shape {v.shape}, graph has {g.n} vertices")
    if inv_deg is None:
        inv_deg = _inv_degree(g)
    return g.weights @ (v * inv_deg)


def _stepper(g: WeightedGraph, semantics: str):
    if semantics not in ("lazy", "simple"):
        raise ValueError(f"unknown walk semantics {semantics!r}")
    inv_deg = _inv_degree(g)
    step = lazy_step if semantics == "lazy" else simple_step
    return lambda v: step(g, v, inv_deg)


def _check_budget(T: int) -> None:
    if T > STABILITY_BUDGET:
        warnings.warn(f"T={T} exceeds the numeric stability budget {STABILITY_BUDGET}", stacklevel=3)


def point_mass(g: WeightedGraph, vertex: int) -> np.ndarray:
    v = np.zeros(g.n)
    v[vertex] = 1.0
    return v


def kernel_series(
    g: WeightedGraph, start: int, T: int, targets: Sequence[int], semantics: str = "lazy"
) -> np.ndarray:
    """``out[t, k] = p(start, targets[k]; t)`` for ``t = 0..T``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    _check_budget(T)
    step = _stepper(g, semantics)
    targets = np.asarray(targets, dtype=np.int64)
    out = np.empty((T + 1, len(targets)))
    v = point_mass(g, start)
    out[0] = v[targets]
    for t in range(1, T + 1):
        v = step(v)
        out[t] = v[targets]
    return out


def heat_kernel_diag(g: WeightedGraph, x: int, T: int, semantics: str = "lazy") -> KernelSeries:
    values = kernel_series(g, x, T, [x], semantics)[:, 0]
    return KernelSeries(values, g.exact_horizon(x), semantics)


def binomial_weights(t: int) -> np.ndarray:
    """``C(t, i) 2^-t`` for ``i = 0..t``, each term to full relative precision."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return stats.binom.pmf(np.arange(t + 1), t, 0.5)


def binomial_lazy(q_series, t: int) -> float:
    """Lazy return probability at time ``t`` from the simple-walk series:
    ``sum_i q(i) C(t, i) 2^-t``."""
    q = q_series.values if isinstance(q_series, KernelSeries) else np.asarray(q_series)
    if isinstance(q_series, KernelSeries) and q_series.semantics != "simple":
        raise ValueError("binomial_lazy needs a simple-walk series")
    if len(q) <= t:
        raise ValueError(f"series has {len(q)} values, need t={t}")
    # all terms are non-negative, so a plain dot product loses nothing to cancellation
    return float(np.dot(q[: t + 1], binomial_weights(t)))


def lazy_from_simple(q: KernelSeries) -> KernelSeries:
    values = np.array([binomial_lazy(q, t) for t in range(q.T + 1)])
    return KernelSeries(values, q.exact_horizon, "lazy")


def lattice_simple_return(d: int, T: int) -> np.ndarray:
    """Return probabilities of simple random walk on the infinite lattice Z^d.

    One coordinate at a time: the number of steps spent on the new axis is
    binomial, and each axis contributes the 1-d return probability
    ``C(n, n/2) 2^-n``.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    n = np.arange(T + 1)
    u = np.where(n % 2 == 0, stats.binom.pmf(n // 2, n, 0.5), 0.0)
    q = u.copy()
    for j in range(1, d):
        p_new = 1.0 / (j + 1)
        nxt = np.empty(T + 1)
        for k in range(T + 1):
            w = stats.binom.pmf(np.arange(k + 1), k, p_new)
            nxt[k] = np.dot(w * u[: k + 1], q[k::-1])
        q = nxt
    return q


def lattice_diag(d: int, T: int) -> KernelSeries:
    """Lazy-walk diagonal ``p(0, 0; t)`` on the infinite lattice Z^d, exact for every ``t``."""
    q = KernelSeries(lattice_simple_return(d, T), None, "simple")
    return lazy_from_simple(q)


@dataclass
class TabooEvolution:
    """Walk killed on entering ``taboo``.

    ``survival[t]`` is the total surviving mass at time t, ``absorbed[t]``
    the mass removed at step t, ``final`` the surviving distribution at T.
    """

    final: np.ndarray
    survival: np.ndarray
    absorbed: np.ndarray


def taboo_kernel(g: WeightedGraph, start: int, taboo: int, T: int) -> TabooEvolution:
    if start == taboo:
        raise ValueError("start vertex coincides with the taboo vertex")
    _check_budget(T)
    step = _stepper(g, "lazy")
    v = point_mass(g, start)
    survival = np.empty(T + 1)
    absorbed = np.zeros(T + 1)
    survival[0] = 1.0
    for t in range(1, T + 1):
        v = step(v)
        absorbed[t] = v[taboo]
        v[taboo] = 0.0
        survival[t] = math.fsum(v)
    return TabooEvolution(v, survival, absorbed)


def renewal_first_return(p) -> np.ndarray:
    """First-return series from a diagonal series by deconvolving
    ``p(t) = sum_{s=1}^{t} f(s) p(t-s)``."""
    p = p.values if isinstance(p, KernelSeries) else np.asarray(p, dtype=float)
    T = len(p) - 1
    f = np.zeros(T + 1)
    for t in range(1, T + 1):
        f[t] = p[t] - np.dot(f[1:t], p[t - 1:0:-1])
    return f


def first_return(g: WeightedGraph, x: int, T: int, tol: float = 1e-10) -> np.ndarray:
    """``f[t]`` = probability the lazy walk from ``x`` is back at ``x`` for the
    first time at ``t`` (a lazy stay at t=1 counts).

    Computed by renewal deconvolution and by taboo absorption; the two must
    agree to ``tol``.
    """
    if T < 1:
        raise ValueError("first_return needs T >= 1")
    p = heat_kernel_diag(g, x, T)
    f_renewal = renewal_first_return(p)

    step = _stepper(g, "lazy")
    f_taboo = np.zeros(T + 1)
    v = point_mass(g, x)
    for t in range(1, T + 1):
        v = step(v)
        f_taboo[t] = v[x]
        v[x] = 0.0
    gap = float(np.max(np.abs(f_renewal - f_taboo)))
    if gap > tol:
        raise FirstReturnMismatch(f"renewal and taboo first-return series differ by {gap:.3e}")
    return f_taboo


@dataclass
class EscapeInterval:
    """Bracket for the probability of never returning to the start.

    ``upper`` is ``1 - sum_{t<=T} f(t)``; ``lower`` subtracts a tail bound
    ``C * sum_{t>T} t^(-d_eff/2)`` from the fitted upper kernel constant.
    ``point`` corrects ``upper`` by the asymptotic tail ``eps^2 * tail``.
    """

    lower: float
    upper: float
    point: float
    tail: float
    horizon: int
    reliable: bool

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def escape_from_series(p: KernelSeries, f: np.ndarray, d_eff: float) -> EscapeInterval:
    from .verify import check_delmotte

    T = p.T
    upper = max(0.0, 1.0 - math.fsum(f[1:T + 1]))
    if d_eff > 2:
        fit = check_delmotte(p, d_eff, window=(max(1, (T + 1) // 2), T))
        tail = fit.C_upper * float(special.zeta(d_eff / 2, T + 1))
    else:
        tail = math.inf
    reliable = tail <= 1.0
    if not reliable:
        warnings.warn(f"escape tail bound {tail:.3g} exceeds 1; horizon T={T} too small", stacklevel=2)
    lower = max(0.0, upper - tail)
    point = min(upper, max(lower, upper - upper**2 * tail))
    return EscapeInterval(lower, upper, point, tail, T, reliable)


def escape_prob(g: WeightedGraph, x: int, T: int, d_eff: float) -> EscapeInterval:
    p = heat_kernel_diag(g, x, T)
    if not p.exact_through(T):
        raise HorizonError(f"escape horizon T={T} exceeds the exact horizon {p.exact_horizon}", p.exact_horizon)
    return escape_from_series(p, first_return(g, x, T), d_eff)


def estimate_alpha(series: KernelSeries, d_eff: float) -> float:
    """``max_{1<=t<=T} p(t) t^(d_eff/2)``."""
    if series.T < 1:
        raise ValueError("empty window")
    if not series.exact_through(series.T):
        raise HorizonError(f"series runs past its exact horizon {series.exact_horizon}", series.exact_horizon)
    t = np.arange(1, series.T + 1, dtype=float)
    return float(np.max(series.values[1:] * t ** (d_eff / 2)))


def estimate_beta(f, s_eff: float) -> float:
    """``max_{1<=t<=T} 1 / (f(t) t^(s_eff/2))``."""
    f = np.asarray(f, dtype=float)
    if len(f) < 2:
        raise ValueError("empty window")
    if np.any(f[1:] <= 0):
        bad = int(np.flatnonzero(f[1:] <= 0)[0]) + 1
        raise ValueError(f"first-return probability vanishes at t={bad}")
    t = np.arange(1, len(f), dtype=float)
    return float(np.max(1.0 / (f[1:] * t ** (s_eff / 2))))


def step_n(step, v, n):
    for _ in range(n):
        v = step(v)
    return v


@dataclass(frozen=True)
class Decomposition:
    """Split of ``p(y, y; t)`` by visits to ``x`` near the two ends of the walk.

    p1: no visit to x in times 0..gamma; p2: none in t-gamma..t-1;
    p12: neither; p3 = p_yy - p1 - p2 + p12 (visits near both ends).
    """

    t: int
    p1: float
    p2: float
    p3: float
    p12: float
    p_yy: float


def visit_decomposition(g: WeightedGraph, x: int, y: int, t: int, gamma: int) -> Decomposition:
    if x == y:
        raise ValueError("x and y must differ")
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if not 2 * gamma < t:
        raise ValueError(f"need gamma < t/2, got gamma={gamma}, t={t}")
    step = _stepper(g, "lazy")

    def run(v, n, kill):
        for _ in range(n):
            v = step(v)
            if kill:
                v[x] = 0.0
        return v

    def late_avoid(v):
        # times t-gamma .. t-1 avoid x, then the final step lands at time t
        v = v.copy()
        v[x] = 0.0
        v = run(v, gamma - 1, kill=True)
        return step(v)[y]

    start = point_mass(g, y)
    free = run(start, t - gamma, kill=False)
    p_yy = float(step_n(step, free, gamma)[y])
    early = run(start, gamma, kill=True)
    p1 = float(step_n(step, early, t - gamma)[y])
    p2 = float(late_avoid(free))
    p12 = float(late_avoid(step_n(step, early, t - 2 * gamma)))
    return Decomposition(t, p1, p2, p_yy - p1 - p2 + p12, p12, p_yy)


@dataclass
class RatioTable:
    t: np.ndarray
    p_xx: np.ndarray
    p_yy: np.ndarray
    approximate: np.ndarray
    horizon: Optional[int]

    @property
    def ratio(self) -> np.ndarray:
        return self.p_xx / self.p_yy

    def __len__(self):
        return len(self.t)


def ratio_experiment(
    g: WeightedGraph, x: int, y: int, T: int, allow_approximate: bool = False
) -> RatioTable:
    """Diagonal kernels at ``x`` and ``y`` side by side for ``t = 0..T``."""
    hx, hy = g.exact_horizon(x), g.exact_horizon(y)
    known = [h for h in (hx, hy) if h is not None]
    horizon = min(known) if known else None
    if horizon is not None and horizon < T and not allow_approximate:
        raise HorizonError(f"exact horizon {horizon} is short of T={T}", horizon)
    p_xx = kernel_series(g, x, T, [x])[:, 0]
    p_yy = kernel_series(g, y, T, [y])[:, 0]
    t = np.arange(T + 1)
    approx = np.zeros(T + 1, dtype=bool) if horizon is None else t > horizon
    return RatioTable(t, p_xx, p_yy, approx, horizon)
