"""Numerical checks of the heat-kernel estimates the construction relies on."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import WeightedGraph
from .kernel import HorizonError, KernelSeries, RatioTable

__all__ = [
    "BoundFit",
    "CheckResult",
    "NkResult",
    "check_delmotte",
    "check_volume_doubling",
    "check_poincare",
    "poincare_ratio",
    "check_lazy_smoothing",
    "smoothing_stability",
    "check_nk",
    "format_report",
]

SMOOTHING_EXP_CONSTANT = 1 / 8
SMOOTHING_MIN_T = 16


@dataclass(frozen=True)
class BoundFit:
    """Smallest and largest value of a scaled quantity over a window."""

    c_lower: float
    C_upper: float
    window: tuple[int, int]
    quantity: str

    @property
    def spread(self) -> float:
        return self.C_upper / self.c_lower if self.c_lower > 0 else math.inf


@dataclass(frozen=True)
class CheckResult:
    name: str
    window: str
    value: float
    threshold: float
    passed: bool

    def line(self) -> str:
        return f"{self.name} {self.window} {self.value:.6g} {self.threshold:.6g} {'PASS' if self.passed else 'FAIL'}"


def format_report(results: Iterable[CheckResult]) -> str:
    return "".join(r.line() + "\n" for r in results)


def check_delmotte(series: KernelSeries, d_eff: float, window: Optional[tuple[int, int]] = None) -> BoundFit:
    """Range of ``p(t) t^(d_eff/2)`` over ``window`` (inclusive, default ``[1, T]``)."""
    lo, hi = window if window is not None else (1, series.T)
    lo = max(lo, 0 if d_eff == 0 else 1)
    if hi > series.T or lo > hi:
        raise ValueError(f"window [{lo}, {hi}] is empty or outside the series (T={series.T})")
    if not series.exact_through(hi):
        raise HorizonError(f"window end {hi} is past the exact horizon {series.exact_horizon}", series.exact_horizon)
    t = np.arange(lo, hi + 1, dtype=float)
    scaled = series.values[lo:hi + 1] * t ** (d_eff / 2)
    return BoundFit(float(scaled.min()), float(scaled.max()), (lo, hi), f"p*t^{d_eff / 2:g}")


def _ball_volumes(g: WeightedGraph, x: int) -> tuple[np.ndarray, np.ndarray]:
    dist = g.distances(x)
    reach = dist >= 0
    vol = np.bincount(dist[reach], weights=g.degree[reach])
    return dist, np.cumsum(vol)


def check_volume_doubling(
    g: WeightedGraph, x: int, r_max: int, radii: Optional[Sequence[int]] = None
) -> BoundFit:
    """Range of ``|B(x, 2r)| / |B(x, r)|`` over the radii, volumes weighted by degree."""
    radii = list(range(1, r_max + 1)) if radii is None else sorted(radii)
    if not radii:
        raise ValueError("no radii to check")
    r_top = max(radii)
    horizon = g.exact_horizon(x)
    # every vertex of B(x, 2r) must carry its full-lattice degree
    if horizon is not None and 2 * r_top > horizon:
        raise HorizonError(f"ball radius {2 * r_top} reaches the truncation boundary", horizon)
    _, cum = _ball_volumes(g, x)

    def vol(r):
        return cum[min(r, len(cum) - 1)]

    ratios = [vol(2 * r) / vol(r) for r in radii]
    return BoundFit(float(min(ratios)), float(max(ratios)), (radii[0], r_top), "|B(2r)|/|B(r)|")


class _Balls:
    """Vertex masks and internal edges of ``B(x, r)`` and ``B(x, 2r)``."""

    def __init__(self, g: WeightedGraph, x: int, r: int, dist: Optional[np.ndarray] = None):
        if dist is None:
            dist = g.distances(x)
        self.r = r
        self.small = (dist >= 0) & (dist <= r)
        self.big = (dist >= 0) & (dist <= 2 * r)
        self.deg = g.degree[self.small]
        coo = g.weights.tocoo()
        inside = self.big[coo.row] & self.big[coo.col] & (coo.row < coo.col)
        self.row, self.col, self.w = coo.row[inside], coo.col[inside], coo.data[inside]

    def ratio(self, f: np.ndarray) -> float:
        fs = f[self.small]
        mean = np.dot(self.deg, fs) / self.deg.sum()
        num = float(np.dot(self.deg, (fs - mean) ** 2))
        diff = f[self.row] - f[self.col]
        den = self.r * self.r * float(np.dot(self.w, diff * diff))
        if den <= 1e-300:
            return math.nan
        return num / den


def poincare_ratio(g: WeightedGraph, x: int, r: int, f: np.ndarray) -> float:
    """Variance of ``f`` on ``B(x, r)`` over ``r^2`` times its Dirichlet energy on ``B(x, 2r)``.

    ``f`` is indexed by graph vertex; only values on the big ball matter.
    The variance is degree-weighted around the degree-weighted mean; edges
    enter the energy with their weights.  Returns nan when the energy vanishes.
    """
    return _Balls(g, x, r).ratio(np.asarray(f, dtype=float))


def _power_probes(g: WeightedGraph, big: np.ndarray, n_iter: int, rng: np.random.Generator) -> list[np.ndarray]:
    idx = np.flatnonzero(big)
    sub = g.weights[idx][:, idx]
    deg = np.asarray(sub.sum(axis=1)).ravel()
    deg[deg == 0] = 1.0
    inv = 1.0 / deg
    h = rng.standard_normal(len(idx))
    probes = []
    for _ in range(n_iter):
        h = 0.5 * h + 0.5 * inv * (sub @ h)
        h -= np.dot(deg, h) / deg.sum()
        norm = np.linalg.norm(h)
        if norm == 0:
            break
        h /= norm
        full = np.zeros(g.n)
        full[idx] = h
        probes.append(full)
    return probes


def check_poincare(
    g: WeightedGraph,
    x: int,
    r: int,
    probes: Optional[Sequence[np.ndarray]] = None,
    n_random: int = 32,
    n_power: int = 8,
    seed: int = 0,
) -> float:
    """Largest Poincaré ratio over a probe family (a lower bound on the optimal constant).

    Default probes: coordinate projections, ``n_random`` seeded Gaussian
    functions and ``n_power`` iterates of lazy diffusion on the big ball.
    """
    horizon = g.exact_horizon(x)
    if horizon is not None and 2 * r > horizon:
        raise HorizonError(f"ball radius {2 * r} reaches the truncation boundary", horizon)
    balls = _Balls(g, x, r)
    if probes is None:
        rng = np.random.default_rng(seed)
        probes = [g.coords[:, i].astype(float) for i in range(g.d)]
        probes += [rng.standard_normal(g.n) for _ in range(n_random)]
        probes += _power_probes(g, balls.big, n_power, rng)
    values = [balls.ratio(np.asarray(f, dtype=float)) for f in probes]
    values = [v for v in values if not math.isnan(v)]
    if not values:
        warnings.warn(f"every probe is constant on B(x, {2 * r}); Poincare ratio undefined", stacklevel=2)
        return math.nan
    return max(values)


def check_lazy_smoothing(series: KernelSeries, t: int, s: Optional[int] = None, c: float = SMOOTHING_EXP_CONSTANT) -> float:
    """Smallest ``C`` with
    ``|p(t) - p(s)| <= C (|t-s| log^3 t / sqrt t) p(t) + C exp(-c log^2 t)``.

    With ``s`` omitted, the worst ``s`` over ``|t - s| <= sqrt(t)`` within
    the series is used.
    """
    if t < 2:
        raise ValueError("t must be at least 2")
    span = math.isqrt(t)
    if s is None:
        candidates = [u for u in range(t - span, t + span + 1) if 0 <= u <= series.T]
    else:
        if abs(t - s) > math.sqrt(t):
            raise ValueError(f"need |t - s| <= sqrt(t), got t={t}, s={s}")
        candidates = [s]
    for u in candidates + [t]:
        if u > series.T or not series.exact_through(u):
            raise HorizonError(f"time {u} is outside the exact series", series.exact_horizon)
    p = series.values
    log_t = math.log(t)
    floor = math.exp(-c * log_t**2)
    best = 0.0
    for u in candidates:
        lhs = abs(p[t] - p[u])
        if lhs == 0.0:
            continue
        rhs_unit = abs(t - u) * log_t**3 / math.sqrt(t) * p[t] + floor
        best = max(best, lhs / rhs_unit)
    return best


def smoothing_stability(series: KernelSeries, times: Sequence[int], factor: float = 2.0) -> tuple[dict, float, bool]:
    """Fitted constants at each judged time and the worst ratio between
    neighbouring times.  Times below ``SMOOTHING_MIN_T`` are fitted but not judged."""
    fits = {t: check_lazy_smoothing(series, t) for t in times}
    judged = [fits[t] for t in sorted(times) if t >= SMOOTHING_MIN_T]
    worst = 1.0
    for a, b in zip(judged, judged[1:]):
        if a == 0 or b == 0:
            worst = math.inf if a != b else worst
            continue
        worst = max(worst, a / b, b / a)
    finite = all(math.isfinite(v) for v in judged)
    return fits, worst, finite and worst <= factor


@dataclass(frozen=True)
class NkResult:
    k: int
    t: int
    ratio: float
    required: str
    passed: bool


def check_nk(table: RatioTable, schedule, factor: float = 3.0) -> list[NkResult]:
    """At even checkpoints require ``ratio >= factor``, at odd ones ``ratio <= 1/factor``."""
    out = []
    for k in range(2, len(schedule.t_checkpoints) + 1):
        t_k = schedule.t_checkpoints[k - 1]
        if t_k >= len(table) or table.approximate[t_k]:
            raise HorizonError(f"checkpoint t_{k}={t_k} is not covered exactly", table.horizon)
        ratio = float(table.ratio[t_k])
        if k % 2 == 0:
            out.append(NkResult(k, t_k, ratio, f">={factor:g}", ratio >= factor))
        else:
            out.append(NkResult(k, t_k, ratio, f"<={1 / factor:g}", ratio <= 1 / factor))
    return out
