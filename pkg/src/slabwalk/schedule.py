"""Inductive scale schedule: periods ``a_k``, prefix sums ``b_k``, constants ``gamma_k``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

__all__ = [
    "ScaleSchedule",
    "ConstantsReport",
    "ScheduleInvariantError",
    "next_scale",
    "gamma_from_constants",
    "seed_schedule",
    "extend_schedule",
    "check_invariants",
    "dump_schedule",
    "load_schedule",
]


class ScheduleInvariantError(RuntimeError):
    """A schedule that violates the construction's constraints."""


@dataclass(frozen=True)
class ScaleSchedule:
    """Immutable snapshot of the induction state.

    ``a[k-1]`` is the period of scale ``k`` and ``b[k-1]`` its prefix sum.
    ``gamma`` and ``t_checkpoints`` are indexed the same way; scale 1 has no
    constants and carries 0 in both.
    """

    a: tuple[int, ...] = ()
    b: tuple[int, ...] = ()
    gamma: tuple[int, ...] = ()
    t_checkpoints: tuple[int, ...] = ()
    d: int = 22
    s: int = 3

    def __len__(self):
        return len(self.a)

    @property
    def v(self) -> tuple[tuple[int, ...], ...]:
        return tuple((aj // 2,) * self.s + (0,) * (self.d - self.s) for aj in self.a)


@dataclass(frozen=True)
class EscapeBounds:
    lower: float
    upper: float


@dataclass(frozen=True)
class ConstantsReport:
    """Constants estimated on the graphs of one induction round."""

    alpha: float
    beta: float
    horizon: int = 0
    epsilon_e: Optional[EscapeBounds] = None
    epsilon_o: Optional[EscapeBounds] = None
    delta: Optional[float] = field(default=None)

    @staticmethod
    def delta_from(eps_e: EscapeBounds, eps_o: EscapeBounds) -> Optional[float]:
        """Half the smaller lower escape bound, or None when that is not positive."""
        d = 0.5 * min(eps_e.lower, eps_o.lower)
        return d if 0.0 < d < 1.0 else None


def next_scale(gamma_k: int, a_prev: int) -> int:
    """Smallest even ``a > 2 gamma_k^4 + 4 a_prev`` with ``a_prev | a/2``.

    The admissible values are exactly the multiples of ``2 a_prev``.
    """
    if gamma_k < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma_k}")
    if a_prev < 1 or a_prev % 2:
        raise ValueError(f"previous scale must be a positive even integer, got {a_prev}")
    bound = 2 * gamma_k**4 + 4 * a_prev
    step = 2 * a_prev
    return (bound // step + 1) * step


def gamma_from_constants(alpha: float, beta: float) -> int:
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ValueError(f"constants must be finite, got alpha={alpha}, beta={beta}")
    if alpha <= 0 or beta <= 0:
        raise ValueError(f"constants must be positive, got alpha={alpha}, beta={beta}")
    return max(1, math.ceil(max(alpha, beta)))


def seed_schedule(d: int = 22, s: int = 3, a_seed: int = 2) -> ScaleSchedule:
    if a_seed < 2 or a_seed % 2:
        raise ValueError(f"seed scale must be a positive even integer, got {a_seed}")
    if not 1 <= s < d:
        raise ValueError(f"need 1 <= s < d, got s={s}, d={d}")
    return ScaleSchedule(a=(a_seed,), b=(a_seed,), gamma=(0,), t_checkpoints=(0,), d=d, s=s)


def extend_schedule(
    sched: ScaleSchedule, report: ConstantsReport, gamma_cap: Optional[int] = None
) -> ScaleSchedule:
    """Append one scale whose period is driven by the round's constants.

    ``gamma_cap`` clamps ``gamma_k`` for desk-scale runs where honest
    estimates would force astronomically large periods.
    """
    if not sched.a:
        raise ValueError("extend_schedule needs a seeded schedule")
    g = gamma_from_constants(report.alpha, report.beta)
    if gamma_cap is not None:
        g = min(g, gamma_cap)
    a_k = next_scale(g, sched.a[-1])
    out = replace(
        sched,
        a=sched.a + (a_k,),
        b=sched.b + (sched.b[-1] + a_k,),
        gamma=sched.gamma + (g,),
        t_checkpoints=sched.t_checkpoints + (g**4,),
    )
    check_invariants(out)
    return out


def check_invariants(sched: ScaleSchedule) -> None:
    n = len(sched.a)
    if not (len(sched.b) == len(sched.gamma) == len(sched.t_checkpoints) == n):
        raise ScheduleInvariantError("schedule fields have mismatched lengths")
    total = 0
    for k, a_k in enumerate(sched.a, start=1):
        if a_k <= 0 or a_k % 2:
            raise ScheduleInvariantError(f"a_{k}={a_k} is not a positive even integer")
        total += a_k
        if sched.b[k - 1] != total:
            raise ScheduleInvariantError(f"b_{k}={sched.b[k - 1]} != prefix sum {total}")
        if k == 1:
            continue
        g, a_prev = sched.gamma[k - 1], sched.a[k - 2]
        if g < 1:
            raise ScheduleInvariantError(f"gamma_{k}={g} is not positive")
        if sched.t_checkpoints[k - 1] != g**4:
            raise ScheduleInvariantError(f"t_{k} != gamma_{k}^4")
        if (a_k // 2) % a_prev:
            raise ScheduleInvariantError(f"a_{k - 1}={a_prev} does not divide a_{k}/2")
        if not a_k > 2 * g**4 + 4 * a_prev:
            raise ScheduleInvariantError(f"a_{k}={a_k} violates the growth bound")


def dump_schedule(sched: ScaleSchedule) -> str:
    """One line per scale: ``k a_k b_k gamma_k t_k`` (0 marks the seed's missing constants)."""
    lines = [
        f"{k} {a} {b} {g} {t}"
        for k, (a, b, g, t) in enumerate(
            zip(sched.a, sched.b, sched.gamma, sched.t_checkpoints), start=1
        )
    ]
    return "".join(line + "\n" for line in lines)


def load_schedule(text_or_path, d: int, s: int) -> ScaleSchedule:
    if isinstance(text_or_path, Path):
        text = text_or_path.read_text()
    else:
        text = text_or_path
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ValueError(f"schedule line {lineno}: expected 5 fields, got {len(fields)}")
        k, *vals = (int(f) for f in fields)
        if k != len(rows) + 1:
            raise ValueError(f"schedule line {lineno}: scale index {k} out of order")
        rows.append(vals)
    if not rows:
        raise ValueError("empty schedule")
    a, b, g, t = (tuple(col) for col in zip(*rows))
    sched = ScaleSchedule(a=a, b=b, gamma=g, t_checkpoints=t, d=d, s=s)
    check_invariants(sched)
    return sched
