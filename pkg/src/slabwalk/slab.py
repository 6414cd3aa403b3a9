"""Integer geometry of periodic slab families in Z^d.

Every predicate comes in two flavours: a scalar one taking a single lattice
point (a sequence of ints) and a ``*_mask`` one taking an ``(N, d)`` integer
array and returning a boolean mask.  Graph enumeration uses the vectorized
forms; the scalar ones are the reference semantics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SlabParams",
    "centered_mod",
    "centered_mod_array",
    "in_slab",
    "in_union_Q",
    "union_Q_mask",
    "shift_vector",
    "in_H",
    "in_F",
    "H_mask",
    "F_mask",
]


@dataclass(frozen=True)
class SlabParams:
    """Period ``l``, half-width ``m``, free dimensions ``s`` in ambient ``Z^d``."""

    l: int
    m: int
    s: int
    d: int

    def __post_init__(self):
        if self.l < 1:
            raise ValueError(f"period must be positive, got l={self.l}")
        if self.m < 0:
            raise ValueError(f"half-width must be non-negative, got m={self.m}")
        if not 2 * self.m < self.l:
            raise ValueError(f"need m < l/2, got l={self.l}, m={self.m}")
        if not 1 <= self.s <= self.d:
            raise ValueError(f"need 1 <= s <= d, got s={self.s}, d={self.d}")


def centered_mod(n: int, l: int) -> int:
    """Residue of ``n`` modulo ``l`` in ``{-floor((l-1)/2), ..., floor(l/2)}``."""
    if l < 1:
        raise ValueError(f"modulus must be positive, got {l}")
    # Python's % is already non-negative for positive l; recenter from there.
    r = n % l
    if r > l // 2:
        r -= l
    return r


def centered_mod_array(n: np.ndarray, l: int) -> np.ndarray:
    if l < 1:
        raise ValueError(f"modulus must be positive, got {l}")
    r = np.mod(n, l)
    return np.where(r > l // 2, r - l, r)


def _check_point(p: Sequence[int], d: int) -> None:
    if len(p) != d:
        raise ValueError(f"point {tuple(p)} has {len(p)} coordinates, expected {d}")


def in_slab(p: Sequence[int], params: SlabParams, i: int) -> bool:
    """True iff the ``i``-th coordinate (1-based) is within ``m`` of a multiple of ``l``."""
    _check_point(p, params.d)
    if not 1 <= i <= params.d:
        raise IndexError(f"axis {i} out of range 1..{params.d}")
    return abs(centered_mod(int(p[i - 1]), params.l)) <= params.m


def in_union_Q(p: Sequence[int], params: SlabParams) -> bool:
    """Membership in the union over (d-s)-subsets of axes of slab intersections.

    A point belongs iff at least ``d - s`` of its coordinates lie in their
    slab; any such set of axes contains a subset of the required size.
    """
    _check_point(p, params.d)
    hits = sum(abs(centered_mod(int(c), params.l)) <= params.m for c in p)
    return hits >= params.d - params.s


def union_Q_mask(pts: np.ndarray, params: SlabParams) -> np.ndarray:
    pts = np.asarray(pts)
    hits = (np.abs(centered_mod_array(pts, params.l)) <= params.m).sum(axis=1)
    return hits >= params.d - params.s


def shift_vector(m: int, s: int, d: int) -> tuple[int, ...]:
    """``(m/2, ..., m/2, 0, ..., 0)`` with ``s`` leading halves."""
    if m % 2:
        raise ValueError(f"shift needs an even scale, got {m}")
    if not 1 <= s < d:
        raise ValueError(f"need 1 <= s < d, got s={s}, d={d}")
    return (m // 2,) * s + (0,) * (d - s)


def _parity_scales(sched, parity: str, k: int, first_scale: int) -> list[int]:
    if parity not in ("even", "odd", "e", "o"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if k > len(sched.a):
        raise ValueError(f"schedule defines {len(sched.a)} scales, asked for k={k}")
    want = 0 if parity in ("even", "e") else 1
    return [j for j in range(max(first_scale, 1), k + 1) if j % 2 == want]


def _scale_params(sched, j: int) -> tuple[SlabParams, tuple[int, ...]]:
    # b_0 = 0 so that the first scale (when included) is a plain lattice of lines
    b_prev = sched.b[j - 2] if j >= 2 else 0
    a_j = sched.a[j - 1]
    return SlabParams(a_j, b_prev, sched.s, sched.d), shift_vector(a_j, sched.s, sched.d)


def in_H(p: Sequence[int], parity: str, k: int, sched, first_scale: int = 2) -> bool:
    """Membership in the intersection of shifted ``Q`` families over scales ``j <= k``
    of the given parity.

    ``first_scale`` is the smallest scale index taken into the intersection;
    the construction starts at 2, passing 1 also lets the seed scale shape the
    odd half.
    """
    _check_point(p, sched.d)
    for j in _parity_scales(sched, parity, k, first_scale):
        params, v = _scale_params(sched, j)
        if not in_union_Q([c - vc for c, vc in zip(p, v)], params):
            return False
    return True


def in_F(p: Sequence[int], parity: str, k: int, sched, first_scale: int = 2) -> bool:
    """``in_H`` clamped to ``|p_i| <= b_k`` on the ``d - s`` non-free axes."""
    if not in_H(p, parity, k, sched, first_scale):
        return False
    bound = sched.b[k - 1] if k >= 1 else 0
    return all(abs(int(c)) <= bound for c in p[sched.s:])


def H_mask(pts: np.ndarray, parity: str, k: int, sched, first_scale: int = 2) -> np.ndarray:
    pts = np.asarray(pts)
    out = np.ones(len(pts), dtype=bool)
    for j in _parity_scales(sched, parity, k, first_scale):
        params, v = _scale_params(sched, j)
        out &= union_Q_mask(pts - np.asarray(v), params)
    return out


def F_mask(pts: np.ndarray, parity: str, k: int, sched, first_scale: int = 2) -> np.ndarray:
    pts = np.asarray(pts)
    bound = sched.b[k - 1] if k >= 1 else 0
    clamp = np.all(np.abs(pts[:, sched.s:]) <= bound, axis=1)
    return H_mask(pts, parity, k, sched, first_scale) & clamp
