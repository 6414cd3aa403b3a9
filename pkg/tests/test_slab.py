import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import literal_cmod, literal_H, literal_union_Q
from slabwalk.schedule import ScaleSchedule
from slabwalk.slab import (
    F_mask,
    H_mask,
    SlabParams,
    centered_mod,
    centered_mod_array,
    in_F,
    in_H,
    in_slab,
    in_union_Q,
    shift_vector,
    union_Q_mask,
)


def sched_of(a, d, s):
    b = tuple(itertools.accumulate(a))
    return ScaleSchedule(a=tuple(a), b=b, gamma=(0,) * len(a), t_checkpoints=(0,) * len(a), d=d, s=s)


@pytest.mark.parametrize("n, l, expected", [(5, 4, 1), (2, 4, 2), (-2, 4, 2), (3, 4, -1), (0, 1, 0), (7, 7, 0)])
def test_centered_mod_examples(n, l, expected):
    assert centered_mod(n, l) == expected


def test_centered_mod_matches_literal_residue():
    for l in range(1, 13):
        for n in range(-40, 41):
            assert centered_mod(n, l) == literal_cmod(n, l)


@settings(max_examples=500)
@given(st.integers(-10**6, 10**6), st.integers(1, 10**3))
def test_centered_mod_range_and_congruence(n, l):
    r = centered_mod(n, l)
    assert (n - r) % l == 0
    assert -((l - 1) // 2) <= r <= l // 2


def test_centered_mod_array_agrees_with_scalar():
    n = np.arange(-300, 301)
    for l in (1, 2, 5, 12):
        assert list(centered_mod_array(n, l)) == [centered_mod(int(k), l) for k in n]


def test_centered_mod_rejects_bad_modulus():
    with pytest.raises(ValueError):
        centered_mod(3, 0)


def test_in_slab_examples():
    assert in_slab((0, 0), SlabParams(4, 0, 1, 2), 1)
    assert in_slab((0, 0, 0), SlabParams(10, 3, 1, 3), 3)
    assert not in_slab((1, 1), SlabParams(4, 0, 1, 2), 1)
    assert in_slab((4, 2), SlabParams(4, 0, 1, 2), 1)
    with pytest.raises(IndexError):
        in_slab((0, 0), SlabParams(4, 0, 1, 2), 3)


def test_slab_params_invariants():
    with pytest.raises(ValueError):
        SlabParams(4, 2, 1, 2)  # m must stay below l/2
    with pytest.raises(ValueError):
        SlabParams(4, 1, 3, 2)


def test_in_union_Q_examples():
    assert in_union_Q((0, 1), SlabParams(4, 0, 1, 2))
    assert not in_union_Q((1, 1), SlabParams(4, 0, 1, 2))
    for p in itertools.product(range(-3, 4), repeat=3):
        assert in_union_Q(p, SlabParams(4, 1, 3, 3))


@pytest.mark.parametrize("l, m, s, d", [(4, 0, 1, 2), (6, 1, 1, 3), (6, 2, 2, 3), (8, 1, 1, 4), (12, 2, 2, 4)])
def test_in_union_Q_matches_subset_definition(l, m, s, d):
    params = SlabParams(l, m, s, d)
    pts = list(itertools.product(range(-l, l + 1), repeat=d))
    mask = union_Q_mask(np.array(pts), params)
    for p, hit in zip(pts, mask):
        want = literal_union_Q(p, l, m, s, d)
        assert in_union_Q(p, params) == want
        assert bool(hit) == want


points = st.lists(st.integers(-50, 50), min_size=4, max_size=4)


@given(points, st.integers(0, 3), st.sampled_from([(8, 1), (10, 2), (12, 5)]), st.integers(1, 3))
def test_in_union_Q_periodic(p, axis, lm, s):
    l, m = lm
    params = SlabParams(l, m, s, 4)
    q = list(p)
    q[axis] += l
    assert in_union_Q(p, params) == in_union_Q(q, params)


@given(points, st.permutations(range(4)), st.integers(1, 3))
def test_in_union_Q_permutation_invariant(p, perm, s):
    params = SlabParams(10, 2, s, 4)
    assert in_union_Q(p, params) == in_union_Q([p[i] for i in perm], params)


@given(points, st.integers(0, 3), st.integers(1, 3))
def test_in_union_Q_monotone_in_width(p, m, s):
    narrow, wide = SlabParams(10, m, s, 4), SlabParams(10, m + 1, s, 4)
    if in_union_Q(p, narrow):
        assert in_union_Q(p, wide)


def test_shift_vector_examples():
    assert shift_vector(12, 1, 2) == (6, 0)
    assert shift_vector(2, 3, 22) == (1, 1, 1) + (0,) * 19
    assert shift_vector(0, 3, 5) == (0,) * 5
    with pytest.raises(ValueError):
        shift_vector(3, 1, 2)


def test_in_H_examples():
    sched = sched_of((2, 12), 2, 1)
    for parity in ("even", "odd"):
        assert in_H((0, 0), parity, 2, sched)
    assert in_H((6, 0), "even", 2, sched)
    # p - v(12) = (0, 0) lies in Q_{12, 2}; confirm with the subset oracle
    assert literal_union_Q((0, 0), 12, 2, 1, 2)
    assert in_H((5, 5), "even", 1, sched) and in_H((5, 5), "odd", 1, sched)
    with pytest.raises(ValueError):
        in_H((0, 0), "even", 3, sched)


def test_in_F_examples():
    sched = sched_of((2, 12), 2, 1)
    assert in_F((0, 0), "even", 2, sched)
    assert not in_F((0, 3), "odd", 1, sched)
    assert in_F((100, 2), "odd", 1, sched)


def test_origin_sits_in_one_slab_after_shift():
    sched = sched_of((2, 12, 72), 3, 1)
    for k in (1, 2, 3):
        for parity in ("even", "odd"):
            assert in_H((0, 0, 0), parity, k, sched)
            assert in_F((0, 0, 0), parity, k, sched)


@pytest.mark.parametrize("first_scale", [1, 2])
@pytest.mark.parametrize("d, s, a", [(2, 1, (2, 12)), (2, 1, (2, 12, 72)), (3, 1, (2, 12)), (3, 2, (2, 12))])
def test_H_and_F_masks_match_literal(d, s, a, first_scale):
    sched = sched_of(a, d, s)
    k = len(a)
    radius = 14 if d == 2 else 7
    pts = np.array(list(itertools.product(range(-radius, radius + 1), repeat=d)))
    for parity in ("even", "odd"):
        h = H_mask(pts, parity, k, sched, first_scale)
        f = F_mask(pts, parity, k, sched, first_scale)
        for p, hit, fhit in zip(map(tuple, pts), h, f):
            want = literal_H(p, parity, k, sched.a, sched.b, s, d, first_scale)
            assert bool(hit) == want == in_H(p, parity, k, sched, first_scale)
            want_f = want and all(abs(c) <= sched.b[k - 1] for c in p[s:])
            assert bool(fhit) == want_f == in_F(p, parity, k, sched, first_scale)
            if fhit:
                assert hit


def test_last_scale_near_origin_is_the_clamped_graph():
    # Away from the shifted slab (|p_1 - a_k/2| <= b_{k-1}), adding scale k of
    # the same parity only clamps the non-free axes at b_{k-1}.
    sched = sched_of((2, 12, 72), 2, 1)
    pts = np.array(list(itertools.product(range(-21, 22), repeat=2)))
    with_last = H_mask(pts, "odd", 3, sched)
    clamped = F_mask(pts, "odd", 2, sched)
    assert np.array_equal(with_last, clamped)
