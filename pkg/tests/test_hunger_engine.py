import random
from fractions import Fraction

import numpy as np
import pytest

from hungerlab import (
    CapExceeded,
    IIsAbsorbing,
    absorbing_states,
    chip_add,
    fire_step,
    goldbug_chain,
    harmonic_chain,
    hunger_matrix,
    hungriest_index,
    lazy_run,
    parse_chain,
    run,
    run_with_reinsertion,
    zero_hunger,
)
from hungerlab.hunger_engine import (
    SparseHunger,
    _chip_add_fraction,
    _reinsert_fraction,
    _run_fraction,
)
from oracles import random_absorbing_chain, random_irreducible_chain

F = Fraction


def apply_fires(chain, h, fired):
    """Replay a fired sequence against the hunger matrix (slow reference)."""
    H = hunger_matrix(chain).H
    cur = list(h)
    for i in fired:
        for j in range(chain.n):
            cur[j] += H[i][j]
    return tuple(cur)


# ---------------------------------------------------------------------------
# single steps


def test_hungriest_breaks_ties_low():
    assert hungriest_index((F(0), F(0), F(0))) == 0
    assert hungriest_index((F(-1), F(2), F(2))) == 1
    # five-state walk snapshot: v2 beats v4
    assert hungriest_index((F(0), F(3, 5), F(0), F(2, 5), F(0))) == 1


def test_fire_step_adds_hunger_row(reflecting3):
    H = hunger_matrix(reflecting3).H
    new, i = fire_step(reflecting3, zero_hunger(reflecting3))
    assert i == 0
    assert new == H[0]


def test_coerce_rejects_bad_vectors(reflecting3):
    with pytest.raises(ValueError):
        run(reflecting3, (F(1), F(-1)), 1)
    with pytest.raises(ValueError):
        run(reflecting3, (0.5, -0.5, 0.0), 1)  # floats in rational mode


# ---------------------------------------------------------------------------
# plain runs


def test_run_zero_and_negative_steps(reflecting3):
    t = run(reflecting3, None, 0)
    assert t.steps == 0
    assert t.final_h == t.initial_h == zero_hunger(reflecting3)
    assert list(t.v) == [0, 0, 0]
    with pytest.raises(ValueError):
        run(reflecting3, None, -1)


def test_run_reflecting_rotation(reflecting3):
    # from zero the doubly reflecting walk fires 1, 2, 3, 1, 2, 3, ...
    t = run(reflecting3, None, 12)
    assert [int(x) for x in t.fired] == [k % 3 for k in range(12)]
    assert list(t.v) == [4, 4, 4]
    assert t.final_h == zero_hunger(reflecting3)


def test_run_trace_invariant_and_conservation():
    rng = random.Random(11)
    for _ in range(20):
        n = rng.choice((2, 3, 4))
        chain = random_irreducible_chain(rng, n)
        h0 = tuple(F(rng.randint(-6, 6), rng.randint(1, 5)) for _ in range(n))
        t = run(chain, h0, 60)
        assert t.final_h == apply_fires(chain, h0, [int(x) for x in t.fired])
        assert sum(t.final_h) == sum(h0)
        assert t.v.sum() == 60
        counts = np.bincount(np.asarray(t.fired), minlength=n)
        assert list(counts) == list(t.v)


def test_run_int64_path_matches_fraction_path(reflecting3, basin_demo3):
    rng = random.Random(23)
    cases = [
        (reflecting3, (F(1, 7), F(-1, 7), F(0))),
        (basin_demo3, (F(4, 5), F(-1, 10), F(-7, 10))),
    ]
    for _ in range(6):
        chain = random_irreducible_chain(rng, 3)
        h0 = tuple(F(rng.randint(-4, 4), rng.randint(1, 6)) for _ in range(3))
        cases.append((chain, h0))
    for chain, h0 in cases:
        fast = run(chain, h0, 200)
        fired = np.empty(200, dtype=np.int64)
        v = np.zeros(chain.n, dtype=np.int64)
        slow = _run_fraction(chain, h0, 200, fired, v)
        assert list(fast.fired) == list(slow.fired)
        assert fast.final_h == slow.final_h
        assert list(fast.v) == list(slow.v)


def test_run_float_mode_tracks_rational(reflecting3):
    doc = (
        '{"mode": "float", "P": [[0.5, 0.5, 0.0],'
        " [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]]}"
    )
    fchain = parse_chain(doc)
    ft = run(fchain, None, 30)
    rt = run(reflecting3, None, 30)
    assert list(ft.fired) == list(rt.fired)
    assert ft.final_h == pytest.approx([float(x) for x in rt.final_h])


def test_run_huge_denominator_falls_back():
    # scale overflows the int64 budget, forcing the exact path
    chain = parse_chain(
        '{"mode": "rational", "P": [["1/2", "1/2"], ["1/2", "1/2"]]}'
    )
    h0 = (F(1, 2**40 + 1), -F(1, 2**40 + 1))
    t = run(chain, h0, 25)
    assert sum(t.final_h) == 0
    assert t.final_h == apply_fires(chain, h0, [int(x) for x in t.fired])


# ---------------------------------------------------------------------------
# chip addition


def test_chip_add_five_state_walk(absorbing_walk5):
    result, trace = chip_add(absorbing_walk5, None, 2)
    assert result == (F(1, 5), F(1, 5), F(2, 5), F(-3, 5), F(-1, 5))
    assert [int(x) for x in trace.fired] == [1, 3, 4]
    assert trace.initial_h == (F(0), F(3, 5), F(0), F(2, 5), F(0))
    # one fire in, the walk passes through the middle panel
    mid, i = fire_step(absorbing_walk5, trace.initial_h)
    assert i == 1
    assert mid == (F(1, 5), F(1, 5), F(1, 5), F(2, 5), F(0))
    # trace keeps the pre-removal vector so the replay identity holds
    assert trace.final_h == apply_fires(
        absorbing_walk5, trace.initial_h, [1, 3, 4]
    )
    assert trace.final_h == (F(1, 5), F(1, 5), F(2, 5), F(-3, 5), F(4, 5))


def test_chip_add_conserves_total(absorbing_walk5, two_sinks5):
    for chain in (absorbing_walk5, two_sinks5):
        h0 = (F(0), F(1, 3), F(-1, 3), F(0), F(0))
        result, trace = chip_add(chain, h0, 1)
        assert sum(result) == sum(h0)
        assert int(trace.fired[-1]) in absorbing_states(chain)


def test_chip_add_rejects_absorbing_insertion(absorbing_walk5):
    for i in (0, 4):
        with pytest.raises(IIsAbsorbing):
            chip_add(absorbing_walk5, None, i)


def test_chip_add_cap(absorbing_walk5):
    with pytest.raises(CapExceeded):
        chip_add(absorbing_walk5, None, 2, cap=2)
    # a chain without absorbing states can never stop, so the cap fires
    chain = parse_chain(
        '{"mode": "rational", "P": [["1/2", "1/2"], ["1/2", "1/2"]]}'
    )
    with pytest.raises(CapExceeded):
        chip_add(chain, None, 0, cap=100)


def test_chip_add_deterministic(absorbing_walk5):
    a = chip_add(absorbing_walk5, None, 3)
    b = chip_add(absorbing_walk5, None, 3)
    assert a[0] == b[0]
    assert list(a[1].fired) == list(b[1].fired)


def test_chip_add_fraction_fallback_agrees(absorbing_walk5):
    chain = absorbing_walk5
    h0 = zero_hunger(chain)
    inserted = list(h0)
    for j in range(chain.n):
        inserted[j] += chain.P[2][j]
    slow_result, slow_trace = _chip_add_fraction(
        chain, tuple(inserted), absorbing_states(chain), 10**6
    )
    fast_result, fast_trace = chip_add(chain, h0, 2)
    assert slow_result == fast_result
    assert list(slow_trace.fired) == list(fast_trace.fired)
    assert slow_trace.final_h == fast_trace.final_h


def test_chip_add_random_chains_terminate():
    rng = random.Random(5)
    for _ in range(15):
        chain = random_absorbing_chain(rng, rng.choice((3, 4, 5)))
        i = next(
            s for s in range(chain.n) if s not in absorbing_states(chain)
        )
        result, trace = chip_add(chain, None, i)
        assert sum(result) == 0
        assert trace.steps >= 1


# ---------------------------------------------------------------------------
# remove and reinsert


def test_reinsertion_validation(absorbing_walk5):
    with pytest.raises(ValueError):
        run_with_reinsertion(absorbing_walk5, None, [], 5)
    with pytest.raises(ValueError):
        run_with_reinsertion(absorbing_walk5, None, [7], 5)
    with pytest.raises(ValueError):
        run_with_reinsertion(absorbing_walk5, None, [0], 5)  # absorbing
    with pytest.raises(CapExceeded):
        run_with_reinsertion(absorbing_walk5, None, [2], 50, cap=10)


def test_reinsertion_zero_steps(absorbing_walk5):
    t = run_with_reinsertion(absorbing_walk5, None, [2], 0)
    assert t.steps == 0
    assert t.insertions == 0
    assert t.min_h == t.max_h == 0


def test_reinsertion_lower_bound(absorbing_walk5):
    t = run_with_reinsertion(absorbing_walk5, None, [2], 12)
    assert t.min_h >= -1


def test_reinsertion_two_sided_bound(absorbing_walk5):
    # one chip in flight: totals sit in {0, 1}, so with a = -1 every
    # entry stays at or below (1) - (n-1)a
    n = absorbing_walk5.n
    t = run_with_reinsertion(absorbing_walk5, None, [1, 2, 3], 100)
    assert t.min_h >= -1
    assert t.max_h <= 1 - (n - 1) * -1


def test_reinsertion_sentinels_and_counts(absorbing_walk5):
    t = run_with_reinsertion(absorbing_walk5, None, [2], 40)
    fired = [int(x) for x in t.fired]
    assert fired[0] == -1  # the run opens with an insertion
    assert t.insertions == fired.count(-1)
    assert t.v.sum() == t.steps - t.insertions
    assert all(f == -1 or 0 <= f < absorbing_walk5.n for f in fired)


def test_reinsertion_min_includes_initial(absorbing_walk5):
    h0 = (F(0), F(-2), F(1), F(0), F(1))
    t = run_with_reinsertion(absorbing_walk5, h0, [2], 1)
    assert t.min_h <= -2


def test_reinsertion_fraction_path_agrees(absorbing_walk5):
    chain = absorbing_walk5
    steps = 60
    fast = run_with_reinsertion(chain, None, [1, 3], steps)
    sched = np.array([[1, 3][k % 2] for k in range(steps + 1)], dtype=np.int64)
    fired = np.empty(steps, dtype=np.int64)
    v = np.zeros(chain.n, dtype=np.int64)
    slow = _reinsert_fraction(
        chain, zero_hunger(chain), absorbing_states(chain), sched, steps, fired, v
    )
    assert [int(x) for x in fast.fired] == [int(x) for x in slow.fired]
    assert fast.final_h == slow.final_h
    assert fast.min_h == slow.min_h
    assert fast.max_h == slow.max_h
    assert fast.insertions == slow.insertions


# ---------------------------------------------------------------------------
# lazy countable chains


def test_goldbug_rows_and_labels():
    g = goldbug_chain()
    assert g.label(0) == "-1"
    assert g.label(1) == "0"
    assert g.label(5) == "4"
    assert g.is_absorbing(0) and g.is_absorbing(1)
    assert g.row(3) == [(1, F(1, 2)), (4, F(1, 2))]


def test_goldbug_marches_right():
    g = goldbug_chain()
    h0 = {0: F(-1, 2), 1: F(-1, 2), 2: F(-1, 2)}
    t = lazy_run(g, h0, 2, 3)
    assert t.fired == [3, 4, 5]
    assert not t.absorbed
    # same run, long horizon: after k fires the freshest state is 2 + k
    t = lazy_run(g, h0, 2, 50)
    assert t.fired == list(range(3, 53))


def test_goldbug_absorbs_from_cold_start():
    g = goldbug_chain()
    t = lazy_run(g, {}, 2, 10)
    # the tie at 1/2 resolves to the enumeration's low end, state -1
    assert t.fired == [0]
    assert t.absorbed
    assert t.steps == 1
    assert sum(t.final.values()) == 0


def test_lazy_run_rejects_absorbing_insertion():
    g = goldbug_chain()
    with pytest.raises(IIsAbsorbing):
        lazy_run(g, {}, 1, 4)


def test_lazy_run_accepts_sparse_hunger():
    g = goldbug_chain()
    t = lazy_run(g, SparseHunger({0: F(-1, 2), 1: F(-1, 2), 2: F(-1, 2)}), 2, 1)
    assert t.fired == [3]
    assert t.rows[0][0] is None  # opening row is the insertion snapshot


def test_harmonic_enumeration_round_trip():
    h = harmonic_chain()
    for m in range(120):
        i, j = h.pair_of(m)
        assert 0 <= j <= i
        assert h.index_of(i, j) == m
    assert h.label(0) == "v(0,0)"
    assert h.label(h.index_of(5, 4)) == "v(5,4)"


def test_harmonic_partial_sums():
    h = harmonic_chain()
    for n in range(1, 13):
        t = lazy_run(h, {}, h.index_of(n, 0), n - 1)
        assert t.fired == [h.index_of(n, j) for j in range(1, n)]
        top = h.index_of(n, n)
        assert t.final[top] == sum(F(1, k) for k in range(1, n + 1))
    t = lazy_run(h, {}, h.index_of(5, 0), 4)
    assert t.final[h.index_of(5, 5)] == F(137, 60)
