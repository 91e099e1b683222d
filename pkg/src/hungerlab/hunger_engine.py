"""The greedy firing engine.

A hunger vector assigns each state a real "hunger"; one step fires the
hungriest state i (smallest index on ties) and adds row H_i = P_i - I_i to
the vector, so total hunger never changes. The fired index depends on the
hunger vector alone, never on where the chip happens to sit.

Rational chains run exactly: hunger is scaled by a common denominator S and
the loop works on int64 (the boundedness lemmas keep the scaled values far
inside the int64 range, which is checked before entering the kernel; chains
that fail the check fall back to a Fraction loop). Float chains run on
float64 with exact-equality tie-breaking.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .chain_model import (
    FLOAT,
    RATIONAL,
    MarkovChain,
    Scalar,
    absorbing_states,
    common_denominator,
    float_matrix,
    hunger_matrix,
)
from .errors import CapExceeded, IIsAbsorbing

DEFAULT_CAP = 10**7

HungerVector = Tuple[Scalar, ...]


@dataclass
class FiringTrace:
    """Record of a plain run: who fired, how often, and the end state.

    Invariant (exact in rational mode): final_h = initial_h + v H.
    """

    fired: np.ndarray
    v: np.ndarray
    initial_h: HungerVector
    final_h: HungerVector
    steps: int


@dataclass
class ReinsertionTrace:
    """Record of a run with remove-and-reinsert steps.

    fired uses -1 for insertion (and combined remove+reinsert) steps, which
    fire nothing. min_h/max_h are the extreme hunger values observed across
    the initial vector and every step, for the boundedness lemmas.
    """

    fired: np.ndarray
    v: np.ndarray
    initial_h: HungerVector
    final_h: HungerVector
    steps: int
    insertions: int
    min_h: Scalar
    max_h: Scalar


def zero_hunger(chain: MarkovChain) -> HungerVector:
    """The all-zero hunger vector in the chain's mode."""
    zero = Fraction(0) if chain.mode == RATIONAL else 0.0
    return (zero,) * chain.n


def coerce_hunger(chain: MarkovChain, h: Optional[Sequence]) -> HungerVector:
    """Normalize h to a tuple of scalars in the chain's mode.

    None means the zero vector. Rational mode accepts Fractions and ints
    only; silently converting a float would manufacture precision.
    """
    if h is None:
        return zero_hunger(chain)
    vals = list(h)
    if len(vals) != chain.n:
        raise ValueError(f"hunger vector needs {chain.n} entries, got {len(vals)}")
    if chain.mode == RATIONAL:
        out = []
        for x in vals:
            if isinstance(x, float):
                raise ValueError(
                    "rational mode hunger must be Fraction or int, not float"
                )
            out.append(Fraction(x))
        return tuple(out)
    return tuple(float(x) for x in vals)


def hungriest_index(h: Sequence) -> int:
    """Smallest index attaining the maximum hunger."""
    return max(range(len(h)), key=h.__getitem__)


def fire_step(chain: MarkovChain, h: Sequence) -> Tuple[HungerVector, int]:
    """One firing step: returns (h + H_i, i) for i the hungriest index."""
    h = coerce_hunger(chain, h)
    i = hungriest_index(h)
    row = chain.P[i]
    new = [hj + pj for hj, pj in zip(h, row)]
    new[i] -= 1
    return tuple(new), i


# ---------------------------------------------------------------------------
# exact/int64 plumbing


def _int_rows(chain: MarkovChain, S: int) -> np.ndarray:
    """S * H as an exact int64 matrix (requires d | S)."""
    H = hunger_matrix(chain).H
    out = np.empty((chain.n, chain.n), dtype=np.int64)
    for i in range(chain.n):
        for j in range(chain.n):
            x = H[i][j]
            out[i, j] = x.numerator * (S // x.denominator)
    return out


def _scale_for(chain: MarkovChain, h: HungerVector) -> int:
    d = common_denominator(chain)
    return math.lcm(d, *(x.denominator for x in h))


def _int64_safe(S: int, h: HungerVector, n: int) -> bool:
    # Boundedness bound: values stay in [a, b], a = min(h)-1,
    # b = (total+1) - (n-1)a (the +1 covers one in-flight insertion).
    hmin = min(h)
    a = hmin - 1
    b = (sum(h) + 1) - (n - 1) * a
    m = max(abs(a), abs(b)) + 4
    return S * m < 2**62


def _to_int64(h: HungerVector, S: int) -> np.ndarray:
    return np.array(
        [x.numerator * (S // x.denominator) for x in h], dtype=np.int64
    )


def _from_int64(g: np.ndarray, S: int) -> HungerVector:
    return tuple(Fraction(int(x), S) for x in g)


def _float_rows(chain: MarkovChain) -> np.ndarray:
    return float_matrix(chain) - np.eye(chain.n)


# ---------------------------------------------------------------------------
# plain runs


def run(chain: MarkovChain, h0: Optional[Sequence] = None, steps: int = 0) -> FiringTrace:
    """Apply fire_step `steps` times and record the trace.

    Deterministic; bit-exact across runs in rational mode.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    h = coerce_hunger(chain, h0)
    fired = np.empty(steps, dtype=np.int64)
    v = np.zeros(chain.n, dtype=np.int64)
    if steps == 0:
        return FiringTrace(fired, v, h, h, 0)
    if chain.mode == RATIONAL:
        S = _scale_for(chain, h)
        if _int64_safe(S, h, chain.n):
            g = _to_int64(h, S)
            _kernels.greedy_run(g, _int_rows(chain, S), steps, fired, v)
            return FiringTrace(fired, v, h, _from_int64(g, S), steps)
        return _run_fraction(chain, h, steps, fired, v)
    g = np.array(h, dtype=np.float64)
    _kernels.greedy_run(g, _float_rows(chain), steps, fired, v)
    return FiringTrace(fired, v, h, tuple(float(x) for x in g), steps)


def _run_fraction(chain, h, steps, fired, v):
    """Pure-Fraction loop for chains whose scale overflows int64."""
    H = hunger_matrix(chain).H
    cur = list(h)
    for t in range(steps):
        i = hungriest_index(cur)
        row = H[i]
        for j in range(chain.n):
            cur[j] += row[j]
        fired[t] = i
        v[i] += 1
    return FiringTrace(fired, v, h, tuple(cur), steps)


# ---------------------------------------------------------------------------
# chip addition


def chip_add(
    chain: MarkovChain,
    h: Optional[Sequence],
    i: int,
    cap: int = DEFAULT_CAP,
) -> Tuple[HungerVector, FiringTrace]:
    """Chip addition operator: insert a chip at i, fire until absorbed.

    Inserting adds row P_i to the hunger vector. Firing then proceeds
    greedily; the fire that lands on an absorbing state k is recorded like
    any other arrival, and the same step removes the chip by subtracting
    the unit vector at k. Total hunger of the result equals the input's.

    Returns (result, trace) where result is the final hunger vector after
    the chip removal. trace.initial_h is the post-insertion vector and
    trace.final_h the pre-removal one, so the trace keeps the exact
    final_h = initial_h + vH identity.

    Raises:
        IIsAbsorbing: insertion at an absorbing state.
        CapExceeded: no absorbing arrival within `cap` fires (non-absorbing
            chain, or the cap is too small).
    """
    h = coerce_hunger(chain, h)
    absorbing = absorbing_states(chain)
    if i in absorbing:
        raise IIsAbsorbing(f"cannot insert at absorbing state {chain.labels[i]}")
    inserted = list(h)
    for j in range(chain.n):
        inserted[j] += chain.P[i][j]
    inserted = tuple(inserted)
    mask = np.zeros(chain.n, dtype=np.bool_)
    for a in absorbing:
        mask[a] = True
    if chain.mode == RATIONAL:
        S = _scale_for(chain, inserted)
        if _int64_safe(S, inserted, chain.n):
            rows = _int_rows(chain, S)
            scratch = _to_int64(inserted, S)
            k_steps = _kernels.chip_add_count(scratch, rows, mask, cap)
            if k_steps < 0:
                raise CapExceeded(cap)
            g = _to_int64(inserted, S)
            fired = np.empty(k_steps, dtype=np.int64)
            v = np.zeros(chain.n, dtype=np.int64)
            _kernels.greedy_run(g, rows, k_steps, fired, v)
            pre_removal = _from_int64(g, S)
            g[fired[-1]] -= S
            result = _from_int64(g, S)
            return result, FiringTrace(fired, v, inserted, pre_removal, k_steps)
        return _chip_add_fraction(chain, inserted, absorbing, cap)
    g = np.array(inserted, dtype=np.float64)
    rows = _float_rows(chain)
    k_steps = _kernels.chip_add_count(g.copy(), rows, mask, cap)
    if k_steps < 0:
        raise CapExceeded(cap)
    fired = np.empty(k_steps, dtype=np.int64)
    v = np.zeros(chain.n, dtype=np.int64)
    _kernels.greedy_run(g, rows, k_steps, fired, v)
    pre_removal = tuple(float(x) for x in g)
    g[fired[-1]] -= 1.0
    result = tuple(float(x) for x in g)
    return result, FiringTrace(fired, v, inserted, pre_removal, k_steps)


def _chip_add_fraction(chain, inserted, absorbing, cap):
    H = hunger_matrix(chain).H
    cur = list(inserted)
    fired: List[int] = []
    for _ in range(cap):
        i = hungriest_index(cur)
        row = H[i]
        for j in range(chain.n):
            cur[j] += row[j]
        fired.append(i)
        if i in absorbing:
            pre_removal = tuple(cur)
            cur[i] -= 1
            result = tuple(cur)
            v = np.bincount(fired, minlength=chain.n).astype(np.int64)
            trace = FiringTrace(
                np.array(fired, dtype=np.int64), v, inserted, pre_removal, len(fired)
            )
            return result, trace
    raise CapExceeded(cap)


# ---------------------------------------------------------------------------
# remove-and-reinsert runs


def run_with_reinsertion(
    chain: MarkovChain,
    h0: Optional[Sequence],
    schedule: Sequence[int],
    steps: int,
    cap: int = DEFAULT_CAP,
) -> ReinsertionTrace:
    """Run `steps` steps where an absorbed chip is removed and reinserted.

    Each step is one of: the initial insertion (at schedule[0]), a plain
    fire, or, when the previous fire landed on an absorbing state k, a
    combined removal (h -= e_k) and reinsertion at the next schedule state
    (h += P_s) counted as a single step. The schedule is cycled as needed.

    Returns a trace carrying running min/max hunger over the whole run
    (initial vector included), for the boundedness lemma checks.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps > cap:
        raise CapExceeded(cap)
    h = coerce_hunger(chain, h0)
    absorbing = absorbing_states(chain)
    sched_list = [int(s) for s in schedule]
    if steps > 0 and not sched_list:
        raise ValueError("schedule must not be empty")
    for s in sched_list:
        if s < 0 or s >= chain.n:
            raise ValueError(f"schedule state {s} out of range")
        if s in absorbing:
            raise ValueError(
                f"schedule must reinsert at non-absorbing states, got "
                f"{chain.labels[s]}"
            )
    sched = np.array(
        list(itertools.islice(itertools.cycle(sched_list), steps + 1))
        if sched_list
        else [0],
        dtype=np.int64,
    )
    mask = np.zeros(chain.n, dtype=np.bool_)
    for a in absorbing:
        mask[a] = True
    fired = np.empty(steps, dtype=np.int64)
    v = np.zeros(chain.n, dtype=np.int64)
    if steps == 0:
        lo = min(h) if h else 0
        hi = max(h) if h else 0
        return ReinsertionTrace(fired, v, h, h, 0, 0, lo, hi)
    if chain.mode == RATIONAL:
        S = _scale_for(chain, h)
        if _int64_safe(S, h, chain.n):
            g = _to_int64(h, S)
            si, lo, hi = _kernels.reinsert_loop(
                g, _int_rows(chain, S), mask, np.int64(S), sched, steps, fired, v
            )
            return ReinsertionTrace(
                fired,
                v,
                h,
                _from_int64(g, S),
                steps,
                int(si),
                Fraction(int(lo), S),
                Fraction(int(hi), S),
            )
        return _reinsert_fraction(chain, h, absorbing, sched, steps, fired, v)
    g = np.array(h, dtype=np.float64)
    si, lo, hi = _kernels.reinsert_loop(
        g, _float_rows(chain), mask, 1.0, sched, steps, fired, v
    )
    return ReinsertionTrace(
        fired, v, h, tuple(float(x) for x in g), steps, int(si), float(lo), float(hi)
    )


def _reinsert_fraction(chain, h, absorbing, sched, steps, fired, v):
    H = hunger_matrix(chain).H
    cur = list(h)
    lo = min(cur)
    hi = max(cur)
    si = 0
    chip = -2
    for t in range(steps):
        if chip == -2 or (chip >= 0 and chip in absorbing):
            if chip >= 0:
                cur[chip] -= 1
            s = int(sched[si])
            si += 1
            for j in range(chain.n):
                cur[j] += chain.P[s][j]
            fired[t] = -1
            chip = -1
        else:
            i = hungriest_index(cur)
            for j in range(chain.n):
                cur[j] += H[i][j]
            fired[t] = i
            v[i] += 1
            chip = i
        lo = min(lo, min(cur))
        hi = max(hi, max(cur))
    return ReinsertionTrace(fired, v, h, tuple(cur), steps, si, lo, hi)


# ---------------------------------------------------------------------------
# lazily defined countable chains


class LazyChain:
    """A countably infinite chain exposed through a fixed enumeration.

    Subclasses define row(i) (finitely many targets, probabilities summing
    to 1), is_absorbing(i), and label(i). The enumeration order doubles as
    the tie-breaking order.
    """

    def row(self, i: int) -> List[Tuple[int, Fraction]]:
        raise NotImplementedError

    def is_absorbing(self, i: int) -> bool:
        raise NotImplementedError

    def label(self, i: int) -> str:
        return f"s{i}"


class GoldbugChain(LazyChain):
    """Integer line walk: states -1 and 0 absorb; from i >= 1 the chip goes
    to i-2 or i+1 with probability 1/2 each.

    Enumeration: index 0 is state -1, index 1 is state 0, index m >= 2 is
    state m-1.
    """

    def row(self, i):
        if i <= 1:
            return [(i, Fraction(1))]
        return [(i - 2, Fraction(1, 2)), (i + 1, Fraction(1, 2))]

    def is_absorbing(self, i):
        return i <= 1

    def label(self, i):
        return str(i - 1)


class HarmonicChain(LazyChain):
    """Triangular family v(i,j), 0 <= j <= i, where v(i,j) jumps uniformly
    to one of v(i,j+1)..v(i,i) and v(i,i) drops to the absorbing v(0,0).

    Enumeration: index(i,j) = i(i+1)/2 + j, so (0,0) comes first and rows
    are laid out in row-major order.
    """

    @staticmethod
    def index_of(i, j):
        return i * (i + 1) // 2 + j

    @staticmethod
    def pair_of(m):
        i = (math.isqrt(8 * m + 1) - 1) // 2
        return i, m - i * (i + 1) // 2

    def row(self, m):
        if m == 0:
            return [(0, Fraction(1))]
        i, j = self.pair_of(m)
        if j == i:
            return [(0, Fraction(1))]
        p = Fraction(1, i - j)
        return [(self.index_of(i, k), p) for k in range(j + 1, i + 1)]

    def is_absorbing(self, m):
        return m == 0

    def label(self, m):
        i, j = self.pair_of(m)
        return f"v({i},{j})"


def goldbug_chain() -> GoldbugChain:
    return GoldbugChain()


def harmonic_chain() -> HarmonicChain:
    return HarmonicChain()


@dataclass
class SparseHunger:
    """Finitely many tracked hunger values; untracked states are exactly 0."""

    tracked: Dict[int, Fraction] = field(default_factory=dict)


@dataclass
class SparseTrace:
    """Trace of a lazy-chain run.

    rows holds one (fired_index_or_None, hunger_snapshot) pair per step,
    starting with the insertion step (fired None).
    """

    fired: List[int]
    v: Dict[int, int]
    rows: List[Tuple[Optional[int], Dict[int, Fraction]]]
    final: Dict[int, Fraction]
    steps: int
    absorbed: bool


def lazy_run(
    chain: LazyChain,
    h0,
    insert_at: int,
    steps: int,
) -> SparseTrace:
    """Insert a chip at insert_at and fire greedily up to `steps` times.

    h0 is a SparseHunger (or plain dict). The candidate set for each fire
    is every tracked state plus the smallest untracked one; untracked
    states all sit at hunger 0, so a single representative settles the tie
    correctly. An absorbing arrival removes the chip and stops early.

    Raises:
        IIsAbsorbing: insertion at an absorbing index.
    """
    if chain.is_absorbing(insert_at):
        raise IIsAbsorbing(f"cannot insert at absorbing state {chain.label(insert_at)}")
    tracked = h0.tracked if isinstance(h0, SparseHunger) else dict(h0 or {})
    h: Dict[int, Fraction] = {int(k): Fraction(val) for k, val in tracked.items()}

    def add_row(s):
        for j, p in chain.row(s):
            h[j] = h.get(j, Fraction(0)) + p

    add_row(insert_at)
    rows: List[Tuple[Optional[int], Dict[int, Fraction]]] = [(None, dict(h))]
    fired: List[int] = []
    absorbed = False
    for _ in range(steps):
        k = 0
        while k in h:
            k += 1
        best = k  # representative untracked state, hunger exactly 0
        best_val = Fraction(0)
        for idx in sorted(h):
            if h[idx] > best_val or (h[idx] == best_val and idx < best):
                best = idx
                best_val = h[idx]
        i = best
        add_row(i)
        h[i] = h.get(i, Fraction(0)) - 1
        fired.append(i)
        if chain.is_absorbing(i):
            h[i] -= 1
            absorbed = True
            rows.append((i, dict(h)))
            break
        rows.append((i, dict(h)))
    v: Dict[int, int] = {}
    for i in fired:
        v[i] = v.get(i, 0) + 1
    return SparseTrace(fired, v, rows, dict(h), len(fired), absorbed)
