"""Chip-firing baselines to compare the greedy hunger game against: the
Engel probabilistic-abacus machine and the rotor-router walk.

Both need integer chip moves, so they run on rational chains only; each
state i carries a threshold d_i that clears its row's denominators.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .chain_model import RATIONAL, MarkovChain, absorbing_states
from .errors import CapExceeded, FloatModeUnsupported, Stabilized
from .hunger_engine import DEFAULT_CAP, run


def _row_thresholds(chain: MarkovChain) -> Tuple[int, ...]:
    return tuple(
        math.lcm(*(p.denominator for p in row)) for row in chain.P
    )


@dataclass
class ChipConfig:
    """Chip counts c with per-state firing thresholds d.

    Every d_i * P_ij must be a whole number of chips; by default d_i is
    the least common denominator of row i.
    """

    c: Tuple[int, ...]
    d: Tuple[int, ...]

    @classmethod
    def build(
        cls,
        chain: MarkovChain,
        c: Sequence[int],
        d: Optional[Sequence[int]] = None,
    ) -> "ChipConfig":
        if chain.mode != RATIONAL:
            raise FloatModeUnsupported("chip configurations need exact rows")
        c = tuple(int(x) for x in c)
        if len(c) != chain.n:
            raise ValueError(f"expected {chain.n} chip counts")
        if any(x < 0 for x in c):
            raise ValueError("chip counts must be nonnegative")
        d = _row_thresholds(chain) if d is None else tuple(int(x) for x in d)
        if len(d) != chain.n:
            raise ValueError(f"expected {chain.n} thresholds")
        for i, row in enumerate(chain.P):
            if d[i] < 1:
                raise ValueError("thresholds must be positive")
            for p in row:
                if (d[i] * p).denominator != 1:
                    raise ValueError(
                        f"threshold d_{i + 1}={d[i]} does not clear row {i + 1}"
                    )
        return cls(c, d)


@dataclass
class EngelRecord:
    """Outcome of an Engel run that entered a cycle.

    cycle_counts is the per-state firing tally over one full cycle;
    counts is the tally over the whole walk and final the chip
    configuration at detection time. Each firing at i moves d_i chips,
    so the stationary vector the cycle certifies is cycle_counts scaled
    entrywise by the thresholds (equal to plain cycle_counts whenever
    the thresholds are uniform).
    """

    entry_steps: int
    period: int
    cycle_counts: Tuple[int, ...]
    counts: Tuple[int, ...]
    final: Tuple[int, ...]
    repeated: bool


def engel_run(
    chain: MarkovChain,
    c0: Sequence[int],
    d: Optional[Sequence[int]] = None,
    cap: int = DEFAULT_CAP,
) -> EngelRecord:
    """Run the Engel machine until its configuration repeats.

    The lowest-indexed state holding at least its threshold fires,
    shipping d_i * P_ij chips to each j. Absorbing states never fire;
    they only collect. Raises Stabilized(steps) when no state can fire,
    CapExceeded when the configuration keeps changing past cap firings.
    """
    cfg = ChipConfig.build(chain, c0, d)
    absorbing = absorbing_states(chain)
    moves = [
        tuple(
            int(cfg.d[i] * chain.P[i][j]) - (cfg.d[i] if i == j else 0)
            for j in range(chain.n)
        )
        for i in range(chain.n)
    ]
    c = list(cfg.c)
    counts = [0] * chain.n
    seen = {tuple(c): (0, tuple(counts))}
    for step in range(1, cap + 1):
        fired = -1
        for i in range(chain.n):
            if i not in absorbing and c[i] >= cfg.d[i]:
                fired = i
                break
        if fired < 0:
            raise Stabilized(step - 1)
        for j in range(chain.n):
            c[j] += moves[fired][j]
        counts[fired] += 1
        key = tuple(c)
        if key in seen:
            entry, then = seen[key]
            cycle = tuple(a - b for a, b in zip(counts, then))
            return EngelRecord(
                entry, step - entry, cycle, tuple(counts), key, True
            )
        seen[key] = (step, tuple(counts))
    raise CapExceeded(cap)


@dataclass
class RotorTrace:
    """Deterministic rotor walk record: the itinerary (start plus N
    arrivals), per-state visit counts, final rotor positions, and the
    per-state out-degree d."""

    itinerary: np.ndarray
    visits: np.ndarray
    rotors: Tuple[int, ...]
    d: Tuple[int, ...]


def rotor_run(
    chain: MarkovChain,
    start: int,
    rotor_init: Optional[Sequence[int]] = None,
    N: int = 0,
) -> RotorTrace:
    """Walk N steps of the rotor-router derandomization of the chain.

    State i owns d_i outgoing edge slots: d_i * P_ij consecutive slots
    point at j, targets in ascending order. Each departure uses the
    current rotor slot and advances it cyclically.
    """
    if chain.mode != RATIONAL:
        raise FloatModeUnsupported("rotor walks need exact rows")
    if not 0 <= start < chain.n:
        raise ValueError("start state out of range")
    if N < 0:
        raise ValueError("N must be >= 0")
    d = _row_thresholds(chain)
    edges: List[List[int]] = []
    for i, row in enumerate(chain.P):
        slots = []
        for j, p in enumerate(row):
            slots.extend([j] * int(d[i] * p))
        edges.append(slots)
    rotors = [0] * chain.n if rotor_init is None else list(rotor_init)
    if len(rotors) != chain.n or any(
        not 0 <= rotors[i] < d[i] for i in range(chain.n)
    ):
        raise ValueError("rotor_init must give a slot in [0, d_i) per state")
    itinerary = np.empty(N + 1, dtype=np.int64)
    visits = np.zeros(chain.n, dtype=np.int64)
    x = start
    itinerary[0] = x
    visits[x] += 1
    for t in range(1, N + 1):
        j = edges[x][rotors[x]]
        rotors[x] = (rotors[x] + 1) % d[x]
        x = j
        itinerary[t] = x
        visits[x] += 1
    return RotorTrace(itinerary, visits, tuple(rotors), d)


@dataclass
class TwoStateComparison:
    """Greedy game vs rotor walk on the symmetric two-state chain.

    rows holds (N, hunger deviation, rotor deviation) where deviation is
    the distance of state 1's visit frequency from 1/2 after N steps;
    the maxima are taken over N >= 2 (both methods are trivially off by
    1/2 at N = 1).
    """

    q: Fraction
    rows: List[Tuple[int, Fraction, Fraction]]
    hunger_max: Fraction
    rotor_max: Fraction


def compare_two_state(q, N: int) -> TwoStateComparison:
    """Compare frequency convergence of the two methods on the chain that
    crosses between two states with probability q.

    The greedy game runs from zero hunger; the rotor walk starts at the
    first state with rotors (0, 1), which lets it dwell for a full block
    of 1/q visits before first crossing.
    """
    q = Fraction(q)
    if not 0 < q < 1:
        raise ValueError("q must lie strictly between 0 and 1")
    if N < 2:
        raise ValueError("need N >= 2 for a meaningful comparison")
    chain = MarkovChain([[1 - q, q], [q, 1 - q]])
    trace = run(chain, None, N)
    hunger_counts = np.cumsum(trace.fired == 0)
    # 0 < q < 1 forces d >= 2 per state, so slot 1 always exists
    rotor = rotor_run(chain, 0, (0, 1), N)
    rotor_counts = np.cumsum(rotor.itinerary[1:] == 0)
    half = Fraction(1, 2)
    rows = []
    hmax = rmax = Fraction(0)
    for n in range(1, N + 1):
        hdev = abs(Fraction(int(hunger_counts[n - 1]), n) - half)
        rdev = abs(Fraction(int(rotor_counts[n - 1]), n) - half)
        rows.append((n, hdev, rdev))
        if n >= 2:
            hmax = max(hmax, hdev)
            rmax = max(rmax, rdev)
    return TwoStateComparison(q, rows, hmax, rmax)


def rotor_d(q: Fraction) -> int:
    """Rotor out-degree of each state in the two-state chain."""
    return math.lcm(q.denominator, (1 - q).denominator)
