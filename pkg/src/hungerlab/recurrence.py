"""Orbit structure of the greedy firing map: cycle detection, recurrence
classification, basin scans over a grid of starts, and the displacement
lattice tests behind the covering theorem.

Rational mode only. Orbits of a rational-entry chain live on a shifted
integer lattice, so cycle detection is exact; float orbits never close
reliably and are rejected up front.
"""

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from ._linalg import solve
from .chain_model import (
    RATIONAL,
    MarkovChain,
    absorbing_states,
    hunger_matrix,
    lcd_of_stationary,
    stationary_distribution,
)
from .errors import (
    CapExceeded,
    FloatModeUnsupported,
    HasAbsorbing,
    OrbitMemoryExceeded,
    YNotOnZ,
)
from .hunger_engine import (
    DEFAULT_CAP,
    _from_int64,
    _int64_safe,
    _int_rows,
    _scale_for,
    _to_int64,
    coerce_hunger,
    fire_step,
    run,
    zero_hunger,
)

ORBIT_MEMORY_LIMIT = 10**7


@dataclass
class CycleInfo:
    """What one orbit does: how long until it repeats, and how.

    entry_steps is the number of firings before the first revisited
    vector, period the cycle length, representative the hunger vector at
    cycle entry, order the fired-index sequence around one full cycle and
    order_class its rotation-invariant canonical form.
    """

    entry_steps: int
    period: int
    representative: Tuple[Fraction, ...]
    order: Tuple[int, ...]
    order_class: str

    def firing_counts(self) -> Tuple[int, ...]:
        """Times each state fires in one full cycle."""
        counts = [0] * (max(self.order) + 1)
        for i in self.order:
            counts[i] += 1
        return tuple(counts)


def _check_cycle_chain(chain: MarkovChain) -> None:
    if chain.mode != RATIONAL:
        raise FloatModeUnsupported("cycle detection needs exact arithmetic")
    if absorbing_states(chain):
        raise HasAbsorbing("orbits of a chain with absorbing states never cycle")


def find_cycle(chain: MarkovChain, h0=None, cap: int = DEFAULT_CAP) -> CycleInfo:
    """Run the greedy game until the hunger vector repeats.

    Uses constant-memory cycle detection on the scaled integer fast path
    and falls back to a hash-table walk over exact vectors otherwise.

    Raises:
        CapExceeded: the orbit did not close within cap steps.
        OrbitMemoryExceeded: the fallback walk stored too many vectors.
    """
    _check_cycle_chain(chain)
    h = coerce_hunger(chain, h0)
    S = _scale_for(chain, h)
    if _int64_safe(S, h, chain.n):
        rows = _int_rows(chain, S)
        g = _to_int64(h, S)
        mu, lam = _kernels.brent_cycle(g.copy(), rows, cap)
        if mu < 0 or mu + lam > cap:
            raise CapExceeded(cap)
        _kernels.greedy_advance(g, rows, mu)
        rep = _from_int64(g, S)
    else:
        mu, lam, rep = _fraction_cycle(chain, h, cap)
    trace = run(chain, rep, lam)
    order = tuple(int(i) for i in trace.fired)
    return CycleInfo(mu, lam, rep, order, canonical_order(order, chain.n))


def _fraction_cycle(chain, h, cap):
    """Hash-table cycle walk on exact vectors. Returns (mu, lam, rep)."""
    seen = {h: 0}
    x = h
    for step in range(1, cap + 1):
        x, _ = fire_step(chain, x)
        if x in seen:
            mu = seen[x]
            return mu, step - mu, x
        if len(seen) >= ORBIT_MEMORY_LIMIT:
            raise OrbitMemoryExceeded(ORBIT_MEMORY_LIMIT)
        seen[x] = step
    raise CapExceeded(cap)


def is_recurrent(chain: MarkovChain, h0=None, cap: int = DEFAULT_CAP) -> bool:
    """True when the start vector already sits on its orbit's cycle."""
    return find_cycle(chain, h0, cap).entry_steps == 0


def zero_period(chain: MarkovChain, cap: int = DEFAULT_CAP) -> int:
    """Period of the orbit started at zero hunger.

    The zero orbit is recurrent and its period equals the least common
    denominator of the stationary distribution; both facts are theorems,
    so a mismatch here means a bug and raises RuntimeError.
    """
    info = find_cycle(chain, zero_hunger(chain), cap)
    if info.entry_steps != 0:
        raise RuntimeError("zero orbit reported as non-recurrent")
    lcd = lcd_of_stationary(chain)
    if info.period != lcd:
        raise RuntimeError(
            f"zero orbit period {info.period} != stationary lcd {lcd}"
        )
    return info.period


def _least_rotation(s: Sequence[int]) -> int:
    """Index of the lexicographically least rotation (Booth's algorithm)."""
    ss = tuple(s) + tuple(s)
    f = [-1] * len(ss)
    k = 0
    for j in range(1, len(ss)):
        c = ss[j]
        i = f[j - k - 1]
        while i != -1 and c != ss[k + i + 1]:
            if c < ss[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if c != ss[k + i + 1]:
            if c < ss[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return k


def canonical_order(order: Sequence[int], n: Optional[int] = None) -> str:
    """Rotation-invariant name for a cyclic firing order.

    Two orders get the same string exactly when one is a rotation of the
    other. States print 1-based; chains with at most 9 states pack into a
    digit string, larger ones separate tokens with dashes.
    """
    if not order:
        raise ValueError("empty firing order")
    k = _least_rotation(order)
    rot = tuple(order[k:]) + tuple(order[:k])
    width = max(rot) + 1 if n is None else n
    if width <= 9:
        return "".join(str(i + 1) for i in rot)
    return "-".join(str(i + 1) for i in rot)


# ---------------------------------------------------------------------------
# basin scans


@dataclass
class BasinCell:
    """One grid cell of a basin scan. Fields are None when the orbit
    exceeded the cap or the memory limit."""

    h1: Fraction
    h2: Fraction
    recurrent: Optional[bool]
    period: Optional[int]
    class_id: Optional[int]
    entry_steps: Optional[int]


@dataclass
class BasinScan:
    cells: List[BasinCell]
    classes: List[str]


def basin_scan(
    chain: MarkovChain,
    bounds: Tuple[Fraction, Fraction],
    step: Fraction,
    cap: int = DEFAULT_CAP,
) -> BasinScan:
    """Classify every grid start (h1, h2, -h1-h2) for a 3-state chain.

    Walks h1 and h2 over the closed interval bounds with the given step
    (all exact fractions), finds each orbit's cycle and buckets it by
    canonical firing order. Class ids are 1-based in first-seen order,
    scanning h1 in the outer loop.
    """
    if chain.n != 3:
        raise ValueError("basin scans are drawn over 3-state chains")
    lo, hi = Fraction(bounds[0]), Fraction(bounds[1])
    step = Fraction(step)
    if step <= 0 or hi < lo:
        raise ValueError("need step > 0 and bounds (lo, hi) with lo <= hi")
    values = []
    x = lo
    while x <= hi:
        values.append(x)
        x += step
    class_ids = {}
    classes: List[str] = []
    cells = []
    for h1 in values:
        for h2 in values:
            h = (h1, h2, -h1 - h2)
            try:
                info = find_cycle(chain, h, cap)
            except (CapExceeded, OrbitMemoryExceeded):
                cells.append(BasinCell(h1, h2, None, None, None, None))
                continue
            if info.order_class not in class_ids:
                classes.append(info.order_class)
                class_ids[info.order_class] = len(classes)
            cells.append(
                BasinCell(
                    h1,
                    h2,
                    info.entry_steps == 0,
                    info.period,
                    class_ids[info.order_class],
                    info.entry_steps,
                )
            )
    return BasinScan(cells, classes)


# ---------------------------------------------------------------------------
# displacement lattice


@dataclass
class HungerLattice:
    """Integer lattice of displacements reachable in zero-sum firing.

    basis rows are consecutive differences of firing-step rows; p_vec is
    the per-cycle firing count vector (stationary distribution scaled to
    integers by its least common denominator).
    """

    basis: Tuple[Tuple[Fraction, ...], ...]
    p_vec: Tuple[int, ...]
    lcd: int


def lattice_basis(chain: MarkovChain) -> HungerLattice:
    if chain.mode != RATIONAL:
        raise FloatModeUnsupported("the displacement lattice needs exact entries")
    H = hunger_matrix(chain).H
    basis = tuple(
        tuple(H[i][j] - H[i + 1][j] for j in range(chain.n))
        for i in range(chain.n - 1)
    )
    lcd = lcd_of_stationary(chain)
    pi = stationary_distribution(chain)
    p_vec = tuple(int(p * lcd) for p in pi)
    return HungerLattice(basis, p_vec, lcd)


def lattice_member(chain: MarkovChain, y: Sequence) -> bool:
    """Whether y lies in the displacement lattice.

    y must sit on the zero-sum hyperplane (YNotOnZ otherwise). Membership
    means y = w . H for some integer vector w with sum(w) = 0; the rational
    solution space is a line in direction p_vec, and the zero-sum condition
    pins the only candidate, which is then checked for integrality.
    """
    if chain.mode != RATIONAL:
        raise FloatModeUnsupported("lattice membership needs exact entries")
    y = tuple(Fraction(c) for c in y)
    if len(y) != chain.n:
        raise ValueError(f"expected a vector of length {chain.n}")
    if sum(y) != 0:
        raise YNotOnZ("lattice vectors have zero total")
    if chain.n == 1:
        return True  # y is (0,) and the lattice is the origin
    lat = lattice_basis(chain)
    H = hunger_matrix(chain).H
    # solve w . H = y, i.e. H^T w = y
    Ht = [[H[i][j] for i in range(chain.n)] for j in range(chain.n)]
    w0 = solve(Ht, list(y))
    if w0 is None:
        return False
    t = -Fraction(sum(w0), lat.lcd)
    return all(
        (w0[i] + t * lat.p_vec[i]).denominator == 1 for i in range(chain.n)
    )


@dataclass
class CoveringCheck:
    """Result of pushing one start forward onto the recurrent set."""

    steps: int
    reached: Tuple[Fraction, ...]
    member: bool


def covering_detail(
    chain: MarkovChain, h0=None, cap: int = DEFAULT_CAP
) -> CoveringCheck:
    """Advance h0 by whole cycles until past the transient, then test that
    the displacement is a lattice member.

    The number of steps is the smallest multiple of the orbit's period
    that is at least the transient length (zero for recurrent starts), so
    the endpoint is a recurrent vector and, by the covering theorem, the
    displacement always lands in the lattice.
    """
    _check_cycle_chain(chain)
    h = coerce_hunger(chain, h0)
    info = find_cycle(chain, h, cap)
    t = info.period * math.ceil(info.entry_steps / info.period)
    x = run(chain, h, t).final_h
    diff = tuple(a - b for a, b in zip(x, h))
    return CoveringCheck(t, x, lattice_member(chain, diff))


def covering_check(chain: MarkovChain, h0=None, cap: int = DEFAULT_CAP) -> bool:
    """True when some lattice shift of h0 is recurrent (see covering_detail)."""
    return covering_detail(chain, h0, cap).member


# ---------------------------------------------------------------------------
# conjecture scans (reported, never asserted)


@dataclass
class ConjectureReport:
    """Empirical scan summary for one open conjecture."""

    name: str
    checked: int
    violations: int
    skipped: int
    notes: List[str]

    @property
    def consistent(self) -> bool:
        return self.violations == 0


def _random_hunger(
    rng: random.Random, n: int, lo: Fraction, hi: Fraction
) -> Tuple[Fraction, ...]:
    """Random zero-sum rational vector with n-1 free coordinates in
    [lo, hi] and small denominators."""
    coords = []
    for _ in range(n - 1):
        den = rng.randint(1, 20)
        coords.append(
            Fraction(rng.randint(math.ceil(lo * den), math.floor(hi * den)), den)
        )
    return tuple(coords) + (-sum(coords),)


def conjecture_reports(
    chain: MarkovChain,
    samples: int = 500,
    bounds: Tuple[Fraction, Fraction] = (Fraction(-3, 2), Fraction(3, 2)),
    step: Fraction = Fraction(1, 20),
    seed: int = 0,
    cap: int = DEFAULT_CAP,
) -> List[ConjectureReport]:
    """Scan the two open conjectures and report the tallies.

    Period uniformity: the period of every sampled orbit should match the
    zero orbit's (= the stationary lcd); sampled at `samples` random
    zero-sum rational starts within bounds. Tiling: no recurrent grid
    point should stay recurrent after a shift by a nonzero lattice
    element u = a(H_1-H_2) + b(H_2-H_3), a, b in -2..2; scanned over the
    same grid a basin scan would use, 3-state chains only. Violations are
    counted and quoted, never raised; these are conjectures, not
    invariants.
    """
    _check_cycle_chain(chain)
    rng = random.Random(seed)
    base = zero_period(chain, cap)
    lo, hi = Fraction(bounds[0]), Fraction(bounds[1])

    checked = violations = skipped = 0
    notes: List[str] = []
    for _ in range(samples):
        h = _random_hunger(rng, chain.n, lo, hi)
        try:
            info = find_cycle(chain, h, cap)
        except (CapExceeded, OrbitMemoryExceeded):
            skipped += 1
            continue
        checked += 1
        if info.period != base:
            violations += 1
            if len(notes) < 5:
                notes.append(f"period {info.period} != {base} from h={h}")
    period_report = ConjectureReport(
        "period-uniformity", checked, violations, skipped, notes
    )

    checked = violations = skipped = 0
    notes = []
    if chain.n != 3:
        notes.append("skipped: the tiling scan is defined for 3-state chains")
    else:
        lat = lattice_basis(chain)
        shifts = []
        for a in range(-2, 3):
            for b in range(-2, 3):
                if (a, b) == (0, 0):
                    continue
                u = tuple(
                    a * lat.basis[0][j] + b * lat.basis[1][j] for j in range(3)
                )
                shifts.append(((a, b), u))
        recurrent_cache = {}

        def recurrent(h):
            if h not in recurrent_cache:
                recurrent_cache[h] = is_recurrent(chain, h, cap)
            return recurrent_cache[h]

        values = []
        x1 = lo
        while x1 <= hi:
            values.append(x1)
            x1 += Fraction(step)
        for h1 in values:
            for h2 in values:
                x = (h1, h2, -h1 - h2)
                try:
                    if not recurrent(x):
                        continue
                    for combo, u in shifts:
                        y = tuple(p - q for p, q in zip(x, u))
                        checked += 1
                        if recurrent(y):
                            violations += 1
                            if len(notes) < 5:
                                notes.append(
                                    f"recurrent overlap at shift {combo} from x={x}"
                                )
                except (CapExceeded, OrbitMemoryExceeded):
                    skipped += 1
    tiling_report = ConjectureReport(
        "recurrent-tiling", checked, violations, skipped, notes
    )
    return [period_report, tiling_report]
