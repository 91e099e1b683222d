"""Estimators built on firing traces: stationary distributions, hitting
probabilities, escape probabilities, absorption and return times.

Everything here is deterministic. The headline property (checked by the
test suite, not assumed) is that N times the deviation from the exact
oracle stays bounded as N grows, so a run of length N buys an O(1/N)
approximation. Oracles come from exact linear solves in rational mode.

Estimator runs always start from the zero hunger vector; the underlying
theory holds for any start, and zero is the reproducible choice.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._linalg import solve
from .chain_model import (
    RATIONAL,
    MarkovChain,
    ReroutedChain,
    Scalar,
    absorbing_states,
    is_irreducible,
    lcd_of_stationary,
    make_absorbing,
    reroute,
    split_vertex,
    stationary_distribution,
)
from .errors import UEqualsV, ZeroSteps
from .hunger_engine import FiringTrace, run

_FLOAT_TOL = 1e-9


@dataclass
class DiscrepancyProfile:
    """Per-N deviation record for one estimator sweep.

    entries holds (N, deviation, N * deviation) sorted by N, where the
    deviation is an L1 distance (vector estimators) or absolute error
    (scalar estimators). estimates is aligned with entries; exact is the
    oracle value the sweep was measured against.
    """

    entries: List[Tuple[int, Scalar, Scalar]]
    sup_Nd: Scalar
    estimates: List
    exact: object


@dataclass
class HittingEstimate:
    """a_N estimate of the probability of absorbing at `target`."""

    target: int
    a_N: Scalar
    N: int
    exact: Scalar
    deviation: Scalar


@dataclass
class AbsorptionEstimate:
    """b_N estimate of the expected time to absorption (or return)."""

    b_N: Scalar
    N: int
    exact: Scalar
    deviation: Scalar


def normalized_firing_vector(trace: FiringTrace) -> Tuple[Fraction, ...]:
    """v / N as exact fractions; entries sum to 1.

    Raises:
        ZeroSteps: for an empty trace.
    """
    if trace.steps == 0:
        raise ZeroSteps("cannot normalize a zero-step trace")
    return tuple(Fraction(int(c), trace.steps) for c in trace.v)


def _cumulative_counts(fired: np.ndarray, n: int) -> np.ndarray:
    """counts[i, t] = times state i fired among the first t+1 steps."""
    out = np.empty((n, fired.shape[0]), dtype=np.int64)
    for i in range(n):
        np.cumsum(fired == i, out=out[i])
    return out


def discrepancy_profile(
    chain: MarkovChain, h0: Optional[Sequence], N_max: int
) -> DiscrepancyProfile:
    """L1 distance between v^(N)/N and the stationary distribution for
    every N in 1..N_max.

    Requires a unique stationary distribution (irreducible chain, or one
    absorbing state reachable from everywhere); the stationary solve
    raises NonUniqueStationary otherwise. Exact in rational mode.
    """
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    pi = stationary_distribution(chain)
    trace = run(chain, h0, N_max)
    counts = _cumulative_counts(trace.fired, chain.n)
    Ns = np.arange(1, N_max + 1, dtype=np.int64)
    if chain.mode == RATIONAL:
        lcd = lcd_of_stationary(chain)
        a = np.array([int(p * lcd) for p in pi], dtype=np.int64)
        # N * dist * lcd as exact integers, vectorized over N
        D = np.abs(lcd * counts - Ns[None, :] * a[:, None]).sum(axis=0)
        entries = [
            (int(N), Fraction(int(d), int(N) * lcd), Fraction(int(d), lcd))
            for N, d in zip(Ns, D)
        ]
        sup = Fraction(int(D.max()), lcd)
        estimates = [
            tuple(Fraction(int(c), int(N)) for c in counts[:, N - 1]) for N in Ns
        ]
    else:
        pi_arr = np.array(pi, dtype=np.float64)
        dist = np.abs(counts / Ns[None, :] - pi_arr[:, None]).sum(axis=0)
        nd = dist * Ns
        entries = [
            (int(N), float(d), float(x)) for N, d, x in zip(Ns, dist, nd)
        ]
        sup = float(nd.max())
        estimates = [
            tuple(float(c / N) for c in counts[:, N - 1]) for N in Ns
        ]
    return DiscrepancyProfile(entries, sup, estimates, tuple(pi))


def hitting_oracle(chain: MarkovChain, v: int) -> Dict[int, Scalar]:
    """Exact hitting probabilities h_u(v) for every absorbing u.

    Solves the first-step equations z_x = sum_y P_xy z_y with boundary 1
    at u and 0 at the other absorbing states; exact in rational mode.
    """
    U = sorted(absorbing_states(chain))
    live = [x for x in range(chain.n) if x not in set(U)]
    idx = {x: k for k, x in enumerate(live)}
    one = Fraction(1) if chain.mode == RATIONAL else 1.0
    zero = one - one
    A = [
        [
            (one if x == y else zero) - chain.P[x][y]
            for y in live
        ]
        for x in live
    ]
    tol = None if chain.mode == RATIONAL else _FLOAT_TOL
    out: Dict[int, Scalar] = {}
    for u in U:
        if v == u:
            out[u] = one
            continue
        if v not in idx:  # v absorbs elsewhere, so it never reaches u
            out[u] = zero
            continue
        b = [chain.P[x][u] for x in live]
        z = solve(A, b, tol)
        if z is None:
            raise ValueError("hitting system is singular")
        out[u] = z[idx[v]]
    return out


def _rerouted_run(chain: MarkovChain, v: int, N: int):
    rer = reroute(chain, v)
    trace = run(rer.chain, None, N)
    new_index = {orig: new for new, orig in enumerate(rer.kept)}
    U = sorted(absorbing_states(chain))
    return rer, trace, new_index, U


def hitting_distribution(
    chain: MarkovChain, v: int, N: int
) -> List[HittingEstimate]:
    """Estimate the absorption distribution from v with one N-step run.

    a_N(u) = v_u^(N) / sum over absorbing visits, defined as 0 when the
    denominator is 0. States the reroute dropped are unreachable from v,
    so their estimate and oracle are both exactly 0.
    """
    rer, trace, new_index, U = _rerouted_run(chain, v, N)
    exact = hitting_oracle(chain, v)
    denom = sum(int(trace.v[new_index[u]]) for u in U if u in new_index)
    out = []
    for u in U:
        if denom and u in new_index:
            a = Fraction(int(trace.v[new_index[u]]), denom)
        else:
            a = Fraction(0)
        if chain.mode != RATIONAL:
            a = float(a)
        dev = abs(a - exact[u])
        out.append(HittingEstimate(u, a, N, exact[u], dev))
    return out


def absorption_time(chain: MarkovChain, v: int, N: int) -> AbsorptionEstimate:
    """Estimate the expected number of steps to absorption from v.

    b_N = N / (number of absorbing visits) - 1, defined as 0 when no
    absorbing visit happened. Exact oracle: on the rerouted chain,
    E = 1 / (stationary mass of the absorbing images) - 1.
    """
    rer, trace, new_index, U = _rerouted_run(chain, v, N)
    exact = _absorption_oracle(rer)
    denom = sum(int(trace.v[u]) for u in rer.absorbing_images)
    if denom:
        b = Fraction(N, denom) - 1
    else:
        b = Fraction(0)
    if chain.mode != RATIONAL:
        b = float(b)
    return AbsorptionEstimate(b, N, exact, abs(b - exact))


def _absorption_oracle(rer: ReroutedChain) -> Scalar:
    pi = stationary_distribution(rer.chain)
    mass = sum(pi[u] for u in rer.absorbing_images)
    one = Fraction(1) if rer.chain.mode == RATIONAL else 1.0
    return one / mass - 1


def escape_probability(
    chain: MarkovChain, v: int, u: int, N: int
) -> HittingEstimate:
    """Probability of reaching u before returning to v, estimated and exact.

    Built by splitting v into a departure copy v0 and an absorbing arrival
    copy v1, making u absorbing, and asking for the hitting probability of
    u from v0 (the absorbing set is {u, v1}).

    Raises:
        UEqualsV: the two states must differ.
        ValueError: the chain must be irreducible.
    """
    if u == v:
        raise UEqualsV("escape probability needs u != v")
    if not is_irreducible(chain):
        raise ValueError("escape probability is defined for irreducible chains")
    split, v0, _v1 = split_vertex(chain, v)
    target_chain = make_absorbing(split, u)
    estimates = hitting_distribution(target_chain, v0, N)
    for est in estimates:
        if est.target == u:
            return est
    raise RuntimeError("unreachable: u is absorbing in the split chain")


def expected_return_time(chain: MarkovChain, v: int, N: int) -> AbsorptionEstimate:
    """Expected number of steps to come back to v, estimated and exact.

    Splits v so the arrival copy v1 is the unique absorbing state and runs
    the absorption estimator from the departure copy. The exact value
    reported is 1 / pi_v from the original chain's stationary distribution
    (the rerouted-chain formula inside absorption_time agrees; the tests
    cross-check the two).

    Raises:
        ValueError: the chain must be irreducible.
    """
    if not is_irreducible(chain):
        raise ValueError("return time is defined for irreducible chains")
    pi = stationary_distribution(chain)
    one = Fraction(1) if chain.mode == RATIONAL else 1.0
    exact = one / pi[v]
    split, v0, _v1 = split_vertex(chain, v)
    est = absorption_time(split, v0, N)
    return AbsorptionEstimate(est.b_N, N, exact, abs(est.b_N - exact))


# ---------------------------------------------------------------------------
# per-N sweeps (one run, every prefix)


def _profile(Ns, estimates, exact):
    entries = []
    sup = None
    for N, a in zip(Ns, estimates):
        dev = abs(a - exact)
        nd = dev * N
        entries.append((int(N), dev, nd))
        if sup is None or nd > sup:
            sup = nd
    return DiscrepancyProfile(entries, sup, list(estimates), exact)


def hitting_profile(
    chain: MarkovChain, v: int, u: int, N_max: int
) -> DiscrepancyProfile:
    """a_N for target u at every N in 1..N_max, from a single run."""
    rer, trace, new_index, U = _rerouted_run(chain, v, N_max)
    exact = hitting_oracle(chain, v)[u]
    counts = _cumulative_counts(trace.fired, rer.chain.n)
    denom = np.zeros(N_max, dtype=np.int64)
    for w in U:
        if w in new_index:
            denom += counts[new_index[w]]
    numer = (
        counts[new_index[u]]
        if u in new_index
        else np.zeros(N_max, dtype=np.int64)
    )
    rational = chain.mode == RATIONAL
    estimates = [
        (Fraction(int(a), int(d)) if rational else a / d) if d else
        (Fraction(0) if rational else 0.0)
        for a, d in zip(numer, denom)
    ]
    return _profile(range(1, N_max + 1), estimates, exact)


def absorption_profile(
    chain: MarkovChain, v: int, N_max: int, exact: Optional[Scalar] = None
) -> DiscrepancyProfile:
    """b_N at every N in 1..N_max, from a single run."""
    rer, trace, new_index, _U = _rerouted_run(chain, v, N_max)
    if exact is None:
        exact = _absorption_oracle(rer)
    counts = _cumulative_counts(trace.fired, rer.chain.n)
    denom = np.zeros(N_max, dtype=np.int64)
    for w in rer.absorbing_images:
        denom += counts[w]
    rational = chain.mode == RATIONAL
    estimates = []
    for N, d in enumerate(denom, start=1):
        if d:
            b = Fraction(N, int(d)) - 1
        else:
            b = Fraction(0)
        estimates.append(b if rational else float(b))
    return _profile(range(1, N_max + 1), estimates, exact)


def escape_profile(
    chain: MarkovChain, v: int, u: int, N_max: int
) -> DiscrepancyProfile:
    """Escape probability sweep (see escape_probability)."""
    if u == v:
        raise UEqualsV("escape probability needs u != v")
    if not is_irreducible(chain):
        raise ValueError("escape probability is defined for irreducible chains")
    split, v0, _v1 = split_vertex(chain, v)
    return hitting_profile(make_absorbing(split, u), v0, u, N_max)


def return_time_profile(chain: MarkovChain, v: int, N_max: int) -> DiscrepancyProfile:
    """Return time sweep (see expected_return_time)."""
    if not is_irreducible(chain):
        raise ValueError("return time is defined for irreducible chains")
    pi = stationary_distribution(chain)
    one = Fraction(1) if chain.mode == RATIONAL else 1.0
    split, v0, _v1 = split_vertex(chain, v)
    return absorption_profile(split, v0, N_max, exact=one / pi[v])
