import random
from fractions import Fraction

import pytest

from hungerlab import (
    NonUniqueStationary,
    UEqualsV,
    ZeroSteps,
    absorption_profile,
    absorption_time,
    discrepancy_profile,
    escape_probability,
    escape_profile,
    expected_return_time,
    hitting_distribution,
    hitting_oracle,
    hitting_profile,
    normalized_firing_vector,
    parse_chain,
    return_time_profile,
    run,
    split_vertex,
    stationary_distribution,
)
from oracles import (
    absorption_solve_float,
    first_transient,
    hitting_solve_float,
    random_absorbing_chain,
)

F = Fraction

HALF_COIN = '{"mode": "rational", "P": [["1/2", "1/2"], ["0", "1"]]}'


# ---------------------------------------------------------------------------
# normalized firing vectors and the stationary sweep


def test_normalized_firing_vector(reflecting3):
    assert normalized_firing_vector(run(reflecting3, None, 3)) == (
        F(1, 3),
        F(1, 3),
        F(1, 3),
    )
    assert normalized_firing_vector(run(reflecting3, None, 4)) == (
        F(1, 2),
        F(1, 4),
        F(1, 4),
    )
    with pytest.raises(ZeroSteps):
        normalized_firing_vector(run(reflecting3, None, 0))


def test_discrepancy_profile_reflecting(reflecting3):
    prof = discrepancy_profile(reflecting3, None, 120)
    assert prof.exact == (F(1, 3), F(1, 3), F(1, 3))
    assert prof.sup_Nd == F(4, 3)
    for N, dev, nd in prof.entries:
        # counts follow the floor formula, so N*deviation is 0 or 4/3
        assert nd == (F(0) if N % 3 == 0 else F(4, 3))
        assert nd == dev * N
    # counts at N=100: floors of (N+2)/3, (N+1)/3, N/3
    assert prof.estimates[99] == (F(34, 100), F(33, 100), F(33, 100))
    assert prof.entries[0] == (1, F(4, 3), F(4, 3))


def test_discrepancy_profile_matches_prefix_runs(reflecting3):
    prof = discrepancy_profile(reflecting3, None, 25)
    for N in (1, 7, 18, 25):
        assert prof.estimates[N - 1] == normalized_firing_vector(
            run(reflecting3, None, N)
        )


def test_discrepancy_profile_validation(reflecting3, two_sinks5):
    with pytest.raises(ValueError):
        discrepancy_profile(reflecting3, None, 0)
    with pytest.raises(NonUniqueStationary):
        discrepancy_profile(two_sinks5, None, 10)


def test_discrepancy_profile_float_mode():
    doc = (
        '{"mode": "float", "P": [[0.5, 0.5, 0.0],'
        " [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]]}"
    )
    prof = discrepancy_profile(parse_chain(doc), None, 60)
    assert prof.sup_Nd == pytest.approx(4 / 3)
    assert prof.entries[59][1] == pytest.approx(0.0, abs=1e-12)


def test_discrepancy_profile_general_start(basin_demo3):
    h0 = (F(1, 2), F(-1, 2), F(0))
    prof = discrepancy_profile(basin_demo3, h0, 400)
    pi = stationary_distribution(basin_demo3)
    assert prof.exact == pi
    # deviations shrink like 1/N: the tail entry sits under sup/N
    N, dev, nd = prof.entries[-1]
    assert nd <= prof.sup_Nd
    assert dev <= prof.sup_Nd / N


# ---------------------------------------------------------------------------
# hitting probabilities


def test_hitting_oracle_five_state_walk(absorbing_walk5):
    z = hitting_oracle(absorbing_walk5, 2)
    assert z == {0: F(15, 31), 4: F(16, 31)}
    # boundary rows of the solve
    assert hitting_oracle(absorbing_walk5, 0) == {0: F(1), 4: F(0)}
    assert hitting_oracle(absorbing_walk5, 4) == {0: F(0), 4: F(1)}


def test_hitting_oracle_matches_float_solve():
    rng = random.Random(71)
    for _ in range(12):
        chain = random_absorbing_chain(rng, rng.choice((3, 4, 5)))
        v = first_transient(chain)
        exact = hitting_oracle(chain, v)
        approx = hitting_solve_float(chain, v)
        for u, p in exact.items():
            assert float(p) == pytest.approx(approx[u], abs=1e-9)


def test_hitting_distribution_two_sinks(two_sinks5):
    ests = hitting_distribution(two_sinks5, 1, 600)
    assert [e.target for e in ests] == [0, 3]
    assert {e.target: e.exact for e in ests} == {0: F(2, 3), 3: F(1, 3)}
    assert sum(e.a_N for e in ests) == 1
    for e in ests:
        assert e.deviation == abs(e.a_N - e.exact)
        assert e.deviation * e.N <= 6  # O(1/N), generous constant


def test_hitting_distribution_unreachable_sink(two_sinks5):
    # from v5 only v4 can absorb; v1 is dropped by the reroute
    ests = {e.target: e for e in hitting_distribution(two_sinks5, 4, 300)}
    assert ests[0].exact == 0
    assert ests[0].a_N == 0
    assert ests[0].deviation == 0
    assert ests[3].exact == 1


def test_hitting_zero_denominator_convention():
    chain = parse_chain(HALF_COIN)
    ests = hitting_distribution(chain, 0, 1)
    assert len(ests) == 1
    assert ests[0].a_N == 0  # no absorbing visit yet, defined as 0
    assert ests[0].exact == 1
    est = absorption_time(chain, 0, 1)
    assert est.b_N == 0


def test_hitting_profile_matches_single_shot(two_sinks5):
    prof = hitting_profile(two_sinks5, 1, 0, 240)
    one_shot = {e.target: e for e in hitting_distribution(two_sinks5, 1, 240)}
    assert prof.estimates[-1] == one_shot[0].a_N
    assert prof.exact == F(2, 3)
    assert prof.sup_Nd == max(nd for _, _, nd in prof.entries)
    assert [N for N, _, _ in prof.entries] == list(range(1, 241))


def test_hitting_profile_stays_bounded(two_sinks5):
    prof = hitting_profile(two_sinks5, 1, 0, 2000)
    nds = [nd for _, _, nd in prof.entries]
    burn = nds[100:]
    # no upward trend: the last tenth never beats the earlier sup
    assert max(burn[-len(burn) // 10 :]) <= max(burn[: -len(burn) // 10])


# ---------------------------------------------------------------------------
# absorption and return times


def test_absorption_time_two_sinks(two_sinks5):
    est = absorption_time(two_sinks5, 1, 600)
    assert est.exact == 2
    assert est.deviation == abs(est.b_N - 2)
    assert est.deviation * est.N <= 12


def test_absorption_time_from_v5(two_sinks5):
    est = absorption_time(two_sinks5, 4, 400)
    assert est.exact == 2  # t = 1 + t/2 on the lazy tail


def test_absorption_exact_matches_float_solve():
    rng = random.Random(72)
    for _ in range(12):
        chain = random_absorbing_chain(rng, rng.choice((3, 4, 5)))
        v = first_transient(chain)
        est = absorption_time(chain, v, 50)
        assert float(est.exact) == pytest.approx(
            absorption_solve_float(chain, v), abs=1e-9
        )


def test_absorption_profile_matches_single_shot(absorbing_walk5):
    prof = absorption_profile(absorbing_walk5, 2, 300)
    est = absorption_time(absorbing_walk5, 2, 300)
    assert prof.estimates[-1] == est.b_N
    assert prof.exact == est.exact


def test_escape_probability_reflecting(reflecting3):
    far = escape_probability(reflecting3, 0, 2, 400)
    near = escape_probability(reflecting3, 0, 1, 400)
    assert far.exact == F(1, 4)
    assert near.exact == F(1, 2)
    assert far.deviation * far.N <= 8
    assert near.deviation * near.N <= 8


def test_escape_validation(reflecting3, absorbing_walk5):
    with pytest.raises(UEqualsV):
        escape_probability(reflecting3, 1, 1, 10)
    with pytest.raises(ValueError):
        escape_probability(absorbing_walk5, 1, 2, 10)
    with pytest.raises(UEqualsV):
        escape_profile(reflecting3, 1, 1, 10)


def test_expected_return_time(reflecting3, basin_demo3):
    est = expected_return_time(reflecting3, 0, 300)
    assert est.exact == 3
    assert est.deviation * est.N <= 9
    pi = stationary_distribution(basin_demo3)
    for v in range(3):
        assert expected_return_time(basin_demo3, v, 60).exact == 1 / pi[v]


def test_return_time_formulas_agree(reflecting3, basin_demo3):
    # absorption oracle on the split chain reproduces 1 / pi_v
    for chain in (reflecting3, basin_demo3):
        pi = stationary_distribution(chain)
        for v in range(chain.n):
            split, v0, _v1 = split_vertex(chain, v)
            est = absorption_time(split, v0, 40)
            assert est.exact == 1 / pi[v]


def test_return_time_validation(absorbing_walk5):
    with pytest.raises(ValueError):
        expected_return_time(absorbing_walk5, 1, 10)
    with pytest.raises(ValueError):
        return_time_profile(absorbing_walk5, 1, 10)


def test_sweep_profiles_are_consistent(reflecting3):
    esc = escape_profile(reflecting3, 0, 2, 150)
    assert esc.exact == F(1, 4)
    assert esc.estimates[-1] == escape_probability(reflecting3, 0, 2, 150).a_N
    ret = return_time_profile(reflecting3, 0, 150)
    assert ret.exact == 3
    assert ret.estimates[-1] == expected_return_time(reflecting3, 0, 150).b_N
