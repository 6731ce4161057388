from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbqsdc.metrics import (
    COMPETITORS,
    PUBLISHED_OWN,
    LeakageTarget,
    comparison_table,
    efficiency,
    exact_mutual_information,
    leakage_posterior,
    measured_row,
    mutual_information,
)
from cbqsdc.protocol import RunConfig, Scenario, run_scenario
from cbqsdc.qcore import BELL_INDICES
from cbqsdc.roles import PartyRole

A, B = PartyRole.ALICE, PartyRole.BOB
PHI_P, PHI_M, PSI_P, PSI_M = BELL_INDICES


@pytest.mark.parametrize("counts,eta1,eta2", [((4, 4, 8), 33.33, 100.0), ((4, 8, 4), 33.33, 50.0), ((2, 6, 3), 22.22, 33.33), ((0, 5, 7), 0.0, 0.0)])
def test_efficiency_values(counts, eta1, eta2):
    e = efficiency(*counts)
    assert (e.eta1_percent, e.eta2_percent) == (eta1, eta2)


@given(st.integers(0, 100), st.integers(1, 100), st.integers(0, 100))
def test_efficiency_definition(m, q, b):
    e = efficiency(m, q, b)
    assert e.eta1 == Fraction(m, q + b) and e.eta2 == Fraction(m, q)


def test_efficiency_rejects_zero_qubits():
    with pytest.raises(ValueError):
        efficiency(4, 0, 8)


def test_competitor_rows():
    rows = {r.protocol: r for r in COMPETITORS}
    assert (rows["Hassanpour2015"].m_u, rows["Hassanpour2015"].q_k, rows["Hassanpour2015"].b_k) == (2, 6, 3)
    assert (rows["Mohapatra2017"].eta1_percent, rows["Mohapatra2017"].eta2_percent) == (33.33, 50.0)
    for r in COMPETITORS:
        e = efficiency(r.m_u, r.q_k, r.b_k)
        assert (e.eta1_percent, e.eta2_percent) == (r.eta1_percent, r.eta2_percent)


def test_measured_row_matches_published():
    r = run_scenario(RunConfig(n_message_pairs=1, n_check=0, seed=7))
    assert measured_row(r) == PUBLISHED_OWN
    assert [row.protocol for row in comparison_table(r)][-1] == "this protocol"


def test_posterior_with_permission():
    r = run_scenario(RunConfig(seed=3))
    view = r.transcript.public_view()
    for target in (LeakageTarget.ALICE_SECRET, LeakageTarget.BOB_SECRET):
        post = leakage_posterior(view, target, include_permission=True)
        assert post.support == 4 and post.max_deviation_from_uniform() == 0
    joint = leakage_posterior(view, LeakageTarget.JOINT, include_permission=True)
    assert joint.support == 4
    # the announced initials and outcomes pin the XOR of the two encodings
    xors = {(a[0] ^ b[0], a[1] ^ b[1]) for (a, b), p in joint.table.items() if p > 0}
    assert len(xors) == 1
    assert sum(joint.table.values()) == 1


def test_posterior_without_permission_is_uniform():
    r = run_scenario(RunConfig(seed=3, permission_granted=False))
    view = r.transcript.public_view()
    for target in LeakageTarget:
        if target is LeakageTarget.ELENA_SECRET:
            continue
        post = leakage_posterior(view, target)
        assert post.conditioning == "outcomes only"
        assert post.max_deviation_from_uniform() == 0


def test_posterior_rejects_missing_group():
    view = run_scenario(RunConfig(seed=1)).transcript.public_view()
    with pytest.raises(ValueError):
        leakage_posterior(view, LeakageTarget.ALICE_SECRET, group=3)
    with pytest.raises(ValueError):
        leakage_posterior(view, LeakageTarget.ELENA_SECRET)


def test_exact_mutual_information_matches_oracle(oracle):
    want = oracle["bell_mutual_information"]
    for target, key in ((LeakageTarget.ALICE_SECRET, "alice"), (LeakageTarget.BOB_SECRET, "bob"), (LeakageTarget.JOINT, "joint")):
        assert exact_mutual_information("bell", target, True) == pytest.approx(want[key]["with_permission"], abs=1e-12)
        assert exact_mutual_information("bell", target, False) == pytest.approx(want[key]["without_permission"], abs=1e-12)


def test_ensemble_mutual_information():
    reports = [run_scenario(RunConfig(seed=s)) for s in range(30)]
    assert mutual_information(reports, LeakageTarget.ALICE_SECRET) == pytest.approx(0, abs=1e-12)
    assert mutual_information(reports, LeakageTarget.JOINT) == pytest.approx(2, abs=1e-12)
    assert mutual_information(reports, LeakageTarget.JOINT, include_permission=False) == pytest.approx(0, abs=1e-12)


def test_ghz_reduced_alphabet_leaks_one_bit_per_user():
    assert exact_mutual_information("ghz", LeakageTarget.ALICE_SECRET, True) == pytest.approx(1, abs=1e-12)
    assert exact_mutual_information("ghz", LeakageTarget.ALICE_SECRET, False) == pytest.approx(0, abs=1e-12)


def test_network_user_secret_hidden_from_outsiders():
    r = run_scenario(RunConfig(scenario=Scenario.NETWORK, seed=2))
    post = leakage_posterior(r.transcript.public_view(), LeakageTarget.ELENA_SECRET)
    assert post.max_deviation_from_uniform() == 0
