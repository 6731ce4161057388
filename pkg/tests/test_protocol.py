from collections import Counter
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbqsdc import protocol, qcore, swapcalc
from cbqsdc.adversary import AttackKind, AttackModel
from cbqsdc.protocol import (
    LAYOUTS,
    WITHHELD,
    MessageKind,
    RunConfig,
    Scenario,
    Transcript,
    layout_decodability,
    run_scenario,
)
from cbqsdc.qcore import BELL_INDICES, GHZ_INDICES, BellIndex
from cbqsdc.roles import PartyRole

A, B, C = PartyRole.ALICE, PartyRole.BOB, PartyRole.ELENA
PHI_P, PHI_M, PSI_P, PSI_M = BELL_INDICES


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(n_message_pairs=0)
    with pytest.raises(ValueError):
        RunConfig(n_check=-1)
    with pytest.raises(ValueError):
        RunConfig(error_threshold=1.5)
    with pytest.raises(ValueError):
        RunConfig(network_layout="c")
    assert RunConfig(n_message_pairs=3, n_check=5).n_states == 11


def test_distribution_counts_and_routing():
    t = Transcript("bell")
    cfg = RunConfig(n_message_pairs=1, n_check=0, seed=3)
    channel, initials = protocol.step1_distribute(cfg, np.random.default_rng(0), t)
    assert len(channel) == 2 and len(initials) == 2
    assert all(isinstance(i, BellIndex) for i in initials)
    assert [m.kind for m in t.messages] == [MessageKind.RECEIPT_ACK] * 2
    assert {mv.to for mv in channel.trace} == {"A", "B"}


def test_network_distribution_uses_ghz():
    cfg = RunConfig(scenario=Scenario.NETWORK, n_message_pairs=1, n_check=2)
    channel, initials = protocol.step1_distribute(cfg, np.random.default_rng(1), Transcript("network-a"))
    assert len(initials) == 4 and all(i in GHZ_INDICES for i in initials)
    assert {mv.to for mv in channel.trace} == {"A", "B", "C"}


def test_initial_labels_are_uniform():
    cfg = RunConfig(n_message_pairs=1)
    rng = np.random.default_rng(11)
    counts = Counter()
    for _ in range(5000):
        _, initials = protocol.step1_distribute(cfg, rng, Transcript("bell"))
        counts.update(initials)
    for b in BELL_INDICES:
        assert counts[b] / 10_000 == pytest.approx(0.25, abs=0.02)


def test_no_attack_checks_are_clean():
    for scenario in Scenario:
        r = run_scenario(RunConfig(scenario=scenario, n_message_pairs=2, n_check=40, seed=5))
        assert r.verdict.error_rate == 0 and not r.verdict.aborted
        assert r.verdict.n_checks == 40


def test_too_many_checks_rejected():
    cfg = RunConfig(n_check=3)
    t = Transcript("bell")
    channel, initials = protocol.step1_distribute(cfg, np.random.default_rng(0), t)
    with pytest.raises(ValueError):
        protocol.step2_verify_channel(replace(cfg, n_check=10), channel, np.random.default_rng(0), t, initials)


def test_intercept_resend_aborts():
    cfg = RunConfig(n_check=200, attack=AttackModel(AttackKind.INTERCEPT_RESEND), seed=2)
    r = run_scenario(cfg)
    assert r.verdict.aborted
    assert r.verdict.error_rate == pytest.approx(0.25, abs=0.07)
    assert r.decoded is None and r.decode_ok is None
    aborts = [m for m in r.transcript.messages if m.kind is MessageKind.ABORT]
    assert len(aborts) == 1 and aborts[0].sender is A


def test_entangle_measure_z_checks():
    cfg = RunConfig(n_check=2000, check_bases="Z", error_threshold=1.0, attack=AttackModel.entangle_measure(0.25), seed=4)
    assert run_scenario(cfg).verdict.error_rate == pytest.approx(0.25, abs=0.03)


def test_equation_example_decodes():
    cfg = RunConfig(n_message_pairs=1)
    r = run_scenario(cfg, secrets={A: (0, 0), B: (0, 1)}, initial_states=[PHI_P, PHI_M])
    assert r.decoded[A][B] == (0, 1)
    assert r.decoded[B][A] == (0, 0)
    outs = [m.payload["outcome"] for m in r.transcript.messages if m.kind is MessageKind.MEASUREMENT_RESULT]
    assert outs[0] == outs[1]  # group C0: both outcomes equal


def test_encoding_matches_tables():
    # pq = 11 on phi+ of pair i gives -psi- up to global phase
    cfg = RunConfig(n_message_pairs=1)
    t = Transcript("bell")
    channel, initials = protocol.step1_distribute(cfg, np.random.default_rng(0), t, initial_states=[PHI_P, PHI_P])
    groups = protocol.assign_groups(cfg, [])
    protocol.step3_encode(cfg, channel, groups, {A: (1, 1), B: (0, 0)})
    assert qcore.same_state(channel.slots[0].state, qcore.make_bell(PSI_M))
    assert qcore.same_state(channel.slots[1].state, qcore.make_bell(PHI_P))


def test_zero_secret_leaves_channel_unchanged():
    cfg = RunConfig(n_message_pairs=2)
    t = Transcript("bell")
    channel, _ = protocol.step1_distribute(cfg, np.random.default_rng(3), t)
    before = [s.state.amplitudes.copy() for s in channel.slots]
    protocol.step3_encode(cfg, channel, protocol.assign_groups(cfg, []), {A: (0,) * 4, B: (0,) * 4})
    assert all(np.array_equal(a, s.state.amplitudes) for a, s in zip(before, channel.slots))


def test_wrong_secret_length():
    with pytest.raises(ValueError):
        run_scenario(RunConfig(n_message_pairs=2), secrets={A: (0, 1), B: (0, 1, 1, 0)})


def test_outcomes_lie_in_predicted_group():
    for seed in range(50):
        r = run_scenario(RunConfig(n_message_pairs=2, seed=seed))
        inits = protocol.announced_initials(r.transcript.public_view())
        outs = protocol.public_outcomes(r.transcript.public_view())
        for (ii, jj), o, (ma, mb) in zip(inits, outs, zip(r.transcript.private[A]["messages"], r.transcript.private[B]["messages"])):
            g = swapcalc.swap_group(swapcalc.encode_index(ii, qcore.PauliEncoding(*ma)), swapcalc.encode_index(jj, qcore.PauliEncoding(*mb)))
            assert (o[A], o[B]) in swapcalc.group_members(g)


def test_bit_costs():
    r = run_scenario(RunConfig(n_message_pairs=3, n_check=4))
    costs = Counter()
    for m in r.transcript.messages:
        costs[m.kind] += m.bit_cost
    assert costs[MessageKind.MEASUREMENT_RESULT] == 2 * 2 * 3
    assert costs[MessageKind.PERMISSION_ANNOUNCE] == 4 * 3
    assert costs[MessageKind.RECEIPT_ACK] == costs[MessageKind.CHECK_BASES_RESULTS] == 0
    assert r.b_k == 24 and r.q_k == 12 and r.m_u == 12

    g = run_scenario(RunConfig(scenario=Scenario.GHZ_BIDIRECTIONAL, n_message_pairs=1))
    assert (g.m_u, g.q_k, g.b_k) == (6, 6, 12)


def test_qubits_move_only_in_step_one():
    r = run_scenario(RunConfig(scenario=Scenario.NETWORK, n_message_pairs=2, n_check=3, seed=8))
    assert {mv.step for mv in r.channel.trace} == {1}


def test_permission_withheld():
    cfg = RunConfig(n_message_pairs=2, permission_granted=False, seed=6)
    r = run_scenario(cfg)
    assert r.decoded == WITHHELD and r.decode_ok is None
    kinds = [m.kind for m in r.transcript.messages]
    assert MessageKind.PERMISSION_ANNOUNCE not in kinds
    # everything before the announcement is identical to the granted run
    granted = run_scenario(replace(cfg, permission_granted=True))
    pub = [m.to_record() for m in granted.transcript.messages if m.kind is not MessageKind.PERMISSION_ANNOUNCE]
    assert pub == [m.to_record() for m in r.transcript.messages]
    assert protocol.decode_party(r.transcript.public_view(), A, r.transcript.private[A]) == WITHHELD


def test_replay_reproduces_decoding():
    r = run_scenario(RunConfig(scenario=Scenario.GHZ_BIDIRECTIONAL, n_message_pairs=3, seed=12))
    text = r.transcript.to_jsonl()
    back = Transcript.from_jsonl(r.transcript.layout, text)
    assert back.to_jsonl() == text
    for role in (A, B):
        assert protocol.decode_party(back.public_view(), role, r.transcript.private[role]) == r.decoded[role]


def test_public_view_has_no_private_records():
    r = run_scenario(RunConfig(seed=1))
    text = r.transcript.to_jsonl()
    assert "secret" not in text and "messages" not in text


def test_report_is_deterministic():
    cfg = RunConfig(scenario=Scenario.NETWORK, n_message_pairs=2, n_check=4, seed=21,
                    attack=AttackModel(AttackKind.INTERCEPT_RESEND), error_threshold=1.0)
    assert run_scenario(cfg).to_dict() == run_scenario(cfg).to_dict()


def test_bell_even_split_decodes():
    for seed in range(20):
        assert run_scenario(RunConfig(n_message_pairs=2, alice_on_odd=False, seed=seed)).decode_ok


def test_ghz_check_selection_keeps_full_groups():
    for seed in range(20):
        cfg = RunConfig(scenario=Scenario.GHZ_BIDIRECTIONAL, n_message_pairs=2, n_check=5, seed=seed)
        r = run_scenario(cfg)
        assert len(r.assignments) == 2
        for ga in r.assignments:
            assert ga.positions[0] % 2 == 0 and ga.positions[1] % 2 == 1
        used = {p for ga in r.assignments for p in ga.positions}
        assert used.isdisjoint(c.position for c in r.verdict.checks)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(0, 4))
def test_two_user_round_trip(seed, n, c):
    for scenario in (Scenario.BELL_BIDIRECTIONAL, Scenario.GHZ_BIDIRECTIONAL):
        assert run_scenario(RunConfig(scenario=scenario, n_message_pairs=n, n_check=c, seed=seed)).decode_ok


def test_decodability_report():
    assert layout_decodability("bell").decodable
    assert layout_decodability("ghz").decodable
    full = layout_decodability("ghz-full")
    assert not full.decodable
    assert full.parties[A].recoverable[B] == [True, False, True, False]
    for name in ("network-a", "network-b"):
        rep = layout_decodability(name)
        assert not rep.decodable
        for role, party in rep.parties.items():
            for peer, bits in party.recoverable.items():
                assert bits == [True, False]


def test_network_decodes_recoverable_bits_only():
    for layout in ("a", "b"):
        r = run_scenario(RunConfig(scenario=Scenario.NETWORK, network_layout=layout, n_message_pairs=2, seed=3))
        assert r.decode_ok is False
        for role, peers in r.decoded.items():
            for peer, bits in peers.items():
                assert bits[0::2] == r.secrets[peer][0::2]
                assert all(b is None for b in bits[1::2])


def test_layout_forward_matches_state_vector():
    layout = LAYOUTS["ghz"]
    rng = np.random.default_rng(0)
    for _ in range(20):
        inits = tuple(GHZ_INDICES[int(i)] for i in rng.integers(8, size=2))
        msgs = {A: tuple(int(b) for b in rng.integers(2, size=3)), B: tuple(int(b) for b in rng.integers(2, size=3))}
        encoded = layout.forward(inits, msgs)
        state = qcore.tensor(qcore.make_ghz(inits[0]), qcore.make_ghz(inits[1]))
        for role in (A, B):
            for (s, q), enc in zip(layout.slots[role], layout.encodings(role, msgs[role])):
                state = qcore.apply_pauli(state, 3 * s + q, enc)
        want = qcore.tensor(qcore.make_ghz(encoded[0]), qcore.make_ghz(encoded[1]))
        assert qcore.same_state(state, want)
