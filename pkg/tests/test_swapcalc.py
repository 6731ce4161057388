import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbqsdc import checks, qcore, swapcalc
from cbqsdc.qcore import BELL_INDICES, BELL_NAMES, ENCODINGS, GHZ_INDICES, Basis, GhzIndex, PauliEncoding
from cbqsdc.roles import PartyRole

bell_labels = st.sampled_from(BELL_INDICES)
ghz_labels = st.sampled_from(GHZ_INDICES)
encodings = st.sampled_from(ENCODINGS)
PHI_P, PHI_M, PSI_P, PSI_M = BELL_INDICES


def _name(b):
    return BELL_NAMES[b]


def test_group_table_matches_oracle(oracle):
    for a, b in itertools.product(BELL_INDICES, repeat=2):
        members = sorted(f"{_name(x)},{_name(y)}" for x, y in swapcalc.group_members(swapcalc.swap_group(a, b)))
        assert members == oracle["swap_supports"][f"{_name(a)},{_name(b)}"]


def test_groups_partition_outcome_pairs():
    seen = [p for g in swapcalc.SWAP_GROUPS for p in swapcalc.group_members(g)]
    assert len(seen) == len(set(seen)) == 16


@given(bell_labels, bell_labels)
def test_group_is_index_xor(a, b):
    g = swapcalc.swap_group(a, b)
    assert g.g == 2 * (a.x ^ b.x) + (a.z ^ b.z)


@given(bell_labels, bell_labels)
def test_outcome_group_is_outcome_xor(a, b):
    g = swapcalc.group_of_outcomes(a, b)
    assert g.g == 2 * (a.x ^ b.x) + (a.z ^ b.z)


def test_example_encoding_and_readout():
    # initials (phi+, phi-), Alice sends 00 on pair i, Bob sends 01 on pair j
    ei = swapcalc.encode_index(PHI_P, PauliEncoding(0, 0))
    ej = swapcalc.encode_index(PHI_M, PauliEncoding(0, 1))
    assert (ei, ej) == (PHI_P, PHI_P)
    assert swapcalc.swap_group(ei, ej) == swapcalc.SwapGroup(0)
    # psi+ on Alice's side forces psi+ on Bob's
    assert [b for a, b in swapcalc.group_members(0) if a == PSI_P] == [PSI_P]


def test_sigma_y_row_sign():
    sign, si, sj = swapcalc.ALICE_ENCODING_TABLE[PauliEncoding(1, 1)][0]
    assert (si, sj) == (PSI_M, PHI_P) and sign == -1


def test_encoding_tables_verified_exactly():
    assert checks.check_encoding_tables(exact_sign=True).ok


@given(bell_labels, bell_labels, encodings, encodings)
def test_decode_peer_round_trip(ii, jj, ea, eb):
    out = swapcalc.group_members(swapcalc.swap_group(swapcalc.encode_index(ii, ea), swapcalc.encode_index(jj, eb)))
    oa, ob = sorted(out)[0]
    assert swapcalc.decode_peer(ii, jj, ea, PartyRole.ALICE, oa, ob) == eb
    assert swapcalc.decode_peer(ii, jj, eb, PartyRole.BOB, oa, ob) == ea


def test_decode_peer_rejects_other_roles():
    with pytest.raises(ValueError):
        swapcalc.decode_peer(PHI_P, PHI_P, PauliEncoding(0, 0), PartyRole.ELENA, PHI_P, PHI_P)


@given(ghz_labels, st.integers(0, 2), encodings)
def test_ghz_index_algebra_matches_state_vectors(idx, pos, enc):
    got = qcore.apply_pauli(qcore.make_ghz(idx), pos, enc)
    assert qcore.same_state(got, qcore.make_ghz(swapcalc.encode_ghz_index(idx, pos, enc)))


@given(bell_labels, bell_labels)
def test_exact_readout_matches_state_vector(a, b):
    exact = swapcalc.readout_distribution(((Basis.BELL, a), (Basis.BELL, b)), ((Basis.BELL, (0, 2)), (Basis.BELL, (1, 3))))
    assert all(isinstance(p, Fraction) for p in exact.values())
    numeric = checks.swap_distribution(a, b)
    assert set(exact) == set(numeric)
    for k, p in exact.items():
        assert float(p) == pytest.approx(numeric[k], abs=1e-12)


def test_readout_must_partition_qubits():
    with pytest.raises(ValueError):
        swapcalc.readout_distribution(((Basis.BELL, PHI_P),), ((Basis.Z, (0,)),))


def test_ghz_table_rows_verified():
    table = swapcalc.ghz_swap_table()
    assert len(table) == 8
    for row in table:
        assert checks.check_ghz_row(row), row
        assert swapcalc.same_row_up_to_phase(row, swapcalc.derive_ghz_swap_row(row.left, row.right))


@given(ghz_labels, ghz_labels)
def test_every_ghz_pair_swaps_into_four_terms(left, right):
    row = swapcalc.derive_ghz_swap_row(left, right)
    assert len(row.terms) == 4


def test_ghz_bell_printed_pairing_verified():
    res = swapcalc.ghz_bell_decomposition_check(GhzIndex(0, 0, 0), GhzIndex(0, 0, 0))
    assert res.ok and len(res.observed) == 8
    assert all(p == pytest.approx(1 / 8, abs=1e-12) for p in res.observed.values())


def test_ghz_bell_adbecf_pairing_differs():
    res = swapcalc.ghz_bell_decomposition_check(GhzIndex(0, 0, 0), GhzIndex(0, 0, 0), swapcalc.ADBECF_BELL_PAIRING)
    assert not res.ok
    assert res.first_mismatch == (PHI_P, PSI_P, PHI_P)


def test_ghz_bell_all_pairs():
    assert checks.check_ghz_bell_all_pairs().ok


def test_all_table_checks_pass():
    results = checks.all_checks()
    assert all(c.ok for c in results), [c.name for c in results if not c.ok]
    assert all(d["status"] == "verified" for d in (c.to_dict() for c in results))
