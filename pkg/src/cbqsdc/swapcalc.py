"""Index algebra for Pauli encoding and entanglement swapping.

Everything here works on labels, not amplitudes. The only arithmetic on kets
is an exact integer expansion (`readout_amplitudes`) used to derive swap
supports for arbitrary layouts; it shares no code with :mod:`cbqsdc.qcore`,
which serves as the independent oracle in the test suite.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

from .qcore import (
    BELL_INDICES,
    ENCODINGS,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    Basis,
    BellIndex,
    GhzIndex,
    PauliEncoding,
)
from .roles import PartyRole

# ---------------------------------------------------------------------------
# Pauli encoding on labels
# ---------------------------------------------------------------------------


def encode_index(initial: BellIndex, e: PauliEncoding) -> BellIndex:
    """Label after ``sigma_x^p sigma_z^q`` acts on either qubit of a Bell pair."""
    return BellIndex(initial.x ^ e.p, initial.z ^ e.q)


# X on GHZ qubit 0 flips j, on qubit 1 flips i, on qubit 2 flips both.
_GHZ_X_FLIP = {0: (0, 1), 1: (1, 0), 2: (1, 1)}


def encode_ghz_index(initial: GhzIndex, position: int, e: PauliEncoding) -> GhzIndex:
    di, dj = _GHZ_X_FLIP[position] if e.p else (0, 0)
    return GhzIndex(initial.i ^ di, initial.j ^ dj, initial.k ^ e.q)


def encode_label(kind: Basis, initial, position: int, e: PauliEncoding):
    if kind is Basis.BELL:
        return encode_index(initial, e)
    return encode_ghz_index(initial, position, e)


def xor_encoding(a: PauliEncoding, b: PauliEncoding) -> PauliEncoding:
    return PauliEncoding(a.p ^ b.p, a.q ^ b.q)


# ---------------------------------------------------------------------------
# Swap groups C0..C3
# ---------------------------------------------------------------------------


class SwapGroup(NamedTuple):
    g: int

    def __str__(self) -> str:
        return f"C{self.g}"


SWAP_GROUPS = tuple(SwapGroup(g) for g in range(4))

# Rows: state of pair i, columns: state of pair j, both in phi+, phi-, psi+, psi- order.
SWAP_GROUP_TABLE = (
    (0, 1, 2, 3),
    (1, 0, 3, 2),
    (2, 3, 0, 1),
    (3, 2, 1, 0),
)

# State of (pair i, pair j) after encoding, starting from |X>|X> for X in column order.
# Entries are (sign, pair_i, pair_j); (1, 1) means sigma_x sigma_z.
_P, _M, _S, _T = PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS
ALICE_ENCODING_TABLE = {  # Alice acts on her qubit of pair i
    PauliEncoding(0, 0): ((1, _P, _P), (1, _M, _M), (1, _S, _S), (1, _T, _T)),
    PauliEncoding(0, 1): ((1, _M, _P), (1, _P, _M), (1, _T, _S), (1, _S, _T)),
    PauliEncoding(1, 0): ((1, _S, _P), (-1, _T, _M), (1, _P, _S), (-1, _M, _T)),
    PauliEncoding(1, 1): ((-1, _T, _P), (1, _S, _M), (-1, _M, _S), (1, _P, _T)),
}
BOB_ENCODING_TABLE = {  # Bob acts on his qubit of pair j
    PauliEncoding(0, 0): ((1, _P, _P), (1, _M, _M), (1, _S, _S), (1, _T, _T)),
    PauliEncoding(0, 1): ((1, _P, _M), (1, _M, _P), (-1, _S, _T), (-1, _T, _S)),
    PauliEncoding(1, 0): ((1, _P, _S), (1, _M, _T), (1, _S, _P), (1, _T, _M)),
    PauliEncoding(1, 1): ((1, _P, _T), (1, _M, _S), (-1, _S, _M), (-1, _T, _P)),
}

# (Alice outcome, Bob outcome) members of each group, as printed.
GROUP_MEMBERS = {
    0: ((PHI_PLUS, PHI_PLUS), (PHI_MINUS, PHI_MINUS), (PSI_PLUS, PSI_PLUS), (PSI_MINUS, PSI_MINUS)),
    1: ((PHI_MINUS, PHI_PLUS), (PHI_PLUS, PHI_MINUS), (PSI_PLUS, PSI_MINUS), (PSI_MINUS, PSI_PLUS)),
    2: ((PHI_PLUS, PSI_PLUS), (PHI_MINUS, PSI_MINUS), (PSI_PLUS, PHI_PLUS), (PSI_MINUS, PHI_MINUS)),
    3: ((PHI_MINUS, PSI_PLUS), (PHI_PLUS, PSI_MINUS), (PSI_MINUS, PHI_PLUS), (PSI_PLUS, PHI_MINUS)),
}
_OUTCOME_GROUP = {pair: SwapGroup(g) for g, pairs in GROUP_MEMBERS.items() for pair in pairs}


def swap_group(pair_i: BellIndex, pair_j: BellIndex) -> SwapGroup:
    """Group of the swap outcomes for encoded pair states, looked up in the swap table."""
    return SwapGroup(SWAP_GROUP_TABLE[BELL_INDICES.index(pair_i)][BELL_INDICES.index(pair_j)])


def group_members(g: SwapGroup | int) -> frozenset[tuple[BellIndex, BellIndex]]:
    return frozenset(GROUP_MEMBERS[int(g[0] if isinstance(g, SwapGroup) else g)])


def group_of_outcomes(out_a: BellIndex, out_b: BellIndex) -> SwapGroup:
    return _OUTCOME_GROUP[(BellIndex(*out_a), BellIndex(*out_b))]


def decode_peer(
    initial_i: BellIndex,
    initial_j: BellIndex,
    own: PauliEncoding,
    own_role: PartyRole,
    out_a: BellIndex,
    out_b: BellIndex,
) -> PauliEncoding:
    """Recover the other user's encoding from the announced outcomes.

    Alice encodes on pair ``i`` and Bob on pair ``j``. Each of the four
    candidate peer encodings is run forward through the swap table; the one whose
    group matches the observed outcomes is returned.
    """
    if own_role not in (PartyRole.ALICE, PartyRole.BOB):
        raise ValueError(f"decode_peer is defined for ALICE/BOB, not {own_role}")
    observed = group_of_outcomes(out_a, out_b)
    matches = []
    for cand in ENCODINGS:
        alice, bob = (own, cand) if own_role is PartyRole.ALICE else (cand, own)
        if swap_group(encode_index(initial_i, alice), encode_index(initial_j, bob)) == observed:
            matches.append(cand)
    if len(matches) != 1:
        raise RuntimeError(f"ambiguous decode: {matches}")
    return matches[0]


# ---------------------------------------------------------------------------
# Exact integer ket expansion
# ---------------------------------------------------------------------------

# Both bases have two +-1 terms per vector, so every norm^2 is a power of two.


def ket_terms(kind: Basis, idx) -> dict[tuple[int, ...], int]:
    if kind is Basis.BELL:
        x, z = idx
        return {(0, x): 1, (1, 1 - x): (-1) ** z}
    if kind is Basis.GHZ:
        i, j, k = idx
        return {(j, i, 0): 1, (1 - j, 1 - i, 1): (-1) ** k}
    if kind is Basis.Z:
        return {(int(idx),): 1}
    if kind is Basis.X:
        return {(0,): 1, (1,): (-1) ** int(idx)}
    raise ValueError(kind)


def _norm2(kind: Basis) -> int:
    return 1 if kind is Basis.Z else 2


def _labels(kind: Basis):
    if kind is Basis.BELL:
        return BELL_INDICES
    if kind is Basis.GHZ:
        return tuple(GhzIndex(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1))
    return (0, 1)


def product_terms(states: Sequence[tuple[Basis, object]]) -> dict[tuple[int, ...], int]:
    out = {(): 1}
    for kind, idx in states:
        terms = ket_terms(kind, idx)
        out = {a + b: ca * cb for a, ca in out.items() for b, cb in terms.items()}
    return out


@lru_cache(maxsize=None)
def readout_amplitudes(
    states: tuple[tuple[Basis, object], ...],
    readout: tuple[tuple[Basis, tuple[int, ...]], ...],
) -> dict[tuple, tuple[int, int]]:
    """Nonzero outcome amplitudes as ``(overlap, norm2)``: amplitude = overlap / sqrt(norm2).

    ``readout`` lists joint measurements whose qubits must partition every
    qubit of the product state.
    """
    ket = product_terms(states)
    n = len(next(iter(ket)))
    covered = sorted(q for _, qs in readout for q in qs)
    if covered != list(range(n)):
        raise ValueError(f"readout {readout} does not partition {n} qubits")
    norm2 = math.prod(_norm2(k) for k, _ in states) * math.prod(_norm2(k) for k, _ in readout)
    out = {}
    for labels in itertools.product(*(_labels(k) for k, _ in readout)):
        total = 0
        for bits, c in ket.items():
            for (kind, qs), lab in zip(readout, labels):
                c *= ket_terms(kind, lab).get(tuple(bits[q] for q in qs), 0)
                if not c:
                    break
            total += c
        if total:
            out[labels] = (total, norm2)
    return out


def readout_distribution(states, readout) -> dict[tuple, Fraction]:
    return {k: Fraction(o * o, n) for k, (o, n) in readout_amplitudes(tuple(states), tuple(readout)).items()}


def outcome_support(states, readout) -> frozenset[tuple]:
    return frozenset(readout_amplitudes(tuple(states), tuple(readout)))


# ---------------------------------------------------------------------------
# GHZ x GHZ swapping
# ---------------------------------------------------------------------------


def _g(s: str) -> GhzIndex:
    return GhzIndex(*(int(c) for c in s))


class GhzSwapRow(NamedTuple):
    left: GhzIndex
    right: GhzIndex
    terms: tuple[tuple[GhzIndex, GhzIndex, int], ...]


# Qubits a..f are 0..5; the two measured triples are (a, d, b) and (e, c, f).
ADBECF_READOUT = ((Basis.GHZ, (0, 3, 1)), (Basis.GHZ, (4, 2, 5)))

_PRINTED_ROWS = {
    "000": (("000", "000", 1), ("100", "100", 1), ("001", "001", 1), ("101", "101", -1)),
    "001": (("000", "001", 1), ("001", "000", 1), ("100", "101", 1), ("101", "100", -1)),
    "010": (("100", "000", 1), ("101", "001", 1), ("000", "100", 1), ("001", "101", -1)),
    "011": (("101", "000", 1), ("100", "001", 1), ("000", "101", 1), ("001", "100", -1)),
    "100": (("000", "010", 1), ("001", "011", 1), ("100", "110", 1), ("101", "111", -1)),
    "101": (("000", "011", 1), ("001", "010", 1), ("100", "111", 1), ("101", "110", -1)),
    "110": (("100", "010", 1), ("101", "011", 1), ("000", "110", 1), ("001", "111", -1)),
    "111": (("100", "011", 1), ("101", "010", 1), ("000", "111", 1), ("001", "110", -1)),
}


def ghz_swap_table() -> list[GhzSwapRow]:
    """The eight printed rows ``phi000 x phi_r``, each with four equal-weight terms."""
    return [
        GhzSwapRow(_g("000"), _g(r), tuple((_g(a), _g(b), s) for a, b, s in terms))
        for r, terms in _PRINTED_ROWS.items()
    ]


def derive_ghz_swap_row(left: GhzIndex, right: GhzIndex) -> GhzSwapRow:
    """Compute a swap row from the exact expansion (signs are the amplitude signs)."""
    amps = readout_amplitudes(((Basis.GHZ, left), (Basis.GHZ, right)), ADBECF_READOUT)
    terms = tuple(sorted((a, b, 1 if o > 0 else -1) for (a, b), (o, _) in amps.items()))
    return GhzSwapRow(GhzIndex(*left), GhzIndex(*right), terms)


def same_row_up_to_phase(a: GhzSwapRow, b: GhzSwapRow) -> bool:
    ta = {(x, y): s for x, y, s in a.terms}
    tb = {(x, y): s for x, y, s in b.terms}
    if a[:2] != b[:2] or ta.keys() != tb.keys():
        return False
    ratios = {ta[k] * tb[k] for k in ta}
    return len(ratios) == 1


# ---------------------------------------------------------------------------
# GHZ -> Bell decomposition
# ---------------------------------------------------------------------------

# Pairs (a,b), (c,d), (e,f): the pairing that reproduces the printed expansion.
PRINTED_BELL_PAIRING = ((0, 1), (2, 3), (4, 5))
# Pairs (a,d), (b,e), (c,f) from the literal "adbecf" regrouping; yields a different set.
ADBECF_BELL_PAIRING = ((0, 3), (1, 4), (2, 5))

PRINTED_GHZ_BELL_DECOMPOSITION = (
    (PHI_PLUS, PHI_PLUS, PHI_PLUS, 1),
    (PHI_MINUS, PHI_PLUS, PHI_MINUS, 1),
    (PHI_PLUS, PHI_MINUS, PHI_MINUS, 1),
    (PHI_MINUS, PHI_MINUS, PHI_PLUS, 1),
    (PHI_PLUS, PSI_PLUS, PHI_PLUS, 1),
    (PHI_MINUS, PSI_MINUS, PHI_PLUS, 1),
    (PHI_PLUS, PSI_MINUS, PHI_MINUS, -1),
    (PHI_MINUS, PSI_PLUS, PHI_MINUS, -1),
)


def bell_pairing_readout(pairing: Sequence[tuple[int, int]]):
    return tuple((Basis.BELL, tuple(p)) for p in pairing)


def ghz_bell_expansion(left: GhzIndex, right: GhzIndex, pairing=PRINTED_BELL_PAIRING):
    """Exact ``{(b1, b2, b3): amplitude}`` of ``|phi_left>|phi_right>`` in a Bell-pair basis."""
    amps = readout_amplitudes(((Basis.GHZ, left), (Basis.GHZ, right)), bell_pairing_readout(pairing))
    return {k: o / math.sqrt(n) for k, (o, n) in amps.items()}


@dataclass
class DecompositionCheck:
    left: GhzIndex
    right: GhzIndex
    pairing: tuple[tuple[int, int], ...]
    observed: dict[tuple[BellIndex, ...], float]
    expected: frozenset[tuple[BellIndex, ...]]
    first_mismatch: tuple[BellIndex, ...] | None

    @property
    def ok(self) -> bool:
        return self.first_mismatch is None


def ghz_bell_decomposition_check(
    left: GhzIndex, right: GhzIndex, pairing: Sequence[tuple[int, int]] = PRINTED_BELL_PAIRING
) -> DecompositionCheck:
    """Bell-measure three pairs of ``|phi_left>|phi_right>`` on the state-vector engine and
    compare against the printed expansion (for ``phi000 x phi000``) or the exact expansion.

    Every observed triple must be expected and carry probability 1/8, and every
    expected triple must be observed.
    """
    from . import qcore

    left, right = GhzIndex(*left), GhzIndex(*right)
    pairing = tuple(tuple(p) for p in pairing)
    state = qcore.tensor(qcore.make_ghz(left), qcore.make_ghz(right))
    observed = qcore.joint_distribution(state, [(Basis.BELL, p) for p in pairing])
    observed = {k: v for k, v in observed.items() if v > 1e-12}
    if left == (0, 0, 0) and right == (0, 0, 0):
        expected = frozenset(t[:3] for t in PRINTED_GHZ_BELL_DECOMPOSITION)
    else:
        expected = frozenset(ghz_bell_expansion(left, right, PRINTED_BELL_PAIRING))
    mismatch = None
    for triple in sorted(set(observed) | expected):
        if triple not in expected or abs(observed.get(triple, 0.0) - 1 / 8) > 1e-12:
            mismatch = triple
            break
    return DecompositionCheck(left, right, pairing, observed, expected, mismatch)
