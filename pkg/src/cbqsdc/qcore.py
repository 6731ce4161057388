"""Exact state-vector engine for small qubit systems.

Qubit 0 is the most significant bit of a basis label, so ``|abc>`` lives at
index ``4a + 2b + c``. Every entangled basis used by the protocol (Bell and
the eight GHZ states) is available as a joint measurement basis.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence, Union

import numpy as np

ATOL = 1e-12
_R2 = 1 / np.sqrt(2)


class BellIndex(NamedTuple):
    """Bell label: ``x`` is the bit-flip bit, ``z`` the phase bit."""

    x: int
    z: int

    def __str__(self) -> str:
        return BELL_NAMES[self]


class GhzIndex(NamedTuple):
    """GHZ label ``phi_{ijk}``; ``k`` is the phase bit."""

    i: int
    j: int
    k: int

    def __str__(self) -> str:
        return f"phi{self.i}{self.j}{self.k}"


class PauliEncoding(NamedTuple):
    """``sigma_x^p sigma_z^q`` (sigma_z acts first)."""

    p: int
    q: int


PHI_PLUS = BellIndex(0, 0)
PHI_MINUS = BellIndex(0, 1)
PSI_PLUS = BellIndex(1, 0)
PSI_MINUS = BellIndex(1, 1)
BELL_NAMES = {PHI_PLUS: "phi+", PHI_MINUS: "phi-", PSI_PLUS: "psi+", PSI_MINUS: "psi-"}
BELL_INDICES = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)
GHZ_INDICES = tuple(GhzIndex(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1))
ENCODINGS = tuple(PauliEncoding(p, q) for p in (0, 1) for q in (0, 1))


class Basis(enum.Enum):
    Z = "Z"
    X = "X"
    BELL = "BELL"
    GHZ = "GHZ"

    @property
    def arity(self) -> int:
        return _ARITY[self]


_ARITY = {Basis.Z: 1, Basis.X: 1, Basis.BELL: 2, Basis.GHZ: 3}

Outcome = Union[int, BellIndex, GhzIndex]


@dataclass(frozen=True)
class MeasurementRecord:
    basis: Basis
    qubits: tuple[int, ...]
    outcome: Outcome | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.basis.arity:
            raise ValueError(
                f"{self.basis.value} measurement needs {self.basis.arity} qubit(s), got {self.qubits}"
            )


class StateVector:
    """Normalized amplitude vector over ``n_qubits`` qubits. Treated as immutable."""

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes, *, check: bool = True):
        amps = np.array(amplitudes, dtype=complex)
        n = int(amps.size).bit_length() - 1
        if amps.ndim != 1 or amps.size != 1 << n:
            raise ValueError(f"amplitude vector length {amps.size} is not a power of two")
        if check and abs(np.vdot(amps, amps).real - 1.0) > ATOL:
            raise ValueError("state is not normalized")
        amps.setflags(write=False)
        self.amplitudes = amps
        self.n_qubits = n

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={np.round(self.amplitudes, 6)})"

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def overlap(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: StateVector) -> float:
        """``|<self|other>|``; equals 1 iff the states agree up to global phase."""
        return abs(self.overlap(other))


def same_state(a: StateVector, b: StateVector, atol: float = ATOL) -> bool:
    return a.n_qubits == b.n_qubits and abs(a.fidelity(b) - 1.0) <= atol


def _normalized(amps: np.ndarray) -> StateVector:
    return StateVector(amps / np.sqrt(np.vdot(amps, amps).real), check=False)


def basis_state(bits: Sequence[int]) -> StateVector:
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[int("".join(str(b) for b in bits) or "0", 2)] = 1
    return StateVector(amps)


@lru_cache(maxsize=None)
def make_bell(idx: BellIndex) -> StateVector:
    """``(|0,x> + (-1)^z |1,1-x>) / sqrt2``."""
    x, z = idx
    amps = np.zeros(4, dtype=complex)
    amps[x] = _R2
    amps[2 + (1 - x)] = (-1) ** z * _R2
    return StateVector(amps)


@lru_cache(maxsize=None)
def make_ghz(idx: GhzIndex) -> StateVector:
    """``(|j,i,0> + (-1)^k |1-j,1-i,1>) / sqrt2``."""
    i, j, k = idx
    amps = np.zeros(8, dtype=complex)
    amps[4 * j + 2 * i] = _R2
    amps[4 * (1 - j) + 2 * (1 - i) + 1] = (-1) ** k * _R2
    return StateVector(amps)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    return _tensor(a.amplitudes.tobytes(), b.amplitudes.tobytes())


@lru_cache(maxsize=4096)
def _tensor(ra: bytes, rb: bytes) -> StateVector:
    return StateVector(np.kron(np.frombuffer(ra, dtype=complex), np.frombuffer(rb, dtype=complex)), check=False)


_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _R2
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def pauli_matrix(e: PauliEncoding) -> np.ndarray:
    return np.linalg.matrix_power(_SX, e.p) @ np.linalg.matrix_power(_SZ, e.q)


def _check_qubits(n: int, qubits: Sequence[int]) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < n for q in qubits):
        raise ValueError(f"invalid qubit list {qubits} for a {n}-qubit state")
    return qubits


def apply_unitary(s: StateVector, qubits: Sequence[int], u: np.ndarray) -> StateVector:
    """Apply a ``2^k x 2^k`` matrix to the listed qubits (first listed = MSB of ``u``)."""
    qubits = _check_qubits(s.n_qubits, qubits)
    u = np.asarray(u, dtype=complex)
    return _apply(s.amplitudes.tobytes(), s.n_qubits, qubits, u.tobytes(), u.shape[0])


@lru_cache(maxsize=4096)
def _apply(raw: bytes, n: int, qubits: tuple[int, ...], uraw: bytes, dim: int) -> StateVector:
    k = len(qubits)
    u = np.frombuffer(uraw, dtype=complex).reshape(dim, dim)
    t = np.moveaxis(np.frombuffer(raw, dtype=complex).reshape((2,) * n), qubits, range(k))
    t = (u @ t.reshape(1 << k, -1)).reshape((2,) * n)
    return StateVector(np.moveaxis(t, range(k), qubits).reshape(-1), check=False)


def apply_pauli(s: StateVector, qubit: int, e: PauliEncoding) -> StateVector:
    if not 0 <= qubit < s.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {s.n_qubits} qubits")
    if e == (0, 0):
        return s
    return apply_unitary(s, (qubit,), pauli_matrix(e))


def apply_cnot(s: StateVector, control: int, target: int) -> StateVector:
    return apply_unitary(s, (control, target), CNOT)


def eigenstate(basis: Basis, bit: int) -> StateVector:
    """Single-qubit eigenstate: ``|0>,|1>`` for Z, ``|+>,|->`` for X."""
    return StateVector(_BASIS_ROWS[basis][bit])


def insert_qubit(s: StateVector, position: int, qubit: StateVector) -> StateVector:
    """Tensor a fresh single qubit into ``position`` of ``s``."""
    if not 0 <= position <= s.n_qubits:
        raise ValueError(f"cannot insert at {position}")
    return _insert(s.amplitudes.tobytes(), s.n_qubits, position, qubit.amplitudes.tobytes())


@lru_cache(maxsize=4096)
def _insert(raw: bytes, n: int, position: int, qraw: bytes) -> StateVector:
    amps, q = np.frombuffer(raw, dtype=complex), np.frombuffer(qraw, dtype=complex)
    joined = np.kron(amps, q).reshape((2,) * (n + 1))
    return StateVector(np.moveaxis(joined, -1, position).reshape(-1), check=False)


def _bell_rows() -> np.ndarray:
    return np.array([make_bell(b).amplitudes for b in BELL_INDICES])


def _ghz_rows() -> np.ndarray:
    return np.array([make_ghz(g).amplitudes for g in GHZ_INDICES])


# Row m of each matrix is the basis vector for outcome label m.
_BASIS_ROWS = {
    Basis.Z: np.eye(2, dtype=complex),
    Basis.X: _H.copy(),
    Basis.BELL: _bell_rows(),
    Basis.GHZ: _ghz_rows(),
}
_CONJ_ROWS = {b: m.conj() for b, m in _BASIS_ROWS.items()}


def outcome_label(basis: Basis, m: int) -> Outcome:
    if basis is Basis.BELL:
        return BELL_INDICES[m]
    if basis is Basis.GHZ:
        return GHZ_INDICES[m]
    return m


def outcome_row(basis: Basis, outcome: Outcome) -> int:
    if basis is Basis.BELL:
        return BELL_INDICES.index(BellIndex(*outcome))
    if basis is Basis.GHZ:
        return GHZ_INDICES.index(GhzIndex(*outcome))
    if outcome not in (0, 1):
        raise ValueError(f"bad outcome {outcome!r}")
    return int(outcome)


@lru_cache(maxsize=65536)
def _branches(raw: bytes, n: int, qubits: tuple[int, ...], basis: Basis):
    amps = np.frombuffer(raw, dtype=complex)
    k = len(qubits)
    t = np.moveaxis(amps.reshape((2,) * n), qubits, range(k)).reshape(1 << k, -1)
    post = _CONJ_ROWS[basis] @ t
    probs = np.einsum("ij,ij->i", post.conj(), post).real
    probs.setflags(write=False)
    post.setflags(write=False)
    # normalized post-measurement states, built once per cached branch
    states = tuple(StateVector(row / np.sqrt(p), check=False) if p > ATOL**2 else None for row, p in zip(post, probs))
    return probs, post, states


def _resolve(s: StateVector, basis: Basis, qubits: Sequence[int]):
    qubits = _check_qubits(s.n_qubits, qubits)
    if len(qubits) != basis.arity:
        raise ValueError(f"{basis.value} measurement needs {basis.arity} qubit(s), got {qubits}")
    return _branches(s.amplitudes.tobytes(), s.n_qubits, qubits, basis)


def born_distribution(s: StateVector, basis: Basis, qubits: Sequence[int]) -> dict[Outcome, float]:
    """Exact outcome probabilities for one joint measurement; no randomness."""
    probs = _resolve(s, basis, qubits)[0]
    return {outcome_label(basis, m): float(p) for m, p in enumerate(probs)}


def project(s: StateVector, basis: Basis, qubits: Sequence[int], outcome: Outcome):
    """Probability of ``outcome`` and the renormalized state of the unmeasured qubits.

    The state is ``None`` when the outcome is impossible or no qubits remain
    (in the latter case a 0-qubit scalar state is returned instead).
    """
    probs, _, states = _resolve(s, basis, qubits)
    m = outcome_row(basis, outcome)
    return float(probs[m]), states[m]


def _sample_row(probs: np.ndarray, rng: np.random.Generator) -> int:
    # inverse CDF over at most 8 outcomes; a plain loop beats numpy here
    u = rng.random() * float(probs.sum())
    last = 0
    for m, p in enumerate(probs.tolist()):
        if p > 0:
            last = m
            u -= p
            if u < 0:
                return m
    return last


def measure(s: StateVector, rec_template: MeasurementRecord, rng: np.random.Generator):
    """Sample a projective measurement; the measured qubits are removed from the result."""
    probs, _, states = _resolve(s, rec_template.basis, rec_template.qubits)
    m = _sample_row(probs, rng)
    rec = MeasurementRecord(rec_template.basis, rec_template.qubits, outcome_label(rec_template.basis, m))
    return rec, states[m]


def remaining_positions(n: int, removed: Sequence[int]) -> dict[int, int]:
    """Map old qubit positions to new ones after removing ``removed``."""
    gone = set(removed)
    kept = [q for q in range(n) if q not in gone]
    return {q: i for i, q in enumerate(kept)}


def joint_distribution(
    s: StateVector, measurements: Sequence[tuple[Basis, Sequence[int]]]
) -> dict[tuple[Outcome, ...], float]:
    """Exact joint distribution of several disjoint measurements (positions refer to ``s``)."""
    if not measurements:
        return {(): 1.0}
    (basis, qubits), rest = measurements[0], measurements[1:]
    remap = remaining_positions(s.n_qubits, qubits)
    rest = [(b, tuple(remap[q] for q in qs)) for b, qs in rest]
    out: dict[tuple[Outcome, ...], float] = {}
    for outcome, p in born_distribution(s, basis, qubits).items():
        if p <= ATOL**2:
            continue
        if rest:
            _, post = project(s, basis, qubits, outcome)
            for tail, q in joint_distribution(post, rest).items():
                if p * q > 0:
                    out[(outcome, *tail)] = p * q
        else:
            out[(outcome,)] = p
    return out


def sample(
    s: StateVector,
    measurements: Sequence[tuple[Basis, Sequence[int]]],
    rng: np.random.Generator,
    shots: int,
) -> list[tuple[Outcome, ...]]:
    """Draw ``shots`` joint outcomes from the exact Born distribution in one batch."""
    dist = joint_distribution(s, measurements)
    keys = list(dist)
    probs = np.array([dist[k] for k in keys])
    picks = rng.choice(len(keys), size=shots, p=probs / probs.sum())
    return [keys[i] for i in picks]
