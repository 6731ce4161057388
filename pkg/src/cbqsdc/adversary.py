"""Eavesdropper taps on the distribution lines and detection-rate estimation.

Eve touches qubits only while they travel from the controller to a user, so
every tap runs inside step 1. Ancillas are tagged with holder ``"E"`` and are
never addressed by any party's measurement.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import binomtest

from . import qcore
from .channel import Channel, Slot
from .qcore import Basis


class AttackKind(enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"
    CONTROLLED_NOT = "cnot"
    ENTANGLE_MEASURE = "entangle-measure"


class Line(enum.Enum):
    ALICE_LINE = "alice"
    BOB_LINE = "bob"
    BOTH = "both"

    @property
    def holders(self) -> frozenset[str]:
        return {Line.ALICE_LINE: frozenset("A"), Line.BOB_LINE: frozenset("B"), Line.BOTH: frozenset("AB")}[self]


@dataclass(frozen=True)
class AttackModel:
    kind: AttackKind = AttackKind.NONE
    alpha: complex = 1.0
    beta: complex = 0.0
    target: Line = Line.BOB_LINE
    # Forces Eve's intercept basis; None means a fair coin per qubit.
    eve_basis: Basis | None = None

    def __post_init__(self):
        if self.kind is AttackKind.ENTANGLE_MEASURE:
            if abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1) > 1e-12:
                raise ValueError("entangle-measure attack needs |alpha|^2 + |beta|^2 = 1")
        if self.eve_basis not in (None, Basis.Z, Basis.X):
            raise ValueError("Eve intercepts in the Z or X basis")

    @classmethod
    def entangle_measure(cls, beta2: float, target: Line = Line.BOB_LINE) -> AttackModel:
        if not 0 <= beta2 <= 1:
            raise ValueError(f"|beta|^2 must lie in [0, 1], got {beta2}")
        return cls(AttackKind.ENTANGLE_MEASURE, np.sqrt(1 - beta2), np.sqrt(beta2), target)

    @property
    def beta2(self) -> float:
        return float(abs(self.beta) ** 2) if self.kind is AttackKind.ENTANGLE_MEASURE else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "beta2": self.beta2,
            "target": self.target.value,
            "eve_basis": None if self.eve_basis is None else self.eve_basis.value,
        }


@dataclass
class EveRecord:
    position: int
    qubit: tuple
    action: str
    ancilla: tuple | None = None
    basis: str | None = None
    outcome: int | None = None


def _targets(channel: Channel, line: Line):
    for slot in channel.slots:
        for lab in list(slot.labels):
            if lab[0] in line.holders:
                yield slot, lab


def _add_ancilla(slot: Slot) -> tuple:
    n_e = sum(1 for lab in slot.labels if lab[0] == "E")
    label = ("E", slot.position, n_e)
    slot.state = qcore.tensor(slot.state, qcore.basis_state([0]))
    slot.labels.append(label)
    return label


def tap_intercept_resend(channel: Channel, line: Line, rng: np.random.Generator, basis: Basis | None = None) -> Channel:
    """Measure every qubit on ``line`` in Z or X and forward the matching eigenstate."""
    for slot, lab in _targets(channel, line):
        b = basis if basis is not None else (Basis.Z, Basis.X)[int(rng.integers(2))]
        pos = slot.index_of(lab)
        rec, rest = qcore.measure(slot.state, qcore.MeasurementRecord(b, (pos,)), rng)
        slot.state = qcore.insert_qubit(rest, pos, qcore.eigenstate(b, rec.outcome))
        channel.eve.append(EveRecord(slot.position, lab, "intercept-resend", basis=b.value, outcome=rec.outcome))
    return channel


def tap_controlled_not(channel: Channel, line: Line) -> tuple[Channel, list[EveRecord]]:
    """CNOT from each passing qubit onto a fresh ``|0>`` ancilla."""
    records = []
    for slot, lab in _targets(channel, line):
        anc = _add_ancilla(slot)
        slot.state = qcore.apply_cnot(slot.state, slot.index_of(lab), slot.index_of(anc))
        records.append(EveRecord(slot.position, lab, "cnot", ancilla=anc))
    channel.eve.extend(records)
    return channel, records


def entangle_measure_unitary(alpha: complex, beta: complex) -> np.ndarray:
    """Two-qubit unitary on (ancilla, data) taking ``|0>|i>`` to ``alpha|0>|i> + beta|1>|i^1>``.

    The ancilla is rotated to ``alpha|0> + beta|1>`` and then controls a bit flip,
    so it ends up flagging whether the data qubit was flipped.
    """
    rot = np.array([[alpha, -np.conj(beta)], [beta, np.conj(alpha)]], dtype=complex)
    anc_cnot = qcore.CNOT  # ancilla is the first (control) qubit
    return anc_cnot @ np.kron(rot, np.eye(2))


def tap_entangle_measure(channel: Channel, line: Line, alpha: complex, beta: complex) -> tuple[Channel, list[EveRecord]]:
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-12:
        raise ValueError("invalid (alpha, beta)")
    u = entangle_measure_unitary(alpha, beta)
    records = []
    for slot, lab in _targets(channel, line):
        anc = _add_ancilla(slot)
        slot.state = qcore.apply_unitary(slot.state, (slot.index_of(anc), slot.index_of(lab)), u)
        records.append(EveRecord(slot.position, lab, "entangle-measure", ancilla=anc))
    channel.eve.extend(records)
    return channel, records


def apply_attack(channel: Channel, attack: AttackModel, rng: np.random.Generator) -> Channel:
    if attack.kind is AttackKind.INTERCEPT_RESEND:
        tap_intercept_resend(channel, attack.target, rng, attack.eve_basis)
    elif attack.kind is AttackKind.CONTROLLED_NOT:
        tap_controlled_not(channel, attack.target)
    elif attack.kind is AttackKind.ENTANGLE_MEASURE:
        tap_entangle_measure(channel, attack.target, attack.alpha, attack.beta)
    return channel


# ---------------------------------------------------------------------------
# Detection-rate estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rate:
    successes: int
    trials: int
    low: float
    high: float

    @property
    def value(self) -> float:
        return self.successes / self.trials if self.trials else float("nan")

    def to_dict(self) -> dict:
        return {"rate": self.value, "count": self.successes, "n": self.trials, "ci95": [self.low, self.high]}


def wilson(successes: int, trials: int, confidence: float = 0.95) -> Rate:
    if trials == 0:
        return Rate(0, 0, 0.0, 1.0)
    ci = binomtest(successes, trials).proportion_ci(confidence, method="wilson")
    return Rate(successes, trials, float(ci.low), float(ci.high))


@dataclass(frozen=True)
class DetectionEstimate:
    per_check: Rate
    by_basis: dict[str, Rate]
    abort: Rate

    def to_dict(self) -> dict:
        return {
            "per_check": self.per_check.to_dict(),
            "by_basis": {b: r.to_dict() for b, r in self.by_basis.items()},
            "abort": self.abort.to_dict(),
        }


def estimate_detection_rate(cfg, attack: AttackModel | None = None, trials: int = 100) -> DetectionEstimate:
    """Monte Carlo of distribution plus channel verification over ``trials`` seeded runs.

    Returns the pooled per-check error rate (overall and per basis) and the
    fraction of runs that abort, each with a 95% Wilson interval.
    """
    from . import protocol

    if trials < 1:
        raise ValueError("trials must be >= 1")
    if attack is not None:
        cfg = replace(cfg, attack=attack)
    errors = checks = aborts = 0
    per_basis = {"Z": [0, 0], "X": [0, 0]}
    for seed in protocol.trial_seeds(cfg.seed, trials):
        verdict = protocol.run_checks_only(replace(cfg, seed=seed))
        errors += verdict.n_errors
        checks += verdict.n_checks
        aborts += verdict.aborted
        for b, (n, e) in verdict.by_basis.items():
            per_basis[b][0] += e
            per_basis[b][1] += n
    return DetectionEstimate(
        per_check=wilson(errors, checks),
        by_basis={b: wilson(e, n) for b, (e, n) in per_basis.items()},
        abort=wilson(aborts, trials),
    )
