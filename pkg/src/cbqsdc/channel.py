"""Quantum channel bookkeeping: prepared states, who holds which qubit, and qubit movement."""
from __future__ import annotations

from dataclasses import dataclass, field

from .qcore import Basis, StateVector

# A qubit label is (holder, state position, qubit number). Holders are the short
# party names "A", "B", "C"; Eve's ancillas use "E" with her own running number.
Label = tuple[str, int, int]


@dataclass
class Slot:
    position: int
    kind: Basis
    state: StateVector
    labels: list[Label]

    def index_of(self, label: Label) -> int:
        return self.labels.index(label)

    def qubits_of(self, holder: str) -> list[Label]:
        return [lab for lab in self.labels if lab[0] == holder]


@dataclass(frozen=True)
class Movement:
    step: int
    position: int
    qubit: int
    to: str


@dataclass
class Channel:
    slots: list[Slot]
    trace: list[Movement] = field(default_factory=list)
    eve: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def n_qubits(self) -> int:
        return sum(len([lab for lab in s.labels if lab[0] != "E"]) for s in self.slots)
