"""Five-step controlled bidirectional protocol over an in-process message bus.

Scenarios
---------
``bell``      two users, groups of two Bell pairs, 2 bits each way per group.
``ghz``       two users, groups of two GHZ triples laid out ``a0 a1 b0 | a2 b1 b2``.
``network``   three users, groups of two GHZ triples, one qubit of each per user.

Only step 1 moves qubits. Everything after that is local operations plus
classical messages, which are charged to the classical-bit budget as follows:
a measurement result costs 2 bits (Bell) or 3 bits (GHZ) per party per group,
and the controller's permission announcement costs the bits needed to name
the two initial states of each group. Acknowledgements and check-phase
traffic cost nothing.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import qcore, swapcalc
from .adversary import AttackModel, apply_attack
from .channel import Channel, Movement, Slot
from .qcore import BELL_INDICES, GHZ_INDICES, Basis, BellIndex, GhzIndex, PauliEncoding
from .roles import PartyRole

A, B, C = PartyRole.ALICE, PartyRole.BOB, PartyRole.ELENA
CH = PartyRole.CONTROLLER
WITHHELD = "WITHHELD"


class Scenario(enum.Enum):
    BELL_BIDIRECTIONAL = "bell"
    GHZ_BIDIRECTIONAL = "ghz"
    NETWORK = "network"


class MessageKind(enum.Enum):
    RECEIPT_ACK = "RECEIPT_ACK"
    CHECK_POSITIONS = "CHECK_POSITIONS"
    CHECK_BASES_RESULTS = "CHECK_BASES_RESULTS"
    CHECK_INITIAL_STATES = "CHECK_INITIAL_STATES"
    MEASUREMENT_RESULT = "MEASUREMENT_RESULT"
    PERMISSION_ANNOUNCE = "PERMISSION_ANNOUNCE"
    ABORT = "ABORT"


# ---------------------------------------------------------------------------
# Layouts
# ---------------------------------------------------------------------------

QubitRef = tuple[int, int]  # (state within group, qubit within state)


@dataclass(frozen=True, eq=False)
class Layout:
    """Where each party's qubits sit, where they encode and what they measure.

    ``alphabet[role]`` gives, for every encoding slot, the message-bit indices
    feeding the sigma_x and sigma_z exponents (``None`` pins an exponent to 0).
    """

    name: str
    kind: Basis
    routing: tuple[tuple[PartyRole, ...], tuple[PartyRole, ...]]
    slots: Mapping[PartyRole, tuple[QubitRef, ...]]
    alphabet: Mapping[PartyRole, tuple[tuple[int | None, int | None], ...]]
    readout: tuple[tuple[PartyRole, Basis, tuple[QubitRef, ...]], ...]

    @property
    def size(self) -> int:
        return 2 if self.kind is Basis.BELL else 3

    @property
    def users(self) -> tuple[PartyRole, ...]:
        return tuple(role for role, _, _ in self.readout)

    @property
    def labels(self):
        return BELL_INDICES if self.kind is Basis.BELL else GHZ_INDICES

    def bits(self, role: PartyRole) -> int:
        return 1 + max(b for slot in self.alphabet[role] for b in slot if b is not None)

    def encodings(self, role: PartyRole, message: Sequence[int]) -> tuple[PauliEncoding, ...]:
        if len(message) != self.bits(role):
            raise ValueError(f"{role.value} message needs {self.bits(role)} bits, got {len(message)}")
        return tuple(
            PauliEncoding(0 if p is None else int(message[p]), 0 if q is None else int(message[q]))
            for p, q in self.alphabet[role]
        )

    def messages(self, role: PartyRole):
        return list(itertools.product((0, 1), repeat=self.bits(role)))

    @property
    def mixed_routing(self) -> bool:
        return self.routing[0] != self.routing[1]

    def flat(self, ref: QubitRef) -> int:
        return ref[0] * self.size + ref[1]

    @cached_property
    def flat_readout(self) -> tuple[tuple[Basis, tuple[int, ...]], ...]:
        return tuple((basis, tuple(self.flat(r) for r in refs)) for _, basis, refs in self.readout)

    def outcome_bits(self) -> int:
        return sum(2 if basis is Basis.BELL else 3 for _, basis, _ in self.readout)

    def forward(self, initials: Sequence, messages: Mapping[PartyRole, Sequence[int]]) -> tuple:
        """Labels of the two states after every user has encoded."""
        labels = list(initials)
        for role in self.users:
            for (s, q), enc in zip(self.slots[role], self.encodings(role, messages[role])):
                labels[s] = swapcalc.encode_label(self.kind, labels[s], q, enc)
        return tuple(labels)

    def distribution(self, encoded: Sequence) -> dict[tuple, Fraction]:
        """Exact readout distribution (outcomes in readout order) for encoded labels."""
        return swapcalc.readout_distribution(tuple((self.kind, lab) for lab in encoded), self.flat_readout)

    def candidates(self, role: PartyRole, initials, own: Sequence[int], outcomes: tuple) -> list[dict]:
        """Every assignment of peer messages consistent with the observed outcomes."""
        peers = [r for r in self.users if r != role]
        found = []
        for combo in itertools.product(*(self.messages(p) for p in peers)):
            msgs = dict(zip(peers, combo))
            msgs[role] = tuple(own)
            if outcomes in _support(self.name, self.forward(initials, msgs)):
                found.append(dict(zip(peers, combo)))
        return found


def _layout(name, kind, routing, slots, alphabet, readout) -> Layout:
    return Layout(name, kind, routing, slots, alphabet, readout)


_PQ = ((0, 1),)
LAYOUTS: dict[str, Layout] = {
    "bell": _layout(
        "bell", Basis.BELL, ((A, B), (A, B)),
        {A: ((0, 0),), B: ((1, 1),)}, {A: _PQ, B: _PQ},
        ((A, Basis.BELL, ((0, 0), (1, 0))), (B, Basis.BELL, ((0, 1), (1, 1)))),
    ),
    "bell-even": _layout(
        "bell-even", Basis.BELL, ((A, B), (A, B)),
        {A: ((1, 0),), B: ((0, 1),)}, {A: _PQ, B: _PQ},
        ((A, Basis.BELL, ((0, 0), (1, 0))), (B, Basis.BELL, ((0, 1), (1, 1)))),
    ),
    # a0 a1 b0 | a2 b1 b2; Alice reads (a0, a2, a1), Bob reads (b1, b0, b2), the
    # same triples as the (a,d,b)(e,c,f) regrouping of the printed swap table.
    "ghz": _layout(
        "ghz", Basis.GHZ, ((A, A, B), (A, B, B)),
        {A: ((0, 0), (0, 1)), B: ((1, 1), (1, 2))},
        {A: ((0, 1), (2, None)), B: ((0, 1), (2, None))},
        ((A, Basis.GHZ, ((0, 0), (1, 0), (0, 1))), (B, Basis.GHZ, ((1, 1), (0, 2), (1, 2)))),
    ),
    "ghz-full": _layout(
        "ghz-full", Basis.GHZ, ((A, A, B), (A, B, B)),
        {A: ((0, 0), (0, 1)), B: ((1, 1), (1, 2))},
        {A: ((0, 1), (2, 3)), B: ((0, 1), (2, 3))},
        ((A, Basis.GHZ, ((0, 0), (1, 0), (0, 1))), (B, Basis.GHZ, ((1, 1), (0, 2), (1, 2)))),
    ),
    "network-a": _layout(
        "network-a", Basis.GHZ, ((A, B, C), (A, B, C)),
        {A: ((0, 0),), B: ((1, 1),), C: ((1, 2),)}, {A: _PQ, B: _PQ, C: _PQ},
        ((A, Basis.BELL, ((0, 0), (1, 0))), (B, Basis.BELL, ((0, 1), (1, 1))), (C, Basis.BELL, ((0, 2), (1, 2)))),
    ),
    "network-b": _layout(
        "network-b", Basis.GHZ, ((A, B, C), (A, B, C)),
        {A: ((0, 0),), B: ((0, 1),), C: ((0, 2),)}, {A: _PQ, B: _PQ, C: _PQ},
        ((A, Basis.BELL, ((0, 0), (1, 0))), (B, Basis.BELL, ((0, 1), (1, 1))), (C, Basis.BELL, ((0, 2), (1, 2)))),
    ),
}


@lru_cache(maxsize=None)
def _support(layout_name: str, encoded: tuple) -> frozenset:
    return frozenset(LAYOUTS[layout_name].distribution(encoded))


@dataclass
class PartyDecodability:
    decodable: bool
    # per peer, per message bit: can this party always recover it?
    recoverable: dict[PartyRole, list[bool]]

    def to_dict(self) -> dict:
        return {"decodable": self.decodable, "recoverable_bits": {p.value: r for p, r in self.recoverable.items()}}


@dataclass
class DecodabilityReport:
    layout: str
    parties: dict[PartyRole, PartyDecodability]

    @property
    def decodable(self) -> bool:
        return all(p.decodable for p in self.parties.values())

    def to_dict(self) -> dict:
        return {"layout": self.layout, "decodable": self.decodable, "parties": {r.value: p.to_dict() for r, p in self.parties.items()}}


@lru_cache(maxsize=None)
def layout_decodability(name: str) -> DecodabilityReport:
    """Exhaustive check: for every initial pair, own message and outcome, which peer bits are pinned."""
    layout = LAYOUTS[name]
    parties = {}
    for role in layout.users:
        peers = [r for r in layout.users if r != role]
        recoverable = {p: [True] * layout.bits(p) for p in peers}
        for initials in itertools.product(layout.labels, repeat=2):
            for own in layout.messages(role):
                by_outcome: dict[tuple, list] = {}
                for combo in itertools.product(*(layout.messages(p) for p in peers)):
                    msgs = {**dict(zip(peers, combo)), role: own}
                    for out in _support(name, layout.forward(initials, msgs)):
                        by_outcome.setdefault(out, []).append(combo)
                for combos in by_outcome.values():
                    for n, p in enumerate(peers):
                        for bit in range(layout.bits(p)):
                            if len({c[n][bit] for c in combos}) > 1:
                                recoverable[p][bit] = False
        ok = all(all(r) for r in recoverable.values())
        parties[role] = PartyDecodability(ok, recoverable)
    return DecodabilityReport(name, parties)


# ---------------------------------------------------------------------------
# Configuration, messages, transcript
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario = Scenario.BELL_BIDIRECTIONAL
    n_message_pairs: int = 1
    n_check: int = 0
    error_threshold: float = 0.05
    seed: int = 0
    attack: AttackModel = field(default_factory=AttackModel)
    permission_granted: bool = True
    network_layout: str = "a"
    # Alice encodes on the odd (first) pair of each group, Bob on the even one.
    alice_on_odd: bool = True
    # "ZX" draws a fair coin per check; "Z" or "X" pins the check basis.
    check_bases: str = "ZX"
    # "reduced" sends the 3 bits per user and group that survive GHZ swapping,
    # "full" sends all four printed exponents.
    ghz_alphabet: str = "reduced"

    def __post_init__(self):
        if self.n_message_pairs < 1:
            raise ValueError("n_message_pairs (N) must be >= 1")
        if self.n_check < 0:
            raise ValueError("n_check (c) must be >= 0")
        if not 0 <= self.error_threshold <= 1:
            raise ValueError("error_threshold must lie in [0, 1]")
        if self.network_layout not in ("a", "b"):
            raise ValueError("network_layout is 'a' or 'b'")
        if self.check_bases not in ("ZX", "Z", "X"):
            raise ValueError("check_bases is 'ZX', 'Z' or 'X'")
        if self.ghz_alphabet not in ("reduced", "full"):
            raise ValueError("ghz_alphabet is 'reduced' or 'full'")

    @property
    def layout(self) -> Layout:
        if self.scenario is Scenario.BELL_BIDIRECTIONAL:
            return LAYOUTS["bell" if self.alice_on_odd else "bell-even"]
        if self.scenario is Scenario.GHZ_BIDIRECTIONAL:
            return LAYOUTS["ghz" if self.ghz_alphabet == "reduced" else "ghz-full"]
        return LAYOUTS[f"network-{self.network_layout}"]

    @property
    def n_states(self) -> int:
        return 2 * self.n_message_pairs + self.n_check

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "layout": self.layout.name,
            "n_message_pairs": self.n_message_pairs,
            "n_check": self.n_check,
            "error_threshold": self.error_threshold,
            "seed": self.seed,
            "attack": self.attack.to_dict(),
            "permission_granted": self.permission_granted,
            "check_bases": self.check_bases,
        }


def _jsonable(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(_jsonable(k)) if not isinstance(k, str) else k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.integer):
        return int(value)
    return value


@dataclass(frozen=True)
class ClassicalMessage:
    step: int
    sender: PartyRole
    receiver: PartyRole
    kind: MessageKind
    payload: dict
    bit_cost: int = 0

    def to_record(self) -> dict:
        return {
            "step": self.step,
            "sender": self.sender.value,
            "receiver": self.receiver.value,
            "kind": self.kind.value,
            "payload": _jsonable(self.payload),
            "bit_cost": self.bit_cost,
        }

    @classmethod
    def from_record(cls, rec: dict) -> ClassicalMessage:
        return cls(
            rec["step"], PartyRole(rec["sender"]), PartyRole(rec["receiver"]),
            MessageKind(rec["kind"]), rec["payload"], rec["bit_cost"],
        )


@dataclass(frozen=True)
class PublicView:
    layout: str
    messages: tuple[ClassicalMessage, ...]

    def of_kind(self, kind: MessageKind):
        return [m for m in self.messages if m.kind is kind]

    def without_permission(self) -> PublicView:
        return PublicView(self.layout, tuple(m for m in self.messages if m.kind is not MessageKind.PERMISSION_ANNOUNCE))


@dataclass
class Transcript:
    layout: str
    messages: list[ClassicalMessage] = field(default_factory=list)
    private: dict[PartyRole, dict] = field(default_factory=dict)

    def post(self, step, sender, receiver, kind, payload, bit_cost=0) -> ClassicalMessage:
        msg = ClassicalMessage(step, sender, receiver, kind, payload, bit_cost)
        self.messages.append(msg)
        return msg

    def public_view(self) -> PublicView:
        return PublicView(self.layout, tuple(self.messages))

    @property
    def bit_cost(self) -> int:
        return sum(m.bit_cost for m in self.messages)

    def to_jsonl(self) -> str:
        """One message per line, stable field names."""
        return "\n".join(json.dumps(m.to_record(), sort_keys=True) for m in self.messages)

    @classmethod
    def from_jsonl(cls, layout: str, text: str) -> Transcript:
        return cls(layout, [ClassicalMessage.from_record(json.loads(line)) for line in text.splitlines() if line.strip()])


def _label_of(kind: Basis, raw):
    return BellIndex(*raw) if kind is Basis.BELL or len(raw) == 2 else GhzIndex(*raw)


# ---------------------------------------------------------------------------
# Step 1: distribution
# ---------------------------------------------------------------------------


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Independent per-trial seeds derived from one master seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]


def _streams(seed: int):
    secrets, proto, eve = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(secrets), np.random.default_rng(proto), np.random.default_rng(eve)


def _routing(layout: Layout, position: int) -> tuple[PartyRole, ...]:
    return layout.routing[position % 2] if layout.mixed_routing else layout.routing[0]


def _route_qubit(channel: Channel, slot: Slot, q: int, holder: PartyRole) -> None:
    slot.labels[q] = (holder.short, slot.position, q)
    channel.trace.append(Movement(1, slot.position, q, holder.short))


def step1_distribute(cfg: RunConfig, rng: np.random.Generator, transcript: Transcript, *,
                     eve_rng: np.random.Generator | None = None, initial_states=None):
    """Prepare ``2N + c`` entangled states at random and route their qubits.

    Returns the channel and the controller's private list of initial labels.
    """
    layout = cfg.layout
    n = cfg.n_states
    if initial_states is None:
        picks = rng.integers(len(layout.labels), size=n)
        initials = [layout.labels[int(m)] for m in picks]
    else:
        initials = [_label_of(layout.kind, s) for s in initial_states]
        if len(initials) != n:
            raise ValueError(f"need {n} initial states, got {len(initials)}")
    make = qcore.make_bell if layout.kind is Basis.BELL else qcore.make_ghz
    channel = Channel([])
    for x, lab in enumerate(initials):
        slot = Slot(x, layout.kind, make(lab), [("Ch", x, q) for q in range(layout.size)])
        for q, holder in enumerate(_routing(layout, x)):
            _route_qubit(channel, slot, q, holder)
        channel.slots.append(slot)
    apply_attack(channel, cfg.attack, eve_rng if eve_rng is not None else rng)
    for role in layout.users:
        transcript.post(1, role, CH, MessageKind.RECEIPT_ACK, {"received": n})
    transcript.private.setdefault(CH, {})["initials"] = initials
    return channel, initials


# ---------------------------------------------------------------------------
# Step 2: channel verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    position: int
    basis: str
    bits: tuple[int, ...]
    consistent: bool


@dataclass(frozen=True)
class Verdict:
    aborted: bool
    error_rate: float
    checks: tuple[CheckResult, ...]

    @property
    def n_checks(self) -> int:
        return len(self.checks)

    @property
    def n_errors(self) -> int:
        return sum(not c.consistent for c in self.checks)

    @property
    def by_basis(self) -> dict[str, tuple[int, int]]:
        """basis -> (checks, errors)"""
        out = {"Z": (0, 0), "X": (0, 0)}
        for c in self.checks:
            n, e = out[c.basis]
            out[c.basis] = (n + 1, e + (not c.consistent))
        return out

    @property
    def label(self) -> str:
        return "ABORT" if self.aborted else "CONTINUE"


def expected_parities(label, basis: Basis) -> list[tuple[tuple[int, ...], int]]:
    """Parity constraints ``(qubits, value)`` obeyed by single-qubit outcomes of an ideal state.

    Outcome bit 0 is ``|0>`` in Z and ``|+>`` in X.
    """
    if isinstance(label, BellIndex) or len(label) == 2:
        x, z = label
        return [((0, 1), x if basis is Basis.Z else z)]
    i, j, k = label
    if basis is Basis.Z:
        return [((0, 2), j), ((1, 2), i)]
    return [((0, 1, 2), k)]


def check_consistent(label, basis: Basis, bits: Sequence[int]) -> bool:
    return all(sum(bits[q] for q in qs) % 2 == v for qs, v in expected_parities(label, basis))


def _select_checks(cfg: RunConfig, rng: np.random.Generator, n_states: int) -> list[int]:
    layout = cfg.layout
    c = cfg.n_check
    if not layout.mixed_routing:
        return sorted(int(x) for x in rng.choice(n_states, size=c, replace=False))
    # Draw within each routing type so that N full groups remain.
    evens, odds = list(range(0, n_states, 2)), list(range(1, n_states, 2))
    n = cfg.n_message_pairs
    picked = list(rng.choice(evens, size=len(evens) - n, replace=False)) + list(
        rng.choice(odds, size=len(odds) - n, replace=False)
    )
    return sorted(int(x) for x in picked)


def step2_verify_channel(cfg: RunConfig, channel: Channel, rng: np.random.Generator, transcript: Transcript,
                         initials: Sequence) -> Verdict:
    """Alice picks ``c`` check states and a random Z/X basis for each; every user measures
    their qubits of those states in that basis, the controller reveals the initial labels,
    and the observed parities are compared with the ideal correlations."""
    layout = cfg.layout
    if cfg.n_check > len(channel):
        raise ValueError(f"cannot check {cfg.n_check} of {len(channel)} states")
    positions = _select_checks(cfg, rng, len(channel))
    if cfg.check_bases == "ZX":
        bases = [(Basis.Z, Basis.X)[int(b)] for b in rng.integers(2, size=len(positions))]
    else:
        bases = [Basis(cfg.check_bases)] * len(positions)
    transcript.post(2, A, PartyRole.BROADCAST, MessageKind.CHECK_POSITIONS, {"positions": positions})

    results: dict[PartyRole, list[list[int]]] = {}
    bits_by_pos: dict[int, dict[int, int]] = {x: {} for x in positions}
    for role in layout.users:
        mine = []
        for x, basis in zip(positions, bases):
            slot = channel.slots[x]
            outs = []
            for lab in slot.qubits_of(role.short):
                rec, slot.state = qcore.measure(slot.state, qcore.MeasurementRecord(basis, (slot.index_of(lab),)), rng)
                slot.labels.remove(lab)
                bits_by_pos[x][lab[2]] = rec.outcome
                outs.append(rec.outcome)
            mine.append(outs)
        results[role] = mine
        payload = {"results": mine}
        if role is A:
            payload["bases"] = [b.value for b in bases]
        transcript.post(2, role, PartyRole.BROADCAST, MessageKind.CHECK_BASES_RESULTS, payload)

    announced = [initials[x] for x in positions]
    transcript.post(2, CH, PartyRole.BROADCAST, MessageKind.CHECK_INITIAL_STATES, {"positions": positions, "initial": announced})

    checks = []
    for x, basis, label in zip(positions, bases, announced):
        bits = tuple(bits_by_pos[x][q] for q in range(layout.size))
        checks.append(CheckResult(x, basis.value, bits, check_consistent(label, basis, bits)))
    n_err = sum(not c.consistent for c in checks)
    rate = n_err / len(checks) if checks else 0.0
    verdict = Verdict(rate > cfg.error_threshold, rate, tuple(checks))
    if verdict.aborted:
        transcript.post(2, A, PartyRole.BROADCAST, MessageKind.ABORT, {"error_rate": rate})
    return verdict


# ---------------------------------------------------------------------------
# Step 3: grouping and encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupAssignment:
    group: int
    positions: tuple[int, int]
    # which state position each user encodes on
    encoders: dict

    def to_dict(self) -> dict:
        return {"group": self.group, "positions": list(self.positions), "encoders": {r.value: list(p) for r, p in self.encoders.items()}}


def assign_groups(cfg: RunConfig, check_positions: Sequence[int]) -> list[GroupAssignment]:
    """Pair the unchecked states in order: the first of each pair is state ``i``, the second ``j``."""
    layout = cfg.layout
    checked = set(check_positions)
    rest = [x for x in range(cfg.n_states) if x not in checked]
    if layout.mixed_routing:
        firsts = [x for x in rest if x % 2 == 0]
        seconds = [x for x in rest if x % 2 == 1]
    else:
        firsts, seconds = rest[0::2], rest[1::2]
    groups = []
    for g, pair in enumerate(zip(firsts, seconds)):
        encoders = {role: tuple(pair[s] for s, _ in layout.slots[role]) for role in layout.users}
        groups.append(GroupAssignment(g, pair, encoders))
    return groups


def split_secret(layout: Layout, role: PartyRole, secret: Sequence[int], n_groups: int) -> list[tuple[int, ...]]:
    k = layout.bits(role)
    if len(secret) != k * n_groups:
        raise ValueError(f"{role.value} secret must have {k * n_groups} bits, got {len(secret)}")
    return [tuple(int(b) for b in secret[g * k:(g + 1) * k]) for g in range(n_groups)]


def step3_encode(cfg: RunConfig, channel: Channel, assignments: Sequence[GroupAssignment],
                 secrets: Mapping[PartyRole, Sequence[int]], transcript: Transcript | None = None) -> Channel:
    layout = cfg.layout
    for role in layout.users:
        chunks = split_secret(layout, role, secrets[role], len(assignments))
        for ga, msg in zip(assignments, chunks):
            for (s, q), enc in zip(layout.slots[role], layout.encodings(role, msg)):
                slot = channel.slots[ga.positions[s]]
                label = (role.short, slot.position, q)
                slot.state = qcore.apply_pauli(slot.state, slot.index_of(label), enc)
        if transcript is not None:
            rec = transcript.private.setdefault(role, {})
            rec["secret"] = tuple(int(b) for b in secrets[role])
            rec["messages"] = chunks
    return channel


# ---------------------------------------------------------------------------
# Step 4: swapping measurements
# ---------------------------------------------------------------------------


def step4_measure_and_exchange(cfg: RunConfig, channel: Channel, assignments: Sequence[GroupAssignment],
                               rng: np.random.Generator, transcript: Transcript) -> list[dict]:
    layout = cfg.layout
    all_outcomes = []
    for ga in assignments:
        si, sj = (channel.slots[x] for x in ga.positions)
        state = qcore.tensor(si.state, sj.state)
        labels = list(si.labels) + list(sj.labels)
        outcomes = {}
        for role, basis, refs in layout.readout:
            wanted = [(role.short, ga.positions[s], q) for s, q in refs]
            pos = tuple(labels.index(w) for w in wanted)
            rec, state = qcore.measure(state, qcore.MeasurementRecord(basis, pos), rng)
            for w in wanted:
                labels.remove(w)
            outcomes[role] = rec.outcome
            bits = 2 if basis is Basis.BELL else 3
            transcript.post(4, role, PartyRole.BROADCAST, MessageKind.MEASUREMENT_RESULT,
                            {"group": ga.group, "outcome": rec.outcome}, bit_cost=bits)
            transcript.private.setdefault(role, {}).setdefault("outcomes", []).append(rec.outcome)
        if any(lab[0] != "E" for lab in labels):
            raise RuntimeError(f"group {ga.group} left unmeasured party qubits {labels}")
        all_outcomes.append(outcomes)
    return all_outcomes


# ---------------------------------------------------------------------------
# Step 5: permission and decoding
# ---------------------------------------------------------------------------


def permission_payload(layout: Layout, initials: Sequence, assignments: Sequence[GroupAssignment]) -> tuple[dict, int]:
    groups = [[initials[x] for x in ga.positions] for ga in assignments]
    per_group = 2 * (2 if layout.kind is Basis.BELL else 3)
    return {"initial": groups}, per_group * len(groups)


def public_outcomes(view: PublicView) -> list[dict[PartyRole, tuple]]:
    layout = LAYOUTS[view.layout]
    per_group: dict[int, dict] = {}
    for m in view.of_kind(MessageKind.MEASUREMENT_RESULT):
        basis = dict((r, b) for r, b, _ in layout.readout)[m.sender]
        per_group.setdefault(m.payload["group"], {})[m.sender] = _label_of(basis, m.payload["outcome"])
    return [per_group[g] for g in sorted(per_group)]


def announced_initials(view: PublicView) -> list[tuple] | None:
    msgs = view.of_kind(MessageKind.PERMISSION_ANNOUNCE)
    if not msgs:
        return None
    kind = LAYOUTS[view.layout].kind
    return [tuple(_label_of(kind, lab) for lab in grp) for grp in msgs[-1].payload["initial"]]


def decode_group(layout: Layout, role: PartyRole, initials, own: Sequence[int], outcomes: Mapping) -> dict[PartyRole, tuple]:
    """Peer messages for one group; bits that the observation leaves open are ``None``."""
    observed = tuple(outcomes[r] for r in layout.users)
    if layout.kind is Basis.BELL:
        peer = B if role is A else A
        init_a_pair, init_b_pair = initials
        if layout.name == "bell-even":
            init_a_pair, init_b_pair = init_b_pair, init_a_pair
        enc = swapcalc.decode_peer(init_a_pair, init_b_pair, PauliEncoding(*own), role, observed[0], observed[1])
        return {peer: (enc.p, enc.q)}
    found = layout.candidates(role, tuple(initials), own, observed)
    out = {}
    for peer in (r for r in layout.users if r != role):
        out[peer] = tuple(
            (found[0][peer][b] if found and len({f[peer][b] for f in found}) == 1 else None)
            for b in range(layout.bits(peer))
        )
    return out


def decode_party(view: PublicView, role: PartyRole, private: Mapping) -> dict[PartyRole, tuple] | str:
    """Replay the public transcript with one user's private record."""
    layout = LAYOUTS[view.layout]
    initials = announced_initials(view)
    if initials is None:
        return WITHHELD
    decoded: dict[PartyRole, list] = {p: [] for p in layout.users if p != role}
    for inits, own, outs in zip(initials, private["messages"], public_outcomes(view)):
        for peer, bits in decode_group(layout, role, inits, own, outs).items():
            decoded[peer].extend(bits)
    return {p: tuple(v) for p, v in decoded.items()}


def step5_permission_and_decode(cfg: RunConfig, transcript: Transcript, assignments: Sequence[GroupAssignment],
                                initials: Sequence):
    layout = cfg.layout
    if not cfg.permission_granted:
        return WITHHELD
    payload, cost = permission_payload(layout, initials, assignments)
    transcript.post(5, CH, PartyRole.BROADCAST, MessageKind.PERMISSION_ANNOUNCE, payload, bit_cost=cost)
    view = transcript.public_view()
    return {role: decode_party(view, role, transcript.private[role]) for role in layout.users}


# ---------------------------------------------------------------------------
# Whole run
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    config: RunConfig
    verdict: Verdict
    secrets: dict[PartyRole, tuple[int, ...]]
    decoded: dict | str | None
    transcript: Transcript
    channel: Channel
    assignments: list[GroupAssignment]
    m_u: int
    q_k: int
    b_k: int

    @property
    def withheld(self) -> bool:
        return self.decoded == WITHHELD

    @property
    def decode_ok(self) -> bool | None:
        """True iff every user recovered every peer bit correctly; None when nothing was decoded."""
        if self.verdict.aborted or self.withheld or self.decoded is None:
            return None
        for role, peers in self.decoded.items():
            for peer, bits in peers.items():
                if bits != self.secrets[peer]:
                    return False
        return True

    @property
    def efficiency(self):
        from .metrics import efficiency

        return efficiency(self.m_u, self.q_k, self.b_k)

    def to_dict(self, include_transcript: bool = True) -> dict:
        d = {
            "config": self.config.to_dict(),
            "verdict": self.verdict.label,
            "error_rate": self.verdict.error_rate,
            "checks": {"n": self.verdict.n_checks, "errors": self.verdict.n_errors,
                       "by_basis": {b: {"n": n, "errors": e} for b, (n, e) in self.verdict.by_basis.items()}},
            "secrets": {r.value: list(s) for r, s in self.secrets.items()},
            "decoded": self.decoded if isinstance(self.decoded, str) or self.decoded is None else
            {r.value: {p.value: list(b) for p, b in peers.items()} for r, peers in self.decoded.items()},
            "decode_ok": self.decode_ok,
            "groups": [ga.to_dict() for ga in self.assignments],
            "counters": {"m_u": self.m_u, "q_k": self.q_k, "b_k": self.b_k},
        }
        if include_transcript:
            d["transcript"] = [m.to_record() for m in self.transcript.messages]
        return d


def random_secrets(layout: Layout, n_groups: int, rng: np.random.Generator) -> dict[PartyRole, tuple[int, ...]]:
    return {role: tuple(int(b) for b in rng.integers(2, size=layout.bits(role) * n_groups)) for role in layout.users}


def run_checks_only(cfg: RunConfig) -> Verdict:
    """Steps 1 and 2 alone; used for detection-rate estimation."""
    _, rng, eve_rng = _streams(cfg.seed)
    transcript = Transcript(cfg.layout.name)
    channel, initials = step1_distribute(cfg, rng, transcript, eve_rng=eve_rng)
    return step2_verify_channel(cfg, channel, rng, transcript, initials)


def run_scenario(cfg: RunConfig, secrets: Mapping[PartyRole, Sequence[int]] | None = None,
                 initial_states: Sequence | None = None) -> RunReport:
    """Run all five steps. An abort is reported in the verdict, not raised."""
    layout = cfg.layout
    secret_rng, rng, eve_rng = _streams(cfg.seed)
    if secrets is None:
        secrets = random_secrets(layout, cfg.n_message_pairs, secret_rng)
    secrets = {r: tuple(int(b) for b in s) for r, s in secrets.items()}
    transcript = Transcript(layout.name)
    channel, initials = step1_distribute(cfg, rng, transcript, eve_rng=eve_rng, initial_states=initial_states)
    verdict = step2_verify_channel(cfg, channel, rng, transcript, initials)
    q_k = 2 * cfg.n_message_pairs * layout.size
    if verdict.aborted:
        return RunReport(cfg, verdict, secrets, None, transcript, channel, [], 0, q_k, transcript.bit_cost)
    assignments = assign_groups(cfg, [c.position for c in verdict.checks])
    step3_encode(cfg, channel, assignments, secrets, transcript)
    step4_measure_and_exchange(cfg, channel, assignments, rng, transcript)
    decoded = step5_permission_and_decode(cfg, transcript, assignments, initials)
    m_u = sum(len(s) for s in secrets.values())
    return RunReport(cfg, verdict, secrets, decoded, transcript, channel, assignments, m_u, q_k, transcript.bit_cost)
