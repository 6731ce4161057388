import enum


class PartyRole(enum.Enum):
    CONTROLLER = "CONTROLLER"
    ALICE = "ALICE"
    BOB = "BOB"
    ELENA = "ELENA"
    EVE = "EVE"
    BROADCAST = "BROADCAST"

    @property
    def short(self) -> str:
        return _SHORT[self]


_SHORT = {
    PartyRole.CONTROLLER: "Ch",
    PartyRole.ALICE: "A",
    PartyRole.BOB: "B",
    PartyRole.ELENA: "C",
    PartyRole.EVE: "E",
    PartyRole.BROADCAST: "*",
}
