from enum import Enum


class Tactic(Enum):
    """The six discussion tactics; ``value`` is the stable index."""

    HONEST_EVIDENCE = 0
    DECEPTIVE_EVIDENCE = 1
    HONEST_ACCUSATION = 2
    DECEPTIVE_ACCUSATION = 3
    HONEST_DEFENSE = 4
    DECEPTIVE_DEFENSE = 5

    @property
    def index(self) -> int:
        return self.value

    @property
    def honest(self) -> bool:
        return self.value % 2 == 0

    @property
    def category(self) -> str:
        return ("evidence", "accusation", "defense")[self.value // 2]

    @property
    def label(self) -> str:
        return TACTIC_NAMES[self.value]

    @classmethod
    def parse(cls, text) -> "Tactic":
        if isinstance(text, Tactic):
            return text
        if isinstance(text, int):
            return cls(text)
        key = " ".join(str(text).replace("_", " ").split()).lower()
        for t in cls:
            if t.label.lower() == key:
                return t
        raise ValueError(f"unknown tactic {text!r}")


TACTIC_NAMES = (
    "Honest Evidence",
    "Deceptive Evidence",
    "Honest Accusation",
    "Deceptive Accusation",
    "Honest Defense",
    "Deceptive Defense",
)

N_TACTICS = len(TACTIC_NAMES)
