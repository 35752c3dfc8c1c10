from enum import Enum


class Team(str, Enum):
    VILLAGE = "Village"
    WEREWOLF = "Werewolf"


class Role(str, Enum):
    WEREWOLF = "Werewolf"
    VILLAGER = "Villager"
    SEER = "Seer"
    ROBBER = "Robber"
    TROUBLEMAKER = "Troublemaker"
    INSOMNIAC = "Insomniac"

    @property
    def team(self) -> Team:
        return Team.WEREWOLF if self is Role.WEREWOLF else Team.VILLAGE

    @property
    def index(self) -> int:
        return ROLE_ORDER.index(self)

    @classmethod
    def parse(cls, text: str) -> "Role":
        key = text.strip().lower()
        for role in cls:
            if role.value.lower() == key:
                return role
        raise ValueError(f"unknown role {text!r}")


# Fixed role order used for marginal vectors and feature layouts.
ROLE_ORDER = tuple(Role)

DEFAULT_NIGHT_ORDER = (
    Role.WEREWOLF,
    Role.SEER,
    Role.ROBBER,
    Role.TROUBLEMAKER,
    Role.INSOMNIAC,
)

W, V = Role.WEREWOLF, Role.VILLAGER

DEFAULT_ROLES = {
    3: (W, W, Role.ROBBER, V, V, V),
    4: (W, W, V, Role.SEER, Role.ROBBER, Role.TROUBLEMAKER, Role.INSOMNIAC),
    5: (W, W, V, V, Role.SEER, Role.ROBBER, Role.TROUBLEMAKER, Role.INSOMNIAC),
}


def player_name(i: int) -> str:
    return f"Player {i + 1}"
