"""One Night Ultimate Werewolf: rules engine, belief filtering, three-player
equilibrium analysis, a CQL-trained discussion-tactic policy, agents, and
an experiment harness."""

from .errors import OnuwError
from .game import Assignment, Claim, GameSpec, NightAction, Outcome, Phase
from .roles import Role, Team
from .tactics import Tactic

__all__ = [
    "Assignment",
    "Claim",
    "GameSpec",
    "NightAction",
    "OnuwError",
    "Outcome",
    "Phase",
    "Role",
    "Tactic",
    "Team",
]
__version__ = "0.1.0"
