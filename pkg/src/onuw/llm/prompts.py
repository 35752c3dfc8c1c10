"""Prompt templates for LLM-backed seats.

Placeholders use ``${name}`` so the literal JSON braces in the response
formats need no escaping.  List values are joined with ", ".
"""
from __future__ import annotations

import re
from string import Template
from typing import Mapping

from ..errors import RenderError
from ..roles import Role
from ..tactics import N_TACTICS, Tactic

_PLACEHOLDER = re.compile(r"\$\{(\w+)\}")

GLOBAL = """\
You are playing One Night Ultimate Werewolf with ${others} other players.

## Setup
There are ${candidate_count} candidate roles: ${role_list}. Every player is dealt one role and the three left over go face down into the role pool, so some roles may not be held by anyone.

## Roles
- Villager: no ability. Wants a Werewolf to die.
- Werewolf: at night sees the other Werewolves. Wants every Werewolf to survive.
- Seer: at night looks at one other player's role or at two pool roles.
- Robber: at night may swap roles with another player and then looks at the new role.
- Troublemaker: at night swaps the roles of two other players without looking.
- Insomniac: looks at its own role at the end of the night.
Everyone except the Werewolves is on Team Village.

## Phases
Night: roles act in this order: ${night_order}. Nobody learns what the others did.
Day: ${rounds} rounds of open discussion. Players may say anything but never show their card.
Voting: each player votes for another player. The players with the most votes die, unless everyone has one vote.

## Winning
Team Village wins if a Werewolf dies, or if nobody is a Werewolf and nobody dies.
Team Werewolf wins if at least one player is a Werewolf and no Werewolf dies.
Teams are decided by final roles, which may differ from the roles dealt.
"""

ROLE = """\
You are ${agent_name}, and the role you were dealt is ${role}.
${role_description}
The Moderator will wake you at night if needed; never act as the Moderator.
Hiding your role or pretending to be another role during the day is allowed. Your card may have been moved during the night.
Reason about the other players step by step. Keep every answer under 50 words.
"""

ROLE_DESCRIPTIONS = {
    Role.VILLAGER: "You have no night ability. You are on Team Village unless your card is changed.",
    Role.WEREWOLF: "At night you see the other Werewolves. You are on Team Werewolf unless your card is changed.",
    Role.SEER: "At night you may look at one other player's card or at two pool cards. You are on Team Village unless your card is changed.",
    Role.ROBBER: "At night you may swap cards with another player and see your new card. You keep no new ability. The player you robbed becomes the Robber on Team Village, and your own team follows the card you took. If you do not swap you stay the Robber.",
    Role.TROUBLEMAKER: "At night you may swap the cards of two other players without looking at them. You are on Team Village unless your card is changed.",
    Role.INSOMNIAC: "At the end of the night you see your own card, so you know your final role.",
}

_JSON_RULE = "Reply with JSON that Python's json.loads can parse, exactly in this shape:"

NIGHT_ROBBER = """\
It is the Night phase and you are ${agent_name}.
Decide whether to swap your card with another player, and with whom.
Options: [${player_names}].
""" + _JSON_RULE + """
{
  "thought": <why you act this way>,
  "switch": <true or false>,
  "player": <the player to swap with>
}
"""

NIGHT_SEER = """\
It is the Night phase and you are ${agent_name}.
Decide whether to look at one player's card or at two pool cards.
Player options: [${player_names}]. Pool options: [${pool_names}].
""" + _JSON_RULE + """
{
  "thought": <why you act this way>,
  "target": <"player" or "pool">,
  "player": <the player to look at, if target is player>,
  "pool": [<first pool card>, <second pool card>]
}
"""

NIGHT_TROUBLEMAKER = """\
It is the Night phase and you are ${agent_name}.
Choose two other players whose cards you will swap.
Options: [${player_names}].
""" + _JSON_RULE + """
{
  "thought": <why you act this way>,
  "players": [<first player>, <second player>]
}
"""

_DAY_HEAD = """\
Discussion so far: ${history}

You are ${agent_name}. Some players may be lying, so read the discussion critically.
Your current belief about everyone's role: ${current_belief}
"""

_SPEECH_TAIL = """
Give a short, specific public speech that persuades the others and draws out what they really did at night. Do not repeat what others said, be careful about revealing too much if you think you are a Werewolf, and keep in mind how many rounds remain (${rounds_left}).
""" + _JSON_RULE + """
{
  "thought": <what you concluded and how you plan to speak>,
  "speech": <your public speech, under 50 words>
}
"""

DISCUSSION = _DAY_HEAD + """
It is your turn, ${agent_name}. For this turn your speaking strategy is: ${speaking_strategy}
""" + _SPEECH_TAIL

DISCUSSION_FREE = _DAY_HEAD + """
It is your turn, ${agent_name}.
""" + _SPEECH_TAIL

VOTING = _DAY_HEAD + """
It is the Voting phase and your turn, ${agent_name}. Vote for the other player you think is most likely a Werewolf. You cannot vote for yourself.
Options: [${player_names}].
""" + _JSON_RULE + """
{
  "thought": <why you vote for this player>,
  "player": <the player you vote for>
}
"""

BELIEF = """\
Discussion so far: ${history}

You are ${agent_name}. Some players may be lying, so read the discussion critically.
Work out the most likely current role of yourself (${agent_name}) and of the other players (${player_names}), using only information you trust. Role counts may not exceed those among the candidate roles.
Name the most likely role of every player, yourself included. Answer in this format:

My step-by-step thought process: ...
My concise result: ...
"""

TACTIC_PROMPTS = (
    "provide some honest evidence or information that agrees with what you know or believe.",
    "provide some misleading evidence or information that contradicts what you know or believe.",
    "accuse a player of holding a specific role or taking a specific action, in a way that agrees with what you know or believe.",
    "accuse a player of holding a specific role or taking a specific action, in a misleading way that contradicts what you know or believe.",
    "defend yourself or another player against an accusation, in a way that agrees with what you know or believe.",
    "defend yourself or another player against an accusation, in a misleading way that contradicts what you know or believe.",
)

TACTIC_CHOICE = _DAY_HEAD + """
Before speaking, pick one speaking strategy for this turn from: [${tactic_names}].
""" + _JSON_RULE + """
{
  "thought": <why this strategy fits>,
  "tactic": <one strategy name from the list>
}
"""

TEMPLATES = {
    "global": GLOBAL,
    "role": ROLE,
    "night": NIGHT_ROBBER,
    "night:Robber": NIGHT_ROBBER,
    "night:Seer": NIGHT_SEER,
    "night:Troublemaker": NIGHT_TROUBLEMAKER,
    "discussion": DISCUSSION,
    "discussion_free": DISCUSSION_FREE,
    "voting": VOTING,
    "belief": BELIEF,
    "tactic_choice": TACTIC_CHOICE,
}
for _k in range(N_TACTICS):
    TEMPLATES[f"tactic[{_k}]"] = "You need to " + TACTIC_PROMPTS[_k]


def placeholders(template_id: str) -> list:
    body = _body(template_id)
    return list(dict.fromkeys(_PLACEHOLDER.findall(body)))


def _body(template_id: str) -> str:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise RenderError([template_id]) from None


def _fmt(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, Role):
        return value.value
    if isinstance(value, Tactic):
        return value.label
    return str(value)


def render(template_id: str, variables: Mapping = None, **kwargs) -> str:
    """Fill a template; raises RenderError naming every missing placeholder."""
    values = {**(variables or {}), **kwargs}
    body = _body(template_id)
    missing = [name for name in placeholders(template_id) if name not in values]
    if missing:
        raise RenderError(missing)
    return Template(body).substitute({k: _fmt(v) for k, v in values.items()})


def tactic_prompt(tactic) -> str:
    return render(f"tactic[{Tactic.parse(tactic).index}]")


def role_prompt(agent_name: str, role: Role) -> str:
    role = Role(role)
    return render("role", agent_name=agent_name, role=role, role_description=ROLE_DESCRIPTIONS[role])


def night_template_for(role: Role) -> str:
    key = f"night:{Role(role).value}"
    if key not in TEMPLATES:
        raise RenderError([key])
    return key
