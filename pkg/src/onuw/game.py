"""Rules engine for One Night Ultimate Werewolf (3 to 5 players).

Player ids are 0-based everywhere in the API; ``player_name`` renders the
1-based names used in prompts and logs.  States are immutable: every
transition returns a new :class:`GameState`.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations
from typing import Mapping, Optional, Sequence

from .errors import ConfigError, IllegalActionError, PhaseError, VoteValidationError
from .roles import DEFAULT_NIGHT_ORDER, DEFAULT_ROLES, Role, Team, player_name

POOL_SIZE = 3


@dataclass(frozen=True)
class GameSpec:
    player_count: int
    candidate_roles: tuple
    night_order: tuple = DEFAULT_NIGHT_ORDER
    discussion_rounds: int = 3
    rng_seed: int = 0
    # Score "nobody dies while a Werewolf is among the players" as a draw
    # instead of a Werewolf win (the convention behind the 3-player trees).
    draw_on_no_death: bool = False

    def __post_init__(self):
        object.__setattr__(self, "candidate_roles", tuple(Role(r) for r in self.candidate_roles))
        object.__setattr__(self, "night_order", tuple(Role(r) for r in self.night_order))
        if not 3 <= self.player_count <= 5:
            raise ConfigError(f"player_count must be in [3, 5], got {self.player_count}")
        if len(self.candidate_roles) != self.player_count + POOL_SIZE:
            raise ConfigError(
                f"{self.player_count} players need {self.player_count + POOL_SIZE} "
                f"candidate roles, got {len(self.candidate_roles)}"
            )
        if self.discussion_rounds < 1:
            raise ConfigError("discussion_rounds must be positive")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be unsigned")

    @classmethod
    def default(cls, player_count: int = 5, **kwargs) -> "GameSpec":
        return cls(player_count, DEFAULT_ROLES[player_count], **kwargs)


@dataclass(frozen=True)
class Assignment:
    player_roles: tuple
    pool: tuple

    def __post_init__(self):
        object.__setattr__(self, "player_roles", tuple(Role(r) for r in self.player_roles))
        object.__setattr__(self, "pool", tuple(Role(r) for r in self.pool))
        if len(self.pool) != POOL_SIZE:
            raise ConfigError(f"role pool must hold {POOL_SIZE} cards")

    @property
    def n(self) -> int:
        return len(self.player_roles)

    def slots(self) -> tuple:
        return self.player_roles + self.pool

    def multiset(self) -> Counter:
        return Counter(self.slots())

    def swap_players(self, a: int, b: int) -> "Assignment":
        roles = list(self.player_roles)
        roles[a], roles[b] = roles[b], roles[a]
        return Assignment(tuple(roles), self.pool)

    def werewolf_players(self) -> frozenset:
        return frozenset(i for i, r in enumerate(self.player_roles) if r is Role.WEREWOLF)

    @classmethod
    def from_slots(cls, slots: Sequence, n: int) -> "Assignment":
        slots = tuple(slots)
        return cls(slots[:n], slots[n:])


class ActionKind(str, Enum):
    WEREWOLF_PEEK = "werewolf_peek"
    SEER_PLAYER = "seer_player"
    SEER_POOL = "seer_pool"
    ROBBER_SWITCH = "robber_switch"
    ROBBER_PASS = "robber_pass"
    TROUBLEMAKER_SWAP = "troublemaker_swap"
    INSOMNIAC_PEEK = "insomniac_peek"
    NO_ACTION = "no_action"


# Which action kinds each initial role may use.
_KINDS_FOR_ROLE = {
    Role.WEREWOLF: {ActionKind.WEREWOLF_PEEK},
    Role.VILLAGER: {ActionKind.NO_ACTION},
    Role.SEER: {ActionKind.SEER_PLAYER, ActionKind.SEER_POOL},
    Role.ROBBER: {ActionKind.ROBBER_SWITCH, ActionKind.ROBBER_PASS},
    Role.TROUBLEMAKER: {ActionKind.TROUBLEMAKER_SWAP},
    Role.INSOMNIAC: {ActionKind.INSOMNIAC_PEEK},
}


@dataclass(frozen=True)
class NightAction:
    actor: int
    kind: ActionKind
    targets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ActionKind(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

    def describe(self) -> str:
        who = player_name(self.actor)
        k = self.kind
        if k is ActionKind.SEER_PLAYER:
            return f"{who} checked {player_name(self.targets[0])}"
        if k is ActionKind.SEER_POOL:
            return f"{who} checked pool cards {self.targets[0] + 1} and {self.targets[1] + 1}"
        if k is ActionKind.ROBBER_SWITCH:
            return f"{who} switched roles with {player_name(self.targets[0])}"
        if k is ActionKind.TROUBLEMAKER_SWAP:
            a, b = self.targets
            return f"{who} swapped {player_name(a)} and {player_name(b)}"
        return f"{who}: {k.value}"


@dataclass(frozen=True)
class Observation:
    """Cards seen during the night, as ``(place, index, role)`` facts.

    ``place`` is ``"player"`` or ``"pool"``.  An empty werewolf observation
    means the werewolf found no teammate.
    """

    seen: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "seen", tuple((p, int(i), Role(r)) for p, i, r in self.seen))

    def describe(self) -> str:
        if not self.seen:
            return "nothing"
        parts = []
        for place, idx, role in self.seen:
            where = player_name(idx) if place == "player" else f"pool card {idx + 1}"
            parts.append(f"{where} is {role.value}")
        return "; ".join(parts)


@dataclass(frozen=True)
class Claim:
    """A machine-readable statement inside a speech.

    ``holds=False`` negates it ("subject is not role").  ``honest`` records
    whether the speaker believed the statement when making it.
    """

    subject: int
    role: Role
    holds: bool = True
    honest: bool = True
    kind: str = "evidence"

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))

    def consistent_with(self, slots: Sequence) -> bool:
        return (slots[self.subject] == self.role) == self.holds


@dataclass(frozen=True)
class NightEvent:
    action: NightAction
    observation: Observation


@dataclass(frozen=True)
class SpeechEvent:
    round: int
    player: int
    text: str
    tactic: Optional[int] = None
    claims: tuple = ()


@dataclass(frozen=True)
class VoteEvent:
    voter: int
    target: int


class Phase(str, Enum):
    NIGHT = "night"
    DAY = "day"
    VOTING = "voting"
    FINISHED = "finished"


class Outcome(str, Enum):
    VILLAGE = "village"
    WEREWOLF = "werewolf"
    DRAW = "draw"
    # Nobody is a Werewolf but somebody died: neither win condition holds.
    NONE = "none"


@dataclass(frozen=True)
class VoteTally:
    votes: tuple  # votes[i] = target of player i
    counts: tuple
    deaths: frozenset


@dataclass(frozen=True)
class GameState:
    spec: GameSpec
    initial: Assignment
    current: Assignment
    phase: Phase = Phase.NIGHT
    round: int = 0
    events: tuple = ()
    deaths: frozenset = field(default_factory=frozenset)
    outcome: Optional[Outcome] = None

    @property
    def n(self) -> int:
        return self.spec.player_count

    def night_events(self) -> tuple:
        return tuple(e for e in self.events if isinstance(e, NightEvent))

    def speeches(self) -> tuple:
        return tuple(e for e in self.events if isinstance(e, SpeechEvent))

    def vote_events(self) -> tuple:
        return tuple(e for e in self.events if isinstance(e, VoteEvent))

    def observation_of(self, player: int) -> Optional[NightEvent]:
        for e in self.night_events():
            if e.action.actor == player:
                return e
        return None


def new_game(spec: GameSpec, deal: Optional[Assignment] = None) -> GameState:
    """Deal roles with the spec's seeded RNG, or use a forced ``deal``."""
    if deal is None:
        cards = list(spec.candidate_roles)
        random.Random(spec.rng_seed).shuffle(cards)
        deal = Assignment.from_slots(cards, spec.player_count)
    if deal.n != spec.player_count:
        raise ConfigError("deal has the wrong number of players")
    if deal.multiset() != Counter(spec.candidate_roles):
        raise ConfigError("deal does not match the candidate role multiset")
    return GameState(spec=spec, initial=deal, current=deal)


def legal_night_actions(state: GameState, player: int) -> tuple:
    """Every legal action for ``player``'s initial role, in canonical order."""
    if state.phase is not Phase.NIGHT:
        raise PhaseError(f"night actions are only legal at night, phase is {state.phase.value}")
    if state.observation_of(player) is not None:
        raise PhaseError(f"player {player} already acted")
    return _legal_for(state.initial.player_roles[player], player, state.n)


def _legal_for(role: Role, player: int, n: int) -> tuple:
    others = [t for t in range(n) if t != player]
    if role is Role.WEREWOLF:
        return (NightAction(player, ActionKind.WEREWOLF_PEEK),)
    if role is Role.SEER:
        return tuple(NightAction(player, ActionKind.SEER_PLAYER, (t,)) for t in others) + tuple(
            NightAction(player, ActionKind.SEER_POOL, pair) for pair in combinations(range(POOL_SIZE), 2)
        )
    if role is Role.ROBBER:
        return (NightAction(player, ActionKind.ROBBER_PASS),) + tuple(
            NightAction(player, ActionKind.ROBBER_SWITCH, (t,)) for t in others
        )
    if role is Role.TROUBLEMAKER:
        return tuple(NightAction(player, ActionKind.TROUBLEMAKER_SWAP, pair) for pair in combinations(others, 2))
    if role is Role.INSOMNIAC:
        return (NightAction(player, ActionKind.INSOMNIAC_PEEK),)
    return (NightAction(player, ActionKind.NO_ACTION),)


def check_action(state: GameState, action: NightAction) -> None:
    n = state.n
    actor = action.actor
    if not 0 <= actor < n:
        raise IllegalActionError(actor, "unknown actor")
    role = state.initial.player_roles[actor]
    if action.kind not in _KINDS_FOR_ROLE[role]:
        raise IllegalActionError(actor, f"{action.kind.value} is not available to an initial {role.value}")
    if action not in _legal_for(role, actor, n):
        raise IllegalActionError(actor, f"bad targets {action.targets} for {action.kind.value}")


def resolve_night(state: GameState, actions: Mapping[int, NightAction]) -> GameState:
    """Apply night actions in night order and move to the first Day round.

    Roles without a choice (Werewolf, Insomniac, Villager) may be omitted
    from ``actions``; their single legal action is filled in.
    """
    if state.phase is not Phase.NIGHT:
        raise PhaseError("the night has already been resolved")
    n = state.n
    for p, act in actions.items():
        if act.actor != p:
            raise IllegalActionError(p, f"action belongs to player {act.actor}")
        check_action(state, act)
    chosen = {}
    for p in range(n):
        if p in actions:
            chosen[p] = actions[p]
            continue
        options = _legal_for(state.initial.player_roles[p], p, n)
        if len(options) != 1:
            raise IllegalActionError(p, "no action supplied for a role with a choice")
        chosen[p] = options[0]

    current = state.current
    events = list(state.events)
    werewolves = sorted(state.initial.werewolf_players())
    seen_roles = set()
    for role in state.spec.night_order:
        if role in seen_roles:
            continue
        seen_roles.add(role)
        for p in range(n):
            if state.initial.player_roles[p] is not role:
                continue
            act = chosen[p]
            current, obs = _apply(current, act, werewolves)
            events.append(NightEvent(act, obs))
    # Roles absent from night_order still log their (inert) action.
    for p in range(n):
        if state.initial.player_roles[p] not in seen_roles:
            events.append(NightEvent(chosen[p], Observation()))
    return replace(state, current=current, events=tuple(events), phase=Phase.DAY, round=1)


def _apply(current: Assignment, act: NightAction, werewolves) -> tuple:
    k, p = act.kind, act.actor
    if k is ActionKind.WEREWOLF_PEEK:
        return current, Observation(tuple(("player", w, Role.WEREWOLF) for w in werewolves if w != p))
    if k is ActionKind.SEER_PLAYER:
        t = act.targets[0]
        return current, Observation((("player", t, current.player_roles[t]),))
    if k is ActionKind.SEER_POOL:
        return current, Observation(tuple(("pool", j, current.pool[j]) for j in act.targets))
    if k is ActionKind.ROBBER_SWITCH:
        current = current.swap_players(p, act.targets[0])
        return current, Observation((("player", p, current.player_roles[p]),))
    if k is ActionKind.TROUBLEMAKER_SWAP:
        return current.swap_players(*act.targets), Observation()
    if k is ActionKind.INSOMNIAC_PEEK:
        return current, Observation((("player", p, current.player_roles[p]),))
    return current, Observation()


def expected_speaker(state: GameState) -> Optional[tuple]:
    """``(round, player)`` of the next speech, or None outside the Day phase."""
    if state.phase is not Phase.DAY:
        return None
    spoken = sum(1 for e in state.events if isinstance(e, SpeechEvent) and e.round == state.round)
    return state.round, spoken


def speak(state: GameState, player: int, text: str, tactic: Optional[int] = None, claims=()) -> GameState:
    """Record a speech; speakers go in ascending index order each round."""
    turn = expected_speaker(state)
    if turn is None:
        raise PhaseError(f"speeches happen in the Day phase, phase is {state.phase.value}")
    rnd, due = turn
    if player != due:
        raise PhaseError(f"round {rnd}: expected {player_name(due)} to speak, got {player_name(player)}")
    ev = SpeechEvent(rnd, player, text, tactic, tuple(claims))
    events = state.events + (ev,)
    if due == state.n - 1:
        if rnd == state.spec.discussion_rounds:
            return replace(state, events=events, phase=Phase.VOTING)
        return replace(state, events=events, round=rnd + 1)
    return replace(state, events=events)


def tally_votes(votes: Mapping[int, int], n: Optional[int] = None) -> VoteTally:
    """Deaths are every player tied at the maximum count, if that count is at least 2."""
    n = len(votes) if n is None else n
    if sorted(votes) != list(range(n)):
        raise VoteValidationError(f"expected one vote from each of {n} players")
    counts = [0] * n
    for voter, target in votes.items():
        if target == voter:
            raise VoteValidationError(f"{player_name(voter)} voted for themself")
        if not 0 <= target < n:
            raise VoteValidationError(f"{player_name(voter)} voted for unknown player {target}")
        counts[target] += 1
    top = max(counts)
    deaths = frozenset(i for i, c in enumerate(counts) if c == top) if top >= 2 else frozenset()
    return VoteTally(tuple(votes[i] for i in range(n)), tuple(counts), deaths)


def determine_outcome(final: Assignment, deaths, draw_on_no_death: bool = False) -> Outcome:
    deaths = frozenset(deaths)
    if not deaths <= frozenset(range(final.n)):
        raise VoteValidationError("deaths must be players")
    wolves = final.werewolf_players()
    if deaths & wolves:
        return Outcome.VILLAGE
    if not wolves:
        return Outcome.VILLAGE if not deaths else Outcome.NONE
    if not deaths and draw_on_no_death:
        return Outcome.DRAW
    return Outcome.WEREWOLF


def utility(final_role: Role, outcome: Outcome) -> int:
    if outcome is Outcome.DRAW:
        return 0
    if outcome is Outcome.NONE:
        return -1
    winner = Team.VILLAGE if outcome is Outcome.VILLAGE else Team.WEREWOLF
    return 1 if Role(final_role).team is winner else -1


def cast_votes(state: GameState, votes: Mapping[int, int]) -> GameState:
    if state.phase is not Phase.VOTING:
        raise PhaseError(f"voting happens after discussion, phase is {state.phase.value}")
    tally = tally_votes(votes, state.n)
    outcome = determine_outcome(state.current, tally.deaths, state.spec.draw_on_no_death)
    events = state.events + tuple(VoteEvent(i, t) for i, t in enumerate(tally.votes))
    return replace(state, events=events, deaths=tally.deaths, outcome=outcome, phase=Phase.FINISHED)


def utilities(state: GameState) -> tuple:
    if state.outcome is None:
        raise PhaseError("the game is not finished")
    return tuple(utility(r, state.outcome) for r in state.current.player_roles)
