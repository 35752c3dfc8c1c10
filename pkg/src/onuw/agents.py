"""Game-playing agents.

Every agent follows the same three-step loop each Day turn: form a belief,
pick a discussion tactic (or none), then speak; at the end it votes.  What
differs between kinds is where the tactic comes from:

=============  ======================================================
ReAct          no belief step in the prompt, no tactic
Belief         belief step, no tactic
RandomTactic   uniform tactic from a seeded RNG
LLMInstructed  the LLM picks a tactic by name
RLInstructed   greedy (or softmax) choice from a trained Q-function
Scripted       fixed rule: a tactic per team, a fixed tactic, or none
=============  ======================================================

Belief, night, speech and vote decisions come from a backend: an LLM
through :class:`~onuw.llm.Gateway`, or deterministic scripted rules built
on the exact belief filter.
"""
from __future__ import annotations

from functools import lru_cache

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import belief as bel
from .errors import ConfigError
from .game import (
    ActionKind,
    Claim,
    GameSpec,
    GameState,
    NightAction,
    NightEvent,
    Phase,
    _legal_for,
)
from .llm import prompts
from .llm.gateway import Gateway, system_user
from .llm.parsing import parse_player, parse_role_assignments
from .policy import QFunction, encode_features, select_tactic as q_select
from .roles import ROLE_ORDER, Role, Team, player_name
from .tactics import N_TACTICS, Tactic

log = logging.getLogger(__name__)

LLM_TOP_MASS = 0.9
MAX_SPEECH_WORDS = 50


class AgentKind(str, Enum):
    REACT = "ReAct"
    BELIEF = "Belief"
    RANDOM_TACTIC = "RandomTactic"
    LLM_INSTRUCTED = "LLMInstructed"
    RL_INSTRUCTED = "RLInstructed"
    SCRIPTED = "Scripted"


LLM_ONLY = {AgentKind.REACT, AgentKind.BELIEF, AgentKind.LLM_INSTRUCTED}


@dataclass(frozen=True)
class AgentContext:
    """Everything one player may see: its dealt role, its own night event,
    and the public speeches so far."""

    player: int
    initial_role: Role
    spec: GameSpec
    night: Optional[NightEvent] = None
    history: tuple = ()
    phase: Phase = Phase.NIGHT
    round: int = 0
    seed: int = 0

    @property
    def n(self) -> int:
        return self.spec.player_count

    @property
    def name(self) -> str:
        return player_name(self.player)

    def others(self) -> list:
        return [p for p in range(self.n) if p != self.player]


def context_for(state: GameState, player: int, seed: int = 0) -> AgentContext:
    return AgentContext(
        player=player,
        initial_role=state.initial.player_roles[player],
        spec=state.spec,
        night=state.observation_of(player),
        history=state.speeches(),
        phase=state.phase,
        round=state.round,
        seed=seed,
    )


@dataclass
class BeliefReport:
    marginals: np.ndarray  # (n, 6) in ROLE_ORDER
    rationale: str = ""
    self_estimate: Optional[Role] = None
    flagged: bool = False

    def __post_init__(self):
        m = np.asarray(self.marginals, dtype=float)
        if m.ndim != 2 or m.shape[1] != len(ROLE_ORDER):
            raise ValueError("marginals must be an (n, 6) array")
        if np.any(np.abs(m.sum(axis=1) - 1) > 1e-9):
            raise ValueError("each marginal must sum to 1")
        self.marginals = m

    def werewolf_prob(self, player: int) -> float:
        return float(self.marginals[player, Role.WEREWOLF.index])

    def most_likely(self, player: int) -> Role:
        return ROLE_ORDER[int(np.argmax(self.marginals[player]))]

    def describe(self) -> str:
        parts = []
        for i, m in enumerate(self.marginals):
            j = int(np.argmax(m))
            parts.append(f"{player_name(i)}: {ROLE_ORDER[j].value} ({m[j]:.2f})")
        return "; ".join(parts)

    @classmethod
    def uniform(cls, n: int, rationale: str = "", flagged: bool = False) -> "BeliefReport":
        return cls(np.full((n, 6), 1 / 6), rationale, None, flagged)


@dataclass(frozen=True)
class SpeechPlan:
    tactic: Optional[Tactic]
    claims: tuple
    text: str

    def __post_init__(self):
        if self.tactic is not None:
            for c in self.claims:
                if c.honest != self.tactic.honest:
                    raise ValueError("claim honesty does not match the tactic")


# -- scripted tables ---------------------------------------------------------

def action_from_spec(player: int, spec) -> NightAction:
    """``{"kind": ..., "targets": [...]}`` or a NightAction."""
    if isinstance(spec, NightAction):
        return spec
    return NightAction(player, spec["kind"], tuple(spec.get("targets", ())))


@dataclass
class ScriptTables:
    """Pinned decisions keyed by player id (0-based)."""

    night: dict = field(default_factory=dict)
    speeches: dict = field(default_factory=dict)  # (round, player) -> SpeechEvent
    votes: dict = field(default_factory=dict)

    @classmethod
    def from_log(cls, log) -> "ScriptTables":
        return cls(
            night={e.action.actor: e.action for e in log.night},
            speeches={(s.round, s.player): s for s in log.speeches},
            votes={v.voter: v.target for v in log.votes},
        )

    @classmethod
    def from_dict(cls, d: dict) -> "ScriptTables":
        night = {int(k): action_from_spec(int(k), v) for k, v in (d.get("night") or {}).items()}
        votes = {int(k): int(v) for k, v in (d.get("votes") or {}).items()}
        return cls(night=night, votes=votes)


# -- configuration -----------------------------------------------------------

@dataclass
class AgentConfig:
    kind: AgentKind = AgentKind.SCRIPTED
    backend: str = "scripted"  # or "llm"
    model: Optional[dict] = None
    temperature: float = 1.0
    encoder_mode: str = "structural"
    qfunction_path: Optional[str] = None
    selection: str = "greedy"
    # Scripted tactic rule: "team" (deceptive evidence for Werewolves,
    # honest evidence otherwise), "none", or a tactic name.
    scripted_tactic: str = "team"
    claim_lambda: float = 0.2
    night_default: str = "first"  # or "random"
    seed: int = 0

    def __post_init__(self):
        self.kind = AgentKind(self.kind)
        if self.backend not in ("scripted", "llm"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.kind in LLM_ONLY and self.backend != "llm":
            raise ConfigError(f"{self.kind.value} agents need the llm backend")
        if self.kind is AgentKind.SCRIPTED and self.backend != "scripted":
            raise ConfigError("Scripted agents use the scripted backend")
        if self.night_default not in ("first", "random"):
            raise ConfigError("night_default must be 'first' or 'random'")

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


class Agent:
    """One seat.  All decisions are functions of the AgentContext passed in."""

    def __init__(
        self,
        config: AgentConfig = None,
        gateway: Optional[Gateway] = None,
        qfunction: Optional[QFunction] = None,
        tables: Optional[ScriptTables] = None,
    ):
        self.config = config or AgentConfig()
        c = self.config
        if c.backend == "llm" and gateway is None:
            raise ConfigError(f"{c.kind.value} agent with the llm backend needs a gateway")
        if c.kind is AgentKind.RL_INSTRUCTED:
            if qfunction is None and c.qfunction_path:
                qfunction = QFunction.load(c.qfunction_path)
            if qfunction is None:
                raise ConfigError("RLInstructed agents need a trained Q-function")
        self.gateway = gateway
        self.qfunction = qfunction
        self.tables = tables or ScriptTables()
        self.flags: list = []

    @property
    def kind(self) -> AgentKind:
        return self.config.kind

    def _rng(self, ctx: AgentContext, stream: str) -> np.random.Generator:
        # Seeded by context so identical contexts give identical draws.
        key = [self.config.seed, ctx.seed, ctx.player, len(ctx.history), sum(map(ord, stream))]
        return np.random.default_rng(key)

    def _flag(self, ctx: AgentContext, what: str) -> None:
        self.flags.append(f"{ctx.name}:{what}")
        log.info("fallback for %s: %s", ctx.name, what)

    # -- belief ----------------------------------------------------------

    def model_belief(self, ctx: AgentContext) -> BeliefReport:
        if self.config.backend == "llm":
            return self._llm_belief(ctx)
        return scripted_belief(ctx, self.config.claim_lambda)

    def _llm_belief(self, ctx: AgentContext) -> BeliefReport:
        user = prompts.render(
            "belief",
            history=history_text(ctx),
            agent_name=ctx.name,
            player_names=[player_name(p) for p in ctx.others()],
        )
        reply = self._ask(ctx, user, "belief")
        if reply is None:
            self._flag(ctx, "belief-unparsed")
            return BeliefReport.uniform(ctx.n, rationale="", flagged=True)
        picks = parse_role_assignments(reply.fields["result"], ctx.n)
        m = np.full((ctx.n, 6), 1 / 6)
        for p, role in picks.items():
            m[p] = (1 - LLM_TOP_MASS) / 5
            m[p, role.index] = LLM_TOP_MASS
        return BeliefReport(m, reply.raw, picks.get(ctx.player))

    # -- tactic ----------------------------------------------------------

    def select_tactic(self, ctx: AgentContext, report: BeliefReport) -> Optional[Tactic]:
        k = self.kind
        if k in (AgentKind.REACT, AgentKind.BELIEF):
            return None
        if k is AgentKind.RANDOM_TACTIC:
            return Tactic(int(self._rng(ctx, "tactic").integers(N_TACTICS)))
        if k is AgentKind.RL_INSTRUCTED:
            feats = encode_features(
                ctx.history,
                report.marginals,
                self.config.encoder_mode,
                player=ctx.player,
                n_players=ctx.n,
                rounds=ctx.spec.discussion_rounds,
                own_role=ctx.initial_role,
                embedder=self.gateway,
                expected_dim=self.qfunction.state_dim,
            )
            return q_select(self.qfunction, feats, self.config.selection, rng=self._rng(ctx, "softmax"))
        if k is AgentKind.LLM_INSTRUCTED:
            user = prompts.render(
                "tactic_choice",
                history=history_text(ctx),
                agent_name=ctx.name,
                current_belief=report.describe(),
                tactic_names=[t.label for t in Tactic],
            )
            for _ in range(2):
                reply = self._chat(ctx, user, "tactic")
                if reply.ok:
                    try:
                        return Tactic.parse(reply.fields["tactic"])
                    except ValueError:
                        pass
            self._flag(ctx, "tactic-unparsed")
            return Tactic.HONEST_EVIDENCE
        rule = self.config.scripted_tactic
        if rule == "none":
            return None
        if rule == "team":
            wolf = ctx.initial_role.team is Team.WEREWOLF
            return Tactic.DECEPTIVE_EVIDENCE if wolf else Tactic.HONEST_EVIDENCE
        return Tactic.parse(rule)

    # -- night -----------------------------------------------------------

    def decide_night(self, ctx: AgentContext) -> NightAction:
        legal = _legal_for(ctx.initial_role, ctx.player, ctx.n)
        if ctx.player in self.tables.night:
            return self.tables.night[ctx.player]
        if len(legal) == 1:
            return legal[0]
        if self.config.backend == "llm":
            return self._llm_night(ctx, legal)
        if self.config.night_default == "random":
            return legal[int(self._rng(ctx, "night").integers(len(legal)))]
        return legal[0]

    def _llm_night(self, ctx: AgentContext, legal: tuple) -> NightAction:
        role = ctx.initial_role
        others = [player_name(p) for p in ctx.others()]
        variables = {"agent_name": ctx.name, "player_names": others}
        if role is Role.SEER:
            variables["pool_names"] = ["pool card 1", "pool card 2", "pool card 3"]
        user = prompts.render(prompts.night_template_for(role), variables)
        fmt = {Role.ROBBER: "night", Role.SEER: "seer", Role.TROUBLEMAKER: "troublemaker"}[role]
        for _ in range(2):
            reply = self._chat(ctx, user, fmt)
            act = reply.ok and _night_from_reply(ctx, role, reply.fields)
            if act and act in legal:
                return act
        self._flag(ctx, "night-illegal")
        return legal[0]

    # -- speech ----------------------------------------------------------

    def decide_speech(self, ctx: AgentContext, report: BeliefReport, tactic: Optional[Tactic]) -> SpeechPlan:
        key = (ctx.round, ctx.player)
        if key in self.tables.speeches:
            ev = self.tables.speeches[key]
            t = None if ev.tactic is None else Tactic(ev.tactic)
            return SpeechPlan(t, ev.claims, ev.text)
        if self.config.backend == "llm":
            return self._llm_speech(ctx, report, tactic)
        return scripted_speech(ctx, report, tactic)

    def _llm_speech(self, ctx: AgentContext, report: BeliefReport, tactic: Optional[Tactic]) -> SpeechPlan:
        belief_txt = "not modelled" if self.kind is AgentKind.REACT else report.describe()
        variables = {
            "history": history_text(ctx),
            "agent_name": ctx.name,
            "current_belief": belief_txt,
            "rounds_left": ctx.spec.discussion_rounds - ctx.round,
        }
        if tactic is None:
            user = prompts.render("discussion_free", variables)
        else:
            user = prompts.render("discussion", variables, speaking_strategy=prompts.tactic_prompt(tactic))
        reply = self._ask(ctx, user, "speech")
        if reply is None:
            self._flag(ctx, "speech-unparsed")
            text = "I have nothing to add this round."
        else:
            text = str(reply.fields["speech"]).strip()
        words = text.split()
        if len(words) > MAX_SPEECH_WORDS:
            self._flag(ctx, "speech-truncated")
            text = " ".join(words[:MAX_SPEECH_WORDS])
        honest = True if tactic is None else tactic.honest
        kind = "evidence" if tactic is None else tactic.category
        claims = tuple(
            Claim(p, role, True, honest, kind) for p, role in sorted(parse_role_assignments(text, ctx.n).items())
        )
        return SpeechPlan(tactic, claims, text)

    # -- vote ------------------------------------------------------------

    def decide_vote(self, ctx: AgentContext, report: BeliefReport) -> int:
        if ctx.player in self.tables.votes:
            return self.tables.votes[ctx.player]
        fallback = argmax_werewolf(report, ctx.player)
        if self.config.backend != "llm":
            return fallback
        user = prompts.render(
            "voting",
            history=history_text(ctx),
            agent_name=ctx.name,
            current_belief=report.describe(),
            player_names=[player_name(p) for p in ctx.others()],
        )
        for _ in range(2):
            reply = self._chat(ctx, user, "vote")
            if reply.ok:
                target = parse_player(reply.fields["player"], ctx.n)
                if target is not None and target != ctx.player:
                    return target
        self._flag(ctx, "vote-invalid")
        return fallback

    # -- llm plumbing ----------------------------------------------------

    def _system(self, ctx: AgentContext) -> str:
        roles = sorted(ctx.spec.candidate_roles, key=lambda r: r.index)
        glob = prompts.render(
            "global",
            others=ctx.n - 1,
            candidate_count=len(roles),
            role_list=[r.value for r in roles],
            night_order=[r.value for r in ctx.spec.night_order],
            rounds=ctx.spec.discussion_rounds,
        )
        night = "" if ctx.night is None else f"\nYour night: {ctx.night.action.describe()}; you saw {ctx.night.observation.describe()}."
        return glob + "\n" + prompts.role_prompt(ctx.name, ctx.initial_role) + night

    def _chat(self, ctx: AgentContext, user: str, fmt: str):
        return self.gateway.chat(system_user(self._system(ctx), user), fmt, temperature=self.config.temperature)

    def _ask(self, ctx: AgentContext, user: str, fmt: str):
        """One ask plus one re-ask; None if both replies fail to parse."""
        for _ in range(2):
            reply = self._chat(ctx, user, fmt)
            if reply.ok:
                return reply
        return None


def _night_from_reply(ctx: AgentContext, role: Role, fields: Mapping):
    p = ctx.player
    if role is Role.ROBBER:
        if not fields.get("switch"):
            return NightAction(p, ActionKind.ROBBER_PASS)
        t = parse_player(fields.get("player"), ctx.n)
        return None if t is None else NightAction(p, ActionKind.ROBBER_SWITCH, (t,))
    if role is Role.SEER:
        if str(fields.get("target", "")).lower() == "pool":
            pool = fields.get("pool") or []
            idx = sorted({int(str(x).split()[-1]) - 1 for x in pool if str(x).split()})
            return NightAction(p, ActionKind.SEER_POOL, tuple(idx)) if len(idx) == 2 else None
        t = parse_player(fields.get("player"), ctx.n)
        return None if t is None else NightAction(p, ActionKind.SEER_PLAYER, (t,))
    if role is Role.TROUBLEMAKER:
        picks = [parse_player(x, ctx.n) for x in fields.get("players") or []]
        if len(picks) != 2 or None in picks:
            return None
        return NightAction(p, ActionKind.TROUBLEMAKER_SWAP, tuple(sorted(picks)))
    return None


def history_text(ctx: AgentContext) -> str:
    if not ctx.history:
        return "(no speeches yet)"
    return " ".join(f"[{player_name(e.player)}]: {e.text}" for e in ctx.history)


def argmax_werewolf(report: BeliefReport, me: int) -> int:
    """Other player with the highest Werewolf marginal, lowest index on ties."""
    w = np.round(report.marginals[:, Role.WEREWOLF.index], 12)
    w[me] = -1
    return int(np.argmax(w))


def argmin_werewolf(report: BeliefReport, me: int) -> int:
    w = np.round(report.marginals[:, Role.WEREWOLF.index], 12)
    w[me] = 2
    return int(np.argmin(w))


# -- scripted belief ---------------------------------------------------------

def night_facts(night: Optional[NightEvent], initial_role: Role, n: int) -> list:
    """Observation facts that constrain the initial deal.

    Werewolf, Seer and Robber observations happen before any card the
    observed slot holds could have moved, so they describe initial roles.
    The Insomniac's look at its final card does not.
    """
    if night is None or initial_role is Role.INSOMNIAC:
        return []
    facts = list(night.observation.seen)
    act = night.action
    if act.kind is ActionKind.ROBBER_SWITCH:
        # The card now in the Robber's hand started with the target.
        facts = [("player", act.targets[0], r) for _, _, r in night.observation.seen]
    if act.kind is ActionKind.WEREWOLF_PEEK:
        # Werewolves see every fellow Werewolf, so everyone else is not one.
        seen = {i for _, i, _ in night.observation.seen}
        facts += [("player", q, Role.WEREWOLF, False) for q in range(n) if q != act.actor and q not in seen]
    return facts


def _apply_own_action(codes: np.ndarray, night: Optional[NightEvent]) -> np.ndarray:
    if night is None:
        return codes
    act = night.action
    if act.kind is ActionKind.ROBBER_SWITCH:
        a, b = act.actor, act.targets[0]
    elif act.kind is ActionKind.TROUBLEMAKER_SWAP:
        a, b = act.targets
    else:
        return codes
    out = codes.copy()
    out[:, [a, b]] = out[:, [b, a]]
    return out


def scripted_belief(ctx: AgentContext, claim_lambda: float = 0.2) -> BeliefReport:
    """Exact filter over deals consistent with the player's own card and
    night observation, with its own card moves applied, updated on the other
    players' claims.  Other players' unseen night actions are not modelled.
    """
    codes = bel.support_codes(ctx.spec, {ctx.player: ctx.initial_role})
    prior = bel.uniform_prior(codes, ctx.n)
    b = bel.update(prior, night_facts(ctx.night, ctx.initial_role, ctx.n), bel.FactLikelihood())
    b = bel.Belief(_apply_own_action(b.codes, ctx.night), b.probs, ctx.n)
    claims = [c for e in ctx.history if e.player != ctx.player for c in e.claims]
    if claims:
        b = bel.update(b, claims, bel.ClaimLikelihood(claim_lambda))
    m = bel.marginals(b)
    if ctx.night is not None and ctx.night.action.kind is ActionKind.INSOMNIAC_PEEK and ctx.night.observation.seen:
        m[ctx.player] = 0
        m[ctx.player, ctx.night.observation.seen[0][2].index] = 1
    own = ROLE_ORDER[int(np.argmax(m[ctx.player]))]
    return BeliefReport(m, "exact filter", own)


# -- scripted speech ---------------------------------------------------------

def scripted_speech(ctx: AgentContext, report: BeliefReport, tactic: Optional[Tactic]) -> SpeechPlan:
    me = ctx.player
    own = report.self_estimate or ctx.initial_role
    if tactic is None:
        c = Claim(me, own, True, True, "evidence")
        return SpeechPlan(None, (c,), f"I believe I am the {own.value}.")

    honest = tactic.honest
    cat = tactic.category
    claims: list
    if cat == "evidence" and honest:
        claims = [Claim(me, own, True, True, "evidence")]
        text = f"I am the {own.value}."
        if ctx.night is not None:
            for place, idx, role in ctx.night.observation.seen:
                if place == "player" and idx != me:
                    claims.append(Claim(idx, role, True, True, "evidence"))
                    text += f" I saw that {player_name(idx)} is the {role.value}."
    elif cat == "evidence":
        k = _fellow_or_least(ctx, report)
        claims = [Claim(me, Role.SEER, True, False, "evidence"), Claim(k, Role.WEREWOLF, False, False, "evidence")]
        text = f"I am the Seer. I checked {player_name(k)} and they are not a Werewolf."
        if own is Role.SEER:
            claims[0] = Claim(me, Role.VILLAGER, True, False, "evidence")
            text = f"I am a Villager. {player_name(k)} is not a Werewolf."
    elif cat == "accusation":
        t = argmax_werewolf(report, me) if honest else argmin_werewolf(report, me)
        claims = [Claim(t, Role.WEREWOLF, True, honest, "accusation")]
        text = f"I think {player_name(t)} is a Werewolf."
    else:
        if honest:
            t = me if own is not Role.WEREWOLF else argmin_werewolf(report, me)
        else:
            t = me if own is Role.WEREWOLF else argmax_werewolf(report, me)
        claims = [Claim(t, Role.WEREWOLF, False, honest, "defense")]
        who = "I am" if t == me else f"{player_name(t)} is"
        text = f"{who} not a Werewolf."
    return SpeechPlan(tactic, tuple(claims), text)


def _fellow_or_least(ctx: AgentContext, report: BeliefReport) -> int:
    if ctx.night is not None and ctx.night.action.kind is ActionKind.WEREWOLF_PEEK:
        for _, idx, _ in ctx.night.observation.seen:
            return idx
    return argmin_werewolf(report, ctx.player)


# -- three-player profile agents ---------------------------------------------

class ProfileAgent:
    """Plays a behaviour profile of the three-player tree.

    ``behavior`` maps information-set ids (see :mod:`onuw.equilibrium`) to
    action probabilities.  Player 3's night choice is remembered to pick its
    voting information set.
    """

    def __init__(self, behavior: Mapping, seed: int = 0):
        self.behavior = dict(behavior)
        self.rng = np.random.default_rng(seed)
        self.night_label: Optional[str] = None

    def _draw(self, key: str) -> int:
        p = np.asarray(self.behavior[key], dtype=float)
        return int(self.rng.choice(len(p), p=p / p.sum()))

    def decide_night(self, ctx: AgentContext) -> NightAction:
        legal = _legal_for(ctx.initial_role, ctx.player, ctx.n)
        if ctx.player != 2:
            return legal[0]
        self.night_label = ("NS", "S1", "S2")[self._draw("P3:night")]
        if self.night_label == "NS":
            return NightAction(2, ActionKind.ROBBER_PASS)
        return NightAction(2, ActionKind.ROBBER_SWITCH, (int(self.night_label[1]) - 1,))

    def model_belief(self, ctx: AgentContext) -> BeliefReport:
        return BeliefReport.uniform(ctx.n)

    def select_tactic(self, ctx, report):
        return None

    def decide_speech(self, ctx, report, tactic) -> SpeechPlan:
        return SpeechPlan(None, (), "I pass.")

    def decide_vote(self, ctx: AgentContext, report) -> int:
        from .equilibrium import VOTE_TARGETS

        key = f"P3:vote:{self.night_label}" if ctx.player == 2 else f"P{ctx.player + 1}:vote"
        return VOTE_TARGETS[ctx.player][self._draw(key)]


# -- mixture check -----------------------------------------------------------

@dataclass
class MixtureReport:
    analytic: dict
    empirical: dict
    tv: float
    rollouts: int

    @property
    def passed(self) -> bool:
        return self.tv <= 0.02


def compose_policy_check(
    types: Sequence,
    belief: Sequence[float],
    mu: Callable,
    pi: Callable,
    rollouts: int = 10_000,
    seed: int = 0,
) -> MixtureReport:
    """Compare the composed agent's empirical action distribution with the
    analytic mixture sum_theta b(theta) sum_z mu(z | theta) pi(a | theta, z).

    ``mu(theta)`` returns probabilities over the six tactics; ``pi(theta, z)``
    returns a dict action -> probability.
    """
    belief = np.asarray(belief, dtype=float)
    analytic: dict = {}
    for th, bt in zip(types, belief):
        m = np.asarray(mu(th), dtype=float)
        for z in range(len(m)):
            if m[z] == 0:
                continue
            for a, pa in pi(th, z).items():
                analytic[a] = analytic.get(a, 0.0) + bt * m[z] * pa
    rng = np.random.default_rng(seed)
    counts: dict = {}
    for _ in range(rollouts):
        ti = int(rng.choice(len(types), p=belief))
        th = types[ti]
        m = np.asarray(mu(th), dtype=float)
        z = int(rng.choice(len(m), p=m))
        dist = pi(th, z)
        acts = list(dist)
        a = acts[int(rng.choice(len(acts), p=np.asarray([dist[x] for x in acts], dtype=float)))]
        counts[a] = counts.get(a, 0) + 1
    empirical = {a: c / rollouts for a, c in counts.items()}
    keys = set(analytic) | set(empirical)
    tv = 0.5 * sum(abs(analytic.get(a, 0.0) - empirical.get(a, 0.0)) for a in keys)
    return MixtureReport(analytic, empirical, tv, rollouts)


def scripted_components(agent: Agent, contexts: Sequence[AgentContext]):
    """``(mu, pi)`` callables for compose_policy_check built from a scripted
    agent: theta indexes ``contexts`` (the hidden type fixes what the agent
    saw), mu is the agent's tactic rule, pi is its speech's first claim."""
    reports: dict = {}

    def report(i):
        if i not in reports:
            reports[i] = agent.model_belief(contexts[i])
        return reports[i]

    def mu(i):
        if agent.kind is AgentKind.RANDOM_TACTIC:
            return np.full(N_TACTICS, 1 / N_TACTICS)
        t = agent.select_tactic(contexts[i], report(i))
        out = np.zeros(N_TACTICS)
        out[0 if t is None else t.index] = 1
        return out

    @lru_cache(maxsize=None)
    def pi(i, z):
        plan = scripted_speech(contexts[i], report(i), Tactic(z))
        c = plan.claims[0]
        return {(c.subject, c.role.value, c.holds): 1.0}

    return mu, pi
