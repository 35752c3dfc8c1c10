"""Experiment driver: matches, tournaments, offline-RL datasets, statistics
and the three-player NashConv estimator."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .agents import (
    Agent,
    AgentConfig,
    AgentContext,
    BeliefReport,
    ProfileAgent,
    ScriptTables,
    SpeechPlan,
    argmax_werewolf,
    context_for,
)
from .errors import ConfigError, OnuwError
from .game import (
    ActionKind,
    Assignment,
    GameSpec,
    NightAction,
    Outcome,
    Phase,
    cast_votes,
    legal_night_actions,
    new_game,
    resolve_night,
    speak,
)
from .gamelog import BeliefSnapshot, GameLog, log_from_state
from .policy import Transition, encode_features
from .roles import DEFAULT_ROLES, ROLE_ORDER, Role, Team, player_name
from .tactics import N_TACTICS, TACTIC_NAMES

log = logging.getLogger(__name__)

R = Role
SETTINGS_NAMES = ("three_player", "five_easy", "five_hard", "five_standard")


@dataclass(frozen=True)
class Setting:
    name: str
    player_count: int
    deal: Optional[Assignment] = None
    night: dict = field(default_factory=dict)

    def spec(self, seed: int = 0, rounds: int = 3, draw_on_no_death: bool = False) -> GameSpec:
        roles = self.deal.slots() if self.deal else DEFAULT_ROLES[self.player_count]
        return GameSpec(self.player_count, roles, discussion_rounds=rounds, rng_seed=seed, draw_on_no_death=draw_on_no_death)


SETTINGS = {
    "three_player": Setting(
        "three_player", 3, Assignment((R.WEREWOLF, R.WEREWOLF, R.ROBBER), (R.VILLAGER, R.VILLAGER, R.VILLAGER))
    ),
    "five_easy": Setting(
        "five_easy",
        5,
        Assignment((R.TROUBLEMAKER, R.WEREWOLF, R.SEER, R.ROBBER, R.VILLAGER), (R.WEREWOLF, R.VILLAGER, R.INSOMNIAC)),
        {
            2: NightAction(2, ActionKind.SEER_PLAYER, (3,)),
            3: NightAction(3, ActionKind.ROBBER_SWITCH, (0,)),
            0: NightAction(0, ActionKind.TROUBLEMAKER_SWAP, (2, 4)),
        },
    ),
    "five_hard": Setting(
        "five_hard",
        5,
        Assignment((R.ROBBER, R.INSOMNIAC, R.SEER, R.WEREWOLF, R.TROUBLEMAKER), (R.WEREWOLF, R.VILLAGER, R.VILLAGER)),
        {
            2: NightAction(2, ActionKind.SEER_PLAYER, (3,)),
            0: NightAction(0, ActionKind.ROBBER_SWITCH, (3,)),
            4: NightAction(4, ActionKind.TROUBLEMAKER_SWAP, (1, 2)),
        },
    ),
    "five_standard": Setting("five_standard", 5),
}


@dataclass
class ExperimentConfig:
    setting: str = "five_standard"
    seats: list = field(default_factory=list)  # one agent config dict per seat
    village: list = field(default_factory=list)  # tournament lineups (agent config dicts)
    werewolf: list = field(default_factory=list)
    repeats: int = 30
    seed: int = 0
    output_dir: str = "runs"
    discussion_rounds: int = 3
    workers: int = 1
    model: Optional[dict] = None
    fixture: Optional[str] = None
    focal_seat: int = 2

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ConfigError(f"unknown setting {self.setting!r}; choose from {SETTINGS_NAMES}")
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        n = SETTINGS[self.setting].player_count
        if self.seats and len(self.seats) != n:
            raise ConfigError(f"setting {self.setting} has {n} seats, config lists {len(self.seats)}")

    @property
    def setting_obj(self) -> Setting:
        return SETTINGS[self.setting]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


# -- building agents ---------------------------------------------------------

def make_gateway(cfg: ExperimentConfig):
    from .llm.gateway import Gateway, ModelConfig, ReplayTransport

    model = ModelConfig.from_dict(cfg.model or {})
    if cfg.fixture:
        return Gateway(model, transport=ReplayTransport.from_file(cfg.fixture), replay_only=True)
    return Gateway(model)


def build_agent(seat_cfg, gateway=None, tables: Optional[ScriptTables] = None):
    if not isinstance(seat_cfg, (dict, AgentConfig)):
        return seat_cfg  # already an agent object
    ac = seat_cfg if isinstance(seat_cfg, AgentConfig) else AgentConfig.from_dict(seat_cfg)
    return Agent(ac, gateway=gateway if ac.backend == "llm" else None, tables=tables)


# -- matches -----------------------------------------------------------------

def run_match(
    config: ExperimentConfig,
    seed: int = 0,
    agents: Optional[Sequence] = None,
    gateway=None,
    setting: Optional[Setting] = None,
    spec: Optional[GameSpec] = None,
) -> GameLog:
    """Night, discussion rounds in index order, then voting.  A failing
    agent aborts the match and yields a partial log flagged invalid.

    ``setting`` and ``spec`` override the ones derived from the config.
    """
    setting = setting or config.setting_obj
    spec = spec or setting.spec(seed, config.discussion_rounds)
    if agents is None:
        seats = config.seats or [{}] * setting.player_count
        if gateway is None and any(isinstance(s, dict) and s.get("backend") == "llm" for s in seats):
            gateway = make_gateway(config)
        agents = [build_agent(s, gateway) for s in seats]
    if len(agents) != spec.player_count:
        raise ConfigError("one agent per seat is required")
    state = new_game(spec, deal=setting.deal)
    flags: list = []
    beliefs: list = []
    meta = {"setting": setting.name, "seed": seed, "agents": [_agent_label(a) for a in agents]}

    def abort(exc: BaseException) -> GameLog:
        flags.append(f"aborted: {type(exc).__name__}: {exc}")
        return log_from_state(state, meta, flags + _agent_flags(agents), beliefs, valid=False)

    try:
        actions = {}
        for p, agent in enumerate(agents):
            if p in setting.night:
                actions[p] = setting.night[p]
            elif len(legal_night_actions(state, p)) > 1:
                actions[p] = agent.decide_night(context_for(state, p, seed))
        state = resolve_night(state, actions)

        while state.phase is Phase.DAY:
            rnd = state.round
            p = len([e for e in state.speeches() if e.round == rnd])
            ctx = context_for(state, p, seed)
            agent = agents[p]
            report = agent.model_belief(ctx)
            beliefs.append(BeliefSnapshot(rnd, p, tuple(tuple(float(x) for x in row) for row in report.marginals)))
            tactic = agent.select_tactic(ctx, report)
            plan: SpeechPlan = agent.decide_speech(ctx, report, tactic)
            t_idx = None if plan.tactic is None else plan.tactic.index
            state = speak(state, p, plan.text, t_idx, plan.claims)

        votes = {}
        for p, agent in enumerate(agents):
            ctx = context_for(state, p, seed)
            report = agent.model_belief(ctx)
            target = agent.decide_vote(ctx, report)
            if target == p or not 0 <= target < spec.player_count:
                flags.append(f"{player_name(p)}:vote-replaced")
                target = argmax_werewolf(report, p)
            votes[p] = target
        state = cast_votes(state, votes)
    except Exception as exc:  # noqa: BLE001 - any agent failure aborts the match
        log.warning("match aborted: %s", exc)
        return abort(exc)
    return log_from_state(state, meta, flags + _agent_flags(agents), beliefs)


def _agent_label(agent) -> str:
    cfg = getattr(agent, "config", None)
    return cfg.kind.value if cfg is not None else type(agent).__name__


def _agent_flags(agents) -> list:
    out = []
    for a in agents:
        out += list(getattr(a, "flags", ()))
    return out


def replay_tables_match(game_log: GameLog) -> GameLog:
    """Re-run a logged match with every seat pinned to its logged decisions."""
    tables = ScriptTables.from_log(game_log)
    agents = [Agent(AgentConfig(), tables=tables) for _ in range(game_log.n)]
    setting = Setting("replay", game_log.n, game_log.initial, {})
    cfg = ExperimentConfig(setting="three_player" if game_log.n == 3 else "five_standard")
    return run_match(cfg, game_log.spec.rng_seed, agents, setting=setting, spec=game_log.spec)


# -- tournaments -------------------------------------------------------------

@dataclass
class TournamentResult:
    village_names: list
    werewolf_names: list
    win_rate: np.ndarray  # village win rate per cell
    counts: np.ndarray  # games per cell
    avg_votes_focal: np.ndarray
    invalid: np.ndarray
    logs: dict  # (i, j, r) -> GameLog

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["village \\ werewolf"] + self.werewolf_names)
            for i, name in enumerate(self.village_names):
                w.writerow([name] + [f"{x:.4f}" for x in self.win_rate[i]])

    def metrics_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["village", "werewolf", "games", "invalid", "village_win_rate", "avg_votes_focal"])
            for i, vn in enumerate(self.village_names):
                for j, wn in enumerate(self.werewolf_names):
                    w.writerow([vn, wn, int(self.counts[i, j]), int(self.invalid[i, j]),
                                f"{self.win_rate[i, j]:.4f}", f"{self.avg_votes_focal[i, j]:.4f}"])


def seat_teams(setting: Setting, spec: GameSpec) -> list:
    """Team per seat used to hand out agent versions: final team when the
    night is pinned by the setting, dealt team otherwise."""
    state = new_game(spec, deal=setting.deal)
    if setting.night and len(setting.night) == sum(
        1 for p in range(spec.player_count) if len(legal_night_actions(state, p)) > 1
    ):
        state = resolve_night(state, setting.night)
        return [r.team for r in state.current.player_roles]
    return [r.team for r in state.initial.player_roles]


def _lineup_name(cfg) -> str:
    if isinstance(cfg, dict):
        return cfg.get("name") or cfg.get("kind", "Scripted")
    return str(cfg)


def run_tournament(config: ExperimentConfig, out_dir: Optional[str] = None) -> TournamentResult:
    """Village-lineup x werewolf-lineup matrix of Village win rates.

    Repeat ``r`` of every cell uses seed ``config.seed + r`` so cells are
    compared on the same deals.  Results are keyed by (cell, repeat), so
    the worker count never changes the output.
    """
    setting = config.setting_obj
    village = config.village or [{}]
    wolves = config.werewolf or [{}]
    gateway = None
    if any(isinstance(c, dict) and c.get("backend") == "llm" for c in village + wolves):
        gateway = make_gateway(config)

    def job(key):
        i, j, r = key
        seed = config.seed + r
        spec = setting.spec(seed, config.discussion_rounds)
        teams = seat_teams(setting, spec)
        seats = [village[i] if t is Team.VILLAGE else wolves[j] for t in teams]
        seats = [dict(s, seed=(s.get("seed", 0) + r)) if isinstance(s, dict) else s for s in seats]
        return key, run_match(config, seed, [build_agent(s, gateway) for s in seats])

    keys = [(i, j, r) for i in range(len(village)) for j in range(len(wolves)) for r in range(config.repeats)]
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = dict(pool.map(job, keys))
    else:
        results = dict(job(k) for k in keys)

    shape = (len(village), len(wolves))
    wins = np.zeros(shape)
    counts = np.zeros(shape)
    invalid = np.zeros(shape)
    votes = np.zeros(shape)
    for (i, j, r) in sorted(results):
        g = results[(i, j, r)]
        if not g.valid:
            invalid[i, j] += 1
            continue
        counts[i, j] += 1
        wins[i, j] += g.outcome is Outcome.VILLAGE
        if config.focal_seat < g.n:
            votes[i, j] += g.votes_received()[config.focal_seat]
    with np.errstate(invalid="ignore", divide="ignore"):
        rate = np.where(counts > 0, wins / np.maximum(counts, 1), 0.0)
        avg_votes = np.where(counts > 0, votes / np.maximum(counts, 1), 0.0)
    res = TournamentResult([_lineup_name(c) for c in village], [_lineup_name(c) for c in wolves],
                           rate, counts, avg_votes, invalid, results)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        res.to_csv(Path(out_dir) / "win_rate_matrix.csv")
        res.metrics_csv(Path(out_dir) / "metrics.csv")
    return res


# -- offline RL dataset ------------------------------------------------------

@dataclass
class DatasetStats:
    rows: int = 0
    skipped: int = 0
    speeches: int = 0


def _features_at(g: GameLog, player: int, upto: int, snapshot, encoder_mode: str, embedder):
    history = g.speeches[:upto]
    marg = None if snapshot is None else np.asarray(snapshot.marginals)
    return encode_features(
        history,
        marg,
        encoder_mode,
        player=player,
        n_players=g.n,
        rounds=g.spec.discussion_rounds,
        own_role=g.initial.player_roles[player],
        embedder=embedder,
    ).values


def extract_transitions(logs: Sequence[GameLog], reward_mode: str = "per-step", encoder_mode: str = "structural", embedder=None) -> tuple:
    """One transition per Day-phase speech, from each speaker's perspective.

    per-step: every step carries the final utility of the player.
    terminal-only: 0 on every step but the player's last labelled one.
    Speeches without a tactic label are skipped and counted; the next state
    of a step is the player's next labelled speech.
    Returns ``(transitions, DatasetStats)``.
    """
    if reward_mode not in ("per-step", "terminal-only"):
        raise ConfigError(f"unknown reward mode {reward_mode!r}")
    out = []
    stats = DatasetStats()
    for g in logs:
        if not g.valid:
            raise ConfigError("extract_transitions needs valid (complete) logs")
        snaps = {(b.round, b.player): b for b in g.beliefs}
        for p in range(g.n):
            own = [k for k, s in enumerate(g.speeches) if s.player == p]
            idx = [k for k in own if g.speeches[k].tactic is not None]
            stats.speeches += len(own)
            stats.skipped += len(own) - len(idx)
            u = g.utilities[p]
            for step, k in enumerate(idx):
                sp = g.speeches[k]
                last = step == len(idx) - 1
                s = _features_at(g, p, k, snaps.get((sp.round, p)), encoder_mode, embedder)
                if last:
                    s2 = _features_at(g, p, len(g.speeches), snaps.get((sp.round, p)), encoder_mode, embedder)
                else:
                    k2 = idx[step + 1]
                    s2 = _features_at(g, p, k2, snaps.get((g.speeches[k2].round, p)), encoder_mode, embedder)
                r = u if reward_mode == "per-step" or last else 0
                out.append(Transition(s, sp.tactic, r, s2, last))
                stats.rows += 1
    return out, stats


# -- tactic statistics -------------------------------------------------------

@dataclass
class TacticStatsTable:
    counts: dict  # Role -> list of 6 counts
    percent: dict  # Role -> list of 6 percentages
    flagged: list  # roles with no speeches

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["role"] + list(TACTIC_NAMES))
            for role in ROLE_ORDER:
                if role in self.percent:
                    w.writerow([role.value] + [f"{x:.1f}" for x in self.percent[role]])


def tactic_statistics(logs: Sequence[GameLog], roles: Optional[Sequence[Role]] = None) -> TacticStatsTable:
    """Percentage of speeches per tactic, grouped by the speaker's dealt role."""
    roles = list(roles) if roles is not None else list(ROLE_ORDER)
    counts = {r: [0] * N_TACTICS for r in roles}
    for g in logs:
        for sp in g.speeches:
            role = g.initial.player_roles[sp.player]
            if sp.tactic is None or role not in counts:
                continue
            counts[role][sp.tactic] += 1
    percent, flagged = {}, []
    for r, c in counts.items():
        total = sum(c)
        if total == 0:
            flagged.append(r)
            percent[r] = [0.0] * N_TACTICS
        else:
            percent[r] = [100.0 * x / total for x in c]
    return TacticStatsTable(counts, percent, flagged)


# -- NashConv estimation -----------------------------------------------------

@dataclass
class NashConvEstimate:
    behavior: dict
    nash_conv: float
    visits: dict
    unvisited: list
    low_confidence: bool
    gains: tuple = ()


def empirical_counts(logs: Sequence[GameLog]) -> dict:
    """Action counts per information set of the three-player tree."""
    from .equilibrium import VOTE_TARGETS

    counts = {k: [0, 0] for k in ("P1:vote", "P2:vote", "P3:vote:NS", "P3:vote:S1", "P3:vote:S2")}
    counts["P3:night"] = [0, 0, 0]
    for g in logs:
        if g.n != 3 or not g.valid:
            raise ConfigError("NashConv estimation needs valid three-player logs")
        robber = [e.action for e in g.night if e.action.actor == 2][0]
        label = "NS" if robber.kind is ActionKind.ROBBER_PASS else f"S{robber.targets[0] + 1}"
        counts["P3:night"][("NS", "S1", "S2").index(label)] += 1
        for v in g.votes:
            key = f"P3:vote:{label}" if v.voter == 2 else f"P{v.voter + 1}:vote"
            counts[key][VOTE_TARGETS[v.voter].index(v.target)] += 1
    return counts


def estimate_strategy_and_nashconv(
    logs: Sequence[GameLog],
    with_discussion: bool = False,
    belief_triple=None,
    draw_on_no_death: Optional[bool] = None,
) -> NashConvEstimate:
    """Add-one-smoothed behaviour profile from logs, scored on the tree.

    By default the tree uses the payoff rules the logged games were played
    under.  With ``with_discussion`` the night mix from the logs (or the
    given belief triple) becomes the chance node.
    """
    from . import equilibrium as eq

    logs = list(logs)
    if not logs:
        raise ConfigError("no logs")
    counts = empirical_counts(logs)
    beh, unvisited = {}, []
    for k, c in counts.items():
        if sum(c) == 0:
            unvisited.append(k)
        beh[k] = tuple((x + 1) / (sum(c) + len(c)) for x in c)
    if draw_on_no_death is None:
        draw_on_no_death = logs[0].spec.draw_on_no_death
    if with_discussion:
        bt = belief_triple or eq.BeliefTriple(*beh["P3:night"])
        tree = eq.build_tree_with_discussion(bt, draw_on_no_death)
        beh = {k: v for k, v in beh.items() if k != "P3:night"}
    else:
        tree = eq.build_tree_no_discussion(draw_on_no_death)
    gains = eq.best_response_gains(tree, beh)
    return NashConvEstimate(beh, float(sum(gains)), counts, unvisited, len(logs) < 30, tuple(float(g) for g in gains))


def profile_games(behavior, n_games: int, seed: int = 0, rounds: int = 1) -> list:
    """Three-player games whose seats sample from a tree behaviour profile."""
    cfg = ExperimentConfig(setting="three_player", discussion_rounds=rounds)
    logs = []
    for i in range(n_games):
        agents = [ProfileAgent(behavior, seed=[seed, i, p]) for p in range(3)]
        logs.append(run_match(cfg, seed + i, agents))
    return logs


# -- human seat --------------------------------------------------------------

class HumanQuit(OnuwError):
    pass


class HumanAgent:
    """Reads decisions from ``input_fn``; illegal input is asked again.
    Typing ``quit`` at any prompt abandons the match."""

    def __init__(self, input_fn: Callable[[str], str] = input, output_fn: Callable[[str], None] = print):
        self.input = input_fn
        self.output = output_fn
        self.flags: list = []

    def _ask(self, prompt: str) -> str:
        text = self.input(prompt).strip()
        if text.lower() in ("quit", "exit"):
            raise HumanQuit("human left the game")
        return text

    def decide_night(self, ctx: AgentContext) -> NightAction:
        from .game import _legal_for

        legal = _legal_for(ctx.initial_role, ctx.player, ctx.n)
        self.output(f"You are {ctx.name}, dealt the {ctx.initial_role.value}. Night actions:")
        for i, a in enumerate(legal):
            self.output(f"  [{i}] {a.describe()}")
        while True:
            text = self._ask("choose an action number: ")
            if text.isdigit() and int(text) < len(legal):
                return legal[int(text)]
            self.output("not a legal choice, try again")

    def model_belief(self, ctx: AgentContext) -> BeliefReport:
        return BeliefReport.uniform(ctx.n)

    def select_tactic(self, ctx, report):
        return None

    def decide_speech(self, ctx: AgentContext, report, tactic) -> SpeechPlan:
        if ctx.night is not None and ctx.round == 1 and not any(e.player == ctx.player for e in ctx.history):
            self.output(f"Night: {ctx.night.action.describe()}; you saw {ctx.night.observation.describe()}.")
        for e in ctx.history:
            if e.round == ctx.round or e.round == ctx.round - 1:
                self.output(f"  {player_name(e.player)}: {e.text}")
        text = self._ask(f"round {ctx.round}, your speech: ")
        return SpeechPlan(None, (), text or "...")

    def decide_vote(self, ctx: AgentContext, report) -> int:
        while True:
            text = self._ask(f"vote for a player number other than {ctx.player + 1}: ")
            if text.isdigit():
                t = int(text) - 1
                if 0 <= t < ctx.n and t != ctx.player:
                    return t
            self.output("illegal vote, try again")


def interactive_seat(config: ExperimentConfig, seat: int, input_fn=input, output_fn=print, seed: int = 0) -> GameLog:
    setting = config.setting_obj
    seats = config.seats or [{}] * setting.player_count
    gateway = make_gateway(config) if any(isinstance(s, dict) and s.get("backend") == "llm" for s in seats) else None
    agents = [build_agent(s, gateway) for s in seats]
    agents[seat] = HumanAgent(input_fn, output_fn)
    g = run_match(config, seed, agents)
    if g.valid:
        output_fn(f"Deaths: {[player_name(d) for d in g.deaths]}; outcome: {g.outcome.value}; your utility: {g.utilities[seat]}")
    else:
        output_fn("Game abandoned; the partial log is marked invalid.")
    return g
