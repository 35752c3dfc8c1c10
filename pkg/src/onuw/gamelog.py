"""Serialized match records, their digest chain, and deterministic replay."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import IncompleteLogError, IntegrityError, OnuwError
from .game import (
    Assignment,
    Claim,
    GameSpec,
    GameState,
    NightAction,
    NightEvent,
    Observation,
    Outcome,
    Phase,
    SpeechEvent,
    VoteEvent,
    cast_votes,
    new_game,
    resolve_night,
    speak,
    utilities,
)
from .roles import Role
from .tactics import TACTIC_NAMES

FORMAT = "onuw-gamelog/1"


@dataclass(frozen=True)
class BeliefSnapshot:
    """Role marginals a player held right before one of its speeches."""

    round: int
    player: int
    marginals: tuple  # per player, 6 probabilities in ROLE_ORDER


@dataclass
class GameLog:
    spec: GameSpec
    initial: Assignment
    night: tuple = ()
    speeches: tuple = ()
    votes: tuple = ()
    deaths: tuple = ()
    outcome: Optional[Outcome] = None
    utilities: tuple = ()
    final: Optional[Assignment] = None
    valid: bool = True
    flags: tuple = ()
    meta: dict = field(default_factory=dict)
    beliefs: tuple = ()
    digests: tuple = ()

    @property
    def n(self) -> int:
        return self.spec.player_count

    def event_labels(self) -> list:
        labels = ["deal"]
        labels += [f"night[{i}]" for i in range(len(self.night))]
        labels += [f"speech[{i}]" for i in range(len(self.speeches))]
        labels += [f"vote[{i}]" for i in range(len(self.votes))]
        labels.append("result")
        return labels

    def _event_payloads(self) -> list:
        d = to_dict(self)
        out = [{"spec": d["spec"], "initial": d["initial"]}]
        out += d["night"] + d["speeches"] + d["votes"]
        out.append({k: d[k] for k in ("deaths", "outcome", "utilities", "final")})
        return out

    def compute_digests(self) -> tuple:
        prev = ""
        chain = []
        for payload in self._event_payloads():
            blob = prev + json.dumps(payload, sort_keys=True, separators=(",", ":"))
            prev = hashlib.sha256(blob.encode()).hexdigest()[:16]
            chain.append(prev)
        return tuple(chain)

    def seal(self) -> "GameLog":
        self.digests = self.compute_digests()
        return self

    def votes_received(self) -> list:
        counts = [0] * self.n
        for v in self.votes:
            counts[v.target] += 1
        return counts


def log_from_state(state: GameState, meta=None, flags=(), beliefs=(), valid=True) -> GameLog:
    finished = state.phase is Phase.FINISHED
    return GameLog(
        spec=state.spec,
        initial=state.initial,
        night=state.night_events(),
        speeches=state.speeches(),
        votes=state.vote_events(),
        deaths=tuple(sorted(state.deaths)),
        outcome=state.outcome,
        utilities=utilities(state) if finished else (),
        final=state.current if state.phase is not Phase.NIGHT else None,
        valid=valid and finished,
        flags=tuple(flags),
        meta=dict(meta or {}),
        beliefs=tuple(beliefs),
    ).seal()


# -- dict conversion ---------------------------------------------------------

def _assignment_to(a: Optional[Assignment]):
    if a is None:
        return None
    return {"players": [r.value for r in a.player_roles], "pool": [r.value for r in a.pool]}


def _assignment_from(d):
    if d is None:
        return None
    return Assignment(tuple(Role(r) for r in d["players"]), tuple(Role(r) for r in d["pool"]))


def _claim_to(c: Claim) -> dict:
    return {"subject": c.subject, "role": c.role.value, "holds": c.holds, "honest": c.honest, "kind": c.kind}


def to_dict(log: GameLog) -> dict:
    s = log.spec
    return {
        "format": FORMAT,
        "tactics": list(TACTIC_NAMES),
        "spec": {
            "player_count": s.player_count,
            "candidate_roles": [r.value for r in s.candidate_roles],
            "night_order": [r.value for r in s.night_order],
            "discussion_rounds": s.discussion_rounds,
            "rng_seed": s.rng_seed,
            "draw_on_no_death": s.draw_on_no_death,
        },
        "initial": _assignment_to(log.initial),
        "night": [
            {
                "actor": e.action.actor,
                "kind": e.action.kind.value,
                "targets": list(e.action.targets),
                "seen": [[p, i, r.value] for p, i, r in e.observation.seen],
            }
            for e in log.night
        ],
        "speeches": [
            {
                "round": e.round,
                "player": e.player,
                "tactic": e.tactic,
                "text": e.text,
                "claims": [_claim_to(c) for c in e.claims],
            }
            for e in log.speeches
        ],
        "votes": [{"voter": v.voter, "target": v.target} for v in log.votes],
        "deaths": list(log.deaths),
        "outcome": None if log.outcome is None else log.outcome.value,
        "utilities": list(log.utilities),
        "final": _assignment_to(log.final),
        "valid": log.valid,
        "flags": list(log.flags),
        "meta": log.meta,
        "beliefs": [
            {"round": b.round, "player": b.player, "marginals": [list(m) for m in b.marginals]}
            for b in log.beliefs
        ],
        "digests": list(log.digests),
    }


def from_dict(d: dict) -> GameLog:
    if d.get("format") != FORMAT:
        raise IntegrityError(f"unsupported log format {d.get('format')!r}")
    if d.get("tactics", list(TACTIC_NAMES)) != list(TACTIC_NAMES):
        raise IntegrityError("log uses a different tactic index mapping")
    sd = d["spec"]
    spec = GameSpec(
        sd["player_count"],
        tuple(Role(r) for r in sd["candidate_roles"]),
        tuple(Role(r) for r in sd["night_order"]),
        sd["discussion_rounds"],
        sd["rng_seed"],
        sd.get("draw_on_no_death", False),
    )
    night = tuple(
        NightEvent(
            NightAction(e["actor"], e["kind"], tuple(e["targets"])),
            Observation(tuple((p, i, Role(r)) for p, i, r in e["seen"])),
        )
        for e in d.get("night", [])
    )
    speeches = tuple(
        SpeechEvent(
            e["round"],
            e["player"],
            e["text"],
            e.get("tactic"),
            tuple(Claim(c["subject"], Role(c["role"]), c["holds"], c["honest"], c["kind"]) for c in e.get("claims", [])),
        )
        for e in d.get("speeches", [])
    )
    return GameLog(
        spec=spec,
        initial=_assignment_from(d["initial"]),
        night=night,
        speeches=speeches,
        votes=tuple(VoteEvent(v["voter"], v["target"]) for v in d.get("votes", [])),
        deaths=tuple(d.get("deaths", [])),
        outcome=None if d.get("outcome") is None else Outcome(d["outcome"]),
        utilities=tuple(d.get("utilities", [])),
        final=_assignment_from(d.get("final")),
        valid=d.get("valid", True),
        flags=tuple(d.get("flags", [])),
        meta=d.get("meta", {}),
        beliefs=tuple(
            BeliefSnapshot(b["round"], b["player"], tuple(tuple(m) for m in b["marginals"]))
            for b in d.get("beliefs", [])
        ),
        digests=tuple(d.get("digests", [])),
    )


def serialize(log: GameLog) -> str:
    return json.dumps(to_dict(log), indent=1, ensure_ascii=False) + "\n"


def parse(text: str) -> GameLog:
    try:
        return from_dict(json.loads(text))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, OnuwError):
            raise
        raise IntegrityError(f"malformed game log: {exc}") from exc


def save(log: GameLog, path) -> None:
    Path(path).write_text(serialize(log), encoding="utf-8")


def load(path) -> GameLog:
    return parse(Path(path).read_text(encoding="utf-8"))


# -- replay ------------------------------------------------------------------

def replay(log: GameLog) -> GameState:
    """Re-run the logged match and check it reproduces the logged record."""
    if not log.night:
        raise IncompleteLogError("log has no night events", "night")
    if not log.valid:
        raise IncompleteLogError("log is flagged invalid (partial match)", "valid")
    if log.outcome is None or not log.votes:
        raise IncompleteLogError("log has no votes or outcome", "votes")

    labels = log.event_labels()
    if log.digests:
        if len(log.digests) != len(labels):
            raise IntegrityError("digest chain length does not match the event count", "digests")
        for label, want, got in zip(labels, log.digests, log.compute_digests()):
            if want != got:
                raise IntegrityError("event does not match its recorded digest", label)

    try:
        state = new_game(log.spec, deal=log.initial)
    except OnuwError as exc:
        raise IntegrityError(str(exc), "deal") from exc
    actions = {e.action.actor: e.action for e in log.night}
    if len(actions) != len(log.night):
        raise IntegrityError("a player acted twice at night", "night")
    try:
        state = resolve_night(state, actions)
    except OnuwError as exc:
        raise IntegrityError(str(exc), f"night[{_night_index(log, getattr(exc, 'actor', None))}]") from exc
    for i, (got, want) in enumerate(zip(state.night_events(), log.night)):
        if got != want:
            raise IntegrityError("replayed night action differs from the log", f"night[{i}]")

    for i, sp in enumerate(log.speeches):
        try:
            state = speak(state, sp.player, sp.text, sp.tactic, sp.claims)
        except OnuwError as exc:
            raise IntegrityError(str(exc), f"speech[{i}]") from exc
    if state.phase is not Phase.VOTING:
        raise IncompleteLogError("discussion is incomplete", f"speech[{len(log.speeches)}]")

    ballot = {}
    for i, v in enumerate(log.votes):
        if v.voter in ballot:
            raise IntegrityError("duplicate voter", f"vote[{i}]")
        ballot[v.voter] = v.target
    try:
        state = cast_votes(state, ballot)
    except OnuwError as exc:
        raise IntegrityError(str(exc), "votes") from exc

    for i, (got, want) in enumerate(zip(state.vote_events(), log.votes)):
        if got != want:
            raise IntegrityError("vote order differs from the log", f"vote[{i}]")
    if (
        tuple(sorted(state.deaths)) != tuple(log.deaths)
        or state.outcome is not log.outcome
        or state.current != log.final
        or utilities(state) != tuple(log.utilities)
    ):
        raise IntegrityError("replayed result differs from the logged result", "result")
    return state


def _night_index(log: GameLog, actor) -> int:
    for i, e in enumerate(log.night):
        if e.action.actor == actor:
            return i
    return 0
