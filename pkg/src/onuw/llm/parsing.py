"""Structured-reply parsing for the JSON and belief response formats."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from ..roles import Role

FORMATS = {
    "speech": ("thought", "speech"),
    "night": ("thought", "switch", "player"),
    "seer": ("thought", "target"),
    "troublemaker": ("thought", "players"),
    "vote": ("thought", "player"),
    "tactic": ("thought", "tactic"),
    "belief": ("thought", "result"),
}

_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.S)
_THOUGHT = re.compile(r"My step-by-step thought process:\s*(.*?)(?=My concise result:|$)", re.S | re.I)
_RESULT = re.compile(r"My concise result:\s*(.*)", re.S | re.I)
_PLAYER = re.compile(r"player\s*(\d+)", re.I)


@dataclass
class StructuredReply:
    raw: str
    fields: Optional[dict] = None
    parse_failed: bool = False
    retries: int = 0
    usage: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parse_failed:
            self.fields = None

    @property
    def ok(self) -> bool:
        return not self.parse_failed


def extract_json(text: str) -> Optional[dict]:
    """First JSON object in the text, tolerating code fences and chatter."""
    candidates = [m.group(1) for m in _FENCE.finditer(text)] + [text]
    decoder = json.JSONDecoder()
    for chunk in candidates:
        for i, ch in enumerate(chunk):
            if ch != "{":
                continue
            try:
                obj, _ = decoder.raw_decode(chunk[i:])
            except ValueError:
                continue
            if isinstance(obj, dict):
                return obj
    return None


def parse_reply(text: str, fmt: str) -> StructuredReply:
    if fmt not in FORMATS:
        raise ValueError(f"unknown response format {fmt!r}")
    if fmt == "belief":
        m = _RESULT.search(text)
        if not m or not m.group(1).strip():
            return StructuredReply(text, parse_failed=True)
        t = _THOUGHT.search(text)
        return StructuredReply(text, {"thought": t.group(1).strip() if t else "", "result": m.group(1).strip()})
    obj = extract_json(text)
    if obj is None or any(k not in obj for k in FORMATS[fmt]):
        return StructuredReply(text, parse_failed=True)
    return StructuredReply(text, obj)


def parse_player(value, n: int) -> Optional[int]:
    """'Player 3', 3 or '3' -> 2 (0-based); None if out of range."""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        idx = value - 1
    else:
        m = _PLAYER.search(str(value)) or re.fullmatch(r"\s*(\d+)\s*", str(value))
        if not m:
            return None
        idx = int(m.group(1)) - 1
    return idx if 0 <= idx < n else None


def parse_role_assignments(result: str, n: int) -> dict:
    """Map each player mentioned in a concise result to the role named in the
    same clause, e.g. "Player 1 and Player 4 are Werewolves; Player 2 is the
    Seer".  The first mention of a player wins."""
    roles = "|".join(["Werewolves"] + [r.value for r in Role])
    role_pat = re.compile(rf"\b({roles})s?\b", re.I)
    out = {}
    for clause in re.split(r"[.;,\n]", result):
        m = role_pat.search(clause)
        if not m:
            continue
        name = m.group(1).lower()
        role = Role.WEREWOLF if name == "werewolves" else Role.parse(name)
        before = list(_PLAYER.finditer(clause[: m.start()]))
        for pm in before or _PLAYER.finditer(clause[m.end():]):
            idx = int(pm.group(1)) - 1
            if 0 <= idx < n and idx not in out:
                out[idx] = role
    return out
