from .gateway import Gateway, ModelConfig, RecordingTransport, ReplayTransport, system_user
from .parsing import StructuredReply, extract_json, parse_player, parse_reply, parse_role_assignments
from .prompts import TEMPLATES, render, role_prompt, tactic_prompt

__all__ = [
    "Gateway",
    "ModelConfig",
    "RecordingTransport",
    "ReplayTransport",
    "StructuredReply",
    "TEMPLATES",
    "extract_json",
    "parse_player",
    "parse_reply",
    "parse_role_assignments",
    "render",
    "role_prompt",
    "system_user",
    "tactic_prompt",
]
