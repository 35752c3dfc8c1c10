import json
import threading
import time

import httpx
import pytest
from hypothesis import given, strategies as st

from onuw.errors import CredentialError, GatewayError, IntegrityError, RenderError, TransportError
from onuw.llm import prompts
from onuw.llm.gateway import Gateway, ModelConfig, RecordingTransport, ReplayTransport, system_user
from onuw.llm.parsing import extract_json, parse_player, parse_reply, parse_role_assignments
from onuw.roles import Role
from onuw.tactics import Tactic


def chat_body(content, tokens=7):
    return {"choices": [{"message": {"content": content}}], "usage": {"total_tokens": tokens}}


def gateway(handler, **cfg):
    sleeps = []
    g = Gateway(ModelConfig(endpoint="http://mock/v1", **cfg), transport=httpx.MockTransport(handler), sleep=sleeps.append)
    return g, sleeps


def test_chat_parses_speech_and_counts_tokens():
    g, _ = gateway(lambda r: httpx.Response(200, json=chat_body('```json\n{"thought": "t", "speech": "hi"}\n```')))
    reply = g.chat(system_user("sys", "user"), "speech")
    assert reply.ok and reply.fields["speech"] == "hi" and reply.retries == 0
    assert g.total_tokens == 7


def test_two_failures_then_success_reports_two_retries():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            raise httpx.ConnectError("boom")
        if len(calls) == 2:
            return httpx.Response(503)
        return httpx.Response(200, json=chat_body('{"thought": "", "player": "Player 2"}'))

    g, sleeps = gateway(handler, backoff_base=0.1)
    reply = g.chat([], "vote")
    assert reply.retries == 2 and len(calls) == 3
    assert sleeps == [0.1, 0.2]


def test_retries_exhausted():
    g, sleeps = gateway(lambda r: httpx.Response(429), max_attempts=3)
    with pytest.raises(TransportError):
        g.chat([], "vote")
    assert len(sleeps) == 2


@pytest.mark.parametrize("status,exc", [(401, CredentialError), (403, CredentialError), (400, GatewayError)])
def test_non_retryable_statuses(status, exc):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(status, text="no")

    g, _ = gateway(handler)
    with pytest.raises(exc):
        g.chat([], "vote")
    assert len(calls) == 1


def test_malformed_reply_is_flagged_not_raised():
    g, _ = gateway(lambda r: httpx.Response(200, json=chat_body("I think Player 2 is suspicious.")))
    reply = g.chat([], "vote")
    assert reply.parse_failed and reply.fields is None


def test_in_flight_limit_holds_under_concurrency():
    lock = threading.Lock()
    state = {"now": 0, "peak": 0}

    def handler(request):
        with lock:
            state["now"] += 1
            state["peak"] = max(state["peak"], state["now"])
        time.sleep(0.01)
        with lock:
            state["now"] -= 1
        return httpx.Response(200, json=chat_body('{"thought": "", "speech": "x"}'))

    g, _ = gateway(handler, max_in_flight=3)
    threads = [threading.Thread(target=g.chat, args=([], "speech")) for _ in range(20)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert state["peak"] <= 3 and g.peak_in_flight <= 3
    assert state["peak"] >= 2


def test_embedding_dimension_mismatch():
    dims = iter([4, 4, 5])

    def handler(request):
        n = len(json.loads(request.content)["input"])
        return httpx.Response(200, json={"data": [{"index": i, "embedding": [0.0] * next(dims)} for i in range(n)]})

    g, _ = gateway(handler)
    assert g.embed([]) == []
    assert len(g.embed(["a", "b"])) == 2
    with pytest.raises(IntegrityError):
        g.embed(["c"])


def test_record_then_replay_with_redaction(tmp_path, monkeypatch):
    secret = "sk-test-123456"
    monkeypatch.setenv("OPENAI_API_KEY", secret)

    def upstream(request):
        assert request.headers["authorization"] == f"Bearer {secret}"
        return httpx.Response(200, json=chat_body(f'{{"thought": "{secret}", "speech": "hello"}}'))

    rec = RecordingTransport(httpx.MockTransport(upstream), secrets=[secret])
    g = Gateway(ModelConfig(endpoint="http://mock/v1"), transport=rec)
    live = g.chat(system_user("s", "u"), "speech")
    path = tmp_path / "t.json"
    rec.save(path)
    text = path.read_text()
    assert secret not in text and "<redacted>" in text

    monkeypatch.delenv("OPENAI_API_KEY")
    replay = Gateway(ModelConfig(endpoint="http://mock/v1"), transport=ReplayTransport.from_file(path), replay_only=True)
    again = replay.chat(system_user("s", "u"), "speech")
    assert again.fields["speech"] == live.fields["speech"] == "hello"
    with pytest.raises(TransportError):
        replay.chat(system_user("s", "something new"), "speech")


def test_render_fills_every_template():
    values = {
        "others": ["Player 2", "Player 3"], "candidate_count": 6, "role_list": list(Role), "night_order": "x",
        "rounds": 3, "agent_name": "Player 1", "role": Role.SEER, "role_description": "d", "pool_names": "p",
        "history": "h", "current_belief": "b", "speaking_strategy": "s", "rounds_left": 2,
        "player_names": ["Player 2"], "tactic_names": [t.label for t in Tactic],
    }
    for tid in prompts.TEMPLATES:
        out = prompts.render(tid, values)
        assert "${" not in out


def test_render_names_missing_placeholders():
    with pytest.raises(RenderError) as exc:
        prompts.render("voting", history="h")
    assert "player_names" in exc.value.missing and "agent_name" in exc.value.missing
    with pytest.raises(RenderError):
        prompts.night_template_for(Role.VILLAGER)


def test_tactic_prompts_in_index_order():
    assert "misleading evidence" in prompts.tactic_prompt(1)
    assert prompts.tactic_prompt("Honest Accusation") == prompts.tactic_prompt(2)


def test_parsers():
    assert extract_json('sure! {"a": 1} and {"b": 2}') == {"a": 1}
    r = parse_reply("My step-by-step thought process: hmm\nMy concise result: Player 1 is a Werewolf.", "belief")
    assert r.ok and r.fields["result"].startswith("Player 1")
    assert parse_reply("no result here", "belief").parse_failed
    assert parse_player("Player 3", 5) == 2 and parse_player(9, 5) is None and parse_player(True, 5) is None
    got = parse_role_assignments("Player 1 and Player 4 are Werewolves; Player 2 is the Seer", 5)
    assert got[1] is Role.SEER and got[3] is Role.WEREWOLF


@given(st.text())
def test_parse_reply_never_raises(text):
    for fmt in ("speech", "vote", "belief", "night"):
        r = parse_reply(text, fmt)
        assert r.parse_failed == (r.fields is None)
