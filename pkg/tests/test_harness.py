import csv

import numpy as np
import pytest

from onuw import equilibrium as eq
from onuw.agents import ProfileAgent
from onuw.cli import main as cli
from onuw.errors import ConfigError
from onuw.game import GameSpec, NightAction, ActionKind, new_game, resolve_night, speak, cast_votes
from onuw.gamelog import load, log_from_state
from onuw.harness import (
    ExperimentConfig,
    estimate_strategy_and_nashconv,
    extract_transitions,
    interactive_seat,
    profile_games,
    replay_tables_match,
    run_match,
    run_tournament,
    tactic_statistics,
)
from onuw.policy import structural_dim
from onuw.roles import Role
from onuw.tactics import Tactic

R = Role


def scripted_logs(n, setting="five_standard"):
    cfg = ExperimentConfig(setting=setting)
    return [run_match(cfg, seed) for seed in range(n)]


def test_120_logs_give_1800_transitions():
    logs = scripted_logs(120)
    assert all(g.valid and len(g.speeches) == 15 for g in logs)
    rows, stats = extract_transitions(logs)
    assert len(rows) == stats.rows == 1800 and stats.skipped == 0
    assert {len(t.state) for t in rows} == {structural_dim(5, 3)}
    assert sum(t.terminal for t in rows) == 120 * 5


def hand_log():
    """Three players, two rounds, split votes: nobody dies, Werewolves win."""
    deal = eq.THREE_PLAYER_DEAL
    spec = GameSpec(3, deal.slots(), discussion_rounds=2)
    s = resolve_night(new_game(spec, deal), {2: NightAction(2, ActionKind.ROBBER_PASS)})
    for rnd in range(2):
        for p in range(3):
            tactic = None if (rnd, p) == (1, 1) else (p + rnd) % 6
            s = speak(s, p, f"speech {rnd}{p}", tactic, ())
    s = cast_votes(s, {0: 1, 1: 2, 2: 0})
    return log_from_state(s)


def test_reward_modes_on_a_hand_log():
    g = hand_log()
    assert g.deaths == () and g.utilities == (1, 1, -1)
    per, stats = extract_transitions([g], "per-step")
    term, _ = extract_transitions([g], "terminal-only")
    assert stats.skipped == 1 and stats.rows == 5
    # Order: by player, then speech.  Player 2's second speech had no tactic.
    assert [t.reward for t in per] == [1, 1, 1, -1, -1]
    assert [t.reward for t in term] == [0, 1, 1, 0, -1]
    assert [t.terminal for t in term] == [False, True, True, False, True]
    assert [t.tactic for t in per] == [0, 1, 1, 2, 3]
    with pytest.raises(ConfigError):
        extract_transitions([g], "sometimes")


def test_tactic_statistics_on_constructed_logs():
    deal = eq.THREE_PLAYER_DEAL
    spec = GameSpec(3, deal.slots(), discussion_rounds=1)
    logs = []
    for k in range(10):
        s = resolve_night(new_game(spec, deal), {2: NightAction(2, ActionKind.ROBBER_PASS)})
        s = speak(s, 0, "a", Tactic.DECEPTIVE_EVIDENCE.index if k < 6 else Tactic.HONEST_DEFENSE.index)
        s = speak(s, 1, "b", None)
        s = speak(s, 2, "c", Tactic.HONEST_EVIDENCE.index)
        logs.append(log_from_state(cast_votes(s, {0: 1, 1: 0, 2: 0})))
    table = tactic_statistics(logs, roles=[R.WEREWOLF, R.ROBBER, R.SEER])
    assert table.percent[R.WEREWOLF] == [0, 60, 0, 0, 40, 0]
    assert table.percent[R.ROBBER] == [100, 0, 0, 0, 0, 0]
    assert table.flagged == [R.SEER]


def test_tournament_is_deterministic_and_worker_independent(tmp_path):
    lineups = [{"name": "a"}, {"name": "b", "kind": "RandomTactic"}]
    base = dict(setting="five_hard", village=lineups, werewolf=lineups, repeats=4)
    r1 = run_tournament(ExperimentConfig(**base), tmp_path / "one")
    r2 = run_tournament(ExperimentConfig(**base, workers=4))
    assert np.array_equal(r1.win_rate, r2.win_rate)
    assert all(r1.logs[k].digests == r2.logs[k].digests for k in r1.logs)
    rows = list(csv.reader(open(tmp_path / "one" / "win_rate_matrix.csv")))
    assert rows[0] == ["village \\ werewolf", "a", "b"] and len(rows) == 3


def test_scripted_tournament_cell_value():
    # Every seat scripted and the night pinned: each repeat is the same game.
    res = run_tournament(ExperimentConfig(setting="five_hard", repeats=3))
    games = list(res.logs.values())
    assert len({(g.votes, g.deaths, g.outcome) for g in games}) == 1
    assert res.win_rate[0, 0] in (0.0, 1.0)


def test_replay_tables_reproduce_a_log(hard_log_path):
    g = load(hard_log_path)
    again = replay_tables_match(g)
    assert again.votes == g.votes and again.deaths == g.deaths and again.outcome == g.outcome


def test_estimator_on_equilibrium_and_gain_two_profiles():
    t1 = estimate_strategy_and_nashconv(profile_games(eq.theorem1_profile()[0].behavior(), 500, seed=1),
                                        draw_on_no_death=True)
    assert t1.nash_conv <= 0.1 and not t1.low_confidence
    g2 = estimate_strategy_and_nashconv(profile_games(eq.StrategyProfile3P(s=0, p=1).behavior(), 500, seed=2))
    assert abs(g2.nash_conv - 2.0) <= 0.2
    assert set(g2.unvisited) == {"P3:vote:S1", "P3:vote:S2"}


def test_estimator_error_shrinks_with_more_logs():
    beh = eq.theorem1_profile()[0].behavior()
    errs = [estimate_strategy_and_nashconv(profile_games(beh, n, seed=3), draw_on_no_death=True).nash_conv
            for n in (20, 2000)]
    assert errs[1] < errs[0]


def test_estimator_needs_three_player_logs():
    with pytest.raises(ConfigError):
        estimate_strategy_and_nashconv(scripted_logs(1))


def test_human_seat_as_theorem1_robber():
    beh = eq.theorem1_profile()[0].behavior()
    cfg = ExperimentConfig(setting="three_player", seats=[ProfileAgent(beh, 0), ProfileAgent(beh, 1), {}])
    answers = iter(["9", "1", "hello", "I robbed nobody", "fine", "3", "1"])
    shown = []
    g = interactive_seat(cfg, 2, lambda prompt: next(answers), shown.append)
    assert g.valid and g.deaths == (0,)
    assert g.utilities[2] == 1
    assert "not a legal choice, try again" in shown and "illegal vote, try again" in shown


def test_human_quit_gives_invalid_partial_log():
    cfg = ExperimentConfig(setting="three_player")
    answers = iter(["0", "quit"])
    g = interactive_seat(cfg, 2, lambda prompt: next(answers), lambda s: None)
    assert not g.valid and g.votes == () and any("HumanQuit" in f for f in g.flags)


def test_cli_commands(tmp_path, hard_log_path, capsys):
    logs = tmp_path / "logs"
    assert cli(["play", "--setting", "three_player", "--games", "3", "--out", str(logs)]) == 0
    assert len(list(logs.glob("*.json"))) == 3
    assert cli(["extract", str(logs), "--out", str(tmp_path / "t.jsonl")]) == 0
    assert cli(["stats", str(logs)]) == 0
    assert cli(["replay", str(hard_log_path)]) == 0
    assert cli(["nashconv", "--profile", "0,1,0,0", "--strict"]) == 0
    assert "NashConv 2.000000" in capsys.readouterr().out

    bad = tmp_path / "bad.json"
    bad.write_text(hard_log_path.read_text().replace('"target": 0', '"target": 1', 1))
    assert cli(["replay", str(bad)]) == 1
    assert cli(["replay", str(tmp_path / "missing.json")]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"setting": "six_player"}')
    assert cli(["play", "--config", str(cfg)]) == 2
