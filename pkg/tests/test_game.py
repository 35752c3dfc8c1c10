import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

from onuw.errors import IllegalActionError, IntegrityError, PhaseError, VoteValidationError
from onuw.game import (
    ActionKind,
    Assignment,
    GameSpec,
    NightAction,
    Outcome,
    Phase,
    cast_votes,
    determine_outcome,
    legal_night_actions,
    new_game,
    resolve_night,
    speak,
    tally_votes,
    utilities,
    utility,
)
from onuw.gamelog import load, parse, replay, serialize
from onuw.roles import Role, Team

R = Role
POOL = (R.VILLAGER, R.VILLAGER, R.VILLAGER)


# Independent oracle, written from the rules rather than from game.py.
def oracle_deaths(votes, n):
    received = {p: sum(1 for t in votes if t == p) for p in range(n)}
    best = max(received.values())
    if best < 2:
        return set()
    return {p for p, c in received.items() if c == best}


def oracle_winner(final_roles, deaths):
    wolves = {i for i, r in enumerate(final_roles) if r is R.WEREWOLF}
    if any(d in wolves for d in deaths):
        return "village"
    if wolves:
        return "werewolf"
    return "village" if not deaths else "none"


def all_vote_profiles(n):
    choices = [[t for t in range(n) if t != v] for v in range(n)]
    return itertools.product(*choices)


FINALS = {
    3: [(R.WEREWOLF, R.WEREWOLF, R.ROBBER), (R.VILLAGER, R.ROBBER, R.SEER), (R.WEREWOLF, R.SEER, R.VILLAGER)],
    4: [(R.WEREWOLF, R.SEER, R.ROBBER, R.VILLAGER), (R.SEER, R.ROBBER, R.VILLAGER, R.TROUBLEMAKER)],
    5: [(R.TROUBLEMAKER, R.WEREWOLF, R.SEER, R.ROBBER, R.VILLAGER), (R.WEREWOLF, R.WEREWOLF, R.SEER, R.ROBBER, R.VILLAGER),
        (R.VILLAGER, R.INSOMNIAC, R.SEER, R.ROBBER, R.TROUBLEMAKER)],
}


@pytest.mark.parametrize("n", [3, 4, 5])
def test_tally_and_outcome_match_oracle_on_every_profile(n):
    count = 0
    for votes in all_vote_profiles(n):
        tally = tally_votes(dict(enumerate(votes)), n)
        assert set(tally.deaths) == oracle_deaths(votes, n)
        for roles in FINALS[n]:
            final = Assignment(roles, POOL)
            want = oracle_winner(roles, tally.deaths)
            got = determine_outcome(final, tally.deaths)
            assert got.value.lower() == want
        count += 1
    assert count == (n - 1) ** n


def test_three_player_no_death_is_werewolf_win_by_default_and_draw_when_asked():
    final = Assignment((R.WEREWOLF, R.ROBBER, R.WEREWOLF), POOL)
    assert determine_outcome(final, ()) is Outcome.WEREWOLF
    assert determine_outcome(final, (), draw_on_no_death=True) is Outcome.DRAW


@pytest.mark.parametrize("bad", [{0: 0, 1: 0, 2: 1}, {0: 1, 1: 0}, {0: 7, 1: 0, 2: 0}])
def test_bad_votes_are_rejected(bad):
    with pytest.raises(VoteValidationError):
        tally_votes(bad, 3)


def test_abilities_follow_initial_role_and_night_order():
    spec = GameSpec(5, (R.TROUBLEMAKER, R.WEREWOLF, R.SEER, R.ROBBER, R.VILLAGER, R.WEREWOLF, R.VILLAGER, R.INSOMNIAC))
    deal = Assignment((R.TROUBLEMAKER, R.WEREWOLF, R.SEER, R.ROBBER, R.VILLAGER), (R.WEREWOLF, R.VILLAGER, R.INSOMNIAC))
    st0 = new_game(spec, deal)
    acts = {
        2: NightAction(2, ActionKind.SEER_PLAYER, (3,)),
        3: NightAction(3, ActionKind.ROBBER_SWITCH, (0,)),
        0: NightAction(0, ActionKind.TROUBLEMAKER_SWAP, (2, 4)),
    }
    s = resolve_night(st0, acts)
    # Robber takes Troublemaker's card; the Troublemaker (now Robber) still swaps.
    assert s.current.player_roles == (R.ROBBER, R.WEREWOLF, R.VILLAGER, R.TROUBLEMAKER, R.SEER)
    # Seer looked before the robbery and saw the Robber.
    assert s.observation_of(2).observation.seen == (("player", 3, R.ROBBER),)
    assert s.observation_of(3).observation.seen == (("player", 3, R.TROUBLEMAKER),)


def test_hard_setting_final_roles():
    spec = GameSpec(5, (R.ROBBER, R.INSOMNIAC, R.SEER, R.WEREWOLF, R.TROUBLEMAKER, R.WEREWOLF, R.VILLAGER, R.VILLAGER))
    deal = Assignment((R.ROBBER, R.INSOMNIAC, R.SEER, R.WEREWOLF, R.TROUBLEMAKER), (R.WEREWOLF, R.VILLAGER, R.VILLAGER))
    s = resolve_night(new_game(spec, deal), {
        2: NightAction(2, ActionKind.SEER_PLAYER, (3,)),
        0: NightAction(0, ActionKind.ROBBER_SWITCH, (3,)),
        4: NightAction(4, ActionKind.TROUBLEMAKER_SWAP, (1, 2)),
    })
    assert s.current.player_roles == (R.WEREWOLF, R.SEER, R.INSOMNIAC, R.ROBBER, R.TROUBLEMAKER)
    # Insomniac woke after the swap and sees the Seer card.
    assert s.observation_of(1).observation.seen == (("player", 1, R.SEER),)


def test_illegal_actions_and_phases():
    spec = GameSpec.default(5)
    st0 = new_game(spec)
    robber = next(i for i, r in enumerate(st0.initial.player_roles) if r is R.ROBBER)
    with pytest.raises(IllegalActionError):
        resolve_night(st0, {robber: NightAction(robber, ActionKind.ROBBER_SWITCH, (robber,))})
    with pytest.raises(PhaseError):
        cast_votes(st0, {i: (i + 1) % 5 for i in range(5)})
    first = {p: legal_night_actions(st0, p)[0] for p in range(5) if legal_night_actions(st0, p)}
    s = resolve_night(st0, first)
    with pytest.raises(PhaseError):
        speak(s, 1, "out of turn")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.sampled_from([3, 4, 5]), data=st.data())
def test_night_preserves_card_multiset(seed, n, data):
    spec = GameSpec.default(n, rng_seed=seed)
    s = new_game(spec)
    acts = {}
    for p in range(n):
        legal = legal_night_actions(s, p)
        if legal:
            acts[p] = data.draw(st.sampled_from(legal))
    out = resolve_night(s, acts)
    assert out.current.multiset() == s.initial.multiset()
    assert out.phase is Phase.DAY


@settings(max_examples=80, deadline=None)
@given(n=st.sampled_from([3, 4, 5]), data=st.data())
def test_utilities_follow_team_of_final_role(n, data):
    roles = data.draw(st.lists(st.sampled_from(list(Role)), min_size=n, max_size=n))
    votes = {v: data.draw(st.sampled_from([t for t in range(n) if t != v])) for v in range(n)}
    tally = tally_votes(votes, n)
    outcome = determine_outcome(Assignment(tuple(roles), POOL), tally.deaths)
    us = [utility(r, outcome) for r in roles]
    if outcome is Outcome.NONE:
        assert us == [-1] * n
    else:
        winners = Team.VILLAGE if outcome is Outcome.VILLAGE else Team.WEREWOLF
        assert us == [1 if r.team is winners else -1 for r in roles]
    assert len(tally.deaths) == 0 or max(tally.counts) >= 2


def test_fixture_replays_to_village_win(hard_log_path):
    g = load(hard_log_path)
    s = replay(g)
    assert s.outcome is Outcome.VILLAGE
    assert sorted(s.deaths) == [0, 4]
    assert utilities(s) == g.utilities == (-1, 1, 1, 1, 1)


def test_tampered_log_is_detected(hard_log_path):
    d = json.loads(hard_log_path.read_text())
    d["votes"][2]["target"] = 1
    with pytest.raises(IntegrityError) as exc:
        replay(parse(json.dumps(d)))
    assert exc.value.event == "vote[2]"


def test_log_roundtrip(hard_log_path):
    g = load(hard_log_path)
    assert parse(serialize(g)) == g
