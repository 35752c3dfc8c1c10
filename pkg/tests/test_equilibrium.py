import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onuw import equilibrium as eq
from onuw.errors import ConstraintViolation


# -- independent three-player evaluator ---------------------------------------
# Seats: P1, P2 dealt Werewolf, P3 dealt Robber.  Night label says whom the
# Robber switched with.  Votes are targets (0-based).

def final_roles(night):
    roles = ["W", "W", "R"]
    if night != "NS":
        k = int(night[1]) - 1
        roles[2], roles[k] = roles[k], roles[2]
    return roles


def payoff(night, votes, draw):
    roles = final_roles(night)
    counts = [votes.count(i) for i in range(3)]
    top = max(counts)
    dead = [i for i in range(3) if counts[i] == top] if top >= 2 else []
    if any(roles[d] == "W" for d in dead):
        village = True
    elif not dead and draw:
        return (0, 0, 0)
    else:
        village = False
    return tuple((1 if (r != "W") == village else -1) for r in roles)


def value(beh, draw, night_mix=None):
    """Expected utilities of a behaviour dict (infoset -> probabilities)."""
    mix = night_mix if night_mix is not None else beh["P3:night"]
    total = np.zeros(3)
    for ni, night in enumerate(("NS", "S1", "S2")):
        if mix[ni] == 0:
            continue
        for v1, v2, v3 in itertools.product(range(2), repeat=3):
            pr = beh["P1:vote"][v1] * beh["P2:vote"][v2] * beh[f"P3:vote:{night}"][v3]
            if pr == 0:
                continue
            votes = [eq.VOTE_TARGETS[0][v1], eq.VOTE_TARGETS[1][v2], eq.VOTE_TARGETS[2][v3]]
            total += mix[ni] * pr * np.array(payoff(night, votes, draw))
    return total


def oracle_nash_conv(beh, draw, night_mix=None):
    own = {0: ["P1:vote"], 1: ["P2:vote"], 2: ["P3:vote:NS", "P3:vote:S1", "P3:vote:S2"]}
    if night_mix is None:
        own[2] = ["P3:night"] + own[2]
    base = value(beh, draw, night_mix)
    gain = 0.0
    for p, sets in own.items():
        best = -np.inf
        for choice in itertools.product(*[range(len(beh[s])) for s in sets]):
            b = dict(beh)
            for s, a in zip(sets, choice):
                b[s] = tuple(1.0 if i == a else 0.0 for i in range(len(beh[s])))
            best = max(best, value(b, draw, night_mix)[p])
        gain += best - base[p]
    return gain


probs = st.floats(0, 1)


@settings(max_examples=60, deadline=None)
@given(s=st.floats(0, 0.5), p=probs, q1=probs, q2=probs, a=probs, b=probs, draw=st.booleans())
def test_tree_values_and_nash_conv_match_oracle(s, p, q1, q2, a, b, draw):
    prof = eq.StrategyProfile3P(s=s, p=p, q1=q1, q2=q2, s1_vote_p1=a, s2_vote_p1=b)
    tree = eq.build_tree_no_discussion(draw)
    beh = prof.behavior()
    assert np.allclose(eq.expected_utilities(tree, prof), value(beh, draw), atol=1e-12)
    assert eq.nash_conv(tree, prof) == pytest.approx(oracle_nash_conv(beh, draw), abs=1e-12)


def test_tree_is_well_formed():
    for tree in (eq.build_tree_no_discussion(), eq.build_tree_with_discussion(eq.BeliefTriple(1 / 3, 1 / 3, 1 / 3))):
        tree.validate()
        assert set(tree.infosets) >= set(eq.VOTE_INFOSETS)


@pytest.mark.parametrize("p", [0.0, 0.13, 0.5, 0.77, 1.0])
def test_theorem1_profile_is_pbe(p):
    tree = eq.build_tree_no_discussion()
    prof, beliefs = eq.theorem1_profile(p)
    rep = eq.verify_pbe(tree, prof, beliefs, tol=1e-9)
    assert rep.passed, rep.failures()
    assert eq.expected_utilities(tree, prof) == (0, 0, 1)
    assert oracle_nash_conv(prof.behavior(), True) == pytest.approx(0, abs=1e-12)


def test_theorem1_exact_in_fractions():
    tree = eq.build_tree_no_discussion()
    prof, _ = eq.theorem1_profile(Fraction(1, 3))
    assert eq.expected_utilities(tree, prof) == (0, 0, 1)


def test_gain_two_profile_under_plain_rules():
    prof = eq.StrategyProfile3P(s=0, p=1, q1=0, q2=0)
    strict = eq.build_tree_no_discussion(draw_on_no_death=False)
    assert eq.nash_conv(strict, prof) == 2
    assert oracle_nash_conv(prof.behavior(), False) == 2


@pytest.mark.parametrize("bt,want", [
    ((1 / 3, 1 / 3, 1 / 3), (-1 / 12, -1 / 12, 1 / 4)),
    ((0.5, 0.25, 0.25), (-0.5, -0.5, 1.0)),
])
def test_theorem2_spot_values(bt, want):
    b = eq.BeliefTriple(*bt)
    prof, beliefs = eq.theorem2_profile(b)
    tree = eq.build_tree_with_discussion(b)
    assert eq.verify_pbe(tree, prof, beliefs).passed
    assert eq.is_close(eq.expected_utilities(tree, prof), want)
    beh = prof.behavior(tree)
    assert np.allclose(value(beh, True, bt), want, atol=1e-12)


def test_theorem2_grid_closed_form_vs_traversal():
    grid = eq.region_grid(10, 5)
    assert len(grid) == 50
    for b in grid:
        prof, beliefs = eq.theorem2_profile(b)
        q, p = eq.theorem2_params(b)
        assert -1e-12 <= q <= 1 + 1e-12 and -1e-12 <= p <= 1 + 1e-12
        tree = eq.build_tree_with_discussion(b)
        rep = eq.verify_pbe(tree, prof, beliefs, tol=1e-9)
        assert rep.passed, (b, rep.failures())
        d = eq.delta(b.alpha)
        want = (d * (1 - 2 * b.gamma), d * (1 - 2 * b.beta), -d)
        assert eq.is_close(eq.expected_utilities(tree, prof), want, 1e-12)
        assert eq.stationarity_check(b, prof) <= 1e-6


@settings(max_examples=300, deadline=None)
@given(w=st.tuples(st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0.01, 1)))
def test_region_iff_params_are_probabilities(w):
    a, b, c = (x / sum(w) for x in w)
    bt = eq.BeliefTriple(a, b, c)
    q, p = eq.theorem2_params(bt)
    inside = 0 <= q <= 1 and 0 <= p <= 1
    assert bool(eq.region_check(bt)) == inside
    if not inside:
        with pytest.raises(ConstraintViolation):
            eq.theorem2_profile(bt)


def test_bad_inputs():
    with pytest.raises(ValueError):
        eq.BeliefTriple(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        eq.StrategyProfile3P(s=0.7)
    with pytest.raises(ConstraintViolation):
        eq.closed_form_utilities(eq.BeliefTriple(0.1, 0.1, 0.8))


def test_perturbed_profile_fails_verification():
    tree = eq.build_tree_no_discussion()
    _, beliefs = eq.theorem1_profile()
    bad = eq.StrategyProfile3P(s=0.5 * 0.5, p=0.5, q1=0.3, q2=0)
    rep = eq.verify_pbe(tree, bad, beliefs)
    assert not rep.passed and rep.nash_conv > 0
