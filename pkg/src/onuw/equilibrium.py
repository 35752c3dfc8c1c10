"""Three-player game trees (two Werewolves, one Robber) and equilibrium checks.

Players 1 and 2 start as Werewolves and Player 3 as the Robber; the pool
holds three Villagers.  Two trees are built:

* without discussion: Player 3 chooses its night action (no switch, switch
  with Player 1, switch with Player 2), then everyone votes;
* with discussion: the night action is drawn from the Werewolves'
  post-discussion belief ``(alpha, beta, gamma)`` and only the Voting phase
  is strategic.

Voting is sequential in the tree but simultaneous in the game, so Player 2
cannot see Player 1's vote and Player 3 sees neither.  Leaf payoffs come
from the rules engine in :mod:`onuw.game`.

Information-set ids::

    P3:night      Player 3's night choice (no-discussion tree only)
    P1:vote       3 nodes, ordered by night action
    P2:vote       6 nodes, (night action, Player 1's vote)
    P3:vote:NS    4 nodes each, (Player 1's vote, Player 2's vote)
    P3:vote:S1
    P3:vote:S2

Node order inside every information set is depth-first, left to right,
with actions ordered as in ``NIGHT_ACTIONS`` and ``VOTE_TARGETS``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .errors import ConstraintViolation
from .game import (
    ActionKind,
    Assignment,
    GameSpec,
    NightAction,
    determine_outcome,
    new_game,
    resolve_night,
    tally_votes,
    utility,
)
from .roles import Role

NIGHT_ACTIONS = ("NS", "S1", "S2")
# Vote options per voter, as 0-based targets.
VOTE_TARGETS = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
VOTE_INFOSETS = ("P1:vote", "P2:vote", "P3:vote:NS", "P3:vote:S1", "P3:vote:S2")

THREE_PLAYER_DEAL = Assignment(
    (Role.WEREWOLF, Role.WEREWOLF, Role.ROBBER), (Role.VILLAGER, Role.VILLAGER, Role.VILLAGER)
)


def three_player_spec(draw_on_no_death: bool = True, discussion_rounds: int = 3) -> GameSpec:
    return GameSpec(
        3,
        THREE_PLAYER_DEAL.slots(),
        discussion_rounds=discussion_rounds,
        draw_on_no_death=draw_on_no_death,
    )


def robber_action(label: str) -> NightAction:
    if label == "NS":
        return NightAction(2, ActionKind.ROBBER_PASS)
    return NightAction(2, ActionKind.ROBBER_SWITCH, (int(label[1]) - 1,))


# -- trees -------------------------------------------------------------------

@dataclass(eq=False)
class Node:
    kind: str  # "chance", "decision" or "terminal"
    player: Optional[int] = None
    infoset: Optional[str] = None
    actions: tuple = ()
    children: tuple = ()
    probs: tuple = ()
    utilities: Optional[tuple] = None
    path: tuple = ()

    def __repr__(self):
        return f"Node({self.kind}, {'/'.join(self.path) or 'root'})"


@dataclass(eq=False)
class TreeGame:
    root: Node
    with_discussion: bool
    draw_on_no_death: bool
    infosets: dict = field(default_factory=dict)
    infoset_player: dict = field(default_factory=dict)
    infoset_actions: dict = field(default_factory=dict)
    n_players: int = 3

    def __post_init__(self):
        for node in _iter_nodes(self.root):
            if node.kind != "decision":
                continue
            self.infosets.setdefault(node.infoset, []).append(node)
            self.infoset_player.setdefault(node.infoset, node.player)
            self.infoset_actions.setdefault(node.infoset, node.actions)
        self.validate()

    def player_infosets(self, player: int) -> list:
        return [k for k, p in self.infoset_player.items() if p == player]

    def terminals(self) -> list:
        return [n for n in _iter_nodes(self.root) if n.kind == "terminal"]

    def validate(self) -> None:
        """Check perfect recall, consistent action sets and payoff range."""
        for key, nodes in self.infosets.items():
            player = self.infoset_player[key]
            for node in nodes:
                if node.player != player or node.actions != self.infoset_actions[key]:
                    raise ValueError(f"information set {key} mixes players or action sets")
            histories = {_own_history(self.root, node, player) for node in nodes}
            if len(histories) != 1:
                raise ValueError(f"perfect recall violated at {key}")
        for t in self.terminals():
            if any(u not in (-1, 0, 1) for u in t.utilities):
                raise ValueError(f"terminal utility out of range at {t}")


def _iter_nodes(node: Node):
    yield node
    for c in node.children:
        yield from _iter_nodes(c)


def _own_history(root: Node, target: Node, player: int) -> tuple:
    """(infoset, action) pairs ``player`` chose on the path to ``target``."""
    path = []

    def walk(node, acc):
        if node is target:
            path.append(tuple(acc))
            return True
        for a, c in zip(node.actions, node.children):
            step = acc + [(node.infoset, a)] if node.kind == "decision" and node.player == player else acc
            if walk(c, step):
                return True
        return False

    walk(root, [])
    return path[0]


def _terminal(spec: GameSpec, night: str, votes: tuple, path: tuple) -> Node:
    state = resolve_night(new_game(spec, deal=THREE_PLAYER_DEAL), {2: robber_action(night)})
    tally = tally_votes(dict(enumerate(votes)), 3)
    outcome = determine_outcome(state.current, tally.deaths, spec.draw_on_no_death)
    utils = tuple(utility(r, outcome) for r in state.current.player_roles)
    return Node("terminal", utilities=utils, path=path)


def _voting_subtree(spec: GameSpec, night: str, path: tuple) -> Node:
    def vote_node(voter: int, votes: tuple, path: tuple) -> Node:
        if voter == 3:
            return _terminal(spec, night, votes, path)
        infoset = f"P3:vote:{night}" if voter == 2 else f"P{voter + 1}:vote"
        labels = tuple(f"P{t + 1}" for t in VOTE_TARGETS[voter])
        children = tuple(
            vote_node(voter + 1, votes + (t,), path + (f"P{voter + 1}>{lab}",))
            for t, lab in zip(VOTE_TARGETS[voter], labels)
        )
        return Node("decision", player=voter, infoset=infoset, actions=labels, children=children, path=path)

    return vote_node(0, (), path)


def build_tree_no_discussion(draw_on_no_death: bool = True) -> TreeGame:
    """Robber night decision followed by the Voting phase.

    ``draw_on_no_death=True`` scores a vote where nobody dies as 0 for
    everyone, which is the payoff convention the closed-form utilities rely
    on; ``False`` applies the plain rules (Werewolves win).
    """
    spec = three_player_spec(draw_on_no_death)
    children = tuple(_voting_subtree(spec, a, (a,)) for a in NIGHT_ACTIONS)
    root = Node("decision", player=2, infoset="P3:night", actions=NIGHT_ACTIONS, children=children)
    return TreeGame(root, with_discussion=False, draw_on_no_death=draw_on_no_death)


@dataclass(frozen=True)
class BeliefTriple:
    """Werewolves' belief about the Robber's night action: no switch,
    switched with Player 1, switched with Player 2."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        vals = (self.alpha, self.beta, self.gamma)
        if any(v < 0 for v in vals) or abs(sum(vals) - 1) > 1e-12:
            raise ValueError(f"belief triple {vals} is not a distribution")

    def as_tuple(self) -> tuple:
        return (self.alpha, self.beta, self.gamma)


def build_tree_with_discussion(bt: BeliefTriple, draw_on_no_death: bool = True) -> TreeGame:
    """Voting subgame whose night action is drawn from the belief triple."""
    if not isinstance(bt, BeliefTriple):
        bt = BeliefTriple(*bt)
    spec = three_player_spec(draw_on_no_death)
    children = tuple(_voting_subtree(spec, a, (a,)) for a in NIGHT_ACTIONS)
    root = Node("chance", actions=NIGHT_ACTIONS, children=children, probs=bt.as_tuple())
    tree = TreeGame(root, with_discussion=True, draw_on_no_death=draw_on_no_death)
    tree.belief_triple = bt
    return tree


# -- strategies and beliefs --------------------------------------------------

Number = Union[int, float]


@dataclass(frozen=True)
class StrategyProfile3P:
    """Parameterised behaviour profile.

    s: probability the Robber switches with each Werewolf (night mix
    ``(1 - 2s, s, s)``); p: Robber votes Player 1 after no switch; q1, q2:
    each Werewolf votes Player 3; s1_vote_p1, s2_vote_p1: Robber votes
    Player 1 after switching with Player 1 / Player 2.
    """

    s: Number = 0.0
    p: Number = 0.5
    q1: Number = 0.0
    q2: Number = 0.0
    s1_vote_p1: Number = 1
    s2_vote_p1: Number = 0

    def __post_init__(self):
        for name in ("p", "q1", "q2", "s1_vote_p1", "s2_vote_p1"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} is not a probability")
        if not 0 <= self.s <= 0.5:
            raise ValueError(f"s={self.s} must lie in [0, 1/2]")

    def behavior(self, tree: Optional[TreeGame] = None) -> dict:
        beh = {
            "P1:vote": (1 - self.q1, self.q1),
            "P2:vote": (1 - self.q2, self.q2),
            "P3:vote:NS": (self.p, 1 - self.p),
            "P3:vote:S1": (self.s1_vote_p1, 1 - self.s1_vote_p1),
            "P3:vote:S2": (self.s2_vote_p1, 1 - self.s2_vote_p1),
        }
        if tree is None or not tree.with_discussion:
            beh["P3:night"] = (1 - 2 * self.s, self.s, self.s)
        return beh


@dataclass(frozen=True)
class BeliefSystem3P:
    b1: tuple
    b2: tuple
    b3_ns: tuple
    b3_s1: tuple
    b3_s2: tuple

    def __post_init__(self):
        for name, dim in (("b1", 3), ("b2", 6), ("b3_ns", 4), ("b3_s1", 4), ("b3_s2", 4)):
            vec = tuple(getattr(self, name))
            object.__setattr__(self, name, vec)
            if len(vec) != dim:
                raise ValueError(f"{name} must have {dim} entries")
            if any(v < 0 for v in vec) or abs(sum(vec) - 1) > 1e-12:
                raise ValueError(f"{name}={vec} is not normalised")

    def as_dict(self) -> dict:
        return {
            "P1:vote": self.b1,
            "P2:vote": self.b2,
            "P3:vote:NS": self.b3_ns,
            "P3:vote:S1": self.b3_s1,
            "P3:vote:S2": self.b3_s2,
        }


def _behavior(tree: TreeGame, prof) -> dict:
    if isinstance(prof, StrategyProfile3P):
        return prof.behavior(tree)
    return dict(prof)


def _beliefs(beliefs) -> dict:
    if isinstance(beliefs, BeliefSystem3P):
        return beliefs.as_dict()
    return dict(beliefs)


# -- evaluation --------------------------------------------------------------

def _value(node: Node, beh: Mapping) -> list:
    if node.kind == "terminal":
        return list(node.utilities)
    weights = node.probs if node.kind == "chance" else beh[node.infoset]
    total = [0, 0, 0]
    for w, child in zip(weights, node.children):
        if w == 0:
            continue
        v = _value(child, beh)
        for i in range(3):
            total[i] += w * v[i]
    return total


def expected_utilities(tree: TreeGame, prof) -> tuple:
    """Exact expectation of (R1, R2, R3) under a profile by full traversal."""
    return tuple(_value(tree.root, _behavior(tree, prof)))


def reach_probabilities(tree: TreeGame, prof) -> dict:
    """Probability of reaching each decision node (keyed by ``id(node)``)."""
    beh = _behavior(tree, prof)
    out = {}

    def walk(node, reach):
        if node.kind == "terminal":
            return
        out[id(node)] = reach
        weights = node.probs if node.kind == "chance" else beh[node.infoset]
        for w, child in zip(weights, node.children):
            walk(child, reach * w)

    walk(tree.root, 1)
    return out


def pure_strategies(tree: TreeGame, player: int):
    keys = tree.player_infosets(player)
    for combo in itertools.product(*(range(len(tree.infoset_actions[k])) for k in keys)):
        yield dict(zip(keys, combo))


def _with_pure(beh: Mapping, tree: TreeGame, pure: Mapping) -> dict:
    out = dict(beh)
    for key, idx in pure.items():
        out[key] = tuple(1 if j == idx else 0 for j in range(len(tree.infoset_actions[key])))
    return out


def best_response(tree: TreeGame, prof, player: int) -> tuple:
    """Exhaustive search over ``player``'s pure strategies, others fixed.

    Returns ``({infoset: action label}, value)``; ties keep the first
    strategy in enumeration order.
    """
    beh = _behavior(tree, prof)
    best, best_val = None, None
    for pure in pure_strategies(tree, player):
        val = _value(tree.root, _with_pure(beh, tree, pure))[player]
        if best_val is None or val > best_val:
            best, best_val = pure, val
    labels = {k: tree.infoset_actions[k][i] for k, i in best.items()}
    return labels, best_val


def best_response_gains(tree: TreeGame, prof) -> tuple:
    base = expected_utilities(tree, prof)
    return tuple(best_response(tree, prof, i)[1] - base[i] for i in range(3))


def nash_conv(tree: TreeGame, prof) -> float:
    """Sum over players of the utility gained by deviating to a best response."""
    return sum(best_response_gains(tree, prof))


# -- PBE verification --------------------------------------------------------

@dataclass
class PBEReport:
    on_path: dict
    consistent: dict
    consistency_error: dict
    rational: dict
    regret: dict
    nash_conv: float

    @property
    def passed(self) -> bool:
        return all(self.consistent.values()) and all(self.rational.values())

    def failures(self) -> list:
        out = [f"consistency:{k}" for k, ok in self.consistent.items() if not ok]
        out += [f"rationality:{k}" for k, ok in self.rational.items() if not ok]
        return out


def conditional_action_values(tree: TreeGame, prof, beliefs, infoset: str) -> list:
    """Believed expected utility of each action at ``infoset`` given the
    profile's continuation play."""
    beh = _behavior(tree, prof)
    b = _beliefs(beliefs)[infoset]
    player = tree.infoset_player[infoset]
    values = []
    for a in range(len(tree.infoset_actions[infoset])):
        total = 0
        for w, node in zip(b, tree.infosets[infoset]):
            if w:
                total += w * _value(node.children[a], beh)[player]
        values.append(total)
    return values


def verify_pbe(tree: TreeGame, prof, beliefs, tol: float = 1e-9, strict: bool = False, reference=None) -> PBEReport:
    """Check belief consistency and sequential rationality at every
    information set.

    Consistency is only required where the set is reached with positive
    probability; off-path beliefs are free unless ``strict`` is set, in
    which case they must match ``reference`` (defaulting to ``beliefs``
    itself, i.e. they only need to be well-formed).
    """
    beh = _behavior(tree, prof)
    bel = _beliefs(beliefs)
    ref = _beliefs(reference) if reference is not None else bel
    reach = reach_probabilities(tree, beh)
    on_path, consistent, err, rational, regret = {}, {}, {}, {}, {}
    for key, nodes in tree.infosets.items():
        if key not in bel:
            if len(nodes) == 1:
                bel[key] = (1,)
            else:
                raise ValueError(f"no belief supplied for information set {key}")
        b = bel[key]
        r = [reach[id(n)] for n in nodes]
        total = sum(r)
        on_path[key] = total > 0
        if total > 0:
            gap = max(abs(bi - ri / total) for bi, ri in zip(b, r))
            err[key] = float(gap)
            consistent[key] = gap <= tol
        else:
            gap = max(abs(bi - ri) for bi, ri in zip(b, ref.get(key, b))) if strict else 0.0
            err[key] = float(gap)
            consistent[key] = abs(sum(b) - 1) <= tol and gap <= tol

        values = conditional_action_values(tree, beh, bel, key)
        top = max(values)
        worst = max(top - v for v, pi in zip(values, beh[key]) if pi > 0)
        regret[key] = float(worst)
        rational[key] = worst <= tol
    return PBEReport(on_path, consistent, err, rational, regret, float(nash_conv(tree, beh)))


# -- closed forms and the two equilibria --------------------------------------

def no_discussion_closed_form(s, q, p=None) -> tuple:
    """Utilities of the symmetric no-discussion profile (q1 = q2 = q, the
    Robber votes for whoever it switched with)."""
    g = q * q + q - 1
    return ((1 - 2 * s) * g, (1 - 2 * s) * g, -g)


def with_discussion_closed_form(bt: BeliefTriple, q1, q2, p) -> tuple:
    a, b, c = bt.as_tuple() if isinstance(bt, BeliefTriple) else bt
    ns = q1 * q2 + (q2 - q1) * p + q1 - 1
    s1 = q1 * q2 + q2 - 1
    s2 = q1 * q2 + q1 - 1
    return (a * ns + b * s1 - c * s2, a * ns - b * s1 + c * s2, -a * ns - b * s1 - c * s2)


@dataclass
class RegionReport:
    ok: bool
    checks: dict
    bounds: dict

    def __bool__(self):
        return self.ok

    def failed(self) -> list:
        return [k for k, v in self.checks.items() if not v]


def region_check(bt, tol: float = 1e-12) -> RegionReport:
    """Whether the belief triple admits the mixed voting equilibrium."""
    a, b, c = bt.as_tuple() if isinstance(bt, BeliefTriple) else bt
    bounds = {"alpha": (0.25, 0.5)}
    checks = {
        "nonnegative": min(a, b, c) >= -tol,
        "sum_to_one": abs(a + b + c - 1) <= tol,
        "alpha_lower": a >= 0.25 - tol,
        "alpha_upper": a <= 0.5 + tol,
    }
    if a < 1:
        lo = (1 - 2 * a) / (2 - 2 * a)
        hi = (2 * a * a - 2 * a + 1) / (2 - 2 * a)
        bounds["gamma"] = (lo, hi)
        checks["gamma_lower"] = c >= lo - tol
        checks["gamma_upper"] = c <= hi + tol
    else:
        checks["gamma_lower"] = checks["gamma_upper"] = False
    return RegionReport(all(checks.values()), checks, bounds)


def delta(alpha) -> float:
    return 1 / (4 * alpha * alpha) - 1 / (2 * alpha) - 1


def closed_form_utilities(bt: BeliefTriple) -> tuple:
    rep = region_check(bt)
    if not rep:
        raise ConstraintViolation(rep.failed(), rep.bounds)
    a, b, c = bt.as_tuple()
    d = delta(a)
    return (d * (1 - 2 * c), d * (1 - 2 * b), -d)


def theorem1_profile(p: Number = 0.5) -> tuple:
    """No-discussion equilibrium: switch with either Werewolf at 1/2, vote for
    the player switched with; Werewolves vote for each other."""
    half = 0.5 if isinstance(p, float) else _half(p)
    prof = StrategyProfile3P(s=half, p=p, q1=0, q2=0, s1_vote_p1=1, s2_vote_p1=0)
    beliefs = BeliefSystem3P(
        b1=(0, half, half),
        b2=(0, 0, half, 0, half, 0),
        b3_ns=(1, 0, 0, 0),
        b3_s1=(1, 0, 0, 0),
        b3_s2=(1, 0, 0, 0),
    )
    return prof, beliefs


def _half(p):
    from fractions import Fraction

    return Fraction(1, 2) if isinstance(p, Fraction) else 0.5


def theorem2_params(bt: BeliefTriple) -> tuple:
    a, b, c = bt.as_tuple()
    q = (b + c - a) / (2 * a)
    p = (a * a + b * b - c * c) / (2 * a * a)
    return q, p


def theorem2_profile(bt: BeliefTriple) -> tuple:
    """Mixed voting equilibrium for a belief triple inside the region."""
    if not isinstance(bt, BeliefTriple):
        bt = BeliefTriple(*bt)
    rep = region_check(bt)
    if not rep:
        raise ConstraintViolation(rep.failed(), rep.bounds)
    q, p = (min(max(x, 0.0), 1.0) for x in theorem2_params(bt))
    a, b, c = bt.as_tuple()
    prof = StrategyProfile3P(s=0.0, p=p, q1=q, q2=q, s1_vote_p1=1, s2_vote_p1=0)
    b3 = ((1 - q) ** 2, (1 - q) * q, (1 - q) * q, q * q)
    beliefs = BeliefSystem3P(
        b1=(a, b, c),
        b2=(a * (1 - q), a * q, b * (1 - q), b * q, c * (1 - q), c * q),
        b3_ns=b3,
        b3_s1=b3,
        b3_s2=b3,
    )
    return prof, beliefs


def stationarity_check(bt: BeliefTriple, prof: Optional[StrategyProfile3P] = None, h: float = 1e-6) -> float:
    """Largest central-difference partial of each player's utility in its own
    voting parameter (R1 in q1, R2 in q2, R3 in p) on the discussion tree."""
    if not isinstance(bt, BeliefTriple):
        bt = BeliefTriple(*bt)
    if prof is None:
        prof = theorem2_profile(bt)[0]
    tree = build_tree_with_discussion(bt)
    params = {"q1": prof.q1, "q2": prof.q2, "p": prof.p}

    def utils(**over):
        x = {**params, **over}
        beh = {
            "P1:vote": (1 - x["q1"], x["q1"]),
            "P2:vote": (1 - x["q2"], x["q2"]),
            "P3:vote:NS": (x["p"], 1 - x["p"]),
            "P3:vote:S1": (prof.s1_vote_p1, 1 - prof.s1_vote_p1),
            "P3:vote:S2": (prof.s2_vote_p1, 1 - prof.s2_vote_p1),
        }
        return _value(tree.root, beh)

    worst = 0.0
    for player, name in ((0, "q1"), (1, "q2"), (2, "p")):
        up = utils(**{name: params[name] + h})[player]
        down = utils(**{name: params[name] - h})[player]
        worst = max(worst, abs((up - down) / (2 * h)))
    return worst


def region_grid(n_alpha: int = 10, n_gamma: int = 5) -> list:
    """Evenly spaced belief triples covering the equilibrium region,
    boundaries included."""
    out = []
    for i in range(n_alpha):
        a = 0.25 + 0.25 * i / (n_alpha - 1)
        lo = (1 - 2 * a) / (2 - 2 * a)
        hi = (2 * a * a - 2 * a + 1) / (2 - 2 * a)
        for j in range(n_gamma):
            c = lo + (hi - lo) * j / (n_gamma - 1)
            b = max(1 - a - c, 0.0)
            out.append(BeliefTriple(a, b, 1 - a - b))
    return out


def is_close(x, y, tol=1e-12) -> bool:
    return all(math.isclose(float(a), float(b), rel_tol=0, abs_tol=tol) for a, b in zip(x, y))
