"""Exact Bayesian filtering over joint role assignments.

A joint type is a full :class:`~onuw.game.Assignment` (players plus pool).
Supports are small enough to enumerate eagerly: at most 8!/(2!2!) = 10080
arrangements for the five-player default multiset.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ImpossibleObservation, OnuwError
from .game import Assignment, GameSpec
from .roles import ROLE_ORDER, Role

NORM_TOL = 1e-12
# Below this, likelihoods are combined in log space.
LOG_SPACE_THRESHOLD = 1e-30

JointType = Assignment


class Belief:
    """Immutable distribution over a list of joint types.

    ``codes`` is a ``(K, slots)`` integer array of role indices, which is what
    the vectorised likelihood models consume.
    """

    __slots__ = ("_codes", "_probs", "n")

    def __init__(self, codes: np.ndarray, probs: np.ndarray, n: int):
        codes = np.asarray(codes, dtype=np.int8)
        probs = np.asarray(probs, dtype=float)
        if codes.ndim != 2 or codes.shape[0] != probs.shape[0]:
            raise ValueError("support and probabilities disagree in length")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
        codes.setflags(write=False)
        probs = probs.copy()
        probs.setflags(write=False)
        self._codes, self._probs, self.n = codes, probs, n

    @property
    def codes(self) -> np.ndarray:
        return self._codes

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    def __len__(self) -> int:
        return len(self._probs)

    @property
    def support(self) -> list:
        return [decode(row, self.n) for row in self._codes]

    def prob_of(self, theta: Assignment) -> float:
        row = encode(theta)
        hits = np.all(self._codes == row, axis=1)
        return float(self._probs[hits].sum())

    def pruned(self) -> "Belief":
        keep = self._probs > 0
        return Belief(self._codes[keep], self._probs[keep] / self._probs[keep].sum(), self.n)

    def __repr__(self) -> str:
        return f"Belief(n={self.n}, |support|={len(self)})"


def encode(theta: Assignment) -> np.ndarray:
    return np.array([r.index for r in theta.slots()], dtype=np.int8)


def decode(row, n: int) -> Assignment:
    return Assignment.from_slots([ROLE_ORDER[int(c)] for c in row], n)


def enumerate_support(spec: GameSpec, fixed: Optional[dict] = None) -> list:
    """All distinct arrangements of the candidate roles, optionally with some
    players' roles pinned (``fixed`` maps player id to Role)."""
    rows = _arrangements(tuple(sorted(r.index for r in spec.candidate_roles)))
    if fixed:
        mask = np.ones(len(rows), dtype=bool)
        for p, role in fixed.items():
            mask &= rows[:, p] == Role(role).index
        rows = rows[mask]
    return [decode(r, spec.player_count) for r in rows]


def support_codes(spec: GameSpec, fixed: Optional[dict] = None) -> np.ndarray:
    rows = _arrangements(tuple(sorted(r.index for r in spec.candidate_roles)))
    if fixed:
        mask = np.ones(len(rows), dtype=bool)
        for p, role in fixed.items():
            mask &= rows[:, p] == Role(role).index
        rows = rows[mask]
    return rows


@lru_cache(maxsize=16)
def _arrangements(cards: tuple) -> np.ndarray:
    rows = np.array(sorted(set(permutations(cards))), dtype=np.int8)
    rows.setflags(write=False)
    return rows


def uniform_prior(support, n: Optional[int] = None) -> Belief:
    """Uniform belief over ``support`` (Assignments, or a codes array with ``n``)."""
    if isinstance(support, np.ndarray):
        codes = support
        if n is None:
            raise ValueError("n is required when passing a codes array")
    else:
        support = list(support)
        if not support:
            raise OnuwError("cannot build a prior over an empty support")
        n = support[0].n
        codes = np.stack([encode(t) for t in support])
    if len(codes) == 0:
        raise OnuwError("cannot build a prior over an empty support")
    k = len(codes)
    return Belief(codes, np.full(k, 1.0 / k), n)


# -- likelihood models -------------------------------------------------------

class LikelihoodModel:
    """p(observation | joint type, history).

    Subclasses override :meth:`batch` for speed; :meth:`__call__` evaluates a
    single joint type.
    """

    def __call__(self, obs, theta: Assignment, history=()) -> float:
        raise NotImplementedError

    def batch(self, obs, codes: np.ndarray, n: int, history=()) -> np.ndarray:
        return np.array([self(obs, decode(row, n), history) for row in codes], dtype=float)


class FunctionLikelihood(LikelihoodModel):
    def __init__(self, fn: Callable):
        self.fn = fn

    def __call__(self, obs, theta, history=()):
        return float(self.fn(obs, theta, history))


class FactLikelihood(LikelihoodModel):
    """Indicator model for structured night facts.

    ``obs`` is an iterable of ``(place, index, role)`` or
    ``(place, index, role, holds)``; place is "player" or "pool".
    """

    def __call__(self, obs, theta, history=()):
        slots = theta.slots()
        n = theta.n
        for place, idx, role, holds in _facts(obs):
            pos = idx if place == "player" else n + idx
            if (slots[pos] == role) != holds:
                return 0.0
        return 1.0

    def batch(self, obs, codes, n, history=()):
        ok = np.ones(len(codes), dtype=bool)
        for place, idx, role, holds in _facts(obs):
            pos = idx if place == "player" else n + idx
            ok &= (codes[:, pos] == role.index) == holds
        return ok.astype(float)


def _facts(obs):
    for fact in obs:
        if len(fact) == 3:
            place, idx, role = fact
            holds = True
        else:
            place, idx, role, holds = fact
        yield place, int(idx), Role(role), bool(holds)


class ClaimLikelihood(LikelihoodModel):
    """Scores structured speech claims: 1 if a claim is consistent with the
    joint type, ``lam`` if it contradicts it (per claim, multiplied)."""

    def __init__(self, lam: float = 0.2):
        if not 0 < lam < 1:
            raise ValueError("lam must be in (0, 1)")
        self.lam = lam

    def __call__(self, obs, theta, history=()):
        slots = theta.slots()
        out = 1.0
        for claim in obs:
            if not claim.consistent_with(slots):
                out *= self.lam
        return out

    def batch(self, obs, codes, n, history=()):
        out = np.ones(len(codes))
        for claim in obs:
            match = (codes[:, claim.subject] == claim.role.index) == claim.holds
            out = np.where(match, out, out * self.lam)
        return out


class TableLikelihood(LikelihoodModel):
    """Likelihood given directly as one value per support entry (by position)."""

    def __init__(self, values: Sequence[float]):
        self.values = np.asarray(values, dtype=float)

    def batch(self, obs, codes, n, history=()):
        if len(self.values) != len(codes):
            raise ValueError("likelihood table length does not match the support")
        return self.values


def _likelihoods(b: Belief, obs, lik: LikelihoodModel, history) -> np.ndarray:
    values = np.asarray(lik.batch(obs, b.codes, b.n, history), dtype=float)
    if values.shape != b.probs.shape:
        raise ValueError("likelihood model returned the wrong shape")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("likelihoods must be finite and non-negative")
    return values


def _posterior(prior: np.ndarray, log_lik: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logw = np.log(prior) + log_lik
    top = logw.max()
    if not np.isfinite(top):
        raise ImpossibleObservation("observation has zero probability under every joint type")
    w = np.exp(logw - top)
    return w / w.sum()


def update(b: Belief, obs, lik: LikelihoodModel, history=()) -> Belief:
    """One Bayes step: b'(t) is proportional to b(t) * lik(obs | t, history)."""
    values = _likelihoods(b, obs, lik, history)
    positive = values[values > 0]
    if positive.size and positive.min() < LOG_SPACE_THRESHOLD:
        with np.errstate(divide="ignore"):
            post = _posterior(b.probs, np.log(values))
    else:
        w = b.probs * values
        total = w.sum()
        if total <= 0:
            raise ImpossibleObservation("observation has zero probability under every joint type")
        post = w / total
    return Belief(b.codes, post, b.n)


def batch_posterior(prior: Belief, observations: Iterable, lik: LikelihoodModel, history=()) -> Belief:
    """Posterior from the product likelihood of all observations at once."""
    log_lik = np.zeros(len(prior))
    with np.errstate(divide="ignore"):
        for obs in observations:
            log_lik = log_lik + np.log(_likelihoods(prior, obs, lik, history))
    return Belief(prior.codes, _posterior(prior.probs, log_lik), prior.n)


def chain_equals_batch(prior: Belief, observations, lik: LikelihoodModel, tol: float = 1e-10) -> bool:
    observations = list(observations)
    b = prior
    for obs in observations:
        b = update(b, obs, lik)
    batch = batch_posterior(prior, observations, lik)
    return bool(np.max(np.abs(b.probs - batch.probs)) <= tol)


def marginal(b: Belief, player: int, place: str = "player") -> np.ndarray:
    """Probability of each role (in ROLE_ORDER) at one player or pool slot."""
    pos = player if place == "player" else b.n + player
    out = np.bincount(b.codes[:, pos].astype(np.intp), weights=b.probs, minlength=len(ROLE_ORDER))
    return out / out.sum()


def marginals(b: Belief) -> np.ndarray:
    return np.stack([marginal(b, p) for p in range(b.n)])
