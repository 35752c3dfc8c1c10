"""Discussion-tactic policy: state features, a CQL-trained Q-function, and
tactic selection.

The critics are small tanh MLPs written directly in numpy (float64), which
keeps the gradients inspectable by finite differences and the whole training
path deterministic on CPU.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, NumericError
from .roles import ROLE_ORDER, Role, Team
from .tactics import N_TACTICS, TACTIC_NAMES, Tactic

STRUCTURAL = "structural"
REMOTE = "remote-embedding"
REWARD_MODES = ("per-step", "terminal-only")


# -- features ----------------------------------------------------------------

@dataclass(frozen=True)
class StateFeatures:
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise NumericError("feature vector has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def structural_dim(n_players: int, rounds: int = 3) -> int:
    return 6 * n_players + (rounds + 1) + 2 * n_players + 1


def _claim_counts(history, n: int) -> tuple:
    acc = np.zeros(n)
    dfn = np.zeros(n)
    for ev in history:
        for c in getattr(ev, "claims", ()):
            if c.role is not Role.WEREWOLF:
                continue
            if c.holds:
                acc[c.subject] += 1
            else:
                dfn[c.subject] += 1
    return acc, dfn


def encode_features(
    history,
    belief=None,
    mode: str = STRUCTURAL,
    *,
    player: int = 0,
    n_players: Optional[int] = None,
    rounds: int = 3,
    own_role: Optional[Role] = None,
    embedder=None,
    expected_dim: Optional[int] = None,
) -> StateFeatures:
    """Featurize a player's visible history and belief.

    Structural layout, for n players and R rounds:
    ``[6n role marginals | (R+1) round one-hot | n accusations | n defenses |
    own-team flag]``.  ``belief`` is an ``(n, 6)`` marginal array (rows in
    ROLE_ORDER) or ``None`` for uniform.  Accusations and defenses count
    claims that a player is, or is not, a Werewolf.

    Remote mode embeds the concatenated history and belief text with
    ``embedder.embed([text])``.
    """
    history = list(history)
    if mode == REMOTE:
        if embedder is None:
            raise ConfigError("remote-embedding features need an embedder")
        text = history_text(history) + "\n" + belief_text(belief)
        vec = np.asarray(embedder.embed([text])[0], dtype=float)
        feats = StateFeatures(vec, {"mode": REMOTE, "dim": int(vec.shape[0])})
    elif mode == STRUCTURAL:
        if n_players is None:
            if belief is None:
                raise ConfigError("n_players is required without a belief")
            n_players = len(belief)
        n = n_players
        marg = np.full((n, 6), 1 / 6) if belief is None else np.asarray(belief, dtype=float)
        if marg.shape != (n, 6):
            raise ConfigError(f"belief marginals must be ({n}, 6), got {marg.shape}")
        speeches = [e for e in history if hasattr(e, "claims")]
        rnd = min(len(speeches) // n, rounds)
        onehot = np.zeros(rounds + 1)
        onehot[rnd] = 1
        acc, dfn = _claim_counts(speeches, n)
        team = 1.0 if own_role is not None and Role(own_role).team is Team.WEREWOLF else 0.0
        vec = np.concatenate([marg.reshape(-1), onehot, acc, dfn, [team]])
        feats = StateFeatures(vec, {"mode": STRUCTURAL, "dim": int(vec.shape[0]), "player": player})
    else:
        raise ConfigError(f"unknown feature mode {mode!r}")
    if expected_dim is not None and feats.dim != expected_dim:
        raise ConfigError(f"feature dimension {feats.dim} does not match trainer dimension {expected_dim}")
    return feats


def history_text(history) -> str:
    lines = []
    for e in history:
        if hasattr(e, "text"):
            lines.append(f"Player {e.player + 1}: {e.text}")
    return "\n".join(lines)


def belief_text(belief) -> str:
    if belief is None:
        return "No belief."
    rows = []
    for i, m in enumerate(np.asarray(belief)):
        best = int(np.argmax(m))
        rows.append(f"Player {i + 1} is most likely {ROLE_ORDER[best].value} ({m[best]:.2f}).")
    return " ".join(rows)


# -- transitions -------------------------------------------------------------

@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    tactic: int
    reward: float
    next_state: np.ndarray
    terminal: bool

    def __post_init__(self):
        if not 0 <= int(self.tactic) < N_TACTICS:
            raise ValueError(f"tactic index {self.tactic} out of range")
        if self.reward not in (-1, 0, 1):
            raise ValueError("reward must be -1, 0 or 1")


@dataclass
class Batch:
    s: np.ndarray
    z: np.ndarray
    r: np.ndarray
    s2: np.ndarray
    done: np.ndarray

    def __len__(self):
        return len(self.z)

    @classmethod
    def from_transitions(cls, ts: Sequence[Transition]) -> "Batch":
        if not ts:
            raise ValueError("empty batch")
        return cls(
            np.stack([np.asarray(t.state, dtype=float) for t in ts]),
            np.array([int(t.tactic) for t in ts]),
            np.array([float(t.reward) for t in ts]),
            np.stack([np.asarray(t.next_state, dtype=float) for t in ts]),
            np.array([bool(t.terminal) for t in ts]),
        )

    def take(self, idx) -> "Batch":
        return Batch(self.s[idx], self.z[idx], self.r[idx], self.s2[idx], self.done[idx])


def save_transitions(path, transitions: Sequence[Transition], reward_mode: str, encoder_mode: str) -> None:
    dim = len(transitions[0].state) if transitions else 0
    header = {
        "kind": "onuw-transitions/1",
        "state_dim": dim,
        "tactics": list(TACTIC_NAMES),
        "reward_mode": reward_mode,
        "encoder_mode": encoder_mode,
        "rows": len(transitions),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for t in transitions:
            row = {
                "s": [float(x) for x in t.state],
                "z": int(t.tactic),
                "r": float(t.reward),
                "s2": [float(x) for x in t.next_state],
                "done": bool(t.terminal),
            }
            fh.write(json.dumps(row) + "\n")


def load_transitions(path) -> tuple:
    """Returns ``(header, [Transition, ...])``."""
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("tactics") != list(TACTIC_NAMES):
            raise ConfigError("transition file uses a different tactic mapping")
        rows = [json.loads(line) for line in fh if line.strip()]
    ts = [Transition(np.array(r["s"]), r["z"], r["r"], np.array(r["s2"]), r["done"]) for r in rows]
    for t in ts:
        if len(t.state) != header["state_dim"] or len(t.next_state) != header["state_dim"]:
            raise ConfigError("transition row does not match the declared state dimension")
    return header, ts


# -- networks ----------------------------------------------------------------

def init_mlp(sizes: Sequence[int], rng: np.random.Generator) -> list:
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def mlp_forward(params: list, x: np.ndarray) -> tuple:
    acts = [x]
    h = x
    n_layers = len(params) // 2
    for i in range(n_layers):
        h = h @ params[2 * i] + params[2 * i + 1]
        if i < n_layers - 1:
            h = np.tanh(h)
        acts.append(h)
    return h, acts


def mlp_backward(params: list, acts: list, dout: np.ndarray) -> list:
    grads = [None] * len(params)
    n_layers = len(params) // 2
    g = dout
    for i in reversed(range(n_layers)):
        grads[2 * i] = acts[i].T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        if i > 0:
            g = (g @ params[2 * i].T) * (1 - acts[i] ** 2)
    return grads


@dataclass
class QFunction:
    """Twin critics mapping a state vector to six tactic values, plus frozen
    target copies."""

    critics: list
    targets: list
    state_dim: int
    hidden: tuple = (256, 256)

    @classmethod
    def create(cls, state_dim: int, hidden=(256, 256), n_critics: int = 2, seed: int = 0, zero: bool = False):
        rng = np.random.default_rng(seed)
        sizes = [state_dim, *hidden, N_TACTICS]
        critics = []
        for _ in range(n_critics):
            p = init_mlp(sizes, rng)
            critics.append([np.zeros_like(a) for a in p] if zero else p)
        q = cls(critics, [], state_dim, tuple(hidden))
        q.sync_targets()
        return q

    def sync_targets(self) -> None:
        self.targets = [[a.copy() for a in c] for c in self.critics]

    def n_params(self) -> int:
        return sum(a.size for c in self.critics for a in c)

    def _check(self, s: np.ndarray) -> np.ndarray:
        s = np.atleast_2d(np.asarray(s, dtype=float))
        if s.shape[1] != self.state_dim:
            raise ConfigError(f"state dimension {s.shape[1]} does not match Q-function dimension {self.state_dim}")
        return s

    def critic_values(self, s) -> np.ndarray:
        s = self._check(s)
        return np.stack([mlp_forward(c, s)[0] for c in self.critics])

    def target_values(self, s) -> np.ndarray:
        s = self._check(s)
        return np.stack([mlp_forward(c, s)[0] for c in self.targets])

    def values(self, s) -> np.ndarray:
        """Mean over critics, shape ``(batch, 6)``."""
        return self.critic_values(s).mean(axis=0)

    def save(self, path) -> None:
        arrays = {}
        for k, c in enumerate(self.critics):
            for j, a in enumerate(c):
                arrays[f"critic{k}_{j}"] = a
        for k, c in enumerate(self.targets):
            for j, a in enumerate(c):
                arrays[f"target{k}_{j}"] = a
        meta = {"state_dim": self.state_dim, "hidden": list(self.hidden), "n_critics": len(self.critics), "tactics": list(TACTIC_NAMES)}
        np.savez(path, __meta__=np.array(json.dumps(meta)), **arrays)

    @classmethod
    def load(cls, path) -> "QFunction":
        with np.load(path) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta["tactics"] != list(TACTIC_NAMES):
                raise ConfigError("Q-function file uses a different tactic mapping")
            n_arrays = 2 * (len(meta["hidden"]) + 1)
            critics = [[data[f"critic{k}_{j}"] for j in range(n_arrays)] for k in range(meta["n_critics"])]
            targets = [[data[f"target{k}_{j}"] for j in range(n_arrays)] for k in range(meta["n_critics"])]
        return cls(critics, targets, meta["state_dim"], tuple(meta["hidden"]))


# -- CQL objective -----------------------------------------------------------

@dataclass
class TrainerConfig:
    learning_rate: float = 5e-5
    discount: float = 0.99
    batch_size: int = 32
    trade_off: float = 4.0
    target_update_interval: int = 1000
    epochs: int = 100
    steps_per_epoch: int = 5000
    rng_seed: int = 0
    state_dim: int = 1536
    action_dim: int = 6
    hidden: tuple = (256, 256)
    n_critics: int = 2

    def __post_init__(self):
        if self.action_dim != N_TACTICS:
            raise ConfigError("action_dim must be 6")
        for name in ("learning_rate", "batch_size", "target_update_interval", "epochs", "steps_per_epoch", "state_dim", "n_critics"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= self.discount <= 1 or self.trade_off < 0:
            raise ConfigError("discount must lie in [0, 1] and trade_off be non-negative")
        self.hidden = tuple(self.hidden)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def _logsumexp(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=1, keepdims=True)))[:, 0]


def _raise_nonfinite(arr: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(arr)
    if bad.any():
        rows = np.nonzero(bad.reshape(bad.shape[0], -1).any(axis=1))[0]
        raise NumericError(f"non-finite {what}", int(rows[0]))


def bellman_targets(q: QFunction, batch: Batch, cfg: TrainerConfig) -> np.ndarray:
    """r + discount * max_z' min_k Q_target_k(s', z'); just r when terminal."""
    qt = q.target_values(batch.s2).min(axis=0)
    _raise_nonfinite(qt, "target Q value")
    return batch.r + cfg.discount * (~batch.done) * qt.max(axis=1)


def cql_loss_and_grads(q: QFunction, batch: Batch, cfg: TrainerConfig, params=None) -> tuple:
    """CQL objective averaged over critics, with analytic gradients.

    Per critic: ``rho * mean(logsumexp_z Q(s, z) - Q(s, z_data))
    + 0.5 * mean((Q(s, z_data) - y)^2)``.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    critics = q.critics if params is None else params
    y = bellman_targets(q, batch, cfg)
    s = q._check(batch.s)
    B = len(batch)
    rows = np.arange(B)
    K = len(critics)
    total = 0.0
    grads = []
    for c in critics:
        out, acts = mlp_forward(c, s)
        _raise_nonfinite(out, "Q value")
        lse = _logsumexp(out)
        qd = out[rows, batch.z]
        resid = qd - y
        loss = cfg.trade_off * np.mean(lse - qd) + 0.5 * np.mean(resid ** 2)
        if not np.isfinite(loss):
            _raise_nonfinite((lse - qd + resid ** 2)[:, None], "loss term")
        soft = np.exp(out - lse[:, None])
        dout = cfg.trade_off * soft
        dout[rows, batch.z] += resid - cfg.trade_off
        dout /= B * K
        grads.append(mlp_backward(c, acts, dout))
        total += loss / K
    return float(total), grads


def cql_loss(q: QFunction, batch, cfg: TrainerConfig) -> float:
    if not isinstance(batch, Batch):
        batch = Batch.from_transitions(list(batch))
    return cql_loss_and_grads(q, batch, cfg)[0]


def grad_check(q: QFunction, batch, cfg: TrainerConfig, step: float = 1e-5, grad_fn=None, floor: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; the floor keeps
    exactly-zero gradients from dividing by zero.  ``grad_fn`` can replace
    the analytic gradient (used to check the checker).
    """
    if not isinstance(batch, Batch):
        batch = Batch.from_transitions(list(batch))
    if q.n_params() > 10_000:
        raise ConfigError("grad_check is meant for networks with at most 1e4 parameters")
    grad_fn = grad_fn or (lambda qq, bb, cc: cql_loss_and_grads(qq, bb, cc)[1])
    analytic = grad_fn(q, batch, cfg)
    worst = 0.0
    for k, critic in enumerate(q.critics):
        for j, arr in enumerate(critic):
            flat = arr.reshape(-1)
            for i in range(flat.size):
                old = flat[i]
                flat[i] = old + step
                up = cql_loss_and_grads(q, batch, cfg)[0]
                flat[i] = old - step
                down = cql_loss_and_grads(q, batch, cfg)[0]
                flat[i] = old
                num = (up - down) / (2 * step)
                a = analytic[k][j].reshape(-1)[i]
                worst = max(worst, abs(a - num) / max(abs(a), abs(num), floor))
    return worst


# -- training ----------------------------------------------------------------

class Adam:
    def __init__(self, params: list, lr: float, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [[np.zeros_like(a) for a in c] for c in params]
        self.v = [[np.zeros_like(a) for a in c] for c in params]
        self.t = 0

    def step(self, params: list, grads: list) -> None:
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k, (c, g) in enumerate(zip(params, grads)):
            for j in range(len(c)):
                self.m[k][j] = self.b1 * self.m[k][j] + (1 - self.b1) * g[j]
                self.v[k][j] = self.b2 * self.v[k][j] + (1 - self.b2) * g[j] ** 2
                c[j] -= self.lr * (self.m[k][j] / c1) / (np.sqrt(self.v[k][j] / c2) + self.eps)


def train(dataset, cfg: TrainerConfig, q: Optional[QFunction] = None) -> tuple:
    """Mini-batch CQL.  Returns ``(QFunction, per-epoch mean loss list)``."""
    batch = dataset if isinstance(dataset, Batch) else Batch.from_transitions(list(dataset))
    if len(batch) == 0:
        raise ValueError("dataset is empty")
    if batch.s.shape[1] != cfg.state_dim or batch.s2.shape[1] != cfg.state_dim:
        raise ConfigError(f"dataset state dimension {batch.s.shape[1]} does not match config {cfg.state_dim}")
    if q is None:
        q = QFunction.create(cfg.state_dim, cfg.hidden, cfg.n_critics, seed=cfg.rng_seed)
    rng = np.random.default_rng(cfg.rng_seed + 1)
    opt = Adam(q.critics, cfg.learning_rate)
    curve = []
    step = 0
    for _ in range(cfg.epochs):
        losses = []
        for _ in range(cfg.steps_per_epoch):
            idx = rng.integers(0, len(batch), size=min(cfg.batch_size, len(batch)))
            loss, grads = cql_loss_and_grads(q, batch.take(idx), cfg)
            opt.step(q.critics, grads)
            losses.append(loss)
            step += 1
            if step % cfg.target_update_interval == 0:
                q.sync_targets()
        curve.append(float(np.mean(losses)))
    return q, curve


def save_loss_curve(path, curve: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss"])
        for i, v in enumerate(curve):
            w.writerow([i + 1, repr(float(v))])


# -- selection ---------------------------------------------------------------

def select_from_values(values, mode: str = "greedy", temperature: float = 1.0, rng=None) -> Tactic:
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.shape[0] != N_TACTICS:
        raise ConfigError("expected six action values")
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite Q values", int(np.nonzero(~np.isfinite(v))[0][0]))
    if mode == "greedy":
        return Tactic(int(np.argmax(v)))
    if mode == "softmax":
        if temperature <= 0:
            raise ConfigError("softmax temperature must be positive")
        if rng is None:
            rng = np.random.default_rng(0)
        logits = v / temperature
        p = np.exp(logits - logits.max())
        p /= p.sum()
        return Tactic(int(rng.choice(N_TACTICS, p=p)))
    raise ConfigError(f"unknown selection mode {mode!r}")


def select_tactic(q: QFunction, s, mode: str = "greedy", temperature: float = 1.0, rng=None) -> Tactic:
    values = s.values if isinstance(s, StateFeatures) else s
    return select_from_values(q.values(values)[0], mode, temperature, rng)


def greedy_actions(q: QFunction, states: np.ndarray) -> np.ndarray:
    return np.argmax(q.values(states), axis=1)
