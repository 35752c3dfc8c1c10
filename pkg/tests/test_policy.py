import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onuw.errors import ConfigError, NumericError
from onuw.game import Claim, SpeechEvent
from onuw.policy import (
    Batch,
    QFunction,
    TrainerConfig,
    Transition,
    cql_loss,
    cql_loss_and_grads,
    encode_features,
    grad_check,
    greedy_actions,
    load_transitions,
    save_transitions,
    select_from_values,
    structural_dim,
    train,
)
from onuw.roles import Role
from onuw.tactics import Tactic


def random_batch(rng, B, dim, terminal_frac=0.5):
    return Batch(
        rng.normal(size=(B, dim)),
        rng.integers(0, 6, B),
        rng.choice([-1.0, 0.0, 1.0], B),
        rng.normal(size=(B, dim)),
        rng.random(B) < terminal_frac,
    )


def oracle_loss(q, batch, cfg):
    """Written straight from the objective, without the gradient code."""
    qv = q.critic_values(batch.s)
    qt = q.target_values(batch.s2).min(axis=0).max(axis=1)
    y = batch.r + cfg.discount * (1 - batch.done.astype(float)) * qt
    total = 0.0
    for c in qv:
        per_row = []
        for i in range(len(batch)):
            lse = math.log(sum(math.exp(x) for x in c[i]))
            per_row.append(cfg.trade_off * (lse - c[i, batch.z[i]]) + 0.5 * (c[i, batch.z[i]] - y[i]) ** 2)
        total += sum(per_row) / len(per_row)
    return total / len(qv)


def test_zero_q_zero_reward_loss_is_rho_ln6():
    q = QFunction.create(8, hidden=(4,), zero=True)
    batch = Batch(np.zeros((5, 8)), np.arange(5), np.zeros(5), np.zeros((5, 8)), np.zeros(5, bool))
    cfg = TrainerConfig(state_dim=8)
    assert abs(cql_loss(q, batch, cfg) - 4 * math.log(6)) <= 1e-9
    assert round(cql_loss(q, batch, cfg), 5) == 7.16704


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rho=st.floats(0, 10), gamma=st.floats(0, 1))
def test_loss_matches_oracle(seed, rho, gamma):
    rng = np.random.default_rng(seed)
    q = QFunction.create(5, hidden=(7, 3), seed=seed)
    q.targets = QFunction.create(5, hidden=(7, 3), seed=seed + 1).critics
    batch = random_batch(rng, 9, 5)
    cfg = TrainerConfig(state_dim=5, trade_off=rho, discount=gamma)
    assert cql_loss(q, batch, cfg) == pytest.approx(oracle_loss(q, batch, cfg), rel=1e-10, abs=1e-12)


def test_grad_check_on_50_random_cases():
    worst = 0.0
    for case in range(50):
        rng = np.random.default_rng(case)
        dim = int(rng.integers(2, 6))
        q = QFunction.create(dim, hidden=(int(rng.integers(2, 6)), int(rng.integers(2, 6))), seed=case)
        cfg = TrainerConfig(state_dim=dim, trade_off=float(rng.uniform(0, 5)), discount=float(rng.uniform(0.5, 1)))
        worst = max(worst, grad_check(q, random_batch(rng, int(rng.integers(1, 8)), dim), cfg))
    assert worst <= 1e-4


def test_grad_check_catches_a_sign_flip():
    rng = np.random.default_rng(1)
    q = QFunction.create(4, hidden=(4, 4), seed=1)
    cfg = TrainerConfig(state_dim=4)
    batch = random_batch(rng, 6, 4)

    def flipped(qq, bb, cc):
        return [[-g for g in critic] for critic in cql_loss_and_grads(qq, bb, cc)[1]]

    assert grad_check(q, batch, cfg, grad_fn=flipped) >= 1e-1


def test_grad_check_refuses_big_networks():
    q = QFunction.create(300, hidden=(64, 64))
    with pytest.raises(ConfigError):
        grad_check(q, random_batch(np.random.default_rng(0), 2, 300), TrainerConfig(state_dim=300))


def bandit(seed, n=600, dim=16):
    rng = np.random.default_rng(seed)
    centroid = rng.uniform(0, 1, dim)
    s = centroid + 0.03 * rng.normal(size=(n, dim))
    z = rng.integers(0, 6, n)
    r = np.where(z == 2, 1.0, -1.0)
    held = centroid + 0.03 * rng.normal(size=(500, dim))
    return Batch(s, z, r, s.copy(), np.ones(n, bool)), held


def bandit_cfg(seed=0):
    return TrainerConfig(state_dim=16, hidden=(64, 64), epochs=20, steps_per_epoch=100, rng_seed=seed)


def test_bandit_training_finds_rewarded_tactic():
    data, held = bandit(0)
    q, curve = train(data, bandit_cfg())
    assert len(curve) == 20
    assert np.mean(greedy_actions(q, held) == 2) >= 0.95


def test_retrain_is_bit_identical(tmp_path):
    data, held = bandit(3)
    cfg = TrainerConfig(state_dim=16, hidden=(16, 16), epochs=3, steps_per_epoch=50, rng_seed=5)
    q1, c1 = train(data, cfg)
    q2, c2 = train(data, cfg)
    assert c1 == c2
    for a, b in zip(q1.critics, q2.critics):
        for x, y in zip(a, b):
            assert np.array_equal(x, y)
    q1.save(tmp_path / "q.npz")
    q3 = QFunction.load(tmp_path / "q.npz")
    assert np.array_equal(q3.values(held), q1.values(held))


def test_targets_stay_frozen_between_refreshes():
    data, _ = bandit(1)
    q = QFunction.create(16, hidden=(8,), seed=0)
    before = [a.copy() for a in q.targets[0]]
    cfg = TrainerConfig(state_dim=16, hidden=(8,), epochs=1, steps_per_epoch=30, target_update_interval=31)
    train(data, cfg, q)
    assert all(np.array_equal(a, b) for a, b in zip(before, q.targets[0]))
    cfg = TrainerConfig(state_dim=16, hidden=(8,), epochs=1, steps_per_epoch=30, target_update_interval=30)
    train(data, cfg, q)
    assert all(np.array_equal(a, b) for a, b in zip(q.critics[0], q.targets[0]))


def test_non_finite_state_reports_row():
    q = QFunction.create(3, hidden=(3,))
    s = np.zeros((4, 3))
    s[2, 1] = np.nan
    batch = Batch(s, np.zeros(4, int), np.zeros(4), np.zeros((4, 3)), np.ones(4, bool))
    with pytest.raises(NumericError) as exc:
        cql_loss(q, batch, TrainerConfig(state_dim=3))
    assert exc.value.index == 2


def test_greedy_ties_take_lowest_index_and_softmax_is_seeded():
    assert select_from_values([0, 1, 1, 0, 1, 0]) is Tactic.DECEPTIVE_EVIDENCE
    a = [select_from_values([0, 0.5, 1, 0, 0, 0], "softmax", 0.7, np.random.default_rng(9)) for _ in range(5)]
    b = [select_from_values([0, 0.5, 1, 0, 0, 0], "softmax", 0.7, np.random.default_rng(9)) for _ in range(5)]
    assert a == b


def test_structural_features_layout():
    assert structural_dim(5, 3) == 45
    hist = [
        SpeechEvent(0, 0, "P2 is a Werewolf", 2, (Claim(1, Role.WEREWOLF, True),)),
        SpeechEvent(0, 1, "I am not", 4, (Claim(1, Role.WEREWOLF, False),)),
    ]
    f = encode_features(hist, None, player=1, n_players=5, own_role=Role.WEREWOLF)
    v = f.values
    assert f.dim == 45
    assert np.allclose(v[:30], 1 / 6)
    assert list(v[30:34]) == [1, 0, 0, 0]
    assert v[34 + 1] == 1 and v[39 + 1] == 1 and v[-1] == 1
    with pytest.raises(ConfigError):
        encode_features(hist, None, player=1, n_players=5, expected_dim=1536)


def test_transition_file_roundtrip(tmp_path):
    ts = [Transition(np.arange(3.0), 1, -1, np.ones(3), False), Transition(np.ones(3), 5, 1, np.ones(3), True)]
    save_transitions(tmp_path / "t.jsonl", ts, "per-step", "structural")
    header, back = load_transitions(tmp_path / "t.jsonl")
    assert header["state_dim"] == 3 and header["tactics"][2] == "Honest Accusation"
    assert [t.reward for t in back] == [-1, 1] and back[1].terminal
    with pytest.raises(ValueError):
        Transition(np.zeros(3), 6, 0, np.zeros(3), True)
