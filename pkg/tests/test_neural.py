import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlabo.neural import (
    AdamState,
    MlpParams,
    PolicyParams,
    actor_forward,
    adam_step,
    argmax_action,
    backprop,
    critic_forward,
    flatten,
    init_policy,
    load_checkpoint,
    mlp_forward,
    sample_action,
    save_checkpoint,
    unflatten_like,
)

STATE_DIM = 4


@pytest.fixture
def policy():
    return init_policy(STATE_DIM, np.random.default_rng(0))


def finite_difference_grad(fn, p: PolicyParams, idx=None, h=1e-6):
    """Central finite differences of a scalar function of the parameters.

    ``idx`` selects which coordinates to probe (all when None).
    """
    theta = flatten(p)
    if idx is None:
        idx = np.arange(theta.size)
    g = np.zeros(len(idx))
    for k, i in enumerate(idx):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        g[k] = (fn(unflatten_like(p, up)) - fn(unflatten_like(p, dn))) / (2 * h)
    return g


class TestActorForward:
    def test_zero_output_layer_gives_uniform(self, policy):
        p = policy.copy()
        p.actor.weights[-1][:] = 0.0
        p.actor.biases[-1][:] = 0.0
        probs = actor_forward(p, np.ones(STATE_DIM))
        np.testing.assert_allclose(probs, 0.2, atol=1e-15)

    def test_shift_invariance(self, policy):
        s = np.array([0.3, -1.0, 0.05, 0.2])
        base = actor_forward(policy, s)
        shifted = policy.copy()
        shifted.actor.biases[-1] += 123.0
        np.testing.assert_allclose(actor_forward(shifted, s), base, atol=1e-12)

    def test_normalization_and_positivity(self, policy):
        rng = np.random.default_rng(3)
        states = rng.standard_normal((50, STATE_DIM))
        probs = actor_forward(policy, states)
        assert probs.shape == (50, 5)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(probs > 0)

    def test_rejects_nonfinite_state(self, policy):
        with pytest.raises(ValueError):
            actor_forward(policy, np.array([1.0, np.nan, 0.0, 0.0]))


class TestCriticForward:
    def test_zero_output_layer_gives_zero(self, policy):
        p = policy.copy()
        p.critic.weights[-1][:] = 0.0
        p.critic.biases[-1][:] = 0.0
        assert critic_forward(p, np.ones(STATE_DIM)) == 0.0

    def test_deterministic(self, policy):
        s = np.array([1.0, 2.0, -0.5, 0.1])
        assert critic_forward(policy, s) == critic_forward(policy, s)

    def test_bounded_inputs_no_overflow(self, policy):
        rng = np.random.default_rng(5)
        states = rng.uniform(-10, 10, size=(100, STATE_DIM))
        vals = critic_forward(policy, states)
        assert np.all(np.isfinite(vals))


class TestActions:
    def test_one_hot_always_sampled(self):
        probs = np.array([0.0, 0.0, 0.0, 1.0, 0.0])
        rng = np.random.default_rng(0)
        assert all(sample_action(probs, rng) == 3 for _ in range(100))

    def test_uniform_frequencies(self):
        probs = np.full(5, 0.2)
        rng = np.random.default_rng(7)
        counts = np.bincount([sample_action(probs, rng) for _ in range(10_000)], minlength=5)
        freqs = counts / 10_000
        assert np.all(freqs >= 0.17) and np.all(freqs <= 0.23)

    def test_sampling_reproducible(self):
        probs = np.array([0.1, 0.2, 0.3, 0.2, 0.2])
        a = [sample_action(probs, np.random.default_rng(42)) for _ in range(5)]
        b = [sample_action(probs, np.random.default_rng(42)) for _ in range(5)]
        assert a == b

    def test_argmax(self):
        assert argmax_action(np.array([0.1, 0.5, 0.2, 0.1, 0.1])) == 1
        assert argmax_action(np.array([0.3, 0.3, 0.2, 0.1, 0.1])) == 0
        assert argmax_action(np.array([0.0, 0.0, 0.0, 0.0, 1.0])) == 4


class TestBackprop:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        for trial in range(30):
            p = init_policy(STATE_DIM, np.random.default_rng(100 + trial))
            # scale up output layers so gradients are not degenerate
            p.actor.weights[-1] *= 50.0
            p.critic.weights[-1] *= 50.0
            states = rng.standard_normal((3, STATE_DIM))
            da = rng.standard_normal((3, 5))
            dc = rng.standard_normal(3)

            def loss(q):
                a_out, _ = mlp_forward(q.actor, states)
                c_out, _ = mlp_forward(q.critic, states)
                return float(np.sum(a_out * da) + np.sum(c_out[:, 0] * dc))

            g = flatten(backprop(p, states, da, dc))
            idx = rng.choice(g.size, size=400, replace=False)
            g_fd = finite_difference_grad(loss, p, idx)
            rel = np.linalg.norm(g[idx] - g_fd) / max(np.linalg.norm(g_fd), 1e-12)
            assert rel < 1e-4

    def test_zero_upstream_gives_zero_gradient(self, policy):
        states = np.zeros((4, STATE_DIM))
        g = backprop(policy, states, np.zeros((4, 5)), np.zeros(4))
        assert np.all(flatten(g) == 0.0)

    def test_batch_gradient_is_sum_of_samples(self, policy):
        rng = np.random.default_rng(9)
        states = rng.standard_normal((6, STATE_DIM))
        da = rng.standard_normal((6, 5))
        dc = rng.standard_normal(6)
        full = flatten(backprop(policy, states, da, dc))
        acc = np.zeros_like(full)
        for i in range(6):
            acc += flatten(backprop(policy, states[i : i + 1], da[i : i + 1], dc[i : i + 1]))
        np.testing.assert_allclose(full, acc, atol=1e-10)

    def test_shape_mismatch_rejected(self, policy):
        with pytest.raises(ValueError):
            backprop(policy, np.zeros((2, STATE_DIM)), np.zeros((3, 5)), np.zeros(2))


class TestFlattening:
    def test_round_trip(self, policy):
        vec = flatten(policy)
        again = flatten(unflatten_like(policy, vec))
        np.testing.assert_array_equal(vec, again)

    def test_parameter_count(self, policy):
        expected = policy.actor.n_params + policy.critic.n_params
        assert flatten(policy).size == expected

    def test_wrong_length_rejected(self, policy):
        with pytest.raises(ValueError):
            unflatten_like(policy, np.zeros(flatten(policy).size + 1))


class TestAdam:
    def test_moves_against_gradient(self):
        theta = np.array([1.0, -1.0])
        st8 = AdamState.zeros(2)
        out = adam_step(theta, np.array([1.0, -1.0]), st8, lr=0.1)
        assert out[0] < theta[0] and out[1] > theta[1]

    def test_zero_lr_keeps_parameters(self):
        theta = np.array([0.5, 0.25])
        out = adam_step(theta, np.array([1.0, 2.0]), AdamState.zeros(2), lr=0.0)
        np.testing.assert_array_equal(out, theta)


class TestCheckpoint:
    def test_bit_exact_round_trip(self, policy, tmp_path):
        path = tmp_path / "ckpt.json"
        save_checkpoint(path, policy, meta={"benchmark": "ackley", "seed": 1})
        loaded, meta = load_checkpoint(path)
        np.testing.assert_array_equal(flatten(policy), flatten(loaded))
        assert meta["benchmark"] == "ackley"

    def test_arch_block(self, policy, tmp_path):
        import json

        path = tmp_path / "ckpt.json"
        save_checkpoint(path, policy)
        obj = json.loads(path.read_text())
        assert obj["arch"] == {"in_dim": 4, "hidden": [64, 64], "actions": 5}

    def test_inconsistent_arch_rejected(self, policy, tmp_path):
        import json

        path = tmp_path / "ckpt.json"
        save_checkpoint(path, policy)
        obj = json.loads(path.read_text())
        obj["arch"]["in_dim"] = 9
        path.write_text(json.dumps(obj))
        with pytest.raises(ValueError):
            load_checkpoint(path)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=STATE_DIM, max_size=STATE_DIM))
def test_probabilities_sum_to_one_property(vals):
    p = init_policy(STATE_DIM, np.random.default_rng(2))
    probs = actor_forward(p, np.asarray(vals))
    assert abs(float(probs.sum()) - 1.0) < 1e-12
