"""Feed-forward machinery for the actor and critic.

Two separate MLPs, each in_dim -> 64 -> 64 -> out_dim with tanh hidden units
and identity outputs; the actor ends in a softmax over the five acquisition
choices and the critic in a scalar value. Gradients are hand-derived for this
fixed architecture (no autodiff), and the whole parameter vector is what the
optimizer updates.

Weight init is scaled-uniform with the tanh gain limit sqrt(6/(fan_in +
fan_out)); output layers are additionally scaled by 0.01 so the initial
policy is near-uniform and initial values near zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HIDDEN = (64, 64)
N_ACTIONS = 5
PROB_FLOOR = 1e-12


@dataclass
class MlpParams:
    """Layer weights (out, in) and biases (out,) for one network."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


@dataclass
class PolicyParams:
    """Actor and critic parameters; the update treats them as one spliced vector."""

    actor: MlpParams
    critic: MlpParams

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.actor.copy(), self.critic.copy())

    @property
    def state_dim(self) -> int:
        return self.actor.weights[0].shape[1]

    @property
    def n_actions(self) -> int:
        return self.actor.weights[-1].shape[0]


def _init_mlp(in_dim: int, out_dim: int, rng: np.random.Generator, out_scale: float) -> MlpParams:
    dims = [in_dim, *HIDDEN, out_dim]
    weights, biases = [], []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        if i == len(dims) - 2:
            w = w * out_scale
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def init_policy(state_dim: int, rng: np.random.Generator, n_actions: int = N_ACTIONS) -> PolicyParams:
    return PolicyParams(
        actor=_init_mlp(state_dim, n_actions, rng, out_scale=0.01),
        critic=_init_mlp(state_dim, 1, rng, out_scale=0.01),
    )


def mlp_forward(p: MlpParams, x: np.ndarray):
    """Batch forward pass; returns (output (n,out), cache for backprop)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    acts = [x]
    h = x
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w.T + b
        h = z if i == last else np.tanh(z)
        acts.append(h)
    return h, acts


def mlp_backward(p: MlpParams, acts: list[np.ndarray], d_out: np.ndarray) -> MlpParams:
    """Gradients of sum(d_out * output) w.r.t. all weights and biases."""
    d_out = np.atleast_2d(np.asarray(d_out, dtype=float))
    if d_out.shape != acts[-1].shape:
        raise ValueError(f"upstream shape {d_out.shape} != output shape {acts[-1].shape}")
    gw = [None] * len(p.weights)
    gb = [None] * len(p.biases)
    delta = d_out
    for i in range(len(p.weights) - 1, -1, -1):
        gw[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            # acts[i] is tanh(z_i) for hidden layers; d tanh = 1 - tanh^2
            delta = (delta @ p.weights[i]) * (1.0 - acts[i] ** 2)
    return MlpParams(gw, gb)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def actor_forward(p: PolicyParams, state: np.ndarray) -> np.ndarray:
    """Action probabilities; (5,) for one state or (n, 5) for a batch."""
    s = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("state must be finite")
    logits, _ = mlp_forward(p.actor, s)
    probs = _softmax(logits)
    return probs[0] if s.ndim == 1 else probs


def critic_forward(p: PolicyParams, state: np.ndarray):
    """State value; float for one state or (n,) for a batch."""
    s = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("state must be finite")
    out, _ = mlp_forward(p.critic, s)
    return float(out[0, 0]) if s.ndim == 1 else out[:, 0]


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw an action index from the distribution (inverse-CDF)."""
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, len(probs) - 1)


def argmax_action(probs: np.ndarray) -> int:
    """Most probable action; ties go to the lowest index."""
    return int(np.argmax(probs))


def backprop(
    p: PolicyParams,
    states: np.ndarray,
    d_actor_logits: np.ndarray,
    d_critic_out: np.ndarray,
) -> PolicyParams:
    """Exact gradients through both networks for given upstream gradients.

    ``d_actor_logits`` is (n, 5) against the actor's pre-softmax outputs and
    ``d_critic_out`` is (n,) against the critic's scalar.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    _, a_acts = mlp_forward(p.actor, states)
    _, c_acts = mlp_forward(p.critic, states)
    ga = mlp_backward(p.actor, a_acts, d_actor_logits)
    gc = mlp_backward(p.critic, c_acts, np.asarray(d_critic_out, dtype=float).reshape(-1, 1))
    return PolicyParams(ga, gc)


def flatten(p: PolicyParams) -> np.ndarray:
    parts = []
    for mlp in (p.actor, p.critic):
        for w, b in zip(mlp.weights, mlp.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
    return np.concatenate(parts)


def unflatten_like(template: PolicyParams, vec: np.ndarray) -> PolicyParams:
    out = template.copy()
    k = 0
    for mlp in (out.actor, out.critic):
        for i in range(len(mlp.weights)):
            w, b = mlp.weights[i], mlp.biases[i]
            mlp.weights[i] = vec[k : k + w.size].reshape(w.shape).copy()
            k += w.size
            mlp.biases[i] = vec[k : k + b.size].reshape(b.shape).copy()
            k += b.size
    if k != vec.size:
        raise ValueError(f"vector length {vec.size} != parameter count {k}")
    return out


@dataclass
class AdamState:
    """First/second moment accumulators for the flattened parameter vector."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n))


def adam_step(
    theta: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> np.ndarray:
    """One adaptive-moment update; mutates ``state``, returns new parameters."""
    state.step += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad**2
    m_hat = state.m / (1.0 - beta1**state.step)
    v_hat = state.v / (1.0 - beta2**state.step)
    return theta - lr * m_hat / (np.sqrt(v_hat) + eps)


def _mlp_to_json(p: MlpParams) -> dict:
    return {
        "weights": [w.tolist() for w in p.weights],
        "biases": [b.tolist() for b in p.biases],
    }


def _mlp_from_json(obj: dict) -> MlpParams:
    return MlpParams(
        [np.asarray(w, dtype=float) for w in obj["weights"]],
        [np.asarray(b, dtype=float) for b in obj["biases"]],
    )


def save_checkpoint(path, p: PolicyParams, meta: dict | None = None) -> None:
    """Write the checkpoint JSON; float64 values round-trip exactly."""
    payload = {
        "arch": {"in_dim": p.state_dim, "hidden": list(HIDDEN), "actions": p.n_actions},
        "actor": _mlp_to_json(p.actor),
        "critic": _mlp_to_json(p.critic),
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path) -> tuple[PolicyParams, dict]:
    obj = json.loads(Path(path).read_text())
    params = PolicyParams(_mlp_from_json(obj["actor"]), _mlp_from_json(obj["critic"]))
    arch = obj["arch"]
    if params.state_dim != arch["in_dim"] or params.n_actions != arch["actions"]:
        raise ValueError("checkpoint arrays inconsistent with declared architecture")
    return params, obj.get("meta", {})
