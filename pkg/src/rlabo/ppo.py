"""Clipped-surrogate policy training over whole BO episodes.

One training run performs M policy updates; each update collects N episodes
of T steps with the frozen pre-update policy, computes discounted returns and
advantages once (with the pre-update critic, frozen across the K optimization
epochs), and takes minibatch steps on the composite loss

    L = L_clip + w1 * L_value + w2 * L_entropy

where each component is a plain sum over transitions; the applied gradient
carries a single global 1/(N*T) factor, which rescales steps but not optima.
Advantages are normalized to zero mean / unit std per update by default (a
variance-reduction extension beyond the plain definition; toggleable).

Environment seeds follow a common-random-numbers schedule: update m draws its
N initial designs from seed block m mod env_seed_cycle, so any window of
whole cycles sees the identical set of environments and learning-curve
comparisons cancel initial-design luck instead of measuring it. Episode-luck
differences otherwise dwarf the policy's effect at this scale. Action
sampling stays fresh for every episode.

Episodes whose GP fit aborts numerically are dropped from the batch (their
learning-curve entry is NaN); if more than half of an update's episodes fail,
training errors out.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

from .acquisition import candidate_set
from .bo_env import BoEnv, EnvConfig, Transition, jsonl_record
from .gp import GpNumericalError
from .neural import (
    AdamState,
    PolicyParams,
    PROB_FLOOR,
    actor_forward,
    adam_step,
    backprop,
    critic_forward,
    flatten,
    init_policy,
    sample_action,
    save_checkpoint,
    unflatten_like,
)
from .parallel import pmap
from .seeding import (
    STREAM_ENV_SEED,
    STREAM_PARAM_INIT,
    STREAM_POLICY,
    STREAM_SHUFFLE,
    child_seed,
    substream,
)


@dataclass(frozen=True)
class TrainConfig:
    """Training-scale and loss hyperparameters; everything is config, nothing hidden."""

    M: int = 40
    N: int = 10
    T: int = 30
    K: int = 10
    gamma: float = 0.99
    clip_eps: float = 0.2
    w1: float = 0.5
    w2: float = 0.01
    learning_rate: float = 3e-4
    minibatch_size: int | None = None
    normalize_advantages: bool = True
    init_design_size: int = 3
    env_seed_cycle: int = 8
    seed: int = 0

    def __post_init__(self):
        if min(self.M, self.N, self.T, self.K) < 1:
            raise ValueError("M, N, T, K must all be >= 1")
        if self.env_seed_cycle < 0:
            raise ValueError("env_seed_cycle must be >= 0 (0 disables seed reuse)")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must be in (0, 1)")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.w1 < 0 or self.w2 < 0:
            raise ValueError("loss weights must be nonnegative")

    @property
    def effective_minibatch(self) -> int:
        return self.minibatch_size or max(1, (self.N * self.T) // 4)


def config_hash(cfg: TrainConfig) -> str:
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class RolloutBatch:
    """Flattened transitions of one update plus their returns and advantages."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    old_probs: np.ndarray
    returns: np.ndarray
    advantages: np.ndarray
    episode_ids: np.ndarray
    timesteps: np.ndarray

    @property
    def size(self) -> int:
        return self.states.shape[0]

    def subset(self, idx: np.ndarray) -> "RolloutBatch":
        return RolloutBatch(
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.old_probs[idx],
            self.returns[idx],
            self.advantages[idx],
            self.episode_ids[idx],
            self.timesteps[idx],
        )


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    """Suffix sums R_t = r_t + gamma R_{t+1} for one episode."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("empty episode")
    out = np.empty_like(rewards)
    acc = 0.0
    for i in range(rewards.size - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


def advantages(returns, values) -> np.ndarray:
    returns = np.asarray(returns, dtype=float)
    values = np.asarray(values, dtype=float)
    if returns.shape != values.shape:
        raise ValueError(f"length mismatch: {returns.shape} vs {values.shape}")
    return returns - values


def build_batch(
    episodes: list[list[Transition]],
    policy: PolicyParams,
    gamma: float,
    normalize: bool = True,
) -> RolloutBatch:
    """Stack transitions, attach returns and (pre-update critic) advantages."""
    states = np.array([tr.state.as_array() for ep in episodes for tr in ep])
    actions = np.array([tr.action for ep in episodes for tr in ep], dtype=int)
    rewards = np.array([tr.reward for ep in episodes for tr in ep])
    old_probs = np.array([tr.old_action_prob for ep in episodes for tr in ep])
    episode_ids = np.array([tr.episode_index for ep in episodes for tr in ep], dtype=int)
    timesteps = np.array([tr.t for ep in episodes for tr in ep], dtype=int)

    returns = np.concatenate(
        [discounted_returns([tr.reward for tr in ep], gamma) for ep in episodes]
    )
    values = critic_forward(policy, states)
    adv = advantages(returns, values)
    if normalize:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return RolloutBatch(states, actions, rewards, old_probs, returns, adv, episode_ids, timesteps)


def _action_probs(batch: RolloutBatch, p: PolicyParams):
    probs = actor_forward(p, batch.states)
    p_a = probs[np.arange(batch.size), batch.actions]
    return probs, p_a


def clip_loss(batch: RolloutBatch, p: PolicyParams, eps: float) -> float:
    """-sum min(rho A, clip(rho, 1-eps, 1+eps) A), rho the new/old prob ratio."""
    _, p_a = _action_probs(batch, p)
    rho = p_a / np.maximum(batch.old_probs, PROB_FLOOR)
    a = batch.advantages
    return float(-np.sum(np.minimum(rho * a, np.clip(rho, 1.0 - eps, 1.0 + eps) * a)))


def value_loss(batch: RolloutBatch, p: PolicyParams) -> float:
    """sum (R_t - V(s_t))^2."""
    v = critic_forward(p, batch.states)
    return float(np.sum((batch.returns - v) ** 2))


def entropy_loss(batch: RolloutBatch, p: PolicyParams) -> float:
    """-sum H(pi(s_t)); zero-probability actions contribute exactly zero."""
    probs, _ = _action_probs(batch, p)
    h = -np.sum(probs * np.log(np.maximum(probs, PROB_FLOOR)), axis=1)
    return float(-np.sum(h))


def total_loss(batch: RolloutBatch, p: PolicyParams, eps: float, w1: float, w2: float) -> float:
    return clip_loss(batch, p, eps) + w1 * value_loss(batch, p) + w2 * entropy_loss(batch, p)


def total_loss_grad(
    batch: RolloutBatch, p: PolicyParams, eps: float, w1: float, w2: float
) -> PolicyParams:
    """Analytic gradient of total_loss w.r.t. every parameter."""
    probs, p_a = _action_probs(batch, p)
    old = np.maximum(batch.old_probs, PROB_FLOOR)
    rho = p_a / old
    a = batch.advantages
    unclipped = rho * a
    clipped = np.clip(rho, 1.0 - eps, 1.0 + eps) * a
    # min picks the unclipped branch (ties included); only then does rho carry gradient
    g_rho = np.where(unclipped <= clipped, a, 0.0)
    onehot = np.eye(p.n_actions)[batch.actions]
    d_logits = -(g_rho * rho)[:, None] * (onehot - probs)

    logp = np.log(np.maximum(probs, PROB_FLOOR))
    h = -np.sum(probs * logp, axis=1)
    d_logits += w2 * probs * (logp + h[:, None])

    v = critic_forward(p, batch.states)
    d_value = w1 * (-2.0) * (batch.returns - v)
    return backprop(p, batch.states, d_logits, d_value)


def _collect_episode(
    task,
    env_cfg: EnvConfig,
    policy: PolicyParams,
    T: int,
    master_seed: int,
    env_cycle: int = 0,
):
    """One episode under the frozen policy; returns (index, transitions, trace) or failure."""
    m, n, episode_index = task
    m_env = m % env_cycle if env_cycle else m
    cfg = replace(env_cfg, horizon_T=T, seed=child_seed(master_seed, STREAM_ENV_SEED, m_env, n))
    policy_rng = substream(master_seed, STREAM_POLICY, m, n)
    try:
        env = BoEnv(cfg)
        state = env.reset()
        transitions = []
        trace = []
        for t in range(1, T + 1):
            probs = actor_forward(policy, state.as_array())
            action = sample_action(probs, policy_rng)
            next_state, reward, y, x = env.step(candidate_set()[action])
            transitions.append(
                Transition(
                    state=state,
                    action=action,
                    reward=reward,
                    old_action_prob=float(probs[action]),
                    episode_index=episode_index,
                    t=t,
                )
            )
            trace.append(
                jsonl_record(
                    episode_index, t, state, candidate_set()[action], x, y, reward,
                    env.obs.incumbent,
                )
            )
            state = next_state
        return episode_index, transitions, trace
    except GpNumericalError:
        return episode_index, None, []


@dataclass
class TrainResult:
    policy: PolicyParams
    episode_rewards: list[float] = field(default_factory=list)
    five_episode_avg: list[float] = field(default_factory=list)
    n_transitions: int = 0
    n_failed_episodes: int = 0


def five_episode_averages(episode_rewards) -> list[float]:
    """Block means over consecutive groups of five episodes (last may be short)."""
    out = []
    arr = np.asarray(episode_rewards, dtype=float)
    for start in range(0, arr.size, 5):
        block = arr[start : start + 5]
        out.append(float(np.nanmean(block)) if not np.all(np.isnan(block)) else math.nan)
    return out


def train(
    env_cfg: EnvConfig,
    cfg: TrainConfig,
    out_dir=None,
    jobs: int = 1,
    trace_path=None,
) -> TrainResult:
    """Full training loop; optionally writes checkpoint + learning-curve CSV.

    Episode randomness derives from cfg.seed only (env_cfg.seed is ignored
    here; each episode gets a derived child seed), so results are bitwise
    reproducible for any worker count.
    """
    state_dim = 2 + env_cfg.benchmark.dim
    policy = init_policy(state_dim, substream(cfg.seed, STREAM_PARAM_INIT))
    theta = flatten(policy)
    adam = AdamState.zeros(theta.size)
    scale = 1.0 / (cfg.N * cfg.T)

    episode_rewards: list[float] = []
    all_trace_lines: list[str] = []
    n_transitions = 0
    n_failed = 0

    for m in range(cfg.M):
        tasks = [(m, n, m * cfg.N + n) for n in range(cfg.N)]
        worker = partial(
            _collect_episode,
            env_cfg=env_cfg,
            policy=policy,
            T=cfg.T,
            master_seed=cfg.seed,
            env_cycle=cfg.env_seed_cycle,
        )
        results = pmap(worker, tasks, jobs)

        episodes = []
        for idx, transitions, trace in results:
            if transitions is None:
                log.warning("episode %d aborted on a GP numerical failure; dropped", idx)
                episode_rewards.append(math.nan)
                n_failed += 1
                continue
            episodes.append(transitions)
            episode_rewards.append(float(sum(tr.reward for tr in transitions)))
            all_trace_lines.extend(trace)
        if len(episodes) < cfg.N - cfg.N // 2:
            raise GpNumericalError(
                f"{cfg.N - len(episodes)} of {cfg.N} episodes failed in update {m}"
            )
        n_transitions += sum(len(ep) for ep in episodes)

        batch = build_batch(episodes, policy, cfg.gamma, cfg.normalize_advantages)
        mb = cfg.effective_minibatch
        for k in range(cfg.K):
            order = substream(cfg.seed, STREAM_SHUFFLE, m, k).permutation(batch.size)
            for start in range(0, batch.size, mb):
                sub = batch.subset(order[start : start + mb])
                grad = flatten(total_loss_grad(sub, policy, cfg.clip_eps, cfg.w1, cfg.w2))
                theta = adam_step(theta, grad * scale, adam, cfg.learning_rate)
                policy = unflatten_like(policy, theta)

    result = TrainResult(
        policy=policy,
        episode_rewards=episode_rewards,
        five_episode_avg=five_episode_averages(episode_rewards),
        n_transitions=n_transitions,
        n_failed_episodes=n_failed,
    )

    if trace_path is not None:
        Path(trace_path).write_text("\n".join(all_trace_lines) + "\n")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(
            out / "checkpoint.json",
            policy,
            meta={
                "benchmark": env_cfg.benchmark.name,
                "seed": cfg.seed,
                "config_hash": config_hash(cfg),
            },
        )
        write_learning_curve_csv(out / "learning_curve.csv", result)
    return result


def write_learning_curve_csv(path, result: TrainResult) -> None:
    """Rows of (episode, cumulative_reward, five_episode_avg of its block)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["episode", "cumulative_reward", "five_episode_avg"])
        for i, r in enumerate(result.episode_rewards):
            avg = result.five_episode_avg[i // 5]
            w.writerow([i + 1, format(r, ".17g"), format(avg, ".17g")])
