"""MDP environment wrapping one Bayesian-optimization run.

A reset draws the initial design, fits the surrogate, and encodes the state;
a step maximizes the selected acquisition, evaluates the objective, rewards
improvement over the pre-step incumbent, refits, and re-encodes. The state
carries three groups of features: the fitted kernel length scale (log,
unit-cube coordinates), a budget-normalized observation count, and the
per-input-dimension spread of the observed locations.

"Spread" here is the population variance (n denominator) of the unit-cube
scaled x locations: defined at n = 1 and bounded in [0, 1/4]. Variance of the
observed y values is a flagged alternative reading that is deliberately NOT
used. Likewise, the reward's incumbent runs over all prior observations
including the initial design (otherwise the first step would have none).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .acquisition import AcquisitionSpec, maximize_af
from .benchmarks import Benchmark, evaluate, sample_uniform
from .gp import GpModel, ObservationSet, fit
from .seeding import STREAM_INIT_DESIGN, STREAM_STEP, substream


class EpisodeExhausted(RuntimeError):
    """step() called after the horizon was reached."""


@dataclass(frozen=True)
class StateVector:
    """Policy input s_t: length-scale, count, and spread features (2 + d long)."""

    lengthscale_feat: float
    count_feat: float
    spread_feats: tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.array([self.lengthscale_feat, self.count_feat, *self.spread_feats])

    def __len__(self) -> int:
        return 2 + len(self.spread_feats)


@dataclass(frozen=True)
class EnvConfig:
    benchmark: Benchmark
    horizon_T: int
    init_design_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.horizon_T < 1:
            raise ValueError("horizon_T must be >= 1")
        if self.init_design_size < 1:
            raise ValueError("init_design_size must be >= 1")


@dataclass(frozen=True)
class Transition:
    """One <state, action, reward> record plus the bookkeeping the update needs."""

    state: StateVector
    action: int
    reward: float
    old_action_prob: float
    episode_index: int
    t: int


def compute_reward(y_t: float, obs_before: ObservationSet, t: int) -> float:
    """Improvement over the incumbent, tempered for later steps.

    r_t = max(y_t - incumbent, 0) / (ln(t + 1) + 1), with t the 1-based
    iteration index (initial design excluded from the count, included in the
    incumbent).
    """
    if t < 1:
        raise ValueError("t is 1-based")
    if len(obs_before) == 0:
        raise ValueError("need at least one prior observation")
    return max(y_t - obs_before.incumbent, 0.0) / (math.log(t + 1.0) + 1.0)


def encode_state(model: GpModel, obs: ObservationSet, t: int, horizon_T: int) -> StateVector:
    """State features from the current fit and archive.

    count_feat is (observations so far) / (total at the horizon), reaching 1.0
    at t = T. Spread features use the model's bounds to place points in the
    unit cube.
    """
    xu = (obs.x - model.bounds[:, 0]) / (model.bounds[:, 1] - model.bounds[:, 0])
    spread = np.var(xu, axis=0)
    count = len(obs) / (len(obs) - t + horizon_T)
    return StateVector(
        lengthscale_feat=math.log(model.lengthscale),
        count_feat=float(count),
        spread_feats=tuple(float(v) for v in spread),
    )


class BoEnv:
    """Single-episode environment; one instance is single-threaded.

    Randomness derives entirely from cfg.seed: the initial design uses one
    substream and each step's acquisition maximization another, so two envs
    with equal seeds and equal action sequences produce identical archives.
    """

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self.obs: ObservationSet | None = None
        self.model: GpModel | None = None
        self.state: StateVector | None = None
        self.t = 0

    def reset(self) -> StateVector:
        cfg = self.cfg
        rng = substream(cfg.seed, STREAM_INIT_DESIGN)
        xs = sample_uniform(cfg.benchmark.bounds, cfg.init_design_size, rng)
        self.obs = ObservationSet()
        for x in xs:
            self.obs.append(x, evaluate(cfg.benchmark, x))
        self.model = fit(self.obs, cfg.benchmark.bounds)
        self.t = 0
        self.state = encode_state(self.model, self.obs, self.t, cfg.horizon_T)
        return self.state

    def step(self, spec: AcquisitionSpec):
        """Run one BO iteration; returns (next_state, reward, y_t, x_t)."""
        if self.obs is None:
            raise RuntimeError("reset() before step()")
        if self.t >= self.cfg.horizon_T:
            raise EpisodeExhausted(f"episode horizon {self.cfg.horizon_T} reached")
        t = self.t + 1
        rng = substream(self.cfg.seed, STREAM_STEP, t)
        x = maximize_af(self.model, spec, self.cfg.benchmark.bounds, rng)
        y = evaluate(self.cfg.benchmark, x)
        reward = compute_reward(y, self.obs, t)
        self.obs.append(x, y)
        self.model = fit(self.obs, self.cfg.benchmark.bounds)
        self.t = t
        self.state = encode_state(self.model, self.obs, self.t, self.cfg.horizon_T)
        return self.state, reward, y, x

    @property
    def done(self) -> bool:
        return self.t >= self.cfg.horizon_T


def jsonl_record(
    episode: int,
    t: int,
    state: StateVector,
    spec: AcquisitionSpec,
    x: np.ndarray,
    y: float,
    reward: float,
    incumbent: float,
) -> str:
    """One step of an episode trace, as a JSON line."""
    return json.dumps(
        {
            "episode": episode,
            "t": t,
            "state": [float(v) for v in state.as_array()],
            "beta": spec.label,
            "x": [float(v) for v in x],
            "y": float(y),
            "reward": float(reward),
            "incumbent": float(incumbent),
        }
    )
