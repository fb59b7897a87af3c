"""UCB acquisition family and the inner maximizer that proposes the next point.

The candidate actions are five UCBs alpha(x) = mu(x) + beta * sigma(x) with
weights {0, 1, 2.576, 6.635776, inf}: beta = 0 degenerates to pure
exploitation (the posterior mean alone), beta = inf to pure exploration (the
posterior standard deviation alone, handled as a dedicated branch rather than
sentinel arithmetic). The middle weights are the literal decimal constants;
2.576 is treated as an opaque constant.

The inner optimizer is derivative-free: a scrambled low-discrepancy probe
sweep followed by shrinking-step pattern search from the best probes. Results
are deterministic given the rng; ties are broken by probe order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .gp import GpModel, posterior

BETAS = (0.0, 1.0, 2.576, 6.635776, math.inf)
BETA_LABELS = ("0", "1", "2.576", "6.635776", "inf")

N_PROBES = 1024
N_REFINE_STARTS = 8
N_REFINE_ITERS = 20
REFINE_STEP_FRAC = 0.05


@dataclass(frozen=True)
class AcquisitionSpec:
    """One candidate acquisition: rank index (0..4) and its UCB weight."""

    index: int
    beta: float

    @property
    def label(self) -> str:
        return BETA_LABELS[self.index]

    def to_json(self) -> dict:
        return {"beta": self.label, "index": self.index}


_CANDIDATES = tuple(AcquisitionSpec(i, b) for i, b in enumerate(BETAS))


def candidate_set() -> tuple[AcquisitionSpec, ...]:
    """The five candidate acquisitions in ascending-beta order."""
    return _CANDIDATES


def spec_for_beta(beta) -> AcquisitionSpec:
    """Resolve a beta given as float or string ('inf' allowed) to its spec."""
    if isinstance(beta, str):
        value = math.inf if beta.strip().lower() == "inf" else float(beta)
    else:
        value = float(beta)
    for spec in _CANDIDATES:
        if spec.beta == value:
            return spec
    raise ValueError(f"beta {beta!r} not in the candidate set {BETA_LABELS}")


def ucb_value(mean, std, spec: AcquisitionSpec):
    """alpha = mean + beta * std; the beta = inf branch returns std alone."""
    std_arr = np.asarray(std, dtype=float)
    if np.any(std_arr < 0):
        raise ValueError("std must be nonnegative")
    if math.isinf(spec.beta):
        out = std_arr
    else:
        out = np.asarray(mean, dtype=float) + spec.beta * std_arr
    return float(out) if out.ndim == 0 else out


def maximize_af(
    model: GpModel,
    spec: AcquisitionSpec,
    bounds: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Best point found for the acquisition over the box domain.

    1024 scrambled-Sobol probes plus the training locations (the candidate
    peaks of a short-lengthscale posterior, which the quasi-uniform sweep can
    otherwise straddle), then 20 rounds of coordinate pattern search from the
    8 best probes with per-start steps starting at 5% of the domain width and
    halving when stuck. The returned point is the argmax over every point
    probed (first-found wins ties).
    """
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    d = bounds.shape[0]

    sampler = qmc.Sobol(d=d, scramble=True, seed=rng)
    sobol = lo + sampler.random(N_PROBES) * (hi - lo)
    train_pts = np.clip(model.x_unit * (hi - lo) + lo, lo, hi)
    probes = np.concatenate([sobol, train_pts])

    def af(points: np.ndarray) -> np.ndarray:
        mu, sd = posterior(model, points)
        return ucb_value(mu, sd, spec)

    vals = af(probes)
    best_idx = int(np.argmax(vals))
    best_x, best_val = probes[best_idx].copy(), float(vals[best_idx])

    order = np.argsort(-vals, kind="stable")[:N_REFINE_STARTS]
    xs = probes[order].copy()
    cur = vals[order].copy()
    steps = np.full(len(order), 1.0)
    base = REFINE_STEP_FRAC * (hi - lo)

    for _ in range(N_REFINE_ITERS):
        # k starts x 2d neighbors: +/- step along each coordinate, clamped.
        offsets = np.concatenate([np.eye(d), -np.eye(d)])
        cand = xs[:, None, :] + steps[:, None, None] * (offsets[None] * base)
        cand = np.clip(cand, lo, hi)
        flat = cand.reshape(-1, d)
        cvals = af(flat).reshape(len(order), 2 * d)
        pick = np.argmax(cvals, axis=1)
        pick_vals = cvals[np.arange(len(order)), pick]
        improved = pick_vals > cur
        xs[improved] = cand[np.arange(len(order)), pick][improved]
        cur[improved] = pick_vals[improved]
        steps[~improved] *= 0.5

    for i in range(len(order)):
        if cur[i] > best_val:
            best_val = float(cur[i])
            best_x = xs[i].copy()
    return best_x
