"""Gaussian-process surrogate with a Matern-3/2 kernel.

The model is refit from scratch after every new observation: the kernel has a
single isotropic length scale, chosen by maximizing the log marginal
likelihood over a multi-start local search in log space, with the signal
variance profiled out in closed form at each candidate. A static length scale
would carry no information for the selection policy, so refitting every
iteration is assumed throughout.

Normalization: inputs are mapped to the unit cube via the domain bounds, and
targets are mean-centered and scaled to unit standard deviation per fit
(scaling skipped for near-constant targets). ``GpModel.lengthscale`` is in
unit-cube coordinates, which keeps downstream state features scale-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, get_lapack_funcs
from scipy.spatial.distance import cdist

_TRTRS = get_lapack_funcs("trtrs", (np.empty(0, dtype=np.float64),))


def _tri_solve(ell: np.ndarray, b: np.ndarray, trans: int = 0) -> np.ndarray:
    """Low-overhead lower-triangular solve (LAPACK dtrtrs)."""
    x, info = _TRTRS(ell, b, lower=1, trans=trans)
    if info != 0:
        raise np.linalg.LinAlgError(f"triangular solve failed (info={info})")
    return x

SQRT3 = math.sqrt(3.0)

JITTER_REL_START = 1e-8
JITTER_REL_MAX = 1e-2
DUPLICATE_TOL = 1e-10
SIGNAL_VARIANCE_FLOOR = 1e-12
N_SEARCH_STARTS = 8


class GpNumericalError(RuntimeError):
    """Kernel-matrix factorization failed even after jitter escalation."""


class ObservationSet:
    """Growing archive of (point, value) pairs; the incumbent is the max value."""

    def __init__(self, points=None, values=None):
        self._points: list[np.ndarray] = []
        self._values: list[float] = []
        self.incumbent: float = -math.inf
        if points is not None:
            for p, v in zip(points, values, strict=True):
                self.append(p, v)

    def append(self, x: np.ndarray, y: float) -> None:
        x = np.asarray(x, dtype=float).reshape(-1)
        if self._points and x.shape != self._points[0].shape:
            raise ValueError("inconsistent point dimension")
        self._points.append(x)
        self._values.append(float(y))
        self.incumbent = max(self.incumbent, float(y))

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self._points, dtype=float)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self._values, dtype=float)

    def __len__(self) -> int:
        return len(self._values)


def matern32(x1, x2, lengthscale: float, signal_variance: float) -> float:
    """k(r) = s2 (1 + sqrt(3) r / l) exp(-sqrt(3) r / l), r = ||x1 - x2||."""
    if lengthscale <= 0 or signal_variance <= 0:
        raise ValueError("lengthscale and signal_variance must be positive")
    r = float(np.linalg.norm(np.asarray(x1, float) - np.asarray(x2, float)))
    z = SQRT3 * r / lengthscale
    return signal_variance * (1.0 + z) * math.exp(-z)


def _corr_from_dist(d: np.ndarray, lengthscale: float) -> np.ndarray:
    z = d * (SQRT3 / lengthscale)
    out = np.exp(-z)
    z += 1.0
    out *= z
    return out


@dataclass(frozen=True)
class GpModel:
    """Fitted surrogate plus the cached factorization for posterior queries.

    ``lengthscale`` is in unit-cube input coordinates; ``signal_variance`` and
    ``noise_jitter`` are in (original) output units squared. Internals hold the
    normalized training copy: ``x_unit`` (m, d) after duplicate collapse,
    ``y_norm`` (m,), the lower Cholesky factor ``chol`` of C = R + jitter_rel*I
    on the correlation scale, and ``alpha`` = C^{-1} y_norm.
    """

    lengthscale: float
    signal_variance: float
    noise_jitter: float
    bounds: np.ndarray
    x_unit: np.ndarray = field(repr=False)
    y_norm: np.ndarray = field(repr=False)
    y_mean: float = 0.0
    y_std: float = 1.0
    jitter_rel: float = JITTER_REL_START
    sig2_norm: float = 1.0
    chol: np.ndarray = field(repr=False, default=None)
    alpha: np.ndarray = field(repr=False, default=None)
    lml: float = 0.0

    @property
    def n_train(self) -> int:
        return self.x_unit.shape[0]


def _to_unit(x: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    lo, hi = bounds[:, 0], bounds[:, 1]
    return (x - lo) / (hi - lo)


def _collapse_duplicates(xu: np.ndarray, y: np.ndarray):
    """Drop points within DUPLICATE_TOL of an earlier one, keeping the larger y."""
    n = xu.shape[0]
    if n == 1:
        return xu, y
    d = cdist(xu, xu)
    if np.min(d + np.eye(n)) >= DUPLICATE_TOL:
        return xu, y
    keep: list[int] = []
    ymax = y.astype(float).copy()
    for i in range(n):
        j = next((k for k in keep if d[i, k] < DUPLICATE_TOL), None)
        if j is None:
            keep.append(i)
        else:
            ymax[j] = max(ymax[j], ymax[i])
    idx = np.asarray(keep)
    return xu[idx], ymax[idx]


def _factorize(dist: np.ndarray, lengthscale: float):
    """Cholesky of R + jitter*I with escalating jitter; None if hopeless."""
    r = _corr_from_dist(dist, lengthscale)
    jitter = JITTER_REL_START
    n = r.shape[0]
    while jitter <= JITTER_REL_MAX:
        try:
            ell = cholesky(r + jitter * np.eye(n), lower=True)
            return ell, jitter
        except (np.linalg.LinAlgError, ValueError):
            jitter *= 10.0
    return None, None


def _lml_from_quad(quad: float, logdet_c: float, n: int):
    sig2 = max(quad / n, SIGNAL_VARIANCE_FLOOR)
    lml = (
        -0.5 * quad / sig2
        - 0.5 * n * math.log(sig2)
        - 0.5 * logdet_c
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    return lml, sig2


def _profiled_lml(dist: np.ndarray, y: np.ndarray, lengthscale: float):
    """Concentrated log marginal likelihood at one lengthscale.

    Profiling the signal variance gives s2_hat = y' C^{-1} y / n and
    lml = -n/2 - (n/2) log s2_hat - (1/2) log|C| - (n/2) log 2pi.
    """
    ell, jitter = _factorize(dist, lengthscale)
    if ell is None:
        return None
    n = y.size
    v = _tri_solve(ell, y)
    logdet_c = 2.0 * float(np.log(ell.diagonal()).sum())
    lml, sig2 = _lml_from_quad(float(v @ v), logdet_c, n)
    return lml, sig2, ell, jitter


def _profiled_lml_many(dist: np.ndarray, y: np.ndarray, lengthscales: np.ndarray):
    """Profiled LML at several lengthscales in one batched sweep.

    Uses the base jitter for the whole stack; on any factorization failure
    falls back to the scalar path (with its per-candidate jitter escalation),
    so values are identical to evaluating one at a time.
    """
    ls = np.asarray(lengthscales, dtype=float)
    n = y.size
    z = dist[None, :, :] * (SQRT3 / ls)[:, None, None]
    c = np.exp(-z)
    z += 1.0
    c *= z
    idx = np.arange(n)
    c[:, idx, idx] += JITTER_REL_START
    try:
        chols = np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        out = []
        for lengthscale in ls:
            res = _profiled_lml(dist, y, lengthscale)
            out.append((-math.inf, 0.0) if res is None else res[:2])
        return out
    logdets = 2.0 * np.log(chols[:, idx, idx]).sum(axis=1)
    out = []
    for i in range(ls.size):
        v = _tri_solve(chols[i], y)
        out.append(_lml_from_quad(float(v @ v), float(logdets[i]), n))
    return out


def fit(obs: ObservationSet, bounds: np.ndarray) -> GpModel:
    """Fit hyperparameters to the archive by multi-start lengthscale search.

    The search runs over log-lengthscale in [0.01 D, 10 D], D the unit-cube
    diagonal, from N_SEARCH_STARTS log-spaced starts, each refined by a
    shrinking-step pattern search. The returned model attains the best
    log marginal likelihood among every candidate evaluated.
    """
    if len(obs) == 0:
        raise ValueError("cannot fit an empty observation set")
    bounds = np.asarray(bounds, dtype=float)
    xu = _to_unit(obs.x, bounds)
    y = obs.y

    xu, y = _collapse_duplicates(xu, y)
    n, d = xu.shape

    y_mean = float(np.mean(y))
    y_ctr = y - y_mean
    y_sd = float(np.std(y_ctr))
    y_std = y_sd if y_sd >= 1e-12 else 1.0
    y_norm = y_ctr / y_std

    dist = cdist(xu, xu)
    diag = math.sqrt(d)
    log_lo, log_hi = math.log(1e-2 * diag), math.log(10.0 * diag)

    # All starts run their shrinking-step searches in lockstep so each round
    # is one batched likelihood sweep; trajectories match the one-at-a-time
    # algorithm exactly.
    cur = np.linspace(log_lo, log_hi, N_SEARCH_STARTS)
    vals = np.array([v for v, _ in _profiled_lml_many(dist, y_norm, np.exp(cur))])
    best_key = float(cur[int(np.argmax(vals))])
    best_lml = float(np.max(vals))
    steps = np.full(N_SEARCH_STARTS, (log_hi - log_lo) / 16.0)

    for _ in range(16):
        active = steps >= 1e-2
        if not active.any():
            break
        plus = np.clip(cur + steps, log_lo, log_hi)
        minus = np.clip(cur - steps, log_lo, log_hi)
        cands = np.concatenate([plus[active], minus[active]])
        res = _profiled_lml_many(dist, y_norm, np.exp(cands))
        cand_vals = np.array([v for v, _ in res])
        if cand_vals.size and float(np.max(cand_vals)) > best_lml:
            k = int(np.argmax(cand_vals))
            best_lml, best_key = float(cand_vals[k]), float(cands[k])
        n_act = int(active.sum())
        v_plus, v_minus = cand_vals[:n_act], cand_vals[n_act:]
        act_idx = np.flatnonzero(active)
        for j, i in enumerate(act_idx):
            if v_plus[j] > vals[i]:
                cur[i], vals[i] = plus[i], v_plus[j]
            elif v_minus[j] > vals[i]:
                cur[i], vals[i] = minus[i], v_minus[j]
            else:
                steps[i] *= 0.5

    if not math.isfinite(best_lml):
        raise GpNumericalError(
            f"kernel factorization failed for every candidate lengthscale (n={n})"
        )
    final = _profiled_lml(dist, y_norm, math.exp(best_key))
    if final is None:
        raise GpNumericalError(
            f"kernel factorization failed at the selected lengthscale (n={n})"
        )
    lml_n, sig2_n, ell, jitter = final
    alpha = _tri_solve(ell, _tri_solve(ell, y_norm), trans=1)
    return GpModel(
        lengthscale=math.exp(best_key),
        signal_variance=sig2_n * y_std**2,
        noise_jitter=jitter * sig2_n * y_std**2,
        bounds=bounds,
        x_unit=xu,
        y_norm=y_norm,
        y_mean=y_mean,
        y_std=y_std,
        jitter_rel=jitter,
        sig2_norm=sig2_n,
        chol=ell,
        alpha=alpha,
        lml=lml_n,
    )


def posterior(model: GpModel, x: np.ndarray):
    """Posterior mean and std at ``x``, in original output units.

    Accepts a single point (d,) returning floats, or a batch (q, d) returning
    arrays. Tiny negative variances from round-off are clamped to zero.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xq = _to_unit(np.atleast_2d(x), model.bounds)
    r_star = _corr_from_dist(cdist(model.x_unit, xq), model.lengthscale)

    mean_norm = r_star.T @ model.alpha
    v = _tri_solve(model.chol, r_star)
    var_norm = model.sig2_norm * np.maximum(1.0 - np.einsum("ij,ij->j", v, v), 0.0)

    mean = model.y_mean + model.y_std * mean_norm
    std = model.y_std * np.sqrt(var_norm)
    if single:
        return float(mean[0]), float(std[0])
    return mean, std


def log_marginal_likelihood(model: GpModel) -> float:
    """Log marginal likelihood of the normalized training data, via the cache.

    Equals -1/2 y'(K+jI)^{-1}y - 1/2 log det(K+jI) - (n/2) log 2pi with
    K = sig2_norm * R evaluated on the normalized copy.
    """
    n = model.n_train
    quad = float(model.y_norm @ model.alpha) / model.sig2_norm
    logdet = n * math.log(model.sig2_norm) + 2.0 * float(np.sum(np.log(np.diag(model.chol))))
    return -0.5 * quad - 0.5 * logdet - 0.5 * n * math.log(2.0 * math.pi)
