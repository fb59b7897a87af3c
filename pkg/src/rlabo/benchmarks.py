"""Black-box benchmark objectives in maximization convention.

Five classical 2-D test functions. Every value leaving this module is the
*negated* canonical function, so the rest of the system uniformly maximizes.
Formulas and recommended domains follow the standard global-optimization
test-function collection:

    ackley      f(x) = -20 exp(-0.2 sqrt(mean(x^2)))
                       - exp(mean(cos(2 pi x))) + 20 + e
                domain [-32.768, 32.768]^2, min f = 0 at (0, 0)

    levy        w_i = 1 + (x_i - 1)/4
                f(x) = sin^2(pi w_1)
                       + sum_{i<d} (w_i-1)^2 [1 + 10 sin^2(pi w_i + 1)]
                       + (w_d-1)^2 [1 + sin^2(2 pi w_d)]
                domain [-10, 10]^2, min f = 0 at (1, 1)

    griewank    f(x) = sum x_i^2/4000 - prod cos(x_i/sqrt(i)) + 1
                domain [-600, 600]^2, min f = 0 at (0, 0)

    schwefel    f(x) = 418.9829 d - sum x_i sin(sqrt|x_i|)
                domain [-500, 500]^2, min f ~ 0 at (420.9687, 420.9687)

    eggholder   f(x) = -(x2+47) sin(sqrt|x2 + x1/2 + 47|)
                       - x1 sin(sqrt|x1 - x2 - 47|)
                domain [-512, 512]^2, min f = -959.6407 at (512, 404.2319)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class DomainError(ValueError):
    """A query point lies outside the benchmark's box domain."""


def _ackley(x: np.ndarray) -> float:
    d = x.size
    return float(
        -20.0 * math.exp(-0.2 * math.sqrt(np.sum(x**2) / d))
        - math.exp(np.sum(np.cos(2.0 * math.pi * x)) / d)
        + 20.0
        + math.e
    )


def _levy(x: np.ndarray) -> float:
    w = 1.0 + (x - 1.0) / 4.0
    head = math.sin(math.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(math.pi * w[:-1] + 1.0) ** 2))
    tail = (w[-1] - 1.0) ** 2 * (1.0 + math.sin(2.0 * math.pi * w[-1]) ** 2)
    return float(head + mid + tail)


def _griewank(x: np.ndarray) -> float:
    i = np.arange(1, x.size + 1)
    return float(np.sum(x**2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0)


def _schwefel(x: np.ndarray) -> float:
    return float(418.9829 * x.size - np.sum(x * np.sin(np.sqrt(np.abs(x)))))


def _eggholder(x: np.ndarray) -> float:
    x1, x2 = float(x[0]), float(x[1])
    return float(
        -(x2 + 47.0) * math.sin(math.sqrt(abs(x2 + x1 / 2.0 + 47.0)))
        - x1 * math.sin(math.sqrt(abs(x1 - x2 - 47.0)))
    )


@dataclass(frozen=True)
class Benchmark:
    """One test objective: name, box domain, and the point of its known optimum.

    ``bounds`` has shape (dim, 2) with bounds[k] = (lo_k, hi_k). ``optimum_point``
    is the published minimizer of the canonical (minimization) form; under the
    negation convention it is where ``evaluate`` attains its global maximum.
    """

    name: str
    dim: int
    bounds: np.ndarray
    optimum_point: np.ndarray
    _f: Callable[[np.ndarray], float] = field(repr=False)

    def __post_init__(self):
        if self.bounds.shape != (self.dim, 2):
            raise ValueError(f"bounds shape {self.bounds.shape} != ({self.dim}, 2)")
        if not np.all(self.bounds[:, 0] < self.bounds[:, 1]):
            raise ValueError("each dimension needs lo < hi")

    @property
    def optimum_value(self) -> float:
        """Objective value (maximization convention) at the known optimum."""
        return -self._f(self.optimum_point)


def _box(lo: float, hi: float, dim: int) -> np.ndarray:
    return np.tile(np.array([lo, hi], dtype=float), (dim, 1))


def _make(name: str, dim: int = 2) -> Benchmark:
    if name == "ackley":
        return Benchmark("ackley", dim, _box(-32.768, 32.768, dim), np.zeros(dim), _ackley)
    if name == "levy":
        return Benchmark("levy", dim, _box(-10.0, 10.0, dim), np.ones(dim), _levy)
    if name == "griewank":
        return Benchmark("griewank", dim, _box(-600.0, 600.0, dim), np.zeros(dim), _griewank)
    if name == "schwefel":
        return Benchmark(
            "schwefel", dim, _box(-500.0, 500.0, dim), np.full(dim, 420.9687), _schwefel
        )
    if name == "eggholder":
        if dim != 2:
            raise ValueError("eggholder is defined for dim=2 only")
        return Benchmark(
            "eggholder", 2, _box(-512.0, 512.0, 2), np.array([512.0, 404.2319]), _eggholder
        )
    raise KeyError(name)


BENCHMARK_NAMES = ("ackley", "levy", "griewank", "schwefel", "eggholder")


def get_benchmark(name: str, dim: int = 2) -> Benchmark:
    """Look up a benchmark by lowercase name."""
    if name not in BENCHMARK_NAMES:
        raise KeyError(f"unknown benchmark {name!r}; valid: {', '.join(BENCHMARK_NAMES)}")
    return _make(name, dim)


def evaluate(b: Benchmark, x: np.ndarray) -> float:
    """Objective value at ``x``, maximization convention (negated canonical form).

    Rejects out-of-bounds points; clamping is the caller's job.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (b.dim,):
        raise ValueError(f"expected point of shape ({b.dim},), got {x.shape}")
    for k in range(b.dim):
        lo, hi = b.bounds[k]
        if not (lo <= x[k] <= hi):
            raise DomainError(
                f"coordinate {k} of {b.name} point is {x[k]!r}, outside [{lo}, {hi}]"
            )
    return -b._f(x)


def domain(b: Benchmark) -> np.ndarray:
    """The box domain, by value."""
    return b.bounds.copy()


def sample_uniform(bounds: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform over the box, shape (n, dim). Deterministic given the rng."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    bounds = np.asarray(bounds, dtype=float)
    return rng.uniform(bounds[:, 0], bounds[:, 1], size=(n, bounds.shape[0]))
