"""Positive concave mappings and the standard fixed-point iteration.

A positive concave mapping ``T: R_+^N -> R_++^N`` has concave, upper
semicontinuous components. Such mappings are standard interference
mappings, so ``x_{n+1} = T(x_n)`` converges to the unique fixed point when
one exists, monotonically whenever the start vector satisfies
``T(x1) >= x1`` or ``T(x1) <= x1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NegativeInput, NonFiniteResult, NonPositiveResult

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
DEFAULT_CAP = 1e12


class Status(enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    MAX_ITER = "MaxIterReached"


class Direction(enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    NONE = "None"


@dataclass(frozen=True)
class PositiveConcaveMapping:
    """Black-box evaluation contract for ``T``.

    ``func`` must be a pure function of ``x``. ``cap`` is an optional
    per-component physical limit used for divergence detection.
    """

    func: Callable[[np.ndarray], np.ndarray]
    dimension: int
    cap: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.cap is not None:
            cap = np.broadcast_to(np.asarray(self.cap, dtype=float), (self.dimension,)).copy()
            if np.any(cap <= 0):
                raise ValueError("divergence cap must be positive")
            cap.setflags(write=False)
            object.__setattr__(self, "cap", cap)

    def __call__(self, x):
        return evaluate(self, x)

    def with_cap(self, cap) -> "PositiveConcaveMapping":
        return PositiveConcaveMapping(self.func, self.dimension, cap, self.name)

    def divergence_cap(self) -> np.ndarray:
        if self.cap is None:
            return np.full(self.dimension, DEFAULT_CAP)
        return self.cap


def evaluate(T: PositiveConcaveMapping, x) -> np.ndarray:
    """Return ``T(x)`` after validating domain and range."""
    x = np.asarray(x, dtype=float)
    if x.shape != (T.dimension,):
        raise ValueError(f"expected shape ({T.dimension},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteResult("input vector has non-finite entries")
    if np.any(x < 0):
        raise NegativeInput(f"negative input component at {np.flatnonzero(x < 0).tolist()}")
    y = np.asarray(T.func(x), dtype=float).reshape(T.dimension)
    if not np.all(np.isfinite(y)):
        raise NonFiniteResult(f"{T.name or 'mapping'} returned non-finite values")
    if np.any(y <= 0):
        raise NonPositiveResult(f"{T.name or 'mapping'} returned a non-positive component")
    return y


def classify_start(T: PositiveConcaveMapping, x1) -> Direction:
    x1 = np.asarray(x1, dtype=float)
    y = evaluate(T, x1)
    if np.all(y >= x1):
        return Direction.INCREASING
    if np.all(y <= x1):
        return Direction.DECREASING
    return Direction.NONE


@dataclass(frozen=True)
class IterationTrace:
    iterates: np.ndarray  # shape (n_iterates, N); row 0 is the start vector
    status: Status
    deltas: np.ndarray  # relative sup-norm step sizes, one per application of T
    monotone_direction: Direction
    tol: float = DEFAULT_TOL
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def x(self) -> np.ndarray:
        """Last iterate."""
        return self.iterates[-1]

    @property
    def n_iter(self) -> int:
        """Number of mapping evaluations performed."""
        return len(self.iterates) - 1

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def is_monotone(self, slack: float = 0.0) -> bool:
        steps = np.diff(self.iterates, axis=0)
        if self.monotone_direction is Direction.INCREASING:
            return bool(np.all(steps >= -slack))
        if self.monotone_direction is Direction.DECREASING:
            return bool(np.all(steps <= slack))
        return False


def relative_step(x_new: np.ndarray, x_old: np.ndarray) -> float:
    return float(np.max(np.abs(x_new - x_old)) / (1.0 + np.max(np.abs(x_old))))


def iterate_standard(
    T: PositiveConcaveMapping,
    x1=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    cap=None,
    min_iter: int = 0,
) -> IterationTrace:
    """Run ``x_{n+1} = T(x_n)`` from ``x1`` (default: the zero vector).

    Stops on a relative sup-norm step ``<= tol`` (after at least
    ``min_iter`` steps), when any component exceeds the divergence cap, or
    after ``max_iter`` evaluations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    x = np.zeros(T.dimension) if x1 is None else np.array(x1, dtype=float)
    cap = T.divergence_cap() if cap is None else np.broadcast_to(np.asarray(cap, float), x.shape)

    y = evaluate(T, x)
    if np.all(y >= x):
        direction = Direction.INCREASING
    elif np.all(y <= x):
        direction = Direction.DECREASING
    else:
        direction = Direction.NONE

    iterates = [x]
    deltas = []
    status = Status.MAX_ITER
    for n in range(max_iter):
        if n > 0:
            y = evaluate(T, x)
        deltas.append(relative_step(y, x))
        iterates.append(y)
        x = y
        if np.any(x > cap):
            status = Status.DIVERGED
            break
        if deltas[-1] <= tol and n + 1 >= min_iter:
            status = Status.CONVERGED
            break
    return IterationTrace(
        iterates=np.array(iterates),
        status=status,
        deltas=np.array(deltas),
        monotone_direction=direction,
        tol=tol,
    )


def fixed_point_residual(T: PositiveConcaveMapping, x) -> float:
    """``||T(x) - x||_inf / (1 + ||x||_inf)``."""
    x = np.asarray(x, dtype=float)
    return relative_step(evaluate(T, x), x)


def sample_standard_properties(T: PositiveConcaveMapping, rng, n_samples=1000, scale=10.0):
    """Randomized check of positivity, scalability, monotonicity and midpoint concavity.

    Returns a dict of violation counts keyed by property name.
    """
    N = T.dimension
    counts = {"positivity": 0, "scalability": 0, "monotonicity": 0, "concavity": 0}
    for _ in range(n_samples):
        x = rng.uniform(0, scale, N) * 10.0 ** rng.uniform(-2, 2)
        y = rng.uniform(0, scale, N) * 10.0 ** rng.uniform(-2, 2)
        alpha = 1.0 + 10.0 ** rng.uniform(-3, 1)
        tx, ty = evaluate(T, x), evaluate(T, y)
        if np.any(tx <= 0):
            counts["positivity"] += 1
        if not np.all(alpha * tx > evaluate(T, alpha * x)):
            counts["scalability"] += 1
        hi = np.maximum(x, y)
        if not np.all(evaluate(T, hi) >= np.maximum(tx, ty) - 1e-12 * (1 + np.abs(tx))):
            counts["monotonicity"] += 1
        mid = evaluate(T, 0.5 * (x + y))
        if not np.all(mid >= 0.5 * (tx + ty) - 1e-12 * (1 + np.abs(mid))):
            counts["concavity"] += 1
    return counts
