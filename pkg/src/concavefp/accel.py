"""Accelerated mapping ``T_A(x) = (I - M)^-1 (T(x) - M x)``.

``T_A`` shares its fixed point with ``T`` and, started from the same
monotone point, its iterates are never farther from that fixed point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NotMonotoneStart
from .lower_bound import LowerBoundingMatrix
from .mapping import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    Direction,
    IterationTrace,
    PositiveConcaveMapping,
    classify_start,
    evaluate,
    iterate_standard,
)
from .spectral import FactoredSystem, factor

REFERENCE_TOL = 1e-12


@dataclass(frozen=True)
class AcceleratedMapping:
    base: PositiveConcaveMapping
    matrix: LowerBoundingMatrix
    system: FactoredSystem

    @property
    def dimension(self) -> int:
        return self.base.dimension

    def evaluate(self, x) -> np.ndarray:
        """``x + (I - M)^-1 (T(x) - x)``: one evaluation of ``T`` and one solve."""
        x = np.asarray(x, dtype=float)
        return x + self.system.solve(evaluate(self.base, x) - x)

    def evaluate_direct(self, x) -> np.ndarray:
        """Reference form ``(I - M)^-1 (T(x) - M x)``, kept for equivalence checks."""
        x = np.asarray(x, dtype=float)
        return self.system.solve(evaluate(self.base, x) - self.system.M @ x)

    def as_mapping(self) -> PositiveConcaveMapping:
        return PositiveConcaveMapping(
            func=self.evaluate,
            dimension=self.dimension,
            cap=self.base.cap,
            name=f"accelerated {self.base.name}".strip(),
        )


def build_accelerated(T: PositiveConcaveMapping, M) -> AcceleratedMapping:
    if not isinstance(M, LowerBoundingMatrix):
        M = LowerBoundingMatrix.closed_form(M)
    if M.dimension != T.dimension:
        raise ValueError("matrix and mapping dimensions differ")
    return AcceleratedMapping(base=T, matrix=M, system=factor(M.M))


def evaluate_accelerated(A: AcceleratedMapping, x) -> np.ndarray:
    return evaluate(A.as_mapping(), x)


def iterate_accelerated(
    A: AcceleratedMapping,
    x1=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    cap=None,
    min_iter: int = 0,
) -> IterationTrace:
    return iterate_standard(A.as_mapping(), x1, tol=tol, max_iter=max_iter, cap=cap, min_iter=min_iter)


class Dominance(enum.Enum):
    ABOVE = ">="
    BELOW = "<="
    EQUAL = "=="
    MIXED = "mixed"


@dataclass(frozen=True)
class DominanceReport:
    direction: Direction
    standard: np.ndarray  # (n_steps + 1, N), row 0 is x1
    accelerated: np.ndarray
    reference: np.ndarray
    dominance: list
    standard_distance: np.ndarray  # sup-norm distance to the reference per step
    accelerated_distance: np.ndarray

    def expected_dominance(self) -> Dominance:
        return Dominance.ABOVE if self.direction is Direction.INCREASING else Dominance.BELOW

    def holds(self, slack: float = 0.0) -> bool:
        """Accelerated iterates dominate in the monotone direction, up to ``slack``."""
        diff = self.accelerated - self.standard
        scale = 1.0 + np.abs(self.standard)
        if self.direction is Direction.INCREASING:
            return bool(np.all(diff >= -slack * scale))
        return bool(np.all(diff <= slack * scale))


def _compare(a: np.ndarray, b: np.ndarray) -> Dominance:
    if np.array_equal(a, b):
        return Dominance.EQUAL
    if np.all(a >= b):
        return Dominance.ABOVE
    if np.all(a <= b):
        return Dominance.BELOW
    return Dominance.MIXED


def dominance_report(T: PositiveConcaveMapping, A: AcceleratedMapping, x1, n_steps: int, reference=None) -> DominanceReport:
    """Run both iterations ``n_steps`` times from ``x1`` and compare them step by step.

    The reference fixed point defaults to the accelerated iteration run to
    ``1e-12``.
    """
    x1 = np.asarray(x1, dtype=float)
    direction = classify_start(T, x1)
    if direction is Direction.NONE:
        raise NotMonotoneStart("T(x1) - x1 has mixed signs")
    if reference is None:
        ref_trace = iterate_accelerated(A, x1, tol=REFERENCE_TOL)
        reference = ref_trace.x
    std = [x1]
    acc = [x1]
    TA = A.as_mapping()
    for _ in range(n_steps):
        std.append(evaluate(T, std[-1]))
        acc.append(evaluate(TA, acc[-1]))
    std = np.array(std)
    acc = np.array(acc)
    return DominanceReport(
        direction=direction,
        standard=std,
        accelerated=acc,
        reference=reference,
        dominance=[_compare(a, s) for a, s in zip(acc, std)],
        standard_distance=np.max(np.abs(std - reference), axis=1),
        accelerated_distance=np.max(np.abs(acc - reference), axis=1),
    )
