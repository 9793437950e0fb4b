"""Fixed-point existence certificates from the lower bounding matrix."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import MissingLowerBound, SpectralRadiusTooLarge
from .lower_bound import LowerBoundingMatrix
from .mapping import PositiveConcaveMapping, evaluate
from .spectral import RHO_MARGIN, factor, spectral_radius


class Verdict(enum.Enum):
    INFEASIBLE = "Infeasible"
    FEASIBLE = "FeasibleProven"
    UNKNOWN = "Unknown"


class Reason(enum.Enum):
    NECESSARY_VIOLATED = "NecessaryViolated"
    SUFFICIENT_AFFINE_BOUND = "SufficientAffineBound"
    MODEL_SPECIFIC_IFF = "ModelSpecificIff"
    RHO_BELOW_ONE_ONLY = "RhoBelowOneOnly"
    CAPACITY_EXCEEDED = "CapacityExceeded"


@dataclass(frozen=True)
class Certificate:
    verdict: Verdict
    rho: float
    reason: Reason
    lower_bound_fixed_point: Optional[np.ndarray] = None
    witness: Optional[np.ndarray] = None
    sampled: bool = False

    @property
    def infeasible(self) -> bool:
        return self.verdict is Verdict.INFEASIBLE

    def to_text(self) -> str:
        """Key-value serialization, one ``key=value`` per line; vectors comma-separated."""
        lines = [
            f"verdict={self.verdict.value}",
            f"reason={self.reason.value}",
            f"rho={self.rho:.17g}",
            f"sampled={str(self.sampled).lower()}",
        ]
        if self.lower_bound_fixed_point is not None:
            lines.append("lower_bound=" + ",".join(f"{v:.17g}" for v in self.lower_bound_fixed_point))
        if self.witness is not None:
            lines.append("witness=" + ",".join(f"{v:.17g}" for v in self.witness))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Certificate":
        kv = dict(line.split("=", 1) for line in text.strip().splitlines())
        vec = lambda key: None if key not in kv else np.array([float(v) for v in kv[key].split(",")])
        return cls(
            verdict=Verdict(kv["verdict"]),
            rho=float(kv["rho"]),
            reason=Reason(kv["reason"]),
            lower_bound_fixed_point=vec("lower_bound"),
            witness=vec("witness"),
            sampled=kv.get("sampled") == "true",
        )


def _matrix(M) -> np.ndarray:
    return M.M if isinstance(M, LowerBoundingMatrix) else np.asarray(M, dtype=float)


def certify_necessary(T: PositiveConcaveMapping, M) -> Certificate:
    """Infeasible if ``rho(M) >= 1``; otherwise attach ``(I - M)^-1 T(0)``.

    The attached vector is the fixed point of the affine minorant
    ``x -> T(0) + M x`` and bounds any fixed point of ``T`` from below.
    """
    M = _matrix(M)
    rho = spectral_radius(M)
    if rho >= 1.0 - RHO_MARGIN:
        return Certificate(Verdict.INFEASIBLE, rho, Reason.NECESSARY_VIOLATED)
    lower = factor(M, rho).solve(evaluate(T, np.zeros(T.dimension)))
    return Certificate(Verdict.UNKNOWN, rho, Reason.RHO_BELOW_ONE_ONLY, lower_bound_fixed_point=lower)


def affine_bound_samples(rng, n: int, n_samples: int) -> np.ndarray:
    """Half uniform in [0, 10]^n, half with log-uniform magnitudes up to 1e6."""
    n_uniform = n_samples // 2
    uniform = rng.uniform(0.0, 10.0, (n_uniform, n))
    log_mag = 10.0 ** rng.uniform(-3.0, 6.0, (n_samples - n_uniform, n))
    return np.vstack([uniform, log_mag])


def certify_sufficient_affine(
    T: PositiveConcaveMapping,
    M,
    y,
    n_samples: int = 1000,
    rng=None,
    model_specific: bool = False,
    samples=None,
) -> Certificate:
    """Check ``T(x) <= y + M x`` on samples; with ``rho(M) < 1`` that proves a fixed point.

    ``model_specific=True`` records that the mapping belongs to a family where
    ``rho(M) < 1`` is already known to be necessary and sufficient (the load
    mapping), so no sampling is done. ``samples`` overrides the random probes.
    """
    M = _matrix(M)
    rho = spectral_radius(M)
    if rho >= 1.0 - RHO_MARGIN:
        raise SpectralRadiusTooLarge(rho)
    lower = factor(M, rho).solve(evaluate(T, np.zeros(T.dimension)))
    if model_specific:
        return Certificate(Verdict.FEASIBLE, rho, Reason.MODEL_SPECIFIC_IFF, lower_bound_fixed_point=lower)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("y must be strictly positive")
    if samples is None:
        samples = affine_bound_samples(np.random.default_rng(rng), T.dimension, n_samples)
    for x in np.atleast_2d(np.asarray(samples, dtype=float)):
        bound = y + M @ x
        if np.any(evaluate(T, x) > bound + 1e-12 * np.abs(bound)):
            return Certificate(
                Verdict.UNKNOWN, rho, Reason.RHO_BELOW_ONE_ONLY,
                lower_bound_fixed_point=lower, witness=x, sampled=True,
            )
    return Certificate(
        Verdict.FEASIBLE, rho, Reason.SUFFICIENT_AFFINE_BOUND,
        lower_bound_fixed_point=lower, sampled=True,
    )


def check_affine_bound_at(T: PositiveConcaveMapping, M, y, x) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(evaluate(T, x) <= np.asarray(y) + _matrix(M) @ x))


def capacity_prune(cert: Certificate, capacity) -> Certificate:
    """Mark infeasible when even the affine lower bound exceeds ``capacity``."""
    if cert.lower_bound_fixed_point is None:
        raise MissingLowerBound("certificate has no lower-bound fixed point")
    capacity = np.asarray(capacity, dtype=float)
    if np.any(cert.lower_bound_fixed_point > capacity):
        return replace(cert, verdict=Verdict.INFEASIBLE, reason=Reason.CAPACITY_EXCEEDED)
    return cert
