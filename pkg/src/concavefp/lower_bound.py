"""Lower bounding matrices of positive concave mappings.

Entry ``[M]_{i,k}`` is the infimum of the k-th coordinate over all
supergradients of component ``f_i``. Two numerically independent routes
estimate it:

* recession limit: ``lim_{h -> 0+} h * f_i(e_k / h)``
* supergradient limit: ``lim_{h -> inf} d f_i / d x_k`` at ``x0 + h e_k``

Both sequences are monotone. Most converge geometrically along a geometric
schedule of ``h``; components that grow like ``t / log t`` converge only
like ``1 / log(1/h)``. For those, the sequence is extrapolated in ``1/n``
(``n`` the schedule index) by Richardson/Neville on dyadic nodes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import LowerBoundError, NonConverged, NonFiniteResult
from .mapping import PositiveConcaveMapping, evaluate
from .spectral import as_nonneg_matrix, spectral_radius

ZERO_CLAMP = 1e-12
MIN_EXTRAPOLATION_NODE = 12


class Route(enum.Enum):
    RECESSION = "RecessionLimit"
    SUPERGRADIENT = "SupergradientLimit"
    CLOSED_FORM = "ClosedForm"


@dataclass(frozen=True)
class LimitSchedule:
    """Geometric schedule ``h_n = start * ratio**n`` for ``n = 0..max_steps``."""

    ratio: float
    start: float = 1.0
    max_steps: int = 496
    rtol: float = 1e-8
    atol: float = 1e-15
    extrapolate: bool = True
    extrapolation_tol: float = 1e-6

    def __post_init__(self):
        if not (self.ratio > 0 and self.ratio != 1):
            raise ValueError("ratio must be positive and different from 1")
        if self.start <= 0 or self.max_steps < 2 or self.rtol <= 0 or self.atol < 0:
            raise ValueError("invalid schedule parameters")

    @classmethod
    def recession(cls, **kw) -> "LimitSchedule":
        return cls(ratio=0.25, **kw)

    @classmethod
    def supergradient(cls, **kw) -> "LimitSchedule":
        return cls(ratio=4.0, **kw)

    def h(self, n: int) -> float:
        return self.start * self.ratio**n


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    error: float
    steps: int
    extrapolated: bool = False

    def __float__(self):
        return self.value


def _neville_at_zero(nodes: np.ndarray, values: np.ndarray):
    """Polynomial extrapolation to x=0 of samples at x = 1/nodes.

    Returns the highest-order value and the difference to the order below.
    """
    x = 1.0 / nodes.astype(float)
    p = values.astype(float).copy()
    prev = p[-1]
    m = len(x)
    for order in range(1, m):
        prev = p[m - order]
        for j in range(m - order):
            p[j] = (x[j + order] * p[j] - x[j] * p[j + 1]) / (x[j + order] - x[j])
    # after the loop p[0] holds the full-order value, prev the order below
    return p[0], abs(p[0] - prev)


def _extrapolate(history: np.ndarray, n_last: int):
    nodes = []
    n = n_last
    while n >= MIN_EXTRAPOLATION_NODE:
        nodes.append(n)
        n //= 2
    if len(nodes) < 3:
        return None
    nodes = np.array(nodes[::-1])
    vals = history[nodes]
    return _neville_at_zero(nodes, vals)


def limit_of_sequences(sample: Callable[[float], np.ndarray], sched: LimitSchedule, m: int):
    """Estimate ``lim_n sample(h_n)`` component-wise for a vector-valued sequence.

    Returns ``(values, errors, converged_mask, steps, extrapolated_mask)``.
    """
    history = np.empty((sched.max_steps + 1, m))
    done = np.zeros(m, dtype=bool)
    values = np.full(m, np.nan)
    errors = np.full(m, np.inf)
    last = -1
    for n in range(sched.max_steps + 1):
        try:
            q = np.asarray(sample(sched.h(n)), dtype=float)
        except (NonFiniteResult, OverflowError, FloatingPointError):
            break
        if not np.all(np.isfinite(q)):
            break
        history[n] = q
        last = n
        if n >= 2:
            d1 = np.abs(history[n] - history[n - 1])
            d2 = np.abs(history[n - 1] - history[n - 2])
            thresh = sched.rtol * np.abs(q) + sched.atol
            newly = ~done & (d1 <= thresh) & (d2 <= thresh)
            values[newly] = q[newly]
            errors[newly] = d1[newly]
            done |= newly
            if done.all():
                break
    extrapolated = np.zeros(m, dtype=bool)
    if last < 0:
        return values, errors, done, 0, extrapolated
    pending = np.flatnonzero(~done)
    for c in pending:
        seq = history[: last + 1, c]
        # the sequences are monotone towards the limit, which is >= 0
        bound = float(seq[-1])
        values[c] = bound
        errors[c] = abs(seq[-1] - seq[-2]) if last >= 1 else np.inf
        if not sched.extrapolate:
            continue
        ext = _extrapolate(seq, last)
        if ext is None:
            continue
        v, err = ext
        v = min(max(v, 0.0), bound)
        if v <= err:
            # indistinguishable from zero; a smaller entry keeps the minorant valid
            v = 0.0
        if err <= sched.extrapolation_tol * (1.0 + abs(v)):
            values[c] = v
            errors[c] = err
            done[c] = True
            extrapolated[c] = True
    return values, errors, done, last, extrapolated


def _difference_quotient(f: Callable, x: np.ndarray, k: int) -> np.ndarray:
    delta = 1e-4 * (1.0 + np.max(np.abs(x)))
    xp = x.copy()
    xm = x.copy()
    xp[k] += delta
    xm[k] -= delta
    return (f(xp) - f(xm)) / (2.0 * delta)


def _scalar_component(f: Callable, n: int):
    def vec(x):
        v = float(f(x))
        if not np.isfinite(v):
            raise NonFiniteResult("component function returned a non-finite value")
        return np.array([v])

    return vec


def recession_entry(f: Callable, k: int, n: int, sched: Optional[LimitSchedule] = None) -> LimitEstimate:
    """``lim_{h->0+} h f(e_k / h)`` for a scalar concave function ``f`` on ``R_+^n``."""
    sched = sched or LimitSchedule.recession()
    g = _scalar_component(f, n)

    def sample(h):
        x = np.zeros(n)
        x[k] = 1.0 / h
        return h * g(x)

    values, errors, done, steps, ext = limit_of_sequences(sample, sched, 1)
    if not done[0]:
        raise NonConverged(f"recession limit in direction {k} did not settle", residual=errors[0])
    return LimitEstimate(max(values[0], 0.0), errors[0], steps, bool(ext[0]))


def supergradient_entry(
    f: Callable, k: int, x0, sched: Optional[LimitSchedule] = None
) -> LimitEstimate:
    """``lim_{h->inf}`` of the k-th partial difference quotient of ``f`` at ``x0 + h e_k``."""
    sched = sched or LimitSchedule.supergradient()
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 <= 0):
        raise ValueError("x0 must be strictly positive")
    g = _scalar_component(f, len(x0))

    def sample(h):
        x = x0.copy()
        x[k] += h
        return _difference_quotient(g, x, k)

    values, errors, done, steps, ext = limit_of_sequences(sample, sched, 1)
    if not done[0]:
        raise NonConverged(f"supergradient limit in direction {k} did not settle", residual=errors[0])
    return LimitEstimate(max(values[0], 0.0), errors[0], steps, bool(ext[0]))


@dataclass(frozen=True)
class LowerBoundingMatrix:
    M: np.ndarray
    route: Route
    error: np.ndarray

    def __post_init__(self):
        M = as_nonneg_matrix(self.M).copy()
        err = np.broadcast_to(np.asarray(self.error, dtype=float), M.shape).copy()
        M.setflags(write=False)
        err.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "error", err)

    @classmethod
    def closed_form(cls, M) -> "LowerBoundingMatrix":
        M = as_nonneg_matrix(M)
        return cls(M, Route.CLOSED_FORM, np.zeros_like(M))

    @property
    def dimension(self) -> int:
        return self.M.shape[0]

    def rho(self) -> float:
        return spectral_radius(self.M)

    def to_csv(self, path) -> None:
        path = Path(path)
        lines = [f"n={self.dimension},route={self.route.value}"]
        lines += [",".join(f"{v:.17g}" for v in row) for row in self.M]
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "LowerBoundingMatrix":
        text = Path(path).read_text().strip().splitlines()
        header = dict(item.split("=", 1) for item in text[0].split(","))
        n = int(header["n"])
        M = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
        if M.shape != (n, n):
            raise ValueError(f"{path}: header says n={n}, found shape {M.shape}")
        return cls(M, Route(header["route"]), np.zeros((n, n)))


def build_matrix(
    T: PositiveConcaveMapping,
    route: Route = Route.RECESSION,
    sched: Optional[LimitSchedule] = None,
    x0=None,
) -> LowerBoundingMatrix:
    """Estimate the lower bounding matrix of ``T`` column by column.

    Each column ``k`` runs one limit schedule on the whole vector ``T``, so all
    rows ``i`` are estimated together.
    """
    N = T.dimension
    if route is Route.CLOSED_FORM:
        raise ValueError("closed-form matrices are supplied via LowerBoundingMatrix.closed_form")
    if sched is None:
        sched = LimitSchedule.recession() if route is Route.RECESSION else LimitSchedule.supergradient()
    x0 = np.ones(N) if x0 is None else np.asarray(x0, dtype=float)
    M = np.zeros((N, N))
    err = np.zeros((N, N))
    failures = []
    for k in range(N):
        if route is Route.RECESSION:
            def sample(h, k=k):
                x = np.zeros(N)
                x[k] = 1.0 / h
                return h * evaluate(T, x)
        else:
            def sample(h, k=k):
                x = x0.copy()
                x[k] += h
                return _difference_quotient(lambda z: evaluate(T, z), x, k)

        values, errors, done, _, _ = limit_of_sequences(sample, sched, N)
        for i in np.flatnonzero(~done):
            failures.append(((int(i), k), NonConverged("limit did not settle", residual=errors[i])))
        M[:, k] = np.maximum(values, 0.0)
        err[:, k] = errors
    if failures:
        raise LowerBoundError(failures)
    M[M < ZERO_CLAMP] = 0.0
    return LowerBoundingMatrix(M, route, err)
