"""Monte-Carlo comparison of standard and accelerated iterations.

Each run draws a user placement, discards it when the load mapping has no
fixed point (``rho(M') >= 1``), computes a reference fixed point with the
accelerated iteration at a tight step tolerance, and records the normalized error
``||x_n - x*||_2 / ||x*||_2`` of both iterations started from zero.

Run ``r`` draws from its own stream ``SeedSequence(seed).spawn(runs)[r]``
(PCG64), so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lte
from .accel import build_accelerated, iterate_accelerated
from .errors import NonConverged, TooManyDiscards
from .mapping import evaluate
from .spectral import RHO_MARGIN, spectral_radius

log = logging.getLogger(__name__)

CSV_HEADER = ["iter", "standard_nme", "standard_ci", "accel_nme", "accel_ci"]
Z95 = 1.959963984540054
# the step test bounds the error only up to a factor 1/(1 - contraction); with
# contraction near 1 (power mode) a 1e-12 step still leaves ~1e-10 error
REFERENCE_TOL = 1e-14


@dataclass(frozen=True)
class ExperimentConfig:
    runs: int = 100
    seed: int = 0
    budget: int = 100
    mode: str = "load"  # "load" or "power"
    params: lte.RadioParams = field(default_factory=lte.RadioParams)
    max_discard_rate: float = 0.9
    reference_tol: float = REFERENCE_TOL

    def __post_init__(self):
        if self.runs < 1 or self.budget < 1:
            raise ValueError("runs and budget must be positive")
        if self.mode not in ("load", "power"):
            raise ValueError(f"mode must be 'load' or 'power', got {self.mode!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        params = lte.RadioParams.from_dict(d.pop("scenario", {}))
        return cls(params=params, **d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class RunResult:
    standard: np.ndarray  # (budget,) errors after n = 1..budget applications
    accelerated: np.ndarray
    reference: np.ndarray
    rho: float


@dataclass(frozen=True)
class NmeCurve:
    standard_nme: np.ndarray
    standard_ci: np.ndarray
    accel_nme: np.ndarray
    accel_ci: np.ndarray
    discarded: int
    standard_runs: np.ndarray  # (runs, budget)
    accel_runs: np.ndarray

    def __len__(self):
        return len(self.standard_nme)


def _normalized_errors(iterates: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return np.linalg.norm(iterates - ref, axis=1) / np.linalg.norm(ref)


def _problem(scn: lte.NetworkScenario, mode: str, reference_tol: float = REFERENCE_TOL):
    """Mapping and closed-form lower bounding matrix for one scenario."""
    T = lte.load_mapping(scn)
    M = lte.load_matrix(scn)
    if mode == "load":
        return T, M
    # power mode: the target load is the one induced by the scenario's powers
    nu = iterate_accelerated(build_accelerated(T, M), tol=reference_tol).x
    return lte.power_mapping(scn, nu), lte.power_matrix(scn, nu)


def single_run(
    scn: lte.NetworkScenario,
    budget: int,
    mode: str = "load",
    rho: float | None = None,
    reference_tol: float = REFERENCE_TOL,
) -> RunResult:
    T, M = _problem(scn, mode, reference_tol)
    A = build_accelerated(T, M)
    ref_trace = iterate_accelerated(A, tol=reference_tol)
    if not ref_trace.converged:
        raise NonConverged(f"reference iteration ended with status {ref_trace.status.value}")
    ref = ref_trace.x
    TA = A.as_mapping()
    std = np.empty((budget, T.dimension))
    acc = np.empty((budget, T.dimension))
    x = y = np.zeros(T.dimension)
    for n in range(budget):
        x = evaluate(T, x)
        y = evaluate(TA, y)
        std[n] = x
        acc[n] = y
    return RunResult(
        standard=_normalized_errors(std, ref),
        accelerated=_normalized_errors(acc, ref),
        reference=ref,
        rho=spectral_radius(lte.closed_form_Mprime(scn)) if rho is None else rho,
    )


def _half_width(samples: np.ndarray) -> np.ndarray:
    if samples.shape[0] < 2:
        return np.zeros(samples.shape[1])
    return Z95 * samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])


def run_nme(cfg: ExperimentConfig) -> NmeCurve:
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.runs)
    max_discards = int(np.floor(cfg.max_discard_rate / (1.0 - cfg.max_discard_rate) * cfg.runs + 1e-9))
    discarded = 0
    std_runs, acc_runs = [], []
    for r, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        while True:
            scn = lte.generate_scenario(cfg.params, rng)
            rho = spectral_radius(lte.closed_form_Mprime(scn))
            if rho < 1.0 - RHO_MARGIN:
                break
            discarded += 1
            if discarded > max_discards:
                raise TooManyDiscards(
                    f"{discarded} infeasible draws for {cfg.runs} runs exceeds the "
                    f"{cfg.max_discard_rate:.0%} discard limit"
                )
        res = single_run(scn, cfg.budget, cfg.mode, rho, cfg.reference_tol)
        std_runs.append(res.standard)
        acc_runs.append(res.accelerated)
        log.debug("run %d: rho=%.4f", r, rho)
    std_runs = np.array(std_runs)
    acc_runs = np.array(acc_runs)
    return NmeCurve(
        standard_nme=std_runs.mean(axis=0),
        standard_ci=_half_width(std_runs),
        accel_nme=acc_runs.mean(axis=0),
        accel_ci=_half_width(acc_runs),
        discarded=discarded,
        standard_runs=std_runs,
        accel_runs=acc_runs,
    )


def iterations_to_reach(errors: np.ndarray, level: float) -> int | None:
    """First iteration index (1-based) whose error is at most ``level``."""
    hits = np.flatnonzero(np.asarray(errors) <= level)
    return int(hits[0]) + 1 if len(hits) else None


def write_csv(curve: NmeCurve, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for n in range(len(curve)):
                w.writerow(
                    [n + 1]
                    + [
                        f"{v:.17g}"
                        for v in (curve.standard_nme[n], curve.standard_ci[n], curve.accel_nme[n], curve.accel_ci[n])
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write NME curve to {path}: {exc}") from exc


def read_csv(path) -> dict:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return {key: np.array([float(r[key]) for r in rows]) for key in CSV_HEADER}
