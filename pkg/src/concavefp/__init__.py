"""Fixed points of positive concave mappings: lower bounding matrices,
spectral-radius certificates and accelerated iterations, with an OFDMA
load/power coupling model as the worked application."""

from .accel import AcceleratedMapping, build_accelerated, dominance_report, evaluate_accelerated, iterate_accelerated
from .certify import Certificate, Reason, Verdict, capacity_prune, certify_necessary, certify_sufficient_affine
from .lower_bound import LimitSchedule, LowerBoundingMatrix, Route, build_matrix, recession_entry, supergradient_entry
from .mapping import (
    Direction,
    IterationTrace,
    PositiveConcaveMapping,
    Status,
    classify_start,
    evaluate,
    iterate_standard,
)
from .spectral import FactoredSystem, factor, similar_spectrum_check, spectral_radius

__version__ = "0.1.0"
