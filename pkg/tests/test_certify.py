import numpy as np
import pytest

from concavefp import lte
from concavefp.certify import (
    Certificate,
    Reason,
    Verdict,
    affine_bound_samples,
    capacity_prune,
    certify_necessary,
    certify_sufficient_affine,
    check_affine_bound_at,
)
from concavefp.errors import MissingLowerBound, SpectralRadiusTooLarge
from concavefp.lower_bound import LowerBoundingMatrix
from concavefp.mapping import iterate_standard

from conftest import affine, scalar_sqrt, sqrt_log

SQRT_LOG_M = np.array([[0.0, 1.0], [0.5, 0.0]])


def test_necessary_infeasible_affine():
    T = affine([1.0, 1.0], [[0.5, 0.8], [0.8, 0.5]])
    cert = certify_necessary(T, [[0.5, 0.8], [0.8, 0.5]])
    assert cert.verdict is Verdict.INFEASIBLE
    assert cert.reason is Reason.NECESSARY_VIOLATED
    assert cert.rho == pytest.approx(1.3)
    assert cert.lower_bound_fixed_point is None


def test_necessary_attaches_lower_bound():
    T = sqrt_log()
    cert = certify_necessary(T, LowerBoundingMatrix.closed_form(SQRT_LOG_M))
    assert cert.verdict is Verdict.UNKNOWN
    assert cert.reason is Reason.RHO_BELOW_ONE_ONLY
    assert cert.rho == pytest.approx(np.sqrt(0.5))
    # (I - M)^-1 (1, 1) for M = [[0, 1], [0.5, 0]]
    np.testing.assert_allclose(cert.lower_bound_fixed_point, [4.0, 3.0])
    xstar = iterate_standard(T, tol=1e-13).x
    assert np.all(cert.lower_bound_fixed_point <= xstar)


def test_sufficient_affine_proves_feasibility():
    # sqrt(t) <= 1 + t/4 and log(1 + t) <= log(4) - 3/4 + t/4 bound T affinely
    T = sqrt_log()
    M = np.array([[0.25, 1.0], [0.5, 0.25]])
    cert = certify_sufficient_affine(T, M, y=[2.0, 1.0 + np.log(4) - 0.75], rng=0)
    assert cert.verdict is Verdict.FEASIBLE
    assert cert.reason is Reason.SUFFICIENT_AFFINE_BOUND
    assert cert.sampled


def test_sufficient_affine_finds_witness():
    T = sqrt_log()
    cert = certify_sufficient_affine(T, SQRT_LOG_M, y=[1.0, 1.0], rng=0)
    assert cert.verdict is Verdict.UNKNOWN
    assert cert.witness is not None
    assert not check_affine_bound_at(T, SQRT_LOG_M, [1.0, 1.0], cert.witness)


def test_sufficient_affine_rejects_large_rho():
    with pytest.raises(SpectralRadiusTooLarge):
        certify_sufficient_affine(affine([1.0], [[1.0]]), [[1.0]], y=[1.0])


def test_sufficient_rejects_nonpositive_y():
    with pytest.raises(ValueError):
        certify_sufficient_affine(sqrt_log(), SQRT_LOG_M, y=[0.0, 1.0])


def test_model_specific_skips_sampling(small_scenario):
    T = lte.load_mapping(small_scenario)
    cert = certify_sufficient_affine(T, lte.load_matrix(small_scenario), None, model_specific=True)
    assert cert.verdict is Verdict.FEASIBLE
    assert cert.reason is Reason.MODEL_SPECIFIC_IFF
    assert not cert.sampled


def test_samples_cover_both_scales():
    s = affine_bound_samples(np.random.default_rng(0), 3, 1000)
    assert s.shape == (1000, 3)
    assert s[:500].max() <= 10.0
    assert s[500:].max() > 1e5
    assert s[500:].min() >= 1e-3


def test_capacity_prune():
    cert = certify_necessary(sqrt_log(), SQRT_LOG_M)
    assert capacity_prune(cert, [10.0, 10.0]) == cert
    pruned = capacity_prune(cert, [3.0, 10.0])
    assert pruned.verdict is Verdict.INFEASIBLE
    assert pruned.reason is Reason.CAPACITY_EXCEEDED


def test_capacity_prune_needs_lower_bound():
    cert = Certificate(Verdict.INFEASIBLE, 2.0, Reason.NECESSARY_VIOLATED)
    with pytest.raises(MissingLowerBound):
        capacity_prune(cert, [1.0])


def test_text_round_trip():
    cert = certify_sufficient_affine(sqrt_log(), SQRT_LOG_M, y=[1.0, 1.0], rng=0)
    text = cert.to_text()
    assert text.splitlines()[0] == "verdict=Unknown"
    back = Certificate.from_text(text)
    assert back.verdict is cert.verdict and back.reason is cert.reason
    assert back.rho == cert.rho
    np.testing.assert_array_equal(back.witness, cert.witness)
    np.testing.assert_array_equal(back.lower_bound_fixed_point, cert.lower_bound_fixed_point)


def test_converse_scenario_unknown():
    scn = lte.stored_scenario("converse_power")
    nu = np.array(scn.params["target_load"])
    T = lte.power_mapping(scn, nu, cap=scn.params["power_cap"])
    cert = certify_necessary(T, lte.power_matrix(scn, nu))
    assert cert.verdict is Verdict.UNKNOWN
    assert cert.rho < 1
    assert iterate_standard(T).status.value == "Diverged"


def test_small_examples():
    cert = certify_necessary(affine([1.0, 1.0], np.zeros((2, 2))), [[0.0, 1.2], [1.2, 0.0]])
    assert cert.infeasible
    half = affine([1.0], [[0.5]])
    cert = certify_necessary(half, [[0.5]])
    assert cert.verdict is Verdict.UNKNOWN
    assert cert.lower_bound_fixed_point == pytest.approx([2.0], rel=1e-15)
    sq = lambda: certify_necessary(scalar_sqrt(), [[0.0]])
    assert sq().lower_bound_fixed_point == pytest.approx([1.0])
    assert sq().lower_bound_fixed_point[0] <= ((1 + 5**0.5) / 2) ** 2


def test_affine_bound_is_its_own_certificate():
    A = np.array([[0.2, 0.3], [0.1, 0.4]])
    cert = certify_sufficient_affine(affine([1.0, 0.5], A), A, y=[1.0, 0.5], rng=3)
    assert cert.verdict is Verdict.FEASIBLE


def test_sqrt_has_no_flat_affine_bound():
    cert = certify_sufficient_affine(scalar_sqrt(), [[0.0]], y=[1.0], samples=[[4.0]])
    assert cert.verdict is Verdict.UNKNOWN
    assert cert.witness == pytest.approx([4.0])


def test_capacity_examples():
    base = Certificate(Verdict.UNKNOWN, 0.5, Reason.RHO_BELOW_ONE_ONLY)
    from dataclasses import replace

    assert capacity_prune(replace(base, lower_bound_fixed_point=np.array([2.0, 2.0])), [1.0, 1.0]).infeasible
    keep = replace(base, lower_bound_fixed_point=np.array([0.3, 0.4]))
    assert capacity_prune(keep, [1.0, 1.0]) is keep


def test_demand_scaling_exceeds_capacity(small_scenario):
    scn = small_scenario.scale_demands(10.0)
    cert = certify_necessary(lte.load_mapping(scn), lte.load_matrix(scn))
    if cert.infeasible:
        assert cert.reason is Reason.NECESSARY_VIOLATED
    else:
        assert capacity_prune(cert, np.ones(scn.n_bs)).reason is Reason.CAPACITY_EXCEEDED
