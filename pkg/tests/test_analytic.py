import numpy as np
import pytest

from robin_annulus.analytic import (CrossCheckAlarm, cross_check_p2, eigen_condition_p2, eigenfunction_p2,
                                    first_root_p2, torsion_closed_derivative, torsion_closed_value,
                                    torsion_profile_p2)
from robin_annulus.geometry import AnnulusSpec
from robin_annulus.radial import ProblemParams, first_eigenvalue_radial, shoot

# shooting values for A_{1,2}, beta = 1, computed once by radial.first_eigenvalue_radial
LAM_N2 = 0.9928453502887762
LAM_N3 = 1.2910617251698
LAM_N4 = 1.6312114698382


def test_condition_vanishes_at_shooting_eigenvalue(a12):
    # normalised residual has O(1) scale; the spec tolerance is 1e-6
    assert abs(eigen_condition_p2(LAM_N2, 2, 1.0, a12)) < 1e-6
    assert abs(eigen_condition_p2(LAM_N2, 2, 1.0, a12, "derived")) < 1e-6


def test_small_lambda_limit_is_finite_and_nonzero(a12):
    vals = [eigen_condition_p2(lam, 2, 1.0, a12) for lam in (1e-6, 1e-9, 1e-12)]
    assert all(np.isfinite(vals))
    assert vals[-1] == pytest.approx(1.0, rel=1e-6)  # tends to beta


def test_nonpositive_lambda_rejected(a12):
    with pytest.raises(ValueError):
        eigen_condition_p2(0.0, 2, 1.0, a12)
    with pytest.raises(ValueError):
        eigen_condition_p2(-1.0, 2, 1.0, a12)


@pytest.mark.parametrize("lam", [0.2, 0.7, 1.4, 3.0])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_derived_condition_equals_shooting_residual(lam, n):
    A = AnnulusSpec(n, 1.0, 2.0)
    r, _ = shoot(ProblemParams(2.0, n, 0.8), A, lam)
    assert eigen_condition_p2(lam, n, 0.8, A, "derived") == pytest.approx(r, rel=1e-8, abs=1e-10)


def test_transcribed_condition_agrees_only_in_the_plane(a12):
    assert first_root_p2(2, 1.0, a12, "transcribed") == pytest.approx(LAM_N2, rel=1e-10)
    A3 = AnnulusSpec(3, 1.0, 2.0)
    assert first_root_p2(3, 1.0, A3, "derived") == pytest.approx(LAM_N3, rel=1e-10)
    with pytest.raises(CrossCheckAlarm) as info:
        cross_check_p2(3, 1.0, A3, "transcribed")
    assert info.value.bessel_root == pytest.approx(0.7401738843949669, rel=1e-9)


def test_cross_check_three_dimensions():
    out = cross_check_p2(3, 1.0, AnnulusSpec(3, 1.0, 2.0))
    assert out["rel_diff"] < 1e-6
    out = cross_check_p2(4, 1.0, AnnulusSpec(4, 1.0, 2.0))
    assert out["bessel"] == pytest.approx(LAM_N4, rel=1e-9)


def test_ball_case():
    ball = AnnulusSpec(2, 0.0, 1.5)
    lam = first_eigenvalue_radial(ProblemParams(2.0, 2, 1.0), ball).lam
    assert first_root_p2(2, 1.0, ball) == pytest.approx(lam, rel=1e-8)


def test_eigenfunction_matches_shooting_profile(a12):
    prof = first_eigenvalue_radial(ProblemParams(2.0, 2, 1.0), a12)
    r = prof.grid[::256]
    assert np.allclose(eigenfunction_p2(prof.lam, 2, a12, r), prof.psi[::256], rtol=1e-9)


def test_derived_torsion_boundary_conditions(a12):
    assert abs(torsion_closed_derivative(2, 1.0, a12, a12.r1)) < 1e-10
    v2 = torsion_closed_value(2, 1.0, a12, a12.r2)
    assert abs(torsion_closed_derivative(2, 1.0, a12, a12.r2) + v2) < 1e-10


def test_derived_torsion_matches_flux_quadrature(a12):
    out = torsion_profile_p2(2, 1.0, a12)
    assert out["max_abs_diff"] < 1e-10
    assert out["T_closed"] == pytest.approx(9.335473760825009, rel=1e-13)
    assert out["T_quadrature"] == pytest.approx(out["T_closed"], rel=1e-12)


def test_transcribed_torsion_violates_boundary_conditions(a12):
    # documented defect of the transcribed formula: the Neumann condition fails
    assert abs(torsion_closed_derivative(2, 1.0, a12, a12.r1, "transcribed")) > 0.1


def test_torsion_rejects_nonpositive_beta(a12):
    with pytest.raises(ValueError):
        torsion_profile_p2(2, -1.0, a12)
