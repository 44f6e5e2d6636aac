import json
import math

import numpy as np
import pytest

from robin_annulus import domains
from robin_annulus.fem.mesh import generate_mesh
from robin_annulus.geometry import AnnulusSpec, annulus_domain, matched_annulus_for
from robin_annulus.radial import ProblemParams, constant_profile, first_eigenvalue_radial, torsion_radial
from robin_annulus.verify import (NEGATIVE_BETA, POSITIVE_BETA, VerificationReport, beta_sweep, build_web,
                                  check_theorem_1, check_theorem_2, coarea_functionals, evaluate_functionals,
                                  level_data, levels_csv, sweep_flags)


@pytest.fixture(scope="module")
def square():
    return domains.load("square_hole")


@pytest.fixture(scope="module")
def square_mesh(square):
    return generate_mesh(square, 0.08)


def test_web_function_clip_and_boundary_values(square):
    params = ProblemParams(2.0, 2, 1.0)
    web = build_web(square, params)
    A = web.annulus
    assert web.branch == POSITIVE_BETA
    # the square's inradius exceeds r2 - r1, so a clip region exists around the hole
    assert A.r2 - A.r1 < square.outer.inradius
    x = np.array([[0.0, 0.3], [0.0, 0.9], [0.999, 0.0]])
    u = web(x)
    assert u[0] == pytest.approx(web.clip_value)
    assert web.gradient_norm(x)[0] == 0.0
    assert u[2] == pytest.approx(float(web.psi(A.r2 - 0.001)))
    assert web.boundary_value < u[1] < web.clip_value
    assert web.psi_inverse(u[1]) == pytest.approx(A.r2 - 0.1, abs=1e-6)
    assert build_web(square, ProblemParams(2.0, 2, -1.0)).branch == NEGATIVE_BETA


def test_web_rejects_bad_modes(square):
    with pytest.raises(ValueError):
        build_web(square, ProblemParams(2.0, 2, 1.0), mode="heat")
    with pytest.raises(ValueError):
        build_web(square, ProblemParams(2.0, 2, -1.0), mode="torsion")
    with pytest.raises(ValueError):
        build_web(square, ProblemParams(2.0, 3, 1.0))


@pytest.mark.parametrize("p, beta, mode", [(2.0, 1.0, "eigen"), (3.0, -0.5, "eigen"), (1.5, 0.5, "torsion")])
def test_element_quadrature_matches_coarea_integration(square, square_mesh, p, beta, mode):
    web = build_web(square, ProblemParams(p, 2, beta), mode)
    b = coarea_functionals(web, panels=128)
    assert b["J0"] == pytest.approx(coarea_functionals(web, panels=64)["J0"], rel=1e-9)
    # the web function has kinks on the medial axis, so element quadrature converges slowly
    err = []
    for sub in (1, 2):
        a = evaluate_functionals(web, square_mesh, subdivide=sub)
        for key in ("grad_p", "lp", "l1"):
            assert a[key] == pytest.approx(b[key], rel=5e-5)
        err.append(abs(a["J0"] - b["J0"]))
    assert err[1] < err[0]


def test_constant_web_gives_constant_quotient(square, square_mesh):
    params = ProblemParams(2.5, 2, -0.7)
    A = matched_annulus_for(square)
    web = build_web(square, params, profile=constant_profile(params, A), annulus=A)
    fun = evaluate_functionals(web, square_mesh)
    assert fun["grad_p"] == 0.0
    assert fun["J0"] == pytest.approx(params.beta * square.outer_perimeter / square.area, rel=1e-12)


def test_equality_case_reproduces_annulus_values():
    dom = annulus_domain(1.0, 2.0, 360)
    mesh = generate_mesh(dom, 0.05)
    params = ProblemParams(2.0, 2, 1.0)
    web = build_web(dom, params)
    lam = first_eigenvalue_radial(params, web.annulus).lam
    assert evaluate_functionals(web, mesh)["J0"] == pytest.approx(lam, rel=1e-3)
    tw = build_web(dom, params, "torsion")
    _, T = torsion_radial(params, tw.annulus)
    assert evaluate_functionals(tw, mesh)["K0"] == pytest.approx(1 / T, rel=1e-3)


def test_evaluate_rejects_foreign_mesh(square):
    web = build_web(square, ProblemParams(2.0, 2, 1.0))
    with pytest.raises(RuntimeError):
        evaluate_functionals(web, generate_mesh(domains.load("hexagon_hole"), 0.1))


def test_level_data_inequalities(square):
    web = build_web(square, ProblemParams(2.0, 2, 1.0))
    ld = level_data(web, levels=33)
    assert all(c["pass"] for c in ld["checks"].values())
    rows = ld["levels"]
    assert rows["P_A"][-1] == pytest.approx(square.outer_perimeter)
    assert rows["mu"][-1] == pytest.approx(square.area)
    assert rows["eta"][0] == 0.0
    csv = levels_csv(rows).splitlines()
    assert csv[0] == "t,P_E,P_A,mu,eta,rho,s,live_length" and len(csv) == 34


def test_theorem_reports_pass_and_are_deterministic(square, square_mesh, tmp_path):
    params = ProblemParams(2.0, 2, 1.0)
    r1 = check_theorem_1(square, params, 0.08, mesh=square_mesh, levels=16)
    r2 = check_theorem_1(square, params, 0.08, mesh=square_mesh, levels=16)
    assert r1.passed and r1.complete
    assert r1.to_json() == r2.to_json()
    assert r1.values["lambda_fem"] <= r1.values["lambda_A"]
    assert r1.values["lambda_A_bessel"] == pytest.approx(r1.values["lambda_A"], rel=1e-8)
    r1.write(tmp_path / "r.json", tmp_path / "r.csv")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["passed"] is True and d["kind"] == "theorem_1"
    for m in d["margins"].values():
        assert set(m) == {"margin", "tolerance", "pass"}
    t = check_theorem_2(square, params, 0.08, mesh=square_mesh, levels=16)
    assert t.passed
    assert t.values["T_fem"] >= t.values["T_A"]
    with pytest.raises(ValueError):
        check_theorem_2(square, ProblemParams(2.0, 2, -1.0), 0.08)


def test_report_without_margins_is_incomplete():
    rep = VerificationReport("theorem_1", {}, {}, {}, complete=False)
    assert not rep.passed


def test_sweep_flags_detect_violations():
    b = np.array([0.1, 0.2, 0.3, 0.4])
    assert sweep_flags(b, np.sqrt(b))["concave"]
    f = sweep_flags(b, b**2)
    assert not f["concave"] and f["non_decreasing"]
    f = sweep_flags(b, -b)
    assert not f["non_decreasing"] and f["max_decrease"] == pytest.approx(0.1)


def test_radial_sweeps(a12):
    tab = beta_sweep(a12, 2.0, [-2.0, -1.0, -0.5, -0.1])
    assert tab.flags["non_decreasing"] and tab.flags["concave"]
    assert np.all(tab.values < 0)
    tab = beta_sweep(a12, 3.0, [0.25, 0.5, 1.0, 2.0, 4.0], mode="torsion")
    assert tab.flags["non_decreasing"]  # 1/T rises with beta
    assert tab.to_csv().splitlines()[0] == "beta,value"
    assert json.loads(tab.to_json())["mode"] == "torsion"


@pytest.mark.parametrize("betas", [[0.0, 1.0], [1.0, 0.5], [-1.0, 1.0]])
def test_sweep_grid_validation(a12, betas):
    with pytest.raises(ValueError):
        beta_sweep(a12, 2.0, betas)


def test_inverse_torsion_is_concave_in_beta(a12):
    betas = np.linspace(0.2, 3.0, 9)
    inv = [1 / torsion_radial(ProblemParams(2.0, 2, b), a12)[1] for b in betas]
    f = sweep_flags(betas, np.array(inv))
    assert f["non_decreasing"] and f["concave"]
    assert math.isfinite(f["max_second_difference"])
