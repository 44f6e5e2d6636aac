"""Acceptance suite: one PASS/FAIL line per criterion, tolerances and time budgets pinned.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` (the lines are
also printed without ``-s``).
"""

import math
import time

import numpy as np
import pytest

from conftest import random_convex_polygon
from robin_annulus import domains
from robin_annulus.analytic import first_root_p2, torsion_profile_p2
from robin_annulus.fem.assembly import Assembler
from robin_annulus.fem.mesh import annulus_mesh, generate_mesh
from robin_annulus.fem.solvers import dirichlet_neumann_p2, eigen_fem
from robin_annulus.geometry import (AnnulusSpec, Ball, Box, inner_parallel, outer_parallel, quermass,
                                    annulus_domain)
from robin_annulus.radial import (ProblemParams, boundary_derivative, constant_test_bound, first_eigenvalue_radial)
from robin_annulus.verify import beta_sweep, check_theorem_1, check_theorem_2
from test_radial import FD_CASES, fd_eigenvalue

THEOREM_1_PARAMS = [(2.0, 1.0), (2.0, -1.0), (3.0, 1.0), (1.5, 0.5)]
H = 0.02


def report(capsys, number, title, ok, detail, seconds, budget=None):
    within = budget is None or seconds < budget
    status = "PASS" if ok and within else "FAIL"
    limit = f" (budget {budget:.0f} s)" if budget else ""
    with capsys.disabled():
        print(f"\n[criterion {number:>2}] {status}  {title}: {detail}; {seconds:.1f} s{limit}")
    return ok and within


@pytest.fixture(scope="module")
def theorem_meshes():
    return {name: generate_mesh(domains.load(name), H) for name in domains.THEOREM_DOMAINS}


def test_c01_bessel_root_matches_shooting(capsys):
    t0 = time.perf_counter()
    cases = [(2, 1.0, 2.0, 1.0), (2, 1.0, 2.0, 0.1), (2, 1.0, 2.0, 10.0), (2, 0.5, 1.0, 2.0), (2, 0.1, 3.0, 0.7),
             (2, 2.0, 2.5, 1.5), (3, 1.0, 2.0, 1.0), (3, 0.5, 1.5, 0.3), (4, 1.0, 2.0, 1.0), (5, 0.8, 1.2, 4.0)]
    worst = 0.0
    for n, r1, r2, beta in cases:
        A = AnnulusSpec(n, r1, r2)
        lam = first_eigenvalue_radial(ProblemParams(2.0, n, beta), A).lam
        root = first_root_p2(n, beta, A, "derived")
        worst = max(worst, abs(root - lam) / lam)
    dt = time.perf_counter() - t0
    assert report(capsys, 1, "Bessel root vs shooting, 10 annuli", worst <= 1e-6, f"max rel diff {worst:.2e} <= 1e-6",
                  dt, 5)


def test_c02_shooting_matches_finite_differences(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for n, r1, r2, beta in FD_CASES:
        lam = first_eigenvalue_radial(ProblemParams(2.0, n, beta), AnnulusSpec(n, r1, r2)).lam
        worst = max(worst, abs(lam - fd_eigenvalue(n, r1, r2, beta, 10_000)) / abs(lam))
    dt = time.perf_counter() - t0
    assert report(capsys, 2, "shooting vs 10^4-node finite differences, 5 cases", worst <= 1e-7,
                  f"max rel diff {worst:.2e} <= 1e-7", dt, 10)


TORSION_CASES = [(2, 1.0, 1.0, 2.0), (2, 0.5, 0.5, 1.5), (2, 3.0, 1.0, 1.2), (3, 1.0, 1.0, 2.0), (2, 1.0, 0.2, 2.0)]


@pytest.mark.xfail(strict=True, reason="the transcribed closed-form torsion profile does not solve the problem; "
                                       "see the derived-profile check below")
def test_c03_transcribed_torsion_profile(capsys):
    t0 = time.perf_counter()
    worst = max(torsion_profile_p2(n, b, AnnulusSpec(n, r1, r2), variant="transcribed")["max_abs_diff"]
                for n, b, r1, r2 in TORSION_CASES)
    dt = time.perf_counter() - t0
    assert report(capsys, 3, "transcribed closed-form torsion profile vs flux quadrature", worst <= 1e-8,
                  f"max pointwise diff {worst:.3g} (needs <= 1e-8)", dt, 2)


def test_c03_derived_torsion_profile(capsys):
    t0 = time.perf_counter()
    worst = max(torsion_profile_p2(n, b, AnnulusSpec(n, r1, r2), variant="derived")["max_abs_diff"]
                for n, b, r1, r2 in TORSION_CASES)
    dt = time.perf_counter() - t0
    assert report(capsys, "3b", "re-derived closed-form torsion profile vs flux quadrature", worst <= 1e-8,
                  f"max pointwise diff {worst:.2e} <= 1e-8", dt, 2)


@pytest.fixture(scope="module")
def theorem_1_reports(theorem_meshes):
    t0 = time.perf_counter()
    reps = {(name, p, beta): check_theorem_1(domains.load(name), ProblemParams(p, 2, beta), H, mesh=mesh)
            for name, mesh in theorem_meshes.items() for p, beta in THEOREM_1_PARAMS}
    return reps, time.perf_counter() - t0


def _certificate_4(capsys, reports, seconds, label, web_bound):
    failures, worst_chain, worst_web = [], -math.inf, -math.inf
    for key, rep in reports.items():
        v = rep.values
        chain = v["lambda_fem"] - (v["J0_web"] + v["tol_chain"])
        web = v["J0_web"] - web_bound(v["lambda_A"])
        worst_chain, worst_web = max(worst_chain, chain), max(worst_web, web)
        if not (rep.complete and chain <= 0 and web <= 0):
            failures.append(key)
    detail = (f"{len(reports)} cases, max(lambda_fem - J0 - tol_chain) = {worst_chain:.2e}, "
              f"max(J0 - bound) = {worst_web:.2e}, failures {failures}")
    bound = "J0 <= lambda_A(1+1e-3)" if label == 4 else "J0 <= lambda_A + 1e-3|lambda_A|"
    return report(capsys, label, f"eigenvalue comparison on bundled domains with {bound}", not failures, detail,
                  seconds, 300)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="for beta < 0 the literal bound lambda_A(1+1e-3) lies below lambda_A and "
                                       "the near-annulus web quotient is within 4e-4 of lambda_A")
def test_c04_eigenvalue_certificate_literal(capsys, theorem_1_reports):
    reports, seconds = theorem_1_reports
    assert _certificate_4(capsys, reports, seconds, 4, lambda lam: lam * (1 + 1e-3))


@pytest.mark.slow
def test_c04_eigenvalue_certificate_relative(capsys, theorem_1_reports):
    reports, seconds = theorem_1_reports
    assert _certificate_4(capsys, reports, seconds, "4b", lambda lam: lam + 1e-3 * abs(lam))


@pytest.mark.slow
def test_c05_torsion_certificate(capsys, theorem_meshes):
    t0 = time.perf_counter()
    failures, worst = [], math.inf
    for name, mesh in theorem_meshes.items():
        dom = domains.load(name)
        for p, beta in THEOREM_1_PARAMS:
            if beta <= 0:
                continue
            rep = check_theorem_2(dom, ProblemParams(p, 2, beta), H, mesh=mesh)
            v = rep.values
            rel = v["T_fem"] / (v["T_A"] * (1 - 1e-3)) - 1
            worst = min(worst, rel)
            if not (rep.complete and rel >= 0):
                failures.append((name, p, beta))
    dt = time.perf_counter() - t0
    assert report(capsys, 5, "torsion comparison on bundled domains", not failures,
                  f"min T_fem/(T_A(1-1e-3)) - 1 = {worst:.2e}, failures {failures}", dt, 180)


@pytest.mark.slow
def test_c06_equality_sharpness(capsys):
    t0 = time.perf_counter()
    margins = {}
    for k in (90, 720):
        dom = annulus_domain(1.0, 2.0, k)
        mesh = generate_mesh(dom, H)
        row = []
        for p, beta in THEOREM_1_PARAMS[:3]:
            row.append(check_theorem_1(dom, ProblemParams(p, 2, beta), H, mesh=mesh, levels=16)
                       .values["relative_margin"])
        row.append(check_theorem_2(dom, ProblemParams(2.0, 2, 1.0), H, mesh=mesh, levels=16)
                   .values["relative_margin"])
        margins[k] = np.abs(row)
    ok = bool(np.all(margins[720] <= 5e-3) and np.all(margins[720] < margins[90]))
    dt = time.perf_counter() - t0
    fmt = lambda a: "[" + " ".join(f"{x:.2e}" for x in a) + "]"  # noqa: E731
    detail = f"|relative margins| 720-gon {fmt(margins[720])} vs 90-gon {fmt(margins[90])}"
    assert report(capsys, 6, "margins shrink on the polygonal annulus", ok, detail, dt)


def test_c07_proposition_suite(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    sign_ok = bound_ok = True
    for _ in range(50):
        p = float(rng.uniform(1.2, 5.0))
        n = int(rng.integers(2, 5))
        beta = float(rng.choice([-1, 1]) * 10 ** rng.uniform(-1.5, 1))
        r1 = float(rng.uniform(0, 2))
        A = AnnulusSpec(n, r1, r1 + float(rng.uniform(0.2, 2)))
        params = ProblemParams(p, n, beta)
        lam = first_eigenvalue_radial(params, A, steps=2048).lam
        sign_ok &= math.copysign(1, lam) == math.copysign(1, beta)
        if beta < 0:
            bound_ok &= lam <= constant_test_bound(params, A)
    a12 = AnnulusSpec(2, 1.0, 2.0)
    radial_ok = fem_ok = True
    worst = {"radial_second": -math.inf, "fem_second": -math.inf, "radial_deriv": 0.0, "fem_deriv": 0.0}
    dom = domains.load("square_hole")
    mesh = generate_mesh(dom, 0.04)
    asm = Assembler(mesh)
    for p, grid in [(2.0, [0.25, 0.5, 1.0, 1.5, 2.0]), (3.0, [0.25, 0.5, 1.0, 1.5, 2.0]),
                    (2.0, [-2.0, -1.5, -1.0, -0.5, -0.25])]:
        rt = beta_sweep(a12, p, grid, tol_second=1e-8)
        ft = beta_sweep(dom, p, grid, mesh=mesh, tol_second=1e-6)
        radial_ok &= rt.flags["non_decreasing"] and rt.flags["concave"]
        fem_ok &= ft.flags["non_decreasing"] and ft.flags["concave"]
        worst["radial_second"] = max(worst["radial_second"], rt.flags["max_second_difference"])
        worst["fem_second"] = max(worst["fem_second"], ft.flags["max_second_difference"])
        b = grid[2]
        db = 1e-4 * abs(b)
        up = first_eigenvalue_radial(ProblemParams(p, 2, b + db), a12).lam
        dn = first_eigenvalue_radial(ProblemParams(p, 2, b - db), a12).lam
        worst["radial_deriv"] = max(worst["radial_deriv"], abs((up - dn) / (2 * db) / rt.derivative[2] - 1))
        db = 1e-3 * abs(b)
        up = eigen_fem(ProblemParams(p, 2, b + db), mesh).lam
        dn = eigen_fem(ProblemParams(p, 2, b - db), mesh).lam
        worst["fem_deriv"] = max(worst["fem_deriv"], abs((up - dn) / (2 * db) / ft.derivative[2] - 1))
        if b < 0:
            bound_ok &= bool(np.all(ft.values <= np.array(grid) * asm.robin_length / asm.volume))
    deriv_ok = worst["radial_deriv"] <= 1e-4 and worst["fem_deriv"] <= 1e-3
    ok = sign_ok and bound_ok and radial_ok and fem_ok and deriv_ok
    dt = time.perf_counter() - t0
    detail = (f"sign law {sign_ok} (50 cases), constant bound {bound_ok}, "
              f"max second difference radial {worst['radial_second']:.1e} fem {worst['fem_second']:.1e}, "
              f"derivative identity rel err radial {worst['radial_deriv']:.1e} fem {worst['fem_deriv']:.1e}")
    assert report(capsys, 7, "sign law, monotonicity, concavity, derivative identity", ok, detail, dt)


def test_c08_dirichlet_limit(capsys):
    t0 = time.perf_counter()
    mesh = annulus_mesh(1.0, 2.0, 0.04)
    robin = eigen_fem(ProblemParams(2.0, 2, 1e4), mesh).lam
    dirichlet = dirichlet_neumann_p2(mesh).lam
    rel = abs(robin - dirichlet) / dirichlet
    dt = time.perf_counter() - t0
    assert report(capsys, 8, "large-beta Robin vs Dirichlet/Neumann on the annulus mesh", rel <= 0.02,
                  f"lambda(1e4) = {robin:.6f}, lambda_D = {dirichlet:.6f}, rel {rel:.2e} <= 0.02", dt)


def test_c09_geometry_exactness(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    worst_steiner, worst_rate, chain_ok, count = 0.0, math.inf, True, 0
    for _ in range(100):
        body = random_convex_polygon(rng, int(rng.integers(3, 40)))
        q = quermass(body)
        chain_ok &= q.af_chain_holds()
        count += 1
        for rho in rng.uniform(0.0, 2.0, 4):
            A, P = outer_parallel(body, rho)
            worst_steiner = max(worst_steiner, abs(q.steiner_volume(rho) / A - 1), abs(q.steiner_perimeter(rho) / P - 1))
        r = body.inradius
        for t in rng.uniform(0.0, 0.9, 3) * r:
            a, b = inner_parallel(body, t), inner_parallel(body, t + 1e-5 * r)
            if a is not None and b is not None:
                worst_rate = min(worst_rate, -(b.perimeter - a.perimeter) / (1e-5 * r))
    for body in [Ball(n, 1.7) for n in range(2, 7)] + [Box((1.0, 2.0, 3.0)), Box((0.5, 1, 1, 2))]:
        chain_ok &= quermass(body).af_chain_holds()
        count += 1
    ok = worst_steiner <= 1e-12 and worst_rate >= 2 * math.pi - 1e-8 and chain_ok
    dt = time.perf_counter() - t0
    detail = (f"Steiner max rel err {worst_steiner:.1e} <= 1e-12, min -dP/dt {worst_rate:.4f} >= 2pi, "
              f"AF chain on {count} bodies {chain_ok}")
    assert report(capsys, 9, "Steiner identities, inner-parallel rate, AF chain", ok, detail, dt)


def test_c10_fem_convergence_order(capsys):
    t0 = time.perf_counter()
    params = ProblemParams(2.0, 2, 1.0)
    lam = first_eigenvalue_radial(params, AnnulusSpec(2, 1.0, 2.0)).lam
    hs = [0.08, 0.04, 0.02]
    errs = [abs(eigen_fem(params, annulus_mesh(1.0, 2.0, h)).lam - lam) / lam for h in hs]
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(2)]
    order = math.log(errs[0] / errs[2]) / math.log(hs[0] / hs[2])
    dt = time.perf_counter() - t0
    detail = f"errors {[f'{e:.2e}' for e in errs]}, pairwise orders {[round(o, 2) for o in orders]}, fit {order:.2f}"
    assert report(capsys, 10, "P1 eigenvalue convergence on the annulus", 1.7 <= order <= 2.3, detail, dt, 120)
