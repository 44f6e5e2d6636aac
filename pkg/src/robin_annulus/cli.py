"""Command-line front end.

Exit codes: 0 success / all inequalities hold, 1 an asserted inequality failed,
2 a solver failed or a cross-check alarm fired, 3 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, domains
from .analytic import CrossCheckAlarm, first_root_p2
from .fem.mesh import MeshError, generate_mesh, read_mesh
from .fem.solvers import eigen_fem, torsion_fem
from .geometry import (AnnulusSpec, ConvexPolygon, DomainParseError, GeometryError, inner_parallel,
                       matched_annulus_for, outer_parallel, quermass, read_domain)
from .radial import (ProblemParams, RadialError, first_eigenvalue_radial, rayleigh_radial, torsion_radial)
from .verify import TOL_ABS, TOL_REL, VerificationReport, _plain, beta_sweep, check_theorem_1, check_theorem_2

EXIT_OK, EXIT_VIOLATION, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2, 3
log = logging.getLogger("robin_annulus")


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated command configuration; embedded verbatim in every output."""

    command: str
    p: float | None = None
    n: int = 2
    beta: float | None = None
    betas: list | None = None
    r1: float | None = None
    r2: float | None = None
    domain: str | None = None
    h: float | None = None
    mode: str | None = None
    theorem: str | None = None
    tol_rel: float = TOL_REL
    tol_abs: float = TOL_ABS
    seed: int = 0
    threads: int = 1
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.p is not None and not self.p > 1:
            raise InputError("p must exceed 1")
        if self.beta is not None and self.beta == 0:
            raise InputError("beta must be nonzero")
        if self.r1 is not None or self.r2 is not None:
            if self.r1 is None or self.r2 is None:
                raise InputError("both --r1 and --r2 are required")
            if not (0 <= self.r1 < self.r2):
                raise InputError(f"need 0 <= r1 < r2 (got r1={self.r1}, r2={self.r2})")
        if self.h is not None and not self.h > 0:
            raise InputError("h must be positive")
        if self.n < 2:
            raise InputError("n must be at least 2")
        if self.threads < 1:
            raise InputError("threads must be at least 1")

    def provenance(self) -> dict:
        return {"config": asdict(self), "tool": "robin-annulus", "version": __version__}


def _annulus(cfg: RunConfig) -> AnnulusSpec:
    return AnnulusSpec(cfg.n, cfg.r1, cfg.r2)


def _load_domain(spec: str):
    if spec is None:
        raise InputError("--domain is required")
    p = Path(spec)
    if p.suffix == ".dom" or p.exists():
        return read_domain(p)
    try:
        return domains.load(spec)
    except KeyError as exc:
        raise InputError(str(exc)) from None


def _emit(cfg: RunConfig, payload: dict) -> None:
    text = json.dumps(_plain({**cfg.provenance(), **payload}), indent=2, sort_keys=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_eig_annulus(cfg: RunConfig) -> int:
    params = ProblemParams(cfg.p, cfg.n, cfg.beta)
    A = _annulus(cfg)
    prof = first_eigenvalue_radial(params, A)
    res = {"lambda": prof.lam, "residual": prof.residual, "J0_profile": rayleigh_radial(params, A, prof),
           "backends": {"shooting": prof.lam}}
    code = EXIT_OK
    if params.p == 2 and params.beta > 0:
        for variant in ("derived", "transcribed"):
            root = first_root_p2(cfg.n, cfg.beta, A, variant)
            res["backends"][f"bessel_{variant}"] = root
            res[f"delta_{variant}"] = None if root is None else abs(root - prof.lam) / abs(prof.lam)
        if res["delta_derived"] is None or res["delta_derived"] > 1e-6:
            res["alarm"] = "derived Bessel root disagrees with shooting"
            code = EXIT_SOLVER
    if cfg.extra.get("profile"):
        prof.write(cfg.extra["profile"], str(cfg.extra["profile"]) + ".json")
    _emit(cfg, res)
    return code


def cmd_torsion_annulus(cfg: RunConfig) -> int:
    params = ProblemParams(cfg.p, cfg.n, cfg.beta)
    if params.beta <= 0:
        raise InputError("torsion needs beta > 0")
    A = _annulus(cfg)
    prof, T = torsion_radial(params, A)
    res = {"T": T, "K0_profile": rayleigh_radial(params, A, prof, "K"),
           "energy_identity_gap": prof.meta.get("energy_identity_gap")}
    if cfg.extra.get("profile"):
        prof.write(cfg.extra["profile"], str(cfg.extra["profile"]) + ".json")
    _emit(cfg, res)
    return EXIT_OK


def _domain_field(cfg: RunConfig, solver) -> int:
    dom = _load_domain(cfg.domain)
    params = ProblemParams(cfg.p, 2, cfg.beta)
    mesh = generate_mesh(dom, cfg.h)
    f = solver(params, mesh)
    if cfg.extra.get("field"):
        f.write(cfg.extra["field"], str(cfg.extra["field"]) + ".json")
    ann = matched_annulus_for(dom)
    _emit(cfg, {"fem": f.meta, "matched_annulus": {"r1": ann.r1, "r2": ann.r2}, "area": dom.area})
    return EXIT_OK


def cmd_eig_domain(cfg: RunConfig) -> int:
    return _domain_field(cfg, eigen_fem)


def cmd_torsion_domain(cfg: RunConfig) -> int:
    if cfg.beta <= 0:
        raise InputError("torsion needs beta > 0")
    return _domain_field(cfg, torsion_fem)


def cmd_verify(cfg: RunConfig) -> int:
    dom = _load_domain(cfg.domain)
    params = ProblemParams(cfg.p, 2, cfg.beta)
    which = cfg.theorem or ("both" if cfg.beta > 0 else "1")
    if which in ("2", "both") and cfg.beta <= 0:
        raise InputError("the torsion comparison needs beta > 0")
    mesh = generate_mesh(dom, cfg.h)
    reports: list[VerificationReport] = []
    if which in ("1", "both"):
        reports.append(check_theorem_1(dom, params, cfg.h, cfg.tol_rel, cfg.tol_abs, mesh=mesh))
    if which in ("2", "both"):
        reports.append(check_theorem_2(dom, params, cfg.h, cfg.tol_rel, cfg.tol_abs, mesh=mesh))
    if cfg.extra.get("csv"):
        for r in reports:
            r.write(Path(cfg.extra["csv"]).with_suffix(f".{r.kind}.json"), Path(cfg.extra["csv"]).with_suffix(f".{r.kind}.csv"))
    _emit(cfg, {"reports": [r.to_dict() for r in reports], "passed": all(r.passed for r in reports)})
    for r in reports:
        status = "PASS" if r.passed else ("INCOMPLETE" if not r.complete else "FAIL")
        log.info("%s: %s", r.kind, status)
    if any(not r.complete for r in reports):
        return EXIT_SOLVER
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VIOLATION


def _sweep_point(args):
    target, p, beta, mode, h = args
    return beta_sweep(target, p, [beta], mode, h=h)


def parse_grid(text: str) -> list[float]:
    """'a:b:k' (k evenly spaced points) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, k = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(k))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"cannot parse beta grid {text!r}") from None


def cmd_sweep(cfg: RunConfig) -> int:
    betas = cfg.betas or []
    if not betas:
        raise InputError("empty beta grid")
    if any(b == 0 for b in betas):
        raise InputError("beta grid contains 0 (beta must be nonzero)")
    if min(betas) < 0 < max(betas):
        raise InputError("beta grid must not change sign")
    mode = cfg.mode or "eigen"
    target = _annulus(cfg) if cfg.r1 is not None else _load_domain(cfg.domain)
    if cfg.threads > 1 and len(betas) > 1 and isinstance(target, AnnulusSpec):
        with ProcessPoolExecutor(cfg.threads) as pool:
            parts = list(pool.map(_sweep_point, [(target, cfg.p, b, mode, cfg.h) for b in betas]))
        from .verify import SweepTable, sweep_flags
        vals = np.array([t.values[0] for t in parts])
        ders = None if parts[0].derivative is None else np.array([t.derivative[0] for t in parts])
        table = SweepTable(mode, np.array(betas), vals, ders, sweep_flags(np.array(betas), vals), parts[0].inputs)
    else:
        table = beta_sweep(target, cfg.p, betas, mode, h=cfg.h)
    if cfg.extra.get("csv"):
        Path(cfg.extra["csv"]).write_text(table.to_csv())
    payload = json.loads(table.to_json())
    _emit(cfg, payload)
    return EXIT_OK if table.flags["non_decreasing"] and table.flags["concave"] else EXIT_VIOLATION


def cmd_geometry(cfg: RunConfig) -> int:
    dom = _load_domain(cfg.domain)
    q = quermass(dom.outer)
    offsets = cfg.extra.get("offsets") or []
    inner = []
    for t in offsets:
        body = inner_parallel(dom.outer, t)
        inner.append({"t": t, "empty": body is None, "area": 0.0 if body is None else body.area,
                      "perimeter": 0.0 if body is None else body.perimeter})
    outer = [{"rho": r, "area": a, "perimeter": per} for r in offsets for a, per in [outer_parallel(dom.outer, r)]]
    ann = matched_annulus_for(dom)
    _emit(cfg, {"area": dom.area, "outer_area": dom.outer.area, "outer_perimeter": dom.outer_perimeter,
                "inradius": dom.outer.inradius, "diameter": dom.outer.diameter, "quermass": list(q.W),
                "af_chain_holds": q.af_chain_holds(), "matched_annulus": {"r1": ann.r1, "r2": ann.r2},
                "inner_parallel": inner, "outer_parallel": outer})
    return EXIT_OK


def cmd_mesh(cfg: RunConfig) -> int:
    if cfg.extra.get("inspect"):
        mesh = read_mesh(cfg.extra["inspect"])
    else:
        mesh = generate_mesh(_load_domain(cfg.domain), cfg.h)
        if cfg.extra.get("mesh_out"):
            mesh.write(cfg.extra["mesh_out"])
    ang = mesh.min_angles()
    _emit(cfg, {"nodes": mesh.n_nodes, "triangles": mesh.n_triangles, "area": mesh.area(),
                "min_angle_deg": float(ang.min()), "outer_loops": len(mesh.boundary_loops(0)),
                "inner_loops": len(mesh.boundary_loops(1)) if (mesh.edge_tags == 1).any() else 0,
                "euler_characteristic": mesh.euler_characteristic()})
    return EXIT_OK


COMMANDS = {
    "eig-annulus": cmd_eig_annulus, "torsion-annulus": cmd_torsion_annulus, "eig-domain": cmd_eig_domain,
    "torsion-domain": cmd_torsion_domain, "verify": cmd_verify, "sweep": cmd_sweep,
    "geometry": cmd_geometry, "mesh": cmd_mesh,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="also write the JSON result to this file")
    common.add_argument("--tol-rel", type=float, default=TOL_REL)
    common.add_argument("--tol-abs", type=float, default=TOL_ABS)
    common.add_argument("--seed", type=int, default=0, help="recorded for provenance; all solvers are deterministic")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument("--p", type=float, required=True)
    problem.add_argument("--beta", type=float, required=True)

    radii = argparse.ArgumentParser(add_help=False)
    radii.add_argument("--n", type=int, default=2)
    radii.add_argument("--r1", type=float, required=True)
    radii.add_argument("--r2", type=float, required=True)

    dom = argparse.ArgumentParser(add_help=False)
    dom.add_argument("--domain", required=True, help="domain file (.dom) or bundled name: " + ", ".join(domains.names()))

    parser = _Parser(prog="robin-annulus", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eig-annulus", parents=[common, problem, radii], help="first eigenvalue on an annulus")
    s.add_argument("--profile", help="write the radial profile CSV here")
    s = sub.add_parser("torsion-annulus", parents=[common, problem, radii], help="torsional rigidity on an annulus")
    s.add_argument("--profile")
    s = sub.add_parser("eig-domain", parents=[common, problem, dom], help="FEM eigenvalue on a domain")
    s.add_argument("--h", type=float, default=0.02)
    s.add_argument("--field", help="write the nodal field CSV here")
    s = sub.add_parser("torsion-domain", parents=[common, problem, dom], help="FEM torsion on a domain")
    s.add_argument("--h", type=float, default=0.02)
    s.add_argument("--field")
    s = sub.add_parser("verify", parents=[common, problem, dom], help="certify the annulus comparison on a domain")
    s.add_argument("--h", type=float, default=0.02)
    s.add_argument("--theorem", choices=["1", "2", "both"])
    s.add_argument("--csv", help="base path for per-report JSON and level CSV files")
    s = sub.add_parser("sweep", parents=[common], help="beta sweep with monotonicity/concavity flags")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--betas", required=True, help="'a:b:k' or comma list")
    s.add_argument("--mode", choices=["eigen", "torsion"], default="eigen")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--r1", type=float)
    s.add_argument("--r2", type=float)
    s.add_argument("--domain")
    s.add_argument("--h", type=float, default=0.04)
    s.add_argument("--csv", help="write the sweep table CSV here")
    s = sub.add_parser("geometry", parents=[common, dom], help="quermassintegrals and parallel bodies")
    s.add_argument("--offsets", default="", help="comma list of offsets for parallel-body reports")
    s = sub.add_parser("mesh", parents=[common], help="generate or inspect a mesh")
    s.add_argument("--domain")
    s.add_argument("--h", type=float, default=0.05)
    s.add_argument("--mesh-out")
    s.add_argument("--inspect", help="mesh file to inspect instead of generating")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    g = lambda k, d=None: getattr(ns, k, d)  # noqa: E731
    extra = {k: g(k) for k in ("profile", "field", "csv", "mesh_out", "inspect") if g(k)}
    if ns.command == "geometry":
        extra["offsets"] = parse_grid(ns.offsets) if ns.offsets else []
    cfg = RunConfig(command=ns.command, p=g("p"), n=g("n", 2) or 2, beta=g("beta"),
                    betas=parse_grid(ns.betas) if g("betas") else None, r1=g("r1"), r2=g("r2"),
                    domain=g("domain"), h=g("h"), mode=g("mode"), theorem=g("theorem"), tol_rel=ns.tol_rel,
                    tol_abs=ns.tol_abs, seed=ns.seed, threads=ns.threads, out=ns.out, extra=extra)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(ns)
        if ns.command == "mesh" and not cfg.extra.get("inspect") and not cfg.domain:
            raise InputError("mesh needs --domain or --inspect")
        return COMMANDS[ns.command](cfg)
    except (InputError, DomainParseError, GeometryError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (RadialError, MeshError, CrossCheckAlarm) as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
