"""Command-line entry point: ``cgl-lab <command> [options]``.

Exit codes: 0 success, 1 I/O or schema error, 2 a checked threshold failed,
3 a solver failed (no convergence, loss of hyperbolicity).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import boundary, fields_io, fvm1d, modes, sampling, symmetrizer, vacuum
from .errors import (BasicStateViolation, HyperbolicityLoss, NotPositiveDefinite,
                     SolverFailure)
from .geometry import SlabGrid, build_cutoff, lift
from .hyperbolicity import Thresholds, certify
from .state import PlasmaState

EXIT_OK, EXIT_SCHEMA, EXIT_THRESHOLD, EXIT_SOLVER = 0, 1, 2, 3
SYM_TOL = 1e-10
PRIMARY_NAMES = ("rho", "v1", "v2", "v3", "H1", "H2", "H3", "p_par", "p_perp")


class SchemaError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the schema code rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCHEMA, f"{self.prog}: error: {message}\n")


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON ({exc})") from exc


def _config(args) -> dict:
    if args.config is None:
        raise SchemaError(f"'{args.command}' needs --config")
    cfg = _load_json(args.config)
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object")
    return cfg


def _state(obj, exact=False) -> PlasmaState:
    if isinstance(obj, (str, Path)):
        obj = _load_json(obj)
    if not isinstance(obj, dict):
        raise SchemaError("state must be a JSON object")
    missing = {"rho", "v", "H", "p_par", "p_perp"} - set(obj)
    if missing:
        raise SchemaError(f"state is missing {sorted(missing)}")
    return PlasmaState.from_dict(obj, exact=exact)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _emit(summary: dict) -> None:
    print(json.dumps(summary, indent=2, sort_keys=True, default=_jsonable))


# ---------------------------------------------------------------------------
# commands

def cmd_certify(args) -> int:
    path = args.state or (_config(args).get("state") if args.config else None)
    if path is None:
        raise SchemaError("certify needs a state file")
    U = _state(path)
    thr = Thresholds.uniform(args.tolerance) if args.tolerance else Thresholds()
    rep = certify(U, thr)
    d = rep.to_dict()
    _dump(d, _out(args) / "report.json")
    _emit({"all_passed": d["all_passed"], "firehose": d["firehose"], "mirror": d["mirror"],
           "symmetrizer_pd": d["symmetrizer_pd"]})
    return EXIT_OK if rep.all_passed else EXIT_THRESHOLD


def _matrix_rows(M):
    return [[(str(x) if isinstance(x, Fraction) else float(x)) for x in row] for row in M]


def cmd_symcheck(args) -> int:
    tol = args.tolerance or SYM_TOL
    rng = np.random.default_rng(args.seed)
    if args.random:
        if args.exact:
            states = sampling.random_rational(rng, args.random)
        else:
            states = [PlasmaState.from_vector(u) for u in sampling.random_hyperbolic(rng, args.random)]
    elif args.state:
        states = [_state(args.state, exact=args.exact)]
    else:
        raise SchemaError("symcheck needs a state file or --random N")
    results, failed = [], False
    for i, U in enumerate(states):
        res, scales = symmetrizer.consistency_identity(U, with_scale=True)
        pd = symmetrizer.a0_closed_form(U) if U.exact else symmetrizer.a0_positive_definite(U)
        rel = [float(r) / s for r, s in zip(res, scales)]
        entry = {"index": i, "residuals": [str(r) if U.exact else float(r) for r in res],
                 "relative": rel, "a0_positive_definite": bool(pd), "exact": U.exact}
        if args.dump:
            sym = symmetrizer.assemble_sym(U)
            entry["matrices"] = {"A0": _matrix_rows(sym.A0),
                                 **{f"A{j + 1}": _matrix_rows(sym.A[j]) for j in range(3)},
                                 "J": _matrix_rows(symmetrizer.change_matrix(U))}
        results.append(entry)
        if U.exact:
            failed |= any(r != 0 for r in res)
        else:
            failed |= any(r > tol for r in rel)
        if args.require_pd and not pd:
            failed = True
    _dump({"states": results, "tolerance": tol}, _out(args) / "residuals.json")
    worst = max((max(e["relative"]) for e in results), default=0.0)
    _emit({"states": len(results), "max_relative_residual": worst,
           "all_positive_definite": all(e["a0_positive_definite"] for e in results),
           "passed": not failed})
    return EXIT_THRESHOLD if failed else EXIT_OK


def cmd_dispersion(args) -> int:
    cfg = _config(args)
    U = _state(cfg["state"])
    if "k" in cfg:
        ks = np.asarray(cfg["k"], dtype=float).reshape(-1, 3)
    else:
        dirs = modes.fibonacci_sphere(int(cfg.get("directions", 64)))
        mags = np.asarray(cfg.get("kmag", [1.0]), dtype=float)
        ks = np.concatenate([m * dirs for m in mags])
    rows, omegas = [], []
    for k in ks:
        r = modes.dispersion(U, k)
        omegas.append(r.eigenvalues)
        rows.append([*k, *r.eigenvalues.real, *r.eigenvalues.imag])
    header = ["k1", "k2", "k3"] + [f"re_w{i}" for i in range(1, 10)] + [f"im_w{i}" for i in range(1, 10)]
    out = _out(args)
    fields_io.write_table(out / "dispersion.csv", header, rows)
    omegas = np.array(omegas)
    growth = float(np.max(omegas.imag)) if len(omegas) else 0.0
    if args.plot:
        from .plotting import plot_dispersion

        plot_dispersion(ks, omegas, out / "dispersion.png")
    _emit({"wave_vectors": len(ks), "max_growth_rate": growth})
    return EXIT_OK


def cmd_speeds(args) -> int:
    cfg = _config(args)
    U = _state(cfg["state"])
    plane = np.asarray(cfg.get("plane", [[1, 0, 0], [0, 1, 0]]), dtype=float)
    if plane.shape != (2, 3):
        raise SchemaError("plane must be two 3-vectors")
    e1 = plane[0] / np.linalg.norm(plane[0])
    e2 = plane[1] - (plane[1] @ e1) * e1
    e2 /= np.linalg.norm(e2)
    theta = np.linspace(0.0, np.pi, int(cfg.get("n", 181)))
    speeds = np.array([symmetrizer.char_speeds(U, np.cos(t) * e1 + np.sin(t) * e2) for t in theta])
    out = _out(args)
    fields_io.write_table(out / "speeds.csv", ["theta"] + [f"s{i}" for i in range(1, 10)],
                          [[t, *s] for t, s in zip(theta, speeds)])
    if args.plot:
        from .plotting import plot_speeds

        plot_speeds(theta, speeds, out / "speeds.png")
    _emit({"angles": len(theta), "max_speed": float(np.max(np.abs(speeds)))})
    return EXIT_OK


def _height(cfg, n2, n3):
    cfg_phi = cfg.get("phi")
    if cfg_phi is None:
        return np.zeros((n2, n3)), None
    x2, x3 = np.meshgrid(np.arange(n2) / n2, np.arange(n3) / n3, indexing="ij")
    a = float(cfg_phi.get("amplitude", 0.0))
    m2, m3 = int(cfg_phi.get("m2", 1)), int(cfg_phi.get("m3", 0))
    arg = 2.0 * np.pi * (m2 * x2 + m3 * x3)
    phi = a * np.sin(arg)
    dphi = (2.0 * np.pi * m2 * a * np.cos(arg), 2.0 * np.pi * m3 * a * np.cos(arg))
    return phi, dphi


def cmd_vacuum(args) -> int:
    cfg = _config(args)
    jc = vacuum.SurfaceCurrent.from_dict(cfg.get("jc", {"modes": []}))
    n1, n2, n3 = (int(n) for n in cfg.get("grid", [16, 16, 16]))
    grid = SlabGrid(n1, n2, n3, side="-")
    solver = cfg.get("solver", "flat")
    if solver == "flat":
        sol = vacuum.solve_flat(jc, grid)
        ok = all(v <= (args.tolerance or 1e-10) for v in sol.report.values())
    elif solver == "curved":
        phi, dphi = _height(cfg, n2, n3)
        g = lift(phi, build_cutoff(float(np.max(np.abs(phi)))), dphi=dphi)
        sol = vacuum.solve_curved(g, jc, grid)
        ok = True
    else:
        raise SchemaError(f"unknown solver {solver!r}")
    out = _out(args)
    fields_io.write_slab_csv(out / "h.csv", sol.as_slab_field(), names=["h1", "h2", "h3"])
    report = dict(sol.report, solver=solver, max_abs_h=float(np.max(np.abs(sol.h))) if sol.h.size else 0.0)
    _dump(report, out / "report.json")
    if args.plot:
        from .plotting import plot_vacuum_slice

        plot_vacuum_slice(grid.x1, grid.x2, sol.h[:, :, 0, :], out / "h_slice.png")
    _emit(report)
    return EXIT_OK if ok else EXIT_THRESHOLD


def cmd_simulate1d(args) -> int:
    cfg = fvm1d.RunConfig.from_dict(_config(args))
    diag, final = fvm1d.run(cfg)
    out = _out(args)
    (out / "diagnostics.csv").write_text(diag.to_csv())
    u = final.primitive()
    fields_io.write_table(out / "final_state.csv", ["x", *PRIMARY_NAMES],
                          [[x, *row] for x, row in zip(final.x, u)])
    ok = diag.conservation_ok()
    summary = {"steps": diag.steps, "t": final.t, "drifts": diag.drifts(),
               "energy_drift": diag.energy_drift(), "conservation_ok": ok}
    _dump(summary, out / "summary.json")
    if args.plot:
        from .plotting import plot_profile

        plot_profile(final.x, u, PRIMARY_NAMES, out / "final_state.png")
    _emit(summary)
    return EXIT_OK if ok else EXIT_THRESHOLD


def _trace(value, n2, n3):
    if isinstance(value, str):
        _, data = fields_io.read_table(value)
        idx = data[:, :2].astype(int)
        arr = np.zeros((n2, n3, 3))
        arr[idx[:, 0], idx[:, 1]] = data[:, -3:]
        return arr
    vec = np.asarray(value, dtype=float)
    if vec.shape != (3,):
        raise SchemaError("trace must be a 3-vector or a CSV path")
    return np.broadcast_to(vec, (n2, n3, 3))


def cmd_interface_check(args) -> int:
    cfg = _config(args)
    n2, n3 = int(cfg.get("n2", 8)), int(cfg.get("n3", 8))
    H = _trace(cfg["H"], n2, n3)
    h = _trace(cfg["h"], n2, n3)
    delta0 = float(cfg.get("delta0", args.tolerance or Thresholds().delta[0]))
    res = vacuum.non_collinearity(H, h)
    report = {"min_cross": res.value, "location": list(res.location), "delta0": delta0,
              "passed": res.satisfied(delta0)}
    _dump(report, _out(args) / "report.json")
    _emit(report)
    return EXIT_OK if report["passed"] else EXIT_THRESHOLD


def _basic_state_from_dict(d) -> boundary.BasicState:
    keys = ("U", "dU1", "h", "dh1", "phi", "phi_t", "v1_plus", "H1_plus", "h_minus", "jc")
    missing = [k for k in keys if k not in d]
    if missing:
        raise SchemaError(f"basic state is missing {missing}")
    return boundary.BasicState(**{k: np.asarray(d[k], dtype=float) for k in keys})


def cmd_boundary_check(args) -> int:
    cfg = _config(args) if args.config else {}
    rng = np.random.default_rng(args.seed)
    n2, n3 = int(cfg.get("n2", 8)), int(cfg.get("n3", 8))
    out = _out(args)
    if "basic_state" in cfg:
        states = [_basic_state_from_dict(_load_json(cfg["basic_state"]))]
    else:
        states = [boundary.random_basic_state(rng, n2, n3) for _ in range(int(cfg.get("samples", 20)))]
    theta = float(cfg.get("theta", 1e-3))
    qf_worst = lin_worst = red_worst = 0.0
    try:
        for bs in states:
            bs.verify()
            full, red = boundary.boundary_matrix(bs, verify=False)
            red_worst = max(red_worst, float(np.max(np.abs(full - red))))
            V = rng.normal(size=bs.phi.shape + (9,))
            form, ref = boundary.quadratic_form(bs, V, verify=False, tol=np.inf)
            scale = np.einsum("...i,...ij,...j->...", np.abs(V), np.abs(full), np.abs(V))
            qf_worst = max(qf_worst, float(np.max(np.abs(form - ref) / scale)))
            pert = boundary.random_perturbation(rng, bs.phi.shape)
            chk = boundary.linearization_check(bs, pert, theta)
            chk.pop("h_normal")
            lin_worst = max(lin_worst, max(chk.values()))
    except BasicStateViolation as exc:
        report = {"passed": False, "violations": exc.violations, "message": str(exc)}
        _dump(report, out / "report.json")
        _emit(report)
        return EXIT_THRESHOLD
    lin_tol = args.tolerance or 1e-6
    report = {"samples": len(states), "quadratic_form_rel": qf_worst,
              "full_minus_reduced": red_worst, "linearization": lin_worst,
              "passed": qf_worst <= boundary.QF_TOL and lin_worst <= lin_tol and red_worst <= 1e-12}
    _dump(report, out / "report.json")
    _emit(report)
    return EXIT_OK if report["passed"] else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=0, help="seed for random sweeps")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--tolerance", type=float, default=None, help="override the pass threshold")
    common.add_argument("--exact", action="store_true", help="rational arithmetic where supported")
    common.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")

    p = _Parser(prog="cgl-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("certify", parents=[common], help="hyperbolicity certificate of a state")
    s.add_argument("state", nargs="?", help="state JSON")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("symcheck", parents=[common], help="symmetrizer consistency identity")
    s.add_argument("state", nargs="?", help="state JSON")
    s.add_argument("--random", type=int, default=0, metavar="N", help="check N random states")
    s.add_argument("--require-pd", action="store_true", help="fail unless A0 is positive definite")
    s.add_argument("--dump", action="store_true", help="include the matrices in the output")
    s.set_defaults(func=cmd_symcheck)

    for name, func, text in (
        ("dispersion", cmd_dispersion, "plane-wave dispersion table"),
        ("speeds", cmd_speeds, "characteristic speeds over a plane of directions"),
        ("vacuum", cmd_vacuum, "vacuum div-curl solve"),
        ("simulate1d", cmd_simulate1d, "1D finite-volume run"),
        ("interface-check", cmd_interface_check, "non-collinearity of interface traces"),
        ("boundary-check", cmd_boundary_check, "boundary-operator identities"),
    ):
        s = sub.add_parser(name, parents=[common], help=text)
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SolverFailure, HyperbolicityLoss) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except NotPositiveDefinite as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
