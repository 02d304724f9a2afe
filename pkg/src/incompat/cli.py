"""Command-line front end.

Subcommands: ``compute`` (monotones of a pair read from JSON), ``scan``
(noise robustness of qubit pairs over a (theta, b) grid), ``circuit``,
``game`` and ``qpdemo``. Reports are JSON with ``"schema": 1`` or CSV with
a header row. The exit status is 0 exactly when every internal consistency
check passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .linalg import ValidationError, is_projection
from .povm import DeformationMatrix, effect, qubit_projector
from .qubit import imax, inoise_qubit, theta_star

SCHEMA = 1
MAX_TOL = 1e-3


class InputError(ValueError):
    pass


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    # json writes floats with repr, which round-trips every double exactly
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    try:
        d = int(obj["dim"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros((d, d))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed matrix object: {exc}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise InputError(f"matrix entries do not match dim {d}")
    return re + 1j * im


def load_pair(path: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read pair file {path}: {exc}") from exc
    if not isinstance(data, dict) or "M" not in data or "N" not in data:
        raise InputError("pair file needs keys 'M' and 'N'")
    m, n = matrix_from_json(data["M"]), matrix_from_json(data["N"])
    if m.shape != n.shape:
        raise InputError(f"dimension mismatch: {m.shape} vs {n.shape}")
    return effect(m), effect(n)


def write_pair(path: str, m, n):
    with open(path, "w") as fh:
        json.dump({"schema": SCHEMA, "M": matrix_to_json(m), "N": matrix_to_json(n)}, fh, indent=1)


def _emit(args, report: dict, rows: list[dict] | None = None):
    if args.format == "csv":
        rows = rows if rows is not None else [_flatten(report)]
        buf = io.StringIO()
        fields = list(rows[0].keys()) if rows else []
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
        text = buf.getvalue()
    else:
        report = {"schema": SCHEMA, **report}
        text = json.dumps(report, indent=2, default=_json_default) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _flatten(report: dict) -> dict:
    out = {}
    for k, v in report.items():
        if isinstance(v, (list, tuple)):
            out[k] = ";".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)
                              for x in v)
        elif isinstance(v, dict):
            for k2, v2 in _flatten(v).items():
                out[f"{k}.{k2}"] = v2
        else:
            out[k] = v
    return out


def _deformation(args) -> DeformationMatrix:
    if args.a is not None:
        return DeformationMatrix(*args.a)
    return DeformationMatrix.from_bias(args.bias)


def _require_seed(args):
    if args.seed is None:
        raise InputError(f"'{args.command}' is randomized and requires --seed")


def cmd_compute(args) -> int:
    from .sdp import IncompatProgram, certify, solve_incompat, solve_steer
    from .spectral import angle_spectrum, inoise_from_angles

    _require_seed(args)
    m, n = load_pair(args.pair)
    a = _deformation(args)
    prog = IncompatProgram(m, n, a, args.tol)
    res = solve_incompat(prog, seed=args.seed, max_iter=args.max_iter)
    x = a.total * res.mu_star
    i_noise = x / (1 + x)
    checks = {}
    cert = certify(res, prog)
    checks["certificate"] = cert.ok
    report = {
        "command": "compute",
        "dim": prog.dim,
        "a": [a.a00, a.a01, a.a11],
        "bias": a.bias,
        "I_a": res.mu_star,
        "I_noise": i_noise,
        "dual_lower": res.dual_lower,
        "gap": res.gap,
        "status": res.status,
        "I_steer": solve_steer(m, n, args.tol),
    }
    if is_projection(m) and is_projection(n):
        spec = angle_spectrum(m, n, method="lapack")
        report["angles"] = spec.angles.tolist()
        spectral = inoise_from_angles(spec, a.bias)
        report["I_noise_spectral"] = spectral
        checks["spectral_agreement"] = abs(spectral - i_noise) <= 1e-5
    report["violations"] = cert.violations
    report["checks"] = checks
    _emit(args, report)
    return 0 if all(checks.values()) else 1


def _scan_point(job):
    i, j, theta, b, atol = job
    v = inoise_qubit(theta, b)
    top = imax(b)
    return {"i": i, "j": j, "theta": theta, "b": b, "I_noise": v, "imax": top,
            "theta_star": theta_star(b), "attains_max": abs(v - top) <= atol}


def _grid(spec: list[float], name: str) -> list[float]:
    lo, hi, count = spec
    if count < 1 or not float(count).is_integer():
        raise InputError(f"{name} grid needs a positive integer count, got {count}")
    return np.linspace(lo, hi, int(count)).tolist()


def cmd_scan(args) -> int:
    thetas = args.thetas if args.thetas else _grid(args.theta_range, "theta")
    bs = args.bs if args.bs else _grid(args.b_range, "b")
    for t in thetas:
        if not 0 < t < math.pi:
            raise InputError(f"theta must lie in (0, pi), got {t}")
    for b in bs:
        if not -1 <= b <= 1:
            raise InputError(f"b must lie in [-1, 1], got {b}")
    jobs = [(i, j, t, b, args.atol) for i, t in enumerate(thetas) for j, b in enumerate(bs)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_scan_point, jobs, chunksize=16))
    else:
        rows = [_scan_point(j) for j in jobs]
    rows.sort(key=lambda r: (r["i"], r["j"]))
    for r in rows:
        del r["i"], r["j"]
    # a point can only exceed imax through a numerical defect
    ok = all(r["I_noise"] <= r["imax"] + 1e-9 for r in rows)
    _emit(args, {"command": "scan", "rows": rows, "checks": {"bounded_by_imax": ok}}, rows)
    return 0 if ok else 1


def cmd_circuit(args) -> int:
    from .circuit import CircuitSpec, ConsistencyError, circuit_incompat, circuit_spectrum, maximal_bias_points

    thetas = args.thetas if args.thetas else CircuitSpec.uniform(args.n).thetas
    spec = CircuitSpec(args.n, tuple(thetas))
    bs = args.bs if args.bs else _grid(args.b_range, "b")
    rows = []
    consistent = True
    for b in bs:
        try:
            v, spectral, blockwise = circuit_incompat(spec, b, detail=True)
            agree = True
        except ConsistencyError:
            consistent = agree = False
            v = spectral = blockwise = float("nan")
        rows.append({"b": b, "I_noise": v, "spectral": spectral, "blockwise": blockwise,
                     "imax": imax(b), "agree": agree})
    points = maximal_bias_points(spec)
    attain = []
    for pb in points:
        v = circuit_incompat(spec, pb)
        attain.append(abs(v - imax(pb)) <= 1e-8)
    report = {
        "command": "circuit",
        "n": spec.n,
        "thetas": list(spec.thetas),
        "angles": circuit_spectrum(spec).angles.tolist(),
        "maximal_bias_points": points,
        "rows": rows,
        "checks": {"spectral_equals_blockwise": consistent,
                   "attains_imax_at_bias_points": all(attain)},
    }
    _emit(args, report, rows)
    return 0 if all(report["checks"].values()) else 1


def cmd_game(args) -> int:
    from . import game

    sc = args.scenario
    checks = {}
    if sc == "controlled-bias":
        if args.pair:
            m, n = load_pair(args.pair)
        else:
            m, n = qubit_projector(0.0), qubit_projector(math.pi / 2)
        r = game.scenario_controlled_bias(m, n)
        out = {"j_value": r.j_value, "qp_optimal_theta": r.qp_optimal_theta,
               "threshold": r.threshold, "pair_threshold": r.pair_threshold}
        if args.lam is not None:
            out["lr_wins"] = r.lr_wins(args.lam)
    elif sc == "known-bias":
        r = game.scenario_known_bias(args.b)
        out = {"b": r.b, "qp_optimal_theta": r.qp_optimal_theta, "threshold": r.threshold}
    elif sc == "qp-bias":
        r = game.scenario_qp_bias()
        out = {"b_choice": r.b_choice, "threshold": r.threshold, "note": r.note}
        checks["threshold_is_imax"] = r.threshold == imax(r.b_choice)
    elif sc == "unknown-bias":
        if args.lam is None:
            raise InputError("unknown-bias needs --lam")
        r = game.scenario_unknown_bias(args.lam, args.prior)
        out = {"lambda_lr": r.lambda_lr, "qp_optimal_theta": r.qp_optimal_theta,
               "p_qp_win": r.p_qp_win, "prior": r.prior}
        if args.prior == "uniform":
            checks["inverse_roundtrip"] = abs(r.p_qp_win - game.p_qp_win_inverse_check(args.lam)) <= 1e-8
    else:
        r = game.scenario_unknown_both(args.theta, args.prior, args.tol)
        out = {"theta": r.theta, "p_qp_win": r.p_qp_win, "p_max": r.p_max, "prior": r.prior}
        if "closed_form" in r.details:
            out["closed_form"] = r.details["closed_form"]
            checks["closed_form"] = abs(r.p_max - r.details["closed_form"]) <= 1e-6
        if args.optimize:
            th, p = game.optimal_theta_unknown_both(args.prior)
            out["optimal_theta"], out["optimal_p"] = th, p
            checks["max_dominates"] = p < r.p_max
    report = {"command": "game", "scenario": sc, **out, "checks": checks}
    _emit(args, report)
    return 0 if all(checks.values()) else 1


def cmd_qpdemo(args) -> int:
    from .spectral import angle_spectrum, max_deficit, qp_binarization

    bs = np.linspace(-1, 1, args.b_count)
    rows = []
    for size in args.sizes:
        q, p = qp_binarization(size)
        spec = angle_spectrum(q, p, method=args.eig)
        deficit, arg = max_deficit(spec, bs)
        rows.append({"grid_size": size, "angles": len(spec), "max_gap": spec.max_gap(),
                     "deficit": deficit, "argmax_b": arg})
    ok = all(rows[k + 1]["deficit"] <= rows[k]["deficit"] for k in range(len(rows) - 1))
    _emit(args, {"command": "qpdemo", "rows": rows, "checks": {"deficit_non_increasing": ok}}, rows)
    return 0 if ok else 1


def _tol(text: str) -> float:
    v = float(text)
    if not 0 < v <= MAX_TOL:
        raise argparse.ArgumentTypeError(f"tol must lie in (0, {MAX_TOL}]")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_tol, default=1e-7)
    common.add_argument("--max-iter", type=int, default=200)
    common.add_argument("--seed", type=_seed, default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="incompat", description="Incompatibility monotones for binary measurements.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", parents=[common], help="monotones of a pair from a JSON file")
    c.add_argument("pair")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--a", type=float, nargs=3, metavar=("A00", "A01", "A11"))
    g.add_argument("--bias", type=float, default=0.0)
    c.set_defaults(func=cmd_compute)

    s = sub.add_parser("scan", parents=[common], help="qubit noise robustness over a (theta, b) grid")
    s.add_argument("--theta-range", type=float, nargs=3, default=[0.05, math.pi - 0.05, 32],
                   metavar=("LO", "HI", "COUNT"))
    s.add_argument("--thetas", type=float, nargs="+")
    s.add_argument("--b-range", type=float, nargs=3, default=[-1.0, 1.0, 21], metavar=("LO", "HI", "COUNT"))
    s.add_argument("--bs", type=float, nargs="+")
    s.add_argument("--atol", type=float, default=1e-6, help="tolerance for the attains-max flag")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_scan)

    ci = sub.add_parser("circuit", parents=[common], help="n-qubit circuit pair report")
    ci.add_argument("--n", type=int, required=True)
    ci.add_argument("--thetas", type=float, nargs="+")
    ci.add_argument("--b-range", type=float, nargs=3, default=[-1.0, 1.0, 21], metavar=("LO", "HI", "COUNT"))
    ci.add_argument("--bs", type=float, nargs="+")
    ci.set_defaults(func=cmd_circuit)

    ga = sub.add_parser("game", parents=[common], help="winning probabilities for a game scenario")
    ga.add_argument("scenario", choices=("controlled-bias", "known-bias", "qp-bias", "unknown-bias",
                                         "unknown-both"))
    ga.add_argument("--lam", type=float)
    ga.add_argument("--b", type=float, default=0.0)
    ga.add_argument("--theta", type=float)
    ga.add_argument("--prior", choices=("uniform", "b-squared"), default="uniform")
    ga.add_argument("--pair")
    ga.add_argument("--optimize", action="store_true", help="also search the best qubit angle")
    ga.set_defaults(func=cmd_game)

    q = sub.add_parser("qpdemo", parents=[common], help="position/momentum half-line binarizations")
    q.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    q.add_argument("--b-count", type=int, default=81)
    q.add_argument("--eig", choices=("jacobi", "lapack"), default="jacobi")
    q.set_defaults(func=cmd_qpdemo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
