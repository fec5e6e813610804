"""Command-line entry point: ``oseen-tp <command> ...``.

Tabular output is CSV, tensors are JSON, fields are ``.tpf``.  The exit
code is 0 iff every pass flag of the command is true.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance
from .asymptotics import FarField, expand_report, expansion_rays, grid_radii, report_csv
from .convolve import CASES, KernelNorms, verify_bounds
from .exceptions import InvalidParameterError, OseenError
from .kernel_tables import load_time_norm_table
from .periodic import gamma_perp_modes, omega, synthesize_gamma_perp
from .solver import PicardOptions, SolveConfig, picard_solve
from .sources import TIME_PROFILES, CompactSource
from .steady import gamma0, grad_gamma0
from .torus import Grid, TorusField, read_tpf, write_tpf
from ._validation import check_lambda, check_positive

log = logging.getLogger("oseen_tp")

DEFAULT_GRID = {"n_time": 32, "n_space": 64, "box_half_length": 40.0}
DEFAULT_FORCE = {
    "kind": "zero",
    "amplitude": 1e-2,
    "radius": 4.0,
    "time_profile": "one_plus_cos",
    "direction": [0.0, 1.0, 0.0],
    "center": [0.0, 0.0, 0.0],
}
DEFAULT_PICARD = {"max_iter": 50, "tol": 1e-10, "damping": 1.0}
TOP_KEYS = {"lambda", "period", "grid", "force", "picard", "seed", "mean_policy"}
FORCE_KINDS = ("zero", "bump")


# ---------------------------------------------------------------------------
# configuration


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise InvalidParameterError(f"duplicate key {k!r} in config")
        out[k] = v
    return out


def _merge(name, given, defaults):
    if not isinstance(given, dict):
        raise InvalidParameterError(f"{name} must be an object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise InvalidParameterError(f"unknown key {name}.{unknown[0]}")
    return {**defaults, **given}


def _finite(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InvalidParameterError(f"{name} must be a finite number, got {v!r}")
    return float(v)


def _profile(spec):
    if isinstance(spec, str):
        if spec not in TIME_PROFILES:
            raise InvalidParameterError(f"force.time_profile must be one of {sorted(TIME_PROFILES)}")
        return dict(TIME_PROFILES[spec])
    if isinstance(spec, dict):
        prof = {}
        for k, c in spec.items():
            try:
                mode = int(k)
            except ValueError:
                raise InvalidParameterError(f"force.time_profile key {k!r} is not an integer") from None
            c = c if isinstance(c, list) else [c, 0.0]
            if len(c) != 2:
                raise InvalidParameterError(f"force.time_profile[{k}] must be a number or [re, im]")
            prof[mode] = complex(_finite("force.time_profile", c[0]), _finite("force.time_profile", c[1]))
        return prof
    raise InvalidParameterError("force.time_profile must be a name or a {mode: [re, im]} object")


@dataclass
class ExperimentConfig:
    lam: float
    period: float
    grid: Grid
    force: dict
    picard: PicardOptions
    seed: int = 0
    mean_policy: str = "subtract"
    data: dict = field(default_factory=dict)

    @property
    def digest(self):
        text = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def solve_config(self, workers=None):
        return SolveConfig(self.lam, self.period, self.grid, self.picard, self.mean_policy, workers)

    def source(self):
        """The forcing as a :class:`CompactSource`, or None for ``kind = zero``."""
        f = self.force
        if f["kind"] == "zero":
            return None
        return CompactSource(
            f["radius"], f["amplitude"], tuple(f["direction"]), tuple(f["center"]),
            _profile(f["time_profile"]), self.period,
        )

    def force_field(self):
        src = self.source()
        if src is None:
            g = self.grid
            return TorusField(g, np.zeros((g.n_time,) + (g.n_space,) * 3 + (3,)))
        return src.sample(self.grid)


def config_from_dict(raw):
    """Validate ``raw`` and fill defaults; errors name the offending key."""
    if not isinstance(raw, dict):
        raise InvalidParameterError("config must be a JSON object")
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        raise InvalidParameterError(f"unknown key {unknown[0]!r}")
    if "lambda" not in raw:
        raise InvalidParameterError("missing key 'lambda'")
    try:
        lam = check_lambda(_finite("lambda", raw["lambda"]))
    except InvalidParameterError as exc:
        raise InvalidParameterError(f"lambda: {exc}") from None
    period = check_positive(_finite("period", raw.get("period", 2 * np.pi)), "period")
    grid = _merge("grid", raw.get("grid", {}), DEFAULT_GRID)
    for k in ("n_time", "n_space"):
        if isinstance(grid[k], bool) or not isinstance(grid[k], int) or grid[k] < 2:
            raise InvalidParameterError(f"grid.{k} must be an integer >= 2")
    grid["box_half_length"] = check_positive(_finite("grid.box_half_length", grid["box_half_length"]), "grid.box_half_length")
    force = _merge("force", raw.get("force", {}), DEFAULT_FORCE)
    if force["kind"] not in FORCE_KINDS:
        raise InvalidParameterError(f"force.kind must be one of {FORCE_KINDS}")
    force["amplitude"] = _finite("force.amplitude", force["amplitude"])
    force["radius"] = check_positive(_finite("force.radius", force["radius"]), "force.radius")
    for k in ("direction", "center"):
        v = force[k]
        if not isinstance(v, list) or len(v) != 3:
            raise InvalidParameterError(f"force.{k} must be a list of 3 numbers")
        force[k] = [_finite(f"force.{k}", c) for c in v]
    _profile(force["time_profile"])
    pic = _merge("picard", raw.get("picard", {}), DEFAULT_PICARD)
    picard = PicardOptions(int(pic["max_iter"]), _finite("picard.tol", pic["tol"]), _finite("picard.damping", pic["damping"]))
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise InvalidParameterError("seed must be an integer")
    policy = raw.get("mean_policy", "subtract")
    data = {
        "lambda": lam, "period": period, "grid": grid, "force": force,
        "picard": {"max_iter": picard.max_iter, "tol": picard.tol, "damping": picard.damping},
        "seed": seed, "mean_policy": policy,
    }
    g = Grid(period, grid["n_time"], grid["n_space"], grid["box_half_length"])
    cfg = ExperimentConfig(lam, period, g, force, picard, seed, policy, data)
    cfg.solve_config()  # validates the mean policy
    return cfg


def parse_config(path):
    """Read a JSON config; duplicate and unknown keys are rejected."""
    path = Path(path)
    if not path.exists():
        raise InvalidParameterError(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text(), object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    command: str
    config_hash: str = ""
    rows: list = field(default_factory=list)
    passed: list = field(default_factory=list)

    @property
    def ok(self):
        return all(self.passed)

    def to_csv(self, fields=None):
        if not self.rows:
            return ""
        fields = fields or list(self.rows[0])
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()


def _floats(text, n=None, name="value"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InvalidParameterError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise InvalidParameterError(f"{name}: expected {n} numbers, got {len(vals)}")
    return vals


def _write(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _tensor_json(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"real": a.real.tolist(), "imag": a.imag.tolist()}
    return a.tolist()


# ---------------------------------------------------------------------------
# commands


def cmd_eval_gamma0(args):
    lam = check_lambda(args.lam)
    x = np.array(_floats(args.point, 3, "--point"))
    out = {"lambda": lam, "point": x.tolist(), "gamma0": gamma0(x, lam).tolist()}
    if args.grad:
        out["grad_gamma0"] = grad_gamma0(x, lam).tolist()
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return Report("eval-gamma0", passed=[True])


def cmd_eval_gamma_perp(args):
    lam = check_lambda(args.lam)
    x = np.array(_floats(args.point, 3, "--point"))
    ks = np.arange(1, args.modes + 1)
    vals, grads, err = gamma_perp_modes(x, lam, args.period, ks, grad=args.grad, tol=args.tol)
    phase = np.exp(1j * omega(ks, args.period) * args.t)
    out = {
        "lambda": lam, "period": args.period, "t": args.t, "point": x.tolist(), "modes": int(args.modes),
        "gamma_perp": (2 * np.tensordot(phase, vals, axes=(0, 0)).real).tolist(),
        "error_estimate": err,
    }
    if args.grad:
        out["grad_gamma_perp"] = (2 * np.tensordot(phase, grads, axes=(0, 0)).real).tolist()
    if args.mode_tensors:
        out["mode_tensors"] = _tensor_json(vals)
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return Report("eval-gamma-perp", passed=[True])


def cmd_synth_gamma_perp(args):
    n, L = _floats(args.grid, 2, "--grid")
    if n != int(n):
        raise InvalidParameterError("--grid: N must be an integer")
    grid = Grid(args.period, 2 * args.modes, int(n), L)
    table = synthesize_gamma_perp(grid, check_lambda(args.lam), K_modes=args.modes, workers=args.jobs)
    fld = table.to_torus_field()
    meta = {"kernel": "gamma_perp", "lambda": args.lam, "modes": args.modes, "error_estimate": table.error_estimate}
    write_tpf(args.out, fld, meta)
    log.info("wrote %s (error estimate %.2e)", args.out, table.error_estimate)
    return Report("synth-gamma-perp", passed=[True])


def _bound_cases(theorem, A, B):
    if theorem == "3.3":
        return [("3.3grad", A, B)] + ([("3.3value", A, B)] if A > 3 else [])
    if theorem not in CASES:
        raise InvalidParameterError(f"--theorem must be one of {CASES + ('3.3',)}")
    return [(theorem, A, B)]


def cmd_verify_bounds(args):
    A, B = _floats(args.params, 2, "--params")
    radii = _floats(args.radii, None, "--radii")
    norms = KernelNorms(args.lam)
    rep = Report("verify-bounds")
    text = ""
    for case, a, b in _bound_cases(args.theorem, A, B):
        r = verify_bounds(case, a, b, radii, lam=args.lam, norms=norms)
        log.info(r.summary())
        csv_text = r.to_csv()
        text += csv_text if not text else csv_text.split("\n", 1)[1]
        rep.passed.append(r.passed)
    _write(text, args.out)
    return rep


def cmd_solve(args):
    cfg = parse_config(args.config)
    f = cfg.force_field()
    b = picard_solve(f, cfg.solve_config(args.jobs), workers=args.jobs)
    meta = {
        "config": cfg.data,
        "config_hash": cfg.digest,
        "iterations": b.meta["iterations"],
        "converged": b.meta["converged"],
        "fixed_point_residual": b.meta["fixed_point_residual"],
        "mean_removed": b.meta["mean_removed"],
    }
    write_tpf(args.out, b.u, meta)
    if args.pressure:
        write_tpf(args.pressure, b.p, {"config_hash": cfg.digest})
    log.info("solve: %d iterations, fixed-point residual %.3e", b.meta["iterations"], b.meta["fixed_point_residual"])
    return Report("solve", cfg.digest, passed=[bool(b.meta["converged"])])


def cmd_expand(args):
    cfg = parse_config(args.force)
    src = cfg.source()
    if src is None:
        raise InvalidParameterError("expand needs a non-zero force")
    u = read_tpf(args.solution)
    if u.grid != cfg.grid:
        raise InvalidParameterError("solution grid differs from the config grid")
    table = None
    if any(k != 0 for k in src.mode_numbers()):
        table = load_time_norm_table(cfg.lam, cfg.period, 8)
    far = FarField(u, src, cfg.lam, table=table)
    h = cfg.grid.h
    if args.radii:
        radii = np.array(_floats(args.radii, None, "--radii"))
    else:
        r_min = h * np.ceil(2 * src.support_radius / h)
        radii = grid_radii(h, r_min, 10 * r_min, 7)
    rays = expansion_rays(cfg.lam, radii)
    if args.rays != "default":
        names = args.rays.split(",")
        missing = [n for n in names if n not in rays]
        if missing:
            raise InvalidParameterError(f"unknown ray {missing[0]!r}; choose from {sorted(rays)}")
        rays = {n: rays[n] for n in names}
    rows = expand_report(far, radii, rays=rays, model=args.model)
    _write(report_csv(rows), args.out)
    return Report("expand", cfg.digest, rows, [True])


SELFTEST_FIELDS = ["criterion", "check", "passed", "values"]


def cmd_selftest(args):
    only = [int(v) for v in args.only.split(",")] if args.only else None
    checks = acceptance.run_all(seed=args.seed, only=only)
    rep = Report("selftest")
    for c in checks:
        print(c.line())
        vals = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in c.values.items()}
        rep.rows.append({
            "criterion": c.number,
            "check": c.name,
            "passed": "true" if c.passed else "false",
            "values": json.dumps(vals, sort_keys=True, default=str),
        })
        rep.passed.append(c.passed)
    if args.out:
        _write(rep.to_csv(SELFTEST_FIELDS), args.out)
    return rep


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    p = argparse.ArgumentParser(prog="oseen-tp", description="Time-periodic Oseen kernels, solver and decay checks.")
    p.add_argument("--jobs", type=int, default=None, help="cap on FFT worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval-gamma0", help="steady kernel at a point (JSON)")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--point", required=True)
    s.add_argument("--grad", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval_gamma0)

    s = sub.add_parser("eval-gamma-perp", help="periodic kernel at (t, x) by quadrature (JSON)")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--period", type=float, default=2 * np.pi)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--point", required=True)
    s.add_argument("--modes", type=int, default=8)
    s.add_argument("--oracle", action="store_true", help="quadrature backend (the only one for points)")
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--grad", action="store_true")
    s.add_argument("--mode-tensors", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval_gamma_perp)

    s = sub.add_parser("synth-gamma-perp", help="grid synthesis of the periodic kernel (.tpf)")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--period", type=float, required=True)
    s.add_argument("--grid", required=True, help="N,L")
    s.add_argument("--modes", type=int, default=8)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth_gamma_perp)

    s = sub.add_parser("verify-bounds", help="convolution bound stability (CSV)")
    s.add_argument("--theorem", required=True)
    s.add_argument("--params", required=True, help="A,B")
    s.add_argument("--radii", default="10,20,40")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify_bounds)

    s = sub.add_parser("solve", help="nonlinear periodic solve (.tpf)")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--pressure", help="optional .tpf for the pressure")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("expand", help="far-field decay fits of a solution (CSV)")
    s.add_argument("--solution", required=True)
    s.add_argument("--force", required=True, help="config JSON used for the solve")
    s.add_argument("--rays", default="default")
    s.add_argument("--radii")
    s.add_argument("--model", default="auto")
    s.add_argument("--out")
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("selftest", help="run the acceptance checks (CSV)")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_selftest)
    return p


def run(argv=None):
    """Parse ``argv`` and execute; returns the :class:`Report`."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.jobs is not None and args.jobs < 1:
        raise InvalidParameterError("--jobs must be >= 1")
    return args.func(args)


def main(argv=None):
    try:
        rep = run(argv)
    except OseenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
