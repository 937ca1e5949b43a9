"""Command-line entry point.

Every subcommand is a reproducible run: the fully resolved configuration
is embedded in each output file (as a leading ``# config:`` comment in
CSV, as a ``config`` field in JSON), identical seed and config give
byte-identical outputs, and the exit code encodes the outcome: 0 for
success, 1 for a failed verification (with the offending instance
serialized next to the outputs when one exists), 2 for configuration
errors.

A JSON file passed via --config overrides the corresponding flags.  The
environment variable RESTRICTLAB_THREADS caps the worker pool used for
embarrassingly parallel verification loops (results are collected in a
fixed order regardless).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import ck, experiments, measures, oracle, specfun, surfaces, variation
from .errors import VerificationError
from .testfn import GaussianPacket


class ConfigError(ValueError):
    pass


def _threads() -> int:
    raw = os.environ.get("RESTRICTLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"RESTRICTLAB_THREADS={raw!r} is not an integer")
    return max(1, n)


def _pool_map(fn, items):
    n = _threads()
    if n == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _measure_from(cfg) -> measures.AveragingMeasure:
    try:
        return measures.AveragingMeasure(cfg["measure"], cfg["dim"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_csv(path: Path, config: dict, header, rows):
    with open(path, "w") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, config: dict, payload: dict):
    with open(path, "w") as fh:
        json.dump({"config": config, **payload}, fh, sort_keys=True, indent=1,
                  default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")


def cmd_bessel_table(cfg, out: Path) -> int:
    zs = np.linspace(0.0, cfg["z_max"], cfg["z_points"])
    alphas = cfg["alphas"]
    cols = {f"J_{a:g}": specfun.bessel_j(float(a), zs) for a in alphas}
    rows = [[z] + [cols[k][i] for k in cols] for i, z in enumerate(zs)]
    _write_csv(out / "bessel-table.csv", cfg, ["z"] + list(cols), rows)
    # three-term recurrence residual as a built-in self-check
    worst = 0.0
    zs_pos = zs[zs >= 1.0]
    for a in (1.0, 2.0, 3.0):
        lhs = specfun.bessel_j(a - 1, zs_pos) + specfun.bessel_j(a + 1, zs_pos)
        rhs = 2 * a / zs_pos * specfun.bessel_j(a, zs_pos)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    _write_json(out / "bessel-table.json", cfg,
                {"recurrence_residual": worst, "pass": worst < 1e-8})
    return 0 if worst < 1e-8 else 1


def cmd_measure_decay(cfg, out: Path) -> int:
    mu = _measure_from(cfg)
    prof = measures.decay_profile(mu, (cfg["r_min"], cfg["r_max"]),
                                  cfg["samples"])
    radii = np.geomspace(cfg["r_min"], cfg["r_max"], cfg["samples"])
    grads = np.abs(measures.radial_derivative(mu, radii))
    _write_csv(out / "measure-decay.csv", cfg, ["radius", "grad_norm"],
               [[r, g] for r, g in zip(radii, grads)])
    eta_doc = measures.documented_eta(mu)
    ok = (prof.D_est == 0.0 if mu.kind == "zero"
          else abs(prof.eta_est - eta_doc) <= 0.1)
    _write_json(out / "measure-decay.json", cfg, {
        "D_est": prof.D_est, "eta_est": prof.eta_est,
        "eta_documented": eta_doc, "residual": prof.residual, "pass": ok})
    return 0 if ok else 1


def cmd_variation_selftest(cfg, out: Path) -> int:
    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    for _ in range(cfg["cases"]):
        m = int(rng.integers(2, cfg["max_len"] + 1))
        scales = np.cumsum(rng.uniform(0.05, 1.0, m))
        vals = rng.normal(size=m) + 1j * rng.normal(size=m)
        path = variation.SampledPath(variation.ScaleGrid(scales), vals)
        for rho in (1.5, 2.0, 4.0):
            dp = variation.rho_variation(path, rho).value
            bf = variation.brute_force_variation(path, rho)
            worst = max(worst, abs(dp - bf))
    ok = worst <= 1e-12
    _write_json(out / "variation-selftest.json", cfg,
                {"max_abs_gap": worst, "pass": ok})
    return 0 if ok else 1


def cmd_ck_verify(cfg, out: Path) -> int:
    consts = ck.ck_constants(cfg["p"], cfg["q"], cfg["rho"])

    def run_one(i):
        inst = oracle.random_instance(
            cfg["seed"] + i, dimension=cfg["dim"], n_points=cfg["points"],
            n_blocks=cfg["blocks"], n_atoms=cfg["atoms"], q=cfg["q"])
        res_m = ck.ck_max_verify(inst.model, inst.f, inst.blocks,
                                 p=cfg["p"], q=cfg["q"], instance=inst)
        res_v = ck.ck_var_verify(inst.model, inst.f, inst.blocks,
                                 p=cfg["p"], q=cfg["q"], rho=cfg["rho"],
                                 instance=inst)
        return inst.seed, res_m, res_v

    reports = []
    n_pass = 0
    try:
        for seed, res_m, res_v in _pool_map(run_one, range(cfg["instances"])):
            rec = {"seed": seed, "p": cfg["p"], "q": cfg["q"],
                   "rho": cfg["rho"],
                   "max": {k: res_m[k] for k in
                           ("lhs", "rhs", "bound", "passed")},
                   "var": {k: res_v[k] for k in
                           ("lhs", "rhs", "bound", "passed")},
                   "pass": res_m["passed"] and res_v["passed"]}
            reports.append(rec)
            n_pass += rec["pass"]
    except VerificationError as exc:
        if exc.instance is not None:
            (out / "ck-failing-instance.json").write_text(exc.instance.to_json())
        _write_json(out / "ck-verify.json", cfg,
                    {"error": str(exc), "pass": False})
        return 1
    ok = n_pass == cfg["instances"]
    _write_json(out / "ck-verify.json", cfg, {
        "constants": consts, "instances": reports,
        "n_pass": n_pass, "pass": ok})
    return 0 if ok else 1


def cmd_mollifier_check(cfg, out: Path) -> int:
    mu = _measure_from(cfg)
    bump = ck.make_annular_bump(cfg["profile_order"])
    mf = ck.mollifier_family(mu, bump)
    s_grid = np.geomspace(cfg["s_min"], cfg["s_max"], cfg["s_points"])
    try:
        rows = ck.psi_s_decay(mf, s_grid)
        decomp = []
        for (a, b) in ((0.5, 2.0), (0.25, 1.0), (1.0, 4.0)):
            x = np.zeros(mu.dimension)
            x[0] = 1.0
            decomp.append(ck.decomposition_check(mf, a, b, x))
    except VerificationError as exc:
        _write_json(out / "mollifier-check.json", cfg,
                    {"error": str(exc), "pass": False})
        return 1
    _write_csv(out / "mollifier-check.csv", cfg,
               ["s", "sup_norm", "envelope", "ratio"],
               [[r["s"], r["sup_norm"], r["envelope"], r["ratio"]]
                for r in rows])
    _write_json(out / "mollifier-check.json", cfg, {
        "D": mf.D, "eta": mf.eta, "env_constant": mf.env_constant,
        "max_ratio": max(r["ratio"] for r in rows),
        "decomposition": decomp, "pass": True})
    return 0


def cmd_scan(cfg, out: Path) -> int:
    mu = _measure_from(cfg)
    triple = experiments.ExponentTriple(cfg["p"], cfg["q"], cfg["rho"],
                                        cfg["dim"])
    grid = experiments.default_scale_grid(cfg["octaves"], cfg["per_octave"])
    f = GaussianPacket(cfg["dim"])
    rep = experiments.maximal_variational_scan(
        f, mu, surfaces.sphere(cfg["dim"]), grid, triple,
        resolution=cfg["surface_res"])
    header = [f"x{i}" for i in range(cfg["dim"])] + ["maximal", "variation"]
    _write_csv(out / "scan.csv", cfg, header, rep.rows())
    _write_json(out / "scan.json", cfg, {
        "maximal_aggregate": rep.maximal_aggregate,
        "variation_aggregate": rep.variation_aggregate,
        "anchor_aggregate": rep.anchor_aggregate,
        "lp_norm_f": rep.lp_norm_f,
        "ratio_maximal": rep.ratio_maximal,
        "ratio_variation": rep.ratio_variation,
        "metadata": rep.metadata, "pass": True})
    return 0


def cmd_knapp(cfg, out: Path) -> int:
    deltas = [2.0 ** (-k) for k in range(cfg["delta_min_exp"],
                                         cfg["delta_max_exp"] + 1)]
    rep = experiments.knapp_scan(surfaces.sphere(cfg["dim"]), cfg["p"],
                                 cfg["q"], deltas)
    _write_csv(out / "knapp.csv", cfg, ["delta", "ratio"],
               [[d, r] for d, r in zip(rep["deltas"], rep["ratios"])])
    _write_json(out / "knapp.json", cfg, {
        "slope": rep["slope"], "residual": rep["residual"],
        "verdict": rep["verdict"], "threshold_q": rep["threshold_q"],
        "predicted_bounded": rep["predicted_bounded"], "pass": True})
    return 0


def cmd_square_function(cfg, out: Path) -> int:
    bump = ck.make_annular_bump(cfg["profile_order"])
    rep = experiments.square_function_check(
        GaussianPacket(cfg["dim"]), bump, surfaces.sphere(cfg["dim"]),
        cfg["p"], cfg["q"], surface_resolution=cfg["surface_res"])
    _write_json(out / "square-function.json", cfg, {
        "lhs": rep["lhs"], "rhs": rep["rhs"], "ratio": rep["ratio"],
        "c_emp": rep["c_emp"], "stability": rep["stability"],
        "minkowski_cap": rep["minkowski_cap"], "pass": True})
    return 0


def cmd_lebesgue(cfg, out: Path) -> int:
    mu = _measure_from(cfg)
    eps = np.geomspace(cfg["eps_max"], cfg["eps_min"], cfg["eps_points"])
    omega = np.zeros(cfg["dim"])
    omega[0] = 1.0
    rep = experiments.lebesgue_point_experiment(GaussianPacket(cfg["dim"]),
                                                mu, omega, eps)
    _write_csv(out / "lebesgue.csv", cfg, ["eps", "error"],
               [[e, er] for e, er in zip(rep["eps"], rep["errors"])])
    _write_json(out / "lebesgue.json", cfg, {
        "slope": rep["slope"], "exact": rep["exact"], "pass": True})
    return 0


def cmd_squared_trick(cfg, out: Path) -> int:
    mu = _measure_from(cfg)
    triple = experiments.ExponentTriple(cfg["p"], cfg["q"], cfg["rho"],
                                        cfg["dim"])
    rep = experiments.squared_average_trick(GaussianPacket(cfg["dim"]), mu,
                                            surfaces.sphere(cfg["dim"]),
                                            triple)
    _write_json(out / "squared-trick.json", cfg, {
        "p_tilde": rep["p_tilde"], "q_tilde": rep["q_tilde"],
        "hhat_check_err": rep["hhat_check_err"],
        "ratio_tilde": rep["ratio_tilde"],
        "young_lhs": rep["young_lhs"], "young_rhs": rep["young_rhs"],
        "pass": True})
    return 0


_COMMANDS = {
    "bessel-table": cmd_bessel_table,
    "measure-decay": cmd_measure_decay,
    "variation-selftest": cmd_variation_selftest,
    "ck-verify": cmd_ck_verify,
    "mollifier-check": cmd_mollifier_check,
    "scan": cmd_scan,
    "knapp": cmd_knapp,
    "square-function": cmd_square_function,
    "lebesgue": cmd_lebesgue,
    "squared-trick": cmd_squared_trick,
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="restrictlab",
        description="Numerical laboratory for maximal/variational "
                    "Fourier restriction machinery")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default="restrictlab-out",
                        help="output directory")
        sp.add_argument("--config", default=None,
                        help="JSON config file overriding flags")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("bessel-table", help="tabulate J_alpha on a grid")
    common(sp)
    sp.add_argument("--alphas", type=float, nargs="+",
                    default=[0.0, 0.5, 1.0, 2.0, 5.0])
    sp.add_argument("--z-max", dest="z_max", type=float, default=50.0)
    sp.add_argument("--z-points", dest="z_points", type=int, default=201)

    sp = sub.add_parser("measure-decay", help="fit the gradient decay law")
    common(sp)
    sp.add_argument("--measure", default="ball",
                    choices=["gaussian", "ball", "sphere", "zero"])
    sp.add_argument("--dim", type=int, default=3)
    sp.add_argument("--r-min", dest="r_min", type=float, default=10.0)
    sp.add_argument("--r-max", dest="r_max", type=float, default=100.0)
    sp.add_argument("--samples", type=int, default=200)

    sp = sub.add_parser("variation-selftest", help="DP vs brute force")
    common(sp)
    sp.add_argument("--max-len", dest="max_len", type=int, default=12)
    sp.add_argument("--cases", type=int, default=1000)

    sp = sub.add_parser("ck-verify", help="bisection lemma on the discrete model")
    common(sp)
    sp.add_argument("--p", type=float, default=1.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--rho", type=float, default=2.0)
    sp.add_argument("--instances", type=int, default=1000)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--points", type=int, default=512)
    sp.add_argument("--blocks", type=int, default=8)
    sp.add_argument("--atoms", type=int, default=16)

    sp = sub.add_parser("mollifier-check", help="bump, envelope, decomposition")
    common(sp)
    sp.add_argument("--measure", default="gaussian",
                    choices=["gaussian", "ball", "sphere", "zero"])
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--profile-order", dest="profile_order", type=int, default=2)
    sp.add_argument("--s-min", dest="s_min", type=float, default=1e-3)
    sp.add_argument("--s-max", dest="s_max", type=float, default=1e3)
    sp.add_argument("--s-points", dest="s_points", type=int, default=25)

    sp = sub.add_parser("scan", help="maximal/variational scan on a sphere")
    common(sp)
    sp.add_argument("--measure", default="gaussian",
                    choices=["gaussian", "ball", "sphere", "zero"])
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--p", type=float, default=1.25)
    sp.add_argument("--q", type=float, default=5.0 / 3.0)
    sp.add_argument("--rho", type=float, default=2.0)
    sp.add_argument("--octaves", type=int, default=8)
    sp.add_argument("--per-octave", dest="per_octave", type=int, default=16)
    sp.add_argument("--surface-res", dest="surface_res", type=int, default=16)

    sp = sub.add_parser("knapp", help="Knapp packet scaling on the sphere")
    common(sp)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--p", type=float, default=4.0 / 3.0)
    sp.add_argument("--q", type=float, default=4.0 / 3.0)
    sp.add_argument("--delta-min-exp", dest="delta_min_exp", type=int, default=2)
    sp.add_argument("--delta-max-exp", dest="delta_max_exp", type=int, default=7)

    sp = sub.add_parser("square-function", help="l^p square function bound")
    common(sp)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--p", type=float, default=4.0 / 3.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--profile-order", dest="profile_order", type=int, default=2)
    sp.add_argument("--surface-res", dest="surface_res", type=int, default=8)

    sp = sub.add_parser("lebesgue", help="shrinking-average convergence rate")
    common(sp)
    sp.add_argument("--measure", default="ball",
                    choices=["gaussian", "ball", "sphere", "zero"])
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--eps-min", dest="eps_min", type=float, default=1e-3)
    sp.add_argument("--eps-max", dest="eps_max", type=float, default=1e-1)
    sp.add_argument("--eps-points", dest="eps_points", type=int, default=7)

    sp = sub.add_parser("squared-trick", help="squared-average certificate")
    common(sp)
    sp.add_argument("--measure", default="gaussian",
                    choices=["gaussian", "ball", "sphere", "zero"])
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--p", type=float, default=4.0 / 3.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--rho", type=float, default=2.0)
    return ap


def _resolve_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("config", "out")}
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        for key, val in overrides.items():
            if key not in cfg:
                raise ConfigError(f"unknown config field {key!r} for "
                                  f"command {cfg['command']}")
            cfg[key] = val
    for key, val in cfg.items():
        if isinstance(val, float) and not math.isfinite(val):
            raise ConfigError(f"field {key!r} must be finite, got {val}")
        if key in ("instances", "cases", "samples", "points", "atoms",
                   "blocks") and val is not None and val <= 0:
            raise ConfigError(f"field {key!r} must be positive, got {val}")
    return cfg


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        code = _COMMANDS[cfg["command"]](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (VerificationError, AssertionError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        inst = getattr(exc, "instance", None)
        if inst is not None:
            fail = Path(args.out) / "failing-instance.json"
            fail.write_text(inst.to_json())
            print(f"instance written to {fail}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
