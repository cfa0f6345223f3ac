"""``uc-kit`` command line: config-driven runs writing CSV, JSON manifests and SVG plots.

Exit codes: 0 success, 1 invalid input, 2 numerical abort.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import certify as cert
from . import duality as dual
from . import geometry as geo
from . import io as uio
from . import moduli as mod
from . import rademacher as rad
from . import solvers as sol

log = logging.getLogger("uc_kit")

COMMANDS = ("certify", "moduli", "solve", "rademacher", "bench")
TOP_FIELDS = {"command", "body", "params", "seed", "out"}
PARAM_FIELDS = {
    "certify": {"item", "alpha", "p", "samples", "margin", "xstar", "d", "restarts", "rounds"},
    "moduli": {"kind", "grid", "restarts", "rounds", "xstar", "d"},
    "solve": {"solver", "rule", "objective", "max_iter", "tol_gap", "seeds", "fit_window", "snapshot_every"},
    "rademacher": {"distribution", "n_grid", "trials", "D_bound", "alpha", "p", "restarts", "rounds"},
    "bench": {"dims", "restarts", "rounds", "iters"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    body: Optional[dict]
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "uc_kit_out"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - TOP_FIELDS
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cmd = doc.get("command")
        if cmd not in COMMANDS:
            raise ConfigError(f"field 'command' must be one of {COMMANDS}, got {cmd!r}")
        params = dict(doc.get("params") or {})
        bad = set(params) - PARAM_FIELDS[cmd]
        if bad:
            raise ConfigError(f"unknown params for {cmd}: {sorted(bad)}")
        body = doc.get("body")
        if cmd != "bench":
            if body is None:
                raise ConfigError("missing required field 'body'")
            body = geo.parse_body(body).to_dict()
        seed = int(doc.get("seed", 0))
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("field 'seed' must be an unsigned 64-bit integer")
        return cls(cmd, body, params, seed, str(doc.get("out", "uc_kit_out")))

    def to_dict(self) -> dict:
        return {"command": self.command, "body": self.body, "params": self.params,
                "seed": self.seed, "out": self.out}

    @property
    def body_obj(self):
        return geo.body_from_dict(self.body)


# ------------------------------------------------------------------ commands


def _budget(params) -> mod.Budget:
    return mod.Budget(restarts=int(params.get("restarts", 2000)), rounds=int(params.get("rounds", 40)))


def _auto_params(body, params, seed):
    """(alpha, p) from the fitted delta curve unless given explicitly."""
    if params.get("alpha", "auto") != "auto":
        return mod.UCParams(float(params["alpha"]), float(params.get("p", 2.0)), "1c"), None
    curve = mod.delta_curve(body, None, _budget(params), seed)
    fit = mod.fit_uc_params(curve)
    if not fit:
        raise ConfigError(f"body is not uniformly convex: {fit.reason}")
    return fit, curve


def run_moduli(cfg: ExperimentConfig, out: Path, plots: bool) -> list:
    body = cfg.body_obj
    p = cfg.params
    kind = p.get("kind", "delta")
    b = _budget(p)
    grid = p.get("grid")
    if kind == "delta":
        curve = mod.delta_curve(body, grid, b, cfg.seed)
    elif kind == "rho":
        curve = mod.rho_curve(body, grid, b, cfg.seed)
    elif kind in ("rho_local", "nu_local"):
        if "xstar" not in p or "d" not in p:
            raise ConfigError(f"{kind} needs params 'xstar' and 'd'")
        fn = mod.rho_local_curve if kind == "rho_local" else mod.nu_curve
        g = grid if grid is not None else (mod.default_tau_grid() if kind == "rho_local" else mod.default_eps_grid())
        curve = fn(body, g, p["xstar"], p["d"], b, cfg.seed)
    else:
        raise ConfigError(f"unknown modulus kind {kind!r}")
    outs = [uio.write_csv(out / "moduli.csv", curve.rows(), ["kind", "grid", "value", "bias", "seed", "budget"])]
    if kind in ("delta", "nu_local"):
        fit = mod.fit_uc_params(curve)
        doc = {"uniformly_convex": bool(fit)}
        doc.update({"alpha": fit.alpha, "p": fit.exponent, "item": fit.item} if fit else {"reason": fit.reason})
        outs.append(uio.write_json(out / "fit.json", doc))
        print(uio.dumps(doc))
    if plots:
        outs.append(uio.plot_xy_from_csv(out / "moduli.csv", out / "moduli.svg", "grid", "value", "kind",
                                         title=body.label()))
    return outs


def run_certify(cfg: ExperimentConfig, out: Path, plots: bool) -> list:
    body = cfg.body_obj
    p = cfg.params
    item = p.get("item", "b")
    samples = int(p.get("samples", 100_000))
    margin = float(p.get("margin", cert.DEFAULT_MARGIN))
    fit, _ = _auto_params(body, p, cfg.seed)
    chain = []
    if item == "a":
        rep = cert.check_midpoint_inclusion(body, fit.alpha, fit.exponent, samples, cfg.seed, margin)
        chain = dual.compose_transfers("ca", fit)
    elif item == "b":
        chain = dual.compose_transfers("cab", fit)
        b = chain[-1].out_params
        rep = cert.check_global_scaling(body, b.alpha, b.exponent, samples, cfg.seed, margin)
    elif item == "d":
        chain = dual.compose_transfers("cabd", fit)
        d = chain[-1].out_params
        rep = cert.check_support_holder_sphere(body, d.alpha * (1 + margin), 1.0 + d.exponent, samples, cfg.seed)
    elif item == "lmo_holder":
        rep = cert.check_lmo_holder(body, fit.alpha * (1 - margin), fit.exponent, samples, cfg.seed)
    elif item == "local":
        if "xstar" not in p or "d" not in p:
            raise ConfigError("local certification needs params 'xstar' and 'd'")
        rep = cert.check_local_scaling(body, p["xstar"], p["d"], fit.alpha, fit.exponent, samples, cfg.seed, margin)
    else:
        raise ConfigError(f"unknown item {item!r}")
    for step in chain:
        print(f"{step.from_item} -> {step.to_item}: ({step.in_params.alpha:.6g}, {step.in_params.exponent:.6g})"
              f" -> ({step.out_params.alpha:.6g}, {step.out_params.exponent:.6g})  [{step.formula_id}]")
    doc = rep.to_dict()
    doc["chain"] = [s.row() for s in chain]
    outs = [uio.write_json(out / "certify.json", doc)]
    if chain:
        outs.append(uio.write_csv(out / "transfers.csv", (s.row() for s in chain), dual.TRANSFER_COLUMNS))
    print(f"{rep.check}: {rep.violations} violations over {rep.samples} samples (max ratio {rep.max_ratio:.6g})")
    return outs


def _objective(body, spec: dict):
    spec = dict(spec)
    if "xstar" in spec:
        return sol.quadratic_with_optimum(body, spec["xstar"], float(spec.get("grad_norm", 0.5)),
                                          float(spec.get("scale", 1.0)))
    if "b" not in spec:
        raise ConfigError("objective needs 'b' or 'xstar'")
    return sol.make_objective(spec, body)


def _one_run(body, obj, p, seed):
    if p.get("solver", "fw") == "pafw":
        return sol.pafw(obj, body, int(p.get("max_iter", 1000)), float(p.get("tol_gap", 0.0)), seed,
                        int(p.get("snapshot_every", 0)))
    return sol.vanilla_fw(obj, body, p.get("rule", "line_search"), int(p.get("max_iter", 1000)),
                          float(p.get("tol_gap", 0.0)), seed, int(p.get("snapshot_every", 0)))


def run_solve(cfg: ExperimentConfig, out: Path, plots: bool, threads: int = 1) -> list:
    body = cfg.body_obj
    p = cfg.params
    if p.get("solver", "fw") not in ("fw", "pafw"):
        raise ConfigError("params.solver must be 'fw' or 'pafw'")
    if "objective" not in p:
        raise ConfigError("missing required field 'params.objective'")
    obj = _objective(body, p["objective"])
    seeds = [int(s) for s in p.get("seeds", [cfg.seed])]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        traces = list(ex.map(lambda s: _one_run(body, obj, p, s), seeds))
    fstar = sol.reference_fstar(obj, body, int(p.get("max_iter", 1000)), cfg.seed)
    outs, fits = [], []
    rows = []
    for s, tr in zip(seeds, traces):
        outs.append(uio.write_csv(out / f"trace_{s}.csv", tr.rows(), ["k", "f_value", "fw_gap", "step_size"]))
        outs.append(uio.write_json(out / f"trace_{s}.json", tr.meta))
        win = tuple(p["fit_window"]) if "fit_window" in p else None
        fits.append(sol.fit_rate(tr, fstar, window=win))
        rows.extend({"seed": s, "k": k, "primal_gap": g} for k, g in zip(tr.k, tr.f_value - fstar) if k > 0 and g > 0)
    doc = {"fstar": fstar, "fits": [f.__dict__ for f in fits]}
    if all(f.model == "power_law" for f in fits):
        doc["mean_exponent"] = float(np.mean([f.exponent_or_ratio for f in fits]))
    outs.append(uio.write_json(out / "rate.json", doc))
    outs.append(uio.write_csv(out / "gaps.csv", rows, ["seed", "k", "primal_gap"]))
    if plots:
        outs.append(uio.plot_xy_from_csv(out / "gaps.csv", out / "gaps.svg", "k", "primal_gap", "seed",
                                         logx=True, logy=True, title=body.label()))
    for s, f in zip(seeds, fits):
        print(f"seed {s}: {f.model} {f.exponent_or_ratio:.6g} (r2 {f.r_squared:.4f})")
    return outs


def run_rademacher(cfg: ExperimentConfig, out: Path, plots: bool) -> list:
    body = cfg.body_obj
    p = cfg.params
    fit, _ = _auto_params(body, p, cfg.seed)
    data = rad.DataModel(body.dim, p.get("distribution", "sphere_uniform_in_polar_gauge"),
                         float(p.get("D_bound", 1.0)))
    n_grid = p.get("n_grid", [2 ** k for k in range(4, 13)])
    rep = rad.check_rademacher_bound(body, fit, data, n_grid, int(p.get("trials", 2000)), cfg.seed)
    outs = [uio.write_csv(out / "rademacher.csv", rep.rows(),
                          ["n", "mean", "stderr", "trials", "body", "distribution", "seed"]),
            uio.write_json(out / "rademacher.json", rep.__dict__)]
    if plots:
        outs.append(uio.plot_xy_from_csv(out / "rademacher.csv", out / "rademacher.svg", "n", "mean",
                                         logx=True, logy=True, title=body.label()))
    print(f"slope {rep.slope} (predicted {rep.predicted_slope:.4g}); empirical C^(1/q) {rep.empirical_constant:.4g};"
          f" chained {rep.chained_constant}")
    return outs


def run_bench(cfg: ExperimentConfig, out: Path, plots: bool) -> list:
    p = cfg.params
    b = _budget(p)
    rows = []
    for m in p.get("dims", [2, 3, 4, 5]):
        t = time.perf_counter()
        c = mod.delta_curve(geo.LpBall(2.0, 1.0, int(m)), None, b, cfg.seed)
        err = float(np.max(np.abs(c.values - mod.analytic_l2_delta(c.grid))))
        rows.append({"task": f"delta_l2_dim{m}", "seconds": time.perf_counter() - t, "metric": err})
    iters = int(p.get("iters", 10_000))
    body = geo.LpBall(4.0, 1.0, 2)
    obj = sol.quadratic_with_optimum(body, np.array([1.0, 0.0]), 0.5)
    t = time.perf_counter()
    tr = sol.pafw(obj, body, iters, seed=cfg.seed)
    rows.append({"task": f"pafw_l4_{iters}", "seconds": time.perf_counter() - t,
                 "metric": float(tr.f_value[-1] - obj.fstar)})
    for r in rows:
        print(f"{r['task']:>24s}  {r['seconds']:8.2f} s  metric {r['metric']:.3g}")
    return [uio.write_csv(out / "bench.csv", rows, ["task", "seconds", "metric"])]


RUNNERS = {"moduli": run_moduli, "certify": run_certify, "rademacher": run_rademacher, "bench": run_bench}


def run(cfg: ExperimentConfig, plots: bool = True, threads: int = 1) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.command == "solve":
        outs = run_solve(cfg, out, plots, threads)
    else:
        outs = RUNNERS[cfg.command](cfg, out, plots)
    uio.write_json(out / "manifest.json", uio.manifest(cfg.to_dict(), cfg.seed, [Path(o).name for o in outs]))
    return 0


# ------------------------------------------------------------------ argparse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uc-kit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="u64 seed (falls back to config, then UC_KIT_SEED)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--no-plots", action="store_true")
        sp.add_argument("--body", help="lp:<p|inf>:<r>:<dim>, ell:<Q.json> or inline JSON")
        if name in ("certify", "rademacher"):
            sp.add_argument("--alpha", help="'auto' or a number")
            sp.add_argument("--p", type=float)
        if name == "certify":
            sp.add_argument("--item", choices=["a", "b", "d", "lmo_holder", "local"])
            sp.add_argument("--samples", type=int)
        if name == "moduli":
            sp.add_argument("--kind", choices=list(mod.KINDS))
        if name == "solve":
            sp.add_argument("--solver", choices=["fw", "pafw"])
            sp.add_argument("--rule", choices=list(sol.RULES))
            sp.add_argument("--max-iter", type=int, dest="max_iter")
        if name == "rademacher":
            sp.add_argument("--distribution", choices=list(rad.DISTRIBUTIONS))
            sp.add_argument("--trials", type=int)
    return ap


def config_from_args(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
        if doc.get("command", args.command) != args.command:
            raise ConfigError(f"config command {doc.get('command')!r} does not match {args.command!r}")
    doc["command"] = args.command
    if args.body:
        doc["body"] = args.body
    params = dict(doc.get("params") or {})
    for key in ("item", "alpha", "p", "samples", "kind", "solver", "rule", "max_iter", "distribution", "trials"):
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    doc["params"] = params
    if args.seed is not None:
        doc["seed"] = args.seed
    elif "seed" not in doc and os.environ.get("UC_KIT_SEED"):
        doc["seed"] = int(os.environ["UC_KIT_SEED"])
    if args.out:
        doc["out"] = args.out
    return ExperimentConfig.from_dict(doc)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run(cfg, plots=not args.no_plots, threads=args.threads)
    except (sol.SolverAbort, FloatingPointError) as e:
        print(f"uc-kit: numerical abort: {e}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, KeyError, TypeError) as e:
        print(f"uc-kit: invalid input: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
