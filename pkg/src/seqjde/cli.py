"""Command-line front end: JSON config in, JSON/CSV results out.

Subcommands: calibrate, gtable, simulate, montecarlo, compare.  Every
subcommand is a pure function of the config file bytes and the flags, and all
numeric output carries 17 significant digits so doubles round-trip exactly.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 horizon
exhaustion.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import engine, gfunc, sim, stats
from .errors import (
    ChannelFileError,
    HorizonExhausted,
    InfeasibleConstraint,
    InvalidCosts,
    NumericalError,
    QuadratureNonConvergence,
    SeqjdeError,
)
from .model import CostWeights, Hypothesis, ModelParams, admissible_cost_bound

_GTABLE_QUAD_TOL = 1e-9


class ConfigError(SeqjdeError):
    """The run configuration is malformed or violates a precondition."""


@dataclass(frozen=True)
class GridSpec:
    u_min: float
    u_max: float
    points: int
    spacing: str

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.logspace(math.log10(self.u_min), math.log10(self.u_max), self.points)
        return np.linspace(self.u_min, self.u_max, self.points)


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    costs: CostWeights
    constraint_C: float
    channel: sim.ChannelModel
    reps: int
    master_seed: int
    t_max: int
    grid: GridSpec | None


def _require_keys(section: dict, allowed: dict[str, bool], where: str) -> None:
    """allowed maps key -> required; unknown keys are rejected."""
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")
    for key, required in allowed.items():
        if required and key not in section:
            raise ConfigError(f"missing key {key!r} in {where}")


def _as_number(section: dict, key: str, where: str) -> float:
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def _as_int(section: dict, key: str, where: str) -> int:
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
    return v


_CHANNEL_SCHEMAS = {
    "constant": {"type": True, "h": True},
    "iid_gaussian": {"type": True, "std": True},
    "rayleigh": {"type": True, "scale": True},
    "ar1": {"type": True, "phi": True, "innov_std": True, "init_std": True},
    "from_file": {"type": True, "path": True},
}


def _parse_channel(section: dict) -> sim.ChannelModel:
    if not isinstance(section, dict) or "type" not in section:
        raise ConfigError("channel section must be an object with a 'type' key")
    kind = section["type"]
    if kind not in _CHANNEL_SCHEMAS:
        raise ConfigError(f"unknown channel type {kind!r}")
    _require_keys(section, _CHANNEL_SCHEMAS[kind], f"channel({kind})")
    try:
        if kind == "constant":
            return sim.Constant(h=_as_number(section, "h", "channel"))
        if kind == "iid_gaussian":
            return sim.IidGaussian(std=_as_number(section, "std", "channel"))
        if kind == "rayleigh":
            return sim.Rayleigh(scale=_as_number(section, "scale", "channel"))
        if kind == "ar1":
            return sim.Ar1(
                phi=_as_number(section, "phi", "channel"),
                innov_std=_as_number(section, "innov_std", "channel"),
                init_std=_as_number(section, "init_std", "channel"),
            )
        path = section["path"]
        if not isinstance(path, str):
            raise ConfigError(f"channel.path must be a string, got {path!r}")
        return sim.FromFile(path=path)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_grid(section: dict) -> GridSpec:
    _require_keys(section, {"u_min": True, "u_max": True, "points": True, "spacing": True},
                  "grid")
    u_min = _as_number(section, "u_min", "grid")
    u_max = _as_number(section, "u_max", "grid")
    points = _as_int(section, "points", "grid")
    spacing = section["spacing"]
    if spacing not in ("linear", "log"):
        raise ConfigError(f"grid.spacing must be 'linear' or 'log', got {spacing!r}")
    if not (math.isfinite(u_min) and math.isfinite(u_max)) or u_min < 0 or u_min >= u_max:
        raise ConfigError(f"grid needs 0 <= u_min < u_max, got [{u_min}, {u_max}]")
    if spacing == "log" and u_min <= 0:
        raise ConfigError("log spacing needs u_min > 0")
    if points < 2:
        raise ConfigError(f"grid.points must be >= 2, got {points}")
    return GridSpec(u_min=u_min, u_max=u_max, points=points, spacing=spacing)


def load_config(path: str) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(raw, {"model": True, "costs": True, "constraint_C": True,
                        "channel": True, "mc": True, "grid": False}, "config")

    model_sec = raw["model"]
    _require_keys(model_sec, {"mu_x": True, "sigma_x": True, "sigma": True}, "model")
    costs_sec = raw["costs"]
    _require_keys(costs_sec, {"c0": True, "c1": True, "ce": True}, "costs")
    mc_sec = raw["mc"]
    _require_keys(mc_sec, {"reps": True, "master_seed": True, "t_max": True}, "mc")

    try:
        params = ModelParams(
            mu_x=_as_number(model_sec, "mu_x", "model"),
            sigma_x=_as_number(model_sec, "sigma_x", "model"),
            sigma=_as_number(model_sec, "sigma", "model"),
        )
        costs = CostWeights(
            c0=_as_number(costs_sec, "c0", "costs"),
            c1=_as_number(costs_sec, "c1", "costs"),
            ce=_as_number(costs_sec, "ce", "costs"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    constraint_C = _as_number(raw, "constraint_C", "config")
    channel = _parse_channel(raw["channel"])
    reps = _as_int(mc_sec, "reps", "mc")
    master_seed = _as_int(mc_sec, "master_seed", "mc")
    t_max = _as_int(mc_sec, "t_max", "mc")
    if reps < 1:
        raise ConfigError(f"mc.reps must be >= 1, got {reps}")
    if t_max < 1:
        raise ConfigError(f"mc.t_max must be >= 1, got {t_max}")
    if master_seed < 0:
        raise ConfigError(f"mc.master_seed must be >= 0, got {master_seed}")
    grid = _parse_grid(raw["grid"]) if "grid" in raw else None

    return RunConfig(params=params, costs=costs, constraint_C=constraint_C,
                     channel=channel, reps=reps, master_seed=master_seed,
                     t_max=t_max, grid=grid)


# ---------------------------------------------------------------------------
# deterministic emission: 17 significant digits, stable key order

def _fmt(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, Hypothesis):
        return json.dumps(v.name)
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot format {v!r}")


def _json_lines(v, indent: int) -> str:
    pad = "  " * indent
    if isinstance(v, dict):
        if not v:
            return "{}"
        inner = ",\n".join(
            f"{pad}  {json.dumps(k)}: {_json_lines(val, indent + 1)}" for k, val in v.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        inner = ",\n".join(f"{pad}  {_json_lines(val, indent + 1)}" for val in v)
        return "[\n" + inner + "\n" + pad + "]"
    return _fmt(v)


def _write_json(obj: dict, path: str) -> None:
    Path(path).write_text(_json_lines(obj, 0) + "\n")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    return _fmt(v)


def _write_csv(header: list[str], rows: list[list], path) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_csv_cell(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def _sidecar(out_path: str, kind: str) -> Path:
    return Path(out_path).with_suffix(f".{kind}.csv")


def _report_dict(r: sim.CostReport) -> dict:
    return {
        "reps": r.reps,
        "p0_d1": {"value": r.p0_d1, "stderr": r.p0_d1_se},
        "p1_d0": {"value": r.p1_d0, "stderr": r.p1_d0_se},
        "mse_d1": {"value": r.mse_d1, "stderr": r.mse_d1_se},
        "mse_d0": {"value": r.mse_d0, "stderr": r.mse_d0_se},
        "combined": {"value": r.combined, "stderr": r.combined_se},
        "predicted": r.predicted,
        "constraint_C": r.constraint_C,
    }


def _scenario_pair(cfg: RunConfig) -> tuple[sim.ScenarioConfig, sim.ScenarioConfig]:
    mk = lambda truth: sim.ScenarioConfig(
        truth=truth, params=cfg.params, costs=cfg.costs, channel=cfg.channel,
        master_seed=cfg.master_seed, reps=cfg.reps, t_max=cfg.t_max,
    )
    return mk(Hypothesis.H0), mk(Hypothesis.H1)


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    seed = getattr(args, "seed", None)
    reps = getattr(args, "reps", None)
    if seed is None and reps is None:
        return cfg
    if seed is not None and seed < 0:
        raise ConfigError(f"--seed must be >= 0, got {seed}")
    if reps is not None and reps < 1:
        raise ConfigError(f"--reps must be >= 1, got {reps}")
    return RunConfig(
        params=cfg.params, costs=cfg.costs, constraint_C=cfg.constraint_C,
        channel=cfg.channel, reps=cfg.reps if reps is None else reps,
        master_seed=cfg.master_seed if seed is None else seed,
        t_max=cfg.t_max, grid=cfg.grid,
    )


# ---------------------------------------------------------------------------
# subcommands

def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    p, c = cfg.params, cfg.costs
    cal = gfunc.solve_gamma(cfg.constraint_C, p, c)
    target = cfg.constraint_C - c.c1 - c.ce * (p.mu_x**2 + p.sigma_x**2)
    doc = {
        "regime": cal.regime.value,
        "gamma": cal.gamma,
        "C": cal.C,
        "C_max": admissible_cost_bound(p, c),
        "G_at_gamma": None if cal.gamma is None else gfunc.g_eval(cal.gamma, p, c),
        "target": target,
        "decision": cal.decision,
        "estimate": cal.estimate,
    }
    _write_json(doc, args.out)
    return 0


def cmd_gtable(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if cfg.grid is None:
        raise ConfigError("gtable requires a 'grid' section in the config")
    p, c = cfg.params, cfg.costs
    rows = []
    failures = 0
    for U in cfg.grid.values():
        U = float(U)
        pt = gfunc.g_point(U, p, c)
        if U == 0.0:
            rows.append([U, pt.g, pt.V1, pt.V2, pt.G, None, None])
            continue
        try:
            gq = gfunc.g_eval_quadrature(U, p, c, tol=_GTABLE_QUAD_TOL)
            rows.append([U, pt.g, pt.V1, pt.V2, pt.G, gq, abs(pt.G - gq)])
        except QuadratureNonConvergence:
            failures += 1
            rows.append([U, pt.g, pt.V1, pt.V2, pt.G, None, None])
    _write_csv(["U", "g", "V1", "V2", "G", "G_quadrature", "abs_diff"], rows, args.out)
    if failures:
        print(f"gtable: quadrature failed on {failures} grid point(s)", file=sys.stderr)
        return 3
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    p, c = cfg.params, cfg.costs
    truth = Hypothesis[args.truth]
    scen = sim.ScenarioConfig(
        truth=truth, params=p, costs=c, channel=cfg.channel,
        master_seed=cfg.master_seed, reps=1, t_max=cfg.t_max,
    )
    x, y, h = sim.sample_scenario(scen, 0)
    if args.x_override is not None:
        if not math.isfinite(args.x_override):
            raise ConfigError(f"--x-override must be finite, got {args.x_override}")
        y = y + (args.x_override - x) * h
        x = args.x_override

    cal = gfunc.solve_gamma(cfg.constraint_C, p, c)
    y_list, h_list = y.tolist(), h.tolist()
    out = engine.run_sequential(zip(y_list, h_list), cal, p, c, cfg.t_max)

    doc = {
        "T": out.T,
        "decision": out.decision,
        "estimate": out.estimate,
        "U_T": out.U_T,
        "V_T": out.V_T,
        "logL_T": out.logL_T,
        "predicted_cost": out.predicted_cost,
    }
    _write_json(doc, args.out)

    trace = []
    s = stats.init()
    for t in range(out.T):
        s = stats.update(s, y_list[t], h_list[t])
        trace.append([s.t, h_list[t], y_list[t], s.U, s.V,
                      stats.log_likelihood_ratio(s, p), stats.estimate(s, p)])
    _write_csv(["t", "h", "y", "U", "V", "logL", "xhat"], trace,
               _sidecar(args.out, "trace"))
    return 0


def _rep_rows(arm: sim._ArmSamples, arm_tag: int) -> list[list]:
    rows = []
    err_d1, err_d0 = sim._squared_errors(arm, arm.decision)
    for rep in range(len(arm.x)):
        d = bool(arm.decision[rep])
        rows.append([
            rep, arm_tag, float(arm.x[rep]), int(d),
            float(arm.xhat[rep]) if d else None,
            float(err_d1[rep] if d else err_d0[rep]),
        ])
    return rows


def cmd_montecarlo(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    cal = gfunc.solve_gamma(cfg.constraint_C, cfg.params, cfg.costs)
    pair = _scenario_pair(cfg)
    report, arm0, arm1 = sim._monte_carlo_samples(pair, cal, workers=args.workers)
    _write_json(_report_dict(report), args.out)
    rows = _rep_rows(arm0, 0) + _rep_rows(arm1, 1)
    _write_csv(["rep", "arm", "x", "decision", "estimate", "sq_err"], rows,
               _sidecar(args.out, "reps"))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    cal = gfunc.solve_gamma(cfg.constraint_C, cfg.params, cfg.costs)
    joint, separate = sim.compare_schemes(_scenario_pair(cfg), cal, workers=args.workers)
    diff = joint.combined - separate.combined
    diff_se = math.sqrt(joint.combined_se**2 + separate.combined_se**2)
    doc = {
        "joint": _report_dict(joint),
        "separate": _report_dict(separate),
        "difference": {"value": diff, "stderr": diff_se},
    }
    _write_json(doc, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqjde",
        description="Sequential joint detection and estimation: calibration, "
                    "simulation, and Monte Carlo validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, mc=False):
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", required=True, help="output path (JSON or CSV)")
        if mc:
            sp.add_argument("--seed", type=int, default=None,
                            help="override mc.master_seed")
            sp.add_argument("--reps", type=int, default=None, help="override mc.reps")
            sp.add_argument("--workers", type=int, default=1,
                            help="worker threads for replications")

    common(sub.add_parser("calibrate", help="solve the stopping threshold"))
    common(sub.add_parser("gtable", help="tabulate the energy-cost function on a grid"))
    sp = sub.add_parser("simulate", help="run one replication with a full trace")
    common(sp)
    sp.add_argument("--truth", required=True, choices=["H0", "H1"])
    sp.add_argument("--x-override", type=float, default=None, dest="x_override",
                    help="force the amplitude instead of drawing it")
    sp.add_argument("--seed", type=int, default=None, help="override mc.master_seed")
    common(sub.add_parser("montecarlo", help="estimate all cost terms by Monte Carlo"),
           mc=True)
    common(sub.add_parser("compare", help="joint rule versus separate detect-then-estimate"),
           mc=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "calibrate": cmd_calibrate,
        "gtable": cmd_gtable,
        "simulate": cmd_simulate,
        "montecarlo": cmd_montecarlo,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ChannelFileError, InvalidCosts, InfeasibleConstraint) as exc:
        print(f"seqjde: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, QuadratureNonConvergence) as exc:
        print(f"seqjde: {exc}", file=sys.stderr)
        return 3
    except HorizonExhausted as exc:
        print(f"seqjde: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
