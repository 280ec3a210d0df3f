"""Channel generators, scenario sampling, and Monte Carlo cost estimation.

All error probabilities and squared-error terms are estimated conditionally
on one realized gain path: the path is generated from the channel model and
master seed alone, every replication reuses it, and only the amplitude and
the noise are redrawn per replication.  The stopping index is therefore
identical across replications of a run.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from . import engine, stats
from .errors import ChannelFileError, HorizonExhausted, InvalidCosts
from .gfunc import Calibration, Regime
from .model import CostWeights, Hypothesis, ModelParams

# Stream tags keeping the channel draw independent of every replication draw.
_H0_STREAM = 0
_H1_STREAM = 1
_CHANNEL_STREAM = 2


@dataclass(frozen=True)
class Constant:
    h: float

    def __post_init__(self):
        if not (isinstance(self.h, (int, float)) and math.isfinite(self.h)) or self.h == 0:
            raise ValueError(f"constant gain must be finite and nonzero, got {self.h!r}")


@dataclass(frozen=True)
class IidGaussian:
    std: float

    def __post_init__(self):
        if not (isinstance(self.std, (int, float)) and math.isfinite(self.std) and self.std > 0):
            raise ValueError(f"gain std must be finite and positive, got {self.std!r}")


@dataclass(frozen=True)
class Rayleigh:
    """Gain is the magnitude of a circular complex Gaussian; ``scale`` is the
    per-component standard deviation."""

    scale: float

    def __post_init__(self):
        if not (isinstance(self.scale, (int, float)) and math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"Rayleigh scale must be finite and positive, got {self.scale!r}")


@dataclass(frozen=True)
class Ar1:
    phi: float
    innov_std: float
    init_std: float

    def __post_init__(self):
        if not (isinstance(self.phi, (int, float)) and math.isfinite(self.phi) and abs(self.phi) < 1):
            raise ValueError(f"AR(1) coefficient must satisfy |phi| < 1, got {self.phi!r}")
        for name in ("innov_std", "init_std"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v!r}")


@dataclass(frozen=True)
class FromFile:
    """Plain-text gain path, one decimal value per line, '#' comments allowed."""

    path: str


ChannelModel = Union[Constant, IidGaussian, Rayleigh, Ar1, FromFile]


@dataclass(frozen=True)
class ScenarioConfig:
    truth: Hypothesis
    params: ModelParams
    costs: CostWeights
    channel: ChannelModel
    master_seed: int
    reps: int
    t_max: int

    def __post_init__(self):
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int) \
                or self.master_seed < 0:
            raise ValueError(f"master_seed must be a nonnegative integer, got {self.master_seed!r}")
        if not isinstance(self.reps, int) or self.reps < 1:
            raise ValueError(f"reps must be a positive integer, got {self.reps!r}")
        if not isinstance(self.t_max, int) or self.t_max < 1:
            raise ValueError(f"t_max must be a positive integer, got {self.t_max!r}")


@dataclass(frozen=True)
class CostReport:
    """Plug-in Monte Carlo estimates of the combined cost and its pieces.

    Probabilities carry binomial standard errors; squared-error terms carry
    sample standard errors.  ``combined`` is assembled exactly from the other
    fields as c0*p0_d1 + c1*p1_d0 + ce*(mse_d1 + mse_d0).
    """

    reps: int
    p0_d1: float
    p0_d1_se: float
    p1_d0: float
    p1_d0_se: float
    mse_d1: float
    mse_d1_se: float
    mse_d0: float
    mse_d0_se: float
    combined: float
    combined_se: float
    predicted: float
    constraint_C: float


def _parse_channel_file(path: str, t_max: int) -> np.ndarray:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ChannelFileError(f"cannot read channel file {path!r}: {exc}") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            values.append(float(body))
        except ValueError:
            raise ChannelFileError(
                f"channel file {path!r} line {lineno}: cannot parse {body!r}"
            ) from None
    if len(values) < t_max:
        raise ChannelFileError(
            f"channel file {path!r} has {len(values)} values, need t_max={t_max}"
        )
    return np.asarray(values[:t_max], dtype=float)


def gen_channel(model: ChannelModel, seed: int, t_max: int) -> np.ndarray:
    """Deterministic length-``t_max`` gain path for (model, seed)."""
    if not isinstance(t_max, int) or t_max < 1:
        raise ValueError(f"t_max must be a positive integer, got {t_max!r}")
    if isinstance(model, FromFile):
        return _parse_channel_file(model.path, t_max)
    if isinstance(model, Constant):
        return np.full(t_max, float(model.h))

    rng = np.random.default_rng(np.random.SeedSequence([seed, _CHANNEL_STREAM]))
    if isinstance(model, IidGaussian):
        return rng.normal(0.0, model.std, size=t_max)
    if isinstance(model, Rayleigh):
        re = rng.normal(0.0, model.scale, size=t_max)
        im = rng.normal(0.0, model.scale, size=t_max)
        return np.hypot(re, im)
    if isinstance(model, Ar1):
        innov = rng.normal(0.0, model.innov_std, size=t_max)
        h = np.empty(t_max)
        h[0] = rng.normal(0.0, model.init_std)
        for t in range(1, t_max):
            h[t] = model.phi * h[t - 1] + innov[t]
        return h
    raise TypeError(f"unknown channel model: {model!r}")


def _rep_rng(master_seed: int, truth: Hypothesis, rep_index: int) -> np.random.Generator:
    arm = _H1_STREAM if truth is Hypothesis.H1 else _H0_STREAM
    return np.random.default_rng(np.random.SeedSequence([master_seed, arm, rep_index]))


def sample_scenario(cfg: ScenarioConfig, rep_index: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Draw one replication: amplitude, observation path, and the shared gain path.

    The gain path depends only on (channel, master_seed); the amplitude and
    noise come from a replication-specific stream, so replications are
    independent conditionally on the one realized path.
    """
    if not 0 <= rep_index < cfg.reps:
        raise ValueError(f"rep_index {rep_index} out of range [0, {cfg.reps})")
    h = gen_channel(cfg.channel, cfg.master_seed, cfg.t_max)
    rng = _rep_rng(cfg.master_seed, cfg.truth, rep_index)
    if cfg.truth is Hypothesis.H1:
        x = rng.normal(cfg.params.mu_x, cfg.params.sigma_x)
    else:
        x = 0.0
    w = rng.normal(0.0, cfg.params.sigma, size=cfg.t_max)
    y = x * h + w
    return x, y, h


@dataclass
class _ArmSamples:
    """Per-replication terminal data for one truth arm (shared T and U_T)."""

    truth: Hypothesis
    T: int
    U_T: float
    predicted: float
    x: np.ndarray
    V: np.ndarray
    logL: np.ndarray
    xhat: np.ndarray
    decision: np.ndarray  # bool, the estimation-aware rule


def _stopping_index(h: np.ndarray, cal: Calibration, t_max: int) -> int:
    """First index t with cumulative energy >= gamma; 0 in the prior regime."""
    if cal.regime is Regime.STOP_AT_ZERO:
        return 0
    energy = np.cumsum(h * h)
    idx = int(np.searchsorted(energy, cal.gamma, side="left"))
    if idx >= len(energy):
        raise HorizonExhausted(
            f"gain path energy {energy[-1] if len(energy) else 0.0} never reaches "
            f"threshold {cal.gamma} within t_max={t_max}",
            t=t_max, U=float(energy[-1]) if len(energy) else 0.0,
            gamma=cal.gamma, rep_index=0,
        )
    return idx + 1


def _run_arm(cfg: ScenarioConfig, cal: Calibration, workers: int = 1) -> _ArmSamples:
    p, c = cfg.params, cfg.costs
    h = gen_channel(cfg.channel, cfg.master_seed, cfg.t_max)
    T = _stopping_index(h, cal, cfg.t_max)
    h_prefix = h[:T].tolist()

    n = cfg.reps
    xs = np.zeros(n)
    Vs = np.zeros(n)
    logLs = np.zeros(n)
    xhats = np.zeros(n)
    decisions = np.zeros(n, dtype=bool)
    shared: dict[str, engine.TripletOutcome] = {}

    def run_range(lo: int, hi: int) -> None:
        for rep in range(lo, hi):
            rng = _rep_rng(cfg.master_seed, cfg.truth, rep)
            if cfg.truth is Hypothesis.H1:
                x = float(rng.normal(p.mu_x, p.sigma_x))
            else:
                x = 0.0
            w = rng.normal(0.0, p.sigma, size=T)
            y = (x * h[:T] + w).tolist()
            out = engine.run_sequential(zip(y, h_prefix), cal, p, c, cfg.t_max)
            xs[rep] = x
            Vs[rep] = out.V_T
            logLs[rep] = out.logL_T
            decisions[rep] = out.decision is Hypothesis.H1
            if out.estimate is not None:
                xhats[rep] = out.estimate
            else:
                terminal = stats.SufficientStats(t=out.T, U=out.U_T, V=out.V_T)
                xhats[rep] = stats.estimate(terminal, p)
            if rep == 0:
                shared["out"] = out

    if workers <= 1:
        run_range(0, n)
    else:
        chunk = (n + workers - 1) // workers
        bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(run_range, lo, hi) for lo, hi in bounds]:
                fut.result()

    # terminal index, energy, and prediction are gain-path properties shared
    # by every replication; take them from the first outcome
    out0 = shared["out"]
    return _ArmSamples(
        truth=cfg.truth, T=out0.T, U_T=out0.U_T, predicted=out0.predicted_cost,
        x=xs, V=Vs, logL=logLs, xhat=xhats, decision=decisions,
    )


def _validate_pair(cfg0: ScenarioConfig, cfg1: ScenarioConfig) -> None:
    if cfg0.truth is not Hypothesis.H0 or cfg1.truth is not Hypothesis.H1:
        raise ValueError("config pair must be (H0 scenario, H1 scenario)")
    for field in ("params", "costs", "channel", "master_seed", "t_max", "reps"):
        if getattr(cfg0, field) != getattr(cfg1, field):
            raise ValueError(f"config pair must share {field}")


def _squared_errors(arm: _ArmSamples, decision: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    err_d1 = np.where(decision, (arm.xhat - arm.x) ** 2, 0.0)
    err_d0 = np.where(decision, 0.0, arm.x**2)
    return err_d1, err_d0


def _assemble_report(arm0: _ArmSamples, arm1: _ArmSamples,
                     d0: np.ndarray, d1: np.ndarray,
                     c: CostWeights, constraint_C: float) -> CostReport:
    n0 = len(d0)
    n1 = len(d1)
    p0 = float(np.mean(d0))
    p0_se = math.sqrt(p0 * (1.0 - p0) / n0)
    miss = ~d1
    p1 = float(np.mean(miss))
    p1_se = math.sqrt(p1 * (1.0 - p1) / n1)

    err_d1, err_d0 = _squared_errors(arm1, d1)
    mse_d1 = float(np.mean(err_d1))
    mse_d1_se = float(np.std(err_d1, ddof=1) / math.sqrt(n1))
    mse_d0 = float(np.mean(err_d0))
    mse_d0_se = float(np.std(err_d0, ddof=1) / math.sqrt(n1))

    combined = c.c0 * p0 + c.c1 * p1 + c.ce * (mse_d1 + mse_d0)
    h1_cost = c.c1 * miss + c.ce * (err_d1 + err_d0)
    combined_var = (c.c0**2) * np.var(d0.astype(float), ddof=1) / n0 \
        + np.var(h1_cost, ddof=1) / n1
    combined_se = math.sqrt(float(combined_var))

    return CostReport(
        reps=n1,
        p0_d1=p0, p0_d1_se=p0_se,
        p1_d0=p1, p1_d0_se=p1_se,
        mse_d1=mse_d1, mse_d1_se=mse_d1_se,
        mse_d0=mse_d0, mse_d0_se=mse_d0_se,
        combined=combined, combined_se=combined_se,
        predicted=arm1.predicted, constraint_C=constraint_C,
    )


def _monte_carlo_samples(
    cfg_pair: tuple[ScenarioConfig, ScenarioConfig], cal: Calibration, workers: int = 1,
) -> tuple[CostReport, _ArmSamples, _ArmSamples]:
    cfg0, cfg1 = cfg_pair
    _validate_pair(cfg0, cfg1)
    arm0 = _run_arm(cfg0, cal, workers)
    arm1 = _run_arm(cfg1, cal, workers)
    report = _assemble_report(arm0, arm1, arm0.decision, arm1.decision,
                              cfg1.costs, cal.C)
    return report, arm0, arm1


def monte_carlo(cfg_pair: tuple[ScenarioConfig, ScenarioConfig], cal: Calibration,
                workers: int = 1) -> CostReport:
    """Estimate the combined cost of the calibrated triplet on a shared gain path.

    Runs the sequential engine once per replication under each truth; the
    stopping index and terminal energy are common to all replications because
    the gain path is shared.  Identical configs give bit-identical reports
    regardless of ``workers``.
    """
    report, _, _ = _monte_carlo_samples(cfg_pair, cal, workers)
    return report


def separate_decide(s: stats.SufficientStats, p: ModelParams, c: CostWeights) -> Hypothesis:
    """Estimation-blind baseline: plain likelihood ratio test at threshold c0/c1."""
    if c.c1 <= 0 or c.c0 <= 0:
        raise InvalidCosts("separate detection needs c0 > 0 and c1 > 0")
    if stats.log_likelihood_ratio(s, p) >= math.log(c.c0 / c.c1):
        return Hypothesis.H1
    return Hypothesis.H0


def _separate_decisions(arm: _ArmSamples, p: ModelParams, c: CostWeights) -> np.ndarray:
    if c.c1 <= 0 or c.c0 <= 0:
        raise InvalidCosts("separate detection needs c0 > 0 and c1 > 0")
    return arm.logL >= math.log(c.c0 / c.c1)


def compare_schemes(
    cfg_pair: tuple[ScenarioConfig, ScenarioConfig], cal: Calibration, workers: int = 1,
) -> tuple[CostReport, CostReport]:
    """Joint rule versus the separate detect-then-estimate baseline.

    Both schemes share the stopping index, the estimator, and every
    replication draw; only the decision rule differs.
    """
    cfg0, cfg1 = cfg_pair
    _validate_pair(cfg0, cfg1)
    arm0 = _run_arm(cfg0, cal, workers)
    arm1 = _run_arm(cfg1, cal, workers)
    joint = _assemble_report(arm0, arm1, arm0.decision, arm1.decision,
                             cfg1.costs, cal.C)
    sep0 = _separate_decisions(arm0, cfg0.params, cfg0.costs)
    sep1 = _separate_decisions(arm1, cfg1.params, cfg1.costs)
    separate = _assemble_report(arm0, arm1, sep0, sep1, cfg1.costs, cal.C)
    return joint, separate
