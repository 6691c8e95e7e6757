"""Command-line front end.

    saddle-lab {sigma,simulate,verify,asymptotics,crossing} [--config FILE] [flags]

A JSON config file supplies defaults, command-line flags override it, and
``SADDLE_LAB_SEED`` overrides ``base_seed``. Exit status: 0 success,
1 numerical or statistical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError, SaddleLabError
from .flow import (saddle_frame, stable_asymptotics, stable_point, unstable_asymptotics,
                   unstable_crossing)
from .fluct import sigma_infinity
from .models import DiffusionModel, build_model
from .montecarlo import (FUNCTIONAL_KINDS, FunctionalSpec, ks_report_csv, ks_report_rows,
                         law_for, run_multi, summary_json)
from .sim import StopRule, default_stop, simulate_diffusion, simulate_jump

SEED_ENV = "SADDLE_LAB_SEED"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    model: str = "okcorral"
    params: dict = field(default_factory=dict)
    diffusion: bool = False
    noise: float = 1.0
    N: int = 1000
    N_list: list = field(default_factory=lambda: [1000, 10000, 100000])
    M: int = 4000
    functional: str = "survivors"
    theta: float | None = None
    t0: float = 1.0
    t_max: float | None = None
    dt: float = 1e-3
    base_seed: int = 0
    stable_distance: float | None = None
    unstable_distance: float = 0.1
    z_exponents: list = field(default_factory=lambda: [3, 4, 5, 6, 7, 8])
    z_base: float = 4.0
    z_direction: list = field(default_factory=lambda: [0.0, 1.0])
    method: str = "matched"
    workers: int = 1
    output: str = "-"
    format: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig.from_dict(data)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            cfg.base_seed = int(env, 0)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return cfg


def _clean(obj):
    # plain Python scalars so json writes round-trip reprs
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _emit(cfg: RunConfig, text: str):
    if cfg.output in ("-", "", None):
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)


def _model(cfg: RunConfig):
    return build_model(cfg.model, cfg.params, diffusion=cfg.diffusion, noise=cfg.noise)


def _stable(frame, cfg: RunConfig):
    base = frame.model
    d = cfg.stable_distance
    if d is None:
        d = float(np.hypot(*frame.to_canonical(base.initial_state)))
    return stable_asymptotics(frame, stable_point(frame, d))


def _frame(model):
    return saddle_frame(model)


def cmd_sigma(cfg: RunConfig) -> int:
    model = _model(cfg)
    frame = _frame(model)
    rep = sigma_infinity(frame, _stable(frame, cfg))
    _emit(cfg, _dumps(rep.to_json()))
    return 0


def cmd_asymptotics(cfg: RunConfig) -> int:
    model = _model(cfg)
    frame = _frame(model)
    sa = _stable(frame, cfg)
    ua = unstable_asymptotics(frame, cfg.unstable_distance)
    rep = sigma_infinity(frame, sa)
    out = {
        "model": model.name, "p": frame.p, "R": frame.R,
        "lambda": frame.lam, "mu": frame.mu,
        "x0": sa.x0, "xbar0": sa.xbar0, "D0": sa.D0,
        "x_inf_plus": ua.x_inf_plus, "x_inf_minus": ua.x_inf_minus,
        "xbar_inf_plus": ua.xbar_inf_plus, "xbar_inf_minus": ua.xbar_inf_minus,
        "D_inf": ua.D_inf, "sigma_inf_sq": rep.sigma_inf_sq,
    }
    _emit(cfg, _dumps(out))
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    model = _model(cfg)
    base = model.base if isinstance(model, DiffusionModel) else model
    frame = _frame(base)
    stop = default_stop(base, cfg.N, frame)
    if cfg.t_max is not None:
        stop = StopRule(t_max=cfg.t_max, eps_extinction=stop.eps_extinction)
    if isinstance(model, DiffusionModel):
        tr = simulate_diffusion(model, cfg.N, cfg.dt, cfg.base_seed, stop, frame)
    else:
        tr = simulate_jump(model, cfg.N, cfg.base_seed, stop, frame)
    _emit(cfg, tr.to_csv())
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.functional not in FUNCTIONAL_KINDS or cfg.functional in ("hit_side", "rescaled_Z"):
        raise UsageError(f"verify needs a functional with a closed-form law, got {cfg.functional!r}")
    theta = cfg.theta
    if cfg.functional.startswith("hit_"):
        if theta is None:
            theta = math.pi / 4
        if not (0.0 < theta < math.pi / 2):
            raise UsageError(f"theta must lie in (0, pi/2), got {theta}")
    model = _model(cfg)
    spec = FunctionalSpec(cfg.functional, theta=theta)
    law = law_for(model, spec, cfg.stable_distance)
    dt = cfg.dt if cfg.diffusion else None
    sets = run_multi(model, list(cfg.N_list), cfg.M, [spec], cfg.base_seed,
                     {spec.kind: law}, dt, cfg.workers)[spec.kind]
    _emit(cfg, ks_report_csv(sets))
    if cfg.output not in ("-", "", None):
        with open(cfg.output + ".summary.json", "w") as fh:
            fh.write(summary_json(sets) + "\n")
    return 0 if all(r["pass"] for r in ks_report_rows(sets)) else 1


def cmd_crossing(cfg: RunConfig) -> int:
    model = _model(cfg)
    frame = _frame(model)
    sa = _stable(frame, cfg)
    ua = unstable_asymptotics(frame, cfg.unstable_distance)
    direction = np.asarray(cfg.z_direction, dtype=float)
    direction = direction / np.hypot(*direction)
    lines = ["abs_z,s_z,timing_error,point_error,status"]
    for k in cfg.z_exponents:
        size = float(cfg.z_base) ** (-k)
        z = size * direction
        if float(sa.D0 @ z) == 0.0:
            lines.append(f"{size!r},,,,skipped")
            continue
        c = unstable_crossing(frame, sa.x0 + z, ua, sa, method=cfg.method)
        lines.append(f"{size!r},{c.s!r},{c.timing_error!r},{c.point_error!r},ok")
    _emit(cfg, "\n".join(lines) + "\n")
    return 0


COMMANDS = {
    "sigma": cmd_sigma,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "asymptotics": cmd_asymptotics,
    "crossing": cmd_crossing,
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="saddle-lab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--model")
    ap.add_argument("--params", type=json.loads, help="model parameters as a JSON object")
    ap.add_argument("--diffusion", action="store_const", const=True)
    ap.add_argument("--noise", type=float)
    ap.add_argument("--N", type=int)
    ap.add_argument("--N-list", dest="N_list", type=lambda s: [int(float(v)) for v in s.split(",")])
    ap.add_argument("--M", type=int)
    ap.add_argument("--functional")
    ap.add_argument("--theta", type=float)
    ap.add_argument("--t0", type=float)
    ap.add_argument("--t-max", dest="t_max", type=float)
    ap.add_argument("--dt", type=float)
    ap.add_argument("--base-seed", dest="base_seed", type=int)
    ap.add_argument("--stable-distance", dest="stable_distance", type=float)
    ap.add_argument("--unstable-distance", dest="unstable_distance", type=float)
    ap.add_argument("--method")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--output", "-o")
    ap.add_argument("--format")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except (UsageError, ParameterError, InputError, TypeError) as exc:
        print(f"saddle-lab: usage error: {exc}", file=sys.stderr)
        return 2
    except SaddleLabError as exc:
        print(f"saddle-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
