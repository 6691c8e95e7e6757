"""Reproducible parallel ensembles of path functionals and KS comparisons.

Replica ``i`` at size ``N`` runs with seed ``mix64(base_seed, N, i)``. The
seed depends on nothing else, so results are identical for any worker count
or chunking, and the first M replicas of a larger job equal a smaller job.
"""

from __future__ import annotations

import json
import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError, SaddleLabError
from .flow import saddle_frame, stable_asymptotics, stable_point, unstable_asymptotics
from .fluct import LimitLaw, sigma_infinity
from .models import DiffusionModel
from .sim import (StopRule, default_stop, hitting_time_theta, pivot_time, rescaled_Z,
                  simulate_diffusion, simulate_jump)

MASK64 = (1 << 64) - 1
KS_CRIT95 = 1.358
MAX_FAIL_FRACTION = 0.01


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64(base_seed: int, N: int, i: int) -> int:
    """Chain the splitmix64 finalizer over (base_seed, N, i)."""
    h = _splitmix64(int(base_seed) & MASK64)
    h = _splitmix64(h ^ (int(N) & MASK64))
    return _splitmix64(h ^ (int(i) & MASK64))


FUNCTIONAL_KINDS = ("hit_norm", "hit_time", "hit_side", "min_dist", "survivors", "rescaled_Z")


@dataclass(frozen=True)
class FunctionalSpec:
    """A rescaled path functional.

    hit_norm: N^{mu/(2(lam+mu))} |X_{T_theta}|; hit_time: T_theta - t_N;
    hit_side: sign of X_{T_theta,2}; min_dist: N^{mu/(2(lam+mu))} inf |X_t|
    up to the exit lines |y2| = exit_level; survivors: N^{-3/4} S^N;
    rescaled_Z: N^{1/2} e^{-lam t_N} X_{t_N,2}.
    """

    kind: str
    theta: float | None = None
    exit_level: float = 0.5

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise ParameterError(f"unknown functional {self.kind!r}")
        if self.kind.startswith("hit_"):
            if self.theta is None or not (0.0 < self.theta < math.pi / 2):
                raise ParameterError("hitting functionals need theta in (0, pi/2)")


@dataclass(eq=False)
class EnsembleJob:
    model: object
    N_list: list
    M: int
    functional: FunctionalSpec
    base_seed: int = 0
    law: LimitLaw | None = None
    dt: float | None = None  # Euler-Maruyama step; None for exact jump simulation

    def __post_init__(self):
        if self.M < 100:
            raise ParameterError("M must be at least 100")
        if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise ParameterError("N_list must be strictly increasing")


@dataclass
class SampleSet:
    N: int
    M: int
    values: np.ndarray
    seed_provenance: dict
    summary: dict
    ks_vs_law: float | None = None
    n_failed: int = 0
    failures: dict = field(default_factory=dict)
    by_replica: np.ndarray | None = None

    @property
    def failed(self) -> bool:
        return self.n_failed > MAX_FAIL_FRACTION * self.M

    def to_json(self) -> dict:
        return {
            "N": self.N, "M": self.M, "n_values": int(len(self.values)),
            "n_failed": self.n_failed, "failures": self.failures, "failed": self.failed,
            "seed_provenance": self.seed_provenance, "summary": self.summary,
            "ks_vs_law": self.ks_vs_law,
        }

    def values_csv(self) -> str:
        return "value\n" + "".join(f"{v!r}\n" for v in self.values.tolist())


def _summarize(values: np.ndarray) -> dict:
    if len(values) == 0:
        return {}
    q = np.quantile(values, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {
        "mean": float(np.mean(values)),
        "variance": float(np.var(values, ddof=1)) if len(values) > 1 else 0.0,
        "quantiles": {k: float(v) for k, v in zip(("0.05", "0.25", "0.5", "0.75", "0.95"), q)},
    }


def empirical_cdf(s, x: float) -> float:
    values = s.values if isinstance(s, SampleSet) else np.asarray(s)
    if len(values) == 0:
        raise InputError("empty sample")
    return float(np.searchsorted(np.sort(values), x, side="right")) / len(values)


def ks_distance(s, law) -> float:
    """Exact one-sample KS statistic of the sample against ``law`` (LimitLaw or CDF)."""
    values = s.values if isinstance(s, SampleSet) else np.asarray(s, dtype=float)
    M = len(values)
    if M == 0:
        raise InputError("empty sample")
    x = np.sort(values)
    F = law.cdf(x) if hasattr(law, "cdf") else law(x)
    i = np.arange(1, M + 1)
    return float(max(np.max(i / M - F), np.max(F - (i - 1) / M)))


def ks_crit95(M: int) -> float:
    return KS_CRIT95 / math.sqrt(M)


# ---------------------------------------------------------------- replicas

@dataclass(eq=False)
class _Context:
    model: object
    frame: object
    functionals: tuple
    dt: float | None
    xbar0: float = 0.0


def make_context(model, functionals, dt=None) -> _Context:
    base = model.base if isinstance(model, DiffusionModel) else model
    frame = saddle_frame(base)
    return _Context(model=model, frame=frame, functionals=tuple(functionals), dt=dt)


def _stop_for(ctx: _Context, N: int) -> StopRule:
    frame = ctx.frame
    model = ctx.model
    kinds = {f.kind for f in ctx.functionals}
    thetas = {f.theta for f in ctx.functionals if f.kind.startswith("hit_")}
    if len(thetas) > 1:
        raise ParameterError("one ensemble can track a single theta")
    theta = thetas.pop() if thetas else None
    t_N = pivot_time(frame, N)
    horizon = math.log(N) / (2 * frame.lam) + 10.0 / frame.lam
    if model.terminate_on_zero:
        horizon = math.inf if ctx.dt is None else horizon
    lines = ()
    if "min_dist" in kinds:
        lvl = max(f.exit_level for f in ctx.functionals if f.kind == "min_dist")
        lines = (((0.0, lvl), (1.0, 0.0)), ((0.0, -lvl), (1.0, 0.0)))
    only_z = kinds == {"rescaled_Z"}
    only_hit = kinds <= {"hit_norm", "hit_time", "hit_side"}
    t_max = t_N if only_z else horizon
    return StopRule(t_max=t_max, terminate=True,
                    eps_extinction=default_stop(model, N, frame).eps_extinction,
                    theta=theta, stop_on_theta=only_hit, lines=lines, record=False,
                    sample_times=(t_N,) if "rescaled_Z" in kinds else ())


def _replica(ctx: _Context, N: int, seed: int):
    """Values of every functional for one replica (NaN plus reason on failure)."""
    stop = _stop_for(ctx, N)
    if ctx.dt is None:
        tr = simulate_jump(ctx.model, N, seed, stop, ctx.frame)
    else:
        tr = simulate_diffusion(ctx.model, N, ctx.dt, seed, stop, ctx.frame)
    frame = ctx.frame
    lam, mu = frame.lam, frame.mu
    scale = N ** (mu / (2 * (lam + mu)))
    reason = tr.summary["reason"]
    out = []
    for f in ctx.functionals:
        try:
            if f.kind.startswith("hit_"):
                h = hitting_time_theta(tr, f.theta)
                if not h.aux["hit"]:
                    out.append((math.nan, f"not_hit:{reason}"))
                    continue
                if f.kind == "hit_norm":
                    v = scale * float(np.hypot(*h.aux["state"]))
                elif f.kind == "hit_time":
                    v = h.value - pivot_time(frame, N)
                else:
                    v = float(h.aux["side"])
            elif f.kind == "min_dist":
                if reason != "line_crossing":
                    out.append((math.nan, f"no_exit:{reason}"))
                    continue
                v = scale * tr.summary["min_norm"]
            elif f.kind == "survivors":
                if reason != "terminated":
                    out.append((math.nan, f"not_terminated:{reason}"))
                    continue
                v = float(np.max(np.abs(tr.summary["final_counts"]))) * N ** -0.75
            else:
                v = rescaled_Z(tr, pivot_time(frame, N))
            out.append((float(v), None))
        except SaddleLabError as exc:
            out.append((math.nan, type(exc).__name__))
    return out


def _run_chunk(args):
    ctx, N, seeds = args
    return [_replica(ctx, N, s) for s in seeds]


_FORK_CTX = None


def _set_fork_ctx(ctx):
    global _FORK_CTX
    _FORK_CTX = ctx


def _run_chunk_forked(args):
    N, seeds = args
    return [_replica(_FORK_CTX, N, s) for s in seeds]


def run_replicas(ctx: _Context, N: int, seeds: list, workers: int = 1):
    """Per-replica results in seed order, independent of ``workers``."""
    if workers <= 1 or len(seeds) < 2:
        return _run_chunk((ctx, N, seeds))
    n_chunks = min(len(seeds), 4 * workers)
    bounds = np.linspace(0, len(seeds), n_chunks + 1).astype(int)
    chunks = [seeds[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    try:
        mpctx = mp.get_context("fork")
        _set_fork_ctx(ctx)
        with ProcessPoolExecutor(max_workers=workers, mp_context=mpctx) as ex:
            parts = list(ex.map(_run_chunk_forked, [(N, c) for c in chunks]))
    except ValueError:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, [(ctx, N, c) for c in chunks]))
    return [r for part in parts for r in part]


def _sample_set(N, M, base_seed, column, law) -> SampleSet:
    vals = np.array([v for v, _ in column], dtype=float)
    fails = {}
    for _, why in column:
        if why is not None:
            fails[why] = fails.get(why, 0) + 1
    ok = vals[~np.isnan(vals)]
    ok.sort()
    ks = ks_distance(ok, law) if (law is not None and len(ok)) else None
    return SampleSet(
        N=int(N), M=int(M), values=ok,
        seed_provenance={"base_seed": int(base_seed),
                         "derivation": "seed_i = mix64(base_seed, N, i), splitmix64 chain"},
        summary=_summarize(ok), ks_vs_law=ks, n_failed=int(M - len(ok)), failures=fails,
        by_replica=vals)


def run_multi(model, N_list, M, functionals, base_seed=0, laws=None, dt=None, workers=1):
    """Several functionals from the same replicas; returns {kind: [SampleSet per N]}."""
    ctx = make_context(model, functionals, dt)
    laws = laws or {}
    out = {f.kind: [] for f in functionals}
    for N in N_list:
        seeds = [mix64(base_seed, N, i) for i in range(M)]
        rows = run_replicas(ctx, N, seeds, workers)
        for j, f in enumerate(functionals):
            out[f.kind].append(_sample_set(N, M, base_seed, [r[j] for r in rows],
                                           laws.get(f.kind)))
    return out


def run_ensemble(job: EnsembleJob, workers: int = 1) -> list:
    res = run_multi(job.model, job.N_list, job.M, [job.functional], job.base_seed,
                    {job.functional.kind: job.law}, job.dt, workers)
    return res[job.functional.kind]


def law_for(model, functional: FunctionalSpec, stable_distance: float | None = None) -> LimitLaw:
    """Limit law of a rescaled functional, from the model's flow asymptotics."""
    base = model.base if isinstance(model, DiffusionModel) else model
    frame = saddle_frame(base)
    x0 = frame.to_canonical(base.initial_state)
    d = float(np.hypot(*x0)) if stable_distance is None else stable_distance
    sa = stable_asymptotics(frame, stable_point(frame, d))
    sigma = math.sqrt(sigma_infinity(frame, sa, model).sigma_inf_sq)
    lam, mu = frame.lam, frame.mu
    k = functional.kind
    if k == "hit_norm":
        return LimitLaw.hit_norm(lam, mu, sa.xbar0, sigma, functional.theta)
    if k == "hit_time":
        return LimitLaw.hit_time_shift(lam, mu, sa.xbar0, sigma, functional.theta)
    if k == "min_dist":
        return LimitLaw.min_dist(lam, mu, sa.xbar0, sigma)
    if k == "survivors":
        return LimitLaw.survivors(sigma)
    raise ParameterError(f"no closed-form law for {k!r}")


# ---------------------------------------------------------------- output

def ks_report_rows(sets: list) -> list:
    rows = []
    for s in sets:
        n = len(s.values)
        crit = ks_crit95(n) if n else math.nan
        ok = (not s.failed) and s.ks_vs_law is not None and s.ks_vs_law <= crit
        rows.append({"N": s.N, "M": s.M, "ks": s.ks_vs_law, "crit95": crit, "pass": ok})
    return rows


def ks_report_csv(sets: list) -> str:
    lines = ["N,M,ks,crit95,pass"]
    for r in ks_report_rows(sets):
        lines.append(f"{r['N']},{r['M']},{r['ks']!r},{r['crit95']!r},{str(r['pass']).lower()}")
    return "\n".join(lines) + "\n"


def summary_json(sets: list) -> str:
    return json.dumps([s.to_json() for s in sets], indent=2)
