"""Exact jump simulation, Euler-Maruyama diffusion simulation and path functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import InputError, InsufficientSpanError, ParameterError, StateError
from .flow import CanonicalFrame, UnstableAsymptotics, flow_solution, saddle_frame
from .models import DiffusionModel, JumpModel

# relative slack when comparing a state's slope with tan(theta)
THETA_SLACK = K._ON_LINE
# beyond this many events only the accumulators are kept
STREAM_ABOVE = 10 ** 8


@dataclass(frozen=True)
class StopRule:
    """When a simulation ends; whichever condition fires first wins.

    ``theta`` is tracked whenever given and ends the run if ``stop_on_theta``.
    ``lines`` are canonical lines ``(q, w)`` = {q + r w}; crossing one ends the run.
    ``eps_extinction`` stops when a count falls below that fraction of its start.
    """

    t_max: float = math.inf
    terminate: bool = True
    eps_extinction: float = 0.0
    theta: float | None = None
    stop_on_theta: bool = False
    lines: tuple = ()
    record: bool = True
    max_events: int = 2 ** 62
    sample_times: tuple = ()


def default_stop(model, N: float, frame: CanonicalFrame | None = None, **overrides) -> StopRule:
    """Stop rule used when none is given: termination for models that have one,
    otherwise the horizon (1/(2 lam)) log N + 10/lam, plus 5% extinction for
    the competition model."""
    if model.terminate_on_zero:
        rule = StopRule()
    else:
        frame = frame or saddle_frame(model)
        t = math.log(N) / (2 * frame.lam) + 10.0 / frame.lam
        eps = 0.05 if model.kind == K.COMPETITION else 0.0
        rule = StopRule(t_max=t, eps_extinction=eps)
    return _replace(rule, **overrides)


def _replace(rule: StopRule, **kw) -> StopRule:
    d = {k: getattr(rule, k) for k in rule.__dataclass_fields__}
    d.update(kw)
    return StopRule(**d)


@dataclass(eq=False)
class Trajectory:
    model_name: str
    N: float
    seed: int
    kind: str
    frame: CanonicalFrame
    times: np.ndarray
    states: np.ndarray
    counts: np.ndarray | None
    terminated_at: tuple | None
    summary: dict = field(default_factory=dict)

    @property
    def recorded(self) -> bool:
        return self.summary.get("recorded", True)

    @property
    def end_time(self) -> float:
        return self.summary["t_end"]

    @property
    def final_state(self) -> np.ndarray:
        return self.summary["final_state"]

    def state_at(self, t: float) -> np.ndarray:
        """X_t (right-continuous), the state after the last event at or before t."""
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.states[max(i, 0)]

    def to_csv(self) -> str:
        lines = ["t,x1,x2"]
        for t, (a, b) in zip(self.times.tolist(), self.states.tolist()):
            lines.append(f"{t!r},{a!r},{b!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PathFunctional:
    kind: str
    value: float
    aux: dict = field(default_factory=dict)


def _lines_arrays(stop: StopRule):
    if not stop.lines:
        return np.zeros((0, 2)), np.zeros((0, 2))
    q = np.array([np.asarray(l[0], dtype=float) for l in stop.lines])
    w = np.array([np.asarray(l[1], dtype=float) for l in stop.lines])
    return q, w


def _summary(raw_tail, frame, t_end, reason, final_state, sample_times, recorded, n_events):
    min_norm, t_min, hit_t, h1, h2, samples = raw_tail
    return {
        "t_end": float(t_end),
        "reason": K.REASONS[reason],
        "n_events": int(n_events),
        "min_norm": float(min_norm),
        "t_min": float(t_min),
        "hit_t": float(hit_t),
        "hit_state": np.array([h1, h2]),
        "sample_times": np.asarray(sample_times, dtype=float),
        "samples": np.asarray(samples),
        "final_state": np.asarray(final_state, dtype=float),
        "recorded": recorded,
    }


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _theta_args(stop: StopRule):
    if stop.theta is None:
        return False, 0.0
    if not (0.0 < stop.theta < math.pi / 2):
        raise ParameterError("theta must lie in (0, pi/2)")
    return bool(stop.stop_on_theta), math.tan(stop.theta)


def simulate_jump(model: JumpModel, N: int, seed: int, stop: StopRule | None = None,
                  frame: CanonicalFrame | None = None) -> Trajectory:
    """Exact event-by-event simulation of the chain with jumps s_k / N."""
    if isinstance(model, DiffusionModel):
        model = model.base
    if N < 1:
        raise ParameterError("N must be at least 1")
    frame = frame or saddle_frame(model)
    stop = stop or default_stop(model, N, frame)
    n0 = model.initial_counts(N)
    stop_theta, tan_theta = _theta_args(stop)
    q, w = _lines_arrays(stop)
    st = np.asarray(sorted(stop.sample_times), dtype=float)
    eps_floor = stop.eps_extinction * N * float(np.min(model.initial_state))
    out = K.jump_kernel(model.kind, model.par, model.steps, n0, float(N), frame.R, frame.p,
                        model.lo, model.hi, _rng(seed), float(stop.t_max),
                        bool(stop.terminate and model.terminate_on_zero), float(eps_floor),
                        stop_theta, tan_theta, q, w, bool(stop.record),
                        int(min(stop.max_events, 2 ** 62)), st)
    times, counts, n_events, t_end, reason = out[:5]
    final_counts = out[11]
    final = frame.to_canonical(final_counts / N)
    states = frame.to_canonical(counts / N)
    term = None if reason == K.HORIZON else (float(t_end), K.REASONS[reason])
    summary = _summary(out[5:11], frame, t_end, reason, final, st, bool(stop.record), n_events)
    summary["final_counts"] = final_counts.copy()
    return Trajectory(model_name=model.name, N=N, seed=int(seed), kind="jump", frame=frame,
                      times=times, states=states, counts=counts, terminated_at=term,
                      summary=summary)


def simulate_diffusion(dmodel, N: float, dt: float, seed: int, stop: StopRule | None = None,
                       frame: CanonicalFrame | None = None) -> Trajectory:
    """Euler-Maruyama path of dX = sigma^N(X) dW + b^N(X) dt."""
    if isinstance(dmodel, JumpModel):
        dmodel = DiffusionModel(dmodel)
    if dt > 1e-3:
        raise ParameterError("dt must be at most 1e-3")
    base = dmodel.base
    frame = frame or saddle_frame(base)
    stop = stop or default_stop(base, N, frame)
    if not math.isfinite(stop.t_max):
        raise ParameterError("diffusion runs need a finite horizon")
    stop_theta, tan_theta = _theta_args(stop)
    q, w = _lines_arrays(stop)
    st = np.asarray(sorted(stop.sample_times), dtype=float)
    eps_floor = stop.eps_extinction * N * float(np.min(base.initial_state))
    out = K.diffusion_kernel(base.kind, base.par, base.steps, base.initial_state.copy(),
                             float(N), float(dmodel.noise), float(dt), frame.R, frame.p,
                             base.lo, base.hi, _rng(seed), float(stop.t_max),
                             bool(stop.terminate and base.terminate_on_zero), float(eps_floor),
                             stop_theta, tan_theta, q, w, bool(stop.record), st)
    times, xs, t_end, reason = out[:4]
    final = frame.to_canonical(out[10])
    n_steps = int(round(t_end / dt))
    term = None if reason == K.HORIZON else (float(t_end), K.REASONS[reason])
    summary = _summary(out[4:10], frame, t_end, reason, final, st, bool(stop.record), n_steps)
    summary["dt"] = dt
    return Trajectory(model_name=dmodel.name, N=N, seed=int(seed), kind="diffusion",
                      frame=frame, times=times, states=frame.to_canonical(xs), counts=None,
                      terminated_at=term, summary=summary)


# ---------------------------------------------------------------- functionals

def _ratio(y):
    y1, y2 = np.abs(y[..., 0]), np.abs(y[..., 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = y2 / y1
    return np.where((y1 == 0) & (y2 == 0), 1.0, r)


def hitting_time_theta(traj: Trajectory, theta: float) -> PathFunctional:
    """First time the slope |y2/y1| passes from at most tan(theta) to at least it."""
    if not (0.0 < theta < math.pi / 2):
        raise ParameterError("theta must lie in (0, pi/2)")
    tan = math.tan(theta)
    if not traj.recorded:
        t = traj.summary["hit_t"]
        if math.isnan(t):
            return PathFunctional("hit_theta", math.nan, {"hit": False})
        y = traj.summary["hit_state"]
        return PathFunctional("hit_theta", t, {"hit": True, "state": y,
                                               "side": int(np.sign(y[1]))})
    r = _ratio(traj.states)
    if r[0] >= tan * (1 - THETA_SLACK) and r[0] > 0:
        raise StateError("trajectory does not start inside the cone |y2| < tan(theta)|y1|")
    ok = (r[:-1] <= tan * (1 + THETA_SLACK)) & (r[1:] >= tan * (1 - THETA_SLACK))
    idx = np.flatnonzero(ok)
    if len(idx) == 0:
        return PathFunctional("hit_theta", math.nan, {"hit": False})
    i = int(idx[0]) + 1
    y = traj.states[i]
    return PathFunctional("hit_theta", float(traj.times[i]),
                          {"hit": True, "state": y.copy(), "side": int(np.sign(y[1])),
                           "index": i})


def min_distance(traj: Trajectory, t_max: float = math.inf) -> PathFunctional:
    """inf of |X_t| over t <= t_max (event states carry the left limits)."""
    if not traj.recorded:
        if t_max < traj.end_time:
            raise InputError("streamed trajectories only give the minimum over the whole run")
        return PathFunctional("min_dist", traj.summary["min_norm"],
                              {"t_min": traj.summary["t_min"]})
    k = int(np.searchsorted(traj.times, t_max, side="right"))
    if k == 0:
        raise InputError("empty time window")
    norms = np.hypot(traj.states[:k, 0], traj.states[:k, 1])
    i = int(np.argmin(norms))
    return PathFunctional("min_dist", float(norms[i]), {"t_min": float(traj.times[i])})


def survivors(traj: Trajectory) -> PathFunctional:
    """N times the sup-norm of the terminal state in original coordinates."""
    if traj.terminated_at is None or traj.terminated_at[1] != "terminated":
        raise StateError("survivor count needs a terminated trajectory")
    if traj.counts is not None or "final_counts" in traj.summary:
        n = traj.summary.get("final_counts")
        value = int(np.max(np.abs(n)))
    else:
        x = traj.frame.to_original(traj.final_state)
        value = int(round(traj.N * float(np.max(np.abs(x)))))
    return PathFunctional("survivors", value, {"time": traj.terminated_at[0]})


def rescaled_Z(traj: Trajectory, t: float) -> float:
    """N^{1/2} e^{-lam t} times the second canonical coordinate of X_t."""
    lam = traj.frame.lam
    frozen = traj.terminated_at is not None and traj.terminated_at[1] in ("terminated", "absorbed")
    if t > traj.end_time and not frozen:
        raise InsufficientSpanError(f"trajectory ends at {traj.end_time} before t={t}")
    if traj.recorded:
        y2 = traj.state_at(t)[1]
    else:
        st = traj.summary["sample_times"]
        j = np.flatnonzero(st == t)
        if len(j) == 0:
            raise InputError(f"t={t} was not a sample time of the streamed run")
        y2 = traj.summary["samples"][j[0], 1]
        if math.isnan(y2):
            raise InsufficientSpanError(f"no state recorded at t={t}")
    return float(math.sqrt(traj.N) * math.exp(-lam * t) * y2)


def pivot_time(frame: CanonicalFrame, N: float) -> float:
    """t_N = log N / (2 (lam + mu)), where both regime terms have equal size."""
    return math.log(N) / (2.0 * (frame.lam + frame.mu))


def sign_time(frame: CanonicalFrame, N: float) -> float:
    """Time at which the realized Z_inf^N is read for S_N: the middle of the
    linear regime between t_N and (1/(2 lam)) log N."""
    return 0.5 * (pivot_time(frame, N) + math.log(N) / (2.0 * frame.lam))


def flow_deviation(traj: Trajectory, frame: CanonicalFrame, t0: float) -> PathFunctional:
    """sup over t in [t0, end] of e^{-lam t} |X_t - phi_{t - t0}(X_{t0})|."""
    if not traj.recorded:
        raise StateError("flow deviation needs a recorded trajectory")
    if not (0.0 <= t0 <= traj.end_time):
        raise InsufficientSpanError(f"t0={t0} outside the trajectory span")
    lam = frame.lam
    x_t0 = traj.state_at(t0)
    T = traj.end_time - t0
    if T <= 0:
        return PathFunctional("flow_dev", 0.0, {"partial": False})
    sol, t_end, exited = flow_solution(frame, x_t0, T)
    limit = t0 + t_end
    i0 = int(np.searchsorted(traj.times, t0, side="right"))
    ts = traj.times[i0:]
    ts = ts[ts <= limit]
    # each event time is compared with both the state before and after the jump
    phi = sol(ts - t0).T if len(ts) else np.zeros((0, 2))
    after = traj.states[i0:i0 + len(ts)]
    before = traj.states[i0 - 1:i0 - 1 + len(ts)]
    w = np.exp(-lam * ts)
    dev = max(np.max(w * np.hypot(*(after - phi).T), initial=0.0),
              np.max(w * np.hypot(*(before - phi).T), initial=0.0))
    # the window ends with the state frozen at the last event
    t_last = min(traj.end_time, limit)
    phi_end = sol(t_last - t0)
    dev = max(dev, math.exp(-lam * t_last) * float(np.hypot(*(traj.state_at(t_last) - phi_end))))
    return PathFunctional("flow_dev", float(dev), {"partial": bool(exited), "t_exit": limit})


def realized_exit_time(traj: Trajectory, ua: UnstableAsymptotics, t_Z: float | None = None):
    """S_N = (1/(2 lam)) log N + (1/lam) log(Xbar_inf / Z_inf^N) and the side used.

    Z_inf^N is read at ``t_Z`` (default: middle of the linear regime). A zero
    Z is read as 0/0 = 1 and routed to the plus side.
    """
    frame = traj.frame
    t_Z = sign_time(frame, traj.N) if t_Z is None else t_Z
    Z = rescaled_Z(traj, t_Z)
    side = 1 if Z >= 0 else -1
    xbar = ua.xbar_inf_plus if side > 0 else ua.xbar_inf_minus
    ratio = 1.0 if Z == 0 else xbar / Z
    S = math.log(traj.N) / (2.0 * frame.lam) + math.log(ratio) / frame.lam
    return S, side, Z


def terminal_profile_error(traj: Trajectory, frame: CanonicalFrame, ua: UnstableAsymptotics,
                           c: float = 1.0, t_Z: float | None = None,
                           n_grid: int = 201) -> PathFunctional:
    """sup over s in [0, c] of |X_{S_N - s} - phi_s^{-1}(X_inf)|."""
    if not traj.recorded:
        raise StateError("terminal profile needs a recorded trajectory")
    S, side, Z = realized_exit_time(traj, ua, t_Z)
    if S - c < 0 or S > traj.end_time:
        raise InsufficientSpanError(
            f"window [{S - c}, {S}] not inside the trajectory span [0, {traj.end_time}]")
    lo = int(np.searchsorted(traj.times, S - c, side="right"))
    hi = int(np.searchsorted(traj.times, S, side="right"))
    t_ev = traj.times[lo:hi]
    ts = np.concatenate([np.linspace(S - c, S, n_grid), t_ev])
    s = S - ts
    ref = ua.backward(side, s).T
    idx = np.searchsorted(traj.times, ts, side="right") - 1
    err = np.hypot(*(traj.states[idx] - ref).T)
    # left limits at event times
    if len(t_ev):
        ref_ev = ua.backward(side, S - t_ev).T
        err_l = np.hypot(*(traj.states[lo - 1:hi - 1] - ref_ev).T)
        err = np.concatenate([err, err_l])
    end_side = int(np.sign(traj.final_state[1]))
    return PathFunctional("terminal_profile", float(np.max(err)),
                          {"S_N": S, "side": side, "Z": Z, "end_side": end_side})


def regime_b_residual(traj: Trajectory, xbar0: float, R: float, n_grid: int = 200) -> float:
    """Largest componentwise relative residual of X_t against
    xbar0 e^{-mu t} e1 + N^{-1/2} Z e^{lam t} e2 over t in [R, log N/(2 lam) - R]."""
    frame = traj.frame
    lam, mu = frame.lam, frame.mu
    t1 = math.log(traj.N) / (2 * lam) - R
    if t1 <= R:
        raise InsufficientSpanError("window [R, log N/(2 lam) - R] is empty")
    Z = rescaled_Z(traj, pivot_time(frame, traj.N))
    ts = np.linspace(R, t1, n_grid)
    idx = np.searchsorted(traj.times, ts, side="right") - 1
    y = traj.states[idx]
    a1 = xbar0 * np.exp(-mu * ts)
    a2 = Z * np.exp(lam * ts) / math.sqrt(traj.N)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.maximum(np.abs(y[:, 0] - a1) / np.abs(a1), np.abs(y[:, 1] - a2) / np.abs(a2))
    return float(np.max(r))
