"""Deterministic flow, canonical saddle frame and flow asymptotics.

All points handed to or returned by the functions here are in canonical
coordinates ``y = R (x - p)`` unless stated otherwise.

Near the saddle the drift is evaluated as ``R * mean_s J(p + s u) * u`` with
``u = R^{-1} y`` (three-point Simpson average of the Jacobian). This is exact
for drifts of degree at most three and keeps full relative precision for
|y| far below the resolution of ``p``; evaluating ``b(p + u)`` directly would
lose everything below ~1e-16.

The limits along the stable solution are computed by tracing it backwards:
starting from ``(eps, 0)`` the reversed flow is integrated out to the radius
of ``x0``. The elapsed time ``S`` gives ``xbar0 ~ eps e^{mu S}`` and the
adjoint row equation ``dr/dtau = r (A - lambda I)``, started at ``e2``,
gives ``D_s`` for every ``s`` on the same pass. Shrinking ``eps`` plays the
role of a growing horizon; the horizon doubles until both limits settle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (ConvergenceError, DomainExitError, HorizonError,
                     InputError, NotASaddleError, ShootingError)

RTOL = 1e-10
ATOL = 1e-12
# tighter tolerances for the limit traces and crossing pieces
TRACE_RTOL = 1e-12

_P = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class CanonicalFrame:
    p: np.ndarray
    lam: float
    mu: float
    R: np.ndarray
    R_inv: np.ndarray
    model: object

    def to_canonical(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.p) @ self.R.T

    def to_original(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.p + y @ self.R_inv.T

    def drift(self, y) -> np.ndarray:
        """Canonical drift, accurate relative to |y| near the saddle."""
        u = self.R_inv @ np.asarray(y, dtype=float)
        return self.R @ (self._mean_jac(u) @ u)

    def jacobian(self, y) -> np.ndarray:
        u = self.R_inv @ np.asarray(y, dtype=float)
        return self.R @ self.model.drift_jacobian(self.p + u) @ self.R_inv

    def _mean_jac(self, u, base=None):
        # average of J over the segment [base, base + u] in original coordinates
        x = self.p if base is None else base
        J = self.model.drift_jacobian
        return (J(x) + 4.0 * J(x + 0.5 * u) + J(x + u)) / 6.0

    def diffusion(self, y) -> np.ndarray:
        """a(x) expressed in canonical coordinates."""
        x = self.to_original(y)
        return self.R @ self.model.diffusion(x) @ self.R.T

    def margin(self, y) -> float:
        x = self.p + self.R_inv @ y
        m = self.model
        return float(min(x[0] - m.lo[0], x[1] - m.lo[1], m.hi[0] - x[0], m.hi[1] - x[1]))

    def contains(self, y) -> bool:
        return self.margin(np.asarray(y, dtype=float)) > 0.0

    def to_json(self) -> dict:
        return {"p": self.p.tolist(), "lambda": self.lam, "mu": self.mu,
                "R": self.R.tolist(), "R_inv": self.R_inv.tolist()}


def saddle_frame(model, tol: float = 1e-12, max_iter: int = 100) -> CanonicalFrame:
    x = np.array(model.saddle_guess, dtype=float)
    for _ in range(max_iter):
        bx = model.drift(x)
        if np.max(np.abs(bx)) <= tol:
            break
        try:
            step = np.linalg.solve(model.drift_jacobian(x), bx)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Jacobian in the saddle search") from None
        x = x - step
    else:
        raise ConvergenceError(f"no fixed point of {model.name} within {max_iter} Newton steps")

    J = model.drift_jacobian(x)
    if np.allclose(J, J.T, rtol=0, atol=1e-14):
        w, V = np.linalg.eigh(J)
    else:
        w, V = np.linalg.eig(J)
        if np.any(np.abs(np.imag(w)) > 0):
            raise NotASaddleError(f"complex eigenvalues {w}")
        w, V = np.real(w), np.real(V)
    if not (np.min(w) < 0 < np.max(w)):
        raise NotASaddleError(f"eigenvalues {w} do not straddle zero")
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    V = V / np.linalg.norm(V, axis=0)

    # orient e1 so the initial state has a positive first coordinate, e2 so det > 0
    R = np.linalg.inv(V)
    y0 = R @ (model.initial_state - x)
    if y0[0] < 0:
        V[:, 0] = -V[:, 0]
    if np.linalg.det(V) < 0:
        V[:, 1] = -V[:, 1]
    R = np.linalg.inv(V)
    if np.allclose(V.T @ V, np.eye(2), atol=1e-14):
        R = V.T.copy()
    return CanonicalFrame(p=x, lam=float(w[1]), mu=float(-w[0]), R=R, R_inv=V, model=model)


class _Field:
    """Canonical vector field, optionally in swapped-reversed form.

    The swapped form ``z = P y`` with drift ``-P f(P z)`` exchanges the stable
    and unstable manifolds, so stable-side machinery applies to the unstable
    side unchanged.
    """

    def __init__(self, frame: CanonicalFrame, swap: bool = False):
        self.frame = frame
        self.swap = swap
        self.lam = frame.mu if swap else frame.lam
        self.mu = frame.lam if swap else frame.mu

    def f(self, y):
        if self.swap:
            return -(_P @ self.frame.drift(_P @ y))
        return self.frame.drift(y)

    def A(self, y):
        if self.swap:
            return -(_P @ self.frame.jacobian(_P @ y) @ _P)
        return self.frame.jacobian(y)

    def diff(self, ref, e):
        """f(ref + e) - f(ref), accurate relative to |e|."""
        fr = self.frame
        if self.swap:
            ref, e = _P @ ref, _P @ e
        u = fr.R_inv @ e
        out = fr.R @ (fr._mean_jac(u, fr.p + fr.R_inv @ ref) @ u)
        return -(_P @ out) if self.swap else out

    def margin(self, y):
        return self.frame.margin(_P @ y if self.swap else y)


def _domain_event(fld: _Field, sign: float = 1.0, width: int = 2):
    def ev(t, w):
        return fld.margin(w[:width])
    ev.terminal = True
    ev.direction = -1
    return ev


def _rhs(fld: _Field, reversed_: bool):
    s = -1.0 if reversed_ else 1.0

    def rhs(t, y):
        return s * fld.f(y)
    return rhs


def flow_solution(frame: CanonicalFrame, x, t: float, reversed: bool = False,
                  rtol: float = RTOL, atol: float = ATOL):
    """Dense solution of the flow from canonical ``x`` over [0, t].

    Returns ``(sol, t_end, exited)``; on a domain exit ``t_end`` is the exit time.
    """
    fld = _Field(frame)
    x = np.asarray(x, dtype=float)
    if not frame.contains(x):
        raise DomainExitError(0.0, x)
    res = solve_ivp(_rhs(fld, reversed), (0.0, float(t)), x, method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True,
                    events=_domain_event(fld))
    if res.status == -1:
        raise ConvergenceError(res.message)
    exited = res.status == 1
    return res.sol, float(res.t[-1]), exited


def flow(frame: CanonicalFrame, x, t: float, reversed: bool = False) -> np.ndarray:
    """phi_t(x), or phi_t^{-1}(x) when ``reversed``."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return x.copy()
    if t < 0:
        raise InputError("flow time must be nonnegative; use reversed=True")
    sol, t_end, exited = flow_solution(frame, x, t, reversed)
    if exited:
        raise DomainExitError(t_end, sol(t_end))
    return sol(t)


def flow_jacobian(frame: CanonicalFrame, x, t: float, reversed: bool = False) -> np.ndarray:
    """Gradient of the (reversed) flow at canonical ``x`` via the variational equation."""
    fld = _Field(frame)
    s = -1.0 if reversed else 1.0
    x = np.asarray(x, dtype=float)
    if t == 0:
        return np.eye(2)

    def rhs(_, w):
        y = w[:2]
        J = w[2:].reshape(2, 2)
        return np.concatenate([s * fld.f(y), (s * fld.A(y) @ J).ravel()])

    w0 = np.concatenate([x, np.eye(2).ravel()])
    res = solve_ivp(rhs, (0.0, float(t)), w0, method="DOP853", rtol=RTOL, atol=ATOL,
                    events=_domain_event(fld))
    if res.status == 1:
        raise DomainExitError(float(res.t_events[0][0]), res.y_events[0][0][:2])
    if res.status == -1:
        raise ConvergenceError(res.message)
    return res.y[2:, -1].reshape(2, 2)


class _ScaledSolution:
    """Maps a solution of the rescaled state back to the original variables."""

    def __init__(self, sol, c, s0, mask):
        self.sol, self.c, self.s0, self.mask = sol, c, s0, mask

    def __call__(self, t):
        w = np.array(self.sol(t), dtype=float)
        f = self.s0 * np.exp(self.c * np.asarray(t, dtype=float))
        w[self.mask] = w[self.mask] * f
        return w


def _solve_scaled(rhs, t1, y0, c, s0, mask, events=(), rtol=TRACE_RTOL, atol=1e-14,
                  dense=False):
    """Integrate ``rhs`` for w = y e^{-ct}/s0 on the components in ``mask``.

    Solutions that grow or decay exponentially over many decades stay O(1)
    in w, so plain absolute tolerances remain meaningful throughout.
    """
    mask = np.asarray(mask, dtype=bool)
    y0 = np.asarray(y0, dtype=float)

    def to_y(t, w):
        y = np.array(w, dtype=float)
        y[mask] *= s0 * np.exp(c * t)
        return y

    def wrhs(t, w):
        dy = np.asarray(rhs(t, to_y(t, w)), dtype=float)
        out = dy.copy()
        out[mask] = dy[mask] * np.exp(-c * t) / s0 - c * w[mask]
        return out

    wrapped = []
    for ev in events:
        def wev(t, w, ev=ev):
            return ev(t, to_y(t, w))
        wev.terminal = getattr(ev, "terminal", False)
        wev.direction = getattr(ev, "direction", 0)
        wrapped.append(wev)

    w0 = y0.copy()
    w0[mask] /= s0
    res = solve_ivp(wrhs, (0.0, t1), w0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=dense, events=wrapped or None)
    if res.status == -1:
        raise ConvergenceError(res.message)
    y_events = []
    if res.t_events is not None:
        for ts, ws in zip(res.t_events, res.y_events):
            y_events.append([to_y(t, w) for t, w in zip(ts, ws)])
    sol = _ScaledSolution(res.sol, c, s0, mask) if dense else None
    return res, sol, y_events


# ---------------------------------------------------------------- shooting

def _escape_sign(fld: _Field, y0, T: float, cap: float) -> float:
    # sign of the second coordinate at the horizon, or at the escape event
    def big(t, y):
        return cap - abs(y[1])
    big.terminal = True
    res = solve_ivp(_rhs(fld, False), (0.0, T), y0, method="DOP853",
                    rtol=TRACE_RTOL, atol=1e-15, events=[_domain_event(fld), big])
    return float(np.sign(res.y[1, -1]))


def _shoot(fld: _Field, d: float, side: int) -> np.ndarray:
    T = max(10.0 / fld.mu, 10.0 / fld.lam)
    cap = 4.0 * d

    def point(psi):
        return d * np.array([side * np.cos(psi), np.sin(psi)])

    bracket = None
    for half in (1.4, 1.0, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01):
        a, b = -half, half
        if fld.margin(point(a)) <= 0 or fld.margin(point(b)) <= 0:
            continue
        sa, sb = _escape_sign(fld, point(a), T, cap), _escape_sign(fld, point(b), T, cap)
        if sa == 0:
            return point(a)
        if sb == 0:
            return point(b)
        if sa != sb:
            bracket = (a, b, sa)
            break
    if bracket is None:
        raise ShootingError(f"no sign change of the escape side on the circle of radius {d}")
    a, b, sa = bracket
    while b - a > 1e-12:
        m = 0.5 * (a + b)
        sm = _escape_sign(fld, point(m), T, cap)
        if sm == 0:
            return point(m)
        if sm == sa:
            a = m
        else:
            b = m
    return point(0.5 * (a + b))


def stable_point(frame: CanonicalFrame, d: float, side: int = 1) -> np.ndarray:
    """Point at distance ``d`` on the stable manifold, first coordinate of sign ``side``."""
    if d <= 0:
        raise InputError("d must be positive")
    return _shoot(_Field(frame), float(d), 1 if side >= 0 else -1)


# ---------------------------------------------------------------- limits

@dataclass(eq=False)
class StableAsymptotics:
    xbar0: float
    D0: np.ndarray
    x0: np.ndarray
    horizon: float
    lam: float
    mu: float
    _sol: object = field(repr=False, default=None)
    _q: np.ndarray = field(repr=False, default=None)

    def state(self, s):
        """Stable solution phi_s(x0); past the trace horizon the linear tail."""
        s = np.asarray(s, dtype=float)
        S = self.horizon
        inside = np.minimum(s, S)
        y = np.asarray(self._sol(S - inside))[:2]
        if np.any(s > S):
            tail = np.multiply.outer(self._q, np.exp(-self.mu * np.maximum(s - S, 0.0)))
            y = np.where(s > S, tail, y)
        return y

    def D(self, s):
        """D_s along the stable solution."""
        s = np.asarray(s, dtype=float)
        S = self.horizon
        inside = np.minimum(s, S)
        r = np.asarray(self._sol(S - inside))[2:]
        if np.any(s > S):
            r = np.where(s > S, np.multiply.outer(np.array([0.0, 1.0]), np.ones_like(s)), r)
        return r

    def to_json(self) -> dict:
        return {"xbar0": self.xbar0, "D0": self.D0.tolist(), "x0": self.x0.tolist(),
                "horizon": self.horizon}


def _trace(fld: _Field, x0: np.ndarray, eps: float) -> StableAsymptotics:
    lam, mu = fld.lam, fld.mu
    sgn = 1.0 if x0[0] >= 0 else -1.0
    r0 = float(np.hypot(*x0))
    q = np.array([sgn * eps, 0.0])

    def rhs(_, w):
        y, r = w[:2], w[2:]
        return np.concatenate([-fld.f(y), r @ fld.A(y) - lam * r])

    def reach(_, w):
        return w[0] * w[0] + w[1] * w[1] - r0 * r0
    reach.terminal = True
    reach.direction = 1

    def out(_, w):
        return fld.margin(w[:2])
    out.terminal = True
    out.direction = -1

    t_bound = 4.0 * np.log(r0 / eps) / mu + 50.0 / min(lam, mu)
    res, sol, yev = _solve_scaled(rhs, t_bound, np.concatenate([q, [0.0, 1.0]]), mu, eps,
                                  [True, True, False, False], events=[reach, out], dense=True)
    if len(res.t_events[0]) == 0:
        raise ConvergenceError("backward trace of the stable solution did not reach x0")
    S = float(res.t_events[0][0])
    w_end = yev[0][0]
    sa = StableAsymptotics(xbar0=sgn * eps * np.exp(mu * S), D0=w_end[2:].copy(),
                           x0=np.asarray(x0, dtype=float).copy(), horizon=S, lam=lam,
                           mu=mu, _sol=sol, _q=q)
    return sa, w_end[:2]


def _asymptotics(fld: _Field, x0, min_horizon: float = 0.0, rel: float = 1e-9):
    x0 = np.asarray(x0, dtype=float)
    r0 = float(np.hypot(*x0))
    if r0 == 0:
        raise InputError("x0 must differ from the saddle")
    limit = 200.0 / min(fld.lam, fld.mu)
    h = 1.0
    prev = None
    while True:
        cur, end = _trace(fld, x0, r0 * np.exp(-fld.mu * h))
        if prev is not None:
            dx = abs(cur.xbar0 - prev.xbar0) / abs(cur.xbar0)
            dD = np.linalg.norm(cur.D0 - prev.D0) / np.linalg.norm(cur.D0)
            if dx < rel and dD < rel and cur.horizon >= min_horizon:
                if np.hypot(*(end - x0)) > 1e-7 * max(1.0, r0):
                    raise ConvergenceError(
                        f"x0={x0.tolist()} is not on the stable manifold "
                        f"(nearest {end.tolist()})")
                return cur
        prev = cur
        h *= 2.0
        if h > limit:
            raise ConvergenceError(f"limits did not settle by horizon {limit}")


def stable_asymptotics(frame: CanonicalFrame, x0, min_horizon: float = 0.0) -> StableAsymptotics:
    """x̄0 and D0 (and the whole stable solution) for ``x0`` on the stable manifold."""
    return _asymptotics(_Field(frame), x0, min_horizon)


@dataclass(eq=False)
class UnstableAsymptotics:
    x_inf_plus: np.ndarray
    x_inf_minus: np.ndarray
    xbar_inf_plus: float
    xbar_inf_minus: float
    D_inf: np.ndarray
    D_inf_minus: np.ndarray
    plus: StableAsymptotics = field(repr=False, default=None)
    minus: StableAsymptotics = field(repr=False, default=None)

    def side(self, sign: float):
        """(x_inf, xbar_inf, D_inf, backward path) for the side of ``sign``."""
        if sign > 0:
            return self.x_inf_plus, self.xbar_inf_plus, self.D_inf, self.plus
        return self.x_inf_minus, self.xbar_inf_minus, self.D_inf_minus, self.minus

    def backward(self, sign: float, s):
        """phi_s^{-1}(x_inf) for the side of ``sign``."""
        sa = self.plus if sign > 0 else self.minus
        return np.tensordot(_P, sa.state(s), axes=1)

    def to_json(self) -> dict:
        return {"x_inf_plus": self.x_inf_plus.tolist(), "x_inf_minus": self.x_inf_minus.tolist(),
                "xbar_inf_plus": self.xbar_inf_plus, "xbar_inf_minus": self.xbar_inf_minus,
                "D_inf": self.D_inf.tolist()}


def unstable_asymptotics(frame: CanonicalFrame, d: float, min_horizon: float = 0.0) -> UnstableAsymptotics:
    fld = _Field(frame, swap=True)
    out = {}
    for sign in (1, -1):
        z0 = _shoot(fld, float(d), sign)
        out[sign] = _asymptotics(fld, z0, min_horizon)
    p, m = out[1], out[-1]
    return UnstableAsymptotics(
        x_inf_plus=_P @ p.x0, x_inf_minus=_P @ m.x0,
        xbar_inf_plus=p.xbar0, xbar_inf_minus=m.xbar0,
        D_inf=p.D0 @ _P, D_inf_minus=m.D0 @ _P, plus=p, minus=m)


# ---------------------------------------------------------------- crossing

@dataclass(frozen=True)
class Crossing:
    s: float
    point: np.ndarray
    side: int
    offset: float
    timing_error: float
    point_error: float


def _diagonal_gap(y):
    return y[1] * y[1] - y[0] * y[0]


def flow_near_stable(frame: CanonicalFrame, sa: StableAsymptotics, z, t_max: float,
                     stop_on_diagonal: bool = False):
    """phi_t(x0 + z) as stable solution plus an integrated difference.

    Returns ``(sol, t_end)`` where ``sol(t)`` is the difference ``e(t)``;
    with ``stop_on_diagonal`` the integration ends where |y2| first reaches |y1|.
    """
    fld = _Field(frame)
    z = np.asarray(z, dtype=float)

    def rhs(t, e):
        return fld.diff(sa.state(t), e)

    events = []
    if stop_on_diagonal:
        def diag(t, e):
            return _diagonal_gap(sa.state(t) + e)
        diag.terminal = True
        diag.direction = 1
        events.append(diag)

    def out(t, e):
        return fld.margin(sa.state(t) + e)
    out.terminal = True
    out.direction = -1
    events.append(out)

    res, sol, _ = _solve_scaled(rhs, t_max, z, frame.lam, float(np.hypot(*z)), [True, True],
                                events=events, dense=True)
    if stop_on_diagonal and len(res.t_events[0]) == 0:
        raise HorizonError("perturbed stable solution never reached the diagonal")
    return sol, float(res.t[-1])


def _backward_to_diagonal(frame, ref: StableAsymptotics, e0, t_max):
    # reversed flow from x_inf + e0, as unstable reference plus difference
    fld = _Field(frame)

    def xi(t):
        return _P @ ref.state(t)

    start = xi(0.0) + e0
    if _diagonal_gap(start) <= 0:
        return 0.0, start

    def rhs(t, e):
        return -fld.diff(xi(t), e)

    def diag(t, e):
        return _diagonal_gap(xi(t) + e)
    diag.terminal = True
    diag.direction = -1
    res, _, yev = _solve_scaled(rhs, t_max, e0, frame.mu, float(np.hypot(*e0)), [True, True],
                                events=[diag])
    if len(res.t_events[0]) == 0:
        raise HorizonError("backward solution from the exit line never reached the diagonal")
    t = float(res.t_events[0][0])
    return t, xi(t) + yev[0][0]


def crossing_line_time(frame: CanonicalFrame, sa: StableAsymptotics, x_inf, D_inf) -> float:
    """Last time the stable solution touches the line x_inf + r D_inf^T (0 if never)."""
    s = np.linspace(0.0, sa.horizon, 4001)
    y = sa.state(s)
    g = D_inf[1] * (y[0] - x_inf[0]) - D_inf[0] * (y[1] - x_inf[1])
    change = np.nonzero(np.sign(g[1:]) != np.sign(g[:-1]))[0]
    return float(s[change[-1] + 1]) if len(change) else 0.0


def unstable_crossing(frame: CanonicalFrame, xz, ua: UnstableAsymptotics,
                      sa: StableAsymptotics, method: str = "matched") -> Crossing:
    """First crossing of the exit line x_inf + r D_inf^T by the flow from ``xz``.

    ``matched`` integrates forward from ``xz`` to the diagonal |y2| = |y1| and
    backward from the exit line to the diagonal, each as a difference from a
    reference solution, and matches the two pieces; ``direct`` integrates the
    flow from ``xz`` and localizes the line crossing by root finding.
    """
    xz = np.asarray(xz, dtype=float)
    z = xz - sa.x0
    Dz = float(sa.D0 @ z)
    if Dz == 0:
        raise InputError("D0 z = 0: the perturbation does not leave along the unstable direction")
    side = 1 if Dz > 0 else -1
    x_inf, xbar_inf, D_inf, ref = ua.side(side)
    v = D_inf / float(D_inf @ D_inf)
    lam, mu = frame.lam, frame.mu
    t_horizon = (2.0 / lam) * abs(np.log(np.hypot(*z))) + 50.0

    if method == "direct":
        s, point = _direct_crossing(frame, sa, xz, x_inf, D_inf, t_horizon)
        offset = float(D_inf @ (point - x_inf))
    elif method == "matched":
        sol, t_z = flow_near_stable(frame, sa, z, t_horizon, stop_on_diagonal=True)
        P = sa.state(t_z) + sol(t_z)
        sgn = 1.0 if sa.xbar0 > 0 else -1.0
        y_pred = abs(sa.xbar0) * (abs(Dz / xbar_inf)) ** (mu / lam)

        def g(u):
            _, Q = _backward_to_diagonal(frame, ref, sgn * np.exp(u) * v, t_horizon)
            return Q[0] - P[0]

        u0 = np.log(y_pred)
        lo, hi = u0 - 2.0, u0 + 2.0
        glo, ghi = g(lo), g(hi)
        k = 0
        while np.sign(glo) == np.sign(ghi):
            lo, hi = lo - 2.0, hi + 2.0
            glo, ghi = g(lo), g(hi)
            k += 1
            if k > 20:
                raise HorizonError("could not bracket the matching offset on the exit line")
        u = brentq(g, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
        offset = sgn * float(np.exp(u))
        t_back, _ = _backward_to_diagonal(frame, ref, offset * v, t_horizon)
        s = t_z + t_back
        point = x_inf + offset * v
    else:
        raise InputError(f"unknown crossing method {method!r}")

    ratio = xbar_inf / Dz
    timing_error = abs(s - np.log(ratio) / lam)
    point_error = float(np.linalg.norm(v)) * abs(ratio ** (mu / lam) * offset - sa.xbar0)
    return Crossing(s=float(s), point=point, side=side, offset=offset,
                    timing_error=float(timing_error), point_error=float(point_error))


def _direct_crossing(frame, sa, xz, x_inf, D_inf, t_horizon):
    fld = _Field(frame)
    t_inf = crossing_line_time(frame, sa, x_inf, D_inf)

    def line(t, y):
        return D_inf[1] * (y[0] - x_inf[0]) - D_inf[0] * (y[1] - x_inf[1])

    res = solve_ivp(_rhs(fld, False), (0.0, t_horizon), xz, method="DOP853",
                    rtol=RTOL, atol=ATOL, events=[line, _domain_event(fld)])
    times = res.t_events[0]
    pts = res.y_events[0]
    for t, y in zip(times, pts):
        if t > t_inf:
            return float(t), np.asarray(y, dtype=float)
    raise HorizonError(f"no crossing of the exit line before t={t_horizon}")
