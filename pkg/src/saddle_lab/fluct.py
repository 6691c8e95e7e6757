"""Limiting fluctuation variance, the linearized noise equation and limit laws."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfc, erfcinv, erfinv

from . import _kernels as K
from .errors import ConvergenceError, InputError, ParameterError
from .flow import CanonicalFrame, StableAsymptotics, stable_asymptotics
from .models import psd_sqrt

PANEL_TOL = 1e-12
TAIL_TARGET = 1e-10


@dataclass
class FluctuationReport:
    sigma_inf_sq: float
    tail_bound: float
    D_samples: list = field(default_factory=list)
    horizon: float = 0.0

    def to_json(self) -> dict:
        return {
            "sigma_inf_sq": self.sigma_inf_sq,
            "tail_bound": self.tail_bound,
            "horizon": self.horizon,
            "D_samples": [[s, [d[0], d[1]]] for s, d in self.D_samples],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _adaptive_simpson(f, a, b, tol, max_depth=40):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        if abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        if depth == 0:
            raise ConvergenceError(f"adaptive Simpson did not converge on [{a}, {b}]")
        return (rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    return rec(a, b, fa, fm, fb, whole, tol, max_depth)


def _a_canonical(frame: CanonicalFrame, model, y):
    x = frame.to_original(y)
    return frame.R @ model.diffusion(x) @ frame.R.T


def sigma_infinity(frame: CanonicalFrame, sa: StableAsymptotics, model=None) -> FluctuationReport:
    """sigma_inf^2 = int_0^inf e^{-2 lam s} D_s a(x_s) D_s^T ds along the stable solution.

    ``model`` supplies a(x) and defaults to the frame's model.
    """
    model = frame.model if model is None else model
    lam = frame.lam

    def tail(sa):
        S = sa.horizon
        a_near = max(np.linalg.norm(_a_canonical(frame, model, sa.state(S)), 2),
                     np.linalg.norm(_a_canonical(frame, model, np.zeros(2)), 2))
        return 4.0 * 2.0 * a_near * math.exp(-2.0 * lam * S) / (2.0 * lam), a_near

    bound, a_near = tail(sa)
    if bound >= TAIL_TARGET:
        need = math.log(8.0 * a_near / (2.0 * lam * TAIL_TARGET)) / (2.0 * lam) + 1.0
        sa = stable_asymptotics(frame, sa.x0, min_horizon=need)
        bound, _ = tail(sa)

    def integrand(s):
        D = sa.D(s)
        return math.exp(-2.0 * lam * s) * float(D @ _a_canonical(frame, model, sa.state(s)) @ D)

    S = sa.horizon
    edges = list(np.arange(0.0, S, 1.0)) + [S]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += _adaptive_simpson(integrand, a, b, PANEL_TOL)
    if total < -1e-14:
        raise ConvergenceError(f"negative variance {total}")
    total = max(total, 0.0)
    samples = [(float(s), np.asarray(sa.D(s), dtype=float)) for s in edges]
    return FluctuationReport(sigma_inf_sq=float(total), tail_bound=float(bound),
                             D_samples=samples, horizon=float(S))


def simulate_gamma(frame: CanonicalFrame, sa: StableAsymptotics, T: float, dt: float,
                   seed: int, M: int = 1, model=None) -> np.ndarray:
    """Terminal values e^{-lam T} gamma_{T,2} of M Euler-Maruyama paths.

    gamma solves d gamma = sigma(x_t) dW + grad b(x_t) gamma dt from 0 along
    the stable solution, in canonical coordinates.
    """
    if dt > 1e-3:
        raise ParameterError("dt must be at most 1e-3")
    model = frame.model if model is None else model
    n = int(round(T / dt))
    s = np.arange(n) * dt
    ys = sa.state(s)
    A = np.empty((n, 2, 2))
    S = np.empty((n, 2, 2))
    for i in range(n):
        y = ys[:, i]
        A[i] = frame.jacobian(y)
        S[i] = psd_sqrt(_a_canonical(frame, model, y))
    rng = np.random.Generator(np.random.PCG64(seed))
    g = K.gamma_kernel(A, S, dt, rng, int(M))
    return math.exp(-frame.lam * n * dt) * g[:, 1]


# ---------------------------------------------------------------- limit laws

LAW_KINDS = ("hit_norm", "min_dist", "survivors", "hit_time_shift", "abs_gauss_power")


@dataclass(frozen=True)
class LimitLaw:
    """Either c |Z|^p or a log|K / Z| with Z ~ N(0, sigma^2)."""

    kind: str
    sigma: float
    c: float = 1.0
    p: float = 1.0
    a: float = 0.0
    K: float = 0.0
    params: dict = field(default_factory=dict, compare=False)

    @classmethod
    def abs_gauss_power(cls, c: float, p: float, sigma: float) -> "LimitLaw":
        return cls("abs_gauss_power", sigma=sigma, c=c, p=p, params={"c": c, "p": p})

    @classmethod
    def hit_norm(cls, lam, mu, xbar0, sigma, theta) -> "LimitLaw":
        _check_theta(theta)
        c = (abs(1.0 / math.cos(theta)) * abs(math.tan(theta)) ** (-mu / (lam + mu))
             * abs(xbar0) ** (lam / (lam + mu)))
        return cls("hit_norm", sigma=sigma, c=c, p=mu / (lam + mu),
                   params=dict(lam=lam, mu=mu, xbar0=xbar0, theta=theta))

    @classmethod
    def min_dist(cls, lam, mu, xbar0, sigma) -> "LimitLaw":
        c = ((mu / lam) ** (lam / (2.0 * (lam + mu))) * math.sqrt(lam / mu + 1.0)
             * abs(xbar0) ** (lam / (lam + mu)))
        return cls("min_dist", sigma=sigma, c=c, p=mu / (lam + mu),
                   params=dict(lam=lam, mu=mu, xbar0=xbar0))

    @classmethod
    def survivors(cls, sigma: float = math.sqrt(1.0 / 3.0)) -> "LimitLaw":
        return cls("survivors", sigma=sigma, c=2.0 ** 0.75, p=0.5)

    @classmethod
    def hit_time_shift(cls, lam, mu, xbar0, sigma, theta) -> "LimitLaw":
        _check_theta(theta)
        return cls("hit_time_shift", sigma=sigma, a=1.0 / (lam + mu),
                   K=abs(xbar0 * math.tan(theta)),
                   params=dict(lam=lam, mu=mu, xbar0=xbar0, theta=theta))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.isnan(x)):
            raise InputError("CDF argument is NaN")
        s2 = self.sigma * math.sqrt(2.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.kind == "hit_time_shift":
                if self.sigma == 0:
                    return np.zeros_like(x)
                out = erfc(self.K * np.exp(-x / self.a) / s2)
            else:
                pos = np.clip(x, 0.0, None) / self.c
                if self.sigma == 0:
                    out = np.where(x >= 0, 1.0, 0.0)
                else:
                    out = np.where(x > 0, erf(pos ** (1.0 / self.p) / s2), 0.0)
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        s2 = self.sigma * math.sqrt(2.0)
        if self.kind == "hit_time_shift":
            out = -self.a * np.log(s2 * erfcinv(q) / self.K)
        else:
            out = self.c * (s2 * erfinv(q)) ** self.p
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, M: int) -> np.ndarray:
        return self.quantile(rng.random(M))

    def to_json(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma, "c": self.c, "p": self.p,
                "a": self.a, "K": self.K, **self.params}


def _check_theta(theta):
    if not (0.0 < theta < math.pi / 2):
        raise ParameterError(f"theta must lie in (0, pi/2), got {theta}")


def limit_law_cdf(law: LimitLaw, x: float) -> float:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        raise InputError("CDF argument is NaN")
    return law.cdf(x)
