"""Jump and diffusion model descriptions and the built-in models.

A model is a finite list of integer jump vectors ``s_k``. The density-scaled
process jumps by ``s_k / N`` at total rate ``rate_k(n, N)`` where ``n = N x``
is the count vector. The limit kernel jumps by ``s_k`` at rate ``limit_rate_k(x)``,
which gives the drift ``b = sum s_k rate_k`` and ``a = sum s_k s_k^T rate_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .errors import DomainError, ParameterError


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(2)


@dataclass(frozen=True, eq=False)
class JumpModel:
    name: str
    kind: int
    params: dict
    par: np.ndarray
    steps: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    initial_state: np.ndarray
    terminate_on_zero: bool
    saddle_guess: np.ndarray
    # sup |b^N - b| on S is at most consistency_const / N
    consistency_const: float = 0.0
    # region where rates are nonnegative (may be smaller than S)
    rate_lo: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("par", "steps", "lo", "hi", "initial_state", "saddle_guess"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        rl = self.lo if self.rate_lo is None else np.array(self.rate_lo, dtype=float)
        rl.setflags(write=False)
        object.__setattr__(self, "rate_lo", rl)

    # -- domain ----------------------------------------------------------
    def contains(self, x) -> bool:
        x = _vec(x)
        return bool(np.all(self.lo < x) and np.all(x < self.hi))

    def _check(self, x):
        x = _vec(x)
        if not self.contains(x):
            raise DomainError(f"state {x.tolist()} outside the domain of {self.name}")
        return x

    def is_terminal(self, x) -> bool:
        return self.terminate_on_zero and bool(np.any(_vec(x) == 0.0))

    # -- jump lists ------------------------------------------------------
    @property
    def jumps(self) -> list[tuple[Callable, Callable]]:
        """Per-N jump list as (direction(N), rate(x, N)) pairs."""
        out = []
        for k, s in enumerate(self.steps):
            out.append((lambda N, s=s: s / N, lambda x, N, k=k: self.rates(x, N)[k]))
        return out

    @property
    def limit_jumps(self) -> list[tuple[np.ndarray, Callable]]:
        return [(s.copy(), lambda x, k=k: self.limit_rates(x)[k])
                for k, s in enumerate(self.steps)]

    def rates(self, x, N: float) -> np.ndarray:
        """Total per-N rates at state ``x`` (counts ``N x``)."""
        out = np.empty(len(self.steps))
        K.rates(self.kind, self.par, _vec(x) * N, float(N), out)
        return out

    def limit_rates(self, x) -> np.ndarray:
        out = np.empty(len(self.steps))
        K.limit_rates(self.kind, self.par, _vec(x), out)
        return out

    # -- moments ---------------------------------------------------------
    def drift(self, x) -> np.ndarray:
        return self.steps.T @ self.limit_rates(x)

    def diffusion(self, x) -> np.ndarray:
        r = self.limit_rates(x)
        return (self.steps.T * r) @ self.steps

    def drift_N(self, x, N: float) -> np.ndarray:
        return self.steps.T @ self.rates(x, N) / N

    def diffusion_N(self, x, N: float) -> np.ndarray:
        """Second moment of the per-N kernel, of order 1/N."""
        r = self.rates(x, N)
        return (self.steps.T * r) @ self.steps / (N * N)

    def drift_jacobian(self, x) -> np.ndarray:
        x1, x2 = _vec(x)
        if self.kind == K.OK_CORRAL:
            return np.array([[0.0, -1.0], [-1.0, 0.0]])
        if self.kind == K.COMPETITION:
            a, b = self.par[0], self.par[1]
            return np.array([
                [1.0 - 2 * a * x1 - (a + b) * x2, -(a + b) * x1],
                [-(a + b) * x2, 1.0 - 2 * a * x2 - (a + b) * x1],
            ])
        mu, lam = self.par[0], self.par[1]
        return np.array([[-mu, 0.0], [0.0, lam]])

    def initial_counts(self, N: int) -> np.ndarray:
        return np.rint(self.initial_state * N)

    @property
    def noise(self) -> float:
        return 1.0


@dataclass(frozen=True, eq=False)
class DiffusionModel:
    """SDE counterpart dX = sigma^N(X) dW + b^N(X) dt of a jump model.

    ``sigma^N`` is the symmetric root of the per-N second moment, scaled by
    ``noise``; ``noise = 0`` gives the deterministic flow with ``a = 0``.
    """

    base: JumpModel
    noise: float = 1.0

    def __getattr__(self, item):
        # model metadata (name, kind, steps, domain, ...) comes from the base
        if item == "base":
            raise AttributeError(item)
        return getattr(self.base, item)

    @property
    def name(self) -> str:
        return self.base.name if self.noise == 1.0 else f"{self.base.name}_noise{self.noise!r}"

    def diffusion(self, x) -> np.ndarray:
        return self.noise ** 2 * self.base.diffusion(x)

    def diffusion_N(self, x, N: float) -> np.ndarray:
        return self.noise ** 2 * self.base.diffusion_N(x, N)

    def sigmaN(self, x, N: float) -> np.ndarray:
        return self.noise * psd_sqrt(self.base.diffusion_N(x, N))

    def limit_sigma(self, x) -> np.ndarray:
        return self.noise * psd_sqrt(self.base.diffusion(x))


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric positive semidefinite matrix."""
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def build_ok_corral() -> JumpModel:
    # S extends below the quadrant so that the saddle at 0 and its unstable
    # manifold are interior; jump paths stop on the axes before leaving it.
    return JumpModel(
        name="okcorral",
        kind=K.OK_CORRAL,
        params={},
        par=np.zeros(0),
        steps=np.array([[-1, 0], [0, -1]]),
        lo=np.array([-1.0, -1.0]),
        hi=np.array([3.0, 3.0]),
        initial_state=np.array([1.0, 1.0]),
        terminate_on_zero=True,
        saddle_guess=np.array([0.1, 0.1]),
        consistency_const=0.0,
        rate_lo=np.array([0.0, 0.0]),
    )


def build_competition(alpha: float = 1.0, beta: float = 1.0) -> JumpModel:
    if not (alpha > 0 and beta > 0):
        raise ParameterError(f"competition needs alpha, beta > 0, got {alpha}, {beta}")
    s = 1.0 / (2 * alpha + beta)
    return JumpModel(
        name="competition",
        kind=K.COMPETITION,
        params={"alpha": float(alpha), "beta": float(beta)},
        par=np.array([alpha, beta], dtype=float),
        steps=np.array([[1, 0], [-1, 0], [0, 1], [0, -1]]),
        lo=np.array([0.0, 0.0]),
        hi=np.array([2.0, 2.0]),
        initial_state=np.array([1.0, 1.0]),
        terminate_on_zero=False,
        saddle_guess=np.array([s, s]) * 1.1,
        # b^N - b = (alpha x1, alpha x2) / N, at most 2 alpha / N on S
        consistency_const=2.0 * alpha,
    )


def build_linear_toy(lam: float = 1.0, mu: float = 1.0, c1: float = 1.0,
                     c2: float = 1.0, x0=(0.5, 0.0)) -> JumpModel:
    if min(lam, mu, c1, c2) <= 0:
        raise ParameterError("linear toy parameters must be positive")
    lo = np.array([-c1 / mu, -c2 / lam])
    hi = -lo
    x0 = _vec(x0)
    if not (np.all(lo < x0) and np.all(x0 < hi)):
        raise ParameterError(f"initial state {x0.tolist()} outside the linear toy domain")
    return JumpModel(
        name="linear_toy",
        kind=K.LINEAR_TOY,
        params={"lam": float(lam), "mu": float(mu), "c1": float(c1), "c2": float(c2),
                "x0": x0.tolist()},
        par=np.array([mu, lam, c1, c2], dtype=float),
        steps=np.array([[1, 0], [-1, 0], [0, 1], [0, -1]]),
        lo=lo,
        hi=hi,
        initial_state=x0,
        terminate_on_zero=False,
        saddle_guess=np.zeros(2),
        consistency_const=0.0,
    )


def drift_of(model, x) -> np.ndarray:
    return model.drift(model._check(x) if isinstance(model, JumpModel) else model.base._check(x))


def diffusion_of(model, x) -> np.ndarray:
    return model.diffusion(model._check(x) if isinstance(model, JumpModel) else model.base._check(x))


@dataclass(frozen=True)
class DriftSpec:
    """Drift in canonical coordinates, b(y) = B y + tau(y)."""

    B: np.ndarray
    tau: Callable[[np.ndarray], np.ndarray]
    b: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_frame(cls, frame) -> "DriftSpec":
        model, p, R, Ri = frame.model, frame.p, frame.R, frame.R_inv
        B = np.diag([-frame.mu, frame.lam])

        def b(y):
            return R @ model.drift(p + Ri @ _vec(y))

        def tau(y):
            y = _vec(y)
            return b(y) - B @ y

        def jac(y):
            return R @ model.drift_jacobian(p + Ri @ _vec(y)) @ Ri

        return cls(B=B, tau=tau, b=b, jacobian=jac)


MODEL_BUILDERS = {
    "okcorral": build_ok_corral,
    "competition": build_competition,
    "linear_toy": build_linear_toy,
}


def build_model(name: str, params: dict | None = None, diffusion: bool = False,
                noise: float = 1.0):
    """Build a model by name; ``deterministic_toy`` is the noiseless linear toy."""
    params = dict(params or {})
    if name == "deterministic_toy":
        return DiffusionModel(build_linear_toy(**params), noise=0.0)
    if name not in MODEL_BUILDERS:
        raise ParameterError(f"unknown model {name!r}; choose from {sorted(MODEL_BUILDERS)}")
    try:
        m = MODEL_BUILDERS[name](**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {exc}") from None
    if diffusion or noise != 1.0:
        return DiffusionModel(m, noise=noise)
    return m
