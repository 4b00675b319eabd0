"""Right-hand side of the nonlocal first-order system, conserved functionals,
a priori bounds and pointwise defect diagnostics.

The evolution is

    u_t   = (u + gamma) u_x + d/dx A^{-1}(2 mu0 u + u_x^2/2 + rho^2/2)
    rho_t = (rho u)_x + gamma rho_x

with mu0 the (conserved) mean of u.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from muhs.grid import deriv, l2_norm, mean, sup_norm
from muhs.operator import ainv_dx_spectral

__all__ = [
    "HOLDS_TOL",
    "State",
    "Params",
    "ConservedInit",
    "BoundReport",
    "rhs",
    "mu0",
    "energy",
    "sup_bound",
    "sup_bound_check",
    "poincare_gap",
    "c1_tilde",
    "c2_tilde",
    "c1_bound",
    "c2_bound",
    "energy_rate",
    "energy_transport_residual",
    "ux_equation_residual",
]

HOLDS_TOL = 1e-8
SQRT3_6 = math.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class State:
    u: np.ndarray
    rho: np.ndarray
    t: float = 0.0
    blown_up: bool = False

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        if u.shape != rho.shape or u.ndim != 1:
            raise ValueError(f"u and rho must be 1-d arrays of equal length, got {u.shape} and {rho.shape}")
        if not self.blown_up and not (np.all(np.isfinite(u)) and np.all(np.isfinite(rho))):
            raise ValueError("non-finite values in a state not flagged as blown up")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.rho)))

    def flagged(self) -> "State":
        return replace(self, blown_up=True)


@dataclass(frozen=True)
class Params:
    gamma: float = 0.0
    dealias: bool = False

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")


@dataclass(frozen=True)
class ConservedInit:
    """Invariants and norms of the initial data feeding the bound formulas."""

    mu0: float
    mu1_sq: float
    u0_l2: float
    u0x_sup: float
    rho0_sup: float
    beta: float
    alpha: float | None = None

    def __post_init__(self):
        vals = (self.mu0, self.mu1_sq, self.u0_l2, self.u0x_sup, self.rho0_sup, self.beta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("conserved quantities must be finite")
        if self.mu1_sq < 0 or self.beta < 0:
            raise ValueError("mu1_sq and beta must be non-negative")

    @property
    def mu1(self) -> float:
        return math.sqrt(self.mu1_sq)

    @classmethod
    def from_state(cls, s: State, alpha: float | None = None) -> "ConservedInit":
        ux = deriv(s.u)
        return cls(
            mu0=mean(s.u),
            mu1_sq=mean(ux**2 + s.rho**2),
            u0_l2=l2_norm(s.u),
            u0x_sup=sup_norm(ux),
            rho0_sup=sup_norm(s.rho),
            beta=float(np.min(np.abs(s.rho))),
            alpha=alpha,
        )


@dataclass(frozen=True)
class BoundReport:
    margin: float
    holds: bool


@lru_cache(maxsize=16)
def _dealias_mask(n: int) -> np.ndarray:
    k = np.arange(n // 2 + 1)
    m = (k <= n // 3).astype(float)
    m.flags.writeable = False
    return m


def _truncate(f: np.ndarray) -> np.ndarray:
    n = f.shape[-1]
    return np.fft.irfft(np.fft.rfft(f) * _dealias_mask(n), n)


def rhs(s: State, p: Params) -> tuple[np.ndarray, np.ndarray]:
    """Tendencies (du/dt, drho/dt). Non-finite input yields NaN tendencies."""
    if s.blown_up or not s.finite:
        nan = np.full(s.n, np.nan)
        return nan, nan.copy()
    u, rho = s.u, s.rho
    if p.dealias:
        u, rho = _truncate(u), _truncate(rho)
    ux = deriv(u)
    m0 = mean(u)
    forcing = 2.0 * m0 * u + 0.5 * ux * ux + 0.5 * rho * rho
    flux = rho * u
    transport = (u + p.gamma) * ux
    if p.dealias:
        forcing, flux, transport = _truncate(forcing), _truncate(flux), _truncate(transport)
    du = transport + ainv_dx_spectral(forcing)
    drho = deriv(flux) + p.gamma * deriv(rho)
    return du, drho


def mu0(s: State) -> float:
    return mean(s.u)


def energy(s: State) -> float:
    """Integral of u_x^2 + rho^2 (the squared conserved quantity mu1^2)."""
    return mean(deriv(s.u) ** 2 + s.rho**2)


def sup_bound(c: ConservedInit) -> float:
    """|mu0| + (sqrt 3 / 6) mu1."""
    return abs(c.mu0) + SQRT3_6 * c.mu1


def sup_bound_check(s: State, c: ConservedInit, tol: float = HOLDS_TOL) -> BoundReport:
    if s.blown_up or not s.finite:
        return BoundReport(-math.inf, False)
    margin = sup_bound(c) - sup_norm(s.u)
    return BoundReport(margin, margin >= -tol)


def poincare_gap(f: np.ndarray) -> float:
    """(1/12) int g_x^2 - max g^2 for g = f - mean(f); non-negative on the circle."""
    g = np.asarray(f, dtype=float) - mean(f)
    return mean(deriv(g) ** 2) / 12.0 - float(np.max(g * g))


def _require_beta(c: ConservedInit):
    if not c.beta > 0:
        raise ValueError(f"bounds need inf|rho0| > 0, got beta={c.beta}")


def c1_tilde(t: float, c: ConservedInit) -> float:
    """Bound on sup|u_x(t)| using ||u0||_2 in place of |mu0|."""
    _require_beta(c)
    rate = 4.0 * c.u0_l2**2 + 0.5 * c.mu1_sq + (math.sqrt(3.0) / 3.0) * c.u0_l2 * c.mu1 + 0.5
    return (1.0 + c.rho0_sup**2 + c.u0x_sup**2) / (2.0 * c.beta) * math.exp(rate * t)


def c2_tilde(t: float, c: ConservedInit) -> float:
    """Bound on sup|rho(t)|."""
    return math.exp(c1_tilde(t, c) * t) * c.rho0_sup


def c1_bound(t: float, c: ConservedInit) -> float:
    """Sharper strong-solution bound with |mu0| in the exponent."""
    _require_beta(c)
    rate = 4.0 * c.mu0**2 + 0.5 * c.mu1_sq + (math.sqrt(3.0) / 3.0) * abs(c.mu0) * c.mu1 + 0.5
    return (1.0 + c.rho0_sup**2 + c.u0x_sup**2) / (2.0 * c.beta) * math.exp(rate * t)


def c2_bound(t: float, c: ConservedInit) -> float:
    return math.exp(c1_bound(t, c) * t) * c.rho0_sup


def energy_rate(s: State, tend: tuple[np.ndarray, np.ndarray]) -> float:
    """d/dt of the energy implied by the tendencies."""
    du, drho = tend
    return mean(2.0 * deriv(s.u) * deriv(du) + 2.0 * s.rho * drho)


def energy_transport_residual(
    s: State, p: Params, tend: tuple[np.ndarray, np.ndarray], mu1_sq: float | None = None
) -> np.ndarray:
    """Defect of
        d/dt(u_x^2 + rho^2) - d/dx[(u + gamma)(u_x^2 + rho^2)]
            = -4 mu0 u u_x + 4 mu0^2 u_x + u_x mu1^2.

    ``mu1_sq`` defaults to the state's own energy; pass the initial value to
    test against the frozen constant.
    """
    du, drho = tend
    u, rho = s.u, s.rho
    ux = deriv(u)
    m0 = mean(u)
    m1 = energy(s) if mu1_sq is None else mu1_sq
    e = ux * ux + rho * rho
    dt_e = 2.0 * ux * deriv(du) + 2.0 * rho * drho
    rhs_side = -4.0 * m0 * u * ux + 4.0 * m0 * m0 * ux + ux * m1
    return dt_e - deriv((u + p.gamma) * e) - rhs_side


def ux_equation_residual(
    s: State, p: Params, tend: tuple[np.ndarray, np.ndarray], mu1_sq: float | None = None
) -> np.ndarray:
    """Defect of u_tx - (u + gamma) u_xx = -2 mu0 u + u_x^2/2 - rho^2/2 + 2 mu0^2 + mu1^2/2."""
    du, _ = tend
    u, rho = s.u, s.rho
    ux = deriv(u)
    m0 = mean(u)
    m1 = energy(s) if mu1_sq is None else mu1_sq
    right = -2.0 * m0 * u + 0.5 * ux * ux - 0.5 * rho * rho + 2.0 * m0 * m0 + 0.5 * m1
    return deriv(du) - (u + p.gamma) * deriv(ux) - right
