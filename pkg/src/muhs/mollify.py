"""Bump-function mollifiers and the rough initial-data library.

phi(x) = exp(1/(x^2 - 1)) on |x| < 1, phi_n(x) = n phi(n x) / int(phi),
periodized onto the circle. Grid samples of phi_n are renormalized to unit
discrete mean so that convolution preserves means and contracts L2 norms to
machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
from scipy import integrate

from muhs.dynamics import ConservedInit, State
from muhs.grid import PeriodicGrid, deriv, l2_norm, mean

__all__ = [
    "bump",
    "bump_integral",
    "MollifierSpec",
    "mollifier",
    "mollify",
    "Profile",
    "ConstantProfile",
    "HatProfile",
    "StepProfile",
    "FourierProfile",
    "SampledProfile",
    "profile_from_dict",
    "RoughInitialData",
    "make_initial",
    "mollification_norms",
]


def bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 / (x[inside] ** 2 - 1.0))
    return out if out.ndim else float(out)


@lru_cache(maxsize=1)
def bump_integral() -> float:
    """int_{-1}^{1} phi, by adaptive quadrature (about 0.443994)."""
    val, _ = integrate.quad(lambda s: float(bump(s)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    return val


@dataclass(frozen=True)
class MollifierSpec:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"mollifier index must be an integer >= 2, got {self.n}")


def _as_spec(spec) -> MollifierSpec:
    return spec if isinstance(spec, MollifierSpec) else MollifierSpec(int(spec))


def mollifier(spec, grid: PeriodicGrid) -> np.ndarray:
    spec = _as_spec(spec)
    y = np.mod(grid.nodes + 0.5, 1.0) - 0.5
    phi = spec.n * bump(spec.n * y) / bump_integral()
    return phi / mean(phi)


def mollify(f: np.ndarray, spec) -> np.ndarray:
    """Periodic convolution phi_n * f.

    Evaluated as a direct sum over the kernel's support, applied to
    f - min f. All terms are then non-negative, so min f <= result holds
    exactly in floating point (an FFT convolution misses it by a few ulps).
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    w = mollifier(spec, PeriodicGrid(n)) / n
    floor = float(np.min(f))
    g = f - floor
    out = np.zeros(n)
    for k in np.flatnonzero(w):
        out += w[k] * np.roll(g, k)
    return floor + out


# -- rough profiles ---------------------------------------------------------


class Profile:
    """A periodic profile given by an explicit formula.

    ``derivative`` returns the a.e. derivative, or None where the profile is
    only bounded (not Lipschitz).
    """

    kind = "abstract"

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x):
        return None

    @property
    def lipschitz(self) -> float:
        return float("inf")


@dataclass(frozen=True)
class ConstantProfile(Profile):
    value: float = 0.0
    kind = "constant"

    def __call__(self, x):
        return np.full(np.shape(x), float(self.value))

    def derivative(self, x):
        return np.zeros(np.shape(x))

    @property
    def lipschitz(self) -> float:
        return 0.0


@dataclass(frozen=True)
class HatProfile(Profile):
    """Triangular wave offset + slope * dist(x - center, Z)."""

    slope: float = 1.0
    offset: float = 0.0
    center: float = 0.0
    kind = "hat"

    def _y(self, x):
        return np.mod(np.asarray(x, dtype=float) - self.center, 1.0)

    def __call__(self, x):
        y = self._y(x)
        return self.offset + self.slope * np.minimum(y, 1.0 - y)

    def derivative(self, x):
        # one-sided value at the corners
        y = self._y(x)
        return np.where(y < 0.5, self.slope, -self.slope)

    @property
    def lipschitz(self) -> float:
        return abs(self.slope)


@dataclass(frozen=True)
class StepProfile(Profile):
    """``high`` on [start, stop) (mod 1), ``low`` elsewhere."""

    low: float = 1.0
    high: float = 2.0
    start: float = 0.25
    stop: float = 0.75
    kind = "step"

    def __call__(self, x):
        y = np.mod(np.asarray(x, dtype=float) - self.start, 1.0)
        width = np.mod(self.stop - self.start, 1.0)
        return np.where(y < width, self.high, self.low).astype(float)


@dataclass(frozen=True)
class FourierProfile(Profile):
    """mean + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x); modes as (k, a, b)."""

    mean: float = 0.0
    modes: tuple = ()
    kind = "fourier"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.mean))
        for k, a, b in self.modes:
            out = out + a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k, a, b in self.modes:
            w = 2 * np.pi * k
            out = out - a * w * np.sin(w * x) + b * w * np.cos(w * x)
        return out

    @property
    def lipschitz(self) -> float:
        return float(sum(2 * np.pi * abs(k) * (abs(a) + abs(b)) for k, a, b in self.modes))


@dataclass(frozen=True)
class SampledProfile(Profile):
    """Explicit node values; only usable on a grid of matching size."""

    values: tuple = ()
    kind = "samples"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.shape != v.shape:
            raise ValueError(f"sampled profile has {v.size} values, grid has {x.size} nodes")
        return v.copy()

    @property
    def lipschitz(self) -> float:
        v = np.asarray(self.values, dtype=float)
        return float(np.max(np.abs(np.diff(np.append(v, v[0])))) * v.size)


_KINDS = {
    "constant": ConstantProfile,
    "hat": HatProfile,
    "step": StepProfile,
    "fourier": FourierProfile,
    "samples": SampledProfile,
}


def profile_from_dict(d: dict[str, Any]) -> Profile:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown profile kind {kind!r}; expected one of {sorted(_KINDS)}")
    if kind == "fourier":
        d["modes"] = tuple(tuple(float(v) for v in m) for m in d.get("modes", ()))
        if any(len(m) != 3 for m in d["modes"]):
            raise ValueError("fourier modes must be [k, a, b] triples")
    if kind == "samples":
        d["values"] = tuple(float(v) for v in d.get("values", ()))
    try:
        return _KINDS[kind](**d)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind} profile: {exc}") from None


@dataclass(frozen=True)
class RoughInitialData:
    u0: Profile
    rho0: Profile
    alpha: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if not np.isfinite(self.u0.lipschitz):
            raise ValueError("u0 must be Lipschitz (use hat, fourier, constant or samples)")

    def sample(self, grid: PeriodicGrid) -> tuple[np.ndarray, np.ndarray]:
        u = self.u0(grid.nodes)
        rho = self.rho0(grid.nodes)
        if self.alpha > 0 and np.min(rho) < self.alpha:
            raise ValueError(f"rho0 drops to {np.min(rho):.6g}, below the declared alpha={self.alpha}")
        return u, rho

    def u0_derivative(self, grid: PeriodicGrid) -> np.ndarray:
        d = self.u0.derivative(grid.nodes)
        return deriv(self.u0(grid.nodes)) if d is None else np.asarray(d, dtype=float)

    def rough_invariants(self, grid: PeriodicGrid) -> ConservedInit:
        """Invariants of the unmollified data, using the analytic derivative."""
        u, rho = self.sample(grid)
        ux = self.u0_derivative(grid)
        return ConservedInit(
            mu0=mean(u),
            mu1_sq=mean(ux**2 + rho**2),
            u0_l2=l2_norm(u),
            u0x_sup=float(np.max(np.abs(ux))),
            rho0_sup=float(np.max(np.abs(rho))),
            beta=float(np.min(np.abs(rho))),
            alpha=self.alpha,
        )


def make_initial(data: RoughInitialData, grid: PeriodicGrid, spec=None) -> tuple[State, ConservedInit]:
    """Sample and mollify the rough data; ``spec=None`` skips mollification."""
    u, rho = data.sample(grid)
    if spec is not None:
        u, rho = mollify(u, spec), mollify(rho, spec)
    s = State(u, rho, 0.0)
    return s, ConservedInit.from_state(s, alpha=data.alpha)


def mollification_norms(data: RoughInitialData, grid: PeriodicGrid, spec) -> dict[str, float]:
    """Norms of the mollified data next to those of the rough data."""
    u, rho = data.sample(grid)
    ux = data.u0_derivative(grid)
    un, rhon = mollify(u, spec), mollify(rho, spec)
    unx = deriv(un)
    return {
        "n": _as_spec(spec).n,
        "u0_l2": l2_norm(u),
        "u0n_l2": l2_norm(un),
        "u0x_l2": l2_norm(ux),
        "u0nx_l2": l2_norm(unx),
        "rho0_l2": l2_norm(rho),
        "rho0n_l2": l2_norm(rhon),
        "rho0_min": float(np.min(rho)),
        "rho0n_min": float(np.min(rhon)),
        "mu0": mean(u),
        "mu0n": mean(un),
        "mu1_sq": mean(ux**2 + rho**2),
        "mu1n_sq": mean(unx**2 + rhon**2),
        "h1_distance": float(np.sqrt(mean((un - u) ** 2) + mean((unx - ux) ** 2))),
        "rho_l2_distance": l2_norm(rhon - rho),
    }
