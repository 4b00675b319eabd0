"""The operator A = mu - d^2/dx^2 on the circle and three routes to its inverse.

* :func:`ainv_formula` evaluates the closed-form double/triple-integral
  expression for v = A^{-1} w.
* :func:`conv_green` convolves with the explicit Green's kernel
  g(x) = x(x-1)/2 + 13/12.
* :func:`ainv_spectral` divides Fourier mode k != 0 by (2 pi k)^2.

The three must agree; the spectral route is the one used by the dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from muhs.grid import PeriodicGrid, _periodic_antiderivative, deriv, mean, wavenumbers

__all__ = [
    "GREEN_CONSTANT",
    "PolyPeriodic",
    "green",
    "GreenKernel",
    "green_kernel",
    "IdentityCheck",
    "operator_suite",
    "green_coefficients",
    "ainv_formula",
    "ainv_spectral",
    "conv_green",
    "ainv_dx",
    "ainv_dx_spectral",
    "ainv_dxx",
    "apply_A",
]

GREEN_CONSTANT = 13.0 / 12.0


class PolyPeriodic:
    """A function on [0, 1] stored as polynomial(x) + periodic(x).

    Integration is exact on the polynomial part and spectral on the periodic
    part, so repeated antiderivatives never feed a non-periodic ramp back into
    an FFT.
    """

    def __init__(self, poly: Polynomial, periodic: np.ndarray):
        self.poly = poly
        self.periodic = np.asarray(periodic, dtype=float)

    @classmethod
    def from_samples(cls, w: np.ndarray) -> "PolyPeriodic":
        return cls(Polynomial([0.0]), w)

    @property
    def n(self) -> int:
        return self.periodic.shape[-1]

    def antiderivative(self) -> "PolyPeriodic":
        """x -> integral from 0 to x."""
        q = self.periodic
        g = _periodic_antiderivative(q)
        poly = self.poly.integ(lbnd=0.0) + Polynomial([-g[0], np.mean(q)])
        return PolyPeriodic(poly, g)

    def total(self) -> float:
        """Integral over [0, 1]."""
        return float(self.poly.integ(lbnd=0.0)(1.0) + np.mean(self.periodic))

    def samples(self) -> np.ndarray:
        x = np.arange(self.n) / self.n
        return self.poly(x) + self.periodic


def green(x: np.ndarray) -> np.ndarray:
    """The periodic Green's kernel evaluated at arbitrary points."""
    y = np.mod(x, 1.0)
    return 0.5 * y * (y - 1.0) + GREEN_CONSTANT


@dataclass(frozen=True)
class GreenKernel:
    """Node samples of g together with its quadrature Fourier coefficients.

    The node trapezoid mean of the samples is 1 + 1/(12 n^2) because of the
    kernel's corner at x = 0; :meth:`mean` integrates the exact polynomial.
    """

    values: np.ndarray
    coefficients: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    def mean(self) -> float:
        return float(self.coefficients[0].real)

    def node_mean(self) -> float:
        return mean(self.values)


def green_kernel(grid: PeriodicGrid) -> GreenKernel:
    return GreenKernel(green(grid.nodes), green_coefficients(grid.n))


@lru_cache(maxsize=32)
def green_coefficients(n: int) -> np.ndarray:
    """Fourier coefficients of g for modes 0..n/2, by Gauss-Legendre quadrature.

    g is a polynomial on (0, 1), so a rule with enough nodes to resolve the
    highest oscillation integrates g(x) exp(-2 pi i k x) to roundoff. The
    kernel's corner sits at the interval endpoints, where it does no harm.
    """
    m = 2 * n + 64
    t, w = np.polynomial.legendre.leggauss(m)
    x = 0.5 * (t + 1.0)
    w = 0.5 * w
    k = np.arange(n // 2 + 1)
    gx = 0.5 * x * (x - 1.0) + GREEN_CONSTANT
    c = (np.exp(-2j * np.pi * np.outer(k, x)) * (w * gx)).sum(axis=1)
    c.flags.writeable = False
    return c


def ainv_formula(w: np.ndarray) -> np.ndarray:
    """Closed-form inverse via nested integrals.

    v(x) = (x^2/2 - x/2 + 13/12) mu(w) + (x - 1/2) I2 - C2(x) + I3
    with C1 = int_0^x w, C2 = int_0^x C1, I2 = int_0^1 C1, I3 = int_0^1 C2.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[-1]
    x = np.arange(n) / n
    c1 = PolyPeriodic.from_samples(w).antiderivative()
    c2 = c1.antiderivative()
    i2 = c1.total()
    i3 = c2.total()
    return (0.5 * x * x - 0.5 * x + GREEN_CONSTANT) * mean(w) + (x - 0.5) * i2 - c2.samples() + i3


def _inverse_symbol(n: int) -> np.ndarray:
    k2 = wavenumbers(n) ** 2
    s = np.empty_like(k2)
    s[0] = 1.0
    s[1:] = 1.0 / k2[1:]
    return s


def ainv_spectral(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    n = w.shape[-1]
    return np.fft.irfft(np.fft.rfft(w) * _inverse_symbol(n), n)


def conv_green(w: np.ndarray, sampled: bool = False) -> np.ndarray:
    """Periodic convolution (g * w)(x) = int_0^1 g(x - y) w(y) dy.

    With ``sampled=True`` the kernel is sampled at the nodes and the
    convolution is a plain discrete sum; the derivative jump of g at 0 makes
    that variant only second-order accurate. The default multiplies by the
    kernel's own Fourier coefficients.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[-1]
    if sampled:
        ghat = np.fft.rfft(green(np.arange(n) / n)) / n
    else:
        ghat = green_coefficients(n)
    return np.fft.irfft(np.fft.rfft(w) * ghat, n)


def ainv_dx(w: np.ndarray) -> np.ndarray:
    """A^{-1} d/dx w = (x - 1/2) mu(w) - int_0^x w + int_0^1 int_0^x w."""
    w = np.asarray(w, dtype=float)
    n = w.shape[-1]
    x = np.arange(n) / n
    c1 = PolyPeriodic.from_samples(w).antiderivative()
    return (x - 0.5) * mean(w) - c1.samples() + c1.total()


def ainv_dx_spectral(w: np.ndarray) -> np.ndarray:
    """Symbol route for d/dx A^{-1}: mode k multiplied by i/(2 pi k)."""
    w = np.asarray(w, dtype=float)
    n = w.shape[-1]
    k = wavenumbers(n)
    what = np.fft.rfft(w)
    out = np.zeros_like(what)
    out[1:-1] = what[1:-1] * (1j / k[1:-1])
    return np.fft.irfft(out, n)


def ainv_dxx(w: np.ndarray) -> np.ndarray:
    """A^{-1} d^2/dx^2 w = -w + mu(w), pointwise."""
    w = np.asarray(w, dtype=float)
    return -w + mean(w)


def apply_A(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return mean(v) - deriv(deriv(v))


@dataclass
class IdentityCheck:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


def operator_suite(n: int, trials: int = 50, seed: int = 0, kmax: int | None = None) -> list[IdentityCheck]:
    """Run every operator identity on random band-limited inputs.

    Inputs are scaled to unit sup-norm. Transform-route agreements use 1e-9,
    the pointwise d^2/dx^2 identity must be exact and mu(g) holds to 1e-12. Below n = 16
    the transform tolerance is relaxed to 1e-8 (few modes, larger relative
    roundoff in the polynomial parts).
    """
    from muhs.grid import make_grid, random_bandlimited

    grid = make_grid(n)
    rng = np.random.default_rng(seed)
    if kmax is None:
        kmax = max(1, min(n // 2 - 1, n // 8 if n >= 32 else n // 2 - 1))
    route_tol = 1e-9 if n >= 16 else 1e-8
    errs = {k: 0.0 for k in ("formula_vs_spectral", "green_vs_spectral", "round_trip", "commutation", "dxx_identity")}
    for _ in range(trials):
        w = random_bandlimited(n, kmax, rng)
        w /= np.max(np.abs(w))
        ref = ainv_spectral(w)
        errs["formula_vs_spectral"] = max(errs["formula_vs_spectral"], np.max(np.abs(ainv_formula(w) - ref)))
        errs["green_vs_spectral"] = max(errs["green_vs_spectral"], np.max(np.abs(conv_green(w) - ref)))
        errs["round_trip"] = max(errs["round_trip"], np.max(np.abs(apply_A(ref) - w)))
        errs["commutation"] = max(errs["commutation"], np.max(np.abs(ainv_dx(w) - deriv(ref))))
        errs["dxx_identity"] = max(errs["dxx_identity"], np.max(np.abs(ainv_dxx(w) - (mean(w) - w))))
    g = green_kernel(grid)
    return [
        IdentityCheck("formula_vs_spectral", errs["formula_vs_spectral"], route_tol),
        IdentityCheck("green_vs_spectral", errs["green_vs_spectral"], route_tol),
        IdentityCheck("round_trip", errs["round_trip"], 1e-10 if n >= 16 else 1e-8),
        IdentityCheck("commutation", errs["commutation"], route_tol),
        IdentityCheck("dxx_identity", errs["dxx_identity"], 0.0),
        IdentityCheck("green_mean", abs(g.mean() - 1.0), 1e-12),
    ]
