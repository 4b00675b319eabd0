"""Uniform periodic grid on the unit circle and its spectral toolkit.

Fields are plain float64 arrays of length ``n`` sampled at ``x_j = j/n``.
Every operation infers ``n`` from the array length, so a :class:`PeriodicGrid`
is only needed to produce node locations and to validate resolutions.

Transforms use ``numpy.fft.rfft`` scaled by ``1/n`` so that coefficient 0 is
the mean of the field.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "PeriodicGrid",
    "make_grid",
    "mean",
    "deriv",
    "deriv2",
    "cumint",
    "l2_norm",
    "sup_norm",
    "transform",
    "inverse_transform",
    "wavenumbers",
    "evaluate",
    "parseval_energy",
    "random_bandlimited",
]


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform discretization of [0, 1) with ``n`` nodes."""

    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise TypeError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 4 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 4, got {self.n}")
        x = np.arange(self.n) / self.n
        x.flags.writeable = False
        object.__setattr__(self, "nodes", x)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n)

    def sample(self, func) -> np.ndarray:
        """Evaluate a vectorized callable at the nodes."""
        return np.asarray(func(self.nodes), dtype=float) * np.ones(self.n)


def make_grid(n: int) -> PeriodicGrid:
    return PeriodicGrid(int(n) if isinstance(n, np.integer) else n)


@lru_cache(maxsize=64)
def wavenumbers(n: int) -> np.ndarray:
    """Angular wavenumbers 2*pi*k for the rfft layout of an n-point field."""
    k = 2.0 * np.pi * np.arange(n // 2 + 1)
    k.flags.writeable = False
    return k


@lru_cache(maxsize=64)
def _odd_symbol(n: int) -> np.ndarray:
    # i*2*pi*k with the Nyquist entry zeroed
    s = 1j * wavenumbers(n)
    s = s.copy()
    s[-1] = 0.0
    s.flags.writeable = False
    return s


def transform(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return np.fft.rfft(f) / f.shape[-1]


def inverse_transform(fhat: np.ndarray, n: int) -> np.ndarray:
    return np.fft.irfft(fhat * n, n)


def mean(f: np.ndarray) -> float:
    """Periodic trapezoid rule for the integral over one period."""
    return float(np.mean(f))


def deriv(f: np.ndarray) -> np.ndarray:
    """Spectral first derivative; the Nyquist mode is discarded."""
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    return np.fft.irfft(np.fft.rfft(f) * _odd_symbol(n), n)


def deriv2(f: np.ndarray) -> np.ndarray:
    """Spectral second derivative (Nyquist mode kept, the symbol is real)."""
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    return np.fft.irfft(-np.fft.rfft(f) * wavenumbers(n) ** 2, n)


def _periodic_antiderivative(f: np.ndarray) -> np.ndarray:
    """Mean-zero periodic G with G' = f - mean(f)."""
    n = f.shape[-1]
    fhat = np.fft.rfft(f)
    sym = _odd_symbol(n)
    ghat = np.zeros_like(fhat)
    ghat[1:-1] = fhat[1:-1] / sym[1:-1]
    return np.fft.irfft(ghat, n)


def cumint(f: np.ndarray) -> np.ndarray:
    """F(x_j) = integral of f from 0 to x_j.

    The mean-zero part is integrated spectrally and the mean contributes the
    linear ramp ``mean(f) * x``. The result is not periodic unless f has zero
    mean, so it should not be fed back into spectral routines; use
    :class:`muhs.operator.PolyPeriodic` for repeated integration.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    g = _periodic_antiderivative(f)
    return g - g[0] + np.mean(f) * (np.arange(n) / n)


def l2_norm(f: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(f))))


def sup_norm(f: np.ndarray) -> float:
    return float(np.max(np.abs(f)))


def parseval_energy(f: np.ndarray) -> float:
    """Sum of squared coefficient magnitudes; equals mean(f**2)."""
    c = np.abs(transform(f)) ** 2
    n = np.shape(f)[-1]
    return float(c[0] + 2.0 * c[1 : n // 2].sum() + c[n // 2])


def evaluate(fhat: np.ndarray, x: np.ndarray, n: int) -> np.ndarray:
    """Evaluate the trigonometric interpolant with rfft coefficients ``fhat``
    (scaled by 1/n) at arbitrary points ``x``.

    The Nyquist term is taken as its real cosine part.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = np.arange(n // 2 + 1)
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    phase = np.exp(2j * np.pi * np.outer(x, k))
    return (phase @ (w * fhat)).real


def random_bandlimited(n: int, kmax: int, rng: np.random.Generator, mean_value=None) -> np.ndarray:
    """Random real field with modes 0 < |k| <= kmax; kmax must stay below n/2."""
    if not 0 < kmax < n // 2:
        raise ValueError(f"kmax must satisfy 0 < kmax < n/2, got {kmax} for n={n}")
    fhat = np.zeros(n // 2 + 1, dtype=complex)
    fhat[1 : kmax + 1] = rng.normal(size=kmax) + 1j * rng.normal(size=kmax)
    fhat[0] = rng.normal() if mean_value is None else mean_value
    return inverse_transform(fhat, n)
