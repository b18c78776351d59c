"""Hermite-Gaussian mode algebra.

Basis vectors ``|m, n>`` are stored sparsely; the cubic generators act on
them as banded (tridiagonal in ``m``) matrices with real couplings
``beta(m, n) = 0.5 * sqrt(m + 1) * (1 - m - n)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .fields import Grid, GridWarning, GridWavefunction

__all__ = [
    "ModeIndex",
    "ModeVector",
    "beta",
    "apply_t4",
    "apply_t5",
    "apply_t0_1d",
    "apply_diag38",
    "project_n",
    "mode_eval",
    "hermite_function",
    "mode_superposition",
    "mode_project",
]


@dataclass(frozen=True, order=True)
class ModeIndex:
    m: int
    n: int = 0

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 0 or self.n < 0:
            raise ValueError(f"mode indices must be non-negative integers, got ({self.m}, {self.n})")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))


def _key(k) -> ModeIndex:
    if isinstance(k, ModeIndex):
        return k
    if isinstance(k, (int, np.integer)):
        return ModeIndex(int(k), 0)
    return ModeIndex(*k)


@dataclass(frozen=True)
class ModeVector:
    """Finite linear combination of ``|m, n>``; exact zeros are dropped."""

    coeffs: Mapping[ModeIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, c in dict(self.coeffs).items():
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError("coefficients must be finite")
            if c != 0:
                key = _key(k)
                clean[key] = clean.get(key, 0j) + c
        object.__setattr__(self, "coeffs", {k: v for k, v in clean.items() if v != 0})

    @classmethod
    def basis(cls, m: int, n: int = 0) -> "ModeVector":
        return cls({ModeIndex(m, n): 1.0})

    @classmethod
    def from_items(cls, items: Iterable[tuple[tuple[int, int], complex]]) -> "ModeVector":
        acc: dict[ModeIndex, complex] = {}
        for k, c in items:
            key = _key(k)
            acc[key] = acc.get(key, 0j) + complex(c)
        return cls(acc)

    def __getitem__(self, k) -> complex:
        return self.coeffs.get(_key(k), 0j)

    def __iter__(self) -> Iterator[ModeIndex]:
        return iter(sorted(self.coeffs))

    def __len__(self) -> int:
        return len(self.coeffs)

    def items(self):
        return sorted(self.coeffs.items())

    def __add__(self, other: "ModeVector") -> "ModeVector":
        return ModeVector.from_items(list(self.coeffs.items()) + list(other.coeffs.items()))

    def __sub__(self, other: "ModeVector") -> "ModeVector":
        return self + (-1.0) * other

    def __mul__(self, c: complex) -> "ModeVector":
        return ModeVector({k: v * c for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def inner(self, other: "ModeVector") -> complex:
        """``<self | other>``, linear in ``self`` and antilinear in ``other``."""
        return sum((v * other[k].conjugate() for k, v in self.coeffs.items()), 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 for v in self.coeffs.values()))

    def max_m(self) -> int:
        return max((k.m for k in self.coeffs), default=-1)

    def bands(self) -> list[int]:
        return sorted({k.n for k in self.coeffs})

    def allclose(self, other: "ModeVector", atol: float = 1e-12) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self[k] - other[k]) <= atol for k in keys)


def beta(m: int, n: int = 0) -> float:
    """Coupling ``0.5 * sqrt(m + 1) * (1 - m - n)``."""
    if m < 0 or n < 0:
        raise ValueError("beta needs m, n >= 0")
    k = 1 - m - n
    # one correctly rounded sqrt of an exact integer keeps the result within half an ulp
    return math.copysign(0.5 * math.sqrt((m + 1) * k * k), k) if k else 0.0


def _tridiag(v: ModeVector, up, down) -> ModeVector:
    out: dict[ModeIndex, complex] = {}
    for k, c in v.coeffs.items():
        m, n = k.m, k.n
        wu = up(m, n)
        if wu != 0:
            key = ModeIndex(m + 1, n)
            out[key] = out.get(key, 0j) + wu * c
        if m > 0:
            wd = down(m, n)
            if wd != 0:
                key = ModeIndex(m - 1, n)
                out[key] = out.get(key, 0j) + wd * c
    return ModeVector(out)


def apply_t4(v: ModeVector) -> ModeVector:
    """``T4 |m,n> = beta(m,n) |m+1,n> + beta(m-1,n) |m-1,n>``."""
    return _tridiag(v, beta, lambda m, n: beta(m - 1, n))


def apply_t5(v: ModeVector) -> ModeVector:
    """Fourier conjugate of ``T4``: ``-i beta(m,n) |m+1,n> + i beta(m-1,n) |m-1,n>``."""
    return _tridiag(v, lambda m, n: -1j * beta(m, n), lambda m, n: 1j * beta(m - 1, n))


def apply_diag38(v: ModeVector) -> ModeVector:
    """``(T3 + sqrt(3) T8) / 2`` which is diagonal with eigenvalue ``m + n/2 - 1/2``."""
    return ModeVector({k: (k.m + 0.5 * k.n - 0.5) * c for k, c in v.coeffs.items()})


def apply_t0_1d(v: ModeVector) -> ModeVector:
    """``T0 = (a^+ + a - a^+ a^+ a - a^+ a a) / 2`` on functions of x only.

    Written directly from the ladder rules ``a|m> = sqrt(m)|m-1>``,
    ``a^+|m> = sqrt(m+1)|m+1>``; the couplings coincide with ``beta(m, 0)``.
    """
    for k in v.coeffs:
        if k.n != 0:
            raise ValueError("apply_t0_1d acts on one-dimensional (n = 0) mode vectors")

    def up(m, n):
        return 0.5 * (math.sqrt(m + 1) - m * math.sqrt(m + 1))

    def down(m, n):
        return 0.5 * (math.sqrt(m) - (m - 1) * math.sqrt(m))

    return _tridiag(v, up, down)


def project_n(v: ModeVector, n: int) -> ModeVector:
    return ModeVector({k: c for k, c in v.coeffs.items() if k.n == n})


def hermite_function(m_max: int, x: np.ndarray, h: float) -> np.ndarray:
    """Rows ``0..m_max`` of semiclassical Hermite functions at ``x``.

    ``phi_0 = (pi h)^(-1/4) exp(-x^2 / 2h)`` and
    ``phi_{m+1} = sqrt(2/((m+1)h)) x phi_m - sqrt(m/(m+1)) phi_{m-1}``,
    the normalized form of repeated application of ``(x - h d/dx)/sqrt(2h)``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((m_max + 1,) + x.shape)
    out[0] = (math.pi * h) ** -0.25 * np.exp(-x ** 2 / (2 * h))
    if m_max >= 1:
        out[1] = math.sqrt(2.0 / h) * x * out[0]
    for m in range(1, m_max):
        out[m + 1] = math.sqrt(2.0 / ((m + 1) * h)) * x * out[m] - math.sqrt(m / (m + 1)) * out[m - 1]
    return out


def mode_eval(idx: ModeIndex | tuple[int, int], h: float, grid: Grid) -> GridWavefunction:
    """Samples of the normalized mode ``|m, n>`` on ``grid`` (1D grids take ``n = 0``)."""
    idx = _key(idx)
    if h <= 0:
        raise ValueError("h must be positive")
    if max(grid.spacing) > math.sqrt(h) / 4:
        warnings.warn(f"grid spacing {max(grid.spacing):.3g} under-resolves modes at h={h}",
                      GridWarning, stacklevel=2)
    need = math.sqrt(h) * (math.sqrt(2 * (idx.m + idx.n) + 1) + 4)
    if min(grid.extent) < need:
        warnings.warn(f"grid extent {min(grid.extent):.3g} truncates mode {idx}", GridWarning,
                      stacklevel=2)
    g = grid.with_h(h)
    if grid.dims == 1:
        if idx.n != 0:
            raise ValueError("a 1D grid cannot carry a y-order")
        vals = hermite_function(idx.m, g.axes[0], h)[idx.m]
    else:
        ax, ay = g.axes
        vals = np.outer(hermite_function(idx.m, ax, h)[idx.m], hermite_function(idx.n, ay, h)[idx.n])
    return GridWavefunction(g, vals)


def mode_superposition(v: ModeVector, h: float, grid: Grid) -> GridWavefunction:
    """Evaluate a finite mode combination on a grid."""
    out = np.zeros(grid.points, dtype=complex)
    for k, c in v.coeffs.items():
        out += c * mode_eval(k, h, grid).values
    return GridWavefunction(grid.with_h(h), out)


def mode_project(f: GridWavefunction, h: float, m_max: int) -> ModeVector:
    """Coefficients ``<f, phi_m>`` for ``m <= m_max`` of a 1D wavefunction (grid quadrature)."""
    if f.grid.dims != 1:
        raise ValueError("mode_project is one-dimensional")
    basis = hermite_function(m_max, f.grid.axes[0], h)
    c = basis @ f.values * f.grid.spacing[0]
    return ModeVector({ModeIndex(m, 0): complex(v) for m, v in enumerate(c)})
