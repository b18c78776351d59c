"""Grid-sampled wavefunctions and the transforms acting on them.

Conventions (used verbatim by the propagators):

* forward semiclassical Fourier transform  ``v^(xi) = int exp(-i x xi / h) v(x) dx``
  (no prefactor), inverse carries ``(2 pi h)**-n``;
* Wigner transform ``W(f, g)(x, xi) = int exp(-i xi p / h) f(x + p/2) conj(g(x - p/2)) dp``,
  so that ``<Op_h^W(sigma) f | g> = (2 pi h)**-1 int int sigma W(f, g)``;
* extended Wigner and partial Fourier transforms use ``h = 1``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "GridWavefunction",
    "GridWarning",
    "PhaseSpaceDensity",
    "sft",
    "isft",
    "wigner",
    "weyl_pairing",
    "extended_wigner",
    "partial_fourier",
    "fourier_rotate",
    "dft_matrix",
    "spectral_derivative",
    "fourier_interpolate",
    "to_json",
    "from_json",
    "save",
    "load",
]

FORMAT_TAG = "semiphoton.gridwf"
FORMAT_VERSION = 1


class GridWarning(UserWarning):
    """Resolution, aliasing or boundary-mass problems on a sampling grid."""


def _is_pow2(k: int) -> bool:
    return k >= 4 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_k = -L + k * 2L/N`` (k = 0..N-1) on every axis.

    ``N`` is a power of two, so the spacing divides the extent and the
    transforms below reduce to plain FFTs.
    """

    points: tuple[int, ...]
    extent: tuple[float, ...]
    h: float = 1.0

    def __post_init__(self):
        if len(self.points) != len(self.extent) or len(self.points) not in (1, 2):
            raise ValueError("grid must be 1D or 2D with one extent per axis")
        for n in self.points:
            if not _is_pow2(int(n)):
                raise ValueError(f"points per axis must be a power of two >= 4, got {n}")
        if any(L <= 0 for L in self.extent):
            raise ValueError("extent must be positive")
        if self.h <= 0:
            raise ValueError("h must be positive")

    @classmethod
    def uniform(cls, dims: int = 1, points: int = 512, extent: float | None = None,
                h: float = 1.0) -> "Grid":
        if extent is None:
            extent = max(8.0 * math.sqrt(h), 8.0)
        return cls((int(points),) * dims, (float(extent),) * dims, float(h))

    @property
    def dims(self) -> int:
        return len(self.points)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * L / n for n, L in zip(self.points, self.extent))

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def axes(self) -> list[np.ndarray]:
        return [-L + np.arange(n) * d for n, L, d in zip(self.points, self.extent, self.spacing)]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def dual(self) -> "Grid":
        """The frequency grid reached by :func:`sft` (spacing ``pi h / L``)."""
        return Grid(self.points, tuple(n * math.pi * self.h / (2 * L)
                                       for n, L in zip(self.points, self.extent)), self.h)

    def with_h(self, h: float) -> "Grid":
        return Grid(self.points, self.extent, h)


@dataclass(frozen=True)
class GridWavefunction:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.points:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.points}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("wavefunction samples must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[..., np.ndarray]) -> "GridWavefunction":
        return cls(grid, func(*grid.mesh()))

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.grid.cell)

    def inner(self, other: "GridWavefunction") -> complex:
        """``<self | other>`` (antilinear in ``other``) on the shared grid."""
        _same_grid(self, other)
        return complex(np.sum(self.values * np.conj(other.values)) * self.grid.cell)

    def distance(self, other: "GridWavefunction") -> float:
        _same_grid(self, other)
        return math.sqrt(float(np.sum(np.abs(self.values - other.values) ** 2)) * self.grid.cell)

    def __add__(self, other: "GridWavefunction") -> "GridWavefunction":
        _same_grid(self, other)
        return GridWavefunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridWavefunction") -> "GridWavefunction":
        _same_grid(self, other)
        return GridWavefunction(self.grid, self.values - other.values)

    def __mul__(self, c: complex) -> "GridWavefunction":
        return GridWavefunction(self.grid, self.values * c)

    __rmul__ = __mul__


def _same_grid(a: GridWavefunction, b: GridWavefunction) -> None:
    if a.grid != b.grid:
        raise ValueError("wavefunctions live on different grids")


def _edge_mass(values: np.ndarray, frac: float = 0.05) -> float:
    """Fraction of |values|^2 in the outer shell of the array (all axes)."""
    total = float(np.sum(np.abs(values) ** 2))
    if total == 0.0:
        return 0.0
    mask = np.zeros(values.shape, dtype=bool)
    for ax, n in enumerate(values.shape):
        k = max(1, int(frac * n))
        idx = [slice(None)] * values.ndim
        idx[ax] = slice(0, k)
        mask[tuple(idx)] = True
        idx[ax] = slice(n - k, n)
        mask[tuple(idx)] = True
    return float(np.sum(np.abs(values[mask]) ** 2)) / total


def _checkerboard(shape: Sequence[int]) -> np.ndarray:
    s = np.ones(shape)
    for ax, n in enumerate(shape):
        sign = (-1.0) ** np.arange(n)
        s = s * sign.reshape([-1 if i == ax else 1 for i in range(len(shape))])
    return s


def sft(f: GridWavefunction, check: bool = True) -> GridWavefunction:
    """Semiclassical Fourier transform onto ``f.grid.dual()``.

    With ``x_j = -L + j dx`` and ``xi_k = -L' + k dxi`` the kernel factorises
    into ``(-1)**(j+k) exp(-2 pi i jk/N)`` because ``N`` is divisible by 4.
    """
    if check and _edge_mass(f.values) > 1e-10:
        warnings.warn("wavefunction has mass near the grid boundary; periodisation is not negligible",
                      GridWarning, stacklevel=2)
    sgn = _checkerboard(f.values.shape)
    out = sgn * np.fft.fftn(sgn * f.values) * f.grid.cell
    if check and _edge_mass(out) > 1e-10:
        warnings.warn("spectral mass touches the Nyquist shell; refine the grid", GridWarning,
                      stacklevel=2)
    return GridWavefunction(f.grid.dual(), out)


def isft(fhat: GridWavefunction, grid: Grid) -> GridWavefunction:
    """Inverse of :func:`sft`; ``grid`` is the position grid with ``grid.dual() == fhat.grid``."""
    if grid.dual() != fhat.grid:
        raise ValueError("frequency grid is not the dual of the requested position grid")
    sgn = _checkerboard(fhat.values.shape)
    out = sgn * np.fft.ifftn(sgn * fhat.values) / grid.cell
    return GridWavefunction(grid, out)


def spectral_derivative(values: np.ndarray, grid: Grid, axis: int = 0, order: int = 1) -> np.ndarray:
    """``d^order/dx^order`` along ``axis`` by FFT (periodic, spectrally accurate)."""
    n = grid.points[axis]
    k = 2 * math.pi * np.fft.fftfreq(n, d=grid.spacing[axis])
    shape = [1] * values.ndim
    shape[axis] = n
    mult = ((1j * k) ** order).reshape(shape)
    if order % 2 == 1:
        # the Nyquist mode has no well-defined odd derivative
        mult = mult.copy()
        idx = [0] * values.ndim
        idx[axis] = n // 2
        mult[tuple(idx)] = 0.0
    return np.fft.ifft(np.fft.fft(values, axis=axis) * mult, axis=axis)


@dataclass(frozen=True)
class PhaseSpaceDensity:
    """Values of a 1D Wigner transform on the ``(x, xi)`` tensor grid."""

    x: np.ndarray
    xi: np.ndarray
    values: np.ndarray
    h: float

    @property
    def cell(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.xi[1] - self.xi[0]))

    def integrate(self, sigma: np.ndarray | Callable[[np.ndarray, np.ndarray], np.ndarray]) -> complex:
        """``(2 pi h)**-1 int int sigma W dx dxi``."""
        if callable(sigma):
            X, XI = np.meshgrid(self.x, self.xi, indexing="ij")
            sigma = sigma(X, XI)
        return complex(np.sum(sigma * self.values) * self.cell / (2 * math.pi * self.h))


def wigner(f: GridWavefunction, g: GridWavefunction | None = None) -> PhaseSpaceDensity:
    """Cross-Wigner transform of two 1D wavefunctions on the same grid.

    ``p`` runs over even multiples of the spacing so that ``x +- p/2`` stays on
    the grid; samples outside the grid are taken as zero. The ``xi`` grid has
    spacing ``pi h / (2L)`` and the same number of points as ``x``.
    """
    if g is None:
        g = f
    _same_grid(f, g)
    if f.grid.dims != 1:
        raise ValueError("wigner is implemented for 1D wavefunctions")
    n = f.grid.points[0]
    dx = f.grid.spacing[0]
    h = f.grid.h
    fv = np.concatenate([np.zeros(n, complex), f.values, np.zeros(n, complex)])
    gv = np.conj(np.concatenate([np.zeros(n, complex), g.values, np.zeros(n, complex)]))
    j = np.arange(-n // 2, n // 2)
    k = np.arange(n)[:, None] + n
    corr = fv[k + j[None, :]] * gv[k - j[None, :]]
    # W(x_k, xi_m) = 2 dx sum_j corr_j exp(-i xi_m 2 j dx / h), xi_m = m * pi h / (n dx)
    dens = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(corr, axes=1), axis=1), axes=1)
    xi = np.arange(-n // 2, n // 2) * math.pi * h / (n * dx)
    return PhaseSpaceDensity(f.grid.axes[0], xi, 2 * dx * dens, h)


def weyl_pairing(W: PhaseSpaceDensity, sigma) -> complex:
    return W.integrate(sigma)


def dft_matrix(src: np.ndarray, dst: np.ndarray, sign: float, scale: float = 1.0) -> np.ndarray:
    """``M[k, j] = exp(sign * i * scale * dst_k * src_j)``; trapezoid quadrature kernel."""
    return np.exp(1j * sign * scale * np.outer(dst, src))


def _shift_along(values: np.ndarray, axis: int, shifts: np.ndarray, d: float) -> np.ndarray:
    """Return ``f(s + shift)`` along ``axis`` with per-line shifts (Fourier interpolation)."""
    n = values.shape[axis]
    k = 2 * math.pi * np.fft.fftfreq(n, d=d)
    F = np.fft.fft(values, axis=axis)
    if axis == 0:
        phase = np.exp(1j * np.outer(k, shifts))
    else:
        phase = np.exp(1j * np.outer(shifts, k))
    if n % 2 == 0:
        # split the Nyquist mode symmetrically so real inputs stay real
        nyq = [slice(None)] * 2
        nyq[axis] = n // 2
        phase[tuple(nyq)] = np.cos(k[n // 2] * shifts)
    return np.fft.ifft(F * phase, axis=axis)


def fourier_rotate(values: np.ndarray, grid: Grid, theta: float) -> np.ndarray:
    """Samples of ``F(R_theta (a, b))`` from samples of ``F`` on a square 2D grid.

    Three Fourier shears (x, y, x); exact for band-limited periodic data.
    """
    if grid.dims != 2 or grid.points[0] != grid.points[1] or grid.extent[0] != grid.extent[1]:
        raise ValueError("fourier_rotate needs a square 2D grid")
    a, b = grid.axes
    d = grid.spacing[0]
    alpha = -math.tan(theta / 2)
    beta = math.sin(theta)
    out = np.asarray(values, dtype=complex)
    # F(Sx(alpha)(x, p)) = F(x + alpha p, p)
    out = _shift_along(out, 0, alpha * b, d)
    out = _shift_along(out, 1, beta * a, d)
    out = _shift_along(out, 0, alpha * b, d)
    return out


def _require_unit_h(F: GridWavefunction) -> None:
    if F.grid.dims != 2:
        raise ValueError("a 2D wavefunction is required")
    if abs(F.grid.h - 1.0) > 1e-12:
        raise ValueError("the extended Wigner / partial Fourier transforms use h = 1")


def extended_wigner(F: GridWavefunction) -> GridWavefunction:
    """``(2 pi)**-1/2 int exp(i p y) F((x+p)/sqrt2, (x-p)/sqrt2) dp`` with h = 1."""
    _require_unit_h(F)
    grid = F.grid
    # (x+p)/sqrt2, (x-p)/sqrt2 = R_{45deg} (x, -p)
    rotated = fourier_rotate(F.values, grid, math.pi / 4)
    G = rotated[:, ::-1]
    # reversing the p axis maps p_j -> -p_j - dx; undo the half-cell offset
    G = _shift_along(G, 1, np.full(grid.points[0], -grid.spacing[1]), grid.spacing[1])
    p = grid.axes[1]
    E = dft_matrix(p, grid.axes[1], +1.0)
    out = G @ E.T * grid.spacing[1] / math.sqrt(2 * math.pi)
    return GridWavefunction(grid, out)


def partial_fourier(F: GridWavefunction) -> GridWavefunction:
    """``(2 pi)**-1/2 int exp(-i p y) F(x, p) dp`` along the second axis, h = 1."""
    _require_unit_h(F)
    p = F.grid.axes[1]
    E = dft_matrix(p, F.grid.axes[1], -1.0)
    return GridWavefunction(F.grid, F.values @ E.T * F.grid.spacing[1] / math.sqrt(2 * math.pi))


# -- serialization -----------------------------------------------------------

def to_json(f: GridWavefunction) -> str:
    """Self-describing JSON container; see README ("GridWavefunction files")."""
    samples = np.empty(2 * f.values.size)
    flat = f.values.ravel(order="C")
    samples[0::2] = flat.real
    samples[1::2] = flat.imag
    doc = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "dims": f.grid.dims,
        "points": list(f.grid.points),
        "spacing": list(f.grid.spacing),
        "extent": list(f.grid.extent),
        "h": f.grid.h,
        "samples": [float(s) for s in samples],
    }
    return json.dumps(doc, separators=(",", ":"))


def from_json(text: str) -> GridWavefunction:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_TAG:
        raise ValueError("not a semiphoton grid wavefunction")
    if int(doc.get("version", 0)) > FORMAT_VERSION:
        raise ValueError(f"unsupported container version {doc['version']}")
    grid = Grid(tuple(int(n) for n in doc["points"]), tuple(float(L) for L in doc["extent"]),
                float(doc["h"]))
    if len(doc["spacing"]) != grid.dims or not np.allclose(doc["spacing"], grid.spacing, rtol=1e-12):
        raise ValueError("spacing is inconsistent with points and extent")
    s = np.asarray(doc["samples"], dtype=float)
    if s.size != 2 * int(np.prod(grid.points)):
        raise ValueError("sample count does not match the grid")
    vals = (s[0::2] + 1j * s[1::2]).reshape(grid.points)
    return GridWavefunction(grid, vals)


def save(f: GridWavefunction, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_json(f))


def load(path) -> GridWavefunction:
    with open(path) as fh:
        return from_json(fh.read())


def fourier_interpolate(f: GridWavefunction, points: np.ndarray) -> np.ndarray:
    """Band-limited (trigonometric) interpolation of a 1D wavefunction at arbitrary points.

    Points outside the grid window return 0, which is consistent with data
    that has decayed before the boundary.
    """
    if f.grid.dims != 1:
        raise ValueError("fourier_interpolate is one-dimensional")
    n = f.grid.points[0]
    L = f.grid.extent[0]
    dx = f.grid.spacing[0]
    pts = np.asarray(points, dtype=float)
    coef = np.fft.fft(f.values) / n
    k = np.fft.fftfreq(n, d=dx) * 2 * math.pi
    coef = coef.copy()
    # split the Nyquist coefficient between +-k so real data interpolates to real values
    nyq = n // 2
    out = np.zeros(pts.shape, dtype=complex)
    flat = pts.ravel()
    inside = (flat >= -L) & (flat <= L - dx)
    s = flat[inside] + L
    E = np.exp(1j * np.outer(s, k))
    vals = E @ coef
    vals += coef[nyq] * (np.cos(k[nyq] * s) - np.exp(1j * k[nyq] * s))
    res = np.zeros(flat.shape, dtype=complex)
    res[inside] = vals
    out = res.reshape(pts.shape)
    return out
