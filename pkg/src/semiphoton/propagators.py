"""Evolution operators: exact metaplectic propagators, the first-order FIO for ``p0``,
the Q1/Q2 closed forms and Egorov-pairing checks.

Conventions: ``u(t) = U_t v`` solves ``(h D_t + P) u = 0`` with ``D = -i d/d.``,
so ``U_t = exp(-i t P / h)``.  Frequency variables come from :func:`fields.sft`.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import (Grid, GridWarning, GridWavefunction, fourier_interpolate, sft,
                     spectral_derivative, wigner)
from .flows import Symbol, eikonal_field, gyrator_matrix, rk4_fixed
from .modes import hermite_function, mode_project
from .spectral import truncated_propagator

__all__ = [
    "Chart",
    "ChartedTime",
    "ChartError",
    "LocalizationError",
    "SingularityError",
    "FitError",
    "CHART_THRESHOLD",
    "warmup_propagator",
    "warmup_residual",
    "gyrator",
    "localization_mass",
    "FIOResult",
    "t0_fio",
    "t0_fio_propagator",
    "t0_reference",
    "t0_operator",
    "t0_residual",
    "Q2Result",
    "q2_propagator",
    "q2_residual",
    "q1_propagator",
    "q1_singularity_probe",
    "q1_norm",
    "QuadraticSymbol",
    "symbol",
    "apply_weyl",
    "EgorovResult",
    "egorov_check",
]

CHART_THRESHOLD = 0.3


class ChartError(ValueError):
    """The requested chart is not valid at this time."""


class LocalizationError(ValueError):
    """Initial data has too much phase-space mass outside the localization disc."""


class SingularityError(ArithmeticError):
    """Every requested sample sits on the moving singular set."""


class FitError(ArithmeticError):
    """The log-log fit window is degenerate."""


# -- charts ---------------------------------------------------------------------

class Chart(enum.Enum):
    FREQUENCY = "frequency"
    POSITION = "position"


@dataclass(frozen=True)
class ChartedTime:
    """A time together with the integral representation used to evaluate it.

    ``FREQUENCY`` needs ``|cos t| > CHART_THRESHOLD`` and ``POSITION`` needs
    ``|sin t| > CHART_THRESHOLD``; since ``0.3 < 1/sqrt2`` every ``t`` has a chart.
    """

    t: float
    chart: Chart

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        if not self.valid(self.t, self.chart):
            raise ChartError(f"chart {self.chart.value} is not valid at t={self.t}")

    @staticmethod
    def valid(t: float, chart: Chart) -> bool:
        if chart is Chart.FREQUENCY:
            return abs(math.cos(t)) > CHART_THRESHOLD
        return abs(math.sin(t)) > CHART_THRESHOLD

    @classmethod
    def auto(cls, t: float) -> "ChartedTime":
        """Pick the chart whose trigonometric denominator is larger."""
        chart = Chart.FREQUENCY if abs(math.cos(t)) >= abs(math.sin(t)) else Chart.POSITION
        return cls(t, chart)


# -- shared helpers -------------------------------------------------------------------

def _with_h(v: GridWavefunction, h: float) -> GridWavefunction:
    if h <= 0:
        raise ValueError("h must be positive")
    if v.grid.h == h:
        return v
    return GridWavefunction(v.grid.with_h(h), v.values)


def _separable(w: np.ndarray, Ex: np.ndarray, Ey: np.ndarray) -> np.ndarray:
    """``sum_{r,s} Ex[x, r] w[r, s] Ey[y, s]``."""
    return Ex @ w @ Ey.T


def _check_unitary(v: GridWavefunction, out: np.ndarray, grid: Grid, what: str) -> None:
    n0 = v.norm()
    n1 = math.sqrt(np.sum(np.abs(out) ** 2) * grid.cell)
    if n0 > 0 and abs(n1 - n0) > 1e-7 * n0:
        warnings.warn(f"{what}: discrete norm changed by {abs(n1 - n0) / n0:.2e}; "
                      "the quadrature is under-resolved for this grid and time", GridWarning,
                      stacklevel=3)


# -- warm-up propagator ---------------------------------------------------------------

def warmup_propagator(v: GridWavefunction, t: float, h: float) -> GridWavefunction:
    """Exact solution of ``(h D_t + P) u = 0``, ``P = -h^2 d^2/dxdy - x y``, ``u(0) = v``.

    ``u = sech t (2 pi h)^-2 int int exp((i/h)[(xy - xi eta) tanh t + (x xi + y eta) sech t]) v^``,
    evaluated with separable DFT matrices on the sft frequency grid.
    """
    if v.grid.dims != 2:
        raise ValueError("warmup_propagator acts on 2D wavefunctions")
    v = _with_h(v, h)
    if t == 0:
        return v
    grid = v.grid
    vhat = sft(v)
    xi, eta = vhat.grid.axes
    x, y = grid.axes
    th, sh = math.tanh(t), 1.0 / math.cosh(t)
    # trapezoid images in x repeat with period 2 L cosh t; the classical image of the
    # support, (x, y) -> (x cosh t + eta sinh t, ...), has to fit between them and in the window
    L = min(grid.extent)
    reach = (math.cosh(t) * _radius(v.values, grid.axes, 1e-8)
             + abs(math.sinh(t)) * _radius(vhat.values, vhat.grid.axes, 1e-8))
    if reach > L or 2 * L * math.cosh(t) < L + reach:
        warnings.warn(f"warm-up solution at t={t} reaches {reach:.3g}, beyond the grid half-width {L:.3g}",
                      GridWarning, stacklevel=2)
    w = vhat.values * np.exp(-1j * np.outer(xi, eta) * th / h)
    Ex = np.exp(1j * np.outer(x, xi) * sh / h)
    Ey = np.exp(1j * np.outer(y, eta) * sh / h)
    out = _separable(w, Ex, Ey)
    out *= np.exp(1j * np.outer(x, y) * th / h) * sh * vhat.grid.cell / (2 * math.pi * h) ** 2
    _check_unitary(v, out, grid, "warmup_propagator")
    return GridWavefunction(grid, out)


def warmup_residual(v: GridWavefunction, t: float, h: float, dt: float = 1e-4) -> np.ndarray:
    """Pointwise ``(h D_t + P) u`` with a central difference in ``t`` and spectral ``d/dx, d/dy``."""
    up = warmup_propagator(v, t + dt, h).values
    um = warmup_propagator(v, t - dt, h).values
    u = warmup_propagator(v, t, h)
    grid = u.grid
    X, Y = grid.mesh()
    uxy = spectral_derivative(spectral_derivative(u.values, grid, 0), grid, 1)
    return -1j * h * (up - um) / (2 * dt) - h * h * uxy - X * Y * u.values


# -- gyrator ---------------------------------------------------------------------

def _radius(values: np.ndarray, axes: list[np.ndarray], rel: float = 1e-13) -> float:
    """Largest coordinate magnitude where ``|values|`` exceeds ``rel`` times its maximum."""
    mask = np.abs(values) > rel * np.abs(values).max()
    r = 0.0
    for k, ax in enumerate(axes):
        other = tuple(i for i in range(values.ndim) if i != k)
        hit = mask.any(axis=other) if other else mask
        if hit.any():
            r = max(r, float(np.abs(ax[hit]).max()))
    return r


def _pow2_at_least(q: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(q, 1.0) - 1e-12)))


def _zero_pad(values: np.ndarray, p: int) -> np.ndarray:
    """Embed centred samples into a grid ``p`` times wider with the same spacing."""
    n0, n1 = values.shape
    out = np.zeros((p * n0, p * n1), dtype=complex)
    o0, o1 = (p - 1) * n0 // 2, (p - 1) * n1 // 2
    out[o0:o0 + n0, o1:o1 + n1] = values
    return out


def _upsample(values: np.ndarray, p: int) -> np.ndarray:
    """Trigonometric interpolation onto a grid ``p`` times finer over the same window."""
    out = values
    for axis in (0, 1):
        n = out.shape[axis]
        F = np.fft.fftshift(np.fft.fft(out, axis=axis), axes=axis)
        # split the Nyquist bin so the interpolant is the symmetric one
        idx = [slice(None)] * 2
        idx[axis] = 0
        F = F.copy()
        half = 0.5 * F[tuple(idx)]
        F[tuple(idx)] = half
        pad = [(0, 0), (0, 0)]
        pad[axis] = ((p - 1) * n // 2, (p - 1) * n // 2)
        G = np.pad(F, pad)
        idx2 = [slice(None)] * 2
        idx2[axis] = (p - 1) * n // 2 + n
        G[tuple(idx2)] = half
        out = np.fft.ifft(np.fft.ifftshift(G, axes=axis), axis=axis) * p
    return out


def gyrator(v: GridWavefunction, ct: ChartedTime) -> GridWavefunction:
    """Solution at time ``ct.t`` of ``(D_t + xy - d^2/dxdy) u = 0`` with ``u(0) = v`` (h = 1).

    FREQUENCY chart:
    ``(2 pi)^-2 |sec t| int int exp(i[(x xi + y eta) sec t - (xy + xi eta) tan t]) v^ dxi deta``.
    POSITION chart:
    ``(2 pi |sin t|)^-1 int int v(a, b) exp(i((xy + ab) cos t - (ay + xb)) / sin t) da db``.
    Both are separable, so each is two matrix products.  The integration
    variable is sampled finely enough (zero padding for FREQUENCY, spectral
    upsampling for POSITION) that the periodic images of the trapezoid sum stay
    outside the output window.
    """
    if v.grid.dims != 2:
        raise ValueError("gyrator acts on 2D wavefunctions")
    if abs(v.grid.h - 1.0) > 1e-12:
        raise ValueError("the gyrator is defined with h = 1")
    if not np.any(v.values):
        return v
    t = ct.t
    grid = v.grid
    x, y = grid.axes
    L = max(grid.extent)
    c, s = math.cos(t), math.sin(t)
    # support of the output along the classical flow (x, y) -> (c x + s eta, c y + s xi)
    R = _radius(v.values, grid.axes)
    Rhat = _radius(sft(v, check=False).values, grid.dual().axes)
    reach = abs(c) * R + abs(s) * Rhat
    if ct.chart is Chart.FREQUENCY:
        if t == 0:
            return v
        # images of the xi-trapezoid repeat with period 2 L_pad |cos t|
        p = _pow2_at_least((L + reach) / (2 * L * abs(c)))
        padded = Grid(tuple(p * n for n in grid.points), tuple(p * e for e in grid.extent), 1.0)
        vhat = sft(GridWavefunction(padded, _zero_pad(v.values, p)), check=False)
        xi, eta = vhat.grid.axes
        tn = math.tan(t)
        w = vhat.values * np.exp(-1j * np.outer(xi, eta) * tn)
        Ex = np.exp(1j * np.outer(x, xi) / c)
        Ey = np.exp(1j * np.outer(y, eta) / c)
        out = _separable(w, Ex, Ey)
        out *= np.exp(-1j * np.outer(x, y) * tn) * vhat.grid.cell / (abs(c) * (2 * math.pi) ** 2)
    else:
        # images of the a-trapezoid repeat with period 2 pi |sin t| / da
        da = min(grid.spacing)
        p = _pow2_at_least((L + reach) * da / (2 * math.pi * abs(s)))
        p = max(p, _pow2_at_least((Rhat + R * abs(c / s)) * da / math.pi))
        fine = _upsample(v.values, p) if p > 1 else v.values
        a = -grid.extent[0] + np.arange(p * grid.points[0]) * grid.spacing[0] / p
        b = -grid.extent[1] + np.arange(p * grid.points[1]) * grid.spacing[1] / p
        cot = c / s
        w = fine * np.exp(1j * np.outer(a, b) * cot)
        # exp(-i a y / s) contracts a with y, exp(-i x b / s) contracts b with x
        Ea = np.exp(-1j * np.outer(y, a) / s)
        Eb = np.exp(-1j * np.outer(x, b) / s)
        out = Eb @ w.T @ Ea.T
        out *= np.exp(1j * np.outer(x, y) * cot) * grid.cell / (p * p * 2 * math.pi * abs(s))
    _check_unitary(v, out, grid, "gyrator")
    return GridWavefunction(grid, out)


# -- first-order FIO for p0 ---------------------------------------------------------

def localization_mass(v: GridWavefunction, radius: float) -> float:
    """Fraction of ``int |W(v)|`` lying outside the phase-space disc of the given radius."""
    W = wigner(v)
    X, XI = np.meshgrid(W.x, W.xi, indexing="ij")
    a = np.abs(W.values)
    total = a.sum()
    if total == 0:
        return 0.0
    return float(a[X ** 2 + XI ** 2 > radius ** 2].sum() / total)


def _smooth_cutoff(r: np.ndarray, r0: float, r1: float) -> np.ndarray:
    """1 on ``|r| <= r0``, 0 on ``|r| >= r1``, C-infinity in between."""
    s = np.clip((np.abs(r) - r0) / (r1 - r0), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        g = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return g / (f + g)


@dataclass(frozen=True)
class FIOResult:
    """Values of the first-order propagator and the samples it actually covers."""

    u: GridWavefunction
    covered: np.ndarray


def t0_fio(v: GridWavefunction, t: float, h: float, *, gate_radius: float | None = None,
           gate_tol: float = 1e-6, window: float = 8.0, fold: tuple[float, float] = (0.05, 0.3),
           coverage_tol: float = 1e-4, steps: int = 200) -> FIOResult:
    """First-order semiclassical propagator ``(2 pi h)^-1 int e^{i phi/h} a0 v^(xi) dxi`` for ``p0``.

    ``phi`` and ``a0 = (d^2 phi/dx dxi)^{1/2}`` come from the characteristics in
    :mod:`semiphoton.flows`; the ``xi`` integral is the trapezoid rule on the sft grid.
    Frequencies beyond ``6.5 sqrt(h)`` are removed by a smooth cutoff, and so are
    characteristics approaching a fold: the weight falls from 1 to 0 as
    ``dx/dx0`` drops from ``fold[1]`` to ``fold[0]``, where ``a0`` would blow up.

    A sample ``x`` is covered when the columns with full weight carry all but
    ``coverage_tol`` of ``|v^|^2``.  Beyond a fold the single-valued phase
    cannot represent the solution, so uncovered samples (and all samples with
    ``|x| > window sqrt(h)``) are set to zero.

    ``gate_radius`` (default ``4.5 sqrt(h)``) is the disc outside which the
    Wigner mass of ``v`` must be below ``gate_tol``.
    """
    if v.grid.dims != 1:
        raise ValueError("t0_fio acts on 1D wavefunctions")
    v = _with_h(v, h)
    if t == 0:
        return FIOResult(v, np.ones(v.grid.points, dtype=bool))
    r = gate_radius if gate_radius is not None else 4.5 * math.sqrt(h)
    mass = localization_mass(v, r)
    if mass > gate_tol:
        raise LocalizationError(f"Wigner mass {mass:.2e} outside radius {r:.3g} exceeds {gate_tol:g}")
    vhat = sft(v)
    xi = vhat.grid.axes[0]
    chi = _smooth_cutoff(xi, 5.0 * math.sqrt(h), 6.5 * math.sqrt(h))
    amp = vhat.values * chi
    cols = np.abs(amp) > 1e-12 * np.abs(amp).max()
    x = v.grid.axes[0]
    rows = np.abs(x) <= window * math.sqrt(h)
    field = eikonal_field(t, x[rows], xi[cols], h, steps=steps)
    ok = field["ok"]
    J = np.where(ok, 1.0 / np.where(ok, field["a0"], 1.0) ** 2, 0.0)
    weight = np.where(ok, _smooth_cutoff(fold[1] - np.minimum(J, fold[1]), 0.0, fold[1] - fold[0]), 0.0)
    m = np.abs(amp[cols]) ** 2
    full = (ok & (J >= fold[1])).astype(float)
    cover = (full @ m) / m.sum() >= 1.0 - coverage_tol
    kernel = np.where(ok, np.exp(1j * field["phi"] / h) * field["a0"] * weight, 0.0)
    vals = kernel @ amp[cols] * vhat.grid.spacing[0] / (2 * math.pi * h)
    out = np.zeros(v.grid.points, dtype=complex)
    covered = np.zeros(v.grid.points, dtype=bool)
    out[rows] = np.where(cover, vals, 0.0)
    covered[rows] = cover
    return FIOResult(GridWavefunction(v.grid, out), covered)


def t0_fio_propagator(v: GridWavefunction, t: float, h: float, **kw) -> GridWavefunction:
    """``U_t v`` from :func:`t0_fio`; samples outside the covered set are zero."""
    return t0_fio(v, t, h, **kw).u


def t0_reference(v: GridWavefunction, t: float, h: float, m_max: int = 80,
                 tol: float = 1e-10) -> GridWavefunction:
    """``exp(-i t T0 / h) v`` through the truncated Hermite basis (an independent oracle)."""
    v = _with_h(v, h)
    c = mode_project(v, h, m_max)
    lost = abs(v.norm() ** 2 - c.norm() ** 2)
    if lost > max(tol, 1e-8 * v.norm() ** 2):
        warnings.warn(f"Hermite projection up to m={m_max} misses {lost:.2e} of the norm",
                      GridWarning, stacklevel=2)
    out = truncated_propagator("T0", -t, h, c)
    coeffs = np.zeros(out.max_m() + 1, dtype=complex)
    for k, cv in out.items():
        coeffs[k.m] = cv
    return GridWavefunction(v.grid, coeffs @ hermite_function(len(coeffs) - 1, v.grid.axes[0], h))


def t0_operator(u: GridWavefunction) -> np.ndarray:
    """``T0 u = x(x^2 + (hD)^2) u / 2 - 3 h x u / 2 - i h^2 D u / 2``."""
    h = u.grid.h
    x = u.grid.axes[0]
    d1 = spectral_derivative(u.values, u.grid, 0, 1)
    d2 = spectral_derivative(u.values, u.grid, 0, 2)
    return 0.5 * x ** 3 * u.values - 0.5 * h * h * x * d2 - 1.5 * h * x * u.values - 0.5 * h * h * d1


def _fd(values: np.ndarray, dx: float, order: int) -> np.ndarray:
    """Sixth-order central differences; the three samples at each end are left as NaN."""
    if order == 1:
        c = np.array([-1, 9, -45, 0, 45, -9, 1]) / (60 * dx)
    else:
        c = np.array([2, -27, 270, -490, 270, -27, 2]) / (180 * dx * dx)
    out = np.full(values.shape, np.nan, dtype=complex)
    n = len(values)
    out[3:n - 3] = sum(c[k] * values[k:n - 6 + k] for k in range(7))
    return out


def t0_residual(v: GridWavefunction, t: float, h: float, dt: float = 1e-3,
                **kw) -> tuple[float, np.ndarray]:
    """Finite-difference ``(h D_t + T0) u`` for ``u = t0_fio_propagator(v, t, h)``.

    Returns the discrete L2 norm over samples whose stencils (three neighbours in
    ``x`` and ``t +- dt``) lie inside the covered set, and the pointwise residual.
    """
    rp, rm, r0 = (t0_fio(v, s, h, **kw) for s in (t + dt, t - dt, t))
    u = r0.u.values
    dx = r0.u.grid.spacing[0]
    x = r0.u.grid.axes[0]
    d1, d2 = _fd(u, dx, 1), _fd(u, dx, 2)
    T0u = 0.5 * x ** 3 * u - 0.5 * h * h * x * d2 - 1.5 * h * x * u - 0.5 * h * h * d1
    res = -1j * h * (rp.u.values - rm.u.values) / (2 * dt) + T0u
    good = rp.covered & rm.covered & r0.covered
    good = np.convolve(good.astype(int), np.ones(7, dtype=int), mode="same") == 7
    good &= np.isfinite(res)
    res = np.where(good, res, 0.0)
    return float(math.sqrt(np.sum(np.abs(res) ** 2) * dx)), res


# -- Q2 and Q1 -----------------------------------------------------------------------

@dataclass(frozen=True)
class Q2Result:
    u: GridWavefunction
    flagged: np.ndarray
    singular_point: float


def _q2_map(x: np.ndarray, t: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    a = math.sqrt(5 * h)
    ch, sh = math.cosh(a * t), math.sinh(a * t)
    den = x * sh + a * ch
    return a * (x * ch + a * sh) / den, a / den


def q2_propagator(u0: GridWavefunction | Callable[[np.ndarray], np.ndarray], t: float, h: float,
                  grid: Grid | None = None, sing_tol: float = 1e-3) -> Q2Result:
    """``exp(-i t Q2/h) u0`` for ``Q2 = x^2 hD - i h x - 5 h^2 D`` (Weyl symbol ``(x^2 - 5h) xi``).

    ``u = a (x sinh at + a cosh at)^-1 u0(a (x cosh at + a sinh at)/(x sinh at + a cosh at))``,
    ``a = sqrt(5h)``.  Grid data are interpolated spectrally at the mapped points.
    Samples within ``sing_tol`` of ``x* = -a coth(at)`` are flagged and set to zero.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if isinstance(u0, GridWavefunction):
        if u0.grid.dims != 1:
            raise ValueError("q2_propagator acts on 1D wavefunctions")
        grid = u0.grid.with_h(h)
        evaluate = lambda p: fourier_interpolate(u0, p)
    else:
        if grid is None:
            raise ValueError("a grid is required when u0 is a function")
        grid = grid.with_h(h)
        evaluate = u0
    x = grid.axes[0]
    a = math.sqrt(5 * h)
    xstar = -a / math.tanh(a * t) if t != 0 else -math.inf
    flagged = np.abs(x - xstar) < sing_tol
    if t == 0:
        vals = u0.values if isinstance(u0, GridWavefunction) else evaluate(x)
        return Q2Result(GridWavefunction(grid, vals), flagged, xstar)
    if flagged.all():
        raise SingularityError("all samples lie on the singular set")
    xs = np.where(flagged, 0.0, x)
    arg, pref = _q2_map(xs, t, h)
    vals = np.where(flagged, 0.0, pref * evaluate(arg))
    return Q2Result(GridWavefunction(grid, vals), flagged, xstar)


def q2_residual(u0, t: float, h: float, grid: Grid | None = None, dt: float = 1e-4,
                margin: float = 0.5) -> float:
    """Max of ``|(h D_t + Q2) u|`` over samples farther than ``margin`` from the singular point.

    Derivatives are local (sixth-order differences) so that the unresolved
    oscillation next to the singular point does not leak into distant samples.
    """
    r0 = q2_propagator(u0, t, h, grid)
    up = q2_propagator(u0, t + dt, h, grid).u.values
    um = q2_propagator(u0, t - dt, h, grid).u.values
    u = r0.u
    x = u.grid.axes[0]
    d1 = _fd(u.values, u.grid.spacing[0], 1)
    q2u = -1j * h * x ** 2 * d1 - 1j * h * x * u.values + 5j * h * h * d1
    res = -1j * h * (up - um) / (2 * dt) + q2u
    far = (np.abs(x - r0.singular_point) > margin) & np.isfinite(res)
    return float(np.abs(res[far]).max())


def q1_propagator(u0: Callable[[np.ndarray], np.ndarray], t: float, x: np.ndarray) -> np.ndarray:
    """``exp(-i t Q1) u0 = (1 + t x)^-1 u0(x / (1 + t x))`` for ``Q1 = (x^2 D + D x^2)/2``."""
    x = np.asarray(x, dtype=float)
    den = 1.0 + t * x
    with np.errstate(divide="ignore", invalid="ignore"):
        return u0(x / den) / den


def _bracket_power(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda y: (1.0 + y * y) ** (-alpha / 2)


def q1_singularity_probe(alpha: float, t: float, eps: tuple[float, float] = (1e-8, 1e-4),
                         samples: int = 41) -> float:
    """Fitted exponent ``s`` in ``|u(t, x* + e)| ~ e^s`` for ``u0 = <x>^-alpha``, ``x* = -1/t``.

    The closed form predicts ``s = alpha - 1``.
    """
    if not 0.5 < alpha < 1:
        raise ValueError("alpha must lie in (1/2, 1)")
    if t <= 0:
        raise ValueError("t must be positive")
    lo, hi = eps
    if not 0 < lo < hi or samples < 3:
        raise FitError("fit window must satisfy 0 < lo < hi with at least three samples")
    e = np.geomspace(lo, hi, samples)
    xstar = -1.0 / t
    u = np.abs(q1_propagator(_bracket_power(alpha), t, xstar + e))
    if not np.all(np.isfinite(u)) or np.any(u == 0):
        raise FitError("solution is not finite and non-zero across the fit window")
    le, lu = np.log(e), np.log(u)
    slope, icpt = np.polyfit(le, lu, 1)
    if np.std(lu - (slope * le + icpt)) > 0.05 * max(np.ptp(lu), 1e-300) and np.ptp(lu) > 0:
        raise FitError("log-log data are not close to a line in this window")
    return float(slope)


def q1_norm(alpha: float, t: float) -> float:
    """``||u(t)||^2`` for ``u0 = <x>^-alpha`` by adaptive quadrature split at ``x* = -1/t``."""
    from scipy.integrate import quad

    u0 = _bracket_power(alpha)
    f = lambda x: float(np.abs(q1_propagator(u0, t, np.array(x))) ** 2)
    if t == 0:
        return quad(f, -np.inf, np.inf)[0]
    xs = -1.0 / t
    total = 0.0
    for a, b in ((-np.inf, xs - 1), (xs - 1, xs), (xs, xs + 1), (xs + 1, np.inf)):
        total += quad(f, a, b, limit=200)[0]
    return total


# -- Egorov -----------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticSymbol:
    """``sigma(z) = c + l.z + z.Q z / 2`` on ``z = (x, xi)`` or ``(x, y, xi, eta)``."""

    c: float
    l: np.ndarray
    Q: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.l)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, float)
        return self.c + z @ self.l + 0.5 * np.einsum("...i,ij,...j->...", z, self.Q, z)

    def pullback(self, M: np.ndarray) -> "QuadraticSymbol":
        """``sigma(M z)``."""
        return QuadraticSymbol(self.c, M.T @ self.l, M.T @ self.Q @ M)


_NAMES_1D = ("x", "xi")
_NAMES_2D = ("x", "y", "xi", "eta")


def symbol(name: str, dims: int = 1) -> QuadraticSymbol:
    """Monomial symbols of degree <= 2 by name, for example ``x``, ``xi``, ``x2``, ``xxi``, ``xieta``."""
    names = _NAMES_1D if dims == 1 else _NAMES_2D
    d = len(names)
    l, Q = np.zeros(d), np.zeros((d, d))
    if name == "1":
        return QuadraticSymbol(1.0, l, Q)
    if name in names:
        l[names.index(name)] = 1.0
        return QuadraticSymbol(0.0, l, Q)
    # longest-first tokenisation so that "xieta" parses as xi * eta
    toks, rest = [], name
    order = sorted(names, key=len, reverse=True)
    if rest.endswith("2") and rest[:-1] in names:
        toks = [rest[:-1]] * 2
        rest = ""
    while rest:
        for nm in order:
            if rest.startswith(nm):
                toks.append(nm)
                rest = rest[len(nm):]
                break
        else:
            raise ValueError(f"unknown symbol {name!r}")
    if len(toks) != 2:
        raise ValueError(f"symbol {name!r} is not a monomial of degree 1 or 2")
    i, j = names.index(toks[0]), names.index(toks[1])
    Q[i, j] += 1.0
    Q[j, i] += 1.0
    return QuadraticSymbol(0.0, l, Q)


def _coordinate_op(f: np.ndarray, grid: Grid, k: int) -> np.ndarray:
    d = grid.dims
    if k < d:
        return grid.mesh()[k] * f
    return -1j * grid.h * spectral_derivative(f, grid, k - d, 1)


def apply_weyl(sigma: QuadraticSymbol, f: GridWavefunction) -> np.ndarray:
    """Weyl quantization of a quadratic symbol applied to ``f``.

    For symmetric ``Q`` the Weyl ordering of ``z.Q z`` is ``sum Q_ij Z_i Z_j``.
    """
    d = f.grid.dims
    if sigma.dim != 2 * d:
        raise ValueError("symbol dimension does not match the wavefunction")
    out = sigma.c * f.values
    first = [_coordinate_op(f.values, f.grid, k) for k in range(2 * d)]
    for i in range(2 * d):
        if sigma.l[i]:
            out = out + sigma.l[i] * first[i]
        for j in range(2 * d):
            if sigma.Q[i, j]:
                out = out + 0.5 * sigma.Q[i, j] * _coordinate_op(first[j], f.grid, i)
    return out


@dataclass(frozen=True)
class EgorovResult:
    lhs: complex
    rhs: complex
    deviation: float


def _pairing(sigma: QuadraticSymbol, f: GridWavefunction, g: GridWavefunction) -> complex:
    """``(2 pi h)^-d int sigma W(f, g) = <Op(sigma) f, g>`` for polynomial symbols."""
    return complex(np.sum(apply_weyl(sigma, f) * np.conj(g.values)) * f.grid.cell)


def egorov_check(sigma: str | QuadraticSymbol, t: float, h: float, f: GridWavefunction,
                 g: GridWavefunction, gen: str = "GYRATOR", rk4_steps: int = 400) -> EgorovResult:
    """Compare ``int sigma W(U_t f, U_t g)`` with ``int (sigma o kappa_t) W(f, g)``.

    ``GYRATOR`` (2D, h = 1): the flow is linear, so both sides are evaluated
    exactly through ``<Op(sigma) f, g>``; the identity holds without remainder.
    ``T0`` (1D): ``U_t`` is the truncated-basis propagator, the right side pulls
    ``sigma`` back along RK4 characteristics of ``p0`` on the Wigner grid.
    """
    gen = gen.upper()
    if gen == "GYRATOR":
        if abs(h - 1.0) > 1e-12:
            raise ValueError("the gyrator check uses h = 1")
        s = symbol(sigma, 2) if isinstance(sigma, str) else sigma
        ct = ChartedTime.auto(t)
        Uf, Ug = gyrator(_with_h(f, 1.0), ct), gyrator(_with_h(g, 1.0), ct)
        lhs = _pairing(s, Uf, Ug)
        rhs = _pairing(s.pullback(gyrator_matrix(t)), _with_h(f, 1.0), _with_h(g, 1.0))
    elif gen == "T0":
        s = symbol(sigma, 1) if isinstance(sigma, str) else sigma
        f, g = _with_h(f, h), _with_h(g, h)
        W1 = wigner(t0_reference(f, t, h), t0_reference(g, t, h))
        lhs = W1.integrate(lambda X, XI: s(np.stack([X, XI], axis=-1)))
        W0 = wigner(f, g)
        X, XI = np.meshgrid(W0.x, W0.xi, indexing="ij")
        live = np.abs(W0.values) > 1e-14 * np.abs(W0.values).max()
        pts = np.stack([X[live], XI[live]], axis=-1)
        moved = rk4_fixed(Symbol.P0, pts, t, rk4_steps, h) if t != 0 else pts
        pulled = np.zeros(X.shape)
        vals = s(moved)
        if not np.all(np.isfinite(vals)):
            raise ArithmeticError("characteristics from the support of W(f, g) left every bounded region")
        pulled[live] = vals
        rhs = W0.integrate(pulled)
    else:
        raise ValueError(f"unknown generator {gen!r}; expected GYRATOR or T0")
    return EgorovResult(lhs, rhs, abs(lhs - rhs))
