"""Per-band Jacobi-matrix diagnostics for the tilt generator.

For fixed ``n`` the generator ``T4`` is the symmetric tridiagonal matrix with
zero diagonal and off-diagonal ``beta(m, n)``.  The bands ``n = 0`` and
``n = 1`` contain a zero coupling (``beta(1, 0) = beta(0, 1) = 0``); their
recurrences start at index 2 and 1 respectively and everything below the
start index is decoupled and set to zero.

All sequences are indexed by the absolute mode number ``m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .modes import ModeIndex, ModeVector, beta

__all__ = [
    "INFINITY",
    "JacobiBand",
    "BoundarySeqs",
    "DeficiencyReport",
    "BerezanskiiReport",
    "BoundaryValues",
    "StructuralError",
    "TruncationLeakageError",
    "start_index",
    "betas",
    "jacobi_apply",
    "polynomial_solution",
    "deficiency_tail",
    "berezanskii_check",
    "boundary_sequences",
    "bracket",
    "brackets",
    "green_lhs",
    "gamma_boundary",
    "extension_residual",
    "extrapolate",
    "generator_matrix",
    "truncated_propagator",
]

INFINITY = math.inf
PLATEAU_TOL = 1e-8


class StructuralError(ArithmeticError):
    """A zero coupling appeared where the recursion needs to divide by it."""


class TruncationLeakageError(ArithmeticError):
    """Doubling the truncated basis still changes the result beyond tolerance."""


def start_index(n: int) -> int:
    """First index of the non-degenerate sub-band of ``T4`` restricted to ``n``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return {0: 2, 1: 1}.get(n, 0)


def betas(n: int, M: int) -> np.ndarray:
    """``beta(m, n)`` for ``m = 0..M`` as an array."""
    m = np.arange(M + 1)
    return 0.5 * np.sqrt(m + 1.0) * (1.0 - m - n)


@dataclass(frozen=True)
class JacobiBand:
    n: int
    M: int

    @property
    def off_diag(self) -> np.ndarray:
        return betas(self.n, self.M - 1)

    @property
    def diag(self) -> np.ndarray:
        return np.zeros(self.M)

    def matrix(self) -> np.ndarray:
        b = self.off_diag
        return np.diag(b, 1) + np.diag(b, -1)


def jacobi_apply(f: np.ndarray, n: int) -> np.ndarray:
    """``(T f)_m = beta_{m-1} f_{m-1} + beta_m f_{m+1}`` with ``f`` zero past its end."""
    f = np.asarray(f)
    L = len(f)
    b = betas(n, L)
    out = np.zeros(L, dtype=np.result_type(f, float))
    out[1:] += b[:L - 1] * f[:-1]
    out[:-1] += b[:L - 1] * f[1:]
    return out


def polynomial_solution(n: int, z: complex, M: int) -> np.ndarray:
    """``P_m(z)`` for ``m = 0..M`` solving ``beta_{m-1}P_{m-1} + beta_m P_{m+1} = z P_m``.

    ``P`` starts with 1 at :func:`start_index` and vanishes below it.
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    s = start_index(n)
    b = betas(n, M + 1)
    P = np.zeros(M + 1, dtype=complex)
    P[s] = 1.0
    for m in range(s, M):
        if b[m] == 0.0:
            raise StructuralError(f"beta({m}, {n}) = 0 inside the recursion")
        prev = b[m - 1] * P[m - 1] if m > s else 0.0
        P[m + 1] = (z * P[m] - prev) / b[m]
        if not np.isfinite(P[m + 1]):
            raise OverflowError(f"recursion overflowed at m={m + 1}")
    return P


def extrapolate(Ms: np.ndarray, values: np.ndarray, terms: int = 8) -> tuple[complex, float]:
    """Least-squares fit of ``c0 + sum_j c_j M**(-j/2)`` over same-parity ``Ms``.

    Returns the limit ``c0`` and the change in ``c0`` when one term is dropped.
    """
    Ms = np.asarray(Ms, dtype=float)
    values = np.asarray(values)

    def fit(k):
        A = Ms[:, None] ** (-0.5 * np.arange(k)[None, :])
        return np.linalg.lstsq(A, values, rcond=None)[0][0]

    hi, lo = fit(terms), fit(terms - 1)
    return complex(hi), float(abs(hi - lo))


@dataclass(frozen=True)
class DeficiencyReport:
    n: int
    z: complex
    partial_sums: np.ndarray
    relative_increment: float
    plateau: bool
    extrapolated: complex
    extrapolation_error: float
    terminated_early: bool = False

    @property
    def M(self) -> int:
        return len(self.partial_sums) - 1


def deficiency_tail(n: int, z: complex, M: int, tol: float = PLATEAU_TOL) -> DeficiencyReport:
    """Partial sums ``sum_{s <= m <= s + k} |P_m(z)|^2`` for ``k = 0..M``.

    ``s`` is the band's start index, so ``M = 0`` gives the single term 1.
    The plateau test is the last increment relative to the partial sum.
    A square-root tail extrapolation of the limit is reported alongside,
    because the terms only decay like ``m**-1.5``.
    """
    if z.imag == 0:
        raise ValueError("deficiency sums need Im z != 0")
    s = start_index(n)
    early = False
    try:
        P = polynomial_solution(n, z, max(s + M, 2))
    except OverflowError:
        P, early = None, True
    if P is None:
        raise OverflowError("deficiency recursion overflowed")
    terms = np.abs(P[s:s + M + 1]) ** 2
    sums = np.cumsum(terms)
    rel = float(terms[-1] / sums[-1]) if M > 0 else 0.0
    if M >= 40:
        Ms = np.arange(M // 2, M + 1, 2) if M % 2 == 0 else np.arange(M // 2 + 1, M + 1, 2)
        lim, err = extrapolate(Ms, sums[Ms])
        lim = complex(lim.real, 0.0)
    else:
        lim, err = complex(sums[-1]), math.inf
    return DeficiencyReport(n, complex(z), sums, rel, rel < tol, lim, err, early)


@dataclass(frozen=True)
class BerezanskiiReport:
    n: int
    M: int
    bounded_diag: bool
    log_concave_from: int
    inv_sum_partial: float
    bound: float
    bound_holds: bool
    partial_bound_ok: bool


def berezanskii_check(n: int, M: int) -> BerezanskiiReport:
    """Checks the hypotheses of the Berezanskii criterion for ``a_j = -beta(j, n)``.

    The sub-band starts where ``a_j > 0``.  With ``1/a_j = 2/(sqrt(j+1)(j+n-1))``
    each term is at most ``c_n (j+1)**-1.5`` with ``c_n = 2 max_j (j+1)/(j+n-1)``,
    so the sum is bounded by ``c_n zeta(3/2)``.
    """
    if M < 3:
        raise ValueError("M must be at least 3")
    s = start_index(n)
    j = np.arange(s, s + M)
    a = -0.5 * np.sqrt(j + 1.0) * (1.0 - j - n)
    if np.any(a <= 0):
        raise StructuralError("non-positive coupling inside the sub-band")
    # log-concavity a_{j-1} a_{j+1} <= a_j^2, find where it holds from then on
    ok = a[:-2] * a[2:] <= a[1:-1] ** 2 * (1 + 1e-14)
    bad = np.nonzero(~ok)[0]
    first = int(j[1 + bad[-1] + 1]) if bad.size else int(j[1])
    inv = 1.0 / a
    partial = float(np.sum(inv))
    # (j+1)/(j+n-1) tends to 1, so the supremum over the whole tail is at least 1
    c_n = 2.0 * max(1.0, float(np.max((j + 1.0) / (j + n - 1.0))))
    termwise = bool(np.all(inv <= c_n * (j + 1.0) ** -1.5 * (1 + 1e-14)))
    bound = c_n * float(zeta(1.5))
    return BerezanskiiReport(n, M, True, first, partial, bound, partial <= bound, termwise)


@dataclass(frozen=True)
class BoundarySeqs:
    n: int
    u: np.ndarray
    v: np.ndarray


def boundary_sequences(n: int, M: int) -> BoundarySeqs:
    """``u`` and ``v`` for indices ``0..M+1`` solving the zero-energy recursion.

    ``u_s = 1, u_{s+1} = 0`` and ``v_s = 0, v_{s+1} = 1/beta_s`` at the start
    index ``s``, zero below it, and ``beta_{m-1} y_{m-1} + beta_m y_{m+1} = 0``
    for ``m > s``.
    """
    s = start_index(n)
    L = max(M + 2, s + 2)
    b = betas(n, L)
    u = np.zeros(L)
    v = np.zeros(L)
    u[s] = 1.0
    v[s + 1] = 1.0 / b[s]
    for m in range(s + 1, L - 1):
        u[m + 1] = -b[m - 1] * u[m - 1] / b[m]
        v[m + 1] = -b[m - 1] * v[m - 1] / b[m]
    return BoundarySeqs(n, u, v)


def bracket(g: np.ndarray, f: np.ndarray, n: int, M: int) -> complex:
    """``[g, f]_M = beta_M (g_M conj(f_{M+1}) - g_{M+1} conj(f_M))``."""
    if len(g) < M + 2 or len(f) < M + 2:
        raise ValueError("sequences must have at least M + 2 entries")
    return complex(beta(M, n) * (g[M] * np.conj(f[M + 1]) - g[M + 1] * np.conj(f[M])))


def brackets(g: np.ndarray, f: np.ndarray, n: int) -> np.ndarray:
    """``[g, f]_M`` for every ``M`` with both neighbours available."""
    g = np.asarray(g)
    f = np.asarray(f)
    L = min(len(g), len(f))
    b = betas(n, L - 2)
    return b * (g[:L - 1] * np.conj(f[1:L]) - g[1:L] * np.conj(f[:L - 1]))


def green_lhs(g: np.ndarray, f: np.ndarray, n: int, M: int) -> complex:
    """``sum_{m <= M} ((T g)_m conj(f_m) - g_m (T conj f)_m)`` for finite sequences."""
    g = np.asarray(g, dtype=complex)
    fc = np.conj(np.asarray(f, dtype=complex))
    Tg = jacobi_apply(g, n)
    Tf = jacobi_apply(fc, n)
    return complex(np.sum(Tg[:M + 1] * fc[:M + 1] - g[:M + 1] * Tf[:M + 1]))


@dataclass(frozen=True)
class BoundaryValues:
    gamma1: complex
    gamma2: complex
    spread1: float
    spread2: float
    converged: bool
    gamma1_extrapolated: complex
    gamma2_extrapolated: complex
    extrapolation_error: float


def gamma_boundary(f: np.ndarray, n: int, M_max: int, tol: float = 1e-6) -> BoundaryValues:
    """``Gamma1 f = [f, v]_M`` and ``Gamma2 f = [f, u]_M`` at ``M = M_max``.

    The spread is ``max - min`` over the last tenth of the ``M`` range.
    Both sequences oscillate with the parity of ``M``, so a same-parity tail
    extrapolation is reported as well.
    """
    f = np.asarray(f, dtype=complex)
    if len(f) < M_max + 2:
        raise ValueError("f must have at least M_max + 2 entries")
    if not np.isfinite(np.sum(np.abs(f) ** 2)) or not np.isfinite(np.sum(np.abs(jacobi_apply(f, n)) ** 2)):
        raise ValueError("f and T f must be square-summable on the range used")
    bs = boundary_sequences(n, M_max)
    fv = brackets(f[:M_max + 2], bs.v[:M_max + 2], n)
    fu = brackets(f[:M_max + 2], bs.u[:M_max + 2], n)
    lo = max(0, M_max - max(1, M_max // 10))
    s1 = float(np.ptp(np.abs(fv[lo:M_max + 1] - fv[M_max])))
    s2 = float(np.ptp(np.abs(fu[lo:M_max + 1] - fu[M_max])))
    if M_max >= 40:
        Ms = np.arange(M_max - 2 * (M_max // 4), M_max + 1, 2)
        g1, e1 = extrapolate(Ms, fv[Ms])
        g2, e2 = extrapolate(Ms, fu[Ms])
        err = max(e1, e2)
    else:
        g1, g2, err = complex(fv[M_max]), complex(fu[M_max]), math.inf
    return BoundaryValues(complex(fv[M_max]), complex(fu[M_max]), s1, s2,
                          max(s1, s2) < tol, g1, g2, err)


def extension_residual(f: np.ndarray, n: int, h_n: float, M: int) -> complex:
    """``[f, v]_M - h_n [f, u]_M``, or ``[f, u]_M`` for ``h_n = INFINITY``."""
    bs = boundary_sequences(n, M)
    f = np.asarray(f, dtype=complex)
    if len(f) < M + 2:
        f = np.concatenate([f, np.zeros(M + 2 - len(f))])
    fu = bracket(f, bs.u, n, M)
    if math.isinf(h_n):
        return fu
    return bracket(f, bs.v, n, M) - h_n * fu


# -- truncated-basis reference propagator ------------------------------------

GENERATORS = ("T4", "T5", "T38", "T0")


def generator_matrix(gen: str, h: float, n: int, N: int) -> np.ndarray:
    """Matrix of the h-scaled generator on ``m = 0..N-1`` for fixed ``n``.

    ``T4``, ``T5`` and ``T38 = (T3 + sqrt3 T8)/2`` are multiplied by
    ``-sqrt(2) h**1.5``.  ``T0`` is the operator
    ``x(x^2 + (hD)^2)/2 - 3hx/2 - i h^2 D/2`` whose Weyl symbol is ``p0``;
    in the mode basis this is ``-sqrt(2) h**1.5 T0 + (h/2) x`` with
    ``x = sqrt(h/2)(a + a^+)``.
    """
    scale = -math.sqrt(2.0) * h ** 1.5
    m = np.arange(N - 1)
    b = betas(n, N - 2)
    if gen == "T4":
        return scale * (np.diag(b, 1) + np.diag(b, -1))
    if gen == "T5":
        # <m+1|T5|m> = -i beta_m
        return scale * (np.diag(1j * b, 1) + np.diag(-1j * b, -1))
    if gen == "T38":
        return scale * np.diag(np.arange(N) + 0.5 * n - 0.5).astype(complex)
    if gen == "T0":
        if n != 0:
            raise ValueError("T0 acts on functions of x only (n = 0)")
        c = h ** 1.5 * np.sqrt(m + 1.0) * (2.0 * m - 1.0) / (2.0 * math.sqrt(2.0))
        return np.diag(c, 1) + np.diag(c, -1)
    raise ValueError(f"unknown generator {gen!r}; expected one of {GENERATORS}")


def _band_propagate(gen: str, t: float, h: float, n: int, coeffs: np.ndarray, N: int) -> np.ndarray:
    H = generator_matrix(gen, h, n, N)
    w, V = np.linalg.eigh(H)
    c = np.zeros(N, dtype=complex)
    c[:len(coeffs)] = coeffs
    return V @ (np.exp(1j * t * w / h) * (V.conj().T @ c))


def truncated_propagator(gen: str, t: float, h: float, v: ModeVector, N: int = 64,
                         tol: float = 1e-10, N_max: int = 4096) -> ModeVector:
    """``exp(i t G / h) v`` on a truncated basis, ``G`` from :func:`generator_matrix`.

    ``N`` doubles until the result changes by less than ``tol``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    out: dict[ModeIndex, complex] = {}
    for n in v.bands():
        top = max(k.m for k in v.coeffs if k.n == n)
        coeffs = np.zeros(top + 1, dtype=complex)
        for k, c in v.coeffs.items():
            if k.n == n:
                coeffs[k.m] = c
        size = max(N, top + 2)
        prev = _band_propagate(gen, t, h, n, coeffs, size)
        while True:
            if 2 * size > N_max:
                raise TruncationLeakageError(
                    f"basis of size {size} has not converged for generator {gen} at t={t}")
            cur = _band_propagate(gen, t, h, n, coeffs, 2 * size)
            change = math.sqrt(np.sum(np.abs(cur[:size] - prev) ** 2) + np.sum(np.abs(cur[size:]) ** 2))
            size *= 2
            prev = cur
            if change < tol:
                break
        for m, c in enumerate(prev):
            if c != 0:
                out[ModeIndex(m, n)] = c
    return ModeVector(out)
