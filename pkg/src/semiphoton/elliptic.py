"""Weierstrass elliptic functions with real invariants.

``wp`` is evaluated from ``g2, g3`` alone: reduce ``z`` into the period
cell, shrink it by ``2**k`` until a truncated Laurent series is accurate,
then apply the duplication formulas ``k`` times.  Periods come from smooth
trigonometric forms of the period integrals.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._quad import gauss_legendre

__all__ = [
    "Case",
    "Branch",
    "EllipticData",
    "PoleError",
    "DomainError",
    "ConsistencyError",
    "invariants_p0",
    "invariants_p4",
    "invariants_cubic",
    "classify",
    "cubic_roots",
    "largest_real_root",
    "periods",
    "real_period",
    "elliptic_data",
    "wp",
    "wp_prime",
    "wp_pair",
    "wp_real_line",
    "real_line_time",
    "shifted_line_time",
    "laurent_coefficients",
]

LAURENT_TERMS = 40


class Case(enum.Enum):
    ALL_REAL_DISTINCT = "all_real_distinct"
    DEGENERATE = "degenerate"
    COMPLEX_PAIR = "complex_pair"


class Branch(enum.Enum):
    REAL = "real"
    SHIFTED = "shifted"


class PoleError(ArithmeticError):
    """Evaluation point is numerically on the period lattice."""

    def __init__(self, distance: float):
        super().__init__(f"point lies within {distance:.3e} of a lattice pole")
        self.distance = distance


class DomainError(ValueError):
    """Operation needs a sign of the discriminant that is not present."""


class ConsistencyError(ArithmeticError):
    """A value that must be real came out with a sizeable imaginary part."""


def invariants_p0(h: float, C0: float) -> tuple[float, float]:
    """``g2 = 3 h^2 / 4`` and ``g3 = C0^2 / 4 - h^3 / 8``."""
    return 0.75 * h * h, 0.25 * C0 * C0 - h ** 3 / 8.0


def invariants_p4(h: float, C0: float, C1sq: float) -> tuple[float, float]:
    """``g2 = (C1^2 - 5h)^2 / 12`` and ``g3 = (C1^2 - 5h)^3 / 216 + C0^2 / 4``."""
    if C1sq < 0:
        raise ValueError("C1sq must be non-negative")
    d = C1sq - 5.0 * h
    return d * d / 12.0, d ** 3 / 216.0 + 0.25 * C0 * C0


def invariants_cubic(lam: float, C0: float) -> tuple[float, float]:
    """Invariants of ``x(x^2 + xi^2)/2 - lam x / 2 = C0``.

    ``lam = 3h`` gives the one-dimensional symbol, ``lam = 5h - C1^2`` the
    two-dimensional one.
    """
    return lam * lam / 12.0, 0.25 * C0 * C0 - lam ** 3 / 216.0


def _delta(g2: float, g3: float) -> float:
    return g2 ** 3 - 27.0 * g3 ** 2


def classify(g2: float, g3: float, rtol: float = 1e-12) -> tuple[float, Case]:
    """Discriminant and root structure; ``|delta|`` below ``rtol * scale`` counts as zero."""
    delta = _delta(g2, g3)
    scale = max(abs(g2) ** 3, 27.0 * g3 ** 2)
    if abs(delta) <= rtol * scale:
        return delta, Case.DEGENERATE
    return delta, Case.ALL_REAL_DISTINCT if delta > 0 else Case.COMPLEX_PAIR


def _newton(x: float, g2: float, g3: float) -> float:
    for _ in range(2):
        d = 12.0 * x * x - g2
        if d == 0:
            break
        x -= (4.0 * x ** 3 - g2 * x - g3) / d
    return x


def cubic_roots(g2: float, g3: float) -> tuple[float, float, float]:
    """Roots of ``4x^3 - g2 x - g3`` as ``(e1, e3, e2)`` with ``e1 < e3 < e2``."""
    if _delta(g2, g3) <= 0:
        raise DomainError("three distinct real roots need delta > 0")
    r = math.sqrt(g2 / 3.0)
    arg = max(-1.0, min(1.0, 3.0 * math.sqrt(3.0) * g3 / g2 ** 1.5))
    phi = math.acos(arg) / 3.0
    roots = sorted(_newton(r * math.cos(phi - 2.0 * math.pi * k / 3.0), g2, g3) for k in range(3))
    return roots[0], roots[1], roots[2]


def largest_real_root(g2: float, g3: float) -> float:
    """Largest real root of ``4x^3 - g2 x - g3`` for any sign of the discriminant."""
    if _delta(g2, g3) > 0:
        return cubic_roots(g2, g3)[2]
    # one simple real root (or a double root below it); Cardano on x^3 + p x + q
    p, q = -g2 / 4.0, -g3 / 4.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    sq = math.sqrt(max(disc, 0.0))
    x = math.copysign(abs(-q / 2.0 + sq) ** (1 / 3), -q / 2.0 + sq) + \
        math.copysign(abs(-q / 2.0 - sq) ** (1 / 3), -q / 2.0 - sq)
    if disc <= 0:
        # delta = 0: roots 2u, -u, -u with u = cbrt(-q/2)
        u = math.copysign(abs(q / 2.0) ** (1 / 3), -q / 2.0)
        x = max(2.0 * u, -u)
    return _newton(x, g2, g3)


def _agm_integral(A: float, B: float, tol: float = 1e-15) -> float:
    """``int_0^{pi/2} dpsi / sqrt(A cos^2 + B sin^2)`` by Gauss-Legendre panels."""
    if A <= 0 or B <= 0:
        raise DomainError("period integral needs positive root gaps")
    return gauss_legendre(lambda s: 1.0 / np.sqrt(A * np.cos(s) ** 2 + B * np.sin(s) ** 2),
                          0.0, 0.5 * math.pi, tol=tol)


def periods(g2: float, g3: float) -> tuple[complex, float]:
    """``(omega1, omega2)``; ``omega2`` real positive, ``omega1`` on the positive imaginary axis."""
    e1, e3, e2 = cubic_roots(g2, g3)
    half2 = _agm_integral(e2 - e1, e2 - e3)
    half1 = _agm_integral(e2 - e1, e3 - e1)
    return complex(0.0, 2.0 * half1), 2.0 * half2


def _real_line_integrand(e: float, g2: float):
    c = 3.0 * e * e - 0.25 * g2
    kappa = max(abs(c) ** 0.25, abs(e) ** 0.5, 1e-300)

    def f(psi):
        s2, c2 = np.sin(psi) ** 2, np.cos(psi) ** 2
        return kappa / np.sqrt(kappa ** 4 * s2 * s2 + 3.0 * e * kappa ** 2 * s2 * c2 + c * c2 * c2)

    return f, kappa, c


def real_period(g2: float, g3: float) -> float:
    """Period of ``wp`` along the real axis for any discriminant.

    With ``e`` the largest real root, ``wp = e + s^2`` on the real line and
    ``dt = -ds / sqrt(s^4 + 3 e s^2 + 3 e^2 - g2/4)``; the period is the
    integral over all ``s``, taken after ``s = kappa tan(psi)``.
    """
    e = largest_real_root(g2, g3)
    f, kappa, c = _real_line_integrand(e, g2)
    if c <= 1e-14 * max(e * e, abs(g2), 1e-300):
        raise DomainError("the largest root is double: the real period is infinite")
    return 2.0 * gauss_legendre(f, 0.0, 0.5 * math.pi, tol=1e-15)


def real_line_time(P: float, dP: float, g2: float, g3: float) -> float:
    """The ``t`` in ``(0, real period)`` with ``wp(t) = P`` and ``wp'(t) = dP``.

    Requires ``P >= e`` (largest real root); the sign of ``dP`` selects the half.
    """
    e = largest_real_root(g2, g3)
    f, kappa, c = _real_line_integrand(e, g2)
    gap = P - e
    if gap < -1e-12 * max(1.0, abs(e)):
        raise DomainError(f"wp value {P} lies below the real-line range [{e}, inf)")
    gap = max(gap, 0.0)
    q = P * P + e * P + e * e - 0.25 * g2
    if q > 0 and gap < 1e-4 * max(abs(e), math.sqrt(abs(g2)) / 2, 1e-300):
        s0 = -dP / (2.0 * math.sqrt(q))
    else:
        s0 = -math.copysign(math.sqrt(gap), dP) if dP != 0 else 0.0
    psi0 = math.atan2(s0, kappa)
    return gauss_legendre(f, psi0, 0.5 * math.pi, tol=1e-15)


def shifted_line_time(P: float, dP: float, data: "EllipticData") -> float:
    """The ``t`` in ``[0, omega2)`` with ``wp(t + omega1/2) = P`` and matching ``wp'``.

    Uses ``wp - e1 = (e3 - e1) sin^2(theta)`` so that
    ``dt/dtheta = 1/sqrt(e2 - e1 - (e3 - e1) sin^2 theta)`` and ``cos theta``
    has the sign of ``wp'``.
    """
    e1, e3, e2 = data.roots
    span = e3 - e1
    tol = 1e-8 * span
    if not (e1 - tol <= P <= e3 + tol):
        raise DomainError(f"wp value {P} lies outside [e1, e3] = [{e1}, {e3}]")
    s2 = min(max((P - e1) / span, 0.0), 1.0)
    sn, cs = math.sqrt(s2), math.sqrt(1.0 - s2) if dP >= 0 else -math.sqrt(1.0 - s2)
    root = math.sqrt(e2 - e1 - span * s2)
    # the smaller of sin, cos is recovered from wp' = 2 span sin cos root
    if sn < 0.1 and cs != 0:
        sn = dP / (2.0 * span * cs * root)
    elif abs(cs) < 0.1 and sn != 0:
        cs = dP / (2.0 * span * sn * root)
    theta = math.atan2(sn, cs)
    if theta < 0:
        theta += 2.0 * math.pi
    return gauss_legendre(lambda th: 1.0 / np.sqrt(e2 - e1 - span * np.sin(th) ** 2),
                          0.0, theta, tol=1e-15)


@dataclass(frozen=True)
class EllipticData:
    g2: float
    g3: float
    delta: float
    case: Case
    roots: tuple[float, float, float] | None
    omega1: complex | None
    omega2: float | None

    @property
    def e1(self) -> float:
        return self.roots[0]

    @property
    def e3(self) -> float:
        return self.roots[1]

    @property
    def e2(self) -> float:
        return self.roots[2]


def elliptic_data(g2: float, g3: float) -> EllipticData:
    """Invariants, discriminant and (when defined) roots and periods.

    For ``delta <= 0`` only the real period is filled in (``omega1`` is None),
    and it is None too when that period is infinite.
    """
    delta, case = classify(g2, g3)
    if case is Case.ALL_REAL_DISTINCT:
        roots = cubic_roots(g2, g3)
        w1, w2 = periods(g2, g3)
        return EllipticData(g2, g3, delta, case, roots, w1, w2)
    try:
        w2 = real_period(g2, g3)
    except DomainError:
        w2 = None
    return EllipticData(g2, g3, delta, case, None, None, w2)


def laurent_coefficients(g2: float, g3: float, terms: int = LAURENT_TERMS) -> np.ndarray:
    """``c_k`` (index ``k``) of ``wp(z) = z^-2 + sum_{k >= 2} c_k z^(2k-2)``."""
    c = np.zeros(terms + 1)
    if terms >= 2:
        c[2] = g2 / 20.0
    if terms >= 3:
        c[3] = g3 / 28.0
    for k in range(4, terms + 1):
        c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * sum(c[m] * c[k - m] for m in range(2, k - 1))
    return c


def _laurent(w: complex, c: np.ndarray) -> tuple[complex, complex]:
    w2 = w * w
    P = 0j
    dP = 0j
    for k in range(len(c) - 1, 1, -1):
        P = P * w2 + c[k]
        dP = dP * w2 + (2 * k - 2) * c[k]
    # P holds sum c_k w^(2k-4); dP holds sum (2k-2) c_k w^(2k-4)
    return 1.0 / w2 + P * w2, -2.0 / (w2 * w) + dP * w


def _scale(g2: float, g3: float) -> float:
    """A length below which the Laurent series converges fast."""
    s = math.inf
    if g2 != 0:
        s = min(s, abs(g2) ** -0.25)
    if g3 != 0:
        s = min(s, abs(g3) ** (-1.0 / 6.0))
    return s


def _reduce(z: complex, g2: float, g3: float,
            data: EllipticData | None) -> tuple[complex, float, float]:
    """Reduced point, pole reference length and Laurent radius."""
    if data is None:
        data = elliptic_data(g2, g3)
    w2 = data.omega2
    if data.omega1 is not None:
        w1 = data.omega1.imag
        re = z.real - w2 * round(z.real / w2)
        im = z.imag - w1 * round(z.imag / w1)
        # the nearest non-zero lattice point is at distance min(w1, w2)
        return complex(re, im), w2, 0.4 * min(w1, w2)
    if abs(z.imag) > 0:
        raise DomainError("complex arguments need delta > 0")
    r0 = 0.15 * _scale(g2, g3)
    if w2 is None:
        return z, math.inf, r0
    return complex(z.real - w2 * round(z.real / w2), 0.0), w2, r0


def _core(zr: complex, r0: float, c: np.ndarray, g2: float) -> tuple[complex, complex]:
    """Laurent series at ``zr / 2**k`` followed by ``k`` duplications."""
    dist = abs(zr)
    k = max(0, math.ceil(math.log2(dist / r0))) if dist > r0 else 0
    P, dP = _laurent(zr / 2 ** k, c)
    for _ in range(k):
        ddP = 6.0 * P * P - 0.5 * g2
        r = ddP / (2.0 * dP)
        P, dP = -2.0 * P + r * r, -dP + 3.0 * P * ddP / dP - ddP ** 3 / (4.0 * dP ** 3)
    return P, dP


def wp_pair(z: complex, g2: float, g3: float, data: EllipticData | None = None,
            pole_tol: float = 1e-6) -> tuple[complex, complex]:
    """``(wp(z), wp'(z))`` by lattice reduction, Laurent core and duplication.

    Points closer to the real half-period than to the origin are moved there
    with ``wp(w2/2 + u) = e + (3e^2 - g2/4) / (wp(u) - e)``, ``e = wp(w2/2)``,
    which keeps the number of duplications (and their error growth) small.
    """
    if data is None:
        data = elliptic_data(g2, g3)
    zr, ref, r0 = _reduce(complex(z), g2, g3, data)
    dist = abs(zr)
    if dist < pole_tol * (ref if math.isfinite(ref) else 1.0):
        raise PoleError(dist)
    c = laurent_coefficients(g2, g3)
    if math.isfinite(ref) and abs(zr.real) > 0.25 * ref:
        u = zr - math.copysign(0.5 * ref, zr.real)
        e = data.e2 if data.roots is not None else largest_real_root(g2, g3)
        if u == 0:
            return complex(e), 0j
        Pu, dPu = _core(u, r0, c, g2)
        q = 3.0 * e * e - 0.25 * g2
        d = Pu - e
        return e + q / d, -q * dPu / (d * d)
    return _core(zr, r0, c, g2)


def wp(z: complex, g2: float, g3: float, data: EllipticData | None = None) -> complex:
    return wp_pair(z, g2, g3, data)[0]


def wp_prime(z: complex, g2: float, g3: float, data: EllipticData | None = None) -> complex:
    return wp_pair(z, g2, g3, data)[1]


def wp_real_line(t: float, branch: Branch, data: EllipticData,
                 tol: float = 1e-9) -> tuple[float, float]:
    """Real ``(wp, wp')`` at ``t`` (REAL) or ``t + omega1/2`` (SHIFTED)."""
    if branch is Branch.SHIFTED:
        if data.omega1 is None:
            raise DomainError("the shifted line needs delta > 0")
        z = complex(t, 0.0) + 0.5 * data.omega1
    else:
        z = complex(t, 0.0)
    P, dP = wp_pair(z, data.g2, data.g3, data)
    if abs(P.imag) > tol * max(1.0, abs(P)) or abs(dP.imag) > tol * max(1.0, abs(dP)):
        raise ConsistencyError(f"imaginary residue {P.imag:.2e}, {dP.imag:.2e} on the {branch.value} line")
    return P.real, dP.real
