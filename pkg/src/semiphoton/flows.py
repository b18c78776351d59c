"""Hamilton flows of the cubic tilt symbols and of the linear comparison symbols.

Both cubic symbols reduce in the ``(x, xi)`` plane to

    H = x (x^2 + xi^2) / 2 - lam x / 2,

with ``lam = 3h`` for ``p0`` and ``lam = 5h - C1^2`` for ``p4``.  For
``C0 = H != 0`` the orbit is

    x = (C0/2) / (wp(t + t0) - lam/12),   xi = -wp'(t + t0) / (wp(t + t0) - lam/12)

with invariants ``g2 = lam^2/12`` and ``g3 = C0^2/4 - lam^3/216``.  Here
``t0`` is real (unbounded branch) or real plus ``omega1/2`` (bounded loop).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import elliptic as ell
from ._quad import gauss_legendre

__all__ = [
    "PhasePoint1D",
    "PhasePoint2D",
    "FlowTrace",
    "Symbol",
    "BlowUpError",
    "AmbiguityError",
    "CausticError",
    "PatchError",
    "p0",
    "p4",
    "conserved",
    "hamilton_rhs",
    "cubic_orbit",
    "flow_p0",
    "flow_p4",
    "flow_hyperbolic",
    "flow_gyrator",
    "rk4_oracle",
    "rk4_fixed",
    "invariant_pocket_check",
    "PocketReport",
    "characteristics",
    "eikonal_phase",
    "amplitude_a0",
    "EikonalValue",
    "eikonal_field",
    "mixed_determinant",
    "loop_start",
    "bounded_component_exists",
    "hyperbolic_matrix",
    "gyrator_matrix",
    "CubicOrbit",
]


@dataclass(frozen=True)
class PhasePoint1D:
    x: float
    xi: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.xi)):
            raise ValueError("phase point must be finite")
        if self.h <= 0:
            raise ValueError("h must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.xi])


@dataclass(frozen=True)
class PhasePoint2D:
    x: float
    y: float
    xi: float
    eta: float
    h: float = 1.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.xi, self.eta)):
            raise ValueError("phase point must be finite")
        if self.h <= 0:
            raise ValueError("h must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.xi, self.eta])


@dataclass(frozen=True)
class FlowTrace:
    times: np.ndarray
    points: np.ndarray
    conserved_log: np.ndarray
    blowup_time: float | None = None

    @property
    def max_drift(self) -> float:
        c = np.atleast_2d(self.conserved_log.T).T
        return float(np.max(np.abs(c - c[0]))) if len(c) else 0.0


class Symbol(enum.Enum):
    P0 = "p0"
    P4 = "p4"
    HYPERBOLIC = "hyperbolic"
    GYRATOR = "gyrator"
    Q1 = "q1"
    Q2 = "q2"


class BlowUpError(ArithmeticError):
    """The orbit reaches infinity before the requested time."""

    def __init__(self, pole_time: float, message: str = ""):
        super().__init__(message or f"flow blows up at t = {pole_time:.12g}")
        self.pole_time = pole_time


class AmbiguityError(ArithmeticError):
    """``C0`` is too close to zero to decide between separatrix and elliptic branches."""


class CausticError(ArithmeticError):
    """The projection ``x0 -> x(t)`` degenerates."""


class PatchError(ArithmeticError):
    """No characteristic from the initial Lagrangian reaches the target."""


# -- symbols -----------------------------------------------------------------

def p0(x, xi, h):
    return 0.5 * x * (x * x + xi * xi) - 1.5 * h * x


def p4(x, y, xi, eta, h):
    return 0.5 * x * (x * x + y * y + xi * xi + eta * eta) - 2.5 * h * x


def conserved(symbol: Symbol, state: np.ndarray, h: float) -> np.ndarray:
    """Conserved quantities along the flow of ``symbol`` (last axis is the state)."""
    s = np.asarray(state, dtype=float)
    if symbol is Symbol.P0:
        return np.stack([p0(s[..., 0], s[..., 1], h)], axis=-1)
    if symbol is Symbol.P4:
        x, y, xi, eta = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
        return np.stack([p4(x, y, xi, eta, h), y * y + eta * eta], axis=-1)
    if symbol is Symbol.HYPERBOLIC:
        x, y, xi, eta = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
        return np.stack([xi * eta - x * y], axis=-1)
    if symbol is Symbol.GYRATOR:
        x, y, xi, eta = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
        return np.stack([x * y + xi * eta], axis=-1)
    if symbol is Symbol.Q1:
        return np.stack([s[..., 0] ** 2 * s[..., 1]], axis=-1)
    if symbol is Symbol.Q2:
        return np.stack([(s[..., 0] ** 2 - 5.0 * h) * s[..., 1]], axis=-1)
    raise ValueError(symbol)


def hamilton_rhs(symbol: Symbol, h: float) -> Callable[[np.ndarray], np.ndarray]:
    """Right-hand side of Hamilton's equations; states are ``(x, xi)`` or ``(x, y, xi, eta)``."""
    if symbol is Symbol.P0:
        def f(s):
            x, xi = s[..., 0], s[..., 1]
            return np.stack([x * xi, -1.5 * x * x - 0.5 * xi * xi + 1.5 * h], axis=-1)
    elif symbol is Symbol.P4:
        def f(s):
            x, y, xi, eta = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
            r2 = y * y + eta * eta
            return np.stack([x * xi, x * eta,
                             -1.5 * x * x - 0.5 * (xi * xi + r2) + 2.5 * h, -x * y], axis=-1)
    elif symbol is Symbol.HYPERBOLIC:
        # xi*eta - x*y
        def f(s):
            x, y, xi, eta = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
            return np.stack([eta, xi, y, x], axis=-1)
    elif symbol is Symbol.GYRATOR:
        # x*y + xi*eta
        def f(s):
            x, y, xi, eta = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
            return np.stack([eta, xi, -y, -x], axis=-1)
    elif symbol is Symbol.Q1:
        def f(s):
            x, xi = s[..., 0], s[..., 1]
            return np.stack([x * x, -2.0 * x * xi], axis=-1)
    elif symbol is Symbol.Q2:
        def f(s):
            x, xi = s[..., 0], s[..., 1]
            return np.stack([x * x - 5.0 * h, -2.0 * x * xi], axis=-1)
    else:
        raise ValueError(symbol)
    return f


# -- closed forms for the cubic symbols ---------------------------------------

def _stationary(x: float, xi: float, lam: float, tol: float = 1e-14) -> bool:
    scale = max(1.0, abs(lam), x * x, xi * xi)
    return abs(x * xi) <= tol * scale and abs(-1.5 * x * x - 0.5 * xi * xi + 0.5 * lam) <= tol * scale


def _gd(u):
    """Gudermannian ``atan(sinh u)``."""
    return np.arctan(np.sinh(u))


@dataclass(frozen=True)
class CubicOrbit:
    """Closed-form orbit of ``H = x(x^2 + xi^2)/2 - lam x/2`` through ``(x0, xi0)``."""

    x0: float
    xi0: float
    lam: float
    C0: float
    kind: str
    t0: float = 0.0
    data: ell.EllipticData | None = None
    back_pole: float = -math.inf
    fwd_pole: float = math.inf

    def _check(self, t: float) -> None:
        if t >= self.fwd_pole:
            raise BlowUpError(self.fwd_pole)
        if t <= self.back_pole:
            raise BlowUpError(self.back_pole)

    def state(self, t: float) -> tuple[float, float]:
        self._check(t)
        k, lam = self.kind, self.lam
        if k == "stationary":
            return self.x0, self.xi0
        if k == "axis":
            return 0.0, self._axis_xi(t)
        if k == "separatrix":
            s = math.sqrt(lam)
            u = s * (t + self.t0)
            return math.copysign(s, self.x0) / math.cosh(u), -s * math.tanh(u)
        branch = ell.Branch.SHIFTED if k == "loop" else ell.Branch.REAL
        P, dP = ell.wp_real_line(t + self.t0, branch, self.data)
        d = P - lam / 12.0
        return 0.5 * self.C0 / d, -dP / d

    def _axis_xi(self, t: float) -> float:
        lam, xi0 = self.lam, self.xi0
        if lam > 0:
            s = math.sqrt(lam)
            u = 0.5 * s * (t + self.t0)
            if abs(xi0) < s:
                return s * math.tanh(u)
            if abs(xi0) == s:
                return xi0
            return s / math.tanh(u)
        if lam == 0:
            return 0.0 if xi0 == 0 else 2.0 / (t + self.t0)
        s = math.sqrt(-lam)
        return -s * math.tan(0.5 * s * (t + self.t0))

    def phase(self, t: float) -> float:
        """``int_0^t x(s) ds`` (rotation angle of ``(y, eta)`` for ``p4``)."""
        self._check(t)
        k = self.kind
        if k == "stationary":
            return self.x0 * t
        if k == "axis":
            return 0.0
        if k == "separatrix":
            s = math.sqrt(self.lam)
            return math.copysign(1.0, self.x0) * float(_gd(s * (t + self.t0)) - _gd(s * self.t0))
        xs = np.vectorize(lambda tt: self.state(float(tt))[0])
        return gauss_legendre(xs, 0.0, t, tol=1e-13)


def cubic_orbit(x0: float, xi0: float, lam: float, zero_tol: float = 1e-10) -> CubicOrbit:
    """Classify the orbit through ``(x0, xi0)`` and fit the closed-form parameters."""
    C0 = 0.5 * x0 * (x0 * x0 + xi0 * xi0) - 0.5 * lam * x0
    scale = abs(x0) * max(x0 * x0 + xi0 * xi0, abs(lam), 1e-300)
    if _stationary(x0, xi0, lam):
        return CubicOrbit(x0, xi0, lam, C0, "stationary")
    if x0 == 0.0:
        return _axis_orbit(xi0, lam)
    roundoff = 8 * np.finfo(float).eps * max(scale, abs(x0) ** 3)
    if abs(C0) <= roundoff:
        if lam <= 0:
            raise AmbiguityError("C0 = 0 with x != 0 needs lam > 0")
        s = math.sqrt(lam)
        t0 = math.asinh(-xi0 / abs(x0)) / s
        return CubicOrbit(x0, xi0, lam, 0.0, "separatrix", t0)
    if abs(C0) < zero_tol * max(scale, 1e-300):
        raise AmbiguityError(f"C0 = {C0:.3e} is within the separatrix ambiguity band")
    g2, g3 = ell.invariants_cubic(lam, C0)
    data = ell.elliptic_data(g2, g3)
    P0 = lam / 12.0 + C0 / (2.0 * x0)
    dP0 = -xi0 * C0 / (2.0 * x0)
    if data.case is ell.Case.ALL_REAL_DISTINCT and P0 <= data.e3 + 1e-9 * (data.e2 - data.e1):
        t0 = ell.shifted_line_time(P0, dP0, data)
        return CubicOrbit(x0, xi0, lam, C0, "loop", t0, data)
    if data.omega2 is None:
        raise AmbiguityError("infinite real period on a non-separatrix orbit")
    t0 = ell.real_line_time(P0, dP0, g2, g3)
    return CubicOrbit(x0, xi0, lam, C0, "unbounded", t0, data,
                      back_pole=-t0, fwd_pole=data.omega2 - t0)


def _axis_orbit(xi0: float, lam: float) -> CubicOrbit:
    """``x = 0``: the Riccati equation ``xi' = (lam - xi^2)/2``."""
    back, fwd, t0 = -math.inf, math.inf, 0.0
    if lam > 0:
        s = math.sqrt(lam)
        if abs(xi0) < s:
            t0 = 2.0 / s * math.atanh(xi0 / s)
        elif abs(xi0) > s:
            t0 = 2.0 / s * math.atanh(s / xi0)
            if t0 < 0:
                fwd = -t0
            else:
                back = -t0
    elif lam == 0:
        if xi0 != 0:
            t0 = 2.0 / xi0
            if t0 < 0:
                fwd = -t0
            else:
                back = -t0
    else:
        s = math.sqrt(-lam)
        t0 = 2.0 / s * math.atan(-xi0 / s)
        fwd = math.pi / s - t0
        back = -math.pi / s - t0
    return CubicOrbit(0.0, xi0, lam, 0.0, "axis", t0, None, back, fwd)


def flow_p0(p: PhasePoint1D, t: float) -> PhasePoint1D:
    """Closed-form Hamilton flow of ``p0`` at time ``t``."""
    orb = cubic_orbit(p.x, p.xi, 3.0 * p.h)
    x, xi = orb.state(t)
    return PhasePoint1D(x, xi, p.h)


def flow_p4(p: PhasePoint2D, t: float) -> PhasePoint2D:
    """Closed-form Hamilton flow of ``p4``; ``(y, eta)`` rotate by ``int_0^t x``."""
    C1sq = p.y * p.y + p.eta * p.eta
    orb = cubic_orbit(p.x, p.xi, 5.0 * p.h - C1sq)
    x, xi = orb.state(t)
    phi = orb.phase(t) if C1sq > 0 else 0.0
    c, s = math.cos(phi), math.sin(phi)
    return PhasePoint2D(x, p.y * c + p.eta * s, xi, -p.y * s + p.eta * c, p.h)


def flow_hyperbolic(p: PhasePoint2D, t: float) -> PhasePoint2D:
    """Linear flow of ``xi eta - x y``: ``x' = eta, y' = xi, xi' = y, eta' = x``."""
    ch, sh = math.cosh(t), math.sinh(t)
    return PhasePoint2D(ch * p.x + sh * p.eta, ch * p.y + sh * p.xi,
                        sh * p.y + ch * p.xi, sh * p.x + ch * p.eta, p.h)


def hyperbolic_matrix(t: float) -> np.ndarray:
    """Matrix of :func:`flow_hyperbolic` on ``(x, y, xi, eta)``."""
    ch, sh = math.cosh(t), math.sinh(t)
    return np.array([[ch, 0, 0, sh], [0, ch, sh, 0], [0, sh, ch, 0], [sh, 0, 0, ch]])


def flow_gyrator(p: PhasePoint2D, t: float) -> PhasePoint2D:
    """Linear flow of ``x y + xi eta``: ``x' = eta, y' = xi, xi' = -y, eta' = -x``."""
    c, s = math.cos(t), math.sin(t)
    return PhasePoint2D(c * p.x + s * p.eta, c * p.y + s * p.xi,
                        -s * p.y + c * p.xi, -s * p.x + c * p.eta, p.h)


def gyrator_matrix(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, 0, 0, s], [0, c, s, 0], [0, -s, c, 0], [-s, 0, 0, c]])


# -- RK4 oracle ----------------------------------------------------------------

def _rk4_step(f, s, dt):
    k1 = f(s)
    k2 = f(s + 0.5 * dt * k1)
    k3 = f(s + 0.5 * dt * k2)
    k4 = f(s + dt * k3)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_fixed(symbol: Symbol, state: np.ndarray, t: float, steps: int, h: float) -> np.ndarray:
    """Fixed-step RK4 on a batch of states (last axis is the state); no diagnostics."""
    f = hamilton_rhs(symbol, h)
    s = np.array(state, dtype=float)
    dt = t / steps
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            s = _rk4_step(f, s, dt)
    return s


def rk4_oracle(symbol: Symbol, p, t: float, dt: float, tol: float = 1e-10,
               blowup_radius: float = 1e8, record_every: int = 1) -> FlowTrace:
    """Classical RK4 with conserved-drift step rejection and blow-up detection.

    A step is retried with half the step size when any conserved quantity
    moves by more than ``tol`` (relative to ``max(1, |value|)``).  Integration
    stops with ``blowup_time`` set when the state leaves the ball of radius
    ``blowup_radius`` or the step size underflows.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    h = p.h
    f = hamilton_rhs(symbol, h)
    s = p.as_array().astype(float)
    direction = 1.0 if t >= 0 else -1.0
    T = abs(t)
    times, pts, cons = [0.0], [s.copy()], [conserved(symbol, s, h)]
    now, k = 0.0, 0
    blow = None
    c_now = cons[0]
    min_dt = 1e-14 * max(1.0, T)
    while now < T * (1 - 1e-15):
        step = min(dt, T - now)
        while True:
            with np.errstate(over="ignore", invalid="ignore"):
                nxt = _rk4_step(f, s, direction * step)
                c_next = conserved(symbol, nxt, h)
            drift = np.max(np.abs(c_next - c_now) / np.maximum(1.0, np.abs(c_now)))
            if np.all(np.isfinite(nxt)) and drift <= tol:
                break
            step *= 0.5
            if step < min_dt:
                blow = direction * now
                break
        if blow is not None:
            break
        s, c_now = nxt, c_next
        now += step
        k += 1
        if np.max(np.abs(s)) > blowup_radius:
            blow = direction * now
            times.append(direction * now)
            pts.append(s.copy())
            cons.append(c_now)
            break
        if k % record_every == 0 or now >= T * (1 - 1e-15):
            times.append(direction * now)
            pts.append(s.copy())
            cons.append(c_now)
    return FlowTrace(np.array(times), np.array(pts), np.array(cons), blow)


# -- invariant pocket -----------------------------------------------------------

@dataclass(frozen=True)
class PocketReport:
    h: float
    C0_values: np.ndarray
    closure_errors: np.ndarray
    max_radius: float
    pocket_radius: float
    bounded: bool


def loop_start(h: float, C0: float) -> tuple[float, float]:
    """A point ``(x0, 0)`` on the bounded loop of ``p0 = C0`` (needs ``0 < C0^2 < h^3``)."""
    if not 0 < C0 * C0 < h ** 3:
        raise ValueError("a bounded loop exists only for 0 < C0^2 < h^3")
    # the loop sits on the side x * C0 < 0 and crosses xi = 0 between sqrt(h) and sqrt(3h)
    sgn = -1.0 if C0 > 0 else 1.0
    g = lambda x: 0.5 * x ** 3 - 1.5 * h * x - C0 * sgn
    lo, hi = math.sqrt(h), math.sqrt(3 * h)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (g(mid) > 0) == (g(hi) > 0):
            hi = mid
        else:
            lo = mid
    return sgn * 0.5 * (lo + hi), 0.0


def bounded_component_exists(h: float, C0: float) -> bool:
    return 0 < C0 * C0 < h ** 3


def invariant_pocket_check(h: float, samples: int = 8, seed: int = 0) -> PocketReport:
    """Follow loops for one period and report closure and maximal radius."""
    rng = np.random.default_rng(seed)
    cs = -h ** 1.5 * rng.uniform(0.02, 0.98, samples) * rng.choice([-1.0, 1.0], samples)
    errs = np.empty(samples)
    rmax = 0.0
    for i, C0 in enumerate(cs):
        x0, xi0 = loop_start(h, C0)
        orb = cubic_orbit(x0, xi0, 3 * h)
        w = orb.data.omega2
        for tt in np.linspace(0.0, w, 41):
            x, xi = orb.state(tt)
            rmax = max(rmax, math.hypot(x, xi))
        x, xi = orb.state(w)
        errs[i] = math.hypot(x - x0, xi - xi0)
    return PocketReport(h, cs, errs, rmax, math.sqrt(3 * h), rmax <= math.sqrt(3 * h))


# -- eikonal and transport for the p0 propagator --------------------------------

def _char_rhs(h: float):
    """Characteristics of ``p0`` with action and variations ``(dx, dxi)/dx0``."""
    def f(s):
        x, xi, S, J, K = s
        return np.array([x * xi,
                         -1.5 * x * x - 0.5 * xi * xi + 1.5 * h,
                         x * xi * xi - (0.5 * x * (x * x + xi * xi) - 1.5 * h * x),
                         xi * J + x * K,
                         -3.0 * x * J - xi * K])
    return f


def characteristics(x0, xi0, t: float, h: float, steps: int = 400,
                    radius: float = 1e6) -> dict[str, np.ndarray]:
    """Integrate characteristics from ``(x0, xi0)`` (broadcast arrays) to time ``t``.

    Returns ``x, xi, S`` (action ``int xi dx - p0 dt``), ``J = dx/dx0``, ``K = dxi/dx0``,
    ``Jmin`` (minimum of ``J`` along the path) and ``ok``.
    """
    x0, xi0 = np.broadcast_arrays(np.asarray(x0, float), np.asarray(xi0, float))
    s = np.array([x0, xi0, np.zeros_like(x0), np.ones_like(x0), np.zeros_like(x0)])
    f = _char_rhs(h)
    dt = t / steps
    jmin = np.ones_like(x0)
    ok = np.ones(x0.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            s = _rk4_step(f, s, dt)
            ok &= np.all(np.isfinite(s), axis=0) & (np.abs(s[0]) < radius) & (np.abs(s[1]) < radius)
            jmin = np.minimum(jmin, np.where(ok, s[3], -np.inf))
    return {"x": s[0], "xi": s[1], "S": s[2], "J": s[3], "K": s[4], "Jmin": jmin, "ok": ok}


def _shoot(t: float, x, xi0, h: float, steps: int, tol: float = 1e-12, max_iter: int = 60,
           stages: int = 4, caustic_tol: float = 1e-6):
    """Vectorised Newton solve of ``x(t; x0, xi0) = x`` by continuation in time."""
    x, xi0 = np.broadcast_arrays(np.asarray(x, float), np.asarray(xi0, float))
    x0 = x.copy()
    ok = np.ones(x.shape, dtype=bool)
    for k in range(1, stages + 1):
        tk = t * k / stages
        nk = max(8, steps * k // stages)
        for _ in range(max_iter):
            ch = characteristics(np.where(ok, x0, 0.0), xi0, tk, h, nk)
            good = ch["ok"] & (ch["Jmin"] > caustic_tol)
            ok &= good
            res = np.where(ok, ch["x"] - x, 0.0)
            dx0 = np.where(ok, res / np.where(ok, ch["J"], 1.0), 0.0)
            dx0 = np.clip(dx0, -0.5 * (1 + np.abs(x0)), 0.5 * (1 + np.abs(x0)))
            x0 = x0 - dx0
            if np.all(np.abs(res[ok]) <= tol * np.maximum(1.0, np.abs(x[ok]))):
                break
    ch = characteristics(np.where(ok, x0, 0.0), xi0, t, h, steps)
    ok &= ch["ok"] & (ch["Jmin"] > caustic_tol)
    ok &= np.abs(ch["x"] - x) <= 1e-9 * np.maximum(1.0, np.abs(x))
    return x0, ch, ok


@dataclass(frozen=True)
class EikonalValue:
    phi: float
    dphi_dx: float
    d2phi_dxdxi: float
    d2phi_dxdxi_fd: float
    x0: float
    J: float


def eikonal_phase(t: float, x: float, xi0: float, h: float, steps: int = 400,
                  fd_step: float | None = None) -> EikonalValue:
    """Phase ``phi(t, x; xi0)`` solving ``phi_t + p0(x, phi_x) = 0`` with ``phi(0, x) = x xi0``.

    The mixed derivative is returned two ways: ``1 / (dx/dx0)`` from the
    variational equations, and a central difference in ``xi0`` of ``phi_x``.
    """
    if t == 0:
        return EikonalValue(x * xi0, xi0, 1.0, 1.0, x, 1.0)
    x0, ch, ok = _shoot(t, x, xi0, h, steps)
    if not ok:
        if ch["ok"] and ch["Jmin"] <= 1e-6:
            raise CausticError(f"projection degenerates on the way to x={x} at t={t}")
        raise PatchError(f"no characteristic with xi0={xi0} reaches x={x} at t={t}")
    step = fd_step if fd_step is not None else 1e-5 * max(1.0, abs(xi0))
    xs = np.array([x, x])
    _, chfd, okfd = _shoot(t, xs, np.array([xi0 - step, xi0 + step]), h, steps)
    if not np.all(okfd):
        raise CausticError("finite-difference neighbour left the characteristic patch")
    mixed_fd = float((chfd["xi"][1] - chfd["xi"][0]) / (2 * step))
    phi = float(x0 * xi0 + ch["S"])
    return EikonalValue(phi, float(ch["xi"]), float(1.0 / ch["J"]), mixed_fd, float(x0), float(ch["J"]))


def amplitude_a0(t: float, x: float, xi0: float, h: float, steps: int = 400) -> complex:
    """Principal square root of the mixed derivative, continued from ``a0(0) = 1``."""
    if t == 0:
        return 1.0 + 0j
    ev = eikonal_phase(t, x, xi0, h, steps)
    if ev.d2phi_dxdxi <= 0:
        raise CausticError("mixed derivative crossed zero")
    return complex(math.sqrt(ev.d2phi_dxdxi))


def eikonal_field(t: float, x: np.ndarray, xi0: np.ndarray, h: float,
                  steps: int = 400, newton_iter: int = 4) -> dict[str, np.ndarray]:
    """Phase, amplitude and validity mask on a tensor grid ``x[:, None]``, ``xi0[None, :]``.

    Starting points come from inverting ``x0 -> x(t)`` on a dense ``x0`` grid
    (monotone wherever ``dx/dx0`` stays positive), followed by Newton polishing.
    """
    x = np.asarray(x, float)
    xi0 = np.asarray(xi0, float)
    X, XI = np.meshgrid(x, xi0, indexing="ij")
    if t == 0:
        return {"phi": X * XI, "a0": np.ones_like(X), "ok": np.ones(X.shape, bool), "x0": X.copy()}
    span = x.max() - x.min()
    dense = np.linspace(x.min() - 0.5 * span, x.max() + 0.5 * span, 4 * len(x))
    ch = characteristics(dense[:, None], xi0[None, :], t, h, steps)
    good = ch["ok"] & (ch["Jmin"] > 1e-6)
    x0 = np.zeros_like(X)
    ok = np.zeros(X.shape, dtype=bool)
    for j in range(len(xi0)):
        g = good[:, j]
        if g.sum() < 2:
            continue
        # the admissible starting points form one interval around the origin
        idx = np.nonzero(g)[0]
        runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
        run = max(runs, key=len)
        xe, xs = ch["x"][run, j], dense[run]
        inside = (x >= xe[0]) & (x <= xe[-1])
        x0[:, j] = np.interp(x, xe, xs)
        ok[:, j] = inside
    for _ in range(newton_iter):
        c = characteristics(np.where(ok, x0, 0.0), XI, t, h, steps)
        ok &= c["ok"] & (c["Jmin"] > 1e-6)
        res = np.where(ok, c["x"] - X, 0.0)
        x0 = x0 - np.where(ok, res / np.where(ok, c["J"], 1.0), 0.0)
    c = characteristics(np.where(ok, x0, 0.0), XI, t, h, steps)
    ok &= c["ok"] & (c["Jmin"] > 1e-6) & (np.abs(c["x"] - X) <= 1e-10 * np.maximum(1.0, np.abs(X)))
    phi = np.where(ok, x0 * XI + c["S"], 0.0)
    a0 = np.where(ok, 1.0 / np.sqrt(np.where(ok, c["J"], 1.0)), 0.0)
    return {"phi": phi, "a0": a0, "ok": ok, "x0": x0, "xi": np.where(ok, c["xi"], 0.0)}


def mixed_determinant(phi: Callable[..., float], x: np.ndarray, xi: np.ndarray,
                      step: float = 1e-4) -> float:
    """``det(d^2 phi / dx_i dxi_j)`` by central differences."""
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    n = len(x)
    M = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.eye(n)[i] * step
            ej = np.eye(n)[j] * step
            M[i, j] = (phi(x + ei, xi + ej) - phi(x + ei, xi - ej)
                       - phi(x - ei, xi + ej) + phi(x - ei, xi - ej)) / (4 * step * step)
    return float(np.linalg.det(M))
