"""Adaptive Gauss-Legendre panels for smooth integrands on finite intervals."""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np


class QuadratureError(ArithmeticError):
    """Adaptive refinement did not reach the requested tolerance."""


@lru_cache(maxsize=8)
def _rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panel(f, a: float, b: float, order: int) -> float:
    x, w = _rule(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return float(half * np.sum(w * f(mid + half * x)))


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                   tol: float = 1e-14, order: int = 24, max_depth: int = 40) -> float:
    """Integrate a vectorised ``f`` over ``[a, b]`` by recursive panel bisection.

    A panel is accepted when one ``order``-point rule agrees with the sum over
    its two halves to ``tol`` relative to the running total.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    whole = _panel(f, a, b, order)
    scale = max(abs(whole), 1e-300)
    total = 0.0
    stack = [(a, b, whole, 0)]
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid, order)
        right = _panel(f, mid, hi, order)
        if abs(left + right - est) <= tol * scale or hi - lo < 1e-15 * max(1.0, abs(hi)):
            total += left + right
        elif depth >= max_depth:
            raise QuadratureError(f"panel [{lo}, {hi}] did not converge")
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return sign * total
