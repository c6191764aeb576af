"""Gauss-Legendre quadrature and weighted least-squares projections."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureError

__all__ = [
    "fixed_gauss_legendre",
    "adaptive_gauss_legendre",
    "composite_gauss_legendre",
    "weighted_projection",
]


@lru_cache(maxsize=None)
def _gl_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def fixed_gauss_legendre(fn, a: float, b: float, n: int = 16) -> float:
    """Single-panel n-point Gauss-Legendre estimate of int_a^b fn."""
    x, w = _gl_rule(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(fn(mid + half * x), dtype=float)
    return half * float(np.dot(w, vals))


def adaptive_gauss_legendre(fn, a: float, b: float, rel_tol: float = 1e-12,
                            abs_tol: float = 1e-14, max_depth: int = 40,
                            n: int = 16) -> float:
    """Adaptive bisection quadrature on [a, b].

    A panel is accepted when the whole-panel estimate and the sum of its
    two halves agree to rel_tol (with an absolute floor for integrals
    near zero). Panels still disagreeing at max_depth raise, with the
    best available estimate attached to the exception.
    """
    if b == a:
        return 0.0
    if b < a:
        raise ValueError("integration bounds must satisfy a <= b")
    total = 0.0
    failed = False
    stack = [(float(a), float(b), fixed_gauss_legendre(fn, a, b, n), 0)]
    while stack:
        lo, hi, coarse, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = fixed_gauss_legendre(fn, lo, mid, n)
        right = fixed_gauss_legendre(fn, mid, hi, n)
        fine = left + right
        if abs(fine - coarse) <= max(rel_tol * abs(fine), abs_tol):
            total += fine
        elif depth >= max_depth:
            total += fine
            failed = True
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    if failed:
        raise QuadratureError(
            f"adaptive quadrature on [{a}, {b}] did not converge at depth "
            f"{max_depth}", estimate=total)
    return total


def composite_gauss_legendre(a: float, b: float, n_nodes: int = 256,
                             per_panel: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    panels = max(1, n_nodes // per_panel)
    edges = np.linspace(a, b, panels + 1)
    x, w = _gl_rule(per_panel)
    nodes = []
    weights = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (lo + hi) + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def weighted_projection(basis: np.ndarray, weights: np.ndarray,
                        target: np.ndarray):
    """L2 projection of target onto the columns of basis.

    Returns (coefficients, residual) where residual is the weighted L2
    norm of the orthogonal remainder.
    """
    sw = np.sqrt(weights)
    design = basis * sw[:, None]
    rhs = target * sw
    coef, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    residual = float(np.linalg.norm(rhs - design @ coef))
    return coef, residual
