"""Bijection between forward curves and discount curves.

A forward curve f maps to the discount curve

    h(x) = 1 - exp(-int_0^x f(s) ds),

so that zero-coupon bond prices are P(x) = 1 - h(x) and the inverse map
is f(x) = h'(x) / (1 - h(x)). The short rate is f(0) = h'(0).
"""

from __future__ import annotations

import numpy as np

from .curvespace import (Curve, ExpPolyCurve, FunctionCurve, RationalCurve,
                         check_positive_on, linear_combination)
from .errors import DomainError, PositivityError

__all__ = ["DiscountCurve", "psi", "psi_inverse", "bond_price", "short_rate"]


class DiscountCurve(Curve):
    """A curve h with h(0) = 0 and 1 - h > 0 on its validity interval.

    h(0) = 0 is enforced at construction by subtracting the base
    curve's value at zero.
    """

    def __init__(self, base: Curve, x_max: float = 200.0, check: bool = True):
        self._base = base
        self._offset = float(base.value(0.0))
        self.x_max = float(x_max)
        if check:
            check_positive_on(
                linear_combination(1.0 + self._offset, (-1.0,), (base,)),
                self.x_max)

    @property
    def underlying(self) -> Curve:
        return self._base

    @property
    def offset(self) -> float:
        return self._offset

    def value(self, x):
        v = self._base.value(x)
        return v - self._offset if np.ndim(v) == 0 else np.asarray(v) - self._offset

    def derivative(self) -> Curve:
        return self._base.derivative()

    def integral(self, x):
        base = self._base.integral(x)
        off = self._offset * np.asarray(x, dtype=float)
        out = np.asarray(base) - off
        return float(out) if np.ndim(x) == 0 else out


class _PsiCurve(Curve):
    """Lazy image 1 - exp(-J_x f); evaluation composes the integral
    functional with the exponential."""

    def __init__(self, forward: Curve):
        self.forward = forward

    def value(self, x):
        j = self.forward.integral(x)
        out = 1.0 - np.exp(-np.asarray(j, dtype=float))
        return float(out) if np.ndim(x) == 0 else out

    def derivative(self) -> Curve:
        return _PsiDerivativeCurve(self.forward)


class _PsiDerivativeCurve(Curve):
    """(Psi f)'(x) = f(x) exp(-J_x f)."""

    def __init__(self, forward: Curve):
        self.forward = forward

    def value(self, x):
        f = np.asarray(self.forward.value(x), dtype=float)
        j = np.asarray(self.forward.integral(x), dtype=float)
        out = f * np.exp(-j)
        return float(out) if np.ndim(x) == 0 else out

    def derivative(self) -> Curve:
        fp = self.forward.derivative()

        def fn(x):
            f = np.asarray(self.forward.value(x), dtype=float)
            j = np.asarray(self.forward.integral(x), dtype=float)
            d = np.asarray(fp.value(x), dtype=float)
            return (d - f * f) * np.exp(-j)

        return FunctionCurve(fn, label="second derivative of discount image")

    def integral(self, x):
        # integral of h' is h itself
        j = self.forward.integral(x)
        out = 1.0 - np.exp(-np.asarray(j, dtype=float))
        return float(out) if np.ndim(x) == 0 else out


def _matches_log_derivative(f: RationalCurve) -> bool:
    """True when the numerator equals minus the derivative of the
    denominator, so that f = -(log den)'."""
    target = f.denominator.derivative() * -1.0
    hi = min(f.x_max, 50.0)
    xs = np.linspace(0.0, max(hi, 1.0), 65)
    a = np.asarray(f.numerator.value(xs), dtype=float)
    b = np.asarray(target.value(xs), dtype=float)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-30)
    return float(np.max(np.abs(a - b))) <= 1e-12 * scale


def psi(f: Curve, x_max: float = 200.0) -> DiscountCurve:
    """Discount curve of a forward curve.

    Quotients of the log-derivative form N/D with N = -D' admit the
    closed form h = 1 - D(x)/D(0), kept exact; everything else is
    evaluated lazily through the integral functional.
    """
    if isinstance(f, RationalCurve) and _matches_log_derivative(f):
        den = f.denominator
        d0 = float(den.value(0.0))
        base = ExpPolyCurve.constant(1.0) - den * (1.0 / d0)
        return DiscountCurve(base, x_max=max(x_max, f.x_max), check=False)
    return DiscountCurve(_PsiCurve(f), x_max=x_max, check=False)


def psi_inverse(h: Curve) -> Curve:
    """Forward curve of a discount curve: f = h' / (1 - h)."""
    if isinstance(h, DiscountCurve) and isinstance(h.underlying, ExpPolyCurve):
        base = h.underlying
        num = base.derivative()
        den = ExpPolyCurve.constant(1.0 + h.offset) - base
        return RationalCurve(num, den, x_max=h.x_max)

    hp = h.derivative()

    def fn(x):
        top = np.asarray(hp.value(x), dtype=float)
        bottom = 1.0 - np.asarray(h.value(x), dtype=float)
        if np.any(bottom <= 0.0):
            where = np.asarray(x)[np.asarray(bottom <= 0.0)]
            w = float(np.ravel(where)[0]) if np.size(where) else None
            raise PositivityError("1 - h must stay positive", witness=w)
        return top / bottom

    return FunctionCurve(fn, label="forward curve of discount image")


def bond_price(f: Curve, x: float) -> float:
    """Zero-coupon price exp(-int_0^x f)."""
    if x < 0:
        raise DomainError("maturity must be >= 0")
    return float(np.exp(-f.integral(float(x))))


def short_rate(f: Curve) -> float:
    """Instantaneous rate f(0)."""
    return float(f.value(0.0))
