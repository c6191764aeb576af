"""Curve families on the half-line [0, inf) for term-structure work.

Three concrete families cover everything the linear-rational machinery
produces, plus lazy combinators for everything derived from them:

* ``ExpPolyCurve``   sums p_k(x) e^(mu_k x) with polynomial p_k; closed
  under derivative, antiderivative, pointwise product and shift.
* ``RationalCurve``  quotient of two exponential polynomials whose
  denominator is verified positive on a declared interval [0, x_max].
* ``GridCurve``      sampled data under a monotone C1 cubic interpolant
  with a declared right-tail extrapolation.

Every curve supports ``value`` (scalar or vectorised), ``derivative``,
``integral`` (the definite integral from 0, exact where the family
allows it and adaptive Gauss-Legendre otherwise) and ``shift``, the left
translation semigroup h |-> h(. + t).

The weighted norm

    ||h||^2 = |h(0)|^2 + int_0^inf |h'(x)|^2 e^(alpha x) dx

is computed exactly for exponential polynomials and by truncated
quadrature otherwise; membership failures are reported as an infinite
sentinel rather than an error, since finiteness of the norm is itself a
modelling question.
"""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npp
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, PositivityError
from .quadrature import adaptive_gauss_legendre

__all__ = [
    "Curve",
    "ExpPolyCurve",
    "RationalCurve",
    "GridCurve",
    "Extrapolation",
    "FunctionCurve",
    "ShiftedCurve",
    "LinearCombinationCurve",
    "ProductCurve",
    "QuotientCurve",
    "AntiderivativeCurve",
    "WeightSpec",
    "evaluate",
    "derivative",
    "integrate",
    "shift",
    "hw_norm",
    "linear_combination",
    "curve_to_json",
    "curve_from_json",
    "dumps_curve",
    "loads_curve",
    "format_float",
]

# Relative size below which a coefficient is treated as arithmetic dust
# when classifying tail growth (products of symbolic terms cancel only
# up to rounding).
_DUST_REL = 1e-11


def _prepare(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError("curves are defined on x >= 0")
    return arr, arr.ndim == 0


def _finish(values, scalar: bool):
    return float(values) if scalar else values


class Curve:
    """A real function on [0, inf) with derivative, integral and shift."""

    def value(self, x):
        raise NotImplementedError

    def derivative(self) -> "Curve":
        raise NotImplementedError(f"{type(self).__name__} has no derivative rule")

    def shift(self, t: float) -> "Curve":
        if t < 0:
            raise DomainError("shift requires t >= 0")
        if t == 0:
            return self
        return ShiftedCurve(self, float(t))

    def integral(self, x):
        """Definite integral from 0 to x; x may be a scalar or an array."""
        if np.ndim(x) == 0:
            xf = float(x)
            if xf < 0:
                raise DomainError("integral bound must be >= 0")
            return self._integral_scalar(xf)
        xs = np.asarray(x, dtype=float)
        if xs.size and xs.min() < 0:
            raise DomainError("integral bounds must be >= 0")
        return self._integral_array(xs)

    def _integral_scalar(self, x: float) -> float:
        if x == 0.0:
            return 0.0
        return adaptive_gauss_legendre(self.value, 0.0, x)

    def _integral_array(self, xs: np.ndarray) -> np.ndarray:
        flat = xs.ravel()
        order = np.argsort(flat, kind="stable")
        out = np.empty(flat.shape)
        total = 0.0
        prev = 0.0
        for idx in order:
            xe = flat[idx]
            if xe > prev:
                total += adaptive_gauss_legendre(self.value, prev, xe)
                prev = xe
            out[idx] = total
        return out.reshape(xs.shape)

    def __call__(self, x):
        return self.value(x)


# ---------------------------------------------------------------------------
# exponential polynomials


def _canonical_terms(terms) -> tuple:
    acc: dict[float, list[float]] = {}
    for coeffs, mu in terms:
        mu = float(mu)
        slot = acc.setdefault(mu, [])
        for i, c in enumerate(coeffs):
            c = float(c)
            if i < len(slot):
                slot[i] += c
            else:
                slot.append(c)
    out = []
    for mu in sorted(acc):
        cs = acc[mu]
        while cs and cs[-1] == 0.0:
            cs.pop()
        if cs and any(c != 0.0 for c in cs):
            out.append((tuple(cs), mu))
    return tuple(out)


@dataclass(frozen=True)
class ExpPolyCurve(Curve):
    """Finite sum of terms p(x) * exp(mu * x) with polynomial p.

    ``terms`` holds (coefficients, mu) pairs with coefficients ordered
    from the constant upward. Terms with equal exponents are merged and
    zero terms dropped, so distinct exponents is a class invariant.
    """

    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", _canonical_terms(self.terms))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "ExpPolyCurve":
        return ExpPolyCurve(())

    @staticmethod
    def constant(v: float) -> "ExpPolyCurve":
        return ExpPolyCurve((((float(v),), 0.0),))

    @staticmethod
    def exponential(coef: float, mu: float) -> "ExpPolyCurve":
        return ExpPolyCurve((((float(coef),), float(mu)),))

    @staticmethod
    def polynomial(coeffs: Sequence[float]) -> "ExpPolyCurve":
        return ExpPolyCurve(((tuple(float(c) for c in coeffs), 0.0),))

    # -- evaluation --------------------------------------------------------

    def value(self, x):
        arr, scalar = _prepare(x)
        total = np.zeros(arr.shape)
        for coeffs, mu in self.terms:
            total = total + npp.polyval(arr, coeffs) * np.exp(mu * arr)
        return _finish(total, scalar)

    def derivative(self) -> "ExpPolyCurve":
        new = []
        for coeffs, mu in self.terms:
            dp = npp.polyder(coeffs) if len(coeffs) > 1 else np.zeros(1)
            new.append((tuple(npp.polyadd(dp, mu * np.asarray(coeffs))), mu))
        return ExpPolyCurve(tuple(new))

    def antiderivative(self) -> "ExpPolyCurve":
        """An antiderivative within the class (constant of integration 0)."""
        new = []
        for coeffs, mu in self.terms:
            if mu == 0.0:
                new.append((tuple(npp.polyint(coeffs)), 0.0))
            else:
                m = len(coeffs) - 1
                q = [0.0] * (m + 1)
                q[m] = coeffs[m] / mu
                for k in range(m - 1, -1, -1):
                    q[k] = (coeffs[k] - (k + 1) * q[k + 1]) / mu
                new.append((tuple(q), mu))
        return ExpPolyCurve(tuple(new))

    def integral(self, x):
        anti = self.antiderivative()
        return anti.value(x) - anti.value(0.0)

    def shift(self, t: float) -> "ExpPolyCurve":
        if t < 0:
            raise DomainError("shift requires t >= 0")
        if t == 0:
            return self
        new = []
        for coeffs, mu in self.terms:
            n = len(coeffs)
            cs = [0.0] * n
            for k, ck in enumerate(coeffs):
                if ck == 0.0:
                    continue
                for i in range(k + 1):
                    cs[i] += ck * math.comb(k, i) * t ** (k - i)
            scale = math.exp(mu * t)
            new.append((tuple(c * scale for c in cs), mu))
        return ExpPolyCurve(tuple(new))

    # -- algebra -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = ExpPolyCurve.constant(other)
        if isinstance(other, ExpPolyCurve):
            return ExpPolyCurve(self.terms + other.terms)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return ExpPolyCurve(tuple((tuple(-c for c in cs), mu)
                                  for cs, mu in self.terms))

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self + (-other)
        if isinstance(other, ExpPolyCurve):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            s = float(other)
            return ExpPolyCurve(tuple((tuple(s * c for c in cs), mu)
                                      for cs, mu in self.terms))
        if isinstance(other, ExpPolyCurve):
            new = []
            for c1, m1 in self.terms:
                for c2, m2 in other.terms:
                    new.append((tuple(npp.polymul(c1, c2)), m1 + m2))
            return ExpPolyCurve(tuple(new))
        return NotImplemented

    __rmul__ = __mul__

    # -- tail analysis -----------------------------------------------------

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for cs, _ in self.terms for c in cs), default=0.0)

    def leading_term(self, rel: float = _DUST_REL):
        """Dominant (mu, degree, coefficient) as x -> inf, ignoring dust."""
        gmax = self.max_abs_coefficient()
        if gmax == 0.0:
            return None
        thr = rel * gmax
        best = None
        for cs, mu in self.terms:
            deg = max((i for i, c in enumerate(cs) if abs(c) > thr), default=None)
            if deg is None:
                continue
            if best is None or (mu, deg) > (best[0], best[1]):
                best = (mu, deg, cs[deg])
        return best

    def integral_to_infinity(self, rel: float = _DUST_REL):
        """int_0^inf of the curve, or None when it diverges.

        Convergence needs every non-dust term to carry a negative
        exponent; polynomial factors are then harmless.
        """
        gmax = self.max_abs_coefficient()
        if gmax == 0.0:
            return 0.0
        thr = rel * gmax
        total = 0.0
        for cs, mu in self.terms:
            if all(abs(c) <= thr for c in cs):
                continue
            if mu >= 0.0:
                return None
            m = len(cs) - 1
            q = [0.0] * (m + 1)
            q[m] = cs[m] / mu
            for k in range(m - 1, -1, -1):
                q[k] = (cs[k] - (k + 1) * q[k + 1]) / mu
            total += -q[0]
        return total


# ---------------------------------------------------------------------------
# rational curves


def check_positive_on(curve: Curve, x_max: float, step: float = 0.01,
                      state=None) -> None:
    """Verify curve > 0 on [0, x_max] on a dense grid, refining any
    sign change by bisection to locate a witness."""
    xs = np.arange(0.0, x_max + step, step)
    vals = np.asarray(curve.value(xs), dtype=float)
    bad = np.nonzero(vals <= 0.0)[0]
    if bad.size == 0:
        return
    i = int(bad[0])
    lo = xs[max(i - 1, 0)]
    hi = xs[i]
    if i > 0 and vals[i - 1] > 0.0:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if float(curve.value(mid)) > 0.0:
                lo = mid
            else:
                hi = mid
    raise PositivityError(
        f"curve is not positive near x = {hi:.6g}", witness=float(hi),
        state=state)


@dataclass(frozen=True)
class RationalCurve(Curve):
    """Quotient of exponential polynomials with a positive denominator.

    Positivity of the denominator is verified on [0, x_max] at
    construction (dense grid plus bisection); evaluation anywhere is
    additionally guarded pointwise.
    """

    numerator: ExpPolyCurve
    denominator: ExpPolyCurve
    x_max: float = 200.0
    check: InitVar[bool] = True

    def __post_init__(self, check):
        if check:
            check_positive_on(self.denominator, self.x_max)

    def value(self, x):
        arr, scalar = _prepare(x)
        den = np.asarray(self.denominator.value(arr), dtype=float)
        if np.any(den <= 0.0):
            where = np.asarray(arr)[np.asarray(den <= 0.0)]
            w = float(np.ravel(where)[0]) if np.size(where) else None
            raise PositivityError("denominator is not positive", witness=w)
        num = np.asarray(self.numerator.value(arr), dtype=float)
        return _finish(num / den, scalar)

    def derivative(self) -> "RationalCurve":
        n, d = self.numerator, self.denominator
        num = n.derivative() * d - n * d.derivative()
        return RationalCurve(num, d * d, self.x_max, check=False)

    def shift(self, t: float) -> "RationalCurve":
        if t < 0:
            raise DomainError("shift requires t >= 0")
        if t == 0:
            return self
        return RationalCurve(self.numerator.shift(t), self.denominator.shift(t),
                             max(self.x_max - t, 0.0), check=False)

    def tail_exponents(self, rel: float = _DUST_REL):
        """(nu, k) with value ~ coef * x^k * e^(nu x) as x -> inf."""
        ln = self.numerator.leading_term(rel)
        ld = self.denominator.leading_term(rel)
        if ln is None or ld is None:
            return None
        return ln[0] - ld[0], ln[1] - ld[1]


# ---------------------------------------------------------------------------
# sampled curves


@dataclass(frozen=True)
class Extrapolation:
    """Right-tail behaviour of a GridCurve beyond the last knot."""

    kind: str = "constant"
    rate: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "exponential-decay"):
            raise DomainError(f"unknown extrapolation kind {self.kind!r}")
        if self.kind == "exponential-decay":
            if self.rate is None or self.rate <= 0:
                raise DomainError("exponential-decay extrapolation needs rate > 0")


class GridCurve(Curve):
    """Sampled curve under a monotone-preserving C1 cubic interpolant.

    Left of the first knot the interpolant's own extension is used (the
    knots normally start at 0); right of the last knot the declared
    extrapolation applies.
    """

    def __init__(self, knots: Sequence[float], values: Sequence[float],
                 extrapolation: Extrapolation | str = "constant"):
        knots = tuple(float(k) for k in knots)
        values = tuple(float(v) for v in values)
        if isinstance(extrapolation, str):
            extrapolation = Extrapolation(extrapolation)
        if len(knots) != len(values) or len(knots) < 2:
            raise DomainError("need matching knots/values lists of length >= 2")
        if knots[0] < 0:
            raise DomainError("knots must be nonnegative")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise DomainError("knots must be strictly increasing")
        self.knots = knots
        self.knot_values = values
        self.extrapolation = extrapolation
        self._pchip = PchipInterpolator(knots, values, extrapolate=True)
        self._anti = None

    def _tail(self, arr):
        kn = self.knots[-1]
        vn = self.knot_values[-1]
        if self.extrapolation.kind == "constant":
            return np.full(arr.shape, vn)
        rate = self.extrapolation.rate
        return vn * np.exp(-rate * (arr - kn))

    def value(self, x):
        arr, scalar = _prepare(x)
        kn = self.knots[-1]
        inside = self._pchip(np.minimum(arr, kn))
        out = np.where(arr <= kn, inside, self._tail(arr))
        return _finish(out, scalar)

    def derivative(self) -> Curve:
        kn = self.knots[-1]
        vn = self.knot_values[-1]
        p1 = self._pchip.derivative()
        p2 = self._pchip.derivative(2)
        extrap = self.extrapolation

        def tail_d(arr, order):
            if extrap.kind == "constant":
                return np.zeros(arr.shape)
            rate = extrap.rate
            return vn * (-rate) ** order * np.exp(-rate * (arr - kn))

        def d1(arr):
            arr = np.asarray(arr, dtype=float)
            return np.where(arr <= kn, p1(np.minimum(arr, kn)), tail_d(arr, 1))

        def d2(arr):
            arr = np.asarray(arr, dtype=float)
            return np.where(arr <= kn, p2(np.minimum(arr, kn)), tail_d(arr, 2))

        second = FunctionCurve(d2, label="grid second derivative")
        return FunctionCurve(
            d1, derivative_curve=second,
            integral_fn=lambda x: self.value(x) - self.value(0.0),
            label="grid derivative")

    def integral(self, x):
        arr, scalar = _prepare(x)
        if self._anti is None:
            self._anti = self._pchip.antiderivative()
        kn = self.knots[-1]
        vn = self.knot_values[-1]
        base = self._anti(np.minimum(arr, kn)) - self._anti(0.0)
        over = np.maximum(arr - kn, 0.0)
        if self.extrapolation.kind == "constant":
            tail = vn * over
        else:
            rate = self.extrapolation.rate
            tail = vn * (1.0 - np.exp(-rate * over)) / rate
        return _finish(base + tail, scalar)


# ---------------------------------------------------------------------------
# combinators


class FunctionCurve(Curve):
    """Curve backed by a vectorised callable, with optional analytic
    derivative and integral rules."""

    def __init__(self, fn: Callable, derivative_curve: Curve | None = None,
                 integral_fn: Callable | None = None, label: str = ""):
        self._fn = fn
        self._derivative = derivative_curve
        self._integral_fn = integral_fn
        self.label = label

    def value(self, x):
        arr, scalar = _prepare(x)
        return _finish(np.asarray(self._fn(arr), dtype=float), scalar)

    def derivative(self) -> Curve:
        if self._derivative is None:
            raise NotImplementedError(
                f"no derivative rule attached to {self.label or 'FunctionCurve'}")
        return self._derivative

    def integral(self, x):
        if self._integral_fn is not None:
            arr, scalar = _prepare(x)
            return _finish(np.asarray(self._integral_fn(arr), dtype=float), scalar)
        return super().integral(x)


class ShiftedCurve(Curve):
    """Left translation h(. + t) of an arbitrary curve."""

    def __init__(self, base: Curve, t: float):
        self.base = base
        self.t = float(t)

    def value(self, x):
        arr, scalar = _prepare(x)
        return _finish(np.asarray(self.base.value(arr + self.t), dtype=float),
                       scalar)

    def derivative(self) -> Curve:
        return ShiftedCurve(self.base.derivative(), self.t)

    def shift(self, t: float) -> Curve:
        if t < 0:
            raise DomainError("shift requires t >= 0")
        return ShiftedCurve(self.base, self.t + t)

    def integral(self, x):
        arr, scalar = _prepare(x)
        base0 = self.base.integral(self.t)
        vals = self.base.integral(arr + self.t) - base0
        return _finish(np.asarray(vals, dtype=float), scalar)


class LinearCombinationCurve(Curve):
    """offset + sum_i coeff_i * curve_i."""

    def __init__(self, offset: float, coeffs: Sequence[float],
                 curves: Sequence[Curve]):
        if len(coeffs) != len(curves):
            raise ValueError("coefficients and curves must align")
        self.offset = float(offset)
        self.coeffs = tuple(float(c) for c in coeffs)
        self.curves = tuple(curves)

    def value(self, x):
        arr, scalar = _prepare(x)
        total = np.full(arr.shape, self.offset)
        for a, c in zip(self.coeffs, self.curves):
            if a != 0.0:
                total = total + a * np.asarray(c.value(arr), dtype=float)
        return _finish(total, scalar)

    def derivative(self) -> Curve:
        return LinearCombinationCurve(
            0.0, self.coeffs, tuple(c.derivative() for c in self.curves))

    def integral(self, x):
        arr, scalar = _prepare(x)
        total = self.offset * arr
        for a, c in zip(self.coeffs, self.curves):
            if a != 0.0:
                total = total + a * np.asarray(c.integral(arr), dtype=float)
        return _finish(total, scalar)


class ProductCurve(Curve):
    """Pointwise product of two curves."""

    def __init__(self, left: Curve, right: Curve):
        self.left = left
        self.right = right

    def value(self, x):
        arr, scalar = _prepare(x)
        out = (np.asarray(self.left.value(arr), dtype=float)
               * np.asarray(self.right.value(arr), dtype=float))
        return _finish(out, scalar)

    def derivative(self) -> Curve:
        return LinearCombinationCurve(
            0.0, (1.0, 1.0),
            (ProductCurve(self.left.derivative(), self.right),
             ProductCurve(self.left, self.right.derivative())))


class QuotientCurve(Curve):
    """Pointwise quotient with a positivity guard on the denominator."""

    def __init__(self, numerator: Curve, denominator: Curve):
        self.numerator = numerator
        self.denominator = denominator

    def value(self, x):
        arr, scalar = _prepare(x)
        den = np.asarray(self.denominator.value(arr), dtype=float)
        if np.any(den <= 0.0):
            where = np.asarray(arr)[np.asarray(den <= 0.0)]
            w = float(np.ravel(where)[0]) if np.size(where) else None
            raise PositivityError("denominator is not positive", witness=w)
        num = np.asarray(self.numerator.value(arr), dtype=float)
        return _finish(num / den, scalar)

    def derivative(self) -> Curve:
        n, d = self.numerator, self.denominator
        num = LinearCombinationCurve(
            0.0, (1.0, -1.0),
            (ProductCurve(n.derivative(), d), ProductCurve(n, d.derivative())))
        return QuotientCurve(num, ProductCurve(d, d))


class AntiderivativeCurve(Curve):
    """x |-> int_0^x base(s) ds as a curve object."""

    def __init__(self, base: Curve):
        self.base = base

    def value(self, x):
        return self.base.integral(x)

    def derivative(self) -> Curve:
        return self.base


def linear_combination(offset: float, coeffs: Sequence[float],
                       curves: Sequence[Curve]) -> Curve:
    """offset + sum coeff_i curve_i, collapsing to an exponential
    polynomial when every ingredient is one."""
    if all(isinstance(c, ExpPolyCurve) for c in curves):
        out = ExpPolyCurve.constant(offset) if offset != 0.0 else ExpPolyCurve.zero()
        for a, c in zip(coeffs, curves):
            if a != 0.0:
                out = out + c * float(a)
        return out
    return LinearCombinationCurve(offset, coeffs, curves)


# ---------------------------------------------------------------------------
# weighted norm


@dataclass(frozen=True)
class WeightSpec:
    """Exponential weight w(x) = e^(alpha x) with truncation controls."""

    alpha: float
    tail_tolerance: float = 1e-14
    x_cap: float = 200.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise DomainError("weight exponent alpha must be > 0")
        if self.tail_tolerance <= 0 or self.x_cap <= 0:
            raise DomainError("tail_tolerance and x_cap must be > 0")


def _truncation_point(fn, weight: WeightSpec) -> float:
    """First grid point after which the integrand stays below
    tail_tolerance on the scan grid, capped at x_cap."""
    xs = np.linspace(0.0, weight.x_cap, 2001)
    vals = np.asarray(fn(xs), dtype=float)
    above = np.nonzero(vals >= weight.tail_tolerance)[0]
    if above.size == 0:
        return 0.0
    idx = min(int(above[-1]) + 1, xs.size - 1)
    return float(xs[idx])


def hw_norm(curve: Curve, weight: WeightSpec) -> float:
    """Weighted norm sqrt(|h(0)|^2 + int |h'|^2 e^(alpha x)).

    Returns math.inf when the integral diverges; divergence is decided
    exactly for exponential polynomials and by tail-exponent analysis
    for rational and grid curves.
    """
    h0 = float(curve.value(0.0))
    hp = curve.derivative()
    alpha = weight.alpha

    if isinstance(hp, ExpPolyCurve):
        integrand = (hp * hp) * ExpPolyCurve.exponential(1.0, alpha)
        tail = integrand.integral_to_infinity()
        if tail is None:
            return math.inf
        return math.sqrt(h0 * h0 + max(tail, 0.0))

    if isinstance(hp, RationalCurve):
        te = hp.tail_exponents()
        if te is not None:
            nu, k = te
            crit = 2.0 * nu + alpha
            if crit > 0.0 or (crit == 0.0 and k >= 0):
                return math.inf

    if isinstance(curve, GridCurve):
        kn = curve.knots[-1]
        vn = curve.knot_values[-1]
        extrap = curve.extrapolation
        dfn = hp.value
        body = adaptive_gauss_legendre(
            lambda x: np.asarray(dfn(x), dtype=float) ** 2 * np.exp(alpha * x),
            0.0, kn, rel_tol=1e-10, abs_tol=1e-16)
        if extrap.kind == "constant" or vn == 0.0:
            tail_val = 0.0
        else:
            rate = extrap.rate
            if alpha - 2.0 * rate >= 0.0:
                return math.inf
            tail_val = rate ** 2 * vn ** 2 * math.exp(alpha * kn) / (2.0 * rate - alpha)
        return math.sqrt(h0 * h0 + body + tail_val)

    def integrand_fn(x):
        return np.asarray(hp.value(x), dtype=float) ** 2 * np.exp(alpha * np.asarray(x))

    upper = _truncation_point(integrand_fn, weight)
    if upper == 0.0:
        return abs(h0)
    val = adaptive_gauss_legendre(integrand_fn, 0.0, upper,
                                  rel_tol=1e-10, abs_tol=1e-16)
    return math.sqrt(h0 * h0 + max(val, 0.0))


# ---------------------------------------------------------------------------
# module-level operation names


def evaluate(curve: Curve, x):
    return curve.value(x)


def derivative(curve: Curve) -> Curve:
    return curve.derivative()


def integrate(curve: Curve, x):
    return curve.integral(x)


def shift(curve: Curve, t: float) -> Curve:
    return curve.shift(t)


# ---------------------------------------------------------------------------
# JSON serialisation (17 significant digits for lossless round-trips)


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def _emit(obj) -> str:
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{_emit(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_emit(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj)!r}")


def curve_to_json(curve: Curve) -> dict:
    if isinstance(curve, ExpPolyCurve):
        return {"type": "exppoly",
                "terms": [{"coeffs": list(cs), "mu": mu} for cs, mu in curve.terms]}
    if isinstance(curve, RationalCurve):
        return {"type": "rational",
                "numerator": curve_to_json(curve.numerator),
                "denominator": curve_to_json(curve.denominator),
                "x_max": curve.x_max}
    if isinstance(curve, GridCurve):
        extrap: dict | str
        if curve.extrapolation.kind == "constant":
            extrap = {"kind": "constant"}
        else:
            extrap = {"kind": "exponential-decay", "rate": curve.extrapolation.rate}
        return {"type": "grid", "knots": list(curve.knots),
                "values": list(curve.knot_values), "extrapolation": extrap}
    raise TypeError(f"{type(curve).__name__} does not serialise to JSON")


def curve_from_json(data: dict) -> Curve:
    kind = data.get("type")
    if kind == "exppoly":
        return ExpPolyCurve(tuple((tuple(t["coeffs"]), float(t["mu"]))
                                  for t in data["terms"]))
    if kind == "rational":
        num = curve_from_json(data["numerator"])
        den = curve_from_json(data["denominator"])
        return RationalCurve(num, den, float(data.get("x_max", 200.0)))
    if kind == "grid":
        raw = data.get("extrapolation", "constant")
        if isinstance(raw, str):
            extrap = Extrapolation(raw)
        else:
            extrap = Extrapolation(raw.get("kind", "constant"), raw.get("rate"))
        return GridCurve(data["knots"], data["values"], extrap)
    raise DomainError(f"unknown curve type {kind!r}")


def dumps_curve(curve: Curve) -> str:
    return _emit(curve_to_json(curve))


def loads_curve(text: str) -> Curve:
    return curve_from_json(json.loads(text))
