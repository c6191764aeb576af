"""No-arbitrage drifts and tangential diffusions.

In forward coordinates the arbitrage-free drift of a diffusion with
columns sigma_j is

    beta(x) = sum_j sigma_j(x) * int_0^x sigma_j(s) ds.

In discount coordinates the same dynamics read

    beta_h(h) = (h - 1) h'(0),
    sigma_h_j(x) = (1 - h(x)) * int_0^x sigma_j(s) ds,

and the forward-coordinate columns are recovered from the discount ones
by sigma_j(x) = d/dx [ exp(int_0^x f) * sigma_h_j(x) ].

On a matrix-generated manifold the discount chart is affine in the
state, so the factor drift that keeps the chart image arbitrage-free is
state-dependent but diffusion-independent: the coordinates of
d/dx h + (h - 1) h'(0) in the basis {u_j}. The tangency of that vector
field is what ``invariance_residual`` measures for arbitrary families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curvespace import (AntiderivativeCurve, Curve, ExpPolyCurve,
                         FunctionCurve, ProductCurve, RationalCurve,
                         linear_combination)
from .errors import DomainError, SchemaError, UnsupportedManifoldError
from .manifold import Box, LinearRationalManifold
from .quadrature import composite_gauss_legendre, weighted_projection

__all__ = [
    "BumpFunction",
    "DiffusionSpec",
    "hjm_drift",
    "h_drift",
    "h_sigma",
    "sigma_from_h",
    "tangential_sigma",
    "consistent_z_drift",
    "invariance_residual",
    "InvarianceResidual",
    "bump_eval",
    "diffusion_to_json",
    "diffusion_from_json",
]


def _smoothstep(t: np.ndarray) -> np.ndarray:
    # quintic ramp: value and first two derivatives vanish at 0 and
    # match (1, 0, 0) at 1
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@dataclass(frozen=True)
class BumpFunction:
    """C2 cutoff equal to 1 on an inner box and 0 outside an outer box.

    Per axis the transition is a quintic ramp; the overall value is the
    product across axes.
    """

    inner: Box
    outer: Box

    def __post_init__(self):
        if self.inner.dimension != self.outer.dimension:
            raise DomainError("inner and outer boxes must share a dimension")
        for lo_i, hi_i, lo_o, hi_o in zip(self.inner.lower, self.inner.upper,
                                          self.outer.lower, self.outer.upper):
            if not (np.isfinite(lo_o) and np.isfinite(hi_o)):
                raise DomainError("bump boxes must be bounded")
            if not (lo_o < lo_i and hi_i < hi_o):
                raise DomainError("inner box must lie strictly inside the outer box")

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def value_batch(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = np.ones(z.shape[0])
        for axis in range(self.dimension):
            lo_i = self.inner.lower[axis]
            hi_i = self.inner.upper[axis]
            lo_o = self.outer.lower[axis]
            hi_o = self.outer.upper[axis]
            zi = z[:, axis]
            up = _smoothstep((zi - lo_o) / (lo_i - lo_o))
            down = _smoothstep((hi_o - zi) / (hi_o - hi_i))
            out = out * up * down
        return out

    def value(self, z) -> float:
        return float(self.value_batch(np.asarray(z, dtype=float).reshape(1, -1))[0])


def bump_eval(bump: BumpFunction, z) -> float:
    return bump.value(z)


@dataclass(frozen=True)
class DiffusionSpec:
    """Constant pushforward matrix localised by a bump in state space.

    Column j of the induced forward-coordinate diffusion at state z is
    bump(z) * sum_k a[k, j] * tangent_basis(z)[k], tangential by
    construction and zero outside the bump's outer box.
    """

    manifold: LinearRationalManifold
    a: np.ndarray = field(compare=False)
    bump: BumpFunction

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        d = self.manifold.dimension
        if a.shape != (d, d):
            raise DomainError(f"pushforward matrix must be {d}x{d}")
        if not np.all(np.isfinite(a)):
            raise DomainError("pushforward matrix must be finite")
        object.__setattr__(self, "a", a)
        if self.bump.dimension != d:
            raise DomainError("bump dimension does not match the manifold")
        for corner in _box_corners(self.bump.outer):
            if not self.manifold.domain.contains(corner):
                raise DomainError(
                    "bump outer box must lie strictly inside the state domain")


def _box_corners(box: Box):
    lows = box.lower
    highs = box.upper
    d = len(lows)
    for mask in range(1 << d):
        yield np.array([highs[i] if (mask >> i) & 1 else lows[i]
                        for i in range(d)])


# ---------------------------------------------------------------------------
# drifts and diffusions


def hjm_drift(sigma_cols: Sequence[Curve]) -> Curve:
    """Arbitrage-free forward drift sum_j sigma_j * int_0^. sigma_j."""
    cols = list(sigma_cols)
    if all(isinstance(c, ExpPolyCurve) for c in cols):
        total = ExpPolyCurve.zero()
        for col in cols:
            anti = col.antiderivative()
            total = total + col * (anti - float(anti.value(0.0)))
        return total

    def fn(x):
        arr = np.asarray(x, dtype=float)
        total = np.zeros(np.atleast_1d(arr).shape)
        for col in cols:
            total = total + (np.atleast_1d(np.asarray(col.value(arr), dtype=float))
                             * np.atleast_1d(np.asarray(col.integral(arr), dtype=float)))
        return total.reshape(arr.shape) if arr.ndim else total[0]

    return FunctionCurve(fn, label="no-arbitrage drift")


def h_drift(h: Curve) -> Curve:
    """Discount-coordinate drift (h - 1) * h'(0)."""
    r = float(h.derivative().value(0.0))
    return linear_combination(-r, (r,), (h,))


def h_sigma(sigma_cols: Sequence[Curve], h: Curve) -> list:
    """Discount-coordinate diffusion columns (1 - h) * int_0^. sigma_j."""
    from .transform import DiscountCurve

    base = h.underlying if isinstance(h, DiscountCurve) else h
    offset = h.offset if isinstance(h, DiscountCurve) else 0.0
    out = []
    for col in sigma_cols:
        if isinstance(col, ExpPolyCurve) and isinstance(base, ExpPolyCurve):
            one_minus = ExpPolyCurve.constant(1.0 + offset) - base
            anti = col.antiderivative()
            out.append(one_minus * (anti - float(anti.value(0.0))))
        else:
            one_minus = linear_combination(1.0, (-1.0,), (h,))
            out.append(ProductCurve(one_minus, AntiderivativeCurve(col)))
    return out


def sigma_from_h(f: Curve, h_sigma_cols: Sequence[Curve]) -> list:
    """Invert the discount-coordinate diffusion map:
    sigma_j(x) = d/dx [ exp(int_0^x f) * col_j(x) ]."""
    out = []
    for col in h_sigma_cols:
        dcol = col.derivative()

        def fn(x, _col=col, _dcol=dcol):
            arr = np.asarray(x, dtype=float)
            j = np.asarray(f.integral(arr), dtype=float)
            fv = np.asarray(f.value(arr), dtype=float)
            cv = np.asarray(_col.value(arr), dtype=float)
            dv = np.asarray(_dcol.value(arr), dtype=float)
            return np.exp(j) * (fv * cv + dv)

        out.append(FunctionCurve(fn, label="forward diffusion column"))
    return out


def tangential_sigma(spec: DiffusionSpec, z) -> list:
    """Diffusion columns at state z: the bump-localised pushforward of
    the constant matrix through the chart."""
    m = spec.manifold
    z = m._require_state(z)
    basis = m.tangent_basis(z)
    phi = spec.bump.value(z)
    d = m.dimension
    cols = []
    shared_rational = (all(isinstance(b, RationalCurve) for b in basis)
                       and all(b.denominator is basis[0].denominator for b in basis))
    for j in range(d):
        coeffs = [phi * spec.a[k, j] for k in range(d)]
        if shared_rational:
            num = ExpPolyCurve.zero()
            for coef, b in zip(coeffs, basis):
                if coef != 0.0:
                    num = num + b.numerator * coef
            cols.append(RationalCurve(num, basis[0].denominator,
                                      basis[0].x_max, check=False))
        else:
            cols.append(linear_combination(0.0, coeffs, basis))
    return cols


# ---------------------------------------------------------------------------
# consistent factor drift and the tangency residual


def consistent_z_drift(m: LinearRationalManifold, z) -> np.ndarray:
    """Factor drift that keeps a matrix-generated chart image
    arbitrage-free: b_j(z) = (M^T (1, z))_{j+1} - (M^T (1, z))_1 z_j."""
    if m.matrix is None:
        raise UnsupportedManifoldError(
            "consistent drift needs a matrix-generated manifold")
    if not m.normalized:
        raise UnsupportedManifoldError("consistent drift needs c(0) = u(0) = 0")
    z = m._require_state(z)
    w = np.concatenate(([1.0], z)) @ m.matrix
    return w[1:] - w[0] * z


@dataclass(frozen=True)
class InvarianceResidual:
    residual: float
    coefficients: np.ndarray


def invariance_residual(m: LinearRationalManifold, z, x_max: float | None = None,
                        n_nodes: int = 256) -> InvarianceResidual:
    """Tangency defect of the discount-coordinate drift at state z.

    Forms xi = d/dx h + (h - 1) h'(0) with h = c + <z, u> and projects
    it onto span{u_1, ..., u_d} in L2([0, x_max]); returns the norm of
    the orthogonal remainder and the projection coefficients. The
    residual vanishes exactly on matrix-generated families.
    """
    if not m.normalized:
        raise UnsupportedManifoldError(
            "invariance residual needs a normalized family (c(0) = u(0) = 0)")
    z = m._require_state(z)
    upper = float(x_max) if x_max is not None else m.x_max
    nodes, w = composite_gauss_legendre(0.0, upper, n_nodes)
    cv = np.asarray(m.c.value(nodes), dtype=float)
    uv = np.column_stack([np.asarray(uj.value(nodes), dtype=float) for uj in m.u])
    cp = m.c.derivative()
    ups = [uj.derivative() for uj in m.u]
    dxh = (np.asarray(cp.value(nodes), dtype=float)
           + np.column_stack([np.asarray(up.value(nodes), dtype=float)
                              for up in ups]) @ z)
    h = cv + uv @ z
    r0 = float(cp.value(0.0)) + float(np.array([float(up.value(0.0))
                                                for up in ups]) @ z)
    xi = dxh + (h - 1.0) * r0
    coef, resid = weighted_projection(uv, w, xi)
    return InvarianceResidual(residual=resid, coefficients=coef)


# ---------------------------------------------------------------------------
# JSON


def diffusion_to_json(spec: DiffusionSpec) -> dict:
    return {"a": [list(row) for row in spec.a],
            "bump": {"inner": {"lower": list(spec.bump.inner.lower),
                               "upper": list(spec.bump.inner.upper)},
                     "outer": {"lower": list(spec.bump.outer.lower),
                               "upper": list(spec.bump.outer.upper)}}}


def diffusion_from_json(data: dict, m: LinearRationalManifold) -> DiffusionSpec:
    if "a" not in data or "bump" not in data:
        raise SchemaError("diffusion config needs 'a' and 'bump'")
    bump_data = data["bump"]
    try:
        inner = Box(tuple(bump_data["inner"]["lower"]),
                    tuple(bump_data["inner"]["upper"]))
        outer = Box(tuple(bump_data["outer"]["lower"]),
                    tuple(bump_data["outer"]["upper"]))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad bump boxes: {exc}") from exc
    return DiffusionSpec(manifold=m, a=np.asarray(data["a"], dtype=float),
                         bump=BumpFunction(inner, outer))
