"""Linear-rational manifolds of forward curves.

A d-dimensional family is generated by curves c, u_1, ..., u_d and an
open state domain U: the forward chart at state z is

    f_z(x) = (c'(x) + <z, u'(x)>) / (1 - c(x) - <z, u(x)>),

with positive denominator for every z in U. Its discount image is the
affine chart h_z = c + <z, u> (after normalisation). The closed,
fully consistent families carry a generating matrix with

    (c, u)(x) = (I - e^(xM)) e_1,

in which case c(0) = 0 and u(0) = 0 and the exponential structure makes
the coordinate curves exponential polynomials whenever the spectrum of
M is real and well separated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curvespace import (Curve, ExpPolyCurve, LinearCombinationCurve,
                         ProductCurve, QuotientCurve, RationalCurve,
                         check_positive_on, curve_from_json, curve_to_json,
                         linear_combination)
from .errors import (DegenerateManifoldError, DomainError, IllPosedFitError,
                     PositivityError, SchemaError)
from .quadrature import composite_gauss_legendre

__all__ = [
    "Box",
    "HalfSpaces",
    "matrix_exp",
    "MatrixExpCurve",
    "LinearRationalManifold",
    "from_matrix",
    "from_curves",
    "FitResult",
    "matrix_short_rate",
    "manifold_to_json",
    "manifold_from_json",
    "domain_to_json",
    "domain_from_json",
]

_NORMALIZED_TOL = 1e-12


# ---------------------------------------------------------------------------
# state domains


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box; infinite bounds are allowed."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise DomainError("box bounds must be nonempty and aligned")
        if any(a >= b for a, b in zip(lo, hi)):
            raise DomainError("box must have lower < upper on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def contains(self, z) -> bool:
        z = np.asarray(z, dtype=float).ravel()
        if z.size != self.dimension:
            return False
        return bool(np.all(z > self.lower) and np.all(z < self.upper))

    def contains_batch(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all(z > lo, axis=-1) & np.all(z < hi, axis=-1)

    def _axis_probes(self, lo: float, hi: float, count: int):
        if math.isfinite(lo) and math.isfinite(hi):
            w = hi - lo
            pts = [lo + 1e-3 * w, lo + 0.25 * w, 0.5 * (lo + hi),
                   hi - 0.25 * w, hi - 1e-3 * w]
        elif math.isfinite(hi):
            pts = [hi - 1e-3, hi - 0.5, hi - 2.0, hi - 10.0, hi - 100.0]
        elif math.isfinite(lo):
            pts = [lo + 1e-3, lo + 0.5, lo + 2.0, lo + 10.0, lo + 100.0]
        else:
            pts = [-100.0, -1.0, 0.0, 1.0, 100.0]
        if count >= len(pts):
            return pts
        idx = np.linspace(0, len(pts) - 1, count).round().astype(int)
        return [pts[i] for i in idx]

    def validation_states(self) -> list:
        """Boundary-adjacent and interior probe states used by finite
        positivity validation."""
        per_axis = 5 if self.dimension <= 2 else 3
        axes = [self._axis_probes(lo, hi, per_axis)
                for lo, hi in zip(self.lower, self.upper)]
        return [np.array(combo) for combo in itertools.product(*axes)]


@dataclass(frozen=True)
class HalfSpaces:
    """Intersection of open half-spaces <a_i, z> < b_i."""

    normals: tuple
    offsets: tuple

    def __post_init__(self):
        normals = tuple(tuple(float(v) for v in row) for row in self.normals)
        offsets = tuple(float(v) for v in self.offsets)
        if not normals or len(normals) != len(offsets):
            raise DomainError("need matching normals and offsets")
        if len({len(row) for row in normals}) != 1:
            raise DomainError("all normals must share one dimension")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dimension(self) -> int:
        return len(self.normals[0])

    def contains(self, z) -> bool:
        z = np.asarray(z, dtype=float).ravel()
        if z.size != self.dimension:
            return False
        a = np.asarray(self.normals)
        return bool(np.all(a @ z < np.asarray(self.offsets)))

    def contains_batch(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        a = np.asarray(self.normals)
        return np.all(z @ a.T < np.asarray(self.offsets), axis=-1)

    def validation_states(self) -> list:
        rng = np.random.default_rng(0)
        found = []
        for _ in range(400):
            cand = rng.uniform(-5.0, 5.0, size=self.dimension)
            if self.contains(cand):
                found.append(cand)
            if len(found) >= 25:
                break
        if not found:
            raise DomainError("could not sample the half-space domain near the origin")
        return found


# ---------------------------------------------------------------------------
# matrix exponential (scaling and squaring, degree-13 Pade)

_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def matrix_exp(m: np.ndarray, x: float = 1.0) -> np.ndarray:
    """e^(x m) by scaling and squaring with the degree-13 Pade
    approximant."""
    a = float(x) * np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("matrix_exp needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix_exp needs finite entries")
    n = a.shape[0]
    norm1 = float(np.max(np.sum(np.abs(a), axis=0))) if n else 0.0
    if norm1 == 0.0:
        return np.eye(n)
    squarings = 0
    if norm1 > _THETA13:
        squarings = int(math.ceil(math.log2(norm1 / _THETA13)))
        a = a / (2.0 ** squarings)
    b = _PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


@dataclass(frozen=True)
class MatrixExpCurve(Curve):
    """offset + w^T e^(xM) e_1 for a fixed matrix M and row vector w.

    Used when the coordinate curves of a matrix-generated manifold do
    not admit a stable exponential-polynomial form; derivative and
    shift stay inside the class and the integral has a closed form via
    the augmented-matrix trick.
    """

    matrix: np.ndarray = field(compare=False)
    weights: np.ndarray = field(compare=False)
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))
        object.__setattr__(self, "weights",
                           np.asarray(self.weights, dtype=float).ravel())

    def _col(self, xv: float) -> np.ndarray:
        return matrix_exp(self.matrix, xv)[:, 0]

    def value(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0):
            raise DomainError("curves are defined on x >= 0")
        flat = np.atleast_1d(arr).ravel()
        out = np.empty(flat.shape)
        for i, xv in enumerate(flat):
            out[i] = self.offset + float(self.weights @ self._col(xv))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def derivative(self) -> "MatrixExpCurve":
        return MatrixExpCurve(self.matrix, self.weights @ self.matrix, 0.0)

    def shift(self, t: float) -> "MatrixExpCurve":
        if t < 0:
            raise DomainError("shift requires t >= 0")
        if t == 0:
            return self
        return MatrixExpCurve(self.matrix,
                              self.weights @ matrix_exp(self.matrix, t),
                              self.offset)

    def integral(self, x):
        n = self.matrix.shape[0]
        aug = np.zeros((n + 1, n + 1))
        aug[:n, :n] = self.matrix
        aug[:n, n] = np.eye(n)[:, 0]
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0):
            raise DomainError("integral bounds must be >= 0")
        flat = np.atleast_1d(arr).ravel()
        out = np.empty(flat.shape)
        for i, xv in enumerate(flat):
            block = matrix_exp(aug, xv)[:n, n]
            out[i] = self.offset * xv + float(self.weights @ block)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


# ---------------------------------------------------------------------------
# manifold


@dataclass(frozen=True)
class FitResult:
    state: np.ndarray
    residual: float
    in_domain: bool


@dataclass(frozen=True)
class LinearRationalManifold:
    """Curve data (c, u_1..u_d), state domain and optional generating
    matrix. Immutable; construct through from_matrix or from_curves."""

    c: Curve
    u: tuple
    domain: Box | HalfSpaces
    x_max: float = 50.0
    matrix: np.ndarray | None = field(default=None, compare=False)
    normalized: bool = False

    @property
    def dimension(self) -> int:
        return len(self.u)

    def _require_state(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float).ravel()
        if z.size != self.dimension:
            raise DomainError(
                f"state has dimension {z.size}, expected {self.dimension}")
        if not self.domain.contains(z):
            raise DomainError(f"state {z.tolist()} lies outside the domain")
        return z

    # -- choice of coordinate representation -------------------------------

    def _exppoly_form(self) -> bool:
        return isinstance(self.c, ExpPolyCurve) and all(
            isinstance(uj, ExpPolyCurve) for uj in self.u)

    def numerator_curve(self, z: np.ndarray) -> Curve:
        cp = self.c.derivative()
        ups = [uj.derivative() for uj in self.u]
        return linear_combination(0.0, (1.0, *z), (cp, *ups))

    def denominator_curve(self, z: np.ndarray) -> Curve:
        return linear_combination(1.0, (-1.0, *(-z)), (self.c, *self.u))

    # -- charts -------------------------------------------------------------

    def chart(self, z) -> Curve:
        """Forward curve at state z."""
        z = self._require_state(z)
        num = self.numerator_curve(z)
        den = self.denominator_curve(z)
        if isinstance(num, ExpPolyCurve) and isinstance(den, ExpPolyCurve):
            return RationalCurve(num, den, self.x_max)
        check_positive_on(den, self.x_max, state=z)
        return QuotientCurve(num, den)

    def chart_h(self, z):
        """Discount curve at state z.

        For a normalized family this is c + <z, u>; in general the
        affine combination is recentred so that h(0) = 0.
        """
        from .transform import DiscountCurve  # local import to avoid a cycle

        z = self._require_state(z)
        c0 = float(self.c.value(0.0))
        u0 = np.array([float(uj.value(0.0)) for uj in self.u])
        den0 = 1.0 - c0 - float(z @ u0)
        if den0 <= 0.0:
            raise PositivityError("denominator at x = 0 is not positive",
                                  witness=0.0, state=z)
        offset = -(c0 + float(z @ u0)) / den0
        coeffs = tuple(np.concatenate(([1.0], z)) / den0)
        base = linear_combination(offset, coeffs, (self.c, *self.u))
        return DiscountCurve(base, x_max=self.x_max, check=True)

    def tangent_basis(self, z) -> list:
        """State derivatives of the forward chart, one curve per factor."""
        z = self._require_state(z)
        num = self.numerator_curve(z)
        den = self.denominator_curve(z)
        if isinstance(num, ExpPolyCurve) and isinstance(den, ExpPolyCurve):
            den2 = den * den
            out = []
            for uj in self.u:
                top = uj.derivative() * den + num * uj
                out.append(RationalCurve(top, den2, self.x_max, check=False))
            return out
        den2 = ProductCurve(den, den)
        out = []
        for uj in self.u:
            top = LinearCombinationCurve(
                0.0, (1.0, 1.0),
                (ProductCurve(uj.derivative(), den), ProductCurve(num, uj)))
            out.append(QuotientCurve(top, den2))
        return out

    # -- calibration ---------------------------------------------------------

    def fit_state(self, observations: Sequence) -> FitResult:
        """Least-squares state from (maturity, price) observations.

        Prices satisfy P_i = D(x_i)/D(0) with D = 1 - c - <z, u>, which
        is linear in z:

            <z, u(x_i) - P_i u(0)> = 1 - c(x_i) - P_i (1 - c(0)).

        For a normalized family this is exactly the regression of
        1 - P_i - c(x_i) on the u_j(x_i).
        """
        obs = [(float(x), float(p)) for x, p in observations]
        d = self.dimension
        if len(obs) < d:
            raise IllPosedFitError(
                f"need at least {d} observations, got {len(obs)}")
        xs = np.array([x for x, _ in obs])
        if np.any(xs < 0):
            raise DomainError("maturities must be >= 0")
        ps = np.array([p for _, p in obs])
        c0 = float(self.c.value(0.0))
        cx = np.asarray(self.c.value(xs), dtype=float)
        u0 = np.array([float(uj.value(0.0)) for uj in self.u])
        ux = np.column_stack([np.asarray(uj.value(xs), dtype=float)
                              for uj in self.u])
        design = ux - ps[:, None] * u0[None, :]
        rhs = (1.0 - cx) - ps * (1.0 - c0)
        q, r = np.linalg.qr(design)
        diag = np.abs(np.diag(r))
        if diag.size == 0 or diag.min() <= 1e-12 * max(diag.max(), 1e-300):
            raise IllPosedFitError("design matrix is rank deficient")
        z = np.linalg.solve(r, q.T @ rhs)
        resid = design @ z - rhs
        rms = float(np.sqrt(np.mean(resid ** 2)))
        return FitResult(state=z, residual=rms,
                         in_domain=self.domain.contains(z))


def matrix_short_rate(matrix: np.ndarray, z) -> float:
    """Short rate <-M e_1, (1, z)> of a matrix-generated state."""
    m = np.asarray(matrix, dtype=float)
    zz = np.asarray(z, dtype=float).ravel()
    vec = np.concatenate(([1.0], zz))
    return float(-(vec @ m[:, 0]))


# ---------------------------------------------------------------------------
# construction


def _nilpotent_component_curves(m: np.ndarray) -> list:
    n = m.shape[0]
    powers = [np.eye(n)]
    for _ in range(n - 1):
        powers.append(powers[-1] @ m)
    curves = []
    for i in range(n):
        coeffs = [powers[k][i, 0] / math.factorial(k) for k in range(n)]
        # component of (I - e^(xM)) e_1
        coeffs = [-c for c in coeffs]
        if i == 0:
            coeffs[0] += 1.0
        curves.append(ExpPolyCurve(((tuple(coeffs), 0.0),)))
    return curves


def _eigen_component_curves(m: np.ndarray):
    n = m.shape[0]
    lam, vecs = np.linalg.eig(m)
    scale = max(1.0, float(np.max(np.abs(lam))))
    if np.max(np.abs(lam.imag)) > 1e-9 * scale:
        return None
    lam = lam.real
    gaps = np.abs(lam[:, None] - lam[None, :]) + np.eye(n)
    if float(gaps.min()) <= 1e-8:
        return None
    vecs = vecs.real
    try:
        kappa = np.linalg.solve(vecs, np.eye(n)[:, 0])
    except np.linalg.LinAlgError:
        return None
    curves = []
    for i in range(n):
        terms = [((1.0 if i == 0 else 0.0,), 0.0)]
        for k in range(n):
            terms.append(((-vecs[i, k] * kappa[k],), float(lam[k])))
        curves.append(ExpPolyCurve(tuple(terms)))
    return curves


def _matrix_component_curves(m: np.ndarray) -> list:
    n = m.shape[0]
    norm = float(np.max(np.abs(m)))
    power = np.linalg.matrix_power(m, n)
    candidates = None
    if float(np.max(np.abs(power))) <= 1e-14 * max(1.0, norm) ** n:
        candidates = _nilpotent_component_curves(m)
    else:
        candidates = _eigen_component_curves(m)
    if candidates is not None and _components_match_exponential(candidates, m):
        return candidates
    return [MatrixExpCurve(m, -np.eye(n)[i], 1.0 if i == 0 else 0.0)
            for i in range(n)]


def _components_match_exponential(curves, m: np.ndarray,
                                  tol: float = 1e-10) -> bool:
    xs = np.linspace(0.0, 20.0, 81)
    vals = np.column_stack([np.asarray(c.value(xs), dtype=float) for c in curves])
    for i, xv in enumerate(xs):
        ref = (np.eye(m.shape[0]) - matrix_exp(m, xv))[:, 0]
        if np.max(np.abs(vals[i] - ref)) > tol:
            return False
    return True


def _check_independent(u: Sequence[Curve], x_max: float) -> None:
    nodes, w = composite_gauss_legendre(0.0, x_max, 256)
    basis = np.column_stack([np.asarray(uj.value(nodes), dtype=float)
                             for uj in u])
    gram = basis.T @ (w[:, None] * basis)
    evals = np.linalg.eigvalsh(gram)
    top = float(evals[-1])
    if top <= 0.0 or float(evals[0]) <= 1e-10 * top:
        raise DegenerateManifoldError(
            "coordinate curves are linearly dependent "
            f"(Gram eigenvalue ratio {float(evals[0]):.3e} / {top:.3e})")


def _check_positivity_on_domain(m: LinearRationalManifold) -> None:
    for z in m.domain.validation_states():
        den = m.denominator_curve(z)
        if isinstance(den, ExpPolyCurve):
            # For a pure exponential-plus-constant structure the sign at
            # large x is decided by the leading term, supplementing the
            # grid check beyond x_max. Polynomial factors make the
            # declared interval the whole contract.
            pure_exponential = all(len(cs) == 1 for cs, _ in den.terms)
            lead = den.leading_term()
            if pure_exponential and lead is not None and lead[2] < 0.0:
                raise PositivityError(
                    "denominator becomes negative for large maturities",
                    witness=math.inf, state=z)
        check_positive_on(den, m.x_max, state=z)


def _is_normalized(c: Curve, u: Sequence[Curve]) -> bool:
    if abs(float(c.value(0.0))) > _NORMALIZED_TOL:
        return False
    return all(abs(float(uj.value(0.0))) <= _NORMALIZED_TOL for uj in u)


def from_matrix(matrix, domain: Box | HalfSpaces,
                x_max: float = 50.0) -> LinearRationalManifold:
    """Manifold generated by (c, u)(x) = (I - e^(xM)) e_1.

    The coordinate curves are realised as exponential polynomials from
    the spectrum of M when that reconstruction reproduces the matrix
    exponential to 1e-10 on a test grid, and as matrix-exponential
    evaluators otherwise.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise DomainError("generating matrix must be square of size d+1 >= 2")
    if not np.all(np.isfinite(m)):
        raise DomainError("generating matrix must have finite entries")
    d = m.shape[0] - 1
    if domain.dimension != d:
        raise DomainError(f"domain dimension {domain.dimension} != {d}")
    curves = _matrix_component_curves(m)
    manifold = LinearRationalManifold(
        c=curves[0], u=tuple(curves[1:]), domain=domain, x_max=float(x_max),
        matrix=m, normalized=True)
    _check_independent(manifold.u, manifold.x_max)
    _check_positivity_on_domain(manifold)
    return manifold


def from_curves(c: Curve, u: Sequence[Curve], domain: Box | HalfSpaces,
                x_max: float = 50.0) -> LinearRationalManifold:
    """Manifold from explicit coordinate curves (no generating matrix)."""
    u = tuple(u)
    if not u:
        raise DomainError("need at least one coordinate curve")
    if domain.dimension != len(u):
        raise DomainError(
            f"domain dimension {domain.dimension} != {len(u)} curves")
    manifold = LinearRationalManifold(
        c=c, u=u, domain=domain, x_max=float(x_max), matrix=None,
        normalized=_is_normalized(c, u))
    _check_independent(manifold.u, manifold.x_max)
    _check_positivity_on_domain(manifold)
    return manifold


# ---------------------------------------------------------------------------
# JSON


def domain_to_json(domain) -> dict:
    if isinstance(domain, Box):
        enc = lambda v: None if math.isinf(v) else v
        return {"type": "box", "lower": [enc(v) for v in domain.lower],
                "upper": [enc(v) for v in domain.upper]}
    if isinstance(domain, HalfSpaces):
        return {"type": "halfspaces",
                "normals": [list(row) for row in domain.normals],
                "offsets": list(domain.offsets)}
    raise TypeError(f"cannot serialise domain {type(domain)!r}")


def _bound(v, sign: float) -> float:
    if v is None:
        return sign * math.inf
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
        raise SchemaError(f"bad bound {v!r}")
    return float(v)


def domain_from_json(data: dict):
    kind = data.get("type", "box")
    if kind == "box":
        lower = [_bound(v, -1.0) for v in data["lower"]]
        upper = [_bound(v, +1.0) for v in data["upper"]]
        return Box(tuple(lower), tuple(upper))
    if kind == "halfspaces":
        return HalfSpaces(tuple(tuple(row) for row in data["normals"]),
                          tuple(data["offsets"]))
    raise SchemaError(f"unknown domain type {kind!r}")


def manifold_to_json(m: LinearRationalManifold) -> dict:
    out: dict = {"domain": domain_to_json(m.domain), "x_max": m.x_max}
    if m.matrix is not None:
        out["matrix"] = [list(row) for row in m.matrix]
    else:
        out["c"] = curve_to_json(m.c)
        out["u"] = [curve_to_json(uj) for uj in m.u]
    return out


def manifold_from_json(data: dict) -> LinearRationalManifold:
    if "domain" not in data:
        raise SchemaError("manifold config needs a 'domain' entry")
    domain = domain_from_json(data["domain"])
    x_max = float(data.get("x_max", 50.0))
    if "matrix" in data:
        return from_matrix(data["matrix"], domain, x_max=x_max)
    if "c" not in data or "u" not in data:
        raise SchemaError("manifold config needs 'matrix' or 'c' and 'u'")
    c = curve_from_json(data["c"])
    u = [curve_from_json(entry) for entry in data["u"]]
    return from_curves(c, u, domain, x_max=x_max)
