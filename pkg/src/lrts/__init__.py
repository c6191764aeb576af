"""Linear-rational term structures.

Curve spaces on the half-line, the forward/discount transform, manifold
construction from generating matrices, no-arbitrage drifts, factor-path
simulation and a verification suite for the consistency conditions.
"""

from .curvespace import (Curve, ExpPolyCurve, Extrapolation, GridCurve,
                         RationalCurve, WeightSpec, curve_from_json,
                         curve_to_json, derivative, dumps_curve, evaluate,
                         hw_norm, integrate, linear_combination, loads_curve,
                         shift)
from .errors import (DegenerateManifoldError, DomainError, IllPosedFitError,
                     LrtsError, PositivityError, QuadratureError, SchemaError,
                     UnsupportedManifoldError)
from .hjm import (BumpFunction, DiffusionSpec, InvarianceResidual, bump_eval,
                  consistent_z_drift, h_drift, h_sigma, hjm_drift,
                  invariance_residual, sigma_from_h, tangential_sigma)
from .manifold import (Box, FitResult, HalfSpaces, LinearRationalManifold,
                       MatrixExpCurve, from_curves, from_matrix,
                       manifold_from_json, manifold_to_json, matrix_exp,
                       matrix_short_rate)
from .simulation import (PathSet, SimulationConfig, reconstruct_forward,
                         simulate, write_paths_csv)
from .transform import DiscountCurve, bond_price, psi, psi_inverse, short_rate
from .verify import (CheckResult, MartingaleResult, PowerIndependenceResult,
                     SpanConditionResult, VerificationReport,
                     check_invariance_conditions, martingale_test,
                     power_independence_test, segment_degeneracy_test,
                     span_condition_test)

__version__ = "0.1.0"

__all__ = [
    "Curve", "ExpPolyCurve", "RationalCurve", "GridCurve", "Extrapolation",
    "WeightSpec", "evaluate", "derivative", "integrate", "shift", "hw_norm",
    "linear_combination", "curve_to_json", "curve_from_json", "dumps_curve",
    "loads_curve",
    "DiscountCurve", "psi", "psi_inverse", "bond_price", "short_rate",
    "Box", "HalfSpaces", "LinearRationalManifold", "MatrixExpCurve",
    "from_matrix", "from_curves", "FitResult", "matrix_exp",
    "matrix_short_rate", "manifold_to_json", "manifold_from_json",
    "BumpFunction", "DiffusionSpec", "bump_eval", "hjm_drift", "h_drift",
    "h_sigma", "sigma_from_h", "tangential_sigma", "consistent_z_drift",
    "invariance_residual", "InvarianceResidual",
    "SimulationConfig", "PathSet", "simulate", "reconstruct_forward",
    "write_paths_csv",
    "CheckResult", "VerificationReport", "check_invariance_conditions",
    "MartingaleResult", "martingale_test", "PowerIndependenceResult",
    "power_independence_test", "segment_degeneracy_test",
    "SpanConditionResult", "span_condition_test",
    "LrtsError", "DomainError", "PositivityError", "DegenerateManifoldError",
    "UnsupportedManifoldError", "IllPosedFitError", "QuadratureError",
    "SchemaError",
]
