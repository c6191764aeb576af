import math

import numpy as np
import pytest

from lrts import (Box, BumpFunction, DiffusionSpec, ExpPolyCurve,
                  from_curves, from_matrix)

# Generating matrix of the two-eigenvalue demo family: eigenvalues
# -0.1 and -0.5, off-diagonal coupling feeding the factor curve.
DEMO_MATRIX = np.array([[-0.1, 0.0], [0.2, -0.5]])
NILPOTENT_MATRIX = np.array([[0.0, 0.0], [1.0, 0.0]])
NEAR_DEFECTIVE_MATRIX = np.array([[-0.3, 0.0], [0.4, -0.3 - 1e-9]])


@pytest.fixture(scope="session")
def nilpotent_manifold():
    return from_matrix(NILPOTENT_MATRIX, Box((0.0,), (10.0,)))


@pytest.fixture(scope="session")
def demo_manifold():
    return from_matrix(DEMO_MATRIX, Box((-1.5,), (3.0,)))


@pytest.fixture(scope="session")
def near_defective_manifold():
    return from_matrix(NEAR_DEFECTIVE_MATRIX, Box((-0.04,), (1.5,)))


@pytest.fixture(scope="session")
def exp_family_manifold():
    """Single-factor family c = 0, u_1 = e^(-x), U = (-inf, 0)."""
    c = ExpPolyCurve.zero()
    u = [ExpPolyCurve.exponential(1.0, -1.0)]
    return from_curves(c, u, Box((-math.inf,), (0.0,)))


@pytest.fixture(scope="session")
def quadratic_manifold():
    """Non-matrix counterexample c = 0, u_1 = x^2 on U = (0, 1)."""
    c = ExpPolyCurve.zero()
    u = [ExpPolyCurve.polynomial([0.0, 0.0, 1.0])]
    return from_curves(c, u, Box((0.0,), (1.0,)), x_max=1.0)


@pytest.fixture(scope="session")
def demo_bump():
    return BumpFunction(Box((-0.5,), (2.0,)), Box((-1.0,), (2.5,)))


@pytest.fixture(scope="session")
def demo_diffusion(demo_manifold, demo_bump):
    return DiffusionSpec(manifold=demo_manifold, a=np.array([[0.05]]),
                         bump=demo_bump)


@pytest.fixture(scope="session")
def nilpotent_diffusion(nilpotent_manifold):
    bump = BumpFunction(Box((0.5,), (5.0,)), Box((0.25,), (8.0,)))
    return DiffusionSpec(manifold=nilpotent_manifold, a=np.array([[0.05]]),
                         bump=bump)
