import numpy as np
import pytest

from wavecontrol import coupling, spectral_bvp
from wavecontrol.pipeline import ControlTask


def rotated_operator(lams=(0.3, 0.55), theta=0.6, b_eig=(1.0, 0.8)):
    """Symmetric 2x2 A with eigenvalues ``lams`` and b with eigen-components ``b_eig``."""
    Q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    A = Q @ np.diag(lams) @ Q.T
    A = 0.5 * (A + A.T)
    return coupling.CouplingOperator(A, Q @ np.asarray(b_eig))


@pytest.fixture
def admissible_bc():
    # eta = 0.85; beta2 +- alpha2 and alpha1 +- beta1 all nonzero
    return spectral_bvp.build_boundary(alpha1=1.0, alpha2=0.3, beta1=0.5, beta2=1.0)


@pytest.fixture
def task2(admissible_bc):
    a = np.pi
    return ControlTask(a, 2 * 2 * a + 1, admissible_bc, rotated_operator(), K=8, family="sine", guard=8)
