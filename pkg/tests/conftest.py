import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def finite_floats(lo, hi):
    return st.floats(min_value=lo, max_value=hi, allow_nan=False, allow_infinity=False)


@st.composite
def qubit_states(draw, min_purity=0.55, max_purity=1.0):
    """Qubit density matrix with purity bounded away from I/2."""
    from qsl_lab import qubit_state_from_angles

    pur = draw(finite_floats(min_purity, max_purity))
    phi = draw(finite_floats(0.0, math.pi))
    varphi = draw(finite_floats(0.0, 2.0 * math.pi))
    return qubit_state_from_angles(pur, phi, varphi)


@st.composite
def hermitian_2x2(draw, scale=2.0):
    a0 = draw(finite_floats(-scale, scale))
    ax = draw(finite_floats(-scale, scale))
    ay = draw(finite_floats(-scale, scale))
    az = draw(finite_floats(-scale, scale))
    return np.array(
        [[a0 + az, ax - 1j * ay], [ax + 1j * ay, a0 - az]], dtype=complex
    )


@st.composite
def su2_matrices(draw):
    """Special unitary 2x2 from a unit quaternion."""
    comps = [draw(finite_floats(-1.0, 1.0)) for _ in range(4)]
    norm = math.sqrt(sum(c * c for c in comps))
    if norm < 1e-3:
        comps = [1.0, 0.0, 0.0, 0.0]
        norm = 1.0
    x0, x1, x2, x3 = (c / norm for c in comps)
    return np.array(
        [
            [x0 - 1j * x3, -x2 - 1j * x1],
            [x2 - 1j * x1, x0 + 1j * x3],
        ],
        dtype=complex,
    )


def random_qubit_dm(rng, min_purity=0.55):
    from qsl_lab import qubit_state_from_angles, random_bloch_direction

    pur = rng.uniform(min_purity, 1.0)
    phi, varphi = random_bloch_direction(rng)
    return qubit_state_from_angles(pur, phi, varphi)


def random_hermitian(rng, dim=2):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2.0


def random_density(rng, dim):
    """Random mixed state of any dimension via a Haar-ish unitary."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, _ = np.linalg.qr(g)
    probs = rng.dirichlet(np.ones(dim))
    return (q * probs) @ q.conj().T


def haar_su2(rng):
    comps = rng.normal(size=4)
    comps = comps / np.linalg.norm(comps)
    x0, x1, x2, x3 = comps
    return np.array(
        [
            [x0 - 1j * x3, -x2 - 1j * x1],
            [x2 - 1j * x1, x0 + 1j * x3],
        ],
        dtype=complex,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
