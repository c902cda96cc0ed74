import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from gfsphere.contact_core import Contactomorphism, HamSpec, J_matrix, random_sphere, reeb_flow, unitary_from_angles
from gfsphere.errors import NearIdentityMinusOne
from gfsphere.symplectization import (
    LinearSymplectomorphism,
    cayley_genfun,
    cayley_matrix,
    lift_hamiltonian,
    lift_map,
    tau,
    tau_inv,
)

vec4 = arrays(np.float64, 4, elements=st.floats(-10, 10))


@given(vec4, vec4)
def test_tau_round_trip(z, Z):
    z2, Z2 = tau_inv(*tau(z, Z))
    assert np.allclose(z2, z, atol=1e-12) and np.allclose(Z2, Z, atol=1e-12)


@given(vec4, vec4, vec4, vec4)
def test_tau_is_symplectic(z, Z, w, W):
    # (-omega) (+) omega on the graph side pulls back the canonical form dp ^ dq
    Jm = J_matrix(2)
    om = lambda a, b: (Jm @ a) @ b
    q1, p1 = tau(z, Z)
    q2, p2 = tau(w, W)
    canon = p2 @ q1 - p1 @ q2
    graph = -om(z, w) + om(Z, W)
    assert np.isclose(canon, graph, atol=1e-9 * (1 + np.abs(canon)))


def test_tau_examples(rng):
    z = rng.standard_normal(4)
    q, p = tau(z, z)
    assert np.allclose(q, z) and np.allclose(p, 0.0)
    q, p = tau(np.zeros(4), np.zeros(4))
    assert not q.any() and not p.any()


@pytest.mark.parametrize("t", [0.05, 0.2, 0.45])
def test_cayley_reeb_rotation(t):
    Phi = reeb_flow(-2 * np.pi * t, np.eye(4)).T
    S = cayley_genfun(Phi).matrix
    assert np.allclose(S, -np.tan(np.pi * t) * np.eye(4), atol=1e-12)


def test_cayley_identity_and_minus_one():
    assert np.allclose(cayley_matrix(np.eye(4)), 0.0)
    with pytest.raises(NearIdentityMinusOne):
        cayley_matrix(-np.eye(2))


def test_cayley_rejects_non_symplectic():
    with pytest.raises(ValueError):
        cayley_matrix(np.diag([2.0, 1.0]))


def test_linear_symplectomorphism_validation():
    LinearSymplectomorphism(np.array([[2.0, 0.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        LinearSymplectomorphism(np.diag([2.0, 2.0]))


def test_lift_map_examples(rng):
    z = rng.standard_normal((3, 4))
    assert np.allclose(lift_map(Contactomorphism.identity(2))(z), z)
    t = 0.13
    a = Contactomorphism.identity(2).then_reeb(-2 * np.pi * t)
    want = np.cos(2 * np.pi * t) * z - np.sin(2 * np.pi * t) * (z @ J_matrix(2).T)
    assert np.allclose(lift_map(a)(z), want)
    L = lift_map(Contactomorphism.unitary(unitary_from_angles([0.1, 0.2])))
    assert L.linear is not None
    assert np.allclose(L(np.zeros(4)), 0.0)


def test_lift_of_quadratic_flow_is_symplectic_rotation(rng):
    H = HamSpec.quadratic(np.diag([0.3, 0.7, 0.3, 0.7]))
    L = lift_map(Contactomorphism.flow(H, 1.0))
    D = L.jacobian(random_sphere(rng, 1, 4)[0])
    Jm = J_matrix(2)
    assert np.allclose(D.T @ Jm @ D, Jm, atol=1e-8)
    assert np.allclose(D, unitary_from_angles([0.3, 0.7]), atol=1e-8)


def test_lift_hamiltonian(rng):
    z = rng.standard_normal((4, 4))
    assert np.allclose(lift_hamiltonian(HamSpec.constant(1.0, 2))(z), np.sum(z * z, axis=1))
    S = np.diag([1.0, 2.0, -1.0, 0.5])
    assert np.allclose(lift_hamiltonian(HamSpec.quadratic(S))(z), np.einsum("bi,ij,bj->b", z, S, z))
    assert lift_hamiltonian(HamSpec.expr("x1", 2))(np.zeros(4)) == 0.0
