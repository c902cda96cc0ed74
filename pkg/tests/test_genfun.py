import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from gfsphere.contact_core import (
    Contactomorphism,
    HamSpec,
    J_matrix,
    from_complex,
    random_sphere,
    real_matrix,
    to_complex,
    unitary_from_angles,
)
from gfsphere.errors import DimensionMismatch, NotFiberCritical, NotIdentityGenerator
from gfsphere.genfun import (
    ComposedGenFun,
    QuadForm,
    action_genfun,
    compose,
    coupling_matrix,
    dt_negativity_check,
    fiber_critical_residual,
    fiber_reduce_identity_form,
    generated_map_point,
    genfun_for_isotopy,
    i_F,
    q_form,
    reeb_family,
    reeb_family_dt,
    sample_sigma,
    solve_fiber_critical,
)
from gfsphere.homology import index_nullity
from gfsphere.symplectization import cayley_genfun


def rotate(z, theta):
    return from_complex(np.exp(1j * theta) * to_complex(z))


def random_unitary(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(A)
    return real_matrix(Q * (np.diag(R) / np.abs(np.diag(R))))


def test_zero_form_generates_identity(rng):
    F = QuadForm(np.zeros((4, 4)), 4)
    z = rng.standard_normal((3, 4))
    assert fiber_critical_residual(F, z).shape == (3, 0)
    zeta, p = i_F(F, z)
    assert np.allclose(zeta, z) and not p.any()
    a, b = generated_map_point(F, z)
    assert np.allclose(a, z) and np.allclose(b, z)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_reeb_family_shape_and_inertia(n):
    for t, ind in ((0.0, 4 * n), (1.0, 6 * n)):
        A = reeb_family(n, t)
        assert A.dim == 10 * n and A.fiber_dim == 8 * n
        assert index_nullity(A) == (ind, 2 * n)


def test_reeb_family_half_is_nondegenerate():
    A = reeb_family(1, 0.5)
    assert np.allclose(A.matrix, A.matrix.T, atol=1e-12)
    assert index_nullity(A) == (6, 0)  # the kernel at t=0 turns negative at once


def test_kernel_vectors_are_fiber_critical(rng):
    A = reeb_family(2, 0.0)
    w, V = np.linalg.eigh(A.matrix)
    K = V[:, np.abs(w) < 1e-9]
    x = K @ rng.standard_normal(K.shape[1])
    assert np.max(np.abs(fiber_critical_residual(A, x))) < 1e-12


def test_not_fiber_critical_raises(rng):
    A = reeb_family(1, 0.3)
    with pytest.raises(NotFiberCritical):
        i_F(A, rng.standard_normal(A.dim))


@pytest.mark.parametrize("t", [0.0, 0.25, 0.6, 1.0])
def test_reeb_family_generates_rotation(t, rng):
    A = reeb_family(2, t)
    X = sample_sigma(A, 30, rng)
    z, Z = generated_map_point(A, X)
    assert np.allclose(Z, rotate(z, -2 * np.pi * t), atol=1e-12)


def test_solve_fiber_critical_reproduces_base(rng):
    A = reeb_family(1, 0.4)
    zeta = rng.standard_normal((5, 2))
    X = solve_fiber_critical(A, zeta)
    assert np.allclose(X[:, :2], zeta)
    z, Z = generated_map_point(A, X)
    assert np.allclose(0.5 * (z + Z), zeta)


def test_composition_order(rng):
    U1, U2 = random_unitary(rng, 2), random_unitary(rng, 2)
    G = compose(cayley_genfun(U1), cayley_genfun(U2))
    X = sample_sigma(G, 20, rng)
    z, Z = generated_map_point(G, X)
    assert np.allclose(Z, z @ (U2 @ U1).T, atol=1e-10)
    assert not np.allclose(Z, z @ (U1 @ U2).T, atol=1e-3)


def test_numeric_composition_matches_quadratic(rng):
    U1, U2 = random_unitary(rng, 2), random_unitary(rng, 2)
    F1, F2 = cayley_genfun(U1), cayley_genfun(U2)
    exact = compose(F1, F2)
    lazy = ComposedGenFun(F1, F2)
    X = rng.standard_normal((6, exact.dim))
    v1, g1, h1 = exact.evaluate(X, 2)
    v2, g2, h2 = lazy.evaluate(X, 2)
    assert np.allclose(v1, v2) and np.allclose(g1, g2) and np.allclose(h1, h2)


def test_coupling_matrix_is_symmetric():
    C = coupling_matrix(4, 2, 3)
    assert np.allclose(C, C.T)
    assert C.shape == (4 + 8 + 5, 4 + 8 + 5)


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        compose(QuadForm(np.eye(2)), QuadForm(np.eye(4)))


def test_reeb_family_dt_matches_finite_difference():
    t, h = 0.4, 1e-6
    fd = (reeb_family(1, t + h).matrix - reeb_family(1, t - h).matrix) / (2 * h)
    assert np.allclose(reeb_family_dt(1, t), fd, atol=1e-6)


@pytest.mark.parametrize("t", [0.1, 0.5, 0.9])
def test_dt_negativity(t):
    rep = dt_negativity_check(1, t, samples=100)
    assert rep.max_ratio < 0


def test_action_genfun_zero_hamiltonian(rng):
    F = action_genfun(HamSpec.constant(0.0, 2))
    X = random_sphere(rng, 4, 4)
    assert np.allclose(F.value(X), 0.0, atol=1e-14)


@given(st.integers(0, 10_000))
def test_action_genfun_matches_cayley(seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((4, 4))
    S = 0.5 * (B + B.T)
    S *= 0.1 / np.max(np.abs(np.linalg.eigvalsh(S)))
    F = action_genfun(HamSpec.quadratic(S), samples=8)
    C = cayley_genfun(expm(J_matrix(2) @ S))
    X = random_sphere(rng, 5, 4)
    v, g, h = F.evaluate(X, 2)
    cv, cg, ch = C.evaluate(X, 2)
    assert np.allclose(v, cv, atol=1e-9)
    assert np.allclose(g, cg, atol=1e-8)
    assert np.allclose(h, ch, atol=1e-7)


def test_isotopy_generating_function_matches_flow(rng):
    H = HamSpec.expr("0.6*x1*y1 + 0.4*sin(t)*(x1^2 + y2^2) + 0.3*x2^2", 2)
    F = genfun_for_isotopy(H, 3)
    phi = Contactomorphism.flow(H, 1.0)
    X = solve_fiber_critical(F, random_sphere(rng, 4, 4))
    z, Z = generated_map_point(F, X)
    assert np.allclose(Z, phi.lift(z)[0], atol=1e-8)


def test_isotopy_of_zero_hamiltonian_is_identity(rng):
    F = genfun_for_isotopy(HamSpec.constant(0.0, 1), 2)
    X = solve_fiber_critical(F, rng.standard_normal((3, 2)))
    z, Z = generated_map_point(F, X)
    assert np.allclose(z, Z, atol=1e-12)


def test_fiber_reduce_identity_forms():
    Q = QuadForm(np.diag([0.0, 0.0, -1.0, 2.0]), 2)
    D, Qp = fiber_reduce_identity_form(Q)
    assert np.allclose(D, 0.0) and np.allclose(Qp.matrix, Q.matrix)
    for n in (1, 2):
        for t, ind in ((0.0, 4 * n), (1.0, 6 * n)):
            _, Qp = fiber_reduce_identity_form(reeb_family(n, t))
            assert np.allclose(Qp.matrix[: 2 * n], 0.0)
            assert index_nullity(Qp)[0] == ind


def test_fiber_reduce_rejects_non_identity():
    with pytest.raises(NotIdentityGenerator):
        fiber_reduce_identity_form(reeb_family(1, 0.5))


def test_quadform_json_round_trip():
    Q = q_form(1, 0.2)
    assert np.array_equal(QuadForm.from_json(Q.to_json()).matrix, Q.matrix)
