import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gfsphere.contact_core import (
    Contactomorphism,
    HamSpec,
    J_matrix,
    contact_flow,
    contact_form,
    from_complex,
    is_discriminant,
    random_sphere,
    reeb_flow,
    reeb_vector,
    rp_lift_check,
    tangent_basis,
    to_complex,
    translated_point_check,
    unitary_from_angles,
)
from gfsphere.errors import NotEquivariant

E = np.eye(4)
EX1, EX2, EY1, EY2 = E


def test_contact_form_examples(rng):
    assert contact_form(EX1, EY1) == 1.0
    assert contact_form(EX1, EX1) == 0.0
    p = random_sphere(rng, 1, 4)[0]
    assert np.isclose(contact_form(p, reeb_vector(p)), 1.0, atol=1e-15)


def test_reeb_vector_examples(rng):
    assert np.allclose(reeb_vector(EX1), EY1)
    assert np.allclose(reeb_vector(EY1), -EX1)
    p = random_sphere(rng, 1, 6)[0]
    assert abs(reeb_vector(p) @ p) < 1e-15


def test_reeb_flow_examples(rng):
    p = random_sphere(rng, 1, 4)[0]
    assert np.allclose(reeb_flow(2 * np.pi, p), p, atol=1e-12)
    assert np.allclose(reeb_flow(0.0, p), p)
    assert np.allclose(reeb_flow(np.pi / 2, EX1), EY1, atol=1e-15)


def test_reeb_flow_is_complex_rotation(rng):
    p = random_sphere(rng, 3, 4)
    assert np.allclose(to_complex(reeb_flow(0.7, p)), np.exp(0.7j) * to_complex(p))


def test_constant_hamiltonian_gives_reeb_flow(rng):
    p = random_sphere(rng, 5, 4)
    q, g = contact_flow(HamSpec.constant(1.0, 2), 1.3, p)
    assert np.allclose(q, reeb_flow(1.3, p), atol=1e-9)
    assert np.max(np.abs(g)) < 1e-9


def test_quadratic_flow_closed_form(rng):
    # H = 0.3|z1|^2 + 0.7|z2|^2 rotates z_j by a_j t (the constant Hamiltonian
    # 1 = |z|^2 on the sphere is the Reeb flow e^{it})
    H = HamSpec.quadratic(np.diag([0.3, 0.7, 0.3, 0.7]))
    p = random_sphere(rng, 4, 4)
    q, g = contact_flow(H, 1.0, p)
    want = from_complex(np.exp(1j * np.array([0.3, 0.7])) * to_complex(p))
    assert np.allclose(q, want, atol=1e-9)
    assert np.max(np.abs(g)) < 1e-9


def test_expression_flow_matches_quadratic(rng):
    He = HamSpec.expr("0.3*(x1^2+y1^2)+0.7*(x2^2+y2^2)", 2)
    Hq = HamSpec.quadratic(np.diag([0.3, 0.7, 0.3, 0.7]))
    p = random_sphere(rng, 3, 4)
    assert np.allclose(contact_flow(He, 1.0, p)[0], contact_flow(Hq, 1.0, p)[0], atol=1e-9)


def test_non_strict_flow_is_conformal(rng):
    # phi^* alpha = e^g alpha: compare alpha(dphi v) with e^g alpha(v) by finite differences
    H = HamSpec.expr("x1*y1 + 0.5*x2^2*y1", 2)
    phi = Contactomorphism.flow(H, 0.8)
    p = random_sphere(rng, 1, 4)[0]
    q, g = phi(p)
    assert abs(g) > 1e-3
    for v in tangent_basis(p):
        h = 1e-5
        a = phi((p + h * v) / np.linalg.norm(p + h * v))[0]
        b = phi((p - h * v) / np.linalg.norm(p - h * v))[0]
        dv = (a - b) / (2 * h)
        assert np.isclose(contact_form(q, dv), np.exp(g) * contact_form(p, v), atol=1e-7)


def test_lift_is_symplectic(rng):
    H = HamSpec.expr("x1*y1 + 0.2*sin(t)*y2^2", 2)
    phi = Contactomorphism.flow(H, 1.0)
    _, D, _ = phi.lift(random_sphere(rng, 3, 4) * 1.7, jacobian=True)
    Jm = J_matrix(2)
    for M in D:
        assert np.allclose(M.T @ Jm @ M, Jm, atol=1e-8)


def test_lift_is_homogeneous(rng):
    phi = Contactomorphism.flow(HamSpec.expr("x1*y2 - y1^2", 2), 0.6)
    z = random_sphere(rng, 2, 4)
    assert np.allclose(phi.lift(2.5 * z)[0], 2.5 * phi.lift(z)[0], atol=1e-9)


def test_json_round_trip(tmp_path):
    phi = Contactomorphism.flow(HamSpec.expr("x1*y1", 1), 0.5)
    again = Contactomorphism.from_json(json.loads(json.dumps(phi.to_json())))
    assert again.kind == "flow" and again.time == 0.5
    U = Contactomorphism.unitary(unitary_from_angles([0.1, 0.2]))
    assert np.array_equal(Contactomorphism.from_json(U.to_json()).matrix, U.matrix)
    H = HamSpec.quadratic(np.diag([1.0, 2.0]))
    assert np.array_equal(HamSpec.from_json(H.to_json()).matrix, H.matrix)


def test_invalid_unitary_rejected():
    with pytest.raises(ValueError):
        Contactomorphism.unitary(np.diag([1.0, -1.0]))


def test_discriminant_examples():
    assert is_discriminant(Contactomorphism.identity(2), EX1) == "degenerate"
    rot = Contactomorphism.identity(2).then_reeb(np.pi / 3)
    assert is_discriminant(rot, EX1) == "no"
    phi = Contactomorphism.unitary(unitary_from_angles([0.0, 1.0]))
    assert is_discriminant(phi, EX1) == "degenerate"


def test_nondegenerate_discriminant_point():
    # shear x1 += c y1 in the z1-plane and rotate z2: e_x1 is fixed with g = 0,
    # the Reeb direction has dg != 0 and the z2-plane has no fixed vectors
    H = HamSpec.expr("-0.5*y1^2 + 0.4*(x2^2 + y2^2)", 2)
    phi = Contactomorphism.flow(H, 1.0)
    v = is_discriminant(phi, EX1)
    assert v == "nondegenerate"
    assert v.sigma_min > 1e-3


def test_translated_point_examples():
    assert translated_point_check(Contactomorphism.identity(2), EX1) == [0.0]
    s = 1.1
    rot = Contactomorphism.identity(2).then_reeb(s)
    assert np.allclose(translated_point_check(rot, EX2), [(2 * np.pi - s) % (2 * np.pi)])
    phi = Contactomorphism.unitary(unitary_from_angles([0.5, 1.2]))
    assert np.allclose(translated_point_check(phi, EX1), [2 * np.pi - 0.5])


def test_rp_check():
    assert rp_lift_check(Contactomorphism.unitary(unitary_from_angles([0.3, 0.9]))).equivariant
    even = Contactomorphism.flow(HamSpec.expr("x1*y2 + x2^2", 2), 0.7)
    assert rp_lift_check(even, samples=20).equivariant
    with pytest.raises(NotEquivariant):
        rp_lift_check(lambda x: x + 1e-3, translated=[(EX1, 0.0)])


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_reeb_flow_group_law(s, t):
    p = np.array([0.6, 0.0, 0.0, 0.8])
    assert np.allclose(reeb_flow(s, reeb_flow(t, p)), reeb_flow(s + t, p), atol=1e-12)
