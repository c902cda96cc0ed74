import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import ortho_group

from gfsphere.errors import ResolutionTooCoarse
from gfsphere.genfun import QuadForm, reeb_family
from gfsphere.homology import (
    BettiVector,
    SublevelType,
    brute_force_betti,
    composed_sublevel_betti,
    direct_sum_join_check,
    index_nullity,
    join_betti,
    join_types,
    quad_sublevel_type,
    sphere_mesh,
    subcomplex_betti,
    write_off,
)


def sphere(d):
    return SublevelType.Sphere(d).betti()


def test_betti_vector_basics():
    b = BettiVector((0, 2, 0, 0))
    assert b.values == (0, 2) and b[1] == 2 and b[7] == 0
    assert b.shift(2).values == (0, 0, 0, 2)
    assert b.differing_entries(BettiVector((1,))) == 2
    with pytest.raises(ValueError):
        BettiVector((-1,))


def test_index_nullity_examples():
    assert index_nullity(-np.eye(3)) == (3, 0)
    assert index_nullity(np.diag([-1.0, 0.0, 1.0])) == (1, 1)
    assert index_nullity(reeb_family(1, 0.0)) == (4, 2)
    assert index_nullity(np.diag([1.0, 1e-12, -1.0])) == (1, 1)


def test_quad_sublevel_examples():
    assert quad_sublevel_type(np.eye(3)).is_empty
    assert quad_sublevel_type(np.diag([-1.0, -1.0, 1.0])) == SublevelType.Sphere(1)
    assert quad_sublevel_type(np.diag([-1.0, 0.0, 1.0])) == SublevelType.Sphere(1)
    assert quad_sublevel_type(np.diag([-1.0, 0.0, 1.0]), level=-1e-6) == SublevelType.Sphere(0)
    assert quad_sublevel_type(QuadForm(-np.eye(2))) == SublevelType.Sphere(1)


@pytest.mark.parametrize(
    "diag", [(-1.0, 0.0, 1.0), (-1.0, -1.0, 1.0), (0.0, 0.0, 1.0), (-1.0, 0.0, 0.0), (-2.0, 0.0, 1.0, 3.0)]
)
@pytest.mark.parametrize("level", [-1e-6, 1e-6])
def test_oracle_agrees_at_matched_level(diag, level):
    S = np.diag(diag)
    assert brute_force_betti(S, level=level) == quad_sublevel_type(S, level).betti()


def test_oracle_constant_functions():
    assert brute_force_betti(lambda X: -np.ones(len(X)), k=3) == sphere(2)
    b = brute_force_betti(lambda X: np.ones(len(X)), k=3)
    assert b.empty and b.values == ()


def test_oracle_needs_dimension():
    with pytest.raises(ValueError):
        brute_force_betti(lambda X: X[:, 0])
    with pytest.raises(ValueError):
        brute_force_betti(np.eye(6))


def test_oracle_two_components():
    # two antipodal caps around +-e1: S^0
    assert brute_force_betti(lambda X: 0.5 - X[:, 0] ** 2, k=3) == sphere(0)


def test_oracle_torus_like_sublevel():
    # on S^3 the set |z1|^2 <= |z2|^2 is a solid torus ~ S^1
    f = lambda X: X[:, 0] ** 2 + X[:, 2] ** 2 - X[:, 1] ** 2 - X[:, 3] ** 2 + 1e-3
    assert brute_force_betti(f, k=4) == sphere(1)


def test_resolution_too_coarse():
    # a small cap that contains no vertex at subdivision 1 but some at 2
    p = np.array([0.3, 0.5, 0.8]) / np.linalg.norm([0.3, 0.5, 0.8])
    f = lambda X: np.linalg.norm(X - p, axis=1) - 0.5
    with pytest.raises(ResolutionTooCoarse):
        brute_force_betti(f, k=3, subdivisions=1)
    assert brute_force_betti(f, k=3, subdivisions=3) == BettiVector(())  # a contractible cap


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_mesh_is_a_sphere(k):
    mesh = sphere_mesh(k, 2)
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0)
    assert subcomplex_betti(mesh, np.ones(len(mesh.vertices), dtype=bool)) == sphere(k - 1)


def test_join_examples():
    assert join_betti(0, SublevelType.Sphere(0)) == sphere(1)
    assert join_betti(3, SublevelType.Empty()) == sphere(3)
    X = SublevelType.Explicit(BettiVector((0, 3)))
    assert join_betti(2, X).values == (0, 0, 0, 0, 3)
    assert join_types(SublevelType.Sphere(1), SublevelType.Sphere(2)) == SublevelType.Sphere(4)
    assert join_types(SublevelType.Empty(), X) == X


def test_direct_sum_examples():
    assert direct_sum_join_check(-np.eye(1), -np.eye(1))
    assert direct_sum_join_check(np.eye(2), np.diag([-1.0, 1.0]))
    assert direct_sum_join_check(np.diag([-1.0, 1.0]), np.diag([-1.0, 1.0]))


def test_composed_sublevel_shift():
    for n in (1, 2):
        for t in (0, 1):
            ind = index_nullity(reeb_family(n, float(t)))[0]
            for d in (0, 2):
                assert composed_sublevel_betti(n, t, SublevelType.Sphere(d)) == sphere(d + ind)
            # S^{ind-1} * Empty = S^{ind-1}
            assert composed_sublevel_betti(n, t, SublevelType.Empty()) == sphere(ind - 1)
    with pytest.raises(ValueError):
        composed_sublevel_betti(1, 2, SublevelType.Empty())


@given(st.integers(0, 2**31), st.integers(2, 4))
def test_random_nondegenerate_forms(seed, k):
    rng = np.random.default_rng(seed)
    ev = rng.uniform(0.3, 2.0, k) * rng.choice([-1.0, 1.0], k)
    Q = ortho_group.rvs(k, random_state=rng)
    S = Q @ np.diag(ev) @ Q.T
    assert brute_force_betti(S, level=-1e-6) == quad_sublevel_type(S).betti()


def test_write_off(tmp_path):
    mesh = sphere_mesh(3, 1)
    keep = mesh.vertices[:, 2] <= 0
    path = tmp_path / "cap.off"
    write_off(path, mesh, keep)
    lines = path.read_text().splitlines()
    assert lines[0] == "OFF"
    nv, nf, _ = map(int, lines[1].split())
    assert nv == len(mesh.vertices) and 0 < nf < len(mesh.simplices[2])
    with pytest.raises(ValueError):
        write_off(path, sphere_mesh(4, 1))
