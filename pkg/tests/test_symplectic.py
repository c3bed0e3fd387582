import numpy as np
import pytest

from maslov import symplectic as sp
from maslov.errors import (
    NotHalfDimensional,
    NotIsotropic,
    NotTransversal,
    RankDeficient,
)


def shared_intersection_pair(space, rng, k):
    """Random Lagrangian pair with intersection of dimension exactly k."""
    n = space.n
    F = sp.random_lagrangian(space, rng)
    q = sp.haar_unitary(n, rng)
    phases = np.ones(n, dtype=complex)
    if n - k:
        phases[k:] = np.exp(1j * rng.uniform(0.5, np.pi - 0.5, size=n - k))
    S = q @ np.diag(phases) @ q.conj().T
    Z = sp.plane_from_graph(space, F.unitary @ S)
    return F, Z


class TestStandardSpace:
    def test_p1_matrix(self):
        space = sp.standard_space(1)
        assert np.array_equal(space.J, np.array([[0, -1], [1, 0]], dtype=complex))
        assert space.omega([1, 0], [0, 1]) == pytest.approx(1.0)

    def test_skew_on_diagonal(self):
        space = sp.standard_space(1)
        u = np.array([1.0, 1j])
        assert space.omega(u, u) == pytest.approx(-2j)

    def test_eigenspace_split(self):
        space = sp.standard_space(2)
        assert space.p_plus.shape == (4, 2)
        assert space.p_minus.shape == (4, 2)
        # orthogonality of the two eigenspaces
        assert np.linalg.norm(space.p_plus.conj().T @ space.p_minus) < 1e-12

    def test_form_identity(self, rng):
        # omega((f1,g1),(f2,g2)) = <f1,g2> - <g1,f2> on the standard space
        space = sp.standard_space(3)
        for _ in range(20):
            u = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            expected = sp.ip(u[:3], v[3:]) - sp.ip(u[3:], v[:3])
            assert space.omega(u, v) == pytest.approx(expected)

    def test_structure_invariants(self):
        for p in (1, 2, 4):
            space = sp.standard_space(p)
            eye = np.eye(2 * p)
            assert np.linalg.norm(space.J @ space.J + eye, 2) <= 1e-12
            assert np.linalg.norm(space.J.conj().T + space.J, 2) <= 1e-12


class TestPlaneConstruction:
    def test_neumann_like_line(self):
        space = sp.standard_space(1)
        plane = sp.plane_from_basis(space, [[1.0], [0.0]])
        assert abs(space.omega(plane.basis[:, 0], plane.basis[:, 0])) < 1e-14

    def test_real_line_is_isotropic(self):
        space = sp.standard_space(1)
        sp.plane_from_basis(space, [[1.0], [1.0]])

    def test_complex_line_rejected(self):
        space = sp.standard_space(1)
        with pytest.raises(NotIsotropic):
            sp.plane_from_basis(space, [[1.0], [1j]])

    def test_wrong_count_rejected(self):
        space = sp.standard_space(2)
        with pytest.raises(NotHalfDimensional):
            sp.plane_from_basis(space, np.eye(4)[:, :1])

    def test_dependent_columns_rejected(self):
        space = sp.standard_space(1)
        with pytest.raises(RankDeficient):
            sp.plane_from_basis(space, np.array([[1.0, 2.0], [0.0, 0.0]]).reshape(2, 2)[:, [0, 0]])


class TestGraphUnitary:
    def test_line_gives_unimodular_scalar(self):
        space = sp.standard_space(1)
        plane = sp.plane_from_basis(space, [[1.0], [0.0]])
        U = plane.unitary
        assert U.shape == (1, 1)
        assert abs(abs(U[0, 0]) - 1.0) < 1e-12

    def test_identity_round_trip(self):
        space = sp.standard_space(2)
        plane = sp.plane_from_graph(space, np.eye(2))
        assert np.linalg.norm(plane.unitary - np.eye(2)) < 1e-10

    def test_random_round_trip(self, rng):
        for p in (1, 2, 4):
            space = sp.standard_space(p)
            for _ in range(25):
                U = sp.haar_unitary(p, rng)
                plane = sp.plane_from_graph(space, U)
                assert np.linalg.norm(plane.unitary - U, 2) < 1e-10
                back = sp.plane_from_graph(space, plane.unitary)
                assert sp.gap_distance(plane, back) < 1e-10

    def test_form_reversal_identity(self, rng):
        # omega(x, y) = -omega(Ux, Uy) on ker(J + iI)
        space = sp.standard_space(2)
        for _ in range(10):
            plane = sp.random_lagrangian(space, rng)
            U = plane.unitary
            for i in range(space.n):
                for j in range(space.n):
                    x = space.p_minus[:, i]
                    y = space.p_minus[:, j]
                    ux = space.p_plus @ U[:, i]
                    uy = space.p_plus @ U[:, j]
                    assert abs(space.omega(x, y) + space.omega(ux, uy)) < 1e-10


class TestIntersection:
    def test_equal_planes(self, rng):
        space = sp.standard_space(2)
        F = sp.random_lagrangian(space, rng)
        assert sp.intersection_dim(F, F, cross_check=True) == 2

    def test_transversal_coordinate_planes(self):
        space = sp.standard_space(1)
        F = sp.plane_from_basis(space, [[1.0], [0.0]])
        Z = sp.plane_from_basis(space, [[0.0], [1.0]])
        assert sp.intersection_dim(F, Z, cross_check=True) == 0

    def test_tilted_line(self):
        # principal angle pi/4 > 0, computed from the SVD of stacked bases
        space = sp.standard_space(1)
        F = sp.plane_from_basis(space, [[1.0], [1.0]])
        Z = sp.plane_from_basis(space, [[1.0], [0.0]])
        angles = sp.principal_angles(F.basis, Z.basis)
        assert angles[0] == pytest.approx(np.pi / 4)
        assert sp.intersection_dim(F, Z, cross_check=True) == 0

    def test_constructed_intersections(self, rng):
        for p in (2, 4):
            space = sp.standard_space(p)
            for k in range(p + 1):
                F, Z = shared_intersection_pair(space, rng, k)
                assert sp.intersection_dim(F, Z, cross_check=True) == k
                assert sp.intersection_basis(F, Z).shape[1] == k


class TestAnnihilator:
    def test_lagrangian_is_self_annihilating(self, rng):
        space = sp.standard_space(2)
        F = sp.random_lagrangian(space, rng)
        ann = sp.annihilator(space, F)
        assert ann.shape[1] == 2
        assert np.max(sp.principal_angles(ann, F.basis)) < 1e-10

    def test_zero_subspace(self):
        space = sp.standard_space(1)
        ann = sp.annihilator(space, np.zeros((2, 0)))
        assert ann.shape == (2, 2)

    def test_isotropic_line_in_c2c2(self):
        space = sp.standard_space(2)
        line = np.zeros((4, 1), dtype=complex)
        line[0, 0] = 1.0
        ann = sp.annihilator(space, line)
        assert ann.shape[1] == 3
        # the annihilator contains the line itself
        overlap = np.linalg.norm(ann.conj().T @ line)
        assert overlap == pytest.approx(1.0)


class TestJAGraph:
    def test_same_plane_gives_zero(self, rng):
        space = sp.standard_space(2)
        F = sp.random_lagrangian(space, rng)
        A = sp.ja_graph_decompose(F, F)
        assert np.linalg.norm(A) < 1e-10

    def test_recovers_scalar_one(self):
        space = sp.standard_space(1)
        F = sp.plane_from_basis(space, [[1.0], [0.0]])
        V = sp.plane_from_basis(space, [[1.0], [1.0]])
        A = sp.ja_graph_decompose(V, F)
        assert A.shape == (1, 1)
        assert A[0, 0] == pytest.approx(1.0)

    def test_jf_itself_not_transversal(self):
        space = sp.standard_space(1)
        F = sp.plane_from_basis(space, [[1.0], [0.0]])
        V = sp.plane_from_basis(space, [[0.0], [1.0]])
        with pytest.raises(NotTransversal):
            sp.ja_graph_decompose(V, F)

    def test_hermitian_and_cayley(self, rng):
        for p in (1, 2, 4):
            space = sp.standard_space(p)
            F = sp.random_lagrangian(space, rng)
            for _ in range(20):
                H = rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p))
                A = 0.5 * (H + H.conj().T)
                cols = F.basis + space.J @ F.basis @ A
                V = sp.plane_from_basis(space, cols)
                A_rec = sp.ja_graph_decompose(V, F)
                assert np.linalg.norm(A_rec - A_rec.conj().T, 2) <= 1e-10 * max(1.0, np.linalg.norm(A_rec, 2))
                assert np.linalg.norm(A_rec - A, 2) < 1e-8 * max(1.0, np.linalg.norm(A, 2))
                # graph map restricted to F equals the Cayley transform of A
                UF = sp.restricted_graph_map(V, F)
                assert np.linalg.norm(UF - sp.cayley(A), 2) < 1e-8


class TestDoubledSpace:
    def test_diagonal_is_lagrangian(self):
        space = sp.standard_space(2)
        doubled = sp.double_space(space)
        diag = sp.diagonal_plane(doubled, space)
        assert diag.basis.shape == (8, 4)

    def test_stacked_pair(self, rng):
        space = sp.standard_space(1)
        doubled = sp.double_space(space)
        F1 = sp.random_lagrangian(space, rng)
        F2 = sp.random_lagrangian(space, rng)
        stacked = sp.stack_planes(doubled, F1, F2)
        resid = np.max(np.abs(doubled.omega_gram(stacked.basis, stacked.basis)))
        assert resid < 1e-12
