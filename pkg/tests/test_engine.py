import numpy as np
import pytest
from scipy.linalg import expm

from maslov import engine as eng
from maslov import symplectic as sp
from maslov.errors import (
    AmbiguousCrossing,
    DiscontinuousPath,
    IrregularCrossing,
    NoCrossing,
)

SPACE1 = sp.standard_space(1)
Z_VERT = sp.plane_from_basis(SPACE1, [[0.0], [1.0]])


def rotation_path(a=0.0, b=np.pi, grid=None):
    """F_s = span{(cos s, sin s)}; crosses span{(0,1)} at s = pi/2."""
    def sampler(s):
        return sp.plane_from_basis(SPACE1, [[np.cos(s)], [np.sin(s)]])
    return eng.LagrangianPath(a, b, sampler, grid=grid, label="rotation")


def random_smooth_path(space, rng, a=0.0, b=1.0):
    n = space.n
    h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = 0.5 * (h + h.conj().T)
    U0 = sp.haar_unitary(n, rng)

    def sampler(s):
        return sp.plane_from_graph(space, expm(1j * s * H) @ U0)

    return eng.LagrangianPath(a, b, sampler, label="random-smooth")


class TestMaslovIndex:
    def test_constant_path_is_zero(self, rng):
        space = sp.standard_space(2)
        F = sp.random_lagrangian(space, rng)
        Z = sp.random_lagrangian(space, rng)
        path = eng.LagrangianPath(0.0, 1.0, lambda s: F)
        assert eng.maslov_index(path, Z).index == 0

    def test_rotation_single_crossing(self):
        res = eng.maslov_index(rotation_path(), Z_VERT, check_partition=True)
        assert res.index == 1
        assert len(res.crossings) == 1
        c = res.crossings[0]
        assert c.location == pytest.approx(np.pi / 2, abs=1e-8)
        assert c.intersection_dim == 1
        assert c.signature == 1

    def test_rotation_double_multiplicity(self):
        # both coordinates rotate together: one crossing of multiplicity 2
        space = sp.standard_space(2)
        Z = sp.plane_from_basis(space, np.eye(4)[:, 2:])

        def sampler(s):
            cols = np.zeros((4, 2))
            cols[0, 0] = cols[1, 1] = np.cos(s)
            cols[2, 0] = cols[3, 1] = np.sin(s)
            return sp.plane_from_basis(space, cols)

        path = eng.LagrangianPath(0.0, np.pi, sampler)
        res = eng.maslov_index(path, Z)
        assert res.index == 2
        assert res.crossings[0].intersection_dim == 2

    def test_catenation(self):
        full = eng.maslov_index(rotation_path(), Z_VERT).index
        path = rotation_path()
        left = eng.maslov_index(path.restricted(0.0, 1.0), Z_VERT).index
        right = eng.maslov_index(path.restricted(1.0, np.pi), Z_VERT).index
        assert left + right == full

    def test_reparametrization_invariance(self):
        def sampler(s):
            u = s ** 2 / np.pi            # smooth increasing bijection of [0, pi]
            return sp.plane_from_basis(SPACE1, [[np.cos(u)], [np.sin(u)]])

        path = eng.LagrangianPath(0.0, np.pi, sampler)
        assert eng.maslov_index(path, Z_VERT).index == 1

    def test_reversal_negates_interior_crossings(self):
        assert eng.maslov_index(rotation_path().reversed(), Z_VERT).index == -1

    def test_crossing_at_left_endpoint_contributes_zero(self):
        # phase rises from 1: closed-arc convention gives -n_minus = 0
        res = eng.maslov_index(rotation_path(a=np.pi / 2, b=np.pi), Z_VERT)
        assert res.index == 0
        assert any(c.location == np.pi / 2 for c in res.crossings)

    def test_crossing_at_right_endpoint_counts_fully(self):
        res = eng.maslov_index(rotation_path(a=0.0, b=np.pi / 2), Z_VERT)
        assert res.index == 1

    def test_discontinuous_path_raises(self):
        F0 = sp.plane_from_basis(SPACE1, [[1.0], [0.0]])
        F1 = sp.plane_from_basis(SPACE1, [[0.0], [1.0]])
        path = eng.LagrangianPath(0.0, 1.0, lambda s: F0 if s < 0.5 else F1)
        with pytest.raises(DiscontinuousPath):
            eng.maslov_index(path, Z_VERT)

    def test_random_paths_partition_independent(self, rng):
        space = sp.standard_space(2)
        for _ in range(5):
            path = random_smooth_path(space, rng)
            Z = sp.random_lagrangian(space, rng)
            eng.maslov_index(path, Z, check_partition=True)


class TestCrossingForm:
    def test_rotation_form_is_plus_one(self):
        rep = eng.crossing_form(rotation_path(), Z_VERT, np.pi / 2)
        assert rep.intersection_dim == 1
        assert rep.regular
        assert rep.signature == 1
        assert rep.form_eigenvalues[0] == pytest.approx(1.0, abs=1e-6)

    def test_reversed_rotation_form_is_minus_one(self):
        rep = eng.crossing_form(rotation_path().reversed(), Z_VERT, np.pi / 2)
        assert rep.signature == -1
        assert rep.form_eigenvalues[0] == pytest.approx(-1.0, abs=1e-6)

    def test_no_crossing_raises(self):
        with pytest.raises(NoCrossing):
            eng.crossing_form(rotation_path(), Z_VERT, 0.3)

    def test_constant_path_fake_crossing_degenerate(self):
        path = eng.LagrangianPath(0.0, 1.0, lambda s: Z_VERT)
        rep = eng.crossing_form(path, Z_VERT, 0.5)
        assert not rep.regular
        assert rep.signature == 0

    def test_methods_agree_on_rotation(self):
        res_flow = eng.maslov_index(rotation_path(), Z_VERT)
        res_form = eng.maslov_via_crossings(rotation_path(), Z_VERT)
        assert res_form.method == "crossing_form"
        assert res_form.index == res_flow.index == 1

    def test_endpoint_bookkeeping_via_forms(self):
        # left endpoint, positive form: -n_minus = 0
        assert eng.maslov_via_crossings(
            rotation_path(a=np.pi / 2, b=np.pi), Z_VERT).index == 0
        # right endpoint, positive form: +n_plus = 1
        assert eng.maslov_via_crossings(
            rotation_path(a=0.0, b=np.pi / 2), Z_VERT).index == 1

    def test_irregular_refused(self):
        path = eng.LagrangianPath(0.0, 1.0, lambda s: Z_VERT)
        with pytest.raises(IrregularCrossing):
            eng.maslov_via_crossings(path, Z_VERT, locations=[0.5])


class TestTwoPaths:
    def test_constant_second_path_reduction(self, rng):
        for _ in range(5):
            space = sp.standard_space(1)
            path1 = random_smooth_path(space, rng)
            Z = sp.random_lagrangian(space, rng)
            const = eng.LagrangianPath(path1.a, path1.b, lambda s: Z)
            two = eng.maslov_two_paths(path1, const)
            one = eng.maslov_index(path1, Z)
            assert two.index == one.index

    def test_identical_paths_give_zero(self, rng):
        space = sp.standard_space(2)
        path = random_smooth_path(space, rng)
        again = eng.LagrangianPath(path.a, path.b, path.sampler)
        assert eng.maslov_two_paths(path, again).index == 0

    def test_rotation_against_constant(self):
        const = eng.LagrangianPath(0.0, np.pi, lambda s: Z_VERT)
        assert eng.maslov_two_paths(rotation_path(), const).index == 1


class TestSpectralFlow:
    def test_single_upward_track(self):
        t = np.linspace(0.0, 1.0, 11)
        tracks = (t - 0.5)[:, None]
        assert eng.spectral_flow(tracks, 0.0, require_capture=False) == 1

    def test_all_positive_tracks(self):
        t = np.linspace(0.0, 1.0, 11)
        tracks = np.column_stack([t + 1.0, t + 2.0])
        assert eng.spectral_flow(tracks, 0.0) == 0

    def test_list_of_curves_accepted(self):
        t = np.linspace(0.0, 1.0, 11)
        assert eng.spectral_flow([t - 0.5, t + 3.0], 0.0) == 1

    def test_endpoint_on_level_raises(self):
        t = np.linspace(0.0, 1.0, 11)
        with pytest.raises(AmbiguousCrossing):
            eng.spectral_flow(t[:, None], 0.0, require_capture=False)

    def test_capture_guard(self):
        t = np.linspace(0.0, 1.0, 11)
        with pytest.raises(AmbiguousCrossing):
            eng.spectral_flow((t - 0.5)[:, None], 0.0)

    def test_events_match_flow(self):
        t = np.linspace(0.0, 1.0, 101)
        up = t - 0.25
        wiggle = 0.3 * np.sin(4 * np.pi * t) + 0.1
        tracks = np.column_stack([up, wiggle, t + 2.0])
        flow = eng.spectral_flow(tracks, 0.0)
        events = eng.flow_events(t, tracks, 0.0)
        assert sum(d for _, d, _ in events) == flow
