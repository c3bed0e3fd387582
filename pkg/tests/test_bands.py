import numpy as np
import pytest

from maslov import bands
from maslov.errors import NotHermitian, TruncationNotConverged

PI2 = np.pi ** 2


class TestExactSpectrum:
    def test_line_theta_zero(self):
        cell = bands.cell_1d()
        vals = bands.exact_laplacian_spectrum(cell, 5)
        assert np.allclose(vals, [0.0, 4 * PI2, 4 * PI2, 16 * PI2, 16 * PI2])

    def test_line_theta_quarter(self):
        cell = bands.cell_1d(theta=0.25)
        vals = bands.exact_laplacian_spectrum(cell, 3)
        expect = [(np.pi / 2) ** 2, (3 * np.pi / 2) ** 2, (5 * np.pi / 2) ** 2]
        assert np.allclose(vals, expect)

    def test_square_cell(self):
        cell = bands.square_cell()
        vals = bands.exact_laplacian_spectrum(cell, 5)
        assert vals[0] == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(vals[1:], 4 * PI2 * np.ones(4))

    def test_matrix_multiplicity(self):
        cell = bands.cell_1d()
        vals = bands.exact_laplacian_spectrum(cell, 4, m=2)
        assert np.allclose(vals, [0.0, 0.0, 4 * PI2, 4 * PI2])


class TestGalerkin:
    def test_free_matches_exact_spectrum(self):
        for theta, n_low in [(0.0, 20), (0.5, 20)]:
            family = bands.ScaledFamily(bands.cell_1d(theta=theta), {})
            trunc = bands.FourierTruncation(16, 1)
            for t in (1.0, 0.37):
                vals = np.sort(bands.eigenvalues_at(family, t, trunc))[:n_low]
                exact = bands.exact_laplacian_spectrum(family.cell, n_low) / t ** 2
                assert np.allclose(vals, exact, rtol=1e-12, atol=1e-9)

    def test_free_square_cell(self):
        family = bands.ScaledFamily(bands.square_cell(), {})
        trunc = bands.FourierTruncation(8, 2)
        vals = np.sort(bands.eigenvalues_at(family, 1.0, trunc))[:20]
        exact = bands.exact_laplacian_spectrum(family.cell, 20)
        assert np.allclose(vals, exact, rtol=1e-12, atol=1e-9)

    def test_constant_potential_is_diagonal_shift(self):
        family = bands.ScaledFamily(bands.cell_1d(), {(0,): [[3.0]]})
        trunc = bands.FourierTruncation(4, 1)
        H = bands.galerkin_matrix(family, 0.6, trunc)
        off = H - np.diag(np.diagonal(H))
        assert np.max(np.abs(off)) < 1e-14
        free = bands.ScaledFamily(bands.cell_1d(), {})
        H0 = bands.galerkin_matrix(free, 0.6, trunc)
        assert np.allclose(np.diagonal(H), np.diagonal(H0) + 3.0)

    def test_cosine_is_tridiagonal(self):
        family = bands.ScaledFamily(bands.cell_1d(), {(1,): [[1.0]], (-1,): [[1.0]]})
        trunc = bands.FourierTruncation(4, 1)
        H = bands.galerkin_matrix(family, 1.0, trunc)
        for i in range(9):
            for j in range(9):
                if abs(i - j) == 1:
                    assert H[i, j] == pytest.approx(1.0, abs=1e-12)
                elif i != j:
                    assert abs(H[i, j]) < 1e-12

    def test_hermitian_at_scaled_t(self):
        family = bands.ScaledFamily(
            bands.cell_1d(theta=0.3), {(1,): [[0.5 + 0.25j]], (-1,): [[0.5 - 0.25j]]})
        trunc = bands.FourierTruncation(6, 1)
        H = bands.galerkin_matrix(family, 0.555, trunc)
        assert np.linalg.norm(H - H.conj().T) == 0.0

    def test_adjoint_pairs_enforced(self):
        with pytest.raises(NotHermitian):
            bands.ScaledFamily(bands.cell_1d(), {(1,): [[1.0]]})


class TestMorseSweep:
    def test_free_family_never_negative(self):
        family = bands.ScaledFamily(bands.cell_1d(theta=0.3), {})
        trunc = bands.FourierTruncation(8, 1)
        _, morse, _ = bands.morse_vs_t(family, np.linspace(0.1, 1.0, 7), trunc)
        assert np.all(morse == 0)

    def test_half_phase_well(self):
        family = bands.ScaledFamily(bands.cell_1d(theta=0.5), {(0,): [[-2 * PI2]]})
        trunc = bands.FourierTruncation(16, 1)
        _, morse, _ = bands.morse_vs_t(family, [0.1, 1.0], trunc)
        assert morse[0] == 0          # kinetic term t^{-2} dominates
        assert morse[1] == 2          # modes k = 0, 1 sit below zero

    def test_zero_threshold(self):
        family = bands.ScaledFamily(bands.cell_1d(theta=0.5), {(0,): [[-2 * PI2]]})
        thr = bands.morse_zero_threshold(family, bands.FourierTruncation(16, 1))
        assert thr == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-12)
        trunc = bands.FourierTruncation(16, 1)
        for t in (0.2, 0.5, 0.69):
            assert np.count_nonzero(bands.eigenvalues_at(family, t, trunc) < 0) == 0

    def test_truncation_guard_triggers(self):
        # K = 0 keeps only the k = 0 mode and misses the k = 1 well
        family = bands.ScaledFamily(bands.cell_1d(theta=0.5), {(0,): [[-2 * PI2]]})
        with pytest.raises(TruncationNotConverged):
            bands.morse_vs_t(family, [1.0], bands.FourierTruncation(0, 1))


class TestY19:
    def test_half_phase_acceptance_values(self):
        family = bands.ScaledFamily(bands.cell_1d(theta=0.5), {(0,): [[-2 * PI2]]})
        trunc = bands.FourierTruncation(16, 1)
        rep = bands.verify_y19(family, 0.05, trunc, t_points=120)
        assert (rep["mor_tau"], rep["mor_one"], rep["spflow"]) == (0, 2, -2)
        assert rep["y21_pass"] and rep["y22_pass"] and rep["pass"]
        assert rep["mor_one"] == -rep["spflow_from_tau0"]

    def test_theta_zero_matrix_well(self):
        family = bands.ScaledFamily(bands.cell_1d(theta=0.0),
                                    {(0,): np.diag([-1.0, 1.0])})
        trunc = bands.FourierTruncation(8, 1, m=2)
        rep = bands.verify_y19(family, 0.05, trunc, t_points=60)
        assert rep["mor_v0"] == 1
        assert rep["mor_tau0"] == 1
        assert rep["y23_pass"] and rep["pass"]

    def test_free_family_trivial(self):
        family = bands.ScaledFamily(bands.cell_1d(theta=0.25), {})
        trunc = bands.FourierTruncation(8, 1)
        rep = bands.verify_y19(family, 0.1, trunc, t_points=40)
        assert rep["mor_tau"] == rep["mor_one"] == rep["spflow"] == 0
        assert rep["pass"]

    def test_degenerate_double_crossing(self):
        # theta = 0, V = -5 pi^2: the k = +-1 tracks cross zero together
        family = bands.ScaledFamily(bands.cell_1d(theta=0.0), {(0,): [[-5 * PI2]]})
        trunc = bands.FourierTruncation(8, 1)
        t_grid, morse, tracks = bands.morse_vs_t(
            family, np.linspace(0.5, 1.0, 101), trunc)
        from maslov.engine import flow_events, spectral_flow
        flow = spectral_flow(tracks, 0.0)
        assert flow == int(morse[0]) - int(morse[-1]) == -2
        events = flow_events(t_grid, tracks, 0.0)
        locs = [tc for tc, _, _ in events]
        assert len(events) == 2                      # full multiplicity
        assert np.allclose(locs, np.sqrt(0.8), atol=1e-2)
