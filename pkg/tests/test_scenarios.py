import numpy as np
import pytest

from maslov import scenarios as sc
from maslov import schrodinger as sch
from maslov.errors import ConfigError

PI = np.pi


def well_square(steps=1024):
    V = sch.Potential1D.constant(-5.0)
    return V, sc.theta_square(V, 0.0, PI, steps=steps)


class TestHomotopySquare:
    def test_parametrization_continuity(self):
        _, sq = well_square()
        pieces = sq.parametrization()
        for (lo, hi, f), (lo2, _, f2) in zip(pieces, pieces[1:]):
            assert hi == lo2
            lam1, t1 = f(hi)
            lam2, t2 = f2(lo2)
            assert (lam1, t1) == pytest.approx((lam2, t2))
        # closed loop: last end meets first start
        lam_end, t_end = pieces[-1][2](pieces[-1][1])
        lam_start, t_start = pieces[0][2](pieces[0][0])
        assert (lam_end, t_end) == pytest.approx((lam_start, t_start))

    def test_well_square_sides(self):
        V, sq = well_square()
        kinds = {"theta_periodic": None}
        m0 = sch.oracle_spectrum(V, sch.extension_plane("theta_periodic", 1, theta=0.0),
                                 grid=800, count=8).morse_index
        m1 = sch.oracle_spectrum(V, sch.extension_plane("theta_periodic", 1, theta=PI),
                                 grid=800, count=8).morse_index
        rep = sc.run_square(sq, oracle_morse=(m0, m1), check_loop=False)
        assert rep.side_indices == (-1, 1, 0, 0)
        assert rep.passed()
        side1 = rep.crossings["side1"]
        assert len(side1) == 1
        assert side1[0]["s"] == pytest.approx(-5.0, abs=1e-6)
        assert all(e < 0 for e in side1[0]["eigs"])

    def test_flat_square_all_zero(self):
        V = sch.Potential1D.constant(0.0)
        sq = sc.theta_square(V, 0.1, PI, steps=1024)
        rep = sc.run_square(sq, check_loop=False)
        assert rep.side_indices == (0, 0, 0, 0)

    def test_report_round_trip(self):
        _, sq = well_square()
        rep = sc.run_square(sq, check_loop=False)
        d = rep.to_dict()
        assert d["pass"] == rep.passed()
        assert d["side_indices"] == [-1, 1, 0, 0]
        assert "runtimes" in d


class TestFlowIdentities:
    def test_unknown_family_rejected(self):
        with pytest.raises(ConfigError):
            sc.run_spectral_flow_identity("no_such_family", {})

    def test_theta_sweep(self):
        rep = sc.run_spectral_flow_identity("theta_sweep_1d", {
            "potential": {"kind": "constant", "value": -5.0},
            "theta1": 0.0, "theta2": PI,
            "oracle_grid": 800, "ode_steps": 1024})
        assert rep["spflow"] == rep["maslov"] == 1
        assert rep["pass"]

    def test_robin_positive_window(self):
        rep = sc.run_spectral_flow_identity("robin_sweep_1d", {
            "potential": {"kind": "constant", "value": 0.0},
            "theta1": 1.0, "theta2": 2.0,
            "oracle_grid": 800, "ode_steps": 1024})
        assert rep["spflow"] == rep["maslov"] == 0
        assert rep["pass"]

    def test_scaled_band_cross_check(self):
        rep = sc.run_spectral_flow_identity("scaled_band", {
            "band": {"n": 1, "basis_vectors": [[1.0]], "theta": [0.5],
                     "potential": {"fourier_modes": [
                         {"k": [0], "coeff_re": [[-2 * PI ** 2]]}]}},
            "tau": 0.05, "cutoff": 8, "track_points": 60, "ode_steps": 1024})
        assert (rep["mor_tau"], rep["mor_one"]) == (0, 2)
        assert rep["spflow"] == rep["maslov"] == -2
        assert rep["pass"]


class TestConfigBuilders:
    def test_constant_potential(self):
        V = sc.potential_from_config({"kind": "constant", "value": -5.0, "m": 2})
        assert V.m == 2
        assert np.allclose(V.evaluator(0.1), -5.0 * np.eye(2))

    def test_fourier_potential(self):
        V = sc.potential_from_config({"kind": "fourier", "modes": [
            {"k": 1, "coeff_re": [[1.0]]}, {"k": -1, "coeff_re": [[1.0]]}]})
        assert V.evaluate_many([0.0])[0, 0, 0] == pytest.approx(2.0)

    def test_missing_value_rejected(self):
        with pytest.raises(ConfigError):
            sc.potential_from_config({"kind": "constant"})

    def test_band_family(self):
        fam = sc.family_from_config({
            "n": 1, "basis_vectors": [[1.0]], "theta": [0.5],
            "potential": {"fourier_modes": [{"k": [0], "coeff_re": [[-1.0]]}]}})
        assert fam.m == 1
        assert fam.value_at_zero()[0, 0] == pytest.approx(-1.0)
