"""End-to-end verification scenarios.

The homotopy square runs the boundary loop of the rectangle
[lambda_inf, 0] x [alpha, beta] in the (lambda, t) plane, positively
oriented, with the four sides parametrized by a single parameter s:

    side 1:  lambda = s,                t = alpha,  s in [lambda_inf, 0]
    side 2:  lambda = 0,                t = s + alpha,  s in [0, beta - alpha]
    side 3:  lambda = -s + beta - alpha, t = beta,
             s in [beta - alpha, beta - alpha - lambda_inf]
    side 4:  lambda = lambda_inf,       t = -s + 2 beta - alpha - lambda_inf,
             s in [beta - alpha - lambda_inf, 2 (beta - alpha) - lambda_inf]

Side 1 picks up -Mor(alpha operator) with negative-definite crossings,
side 3 picks up +Mor(beta operator) with positive-definite crossings,
side 4 sees no crossings, and the whole contractible loop has index zero,
so the side-2 index equals the Morse difference; that is what the spectral
flow of the operator family measures directly.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bands as bd
from . import schrodinger as sch
from . import symplectic as sp
from .engine import (
    LagrangianPath,
    crossing_form,
    flow_events,
    maslov_index,
    maslov_two_paths,
    spectral_flow,
)
from .errors import ConfigError, SquareInconsistent

__all__ = [
    "HomotopySquare",
    "VerificationReport",
    "theta_square",
    "robin_square",
    "run_square",
    "run_spectral_flow_identity",
    "potential_from_config",
    "family_from_config",
    "SCENARIO_FAMILIES",
]


def worker_count():
    """Worker cap from MASLOV_THREADS; 1 means run everything serially."""
    try:
        return max(1, int(os.environ.get("MASLOV_THREADS", "1")))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    workers = worker_count()
    if workers == 1 or len(items) < 4:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class HomotopySquare:
    """Suppliers and geometry of the (lambda, t) verification rectangle."""

    lambda_inf: float
    alpha: float
    beta: float
    k_supplier: object          # (lam, t) -> LagrangianPlane
    g_supplier: object          # t -> LagrangianPlane
    label: str = ""
    k_time_dependent: bool = True
    _k_cache: dict = field(default_factory=dict, repr=False)
    _g_cache: dict = field(default_factory=dict, repr=False)

    def k_plane(self, lam, t):
        key = (float(lam), float(t)) if self.k_time_dependent else float(lam)
        plane = self._k_cache.get(key)
        if plane is None:
            plane = self.k_supplier(float(lam), float(t))
            self._k_cache[key] = plane
        return plane

    def g_plane(self, t):
        t = float(t)
        plane = self._g_cache.get(t)
        if plane is None:
            plane = self.g_supplier(t)
            self._g_cache[t] = plane
        return plane

    def parametrization(self):
        lam_inf, a, b = self.lambda_inf, self.alpha, self.beta
        span = b - a
        return (
            (lam_inf, 0.0, lambda s: (s, a)),
            (0.0, span, lambda s: (0.0, s + a)),
            (span, span - lam_inf, lambda s: (-s + span, b)),
            (span - lam_inf, 2.0 * span - lam_inf,
             lambda s: (lam_inf, -s + 2.0 * b - a - lam_inf)),
        )

    def side_paths(self, j, grid_points=17):
        s0, s1, to_lt = self.parametrization()[j]
        grid = np.linspace(s0, s1, grid_points)
        path_k = LagrangianPath(
            s0, s1, lambda s: self.k_plane(*to_lt(s)), grid=grid,
            label=f"side{j + 1}-K")
        path_g = LagrangianPath(
            s0, s1, lambda s: self.g_plane(to_lt(s)[1]), grid=grid,
            label=f"side{j + 1}-G")
        return path_k, path_g

    def loop_paths(self, grid_points=65):
        pieces = self.parametrization()
        s0 = pieces[0][0]
        s1 = pieces[-1][1]
        corners = [p[0] for p in pieces] + [s1]

        def to_lt(s):
            for lo, hi, f in pieces:
                if lo <= s <= hi:
                    return f(s)
            return pieces[-1][2](min(max(s, s0), s1))

        grid = np.unique(np.concatenate([np.linspace(s0, s1, grid_points),
                                         corners]))
        path_k = LagrangianPath(s0, s1, lambda s: self.k_plane(*to_lt(s)),
                                grid=grid, label="loop-K")
        path_g = LagrangianPath(s0, s1, lambda s: self.g_plane(to_lt(s)[1]),
                                grid=grid, label="loop-G")
        return path_k, path_g


@dataclass(frozen=True)
class VerificationReport:
    scenario: str
    side_indices: tuple
    oracle_morse: dict
    identities: dict
    crossings: dict
    runtimes: dict

    def passed(self):
        return all(bool(v) for v in self.identities.values())

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "side_indices": list(self.side_indices),
            "oracle_morse": dict(self.oracle_morse),
            "identities": {k: bool(v) for k, v in self.identities.items()},
            "crossings": self.crossings,
            "runtimes": self.runtimes,
            "pass": self.passed(),
        }


# --- square construction -------------------------------------------------------


def theta_square(V, theta1, theta2, *, steps=sch.DEFAULT_STEPS, lambda_inf=None):
    """Square for the quasi-periodic family: t is the boundary phase."""
    m = V.m
    space = sch.boundary_space(m)
    if lambda_inf is None:
        lambda_inf = sch.lambda_floor(V, "theta_periodic")

    def k_supplier(lam, t):
        return sch.solution_space_trace(V, lam, steps, space=space)

    def g_supplier(t):
        return sch.extension_plane("theta_periodic", m, theta=t, space=space).plane

    square = HomotopySquare(lambda_inf, theta1, theta2, k_supplier, g_supplier,
                            label=f"theta_sweep_1d[{theta1:g},{theta2:g}]",
                            k_time_dependent=False)
    _prime_lambda_cache(square, V, steps)
    return square


def robin_square(V, theta1, theta2, *, steps=sch.DEFAULT_STEPS, lambda_inf=None):
    """Square for the scalar Robin family: t is the Robin coefficient."""
    m = V.m
    space = sch.boundary_space(m)
    eye = np.eye(2 * m)
    if lambda_inf is None:
        worst = max(abs(theta1), abs(theta2))
        lambda_inf = sch.lambda_floor(V, "robin", Theta=worst * eye)

    def k_supplier(lam, t):
        return sch.solution_space_trace(V, lam, steps, space=space)

    def g_supplier(t):
        return sch.extension_plane("robin", m, Theta=t * eye, space=space).plane

    square = HomotopySquare(lambda_inf, theta1, theta2, k_supplier, g_supplier,
                            label=f"robin_sweep_1d[{theta1:g},{theta2:g}]",
                            k_time_dependent=False)
    _prime_lambda_cache(square, V, steps)
    return square


def _prime_lambda_cache(square, V, steps, grid_points=17):
    """Batch-integrate the lambda sweep so the side paths start warm.

    K is t-independent for both 1D families, so one batch covers both the
    alpha and beta lambda sides.
    """
    lams = np.linspace(square.lambda_inf, 0.0, grid_points)
    planes = sch.solution_space_traces(V, lams, steps)
    for lam, plane in zip(lams, planes):
        if square.k_time_dependent:
            for t in (square.alpha, square.beta):
                square._k_cache[(float(lam), float(t))] = plane
        else:
            square._k_cache[float(lam)] = plane


def _crossing_dicts(reports):
    return [{
        "s": rep.location,
        "dim": rep.intersection_dim,
        "eigs": None if rep.form_eigenvalues is None else list(rep.form_eigenvalues),
        "signature": rep.signature,
        "regular": rep.regular,
    } for rep in reports]


def run_square(square, *, oracle_morse=None, tol=1e-8, check_loop=True,
               corner_retries=3):
    """Run the four sides of the homotopy square and check the identities.

    ``oracle_morse`` is an optional pair (Mor(alpha), Mor(beta)) from the
    independent eigenvalue oracle; when present the side identities are
    checked against it.  Corner kernels on the lambda_inf side trigger a 10%
    shrink of lambda_inf and a re-run; kernels at the lambda = 0 corners are
    flagged (the Morse count there is convention-sensitive).
    """
    t0 = time.time()
    for attempt in range(corner_retries + 1):
        bottom_ok = all(
            sp.intersection_dim(square.k_plane(square.lambda_inf, t),
                                square.g_plane(t), tol=1e-6) == 0
            for t in (square.alpha, square.beta))
        if bottom_ok:
            break
        if attempt == corner_retries:
            raise SquareInconsistent(
                "persistent kernel at a lambda_inf corner; "
                "the spectral bound is not honest")
        square = HomotopySquare(1.1 * square.lambda_inf, square.alpha,
                                square.beta, square.k_supplier,
                                square.g_supplier, label=square.label,
                                k_time_dependent=square.k_time_dependent)

    corner_kernels = {
        f"t={t:g}": sp.intersection_dim(square.k_plane(0.0, t),
                                        square.g_plane(t), tol=1e-6)
        for t in (square.alpha, square.beta)
    }

    side_indices = []
    side_crossings = {}
    runtimes = {}
    for j in range(4):
        ts = time.time()
        path_k, path_g = square.side_paths(j)
        if j in (0, 2):
            # G is constant on the lambda sides; use the reduction
            res = maslov_index(path_k, path_g(path_g.a), tol)
        else:
            res = maslov_two_paths(path_k, path_g, tol)
        side_indices.append(res.index)
        forms = []
        if j in (0, 2):
            for c in res.crossings:
                rep = crossing_form(path_k, path_g(path_g.a), c.location)
                forms.append(rep)
        side_crossings[f"side{j + 1}"] = _crossing_dicts(forms or res.crossings)
        runtimes[f"side{j + 1}"] = time.time() - ts

    identities = {}
    s1, s2, s3, s4 = side_indices
    identities["sides_sum_zero"] = (s1 + s2 + s3 + s4 == 0)
    identities["side4_zero"] = (s4 == 0)
    identities["side1_crossings_negative"] = all(
        c["regular"] and c["signature"] == -c["dim"]
        for c in side_crossings["side1"])
    identities["side3_crossings_positive"] = all(
        c["regular"] and c["signature"] == c["dim"]
        for c in side_crossings["side3"])
    if oracle_morse is not None:
        mor_a, mor_b = oracle_morse
        identities["side1_is_minus_morse_alpha"] = (s1 == -mor_a)
        identities["side3_is_plus_morse_beta"] = (s3 == mor_b)
        identities["side2_is_morse_difference"] = (s2 == mor_a - mor_b)

    if check_loop:
        ts = time.time()
        loop_k, loop_g = square.loop_paths()
        loop = maslov_two_paths(loop_k, loop_g, tol, locate_crossings=False)
        identities["loop_contractible_zero"] = (loop.index == 0)
        identities["catenation"] = (loop.index == sum(side_indices))
        runtimes["loop"] = time.time() - ts

    if not identities["sides_sum_zero"]:
        raise SquareInconsistent(
            f"side indices {side_indices} do not sum to zero "
            f"(crossings: {side_crossings})")

    runtimes["total"] = time.time() - t0
    return VerificationReport(
        scenario=square.label,
        side_indices=tuple(side_indices),
        oracle_morse={} if oracle_morse is None else
        {"alpha": oracle_morse[0], "beta": oracle_morse[1]},
        identities=identities,
        crossings={"corner_kernels_at_lambda0": corner_kernels,
                   **side_crossings},
        runtimes=runtimes,
    )


# --- config-driven construction ------------------------------------------------


def potential_from_config(cfg):
    """Build a Potential1D from a {kind: ..., ...} mapping."""
    kind = cfg.get("kind")
    if kind == "constant":
        value = cfg.get("value")
        if value is None:
            raise ConfigError("constant potential needs 'value'")
        m = cfg.get("m", 1)
        return sch.Potential1D.constant(np.asarray(value, dtype=complex), m=m)
    if kind == "fourier":
        modes = {}
        for entry in cfg.get("modes", []):
            k = int(entry["k"])
            re = np.asarray(entry.get("coeff_re", [[0.0]]), dtype=float)
            im = np.asarray(entry.get("coeff_im", np.zeros_like(re)), dtype=float)
            modes[k] = re + 1j * im
        if not modes:
            raise ConfigError("fourier potential needs at least one mode")
        return sch.Potential1D.fourier(modes)
    if kind == "table":
        return sch.Potential1D.from_table(cfg["xs"], cfg["values"])
    raise ConfigError(f"unknown potential kind {kind!r}")


def cell_from_config(cfg):
    vectors = np.asarray(cfg.get("basis_vectors"), dtype=float)
    theta = cfg.get("theta", [0.0] * len(vectors))
    return bd.LatticeCell(vectors.T, theta)


def family_from_config(cfg):
    """Scaled band family from {n, basis_vectors, theta, potential: {...}}."""
    cell = cell_from_config(cfg)
    modes = {}
    for entry in cfg.get("potential", {}).get("fourier_modes", []):
        k = tuple(int(x) for x in np.atleast_1d(entry["k"]))
        re = np.asarray(entry.get("coeff_re", [[0.0]]), dtype=float)
        im = np.asarray(entry.get("coeff_im", np.zeros_like(re)), dtype=float)
        modes[k] = re + 1j * im
    return bd.ScaledFamily(cell, modes)


# --- spectral-flow identities ---------------------------------------------------


def _oracle_tracks(V, plane_of, params, grid, count):
    vals = _map_ordered(
        lambda p: sch.raw_oracle_eigenvalues(V, plane_of(p), grid, count),
        list(params))
    n = min(len(v) for v in vals)
    return np.vstack([v[:n] for v in vals])


def run_spectral_flow_identity(family_id, cfg):
    """Spectral flow of the operator family vs Maslov index of its planes."""
    t0 = time.time()
    if family_id not in SCENARIO_FAMILIES:
        raise ConfigError(f"unknown scenario family {family_id!r}; "
                          f"known: {sorted(SCENARIO_FAMILIES)}")
    return SCENARIO_FAMILIES[family_id](cfg, t0)


def _flow_theta_sweep(cfg, t0, kind="theta_periodic"):
    V = potential_from_config(cfg.get("potential", {}))
    th1 = float(cfg.get("theta1"))
    th2 = float(cfg.get("theta2"))
    grid = int(cfg.get("oracle_grid", 2000))
    count = int(cfg.get("eig_count", 10))
    steps = int(cfg.get("ode_steps", sch.DEFAULT_STEPS))
    track_points = int(cfg.get("track_points", 33))
    tol = float(cfg.get("angle_tol", 1e-8))
    m = V.m
    space = sch.boundary_space(m)
    eye = np.eye(2 * m)

    def plane_of(th):
        if kind == "theta_periodic":
            return sch.extension_plane("theta_periodic", m, theta=th, space=space)
        return sch.extension_plane("robin", m, Theta=th * eye, space=space)

    thetas = np.linspace(th1, th2, track_points)
    tracks = _oracle_tracks(V, plane_of, thetas, grid, count)
    flow = spectral_flow(tracks, 0.0)
    events = flow_events(thetas, tracks, 0.0)

    K0 = sch.solution_space_trace(V, 0.0, steps, space=space)
    path_k = LagrangianPath(th1, th2, lambda s: K0, label="constant K_0")
    path_g = LagrangianPath(th1, th2, lambda th: plane_of(th).plane,
                            grid=thetas, label=f"{kind} planes")
    mas = maslov_two_paths(path_k, path_g, tol)

    report = {
        "scenario": f"{'theta_sweep_1d' if kind == 'theta_periodic' else 'robin_sweep_1d'}",
        "theta1": th1,
        "theta2": th2,
        "spflow": int(flow),
        "maslov": int(mas.index),
        "track_crossings": [{"t": tc, "direction": d, "track": j}
                            for tc, d, j in events],
        "maslov_crossings": mas.to_dict()["crossings"],
        "pass": bool(flow == mas.index),
        "runtimes": {"total": time.time() - t0},
    }
    return report


def _flow_robin_sweep(cfg, t0):
    return _flow_theta_sweep(cfg, t0, kind="robin")


def _flow_scaled_band(cfg, t0):
    band_cfg = cfg.get("band", cfg)
    family = family_from_config(band_cfg)
    cell = family.cell
    tau = float(cfg.get("tau", 0.05))
    K = int(cfg.get("cutoff", 16 if cell.n == 1 else 8))
    t_points = int(cfg.get("track_points", 200))
    tol = float(cfg.get("angle_tol", 1e-8))
    trunc = bd.FourierTruncation(K, cell.n, family.m)

    t_grid, morse, tracks = bd.morse_vs_t(
        family, np.linspace(tau, 1.0, t_points), trunc,
        check_truncation=bool(cfg.get("check_truncation", True)),
        check_stride=int(cfg.get("check_stride", 1)))
    flow = spectral_flow(tracks, 0.0)
    events = flow_events(t_grid, tracks, 0.0)

    report = {
        "scenario": "scaled_band",
        "tau": tau,
        "cutoff": K,
        "mor_tau": int(morse[0]),
        "mor_one": int(morse[-1]),
        "spflow": int(flow),
        "track_crossings": [{"t": tc, "direction": d, "track": j}
                            for tc, d, j in events],
        "pass": bool(flow == int(morse[0]) - int(morse[-1])),
        "runtimes": {},
    }

    if cell.n == 1 and abs(cell.volume - 1.0) < 1e-12 and family.m == 1:
        # independent Maslov side through the 1D boundary machinery
        steps = int(cfg.get("ode_steps", 2048))
        theta_1d = 2.0 * np.pi * float(cell.theta[0])
        space = sch.boundary_space(1)
        G = sch.extension_plane("theta_periodic", 1, theta=theta_1d,
                                space=space).plane
        table = {int(q[0]): c for q, c in family.modes.items()}
        V1 = sch.Potential1D.fourier(table) if table \
            else sch.Potential1D.constant(0.0)

        def k_of_t(t):
            return sch.solution_space_trace(sch.scaled_potential(V1, t), 0.0,
                                            steps, space=space)

        path = LagrangianPath(tau, 1.0, k_of_t,
                              grid=np.linspace(tau, 1.0, 17),
                              label="scaled trace planes")
        mas = maslov_index(path, G, tol)
        report["maslov"] = int(mas.index)
        report["maslov_crossings"] = mas.to_dict()["crossings"]
        report["pass"] = bool(report["pass"] and mas.index == flow)

    report["runtimes"]["total"] = time.time() - t0
    return report


SCENARIO_FAMILIES = {
    "theta_sweep_1d": _flow_theta_sweep,
    "robin_sweep_1d": _flow_robin_sweep,
    "scaled_band": _flow_scaled_band,
}
