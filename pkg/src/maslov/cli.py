"""Command-line entry points.

Subcommands
-----------
path                Maslov index of a sampled plane path from CSV files.
verify-periodic-1d  Morse difference vs Maslov index for the quasi-periodic
                    1D family (exact integer identity).
verify-robin-1d     Monotone Robin sweep: Morse difference = sum of kernel
                    dimensions, all crossings negative definite.
square              Homotopy-square run: four side indices, sign checks,
                    loop contractibility.
band                Lattice-cell band structure: Morse/track sweep, scaled
                    family checks.
flow                Spectral flow of oracle eigenvalue tracks vs Maslov
                    index of the boundary-plane path.

Exit codes: 0 pass, 1 identity failure, 2 configuration error, 3 numerical
error.  MASLOV_THREADS caps the worker count for scenario sweeps and
MASLOV_SEED fixes the seed of the randomized property suites.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bands as bd
from . import reports as rep
from . import scenarios as sc
from . import schrodinger as sch
from . import symplectic as sp
from .config import SCHEMAS, load_config, merge, validate
from .engine import LagrangianPath, maslov_index
from .errors import ConfigError, MaslovError, NumericalError


def _parse_potential_flag(text):
    """Inline potential syntax: 'const:<value>' or 'const:<value>:m=<int>'."""
    parts = text.split(":")
    if parts[0] not in ("const", "constant"):
        raise ConfigError(
            f"inline potential {text!r} not understood; use const:<value> "
            "or a [potential] table in the config file")
    if len(parts) < 2:
        raise ConfigError("inline potential needs a value, e.g. const:-5")
    try:
        value = float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad potential value {parts[1]!r}") from exc
    m = 1
    for extra in parts[2:]:
        if extra.startswith("m="):
            m = int(extra[2:])
        else:
            raise ConfigError(f"bad potential option {extra!r}")
    return {"kind": "constant", "value": value, "m": m}


def _gather(args, command, flag_names):
    cfg = {}
    if getattr(args, "config", None):
        cfg = load_config(args.config, command)
    overrides = {}
    for name in flag_names:
        overrides[name] = getattr(args, name.replace("-", "_"), None)
    if getattr(args, "potential", None):
        overrides["potential"] = _parse_potential_flag(args.potential)
    if getattr(args, "out", None):
        overrides["out"] = args.out
    if getattr(args, "no_plot", False):
        overrides["plot"] = False
    cfg = merge(cfg, overrides)
    return validate(cfg, SCHEMAS[command])


def _finish(report, cfg, command, *, tracks=None, crossings=None,
            figure=None):
    """Write the report bundle and return the exit code."""
    out = cfg.get("out")
    want_plot = cfg.get("plot", True)
    passed = report.get("pass", True)
    if out:
        os.makedirs(out, exist_ok=True)
        rep.emit_report(report, os.path.join(out, "report.json"), command=command)
        if tracks is not None:
            rep.emit_tracks(tracks[0], tracks[1], os.path.join(out, "tracks.csv"))
        if crossings:
            rep.emit_crossings(crossings, os.path.join(out, "crossings.csv"))
        if want_plot and figure is not None:
            figure(out)
        print(f"{command}: pass={passed} -> {out}/report.json")
    else:
        sys.stdout.write(rep.dumps17({"schema_version": "1",
                                      "command": command, **report}))
    return 0 if passed else 1


def _oracle_track_data(V, kind, th1, th2, grid, count, points=33):
    m = V.m
    eye = np.eye(2 * m)

    def plane_of(th):
        if kind == "theta_periodic":
            return sch.extension_plane("theta_periodic", m, theta=th)
        return sch.extension_plane("robin", m, Theta=th * eye)

    thetas = np.linspace(th1, th2, points)
    tracks = np.vstack([sch.raw_oracle_eigenvalues(V, plane_of(th), grid, count)[:count]
                        for th in thetas])
    return thetas, tracks


def cmd_verify_periodic(args):
    cfg = _gather(args, "verify-periodic-1d",
                  ["theta1", "theta2", "oracle_grid", "eig_count",
                   "ode_steps", "angle_tol"])
    for key in ("potential", "theta1", "theta2"):
        if key not in cfg:
            raise ConfigError(f"missing required config key '{key}'")
    V = sc.potential_from_config(cfg["potential"])
    report = sch.verify_identity_rr15(
        V, float(cfg["theta1"]), float(cfg["theta2"]),
        grid=cfg.get("oracle_grid", sch.DEFAULT_GRID),
        count=cfg.get("eig_count", 12),
        steps=cfg.get("ode_steps", sch.DEFAULT_STEPS),
        tol=cfg.get("angle_tol", 1e-8))
    report_out = {"lhs": report["lhs_morse_diff"], "rhs": report["rhs_maslov"],
                  **report}
    thetas, tracks = _oracle_track_data(
        V, "theta_periodic", float(cfg["theta1"]), float(cfg["theta2"]),
        max(400, cfg.get("oracle_grid", sch.DEFAULT_GRID) // 2),
        cfg.get("eig_count", 12) // 2 + 2)

    def figure(out):
        from . import plotting
        plotting.save_track_figure(
            thetas, tracks, os.path.join(out, "tracks.png"),
            events=[{"t": c["s"], "direction": c["signature"]}
                    for c in report["crossings"]],
            xlabel="theta", title="quasi-periodic family eigenvalues")

    return _finish(report_out, cfg, "verify-periodic-1d",
                   tracks=(thetas, tracks), crossings=report["crossings"],
                   figure=figure)


def cmd_verify_robin(args):
    cfg = _gather(args, "verify-robin-1d",
                  ["theta1", "theta2", "oracle_grid", "eig_count",
                   "ode_steps", "angle_tol", "scan_points", "scan_grid"])
    for key in ("potential", "theta1", "theta2"):
        if key not in cfg:
            raise ConfigError(f"missing required config key '{key}'")
    V = sc.potential_from_config(cfg["potential"])
    report = sch.verify_robin_monotone(
        V, float(cfg["theta1"]), float(cfg["theta2"]),
        grid=cfg.get("oracle_grid", sch.DEFAULT_GRID),
        count=cfg.get("eig_count", 10),
        steps=cfg.get("ode_steps", sch.DEFAULT_STEPS),
        tol=cfg.get("angle_tol", 1e-8),
        scan_points=cfg.get("scan_points", 33),
        scan_grid=cfg.get("scan_grid", 800))
    thetas, tracks = _oracle_track_data(
        V, "robin", float(cfg["theta1"]), float(cfg["theta2"]),
        max(400, cfg.get("oracle_grid", sch.DEFAULT_GRID) // 2),
        cfg.get("eig_count", 10) // 2 + 2)

    def figure(out):
        from . import plotting
        plotting.save_track_figure(
            thetas, tracks, os.path.join(out, "tracks.png"),
            events=[{"t": c["theta"], "direction": -c["dim"]}
                    for c in report["crossings"]],
            xlabel="robin parameter", title="Robin family eigenvalues")

    return _finish(report, cfg, "verify-robin-1d",
                   tracks=(thetas, tracks), crossings=report["crossings"],
                   figure=figure)


def cmd_square(args):
    cfg = _gather(args, "square",
                  ["family", "theta1", "theta2", "lambda_inf", "oracle_grid",
                   "eig_count", "ode_steps", "angle_tol", "check_loop"])
    for key in ("potential", "theta1", "theta2"):
        if key not in cfg:
            raise ConfigError(f"missing required config key '{key}'")
    family = cfg.get("family", "theta_periodic")
    V = sc.potential_from_config(cfg["potential"])
    th1, th2 = float(cfg["theta1"]), float(cfg["theta2"])
    lam_inf = cfg.get("lambda_inf", "auto")
    lam_inf = None if lam_inf in ("auto", None) else float(lam_inf)
    steps = cfg.get("ode_steps", 2048)
    grid = cfg.get("oracle_grid", 1200)
    count = cfg.get("eig_count", 10)

    m = V.m
    eye = np.eye(2 * m)
    if family in ("theta_periodic", "theta_sweep_1d"):
        square = sc.theta_square(V, th1, th2, steps=steps, lambda_inf=lam_inf)
        ext = [sch.extension_plane("theta_periodic", m, theta=th)
               for th in (th1, th2)]
    elif family in ("robin", "robin_sweep_1d"):
        square = sc.robin_square(V, th1, th2, steps=steps, lambda_inf=lam_inf)
        ext = [sch.extension_plane("robin", m, Theta=th * eye)
               for th in (th1, th2)]
    else:
        raise ConfigError(f"unknown square family {family!r}")
    morse = tuple(sch.oracle_spectrum(V, e, grid, count).morse_index for e in ext)
    report = sc.run_square(square, oracle_morse=morse,
                           tol=cfg.get("angle_tol", 1e-8),
                           check_loop=cfg.get("check_loop", True)).to_dict()
    crossings = [c for side in ("side1", "side2", "side3", "side4")
                 for c in report["crossings"].get(side, [])]

    def figure(out):
        from . import plotting
        plotting.save_square_figure(report, square.lambda_inf, th1, th2,
                                    os.path.join(out, "square.png"))

    return _finish(report, cfg, "square", crossings=crossings, figure=figure)


def cmd_band(args):
    cfg = _gather(args, "band",
                  ["cutoff", "tau", "t_points", "verify_y19", "check_stride"])
    if "cell" not in cfg:
        raise ConfigError("missing required config table 'cell'")
    family = sc.family_from_config(cfg["cell"])
    n = family.cell.n
    K = cfg.get("cutoff", 16 if n == 1 else 8)
    trunc = bd.FourierTruncation(K, n, family.m)
    t_points = cfg.get("t_points", 200)
    stride = cfg.get("check_stride", 1)

    if cfg.get("verify_y19", False):
        tau = float(cfg.get("tau", 0.05))
        report = bd.verify_y19(family, tau, trunc, t_points=t_points,
                               check_stride=stride)
        t_grid = np.linspace(tau, 1.0, t_points)
    else:
        tau = float(cfg.get("tau", 0.05))
        t_grid = np.linspace(tau, 1.0, t_points)
        t_grid, morse, tracks = bd.morse_vs_t(family, t_grid, trunc,
                                              check_stride=stride)
        report = {
            "cutoff": K,
            "theta": [float(x) for x in family.cell.theta],
            "morse_by_t": [{"t": float(t), "morse": int(mo)}
                           for t, mo in zip(t_grid, morse)],
            "pass": True,
        }
    _, _, tracks = bd.morse_vs_t(family, t_grid, trunc, check_truncation=False)

    def figure(out):
        from . import plotting
        plotting.save_track_figure(
            t_grid, tracks, os.path.join(out, "bands.png"),
            events=report.get("crossings", []),
            xlabel="scale t", title="scaled-family eigenvalue tracks")

    return _finish(report, cfg, "band", tracks=(t_grid, tracks),
                   crossings=report.get("crossings"), figure=figure)


def cmd_flow(args):
    cfg = _gather(args, "flow",
                  ["family", "theta1", "theta2", "tau", "cutoff",
                   "track_points", "oracle_grid", "eig_count", "ode_steps",
                   "angle_tol"])
    family_id = cfg.get("family")
    if not family_id:
        raise ConfigError("missing required config key 'family'")
    report = sc.run_spectral_flow_identity(family_id, cfg)
    tracks = None
    if family_id in ("theta_sweep_1d", "robin_sweep_1d"):
        V = sc.potential_from_config(cfg["potential"])
        kind = "theta_periodic" if family_id == "theta_sweep_1d" else "robin"
        thetas, data = _oracle_track_data(
            V, kind, float(cfg["theta1"]), float(cfg["theta2"]),
            max(400, cfg.get("oracle_grid", 2000) // 2),
            cfg.get("eig_count", 10),
            points=cfg.get("track_points", 33))
        tracks = (thetas, data)
    else:
        band_cfg = cfg.get("band", cfg)
        fam = sc.family_from_config(band_cfg)
        trunc = bd.FourierTruncation(cfg.get("cutoff", 16), fam.cell.n, fam.m)
        t_grid = np.linspace(float(cfg.get("tau", 0.05)), 1.0,
                             cfg.get("track_points", 200))
        t_grid, _, data = bd.morse_vs_t(fam, t_grid, trunc,
                                        check_truncation=False)
        tracks = (t_grid, data)

    def figure(out):
        from . import plotting
        plotting.save_track_figure(
            tracks[0], tracks[1], os.path.join(out, "tracks.png"),
            events=report.get("track_crossings", []),
            xlabel="t", title=f"spectral flow: {family_id}")

    return _finish(report, cfg, "flow", tracks=tracks,
                   crossings=report.get("track_crossings"), figure=figure)


def cmd_path(args):
    cfg = _gather(args, "path", ["planes", "reference", "angle_tol"])
    for key in ("planes", "reference"):
        if key not in cfg:
            raise ConfigError(f"missing required config key '{key}'")
    samples = rep.read_plane_path_csv(cfg["planes"])
    ref_basis = rep.read_reference_plane_csv(cfg["reference"])
    dim = ref_basis.shape[0]
    if dim % 2:
        raise ConfigError("plane CSV dimension must be even")
    space = sp.standard_space(dim // 2)
    Z = sp.plane_from_basis(space, ref_basis, tol=1e-6)
    svals = sorted(samples)
    bases = [np.linalg.qr(samples[s])[0] for s in svals]

    def sampler(s):
        idx = int(np.searchsorted(svals, s))
        if idx >= len(svals):
            idx = len(svals) - 1
        if svals[idx] > s and idx > 0:
            lo, hi = idx - 1, idx
            w = (s - svals[lo]) / (svals[hi] - svals[lo])
            M = bases[hi].conj().T @ bases[lo]
            u, _, vh = np.linalg.svd(M)
            aligned = bases[hi] @ (u @ vh)
            mix = (1.0 - w) * bases[lo] + w * aligned
        else:
            mix = bases[idx]
        return sp.plane_from_basis(space, mix, tol=1e-6)

    path = LagrangianPath(svals[0], svals[-1], sampler, grid=svals,
                          label=os.path.basename(str(cfg["planes"])))
    res = maslov_index(path, Z, cfg.get("angle_tol", 1e-8))
    report = res.to_dict()
    report["pass"] = True

    phase_rows = []
    Vh = Z.unitary.conj().T
    for s in svals:
        W = path(s).unitary @ Vh
        phase_rows.append(np.sort(np.angle(np.linalg.eigvals(W))))

    def figure(out):
        from . import plotting
        plotting.save_phase_figure(svals, phase_rows,
                                   os.path.join(out, "phases.png"))

    return _finish(report, cfg, "path", crossings=report["crossings"],
                   figure=figure)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maslov",
        description="Maslov index and spectral-flow verification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, potential=True):
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--out", help="output directory for report/plot data")
        p.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")
        p.add_argument("--angle-tol", type=float, dest="angle_tol")
        if potential:
            p.add_argument("--potential",
                           help="inline potential, e.g. const:-5 or const:-5:m=2")

    p = sub.add_parser("path", help="Maslov index of a sampled plane path")
    common(p, potential=False)
    p.add_argument("--planes", help="CSV of path samples (s,j,components)")
    p.add_argument("--reference", help="CSV of the reference plane (j,components)")
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("verify-periodic-1d",
                       help="Morse difference vs Maslov index, quasi-periodic")
    common(p)
    p.add_argument("--theta1", type=float)
    p.add_argument("--theta2", type=float)
    p.add_argument("--oracle-grid", type=int, dest="oracle_grid")
    p.add_argument("--eig-count", type=int, dest="eig_count")
    p.add_argument("--ode-steps", type=int, dest="ode_steps")
    p.set_defaults(func=cmd_verify_periodic)

    p = sub.add_parser("verify-robin-1d",
                       help="monotone Robin sweep identity")
    common(p)
    p.add_argument("--theta1", type=float)
    p.add_argument("--theta2", type=float)
    p.add_argument("--oracle-grid", type=int, dest="oracle_grid")
    p.add_argument("--eig-count", type=int, dest="eig_count")
    p.add_argument("--ode-steps", type=int, dest="ode_steps")
    p.add_argument("--scan-points", type=int, dest="scan_points")
    p.add_argument("--scan-grid", type=int, dest="scan_grid")
    p.set_defaults(func=cmd_verify_robin)

    p = sub.add_parser("square", help="homotopy-square verification")
    common(p)
    p.add_argument("--family", choices=["theta_periodic", "robin"])
    p.add_argument("--theta1", type=float)
    p.add_argument("--theta2", type=float)
    p.add_argument("--lambda-inf", dest="lambda_inf",
                   help="'auto' or a negative number")
    p.add_argument("--oracle-grid", type=int, dest="oracle_grid")
    p.add_argument("--eig-count", type=int, dest="eig_count")
    p.add_argument("--ode-steps", type=int, dest="ode_steps")
    p.set_defaults(func=cmd_square)

    p = sub.add_parser("band", help="lattice-cell band structure checks")
    common(p, potential=False)
    p.add_argument("--verify-y19", action="store_true", dest="verify_y19",
                   default=None)
    p.add_argument("--tau", type=float)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--t-points", type=int, dest="t_points")
    p.add_argument("--check-stride", type=int, dest="check_stride")
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("flow", help="spectral flow vs Maslov index")
    common(p)
    p.add_argument("--family",
                   choices=["theta_sweep_1d", "robin_sweep_1d", "scaled_band"])
    p.add_argument("--theta1", type=float)
    p.add_argument("--theta2", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--track-points", type=int, dest="track_points")
    p.add_argument("--oracle-grid", type=int, dest="oracle_grid")
    p.add_argument("--eig-count", type=int, dest="eig_count")
    p.add_argument("--ode-steps", type=int, dest="ode_steps")
    p.set_defaults(func=cmd_flow)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = getattr(args, "out", None)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        if out:
            os.makedirs(out, exist_ok=True)
            rep.emit_error_report(exc, os.path.join(out, "report.json"),
                                  command=args.command)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if out:
            os.makedirs(out, exist_ok=True)
            rep.emit_error_report(exc, os.path.join(out, "report.json"),
                                  command=args.command)
        return 3
    except MaslovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
