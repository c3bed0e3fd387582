"""Matrix Schrodinger operators -u'' + V(x)u on [0,1] and their boundary data.

The boundary trace maps are

    G1 u = (u(1), u(0)),     G2 u = (u'(1), -u'(0)),

taking values in C^{2m}; the pair satisfies the second Green identity, so
(C^{2m}, G1, G2) carries the standard symplectic structure of
``symplectic.standard_space(2m)`` and self-adjoint boundary conditions are
exactly the Lagrangian planes there.

Two independent routes to the same spectra live here: the solution-space
trace K_lambda (traces of the full solution space at spectral parameter
lambda, integrated by a fixed-step RK4 scheme), and a finite-difference
oracle that discretizes the quadratic form directly.  Their agreement is
what the verification drivers check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import eigsh

from . import symplectic as sp
from .engine import LagrangianPath, crossing_form, maslov_two_paths
from .errors import (
    EigensolverFailure,
    MorseAmbiguous,
    NotHermitian,
    NotIsotropic,
    NotLagrangian,
)

__all__ = [
    "Potential1D",
    "BoundaryTriple1D",
    "ExtensionPlane",
    "SpectrumResult",
    "boundary_space",
    "extension_plane",
    "solution_space_trace",
    "solution_space_traces",
    "scaled_potential",
    "lambda_floor",
    "oracle_spectrum",
    "raw_oracle_eigenvalues",
    "verify_identity_rr15",
    "verify_robin_monotone",
]

DEFAULT_STEPS = 4096
DEFAULT_GRID = 2000
HERMITICITY_TOL = 1e-12
TRACE_ISO_TOL = 1e-8


class Potential1D:
    """Bounded Hermitian-matrix potential on [0, 1]."""

    def __init__(self, m, evaluator, kind="callable", data=None):
        self.m = int(m)
        self.evaluator = evaluator
        self.kind = kind
        self.data = data if data is not None else {}
        self._norm = None
        self._grids = {}

    @classmethod
    def constant(cls, value, m=None):
        value = np.atleast_2d(np.asarray(value, dtype=complex))
        if value.shape == (1, 1) and m is not None and m > 1:
            value = value[0, 0] * np.eye(m)
        m = value.shape[0]
        if value.shape != (m, m):
            raise ValueError("constant potential must be square")
        _check_hermitian(value, "constant potential")
        return cls(m, lambda x: value, kind="constant", data={"value": value})

    @classmethod
    def fourier(cls, modes, m=None):
        """V(x) = sum_k c_k e^{2 pi i k x} from a {k: (m, m) matrix} table.

        Hermitian-valuedness requires c_{-k} = c_k^*; missing partners are an
        error, not silently filled in.
        """
        table = {int(k): np.atleast_2d(np.asarray(c, dtype=complex))
                 for k, c in dict(modes).items()}
        sizes = {c.shape for c in table.values()}
        if len(sizes) != 1:
            raise ValueError("all Fourier coefficients must share one shape")
        mm = next(iter(sizes))[0]
        if m is not None and m != mm:
            raise ValueError(f"m={m} does not match coefficient size {mm}")
        for k, c in table.items():
            partner = table.get(-k)
            if partner is None or np.linalg.norm(partner - c.conj().T) > HERMITICITY_TOL * max(1.0, np.linalg.norm(c)):
                raise NotHermitian(f"Fourier mode {-k} is not the adjoint of mode {k}")

        ks = np.array(sorted(table))
        coeffs = np.stack([table[k] for k in ks])

        def evaluate(x):
            phases = np.exp(2j * np.pi * ks * x)
            return np.tensordot(phases, coeffs, axes=(0, 0))

        return cls(mm, evaluate, kind="fourier", data={"modes": table})

    @classmethod
    def from_table(cls, xs, values):
        xs = np.asarray(xs, dtype=float)
        values = np.asarray(values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None, None]
        m = values.shape[1]

        def evaluate(x):
            out = np.empty((m, m), dtype=complex)
            for a in range(m):
                for b in range(m):
                    out[a, b] = np.interp(x, xs, values[:, a, b].real) \
                        + 1j * np.interp(x, xs, values[:, a, b].imag)
            return out

        return cls(m, evaluate, kind="table", data={"xs": xs, "values": values})

    def evaluate_many(self, xs):
        xs = np.asarray(xs, dtype=float)
        if self.kind == "constant":
            out = np.broadcast_to(self.data["value"], (len(xs), self.m, self.m)).copy()
        elif self.kind == "fourier":
            table = self.data["modes"]
            ks = np.array(sorted(table))
            coeffs = np.stack([table[k] for k in ks])
            phases = np.exp(2j * np.pi * np.outer(xs, ks))
            out = np.tensordot(phases, coeffs, axes=(1, 0))
        else:
            out = np.stack([np.atleast_2d(self.evaluator(x)) for x in xs])
        return out

    def check_hermitian(self, samples=64):
        xs = np.linspace(0.0, 1.0, samples)
        vals = self.evaluate_many(xs)
        drift = np.max(np.abs(vals - np.conj(np.swapaxes(vals, 1, 2))))
        if drift > HERMITICITY_TOL * max(1.0, float(np.max(np.abs(vals)))):
            raise NotHermitian(f"potential drifts from Hermitian by {drift:.2e}")

    def sup_norm(self, samples=10_000):
        if self._norm is None:
            vals = self.evaluate_many(np.linspace(0.0, 1.0, samples + 1))
            self._norm = float(np.linalg.svd(vals, compute_uv=False).max())
        return self._norm

    def _stage_grids(self, steps):
        """Potential sampled at RK4 nodes and midpoints, cached per step count."""
        cached = self._grids.get(steps)
        if cached is None:
            h = 1.0 / steps
            nodes = np.linspace(0.0, 1.0, steps + 1)
            mids = nodes[:-1] + h / 2.0
            cached = (self.evaluate_many(nodes), self.evaluate_many(mids))
            self._grids[steps] = cached
        return cached


def _check_hermitian(mat, what):
    if np.linalg.norm(mat - mat.conj().T) > HERMITICITY_TOL * max(1.0, np.linalg.norm(mat)):
        raise NotHermitian(f"{what} is not Hermitian")


def scaled_potential(V, t):
    """x -> t^2 V(t x): the potential of -u'' + t^2 V(tx) u, the unit-interval
    form of the scaled family -t^{-2} u'' + V(t .) u."""
    t = float(t)
    return Potential1D(V.m, lambda x: t * t * np.atleast_2d(V.evaluator(t * x)),
                       kind="callable", data={"base": V, "t": t})


def boundary_space(m):
    """Symplectic space C^{2m} x C^{2m} for the trace maps G1, G2."""
    return sp.standard_space(2 * m)


@dataclass(frozen=True)
class BoundaryTriple1D:
    """The concrete trace maps G1 u = (u(1), u(0)), G2 u = (u'(1), -u'(0))."""

    m: int

    def gamma1(self, u1, u0):
        return np.concatenate([np.atleast_1d(u1), np.atleast_1d(u0)])

    def gamma2(self, du1, du0):
        return np.concatenate([np.atleast_1d(du1), -np.atleast_1d(du0)])

    def trace(self, u1, u0, du1, du0):
        return np.concatenate([self.gamma1(u1, u0), self.gamma2(du1, du0)])

    def green_residual(self, coeffs_u, coeffs_v, quad_points=12):
        """|<-u'', v> - <u, -v''> - (<G1 u, G2 v> - <G2 u, G1 v>)| for
        polynomial test functions given by coefficient rows (degree+1, m)."""
        x, w = np.polynomial.legendre.leggauss(quad_points)
        x = 0.5 * (x + 1.0)
        w = 0.5 * w

        def ev(coeffs, xs, der=0):
            c = np.asarray(coeffs, dtype=complex)
            for _ in range(der):
                c = c[1:] * np.arange(1, len(c))[:, None]
            powers = np.vander(xs, len(c), increasing=True)
            return powers @ c

        u, ddu = ev(coeffs_u, x), ev(coeffs_u, x, 2)
        v, ddv = ev(coeffs_v, x), ev(coeffs_v, x, 2)
        lhs = np.sum(w[:, None] * (-ddu) * v.conj()) - np.sum(w[:, None] * u * (-ddv).conj())

        ends = np.array([0.0, 1.0])
        uu, du = ev(coeffs_u, ends), ev(coeffs_u, ends, 1)
        vv, dv = ev(coeffs_v, ends), ev(coeffs_v, ends, 1)
        g1u = self.gamma1(uu[1], uu[0])
        g2u = self.gamma2(du[1], du[0])
        g1v = self.gamma1(vv[1], vv[0])
        g2v = self.gamma2(dv[1], dv[0])
        rhs = sp.ip(g1u, g2v) - sp.ip(g2u, g1v)
        return abs(lhs - rhs)


@dataclass(frozen=True)
class ExtensionPlane:
    """A self-adjoint boundary condition as a Lagrangian plane in C^{4m}."""

    kind: str                    # dirichlet | neumann | robin | theta_periodic
    m: int
    plane: sp.LagrangianPlane
    theta: float | None = None
    Theta: np.ndarray | None = None

    def label(self):
        if self.kind == "theta_periodic":
            return f"theta_periodic({self.theta:g})"
        if self.kind == "robin":
            return f"robin(|Theta|={np.linalg.norm(self.Theta, 2):g})"
        return self.kind


def extension_plane(kind, m=1, theta=None, Theta=None, space=None):
    """Build the validated boundary plane for one of the four supported kinds.

    dirichlet:       G1 u = 0
    neumann:         G2 u = 0
    robin(Theta):    G2 u = -Theta G1 u, Theta a 2m x 2m Hermitian matrix
    theta_periodic:  u(1) = e^{i theta} u(0), u'(1) = e^{i theta} u'(0)
    """
    if space is None:
        space = boundary_space(m)
    two_m = 2 * m
    eye = np.eye(two_m, dtype=complex)
    zero = np.zeros((two_m, two_m), dtype=complex)
    if kind == "dirichlet":
        cols = np.vstack([zero, eye])
    elif kind == "neumann":
        cols = np.vstack([eye, zero])
    elif kind == "robin":
        Theta = np.asarray(Theta, dtype=complex)
        if Theta.shape != (two_m, two_m):
            raise ValueError(f"Theta must be {two_m} x {two_m}")
        _check_hermitian(Theta, "Robin parameter Theta")
        cols = np.vstack([eye, -Theta])
    elif kind == "theta_periodic":
        theta = float(theta)
        phase = np.exp(1j * theta)
        em = np.eye(m, dtype=complex)
        zm = np.zeros((m, m), dtype=complex)
        # columns (e^{i theta} a, a, 0, 0) and (0, 0, -e^{i theta} b, b)
        cols = np.block([[phase * em, zm],
                         [em, zm],
                         [zm, -phase * em],
                         [zm, em]])
    else:
        raise ValueError(f"unknown extension kind {kind!r}")
    plane = sp.plane_from_basis(space, cols)
    return ExtensionPlane(kind=kind, m=m, plane=plane, theta=theta,
                          Theta=None if Theta is None else Theta)


def solution_space_traces(V, lams, steps=DEFAULT_STEPS, *, space=None,
                          iso_tol=TRACE_ISO_TOL):
    """Boundary traces of the full solution spaces of -u'' + Vu = lam u.

    Integrates the 2m x 2m fundamental system with a fixed-step classical
    RK4 scheme (deterministic for a given step count) for every lambda in
    the batch, and returns one Lagrangian plane per lambda, spanned by the
    columns of (Y(1), Y(0), Y'(1), -Y'(0)).
    """
    if steps < 64:
        raise ValueError("need at least 64 integration steps")
    lams = np.asarray(np.atleast_1d(lams), dtype=float)
    m = V.m
    L = len(lams)
    if space is None:
        space = boundary_space(m)
    Vn, Vm = V._stage_grids(steps)
    h = 1.0 / steps
    lam_col = lams[:, None, None]

    S = np.broadcast_to(np.eye(2 * m, dtype=complex), (L, 2 * m, 2 * m)).copy()

    def rhs(Vx, state):
        top = state[:, m:, :]
        bot = Vx[None] @ state[:, :m, :] - lam_col * state[:, :m, :]
        return np.concatenate([top, bot], axis=1)

    for i in range(steps):
        k1 = rhs(Vn[i], S)
        k2 = rhs(Vm[i], S + (h / 2.0) * k1)
        k3 = rhs(Vm[i], S + (h / 2.0) * k2)
        k4 = rhs(Vn[i + 1], S + h * k3)
        S = S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    em = np.eye(m, dtype=complex)
    zm = np.zeros((m, m), dtype=complex)
    y0 = np.hstack([em, zm])          # Y(0) for the two initial blocks
    dy0 = np.hstack([zm, em])         # Y'(0)
    planes = []
    for idx in range(L):
        cols = np.vstack([S[idx, :m, :], y0, S[idx, m:, :], -dy0])
        try:
            planes.append(sp.plane_from_basis(space, cols, tol=iso_tol))
        except NotIsotropic as exc:
            raise NotLagrangian(
                f"trace at lambda={lams[idx]} failed isotropy; "
                "integrator step too coarse") from exc
    return planes


def solution_space_trace(V, lam, steps=DEFAULT_STEPS, **kwargs):
    """Single-lambda form of :func:`solution_space_traces`."""
    return solution_space_traces(V, [lam], steps, **kwargs)[0]


def lambda_floor(V, kind, Theta=None):
    """A spectral lower bound lambda_inf with ker(L - lam) = 0 for lam <= it."""
    base = -V.sup_norm() - 1.0
    if kind == "robin" and Theta is not None:
        base -= 4.0 * float(np.linalg.norm(np.asarray(Theta), 2)) ** 2
    return base


# --- finite-difference oracle -------------------------------------------------

def _assemble(V, ext, N):
    """Quadratic-form discretization of -u'' + Vu with the plane's condition.

    Second-order three-point interior stencil; Neumann/Robin boundary rows by
    half-cell weighting (the lumped form of ghost-point elimination), unitary
    phase identification for theta-periodic.  Returns (K, M) with K Hermitian
    sparse and M the diagonal weight matrix of the same size.
    """
    m = V.m
    h = 1.0 / N
    kind = ext.kind

    if kind == "theta_periodic":
        nodes = np.arange(N) * h
        w = np.full(N, h)
        n_nodes = N
    else:
        nodes = np.arange(N + 1) * h
        w = np.full(N + 1, h)
        w[0] = w[-1] = h / 2.0
        n_nodes = N + 1

    rows, cols, vals = [], [], []

    def add_block(i, j, block):
        b = np.atleast_2d(block)
        for a in range(m):
            for c in range(m):
                if b[a, c] != 0.0:
                    rows.append(i * m + a)
                    cols.append(j * m + c)
                    vals.append(b[a, c])

    eye = np.eye(m, dtype=complex)
    inv_h = 1.0 / h
    for i in range(n_nodes - 1):
        add_block(i, i, inv_h * eye)
        add_block(i + 1, i + 1, inv_h * eye)
        add_block(i, i + 1, -inv_h * eye)
        add_block(i + 1, i, -inv_h * eye)
    if kind == "theta_periodic":
        phase = np.exp(1j * float(ext.theta))
        add_block(N - 1, N - 1, inv_h * eye)
        add_block(0, 0, inv_h * eye)
        add_block(N - 1, 0, -phase * inv_h * eye)
        add_block(0, N - 1, -np.conj(phase) * inv_h * eye)

    Vvals = V.evaluate_many(nodes)
    for i in range(n_nodes):
        add_block(i, i, w[i] * Vvals[i])

    if kind == "robin":
        Th = np.asarray(ext.Theta, dtype=complex)
        t11, t12 = Th[:m, :m], Th[:m, m:]
        t21, t22 = Th[m:, :m], Th[m:, m:]
        add_block(N, N, t11)         # G1 u = (u(1), u(0)) = (u_N, u_0)
        add_block(N, 0, t12)
        add_block(0, N, t21)
        add_block(0, 0, t22)

    size = n_nodes * m
    K = sps.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsc()
    M = sps.diags(np.repeat(w, m)).tocsc()

    if kind == "dirichlet":
        keep = np.arange(m, size - m)
        K = K[keep][:, keep]
        M = M[keep][:, keep]
    return K, M


def raw_oracle_eigenvalues(V, ext, grid=DEFAULT_GRID, count=8):
    """Lowest eigenvalues at a single grid resolution (no extrapolation).

    Guaranteed to include every negative eigenvalue: the request is enlarged
    until the largest returned eigenvalue is positive.
    """
    K, M = _assemble(V, ext, grid)
    size = K.shape[0]
    sigma = lambda_floor(V, ext.kind, ext.Theta) - 1.0
    k = min(max(count, 4), size - 2)
    # generic (but fixed-seed, hence reproducible) start vector: a structured
    # v0 can be orthogonal to part of a degenerate eigenspace and lose copies
    v0 = np.random.default_rng(0x5EED).standard_normal(size)
    while True:
        try:
            vals = eigsh(K, k=k, M=M, sigma=sigma, which="LM", v0=v0,
                         return_eigenvectors=False)
        except Exception as exc:          # ARPACK failures surface here
            raise EigensolverFailure(str(exc)) from exc
        vals = np.sort(vals.real)
        if vals[-1] > 0.0 or k >= size - 2:
            return vals
        k = min(2 * k, size - 2)


@dataclass(frozen=True)
class SpectrumResult:
    """Extrapolated spectrum of a discretized extension with Morse index."""

    eigenvalues: tuple
    bands: tuple                 # per-eigenvalue error estimate
    morse_index: int
    grid: int
    scheme_order: int = 2

    @property
    def tolerance(self):
        return max(self.bands) if self.bands else 0.0


def oracle_spectrum(V, ext, grid=DEFAULT_GRID, count=8, *, band_floor=1e-11):
    """Independent eigenvalue oracle for the extension ``ext``.

    Richardson extrapolation over ``grid`` and ``2 * grid`` supplies both the
    eigenvalues and a per-eigenvalue tolerance band.  The Morse index counts
    eigenvalues below the band; an eigenvalue inside its band raises
    MorseAmbiguous (retry with a shifted spectral parameter or a finer grid).
    """
    if grid < 200:
        raise ValueError("oracle grid must be at least 200")
    v1 = raw_oracle_eigenvalues(V, ext, grid, count)
    v2 = raw_oracle_eigenvalues(V, ext, 2 * grid, count)
    n = min(len(v1), len(v2), count)
    v1, v2 = v1[:n], v2[:n]
    extrap = (4.0 * v2 - v1) / 3.0
    bands = np.abs(v2 - v1) / 3.0 + band_floor
    inside = np.abs(extrap) <= bands
    if np.any(inside):
        raise MorseAmbiguous(
            f"eigenvalue(s) {extrap[inside]} within the tolerance band of 0 "
            f"for {ext.label()}; shift lambda or refine the grid")
    morse = int(np.count_nonzero(extrap < 0.0))
    return SpectrumResult(eigenvalues=tuple(float(x) for x in extrap),
                          bands=tuple(float(b) for b in bands),
                          morse_index=morse, grid=grid)


# --- verification drivers -----------------------------------------------------

def theta_plane_path(m, theta1, theta2, space=None, grid_points=33):
    if space is None:
        space = boundary_space(m)
    return LagrangianPath(
        theta1, theta2,
        lambda th: extension_plane("theta_periodic", m, theta=th, space=space).plane,
        grid=np.linspace(theta1, theta2, grid_points),
        label="theta-periodic boundary planes")


def robin_plane_path(m, theta1, theta2, space=None, grid_points=33):
    if space is None:
        space = boundary_space(m)
    eye = np.eye(2 * m)
    return LagrangianPath(
        theta1, theta2,
        lambda th: extension_plane("robin", m, Theta=th * eye, space=space).plane,
        grid=np.linspace(theta1, theta2, grid_points),
        label="scalar Robin boundary planes")


def verify_identity_rr15(V, theta1, theta2, *, grid=DEFAULT_GRID, count=12,
                         steps=DEFAULT_STEPS, tol=1e-8):
    """Morse-index difference of the theta-periodic family vs Maslov index.

    Left side: oracle Morse indices at theta1 and theta2.  Right side: the
    two-path Maslov index of the constant solution-trace plane K_0 against
    the moving boundary plane G_theta.  The two must agree exactly.
    """
    V.check_hermitian()
    m = V.m
    space = boundary_space(m)
    spec1 = oracle_spectrum(V, extension_plane("theta_periodic", m, theta=theta1), grid, count)
    spec2 = oracle_spectrum(V, extension_plane("theta_periodic", m, theta=theta2), grid, count)
    lhs = spec1.morse_index - spec2.morse_index

    K0 = solution_space_trace(V, 0.0, steps, space=space)
    path_K = LagrangianPath(theta1, theta2, lambda s: K0, label="constant K_0")
    path_G = theta_plane_path(m, theta1, theta2, space=space)
    mas = maslov_two_paths(path_K, path_G, tol)

    return {
        "lhs_morse_diff": lhs,
        "rhs_maslov": mas.index,
        "mor_theta1": spec1.morse_index,
        "mor_theta2": spec2.morse_index,
        "crossings": [c for c in mas.to_dict()["crossings"]],
        "beyond_quoted_range": bool(theta1 < 0.0 or theta2 > np.pi + 1e-12),
        "pass": bool(lhs == mas.index),
    }


def _locate_robin_kernels(V, theta1, theta2, *, grid, scan_points, count):
    """Kernel points of the scalar-Robin family by oracle sign bracketing."""
    m = V.m
    eye = np.eye(2 * m)

    def negatives(th):
        ext = extension_plane("robin", m, Theta=th * eye)
        vals = raw_oracle_eigenvalues(V, ext, grid, count)
        return int(np.count_nonzero(vals < 0.0)), vals

    thetas = np.linspace(theta1, theta2, scan_points)
    counts = [negatives(th)[0] for th in thetas]
    kernels = []
    for i in range(scan_points - 1):
        lo, hi = thetas[i], thetas[i + 1]
        clo, chi = counts[i], counts[i + 1]
        if clo == chi:
            continue
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            cmid = negatives(mid)[0]
            if cmid == clo:
                lo = mid
            else:
                hi = mid
        theta_star = 0.5 * (lo + hi)
        kernels.append((theta_star, clo - chi))
    return kernels


def verify_robin_monotone(V, theta1, theta2, *, grid=DEFAULT_GRID, count=10,
                          steps=DEFAULT_STEPS, tol=1e-8, scan_points=33,
                          scan_grid=800):
    """Monotone Robin sweep: Morse difference = sum of kernel dimensions.

    Locates every kernel point of L_theta on [theta1, theta2] by oracle sign
    bracketing, reads the multiplicity from the symplectic intersection, and
    checks that each crossing form of the moving boundary plane against the
    fixed trace plane K_0 is negative definite.
    """
    V.check_hermitian()
    m = V.m
    space = boundary_space(m)
    eye = np.eye(2 * m)
    spec1 = oracle_spectrum(V, extension_plane("robin", m, Theta=theta1 * eye), grid, count)
    spec2 = oracle_spectrum(V, extension_plane("robin", m, Theta=theta2 * eye), grid, count)
    lhs = spec1.morse_index - spec2.morse_index

    K0 = solution_space_trace(V, 0.0, steps, space=space)
    path_G = robin_plane_path(m, theta1, theta2, space=space)
    path_K = LagrangianPath(theta1, theta2, lambda s: K0, label="constant K_0")
    mas = maslov_two_paths(path_K, path_G, tol)

    kernels = _locate_robin_kernels(V, theta1, theta2, grid=scan_grid,
                                    scan_points=scan_points, count=count)
    crossings = []
    kernel_total = 0
    for theta_star, _ in kernels:
        dim = sp.intersection_dim(K0, path_G(theta_star), tol=1e-5)
        kernel_total += dim
        rep = crossing_form(path_G, K0, theta_star)
        crossings.append({
            "theta": theta_star,
            "dim": dim,
            "form_eigenvalues": list(rep.form_eigenvalues),
            "negative_definite": bool(rep.regular and rep.signature == -rep.intersection_dim),
            "regular": rep.regular,
        })

    ok = (lhs == kernel_total == mas.index
          and all(c["negative_definite"] for c in crossings))
    return {
        "lhs_morse_diff": lhs,
        "rhs_maslov": mas.index,
        "sum_kernel_dims": kernel_total,
        "mor_theta1": spec1.morse_index,
        "mor_theta2": spec2.morse_index,
        "crossings": crossings,
        "pass": bool(ok),
    }
