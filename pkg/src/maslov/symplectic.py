"""Finite-dimensional complex symplectic linear algebra.

A symplectic space is C^{2n} carrying a complex structure ``J`` with
``J^2 = -I`` and ``J* = -J``; the symplectic form is

    omega(u, v) = <J u, v>,

where the inner product is linear in the *first* argument and conjugate
linear in the second.  Lagrangian planes (half-dimensional subspaces on
which omega vanishes) are stored as orthonormal basis matrices.  Every
Lagrangian plane is also the graph of a unique unitary from ker(J + iI)
to ker(J - iI); that unitary is what the index machinery consumes, so it
is derived on demand and cached on the plane.

Kernel and rank decisions use singular-value thresholding with a relative
threshold of ``RANK_RTOL * sigma_max`` unless a caller overrides it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NotHalfDimensional,
    NotIsotropic,
    NotTransversal,
    RankDeficient,
    SingularGraph,
    ToleranceAmbiguous,
)

RANK_RTOL = 1e-9          # relative singular-value threshold for rank/kernel
STRUCTURE_TOL = 1e-12     # ||J^2 + I||, ||J* + J|| budget
ISOTROPY_TOL = 1e-10      # max |omega(b_i, b_j)| budget for plane validation

__all__ = [
    "SymplecticSpace",
    "LagrangianPlane",
    "GraphUnitary",
    "standard_space",
    "double_space",
    "diagonal_plane",
    "stack_planes",
    "plane_from_basis",
    "plane_from_graph",
    "graph_unitary",
    "intersection_dim",
    "intersection_basis",
    "annihilator",
    "ja_graph_decompose",
    "cayley",
    "restricted_graph_map",
    "principal_angles",
    "gap_distance",
    "random_lagrangian",
]


def ip(u, v):
    """Inner product <u, v>, linear in u, conjugate linear in v."""
    return np.vdot(v, u)


def _orthonormalize(columns):
    q, r = np.linalg.qr(np.asarray(columns, dtype=complex))
    # fix the phase of each column so the result is deterministic
    d = np.diagonal(r).copy()
    d[np.abs(d) < 1e-300] = 1.0
    return q * (d / np.abs(d))


class SymplecticSpace:
    """C^{2n} with a complex structure J and form omega(u,v) = <Ju, v>.

    The orthonormal eigenbases of -iJ (eigenvalue -1 spans ker(J + iI),
    eigenvalue +1 spans ker(J - iI)) are computed once at construction and
    pinned; all graph unitaries refer to them.
    """

    __slots__ = ("J", "dim", "n", "p_plus", "p_minus")

    def __init__(self, J, *, tol=STRUCTURE_TOL):
        J = np.asarray(J, dtype=complex)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] % 2:
            raise ValueError("J must be a square matrix of even dimension")
        dim = J.shape[0]
        eye = np.eye(dim)
        if np.linalg.norm(J @ J + eye, 2) > tol * max(1.0, dim):
            raise ValueError("J^2 != -I beyond tolerance")
        if np.linalg.norm(J.conj().T + J, 2) > tol * max(1.0, dim):
            raise ValueError("J* != -J beyond tolerance")
        self.J = J
        self.dim = dim
        self.n = dim // 2
        w, p = np.linalg.eigh(-1j * J)
        if not (np.all(np.abs(w[: self.n] + 1.0) < 1e-8)
                and np.all(np.abs(w[self.n:] - 1.0) < 1e-8)):
            raise ValueError("eigenvalues of -iJ are not +-1 with equal split")
        self.p_minus = np.ascontiguousarray(p[:, : self.n])   # ker(J + iI)
        self.p_plus = np.ascontiguousarray(p[:, self.n:])     # ker(J - iI)

    def omega(self, u, v):
        """omega(u, v) = <Ju, v> for single vectors."""
        return ip(self.J @ np.asarray(u, dtype=complex), np.asarray(v, dtype=complex))

    def omega_gram(self, B, C):
        """Matrix of omega between column sets: out[i, j] = omega(B[:,i], C[:,j])."""
        B = np.asarray(B, dtype=complex)
        C = np.asarray(C, dtype=complex)
        return (self.J @ B).T @ C.conj()

    def same_as(self, other):
        return self is other or (self.dim == other.dim and np.array_equal(self.J, other.J))

    def __repr__(self):
        return f"SymplecticSpace(dim={self.dim})"


@dataclass(frozen=True)
class GraphUnitary:
    """n x n unitary in the pinned bases of ker(J+iI) (domain) and ker(J-iI)."""

    space: SymplecticSpace
    matrix: np.ndarray


@dataclass(frozen=True)
class LagrangianPlane:
    """Half-dimensional isotropic subspace, stored as an orthonormal basis."""

    space: SymplecticSpace
    basis: np.ndarray                       # 2n x n, orthonormal columns
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self):
        return self.space.n

    @property
    def unitary(self):
        """Graph-unitary matrix of the plane (cached)."""
        if "U" not in self._cache:
            self._cache["U"] = graph_unitary(self).matrix
        return self._cache["U"]

    def projection(self):
        """Orthogonal projection onto the plane."""
        return self.basis @ self.basis.conj().T


def standard_space(p):
    """The boundary-data space C^p x C^p with J(f, g) = (-g, f).

    The induced form is omega((f1,g1),(f2,g2)) = <f1,g2> - <g1,f2>.
    """
    if p < 1:
        raise ValueError("p must be a positive integer")
    J = np.zeros((2 * p, 2 * p), dtype=complex)
    J[:p, p:] = -np.eye(p)
    J[p:, :p] = np.eye(p)
    return SymplecticSpace(J)


def double_space(space):
    """(X + X, omega + (-omega)): complex structure J + (-J)."""
    d = space.dim
    J2 = np.zeros((2 * d, 2 * d), dtype=complex)
    J2[:d, :d] = space.J
    J2[d:, d:] = -space.J
    return SymplecticSpace(J2)


def diagonal_plane(doubled, space):
    """The plane {(p, p)} in the doubled space."""
    d = space.dim
    cols = np.vstack([np.eye(d), np.eye(d)]) / np.sqrt(2.0)
    return plane_from_basis(doubled, cols)


def stack_planes(doubled, F1, F2):
    """F1 + F2 as a Lagrangian plane of the doubled space."""
    d = F1.space.dim
    B = np.zeros((2 * d, d), dtype=complex)
    B[:d, : F1.n] = F1.basis
    B[d:, F1.n:] = F2.basis
    return LagrangianPlane(doubled, B)


def plane_from_basis(space, columns, *, tol=ISOTROPY_TOL, rank_rtol=RANK_RTOL):
    """Orthonormalize ``columns`` and validate that their span is Lagrangian.

    Raises
    ------
    RankDeficient       if the columns are linearly dependent,
    NotHalfDimensional  if there are not exactly n of them,
    NotIsotropic        if omega does not vanish on the span.
    """
    columns = np.asarray(columns, dtype=complex)
    if columns.ndim != 2 or columns.shape[0] != space.dim:
        raise ValueError(f"columns must be {space.dim} x k")
    k = columns.shape[1]
    sv = np.linalg.svd(columns, compute_uv=False)
    if sv.size == 0 or sv[-1] <= rank_rtol * sv[0]:
        raise RankDeficient(f"columns have numerical rank < {k}")
    if k != space.n:
        raise NotHalfDimensional(f"need {space.n} columns, got {k}")
    q = _orthonormalize(columns)
    resid = np.max(np.abs(space.omega_gram(q, q)))
    if resid > tol:
        raise NotIsotropic(f"max |omega(b_i, b_j)| = {resid:.3e} > {tol:.1e}")
    return LagrangianPlane(space, q)


def graph_unitary(plane, *, unitarity_tol=1e-10):
    """The unitary U with plane = {y + Uy : y in ker(J + iI)}.

    Matrix entries refer to the space's pinned eigenbases and are therefore
    convention-dependent; only spectra of products U V^{-1} are invariant.
    """
    space = plane.space
    a = space.p_plus.conj().T @ plane.basis
    b = space.p_minus.conj().T @ plane.basis
    sv = np.linalg.svd(b, compute_uv=False)
    if sv[-1] <= 1e-12 * max(1.0, sv[0]):
        raise SingularGraph("plane is not transversal to ker(J - iI)")
    U = a @ np.linalg.inv(b)
    n = space.n
    drift = np.linalg.norm(U.conj().T @ U - np.eye(n), 2)
    if drift > unitarity_tol * max(1.0, n):
        raise SingularGraph(f"recovered map is not unitary (|U*U - I| = {drift:.3e})")
    return GraphUnitary(space, U)


def plane_from_graph(space, U):
    """Plane {y + Uy} from an n x n unitary in the pinned bases."""
    U = np.asarray(U, dtype=complex)
    B = (space.p_minus + space.p_plus @ U) / np.sqrt(2.0)
    return plane_from_basis(space, B)


def _unit_phases(F, Z):
    """Phases of the eigenvalues of U_F V_Z^{-1} in (-pi, pi]."""
    W = F.unitary @ Z.unitary.conj().T
    return np.angle(np.linalg.eigvals(W))


def intersection_dim(F, Z, tol=1e-8, *, cross_check=False):
    """dim(F cap Z) = number of eigenvalues of U_F V_Z^{-1} at 1.

    Eigenvalues are compared with 1 by angular distance after radial
    normalization.  Raises ToleranceAmbiguous when some eigenvalue lies in
    the guard band (tol, 2*tol]; the caller should refine in that case.
    With ``cross_check=True`` the count is verified against the count of
    principal angles below ``tol`` between the two basis matrices.
    """
    if not F.space.same_as(Z.space):
        raise ValueError("planes live in different spaces")
    phases = np.abs(_unit_phases(F, Z))
    d = int(np.count_nonzero(phases <= tol))
    amb = phases[(phases > tol) & (phases <= 2.0 * tol)]
    if amb.size:
        raise ToleranceAmbiguous(
            f"eigenvalue phase(s) {amb} in guard band ({tol:.1e}, {2*tol:.1e}]")
    if cross_check:
        angles = principal_angles(F.basis, Z.basis)
        d_svd = int(np.count_nonzero(angles <= tol))
        if d_svd != d:
            raise ToleranceAmbiguous(
                f"unit-circle count {d} != principal-angle count {d_svd}")
    return d


def intersection_basis(F, Z, tol=1e-8):
    """Orthonormal basis of F cap Z via principal vectors with angle <= tol."""
    d = int(np.count_nonzero(principal_angles(F.basis, Z.basis) <= tol))
    if d == 0:
        return np.zeros((F.space.dim, 0), dtype=complex)
    M = F.basis.conj().T @ Z.basis
    u, _, _ = np.linalg.svd(M)     # singular values descending = angles ascending
    return _orthonormalize(F.basis @ u[:, :d])


def annihilator(space, F, *, rank_rtol=RANK_RTOL):
    """Orthonormal basis of {u : omega(u, v) = 0 for all v in span(F)}.

    ``F`` may be a LagrangianPlane or a 2n x k matrix of spanning columns.
    For a Lagrangian plane the annihilator equals the plane itself.
    """
    B = F.basis if isinstance(F, LagrangianPlane) else np.asarray(F, dtype=complex)
    if B.shape[1] == 0:
        return np.eye(space.dim, dtype=complex)
    # omega(u, b) = 0  <=>  (b^H J) u = 0 for each basis column b
    M = B.conj().T @ space.J
    _, s, vh = np.linalg.svd(M)
    rank = int(np.count_nonzero(s > rank_rtol * s[0]))
    return vh[rank:].conj().T


def ja_graph_decompose(V, F, *, rtol=1e-8):
    """Write V = {x + J A x : x in F} and return the matrix of A on F's basis.

    A is Hermitian whenever the decomposition exists.  Raises NotTransversal
    when V meets JF, in which case no such A exists.
    """
    if not V.space.same_as(F.space):
        raise ValueError("planes live in different spaces")
    space = F.space
    JB = space.J @ F.basis
    P = F.basis.conj().T @ V.basis
    Q = JB.conj().T @ V.basis
    sv = np.linalg.svd(P, compute_uv=False)
    if sv[-1] <= rtol * max(1.0, sv[0]):
        raise NotTransversal("V is not transversal to JF")
    return Q @ np.linalg.inv(P)


def cayley(A):
    """Cayley transform (I + iA)(I - iA)^{-1} of a Hermitian matrix."""
    A = np.asarray(A, dtype=complex)
    eye = np.eye(A.shape[0])
    return (eye + 1j * A) @ np.linalg.inv(eye - 1j * A)


def restricted_graph_map(V, F):
    """The graph unitary of V conjugated back onto F.

    Returns the matrix (in F's basis) of the map U_F defined by
    U(x + iJx) = U_F x - iJ U_F x; for V = {x + JAx} it equals cayley(A).
    """
    space = F.space
    B = F.basis
    JB = space.J @ B
    U = V.unitary
    lift = space.p_minus.conj().T @ (B + 1j * JB)     # F -> ker(J+iI) coords
    lower = 0.5 * (B - 1j * JB).conj().T @ space.p_plus
    return lower @ U @ lift


def principal_angles(B1, B2):
    """Principal angles between column spans of orthonormal matrices, ascending.

    Small angles come from the sine-based formula (SVD of the residual after
    projecting one basis onto the other), large ones from the cosine SVD, so
    the result is accurate at both ends of [0, pi/2].
    """
    B1 = np.asarray(B1, dtype=complex)
    B2 = np.asarray(B2, dtype=complex)
    cross = B1.conj().T @ B2
    sig = np.linalg.svd(cross, compute_uv=False)          # cosines, descending
    theta = np.arccos(np.clip(sig, 0.0, 1.0))             # angles, ascending
    mu = np.linalg.svd(B2 - B1 @ cross, compute_uv=False)  # sines, descending
    k = min(len(sig), len(mu))
    sines = np.arcsin(np.clip(mu[::-1][:k], 0.0, 1.0))
    small = sig[:k] ** 2 >= 0.5
    theta[:k][small] = sines[small]
    return theta


def gap_distance(F1, F2):
    """Gap metric ||P_1 - P_2|| between two planes (operator norm)."""
    return float(np.linalg.norm(F1.projection() - F2.projection(), 2))


def haar_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_lagrangian(space, rng):
    """Plane with Haar-random graph unitary."""
    return plane_from_graph(space, haar_unitary(space.n, rng))
