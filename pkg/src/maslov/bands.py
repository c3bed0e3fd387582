"""Quasi-periodic Laplacian on a lattice cell and its plane-wave truncation.

For a cell with basis vectors a_1..a_n and dual matrix A (A a_j = 2 pi e_j),
the quasi-periodic Laplacian with phases theta in [0,1)^n has the explicit
spectrum { |A^T (theta - k)|^2 : k in Z^n }.  The scaled family

    L^t = -t^{-2} Laplacian_theta + V(t .),      t in (0, 1],

is discretized in the plane-wave basis indexed by |k|_inf <= K: the kinetic
part is diagonal and the potential couples modes through the Fourier
coefficients of x -> V(t x), which for a finitely supported mode table are
available in closed form (no quadrature): the (k, k') block is
sum_q c_q D(t q + k - k') with D(w) = prod_j e^{i pi w_j} sinc(w_j).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .engine import flow_events, spectral_flow
from .errors import NotHermitian, TauNotSmallEnough, TruncationNotConverged

__all__ = [
    "LatticeCell",
    "FourierTruncation",
    "ScaledFamily",
    "exact_laplacian_spectrum",
    "galerkin_matrix",
    "eigenvalues_at",
    "morse_vs_t",
    "morse_zero_threshold",
    "verify_y19",
]

HERMITICITY_TOL = 1e-12
TAU_FLOOR = 1e-3


@dataclass(frozen=True)
class LatticeCell:
    """Lattice cell spanned by basis vectors, with quasi-periodicity phases."""

    vectors: np.ndarray          # n x n, column j = a_j
    theta: np.ndarray            # phases in [0, 1)^n
    A: np.ndarray = field(init=False)
    volume: float = field(init=False)

    def __init__(self, vectors, theta=None):
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        n = vectors.shape[0]
        if vectors.shape != (n, n) or abs(np.linalg.det(vectors)) < 1e-14:
            raise ValueError("cell vectors must be square and independent")
        if theta is None:
            theta = np.zeros(n)
        theta = np.asarray(theta, dtype=float).reshape(n)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "A", 2.0 * np.pi * np.linalg.inv(vectors))
        object.__setattr__(self, "volume", float(abs(np.linalg.det(vectors))))

    @property
    def n(self):
        return self.vectors.shape[0]

    def kinetic(self, ks):
        """|A^T (theta - k)|^2 for an array of integer mode vectors."""
        ks = np.atleast_2d(np.asarray(ks, dtype=float))
        w = (self.theta[None, :] - ks) @ self.A
        return np.sum(w * w, axis=1)


def cell_1d(length=1.0, theta=0.0):
    return LatticeCell([[length]], [theta])


def square_cell(theta=(0.0, 0.0)):
    return LatticeCell(np.eye(2), theta)


@dataclass(frozen=True)
class FourierTruncation:
    """Plane-wave modes |k|_inf <= K for matrix size m."""

    K: int
    n: int
    m: int = 1

    @property
    def modes(self):
        rng = range(-self.K, self.K + 1)
        return list(itertools.product(rng, repeat=self.n))

    @property
    def size(self):
        return self.m * (2 * self.K + 1) ** self.n

    def doubled(self):
        return FourierTruncation(max(2 * self.K, 1), self.n, self.m)


class ScaledFamily:
    """-t^{-2} Laplacian_theta + V(t .) with V from a Fourier mode table.

    ``modes`` maps integer tuples q to m x m coefficient matrices c_q with
    c_{-q} = c_q^*; V(x) = sum_q c_q exp(i (A^T q) . x).
    """

    def __init__(self, cell, modes, m=None):
        self.cell = cell
        table = {}
        for q, c in dict(modes).items():
            q = tuple(int(x) for x in (q if np.iterable(q) else (q,)))
            if len(q) != cell.n:
                raise ValueError(f"mode {q} has wrong dimension")
            table[q] = np.atleast_2d(np.asarray(c, dtype=complex))
        sizes = {c.shape for c in table.values()} or {(1, 1)}
        if len(sizes) != 1:
            raise ValueError("all coefficients must share one shape")
        mm = next(iter(sizes))[0]
        if m is not None and m != mm:
            raise ValueError(f"m={m} does not match coefficient size {mm}")
        for q, c in table.items():
            neg = tuple(-x for x in q)
            partner = table.get(neg)
            if partner is None or np.linalg.norm(partner - c.conj().T) > \
                    HERMITICITY_TOL * max(1.0, np.linalg.norm(c)):
                raise NotHermitian(f"mode {neg} is not the adjoint of mode {q}")
        self.modes = table
        self.m = mm

    def value_at_zero(self):
        out = np.zeros((self.m, self.m), dtype=complex)
        for c in self.modes.values():
            out += c
        return out

    def sup_bound(self):
        """Upper bound on sup |V| from the coefficient norms."""
        return float(sum(np.linalg.norm(c, 2) for c in self.modes.values()))


def exact_laplacian_spectrum(cell, count, m=1):
    """Lowest ``count`` values of |A^T(theta - k)|^2, m-fold per mode."""
    if count < 1:
        raise ValueError("count must be positive")
    sigma_min = np.linalg.svd(cell.A, compute_uv=False)[-1]
    R = 4
    while True:
        ks = np.array(list(itertools.product(range(-R, R + 1), repeat=cell.n)))
        vals = np.sort(np.repeat(cell.kinetic(ks), m))
        # everything outside |k|_inf <= R is at least (sigma_min R)^2
        if len(vals) >= count and vals[count - 1] < (sigma_min * R) ** 2:
            return vals[:count]
        R *= 2


def _coefficient(family, t, diff):
    """Fourier block of x -> V(t x) on the cell at integer offset ``diff``."""
    out = np.zeros((family.m, family.m), dtype=complex)
    d = np.asarray(diff, dtype=float)
    for q, c in family.modes.items():
        w = t * np.asarray(q, dtype=float) + d
        out += c * np.prod(np.exp(1j * np.pi * w) * np.sinc(w))
    return out


def galerkin_matrix(family, t, trunc):
    """Hermitian plane-wave matrix of -t^{-2} Laplacian_theta + V(t .)."""
    if not 0.0 < t <= 1.0:
        raise ValueError("t must be in (0, 1]")
    cell = family.cell
    m = family.m
    if trunc.m != m or trunc.n != cell.n:
        raise ValueError("truncation does not match the family")
    modes = trunc.modes
    M = len(modes)
    kin = cell.kinetic(np.asarray(modes)) / (t * t)

    H = np.zeros((M, m, M, m), dtype=complex)
    diag = np.arange(M)
    H[diag, :, diag, :] = kin[:, None, None] * np.eye(m)

    # potential blocks depend only on the mode difference
    diffs = {}
    for i, ki in enumerate(modes):
        for j, kj in enumerate(modes):
            d = tuple(a - b for a, b in zip(ki, kj))
            block = diffs.get(d)
            if block is None:
                block = _coefficient(family, t, d)
                diffs[d] = block
            H[i, :, j, :] += block

    H = H.reshape(M * m, M * m)
    return 0.5 * (H + H.conj().T)


def eigenvalues_at(family, t, trunc):
    return np.linalg.eigvalsh(galerkin_matrix(family, t, trunc))


def morse_vs_t(family, t_grid, trunc, *, check_truncation=True, check_stride=1):
    """Morse index and eigenvalue tracks of the scaled family along a t-grid.

    With ``check_truncation`` the Morse index is recomputed at cutoff 2K
    (every ``check_stride``-th grid point) and any disagreement raises
    TruncationNotConverged.
    """
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    tracks = np.vstack([eigenvalues_at(family, t, trunc) for t in t_grid])
    morse = np.count_nonzero(tracks < 0.0, axis=1)
    if check_truncation:
        big = trunc.doubled()
        for idx in range(0, len(t_grid), max(1, check_stride)):
            vals = eigenvalues_at(family, t_grid[idx], big)
            mor2 = int(np.count_nonzero(vals < 0.0))
            if mor2 != morse[idx]:
                raise TruncationNotConverged(
                    f"Morse index at t={t_grid[idx]} changed from "
                    f"{morse[idx]} (K={trunc.K}) to {mor2} (K={big.K})")
    return t_grid, morse, tracks


def morse_zero_threshold(family, trunc):
    """A computable t below which the Morse index must vanish.

    Every eigenvalue of L^t is at least t^{-2} kin_min - sup|V|, so the
    index is zero whenever t^2 < kin_min / sup|V|.  Returns 0 when theta = 0
    (kin_min = 0 gives no kinetic protection).
    """
    kin_min = float(np.min(exact_laplacian_spectrum(family.cell, 1, m=1)))
    bound = family.sup_bound()
    if kin_min <= 0.0 or bound == 0.0:
        return 0.0 if bound else 1.0
    return float(np.sqrt(kin_min / bound))


def _stabilized_morse(family, trunc, start, target=None, *, floor=TAU_FLOOR,
                      needed=3):
    """Geometric descent of the scale until the Morse index stabilizes."""
    t = start
    run = []
    while t >= floor:
        mor = int(np.count_nonzero(eigenvalues_at(family, t, trunc) < 0.0))
        run.append((t, mor))
        tail = [m for _, m in run[-needed:]]
        if len(tail) == needed and len(set(tail)) == 1 and \
                (target is None or tail[0] == target):
            return run[-needed][0], tail[0]
        t /= 2.0
    raise TauNotSmallEnough(
        f"Morse index did not stabilize before the scale floor {floor}")


def verify_y19(family, tau, trunc, *, t_points=200, check_truncation=True,
               check_stride=1):
    """Scaled-family identity checks at desk scale.

    Always checks the flow identity Mor(L^tau) - Mor(L^1) = SpFlow over
    [tau, 1] with the flow taken from the eigenvalue-track crossing
    inventory.  For theta != 0 it also finds a scale tau0 with vanishing
    Morse index and confirms Mor(L^1) = -SpFlow over [tau0, 1]; for
    theta = 0 with invertible V(0) it confirms that the small-scale Morse
    index equals the Morse index of the matrix V(0).
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    cell = family.cell
    t_grid = np.linspace(tau, 1.0, t_points)
    t_grid, morse, tracks = morse_vs_t(family, t_grid, trunc,
                                       check_truncation=check_truncation,
                                       check_stride=check_stride)
    flow = spectral_flow(tracks, 0.0)
    events = flow_events(t_grid, tracks, 0.0)
    mor_tau, mor_one = int(morse[0]), int(morse[-1])
    report = {
        "theta": [float(x) for x in cell.theta],
        "tau": float(tau),
        "cutoff": trunc.K,
        "mor_tau": mor_tau,
        "mor_one": mor_one,
        "spflow": int(flow),
        "events_flow": int(sum(d for _, d, _ in events)),
        "crossings": [{"t": tc, "direction": d, "track": j}
                      for tc, d, j in events],
        "y21_pass": bool(mor_tau - mor_one == flow
                         and sum(d for _, d, _ in events) == flow),
    }

    if np.any(np.abs(cell.theta) > 0.0):
        tau0, mor0 = _stabilized_morse(family, trunc, tau, target=0)
        grid0 = np.linspace(tau0, 1.0, t_points)
        _, _, tracks0 = morse_vs_t(family, grid0, trunc, check_truncation=False)
        flow0 = spectral_flow(tracks0, 0.0)
        report.update({
            "tau0": float(tau0),
            "mor_tau0": mor0,
            "spflow_from_tau0": int(flow0),
            "y22_pass": bool(mor0 == 0 and mor_one == -flow0),
        })
    else:
        v0 = family.value_at_zero()
        eig0 = np.linalg.eigvalsh(v0)
        if np.min(np.abs(eig0)) <= 1e-10:
            report["y23_pass"] = None          # V(0) not invertible; no claim
        else:
            target = int(np.count_nonzero(eig0 < 0.0))
            tau0, mor0 = _stabilized_morse(family, trunc, tau)
            report.update({
                "tau0": float(tau0),
                "mor_tau0": mor0,
                "mor_v0": target,
                "y23_pass": bool(mor0 == target),
            })

    report["pass"] = bool(report["y21_pass"]
                          and report.get("y22_pass", True) is not False
                          and report.get("y23_pass", True) is not False)
    return report
