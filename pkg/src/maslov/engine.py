"""Maslov index of Lagrangian-plane paths and spectral flow of eigenvalue tracks.

The index of a path s -> F_s against a reference plane Z is computed from
the unit-circle spectral flow of W(s) = U_s V^{-1}: on each subinterval of
an adaptively certified partition, an arc width eps in (0, pi) is chosen so
that e^{+-i eps} stays out of Spec(W(s)) on the subinterval, and the index
accumulates the change in the number of eigenvalue phases inside the closed
arc [0, eps].  The closed-arc convention is used throughout: an eigenvalue
exactly at 1 belongs to the arc, so a crossing sitting at the left path
endpoint with positive-definite form contributes nothing, while the same
crossing at the right endpoint contributes its full positive count.

Certification is sampling-based: eigenvalue phases are tracked through
Chebyshev-distributed samples, tracks that interact with 1 on the
subinterval (the crossing cluster) must be separated from the bystanders by
a clean annular gap, and the per-step phase movement must be small against
that gap; otherwise the subinterval is bisected, up to a maximum depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symplectic as sp
from .errors import (
    AmbiguousCrossing,
    DiscontinuousPath,
    IrregularCrossing,
    NoCrossing,
    NotGraphRepresentable,
    PartitionFailure,
)

__all__ = [
    "LagrangianPath",
    "CrossingReport",
    "MaslovResult",
    "maslov_index",
    "maslov_two_paths",
    "crossing_form",
    "maslov_via_crossings",
    "spectral_flow",
    "flow_events",
]

DEFAULT_TOL = 1e-8       # angular band treated as "eigenvalue at 1"
MAX_DEPTH = 20           # bisection depth for partition certification
SAMPLES_PER_INTERVAL = 5
GAP_JUMP = 0.5           # admissible gap-metric jump between partition points
RATIO_MIN = 4.0          # required separation, crossing cluster vs bystanders
MOVE_FACTOR = 0.45       # admissible phase movement relative to the gap
CLUSTER_CAP = 0.7        # crossing cluster must stay this close to 1 (radians)
DEGENERACY_RTOL = 1e-6   # form eigenvalues below this (relative) are degenerate


class LagrangianPath:
    """Sampled one-parameter family of Lagrangian planes on [a, b].

    ``sampler`` must be a pure, deterministic function of the parameter,
    evaluable at arbitrary points; values are cached, so refinement is cheap.
    """

    def __init__(self, a, b, sampler, grid=None, label=""):
        if not b > a:
            raise ValueError("need b > a")
        self.a = float(a)
        self.b = float(b)
        self.sampler = sampler
        self.label = label
        if grid is None:
            grid = np.linspace(self.a, self.b, 17)
        g = np.asarray(sorted({float(s) for s in grid} | {self.a, self.b}))
        if g[0] < self.a or g[-1] > self.b:
            raise ValueError("grid points outside [a, b]")
        self.grid = g
        self._cache = {}

    def __call__(self, s):
        s = float(s)
        plane = self._cache.get(s)
        if plane is None:
            plane = self.sampler(s)
            self._cache[s] = plane
        return plane

    def prime(self, points, planes):
        """Pre-fill the sample cache (used by batched suppliers)."""
        for s, plane in zip(points, planes):
            self._cache[float(s)] = plane

    def restricted(self, a, b):
        inner = self.grid[(self.grid > a) & (self.grid < b)]
        sub = LagrangianPath(a, b, self.sampler,
                             grid=np.concatenate([[a], inner, [b]]),
                             label=self.label)
        sub._cache = self._cache
        return sub

    def reversed(self):
        a, b = self.a, self.b
        return LagrangianPath(a, b, lambda s: self(a + b - s),
                              grid=np.sort(a + b - self.grid),
                              label=self.label + "~reversed")


@dataclass(frozen=True)
class CrossingReport:
    """One conjugate point: location, multiplicity, optional form data.

    From the spectral-flow method ``signature`` is the net arc-count change
    at the crossing and ``form_eigenvalues``/``regular`` are None; from the
    crossing-form method ``signature`` is n_+ - n_- of the form beyond the
    degeneracy band.
    """

    location: float
    intersection_dim: int
    form_eigenvalues: tuple | None = None
    signature: int | None = None
    regular: bool | None = None

    def _band(self):
        eigs = np.asarray(self.form_eigenvalues)
        return DEGENERACY_RTOL * max(np.max(np.abs(eigs)), 1e-300)

    def n_plus(self):
        return int(np.count_nonzero(np.asarray(self.form_eigenvalues) > self._band()))

    def n_minus(self):
        return int(np.count_nonzero(np.asarray(self.form_eigenvalues) < -self._band()))


@dataclass(frozen=True)
class MaslovResult:
    index: int
    partition: tuple            # ((s0, s1, eps), ...)
    crossings: tuple            # (CrossingReport, ...)
    method: str                 # "spectral_flow_def" | "crossing_form"

    def to_dict(self):
        return {
            "index": self.index,
            "method": self.method,
            "partition": [{"s0": s0, "s1": s1, "eps": e}
                          for s0, s1, e in self.partition],
            "crossings": [
                {
                    "s": c.location,
                    "dim": c.intersection_dim,
                    "eigs": None if c.form_eigenvalues is None
                    else [float(x) for x in c.form_eigenvalues],
                    "signature": c.signature,
                    "regular": c.regular,
                }
                for c in self.crossings
            ],
        }


def _wrap(d):
    """Wrap angular differences to [-pi, pi)."""
    return (d + np.pi) % (2.0 * np.pi) - np.pi


class _PhaseSampler:
    """Sorted eigenvalue phases of W(s) = U_s V^{-1}, cached per parameter."""

    def __init__(self, path, Z):
        self.path = path
        self.Vh = Z.unitary.conj().T
        self._cache = {}

    def __call__(self, s):
        s = float(s)
        out = self._cache.get(s)
        if out is None:
            W = self.path(s).unitary @ self.Vh
            out = np.sort(np.angle(np.linalg.eigvals(W)))
            self._cache[s] = out
        return out


def _count_in_arc(phases, eps, tol):
    """Phases in the closed arc [0, eps]; the band [-tol, 0) counts as at 1."""
    return int(np.count_nonzero((phases >= -tol) & (phases <= eps)))


def _chebyshev_nodes(s0, s1, q):
    x = np.cos(np.pi * np.arange(q) / (q - 1))[::-1]   # Lobatto nodes
    return s0 + (s1 - s0) * (x + 1.0) / 2.0


def _track_phases(rows):
    """Align sampled phase rows into tracks, tolerating one cyclic wrap."""
    q = len(rows)
    n = len(rows[0])
    tracks = np.empty((q, n))
    tracks[0] = rows[0]
    moves = np.zeros((q - 1, n))
    shifts = range(-2, 3) if n > 1 else (0,)
    for i in range(1, q):
        prev = tracks[i - 1]
        best = None
        for r in shifts:
            cand = np.roll(rows[i], -r)
            moved = np.abs(_wrap(cand - prev))
            cost = moved.sum()
            if best is None or cost < best[0]:
                best = (cost, cand, moved)
        tracks[i] = best[1]
        moves[i - 1] = best[2]
    return tracks, moves


def _certify(phase_at, s0, s1, tol, q=SAMPLES_PER_INTERVAL):
    """Return an admissible arc width eps for [s0, s1], or None to refine."""
    xs = _chebyshev_nodes(s0, s1, q)
    rows = [phase_at(s) for s in xs]
    tracks, moves = _track_phases(rows)
    absphi = np.abs(tracks)
    track_move = moves.max(axis=0) if moves.size else np.zeros(tracks.shape[1])

    # a track belongs to the crossing cluster if it can reach 1 on the interval
    near_zero = absphi.min(axis=0) <= np.maximum(2.0 * tol, 2.0 * track_move)
    sign_flip = np.zeros(tracks.shape[1], dtype=bool)
    for i in range(len(xs) - 1):
        a, b = tracks[i], tracks[i + 1]
        flips = (np.sign(a) != np.sign(b)) & (np.maximum(np.abs(a), np.abs(b)) < 0.5 * np.pi)
        sign_flip |= flips
    cluster = near_zero | sign_flip

    m_cluster = absphi[:, cluster].max() if np.any(cluster) else 0.0
    m_rest = absphi[:, ~cluster].min() if np.any(~cluster) else np.pi
    base = max(m_cluster, 2.0 * tol)
    if m_rest < RATIO_MIN * base:
        return None
    if m_cluster > CLUSTER_CAP:
        return None
    if moves.size and moves.max() > MOVE_FACTOR * (m_rest - m_cluster):
        return None
    return float(np.sqrt(base * m_rest))


def _localize(phase_at, s0, s1, eps, tol, width_tol):
    """Bisect to the parameters where the arc count jumps.

    Returns (location, net_count_change) pairs.  Crossing pairs that cancel
    within the width tolerance are not inventoried; they do not contribute
    to the index.
    """
    events = []
    stack = [(s0, _count_in_arc(phase_at(s0), eps, tol),
              s1, _count_in_arc(phase_at(s1), eps, tol))]
    while stack:
        a, ga, b, gb = stack.pop()
        if gb == ga:
            continue
        if b - a <= width_tol:
            events.append((0.5 * (a + b), gb - ga))
            continue
        mid = 0.5 * (a + b)
        gm = _count_in_arc(phase_at(mid), eps, tol)
        stack.append((a, ga, mid, gm))
        stack.append((mid, gm, b, gb))
    return sorted(events)


def maslov_index(path, Z, tol=DEFAULT_TOL, *, max_depth=MAX_DEPTH,
                 gap_jump=GAP_JUMP, locate_crossings=True,
                 check_partition=False):
    """Maslov index of ``path`` against the reference plane ``Z``.

    Implements the closed-arc spectral-flow definition; the result is
    independent of the accepted partition (set ``check_partition=True`` to
    re-run on a refined partition and verify).

    Raises
    ------
    PartitionFailure    no arc width could be certified at max refinement,
    DiscontinuousPath   gap-metric jump persists at max refinement.
    """
    phase_at = _PhaseSampler(path, Z)
    grid = path.grid
    work = [(grid[i], grid[i + 1], 0) for i in range(len(grid) - 1)][::-1]
    partition = []
    index = 0
    crossings = []
    span = path.b - path.a
    width_tol = max(1e-12, 1e-10 * span)

    while work:
        s0, s1, depth = work.pop()
        jumpy = sp.gap_distance(path(s0), path(s1)) > gap_jump
        eps = None if jumpy else _certify(phase_at, s0, s1, tol)
        if eps is None:
            if depth >= max_depth:
                if jumpy:
                    raise DiscontinuousPath(
                        f"gap-metric jump on [{s0}, {s1}] after max refinement")
                raise PartitionFailure(
                    f"no admissible arc width on [{s0}, {s1}] after max "
                    "refinement; path too wild or tolerance too tight")
            mid = 0.5 * (s0 + s1)
            work.append((mid, s1, depth + 1))
            work.append((s0, mid, depth + 1))
            continue
        k0 = _count_in_arc(phase_at(s0), eps, tol)
        k1 = _count_in_arc(phase_at(s1), eps, tol)
        index += k1 - k0
        partition.append((s0, s1, eps))
        if locate_crossings and k1 != k0:
            for loc, jump in _localize(phase_at, s0, s1, eps, tol, width_tol):
                crossings.append(CrossingReport(
                    location=loc, intersection_dim=abs(jump), signature=jump))

    # crossings sitting exactly at the path endpoints never change the count
    merge_tol = max(1e-8 * span, 4.0 * width_tol)
    for s_end in (path.a, path.b):
        d_end = int(np.count_nonzero(np.abs(phase_at(s_end)) <= tol))
        if d_end:
            crossings = [c for c in crossings
                         if abs(c.location - s_end) > merge_tol]
            crossings.append(CrossingReport(location=s_end,
                                            intersection_dim=d_end,
                                            signature=0))
    crossings.sort(key=lambda c: c.location)
    merged = []
    for c in crossings:
        if merged and abs(c.location - merged[-1].location) <= merge_tol:
            # simultaneous events are one higher-multiplicity crossing
            prev = merged.pop()
            merged.append(CrossingReport(
                location=prev.location,
                intersection_dim=prev.intersection_dim + c.intersection_dim,
                signature=(prev.signature or 0) + (c.signature or 0)))
        else:
            merged.append(c)
    crossings = merged

    result = MaslovResult(index=index, partition=tuple(partition),
                          crossings=tuple(crossings), method="spectral_flow_def")

    if check_partition:
        mids = 0.5 * (grid[:-1] + grid[1:])
        refined = LagrangianPath(path.a, path.b, path.sampler,
                                 grid=np.sort(np.concatenate([grid, mids])),
                                 label=path.label)
        refined._cache = path._cache
        again = maslov_index(refined, Z, tol, max_depth=max_depth,
                             gap_jump=gap_jump, locate_crossings=False)
        if again.index != result.index:
            raise PartitionFailure(
                f"partition dependence detected: {result.index} vs {again.index}")
    return result


def maslov_two_paths(path1, path2, tol=DEFAULT_TOL, **kwargs):
    """Maslov index of two moving planes.

    Forms the doubled space (X + X, omega + (-omega)) with structure
    J + (-J), the path s -> F1(s) + F2(s), and computes its index against
    the diagonal plane.  With a constant second path this equals
    ``maslov_index(path1, Z)``.
    """
    if path1.a != path2.a or path1.b != path2.b:
        raise ValueError("paths must share the parameter interval")
    space = path1(path1.a).space
    doubled = sp.double_space(space)
    diag = sp.diagonal_plane(doubled, space)
    grid = np.union1d(path1.grid, path2.grid)
    prod = LagrangianPath(
        path1.a, path1.b,
        lambda s: sp.stack_planes(doubled, path1(s), path2(s)),
        grid=grid, label=f"({path1.label})+({path2.label})")
    return maslov_index(prod, diag, tol, **kwargs)


def crossing_form(path, Z, s_star, h=None, *, cross_tol=1e-5,
                  fd_rtol=1e-4, degeneracy_rtol=DEGENERACY_RTOL):
    """Crossing form of ``path`` against ``Z`` at the conjugate point s_star.

    Nearby planes F_s are represented as graphs {u + R_s u} over F_{s_star};
    the form Q(u, v) = omega(u, dR/ds v) is evaluated on the intersection
    basis by central differences with Richardson extrapolation.  A form
    eigenvalue inside the degeneracy band marks the crossing irregular; it
    is reported, never silently signed.
    """
    F0 = path(s_star)
    space = F0.space
    inter = sp.intersection_basis(F0, Z, tol=cross_tol)
    if inter.shape[1] == 0:
        raise NoCrossing(f"trivial intersection at s = {s_star}")

    B0 = F0.basis
    u_full, _, _ = np.linalg.svd(B0, full_matrices=True)
    C0 = u_full[:, space.n:]            # orthogonal complement of F0

    def graph_matrix(s):
        Bs = path(s).basis
        P = B0.conj().T @ Bs
        sv = np.linalg.svd(P, compute_uv=False)
        if sv[-1] < 0.1:
            raise NotGraphRepresentable(
                f"plane at s = {s} is not a graph over the crossing plane")
        return (C0.conj().T @ Bs) @ np.linalg.inv(P)

    if h is None:
        h = 1e-4 * (path.b - path.a)

    for _ in range(4):
        lo_ok = s_star - h >= path.a
        hi_ok = s_star + h <= path.b
        try:
            if lo_ok and hi_ok:
                d1 = (graph_matrix(s_star + h) - graph_matrix(s_star - h)) / (2 * h)
                d2 = (graph_matrix(s_star + h / 2) - graph_matrix(s_star - h / 2)) / h
                rdot = (4.0 * d2 - d1) / 3.0
            elif hi_ok:
                d1 = graph_matrix(s_star + h) / h
                d2 = graph_matrix(s_star + h / 2) / (h / 2)
                rdot = 2.0 * d2 - d1
            else:
                d1 = -graph_matrix(s_star - h) / h
                d2 = -graph_matrix(s_star - h / 2) / (h / 2)
                rdot = 2.0 * d2 - d1
        except NotGraphRepresentable:
            h /= 4.0
            continue
        scale = max(np.linalg.norm(rdot, 2), 1e-300)
        if np.linalg.norm(d2 - d1, 2) / scale <= fd_rtol:
            break
        h /= 4.0
    else:
        raise NotGraphRepresentable(
            f"finite-difference derivative did not settle at s = {s_star}")

    coords = B0.conj().T @ inter                   # intersection in F0 coords
    images = C0 @ (rdot @ coords)                  # dR/ds applied, ambient
    Q = space.omega_gram(inter, images)
    Q = 0.5 * (Q + Q.conj().T)
    eigs = np.linalg.eigvalsh(Q)
    band = degeneracy_rtol * max(np.max(np.abs(eigs)), 1e-300)
    n_plus = int(np.count_nonzero(eigs > band))
    n_minus = int(np.count_nonzero(eigs < -band))
    regular = bool(n_plus + n_minus == len(eigs) and len(eigs) > 0)
    return CrossingReport(
        location=float(s_star),
        intersection_dim=inter.shape[1],
        form_eigenvalues=tuple(float(x) for x in eigs),
        signature=n_plus - n_minus,
        regular=regular,
    )


def maslov_via_crossings(path, Z, locations=None, tol=DEFAULT_TOL, h=None):
    """Maslov index from crossing-form signatures.

    Interior regular crossings contribute their signature; a crossing at the
    left endpoint contributes -n_-, at the right endpoint +n_+.  Refuses on
    irregular crossings (fall back to ``maslov_index``).  Must agree with
    ``maslov_index`` whenever all crossings are regular.
    """
    if locations is None:
        base = maslov_index(path, Z, tol)
        locations = [c.location for c in base.crossings]
    end_tol = 1e-9 * (path.b - path.a)
    reports = []
    index = 0
    for s_star in locations:
        rep = crossing_form(path, Z, s_star, h=h)
        if not rep.regular:
            raise IrregularCrossing(
                f"crossing at s = {s_star} has a degenerate form; "
                "use the spectral-flow definition")
        reports.append(rep)
        if abs(s_star - path.a) <= end_tol:
            index -= rep.n_minus()
        elif abs(s_star - path.b) <= end_tol:
            index += rep.n_plus()
        else:
            index += rep.signature
    return MaslovResult(index=index, partition=(),
                        crossings=tuple(reports), method="crossing_form")


def _as_track_matrix(tracks):
    arr = np.asarray(tracks, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    elif isinstance(tracks, (list, tuple)) and np.ndim(tracks[0]) == 1:
        arr = np.column_stack([np.asarray(tr, dtype=float) for tr in tracks])
    return np.sort(arr, axis=1)


def spectral_flow(tracks, through=0.0, *, tol=1e-9, require_capture=True):
    """Net signed count of eigenvalue tracks crossing ``through``.

    ``tracks`` is either a matrix with tracks[i, j] = j-th eigenvalue at the
    i-th parameter value, or a list of per-track curves.  A track moving up
    through the level counts +1 (the count of eigenvalues below the level
    at the start minus the count at the end).  For a semibounded family with
    all eigenvalues captured this equals Mor(start) - Mor(end).
    """
    arr = _as_track_matrix(tracks)
    for row, name in ((arr[0], "first"), (arr[-1], "last")):
        bad = np.abs(row - through) <= tol
        if np.any(bad):
            raise AmbiguousCrossing(
                f"track at the {name} grid point sits at the level within {tol}")
    if require_capture and arr.shape[1] and np.min(arr[:, -1]) <= through:
        raise AmbiguousCrossing(
            "largest captured track dips below the level; "
            "increase the eigenvalue count")
    hug = (np.abs(arr - through) <= tol)
    if np.any(hug[:-1] & hug[1:]):
        raise AmbiguousCrossing("a track hugs the level across a whole window")
    c0 = int(np.count_nonzero(arr[0] < through))
    c1 = int(np.count_nonzero(arr[-1] < through))
    return c0 - c1


def flow_events(t, tracks, through=0.0):
    """Crossing inventory: (t_cross, direction, track index), direction +1 up.

    The sum of directions equals ``spectral_flow`` for clean endpoint data;
    locations come from linear interpolation on the grid.
    """
    t = np.asarray(t, dtype=float)
    arr = _as_track_matrix(tracks)
    events = []
    for j in range(arr.shape[1]):
        col = arr[:, j]
        below = col < through
        for i in range(len(t) - 1):
            if below[i] != below[i + 1]:
                d0 = col[i] - through
                d1 = col[i + 1] - through
                frac = d0 / (d0 - d1) if d0 != d1 else 0.5
                tc = t[i] + frac * (t[i + 1] - t[i])
                events.append((float(tc), 1 if below[i] else -1, j))
    events.sort()
    return events
