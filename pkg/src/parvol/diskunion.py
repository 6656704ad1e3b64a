"""Exact area, perimeter, and topology of unions of equal-radius disks.

Area and perimeter come from a boundary-arc decomposition (Green's theorem
over the uncovered circular arcs).  Components use the intersection graph;
the Euler characteristic uses the alpha complex of the Delaunay
triangulation, which is homotopy equivalent to the union.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial import Delaunay

from .errors import AmbiguousTopologyError, ContractViolation

CRITICAL_ATOL = 1e-12


@dataclass(frozen=True)
class DiskUnionSummary:
    radius: float
    area: float
    perimeter: float
    components: int
    genus: int

    @property
    def euler_characteristic(self) -> int:
        return self.components - self.genus


@dataclass(frozen=True)
class CriticalRadiiList:
    values: np.ndarray
    tags: tuple  # "pairwise" | "circumradius", aligned with values

    def __iter__(self):
        return iter(self.values)


def _dedupe(centers) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(centers, dtype=float))
    if pts.shape[1] != 2:
        raise ContractViolation("disk centers must be 2D points")
    keep: list[int] = []
    for i in range(len(pts)):
        if all(np.linalg.norm(pts[i] - pts[j]) > CRITICAL_ATOL for j in keep):
            keep.append(i)
    return pts[keep]


def _circumradius(p, q, r) -> float | None:
    a = np.linalg.norm(q - r)
    b = np.linalg.norm(p - r)
    c = np.linalg.norm(p - q)
    cross = abs((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
    if cross < 1e-14 * max(1.0, a * b):
        return None  # degenerate triple
    return a * b * c / (2.0 * cross)


def critical_radii(centers) -> CriticalRadiiList:
    """Half pairwise distances plus circumradii of non-degenerate triples."""
    pts = _dedupe(centers)
    n = len(pts)
    entries: list[tuple[float, str]] = []
    for i in range(n):
        for j in range(i + 1, n):
            entries.append((float(np.linalg.norm(pts[i] - pts[j]) / 2.0), "pairwise"))
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                R = _circumradius(pts[i], pts[j], pts[k])
                if R is not None:
                    entries.append((float(R), "circumradius"))
    entries.sort(key=lambda e: e[0])
    vals: list[float] = []
    tags: list[str] = []
    for v, tag in entries:
        if vals and abs(v - vals[-1]) <= CRITICAL_ATOL:
            continue
        vals.append(v)
        tags.append(tag)
    return CriticalRadiiList(np.array(vals), tuple(tags))


def nearest_critical_gap(centers, t: float) -> float:
    crit = critical_radii(centers).values
    if crit.size == 0:
        return math.inf
    return float(np.abs(crit - t).min())


def perturb_off_critical(centers, t: float) -> float:
    """Nudge t off a critical radius by a relative 1e-9, per the summary convention."""
    if nearest_critical_gap(centers, t) <= CRITICAL_ATOL:
        return t * (1.0 + 1e-9)
    return t


def _boundary_arcs(pts: np.ndarray, t: float):
    """Uncovered arcs per circle as (theta1, theta2) with theta2 > theta1."""
    n = len(pts)
    diffs = pts[None, :, :] - pts[:, None, :]
    dist = np.sqrt((diffs**2).sum(-1))
    arcs: list[list[tuple[float, float]]] = []
    for i in range(n):
        covered: list[tuple[float, float]] = []
        for j in range(n):
            if j == i:
                continue
            d = dist[i, j]
            if d >= 2.0 * t or d == 0.0:
                continue
            phi = math.atan2(diffs[i, j, 1], diffs[i, j, 0])
            alpha = math.acos(min(1.0, d / (2.0 * t)))
            covered.append((phi - alpha, phi + alpha))
        if not covered:
            east = pts[i] + np.array([t, 0.0])
            inside = any(
                np.linalg.norm(east - pts[j]) < t - CRITICAL_ATOL
                for j in range(n) if j != i
            )
            arcs.append([] if inside else [(0.0, 2.0 * math.pi)])
            continue
        # normalize to [0, 2pi), split wrap-around intervals, merge, complement
        segs: list[tuple[float, float]] = []
        for lo, hi in covered:
            width = hi - lo
            lo = lo % (2.0 * math.pi)
            hi = lo + width
            if hi <= 2.0 * math.pi:
                segs.append((lo, hi))
            else:
                segs.append((lo, 2.0 * math.pi))
                segs.append((0.0, hi - 2.0 * math.pi))
        segs.sort()
        merged = [list(segs[0])]
        for lo, hi in segs[1:]:
            if lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        free: list[tuple[float, float]] = []
        cursor = 0.0
        for lo, hi in merged:
            if lo > cursor:
                free.append((cursor, lo))
            cursor = max(cursor, hi)
        if cursor < 2.0 * math.pi:
            free.append((cursor, 2.0 * math.pi))
        # stitch an arc that wraps through 0
        if len(free) >= 2 and free[0][0] == 0.0 and free[-1][1] == 2.0 * math.pi:
            lo0, hi0 = free.pop(0)
            lo1, hi1 = free.pop()
            free.append((lo1, hi1 + (hi0 - lo0)))
        arcs.append(free)
    return arcs


def disk_union_area(centers, t: float) -> float:
    """Exact area of the union of disks D(x_i, t) via boundary arcs."""
    if t <= 0:
        raise ContractViolation("disk radius t must be positive")
    pts = _dedupe(centers)
    area = 0.0
    for i, circle_arcs in enumerate(_boundary_arcs(pts, t)):
        cx, cy = pts[i]
        for th1, th2 in circle_arcs:
            area += 0.5 * (
                t * t * (th2 - th1)
                + t * (cx * (math.sin(th2) - math.sin(th1))
                       - cy * (math.cos(th2) - math.cos(th1)))
            )
    return area


def disk_union_perimeter(centers, t: float) -> float:
    """Total length of the uncovered boundary arcs."""
    if t <= 0:
        raise ContractViolation("disk radius t must be positive")
    pts = _dedupe(centers)
    total = 0.0
    for circle_arcs in _boundary_arcs(pts, t):
        for th1, th2 in circle_arcs:
            total += t * (th2 - th1)
    return total


def _components(pts: np.ndarray, t: float) -> int:
    n = len(pts)
    if n == 1:
        return 1
    rows, cols = [], []
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(pts[i] - pts[j]) < 2.0 * t:
                rows.append(i)
                cols.append(j)
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    return int(ncomp)


def _alpha_euler_characteristic(pts: np.ndarray, t: float) -> int:
    """Euler characteristic of the union via the alpha complex at radius t."""
    n = len(pts)
    if n == 1:
        return 1
    span = np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-10)
    if n == 2 or span < 2:
        # collinear disks cannot enclose a hole
        return _components(pts, t)
    tri = Delaunay(pts)
    tri_R = {}
    edge_info: dict[tuple[int, int], dict] = {}
    for s, simplex in enumerate(tri.simplices):
        i, j, k = (int(v) for v in simplex)
        R = _circumradius(pts[i], pts[j], pts[k])
        if R is None:
            R = math.inf  # degenerate sliver: never enters the complex
        tri_R[s] = R
        for (u, v, w) in ((i, j, k), (j, k, i), (i, k, j)):
            e = (min(u, v), max(u, v))
            rec = edge_info.setdefault(
                e, {"half": float(np.linalg.norm(pts[u] - pts[v]) / 2.0),
                    "gabriel": True, "tris": []}
            )
            rec["tris"].append(R)
            mid = (pts[u] + pts[v]) / 2.0
            if np.linalg.norm(mid - pts[w]) < rec["half"]:
                rec["gabriel"] = False
    E = 0
    for rec in edge_info.values():
        alpha = rec["half"] if rec["gabriel"] else min(rec["tris"])
        if alpha <= t:
            E += 1
    F = sum(1 for R in tri_R.values() if R <= t)
    return n - E + F


def euler_summary(centers, t: float) -> DiskUnionSummary:
    """Area, perimeter, component count p and genus q of the union at radius t.

    Raises AmbiguousTopologyError when t sits on a critical radius; perturb
    (e.g. via perturb_off_critical) and retry.
    """
    if t <= 0:
        raise ContractViolation("disk radius t must be positive")
    pts = _dedupe(centers)
    if nearest_critical_gap(pts, t) <= CRITICAL_ATOL:
        raise AmbiguousTopologyError(
            f"t={t} is a critical radius; perturb t, e.g. t*(1+1e-9)"
        )
    p = _components(pts, t)
    chi = _alpha_euler_characteristic(pts, t)
    return DiskUnionSummary(
        radius=t,
        area=disk_union_area(pts, t),
        perimeter=disk_union_perimeter(pts, t),
        components=p,
        genus=p - chi,
    )


def connectivity_radius(centers) -> float:
    """Least t at which the union of disks D(x_i, t) is connected."""
    pts = _dedupe(centers)
    n = len(pts)
    if n <= 1:
        return 0.0
    diffs = pts[None, :, :] - pts[:, None, :]
    dist = np.sqrt((diffs**2).sum(-1))
    mst = minimum_spanning_tree(dist)
    return float(mst.toarray().max() / 2.0)
