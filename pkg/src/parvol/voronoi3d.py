"""3D Voronoi machinery: acute-face condition and the cell-containment threshold.

Cells are built per site as intersections of bisector half-spaces with a
large bounding box; a cell is bounded exactly when no box facet supports it.
For bounded cells the containment radius is the largest site-to-vertex
distance, and the threshold t0 is the maximum of those radii and the diameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import HalfspaceIntersection

from .errors import ContractViolation, DegeneracyError
from .diagnostics import ConcavityReport, concavity_report
from .geometry import EuclideanBall, Point, Scene, convex_hull, diameter
from .numgrid import profile

ANGLE_MARGIN = 1e-9
VERTEX_TOL = 1e-8


@dataclass(frozen=True)
class StarViolation:
    facet: int
    edge: tuple
    vertex: int
    dot: float
    borderline: bool


@dataclass(frozen=True)
class StarCheckResult:
    passed: bool
    first_violation: StarViolation | None


def condition_star_check(points) -> StarCheckResult:
    """Check that every hull-face angle (ca, cb) over face edges [a,b] is acute.

    Borderline right angles count as failures and carry a borderline flag.
    Coplanar input raises a degeneracy error.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 3:
        raise ContractViolation("condition check expects 3D points")
    hull = convex_hull(pts, dim=3)  # DegeneracyError on coplanar input
    scale = max(1.0, float(np.abs(hull.vertices).max()))
    for fi, cyc in enumerate(hull.facet_cycles):
        k = len(cyc)
        for e in range(k):
            ia, ib = cyc[e], cyc[(e + 1) % k]
            a, b = hull.vertices[ia], hull.vertices[ib]
            for ic in cyc:
                if ic in (ia, ib):
                    continue
                c = hull.vertices[ic]
                dot = float((a - c) @ (b - c))
                margin = ANGLE_MARGIN * scale * scale
                if dot <= margin:
                    return StarCheckResult(
                        False,
                        StarViolation(fi, (int(ia), int(ib)), int(ic), dot,
                                      borderline=abs(dot) <= margin),
                    )
    return StarCheckResult(True, None)


@dataclass(frozen=True)
class VoronoiCell:
    site_index: int
    bisector_normals: np.ndarray
    bisector_offsets: np.ndarray
    vertices: np.ndarray       # true Voronoi vertices (box contacts excluded)
    bounded: bool
    containment_radius: float | None  # max |v - site| for bounded cells


@dataclass(frozen=True)
class VoronoiT0Result:
    t0: float
    diameter: float
    cells: tuple

    @property
    def bounded_cells(self):
        return tuple(c for c in self.cells if c.bounded)


def _cell_from_halfspaces(site: np.ndarray, others: np.ndarray, box_lo, box_hi):
    normals, offsets = [], []
    for q in others:
        u = q - site
        norm = float(np.linalg.norm(u))
        if norm < 1e-14:
            raise ContractViolation("duplicate voronoi sites")
        u = u / norm
        m = 0.5 * (site + q)
        normals.append(u)
        offsets.append(float(u @ m))
    normals = np.array(normals)
    offsets = np.array(offsets)
    rows = [np.column_stack([normals, -offsets])]
    n = len(site)
    for k in range(n):
        ek = np.zeros(n)
        ek[k] = 1.0
        rows.append(np.array([[*ek, -box_hi[k]]]))
        rows.append(np.array([[*-ek, box_lo[k]]]))
    halfspaces = np.vstack(rows)
    hs = HalfspaceIntersection(halfspaces, site.copy())
    verts = np.unique(np.round(hs.intersections, 9), axis=0)
    scale = max(1.0, float(np.abs(box_hi).max()), float(np.abs(box_lo).max()))
    on_box = np.zeros(len(verts), dtype=bool)
    for k in range(n):
        on_box |= np.abs(verts[:, k] - box_hi[k]) <= VERTEX_TOL * scale
        on_box |= np.abs(verts[:, k] - box_lo[k]) <= VERTEX_TOL * scale
    return normals, offsets, verts[~on_box], bool(np.any(on_box))


def voronoi_t0(points) -> VoronoiT0Result:
    """t0 = max(diam(A), containment radii of the bounded Voronoi cells)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 3:
        raise ContractViolation("voronoi_t0 expects 3D points")
    if len(pts) < 2:
        raise ContractViolation("need at least 2 sites")
    scene = Scene(3, tuple(Point(p) for p in pts))
    diam = diameter(scene)
    center = pts.mean(axis=0)
    half = 4.0 * (diam + 1.0)
    for _ in range(4):
        box_lo = center - half
        box_hi = center + half
        cells = []
        suspicious = False
        for i in range(len(pts)):
            others = np.delete(pts, i, axis=0)
            normals, offsets, verts, touches_box = _cell_from_halfspaces(
                pts[i], others, box_lo, box_hi
            )
            radius = None
            if not touches_box:
                radius = float(np.linalg.norm(verts - pts[i], axis=1).max())
                if radius > 0.5 * half:
                    suspicious = True  # bounded cell close to the box: grow and retry
            cells.append(
                VoronoiCell(i, normals, offsets, verts, not touches_box, radius)
            )
        if not suspicious:
            break
        half *= 4.0
    radii = [c.containment_radius for c in cells if c.bounded]
    t0 = max([diam] + radii) if radii else diam
    return VoronoiT0Result(float(t0), float(diam), tuple(cells))


def star_concavity_verify(points, t_lo: float | None = None, t_hi: float | None = None,
                          steps: int = 15, h: float = 0.08, method: str = "grid",
                          samples: int = 200_000, seed: int = 0, tol: float = 1e-9,
                          enforce_star: bool = True):
    """Concavity report (exponent 1/3) of the parallel volume on [t0, T].

    Defaults: t_lo = t0 from voronoi_t0, t_hi = 3 t0.  With enforce_star=False
    the check runs in exploratory mode on any interval (no precondition).
    Returns (report, t0_result).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if enforce_star:
        star = condition_star_check(pts)
        if not star.passed:
            raise ContractViolation(
                f"the acute-face condition fails at {star.first_violation}"
            )
    t0_result = voronoi_t0(pts)
    lo = t0_result.t0 if t_lo is None else t_lo
    hi = 3.0 * t0_result.t0 if t_hi is None else t_hi
    if not lo < hi:
        raise ContractViolation("need t_lo < t_hi")
    scene = Scene(3, tuple(Point(p) for p in pts))
    ts = np.linspace(lo, hi, steps)
    prof = profile(scene, EuclideanBall(), ts, method=method, h=h,
                   samples=samples, seed=seed)
    report = concavity_report(prof, 1.0 / 3.0, tol)
    return report, t0_result
