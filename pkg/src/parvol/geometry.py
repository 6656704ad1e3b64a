"""Geometric core: scene primitives, structuring bodies, hulls, gauge distances.

Scenes describe a compact set as a finite union of primitives; structuring
bodies are the sets the scene gets dilated by.  Everything here is an
immutable value and every function is pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull

from .errors import ContractViolation, DegeneracyError, ValidationError

ATOL = 1e-9          # coordinate predicates, valid for |coords| <= RESCALE_LIMIT
RESCALE_LIMIT = 1e3  # larger inputs are rescaled before predicates run


def _as_vector(x, dim=None) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValidationError(f"expected a flat coordinate vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValidationError(f"expected a {dim}-vector, got {v.shape[0]} coordinates")
    return v


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.flags.writeable = False


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Point:
    coords: np.ndarray

    kind = "point"

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_vector(self.coords))
        _freeze(self.coords)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def support_points(self) -> np.ndarray:
        return self.coords[None, :]

    def bounds(self):
        return self.coords.copy(), self.coords.copy()

    def edist(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - self.coords, axis=-1)

    def scale(self, s: float) -> "Point":
        return Point(self.coords * s)

    def translate(self, v) -> "Point":
        return Point(self.coords + np.asarray(v, float))

    def self_diameter(self) -> float:
        return 0.0

    def to_json(self) -> dict:
        return {"type": "point", "coords": self.coords.tolist()}


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray

    kind = "segment"

    def __post_init__(self):
        a = _as_vector(self.start)
        b = _as_vector(self.end, dim=a.shape[0])
        object.__setattr__(self, "start", a)
        object.__setattr__(self, "end", b)
        _freeze(a, b)

    @property
    def dim(self) -> int:
        return self.start.shape[0]

    def support_points(self) -> np.ndarray:
        return np.stack([self.start, self.end])

    def bounds(self):
        return np.minimum(self.start, self.end), np.maximum(self.start, self.end)

    def edist(self, pts: np.ndarray) -> np.ndarray:
        d = self.end - self.start
        den = float(d @ d)
        if den == 0.0:
            return np.linalg.norm(pts - self.start, axis=-1)
        s = np.clip((pts - self.start) @ d / den, 0.0, 1.0)
        closest = self.start + s[..., None] * d
        return np.linalg.norm(pts - closest, axis=-1)

    def scale(self, s: float) -> "Segment":
        return Segment(self.start * s, self.end * s)

    def translate(self, v) -> "Segment":
        v = np.asarray(v, float)
        return Segment(self.start + v, self.end + v)

    def self_diameter(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    def to_json(self) -> dict:
        return {"type": "segment", "start": self.start.tolist(), "end": self.end.tolist()}


@dataclass(frozen=True)
class Box:
    center: np.ndarray
    half_widths: np.ndarray

    kind = "box"

    def __post_init__(self):
        c = _as_vector(self.center)
        h = _as_vector(self.half_widths, dim=c.shape[0])
        if np.any(h < 0):
            raise ValidationError("box half-widths must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", h)
        _freeze(c, h)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def support_points(self) -> np.ndarray:
        n = self.dim
        signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * n), indexing="ij")).reshape(n, -1).T
        return self.center + signs * self.half_widths

    def bounds(self):
        return self.center - self.half_widths, self.center + self.half_widths

    def edist(self, pts: np.ndarray) -> np.ndarray:
        excess = np.maximum(np.abs(pts - self.center) - self.half_widths, 0.0)
        return np.linalg.norm(excess, axis=-1)

    def scale(self, s: float) -> "Box":
        return Box(self.center * s, self.half_widths * abs(s))

    def translate(self, v) -> "Box":
        return Box(self.center + np.asarray(v, float), self.half_widths)

    def self_diameter(self) -> float:
        return float(2.0 * np.linalg.norm(self.half_widths))

    def to_json(self) -> dict:
        return {
            "type": "box",
            "center": self.center.tolist(),
            "half_widths": self.half_widths.tolist(),
        }


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    kind = "ball"

    def __post_init__(self):
        c = _as_vector(self.center)
        r = float(self.radius)
        if r < 0:
            raise ValidationError("ball radius must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)
        _freeze(c)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def support_points(self):
        return None  # curved: handled specially by diameter/hull users

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def edist(self, pts: np.ndarray) -> np.ndarray:
        return np.maximum(np.linalg.norm(pts - self.center, axis=-1) - self.radius, 0.0)

    def scale(self, s: float) -> "Ball":
        return Ball(self.center * s, self.radius * abs(s))

    def translate(self, v) -> "Ball":
        return Ball(self.center + np.asarray(v, float), self.radius)

    def self_diameter(self) -> float:
        return 2.0 * self.radius

    def to_json(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


def _polygon_is_simple(verts: np.ndarray) -> bool:
    """Check that the closed polygonal chain has no improper self-intersection."""
    k = len(verts)
    segs = [(verts[i], verts[(i + 1) % k]) for i in range(k)]

    def proper_cross(p1, p2, q1, q2):
        d1 = np.cross(p2 - p1, q1 - p1)
        d2 = np.cross(p2 - p1, q2 - p1)
        d3 = np.cross(q2 - q1, p1 - q1)
        d4 = np.cross(q2 - q1, p2 - q1)
        return (d1 * d2 < -1e-18) and (d3 * d4 < -1e-18)

    for i in range(k):
        for j in range(i + 1, k):
            if j == i + 1 or (i == 0 and j == k - 1):
                continue  # adjacent edges share an endpoint by construction
            if proper_cross(*segs[i], *segs[j]):
                return False
    return True


@dataclass(frozen=True)
class Polygon:
    """Filled simple polygon in the plane; vertices stored in CCW order."""

    vertices: np.ndarray

    kind = "polygon"

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValidationError("polygon needs >= 3 two-dimensional vertices")
        if _signed_area(v) < 0:
            v = v[::-1].copy()
        if not _polygon_is_simple(v):
            raise ValidationError("polygon is not simple")
        object.__setattr__(self, "vertices", v)
        _freeze(v)

    @property
    def dim(self) -> int:
        return 2

    def support_points(self) -> np.ndarray:
        return self.vertices

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def area(self) -> float:
        return _signed_area(self.vertices)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return _points_in_polygon(pts, self.vertices)

    def edist(self, pts: np.ndarray) -> np.ndarray:
        d = np.full(pts.shape[0], np.inf)
        k = len(self.vertices)
        for i in range(k):
            seg = Segment(self.vertices[i], self.vertices[(i + 1) % k])
            np.minimum(d, seg.edist(pts), out=d)
        d[self.contains(pts)] = 0.0
        return d

    def scale(self, s: float) -> "Polygon":
        return Polygon(self.vertices * s)

    def translate(self, v) -> "Polygon":
        return Polygon(self.vertices + np.asarray(v, float))

    def self_diameter(self) -> float:
        return _max_pairwise_distance(self.vertices)

    def to_json(self) -> dict:
        return {"type": "polygon", "vertices": self.vertices.tolist()}


@dataclass(frozen=True)
class Polytope:
    """Convex solid polytope in 3D, stored with its hull structure."""

    hull: "ConvexPolytope"

    kind = "polytope"

    @staticmethod
    def from_vertices(vertices) -> "Polytope":
        verts = np.asarray(vertices, float)
        if verts.ndim != 2 or verts.shape[1] != 3 or verts.shape[0] < 4:
            raise ValidationError("polytope needs >= 4 three-dimensional vertices")
        return Polytope(convex_hull(verts, dim=3))

    @property
    def dim(self) -> int:
        return 3

    def support_points(self) -> np.ndarray:
        return self.hull.vertices

    def bounds(self):
        return self.hull.vertices.min(axis=0), self.hull.vertices.max(axis=0)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return self.hull.contains(pts)

    def edist(self, pts: np.ndarray) -> np.ndarray:
        d = np.full(pts.shape[0], np.inf)
        for a, b, c in self.hull.surface_triangles():
            np.minimum(d, _point_triangle_distance(pts, a, b, c), out=d)
        d[self.contains(pts)] = 0.0
        return d

    def scale(self, s: float) -> "Polytope":
        return Polytope.from_vertices(self.hull.vertices * s)

    def translate(self, v) -> "Polytope":
        return Polytope.from_vertices(self.hull.vertices + np.asarray(v, float))

    def self_diameter(self) -> float:
        return _max_pairwise_distance(self.hull.vertices)

    def to_json(self) -> dict:
        return {"type": "polytope", "vertices": self.hull.vertices.tolist()}


@dataclass(frozen=True)
class Product:
    """Cartesian product of a lower-dimensional primitive with a box factor.

    The base occupies the leading coordinates, the box factor the rest.
    """

    base: "Primitive"
    box_center: np.ndarray
    box_half_widths: np.ndarray

    kind = "product"

    def __post_init__(self):
        c = _as_vector(self.box_center)
        h = _as_vector(self.box_half_widths, dim=c.shape[0])
        if np.any(h < 0):
            raise ValidationError("product box half-widths must be nonnegative")
        if self.base.kind == "product":
            raise ValidationError("nested product primitives are not supported")
        object.__setattr__(self, "box_center", c)
        object.__setattr__(self, "box_half_widths", h)
        _freeze(c, h)

    @property
    def dim(self) -> int:
        return self.base.dim + self.box_center.shape[0]

    def support_points(self):
        base_sup = self.base.support_points()
        if base_sup is None:
            return None
        corners = Box(self.box_center, self.box_half_widths).support_points()
        k, m = len(base_sup), len(corners)
        out = np.empty((k * m, self.dim))
        out[:, : self.base.dim] = np.repeat(base_sup, m, axis=0)
        out[:, self.base.dim:] = np.tile(corners, (k, 1))
        return out

    def bounds(self):
        blo, bhi = self.base.bounds()
        lo = np.concatenate([blo, self.box_center - self.box_half_widths])
        hi = np.concatenate([bhi, self.box_center + self.box_half_widths])
        return lo, hi

    def edist(self, pts: np.ndarray) -> np.ndarray:
        k = self.base.dim
        d_base = self.base.edist(pts[..., :k])
        excess = np.maximum(np.abs(pts[..., k:] - self.box_center) - self.box_half_widths, 0.0)
        return np.sqrt(d_base**2 + np.sum(excess**2, axis=-1))

    def scale(self, s: float) -> "Product":
        return Product(self.base.scale(s), self.box_center * s, self.box_half_widths * abs(s))

    def translate(self, v) -> "Product":
        v = np.asarray(v, float)
        k = self.base.dim
        return Product(self.base.translate(v[:k]), self.box_center + v[k:], self.box_half_widths)

    def self_diameter(self) -> float:
        box_diam = 2.0 * np.linalg.norm(self.box_half_widths)
        return float(math.hypot(self.base.self_diameter(), box_diam))

    def to_json(self) -> dict:
        return {
            "type": "product",
            "base": self.base.to_json(),
            "box_center": self.box_center.tolist(),
            "box_half_widths": self.box_half_widths.tolist(),
        }


Primitive = Union[Point, Segment, Box, Ball, Polygon, Polytope, Product]


# ---------------------------------------------------------------------------
# Scene
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scene:
    """A compact set given as a nonempty finite union of primitives."""

    dim: int
    primitives: tuple

    def __post_init__(self):
        prims = tuple(self.primitives)
        if not prims:
            raise ValidationError("scene needs at least one primitive")
        if self.dim < 1:
            raise ValidationError("ambient dimension must be >= 1")
        for i, p in enumerate(prims):
            if p.dim != self.dim:
                raise ValidationError(
                    f"primitive {i} has dimension {p.dim}, scene has {self.dim}",
                    primitive_index=i,
                )
        object.__setattr__(self, "primitives", prims)

    def bounds(self):
        los, his = zip(*(p.bounds() for p in self.primitives))
        return np.min(los, axis=0), np.max(his, axis=0)

    def edist(self, pts: np.ndarray) -> np.ndarray:
        """Euclidean distance from each point to the union."""
        d = self.primitives[0].edist(pts)
        for p in self.primitives[1:]:
            d = np.minimum(d, p.edist(pts))
        return d

    def support_points(self) -> np.ndarray:
        """Extreme-point candidates of all primitives; error if a ball is present."""
        sups = []
        for i, p in enumerate(self.primitives):
            s = p.support_points()
            if s is None:
                raise ContractViolation(
                    f"primitive {i} is curved; scene has no finite support set"
                )
            sups.append(s)
        return np.vstack(sups)


def scale_scene(scene: Scene, s: float) -> Scene:
    """The scene s*A.  s = 0 collapses to the origin."""
    if s < 0:
        raise ContractViolation("scene scaling factor must be nonnegative")
    if s == 0:
        return Scene(scene.dim, (Point(np.zeros(scene.dim)),))
    return Scene(scene.dim, tuple(p.scale(s) for p in scene.primitives))


def translate_scene(scene: Scene, v) -> Scene:
    return Scene(scene.dim, tuple(p.translate(v) for p in scene.primitives))


# ---------------------------------------------------------------------------
# Structuring bodies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EuclideanBall:
    radius: float = 1.0

    kind = "ball"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError("structuring ball radius must be positive")

    def to_json(self) -> dict:
        return {"type": "ball", "radius": self.radius}


@dataclass(frozen=True)
class PolytopeBody:
    polytope: "ConvexPolytope"

    kind = "polytope"

    def to_json(self) -> dict:
        return {"type": "polytope", "vertices": self.polytope.vertices.tolist()}


@dataclass(frozen=True)
class IntervalBody:
    """1D structuring set, a finite union of closed intervals (may be non-convex)."""

    intervals: np.ndarray

    kind = "intervals"

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if iv.shape[0] == 0:
            raise ValidationError("interval body needs at least one interval")
        if np.any(iv[:, 1] < iv[:, 0]):
            raise ValidationError("interval endpoints must satisfy a <= b")
        order = np.argsort(iv[:, 0], kind="stable")
        iv = iv[order]
        if np.any(iv[1:, 0] <= iv[:-1, 1]):
            merged = [iv[0].copy()]
            for a, b in iv[1:]:
                if a <= merged[-1][1]:
                    merged[-1][1] = max(merged[-1][1], b)
                else:
                    merged.append(np.array([a, b]))
            iv = np.array(merged)
        object.__setattr__(self, "intervals", iv)
        _freeze(iv)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    @property
    def is_convex(self) -> bool:
        return self.intervals.shape[0] == 1

    def to_json(self) -> dict:
        return {"type": "intervals", "intervals": self.intervals.tolist()}


StructuringBody = Union[EuclideanBall, PolytopeBody, IntervalBody]


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def body_volume(body: StructuringBody, dim: int) -> float:
    if isinstance(body, EuclideanBall):
        return unit_ball_volume(dim) * body.radius**dim
    if isinstance(body, PolytopeBody):
        return body.polytope.volume
    if isinstance(body, IntervalBody):
        if dim != 1:
            raise ContractViolation("interval bodies only exist in dimension 1")
        return body.total_length
    raise ContractViolation(f"unknown structuring body {body!r}")


def body_axis_extent(body: StructuringBody, dim: int):
    """Per-axis (min, max) of the unit-scaled body, for bounding boxes."""
    if isinstance(body, EuclideanBall):
        r = body.radius
        return np.full(dim, -r), np.full(dim, r)
    if isinstance(body, PolytopeBody):
        v = body.polytope.vertices
        return v.min(axis=0), v.max(axis=0)
    if isinstance(body, IntervalBody):
        return (np.array([body.intervals[0, 0]]), np.array([body.intervals[-1, 1]]))
    raise ContractViolation(f"unknown structuring body {body!r}")


def body_is_convex(body: StructuringBody) -> bool:
    if isinstance(body, IntervalBody):
        return body.is_convex
    return True


# ---------------------------------------------------------------------------
# Convex polytopes and hulls
# ---------------------------------------------------------------------------


def _signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _max_pairwise_distance(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def _points_in_polygon(pts: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Crossing-number test, boundary points may land either way."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    k = len(verts)
    for i in range(k):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % k]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    return inside


def _point_triangle_distance(pts, a, b, c) -> np.ndarray:
    n = np.cross(b - a, c - a)
    nn = float(n @ n)
    if nn < 1e-30:  # degenerate triangle: fall back to its longest edge
        return Segment(a, b).edist(pts)
    h = (pts - a) @ n / math.sqrt(nn)
    proj = pts - h[:, None] * (n / math.sqrt(nn))
    # barycentric coordinates of the projection
    v0, v1 = b - a, c - a
    d00, d01, d11 = v0 @ v0, v0 @ v1, v1 @ v1
    v2 = proj - a
    d20, d21 = v2 @ v0, v2 @ v1
    den = d00 * d11 - d01 * d01
    w1 = (d11 * d20 - d01 * d21) / den
    w2 = (d00 * d21 - d01 * d20) / den
    inside = (w1 >= 0) & (w2 >= 0) & (w1 + w2 <= 1)
    d = np.minimum(
        Segment(a, b).edist(pts),
        np.minimum(Segment(b, c).edist(pts), Segment(a, c).edist(pts)),
    )
    return np.where(inside, np.abs(h), d)


@dataclass(frozen=True)
class ConvexPolytope:
    """Convex polytope with canonical vertex order and facet structure.

    vertices are sorted lexicographically; ``cycle`` gives the CCW boundary
    order in 2D; ``facet_cycles`` the ordered vertex loops per facet in 3D;
    ``edges`` the 3D edge list as ((vertex i, vertex j), (facet a, facet b)).
    """

    dim: int
    vertices: np.ndarray
    facet_normals: np.ndarray
    facet_offsets: np.ndarray
    volume: float
    surface: float
    cycle: tuple = ()
    facet_cycles: tuple = ()
    edges: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.vertices, float)
        n = np.asarray(self.facet_normals, float)
        b = np.asarray(self.facet_offsets, float)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "facet_normals", n)
        object.__setattr__(self, "facet_offsets", b)
        _freeze(v, n, b)
        scale = max(1.0, float(np.abs(v).max()))
        norms = np.linalg.norm(n, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ContractViolation("facet normals must be unit length")
        slack = v @ n.T - b
        if slack.max() > ATOL * max(1.0, scale / RESCALE_LIMIT):
            raise ContractViolation("a vertex violates a facet inequality")
        if self.dim == 3:
            V, E, F = len(v), len(self.edges), len(n)
            if V - E + F != 2:
                raise ContractViolation(
                    f"Euler relation violated: V={V}, E={E}, F={F}"
                )

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def contains(self, pts: np.ndarray, tol: float = ATOL) -> np.ndarray:
        scale = max(1.0, float(np.abs(self.vertices).max()) / RESCALE_LIMIT)
        return np.all(pts @ self.facet_normals.T - self.facet_offsets <= tol * scale, axis=-1)

    def contains_origin_interior(self, tol: float = ATOL) -> bool:
        return bool(np.all(self.facet_offsets > tol))

    def gauge(self, z: np.ndarray) -> np.ndarray:
        """Minkowski functional of this body at displacement(s) z; needs 0 interior."""
        if not self.contains_origin_interior():
            raise ContractViolation("gauge requires 0 in the interior of the body")
        vals = (z @ self.facet_normals.T) / self.facet_offsets
        return np.maximum(vals.max(axis=-1), 0.0)

    def inradius_bound(self) -> float:
        return float(self.facet_offsets.min())

    def outradius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def boundary_vertices(self) -> np.ndarray:
        """2D only: vertices in CCW boundary order."""
        if self.dim != 2:
            raise ContractViolation("boundary_vertices is a 2D operation")
        return self.vertices[list(self.cycle)]

    def surface_triangles(self):
        """3D only: fan triangulation of every facet."""
        if self.dim != 3:
            raise ContractViolation("surface_triangles is a 3D operation")
        tris = []
        for cyc in self.facet_cycles:
            v = self.vertices[list(cyc)]
            for i in range(1, len(v) - 1):
                tris.append((v[0], v[i], v[i + 1]))
        return tris

    def edge_lengths_and_exterior_angles(self):
        """3D only: (length, exterior dihedral angle) per edge."""
        if self.dim != 3:
            raise ContractViolation("edge data is a 3D operation")
        out = []
        for (i, j), (fa, fb) in self.edges:
            length = float(np.linalg.norm(self.vertices[i] - self.vertices[j]))
            cosang = float(np.clip(self.facet_normals[fa] @ self.facet_normals[fb], -1.0, 1.0))
            out.append((length, math.acos(cosang)))
        return out

    def to_json(self) -> dict:
        return {"type": "polytope", "vertices": self.vertices.tolist()}


def affine_rank(points: np.ndarray, tol: float = 1e-9) -> int:
    pts = np.asarray(points, float)
    centered = pts - pts.mean(axis=0)
    scale = max(1.0, float(np.abs(centered).max()))
    if len(pts) < 2:
        return 0
    sv = np.linalg.svd(centered / scale, compute_uv=False)
    return int(np.sum(sv > tol * math.sqrt(len(pts))))


def _order_facet_cycle(verts: np.ndarray, idx: np.ndarray, normal: np.ndarray) -> list:
    center = verts[idx].mean(axis=0)
    # basis in the facet plane
    a = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(normal, a)
    u /= np.linalg.norm(u)
    w = np.cross(normal, u)
    rel = verts[idx] - center
    ang = np.arctan2(rel @ w, rel @ u)
    return [int(i) for i in idx[np.argsort(ang)]]


def convex_hull(points, dim: int | None = None) -> ConvexPolytope:
    """Convex hull of a 2D or 3D point set as a canonical ConvexPolytope.

    Raises DegeneracyError naming the affine dimension when the input does
    not span the ambient space.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[1]
    if dim is not None and dim != n:
        raise ContractViolation(f"points have dimension {n}, expected {dim}")
    if n not in (2, 3):
        raise ContractViolation("convex_hull supports dimensions 2 and 3")
    if len(pts) < n + 1:
        raise ContractViolation(f"need at least {n + 1} points in dimension {n}")
    rank = affine_rank(pts)
    if rank < n:
        raise DegeneracyError(
            f"points are affinely degenerate (affine dimension {rank})", rank
        )

    factor = max(1.0, float(np.abs(pts).max()) / RESCALE_LIMIT)
    hull = ConvexHull(pts / factor)
    vert_idx = hull.vertices  # CCW in 2D
    verts = pts[vert_idx]

    order = np.lexsort(verts.T[::-1])  # lexicographic by x, then y, then z
    canonical = verts[order]
    inv = np.empty(len(order), dtype=int)
    inv[order] = np.arange(len(order))  # old local index -> canonical index

    if n == 2:
        k = len(canonical)
        cycle = tuple(int(inv[i]) for i in range(k))
        nxt = {cycle[i]: cycle[(i + 1) % k] for i in range(k)}
        normals, offsets = [], []
        start = cycle[0]
        i = start
        ordered_cycle = []
        while True:
            ordered_cycle.append(i)
            j = nxt[i]
            e = canonical[j] - canonical[i]
            nrm = np.array([e[1], -e[0]])
            nrm /= np.linalg.norm(nrm)
            normals.append(nrm)
            offsets.append(float(nrm @ canonical[i]))
            i = j
            if i == start:
                break
        return ConvexPolytope(
            dim=2,
            vertices=canonical,
            facet_normals=np.array(normals),
            facet_offsets=np.array(offsets),
            volume=float(hull.volume) * factor**2,
            surface=float(hull.area) * factor,
            cycle=tuple(ordered_cycle),
        )

    # 3D: merge coplanar adjacent simplicial facets, then build edges
    local = -np.ones(len(pts), dtype=int)
    local[vert_idx[order]] = np.arange(len(order))
    eqs = hull.equations  # rows [normal, d] with normal @ x + d <= 0
    nf = len(eqs)
    parent = list(range(nf))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f, neigh in enumerate(hull.neighbors):
        for g in neigh:
            if g < 0:
                continue
            if (
                eqs[f, :3] @ eqs[g, :3] > 1.0 - 1e-10
                and abs(eqs[f, 3] - eqs[g, 3]) <= 1e-9
            ):
                ra, rb = find(f), find(int(g))
                if ra != rb:
                    parent[rb] = ra

    groups: dict[int, list[int]] = {}
    for f in range(nf):
        groups.setdefault(find(f), []).append(f)

    normals, offsets, facet_cycles = [], [], []
    for simplices in groups.values():
        vset = sorted({int(local[v]) for s in simplices for v in hull.simplices[s]})
        nrm = eqs[simplices[0], :3].copy()
        nrm /= np.linalg.norm(nrm)
        off = float(np.median(canonical[vset] @ nrm))
        cyc = _order_facet_cycle(canonical, np.array(vset), nrm)
        normals.append(nrm)
        offsets.append(off)
        facet_cycles.append(tuple(cyc))

    edge_facets: dict[tuple, list[int]] = {}
    for fi, cyc in enumerate(facet_cycles):
        k = len(cyc)
        for t in range(k):
            e = tuple(sorted((cyc[t], cyc[(t + 1) % k])))
            edge_facets.setdefault(e, []).append(fi)
    edges = []
    for e, fs in sorted(edge_facets.items()):
        if len(fs) != 2:
            raise ContractViolation("inconsistent hull facet adjacency")
        edges.append((e, (fs[0], fs[1])))

    return ConvexPolytope(
        dim=3,
        vertices=canonical,
        facet_normals=np.array(normals),
        facet_offsets=np.array(offsets),
        volume=float(hull.volume) * factor**3,
        surface=float(hull.area) * factor**2,
        facet_cycles=tuple(facet_cycles),
        edges=tuple(edges),
    )


# ---------------------------------------------------------------------------
# Gauge distances
# ---------------------------------------------------------------------------


def _check_gauge_body(body: StructuringBody):
    if isinstance(body, EuclideanBall):
        return
    if isinstance(body, PolytopeBody):
        if not body.polytope.contains_origin_interior():
            raise ContractViolation("gauge body must contain 0 in its interior")
        return
    raise ContractViolation("gauge distance needs a convex body (ball or polytope)")


def _gauge_to_segment(x: np.ndarray, a: np.ndarray, b: np.ndarray, P: ConvexPolytope) -> float:
    # g(s) = max_f (c_f + s d_f) is convex piecewise linear on [0, 1]
    c = (P.facet_normals @ (x - a)) / P.facet_offsets
    d = (P.facet_normals @ (a - b)) / P.facet_offsets
    cand = [0.0, 1.0]
    F = len(c)
    for i in range(F):
        for j in range(i + 1, F):
            dd = d[i] - d[j]
            if dd != 0.0:
                s = (c[j] - c[i]) / dd
                if 0.0 < s < 1.0:
                    cand.append(s)
    vals = [max(0.0, float(np.max(c + s * d))) for s in cand]
    return min(vals)


def _gauge_to_hull_of(x: np.ndarray, gens: np.ndarray, P: ConvexPolytope) -> float:
    # min tau s.t. n_f . (x - gens^T lam) <= tau b_f, lam in simplex
    m = len(gens)
    F = len(P.facet_offsets)
    nvar = m + 1  # lambdas then tau
    cobj = np.zeros(nvar)
    cobj[-1] = 1.0
    A_ub = np.zeros((F, nvar))
    A_ub[:, :m] = -P.facet_normals @ gens.T
    A_ub[:, -1] = -P.facet_offsets
    b_ub = -(P.facet_normals @ x)
    A_eq = np.zeros((1, nvar))
    A_eq[0, :m] = 1.0
    res = linprog(
        cobj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
        bounds=[(0, None)] * m + [(0, None)], method="highs",
    )
    if not res.success:
        raise RuntimeError(f"gauge LP failed: {res.message}")
    return float(res.fun)


def _gauge_to_ball(x: np.ndarray, c: np.ndarray, r: float, P: ConvexPolytope) -> float:
    if r == 0.0:
        return float(P.gauge(x - c))
    n = len(x)

    def obj(yz):
        return yz[-1]

    cons = [
        {
            "type": "ineq",
            "fun": lambda yz, nf=P.facet_normals[f], bf=P.facet_offsets[f]: (
                yz[-1] * bf - nf @ (x - yz[:-1])
            ),
        }
        for f in range(len(P.facet_offsets))
    ]
    cons.append({"type": "ineq", "fun": lambda yz: r**2 - np.sum((yz[:-1] - c) ** 2)})
    y0 = np.concatenate([c, [float(P.gauge(x - c))]])
    res = minimize(obj, y0, constraints=cons, method="SLSQP",
                   options={"ftol": 1e-12, "maxiter": 200})
    return max(0.0, float(res.fun))


def _gauge_to_primitive(x: np.ndarray, prim: Primitive, P: ConvexPolytope) -> float:
    if prim.kind == "point":
        return float(P.gauge(x - prim.coords))
    if prim.kind == "segment":
        return _gauge_to_segment(x, prim.start, prim.end, P)
    if prim.kind == "box":
        return _gauge_to_hull_of(x, prim.support_points(), P)
    if prim.kind == "polygon":
        if prim.contains(x[None, :])[0]:
            return 0.0
        k = len(prim.vertices)
        return min(
            _gauge_to_segment(x, prim.vertices[i], prim.vertices[(i + 1) % k], P)
            for i in range(k)
        )
    if prim.kind == "polytope":
        return _gauge_to_hull_of(x, prim.hull.vertices, P)
    if prim.kind == "ball":
        return _gauge_to_ball(x, prim.center, prim.radius, P)
    if prim.kind == "product":
        base_sup = prim.base.support_points()
        if base_sup is None:
            raise ContractViolation(
                "gauge distance to a product with a curved base is not supported"
            )
        if prim.base.kind == "polygon":
            raise ContractViolation(
                "gauge distance to a product with a non-convex base is not supported"
            )
        gens = prim.support_points()
        return _gauge_to_hull_of(x, gens, P)
    raise ContractViolation(f"unknown primitive {prim.kind}")


def gauge_distance(x, scene: Scene, body: StructuringBody) -> float:
    """d_B(x, A): infimum of the B-gauge of x - y over y in the scene."""
    _check_gauge_body(body)
    x = _as_vector(x, dim=scene.dim)
    if isinstance(body, EuclideanBall):
        return float(scene.edist(x[None, :])[0]) / body.radius
    P = body.polytope
    return min(_gauge_to_primitive(x, p, P) for p in scene.primitives)


def gauge_distance_points(pts: np.ndarray, scene: Scene, body: StructuringBody) -> np.ndarray:
    """Vectorized d_B over (m, n) points; exact fast paths, LP fallback otherwise."""
    _check_gauge_body(body)
    if isinstance(body, EuclideanBall):
        return scene.edist(pts) / body.radius
    P = body.polytope
    d = np.full(pts.shape[0], np.inf)
    slow: list[Primitive] = []
    for prim in scene.primitives:
        if prim.kind == "point":
            vals = np.maximum(
                ((pts - prim.coords) @ P.facet_normals.T / P.facet_offsets).max(axis=1),
                0.0,
            )
            np.minimum(d, vals, out=d)
        else:
            slow.append(prim)
    if slow:
        for i in range(pts.shape[0]):
            for prim in slow:
                d[i] = min(d[i], _gauge_to_primitive(pts[i], prim, P))
    return d


# ---------------------------------------------------------------------------
# Diameter
# ---------------------------------------------------------------------------


def _sup_distance(p: Primitive, q: Primitive) -> float:
    """sup over x in p, y in q of |x - y|."""
    if p.kind == "product" and q.kind == "product" and p.base.dim == q.base.dim:
        base = _sup_distance(p.base, q.base)
        box = _sup_distance(
            Box(p.box_center, p.box_half_widths), Box(q.box_center, q.box_half_widths)
        )
        return math.hypot(base, box)
    ps, qs = p.support_points(), q.support_points()
    if ps is not None and qs is not None:
        diff = ps[:, None, :] - qs[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())
    if p.kind == "ball" and q.kind == "ball":
        return float(np.linalg.norm(p.center - q.center)) + p.radius + q.radius
    if p.kind == "ball":
        p, q, ps, qs = q, p, qs, ps
    if q.kind == "ball" and ps is not None:
        return float(np.linalg.norm(ps - q.center, axis=1).max()) + q.radius
    raise ContractViolation(
        f"diameter unsupported for primitive pairing {p.kind} / {q.kind}"
    )


def diameter(scene: Scene) -> float:
    """Exact diameter of the union (sup of pairwise point distances)."""
    best = 0.0
    prims = scene.primitives
    for i, p in enumerate(prims):
        best = max(best, p.self_diameter())
        for q in prims[i + 1:]:
            best = max(best, _sup_distance(p, q))
    return best


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


_PRIMITIVE_TYPES = ("point", "segment", "box", "ball", "polygon", "polytope", "product")


def _primitive_from_json(doc: dict, dim: int, index: int) -> Primitive:
    try:
        kind = doc["type"]
        if kind == "point":
            prim: Primitive = Point(_as_vector(doc["coords"], dim))
        elif kind == "segment":
            prim = Segment(_as_vector(doc["start"], dim), _as_vector(doc["end"], dim))
        elif kind == "box":
            prim = Box(_as_vector(doc["center"], dim), _as_vector(doc["half_widths"], dim))
        elif kind == "ball":
            prim = Ball(_as_vector(doc["center"], dim), float(doc["radius"]))
        elif kind == "polygon":
            if dim != 2:
                raise ValidationError("polygon primitives require a 2D scene")
            prim = Polygon(np.asarray(doc["vertices"], float))
        elif kind == "polytope":
            if dim != 3:
                raise ValidationError("polytope primitives require a 3D scene")
            prim = Polytope.from_vertices(np.asarray(doc["vertices"], float))
        elif kind == "product":
            base = _primitive_from_json(doc["base"], _base_dim_guess(doc["base"]), index)
            prim = Product(
                base,
                _as_vector(doc["box_center"]),
                _as_vector(doc["box_half_widths"]),
            )
        else:
            raise ValidationError(
                f"unknown primitive type {kind!r}; expected one of {_PRIMITIVE_TYPES}"
            )
    except KeyError as exc:
        raise ValidationError(f"primitive {index} is missing field {exc}", index) from exc
    except ValidationError as exc:
        raise ValidationError(f"primitive {index}: {exc}", index) from exc
    if prim.dim != dim:
        raise ValidationError(
            f"primitive {index} has dimension {prim.dim}, scene has {dim}", index
        )
    return prim


def _base_dim_guess(doc: dict) -> int:
    kind = doc.get("type")
    if kind == "point":
        return len(doc.get("coords", []))
    if kind == "segment":
        return len(doc.get("start", []))
    if kind in ("box", "ball"):
        return len(doc.get("center", []))
    if kind == "polygon":
        return 2
    if kind == "polytope":
        return 3
    raise ValidationError(f"cannot infer dimension of product base of type {kind!r}")


def _body_from_json(doc: dict, dim: int) -> StructuringBody:
    kind = doc.get("type")
    if kind == "ball":
        return EuclideanBall(float(doc.get("radius", 1.0)))
    if kind == "polytope":
        verts = np.asarray(doc["vertices"], float)
        if verts.shape[1] != dim:
            raise ValidationError("structuring polytope dimension mismatch")
        return PolytopeBody(convex_hull(verts, dim=dim))
    if kind == "intervals":
        if dim != 1:
            raise ValidationError("interval structuring bodies require a 1D scene")
        return IntervalBody(np.asarray(doc["intervals"], float))
    raise ValidationError(f"unknown structuring body type {kind!r}")


def scene_from_json(doc: dict):
    """Parse {"dim": n, "A": [...], "B": {...}} into (Scene, StructuringBody)."""
    if not isinstance(doc, dict) or "dim" not in doc or "A" not in doc:
        raise ValidationError('scene document needs "dim" and "A" fields')
    dim = int(doc["dim"])
    prims = tuple(
        _primitive_from_json(p, dim, i) for i, p in enumerate(doc["A"])
    )
    scene = Scene(dim, prims)
    body = _body_from_json(doc.get("B", {"type": "ball"}), dim)
    return scene, body


def scene_to_json(scene: Scene, body: StructuringBody) -> dict:
    return {
        "dim": scene.dim,
        "A": [p.to_json() for p in scene.primitives],
        "B": body.to_json(),
    }


def scene_hash(scene: Scene, body: StructuringBody) -> str:
    import hashlib

    blob = json.dumps(scene_to_json(scene, body), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
