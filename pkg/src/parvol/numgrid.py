"""Volume profiles t -> |A + tB|: exact dispatch, grid counting, Monte Carlo.

The grid estimator counts cell centers with d_B(center, A) <= t and certifies
the result with a boundary-cell band; Monte Carlo gives a seeded hit-ratio
estimate with a 99% confidence half-width.  profile() routes each scene class
to the most exact method available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ResourceBudgetError
from .diskunion import disk_union_area, disk_union_perimeter, perturb_off_critical
from .geometry import (
    Ball,
    Box,
    EuclideanBall,
    IntervalBody,
    Point,
    Polygon,
    PolytopeBody,
    Scene,
    Segment,
    StructuringBody,
    body_axis_extent,
    body_is_convex,
    body_volume,
    gauge_distance,
    unit_ball_volume,
)
from .interval1d import IntervalUnion, parallel_profile_1d
from .steiner import SteinerPolynomial, steiner_polynomial_2d, steiner_polynomial_3d

CELL_BUDGET = 2**31
SLAB_CELLS = 4_000_000
MC_CHUNK = 1 << 20
REFINE_BUDGET = 200_000


@dataclass(frozen=True)
class VolumeProfile:
    """Sampled map t -> V(t) with certified error bands.

    band[i] = 0 iff the method is exact; derivatives are attached when the
    exact route knows them.
    """

    ts: np.ndarray
    values: np.ndarray
    bands: np.ndarray
    method: str
    dim: int
    body_volume: float
    derivatives: np.ndarray | None = None

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        bands = np.asarray(self.bands, dtype=float)
        if ts.ndim != 1 or ts.shape[0] < 3:
            raise ContractViolation("a profile needs at least 3 samples")
        if np.any(np.diff(ts) <= 0):
            raise ContractViolation("profile samples must be strictly increasing")
        if vals.shape != ts.shape or bands.shape != ts.shape:
            raise ContractViolation("values/bands must align with samples")
        if np.any(bands < 0):
            raise ContractViolation("error bands must be nonnegative")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "bands", bands)
        for a in (ts, vals, bands):
            a.flags.writeable = False

    @property
    def is_exact(self) -> bool:
        return bool(np.all(self.bands == 0.0))


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    half_width: float  # 99% confidence
    samples: int
    seed: int


# ---------------------------------------------------------------------------
# Grid estimator
# ---------------------------------------------------------------------------


def _grid_geometry(scene: Scene, body: StructuringBody, h: float, t_max: float):
    lo, hi = scene.bounds()
    blo, bhi = body_axis_extent(body, scene.dim)
    lo = lo + t_max * blo - 2.0 * h
    hi = hi + t_max * bhi + 2.0 * h
    shape = np.maximum(np.ceil((hi - lo) / h).astype(int), 1)
    return lo, shape


def _body_lipschitz(body: StructuringBody) -> float:
    """d_B is Lipschitz in the Euclidean metric with this constant."""
    if isinstance(body, EuclideanBall):
        return 1.0 / body.radius
    if isinstance(body, PolytopeBody):
        return 1.0 / body.polytope.inradius_bound()
    raise ContractViolation("grid volumes need a convex gauge body")


def _slab_points(lo: np.ndarray, shape: np.ndarray, h: float, i0: int, i1: int) -> np.ndarray:
    axes = [lo[0] + (np.arange(i0, i1) + 0.5) * h]
    axes += [lo[k] + (np.arange(shape[k]) + 0.5) * h for k in range(1, len(shape))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _slab_distances(pts: np.ndarray, scene: Scene, body: StructuringBody,
                    ts: np.ndarray, margin: float) -> np.ndarray:
    if isinstance(body, EuclideanBall):
        return scene.edist(pts) / body.radius
    P = body.polytope
    if not P.contains_origin_interior():
        raise ContractViolation("gauge body must contain 0 in its interior")
    d = np.full(pts.shape[0], np.inf)
    slow = []
    for prim in scene.primitives:
        if prim.kind == "point":
            vals = np.maximum(
                ((pts - prim.coords) @ P.facet_normals.T / P.facet_offsets).max(axis=1),
                0.0,
            )
            np.minimum(d, vals, out=d)
        else:
            slow.append(prim)
    if not slow:
        return d
    # Euclidean sandwich: ed/R_out <= d_B <= ed/r_in; refine only undecided cells
    sub = Scene(scene.dim, tuple(slow))
    ed = sub.edist(pts)
    lower = ed / P.outradius()
    upper = ed / P.inradius_bound()
    undecided = np.zeros(pts.shape[0], dtype=bool)
    for t in ts:
        undecided |= (lower <= t + margin) & (upper >= t - margin)
    # cells already resolved by the point primitives need no refinement either
    undecided &= lower < d
    idx = np.flatnonzero(undecided)
    if idx.size > REFINE_BUDGET:
        raise ResourceBudgetError(
            f"{idx.size} cells need exact polytope-gauge refinement "
            f"(budget {REFINE_BUDGET}); use a coarser h or point primitives",
            required_h=math.nan,
        )
    from .geometry import _gauge_to_primitive  # scalar exact fallback

    exact = np.array([
        min(_gauge_to_primitive(pts[i], prim, P) for prim in slow) for i in idx
    ]) if idx.size else np.empty(0)
    coarse = np.minimum(d, lower)
    if idx.size:
        coarse[idx] = np.minimum(d[idx], exact)
    return coarse


def grid_volume(scene: Scene, body: StructuringBody, h: float, ts,
                cell_budget: int = CELL_BUDGET) -> VolumeProfile:
    """Grid profile: V(t) = h^n #{cells: d_B(center, A) <= t} with boundary band.

    The band counts cells whose center sits within half a cell diagonal of the
    offset surface (scaled by the gauge Lipschitz constant), so the true volume
    lies within V +- band.
    """
    ts = np.asarray(ts, dtype=float)
    if h <= 0:
        raise ContractViolation("grid resolution h must be positive")
    if np.any(ts < 0):
        raise ContractViolation("grid times must be nonnegative")
    if not body_is_convex(body):
        raise ContractViolation("grid volumes need a convex structuring body")
    n = scene.dim
    lo, shape = _grid_geometry(scene, body, h, float(ts.max()))
    total = int(np.prod(shape.astype(object)))
    if total > cell_budget:
        required = h * (total / cell_budget) ** (1.0 / n)
        raise ResourceBudgetError(
            f"grid needs {total} cells (> {cell_budget}); smallest feasible h is "
            f"about {required:.6g}",
            required_h=required,
        )
    margin = 0.5 * h * math.sqrt(n) * _body_lipschitz(body)
    cells_per_row = int(np.prod(shape[1:].astype(object))) if n > 1 else 1
    slab_rows = max(1, SLAB_CELLS // max(cells_per_row, 1))
    inside = np.zeros(ts.shape[0], dtype=np.int64)
    boundary = np.zeros(ts.shape[0], dtype=np.int64)
    for i0 in range(0, int(shape[0]), slab_rows):
        i1 = min(i0 + slab_rows, int(shape[0]))
        pts = _slab_points(lo, shape, h, i0, i1)
        d = np.sort(_slab_distances(pts, scene, body, ts, margin))
        inside += np.searchsorted(d, ts, side="right")
        boundary += (
            np.searchsorted(d, ts + margin, side="right")
            - np.searchsorted(d, ts - margin, side="left")
        )
    scalefac = h**n
    return VolumeProfile(
        ts=ts,
        values=inside * scalefac,
        bands=boundary * scalefac,
        method=f"grid(h={h:g})",
        dim=n,
        body_volume=body_volume(body, n),
    )


# ---------------------------------------------------------------------------
# Monte Carlo estimator
# ---------------------------------------------------------------------------


def montecarlo_volume(scene: Scene, body: StructuringBody, t: float,
                      samples: int, seed: int) -> MonteCarloEstimate:
    """Seeded uniform hit-ratio estimate of |A + tB| over the bounding box."""
    if samples < 1000:
        raise ContractViolation("need at least 1000 Monte Carlo samples")
    if not body_is_convex(body):
        raise ContractViolation("Monte Carlo volumes need a convex structuring body")
    n = scene.dim
    lo, hi = scene.bounds()
    blo, bhi = body_axis_extent(body, n)
    lo = lo + t * blo
    hi = hi + t * bhi
    box_vol = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(MC_CHUNK, samples - done)
        pts = rng.uniform(lo, hi, size=(m, n))
        if isinstance(body, EuclideanBall):
            d = scene.edist(pts) / body.radius
        else:
            d = _slab_distances(pts, scene, body, np.array([t]), 0.0)
        hits += int(np.count_nonzero(d <= t))
        done += m
    p_hat = hits / samples
    half = 2.58 * math.sqrt(p_hat * (1.0 - p_hat) / samples) * box_vol
    return MonteCarloEstimate(p_hat * box_vol, half, samples, seed)


# ---------------------------------------------------------------------------
# Exact dispatch
# ---------------------------------------------------------------------------


def _interval_union_1d(scene: Scene) -> IntervalUnion:
    segs = []
    for p in scene.primitives:
        if p.kind == "point":
            segs.append([p.coords[0], p.coords[0]])
        elif p.kind == "box":
            segs.append([p.center[0] - p.half_widths[0], p.center[0] + p.half_widths[0]])
        elif p.kind == "ball":
            segs.append([p.center[0] - p.radius, p.center[0] + p.radius])
        elif p.kind == "segment":
            a, b = p.start[0], p.end[0]
            segs.append([min(a, b), max(a, b)])
        else:
            raise ContractViolation(f"primitive {p.kind} is not one-dimensional")
    return IntervalUnion(np.array(segs))


def _body_intervals_1d(body: StructuringBody) -> IntervalUnion:
    if isinstance(body, EuclideanBall):
        return IntervalUnion([[-body.radius, body.radius]])
    if isinstance(body, IntervalBody):
        return IntervalUnion(body.intervals)
    raise ContractViolation("1D structuring bodies are balls or interval unions")


def _convex_primitive_polynomial(prim, dim: int) -> SteinerPolynomial | None:
    """Steiner polynomial of a single convex primitive against the unit ball."""
    if dim == 2:
        if prim.kind in ("point", "segment", "ball"):
            src = prim if prim.kind != "point" else prim.coords[None, :]
            return steiner_polynomial_2d(src)
        if prim.kind == "box":
            return steiner_polynomial_2d(prim.support_points())
        if prim.kind == "polygon":
            try:
                return steiner_polynomial_2d(prim.vertices)
            except ContractViolation:
                return None  # non-convex polygon: no closed form
        return None
    if dim == 3:
        if prim.kind in ("segment", "ball", "box"):
            return steiner_polynomial_3d(prim)
        if prim.kind == "point":
            return steiner_polynomial_3d(prim.coords[None, :])
        if prim.kind == "polytope":
            return steiner_polynomial_3d(prim)
        if prim.kind == "product":
            return None
        return None
    return None


def _bounding_sphere(prim):
    if prim.kind == "ball":
        return prim.center, prim.radius
    if prim.kind == "point":
        return prim.coords, 0.0
    lo, hi = prim.bounds()
    center = (lo + hi) / 2.0
    return center, float(np.linalg.norm(hi - lo)) / 2.0


def _exact_values(scene: Scene, body: StructuringBody, ts: np.ndarray):
    """(values, derivatives, tag) when an exact closed form applies, else None."""
    n = scene.dim
    if n == 1:
        A = _interval_union_1d(scene)
        B = _body_intervals_1d(body)
        t_hi = float(ts.max()) if ts.max() > 0 else 1.0
        prof = parallel_profile_1d(A, B, t_hi * (1.0 + 1e-12) + 1e-12)
        vals = prof.value(ts)
        idx = np.clip(
            np.searchsorted(prof.breakpoints, ts, side="right") - 1, 0,
            len(prof.slopes) - 1,
        )
        return vals, prof.slopes[idx], "exact"

    if isinstance(body, EuclideanBall):
        r = body.radius
        if n == 2 and all(p.kind == "point" for p in scene.primitives):
            centers = np.array([p.coords for p in scene.primitives])
            vals, ders = [], []
            for t in ts:
                if t == 0:
                    vals.append(0.0)
                    ders.append(0.0)
                    continue
                radius = perturb_off_critical(centers, t * r)
                vals.append(disk_union_area(centers, radius))
                ders.append(disk_union_perimeter(centers, radius) * r)
            return np.array(vals), np.array(ders), "exact"

        polys = [_convex_primitive_polynomial(p, n) for p in scene.primitives]
        if all(poly is not None for poly in polys):
            if len(polys) == 1:
                poly = polys[0]
                return poly(ts * r) , poly.derivative(ts * r) * r, "exact"
            # disjoint additivity: inflated primitives must stay pairwise apart
            spheres = [_bounding_sphere(p) for p in scene.primitives]
            t_hi = float(ts.max()) * r
            ok = True
            for i in range(len(spheres)):
                for j in range(i + 1, len(spheres)):
                    (ci, ri), (cj, rj) = spheres[i], spheres[j]
                    if np.linalg.norm(ci - cj) - ri - rj <= 2.0 * t_hi:
                        ok = False
            if ok:
                vals = sum(poly(ts * r) for poly in polys)
                ders = sum(poly.derivative(ts * r) * r for poly in polys)
                return vals, ders, "exact"
    return None


def volume_at(scene: Scene, body: StructuringBody, t: float, method: str = "auto",
              h: float = 0.05, samples: int = 200_000, seed: int = 0):
    """Single evaluation of |A + tB| -> (value, band)."""
    ts = np.array([float(t)])
    if method in ("auto", "exact"):
        exact = _exact_values(scene, body, ts)
        if exact is not None:
            return float(exact[0][0]), 0.0
        if method == "exact":
            raise ContractViolation("no exact route for this scene/body pairing")
    if method == "mc":
        est = montecarlo_volume(scene, body, t, samples, seed)
        return est.value, est.half_width
    prof = grid_volume(scene, body, h, np.array([t, t * 2 + h, t * 3 + 2 * h]))
    return float(prof.values[0]), float(prof.bands[0])


def profile(scene: Scene, body: StructuringBody, ts, method: str = "auto",
            h: float = 0.05, samples: int = 200_000, seed: int = 0) -> VolumeProfile:
    """Profile of t -> |A + tB| routed to the most exact available method.

    method: "auto" tries exact closed forms first and falls back to the grid;
    "exact" demands a closed form; "grid" and "mc" force the estimators.
    """
    ts = np.asarray(ts, dtype=float)
    n = scene.dim
    if method in ("auto", "exact"):
        exact = _exact_values(scene, body, ts)
        if exact is not None:
            vals, ders, tag = exact
            return VolumeProfile(
                ts=ts, values=vals, bands=np.zeros_like(vals), method=tag, dim=n,
                body_volume=body_volume(body, n), derivatives=ders,
            )
        if method == "exact":
            raise ContractViolation("no exact route for this scene/body pairing")
    if method == "mc":
        vals, bands = [], []
        for t in ts:
            est = montecarlo_volume(scene, body, float(t), samples, seed)
            vals.append(est.value)
            bands.append(est.half_width)
        return VolumeProfile(
            ts=ts, values=np.array(vals), bands=np.array(bands),
            method=f"montecarlo(samples={samples}, seed={seed})", dim=n,
            body_volume=body_volume(body, n),
        )
    return grid_volume(scene, body, h, ts)
