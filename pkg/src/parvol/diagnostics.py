"""Concavity, monotonicity, and isoperimetric checks over volume profiles.

Concavity of V^(1/n) is tested through second differences with explicit
slack propagated from profile error bands; every verdict is reproducible
given (scene, seed, grid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import ContractViolation
from .diskunion import (
    critical_radii,
    disk_union_area,
    euler_summary,
)
from .geometry import (
    Ball,
    ConvexPolytope,
    EuclideanBall,
    Polygon,
    PolytopeBody,
    Scene,
    StructuringBody,
    convex_hull,
    gauge_distance,
    gauge_distance_points,
    scale_scene,
    translate_scene,
)
from .numgrid import VolumeProfile, volume_at
from .steiner import mixed_area, steiner_polynomial_2d, _as_cycle, _area, _perimeter


# ---------------------------------------------------------------------------
# Concavity report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcavityReport:
    exponent: float
    violations: tuple          # (t_lo, t_hi, magnitude) per flagged run
    t0: float                  # least sampled t after which no violation; inf if none exists
    tolerance: float

    @property
    def has_violations(self) -> bool:
        return len(self.violations) > 0


def _band_slack(bands: np.ndarray, values: np.ndarray, exponent: float, i: int) -> float:
    # first-order propagation of the error bands through the power map
    factor = max(1.0, exponent * values[i] ** (exponent - 1.0))
    return (bands[i - 1] + 2.0 * bands[i] + bands[i + 1]) * factor


def concavity_report(profile: VolumeProfile, exponent: float,
                     tol: float = 1e-9) -> ConcavityReport:
    """Flag second differences of V^exponent exceeding tolerance plus band slack."""
    if not (0.0 < exponent <= 1.0):
        raise ContractViolation("exponent must lie in (0, 1]")
    ts, V, bands = profile.ts, profile.values, profile.bands
    if np.any(V <= 0):
        raise ContractViolation("concavity report needs strictly positive volumes")
    W = V**exponent
    m = len(ts)
    flagged = np.zeros(m, dtype=bool)
    excess = np.zeros(m)
    for i in range(1, m - 1):
        h1 = ts[i] - ts[i - 1]
        h2 = ts[i + 1] - ts[i]
        hbar = 0.5 * (h1 + h2)
        d2 = 2.0 * (h1 * W[i + 1] - (h1 + h2) * W[i] + h2 * W[i - 1]) / (h1 * h2 * (h1 + h2))
        undivided = d2 * hbar * hbar
        tol_eff = tol + _band_slack(bands, V, exponent, i)
        if undivided > tol_eff:
            flagged[i] = True
            excess[i] = undivided - tol_eff
    violations = []
    i = 1
    while i < m - 1:
        if flagged[i]:
            j = i
            while j + 1 < m - 1 and flagged[j + 1]:
                j += 1
            violations.append(
                (float(ts[i - 1]), float(ts[j + 1]), float(excess[i:j + 1].max()))
            )
            i = j + 1
        else:
            i += 1
    if not violations:
        t0 = float(ts[0])
    else:
        last = int(np.flatnonzero(flagged).max())
        t0 = math.inf if last == m - 2 else float(ts[last + 1])
    return ConcavityReport(exponent, tuple(violations), t0, tol)


# ---------------------------------------------------------------------------
# Kneser property and monotone deficit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KneserCheck:
    passed: bool
    triples_checked: int
    worst_excess: float
    worst_triple: tuple | None  # (t0, t1, lam)


def kneser_check(profile: VolumeProfile, n: int | None = None,
                 lambdas=(1.5, 2.0, 3.0), tol: float = 1e-9) -> KneserCheck:
    """V(l t1) - V(l t0) <= l^n (V(t1) - V(t0)) over grid-aligned triples."""
    n = profile.dim if n is None else n
    ts, V, bands = profile.ts, profile.values, profile.bands
    m = len(ts)
    spacing = float(np.diff(ts).min())
    lookup_tol = max(1e-9 * max(1.0, float(ts[-1])), 1e-9 * spacing)

    def index_of(x: float) -> int | None:
        k = int(np.searchsorted(ts, x))
        for cand in (k - 1, k, k + 1):
            if 0 <= cand < m and abs(ts[cand] - x) <= lookup_tol:
                return cand
        return None

    checked = 0
    worst = -math.inf
    worst_triple = None
    passed = True
    for lam in lambdas:
        for i in range(m):
            if ts[i] <= 0:
                continue
            ki = index_of(lam * ts[i])
            if ki is None:
                continue
            for j in range(i, m):
                kj = index_of(lam * ts[j])
                if kj is None:
                    continue
                lhs = V[kj] - V[ki]
                rhs = lam**n * (V[j] - V[i])
                slack = bands[kj] + bands[ki] + lam**n * (bands[j] + bands[i]) + tol
                checked += 1
                ex = lhs - rhs - slack
                if ex > worst:
                    worst = ex
                    worst_triple = (float(ts[i]), float(ts[j]), float(lam))
                if ex > 0:
                    passed = False
    if checked == 0:
        raise ContractViolation("grid admits no aligned Kneser triples")
    return KneserCheck(passed, checked, worst, worst_triple)


@dataclass(frozen=True)
class MonotoneDeficitCheck:
    passed: bool
    worst_drop: float
    worst_t: float | None


def monotone_deficit_check(profile: VolumeProfile, body_vol: float | None = None,
                           n: int | None = None, tol: float = 1e-9) -> MonotoneDeficitCheck:
    """t -> V(t) - t^n |B| must be non-decreasing (convex structuring body)."""
    n = profile.dim if n is None else n
    body_vol = profile.body_volume if body_vol is None else body_vol
    ts, V, bands = profile.ts, profile.values, profile.bands
    deficit = V - ts**n * body_vol
    worst = -math.inf
    worst_t = None
    passed = True
    for i in range(len(ts) - 1):
        drop = deficit[i] - deficit[i + 1] - (bands[i] + bands[i + 1] + tol)
        if drop > worst:
            worst = drop
            worst_t = float(ts[i + 1])
        if drop > 0:
            passed = False
    return MonotoneDeficitCheck(passed, worst, worst_t)


# ---------------------------------------------------------------------------
# Isoperimetric path
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsoperimetricPath:
    ts: np.ndarray
    ratios: np.ndarray
    non_increasing: bool
    final_ratio: float
    limit_ratio: float

    @property
    def final_gap(self) -> float:
        return abs(self.final_ratio - self.limit_ratio) / self.limit_ratio


def isoperimetric_path(profile: VolumeProfile, tol: float = 1e-9) -> IsoperimetricPath:
    """Surface-to-volume ratio |dV/dt| / V^((n-1)/n) along the profile.

    Uses exact derivatives when the profile carries them, else band-aware
    central differences.  The limiting value is n |B|^(1/n).
    """
    n = profile.dim
    ts, V, bands = profile.ts, profile.values, profile.bands
    if np.any(V <= 0):
        raise ContractViolation("isoperimetric path needs positive volumes")
    if profile.derivatives is not None:
        D = np.asarray(profile.derivatives, dtype=float)
        d_err = np.zeros_like(D)
    else:
        D = np.gradient(V, ts)
        d_err = np.zeros_like(D)
        for i in range(len(ts)):
            lo = max(i - 1, 0)
            hi = min(i + 1, len(ts) - 1)
            d_err[i] = (bands[lo] + bands[hi]) / (ts[hi] - ts[lo])
    p = (n - 1.0) / n
    ratios = D / V**p
    u = d_err / V**p + p * ratios * bands / V
    non_inc = True
    for i in range(len(ts) - 1):
        if ratios[i + 1] > ratios[i] + u[i] + u[i + 1] + tol:
            non_inc = False
    limit = n * profile.body_volume ** (1.0 / n)
    return IsoperimetricPath(ts, ratios, non_inc, float(ratios[-1]), limit)


# ---------------------------------------------------------------------------
# The two-body surface-to-volume inequality (2D convex case)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DctCheck:
    passed: bool
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs


def _body_2d_measures(K):
    if isinstance(K, Ball):
        return math.pi * K.radius**2, 2.0 * math.pi * K.radius
    cyc = _as_cycle(K)
    if len(cyc) < 3:
        L = float(np.linalg.norm(cyc[-1] - cyc[0]))
        return 0.0, 2.0 * L
    return _area(cyc), _perimeter(cyc)


def dct_check(A, B, tol: float = 1e-12) -> DctCheck:
    """|A+B|/per(A+B) >= |A|/per(A) + |B|/per(B), exact for convex 2D bodies."""
    area_a, per_a = _body_2d_measures(A)
    area_b, per_b = _body_2d_measures(B)
    if per_a <= 0 or per_b <= 0:
        raise ContractViolation("both bodies need positive perimeter")
    v = mixed_area(A, B)
    area_sum = area_a + 2.0 * v + area_b
    per_sum = per_a + per_b
    lhs = area_sum / per_sum
    rhs = area_a / per_a + area_b / per_b
    return DctCheck(lhs >= rhs - tol, lhs, rhs)


# ---------------------------------------------------------------------------
# Equivalent parametrizations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceCheck:
    reports: dict
    agree: bool

    @property
    def verdicts(self) -> dict:
        return {k: r.has_violations for k, r in self.reports.items()}


def equivalence_check(scene: Scene, body: StructuringBody, t_grid,
                      method: str = "auto", h: float = 0.05,
                      tol: float = 1e-9) -> EquivalenceCheck:
    """Concavity verdicts for the four equivalent parametrizations of |sA + tB|.

    (i) t -> |A+tB|, (ii) s -> |sA+B|, (iii) lambda -> |(1-l)A+lB| with
    lambda = t/(1+t), (iv) the diagonal u -> |(1+u)A + uB|.
    """
    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts <= 0):
        raise ContractViolation("equivalence grid must be strictly positive")
    n = scene.dim
    bvol = 1.0  # placeholder; reports do not use it

    def prof(param_ts, evaluate):
        vals, bands = [], []
        for u in param_ts:
            v, b = evaluate(float(u))
            vals.append(v)
            bands.append(b)
        return VolumeProfile(
            ts=param_ts, values=np.array(vals), bands=np.array(bands),
            method="dispatch", dim=n, body_volume=bvol,
        )

    p1 = prof(ts, lambda t: volume_at(scene, body, t, method=method, h=h))
    p2 = prof(ts, lambda s: volume_at(scale_scene(scene, s), body, 1.0,
                                      method=method, h=h))
    lam = ts / (1.0 + ts)
    p3 = prof(lam, lambda l: volume_at(scale_scene(scene, 1.0 - l), body, l,
                                       method=method, h=h))
    p4 = prof(ts, lambda u: volume_at(scale_scene(scene, 1.0 + u), body, u,
                                      method=method, h=h))
    reports = {
        "dilate_body": concavity_report(p1, 1.0 / n, tol),
        "dilate_scene": concavity_report(p2, 1.0 / n, tol),
        "interpolate": concavity_report(p3, 1.0 / n, tol),
        "diagonal": concavity_report(p4, 1.0 / n, tol),
    }
    verdicts = {k: r.has_violations for k, r in reports.items()}
    return EquivalenceCheck(reports, len(set(verdicts.values())) == 1)


# ---------------------------------------------------------------------------
# Schneider index c(A)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchneiderEstimate:
    c_low: float
    c_high: float
    samples: int
    status: str  # "bracketed" | "upper-bound-only"


def _hull_of_scene(scene: Scene) -> ConvexPolytope:
    if scene.dim not in (2, 3):
        raise ContractViolation("Schneider index needs dimension 2 or 3")
    return convex_hull(scene.support_points(), dim=scene.dim)


def _coverage_excess(y: np.ndarray, t: float, scene: Scene, hull_body: PolytopeBody) -> float:
    """d_hull((1+t) y, A) - t for a point y of the hull."""
    return gauge_distance((1.0 + t) * y, scene, hull_body) - t


def _inclusion_holds(scene: Scene, hull: ConvexPolytope, t: float, samples: int,
                     seed: int, tol: float = 1e-9) -> bool:
    """Sampling test of (1+t) conv(A) subset A + t conv(A), with local polish."""
    n = scene.dim
    body = PolytopeBody(hull)
    rng_engine = qmc.Sobol(d=n, scramble=True, seed=seed)
    lo = hull.vertices.min(axis=0)
    hi = hull.vertices.max(axis=0)
    pts = np.empty((0, n))
    attempts = 0
    while len(pts) < samples and attempts < 12:
        raw = qmc.scale(rng_engine.random(samples), lo, hi)
        keep = hull.gauge(raw) <= 1.0
        pts = np.vstack([pts, raw[keep]])
        attempts += 1
    pts = np.vstack([pts[:samples], hull.vertices, [hull.vertices.mean(axis=0)]])
    d = gauge_distance_points((1.0 + t) * pts, scene, body)
    excess = d - t
    if float(excess.max()) > tol:
        return False
    # polish the most suspicious candidates: the sampling test alone can miss
    # a shrinking uncovered pocket near the threshold
    order = np.argsort(excess)[::-1][:8]
    for k in order:
        res = minimize(
            lambda y: -(_coverage_excess(y, t, scene, body)
                        - 1e3 * max(0.0, float(hull.gauge(y)) - 1.0)),
            pts[k],
            method="Nelder-Mead",
            options={"maxiter": 200, "xatol": 1e-10, "fatol": 1e-12},
        )
        if -res.fun > tol:
            return False
    return True


def schneider_c(scene: Scene, samples: int = 2000, seed: int = 0,
                resolution: float = 1e-3) -> SchneiderEstimate:
    """Bracket c(A) = inf{t : A + t conv(A) = (1+t) conv(A)} by bisection.

    Failures of the sampling test are hard lower-bound evidence; successes
    are upper-bound evidence at sampling density.  c <= n always holds.
    """
    n = scene.dim
    hull = _hull_of_scene(scene)
    center = hull.vertices.mean(axis=0)
    scene0 = translate_scene(scene, -center)
    hull0 = convex_hull(hull.vertices - center, dim=n)

    saw_failure = False
    lo_t, hi_t = 0.0, float(n)
    if _inclusion_holds(scene0, hull0, 0.0, samples, seed):
        return SchneiderEstimate(0.0, 0.0, samples, "upper-bound-only")
    saw_failure = True
    while hi_t - lo_t > resolution:
        mid = 0.5 * (lo_t + hi_t)
        if _inclusion_holds(scene0, hull0, mid, samples, seed):
            hi_t = mid
        else:
            lo_t = mid
    status = "bracketed" if saw_failure else "upper-bound-only"
    return SchneiderEstimate(lo_t, min(hi_t, float(n)), samples, status)


# ---------------------------------------------------------------------------
# Hull gap
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HullGapReport:
    ts: np.ndarray
    gaps: np.ndarray
    nonnegative: bool
    convex: bool | None          # 2D connected scenes
    non_increasing: bool | None  # 2D connected scenes
    bounded_constant: float | None  # 3D: sup of gap * t^(3-n) = sup gap


def hull_gap(profile_A: VolumeProfile, profile_hull: VolumeProfile,
             tol: float = 1e-9) -> HullGapReport:
    """gap(t) = V_hull(t) - V_A(t): sign, convexity (2D), boundedness (3D)."""
    ta, th = profile_A.ts, profile_hull.ts
    if len(ta) != len(th) or np.max(np.abs(ta - th)) > 1e-12 * max(1.0, ta[-1]):
        raise ContractViolation("profiles must share the same t grid")
    if profile_A.dim != profile_hull.dim:
        raise ContractViolation("profiles must share the ambient dimension")
    gaps = profile_hull.values - profile_A.values
    slack = profile_hull.bands + profile_A.bands
    nonneg = bool(np.all(gaps >= -slack - tol))
    convex = non_inc = None
    bounded = None
    if profile_A.dim == 2:
        convex = True
        for i in range(1, len(ta) - 1):
            d2 = gaps[i + 1] - 2.0 * gaps[i] + gaps[i - 1]
            if d2 < -(slack[i - 1] + 2.0 * slack[i] + slack[i + 1] + tol):
                convex = False
        non_inc = True
        for i in range(len(ta) - 1):
            if gaps[i + 1] > gaps[i] + slack[i] + slack[i + 1] + tol:
                non_inc = False
    elif profile_A.dim == 3:
        bounded = float(np.max(gaps))
    return HullGapReport(ta, gaps, nonneg, convex, non_inc, bounded)


# ---------------------------------------------------------------------------
# Fiala curvature bound for finite planar sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FialaCheck:
    ts: np.ndarray
    second_derivatives: np.ndarray
    bounds: np.ndarray
    passed: np.ndarray
    all_passed: bool


def fiala_check(centers, ts, fd_step: float | None = None,
                tol: float = 1e-5) -> FialaCheck:
    """Check V''(t) <= 2 pi (p(t) - q(t)) by symmetric second differences.

    Every t must keep a margin of at least 10 fd_step from the critical radii.
    """
    ts = np.asarray(ts, dtype=float)
    crit = critical_radii(centers).values
    margins = (
        np.abs(ts[:, None] - crit[None, :]).min(axis=1)
        if crit.size else np.full(len(ts), math.inf)
    )
    margin = float(margins.min(initial=math.inf))
    if fd_step is None:
        fd_step = min(1e-3, margin / 20.0) if math.isfinite(margin) else 1e-3
    if margin < 10.0 * fd_step:
        raise ContractViolation(
            f"grid point within {margin:.3g} of a critical radius "
            f"(need >= {10 * fd_step:.3g})"
        )
    second = np.empty(len(ts))
    bounds = np.empty(len(ts))
    for k, t in enumerate(ts):
        a_minus = disk_union_area(centers, t - fd_step)
        a_mid = disk_union_area(centers, t)
        a_plus = disk_union_area(centers, t + fd_step)
        second[k] = (a_plus - 2.0 * a_mid + a_minus) / fd_step**2
        s = euler_summary(centers, t)
        bounds[k] = 2.0 * math.pi * (s.components - s.genus)
    passed = second <= bounds + tol * np.maximum(1.0, np.abs(bounds))
    return FialaCheck(ts, second, bounds, passed, bool(np.all(passed)))
