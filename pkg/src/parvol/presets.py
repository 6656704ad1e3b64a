"""Named experiment presets: each reproduces one closed-form example or
counterexample and compares the observed verdicts against the expected ones.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import (
    concavity_report,
    dct_check,
    fiala_check,
    isoperimetric_path,
    kneser_check,
    monotone_deficit_check,
    schneider_c,
)
from .diskunion import connectivity_radius, critical_radii
from .geometry import (
    Ball,
    Box,
    EuclideanBall,
    IntervalBody,
    Point,
    PolytopeBody,
    Scene,
    Segment,
    convex_hull,
    scene_to_json,
    translate_scene,
)
from .interval1d import IntervalUnion, concave_certificate_1d, parallel_profile_1d
from .numgrid import grid_volume, profile, volume_at
from .steiner import counterexample_polynomial_3d, steiner_polynomial_2d
from .voronoi3d import condition_star_check, star_concavity_verify, voronoi_t0


@dataclass(frozen=True)
class PresetResult:
    name: str
    ok: bool
    report: dict


def random_convex_polygon(rng, max_vertices: int = 9, radius: float = 1.0) -> np.ndarray:
    """Seeded random convex polygon as a CCW vertex cycle."""
    for _ in range(50):
        k = int(rng.integers(3, max_vertices + 1))
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, k))
        if np.min(np.diff(angles, append=angles[0] + 2 * math.pi)) < 1e-3:
            continue
        radii = rng.uniform(0.3, 1.0, k) * radius
        pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        try:
            return convex_hull(pts, dim=2).boundary_vertices()
        except Exception:
            continue
    raise RuntimeError("failed to sample a convex polygon")


def connected_point_cloud(rng, n_points: int, step_lo: float = 0.5,
                          step_hi: float = 1.1) -> np.ndarray:
    """Random-walk cluster whose disks connect at moderate radii."""
    pts = [np.zeros(2)]
    for _ in range(n_points - 1):
        ang = rng.uniform(0, 2 * math.pi)
        step = rng.uniform(step_lo, step_hi)
        base = pts[int(rng.integers(0, len(pts)))]
        pts.append(base + step * np.array([math.cos(ang), math.sin(ang)]))
    return np.array(pts)


def _fiala_grid(centers, t_lo: float, count: int = 8) -> np.ndarray:
    """Sample points away from critical radii: gap midpoints plus a tail."""
    crit = critical_radii(centers).values
    crit = crit[crit > t_lo]
    cand = []
    prev = t_lo
    for c in crit:
        if c - prev > 0.1:
            cand.append(0.5 * (prev + c))
        prev = c
    tail_base = (crit.max() if crit.size else t_lo) + 0.3
    cand.extend(tail_base + np.linspace(0.0, 1.5, 4))
    return np.array(sorted(cand)[-count:] if len(cand) > count else sorted(cand))


# ---------------------------------------------------------------------------
# Preset bodies
# ---------------------------------------------------------------------------


def _preset_prop31() -> PresetResult:
    A = IntervalUnion([[0.0, 1.0], [2.0, 3.0], [5.0, 5.5]])
    B = IntervalUnion([[-1.0, 1.0]])
    prof = parallel_profile_1d(A, B, 6.0)
    cert = concave_certificate_1d(prof)
    scene = Scene(1, (Box([0.5], [0.5]), Box([2.5], [0.5]), Box([5.25], [0.25])))
    vprof = profile(scene, EuclideanBall(), np.linspace(0.05, 5.0, 100))
    deficit = monotone_deficit_check(vprof)
    ok = cert.is_concave and deficit.passed
    return PresetResult("prop31-1d", ok, {
        "expected": {"concave": True, "monotone_deficit": True},
        "observed": {"concave": cert.is_concave, "monotone_deficit": deficit.passed},
        "breakpoints": prof.breakpoints.tolist(),
        "slopes": prof.slopes.tolist(),
    })


def _preset_nonmonotone() -> PresetResult:
    A = IntervalUnion.from_points([0.0, 4.0])
    B = IntervalBody([[-5.0, -3.0], [3.0, 5.0]])
    prof = parallel_profile_1d(A, IntervalUnion(B.intervals), 3.0)
    cert = concave_certificate_1d(prof)
    v04 = float(prof.value(0.4))
    v045 = float(prof.value(0.45))
    scene = Scene(1, (Point([0.0]), Point([4.0])))
    vprof = profile(scene, B, np.linspace(0.05, 1.0, 20))
    deficit = monotone_deficit_check(vprof)
    ok = (
        not cert.is_concave
        and abs(v04 - 3.2) < 1e-12
        and abs(v045 - 3.1) < 1e-12
        and v045 < v04
        and not deficit.passed
    )
    return PresetResult("remark-nonmonotone-1d", ok, {
        "expected": {"concave": False, "V(0.4)": 3.2, "V(0.45)": 3.1,
                     "monotone_deficit": False},
        "observed": {"concave": cert.is_concave, "V(0.4)": v04, "V(0.45)": v045,
                     "monotone_deficit": deficit.passed,
                     "first_violation": cert.first_violation},
    })


def _preset_thm32() -> PresetResult:
    rng = np.random.default_rng(320)
    pts = connected_point_cloud(rng, 10)
    t_c = connectivity_radius(pts)
    scene = Scene(2, tuple(Point(p) for p in pts))
    ts = np.linspace(t_c * 1.02 + 1e-6, t_c + 3.0, 60)
    prof = profile(scene, EuclideanBall(), ts)
    rep = concavity_report(prof, 0.5, tol=1e-9)
    fia = fiala_check(pts, _fiala_grid(pts, 0.05))
    ok = (not rep.has_violations) and fia.all_passed
    return PresetResult("thm32-connected-2d", ok, {
        "expected": {"violations": 0, "fiala": True},
        "observed": {"violations": len(rep.violations), "fiala": bool(fia.all_passed),
                     "connectivity_radius": t_c},
    })


def _preset_prop33() -> PresetResult:
    scene = Scene(2, (Ball([0.0, 0.0], 1.0), Point([2.0, 0.0])))
    ts = np.linspace(0.0, 0.49, 50)
    prof = profile(scene, EuclideanBall(), ts)
    closed_form = math.pi * ((1.0 + ts) ** 2 + ts**2)
    dev = float(np.abs(prof.values - closed_form).max())
    rep = concavity_report(prof, 0.5, tol=1e-9)
    deficit = monotone_deficit_check(prof)
    full_range = (
        rep.has_violations
        and rep.violations[0][0] <= ts[1]
        and rep.violations[-1][1] >= ts[-2]
    )
    ok = dev < 1e-9 and full_range and not math.isfinite(rep.t0) and deficit.passed
    return PresetResult("prop33-counterexample", ok, {
        "expected": {"max_closed_form_dev": "<1e-9", "violations": "full range",
                     "monotone_deficit": True},
        "observed": {"max_closed_form_dev": dev,
                     "violations": [list(v) for v in rep.violations],
                     "t0": rep.t0, "monotone_deficit": deficit.passed},
    })


def _preset_prop35() -> PresetResult:
    cv = counterexample_polynomial_3d(81.0, 3)
    coeff_ok = (
        abs(cv.a0 - 8.0) < 1e-12
        and abs(cv.a1 - 24.0) < 1e-12
        and abs(cv.a2 / math.pi - 86.0) < 1e-12
        and cv.verdict == "non-concave-at-0"
    )
    # grid verification for l = 10: quadratic coefficient of the actual set
    l = 10.0
    scene = Scene(3, (Box([0, 0, 0], [1, 1, 1]), Segment([1, 0, 0], [l, 0, 0])))
    ts = np.linspace(0.0, 0.2, 9)
    prof = grid_volume(scene, EuclideanBall(), 0.05, ts)
    fit = np.polynomial.polynomial.polyfit(ts, prof.values, 3)
    a2_expected = counterexample_polynomial_3d(l, 3).a2
    rel_err = abs(fit[2] - a2_expected) / a2_expected
    ok = coeff_ok and rel_err < 0.05
    return PresetResult("prop35-counterexample-3d", ok, {
        "expected": {"a0": 8, "a1": 24, "a2/pi": 86, "verdict": "non-concave-at-0",
                     "grid_a2_rel_err": "<5%"},
        "observed": {"a0": cv.a0, "a1": cv.a1, "a2/pi": cv.a2 / math.pi,
                     "verdict": cv.verdict, "grid_a2": fit[2],
                     "grid_a2_expected": a2_expected, "grid_a2_rel_err": rel_err},
    })


def _preset_prop36() -> PresetResult:
    tri = np.array([[0.0, 0.0], [2.0, 0.0], [0.5, 1.5]])
    boundary = Scene(2, tuple(
        Segment(tri[i], tri[(i + 1) % 3]) for i in range(3)
    ))
    hull = convex_hull(tri, dim=2)
    center = hull.vertices.mean(axis=0)
    body = PolytopeBody(convex_hull(tri - center, dim=2))
    scene0 = translate_scene(boundary, -center)
    est = schneider_c(scene0, samples=1500, seed=36)
    # beyond c the parallel set is the scaled hull, so V(t) = (1+t)^2 |K|
    area = hull.volume
    ts = np.linspace(1.0, 6.0, 25)
    vals = (1.0 + ts) ** 2 * area
    d2 = np.abs(np.diff(np.sqrt(vals), 2)).max()
    v_grid, band = volume_at(scene0, body, 1.5, method="grid", h=0.02)
    ident_ok = abs(v_grid - 2.5**2 * area) <= band + 1e-9
    ok = est.c_high <= 1.0 + 1e-3 and d2 < 1e-6 and ident_ok
    return PresetResult("prop36-hull-affine", ok, {
        "expected": {"c_high": "<= 1 + 1e-3", "sqrt_affine_second_diff": "<1e-6",
                     "grid_identity": True},
        "observed": {"c_low": est.c_low, "c_high": est.c_high, "status": est.status,
                     "sqrt_affine_second_diff": float(d2),
                     "grid_identity": ident_ok, "grid_value": v_grid,
                     "grid_expected": 2.5**2 * area, "grid_band": band},
    })


def _preset_star() -> PresetResult:
    tetra = np.array([[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]], float)
    star = condition_star_check(tetra)
    pts = np.vstack([tetra, tetra.mean(axis=0)])
    t0res = voronoi_t0(pts)
    report, _ = star_concavity_verify(pts, steps=12, h=0.08)
    ok = star.passed and t0res.t0 >= t0res.diameter - 1e-12 and not report.has_violations
    return PresetResult("star-tetra-centroid", ok, {
        "expected": {"condition_star": True, "t0_ge_diam": True, "violations": 0},
        "observed": {"condition_star": star.passed, "t0": t0res.t0,
                     "diameter": t0res.diameter,
                     "bounded_cells": len(t0res.bounded_cells),
                     "violations": len(report.violations)},
    })


def _preset_dct() -> PresetResult:
    rng = np.random.default_rng(9)
    failures = 0
    for _ in range(500):
        P = random_convex_polygon(rng)
        Q = random_convex_polygon(rng)
        if not dct_check(P, Q).passed:
            failures += 1
    P = random_convex_polygon(rng)
    hom = dct_check(P, 2.0 * P)
    hom_eq = abs(hom.lhs - hom.rhs) < 1e-12
    ok = failures == 0 and hom_eq
    return PresetResult("dct-2d-random", ok, {
        "expected": {"failures": 0, "homothetic_equality": True},
        "observed": {"failures": failures, "homothetic_equality": hom_eq,
                     "homothetic_slack": hom.lhs - hom.rhs},
    })


def _preset_isoperimetric() -> PresetResult:
    from .numgrid import VolumeProfile

    rng = np.random.default_rng(10)
    bad_monotone = 0
    worst_gap = 0.0
    for _ in range(100):
        verts = random_convex_polygon(rng)
        poly = steiner_polynomial_2d(verts)
        ts = np.linspace(0.1, 50.0, 120)
        prof = VolumeProfile(ts, poly(ts), np.zeros_like(ts), "exact", 2, math.pi,
                             derivatives=poly.derivative(ts))
        path = isoperimetric_path(prof)
        if not path.non_increasing:
            bad_monotone += 1
        worst_gap = max(worst_gap, path.final_gap)
    ok = bad_monotone == 0 and worst_gap < 0.01
    return PresetResult("isoperimetric-path", ok, {
        "expected": {"non_increasing_failures": 0, "final_gap": "<1%"},
        "observed": {"non_increasing_failures": bad_monotone,
                     "worst_final_gap": worst_gap},
    })


PRESETS = {
    "prop31-1d": _preset_prop31,
    "remark-nonmonotone-1d": _preset_nonmonotone,
    "thm32-connected-2d": _preset_thm32,
    "prop33-counterexample": _preset_prop33,
    "prop35-counterexample-3d": _preset_prop35,
    "prop36-hull-affine": _preset_prop36,
    "star-tetra-centroid": _preset_star,
    "dct-2d-random": _preset_dct,
    "isoperimetric-path": _preset_isoperimetric,
}


def run_preset(name: str) -> PresetResult:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    start = time.perf_counter()
    result = PRESETS[name]()
    elapsed = time.perf_counter() - start
    report = dict(result.report)
    report["runtime_s"] = round(elapsed, 3)
    return PresetResult(result.name, result.ok, report)
