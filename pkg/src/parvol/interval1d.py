"""Exact piecewise-affine parallel volume on the line.

For A and B finite unions of closed intervals, t -> |A + tB| is piecewise
affine; breakpoints are the merge/split events of the moving interval
arrangement and are computed from endpoint-collision equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

_TIE_REL = 1e-12  # coincident event times collapse at this relative tolerance


@dataclass(frozen=True)
class IntervalUnion:
    """Disjoint sorted closed intervals; touching inputs are merged."""

    intervals: np.ndarray

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if iv.shape[0] == 0:
            raise ContractViolation("interval union must be nonempty")
        if np.any(iv[:, 1] < iv[:, 0]):
            raise ContractViolation("interval endpoints must satisfy a <= b")
        iv = iv[np.argsort(iv[:, 0], kind="stable")]
        merged = [iv[0].copy()]
        for a, b in iv[1:]:
            if a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append(np.array([a, b]))
        iv = np.array(merged)
        object.__setattr__(self, "intervals", iv)
        iv.flags.writeable = False

    @staticmethod
    def from_points(points) -> "IntervalUnion":
        pts = np.asarray(points, dtype=float).ravel()
        return IntervalUnion(np.column_stack([pts, pts]))

    @property
    def total_length(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    @property
    def count(self) -> int:
        return self.intervals.shape[0]


@dataclass(frozen=True)
class PiecewiseAffine1D:
    """Continuous piecewise-affine function on [0, t_max].

    breakpoints[0] = 0 and breakpoints[-1] = t_max; slopes[k] applies on
    [breakpoints[k], breakpoints[k+1]].
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    value_at_zero: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        sl = np.asarray(self.slopes, dtype=float)
        if bp.ndim != 1 or bp.shape[0] < 2 or sl.shape[0] != bp.shape[0] - 1:
            raise ContractViolation("need m+1 breakpoints and m slopes")
        if bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
            raise ContractViolation("breakpoints must start at 0 and increase")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        bp.flags.writeable = False
        sl.flags.writeable = False

    @property
    def t_max(self) -> float:
        return float(self.breakpoints[-1])

    def piece_values(self) -> np.ndarray:
        """Function values at every breakpoint."""
        segs = np.diff(self.breakpoints) * self.slopes
        return self.value_at_zero + np.concatenate([[0.0], np.cumsum(segs)])

    def value(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-15) or np.any(t > self.t_max * (1 + 1e-12)):
            raise ContractViolation("evaluation outside [0, t_max]")
        vals = self.piece_values()
        idx = np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1, 0,
                      len(self.slopes) - 1)
        return vals[idx] + (t - self.breakpoints[idx]) * self.slopes[idx]


def union_measure_1d(intervals: np.ndarray) -> float:
    """Lebesgue measure of a union of closed intervals given as an (m, 2) array."""
    iv = intervals[np.argsort(intervals[:, 0], kind="stable")]
    total = 0.0
    cur_a, cur_b = iv[0]
    for a, b in iv[1:]:
        if a <= cur_b:
            cur_b = max(cur_b, b)
        else:
            total += cur_b - cur_a
            cur_a, cur_b = a, b
    return total + (cur_b - cur_a)


def _product_intervals(A: IntervalUnion, B: IntervalUnion, t: float) -> np.ndarray:
    a, b = A.intervals[:, 0], A.intervals[:, 1]
    c, d = B.intervals[:, 0], B.intervals[:, 1]
    lo = (a[:, None] + t * c[None, :]).ravel()
    hi = (b[:, None] + t * d[None, :]).ravel()
    return np.column_stack([lo, hi])


def _coerce(A) -> IntervalUnion:
    if isinstance(A, IntervalUnion):
        return A
    arr = np.asarray(A, dtype=float)
    if arr.ndim == 1:
        return IntervalUnion.from_points(arr)
    return IntervalUnion(arr)


def parallel_profile_1d(A, B, t_max: float) -> PiecewiseAffine1D:
    """Exact t -> |A + tB| on [0, t_max] as a piecewise-affine function.

    A and B are IntervalUnions (a flat array is read as a finite point set).
    Breakpoints are exactly the merge/split events; coincident events collapse.
    """
    A, B = _coerce(A), _coerce(B)
    if t_max <= 0:
        raise ContractViolation("t_max must be positive")

    a, b = A.intervals[:, 0], A.intervals[:, 1]
    c, d = B.intervals[:, 0], B.intervals[:, 1]
    # all moving endpoints e(t) = const + t * slope; the union's combinatorics
    # (hence the measure's slope) can only change when two endpoints collide
    consts = np.concatenate([
        np.add.outer(a, np.zeros_like(c)).ravel(),
        np.add.outer(b, np.zeros_like(d)).ravel(),
    ])
    rates = np.concatenate([
        np.add.outer(np.zeros_like(a), c).ravel(),
        np.add.outer(np.zeros_like(b), d).ravel(),
    ])
    den = rates[:, None] - rates[None, :]
    num = consts[None, :] - consts[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        times = num / den
    times = times[np.isfinite(times)]
    times = times[(times > 0.0) & (times < t_max)]

    events = np.unique(times)
    if events.size:
        scale = max(1.0, float(events.max()))
        keep = np.concatenate([[True], np.diff(events) > _TIE_REL * scale])
        events = events[keep]
    knots = np.concatenate([[0.0], events, [t_max]])

    vals = np.array([union_measure_1d(_product_intervals(A, B, t)) for t in knots])
    slopes = np.diff(vals) / np.diff(knots)

    # collapse knots that are not true slope changes
    keep_bp = [0]
    keep_slopes = [slopes[0]]
    for k in range(1, len(slopes)):
        if abs(slopes[k] - keep_slopes[-1]) > 1e-9 * max(1.0, abs(keep_slopes[-1])):
            keep_bp.append(k)
            keep_slopes.append(slopes[k])
    breakpoints = np.concatenate([knots[keep_bp], [t_max]])
    return PiecewiseAffine1D(breakpoints, np.array(keep_slopes), float(vals[0]))


@dataclass(frozen=True)
class ConcaveCertificate1D:
    is_concave: bool
    first_violation: float | None  # breakpoint where the slope increases
    slope_before: float | None
    slope_after: float | None


def concave_certificate_1d(profile: PiecewiseAffine1D) -> ConcaveCertificate1D:
    """Yes iff consecutive slopes are non-increasing; reports the first increase."""
    s = profile.slopes
    for k in range(1, len(s)):
        if s[k] > s[k - 1]:
            return ConcaveCertificate1D(
                False,
                float(profile.breakpoints[k]),
                float(s[k - 1]),
                float(s[k]),
            )
    return ConcaveCertificate1D(True, None, None, None)


def grid_measure_oracle_1d(A, B, t: float, h: float, lo: float, hi: float) -> float:
    """Independent oracle: mark cells of resolution h whose center lies in A + tB."""
    A, B = _coerce(A), _coerce(B)
    m = int(np.ceil((hi - lo) / h))
    covered = np.zeros(m, dtype=bool)
    for aa, bb in _product_intervals(A, B, t):
        i0 = int(np.ceil((aa - lo) / h - 0.5))
        i1 = int(np.floor((bb - lo) / h - 0.5))
        if i1 >= i0:
            covered[max(i0, 0): min(i1, m - 1) + 1] = True
    return h * float(np.count_nonzero(covered))
