"""Lebedeva's six-point space and its admissible perturbation bound.

Six distinct points in R^3: x1..x4 a planar convex quadrilateral whose open
diagonals cross, and x5, x6 on opposite sides so that the open segment
(x5, x6) meets the quadrilateral exactly once, away from all six segments
[xi, xj].  The perturbed metric adds epsilon to the x5-x6 distance only; the
pipeline computes geometric constants (h, H, theta, delta, c) and an explicit
bound C such that the perturbed space keeps satisfying the whole ANN family
for every epsilon in (0, C].

Point labels in error messages are 1-based (they name the points x1..x6);
array indices are 0-based as everywhere else.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    interior_angle,
    point_hull_distance,
    point_segment_distance,
    segment_segment_distance,
)
from .spaces import SemimetricSpace, _freeze, from_points, PointCloud

DEFAULT_POINTS = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.1, 0.17, -1.0],
    ]
)

# Relative tolerance for authored coordinates; parameters of open segments
# must clear their endpoints by this margin.
_REL_TOL = 1e-9


class ConditionError(ValueError):
    """A configuration fails the six-point placement conditions.

    Codes: diagonals_disjoint, diagonals_overlap, crossing_count,
    crossing_on_edge, not_convex_position, degenerate_hull,
    zero_length_edge, no_feasible_delta, non_positive_C.
    """

    def __init__(self, code: str, message: str, detail=None):
        self.code = code
        self.detail = detail
        super().__init__(message)


def _check_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape != (6, 3):
        raise ValueError(f"expected six points in 3-space, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    scale = _scale(pts)
    for i in range(6):
        for j in range(i + 1, 6):
            if np.linalg.norm(pts[i] - pts[j]) <= _REL_TOL * scale:
                raise ValueError(f"points x{i + 1} and x{j + 1} are not distinct")
    return pts


def _scale(pts: np.ndarray) -> float:
    return max(1.0, float(np.max(np.linalg.norm(pts, axis=1))))


def validate_conditions(points) -> tuple[np.ndarray, np.ndarray]:
    """Check the two placement conditions; return (y0, crossing).

    y0 is the crossing of the open diagonals (x1,x3) and (x2,x4); crossing is
    the single point where the open segment (x5,x6) meets the quadrilateral
    minus all six segments [xi,xj], i,j in 1..4.
    """
    pts = _check_points(points)
    x1, x2, x3, x4, x5, x6 = pts
    scale = _scale(pts)
    tol = _REL_TOL * scale

    d1 = x3 - x1
    d2 = x4 - x2
    n1 = float(np.linalg.norm(d1))
    n2 = float(np.linalg.norm(d2))
    cross = np.cross(d1, d2)
    ncross = float(np.linalg.norm(cross))
    if ncross <= _REL_TOL * n1 * n2:
        # Parallel diagonals: collinear overlap or plain disjointness.
        if point_segment_distance(x2, x1, x3) <= tol or point_segment_distance(x4, x1, x3) <= tol:
            raise ConditionError(
                "diagonals_overlap", "diagonals are collinear and overlap"
            )
        raise ConditionError(
            "diagonals_disjoint", "diagonals are parallel and never cross"
        )
    # Line-line closest parameters: minimize |x1 + u d1 - (x2 + v d2)|.
    a = float(d1 @ d1)
    b = float(d1 @ d2)
    e = float(d2 @ d2)
    r = x1 - x2
    c = float(d1 @ r)
    f = float(d2 @ r)
    den = a * e - b * b
    u = (b * f - c * e) / den
    v = (a * f - b * c) / den
    p_on1 = x1 + u * d1
    p_on2 = x2 + v * d2
    if float(np.linalg.norm(p_on1 - p_on2)) > tol:
        raise ConditionError(
            "diagonals_disjoint", "diagonals are skew: no common point"
        )
    if not (_REL_TOL < u < 1 - _REL_TOL and _REL_TOL < v < 1 - _REL_TOL):
        raise ConditionError(
            "diagonals_disjoint",
            "diagonal lines meet outside the open segments",
            detail={"u": u, "v": v},
        )
    y0 = 0.5 * (p_on1 + p_on2)

    normal = cross / ncross
    # Convex position of the quadrilateral x1 x2 x3 x4 (cyclic order), as a
    # defensive re-check: crossing open diagonals already imply it.
    quad = [x1, x2, x3, x4]
    for i in range(4):
        edge = quad[(i + 1) % 4] - quad[i]
        to_next = quad[(i + 2) % 4] - quad[i]
        turn = float(np.cross(edge, to_next) @ normal)
        if i == 0:
            orientation = math.copysign(1.0, turn)
        if turn * orientation <= tol * float(np.linalg.norm(edge)):
            raise ConditionError(
                "not_convex_position",
                "x1..x4 are not in convex position in a plane",
            )

    s5 = float((x5 - y0) @ normal)
    s6 = float((x6 - y0) @ normal)
    if abs(s5) <= tol and abs(s6) <= tol:
        raise ConditionError(
            "crossing_count",
            "segment (x5,x6) lies in the quadrilateral plane",
            detail={"count": None},
        )
    if abs(s5) <= tol or abs(s6) <= tol or s5 * s6 > 0.0:
        raise ConditionError(
            "crossing_count",
            "open segment (x5,x6) does not cross the quadrilateral plane",
            detail={"count": 0},
        )
    t = s5 / (s5 - s6)
    yc = x5 + t * (x6 - x5)

    for i, j in itertools.combinations(range(4), 2):
        if point_segment_distance(yc, pts[i], pts[j]) <= tol:
            raise ConditionError(
                "crossing_on_edge",
                f"crossing point lies on segment [x{i + 1}, x{j + 1}]",
                detail={"pair": (i + 1, j + 1), "point": yc.tolist()},
            )
    for i in range(4):
        edge = quad[(i + 1) % 4] - quad[i]
        sgn = float(np.cross(edge, yc - quad[i]) @ normal) / float(np.linalg.norm(edge))
        if sgn * orientation < -tol:
            raise ConditionError(
                "crossing_count",
                "segment (x5,x6) meets the quadrilateral plane outside the hull",
                detail={"count": 0},
            )
    return y0, yc


def compute_h_H(points) -> tuple[float, float]:
    """Hull-distance extremes of x5 and x6 to the opposite five-point hulls."""
    pts = _check_points(points)
    tol = _REL_TOL * _scale(pts)
    h = math.inf
    H = 0.0
    for apex, others in ((4, (0, 1, 2, 3, 5)), (5, (0, 1, 2, 3, 4))):
        verts = pts[list(others)]
        if np.all(np.linalg.norm(verts - verts[0], axis=1) <= tol):
            raise ConditionError(
                "degenerate_hull", "hull vertices coincide (affine dimension 0)"
            )
        h = min(h, point_hull_distance(pts[apex], verts))
        H = max(H, max(float(np.linalg.norm(pts[apex] - v)) for v in verts))
    return h, H


def compute_theta(points) -> float:
    """Minimum over k in 1..4 of the angles at x5 and at x6 toward x_k."""
    pts = _check_points(points)
    x5, x6 = pts[4], pts[5]
    try:
        angles = [interior_angle(x5, pts[k], x6) for k in range(4)]
        angles += [interior_angle(x6, pts[k], x5) for k in range(4)]
    except ValueError as exc:
        raise ConditionError("zero_length_edge", str(exc)) from exc
    return min(angles)


def _delta_feasible(pts: np.ndarray, h: float, delta: float) -> bool:
    """Sufficient tube-separation conditions at radius delta.

    (a) the delta-tubes of [x5,x6] and of every [xi,xj] (i,j in 1..4) are
    disjoint; (b) any point of [x5,x6] at least h/2 - delta away from an
    endpoint e stays 2*delta away from both cones [e, xi].  (b) forces all
    tube intersections near x5 or x6 into the h/2 balls around them.
    """
    x5, x6 = pts[4], pts[5]
    for i, j in itertools.combinations(range(4), 2):
        if segment_segment_distance(x5, x6, pts[i], pts[j]) < 2.0 * delta:
            return False
    cut = 0.5 * h - delta
    for e, o in ((x5, x6), (x6, x5)):
        u = (o - e) / np.linalg.norm(o - e)
        start = e + cut * u
        for i in range(4):
            if segment_segment_distance(start, o, e, pts[i]) < 2.0 * delta:
                return False
    return True


def compute_delta(points, h: float) -> float:
    """Certified tube-separation radius in (0, h/2).

    Bisects the monotone feasibility predicate and returns 0.95 times the
    located supremum so every certificate re-verifies with strict margin.
    """
    pts = _check_points(points)
    probe = 1e-12 * h
    if not _delta_feasible(pts, h, probe):
        raise ConditionError(
            "no_feasible_delta",
            "no positive tube radius separates the segments; the placement "
            "conditions fail numerically",
        )
    hi_cap = 0.5 * h * (1.0 - 1e-12)
    if _delta_feasible(pts, h, hi_cap):
        sup = hi_cap
    else:
        lo, hi = probe, hi_cap
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if _delta_feasible(pts, h, mid):
                lo = mid
            else:
                hi = mid
        sup = lo
    delta = 0.95 * sup
    if delta <= 0.0 or not _delta_feasible(pts, h, delta):
        raise ConditionError(
            "no_feasible_delta", "certificate re-check failed at returned delta"
        )
    return delta


def f_inv(D: float, y: float) -> float:
    """Inverse of f(eps) = (D + eps)^2 - D^2, i.e. sqrt(D^2 + y) - D."""
    if D <= 0.0:
        raise ValueError(f"D must be positive, got {D}")
    if y < 0.0:
        raise ValueError(f"y must be nonnegative, got {y}")
    return y / (math.sqrt(D * D + y) + D)


def compute_c(h: float, H: float, theta: float, gamma: float, D: float) -> float:
    """min of h^4 sin^2(theta/2) / ((1+gamma)^2 D H), gamma^2 D H, h^2 / 4."""
    for name, v in (("h", h), ("H", H), ("theta", theta), ("gamma", gamma), ("D", D)):
        if v <= 0.0:
            raise ValueError(f"{name} must be positive, got {v}")
    sin2 = math.sin(0.5 * theta) ** 2
    return min(
        h ** 4 * sin2 / ((1.0 + gamma) ** 2 * D * H),
        gamma ** 2 * D * H,
        0.25 * h * h,
    )


def compute_C(
    h: float, theta: float, delta: float, gamma: float, c: float, D: float
) -> float:
    """Admissible perturbation bound: min of four f_inv terms."""
    denom = (1.0 + gamma) * D - h
    if denom <= 0.0:
        raise ConditionError(
            "non_positive_C", f"(1+gamma)*D - h = {denom} is not positive"
        )
    sin2 = math.sin(0.5 * theta) ** 2
    args = (
        0.5 * delta * delta,
        h * gamma * gamma * D * D / denom,
        h * sin2 * D * D / denom,
        c * h / (2.0 * (1.0 + gamma) * D),
    )
    if min(args) <= 0.0:
        raise ConditionError(
            "non_positive_C",
            f"a bound argument is not positive: {args}; upstream constants are broken",
        )
    C = min(f_inv(D, y) for y in args)
    if C <= 0.0:
        raise ConditionError("non_positive_C", f"computed bound {C} is not positive")
    return C


@dataclass(frozen=True)
class LebedevaInstance:
    """A validated six-point configuration with all derived constants."""

    points: np.ndarray
    gamma: float
    h: float
    H: float
    theta: float
    delta: float
    c: float
    C: float
    y0: np.ndarray
    crossing: np.ndarray

    @property
    def x5x6(self) -> float:
        return float(np.linalg.norm(self.points[4] - self.points[5]))


def build_instance(points, gamma: float = 1.0) -> LebedevaInstance:
    """Run the full pipeline: validate conditions, derive every constant."""
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    pts = _check_points(points)
    y0, crossing = validate_conditions(pts)
    h, H = compute_h_H(pts)
    theta = compute_theta(pts)
    delta = compute_delta(pts, h)
    D = float(np.linalg.norm(pts[4] - pts[5]))
    c = compute_c(h, H, theta, gamma, D)
    C = compute_C(h, theta, delta, gamma, c, D)
    if not (0.0 < h <= H):
        raise ConditionError("degenerate_hull", f"need 0 < h <= H, got h={h}, H={H}")
    if not (0.0 < delta < 0.5 * h):
        raise ConditionError(
            "no_feasible_delta", f"need 0 < delta < h/2, got delta={delta}"
        )
    if D < 2.0 * h * (1.0 - _REL_TOL):
        raise ConditionError(
            "degenerate_hull", f"need |x5-x6| >= 2h, got D={D}, h={h}"
        )
    return LebedevaInstance(
        points=_freeze(pts),
        gamma=float(gamma),
        h=h,
        H=H,
        theta=theta,
        delta=delta,
        c=c,
        C=C,
        y0=_freeze(y0),
        crossing=_freeze(crossing),
    )


def default_instance(gamma: float = 1.0) -> LebedevaInstance:
    """The bundled nonregular-octahedron configuration."""
    return build_instance(DEFAULT_POINTS, gamma=gamma)


GAMMA_GRID = tuple(2.0 ** k for k in range(-6, 7))


def best_gamma_instance(points, grid=GAMMA_GRID):
    """Maximize the bound C over a gamma grid; any grid value is sound."""
    results = []
    best = None
    for gamma in grid:
        inst = build_instance(points, gamma=gamma)
        results.append((gamma, inst.C))
        if best is None or inst.C > best.C:
            best = inst
    return best, results


def build_metric(points, epsilon: float) -> SemimetricSpace:
    """Euclidean distances with the x5-x6 entry increased by epsilon."""
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    pts = _check_points(points)
    d = from_points(PointCloud(points=pts)).d.copy()
    d[4, 5] += epsilon
    d[5, 4] = d[4, 5]
    return SemimetricSpace(d=_freeze(d))
