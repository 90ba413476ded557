"""Exact small-scale computational geometry in R^3.

Segment-segment distance is the minimum of a convex quadratic over the unit
square, found by candidate enumeration; point-to-hull distance enumerates all
vertex subsets and keeps feasible affine-hull projections.  Both are exact at
the scales used here (at most 6 points), no iterative solvers involved.
"""

from __future__ import annotations

import itertools

import numpy as np


def point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def segment_segment_closest(a0, a1, b0, b1):
    """Closest parameters (s, t) and distance between segments [a0,a1], [b0,b1].

    The squared distance is convex in (s, t) over [0,1]^2; candidates are the
    interior stationary point plus the four clamped edge critical points.
    """
    a0, a1, b0, b1 = (np.asarray(v, dtype=float) for v in (a0, a1, b0, b1))
    u = a1 - a0
    v = b1 - b0
    r = a0 - b0
    a = float(u @ u)
    b = float(u @ v)
    e = float(v @ v)
    c = float(u @ r)
    f = float(v @ r)
    cands = []
    den = a * e - b * b
    if den > 0.0:
        s = (b * f - c * e) / den
        t = (a * f - b * c) / den
        if 0.0 <= s <= 1.0 and 0.0 <= t <= 1.0:
            cands.append((s, t))
    for s in (0.0, 1.0):
        t = np.clip((f + s * b) / e, 0.0, 1.0) if e > 0.0 else 0.0
        cands.append((s, float(t)))
    for t in (0.0, 1.0):
        s = np.clip((b * t - c) / a, 0.0, 1.0) if a > 0.0 else 0.0
        cands.append((float(s), t))
    best = None
    for s, t in cands:
        d = float(np.linalg.norm(a0 + s * u - (b0 + t * v)))
        if best is None or d < best[2]:
            best = (s, t, d)
    return best


def segment_segment_distance(a0, a1, b0, b1) -> float:
    return segment_segment_closest(a0, a1, b0, b1)[2]


def point_hull_distance(p, vertices) -> float:
    """Exact distance from p to the convex hull of the given vertices.

    Projects p onto the affine hull of every nonempty vertex subset and keeps
    the projections whose barycentric coordinates are nonnegative; the
    minimizing face is always among these.
    """
    p = np.asarray(p, dtype=float)
    verts = np.asarray(vertices, dtype=float)
    m = verts.shape[0]
    best = np.inf
    for r in range(1, m + 1):
        for idx in itertools.combinations(range(m), r):
            v0 = verts[idx[0]]
            if r == 1:
                cand = v0
            else:
                basis = (verts[list(idx[1:])] - v0).T
                mu, *_ = np.linalg.lstsq(basis, p - v0, rcond=None)
                lam = np.concatenate([[1.0 - mu.sum()], mu])
                if np.any(lam < -1e-12):
                    continue
                cand = v0 + basis @ mu
            best = min(best, float(np.linalg.norm(p - cand)))
    return best


def interior_angle(apex, u, v) -> float:
    """Angle at ``apex`` of the triangle (u, apex, v), in [0, pi]."""
    apex, u, v = (np.asarray(x, dtype=float) for x in (apex, u, v))
    a = u - apex
    b = v - apex
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-length edge at angle apex")
    cosang = float(np.clip(a @ b / (na * nb), -1.0, 1.0))
    return float(np.arccos(cosang))
