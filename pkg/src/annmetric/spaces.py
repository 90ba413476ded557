"""Finite semimetric spaces, Euclidean point clouds, and quadratic-form evaluation.

A semimetric space is a symmetric nonnegative distance matrix with zero
diagonal; the triangle inequality is *not* assumed and can be audited
separately with :func:`check_triangle`.  Point labels are 0-based everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Slack above this flags a triangle violation; exact-equality degenerate
# triangles (e.g. the 4-cycle's diagonals) must not be flagged.
TRIANGLE_TOL = 1e-12


class SemimetricError(ValueError):
    """Raised when a matrix fails the semimetric axioms.

    ``violations`` lists every broken invariant as tuples:
    ``("non_square",)``, ``("negative_entry", i, j)``,
    ``("nonzero_diagonal", i)``, ``("asymmetric", i, j)``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "matrix is not a semimetric: "
            + "; ".join(" ".join(str(x) for x in v) for v in self.violations)
        )


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SemimetricSpace:
    """Validated distance matrix; construct via :func:`validate_semimetric`."""

    d: np.ndarray

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def squared(self) -> np.ndarray:
        return self.d ** 2


@dataclass(frozen=True)
class PointCloud:
    """Points in Euclidean space, one row per point."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a nonempty 2-d array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", _freeze(pts))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class QuadraticForm:
    """Coefficient matrix a of the form sum_ij a[i,j] * d(x_i, x_j)^2."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"coefficient matrix must be square, got shape {a.shape}")
        object.__setattr__(self, "a", _freeze(a))

    @property
    def n(self) -> int:
        return self.a.shape[0]


def validate_semimetric(matrix) -> SemimetricSpace:
    """Validate a full square matrix as a semimetric space.

    Symmetry and the zero diagonal are checked exactly as stored: inputs are
    authored, not computed.  All violated invariants are collected and
    reported together.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise SemimetricError([("non_square",)])
    violations = []
    n = m.shape[0]
    for i in range(n):
        if m[i, i] != 0.0:
            violations.append(("nonzero_diagonal", i))
    for i in range(n):
        for j in range(i + 1, n):
            if m[i, j] != m[j, i]:
                violations.append(("asymmetric", i, j))
    bad = np.argwhere(m < 0)
    for i, j in bad:
        violations.append(("negative_entry", int(i), int(j)))
    if not np.all(np.isfinite(m)):
        violations.append(("non_finite",))
    if violations:
        raise SemimetricError(violations)
    return SemimetricSpace(d=_freeze(m))


def mirror_upper(matrix) -> np.ndarray:
    """Copy the strict upper triangle onto the lower one (explicit CLI opt-in)."""
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SemimetricError([("non_square",)])
    iu = np.triu_indices(m.shape[0], k=1)
    m[(iu[1], iu[0])] = m[iu]
    return m


def check_triangle(space: SemimetricSpace) -> list[tuple[int, int, int, float]]:
    """List ordered triples (i, j, k) with d[i,j] > d[i,k] + d[k,j].

    Returns an empty list iff the space is a metric space.  Each violation
    carries its slack d[i,j] - d[i,k] - d[k,j].
    """
    d = space.d
    # slack[i, j, k] = d[i,j] - d[i,k] - d[k,j]
    slack = d[:, :, None] - d[:, None, :] - d.T[None, :, :]
    out = []
    for i, j, k in np.argwhere(slack > TRIANGLE_TOL):
        out.append((int(i), int(j), int(k), float(slack[i, j, k])))
    return out


def from_points(cloud: PointCloud) -> SemimetricSpace:
    """Euclidean distance matrix of a point cloud (always a metric space)."""
    pts = cloud.points
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, 0.0)
    return SemimetricSpace(d=_freeze(d))


def check_assignment(indices, n: int) -> np.ndarray:
    """Validate point labels into an n-point space; repetition is allowed."""
    idx = np.asarray(indices, dtype=int)
    if idx.ndim != 1 or idx.size < 1:
        raise ValueError("assignment must be a nonempty 1-d sequence of labels")
    if np.any(idx < 0) or np.any(idx >= n):
        raise ValueError(f"assignment labels must lie in [0, {n}), got {idx.tolist()}")
    return idx


def evaluate_quadratic_form(form: QuadraticForm, space: SemimetricSpace, assignment) -> float:
    """Evaluate sum_ij a[i,j] * d(x_asg[i], x_asg[j])^2."""
    idx = check_assignment(assignment, space.n)
    if form.n != idx.size:
        raise ValueError(
            f"form is {form.n}x{form.n} but assignment has {idx.size} labels"
        )
    w = space.d[np.ix_(idx, idx)] ** 2
    return float(np.sum(form.a * w))
