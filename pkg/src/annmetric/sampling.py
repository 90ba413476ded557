"""Seed-deterministic random generators for spaces, clouds, and plans.

Coordinates are uniform in [-half_width, half_width], weights come from the
flat simplex distribution, and couplings are built by scaling random
row-stochastic rows to the required row sums.
"""

from __future__ import annotations

import numpy as np

from .inequalities import AbPlan, AnnPlan
from .spaces import PointCloud, SemimetricSpace, from_points, validate_semimetric


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def random_simplex(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n))


def random_cloud(rng: np.random.Generator, m: int, dim: int, half_width: float = 1.0) -> PointCloud:
    return PointCloud(points=rng.uniform(-half_width, half_width, size=(m, dim)))


def random_euclidean_space(
    rng: np.random.Generator, m: int, dim: int, half_width: float = 1.0
) -> SemimetricSpace:
    return from_points(random_cloud(rng, m, dim, half_width))


def random_semimetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> SemimetricSpace:
    """Symmetric nonnegative matrix with zero diagonal; no triangle inequality."""
    m = rng.uniform(0.0, scale, size=(n, n))
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 0.0)
    return validate_semimetric(m)


def random_ann_plan(rng: np.random.Generator, n: int) -> AnnPlan:
    p = random_simplex(rng, n)
    q = random_simplex(rng, n)
    rows = rng.dirichlet(np.ones(n), size=n)
    return AnnPlan(p=p, q=q, pi=(p + q)[:, None] * rows)


def random_ab_plan(rng: np.random.Generator, n: int) -> AbPlan:
    """Sample (A, B) marginals by splitting p_i + q_j as (p_i + k) + (q_j - k)."""
    p = random_simplex(rng, n)
    q = random_simplex(rng, n)
    k = rng.uniform(-p.min(), q.min())
    row_a = p + k
    col_b = q - k
    A = row_a[:, None] * rng.dirichlet(np.ones(n), size=n)
    B = rng.dirichlet(np.ones(n), size=n).T * col_b[None, :]
    return AbPlan(p=p, q=q, A=A, B=B)


def random_map(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    return rng.integers(0, n, size=m)
