"""Euclidean-model verification of the barycenter facts behind the ANN family.

Euclidean space is the only CAT(0) model implemented here: barycenters are
closed-form weighted means, so the variance identity and the strengthened
coupling inequality are checkable to machine precision with no inner
optimization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inequalities import MARGINAL_TOL, AnnPlan, mediant_matrix
from .spaces import PointCloud


@dataclass(frozen=True)
class BarycenterWitness:
    """Barycenter z and the two-point barycenters z_ij used in the slack."""

    z: np.ndarray
    pair_points: dict[tuple[int, int], np.ndarray]


def barycenter(cloud: PointCloud, weights) -> np.ndarray:
    """Weighted mean of the cloud's points (the Euclidean barycenter)."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != cloud.m:
        raise ValueError(f"weights must have {cloud.m} entries, got shape {w.shape}")
    if np.any(w < -MARGINAL_TOL):
        raise ValueError(f"weights must be nonnegative, got min {w.min()}")
    s = w.sum()
    if abs(s - 1.0) > MARGINAL_TOL:
        raise ValueError(f"weights sum to {s}, expected 1")
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    return w @ cloud.points


def variance_identity_residual(cloud: PointCloud, weights, w_point) -> float:
    """|  ||w-z||^2 + sum_i p_i ||z-x_i||^2 - sum_i p_i ||w-x_i||^2  |.

    In Euclidean space this is the parallel-axis identity, so the residual
    vanishes up to rounding.
    """
    w_point = np.asarray(w_point, dtype=float)
    if w_point.shape != (cloud.dim,):
        raise ValueError(f"w must be a point of dimension {cloud.dim}")
    p = np.asarray(weights, dtype=float)
    z = barycenter(cloud, p)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    to_z = np.sum((cloud.points - z) ** 2, axis=1)
    to_w = np.sum((cloud.points - w_point) ** 2, axis=1)
    return abs(float(np.sum((w_point - z) ** 2) + p @ to_z - p @ to_w))


def pi_prop_slack(
    cloud: PointCloud, plan: AnnPlan, use_q: bool = False
) -> tuple[float, BarycenterWitness]:
    """Slack of the strengthened coupling inequality in the Euclidean model.

    slack = sum_ij p_i q_j d^2 - (1/2) sum mediant(pi_ij, pi_ji) d^2
            - sum_{pi_ij + pi_ji > 0} pi_ij ||z - z_ij||^2

    with z the barycenter of the p-weights (q-weights when ``use_q``) and
    z_ij = (pi_ij x_i + pi_ji x_j) / (pi_ij + pi_ji).  Nonnegative for every
    valid Euclidean input.
    """
    if plan.n != cloud.m:
        raise ValueError(f"plan has {plan.n} slots but cloud has {cloud.m} points")
    pts = cloud.points
    z = barycenter(cloud, plan.q if use_q else plan.p)

    diff = pts[:, None, :] - pts[None, :, :]
    w = np.einsum("ijk,ijk->ij", diff, diff)
    rhs = float(plan.p @ w @ plan.q)
    med = 0.5 * float(np.sum(mediant_matrix(plan.pi, plan.pi.T) * w))

    pi = plan.pi
    S = pi + pi.T
    mask = S > 0
    bar_term = 0.0
    pair_points: dict[tuple[int, int], np.ndarray] = {}
    for i, j in np.argwhere(mask):
        zij = (pi[i, j] * pts[i] + pi[j, i] * pts[j]) / S[i, j]
        bar_term += pi[i, j] * float(np.sum((z - zij) ** 2))
        pair_points[(int(i), int(j))] = zij
    return rhs - med - bar_term, BarycenterWitness(z=z, pair_points=pair_points)
