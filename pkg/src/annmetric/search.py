"""Violation search for the ANN family over a fixed finite space.

The inequality family is indexed by simplex weights (p, q) and a coupling pi
with row sums p_i + q_i.  For a fixed (p, q) the left side is jointly concave
in pi (each mediant term is concave, the feasible set is a product of scaled
simplices), so the inner maximization is solved globally by projected
gradient ascent.  The outer problem in (p, q) is nonconvex and attacked by
multistart projected gradient descent, with all restarts advanced in lockstep
as one batched array.  Any reported negative gap is re-evaluated exactly on a
validated plan, so violations are certificates, never optimizer artifacts.

Searching plans on n = |X| slots with the identity assignment loses nothing:
any plan with repeated points coarsens to one on distinct points with no
larger gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inequalities import AnnPlan, ann_gap, check_boxtimes
from .spaces import SemimetricSpace, check_assignment, check_triangle


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 100
    max_iters: int = 60
    step_rule: str = "backtracking"  # or "fixed"
    seed: int = 0
    tol: float = 1e-7
    gamma_grid: tuple[float, ...] | None = None
    step_size: float = 0.5
    inner_max_iters: int = 400
    inner_tol: float = 1e-12

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.step_rule not in ("backtracking", "fixed"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")


@dataclass(frozen=True)
class InnerMax:
    pi: np.ndarray
    lhs: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class SearchReport:
    best_gap: float
    best_plan: AnnPlan
    best_assignment: tuple[int, ...]
    evaluations: int
    converged_restarts: int
    seed: int


class TooManyPointsError(ValueError):
    """The 5-point certificate rule does not apply to larger spaces."""


def _project_rows_simplex(P: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Project each trailing row of P onto {x >= 0, sum x = c}.

    P has shape (..., m) and c the matching (...) shape; rows with c <= 0
    project to zero.  Exact sort-based Euclidean projection.
    """
    m = P.shape[-1]
    U = np.sort(P, axis=-1)[..., ::-1]
    css = np.cumsum(U, axis=-1)
    j = np.arange(1, m + 1)
    safe_c = np.where(c > 0.0, c, 0.0)
    rho = np.sum(U + (safe_c[..., None] - css) / j > 0.0, axis=-1)
    rho = np.maximum(rho, 1)
    css_rho = np.take_along_axis(css, (rho - 1)[..., None], axis=-1)[..., 0]
    lam = (safe_c - css_rho) / rho
    out = np.maximum(P + lam[..., None], 0.0)
    return np.where((c > 0.0)[..., None], out, 0.0)


class _InnerProblem:
    """Concave coupling maximization in compact (off-diagonal) coordinates.

    Mass on the diagonal multiplies a zero distance and the mediant is
    nondecreasing in each argument, so zero-diagonal couplings lose nothing;
    rows live on scaled simplices over the n-1 off-diagonal slots.  All
    operations accept a leading batch dimension.
    """

    def __init__(self, w: np.ndarray):
        n = w.shape[0]
        self.n = n
        cols = np.array([[j for j in range(n) if j != i] for i in range(n)], dtype=int)
        self.cols = cols  # (n, n-1): column index of each compact slot
        rows = np.repeat(np.arange(n)[:, None], n - 1, axis=1)
        self.rows = rows
        # partner[i, k] is the compact slot holding pi[j, i] for j = cols[i, k]
        self.partner_row = cols
        self.partner_col = np.where(rows < cols, rows, rows - 1)
        self.w = w[rows, cols]  # (n, n-1)

    def full(self, P: np.ndarray) -> np.ndarray:
        pi = np.zeros((self.n, self.n))
        pi[self.rows, self.cols] = P
        return pi

    def compact(self, pi: np.ndarray) -> np.ndarray:
        return pi[self.rows, self.cols]

    def value(self, P: np.ndarray) -> np.ndarray | float:
        T = P[..., self.partner_row, self.partner_col]
        S = P + T
        med = np.where(S > 0.0, P * T / np.where(S > 0.0, S, 1.0), 0.0)
        return 0.5 * np.sum(self.w * med, axis=(-2, -1))

    def grad(self, P: np.ndarray) -> np.ndarray:
        T = P[..., self.partner_row, self.partner_col]
        S = P + T
        ratio = np.where(S > 0.0, T / np.where(S > 0.0, S, 1.0), 0.0)
        return self.w * ratio * ratio


def _ascend(
    prob: _InnerProblem,
    P: np.ndarray,
    c: np.ndarray,
    max_iters: int,
    tol: float,
    step_rule: str,
    step_size: float,
) -> tuple[np.ndarray, float, bool, int]:
    """Monotone projected gradient ascent on a single problem (Armijo steps).

    Stops only after three consecutive near-stationary iterations, so a
    transiently small backtracked step does not end the run early.
    """
    val = float(prob.value(P))
    step = step_size
    iters = 0
    converged = False
    stalled = 0
    for iters in range(1, max_iters + 1):
        G = prob.grad(P)
        if step_rule == "fixed":
            P_try = _project_rows_simplex(P + step * G, c)
            val_try = float(prob.value(P_try))
            accepted = val_try >= val
            P_new, val_new = (P_try, val_try) if accepted else (P, val)
        else:
            accepted = False
            P_new, val_new = P, val
            for _ in range(30):
                P_try = _project_rows_simplex(P + step * G, c)
                val_try = float(prob.value(P_try))
                gain = float(np.sum(G * (P_try - P)))
                if val_try >= val + 1e-4 * gain or gain <= 0.0:
                    accepted = val_try >= val
                    if accepted:
                        P_new, val_new = P_try, val_try
                    break
                step *= 0.5
            if accepted:
                step = min(step * 1.3, 1e6)
        stalled = stalled + 1 if val_new - val <= tol * (1.0 + abs(val)) else 0
        P, val = P_new, val_new
        if stalled >= 3:
            converged = True
            break
    return P, val, converged, iters


# Line-search grid for joint pair activation; dense near 0 so shallow basins
# are not skipped, with full coverage up to the vertex itself.
_ESCAPE_ALPHAS = np.unique(
    np.concatenate([np.geomspace(1e-6, 1.0, 25), np.linspace(0.04, 1.0, 25)])
)


def _pair_escape(
    prob: _InnerProblem, P: np.ndarray, c: np.ndarray, val: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint activation moves for zero coupling pairs, batched over restarts.

    At a pair pi_ij = pi_ji = 0 the objective has a kink: either entry alone
    contributes nothing, so projected gradient ascent can be stationary while
    activating both at once still improves.  For every pair, search the
    segment toward the vertex where rows i and j are point masses on each
    other; the objective is concave along the segment and evaluated on a
    fixed grid.  Returns (P, val, improved_mask).
    """
    n = prob.n
    R = P.shape[0]
    improved = np.zeros(R, dtype=bool)
    al = _ESCAPE_ALPHAS[:, None, None, None]
    take = np.arange(R)
    for i in range(n):
        for j in range(i + 1, n):
            slot_ij = j - 1 if j > i else j
            if prob.w[i, slot_ij] == 0.0:
                continue
            slot_ji = i if i < j else i - 1
            V = P.copy()
            V[:, i, :] = 0.0
            V[:, i, slot_ij] = c[:, i]
            V[:, j, :] = 0.0
            V[:, j, slot_ji] = c[:, j]
            line = P[None] + al * (V - P)[None]  # (A, R, n, m)
            vals = prob.value(line)  # (A, R)
            k = np.argmax(vals, axis=0)
            vk = vals[k, take]
            better = vk > val + 1e-15 * (1.0 + np.abs(val))
            if np.any(better):
                P = np.where(better[:, None, None], line[k, take], P)
                val = np.where(better, vk, val)
                improved |= better
    return P, val, improved


def _solve_inner_full(
    prob: _InnerProblem,
    P: np.ndarray,
    c: np.ndarray,
    max_iters: int,
    tol: float,
    step_rule: str,
    step_size: float,
    rounds: int = 12,
) -> tuple[np.ndarray, float, bool, int]:
    """Ascent alternated with pair-activation escapes until neither helps."""
    total_iters = 0
    converged = False
    for _ in range(rounds):
        P, val, converged, iters = _ascend(
            prob, P, c, max_iters, tol, step_rule, step_size
        )
        total_iters += iters
        P1, val1, improved = _pair_escape(prob, P[None], c[None], np.atleast_1d(val))
        if not improved[0]:
            break
        P, val = P1[0], float(val1[0])
    return P, float(val), converged, total_iters


def _ascend_batch(
    prob: _InnerProblem,
    P: np.ndarray,
    c: np.ndarray,
    step: np.ndarray,
    iters: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Monotone ascent on a batch of problems with per-problem adaptive steps."""
    val = prob.value(P)
    for _ in range(iters):
        G = prob.grad(P)
        P_try = _project_rows_simplex(P + step[:, None, None] * G, c)
        val_try = prob.value(P_try)
        ok = val_try > val
        P = np.where(ok[:, None, None], P_try, P)
        val = np.where(ok, val_try, val)
        step = np.where(ok, step * 1.25, step * 0.5)
        step = np.clip(step, 1e-16, 1e6)
    return P, val, step


def _solve_inner_batch(
    prob: _InnerProblem,
    P: np.ndarray,
    c: np.ndarray,
    step: np.ndarray,
    iters: int,
    rounds: int = 6,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched ascent alternated with pair-activation escapes."""
    P, val, step = _ascend_batch(prob, P, c, step, iters)
    for _ in range(rounds):
        P, val, improved = _pair_escape(prob, P, c, val)
        if not np.any(improved):
            break
        P, val, step = _ascend_batch(prob, P, c, step, max(iters // 2, 20))
    return P, val, step


def _inner_seeds(prob: _InnerProblem, c: np.ndarray, rng, n_random: int):
    n = prob.n
    uniform = np.repeat(c[:, None] / (n - 1), n - 1, axis=1)
    yield uniform
    for k in range(1, n):
        pi = np.zeros((n, n))
        pi[np.arange(n), (np.arange(n) + k) % n] = c
        yield prob.compact(pi)
    for _ in range(n_random):
        rows = rng.dirichlet(np.ones(n - 1), size=n)
        yield c[:, None] * rows


def inner_max_pi(
    space: SemimetricSpace,
    assignment,
    p,
    q,
    config: SearchConfig | None = None,
) -> InnerMax:
    """Globally maximize the coupling left side over row-sum-feasible pi.

    Multistart projected gradient ascent: uniform rows, the n-1 cyclic
    permutation couplings, and a few random row seeds guard the flat spots
    where a zero pair (pi_ij = pi_ji = 0) stalls the subgradient (taken as 0
    there).
    """
    cfg = config or SearchConfig()
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    idx = check_assignment(assignment, space.n)
    n = idx.size
    if p.shape != (n,) or q.shape != (n,):
        raise ValueError("p, q must match the assignment length")
    c = p + q
    if n == 1:
        return InnerMax(pi=np.array([[c[0]]]), lhs=0.0, converged=True, iterations=0)
    w = space.d[np.ix_(idx, idx)] ** 2
    prob = _InnerProblem(w)
    rng = np.random.default_rng(cfg.seed)
    best = None
    total_iters = 0
    any_converged = False
    for seed_P in _inner_seeds(prob, c, rng, n_random=4):
        P, val, conv, iters = _solve_inner_full(
            prob,
            _project_rows_simplex(seed_P, c),
            c,
            cfg.inner_max_iters,
            cfg.inner_tol,
            cfg.step_rule,
            cfg.step_size,
        )
        total_iters += iters
        any_converged = any_converged or conv
        if best is None or val > best[1]:
            best = (P, val, conv)
    pi = prob.full(best[0])
    return InnerMax(
        pi=pi, lhs=float(best[1]), converged=any_converged, iterations=total_iters
    )


def search_violation(space: SemimetricSpace, config: SearchConfig | None = None) -> SearchReport:
    """Multistart descent on gap(p, q) with concave inner maximization.

    Minimizes sum_ij p_i q_j d^2 - max_pi LHS over the product of two
    simplices; restarts advance in lockstep.  The most negative exactly
    re-evaluated gap wins (ties to the lowest restart index); absence of a
    violation is evidence, not proof.
    """
    cfg = config or SearchConfig()
    n = space.n
    identity = tuple(range(n))
    rng = np.random.default_rng(cfg.seed)

    if n == 1:
        plan = AnnPlan(p=[1.0], q=[1.0], pi=[[2.0]])
        return SearchReport(
            best_gap=ann_gap(space, identity, plan),
            best_plan=plan,
            best_assignment=identity,
            evaluations=1,
            converged_restarts=cfg.restarts,
            seed=cfg.seed,
        )

    w = space.d ** 2
    prob = _InnerProblem(w)
    R = cfg.restarts
    ones = np.ones(n)

    p = rng.dirichlet(ones, size=R)
    q = rng.dirichlet(ones, size=R)
    p[0] = ones / n
    q[0] = ones / n
    c = p + q
    P = np.repeat(c[:, :, None] / (n - 1), n - 1, axis=2)
    inner_step = np.full(R, cfg.step_size)
    P, lhs, inner_step = _solve_inner_batch(prob, P, c, inner_step, 120)
    gap = np.einsum("ri,ij,rj->r", p, w, q) - lhs
    evaluations = R

    outer_step = np.full(R, cfg.step_size)
    frozen = np.zeros(R, dtype=bool)
    for _ in range(cfg.max_iters):
        G = prob.grad(P)
        mu = G.max(axis=2)
        grad_p = q @ w - mu
        grad_q = p @ w - mu
        p_try = _project_rows_simplex(p - outer_step[:, None] * grad_p, np.ones(R))
        q_try = _project_rows_simplex(q - outer_step[:, None] * grad_q, np.ones(R))
        c_try = p_try + q_try
        P_scaled = _rescale_rows(P, c_try)
        P_try, lhs_try, inner_step = _ascend_batch(
            prob, P_scaled, c_try, inner_step, 40
        )
        gap_try = np.einsum("ri,ij,rj->r", p_try, w, q_try) - lhs_try
        evaluations += int(np.sum(~frozen))
        ok = (gap_try < gap - 1e-15) & ~frozen
        sel = ok[:, None]
        p = np.where(sel, p_try, p)
        q = np.where(sel, q_try, q)
        c = p + q
        P = np.where(ok[:, None, None], P_try, P)
        gap = np.where(ok, gap_try, gap)
        if cfg.step_rule == "fixed":
            frozen = frozen | ~ok
        else:
            outer_step = np.where(ok, outer_step * 1.5, outer_step * 0.5)
            outer_step = np.clip(outer_step, 0.0, 10.0)
            frozen = frozen | (outer_step < 1e-12)
        if np.all(frozen):
            break
    converged_restarts = int(np.sum(frozen))

    # Refine every restart's coupling, then re-evaluate each candidate
    # exactly on a validated plan.
    P, lhs, inner_step = _solve_inner_batch(prob, P, c, inner_step, 200, rounds=10)
    evaluations += R
    exact = np.empty(R)
    plans = []
    for r in range(R):
        plan = AnnPlan(p=p[r], q=q[r], pi=prob.full(P[r]))
        plans.append(plan)
        exact[r] = ann_gap(space, identity, plan)
    best_r = int(np.argmin(exact))

    # Full-quality polish of the winning restart.
    polish = inner_max_pi(
        space,
        identity,
        p[best_r],
        q[best_r],
        SearchConfig(
            restarts=1,
            seed=cfg.seed,
            tol=cfg.tol,
            step_rule=cfg.step_rule,
            step_size=cfg.step_size,
            inner_max_iters=4 * cfg.inner_max_iters,
            inner_tol=min(cfg.inner_tol, 1e-13),
        ),
    )
    evaluations += 1
    polished = AnnPlan(p=p[best_r], q=q[best_r], pi=polish.pi)
    candidates = [(ann_gap(space, identity, polished), polished),
                  (float(exact[best_r]), plans[best_r])]
    best_gap, best_plan = min(candidates, key=lambda t: t[0])
    return SearchReport(
        best_gap=best_gap,
        best_plan=best_plan,
        best_assignment=identity,
        evaluations=evaluations,
        converged_restarts=converged_restarts,
        seed=cfg.seed,
    )


def _rescale_rows(P: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Rescale each row of P to sum to c (uniform fill for zero rows)."""
    sums = P.sum(axis=-1)
    m = P.shape[-1]
    scale = np.where(sums > 0.0, c / np.where(sums > 0.0, sums, 1.0), 0.0)
    out = P * scale[..., None]
    fill = ((sums <= 0.0) & (c > 0.0))[..., None] * (c[..., None] / m)
    return out + fill


@dataclass(frozen=True)
class Certificate:
    """Outcome of the 5-point embeddability rule."""

    status: str  # "EMBEDDABLE" or "NOT_EMBEDDABLE"
    min_gap: float
    quadruple: tuple[int, int, int, int]
    s: float
    t: float
    tol: float
    triangle_violations: int


def certify_embeddable_upto5(space: SemimetricSpace, tol: float = 1e-7) -> Certificate:
    """Decide CAT(0)-embeddability of a space with at most 5 points.

    For such spaces the quadruple inequalities characterize embeddability;
    a minimum gap below -tol yields a NOT_EMBEDDABLE refusal with witness.
    Larger spaces are refused outright: the rule does not apply.
    """
    if space.n > 5:
        raise TooManyPointsError(
            f"certificate rule applies to at most 5 points, got {space.n}"
        )
    triangle = check_triangle(space)
    report = check_boxtimes(space)
    status = "EMBEDDABLE" if report.min_gap >= -tol else "NOT_EMBEDDABLE"
    return Certificate(
        status=status,
        min_gap=report.min_gap,
        quadruple=report.quadruple,
        s=report.s,
        t=report.t,
        tol=tol,
        triangle_violations=len(triangle),
    )
