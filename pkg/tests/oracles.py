"""Independent oracles used by the test suite.

Every oracle re-derives its answer through a different route than the library
code it checks: dense grids, a second convex solver, Frank-Wolfe with a dual
bound, stochastic refinement, or plain-Python loops.
"""

import numpy as np


def boxtimes_value(d2, quad, s, t):
    x, y, z, w = quad
    return (
        (1 - s) * (1 - t) * d2[x][y]
        + s * (1 - t) * d2[y][z]
        + s * t * d2[z][w]
        + (1 - s) * t * d2[w][x]
        - s * (1 - s) * d2[x][z]
        - t * (1 - t) * d2[y][w]
    )


def grid_boxtimes_min(space, quad, k=201):
    """Minimum of the quadruple expression over a k x k uniform (s, t) grid."""
    d2 = space.d ** 2
    s = np.linspace(0.0, 1.0, k)[:, None]
    t = np.linspace(0.0, 1.0, k)[None, :]
    x, y, z, w = quad
    vals = (
        (1 - s) * (1 - t) * d2[x, y]
        + s * (1 - t) * d2[y, z]
        + s * t * d2[z, w]
        + (1 - s) * t * d2[w, x]
        - s * (1 - s) * d2[x, z]
        - t * (1 - t) * d2[y, w]
    )
    return float(vals.min())


def gap_by_loops(space, assignment, plan):
    """ann_gap recomputed with plain Python loops and scalar arithmetic."""
    idx = list(assignment)
    n = len(idx)
    d = space.d
    rhs = 0.0
    for i in range(n):
        for j in range(n):
            rhs += plan.p[i] * plan.q[j] * d[idx[i], idx[j]] ** 2
    lhs = 0.0
    for i in range(n):
        for j in range(n):
            s = plan.pi[i, j] + plan.pi[j, i]
            if s > 0.0:
                lhs += 0.5 * plan.pi[i, j] * plan.pi[j, i] / s * d[idx[i], idx[j]] ** 2
    return rhs - lhs


def _full_value(P, w):
    S = P + P.T
    med = np.where(S > 0, P * P.T / np.where(S > 0, S, 1.0), 0.0)
    return 0.5 * float(np.sum(med * w))


def frank_wolfe_inner(w, c, iters=600, ls_iters=60):
    """Frank-Wolfe on the full coupling polytope (diagonal included).

    Returns (primal_value, dual_bound).  Iterates stay strictly positive
    (steps capped below 1), so the linearization bound is sound: the true
    maximum lies in [primal_value, dual_bound].
    """
    n = len(c)
    pi = np.tile((c / n)[:, None], (1, n))

    def grad(P):
        S = P + P.T
        ratio = np.where(S > 0, P.T / np.where(S > 0, S, 1.0), 0.0)
        return w * ratio * ratio

    dual = np.inf
    for _ in range(iters):
        G = grad(pi)
        v = np.zeros((n, n))
        v[np.arange(n), np.argmax(G, axis=1)] = c
        here = _full_value(pi, w)
        dual = min(dual, here + float(np.sum(G * (v - pi))))
        lo, hi = 0.0, 0.999
        for _ in range(ls_iters):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if _full_value(pi + m1 * (v - pi), w) < _full_value(pi + m2 * (v - pi), w):
                lo = m1
            else:
                hi = m2
        a = 0.5 * (lo + hi)
        if _full_value(pi + a * (v - pi), w) > here:
            pi = pi + a * (v - pi)
    return _full_value(pi, w), dual


def cvx_inner_max(w, c):
    """Second solver for the inner maximization (mediant = harmonic mean / 2)."""
    import cvxpy as cp

    n = len(c)
    pi = cp.Variable((n, n), nonneg=True)
    terms = [
        w[i, j] * 0.5 * cp.harmonic_mean(cp.hstack([pi[i, j], pi[j, i]]))
        for i in range(n)
        for j in range(i + 1, n)
        if w[i, j] > 0
    ]
    if not terms:
        return 0.0
    prob = cp.Problem(
        cp.Maximize(cp.sum(cp.hstack(terms))), [cp.sum(pi, axis=1) == c]
    )
    return float(prob.solve(solver=cp.CLARABEL))


def grid_inner_max_upto3(w, c, k=200):
    """Exhaustive grid maximization of the coupling objective for n <= 3.

    Mass on the diagonal never helps (the mediant is nondecreasing in each
    argument and the diagonal weight is zero), so each row's budget sits on
    its off-diagonal slots; for n <= 3 that leaves one free split per row.
    """
    n = len(c)
    if n == 1:
        return 0.0

    def med(a, b):
        s = a + b
        return np.where(s > 0, a * b / np.where(s > 0, s, 1.0), 0.0)

    u = np.linspace(0.0, 1.0, k + 1)
    if n == 2:
        a = c[0] * u[:, None]
        b = c[1] * u[None, :]
        return float((med(a, b) * w[0, 1]).max())
    best = -np.inf
    u1 = u[:, None]
    u2 = u[None, :]
    for u0 in u:
        pi01 = c[0] * u0
        pi02 = c[0] * (1.0 - u0)
        pi10 = c[1] * u1
        pi12 = c[1] * (1.0 - u1)
        pi20 = c[2] * u2
        pi21 = c[2] * (1.0 - u2)
        vals = (
            w[0, 1] * med(pi01, pi10)
            + w[0, 2] * med(pi02, pi20)
            + w[1, 2] * med(pi12, pi21)
        )
        best = max(best, float(vals.max()))
    return best


def sampled_hull_distance(p, verts, seed=0, coarse=4000, rounds=45, per_round=400):
    """Stochastic-refinement estimate of the point-to-hull distance.

    Always an upper bound on the true distance; the shrinking Gaussian
    refinement drives it within ~1e-7 of the optimum.
    """
    rng = np.random.default_rng(seed)
    p = np.asarray(p, dtype=float)
    verts = np.asarray(verts, dtype=float)
    m = verts.shape[0]
    lam = rng.dirichlet(np.ones(m), size=coarse)
    d = np.linalg.norm(lam @ verts - p, axis=1)
    k = int(np.argmin(d))
    best, best_lam = float(d[k]), lam[k]
    scale = 0.5
    for _ in range(rounds):
        cand = np.clip(best_lam[None, :] + scale * rng.standard_normal((per_round, m)), 0.0, None)
        sums = cand.sum(axis=1, keepdims=True)
        cand = np.where(sums > 0, cand / np.where(sums > 0, sums, 1.0), 1.0 / m)
        d = np.linalg.norm(cand @ verts - p, axis=1)
        k = int(np.argmin(d))
        if d[k] < best:
            best, best_lam = float(d[k]), cand[k]
        scale *= 0.7
    return best
