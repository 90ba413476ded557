"""The ANN(n) inequality family on finite semimetric spaces.

Two equivalent presentations are implemented:

* the coupling form: weights p, q on the simplex and a nonnegative matrix pi
  with row sums pi[i,:].sum() == p[i] + q[i]; the inequality reads
  (1/2) * sum_ij mediant(pi[i,j], pi[j,i]) * d(x_i,x_j)^2
      <= sum_ij p[i] * q[j] * d(x_i,x_j)^2
* the (A, B) form: nonnegative matrices with
  A[i,:].sum() + B[:,j].sum() == p[i] + q[j] for all i, j, and left side
  sum over a+b>0 of a*b/(a+b) * d^2.

Every gap is oriented as RHS - LHS, so a violation is a negative gap.

Aggregates of several (A, B) terms with positive multipliers need no code
path of their own: both sides are linear in the plan term, so such a combined
gap is the same positive combination of single-term gaps (compose with
evaluate_quadratic_form when an explicit matrix is wanted).

The two-parameter quadruple inequality (the "boxtimes" inequality, Gromov's
notation; Sturm's weighted quadruple inequality) is evaluated and minimized
exactly over the (s, t) unit square; it embeds into the coupling form via
:func:`boxtimes_as_ann_plan`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .spaces import SemimetricSpace, check_assignment, _freeze

# Marginal constraints are accepted at this tolerance, then repaired exactly.
MARGINAL_TOL = 1e-9


class InvalidPlanError(ValueError):
    """A plan's marginal constraints are broken beyond MARGINAL_TOL."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def _check_simplex(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise InvalidPlanError("shape", f"{name} must be a nonempty vector")
    if np.any(v < -MARGINAL_TOL):
        raise InvalidPlanError("negative", f"{name} has a negative entry: {v.min()}")
    s = v.sum()
    if abs(s - 1.0) > MARGINAL_TOL:
        raise InvalidPlanError("sum", f"{name} sums to {s}, expected 1")
    v = np.clip(v, 0.0, None)
    return v / v.sum()


@dataclass(frozen=True)
class AnnPlan:
    """Coupling-form plan (p, q, pi).

    Constraints are validated at MARGINAL_TOL and then repaired exactly
    (p, q renormalized, pi rows rescaled to row sums p[i] + q[i]) so that
    downstream algebraic identities hold to machine precision.  The size of
    the repair is recorded in ``provenance``.
    """

    p: np.ndarray
    q: np.ndarray
    pi: np.ndarray
    provenance: str = field(init=False, default="")

    def __post_init__(self):
        # Row sums are checked against the marginals as given, at input
        # tolerance; the repair then targets the renormalized marginals.
        raw_target = (
            np.asarray(self.p, dtype=float) + np.asarray(self.q, dtype=float)
        )
        p = _check_simplex(self.p, "p")
        q = _check_simplex(self.q, "q")
        n = p.size
        pi = np.asarray(self.pi, dtype=float)
        if q.size != n or pi.shape != (n, n):
            raise InvalidPlanError(
                "shape", f"inconsistent sizes: p {p.size}, q {q.size}, pi {pi.shape}"
            )
        if np.any(pi < -MARGINAL_TOL):
            raise InvalidPlanError("negative", f"pi has a negative entry: {pi.min()}")
        pi = np.clip(pi, 0.0, None)
        rows = pi.sum(axis=1)
        err = np.abs(rows - raw_target)
        if np.any(err > MARGINAL_TOL):
            i = int(np.argmax(err))
            raise InvalidPlanError(
                "row_sum",
                f"pi row {i} sums to {rows[i]}, expected p[{i}]+q[{i}] = {raw_target[i]}",
            )
        target = p + q
        repaired = pi.copy()
        for i in range(n):
            if rows[i] > 0.0:
                repaired[i] *= target[i] / rows[i]
            elif target[i] > 0.0:
                repaired[i] = target[i] / n
        delta = float(np.abs(repaired - pi).max())
        object.__setattr__(self, "p", _freeze(p))
        object.__setattr__(self, "q", _freeze(q))
        object.__setattr__(self, "pi", _freeze(repaired))
        object.__setattr__(self, "provenance", f"repaired(max_abs_delta={delta:.3e})")

    @property
    def n(self) -> int:
        return self.p.size


@dataclass(frozen=True)
class AbPlan:
    """Matrix-pair plan (p, q, A, B) with mixed row/column marginals.

    Strict positivity of p, q is deliberately not required; nonnegative
    entries are accepted in both plan forms.
    """

    p: np.ndarray
    q: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        p = _check_simplex(self.p, "p")
        q = _check_simplex(self.q, "q")
        n = p.size
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if q.size != n or A.shape != (n, n) or B.shape != (n, n):
            raise InvalidPlanError(
                "shape", f"inconsistent sizes: p {p.size}, A {A.shape}, B {B.shape}"
            )
        for name, M in (("A", A), ("B", B)):
            if np.any(M < -MARGINAL_TOL):
                raise InvalidPlanError("negative", f"{name} has a negative entry")
        A = np.clip(A, 0.0, None)
        B = np.clip(B, 0.0, None)
        marg = A.sum(axis=1)[:, None] + B.sum(axis=0)[None, :]
        err = np.abs(marg - (p[:, None] + q[None, :]))
        if np.any(err > MARGINAL_TOL):
            i, j = np.unravel_index(int(np.argmax(err)), err.shape)
            raise InvalidPlanError(
                "marginal",
                f"sum_s A[{i},s] + sum_s B[s,{j}] = {marg[i, j]}, "
                f"expected p[{i}]+q[{j}] = {p[i] + q[j]}",
            )
        object.__setattr__(self, "p", _freeze(p))
        object.__setattr__(self, "q", _freeze(q))
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "B", _freeze(B))

    @property
    def n(self) -> int:
        return self.p.size


def mediant(a: float, b: float) -> float:
    """a*b/(a+b), extended by 0 at a = b = 0 (the restricted-sum convention)."""
    if a < 0 or b < 0:
        raise ValueError("mediant requires nonnegative arguments")
    s = a + b
    return a * b / s if s > 0 else 0.0


def mediant_matrix(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Elementwise mediant with the 0-at-(0,0) convention."""
    S = P + Q
    with np.errstate(divide="ignore", invalid="ignore"):
        M = np.where(S > 0, P * Q / np.where(S > 0, S, 1.0), 0.0)
    return M


def _squared_at(space: SemimetricSpace, assignment, n: int) -> np.ndarray:
    idx = check_assignment(assignment, space.n)
    if idx.size != n:
        raise ValueError(f"plan has {n} slots but assignment has {idx.size} labels")
    return space.d[np.ix_(idx, idx)] ** 2


def ann_gap(space: SemimetricSpace, assignment, plan: AnnPlan) -> float:
    """RHS - LHS of the coupling-form inequality; negative means violated."""
    w = _squared_at(space, assignment, plan.n)
    rhs = float(plan.p @ w @ plan.q)
    lhs = 0.5 * float(np.sum(mediant_matrix(plan.pi, plan.pi.T) * w))
    return rhs - lhs


def ab_gap(space: SemimetricSpace, assignment, plan: AbPlan) -> float:
    """RHS - LHS of the (A, B)-form inequality; negative means violated."""
    w = _squared_at(space, assignment, plan.n)
    rhs = float(plan.p @ w @ plan.q)
    lhs = float(np.sum(mediant_matrix(plan.A, plan.B) * w))
    return rhs - lhs


def ab_to_pi(plan: AbPlan) -> AnnPlan:
    """Fold an (A, B) plan into the coupling form via pi[i,j] = A[i,j] + B[j,i].

    The coupling-form gap of the result never exceeds the (A, B)-form gap.
    """
    return AnnPlan(p=plan.p, q=plan.q, pi=plan.A + plan.B.T)


def coarsen(plan: AnnPlan, phi, n_target: int) -> AnnPlan:
    """Push a plan on [m] forward through phi: [m] -> [n_target].

    Weights are summed over preimages; the pushforward never increases the
    gap when the assignment is composed accordingly.
    """
    phi = np.asarray(phi, dtype=int)
    if phi.ndim != 1 or phi.size != plan.n:
        raise ValueError(f"phi must map all {plan.n} slots, got shape {phi.shape}")
    if np.any(phi < 0) or np.any(phi >= n_target):
        raise ValueError(f"phi values must lie in [0, {n_target})")
    p_t = np.bincount(phi, weights=plan.p, minlength=n_target)
    q_t = np.bincount(phi, weights=plan.q, minlength=n_target)
    pi_t = np.zeros((n_target, n_target))
    np.add.at(pi_t, (phi[:, None], phi[None, :]), plan.pi)
    return AnnPlan(p=p_t, q=q_t, pi=pi_t)


def _boxtimes_coeffs(space: SemimetricSpace, quadruple):
    x, y, z, w = (int(v) for v in quadruple)
    check_assignment([x, y, z, w], space.n)
    d = space.d
    return (
        float(d[x, y]) ** 2,
        float(d[y, z]) ** 2,
        float(d[z, w]) ** 2,
        float(d[w, x]) ** 2,
        float(d[x, z]) ** 2,
        float(d[y, w]) ** 2,
    )


def boxtimes_gap(space: SemimetricSpace, quadruple, s: float, t: float) -> float:
    """Value of the quadruple inequality at (s, t); negative means violated."""
    if not (0.0 <= s <= 1.0 and 0.0 <= t <= 1.0):
        raise ValueError(f"s, t must lie in [0, 1], got ({s}, {t})")
    al, be, ga, de, e, g = _boxtimes_coeffs(space, quadruple)
    return (
        (1 - s) * (1 - t) * al
        + s * (1 - t) * be
        + s * t * ga
        + (1 - s) * t * de
        - s * (1 - s) * e
        - t * (1 - t) * g
    )


def _min_quadratic_on_square(al, be, ga, de, e, g):
    """Exact global minimum of the quadruple expression over [0,1]^2.

    The expression is convex in s alone (curvature 2e >= 0) and in t alone
    (curvature 2g >= 0), so the minimum lies at a corner, at an edge-interior
    critical point of a 1-d convex quadratic, or at the interior stationary
    point when the full Hessian is positive semidefinite.  Ties are broken
    lexicographically in (s, t).
    """
    m = al - be + ga - de  # mixed second partial

    def value(s, t):
        return (
            (1 - s) * (1 - t) * al
            + s * (1 - t) * be
            + s * t * ga
            + (1 - s) * t * de
            - s * (1 - s) * e
            - t * (1 - t) * g
        )

    cands = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
    if e > 0.0:
        s0 = (al - be + e) / (2 * e)
        if 0.0 < s0 < 1.0:
            cands.append((s0, 0.0))
        s1 = (al - be + e - m) / (2 * e)
        if 0.0 < s1 < 1.0:
            cands.append((s1, 1.0))
    if g > 0.0:
        t0 = (al - de + g) / (2 * g)
        if 0.0 < t0 < 1.0:
            cands.append((0.0, t0))
        t1 = (al - de + g - m) / (2 * g)
        if 0.0 < t1 < 1.0:
            cands.append((1.0, t1))
    det = 4 * e * g - m * m
    if det > 0.0:
        rhs1 = al - be + e
        rhs2 = al - de + g
        si = (2 * g * rhs1 - m * rhs2) / det
        ti = (2 * e * rhs2 - m * rhs1) / det
        if 0.0 < si < 1.0 and 0.0 < ti < 1.0:
            cands.append((si, ti))
    best_s, best_t = 0.0, 0.0
    best = value(0.0, 0.0)
    for s, t in sorted(cands):
        v = value(s, t)
        if v < best:
            best, best_s, best_t = v, s, t
    return best_s, best_t, best


def boxtimes_min(space: SemimetricSpace, quadruple) -> tuple[float, float, float]:
    """Exact minimizer (s*, t*, min_gap) of the quadruple inequality."""
    al, be, ga, de, e, g = _boxtimes_coeffs(space, quadruple)
    return _min_quadratic_on_square(al, be, ga, de, e, g)


@dataclass(frozen=True)
class BoxtimesReport:
    """Outcome of minimizing over every ordered quadruple of a space."""

    min_gap: float
    quadruple: tuple[int, int, int, int]
    s: float
    t: float
    quadruples_checked: int

    def holds(self, tol: float) -> bool:
        return self.min_gap >= -tol


def check_boxtimes(space: SemimetricSpace) -> BoxtimesReport:
    """Minimize the quadruple inequality over all ordered quadruples.

    Repeated labels are included (they only produce reduced or zero-gap
    instances); at n = 6 this is 6^4 exact minimizations.
    """
    d2 = (space.d ** 2).tolist()  # plain floats: the inner loop is scalar math
    best = (0.0, (0, 0, 0, 0), 0.0, 0.0)
    first = True
    count = 0
    for x, y, z, w in itertools.product(range(space.n), repeat=4):
        count += 1
        s, t, gap = _min_quadratic_on_square(
            d2[x][y], d2[y][z], d2[z][w], d2[w][x], d2[x][z], d2[y][w]
        )
        if first or gap < best[0]:
            best = (gap, (x, y, z, w), s, t)
            first = False
    return BoxtimesReport(
        min_gap=best[0], quadruple=best[1], s=best[2], t=best[3],
        quadruples_checked=count,
    )


def ann_plan_to_dict(plan: AnnPlan) -> dict:
    return {"p": plan.p.tolist(), "q": plan.q.tolist(), "pi": plan.pi.tolist()}


def ann_plan_from_dict(doc: dict) -> AnnPlan:
    try:
        return AnnPlan(p=doc["p"], q=doc["q"], pi=doc["pi"])
    except KeyError as exc:
        raise InvalidPlanError("shape", f"plan document is missing {exc}") from exc


def ab_plan_to_dict(plan: AbPlan) -> dict:
    return {
        "p": plan.p.tolist(),
        "q": plan.q.tolist(),
        "A": plan.A.tolist(),
        "B": plan.B.tolist(),
    }


def ab_plan_from_dict(doc: dict) -> AbPlan:
    try:
        return AbPlan(p=doc["p"], q=doc["q"], A=doc["A"], B=doc["B"])
    except KeyError as exc:
        raise InvalidPlanError("shape", f"plan document is missing {exc}") from exc


def boxtimes_as_ann_plan(n: int, quadruple, s: float, t: float):
    """Encode a quadruple-inequality instance as a 4-slot coupling plan.

    Returns (assignment, plan) with ann_gap(space, assignment, plan) equal to
    boxtimes_gap(space, quadruple, s, t) exactly.
    """
    if not (0.0 <= s <= 1.0 and 0.0 <= t <= 1.0):
        raise ValueError(f"s, t must lie in [0, 1], got ({s}, {t})")
    idx = check_assignment(quadruple, n)
    if idx.size != 4:
        raise ValueError("quadruple must have exactly 4 labels")
    p = np.array([1 - s, 0.0, s, 0.0])
    q = np.array([0.0, 1 - t, 0.0, t])
    pi = np.zeros((4, 4))
    pi[0, 2] = 1 - s
    pi[2, 0] = s
    pi[1, 3] = 1 - t
    pi[3, 1] = t
    return tuple(int(i) for i in idx), AnnPlan(p=p, q=q, pi=pi)
