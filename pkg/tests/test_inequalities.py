import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annmetric.inequalities import (
    AbPlan,
    AnnPlan,
    InvalidPlanError,
    ab_gap,
    ab_to_pi,
    ann_gap,
    boxtimes_as_ann_plan,
    boxtimes_gap,
    boxtimes_min,
    check_boxtimes,
    coarsen,
    mediant,
)
from annmetric.sampling import (
    random_ab_plan,
    random_ann_plan,
    random_euclidean_space,
    random_map,
    random_semimetric,
    random_simplex,
)
from annmetric.spaces import validate_semimetric

from oracles import gap_by_loops, grid_boxtimes_min

C4 = validate_semimetric([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])

nonneg = st.floats(min_value=0.0, max_value=1e9, allow_nan=False)


class TestMediant:
    def test_examples(self):
        assert mediant(0.0, 0.0) == 0.0
        assert mediant(1.0, 1.0) == 0.5
        assert mediant(1.0, 3.0) == 0.75

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            mediant(-1.0, 2.0)

    @given(nonneg, nonneg)
    def test_symmetric_and_below_min(self, a, b):
        m = mediant(a, b)
        assert m == mediant(b, a)
        assert m <= min(a, b) + 1e-12

    @given(nonneg, nonneg, nonneg, nonneg)
    def test_superadditive_under_splits(self, a1, a2, b1, b2):
        # splitting both arguments never increases the total
        lhs = mediant(a1, b1) + mediant(a2, b2)
        rhs = mediant(a1 + a2, b1 + b2)
        assert lhs <= rhs + 1e-12 * max(1.0, rhs)

    @given(nonneg, nonneg, nonneg, nonneg)
    def test_midpoint_concave(self, a, b, a2, b2):
        mid = mediant(0.5 * (a + a2), 0.5 * (b + b2))
        avg = 0.5 * (mediant(a, b) + mediant(a2, b2))
        assert mid >= avg - 1e-12 * max(1.0, mid)


class TestAnnPlan:
    def test_repair_renormalizes(self):
        plan = AnnPlan(
            p=[0.5 + 4e-10, 0.5], q=[0.25, 0.75], pi=[[0.75, 0.0], [0.0, 1.25]]
        )
        assert plan.p.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(plan.pi.sum(axis=1), plan.p + plan.q, atol=1e-15)
        assert plan.provenance.startswith("repaired")

    def test_rejects_bad_row_sum(self):
        with pytest.raises(InvalidPlanError) as exc:
            AnnPlan(p=[0.5, 0.5], q=[0.5, 0.5], pi=[[1.0, 0.5], [0.0, 1.0]])
        assert exc.value.code == "row_sum"

    def test_rejects_negative_pi(self):
        with pytest.raises(InvalidPlanError) as exc:
            AnnPlan(p=[0.5, 0.5], q=[0.5, 0.5], pi=[[1.5, -0.5], [0.0, 1.0]])
        assert exc.value.code == "negative"

    def test_rejects_bad_simplex(self):
        with pytest.raises(InvalidPlanError):
            AnnPlan(p=[0.9, 0.3], q=[0.5, 0.5], pi=np.ones((2, 2)) * 0.6)

    def test_zero_row_backfill(self):
        # a row whose target mass is tiny but positive gets spread uniformly
        plan = AnnPlan(
            p=[1.0 - 5e-10, 5e-10],
            q=[1.0, 0.0],
            pi=[[2.0, 0.0], [0.0, 0.0]],
        )
        assert np.allclose(plan.pi.sum(axis=1), plan.p + plan.q, atol=1e-16)


class TestAnnGap:
    def test_two_point_example(self):
        space = validate_semimetric([[0, 1], [1, 0]])
        plan = AnnPlan(p=[1, 0], q=[0, 1], pi=[[0, 1], [1, 0]])
        assert ann_gap(space, [0, 1], plan) == pytest.approx(0.5)

    def test_diagonal_pi_gives_plain_rhs(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            space = random_semimetric(rng, n)
            p = random_simplex(rng, n)
            q = random_simplex(rng, n)
            plan = AnnPlan(p=p, q=q, pi=np.diag(p + q))
            w = space.d ** 2
            assert ann_gap(space, range(n), plan) == pytest.approx(
                float(p @ w @ q), abs=1e-12
            )
            assert ann_gap(space, range(n), plan) >= -1e-15

    def test_c4_boxtimes_plan(self):
        asg, plan = boxtimes_as_ann_plan(4, (0, 1, 2, 3), 0.5, 0.5)
        assert ann_gap(C4, asg, plan) == pytest.approx(-1.0, abs=1e-12)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(1, 7))
            space = random_semimetric(rng, n)
            plan = random_ann_plan(rng, n)
            asg = random_map(rng, n, space.n)
            assert ann_gap(space, asg, plan) == pytest.approx(
                gap_by_loops(space, asg, plan), rel=1e-12, abs=1e-12
            )


class TestAbForm:
    def test_zero_b_gap_is_rhs(self):
        rng = np.random.default_rng(5)
        n = 4
        p = random_simplex(rng, n)
        q = random_simplex(rng, n)
        # B = 0 forces column marginals q_j - k = 0, so k = q_j: only legal
        # when q is uniform; build directly instead.
        q = np.full(n, 1.0 / n)
        A = (p + 1.0 / n)[:, None] * rng.dirichlet(np.ones(n), size=n)
        plan = AbPlan(p=p, q=q, A=A, B=np.zeros((n, n)))
        space = random_semimetric(rng, n)
        w = space.d ** 2
        assert ab_gap(space, range(n), plan) == pytest.approx(float(p @ w @ q))

    def test_n1_forced(self):
        space = validate_semimetric([[0.0]])
        plan = AbPlan(p=[1.0], q=[1.0], A=[[1.5]], B=[[0.5]])
        assert ab_gap(space, [0], plan) == 0.0

    def test_ab_to_pi_examples(self):
        plan = AbPlan(p=[1.0], q=[1.0], A=[[1.5]], B=[[0.5]])
        out = ab_to_pi(plan)
        assert out.pi[0, 0] == pytest.approx(2.0)

    def test_ab_to_pi_valid_and_dominated(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            plan = random_ab_plan(rng, n)
            folded = ab_to_pi(plan)  # constructor re-validates
            space = random_semimetric(rng, n)
            assert ann_gap(space, range(n), folded) <= ab_gap(
                space, range(n), plan
            ) + 1e-12


class TestCoarsen:
    def test_identity_map(self):
        rng = np.random.default_rng(7)
        plan = random_ann_plan(rng, 5)
        out = coarsen(plan, np.arange(5), 5)
        assert np.allclose(out.p, plan.p, atol=1e-15)
        assert np.allclose(out.pi, plan.pi, atol=1e-15)

    def test_constant_map(self):
        rng = np.random.default_rng(8)
        plan = random_ann_plan(rng, 4)
        out = coarsen(plan, np.full(4, 2), 6)
        assert out.p[2] == pytest.approx(1.0)
        assert out.q[2] == pytest.approx(1.0)
        assert out.pi[2, 2] == pytest.approx(2.0)
        space = random_semimetric(rng, 6)
        assert ann_gap(space, range(6), out) == pytest.approx(0.0, abs=1e-14)

    def test_bad_map(self):
        rng = np.random.default_rng(9)
        plan = random_ann_plan(rng, 3)
        with pytest.raises(ValueError):
            coarsen(plan, [0, 1, 9], 4)
        with pytest.raises(ValueError):
            coarsen(plan, [0, 1], 4)

    def test_monotone_and_rhs_preserved(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            m = int(rng.integers(1, 11))
            n = int(rng.integers(1, 7))
            plan = random_ann_plan(rng, m)
            phi = random_map(rng, m, n)
            space = random_semimetric(rng, n)
            gap_coarse = ann_gap(space, range(n), coarsen(plan, phi, n))
            gap_orig = ann_gap(space, phi, plan)
            assert gap_coarse <= gap_orig + 1e-12
            w = space.d ** 2
            rhs_orig = float(plan.p @ w[np.ix_(phi, phi)] @ plan.q)
            cp = coarsen(plan, phi, n)
            rhs_coarse = float(cp.p @ w @ cp.q)
            assert rhs_coarse == pytest.approx(rhs_orig, abs=1e-12)


class TestBoxtimes:
    def test_c4_value(self):
        assert boxtimes_gap(C4, (0, 1, 2, 3), 0.5, 0.5) == pytest.approx(-1.0)

    def test_degenerate_params(self):
        rng = np.random.default_rng(11)
        space = random_semimetric(rng, 5)
        x, y = 1, 3
        assert boxtimes_gap(space, (x, y, 0, 2), 0.0, 0.0) == pytest.approx(
            float(space.d[x, y]) ** 2
        )
        assert boxtimes_gap(space, (2, 2, 2, 2), 0.3, 0.7) == pytest.approx(0.0)

    def test_param_out_of_range(self):
        with pytest.raises(ValueError):
            boxtimes_gap(C4, (0, 1, 2, 3), 1.5, 0.5)
        with pytest.raises(ValueError):
            boxtimes_min(C4, (0, 1, 2, 9))

    def test_c4_min(self):
        s, t, gap = boxtimes_min(C4, (0, 1, 2, 3))
        assert (s, t) == (0.5, 0.5)
        assert gap == pytest.approx(-1.0, abs=1e-12)

    def test_min_against_grid_oracle(self):
        # distances are kept small so the curvature times the squared grid
        # pitch stays below the 1e-6 comparison tolerance
        rng = np.random.default_rng(12)
        for trial in range(120):
            if trial % 2 == 0:
                space = random_euclidean_space(rng, 5, 3, half_width=0.05)
            else:
                space = random_semimetric(rng, 5, scale=0.15)
            quad = tuple(rng.integers(0, 5, size=4))
            s, t, gap = boxtimes_min(space, quad)
            ref = grid_boxtimes_min(space, quad)
            assert gap <= ref + 1e-12
            assert abs(gap - ref) < 1e-6

    def test_min_with_coincident_labels(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            space = random_semimetric(rng, 4, scale=0.2)
            quad = (0, 1, 0, 2)  # x = z kills the s-curvature
            s, t, gap = boxtimes_min(space, quad)
            ref = grid_boxtimes_min(space, quad)
            assert gap <= ref + 1e-12
            assert abs(gap - ref) < 1e-6

    def test_relabel_symmetry(self):
        # (x,y,z,w,s,t) -> (y,z,w,x,t,1-s) leaves the value unchanged
        rng = np.random.default_rng(14)
        for _ in range(200):
            space = random_semimetric(rng, 6)
            x, y, z, w = (int(v) for v in rng.integers(0, 6, size=4))
            s, t = rng.uniform(size=2)
            a = boxtimes_gap(space, (x, y, z, w), s, t)
            b = boxtimes_gap(space, (y, z, w, x), t, 1.0 - s)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)

    def test_check_boxtimes_c4(self):
        rep = check_boxtimes(C4)
        assert rep.min_gap == pytest.approx(-1.0, abs=1e-12)
        assert rep.quadruple == (0, 1, 2, 3)
        assert (rep.s, rep.t) == (0.5, 0.5)
        assert rep.quadruples_checked == 4 ** 4

    def test_check_boxtimes_single_point(self):
        space = validate_semimetric([[0.0]])
        assert check_boxtimes(space).min_gap == 0.0

    def test_check_boxtimes_euclidean(self):
        rng = np.random.default_rng(15)
        for _ in range(5):
            space = random_euclidean_space(rng, 5, 3)
            assert check_boxtimes(space).min_gap >= -1e-9


class TestPlanJson:
    def test_ann_round_trip(self):
        rng = np.random.default_rng(20)
        plan = random_ann_plan(rng, 4)
        from annmetric.inequalities import ann_plan_from_dict, ann_plan_to_dict

        again = ann_plan_from_dict(ann_plan_to_dict(plan))
        assert np.allclose(again.pi, plan.pi, atol=1e-15)
        assert np.allclose(again.p, plan.p, atol=1e-15)

    def test_ab_round_trip(self):
        rng = np.random.default_rng(21)
        plan = random_ab_plan(rng, 3)
        from annmetric.inequalities import ab_plan_from_dict, ab_plan_to_dict

        again = ab_plan_from_dict(ab_plan_to_dict(plan))
        assert np.allclose(again.A, plan.A, atol=1e-15)
        assert np.allclose(again.B, plan.B, atol=1e-15)

    def test_missing_key(self):
        from annmetric.inequalities import ann_plan_from_dict

        with pytest.raises(InvalidPlanError):
            ann_plan_from_dict({"p": [1.0], "q": [1.0]})


class TestBoxtimesEncoding:
    def test_half_half_structure(self):
        asg, plan = boxtimes_as_ann_plan(4, (0, 1, 2, 3), 0.5, 0.5)
        assert asg == (0, 1, 2, 3)
        assert np.allclose(plan.p, [0.5, 0, 0.5, 0])
        assert np.allclose(plan.q, [0, 0.5, 0, 0.5])
        assert plan.pi[0, 2] == plan.pi[2, 0] == 0.5
        assert plan.pi[1, 3] == plan.pi[3, 1] == 0.5
        assert plan.pi.sum() == pytest.approx(2.0)

    def test_zero_params(self):
        _, plan = boxtimes_as_ann_plan(4, (0, 1, 2, 3), 0.0, 0.0)
        assert plan.pi[0, 2] == 1.0 and plan.pi[1, 3] == 1.0
        assert plan.pi[2, 0] == 0.0 and plan.pi[3, 1] == 0.0

    def test_identity_random(self):
        rng = np.random.default_rng(16)
        for _ in range(300):
            n = int(rng.integers(4, 8))
            space = random_semimetric(rng, n)
            quad = tuple(int(v) for v in rng.integers(0, n, size=4))
            s, t = rng.uniform(size=2)
            asg, plan = boxtimes_as_ann_plan(n, quad, s, t)
            direct = boxtimes_gap(space, quad, s, t)
            encoded = ann_gap(space, asg, plan)
            assert encoded == pytest.approx(direct, abs=1e-12)
