import numpy as np
import pytest

from granapprox import (AttributeTable, RelationMatrix, ResidualTriplet,
                        build_bounds, bruteforce_general, feasible_solution,
                        is_granularly_representable, solve_binary,
                        solve_bruteforce, solve_lp, solve_qp,
                        triangular_dominance, triangular_similarity,
                        verify_constraints, verify_tightness)
from granapprox.losses import QUANTILE, LossFunction
from granapprox.solver import DecisionRelation

from conftest import random_labeled_table, random_similarity


@pytest.fixture
def conflict_pair(luk):
    """Two instances from different classes with R = 0.4 (so M = 0.6)."""
    rel = RelationMatrix(np.array([[1.0, 0.4], [0.4, 1.0]]))
    return build_bounds(rel, ["a", "b"], luk)


class TestBounds:
    def test_same_class_pairs_unbounded(self, luk):
        rel = RelationMatrix(np.array([[1.0, 0.7], [0.7, 1.0]]))
        b = build_bounds(rel, ["a", "a"], luk)
        assert np.all(b.values == 1.0)

    def test_cross_class_pair_is_negated_relation(self, conflict_pair):
        assert conflict_pair.values[0, 1] == pytest.approx(0.6, abs=1e-12)

    def test_conflicting_duplicates_force_zero(self, luk):
        rel = RelationMatrix(np.ones((2, 2)))
        b = build_bounds(rel, ["a", "b"], luk)
        assert b.values[0, 1] == 0.0

    def test_decision_relation_is_crisp_equivalence(self):
        s = DecisionRelation.from_labels(["a", "b", "a", "c"]).values
        assert np.all(np.diag(s) == 1.0)
        assert np.all(s == s.T)
        assert s[0, 2] == 1.0 and s[0, 1] == 0.0
        n = s.shape[0]
        for v in range(n):
            assert np.all(np.minimum(s[:, v][:, None], s[v, :][None, :]) <= s)

    def test_asymmetric_relation_warns(self, luk):
        table = AttributeTable.from_array([[0.2], [0.8]])
        rel = triangular_dominance(table, 1.0)
        with pytest.warns(UserWarning, match="asymmetric"):
            b = build_bounds(rel, ["a", "b"], luk)
        assert not b.symmetric

    def test_triplet_mismatch_rejected(self, conflict_pair):
        other = ResidualTriplet.from_names("lukasiewicz", "square")
        with pytest.raises(ValueError, match="triplet"):
            solve_lp(conflict_pair, other)


class TestFeasibleSolution:
    def test_two_instance_chain(self, conflict_pair):
        beta = feasible_solution(conflict_pair)
        assert beta[0] == 1.0
        assert beta[1] == pytest.approx(0.6, abs=1e-12)

    def test_all_same_class_stays_full(self, luk):
        rel = RelationMatrix(np.array([[1.0, 0.7], [0.7, 1.0]]))
        b = build_bounds(rel, ["a", "a"], luk)
        assert np.all(feasible_solution(b) == 1.0)

    def test_exact_feasibility_randomized(self, luk):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(2, 10))
            rel, labels = random_similarity(rng, n, gamma=float(rng.uniform(0.5, 3)))
            b = build_bounds(rel, labels, luk)
            ordering = rng.permutation(n)
            beta = feasible_solution(b, ordering=ordering,
                                     seed=int(rng.integers(0, 1000)))
            tmat = np.asarray(luk._t_raw(beta[:, None], beta[None, :]))
            viol = tmat - b.values
            np.fill_diagonal(viol, -1.0)
            assert float(viol.max()) <= 0.0

    def test_seeded_first_value(self, conflict_pair):
        b1 = feasible_solution(conflict_pair, seed=5)
        b2 = feasible_solution(conflict_pair, seed=5)
        assert np.array_equal(b1, b2)
        assert 0.0 <= b1[0] <= 1.0

    def test_ordering_validation(self, conflict_pair):
        with pytest.raises(ValueError):
            feasible_solution(conflict_pair, ordering=[0, 0])


class TestLinearSolver:
    def test_two_instance_objective(self, conflict_pair):
        res = solve_lp(conflict_pair)
        assert res.objective == pytest.approx(1.6, abs=1e-9)

    def test_all_same_class(self, luk):
        rel = RelationMatrix(np.where(np.eye(3, dtype=bool), 1.0, 0.5))
        b = build_bounds(rel, ["a", "a", "a"], luk)
        res = solve_lp(b)
        assert np.all(res.alpha == 1.0)
        assert res.objective == pytest.approx(3.0, abs=1e-12)

    def test_three_instance_vertex(self, luk):
        rel = RelationMatrix(np.array([[1.0, 1.0, 0.4],
                                       [1.0, 1.0, 0.2],
                                       [0.4, 0.2, 1.0]]))
        b = build_bounds(rel, ["a", "a", "b"], luk)
        res = solve_lp(b)
        assert res.objective == pytest.approx(2.6, abs=1e-9)

    def test_feasibility_and_tightness(self, luk):
        rng = np.random.default_rng(12)
        for _ in range(25):
            rel, labels = random_similarity(rng, int(rng.integers(2, 8)))
            b = build_bounds(rel, labels, luk)
            res = solve_lp(b)
            assert verify_constraints(res, b).max_violation <= 0.0
            assert verify_tightness(res, b).ok


class TestQuadraticSolver:
    def test_two_instance_unique_optimum(self, conflict_pair):
        res = solve_qp(conflict_pair)
        assert np.allclose(res.alpha, [0.8, 0.8], atol=1e-9)
        assert res.objective == pytest.approx(0.08, abs=1e-9)
        assert res.kkt_residual <= 1e-6
        # T(0.8, 0.8) = 0.6 meets the bound: tight in both directions
        assert res.partition == ("tight", "tight")
        assert res.tight_partner.tolist() == [1, 0]

    def test_all_same_class_unconstrained(self, luk):
        rel = RelationMatrix(np.where(np.eye(4, dtype=bool), 1.0, 0.3))
        b = build_bounds(rel, ["a"] * 4, luk)
        res = solve_qp(b)
        assert np.all(res.alpha == 1.0)
        assert res.objective == 0.0
        assert res.partition == ("slack",) * 4

    def test_conflicting_duplicates(self, luk):
        rel = RelationMatrix(np.ones((2, 2)))
        b = build_bounds(rel, ["a", "b"], luk)
        res = solve_qp(b)
        assert np.allclose(res.alpha, [0.5, 0.5], atol=1e-12)

    def test_square_isomorphism(self):
        trip = ResidualTriplet.from_names("lukasiewicz", "square")
        rel = RelationMatrix(np.array([[1.0, 0.4], [0.4, 1.0]]))
        b = build_bounds(rel, ["a", "b"], trip)
        res = solve_qp(b)
        # constraints hold in the original scale
        assert verify_constraints(res, b).max_violation <= 0.0
        assert res.kkt_residual <= 1e-6
        assert np.allclose(res.beta, np.sqrt(res.alpha), atol=1e-12)
        oracle = solve_bruteforce(b, loss="mse", grid_step=0.01)
        assert oracle.objective >= res.objective - 1e-9
        # the oracle grids the original scale; one step of 0.01 in beta is
        # worth up to 0.02 in alpha = beta^2 near 1, so the gap bound is
        # correspondingly coarser than in the identity-scale comparison
        assert oracle.objective - res.objective <= 0.01

    def test_tight_partner_certificates(self, luk):
        rng = np.random.default_rng(13)
        for _ in range(25):
            rel, labels = random_similarity(rng, int(rng.integers(2, 8)))
            b = build_bounds(rel, labels, luk)
            res = solve_qp(b)
            report = verify_tightness(res, b)
            assert report.ok
            free = res.beta < 1.0 - 1e-8
            assert np.all(res.tight_partner[free] >= 0)


class TestOracle:
    def test_agrees_with_qp_on_grid(self, conflict_pair):
        res = solve_bruteforce(conflict_pair, loss="mse", grid_step=0.01)
        assert np.allclose(res.beta, [0.8, 0.8], atol=0.0100001)
        assert res.max_violation <= 0.0

    def test_rejects_oversize(self, luk):
        rng = np.random.default_rng(14)
        rel, labels = random_similarity(rng, 8)
        b = build_bounds(rel, labels, luk)
        with pytest.raises(ValueError):
            solve_bruteforce(b, loss="mse", grid_step=0.01)

    def test_requires_loss(self, conflict_pair):
        with pytest.raises(ValueError):
            solve_bruteforce(conflict_pair)

    def test_feasible_filtering(self, luk):
        # a grid point that violates a bound never survives; the returned
        # point is exactly feasible
        rel = RelationMatrix(np.array([[1.0, 0.9], [0.9, 1.0]]))
        b = build_bounds(rel, ["a", "b"], luk)  # M = 0.1
        res = solve_bruteforce(b, loss="mae", grid_step=0.05)
        t = luk.t_norm(float(res.beta[0]), float(res.beta[1]))
        assert t <= 0.1
        assert res.max_violation <= 0.0

    def test_randomized_agreement_with_lp_and_qp(self, luk):
        rng = np.random.default_rng(15)
        for _ in range(12):
            rel, labels = random_similarity(rng, 4, gamma=1.0, grid=20)
            b = build_bounds(rel, labels, luk)
            lp = solve_lp(b)
            mae = solve_bruteforce(b, loss="mae", grid_step=0.01)
            assert abs(lp.objective - mae.sum_alpha) <= 0.04
            qp = solve_qp(b)
            mse = solve_bruteforce(b, loss="mse", grid_step=0.01)
            assert mse.objective >= qp.objective - 1e-9
            assert mse.objective - qp.objective <= 0.002

    def test_non_lukasiewicz_kinds_supported(self):
        trip = ResidualTriplet.from_names("product")
        rel = RelationMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
        b = build_bounds(rel, ["a", "b"], trip)
        res = solve_bruteforce(b, loss="mse", grid_step=0.01)
        # product negator is crisp on (0, 1]: N(0.5) = 0, so one side must die
        assert res.max_violation <= 0.0
        assert min(res.beta) == pytest.approx(0.0, abs=1e-12)

    def test_general_oracle_with_quantile_loss(self, luk):
        # asymmetric quantile losses run through the general grid search:
        # the optimum is representable and p weights the two shrink
        # directions, so a larger p tolerates less undershoot
        rng = np.random.default_rng(25)
        rel, _ = random_similarity(rng, 3, gamma=1.5)
        a = rng.uniform(size=3)
        lo = LossFunction(QUANTILE, p=0.1)
        hi = LossFunction(QUANTILE, p=0.9)
        for loss in (lo, hi):
            a_hat, obj = bruteforce_general(a, rel, luk, loss, grid_step=0.02)
            rep = is_granularly_representable(a_hat, rel, luk)
            assert rep.max_violation <= 1e-12
            assert obj >= 0.0
        # undershooting costs p, overshooting costs 1 - p
        down_lo = float(np.sum(np.maximum(
            a - bruteforce_general(a, rel, luk, lo, grid_step=0.02)[0], 0)))
        down_hi = float(np.sum(np.maximum(
            a - bruteforce_general(a, rel, luk, hi, grid_step=0.02)[0], 0)))
        assert down_hi <= down_lo + 1e-9


class TestBinary:
    def test_single_cross_pair(self, luk):
        rel = RelationMatrix(np.array([[1.0, 0.4], [0.4, 1.0]]))
        res = solve_binary(["a", "b"], rel, luk, "mse")
        assert np.allclose(res.beta, [0.8, 0.8], atol=1e-9)
        assert res.mode == "binary"

    def test_reconstruction_is_representable(self, luk):
        rng = np.random.default_rng(16)
        for _ in range(20):
            rel, labels = random_similarity(rng, int(rng.integers(3, 8)),
                                            n_classes=2)
            for loss in ("mae", "mse"):
                res = solve_binary(labels, rel, luk, loss)
                assert res.gr_violation <= 1e-9
                assert is_granularly_representable(
                    res.a_hat, rel, luk).is_representable

    def test_preorder_relation_accepted(self, luk):
        rng = np.random.default_rng(17)
        table, labels = random_labeled_table(rng, 6, n_classes=2)
        rel = triangular_dominance(table, 1.5)
        res = solve_binary(labels, rel, luk, "mse")
        assert res.max_violation <= 0.0
        assert is_granularly_representable(res.a_hat, rel, luk).is_representable

    def test_matches_general_problem_oracle(self, luk):
        # the cross-class reduction and the full representability problem
        # have the same optimum; on a shared grid the two searches agree
        # exactly because the reduction's variable change preserves the grid
        rng = np.random.default_rng(18)
        for _ in range(5):
            rel, labels = random_similarity(rng, 4, gamma=1.0, grid=10,
                                            n_classes=2)
            a_crisp = (labels == labels[0]).astype(float)
            loss = LossFunction.from_name("mse")
            _, general_obj = bruteforce_general(a_crisp, rel, luk, loss,
                                                grid_step=0.02)
            b = build_bounds(rel, labels, luk)
            reduced = solve_bruteforce(b, loss="mse", grid_step=0.02)
            assert general_obj == pytest.approx(reduced.objective, abs=1e-9)
            # and the exact cross-class optimum sits just under the grid one
            exact = solve_binary(labels, rel, luk, "mse")
            assert exact.objective <= general_obj + 1e-9
            assert general_obj - exact.objective <= 0.01

    def test_binary_equals_multiclass_on_two_classes(self, luk):
        rng = np.random.default_rng(19)
        for _ in range(10):
            rel, labels = random_similarity(rng, int(rng.integers(3, 9)),
                                            n_classes=2)
            b = build_bounds(rel, labels, luk)
            assert solve_binary(labels, rel, luk, "mse").objective == pytest.approx(
                solve_qp(b).objective, abs=1e-8)
            assert solve_binary(labels, rel, luk, "mae").objective == pytest.approx(
                solve_lp(b).objective, abs=1e-8)

    def test_tightness_theorems(self, luk):
        rng = np.random.default_rng(20)
        for _ in range(15):
            rel, labels = random_similarity(rng, 6, n_classes=2)
            b = build_bounds(rel, labels, luk)
            for loss in ("mae", "mse"):
                res = solve_binary(labels, rel, luk, loss)
                report = verify_tightness(res, b, relation=rel)
                assert report.mode == "binary"
                assert report.ok, (report.eq_upper_gap, report.eq_lower_gap,
                                   report.adjacency_ok)

    def test_tightness_with_square_isomorphism(self):
        trip = ResidualTriplet.from_names("lukasiewicz", "square")
        rng = np.random.default_rng(24)
        for _ in range(10):
            rel, labels = random_similarity(rng, 6, n_classes=2)
            b = build_bounds(rel, labels, trip)
            res = solve_binary(labels, rel, trip, "mse")
            report = verify_tightness(res, b, relation=rel)
            assert report.ok, (report.eq_upper_gap, report.eq_lower_gap,
                               report.adjacency_ok)
            multi = verify_tightness(solve_qp(b), b)
            assert multi.ok

    def test_rejects_wrong_class_count(self, luk):
        rel = RelationMatrix(np.eye(3))
        with pytest.raises(ValueError):
            solve_binary(["a", "b", "c"], rel, luk, "mse")

    def test_rejects_asymmetric_quantile(self, luk):
        rel = RelationMatrix(np.eye(2))
        with pytest.raises(ValueError):
            solve_binary(["a", "b"], rel, luk, "quantile:0.25")


class TestGuards:
    def test_drastic_rejected_everywhere(self):
        trip = ResidualTriplet.from_names("drastic")
        rel = RelationMatrix(np.eye(2))
        b = build_bounds(rel, ["a", "b"], trip)
        for fn in (solve_lp, solve_qp):
            with pytest.raises(ValueError, match="non-residuated"):
                fn(b)
        with pytest.raises(ValueError, match="non-residuated"):
            solve_bruteforce(b, loss="mse")
        with pytest.raises(ValueError, match="non-residuated"):
            feasible_solution(b)

    def test_non_lukasiewicz_rejected_by_reductions(self):
        trip = ResidualTriplet.from_names("minimum")
        rel = RelationMatrix(np.eye(2))
        b = build_bounds(rel, ["a", "b"], trip)
        for fn in (solve_lp, solve_qp):
            with pytest.raises(ValueError, match="Lukasiewicz"):
                fn(b)

    def test_asymmetric_needs_optin(self, luk):
        table = AttributeTable.from_array([[0.2], [0.8]])
        rel = triangular_dominance(table, 1.0)
        with pytest.warns(UserWarning):
            b = build_bounds(rel, ["a", "b"], luk)
        with pytest.raises(ValueError, match="asymmetric"):
            solve_qp(b)
        res = solve_qp(b, allow_asymmetric=True)
        assert res.max_violation <= 0.0

    def test_full_membership_violates_on_conflict(self, luk, conflict_pair):
        from granapprox.solver import ApproximationResult
        res = ApproximationResult(
            beta=np.ones(2), alpha=np.ones(2), objective=0.0, loss="mse",
            mode="multiclass", partition=("slack", "slack"),
            tight_partner=np.array([-1, -1]), max_violation=0.0)
        rep = verify_constraints(res, conflict_pair)
        assert rep.max_violation == pytest.approx(0.4, abs=1e-12)
        assert not rep.feasible
