import numpy as np
import pytest
import scipy.optimize

from stochpert.errors import DomainError
from stochpert.numerics import (Disk, LinearProgram, eigen_split, expm,
                                lp_solve, sylvester_kron_matrix)


def lp(c, A, senses, b, bounds, maximize=True):
    return LinearProgram(np.asarray(c, float), np.asarray(A, float), senses,
                         np.asarray(b, float), bounds, maximize)


class TestLpSolve:
    def test_single_constraint(self):
        res = lp_solve(lp([1.0], [[1.0]], ["<="], [3.0], [(0.0, None)]))
        assert res.status == "optimal"
        assert res.value == pytest.approx(3.0, abs=1e-9)

    def test_two_variables(self):
        res = lp_solve(lp([1.0, 1.0], [[1.0, 1.0]], ["<="], [1.0],
                          [(0.0, None)] * 2))
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_infeasible(self):
        res = lp_solve(lp([1.0], [[1.0], [1.0]], [">=", "<="], [1.0, 0.0],
                          [(None, None)]))
        assert res.status == "infeasible"

    def test_unbounded(self):
        res = lp_solve(lp([1.0], [[0.0]], ["<="], [1.0], [(0.0, None)]))
        assert res.status == "unbounded"

    def test_free_variable_bound_through_equality(self):
        # min x + y with x - y = 2, x >= 0: x >= 0 forces y >= -2
        res = lp_solve(lp([1.0, 1.0], [[1.0, -1.0]], ["="], [2.0],
                          [(0.0, None), (None, 5.0)], maximize=False))
        assert res.status == "optimal"
        assert res.value == pytest.approx(-2.0, abs=1e-9)

    def test_free_variable_unbounded_below(self):
        res = lp_solve(lp([0.0, 1.0], [[1.0, 1.0]], ["<="], [5.0],
                          [(0.0, None), (None, None)], maximize=False))
        assert res.status == "unbounded"

    def test_free_variable_optimal(self):
        # max y with y <= x - 2 and x <= 5, y free
        res = lp_solve(lp([0.0, 1.0], [[-1.0, 1.0], [1.0, 0.0]],
                          ["<=", "<="], [-2.0, 5.0],
                          [(0.0, None), (None, None)]))
        assert res.status == "optimal"
        assert res.value == pytest.approx(3.0, abs=1e-9)

    def test_box_bounds(self):
        res = lp_solve(lp([2.0, -1.0], [[1.0, 1.0]], ["<="], [10.0],
                          [(1.0, 4.0), (-2.0, 3.0)]))
        assert res.status == "optimal"
        assert res.value == pytest.approx(2 * 4.0 - 1 * (-2.0), abs=1e-9)
        assert np.all(res.x >= [1.0 - 1e-9, -2.0 - 1e-9])

    @pytest.mark.parametrize("trial", range(25))
    def test_matches_scipy_on_random_programs(self, trial):
        rng = np.random.default_rng(100 + trial)
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 5))
        A = rng.standard_normal((m, n))
        b = rng.uniform(0.5, 2.0, m)
        c = rng.standard_normal(n)
        senses = ["<="] * m
        bounds = [(0.0, float(rng.uniform(1.0, 5.0))) for _ in range(n)]
        mine = lp_solve(lp(c, A, senses, b, bounds))
        ref = scipy.optimize.linprog(-c, A_ub=A, b_ub=b, bounds=bounds,
                                     method="highs")
        assert mine.status == "optimal" and ref.status == 0
        assert mine.value == pytest.approx(-ref.fun, abs=1e-8)
        assert np.all(A @ mine.x <= b + 1e-9)

    @pytest.mark.parametrize("trial", range(10))
    def test_strong_duality(self, trial):
        # max c.x st Ax <= b, x >= 0 and its dual min b.y st A'y >= c, y >= 0
        rng = np.random.default_rng(300 + trial)
        m, n = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        A = rng.uniform(0.2, 2.0, (m, n))
        b = rng.uniform(1.0, 3.0, m)
        c = rng.uniform(0.1, 1.0, n)
        primal = lp_solve(lp(c, A, ["<="] * m, b, [(0.0, None)] * n))
        dual = lp_solve(lp(b, A.T, [">="] * n, c, [(0.0, None)] * m,
                           maximize=False))
        assert primal.status == dual.status == "optimal"
        assert primal.value == pytest.approx(dual.value, abs=1e-8)

    def test_degenerate_program_terminates(self):
        # many redundant rows; Bland's rule must not cycle
        A = np.vstack([np.eye(3)] * 4)
        res = lp_solve(lp([1.0, 1.0, 1.0], A, ["<="] * 12, np.ones(12) * 2,
                          [(0.0, None)] * 3))
        assert res.value == pytest.approx(6.0, abs=1e-9)


class TestEigenSplit:
    def test_diagonal(self):
        split = eigen_split(np.diag([1.0, 0.0]), Disk(1.0, 0.5))
        assert split.inside.shape == (2, 1)
        assert abs(abs(split.inside[0, 0]) - 1.0) < 1e-12
        assert abs(abs(split.outside[1, 0]) - 1.0) < 1e-12

    def test_idempotent(self):
        p = np.array([[1.0, 0.0, 0.0], [0.5, 0.0, 0.5], [0.0, 0.0, 1.0]])
        split = eigen_split(p, Disk(1.0, 0.5))
        assert split.inside.shape[1] == 2
        # both returned bases are invariant under p
        for basis in (split.inside, split.outside):
            block = basis.T @ p @ basis
            assert np.linalg.norm(p @ basis - basis @ block) <= 1e-9

    def test_clustered_random(self):
        rng = np.random.default_rng(7)
        q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        a = q @ np.diag([1.0 + 1e-3, 1.0 - 1e-3, 1e-3, -1e-3]) @ q.T
        split = eigen_split(a, Disk(1.0, 0.5))
        assert split.inside.shape[1] == 2
        scale = np.linalg.norm(a)
        for basis in (split.inside, split.outside):
            block = basis.T @ a @ basis
            assert np.linalg.norm(a @ basis - basis @ block) <= 1e-9 * scale
        assert split.cond < 1e6

    def test_boundary_eigenvalue_rejected(self):
        with pytest.raises(DomainError, match="boundary"):
            eigen_split(np.diag([0.5, 0.0]), Disk(1.0, 0.5))

    def test_whole_and_empty_regions(self):
        a = np.diag([1.0, 2.0])
        everything = eigen_split(a, Disk(1.5, 10.0))
        assert everything.inside.shape == (2, 2)
        assert everything.outside.shape == (2, 0)
        nothing = eigen_split(a, Disk(50.0, 1.0))
        assert nothing.inside.shape == (2, 0)

    def test_predicate_region(self):
        split = eigen_split(np.diag([2.0, -1.0]), lambda z: z.real > 0)
        assert split.inside.shape[1] == 1

    def test_defective_matrix(self):
        # Jordan block at 1 plus an eigenvalue at 0
        a = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.2, 0.0]])
        split = eigen_split(a, Disk(1.0, 0.5))
        assert split.inside.shape[1] == 2
        block = np.linalg.lstsq(split.inside, a @ split.inside, rcond=None)[0]
        assert np.linalg.norm(a @ split.inside - split.inside @ block) < 1e-9


class TestExpm:
    def test_zero(self):
        assert np.allclose(expm(np.zeros((3, 3))), np.eye(3))

    def test_scalar_one(self):
        assert expm(np.array([[1.0]]))[0, 0] == pytest.approx(np.e, rel=1e-12)

    def test_nilpotent(self):
        n = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert np.allclose(expm(n), [[1.0, 1.0], [0.0, 1.0]], atol=1e-14)

    @pytest.mark.parametrize("trial", range(5))
    def test_inverse_identity(self, trial):
        rng = np.random.default_rng(40 + trial)
        a = rng.standard_normal((4, 4))
        a *= 5.0 / np.linalg.norm(a, 2)
        assert np.linalg.norm(expm(a) @ expm(-a) - np.eye(4)) < 1e-10


class TestSylvesterKron:
    def test_scalars(self):
        assert np.allclose(sylvester_kron_matrix([[2.0]], [[1.0]]), [[1.0]])

    def test_identity_times_zero(self):
        assert np.allclose(sylvester_kron_matrix(np.eye(2), [[0.0]]), np.eye(2))

    def test_diagonal(self):
        k = sylvester_kron_matrix(np.diag([3.0, 5.0]), [[2.0]])
        assert np.allclose(k, np.diag([1.0, 3.0]))

    def test_vectorization_identity(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((3, 3))
        b = rng.standard_normal((2, 2))
        x = rng.standard_normal((3, 2))
        k = sylvester_kron_matrix(a, b)
        lhs = (a @ x - x @ b).flatten(order="F")
        assert np.allclose(k @ x.flatten(order="F"), lhs, atol=1e-12)
