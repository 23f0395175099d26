import numpy as np
import pytest

from desira.desirability import DMax, DOverall, DTarget
from desira.errors import InvalidInputError, ShapeError
from desira.result import read_trace
from desira.rsm import fun_myer16a
from desira.surrogate import (
    SboConfig,
    aggregate_weighted,
    desirability_hook,
    desirability_mo2so,
    lhs_sample,
    pareto_mask,
    sbo_minimize,
    select_training_points,
    weighted_mo2so,
)

def overall():
    return DOverall(DMax(80, 97), DTarget(55, 57.5, 60))


def linear_first(X):
    return np.asarray(X)[:, :1]


class TestLhs:
    def test_strata_1d(self):
        x = lhs_sample(4, [(0, 1)], seed=0).ravel()
        assert sorted(np.floor(x * 4).astype(int)) == [0, 1, 2, 3]

    def test_strata_2d(self):
        X = lhs_sample(10, [(-2, 2), (0, 5)], seed=3)
        for j, (lo, hi) in enumerate([(-2, 2), (0, 5)]):
            strata = np.floor((X[:, j] - lo) / (hi - lo) * 10).astype(int)
            assert len(set(strata)) == 10

    def test_deterministic(self):
        np.testing.assert_array_equal(lhs_sample(5, [(0, 1)] * 3, seed=9), lhs_sample(5, [(0, 1)] * 3, seed=9))

    def test_bad_bounds(self):
        with pytest.raises(InvalidInputError):
            lhs_sample(3, [(1, 0)])


class TestAggregation:
    def test_weighted(self):
        np.testing.assert_allclose(aggregate_weighted([[1, 10]], [2.0, 0.1]), [3.0])

    def test_projection(self):
        Y = np.array([[1.0, 5.0], [2.0, 7.0]])
        np.testing.assert_array_equal(aggregate_weighted(Y, [1, 0]), Y[:, 0])
        np.testing.assert_array_equal(weighted_mo2so([1, 0])(Y), Y[:, 0])

    def test_empty(self):
        assert aggregate_weighted(np.empty((0, 2)), [1, 1]).shape == (0,)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            aggregate_weighted([[1, 2]], [1, 2, 3])

    def test_desirability(self):
        Y = [[81.09, 59.85], [95.10150375, 57.49999992]]
        np.testing.assert_allclose(desirability_mo2so(Y, overall()), [0.93797534, 0.05749073], atol=1e-6)

    def test_desirability_extremes(self):
        np.testing.assert_array_equal(desirability_mo2so([[97, 57.5], [70, 57.5]], overall()), [0.0, 1.0])

    def test_desirability_range(self):
        rng = np.random.default_rng(0)
        Y = np.column_stack([rng.uniform(60, 110, 500), rng.uniform(50, 65, 500)])
        v = desirability_hook(overall())(Y)
        assert np.all((v >= 0) & (v <= 1))

    def test_desirability_shape(self):
        with pytest.raises(ShapeError):
            desirability_mo2so([[1.0, 2.0, 3.0]], overall())


class TestTrainingSubset:
    def test_all_when_small(self):
        np.testing.assert_array_equal(select_training_points(np.array([3.0, 1.0, 2.0]), 5), [0, 1, 2])

    def test_keeps_best_and_newest(self):
        y = np.array([5.0, 1.0, 4.0, 0.5, 3.0, 9.0])
        idx = select_training_points(y, 3)
        assert 3 in idx and 1 in idx and 5 in idx
        assert len(idx) == 3


class TestPareto:
    def test_front(self):
        Y = np.array([[1, 1], [2, 0], [0, 2], [0.5, 0.5], [2, 2]])
        np.testing.assert_array_equal(pareto_mask(Y, ["max", "max"]), [False, False, False, False, True])
        np.testing.assert_array_equal(pareto_mask(Y, ["min", "min"]), [False, True, True, True, False])


class TestSbo:
    def test_linear_landscape(self):
        cfg = SboConfig(bounds=[(-1, 1)], seed=0, n_initial=5, max_iter=20, gp_restarts=2)
        r = sbo_minimize(linear_first, cfg)
        assert r.x_best[0] <= -1 + 0.02

    def test_pure_lhs(self):
        cfg = SboConfig(bounds=[(0, 1)] * 2, seed=1, n_initial=6, max_iter=6)
        r = sbo_minimize(lambda X: np.sum(X**2, axis=1), cfg)
        assert r.nfev == 6 and r.nit == 0
        assert r.f_best == r.y.min()

    def test_budget_and_best(self):
        cfg = SboConfig(bounds=[(-2, 2)] * 2, seed=4, n_initial=5, max_iter=12, gp_restarts=2)
        r = sbo_minimize(lambda X: np.sum((X - 0.3) ** 2, axis=1), cfg)
        assert len(r.y) == r.nfev == 12
        assert r.f_best == r.y.min()
        assert r.X.shape == (12, 2) and r.Y_mo.shape == (12, 1)

    def test_chemical_seed_126(self):
        cfg = SboConfig(bounds=[(-1.7, 1.7)] * 3, seed=126, n_initial=15, max_iter=50,
                        max_surrogate_points=30, mo2so=desirability_hook(overall()))
        r = sbo_minimize(fun_myer16a, cfg)
        assert r.f_best <= 0.10
        assert r.nfev == 50

    def test_deterministic_trace(self, tmp_path):
        cfg = SboConfig(bounds=[(-2, 2)] * 2, seed=11, n_initial=4, max_iter=9, gp_restarts=1)
        f = lambda X: np.column_stack([np.sum(X**2, axis=1), X[:, 0]])  # noqa: E731
        sbo_minimize(f, cfg).write_trace(tmp_path / "a.csv")
        sbo_minimize(f, cfg).write_trace(tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_trace_round_trip(self, tmp_path):
        cfg = SboConfig(bounds=[(-2, 2)] * 2, seed=2, n_initial=4, max_iter=7, gp_restarts=1)
        r = sbo_minimize(lambda X: np.sum(X**2, axis=1), cfg)
        r.write_trace(tmp_path / "t.csv")
        X, y, Y = read_trace(tmp_path / "t.csv")
        np.testing.assert_array_equal(X, r.X)
        np.testing.assert_array_equal(y, r.y)
        np.testing.assert_array_equal(Y, r.Y_mo)

    def test_failure_recorded_as_worst(self):
        def flaky(X):
            X = np.atleast_2d(X)
            if np.any(X[:, 0] > 0.5):
                raise RuntimeError("simulator crashed")
            return np.sum(X**2, axis=1)

        cfg = SboConfig(bounds=[(-1, 1)] * 2, seed=0, n_initial=8, max_iter=12, gp_restarts=1)
        r = sbo_minimize(flaky, cfg)
        failed = r.X[:, 0] > 0.5
        assert r.info["failed"] == failed.sum() > 0
        assert np.all(r.y[failed] >= r.y[~failed].min())

    def test_failure_raise(self):
        def broken(X):
            raise RuntimeError("nope")

        cfg = SboConfig(bounds=[(-1, 1)], seed=0, n_initial=3, max_iter=4, on_error="raise")
        with pytest.raises(RuntimeError):
            sbo_minimize(broken, cfg)

    def test_posterior_mean_infill(self):
        cfg = SboConfig(bounds=[(-1, 1)], seed=0, n_initial=4, max_iter=8, infill="posterior_mean", gp_restarts=1)
        r = sbo_minimize(lambda X: (X[:, 0] - 0.2) ** 2, cfg)
        assert r.f_best < 0.05

    @pytest.mark.parametrize(
        "kwargs",
        [dict(n_initial=1), dict(n_initial=5, max_iter=4), dict(infill="ucb"), dict(on_error="ignore")],
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(InvalidInputError):
            SboConfig(bounds=[(0, 1)], seed=0, **kwargs)
