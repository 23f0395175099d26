import numpy as np
import pytest

from desira.errors import ConfigError, InvalidInputError, ShapeError
from desira.rsm import (
    QuadraticModel,
    activity_pred,
    chemical_grid_functions,
    conversion_pred,
    fun_myer16a,
    generate_ccd,
    generate_plot_grid,
    load_builtin_model,
)

BEST_X = [-0.51207663, 1.68199987, -0.58609664]


class TestPredictions:
    def test_center(self):
        assert conversion_pred([0, 0, 0]) == 81.09
        assert activity_pred([0, 0, 0]) == 59.85

    def test_best_point(self):
        # x is printed to 8 digits, which limits agreement with the 16-digit outputs
        assert conversion_pred(BEST_X) == pytest.approx(95.10150374903237, abs=1e-6)
        assert activity_pred(BEST_X) == pytest.approx(57.49999992427212, abs=1e-6)

    def test_unit_x1(self):
        # signed quadratic coefficient for x1 is -1.8366
        assert conversion_pred([1, 0, 0]) == pytest.approx(81.09 + 1.0284 - 1.8366, abs=1e-12)

    def test_unit_x2_activity(self):
        assert activity_pred([0, 1, 0]) == pytest.approx(60.17944, abs=1e-12)

    def test_wrong_dimension(self):
        with pytest.raises(ShapeError):
            conversion_pred([0, 0])

    def test_vectorized(self):
        Y = fun_myer16a([[0, 0, 0], BEST_X])
        np.testing.assert_allclose(Y, [[81.09, 59.85], [95.10150375, 57.49999992]], atol=1e-6)
        assert fun_myer16a(np.empty((0, 3))).shape == (0, 2)
        with pytest.raises(ShapeError):
            fun_myer16a([[0, 0]])


class TestQuadraticModel:
    def test_matches_hand_coded(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1.7, 1.7, size=(1000, 3))
        conv = load_builtin_model("conversion")(X)
        act = load_builtin_model("activity")(X)
        np.testing.assert_allclose(conv, [conversion_pred(x) for x in X], rtol=0, atol=1e-12)
        np.testing.assert_allclose(act, [activity_pred(x) for x in X], rtol=0, atol=1e-12)

    def test_csv_round_trip(self, tmp_path):
        m = load_builtin_model("conversion")
        m.to_csv(tmp_path / "m.csv")
        m2 = QuadraticModel.from_csv(tmp_path / "m.csv")
        X = np.random.default_rng(1).normal(size=(20, 3))
        np.testing.assert_array_equal(m(X), m2(X))

    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            load_builtin_model("yield")

    def test_bad_interaction(self):
        with pytest.raises(ShapeError):
            QuadraticModel(0.0, [1.0], [1.0], {(0, 1): 2.0})


class TestCCD:
    def test_k3(self):
        ccd = generate_ccd(3)
        assert ccd.points.shape == (15, 3)
        assert ccd.alpha == pytest.approx(8**0.25)
        assert round(ccd.alpha, 3) == 1.682

    def test_k1(self):
        ccd = generate_ccd(1)
        np.testing.assert_allclose(sorted(ccd.points[:, 0]), sorted([-1, 1, 0, -ccd.alpha, ccd.alpha]))

    def test_spherical_k2(self):
        ccd = generate_ccd(2, alpha=np.sqrt(2))
        axial = ccd.points[-4:]
        np.testing.assert_allclose(axial, [[-np.sqrt(2), 0], [np.sqrt(2), 0], [0, -np.sqrt(2)], [0, np.sqrt(2)]])

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_invariants(self, k):
        ccd = generate_ccd(k)
        P = ccd.points
        nf = ccd.n_factorial
        assert np.all(np.isin(P[:nf], [-1.0, 1.0]))
        assert np.sum(np.all(P == 0, axis=1)) == 1
        axial = P[nf + 1 :]
        assert axial.shape[0] == 2 * k
        assert np.all(np.count_nonzero(axial, axis=1) == 1)
        np.testing.assert_allclose(np.abs(axial[axial != 0]), ccd.alpha)
        np.testing.assert_allclose(np.linalg.norm(axial, axis=1), ccd.alpha)

    def test_center_replicates(self):
        assert generate_ccd(2, n_center=3).points.shape == (11, 2)

    def test_invalid_k(self):
        with pytest.raises(InvalidInputError):
            generate_ccd(0)


class TestPlotGrid:
    def test_product_count(self):
        t = generate_plot_grid({"a": (0, 1), "b": (0, 1)}, {"a": 3, "b": 3}, {"s": lambda a, b: a + b})
        assert t.shape == (9, 3)
        assert list(t["b"][:3]) == [0.0, 0.5, 1.0]

    def test_facets(self):
        t = generate_plot_grid(
            {"time": (-1.7, 1.7), "catalyst": (-1.7, 1.7)},
            {"time": 7, "catalyst": 5},
            chemical_grid_functions(),
            facet_levels={"temperature": [-1, 0, 1, 1.5]},
        )
        assert len(t) == 7 * 5 * 4
        assert set(t["temperature"]) == {-1, 0, 1, 1.5}
        row = t.iloc[10]
        assert row["conversionPred"] == pytest.approx(conversion_pred([row["time"], row["temperature"], row["catalyst"]]))

    def test_constant_function(self):
        t = generate_plot_grid({"a": (0, 1)}, {"a": 4}, {"c": lambda: 7.0})
        assert (t["c"] == 7.0).all()

    def test_unknown_variable(self):
        with pytest.raises(ConfigError):
            generate_plot_grid({"a": (0, 1)}, {"a": 4}, {"c": lambda z: z})
