import math
from fractions import Fraction

import numpy as np
import pytest

from fspec.constructions import (
    Lemma31Params,
    StageRefused,
    build_example,
    cantor_measure,
    exact_root,
    exact_stages,
    figure3_rows,
    grid_cells,
    lemma31_sets,
    stage_intervals,
    verify_projection_containment,
)
from fspec.measures import discretize, ft_eval
from fspec.spectrum import l2_dimension_self_similar

HALF = Fraction(1, 2)
THREE_QUARTERS = Fraction(3, 4)


class TestCantor:
    def test_maps(self):
        m = cantor_measure("1/3")
        assert m.ratio == pytest.approx(1 / 3)
        np.testing.assert_allclose(m.translations, [0, 2 / 3])
        np.testing.assert_allclose(m.weights, [0.5, 0.5])
        assert m.osc

    def test_support_and_mass(self):
        a = discretize(cantor_measure("1/4"), 10)
        assert a.mass() == pytest.approx(1.0, abs=1e-15)
        assert a.points.min() >= 0 and a.points.max() <= 1

    @pytest.mark.parametrize("alpha", ["1/3", "1/4", "1/5", "0.4"])
    def test_l2_dimension(self, alpha):
        a = float(Fraction(alpha))
        assert l2_dimension_self_similar(cantor_measure(alpha)) == pytest.approx(math.log(2) / -math.log(a))

    def test_rejects_bad_ratio(self):
        with pytest.raises(ValueError):
            cantor_measure("1/2")


class TestExample:
    def test_against_frozen(self, frozen):
        ex = build_example()
        assert abs(ex.dim_H - frozen["dim_H_example"]) <= 1e-12
        assert abs(ex.dim_S_conv - frozen["dim_S_conv_example"]) <= 1e-12
        assert ex.dim_H == pytest.approx(1.56160, abs=1e-5)

    def test_symmetric(self, frozen):
        ex = build_example("1/3", "1/3", "1/3")
        assert ex.dim_H == pytest.approx(frozen["dim_H_symmetric"], abs=1e-12)
        assert ex.dim_S_conv == pytest.approx(frozen["dim_S_conv_symmetric"], abs=1e-12)
        assert ex.dim_H == pytest.approx(1.8928, abs=1e-4) and ex.dim_S_conv == pytest.approx(2.6784, abs=1e-4)

    def test_measures(self):
        ex = build_example()
        z = np.array([[1.5, -2.0, 0.25], [40.0, 7.0, -3.0]])
        np.testing.assert_allclose(ft_eval(ex.conv, z), ft_eval(ex.conv_selfsimilar, z), atol=1e-8)
        for f in ex.conv_selfsimilar.factors:
            np.testing.assert_allclose(sorted(f.weights), [0.25, 0.25, 0.5])

    def test_profile(self):
        ex = build_example()
        assert ex.profile.sobolev_conv[2] == ex.dim_S_conv
        assert ex.profile.spectrum(0.5) == ex.spectrum_half

    def test_rejects_large_parameters(self):
        with pytest.raises(ValueError):
            build_example("0.4", "1/4", "1/5")

    def test_beats_trivial_lower_bound(self):
        grid = [Fraction(1, n) for n in range(3, 12)]
        for a in grid:
            for b in grid:
                ex = build_example(a, b, "1/3")
                assert ex.dim_S_conv / 2 > ex.dim_H / 2


class TestFigure3:
    ROWS = figure3_rows()

    def curve(self, k, method, rows=None):
        rows = self.ROWS if rows is None else rows
        pts = [(u, v) for kk, u, m, v in rows if kk == k and m == method]
        return np.array(pts).T

    def test_shape(self):
        assert len(self.ROWS) == 2 * 201 * 3

    def test_red_zero_set(self, frozen):
        for k in (1, 2):
            u, v = self.curve(k, "fourier_spectrum")
            assert np.all(v[u <= frozen["red_zero"] - 1e-12] == 0)
            assert np.all(v[u > frozen["red_zero"] + 1e-12] > 0)

    def test_green(self):
        u, v = self.curve(2, "mattila")
        np.testing.assert_array_equal(v, u)
        u, v = self.curve(1, "mattila")
        np.testing.assert_allclose(v, np.minimum(2, 1 + u))

    def test_blue(self, frozen):
        u, v = self.curve(2, "peres_schlag")
        assert v[0] == pytest.approx(2 - frozen["dim_H_example"], abs=1e-12)
        assert v[0] == pytest.approx(0.4384, abs=1e-4)

    def test_variant(self):
        fig = figure3_rows(ps_variant="figure")
        np.testing.assert_array_equal(self.curve(2, "peres_schlag", fig), self.curve(2, "peres_schlag"))
        u, v = self.curve(1, "peres_schlag", fig)
        np.testing.assert_allclose(v, np.clip(1 + u - build_example().dim_H, 0, 2))
        with pytest.raises(ValueError):
            figure3_rows(ps_variant="banana")


class TestLemma31:
    PARAMS = Lemma31Params(THREE_QUARTERS, HALF)

    def test_stage_cells_against_frozen(self, frozen):
        for h, e, key in [(8, HALF, "lemma_A_stage1_cells"), (64, HALF, "lemma_A_stage2_cells"),
                          (4096, Fraction(1, 4), "lemma_B_stage3_cells")]:
            ivs, _ = stage_intervals(h, e)
            assert grid_cells(ivs, h) == frozen[key]

    def test_counts(self):
        sets = lemma31_sets(self.PARAMS)
        assert sets["A"].covering_counts == (8, 24, 192)
        assert sets["A"].exact == (False, True, True)
        assert abs(sets["A"].slope - 0.5) <= 0.15

    def test_covering_constant(self):
        for s in lemma31_sets(self.PARAMS).values():
            for n, h in zip(s.covering_counts, self.PARAMS.eta):
                assert n <= 4 * h ** float(s.exponent)

    def test_cells_nested(self):
        sets = lemma31_sets(self.PARAMS)
        for s in sets.values():
            assert len(s.cells) == s.stage_counts[-1]
            assert all(b <= a * (h2 // h1) for a, b, h1, h2 in
                       zip(s.stage_counts, s.stage_counts[1:], self.PARAMS.eta, self.PARAMS.eta[1:]))

    def test_exponent_zero(self):
        b = lemma31_sets(Lemma31Params(HALF, HALF))["B"]
        assert b.exponent == 0 and b.cells == (0, 1, 4095)

    def test_validation(self):
        with pytest.raises(ValueError):
            Lemma31Params(THREE_QUARTERS, Fraction(1, 4))
        with pytest.raises(ValueError):
            Lemma31Params(THREE_QUARTERS, HALF, eta=(8, 4))
        with pytest.warns(UserWarning):
            Lemma31Params(THREE_QUARTERS, HALF, eta=(8, 16, 200))

    def test_exact_root(self):
        assert exact_root(4096, Fraction(1, 4)) == 8
        assert exact_root(64, HALF) == 8
        assert exact_root(8, HALF) is None


class TestContainment:
    def test_exact_stages_hold(self):
        p = Lemma31Params(THREE_QUARTERS, HALF)
        stages = exact_stages(p)
        assert stages == [3]
        for m in stages:
            c = verify_projection_containment(p, m)
            assert c.ok and c.checked > 0 and not c.counterexamples

    def test_small_perfect_power(self):
        c = verify_projection_containment(Lemma31Params(THREE_QUARTERS, HALF, eta=(16,), stages=1), 1)
        assert c.ok and c.checked == 5 * 3 * 3

    def test_perturbed_slope_fails(self):
        c = verify_projection_containment(Lemma31Params(THREE_QUARTERS, HALF, eta=(16,), stages=1), 1,
                                          extra_slopes=["1/3"])
        assert not c.ok
        x, y, slope = c.counterexamples[0]
        assert slope == Fraction(1, 3) and y != 0

    def test_refused(self):
        with pytest.raises(StageRefused):
            verify_projection_containment(Lemma31Params(THREE_QUARTERS, HALF), 1)
