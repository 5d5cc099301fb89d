import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus
from fspec.constructions import cantor_measure
from fspec.measures import (
    AffineImage,
    AtomicMeasure,
    ConvPower,
    LevelOverflowError,
    Mixture,
    Product,
    SelfSimilarMeasure1D,
    TruncationError,
    convolve_selfsimilar,
    dirac,
    discretize,
    dumps_measure,
    from_dict,
    ft_eval,
    lebesgue_unit,
    mass,
)

CANTOR = cantor_measure("1/3")
TOL = 1e-9


def direct_ft(atoms: AtomicMeasure, z):
    z = np.atleast_2d(np.asarray(z, float))
    if atoms.dim == 1 and z.shape[0] == 1 and z.shape[1] != 1:
        z = z.T
    return np.exp(-2j * np.pi * z @ atoms.points.T) @ atoms.weights


class TestFourierTransform:
    def test_total_mass_at_origin(self):
        assert ft_eval(CANTOR, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_lebesgue_half(self):
        assert abs(ft_eval(lebesgue_unit(), 0.5)) == pytest.approx(2 / np.pi, abs=1e-9)

    @pytest.mark.parametrize("name", ["cantor_ft", "lebesgue_ft"])
    def test_against_frozen_product(self, frozen, name):
        mu = CANTOR if name == "cantor_ft" else lebesgue_unit()
        for x, (re, im) in frozen[name].items():
            assert ft_eval(mu, float(x), TOL) == pytest.approx(complex(re, im), abs=2 * TOL)

    def test_triadic_frequencies_repeat(self):
        ref = ft_eval(CANTOR, 1.0)
        vals = ft_eval(CANTOR, 3.0 ** np.arange(7))
        np.testing.assert_allclose(vals, ref, atol=1e-9)

    def test_dirac(self):
        vals = ft_eval(dirac(0.0), np.linspace(-50, 50, 11))
        np.testing.assert_allclose(vals, 1.0)

    def test_array_shapes(self):
        assert ft_eval(CANTOR, np.zeros((3, 4))).shape == (3, 4)
        p = Product((CANTOR, CANTOR))
        assert ft_eval(p, np.zeros((5, 2))).shape == (5,)
        assert np.ndim(ft_eval(p, [1.0, 2.0])) == 0

    def test_product_factorizes(self):
        p = Product((CANTOR, lebesgue_unit()))
        z = np.array([[2.5, -0.7], [13.0, 4.25]])
        expect = ft_eval(CANTOR, z[:, 0]) * ft_eval(lebesgue_unit(), z[:, 1])
        np.testing.assert_allclose(ft_eval(p, z, 1e-10), expect, atol=3e-10)

    def test_mixture_and_affine(self):
        m = Mixture((dirac(0.0), CANTOR), ["1/2", "1/2"])
        xi = np.array([0.3, 4.0, 17.0])
        np.testing.assert_allclose(ft_eval(m, xi), 0.5 + 0.5 * ft_eval(CANTOR, xi), atol=1e-9)
        a = AffineImage(CANTOR, 2.0, 1.0)
        np.testing.assert_allclose(ft_eval(a, xi), np.exp(-2j * np.pi * xi) * ft_eval(CANTOR, 2 * xi), atol=1e-9)

    def test_convpower_is_exact_power(self):
        xi = np.linspace(-40, 40, 33)
        base = ft_eval(CANTOR, xi, 1e-9 / 3)
        np.testing.assert_allclose(ft_eval(ConvPower(CANTOR, 3), xi), base ** 3, rtol=0, atol=1e-15)

    def test_convolution_as_selfsimilar(self):
        conv = convolve_selfsimilar(CANTOR, 2)
        np.testing.assert_allclose(sorted(conv.weights), [0.25, 0.25, 0.5])
        xi = np.linspace(0, 300, 41)
        np.testing.assert_allclose(ft_eval(conv, xi), ft_eval(ConvPower(CANTOR, 2), xi), atol=3e-9)

    def test_discretized_oracle(self):
        xi = np.array([0.25, 1.5, 6.0, 20.0])
        atoms = discretize(CANTOR, 14)
        # left endpoints sit within 3^-14 of every point of their cylinder
        bound = 2 * np.pi * np.abs(xi) * 3.0 ** -14
        assert np.all(np.abs(ft_eval(CANTOR, xi) - direct_ft(atoms, xi)) <= bound + 2 * TOL)

    def test_truncation_error_raised(self):
        with pytest.raises(TruncationError):
            ft_eval(SelfSimilarMeasure1D(0.999, [0, 0.001], [0.5, 0.5]), 1e300, 1e-9)

    def test_bad_input(self):
        with pytest.raises(ValueError):
            ft_eval(CANTOR, np.nan)
        with pytest.raises(ValueError):
            ft_eval(CANTOR, 1.0, tail_tol=0.1)
        with pytest.raises(ValueError):
            ft_eval(Product((CANTOR, CANTOR)), np.zeros((2, 3)))


class TestConstruction:
    def test_validation(self):
        with pytest.raises(ValueError):
            SelfSimilarMeasure1D(1.0, [0, 1], [0.5, 0.5])
        with pytest.raises(ValueError):
            SelfSimilarMeasure1D(0.5, [0, 0], [0.5, 0.5])
        with pytest.raises(ValueError):
            SelfSimilarMeasure1D(0.5, [0, 0.5], [0.5, 0.4])

    def test_fraction_strings(self):
        m = SelfSimilarMeasure1D("1/3", ["0", "2/3"], ["1/2", "1/2"])
        assert m.ratio == 1 / 3 and m.translations[1] == 2 / 3

    def test_osc_detection(self):
        assert CANTOR.osc
        assert lebesgue_unit().osc
        assert not SelfSimilarMeasure1D(0.6, [0, 0.4], [0.5, 0.5]).osc

    def test_normalization(self):
        assert AtomicMeasure([[0.0], [1.0]], [2.0, 2.0]).weights.tolist() == [0.5, 0.5]
        with pytest.raises(ValueError):
            AtomicMeasure([[0.0], [1.0]], [0.8, 0.8], sub_probability=True)


class TestDiscretize:
    def test_level_one(self):
        a = discretize(CANTOR, 1)
        np.testing.assert_allclose(a.points.ravel(), [0, 2 / 3])
        np.testing.assert_allclose(a.weights, [0.5, 0.5])

    def test_level_ten(self):
        a = discretize(CANTOR, 10)
        assert a.weights.size == 1024
        assert np.all(a.weights == 2.0 ** -10)
        assert a.points.min() >= 0 and a.points.max() <= 1

    def test_product(self):
        a = discretize(Product((CANTOR, CANTOR)), 3)
        assert a.weights.size == 64 and np.allclose(a.weights, 1 / 64) and a.dim == 2

    def test_mass_preserved(self):
        for name, m in corpus().items():
            assert discretize(m, 3).mass() == pytest.approx(m.mass(), abs=1e-12), name

    def test_overflow(self):
        with pytest.raises(LevelOverflowError):
            discretize(CANTOR, 40)


class TestMass:
    def test_examples(self):
        assert mass(CANTOR) == 1
        assert mass(Mixture((dirac(0.0), CANTOR), [0.5, 0.5])) == pytest.approx(1.0)
        assert mass(AtomicMeasure([[0.0], [1.0]], [0.25, 0.25], sub_probability=True)) == 0.5

    def test_equals_ft_at_zero(self):
        for name, m in corpus().items():
            assert abs(ft_eval(m, np.zeros(m.dim)) - mass(m)) <= 1e-12, name


class TestJson:
    def test_round_trip(self):
        for name, m in corpus().items():
            back = from_dict(json.loads(dumps_measure(m)))
            z = np.linspace(-7, 7, 9) if m.dim == 1 else np.column_stack([np.linspace(-7, 7, 9)] * m.dim)
            np.testing.assert_allclose(ft_eval(back, z), ft_eval(m, z), atol=1e-12, err_msg=name)

    def test_documented_format(self):
        m = from_dict({"type": "convpower", "n": 2, "base": {
            "type": "selfsimilar1d", "ratio": 0.3333333333, "translations": [0, 0.6666666667],
            "weights": [0.5, 0.5]}})
        assert isinstance(m, ConvPower) and m.base.ratio == pytest.approx(1 / 3)

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            from_dict({"type": "banana"})


# ----------------------------------------------------------------------------
# properties over the built-in corpus
# ----------------------------------------------------------------------------

CORPUS = corpus()
freq = st.floats(-1e4, 1e4, allow_nan=False)


def _point(m, x, y):
    return np.array([x]) if m.dim == 1 else np.array([x, y])


@pytest.mark.criterion(10)
@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(sorted(CORPUS)), x=freq, y=freq)
def test_modulus_bounded_by_mass(name, x, y):
    m = CORPUS[name]
    assert abs(ft_eval(m, _point(m, x, y))) <= m.mass() + 2e-9


@pytest.mark.criterion(10)
@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(sorted(CORPUS)), x=freq, y=freq)
def test_conjugate_symmetry(name, x, y):
    m = CORPUS[name]
    z = _point(m, x, y)
    assert ft_eval(m, -z) == pytest.approx(np.conj(ft_eval(m, z)), abs=4e-9)


@pytest.mark.criterion(10)
@settings(max_examples=60, deadline=None)
@given(xi=st.floats(-1e5, 1e5, allow_nan=False), which=st.sampled_from(["1/3", "1/4", "2/5"]))
def test_refinement_identity(xi, which):
    m = cantor_measure(which)
    lhs = ft_eval(m, xi, TOL)
    rhs = m.generator(xi) * ft_eval(m, m.ratio * xi, TOL)
    assert abs(lhs - rhs) <= 2 * TOL


@pytest.mark.criterion(10)
@settings(max_examples=40, deadline=None)
@given(x=freq, y=freq)
def test_product_law_against_discretization(x, y):
    p = Product((CANTOR, cantor_measure("1/4")))
    z = np.array([x, y]) / 100.0
    atoms = discretize(p, 8)
    bound = 2 * np.pi * (abs(z[0]) * 3.0 ** -8 + abs(z[1]) * 4.0 ** -8)
    assert abs(ft_eval(p, z, TOL) - direct_ft(atoms, z[None, :])[0]) <= 2 * TOL + bound


@pytest.mark.criterion(10)
@settings(max_examples=40, deadline=None)
@given(xi=freq, n=st.integers(1, 4))
def test_convolution_law(xi, n):
    assert ft_eval(ConvPower(CANTOR, n), xi) == pytest.approx(ft_eval(CANTOR, xi, TOL / n) ** n, abs=1e-15)


def test_depth_bound_is_rigorous():
    # doubling the depth must not move the value by more than the tolerance
    xi = np.geomspace(1, 1e6, 40)
    d = CANTOR.truncation_depth(xi, 1e-6)
    from fspec import _kernels
    a = _kernels.selfsimilar_ft(xi, CANTOR.ratio, CANTOR.translations, CANTOR.weights, d)
    b = _kernels.selfsimilar_ft(xi, CANTOR.ratio, CANTOR.translations, CANTOR.weights, 2 * d + 5)
    assert np.max(np.abs(a - b)) <= 1e-6
    assert math.isfinite(float(d.max()))
