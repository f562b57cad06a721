import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import convolution as naive_convolution, evaluate as naive_evaluate
from torus_killing.field import (
    FourierField, ParityError, convolve, diff_ops, random_real_field, spectrum_analysis,
)
from torus_killing.lattice import HONEYCOMB, DualLattice

SQUARE = DualLattice(np.eye(2))


def cos_x(eps=1.0, zero=1.0):
    return FourierField.from_dict(SQUARE, {(0, 0): zero, (1, 0): eps / 2})


def random_dual(rng):
    return DualLattice(np.array([[1.0, rng.uniform(0, 1)], [0.0, rng.uniform(0.5, 1.5)]]))


def test_cos_x_values():
    f = cos_x()
    assert f.evaluate(0.0, 0.0) == pytest.approx(2.0)
    assert f.evaluate(math.pi, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_honeycomb_value_at_origin():
    dual = HONEYCOMB.dual()
    mapping = {(0, 0): 1.0}
    for n in ((1, 0), HONEYCOMB.p, HONEYCOMB.q):
        mapping[n] = 0.1
    f = FourierField.from_dict(dual, mapping)
    assert f.evaluate(0.0, 0.0) == pytest.approx(1.6)
    assert spectrum_analysis(f).size == 6
    assert spectrum_analysis(f).one_dimensional is None


def test_parity_is_enforced():
    c = np.zeros((3, 3), complex)
    c[2, 1] = 1.0
    with pytest.raises(ParityError):
        FourierField(SQUARE, c)
    # the complex variant is exempt
    FourierField(SQUARE, c, real=False)
    with pytest.raises(ParityError):
        FourierField.from_dict(SQUARE, {(1, 0): 1.0, (-1, 0): 2.0})


def test_inverse_laplacian_of_cosine():
    f = FourierField.from_dict(SQUARE, {(1, 0): 0.5})
    g = diff_ops(f, "inverse_laplacian")
    assert np.allclose(g.coeffs, -f.coeffs, atol=1e-16)
    assert diff_ops(FourierField.constant(SQUARE, 3.0), "inverse_laplacian").zero_mode == 0


def test_dz_of_plane_wave():
    f = FourierField.from_dict(SQUARE, {(1, 0): 1.0}, real=False)
    assert diff_ops(f, "dz")[1, 0] == pytest.approx(0.5j)
    assert not diff_ops(cos_x(), "dz").real


def test_unknown_operator():
    with pytest.raises(ValueError):
        diff_ops(cos_x(), "curl")


def test_square_of_one_plus_cos():
    f = cos_x()
    g = convolve(f, f)
    assert g.to_dict() == pytest.approx({(0, 0): 1.5, (1, 0): 1, (-1, 0): 1, (2, 0): 0.25, (-2, 0): 0.25})


def test_product_with_one_is_identity():
    rng = np.random.default_rng(0)
    f = random_real_field(SQUARE, 3, rng)
    g = convolve(f, FourierField.constant(SQUARE, 1.0))
    assert np.array_equal(g.coeffs, f.coeffs)


def test_cos_x_times_cos_y():
    g = convolve(FourierField.from_dict(SQUARE, {(1, 0): 0.5}), FourierField.from_dict(SQUARE, {(0, 1): 0.5}))
    assert g.to_dict() == pytest.approx({(1, 1): 0.25, (-1, -1): 0.25, (1, -1): 0.25, (-1, 1): 0.25})


def test_spectrum_examples():
    sp = spectrum_analysis(cos_x())
    assert sorted(map(tuple, sp.nodes)) == [(-1, 0), (1, 0)]
    assert np.allclose(sp.one_dimensional, (1, 0))
    f = FourierField.from_dict(SQUARE, {(0, 0): 1, (1, 0): 0.5, (0, 1): 0.5})
    sp = spectrum_analysis(f)
    assert sp.size == 4 and sp.one_dimensional is None
    assert sp.decay_sum == pytest.approx(2.0)


def test_spectrum_zero_test_is_exact():
    f = FourierField.from_dict(SQUARE, {(0, 0): 1, (1, 0): 0.5, (0, 1): 1e-300})
    assert spectrum_analysis(f).one_dimensional is None


def test_matches_naive_evaluation_and_convolution():
    rng = np.random.default_rng(5)
    dual = random_dual(rng)
    f = random_real_field(dual, 2, rng)
    g = random_real_field(dual, 3, rng)
    for _ in range(5):
        x, y = rng.uniform(-4, 4, 2)
        assert f.evaluate(x, y) == pytest.approx(naive_evaluate(f.to_dict(), dual.basis, x, y).real, abs=1e-12)
    want = naive_convolution(f.to_dict(), g.to_dict())
    got = convolve(f, g)
    for n, v in want.items():
        assert abs(got[n] - v) < 1e-12


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_evaluation_is_real(seed):
    rng = np.random.default_rng(seed)
    f = random_real_field(random_dual(rng), 3, rng)
    x, y = rng.uniform(-10, 10, (2, 100))
    val = f.evaluate_complex(x, y)
    assert np.max(np.abs(val.imag)) <= 1e-10 * np.sum(np.abs(f.coeffs))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_laplacian_inverts_on_zero_mean(seed):
    rng = np.random.default_rng(seed)
    f = random_real_field(random_dual(rng), 3, rng, zero_mode=0.0)
    back = diff_ops(diff_ops(f, "inverse_laplacian"), "laplacian")
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-15 * np.max(np.abs(f.coeffs)) * 4


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_dz_dzbar_is_quarter_laplacian(seed):
    rng = np.random.default_rng(seed)
    f = random_real_field(random_dual(rng), 3, rng)
    lhs = diff_ops(diff_ops(f, "dzbar"), "dz").coeffs
    rhs = 0.25 * diff_ops(f, "laplacian").coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_convolution_algebra(seed):
    rng = np.random.default_rng(seed)
    dual = random_dual(rng)
    f, g, h = (random_real_field(dual, int(rng.integers(1, 4)), rng) for _ in range(3))
    fg, gf = convolve(f, g), convolve(g, f)
    scale = np.max(np.abs(fg.coeffs))
    assert np.max(np.abs(fg.coeffs - gf.coeffs)) <= 1e-12 * scale
    left, right = convolve(fg, h), convolve(f, convolve(g, h))
    assert left.N == right.N == f.N + g.N + h.N
    assert np.max(np.abs(left.coeffs - right.coeffs)) <= 1e-12 * np.max(np.abs(left.coeffs))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_convolution_is_pointwise_product(seed):
    rng = np.random.default_rng(seed)
    dual = random_dual(rng)
    f, g = random_real_field(dual, 2, rng), random_real_field(dual, 3, rng)
    fg = convolve(f, g)
    x, y = rng.uniform(-5, 5, (2, 20))
    prod = f.evaluate(x, y) * g.evaluate(x, y)
    assert np.max(np.abs(fg.evaluate(x, y) - prod)) <= 1e-10 * max(1.0, np.max(np.abs(prod)))


def test_padding_round_trip():
    f = cos_x()
    assert np.array_equal(f.padded(4).padded(1).coeffs, f.coeffs)
    with pytest.raises(ValueError):
        f.padded(4).padded(0)


def test_sample_grid_covers_cell():
    X, Y, vals = cos_x(0.3).sample_grid(8)
    assert X.shape == (8, 8)
    assert X.max() < 2 * math.pi and vals.min() > 0
