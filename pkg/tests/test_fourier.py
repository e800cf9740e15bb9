import numpy as np
import pytest

from kamtori.errors import SpectralError, TailError
from kamtori.fourier import (FourierSeries, grid_points, product_average,
                             verify_hadamard, verify_hadamard_mixed)

from conftest import random_zero_average


def test_harmonic_eval():
    f = FourierSeries.harmonic(2, 8, (3, -2), 1.0)
    theta = np.array([0.3, 1.1])
    expected = np.cos(3 * theta[0] - 2 * theta[1])
    assert abs(f.eval(theta[None, :])[0] - expected) < 1e-14


def test_multiply_matches_pointwise(rng):
    f = FourierSeries.random(2, 6, rng).hermitized()
    g = FourierSeries.random(2, 6, rng).hermitized()
    h = f.multiply(g, order=12)
    pts = rng.uniform(0.0, 2.0 * np.pi, size=(40, 2))
    err = np.max(np.abs(h.eval(pts) - f.eval(pts) * g.eval(pts)))
    assert err < 1e-12


def test_derivative_matches_finite_difference(rng):
    f = FourierSeries.random(2, 5, rng).hermitized()
    df = f.partial_derivative(0)
    theta = np.array([[0.7, 2.1]])
    h = 1e-6
    up = f.eval(theta + np.array([h, 0.0]))
    dn = f.eval(theta - np.array([h, 0.0]))
    assert abs(df.eval(theta)[0] - (up - dn)[0] / (2 * h)) < 1e-7


def test_lie_derivative_kills_average(rng):
    alpha = np.array([1.0, np.sqrt(2.0)])
    f = FourierSeries.random(2, 6, rng).hermitized()
    g = f.lie_derivative(alpha)
    assert abs(g.average()) < 1e-14


def test_majorant_norm_monotone_and_dominates_sup(rng):
    f = FourierSeries.random(2, 8, rng, decay=0.6).hermitized()
    n0 = f.majorant_norm(0.0)
    n1 = f.majorant_norm(0.2)
    assert n0 <= n1
    pts = rng.uniform(0.0, 2.0 * np.pi, size=(200, 2))
    assert np.max(np.abs(f.eval(pts))) <= n0 * (1 + 1e-12)


def test_grid_round_trip(rng):
    f = FourierSeries.random(2, 10, rng).hermitized()
    vals = f.to_grid(32)
    g = FourierSeries.from_grid(vals, 10, real_flag=True)
    assert (f - g).majorant_norm(0.0) < 1e-13 * f.majorant_norm(0.0)


def test_from_grid_tail_error(rng):
    # order-10 content truncated to order 2 must trip the tail check
    f = FourierSeries.harmonic(1, 10, (10,), 1.0).hermitized()
    vals = f.to_grid(32)
    with pytest.raises(TailError):
        FourierSeries.from_grid(vals, 2, real_flag=True, tail_tol=1e-10)


def test_hermitized_is_real(rng):
    f = FourierSeries.random(2, 5, rng)
    g = f.hermitized()
    assert g.reality_defect() < 1e-15
    pts = rng.uniform(0.0, 2.0 * np.pi, size=(10, 2))
    assert np.max(np.abs(g.eval(pts).imag)) < 1e-13


def test_product_average_oracle(rng):
    f = FourierSeries.random(2, 6, rng).hermitized()
    g = FourierSeries.random(2, 6, rng).hermitized()
    exact = product_average(f, g)
    m = 64
    pts = grid_points(m, 2)
    quad = np.mean(f.eval(pts) * g.eval(pts))
    assert abs(exact - quad) < 1e-12


def test_hadamard_single_and_mixed(rng):
    from conftest import random_jet
    f = FourierSeries.random(2, 8, rng, decay=0.5).hermitized()
    rep = verify_hadamard(f, 0.2, 0.1)
    assert rep.ok
    jet = random_jet(2, 4, 2, rng)
    s0, s1, t0 = 0.1, 0.4, 0.05
    t1 = t0 * np.exp(s1 - s0)
    rep2 = verify_hadamard_mixed(jet, s0, s1, t0, t1, 0.5)
    assert rep2.ok


def test_zero_average_helper(rng):
    f = random_zero_average(2, 6, rng)
    assert abs(f.average()) < 1e-15


def test_strip_width_validation(rng):
    f = FourierSeries.random(1, 4, rng)
    with pytest.raises(SpectralError):
        f.majorant_norm(-0.1)
