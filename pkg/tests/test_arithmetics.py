import numpy as np
import pytest

from kamtori.arithmetics import (ApproximationFunction, FrequencyVector,
                                 check_convergence_criterion,
                                 cohomological_bound, diophantine_constant,
                                 generalized_cohomological_bound,
                                 is_in_generalized_class, laplace_transform,
                                 solve_cohomological)
from kamtori.errors import DivergenceError, ResonanceError, SpectralError
from kamtori.fourier import FourierSeries

from conftest import GOLDEN, random_zero_average


def test_golden_ratio_constant():
    rep = diophantine_constant(GOLDEN, 2.0, 50)
    assert not rep.resonant
    assert rep.gamma > 0.5
    # stability under doubling the search box
    assert abs(rep.stability_ratio - 1.0) < 0.5


def test_resonant_vector_flagged():
    rep = diophantine_constant(np.array([1.0, 0.5]), 2.0, 20)
    assert rep.resonant
    with pytest.raises(ResonanceError):
        FrequencyVector.certify(np.array([1.0, 0.5]), 2.0, 20)


def test_certify_golden():
    freq = FrequencyVector.certify(GOLDEN, 2.0, 50)
    assert freq.gamma > 0.0
    assert freq.tau == 2.0


def test_cohomological_single_harmonic():
    # L_alpha f = g for g = cos(k.theta): f = sin(k.theta)/(k.alpha)
    k = (1, -1)
    g = FourierSeries.harmonic(2, 8, k, 1.0)
    f = solve_cohomological(g, GOLDEN)
    divisor = k[0] * GOLDEN[0] + k[1] * GOLDEN[1]
    theta = np.array([[0.4, 1.7]])
    expected = np.sin(k[0] * theta[0, 0] + k[1] * theta[0, 1]) / divisor
    assert abs(f.eval(theta)[0] - expected) < 1e-13


def test_cohomological_rejects_nonzero_average():
    g = FourierSeries.constant(2, 4, 1.0)
    with pytest.raises(SpectralError):
        solve_cohomological(g, GOLDEN)


def test_cohomological_bound_formula():
    # n = 1: C0 = 4 e Gamma(tau + 1) / 0! ; check against a direct value
    from scipy.special import gamma as gamma_fn
    tau, gam, sigma = 1.5, 0.7, 0.2
    expected = (4.0 * np.e * gamma_fn(tau + 1.0)) / gam * sigma ** (-tau - 1)
    assert abs(cohomological_bound(1, tau, gam, sigma) - expected) < 1e-12


def test_laplace_constant_closed_form():
    one = ApproximationFunction.one()
    for sigma in (0.3, 0.5, 1.0):
        lv = laplace_transform(one, sigma)
        exact = 1.0 / (np.exp(sigma) - 1.0)
        assert abs(lv.value - exact) <= 1e-12 * exact + lv.tail_bound
        assert lv.certified


def test_laplace_divergence():
    bad = ApproximationFunction(func=lambda ell: np.exp(ell), name="exp")
    with pytest.raises(DivergenceError):
        laplace_transform(bad, 0.5)


def test_generalized_bound_reduces_to_laplace():
    one = ApproximationFunction.one()
    n, sigma = 2, 0.4
    val = generalized_cohomological_bound(one, n, sigma)
    lv = laplace_transform(one, sigma)
    expected = 2.0 ** n * np.e / 1.0 * lv.value
    assert abs(val - expected) <= 1e-10 * expected + lv.tail_bound


def test_is_in_generalized_class_golden():
    rep = diophantine_constant(GOLDEN, 2.0, 50)
    delta = ApproximationFunction.diophantine(rep.gamma, 2.0, 2)
    assert is_in_generalized_class(GOLDEN, delta, k_max=30)


def test_criterion_diophantine_passes():
    delta = ApproximationFunction.diophantine(1.0, 2.0, 2)
    rep = check_convergence_criterion(delta, 10.0, 0.5, 12)
    assert rep.all_passed
    sums = rep.partial_sums
    assert all(b >= a for a, b in zip(sums, sums[1:]))


def test_criterion_exponential_fails():
    bad = ApproximationFunction(func=lambda ell: np.exp(ell), name="exp")
    rep = check_convergence_criterion(bad, 10.0, 0.5, 5)
    assert not rep.all_passed


def test_random_round_trip(rng):
    g = random_zero_average(2, 16, rng)
    f = solve_cohomological(g, GOLDEN)
    resid = (f.lie_derivative(GOLDEN) - g).majorant_norm(0.0)
    assert resid < 1e-12 * g.majorant_norm(0.0)
