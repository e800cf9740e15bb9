import numpy as np
import pytest

from kamtori.errors import SpectralError
from kamtori.fourier import FourierSeries
from kamtori.jets import ActionJet, multi_indices

from conftest import random_jet


def test_multi_indices_count():
    idx = multi_indices(2, 3)
    assert len(idx) == 10
    assert (0, 0) in idx and (3, 0) in idx and (1, 2) in idx


def test_normal_form_structure():
    alpha = np.array([1.0, 2.0])
    q = np.array([[0.5, 0.1], [0.1, 0.3]])
    k = ActionJet.normal_form(2, 4, 2, 1.5, alpha, q)
    assert abs(k.constant_part().average() - 1.5) < 1e-15
    lin = k.linear_part()
    assert np.allclose([f.average().real for f in lin], alpha)
    hess = np.array([[f.average().real for f in row]
                     for row in k.hessian_half()])
    assert np.allclose(hess, q)


def test_hessian_symmetry(rng):
    q = np.array([[0.5, 0.1], [0.1, 0.3]])
    k = ActionJet.normal_form(2, 4, 2, 0.0, np.ones(2), q)
    h = np.array([[f.average().real for f in row]
                  for row in k.hessian_half()])
    assert np.allclose(h, h.T)


def test_eval_matches_monomial_sum(rng):
    jet = random_jet(2, 4, 2, rng)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(5, 2))
    r = np.array([0.01, -0.02])
    vals = jet.eval(theta, r)
    direct = np.zeros(5, dtype=complex)
    for m in multi_indices(2, 2):
        direct += jet.component(m).eval(theta) * r[0] ** m[0] * r[1] ** m[1]
    assert np.max(np.abs(vals - direct)) < 1e-12


def test_translate_is_exact(rng):
    jet = random_jet(2, 4, 3, rng)
    shift = np.array([0.004, -0.003])
    moved = jet.translate(shift)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(6, 2))
    r = np.array([0.002, 0.001])
    err = np.max(np.abs(moved.eval(theta, r) - jet.eval(theta, r + shift)))
    assert err < 1e-14


def test_derivatives_consistent(rng):
    jet = random_jet(2, 4, 2, rng)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(4, 2))
    r = np.array([0.01, 0.02])
    h = 1e-6
    dr0 = jet.dr(0)
    num = (jet.eval(theta, r + np.array([h, 0.0]))
           - jet.eval(theta, r - np.array([h, 0.0]))) / (2 * h)
    assert np.max(np.abs(dr0.eval(theta, r) - num)) < 1e-8


def test_poisson_bracket_canonical(rng):
    # {r_1, f(theta)} = df/dtheta_1
    n = 2
    f = FourierSeries.random(n, 4, rng).hermitized()
    a = ActionJet(n, 4, 1, {(0, 0): f})
    b = ActionJet.linear_in_r(n, 4, 1, np.array([1.0, 0.0]))
    br = b.poisson_bracket(a, order=8, degree=1)
    diff = br.component((0, 0)) - f.partial_derivative(0).pad(8)
    assert diff.majorant_norm(0.0) < 1e-13


def test_jet_norm_triangle(rng):
    a = random_jet(2, 4, 2, rng)
    b = random_jet(2, 4, 2, rng)
    s = 0.15
    assert (a + b).jet_norm(s) <= a.jet_norm(s) + b.jet_norm(s) + 1e-12


def test_jet_norm_rejects_zero_width(rng):
    a = random_jet(2, 3, 1, rng)
    with pytest.raises(SpectralError):
        a.jet_norm(0.0)


def test_lie_derivative_componentwise(rng):
    alpha = np.array([1.0, np.sqrt(3.0)])
    jet = random_jet(2, 4, 2, rng)
    lied = jet.lie_derivative(alpha)
    for m in multi_indices(2, 2):
        diff = lied.component(m) - jet.component(m).lie_derivative(alpha)
        assert diff.majorant_norm(0.0) < 1e-13
