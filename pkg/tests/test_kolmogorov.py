import numpy as np
import pytest

from kamtori.errors import SpectralError, TwistDegeneracyError
from kamtori.fourier import FourierSeries
from kamtori.jets import ActionJet
from kamtori.kolmogorov import (TwistData, flatten_quadratic,
                                hamiltonian_field, jet_values, offset_map,
                                translate_actions)
from kamtori.newton import NewtonSchedule

from conftest import GOLDEN, random_jet


def pendulum_like(order=16, eps=1e-3):
    h = ActionJet.normal_form(2, order, 2, 0.0, GOLDEN, 0.5 * np.eye(2))
    pert = FourierSeries.harmonic(2, order, (1, 0), eps) \
        + FourierSeries.harmonic(2, order, (1, 1), eps)
    return h.replace({(0, 0): h.component((0, 0)) + pert})


def test_translate_matches_eval(rng):
    h = random_jet(2, 5, 3, rng)
    shift = np.array([0.003, -0.001])
    moved = translate_actions(h, shift)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(8, 2))
    r = np.array([0.002, 0.004])
    err = np.max(np.abs(moved.eval(theta, r) - h.eval(theta, r + shift)))
    assert err < 1e-14


def test_translate_respects_bound(rng):
    h = random_jet(2, 4, 2, rng)
    with pytest.raises(SpectralError):
        translate_actions(h, np.array([0.5, 0.0]), r_max=0.1)


def test_twist_data():
    q = np.array([[0.5, 0.1], [0.1, 0.3]])
    h = ActionJet.normal_form(2, 8, 2, 0.0, GOLDEN, q)
    twist = TwistData.from_jet(h)
    assert np.allclose(twist.q, q)
    twist.check()
    degenerate = ActionJet.normal_form(2, 8, 2, 0.0, GOLDEN,
                                       np.zeros((2, 2)))
    with pytest.raises(TwistDegeneracyError):
        TwistData.from_jet(degenerate).check()


def test_flatten_quadratic_makes_hessian_constant(rng):
    h = ActionJet.normal_form(2, 8, 3, 0.0, GOLDEN, 0.5 * np.eye(2))
    wobble = FourierSeries.harmonic(2, 8, (1, 0), 0.01)
    m = (2, 0)
    h = h.replace({m: h.component(m) + wobble})
    flat, w = flatten_quadratic(h, GOLDEN)
    for row in flat.hessian_half():
        for f in row:
            osc = f - FourierSeries.constant(2, f.order, f.average())
            assert osc.majorant_norm(0.0) < 1e-10
    # affine part untouched
    assert (flat.constant_part() - h.constant_part()).majorant_norm(0.0) \
        < 1e-10


def test_exact_quadratic_offset():
    q = np.array([[0.5, 0.1], [0.1, 0.3]])
    h = ActionJet.normal_form(2, 16, 2, 0.0, GOLDEN, q)
    sched = NewtonSchedule(s=0.1, sigma=0.1)
    r = np.array([4e-4, -2e-4])
    beta, x, trace = offset_map(h, GOLDEN, r, sched)
    assert np.max(np.abs(beta - 2.0 * q @ r)) < 1e-12
    assert x.G.is_identity(1e-12)


def test_hamiltonian_field_matches_finite_differences(rng):
    h = pendulum_like(order=8)
    field = hamiltonian_field(h)
    theta = np.array([0.7, 2.1])
    r = np.array([0.01, -0.02])
    y = np.concatenate([theta, r])
    val = field(0.0, y)
    eps = 1e-6
    grad = np.zeros(4)
    for i in range(4):
        up, dn = y.copy(), y.copy()
        up[i] += eps
        dn[i] -= eps
        hu = jet_values(h, up[None, :2], up[None, 2:])[0]
        hd = jet_values(h, dn[None, :2], dn[None, 2:])[0]
        grad[i] = (hu - hd).real / (2 * eps)
    expected = np.concatenate([grad[2:], -grad[:2]])
    assert np.max(np.abs(val - expected)) < 1e-7


def test_offset_map_zero_perturbation_zero_beta():
    h = ActionJet.normal_form(2, 16, 2, 0.0, GOLDEN, 0.5 * np.eye(2))
    sched = NewtonSchedule(s=0.1, sigma=0.1)
    beta, x, trace = offset_map(h, GOLDEN, np.zeros(2), sched)
    assert np.max(np.abs(beta)) < 1e-14
    assert trace.converged
