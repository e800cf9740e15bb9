import numpy as np
import pytest

from kamtori.errors import SpectralError
from kamtori.fourier import FourierSeries
from kamtori.jets import ActionJet
from kamtori.newton import (NewtonSchedule, TwistedConjugacy, defect_jet,
                            newton_step, normal_form_projection, offset_jet,
                            run_newton, second_derivative_bound,
                            theoretical_radius)

from conftest import GOLDEN, random_symplectomorphism


def integrable(n=2, order=16, degree=2, c=0.0, q=None):
    q = 0.5 * np.eye(n) if q is None else q
    return ActionJet.normal_form(n, order, degree, c, GOLDEN[:n], q)


def test_projection_fixes_normal_form():
    k0 = integrable()
    k, beta0 = normal_form_projection(k0, GOLDEN)
    assert np.max(np.abs(beta0)) < 1e-15
    assert (k - k0).max_abs_coeff() < 1e-15


def test_projection_extracts_offset():
    beta = np.array([0.01, -0.02])
    h = integrable() + ActionJet.linear_in_r(2, 16, 2, beta)
    k, beta0 = normal_form_projection(h, GOLDEN)
    assert np.max(np.abs(beta0 - beta)) < 1e-15


def test_defect_zero_for_exact_solution():
    k0 = integrable()
    x = TwistedConjugacy.initial(k0, GOLDEN)
    assert defect_jet(k0, x).max_abs_coeff() < 1e-15


def test_schedule_widths():
    sched = NewtonSchedule(s=0.1, sigma=0.2, max_iter=5)
    s0, sig0 = sched.widths(0)
    assert abs(s0 - (0.1 + 0.2 * 0.5)) < 1e-15
    assert abs(sig0 - 0.2 / 6.0) < 1e-15
    s1, _ = sched.widths(1)
    assert s1 < s0


def test_newton_step_contracts(rng):
    eps = 1e-4
    pert = FourierSeries.harmonic(2, 16, (1, 0), eps) \
        + FourierSeries.harmonic(2, 16, (1, 1), eps)
    h = integrable()
    h = h.replace({(0, 0): h.component((0, 0)) + pert})
    k0, beta0 = normal_form_projection(h, GOLDEN)
    x0 = TwistedConjugacy.initial(k0, GOLDEN, beta=beta0)
    sched = NewtonSchedule(s=0.1, sigma=0.1)
    d0 = defect_jet(h, x0).jet_norm(sched.widths(0)[0] + sched.widths(0)[1])
    x1, rep = newton_step(h, x0, sched.widths(0))
    d1 = defect_jet(h, x1).jet_norm(sched.widths(1)[0] + sched.widths(1)[1])
    assert d1 < 1e-3 * d0


def test_run_newton_converged_immediately():
    h = integrable()
    x0 = TwistedConjugacy.initial(h, GOLDEN)
    x, trace = run_newton(h, x0, NewtonSchedule(s=0.1, sigma=0.1))
    assert trace.converged
    assert len(trace.records) == 0


def test_offset_jet_shape():
    beta = np.array([0.3, -0.2])
    jet = offset_jet(2, 8, 2, beta)
    lin = [f.average().real for f in jet.linear_part()]
    assert np.allclose(lin, beta)
    assert jet.constant_part().majorant_norm(0.0) < 1e-15


def test_second_derivative_affine_directions_vanish(rng):
    # the conjugacy operator is affine in (K, beta) at fixed G
    h = integrable(order=8)
    x = TwistedConjugacy.initial(h, GOLDEN)
    dk = ActionJet.normal_form(2, 8, 2, 0.1, np.zeros(2), 0.2 * np.eye(2))
    dbeta = np.array([1.0, -1.0])
    val = second_derivative_bound(x, (dk, None, dbeta),
                                  (dk, None, dbeta), 0.1, 0.1)
    assert val == 0.0


def test_second_derivative_mixed_nonzero(rng):
    h = integrable(order=8)
    x = TwistedConjugacy.initial(h, GOLDEN)
    dk = ActionJet.normal_form(2, 8, 2, 0.0, np.zeros(2), 0.2 * np.eye(2))
    g = random_symplectomorphism(2, 8, rng, 0.01)
    tangent = ([f * 1.0 for f in g.phi.v], g.form.potential)
    val = second_derivative_bound(x, (dk, None, np.zeros(2)),
                                  (None, tangent, np.zeros(2)), 0.1, 0.1)
    assert val > 0.0


def test_theoretical_radius_preconditions():
    with pytest.raises(SpectralError):
        theoretical_radius(0.5, 2.0, 2.0, 1.0, 0.1, 0.1, 0.05)
    eps_main, eps_domain = theoretical_radius(2.0, 2.0, 2.0, 1.0,
                                              0.1, 0.2, 0.05)
    assert 0.0 < eps_main
    assert 0.0 < eps_domain
