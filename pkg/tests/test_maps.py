import numpy as np
import pytest

from kamtori.errors import SpectralError
from kamtori.fourier import FourierSeries, grid_points
from kamtori.jets import ActionJet
from kamtori.maps import (ExactOneForm, FiberedSymplectomorphism, TorusMap,
                          compose_torus_maps, group_compose,
                          inverse_group, inversion_certificate,
                          invert_torus_map, lie_transform, pullback_jet,
                          transport_frame)

from conftest import (random_jet, random_origin_fixing_map,
                      random_symplectomorphism)


def test_identity_composition(rng):
    phi = random_origin_fixing_map(2, 6, rng, 0.05)
    ident = TorusMap.identity(2, 6)
    left = compose_torus_maps(ident, phi, order=12)
    right = compose_torus_maps(phi, ident, order=12)
    for comp, ref in ((left, phi), (right, phi)):
        err = max((a - b.pad(12)).majorant_norm(0.0)
                  for a, b in zip(comp.v, ref.v))
        assert err < 1e-12


def test_composition_matches_pointwise(rng):
    f = random_origin_fixing_map(2, 5, rng, 0.08)
    g = random_origin_fixing_map(2, 5, rng, 0.06)
    comp = compose_torus_maps(f, g, order=20)
    pts = rng.uniform(0.0, 2.0 * np.pi, size=(30, 2))
    err = np.max(np.abs(comp.eval(pts) - f.eval(g.eval(pts))))
    assert err < 1e-9


def test_inversion_round_trip(rng):
    phi = random_origin_fixing_map(2, 5, rng, 0.05)
    inv = invert_torus_map(phi, order=20)
    pts = rng.uniform(0.0, 2.0 * np.pi, size=(30, 2))
    back = phi.eval(inv.psi.eval(pts))
    err = np.max(np.abs(np.angle(np.exp(1j * (back - pts)))))
    assert err < 1e-10
    assert inv.composition_residual < 1e-9


def test_inversion_certificate_bounds(rng):
    s, sigma = 0.2, 0.1
    phi = random_origin_fixing_map(2, 4, rng, 0.8 * sigma,
                                   wide_s=s + 2 * sigma)
    cert = inversion_certificate(phi, s, sigma)
    assert cert.certified
    inv = invert_torus_map(phi, order=12, certificate=(s, sigma))
    assert inv.certificate.certified
    assert inv.psi.displacement_norm(s) <= cert.w_bound * (1 + 1e-12)


def test_group_law_inverse(rng):
    g = random_symplectomorphism(2, 5, rng, 0.05)
    ginv = inverse_group(g, order=20)
    comp = group_compose(g, ginv, order=20)
    assert comp.phi.displacement_norm(0.0) < 1e-9
    assert comp.form.potential.majorant_norm(0.0) < 1e-9


def test_symplectomorphism_eval_preserves_form(rng):
    # t_phi'(theta) r_out = r + rho(theta) by construction
    g = random_symplectomorphism(2, 5, rng, 0.05)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(10, 2))
    r = rng.uniform(-0.01, 0.01, size=(10, 2))
    theta_out, r_out = g.eval(theta, r)
    rows = g.phi.jacobian_series()
    jval = np.empty((10, 2, 2))
    for j in range(2):
        for l in range(2):
            jval[:, j, l] = rows[j][l].eval(theta).real
    rho = np.stack([c.eval(theta).real for c in g.form.components()], axis=-1)
    lhs = np.einsum("pjl,pj->pl", jval, r_out)
    assert np.max(np.abs(lhs - (r + rho))) < 1e-12


def test_pullback_matches_pointwise(rng):
    h = random_jet(2, 5, 2, rng)
    g = random_symplectomorphism(2, 5, rng, 0.04)
    pulled = pullback_jet(h, g, order=20)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(12, 2))
    for r in (np.array([0.003, -0.002]), np.zeros(2)):
        theta_out, r_out = g.eval(theta, np.broadcast_to(r, (12, 2)))
        direct = np.array([h.eval(theta_out[i:i + 1], r_out[i])[0]
                           for i in range(12)])
        err = np.max(np.abs(pulled.eval(theta, r) - direct))
        assert err < 1e-9


def test_pullback_composition_identity(rng):
    # (H o G2) o G1 = H o (G2 o G1)
    h = random_jet(2, 4, 2, rng)
    g1 = random_symplectomorphism(2, 4, rng, 0.03)
    g2 = random_symplectomorphism(2, 4, rng, 0.03)
    order = 24
    comp = group_compose(g2, g1, order=order)
    a = pullback_jet(h, comp, order=order)
    b = pullback_jet(pullback_jet(h, g2, order=order), g1, order=order)
    assert (a - b).jet_norm(0.05) < 1e-10


def test_lie_transform_requires_quadratic(rng):
    h = random_jet(2, 4, 2, rng)
    w = ActionJet.linear_in_r(2, 4, 2, np.array([1.0, 0.0]))
    with pytest.raises(SpectralError):
        lie_transform(h, w)


def test_lie_transform_matches_bracket_expansion(rng):
    h = random_jet(2, 3, 2, rng)
    f = FourierSeries.random(2, 3, rng, scale=0.01).hermitized()
    w = ActionJet(2, 3, 2, {(2, 0): f})
    order, degree = 12, 2
    moved = lie_transform(h, w, order=order, degree=degree)
    # two-term expansion: H + {W, H} (+ O(r^2 cutoff kills the rest)
    manual = h.truncate(order) + w.poisson_bracket(
        h, order=order, degree=degree)
    second = w.poisson_bracket(
        w.poisson_bracket(h, order=order, degree=degree),
        order=order, degree=degree).scale(0.5)
    manual = manual + second
    assert (moved - manual).jet_norm(0.05) < 1e-12


def test_transport_frame_components(rng):
    g = random_symplectomorphism(2, 5, rng, 0.04)
    frame = transport_frame(g, order=20, grid_m=64)
    pts = rng.uniform(0.0, 2.0 * np.pi, size=(20, 2))
    # psi inverts phi
    back = g.phi.eval(frame.psi.eval(pts))
    assert np.max(np.abs(np.angle(np.exp(1j * (back - pts))))) < 1e-9
    # u = rho o phi^{-1}
    phi_inv_pts = frame.psi.eval(pts)
    rho = np.stack([c.eval(phi_inv_pts).real
                    for c in g.form.components()], axis=-1)
    uval = np.stack([f.eval(pts).real for f in frame.u], axis=-1)
    assert np.max(np.abs(uval - rho)) < 1e-8
