"""Torus maps, exact one-forms, and fibered exact symplectomorphisms.

A fibered exact symplectomorphism acts on the annulus T^n x R^n by

    G(theta, r) = (phi(theta), t_phi'(theta)^{-1} (r + rho(theta))),

with phi = id + v a diffeomorphism of T^n and rho = dS an exact one-form.
These maps form a group; composition and inversion below implement the
group law on the generating pair (phi, S).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (CertificateError, ConvergenceError, DimensionMismatch,
                     SpectralError)
from .fourier import FourierSeries, eval_stack, grid_points
from .jets import ActionJet, multi_indices

DEFAULT_TAIL_TOL = 1e-10
DEFAULT_OVERSAMPLE = 2


def _grid_size(order, grid_m=None, oversample=DEFAULT_OVERSAMPLE):
    if grid_m is not None:
        return int(grid_m)
    return oversample * (2 * order + 1) + 1


def _flat_grid(m, dim):
    """Uniform grid nodes as a (m^dim, dim) point array."""
    axes = [grid_points(m, 1).ravel() for _ in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


class TorusMap:
    """phi = id + v with periodic displacement v: T^n -> R^n."""

    __slots__ = ("dim", "order", "v")

    def __init__(self, v):
        v = list(v)
        if not v:
            raise DimensionMismatch("empty displacement")
        dim = v[0].dim
        if len(v) != dim:
            raise DimensionMismatch("displacement must have dim components")
        order = max(f.order for f in v)
        self.v = tuple(f.pad(order) if f.order < order else f for f in v)
        self.dim = dim
        self.order = order

    @classmethod
    def identity(cls, dim, order):
        return cls([FourierSeries.zeros(dim, order) for _ in range(dim)])

    def displacement_norm(self, s):
        return max(f.majorant_norm(s) for f in self.v)

    def is_identity(self, tol=0.0):
        return all(f.is_zero(tol) for f in self.v)

    def _stack(self):
        return np.stack([f.coeffs for f in self.v])

    def eval(self, points):
        """phi(points) for points of shape (..., dim)."""
        points = np.asarray(points)
        single = points.ndim == 1
        pts = np.atleast_2d(points)
        disp = eval_stack(self._stack(), self.order, pts).T  # (P, dim)
        if np.isrealobj(points):
            disp = disp.real
        out = pts + disp
        return out[0] if single else out.reshape(points.shape)

    def grid_images(self, m):
        """phi on the uniform m^n grid, flattened to (m^n, dim)."""
        nodes = _flat_grid(m, self.dim)
        disp = np.stack([f.to_grid(m).ravel().real for f in self.v], axis=-1)
        return nodes + disp

    def jacobian_series(self):
        """phi'(theta) as an n x n array of Fourier series (includes id)."""
        n = self.dim
        rows = []
        for j in range(n):
            row = []
            for l in range(n):
                d = self.v[j].partial_derivative(l)
                if j == l:
                    d = d + FourierSeries.constant(n, self.order, 1.0)
                row.append(d)
            rows.append(row)
        return rows

    def jacobian_on_grid(self, m):
        """phi'(theta) at the m^n grid nodes, shape (m^n, n, n)."""
        n = self.dim
        jac = np.empty((m ** n, n, n))
        rows = self.jacobian_series()
        for j in range(n):
            for l in range(n):
                jac[:, j, l] = rows[j][l].to_grid(m).ravel().real
        return jac

    def translate_output(self, shift):
        """theta -> phi(theta) + shift (shift enters the displacement)."""
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        return TorusMap([
            f + FourierSeries.constant(self.dim, self.order, shift[j])
            for j, f in enumerate(self.v)
        ])

    def __repr__(self):
        return (f"TorusMap(dim={self.dim}, order={self.order}, "
                f"|v|_0={self.displacement_norm(0.0):.3e})")


def compose_torus_maps(outer, inner, order=None, grid_m=None,
                       tail_tol=DEFAULT_TAIL_TOL):
    """(outer o inner) = id + v_in + v_out(id + v_in), recovered by FFT.

    The composition is generally not band-limited; the tail check on the
    sampling grid guards the truncation to the working order.
    """
    if outer.dim != inner.dim:
        raise DimensionMismatch("composing maps of different dimension")
    if order is None:
        order = max(outer.order, inner.order)
    m = _grid_size(order, grid_m)
    images = inner.grid_images(m)  # (m^n, dim)
    w = eval_stack(outer._stack(), outer.order, images).real  # (dim, m^n)
    shape = (m,) * inner.dim
    scale = max(inner.displacement_norm(0.0), outer.displacement_norm(0.0))
    comps = []
    for j in range(inner.dim):
        vals = inner.v[j].to_grid(m).real + w[j].reshape(shape)
        comps.append(FourierSeries.from_grid(vals, order, real_flag=True,
                                             tail_tol=tail_tol,
                                             tail_scale=scale))
    return TorusMap(comps)


@dataclass
class InversionCertificate:
    """Quantitative inversion bounds from the contraction construction.

    With |v|_{s + 2 sigma} < sigma the inverse psi = id + w satisfies
    |w|_s <= |v|_{s + sigma} and |psi' - id|_s <= 2 sigma^{-1} |v|_{s + 2 sigma}.
    """

    s: float
    sigma: float
    v_norm_wide: float
    certified: bool
    w_bound: float
    jacobian_bound: float


def inversion_certificate(phi, s, sigma):
    wide = phi.displacement_norm(s + 2.0 * sigma)
    mid = phi.displacement_norm(s + sigma)
    ok = wide < sigma
    return InversionCertificate(
        s=s, sigma=sigma, v_norm_wide=wide, certified=ok,
        w_bound=mid if ok else np.inf,
        jacobian_bound=2.0 / sigma * wide if ok else np.inf,
    )


@dataclass
class InversionResult:
    psi: "TorusMap"
    iterations: int
    fixed_point_residual: float
    composition_residual: float
    certificate: InversionCertificate | None = None


def invert_torus_map(phi, order=None, grid_m=None, tail_tol=DEFAULT_TAIL_TOL,
                     max_iter=200, tol=1e-14, certificate=None):
    """Inverse psi with phi o psi = id, by the fixed point w = -v(id + w).

    ``certificate``: optional (s, sigma) pair; the returned certificate is
    informative and failing it does not abort the numeric inversion, but a
    non-contracting iteration raises ConvergenceError.
    """
    if order is None:
        order = phi.order
    m = _grid_size(order, grid_m)
    nodes = _flat_grid(m, phi.dim)
    stack = phi._stack()
    w = np.zeros_like(nodes)
    residual = np.inf
    for it in range(1, max_iter + 1):
        new = -eval_stack(stack, phi.order, nodes + w).real.T
        residual = float(np.max(np.abs(new - w)))
        w = new
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"inversion fixed point stalled at residual {residual:.3e}",
            payload={"residual": residual, "iterations": max_iter},
        )
    shape = (m,) * phi.dim
    scale = phi.displacement_norm(0.0)
    comps = [FourierSeries.from_grid(w[:, j].reshape(shape), order,
                                     real_flag=True, tail_tol=tail_tol,
                                     tail_scale=scale)
             for j in range(phi.dim)]
    psi = TorusMap(comps)
    # worst-case defect of phi o psi - id on the sampling grid
    comp = eval_stack(stack, phi.order, nodes + w).real.T + w
    comp_res = float(np.max(np.abs(comp)))
    cert = None
    if certificate is not None:
        cert = inversion_certificate(phi, *certificate)
    return InversionResult(psi, it, residual, comp_res, cert)


class ExactOneForm:
    """rho = dS for a zero-average periodic potential S."""

    __slots__ = ("dim", "order", "potential")

    def __init__(self, potential):
        avg = potential.average()
        if abs(avg) > 0.0:
            potential = potential - FourierSeries.constant(
                potential.dim, potential.order, avg)
        self.potential = potential
        self.dim = potential.dim
        self.order = potential.order

    @classmethod
    def zero(cls, dim, order):
        return cls(FourierSeries.zeros(dim, order))

    def components(self):
        return [self.potential.partial_derivative(j) for j in range(self.dim)]

    def on_grid(self, m):
        """rho at the m^n grid nodes, shape (m^n, dim)."""
        return np.stack(
            [c.to_grid(m).ravel().real for c in self.components()], axis=-1)

    def norm(self, s):
        return max(c.majorant_norm(s) for c in self.components())

    def is_zero(self, tol=0.0):
        return self.potential.is_zero(tol)

    def __repr__(self):
        return (f"ExactOneForm(dim={self.dim}, order={self.order}, "
                f"|rho|_0={self.norm(0.0):.3e})")


class FiberedSymplectomorphism:
    """G = (phi, S): theta -> phi(theta), r -> t_phi'^{-1} (r + dS)."""

    __slots__ = ("phi", "form")

    def __init__(self, phi, form):
        if phi.dim != form.dim:
            raise DimensionMismatch("phi and S live on different tori")
        self.phi = phi
        self.form = form

    @property
    def dim(self):
        return self.phi.dim

    @property
    def order(self):
        return max(self.phi.order, self.form.order)

    @classmethod
    def identity(cls, dim, order):
        return cls(TorusMap.identity(dim, order), ExactOneForm.zero(dim, order))

    def is_identity(self, tol=0.0):
        return self.phi.is_identity(tol) and self.form.is_zero(tol)

    def size(self, s):
        """Distance to the identity in the width-s majorant norm."""
        return max(self.phi.displacement_norm(s),
                   self.form.potential.majorant_norm(s))

    def eval(self, theta_points, r_points):
        """Apply G to paired samples (theta, r), each of shape (P, dim)."""
        theta = np.atleast_2d(np.asarray(theta_points, dtype=float))
        r = np.atleast_2d(np.asarray(r_points, dtype=float))
        n = self.dim
        theta_out = self.phi.eval(theta)
        rho_stack = np.stack([c.coeffs for c in self.form.components()])
        rho = eval_stack(rho_stack, self.form.order, theta).real.T  # (P, n)
        jac = np.empty((theta.shape[0], n, n))
        rows = self.phi.jacobian_series()
        jstack = np.stack([rows[j][l].coeffs for j in range(n)
                           for l in range(n)])
        jvals = eval_stack(jstack, self.phi.order, theta).real
        jac = jvals.T.reshape(theta.shape[0], n, n)
        # r_out solves phi'^T r_out = r + rho
        r_out = np.linalg.solve(np.swapaxes(jac, 1, 2), (r + rho)[..., None])
        return theta_out, r_out[..., 0]


def compose_series_with_map(f, phi, order=None, grid_m=None,
                            tail_tol=DEFAULT_TAIL_TOL):
    """f o phi recovered on a sampling grid with an aliasing-tail check."""
    if order is None:
        order = max(f.order, phi.order)
    m = _grid_size(order, grid_m)
    images = phi.grid_images(m)
    vals = eval_stack(f.coeffs[None, ...], f.order, images)[0]
    if f.real_flag:
        vals = vals.real
    return FourierSeries.from_grid(vals.reshape((m,) * phi.dim), order,
                                   real_flag=f.real_flag, tail_tol=tail_tol,
                                   tail_scale=f.majorant_norm(0.0))


def group_compose(second, first, order=None, grid_m=None,
                  tail_tol=DEFAULT_TAIL_TOL):
    """Group law on generating pairs:

        (phi2, S2) o (phi1, S1) = (phi2 o phi1, S1 + S2 o phi1).
    """
    if second.dim != first.dim:
        raise DimensionMismatch("composing maps of different dimension")
    if order is None:
        order = max(second.order, first.order)
    phi = compose_torus_maps(second.phi, first.phi, order=order,
                             grid_m=grid_m, tail_tol=tail_tol)
    s2_pulled = compose_series_with_map(second.form.potential, first.phi,
                                        order=order, grid_m=grid_m,
                                        tail_tol=tail_tol)
    s_total = first.form.potential.pad(order) + s2_pulled
    return FiberedSymplectomorphism(phi, ExactOneForm(s_total))


def inverse_group(g, order=None, grid_m=None, tail_tol=DEFAULT_TAIL_TOL,
                  certificate=None):
    """G^{-1} = (phi^{-1}, -S o phi^{-1})."""
    if order is None:
        order = g.order
    inv = invert_torus_map(g.phi, order=order, grid_m=grid_m,
                           tail_tol=tail_tol, certificate=certificate)
    s_inv = compose_series_with_map(g.form.potential, inv.psi, order=order,
                                    grid_m=grid_m, tail_tol=tail_tol)
    return FiberedSymplectomorphism(inv.psi, ExactOneForm(-s_inv))


# -- pullback of Hamiltonian jets ---------------------------------------------


def _node_poly_mul(a, b, degree):
    """Product of node polynomials (dict multi-index -> grid array)."""
    out = {}
    for ma, va in a.items():
        for mb, vb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            if sum(m) > degree:
                continue
            if m in out:
                out[m] = out[m] + va * vb
            else:
                out[m] = va * vb
    return out


def pullback_jet(h, g, order=None, grid_m=None, tail_tol=DEFAULT_TAIL_TOL):
    """H o G as an action jet of the same r-degree.

    At each grid node the fiber action is the affine substitution
    r -> B (r + rho) with B = t_phi'^{-1}; monomials r^m become node
    polynomials of the same degree, so the pullback closes on jets.
    """
    if h.dim != g.dim:
        raise DimensionMismatch("jet and map dimensions differ")
    n = h.dim
    if order is None:
        order = max(h.order, g.order)
    m_grid = _grid_size(order, grid_m)
    shape = (m_grid,) * n
    images = g.phi.grid_images(m_grid)  # (P, n)

    # values of every theta-coefficient of H at the mapped angles
    mlist = [m for m in multi_indices(n, h.degree)]
    stack = np.stack([h.comps[m].coeffs for m in mlist])
    hvals = eval_stack(stack, h.order, images)  # (C, P), complex
    if all(h.comps[m].real_flag for m in mlist):
        hvals = hvals.real

    jac = g.phi.jacobian_on_grid(m_grid)  # (P, n, n)
    b = np.linalg.inv(np.swapaxes(jac, 1, 2))  # (P, n, n)
    rho = g.form.on_grid(m_grid)  # (P, n)
    const = np.einsum("pjl,pl->pj", b, rho)  # B rho, (P, n)

    zero_m = (0,) * n
    units = [tuple(1 if i == j else 0 for i in range(n)) for j in range(n)]
    base = []
    for j in range(n):
        poly = {zero_m: const[:, j]}
        for l in range(n):
            poly[units[l]] = b[:, j, l]
        base.append(poly)

    # node polynomials of the monomials r'^m, built by graded recursion
    mono = {zero_m: {zero_m: np.ones(images.shape[0])}}
    for m in mlist:
        if m == zero_m:
            continue
        j = next(i for i, x in enumerate(m) if x > 0)
        prev = tuple(x - (1 if i == j else 0) for i, x in enumerate(m))
        mono[m] = _node_poly_mul(mono[prev], base[j], h.degree)

    acc = {}
    for idx, m in enumerate(mlist):
        if h.comps[m].is_zero():
            continue
        vals = hvals[idx]
        for mp, poly in mono[m].items():
            term = vals * poly
            acc[mp] = acc.get(mp, 0.0) + term

    scale = max(max(h.comps[m].majorant_norm(0.0) for m in mlist), 1e-300)
    comps = {}
    for mp, vals in acc.items():
        comps[mp] = FourierSeries.from_grid(np.asarray(vals).reshape(shape),
                                            order, tail_tol=tail_tol,
                                            tail_scale=scale)
    return ActionJet(n, order, h.degree, comps)


def pulled_norm(h, g, s, order=None, grid_m=None, tail_tol=DEFAULT_TAIL_TOL):
    """Size of H in the frame transported by G: |H o G^{-1}|_s."""
    ginv = inverse_group(g, order=order, grid_m=grid_m, tail_tol=tail_tol)
    return pullback_jet(h, ginv, order=order, grid_m=grid_m,
                        tail_tol=tail_tol).jet_norm(s)


# -- Lie transforms ------------------------------------------------------------


def lie_transform(h, w, order=None, degree=None, max_terms=None):
    """exp(ad_W) H = sum_j ad_W^j H / j!, the jet of H o (time-1 flow of W).

    Requires W = O(r^2): each bracket with such a W raises the minimum
    r-degree by one, so on a degree-d jet the series terminates after
    d + 1 terms exactly.
    """
    if w.min_r_degree(tol=1e-15) < 2:
        raise SpectralError("generator must vanish to second order in r")
    if order is None:
        order = max(h.order, w.order)
    if degree is None:
        degree = h.degree
    if max_terms is None:
        max_terms = degree + 2
    total = h.truncate(order=order, degree=degree)
    term = total
    fact = 1.0
    for j in range(1, max_terms + 1):
        term = w.poisson_bracket(term, order=order, degree=degree)
        fact *= j
        if term.max_abs_coeff() / fact <= 1e-17 * max(total.max_abs_coeff(), 1.0):
            break
        total = total + term.scale(1.0 / fact)
    return total


# -- frames along the inverse (used by the quasi-Newton step) -------------------


@dataclass
class TransportFrame:
    """Data of G evaluated along phi^{-1}, as Fourier series.

    u_j = rho_j o psi and w[j][l] = (phi')_{jl} o psi, with psi = phi^{-1}.
    These are the coefficients appearing in the exact linearized
    conjugacy equations after transport to the flat frame.
    """

    psi: TorusMap
    u: list
    w: list


def transport_frame(g, order=None, grid_m=None, tail_tol=DEFAULT_TAIL_TOL,
                    psi=None):
    if order is None:
        order = g.order
    if psi is None:
        inv = invert_torus_map(g.phi, order=order, grid_m=grid_m,
                               tail_tol=tail_tol)
        psi = inv.psi
    m = _grid_size(order, grid_m)
    images = psi.grid_images(m)
    shape = (m,) * g.dim
    n = g.dim

    rho_stack = np.stack([c.coeffs for c in g.form.components()])
    rho_vals = eval_stack(rho_stack, g.form.order, images).real
    rho_scale = max(g.form.norm(0.0), 1e-300)
    u = [FourierSeries.from_grid(rho_vals[j].reshape(shape), order,
                                 real_flag=True, tail_tol=tail_tol,
                                 tail_scale=rho_scale)
         for j in range(n)]

    rows = g.phi.jacobian_series()
    jstack = np.stack([rows[j][l].coeffs for j in range(n) for l in range(n)])
    jvals = eval_stack(jstack, g.phi.order, images).real
    w = [[FourierSeries.from_grid(jvals[j * n + l].reshape(shape), order,
                                  real_flag=True, tail_tol=tail_tol,
                                  tail_scale=1.0)
          for l in range(n)] for j in range(n)]
    return TransportFrame(psi=psi, u=u, w=w)
