"""From a near-integrable Hamiltonian to a verified invariant torus.

Pipeline: flatten the angle dependence of the quadratic part, form the
family H_R(theta, r) = H(theta, R + r) of action translations, drive the
frequency offset beta(R) to zero with the twist matrix as Jacobian, and
confirm the resulting torus by direct integration of the flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .arithmetics import solve_cohomological
from .errors import ConvergenceError, SpectralError, TwistDegeneracyError
from .fourier import FourierSeries, eval_stack
from .jets import ActionJet
from .maps import (DEFAULT_TAIL_TOL, compose_series_with_map,
                   invert_torus_map, lie_transform)
from .newton import (NewtonSchedule, TwistedConjugacy, defect,
                     normal_form_projection, run_newton)

DEFAULT_R_MAX = 0.1


@dataclass
class TwistData:
    """Averaged Hessian Q (the twist matrix) and its conditioning."""

    q: np.ndarray
    condition: float

    @classmethod
    def from_jet(cls, h, symmetry_tol=1e-13):
        k2 = h.hessian_half()
        n = h.dim
        q = np.empty((n, n))
        for j in range(n):
            for l in range(n):
                q[j, l] = float(np.real(k2[j][l].average()))
        if float(np.max(np.abs(q - q.T))) > symmetry_tol * max(
                1.0, float(np.max(np.abs(q)))):
            raise SpectralError("averaged Hessian is not symmetric")
        q = 0.5 * (q + q.T)
        return cls(q=q, condition=float(np.linalg.cond(q)))

    def check(self, cond_max=1e8):
        if not np.isfinite(self.condition) or self.condition > cond_max:
            raise TwistDegeneracyError(
                f"twist matrix condition {self.condition:.2e} exceeds "
                f"{cond_max:.1e}")


def flatten_quadratic(h, alpha):
    """Remove the angle dependence of the r^2 coefficient.

    Solves L_alpha F = K2 - Q componentwise and applies the exact jet
    Lie transform generated by W = F(theta) . r^2.  The affine part
    (constant and alpha . r) is untouched; the flattened r^2 coefficient
    is the constant matrix Q.
    Returns (flattened jet, generator W) with W = 0 when K2 is already
    constant.
    """
    n = h.dim
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    k2 = h.hessian_half()
    comps = {}
    nonzero = False
    for j in range(n):
        for l in range(j, n):
            g = k2[j][l] - k2[j][l].average()
            if g.is_zero(1e-15):
                continue
            nonzero = True
            f = solve_cohomological(g, alpha)
            m = tuple((1 if i == j else 0) + (1 if i == l else 0)
                      for i in range(n))
            comps[m] = f if j == l else 2.0 * f
    w = ActionJet(n, h.order, h.degree, comps)
    if not nonzero:
        return h, w
    return lie_transform(h, w), w


def translate_actions(h, shift, r_max=DEFAULT_R_MAX):
    """H(theta, R + r): exact polynomial recentering in the actions."""
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    if float(np.max(np.abs(shift))) > r_max:
        raise SpectralError(
            f"translation {shift} exceeds the configured bound {r_max}")
    return h.translate(shift)


def offset_map(h, alpha, r, schedule, warm=None, order=None,
               r_max=DEFAULT_R_MAX, tail_tol=DEFAULT_TAIL_TOL):
    """beta(R): the frequency offset of the twisted conjugacy of H_R.

    Returns (beta, conjugacy, trace); pass the previous conjugacy as
    ``warm`` to start the Newton run from it in sweeps.
    """
    h_r = translate_actions(h, r, r_max=r_max)
    if warm is None:
        k0, beta0 = normal_form_projection(h_r, alpha)
        x0 = TwistedConjugacy.initial(k0, alpha, beta=beta0)
    else:
        k0, _ = normal_form_projection(h_r, alpha)
        x0 = TwistedConjugacy(warm.K, warm.G, warm.beta, warm.alpha)
    x, trace = run_newton(h_r, x0, schedule, order=order, tail_tol=tail_tol)
    return x.beta, x, trace


@dataclass
class VerificationReport:
    time_span: float
    samples: int
    max_deviation: float
    rms_deviation: float
    max_energy_drift: float
    ode_tol: float


@dataclass
class InvariantTorusResult:
    r_star: np.ndarray
    beta: np.ndarray
    conjugacy: TwistedConjugacy
    psi: object                      # inverse angle map phi^{-1}
    r_embedding: list                # series r_j(theta) = R*_j - rho_j(psi)
    twist: TwistData
    outer_iterations: int
    traces: list = field(default_factory=list)
    verification: VerificationReport | None = None

    def embedding_points(self, theta):
        """Gamma(theta) = (psi(theta), R* - rho(psi(theta))) at sample angles."""
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        ang = self.psi.eval(theta)
        stack = np.stack([f.coeffs for f in self.r_embedding])
        act = eval_stack(stack, self.r_embedding[0].order, theta).real.T
        return ang, act


def solve_invariant_torus(h, alpha, schedule=None, order=None,
                          tol_outer=1e-10, r_max=DEFAULT_R_MAX,
                          max_outer=20, cond_max=1e8,
                          tail_tol=DEFAULT_TAIL_TOL):
    """Newton iteration on the translation R driving beta(R) to zero.

    The Jacobian starts as the twist matrix 2Q and is refreshed by
    forward differences whenever a step fails to contract.  Steps are
    clamped to r_max.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    n = h.dim
    if schedule is None:
        schedule = NewtonSchedule(s=0.1, sigma=0.1)

    h_flat, _gen = flatten_quadratic(h, alpha)
    twist = TwistData.from_jet(h_flat)
    twist.check(cond_max)
    jac = 2.0 * twist.q

    r = np.zeros(n)
    warm = None
    traces = []
    beta, conj, trace = offset_map(h_flat, alpha, r, schedule, warm,
                                   order=order, r_max=r_max,
                                   tail_tol=tail_tol)
    traces.append(trace)
    outer = 0
    while float(np.max(np.abs(beta))) > tol_outer:
        if outer >= max_outer:
            raise ConvergenceError(
                f"|beta| = {float(np.max(np.abs(beta))):.3e} after "
                f"{max_outer} outer steps", payload=traces)
        step = np.linalg.solve(jac, beta)
        norm = float(np.max(np.abs(step)))
        if norm > r_max:
            step *= r_max / norm
        r_new = r - step
        beta_new, conj_new, trace = offset_map(h_flat, alpha, r_new,
                                               schedule, conj, order=order,
                                               r_max=r_max,
                                               tail_tol=tail_tol)
        traces.append(trace)
        if float(np.max(np.abs(beta_new))) > 0.5 * float(
                np.max(np.abs(beta))):
            # refresh the Jacobian by forward differences
            eps = max(1e-7, 1e-3 * float(np.max(np.abs(r_new - r))))
            for j in range(n):
                dr = r.copy()
                dr[j] += eps
                bj, _, tr = offset_map(h_flat, alpha, dr, schedule, conj,
                                       order=order, r_max=r_max,
                                       tail_tol=tail_tol)
                traces.append(tr)
                jac[:, j] = (bj - beta) / eps
        r, beta, conj = r_new, beta_new, conj_new
        outer += 1

    inv = invert_torus_map(conj.G.phi, order=conj.G.order,
                           tail_tol=tail_tol)
    psi = inv.psi
    rho = conj.G.form.components()
    r_embedding = []
    for j in range(n):
        u = compose_series_with_map(rho[j], psi, order=conj.G.order,
                                    tail_tol=tail_tol)
        r_embedding.append(-u + float(r[j]))
    return InvariantTorusResult(
        r_star=r, beta=beta, conjugacy=conj, psi=psi,
        r_embedding=r_embedding, twist=twist,
        outer_iterations=outer, traces=traces)


# -- flow verification -------------------------------------------------------


def _jet_value_stack(jets):
    """Stack every component of several jets for one eval_stack call."""
    entries = []
    for jet in jets:
        for m, f in jet.comps.items():
            if not f.is_zero():
                entries.append((m, f.coeffs))
    if not entries:
        return None, None, None
    stack = np.stack([c for _, c in entries])
    monomials = np.array([m for m, _ in entries], dtype=float)
    return stack, monomials, jets[0].order


def hamiltonian_field(h):
    """Vectorized right-hand side of dtheta/dt = dH/dr, dr/dt = -dH/dtheta."""
    n = h.dim
    jets = [h.dr(j) for j in range(n)] + [h.dtheta(j) for j in range(n)]
    sizes = [len([1 for f in jet.comps.values() if not f.is_zero()])
             for jet in jets]
    stack, monomials, order = _jet_value_stack(jets)
    bounds = np.cumsum([0] + sizes)

    def field(t, y):
        # y is flattened (2n, P): angles then actions
        z = y.reshape(2 * n, -1)
        theta = z[:n].T         # (P, n)
        r = z[n:].T             # (P, n)
        vals = eval_stack(stack, order, theta).real  # (C, P)
        # multiply each entry by its r-monomial
        mono = np.prod(r[None, :, :] ** monomials[:, None, :], axis=2)
        contrib = vals * mono
        out = np.empty_like(z)
        for j in range(n):
            out[j] = contrib[bounds[j]:bounds[j + 1]].sum(axis=0)
            sl = slice(bounds[n + j], bounds[n + j + 1])
            out[n + j] = -contrib[sl].sum(axis=0)
        return out.reshape(-1)

    return field


def jet_values(h, theta, r):
    """H(theta_i, r_i) with per-sample actions."""
    stack, monomials, order = _jet_value_stack([h])
    vals = eval_stack(stack, order, theta).real
    mono = np.prod(r[None, :, :] ** monomials[:, None, :], axis=2)
    return (vals * mono).sum(axis=0)


def verify_invariance(result, h, t_span=10.0, samples=64, ode_tol=1e-12,
                      validity_radius=None):
    """Integrate the flow from the torus and compare with the rotation.

    Trajectories start at Gamma(theta_i) and are compared against
    Gamma(theta_i + T alpha) at time T.  Angle deviations are measured
    modulo 2 pi.  Also reports the worst energy drift along the way.
    """
    n = h.dim
    alpha = result.conjugacy.alpha
    m = max(2, int(round(samples ** (1.0 / n))))
    axes = [np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    theta0 = np.stack([g.ravel() for g in mesh], axis=-1)
    p = theta0.shape[0]

    ang0, act0 = result.embedding_points(theta0)
    if validity_radius is not None:
        spread = float(np.max(np.abs(act0 - result.r_star[None, :])))
        if spread > validity_radius:
            raise SpectralError(
                f"embedding actions wander {spread:.3e} from R*, beyond "
                f"the validity radius {validity_radius:.3e}")

    field = hamiltonian_field(h)
    y0 = np.concatenate([ang0.T.reshape(-1), act0.T.reshape(-1)])
    t_eval = np.linspace(0.0, t_span, 6)
    sol = solve_ivp(field, (0.0, t_span), y0, method="DOP853",
                    rtol=ode_tol, atol=ode_tol, t_eval=t_eval,
                    dense_output=False, vectorized=False)
    if not sol.success:
        raise ConvergenceError(f"flow integration failed: {sol.message}")
    z = sol.y[:, -1].reshape(2 * n, p)
    ang_t, act_t = z[:n].T, z[n:].T

    ang_ref, act_ref = result.embedding_points(theta0 + t_span * alpha)
    dang = np.angle(np.exp(1j * (ang_t - ang_ref)))
    dev = np.sqrt(np.sum(dang ** 2, axis=1) + np.sum(
        (act_t - act_ref) ** 2, axis=1))

    e0 = jet_values(h, ang0, act0)
    drift = 0.0
    for i in range(1, sol.y.shape[1]):
        zi = sol.y[:, i].reshape(2 * n, p)
        ei = jet_values(h, zi[:n].T, zi[n:].T)
        drift = max(drift, float(np.max(np.abs(ei - e0))))
    report = VerificationReport(
        time_span=t_span, samples=p,
        max_deviation=float(np.max(dev)),
        rms_deviation=float(np.sqrt(np.mean(dev ** 2))),
        max_energy_drift=drift,
        ode_tol=ode_tol)
    result.verification = report
    return report
