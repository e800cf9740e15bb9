"""Quadratically convergent construction of twisted conjugacies.

The unknown is a triple (K, G, beta) with K = c + alpha.r + O(r^2) a
Hamiltonian in normal form, G a fibered exact symplectomorphism and
beta a constant action offset, solving

    H = K o G + beta . r.

Each step linearizes this equation, transports the residual to the flat
frame by G^{-1}, and solves the resulting triangular system of
cohomological equations and finite-dimensional averages exactly at the
working Fourier order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arithmetics import cohomological_bound, solve_cohomological
from .errors import ConvergenceError, SpectralError, TwistDegeneracyError
from .fourier import FourierSeries, product_average
from .jets import ActionJet
from .maps import (DEFAULT_TAIL_TOL, ExactOneForm, FiberedSymplectomorphism,
                   TorusMap, compose_series_with_map, group_compose,
                   inverse_group, invert_torus_map, pullback_jet,
                   transport_frame)

NORMAL_FORM_TOL = 1e-13


def offset_jet(dim, order, degree, beta):
    """beta . r as a jet."""
    return ActionJet.linear_in_r(dim, order, degree, beta)


@dataclass
class TwistedConjugacy:
    """Candidate solution (K, G, beta) of the twisted conjugacy equation.

    K must be in normal form: constant part theta-independent, linear
    part exactly the frequency alpha.
    """

    K: ActionJet
    G: FiberedSymplectomorphism
    beta: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        self.alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        n = self.K.dim
        if self.beta.size != n or self.alpha.size != n:
            raise SpectralError("beta/alpha dimension mismatch")
        c0 = self.K.constant_part()
        if (c0 - c0.average()).majorant_norm(0.0) > NORMAL_FORM_TOL:
            raise SpectralError("K's constant part is not theta-independent")
        for j, lin in enumerate(self.K.linear_part()):
            dev = (lin - self.alpha[j]).majorant_norm(0.0)
            if dev > NORMAL_FORM_TOL:
                raise SpectralError(
                    f"K's linear part deviates from alpha by {dev:.2e}")

    @classmethod
    def initial(cls, K, alpha, beta=None):
        n = K.dim
        beta = np.zeros(n) if beta is None else beta
        return cls(K, FiberedSymplectomorphism.identity(n, K.order),
                   beta, alpha)

    @property
    def c(self):
        return float(np.real(self.K.constant_part().average()))


def normal_form_projection(h, alpha):
    """Nearest jet in normal form: constant part averaged, linear part alpha.

    Returns (K, beta0) where beta0 is the average linear mismatch, so
    that h - K - beta0.r has oscillating low-order terms only.
    """
    n = h.dim
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    lin = h.linear_part()
    beta0 = np.array([float(np.real(f.average())) - alpha[j]
                      for j, f in enumerate(lin)])
    updates = {(0,) * n: FourierSeries.constant(
        n, h.order, float(np.real(h.constant_part().average())))}
    for j in range(n):
        ej = tuple(1 if i == j else 0 for i in range(n))
        updates[ej] = FourierSeries.constant(n, h.order, alpha[j])
    return h.replace(updates), beta0


def defect_jet(h, x, order=None, grid_m=None, tail_tol=DEFAULT_TAIL_TOL):
    """H - (K o G + beta . r) as a jet."""
    kg = pullback_jet(x.K, x.G, order=order, grid_m=grid_m,
                      tail_tol=tail_tol)
    off = offset_jet(h.dim, kg.order, h.degree, x.beta)
    return h.truncate(order=kg.order) - kg - off


def defect(h, x, s, order=None, grid_m=None, tail_tol=DEFAULT_TAIL_TOL):
    """Majorant norm of the twisted conjugacy residual at width s."""
    return defect_jet(h, x, order=order, grid_m=grid_m,
                      tail_tol=tail_tol).jet_norm(s)


@dataclass
class StepReport:
    delta_beta: np.ndarray
    delta_c: float
    s_dot: FourierSeries
    phi_dot: list
    delta_k_norm: float
    step_norm: float
    transported_defect_norm: float
    zero_average_defects: tuple
    solve_ratio: float  # step_norm / transported defect norm


def newton_step(h, x, widths, order=None, grid_m=None,
                tail_tol=DEFAULT_TAIL_TOL, average_tol=1e-10):
    """One quasi-Newton update of (K, G, beta).

    The linearized equation, transported by G^{-1}, is triangular: the
    averages of the order-0 and order-1 parts pin down delta_c and
    delta_beta, two cohomological solves give the potential update
    S_dot and the angle update phi_dot, and orders >= 2 are absorbed
    into K.  Because K_2 may depend on theta, the coupling of delta_beta
    into the order-0 solve feeds back into the order-1 average: the
    finite-dimensional system below solves the two simultaneously so
    that both right-hand sides have exactly zero average.
    """
    s, sigma = widths
    n = h.dim
    alpha = x.alpha
    if order is None:
        order = max(h.order, x.G.order, x.K.order)

    inv = invert_torus_map(x.G.phi, order=order, grid_m=grid_m,
                           tail_tol=tail_tol)
    frame = transport_frame(x.G, order=order, grid_m=grid_m,
                            tail_tol=tail_tol, psi=inv.psi)
    s_inv = compose_series_with_map(x.G.form.potential, inv.psi,
                                    order=order, grid_m=grid_m,
                                    tail_tol=tail_tol)
    ginv = FiberedSymplectomorphism(inv.psi, ExactOneForm(-s_inv))

    hmb = h.truncate(order=order) - offset_jet(n, order, h.degree, x.beta)
    hdot = pullback_jet(hmb, ginv, order=order, grid_m=grid_m,
                        tail_tol=tail_tol) - x.K.truncate(order=order)
    hd0 = hdot.constant_part()
    hd1 = hdot.linear_part()
    k2 = x.K.hessian_half()
    u = frame.u          # rho_j o phi^{-1}
    w = frame.w          # (phi')_{jl} o phi^{-1}

    # order-0 solve split into the delta_beta-independent part and the
    # n response potentials multiplying each delta_beta component
    s0 = solve_cohomological(hd0 - hd0.average(), alpha)
    s_resp = [solve_cohomological(u[l] - u[l].average(), alpha)
              for l in range(n)]

    # averaged order-1 system, including the 2 K_2 dS feedback
    a_mat = np.empty((n, n))
    b_vec = np.empty(n)
    for j in range(n):
        for l in range(n):
            a_mat[j, l] = float(np.real(w[j][l].average()))
            for mth in range(n):
                a_mat[j, l] += 2.0 * float(np.real(product_average(
                    k2[j][mth], s_resp[l].partial_derivative(mth))))
        b_vec[j] = float(np.real(hd1[j].average()))
        for mth in range(n):
            b_vec[j] -= 2.0 * float(np.real(product_average(
                k2[j][mth], s0.partial_derivative(mth))))
    cond = np.linalg.cond(a_mat)
    if not np.isfinite(cond) or cond > 1e12:
        raise TwistDegeneracyError(
            f"averaged Jacobian of the offset system is singular "
            f"(condition {cond:.2e})")
    delta_beta = np.linalg.solve(a_mat, b_vec)

    delta_c = float(np.real(hd0.average()))
    delta_c += float(sum(np.real(u[l].average()) * delta_beta[l]
                         for l in range(n)))

    s_dot = s0
    for l in range(n):
        s_dot = s_dot + delta_beta[l] * s_resp[l]
    rho_dot = [s_dot.partial_derivative(j) for j in range(n)]

    # order-1 right-hand sides; their averages vanish by construction
    phi_dot = []
    avg_defects = []
    scale = max(hdot.max_abs_coeff(), 1.0)
    for j in range(n):
        rhs = -hd1[j]
        for l in range(n):
            rhs = rhs + delta_beta[l] * w[j][l]
            rhs = rhs + 2.0 * k2[j][l].multiply(rho_dot[l], order=order)
        avg = float(np.real(rhs.average()))
        avg_defects.append(avg)
        if abs(avg) > average_tol * scale:
            raise SpectralError(
                f"order-1 average {avg:.3e} did not cancel; truncation "
                "order too small for this step")
        f = solve_cohomological(rhs - rhs.average(), alpha)
        f = f - float(np.real(f.value_at_zero()))  # keep phi(0) fixed
        phi_dot.append(f)
    avg0 = float(np.real((hd0 - delta_c
                          + sum(delta_beta[l] * u[l]
                                for l in range(n))).average()))
    avg_defects.insert(0, avg0)

    step = FiberedSymplectomorphism(TorusMap(phi_dot), ExactOneForm(s_dot))
    g_new = group_compose(step, x.G, order=order, grid_m=grid_m,
                          tail_tol=tail_tol)
    beta_new = x.beta + delta_beta

    # K absorbs the orders >= 2 of the transported Hamiltonian
    ginv_new = inverse_group(g_new, order=order, grid_m=grid_m,
                             tail_tol=tail_tol)
    hhat = pullback_jet(h.truncate(order=order)
                        - offset_jet(n, order, h.degree, beta_new),
                        ginv_new, order=order, grid_m=grid_m,
                        tail_tol=tail_tol)
    k_new, _ = normal_form_projection(hhat, alpha)
    x_new = TwistedConjugacy(k_new, g_new, beta_new, alpha)

    delta_k_norm = (k_new - x.K.truncate(order=order)).jet_norm(s)
    hdot_norm = hdot.jet_norm(min(s + sigma, 1.0))
    step_norm = max(
        max(f.majorant_norm(s) for f in phi_dot),
        s_dot.majorant_norm(s),
        float(np.max(np.abs(delta_beta))),
        abs(delta_c),
        delta_k_norm,
    )
    report = StepReport(
        delta_beta=delta_beta,
        delta_c=delta_c,
        s_dot=s_dot,
        phi_dot=phi_dot,
        delta_k_norm=delta_k_norm,
        step_norm=step_norm,
        transported_defect_norm=hdot_norm,
        zero_average_defects=tuple(avg_defects),
        solve_ratio=step_norm / hdot_norm if hdot_norm > 0.0 else 0.0,
    )
    return x_new, report


@dataclass
class NewtonSchedule:
    """Shrinking-width schedule with geometric budget.

    The per-step loss is sigma_k = (sigma/6) 2^{-k}, each step consuming
    three lossy operations of width sigma_k, so the total loss is
    3 sum sigma_k = sigma and the widths s_k = s + sigma 2^{-k} decrease
    from s + sigma to s.
    """

    s: float
    sigma: float
    max_iter: int = 12
    defect_floor: float = 1e-11

    def __post_init__(self):
        if not (0.0 < self.s < self.s + self.sigma <= 1.0):
            raise SpectralError("need 0 < s < s + sigma <= 1")
        if self.max_iter < 0 or self.defect_floor <= 0.0:
            raise SpectralError("bad schedule parameters")

    def sigma_k(self, k):
        return self.sigma / 6.0 * 2.0 ** (-k)

    def s_k(self, k):
        return self.s + self.sigma * 2.0 ** (-k)

    def widths(self, k):
        """(target width, loss budget) for step k."""
        return (self.s_k(k + 1), self.sigma_k(k))


@dataclass
class StepRecord:
    k: int
    s_k: float
    sigma_k: float
    defect: float
    step_norm: float
    delta_beta: tuple
    delta_c: float


@dataclass
class NewtonTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    final_defect: float = math.nan

    def defects(self):
        return [r.defect for r in self.records] + (
            [self.final_defect] if not math.isnan(self.final_defect) else [])

    def quadratic_fit(self, floor=1e-12):
        """Smallest C with d_{k+1} <= C d_k^2 over consecutive pairs above
        the floor; nan when fewer than two usable defects exist."""
        d = self.defects()
        ratios = [d[i + 1] / d[i] ** 2 for i in range(len(d) - 1)
                  if d[i] > floor and d[i + 1] > floor and d[i] < 1.0]
        return max(ratios) if ratios else math.nan

    def to_csv(self):
        if not self.records:
            return "k,s_k,sigma_k,defect,step_norm,delta_c\n"
        n = len(self.records[0].delta_beta)
        cols = ["k", "s_k", "sigma_k", "defect", "step_norm"]
        cols += [f"delta_beta_{j + 1}" for j in range(n)]
        cols.append("delta_c")
        lines = [",".join(cols)]
        for r in self.records:
            row = [str(r.k), repr(r.s_k), repr(r.sigma_k), repr(r.defect),
                   repr(r.step_norm)]
            row += [repr(b) for b in r.delta_beta]
            row.append(repr(r.delta_c))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def run_newton(h, x0, schedule, order=None, grid_m=None,
               tail_tol=DEFAULT_TAIL_TOL):
    """Iterate newton_step until the defect reaches the floor.

    Stops early with success when the initial guess already solves the
    equation.  Two consecutive defect increases abort with the trace
    attached to the exception.
    """
    trace = NewtonTrace()
    x = x0
    d_prev = defect(h, x, schedule.s_k(0), order=order, grid_m=grid_m,
                    tail_tol=tail_tol)
    increases = 0
    for k in range(schedule.max_iter):
        if d_prev <= schedule.defect_floor:
            break
        x_next, rep = newton_step(h, x, schedule.widths(k), order=order,
                                  grid_m=grid_m, tail_tol=tail_tol)
        d_next = defect(h, x_next, schedule.s_k(k + 1), order=order,
                        grid_m=grid_m, tail_tol=tail_tol)
        trace.records.append(StepRecord(
            k=k, s_k=schedule.s_k(k), sigma_k=schedule.sigma_k(k),
            defect=d_prev, step_norm=rep.step_norm,
            delta_beta=tuple(rep.delta_beta), delta_c=rep.delta_c))
        if d_next >= d_prev:
            increases += 1
            if increases >= 2:
                trace.final_defect = d_next
                raise ConvergenceError(
                    f"defect increased twice in a row "
                    f"({d_prev:.3e} -> {d_next:.3e})",
                    payload=trace)
        else:
            increases = 0
        x = x_next
        d_prev = d_next
    trace.final_defect = d_prev
    trace.converged = d_prev <= schedule.defect_floor
    if not trace.converged:
        raise ConvergenceError(
            f"defect {d_prev:.3e} above floor {schedule.defect_floor:.1e} "
            f"after {schedule.max_iter} steps", payload=trace)
    return x, trace


# -- quantitative constants ------------------------------------------------


def assemble_cprime(n, tau, gamma, k2_norm=1.0, frame_norm=1.0):
    """Engineering estimate of the linear-solve constant.

    Chains the cohomological constant through the two small-divisor
    solves and the finite-dimensional averages; the frame and Hessian
    norms enter linearly.  This is an estimate for monitoring the step
    bound, not a proved constant.
    """
    c0 = cohomological_bound(n, tau, gamma, 1.0)  # C0 / gamma at sigma = 1
    return 4.0 * c0 * (1.0 + 2.0 * k2_norm) * (1.0 + frame_norm)


def theoretical_radius(c_prime, c_second, tau_prime, tau_second, s, sigma,
                       eta):
    """Closed-form convergence radii of the abstract quadratic scheme.

    eps_main is the radius at widths (s, s + sigma); eps_domain is the
    width-optimized variant over a total budget S = s + sigma, using the
    optimal split sigma = 2 tau s.
    """
    if min(c_prime, c_second, tau_prime, tau_second) < 1.0:
        raise SpectralError("constants and exponents must be >= 1")
    if not (0.0 < s < s + sigma < 1.0):
        raise SpectralError("need 0 < s < s + sigma < 1")
    if not (0.0 < eta < s):
        raise SpectralError("need 0 < eta < s")
    c = c_prime * c_second
    tau = tau_prime + tau_second
    eps_main = 2.0 ** (-8.0 * tau) * c ** (-2.0) * sigma ** (2.0 * tau) * eta
    big_s = s + sigma
    eps_domain = 2.0 ** (-12.0 * tau) / tau * c ** (-2.0) \
        * big_s ** (3.0 * tau)
    return eps_main, eps_domain


# -- second derivative of the conjugacy operator ----------------------------


def _tangent_field(phi_dot, s_dot, order, degree):
    """The vector field (a, b) = (phi_dot, dS_dot - r . phi_dot') at the
    identity, b as a degree-1 jet per angle component."""
    n = s_dot.dim
    a = [f.truncate(order) for f in phi_dot]
    b = []
    for j in range(n):
        comps = {(0,) * n: s_dot.partial_derivative(j).truncate(order)}
        for l in range(n):
            el = tuple(1 if i == l else 0 for i in range(n))
            comps[el] = -a[l].partial_derivative(j)
        b.append(ActionJet(n, order, degree, comps))
    return a, b


def _jet_times_series(f, jet):
    comps = {m: f.multiply(g, order=jet.order)
             for m, g in jet.comps.items() if not g.is_zero()}
    return ActionJet(jet.dim, jet.order, jet.degree, comps)


def _directional(jet, a, b):
    """F' . (a, b) = sum_j dF/dtheta_j a_j + dF/dr_j b_j on jets."""
    n = jet.dim
    total = ActionJet.zeros(jet.dim, jet.order, jet.degree)
    for j in range(n):
        total = total + _jet_times_series(a[j], jet.dtheta(j))
        total = total + jet.dr(j).multiply(b[j], order=jet.order,
                                           degree=jet.degree)
    return total


def second_derivative_bound(x, dx, dx_hat, s, sigma, order=None):
    """Pulled norm of the second derivative of (K, G, beta) -> K o G + beta.r
    along two tangent directions.

    ``dx`` and ``dx_hat`` are triples (delta_K: ActionJet or None,
    (phi_dot, S_dot) or None, delta_beta ignored -- the operator is
    affine in beta).  The pulled norm cancels the outer composition by
    G, so the value is the plain jet norm of

        dK' . g_hat + dK_hat' . g + K'' . g (x) g_hat

    at width s, with g the transported tangent field of the G-variation.
    Returns the measured constant: value * sigma / (|dx| |dx_hat|) at
    width s + sigma, for comparison against a uniform bound.
    """
    if order is None:
        order = x.K.order
    dk, dg, _ = dx
    dk_hat, dg_hat, _ = dx_hat
    n = x.K.dim
    degree = x.K.degree
    zero = ActionJet.zeros(n, order, degree)

    def field(dgpair):
        if dgpair is None:
            return None
        return _tangent_field(dgpair[0], dgpair[1], order, degree)

    g1 = field(dg)
    g2 = field(dg_hat)
    total = zero
    if dk is not None and g2 is not None:
        total = total + _directional(dk.truncate(order=order), *g2)
    if dk_hat is not None and g1 is not None:
        total = total + _directional(dk_hat.truncate(order=order), *g1)
    if g1 is not None and g2 is not None:
        a1, b1 = g1
        a2, b2 = g2
        k = x.K.truncate(order=order)
        for i in range(n):
            for j in range(n):
                tt = k.dtheta(i).dtheta(j)
                tr = k.dtheta(i).dr(j)
                rt = k.dr(i).dtheta(j)
                rr = k.dr(i).dr(j)
                total = total + _jet_times_series(
                    a1[i].multiply(a2[j], order=order), tt)
                total = total + _jet_times_series(a1[i], tr).multiply(
                    b2[j], order=order, degree=degree)
                total = total + _jet_times_series(a2[j], rt).multiply(
                    b1[i], order=order, degree=degree)
                total = total + rr.multiply(b1[i], order=order,
                                            degree=degree).multiply(
                    b2[j], order=order, degree=degree)
    value = total.jet_norm(s)

    def tangent_norm(dxt):
        dki, dgi, dbi = dxt
        parts = [0.0]
        if dki is not None:
            parts.append(dki.jet_norm(s + sigma))
        if dgi is not None:
            parts.append(max(f.majorant_norm(s + sigma) for f in dgi[0]))
            parts.append(dgi[1].majorant_norm(s + sigma))
        if dbi is not None:
            parts.append(float(np.max(np.abs(np.atleast_1d(dbi)))))
        return max(parts)

    n1 = tangent_norm(dx)
    n2 = tangent_norm(dx_hat)
    if n1 == 0.0 or n2 == 0.0:
        return 0.0
    return value * sigma / (n1 * n2)


@dataclass
class LipschitzReport:
    difference_norm: float
    input_difference: float
    bound: float
    ratio: float
    passed: bool


def lipschitz_check(h, h_hat, x0, schedule, c_prime, tau_prime, sigma,
                    order=None, grid_m=None):
    """Solve for both right-hand sides and test the local Lipschitz bound

        |x_hat - x|_s <= 2 C' sigma^{-tau'} |H_hat - H|_{s + sigma}.
    """
    x, _ = run_newton(h, x0, schedule, order=order, grid_m=grid_m)
    x_hat, _ = run_newton(h_hat, x0, schedule, order=order, grid_m=grid_m)
    s = schedule.s
    diff = max(
        (x_hat.K - x.K).jet_norm(s),
        float(np.max(np.abs(x_hat.beta - x.beta))),
        max((a - b).majorant_norm(s)
            for a, b in zip(x_hat.G.phi.v, x.G.phi.v)),
        (x_hat.G.form.potential - x.G.form.potential).majorant_norm(s),
    )
    dh = (h_hat - h).jet_norm(min(s + sigma, 1.0))
    bound = 2.0 * c_prime * sigma ** (-tau_prime) * dh
    ratio = diff / bound if bound > 0.0 else (0.0 if diff == 0.0 else math.inf)
    return LipschitzReport(difference_norm=diff, input_difference=dh,
                           bound=bound, ratio=ratio, passed=diff <= bound)
