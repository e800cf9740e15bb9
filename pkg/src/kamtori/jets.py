"""Polynomial-in-action germs: H(theta, r) = sum_m H_m(theta) r^m, |m|_1 <= d.

Components are FourierSeries on the same torus.  Operations close over
the truncation degree: anything of order > d in r is discarded.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, SpectralError
from .fourier import FourierSeries, check_strip


@lru_cache(maxsize=64)
def multi_indices(dim, degree):
    """All m in N^dim with |m|_1 <= degree, graded-lexicographic."""
    out = []
    def rec(prefix, remaining, left):
        if remaining == 1:
            for last in range(left + 1):
                out.append(prefix + (last,))
            return
        for head in range(left + 1):
            rec(prefix + (head,), remaining - 1, left - head)
    rec((), dim, degree)
    out.sort(key=lambda m: (sum(m), m))
    return tuple(out)


class ActionJet:
    """Hamiltonian germ, polynomial in the actions with Fourier coefficients."""

    __slots__ = ("dim", "order", "degree", "comps")

    def __init__(self, dim, order, degree, comps=None):
        self.dim = int(dim)
        self.order = int(order)
        self.degree = int(degree)
        zero = FourierSeries.zeros(dim, order)
        table = {}
        comps = comps or {}
        for m in multi_indices(dim, degree):
            f = comps.get(m)
            if f is None:
                table[m] = zero
            else:
                if f.dim != dim:
                    raise DimensionMismatch("component dim mismatch")
                table[m] = f.truncate(order) if f.order != order else f
        extra = set(comps) - set(table)
        if extra:
            raise SpectralError(f"components beyond degree {degree}: {sorted(extra)}")
        self.comps = table

    # -- constructors ---------------------------------------------------

    @classmethod
    def zeros(cls, dim, order, degree):
        return cls(dim, order, degree)

    @classmethod
    def constant(cls, dim, order, degree, value):
        return cls(dim, order, degree,
                   {(0,) * dim: FourierSeries.constant(dim, order, value)})

    @classmethod
    def linear_in_r(cls, dim, order, degree, beta):
        """beta . r as a jet."""
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        comps = {}
        for j in range(dim):
            m = tuple(1 if i == j else 0 for i in range(dim))
            comps[m] = FourierSeries.constant(dim, order, beta[j])
        return cls(dim, order, degree, comps)

    @classmethod
    def normal_form(cls, dim, order, degree, c, alpha, q):
        """c + alpha.r + r.Q r with constant symmetric Q."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        q = np.atleast_2d(np.asarray(q, dtype=float))
        comps = {(0,) * dim: FourierSeries.constant(dim, order, c)}
        for j in range(dim):
            ej = tuple(1 if i == j else 0 for i in range(dim))
            comps[ej] = FourierSeries.constant(dim, order, alpha[j])
        for j in range(dim):
            for l in range(j, dim):
                m = tuple((1 if i == j else 0) + (1 if i == l else 0)
                          for i in range(dim))
                val = q[j, j] if j == l else 2.0 * q[j, l]
                comps[m] = FourierSeries.constant(dim, order, val)
        return cls(dim, order, degree, comps)

    def replace(self, updates):
        comps = dict(self.comps)
        comps.update(updates)
        return ActionJet(self.dim, self.order, self.degree, comps)

    # -- accessors -------------------------------------------------------

    def component(self, m):
        return self.comps[tuple(m)]

    def constant_part(self):
        return self.comps[(0,) * self.dim]

    def linear_part(self):
        """List of the n series multiplying r_j."""
        out = []
        for j in range(self.dim):
            ej = tuple(1 if i == j else 0 for i in range(self.dim))
            out.append(self.comps[ej])
        return out

    def hessian_half(self):
        """Symmetric matrix K2 of series with r.K2 r = degree-2 part."""
        n = self.dim
        mat = [[None] * n for _ in range(n)]
        for j in range(n):
            for l in range(n):
                m = tuple((1 if i == j else 0) + (1 if i == l else 0)
                          for i in range(n))
                f = self.comps.get(m, FourierSeries.zeros(n, self.order))
                mat[j][l] = f if j == l else 0.5 * f
        return mat

    def order_slice(self, lo, hi=None):
        """Jet keeping only r-degrees in [lo, hi]."""
        hi = self.degree if hi is None else hi
        comps = {m: f for m, f in self.comps.items() if lo <= sum(m) <= hi}
        return ActionJet(self.dim, self.order, self.degree, comps)

    def min_r_degree(self, tol=0.0):
        degs = [sum(m) for m, f in self.comps.items() if not f.is_zero(tol)]
        return min(degs) if degs else None

    # -- algebra -----------------------------------------------------------

    def _check(self, other):
        if other.dim != self.dim:
            raise DimensionMismatch("jet dim mismatch")

    def __add__(self, other):
        if np.isscalar(other):
            zero = (0,) * self.dim
            return self.replace({zero: self.comps[zero] + other})
        self._check(other)
        order = max(self.order, other.order)
        degree = max(self.degree, other.degree)
        comps = {}
        for m in multi_indices(self.dim, degree):
            a = self.comps.get(m)
            b = other.comps.get(m)
            if a is None:
                comps[m] = b
            elif b is None:
                comps[m] = a
            else:
                comps[m] = a + b
        return ActionJet(self.dim, order, degree, comps)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-other)
        return self + other.scale(-1.0)

    def scale(self, factor):
        return ActionJet(self.dim, self.order, self.degree,
                         {m: f * factor for m, f in self.comps.items()})

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        return self.multiply(other)

    __rmul__ = __mul__

    def multiply(self, other, order=None, degree=None):
        """Jet product; degree defaults to max of the operands (truncation)."""
        self._check(other)
        degree = degree if degree is not None else max(self.degree, other.degree)
        order = order if order is not None else max(self.order, other.order)
        acc = {}
        for ma, fa in self.comps.items():
            if fa.is_zero():
                continue
            for mb, fb in other.comps.items():
                if fb.is_zero():
                    continue
                m = tuple(a + b for a, b in zip(ma, mb))
                if sum(m) > degree:
                    continue
                prod = fa.multiply(fb, order=order)
                acc[m] = acc[m] + prod if m in acc else prod
        return ActionJet(self.dim, order, degree, acc)

    def truncate(self, order=None, degree=None):
        order = self.order if order is None else order
        degree = self.degree if degree is None else degree
        comps = {m: f.truncate(order) for m, f in self.comps.items()
                 if sum(m) <= degree}
        return ActionJet(self.dim, order, degree, comps)

    # -- calculus ------------------------------------------------------------

    def dtheta(self, axis):
        return ActionJet(self.dim, self.order, self.degree,
                         {m: f.partial_derivative(axis)
                          for m, f in self.comps.items()})

    def dr(self, axis):
        comps = {}
        for m, f in self.comps.items():
            if m[axis] == 0:
                continue
            m2 = tuple(mj - (1 if i == axis else 0) for i, mj in enumerate(m))
            comps[m2] = f * float(m[axis])
        return ActionJet(self.dim, self.order, self.degree, comps)

    def poisson_bracket(self, other, order=None, degree=None):
        """{F, G} = sum_j (dF/dr_j dG/dtheta_j - dF/dtheta_j dG/dr_j).

        With this sign {H, f} is the derivative of f along the Hamiltonian
        vector field of H (thetadot = dH/dr, rdot = -dH/dtheta); in
        particular {alpha.r, f(theta)} = L_alpha f.
        """
        self._check(other)
        degree = degree if degree is not None else max(self.degree, other.degree)
        order = order if order is not None else max(self.order, other.order)
        out = ActionJet.zeros(self.dim, order, degree)
        for j in range(self.dim):
            out = out + self.dr(j).multiply(other.dtheta(j), order, degree)
            out = out - self.dtheta(j).multiply(other.dr(j), order, degree)
        return out

    def lie_derivative(self, alpha):
        return ActionJet(self.dim, self.order, self.degree,
                         {m: f.lie_derivative(alpha)
                          for m, f in self.comps.items()})

    # -- norms and evaluation --------------------------------------------------

    def jet_norm(self, s):
        """Majorant bound on sup over the polydisc |Im theta|, |r_j| <= s."""
        check_strip(s)
        total = 0.0
        for m, f in self.comps.items():
            total += f.majorant_norm(s) * s ** sum(m)
        return total

    def sup_norm_estimate(self, s, t, oversample=4, phase_samples=8):
        """Grid estimate of sup |H| over |Im theta_j| <= s, |r_j| <= t.

        The polydisc boundary |r_j| = t is sampled at phase_samples
        angles per action axis; the strip boundary as in FourierSeries.
        """
        if oversample < 2:
            raise SpectralError("oversample factor must be >= 2")
        m_grid = oversample * (2 * self.order + 1)
        nu = 2.0 * np.pi * np.arange(phase_samples) / phase_samples
        k = np.arange(-self.order, self.order + 1)
        from .fourier import _to_grid_box

        best = 0.0
        for signs in np.ndindex(*(2,) * self.dim):
            eps = np.array([1.0 if b == 0 else -1.0 for b in signs])
            # values of each component on this boundary torus
            comp_vals = {}
            for m, f in self.comps.items():
                if f.is_zero():
                    continue
                scaled = f.coeffs.copy()
                for ax in range(self.dim):
                    shape = [1] * self.dim
                    shape[ax] = 2 * self.order + 1
                    scaled *= np.exp(-k * eps[ax] * s).reshape(shape)
                comp_vals[m] = _to_grid_box(scaled, self.order, m_grid)
            for phases in np.ndindex(*(phase_samples,) * self.dim):
                r = t * np.exp(1j * nu[list(phases)])
                acc = 0.0
                for m, vals in comp_vals.items():
                    acc = acc + vals * np.prod(r ** np.array(m))
                best = max(best, float(np.max(np.abs(acc))))
        return best

    def eval(self, theta_points, r):
        """H(theta, r) for points (..., dim) and a single action vector r."""
        r = np.atleast_1d(np.asarray(r))
        total = None
        for m, f in self.comps.items():
            if f.is_zero():
                continue
            term = f.eval(theta_points) * np.prod(r ** np.array(m))
            total = term if total is None else total + term
        if total is None:
            pts = np.asarray(theta_points)
            shape = pts.shape[:-1]
            return np.zeros(shape)
        return total

    def translate(self, R):
        """Exact recentering H(theta, R + r), degree preserved."""
        from math import comb

        R = np.atleast_1d(np.asarray(R, dtype=float))
        if R.shape != (self.dim,):
            raise DimensionMismatch("translation vector has wrong length")
        acc = {}
        for m, f in self.comps.items():
            if f.is_zero():
                continue
            # (R + r)^m = sum_{p <= m} prod_j C(m_j, p_j) R_j^{m_j - p_j} r^p
            for p in np.ndindex(*(mj + 1 for mj in m)):
                w = 1.0
                for j in range(self.dim):
                    w *= comb(m[j], p[j]) * R[j] ** (m[j] - p[j])
                if w == 0.0:
                    continue
                key = tuple(p)
                term = f * w
                acc[key] = acc[key] + term if key in acc else term
        return ActionJet(self.dim, self.order, self.degree, acc)

    def max_abs_coeff(self):
        return max(
            (float(np.max(np.abs(f.coeffs))) for f in self.comps.values()),
            default=0.0,
        )

    def __repr__(self):
        return (f"ActionJet(dim={self.dim}, order={self.order}, "
                f"degree={self.degree})")
