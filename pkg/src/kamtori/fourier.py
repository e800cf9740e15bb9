"""Truncated Fourier series on the n-torus with strip-norm machinery.

A series is stored as a dense complex coefficient box indexed by
k in [-N, N]^n.  All operations are pure: every method returns a new
instance and coefficient arrays are frozen after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionMismatch, GridTooSmall, SpectralError, TailError

REALITY_TOL = 1e-14


def check_strip(s):
    """Validate a strip half-width: all widths live in (0, 1]."""
    if not (0.0 < s <= 1.0):
        raise SpectralError(f"strip width must be in (0, 1], got {s}")
    return float(s)


@lru_cache(maxsize=64)
def grid_points(m, dim):
    """Equispaced product grid of m points per axis, flattened (m^dim, dim)."""
    axis = 2.0 * np.pi * np.arange(m) / m
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in mesh], axis=-1)
    pts.flags.writeable = False
    return pts


def _hermitize(coeffs):
    """Project a coefficient box onto the conjugate-symmetric subspace."""
    rev = tuple(slice(None, None, -1) for _ in range(coeffs.ndim))
    return 0.5 * (coeffs + np.conj(coeffs[rev]))


class FourierSeries:
    """Trigonometric polynomial sum_k c_k e^{i k.theta}, |k_j| <= order."""

    __slots__ = ("dim", "order", "coeffs", "real_flag")

    def __init__(self, dim, order, coeffs=None, real_flag=False):
        self.dim = int(dim)
        self.order = int(order)
        shape = (2 * self.order + 1,) * self.dim
        if coeffs is None:
            c = np.zeros(shape, dtype=complex)
        else:
            c = np.asarray(coeffs, dtype=complex)
            if c.shape != shape:
                raise DimensionMismatch(
                    f"coefficient box {c.shape} does not match order {order}, dim {dim}"
                )
            c = c.copy()
        if real_flag:
            c = _hermitize(c)
        c.flags.writeable = False
        self.coeffs = c
        self.real_flag = bool(real_flag)

    # -- constructors -------------------------------------------------

    @classmethod
    def zeros(cls, dim, order, real_flag=True):
        return cls(dim, order, None, real_flag)

    @classmethod
    def constant(cls, dim, order, value):
        c = np.zeros((2 * order + 1,) * dim, dtype=complex)
        c[(order,) * dim] = value
        return cls(dim, order, c, real_flag=(np.imag(value) == 0.0))

    @classmethod
    def from_dict(cls, dim, order, entries, real_flag=False):
        """Build from {k-tuple: coefficient}; k components in [-order, order]."""
        c = np.zeros((2 * order + 1,) * dim, dtype=complex)
        for k, val in entries.items():
            idx = tuple(int(kj) + order for kj in k)
            if any(i < 0 or i > 2 * order for i in idx):
                raise GridTooSmall(f"mode {k} outside box of order {order}")
            c[idx] += val
        return cls(dim, order, c, real_flag)

    @classmethod
    def harmonic(cls, dim, order, k, amplitude=1.0):
        """cos(k.theta) scaled; pass amplitude to weight it."""
        a = 0.5 * amplitude
        return cls.from_dict(
            dim, order,
            {tuple(k): a, tuple(-kj for kj in k): np.conj(a)},
            real_flag=(np.imag(amplitude) == 0.0),
        )

    @classmethod
    def random(cls, dim, order, rng, scale=1.0, decay=0.5):
        """Random real series with exponentially decaying coefficients."""
        shape = (2 * order + 1,) * dim
        k = mode_vectors(dim, order)
        k1 = np.abs(k).sum(axis=-1)
        mag = scale * np.exp(-decay * k1)
        c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mag
        return cls(dim, order, c, real_flag=True)

    # -- basic accessors ----------------------------------------------

    def coefficient(self, k):
        idx = tuple(int(kj) + self.order for kj in k)
        return complex(self.coeffs[idx])

    def average(self):
        """The k = 0 coefficient."""
        val = self.coeffs[(self.order,) * self.dim]
        return float(val.real) if self.real_flag else complex(val)

    def value_at_zero(self):
        """f(0) = sum of all coefficients."""
        val = self.coeffs.sum()
        return float(val.real) if self.real_flag else complex(val)

    def reality_defect(self):
        """Max |c_{-k} - conj(c_k)| over the box."""
        rev = tuple(slice(None, None, -1) for _ in range(self.dim))
        return float(np.max(np.abs(self.coeffs[rev] - np.conj(self.coeffs))))

    def is_zero(self, tol=0.0):
        return float(np.max(np.abs(self.coeffs))) <= tol

    # -- algebra -------------------------------------------------------

    def _check_compatible(self, other):
        if not isinstance(other, FourierSeries):
            raise TypeError("operand must be a FourierSeries")
        if other.dim != self.dim:
            raise DimensionMismatch(
                f"dim mismatch: {self.dim} vs {other.dim}"
            )

    def __add__(self, other):
        if np.isscalar(other):
            c = self.coeffs.copy()
            c[(self.order,) * self.dim] += other
            return FourierSeries(self.dim, self.order, c,
                                 self.real_flag and np.imag(other) == 0.0)
        self._check_compatible(other)
        n = max(self.order, other.order)
        a = self.pad(n) if self.order < n else self
        b = other.pad(n) if other.order < n else other
        return FourierSeries(self.dim, n, a.coeffs + b.coeffs,
                             self.real_flag and other.real_flag)

    __radd__ = __add__

    def __neg__(self):
        return FourierSeries(self.dim, self.order, -self.coeffs, self.real_flag)

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-other)
        return self + (-other)

    def __mul__(self, other):
        if np.isscalar(other):
            return FourierSeries(self.dim, self.order, self.coeffs * other,
                                 self.real_flag and np.imag(other) == 0.0)
        return self.multiply(other)

    __rmul__ = __mul__

    def multiply(self, other, order=None):
        """Exact convolution of the coefficient boxes (no aliasing).

        The result has order ``self.order + other.order`` unless a
        truncation order is requested.
        """
        self._check_compatible(other)
        full = fftconvolve(self.coeffs, other.coeffs)
        n = self.order + other.order
        out = FourierSeries(self.dim, n, full,
                            self.real_flag and other.real_flag)
        if order is not None and order != n:
            out = out.truncate(order)
        return out

    def truncate(self, order):
        """Project onto the box [-order, order]^n (pad with zeros if larger)."""
        if order == self.order:
            return self
        if order > self.order:
            return self.pad(order)
        lo = self.order - order
        hi = self.order + order + 1
        sl = tuple(slice(lo, hi) for _ in range(self.dim))
        return FourierSeries(self.dim, order, self.coeffs[sl], self.real_flag)

    def pad(self, order):
        if order < self.order:
            return self.truncate(order)
        c = np.zeros((2 * order + 1,) * self.dim, dtype=complex)
        lo = order - self.order
        hi = order + self.order + 1
        sl = tuple(slice(lo, hi) for _ in range(self.dim))
        c[sl] = self.coeffs
        return FourierSeries(self.dim, order, c, self.real_flag)

    def hermitized(self):
        return FourierSeries(self.dim, self.order, self.coeffs, real_flag=True)

    # -- calculus ------------------------------------------------------

    def partial_derivative(self, axis):
        """d/d theta_axis: c_k -> i k_axis c_k.  Axis is 0-based."""
        if not (0 <= axis < self.dim):
            raise SpectralError(f"axis {axis} out of range for dim {self.dim}")
        k = np.arange(-self.order, self.order + 1)
        shape = [1] * self.dim
        shape[axis] = 2 * self.order + 1
        factor = 1j * k.reshape(shape)
        return FourierSeries(self.dim, self.order, self.coeffs * factor,
                             self.real_flag)

    def lie_derivative(self, alpha):
        """Directional derivative along the constant field alpha: c_k -> i(k.alpha)c_k."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        if alpha.shape != (self.dim,):
            raise DimensionMismatch(
                f"alpha has {alpha.shape}, series dim is {self.dim}"
            )
        kdot = _k_dot_alpha(self.dim, self.order, tuple(alpha))
        return FourierSeries(self.dim, self.order, self.coeffs * 1j * kdot,
                             self.real_flag)

    # -- norms -----------------------------------------------------------

    def majorant_norm(self, s):
        """Weighted-l1 bound sum_k |c_k| e^{|k|_1 s} on the strip sup norm."""
        check_strip(s) if s > 0 else None
        if s < 0:
            raise SpectralError("strip width must be nonnegative")
        w = _l1_weights(self.dim, self.order, float(s))
        return float(np.sum(np.abs(self.coeffs) * w))

    def sup_norm_estimate(self, s, oversample=4, refine=False):
        """Grid estimate of sup |f| over the closed strip |Im theta_j| <= s.

        By the maximum principle the sup is attained on a distinguished
        boundary torus Im theta = (eps_1 s, ..., eps_n s), eps_j = +-1.
        Each such torus is sampled on an oversample*(2N+1) grid; with
        ``refine`` the best grid point is polished by local optimization.
        """
        if oversample < 2:
            raise SpectralError("oversample factor must be >= 2")
        if s < 0:
            raise SpectralError("strip width must be nonnegative")
        m = oversample * (2 * self.order + 1)
        best = 0.0
        best_arg = None
        k = np.arange(-self.order, self.order + 1)
        for signs in np.ndindex(*(2,) * self.dim):
            eps = np.array([1.0 if b == 0 else -1.0 for b in signs])
            scaled = self.coeffs.copy()
            for ax in range(self.dim):
                shape = [1] * self.dim
                shape[ax] = 2 * self.order + 1
                scaled *= np.exp(-k * eps[ax] * s).reshape(shape)
            vals = np.abs(_to_grid_box(scaled, self.order, m))
            idx = np.unravel_index(np.argmax(vals), vals.shape)
            if vals[idx] > best:
                best = float(vals[idx])
                best_arg = (np.array(idx) * 2.0 * np.pi / m, eps)
        if refine and best_arg is not None and best > 0.0:
            from scipy.optimize import minimize

            theta0, eps = best_arg

            def negmod(x):
                pt = x + 1j * eps * s
                return -abs(self.eval(pt[None, :])[0])

            res = minimize(negmod, theta0, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-14})
            best = max(best, float(-res.fun))
        return best

    # -- grids and evaluation -------------------------------------------

    def to_grid(self, m=None):
        """Values on the equispaced m^n grid (m >= 2N+1), as an n-d array."""
        if m is None:
            m = 2 * self.order + 1
        if m < 2 * self.order + 1:
            raise GridTooSmall(
                f"grid {m} per axis cannot represent order {self.order}"
            )
        vals = _to_grid_box(self.coeffs, self.order, m)
        if self.real_flag:
            return vals.real
        return vals

    @classmethod
    def from_grid(cls, values, order, real_flag=None, tail_tol=None,
                  tail_scale=None, chop=1e-15):
        """Recover coefficients of the box [-order, order]^n from samples.

        ``values`` is an m^n array of samples on the equispaced grid.
        When ``tail_tol`` is given, the l2 energy of modes outside the
        box must be below tail_tol times the total or TailError is raised.
        ``tail_scale`` sets the amplitude the tail is measured against
        (default: the sampled signal itself); pass the size of the inputs
        when the output may be a small difference of large quantities.
        """
        values = np.asarray(values)
        dim = values.ndim
        m = values.shape[0]
        if any(sz != m for sz in values.shape):
            raise GridTooSmall("grid must be square")
        if m < 2 * order + 1:
            raise GridTooSmall(
                f"grid {m} per axis is too small for order {order} (aliasing)"
            )
        if real_flag is None:
            real_flag = bool(np.isrealobj(values)) or (
                float(np.max(np.abs(values.imag))) <= 1e-13 * max(1.0, float(np.max(np.abs(values))))
            )
        spec = np.fft.fftn(values) / values.size
        idx = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        keep = np.abs(idx) <= order
        if tail_tol is not None:
            total = float(np.sum(np.abs(spec) ** 2))
            inbox = spec
            for ax in range(dim):
                inbox = np.compress(keep, inbox, axis=ax)
            kept = float(np.sum(np.abs(inbox) ** 2))
            tail = total - kept
            # Parseval: total is the mean square of the samples, so an
            # amplitude scale enters the comparison squared
            denom = total
            if tail_scale is not None:
                denom = max(denom, float(tail_scale) ** 2)
            if denom > 0.0 and tail > tail_tol * denom:
                raise TailError(
                    f"tail energy fraction {tail / denom:.3e} exceeds {tail_tol:.1e}; "
                    "working order too small for this composition"
                )
        c = np.zeros((2 * order + 1,) * dim, dtype=complex)
        sel = np.argsort(idx[keep])  # maps sorted k to fft positions
        pos = np.nonzero(keep)[0][sel]
        grids = np.ix_(*([pos] * dim))
        c[...] = spec[grids]
        if chop:
            # FFT roundoff spreads ~eps * peak uniformly over the spectrum;
            # left in place it dominates wide-strip majorant norms
            floor = chop * float(np.max(np.abs(c)))
            c[np.abs(c) < floor] = 0.0
        return cls(dim, order, c, real_flag=real_flag)

    def eval(self, points):
        """Direct Fourier summation at arbitrary (possibly complex) angles.

        ``points``: array (..., dim).  Returns values with shape (...,).
        """
        points = np.asarray(points)
        single = points.ndim == 1
        pts = np.atleast_2d(points)
        vals = eval_stack(self.coeffs[None, ...], self.order, pts)[0]
        if self.real_flag and np.isrealobj(points):
            vals = vals.real
        return vals[0] if single else vals

    # -- serialization helpers (see serialize.py for the file format) ----

    def nonzero_entries(self, floor=1e-16):
        out = []
        it = np.nditer(self.coeffs, flags=["multi_index"])
        for val in it:
            v = complex(val)
            if abs(v) >= floor:
                k = tuple(i - self.order for i in it.multi_index)
                out.append((k, v))
        return out

    def __repr__(self):
        return (f"FourierSeries(dim={self.dim}, order={self.order}, "
                f"real={self.real_flag}, l1={self.majorant_norm(0.0):.3e})")


# -- module-level helpers ------------------------------------------------


@lru_cache(maxsize=64)
def mode_vectors(dim, order):
    """Array (2N+1)^n x n of integer mode vectors in box order."""
    k = np.arange(-order, order + 1)
    mesh = np.meshgrid(*([k] * dim), indexing="ij")
    out = np.stack(mesh, axis=-1)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=128)
def _l1_weights(dim, order, s):
    k = np.abs(np.arange(-order, order + 1))
    w = np.exp(k * s)
    out = w
    for _ in range(dim - 1):
        out = np.multiply.outer(out, w)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=128)
def _k_dot_alpha(dim, order, alpha):
    k = np.arange(-order, order + 1, dtype=float)
    out = np.zeros((2 * order + 1,) * dim)
    for ax, a in enumerate(alpha):
        shape = [1] * dim
        shape[ax] = 2 * order + 1
        out = out + (a * k).reshape(shape)
    out.flags.writeable = False
    return out


def _to_grid_box(coeffs, order, m):
    """ifft-based synthesis of a coefficient box on an m^n grid."""
    dim = coeffs.ndim
    spec = np.zeros((m,) * dim, dtype=complex)
    idx = (np.arange(-order, order + 1)) % m
    grids = np.ix_(*([idx] * dim))
    spec[grids] += coeffs
    return np.fft.ifftn(spec) * (m ** dim)


def eval_stack(stack, order, points):
    """Evaluate several coefficient boxes at the same points.

    stack: (C,) + (2N+1,)^dim array; points: (P, dim) real or complex.
    Returns (C, P) complex values.  Cost is dominated by one matrix
    product of size (C*(2N+1)^{dim-1}) x (2N+1) x P.
    """
    stack = np.asarray(stack, dtype=complex)
    points = np.asarray(points)
    dim = stack.ndim - 1
    if points.shape[-1] != dim:
        raise DimensionMismatch("points have wrong number of angle components")
    k = np.arange(-order, order + 1)
    out = stack
    for ax in range(dim):
        z = np.exp(1j * np.multiply.outer(k, points[:, ax]))  # (2N+1, P)
        if ax == 0:
            out = np.tensordot(out, z, axes=([1], [0]))
            # shape (C, remaining axes..., P)
        else:
            # contract current axis 1 against z, sharing the point axis
            out = np.einsum("ci...p,ip->c...p", out, z, optimize=True)
    return out


def product_average(f, g):
    """Exact torus average of f*g: sum_k f_k g_{-k}."""
    if f.dim != g.dim:
        raise DimensionMismatch("dim mismatch in product_average")
    n = max(f.order, g.order)
    a = f.pad(n).coeffs
    b = g.pad(n).coeffs
    rev = tuple(slice(None, None, -1) for _ in range(f.dim))
    val = np.sum(a * b[rev])
    if f.real_flag and g.real_flag:
        return float(val.real)
    return complex(val)


# -- Hadamard interpolation checks ----------------------------------------


@dataclass
class HadamardReport:
    norm_inner: float
    norm_mid: float
    norm_outer: float
    sigma_tilde: float
    lhs: float
    rhs: float
    slack: float
    ok: bool


def verify_hadamard(f, s, sigma, oversample=4, refine=True, rel_tol=1e-12):
    """Check the three-width interpolation |f|_{s+sigma}^2 <= |f|_s |f|_{s+sigma~}.

    sigma~ = sigma (1 + 1/s).  The three norms are grid sup estimates
    (optionally polished by local optimization).  Works for FourierSeries
    and, via phase sampling of the action polydisc, for ActionJet.
    """
    check_strip(s)
    sigma_tilde = sigma * (1.0 + 1.0 / s)
    if s + sigma_tilde > 1.0 + 1e-15:
        raise SpectralError(
            f"width constraint violated: s + sigma(1+1/s) = {s + sigma_tilde:.4f} > 1"
        )
    norm = _sup_estimate_any
    n_in = norm(f, s, oversample, refine)
    n_mid = norm(f, s + sigma, oversample, refine)
    n_out = norm(f, s + sigma_tilde, oversample, refine)
    lhs = n_mid ** 2
    rhs = n_in * n_out
    slack = (rhs - lhs) / max(rhs, 1e-300)
    return HadamardReport(n_in, n_mid, n_out, sigma_tilde, lhs, rhs, slack,
                          ok=(slack >= -rel_tol))


def _sup_estimate_any(f, s, oversample, refine):
    if isinstance(f, FourierSeries):
        return f.sup_norm_estimate(s, oversample=oversample, refine=refine)
    return f.sup_norm_estimate(s, s, oversample=oversample)


def verify_hadamard_mixed(f, s0, s1, t0, t1, rho, oversample=4, rel_tol=1e-12):
    """Mixed-domain interpolation on strips x polydiscs.

    Requires log(t1/t0) = s1 - s0.  Checks
    |f|_{s,t} <= |f|_{s0,t0}^{1-rho} |f|_{s1,t1}^{rho}
    with s = (1-rho)s0 + rho s1 and t = t0^{1-rho} t1^rho.
    """
    if abs(np.log(t1 / t0) - (s1 - s0)) > 1e-12:
        raise SpectralError("parameters must satisfy log(t1/t0) = s1 - s0")
    if not (0.0 <= rho <= 1.0):
        raise SpectralError("rho must lie in [0, 1]")
    s = (1.0 - rho) * s0 + rho * s1
    t = t0 ** (1.0 - rho) * t1 ** rho
    n_mid = f.sup_norm_estimate(s, t, oversample=oversample)
    n0 = f.sup_norm_estimate(s0, t0, oversample=oversample)
    n1 = f.sup_norm_estimate(s1, t1, oversample=oversample)
    rhs = n0 ** (1.0 - rho) * n1 ** rho
    slack = (rhs - n_mid) / max(rhs, 1e-300)
    return HadamardReport(n0, n_mid, n1, t, n_mid, rhs, slack,
                          ok=(slack >= -rel_tol))
