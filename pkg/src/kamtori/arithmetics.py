"""Diophantine certificates, the cohomological equation, and the
generalized (approximation-function) small-divisor machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, ResonanceError, SpectralError
from .fourier import FourierSeries, _k_dot_alpha

OVERFLOW_GUARD = 1e100


# -- frequency vectors ------------------------------------------------------


@dataclass(frozen=True)
class FrequencyVector:
    """Frequency alpha with a brute-force Diophantine certificate.

    For all 0 < |k|_1 <= k_max the certificate guarantees
    |k . alpha| >= gamma |k|_1^{-tau}.
    """

    alpha: tuple
    tau: float
    gamma: float
    k_max: int
    witness: tuple = ()

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ResonanceError(
                f"alpha = {self.alpha} is resonant within |k| <= {self.k_max} "
                f"(witness {self.witness})"
            )

    @property
    def dim(self):
        return len(self.alpha)

    @property
    def vector(self):
        return np.asarray(self.alpha, dtype=float)

    @classmethod
    def certify(cls, alpha, tau, k_max):
        rep = diophantine_constant(alpha, tau, k_max)
        return cls(tuple(float(a) for a in np.atleast_1d(alpha)), float(tau),
                   rep.gamma, int(k_max), tuple(rep.witness))


@dataclass
class DiophantineReport:
    gamma: float
    witness: tuple
    k_max: int
    gamma_half: float
    stability_ratio: float
    resonant: bool

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "witness_k": list(self.witness),
            "k_max": self.k_max,
            "gamma_at_half_k_max": self.gamma_half,
            "stability_ratio": self.stability_ratio,
            "resonant": self.resonant,
        }


def _min_small_divisor(alpha, tau, k_max):
    """Brute-force min of |k.alpha| |k|_1^tau over 0 < |k|_1 <= k_max.

    Only the canonical half (first nonzero component positive) is scanned.
    Returns (minimum, witness tuple, min at k_max // 2).
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    n = alpha.size
    best = math.inf
    best_half = math.inf
    witness = None
    half = k_max // 2

    def scan(prefix, prefix_l1, canonical_started):
        nonlocal best, best_half, witness
        depth = len(prefix)
        left = k_max - prefix_l1
        base = float(np.dot(prefix, alpha[:depth])) if depth else 0.0
        if depth == n - 1:
            lo = 1 if not canonical_started else -left
            ks = np.arange(lo, left + 1)
            if canonical_started:
                pass
            elif ks.size == 0:
                return
            vals = np.abs(base + ks * alpha[-1])
            l1 = prefix_l1 + np.abs(ks)
            mask = l1 > 0
            scaled = np.where(mask, vals * l1.astype(float) ** tau, math.inf)
            i = int(np.argmin(scaled))
            if scaled[i] < best:
                best = float(scaled[i])
                witness = tuple(int(p) for p in prefix) + (int(ks[i]),)
            inner = scaled[l1 <= half] if half > 0 else np.array([])
            if inner.size:
                best_half = min(best_half, float(np.min(inner)))
            return
        lo = 1 if not canonical_started else -left
        for kd in range(lo, left + 1) if not canonical_started else range(-left, left + 1):
            scan(prefix + [kd], prefix_l1 + abs(kd), canonical_started or kd != 0)
        if not canonical_started:
            # leading zeros: descend with k_d = 0
            scan(prefix + [0], prefix_l1, False)

    if n == 1:
        ks = np.arange(1, k_max + 1, dtype=float)
        scaled = np.abs(ks * alpha[0]) * ks ** tau
        i = int(np.argmin(scaled))
        best = float(scaled[i])
        witness = (int(ks[i]),)
        if half >= 1:
            best_half = float(np.min(scaled[: half]))
    elif n == 2:
        # vectorized over k2 for each k1
        for k1 in range(0, k_max + 1):
            left = k_max - k1
            k2 = np.arange(1 if k1 == 0 else -left, left + 1)
            if k2.size == 0:
                continue
            l1 = k1 + np.abs(k2)
            mask = l1 > 0
            vals = np.abs(k1 * alpha[0] + k2 * alpha[1])
            scaled = np.where(mask, vals * l1.astype(float) ** tau, math.inf)
            i = int(np.argmin(scaled))
            if scaled[i] < best:
                best = float(scaled[i])
                witness = (k1, int(k2[i]))
            sel = scaled[l1 <= half]
            if sel.size:
                best_half = min(best_half, float(np.min(sel)))
    else:
        scan([], 0, False)

    return best, witness, best_half


def diophantine_constant(alpha, tau, k_max):
    """gamma = min over the box of |k.alpha| |k|_1^tau, with stability report.

    Resonance (gamma == 0 to machine precision) is reported, not raised.
    """
    if k_max < 1:
        raise SpectralError("k_max must be >= 1")
    best, witness, best_half = _min_small_divisor(alpha, tau, k_max)
    resonant = best <= 1e-15
    ratio = best / best_half if best_half not in (0.0, math.inf) else 1.0
    return DiophantineReport(
        gamma=0.0 if resonant else best,
        witness=witness or (),
        k_max=int(k_max),
        gamma_half=0.0 if best_half == math.inf else best_half,
        stability_ratio=ratio,
        resonant=resonant,
    )


# -- cohomological equation ---------------------------------------------------


def solve_cohomological(g, alpha, average_tol=1e-12):
    """Unique zero-average f with L_alpha f = g (g must have zero average).

    Diagonal solve f_k = g_k / (i k.alpha); exact on the retained box.
    ``alpha`` is a FrequencyVector or a plain vector (then resonance is
    only checked within the coefficient box).
    """
    vec = alpha.vector if isinstance(alpha, FrequencyVector) else \
        np.atleast_1d(np.asarray(alpha, dtype=float))
    scale = max(g.majorant_norm(0.0), 1.0)
    if abs(g.average()) > average_tol * scale:
        raise SpectralError(
            f"right-hand side has nonzero average {g.average():.3e}; "
            "split off the mean before solving"
        )
    kdot = np.array(_k_dot_alpha(g.dim, g.order, tuple(vec)))
    center = (g.order,) * g.dim
    mask = np.ones_like(kdot, dtype=bool)
    mask[center] = False
    if np.any(np.abs(kdot[mask]) < 1e-15):
        raise ResonanceError("resonant mode inside the coefficient box")
    denom = 1j * kdot
    denom[center] = 1.0  # avoid division warning; zeroed below
    c = g.coeffs / denom
    c[center] = 0.0
    return FourierSeries(g.dim, g.order, c, g.real_flag)


def cohomological_bound(n, tau, gamma, sigma):
    """Explicit constant chain for the small-divisor loss of width sigma:

        |f|_s <= C0 gamma^-1 sigma^-(tau+n) |g|_{s+sigma},
        C0 = 4^n e^n Gamma(tau + n) / (n-1)!.
    """
    if not (0.0 < sigma <= 1.0):
        raise SpectralError("sigma must be in (0, 1]")
    c0 = 4.0 ** n * math.exp(n) * math.gamma(tau + n) / math.factorial(n - 1)
    return c0 / gamma * sigma ** (-(tau + n))


# -- approximation functions (generalized arithmetic conditions) ---------------


class ApproximationFunction:
    """Monotone profile Delta: N+ -> [1, inf) bounding inverse small divisors.

    alpha belongs to the associated class when
    |k.alpha| >= (|k|+n-1)^{n-1} / Delta(|k|) for all k != 0.

    ``envelope`` is an optional (A, b) pair certifying Delta(l) <= A e^{b l}
    for all l; it enables a geometric tail bound in the Laplace transform.
    """

    def __init__(self, func=None, table=None, envelope=None, name="Delta"):
        if (func is None) == (table is None):
            raise SpectralError("provide exactly one of func / table")
        self._func = func
        if table is not None:
            table = np.asarray(table, dtype=float)
            table = np.maximum.accumulate(np.maximum(table, 1.0))
            self._table = table
        else:
            self._table = None
        self.envelope = envelope
        self.name = name

    def __call__(self, ell):
        ell = np.asarray(ell)
        if self._table is not None:
            idx = np.clip(ell - 1, 0, self._table.size - 1).astype(int)
            return self._table[idx]
        return np.maximum(np.asarray(self._func(ell), dtype=float), 1.0)

    @property
    def tabulated(self):
        return self._table is not None

    @classmethod
    def one(cls):
        return cls(func=lambda ell: np.ones_like(np.asarray(ell, dtype=float)),
                   envelope=(1.0, 0.0), name="1")

    @classmethod
    def diophantine(cls, gamma, tau, n):
        """Profile making D_{gamma,tau} a subset of the generalized class."""
        def func(ell):
            ell = np.asarray(ell, dtype=float)
            return ell ** tau * (ell + n - 1.0) ** (n - 1) / gamma

        obj = cls(func=func, name=f"diophantine(gamma={gamma:.3g}, tau={tau:g})")
        obj._poly_degree = tau + n - 1
        obj._poly_gamma = gamma
        return obj

    def polynomial_envelope(self, b):
        """For the Diophantine profile: (A, b) with Delta(l) <= A e^{b l}."""
        deg = getattr(self, "_poly_degree", None)
        if deg is None or b <= 0.0:
            return None
        ell_star = max(1.0, deg / b)
        ells = np.arange(1, int(ell_star) + 3, dtype=float)
        a = float(np.max(self(ells) * np.exp(-b * ells)))
        return (a, b)


@dataclass
class LaplaceValue:
    value: float
    tail_bound: float
    certified: bool
    ell_max: int

    @property
    def total(self):
        return self.value + self.tail_bound


def laplace_transform(delta, sigma, ell_max=200_000):
    """Discrete Laplace transform L(sigma) = sum_{l>=1} Delta(l) e^{-l sigma}.

    Partial sum to ell_max plus a geometric tail bound when an exponential
    envelope with rate below sigma is available; otherwise the tail is
    flagged uncertified.  Raises DivergenceError when the terms do not decay.
    """
    if sigma <= 0.0:
        raise SpectralError("sigma must be positive")
    chunk = 100_000
    total = 0.0
    last_term = None
    start = 1
    while start <= ell_max:
        stop = min(start + chunk - 1, ell_max)
        ells = np.arange(start, stop + 1, dtype=float)
        with np.errstate(over="raise"):
            try:
                terms = delta(ells) * np.exp(-ells * sigma)
            except FloatingPointError:
                raise DivergenceError(
                    f"Laplace transform of {delta.name} diverges at sigma={sigma}"
                )
        if not np.all(np.isfinite(terms)) or np.max(terms) > OVERFLOW_GUARD \
                or total > OVERFLOW_GUARD:
            raise DivergenceError(
                f"Laplace transform of {delta.name} diverges at sigma={sigma}"
            )
        total += float(np.sum(terms))
        last_term = float(terms[-1])
        # non-decaying terms over a full chunk: declare divergence
        if terms.size >= 2 and terms[-1] >= terms[0] * (1.0 - 1e-15) \
                and terms[-1] > 1e-300 and stop - start + 1 >= chunk:
            raise DivergenceError(
                f"terms of L(sigma) are not decaying for {delta.name} "
                f"at sigma={sigma}"
            )
        start = stop + 1

    envelope = delta.envelope
    if envelope is None:
        envelope = delta.polynomial_envelope(0.5 * sigma) \
            if hasattr(delta, "polynomial_envelope") else None
    if envelope is not None and envelope[1] < sigma:
        a, b = envelope
        q = math.exp(b - sigma)
        tail = a * q ** (ell_max + 1) / (1.0 - q)
        return LaplaceValue(total, tail, True, ell_max)
    if last_term is not None and last_term >= 1e-18 * max(total, 1.0):
        return LaplaceValue(total, math.inf, False, ell_max)
    return LaplaceValue(total, 0.0, False, ell_max)


def generalized_cohomological_bound(delta, n, sigma, ell_max=200_000):
    """C L(sigma) with C = 2^n e / (n-1)! (generalized small-divisor loss)."""
    c = 2.0 ** n * math.e / math.factorial(n - 1)
    lv = laplace_transform(delta, sigma, ell_max)
    return c * (lv.value + (lv.tail_bound if lv.certified else 0.0))


def is_in_generalized_class(alpha, delta, k_max):
    """Finite-box check of |k.alpha| >= (|k|+n-1)^{n-1} / Delta(|k|)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    n = alpha.size
    if n > 2:
        raise SpectralError("membership check implemented for n <= 2")
    ok = True
    bad = None
    if n == 1:
        ks = np.arange(1, k_max + 1, dtype=float)
        lhs = np.abs(ks * alpha[0])
        rhs = (ks + n - 1.0) ** (n - 1) / delta(ks)
        viol = lhs < rhs
        if np.any(viol):
            ok = False
            bad = (int(ks[np.argmax(viol)]),)
    else:
        for k1 in range(0, k_max + 1):
            left = k_max - k1
            k2 = np.arange(1 if k1 == 0 else -left, left + 1)
            if k2.size == 0:
                continue
            l1 = (k1 + np.abs(k2)).astype(float)
            lhs = np.abs(k1 * alpha[0] + k2 * alpha[1])
            rhs = (l1 + n - 1.0) ** (n - 1) / delta(l1)
            viol = lhs < rhs
            if np.any(viol):
                ok = False
                i = int(np.argmax(viol))
                bad = (k1, int(k2[i]))
                break
    return ok, bad


# -- convergence criterion -----------------------------------------------------


@dataclass
class CriterionRow:
    j: int
    sigma_j: float
    log_laplace: float
    threshold: float
    passed: bool
    diverged: bool


@dataclass
class CriterionReport:
    rows: list = field(default_factory=list)
    partial_sums: list = field(default_factory=list)
    all_passed: bool = True

    def to_dict(self):
        return {
            "rows": [
                {
                    "j": r.j,
                    "sigma_j": r.sigma_j,
                    "log_L": None if r.diverged else r.log_laplace,
                    "threshold": r.threshold,
                    "passed": r.passed,
                    "diverged": r.diverged,
                }
                for r in self.rows
            ],
            "partial_sums": self.partial_sums,
            "all_passed_up_to_j_max": self.all_passed,
        }


def check_convergence_criterion(delta, c, delta_exp, j_max, ell_max=200_000):
    """Finite-horizon check of the generalized convergence criterion.

    For j = 1..j_max tests log L(1/j^2) <= c 2^{delta_exp j} and accumulates
    the summability surrogate sum_j 2^{-j} log L(j^{-2}).  A finite j_max
    verdict means "passes up to j_max", never "holds".
    """
    if not (0.0 < delta_exp < 1.0):
        raise SpectralError("the exponent must lie in (0, 1)")
    report = CriterionReport()
    running = 0.0
    for j in range(1, j_max + 1):
        sigma_j = 1.0 / j ** 2
        threshold = c * 2.0 ** (delta_exp * j)
        try:
            lv = laplace_transform(delta, sigma_j, ell_max)
            log_l = math.log(max(lv.total if lv.certified else lv.value,
                                 1e-300))
            passed = log_l <= threshold
            diverged = False
        except DivergenceError:
            log_l = math.inf
            passed = False
            diverged = True
        report.rows.append(CriterionRow(j, sigma_j, log_l, threshold,
                                        passed, diverged))
        if not passed:
            report.all_passed = False
        if not diverged:
            running += 2.0 ** (-j) * log_l
        report.partial_sums.append(running if not diverged else math.inf)
    return report
