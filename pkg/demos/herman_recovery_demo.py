"""Recovering a manufactured twisted conjugacy H = K o G + beta . r.

A random small symplectomorphism G*, a normal form K*, and an offset
beta* are composed into a Hamiltonian H; the Newton scheme is started
from the integrable projection and must find them back.  The defect
sequence doubles its digits each step until it hits the roundoff floor.
"""

import time

import numpy as np

from kamtori import (ActionJet, ExactOneForm, FiberedSymplectomorphism,
                     FourierSeries, NewtonSchedule, TorusMap,
                     TwistedConjugacy, normal_form_projection, pullback_jet,
                     run_newton)

alpha = np.array([1.0, (1.0 + np.sqrt(5.0)) / 2.0])
n_order, degree = 32, 3
rng = np.random.default_rng(4)


def small_series(size):
    f = FourierSeries.random(2, 6, rng, decay=1.0).hermitized()
    f = f - f.average()
    return f * (size / f.majorant_norm(0.0))


size = 1e-3
v = []
for _ in range(2):
    f = small_series(size)
    v.append(f - FourierSeries.constant(2, 6, f.eval(np.zeros((1, 2)))[0]))
g_star = FiberedSymplectomorphism(TorusMap(v), ExactOneForm(small_series(size)))
beta_star = np.array([1.3e-3, -0.7e-3])
k_star = ActionJet.normal_form(2, n_order, degree, 0.25, alpha,
                               np.array([[0.5, 0.1], [0.1, 0.4]]))

h = pullback_jet(k_star, g_star, order=n_order) \
    + ActionJet.linear_in_r(2, n_order, degree, beta_star)

k0, _ = normal_form_projection(h, alpha)
x0 = TwistedConjugacy.initial(k0, alpha)
schedule = NewtonSchedule(s=0.1, sigma=0.1)

start = time.perf_counter()
x, trace = run_newton(h, x0, schedule)
elapsed = time.perf_counter() - start

print("defect per Newton step:")
for k, d in enumerate(trace.defects()):
    print(f"  step {k}: {d:.3e}")
print(f"\nconverged in {len(trace.records)} steps, {elapsed:.1f} s")
print(f"beta error: {np.max(np.abs(x.beta - beta_star)):.2e}")
v_err = max((a.pad(x.G.order) - b.pad(x.G.order)).majorant_norm(0.0)
            for a, b in zip(x.G.phi.v, g_star.phi.v))
print(f"angle map error: {v_err:.2e}")
print(f"quadratic fit constant: {trace.quadratic_fit(floor=1e-11):.2f}")
