import numpy as np
import pytest

from kamtori.fourier import FourierSeries
from kamtori.jets import ActionJet
from kamtori.maps import ExactOneForm, FiberedSymplectomorphism, TorusMap

GOLDEN = np.array([1.0, (1.0 + np.sqrt(5.0)) / 2.0])


@pytest.fixture
def rng():
    return np.random.default_rng(2026)


def random_zero_average(dim, order, rng, decay=0.4, scale=1.0):
    f = FourierSeries.random(dim, order, rng, scale=scale,
                             decay=decay).hermitized()
    return f - f.average()


def random_origin_fixing_map(dim, order, rng, size, wide_s=0.0):
    """TorusMap id + v with v(0) = 0 and displacement_norm(wide_s) = size."""
    v = []
    for _ in range(dim):
        f = random_zero_average(dim, order, rng, decay=1.0)
        f = f - FourierSeries.constant(dim, order, f.eval(np.zeros(dim)))
        v.append(f)
    phi = TorusMap(v)
    factor = size / phi.displacement_norm(wide_s)
    return TorusMap([f * factor for f in v])


def random_symplectomorphism(dim, order, rng, size, wide_s=0.0):
    phi = random_origin_fixing_map(dim, order, rng, size, wide_s)
    pot = random_zero_average(dim, order, rng, decay=1.0)
    pot = pot * (size / pot.majorant_norm(wide_s))
    return FiberedSymplectomorphism(phi, ExactOneForm(pot))


def random_jet(dim, order, degree, rng, decay=0.8, scale=1.0):
    comps = {}
    jet = ActionJet.zeros(dim, order, degree)
    from kamtori.jets import multi_indices
    for m in multi_indices(dim, degree):
        comps[m] = FourierSeries.random(dim, order, rng, scale=scale,
                                        decay=decay).hermitized()
    return ActionJet(dim, order, degree, comps)
