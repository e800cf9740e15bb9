import numpy as np
import pytest

from kamtori.errors import SpectralError
from kamtori.serialize import (jet_from_dict, jet_to_dict, series_from_dict,
                               series_to_dict, symplectomorphism_from_dict,
                               symplectomorphism_to_dict)

from conftest import random_jet, random_symplectomorphism, random_zero_average


def test_series_round_trip(rng):
    f = random_zero_average(2, 6, rng)
    g = series_from_dict(series_to_dict(f))
    assert (f - g).majorant_norm(0.0) < 1e-15
    assert g.real_flag == f.real_flag


def test_jet_round_trip(rng):
    jet = random_jet(2, 4, 2, rng)
    back = jet_from_dict(jet_to_dict(jet))
    assert (jet - back).max_abs_coeff() < 1e-15
    assert back.degree == jet.degree


def test_symplectomorphism_round_trip(rng):
    g = random_symplectomorphism(2, 5, rng, 0.05)
    back = symplectomorphism_from_dict(symplectomorphism_to_dict(g))
    err = max((a - b).majorant_norm(0.0) for a, b in zip(g.phi.v, back.phi.v))
    assert err < 1e-15
    diff = g.form.potential - back.form.potential
    assert diff.majorant_norm(0.0) < 1e-15


def test_malformed_payloads_rejected():
    with pytest.raises(SpectralError):
        series_from_dict({"dim": 2, "order": 3})
    with pytest.raises(SpectralError):
        series_from_dict({"dim": 1, "order": 2, "real": True,
                          "entries": [{"k": [5], "re": 1.0, "im": 0.0}]})
    with pytest.raises(SpectralError):
        jet_from_dict({"dim": 1, "order": 2, "degree": 1,
                       "entries": [{"m": [3], "k": [0], "re": 1.0,
                                    "im": 0.0}]})


def test_tiny_coefficients_dropped(rng):
    f = random_zero_average(1, 3, rng)
    f = f * 1e-20
    d = series_to_dict(f)
    assert d["entries"] == []
