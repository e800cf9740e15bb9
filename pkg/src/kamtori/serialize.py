"""JSON-style dict encodings of the spectral objects.

Doubles survive a round trip bit-exactly: json emits Python's shortest
round-trip decimal representation.  Coefficients with modulus below the
floor 1e-16 are omitted.
"""

from __future__ import annotations

import numpy as np

from .errors import SpectralError
from .fourier import FourierSeries
from .jets import ActionJet
from .maps import ExactOneForm, FiberedSymplectomorphism, TorusMap

COEFF_FLOOR = 1e-16


def series_to_dict(f, floor=COEFF_FLOOR):
    entries = []
    for k, c in f.nonzero_entries(floor=floor):
        entries.append({"k": list(k), "re": float(c.real),
                        "im": float(c.imag)})
    return {"dim": f.dim, "order": f.order, "real": bool(f.real_flag),
            "entries": entries}


def series_from_dict(data):
    try:
        dim = int(data["dim"])
        order = int(data["order"])
        entries = data["entries"]
    except (KeyError, TypeError) as exc:
        raise SpectralError(f"malformed series record: {exc}")
    c = np.zeros((2 * order + 1,) * dim, dtype=complex)
    for e in entries:
        k = tuple(int(v) for v in e["k"])
        if any(abs(v) > order for v in k):
            raise SpectralError(f"mode {k} outside order {order}")
        idx = tuple(v + order for v in k)
        c[idx] = complex(float(e["re"]), float(e.get("im", 0.0)))
    return FourierSeries(dim, order, c, real_flag=bool(data.get("real",
                                                                False)))


def jet_to_dict(h, floor=COEFF_FLOOR):
    entries = []
    for m, f in sorted(h.comps.items()):
        for k, c in f.nonzero_entries(floor=floor):
            entries.append({"m": list(m), "k": list(k),
                            "re": float(c.real), "im": float(c.imag)})
    return {"dim": h.dim, "order": h.order, "degree": h.degree,
            "entries": entries}


def jet_from_dict(data):
    try:
        dim = int(data["dim"])
        order = int(data["order"])
        degree = int(data["degree"])
        entries = data["entries"]
    except (KeyError, TypeError) as exc:
        raise SpectralError(f"malformed jet record: {exc}")
    boxes = {}
    for e in entries:
        m = tuple(int(v) for v in e["m"])
        k = tuple(int(v) for v in e["k"])
        if sum(m) > degree or any(v < 0 for v in m):
            raise SpectralError(f"monomial {m} outside degree {degree}")
        if any(abs(v) > order for v in k):
            raise SpectralError(f"mode {k} outside order {order}")
        box = boxes.setdefault(
            m, np.zeros((2 * order + 1,) * dim, dtype=complex))
        box[tuple(v + order for v in k)] = complex(float(e["re"]),
                                                   float(e.get("im", 0.0)))
    comps = {}
    for m, box in boxes.items():
        real = bool(np.max(np.abs(_conj_defect(box))) == 0.0)
        comps[m] = FourierSeries(dim, order, box, real_flag=real)
    return ActionJet(dim, order, degree, comps)


def _conj_defect(box):
    rev = tuple(slice(None, None, -1) for _ in range(box.ndim))
    return box - np.conj(box[rev])


def symplectomorphism_to_dict(g, floor=COEFF_FLOOR):
    return {
        "phi": {"v": [series_to_dict(f, floor) for f in g.phi.v]},
        "S": series_to_dict(g.form.potential, floor),
    }


def symplectomorphism_from_dict(data):
    try:
        v = [series_from_dict(d) for d in data["phi"]["v"]]
        s = series_from_dict(data["S"])
    except (KeyError, TypeError) as exc:
        raise SpectralError(f"malformed symplectomorphism record: {exc}")
    return FiberedSymplectomorphism(TorusMap(v), ExactOneForm(s))
