"""JSON encoding of matrices, models, deviation factors and results.

Matrices are written as ``{"re": rows, "im": rows}``; plain nested lists
of reals are accepted on input.
"""

import csv
import io
import json

import numpy as np

from .dyson import (InversePowerU, LorentzianU, PerturbationModel, TableU, ZeroU,
                    random_model)
from .errors import DomainError
from .regularize import CatalogFactor, PowerLawFactor, UVPowerFactor

MATRIX = {
    "oneOf": [
        {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        {"type": "object", "required": ["re"], "additionalProperties": False,
         "properties": {"re": {"type": "array"}, "im": {"type": "array"}}},
    ]
}

U_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["zero", "inverse_power", "lorentzian", "table"]},
        "coef": MATRIX,
        "power": {"type": "number"},
        "knots": {"type": "array",
                  "items": {"type": "array", "minItems": 2, "maxItems": 2}},
    },
}

MODEL_SCHEMA = {
    "oneOf": [
        {"type": "object", "required": ["B_plus", "B_minus"],
         "properties": {"B_plus": MATRIX, "B_minus": MATRIX, "u": U_SCHEMA,
                        "nu": {"type": "number", "exclusiveMinimum": 1},
                        "K": {"type": "number", "minimum": 0}},
         "additionalProperties": False},
        {"type": "object", "required": ["random"], "additionalProperties": False,
         "properties": {"random": {
             "type": "object", "required": ["dim"],
             "properties": {"dim": {"type": "integer", "minimum": 1},
                            "nu": {"type": "number", "exclusiveMinimum": 1},
                            "scale": {"type": "number", "exclusiveMinimum": 0}}}}},
    ]
}

DEVIATION_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["power_law", "uv_power", "catalog"]},
        "B_plus": MATRIX, "B_minus": MATRIX, "phi": MATRIX, "psi": MATRIX,
        "name": {"enum": ["schrodinger_coulomb", "dirac_coulomb", "friedrichs",
                          "line_potential"]},
        "params": {"type": "object"},
        "samples": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
}


def decode_matrix(obj):
    if isinstance(obj, dict):
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise DomainError("matrix re/im parts differ in shape")
        m = re + 1j * im
    else:
        m = np.asarray(obj, dtype=complex)
    m = np.atleast_2d(m)
    if m.ndim != 2:
        raise DomainError("expected a matrix")
    return m


def encode(obj):
    """Recursively convert arrays and complex numbers to JSON-ready values."""
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    return obj


def dumps(obj):
    return json.dumps(encode(obj), sort_keys=True, indent=2) + "\n"


def decode_u(spec, dim):
    kind = spec["kind"]
    if kind == "zero":
        return ZeroU(dim)
    if kind == "table":
        return TableU([(t, decode_matrix(m)) for t, m in spec["knots"]])
    if "coef" not in spec or "power" not in spec:
        raise DomainError(f"u kind {kind!r} needs coef and power")
    cls = InversePowerU if kind == "inverse_power" else LorentzianU
    return cls(decode_matrix(spec["coef"]), spec["power"])


def decode_model(spec, rng=None):
    """Build a :class:`PerturbationModel`; ``{"random": {...}}`` draws from `rng`."""
    if "random" in spec:
        if rng is None:
            raise DomainError("a random model needs a seed")
        r = spec["random"]
        return random_model(rng, r["dim"], r.get("nu", 2.0), r.get("scale", 0.5))
    Bp = decode_matrix(spec["B_plus"])
    u = decode_u(spec.get("u", {"kind": "zero"}), Bp.shape[0])
    K = spec.get("K")
    if K is None:
        K = float(np.linalg.norm(u.coef, 2)) if hasattr(u, "coef") else 0.0
    return PerturbationModel(Bp, decode_matrix(spec["B_minus"]), u,
                             spec.get("nu", 2.0), K)


def decode_deviation(spec, model=None):
    kind = spec["kind"]
    if kind == "power_law":
        if "B_plus" in spec:
            return PowerLawFactor(decode_matrix(spec["B_plus"]),
                                  decode_matrix(spec["B_minus"]))
        if model is None:
            raise DomainError("power_law deviation needs B_plus/B_minus or a model")
        return PowerLawFactor.from_model(model)
    if kind == "uv_power":
        psi = decode_matrix(spec["psi"]) if "psi" in spec else None
        return UVPowerFactor(decode_matrix(spec["phi"]), psi)
    return CatalogFactor(spec["name"], spec["samples"], spec.get("params", {}))


def expansion_to_dict(e):
    return {"side": e.side, "p": e.p, "prefactor": e.prefactor, "leading": e.leading,
            "C": list(e.C), "delta": e.delta, "metadata": e.metadata}


def trace_csv(rows, header=("T", "norm_diff", "tail_bound")):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()
