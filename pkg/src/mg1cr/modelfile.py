"""JSON container for M/G/1-type and QBD models.

Example (scalar QBD)::

    {
      "schema": 1,
      "type": "qbd",
      "m": 1,
      "a_start": -1,
      "A": [[[0.6]], [[0.1]], [[0.3]]],
      "B": [[[0.7]]],
      "nu": 0.3
    }

For ``"qbd"`` files ``A`` lists exactly ``A_{-1}, A_0, A_1`` and ``B`` only
``B_0``; the boundary row becomes ``(B_0, A_1)``.  Matrices are row-major
lists of lists.  Floats are written with ``repr`` so that a parse of a
serialized model is bit-identical.
"""

import json
import math

import numpy as np

from .exceptions import ParseError, ValidationError
from .model import DEFAULT_VALIDATION_TOL, MG1Model

__all__ = ["SCHEMA_VERSION", "parse_model", "serialize_model", "load_model", "model_to_dict"]

SCHEMA_VERSION = 1
_KEYS = {"schema", "type", "m", "a_start", "A", "B", "nu"}


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _matrix(obj, m, where):
    if not isinstance(obj, list) or len(obj) != m:
        raise ValidationError(f"{where} must be a list of {m} rows")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != m:
            raise ValidationError(f"{where} row {i} must have {m} entries")
        for j, x in enumerate(row):
            if not _is_number(x) or not math.isfinite(x):
                raise ValidationError(f"{where}[{i}][{j}] is not a finite number: {x!r}")
        rows.append([float(x) for x in row])
    return np.array(rows, dtype=float)


def _blocks(obj, m, name):
    if not isinstance(obj, list) or not obj:
        raise ValidationError(f"{name} must be a non-empty list of matrices")
    return np.stack([_matrix(b, m, f"{name}[{k}]") for k, b in enumerate(obj)])


def model_from_dict(doc, tol=DEFAULT_VALIDATION_TOL):
    if not isinstance(doc, dict):
        raise ValidationError("model file must contain a JSON object")
    unknown = set(doc) - _KEYS
    if unknown:
        raise ValidationError(f"unknown keys: {', '.join(sorted(unknown))}")
    for key in ("type", "m", "A", "B"):
        if key not in doc:
            raise ValidationError(f"missing required key {key!r}")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema version {schema!r}")
    kind = doc["type"]
    if kind not in ("mg1", "qbd"):
        raise ValidationError(f"type must be 'mg1' or 'qbd', got {kind!r}")
    m = doc["m"]
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise ValidationError(f"m must be a positive integer, got {m!r}")
    a_start = doc.get("a_start", -1)
    if a_start != -1 or isinstance(a_start, bool):
        raise ValidationError(f"a_start must be -1, got {a_start!r}")
    nu = doc.get("nu")
    if nu is not None and (not _is_number(nu) or not math.isfinite(nu) or nu <= 0):
        raise ValidationError(f"nu must be a positive number, got {nu!r}")
    a = _blocks(doc["A"], m, "A")
    b = _blocks(doc["B"], m, "B")
    if kind == "qbd":
        if len(a) != 3 or len(b) != 1:
            raise ValidationError("qbd files need exactly 3 A blocks and 1 B block")
        return MG1Model.qbd(a[0], a[1], a[2], b[0], tol=tol,
                            nu=None if nu is None else float(nu))
    return MG1Model.from_blocks(a, b, tol=tol, nu=None if nu is None else float(nu))


def parse_model(text, tol=DEFAULT_VALIDATION_TOL):
    """Parse and validate a model file.

    Parameters
    ----------
    text : bytes or str
        UTF-8 JSON document.

    Raises
    ------
    ParseError
        Malformed JSON, with 1-based line and column.
    ValidationError
        Structure, shape, sign or stochasticity problems.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc.reason}") from None
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return model_from_dict(doc, tol=tol)


def _reject_constant(name):
    raise ValidationError(f"non-finite constant {name} is not allowed")


def model_to_dict(model):
    if model.kind == "qbd":
        a_blocks = model.a.coeffs
        b_blocks = model.b.coeffs[:1]
    else:
        a_blocks, b_blocks = model.a.coeffs, model.b.coeffs
    doc = {
        "schema": SCHEMA_VERSION,
        "type": model.kind,
        "m": model.m,
        "a_start": -1,
        "A": a_blocks.tolist(),
        "B": b_blocks.tolist(),
    }
    if model.nu is not None:
        doc["nu"] = float(model.nu)
    return doc


def serialize_model(model, indent=None):
    """JSON text for ``model``; ``parse_model`` inverts it exactly."""
    return json.dumps(model_to_dict(model), indent=indent)


def load_model(path, tol=DEFAULT_VALIDATION_TOL):
    with open(path, "rb") as fh:
        return parse_model(fh.read(), tol=tol)
