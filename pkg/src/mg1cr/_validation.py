"""Input validation helpers shared by the solver modules."""

import numbers

import numpy as np

from .exceptions import InvalidArgumentError


def check_tolerance(value, name="eps", allow_zero=False):
    """Return ``value`` as a float, rejecting NaN, negatives and (optionally) zero."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"{name} must be a real number, got {value!r}") from None
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise InvalidArgumentError(f"{name} must be positive and finite, got {value}")
    return value


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_power_of_two(value, name):
    value = check_positive_int(value, name)
    if value & (value - 1):
        raise InvalidArgumentError(f"{name} must be a power of two, got {value}")
    return value


def check_square(mat, name="matrix", m=None):
    """Return ``mat`` as a finite float square matrix of order ``m`` (if given)."""
    arr = np.asarray(mat, dtype=float)
    if arr.ndim == 0 and m in (None, 1):
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"{name} must be a square matrix, got shape {arr.shape}")
    if m is not None and arr.shape[0] != m:
        raise InvalidArgumentError(f"{name} must have order {m}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    return arr


def check_block_stack(blocks, name="blocks", m=None):
    """Stack a sequence of square blocks into an ``(L, M, M)`` float array."""
    if isinstance(blocks, np.ndarray) and blocks.ndim == 3:
        arr = blocks.astype(float)
    else:
        blocks = list(blocks)
        if not blocks:
            raise InvalidArgumentError(f"{name} must contain at least one block")
        arr = np.stack([check_square(b, f"{name}[{i}]", m) for i, b in enumerate(blocks)])
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[0] == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty stack of square blocks")
    if m is not None and arr.shape[1] != m:
        raise InvalidArgumentError(f"{name} must have block order {m}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    return arr


def check_probability_vector(u, m, name="u", strict=True):
    """Validate a probability row vector of length ``m``.

    With ``strict`` every entry must be positive; otherwise nonnegative.
    ``None`` yields the uniform vector.
    """
    if u is None:
        return np.full(m, 1.0 / m)
    arr = np.asarray(u, dtype=float).ravel()
    if arr.shape != (m,):
        raise InvalidArgumentError(f"{name} must have length {m}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    if strict and np.any(arr <= 0):
        raise InvalidArgumentError(f"{name} must be strictly positive")
    if np.any(arr < 0):
        raise InvalidArgumentError(f"{name} must be nonnegative")
    if abs(arr.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError(f"{name} must sum to 1, got {arr.sum():.17g}")
    return arr


def check_model(obj):
    """Coerce ``obj`` to an :class:`~mg1cr.model.MG1Model`.

    Accepts a model, a model-file dict, JSON text, or a pair ``(A, B)`` of
    block lists with ``A`` starting at index ``-1``.
    """
    from .model import MG1Model
    from .modelfile import model_from_dict, parse_model

    if isinstance(obj, MG1Model):
        return obj
    if isinstance(obj, dict):
        return model_from_dict(obj)
    if isinstance(obj, (str, bytes)):
        return parse_model(obj)
    if isinstance(obj, (tuple, list)) and len(obj) == 2:
        return MG1Model.from_blocks(obj[0], obj[1])
    raise InvalidArgumentError(f"cannot interpret {type(obj).__name__} as a model")
