"""Small argument checks shared by the public entry points."""

import math
import numbers

from .exceptions import ParameterError


def check_int(name, value, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_quantile(r):
    if not isinstance(r, numbers.Real) or not math.isfinite(r) or not 0.0 < r < 1.0:
        raise ParameterError(f"quantile must lie in (0, 1), got {r!r}")
    return float(r)


def check_choice(name, value, choices):
    if value not in choices:
        raise ParameterError(f"{name} must be one of {choices}, got {value!r}")
    return value
