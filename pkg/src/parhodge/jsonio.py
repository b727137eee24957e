"""JSON encoding helpers shared by the data models and the CLI.

Rationals travel as exact "p/q" strings (or bare integers), complex matrices
as nested [re, im] pairs, so files round-trip without float drift on the
exact fields.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Any

import numpy as np


class SchemaError(ValueError):
    """Malformed input document; message carries a JSON-pointer-ish location."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


def frac_to_json(x: Fraction) -> Any:
    if x.denominator == 1:
        return int(x)
    return f"{x.numerator}/{x.denominator}"


def frac_from_json(obj: Any, location: str = "$") -> Fraction:
    try:
        if isinstance(obj, bool):
            raise TypeError
        if isinstance(obj, int):
            return Fraction(obj)
        if isinstance(obj, str):
            return Fraction(obj)
    except (TypeError, ValueError, ZeroDivisionError):
        pass
    raise SchemaError(location, f"expected exact rational (int or 'p/q'), got {obj!r}")


def matrix_to_json(m: np.ndarray) -> list[list[list[float]]]:
    a = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(obj: Any, location: str = "$") -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise SchemaError(location, "expected a non-empty nested list matrix")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise SchemaError(f"{location}[{i}]", "expected a list row")
        out = []
        for j, z in enumerate(row):
            if isinstance(z, (int, float)) and not isinstance(z, bool):
                out.append(complex(z))
            elif isinstance(z, list) and len(z) == 2 and all(isinstance(t, (int, float)) for t in z):
                out.append(complex(z[0], z[1]))
            else:
                raise SchemaError(f"{location}[{i}][{j}]", f"expected number or [re, im], got {z!r}")
        rows.append(out)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise SchemaError(location, "ragged matrix rows")
    return np.array(rows, dtype=complex)


def fracvec_to_json(v) -> list[Any]:
    return [frac_to_json(Fraction(x)) for x in v]


def fracvec_from_json(obj: Any, location: str = "$") -> tuple[Fraction, ...]:
    if not isinstance(obj, list):
        raise SchemaError(location, "expected a list of rationals")
    return tuple(frac_from_json(x, f"{location}[{i}]") for i, x in enumerate(obj))
