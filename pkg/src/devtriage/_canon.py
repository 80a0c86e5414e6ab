"""Canonical JSON and rational-number codecs shared by the wire layers.

All persisted documents and exported payloads go through canonical_json so
that byte-identical output is a property of the data, not of dict ordering.
Costs are fractions end to end; integral values serialize as JSON ints and
everything else as an exact "n/d" string, so round-trips lose nothing.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction

from .errors import ValidationError


def canonical_json(payload: object) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_id(payload: object, prefix: str, digits: int = 16) -> str:
    digest = hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()
    return f"{prefix}{digest[:digits]}"


def fraction_to_wire(value: Fraction) -> int | str:
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"


def fraction_from_wire(value: object, field: str = "cost") -> Fraction:
    if isinstance(value, bool):
        raise ValidationError(f"{field}: expected a number, got a bool")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # Decimal-string route keeps 0.1 meaning 1/10, not the binary float.
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"{field}: not a rational: {value!r}") from exc
    raise ValidationError(f"{field}: expected a number or 'n/d' string, got {type(value).__name__}")
