"""Deviation patterns, fingerprints, and aggregation into sets.

A deviation instance abstracts one contiguous non-conforming segment of a
trace into a pattern (skip, insert, replace, swap, repeat) plus its skipped
and inserted activities and surrounding context. Instances are grouped into
sets under one of three aggregation modes of increasing coarseness:

* same behavior, same activity sequence
* same behavior, any activity sequence
* similar behavior: activities are first mapped through an analyst-declared
  normalization (equivalence classes), which is one deliberate, auditable
  encoding of "similar" rather than anything learned

Fingerprints are sha256 over canonical JSON: stable across runs and hosts.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from ._canon import canonical_json
from .errors import EmptyDeviation, NormalizationGap, ValidationError


class PatternKind(Enum):
    SKIP = "skip"
    INSERT = "insert"
    REPLACE = "replace"
    SWAP = "swap"
    REPEAT = "repeat"
    OTHER = "other"


class DeviationSource(Enum):
    BUILT_IN_ALIGNER = "built-in-aligner"
    EXTERNAL = "external"


class AggregationKind(Enum):
    SAME_BEHAVIOR_SAME_SEQUENCE = "same-behavior-same-sequence"
    SAME_BEHAVIOR_ANY_SEQUENCE = "same-behavior-any-sequence"
    SIMILAR_BEHAVIOR = "similar-behavior"


@dataclass(frozen=True)
class AggregationMode:
    kind: AggregationKind
    normalization: Mapping[str, str] = field(default_factory=dict)
    strict: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "normalization", dict(self.normalization))
        if self.kind is not AggregationKind.SIMILAR_BEHAVIOR and self.normalization:
            raise ValidationError("normalization map only applies to similar-behavior mode")

    def normalize(self, activity: str) -> str:
        if activity in self.normalization:
            return self.normalization[activity]
        if self.strict:
            raise NormalizationGap(f"activity {activity!r} missing from normalization map")
        return activity


SAME_SEQUENCE = AggregationMode(AggregationKind.SAME_BEHAVIOR_SAME_SEQUENCE)
ANY_SEQUENCE = AggregationMode(AggregationKind.SAME_BEHAVIOR_ANY_SEQUENCE)


def similar_behavior(normalization: Mapping[str, str], strict: bool = False) -> AggregationMode:
    return AggregationMode(AggregationKind.SIMILAR_BEHAVIOR, normalization, strict)


@dataclass(frozen=True)
class DeviationInstance:
    id: str
    case_id: str
    pattern: PatternKind
    skipped: tuple[str, ...]
    inserted: tuple[str, ...]
    context_before: str | None  # None = trace boundary
    context_after: str | None
    sequence_signature: tuple[str, ...]
    source: DeviationSource = DeviationSource.BUILT_IN_ALIGNER

    def __post_init__(self) -> None:
        object.__setattr__(self, "skipped", tuple(self.skipped))
        object.__setattr__(self, "inserted", tuple(self.inserted))
        object.__setattr__(self, "sequence_signature", tuple(self.sequence_signature))
        if self.pattern is PatternKind.SKIP and self.inserted:
            raise ValidationError("skip pattern cannot carry inserted activities")
        if self.pattern in (PatternKind.INSERT, PatternKind.REPEAT) and self.skipped:
            raise ValidationError(f"{self.pattern.value} pattern cannot carry skipped activities")


def classify_pattern(
    skipped: Sequence[str],
    inserted: Sequence[str],
    context_before: str | None = None,
    context_after: str | None = None,
) -> PatternKind:
    """Deterministic pattern classification.

    Precedence: swap (same multiset, different arrangement) over replace;
    repeat (every inserted activity sits next to an equal one) over insert.
    Degenerate inputs fall back to OTHER.
    """
    skipped = tuple(skipped)
    inserted = tuple(inserted)
    if not skipped and not inserted:
        raise EmptyDeviation("no skipped and no inserted activities")
    if skipped and not inserted:
        return PatternKind.SKIP
    if inserted and not skipped:
        return PatternKind.REPEAT if _is_adjacent_repeat(inserted, context_before, context_after) else PatternKind.INSERT
    if inserted == skipped:
        return PatternKind.OTHER
    if Counter(inserted) == Counter(skipped):
        return PatternKind.SWAP
    return PatternKind.REPLACE


def _is_adjacent_repeat(inserted: tuple[str, ...], before: str | None, after: str | None) -> bool:
    surrounded = (before, *inserted, after)
    for i in range(1, len(surrounded) - 1):
        if surrounded[i] != surrounded[i - 1] and surrounded[i] != surrounded[i + 1]:
            return False
    return True


# --- fingerprints and sets ----------------------------------------------------

def fingerprint(instance: DeviationInstance, mode: AggregationMode) -> str:
    """Stable digest identifying the instance's behavior under the mode."""
    if mode.kind is AggregationKind.SAME_BEHAVIOR_SAME_SEQUENCE:
        payload = {
            "mode": mode.kind.value,
            "pattern": instance.pattern.value,
            "skipped": list(instance.skipped),
            "inserted": list(instance.inserted),
            "sequence": list(instance.sequence_signature),
        }
    elif mode.kind is AggregationKind.SAME_BEHAVIOR_ANY_SEQUENCE:
        payload = {
            "mode": mode.kind.value,
            "pattern": instance.pattern.value,
            "skipped": list(instance.skipped),
            "inserted": list(instance.inserted),
        }
    else:
        payload = {
            "mode": mode.kind.value,
            "pattern": instance.pattern.value,
            "skipped": [mode.normalize(a) for a in instance.skipped],
            "inserted": [mode.normalize(a) for a in instance.inserted],
        }
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class DeviationSet:
    id: str
    mode: AggregationMode
    fingerprint: str
    members: tuple[str, ...]
    frequency: int
    sample_cases: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValidationError("deviation set with no members")
        if self.frequency != len(self.members):
            raise ValidationError("frequency must equal member count")


MAX_SAMPLE_CASES = 10


def aggregate(instances: Sequence[DeviationInstance], mode: AggregationMode) -> list[DeviationSet]:
    """Partition instances by fingerprint, in order of first appearance."""
    groups: dict[str, list[DeviationInstance]] = {}
    order: list[str] = []
    for inst in instances:
        fp = fingerprint(inst, mode)
        if fp not in groups:
            groups[fp] = []
            order.append(fp)
        groups[fp].append(inst)
    sets = []
    for fp in order:
        members = groups[fp]
        cases: list[str] = []
        for m in members:
            if m.case_id not in cases:
                cases.append(m.case_id)
        sets.append(DeviationSet(
            id=f"set-{fp[:12]}",
            mode=mode,
            fingerprint=fp,
            members=tuple(m.id for m in members),
            frequency=len(members),
            sample_cases=tuple(cases[:MAX_SAMPLE_CASES]),
        ))
    return sets


# --- JSON schema ----------------------------------------------------------------

def instance_to_dict(instance: DeviationInstance) -> dict:
    return {
        "id": instance.id,
        "case_id": instance.case_id,
        "pattern": instance.pattern.value,
        "skipped": list(instance.skipped),
        "inserted": list(instance.inserted),
        "context_before": instance.context_before,
        "context_after": instance.context_after,
        "sequence_signature": list(instance.sequence_signature),
        "source": instance.source.value,
    }


def instance_from_dict(doc: Mapping) -> DeviationInstance:
    try:
        return DeviationInstance(
            id=str(doc["id"]),
            case_id=str(doc["case_id"]),
            pattern=PatternKind(doc["pattern"]),
            skipped=tuple(str(a) for a in doc["skipped"]),
            inserted=tuple(str(a) for a in doc["inserted"]),
            context_before=doc.get("context_before"),
            context_after=doc.get("context_after"),
            sequence_signature=tuple(str(a) for a in doc["sequence_signature"]),
            source=DeviationSource(doc.get("source", "external")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad deviation document: {exc}") from exc


def instances_to_json(instances: Iterable[DeviationInstance]) -> str:
    return json.dumps([instance_to_dict(i) for i in instances], indent=2, sort_keys=True)


def instances_from_json(raw: str | bytes) -> list[DeviationInstance]:
    try:
        docs = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"deviation import is not JSON: {exc}") from exc
    if not isinstance(docs, list):
        raise ValidationError("deviation import must be a JSON list")
    return [instance_from_dict(d) for d in docs]


def mode_to_dict(mode: AggregationMode) -> dict:
    return {
        "kind": mode.kind.value,
        "normalization": dict(sorted(mode.normalization.items())),
        "strict": mode.strict,
    }


def mode_from_dict(doc: Mapping) -> AggregationMode:
    try:
        return AggregationMode(
            AggregationKind(doc["kind"]),
            doc.get("normalization", {}),
            bool(doc.get("strict", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad aggregation mode: {exc}") from exc


def set_to_dict(dset: DeviationSet) -> dict:
    return {
        "id": dset.id,
        "mode": mode_to_dict(dset.mode),
        "fingerprint": dset.fingerprint,
        "members": list(dset.members),
        "frequency": dset.frequency,
        "sample_cases": list(dset.sample_cases),
    }


def set_from_dict(doc: Mapping) -> DeviationSet:
    try:
        return DeviationSet(
            id=str(doc["id"]),
            mode=mode_from_dict(doc["mode"]),
            fingerprint=str(doc["fingerprint"]),
            members=tuple(str(m) for m in doc["members"]),
            frequency=int(doc["frequency"]),
            sample_cases=tuple(str(c) for c in doc["sample_cases"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad deviation set document: {exc}") from exc
