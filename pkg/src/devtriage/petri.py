"""Normative process models: labeled Petri nets with firing semantics.

Supported input is a deliberately small PNML subset: one net, P/T semantics,
arc weight 1, silent transitions encoded as an empty or absent name. The
final marking comes from a <finalmarkings> element or a sidecar JSON
``{"final": {"place-id": n}}``. Models are immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    MalformedInput,
    MissingMarking,
    NotEnabled,
    StructuralError,
    UnknownPlace,
    UnknownTransition,
    ValidationError,
)

SILENT = None  # transition label for τ


class Marking:
    """Immutable multiset of tokens over places. Zero counts are dropped."""

    __slots__ = ("_counts", "_key")

    def __init__(self, counts: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        cleaned: dict[str, int] = {}
        items = counts.items() if isinstance(counts, Mapping) else counts
        for place, n in items:
            n = int(n)
            if n < 0:
                raise ValueError(f"negative token count for place {place!r}")
            if n:
                cleaned[place] = n
        self._counts = cleaned
        self._key = tuple(sorted(cleaned.items()))

    def count(self, place: str) -> int:
        return self._counts.get(place, 0)

    def places(self) -> frozenset[str]:
        return frozenset(self._counts)

    def as_dict(self) -> dict[str, int]:
        return dict(self._key)

    def items(self) -> tuple[tuple[str, int], ...]:
        return self._key

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Marking) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        inner = ", ".join(f"{p}:{n}" for p, n in self._key)
        return f"Marking({{{inner}}})"


@dataclass(frozen=True)
class Transition:
    id: str
    label: str | None = SILENT

    @property
    def silent(self) -> bool:
        return self.label is None


@dataclass(frozen=True)
class ProcessModel:
    """Labeled Petri net with initial and final markings.

    Arcs must be bipartite (place->transition or transition->place) and all
    referenced ids declared; violations raise StructuralError at construction.
    """

    id: str
    places: frozenset[str]
    transitions: tuple[Transition, ...]
    arcs: tuple[tuple[str, str], ...]
    initial_marking: Marking
    final_marking: Marking
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "metadata", dict(self.metadata))
        tids = [t.id for t in self.transitions]
        if len(set(tids)) != len(tids):
            dupes = sorted({t for t in tids if tids.count(t) > 1})
            raise StructuralError(f"duplicate transition ids: {dupes}")
        tid_set = set(tids)
        if tid_set & self.places:
            raise StructuralError(f"ids used as both place and transition: {sorted(tid_set & self.places)}")
        for src, dst in self.arcs:
            if src in self.places and dst in tid_set:
                continue
            if src in tid_set and dst in self.places:
                continue
            raise StructuralError(f"arc {src!r} -> {dst!r} is not place<->transition")
        for marking, name in ((self.initial_marking, "initial"), (self.final_marking, "final")):
            undeclared = marking.places() - self.places
            if undeclared:
                raise StructuralError(f"{name} marking references undeclared places: {sorted(undeclared)}")
        pre: dict[str, tuple[str, ...]] = {}
        post: dict[str, tuple[str, ...]] = {}
        for tid in tids:
            pre[tid] = tuple(src for src, dst in self.arcs if dst == tid)
            post[tid] = tuple(dst for src, dst in self.arcs if src == tid)
        object.__setattr__(self, "_pre", pre)
        object.__setattr__(self, "_post", post)
        object.__setattr__(self, "_by_id", {t.id: t for t in self.transitions})

    def transition(self, tid: str) -> Transition:
        try:
            return self._by_id[tid]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownTransition(f"no transition {tid!r} in model {self.id!r}") from None

    def preset(self, tid: str) -> tuple[str, ...]:
        self.transition(tid)
        return self._pre[tid]  # type: ignore[attr-defined]

    def postset(self, tid: str) -> tuple[str, ...]:
        self.transition(tid)
        return self._post[tid]  # type: ignore[attr-defined]

    def visible_labels(self) -> frozenset[str]:
        return frozenset(t.label for t in self.transitions if t.label is not None)


def enabled_transitions(model: ProcessModel, marking: Marking) -> set[str]:
    """Transition ids whose every input place holds at least one token."""
    undeclared = marking.places() - model.places
    if undeclared:
        raise UnknownPlace(f"marking references undeclared places: {sorted(undeclared)}")
    enabled = set()
    for t in model.transitions:
        if all(marking.count(p) >= 1 for p in model.preset(t.id)):
            enabled.add(t.id)
    return enabled


def fire(model: ProcessModel, marking: Marking, transition: str) -> Marking:
    """Fire one transition: decrement inputs, increment outputs.

    The input marking is left untouched; a new Marking is returned.
    """
    model.transition(transition)
    counts = dict(marking.items())
    for p in model.preset(transition):
        if counts.get(p, 0) < 1:
            raise NotEnabled(f"transition {transition!r} not enabled: place {p!r} empty")
        counts[p] -= 1
    for p in model.postset(transition):
        counts[p] = counts.get(p, 0) + 1
    return Marking(counts)


# --- PNML ------------------------------------------------------------------

def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child(elem: ET.Element, name: str) -> ET.Element | None:
    for c in elem:
        if _strip_ns(c.tag) == name:
            return c
    return None


def _children(elem: ET.Element, name: str) -> list[ET.Element]:
    return [c for c in elem.iter() if _strip_ns(c.tag) == name]


def _net_content(net: ET.Element, name: str) -> list[ET.Element]:
    # Only direct children (or children of a <page>) count as net content;
    # <finalmarkings> nests <place idref> elements that must not leak in.
    found = []
    for child in net:
        tag = _strip_ns(child.tag)
        if tag == name:
            found.append(child)
        elif tag == "page":
            found.extend(c for c in child if _strip_ns(c.tag) == name)
    return found


def _text_of(elem: ET.Element | None) -> str | None:
    if elem is None:
        return None
    text = _child(elem, "text")
    if text is not None:
        return text.text or ""
    return elem.text


def parse_pnml(data: bytes, sidecar: bytes | None = None) -> ProcessModel:
    """Parse the PNML subset into a ProcessModel.

    ``sidecar`` may carry the final marking as ``{"final": {place: count}}``
    for exports that lack a <finalmarkings> element.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedInput(f"not well-formed XML: {exc}") from exc
    if _strip_ns(root.tag) != "pnml":
        raise MalformedInput(f"root element is <{_strip_ns(root.tag)}>, expected <pnml>")
    net = _child(root, "net")
    if net is None:
        raise MalformedInput("no <net> element")

    places: list[str] = []
    initial: dict[str, int] = {}
    for p in _net_content(net, "place"):
        pid = p.get("id")
        if not pid:
            raise MalformedInput("place without id")
        places.append(pid)
        im = _child(p, "initialMarking")
        if im is not None:
            raw = _text_of(im)
            try:
                initial[pid] = int(raw or "0")
            except ValueError as exc:
                raise MalformedInput(f"place {pid!r}: bad initialMarking {raw!r}") from exc

    transitions: list[Transition] = []
    for t in _net_content(net, "transition"):
        tid = t.get("id")
        if not tid:
            raise MalformedInput("transition without id")
        label = _text_of(_child(t, "name"))
        transitions.append(Transition(tid, label if label else SILENT))

    arcs: list[tuple[str, str]] = []
    for a in _net_content(net, "arc"):
        src, dst = a.get("source"), a.get("target")
        if not src or not dst:
            raise MalformedInput("arc without source/target")
        arcs.append((src, dst))

    declared = set(places) | {t.id for t in transitions}
    for src, dst in arcs:
        if src not in declared or dst not in declared:
            raise StructuralError(f"arc references undeclared id: {src!r} -> {dst!r}")

    final: dict[str, int] | None = None
    fm_elem = next(iter(_net_content(net, "finalmarkings")), None)
    if fm_elem is not None:
        final = {}
        for pl in _children(fm_elem, "place"):
            ref = pl.get("idref") or pl.get("id")
            if not ref:
                raise MalformedInput("finalmarkings place without idref")
            final[ref] = int(_text_of(pl) or "1")
    if sidecar is not None:
        try:
            doc = json.loads(sidecar)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"sidecar is not JSON: {exc}") from exc
        if not isinstance(doc, dict) or "final" not in doc or not isinstance(doc["final"], dict):
            raise MalformedInput('sidecar must be {"final": {place: count}}')
        final = {str(k): int(v) for k, v in doc["final"].items()}
    if final is None:
        raise MissingMarking("no final marking: neither <finalmarkings> nor sidecar supplied")
    if places and not initial:
        raise MissingMarking("no initial marking on a net with places")

    metadata: dict[str, str] = {}
    for ts in _net_content(net, "toolspecific"):
        if ts.get("tool") == "devtriage":
            for kv in _children(ts, "entry"):
                key = kv.get("key")
                if key is not None:
                    metadata[key] = kv.text or ""
    net_name = _text_of(_child(net, "name"))
    if net_name and "name" not in metadata:
        metadata["name"] = net_name

    return ProcessModel(
        id=net.get("id") or "net",
        places=frozenset(places),
        transitions=tuple(transitions),
        arcs=tuple(arcs),
        initial_marking=Marking(initial),
        final_marking=Marking(final),
        metadata=metadata,
    )


def serialize_pnml(model: ProcessModel) -> bytes:
    """Emit the model back as PNML; parse(serialize(m)) == m on the subset."""
    pnml = ET.Element("pnml")
    net = ET.SubElement(pnml, "net", id=model.id)
    name = model.metadata.get("name")
    if name:
        text = ET.SubElement(ET.SubElement(net, "name"), "text")
        text.text = name
    for pid in sorted(model.places):
        p = ET.SubElement(net, "place", id=pid)
        n = model.initial_marking.count(pid)
        if n:
            ET.SubElement(ET.SubElement(p, "initialMarking"), "text").text = str(n)
    for t in model.transitions:
        te = ET.SubElement(net, "transition", id=t.id)
        if t.label is not None:
            ET.SubElement(ET.SubElement(te, "name"), "text").text = t.label
    for src, dst in model.arcs:
        ET.SubElement(net, "arc", source=src, target=dst)
    fms = ET.SubElement(net, "finalmarkings")
    fm = ET.SubElement(fms, "marking")
    for pid, n in model.final_marking.items():
        ET.SubElement(ET.SubElement(fm, "place", idref=pid), "text").text = str(n)
    extra = {k: v for k, v in model.metadata.items() if k != "name"}
    if extra:
        ts = ET.SubElement(net, "toolspecific", tool="devtriage", version="1")
        for key in sorted(extra):
            entry = ET.SubElement(ts, "entry", key=key)
            entry.text = extra[key]
    return ET.tostring(pnml, encoding="utf-8", xml_declaration=True)


# --- JSON codec (workspace persistence) --------------------------------------

MODEL_SCHEMA = "model@1"


def model_to_dict(model: ProcessModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "id": model.id,
        "places": sorted(model.places),
        "transitions": [{"id": t.id, "label": t.label} for t in model.transitions],
        "arcs": [list(a) for a in model.arcs],
        "initial_marking": model.initial_marking.as_dict(),
        "final_marking": model.final_marking.as_dict(),
        "metadata": dict(sorted(model.metadata.items())),
    }


def model_from_dict(doc: Mapping) -> ProcessModel:
    if doc.get("schema") != MODEL_SCHEMA:
        from .errors import SchemaVersionMismatch

        raise SchemaVersionMismatch(f"expected {MODEL_SCHEMA}, got {doc.get('schema')!r}")
    try:
        transitions = tuple(Transition(t["id"], t.get("label")) for t in doc["transitions"])
        return ProcessModel(
            id=str(doc["id"]),
            places=frozenset(str(p) for p in doc["places"]),
            transitions=transitions,
            arcs=tuple((str(a[0]), str(a[1])) for a in doc["arcs"]),
            initial_marking=Marking({str(k): int(v) for k, v in doc["initial_marking"].items()}),
            final_marking=Marking({str(k): int(v) for k, v in doc["final_marking"].items()}),
            metadata={str(k): str(v) for k, v in doc.get("metadata", {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad model document: {exc}") from exc
