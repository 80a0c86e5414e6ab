"""Shared fixtures: the bundled invoice fixtures and random net/trace generators.

Random nets are block-structured workflow nets (sequence of atomic, choice,
skip, parallel, and loop blocks), so the final marking is reachable by
construction while branching, silent routing, duplicate labels, and cycles
still get exercised.
"""

from __future__ import annotations

import random
from importlib import resources

import pytest

from devtriage.eventlog import Event, Trace
from devtriage.petri import Marking, ProcessModel, Transition, enabled_transitions, fire

ALPHABET = ["A", "B", "C", "D", "E", "F", "G", "H"]


@pytest.fixture(scope="session")
def fixture_bytes():
    def read(name: str) -> bytes:
        return resources.files("devtriage").joinpath(f"fixtures/{name}").read_bytes()

    return read


@pytest.fixture(scope="session")
def invoice_model(fixture_bytes):
    from devtriage.petri import parse_pnml

    return parse_pnml(fixture_bytes("invoice_to_cash.pnml"))


@pytest.fixture(scope="session")
def invoice_log(fixture_bytes):
    from devtriage.eventlog import parse_xes

    return parse_xes(fixture_bytes("invoice_to_cash.xes"))


def random_workflow_net(rng: random.Random, max_transitions: int = 8,
                        net_id: str = "random-net") -> ProcessModel:
    places = ["p0"]
    transitions: list[Transition] = []
    arcs: list[tuple[str, str]] = []
    label_pool = list(ALPHABET)
    t_count = 0

    def new_place() -> str:
        places.append(f"p{len(places)}")
        return places[-1]

    def next_label() -> str:
        # occasional duplicate labels stress label-based sync moves
        if transitions and rng.random() < 0.2:
            labeled = [t.label for t in transitions if t.label]
            if labeled:
                return rng.choice(labeled)
        return rng.choice(label_pool)

    def add_transition(label: str | None) -> str:
        nonlocal t_count
        t_count += 1
        tid = f"t{t_count}"
        transitions.append(Transition(tid, label))
        return tid

    current = "p0"
    while t_count < max_transitions:
        budget = max_transitions - t_count
        kinds = ["atomic"]
        if budget >= 2:
            kinds += ["xor", "skip", "loop"]
        if budget >= 4:
            kinds.append("and")
        kind = rng.choice(kinds)
        nxt = new_place()
        if kind == "atomic":
            t = add_transition(next_label())
            arcs.extend([(current, t), (t, nxt)])
        elif kind == "xor":
            for _ in range(2):
                t = add_transition(next_label())
                arcs.extend([(current, t), (t, nxt)])
        elif kind == "skip":
            t = add_transition(next_label())
            tau = add_transition(None)
            arcs.extend([(current, t), (t, nxt), (current, tau), (tau, nxt)])
        elif kind == "loop":
            t = add_transition(next_label())
            back = add_transition(next_label())
            arcs.extend([(current, t), (t, nxt), (nxt, back), (back, current)])
        else:  # and
            split = add_transition(None)
            join_in_a, join_in_b = new_place(), new_place()
            branch_out_a, branch_out_b = new_place(), new_place()
            ta = add_transition(next_label())
            tb = add_transition(next_label())
            join = add_transition(None)
            arcs.extend([
                (current, split), (split, join_in_a), (split, join_in_b),
                (join_in_a, ta), (ta, branch_out_a),
                (join_in_b, tb), (tb, branch_out_b),
                (branch_out_a, join), (branch_out_b, join), (join, nxt),
            ])
        current = nxt
        if rng.random() < 0.3:
            break

    return ProcessModel(
        id=net_id,
        places=frozenset(places),
        transitions=tuple(transitions),
        arcs=tuple(arcs),
        initial_marking=Marking({"p0": 1}),
        final_marking=Marking({current: 1}),
        metadata={},
    )


def random_playout(rng: random.Random, model: ProcessModel, max_steps: int = 40,
                   attempts: int = 50) -> list[str]:
    """Random firing sequence's visible labels from initial to final marking."""
    for _ in range(attempts):
        marking = model.initial_marking
        visible: list[str] = []
        for _ in range(max_steps):
            if marking == model.final_marking:
                return visible
            enabled = sorted(enabled_transitions(model, marking))
            if not enabled:
                break
            tid = rng.choice(enabled)
            label = model.transition(tid).label
            if label is not None:
                visible.append(label)
            marking = fire(model, marking, tid)
        if marking == model.final_marking:
            return visible
    raise AssertionError(f"no playout reached the final marking of {model.id}")


def mutate_sequence(rng: random.Random, acts: list[str], mutations: int = 2) -> list[str]:
    acts = list(acts)
    for _ in range(mutations):
        op = rng.choice(["drop", "insert", "duplicate", "swap"])
        if op == "drop" and acts:
            acts.pop(rng.randrange(len(acts)))
        elif op == "insert":
            acts.insert(rng.randint(0, len(acts)), rng.choice(ALPHABET + ["X", "Y"]))
        elif op == "duplicate" and acts:
            i = rng.randrange(len(acts))
            acts.insert(i, acts[i])
        elif op == "swap" and len(acts) >= 2:
            i = rng.randrange(len(acts) - 1)
            acts[i], acts[i + 1] = acts[i + 1], acts[i]
    return acts


def trace_of(acts: list[str], case_id: str = "case") -> Trace:
    return Trace(case_id=case_id, events=tuple(Event(a) for a in acts))
