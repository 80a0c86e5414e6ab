"""Optimal trace-model alignments via A* over the synchronous product.

A state is (marking, trace position); moves are synchronous (one event and
one equally-labeled enabled transition advance together), log-only (the
event has no counterpart), or model-only (a transition fires without an
event). The heuristic — remaining trace length times the cheapest way to
consume one event — never overestimates, so returned alignments are optimal.

The brute-force enumerator exists as an independent oracle for tests: it
explores every interleaving up to a depth bound and must agree with A* on
cost. Both sides stay, by design; neither replaces the other.

Alignment computations are pure; distinct traces can be aligned from
concurrent threads with no shared mutable state.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping

from ._canon import fraction_from_wire, fraction_to_wire
from .deviations import DeviationInstance, DeviationSource, classify_pattern
from .errors import (
    DepthBoundExceeded,
    DivisionByZeroWorstCost,
    NoFinalMarkingReachable,
    StateBudgetExceeded,
    ValidationError,
)
from .eventlog import Trace
from .petri import Marking, ProcessModel, fire

DEFAULT_STATE_BUDGET = 1_000_000


class MoveKind(Enum):
    SYNCHRONOUS = "synchronous"
    LOG = "log"
    MODEL = "model"


@dataclass(frozen=True)
class Move:
    kind: MoveKind
    activity: str | None = None  # label; set for sync, log, and visible model moves
    transition: str | None = None
    silent: bool = False
    cost: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.silent and self.kind is not MoveKind.MODEL:
            raise ValidationError("only model moves can be silent")
        if self.kind is MoveKind.SYNCHRONOUS and (self.activity is None or self.transition is None):
            raise ValidationError("synchronous move needs activity and transition")


@dataclass(frozen=True)
class Alignment:
    case_id: str
    moves: tuple[Move, ...]
    cost: Fraction
    optimal: bool

    def log_projection(self) -> tuple[str, ...]:
        return tuple(m.activity for m in self.moves
                     if m.kind in (MoveKind.SYNCHRONOUS, MoveKind.LOG))

    def model_projection(self) -> tuple[str, ...]:
        return tuple(m.transition for m in self.moves
                     if m.kind in (MoveKind.SYNCHRONOUS, MoveKind.MODEL))


@dataclass(frozen=True)
class CostFunction:
    log_move_cost: Fraction = Fraction(1)
    visible_model_move_cost: Fraction = Fraction(1)
    silent_model_move_cost: Fraction = Fraction(0)
    sync_cost: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("log_move_cost", "visible_model_move_cost", "silent_model_move_cost", "sync_cost"):
            value = getattr(self, name)
            if not isinstance(value, Fraction):
                object.__setattr__(self, name, Fraction(value))
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        others = (self.log_move_cost, self.visible_model_move_cost, self.silent_model_move_cost)
        if any(self.sync_cost > c for c in others):
            raise ValidationError("sync_cost must not exceed any other move cost")

    def model_move_cost(self, silent: bool) -> Fraction:
        return self.silent_model_move_cost if silent else self.visible_model_move_cost


DEFAULT_COSTS = CostFunction()


def cost_function_to_dict(cost: CostFunction) -> dict:
    return {
        "log_move_cost": fraction_to_wire(cost.log_move_cost),
        "visible_model_move_cost": fraction_to_wire(cost.visible_model_move_cost),
        "silent_model_move_cost": fraction_to_wire(cost.silent_model_move_cost),
        "sync_cost": fraction_to_wire(cost.sync_cost),
    }


def cost_function_from_dict(doc: Mapping) -> CostFunction:
    kwargs = {}
    for name in ("log_move_cost", "visible_model_move_cost", "silent_model_move_cost", "sync_cost"):
        if name in doc:
            kwargs[name] = fraction_from_wire(doc[name], name)
    unknown = set(doc) - {"log_move_cost", "visible_model_move_cost", "silent_model_move_cost", "sync_cost"}
    if unknown:
        raise ValidationError(f"unknown cost fields: {sorted(unknown)}")
    return CostFunction(**kwargs)


def _sorted_transitions(model: ProcessModel):
    return sorted(model.transitions, key=lambda t: t.id)


def align(
    trace: Trace,
    model: ProcessModel,
    cost: CostFunction = DEFAULT_COSTS,
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Alignment:
    """Minimum-cost alignment of one trace against the model.

    Raises NoFinalMarkingReachable when the search space is exhausted without
    reaching the final marking, and StateBudgetExceeded when the cap is hit
    (alignment is worst-case exponential; failing loudly beats hanging).
    """
    moves, total = _search(trace.activities(), model, cost, state_budget)
    return Alignment(case_id=trace.case_id, moves=moves, cost=total, optimal=True)


def _search(
    acts: tuple[str, ...],
    model: ProcessModel,
    cost: CostFunction,
    state_budget: int,
) -> tuple[tuple[Move, ...], Fraction]:
    transitions = _sorted_transitions(model)
    goal = (model.final_marking, len(acts))
    per_event = min(cost.sync_cost, cost.log_move_cost)

    def h(pos: int) -> Fraction:
        return (len(acts) - pos) * per_event

    start = (model.initial_marking, 0)
    ticket = 0  # local tie-break sequence keeps the heap total-ordered and the search deterministic
    open_heap: list[tuple[Fraction, int, tuple[Marking, int]]] = [(h(0), ticket, start)]
    best_g: dict[tuple[Marking, int], Fraction] = {start: Fraction(0)}
    parents: dict[tuple[Marking, int], tuple[tuple[Marking, int], Move]] = {}
    closed: set[tuple[Marking, int]] = set()

    def relax(state, nxt, move, g_new) -> None:
        nonlocal ticket
        if nxt in best_g and best_g[nxt] <= g_new:
            return
        best_g[nxt] = g_new
        parents[nxt] = (state, move)
        ticket += 1
        heapq.heappush(open_heap, (g_new + h(nxt[1]), ticket, nxt))

    while open_heap:
        _, _, state = heapq.heappop(open_heap)
        if state in closed:
            continue
        closed.add(state)
        if state == goal:
            return _reconstruct(state, parents), best_g[state]
        marking, pos = state
        g = best_g[state]
        for t in transitions:
            if not all(marking.count(p) >= 1 for p in model.preset(t.id)):
                continue
            next_marking = fire(model, marking, t.id)
            if pos < len(acts) and t.label is not None and t.label == acts[pos]:
                move = Move(MoveKind.SYNCHRONOUS, acts[pos], t.id, False, cost.sync_cost)
                relax(state, (next_marking, pos + 1), move, g + cost.sync_cost)
            move_cost = cost.model_move_cost(t.silent)
            move = Move(MoveKind.MODEL, t.label, t.id, t.silent, move_cost)
            relax(state, (next_marking, pos), move, g + move_cost)
        if pos < len(acts):
            move = Move(MoveKind.LOG, acts[pos], None, False, cost.log_move_cost)
            relax(state, (marking, pos + 1), move, g + cost.log_move_cost)
        if len(best_g) > state_budget:
            raise StateBudgetExceeded(f"alignment search exceeded {state_budget} states")
    raise NoFinalMarkingReachable(
        f"model {model.id!r}: final marking unreachable while aligning {len(acts)} events"
    )


def _reconstruct(state, parents) -> tuple[Move, ...]:
    moves: list[Move] = []
    while state in parents:
        state, move = parents[state]
        moves.append(move)
    moves.reverse()
    return tuple(moves)


# --- brute-force oracle --------------------------------------------------------

def shortest_model_path_length(model: ProcessModel, *, state_cap: int = 200_000) -> int:
    """Fewest transition firings from initial to final marking (BFS)."""
    if model.initial_marking == model.final_marking:
        return 0
    frontier = [model.initial_marking]
    seen = {model.initial_marking}
    depth = 0
    while frontier:
        depth += 1
        nxt: list[Marking] = []
        for marking in frontier:
            for t in _sorted_transitions(model):
                if not all(marking.count(p) >= 1 for p in model.preset(t.id)):
                    continue
                m2 = fire(model, marking, t.id)
                if m2 == model.final_marking:
                    return depth
                if m2 not in seen:
                    seen.add(m2)
                    nxt.append(m2)
                    if len(seen) > state_cap:
                        raise NoFinalMarkingReachable(
                            f"model {model.id!r}: no path to final marking within {state_cap} states"
                        )
        frontier = nxt
    raise NoFinalMarkingReachable(f"model {model.id!r}: final marking unreachable")


def brute_force_align(
    trace: Trace,
    model: ProcessModel,
    cost: CostFunction = DEFAULT_COSTS,
    depth_bound: int | None = None,
) -> Alignment:
    """Exact minimum by exhaustive enumeration of move interleavings.

    Test oracle only: exponential, intended for small instances (a handful
    of transitions and events). The default bound — trace length plus the
    shortest model path plus slack — always admits the all-log-moves
    completion, so DepthBoundExceeded signals a caller-supplied bound that
    was too tight.
    """
    acts = trace.activities()
    if depth_bound is None:
        depth_bound = len(acts) + shortest_model_path_length(model) + 4
    transitions = _sorted_transitions(model)
    best: dict[str, object] = {"cost": None, "moves": None}
    # Pareto memo: a visit is prunable only if an earlier visit of the same
    # state was at least as cheap AND at least as shallow — pruning on cost
    # alone would discard completions that need the remaining depth budget.
    seen: dict[tuple[Marking, int], list[tuple[Fraction, int]]] = {}

    def dominated(key, g: Fraction, depth: int) -> bool:
        return any(g2 <= g and d2 <= depth for g2, d2 in seen.get(key, ()))

    def record(key, g: Fraction, depth: int) -> None:
        entries = seen.setdefault(key, [])
        entries[:] = [(g2, d2) for g2, d2 in entries if not (g <= g2 and depth <= d2)]
        entries.append((g, depth))

    def explore(marking: Marking, pos: int, moves: list[Move], g: Fraction) -> None:
        if best["cost"] is not None and g >= best["cost"]:
            return
        key = (marking, pos)
        depth = len(moves)
        if dominated(key, g, depth):
            return
        record(key, g, depth)
        if pos == len(acts) and marking == model.final_marking:
            if best["cost"] is None or g < best["cost"]:
                best["cost"] = g
                best["moves"] = tuple(moves)
            return
        if depth >= depth_bound:
            return
        for t in transitions:
            if not all(marking.count(p) >= 1 for p in model.preset(t.id)):
                continue
            m2 = fire(model, marking, t.id)
            if pos < len(acts) and t.label is not None and t.label == acts[pos]:
                moves.append(Move(MoveKind.SYNCHRONOUS, acts[pos], t.id, False, cost.sync_cost))
                explore(m2, pos + 1, moves, g + cost.sync_cost)
                moves.pop()
            mc = cost.model_move_cost(t.silent)
            moves.append(Move(MoveKind.MODEL, t.label, t.id, t.silent, mc))
            explore(m2, pos, moves, g + mc)
            moves.pop()
        if pos < len(acts):
            moves.append(Move(MoveKind.LOG, acts[pos], None, False, cost.log_move_cost))
            explore(marking, pos + 1, moves, g + cost.log_move_cost)
            moves.pop()

    explore(model.initial_marking, 0, [], Fraction(0))
    if best["cost"] is None:
        raise DepthBoundExceeded(f"no complete alignment within {depth_bound} moves")
    return Alignment(trace.case_id, best["moves"], best["cost"], optimal=True)


# --- fitness ---------------------------------------------------------------------

def worst_case_cost(trace: Trace, model: ProcessModel, cost: CostFunction = DEFAULT_COSTS) -> Fraction:
    """Cost of the degenerate alignment: empty-trace path plus one log move per event."""
    empty = Trace(case_id=trace.case_id, events=())
    base = align(empty, model, cost).cost
    return base + len(trace.events) * cost.log_move_cost


def fitness(alignment: Alignment, worst_cost: Fraction) -> Fraction:
    """1 - cost/worst_cost, clamped into [0, 1]."""
    if worst_cost == 0:
        raise DivisionByZeroWorstCost("worst-case cost is zero")
    value = 1 - alignment.cost / Fraction(worst_cost)
    return min(Fraction(1), max(Fraction(0), value))


# --- deviation extraction ----------------------------------------------------------

def extract_deviations(alignment: Alignment, id_prefix: str = "") -> list[DeviationInstance]:
    """Abstract an optimal alignment into deviation instances.

    Maximal runs of non-synchronous visible moves become one instance each;
    silent model moves are routing noise — they neither join a run nor break
    one. Context is the nearest synchronous activity on either side (None at
    a trace boundary).
    """
    if not alignment.optimal:
        raise ValidationError("deviations are extracted from optimal alignments only")
    signature = alignment.log_projection()
    instances: list[DeviationInstance] = []
    run_skipped: list[str] = []
    run_inserted: list[str] = []
    context_before: str | None = None
    open_run = False

    def close_run(context_after: str | None) -> None:
        nonlocal open_run, run_skipped, run_inserted
        if not open_run:
            return
        pattern = classify_pattern(run_skipped, run_inserted, context_before, context_after)
        instances.append(DeviationInstance(
            id=f"{id_prefix}{alignment.case_id}-d{len(instances)}",
            case_id=alignment.case_id,
            pattern=pattern,
            skipped=tuple(run_skipped),
            inserted=tuple(run_inserted),
            context_before=context_before,
            context_after=context_after,
            sequence_signature=signature,
            source=DeviationSource.BUILT_IN_ALIGNER,
        ))
        run_skipped, run_inserted = [], []
        open_run = False

    for move in alignment.moves:
        if move.kind is MoveKind.SYNCHRONOUS:
            close_run(move.activity)
            context_before = move.activity
        elif move.kind is MoveKind.LOG:
            run_inserted.append(move.activity)
            open_run = True
        elif not move.silent:
            run_skipped.append(move.activity)
            open_run = True
    close_run(None)
    return instances


# --- JSON export --------------------------------------------------------------------

ALIGNMENT_SCHEMA = "alignment@1"


def alignment_to_dict(alignment: Alignment) -> dict:
    return {
        "schema": ALIGNMENT_SCHEMA,
        "case_id": alignment.case_id,
        "cost": fraction_to_wire(alignment.cost),
        "optimal": alignment.optimal,
        "moves": [
            {
                "kind": m.kind.value,
                "activity": m.activity,
                "transition": m.transition,
                "silent": m.silent,
                "cost": fraction_to_wire(m.cost),
            }
            for m in alignment.moves
        ],
    }


def alignment_from_dict(doc: Mapping) -> Alignment:
    from .errors import SchemaVersionMismatch

    if doc.get("schema") != ALIGNMENT_SCHEMA:
        raise SchemaVersionMismatch(f"expected {ALIGNMENT_SCHEMA}, got {doc.get('schema')!r}")
    try:
        moves = tuple(
            Move(
                MoveKind(m["kind"]),
                m.get("activity"),
                m.get("transition"),
                bool(m.get("silent", False)),
                fraction_from_wire(m.get("cost", 0)),
            )
            for m in doc["moves"]
        )
        return Alignment(
            case_id=str(doc["case_id"]),
            moves=moves,
            cost=fraction_from_wire(doc["cost"]),
            optimal=bool(doc["optimal"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad alignment document: {exc}") from exc
