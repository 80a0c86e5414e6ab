"""Guided desirability assessment: a five-step knockout state machine.

An assessment walks a deviation through up to five steps. Each step's
factors act as knockout criteria: a conclusive answer assigns one of seven
mutually exclusive output categories and ends the assessment, so later
steps never demand input. Steps 1-3 screen a single deviation instance
(log error, model error, justified exception); steps 4-5 judge a set of
aggregated true deviations (impact, then reaction efficiency). Every
category maps to exactly one action recommendation.

State machine shape:

    step 1  data quality attributable?        yes -> false alarm (log)   / filter out
    step 2  deviation solely a model problem? yes -> false alarm (model) / filter out
    step 3  case type or uncontrollable?      yes -> exception           / filter out
            (otherwise: true deviation, eligible for aggregation)
    step 4  combined impact neutral?          yes -> neutral deviation   / ignore
    step 5  effectiveness <= cost?            yes -> reaction-inefficient / ignore
            else positive -> adopt, negative -> prevent

Assessments are value objects; submit_* functions return a new Assessment
and never mutate. The TriageEngine serializes writes per assessment id and
journals every decision.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from ._canon import fraction_from_wire, fraction_to_wire
from .deviations import DeviationInstance, DeviationSet
from .errors import (
    InconsistentAnswer,
    MemberKnockedOut,
    MembersNotScreened,
    MissingRating,
    MissingRationaleOnKnockout,
    NegativeScore,
    OverrideWithoutJustification,
    UnknownAssessment,
    UnknownInstance,
    UnknownSet,
    ValidationError,
    WrongStep,
)


class InputFactor(Enum):
    DATA_QUALITY = "data-quality"
    MODEL_CORRECTNESS = "model-correctness"
    MODEL_SUITABILITY = "model-suitability"
    CASE_TYPE = "case-type"
    CONTROL = "control"
    COMPLIANCE = "compliance"
    OUTCOME = "outcome"
    PERFORMANCE = "performance"
    STANDARDIZATION = "standardization"
    REACTION_EFFECTIVENESS = "reaction-effectiveness"
    REACTION_COST = "reaction-cost"


FACTORS_BY_STEP: dict[int, tuple[InputFactor, ...]] = {
    1: (InputFactor.DATA_QUALITY,),
    2: (InputFactor.MODEL_CORRECTNESS, InputFactor.MODEL_SUITABILITY),
    3: (InputFactor.CASE_TYPE, InputFactor.CONTROL),
    4: (InputFactor.COMPLIANCE, InputFactor.OUTCOME, InputFactor.PERFORMANCE,
        InputFactor.STANDARDIZATION),
    5: (InputFactor.REACTION_EFFECTIVENESS, InputFactor.REACTION_COST),
}


class OutputCategory(Enum):
    FALSE_ALARM_LOG = "false-alarm-log"
    FALSE_ALARM_MODEL = "false-alarm-model"
    EXCEPTION = "exception"
    NEUTRAL_DEVIATION = "neutral-deviation"
    REACTION_INEFFICIENT_DEVIATION = "reaction-inefficient-deviation"
    POSITIVE_DEVIATION = "positive-deviation"
    NEGATIVE_DEVIATION = "negative-deviation"


class ActionKind(Enum):
    FILTER_OUT = "filter-out"
    IGNORE = "ignore"
    PREVENT = "prevent"
    ADOPT = "adopt"


@dataclass(frozen=True)
class ActionRecommendation:
    kind: ActionKind
    followups: tuple[str, ...] = ()


ACTION_FOR_CATEGORY: dict[OutputCategory, ActionRecommendation] = {
    OutputCategory.FALSE_ALARM_LOG: ActionRecommendation(
        ActionKind.FILTER_OUT,
        ("Consider improving event data quality for future analyses.",),
    ),
    OutputCategory.FALSE_ALARM_MODEL: ActionRecommendation(
        ActionKind.FILTER_OUT,
        ("Correct the process model if the mismatch will recur.",),
    ),
    OutputCategory.EXCEPTION: ActionRecommendation(
        ActionKind.FILTER_OUT,
        ("Decide whether to add this behavior to the official model, weighing model simplicity.",),
    ),
    OutputCategory.NEUTRAL_DEVIATION: ActionRecommendation(ActionKind.IGNORE),
    OutputCategory.REACTION_INEFFICIENT_DEVIATION: ActionRecommendation(ActionKind.IGNORE),
    OutputCategory.POSITIVE_DEVIATION: ActionRecommendation(
        ActionKind.ADOPT,
        ("Adopt the behavior into the standard process, e.g. train staff in the new approach.",),
    ),
    OutputCategory.NEGATIVE_DEVIATION: ActionRecommendation(
        ActionKind.PREVENT,
        ("Implement preventive measures such as system controls, training, or monitoring.",),
    ),
}


class Verdict(Enum):
    POSITIVE = "positive"
    NEUTRAL = "neutral"
    NEGATIVE = "negative"


class ControlStatus(Enum):
    IN_CONTROL = "in-control"
    OUT_OF_CONTROL_EXTERNAL = "out-of-control-external"
    OUT_OF_CONTROL_CONSEQUENTIAL = "out-of-control-consequential"


class Perspective(Enum):
    DIRECT = "direct"
    RISK_OPPORTUNITY = "risk-opportunity"


IMPACT_FACTORS = FACTORS_BY_STEP[4]


@dataclass(frozen=True)
class ImpactRating:
    value: int
    note: str = ""

    def __post_init__(self) -> None:
        if self.value not in (-2, -1, 0, 1, 2):
            raise ValidationError(f"impact rating {self.value} outside -2..2")


@dataclass(frozen=True)
class Override:
    verdict: Verdict
    justification: str


# --- step answers -----------------------------------------------------------

@dataclass(frozen=True)
class Step1Answer:
    data_quality_attributable: bool
    evidence: tuple[str, ...] = ()  # DataQualityFlag references
    rationale: str = ""
    step: int = 1


@dataclass(frozen=True)
class Step2Answer:
    model_correct: bool
    model_suitable: bool
    deviation_solely_due_to_model: bool
    rationale: str = ""
    step: int = 2


@dataclass(frozen=True)
class Step3Answer:
    case_type_justified: bool
    control_short_term: ControlStatus
    adequate_reaction_already_possible: bool
    rationale: str = ""
    step: int = 3


@dataclass(frozen=True)
class Step4Answer:
    ratings: Mapping[tuple[InputFactor, Perspective], ImpactRating]
    override: Override | None = None
    step: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratings", dict(self.ratings))


@dataclass(frozen=True)
class Step5Answer:
    chosen_reaction: str
    effectiveness_score: Fraction
    cost_score: Fraction
    rationale: str = ""
    scale: str | None = None  # label of the configured score scale, if declared
    step: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(self, "effectiveness_score", Fraction(self.effectiveness_score))
        object.__setattr__(self, "cost_score", Fraction(self.cost_score))


StepAnswer = Step1Answer | Step2Answer | Step3Answer | Step4Answer | Step5Answer


class AssessmentState(Enum):
    AWAITING_STEP1 = "awaiting-step-1"
    AWAITING_STEP2 = "awaiting-step-2"
    AWAITING_STEP3 = "awaiting-step-3"
    TRUE_DEVIATION_PENDING = "true-deviation-pending"
    AWAITING_STEP4 = "awaiting-step-4"
    AWAITING_STEP5 = "awaiting-step-5"
    CONCLUDED = "concluded"


_AWAITING_FOR_STEP = {
    1: AssessmentState.AWAITING_STEP1,
    2: AssessmentState.AWAITING_STEP2,
    3: AssessmentState.AWAITING_STEP3,
    4: AssessmentState.AWAITING_STEP4,
    5: AssessmentState.AWAITING_STEP5,
}
_STEP_FOR_AWAITING = {v: k for k, v in _AWAITING_FOR_STEP.items()}


class SubjectKind(Enum):
    INSTANCE = "instance"
    SET = "set"


@dataclass(frozen=True)
class JournalEntry:
    timestamp: str  # ISO datetime; journal is audit data, not payload
    actor: str
    event: str


@dataclass(frozen=True)
class Assessment:
    id: str
    subject_kind: SubjectKind
    subject_id: str
    state: AssessmentState
    answers: tuple[StepAnswer, ...] = ()
    verdict: Verdict | None = None
    category: OutputCategory | None = None
    action: ActionRecommendation | None = None
    journal: tuple[JournalEntry, ...] = ()
    model_version: str = ""
    log_version: str = ""

    def __post_init__(self) -> None:
        concluded = self.state is AssessmentState.CONCLUDED
        if concluded != (self.category is not None) or concluded != (self.action is not None):
            raise ValidationError("concluded <=> category set <=> action set")
        steps = [a.step for a in self.answers]
        if steps != sorted(set(steps)):
            raise ValidationError("answer steps must be strictly increasing")

    def current_step(self) -> int | None:
        return _STEP_FOR_AWAITING.get(self.state)


def required_factors(assessment: Assessment) -> tuple[InputFactor, ...]:
    """Factors the engine still needs — empty once concluded or pending aggregation."""
    step = assessment.current_step()
    return FACTORS_BY_STEP[step] if step is not None else ()


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _journaled(assessment: Assessment, actor: str, event: str,
               now: datetime | None = None) -> tuple[JournalEntry, ...]:
    stamp = (now or _utcnow()).isoformat()
    return assessment.journal + (JournalEntry(stamp, actor, event),)


def _conclude(assessment: Assessment, answer: StepAnswer, category: OutputCategory,
              actor: str, now: datetime | None, via: str) -> Assessment:
    action = ACTION_FOR_CATEGORY[category]
    journal = _journaled(assessment, actor,
                         f"{via}: concluded {category.value} / {action.kind.value}", now)
    return replace(assessment, state=AssessmentState.CONCLUDED,
                   answers=assessment.answers + (answer,),
                   category=category, action=action, journal=journal)


def _advance(assessment: Assessment, answer: StepAnswer, state: AssessmentState,
             actor: str, now: datetime | None, note: str, **extra) -> Assessment:
    journal = _journaled(assessment, actor, note, now)
    return replace(assessment, state=state, answers=assessment.answers + (answer,),
                   journal=journal, **extra)


def _require_state(assessment: Assessment, expected: AssessmentState, step: int) -> None:
    if assessment.state is not expected:
        raise WrongStep(
            f"assessment {assessment.id!r} is in state {assessment.state.value!r}, "
            f"step {step} not accepted"
        )


def submit_step1(assessment: Assessment, answer: Step1Answer, *,
                 actor: str = "analyst", now: datetime | None = None) -> Assessment:
    """Log-error check: attributable to poor data quality -> false alarm (log)."""
    _require_state(assessment, AssessmentState.AWAITING_STEP1, 1)
    if answer.data_quality_attributable:
        if not answer.rationale.strip():
            raise MissingRationaleOnKnockout("step 1 knockout requires a rationale")
        return _conclude(assessment, answer, OutputCategory.FALSE_ALARM_LOG, actor, now,
                         "step 1 (data quality attributable)")
    return _advance(assessment, answer, AssessmentState.AWAITING_STEP2, actor, now,
                    "step 1: no data-quality knockout")


def submit_step2(assessment: Assessment, answer: Step2Answer, *,
                 actor: str = "analyst", now: datetime | None = None) -> Assessment:
    """Model-error check: deviation solely due to model problems -> false alarm (model)."""
    _require_state(assessment, AssessmentState.AWAITING_STEP2, 2)
    model_problem = (not answer.model_correct) or (not answer.model_suitable)
    if answer.deviation_solely_due_to_model and not model_problem:
        raise InconsistentAnswer(
            "deviation cannot be solely due to the model while the model is both correct and suitable"
        )
    if model_problem and answer.deviation_solely_due_to_model:
        if not answer.rationale.strip():
            raise MissingRationaleOnKnockout("step 2 knockout requires a rationale")
        return _conclude(assessment, answer, OutputCategory.FALSE_ALARM_MODEL, actor, now,
                         "step 2 (model problem explains deviation)")
    return _advance(assessment, answer, AssessmentState.AWAITING_STEP3, actor, now,
                    "step 2: no model knockout")


def submit_step3(assessment: Assessment, answer: Step3Answer, *,
                 actor: str = "analyst", now: datetime | None = None) -> Assessment:
    """Exception check: justified case type, or uncontrollable conditions with
    no adequate reaction available yet. Passing both leaves a true deviation."""
    _require_state(assessment, AssessmentState.AWAITING_STEP3, 3)
    uncontrolled = (answer.control_short_term is not ControlStatus.IN_CONTROL
                    and not answer.adequate_reaction_already_possible)
    if answer.case_type_justified or uncontrolled:
        if not answer.rationale.strip():
            raise MissingRationaleOnKnockout("step 3 knockout requires a rationale")
        reason = "case type justified" if answer.case_type_justified else "outside control, no adequate reaction yet"
        return _conclude(assessment, answer, OutputCategory.EXCEPTION, actor, now,
                         f"step 3 ({reason})")
    return _advance(assessment, answer, AssessmentState.TRUE_DEVIATION_PENDING, actor, now,
                    "step 3: true deviation, eligible for aggregation")


def combine_impact(
    ratings: Mapping[tuple[InputFactor, Perspective], ImpactRating],
    override: Override | None = None,
) -> Verdict:
    """Default combination rule: sign of the sum of all eight ratings.

    The four impact factors are judged together across both perspectives;
    an explicit analyst override (with justification) wins over the sum.
    """
    missing = [
        f"{f.value}/{p.value}"
        for f in IMPACT_FACTORS
        for p in Perspective
        if (f, p) not in ratings
    ]
    if missing:
        raise MissingRating(f"missing impact ratings: {missing}")
    if override is not None:
        if not override.justification.strip():
            raise OverrideWithoutJustification("impact override requires a justification")
        return override.verdict
    total = sum(r.value for r in ratings.values())
    if total > 0:
        return Verdict.POSITIVE
    if total < 0:
        return Verdict.NEGATIVE
    return Verdict.NEUTRAL


def submit_step4(assessment: Assessment, answer: Step4Answer, *,
                 actor: str = "analyst", now: datetime | None = None) -> Assessment:
    """Impact evaluation: neutral concludes; positive/negative continue to step 5."""
    _require_state(assessment, AssessmentState.AWAITING_STEP4, 4)
    verdict = combine_impact(answer.ratings, answer.override)
    total = sum(r.value for r in answer.ratings.values())
    how = f"override ({answer.override.justification})" if answer.override else f"rating sum {total:+d}"
    if verdict is Verdict.NEUTRAL:
        concluded = _conclude(assessment, answer, OutputCategory.NEUTRAL_DEVIATION, actor, now,
                              f"step 4 (neutral impact via {how})")
        return replace(concluded, verdict=verdict)
    return _advance(assessment, answer, AssessmentState.AWAITING_STEP5, actor, now,
                    f"step 4: {verdict.value} impact via {how}", verdict=verdict)


def submit_step5(assessment: Assessment, answer: Step5Answer, *,
                 actor: str = "analyst", now: datetime | None = None) -> Assessment:
    """Reaction check: effectiveness must exceed cost, regardless of impact.

    The boundary counts as inefficient: a reaction exactly worth its cost is
    not worth taking.
    """
    _require_state(assessment, AssessmentState.AWAITING_STEP5, 5)
    if answer.effectiveness_score < 0 or answer.cost_score < 0:
        raise NegativeScore("effectiveness and cost scores must be non-negative")
    if answer.effectiveness_score <= answer.cost_score:
        return _conclude(assessment, answer, OutputCategory.REACTION_INEFFICIENT_DEVIATION,
                         actor, now,
                         f"step 5 (effectiveness {answer.effectiveness_score} <= cost {answer.cost_score})")
    if assessment.verdict is Verdict.POSITIVE:
        return _conclude(assessment, answer, OutputCategory.POSITIVE_DEVIATION, actor, now,
                         "step 5 (worthwhile reaction to positive impact)")
    return _conclude(assessment, answer, OutputCategory.NEGATIVE_DEVIATION, actor, now,
                     "step 5 (worthwhile reaction to negative impact)")


_SUBMITTERS: dict[int, Callable[..., Assessment]] = {
    1: submit_step1, 2: submit_step2, 3: submit_step3, 4: submit_step4, 5: submit_step5,
}


def submit(assessment: Assessment, answer: StepAnswer, *,
           actor: str = "analyst", now: datetime | None = None) -> Assessment:
    return _SUBMITTERS[answer.step](assessment, answer, actor=actor, now=now)


# --- decision table -----------------------------------------------------------

@dataclass(frozen=True)
class DecisionPath:
    id: str
    steps: tuple[int, ...]
    factors: tuple[InputFactor, ...]
    conditions: tuple[str, ...]
    category: OutputCategory
    action: ActionKind


def _factors_through(step: int) -> tuple[InputFactor, ...]:
    return tuple(itertools.chain.from_iterable(FACTORS_BY_STEP[s] for s in range(1, step + 1)))


_PASS_1 = "step 1: deviation not attributable to data quality"
_PASS_2 = "step 2: deviation not solely due to model problems"
_PASS_3 = "step 3: neither justified case type nor uncontrollable conditions (true deviation)"
_PASS_4_POS = "step 4: combined impact positive"
_PASS_4_NEG = "step 4: combined impact negative"


def decision_table() -> tuple[DecisionPath, ...]:
    """Every root-to-leaf path of the assessment state machine."""
    paths = (
        DecisionPath(
            "step1-data-quality", (1,), _factors_through(1),
            ("step 1: deviation clearly attributable to poor data quality",),
            OutputCategory.FALSE_ALARM_LOG, ActionKind.FILTER_OUT,
        ),
        DecisionPath(
            "step2-model-problem", (1, 2), _factors_through(2),
            (_PASS_1, "step 2: model incorrect or unsuitable, and deviation solely due to that"),
            OutputCategory.FALSE_ALARM_MODEL, ActionKind.FILTER_OUT,
        ),
        DecisionPath(
            "step3-case-type", (1, 2, 3), _factors_through(3),
            (_PASS_1, _PASS_2, "step 3: case type falls outside the model's business rules"),
            OutputCategory.EXCEPTION, ActionKind.FILTER_OUT,
        ),
        DecisionPath(
            "step3-uncontrollable", (1, 2, 3), _factors_through(3),
            (_PASS_1, _PASS_2,
             "step 3: conditions outside organizational control and no adequate reaction was possible yet"),
            OutputCategory.EXCEPTION, ActionKind.FILTER_OUT,
        ),
        DecisionPath(
            "step4-neutral-impact", (1, 2, 3, 4), _factors_through(4),
            (_PASS_1, _PASS_2, _PASS_3,
             "step 4: combined direct and risk/opportunity impact is neutral"),
            OutputCategory.NEUTRAL_DEVIATION, ActionKind.IGNORE,
        ),
        DecisionPath(
            "step5-inefficient-after-positive", (1, 2, 3, 4, 5), _factors_through(5),
            (_PASS_1, _PASS_2, _PASS_3, _PASS_4_POS,
             "step 5: reaction effectiveness <= reaction cost (impact disregarded)"),
            OutputCategory.REACTION_INEFFICIENT_DEVIATION, ActionKind.IGNORE,
        ),
        DecisionPath(
            "step5-inefficient-after-negative", (1, 2, 3, 4, 5), _factors_through(5),
            (_PASS_1, _PASS_2, _PASS_3, _PASS_4_NEG,
             "step 5: reaction effectiveness <= reaction cost (impact disregarded)"),
            OutputCategory.REACTION_INEFFICIENT_DEVIATION, ActionKind.IGNORE,
        ),
        DecisionPath(
            "step5-adopt-positive", (1, 2, 3, 4, 5), _factors_through(5),
            (_PASS_1, _PASS_2, _PASS_3, _PASS_4_POS,
             "step 5: reaction effectiveness exceeds its cost"),
            OutputCategory.POSITIVE_DEVIATION, ActionKind.ADOPT,
        ),
        DecisionPath(
            "step5-prevent-negative", (1, 2, 3, 4, 5), _factors_through(5),
            (_PASS_1, _PASS_2, _PASS_3, _PASS_4_NEG,
             "step 5: reaction effectiveness exceeds its cost"),
            OutputCategory.NEGATIVE_DEVIATION, ActionKind.PREVENT,
        ),
    )
    return paths


def decision_path_to_dict(path: DecisionPath) -> dict:
    return {
        "id": path.id,
        "steps": list(path.steps),
        "factors": [f.value for f in path.factors],
        "conditions": list(path.conditions),
        "category": path.category.value,
        "action": path.action.value,
    }


def decision_table_to_dict() -> dict:
    paths = decision_table()
    return {
        "paths": [decision_path_to_dict(p) for p in paths],
        "categories": [c.value for c in OutputCategory],
        "factors": [f.value for f in InputFactor],
        "actions": [a.value for a in ActionKind],
        "steps": sorted(FACTORS_BY_STEP),
    }


# --- engine with registries ------------------------------------------------------

class TriageEngine:
    """Registry-backed facade: existence checks, id assignment, per-id locking.

    ``instances``, ``sets``, and ``assessments`` may be externally owned dicts
    (the workspace passes its own stores); the engine mutates only
    ``assessments`` and only under the per-assessment lock.
    """

    def __init__(
        self,
        instances: dict[str, DeviationInstance] | None = None,
        sets: dict[str, DeviationSet] | None = None,
        assessments: dict[str, Assessment] | None = None,
        *,
        clock: Callable[[], datetime] | None = None,
    ) -> None:
        self.instances = instances if instances is not None else {}
        self.sets = sets if sets is not None else {}
        self.assessments = assessments if assessments is not None else {}
        self._clock = clock or _utcnow
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- registration ------------------------------------------------------------

    def register_instance(self, instance: DeviationInstance) -> None:
        self.instances[instance.id] = instance

    def register_set(self, dset: DeviationSet) -> None:
        self.sets[dset.id] = dset

    def _lock_for(self, assessment_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(assessment_id, threading.Lock())

    def _next_id(self) -> str:
        return f"asmt-{len(self.assessments) + 1:06d}"

    # -- lifecycle ----------------------------------------------------------------

    def start_individual(self, instance_id: str, model_version: str = "",
                         log_version: str = "", *, actor: str = "analyst") -> Assessment:
        if instance_id not in self.instances:
            raise UnknownInstance(f"no deviation instance {instance_id!r}")
        prior = [a.id for a in self.assessments.values()
                 if a.subject_kind is SubjectKind.INSTANCE and a.subject_id == instance_id]
        assessment = Assessment(
            id=self._next_id(),
            subject_kind=SubjectKind.INSTANCE,
            subject_id=instance_id,
            state=AssessmentState.AWAITING_STEP1,
            model_version=model_version,
            log_version=log_version,
        )
        note = f"started individual assessment of instance {instance_id}"
        if prior:
            note += f" (duplicate: instance already assessed by {', '.join(sorted(prior))})"
        assessment = replace(assessment, journal=_journaled(assessment, actor, note, self._clock()))
        self.assessments[assessment.id] = assessment
        return assessment

    def individual_outcome(self, instance_id: str) -> Assessment | None:
        """Most recent assessment of the instance that finished its individual phase."""
        done = [
            a for a in self.assessments.values()
            if a.subject_kind is SubjectKind.INSTANCE and a.subject_id == instance_id
            and a.state in (AssessmentState.TRUE_DEVIATION_PENDING, AssessmentState.CONCLUDED)
        ]
        return max(done, key=lambda a: a.id) if done else None

    def start_aggregated(self, set_id: str, *, actor: str = "analyst") -> Assessment:
        dset = self.sets.get(set_id)
        if dset is None:
            raise UnknownSet(f"no deviation set {set_id!r}")
        if not dset.members:
            raise MembersNotScreened(f"set {set_id!r} has no members to screen")
        unscreened: list[str] = []
        for member in dset.members:
            if member not in self.instances:
                raise UnknownInstance(f"set member {member!r} not registered")
            outcome = self.individual_outcome(member)
            if outcome is None:
                unscreened.append(member)
            elif outcome.state is AssessmentState.CONCLUDED:
                raise MemberKnockedOut(
                    f"member {member!r} concluded {outcome.category.value}; not a true deviation"
                )
        if unscreened:
            raise MembersNotScreened(f"members without completed individual phase: {unscreened}")
        assessment = Assessment(
            id=self._next_id(),
            subject_kind=SubjectKind.SET,
            subject_id=set_id,
            state=AssessmentState.AWAITING_STEP4,
        )
        note = f"started aggregated assessment of set {set_id} ({dset.frequency} members)"
        assessment = replace(assessment, journal=_journaled(assessment, actor, note, self._clock()))
        self.assessments[assessment.id] = assessment
        return assessment

    def get(self, assessment_id: str) -> Assessment:
        try:
            return self.assessments[assessment_id]
        except KeyError:
            raise UnknownAssessment(f"no assessment {assessment_id!r}") from None

    def submit(self, assessment_id: str, answer: StepAnswer, *, actor: str = "analyst") -> Assessment:
        with self._lock_for(assessment_id):
            updated = submit(self.get(assessment_id), answer, actor=actor, now=self._clock())
            self.assessments[assessment_id] = updated
            return updated

    def screen_set_fast_path(
        self,
        set_id: str,
        answers: Sequence[Step1Answer | Step2Answer | Step3Answer],
        *,
        confirmed_by: str,
    ) -> list[Assessment]:
        """Apply identical step 1-3 answers to every member of a set.

        Opt-in shortcut for homogeneous sets; requires an explicit confirming
        analyst, and every produced assessment journals the confirmation.
        """
        if not confirmed_by.strip():
            raise ValidationError("fast-path screening requires a confirming analyst")
        dset = self.sets.get(set_id)
        if dset is None:
            raise UnknownSet(f"no deviation set {set_id!r}")
        ordered = sorted(answers, key=lambda a: a.step)
        if [a.step for a in ordered] != list(range(1, len(ordered) + 1)):
            raise ValidationError("fast-path answers must cover steps 1..k without gaps")
        results: list[Assessment] = []
        for member in dset.members:
            outcome = self.individual_outcome(member)
            if outcome is not None:
                results.append(outcome)
                continue
            assessment = self.start_individual(member, actor=confirmed_by)
            assessment = replace(assessment, journal=_journaled(
                assessment, confirmed_by,
                f"fast-path screening for set {set_id}: shared answers confirmed by {confirmed_by}",
                self._clock()))
            self.assessments[assessment.id] = assessment
            for answer in ordered:
                assessment = self.submit(assessment.id, answer, actor=confirmed_by)
                if assessment.state is AssessmentState.CONCLUDED:
                    break
            results.append(assessment)
        return results


# --- wire codecs -------------------------------------------------------------------

def _rating_key(factor: InputFactor, perspective: Perspective) -> str:
    return f"{factor.value}/{perspective.value}"


def answer_to_dict(answer: StepAnswer) -> dict:
    if isinstance(answer, Step1Answer):
        return {
            "step": 1,
            "data_quality_attributable": answer.data_quality_attributable,
            "evidence": list(answer.evidence),
            "rationale": answer.rationale,
        }
    if isinstance(answer, Step2Answer):
        return {
            "step": 2,
            "model_correct": answer.model_correct,
            "model_suitable": answer.model_suitable,
            "deviation_solely_due_to_model": answer.deviation_solely_due_to_model,
            "rationale": answer.rationale,
        }
    if isinstance(answer, Step3Answer):
        return {
            "step": 3,
            "case_type_justified": answer.case_type_justified,
            "control_short_term": answer.control_short_term.value,
            "adequate_reaction_already_possible": answer.adequate_reaction_already_possible,
            "rationale": answer.rationale,
        }
    if isinstance(answer, Step4Answer):
        ratings = [
            {
                "factor": f.value,
                "perspective": p.value,
                "value": answer.ratings[(f, p)].value,
                "note": answer.ratings[(f, p)].note,
            }
            for f in IMPACT_FACTORS
            for p in Perspective
            if (f, p) in answer.ratings
        ]
        doc: dict = {"step": 4, "ratings": ratings}
        if answer.override is not None:
            doc["override"] = {
                "verdict": answer.override.verdict.value,
                "justification": answer.override.justification,
            }
        return doc
    if isinstance(answer, Step5Answer):
        doc = {
            "step": 5,
            "chosen_reaction": answer.chosen_reaction,
            "effectiveness_score": fraction_to_wire(answer.effectiveness_score),
            "cost_score": fraction_to_wire(answer.cost_score),
            "rationale": answer.rationale,
        }
        if answer.scale is not None:
            doc["scale"] = answer.scale
        return doc
    raise ValidationError(f"unknown answer type {type(answer).__name__}")


def _expect_bool(doc: Mapping, key: str) -> bool:
    value = doc.get(key)
    if not isinstance(value, bool):
        raise ValidationError(f"{key}: expected true/false, got {value!r}")
    return value


def answer_from_dict(doc: Mapping) -> StepAnswer:
    step = doc.get("step")
    try:
        if step == 1:
            return Step1Answer(
                data_quality_attributable=_expect_bool(doc, "data_quality_attributable"),
                evidence=tuple(str(e) for e in doc.get("evidence", [])),
                rationale=str(doc.get("rationale", "")),
            )
        if step == 2:
            return Step2Answer(
                model_correct=_expect_bool(doc, "model_correct"),
                model_suitable=_expect_bool(doc, "model_suitable"),
                deviation_solely_due_to_model=_expect_bool(doc, "deviation_solely_due_to_model"),
                rationale=str(doc.get("rationale", "")),
            )
        if step == 3:
            return Step3Answer(
                case_type_justified=_expect_bool(doc, "case_type_justified"),
                control_short_term=ControlStatus(doc["control_short_term"]),
                adequate_reaction_already_possible=_expect_bool(doc, "adequate_reaction_already_possible"),
                rationale=str(doc.get("rationale", "")),
            )
        if step == 4:
            ratings: dict[tuple[InputFactor, Perspective], ImpactRating] = {}
            for r in doc.get("ratings", []):
                key = (InputFactor(r["factor"]), Perspective(r["perspective"]))
                ratings[key] = ImpactRating(int(r["value"]), str(r.get("note", "")))
            override = None
            if doc.get("override") is not None:
                override = Override(
                    Verdict(doc["override"]["verdict"]),
                    str(doc["override"].get("justification", "")),
                )
            return Step4Answer(ratings=ratings, override=override)
        if step == 5:
            return Step5Answer(
                chosen_reaction=str(doc.get("chosen_reaction", "")),
                effectiveness_score=fraction_from_wire(doc["effectiveness_score"], "effectiveness_score"),
                cost_score=fraction_from_wire(doc["cost_score"], "cost_score"),
                rationale=str(doc.get("rationale", "")),
                scale=doc.get("scale"),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad step-{step} answer: {exc}") from exc
    raise ValidationError(f"answer step must be 1..5, got {step!r}")


ASSESSMENT_SCHEMA = "assessment@1"


def assessment_to_dict(assessment: Assessment) -> dict:
    return {
        "schema": ASSESSMENT_SCHEMA,
        "id": assessment.id,
        "subject": {"kind": assessment.subject_kind.value, "id": assessment.subject_id},
        "state": assessment.state.value,
        "answers": [answer_to_dict(a) for a in assessment.answers],
        "verdict": assessment.verdict.value if assessment.verdict else None,
        "category": assessment.category.value if assessment.category else None,
        "action": (
            {"kind": assessment.action.kind.value, "followups": list(assessment.action.followups)}
            if assessment.action else None
        ),
        "journal": [
            {"timestamp": j.timestamp, "actor": j.actor, "event": j.event}
            for j in assessment.journal
        ],
        "model_version": assessment.model_version,
        "log_version": assessment.log_version,
    }


def assessment_from_dict(doc: Mapping) -> Assessment:
    from .errors import SchemaVersionMismatch

    if doc.get("schema") != ASSESSMENT_SCHEMA:
        raise SchemaVersionMismatch(f"expected {ASSESSMENT_SCHEMA}, got {doc.get('schema')!r}")
    try:
        action = None
        if doc.get("action") is not None:
            action = ActionRecommendation(
                ActionKind(doc["action"]["kind"]),
                tuple(str(f) for f in doc["action"].get("followups", [])),
            )
        return Assessment(
            id=str(doc["id"]),
            subject_kind=SubjectKind(doc["subject"]["kind"]),
            subject_id=str(doc["subject"]["id"]),
            state=AssessmentState(doc["state"]),
            answers=tuple(answer_from_dict(a) for a in doc.get("answers", [])),
            verdict=Verdict(doc["verdict"]) if doc.get("verdict") else None,
            category=OutputCategory(doc["category"]) if doc.get("category") else None,
            action=action,
            journal=tuple(
                JournalEntry(str(j["timestamp"]), str(j["actor"]), str(j["event"]))
                for j in doc.get("journal", [])
            ),
            model_version=str(doc.get("model_version", "")),
            log_version=str(doc.get("log_version", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad assessment document: {exc}") from exc
