"""devtriage: conformance checking plus guided deviation-desirability triage.

Detect where traces deviate from a normative Petri net via optimal
alignments, abstract the deviations into patterns, aggregate them into
sets, and walk each through a five-step knockout assessment that ends in
one of seven output categories with an action recommendation.
"""

from .alignment import (
    Alignment,
    CostFunction,
    DEFAULT_COSTS,
    Move,
    MoveKind,
    align,
    brute_force_align,
    extract_deviations,
    fitness,
    worst_case_cost,
)
from .deviations import (
    ANY_SEQUENCE,
    AggregationKind,
    AggregationMode,
    DeviationInstance,
    DeviationSet,
    PatternKind,
    SAME_SEQUENCE,
    aggregate,
    classify_pattern,
    fingerprint,
    similar_behavior,
)
from .engine import (
    ActionKind,
    ActionRecommendation,
    Assessment,
    AssessmentState,
    ControlStatus,
    ImpactRating,
    InputFactor,
    OutputCategory,
    Override,
    Perspective,
    Step1Answer,
    Step2Answer,
    Step3Answer,
    Step4Answer,
    Step5Answer,
    TriageEngine,
    Verdict,
    combine_impact,
    decision_table,
    required_factors,
    submit,
)
from .errors import TriageError
from .eventlog import ColumnMapping, Event, EventLog, Trace, detect_quality_flags, parse_csv, parse_xes
from .petri import Marking, ProcessModel, Transition, enabled_transitions, fire, parse_pnml, serialize_pnml
from .workspace import Workspace, build_report, load, persist, run_conformance

__version__ = "0.1.0"
