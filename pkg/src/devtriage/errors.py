"""Typed errors raised across the package.

Every failure mode callers are expected to handle has its own class so that
the CLI and HTTP layers can map errors to exit codes / status codes without
string matching.
"""


class TriageError(Exception):
    """Base class for all errors raised by devtriage."""


# --- model / log parsing ---------------------------------------------------

class MalformedInput(TriageError):
    """Input bytes are not parseable in the declared format subset."""


class StructuralError(TriageError):
    """Parsed net violates structural rules (bipartiteness, dangling ids)."""


class MissingMarking(TriageError):
    """Net lacks an initial or final marking."""


class UnknownPlace(TriageError):
    pass


class UnknownTransition(TriageError):
    pass


class NotEnabled(TriageError):
    """Transition fired without the required input tokens."""


class DuplicateCaseId(TriageError):
    pass


class MissingColumn(TriageError):
    pass


# --- alignment -------------------------------------------------------------

class NoFinalMarkingReachable(TriageError):
    """Search exhausted the state space without reaching the final marking."""


class StateBudgetExceeded(TriageError):
    """Alignment search hit its state cap; fails loudly instead of hanging."""


class DepthBoundExceeded(TriageError):
    """Brute-force enumeration found no complete alignment within its bound."""


class DivisionByZeroWorstCost(TriageError):
    pass


# --- deviation abstraction -------------------------------------------------

class EmptyDeviation(TriageError):
    """Neither skipped nor inserted activities: nothing to classify."""


class NormalizationGap(TriageError):
    """Strict similarity mode hit an activity absent from the normalization map."""


# --- assessment engine -----------------------------------------------------

class UnknownInstance(TriageError):
    pass


class UnknownSet(TriageError):
    pass


class UnknownAssessment(TriageError):
    pass


class WrongStep(TriageError):
    """Answer submitted for a step the assessment is not awaiting."""


class MissingRationaleOnKnockout(TriageError):
    """An answer that concludes the assessment early must carry a rationale."""


class InconsistentAnswer(TriageError):
    pass


class MembersNotScreened(TriageError):
    """Aggregated assessment started before every member passed steps 1-3."""


class MemberKnockedOut(TriageError):
    """Aggregated assessment contains a member concluded as false alarm/exception."""


class MissingRating(TriageError):
    pass


class OverrideWithoutJustification(TriageError):
    pass


class NegativeScore(TriageError):
    pass


# --- persistence / wire ----------------------------------------------------

class IoError(TriageError):
    """Filesystem failure while persisting or loading a workspace."""


class SchemaVersionMismatch(TriageError):
    """Document carries an unknown schema marker."""


class ValidationError(TriageError):
    """Wire payload failed validation (bad enum member, wrong shape, ...)."""
