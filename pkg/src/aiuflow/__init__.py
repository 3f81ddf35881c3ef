"""aiuflow: compile abstract interaction-unit services into device-adapted
presentations and run interactive sessions of the flow."""

from .adapt import (
    AdaptationDecision,
    AdaptationPlan,
    DecisionKind,
    ForkLayout,
    ForkLayoutKind,
    NoColumnFits,
    PlanError,
    plan_aiu,
    plan_fork,
    plan_service,
    select_overview_columns,
)
from .engine import (
    FieldValidationError,
    IllegalOutcome,
    NoMatchingTransition,
    NotActive,
    Session,
    SessionFinished,
    ValidationFailed,
    current_pages,
    legal_outcomes,
    replay_session,
    serialize_session,
    start_session,
    submit,
)
from .metrics import (
    AiuMetrics,
    DegradationReport,
    DeviceProfile,
    ImageKindUnsupported,
    Thresholds,
    default_thresholds,
    degradation,
    load_device_profile,
    measure_aiu,
)
from .model import (
    AiuInstance,
    AiuKind,
    Outcome,
    OutcomeTag,
    ServiceSpec,
)
from .parser import (
    DuplicateIdError,
    SpecError,
    SpecSyntaxError,
    UnknownAiuKindError,
    load_spec,
    parse_spec,
    serialize_spec,
)
from .render import (
    ConcretePage,
    PageOutOfRange,
    RowOutOfRange,
    emit_html,
    emit_text,
    render_detail,
    render_page,
)
from .validation import Diagnostic, DiagnosticCode, check_document, validate_spec

__version__ = "0.1.0"
