"""Session runtime: executes a validated spec as a state machine.

A session tracks the set of active activity nodes (several while inside
a fork), the variable environment, join arrivals, and the submission
history.  Submitting an outcome fires the matching transition, applies
its bindings, and advances control through any structural nodes in the
way (fork, join, decision) until activities or finals are reached.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Iterable, Mapping, Optional, Sequence

from .adapt import AdaptationPlan, ForkLayoutKind, plan_service
from .metrics import DeviceProfile, Thresholds
from .model import (
    LEGAL_OUTCOMES,
    AiuInstance,
    AiuKind,
    Binding,
    Node,
    NodeKind,
    Outcome,
    OutcomeTag,
    ServiceSpec,
    Transition,
    ValueType,
)
from .render import ConcretePage, render_fork_page, render_page
from .validation import Diagnostic, Severity, match_fork_joins, validate_spec

SESSION_RUNNING = "running"
SESSION_FINISHED = "finished"


class EngineError(Exception):
    """Base class; ``code`` is the machine-readable error name."""

    code = "EngineError"


class ValidationFailed(EngineError):
    code = "ValidationFailed"

    def __init__(self, diagnostics: Sequence[Diagnostic]):
        super().__init__(
            "spec does not validate: " + "; ".join(str(d) for d in diagnostics)
        )
        self.diagnostics = list(diagnostics)


class SessionFinished(EngineError):
    code = "SessionFinished"


class NotActive(EngineError):
    code = "NotActive"


class IllegalOutcome(EngineError):
    code = "IllegalOutcome"


class NoMatchingTransition(EngineError):
    code = "NoMatchingTransition"


class FieldValidationError(EngineError):
    code = "FieldValidationError"

    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


def legal_outcomes(kind: AiuKind) -> frozenset[OutcomeTag]:
    """Outcome tags an AIU kind may produce (every kind admits Null)."""
    return LEGAL_OUTCOMES[kind]


def instance_outcomes(aiu: AiuInstance) -> frozenset[OutcomeTag]:
    """Kind outcomes refined by the instance: no OK without the button,
    no commands without declared browsing commands."""
    tags = set(LEGAL_OUTCOMES[aiu.kind])
    if aiu.kind is AiuKind.BROWSE_MESSAGE and not aiu.ok_button:
        tags.discard(OutcomeTag.OK)
    if not aiu.browsing_commands:
        tags.discard(OutcomeTag.COMMAND)
    return frozenset(tags)


@dataclass
class Session:
    id: str
    spec: ServiceSpec
    device: DeviceProfile
    thresholds: Thresholds
    plan: AdaptationPlan
    active: set[str] = field(default_factory=set)
    env: dict[str, Any] = field(default_factory=dict)
    join_arrivals: dict[str, set[str]] = field(default_factory=dict)
    history: list[tuple[str, Outcome]] = field(default_factory=list)
    status: str = SESSION_RUNNING
    fork_joins: dict[str, str] = field(default_factory=dict)


def start_session(
    spec: ServiceSpec,
    device: DeviceProfile,
    thresholds: Optional[Thresholds] = None,
    *,
    session_id: Optional[str] = None,
) -> Session:
    """Validate, plan, and advance control from start to the first activities."""
    diagnostics = [
        d for d in validate_spec(spec) if d.severity is Severity.ERROR
    ]
    if diagnostics:
        raise ValidationFailed(diagnostics)
    thresholds = thresholds or Thresholds()
    plan = plan_service(spec, device, thresholds)
    fork_joins, _ = match_fork_joins(spec)
    session = Session(
        id=session_id or uuid.uuid4().hex,
        spec=spec,
        device=device,
        thresholds=thresholds,
        plan=plan,
        fork_joins=fork_joins,
    )
    _enter_node(session, spec.start)
    if not session.active:
        session.status = SESSION_FINISHED
    return session


def submit(session: Session, node_id: str, outcome: Outcome) -> Session:
    """Apply one outcome to one active node and advance control.

    Browsing commands are self-transitions and leave the active set
    unchanged.  Null (Quit) follows an explicit null-triggered edge when
    one exists, else falls back to the most recently completed other
    activity, else to the start of the flow.
    """
    if session.status != SESSION_RUNNING:
        raise SessionFinished(f"session {session.id} already finished")
    if node_id not in session.active:
        raise NotActive(f"node {node_id!r} is not awaiting input")
    node = session.spec.node(node_id)
    aiu = node.aiu
    assert aiu is not None
    if outcome.tag not in instance_outcomes(aiu):
        raise IllegalOutcome(
            f"{aiu.kind.value} node {node_id!r} cannot produce {outcome.tag.value!r}"
        )
    _check_payload(aiu, outcome)

    transition = _match_transition(session.spec, node_id, outcome)

    if outcome.tag is OutcomeTag.COMMAND:
        # self-transition, explicit or implicit
        if transition is not None:
            _apply_bindings(session, transition, outcome, aiu)
        session.history.append((node_id, outcome))
        return session

    if transition is None and outcome.tag is not OutcomeTag.NULL:
        raise NoMatchingTransition(
            f"no transition from {node_id!r} for {outcome.tag.value!r}"
        )

    session.history.append((node_id, outcome))
    session.active.discard(node_id)
    if transition is not None:
        _apply_bindings(session, transition, outcome, aiu)
        _follow(session, transition)
    else:
        _quit_default(session, node_id)
    if not session.active:
        session.status = SESSION_FINISHED
    return session


def _match_transition(
    spec: ServiceSpec, node_id: str, outcome: Outcome
) -> Optional[Transition]:
    candidates = [
        t
        for t in spec.outgoing(node_id)
        if t.trigger is not None and t.trigger.outcome is outcome.tag
    ]
    keyed = [t for t in candidates if t.trigger and t.trigger.key is not None]
    if outcome.key is not None:
        for t in keyed:
            assert t.trigger is not None
            if t.trigger.key == outcome.key:
                return t
    for t in candidates:
        assert t.trigger is not None
        if t.trigger.key is None:
            return t
    return None


def _quit_default(session: Session, quitting: str) -> None:
    """Default Quit routing: most recent previously-completed other
    activity, else back to start."""
    for past_node, past_outcome in reversed(session.history):
        if past_node == quitting:
            continue
        if past_outcome.tag in (OutcomeTag.NULL, OutcomeTag.COMMAND):
            continue
        if session.spec.has_node(past_node):
            _enter_node(session, past_node)
            return
    _enter_node(session, session.spec.start)


def _follow(session: Session, transition: Transition) -> None:
    target = session.spec.node(transition.target)
    if target.kind is NodeKind.JOIN:
        arrivals = session.join_arrivals.setdefault(target.id, set())
        arrivals.add(transition.source)
        expected = {t.source for t in session.spec.incoming(target.id)}
        if expected <= arrivals:
            for out in session.spec.outgoing(target.id):
                _follow(session, out)
        return
    _enter_kind(session, target)


def _enter_node(session: Session, node_id: str) -> None:
    _enter_kind(session, session.spec.node(node_id))


def _enter_kind(session: Session, node: Node) -> None:
    if node.kind is NodeKind.ACTIVITY:
        session.active.add(node.id)
    elif node.kind is NodeKind.FINAL:
        pass
    elif node.kind is NodeKind.START:
        for out in session.spec.outgoing(node.id):
            _follow(session, out)
    elif node.kind is NodeKind.FORK:
        # a (re-)entered fork restarts its branch group: the matched
        # join must collect a fresh set of arrivals
        join_id = session.fork_joins.get(node.id)
        if join_id is not None:
            session.join_arrivals[join_id] = set()
        for out in session.spec.outgoing(node.id):
            _follow(session, out)
    elif node.kind is NodeKind.DECISION:
        assert node.guard is not None
        branch = (
            OutcomeTag.GUARD_TRUE
            if node.guard.evaluate(session.env)
            else OutcomeTag.GUARD_FALSE
        )
        for out in session.spec.outgoing(node.id):
            if out.trigger is not None and out.trigger.outcome is branch:
                _follow(session, out)
                return
        raise NoMatchingTransition(
            f"decision {node.id!r} has no {branch.value} edge"
        )
    elif node.kind is NodeKind.JOIN:
        # only reachable via _follow, which handles arrivals
        raise NoMatchingTransition(f"cannot enter join {node.id!r} directly")


# ---------------------------------------------------------------------------
# Payloads and bindings
# ---------------------------------------------------------------------------


def _check_payload(aiu: AiuInstance, outcome: Outcome) -> None:
    tag = outcome.tag
    if tag is OutcomeTag.COMMAND:
        if outcome.key not in aiu.browsing_commands:
            raise IllegalOutcome(f"{outcome.key!r} is not a declared browsing command")
    elif tag is OutcomeTag.CHOICE_SELECTED:
        if outcome.key not in {c.key for c in aiu.choices}:
            raise IllegalOutcome(f"{outcome.key!r} is not a declared choice")
    elif tag is OutcomeTag.CHOICES_SELECTED:
        declared = {c.key for c in aiu.choices}
        unknown = [k for k in outcome.keys if k not in declared]
        if unknown:
            raise IllegalOutcome(f"unknown choice keys {unknown}")
    elif tag is OutcomeTag.TUPLE_SELECTED:
        assert aiu.table is not None
        assert outcome.row is not None
        if not 0 <= outcome.row < len(aiu.table.rows):
            raise IllegalOutcome(
                f"row {outcome.row} out of range 0..{len(aiu.table.rows) - 1}"
            )
    elif tag is OutcomeTag.FILLED_FIELDS:
        problems = validate_filled_fields(aiu, outcome.values or {})
        if problems:
            raise FieldValidationError(problems)


def validate_filled_fields(
    aiu: AiuInstance, values: Mapping[str, Any]
) -> list[str]:
    """Check submitted form values against the declared fields."""
    problems: list[str] = []
    declared = {f.name: f for f in aiu.fields}
    for name in values:
        if name not in declared:
            problems.append(f"unknown field {name!r}")
    for f in aiu.fields:
        value = values.get(f.name)
        if value is None or value == "":
            if f.required:
                problems.append(f"field {f.name!r} is required")
            continue
        if f.value_type is ValueType.INTEGER:
            if not isinstance(value, int) or isinstance(value, bool):
                problems.append(f"field {f.name!r} must be an integer")
        elif f.value_type is ValueType.DATE:
            if not isinstance(value, str) or not _is_iso_date(value):
                problems.append(f"field {f.name!r} must be an ISO date (YYYY-MM-DD)")
        else:
            if not isinstance(value, str):
                problems.append(f"field {f.name!r} must be text")
    return problems


def _is_iso_date(value: str) -> bool:
    try:
        date.fromisoformat(value)
    except ValueError:
        return False
    return True


def _apply_bindings(
    session: Session, transition: Transition, outcome: Outcome, aiu: AiuInstance
) -> None:
    for b in transition.bindings:
        value = _select(b, outcome, aiu)
        if value is _ABSENT:
            continue
        session.env[b.var] = value


_ABSENT = object()


def _select(binding: Binding, outcome: Outcome, aiu: AiuInstance) -> Any:
    select = binding.select
    tag = outcome.tag
    if select.startswith("field:"):
        name = select[len("field:") :]
        values = outcome.values or {}
        if name not in values or values[name] in (None, ""):
            return _ABSENT
        return values[name]
    if select.startswith("column:"):
        assert aiu.table is not None and outcome.row is not None
        index = aiu.table.column_index(select[len("column:") :])
        return aiu.table.rows[outcome.row][index]
    if select == "row":
        return outcome.row
    if select == "x":
        return outcome.x
    if select == "y":
        return outcome.y
    if select == "value":
        if tag is OutcomeTag.TUPLE_SELECTED:
            return outcome.row
        if tag is OutcomeTag.CHOICES_SELECTED:
            return ",".join(outcome.keys)
        return outcome.key
    raise EngineError(f"unknown binding selector {select!r}")


# ---------------------------------------------------------------------------
# Pages
# ---------------------------------------------------------------------------


def current_pages(session: Session) -> list[tuple[str, ConcretePage]]:
    """Render one page per active node, honouring fork layouts.

    Merged forks produce one composite page for their still-active
    branches; sequenced forks expose only the first uncompleted branch.
    """
    if session.status != SESSION_RUNNING:
        raise SessionFinished(f"session {session.id} already finished")
    head_fork: dict[str, str] = {}
    for fork_id, layout in session.plan.per_fork.items():
        for head in layout.order:
            head_fork.setdefault(head, fork_id)

    pages: list[tuple[str, ConcretePage]] = []
    consumed: set[str] = set()
    for node in session.spec.nodes:
        if node.id in consumed or node.id not in session.active:
            continue
        fork_id = head_fork.get(node.id)
        if fork_id is None:
            pages.append((node.id, _render_node(session, node.id)))
            consumed.add(node.id)
            continue
        layout = session.plan.per_fork[fork_id]
        active_heads = [h for h in layout.order if h in session.active]
        consumed.update(layout.order)
        if not active_heads:
            continue
        if layout.kind is ForkLayoutKind.SEQUENCED or len(active_heads) == 1:
            pages.append((active_heads[0], _render_node(session, active_heads[0])))
        else:
            parts = [
                (session.spec.node(h), session.plan.per_node[h])
                for h in active_heads
            ]
            page = render_fork_page(
                fork_id, parts, session.device, env=session.env
            )
            pages.append((fork_id, page))
    return pages


def _render_node(session: Session, node_id: str, page: int = 1) -> ConcretePage:
    node = session.spec.node(node_id)
    decision = session.plan.per_node[node_id]
    return render_page(node, decision, session.device, page, env=session.env)


def render_session_page(session: Session, node_id: str, page: int) -> ConcretePage:
    """Re-render one active node at a given page index (page navigation)."""
    if session.status != SESSION_RUNNING:
        raise SessionFinished(f"session {session.id} already finished")
    if node_id in session.plan.per_fork:
        layout = session.plan.per_fork[node_id]
        active_heads = [h for h in layout.order if h in session.active]
        if not active_heads:
            raise NotActive(f"fork {node_id!r} has no active branches")
        parts = [
            (session.spec.node(h), session.plan.per_node[h]) for h in active_heads
        ]
        return render_fork_page(node_id, parts, session.device, page, env=session.env)
    if node_id not in session.active:
        raise NotActive(f"node {node_id!r} is not awaiting input")
    return _render_node(session, node_id, page)


# ---------------------------------------------------------------------------
# Replay and serialization
# ---------------------------------------------------------------------------


def replay_session(
    spec: ServiceSpec,
    device: DeviceProfile,
    thresholds: Optional[Thresholds],
    history: Iterable[tuple[str, Outcome]],
    *,
    session_id: Optional[str] = None,
) -> Session:
    """Rebuild a session by resubmitting a recorded history from the start."""
    session = start_session(spec, device, thresholds, session_id=session_id)
    for node_id, outcome in list(history):
        submit(session, node_id, outcome)
    return session


def serialize_session(session: Session) -> str:
    """Canonical JSON for state comparison: replaying a history must
    reproduce this byte-for-byte."""
    doc = {
        "id": session.id,
        "spec": session.spec.name,
        "device": session.device.id,
        "status": session.status,
        "active": sorted(session.active),
        "env": {k: session.env[k] for k in sorted(session.env)},
        "joinArrivals": {
            join: sorted(arrived)
            for join, arrived in sorted(session.join_arrivals.items())
        },
        "history": [
            [node_id, outcome.to_doc()] for node_id, outcome in session.history
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
