"""Graph-level validation of parsed service specs.

Validation is phase-gated: structural defects (missing start, dangling
transition references, malformed triggers) suppress the graph analyses
that would only cascade noise from them.  A clean spec guarantees the
engine total transition lookup for every legal outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Union

from .model import (
    COMMAND_KINDS,
    GUARD_TAGS,
    LEGAL_OUTCOMES,
    AiuInstance,
    Node,
    NodeKind,
    OutcomeTag,
    ServiceSpec,
    Transition,
    ValueType,
    payload_problems,
    placeholder_variables,
)
from .parser import SpecError, parse_spec


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class DiagnosticCode(str, Enum):
    SYNTAX_ERROR = "SyntaxError"
    UNKNOWN_AIU_KIND = "UnknownAiuKind"
    DUPLICATE_ID = "DuplicateId"
    MISSING_START = "MissingStart"
    NO_FINAL = "NoFinal"
    FINALS_MISMATCH = "FinalsMismatch"
    DANGLING_TRANSITION = "DanglingTransition"
    BAD_STRUCTURE = "BadStructure"
    ILLEGAL_TRIGGER = "IllegalTrigger"
    MISSING_DECISION_BRANCH = "MissingDecisionBranch"
    BAD_BINDING = "BadBinding"
    UNDECLARED_VARIABLE = "UndeclaredVariable"
    UNREACHABLE_NODE = "UnreachableNode"
    NO_PATH_TO_FINAL = "NoPathToFinal"
    UNMATCHED_FORK = "UnmatchedFork"
    UNHANDLED_OUTCOME = "UnhandledOutcome"
    AMBIGUOUS_TRANSITION = "AmbiguousTransition"
    NON_SELF_BROWSING_COMMAND = "NonSelfBrowsingCommand"
    UNBOUND_VARIABLE = "UnboundVariable"


@dataclass(frozen=True)
class Diagnostic:
    code: DiagnosticCode
    message: str
    severity: Severity = Severity.ERROR
    node: Optional[str] = None
    edge: Optional[str] = None

    def __str__(self) -> str:
        where = self.node or self.edge or "-"
        return f"{self.severity.value}[{self.code.value}] {where}: {self.message}"


def _edge_ref(t: Transition) -> str:
    return f"{t.source}->{t.target}"


# Binding selector -> (legal outcome tags, value type produced).
# ``field:`` and ``column:`` selectors are resolved against the AIU.
_SELECTOR_TAGS: Mapping[str, frozenset[OutcomeTag]] = {
    "value": frozenset(
        {
            OutcomeTag.COMMAND,
            OutcomeTag.CHOICE_SELECTED,
            OutcomeTag.CHOICES_SELECTED,
            OutcomeTag.TUPLE_SELECTED,
        }
    ),
    "row": frozenset({OutcomeTag.TUPLE_SELECTED}),
    "x": frozenset({OutcomeTag.POINT}),
    "y": frozenset({OutcomeTag.POINT}),
}


def validate_spec(spec: ServiceSpec) -> list[Diagnostic]:
    """Return an empty list iff the spec is structurally and behaviourally sound."""
    diagnostics = _structural_pass(spec)
    if diagnostics:
        return diagnostics
    diagnostics.extend(_reachability_pass(spec))
    diagnostics.extend(_fork_pass(spec))
    diagnostics.extend(_coverage_pass(spec))
    diagnostics.extend(_dataflow_pass(spec))
    return diagnostics


def check_document(source: Union[str, bytes]) -> list[Diagnostic]:
    """Parse then validate, folding parse errors into diagnostics.

    Total over arbitrary input: any byte string yields a spec's
    diagnostics or a single parse diagnostic, never an exception.
    """
    try:
        spec = parse_spec(source)
    except SpecError as exc:
        code = {
            "SyntaxError": DiagnosticCode.SYNTAX_ERROR,
            "UnknownAiuKind": DiagnosticCode.UNKNOWN_AIU_KIND,
            "DuplicateId": DiagnosticCode.DUPLICATE_ID,
        }[exc.code]
        return [Diagnostic(code=code, message=str(exc))]
    return validate_spec(spec)


# ---------------------------------------------------------------------------
# Phase 1: structure
# ---------------------------------------------------------------------------


def _structural_pass(spec: ServiceSpec) -> list[Diagnostic]:
    out: list[Diagnostic] = []

    seen: set[str] = set()
    for node in spec.nodes:
        if node.id in seen:
            out.append(
                Diagnostic(
                    DiagnosticCode.DUPLICATE_ID,
                    f"duplicate node id {node.id!r}",
                    node=node.id,
                )
            )
        seen.add(node.id)

    starts = [n for n in spec.nodes if n.kind is NodeKind.START]
    if len(starts) != 1 or not spec.has_node(spec.start) or (
        spec.node(spec.start).kind is not NodeKind.START
    ):
        out.append(
            Diagnostic(
                DiagnosticCode.MISSING_START,
                "spec must declare exactly one start node and point 'start' at it",
            )
        )

    final_nodes = {n.id for n in spec.nodes if n.kind is NodeKind.FINAL}
    if not final_nodes:
        out.append(
            Diagnostic(DiagnosticCode.NO_FINAL, "spec declares no final node")
        )
    elif set(spec.finals) != final_nodes:
        out.append(
            Diagnostic(
                DiagnosticCode.FINALS_MISMATCH,
                "the 'finals' list must name exactly the final-kind nodes",
            )
        )

    for t in spec.transitions:
        if not spec.has_node(t.source) or not spec.has_node(t.target):
            out.append(
                Diagnostic(
                    DiagnosticCode.DANGLING_TRANSITION,
                    "transition references a nonexistent node",
                    edge=_edge_ref(t),
                )
            )

    if any(d.code is DiagnosticCode.DANGLING_TRANSITION for d in out):
        return out  # the edge checks below assume resolvable endpoints

    for node in spec.nodes:
        out.extend(_check_node_edges(spec, node))
        if node.kind is NodeKind.ACTIVITY and node.aiu is not None:
            for problem in payload_problems(node.aiu):
                out.append(
                    Diagnostic(
                        DiagnosticCode.SYNTAX_ERROR, problem, node=node.id
                    )
                )
            for var in sorted(placeholder_variables(node.aiu)):
                if var not in spec.variables:
                    out.append(
                        Diagnostic(
                            DiagnosticCode.UNDECLARED_VARIABLE,
                            f"text references undeclared variable {var!r}",
                            node=node.id,
                        )
                    )
        if node.kind is NodeKind.DECISION and node.guard is not None:
            for var in sorted(node.guard.variables()):
                if var not in spec.variables:
                    out.append(
                        Diagnostic(
                            DiagnosticCode.UNDECLARED_VARIABLE,
                            f"guard reads undeclared variable {var!r}",
                            node=node.id,
                        )
                    )
    return out


def _check_node_edges(spec: ServiceSpec, node: Node) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    edges = spec.outgoing(node.id)

    if node.kind is NodeKind.ACTIVITY:
        assert node.aiu is not None
        for t in edges:
            out.extend(_check_activity_edge(spec, node.aiu, t))
        return out

    # structural nodes: no triggers except guard tags on decision edges
    for t in edges:
        if node.kind is NodeKind.DECISION:
            if t.trigger is None or t.trigger.outcome not in GUARD_TAGS:
                out.append(
                    Diagnostic(
                        DiagnosticCode.ILLEGAL_TRIGGER,
                        "decision edges must trigger on guardTrue/guardFalse",
                        edge=_edge_ref(t),
                    )
                )
        elif t.trigger is not None:
            out.append(
                Diagnostic(
                    DiagnosticCode.ILLEGAL_TRIGGER,
                    f"{node.kind.value} edges take no trigger",
                    edge=_edge_ref(t),
                )
            )
        if t.bindings and node.kind is not NodeKind.ACTIVITY:
            out.append(
                Diagnostic(
                    DiagnosticCode.BAD_BINDING,
                    f"{node.kind.value} edges carry no outcome payload to bind",
                    edge=_edge_ref(t),
                )
            )

    if node.kind is NodeKind.START and len(edges) != 1:
        out.append(
            Diagnostic(
                DiagnosticCode.BAD_STRUCTURE,
                f"start node needs exactly one outgoing transition, has {len(edges)}",
                node=node.id,
            )
        )
    elif node.kind is NodeKind.JOIN and len(edges) != 1:
        out.append(
            Diagnostic(
                DiagnosticCode.BAD_STRUCTURE,
                f"join node needs exactly one outgoing transition, has {len(edges)}",
                node=node.id,
            )
        )
    elif node.kind is NodeKind.FINAL and edges:
        out.append(
            Diagnostic(
                DiagnosticCode.BAD_STRUCTURE,
                "final nodes have no outgoing transitions",
                node=node.id,
            )
        )
    elif node.kind is NodeKind.FORK and len(edges) < 2:
        out.append(
            Diagnostic(
                DiagnosticCode.UNMATCHED_FORK,
                f"fork needs at least two branches, has {len(edges)}",
                node=node.id,
            )
        )
    elif node.kind is NodeKind.DECISION:
        tags = sorted(
            t.trigger.outcome.value
            for t in edges
            if t.trigger is not None and t.trigger.outcome in GUARD_TAGS
        )
        if tags != ["guardFalse", "guardTrue"]:
            out.append(
                Diagnostic(
                    DiagnosticCode.MISSING_DECISION_BRANCH,
                    "decision needs exactly one guardTrue and one guardFalse edge",
                    node=node.id,
                )
            )
    return out


def _check_activity_edge(
    spec: ServiceSpec, aiu: AiuInstance, t: Transition
) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    if t.trigger is None:
        out.append(
            Diagnostic(
                DiagnosticCode.ILLEGAL_TRIGGER,
                "activity edges need an outcome trigger",
                edge=_edge_ref(t),
            )
        )
        return out
    tag = t.trigger.outcome
    if tag in GUARD_TAGS or tag not in LEGAL_OUTCOMES[aiu.kind]:
        out.append(
            Diagnostic(
                DiagnosticCode.ILLEGAL_TRIGGER,
                f"{aiu.kind.value} cannot produce outcome {tag.value!r}",
                edge=_edge_ref(t),
            )
        )
        return out
    if tag is OutcomeTag.OK and not aiu.ok_button:
        out.append(
            Diagnostic(
                DiagnosticCode.ILLEGAL_TRIGGER,
                "OK outcome requires okButton on the message",
                edge=_edge_ref(t),
            )
        )
    key = t.trigger.key
    if key is not None:
        if tag is OutcomeTag.COMMAND:
            if key not in aiu.browsing_commands:
                out.append(
                    Diagnostic(
                        DiagnosticCode.ILLEGAL_TRIGGER,
                        f"{key!r} is not a declared browsing command",
                        edge=_edge_ref(t),
                    )
                )
        elif tag is OutcomeTag.CHOICE_SELECTED:
            if key not in {c.key for c in aiu.choices}:
                out.append(
                    Diagnostic(
                        DiagnosticCode.ILLEGAL_TRIGGER,
                        f"{key!r} is not a declared choice",
                        edge=_edge_ref(t),
                    )
                )
        else:
            out.append(
                Diagnostic(
                    DiagnosticCode.ILLEGAL_TRIGGER,
                    f"outcome {tag.value!r} does not take a trigger key",
                    edge=_edge_ref(t),
                )
            )
    out.extend(_check_bindings(spec, aiu, t))
    return out


def _check_bindings(
    spec: ServiceSpec, aiu: AiuInstance, t: Transition
) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    assert t.trigger is not None
    tag = t.trigger.outcome
    for b in t.bindings:
        if b.var not in spec.variables:
            out.append(
                Diagnostic(
                    DiagnosticCode.UNDECLARED_VARIABLE,
                    f"binding targets undeclared variable {b.var!r}",
                    edge=_edge_ref(t),
                )
            )
            continue
        var_type = spec.variables[b.var]
        produced = _selector_type(b.select, tag, aiu, t, out)
        if produced is not None and produced is not var_type:
            out.append(
                Diagnostic(
                    DiagnosticCode.BAD_BINDING,
                    f"selector {b.select!r} produces {produced.value}, but "
                    f"{b.var!r} is declared {var_type.value}",
                    edge=_edge_ref(t),
                )
            )
    return out


def _selector_type(
    select: str,
    tag: OutcomeTag,
    aiu: AiuInstance,
    t: Transition,
    out: list[Diagnostic],
) -> Optional[ValueType]:
    if select.startswith("field:"):
        if tag is not OutcomeTag.FILLED_FIELDS:
            out.append(
                Diagnostic(
                    DiagnosticCode.BAD_BINDING,
                    f"selector {select!r} only applies to filledFields outcomes",
                    edge=_edge_ref(t),
                )
            )
            return None
        name = select[len("field:") :]
        for f in aiu.fields:
            if f.name == name:
                return f.value_type
        out.append(
            Diagnostic(
                DiagnosticCode.BAD_BINDING,
                f"selector references unknown field {name!r}",
                edge=_edge_ref(t),
            )
        )
        return None
    if select.startswith("column:"):
        if tag is not OutcomeTag.TUPLE_SELECTED:
            out.append(
                Diagnostic(
                    DiagnosticCode.BAD_BINDING,
                    f"selector {select!r} only applies to tupleSelected outcomes",
                    edge=_edge_ref(t),
                )
            )
            return None
        name = select[len("column:") :]
        if aiu.table is None or all(c.name != name for c in aiu.table.columns):
            out.append(
                Diagnostic(
                    DiagnosticCode.BAD_BINDING,
                    f"selector references unknown column {name!r}",
                    edge=_edge_ref(t),
                )
            )
            return None
        return ValueType.TEXT
    legal = _SELECTOR_TAGS.get(select)
    if legal is None or tag not in legal:
        out.append(
            Diagnostic(
                DiagnosticCode.BAD_BINDING,
                f"selector {select!r} is not valid for outcome {tag.value!r}",
                edge=_edge_ref(t),
            )
        )
        return None
    if select in ("row", "x", "y"):
        return ValueType.INTEGER
    if select == "value" and tag is OutcomeTag.TUPLE_SELECTED:
        return ValueType.INTEGER
    return ValueType.TEXT


# ---------------------------------------------------------------------------
# Phase 2: graph analyses
# ---------------------------------------------------------------------------


def _reachable_from(
    spec: ServiceSpec, origin: str, blocked: frozenset[str] = frozenset()
) -> set[str]:
    seen: set[str] = set()
    stack = [origin]
    while stack:
        current = stack.pop()
        if current in seen or current in blocked:
            continue
        seen.add(current)
        for t in spec.outgoing(current):
            stack.append(t.target)
    return seen - blocked


def _reachability_pass(spec: ServiceSpec) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    reachable = _reachable_from(spec, spec.start)
    for node in spec.nodes:
        if node.id not in reachable:
            out.append(
                Diagnostic(
                    DiagnosticCode.UNREACHABLE_NODE,
                    "node is unreachable from start",
                    node=node.id,
                )
            )

    # co-reachability of finals, via reversed edges
    predecessors: dict[str, set[str]] = {n.id: set() for n in spec.nodes}
    for t in spec.transitions:
        predecessors[t.target].add(t.source)
    co_reachable: set[str] = set()
    stack = [n.id for n in spec.nodes if n.kind is NodeKind.FINAL]
    while stack:
        current = stack.pop()
        if current in co_reachable:
            continue
        co_reachable.add(current)
        stack.extend(predecessors[current])
    for node in spec.nodes:
        if node.id in reachable and node.id not in co_reachable:
            out.append(
                Diagnostic(
                    DiagnosticCode.NO_PATH_TO_FINAL,
                    "no final state is reachable from this node",
                    node=node.id,
                )
            )
    return out


def match_fork_joins(
    spec: ServiceSpec,
) -> tuple[dict[str, str], list[str]]:
    """Pair each fork with the join where all its branch paths reconverge.

    A candidate join must be reachable from every branch head without
    passing through the fork again; the nearest candidate (smallest
    worst-case distance) wins.  Returns (matches, unmatched fork ids).
    """
    matches: dict[str, str] = {}
    unmatched: list[str] = []
    for fork in spec.fork_nodes():
        heads = [t.target for t in spec.outgoing(fork.id) if spec.has_node(t.target)]
        if len(heads) < 2:
            unmatched.append(fork.id)
            continue
        blocked = frozenset({fork.id})
        distances = [_distances_from(spec, head, blocked) for head in heads]
        candidates: list[tuple[int, int, str]] = []
        for i, node in enumerate(spec.nodes):
            if node.kind is not NodeKind.JOIN:
                continue
            if all(node.id in dist for dist in distances):
                worst = max(dist[node.id] for dist in distances)
                candidates.append((worst, i, node.id))
        if not candidates:
            unmatched.append(fork.id)
            continue
        candidates.sort()
        matches[fork.id] = candidates[0][2]
    return matches, unmatched


def _distances_from(
    spec: ServiceSpec, origin: str, blocked: frozenset[str]
) -> dict[str, int]:
    dist = {origin: 0}
    frontier = [origin]
    while frontier:
        next_frontier: list[str] = []
        for current in frontier:
            if current in blocked:
                continue
            for t in spec.outgoing(current):
                if t.target in blocked or t.target in dist:
                    continue
                dist[t.target] = dist[current] + 1
                next_frontier.append(t.target)
        frontier = next_frontier
    return {k: v for k, v in dist.items() if k not in blocked}


def _fork_pass(spec: ServiceSpec) -> list[Diagnostic]:
    _, unmatched = match_fork_joins(spec)
    return [
        Diagnostic(
            DiagnosticCode.UNMATCHED_FORK,
            "fork branches never reconverge at a common join",
            node=fork_id,
        )
        for fork_id in unmatched
    ]


def _coverage_pass(spec: ServiceSpec) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for node in spec.nodes:
        if node.kind is not NodeKind.ACTIVITY or node.aiu is None:
            continue
        aiu = node.aiu
        edges = spec.outgoing(node.id)

        def edges_for(tag: OutcomeTag, key: Optional[str] = None) -> list[Transition]:
            found = []
            for t in edges:
                if t.trigger is None or t.trigger.outcome is not tag:
                    continue
                if key is not None and t.trigger.key not in (None, key):
                    continue
                found.append(t)
            return found

        # Null: the Quit default back-edge covers the absent case
        null_edges = edges_for(OutcomeTag.NULL)
        if len(null_edges) > 1:
            out.append(_ambiguous(node, "null"))

        for tag in LEGAL_OUTCOMES[aiu.kind]:
            if tag in (OutcomeTag.NULL, OutcomeTag.COMMAND):
                continue
            if tag is OutcomeTag.OK and not aiu.ok_button:
                continue
            if tag is OutcomeTag.CHOICE_SELECTED:
                catch_all = [
                    t for t in edges_for(tag) if t.trigger and t.trigger.key is None
                ]
                if len(catch_all) > 1:
                    out.append(_ambiguous(node, f"{tag.value} (catch-all)"))
                for choice in aiu.choices:
                    keyed = [
                        t
                        for t in edges_for(tag)
                        if t.trigger and t.trigger.key == choice.key
                    ]
                    if len(keyed) > 1:
                        out.append(_ambiguous(node, f"{tag.value}[{choice.key}]"))
                    elif not keyed and not catch_all:
                        out.append(
                            Diagnostic(
                                DiagnosticCode.UNHANDLED_OUTCOME,
                                f"no transition handles choice {choice.key!r}",
                                node=node.id,
                            )
                        )
                continue
            matching = edges_for(tag)
            if not matching:
                out.append(
                    Diagnostic(
                        DiagnosticCode.UNHANDLED_OUTCOME,
                        f"no transition handles outcome {tag.value!r}",
                        node=node.id,
                    )
                )
            elif len(matching) > 1:
                out.append(_ambiguous(node, tag.value))

        # browsing commands correspond to self-transitions
        for t in edges_for(OutcomeTag.COMMAND):
            if t.target != node.id:
                out.append(
                    Diagnostic(
                        DiagnosticCode.NON_SELF_BROWSING_COMMAND,
                        "browsing-command transitions must return to their own node",
                        edge=_edge_ref(t),
                    )
                )
        if aiu.kind in COMMAND_KINDS:
            for cmd in aiu.browsing_commands:
                keyed = [
                    t
                    for t in edges_for(OutcomeTag.COMMAND)
                    if t.trigger and t.trigger.key == cmd
                ]
                if len(keyed) > 1:
                    out.append(_ambiguous(node, f"command[{cmd}]"))
    return out


def _ambiguous(node: Node, what: str) -> Diagnostic:
    return Diagnostic(
        DiagnosticCode.AMBIGUOUS_TRANSITION,
        f"multiple transitions match outcome {what}",
        node=node.id,
    )


def _dataflow_pass(spec: ServiceSpec) -> list[Diagnostic]:
    """Definite-binding analysis: a variable read must be bound on every
    path that can reach the reading node.

    Joins take the union of their incoming branches (all of them must
    have completed); every other node takes the intersection.  Bindings
    from optional form fields do not count as definite.
    """
    all_vars = set(spec.variables)
    bound_in: dict[str, set[str]] = {n.id: set(all_vars) for n in spec.nodes}
    bound_in[spec.start] = set()
    incoming: dict[str, list[Transition]] = {n.id: [] for n in spec.nodes}
    for t in spec.transitions:
        incoming[t.target].append(t)

    def definite(t: Transition) -> set[str]:
        gen: set[str] = set()
        source = spec.node(t.source)
        for b in t.bindings:
            if b.var not in all_vars:
                continue
            if b.select.startswith("field:") and source.aiu is not None:
                name = b.select[len("field:") :]
                fields = {f.name: f for f in source.aiu.fields}
                if name in fields and not fields[name].required:
                    continue  # optional field may be absent at runtime
            gen.add(b.var)
        return gen

    changed = True
    while changed:
        changed = False
        for node in spec.nodes:
            if node.id == spec.start or not incoming[node.id]:
                continue
            values = [bound_in[t.source] | definite(t) for t in incoming[node.id]]
            if node.kind is NodeKind.JOIN:
                merged: set[str] = set().union(*values)
            else:
                merged = set.intersection(*values)
            if merged != bound_in[node.id]:
                bound_in[node.id] = merged
                changed = True

    out: list[Diagnostic] = []
    reachable = _reachable_from(spec, spec.start)
    for node in spec.nodes:
        if node.id not in reachable:
            continue
        if node.kind is NodeKind.DECISION and node.guard is not None:
            for var in sorted(node.guard.variables()):
                if var in all_vars and var not in bound_in[node.id]:
                    out.append(
                        Diagnostic(
                            DiagnosticCode.UNBOUND_VARIABLE,
                            f"guard reads {var!r}, which may be unbound here",
                            node=node.id,
                        )
                    )
        if node.kind is NodeKind.ACTIVITY and node.aiu is not None:
            for var in sorted(placeholder_variables(node.aiu)):
                if var in all_vars and var not in bound_in[node.id]:
                    out.append(
                        Diagnostic(
                            DiagnosticCode.UNBOUND_VARIABLE,
                            f"text references {var!r}, which may be unbound here",
                            node=node.id,
                        )
                    )
    return out
