"""Parser and serializer for the ``.aiu.json`` service-spec file format.

The format is plain JSON with top-level keys ``name``, ``variables``,
``nodes``, ``transitions``, ``start`` and ``finals``.  Parsing performs
syntax and type-shape checks only; graph-level checks live in
:mod:`aiuflow.validation`.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

from .model import (
    AiuInstance,
    AiuKind,
    Binding,
    ChoiceDecl,
    ColumnDecl,
    Description,
    FieldDecl,
    Guard,
    GuardError,
    Node,
    NodeKind,
    OutcomeMatcher,
    OutcomeTag,
    ServiceSpec,
    TableContent,
    Transition,
    ValueType,
    payload_problems,
)


class SpecError(ValueError):
    """Base class for spec-file problems; ``path`` locates the offending element."""

    code = "SyntaxError"

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.message = message
        self.path = path


class SpecSyntaxError(SpecError):
    code = "SyntaxError"


class UnknownAiuKindError(SpecError):
    code = "UnknownAiuKind"


class DuplicateIdError(SpecError):
    code = "DuplicateId"


def parse_spec(source: Union[str, bytes]) -> ServiceSpec:
    """Decode a spec document. Raises only SpecError subclasses."""
    try:
        doc = json.loads(source)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SpecSyntaxError(f"not valid JSON: {exc}") from None
    return parse_spec_document(doc)


def load_spec(path: Union[str, Path]) -> ServiceSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def parse_spec_document(doc: Any) -> ServiceSpec:
    root = _obj(doc, "$")
    _check_keys(
        root,
        "$",
        required={"name", "nodes", "transitions", "start", "finals"},
        optional={"variables"},
    )
    name = _str(root, "name", "$")

    variables: dict[str, ValueType] = {}
    raw_vars = root.get("variables", {})
    if not isinstance(raw_vars, Mapping):
        raise SpecSyntaxError("must be an object", "$.variables")
    for var, typ in raw_vars.items():
        if not isinstance(typ, str) or typ not in ValueType._value2member_map_:
            raise SpecSyntaxError(
                f"unknown value type {typ!r}", f"$.variables.{var}"
            )
        variables[var] = ValueType(typ)

    raw_nodes = _list(root, "nodes", "$")
    nodes = tuple(
        _parse_node(item, f"$.nodes[{i}]") for i, item in enumerate(raw_nodes)
    )
    seen: set[str] = set()
    for i, node in enumerate(nodes):
        if node.id in seen:
            raise DuplicateIdError(
                f"duplicate node id {node.id!r}", f"$.nodes[{i}]"
            )
        seen.add(node.id)

    raw_transitions = _list(root, "transitions", "$")
    transitions = tuple(
        _parse_transition(item, f"$.transitions[{i}]")
        for i, item in enumerate(raw_transitions)
    )

    start = _str(root, "start", "$")
    raw_finals = _list(root, "finals", "$")
    finals = []
    for i, f in enumerate(raw_finals):
        if not isinstance(f, str):
            raise SpecSyntaxError("must be a string", f"$.finals[{i}]")
        finals.append(f)

    return ServiceSpec(
        name=name,
        variables=variables,
        nodes=nodes,
        transitions=transitions,
        start=start,
        finals=frozenset(finals),
    )


def _parse_node(doc: Any, path: str) -> Node:
    obj = _obj(doc, path)
    _check_keys(obj, path, required={"id", "kind"}, optional={"aiu", "guard"})
    node_id = _str(obj, "id", path)
    kind_name = _str(obj, "kind", path)
    if kind_name not in NodeKind._value2member_map_:
        raise SpecSyntaxError(f"unknown node kind {kind_name!r}", f"{path}.kind")
    kind = NodeKind(kind_name)

    aiu = None
    if "aiu" in obj:
        if kind is not NodeKind.ACTIVITY:
            raise SpecSyntaxError(
                f"{kind.value} nodes cannot carry an aiu", f"{path}.aiu"
            )
        aiu = _parse_aiu(obj["aiu"], f"{path}.aiu")
    elif kind is NodeKind.ACTIVITY:
        raise SpecSyntaxError("activity nodes require an aiu", path)

    guard = None
    if "guard" in obj:
        if kind is not NodeKind.DECISION:
            raise SpecSyntaxError(
                f"{kind.value} nodes cannot carry a guard", f"{path}.guard"
            )
        try:
            guard = Guard.parse(_str(obj, "guard", path))
        except GuardError as exc:
            raise SpecSyntaxError(str(exc), f"{path}.guard") from None
    elif kind is NodeKind.DECISION:
        raise SpecSyntaxError("decision nodes require a guard", path)

    return Node(id=node_id, kind=kind, aiu=aiu, guard=guard)


def _parse_aiu(doc: Any, path: str) -> AiuInstance:
    obj = _obj(doc, path)
    _check_keys(
        obj,
        path,
        required={"kind", "id", "description"},
        optional={
            "browsingCommands",
            "okButton",
            "fields",
            "choices",
            "table",
            "textBody",
            "imageRef",
        },
    )
    kind_name = _str(obj, "kind", path)
    if kind_name not in AiuKind._value2member_map_:
        raise UnknownAiuKindError(
            f"unknown AIU kind {kind_name!r}", f"{path}.kind"
        )
    kind = AiuKind(kind_name)

    desc_obj = _obj(obj.get("description"), f"{path}.description")
    _check_keys(
        desc_obj, f"{path}.description", required={"name"}, optional={"summary"}
    )
    description = Description(
        name=_str(desc_obj, "name", f"{path}.description"),
        summary=str(desc_obj.get("summary", "")),
    )

    commands: list[str] = []
    for i, cmd in enumerate(obj.get("browsingCommands", [])):
        if not isinstance(cmd, str):
            raise SpecSyntaxError(
                "must be a string", f"{path}.browsingCommands[{i}]"
            )
        if cmd in commands:
            raise DuplicateIdError(
                f"duplicate browsing command {cmd!r}", f"{path}.browsingCommands[{i}]"
            )
        commands.append(cmd)

    ok_button = obj.get("okButton", False)
    if not isinstance(ok_button, bool):
        raise SpecSyntaxError("must be a boolean", f"{path}.okButton")

    fields: list[FieldDecl] = []
    for i, item in enumerate(obj.get("fields", [])):
        fields.append(_parse_field(item, f"{path}.fields[{i}]"))
    names = [f.name for f in fields]
    if len(names) != len(set(names)):
        raise DuplicateIdError("duplicate field names", f"{path}.fields")

    choices: list[ChoiceDecl] = []
    for i, item in enumerate(obj.get("choices", [])):
        choices.append(_parse_choice(item, f"{path}.choices[{i}]"))
    keys = [c.key for c in choices]
    if len(keys) != len(set(keys)):
        raise DuplicateIdError("duplicate choice keys", f"{path}.choices")

    table = None
    if "table" in obj:
        table = _parse_table(obj["table"], f"{path}.table")

    text_body = obj.get("textBody", "")
    if not isinstance(text_body, str):
        raise SpecSyntaxError("must be a string", f"{path}.textBody")
    image_ref = obj.get("imageRef", "")
    if not isinstance(image_ref, str):
        raise SpecSyntaxError("must be a string", f"{path}.imageRef")

    aiu = AiuInstance(
        id=_str(obj, "id", path),
        kind=kind,
        description=description,
        browsing_commands=tuple(commands),
        ok_button=ok_button,
        fields=tuple(fields),
        choices=tuple(choices),
        table=table,
        text_body=text_body,
        image_ref=image_ref,
    )
    problems = payload_problems(aiu)
    if problems:
        raise SpecSyntaxError("; ".join(problems), path)
    return aiu


def _parse_field(doc: Any, path: str) -> FieldDecl:
    obj = _obj(doc, path)
    _check_keys(
        obj, path, required={"name", "label"}, optional={"valueType", "required"}
    )
    value_type = obj.get("valueType", "text")
    if value_type not in ValueType._value2member_map_:
        raise SpecSyntaxError(
            f"unknown value type {value_type!r}", f"{path}.valueType"
        )
    required = obj.get("required", False)
    if not isinstance(required, bool):
        raise SpecSyntaxError("must be a boolean", f"{path}.required")
    return FieldDecl(
        name=_str(obj, "name", path),
        label=_str(obj, "label", path),
        value_type=ValueType(value_type),
        required=required,
    )


def _parse_choice(doc: Any, path: str) -> ChoiceDecl:
    obj = _obj(doc, path)
    _check_keys(obj, path, required={"key", "label"}, optional=set())
    return ChoiceDecl(key=_str(obj, "key", path), label=_str(obj, "label", path))


def _parse_table(doc: Any, path: str) -> TableContent:
    obj = _obj(doc, path)
    _check_keys(obj, path, required={"columns", "rows"}, optional=set())
    columns: list[ColumnDecl] = []
    for i, item in enumerate(obj["columns"]):
        col_path = f"{path}.columns[{i}]"
        col = _obj(item, col_path)
        _check_keys(
            col,
            col_path,
            required={"name", "label"},
            optional={"priority", "widthHint"},
        )
        priority = col.get("priority", 0)
        if not isinstance(priority, int) or isinstance(priority, bool) or priority < 0:
            raise SpecSyntaxError(
                "must be a non-negative integer", f"{col_path}.priority"
            )
        width_hint = col.get("widthHint")
        if width_hint is not None and (
            not isinstance(width_hint, int)
            or isinstance(width_hint, bool)
            or width_hint < 1
        ):
            raise SpecSyntaxError(
                "must be a positive integer", f"{col_path}.widthHint"
            )
        columns.append(
            ColumnDecl(
                name=_str(col, "name", col_path),
                label=_str(col, "label", col_path),
                priority=priority,
                width_hint=width_hint,
            )
        )
    names = [c.name for c in columns]
    if len(names) != len(set(names)):
        raise DuplicateIdError("duplicate column names", f"{path}.columns")

    rows: list[tuple[str, ...]] = []
    raw_rows = obj["rows"]
    if not isinstance(raw_rows, Sequence) or isinstance(raw_rows, (str, bytes)):
        raise SpecSyntaxError("must be an array", f"{path}.rows")
    for i, row in enumerate(raw_rows):
        if not isinstance(row, Sequence) or isinstance(row, (str, bytes)):
            raise SpecSyntaxError("must be an array", f"{path}.rows[{i}]")
        cells = []
        for j, cell in enumerate(row):
            if not isinstance(cell, str):
                raise SpecSyntaxError("must be a string", f"{path}.rows[{i}][{j}]")
            cells.append(cell)
        rows.append(tuple(cells))
    return TableContent(columns=tuple(columns), rows=tuple(rows))


def _parse_transition(doc: Any, path: str) -> Transition:
    obj = _obj(doc, path)
    _check_keys(
        obj, path, required={"from", "to"}, optional={"trigger", "bindings"}
    )
    trigger = None
    if "trigger" in obj:
        trig_path = f"{path}.trigger"
        trig = _obj(obj["trigger"], trig_path)
        _check_keys(trig, trig_path, required={"outcome"}, optional={"key"})
        outcome_name = _str(trig, "outcome", trig_path)
        if outcome_name not in OutcomeTag._value2member_map_:
            raise SpecSyntaxError(
                f"unknown outcome {outcome_name!r}", f"{trig_path}.outcome"
            )
        key = None
        if "key" in trig:
            key = _str(trig, "key", trig_path)
        trigger = OutcomeMatcher(outcome=OutcomeTag(outcome_name), key=key)

    bindings: list[Binding] = []
    for i, item in enumerate(obj.get("bindings", [])):
        bind_path = f"{path}.bindings[{i}]"
        bind = _obj(item, bind_path)
        _check_keys(bind, bind_path, required={"var", "select"}, optional=set())
        bindings.append(
            Binding(
                var=_str(bind, "var", bind_path),
                select=_str(bind, "select", bind_path),
            )
        )

    return Transition(
        source=_str(obj, "from", path),
        target=_str(obj, "to", path),
        trigger=trigger,
        bindings=tuple(bindings),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def spec_to_doc(spec: ServiceSpec) -> dict[str, Any]:
    return {
        "name": spec.name,
        "variables": {var: typ.value for var, typ in spec.variables.items()},
        "nodes": [_node_to_doc(node) for node in spec.nodes],
        "transitions": [_transition_to_doc(t) for t in spec.transitions],
        "start": spec.start,
        "finals": sorted(spec.finals),
    }


def serialize_spec(spec: ServiceSpec, *, indent: Optional[int] = 2) -> str:
    return json.dumps(spec_to_doc(spec), indent=indent, ensure_ascii=False) + "\n"


def _node_to_doc(node: Node) -> dict[str, Any]:
    doc: dict[str, Any] = {"id": node.id, "kind": node.kind.value}
    if node.aiu is not None:
        doc["aiu"] = _aiu_to_doc(node.aiu)
    if node.guard is not None:
        doc["guard"] = node.guard.source
    return doc


def _aiu_to_doc(aiu: AiuInstance) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "kind": aiu.kind.value,
        "id": aiu.id,
        "description": {"name": aiu.description.name},
    }
    if aiu.description.summary:
        doc["description"]["summary"] = aiu.description.summary
    if aiu.browsing_commands:
        doc["browsingCommands"] = list(aiu.browsing_commands)
    if aiu.ok_button:
        doc["okButton"] = True
    if aiu.fields:
        doc["fields"] = [
            {
                "name": f.name,
                "label": f.label,
                "valueType": f.value_type.value,
                "required": f.required,
            }
            for f in aiu.fields
        ]
    if aiu.choices:
        doc["choices"] = [{"key": c.key, "label": c.label} for c in aiu.choices]
    if aiu.table is not None:
        columns = []
        for col in aiu.table.columns:
            col_doc: dict[str, Any] = {
                "name": col.name,
                "label": col.label,
                "priority": col.priority,
            }
            if col.width_hint is not None:
                col_doc["widthHint"] = col.width_hint
            columns.append(col_doc)
        doc["table"] = {
            "columns": columns,
            "rows": [list(row) for row in aiu.table.rows],
        }
    if aiu.text_body:
        doc["textBody"] = aiu.text_body
    if aiu.image_ref:
        doc["imageRef"] = aiu.image_ref
    return doc


def _transition_to_doc(t: Transition) -> dict[str, Any]:
    doc: dict[str, Any] = {"from": t.source, "to": t.target}
    if t.trigger is not None:
        trig: dict[str, Any] = {"outcome": t.trigger.outcome.value}
        if t.trigger.key is not None:
            trig["key"] = t.trigger.key
        doc["trigger"] = trig
    if t.bindings:
        doc["bindings"] = [
            {"var": b.var, "select": b.select} for b in t.bindings
        ]
    return doc


def _obj(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise SpecSyntaxError("must be an object", path)
    return value


def _list(obj: Mapping[str, Any], key: str, path: str) -> Sequence[Any]:
    value = obj.get(key)
    if not isinstance(value, Sequence) or isinstance(value, (str, bytes)):
        raise SpecSyntaxError("must be an array", f"{path}.{key}")
    return value


def _str(obj: Mapping[str, Any], key: str, path: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise SpecSyntaxError("must be a non-empty string", f"{path}.{key}")
    return value


def _check_keys(
    obj: Mapping[str, Any], path: str, required: set[str], optional: set[str]
) -> None:
    missing = required - set(obj)
    if missing:
        raise SpecSyntaxError(f"missing keys {sorted(missing)}", path)
    unknown = set(obj) - required - optional
    if unknown:
        raise SpecSyntaxError(f"unknown keys {sorted(unknown)}", path)
