"""Domain model for device-adaptive service specifications.

A service is a graph of activity states, each hosting one atomic
interaction unit (AIU), connected by outcome-triggered transitions.
Fork/join nodes model order-irrelevant concurrent tasks; decision
nodes branch on guard expressions over bound variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Any, Iterable, Mapping, Optional, Union


class AiuKind(str, Enum):
    """The closed set of interaction-unit kinds."""

    BROWSE_IMAGE = "BrowseImage"
    INTERACT_IMAGE = "InteractImage"
    BROWSE_TEXT = "BrowseText"
    BROWSE_MESSAGE = "BrowseMessage"
    BROWSE_TABLE = "BrowseTable"
    INTERACT_TABLE = "InteractTable"
    FILL_LIST = "FillList"
    SELECT_CHOICE = "SelectChoice"
    SELECT_MULTIPLE_CHOICE = "SelectMultipleChoice"


IMAGE_KINDS = frozenset({AiuKind.BROWSE_IMAGE, AiuKind.INTERACT_IMAGE})
TEXT_KINDS = frozenset({AiuKind.BROWSE_TEXT, AiuKind.BROWSE_MESSAGE})
TABLE_KINDS = frozenset({AiuKind.BROWSE_TABLE, AiuKind.INTERACT_TABLE})
LIST_KINDS = frozenset(
    {AiuKind.FILL_LIST, AiuKind.SELECT_CHOICE, AiuKind.SELECT_MULTIPLE_CHOICE}
)
# Kinds whose signature carries a browsing-command set.
COMMAND_KINDS = frozenset(
    {
        AiuKind.BROWSE_IMAGE,
        AiuKind.INTERACT_IMAGE,
        AiuKind.BROWSE_TEXT,
        AiuKind.BROWSE_TABLE,
        AiuKind.INTERACT_TABLE,
    }
)


class ValueType(str, Enum):
    TEXT = "text"
    INTEGER = "integer"
    DATE = "date"


class OutcomeTag(str, Enum):
    """Return-contract tags, plus the two pseudo-tags used on decision edges."""

    NULL = "null"
    OK = "ok"
    COMMAND = "command"
    POINT = "point"
    TUPLE_SELECTED = "tupleSelected"
    FILLED_FIELDS = "filledFields"
    CHOICE_SELECTED = "choiceSelected"
    CHOICES_SELECTED = "choicesSelected"
    GUARD_TRUE = "guardTrue"
    GUARD_FALSE = "guardFalse"


GUARD_TAGS = frozenset({OutcomeTag.GUARD_TRUE, OutcomeTag.GUARD_FALSE})

# Outcome tags each kind may produce.  Every kind admits NULL (shared Quit).
LEGAL_OUTCOMES: Mapping[AiuKind, frozenset[OutcomeTag]] = {
    AiuKind.BROWSE_IMAGE: frozenset({OutcomeTag.NULL, OutcomeTag.COMMAND}),
    AiuKind.INTERACT_IMAGE: frozenset(
        {OutcomeTag.NULL, OutcomeTag.COMMAND, OutcomeTag.POINT}
    ),
    AiuKind.BROWSE_TEXT: frozenset({OutcomeTag.NULL, OutcomeTag.COMMAND}),
    AiuKind.BROWSE_MESSAGE: frozenset({OutcomeTag.NULL, OutcomeTag.OK}),
    AiuKind.BROWSE_TABLE: frozenset({OutcomeTag.NULL, OutcomeTag.COMMAND}),
    AiuKind.INTERACT_TABLE: frozenset(
        {OutcomeTag.NULL, OutcomeTag.COMMAND, OutcomeTag.TUPLE_SELECTED}
    ),
    AiuKind.FILL_LIST: frozenset({OutcomeTag.NULL, OutcomeTag.FILLED_FIELDS}),
    AiuKind.SELECT_CHOICE: frozenset({OutcomeTag.NULL, OutcomeTag.CHOICE_SELECTED}),
    AiuKind.SELECT_MULTIPLE_CHOICE: frozenset(
        {OutcomeTag.NULL, OutcomeTag.CHOICES_SELECTED}
    ),
}


@dataclass(frozen=True)
class Description:
    """Title plus a degraded-channel alternative text."""

    name: str
    summary: str = ""


@dataclass(frozen=True)
class FieldDecl:
    name: str
    label: str
    value_type: ValueType = ValueType.TEXT
    required: bool = False


@dataclass(frozen=True)
class ChoiceDecl:
    key: str
    label: str


@dataclass(frozen=True)
class ColumnDecl:
    """Table column with an adaptation priority (lower = more important)."""

    name: str
    label: str
    priority: int = 0
    width_hint: Optional[int] = None


@dataclass(frozen=True)
class TableContent:
    columns: tuple[ColumnDecl, ...]
    rows: tuple[tuple[str, ...], ...]

    def column(self, name: str) -> ColumnDecl:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    def column_index(self, name: str) -> int:
        for i, col in enumerate(self.columns):
            if col.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class AiuInstance:
    """One interaction unit with exactly the payload its kind admits."""

    id: str
    kind: AiuKind
    description: Description
    browsing_commands: tuple[str, ...] = ()
    ok_button: bool = False
    fields: tuple[FieldDecl, ...] = ()
    choices: tuple[ChoiceDecl, ...] = ()
    table: Optional[TableContent] = None
    text_body: str = ""
    image_ref: str = ""


def payload_problems(aiu: AiuInstance) -> list[str]:
    """Return messages for payload fields illegal for the instance's kind."""
    problems: list[str] = []
    kind = aiu.kind
    if aiu.browsing_commands and kind not in COMMAND_KINDS:
        problems.append(f"{kind.value} does not take browsing commands")
    if aiu.ok_button and kind is not AiuKind.BROWSE_MESSAGE:
        problems.append(f"okButton is only legal on BrowseMessage, not {kind.value}")
    if aiu.fields and kind is not AiuKind.FILL_LIST:
        problems.append(f"fields are only legal on FillList, not {kind.value}")
    if kind is AiuKind.FILL_LIST and not aiu.fields:
        problems.append("FillList requires at least one field")
    if aiu.choices and kind not in (
        AiuKind.SELECT_CHOICE,
        AiuKind.SELECT_MULTIPLE_CHOICE,
    ):
        problems.append(f"choices are only legal on Select* kinds, not {kind.value}")
    if (
        kind in (AiuKind.SELECT_CHOICE, AiuKind.SELECT_MULTIPLE_CHOICE)
        and not aiu.choices
    ):
        problems.append(f"{kind.value} requires a non-empty choice list")
    if aiu.table is not None and kind not in TABLE_KINDS:
        problems.append(f"table content is only legal on *Table kinds, not {kind.value}")
    if kind in TABLE_KINDS and aiu.table is None:
        problems.append(f"{kind.value} requires table content")
    if aiu.text_body and kind not in TEXT_KINDS:
        problems.append(f"textBody is only legal on text kinds, not {kind.value}")
    if aiu.image_ref and kind not in IMAGE_KINDS:
        problems.append(f"imageRef is only legal on image kinds, not {kind.value}")
    if kind in IMAGE_KINDS and not aiu.image_ref:
        problems.append(f"{kind.value} requires an imageRef")
    if aiu.table is not None:
        width = len(aiu.table.columns)
        for i, row in enumerate(aiu.table.rows):
            if len(row) != width:
                problems.append(f"table row {i} has {len(row)} cells, expected {width}")
    if not aiu.description.name:
        problems.append("description name must be non-empty")
    return problems


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    """A value produced by interacting with one AIU.

    Only the payload fields relevant to ``tag`` are set; use the factory
    classmethods rather than the constructor.
    """

    tag: OutcomeTag
    key: Optional[str] = None
    keys: tuple[str, ...] = ()
    row: Optional[int] = None
    x: Optional[int] = None
    y: Optional[int] = None
    values: Optional[Mapping[str, Any]] = None

    @classmethod
    def null(cls) -> "Outcome":
        return cls(OutcomeTag.NULL)

    @classmethod
    def ok(cls) -> "Outcome":
        return cls(OutcomeTag.OK)

    @classmethod
    def command(cls, key: str) -> "Outcome":
        return cls(OutcomeTag.COMMAND, key=key)

    @classmethod
    def point(cls, x: int, y: int) -> "Outcome":
        return cls(OutcomeTag.POINT, x=x, y=y)

    @classmethod
    def tuple_selected(cls, row: int) -> "Outcome":
        return cls(OutcomeTag.TUPLE_SELECTED, row=row)

    @classmethod
    def filled(cls, values: Mapping[str, Any]) -> "Outcome":
        return cls(OutcomeTag.FILLED_FIELDS, values=dict(values))

    @classmethod
    def choice(cls, key: str) -> "Outcome":
        return cls(OutcomeTag.CHOICE_SELECTED, key=key)

    @classmethod
    def choices(cls, keys: Iterable[str]) -> "Outcome":
        return cls(OutcomeTag.CHOICES_SELECTED, keys=tuple(sorted(keys)))

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"outcome": self.tag.value}
        if self.tag in (OutcomeTag.COMMAND, OutcomeTag.CHOICE_SELECTED):
            doc["key"] = self.key
        elif self.tag is OutcomeTag.CHOICES_SELECTED:
            doc["keys"] = list(self.keys)
        elif self.tag is OutcomeTag.TUPLE_SELECTED:
            doc["row"] = self.row
        elif self.tag is OutcomeTag.POINT:
            doc["x"] = self.x
            doc["y"] = self.y
        elif self.tag is OutcomeTag.FILLED_FIELDS:
            doc["values"] = dict(self.values or {})
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Outcome":
        if not isinstance(doc, Mapping) or "outcome" not in doc:
            raise ValueError("outcome document must be an object with an 'outcome' key")
        try:
            tag = OutcomeTag(doc["outcome"])
        except ValueError:
            raise ValueError(f"unknown outcome tag {doc['outcome']!r}") from None
        if tag is OutcomeTag.NULL:
            return cls.null()
        if tag is OutcomeTag.OK:
            return cls.ok()
        if tag is OutcomeTag.COMMAND:
            return cls.command(_expect(doc, "key", str))
        if tag is OutcomeTag.POINT:
            return cls.point(_expect(doc, "x", int), _expect(doc, "y", int))
        if tag is OutcomeTag.TUPLE_SELECTED:
            return cls.tuple_selected(_expect(doc, "row", int))
        if tag is OutcomeTag.FILLED_FIELDS:
            values = doc.get("values")
            if not isinstance(values, Mapping):
                raise ValueError("filledFields outcome requires a 'values' object")
            return cls.filled(values)
        if tag is OutcomeTag.CHOICE_SELECTED:
            return cls.choice(_expect(doc, "key", str))
        if tag is OutcomeTag.CHOICES_SELECTED:
            keys = doc.get("keys")
            if not isinstance(keys, list) or not all(isinstance(k, str) for k in keys):
                raise ValueError("choicesSelected outcome requires a 'keys' list")
            return cls.choices(keys)
        raise ValueError(f"{tag.value} is not a submittable outcome")


def _expect(doc: Mapping[str, Any], key: str, typ: type) -> Any:
    value = doc.get(key)
    # bool is an int subclass; reject it for integer payloads
    if not isinstance(value, typ) or (typ is int and isinstance(value, bool)):
        raise ValueError(f"outcome field {key!r} must be {typ.__name__}")
    return value


# ---------------------------------------------------------------------------
# Guards
# ---------------------------------------------------------------------------

_GUARD_RE = re.compile(
    r"""^\s*
        (?P<left>[A-Za-z_][A-Za-z0-9_]*|-?\d+|'[^']*'|"[^"]*")
        \s*(?P<op>==|!=|<=|>=|<|>)\s*
        (?P<right>[A-Za-z_][A-Za-z0-9_]*|-?\d+|'[^']*'|"[^"]*")
        \s*$""",
    re.VERBOSE,
)

_INT_RE = re.compile(r"^-?\d+$")


class GuardError(ValueError):
    """Raised for unparseable guard text or evaluation over unbound variables."""


@dataclass(frozen=True)
class Guard:
    """A single comparison between variables and literals.

    The guard language is deliberately tiny so that validation stays
    decidable: ``operand (==|!=|<|<=|>|>=) operand`` where an operand is
    a variable name, an integer literal, or a quoted string.
    """

    source: str
    left: Union[str, int, tuple[str]]
    op: str
    right: Union[str, int, tuple[str]]

    @staticmethod
    def parse(text: str) -> "Guard":
        m = _GUARD_RE.match(text)
        if m is None:
            raise GuardError(f"cannot parse guard {text!r}")
        return Guard(
            source=text,
            left=_parse_operand(m.group("left")),
            op=m.group("op"),
            right=_parse_operand(m.group("right")),
        )

    def variables(self) -> set[str]:
        out = set()
        for operand in (self.left, self.right):
            if isinstance(operand, tuple):
                out.add(operand[0])
        return out

    def evaluate(self, env: Mapping[str, Any]) -> bool:
        left = _resolve_operand(self.left, env, self.source)
        right = _resolve_operand(self.right, env, self.source)
        if self.op == "==":
            return left == right
        if self.op == "!=":
            return left != right
        if type(left) is not type(right):
            raise GuardError(
                f"guard {self.source!r} compares {type(left).__name__} "
                f"with {type(right).__name__}"
            )
        if self.op == "<":
            return left < right
        if self.op == "<=":
            return left <= right
        if self.op == ">":
            return left > right
        return left >= right


def _parse_operand(token: str) -> Union[str, int, tuple[str]]:
    if _INT_RE.match(token):
        return int(token)
    if token[0] in "'\"":
        return token[1:-1]
    # variable reference, wrapped in a 1-tuple to distinguish from literals
    return (token,)


def _resolve_operand(
    operand: Union[str, int, tuple[str]], env: Mapping[str, Any], source: str
) -> Any:
    if isinstance(operand, tuple):
        name = operand[0]
        if name not in env:
            raise GuardError(f"guard {source!r} reads unbound variable {name!r}")
        return env[name]
    return operand


# ---------------------------------------------------------------------------
# Graph structure
# ---------------------------------------------------------------------------


class NodeKind(str, Enum):
    ACTIVITY = "activity"
    FORK = "fork"
    JOIN = "join"
    DECISION = "decision"
    START = "start"
    FINAL = "final"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    aiu: Optional[AiuInstance] = None
    guard: Optional[Guard] = None


@dataclass(frozen=True)
class OutcomeMatcher:
    """Which outcome tag (and optionally which command/choice key) fires an edge."""

    outcome: OutcomeTag
    key: Optional[str] = None

    def matches(self, outcome: Outcome) -> bool:
        if self.outcome is not outcome.tag:
            return False
        if self.key is None:
            return True
        return self.key == outcome.key


@dataclass(frozen=True)
class Binding:
    """Copy part of an outcome payload into a spec variable when an edge fires.

    Selectors: ``value`` (the whole payload), ``x``/``y`` (point coordinates),
    ``row`` (selected row index), ``field:NAME`` (one filled field),
    ``column:NAME`` (the named column's cell of the selected row).
    """

    var: str
    select: str


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    trigger: Optional[OutcomeMatcher] = None
    bindings: tuple[Binding, ...] = ()


@dataclass(frozen=True)
class ServiceSpec:
    """A parsed, immutable service graph. Use the parser to build one from text."""

    name: str
    variables: Mapping[str, ValueType]
    nodes: tuple[Node, ...]
    transitions: tuple[Transition, ...]
    start: str
    finals: frozenset[str]
    _by_id: Mapping[str, Node] = field(init=False, repr=False, compare=False)
    _out: Mapping[str, tuple[Transition, ...]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        by_id = {node.id: node for node in self.nodes}
        out: dict[str, list[Transition]] = {node.id: [] for node in self.nodes}
        for t in self.transitions:
            out.setdefault(t.source, []).append(t)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(
            self, "_out", {k: tuple(v) for k, v in out.items()}
        )

    def node(self, node_id: str) -> Node:
        return self._by_id[node_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._by_id

    def outgoing(self, node_id: str) -> tuple[Transition, ...]:
        return self._out.get(node_id, ())

    def incoming(self, node_id: str) -> tuple[Transition, ...]:
        return tuple(t for t in self.transitions if t.target == node_id)

    def activity_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind is NodeKind.ACTIVITY)

    def fork_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind is NodeKind.FORK)


_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def placeholder_variables(aiu: AiuInstance) -> set[str]:
    """Variables referenced as ``{name}`` in an AIU's displayable text."""
    text = " ".join(
        (aiu.description.name, aiu.description.summary, aiu.text_body)
    )
    return set(_PLACEHOLDER_RE.findall(text))


def substitute_placeholders(text: str, env: Mapping[str, Any]) -> str:
    def repl(m: re.Match[str]) -> str:
        name = m.group(1)
        return str(env[name]) if name in env else m.group(0)

    return _PLACEHOLDER_RE.sub(repl, text)
