"""Concrete page construction from (activity node, adaptation decision).

Pages are structured widget lists bounded by the device viewport: every
emitted text line stays within the device column count and every page
within its row count.  The title row and the command bar are reserved;
content is sliced into as many pages as it needs.
"""

from __future__ import annotations

import html as html_escape
from dataclasses import dataclass, replace
from typing import Any, Mapping, Optional, Sequence, Union

from .adapt import (
    AdaptationDecision,
    DecisionKind,
    projected_table,
)
from .metrics import DeviceProfile, column_width
from .model import (
    AiuInstance,
    AiuKind,
    Node,
    NodeKind,
    TableContent,
    ValueType,
    substitute_placeholders,
)


class PageOutOfRange(IndexError):
    pass


class RowOutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class TextBlock:
    lines: tuple[str, ...]


@dataclass(frozen=True)
class TableWidget:
    """A table slice; ``header`` is empty on continuation pages and
    ``row_offset`` gives the first row's index in the full table."""

    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    widths: tuple[int, ...]
    selectable: bool = False
    row_offset: int = 0


@dataclass(frozen=True)
class InputFieldWidget:
    name: str
    label: str
    value_type: ValueType
    required: bool


@dataclass(frozen=True)
class ChoiceListWidget:
    items: tuple[tuple[str, str], ...]  # (key, label)
    multiple: bool = False


@dataclass(frozen=True)
class ImagePlaceholder:
    ref: str
    summary: str


Widget = Union[
    TextBlock, TableWidget, InputFieldWidget, ChoiceListWidget, ImagePlaceholder
]


@dataclass(frozen=True)
class CommandButton:
    """One command affordance; ``action`` tells a client what it maps to."""

    id: str
    label: str
    action: str  # quit | ok | command | details | back | page-next | page-prev
    payload: Optional[str] = None


@dataclass(frozen=True)
class ConcretePage:
    node: str
    title: str
    widgets: tuple[Widget, ...]
    commands: tuple[CommandButton, ...]
    page_index: int
    page_count: int
    width: int  # device cn
    height: int  # device rn
    # on composite fork pages: which activity node owns each widget
    widget_owners: tuple[Optional[str], ...] = ()


QUIT_BUTTON = CommandButton(id="quit", label="Quit", action="quit")
OK_BUTTON = CommandButton(id="ok", label="OK", action="ok")
BACK_BUTTON = CommandButton(id="back", label="Back", action="back")
NEXT_BUTTON = CommandButton(id="next", label="Next", action="page-next")
PREV_BUTTON = CommandButton(id="prev", label="Prev", action="page-prev")


def _wrap(text: str, width: int) -> list[str]:
    """Hard wrap at ``width`` columns, no hyphenation."""
    if not text:
        return []
    return [text[i : i + width] for i in range(0, len(text), width)]


def _clip(text: str, width: int) -> str:
    return text if len(text) <= width else text[:width]


# ---------------------------------------------------------------------------
# Widget -> text lines
# ---------------------------------------------------------------------------


def widget_lines(widget: Widget, width: int) -> list[str]:
    if isinstance(widget, TextBlock):
        return [_clip(line, width) for line in widget.lines]
    if isinstance(widget, TableWidget):
        lines: list[str] = []
        if widget.header:
            lines.extend(_table_row_lines(widget.header, widget.widths, width))
        for row in widget.rows:
            lines.extend(_table_row_lines(row, widget.widths, width))
        return lines
    if isinstance(widget, InputFieldWidget):
        prefix = f"{widget.label}{'*' if widget.required else ''}: "
        room = max(width - len(prefix), 0)
        return [_clip(prefix + "_" * min(room, 16), width)]
    if isinstance(widget, ChoiceListWidget):
        mark = "[ ]" if widget.multiple else "( )"
        return [_clip(f"{mark} {label}", width) for _, label in widget.items]
    if isinstance(widget, ImagePlaceholder):
        lines = [_clip(f"[image: {widget.ref}]", width)]
        lines.extend(_wrap(widget.summary, width))
        return lines
    raise TypeError(f"unknown widget {widget!r}")


def _table_row_lines(
    cells: Sequence[str], widths: Sequence[int], page_width: int
) -> list[str]:
    padded = "|".join(
        _clip(cell, w).ljust(w) for cell, w in zip(cells, widths)
    )
    if len(padded) <= page_width:
        return [padded]
    return _wrap(padded, page_width)


def _widget_height(widget: Widget, width: int) -> int:
    return len(widget_lines(widget, width))


def _command_bar_lines(commands: Sequence[CommandButton], width: int) -> list[str]:
    if not commands:
        return []
    labels = [f"[{c.label}]" for c in commands]
    lines: list[str] = []
    current = ""
    for label in labels:
        candidate = label if not current else f"{current} {label}"
        if len(candidate) <= width or not current:
            current = candidate
        else:
            lines.append(_clip(current, width))
            current = label
    lines.append(_clip(current, width))
    return lines


# ---------------------------------------------------------------------------
# Atom construction (minimal fragments, later merged per page)
# ---------------------------------------------------------------------------


def _sub(text: str, env: Optional[Mapping[str, Any]]) -> str:
    return substitute_placeholders(text, env) if env else text


def _table_widths(table: TableContent) -> tuple[int, ...]:
    return tuple(column_width(i, table) for i in range(len(table.columns)))


def _aiu_atoms(
    aiu: AiuInstance,
    decision: AdaptationDecision,
    d: DeviceProfile,
    env: Optional[Mapping[str, Any]],
) -> list[Widget]:
    if decision.kind is DecisionKind.REJECT:
        reason = decision.reason or "content cannot be presented on this device"
        return [TextBlock((line,)) for line in _wrap(f"Unavailable: {reason}", d.cn)]

    if decision.kind is DecisionKind.SUMMARY:
        text = _sub(aiu.description.summary, env)
        return [TextBlock((line,)) for line in _wrap(text, d.cn)]

    kind = aiu.kind
    if kind in (AiuKind.BROWSE_TEXT, AiuKind.BROWSE_MESSAGE):
        text = _sub(aiu.text_body, env)
        return [TextBlock((line,)) for line in _wrap(text, d.cn)]

    if kind in (AiuKind.BROWSE_IMAGE, AiuKind.INTERACT_IMAGE):
        return [ImagePlaceholder(ref=aiu.image_ref, summary=aiu.description.summary)]

    if kind is AiuKind.FILL_LIST:
        return [
            InputFieldWidget(f.name, f.label, f.value_type, f.required)
            for f in aiu.fields
        ]

    if kind in (AiuKind.SELECT_CHOICE, AiuKind.SELECT_MULTIPLE_CHOICE):
        multiple = kind is AiuKind.SELECT_MULTIPLE_CHOICE
        return [
            ChoiceListWidget(items=((c.key, c.label),), multiple=multiple)
            for c in aiu.choices
        ]

    # table kinds
    assert aiu.table is not None
    table = aiu.table
    if decision.kind is DecisionKind.TWO_STEP:
        table = projected_table(table, decision.overview_columns)
    widths = _table_widths(table)
    selectable = kind is AiuKind.INTERACT_TABLE
    header = tuple(c.label for c in table.columns)
    atoms: list[Widget] = [
        TableWidget(header=header, rows=(), widths=widths, selectable=selectable)
    ]
    for i, row in enumerate(table.rows):
        atoms.append(
            TableWidget(
                header=(),
                rows=(row,),
                widths=widths,
                selectable=selectable,
                row_offset=i,
            )
        )
    return atoms


def _merge_atoms(
    pairs: Sequence[tuple[Widget, Optional[str]]]
) -> list[tuple[Widget, Optional[str]]]:
    """Coalesce adjacent fragments of the same widget (and same owning
    node, on composite pages)."""
    merged: list[tuple[Widget, Optional[str]]] = []
    for atom, owner in pairs:
        prev, prev_owner = merged[-1] if merged else (None, None)
        if prev_owner != owner:
            prev = None
        if isinstance(atom, TextBlock) and isinstance(prev, TextBlock):
            merged[-1] = (TextBlock(prev.lines + atom.lines), owner)
        elif (
            isinstance(atom, TableWidget)
            and isinstance(prev, TableWidget)
            and prev.widths == atom.widths
            and prev.selectable == atom.selectable
        ):
            merged[-1] = (
                replace(
                    prev,
                    header=prev.header or atom.header,
                    rows=prev.rows + atom.rows,
                    row_offset=prev.row_offset if prev.rows else atom.row_offset,
                ),
                owner,
            )
        elif (
            isinstance(atom, ChoiceListWidget)
            and isinstance(prev, ChoiceListWidget)
            and prev.multiple == atom.multiple
        ):
            merged[-1] = (
                ChoiceListWidget(items=prev.items + atom.items, multiple=prev.multiple),
                owner,
            )
        else:
            merged.append((atom, owner))
    return merged


def _merged_widgets(atoms: Sequence[Widget]) -> tuple[Widget, ...]:
    return tuple(w for w, _ in _merge_atoms([(a, None) for a in atoms]))


# ---------------------------------------------------------------------------
# Pagination
# ---------------------------------------------------------------------------


def _fill_pages(atoms: Sequence[Widget], window: int, width: int) -> list[list[int]]:
    """Slice atoms into pages of at most ``window`` content lines, returned
    as index runs.

    An atom taller than the window still gets a page of its own; the text
    emitter clips it.
    """
    pages: list[list[int]] = []
    current: list[int] = []
    used = 0
    for i, atom in enumerate(atoms):
        h = _widget_height(atom, width)
        if current and used + h > window:
            pages.append(current)
            current = []
            used = 0
        current.append(i)
        used += h
    if current or not pages:
        pages.append(current)
    return pages


def _layout(
    atoms: Sequence[Widget],
    base_commands: Sequence[CommandButton],
    d: DeviceProfile,
) -> tuple[list[list[Widget]], tuple[CommandButton, ...], int]:
    """Paginate atoms and settle the command bar (nav buttons appear only
    when there is more than one page, which itself changes the window)."""
    with_nav = False
    while True:
        commands = list(base_commands)
        if with_nav:
            commands = commands[:-1] + [PREV_BUTTON, NEXT_BUTTON, commands[-1]]
        bar_height = len(_command_bar_lines(commands, d.cn))
        window = max(d.rn - 1 - bar_height, 1)
        pages = _fill_pages(atoms, window, d.cn)
        if len(pages) > 1 and not with_nav:
            with_nav = True
            continue
        return pages, tuple(commands), window


def _base_commands(
    aiu: AiuInstance, decision: AdaptationDecision
) -> list[CommandButton]:
    commands: list[CommandButton] = []
    if aiu.kind is AiuKind.BROWSE_MESSAGE and aiu.ok_button:
        commands.append(OK_BUTTON)
    if decision.kind is DecisionKind.TWO_STEP and decision.detail_command:
        commands.append(
            CommandButton(
                id=decision.detail_command,
                label=decision.detail_command.capitalize(),
                action="details",
            )
        )
    for cmd in aiu.browsing_commands:
        commands.append(
            CommandButton(id=cmd, label=cmd, action="command", payload=cmd)
        )
    commands.append(QUIT_BUTTON)
    return commands


def _require_activity(node: Node) -> AiuInstance:
    if node.kind is not NodeKind.ACTIVITY or node.aiu is None:
        raise ValueError(f"node {node.id!r} is not an activity node")
    return node.aiu


def render_page(
    node: Node,
    decision: AdaptationDecision,
    d: DeviceProfile,
    page: int = 1,
    *,
    env: Optional[Mapping[str, Any]] = None,
) -> ConcretePage:
    """Render the ``page``-th page of one activity under a decision."""
    aiu = _require_activity(node)
    atoms = _aiu_atoms(aiu, decision, d, env)
    pages, commands, _ = _layout(atoms, _base_commands(aiu, decision), d)
    if page < 1 or page > len(pages):
        raise PageOutOfRange(f"page {page} of {len(pages)}")
    title = _sub(aiu.description.name, env)
    return ConcretePage(
        node=node.id,
        title=title,
        widgets=_merged_widgets([atoms[i] for i in pages[page - 1]]),
        commands=commands,
        page_index=page,
        page_count=len(pages),
        width=d.cn,
        height=d.rn,
    )


def render_detail(
    node: Node,
    row_index: int,
    d: DeviceProfile,
    page: int = 1,
    *,
    env: Optional[Mapping[str, Any]] = None,
) -> ConcretePage:
    """One attribute-per-line view of a single table row (two-step detail)."""
    aiu = _require_activity(node)
    if aiu.table is None:
        raise ValueError(f"node {node.id!r} hosts no table")
    if row_index < 0 or row_index >= len(aiu.table.rows):
        raise RowOutOfRange(f"row {row_index} of {len(aiu.table.rows)}")
    row = aiu.table.rows[row_index]
    atoms: list[Widget] = []
    for col, cell in zip(aiu.table.columns, row):
        for line in _wrap(f"{col.label}: {cell}", d.cn):
            atoms.append(TextBlock((line,)))
    commands = [BACK_BUTTON, QUIT_BUTTON]
    pages, commands_out, _ = _layout(atoms, commands, d)
    if page < 1 or page > len(pages):
        raise PageOutOfRange(f"page {page} of {len(pages)}")
    return ConcretePage(
        node=node.id,
        title=_sub(aiu.description.name, env),
        widgets=_merged_widgets([atoms[i] for i in pages[page - 1]]),
        commands=commands_out,
        page_index=page,
        page_count=len(pages),
        width=d.cn,
        height=d.rn,
    )


def render_fork_page(
    fork_id: str,
    parts: Sequence[tuple[Node, AdaptationDecision]],
    d: DeviceProfile,
    page: int = 1,
    *,
    env: Optional[Mapping[str, Any]] = None,
) -> ConcretePage:
    """Composite page stacking the widgets of merged fork branches.

    Each widget stays attributed to its branch node (``widget_owners``)
    so clients can submit per-node outcomes from the composite view.
    """
    atoms: list[Widget] = []
    owners: list[Optional[str]] = []
    commands: list[CommandButton] = []
    titles: list[str] = []
    for i, (node, decision) in enumerate(parts):
        aiu = _require_activity(node)
        titles.append(_sub(aiu.description.name, env))
        if i > 0:
            atoms.append(TextBlock(("",)))  # separator row between branches
            owners.append(None)
        atoms.append(TextBlock((_clip(_sub(aiu.description.name, env), d.cn),)))
        owners.append(node.id)
        branch_atoms = _aiu_atoms(aiu, decision, d, env)
        atoms.extend(branch_atoms)
        owners.extend([node.id] * len(branch_atoms))
        for cmd in _base_commands(aiu, decision):
            if all(existing.id != cmd.id for existing in commands):
                commands.append(cmd)
    # keep Quit last
    commands.sort(key=lambda c: c.action == "quit")
    pages, commands_out, _ = _layout(atoms, commands, d)
    if page < 1 or page > len(pages):
        raise PageOutOfRange(f"page {page} of {len(pages)}")
    merged = _merge_atoms([(atoms[i], owners[i]) for i in pages[page - 1]])
    return ConcretePage(
        node=fork_id,
        title=" / ".join(titles),
        widgets=tuple(w for w, _ in merged),
        commands=commands_out,
        page_index=page,
        page_count=len(pages),
        width=d.cn,
        height=d.rn,
        widget_owners=tuple(owner for _, owner in merged),
    )


# ---------------------------------------------------------------------------
# Emitters
# ---------------------------------------------------------------------------


def emit_text(page: ConcretePage) -> str:
    """Monospace block at most ``page.width`` columns and ``page.height`` rows."""
    title = page.title
    if page.page_count > 1:
        title = f"{title} ({page.page_index}/{page.page_count})"
    bar = _command_bar_lines(page.commands, page.width)
    window = max(page.height - 1 - len(bar), 1)
    content: list[str] = []
    for widget in page.widgets:
        content.extend(widget_lines(widget, page.width))
    content = content[:window]  # oversized single atoms get clipped
    lines = [_clip(title, page.width)] + content + bar
    return "\n".join(lines[: page.height])


def emit_html(page: ConcretePage) -> str:
    """Standalone reference HTML with stable per-widget element ids."""
    esc = html_escape.escape
    parts: list[str] = [
        "<!doctype html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{esc(page.title)}</title>",
        "<style>",
        "body { font-family: monospace; }",
        "table { border-collapse: collapse; }",
        "td, th { border: 1px solid #999; padding: 0 4px; text-align: left; }",
        "tr.selectable:hover { background: #eef; cursor: pointer; }",
        "</style>",
        "</head>",
        f'<body data-node="{esc(page.node)}" data-page="{page.page_index}"'
        f' data-pages="{page.page_count}">',
        f'<h1 id="aiu-{esc(page.node)}-title">{esc(page.title)}'
        + (
            f" <small>({page.page_index}/{page.page_count})</small>"
            if page.page_count > 1
            else ""
        )
        + "</h1>",
    ]
    for index, widget in enumerate(page.widgets):
        parts.append(_widget_html(widget, page.node, index))
    parts.append('<div class="commands">')
    for cmd in page.commands:
        payload = f' data-payload="{esc(cmd.payload)}"' if cmd.payload else ""
        parts.append(
            f'<button id="cmd-{esc(page.node)}-{esc(cmd.id)}"'
            f' data-action="{esc(cmd.action)}"{payload}>{esc(cmd.label)}</button>'
        )
    parts.append("</div>")
    parts.append("</body>")
    parts.append("</html>")
    return "\n".join(parts)


def _widget_html(widget: Widget, node: str, index: int) -> str:
    esc = html_escape.escape
    wid = f"aiu-{esc(node)}-{index}"
    if isinstance(widget, TextBlock):
        body = "<br>".join(esc(line) for line in widget.lines)
        return f'<p id="{wid}" class="widget text">{body}</p>'
    if isinstance(widget, TableWidget):
        out = [f'<table id="{wid}" class="widget table">']
        if widget.header:
            out.append(
                "<thead><tr>"
                + "".join(f"<th>{esc(h)}</th>" for h in widget.header)
                + "</tr></thead>"
            )
        out.append("<tbody>")
        for i, row in enumerate(widget.rows):
            cls = ' class="selectable"' if widget.selectable else ""
            out.append(
                f'<tr data-row="{widget.row_offset + i}"{cls}>'
                + "".join(f"<td>{esc(cell)}</td>" for cell in row)
                + "</tr>"
            )
        out.append("</tbody></table>")
        return "".join(out)
    if isinstance(widget, InputFieldWidget):
        input_type = {
            ValueType.TEXT: "text",
            ValueType.INTEGER: "number",
            ValueType.DATE: "date",
        }[widget.value_type]
        required = " required" if widget.required else ""
        return (
            f'<div id="{wid}" class="widget field">'
            f'<label for="{wid}-input">{esc(widget.label)}</label> '
            f'<input id="{wid}-input" name="{esc(widget.name)}"'
            f' type="{input_type}"{required}>'
            "</div>"
        )
    if isinstance(widget, ChoiceListWidget):
        input_type = "checkbox" if widget.multiple else "radio"
        out = [f'<ul id="{wid}" class="widget choices">']
        for key, label in widget.items:
            out.append(
                f'<li><label><input type="{input_type}" name="{wid}"'
                f' value="{esc(key)}"> {esc(label)}</label></li>'
            )
        out.append("</ul>")
        return "".join(out)
    if isinstance(widget, ImagePlaceholder):
        return (
            f'<figure id="{wid}" class="widget image">'
            f'<div class="placeholder">[image: {esc(widget.ref)}]</div>'
            f"<figcaption>{esc(widget.summary)}</figcaption></figure>"
        )
    raise TypeError(f"unknown widget {widget!r}")


# ---------------------------------------------------------------------------
# Wire codec
# ---------------------------------------------------------------------------


def widget_to_doc(widget: Widget) -> dict[str, Any]:
    if isinstance(widget, TextBlock):
        return {"type": "text", "lines": list(widget.lines)}
    if isinstance(widget, TableWidget):
        return {
            "type": "table",
            "header": list(widget.header),
            "rows": [list(r) for r in widget.rows],
            "widths": list(widget.widths),
            "selectable": widget.selectable,
            "rowOffset": widget.row_offset,
        }
    if isinstance(widget, InputFieldWidget):
        return {
            "type": "field",
            "name": widget.name,
            "label": widget.label,
            "valueType": widget.value_type.value,
            "required": widget.required,
        }
    if isinstance(widget, ChoiceListWidget):
        return {
            "type": "choices",
            "items": [{"key": k, "label": label} for k, label in widget.items],
            "multiple": widget.multiple,
        }
    if isinstance(widget, ImagePlaceholder):
        return {"type": "image", "ref": widget.ref, "summary": widget.summary}
    raise TypeError(f"unknown widget {widget!r}")


def page_to_doc(page: ConcretePage) -> dict[str, Any]:
    widgets = []
    for i, w in enumerate(page.widgets):
        doc = widget_to_doc(w)
        owner = (
            page.widget_owners[i]
            if i < len(page.widget_owners) and page.widget_owners[i]
            else page.node
        )
        doc["node"] = owner
        widgets.append(doc)
    return {
        "node": page.node,
        "title": page.title,
        "widgets": widgets,
        "commands": [
            {
                "id": c.id,
                "label": c.label,
                "action": c.action,
                **({"payload": c.payload} if c.payload else {}),
            }
            for c in page.commands
        ],
        "pageIndex": page.page_index,
        "pageCount": page.page_count,
        "width": page.width,
        "height": page.height,
    }
