"""Presentation planning: map (AIU, device, thresholds) to adaptation decisions.

The planner decides, per activity node, whether content goes out as-is,
vertically paginated, as a two-step column-reduced table, or as the
summary text; per fork it decides whether branches merge into one page
or run one after another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

from .metrics import (
    AiuMetrics,
    DeviceProfile,
    Thresholds,
    column_width,
    degradation,
    measure_aiu,
    text_rows,
    thresholds_to_doc,
)
from .model import (
    IMAGE_KINDS,
    TEXT_KINDS,
    AiuInstance,
    AiuKind,
    NodeKind,
    ServiceSpec,
    TableContent,
)

# Name of the per-row drill-down command on two-step tables.
DETAIL_COMMAND = "details"

# Rows reserved on every rendered page: title row plus (at least) one
# command-bar row.  Planning and rendering share this constant.
RESERVED_ROWS = 2


class DecisionKind(str, Enum):
    DIRECT = "direct"
    PAGINATE = "paginateVertical"
    TWO_STEP = "twoStepTable"
    SUMMARY = "summaryOnly"
    REJECT = "reject"


class NoColumnFits(ValueError):
    """Even the single most important column exceeds the width budget."""


class PlanError(RuntimeError):
    """A strict plan run hit a node that cannot be presented."""

    def __init__(self, node_id: str, reason: str):
        super().__init__(f"{node_id}: {reason}")
        self.node_id = node_id
        self.reason = reason


@dataclass(frozen=True)
class AdaptationDecision:
    """How one activity's content is presented on the target device.

    Height and width handling compose: a two-step table may also carry a
    vertical page count when the overview itself is taller than the
    screen.
    """

    kind: DecisionKind
    pages: Optional[int] = None
    overview_columns: tuple[str, ...] = ()
    detail_command: Optional[str] = None
    horizontal_scroll: bool = False
    reason: Optional[str] = None

    @classmethod
    def direct(cls, *, horizontal_scroll: bool = False, pages: Optional[int] = None):
        if pages is not None and pages > 1:
            return cls(
                DecisionKind.PAGINATE, pages=pages, horizontal_scroll=horizontal_scroll
            )
        return cls(DecisionKind.DIRECT, horizontal_scroll=horizontal_scroll)

    @classmethod
    def two_step(cls, overview: Sequence[str], pages: Optional[int] = None):
        return cls(
            DecisionKind.TWO_STEP,
            pages=pages,
            overview_columns=tuple(overview),
            detail_command=DETAIL_COMMAND,
        )

    @classmethod
    def summary_only(cls) -> "AdaptationDecision":
        return cls(DecisionKind.SUMMARY)

    @classmethod
    def reject(cls, reason: str) -> "AdaptationDecision":
        return cls(DecisionKind.REJECT, reason=reason)

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"decision": self.kind.value}
        if self.pages is not None:
            doc["pages"] = self.pages
        if self.kind is DecisionKind.TWO_STEP:
            doc["overviewColumns"] = list(self.overview_columns)
            doc["detailCommand"] = self.detail_command
        if self.horizontal_scroll:
            doc["horizontalScroll"] = True
        if self.reason is not None:
            doc["reason"] = self.reason
        return doc


class ForkLayoutKind(str, Enum):
    MERGED = "merged"
    SEQUENCED = "sequenced"


@dataclass(frozen=True)
class ForkLayout:
    kind: ForkLayoutKind
    order: tuple[str, ...]

    def to_doc(self) -> dict[str, Any]:
        return {"layout": self.kind.value, "order": list(self.order)}


@dataclass(frozen=True)
class AdaptationPlan:
    """Per-node and per-fork presentation decisions for one (spec, device) pair."""

    device: str
    thresholds: Thresholds
    per_node: Mapping[str, AdaptationDecision]
    per_fork: Mapping[str, ForkLayout]

    def to_doc(self) -> dict[str, Any]:
        return {
            "device": self.device,
            "thresholds": thresholds_to_doc(self.thresholds),
            "nodes": {
                node_id: decision.to_doc()
                for node_id, decision in sorted(self.per_node.items())
            },
            "forks": {
                fork_id: layout.to_doc()
                for fork_id, layout in sorted(self.per_fork.items())
            },
        }


def select_overview_columns(table: TableContent, budget: int) -> list[str]:
    """Pick the column subset shown in a two-step overview.

    Greedy by ascending priority (declaration order breaks ties): admit a
    column whenever the running width, separators included, stays within
    the budget.  Raises :class:`NoColumnFits` when not even the most
    important column fits.
    """
    if not table.columns:
        raise NoColumnFits("table has no columns")
    order = sorted(
        range(len(table.columns)),
        key=lambda i: (table.columns[i].priority, i),
    )
    if column_width(order[0], table) > budget:
        raise NoColumnFits(
            f"highest-priority column {table.columns[order[0]].name!r} "
            f"exceeds budget {budget}"
        )
    admitted: list[int] = []
    width = 0
    for i in order:
        w = column_width(i, table)
        added = w if not admitted else w + 1
        if width + added <= budget:
            admitted.append(i)
            width += added
    admitted.sort()  # overview keeps declaration order
    return [table.columns[i].name for i in admitted]


def projected_table(table: TableContent, columns: Sequence[str]) -> TableContent:
    """The table restricted to the named columns, order preserved."""
    indices = [table.column_index(name) for name in columns]
    return TableContent(
        columns=tuple(table.columns[i] for i in indices),
        rows=tuple(tuple(row[i] for i in indices) for row in table.rows),
    )


def _vertical_pages(rows: int, d: DeviceProfile) -> int:
    return max(math.ceil(rows / d.rn), 1)


def _vertical_ok(rows: int, d: DeviceProfile, t: Thresholds) -> bool:
    """Some vertical scrolling mechanism exists and stays within its threshold."""
    if d.rvs and rows <= t.max_row_scrolls:
        return True
    if d.pvs and _vertical_pages(rows, d) <= t.max_page_scrolls:
        return True
    return False


def _horizontal_ok(cols: int, d: DeviceProfile, t: Thresholds) -> bool:
    if d.cohs and cols <= t.max_col_scrolls:
        return True
    if d.phs and math.ceil(cols / d.cn) <= t.max_hpage_scrolls:
        return True
    return False


def plan_aiu(
    aiu: AiuInstance, d: DeviceProfile, t: Thresholds
) -> AdaptationDecision:
    """Decide how one AIU is presented on one device.

    Order of attack: fits both ways -> direct; too tall -> vertical
    pagination when a scrolling mechanism is within threshold; too wide ->
    horizontal scrolling when within threshold, else a two-step table for
    table kinds; oversized text with no workable route falls back to the
    summary.  Whatever remains is rejected with the violated constraint
    named.
    """
    if aiu.kind in IMAGE_KINDS:
        # image adaptation is out of scope; pass through untouched
        return AdaptationDecision.direct()

    if aiu.kind in TEXT_KINDS:
        return _plan_text(aiu, d, t)

    m = measure_aiu(aiu)
    report = degradation(m, d)

    pages: Optional[int] = None
    if not report.fits_height:
        if _vertical_ok(m.rn, d, t):
            pages = _vertical_pages(m.rn, d)
        else:
            return AdaptationDecision.reject(
                f"needs {m.rn} rows; device shows {d.rn} and no vertical "
                "scrolling mechanism is within threshold"
            )

    if report.fits_width:
        return AdaptationDecision.direct(pages=pages)

    if _horizontal_ok(m.cn, d, t):
        return AdaptationDecision.direct(horizontal_scroll=True, pages=pages)

    if aiu.table is not None:
        try:
            overview = select_overview_columns(aiu.table, d.cn)
        except NoColumnFits as exc:
            return AdaptationDecision.reject(str(exc))
        return AdaptationDecision.two_step(overview, pages=pages)

    # one-column pseudo-tables (forms, choice lists) cannot drop columns
    return AdaptationDecision.reject(
        f"needs {m.cn} columns; device shows {d.cn} and no horizontal "
        "scrolling mechanism is within threshold"
    )


def _plan_text(aiu: AiuInstance, d: DeviceProfile, t: Thresholds) -> AdaptationDecision:
    chn = len(aiu.text_body)
    rows = text_rows(chn, d)
    if rows <= d.rn:
        return AdaptationDecision.direct()
    if chn <= t.max_chars_direct and _vertical_ok(rows, d, t):
        return AdaptationDecision.direct(pages=_vertical_pages(rows, d))
    if aiu.description.summary:
        return AdaptationDecision.summary_only()
    return AdaptationDecision.reject(
        f"text of {chn} characters cannot be shown and no summary is declared"
    )


def plan_fork(
    branches: Sequence[tuple[str, AiuMetrics]],
    d: DeviceProfile,
    t: Thresholds,
    *,
    paginatable: bool = False,
) -> ForkLayout:
    """Merge fork branches into one page when the stack fits, else sequence them.

    The stacked size is the branch row sum plus one separator row between
    branches, at the widest branch's width.  The stack must fit the page
    content window (device rows minus the reserved title/command rows);
    ``paginatable`` additionally allows a merged-but-paginated layout for
    browse-only branch groups, where splitting the stack over pages loses
    nothing.
    """
    order = tuple(node_id for node_id, _ in branches)
    if len(branches) <= 1:
        return ForkLayout(ForkLayoutKind.MERGED, order)
    stacked_rn = sum(m.rn for _, m in branches) + (len(branches) - 1)
    stacked_cn = max(m.cn for _, m in branches)
    if stacked_cn <= d.cn:
        if stacked_rn <= max(d.rn - RESERVED_ROWS, 1):
            return ForkLayout(ForkLayoutKind.MERGED, order)
        if paginatable and _vertical_ok(stacked_rn, d, t):
            return ForkLayout(ForkLayoutKind.MERGED, order)
    return ForkLayout(ForkLayoutKind.SEQUENCED, order)


_BROWSE_KINDS = frozenset(
    {
        AiuKind.BROWSE_TEXT,
        AiuKind.BROWSE_MESSAGE,
        AiuKind.BROWSE_TABLE,
        AiuKind.BROWSE_IMAGE,
    }
)


def fork_branch_heads(spec: ServiceSpec, fork_id: str) -> list[str]:
    """Targets of a fork's outgoing edges, in declaration order."""
    return [t.target for t in spec.outgoing(fork_id)]


def plan_service(
    spec: ServiceSpec,
    d: DeviceProfile,
    t: Optional[Thresholds] = None,
    *,
    strict: bool = False,
) -> AdaptationPlan:
    """Plan every activity node and every fork of a validated spec.

    Pure function of its inputs: identical inputs give identical plans.
    With ``strict`` set, a rejected node raises :class:`PlanError`
    instead of carrying the rejection in the plan.
    """
    thresholds = t or Thresholds()
    per_node: dict[str, AdaptationDecision] = {}
    for node in spec.activity_nodes():
        assert node.aiu is not None
        decision = plan_aiu(node.aiu, d, thresholds)
        if strict and decision.kind is DecisionKind.REJECT:
            raise PlanError(node.id, decision.reason or "rejected")
        per_node[node.id] = decision

    per_fork: dict[str, ForkLayout] = {}
    for fork in spec.fork_nodes():
        heads = fork_branch_heads(spec, fork.id)
        branches: list[tuple[str, AiuMetrics]] = []
        browse_only = True
        measurable = True
        for head in heads:
            head_node = spec.node(head) if spec.has_node(head) else None
            if head_node is None or head_node.kind is not NodeKind.ACTIVITY:
                measurable = False
                break
            assert head_node.aiu is not None
            if head_node.aiu.kind in IMAGE_KINDS:
                measurable = False
                break
            if head_node.aiu.kind not in _BROWSE_KINDS:
                browse_only = False
            branches.append((head, measure_aiu(head_node.aiu)))
        if not measurable:
            per_fork[fork.id] = ForkLayout(ForkLayoutKind.SEQUENCED, tuple(heads))
        else:
            per_fork[fork.id] = plan_fork(
                branches, d, thresholds, paginatable=browse_only
            )

    return AdaptationPlan(
        device=d.id,
        thresholds=thresholds,
        per_node=per_node,
        per_fork=per_fork,
    )
