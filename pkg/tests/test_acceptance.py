"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Run with ``pytest tests/test_acceptance.py -v -s``."""

from __future__ import annotations

import random
import string
import time

import pytest

from aiuflow import fixtures
from aiuflow.adapt import (
    DecisionKind,
    ForkLayoutKind,
    plan_aiu,
    plan_service,
    select_overview_columns,
)
from aiuflow.engine import (
    replay_session,
    serialize_session,
    start_session,
    submit,
)
from aiuflow.metrics import (
    DeviceProfile,
    Thresholds,
    column_width,
    degradation,
    measure_aiu,
)
from aiuflow.model import (
    AiuInstance,
    AiuKind,
    ColumnDecl,
    Description,
    Node,
    NodeKind,
    Outcome,
    TableContent,
)
from aiuflow.render import TableWidget, emit_text, render_page
from aiuflow.validation import check_document, validate_spec

from test_engine import _random_outcome  # reuse the outcome generator

PERIOD = {"check_in": "2026-09-01", "check_out": "2026-09-05", "guests": 2}
CUSTOMER = {"full_name": "Ada Rossi", "email": "ada@example.org", "age": 35}


def _report(name: str, ok: bool) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {name}")
    assert ok, name


def test_worked_example_reproduction(hotel_spec, handheld, thresholds):
    """Measured 40x105 table on the 14x30 handheld: 40 row scrolls,
    ceil(40/14)=3 page scrolls, two-step overview of exactly
    [hotel-name, hotel-price] with the 'details' command."""
    started = time.perf_counter()
    aiu = hotel_spec.node("Interact_Hotels").aiu
    m = measure_aiu(aiu)
    ok = (m.rn, m.cn) == (40, 105)

    report = degradation(m, handheld)
    ok = ok and report.vertical_row_scrolls == 40
    ok = ok and report.vertical_page_scrolls == 3
    ok = ok and report.horizontal_col_scrolls is None

    decision = plan_aiu(aiu, handheld, thresholds)
    ok = ok and decision.kind is DecisionKind.TWO_STEP
    ok = ok and decision.overview_columns == ("hotel-name", "hotel-price")
    ok = ok and decision.detail_command == "details"
    ok = ok and decision.pages == 3

    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 1.0
    _report("worked-example reproduction (40/105, 3 pages, name+price)", ok)


def test_end_to_end_walkthrough(hotel_spec, handheld, thresholds):
    """The 14-node flow validates clean and a scripted session terminates
    with every parameter bound; both fork orders converge."""
    started = time.perf_counter()
    ok = validate_spec(hotel_spec) == []

    def run(order):
        s = start_session(hotel_spec, handheld, thresholds)
        submit(s, "Select_City", Outcome.choice("roma"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        submit(s, "Interact_Hotels", Outcome.tuple_selected(4))
        submit(s, "Select_Action", Outcome.choice("reserve"))
        if order == 0:
            submit(s, "Fill_Customer_Data", Outcome.filled(CUSTOMER))
            submit(s, "Select_Payment_Type", Outcome.choice("visa"))
        else:
            submit(s, "Select_Payment_Type", Outcome.choice("visa"))
            submit(s, "Fill_Customer_Data", Outcome.filled(CUSTOMER))
        post_join = (set(s.active), dict(s.env))
        submit(s, "Confirm_Reservation", Outcome.ok())
        return s, post_join

    first, post_a = run(0)
    second, post_b = run(1)
    ok = ok and first.status == "finished" == second.status
    ok = ok and post_a == post_b
    expected_vars = {
        "city", "check_in", "check_out", "guests", "selected_hotel",
        "hotel_price", "action", "customer_name", "customer_email",
        "customer_age", "payment",
    }
    ok = ok and set(first.env) == expected_vars
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 1.0
    _report("end-to-end walkthrough with fork-order confluence", ok)


def _random_device(rng: random.Random) -> DeviceProfile:
    return DeviceProfile(
        id="rand",
        rn=rng.randint(4, 50),
        cn=rng.randint(8, 120),
        cvs=rng.random() < 0.5,
        rvs=rng.random() < 0.7,
        pvs=rng.random() < 0.7,
        cnhs=rng.random() < 0.3,
        cohs=rng.random() < 0.4,
        phs=rng.random() < 0.4,
        we=True,
        je=rng.random() < 0.5,
        aa=False,
        cd=rng.choice([1, 2, 8, 24]),
        tsa=False,
    )


def _random_table(rng: random.Random) -> TableContent:
    ncols = rng.randint(1, 8)
    columns = tuple(
        ColumnDecl(
            name=f"c{i}",
            label="".join(rng.choices(string.ascii_uppercase, k=rng.randint(1, 9))),
            priority=rng.randint(0, 5),
            width_hint=rng.choice([None, rng.randint(1, 18)]),
        )
        for i in range(ncols)
    )
    rows = tuple(
        tuple(
            "".join(rng.choices(string.ascii_lowercase + " ", k=rng.randint(0, 22)))
            for _ in range(ncols)
        )
        for _ in range(rng.randint(0, 50))
    )
    return TableContent(columns=columns, rows=rows)


def test_hard_layout_bounds():
    """1000 random (table, device) pairs: every emitted line fits the
    device columns, every page fits the device rows, and the pages'
    rows concatenate to the full projected row list."""
    rng = random.Random(20260810)
    pairs = violations = 0
    while pairs < 1000:
        table = _random_table(rng)
        device = _random_device(rng)
        node = Node(
            id="n",
            kind=NodeKind.ACTIVITY,
            aiu=AiuInstance(
                id="t",
                kind=AiuKind.INTERACT_TABLE,
                description=Description(name="Random table"),
                table=table,
            ),
        )
        decision = plan_aiu(node.aiu, device, Thresholds())
        pairs += 1
        first = render_page(node, decision, device, 1)
        seen_rows = []
        for i in range(1, first.page_count + 1):
            page = render_page(node, decision, device, i)
            text = emit_text(page)
            lines = text.split("\n")
            if len(lines) > device.rn:
                violations += 1
            if any(len(line) > device.cn for line in lines):
                violations += 1
            for widget in page.widgets:
                if isinstance(widget, TableWidget):
                    seen_rows.extend(widget.rows)
        if decision.kind is not DecisionKind.REJECT:
            expected = list(table.rows)
            if decision.kind is DecisionKind.TWO_STEP:
                indices = [
                    table.column_index(name) for name in decision.overview_columns
                ]
                expected = [tuple(row[i] for i in indices) for row in table.rows]
            if [tuple(r) for r in seen_rows] != [tuple(r) for r in expected]:
                violations += 1
    _report(
        f"hard layout bounds and pagination completeness over {pairs} pairs "
        f"({violations} violations)",
        violations == 0 and pairs >= 1000,
    )


def _brute_force_overview(table: TableContent, budget: int) -> list[str]:
    n = len(table.columns)
    order = sorted(range(n), key=lambda i: (table.columns[i].priority, i))
    best_vector = None
    best_subset: list[int] = []
    for mask in range(1, 2**n):
        subset = [i for i in range(n) if mask >> i & 1]
        width = sum(column_width(i, table) for i in subset) + len(subset) - 1
        if width > budget:
            continue
        vector = tuple(1 if i in subset else 0 for i in order)
        if best_vector is None or vector > best_vector:
            best_vector = vector
            best_subset = subset
    assert best_vector is not None
    return [table.columns[i].name for i in sorted(best_subset)]


def test_column_selection_oracle():
    """500 random tables of <= 10 columns: greedy equals the brute-force
    priority-respecting maximal subset."""
    rng = random.Random(99)
    mismatches = 0
    checked = 0
    while checked < 500:
        ncols = rng.randint(1, 10)
        table = TableContent(
            columns=tuple(
                ColumnDecl(
                    name=f"c{i}",
                    label="L" * rng.randint(1, 8),
                    priority=rng.randint(0, 4),
                    width_hint=rng.randint(1, 15),
                )
                for i in range(ncols)
            ),
            rows=(),
        )
        order = sorted(
            range(ncols), key=lambda i: (table.columns[i].priority, i)
        )
        top_width = column_width(order[0], table)
        budget = rng.randint(top_width, top_width + 50)
        if select_overview_columns(table, budget) != _brute_force_overview(
            table, budget
        ):
            mismatches += 1
        checked += 1
    _report(
        f"column-selection greedy vs brute force over {checked} tables "
        f"({mismatches} mismatches)",
        mismatches == 0 and checked >= 500,
    )


def test_validation_diagnostics():
    """Every bundled mutation fixture yields exactly its expected code."""
    manifest = fixtures.mutation_manifest()
    ok = len(manifest) >= 8
    for name, expected in sorted(manifest.items()):
        diagnostics = check_document(fixtures.load_mutation_source(name))
        codes = {d.code.value for d in diagnostics}
        if codes != {expected}:
            print(f"  {name}: expected {{{expected}}}, got {sorted(codes)}")
            ok = False
    _report(f"validation diagnostics for {len(manifest)} mutation fixtures", ok)


def test_replay_determinism(hotel_spec, gallery_spec, handheld, desktop, thresholds):
    """100 random sessions replay to byte-equal serialized state."""
    rng = random.Random(4242)
    specs = [hotel_spec, gallery_spec]
    devices = [handheld, desktop]
    mismatches = 0
    for i in range(100):
        spec = specs[i % 2]
        device = devices[(i // 2) % 2]
        session = start_session(spec, device, thresholds, session_id=f"acc-{i}")
        for _ in range(rng.randint(1, 40)):
            if session.status != "running":
                break
            node_id = rng.choice(sorted(session.active))
            submit(session, node_id, _random_outcome(rng, spec, node_id))
        replayed = replay_session(
            spec, device, thresholds, list(session.history), session_id=session.id
        )
        if serialize_session(replayed) != serialize_session(session):
            mismatches += 1
    _report(f"replay determinism over 100 sessions ({mismatches} mismatches)", mismatches == 0)


def test_desktop_path(hotel_spec, desktop, thresholds):
    """Desktop plan: every activity Direct, the initial fork Merged."""
    plan = plan_service(hotel_spec, desktop, thresholds)
    ok = all(d.kind is DecisionKind.DIRECT for d in plan.per_node.values())
    ok = ok and plan.per_fork["Fork_Search"].kind is ForkLayoutKind.MERGED
    _report("desktop path: all-direct plan with merged initial fork", ok)
