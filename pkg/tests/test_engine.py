"""Session runtime: walkthroughs, fork/join semantics, Quit routing,
replay determinism, and page assembly."""

from __future__ import annotations

import json
import random

import pytest

from aiuflow.engine import (
    FieldValidationError,
    IllegalOutcome,
    NotActive,
    SessionFinished,
    ValidationFailed,
    current_pages,
    instance_outcomes,
    legal_outcomes,
    replay_session,
    serialize_session,
    start_session,
    submit,
)
from aiuflow.model import (
    AiuKind,
    Outcome,
    OutcomeTag,
    ServiceSpec,
)
from aiuflow.parser import parse_spec, spec_to_doc

PERIOD = {"check_in": "2026-09-01", "check_out": "2026-09-05", "guests": 2}
CUSTOMER = {"full_name": "Ada Rossi", "email": "ada@example.org", "age": 35}


def _walk_to_payment(spec, device, *, order="customer-first"):
    s = start_session(spec, device)
    submit(s, "Select_City", Outcome.choice("roma"))
    submit(s, "Fill_Period", Outcome.filled(PERIOD))
    submit(s, "Interact_Hotels", Outcome.tuple_selected(4))
    submit(s, "Select_Action", Outcome.choice("reserve"))
    if order == "customer-first":
        submit(s, "Fill_Customer_Data", Outcome.filled(CUSTOMER))
        submit(s, "Select_Payment_Type", Outcome.choice("visa"))
    else:
        submit(s, "Select_Payment_Type", Outcome.choice("visa"))
        submit(s, "Fill_Customer_Data", Outcome.filled(CUSTOMER))
    return s


class TestLegalOutcomes:
    def test_fixed_table(self):
        assert legal_outcomes(AiuKind.INTERACT_TABLE) == {
            OutcomeTag.NULL,
            OutcomeTag.COMMAND,
            OutcomeTag.TUPLE_SELECTED,
        }
        assert legal_outcomes(AiuKind.BROWSE_MESSAGE) == {
            OutcomeTag.NULL,
            OutcomeTag.OK,
        }
        assert legal_outcomes(AiuKind.INTERACT_IMAGE) == {
            OutcomeTag.NULL,
            OutcomeTag.COMMAND,
            OutcomeTag.POINT,
        }
        assert legal_outcomes(AiuKind.FILL_LIST) == {
            OutcomeTag.NULL,
            OutcomeTag.FILLED_FIELDS,
        }

    def test_every_kind_admits_null(self):
        for kind in AiuKind:
            assert OutcomeTag.NULL in legal_outcomes(kind)

    def test_instance_refinement(self, hotel_spec, minimal_spec):
        hotels = hotel_spec.node("Interact_Hotels").aiu
        assert OutcomeTag.COMMAND in instance_outcomes(hotels)
        city = hotel_spec.node("Select_City").aiu
        assert OutcomeTag.COMMAND not in instance_outcomes(city)
        welcome = minimal_spec.node("Welcome").aiu
        assert OutcomeTag.OK in instance_outcomes(welcome)


class TestStartSession:
    def test_hotel_starts_at_both_forked_inputs(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        assert s.active == {"Select_City", "Fill_Period"}
        assert s.status == "running"

    def test_single_activity_spec(self, minimal_spec, handheld):
        s = start_session(minimal_spec, handheld)
        assert s.active == {"Welcome"}

    def test_invalid_spec_raises(self, hotel_spec, handheld):
        doc = spec_to_doc(hotel_spec)
        doc["transitions"] = [
            t
            for t in doc["transitions"]
            if (t.get("trigger") or {}).get("outcome") != "tupleSelected"
        ]
        broken = parse_spec(json.dumps(doc))
        with pytest.raises(ValidationFailed):
            start_session(broken, handheld)


class TestWalkthrough:
    def test_full_reservation_flow(self, hotel_spec, handheld):
        s = _walk_to_payment(hotel_spec, handheld)
        assert s.active == {"Confirm_Reservation"}
        submit(s, "Confirm_Reservation", Outcome.ok())
        assert s.status == "finished"
        assert s.env["city"] == "roma"
        assert s.env["selected_hotel"] == "Hotel Colosseo"
        assert s.env["hotel_price"] == "EUR 83"
        assert s.env["payment"] == "visa"
        assert s.env["customer_age"] == 35

    def test_join_waits_for_both_branches(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("roma"))
        assert s.active == {"Fill_Period"}  # join has not fired
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        assert s.active == {"Interact_Hotels"}

    def test_fork_order_confluence(self, hotel_spec, handheld):
        a = _walk_to_payment(hotel_spec, handheld, order="customer-first")
        b = _walk_to_payment(hotel_spec, handheld, order="payment-first")
        assert a.active == b.active == {"Confirm_Reservation"}
        assert a.env == b.env

    def test_parameter_passing_on_row_selection(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("venezia"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        submit(s, "Interact_Hotels", Outcome.tuple_selected(0))
        assert s.env["selected_hotel"] == "Hotel Aurora"
        assert s.active == {"Select_Action"}

    def test_return_to_starting_point(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("roma"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        submit(s, "Interact_Hotels", Outcome.tuple_selected(1))
        submit(s, "Select_Action", Outcome.choice("new-search"))
        assert s.active == {"Select_City", "Fill_Period"}
        # the restarted fork expects fresh arrivals on its join
        submit(s, "Select_City", Outcome.choice("milano"))
        assert s.active == {"Fill_Period"}

    def test_back_to_previous_result(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("roma"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        submit(s, "Interact_Hotels", Outcome.tuple_selected(1))
        submit(s, "Select_Action", Outcome.choice("back"))
        assert s.active == {"Interact_Hotels"}

    def test_browsing_command_is_self_transition(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("roma"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        before = set(s.active)
        submit(s, "Interact_Hotels", Outcome.command("sort-by-price"))
        assert s.active == before
        assert s.history[-1] == ("Interact_Hotels", Outcome.command("sort-by-price"))

    def test_decision_error_loop_redirects_to_form(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("roma"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        submit(s, "Interact_Hotels", Outcome.tuple_selected(2))
        submit(s, "Select_Action", Outcome.choice("reserve"))
        submit(s, "Select_Payment_Type", Outcome.choice("paypal"))
        minor = dict(CUSTOMER, age=15)
        submit(s, "Fill_Customer_Data", Outcome.filled(minor))
        # guard failed: back at the form, payment arrival retained
        assert s.active == {"Fill_Customer_Data"}
        submit(s, "Fill_Customer_Data", Outcome.filled(CUSTOMER))
        assert s.active == {"Confirm_Reservation"}


class TestSubmissionErrors:
    def test_not_active(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        with pytest.raises(NotActive):
            submit(s, "Interact_Hotels", Outcome.tuple_selected(0))

    def test_illegal_outcome_tag(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        with pytest.raises(IllegalOutcome):
            submit(s, "Select_City", Outcome.ok())

    def test_unknown_choice_key(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        with pytest.raises(IllegalOutcome):
            submit(s, "Select_City", Outcome.choice("atlantis"))

    def test_row_out_of_range(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("roma"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        with pytest.raises(IllegalOutcome):
            submit(s, "Interact_Hotels", Outcome.tuple_selected(39))

    def test_field_validation_short_circuits(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        before = dict(s.env)
        with pytest.raises(FieldValidationError) as err:
            submit(
                s,
                "Fill_Period",
                Outcome.filled({"check_in": "not-a-date", "guests": "two"}),
            )
        assert s.env == before
        assert s.active == {"Select_City", "Fill_Period"}
        message = str(err.value)
        assert "check_in" in message and "guests" in message and "check_out" in message

    def test_finished_session_accepts_nothing(self, minimal_spec, handheld):
        s = start_session(minimal_spec, handheld)
        submit(s, "Welcome", Outcome.ok())
        assert s.status == "finished"
        with pytest.raises(SessionFinished):
            submit(s, "Welcome", Outcome.ok())
        with pytest.raises(SessionFinished):
            current_pages(s)


class TestQuit:
    def test_quit_follows_explicit_null_edge(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("roma"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        submit(s, "Interact_Hotels", Outcome.null())  # explicit: back to search fork
        assert s.active == {"Select_City", "Fill_Period"}

    def test_quit_default_returns_to_last_completed(self, gallery_spec, handheld):
        s = start_session(gallery_spec, handheld)
        submit(s, "Browse_Rates", Outcome.null())
        submit(s, "Browse_Info", Outcome.null())
        submit(s, "View_Photo", Outcome.null())
        submit(s, "Pick_Point", Outcome.point(3, 4))
        assert s.active == {"Ask_Feedback"}
        submit(s, "Ask_Feedback", Outcome.choices(["frescoes", "archive"]))
        assert s.active == {"Thanks"}
        # Thanks has no explicit null edge: default goes to the most
        # recently completed other activity (Ask_Feedback)
        submit(s, "Thanks", Outcome.null())
        assert s.active == {"Ask_Feedback"}

    def test_quit_default_falls_back_to_start(self, minimal_spec, handheld):
        s = start_session(minimal_spec, handheld)
        submit(s, "Welcome", Outcome.null())  # nothing completed yet
        assert s.active == {"Welcome"}
        assert s.status == "running"

    def test_quit_always_accepted(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        for node_id in list(s.active):
            submit(s, node_id, Outcome.null())
            assert s.status == "running"


class TestCurrentPages:
    def test_merged_fork_yields_one_composite_page(self, hotel_spec, desktop):
        s = start_session(hotel_spec, desktop)
        pages = current_pages(s)
        assert len(pages) == 1
        node_id, page = pages[0]
        assert node_id == "Fork_Search"
        text_titles = page.title
        assert "Select a city" in text_titles
        assert "Reservation period" in text_titles

    def test_sequenced_fork_yields_first_branch_then_second(
        self, hotel_spec, handheld
    ):
        s = start_session(hotel_spec, handheld)
        pages = current_pages(s)
        assert [n for n, _ in pages] == ["Select_City"]
        submit(s, "Select_City", Outcome.choice("roma"))
        pages = current_pages(s)
        assert [n for n, _ in pages] == ["Fill_Period"]

    def test_merged_fork_narrows_after_one_submission(self, hotel_spec, desktop):
        s = start_session(hotel_spec, desktop)
        submit(s, "Select_City", Outcome.choice("roma"))
        pages = current_pages(s)
        assert [n for n, _ in pages] == ["Fill_Period"]

    def test_non_fork_node_plain_page(self, hotel_spec, handheld):
        s = start_session(hotel_spec, handheld)
        submit(s, "Select_City", Outcome.choice("roma"))
        submit(s, "Fill_Period", Outcome.filled(PERIOD))
        pages = current_pages(s)
        assert [n for n, _ in pages] == ["Interact_Hotels"]
        assert pages[0][1].page_count == 4


# ---------------------------------------------------------------------------
# Replay determinism
# ---------------------------------------------------------------------------


def _random_outcome(rng: random.Random, spec: ServiceSpec, node_id: str) -> Outcome:
    aiu = spec.node(node_id).aiu
    tags = sorted(instance_outcomes(aiu), key=lambda t: t.value)
    tag = rng.choice(tags)
    if tag is OutcomeTag.NULL:
        return Outcome.null()
    if tag is OutcomeTag.OK:
        return Outcome.ok()
    if tag is OutcomeTag.COMMAND:
        return Outcome.command(rng.choice(aiu.browsing_commands))
    if tag is OutcomeTag.POINT:
        return Outcome.point(rng.randint(0, 50), rng.randint(0, 50))
    if tag is OutcomeTag.TUPLE_SELECTED:
        if not aiu.table.rows:
            return Outcome.null()
        return Outcome.tuple_selected(rng.randrange(len(aiu.table.rows)))
    if tag is OutcomeTag.CHOICE_SELECTED:
        return Outcome.choice(rng.choice([c.key for c in aiu.choices]))
    if tag is OutcomeTag.CHOICES_SELECTED:
        keys = [c.key for c in aiu.choices]
        return Outcome.choices(rng.sample(keys, rng.randint(1, len(keys))))
    values = {}
    for f in aiu.fields:
        if f.value_type.value == "integer":
            values[f.name] = rng.randint(0, 99)
        elif f.value_type.value == "date":
            values[f.name] = f"2026-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}"
        else:
            values[f.name] = rng.choice(["alpha", "beta", "gamma"])
    return Outcome.filled(values)


def test_replay_reproduces_byte_equal_state(
    hotel_spec, gallery_spec, handheld, desktop, thresholds
):
    rng = random.Random(42)
    specs = [hotel_spec, gallery_spec]
    devices = [handheld, desktop]
    for i in range(100):
        spec = specs[i % 2]
        device = devices[(i // 2) % 2]
        session = start_session(spec, device, thresholds, session_id=f"replay-{i}")
        for _ in range(rng.randint(1, 40)):
            if session.status != "running":
                break
            node_id = rng.choice(sorted(session.active))
            submit(session, node_id, _random_outcome(rng, spec, node_id))
        replayed = replay_session(
            spec,
            device,
            thresholds,
            list(session.history),
            session_id=session.id,
        )
        assert serialize_session(replayed) == serialize_session(session), i
