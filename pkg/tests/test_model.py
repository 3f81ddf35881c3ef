"""Outcome codec, guard language, and placeholder helpers."""

from __future__ import annotations

import pytest

from aiuflow.model import (
    AiuInstance,
    AiuKind,
    Description,
    Guard,
    GuardError,
    Outcome,
    payload_problems,
    placeholder_variables,
    substitute_placeholders,
)


class TestOutcomeCodec:
    @pytest.mark.parametrize(
        "outcome",
        [
            Outcome.null(),
            Outcome.ok(),
            Outcome.command("zoom-in"),
            Outcome.point(3, 9),
            Outcome.tuple_selected(12),
            Outcome.filled({"a": 1, "b": "x"}),
            Outcome.choice("roma"),
            Outcome.choices(["b", "a"]),
        ],
    )
    def test_round_trip(self, outcome):
        assert Outcome.from_doc(outcome.to_doc()) == outcome

    def test_choices_normalized_sorted(self):
        assert Outcome.choices(["z", "a"]).keys == ("a", "z")

    def test_from_doc_rejects_unknown_tag(self):
        with pytest.raises(ValueError):
            Outcome.from_doc({"outcome": "teleport"})

    def test_from_doc_rejects_guard_pseudo_tags(self):
        with pytest.raises(ValueError):
            Outcome.from_doc({"outcome": "guardTrue"})

    def test_from_doc_rejects_bool_row(self):
        with pytest.raises(ValueError):
            Outcome.from_doc({"outcome": "tupleSelected", "row": True})

    def test_from_doc_requires_payload(self):
        with pytest.raises(ValueError):
            Outcome.from_doc({"outcome": "choiceSelected"})


class TestGuards:
    def test_integer_comparison(self):
        guard = Guard.parse("age >= 18")
        assert guard.variables() == {"age"}
        assert guard.evaluate({"age": 20}) is True
        assert guard.evaluate({"age": 17}) is False

    def test_string_equality(self):
        guard = Guard.parse("city == 'roma'")
        assert guard.evaluate({"city": "roma"}) is True
        assert guard.evaluate({"city": "milano"}) is False

    def test_var_to_var(self):
        guard = Guard.parse("a != b")
        assert guard.evaluate({"a": 1, "b": 2}) is True

    def test_literal_only_guard(self):
        assert Guard.parse("1 < 2").evaluate({}) is True

    def test_unbound_variable_raises(self):
        with pytest.raises(GuardError):
            Guard.parse("age > 10").evaluate({})

    def test_type_mismatch_on_order_comparison(self):
        with pytest.raises(GuardError):
            Guard.parse("age > 'x'").evaluate({"age": 3})

    @pytest.mark.parametrize("bad", ["", "age", "age >", "age ~ 3", "a == b == c"])
    def test_parse_rejects_garbage(self, bad):
        with pytest.raises(GuardError):
            Guard.parse(bad)


class TestPayloadRules:
    def test_fields_only_on_fill_list(self):
        aiu = AiuInstance(
            id="x",
            kind=AiuKind.BROWSE_MESSAGE,
            description=Description(name="m"),
            text_body="hello",
            ok_button=True,
        )
        assert payload_problems(aiu) == []

    def test_choices_required_for_select(self):
        aiu = AiuInstance(
            id="x",
            kind=AiuKind.SELECT_CHOICE,
            description=Description(name="pick"),
        )
        assert any("choice" in p for p in payload_problems(aiu))

    def test_image_requires_ref(self):
        aiu = AiuInstance(
            id="x",
            kind=AiuKind.BROWSE_IMAGE,
            description=Description(name="img"),
        )
        assert any("imageRef" in p for p in payload_problems(aiu))


class TestPlaceholders:
    def test_extraction(self):
        aiu = AiuInstance(
            id="x",
            kind=AiuKind.BROWSE_MESSAGE,
            description=Description(name="Confirm {thing}"),
            text_body="{a} and {b_2}",
            ok_button=True,
        )
        assert placeholder_variables(aiu) == {"thing", "a", "b_2"}

    def test_substitution_leaves_unknown(self):
        assert (
            substitute_placeholders("{a} {b}", {"a": "x"}) == "x {b}"
        )
