"""Graph validation diagnostics, fork/join matching, and binding dataflow."""

from __future__ import annotations

import json

from aiuflow import fixtures
from aiuflow.parser import parse_spec, spec_to_doc
from aiuflow.validation import (
    DiagnosticCode,
    check_document,
    match_fork_joins,
    validate_spec,
)


def _codes(diagnostics):
    return [d.code for d in diagnostics]


def _hotel_doc(hotel_spec):
    return spec_to_doc(hotel_spec)


class TestCleanFixtures:
    def test_hotel_validates_clean(self, hotel_spec):
        assert validate_spec(hotel_spec) == []

    def test_minimal_validates_clean(self, minimal_spec):
        assert validate_spec(minimal_spec) == []

    def test_gallery_validates_clean(self, gallery_spec):
        assert validate_spec(gallery_spec) == []


class TestMutationFixtures:
    def test_every_bundled_mutation_yields_exactly_its_code(self):
        manifest = fixtures.mutation_manifest()
        assert len(manifest) >= 8
        for name, expected in manifest.items():
            diagnostics = check_document(fixtures.load_mutation_source(name))
            codes = {d.code.value for d in diagnostics}
            assert codes == {expected}, (name, [str(d) for d in diagnostics])

    def test_deleted_join_edge_reports_unmatched_fork(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        doc["transitions"] = [
            t
            for t in doc["transitions"]
            if not (
                t["from"] == "Select_Payment_Type" and t["to"] == "Join_Payment"
            )
        ]
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.UNMATCHED_FORK in _codes(diagnostics)

    def test_missing_tuple_selected_edge_reports_unhandled(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        doc["transitions"] = [
            t
            for t in doc["transitions"]
            if (t.get("trigger") or {}).get("outcome") != "tupleSelected"
        ]
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.UNHANDLED_OUTCOME in _codes(diagnostics)


class TestStructuralRules:
    def test_decision_needs_both_branches(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        doc["transitions"] = [
            t
            for t in doc["transitions"]
            if (t.get("trigger") or {}).get("outcome") != "guardFalse"
        ]
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.MISSING_DECISION_BRANCH in _codes(diagnostics)

    def test_trigger_key_must_name_declared_choice(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        for t in doc["transitions"]:
            trig = t.get("trigger") or {}
            if trig.get("key") == "reserve":
                trig["key"] = "charter-a-yacht"
        diagnostics = check_document(json.dumps(doc))
        codes = _codes(diagnostics)
        assert DiagnosticCode.ILLEGAL_TRIGGER in codes
        # structural defects gate the graph analyses, so the uncovered
        # 'reserve' choice does not also cascade into the report
        assert DiagnosticCode.UNHANDLED_OUTCOME not in codes

    def test_undeclared_binding_variable(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        for t in doc["transitions"]:
            for b in t.get("bindings", []):
                if b["var"] == "city":
                    b["var"] = "metropolis"
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.UNDECLARED_VARIABLE in _codes(diagnostics)

    def test_binding_type_mismatch(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        doc["variables"]["city"] = "integer"
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.BAD_BINDING in _codes(diagnostics)

    def test_ok_trigger_requires_button(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        for node in doc["nodes"]:
            if node["id"] == "Confirm_Reservation":
                node["aiu"].pop("okButton")
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.ILLEGAL_TRIGGER in _codes(diagnostics)

    def test_ambiguous_duplicate_edge(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        doc["transitions"].append(
            {
                "from": "Interact_Hotels",
                "to": "Select_Action",
                "trigger": {"outcome": "tupleSelected"},
            }
        )
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.AMBIGUOUS_TRANSITION in _codes(diagnostics)

    def test_syntax_error_folded(self):
        assert _codes(check_document(b"{nope")) == [DiagnosticCode.SYNTAX_ERROR]

    def test_unknown_kind_folded(self, minimal_spec):
        doc = spec_to_doc(minimal_spec)
        doc["nodes"][1]["aiu"]["kind"] = "BrowseHologram"
        assert _codes(check_document(json.dumps(doc))) == [
            DiagnosticCode.UNKNOWN_AIU_KIND
        ]


class TestDataflow:
    def test_optional_field_binding_is_not_definite(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        for node in doc["nodes"]:
            if node["id"] == "Fill_Customer_Data":
                for f in node["aiu"]["fields"]:
                    if f["name"] == "age":
                        f["required"] = False
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.UNBOUND_VARIABLE in _codes(diagnostics)

    def test_join_union_makes_both_branch_bindings_definite(self, hotel_spec):
        # the confirm message reads variables bound on separate fork branches
        assert validate_spec(hotel_spec) == []

    def test_guard_variable_bound_only_on_one_branch_of_decision_loop(
        self, hotel_spec
    ):
        # moving the guard var binding off the customer form leaves the
        # decision reading a variable that no path binds
        doc = _hotel_doc(hotel_spec)
        for t in doc["transitions"]:
            bindings = t.get("bindings", [])
            t["bindings"] = [b for b in bindings if b["var"] != "customer_age"]
        diagnostics = check_document(json.dumps(doc))
        assert DiagnosticCode.UNBOUND_VARIABLE in _codes(diagnostics)


class TestForkMatching:
    def test_hotel_forks_match_their_joins(self, hotel_spec):
        matches, unmatched = match_fork_joins(hotel_spec)
        assert unmatched == []
        assert matches == {
            "Fork_Search": "Join_Search",
            "Fork_Payment": "Join_Payment",
        }

    def test_nearest_join_wins(self, hotel_spec):
        # Join_Payment is also reachable from the search branches, but
        # Join_Search is nearer on every branch
        matches, _ = match_fork_joins(hotel_spec)
        assert matches["Fork_Search"] == "Join_Search"

    def test_single_branch_fork_is_unmatched(self, hotel_spec):
        doc = _hotel_doc(hotel_spec)
        doc["transitions"] = [
            t
            for t in doc["transitions"]
            if not (t["from"] == "Fork_Search" and t["to"] == "Fill_Period")
        ]
        spec = parse_spec(json.dumps(doc))
        assert DiagnosticCode.UNMATCHED_FORK in _codes(validate_spec(spec))


class TestOutcomeClosure:
    def test_every_legal_outcome_routes_somewhere(self, hotel_spec):
        """For a clean spec, every activity node either has an edge for each
        instance-level outcome or relies on the Quit default (null only)."""
        from aiuflow.engine import instance_outcomes
        from aiuflow.model import NodeKind, OutcomeTag

        for node in hotel_spec.nodes:
            if node.kind is not NodeKind.ACTIVITY:
                continue
            for tag in instance_outcomes(node.aiu):
                if tag in (OutcomeTag.NULL, OutcomeTag.COMMAND):
                    continue  # quit default / implicit self-transition
                edges = [
                    t
                    for t in hotel_spec.outgoing(node.id)
                    if t.trigger is not None and t.trigger.outcome is tag
                ]
                assert edges, (node.id, tag)
