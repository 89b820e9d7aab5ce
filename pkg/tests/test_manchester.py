import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cefr_onto.exceptions import EmptyDefinitionError, ManchesterSyntaxError, UnknownPropertyError
from cefr_onto.manchester import (
    class_name,
    emit_class_expression,
    emit_ontology,
    format_decimal,
    parse_class_expression,
    parse_ontology,
    property_name,
)
from cefr_onto.rules import ClassDefinition, DefinitionSet, IntervalConstraint, PathRule, build_definitions
from cefr_onto.textmetrics import DEFAULT_CATALOG, FeatureCatalog
from cefr_onto.tree import DecisionTree, TrainConfig

CAT = FeatureCatalog.of("flesch_kincaid", "gunning_fog", "indirect_speech")


def test_names():
    assert property_name("flesch_kincaid") == "fleschKincaid"
    assert property_name("avg_word_length") == "avgWordLength"
    assert class_name("B2") == "B2LevelUtterance"


class TestFormatDecimal:
    @pytest.mark.parametrize("value, text", [
        (5.5, "5.5"), (3.0, "3.0"), (-1.45, "-1.45"), (0.123456, "0.123456"), (1e-7, "0.0000001"),
    ])
    def test_examples(self, value, text):
        assert format_decimal(value) == text

    @given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e9, max_value=1e9))
    def test_lossless(self, v):
        text = format_decimal(v)
        assert float(text) == v
        assert "e" not in text.lower() and "." in text


class TestExpression:
    def test_box(self):
        d = ClassDefinition("A1", "box", (
            IntervalConstraint("flesch_kincaid", None, False, 2.5, True),
            IntervalConstraint("indirect_speech", 0.5, False, None, False),
        ))
        text = emit_class_expression(d, CAT)
        assert text == ("Utterance and (fleschKincaid some xsd:decimal[<= 2.5]) "
                        "and (indirectSpeech value true)")
        assert parse_class_expression(text, CAT, "A1") == d

    def test_empty_box(self):
        d = ClassDefinition("A1", "box")
        assert emit_class_expression(d, CAT) == "Utterance"
        assert parse_class_expression("Utterance", CAT, "A1") == d

    def test_exact(self):
        p1 = PathRule((IntervalConstraint("gunning_fog", 1.0, False, 4.0, True),), "B1", 0, 0.0, 0)
        p2 = PathRule((), "B1", 0, 0.0, 1)
        d = ClassDefinition("B1", "exact", paths=(p1, p2))
        text = emit_class_expression(d, CAT)
        assert text == "Utterance and (((gunningFog some xsd:decimal[> 1.0 , <= 4.0])) or (owl:Thing))"
        assert parse_class_expression(text, CAT, "B1").structurally_equal(d)

    @pytest.mark.parametrize("text, error", [
        ("Utterance and (mystery some xsd:decimal)", UnknownPropertyError),
        ("Utterance and (fleschKincaid some xsd:decimal[<= 1.0", ManchesterSyntaxError),
        ("Utterance and (fleschKincaid value true)", ManchesterSyntaxError),
        ("Utterance and (fleschKincaid some xsd:decimal[> 3.0 , <= 1.0])", ManchesterSyntaxError),
        ("Utterance or", ManchesterSyntaxError),
        ("Thing", ManchesterSyntaxError),
        ("Utterance and (fleschKincaid some xsd:decimal) and (fleschKincaid some xsd:decimal)",
         ManchesterSyntaxError),
        ("Utterance $", ManchesterSyntaxError),
    ])
    def test_errors(self, text, error):
        with pytest.raises(error):
            parse_class_expression(text, CAT)

    def test_error_position(self):
        with pytest.raises(ManchesterSyntaxError, match="position 10"):
            parse_class_expression("Utterance or", CAT)


def _tree():
    rng = np.random.default_rng(3)
    X = np.column_stack([
        np.concatenate([rng.normal(k, 0.4, 60) for k in range(3)]),
        rng.normal(0, 1, 180),
        np.tile([0.0, 1.0], 90),
    ])
    y = np.repeat(["A2", "B2", "C1"], 60)
    return DecisionTree.fit(X, y, TrainConfig(max_depth=3, min_samples_branch=10), CAT)


class TestOntology:
    @pytest.mark.parametrize("mode", ["box", "exact"])
    def test_round_trip(self, mode):
        defs = build_definitions(_tree(), mode=mode)
        text = emit_ontology(defs)
        again = parse_ontology(text, CAT)
        assert again.structurally_equal(defs)
        assert emit_ontology(again) == text

    def test_document_layout(self):
        defs = build_definitions(_tree(), mode="box")
        text = emit_ontology(defs, "http://x.test/o#")
        assert text.startswith("Prefix: : <http://x.test/o#>\n")
        assert "Ontology: <http://x.test/o>" in text
        assert "DisjointClasses:\n    A2LevelUtterance, B2LevelUtterance, C1LevelUtterance" in text
        assert text.count("Class: ") == 1 + len(defs)
        for d in defs:
            assert f"Class: {class_name(d.label)}" in text
        assert '"definition mode: box"' in text

    def test_unused_properties_not_declared(self):
        d = ClassDefinition("A1", "box", (IntervalConstraint("gunning_fog", None, False, 1.0, True),))
        text = emit_ontology(DefinitionSet((d,), CAT, "box"))
        assert "DataProperty: gunningFog" in text
        assert "DataProperty: fleschKincaid" not in text
        assert "DisjointClasses" not in text

    def test_empty_inputs(self):
        with pytest.raises(EmptyDefinitionError):
            parse_ontology("Prefix: : <http://x#>\n", CAT)
        with pytest.raises(EmptyDefinitionError):
            emit_ontology(DefinitionSet((), CAT, "box"))


@settings(max_examples=60, deadline=None)
@given(st.lists(
    st.tuples(st.sampled_from(["flesch_kincaid", "gunning_fog"]),
              st.one_of(st.none(), st.floats(-50, 50)), st.one_of(st.none(), st.floats(-50, 50)),
              st.booleans(), st.booleans()),
    max_size=2, unique_by=lambda t: t[0]))
def test_random_box_round_trip(specs):
    cons = []
    for d, lo, hi, li, hi_inc in specs:
        if lo is not None and hi is not None and lo > hi:
            lo, hi = hi, lo
        try:
            cons.append(IntervalConstraint(d, lo, li, hi, hi_inc))
        except ValueError:
            return
    cons.sort(key=lambda c: CAT.index(c.descriptor))
    d = ClassDefinition("C2", "box", tuple(cons))
    assert parse_class_expression(emit_class_expression(d, CAT), CAT, "C2") == d


def test_default_catalog_properties_are_unique():
    names = [property_name(d.id) for d in DEFAULT_CATALOG]
    assert len(set(names)) == len(names)
