"""Manchester-syntax serialization of definition sets, and a parser for the
subset this module emits.

Grammar of the emitted class expressions::

    expr        := "Utterance" [ "and" body ]
    body        := restriction { "and" restriction }              # box mode
                 | "(" path { "or" path } ")"                      # exact mode
    path        := "(" restriction { "and" restriction } ")" | "(" "owl:Thing" ")"
    restriction := "(" PROP "some" "xsd:decimal" [ "[" facet { "," facet } "]" ] ")"
                 | "(" PROP "value" ( "true" | "false" ) ")"
                 | "(" PROP "some" "xsd:boolean" ")"
    facet       := ( ">" | ">=" | "<" | "<=" ) DECIMAL
"""

from __future__ import annotations

import re
from decimal import Decimal

from .exceptions import EmptyDefinitionError, ManchesterSyntaxError, UnknownPropertyError
from .levels import LEVELS
from .rules import ClassDefinition, DefinitionSet, IntervalConstraint, PathRule
from .textmetrics import DEFAULT_CATALOG, FeatureCatalog

DEFAULT_IRI = "https://example.org/conv-onto#"
ROOT_CLASS = "Utterance"
FRACTION_DIGITS = 6
BINARY_CUT = 0.5

_PREFIXES = (
    ("owl:", "http://www.w3.org/2002/07/owl#"),
    ("rdf:", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
    ("rdfs:", "http://www.w3.org/2000/01/rdf-schema#"),
    ("xsd:", "http://www.w3.org/2001/XMLSchema#"),
)


def property_name(descriptor_id: str) -> str:
    """``flesch_kincaid`` -> ``fleschKincaid``."""
    head, *rest = descriptor_id.split("_")
    return head + "".join(p[:1].upper() + p[1:] for p in rest)


def class_name(label: str) -> str:
    return f"{label}LevelUtterance"


def format_decimal(value: float) -> str:
    """Fixed-point literal with at most six fractional digits, trailing zeros
    trimmed. Values that six digits cannot reproduce exactly are written in
    full so that parsing the literal gives back the same float."""
    text = f"{value:.{FRACTION_DIGITS}f}".rstrip("0")
    if text.endswith("."):
        text += "0"
    if float(text) == value:
        return text
    text = format(Decimal(repr(float(value))), "f")
    return text if "." in text else text + ".0"


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _emit_restriction(c: IntervalConstraint, catalog: FeatureCatalog) -> str:
    prop = property_name(c.descriptor)
    if catalog.get(c.descriptor).is_binary:
        admits = (c.contains(0.0), c.contains(1.0))
        if admits == (True, True):
            return f"({prop} some xsd:boolean)"
        if admits == (False, True):
            return f"({prop} value true)"
        if admits == (True, False):
            return f"({prop} value false)"
        raise EmptyDefinitionError(f"binary descriptor {c.descriptor} admits neither true nor false")
    facets = []
    if c.lower is not None:
        facets.append(f"{'>=' if c.lower_inclusive else '>'} {format_decimal(c.lower)}")
    if c.upper is not None:
        facets.append(f"{'<=' if c.upper_inclusive else '<'} {format_decimal(c.upper)}")
    if not facets:
        return f"({prop} some xsd:decimal)"
    return f"({prop} some xsd:decimal[{' , '.join(facets)}])"


def _ordered(constraints, catalog):
    return sorted(constraints, key=lambda c: catalog.index(c.descriptor))


def emit_class_expression(definition: ClassDefinition, catalog: FeatureCatalog = DEFAULT_CATALOG) -> str:
    if definition.mode == "box":
        parts = [_emit_restriction(c, catalog) for c in _ordered(definition.constraints, catalog)]
        return " and ".join([ROOT_CLASS] + parts)
    if not definition.paths:
        raise EmptyDefinitionError(f"definition {definition.label} has no paths")
    paths = []
    for p in definition.paths:
        restrictions = [_emit_restriction(c, catalog) for c in _ordered(p.constraints, catalog)]
        paths.append(f"({' and '.join(restrictions) or 'owl:Thing'})")
    return f"{ROOT_CLASS} and ({' or '.join(paths)})"


def emit_ontology(defs: DefinitionSet, iri: str = DEFAULT_IRI) -> str:
    """Full ``.omn`` document: prefixes, data properties, ``Utterance`` and
    one equivalent-class frame per level, then a disjointness axiom."""
    if len(defs) == 0:
        raise EmptyDefinitionError("cannot emit an ontology from an empty definition set")
    catalog = defs.catalog
    used = set()
    for d in defs:
        used.update(d.descriptors)
    ontology_iri = iri[:-1] if iri.endswith("#") else iri

    out = [f"Prefix: : <{iri}>"]
    out += [f"Prefix: {p} <{u}>" for p, u in _PREFIXES]
    out += ["", "", f"Ontology: <{ontology_iri}>", "",
            "    Annotations:", f'        rdfs:comment "definition mode: {defs.mode}"', ""]
    out += ["Datatype: xsd:boolean", "", "Datatype: xsd:decimal", ""]
    for desc in catalog:
        if desc.id not in used:
            continue
        out += [
            f"DataProperty: {property_name(desc.id)}", "",
            "    Annotations:", f'        rdfs:comment "descriptor id: {desc.id}"', "",
            "    Characteristics:", "        Functional", "",
            "    Domain:", f"        {ROOT_CLASS}", "",
            "    Range:", f"        xsd:{'boolean' if desc.is_binary else 'decimal'}", "", "",
        ]
    out += [f"Class: {ROOT_CLASS}", "", ""]
    for d in defs:
        out += [
            f"Class: {class_name(d.label)}", "",
            "    EquivalentTo:", f"        {emit_class_expression(d, catalog)}", "",
            "    SubClassOf:", f"        {ROOT_CLASS}", "", "",
        ]
    if len(defs) > 1:
        out += ["DisjointClasses:", "    " + ", ".join(class_name(d.label) for d in defs), ""]
    return "\n".join(out).rstrip("\n") + "\n"


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<space>\s+)
  | (?P<num>[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<op>>=|<=|>|<)
  | (?P<punct>[()\[\],])
  | (?P<name>[A-Za-z_][\w]*(?::[A-Za-z_][\w]*)?)
""", re.VERBOSE)


def _lex(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ManchesterSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "space":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, catalog: FeatureCatalog):
        self.tokens = _lex(text)
        self.i = 0
        self.catalog = catalog
        self.props = {property_name(d.id): d for d in catalog}

    @property
    def tok(self):
        return self.tokens[self.i]

    def peek(self, k=1):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def fail(self, expected):
        kind, value, pos = self.tok
        got = "end of input" if kind == "end" else repr(value)
        raise ManchesterSyntaxError(f"expected {expected}, got {got}", pos)

    def expect(self, value):
        if self.tok[1] != value or self.tok[0] == "end":
            self.fail(repr(value))
        self.i += 1

    def accept(self, value) -> bool:
        if self.tok[0] != "end" and self.tok[1] == value:
            self.i += 1
            return True
        return False

    def expression(self, label):
        self.expect(ROOT_CLASS)
        if not self.accept("and"):
            self.expect_end()
            return ClassDefinition(label, "box")
        if self.tok[1] == "(" and self.peek()[1] == "(":
            self.expect("(")
            paths = [self.path(label, 0)]
            while self.accept("or"):
                paths.append(self.path(label, len(paths)))
            self.expect(")")
            self.expect_end()
            return ClassDefinition(label, "exact", paths=tuple(paths))
        constraints = [self.restriction()]
        while self.accept("and"):
            constraints.append(self.restriction())
        self.expect_end()
        return ClassDefinition(label, "box", constraints=tuple(self._check_distinct(constraints)))

    def expect_end(self):
        if self.tok[0] != "end":
            self.fail("end of expression")

    def path(self, label, index):
        self.expect("(")
        if self.accept("owl:Thing"):
            self.expect(")")
            return PathRule((), label, 0, 0.0, index)
        constraints = [self.restriction()]
        while self.accept("and"):
            constraints.append(self.restriction())
        self.expect(")")
        return PathRule(tuple(self._check_distinct(constraints)), label, 0, 0.0, index)

    def _check_distinct(self, constraints):
        seen = set()
        for c in constraints:
            if c.descriptor in seen:
                raise ManchesterSyntaxError(f"descriptor {c.descriptor} constrained twice in one conjunction")
            seen.add(c.descriptor)
        return constraints

    def restriction(self) -> IntervalConstraint:
        self.expect("(")
        kind, name, pos = self.tok
        if kind != "name":
            self.fail("a data property")
        desc = self.props.get(name)
        if desc is None:
            raise UnknownPropertyError(f"unknown data property {name!r}", pos)
        self.i += 1
        if self.accept("value"):
            if not desc.is_binary:
                raise ManchesterSyntaxError(f"'value' used on numeric property {name}", pos)
            if self.accept("true"):
                c = IntervalConstraint(desc.id, lower=BINARY_CUT, lower_inclusive=False)
            elif self.accept("false"):
                c = IntervalConstraint(desc.id, upper=BINARY_CUT, upper_inclusive=True)
            else:
                self.fail("true or false")
            self.expect(")")
            return c
        self.expect("some")
        if self.accept("xsd:boolean"):
            self.expect(")")
            return IntervalConstraint(desc.id)
        self.expect("xsd:decimal")
        lower = upper = None
        lower_inc = upper_inc = False
        if self.accept("["):
            while True:
                kind, op, pos = self.tok
                if kind != "op":
                    self.fail("a facet operator")
                self.i += 1
                kind, num, _ = self.tok
                if kind != "num":
                    self.fail("a decimal literal")
                self.i += 1
                value = float(num)
                if op in (">", ">="):
                    if lower is not None:
                        raise ManchesterSyntaxError("two lower-bound facets", pos)
                    lower, lower_inc = value, op == ">="
                else:
                    if upper is not None:
                        raise ManchesterSyntaxError("two upper-bound facets", pos)
                    upper, upper_inc = value, op == "<="
                if not self.accept(","):
                    break
            self.expect("]")
        self.expect(")")
        try:
            return IntervalConstraint(desc.id, lower, lower_inc, upper, upper_inc)
        except ValueError as exc:
            raise ManchesterSyntaxError(str(exc), pos) from None


def parse_class_expression(text: str, catalog: FeatureCatalog = DEFAULT_CATALOG, label: str | None = None) -> ClassDefinition:
    """Inverse of :func:`emit_class_expression` for that function's output."""
    return _Parser(text, catalog).expression(label)


_FRAME_RE = re.compile(r"^(\w+):\s*(.*)$")
_SECTION_RE = re.compile(r"^\s+(\w+):\s*$")
_MODE_RE = re.compile(r'"definition mode: (\w+)"')


def _frames(text: str) -> list:
    """``(keyword, name, {section: [lines]})`` for every top-level frame."""
    frames = []
    section = None
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _FRAME_RE.match(line)
        if m and not line[0].isspace():
            frames.append((m.group(1), m.group(2).strip(), {}))
            section = None
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if frames:
                frames[-1][2].setdefault(section, [])
            continue
        if frames and section is not None:
            frames[-1][2][section].append(line.strip())
    return frames


def parse_ontology(text: str, catalog: FeatureCatalog = DEFAULT_CATALOG) -> DefinitionSet:
    """Rebuild the definition set from a document written by :func:`emit_ontology`."""
    level_of = {class_name(level): level for level in LEVELS}
    defs = []
    for keyword, name, sections in _frames(text):
        if keyword == "Class" and name in level_of and sections.get("EquivalentTo"):
            defs.append(parse_class_expression(" ".join(sections["EquivalentTo"]), catalog, level_of[name]))
    if not defs:
        raise EmptyDefinitionError("no level class definitions found in the ontology")
    m = _MODE_RE.search(text)
    mode = m.group(1) if m else defs[0].mode
    return DefinitionSet(tuple(defs), catalog, mode)
