"""Line-oriented text format for model definitions.

Grammar (whitespace insignificant, ``#`` starts a comment):

    model    := stmt* ;
    stmt     := "species" IDENT+ ";"
              | "rxn" complex "->" complex "@" NUMBER ";"
              | "compartments" "I=" NUMBER "E=" NUMBER "F=" NUMBER "C=" NUMBER ";"
              | "mu" mu_spec ";"
    complex  := "0" | term ("+" term)* ;      term := [INT] IDENT
    mu_spec  := "point" (IDENT "=" INT)*
              | "cat" "{" vec ":" NUMBER ("," vec ":" NUMBER)* "}"
              | "poisson" NUMBER+
    vec      := "(" INT ("," INT)* ")"

Numbers are decimal and non-negative.  The species stanza must precede any
statement that names a species.  ``parse_model`` collects as many errors as
it can (recovering at statement boundaries) and raises
:class:`ModelParseError` carrying all of them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .models import (
    Categorical,
    CompartmentParams,
    InflowDistribution,
    ModelError,
    PointMass,
    ProductPoisson,
    Reaction,
    ReactionNetwork,
    RnicModel,
    StateVec,
)


@dataclass(frozen=True)
class ParseError:
    line: int
    col: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.col}: {self.message}"


class ModelParseError(ValueError):
    def __init__(self, errors: list[ParseError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[;@+={}(),:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | punctuation text | "arrow" | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str):
    tokens: list[_Token] = []
    errors: list[ParseError] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            errors.append(ParseError(line, col, f"unexpected character {text[pos]!r}"))
            pos += 1
            col += 1
            continue
        kind = m.lastgroup
        tok = m.group()
        if kind == "number":
            tokens.append(_Token("number", tok, line, col))
        elif kind == "ident":
            tokens.append(_Token("ident", tok, line, col))
        elif kind == "arrow":
            tokens.append(_Token("->", tok, line, col))
        elif kind == "punct":
            tokens.append(_Token(tok, tok, line, col))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens, errors


class _Parser:
    def __init__(self, tokens: list[_Token], errors: list[ParseError]):
        self.tokens = tokens
        self.i = 0
        self.errors = errors
        self.species: tuple[str, ...] | None = None
        self.species_index: dict[str, int] = {}
        self.reactions: list[Reaction] = []
        self.reaction_keys: set[tuple[StateVec, StateVec]] = set()
        self.compartments: CompartmentParams | None = None
        self.compartments_line: int | None = None
        self.mu: InflowDistribution | None = None
        self.mu_line: int | None = None

    # token plumbing

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, tok: _Token, message: str):
        self.errors.append(ParseError(tok.line, tok.col, message))

    def expect(self, kind: str, what: str) -> _Token | None:
        tok = self.peek()
        if tok.kind != kind:
            self.error(tok, f"expected {what}, found {tok.text!r}" if tok.text else f"expected {what}")
            return None
        return self.advance()

    def skip_statement(self):
        while self.peek().kind not in (";", "eof"):
            self.advance()
        if self.peek().kind == ";":
            self.advance()

    # grammar

    def parse(self):
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == ";":
                self.advance()
                continue
            if tok.kind != "ident":
                self.error(tok, f"expected a statement keyword, found {tok.text!r}")
                self.skip_statement()
                continue
            before = len(self.errors)
            if tok.text == "species":
                self.parse_species()
            elif tok.text == "rxn":
                self.parse_rxn()
            elif tok.text == "compartments":
                self.parse_compartments()
            elif tok.text == "mu":
                self.parse_mu()
            else:
                self.error(tok, f"unknown statement {tok.text!r}")
                self.skip_statement()
                continue
            if len(self.errors) > before:
                self.skip_statement()
            elif self.expect(";", "';'") is None:
                self.skip_statement()

    def parse_species(self):
        kw = self.advance()
        if self.species is not None:
            self.error(kw, "species already declared")
        names = []
        while self.peek().kind == "ident":
            names.append(self.advance().text)
        if not names:
            self.error(self.peek(), "expected at least one species name")
            return
        if len(set(names)) != len(names):
            self.error(kw, "duplicate species name")
            return
        if self.species is None:
            self.species = tuple(names)
            self.species_index = {n: j for j, n in enumerate(names)}

    def require_species(self, tok: _Token) -> bool:
        if self.species is None:
            self.error(tok, "species must be declared before this statement")
            return False
        return True

    def parse_complex(self) -> StateVec | None:
        d = len(self.species or ())
        tok = self.peek()
        if tok.kind == "number" and tok.text == "0":
            self.advance()
            return tuple([0] * d)
        coeffs = [0] * d
        while True:
            coeff = 1
            tok = self.peek()
            if tok.kind == "number":
                self.advance()
                try:
                    coeff = int(tok.text)
                    if str(coeff) != tok.text:
                        raise ValueError
                except ValueError:
                    self.error(tok, f"coefficient {tok.text!r} must be a positive integer")
                    return None
                if coeff == 0:
                    self.error(tok, "zero coefficient in a non-empty complex")
                    return None
            name = self.expect("ident", "a species name")
            if name is None:
                return None
            if name.text not in self.species_index:
                self.error(name, f"unknown species {name.text!r}")
                return None
            coeffs[self.species_index[name.text]] += coeff
            if self.peek().kind == "+":
                self.advance()
                continue
            return tuple(coeffs)

    def parse_number(self, what: str) -> tuple[float, _Token] | None:
        tok = self.expect("number", what)
        if tok is None:
            return None
        return float(tok.text), tok

    def parse_int(self, what: str) -> int | None:
        got = self.parse_number(what)
        if got is None:
            return None
        value, tok = got
        if value != int(value):
            self.error(tok, f"expected an integer, found {tok.text!r}")
            return None
        return int(value)

    def parse_rxn(self):
        kw = self.advance()
        if not self.require_species(kw):
            return
        reactant = self.parse_complex()
        if reactant is None:
            return
        if self.expect("->", "'->'") is None:
            return
        product = self.parse_complex()
        if product is None:
            return
        if self.expect("@", "'@'") is None:
            return
        got = self.parse_number("a rate constant")
        if got is None:
            return
        rate, rate_tok = got
        if reactant == product:
            self.error(kw, "reaction reactant equals product")
            return
        if (reactant, product) in self.reaction_keys:
            self.error(kw, "duplicate reaction")
            return
        try:
            rxn = Reaction(reactant, product, rate)
        except ModelError as exc:
            self.error(rate_tok, str(exc))
            return
        self.reaction_keys.add((reactant, product))
        self.reactions.append(rxn)

    def parse_compartments(self):
        kw = self.advance()
        if self.compartments is not None:
            self.error(kw, "compartments already declared")
        values = []
        for expected in ("I", "E", "F", "C"):
            name = self.expect("ident", f"'{expected}='")
            if name is None:
                return
            if name.text != expected:
                self.error(name, f"expected '{expected}=', found {name.text!r}")
                return
            if self.expect("=", "'='") is None:
                return
            got = self.parse_number("a rate constant")
            if got is None:
                return
            values.append(got[0])
        if self.compartments is None:
            self.compartments = CompartmentParams(*values)
            self.compartments_line = kw.line

    def parse_mu(self):
        kw = self.advance()
        if self.mu is not None:
            self.error(kw, "mu already declared")
        if not self.require_species(kw):
            return
        d = len(self.species)
        tok = self.expect("ident", "'point', 'cat', or 'poisson'")
        if tok is None:
            return
        mu: InflowDistribution | None = None
        if tok.text == "point":
            counts = [0] * d
            assigned = set()
            while self.peek().kind == "ident":
                name = self.advance()
                if name.text not in self.species_index:
                    self.error(name, f"unknown species {name.text!r}")
                    return
                if name.text in assigned:
                    self.error(name, f"species {name.text!r} assigned twice")
                    return
                assigned.add(name.text)
                if self.expect("=", "'='") is None:
                    return
                value = self.parse_int("a molecule count")
                if value is None:
                    return
                counts[self.species_index[name.text]] = value
            mu = PointMass(tuple(counts))
        elif tok.text == "cat":
            if self.expect("{", "'{'") is None:
                return
            atoms = []
            while True:
                vec = self.parse_vec(d)
                if vec is None:
                    return
                if self.expect(":", "':'") is None:
                    return
                got = self.parse_number("a probability")
                if got is None:
                    return
                atoms.append((vec, got[0]))
                nxt = self.peek()
                if nxt.kind == ",":
                    self.advance()
                    continue
                if nxt.kind == "}":
                    self.advance()
                    break
                self.error(nxt, f"expected ',' or '}}', found {nxt.text!r}")
                return
            try:
                mu = Categorical(tuple(atoms))
            except ModelError as exc:
                self.error(kw, str(exc))
                return
        elif tok.text == "poisson":
            means = []
            while self.peek().kind == "number":
                means.append(self.advance())
            if len(means) != d:
                self.error(tok, f"expected {d} Poisson mean(s), found {len(means)}")
                return
            mu = ProductPoisson(tuple(float(m.text) for m in means))
        else:
            self.error(tok, f"expected 'point', 'cat', or 'poisson', found {tok.text!r}")
            return
        if self.mu is None:
            self.mu = mu
            self.mu_line = kw.line

    def parse_vec(self, d: int) -> StateVec | None:
        if self.expect("(", "'('") is None:
            return None
        entries = []
        while True:
            value = self.parse_int("a molecule count")
            if value is None:
                return None
            entries.append(value)
            nxt = self.peek()
            if nxt.kind == ",":
                self.advance()
                continue
            if nxt.kind == ")":
                self.advance()
                break
            self.error(nxt, f"expected ',' or ')', found {nxt.text!r}")
            return None
        if len(entries) != d:
            self.error(self.peek(), f"state vector has {len(entries)} entries, expected {d}")
            return None
        return tuple(entries)

    def build(self) -> RnicModel | None:
        end = self.tokens[-1]
        if self.species is None:
            self.error(end, "missing species stanza")
        if self.compartments is None:
            self.error(end, "missing compartments stanza")
        if self.errors:
            return None
        assert self.species is not None and self.compartments is not None
        try:
            chem = ReactionNetwork(self.species, tuple(self.reactions))
            return RnicModel(chem, self.compartments, self.mu)
        except ModelError as exc:
            line = self.mu_line or self.compartments_line or 1
            self.error(_Token("eof", "", line, 1), str(exc))
            return None


def parse_model(text: str) -> RnicModel:
    """Parse model text, raising :class:`ModelParseError` with every error found."""
    tokens, errors = _tokenize(text)
    parser = _Parser(tokens, errors)
    parser.parse()
    model = parser.build()
    if parser.errors:
        raise ModelParseError(sorted(parser.errors, key=lambda e: (e.line, e.col)))
    assert model is not None
    return model


def _format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _format_complex(chem: ReactionNetwork, vec: StateVec) -> str:
    terms = []
    for coeff, name in zip(vec, chem.species):
        if coeff == 1:
            terms.append(name)
        elif coeff > 1:
            terms.append(f"{coeff}{name}")
    return "+".join(terms) if terms else "0"


def _format_vec(vec: StateVec) -> str:
    return "(" + ",".join(str(v) for v in vec) + ")"


def serialize_model(model: RnicModel) -> str:
    """Canonical text for a model; ``parse_model`` round-trips it exactly."""
    chem = model.chemistry
    lines = ["species " + " ".join(chem.species) + ";"]
    for r in chem.reactions:
        lines.append(
            f"rxn {_format_complex(chem, r.reactant)} -> "
            f"{_format_complex(chem, r.product)} @ {_format_number(r.rate)};"
        )
    p = model.compartments
    lines.append(
        "compartments "
        f"I={_format_number(p.kappa_i)} E={_format_number(p.kappa_e)} "
        f"F={_format_number(p.kappa_f)} C={_format_number(p.kappa_c)};"
    )
    mu = model.mu
    if isinstance(mu, PointMass):
        assigns = [
            f"{name}={count}"
            for name, count in zip(chem.species, mu.state)
            if count
        ]
        lines.append("mu point" + ("" if not assigns else " " + " ".join(assigns)) + ";")
    elif isinstance(mu, Categorical):
        body = ", ".join(f"{_format_vec(s)}:{_format_number(p)}" for s, p in mu.atoms)
        lines.append("mu cat {" + body + "};")
    elif isinstance(mu, ProductPoisson):
        lines.append("mu poisson " + " ".join(_format_number(m) for m in mu.means) + ";")
    return "\n".join(lines) + "\n"
