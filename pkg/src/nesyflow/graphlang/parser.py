"""Recursive-descent parser for the conceptual-graph language.

Grammar (one declaration per statement; '#' comments; whitespace free-form):

    program          ::= "graph" IDENT decl*
    decl             ::= concept-decl | labels-decl | contains-decl
                       | hasa-decl | constraint-decl
    concept-decl     ::= "concept" IDENT
    labels-decl      ::= "labels" IDENT "of" IDENT
                         "{" IDENT ("," IDENT)+ "}"
    contains-decl    ::= "contains" IDENT "(" IDENT "->" IDENT ")"
    hasa-decl        ::= "has_a" IDENT "(" role ("," role)+ ")"
    role             ::= IDENT ":" IDENT
    constraint-decl  ::= "constraint" IDENT "on" IDENT "{" expr "}"
    expr             ::= "if" expr "then" expr
                       | "iff" "(" expr "," expr ")"
                       | "and" "(" expr ("," expr)* ")"
                       | "or" "(" expr ("," expr)* ")"
                       | "not" "(" expr ")"
                       | count-op "(" INT "," expr ("," expr)* ")"
                       | IDENT "is" IDENT
                       | IDENT "(" IDENT ("," IDENT)* ")"
    count-op         ::= "exactly" | "atMost" | "atLeast"

Parsing recovers per declaration: a syntax error skips ahead to the next
top-level keyword, so one bad statement yields one diagnostic rather than a
cascade.  After the syntax pass a resolution pass checks that every name is
declared exactly once, binds each label atom to the label-set that declares
it, and checks relation-atom arity.  All findings come back as Diagnostics
with source spans; `result.graph` is only usable when there are no errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lexer import Token, TokenType, tokenize
from .nodes import (
    CONTAINS,
    COUNT_OPS,
    ENTITY,
    HAS_A,
    LABEL_SET,
    And,
    Atom,
    ConceptDecl,
    ConceptGraph,
    ConstraintDecl,
    Count,
    Diagnostic,
    Expr,
    If,
    Iff,
    Not,
    Or,
    RelAtom,
    RelationDecl,
    Span,
    error,
)

_DECL_KEYWORDS = ("concept", "labels", "contains", "has_a", "constraint")


@dataclass
class ParseResult:
    graph: ConceptGraph | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.graph is not None and not any(
            d.severity == "error" for d in self.diagnostics
        )

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


class _SyntaxError(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diags: list[Diagnostic] = []

    # --- token plumbing ---------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type is not TokenType.EOF:
            self.pos += 1
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.type is TokenType.KEYWORD and tok.value == word

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.type is TokenType.KEYWORD and tok.value == word:
            return self.next()
        raise _SyntaxError(
            error("syntax-error", f"expected {word!r}, found {tok.value!r}", tok.span)
        )

    def expect(self, ttype: TokenType, what: str) -> Token:
        tok = self.peek()
        if tok.type is ttype:
            return self.next()
        found = tok.value if tok.value else "end of input"
        raise _SyntaxError(
            error("syntax-error", f"expected {what}, found {found!r}", tok.span)
        )

    def expect_ident(self, what: str = "identifier") -> Token:
        return self.expect(TokenType.IDENT, what)

    def sync(self) -> None:
        """Skip forward to the next declaration keyword (error recovery)."""
        while True:
            tok = self.peek()
            if tok.type is TokenType.EOF:
                return
            if tok.type is TokenType.KEYWORD and tok.value in _DECL_KEYWORDS:
                return
            self.next()

    # --- declarations -----------------------------------------------------

    def parse_program(self) -> ConceptGraph | None:
        try:
            self.expect_keyword("graph")
            name = self.expect_ident("graph name").value
        except _SyntaxError as exc:
            self.diags.append(exc.diag)
            return None
        graph = ConceptGraph(name, [], [], [])
        while self.peek().type is not TokenType.EOF:
            tok = self.peek()
            if tok.type is not TokenType.KEYWORD or tok.value not in _DECL_KEYWORDS:
                self.diags.append(
                    error(
                        "syntax-error",
                        f"expected a declaration, found {tok.value!r}",
                        tok.span,
                    )
                )
                self.next()
                self.sync()
                continue
            try:
                self.parse_decl(graph)
            except _SyntaxError as exc:
                self.diags.append(exc.diag)
                self.sync()
        return graph

    def parse_decl(self, graph: ConceptGraph) -> None:
        word = self.peek().value
        if word == "concept":
            span = self.next().span
            name = self.expect_ident("concept name").value
            graph.concepts.append(ConceptDecl(name, ENTITY, span=span))
        elif word == "labels":
            span = self.next().span
            name = self.expect_ident("label-set name").value
            self.expect_keyword("of")
            parent = self.expect_ident("parent concept").value
            self.expect(TokenType.LBRACE, "'{'")
            labels = [self.expect_ident("label name").value]
            while self.peek().type is TokenType.COMMA:
                self.next()
                labels.append(self.expect_ident("label name").value)
            self.expect(TokenType.RBRACE, "'}'")
            if len(labels) < 2:
                raise _SyntaxError(
                    error(
                        "syntax-error",
                        f"label-set {name!r} needs at least 2 labels",
                        span,
                    )
                )
            graph.concepts.append(
                ConceptDecl(name, LABEL_SET, tuple(labels), parent, span=span)
            )
        elif word == "contains":
            span = self.next().span
            name = self.expect_ident("relation name").value
            self.expect(TokenType.LPAREN, "'('")
            parent = self.expect_ident("parent concept").value
            self.expect(TokenType.ARROW, "'->'")
            child = self.expect_ident("child concept").value
            self.expect(TokenType.RPAREN, "')'")
            if parent == child:
                raise _SyntaxError(
                    error(
                        "syntax-error",
                        f"containment {name!r} cannot relate a concept to itself",
                        span,
                    )
                )
            # role names for a containment scope are the concept names
            graph.relations.append(
                RelationDecl(name, CONTAINS, parent, (child,), (parent, child), span=span)
            )
        elif word == "has_a":
            span = self.next().span
            name = self.expect_ident("relation name").value
            self.expect(TokenType.LPAREN, "'('")
            roles, children = [], []
            while True:
                role = self.expect_ident("role name").value
                self.expect(TokenType.COLON, "':'")
                concept = self.expect_ident("concept name").value
                roles.append(role)
                children.append(concept)
                if self.peek().type is TokenType.COMMA:
                    self.next()
                    continue
                break
            self.expect(TokenType.RPAREN, "')'")
            if len(roles) < 2:
                raise _SyntaxError(
                    error(
                        "syntax-error",
                        f"has_a relation {name!r} needs at least 2 slots",
                        span,
                    )
                )
            if len(set(roles)) != len(roles):
                raise _SyntaxError(
                    error("syntax-error", f"duplicate role name in {name!r}", span)
                )
            # a has_a relation is its own scope; tuples of it are the "parent"
            graph.relations.append(
                RelationDecl(name, HAS_A, name, tuple(children), tuple(roles), span=span)
            )
        elif word == "constraint":
            span = self.next().span
            name = self.expect_ident("constraint name").value
            self.expect_keyword("on")
            scope = self.expect_ident("scope concept or relation").value
            self.expect(TokenType.LBRACE, "'{'")
            body = self.parse_expr()
            self.expect(TokenType.RBRACE, "'}'")
            graph.constraints.append(ConstraintDecl(name, scope, body, span=span))
        else:  # pragma: no cover - guarded by caller
            raise AssertionError(word)

    # --- expressions --------------------------------------------------------

    def parse_expr(self) -> Expr:
        tok = self.peek()
        if tok.type is TokenType.KEYWORD:
            if tok.value == "if":
                span = self.next().span
                cond = self.parse_expr()
                self.expect_keyword("then")
                then = self.parse_expr()
                return If(cond, then, span=span)
            if tok.value == "iff":
                span = self.next().span
                args = self.parse_args(span, minimum=2)
                if len(args) != 2:
                    raise _SyntaxError(
                        error("syntax-error", "iff takes exactly 2 arguments", span)
                    )
                return Iff(args[0], args[1], span=span)
            if tok.value == "and":
                span = self.next().span
                return And(tuple(self.parse_args(span, minimum=2)), span=span)
            if tok.value == "or":
                span = self.next().span
                return Or(tuple(self.parse_args(span, minimum=2)), span=span)
            if tok.value == "not":
                span = self.next().span
                args = self.parse_args(span, minimum=1)
                if len(args) != 1:
                    raise _SyntaxError(
                        error("syntax-error", "not takes exactly 1 argument", span)
                    )
                return Not(args[0], span=span)
            if tok.value in COUNT_OPS:
                op = self.next()
                self.expect(TokenType.LPAREN, "'('")
                k_tok = self.expect(TokenType.INT, "count bound")
                self.expect(TokenType.COMMA, "','")
                children = [self.parse_expr()]
                while self.peek().type is TokenType.COMMA:
                    self.next()
                    children.append(self.parse_expr())
                self.expect(TokenType.RPAREN, "')'")
                return Count(op.value, int(k_tok.value), tuple(children), span=op.span)
            raise _SyntaxError(
                error(
                    "syntax-error",
                    f"unexpected {tok.value!r} in constraint expression",
                    tok.span,
                )
            )
        if tok.type is TokenType.IDENT:
            head = self.next()
            nxt = self.peek()
            if nxt.type is TokenType.KEYWORD and nxt.value == "is":
                self.next()
                label = self.expect_ident("label name")
                return Atom(head.value, label.value, span=head.span)
            if nxt.type is TokenType.LPAREN:
                self.next()
                vars_ = [self.expect_ident("variable").value]
                while self.peek().type is TokenType.COMMA:
                    self.next()
                    vars_.append(self.expect_ident("variable").value)
                self.expect(TokenType.RPAREN, "')'")
                return RelAtom(head.value, tuple(vars_), span=head.span)
            raise _SyntaxError(
                error(
                    "syntax-error",
                    f"expected 'is' or '(' after {head.value!r}",
                    nxt.span,
                )
            )
        found = tok.value if tok.value else "end of input"
        raise _SyntaxError(
            error("syntax-error", f"expected an expression, found {found!r}", tok.span)
        )

    def parse_args(self, span: Span, minimum: int) -> list[Expr]:
        self.expect(TokenType.LPAREN, "'('")
        args = [self.parse_expr()]
        while self.peek().type is TokenType.COMMA:
            self.next()
            args.append(self.parse_expr())
        self.expect(TokenType.RPAREN, "')'")
        if len(args) < minimum:
            raise _SyntaxError(
                error("syntax-error", f"expected at least {minimum} arguments", span)
            )
        return args


# --- resolution -------------------------------------------------------------


def _resolve(graph: ConceptGraph, diags: list[Diagnostic]) -> None:
    """Check declared-exactly-once rules and bind atoms to their targets."""
    seen: dict[str, Span] = {}
    for decl in [*graph.concepts, *graph.relations]:
        if decl.name in seen:
            diags.append(
                error(
                    "duplicate-declaration",
                    f"{decl.name!r} is declared more than once",
                    decl.span,
                )
            )
        else:
            seen[decl.name] = decl.span

    concept_names = {c.name for c in graph.concepts}
    for ls in graph.label_sets():
        if ls.parent not in concept_names:
            diags.append(
                error(
                    "undefined-reference",
                    f"label-set {ls.name!r} names undeclared concept {ls.parent!r}",
                    ls.span,
                )
            )
        if len(set(ls.labels)) != len(ls.labels):
            diags.append(
                error(
                    "duplicate-declaration",
                    f"label-set {ls.name!r} repeats a label name",
                    ls.span,
                )
            )
    # label names must identify one label-set per parent concept, otherwise
    # atoms and score rows would be ambiguous
    for entity in graph.concepts:
        owned: dict[str, str] = {}
        for ls in graph.label_sets_of(entity.name):
            for lbl in ls.labels:
                if lbl in owned:
                    diags.append(
                        error(
                            "duplicate-declaration",
                            f"label {lbl!r} appears in both {owned[lbl]!r} and"
                            f" {ls.name!r} on concept {entity.name!r}",
                            ls.span,
                        )
                    )
                else:
                    owned[lbl] = ls.name

    for rel in graph.relations:
        targets = [rel.parent, *rel.children] if rel.kind == CONTAINS else rel.children
        for concept in targets:
            if concept not in concept_names:
                diags.append(
                    error(
                        "undefined-reference",
                        f"relation {rel.name!r} names undeclared concept {concept!r}",
                        rel.span,
                    )
                )
            elif graph.concept(concept).kind == LABEL_SET:
                diags.append(
                    error(
                        "undefined-reference",
                        f"relation {rel.name!r} cannot relate label-set {concept!r}",
                        rel.span,
                    )
                )

    for con in graph.constraints:
        env = _scope_env(graph, con, diags)
        if env is None:
            continue
        _resolve_expr(graph, con.body, env, diags)


def _scope_env(
    graph: ConceptGraph, con: ConstraintDecl, diags: list[Diagnostic]
) -> dict[str, str] | None:
    """Map each bound variable of the constraint to the concept it ranges
    over.  Concept scopes bind the concept name itself; relation scopes bind
    each role name."""
    concept = graph.concept(con.scope)
    if concept is not None:
        if concept.kind == LABEL_SET:
            diags.append(
                error(
                    "undefined-reference",
                    f"constraint {con.name!r} cannot scope over label-set"
                    f" {con.scope!r}",
                    con.span,
                )
            )
            return None
        return {concept.name: concept.name}
    rel = graph.relation(con.scope)
    if rel is not None:
        return dict(zip(rel.roles, (rel.parent, *rel.children) if rel.kind == CONTAINS else rel.children))
    diags.append(
        error(
            "undefined-reference",
            f"constraint {con.name!r} scopes over undeclared {con.scope!r}",
            con.span,
        )
    )
    return None


def _resolve_expr(
    graph: ConceptGraph, expr: Expr, env: dict[str, str], diags: list[Diagnostic]
) -> None:
    if isinstance(expr, Atom):
        concept = env.get(expr.var)
        if concept is None:
            diags.append(
                error(
                    "undefined-reference",
                    f"variable {expr.var!r} is not bound by the constraint scope",
                    expr.span,
                )
            )
            return
        owners = graph.resolve_label(concept, expr.label)
        if not owners:
            diags.append(
                error(
                    "undefined-reference",
                    f"label {expr.label!r} is not declared for concept {concept!r}",
                    expr.span,
                )
            )
            return
        expr.concept = concept
        expr.label_set = owners[0].name
    elif isinstance(expr, RelAtom):
        rel = graph.relation(expr.relation)
        if rel is None:
            diags.append(
                error(
                    "undefined-reference",
                    f"relation atom names undeclared relation {expr.relation!r}",
                    expr.span,
                )
            )
            return
        expected = len(rel.roles)
        if len(expr.vars) != expected:
            diags.append(
                error(
                    "undefined-reference",
                    f"relation {expr.relation!r} takes {expected} variables,"
                    f" got {len(expr.vars)}",
                    expr.span,
                )
            )
        for v in expr.vars:
            if v not in env:
                diags.append(
                    error(
                        "undefined-reference",
                        f"variable {v!r} is not bound by the constraint scope",
                        expr.span,
                    )
                )
    elif isinstance(expr, Not):
        _resolve_expr(graph, expr.child, env, diags)
    elif isinstance(expr, (And, Or)):
        for child in expr.children:
            _resolve_expr(graph, child, env, diags)
    elif isinstance(expr, If):
        _resolve_expr(graph, expr.cond, env, diags)
        _resolve_expr(graph, expr.then, env, diags)
    elif isinstance(expr, Iff):
        _resolve_expr(graph, expr.left, env, diags)
        _resolve_expr(graph, expr.right, env, diags)
    elif isinstance(expr, Count):
        if expr.k < 0:
            diags.append(
                error("syntax-error", "count bound must be non-negative", expr.span)
            )
        for child in expr.children:
            _resolve_expr(graph, child, env, diags)


# --- entry points -------------------------------------------------------------


def parse(source: str) -> ParseResult:
    """Parse a graph source into a ConceptGraph plus diagnostics.

    Deterministic: the same source always yields the same value and the same
    diagnostic list.  The graph is returned even when it has errors so tools
    can show partial structure, but `ok` is False in that case.
    """
    tokens, diags = tokenize(source)
    parser = _Parser(tokens)
    graph = parser.parse_program()
    diags.extend(parser.diags)
    if graph is not None:
        _resolve(graph, diags)
    if any(d.severity == "error" for d in diags):
        return ParseResult(graph if graph is not None else None, diags)
    return ParseResult(graph, diags)


def parse_file(path) -> ParseResult:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
