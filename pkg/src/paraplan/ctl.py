"""Branching-time logic over labeled search trees.

Formula ASTs, a recursive-descent parser for the ASCII surface syntax, a
bottom-up model checker with finite-path semantics, and quantitative
aggregation of per-node violations.

Atoms compare linear expressions over the state variables
``t_est t_p t_d t_a v_c v_o v_tt v_rt v_ft v_fr theta_s theta_d`` and rational
constants; the enumerated variable ``r_cs`` may only be compared for equality
against a status literal (``waiting``, ``assigned``, ``in-transit``,
``dropped-off``).

Nodes can mark a variable *not applicable* (e.g. the queried request never
boards the queried vehicle on that branch). An atom touching such a variable
has no truth value at that node; the checker resolves the gap with the
vacuity convention: such atoms count as satisfied under universal/safety
operators (AX, AG, EG) and as unsatisfied under existential/liveness
operators (EX, AF, EF), applied symmetrically so the classical dualities
hold. Reported per-node satisfaction maps resolve any residual gap as true.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import FormulaSyntaxError, InvalidInputError, UnsupportedFormulaError

VARIABLES = (
    "t_est", "t_p", "t_d", "t_a",
    "v_c", "v_o", "v_tt", "v_rt", "v_ft", "v_fr",
    "theta_s", "theta_d",
)
STATUS_VARIABLE = "r_cs"
STATUS_LITERALS = ("waiting", "assigned", "in-transit", "dropped-off")
TEMPORAL_OPS = ("AX", "EX", "AF", "EF", "AG", "EG")
SAFETY_OPS = frozenset({"AX", "AG", "EG"})
COMPARATORS = ("<=", ">=", "!=", "<", ">", "=")

NA = "na"  # third truth value of the local evaluation


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Expr:
    """Linear expression: sum of (coefficient, variable) terms plus a constant.

    A status literal is represented as an Expr with ``status`` set and no terms.
    """

    terms: tuple[tuple[Fraction, str], ...] = ()
    const: Fraction = Fraction(0)
    status: str | None = None

    def symbols(self) -> set[str]:
        return {sym for _, sym in self.terms}


@dataclass(frozen=True)
class Atom:
    lhs: Expr
    op: str
    rhs: Expr

    def symbols(self) -> set[str]:
        return self.lhs.symbols() | self.rhs.symbols()


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class AtomF:
    atom: Atom


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Temporal:
    op: str  # one of TEMPORAL_OPS
    child: "Formula"


Formula = TrueF | FalseF | AtomF | Not | And | Or | Temporal


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_OPS = ("&&", "||", "<=", ">=", "!=", "<", ">", "=", "!", "(", ")", "+", "-", "*")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        matched = False
        for op in _TOKEN_OPS:
            if text.startswith(op, i):
                tokens.append(("op", op, i))
                i += len(op)
                matched = True
                break
        if matched:
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(("number", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            literal = None
            for lit in STATUS_LITERALS:
                if text.startswith(lit, i):
                    after = i + len(lit)
                    if after >= n or not (text[after].isalnum() or text[after] in "_-"):
                        literal = lit
                        break
            if literal is not None:
                tokens.append(("status", literal, i))
                i += len(literal)
                continue
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("word", text[i:j], i))
            i = j
            continue
        raise FormulaSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            raise FormulaSyntaxError(f"expected {want!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return self.next()

    def fail(self, message: str) -> FormulaSyntaxError:
        return FormulaSyntaxError(message, self.peek()[2])

    # formula := or_expr
    def parse(self) -> Formula:
        formula = self.or_expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise FormulaSyntaxError(f"unexpected trailing input {tok[1]!r}", tok[2])
        return formula

    def or_expr(self) -> Formula:
        left = self.and_expr()
        while self.peek()[:2] == ("op", "||"):
            self.next()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> Formula:
        left = self.unary()
        while self.peek()[:2] == ("op", "&&"):
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok[:2] == ("op", "!"):
            self.next()
            return Not(self.unary())
        if tok[0] == "word" and tok[1] in TEMPORAL_OPS:
            self.next()
            self.expect("op", "(")
            child = self.or_expr()
            self.expect("op", ")")
            return Temporal(tok[1], child)
        if tok[0] == "word" and tok[1] in ("A", "E", "AU", "EU"):
            raise FormulaSyntaxError(
                f"{tok[1]!r} is not a formula: state quantifiers must pair with X, F or G", tok[2]
            )
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok[0] == "word" and tok[1] == "true":
            self.next()
            return TrueF()
        if tok[0] == "word" and tok[1] == "false":
            self.next()
            return FalseF()
        if tok[:2] == ("op", "("):
            # could be a parenthesized formula or a parenthesized arithmetic
            # expression opening an atom; try the formula reading first
            save = self.pos
            self.next()
            try:
                inner = self.or_expr()
                self.expect("op", ")")
            except FormulaSyntaxError:
                self.pos = save
                return self.atom()
            if self.peek()[0] == "op" and self.peek()[1] in COMPARATORS:
                self.pos = save
                return self.atom()
            return inner
        return self.atom()

    def atom(self) -> Formula:
        lhs = self.expr()
        tok = self.peek()
        if tok[0] != "op" or tok[1] not in COMPARATORS:
            raise FormulaSyntaxError(
                f"an atom requires a comparator, found {tok[1] or 'end of input'!r}", tok[2]
            )
        op = self.next()[1]
        rhs = self.expr()
        atom = Atom(lhs, op, rhs)
        _validate_atom(atom, tok[2])
        return AtomF(atom)

    # expr := ['-'] term (('+'|'-') term)*
    def expr(self) -> Expr:
        negate = False
        if self.peek()[:2] == ("op", "-"):
            self.next()
            negate = True
        left = self.term()
        if left.status is not None:
            if negate:
                raise self.fail("status literals cannot be negated")
            if self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
                raise self.fail("status literals cannot appear in arithmetic")
            return left
        if negate:
            left = _expr_scale(left, Fraction(-1))
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            sign = Fraction(1) if self.next()[1] == "+" else Fraction(-1)
            right = self.term()
            if right.status is not None:
                raise self.fail("status literals cannot appear in arithmetic")
            left = _expr_add(left, _expr_scale(right, sign))
        return left

    # term := number ['*' symbol] | symbol ['*' number] | status | '(' expr ')'
    def term(self) -> Expr:
        tok = self.peek()
        if tok[0] == "status":
            self.next()
            return Expr(status=tok[1])
        if tok[:2] == ("op", "("):
            self.next()
            inner = self.expr()
            self.expect("op", ")")
            if inner.status is not None:
                raise self.fail("status literals cannot be parenthesized in arithmetic")
            return inner
        if tok[0] == "number":
            self.next()
            value = Fraction(tok[1])
            if self.peek()[:2] == ("op", "*"):
                self.next()
                word = self.expect("word")
                return Expr(((value, self._symbol(word)),))
            return Expr((), value)
        if tok[0] == "word":
            self.next()
            sym = self._symbol(tok)
            if self.peek()[:2] == ("op", "*"):
                self.next()
                number = self.expect("number")
                return Expr(((Fraction(number[1]), sym),))
            return Expr(((Fraction(1), sym),))
        raise FormulaSyntaxError(
            f"expected a variable or number, found {tok[1] or 'end of input'!r}", tok[2]
        )

    def _symbol(self, tok: tuple[str, str, int]) -> str:
        name = tok[1]
        if name in VARIABLES or name == STATUS_VARIABLE:
            return name
        raise FormulaSyntaxError(f"unknown variable {name!r}", tok[2])


def _expr_scale(expr: Expr, factor: Fraction) -> Expr:
    return Expr(tuple((c * factor, s) for c, s in expr.terms), expr.const * factor)


def _expr_add(left: Expr, right: Expr) -> Expr:
    return Expr(left.terms + right.terms, left.const + right.const)


def _validate_atom(atom: Atom, offset: int) -> None:
    lhs_status = atom.lhs.status is not None
    rhs_status = atom.rhs.status is not None
    uses_rcs = STATUS_VARIABLE in atom.symbols()
    if not (lhs_status or rhs_status or uses_rcs):
        return
    sides = (atom.lhs, atom.rhs)
    is_rcs = [e.terms == ((Fraction(1), STATUS_VARIABLE),) and e.const == 0 for e in sides]
    is_lit = [e.status is not None for e in sides]
    ok = (is_rcs[0] and is_lit[1]) or (is_lit[0] and is_rcs[1])
    if not ok or atom.op not in ("=", "!="):
        raise FormulaSyntaxError(
            "r_cs may only be compared with = or != against a status literal", offset
        )


def parse_formula(text: str) -> Formula:
    """Parse formula text; raises FormulaSyntaxError with a byte offset."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Canonical printer

_PREC = {"Or": 1, "And": 2, "Not": 3}


def _print_expr(expr: Expr) -> str:
    if expr.status is not None:
        return expr.status
    parts: list[str] = []
    for coeff, sym in expr.terms:
        mag = abs(coeff)
        body = sym if mag == 1 else f"{_print_number(mag)} * {sym}"
        if not parts:
            parts.append(body if coeff >= 0 else f"-{body}")
        else:
            parts.append(f"{'+' if coeff >= 0 else '-'} {body}")
    if expr.const != 0 or not expr.terms:
        mag = _print_number(abs(expr.const))
        if not parts:
            parts.append(mag if expr.const >= 0 else f"-{mag}")
        else:
            parts.append(f"{'+' if expr.const >= 0 else '-'} {mag}")
    out = parts[0]
    for part in parts[1:]:
        out += f" {part}"
    return out


def _print_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    scaled = value
    digits = 0
    while scaled.denominator != 1 and digits < 12:
        scaled *= 10
        digits += 1
    if scaled.denominator == 1:
        text = f"{value.numerator / value.denominator:.{digits}f}"
        return text
    return f"{float(value)!r}"


def print_formula(formula: Formula, _parent_prec: int = 0, _right: bool = False) -> str:
    """Canonical text form; ``parse(print_formula(f))`` reproduces ``f``."""
    if isinstance(formula, TrueF):
        return "true"
    if isinstance(formula, FalseF):
        return "false"
    if isinstance(formula, AtomF):
        a = formula.atom
        text = f"{_print_expr(a.lhs)} {a.op} {_print_expr(a.rhs)}"
        return f"({text})" if _parent_prec >= _PREC["Not"] else text
    if isinstance(formula, Not):
        return f"!{print_formula(formula.child, _PREC['Not'])}"
    if isinstance(formula, Temporal):
        return f"{formula.op} ({print_formula(formula.child)})"
    prec = _PREC[type(formula).__name__]
    op = "&&" if isinstance(formula, And) else "||"
    left = print_formula(formula.left, prec - 1)
    right = print_formula(formula.right, prec)
    text = f"{left} {op} {right}"
    needs_parens = _parent_prec > prec - 1
    return f"({text})" if needs_parens else text


# ---------------------------------------------------------------------------
# Labeled trees

@dataclass
class LabeledNode:
    id: int
    parent: int | None
    children: list[int] = field(default_factory=list)
    labels: dict[str, object] = field(default_factory=dict)
    not_applicable: frozenset[str] = frozenset()
    visits: int = 0
    total_value: float = 0.0
    entering_action: dict | None = None


@dataclass
class LabeledTree:
    nodes: dict[int, LabeledNode]
    root: int
    iterations_run: int = 0
    # export-time map back to the source search-tree node ids; not serialized
    source_ids: dict[int, int] | None = None

    def postorder(self) -> list[int]:
        order: list[int] = []
        stack: list[tuple[int, bool]] = [(self.root, False)]
        while stack:
            node_id, expanded = stack.pop()
            if expanded:
                order.append(node_id)
                continue
            stack.append((node_id, True))
            for child in reversed(self.nodes[node_id].children):
                stack.append((child, False))
        return order

    def to_json(self) -> dict:
        nodes = []
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            nodes.append(
                {
                    "id": node.id,
                    "parent": node.parent,
                    "entering_action": node.entering_action,
                    "visits": node.visits,
                    "total_value": node.total_value,
                    "labels": {k: v for k, v in sorted(node.labels.items())},
                    "not_applicable": sorted(node.not_applicable),
                }
            )
        return {"nodes": nodes, "root": self.root, "iterations_run": self.iterations_run}

    @staticmethod
    def from_json(doc: dict) -> "LabeledTree":
        nodes: dict[int, LabeledNode] = {}
        for entry in doc["nodes"]:
            nodes[entry["id"]] = LabeledNode(
                id=entry["id"],
                parent=entry.get("parent"),
                labels=dict(entry.get("labels", {})),
                not_applicable=frozenset(entry.get("not_applicable", ())),
                visits=entry.get("visits", 0),
                total_value=entry.get("total_value", 0.0),
                entering_action=entry.get("entering_action"),
            )
        for node in nodes.values():
            if node.parent is not None:
                nodes[node.parent].children.append(node.id)
        for node in nodes.values():
            node.children.sort()
        return LabeledTree(nodes=nodes, root=doc["root"], iterations_run=doc.get("iterations_run", 0))


# ---------------------------------------------------------------------------
# Atom evaluation

def eval_atom(labels: dict[str, object], not_applicable: frozenset[str], atom: Atom):
    """Evaluate one atom at one node.

    Returns ``(verdict, degree)`` where verdict is True, False or ``NA`` and
    degree is the violated margin (positive when the verdict is False). Strict
    and disequality comparisons that fail with zero margin report degree 1,
    the smallest unit.
    """
    if atom.lhs.status is not None or atom.rhs.status is not None:
        lit_side = atom.rhs if atom.rhs.status is not None else atom.lhs
        if STATUS_VARIABLE in not_applicable or STATUS_VARIABLE not in labels:
            return NA, 0.0
        equal = labels[STATUS_VARIABLE] == lit_side.status
        verdict = equal if atom.op == "=" else not equal
        return verdict, 0.0 if verdict else 1.0

    values = {}
    for sym in atom.symbols():
        if sym in not_applicable or sym not in labels:
            return NA, 0.0
        value = labels[sym]
        if not isinstance(value, (int, float, Fraction)):
            raise InvalidInputError(f"label {sym!r} is not numeric: {value!r}")
        values[sym] = Fraction(value)

    def evaluate(expr: Expr) -> Fraction:
        total = expr.const
        for coeff, sym in expr.terms:
            total += coeff * values[sym]
        return total

    lhs = evaluate(atom.lhs)
    rhs = evaluate(atom.rhs)
    diff = lhs - rhs
    op = atom.op
    if op == "<=":
        verdict = diff <= 0
        margin = diff
    elif op == "<":
        verdict = diff < 0
        margin = diff
    elif op == ">=":
        verdict = diff >= 0
        margin = -diff
    elif op == ">":
        verdict = diff > 0
        margin = -diff
    elif op == "=":
        verdict = diff == 0
        margin = abs(diff)
    else:  # !=
        verdict = diff != 0
        margin = Fraction(1)
    if verdict:
        return True, 0.0
    degree = float(margin) if margin > 0 else 1.0
    return False, degree


def resolve_na(value, op: str) -> bool:
    """Vacuity convention: gaps satisfy safety operators, fail liveness ones."""
    if value is not NA:
        return value
    return op in SAFETY_OPS


# ---------------------------------------------------------------------------
# Checker

@dataclass
class CheckResult:
    """Per-node satisfaction of the root formula and every subformula.

    Keys of ``satisfaction`` are canonical formula texts; residual
    not-applicable gaps in the reported maps resolve as true.
    """

    satisfaction: dict[str, dict[int, bool]]
    root_formula: str
    root_verdict: bool


def check(tree: LabeledTree, formula: Formula) -> CheckResult:
    """Label every tree node with the formulas it satisfies (finite-path semantics).

    At leaves: ``AX`` holds vacuously, ``EX`` fails, and both ``F`` and ``G``
    operators collapse to the local value of their argument. Internal nodes
    follow the usual fixpoint recurrences restricted to the finite tree.
    """
    order = tree.postorder()
    maps: dict[Formula, dict[int, object]] = {}

    def local(sub: Formula) -> dict[int, object]:
        if sub in maps:
            return maps[sub]
        if isinstance(sub, TrueF):
            values = {nid: True for nid in tree.nodes}
        elif isinstance(sub, FalseF):
            values = {nid: False for nid in tree.nodes}
        elif isinstance(sub, AtomF):
            values = {}
            for nid, node in tree.nodes.items():
                verdict, _ = eval_atom(node.labels, node.not_applicable, sub.atom)
                values[nid] = verdict
        elif isinstance(sub, Not):
            inner = local(sub.child)
            values = {nid: (NA if v is NA else not v) for nid, v in inner.items()}
        elif isinstance(sub, And):
            lmap, rmap = local(sub.left), local(sub.right)
            values = {}
            for nid in tree.nodes:
                l, r = lmap[nid], rmap[nid]
                if l is False or r is False:
                    values[nid] = False
                elif l is NA or r is NA:
                    values[nid] = NA
                else:
                    values[nid] = True
        elif isinstance(sub, Or):
            lmap, rmap = local(sub.left), local(sub.right)
            values = {}
            for nid in tree.nodes:
                l, r = lmap[nid], rmap[nid]
                if l is True or r is True:
                    values[nid] = True
                elif l is NA or r is NA:
                    values[nid] = NA
                else:
                    values[nid] = False
        else:
            assert isinstance(sub, Temporal)
            arg = local(sub.child)
            op = sub.op
            resolved = {nid: resolve_na(arg[nid], op) for nid in tree.nodes}
            values = {}
            for nid in order:  # children before parents
                children = tree.nodes[nid].children
                here = resolved[nid]
                if op == "AX":
                    values[nid] = all(resolved[c] for c in children)
                elif op == "EX":
                    values[nid] = any(resolved[c] for c in children)
                elif op == "AG":
                    values[nid] = here and all(values[c] for c in children)
                elif op == "EG":
                    values[nid] = here and (not children or any(values[c] for c in children))
                elif op == "AF":
                    values[nid] = here or (bool(children) and all(values[c] for c in children))
                else:  # EF
                    values[nid] = here or any(values[c] for c in children)
        maps[sub] = values
        return values

    local(formula)

    satisfaction: dict[str, dict[int, bool]] = {}
    for sub, values in maps.items():
        text = print_formula(sub)
        satisfaction[text] = {nid: (True if v is NA else bool(v)) for nid, v in values.items()}
    root_text = print_formula(formula)
    return CheckResult(
        satisfaction=satisfaction,
        root_formula=root_text,
        root_verdict=satisfaction[root_text][tree.root],
    )


# ---------------------------------------------------------------------------
# Quantitative aggregation

@dataclass(frozen=True)
class ViolationRecord:
    node_id: int
    atom: str
    degree: float


@dataclass(frozen=True)
class QuantitativeSummary:
    applicable_nodes: int
    violating_nodes: int
    violation_pct: float
    avg_degree: float | None
    min_degree: float | None
    max_degree: float | None
    scenario_count: int


def quantify_violations(
    tree: LabeledTree, formula: Formula
) -> tuple[QuantitativeSummary, list[ViolationRecord]]:
    """Per-node violation statistics for a single-operator-over-atom formula.

    Every node where the atom applies is counted; the percentage is taken over
    applicable nodes and the degree statistics over violating ones.
    """
    if not (isinstance(formula, Temporal) and isinstance(formula.child, AtomF)):
        raise UnsupportedFormulaError(
            "quantification is defined for a single temporal operator over one atom"
        )
    atom = formula.child.atom
    atom_text = f"{_print_expr(atom.lhs)} {atom.op} {_print_expr(atom.rhs)}"

    applicable = 0
    records: list[ViolationRecord] = []
    for node_id in sorted(tree.nodes):
        node = tree.nodes[node_id]
        verdict, degree = eval_atom(node.labels, node.not_applicable, atom)
        if verdict is NA:
            continue
        applicable += 1
        if verdict is False:
            records.append(ViolationRecord(node_id, atom_text, degree))

    degrees = [r.degree for r in records]
    summary = QuantitativeSummary(
        applicable_nodes=applicable,
        violating_nodes=len(records),
        violation_pct=(100.0 * len(records) / applicable) if applicable else 0.0,
        avg_degree=sum(degrees) / len(degrees) if degrees else None,
        min_degree=min(degrees) if degrees else None,
        max_degree=max(degrees) if degrees else None,
        scenario_count=tree.iterations_run,
    )
    return summary, records
