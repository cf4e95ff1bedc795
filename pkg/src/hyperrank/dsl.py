"""A small language for writing metric tensors in config files.

Example::

    dim = 2; coords = t, y
    g[t,t] = 1
    g[y,y] = exp(-2*t)
    split = t          # t is a unit-speed height; g[t,t] must be constant
    box[y] = -2, 2     # default box is [-3, 3] per coordinate

Statements are separated by ``;`` or newlines, ``#`` starts a comment.
Expressions use ``+ - * / ^`` (``^`` binds tightest and is
right-associative), parentheses and the functions in
:data:`hyperrank.dual.FUNCTIONS`.  Entries not given are zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dual import FUNCTIONS, Dual
from .tensor import SPD_TOL, MetricField, Split

GRID_PER_AXIS = 5


class DSLError(ValueError):
    """Error with a source location; ``line`` and ``col`` are 1-based."""

    def __init__(self, message, line=1, col=1, source=None):
        self.message = message
        self.line = line
        self.col = col
        self.snippet = _snippet(source, line, col) if source is not None else ""
        text = f"{message} at line {line}, column {col}"
        if self.snippet:
            text += "\n" + self.snippet
        super().__init__(text)


class DSLSyntaxError(DSLError):
    pass


class UnknownVariable(DSLError):
    pass


class UnknownFunction(DSLError):
    pass


class ValidationFailure(DSLError):
    def __init__(self, message, point=None, line=1, col=1, source=None):
        self.point = None if point is None else np.asarray(point, dtype=float)
        if point is not None:
            message = f"{message} (at point {self.point.tolist()})"
        super().__init__(message, line, col, source)


class DomainError(DSLError):
    pass


def _snippet(source, line, col):
    lines = source.splitlines() or [""]
    if not 1 <= line <= len(lines):
        return ""
    text = lines[line - 1]
    return f"    {text}\n    {' ' * (col - 1)}^"


# ---------------------------------------------------------------- syntax tree


@dataclass(frozen=True)
class Num:
    value: float
    pos: tuple = field(default=(1, 1), compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: tuple = field(default=(1, 1), compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: object
    pos: tuple = field(default=(1, 1), compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    pos: tuple = field(default=(1, 1), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: object
    pos: tuple = field(default=(1, 1), compare=False, repr=False)


def to_source(node) -> str:
    """Fully parenthesized source that parses back to an equal tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def variables(node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, Call):
        return variables(node.arg)
    return variables(node.left) | variables(node.right)


def _var_nodes(node):
    if isinstance(node, Var):
        yield node
    elif isinstance(node, (Neg, Call)):
        yield from _var_nodes(node.operand if isinstance(node, Neg) else node.arg)
    elif isinstance(node, BinOp):
        yield from _var_nodes(node.left)
        yield from _var_nodes(node.right)


# ---------------------------------------------------------------- evaluation


def eval_expr(node, env: dict, source=None):
    """Evaluate ``node`` with ``env`` mapping names to floats or duals.

    Operands are evaluated left to right.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {node.name!r}", *node.pos, source) from None
    if isinstance(node, Neg):
        return -eval_expr(node.operand, env, source)
    if isinstance(node, Call):
        x = eval_expr(node.arg, env, source)
        try:
            return FUNCTIONS[node.func](x)
        except KeyError:
            raise UnknownFunction(f"unknown function {node.func!r}", *node.pos, source) from None
        except (ValueError, OverflowError) as exc:
            raise DomainError(f"{node.func}: {exc}", *node.pos, source) from None
    left = eval_expr(node.left, env, source)
    right = eval_expr(node.right, env, source)
    op = node.op
    try:
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if (right.val if isinstance(right, Dual) else right) == 0:
                raise ZeroDivisionError("division by zero")
            return left / right
        if op == "^":
            return _power(left, right)
    except ZeroDivisionError as exc:
        raise DomainError(str(exc), *node.pos, source) from None
    except (ValueError, OverflowError) as exc:
        raise DomainError(f"'{op}': {exc}", *node.pos, source) from None
    raise DSLSyntaxError(f"unknown operator {op!r}", *node.pos, source)


def _power(base, expo):
    if isinstance(base, Dual) or isinstance(expo, Dual):
        if isinstance(expo, Dual):
            return FUNCTIONS["exp"](expo * FUNCTIONS["log"](base))
        return base ** expo
    if base < 0 and not float(expo).is_integer():
        raise ValueError("negative base with non-integer exponent")
    if base == 0 and expo < 0:
        raise ZeroDivisionError("zero to a negative power")
    return math.pow(base, expo)


def eval_entry(expr, p, coords, source=None):
    """Evaluate one metric entry at point ``p`` (floats or duals)."""
    if len(p) != len(coords):
        raise ValueError(f"point has {len(p)} coordinates, expected {len(coords)}")
    return eval_expr(expr, dict(zip(coords, p)), source)


# ---------------------------------------------------------------- tokenizer

_PUNCT = set("+-*/^()=[],;")


@dataclass(frozen=True)
class Token:
    kind: str  # NUM, NAME, OP, SEP, EOF
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, col, i, n = 1, 1, 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            tokens.append(Token("SEP", "\n", line, col))
            i += 1
            line, col = line + 1, 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start = i
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            while i < n and (source[i].isdigit() or source[i] == "."):
                i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            text = source[start:i]
            try:
                float(text)
            except ValueError:
                raise DSLSyntaxError(f"malformed number {text!r}", line, col, source) from None
            tokens.append(Token("NUM", text, line, col))
        elif ch.isalpha() or ch == "_":
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            tokens.append(Token("NAME", source[start:i], line, col))
        elif ch in _PUNCT:
            i += 1
            tokens.append(Token("SEP" if ch == ";" else "OP", ch, line, col))
        else:
            raise DSLSyntaxError(f"unexpected character {ch!r}", line, col, source)
        col += i - start
    tokens.append(Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None, cls=DSLSyntaxError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, self.source)

    def expect(self, kind, text=None):
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text if tok.kind != "EOF" else "end of input"
            raise self.error(f"expected {want!r}, got {got!r}")
        return self.advance()

    def at(self, kind, text=None):
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    # expr := term (('+'|'-') term)*
    def expr(self):
        node = self.term()
        while self.at("OP", "+") or self.at("OP", "-"):
            op = self.advance()
            node = BinOp(op.text, node, self.term(), (op.line, op.col))
        return node

    def term(self):
        node = self.unary()
        while self.at("OP", "*") or self.at("OP", "/"):
            op = self.advance()
            node = BinOp(op.text, node, self.unary(), (op.line, op.col))
        return node

    def unary(self):
        if self.at("OP", "-"):
            op = self.advance()
            return Neg(self.unary(), (op.line, op.col))
        if self.at("OP", "+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("OP", "^"):
            op = self.advance()
            return BinOp("^", base, self.unary(), (op.line, op.col))
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "NUM":
            self.advance()
            return Num(float(tok.text), (tok.line, tok.col))
        if tok.kind == "NAME":
            self.advance()
            if self.at("OP", "("):
                if tok.text not in FUNCTIONS:
                    raise self.error(f"unknown function {tok.text!r}", tok, UnknownFunction)
                arg = self.parenthesized()
                return Call(tok.text, arg, (tok.line, tok.col))
            return Var(tok.text, (tok.line, tok.col))
        if self.at("OP", "("):
            return self.parenthesized()
        got = tok.text if tok.kind != "EOF" else "end of input"
        raise self.error(f"expected an expression, got {got!r}")

    def parenthesized(self):
        lp = self.expect("OP", "(")
        if self.at("EOF") or self.at("SEP"):
            raise self.error("unclosed parenthesis", lp)
        node = self.expr()
        if not self.at("OP", ")"):
            if self.at("EOF") or self.at("SEP"):
                raise self.error("unclosed parenthesis", lp)
            raise self.error(f"expected ')', got {self.tok.text!r}")
        self.advance()
        return node

    def statements(self):
        out = []
        while not self.at("EOF"):
            if self.at("SEP"):
                self.advance()
                continue
            out.append(self.statement())
            if not (self.at("SEP") or self.at("EOF")):
                raise self.error(f"expected ';' or newline, got {self.tok.text!r}")
        return out

    def statement(self):
        head = self.expect("NAME")
        key = head.text
        if key == "dim":
            self.expect("OP", "=")
            num = self.expect("NUM")
            if not num.text.isdigit() or int(num.text) < 1:
                raise self.error("dim must be a positive integer", num)
            return ("dim", head, int(num.text))
        if key == "coords":
            self.expect("OP", "=")
            names = [self.expect("NAME")]
            while self.at("OP", ","):
                self.advance()
                names.append(self.expect("NAME"))
            return ("coords", head, names)
        if key == "g":
            self.expect("OP", "[")
            a = self.expect("NAME")
            self.expect("OP", ",")
            b = self.expect("NAME")
            self.expect("OP", "]")
            self.expect("OP", "=")
            return ("entry", head, (a, b, self.expr()))
        if key == "box":
            self.expect("OP", "[")
            a = self.expect("NAME")
            self.expect("OP", "]")
            self.expect("OP", "=")
            lo = self.expr()
            self.expect("OP", ",")
            hi = self.expr()
            return ("box", head, (a, lo, hi))
        if key == "split":
            self.expect("OP", "=")
            return ("split", head, self.expect("NAME"))
        raise self.error(f"unknown statement {key!r}", head)


# ---------------------------------------------------------------- metric specs


@dataclass(frozen=True, eq=False)
class MetricSpec:
    dim: int
    coords: tuple
    entries: dict  # (i, j) with i <= j -> expression tree
    box: np.ndarray
    split: Split | None = None
    source: str | None = None

    def __eq__(self, other):
        if not isinstance(other, MetricSpec):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.coords == other.coords
            and self.entries == other.entries
            and np.array_equal(self.box, other.box)
            and self.split == other.split
        )

    __hash__ = None

    def to_source(self) -> str:
        lines = [f"dim = {self.dim}", "coords = " + ", ".join(self.coords)]
        for (i, j), e in sorted(self.entries.items()):
            lines.append(f"g[{self.coords[i]},{self.coords[j]}] = {to_source(e)}")
        for name, (lo, hi) in zip(self.coords, self.box):
            lines.append(f"box[{name}] = {float(lo)!r}, {float(hi)!r}")
        if self.split is not None:
            lines.append(f"split = {self.coords[self.split.t_index]}")
        return "\n".join(lines) + "\n"

    def components(self, xs):
        env = dict(zip(self.coords, xs))
        n = self.dim
        rows = [[0.0] * n for _ in range(n)]
        for (i, j), e in self.entries.items():
            rows[i][j] = eval_expr(e, env, self.source)
        return rows

    def to_metric_field(self, name="dsl") -> MetricField:
        return MetricField(self.dim, self.components, box=self.box, split=self.split, name=name)


def parse_metric(source: str, validate: bool = True) -> MetricSpec:
    """Parse and (by default) validate a metric definition."""
    parser = _Parser(source)
    stmts = parser.statements()
    end = parser.tokens[-1]

    def err(cls, message, tok=None, **kw):
        tok = tok or end
        return cls(message, line=tok.line, col=tok.col, source=source, **kw)

    seen = {}
    for kind, head, _ in stmts:
        if kind in ("dim", "coords", "split") and kind in seen:
            raise err(DSLSyntaxError, f"duplicate {kind!r} statement", head)
        seen[kind] = head
    if "dim" not in seen:
        raise err(DSLSyntaxError, "missing 'dim' statement")
    if "coords" not in seen:
        raise err(DSLSyntaxError, "missing 'coords' statement")
    dim = next(v for k, _, v in stmts if k == "dim")
    names = next(v for k, _, v in stmts if k == "coords")
    coords = tuple(t.text for t in names)
    if len(coords) != dim:
        raise err(DSLSyntaxError, f"dim is {dim} but {len(coords)} coordinates are declared", seen["coords"])
    for tok in names:
        if tok.text in FUNCTIONS or coords.count(tok.text) > 1:
            raise err(DSLSyntaxError, f"invalid or repeated coordinate name {tok.text!r}", tok)
    index = {c: i for i, c in enumerate(coords)}

    def coord(tok):
        if tok.text not in index:
            raise err(UnknownVariable, f"unknown coordinate {tok.text!r}", tok)
        return index[tok.text]

    def check_vars(expr, allowed):
        for v in _var_nodes(expr):
            if v.name not in allowed:
                raise UnknownVariable(f"unknown variable {v.name!r}", *v.pos, source)

    entries = {}
    box = np.array([[-3.0, 3.0]] * dim)
    for kind, head, value in stmts:
        if kind == "entry":
            a, b, expr = value
            i, j = sorted((coord(a), coord(b)))
            if (i, j) in entries:
                raise err(DSLSyntaxError, f"duplicate entry g[{a.text},{b.text}]", head)
            check_vars(expr, index)
            entries[(i, j)] = expr
        elif kind == "box":
            a, lo, hi = value
            k = coord(a)
            check_vars(lo, ())
            check_vars(hi, ())
            lo_v, hi_v = eval_expr(lo, {}, source), eval_expr(hi, {}, source)
            if not (math.isfinite(lo_v) and math.isfinite(hi_v) and lo_v < hi_v):
                raise err(DSLSyntaxError, f"empty or infinite box for {a.text!r}", head)
            box[k] = (lo_v, hi_v)

    split = None
    if "split" in seen:
        tok = next(v for k, _, v in stmts if k == "split")
        t = coord(tok)
        tt = entries.get((t, t))
        if tt is None or variables(tt):
            raise err(ValidationFailure, "split height needs a constant g[t,t] entry", tok)
        r = float(eval_expr(tt, {}, source))
        if not r > 0:
            raise err(ValidationFailure, "split height needs g[t,t] > 0", tok)
        for (i, j), e in entries.items():
            if i != j and t in (i, j) and (variables(e) or eval_expr(e, {}, source) != 0):
                raise err(ValidationFailure, "split height must not mix with other coordinates", tok)
        split = Split(t, r)

    spec = MetricSpec(dim, coords, entries, box, split, source)
    if validate:
        validate_spec(spec)
    return spec


def validate_spec(spec: MetricSpec, per_axis: int = GRID_PER_AXIS) -> None:
    """Check finiteness and positive definiteness on a regular grid (not a proof)."""
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in spec.box]
    for point in itertools.product(*axes):
        try:
            rows = spec.components(list(point))
        except DomainError as exc:
            raise ValidationFailure(exc.message, point, exc.line, exc.col, spec.source) from None
        g = np.array(rows, dtype=float)
        g = np.triu(g) + np.triu(g, 1).T
        if not np.all(np.isfinite(g)):
            raise ValidationFailure("metric is not finite", point, source=spec.source)
        if np.linalg.eigvalsh(g)[0] <= SPD_TOL:
            raise ValidationFailure("metric is not positive definite", point, source=spec.source)
