"""Dotted-path condition language for rich state queries.

    expr  := or
    or    := and ("OR" and)*
    and   := unary ("AND" unary)*
    unary := "NOT"? ( "(" expr ")" | cond )
    cond  := path op literal
    path  := ident ("." ident)*
    op    := "=" | "!=" | "<" | "<=" | ">" | ">=" | "CONTAINS"

Keywords are case-insensitive; AND binds tighter than OR. Literals are
double-quoted strings (with backslash escapes), numbers, true/false/null.
Syntax errors carry the byte offset into the UTF-8 query text.

Evaluation is total and two-valued: a missing path or a non-scalar
terminal simply makes the condition false (so ``NOT x>5`` is true when x
is absent). Equality is type-sensitive, ordering works within numbers or
within strings only, and CONTAINS means substring on strings or scalar
membership on arrays.
"""

from dataclasses import dataclass

from .errors import QuerySyntaxError

__all__ = [
    "Cond", "And", "Or", "Not", "parse_query", "eval_expr", "expr_to_text",
]

ORDER_OPS = ("<", "<=", ">", ">=")
ALL_OPS = ("=", "!=", "<", "<=", ">", ">=", "CONTAINS")


@dataclass(frozen=True)
class Cond:
    path: tuple
    op: str
    literal: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    expr: object


# -- lexer -------------------------------------------------------------------

_KEYWORDS = {"AND", "OR", "NOT", "CONTAINS", "TRUE", "FALSE", "NULL"}

_ESCAPES = {ord('"'): '"', ord("\\"): "\\", ord("/"): "/",
            ord("n"): "\n", ord("t"): "\t", ord("r"): "\r"}


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT KEYWORD NUMBER STRING OP LPAREN RPAREN DOT EOF
    value: object
    offset: int


def _is_ident_start(b):
    return 65 <= b <= 90 or 97 <= b <= 122 or b == 95


def _is_ident_char(b):
    return _is_ident_start(b) or 48 <= b <= 57


def _is_digit(b):
    return 48 <= b <= 57


def _tokenize(text):
    data = text.encode("utf-8")
    n = len(data)
    i = 0
    tokens = []
    while i < n:
        b = data[i]
        if b in (0x20, 0x09, 0x0A, 0x0D):
            i += 1
            continue
        start = i
        if _is_ident_start(b):
            while i < n and _is_ident_char(data[i]):
                i += 1
            word = data[start:i].decode("ascii")
            upper = word.upper()
            if upper in _KEYWORDS:
                tokens.append(_Token("KEYWORD", upper, start))
            else:
                tokens.append(_Token("IDENT", word, start))
        elif _is_digit(b) or (b == 0x2D and i + 1 < n and _is_digit(data[i + 1])):
            i += 1
            while i < n and _is_digit(data[i]):
                i += 1
            is_float = False
            if i < n and data[i] == 0x2E:  # '.'
                if i + 1 >= n or not _is_digit(data[i + 1]):
                    raise QuerySyntaxError(i + 1, "digit after decimal point")
                is_float = True
                i += 1
                while i < n and _is_digit(data[i]):
                    i += 1
            if i < n and data[i] in (0x65, 0x45):  # e / E
                j = i + 1
                if j < n and data[j] in (0x2B, 0x2D):
                    j += 1
                if j >= n or not _is_digit(data[j]):
                    raise QuerySyntaxError(i + 1, "exponent digits")
                is_float = True
                i = j
                while i < n and _is_digit(data[i]):
                    i += 1
            raw = data[start:i].decode("ascii")
            tokens.append(_Token("NUMBER", float(raw) if is_float else int(raw),
                                 start))
        elif b == 0x22:  # '"'
            i += 1
            out = []
            while True:
                if i >= n:
                    raise QuerySyntaxError(n, "closing '\"'")
                c = data[i]
                if c == 0x22:
                    i += 1
                    break
                if c == 0x5C:  # backslash
                    if i + 1 >= n or data[i + 1] not in _ESCAPES:
                        raise QuerySyntaxError(i, "valid escape sequence")
                    out.append(_ESCAPES[data[i + 1]].encode())
                    i += 2
                else:
                    out.append(bytes([c]))
                    i += 1
            tokens.append(_Token("STRING", b"".join(out).decode("utf-8"),
                                 start))
        elif b == 0x28:
            tokens.append(_Token("LPAREN", "(", start))
            i += 1
        elif b == 0x29:
            tokens.append(_Token("RPAREN", ")", start))
            i += 1
        elif b == 0x2E:
            tokens.append(_Token("DOT", ".", start))
            i += 1
        elif b == 0x3D:  # '='
            tokens.append(_Token("OP", "=", start))
            i += 1
        elif b == 0x21:  # '!'
            if i + 1 >= n or data[i + 1] != 0x3D:
                raise QuerySyntaxError(i + 1, "'=' after '!'")
            tokens.append(_Token("OP", "!=", start))
            i += 2
        elif b == 0x3C:  # '<'
            if i + 1 < n and data[i + 1] == 0x3D:
                tokens.append(_Token("OP", "<=", start))
                i += 2
            else:
                tokens.append(_Token("OP", "<", start))
                i += 1
        elif b == 0x3E:  # '>'
            if i + 1 < n and data[i + 1] == 0x3D:
                tokens.append(_Token("OP", ">=", start))
                i += 2
            else:
                tokens.append(_Token("OP", ">", start))
                i += 1
        else:
            raise QuerySyntaxError(start, "valid query character")
    tokens.append(_Token("EOF", None, n))
    return tokens


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        raise QuerySyntaxError(self.cur.offset, expected)

    def parse(self):
        expr = self.or_expr()
        if self.cur.kind != "EOF":
            self.fail("end of query")
        return expr

    def or_expr(self):
        left = self.and_expr()
        while self.cur.kind == "KEYWORD" and self.cur.value == "OR":
            self.advance()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self):
        left = self.unary()
        while self.cur.kind == "KEYWORD" and self.cur.value == "AND":
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self):
        if self.cur.kind == "KEYWORD" and self.cur.value == "NOT":
            self.advance()
            return Not(self.primary())
        return self.primary()

    def primary(self):
        if self.cur.kind == "LPAREN":
            self.advance()
            inner = self.or_expr()
            if self.cur.kind != "RPAREN":
                self.fail("')'")
            self.advance()
            return inner
        return self.cond()

    def cond(self):
        if self.cur.kind != "IDENT":
            self.fail("field path or '('")
        path = [self.advance().value]
        while self.cur.kind == "DOT":
            self.advance()
            if self.cur.kind != "IDENT":
                self.fail("field name after '.'")
            path.append(self.advance().value)
        op = self.op_token()
        literal = self.literal(op)
        return Cond(tuple(path), op, literal)

    def op_token(self):
        if self.cur.kind == "OP":
            return self.advance().value
        if self.cur.kind == "KEYWORD" and self.cur.value == "CONTAINS":
            self.advance()
            return "CONTAINS"
        self.fail("comparison operator")

    def literal(self, op):
        tok = self.cur
        if tok.kind == "NUMBER":
            self.advance()
            return tok.value
        if tok.kind == "STRING":
            self.advance()
            return tok.value
        if tok.kind == "KEYWORD" and tok.value in ("TRUE", "FALSE", "NULL"):
            if op in ORDER_OPS:
                self.fail("number or string literal")
            self.advance()
            return {"TRUE": True, "FALSE": False, "NULL": None}[tok.value]
        if op in ORDER_OPS:
            self.fail("number or string literal")
        self.fail("literal value")


def parse_query(text):
    """Parse query text into an expression tree, or raise QuerySyntaxError."""
    return _Parser(_tokenize(text)).parse()


# -- evaluation --------------------------------------------------------------

def _scalar_class(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    return None  # object or array


def _eq(a, b):
    ca, cb = _scalar_class(a), _scalar_class(b)
    if ca is None or cb is None or ca != cb:
        return False
    return a == b


def _cond(cond, value):
    node = value
    for seg in cond.path:
        if isinstance(node, dict) and seg in node:
            node = node[seg]
        else:
            return False
    op, lit = cond.op, cond.literal
    if op == "CONTAINS":
        if isinstance(node, str):
            return isinstance(lit, str) and lit in node
        if isinstance(node, list):
            return any(_eq(item, lit) for item in node)
        return False
    cls = _scalar_class(node)
    if cls is None:
        return False
    if op == "=":
        return _eq(node, lit)
    if op == "!=":
        return not _eq(node, lit)
    # ordering: numbers with numbers, strings with strings, false otherwise
    lcls = _scalar_class(lit)
    if cls != lcls or cls not in ("number", "string"):
        return False
    if op == "<":
        return node < lit
    if op == "<=":
        return node <= lit
    if op == ">":
        return node > lit
    return node >= lit


def eval_expr(expr, value) -> bool:
    """Evaluate a parsed expression against one decoded JSON value."""
    if isinstance(expr, Cond):
        return _cond(expr, value)
    if isinstance(expr, And):
        return eval_expr(expr.left, value) and eval_expr(expr.right, value)
    if isinstance(expr, Or):
        return eval_expr(expr.left, value) or eval_expr(expr.right, value)
    if isinstance(expr, Not):
        return not eval_expr(expr.expr, value)
    raise TypeError(f"not a query expression: {expr!r}")


def _literal_text(lit):
    if lit is None:
        return "null"
    if isinstance(lit, bool):
        return "true" if lit else "false"
    if isinstance(lit, str):
        escaped = lit.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return repr(lit)


def expr_to_text(expr) -> str:
    """Render an expression back to query text (fully parenthesized)."""
    if isinstance(expr, Cond):
        return f"{'.'.join(expr.path)} {expr.op} {_literal_text(expr.literal)}"
    if isinstance(expr, And):
        return f"({expr_to_text(expr.left)} AND {expr_to_text(expr.right)})"
    if isinstance(expr, Or):
        return f"({expr_to_text(expr.left)} OR {expr_to_text(expr.right)})"
    if isinstance(expr, Not):
        return f"NOT ({expr_to_text(expr.expr)})"
    raise TypeError(f"not a query expression: {expr!r}")
