"""Read-only SQL gate: parses a deliberately small SELECT subset.

Anything outside the grammar below is rejected before it can reach the
database. Keyword blocklists are not enough on their own, so this is a real
tokenizer plus recursive-descent parser; only statements it fully accepts
are executed, and even then on a read-only connection.

Accepted shape:

    SELECT [DISTINCT] item, ...
    FROM table [alias]
    [INNER] JOIN table [alias] ON col = col ...
    [WHERE expr]            -- AND/OR, =, IN (literals), LIKE
    [ORDER BY col [ASC|DESC], ...]
    [LIMIT n]

Items are column references or literals. No subqueries, functions, unions,
comments, or writes of any kind.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..ingest import SchemaCatalog

DEFAULT_ROW_CAP = 1000

_KEYWORDS = {
    "select", "distinct", "from", "join", "inner", "on", "where", "and", "or",
    "in", "like", "order", "by", "asc", "desc", "limit", "as",
}


class SqlValidationError(Exception):
    pass


@dataclass(frozen=True)
class ValidatedSQL:
    """A statement that passed the gate, with the row cap applied."""

    sql: str
    tables: tuple[str, ...]
    had_limit: bool


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # 'ident', 'string', 'number', 'punct', 'eof'
    value: str
    pos: int


_TOKEN_PATTERNS = [
    ("ws", re.compile(r"\s+")),
    ("string", re.compile(r"'(?:[^']|'')*'")),
    ("number", re.compile(r"\d+(?:\.\d+)?")),
    ("ident", re.compile(r"[A-Za-z_][A-Za-z0-9_]*")),
    ("punct", re.compile(r"[(),.;=*]")),
]


def _tokenize(sql: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(sql)
    while i < n:
        if sql.startswith("--", i) or sql.startswith("/*", i):
            raise SqlValidationError(f"comments are not allowed (position {i})")
        for kind, pattern in _TOKEN_PATTERNS:
            m = pattern.match(sql, i)
            if m:
                if kind != "ws":
                    tokens.append(_Token(kind, m.group(), i))
                i = m.end()
                break
        else:
            raise SqlValidationError(f"unexpected character {sql[i]!r} at position {i}")
    tokens.append(_Token("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], catalog: SchemaCatalog):
        self.tokens = tokens
        self.pos = 0
        self.columns_by_table = {
            name.lower(): {c.lower() for c in cols}
            for name, cols in catalog.table_columns.items()
        }
        self.scope: dict[str, str] = {}  # alias (lower) -> table (lower)
        self.tables_used: list[str] = []
        self.had_limit = False

    # -- token helpers -------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.value.lower() == word

    def expect_keyword(self, word: str) -> None:
        if not self.at_keyword(word):
            tok = self.peek()
            raise SqlValidationError(f"expected {word.upper()} near {tok.value!r}")
        self.advance()

    def expect_punct(self, value: str) -> None:
        tok = self.peek()
        if tok.kind != "punct" or tok.value != value:
            raise SqlValidationError(f"expected {value!r} near {tok.value!r}")
        self.advance()

    # -- grammar -------------------------------------------------------

    def parse(self) -> None:
        if not self.at_keyword("select"):
            tok = self.peek()
            raise SqlValidationError(
                f"only SELECT statements are allowed (statement begins with {tok.value!r})"
            )
        self.advance()
        if self.at_keyword("distinct"):
            self.advance()
        self.deferred_items = self._collect_select_items()
        self.expect_keyword("from")
        self._table_ref()
        while self.at_keyword("inner") or self.at_keyword("join"):
            if self.at_keyword("inner"):
                self.advance()
            self.expect_keyword("join")
            self._table_ref()
            self.expect_keyword("on")
            self._column_ref()
            self.expect_punct("=")
            self._column_ref()
        # select items are checked only once the full scope is known
        for item in self.deferred_items:
            self._check_column_tokens(item)
        if self.at_keyword("where"):
            self.advance()
            self._expr()
        if self.at_keyword("order"):
            self.advance()
            self.expect_keyword("by")
            self._order_item()
            while self._take_punct(","):
                self._order_item()
        if self.at_keyword("limit"):
            self.advance()
            tok = self.advance()
            if tok.kind != "number" or "." in tok.value:
                raise SqlValidationError("LIMIT requires an integer literal")
            self.had_limit = True
        tok = self.peek()
        if tok.kind == "punct" and tok.value == ";":
            self.advance()
            tok = self.peek()
            if tok.kind != "eof":
                raise SqlValidationError("multiple statements are not allowed")
        if self.peek().kind != "eof":
            raise SqlValidationError(f"unexpected trailing input near {self.peek().value!r}")

    def _take_punct(self, value: str) -> bool:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == value:
            self.advance()
            return True
        return False

    def _collect_select_items(self) -> list[list[_Token]]:
        """Read select items as raw tokens; column checks run after FROM."""
        items: list[list[_Token]] = []
        current: list[_Token] = []
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                raise SqlValidationError("unterminated select list")
            if tok.kind == "ident" and tok.value.lower() == "from":
                break
            if tok.kind == "punct" and tok.value == ",":
                self.advance()
                if not current:
                    raise SqlValidationError("empty select item")
                items.append(current)
                current = []
                continue
            self.advance()
            current.append(tok)
        if not current:
            raise SqlValidationError("empty select list")
        items.append(current)
        return items

    def _check_column_tokens(self, item: list[_Token]) -> None:
        # item is either a literal or a column reference: ident | ident.ident
        if len(item) == 1 and item[0].kind in ("string", "number"):
            return
        if len(item) == 1 and item[0].kind == "ident":
            self._resolve_column(None, item[0].value)
            return
        if (
            len(item) == 3
            and item[0].kind == "ident"
            and item[1].kind == "punct"
            and item[1].value == "."
            and item[2].kind == "ident"
        ):
            self._resolve_column(item[0].value, item[2].value)
            return
        text = " ".join(t.value for t in item)
        raise SqlValidationError(f"unsupported select item {text!r}")

    def _table_ref(self) -> None:
        tok = self.advance()
        if tok.kind != "ident":
            raise SqlValidationError(f"expected table name near {tok.value!r}")
        table = tok.value.lower()
        if table not in self.columns_by_table:
            raise SqlValidationError(f"unknown table {tok.value!r}")
        alias = table
        if self.at_keyword("as"):
            self.advance()
            alias_tok = self.advance()
            if alias_tok.kind != "ident":
                raise SqlValidationError("expected alias after AS")
            alias = alias_tok.value.lower()
        elif self.peek().kind == "ident" and self.peek().value.lower() not in _KEYWORDS:
            alias = self.advance().value.lower()
        if alias in self.scope:
            raise SqlValidationError(f"duplicate table alias {alias!r}")
        self.scope[alias] = table
        self.tables_used.append(table)

    def _column_ref(self) -> None:
        tok = self.advance()
        if tok.kind != "ident" or tok.value.lower() in _KEYWORDS:
            raise SqlValidationError(f"expected column reference near {tok.value!r}")
        if self._take_punct("."):
            col = self.advance()
            if col.kind != "ident":
                raise SqlValidationError("expected column name after '.'")
            self._resolve_column(tok.value, col.value)
        else:
            self._resolve_column(None, tok.value)

    def _resolve_column(self, qualifier: str | None, column: str) -> None:
        col = column.lower()
        if qualifier is not None:
            table = self.scope.get(qualifier.lower())
            if table is None:
                raise SqlValidationError(f"unknown table alias {qualifier!r}")
            if col not in self.columns_by_table[table]:
                raise SqlValidationError(f"unknown column {qualifier}.{column}")
            return
        for table in self.scope.values():
            if col in self.columns_by_table[table]:
                return
        raise SqlValidationError(f"unknown column {column!r}")

    def _expr(self) -> None:
        self._and_expr()
        while self.at_keyword("or"):
            self.advance()
            self._and_expr()

    def _and_expr(self) -> None:
        self._primary()
        while self.at_keyword("and"):
            self.advance()
            self._primary()

    def _primary(self) -> None:
        if self._take_punct("("):
            self._expr()
            self.expect_punct(")")
            return
        self._comparison()

    def _operand(self) -> None:
        tok = self.peek()
        if tok.kind in ("string", "number"):
            self.advance()
            return
        self._column_ref()

    def _comparison(self) -> None:
        self._operand()
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "=":
            self.advance()
            self._operand()
            return
        if self.at_keyword("in"):
            self.advance()
            self.expect_punct("(")
            while True:
                lit = self.advance()
                if lit.kind not in ("string", "number"):
                    raise SqlValidationError("IN list may contain only literals")
                if self._take_punct(","):
                    continue
                break
            self.expect_punct(")")
            return
        if self.at_keyword("like"):
            self.advance()
            lit = self.advance()
            if lit.kind != "string":
                raise SqlValidationError("LIKE requires a string literal")
            return
        raise SqlValidationError(f"expected comparison operator near {tok.value!r}")

    def _order_item(self) -> None:
        self._column_ref()
        if self.at_keyword("asc") or self.at_keyword("desc"):
            self.advance()


def validate_sql(
    sql: str,
    catalog: SchemaCatalog,
    row_cap: int = DEFAULT_ROW_CAP,
) -> ValidatedSQL:
    """Accept exactly one SELECT in the supported subset, or raise.

    A ``LIMIT row_cap`` is appended when the statement has none, so no
    accepted query can return unbounded output.
    """
    if not sql or not sql.strip():
        raise SqlValidationError("empty SQL")
    tokens = _tokenize(sql)
    parser = _Parser(tokens, catalog)
    parser.parse()

    final = sql.strip().rstrip(";").strip()
    if not parser.had_limit:
        final = f"{final} LIMIT {row_cap}"
    return ValidatedSQL(sql=final, tables=tuple(parser.tables_used), had_limit=parser.had_limit)
