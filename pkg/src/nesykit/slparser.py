"""Parser and renderer for the standardized logic format.

The format has exactly three statement forms: a universally quantified
rule ("For all x, if x is a Category1, then x is a Category2."), a fact
("Name is a Category."), and one query enclosed in triple question marks.
Predicates are single PascalCase tokens, "not" may precede the predicate
position, and the indefinite article is optional (its absence is worth a
warning, not a rejection).

Parsing is total and runs in recovery mode: malformed statements are
reported with a source span and skipped, so a single call yields the full
diagnostic picture for the repair loop.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .logic import VAR, KnowledgeBase, Literal, Rule, article

# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

# Stable diagnostic codes (documented in docs/formats.md).
PLURAL_RULE_FORM = "PLURAL_RULE_FORM"
ILLEGAL_PRONOUN = "ILLEGAL_PRONOUN"
ADJECTIVE_NOMINALIZATION = "ADJECTIVE_NOMINALIZATION"
UNRECOGNIZED_STATEMENT = "UNRECOGNIZED_STATEMENT"
MISSING_QUERY = "MISSING_QUERY"
MULTIPLE_QUERY = "MULTIPLE_QUERY"
UNPAIRED_QUERY_MARKER = "UNPAIRED_QUERY_MARKER"
MISSING_PERIOD = "MISSING_PERIOD"
BARE_ADJECTIVE = "BARE_ADJECTIVE"
NEGATED_ANTECEDENT = "NEGATED_ANTECEDENT"


@dataclass(frozen=True)
class SourceSpan:
    """1-based line plus a half-open column range within that line."""

    line: int
    col_start: int
    col_end: int


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    severity: str  # "error" or "warning"
    code: str
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def to_json(self) -> dict:
        return {
            "line": self.span.line,
            "col_start": self.span.col_start,
            "col_end": self.span.col_end,
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
        }

    @classmethod
    def from_json(cls, record: dict) -> "ParseDiagnostic":
        return cls(
            span=SourceSpan(record["line"], record["col_start"], record["col_end"]),
            severity=record["severity"],
            code=record["code"],
            message=record["message"],
        )


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    diagnostics: tuple[ParseDiagnostic, ...]


# ---------------------------------------------------------------------------
# Statement grammar
# ---------------------------------------------------------------------------

_TOKEN = r"[A-Za-z][A-Za-z0-9_]*"
_PRONOUN = r"x|it|he|she|they|one"

_RULE_RE = re.compile(
    rf"^for\s*all\s+x\s*,?\s*if\s+(?P<ap>{_PRONOUN})\s+is\s+(?P<anot>not\s+)?"
    rf"(?P<aart>an?\s+)?(?P<ante>{_TOKEN})\s*,?\s*then\s+(?P<cp>{_PRONOUN})\s+is\s+"
    rf"(?P<cnot>not\s+)?(?P<cart>an?\s+)?(?P<cons>{_TOKEN})\s*\.?$",
    re.IGNORECASE,
)
_PLURAL_RULE_RE = re.compile(
    rf"^(?P<ante>{_TOKEN})s\s+are\s+(?:not\s+)?(?:an?\s+)?(?P<cons>{_TOKEN})\s*\.?$",
    re.IGNORECASE,
)
_FACT_RE = re.compile(
    rf"^(?P<subj>{_TOKEN})\s+is\s+(?P<not>not\s+)?(?P<art>an?\s+)?(?P<pred>{_TOKEN})\s*\.?$",
    re.IGNORECASE,
)
_QUERY_MARKER_RE = re.compile(r"\?\?\?")
_SEGMENT_RE = re.compile(r"[^.\n]+\.?")


def _normalize_predicate(token: str) -> str:
    return token[0].upper() + token[1:]


class _Parser:
    """Single-use parsing pass over one program text."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.diagnostics: list[ParseDiagnostic] = []
        self.facts: list[Literal] = []
        self.rules: list[Rule] = []
        self.query: Literal | None = None
        self.article_free: set[str] = set()
        self.line_starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.line_starts.append(i + 1)

    # -- diagnostics helpers ------------------------------------------------

    def _span_at(self, offset: int, length: int) -> SourceSpan:
        line = 1
        for i, start in enumerate(self.line_starts):
            if start <= offset:
                line = i + 1
            else:
                break
        col = offset - self.line_starts[line - 1]
        return SourceSpan(line, col, col + max(length, 1))

    def _report(self, span: SourceSpan, severity: str, code: str, message: str) -> None:
        self.diagnostics.append(ParseDiagnostic(span, severity, code, message))

    def _check_predicate(self, predicate: str, span: SourceSpan) -> str:
        normalized = _normalize_predicate(predicate)
        if normalized.endswith("Thing") and len(normalized) > len("Thing"):
            base = normalized[: -len("Thing")]
            self._report(
                span,
                "warning",
                ADJECTIVE_NOMINALIZATION,
                f"predicate {normalized!r} looks like a nominalized adjective; "
                f"expected {base!r}",
            )
        return normalized

    def _note_article(self, has_article: bool, predicate: str, span: SourceSpan) -> None:
        if not has_article:
            self.article_free.add(predicate)
            self._report(
                span,
                "warning",
                BARE_ADJECTIVE,
                f"predicate {predicate!r} appears without an indefinite article",
            )

    # -- statement classification -------------------------------------------

    def _classify(self, statement: str, span: SourceSpan) -> Literal | Rule | None:
        """Parse one statement; report diagnostics; return the parsed object."""
        if not statement.endswith("."):
            self._report(
                span, "warning", MISSING_PERIOD, "statement does not end with a period"
            )

        match = _RULE_RE.match(statement)
        if match:
            return self._parse_rule(match, span)
        match = _PLURAL_RULE_RE.match(statement)
        if match:
            ante = _normalize_predicate(match["ante"])
            self._report(
                span,
                "error",
                PLURAL_RULE_FORM,
                f"plural-noun rule form is not part of the format; write "
                f"'For all x, if x is {article(ante)} {ante}, then x is ...'",
            )
            return None
        match = _FACT_RE.match(statement)
        if match:
            return self._parse_fact(match, span)
        self._report(
            span,
            "error",
            UNRECOGNIZED_STATEMENT,
            f"statement matches no legal form: {statement!r}",
        )
        return None

    def _parse_rule(self, match: re.Match[str], span: SourceSpan) -> Rule | None:
        for group in ("ap", "cp"):
            pronoun = match[group].lower()
            if pronoun != VAR:
                self._report(
                    span,
                    "error",
                    ILLEGAL_PRONOUN,
                    f"rule body must use the variable 'x', not {match[group]!r}",
                )
                return None
        ante = self._check_predicate(match["ante"], span)
        cons = self._check_predicate(match["cons"], span)
        self._note_article(match["aart"] is not None, ante, span)
        self._note_article(match["cart"] is not None, cons, span)
        if match["anot"]:
            self._report(
                span,
                "warning",
                NEGATED_ANTECEDENT,
                "negated antecedent is unusual for this format; kept as written",
            )
        return Rule(
            Literal(ante, VAR, match["anot"] is not None),
            Literal(cons, VAR, match["cnot"] is not None),
        )

    def _parse_fact(self, match: re.Match[str], span: SourceSpan) -> Literal | None:
        subject = match["subj"].lower()
        if subject == VAR:
            self._report(
                span,
                "error",
                UNRECOGNIZED_STATEMENT,
                "fact subject must be a proper noun, not the rule variable",
            )
            return None
        predicate = self._check_predicate(match["pred"], span)
        self._note_article(match["art"] is not None, predicate, span)
        return Literal(predicate, subject, match["not"] is not None)

    # -- top-level passes -----------------------------------------------------

    def _extract_query_blocks(self) -> str:
        """Parse the ???-delimited query; return text with blocks masked out."""
        positions = [m.start() for m in _QUERY_MARKER_RE.finditer(self.text)]
        blocks = list(zip(positions[0::2], positions[1::2]))
        if len(positions) % 2 == 1:
            span = self._span_at(positions[-1], 3)
            if blocks:
                self._report(
                    span, "warning", UNPAIRED_QUERY_MARKER, "unpaired query marker ignored"
                )
            else:
                self._report(
                    span,
                    "error",
                    MISSING_QUERY,
                    "query marker is unpaired; no query block found",
                )
        elif not blocks:
            tail = max(len(self.text) - 1, 0)
            self._report(
                self._span_at(tail, 1),
                "error",
                MISSING_QUERY,
                "no ??? query block found",
            )
        if len(blocks) > 1:
            self._report(
                self._span_at(blocks[1][0], 3),
                "error",
                MULTIPLE_QUERY,
                f"found {len(blocks)} query blocks; only the first is used",
            )

        masked = list(self.text)
        for start, end in blocks:
            for i in range(start, min(end + 3, len(masked))):
                if masked[i] != "\n":
                    masked[i] = " "

        if blocks:
            start, end = blocks[0]
            content = self.text[start + 3 : end]
            statement = " ".join(content.split())
            offset = start + 3 + (len(content) - len(content.lstrip()))
            span = self._span_at(offset, len(statement))
            if statement:
                parsed = self._classify(statement, span)
                if isinstance(parsed, Literal):
                    self.query = parsed
                elif parsed is not None:
                    self._report(
                        span,
                        "error",
                        UNRECOGNIZED_STATEMENT,
                        "query block must contain a fact statement",
                    )
            else:
                self._report(span, "error", UNRECOGNIZED_STATEMENT, "empty query block")
        return "".join(masked)

    def run(self) -> tuple[KnowledgeBase, list[ParseDiagnostic]]:
        masked = self._extract_query_blocks()
        for line_index, line in enumerate(masked.split("\n")):
            line_offset = self.line_starts[line_index]
            for match in _SEGMENT_RE.finditer(line):
                segment = match.group()
                stripped = segment.strip()
                if not stripped:
                    continue
                offset = line_offset + match.start() + (len(segment) - len(segment.lstrip()))
                span = self._span_at(offset, len(stripped))
                parsed = self._classify(stripped, span)
                if isinstance(parsed, Rule):
                    self.rules.append(parsed)
                elif isinstance(parsed, Literal):
                    self.facts.append(parsed)
        kb = KnowledgeBase(
            facts=tuple(self.facts),
            rules=tuple(self.rules),
            query=self.query,
            article_free=frozenset(self.article_free),
        )
        return kb, self.diagnostics


def parse_program(text: str) -> tuple[KnowledgeBase, list[ParseDiagnostic]]:
    """Parse standardized-format text into a knowledge base plus diagnostics.

    Never raises on malformed input: unparseable statements are skipped
    with an error diagnostic, and a missing or duplicated query block is
    reported rather than fatal.
    """
    return _Parser(text).run()


def validate_translation(text: str) -> ValidationReport:
    """Classify every statement; ok iff no error-severity diagnostics."""
    _, diagnostics = parse_program(text)
    ok = not any(d.is_error for d in diagnostics)
    return ValidationReport(ok=ok, diagnostics=tuple(diagnostics))


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _phrase(literal: Literal, article_free: frozenset[str]) -> str:
    negation = "not " if literal.negated else ""
    if literal.predicate in article_free:
        return f"{negation}{literal.predicate}"
    return f"{negation}{article(literal.predicate)} {literal.predicate}"


def render_program(kb: KnowledgeBase) -> str:
    """Render a knowledge base to canonical standardized-format text.

    Rules come first, then facts, then the query inside triple question
    marks. Predicates carry their indefinite article unless the knowledge
    base recorded them as article-free.
    """
    query = kb.require_query()
    lines = []
    for rule in kb.rules:
        lines.append(
            f"For all x, if x is {_phrase(rule.antecedent, kb.article_free)}, "
            f"then x is {_phrase(rule.consequent, kb.article_free)}."
        )
    for fact in kb.facts:
        lines.append(f"{fact.subject.capitalize()} is {_phrase(fact, kb.article_free)}.")
    lines.append(f"??? {query.subject.capitalize()} is {_phrase(query, kb.article_free)}. ???")
    return "\n".join(lines)
