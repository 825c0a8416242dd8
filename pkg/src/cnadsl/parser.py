"""Lexer and recursive-descent parser for ``.cna`` definitions.

Grammar (fields inside a block may appear in any order; scalar fields at
most once)::

    app        := "application" STRING "{" service+ "}"
    service    := "service" STRING "{" (endpoint | unit | uses)* "}"
    endpoint   := "endpoint" STRING "{" proto? cport tport? lb? "}"
    proto      := "protocol" ("tcp" | "udp")
    cport      := "container-port" INT
    tport      := "target-port" INT
    lb         := "load-balancing" "round-robin"
    uses       := "uses" STRING          // "svc.endpoint" or "external:host:port"
    unit       := "deployment-unit" STRING "{" container+ tag* policy? "}"
    container  := "container" STRING "{" image port* envvar* "}"
    image      := "image" STRING
    port       := "port" INT
    envvar     := "env" IDENT "=" STRING
    tag        := "tag" IDENT "=" STRING
    policy     := "policy" "{" replicas? selector* scaling? "}"
    replicas   := "replicas" INT
    selector   := "selector" STRING      // "key" or "key=value"
    scaling    := "scale" "{" metric target min max "}"
    metric     := "metric" ("cpu" | STRING)
    target     := "target" NUMBER
    min        := "min" INT
    max        := "max" INT

Errors inside a block abandon the current field and resume at the next
field keyword of the same block, so one pass reports every independent
problem.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

from cnadsl import diagnostics as dx
from cnadsl.diagnostics import Diagnostic, SourceSpan
from cnadsl.model import (
    ApplicationModel,
    ContainerSpec,
    DeploymentPolicy,
    DeploymentUnit,
    Endpoint,
    EndpointRef,
    LoadBalancingStrategy,
    MetricKind,
    Protocol,
    ScalingRule,
    SchedulingConstraint,
    Service,
    canonical_serialize,
    is_port,
)

__all__ = ["ParseError", "parse", "parse_bytes", "parse_document", "format"]

SOFT_SIZE_LIMIT = 1 << 20

LBRACE, RBRACE, EQUALS, STRING, WORD, EOF = "{", "}", "=", "string", "word", "end of input"

_WORD_RE = re.compile(r"[A-Za-z0-9_.+-]+")
_INT_RE = re.compile(r"-?[0-9]+")
_NUMBER_RE = re.compile(r"-?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_STRING_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "r": "\r", "t": "\t"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan
    value: str | None = None

    def describe(self) -> str:
        if self.kind == EOF:
            return "end of input"
        if self.kind == STRING:
            return f"string {self.text}"
        return repr(self.text)


class ParseError(Exception):
    """Raised by :func:`parse` when the source has ERROR diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        first = next((d for d in diagnostics if d.is_error), diagnostics[0])
        super().__init__(first.render())


def tokenize(source: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r﻿":
            i, col = i + 1, col + 1
            continue
        if source.startswith("//", i):
            end = source.find("\n", i)
            end = n if end < 0 else end
            col += end - i
            i = end
            continue
        if c in "{}=":
            tokens.append(Token(c, c, SourceSpan(line, col, 1)))
            i, col = i + 1, col + 1
            continue
        if c == '"':
            start, start_col = i, col
            i += 1
            chars: list[str] = []
            closed = False
            while i < n:
                ch = source[i]
                if ch == '"':
                    closed = True
                    i += 1
                    break
                if ch == "\n":
                    break
                if ch == "\\" and i + 1 < n and source[i + 1] in _STRING_ESCAPES:
                    chars.append(_STRING_ESCAPES[source[i + 1]])
                    i += 2
                    continue
                if ch == "\\":
                    diags.append(dx.error(
                        dx.BAD_TOKEN, "invalid escape sequence in string",
                        SourceSpan(line, start_col + (i - start), 2 if i + 1 < n else 1)))
                    i += 1
                    continue
                chars.append(ch)
                i += 1
            span = SourceSpan(line, start_col, i - start)
            col = start_col + (i - start)
            if not closed:
                diags.append(dx.error(dx.UNTERMINATED_STRING, "unterminated string literal", span))
            tokens.append(Token(STRING, source[start:i], span, "".join(chars)))
            continue
        m = _WORD_RE.match(source, i)
        if m:
            text = m.group()
            tokens.append(Token(WORD, text, SourceSpan(line, col, len(text))))
            i, col = m.end(), col + len(text)
            continue
        diags.append(dx.error(dx.BAD_TOKEN, f"unexpected character {c!r}", SourceSpan(line, col, 1)))
        i, col = i + 1, col + 1
    tokens.append(Token(EOF, "", SourceSpan(line, col, 0)))
    return tokens, diags


class _Abort(Exception):
    """Unwinds to the nearest block loop after a diagnostic was recorded."""


class _Parser:
    def __init__(self, tokens: list[Token], diags: list[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.diags = diags
        # An unterminated string may have swallowed closing delimiters, so
        # complaints about the end of input would only be noise.
        self.truncated = any(d.code == dx.UNTERMINATED_STRING for d in diags)

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != EOF:
            self.pos += 1
        return t

    def fail(self, code: str, message: str, span: SourceSpan) -> None:
        if not (self.truncated and self.tok.kind == EOF):
            self.diags.append(dx.error(code, message, span))
        raise _Abort

    def unexpected(self, expected: str) -> None:
        self.fail(dx.UNEXPECTED_TOKEN, f"expected {expected}, found {self.tok.describe()}", self.tok.span)

    def expect(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.unexpected(what)
        return self.advance()

    def string(self) -> Token:
        return self.expect(STRING, "a string")

    def ident(self) -> Token:
        return self.expect(WORD, "an identifier")

    def integer(self) -> tuple[int, Token]:
        t = self.tok
        if t.kind != WORD or not _INT_RE.fullmatch(t.text):
            self.unexpected("an integer")
        self.advance()
        return int(t.text), t

    def number(self) -> tuple[float, Token]:
        t = self.tok
        if t.kind != WORD or not _NUMBER_RE.fullmatch(t.text):
            self.unexpected("a number")
        self.advance()
        if _INT_RE.fullmatch(t.text):
            return int(t.text), t
        return float(t.text), t

    def port(self, what: str) -> int:
        value, t = self.integer()
        if not is_port(value):
            self.fail(dx.PORT_OUT_OF_RANGE, f"{what} must be in 1..65535, got {value}", t.span)
        return value

    # -- block machinery ---------------------------------------------------

    def block(self, handlers: dict[str, Callable[[Token], None]], owner: str) -> Token:
        """Parse ``{ field* }`` dispatching on field keywords; returns the ``}``."""
        self.expect(LBRACE, "'{'")
        while True:
            t = self.tok
            if t.kind == RBRACE:
                return self.advance()
            if t.kind == EOF:
                self.diags.append(dx.error(dx.UNEXPECTED_TOKEN, f"expected '}}' to close {owner}", t.span))
                raise _Abort
            start = self.pos
            try:
                handler = handlers.get(t.text) if t.kind == WORD else None
                if handler is None:
                    choices = ", ".join(f"'{k}'" for k in handlers)
                    self.unexpected(f"one of {choices} or '}}' in {owner}")
                self.advance()
                handler(t)
            except _Abort:
                self.synchronize(handlers, start)

    def synchronize(self, handlers: dict[str, Callable[[Token], None]], start: int) -> None:
        depth = 0
        while True:
            t = self.tok
            if t.kind == EOF:
                return
            if depth == 0 and t.kind == RBRACE:
                return
            if depth == 0 and self.pos > start and t.kind == WORD and t.text in handlers:
                return
            if t.kind == LBRACE:
                depth += 1
            elif t.kind == RBRACE:
                depth -= 1
            self.advance()

    @staticmethod
    def once(seen: dict[str, Token], t: Token, diags: list[Diagnostic]) -> None:
        if t.text in seen:
            prev = seen[t.text].span
            diags.append(dx.error(
                dx.DUPLICATE_FIELD,
                f"duplicate field '{t.text}' (first declared at {prev.line}:{prev.column})",
                t.span))
            raise _Abort
        seen[t.text] = t

    def missing(self, owner: str, what: str, span: SourceSpan) -> None:
        self.diags.append(dx.error(dx.MISSING_FIELD, f"{owner} is missing required field '{what}'", span))

    def assignment(self, entries: dict[str, str], spans: dict[str, SourceSpan], what: str) -> None:
        key = self.ident()
        self.expect(EQUALS, "'='")
        value = self.string()
        if key.text in entries:
            self.fail(dx.DUPLICATE_FIELD, f"duplicate {what} '{key.text}'", key.span)
        entries[key.text] = value.value
        spans[key.text] = key.span

    # -- grammar -----------------------------------------------------------

    def application(self) -> ApplicationModel | None:
        if self.tok.kind != WORD or self.tok.text != "application":
            self.diags.append(dx.error(
                dx.UNEXPECTED_TOKEN, f"expected 'application', found {self.tok.describe()}", self.tok.span))
            return None
        self.advance()
        try:
            name = self.string()
        except _Abort:
            return None
        services: list[Service] = []

        def service(_t: Token) -> None:
            svc = self.service()
            if svc is not None:
                services.append(svc)

        try:
            self.block({"service": service}, f"application {name.text}")
        except _Abort:
            return None
        if self.tok.kind != EOF:
            self.diags.append(dx.error(dx.UNEXPECTED_TOKEN, f"expected end of input, found {self.tok.describe()}", self.tok.span))
        if not services and not dx.has_errors(self.diags):
            self.diags.append(dx.error(dx.EMPTY_APPLICATION, "application must declare at least one 'service'", name.span))
        return ApplicationModel(name.value, tuple(services), span=name.span)

    def service(self) -> Service | None:
        name = self.string()
        endpoints: list[Endpoint] = []
        units: list[DeploymentUnit] = []
        uses: list[EndpointRef] = []

        def endpoint(_t):
            endpoints.append(self.endpoint())

        def unit(_t):
            units.append(self.unit())

        def use(_t):
            s = self.string()
            try:
                uses.append(EndpointRef.parse(s.value, s.span))
            except ValueError as exc:
                self.fail(dx.INVALID_REFERENCE, str(exc), s.span)

        self.block({"endpoint": endpoint, "deployment-unit": unit, "uses": use}, f"service {name.text}")
        return Service(name.value, tuple(units), tuple(endpoints), tuple(uses), span=name.span)

    def endpoint(self) -> Endpoint:
        name = self.string()
        seen: dict[str, Token] = {}
        fields: dict = {}

        def protocol(t):
            self.once(seen, t, self.diags)
            v = self.ident()
            if v.text not in ("tcp", "udp"):
                self.fail(dx.UNEXPECTED_TOKEN, f"expected 'tcp' or 'udp', found {v.describe()}", v.span)
            fields["protocol"] = Protocol(v.text.upper())

        def cport(t):
            self.once(seen, t, self.diags)
            fields["container_port"] = self.port("container-port")

        def tport(t):
            self.once(seen, t, self.diags)
            fields["target_port"] = self.port("target-port")

        def lb(t):
            self.once(seen, t, self.diags)
            v = self.ident()
            if v.text != LoadBalancingStrategy.ROUND_ROBIN.value:
                self.fail(dx.UNEXPECTED_TOKEN, f"unsupported load-balancing strategy {v.text!r}; only 'round-robin'", v.span)
            fields["lb_strategy"] = LoadBalancingStrategy.ROUND_ROBIN

        self.block({"protocol": protocol, "container-port": cport, "target-port": tport, "load-balancing": lb},
                   f"endpoint {name.text}")
        if "container_port" not in fields:
            if "container-port" not in seen:
                self.missing(f"endpoint {name.text}", "container-port", name.span)
            raise _Abort
        return Endpoint(name.value, span=name.span, **fields)

    def unit(self) -> DeploymentUnit:
        name = self.string()
        containers: list[ContainerSpec] = []
        tags: dict[str, str] = {}
        tag_spans: dict[str, SourceSpan] = {}
        seen: dict[str, Token] = {}
        policy: list[DeploymentPolicy] = []
        attempted: list[Token] = []

        def container(t):
            attempted.append(t)
            containers.append(self.container())

        def tag(_t):
            self.assignment(tags, tag_spans, "tag")

        def pol(t):
            self.once(seen, t, self.diags)
            policy.append(self.policy(t))

        self.block({"container": container, "tag": tag, "policy": pol}, f"deployment-unit {name.text}")
        if not containers:
            if not attempted:
                self.missing(f"deployment-unit {name.text}", "container", name.span)
            raise _Abort
        return DeploymentUnit(
            name.value, tuple(containers), tags, policy[0] if policy else DeploymentPolicy(),
            span=name.span, tag_spans=tag_spans)

    def container(self) -> ContainerSpec:
        name = self.string()
        seen: dict[str, Token] = {}
        image: list[str] = []
        ports: list[int] = []
        env: dict[str, str] = {}

        def img(t):
            self.once(seen, t, self.diags)
            image.append(self.string().value)

        def port(_t):
            ports.append(self.port("port"))

        def envvar(_t):
            self.assignment(env, {}, "env")

        self.block({"image": img, "port": port, "env": envvar}, f"container {name.text}")
        if not image:
            if "image" not in seen:
                self.missing(f"container {name.text}", "image", name.span)
            raise _Abort
        return ContainerSpec(name.value, image[0], tuple(ports), env, span=name.span)

    def policy(self, kw: Token) -> DeploymentPolicy:
        seen: dict[str, Token] = {}
        fields: dict = {}
        selectors: list[SchedulingConstraint] = []

        def replicas(t):
            self.once(seen, t, self.diags)
            value, lit = self.integer()
            if value < 0:
                self.fail(dx.NEGATIVE_REPLICAS, "replicas must be a non-negative integer", lit.span)
            fields["replicas"] = value

        def selector(_t):
            s = self.string()
            c = SchedulingConstraint.parse(s.value, s.span)
            for prev in selectors:
                if prev.key == c.key:
                    self.fail(dx.DUPLICATE_SELECTOR, f"duplicate selector key {c.key!r}", s.span)
            selectors.append(c)

        def scale(t):
            self.once(seen, t, self.diags)
            fields["scaling"] = self.scaling(t)

        self.block({"replicas": replicas, "selector": selector, "scale": scale}, "policy")
        return DeploymentPolicy(selectors=tuple(selectors), span=kw.span, **fields)

    def scaling(self, kw: Token) -> ScalingRule:
        seen: dict[str, Token] = {}
        fields: dict = {}

        def metric(t):
            self.once(seen, t, self.diags)
            if self.tok.kind == WORD and self.tok.text == "cpu":
                self.advance()
                fields["metric"] = MetricKind.CPU_UTILIZATION
            elif self.tok.kind == STRING:
                s = self.advance()
                if not s.value:
                    self.fail(dx.INVALID_NUMBER, "custom metric name must not be empty", s.span)
                fields["metric"] = s.value
            else:
                self.unexpected("'cpu' or a metric name string")

        def target(t):
            self.once(seen, t, self.diags)
            value, lit = self.number()
            if not math.isfinite(value) or value <= 0:
                self.fail(dx.INVALID_NUMBER, "scaling target must be a positive number", lit.span)
            fields["target"] = value

        def bound(t):
            self.once(seen, t, self.diags)
            value, lit = self.integer()
            if value < 1:
                self.fail(dx.INVALID_NUMBER, f"scaling {t.text} must be a positive integer", lit.span)
            fields[t.text] = value

        self.block({"metric": metric, "target": target, "min": bound, "max": bound}, "scale")
        absent = [k for k in ("metric", "target", "min", "max") if k not in seen]
        for k in absent:
            self.missing("scale", k, kw.span)
        if absent or len(fields) < 4:
            raise _Abort
        return ScalingRule(span=kw.span, **fields)


def parse_document(source: str) -> tuple[ApplicationModel | None, list[Diagnostic]]:
    """Parse ``source``; return the model (``None`` on errors) and all diagnostics."""
    tokens, diags = tokenize(source)
    parser = _Parser(tokens, diags)
    model = parser.application()
    if len(source.encode("utf-8", "surrogatepass")) > SOFT_SIZE_LIMIT:
        diags.append(dx.warning(dx.LARGE_SOURCE, "definition exceeds 1 MiB", SourceSpan(1, 1, 0)))
    diags.sort(key=lambda d: (d.span.line, d.span.column) if d.span else (0, 0))
    if dx.has_errors(diags):
        return None, diags
    return model, diags


def parse(source: str) -> ApplicationModel:
    """Parse DSL text into a model; raise :class:`ParseError` on any ERROR."""
    model, diags = parse_document(source)
    if model is None:
        raise ParseError(diags)
    return model


def decode(data: bytes) -> tuple[str | None, list[Diagnostic]]:
    """Decode UTF-8 bytes (optional BOM); a lexical error pinpoints bad bytes."""
    try:
        return data.decode("utf-8-sig"), []
    except UnicodeDecodeError as exc:
        prefix = data[: exc.start].decode("utf-8-sig", "replace")
        line = prefix.count("\n") + 1
        col = len(prefix) - (prefix.rfind("\n") + 1) + 1
        return None, [dx.error(
            dx.INVALID_UTF8,
            f"source is not valid UTF-8 (byte 0x{data[exc.start]:02x} at offset {exc.start})",
            SourceSpan(line, col, 1))]


def parse_bytes(data: bytes) -> tuple[ApplicationModel | None, list[Diagnostic]]:
    text, diags = decode(data)
    if text is None:
        return None, diags
    return parse_document(text)


def format(model: ApplicationModel) -> str:  # noqa: A001 - mirrors the CLI verb
    return canonical_serialize(model)
