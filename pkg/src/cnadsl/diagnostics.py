"""Source spans, diagnostics and the stable diagnostic code table."""

from __future__ import annotations

import enum
import os
import sys
from dataclasses import dataclass
from typing import Iterable


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self.line}:{self.column}+{self.length}")


# Codes are part of the public interface; never renumber.
UNEXPECTED_TOKEN = "E001-unexpected-token"
BAD_TOKEN = "E002-bad-token"
UNTERMINATED_STRING = "E003-unterminated-string"
INVALID_UTF8 = "E004-invalid-utf8"
DUPLICATE_FIELD = "E010-duplicate-field"
MISSING_FIELD = "E011-missing-field"
NEGATIVE_REPLICAS = "E012-negative-replicas"
PORT_OUT_OF_RANGE = "E013-port-out-of-range"
INVALID_NUMBER = "E014-invalid-number"
INVALID_DNS_LABEL = "E020-invalid-dns-label"
INVALID_LABEL_KEY = "E021-invalid-label-key"
DUPLICATE_SERVICE = "E022-duplicate-service"
DUPLICATE_ENDPOINT = "E023-duplicate-endpoint"
DUPLICATE_CONTAINER = "E024-duplicate-container"
UNRESOLVED_REFERENCE = "E025-unresolved-reference"
SELF_REFERENCE = "E026-self-reference"
SCALING_BOUNDS = "E027-scaling-bounds"
PORT_COLLISION = "E028-port-collision"
DUPLICATE_CONTAINER_PORT = "E029-duplicate-container-port"
INVALID_IMAGE = "E030-invalid-image"
INVALID_LABEL_VALUE = "E031-invalid-label-value"
DUPLICATE_SELECTOR = "E032-duplicate-selector"
CPU_TARGET_NOT_INTEGER = "E033-cpu-target-not-integer"
EMPTY_APPLICATION = "E034-empty-application"
MISSING_DEPLOYMENT_UNIT = "E035-missing-deployment-unit"
UNDECLARED_ENDPOINT_PORT = "E036-undeclared-endpoint-port"
NAME_COLLISION = "E037-name-collision"
INVALID_PORT_NAME = "E038-invalid-port-name"
INVALID_ENV_NAME = "E039-invalid-env-name"
DUPLICATE_UNIT = "E040-duplicate-unit"
INVALID_REFERENCE = "E041-invalid-reference"
DUPLICATE_SERVICE_PORT = "E042-duplicate-service-port"
DEPENDENCY_CYCLE = "W001-dependency-cycle"
CUSTOM_METRIC = "W002-custom-metric"
LARGE_SOURCE = "W003-large-source"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: SourceSpan | None = None

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def render(self, filename: str = "<input>", color: bool = False) -> str:
        where = filename
        if self.span is not None:
            where = f"{filename}:{self.span.line}:{self.span.column}"
        sev = self.severity.value
        if color:
            tint = "\x1b[31m" if self.is_error else "\x1b[33m"
            sev = f"{tint}{sev}\x1b[0m"
        return f"{where}: {sev}[{self.code}]: {self.message}"


def error(code: str, message: str, span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, span)


def warning(code: str, message: str, span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, span)


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)


def use_color(stream=None) -> bool:
    stream = stream if stream is not None else sys.stderr
    if os.environ.get("CNADSL_NO_COLOR"):
        return False
    return hasattr(stream, "isatty") and stream.isatty()
