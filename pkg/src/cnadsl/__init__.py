"""Compiler for a platform-agnostic cloud-native application DSL.

Pipeline: :func:`parse` -> :func:`validate` -> ``generate_*``.
"""

from cnadsl.diagnostics import Diagnostic, Severity, SourceSpan
from cnadsl.generators import (
    CapabilityGap,
    Concept,
    ManifestSet,
    generate_compose,
    generate_kubernetes,
    generate_marathon,
)
from cnadsl.model import (
    ApplicationModel,
    ContainerSpec,
    DeploymentPolicy,
    DeploymentUnit,
    Endpoint,
    EndpointRef,
    ScalingRule,
    SchedulingConstraint,
    Service,
    canonical_serialize,
    construct_application,
    model_equals,
)
from cnadsl.parser import ParseError, format, parse, parse_bytes, parse_document
from cnadsl.validator import ValidationReport, dependency_order, validate

__version__ = "0.1.0"

__all__ = [
    "ApplicationModel",
    "CapabilityGap",
    "Concept",
    "ContainerSpec",
    "DeploymentPolicy",
    "DeploymentUnit",
    "Diagnostic",
    "Endpoint",
    "EndpointRef",
    "ManifestSet",
    "ParseError",
    "ScalingRule",
    "SchedulingConstraint",
    "Service",
    "Severity",
    "SourceSpan",
    "ValidationReport",
    "canonical_serialize",
    "construct_application",
    "dependency_order",
    "format",
    "generate_compose",
    "generate_kubernetes",
    "generate_marathon",
    "model_equals",
    "parse",
    "parse_bytes",
    "parse_document",
    "validate",
]
