"""Core application model.

The model is a tree of frozen dataclasses rooted at :class:`ApplicationModel`.
Plain dataclass construction performs no semantic checks, which is what the
parser relies on: it builds raw nodes and leaves naming, uniqueness and
reference checks to :mod:`cnadsl.validator`.  The ``construct_*`` functions
are the programmatic builder API; they check the invariants of the node they
build and raise :class:`ModelError` subclasses on the first violation.

Every node carries an optional ``span`` pointing at its declaration in the
source text.  Spans never take part in equality.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

from cnadsl.diagnostics import SourceSpan

__all__ = [
    "ApplicationModel",
    "ContainerSpec",
    "DeploymentPolicy",
    "DeploymentUnit",
    "DuplicateName",
    "DuplicateServiceName",
    "EmptyApplication",
    "Endpoint",
    "EndpointRef",
    "InvalidIdentifier",
    "InvalidValue",
    "LoadBalancingStrategy",
    "MetricKind",
    "ModelError",
    "Protocol",
    "ScalingRule",
    "SchedulingConstraint",
    "Service",
    "canonical_serialize",
    "construct_application",
    "construct_container",
    "construct_deployment_unit",
    "construct_endpoint",
    "construct_policy",
    "construct_scaling",
    "construct_service",
    "construct_constraint",
    "model_equals",
]

DNS_LABEL_RE = re.compile(r"[a-z0-9]([-a-z0-9]*[a-z0-9])?")
LABEL_KEY_RE = re.compile(r"[a-zA-Z0-9]([a-zA-Z0-9._-]*[a-zA-Z0-9])?")
LABEL_VALUE_RE = re.compile(r"([A-Za-z0-9]([-A-Za-z0-9_.]*[A-Za-z0-9])?)?")
ENV_NAME_RE = re.compile(r"[-._a-zA-Z][-._a-zA-Z0-9]*")

_DOMAIN_COMPONENT = r"(?:[a-zA-Z0-9]|[a-zA-Z0-9][a-zA-Z0-9-]*[a-zA-Z0-9])"
_DOMAIN = rf"{_DOMAIN_COMPONENT}(?:\.{_DOMAIN_COMPONENT})*(?::[0-9]+)?"
_PATH_COMPONENT = r"[a-z0-9]+(?:(?:[._]|__|-+)[a-z0-9]+)*"
IMAGE_RE = re.compile(
    rf"(?:{_DOMAIN}/)?{_PATH_COMPONENT}(?:/{_PATH_COMPONENT})*"
    r"(?::[\w][\w.-]{0,127})?"
    r"(?:@[A-Za-z][A-Za-z0-9]*(?:[-_+.][A-Za-z][A-Za-z0-9]*)*:[0-9a-fA-F]{32,})?"
)

MAX_LABEL_LENGTH = 63
MAX_PORT_NAME_LENGTH = 15


def is_dns_label(name: str) -> bool:
    return len(name) <= MAX_LABEL_LENGTH and DNS_LABEL_RE.fullmatch(name) is not None


def is_label_key(key: str) -> bool:
    return len(key) <= MAX_LABEL_LENGTH and LABEL_KEY_RE.fullmatch(key) is not None


def is_label_value(value: str) -> bool:
    return len(value) <= MAX_LABEL_LENGTH and LABEL_VALUE_RE.fullmatch(value) is not None


def is_env_name(name: str) -> bool:
    return is_label_key(name) and ENV_NAME_RE.fullmatch(name) is not None


def is_port_name(name: str) -> bool:
    # IANA service names: what Kubernetes accepts for a named Service port.
    return (
        is_dns_label(name)
        and len(name) <= MAX_PORT_NAME_LENGTH
        and "--" not in name
        and any(c.isalpha() for c in name)
    )


def is_image_ref(image: str) -> bool:
    return IMAGE_RE.fullmatch(image) is not None


def is_port(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and 1 <= value <= 65535


class ModelError(ValueError):
    """Raised by the builder API when a node would violate an invariant."""


class InvalidIdentifier(ModelError):
    def __init__(self, name: str, rule: str):
        super().__init__(f"invalid identifier {name!r}: {rule}")
        self.name = name
        self.rule = rule


class DuplicateName(ModelError):
    def __init__(self, kind: str, names: Sequence[str]):
        super().__init__(f"duplicate {kind} name(s): {', '.join(names)}")
        self.kind = kind
        self.names = tuple(names)


class DuplicateServiceName(DuplicateName):
    def __init__(self, names: Sequence[str]):
        super().__init__("service", names)


class EmptyApplication(ModelError):
    def __init__(self, name: str):
        super().__init__(f"application {name!r} provides no services")
        self.name = name


class InvalidValue(ModelError):
    pass


class Protocol(enum.Enum):
    TCP = "TCP"
    UDP = "UDP"


class LoadBalancingStrategy(enum.Enum):
    ROUND_ROBIN = "round-robin"


class MetricKind(enum.Enum):
    CPU_UTILIZATION = "cpu"


Metric = Union[MetricKind, str]


def _frozen_map(value: Mapping[str, str] | Iterable[tuple[str, str]] | None) -> Mapping[str, str]:
    return MappingProxyType(dict(value or {}))


def _span_field():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class EndpointRef:
    """A ``uses`` edge: ``svc.endpoint`` or ``external:host:port``.

    For external references ``service_name`` holds the host and
    ``endpoint_name`` the port.
    """

    service_name: str
    endpoint_name: str
    external: bool = False
    span: SourceSpan | None = _span_field()

    EXTERNAL_PREFIX = "external:"

    def __str__(self) -> str:
        if self.external:
            return f"{self.EXTERNAL_PREFIX}{self.service_name}:{self.endpoint_name}"
        return f"{self.service_name}.{self.endpoint_name}"

    @classmethod
    def parse(cls, text: str, span: SourceSpan | None = None) -> "EndpointRef":
        if text.startswith(cls.EXTERNAL_PREFIX):
            host, sep, port = text[len(cls.EXTERNAL_PREFIX):].rpartition(":")
            if not sep or not host or not port.isdigit() or not is_port(int(port)):
                raise ValueError(f"external reference {text!r} must have the form external:<host>:<port>")
            return cls(host, str(int(port)), True, span)
        parts = text.split(".")
        if len(parts) != 2 or not all(parts):
            raise ValueError(f"reference {text!r} must have the form <service>.<endpoint>")
        return cls(parts[0], parts[1], False, span)


@dataclass(frozen=True)
class Endpoint:
    name: str
    container_port: int
    target_port: int | None = None
    protocol: Protocol = Protocol.TCP
    lb_strategy: LoadBalancingStrategy = LoadBalancingStrategy.ROUND_ROBIN
    span: SourceSpan | None = _span_field()

    def __post_init__(self):
        if self.target_port is None:
            object.__setattr__(self, "target_port", self.container_port)


@dataclass(frozen=True)
class ContainerSpec:
    name: str
    image: str
    ports: tuple[int, ...] = ()
    env: Mapping[str, str] = field(default_factory=dict)
    span: SourceSpan | None = _span_field()

    def __post_init__(self):
        object.__setattr__(self, "ports", tuple(self.ports))
        object.__setattr__(self, "env", _frozen_map(self.env))


@dataclass(frozen=True)
class SchedulingConstraint:
    key: str
    value: str = "true"
    span: SourceSpan | None = _span_field()

    def __str__(self) -> str:
        return self.key if self.value == "true" else f"{self.key}={self.value}"

    @classmethod
    def parse(cls, text: str, span: SourceSpan | None = None) -> "SchedulingConstraint":
        key, sep, value = text.partition("=")
        if not sep:
            return cls(key.strip(), "true", span)
        return cls(key.strip(), value.strip(), span)


@dataclass(frozen=True)
class ScalingRule:
    metric: Metric
    target: float
    min: int
    max: int
    span: SourceSpan | None = _span_field()

    @property
    def is_cpu(self) -> bool:
        return self.metric is MetricKind.CPU_UTILIZATION


@dataclass(frozen=True)
class DeploymentPolicy:
    replicas: int = 1
    selectors: tuple[SchedulingConstraint, ...] = ()
    scaling: ScalingRule | None = None
    span: SourceSpan | None = _span_field()

    def __post_init__(self):
        object.__setattr__(self, "selectors", tuple(self.selectors))

    @property
    def initial_replicas(self) -> int:
        """Replica count a generator should emit; scaling bounds win over ``replicas``."""
        return self.scaling.min if self.scaling is not None else self.replicas

    @property
    def is_default(self) -> bool:
        return self.replicas == 1 and not self.selectors and self.scaling is None


@dataclass(frozen=True)
class DeploymentUnit:
    name: str
    containers: tuple[ContainerSpec, ...]
    tags: Mapping[str, str] = field(default_factory=dict)
    policy: DeploymentPolicy = field(default_factory=DeploymentPolicy)
    span: SourceSpan | None = _span_field()
    tag_spans: Mapping[str, SourceSpan] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "containers", tuple(self.containers))
        object.__setattr__(self, "tags", _frozen_map(self.tags))
        object.__setattr__(self, "tag_spans", _frozen_map(self.tag_spans))


@dataclass(frozen=True)
class Service:
    name: str
    deployment_units: tuple[DeploymentUnit, ...]
    endpoints: tuple[Endpoint, ...] = ()
    uses: tuple[EndpointRef, ...] = ()
    span: SourceSpan | None = _span_field()

    def __post_init__(self):
        object.__setattr__(self, "deployment_units", tuple(self.deployment_units))
        object.__setattr__(self, "endpoints", tuple(self.endpoints))
        object.__setattr__(self, "uses", tuple(self.uses))

    def endpoint(self, name: str) -> Endpoint | None:
        return next((e for e in self.endpoints if e.name == name), None)

    def internal_dependencies(self) -> list[str]:
        return [ref.service_name for ref in self.uses if not ref.external]


@dataclass(frozen=True)
class ApplicationModel:
    name: str
    services: tuple[Service, ...]
    span: SourceSpan | None = _span_field()

    def __post_init__(self):
        object.__setattr__(self, "services", tuple(self.services))

    def service(self, name: str) -> Service | None:
        return next((s for s in self.services if s.name == name), None)

    def deployment_units(self) -> list[tuple[Service, DeploymentUnit]]:
        return [(s, u) for s in self.services for u in s.deployment_units]

    def scaling_rules(self) -> list[ScalingRule]:
        return [u.policy.scaling for _, u in self.deployment_units() if u.policy.scaling is not None]


# ---------------------------------------------------------------------------
# Builder API


def _require_dns(name: str) -> None:
    if not is_dns_label(name):
        raise InvalidIdentifier(name, "not a valid DNS-1123 label")


def _duplicates(names: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dups: list[str] = []
    for n in names:
        if n in seen and n not in dups:
            dups.append(n)
        seen.add(n)
    return dups


def _require_port(value: int, what: str) -> None:
    if not is_port(value):
        raise InvalidValue(f"{what} must be in 1..65535, got {value!r}")


def construct_endpoint(
    name: str,
    container_port: int,
    target_port: int | None = None,
    protocol: Protocol = Protocol.TCP,
    lb_strategy: LoadBalancingStrategy = LoadBalancingStrategy.ROUND_ROBIN,
) -> Endpoint:
    if not is_port_name(name):
        raise InvalidIdentifier(name, "endpoint names must be DNS-1123 labels of at most 15 characters with a letter")
    _require_port(container_port, "container port")
    if target_port is not None:
        _require_port(target_port, "target port")
    if not isinstance(lb_strategy, LoadBalancingStrategy):
        raise InvalidValue(f"unsupported load-balancing strategy {lb_strategy!r}")
    return Endpoint(name, container_port, target_port, Protocol(protocol), lb_strategy)


def construct_container(
    name: str, image: str, ports: Sequence[int] = (), env: Mapping[str, str] | None = None
) -> ContainerSpec:
    _require_dns(name)
    if not image or not is_image_ref(image):
        raise InvalidValue(f"invalid image reference {image!r}")
    for p in ports:
        _require_port(p, "container port")
    dups = _duplicates(str(p) for p in ports)
    if dups:
        raise DuplicateName("port", dups)
    for key in env or {}:
        if not is_env_name(key):
            raise InvalidIdentifier(key, "not a valid environment variable name")
    return ContainerSpec(name, image, tuple(ports), env or {})


def construct_constraint(key: str, value: str = "true") -> SchedulingConstraint:
    if not is_label_key(key):
        raise InvalidIdentifier(key, "not a valid label key")
    if not is_label_value(value):
        raise InvalidValue(f"invalid label value {value!r}")
    return SchedulingConstraint(key, value)


def construct_scaling(metric: Metric, target: float, min: int, max: int) -> ScalingRule:
    if isinstance(target, bool) or not isinstance(target, (int, float)) or not math.isfinite(target) or target <= 0:
        raise InvalidValue(f"scaling target must be a positive number, got {target!r}")
    if metric is MetricKind.CPU_UTILIZATION and target != int(target):
        raise InvalidValue("cpu target must be a whole percentage")
    if isinstance(metric, str) and not metric:
        raise InvalidValue("custom metric name must not be empty")
    if not (isinstance(min, int) and isinstance(max, int)) or min < 1 or max < 1:
        raise InvalidValue("scaling bounds must be positive integers")
    if min > max:
        raise InvalidValue(f"scaling min {min} exceeds max {max}")
    return ScalingRule(metric, target, min, max)


def construct_policy(
    replicas: int = 1,
    selectors: Sequence[SchedulingConstraint] = (),
    scaling: ScalingRule | None = None,
) -> DeploymentPolicy:
    if isinstance(replicas, bool) or not isinstance(replicas, int) or replicas < 0:
        raise InvalidValue("replicas must be a non-negative integer")
    dups = _duplicates(s.key for s in selectors)
    if dups:
        raise DuplicateName("selector", dups)
    return DeploymentPolicy(replicas, tuple(selectors), scaling)


def construct_deployment_unit(
    name: str,
    containers: Sequence[ContainerSpec],
    tags: Mapping[str, str] | None = None,
    policy: DeploymentPolicy | None = None,
) -> DeploymentUnit:
    _require_dns(name)
    if not containers:
        raise InvalidValue(f"deployment unit {name!r} needs at least one container")
    dups = _duplicates(c.name for c in containers)
    if dups:
        raise DuplicateName("container", dups)
    for key, value in (tags or {}).items():
        if not is_label_key(key):
            raise InvalidIdentifier(key, "not a valid label key")
        if not is_label_value(value):
            raise InvalidValue(f"invalid label value {value!r} for tag {key!r}")
    return DeploymentUnit(name, tuple(containers), tags or {}, policy or DeploymentPolicy())


def construct_service(
    name: str,
    deployment_units: Sequence[DeploymentUnit],
    endpoints: Sequence[Endpoint] = (),
    uses: Sequence[EndpointRef | str] = (),
) -> Service:
    _require_dns(name)
    if not deployment_units:
        raise InvalidValue(f"service {name!r} needs at least one deployment unit")
    for kind, names in (
        ("endpoint", [e.name for e in endpoints]),
        ("deployment unit", [u.name for u in deployment_units]),
    ):
        dups = _duplicates(names)
        if dups:
            raise DuplicateName(kind, dups)
    refs = tuple(EndpointRef.parse(u) if isinstance(u, str) else u for u in uses)
    for ref in refs:
        if not ref.external and ref.service_name == name:
            raise InvalidValue(f"service {name!r} cannot use its own endpoint {ref}")
    return Service(name, tuple(deployment_units), tuple(endpoints), refs)


def construct_application(name: str, services: Sequence[Service]) -> ApplicationModel:
    _require_dns(name)
    if not services:
        raise EmptyApplication(name)
    dups = _duplicates(s.name for s in services)
    if dups:
        raise DuplicateServiceName(dups)
    return ApplicationModel(name, tuple(services))


# ---------------------------------------------------------------------------
# Equality and canonical text


def _policy_key(p: DeploymentPolicy):
    return (p.replicas, tuple(sorted((s.key, s.value) for s in p.selectors)), p.scaling)


def _unit_key(u: DeploymentUnit):
    return (u.name, u.containers, dict(u.tags), _policy_key(u.policy))


def _model_key(m: ApplicationModel):
    return (
        m.name,
        tuple(
            (s.name, s.endpoints, tuple(_unit_key(u) for u in s.deployment_units), s.uses)
            for s in m.services
        ),
    )


def model_equals(a: ApplicationModel, b: ApplicationModel) -> bool:
    """Structural equality; tag, env and selector order do not matter."""
    return _model_key(a) == _model_key(b)


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def quote(text: str) -> str:
    return '"' + "".join(_ESCAPES.get(c, c) for c in text) + '"'


def format_number(value: float) -> str:
    if isinstance(value, int) or float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def _emit_endpoint(e: Endpoint, out: list[str], ind: str) -> None:
    out.append(f"{ind}endpoint {quote(e.name)} {{")
    out.append(f"{ind}  protocol {e.protocol.value.lower()}")
    out.append(f"{ind}  container-port {e.container_port}")
    out.append(f"{ind}  target-port {e.target_port}")
    out.append(f"{ind}  load-balancing {e.lb_strategy.value}")
    out.append(f"{ind}}}")


def _emit_container(c: ContainerSpec, out: list[str], ind: str) -> None:
    out.append(f"{ind}container {quote(c.name)} {{")
    out.append(f"{ind}  image {quote(c.image)}")
    out.extend(f"{ind}  port {p}" for p in c.ports)
    out.extend(f"{ind}  env {k} = {quote(v)}" for k, v in sorted(c.env.items()))
    out.append(f"{ind}}}")


def _emit_policy(p: DeploymentPolicy, out: list[str], ind: str) -> None:
    out.append(f"{ind}policy {{")
    out.append(f"{ind}  replicas {p.replicas}")
    for s in sorted(p.selectors, key=lambda s: (s.key, s.value)):
        out.append(f"{ind}  selector {quote(str(s))}")
    if p.scaling is not None:
        sc = p.scaling
        metric = "cpu" if sc.is_cpu else quote(sc.metric)
        out.append(f"{ind}  scale {{")
        out.append(f"{ind}    metric {metric}")
        out.append(f"{ind}    target {format_number(sc.target)}")
        out.append(f"{ind}    min {sc.min}")
        out.append(f"{ind}    max {sc.max}")
        out.append(f"{ind}  }}")
    out.append(f"{ind}}}")


def _emit_unit(u: DeploymentUnit, out: list[str], ind: str) -> None:
    out.append(f"{ind}deployment-unit {quote(u.name)} {{")
    for c in u.containers:
        _emit_container(c, out, ind + "  ")
    out.extend(f"{ind}  tag {k} = {quote(v)}" for k, v in sorted(u.tags.items()))
    if not u.policy.is_default:
        _emit_policy(u.policy, out, ind + "  ")
    out.append(f"{ind}}}")


def canonical_serialize(model: ApplicationModel) -> str:
    """Render ``model`` in canonical DSL text.

    Blocks keep declaration order; tags, env entries and selectors are sorted
    by key. A default policy (one replica, no selectors, no scaling) is
    omitted.
    """
    out = [f"application {quote(model.name)} {{"]
    for i, s in enumerate(model.services):
        if i:
            out.append("")
        out.append(f"  service {quote(s.name)} {{")
        for e in s.endpoints:
            _emit_endpoint(e, out, "    ")
        for u in s.deployment_units:
            _emit_unit(u, out, "    ")
        out.extend(f"    uses {quote(str(r))}" for r in s.uses)
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
