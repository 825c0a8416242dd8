"""Semantic validation and dependency ordering."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from cnadsl import diagnostics as dx
from cnadsl.diagnostics import Diagnostic
from cnadsl.model import (
    ApplicationModel,
    Service,
    is_dns_label,
    is_env_name,
    is_image_ref,
    is_label_key,
    is_label_value,
    is_port,
    is_port_name,
)

__all__ = ["ValidationReport", "dependency_order", "validate", "workload_names"]


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...]

    @property
    def resolved(self) -> bool:
        return not dx.has_errors(self.diagnostics)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if not d.is_error]


def _dns(out: list[Diagnostic], kind: str, name: str, span) -> None:
    if not is_dns_label(name):
        out.append(dx.error(
            dx.INVALID_DNS_LABEL,
            f"{kind} name {name!r} is not a valid DNS-1123 label "
            "(lowercase alphanumerics and '-', 1-63 characters, alphanumeric at both ends)",
            span))


def _duplicates(out: list[Diagnostic], code: str, kind: str, items, scope: str = "") -> None:
    seen: set[str] = set()
    for name, span in items:
        if name in seen:
            out.append(dx.error(code, f"duplicate {kind} name {name!r}{scope}", span))
        seen.add(name)


def workload_names(model: ApplicationModel) -> list[tuple[tuple[str, str], tuple[str, ...]]]:
    """Names that generators derive, as ``((target, name), origin)`` pairs.

    ``origin`` is the (service, unit[, container]) path that produced the name.
    """
    names = []
    for svc in model.services:
        multi_unit = len(svc.deployment_units) > 1
        for unit in svc.deployment_units:
            origin = (svc.name, unit.name)
            names.append((("kubernetes", deployment_name(svc, unit.name)), origin))
            base = f"{svc.name}-{unit.name}" if multi_unit else svc.name
            if len(unit.containers) > 1:
                names.extend((("compose", f"{svc.name}-{unit.name}-{c.name}"), origin + (c.name,))
                             for c in unit.containers)
            else:
                names.append((("compose", base), origin))
    return names


def deployment_name(service: Service, unit_name: str) -> str:
    return service.name if unit_name == service.name else f"{service.name}-{unit_name}"


def _check_service(svc: Service, out: list[Diagnostic]) -> None:
    _dns(out, "service", svc.name, svc.span)
    if not svc.deployment_units:
        out.append(dx.error(dx.MISSING_DEPLOYMENT_UNIT,
                            f"service {svc.name!r} must execute at least one deployment-unit", svc.span))
    _duplicates(out, dx.DUPLICATE_ENDPOINT, "endpoint",
                [(e.name, e.span) for e in svc.endpoints], f" in service {svc.name!r}")
    _duplicates(out, dx.DUPLICATE_UNIT, "deployment-unit",
                [(u.name, u.span) for u in svc.deployment_units], f" in service {svc.name!r}")

    declared = {p for u in svc.deployment_units for c in u.containers for p in c.ports}
    service_ports: dict[tuple[int, str], str] = {}
    for ep in svc.endpoints:
        if not is_port_name(ep.name):
            out.append(dx.error(
                dx.INVALID_PORT_NAME,
                f"endpoint name {ep.name!r} must be a DNS-1123 label of at most 15 characters "
                "containing a letter and no '--'",
                ep.span))
        for what, port in (("container-port", ep.container_port), ("target-port", ep.target_port)):
            if not is_port(port):
                out.append(dx.error(dx.PORT_OUT_OF_RANGE, f"{what} must be in 1..65535, got {port}", ep.span))
        if ep.container_port not in declared:
            out.append(dx.error(
                dx.UNDECLARED_ENDPOINT_PORT,
                f"endpoint {ep.name!r} forwards to container port {ep.container_port}, "
                f"which no container of service {svc.name!r} declares",
                ep.span))
        key = (ep.target_port, ep.protocol.value)
        if key in service_ports:
            out.append(dx.error(
                dx.DUPLICATE_SERVICE_PORT,
                f"endpoints {service_ports[key]!r} and {ep.name!r} both expose {ep.protocol.value} port {ep.target_port}",
                ep.span))
        service_ports.setdefault(key, ep.name)

    for unit in svc.deployment_units:
        _dns(out, "deployment-unit", unit.name, unit.span)
        _duplicates(out, dx.DUPLICATE_CONTAINER, "container",
                    [(c.name, c.span) for c in unit.containers], f" in deployment-unit {unit.name!r}")
        if not unit.containers:
            out.append(dx.error(dx.MISSING_FIELD,
                                f"deployment-unit {unit.name!r} needs at least one container", unit.span))
        for key, value in unit.tags.items():
            span = unit.tag_spans.get(key, unit.span)
            if not is_label_key(key):
                out.append(dx.error(dx.INVALID_LABEL_KEY, f"tag key {key!r} is not a valid label key", span))
            if not is_label_value(value):
                out.append(dx.error(dx.INVALID_LABEL_VALUE, f"tag value {value!r} is not a valid label value", span))

        owner: dict[int, str] = {}
        for c in unit.containers:
            _dns(out, "container", c.name, c.span)
            if not c.image or not is_image_ref(c.image):
                out.append(dx.error(dx.INVALID_IMAGE, f"image {c.image!r} is not a valid image reference", c.span))
            for key in c.env:
                if not is_env_name(key):
                    out.append(dx.error(dx.INVALID_ENV_NAME,
                                        f"env name {key!r} is not a valid environment variable name", c.span))
            for port, count in Counter(c.ports).items():
                if not is_port(port):
                    out.append(dx.error(dx.PORT_OUT_OF_RANGE, f"port must be in 1..65535, got {port}", c.span))
                if count > 1:
                    out.append(dx.error(dx.DUPLICATE_CONTAINER_PORT,
                                        f"container {c.name!r} declares port {port} more than once", c.span))
                if port in owner and owner[port] != c.name:
                    out.append(dx.error(
                        dx.PORT_COLLISION,
                        f"port {port} is declared by containers {owner[port]!r} and {c.name!r} "
                        f"of deployment-unit {unit.name!r}",
                        c.span))
                owner.setdefault(port, c.name)

        pol = unit.policy
        if pol.replicas < 0:
            out.append(dx.error(dx.NEGATIVE_REPLICAS, "replicas must be a non-negative integer", pol.span))
        seen_keys: set[str] = set()
        for sel in pol.selectors:
            if not is_label_key(sel.key):
                out.append(dx.error(dx.INVALID_LABEL_KEY, f"selector key {sel.key!r} is not a valid label key", sel.span))
            if not is_label_value(sel.value):
                out.append(dx.error(dx.INVALID_LABEL_VALUE,
                                    f"selector value {sel.value!r} is not a valid label value", sel.span))
            if sel.key in seen_keys:
                out.append(dx.error(dx.DUPLICATE_SELECTOR, f"duplicate selector key {sel.key!r}", sel.span))
            seen_keys.add(sel.key)
        sc = pol.scaling
        if sc is not None:
            if sc.min < 1 or sc.max < 1 or sc.target <= 0:
                out.append(dx.error(dx.INVALID_NUMBER, "scaling min/max must be positive integers and target positive",
                                    sc.span))
            if sc.min > sc.max:
                out.append(dx.error(dx.SCALING_BOUNDS,
                                    f"scaling min {sc.min} exceeds max {sc.max} in deployment-unit {unit.name!r}",
                                    sc.span))
            if sc.is_cpu and sc.target != int(sc.target):
                out.append(dx.error(dx.CPU_TARGET_NOT_INTEGER,
                                    f"cpu target {sc.target} must be a whole percentage", sc.span))
            if not sc.is_cpu:
                out.append(dx.warning(
                    dx.CUSTOM_METRIC,
                    f"custom metric {sc.metric!r} must be provided by the target platform's metrics pipeline",
                    sc.span))


def _check_references(model: ApplicationModel, out: list[Diagnostic]) -> None:
    for svc in model.services:
        for ref in svc.uses:
            if ref.external:
                continue
            if ref.service_name == svc.name:
                out.append(dx.error(dx.SELF_REFERENCE, f"service {svc.name!r} uses its own endpoint {ref}", ref.span))
                continue
            target = model.service(ref.service_name)
            if target is None or target.endpoint(ref.endpoint_name) is None:
                out.append(dx.error(dx.UNRESOLVED_REFERENCE, f"unresolved endpoint reference {ref}", ref.span))


def _cycles(model: ApplicationModel) -> list[list[str]]:
    graph = _graph(model)
    return [sorted(c) for c in _components(graph) if len(c) > 1 or next(iter(c)) in graph[next(iter(c))]]


def validate(model: ApplicationModel) -> ValidationReport:
    out: list[Diagnostic] = []
    _dns(out, "application", model.name, model.span)
    if not model.services:
        out.append(dx.error(dx.EMPTY_APPLICATION, f"application {model.name!r} provides no services", model.span))
    _duplicates(out, dx.DUPLICATE_SERVICE, "service", [(s.name, s.span) for s in model.services])
    for svc in model.services:
        _check_service(svc, out)
    _check_references(model, out)

    # Repeated service or unit declarations are already reported as
    # duplicates; count each declared origin once.
    derived = Counter(name for name, _ in set(workload_names(model)))
    for target, count in derived.items():
        if count > 1:
            out.append(dx.error(dx.NAME_COLLISION,
                                f"derived {target[0]} workload name {target[1]!r} is produced {count} times",
                                model.span))

    for cycle in _cycles(model):
        first = model.service(cycle[0])
        out.append(dx.warning(dx.DEPENDENCY_CYCLE,
                              f"services {', '.join(cycle)} use each other in a cycle",
                              first.span if first else None))
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# Dependency ordering


def _graph(model: ApplicationModel) -> dict[str, set[str]]:
    names = {s.name for s in model.services}
    graph: dict[str, set[str]] = {n: set() for n in names}
    for svc in model.services:
        graph[svc.name].update(d for d in svc.internal_dependencies() if d in names and d != svc.name)
    return graph


def _components(graph: dict[str, set[str]]) -> list[set[str]]:
    """Strongly connected components (Tarjan), iterative."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    stack: list[str] = []
    on_stack: set[str] = set()
    result: list[set[str]] = []
    counter = 0
    for root in sorted(graph):
        if root in index:
            continue
        work = [(root, iter(sorted(graph[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, children = work[-1]
            child = next(children, None)
            if child is not None:
                if child not in index:
                    index[child] = low[child] = counter
                    counter += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(sorted(graph[child]))))
                elif child in on_stack:
                    low[node] = min(low[node], index[child])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                result.append(comp)
    return result


def dependency_order(model: ApplicationModel) -> list[str]:
    """Services with their dependencies first.

    Among ready services the lexicographically smallest goes next. When
    every remaining service waits on another (a cycle), the smallest name
    inside a cycle that depends on nothing outside it is emitted.
    """
    graph = _graph(model)
    remaining = dict(graph)
    order: list[str] = []
    while remaining:
        ready = [n for n, deps in remaining.items() if not deps & remaining.keys()]
        if not ready:
            sub = {n: deps & remaining.keys() for n, deps in remaining.items()}
            comp_of = {}
            comps = _components(sub)
            for i, comp in enumerate(comps):
                for n in comp:
                    comp_of[n] = i
            sinks = [
                comp for i, comp in enumerate(comps)
                if all(comp_of[d] == i for n in comp for d in sub[n])
            ]
            ready = [min(min(c) for c in sinks)]
        nxt = min(ready)
        order.append(nxt)
        del remaining[nxt]
    return order
