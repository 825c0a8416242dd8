"""Docker Swarm target: a single Compose version 3 file."""

from __future__ import annotations

from collections import defaultdict

from cnadsl.generators.base import (
    SERVICE_LABEL,
    UNIT_LABEL,
    CapabilityGap,
    Concept,
    ManifestSet,
    Quoted,
    dump_yaml,
    effective_labels,
    sort_keys_deep,
)
from cnadsl.model import ApplicationModel, ContainerSpec, DeploymentUnit, Protocol, Service
from cnadsl.validator import dependency_order

TARGET = "swarm"
FILENAME = "docker-compose.yml"
NETWORK = "app-net"


def _port_entries(svc: Service, container: ContainerSpec) -> list[str]:
    entries = []
    for ep in svc.endpoints:
        if ep.container_port in container.ports:
            entry = f"{ep.target_port}:{ep.container_port}"
            if ep.protocol is Protocol.UDP:
                entry += "/udp"
            entries.append(Quoted(entry))
    return entries


def _compose_service(svc: Service, unit: DeploymentUnit, container: ContainerSpec) -> dict:
    deploy: dict = {
        "replicas": unit.policy.initial_replicas,
        "labels": {**effective_labels(svc, unit), SERVICE_LABEL: svc.name, UNIT_LABEL: unit.name},
    }
    if unit.policy.selectors:
        deploy["placement"] = {
            "constraints": [f"node.labels.{s.key} == {s.value}" for s in unit.policy.selectors]
        }
    entry: dict = {"image": container.image, "deploy": deploy, "networks": [NETWORK]}
    ports = _port_entries(svc, container)
    if ports:
        entry["ports"] = ports
    if container.ports:
        entry["expose"] = [Quoted(p) for p in container.ports]
    if container.env:
        entry["environment"] = dict(container.env)
    return entry


def generate_compose(model: ApplicationModel) -> ManifestSet:
    services: dict[str, dict] = {}
    gaps: list[CapabilityGap] = []
    for name in dependency_order(model):
        svc = model.service(name)
        multi_unit = len(svc.deployment_units) > 1
        for unit in svc.deployment_units:
            base = f"{svc.name}-{unit.name}" if multi_unit else svc.name
            if len(unit.containers) > 1:
                for c in unit.containers:
                    services[f"{svc.name}-{unit.name}-{c.name}"] = _compose_service(svc, unit, c)
                gaps.append(CapabilityGap(
                    Concept.SCHEDULING, TARGET,
                    f"deployment-unit {svc.name}/{unit.name} has {len(unit.containers)} containers; "
                    "swarm cannot co-schedule them, emitted as separate services"))
            else:
                services[base] = _compose_service(svc, unit, unit.containers[0])
            rule = unit.policy.scaling
            if rule is not None:
                gaps.append(CapabilityGap(
                    Concept.AUTOSCALING, TARGET,
                    f"deployment-unit {svc.name}/{unit.name} scales on {rule.metric if isinstance(rule.metric, str) else 'cpu'} "
                    f"({rule.min}..{rule.max}); swarm has no autoscaler, replicas fixed at {rule.min}"))

    published: dict[str, list[str]] = defaultdict(list)
    for cname, entry in services.items():
        for port in entry.get("ports", []):
            published[port.split(":")[0] + ("/udp" if port.endswith("/udp") else "")].append(cname)
    for port, owners in sorted(published.items()):
        if len(owners) > 1:
            gaps.append(CapabilityGap(
                Concept.LOAD_BALANCING, TARGET,
                f"published port {port} is claimed by {', '.join(sorted(owners))}; "
                "swarm ingress routes each published port to one service"))

    doc = {
        "version": Quoted("3"),
        "services": sort_keys_deep(services),
        "networks": {NETWORK: {"driver": "overlay"}},
    }
    return ManifestSet(((FILENAME, dump_yaml(doc, sort_keys=False)),), tuple(gaps), TARGET)
