"""Mesos/Marathon target: one application group JSON document."""

from __future__ import annotations

from cnadsl.generators.base import CapabilityGap, Concept, ManifestSet, dump_json, effective_labels
from cnadsl.model import ApplicationModel, ContainerSpec, DeploymentUnit, Service
from cnadsl.validator import dependency_order

TARGET = "marathon"
FILENAME = "marathon-group.json"


def _app_ids(model: ApplicationModel, svc: Service, unit: DeploymentUnit) -> list[str]:
    base = f"/{model.name}/{svc.name}/{unit.name}"
    if len(unit.containers) > 1:
        return [f"{base}-{c.name}" for c in unit.containers]
    return [base]


def _port_mappings(svc: Service, container: ContainerSpec) -> list[dict]:
    mappings = []
    for port in container.ports:
        eps = [ep for ep in svc.endpoints if ep.container_port == port]
        if not eps:
            mappings.append({"containerPort": port, "hostPort": 0, "protocol": "tcp"})
        for ep in eps:
            mappings.append({
                "containerPort": port,
                "hostPort": 0,
                "servicePort": ep.target_port,
                "protocol": ep.protocol.value.lower(),
                "name": ep.name,
            })
    return mappings


def _app(app_id: str, svc: Service, unit: DeploymentUnit, container: ContainerSpec, deps: list[str]) -> dict:
    app: dict = {
        "id": app_id,
        "instances": unit.policy.initial_replicas,
        "container": {
            "type": "DOCKER",
            "docker": {"image": container.image},
            "portMappings": _port_mappings(svc, container),
        },
        "networks": [{"mode": "container/bridge"}],
        "labels": effective_labels(svc, unit),
    }
    if unit.policy.selectors:
        app["constraints"] = [[s.key, "CLUSTER", s.value] for s in unit.policy.selectors]
    if container.env:
        app["env"] = dict(container.env)
    if deps:
        app["dependencies"] = deps
    return app


def generate_marathon(model: ApplicationModel) -> ManifestSet:
    order = dependency_order(model)
    ids = {
        (svc.name, unit.name): _app_ids(model, svc, unit)
        for svc in model.services for unit in svc.deployment_units
    }
    apps: list[dict] = []
    gaps: list[CapabilityGap] = []
    for name in order:
        svc = model.service(name)
        deps: list[str] = []
        for dep_name in svc.internal_dependencies():
            dep = model.service(dep_name)
            for unit in dep.deployment_units:
                deps.extend(i for i in ids[(dep.name, unit.name)] if i not in deps)
        for unit in svc.deployment_units:
            for app_id, container in zip(ids[(svc.name, unit.name)], unit.containers):
                apps.append(_app(app_id, svc, unit, container, deps))
            if len(unit.containers) > 1:
                gaps.append(CapabilityGap(
                    Concept.SCHEDULING, TARGET,
                    f"deployment-unit {svc.name}/{unit.name} has {len(unit.containers)} containers; "
                    "emitted as separate apps without co-location"))
            if unit.policy.scaling is not None:
                gaps.append(CapabilityGap(
                    Concept.AUTOSCALING, TARGET,
                    f"deployment-unit {svc.name}/{unit.name} requires marathon-autoscale add-on; "
                    f"instances fixed at {unit.policy.scaling.min}"))
    group = {"id": f"/{model.name}", "apps": apps}
    return ManifestSet(((FILENAME, dump_json(group)),), tuple(gaps), TARGET)
