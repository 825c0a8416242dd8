"""Kubernetes target: Deployments, Services and HorizontalPodAutoscalers."""

from __future__ import annotations

from cnadsl.generators.base import (
    SERVICE_LABEL,
    UNIT_LABEL,
    ManifestSet,
    UnsupportedConcept,
    dump_yaml,
    effective_labels,
)
from cnadsl.model import ApplicationModel, DeploymentUnit, LoadBalancingStrategy, ScalingRule, Service
from cnadsl.model import format_number
from cnadsl.validator import dependency_order, deployment_name

TARGET = "kubernetes"


def _metadata(name: str, namespace: str, labels: dict[str, str] | None = None) -> dict:
    meta = {"name": name, "namespace": namespace}
    if labels:
        meta["labels"] = labels
    return meta


def deployment(svc: Service, unit: DeploymentUnit, namespace: str) -> dict:
    name = deployment_name(svc, unit.name)
    selector = {SERVICE_LABEL: svc.name, UNIT_LABEL: unit.name}
    labels = {**effective_labels(svc, unit), **selector}
    containers = []
    for c in unit.containers:
        spec: dict = {"name": c.name, "image": c.image}
        if c.ports:
            spec["ports"] = [{"containerPort": p} for p in c.ports]
        if c.env:
            spec["env"] = [{"name": k, "value": v} for k, v in sorted(c.env.items())]
        containers.append(spec)
    pod_spec: dict = {"containers": containers}
    if unit.policy.selectors:
        pod_spec["nodeSelector"] = {s.key: s.value for s in unit.policy.selectors}
    return {
        "apiVersion": "apps/v1",
        "kind": "Deployment",
        "metadata": _metadata(name, namespace, labels),
        "spec": {
            "replicas": unit.policy.initial_replicas,
            "selector": {"matchLabels": selector},
            "template": {"metadata": {"labels": labels}, "spec": pod_spec},
        },
    }


def service(svc: Service, namespace: str) -> dict:
    ports = []
    for ep in svc.endpoints:
        if ep.lb_strategy is not LoadBalancingStrategy.ROUND_ROBIN:
            raise UnsupportedConcept(f"load-balancing strategy {ep.lb_strategy!r}")
        ports.append({
            "name": ep.name,
            "port": ep.target_port,
            "targetPort": ep.container_port,
            "protocol": ep.protocol.value,
        })
    return {
        "apiVersion": "v1",
        "kind": "Service",
        "metadata": _metadata(svc.name, namespace, {SERVICE_LABEL: svc.name}),
        "spec": {"selector": {SERVICE_LABEL: svc.name}, "ports": ports},
    }


def autoscaler(svc: Service, unit: DeploymentUnit, rule: ScalingRule, namespace: str) -> dict:
    name = deployment_name(svc, unit.name)
    if rule.is_cpu:
        metric = {
            "type": "Resource",
            "resource": {"name": "cpu", "target": {"type": "Utilization", "averageUtilization": int(rule.target)}},
        }
    else:
        metric = {
            "type": "Pods",
            "pods": {
                "metric": {"name": rule.metric},
                "target": {"type": "AverageValue", "averageValue": format_number(rule.target)},
            },
        }
    return {
        "apiVersion": "autoscaling/v2",
        "kind": "HorizontalPodAutoscaler",
        "metadata": _metadata(name, namespace, {SERVICE_LABEL: svc.name, UNIT_LABEL: unit.name}),
        "spec": {
            "scaleTargetRef": {"apiVersion": "apps/v1", "kind": "Deployment", "name": name},
            "minReplicas": rule.min,
            "maxReplicas": rule.max,
            "metrics": [metric],
        },
    }


def generate_kubernetes(model: ApplicationModel, namespace: str = "default") -> ManifestSet:
    """One file per object, named ``NN-<service>-<kind>.yaml`` in dependency order."""
    objects: list[tuple[str, str, dict]] = []
    for name in dependency_order(model):
        svc = model.service(name)
        if svc.endpoints:
            objects.append((svc.name, "service", service(svc, namespace)))
        for unit in svc.deployment_units:
            objects.append((svc.name, "deployment", deployment(svc, unit, namespace)))
            if unit.policy.scaling is not None:
                objects.append((svc.name, "hpa", autoscaler(svc, unit, unit.policy.scaling, namespace)))
    docs = tuple(
        (f"{i:02d}-{svc}-{kind}.yaml", dump_yaml(obj))
        for i, (svc, kind, obj) in enumerate(objects, start=1)
    )
    return ManifestSet(docs, (), TARGET)
