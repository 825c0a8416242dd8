"""Concept usage report and the concept-to-requirement traceability matrix."""

from __future__ import annotations

from dataclasses import dataclass

from cnadsl import model as m

REQUIREMENTS = ("R1", "R2", "R3", "R4", "R5", "R6")
TRENDS = ("AD", "SD", "DU", "SCHED", "LB", "AS", "CL")

REQUIREMENT_TITLES = {
    "R1": "Containerized deployments",
    "R2": "Application scaling",
    "R3": "Compendiously (lightweight, infrastructure-agnostic)",
    "R4": "Multi-cloud support",
    "R5": "Independence",
    "R6": "Elastic runtime environment",
}

TREND_TITLES = {
    "AD": "Application definition",
    "SD": "Service discovery",
    "DU": "Deployment unit",
    "SCHED": "Scheduling",
    "LB": "Load balancing",
    "AS": "Autoscaling",
    "CL": "Component labeling",
}

# concept -> (requirements, trends)
TRACEABILITY: dict[str, tuple[frozenset[str], frozenset[str]]] = {
    "Application": (frozenset({"R5"}), frozenset({"AD"})),
    "Service": (frozenset({"R1"}), frozenset({"SD", "CL"})),
    "Endpoint": (frozenset({"R3"}), frozenset({"SD", "LB", "CL"})),
    "DeploymentUnit": (frozenset({"R1"}), frozenset({"DU", "SCHED", "CL"})),
    "Container": (frozenset({"R1"}), frozenset({"DU", "SCHED"})),
    "DeploymentPolicies": (frozenset({"R4", "R6"}), frozenset({"SD", "SCHED", "AS", "CL"})),
    "LoadBalancingStrategy": (frozenset({"R6"}), frozenset({"SD", "LB", "AS"})),
    "Scaling Rules": (frozenset({"R2", "R4", "R6"}), frozenset({"SD", "SCHED", "AS", "CL"})),
    "Scheduling Constraints": (frozenset({"R2", "R4", "R6"}), frozenset({"SD", "SCHED", "AS", "CL"})),
}

# concept -> the single model type that houses it
HOUSING = {
    "Application": m.ApplicationModel,
    "Service": m.Service,
    "Endpoint": m.Endpoint,
    "DeploymentUnit": m.DeploymentUnit,
    "Container": m.ContainerSpec,
    "DeploymentPolicies": m.DeploymentPolicy,
    "LoadBalancingStrategy": m.LoadBalancingStrategy,
    "Scaling Rules": m.ScalingRule,
    "Scheduling Constraints": m.SchedulingConstraint,
    "uses": m.EndpointRef,
}


def traceability_markdown() -> str:
    header = "| Concept | " + " | ".join(REQUIREMENTS + TRENDS) + " |"
    rule = "|---|" + "---|" * (len(REQUIREMENTS) + len(TRENDS))
    rows = [header, rule]
    for concept, (reqs, trends) in TRACEABILITY.items():
        cells = ["x" if r in reqs else "" for r in REQUIREMENTS] + ["x" if t in trends else "" for t in TRENDS]
        rows.append(f"| {concept} | " + " | ".join(cells) + " |")
    return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class ServiceUsage:
    service: str
    units: int
    containers: int
    endpoints: int
    replicas: str
    selectors: int
    scaling: str
    tags: int
    concepts: tuple[str, ...]


def _scaling_text(rule: m.ScalingRule) -> str:
    metric = "cpu" if rule.is_cpu else rule.metric
    return f"{metric}:{m.format_number(rule.target)}[{rule.min}..{rule.max}]"


def service_usage(svc: m.Service) -> ServiceUsage:
    units = svc.deployment_units
    policies = [u.policy for u in units]
    concepts = {"SD", "DU", "CL"}
    if any(p.selectors for p in policies):
        concepts.add("SCHED")
    if svc.endpoints:
        concepts.add("LB")
    if any(p.scaling for p in policies):
        concepts.add("AS")
    if svc.uses:
        concepts.add("AD")
    return ServiceUsage(
        service=svc.name,
        units=len(units),
        containers=sum(len(u.containers) for u in units),
        endpoints=len(svc.endpoints),
        replicas=",".join(str(p.replicas) for p in policies),
        selectors=sum(len(p.selectors) for p in policies),
        scaling=",".join(_scaling_text(p.scaling) for p in policies if p.scaling) or "-",
        tags=sum(len(u.tags) for u in units),
        concepts=tuple(t for t in TRENDS if t in concepts),
    )


def application_concepts(model: m.ApplicationModel) -> tuple[str, ...]:
    used = {c for s in model.services for c in service_usage(s).concepts}
    if len(model.services) > 1:
        used.add("AD")
    return tuple(t for t in TRENDS if t in used)


def render_usage(model: m.ApplicationModel) -> str:
    columns = ("service", "units", "containers", "endpoints", "replicas", "selectors", "scaling", "tags", "concepts")
    rows = []
    for svc in model.services:
        u = service_usage(svc)
        rows.append((u.service, str(u.units), str(u.containers), str(u.endpoints), u.replicas,
                     str(u.selectors), u.scaling, str(u.tags), " ".join(f"[{c}]" for c in u.concepts)))
    widths = [max(len(col), *(len(r[i]) for r in rows)) for i, col in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)
    lines.append("")
    n = len(model.services)
    lines.append(f"application {model.name}: {n} service{'s' if n != 1 else ''}; concepts exercised: "
                 + " ".join(f"[{c}]" for c in application_concepts(model)))
    return "\n".join(lines) + "\n"
