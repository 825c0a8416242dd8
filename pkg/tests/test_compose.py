from hypothesis import given, settings

from cnadsl.generators import SERVICE_LABEL, Concept, generate_compose
from cnadsl.model import (
    ApplicationModel,
    ContainerSpec,
    DeploymentPolicy,
    DeploymentUnit,
    Endpoint,
    MetricKind,
    Protocol,
    ScalingRule,
    SchedulingConstraint,
    Service,
)

from conftest import corpus_model, load_yaml
from oracles import compose_violations
from strategies import valid_models


def compose(model):
    ms = generate_compose(model)
    [(name, body)] = ms.documents
    assert name == "docker-compose.yml"
    return load_yaml(body), ms.gaps


def single(policy=DeploymentPolicy(), endpoints=(Endpoint("http", 8080, 80),), containers=None):
    containers = containers or (ContainerSpec("web", "nginx:1.25", (8080,)),)
    unit = DeploymentUnit("web", containers, policy=policy)
    return ApplicationModel("demo", (Service("web", (unit,), endpoints),))


def test_payment(payment):
    doc, gaps = compose(payment)
    assert doc["version"] == "3"
    entry = doc["services"]["payment"]
    assert entry["image"] == "weaveworksdemos/payment:0.4.3"
    assert entry["deploy"]["replicas"] == 3
    assert entry["deploy"]["placement"]["constraints"] == ["node.labels.openStack.dc1 == true"]
    assert entry["deploy"]["labels"]["app"] == "nginx"
    assert entry["ports"] == ["80:80"]
    assert gaps == ()


def test_header_layout(payment):
    [(_, body)] = generate_compose(payment).documents
    assert body.startswith('version: "3"\nservices:\n')
    assert '- "80:80"' in body


def test_scaling_is_a_gap():
    doc, gaps = compose(single(DeploymentPolicy(replicas=9, scaling=ScalingRule(MetricKind.CPU_UTILIZATION, 50, 2, 5))))
    assert doc["services"]["web"]["deploy"]["replicas"] == 2
    assert [g.concept for g in gaps] == [Concept.AUTOSCALING]
    assert gaps[0].target == "swarm"


def test_no_selectors_no_placement():
    doc, _ = compose(single())
    assert "placement" not in doc["services"]["web"]["deploy"]


def test_selector_values():
    doc, _ = compose(single(DeploymentPolicy(selectors=(SchedulingConstraint("zone", "eu"),))))
    assert doc["services"]["web"]["deploy"]["placement"]["constraints"] == ["node.labels.zone == eu"]


def test_udp_port():
    doc, _ = compose(single(endpoints=(Endpoint("dns", 8080, 53, Protocol.UDP),)))
    assert doc["services"]["web"]["ports"] == ["53:8080/udp"]


def test_multi_container_unit():
    containers = (ContainerSpec("app", "nginx", (8080,)), ContainerSpec("sidecar", "envoy"))
    doc, gaps = compose(single(containers=containers))
    assert sorted(doc["services"]) == ["web-web-app", "web-web-sidecar"]
    assert [g.concept for g in gaps] == [Concept.SCHEDULING]
    assert "ports" not in doc["services"]["web-web-sidecar"]


def test_sockshop_gaps(sockshop):
    doc, gaps = compose(sockshop)
    assert len(doc["services"]) == 9
    assert sum(g.concept is Concept.AUTOSCALING for g in gaps) == 1
    # Several services publish port 80; swarm cannot share a published port.
    assert [g.concept for g in gaps if g.concept is not Concept.AUTOSCALING] == [Concept.LOAD_BALANCING]


def test_corpus_conforms():
    for case in ("payment", "sockshop", "features"):
        doc, _ = compose(corpus_model(case))
        assert compose_violations(doc) == []


@settings(max_examples=60, deadline=None)
@given(valid_models)
def test_invariants(model):
    doc, gaps = compose(model)
    assert compose_violations(doc) == []
    owners = {e["deploy"]["labels"][SERVICE_LABEL] for e in doc["services"].values()}
    assert owners == {s.name for s in model.services}
    assert sum(g.concept is Concept.AUTOSCALING for g in gaps) == len(model.scaling_rules())
    assert generate_compose(model) == generate_compose(model)
