import itertools
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnadsl import diagnostics as dx
from cnadsl.model import (
    ApplicationModel,
    ContainerSpec,
    DeploymentPolicy,
    DeploymentUnit,
    Endpoint,
    EndpointRef,
    MetricKind,
    ScalingRule,
    Service,
    is_dns_label,
)
from cnadsl.parser import parse
from cnadsl.validator import dependency_order, validate

from oracles import is_dns_1123
from strategies import application_models, valid_models


def svc(name, uses=(), endpoints=("http",), port=80):
    unit = DeploymentUnit(name, (ContainerSpec(name, "nginx", (port,)),))
    eps = tuple(Endpoint(e, port) for e in endpoints)
    refs = tuple(EndpointRef.parse(u) for u in uses)
    return Service(name, (unit,), eps, refs)


def app(*services):
    return ApplicationModel("app", services)


def error_codes(model):
    return [d.code for d in validate(model).diagnostics if d.is_error]


class TestValidate:
    def test_sockshop_resolves(self, sockshop):
        report = validate(sockshop)
        assert len(sockshop.services) == 9
        assert report.resolved
        assert report.errors == []

    def test_dangling_reference(self):
        report = validate(app(svc("a", ["b.http"]), svc("b", endpoints=("grpc",))))
        assert not report.resolved
        [d] = report.errors
        assert d.code == dx.UNRESOLVED_REFERENCE
        assert d.message == "unresolved endpoint reference b.http"

    def test_reference_to_missing_service(self):
        assert error_codes(app(svc("a", ["zz.http"]))) == [dx.UNRESOLVED_REFERENCE]

    def test_bad_dns_name(self):
        report = validate(app(svc("Front_End")))
        assert dx.INVALID_DNS_LABEL in [d.code for d in report.errors]
        assert any("not a valid DNS-1123 label" in d.message for d in report.errors)

    @settings(max_examples=400)
    @given(st.text(alphabet="abcXYZ019-_.", max_size=70))
    def test_dns_rule_matches_oracle(self, name):
        assert is_dns_label(name) == is_dns_1123(name)

    def test_external_refs_skip_resolution(self):
        assert validate(app(svc("a", ["external:db.example.com:5432"]))).resolved

    def test_self_reference(self):
        assert error_codes(app(svc("a", ["a.http"]))) == [dx.SELF_REFERENCE]

    @pytest.mark.parametrize(
        "mutate, code",
        [
            (lambda m: replace(m, services=m.services + (m.services[0],)), dx.DUPLICATE_SERVICE),
            (lambda m: replace(m, services=(replace(m.services[0], endpoints=m.services[0].endpoints * 2),)),
             dx.DUPLICATE_ENDPOINT),
            (lambda m: replace(m, services=(replace(m.services[0], deployment_units=()),)), dx.MISSING_DEPLOYMENT_UNIT),
            (lambda m: replace(m, name="Bad"), dx.INVALID_DNS_LABEL),
        ],
    )
    def test_structural(self, mutate, code):
        assert code in error_codes(mutate(app(svc("a"))))

    def test_duplicate_service_reported_once(self):
        assert error_codes(app(svc("a"), svc("a"))) == [dx.DUPLICATE_SERVICE]

    def test_scaling_min_greater_than_max(self):
        unit = DeploymentUnit("a", (ContainerSpec("a", "nginx"),),
                              policy=DeploymentPolicy(scaling=ScalingRule("rps", 1, 5, 2)))
        assert dx.SCALING_BOUNDS in error_codes(app(Service("a", (unit,))))

    def test_port_collision_in_unit(self):
        unit = DeploymentUnit("a", (ContainerSpec("x", "nginx", (80,)), ContainerSpec("y", "nginx", (80,))))
        assert error_codes(app(Service("a", (unit,)))) == [dx.PORT_COLLISION]

    def test_same_port_in_different_units_is_fine(self):
        units = (DeploymentUnit("u1", (ContainerSpec("x", "nginx", (80,)),)),
                 DeploymentUnit("u2", (ContainerSpec("x", "nginx", (80,)),)))
        assert validate(app(Service("a", units))).resolved

    def test_endpoint_port_must_be_declared(self):
        model = app(replace(svc("a"), endpoints=(Endpoint("http", 8080),)))
        assert error_codes(model) == [dx.UNDECLARED_ENDPOINT_PORT]

    def test_cpu_target_must_be_integral(self):
        unit = DeploymentUnit("a", (ContainerSpec("a", "nginx"),),
                              policy=DeploymentPolicy(scaling=ScalingRule(MetricKind.CPU_UTILIZATION, 50.5, 1, 2)))
        assert error_codes(app(Service("a", (unit,)))) == [dx.CPU_TARGET_NOT_INTEGER]

    def test_custom_metric_warns(self):
        unit = DeploymentUnit("a", (ContainerSpec("a", "nginx"),),
                              policy=DeploymentPolicy(scaling=ScalingRule("queue-depth", 10, 1, 3)))
        report = validate(app(Service("a", (unit,))))
        assert report.resolved
        assert [d.code for d in report.warnings] == [dx.CUSTOM_METRIC]

    def test_cycle_is_warning(self):
        report = validate(app(svc("a", ["b.http"]), svc("b", ["a.http"])))
        assert report.resolved
        assert [d.code for d in report.warnings] == [dx.DEPENDENCY_CYCLE]

    def test_derived_name_collision(self):
        units = (DeploymentUnit("b", (ContainerSpec("x", "nginx"),)), DeploymentUnit("c", (ContainerSpec("x", "nginx"),)))
        model = app(Service("a", units), svc("a-b", endpoints=()))
        assert dx.NAME_COLLISION in error_codes(model)

    def test_spans_point_at_declarations(self):
        source = 'application "x" {\n  service "Bad_Name" {\n    deployment-unit "u" { container "c" { image "n" } }\n  }\n}\n'
        [d] = validate(parse(source)).errors
        assert (d.span.line, d.span.column) == (2, 11)

    def test_idempotent(self, sockshop):
        assert validate(sockshop) == validate(sockshop)

    @settings(max_examples=50, deadline=None)
    @given(application_models())
    def test_idempotent_random(self, model):
        assert validate(model) == validate(model)


class TestDependencyOrder:
    def test_singleton(self, payment):
        assert dependency_order(payment) == ["payment"]

    def test_chain(self):
        assert dependency_order(app(svc("a", ["b.http"]), svc("b", ["c.http"]), svc("c"))) == ["c", "b", "a"]

    def test_two_cycle_breaks_at_smallest(self):
        # Oracle: enumerate both orders; the rule must pick the one starting
        # with the lexicographically smallest member of the cycle.
        services = [svc("a", ["b.http"]), svc("b", ["a.http"])]
        candidates = [list(p) for p in itertools.permutations(["a", "b"])]
        expected = min(candidates, key=lambda order: order[0])
        for perm in itertools.permutations(services):
            assert dependency_order(app(*perm)) == expected == ["a", "b"]

    def test_cycle_downstream_of_dependent(self):
        # a depends on the {y, z} cycle; the cycle must be emitted first.
        model = app(svc("a", ["z.http"]), svc("z", ["y.http"]), svc("y", ["z.http"]))
        assert dependency_order(model) == ["y", "z", "a"]

    def test_cycle_depending_on_cycle(self):
        model = app(svc("a", ["b.http", "x.http"]), svc("b", ["a.http"]),
                    svc("x", ["y.http"]), svc("y", ["x.http"]))
        assert dependency_order(model) == ["x", "y", "a", "b"]

    def test_sockshop_dependencies_first(self, sockshop):
        order = dependency_order(sockshop)
        pos = {n: i for i, n in enumerate(order)}
        for s in sockshop.services:
            for dep in s.internal_dependencies():
                assert pos[dep] < pos[s.name]

    @settings(max_examples=100, deadline=None)
    @given(valid_models, st.randoms())
    def test_permutation_and_invariance(self, model, rnd):
        order = dependency_order(model)
        assert sorted(order) == sorted(s.name for s in model.services)
        shuffled = list(model.services)
        rnd.shuffle(shuffled)
        assert dependency_order(replace(model, services=tuple(shuffled))) == order
