import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnadsl import diagnostics as dx
from cnadsl.model import MetricKind, Protocol, model_equals
from cnadsl.parser import ParseError, format, parse, parse_bytes, parse_document, tokenize

from conftest import CORPUS

PAYMENT = (CORPUS / "payment" / "app.cna").read_text()


def codes(source):
    _, diags = parse_document(source)
    return [d.code for d in diags if d.is_error]


def wrap_unit(body, policy=""):
    return (
        'application "a" { service "s" { deployment-unit "u" { container "c" { image "nginx" '
        + body + " } " + policy + " } } }"
    )


def span_in_bounds(source: str, span) -> bool:
    lines = source.split("\n")
    if span.line > len(lines):
        return False
    return span.column <= len(lines[span.line - 1]) + 1


class TestParse:
    def test_payment(self):
        model = parse(PAYMENT)
        unit = model.services[0].deployment_units[0]
        assert unit.containers[0].image == "weaveworksdemos/payment:0.4.3"
        assert unit.containers[0].ports == (80,)
        assert unit.policy.replicas == 3
        assert unit.tags == {"app": "nginx"}
        ep = model.services[0].endpoints[0]
        assert (ep.name, ep.protocol, ep.container_port, ep.target_port) == ("http", Protocol.TCP, 80, 80)

    def test_empty_input(self):
        _, diags = parse_document("")
        assert len(diags) == 1
        d = diags[0]
        assert d.code == dx.UNEXPECTED_TOKEN
        assert "expected 'application'" in d.message
        assert (d.span.line, d.span.column) == (1, 1)

    def test_negative_replicas(self):
        source = wrap_unit("", "policy { replicas -3 }")
        _, diags = parse_document(source)
        [d] = diags
        assert d.code == dx.NEGATIVE_REPLICAS
        assert d.message == "replicas must be a non-negative integer"
        assert source[d.span.column - 1: d.span.column - 1 + d.span.length] == "-3"

    def test_parse_raises(self):
        with pytest.raises(ParseError) as exc:
            parse("application")
        assert exc.value.diagnostics[0].is_error

    def test_defaults(self):
        model = parse('application "a" { service "s" { endpoint "e" { container-port 81 } '
                      'deployment-unit "u" { container "c" { image "nginx" port 81 } } } }')
        ep = model.services[0].endpoints[0]
        assert ep.target_port == 81 and ep.protocol is Protocol.TCP
        assert model.services[0].deployment_units[0].policy.replicas == 1

    def test_comments_and_selector_forms(self):
        model = parse(wrap_unit("// trailing\n", 'policy { selector "zone = eu" selector "gpu" // note\n }'))
        sels = model.services[0].deployment_units[0].policy.selectors
        assert [(s.key, s.value) for s in sels] == [("zone", "eu"), ("gpu", "true")]

    def test_scaling(self):
        model = parse(wrap_unit("", 'policy { scale { metric cpu target 50 min 2 max 5 } }'))
        rule = model.services[0].deployment_units[0].policy.scaling
        assert (rule.metric, rule.target, rule.min, rule.max) == (MetricKind.CPU_UTILIZATION, 50, 2, 5)
        model = parse(wrap_unit("", 'policy { scale { max 9 min 1 target 2.5e2 metric "rps" } }'))
        rule = model.services[0].deployment_units[0].policy.scaling
        assert (rule.metric, rule.target) == ("rps", 250.0)

    def test_bom_accepted(self):
        model, diags = parse_bytes(b"\xef\xbb\xbf" + PAYMENT.encode())
        assert model is not None and not diags


class TestDiagnostics:
    @pytest.mark.parametrize(
        "source, code",
        [
            ("application 'a' {}", dx.BAD_TOKEN),
            ('application "a {', dx.UNTERMINATED_STRING),
            ('application "a" {}', dx.EMPTY_APPLICATION),
            (wrap_unit('image "x"'), dx.DUPLICATE_FIELD),
            (wrap_unit("port 0"), dx.PORT_OUT_OF_RANGE),
            (wrap_unit("port 70000"), dx.PORT_OUT_OF_RANGE),
            (wrap_unit("", "policy { replicas 1 replicas 2 }"), dx.DUPLICATE_FIELD),
            (wrap_unit("", 'policy { selector "a" selector "a=b" }'), dx.DUPLICATE_SELECTOR),
            (wrap_unit("", "policy { scale { metric cpu target 0 min 1 max 2 } }"), dx.INVALID_NUMBER),
            (wrap_unit("", "policy { scale { metric cpu min 1 max 2 } }"), dx.MISSING_FIELD),
            (wrap_unit('env A = "1" env A = "2"'), dx.DUPLICATE_FIELD),
            ('application "a" { service "s" { uses "nodot" } }', dx.INVALID_REFERENCE),
            ('application "a" { service "s" { deployment-unit "u" { } } }', dx.MISSING_FIELD),
            ('application "a" { service "s" { deployment-unit "u" { container "c" { port 1 } } } }', dx.MISSING_FIELD),
            ('application "a" { service "s" { endpoint "e" { protocol sctp container-port 1 } } }', dx.UNEXPECTED_TOKEN),
            ('application "a" { service "s" { endpoint "e" { load-balancing least-conn container-port 1 } } }',
             dx.UNEXPECTED_TOKEN),
            ('application "a" { bogus }', dx.UNEXPECTED_TOKEN),
            ('application "a" { service "s" { } } trailing', dx.UNEXPECTED_TOKEN),
            (wrap_unit(r'env A = "bad \q escape"'), dx.BAD_TOKEN),
        ],
    )
    def test_codes(self, source, code):
        found = codes(source)
        assert code in found, found

    def test_recovery_reports_multiple_errors(self):
        source = """application "a" {
  service "s" {
    deployment-unit "u" {
      container "c" {
        image "nginx"
        image "again"
        port 0
      }
      policy { replicas -1 }
    }
    endpoint "e" { protocol sctp container-port 1 }
  }
}
"""
        found = codes(source)
        assert found == [dx.DUPLICATE_FIELD, dx.PORT_OUT_OF_RANGE, dx.NEGATIVE_REPLICAS, dx.UNEXPECTED_TOKEN]

    def test_unterminated_string_does_not_cascade(self):
        assert codes('application "shop {\n') == [dx.UNTERMINATED_STRING]
        assert codes('application "a" {\n service "s {\n}\n}\n')[0] == dx.UNTERMINATED_STRING

    def test_invalid_utf8(self):
        model, diags = parse_bytes(b'application "a" {\n  service "\xff" {}\n}')
        assert model is None
        [d] = diags
        assert d.code == dx.INVALID_UTF8
        assert (d.span.line, d.span.column) == (2, 12)

    def test_large_source_warning(self):
        padding = "// " + "x" * 1024 + "\n"
        source = padding * 1025 + PAYMENT
        model, diags = parse_document(source)
        assert model is not None
        assert [d.code for d in diags] == [dx.LARGE_SOURCE]

    def test_render(self):
        _, [d] = parse_document("")
        assert d.render("x.cna") == "x.cna:1:1: error[E001-unexpected-token]: expected 'application', found end of input"

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_spans_within_bounds(self, data):
        pos = data.draw(st.integers(0, len(PAYMENT)))
        cut = data.draw(st.integers(0, 20))
        junk = data.draw(st.text(alphabet='{}="\\@#-x0 \n\t', max_size=6))
        source = PAYMENT[:pos] + junk + PAYMENT[pos + cut:]
        _, diags = parse_document(source)
        for d in diags:
            assert span_in_bounds(source, d.span), (d, source)


class TestTokenize:
    def test_positions(self):
        tokens, diags = tokenize('a {\n  "x\\"y" = -3 // c\n}')
        assert not diags
        assert [(t.kind, t.text, t.span.line, t.span.column, t.span.length) for t in tokens] == [
            ("word", "a", 1, 1, 1),
            ("{", "{", 1, 3, 1),
            ("string", '"x\\"y"', 2, 3, 6),
            ("=", "=", 2, 10, 1),
            ("word", "-3", 2, 12, 2),
            ("}", "}", 3, 1, 1),
            ("end of input", "", 3, 2, 0),
        ]
        assert tokens[2].value == 'x"y'


class TestFormat:
    def test_normalizes_whitespace(self):
        squashed = " ".join(PAYMENT.split("\n")[1:])
        assert format(parse(squashed)) == format(parse(PAYMENT))

    def test_idempotent(self):
        once = format(parse(PAYMENT))
        assert format(parse(once)) == once

    def test_shuffled_service_fields(self):
        # Permute the three top-level fields of the service block; every
        # order must format to the same bytes.
        fields = [
            'endpoint "http" { protocol tcp container-port 80 target-port 80 }',
            'deployment-unit "payment" { container "payment" { image "weaveworksdemos/payment:0.4.3" port 80 } '
            'tag app = "nginx" policy { replicas 3 selector "openStack.dc1" } }',
            'uses "external:db:5432"',
        ]
        outputs = set()
        for perm in itertools.permutations(fields):
            source = 'application "sockshop" { service "payment" { ' + " ".join(perm) + " } }"
            outputs.add(format(parse(source)))
        assert len(outputs) == 1

    def test_shuffled_leaf_fields(self):
        fields = ['image "nginx"', "port 80", 'env B = "2"', 'env A = "1"', "port 81"]
        outputs = set()
        for perm in itertools.permutations(fields):
            body = " ".join(perm)
            source = 'application "a" { service "s" { deployment-unit "u" { container "c" { ' + body + " } } } }"
            model = parse(source)
            ports = model.services[0].deployment_units[0].containers[0].ports
            # Ports are a sequence; only compare texts whose port order agrees.
            outputs.add((ports, format(model)))
        assert len({text for _, text in outputs}) == 2

    def test_format_parse_roundtrip(self, sockshop):
        assert model_equals(parse(format(sockshop)), sockshop)
