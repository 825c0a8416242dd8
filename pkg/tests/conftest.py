import json
from pathlib import Path

import pytest
import yaml

from cnadsl.corpus import discover, load_case
from cnadsl.parser import parse

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
COMPOSE_SCHEMA = json.loads((Path(__file__).parent / "schemas" / "compose_v3.0.json").read_text())
KUBERNETES_VERSION = "1.31.0"

_acceptance: list[tuple[str, str]] = []


def corpus_model(case: str):
    return parse((CORPUS / case / "app.cna").read_text(encoding="utf-8"))


@pytest.fixture
def payment():
    return corpus_model("payment")


@pytest.fixture
def sockshop():
    return corpus_model("sockshop")


@pytest.fixture
def golden_cases():
    return discover(CORPUS)


@pytest.fixture
def payment_case():
    return load_case(CORPUS / "payment")


def load_yaml(text: str):
    return yaml.safe_load(text)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'PASSED' else 'FAIL'}  {name}")
