from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

import yaml

from cnadsl.model import DeploymentUnit, Service

# Generator-owned labels. Tag keys cannot contain '/', so these never clash.
SERVICE_LABEL = "cnadsl/service"
UNIT_LABEL = "cnadsl/unit"


class Concept(enum.Enum):
    AUTOSCALING = "AUTOSCALING"
    LOAD_BALANCING = "LOAD_BALANCING"
    SCHEDULING = "SCHEDULING"
    LABELING = "LABELING"


@dataclass(frozen=True)
class CapabilityGap:
    concept: Concept
    target: str
    detail: str

    def __str__(self) -> str:
        return f"gap[{self.concept.value}] {self.target}: {self.detail}"


class UnsupportedConcept(Exception):
    pass


@dataclass(frozen=True)
class ManifestSet:
    documents: tuple[tuple[str, str], ...]
    gaps: tuple[CapabilityGap, ...] = ()
    target: str = ""

    def __post_init__(self):
        names = [n for n, _ in self.documents]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate manifest file names: {names}")

    @property
    def filenames(self) -> list[str]:
        return [n for n, _ in self.documents]

    def body(self, filename: str) -> str:
        return dict(self.documents)[filename]


def effective_labels(service: Service, unit: DeploymentUnit) -> dict[str, str]:
    """Unit tags plus the injected ``app`` label when the unit has none."""
    labels = dict(unit.tags)
    labels.setdefault("app", service.name)
    return labels


class _Dumper(yaml.SafeDumper):
    def ignore_aliases(self, data):
        return True


class Quoted(str):
    """String always emitted double-quoted (e.g. ``"8080:80"`` port specs)."""


def _quoted_representer(dumper, data):
    return dumper.represent_scalar("tag:yaml.org,2002:str", str(data), style='"')


def _str_representer(dumper, data):
    if "\n" in data:
        return dumper.represent_scalar("tag:yaml.org,2002:str", data, style="|")
    return dumper.represent_str(data)


_Dumper.add_representer(str, _str_representer)
_Dumper.add_representer(Quoted, _quoted_representer)


def dump_yaml(doc: Any, sort_keys: bool = True) -> str:
    text = yaml.dump(
        doc,
        Dumper=_Dumper,
        sort_keys=sort_keys,
        default_flow_style=False,
        indent=2,
        width=1 << 16,
        allow_unicode=True,
        line_break="\n",
    )
    return text if text.endswith("\n") else text + "\n"


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def sort_keys_deep(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: sort_keys_deep(obj[k]) for k in sorted(obj)}
    if isinstance(obj, list):
        return [sort_keys_deep(v) for v in obj]
    return obj
