from cnadsl.generators.base import (
    SERVICE_LABEL,
    UNIT_LABEL,
    CapabilityGap,
    Concept,
    ManifestSet,
    UnsupportedConcept,
)
from cnadsl.generators.compose import generate_compose
from cnadsl.generators.kubernetes import generate_kubernetes
from cnadsl.generators.marathon import generate_marathon

GENERATORS = {
    "kubernetes": generate_kubernetes,
    "compose": generate_compose,
    "marathon": generate_marathon,
}

__all__ = [
    "GENERATORS",
    "SERVICE_LABEL",
    "UNIT_LABEL",
    "CapabilityGap",
    "Concept",
    "ManifestSet",
    "UnsupportedConcept",
    "generate_compose",
    "generate_kubernetes",
    "generate_marathon",
]
