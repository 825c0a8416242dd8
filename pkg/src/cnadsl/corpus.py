"""Golden-file cases: ``<root>/<case>/app.cna`` + ``<root>/<case>/expected/<target>/*``.

Regenerate expected outputs after an intentional generator change with::

    python -m cnadsl.corpus corpus/ --update
"""

from __future__ import annotations

import argparse
import difflib
import sys
from dataclasses import dataclass, field
from pathlib import Path

from cnadsl.generators import GENERATORS, ManifestSet
from cnadsl.parser import parse
from cnadsl.validator import validate

TARGETS = tuple(GENERATORS)


@dataclass(frozen=True)
class GoldenCase:
    name: str
    source: Path
    expected: Path

    def expected_dir(self, target: str) -> Path:
        return self.expected / target

    def generate(self, target: str) -> ManifestSet:
        model = parse(self.source.read_text(encoding="utf-8"))
        report = validate(model)
        if not report.resolved:
            raise ValueError(f"golden case {self.name} does not validate: {report.errors[0].render()}")
        return GENERATORS[target](model)


@dataclass
class GoldenResult:
    case: str
    target: str
    diffs: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.diffs

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{status} {self.case}/{self.target}"]
        lines.extend(self.diffs.values())
        return "\n".join(lines)


def load_case(directory: Path | str) -> GoldenCase:
    directory = Path(directory)
    return GoldenCase(directory.name, directory / "app.cna", directory / "expected")


def discover(root: Path | str) -> list[GoldenCase]:
    root = Path(root)
    return [load_case(p) for p in sorted(root.iterdir()) if (p / "app.cna").is_file()]


def run_golden(case: GoldenCase, target: str) -> GoldenResult:
    result = GoldenResult(case.name, target)
    manifests = case.generate(target)
    exp_dir = case.expected_dir(target)
    generated = dict(manifests.documents)
    expected = {p.name: p.read_text(encoding="utf-8") for p in sorted(exp_dir.glob("*"))} if exp_dir.is_dir() else {}
    for name in sorted(generated.keys() | expected.keys()):
        want, got = expected.get(name, ""), generated.get(name, "")
        if want != got:
            diff = difflib.unified_diff(
                want.splitlines(keepends=True), got.splitlines(keepends=True),
                fromfile=f"expected/{target}/{name}" if name in expected else "/dev/null",
                tofile=f"generated/{target}/{name}" if name in generated else "/dev/null")
            result.diffs[name] = "".join(diff)
    return result


def update(case: GoldenCase, target: str) -> list[Path]:
    exp_dir = case.expected_dir(target)
    exp_dir.mkdir(parents=True, exist_ok=True)
    for stale in exp_dir.glob("*"):
        stale.unlink()
    written = []
    for name, body in case.generate(target).documents:
        path = exp_dir / name
        path.write_bytes(body.encode("utf-8"))
        written.append(path)
    return written


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="python -m cnadsl.corpus", description="check or refresh golden outputs")
    ap.add_argument("root", type=Path)
    ap.add_argument("--update", action="store_true", help="rewrite expected outputs")
    args = ap.parse_args(argv)
    failed = 0
    for case in discover(args.root):
        for target in TARGETS:
            if args.update:
                for path in update(case, target):
                    print(path)
                continue
            result = run_golden(case, target)
            print(result)
            failed += not result.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
