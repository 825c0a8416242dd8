"""``cnadsl`` command line.

Exit codes: 0 success, 1 validation errors (or ``fmt --check`` on a
non-canonical file), 2 I/O or parse failure, 3 strict-mode capability gap or
warning.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from cnadsl import diagnostics as dx
from cnadsl.diagnostics import Diagnostic
from cnadsl.generators import GENERATORS, ManifestSet, generate_kubernetes
from cnadsl.model import ApplicationModel, canonical_serialize, is_dns_label
from cnadsl.parser import parse_bytes
from cnadsl.report import render_usage
from cnadsl.validator import validate

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_STRICT = 0, 1, 2, 3


class _Failure(Exception):
    def __init__(self, code: int):
        self.code = code


def _emit(diags: list[Diagnostic], filename: str) -> None:
    color = dx.use_color(sys.stderr)
    for d in diags:
        print(d.render(filename, color), file=sys.stderr)


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError:
        print(f"{path}: error: no such file", file=sys.stderr)
    except OSError as exc:
        print(f"{path}: error: {exc.strerror or exc}", file=sys.stderr)
    raise _Failure(EXIT_IO)


def _load(path: Path, raw: bytes | None = None) -> tuple[ApplicationModel, list[Diagnostic]]:
    model, diags = parse_bytes(_read(path) if raw is None else raw)
    if model is None:
        _emit(diags, str(path))
        raise _Failure(EXIT_IO)
    return model, diags


def _load_valid(path: Path) -> tuple[ApplicationModel, list[Diagnostic]]:
    model, diags = _load(path)
    diags = diags + list(validate(model).diagnostics)
    _emit(diags, str(path))
    if dx.has_errors(diags):
        raise _Failure(EXIT_INVALID)
    return model, diags


def cmd_validate(args) -> int:
    _load_valid(args.file)
    return EXIT_OK


def generate_all(model: ApplicationModel, target: str, namespace: str = "default") -> dict[str, ManifestSet]:
    """Run one generator, or all of them concurrently for ``target == "all"``."""
    targets = list(GENERATORS) if target == "all" else [target]

    def run(name: str) -> ManifestSet:
        if name == "kubernetes":
            return generate_kubernetes(model, namespace)
        return GENERATORS[name](model)

    with ThreadPoolExecutor(max_workers=len(targets)) as pool:
        return dict(zip(targets, pool.map(run, targets)))


def cmd_generate(args) -> int:
    model, diags = _load_valid(args.file)
    results = generate_all(model, args.target, args.namespace)
    gaps = [g for ms in results.values() for g in ms.gaps]
    for gap in gaps:
        print(gap)
    if args.strict and (gaps or diags):
        print(f"{args.file}: strict mode: {len(gaps)} capability gap(s), {len(diags)} warning(s); nothing written",
              file=sys.stderr)
        return EXIT_STRICT
    for target, manifests in results.items():
        out_dir = args.out / target
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            for name, body in manifests.documents:
                path = out_dir / name
                path.write_bytes(body.encode("utf-8"))
                print(f"wrote {path}")
        except OSError as exc:
            print(f"{out_dir}: error: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def cmd_fmt(args) -> int:
    raw = _read(args.file)
    model, _ = _load(args.file, raw)
    text = canonical_serialize(model)
    if args.check:
        if raw.decode("utf-8-sig") == text:
            return EXIT_OK
        print(f"{args.file}: not canonically formatted", file=sys.stderr)
        return EXIT_INVALID
    if args.write:
        if raw != text.encode("utf-8"):
            args.file.write_bytes(text.encode("utf-8"))
        return EXIT_OK
    sys.stdout.write(text)
    return EXIT_OK


def cmd_inspect(args) -> int:
    model, _ = _load_valid(args.file)
    sys.stdout.write(render_usage(model))
    return EXIT_OK


def _namespace(value: str) -> str:
    if not is_dns_label(value):
        raise argparse.ArgumentTypeError(f"{value!r} is not a valid DNS-1123 label")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cnadsl", description="Compile cloud-native application definitions.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a definition")
    p.add_argument("file", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="generate platform descriptors")
    p.add_argument("file", type=Path)
    p.add_argument("--target", required=True, choices=[*GENERATORS, "all"])
    p.add_argument("--out", required=True, type=Path, help="output directory; files go to <out>/<target>/")
    p.add_argument("--namespace", default="default", type=_namespace, help="Kubernetes namespace")
    p.add_argument("--strict", action="store_true", help="fail (exit 3) on capability gaps or warnings")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fmt", help="print or rewrite the canonical form")
    p.add_argument("file", type=Path)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--write", action="store_true", help="rewrite the file in place")
    mode.add_argument("--check", action="store_true", help="exit 1 unless the file is already canonical")
    p.set_defaults(func=cmd_fmt)

    p = sub.add_parser("inspect", help="print the concept usage table")
    p.add_argument("file", type=Path)
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Failure as failure:
        return failure.code


if __name__ == "__main__":
    sys.exit(main())
