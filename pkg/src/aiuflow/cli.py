"""Command line interface: validate, plan, render, run, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import fixtures
from .adapt import plan_service
from .engine import (
    EngineError,
    Session,
    current_pages,
    start_session,
    submit,
)
from .metrics import Thresholds, load_device_profile, load_thresholds
from .model import AiuKind, Outcome, ServiceSpec
from .parser import SpecError, load_spec
from .render import emit_html, emit_text, render_detail, render_page
from .validation import check_document


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (FileNotFoundError, SpecError, ValueError, EngineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aiuflow",
        description="Compile and run device-adaptive interaction-unit services.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check spec files")
    p_validate.add_argument("specs", nargs="+", metavar="SPEC")
    p_validate.set_defaults(handler=_cmd_validate)

    p_plan = sub.add_parser("plan", help="compute an adaptation plan")
    p_plan.add_argument("--spec", required=True)
    p_plan.add_argument("--device", required=True)
    p_plan.add_argument("--thresholds")
    p_plan.add_argument("--out")
    p_plan.set_defaults(handler=_cmd_plan)

    p_render = sub.add_parser("render", help="render one activity's page")
    p_render.add_argument("--spec", required=True)
    p_render.add_argument("--device", required=True)
    p_render.add_argument("--node", required=True)
    p_render.add_argument("--page", type=int, default=1)
    p_render.add_argument("--detail", type=int, metavar="ROW")
    p_render.add_argument("--thresholds")
    p_render.add_argument("--format", choices=("text", "html"), default="text")
    p_render.set_defaults(handler=_cmd_render)

    p_run = sub.add_parser("run", help="interactive terminal walkthrough")
    p_run.add_argument("--spec", required=True)
    p_run.add_argument("--device", required=True)
    p_run.add_argument("--thresholds")
    p_run.set_defaults(handler=_cmd_run)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--specs", metavar="DIR")
    p_serve.add_argument("--devices", metavar="DIR")
    p_serve.add_argument("--thresholds")
    p_serve.add_argument("--ui", metavar="DIR")
    p_serve.set_defaults(handler=_cmd_serve)

    return parser


def _load_thresholds_arg(args: argparse.Namespace) -> Thresholds:
    if getattr(args, "thresholds", None):
        return load_thresholds(args.thresholds)
    return Thresholds()


def _cmd_validate(args: argparse.Namespace) -> int:
    failed = False
    for spec_arg in args.specs:
        path = Path(spec_arg)
        if path.is_file():
            source = path.read_text(encoding="utf-8")
        else:
            source = None
            name = spec_arg
            if name.endswith(fixtures.SPEC_SUFFIX):
                name = name[: -len(fixtures.SPEC_SUFFIX)]
            if name in fixtures.bundled_spec_names():
                from importlib import resources

                source = (
                    resources.files("aiuflow")
                    / "fixtures"
                    / f"{name}{fixtures.SPEC_SUFFIX}"
                ).read_text(encoding="utf-8")
        if source is None:
            print(f"{spec_arg}: not found", file=sys.stderr)
            failed = True
            continue
        diagnostics = check_document(source)
        if diagnostics:
            failed = True
            for d in diagnostics:
                print(f"{spec_arg}: {d}")
        else:
            print(f"{spec_arg}: ok")
    return 1 if failed else 0


def _cmd_plan(args: argparse.Namespace) -> int:
    spec = fixtures.resolve_spec_arg(args.spec)
    device = fixtures.resolve_device_arg(args.device)
    plan = plan_service(spec, device, _load_thresholds_arg(args))
    text = json.dumps(plan.to_doc(), indent=2, ensure_ascii=False)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    spec = fixtures.resolve_spec_arg(args.spec)
    device = fixtures.resolve_device_arg(args.device)
    if not spec.has_node(args.node):
        print(f"error: no node {args.node!r}", file=sys.stderr)
        return 1
    node = spec.node(args.node)
    plan = plan_service(spec, device, _load_thresholds_arg(args))
    if args.detail is not None:
        page = render_detail(node, args.detail, device, args.page)
    else:
        page = render_page(node, plan.per_node[args.node], device, args.page)
    print(emit_html(page) if args.format == "html" else emit_text(page))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    specs = None
    if args.specs:
        specs = {}
        for path in sorted(Path(args.specs).glob(f"*{fixtures.SPEC_SUFFIX}")):
            spec = load_spec(path)
            specs[spec.name] = spec
    devices = None
    if args.devices:
        devices = {}
        for path in sorted(Path(args.devices).glob(f"*{fixtures.DEVICE_SUFFIX}")):
            profile = load_device_profile(path)
            devices[profile.id] = profile
    app = create_app(
        specs,
        devices,
        _load_thresholds_arg(args),
        ui_dir=Path(args.ui) if args.ui else None,
    )
    port = int(os.environ.get("AIUFLOW_PORT", args.port))
    uvicorn.run(app, host=args.host, port=port)
    return 0


# ---------------------------------------------------------------------------
# Interactive run loop
# ---------------------------------------------------------------------------

_RUN_HELP = """\
commands:
  quit                 leave the current unit (Quit)
  ok                   press the OK button
  row N                select table row N (0-based)
  choose KEY           pick one choice
  multi KEY [KEY...]   pick several choices
  fill NAME=VAL ...    submit form fields
  cmd KEY              fire a browsing command
  point X Y            select an image point
  detail N             show the detail page for row N
  page N               show page N of the current unit
  at NODE ...          address a specific active node
  help                 this text
  exit                 abandon the session
"""


def _cmd_run(args: argparse.Namespace) -> int:
    spec = fixtures.resolve_spec_arg(args.spec)
    device = fixtures.resolve_device_arg(args.device)
    session = start_session(spec, device, _load_thresholds_arg(args))
    out = sys.stdout
    print(f"running {spec.name!r} on {device.id} "
          f"({device.rn}x{device.cn}); 'help' lists commands", file=out)
    _print_pages(session, out)
    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        if line == "exit":
            break
        if line == "help":
            print(_RUN_HELP, file=out)
            continue
        try:
            handled = _run_command(session, line, out)
        except EngineError as exc:
            print(f"! {exc}", file=out)
            continue
        except ValueError as exc:
            print(f"! {exc}", file=out)
            continue
        if session.status != "running":
            print("session finished.", file=out)
            print("bound variables:", file=out)
            for var in sorted(session.env):
                print(f"  {var} = {session.env[var]}", file=out)
            return 0
        if handled:
            _print_pages(session, out)
    return 0


def _print_pages(session: Session, out) -> None:
    for _, page in current_pages(session):
        print("-" * min(page.width, 40), file=out)
        print(emit_text(page), file=out)


def _pick_node(session: Session, kinds: tuple[AiuKind, ...]) -> str:
    candidates = [
        node_id
        for node_id in sorted(session.active)
        if session.spec.node(node_id).aiu is not None
        and session.spec.node(node_id).aiu.kind in kinds
    ]
    if not candidates:
        raise ValueError(f"no active node accepts this command")
    if len(candidates) > 1:
        raise ValueError(
            f"ambiguous: use 'at NODE ...' (candidates: {', '.join(candidates)})"
        )
    return candidates[0]


def _run_command(session: Session, line: str, out) -> bool:
    """Execute one run-loop command; returns True when pages should reprint."""
    parts = line.split()
    node: Optional[str] = None
    if parts[0] == "at":
        if len(parts) < 3:
            raise ValueError("usage: at NODE COMMAND ...")
        node = parts[1]
        parts = parts[2:]
    verb, rest = parts[0], parts[1:]

    if verb == "page":
        if len(rest) != 1:
            raise ValueError("usage: page N")
        target = node or next(iter(sorted(session.active)))
        from .engine import render_session_page

        page = render_session_page(session, target, int(rest[0]))
        print(emit_text(page), file=out)
        return False

    if verb == "detail":
        if len(rest) != 1:
            raise ValueError("usage: detail N")
        target = node or _pick_node(
            session, (AiuKind.INTERACT_TABLE, AiuKind.BROWSE_TABLE)
        )
        page = render_detail(
            session.spec.node(target), int(rest[0]), session.device,
            env=session.env,
        )
        print(emit_text(page), file=out)
        return False

    outcome: Outcome
    if verb == "quit":
        target = node or next(iter(sorted(session.active)))
        outcome = Outcome.null()
    elif verb == "ok":
        target = node or _pick_node(session, (AiuKind.BROWSE_MESSAGE,))
        outcome = Outcome.ok()
    elif verb == "row":
        if len(rest) != 1:
            raise ValueError("usage: row N")
        target = node or _pick_node(
            session, (AiuKind.INTERACT_TABLE,)
        )
        outcome = Outcome.tuple_selected(int(rest[0]))
    elif verb == "choose":
        if len(rest) != 1:
            raise ValueError("usage: choose KEY")
        target = node or _pick_node(session, (AiuKind.SELECT_CHOICE,))
        outcome = Outcome.choice(rest[0])
    elif verb == "multi":
        if not rest:
            raise ValueError("usage: multi KEY [KEY...]")
        target = node or _pick_node(session, (AiuKind.SELECT_MULTIPLE_CHOICE,))
        outcome = Outcome.choices(rest)
    elif verb == "fill":
        target = node or _pick_node(session, (AiuKind.FILL_LIST,))
        values = {}
        for item in rest:
            if "=" not in item:
                raise ValueError(f"expected NAME=VALUE, got {item!r}")
            name, _, value = item.partition("=")
            values[name] = _coerce_field(session.spec, target, name, value)
        outcome = Outcome.filled(values)
    elif verb == "cmd":
        if len(rest) != 1:
            raise ValueError("usage: cmd KEY")
        target = node or next(iter(sorted(session.active)))
        outcome = Outcome.command(rest[0])
    elif verb == "point":
        if len(rest) != 2:
            raise ValueError("usage: point X Y")
        target = node or _pick_node(
            session, (AiuKind.INTERACT_IMAGE,)
        )
        outcome = Outcome.point(int(rest[0]), int(rest[1]))
    else:
        raise ValueError(f"unknown command {verb!r} ('help' lists commands)")

    submit(session, target, outcome)
    return True


def _coerce_field(spec: ServiceSpec, node_id: str, name: str, value: str):
    node = spec.node(node_id)
    if node.aiu is not None:
        for f in node.aiu.fields:
            if f.name == name and f.value_type.value == "integer":
                try:
                    return int(value)
                except ValueError:
                    return value
    return value


if __name__ == "__main__":
    sys.exit(main())
