"""Command line front end.

Exit codes: 0 success, 1 domain error (printed to stderr), 2 usage error
(argparse prints the synopsis to stderr). Scripted runs swap the wall clock
for a ticking fake so repeated invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import WorkbenchConfig, load_config, make_provider, model_for
from .diffs import diff_to_dict, diff_versions
from .dialogue import finalize_session, next_question, start_session, submit_expert_reply
from .editdiff import render_edit_markup, sentence_edit_diff, span_to_dict
from .errors import SessionComplete, WorkbenchError
from .generation import GenerationContext, build_taxonomy
from .icr import (
    AnnotationRecord,
    CoderKind,
    agreement_report,
    agreement_report_to_dict,
    llm_annotate,
    render_agreement_table,
    resolve_label,
    unit_text,
)
from .merge import merge, merge_report_to_dict
from .serialization import serialize
from .store import WorkbenchStore
from .taxonomy import Taxonomy, TickingClock, now_rfc3339


def _emit_json(payload) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False))


def render_tree(tax: Taxonomy) -> str:
    lines = [f"taxonomy {tax.taxonomy_id} v{tax.version}  "
             f"domain={tax.domain} task={tax.task}"]
    for root_id in tax.roots:
        root = tax.nodes[root_id]
        lines.append(f"* {root.label}")
        for desc_id in root.children:
            desc = tax.nodes[desc_id]
            lines.append(f"  - {desc.description}")
            for ex_id in desc.children:
                pair = tax.nodes[ex_id].example
                lines.append(f'    . "{pair.original}" -> "{pair.revised}"')
    return "\n".join(lines) + "\n"


def _store(cfg: WorkbenchConfig) -> WorkbenchStore:
    clock = TickingClock() if cfg.script else now_rfc3339
    return WorkbenchStore(cfg.store_path, clock=clock)


def _config(args: argparse.Namespace) -> WorkbenchConfig:
    overrides = {
        "store_path": getattr(args, "store", None),
        "script": getattr(args, "script", None),
        "output": getattr(args, "output", None),
        "model": getattr(args, "model", None),
        "bind": getattr(args, "bind", None),
    }
    return load_config(getattr(args, "config", None), overrides=overrides)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg = _config(args)
    store = _store(cfg)
    provider = make_provider(cfg)
    ctx = GenerationContext(domain=args.domain, task=args.task,
                            min_intentions=args.min_intentions)
    tax = build_taxonomy(ctx, provider, model_for(cfg, "generate"),
                         taxonomy_id=args.id, clock=store.clock)
    store.put_taxonomy_version(tax)
    if cfg.output == "json":
        sys.stdout.write(serialize(tax).decode("utf-8"))
    else:
        print(f"stored {tax.taxonomy_id} v{tax.version}")
        sys.stdout.write(render_tree(tax))
    return 0


def cmd_interview(args) -> int:
    cfg = _config(args)
    store = _store(cfg)
    provider = make_provider(cfg)
    store.ensure_no_active_session(args.taxonomy)
    tax = store.get_taxonomy(args.taxonomy)
    session = start_session(tax, args.expert, session_id=args.session,
                            clock=store.clock,
                            on_commit=store.put_taxonomy_version)
    store.save_session(session)
    while True:
        try:
            question = next_question(session)
        except SessionComplete:
            final = finalize_session(session)
            store.save_session(session)
            print(f"session complete; finalized at v{final.version}")
            return 0
        print(f"[interviewer] {question}")
        line = sys.stdin.readline()
        if not line:
            print("input ended; session saved for later")
            return 0
        reply = line.rstrip("\n")
        print(f"[expert] {reply}")
        _, outcome = submit_expert_reply(session, reply, provider,
                                         model=model_for(cfg, "creator"))
        store.save_session(session)
        if outcome.no_change:
            print("[creator] no change")
        else:
            print(f"[creator] revised to v{outcome.revised.version}: "
                  f"{outcome.change_rationale}")


def cmd_merge(args) -> int:
    cfg = _config(args)
    store = _store(cfg)
    inputs = [store.get_taxonomy(tax_id) for tax_id in args.ids]
    provider = make_provider(cfg) if args.semantic else None
    merged, report = merge(inputs, provider=provider,
                           model=model_for(cfg, "merge"),
                           taxonomy_id=args.out, clock=store.clock)
    store.put_taxonomy_version(merged)
    if cfg.output == "json":
        _emit_json({"taxonomy_id": merged.taxonomy_id, "version": merged.version,
                    "report": merge_report_to_dict(report)})
    else:
        print(f"merged {len(inputs)} input(s) into "
              f"{merged.taxonomy_id} v{merged.version}")
        print(f"collapsed {len(report.collapsed)} node group(s)")
        sys.stdout.write(render_tree(merged))
    return 0


def cmd_diff(args) -> int:
    cfg = _config(args)
    store = _store(cfg)
    diff = diff_versions(store.get_taxonomy(args.id, args.from_version),
                         store.get_taxonomy(args.id, args.to_version))
    if cfg.output == "json":
        _emit_json(diff_to_dict(diff))
        return 0
    print(f"{diff.taxonomy_id}: v{diff.old_version} -> v{diff.new_version}")
    for entry in diff.added:
        node = entry.node
        text = node.label or node.description or (
            f'"{node.example.original}" -> "{node.example.revised}"')
        print(f"+ {entry.node_id} {node.level.value}: {text}")
    for entry in diff.removed:
        print(f"- {entry.node_id}")
    for change in diff.modified:
        print(f"~ {change.node_id} {change.field}: "
              f"{change.before!r} -> {change.after!r}")
    if diff.is_empty:
        print("no changes")
    return 0


def cmd_template_add(args) -> int:
    cfg = _config(args)
    store = _store(cfg)
    with open(args.original, encoding="utf-8") as handle:
        original = handle.read()
    with open(args.revised, encoding="utf-8") as handle:
        revised = handle.read()
    payload = store.put_template(original, revised, template_id=args.id)
    spans = sentence_edit_diff(original, revised)
    if cfg.output == "json":
        _emit_json({**payload, "spans": [span_to_dict(s) for s in spans],
                    "markup": render_edit_markup(original, spans)})
    else:
        print(f"stored {payload['template_id']} with {len(spans)} edit span(s)")
        print(render_edit_markup(original, spans))
    return 0


def cmd_annotate(args) -> int:
    cfg = _config(args)
    store = _store(cfg)
    template = store.get_template(args.template)
    tax = store.get_taxonomy(args.taxonomy)
    spans = sentence_edit_diff(template["original"], template["revised"])
    if args.llm:
        records = llm_annotate(args.template, spans, tax, make_provider(cfg),
                               coder_id=args.coder,
                               model=model_for(cfg, "annotate"))
    else:
        records = []
        for index, span in enumerate(spans):
            print(f"[{index}] {unit_text(span)}")
            line = sys.stdin.readline()
            if not line:
                print("input ended; nothing stored", file=sys.stderr)
                return 1
            records.append(AnnotationRecord(
                coder_id=args.coder, coder_kind=CoderKind.HUMAN,
                template_id=args.template, unit_index=index,
                label=resolve_label(tax, line.rstrip("\n"))))
    store.put_annotations(args.template, args.coder, records)
    print(f"stored {len(records)} annotation(s) for "
          f"{args.template}/{args.coder}")
    return 0


def cmd_icr(args) -> int:
    cfg = _config(args)
    store = _store(cfg)
    store.get_template(args.template)
    report = agreement_report(store.get_annotations(args.template))
    if cfg.output == "json":
        _emit_json(agreement_report_to_dict(report))
    else:
        sys.stdout.write(render_agreement_table(report))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    cfg = _config(args)
    store = _store(cfg)
    host, _, port = cfg.bind.rpartition(":")
    app = create_app(store, cfg, app_dir=args.app_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port),
                log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--store", help="store directory (default ./workbench-data)")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--script", help="scripted provider file; offline and deterministic")
    common.add_argument("--output", choices=("table", "json"))
    common.add_argument("--model", help="default model name for live providers")

    parser = argparse.ArgumentParser(
        prog="taxwb",
        description="Build, review, merge, and measure writing-intention taxonomies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common],
                       help="generate a new taxonomy for a domain/task")
    p.add_argument("--domain", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--id", help="taxonomy id (default derived from domain/task)")
    p.add_argument("--min-intentions", type=int, default=10)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("interview", parents=[common],
                       help="run an expert review session in the terminal")
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--expert", default="expert")
    p.add_argument("--session", help="session id (default random)")
    p.set_defaults(func=cmd_interview)

    p = sub.add_parser("merge", parents=[common],
                       help="merge stored taxonomies into a new one")
    p.add_argument("ids", nargs="+", metavar="ID")
    p.add_argument("--out", help="id for the merged taxonomy")
    p.add_argument("--semantic", action="store_true",
                   help="also propose near-duplicate merges via the provider")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("diff", parents=[common],
                       help="show changes between two stored versions")
    p.add_argument("id", metavar="ID")
    p.add_argument("--from", dest="from_version", type=int, required=True)
    p.add_argument("--to", dest="to_version", type=int, required=True)
    p.set_defaults(func=cmd_diff)

    template = sub.add_parser("template", help="manage annotation templates")
    template_sub = template.add_subparsers(dest="template_command", required=True)
    p = template_sub.add_parser("add", parents=[common],
                                help="store an original/revised text pair")
    p.add_argument("--original", required=True, help="path to the original text")
    p.add_argument("--revised", required=True, help="path to the revised text")
    p.add_argument("--id", help="template id (default tpl-N)")
    p.set_defaults(func=cmd_template_add)

    p = sub.add_parser("annotate", parents=[common],
                       help="label a template's edit spans against a taxonomy")
    p.add_argument("--template", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--coder", required=True)
    p.add_argument("--llm", action="store_true",
                   help="let the configured provider label instead of stdin")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("icr", parents=[common],
                       help="inter-coder agreement for a template's annotations")
    p.add_argument("--template", required=True)
    p.set_defaults(func=cmd_icr)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP API")
    p.add_argument("--bind", help="ADDR:PORT (default 127.0.0.1:8000)")
    p.add_argument("--app-dir", help="static web app directory to mount at /app")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
