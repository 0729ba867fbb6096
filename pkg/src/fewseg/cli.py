"""Command-line surface binding the library into dataset / template workflows.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 generation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .curriculum import ScheduleConfig, step_params
from .dataset import (
    generate_dataset,
    load_config,
    load_manifest,
    load_mask,
    polygons_from_payload,
)
from .errors import (
    ConfigError,
    EncodingError,
    FewsegError,
    InfeasibleConstraintError,
    LayoutGenerationError,
    ManifestError,
    OracleProtocolError,
    ParameterError,
    PolygonParseError,
    ShapeError,
    TemplateInputError,
)
from .evaluation import EpisodeRecord, aggregate, score_episode
from .geometry import connected_components, extract_polygon_gt
from .instruction import (
    ShotExample,
    parse_polygon_output,
    render_incontext_instruction,
    render_multishot_instruction,
    render_task_instruction,
)
from .tablegen import CorrespondingTable

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_GENERATION = 3

_DATA_ERRORS = (ConfigError, ManifestError, PolygonParseError, OracleProtocolError,
                ShapeError, ParameterError, TemplateInputError, EncodingError)
_GENERATION_ERRORS = (LayoutGenerationError, InfeasibleConstraintError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text, encoding="utf-8")


def _read_input(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _schedule_rows(args) -> list:
    cfg = ScheduleConfig()
    if args.config:
        gen = load_config(args.config)
        cfg = gen.schedule
    if args.n is not None:
        return [step_params(args.n, cfg)]
    stride = args.stride or max(1, cfg.total_steps // 12)
    return [step_params(n, cfg) for n in range(0, cfg.total_steps, stride)]


def cmd_schedule(args) -> int:
    rows = _schedule_rows(args)
    if args.format == "json":
        payload = [{"n": r.n, "a": r.a, "b": r.b, "c": r.c, "d": r.d, "m": r.m}
                   for r in rows]
        _emit(json.dumps(payload if args.n is None else payload[0], indent=2), args.out)
    elif args.format == "csv":
        lines = ["n,a,b,c,d,M"]
        lines += [f"{r.n},{r.a!r},{r.b!r},{r.c!r},{r.d!r},{r.m}" for r in rows]
        _emit("\n".join(lines), args.out)
    else:
        lines = [f"n={r.n} a={r.a:g} b={r.b:g} c={r.c:g} d={r.d:g} M={r.m}"
                 for r in rows]
        _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    config = load_config(args.config)
    manifest = generate_dataset(config, args.out, jobs=args.jobs)
    sys.stderr.write(f"wrote {manifest.count} pairs to {args.out}\n")
    return EXIT_OK


def cmd_parse(args) -> int:
    text = _read_input(getattr(args, "in"))
    parsed = parse_polygon_output(text)
    payload = {
        "objects": [[list(v) for v in p.vertices] for p in parsed.objects],
        "spans": [list(s) for s in parsed.spans],
    }
    _emit(json.dumps(payload, indent=2), args.out)
    return EXIT_OK


def cmd_extract(args) -> int:
    mask = load_mask(args.mask)
    polygons = extract_polygon_gt(mask, min_area=args.min_area)
    payload = {"polygons": [[list(v) for v in p.vertices] for p in polygons]}
    _emit(json.dumps(payload, indent=2), args.out)
    return EXIT_OK


def _load_bundle(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read bundle {path}: {exc}") from exc


def _bundle_shot(shot: dict) -> ShotExample:
    table = CorrespondingTable.from_record(shot["table"])
    regions = {r["id"]: _polygon(r["polygon"]) for r in shot["regions"]}
    gts = tuple(_polygon(p) for p in shot["ground_truth"])
    return ShotExample(gt_polygons=gts, table=table, region_polygons=regions)


def _polygon(payload):
    return polygons_from_payload([payload])[0]


def cmd_render(args) -> int:
    if args.kind == "task":
        if not (args.category and args.gt):
            raise ConfigError("render task needs --category and --gt")
        gt = parse_polygon_output(_read_input(args.gt))
        rendered = render_task_instruction(args.category, args.size, list(gt.objects))
    elif args.kind == "pretrain":
        if not (args.dataset and args.index is not None):
            raise ConfigError("render pretrain needs --dataset and --index")
        manifest = load_manifest(args.dataset, verify_files=False)
        try:
            record = manifest.pairs[args.index]
        except IndexError as exc:
            raise ConfigError(f"pair index {args.index} out of range") from exc
        text = (Path(args.dataset) / record.files["instruction"]).read_text("utf-8")
        _emit(text, args.out)
        return EXIT_OK
    elif args.kind in ("incontext", "multishot"):
        if not args.bundle:
            raise ConfigError(f"render {args.kind} needs --bundle")
        bundle = _load_bundle(args.bundle)
        shots = [_bundle_shot(s) for s in bundle["shots"]]
        if args.kind == "incontext":
            shot = shots[0]
            rendered = render_incontext_instruction(
                bundle["category"], bundle["attributes"], shot.table,
                shot.region_polygons)
        else:
            rendered = render_multishot_instruction(
                bundle["category"], bundle["attributes"], shots,
                bundle.get("size", 384))
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown render kind {args.kind!r}")
    _emit(rendered.text, args.out)
    return EXIT_OK


def cmd_score(args) -> int:
    manifest = load_manifest(args.dataset, verify_files=False)
    root = Path(args.dataset)
    pred_dir = Path(args.pred)
    fold_map = {}
    if args.folds:
        fold_map = {int(k): str(v) for k, v in
                    json.loads(Path(args.folds).read_text("utf-8")).items()}
    records: list[EpisodeRecord] = []
    folds: list[str] = []
    indices: list[int] = []
    for pair in manifest.pairs:
        pred_path = pred_dir / f"pred_{pair.index:05d}.txt"
        if not pred_path.is_file():
            continue
        parsed = parse_polygon_output(pred_path.read_text(encoding="utf-8"))
        gt_mask = load_mask(root / pair.files["query_mask"])
        gts = connected_components(gt_mask, min_area=manifest.min_area)
        records.append(score_episode(parsed, gts, manifest.size))
        folds.append(fold_map.get(pair.index, "all"))
        indices.append(pair.index)
    if not records:
        raise ManifestError(f"no predictions matching pred_*.txt under {pred_dir}")
    report = aggregate(records, folds)
    payload = report.to_dict()
    payload["per_episode"] = {
        str(i): r.to_dict() for i, r in zip(indices, records)
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    sys.stdout.write(report.to_text() + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fewseg",
                     description="Few-shot segmentation data synthesis and "
                                 "evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a pseudo-pair dataset")
    p.add_argument("--config", required=True, help="flat key=value config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("schedule", help="print curriculum parameters")
    p.add_argument("--n", type=int, default=None, help="single step index")
    p.add_argument("--stride", type=int, default=None, help="table stride")
    p.add_argument("--config", default=None, help="config file for schedule fields")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("render", help="render an instruction template")
    p.add_argument("kind", choices=["task", "incontext", "pretrain", "multishot"])
    p.add_argument("--category", default=None)
    p.add_argument("--size", type=int, default=384)
    p.add_argument("--gt", default=None, help="polygon tuple text file ('-' = stdin)")
    p.add_argument("--bundle", default=None, help="JSON bundle for incontext/multishot")
    p.add_argument("--dataset", default=None, help="dataset dir for pretrain")
    p.add_argument("--index", type=int, default=None, help="pair index for pretrain")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("parse", help="parse model polygon output")
    p.add_argument("--in", dest="in", default=None, help="input file ('-' = stdin)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("extract", help="extract 16-point polygons from a mask PNG")
    p.add_argument("--mask", required=True, help="8-bit single-channel mask image")
    p.add_argument("--min-area", type=int, default=16)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("score", help="score predictions against a dataset")
    p.add_argument("--dataset", required=True, help="generated dataset directory")
    p.add_argument("--pred", required=True, help="directory of pred_XXXXX.txt files")
    p.add_argument("--folds", default=None, help="JSON mapping pair index to fold")
    p.add_argument("--out", default=None, help="structured report file")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _GENERATION_ERRORS as exc:
        sys.stderr.write(f"generation failure: {exc}\n")
        return EXIT_GENERATION
    except _DATA_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except FewsegError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
