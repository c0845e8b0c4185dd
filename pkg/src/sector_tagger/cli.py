"""Command-line front end.

Exit codes: 0 success, 1 validation or usage error, 2 data error, 3 internal
error.  Standard output carries only the primary report of each command;
logging and diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import ENV_PREFIX, ConfigError, apply_env_overrides, dump_config, load_config, load_yaml, validate_config
from .corpus import (
    SECTORS,
    CorpusError,
    SectorMergeMap,
    TopicTaxonomy,
    compute_stats,
    cooccurrence_csv,
    filter_for_training,
    load_corpus,
    parse_corpus,
    save_corpus,
)
from .evaluation.cv import CvParams, FeatureParams, prepare_corpus
from .evaluation.metrics import DEFAULT_GREY, DEFAULT_THRESHOLD, in_grey_zone
from .features import FeatureSpace, FeatureSpaceError, vectorize_many
from .learners import ModelFormatError, load_model_meta, predict_proba
from .learners.io import model_from_dict, read_model_file
from .pipeline import ReportError, render_reports, run_experiment
from .selection import SelectionError, load_selected, save_selected, select_features, selected_csv
from .synthetic import SynthSpec, generate_synthetic
from .textprep import load_stopwords, preprocess

log = logging.getLogger("sector_tagger")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="override the configured random seed")
    parser.add_argument("--workers", type=int, default=default, help="worker processes for the experiment matrix")
    parser.add_argument(
        "--log-level",
        default=argparse.SUPPRESS if suppress else "WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sector-tagger", description="Industry-sector tagging toolkit.")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="validate a corpus and write it normalized with statistics")
    p.add_argument("--input", required=True, help="corpus JSON-lines file")
    p.add_argument("--taxonomy", help="topic taxonomy JSON (unknown topic tags are rejected)")
    p.add_argument("--merge-map", help="raw-industry to sector map JSON (default: bundled)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus with planted vocabulary")
    p.add_argument("--docs", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", help="YAML/JSON file with generator settings; flags override it")
    p.add_argument("--vocab-per-sector", type=int)
    p.add_argument("--background-vocab", type=int)
    p.add_argument("--label-noise", type=float)
    p.add_argument("--sectors", help="comma-separated sector subset")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("evaluate", parents=[common], help="run the cross-validation experiment matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the configured output directory")
    p.add_argument("--strict", action="store_true", help="exit 3 if any cell failed")
    p.add_argument("--dry-run", action="store_true", help="print the resolved configuration and stop")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("select-features", parents=[common], help="run feature selection on a training corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--merge-map")
    p.add_argument("--sector", required=True, choices=SECTORS)
    p.add_argument("--config", help="take feature and selection settings from this run config")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_select_features)

    p = sub.add_parser("predict", parents=[common], help="score articles with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True, help="feature space JSON saved with the model")
    p.add_argument("--selected", help="selected-features JSON restricting the space")
    p.add_argument("--input", required=True, help="articles as JSON lines ('-' for stdin)")
    p.add_argument("--sector", help="sector name for the output (default: from the model file)")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--grey", type=float, nargs=2, default=list(DEFAULT_GREY), metavar=("LOW", "HIGH"))
    p.add_argument("--stopwords", help="stop-word list used at training time (default: bundled)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", parents=[common], help="regenerate human-readable outputs of a run")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def _environ(args) -> dict:
    env = dict(os.environ)
    if args.seed is not None:
        env[ENV_PREFIX + "SEED"] = str(args.seed)
    if args.workers is not None:
        env[ENV_PREFIX + "WORKERS"] = str(args.workers)
    return env


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, "utf-8")


def stats_csv(stats) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["statistic", "value"])
    for key in ("total", "labelled_any", "labelled_six", "multi_sector"):
        w.writerow([key, getattr(stats, key)])
    for sector, n in stats.per_sector_counts.items():
        w.writerow([f"sector:{sector}", n])
    return out.getvalue()


def cmd_ingest(args) -> int:
    taxonomy = TopicTaxonomy.load(args.taxonomy) if args.taxonomy else None
    merge = SectorMergeMap.load(args.merge_map)
    articles = load_corpus(args.input, taxonomy, merge)
    if not articles:
        raise DataError(f"{args.input}: no articles")
    stats = compute_stats(articles)
    training = filter_for_training(articles)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(training, out / "corpus.jsonl", with_sectors=True)
    _write(out / "stats.csv", stats_csv(stats))
    _write(out / "cooccurrence.csv", cooccurrence_csv(stats))
    _write(out / "stats.json", json.dumps(stats.to_dict(), indent=2) + "\n")
    sys.stdout.write(stats_csv(stats))
    log.info("%d articles read, %d kept for training", len(articles), len(training))
    return EXIT_OK


def cmd_synth(args) -> int:
    values = {}
    if args.spec:
        try:
            values = yaml.safe_load(Path(args.spec).read_text("utf-8")) or {}
        except OSError as exc:
            raise DataError(f"cannot read {args.spec}: {exc}") from exc
        if not isinstance(values, dict):
            raise UsageError(f"{args.spec}: generator settings must be a mapping")
    for name in ("docs", "vocab_per_sector", "background_vocab", "label_noise", "seed"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if args.sectors:
        values["sectors"] = [s.strip() for s in args.sectors.split(",") if s.strip()]
    try:
        spec = SynthSpec.from_dict(values)
        spec.validate()
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid synthetic spec: {exc}") from exc
    paths = generate_synthetic(spec).save(args.out)
    for p in paths.values():
        print(p)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    env = _environ(args)
    if args.out:
        env[ENV_PREFIX + "OUTPUT_DIR"] = json.dumps(args.out)
    cfg = load_config(args.config, env)
    if args.dry_run:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    result = run_experiment(cfg)
    sys.stdout.write(result.markdown)
    if result.failed:
        for key in result.failed:
            print(f"failed cell: {key}: {result.manifest['cells'][key]['error']}", file=sys.stderr)
        return EXIT_INTERNAL if args.strict else EXIT_OK
    return EXIT_OK


def _selection_settings(args) -> tuple[FeatureParams, object]:
    if not args.config:
        params = CvParams()
        return params.features, params.selection
    raw = load_yaml(args.config)
    # only the features and selection sections matter for a standalone selection
    raw.setdefault("seed", 0)
    raw.setdefault("output_dir", args.out)
    raw.setdefault("corpus", {"path": args.corpus, "taxonomy": args.taxonomy})
    params = validate_config(apply_env_overrides(raw, _environ(args))).cv_params()
    return params.features, params.selection


def cmd_select_features(args) -> int:
    features, selection = _selection_settings(args)
    taxonomy = TopicTaxonomy.load(args.taxonomy)
    merge = SectorMergeMap.load(args.merge_map)
    articles = filter_for_training(load_corpus(args.corpus, taxonomy, merge))
    prepared = prepare_corpus(articles, taxonomy)
    y = prepared.labels(args.sector)
    if not len(y) or y.min() == y.max():
        raise DataError(f"sector {args.sector!r} needs positive and negative articles in {args.corpus}")
    rows = np.arange(len(y))
    space = prepared.counts.space_for(rows, taxonomy, features.weighting, features.min_df, features.propagate_topics)
    X = prepared.counts.matrix(rows, space)
    sel = select_features(X, y, args.sector, selection, 0 if args.seed is None else args.seed)
    out = Path(args.out)
    save_selected(sel, space, out / "selected.json")
    space.save(out / "features.json")
    text = selected_csv(load_selected(out / "selected.json"))
    _write(out / "selected.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def _read_input(path: str) -> list[str]:
    if path == "-":
        lines = sys.stdin.read().splitlines()
    else:
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"input file not found: {p}")
        lines = p.read_text("utf-8").splitlines()
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if isinstance(record, dict):
            # unlabelled articles are the normal case at inference time
            record.setdefault("title", "")
            record.setdefault("topics", [])
            record.setdefault("sectors_raw", [])
        out.append(json.dumps(record))
    return out


def cmd_predict(args) -> int:
    lo, hi = args.grey
    if not (0.0 < args.threshold < 1.0) or not (0.0 <= lo <= hi <= 1.0):
        raise UsageError("threshold must lie in (0, 1) and the grey zone must satisfy 0 <= LOW <= HIGH <= 1")
    data = read_model_file(args.model)
    model = model_from_dict(data)
    meta = load_model_meta(args.model)
    space = FeatureSpace.load(args.features)
    if args.selected:
        space = space.restrict_to_names(load_selected(args.selected)["integrated"])
    expected = meta.get("feature_space")
    if expected and expected != space.digest():
        raise DataError(
            f"feature space {args.features} (digest {space.digest()}) is not the one the model was trained on ({expected})"
        )
    if model.feature_dimension != space.dimension:
        raise DataError(f"model expects {model.feature_dimension} features but the feature space has {space.dimension}")
    sector = args.sector or meta.get("sector") or ""
    articles = parse_corpus(_read_input(args.input), None, SectorMergeMap.default())
    if not articles:
        return EXIT_OK
    stops = load_stopwords(args.stopwords)
    X = vectorize_many(articles, [preprocess(a, stops) for a in articles], space)
    scores = predict_proba(model, X)
    out = sys.stdout
    for art, s in zip(articles, scores):
        s = float(s)
        record = {
            "id": art.id,
            "sector": sector,
            "score": s,
            "decision": s >= args.threshold,
            "grey_zone": bool(in_grey_zone(s, (lo, hi))),
        }
        out.write(json.dumps(record) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    markdown = render_reports(args.run_dir)
    sys.stdout.write(markdown)
    return EXIT_OK


_USAGE_ERRORS = (ConfigError, UsageError)
_DATA_ERRORS = (
    DataError,
    CorpusError,
    FeatureSpaceError,
    ModelFormatError,
    ReportError,
    SelectionError,
    FileNotFoundError,
    json.JSONDecodeError,
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=getattr(logging, args.log_level), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        log.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
