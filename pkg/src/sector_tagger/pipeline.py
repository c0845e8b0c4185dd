"""Experiment orchestration: sector x algorithm x feature-mode CV matrix, artifacts and manifest.

Every file except ``manifest.json`` and the timing table it feeds is a
deterministic function of the config and the input files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import multiprocessing
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .corpus import CorpusStats, SectorMergeMap, TopicTaxonomy, compute_stats, cooccurrence_csv, filter_for_training, load_corpus
from .evaluation.cv import CvParams, PreparedCorpus, compare, fold_seed, prepare_corpus, resampled_scores, run_cv, summarize
from .evaluation.folds import stratified_folds
from .evaluation.metrics import PooledScores, cv_roc, error_analysis, errors_csv
from .evaluation.reports import metrics_csv, metrics_markdown, order_sectors, timing_markdown
from .learners import fit_model, save_model
from .selection import load_selected, save_selected, select_features, selected_csv
from .synthetic import SynthSpec, generate_synthetic
from .textprep import load_stopwords

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "sector-tagger/run-manifest"
# rendered from manifest timings, so never byte-stable across runs
VOLATILE_FILES = ("manifest.json", "timing.md")
# seed component for fits on the whole training corpus; fold indices stay far below it
FINAL_FIT = 999_999


class ReportError(RuntimeError):
    """A run directory lacks an artifact needed for reporting."""


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", "utf-8")


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, "utf-8")


def cell_dir(run_dir: Path, sector: str, algorithm: str, mode: str) -> Path:
    return Path(run_dir) / "cells" / sector / f"{algorithm}-{mode}"


@dataclass
class LoadedInputs:
    articles: list
    taxonomy: TopicTaxonomy
    stops: frozenset[str]
    digests: dict
    planted: dict | None = None


def load_inputs(cfg: RunConfig) -> LoadedInputs:
    c = cfg.corpus
    stops = load_stopwords(c.stopwords)
    digests = {}
    if c.stopwords:
        digests["stopwords"] = {"path": c.stopwords, "sha256": sha256_file(c.stopwords)}
    if c.synthetic is not None:
        synth = generate_synthetic(SynthSpec.from_dict(c.synthetic))
        spec_json = json.dumps(synth.spec.to_dict(), sort_keys=True)
        digests["synthetic_spec"] = {"sha256": hashlib.sha256(spec_json.encode()).hexdigest()}
        return LoadedInputs(synth.articles, synth.taxonomy, stops, digests, synth.planted)
    merge = SectorMergeMap.load(c.merge_map)
    taxonomy = TopicTaxonomy.load(c.taxonomy)
    articles = load_corpus(c.path, taxonomy, merge)
    for key in ("path", "taxonomy", "merge_map"):
        p = getattr(c, key)
        if p:
            digests[key] = {"path": p, "sha256": sha256_file(p)}
    return LoadedInputs(articles, taxonomy, stops, digests)


@dataclass
class CellOutcome:
    sector: str
    algorithm: str
    mode: str
    status: str
    error: str | None = None
    pooled: PooledScores | None = None
    report: object = None


# shared with forked workers; set before the pool starts
_STATE: dict = {}


def _run_sector(sector: str) -> list[CellOutcome]:
    cfg: RunConfig = _STATE["cfg"]
    prepared: PreparedCorpus = _STATE["prepared"]
    params = cfg.cv_params()
    y = prepared.labels(sector)
    folds = stratified_folds(y, params.folds, cfg.seed)
    cache: dict = {}
    out = []
    for mode in cfg.feature_modes:
        for algorithm in cfg.algorithms:
            try:
                pooled, report = run_cv(prepared, sector, algorithm, mode, params, cfg.seed, folds, cache)
                out.append(CellOutcome(sector, algorithm, mode, "ok", None, pooled, report))
            except Exception as exc:  # one failing cell must not sink the matrix
                log.exception("cell %s/%s/%s failed", sector, algorithm, mode)
                out.append(CellOutcome(sector, algorithm, mode, "failed", f"{type(exc).__name__}: {exc}"))
    return out


def _final_models(sector: str) -> dict:
    """Fit deployable models on every training article; returns per-item status."""
    cfg: RunConfig = _STATE["cfg"]
    prepared: PreparedCorpus = _STATE["prepared"]
    run_dir = Path(cfg.output_dir)
    params = cfg.cv_params()
    y = prepared.labels(sector)
    rows = np.arange(len(y))
    status = {}
    if y.min() == y.max():
        return {"models": "skipped: a single class in the training corpus"}
    fp = params.features
    space = prepared.counts.space_for(rows, prepared.taxonomy, fp.weighting, fp.min_df, fp.propagate_topics)
    X = prepared.counts.matrix(rows, space)
    spaces = {"full": (space, X)}
    if "selected" in cfg.feature_modes:
        try:
            sel = select_features(X, y, sector, params.selection, fold_seed(cfg.seed, FINAL_FIT))
            save_selected(sel, space, run_dir / "selected" / f"{sector}.json")
            restricted = space.restrict(sel.integrated)
            spaces["selected"] = (restricted, prepared.counts.matrix(rows, restricted))
            status["selection"] = "ok"
        except Exception as exc:
            log.exception("final selection for %s failed", sector)
            status["selection"] = f"failed: {type(exc).__name__}: {exc}"
    (run_dir / "models" / sector).mkdir(parents=True, exist_ok=True)
    for mode, (sp_, Xm) in spaces.items():
        if mode not in cfg.feature_modes:
            continue
        sp_.save(run_dir / "models" / sector / f"features-{mode}.json")
        for algorithm in cfg.algorithms:
            key = f"{algorithm}-{mode}"
            try:
                model = fit_model(algorithm, Xm, y, params.learner_params(algorithm), fold_seed(cfg.seed, FINAL_FIT))
                meta = {"sector": sector, "algorithm": algorithm, "feature_mode": mode, "feature_space": sp_.digest()}
                save_model(model, run_dir / "models" / sector / f"{key}.json", meta)
                status[key] = "ok"
            except Exception as exc:
                log.exception("final model %s/%s failed", sector, key)
                status[key] = f"failed: {type(exc).__name__}: {exc}"
    return status


def _resamples(sector: str) -> dict:
    cfg: RunConfig = _STATE["cfg"]
    prepared: PreparedCorpus = _STATE["prepared"]
    try:
        scores = resampled_scores(prepared, sector, list(cfg.algorithms), cfg.cv.resamples, cfg.seed, cfg.cv_params())
    except Exception as exc:
        log.exception("resampled comparison for %s failed", sector)
        return {"error": f"{type(exc).__name__}: {exc}"}
    return {"algorithms": list(cfg.algorithms), "auc": scores["auc"].tolist(), "f_score": scores["f_score"].tolist()}


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=min(workers, len(items)), mp_context=ctx) as pool:
        return list(pool.map(fn, items))


@dataclass
class RunResult:
    run_dir: Path
    manifest: dict
    markdown: str
    failed: list = field(default_factory=list)


def run_experiment(cfg: RunConfig, workers: int | None = None) -> RunResult:
    """Run the whole matrix, write artifacts, render reports, and write the manifest."""
    workers = cfg.workers if workers is None else workers
    run_dir = Path(cfg.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    stage = {}

    t0 = time.perf_counter()
    inputs = load_inputs(cfg)
    stats = compute_stats(inputs.articles)
    training = filter_for_training(inputs.articles)
    stage["load"] = time.perf_counter() - t0
    write_json(run_dir / "config.json", cfg.to_dict())
    write_json(run_dir / "corpus" / "stats.json", stats.to_dict())
    if inputs.planted is not None:
        write_json(run_dir / "corpus" / "planted.json", inputs.planted)

    t0 = time.perf_counter()
    prepared = prepare_corpus(training, inputs.taxonomy, inputs.stops)
    stage["preprocess"] = time.perf_counter() - t0
    _STATE.update(cfg=cfg, prepared=prepared)

    sectors = list(cfg.sectors)
    t0 = time.perf_counter()
    outcomes = [o for batch in _map(_run_sector, sectors, workers) for o in batch]
    stage["cross_validation"] = time.perf_counter() - t0

    cells = {}
    timings = {}
    failed = []
    for o in outcomes:
        key = f"{o.sector}/{o.algorithm}/{o.mode}"
        cells[key] = {"status": o.status, "error": o.error}
        if o.status != "ok":
            failed.append(key)
            continue
        d = cell_dir(run_dir, o.sector, o.algorithm, o.mode)
        write_text(d / "scores.csv", o.pooled.to_csv())
        write_json(d / "report.json", o.report.to_dict())
        timings[key] = {
            "folds": [f.times for f in o.report.folds],
            "totals": {s: o.report.stage_time(s) for s in ("selection", "vectorize", "train", "predict")},
        }

    comparisons = {}
    if cfg.cv.resamples >= 2 and len(cfg.algorithms) >= 2 and "full" in cfg.feature_modes:
        t0 = time.perf_counter()
        for sector, res in zip(sectors, _map(_resamples, sectors, workers)):
            if "error" in res:
                comparisons[sector] = res["error"]
            else:
                write_json(run_dir / "comparison" / f"{sector}.json", res)
                comparisons[sector] = "ok"
        stage["resamples"] = time.perf_counter() - t0

    final = {}
    if cfg.save_models:
        t0 = time.perf_counter()
        final = dict(zip(sectors, _map(_final_models, sectors, workers)))
        stage["final_models"] = time.perf_counter() - t0
    _STATE.clear()

    manifest = {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_at": started,
        "config": cfg.to_dict(),
        "inputs": inputs.digests,
        "cells": cells,
        "failed_cells": failed,
        "comparisons": comparisons,
        "final_models": final,
        "timings": {"stages": stage, "cells": timings},
    }
    write_json(run_dir / "manifest.json", manifest)
    t0 = time.perf_counter()
    markdown = render_reports(run_dir)
    manifest["timings"]["stages"]["render"] = time.perf_counter() - t0
    manifest["artifacts"] = artifact_digests(run_dir)
    write_json(run_dir / "manifest.json", manifest)
    return RunResult(run_dir, manifest, markdown, failed)


def artifact_digests(run_dir: Path) -> dict:
    run_dir = Path(run_dir)
    return {
        str(p.relative_to(run_dir)): sha256_file(p)
        for p in sorted(run_dir.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }


def _require(path: Path) -> Path:
    if not path.is_file():
        raise ReportError(f"missing artifact: {path}")
    return path


def _read_json(path: Path):
    return json.loads(_require(path).read_text("utf-8"))


def render_reports(run_dir: str | Path) -> str:
    """Regenerate every human-readable output from a run directory's data files.

    Returns the Markdown result tables (also written to ``results.md``).
    """
    run_dir = Path(run_dir)
    manifest = _read_json(run_dir / "manifest.json")
    cfg = _read_json(run_dir / "config.json")
    stats = _read_json(run_dir / "corpus" / "stats.json")
    threshold = cfg["cv"]["threshold"]
    grey = tuple(cfg["cv"]["grey"])
    beta = cfg["cv"]["f_beta"]
    sectors = order_sectors(cfg["sectors"])
    algorithms = list(cfg["algorithms"])

    co = CorpusStats(
        stats["total"], stats["labelled_any"], stats["labelled_six"], stats["multi_sector"],
        stats["per_sector_counts"], np.array(stats["co_occurrence"]),
    )
    write_text(run_dir / "corpus" / "cooccurrence.csv", cooccurrence_csv(co))

    params = CvParams(threshold=threshold, grey=grey, f_beta=beta)
    results = {}
    long_rows = {}
    for mode in cfg["feature_modes"]:
        for sector in sectors:
            for algorithm in algorithms:
                key = f"{sector}/{algorithm}/{mode}"
                if manifest["cells"].get(key, {}).get("status") != "ok":
                    continue
                d = cell_dir(run_dir, sector, algorithm, mode)
                pooled = PooledScores.from_csv(_require(d / "scores.csv").read_text("utf-8"))
                write_text(d / "roc.csv", cv_roc(pooled).to_csv() if pooled.n_pos and pooled.n_neg else "threshold,fpr,tpr\n")
                breakdown = error_analysis(pooled, threshold, grey)
                write_text(d / "errors.csv", errors_csv(breakdown))
                rep = summarize(pooled, sector, algorithm, mode, params)
                results[(mode, algorithm, sector)] = {"auc": rep.auc, "f_score": rep.f_score}
                long_rows[(sector, algorithm, mode)] = {
                    "auc": rep.auc,
                    "f_score": rep.f_score,
                    "false_negatives": breakdown.false_negatives,
                    "false_positives": breakdown.false_positives,
                    "grey_zone": breakdown.grey_zone_count,
                }
    write_text(run_dir / "metrics.csv", metrics_csv(long_rows))

    flags = _comparison_flags(run_dir, sectors, algorithms)
    parts = []
    titles = {"full": "Full feature set", "selected": "Selected features"}
    for mode in cfg["feature_modes"]:
        block = {(a, s): v for (m, a, s), v in results.items() if m == mode}
        if mode == "full" and flags:
            note = "Bold: best in column, or indistinguishable from it (Wilcoxon signed-rank p > 0.001 over resampled CV)."
            parts.append(metrics_markdown(titles[mode], algorithms, sectors, block, flags, note))
        else:
            parts.append(metrics_markdown(titles[mode], algorithms, sectors, block, None, "Bold: best in column."))
    if manifest["failed_cells"]:
        parts.append("### Failed cells\n\n" + "".join(f"- {k}: {manifest['cells'][k]['error']}\n" for k in manifest["failed_cells"]))
    markdown = "\n".join(parts)
    write_text(run_dir / "results.md", markdown)

    for sector in sectors:
        p = run_dir / "selected" / f"{sector}.json"
        if p.is_file():
            write_text(run_dir / "selected" / f"{sector}.csv", selected_csv(load_selected(p)))

    rows = []
    cell_times = manifest["timings"]["cells"]
    for sector in sectors:
        for algorithm in algorithms:
            full = cell_times.get(f"{sector}/{algorithm}/full")
            sel = cell_times.get(f"{sector}/{algorithm}/selected")
            if full and sel:
                rows.append({
                    "sector": sector,
                    "algorithm": algorithm,
                    "full": full["totals"]["vectorize"] + full["totals"]["train"],
                    "selected": sel["totals"]["vectorize"] + sel["totals"]["train"],
                    "selection": sel["totals"]["selection"],
                })
    if rows:
        write_text(run_dir / "timing.md", timing_markdown(rows))
    return markdown


def _comparison_flags(run_dir: Path, sectors, algorithms) -> dict | None:
    """Bold flags per metric and column from the resampled comparisons, if all sectors have one."""
    data = {}
    for sector in sectors:
        p = run_dir / "comparison" / f"{sector}.json"
        if not p.is_file():
            return None
        d = json.loads(p.read_text("utf-8"))
        if d["algorithms"] != list(algorithms):
            return None
        data[sector] = d
    flags = {}
    for metric in ("auc", "f_score"):
        per = {s: np.array(data[s][metric]) for s in sectors}
        flags[metric] = {s: compare(algorithms, per[s], metric).indistinguishable().tolist() for s in sectors}
        mean = np.mean([per[s] for s in sectors], axis=0)
        flags[metric]["mean"] = compare(algorithms, mean, metric).indistinguishable().tolist()
    return flags
