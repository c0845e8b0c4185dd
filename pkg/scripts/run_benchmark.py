"""Run the synthetic benchmark and print per-sector quality, recovery and timing.

    python3 scripts/run_benchmark.py [--config configs/benchmark.yaml] [--out DIR] [--workers N]
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from sector_tagger.config import load_config
from sector_tagger.pipeline import run_experiment
from sector_tagger.textprep import stem_word

ROOT = Path(__file__).resolve().parents[1]


def planted_recovery(run_dir: Path, sector: str) -> float | None:
    """Share of a sector's planted stems in the integrated list of the final selection."""
    sel = run_dir / "selected" / f"{sector}.json"
    planted = run_dir / "corpus" / "planted.json"
    if not (sel.is_file() and planted.is_file()):
        return None
    names = set(json.loads(sel.read_text())["integrated"])
    stems = {stem_word(w) for w in json.loads(planted.read_text())[sector]}
    return len(stems & names) / len(stems)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "benchmark.yaml"))
    ap.add_argument("--out")
    ap.add_argument("--workers", type=int)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    env = dict(os.environ)
    if args.out:
        env["SECTOR_TAGGER_OUTPUT_DIR"] = json.dumps(args.out)
    cfg = load_config(args.config, env, base_dir=ROOT)
    t0 = time.perf_counter()
    result = run_experiment(cfg, args.workers)
    print(result.markdown)
    print(f"wall time: {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    timing = result.run_dir / "timing.md"
    if timing.is_file():
        print(timing.read_text())
    for sector in cfg.sectors:
        share = planted_recovery(result.run_dir, sector)
        if share is not None:
            print(f"planted stems recovered, {sector}: {share:.1%}")
    return 1 if result.failed else 0


if __name__ == "__main__":
    sys.exit(main())
