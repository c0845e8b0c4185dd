from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from sector_tagger.corpus import SectorMergeMap
from sector_tagger.synthetic import SynthSpec, generate_synthetic

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance outcomes, printed once at the end of the session
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def merge_map() -> SectorMergeMap:
    return SectorMergeMap.default()


@pytest.fixture(scope="session")
def small_synth():
    """300 documents over all six sectors; shared read-only."""
    return generate_synthetic(SynthSpec(docs=300, vocab_per_sector=30, background_vocab=300, seed=3))
