"""Article collections, the raw-to-canonical sector merge, and label statistics."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

SECTORS = ("financial", "health", "technology", "property", "energy", "insurance")
SECTOR_LABELS = {
    "financial": "Financial",
    "health": "Health",
    "technology": "Technology",
    "property": "Property",
    "energy": "Energy",
    "insurance": "Insurance",
}


class CorpusError(ValueError):
    """Raised for malformed corpus, taxonomy, or merge-map input."""


def normalize_name(name: str) -> str:
    return re.sub(r"\s+", " ", name).strip().casefold()


@dataclass(frozen=True)
class SectorMergeMap:
    """Raw industry names mapped onto the six canonical sectors.

    Lookup is case-insensitive after whitespace normalization; names
    without an entry map to nothing, except the canonical sector ids,
    which map to themselves so that deriving sectors is idempotent.
    """

    entries: Mapping[str, str]

    def __post_init__(self):
        normalized = {}
        for raw, sector in self.entries.items():
            if sector not in SECTORS:
                raise CorpusError(f"merge map: {raw!r} maps to unknown sector {sector!r}")
            normalized[normalize_name(raw)] = sector
        missing = set(SECTORS) - set(normalized.values())
        if missing:
            raise CorpusError(f"merge map has no raw name for sectors: {sorted(missing)}")
        object.__setattr__(self, "entries", normalized)

    def sector_of(self, raw: str) -> str | None:
        name = normalize_name(raw)
        return self.entries.get(name, name if name in SECTORS else None)

    def derive(self, raw_tags: Iterable[str]) -> frozenset[str]:
        return frozenset(s for s in map(self.sector_of, raw_tags) if s is not None)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "SectorMergeMap":
        if path is None:
            text = resources.files("sector_tagger").joinpath("resources/merge_map.json").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        data = json.loads(text)
        if not isinstance(data, dict):
            raise CorpusError(f"merge map must be a JSON object: {path}")
        return cls(data)

    @classmethod
    def default(cls) -> "SectorMergeMap":
        return cls.load(None)


@dataclass(frozen=True)
class TopicTaxonomy:
    topics: frozenset[str]
    parent: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "topics", frozenset(self.topics))
        object.__setattr__(self, "parent", dict(self.parent))
        for child, par in self.parent.items():
            if child not in self.topics:
                raise CorpusError(f"taxonomy: child topic {child!r} is not a known topic")
            if par not in self.topics:
                raise CorpusError(f"taxonomy: parent topic {par!r} is not a known topic")
        for topic in self.parent:
            seen = {topic}
            node = topic
            while node in self.parent:
                node = self.parent[node]
                if node in seen:
                    raise CorpusError(f"taxonomy: parent cycle through {topic!r}")
                seen.add(node)

    def ancestors(self, topic: str) -> list[str]:
        out = []
        while topic in self.parent:
            topic = self.parent[topic]
            out.append(topic)
        return out

    def to_dict(self) -> dict:
        return {"topics": sorted(self.topics), "parent": dict(sorted(self.parent.items()))}

    @classmethod
    def from_dict(cls, data: Mapping) -> "TopicTaxonomy":
        try:
            return cls(frozenset(data["topics"]), dict(data.get("parent", {})))
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"taxonomy: malformed object ({exc})") from exc

    @classmethod
    def load(cls, path: str | Path) -> "TopicTaxonomy":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", "utf-8")


@dataclass(frozen=True)
class Article:
    id: str
    title: str
    body: str
    topic_tags: frozenset[str] = frozenset()
    raw_sector_tags: tuple[str, ...] = ()
    sectors: frozenset[str] = frozenset()

    @property
    def unlabelled(self) -> bool:
        return not self.raw_sector_tags

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "body": self.body,
            "topics": sorted(self.topic_tags),
            "sectors_raw": list(self.raw_sector_tags),
        }


def make_article(record: Mapping, merge: SectorMergeMap) -> Article:
    raw = tuple(record.get("sectors_raw", ()))
    return Article(
        id=record["id"],
        title=record.get("title", ""),
        body=record.get("body", ""),
        topic_tags=frozenset(record.get("topics", ())),
        raw_sector_tags=raw,
        sectors=merge.derive(raw),
    )


_FIELD_TYPES = {"id": str, "title": str, "body": str, "topics": list, "sectors_raw": list}


def _check_record(record, lineno: int) -> None:
    if not isinstance(record, dict):
        raise CorpusError(f"line {lineno}: expected a JSON object")
    for name, kind in _FIELD_TYPES.items():
        if name not in record:
            raise CorpusError(f"line {lineno}: missing field {name!r}")
        if not isinstance(record[name], kind):
            raise CorpusError(f"line {lineno}: field {name!r} must be {kind.__name__}")
    if not record["id"]:
        raise CorpusError(f"line {lineno}: empty id")
    for name in ("topics", "sectors_raw"):
        if not all(isinstance(v, str) for v in record[name]):
            raise CorpusError(f"line {lineno}: field {name!r} must hold strings")


def parse_corpus(lines: Iterable[str], taxonomy: TopicTaxonomy | None, merge: SectorMergeMap) -> list[Article]:
    articles = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        _check_record(record, lineno)
        if record["id"] in seen:
            raise CorpusError(f"line {lineno}: duplicate id {record['id']!r}")
        seen.add(record["id"])
        if taxonomy is not None:
            unknown = sorted(set(record["topics"]) - taxonomy.topics)
            if unknown:
                raise CorpusError(f"line {lineno}: unknown topic tag(s) {unknown}")
        articles.append(make_article(record, merge))
    return articles


def load_corpus(path: str | Path, taxonomy: TopicTaxonomy | None, merge: SectorMergeMap) -> list[Article]:
    """Read a JSON-lines corpus file into articles with derived sectors."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        return parse_corpus(fh, taxonomy, merge)


def dump_corpus(articles: Iterable[Article], with_sectors: bool = False) -> str:
    out = io.StringIO()
    for art in articles:
        record = art.to_record()
        if with_sectors:
            record["sectors"] = [s for s in SECTORS if s in art.sectors]
        out.write(json.dumps(record, ensure_ascii=False, sort_keys=False) + "\n")
    return out.getvalue()


def save_corpus(articles: Iterable[Article], path: str | Path, with_sectors: bool = False) -> None:
    Path(path).write_text(dump_corpus(articles, with_sectors), "utf-8")


def filter_for_training(corpus: list[Article]) -> list[Article]:
    """Drop articles nobody assigned any industry to.

    Articles tagged only with out-of-scope industries stay: they are
    negatives for every sector.
    """
    return [a for a in corpus if a.raw_sector_tags]


def sector_labels(corpus: list[Article], sector: str) -> np.ndarray:
    return np.fromiter((sector in a.sectors for a in corpus), dtype=np.int8, count=len(corpus))


@dataclass(frozen=True)
class CorpusStats:
    total: int
    labelled_any: int
    labelled_six: int
    multi_sector: int
    per_sector_counts: dict[str, int]
    co_occurrence: np.ndarray

    @property
    def labelled_any_pct(self) -> float:
        return 100.0 * self.labelled_any / self.total

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "labelled_any": self.labelled_any,
            "labelled_any_pct": round(self.labelled_any_pct, 1),
            "labelled_six": self.labelled_six,
            "multi_sector": self.multi_sector,
            "per_sector_counts": dict(self.per_sector_counts),
            "co_occurrence": self.co_occurrence.tolist(),
        }


def compute_stats(corpus: list[Article]) -> CorpusStats:
    if not corpus:
        raise CorpusError("cannot compute statistics of an empty corpus")
    index = {s: i for i, s in enumerate(SECTORS)}
    co = np.zeros((len(SECTORS), len(SECTORS)), dtype=np.int64)
    per_sector = dict.fromkeys(SECTORS, 0)
    for art in corpus:
        for s in art.sectors:
            per_sector[s] += 1
        for a, b in combinations(sorted(art.sectors, key=index.get), 2):
            co[index[a], index[b]] += 1
            co[index[b], index[a]] += 1
    return CorpusStats(
        total=len(corpus),
        labelled_any=sum(1 for a in corpus if a.raw_sector_tags),
        labelled_six=sum(1 for a in corpus if a.sectors),
        multi_sector=sum(1 for a in corpus if len(a.sectors) >= 2),
        per_sector_counts=per_sector,
        co_occurrence=co,
    )


def cooccurrence_csv(stats: CorpusStats) -> str:
    """Render the co-occurrence block as an upper-triangular CSV table."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    labels = [SECTOR_LABELS[s] for s in SECTORS]
    writer.writerow([""] + labels)
    for i, label in enumerate(labels):
        row = [label]
        for j in range(len(SECTORS)):
            row.append(str(stats.co_occurrence[i, j]) if j > i else "-")
        writer.writerow(row)
    return out.getvalue()
