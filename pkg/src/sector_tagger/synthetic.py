"""Synthetic legal-article corpora with planted per-sector vocabulary.

The real article collection is proprietary, so experiments and acceptance
benchmarks run on corpora generated here.  Every sector owns a disjoint set
of pseudo-word stems; a document about a sector draws a fraction of its
tokens from that set and picks up sector-correlated topic tags.  The
planted stems are returned so feature-selection recall can be measured.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import SECTORS, Article, SectorMergeMap, TopicTaxonomy, save_corpus
from .textprep import load_stopwords, stem_word

RAW_SECTOR_NAMES = {
    "financial": ("Banking & Credit", "Securities & Investment"),
    "health": ("Healthcare", "Pharmaceuticals & BioTech"),
    "technology": ("Technology",),
    "property": ("Property",),
    "energy": ("Oil & Gas", "Utility"),
    "insurance": ("Insurance",),
}
OUT_OF_SCOPE_SECTORS = (
    "Transport",
    "Media & Telecoms",
    "Retail & Leisure",
    "Manufacturing",
    "Agriculture",
    "Government & Public Sector",
    "Aviation",
    "Shipping",
)

SECTOR_TOPICS = {
    "financial": ("Finance and Banking", ("Banking Regulation", "Capital Markets", "Fund Management", "Fintech")),
    "health": ("Life Sciences", ("Clinical Trials", "Medical Devices", "Pharmaceutical Regulation", "Health Data")),
    "technology": ("Technology Law", ("Data Protection", "Cybersecurity", "Software Licensing", "Telecoms")),
    "property": (
        "Real Estate and Construction",
        ("Commercial Property", "Construction Disputes", "Landlord and Tenant", "Planning"),
    ),
    "energy": ("Energy and Natural Resources", ("Oil and Gas Regulation", "Renewables", "Mining", "Power Generation")),
    "insurance": (
        "Insurance Law",
        ("Reinsurance", "Insurance Claims", "Insurance Regulation", "Professional Indemnity"),
    ),
}
GENERAL_TOPICS = {
    "Accounting and Audit": ("Audit", "Taxation", "Forensic Accounting"),
    "Litigation, Mediation & Arbitration": ("Litigation", "Arbitration", "Mediation"),
    "Corporate/Commercial Law": ("Mergers and Acquisitions", "Contract Law", "Insolvency"),
    "Employment and HR": ("Employee Benefits", "Discrimination", "Workplace Safety"),
    "Intellectual Property": ("Patent", "Trademark", "Copyright"),
    "Transport": ("Aviation Finance", "Shipping Law", "Rail"),
}

_DISCLAIMER = (
    " Disclaimer: The content of this article is intended to provide a general guide "
    "to the subject matter. Specialist advice should be sought about your specific circumstances."
)
_FILLER = ("the", "of", "and", "to", "in", "for", "which", "that", "with", "by")
_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


@dataclass(frozen=True)
class SynthSpec:
    docs: int = 5000
    vocab_per_sector: int = 200
    background_vocab: int = 2000
    docs_multi_label_fraction: float = 0.12
    label_noise: float = 0.05
    seed: int = 20240601
    sectors: tuple[str, ...] = SECTORS
    planted_fraction: float = 0.15
    other_sector_fraction: float = 0.23
    unlabelled_fraction: float = 0.0
    doc_length: tuple[int, int] = (80, 200)
    topic_correlation: float = 0.7

    def validate(self) -> None:
        errors = []
        for name in ("docs", "vocab_per_sector", "background_vocab"):
            if getattr(self, name) <= 0:
                errors.append(f"{name} must be positive")
        for name in (
            "docs_multi_label_fraction",
            "label_noise",
            "planted_fraction",
            "other_sector_fraction",
            "unlabelled_fraction",
            "topic_correlation",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                errors.append(f"{name} must lie in [0, 1], got {value}")
        if self.other_sector_fraction + self.unlabelled_fraction >= 1.0:
            errors.append("other_sector_fraction + unlabelled_fraction must be < 1")
        if not self.sectors or any(s not in SECTORS for s in self.sectors):
            errors.append(f"sectors must be a non-empty subset of {SECTORS}")
        lo, hi = self.doc_length
        if not 1 <= lo <= hi:
            errors.append("doc_length must satisfy 1 <= min <= max")
        total_vocab = self.vocab_per_sector * len(self.sectors) + self.background_vocab
        if total_vocab > _max_words():
            errors.append(f"requested vocabulary of {total_vocab} words exceeds the generator limit {_max_words()}")
        if errors:
            raise ValueError("; ".join(errors))

    def target_positive_rate(self) -> float:
        """Expected fraction of training (non-unlabelled) documents carrying a sector."""
        six = 1.0 - self.other_sector_fraction - self.unlabelled_fraction
        multi = self.docs_multi_label_fraction if len(self.sectors) > 1 else 0.0
        return six * (1.0 + multi) / len(self.sectors) / (1.0 - self.unlabelled_fraction)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        data = dict(data)
        if "sectors" in data:
            data["sectors"] = tuple(data["sectors"])
        if "doc_length" in data:
            data["doc_length"] = tuple(data["doc_length"])
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SyntheticCorpus:
    articles: list[Article]
    taxonomy: TopicTaxonomy
    planted: dict[str, list[str]]
    spec: SynthSpec
    background: list[str] = field(default_factory=list)

    def save(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus": out / "corpus.jsonl",
            "taxonomy": out / "taxonomy.json",
            "planted": out / "planted.json",
        }
        save_corpus(self.articles, paths["corpus"])
        self.taxonomy.save(paths["taxonomy"])
        planted = {"spec": self.spec.to_dict(), "planted": self.planted}
        paths["planted"].write_text(json.dumps(planted, indent=2) + "\n", "utf-8")
        return paths


def _max_words() -> int:
    c, v = len(_CONSONANTS), len(_VOWELS)
    return c * v * c * v * c


def synthetic_taxonomy() -> TopicTaxonomy:
    topics = set()
    parent = {}
    for par, children in list(SECTOR_TOPICS.values()) + list(GENERAL_TOPICS.items()):
        topics.add(par)
        for child in children:
            topics.add(child)
            parent[child] = par
    return TopicTaxonomy(frozenset(topics), parent)


def _pseudo_words(rng: np.random.Generator, count: int, stops: frozenset[str]) -> list[str]:
    """Distinct pronounceable words that are their own Porter stem."""
    words: list[str] = []
    seen: set[str] = set()
    cons = np.array(list(_CONSONANTS))
    vows = np.array(list(_VOWELS))
    while len(words) < count:
        batch = max(64, 2 * (count - len(words)))
        c = rng.integers(0, len(cons), size=(batch, 3))
        v = rng.integers(0, len(vows), size=(batch, 2))
        for row_c, row_v in zip(c, v):
            w = cons[row_c[0]] + vows[row_v[0]] + cons[row_c[1]] + vows[row_v[1]] + cons[row_c[2]]
            if w in seen or w in stops or stem_word(w) != w:
                continue
            seen.add(w)
            words.append(w)
            if len(words) == count:
                break
    return words


def _flip_probabilities(spec: SynthSpec) -> tuple[float, float]:
    # positive->negative at the noise rate; negative->positive scaled so the
    # expected positive rate is unchanged
    pi = spec.target_positive_rate()
    p_pos = spec.label_noise
    p_neg = min(1.0, spec.label_noise * pi / (1.0 - pi)) if pi < 1.0 else 0.0
    return p_pos, p_neg


def generate_synthetic(spec: SynthSpec) -> SyntheticCorpus:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    stops = load_stopwords()
    sectors = list(spec.sectors)
    n_sec = len(sectors)

    words = _pseudo_words(rng, spec.vocab_per_sector * n_sec + spec.background_vocab, stops)
    planted = {s: words[i * spec.vocab_per_sector : (i + 1) * spec.vocab_per_sector] for i, s in enumerate(sectors)}
    background = words[n_sec * spec.vocab_per_sector :]
    zipf = 1.0 / np.arange(1, len(background) + 1)
    zipf /= zipf.sum()

    taxonomy = synthetic_taxonomy()
    general_children = [c for children in GENERAL_TOPICS.values() for c in children]
    p_flip_pos, p_flip_neg = _flip_probabilities(spec)
    lo, hi = spec.doc_length

    articles = []
    for i in range(spec.docs):
        u = rng.random()
        if u < spec.unlabelled_fraction:
            kind = "unlabelled"
            content: list[str] = []
        elif u < spec.unlabelled_fraction + spec.other_sector_fraction:
            kind = "other"
            content = []
        else:
            kind = "six"
            first = sectors[rng.integers(n_sec)]
            content = [first]
            if n_sec > 1 and rng.random() < spec.docs_multi_label_fraction:
                rest = [s for s in sectors if s != first]
                content.append(rest[rng.integers(len(rest))])

        length = int(rng.integers(lo, hi + 1))
        tokens = list(rng.choice(background, size=length, p=zipf))
        if content:
            is_planted = rng.random(length) < spec.planted_fraction
            for pos in np.flatnonzero(is_planted):
                vocab = planted[content[rng.integers(len(content))]]
                tokens[pos] = vocab[rng.integers(len(vocab))]

        topics = set()
        for s in content:
            for _ in range(int(rng.integers(1, 4))):
                if rng.random() < spec.topic_correlation:
                    children = SECTOR_TOPICS[s][1]
                    topics.add(children[rng.integers(len(children))])
                else:
                    topics.add(general_children[rng.integers(len(general_children))])
        for _ in range(int(rng.integers(0, 3))):
            topics.add(general_children[rng.integers(len(general_children))])

        labels = set(content)
        if kind != "unlabelled":
            for s in sectors:
                if s in labels:
                    if rng.random() < p_flip_pos:
                        labels.discard(s)
                elif rng.random() < p_flip_neg:
                    labels.add(s)
        raw: list[str] = []
        for s in sectors:
            if s in labels:
                names = RAW_SECTOR_NAMES[s]
                raw.append(names[rng.integers(len(names))])
        if kind != "unlabelled" and (kind == "other" or not raw):
            raw.append(OUT_OF_SCOPE_SECTORS[rng.integers(len(OUT_OF_SCOPE_SECTORS))])

        articles.append(
            Article(
                id=f"syn-{i:05d}",
                title=_render_title(rng, tokens),
                body=_render_body(rng, tokens),
                topic_tags=frozenset(topics),
                raw_sector_tags=tuple(raw),
                sectors=frozenset(labels),
            )
        )
    return SyntheticCorpus(articles, taxonomy, planted, spec, background)


def _render_title(rng: np.random.Generator, tokens: list[str]) -> str:
    picks = rng.choice(len(tokens), size=min(5, len(tokens)), replace=False)
    return " ".join(tokens[k] for k in sorted(picks)).capitalize()


def _render_body(rng: np.random.Generator, tokens: list[str]) -> str:
    parts = ["<p>"]
    for k, tok in enumerate(tokens):
        parts.append(tok)
        r = rng.random()
        if r < 0.25:
            parts.append(_FILLER[rng.integers(len(_FILLER))])
        elif r < 0.27:
            parts.append("&amp;")
        elif r < 0.28:
            parts.append(str(int(rng.integers(1990, 2030))))
        if k % 12 == 11:
            parts[-1] += "."
            if rng.random() < 0.3:
                parts.append("</p> <p>")
    parts.append("</p>")
    return " ".join(parts) + _DISCLAIMER


def check_merge_consistency(corpus: SyntheticCorpus, merge: SectorMergeMap | None = None) -> bool:
    """True when every article's sectors equal the merge-map image of its raw tags."""
    merge = merge or SectorMergeMap.default()
    return all(a.sectors == merge.derive(a.raw_sector_tags) for a in corpus.articles)
