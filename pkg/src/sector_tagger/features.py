"""Word-stem and topic-tag features with a frozen, persistable column layout."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Article, TopicTaxonomy

SPACE_FORMAT = "sector-tagger/feature-space"
SPACE_VERSION = 1
WEIGHTINGS = ("one_hot", "tf_idf")


class FeatureSpaceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FeatureSpace:
    """Column layout for word-stem features followed by topic features.

    ``selected`` optionally projects the space onto a subset of columns.
    Weights (including the tf-idf L2 norm) are always computed over the
    full word vocabulary before projection, so restricting a space and
    re-vectorizing gives exactly the masked full vectors.
    """

    words: tuple[str, ...]
    topics: tuple[str, ...]
    doc_freq: np.ndarray
    n_docs: int
    weighting: str = "tf_idf"
    min_df: int = 2
    propagate_topics: bool = True
    topic_parent: dict[str, str] = field(default_factory=dict)
    selected: np.ndarray | None = None

    def __post_init__(self):
        if self.weighting not in WEIGHTINGS:
            raise FeatureSpaceError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")
        object.__setattr__(self, "doc_freq", np.asarray(self.doc_freq, dtype=np.int64))
        if len(self.doc_freq) != len(self.words):
            raise FeatureSpaceError("doc_freq must align with words")
        if self.selected is not None:
            sel = np.asarray(self.selected, dtype=np.int64)
            if sel.size and (np.any(np.diff(sel) <= 0) or sel[0] < 0 or sel[-1] >= self.full_dimension):
                raise FeatureSpaceError("selected columns must be strictly increasing and in range")
            object.__setattr__(self, "selected", sel)
        object.__setattr__(self, "_word_index", {w: i for i, w in enumerate(self.words)})
        object.__setattr__(self, "_topic_index", {t: i for i, t in enumerate(self.topics)})

    @property
    def full_dimension(self) -> int:
        return len(self.words) + len(self.topics)

    @property
    def dimension(self) -> int:
        return self.full_dimension if self.selected is None else len(self.selected)

    @property
    def full_names(self) -> list[str]:
        return list(self.words) + [f"topic:{t}" for t in self.topics]

    @property
    def feature_names(self) -> list[str]:
        names = self.full_names
        if self.selected is None:
            return names
        return [names[i] for i in self.selected]

    def is_topic_column(self) -> np.ndarray:
        full = np.zeros(self.full_dimension, dtype=bool)
        full[len(self.words) :] = True
        return full if self.selected is None else full[self.selected]

    @property
    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.doc_freq)) + 1.0

    def word_column(self, stem: str) -> int | None:
        return self._word_index.get(stem)

    def topic_columns(self, tags: Iterable[str]) -> list[int]:
        active = set()
        for tag in tags:
            if tag not in self._topic_index:
                continue
            active.add(tag)
            if self.propagate_topics:
                node = tag
                while node in self.topic_parent:
                    node = self.topic_parent[node]
                    if node in self._topic_index:
                        active.add(node)
        base = len(self.words)
        return sorted(base + self._topic_index[t] for t in active)

    def restrict(self, columns: Sequence[int]) -> "FeatureSpace":
        """Project onto a subset of this space's *current* columns."""
        cols = np.unique(np.asarray(columns, dtype=np.int64))
        if cols.size and (cols[0] < 0 or cols[-1] >= self.dimension):
            raise FeatureSpaceError("restrict: column out of range")
        full = cols if self.selected is None else self.selected[cols]
        return replace(self, selected=full)

    def restrict_to_names(self, names: Iterable[str]) -> "FeatureSpace":
        lookup = {n: i for i, n in enumerate(self.full_names)}
        missing = [n for n in names if n not in lookup]
        if missing:
            raise FeatureSpaceError(f"unknown feature names: {missing[:5]}")
        return replace(self, selected=np.array(sorted(lookup[n] for n in names), dtype=np.int64))

    def unrestricted(self) -> "FeatureSpace":
        return replace(self, selected=None)

    def to_dict(self) -> dict:
        return {
            "format": SPACE_FORMAT,
            "version": SPACE_VERSION,
            "weighting": self.weighting,
            "min_df": self.min_df,
            "n_docs": self.n_docs,
            "propagate_topics": self.propagate_topics,
            "words": list(self.words),
            "doc_freq": self.doc_freq.tolist(),
            "topics": list(self.topics),
            "topic_parent": dict(sorted(self.topic_parent.items())),
            "selected": None if self.selected is None else self.selected.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSpace":
        if data.get("format") != SPACE_FORMAT:
            raise FeatureSpaceError("not a feature-space file")
        if data.get("version") != SPACE_VERSION:
            raise FeatureSpaceError(f"unsupported feature-space version {data.get('version')!r}")
        return cls(
            words=tuple(data["words"]),
            topics=tuple(data["topics"]),
            doc_freq=np.array(data["doc_freq"], dtype=np.int64),
            n_docs=int(data["n_docs"]),
            weighting=data["weighting"],
            min_df=int(data["min_df"]),
            propagate_topics=bool(data["propagate_topics"]),
            topic_parent=dict(data["topic_parent"]),
            selected=None if data["selected"] is None else np.array(data["selected"], dtype=np.int64),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.unrestricted().to_json().encode()).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", "utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureSpace":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def build_feature_space(
    train: Sequence[Article],
    tokens: Sequence[Sequence[str]],
    taxonomy: TopicTaxonomy,
    weighting: str = "tf_idf",
    min_df: int = 2,
    propagate_topics: bool = True,
) -> FeatureSpace:
    """Vocabulary of training stems with document frequency >= ``min_df``, plus every taxonomy topic."""
    if not train:
        raise FeatureSpaceError("cannot build a feature space from an empty training corpus")
    if len(train) != len(tokens):
        raise FeatureSpaceError("one token list per training article is required")
    df = Counter()
    for toks in tokens:
        df.update(set(toks))
    words = sorted(w for w, c in df.items() if c >= min_df)
    return FeatureSpace(
        words=tuple(words),
        topics=tuple(sorted(taxonomy.topics)),
        doc_freq=np.array([df[w] for w in words], dtype=np.int64),
        n_docs=len(train),
        weighting=weighting,
        min_df=min_df,
        propagate_topics=propagate_topics,
        topic_parent=dict(taxonomy.parent),
    )


def _word_weights(space: FeatureSpace, counts: dict[int, int]) -> tuple[np.ndarray, np.ndarray]:
    cols = np.array(sorted(counts), dtype=np.int64)
    if space.weighting == "one_hot":
        return cols, np.ones(len(cols))
    tf = np.array([counts[c] for c in cols], dtype=float)
    w = tf * space.idf[cols]
    norm = np.sqrt(np.sum(w * w))
    return cols, (w * (1.0 / norm) if norm > 0 else w)


def vectorize(article: Article, tokens: Sequence[str], space: FeatureSpace) -> sp.csr_matrix:
    """One article as a 1 x dimension sparse row; unknown stems and topics are ignored."""
    counts: dict[int, int] = {}
    for t in tokens:
        col = space.word_column(t)
        if col is not None:
            counts[col] = counts.get(col, 0) + 1
    wcols, wvals = _word_weights(space, counts)
    tcols = np.array(space.topic_columns(article.topic_tags), dtype=np.int64)
    cols = np.concatenate([wcols, tcols])
    vals = np.concatenate([wvals, np.ones(len(tcols))])
    if space.selected is not None:
        pos = np.searchsorted(space.selected, cols)
        pos = np.minimum(pos, max(len(space.selected) - 1, 0))
        keep = space.selected[pos] == cols if len(space.selected) else np.zeros(len(cols), dtype=bool)
        cols, vals = pos[keep], vals[keep]
    row = sp.csr_matrix((vals, (np.zeros(len(cols), dtype=np.int64), cols)), shape=(1, space.dimension))
    row.sort_indices()
    return row


def vectorize_many(
    articles: Sequence[Article], tokens: Sequence[Sequence[str]], space: FeatureSpace
) -> sp.csr_matrix:
    if not articles:
        return sp.csr_matrix((0, space.dimension))
    return sp.vstack([vectorize(a, t, space) for a, t in zip(articles, tokens)], format="csr")


class TermCounts:
    """Corpus-wide stem counts, so per-fold feature spaces and matrices are cheap.

    ``space_for`` and ``matrix`` reproduce :func:`build_feature_space` and
    :func:`vectorize_many` on any row subset without re-reading tokens.
    """

    def __init__(self, articles: Sequence[Article], tokens: Sequence[Sequence[str]]):
        vocab = sorted(set().union(*map(set, tokens))) if tokens else []
        self.vocab = vocab
        self._index = {w: i for i, w in enumerate(vocab)}
        indptr = [0]
        indices: list[int] = []
        data: list[int] = []
        for toks in tokens:
            c = Counter(self._index[t] for t in toks)
            cols = sorted(c)
            indices.extend(cols)
            data.extend(c[k] for k in cols)
            indptr.append(len(indices))
        self.counts = sp.csr_matrix(
            (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr)),
            shape=(len(tokens), len(vocab)),
        )
        self.topic_tags = [a.topic_tags for a in articles]
        self.n_rows = len(tokens)

    def space_for(
        self,
        rows: np.ndarray,
        taxonomy: TopicTaxonomy,
        weighting: str = "tf_idf",
        min_df: int = 2,
        propagate_topics: bool = True,
    ) -> FeatureSpace:
        rows = np.asarray(rows)
        if rows.size == 0:
            raise FeatureSpaceError("cannot build a feature space from an empty training corpus")
        sub = self.counts[rows]
        df = np.bincount(sub.indices, minlength=len(self.vocab))
        keep = np.flatnonzero(df >= min_df)
        return FeatureSpace(
            words=tuple(self.vocab[i] for i in keep),
            topics=tuple(sorted(taxonomy.topics)),
            doc_freq=df[keep],
            n_docs=len(rows),
            weighting=weighting,
            min_df=min_df,
            propagate_topics=propagate_topics,
            topic_parent=dict(taxonomy.parent),
        )

    def matrix(self, rows: np.ndarray, space: FeatureSpace) -> sp.csr_matrix:
        rows = np.asarray(rows)
        word_cols = np.array([self._index.get(w, -1) for w in space.words], dtype=np.int64)
        present = word_cols >= 0
        sub = self.counts[rows][:, word_cols[present]].tocsr()
        if not present.all():
            expand = sp.csr_matrix(
                (np.ones(present.sum()), (np.arange(present.sum()), np.flatnonzero(present))),
                shape=(present.sum(), len(space.words)),
            )
            sub = (sub @ expand).tocsr()
        if space.weighting == "one_hot":
            sub.data[:] = 1.0
        else:
            sub = sub.multiply(space.idf[None, :]).tocsr()
            norms = np.sqrt(np.asarray(sub.multiply(sub).sum(axis=1)).ravel())
            norms[norms == 0] = 1.0
            sub = sp.diags(1.0 / norms) @ sub
        t_rows, t_cols = [], []
        for r, row in enumerate(rows):
            cols = space.topic_columns(self.topic_tags[row])
            t_rows.extend([r] * len(cols))
            t_cols.extend(c - len(space.words) for c in cols)
        topics = sp.csr_matrix(
            (np.ones(len(t_rows)), (np.array(t_rows, dtype=np.int64), np.array(t_cols, dtype=np.int64))),
            shape=(len(rows), len(space.topics)),
        )
        full = sp.hstack([sub, topics], format="csr")
        if space.selected is not None:
            full = full[:, space.selected]
        full = full.tocsr()
        full.eliminate_zeros()
        full.sort_indices()
        return full
