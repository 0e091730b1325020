"""Document ingestion, text analysis, and sparse TF-IDF vectors.

Also hosts the on-disk interchange formats: JSON-lines corpora, qrels
("topic iter doc grade", optionally with a trailing source column), and
run files ("topic Q0 doc rank score tag").
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy import sparse

from .errors import ConfigError, NotFoundError, ParseError

_TOKEN_RE = re.compile(r"[^\W_]+")  # maximal runs of letters/digits

HUMAN = "human"
MACHINE = "machine"


def s_stem(word: str) -> str:
    """Light English suffix stripper ("s"-stemmer).

    Rules, first match wins, applied to words of length >= 3:
      * "ies" -> "y"  unless preceded by "a" or "e"
      * "es"  -> "e"  unless preceded by "a", "e", or "o"
      * "s"   -> ""   unless preceded by "u" or "s"
    Idempotent: stemming a stemmed word is a no-op.
    """
    if len(word) < 3:
        return word
    if word.endswith("ies") and not word.endswith(("aies", "eies")):
        return word[:-3] + "y"
    if word.endswith("es") and not word.endswith(("aes", "ees", "oes")):
        return word[:-1]
    if word.endswith("s") and not word.endswith(("us", "ss")):
        return word[:-1]
    return word


def no_stem(word: str) -> str:
    return word


STEMMERS: dict[str, Callable[[str], str]] = {"s": s_stem, "none": no_stem}


def default_stopwords() -> set[str]:
    """Stopword list shipped with the package."""
    text = resources.files("poolforge").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return _parse_stopword_text(text)


def load_stopwords(path) -> set[str]:
    return _parse_stopword_text(Path(path).read_text("utf-8"))


def _parse_stopword_text(text: str) -> set[str]:
    words = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            words.add(line)
    return words


def tokenize(
    text: str,
    stopwords: Iterable[str],
    stemmer: Callable[[str], str] = s_stem,
) -> list[str]:
    """Lowercased alphanumeric tokens, stopwords removed, then stemmed."""
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    return [stemmer(tok) for tok in _TOKEN_RE.findall(text.lower()) if tok not in stop]


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized sparse feature vector.

    ``indices`` is strictly increasing; ``values`` aligns with it. A
    document with no in-vocabulary terms yields the empty (zero) vector.
    """

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must align")
        if len(self.indices) > 1 and not np.all(np.diff(self.indices) > 0):
            raise ValueError("indices must be strictly increasing")

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def dot_dense(self, weights: np.ndarray) -> float:
        if self.nnz == 0:
            return 0.0
        if int(self.indices[-1]) >= len(weights):
            raise ValueError(
                f"vector index {int(self.indices[-1])} out of range for dim {len(weights)}"
            )
        return float(weights[self.indices] @ self.values)


EMPTY_VECTOR = SparseVector(np.empty(0, dtype=np.int32), np.empty(0, dtype=np.float64))


class Vocabulary:
    """Term -> (index, idf) table capped at ``max_features`` terms.

    Terms are selected by total collection term frequency (ties broken
    lexicographically) and then indexed in lexicographic order, so the
    same corpus always produces the identical table.
    """

    def __init__(self, terms: list[str], idf: np.ndarray, max_features: int):
        if len(terms) > max_features:
            raise ValueError("more terms than max_features")
        self.terms = list(terms)
        self.idf = np.asarray(idf, dtype=np.float64)
        self.max_features = int(max_features)
        self._index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index_of(self, term: str) -> int:
        return self._index[term]

    def items(self) -> Iterator[tuple[str, int, float]]:
        for i, t in enumerate(self.terms):
            yield t, i, float(self.idf[i])

    def to_json(self) -> dict:
        return {
            "max_features": self.max_features,
            "terms": [[t, float(self.idf[i])] for i, t in enumerate(self.terms)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        terms = [t for t, _ in obj["terms"]]
        idf = np.array([v for _, v in obj["terms"]], dtype=np.float64)
        return cls(terms, idf, obj["max_features"])


def build_vocabulary(
    docs: list[Document],
    max_features: int,
    stopwords: Iterable[str] | None = None,
    stemmer: Callable[[str], str] = s_stem,
) -> Vocabulary:
    """Select the top ``max_features`` terms and compute smoothed IDF.

    idf(t) = ln((1 + m) / (1 + df(t))) + 1 over m documents.
    """
    if max_features <= 0:
        raise ConfigError(f"max_features must be positive, got {max_features}")
    if not docs:
        raise ConfigError("cannot build a vocabulary from an empty corpus")
    stop = set(stopwords) if stopwords is not None else default_stopwords()
    total_tf: Counter = Counter()
    df: Counter = Counter()
    for doc in docs:
        toks = tokenize(doc.text, stop, stemmer)
        total_tf.update(toks)
        df.update(set(toks))
    selected = sorted(total_tf, key=lambda t: (-total_tf[t], t))[:max_features]
    selected.sort()
    m = len(docs)
    idf = np.array([math.log((1 + m) / (1 + df[t])) + 1.0 for t in selected])
    return Vocabulary(selected, idf, max_features)


def vectorize(
    doc: Document,
    vocab: Vocabulary,
    stopwords: Iterable[str] | None = None,
    stemmer: Callable[[str], str] = s_stem,
) -> SparseVector:
    """TF-IDF vector for one document, L2-normalized; OOV terms dropped."""
    stop = set(stopwords) if stopwords is not None else default_stopwords()
    tf = Counter(t for t in tokenize(doc.text, stop, stemmer) if t in vocab)
    if not tf:
        return EMPTY_VECTOR
    idx = np.array(sorted(vocab.index_of(t) for t in tf), dtype=np.int32)
    terms_by_idx = {vocab.index_of(t): t for t in tf}
    vals = np.array(
        [tf[terms_by_idx[i]] * vocab.idf[i] for i in idx], dtype=np.float64
    )
    vals /= np.linalg.norm(vals)
    return SparseVector(idx, vals)


@dataclass(frozen=True)
class Judgment:
    label: int
    source: str = HUMAN


class Qrels:
    """Binary relevance judgments keyed by (topic_id, doc_id)."""

    def __init__(self):
        self._by_topic: dict[str, dict[str, Judgment]] = {}

    def add(self, topic_id: str, doc_id: str, label: int, source: str = HUMAN) -> None:
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label}")
        if source not in (HUMAN, MACHINE):
            raise ValueError(f"unknown judgment source {source!r}")
        self._by_topic.setdefault(topic_id, {})[doc_id] = Judgment(label, source)

    def topics(self) -> list[str]:
        return sorted(self._by_topic)

    def pool(self, topic_id: str) -> set[str]:
        return set(self._topic(topic_id))

    def label(self, topic_id: str, doc_id: str) -> int:
        return self._topic(topic_id)[doc_id].label

    def get(self, topic_id: str, doc_id: str) -> Judgment | None:
        return self._by_topic.get(topic_id, {}).get(doc_id)

    def judgments(self, topic_id: str) -> dict[str, Judgment]:
        return dict(self._topic(topic_id))

    def labels(self, topic_id: str) -> dict[str, int]:
        return {d: j.label for d, j in self._topic(topic_id).items()}

    def relevant(self, topic_id: str) -> set[str]:
        return {d for d, j in self._topic(topic_id).items() if j.label == 1}

    def nonrelevant(self, topic_id: str) -> set[str]:
        return {d for d, j in self._topic(topic_id).items() if j.label == 0}

    def prevalence(self, topic_id: str) -> float:
        pool = self._topic(topic_id)
        return len(self.relevant(topic_id)) / len(pool) if pool else 0.0

    def _topic(self, topic_id: str) -> dict[str, Judgment]:
        try:
            return self._by_topic[topic_id]
        except KeyError:
            raise NotFoundError(f"topic {topic_id!r} not in qrels") from None

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self._by_topic

    def __len__(self) -> int:
        return sum(len(d) for d in self._by_topic.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Qrels):
            return NotImplemented
        return self._by_topic == other._by_topic

    def items(self) -> Iterator[tuple[str, str, Judgment]]:
        for topic in sorted(self._by_topic):
            docs = self._by_topic[topic]
            for doc in sorted(docs):
                yield topic, doc, docs[doc]


@dataclass
class SystemRun:
    """One system's ranked lists, in evaluation order per topic."""

    system_id: str
    rankings: dict[str, list[tuple[str, float]]] = field(default_factory=dict)

    def topics(self) -> list[str]:
        return sorted(self.rankings)

    def ranked_docs(self, topic_id: str) -> list[str]:
        if topic_id not in self.rankings:
            raise NotFoundError(f"run {self.system_id!r} has no ranking for topic {topic_id!r}")
        return [doc for doc, _ in self.rankings[topic_id]]


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def load_corpus(path) -> list[Document]:
    """Read a JSON-lines corpus: one {"doc_id": ..., "text": ...} per line."""
    docs = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                doc_id, text = obj["doc_id"], obj["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"bad corpus record ({exc})", path, i) from None
            if not doc_id:
                raise ParseError("empty doc_id", path, i)
            if doc_id in seen:
                raise ParseError(f"duplicate doc_id {doc_id!r}", path, i)
            seen.add(doc_id)
            docs.append(Document(doc_id, text))
    return docs


def write_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"doc_id": doc.doc_id, "text": doc.text}) + "\n")


def load_qrels(path) -> Qrels:
    """Parse qrels lines "topic iter doc grade [source]"; grades > 0 become 1."""
    qrels = Qrels()
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) not in (4, 5):
                raise ParseError(
                    f"expected 4 or 5 whitespace-separated fields, got {len(parts)}", path, i
                )
            topic, _iter, doc_id = parts[0], parts[1], parts[2]
            try:
                grade = int(parts[3])
            except ValueError:
                raise ParseError(f"non-integer grade {parts[3]!r}", path, i) from None
            source = HUMAN
            if len(parts) == 5:
                source = parts[4]
                if source not in (HUMAN, MACHINE):
                    raise ParseError(f"unknown source {source!r}", path, i)
            qrels.add(topic, doc_id, 1 if grade > 0 else 0, source)
    return qrels


def write_qrels(qrels: Qrels, path, with_source: bool | None = None) -> None:
    """Write qrels; the source column is added when any label is machine-made.

    Pass ``with_source`` to force the 5-column extension on or off.
    """
    if with_source is None:
        with_source = any(j.source != HUMAN for _, _, j in qrels.items())
    with open(path, "w", encoding="utf-8") as fh:
        for topic, doc, j in qrels.items():
            if with_source:
                fh.write(f"{topic} 0 {doc} {j.label} {j.source}\n")
            else:
                fh.write(f"{topic} 0 {doc} {j.label}\n")


def load_run(path) -> SystemRun:
    """Parse a TREC-style run file "topic Q0 doc rank score tag"."""
    rows: dict[str, list[tuple[int, str, float]]] = {}
    system_id = None
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise ParseError(
                    f"expected 6 whitespace-separated fields, got {len(parts)}", path, i
                )
            topic, _q0, doc_id, rank_s, score_s, tag = parts
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError:
                raise ParseError(f"bad rank/score {rank_s!r} {score_s!r}", path, i) from None
            if system_id is None:
                system_id = tag
            elif tag != system_id:
                raise ParseError(f"mixed run tags {system_id!r} and {tag!r}", path, i)
            rows.setdefault(topic, []).append((rank, doc_id, score))
    if system_id is None:
        raise ParseError("empty run file", path)
    run = SystemRun(system_id)
    for topic, entries in rows.items():
        entries.sort(key=lambda e: e[0])
        docs = [d for _, d, _ in entries]
        if len(set(docs)) != len(docs):
            raise ParseError(f"duplicate doc in topic {topic}", path)
        run.rankings[topic] = [(d, s) for _, d, s in entries]
    return run


def write_run(run: SystemRun, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic in run.topics():
            for rank, (doc, score) in enumerate(run.rankings[topic], start=1):
                fh.write(f"{topic} Q0 {doc} {rank} {score:.6f} {run.system_id}\n")


# ---------------------------------------------------------------------------
# Vector store
# ---------------------------------------------------------------------------


class VectorStore:
    """Vocabulary plus per-document TF-IDF vectors, immutable once built."""

    def __init__(self, vocab: Vocabulary, doc_ids: list[str], matrix: sparse.csr_matrix):
        self.vocab = vocab
        self.doc_ids = list(doc_ids)
        self.matrix = matrix.tocsr()
        self._row = {d: i for i, d in enumerate(self.doc_ids)}

    @property
    def dim(self) -> int:
        return len(self.vocab)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._row

    def vector(self, doc_id: str) -> SparseVector:
        try:
            row = self.matrix.getrow(self._row[doc_id])
        except KeyError:
            raise NotFoundError(f"document {doc_id!r} not in vector store") from None
        return SparseVector(row.indices.astype(np.int32), row.data.astype(np.float64))

    def submatrix(self, doc_ids: list[str]) -> sparse.csr_matrix:
        try:
            rows = [self._row[d] for d in doc_ids]
        except KeyError as exc:
            raise NotFoundError(f"document {exc.args[0]!r} not in vector store") from None
        return self.matrix[rows]

    @classmethod
    def from_documents(
        cls,
        docs: list[Document],
        max_features: int,
        stopwords: Iterable[str] | None = None,
        stemmer: Callable[[str], str] = s_stem,
    ) -> "VectorStore":
        stop = set(stopwords) if stopwords is not None else default_stopwords()
        vocab = build_vocabulary(docs, max_features, stop, stemmer)
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for doc in docs:
            vec = vectorize(doc, vocab, stop, stemmer)
            indices.extend(vec.indices.tolist())
            data.extend(vec.values.tolist())
            indptr.append(len(indices))
        matrix = sparse.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr)),
            shape=(len(docs), len(vocab)),
        )
        return cls(vocab, [d.doc_id for d in docs], matrix)

    def save(self, out_dir) -> None:
        """Write vocabulary.json and vectors.jsonl under ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "vocabulary.json", "w", encoding="utf-8") as fh:
            json.dump(self.vocab.to_json(), fh, sort_keys=True)
            fh.write("\n")
        with open(out / "vectors.jsonl", "w", encoding="utf-8") as fh:
            for i, doc_id in enumerate(self.doc_ids):
                row = self.matrix.getrow(i)
                rec = {
                    "doc_id": doc_id,
                    "indices": row.indices.tolist(),
                    "values": [f"{v:.12g}" for v in row.data.tolist()],
                }
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    @classmethod
    def load(cls, store_dir) -> "VectorStore":
        store = Path(store_dir)
        vocab_path = store / "vocabulary.json"
        vectors_path = store / "vectors.jsonl"
        if not vocab_path.exists() or not vectors_path.exists():
            raise NotFoundError(f"no vector store under {store_dir}")
        with open(vocab_path, "r", encoding="utf-8") as fh:
            vocab = Vocabulary.from_json(json.load(fh))
        doc_ids = []
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        with open(vectors_path, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    doc_ids.append(rec["doc_id"])
                    indices.extend(int(x) for x in rec["indices"])
                    data.extend(float(x) for x in rec["values"])
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise ParseError(f"bad vector record ({exc})", vectors_path, i) from None
                indptr.append(len(indices))
        matrix = sparse.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr)),
            shape=(len(doc_ids), len(vocab)),
        )
        return cls(vocab, doc_ids, matrix)
