"""Shared read-only resources: embeddings, an n-gram LM and lexicons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources as _pkg_resources
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, FormatError

BOS = "<s>"
EOS = "</s>"
BACKOFF = 0.4


class EmbeddingTable:
    """Word -> vector map backed by a dense matrix."""

    def __init__(self, words: Sequence[str], vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(words):
            raise FormatError(f"expected {len(words)} vectors, got array of shape {vectors.shape}")
        if vectors.shape[1] <= 0:
            raise FormatError("embedding dimension must be positive")
        self.words = list(words)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self._index: dict[str, int] = {}
        for i, w in enumerate(self.words):
            self._index.setdefault(w, i)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def _find(self, word):
        i = self._index.get(word)
        if i is None:
            i = self._index.get(word.lower())
        return i

    def __contains__(self, word):
        return self._find(word) is not None

    def lookup(self, word: str):
        """Vector for ``word`` (exact, then lowercased), or None."""
        i = self._find(word)
        return None if i is None else self.vectors[i]


def load_word2vec_binary(data: bytes) -> EmbeddingTable:
    """Parse the word2vec binary format.

    Header ``<count> <dim>\\n``, then per entry the word, one space and
    ``dim`` little-endian float32 values. A newline after each vector (as
    written by the original tool) is tolerated.
    """
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("missing header line")
    try:
        count, dim = (int(p) for p in data[:nl].split())
    except ValueError:
        raise FormatError(f"bad header {data[:nl][:40]!r}") from None
    if dim <= 0:
        raise FormatError(f"dimension must be positive, got {dim}")
    if count < 0:
        raise FormatError(f"negative entry count {count}")
    width = 4 * dim
    pos = nl + 1
    words = []
    vectors = np.empty((count, dim), dtype=np.float64)
    for i in range(count):
        while pos < len(data) and data[pos:pos + 1] in (b"\n", b"\r"):
            pos += 1
        sp = data.find(b" ", pos)
        if sp < 0:
            raise FormatError(f"truncated payload at entry {i}: missing word")
        if len(data) - (sp + 1) < width:
            raise FormatError(f"truncated payload at entry {i}: vector has fewer than {dim} values")
        words.append(data[pos:sp].decode("utf-8", errors="replace"))
        vectors[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=sp + 1)
        pos = sp + 1 + width
    return EmbeddingTable(words, vectors)


def save_word2vec_binary(table: EmbeddingTable) -> bytes:
    parts = [f"{len(table)} {table.dimension}\n".encode("ascii")]
    for w, v in zip(table.words, table.vectors):
        parts.append(w.encode("utf-8") + b" ")
        parts.append(np.asarray(v, dtype="<f4").tobytes())
    return b"".join(parts)


def load_glove_text(text: str) -> EmbeddingTable:
    words, rows = [], []
    dim = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise FormatError("line has a word but no values", lineno)
        if dim is None:
            dim = len(parts) - 1
        elif len(parts) - 1 != dim:
            raise FormatError(f"expected {dim} values, got {len(parts) - 1}", lineno)
        try:
            rows.append([float(x) for x in parts[1:]])
        except ValueError:
            raise FormatError("non-numeric vector component", lineno) from None
        words.append(parts[0])
    if dim is None:
        raise FormatError("no embeddings in file")
    return EmbeddingTable(words, np.array(rows))


def save_glove_text(table: EmbeddingTable) -> str:
    return "".join(w + " " + " ".join(repr(float(x)) for x in v) + "\n"
                   for w, v in zip(table.words, table.vectors))


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DomainError(f"cosine of vectors with shapes {u.shape} and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(min(1.0, max(-1.0, np.dot(u, v) / (nu * nv))))


@dataclass
class NgramLM:
    """Raw n-gram counts for stupid-backoff scoring.

    ``counts`` holds every n-gram (1 <= n <= order) that ends on a real token
    or on the end marker. Histories made only of begin markers are not stored
    there; :meth:`count` reports them as the number of training sentences.
    """

    order: int
    counts: dict[tuple[str, ...], int]
    sentence_count: int

    def __post_init__(self):
        self.total_tokens = sum(c for g, c in self.counts.items() if len(g) == 1)
        self.vocabulary = frozenset(g[0] for g in self.counts if len(g) == 1)

    def count(self, gram: tuple[str, ...]) -> int:
        if gram and all(w == BOS for w in gram):
            return self.sentence_count
        return self.counts.get(gram, 0)

    def score(self, word: str, history: Sequence[str]) -> float:
        """Stupid-backoff score of ``word`` after ``history`` (not normalized)."""
        history = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        factor = 1.0
        for k in range(len(history), 0, -1):
            h = history[len(history) - k:]
            num = self.count(h + (word,))
            if num > 0:
                return factor * num / self.count(h)
            factor *= BACKOFF
        c = self.counts.get((word,), 0)
        if c > 0:
            return factor * c / self.total_tokens
        return factor / (self.total_tokens + len(self.vocabulary))


def normalize_lm_token(token: str) -> str:
    return token.lower()


def train_ngram_lm(sentences: Iterable[Sequence[str]], order: int = 5) -> NgramLM:
    """Count all n-grams of a sentence-segmented corpus.

    Each sentence is padded with ``order - 1`` begin markers and one end
    marker; tokens are lowercased, punctuation is kept.
    """
    counts: dict[tuple[str, ...], int] = {}
    n_sent = 0
    for sent in sentences:
        toks = [normalize_lm_token(t) for t in sent]
        if not toks:
            continue
        n_sent += 1
        padded = [BOS] * (order - 1) + toks + [EOS]
        for i in range(order - 1, len(padded)):
            for n in range(1, order + 1):
                g = tuple(padded[i - n + 1:i + 1])
                counts[g] = counts.get(g, 0) + 1
    if n_sent == 0:
        raise DomainError("cannot train a language model on an empty corpus")
    return NgramLM(order, counts, n_sent)


def read_lm_corpus(text: str) -> list[list[str]]:
    """One sentence per line, whitespace-tokenized."""
    return [line.split() for line in text.splitlines() if line.strip()]


def save_ngram_lm(lm: NgramLM) -> str:
    lines = [f"{BOS}\t{lm.sentence_count}"]
    for g in sorted(lm.counts, key=lambda g: (len(g), g)):
        lines.append(" ".join(g) + "\t" + str(lm.counts[g]))
    return "\n".join(lines) + "\n"


def load_ngram_lm(text: str) -> NgramLM:
    counts = {}
    n_sent = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            gram, c = line.split("\t")
            c = int(c)
        except ValueError:
            raise FormatError("expected '<ngram>\\t<count>'", lineno) from None
        g = tuple(gram.split(" "))
        if g == (BOS,):
            n_sent = c
        else:
            counts[g] = c
    if n_sent is None or not counts:
        raise FormatError("language model file lacks the sentence-count line or n-grams")
    return NgramLM(max(len(g) for g in counts), counts, n_sent)


def lm_mean_logprob(doc, lm: NgramLM) -> float:
    """Mean log10 stupid-backoff score over all document tokens."""
    total = 0.0
    n = 0
    for i in range(len(doc.sentences)):
        history = [BOS] * (lm.order - 1)
        for tok in doc.sentence_tokens(i):
            w = normalize_lm_token(tok.surface)
            total += math.log10(lm.score(w, history))
            history.append(w)
            n += 1
    return total / n


@dataclass
class Lexicons:
    polysemy: dict[str, int]
    dictionary: frozenset[str]
    transitions: tuple[tuple[str, ...], ...] = field(default_factory=tuple)

    def senses(self, word: str) -> int:
        return self.polysemy.get(word.lower(), 1)

    def is_misspelled(self, word: str) -> bool:
        if not any(ch.isalpha() for ch in word):
            return False
        return strip_possessive(word.lower()) not in self.dictionary


def strip_possessive(word: str) -> str:
    for suffix in ("'s", "’s", "'", "’"):
        if word.endswith(suffix) and len(word) > len(suffix):
            return word[: -len(suffix)]
    return word


def load_polysemy(text: str) -> dict[str, int]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            word, n = line.split("\t")
            n = int(n)
        except ValueError:
            raise FormatError("expected '<word>\\t<sense_count>'", lineno) from None
        if n < 1:
            raise FormatError(f"sense count must be >= 1, got {n}", lineno)
        out[word.lower()] = n
    if not out:
        raise FormatError("polysemy lexicon is empty")
    return out


def load_dictionary(text: str) -> frozenset[str]:
    words = frozenset(w.strip().lower() for w in text.splitlines() if w.strip())
    if not words:
        raise FormatError("dictionary is empty")
    return words


def load_transitions(text: str) -> tuple[tuple[str, ...], ...]:
    phrases = {tuple(line.lower().split()) for line in text.splitlines()
               if line.strip() and not line.lstrip().startswith("#")}
    if not phrases:
        raise FormatError("transition phrase list is empty")
    return tuple(sorted(phrases))


def default_transitions() -> tuple[tuple[str, ...], ...]:
    text = _pkg_resources.files("gazerate").joinpath("data/transitions.txt").read_text(encoding="utf-8")
    return load_transitions(text)


def count_transitions(words: Sequence[str], phrases: Iterable[tuple[str, ...]]) -> int:
    """Longest-match, non-overlapping count of phrases in a word sequence."""
    words = [w.lower() for w in words]
    by_first: dict[str, list[tuple[str, ...]]] = {}
    for p in phrases:
        by_first.setdefault(p[0], []).append(p)
    for cands in by_first.values():
        cands.sort(key=len, reverse=True)
    i = n = 0
    while i < len(words):
        for p in by_first.get(words[i], ()):
            if tuple(words[i:i + len(p)]) == p:
                n += 1
                i += len(p)
                break
        else:
            i += 1
    return n


@dataclass
class Resources:
    mean_table: EmbeddingTable
    sim_table: EmbeddingTable
    lm: NgramLM
    lexicons: Lexicons
