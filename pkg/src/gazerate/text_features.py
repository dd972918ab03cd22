"""Text feature extraction: 49 engineered features plus a mean word vector.

Feature families, in output order:

=============  =====  ====================================================
family         count  features
=============  =====  ====================================================
length         6      word/sentence/paragraph counts, mean word and
                      sentence length, transition-phrase count
complexity     3      mean polysemy, mean coreference distance, FRES
stylistic      4      ADJ / NOUN / ADP / VERB ratios to word count
embedding-sim  2      mean and max content-word similarity of adjacent
                      sentences
language-model 3      out-of-vocabulary count, misspelling count, mean
                      n-gram log-probability
sequence       6      cosine statistics of PoS and lemma count vectors of
                      adjacent sentences and paragraphs
entity-grid    25     normalized counts of 0/1 entity-grid patterns of
                      width 2, 3 and 4 with at least one 1
=============  =====  ====================================================

"Words" are all non-punctuation tokens throughout.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

from .corpus import POS_TAGS, AnnotatedDocument
from .errors import DomainError
from .resources import (
    EmbeddingTable,
    Lexicons,
    NgramLM,
    Resources,
    count_transitions,
    lm_mean_logprob,
)

LENGTH_FEATURES = ("word_count", "sentence_count", "paragraph_count", "mean_word_length",
                   "mean_sentence_length", "transition_count")
COMPLEXITY_FEATURES = ("mean_polysemy", "mean_coref_distance", "fres")
STYLISTIC_FEATURES = ("adj_ratio", "noun_ratio", "prep_ratio", "verb_ratio")
EMBEDDING_SIM_FEATURES = ("adj_sent_sim_mean", "adj_sent_sim_max")
LM_FEATURES = ("oov_count", "misspelled_count", "mean_logprob")
SEQUENCE_FEATURES = ("sent_pos_cos_mean", "sent_pos_cos_min", "sent_lemma_cos_mean",
                     "sent_lemma_cos_min", "para_pos_cos_mean", "para_lemma_cos_mean")

GRID_ORDERS = (2, 3, 4)
# patterns with at least one 1, sorted as binary numbers within each width
GRID_PATTERNS = tuple(
    p for n in GRID_ORDERS for p in itertools.product((0, 1), repeat=n) if any(p)
)
GRID_FEATURES = tuple("grid_" + "".join(map(str, p)) for p in GRID_PATTERNS)

ENGINEERED_FEATURES = (LENGTH_FEATURES + COMPLEXITY_FEATURES + STYLISTIC_FEATURES + EMBEDDING_SIM_FEATURES
                       + LM_FEATURES + SEQUENCE_FEATURES + GRID_FEATURES)
EMBEDDING_DIM = 300


def embedding_feature_names(dim: int = EMBEDDING_DIM) -> tuple[str, ...]:
    return tuple(f"emb_{i:03d}" for i in range(dim))


def text_feature_names(dim: int = EMBEDDING_DIM) -> tuple[str, ...]:
    return ENGINEERED_FEATURES + embedding_feature_names(dim)


@dataclass(frozen=True)
class TextFeatureVector:
    engineered: dict
    mean_embedding: np.ndarray

    @property
    def names(self) -> tuple[str, ...]:
        return text_feature_names(len(self.mean_embedding))

    def to_array(self) -> np.ndarray:
        eng = np.array([self.engineered[n] for n in ENGINEERED_FEATURES], dtype=float)
        return np.concatenate([eng, np.asarray(self.mean_embedding, dtype=float)])

    def __len__(self):
        return len(ENGINEERED_FEATURES) + len(self.mean_embedding)


def _require_words(doc):
    words = doc.words
    if not words:
        raise DomainError(f"document {doc.doc_id!r} has no words")
    return words


def count_syllables(word: str) -> int:
    """Maximal vowel groups (aeiouy), at least one per word."""
    return max(1, len(re.findall(r"[aeiouy]+", word.lower())))


def length_count_features(doc: AnnotatedDocument, transitions=()) -> dict:
    words = doc.words
    n = len(words)
    n_trans = sum(count_transitions([t.surface for t in doc.sentence_tokens(i)], transitions)
                  for i in range(len(doc.sentences)))
    return {
        "word_count": float(n),
        "sentence_count": float(len(doc.sentences)),
        "paragraph_count": float(doc.paragraph_count),
        "mean_word_length": float(np.mean([len(t.surface) for t in words])) if n else 0.0,
        "mean_sentence_length": n / len(doc.sentences),
        "transition_count": float(n_trans),
    }


def fres(doc: AnnotatedDocument) -> float:
    """Flesch Reading Ease with vowel-group syllable counts."""
    words = _require_words(doc)
    syllables = sum(count_syllables(t.surface) for t in words)
    return 206.835 - 1.015 * (len(words) / len(doc.sentences)) - 84.6 * (syllables / len(words))


def mean_coref_distance(doc: AnnotatedDocument) -> float:
    gaps = []
    for chain in doc.coref_chains:
        starts = [doc.mention_start(m) for m in chain.mentions]
        gaps.extend(b - a for a, b in zip(starts, starts[1:]))
    return float(np.mean(gaps)) if gaps else 0.0


def complexity_features(doc: AnnotatedDocument, lexicons: Lexicons) -> dict:
    content = [t for t in doc.tokens if t.is_content]
    poly = float(np.mean([lexicons.senses(t.lemma) for t in content])) if content else 0.0
    return {
        "mean_polysemy": poly,
        "mean_coref_distance": mean_coref_distance(doc),
        "fres": fres(doc),
    }


def stylistic_features(doc: AnnotatedDocument) -> dict:
    words = _require_words(doc)
    n = len(words)
    tags = [t.pos for t in words]
    return {
        "adj_ratio": tags.count("ADJ") / n,
        "noun_ratio": tags.count("NOUN") / n,
        "prep_ratio": tags.count("ADP") / n,
        "verb_ratio": tags.count("VERB") / n,
    }


def _pairwise_cosines(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = np.outer(na, nb)
    dots = a @ b.T
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(cos, -1.0, 1.0)


def _table_vectors(table: EmbeddingTable, tokens) -> np.ndarray:
    vecs = [v for v in (table.lookup(t.surface) for t in tokens) if v is not None]
    return np.array(vecs).reshape(len(vecs), table.dimension)


def embedding_features(doc: AnnotatedDocument, mean_table: EmbeddingTable, sim_table: EmbeddingTable):
    """Returns ``(mean_embedding, {"adj_sent_sim_mean": .., "adj_sent_sim_max": ..})``."""
    vecs = _table_vectors(mean_table, doc.words)
    mean_emb = vecs.mean(axis=0) if len(vecs) else np.zeros(mean_table.dimension)

    per_sent = [_table_vectors(sim_table, [t for t in doc.sentence_tokens(i) if t.is_content])
                for i in range(len(doc.sentences))]
    means, maxes = [], []
    for a, b in zip(per_sent, per_sent[1:]):
        if len(a) and len(b):
            cos = _pairwise_cosines(a, b)
            means.append(float(cos.mean()))
            maxes.append(float(cos.max()))
    sims = {
        "adj_sent_sim_mean": float(np.mean(means)) if means else 0.0,
        "adj_sent_sim_max": float(max(maxes)) if maxes else 0.0,
    }
    return mean_emb, sims


def language_model_features(doc: AnnotatedDocument, lm: NgramLM, lexicons: Lexicons,
                            mean_table: EmbeddingTable) -> dict:
    words = doc.words
    return {
        "oov_count": float(sum(t.surface not in mean_table for t in words)),
        "misspelled_count": float(sum(lexicons.is_misspelled(t.surface) for t in words)),
        "mean_logprob": lm_mean_logprob(doc, lm),
    }


_TAG_INDEX = {t: i for i, t in enumerate(POS_TAGS)}


def _cos_rows(m: np.ndarray) -> list[float]:
    """Cosine of each adjacent row pair; 0 where either row is all-zero."""
    out = []
    for a, b in zip(m, m[1:]):
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        out.append(0.0 if na == 0 or nb == 0 else float(np.clip(a @ b / (na * nb), -1.0, 1.0)))
    return out


def sequence_features(doc: AnnotatedDocument) -> dict:
    """Adjacent-unit similarity of PoS and lemma bags.

    PoS vectors count every tag including punctuation; lemma vectors count
    lowercased lemmas of words only, so a shared full stop does not make two
    sentences look related.
    """
    lemmas = sorted({t.lemma.lower() for t in doc.words})
    lemma_index = {l: i for i, l in enumerate(lemmas)}
    n_sent = len(doc.sentences)
    pos = np.zeros((n_sent, len(POS_TAGS)))
    lem = np.zeros((n_sent, len(lemmas)))
    for i in range(n_sent):
        for t in doc.sentence_tokens(i):
            pos[i, _TAG_INDEX[t.pos]] += 1
            if t.is_word:
                lem[i, lemma_index[t.lemma.lower()]] += 1

    paras = doc.paragraphs()
    para_pos = np.array([pos[idx].sum(axis=0) for idx in paras])
    para_lem = np.array([lem[idx].sum(axis=0) for idx in paras])

    sp, sl = _cos_rows(pos), _cos_rows(lem)
    pp, pl = _cos_rows(para_pos), _cos_rows(para_lem)

    def mean(x):
        return float(np.mean(x)) if x else 0.0

    return {
        "sent_pos_cos_mean": mean(sp),
        "sent_pos_cos_min": min(sp) if sp else 0.0,
        "sent_lemma_cos_mean": mean(sl),
        "sent_lemma_cos_min": min(sl) if sl else 0.0,
        "para_pos_cos_mean": mean(pp),
        "para_lemma_cos_mean": mean(pl),
    }


@dataclass(frozen=True)
class EntityGrid:
    entities: tuple[str, ...]
    grid: np.ndarray  # entities x sentences, values in {0, 1}

    @property
    def n_sentences(self) -> int:
        return self.grid.shape[1]


def build_entity_grid(doc: AnnotatedDocument) -> EntityGrid:
    """Entity x sentence presence grid.

    Each coreference chain whose first mention contains a noun is an entity,
    labelled by the lemma of the last noun of that mention. Nouns outside
    every chain are grouped by lowercased lemma into further entities.
    """
    n_sent = len(doc.sentences)
    labels: list[str] = []
    rows: list[np.ndarray] = []
    covered = set()
    for chain in doc.coref_chains:
        for m in chain.mentions:
            start = doc.mention_start(m)
            covered.update(range(start, start + (m.end - m.start)))
        nouns = [t for t in doc.mention_tokens(chain.mentions[0]) if t.pos == "NOUN"]
        if not nouns:
            continue
        row = np.zeros(n_sent, dtype=np.int8)
        for m in chain.mentions:
            row[m.sentence] = 1
        labels.append(nouns[-1].lemma)
        rows.append(row)

    loose: dict[str, np.ndarray] = {}
    for si in range(n_sent):
        for t in doc.sentence_tokens(si):
            if t.pos == "NOUN" and t.index not in covered:
                key = t.lemma.lower()
                if key not in loose:
                    loose[key] = np.zeros(n_sent, dtype=np.int8)
                loose[key][si] = 1
    labels.extend(loose)
    rows.extend(loose.values())
    grid = np.array(rows, dtype=np.int8).reshape(len(rows), n_sent)
    return EntityGrid(tuple(labels), grid)


def entity_grid_features(grid: EntityGrid) -> dict:
    counts = dict.fromkeys(GRID_PATTERNS, 0)
    for n in GRID_ORDERS:
        for row in grid.grid:
            for s in range(len(row) - n + 1):
                p = tuple(int(x) for x in row[s:s + n])
                if any(p):
                    counts[p] += 1
    out = {}
    for n in GRID_ORDERS:
        pats = [p for p in GRID_PATTERNS if len(p) == n]
        total = sum(counts[p] for p in pats)
        for p in pats:
            out["grid_" + "".join(map(str, p))] = counts[p] / total if total else 0.0
    return out


def extract_text_features(doc: AnnotatedDocument, resources: Resources) -> TextFeatureVector:
    lex = resources.lexicons
    mean_emb, sims = embedding_features(doc, resources.mean_table, resources.sim_table)
    eng = {}
    eng.update(length_count_features(doc, lex.transitions))
    eng.update(complexity_features(doc, lex))
    eng.update(stylistic_features(doc))
    eng.update(sims)
    eng.update(language_model_features(doc, resources.lm, lex, resources.mean_table))
    eng.update(sequence_features(doc))
    eng.update(entity_grid_features(build_entity_grid(doc)))
    return TextFeatureVector(eng, np.asarray(mean_emb, dtype=float))
