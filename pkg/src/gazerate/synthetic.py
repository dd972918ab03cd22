"""Generated datasets for tests and demos.

:func:`make_synthetic_instances` builds assembled instances directly, with
labels driven by three gaze features. :func:`write_toy_corpus` writes a small
but complete set of input files (documents, ratings, IA report, embeddings,
lexicons, LM corpus, config) so the command-line pipeline can run end to end.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import RatingRecord, comprehension_level, parse_document, write_ratings
from .experiment import TEXT_COLUMNS, Instance
from .gaze import GAZE_FEATURE_NAMES, InterestAreaRecord, serialize_ia_report
from .resources import EmbeddingTable, save_glove_text, save_word2vec_binary

# the gaze columns that carry the label signal, with their sign
SIGNAL_FEATURES = {"ffd": 1.0, "irf": -1.0, "run": 1.0}
TEXT_SIGNAL_FEATURE = "sent_lemma_cos_mean"

# (mean, sd) per gaze feature; sc is derived as 1 - run
_GAZE_SCALE = {
    "ffd": (210.0, 25.0), "sfd": (180.0, 20.0), "lfd": (200.0, 25.0), "dt": (260.0, 40.0),
    "fc": (1.3, 0.2), "ir": (0.2, 0.05), "irf": (0.15, 0.04), "reg_count": (0.25, 0.06),
    "rt": (150.0, 30.0), "run": (0.6, 0.08),
}
_CUTS = (-0.9, 0.0, 0.9)
# shares of Full / Partial / None readings in a 600-instance study
_COMPREHENSION_P = (269 / 600, 261 / 600, 70 / 600)


def _ordinal(z) -> np.ndarray:
    return 1 + np.searchsorted(_CUTS, z)


def make_synthetic_instances(seed: int, n_readers: int = 20, n_docs: int = 30,
                             text_weight: float = 0.3, noise: float = 0.35) -> list[Instance]:
    """Fully crossed readers x documents instances.

    Each instance has a latent score ``(ffd' - irf' + run') / sqrt(3)``
    (primes are standardized gaze values) plus ``text_weight`` times a
    per-document factor that is also written into one text feature, plus
    Gaussian noise. Organization, coherence and cohesion each cut the latent
    (with a little extra noise) into 1..4.
    """
    rng = np.random.default_rng(seed)
    nt = len(TEXT_COLUMNS)
    doc_factor = rng.standard_normal(n_docs)
    doc_text = rng.standard_normal((n_docs, nt))
    doc_text[:, TEXT_COLUMNS.index(TEXT_SIGNAL_FEATURE)] = doc_factor + 0.1 * rng.standard_normal(n_docs)

    out = []
    for r in range(n_readers):
        for d in range(n_docs):
            z = rng.standard_normal(len(_GAZE_SCALE))
            gaze = {}
            for (name, (mu, sd)), zi in zip(_GAZE_SCALE.items(), z):
                gaze[name] = mu + sd * zi
            gaze["sc"] = 1.0 - gaze["run"]
            signal = sum(sign * z[list(_GAZE_SCALE).index(name)] for name, sign in SIGNAL_FEATURES.items())
            latent = signal / np.sqrt(3.0) + text_weight * doc_factor[d] + noise * rng.standard_normal()
            org, coh, chs = (int(v) for v in _ordinal(latent + 0.3 * rng.standard_normal(3)))
            qc = int(rng.choice([2, 1, 0], p=_COMPREHENSION_P))
            rec = RatingRecord(f"r{r:02d}", f"d{d:02d}", org, coh, chs, qc)
            out.append(Instance(
                rec.reader_id, rec.doc_id, doc_text[d].copy(),
                np.array([gaze[n] for n in GAZE_FEATURE_NAMES]),
                org, coh, chs, rec.quality, comprehension_level(rec),
            ))
    return out


# ---- toy input files --------------------------------------------------------

_NOUNS = ["city", "river", "school", "market", "garden", "bridge", "teacher", "student",
          "farmer", "library", "road", "festival", "museum", "village", "doctor", "forest"]
_VERBS = [("visits", "visit"), ("builds", "build"), ("likes", "like"), ("watches", "watch"),
          ("helps", "help"), ("cleans", "clean"), ("opens", "open"), ("paints", "paint")]
_ADJS = ["old", "busy", "quiet", "green", "large", "small", "bright", "famous"]
_ADVS = ["often", "slowly", "quickly", "rarely"]
_PREPS = ["near", "beside", "behind", "across"]
_CONNECTIVES = [("However", "however"), ("Also", "also"), ("Then", "then"), ("Finally", "finally")]
_EXTRA_WORDS = ["the", "a", "it", "and", ".", ",", "is"]


def _toy_sentence(rng, subject_hint=None):
    """One template sentence as (surface, lemma, pos) triples.

    The subject noun is returned so the next sentence can refer back to it.
    """
    toks = []
    if rng.random() < 0.3:
        surf, lem = _CONNECTIVES[rng.integers(len(_CONNECTIVES))]
        toks += [(surf, lem, "ADV"), (",", ",", "PUNCT")]
    if subject_hint is not None and rng.random() < 0.4:
        toks.append(("It" if not toks else "it", "it", "PRON"))
        subj = subject_hint
    else:
        subj = _NOUNS[rng.integers(len(_NOUNS))]
        adj = _ADJS[rng.integers(len(_ADJS))]
        toks += [("The" if not toks else "the", "the", "DET"), (adj, adj, "ADJ"), (subj, subj, "NOUN")]
    if rng.random() < 0.4:
        adv = _ADVS[rng.integers(len(_ADVS))]
        toks.append((adv, adv, "ADV"))
    v, vl = _VERBS[rng.integers(len(_VERBS))]
    obj = _NOUNS[rng.integers(len(_NOUNS))]
    toks += [(v, vl, "VERB"), ("the", "the", "DET"), (obj, obj, "NOUN")]
    if rng.random() < 0.5:
        p = _PREPS[rng.integers(len(_PREPS))]
        n2 = _NOUNS[rng.integers(len(_NOUNS))]
        toks += [(p, p, "ADP"), ("a", "a", "DET"), (n2, n2, "NOUN")]
    toks.append((".", ".", "PUNCT"))
    return toks, subj


def _toy_document(rng) -> str:
    lines = []
    subject = None
    for p in range(int(rng.integers(2, 4))):
        if p:
            lines.append("#PARA")
        for _ in range(int(rng.integers(2, 4))):
            toks, subject = _toy_sentence(rng, subject)
            lines.extend(f"{s}\t{l}\t{t}" for s, l, t in toks)
            lines.append("")
    return "\n".join(lines) + "\n"


def _toy_ia_records(reader, doc_id, tokens, rating, rng):
    """IA rows for one trial; lower ratings get more regressions."""
    p_reg = 0.08 + 0.06 * (10 - rating) / 9
    out = []
    for i, tok in enumerate(tokens):
        if rng.random() < 0.25:
            out.append(InterestAreaRecord(reader, doc_id, i, tok, 0, 0, 0, 0, 0, False, False, 0, 0, True))
            continue
        fc = int(rng.integers(1, 4))
        durs = [int(rng.integers(80, 400)) for _ in range(fc)]
        reg_full = bool(rng.random() < p_reg)
        reg_first = reg_full and bool(rng.random() < 0.6)
        n_reg = int(rng.integers(1, 3)) if reg_full else 0
        t_reg = int(rng.integers(100, 600)) if reg_full else 0
        out.append(InterestAreaRecord(reader, doc_id, i, tok, durs[0], durs[1] if fc > 1 else 0, durs[-1],
                                      sum(durs), fc, reg_first, reg_full, n_reg, t_reg, False))
    return out


TOY_CONFIG = """\
[paths]
corpus_dir = docs
ratings = ratings.csv
ia_report = ia_report.tsv
mean_embeddings = embeddings.bin
sim_embeddings = glove.txt
polysemy = polysemy.tsv
dictionary = dictionary.txt
lm_corpus = lm_corpus.txt
out = out

[experiment]
seed = {seed}
property = quality
feature_set = both
comprehension = all

[train]
epochs = {epochs}
learning_rate = 0.001
batches = {batches}
hidden = 100
"""


def write_toy_corpus(root, seed: int = 0, n_docs: int = 4, n_readers: int = 3, epochs: int = 200,
                     batches: int = 2, dim: int = 300) -> Path:
    """Write a complete toy input tree under ``root``; returns the config path."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    (root / "docs").mkdir(parents=True, exist_ok=True)
    docs = {}
    for d in range(n_docs):
        doc_id = f"doc{d:02d}"
        text = _toy_document(rng)
        (root / "docs" / f"{doc_id}.conll").write_text(text, encoding="utf-8")
        docs[doc_id] = parse_document(text, doc_id)

    ratings = []
    ia = []
    for r in range(n_readers):
        reader = f"reader{r:02d}"
        for doc_id, doc in docs.items():
            org, coh, chs = (int(v) for v in rng.integers(1, 5, size=3))
            rec = RatingRecord(reader, doc_id, org, coh, chs, int(rng.integers(0, 3)))
            ratings.append(rec)
            ia += _toy_ia_records(reader, doc_id, [t.surface for t in doc.tokens], rec.quality, rng)
    (root / "ratings.csv").write_text(write_ratings(ratings), encoding="utf-8")
    (root / "ia_report.tsv").write_text(serialize_ia_report(ia), encoding="utf-8")

    vocab = sorted({t.surface.lower() for doc in docs.values() for t in doc.tokens} | set(_EXTRA_WORDS))
    # leave a couple of words out so the OOV features are not constant
    known = vocab[:-2]
    emb = EmbeddingTable(known, rng.standard_normal((len(known), dim)).astype(np.float32))
    (root / "embeddings.bin").write_bytes(save_word2vec_binary(emb))
    glove = EmbeddingTable(known, np.round(rng.standard_normal((len(known), dim)), 4))
    (root / "glove.txt").write_text(save_glove_text(glove), encoding="utf-8")

    lemmas = sorted({t.lemma.lower() for doc in docs.values() for t in doc.tokens if t.is_content})
    (root / "polysemy.tsv").write_text("".join(f"{w}\t{1 + i % 5}\n" for i, w in enumerate(lemmas)),
                                       encoding="utf-8")
    (root / "dictionary.txt").write_text("\n".join(vocab[1:]) + "\n", encoding="utf-8")
    lm_lines = []
    for _ in range(40):
        toks, _ = _toy_sentence(rng)
        lm_lines.append(" ".join(s for s, _, _ in toks))
    (root / "lm_corpus.txt").write_text("\n".join(lm_lines) + "\n", encoding="utf-8")

    cfg = root / "config.ini"
    cfg.write_text(TOY_CONFIG.format(seed=seed, epochs=epochs, batches=batches), encoding="utf-8")
    return cfg

