import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gazerate.errors import DomainError, FormatError
from gazerate.resources import (
    BOS, EOS, EmbeddingTable, Lexicons, cosine, count_transitions, default_transitions, lm_mean_logprob,
    load_dictionary, load_glove_text, load_ngram_lm, load_polysemy, load_transitions, load_word2vec_binary,
    read_lm_corpus, save_glove_text, save_ngram_lm, save_word2vec_binary, train_ngram_lm,
)

from helpers import doc


def w2v_bytes(entries, dim, newline=False):
    out = f"{len(entries)} {dim}\n".encode()
    for w, vec in entries:
        out += w.encode() + b" " + struct.pack(f"<{dim}f", *vec) + (b"\n" if newline else b"")
    return out


# ---- embeddings ----

def test_word2vec_header_two_by_three():
    t = load_word2vec_binary(w2v_bytes([("a", (1, 2, 3)), ("b", (4, 5, 6))], 3))
    assert len(t) == 2 and t.dimension == 3
    assert list(t.lookup("b")) == [4, 5, 6]


def test_word2vec_tolerates_trailing_newlines():
    t = load_word2vec_binary(w2v_bytes([("a", (1, 2)), ("b", (3, 4))], 2, newline=True))
    assert t.words == ["a", "b"] and list(t.lookup("b")) == [3, 4]


def test_word2vec_truncated_names_entry():
    data = w2v_bytes([("a", (1, 2, 3)), ("b", (4, 5, 6))], 3)[:-5]
    with pytest.raises(FormatError, match="entry 1"):
        load_word2vec_binary(data)


@pytest.mark.parametrize("header", [b"2 0\n", b"2 -1\n", b"x y\n", b"2 3"])
def test_word2vec_bad_header(header):
    with pytest.raises(FormatError):
        load_word2vec_binary(header)


def test_word2vec_round_trip():
    rng = np.random.default_rng(1)
    t = EmbeddingTable(["x", "y", "z"], rng.standard_normal((3, 5)).astype(np.float32))
    back = load_word2vec_binary(save_word2vec_binary(t))
    assert back.words == t.words and np.array_equal(back.vectors, t.vectors)


def test_glove_dimension_and_errors():
    t = load_glove_text("a 1 2 3 4\nb 5 6 7 8\n")
    assert t.dimension == 4
    with pytest.raises(FormatError) as info:
        load_glove_text("a 1 2 3 4\nb 5 6 7\n")
    assert info.value.line == 2
    with pytest.raises(FormatError):
        load_glove_text("a 1 x\n")
    with pytest.raises(FormatError):
        load_glove_text("\n\n")


def test_glove_round_trip():
    t = EmbeddingTable(["p", "q"], [[0.1, -2.5], [3.0, 1e-7]])
    assert np.array_equal(load_glove_text(save_glove_text(t)).vectors, t.vectors)


def test_lookup_falls_back_to_lowercase():
    t = EmbeddingTable(["paris", "Paris", "city"], np.eye(3))
    assert list(t.lookup("Paris")) == [0, 1, 0]
    assert list(t.lookup("CITY")) == [0, 0, 1]
    assert t.lookup("town") is None and "City" in t and "town" not in t


@given(st.lists(st.text("abc", min_size=1, max_size=3), min_size=1, max_size=6, unique=True),
       st.integers(1, 6), st.text("abcA", min_size=1, max_size=3))
def test_lookup_dimension(words, dim, query):
    t = EmbeddingTable(words, np.ones((len(words), dim)))
    v = t.lookup(query)
    assert v is None or v.shape == (dim,)


# ---- cosine ----

def test_cosine_examples():
    assert cosine((1, 0), (0, 1)) == 0
    assert cosine((1, 1), (1, 0)) == pytest.approx(1 / math.sqrt(2))
    assert cosine((0, 0), (1, 2)) == 0
    with pytest.raises(DomainError):
        cosine((1, 2), (1, 2, 3))


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8))
def test_cosine_self_and_bounds(x):
    x = np.array(x)
    c = cosine(x, x)
    if np.linalg.norm(x) > 0:
        assert c == pytest.approx(1.0)
    assert -1 <= cosine(x, x[::-1]) <= 1


# ---- language model ----

def test_unigrams_of_two_word_corpus():
    lm = train_ngram_lm([["a", "b"]])
    uni = {g[0]: c for g, c in lm.counts.items() if len(g) == 1}
    assert uni == {"a": 1, "b": 1, EOS: 1}
    assert lm.total_tokens == 3
    assert lm.counts[(BOS, BOS, BOS, BOS, "a")] == 1
    assert lm.counts[(BOS, BOS, "a", "b", EOS)] == 1


def test_backoff_to_unigram_hand_value():
    lm = train_ngram_lm([["a", "b"]])
    # <s>^4 b, <s>^3 b, <s>^2 b and <s> b are all unseen: four backoffs
    assert lm_mean_logprob(doc(["b"]), lm) == pytest.approx(math.log10(0.4 ** 4 / 3))
    # unseen word: four backoffs, then 1 / (total + |V|)
    assert lm_mean_logprob(doc(["z"]), lm) == pytest.approx(math.log10(0.4 ** 4 / 6))


def test_single_word_corpus():
    lm = train_ngram_lm([["a"]])
    assert lm_mean_logprob(doc(["a"]), lm) == 0.0
    assert lm.score("a", []) == pytest.approx(1 / 2)


def test_empty_corpus_rejected():
    with pytest.raises(DomainError):
        train_ngram_lm([[], []])


def test_duplicated_corpus_doubles_counts():
    corpus = [["the", "cat", "sat"], ["a", "dog"]]
    one, two = train_ngram_lm(corpus), train_ngram_lm(corpus * 2)
    assert two.counts == {g: 2 * c for g, c in one.counts.items()}
    assert two.sentence_count == 2 * one.sentence_count == 4


def _direct_count(corpus, gram, order=5):
    n = 0
    for sent in corpus:
        padded = [BOS] * (order - 1) + [w.lower() for w in sent] + [EOS]
        for i in range(order - 1, len(padded)):
            if i - len(gram) + 1 >= 0 and tuple(padded[i - len(gram) + 1:i + 1]) == gram:
                n += 1
    return n


corpora = st.lists(st.lists(st.sampled_from("a b c d".split()), min_size=1, max_size=7), min_size=1, max_size=6)


@settings(max_examples=60)
@given(corpora)
def test_counts_match_direct_recount_and_prefix_invariant(corpus):
    lm = train_ngram_lm(corpus)
    for g, c in lm.counts.items():
        assert c == _direct_count(corpus, g)
    for h in list(lm.counts) + [(BOS,) * k for k in range(1, 5)]:
        if len(h) >= 5 or h[-1] == EOS:
            continue
        following = sum(c for g, c in lm.counts.items() if len(g) == len(h) + 1 and g[:-1] == h)
        assert following == lm.count(h)


def _oracle_score(corpus, word, history):
    alpha = 1.0
    for k in range(len(history), 0, -1):
        h = tuple(history[-k:])
        num = _direct_count(corpus, h + (word,))
        if num:
            den = len(corpus) if all(w == BOS for w in h) else _direct_count(corpus, h)
            return alpha * num / den
        alpha *= 0.4
    total = sum(len(s) + 1 for s in corpus)
    c = _direct_count(corpus, (word,))
    if c:
        return alpha * c / total
    vocab = {w.lower() for s in corpus for w in s} | {EOS}
    return alpha / (total + len(vocab))


@settings(max_examples=60)
@given(corpora, st.lists(st.sampled_from("a b c d e".split()), min_size=0, max_size=6),
       st.sampled_from("a b c d e".split()))
def test_score_matches_oracle(corpus, history, word):
    lm = train_ngram_lm(corpus)
    hist = ([BOS] * 4 + history)[-4:]
    assert lm.score(word, hist) == pytest.approx(_oracle_score(corpus, word, hist), rel=1e-12)


@settings(max_examples=40)
@given(corpora, st.lists(st.sampled_from("a b c d".split()), min_size=1, max_size=6))
def test_renaming_words_leaves_scores_unchanged(corpus, query):
    rename = {"a": "w", "b": "x", "c": "y", "d": "z"}
    lm1 = train_ngram_lm(corpus)
    lm2 = train_ngram_lm([[rename[w] for w in s] for s in corpus])
    d1 = doc([" ".join(query)])
    d2 = doc([" ".join(rename[w] for w in query)])
    assert lm_mean_logprob(d1, lm1) == pytest.approx(lm_mean_logprob(d2, lm2), rel=1e-12)
    assert lm_mean_logprob(d1, lm1) <= 0


def test_training_text_beats_reversed_text():
    corpus = read_lm_corpus("the cat sat on the mat .\nthe dog sat on the log .\na cat saw the dog .\n")
    lm = train_ngram_lm(corpus)
    forward = doc(["the cat sat on the mat ."])
    backward = doc([". mat the on sat cat the"])
    assert lm_mean_logprob(forward, lm) > lm_mean_logprob(backward, lm)


def test_lm_file_round_trip():
    lm = train_ngram_lm([["x", "y", "x"], ["y"]])
    back = load_ngram_lm(save_ngram_lm(lm))
    assert back.counts == lm.counts and back.sentence_count == 2 and back.order == 5
    with pytest.raises(FormatError):
        load_ngram_lm("a b 3\n")


# ---- lexicons ----

def test_polysemy_and_dictionary():
    poly = load_polysemy("# comment\nbank\t10\nCat\t3\n")
    lex = Lexicons(poly, load_dictionary("cat\nbank\n"))
    assert lex.senses("bank") == 10 and lex.senses("cat") == 3 and lex.senses("zebra") == 1
    assert not lex.is_misspelled("Cat") and lex.is_misspelled("caat")
    assert not lex.is_misspelled("cat's") and not lex.is_misspelled(",") and not lex.is_misspelled("42")
    with pytest.raises(FormatError):
        load_polysemy("bank\t0\n")
    with pytest.raises(FormatError):
        load_polysemy("bank 3\n")


def test_transition_counting():
    phrases = load_transitions("for example\nfor\nin addition\nhowever\n")
    assert count_transitions("For example , this is it".split(), phrases) == 1
    assert count_transitions("in addition however for".split(), phrases) == 3
    assert count_transitions("in the addition".split(), phrases) == 0


def test_default_transitions_packaged():
    phrases = default_transitions()
    assert ("for", "example") in phrases and ("however",) in phrases
    assert len(phrases) > 100
