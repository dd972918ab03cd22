import pytest
from hypothesis import given, strategies as st

from gazerate.corpus import (
    ComprehensionLevel, RatingRecord, comprehension_level, fallback_coreference, parse_document,
    partition_by_comprehension, quality_score, read_ratings, serialize_document, write_ratings,
)
from gazerate.errors import DomainError, ParseError, SchemaError, ValidationError

from helpers import conll, doc


def test_minimal_document():
    d = parse_document("The\tthe\tDET\ncat\tcat\tNOUN\nsat\tsit\tVERB\n.\t.\tPUNCT\n")
    assert len(d.tokens) == 4
    assert len(d.sentences) == 1
    assert d.paragraph_count == 1
    assert [t.pos for t in d.tokens] == ["DET", "NOUN", "VERB", "PUNCT"]
    assert len(d.words) == 3


def test_paragraph_index_increments_after_para():
    d = doc(["The cat sat .", "A dog ran ."], ["It sat ."])
    assert [s.paragraph_index for s in d.sentences] == [0, 0, 1]
    assert d.paragraph_count == 2
    assert d.paragraphs() == [[0, 1], [2]]


def test_repeated_para_markers_do_not_create_empty_paragraphs():
    text = "#PARA\nA\ta\tDET\ncat\tcat\tNOUN\n\n#PARA\n#PARA\nIt\tit\tPRON\n"
    d = parse_document(text)
    assert d.paragraph_count == 2


def test_coref_block_round_trip():
    text = conll(["The cat sat .", "It ran ."], coref=["C1: 0:0-2, 1:0-1"])
    d = parse_document(text)
    assert len(d.coref_chains) == 1
    assert len(d.coref_chains[0].mentions) == 2
    again = parse_document(serialize_document(d))
    assert again == d
    assert serialize_document(again) == serialize_document(d)


def test_mentions_sorted_by_position():
    d = doc(["The cat sat .", "It ran ."], coref=["C1: 1:0-1, 0:1-2"])
    assert [d.mention_start(m) for m in d.coref_chains[0].mentions] == [1, 4]


@pytest.mark.parametrize("text,msg", [
    ("The\tthe\n", "3 TAB-separated"),
    ("The\tthe\tDETX\n", "unknown POS"),
    ("The\tthe\tDET\n#COREF\nC1 0-1\n", "coreference line"),
    ("The\tthe\tDET\n#COREF\nC1: 3:0-1\n", "out of range"),
    ("The\tthe\tDET\n#COREF\nC1: 0:0-5\n", "outside sentence"),
])
def test_parse_errors_carry_line(text, msg):
    with pytest.raises(ParseError, match=msg) as info:
        parse_document(text, source="x.conll")
    assert info.value.line is not None
    assert "x.conll:" in str(info.value)


def test_wrong_column_count_reports_line_number():
    with pytest.raises(ParseError) as info:
        parse_document("The\tthe\tDET\ncat\tcat\n")
    assert info.value.line == 2


def test_empty_document_is_validation_error():
    with pytest.raises(ValidationError):
        parse_document("# just a comment\n\n")


def test_quality_score_examples():
    assert quality_score(4, 4, 3) == 9
    assert quality_score(1, 1, 1) == 1
    assert quality_score(4, 4, 4) == 10


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 5, 1), (1, 1, True), (2.5, 1, 1)])
def test_quality_score_domain(args):
    with pytest.raises(DomainError):
        quality_score(*args)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_quality_score_range(a, b, c):
    q = quality_score(a, b, c)
    assert 1 <= q <= 10
    assert q == a + b + c - 2


@pytest.mark.parametrize("qc,level", [(2, ComprehensionLevel.FULL), (1, ComprehensionLevel.PARTIAL),
                                      (0, ComprehensionLevel.NONE)])
def test_comprehension_level(qc, level):
    assert comprehension_level(RatingRecord("r", "d", 1, 1, 1, qc)) is level


def test_rating_record_validation():
    with pytest.raises(ValidationError):
        RatingRecord("r", "d", 5, 1, 1, 0)
    with pytest.raises(ValidationError):
        RatingRecord("r", "d", 1, 1, 1, 3)


def test_ratings_csv_round_trip():
    recs = [RatingRecord("r1", "d1", 4, 4, 3, 2), RatingRecord("r2", "d1", 1, 2, 3, 0)]
    text = write_ratings(recs)
    assert read_ratings(text) == recs
    assert recs[0].quality == 9
    assert recs[0].score("chs") == 3


def test_ratings_header_and_rows_checked():
    with pytest.raises(SchemaError):
        read_ratings("reader,doc\n")
    with pytest.raises(ParseError) as info:
        read_ratings(write_ratings([]) + "r,d,1,x,1,0\n", source="ratings.csv")
    assert info.value.line == 2
    with pytest.raises(ValidationError, match="ratings.csv:2"):
        read_ratings(write_ratings([]) + "r,d,1,9,1,0\n", source="ratings.csv")


@given(st.lists(st.integers(0, 2), max_size=40))
def test_partition_sizes_sum_to_total(qcs):
    recs = [RatingRecord(f"r{i}", "d", 1, 1, 1, q) for i, q in enumerate(qcs)]
    parts = partition_by_comprehension(recs)
    assert sum(len(v) for v in parts.values()) == len(recs)
    assert all(r.questions_correct == 2 for r in parts[ComprehensionLevel.FULL])


def test_fallback_coreference_links_lemmas_and_pronouns():
    d = doc(["The cat sat .", "It saw the cat ."])
    chains = fallback_coreference(d).coref_chains
    by_start = {tuple(fallback_coreference(d).mention_start(m) for m in c.mentions) for c in chains}
    # "cat" at 1 and 7, "It" at 4 joins the same chain
    assert (1, 4, 7) in by_start


def test_fallback_coreference_number_agreement():
    text = ("The\tthe\tDET\ncats\tcat\tNOUN\nsat\tsit\tVERB\n.\t.\tPUNCT\n\n"
            "A\ta\tDET\ndog\tdog\tNOUN\nran\trun\tVERB\n.\t.\tPUNCT\n\n"
            "They\tthey\tPRON\nsat\tsit\tVERB\n.\t.\tPUNCT\n")
    d = fallback_coreference(parse_document(text))
    cat_chain = next(c for c in d.coref_chains if d.mention_tokens(c.mentions[0])[0].lemma == "cat")
    assert [d.mention_tokens(m)[0].surface for m in cat_chain.mentions] == ["cats", "They"]
