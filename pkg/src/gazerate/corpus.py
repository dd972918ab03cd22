"""Documents, ratings and the quality formula.

Documents arrive pre-annotated in a small CoNLL-like format::

    The     the     DET
    cat     cat     NOUN
    sat     sit     VERB
    .       .       PUNCT

    #PARA
    It      it      PRON
    ...
    #COREF
    C1: 0:0-2, 1:0-1

One token per line (``surface<TAB>lemma<TAB>pos``), a blank line closes a
sentence, ``#PARA`` closes a paragraph and everything after ``#COREF`` lists
coreference chains with sentence-local, half-open token spans.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import DomainError, ParseError, SchemaError, ValidationError

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", "PUNCT", "X")
CONTENT_TAGS = frozenset({"NOUN", "VERB", "ADJ", "ADV"})

RATINGS_HEADER = ("reader_id", "doc_id", "organization", "coherence", "cohesion", "questions_correct")

# CLI-facing short names -> record attribute
PROPERTIES = {
    "org": "organization",
    "coh": "coherence",
    "chs": "cohesion",
    "quality": "quality",
}


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: str
    index: int

    def __post_init__(self):
        if not self.surface or not self.lemma:
            raise ValidationError(f"token {self.index}: empty surface or lemma")
        if self.pos not in POS_TAGS:
            raise ValidationError(f"token {self.index}: unknown POS tag {self.pos!r}")

    @property
    def is_content(self) -> bool:
        return self.pos in CONTENT_TAGS

    @property
    def is_word(self) -> bool:
        return self.pos != "PUNCT"


@dataclass(frozen=True)
class Sentence:
    start: int
    end: int
    paragraph_index: int

    @property
    def token_span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def __len__(self):
        return self.end - self.start


class Mention(NamedTuple):
    """Sentence-local half-open token span."""

    sentence: int
    start: int
    end: int


@dataclass(frozen=True)
class CorefChain:
    mentions: tuple[Mention, ...]

    def __post_init__(self):
        if not self.mentions:
            raise ValidationError("coreference chain without mentions")
        object.__setattr__(self, "mentions", tuple(Mention(*m) for m in self.mentions))


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    tokens: tuple[Token, ...]
    sentences: tuple[Sentence, ...]
    coref_chains: tuple[CorefChain, ...] = ()
    paragraph_count: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "coref_chains", tuple(self.coref_chains))
        if not self.sentences:
            raise ValidationError(f"document {self.doc_id!r} has no sentences")
        for i, tok in enumerate(self.tokens):
            if tok.index != i:
                raise ValidationError(f"document {self.doc_id!r}: token {i} carries index {tok.index}")
        pos = 0
        last_para = 0
        for i, s in enumerate(self.sentences):
            if s.start != pos or s.end <= s.start:
                raise ValidationError(f"document {self.doc_id!r}: sentence {i} span {s.token_span} is not contiguous")
            if s.paragraph_index < last_para:
                raise ValidationError(f"document {self.doc_id!r}: paragraph index decreases at sentence {i}")
            pos = s.end
            last_para = s.paragraph_index
        if pos != len(self.tokens):
            raise ValidationError(f"document {self.doc_id!r}: sentences do not cover all tokens")
        expected = 1 + self.sentences[-1].paragraph_index
        if self.paragraph_count == 0:
            object.__setattr__(self, "paragraph_count", expected)
        elif self.paragraph_count != expected:
            raise ValidationError(f"document {self.doc_id!r}: paragraph_count {self.paragraph_count} != {expected}")
        for c, chain in enumerate(self.coref_chains):
            for m in chain.mentions:
                if not 0 <= m.sentence < len(self.sentences):
                    raise ValidationError(f"chain {c}: sentence {m.sentence} out of range")
                if not 0 <= m.start < m.end <= len(self.sentences[m.sentence]):
                    raise ValidationError(f"chain {c}: span {m.start}-{m.end} outside sentence {m.sentence}")
            starts = [self.mention_start(m) for m in chain.mentions]
            if starts != sorted(starts):
                raise ValidationError(f"chain {c}: mentions not in document order")

    def sentence_tokens(self, i: int) -> tuple[Token, ...]:
        s = self.sentences[i]
        return self.tokens[s.start:s.end]

    def mention_start(self, m: Mention) -> int:
        """Document-level index of the first token of ``m``."""
        return self.sentences[m.sentence].start + m.start

    def mention_tokens(self, m: Mention) -> tuple[Token, ...]:
        base = self.sentences[m.sentence].start
        return self.tokens[base + m.start:base + m.end]

    @property
    def words(self) -> list[Token]:
        return [t for t in self.tokens if t.is_word]

    def paragraphs(self) -> list[list[int]]:
        """Sentence indices grouped by paragraph."""
        out: list[list[int]] = [[] for _ in range(self.paragraph_count)]
        for i, s in enumerate(self.sentences):
            out[s.paragraph_index].append(i)
        return out


def _parse_span(part, lineno, source):
    try:
        sent, span = part.split(":")
        start, end = span.split("-")
        return Mention(int(sent), int(start), int(end))
    except ValueError:
        raise ParseError(f"bad mention {part!r}, expected <sent>:<start>-<end>", lineno, source) from None


def parse_document(text: str, doc_id: str = "doc", source=None) -> AnnotatedDocument:
    """Parse the annotated-document format into an :class:`AnnotatedDocument`.

    Lines starting with ``#`` that carry no TAB and are not a directive are
    treated as comments.
    """
    tokens: list[Token] = []
    sentences: list[Sentence] = []
    chains: list[CorefChain] = []
    paragraph = 0
    sent_start = 0
    in_coref = False

    def close_sentence():
        nonlocal sent_start
        if len(tokens) > sent_start:
            sentences.append(Sentence(sent_start, len(tokens), paragraph))
            sent_start = len(tokens)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if in_coref:
            if not line.strip():
                continue
            if ":" not in line:
                raise ParseError("coreference line must look like '<id>: <mentions>'", lineno, source)
            _, body = line.split(":", 1)
            parts = [p.strip() for p in body.split(",") if p.strip()]
            if not parts:
                raise ParseError("coreference chain without mentions", lineno, source)
            mentions = [_parse_span(p, lineno, source) for p in parts]
            for m in mentions:
                if not 0 <= m.sentence < len(sentences):
                    raise ParseError(f"mention sentence {m.sentence} out of range", lineno, source)
                if not 0 <= m.start < m.end <= len(sentences[m.sentence]):
                    raise ParseError(f"mention span {m.start}-{m.end} outside sentence {m.sentence}", lineno, source)
            mentions.sort(key=lambda m: (sentences[m.sentence].start + m.start, m.end))
            chains.append(CorefChain(tuple(mentions)))
            continue
        if not line.strip():
            close_sentence()
            continue
        if "\t" not in line and line.startswith("#"):
            directive = line.strip()
            if directive == "#PARA":
                close_sentence()
                if sentences and sentences[-1].paragraph_index == paragraph:
                    paragraph += 1
            elif directive == "#COREF":
                close_sentence()
                in_coref = True
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ParseError(f"expected 3 TAB-separated columns, got {len(cols)}", lineno, source)
        surface, lemma, pos = cols
        if pos not in POS_TAGS:
            raise ParseError(f"unknown POS tag {pos!r}", lineno, source)
        if not surface or not lemma:
            raise ParseError("empty surface or lemma", lineno, source)
        tokens.append(Token(surface, lemma, pos, len(tokens)))
    close_sentence()

    if not sentences:
        raise ValidationError(f"document {doc_id!r} is empty")
    return AnnotatedDocument(doc_id, tuple(tokens), tuple(sentences), tuple(chains))


def serialize_document(doc: AnnotatedDocument) -> str:
    lines = []
    for i, s in enumerate(doc.sentences):
        if i > 0 and s.paragraph_index != doc.sentences[i - 1].paragraph_index:
            lines.append("#PARA")
        lines.extend(f"{t.surface}\t{t.lemma}\t{t.pos}" for t in doc.sentence_tokens(i))
        lines.append("")
    if doc.coref_chains:
        lines.append("#COREF")
        for c, chain in enumerate(doc.coref_chains, start=1):
            spans = ", ".join(f"{m.sentence}:{m.start}-{m.end}" for m in chain.mentions)
            lines.append(f"C{c}: {spans}")
    return "\n".join(lines) + "\n"


_SINGULAR_PRONOUNS = frozenset("he him his himself she her hers herself it its itself".split())
_PLURAL_PRONOUNS = frozenset("they them their theirs themselves".split())


def _is_plural_noun(tok: Token) -> bool:
    s = tok.surface.lower()
    return s != tok.lemma.lower() and s.endswith("s")


def fallback_coreference(doc: AnnotatedDocument) -> AnnotatedDocument:
    """Cheap coreference for unannotated documents.

    Nouns sharing a lemma form one chain. A third-person pronoun joins the
    chain of the nearest preceding noun with matching grammatical number;
    otherwise it starts a chain of its own.
    """
    chain_of_lemma: dict[str, int] = {}
    chains: list[list[Mention]] = []
    # (chain id, plural?) of every noun seen so far
    recent: list[tuple[int, bool]] = []
    for si, s in enumerate(doc.sentences):
        for tok in doc.sentence_tokens(si):
            m = Mention(si, tok.index - s.start, tok.index - s.start + 1)
            if tok.pos == "NOUN":
                key = tok.lemma.lower()
                if key not in chain_of_lemma:
                    chain_of_lemma[key] = len(chains)
                    chains.append([])
                cid = chain_of_lemma[key]
                chains[cid].append(m)
                recent.append((cid, _is_plural_noun(tok)))
            elif tok.pos == "PRON":
                low = tok.surface.lower()
                if low in _SINGULAR_PRONOUNS or low in _PLURAL_PRONOUNS:
                    plural = low in _PLURAL_PRONOUNS
                    target = next((cid for cid, pl in reversed(recent) if pl == plural), None)
                else:
                    target = None
                if target is None:
                    chains.append([m])
                else:
                    chains[target].append(m)
    built = tuple(CorefChain(tuple(c)) for c in chains)
    return AnnotatedDocument(doc.doc_id, doc.tokens, doc.sentences, built)


def quality_score(org: int, coh: int, chs: int) -> int:
    """Overall quality on 1..10 from the three 1..4 property scores."""
    for name, v in (("organization", org), ("coherence", coh), ("cohesion", chs)):
        if v not in (1, 2, 3, 4) or isinstance(v, bool):
            raise DomainError(f"{name} score must be in 1..4, got {v!r}")
    return org + coh + chs - 2


class ComprehensionLevel(enum.Enum):
    FULL = "full"
    PARTIAL = "partial"
    NONE = "none"


@dataclass(frozen=True)
class RatingRecord:
    reader_id: str
    doc_id: str
    organization: int
    coherence: int
    cohesion: int
    questions_correct: int

    def __post_init__(self):
        for name in ("organization", "coherence", "cohesion"):
            if getattr(self, name) not in (1, 2, 3, 4):
                raise ValidationError(f"{name} must be in 1..4, got {getattr(self, name)!r}")
        if self.questions_correct not in (0, 1, 2):
            raise ValidationError(f"questions_correct must be in 0..2, got {self.questions_correct!r}")

    @property
    def quality(self) -> int:
        return quality_score(self.organization, self.coherence, self.cohesion)

    @property
    def comprehension(self) -> ComprehensionLevel:
        return comprehension_level(self)

    def score(self, prop: str) -> int:
        return getattr(self, PROPERTIES.get(prop, prop))


_LEVELS = {2: ComprehensionLevel.FULL, 1: ComprehensionLevel.PARTIAL, 0: ComprehensionLevel.NONE}


def comprehension_level(record: RatingRecord) -> ComprehensionLevel:
    return _LEVELS[record.questions_correct]


def read_ratings(text: str, source=None) -> list[RatingRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty ratings file", 1, source) from None
    if tuple(h.strip() for h in header) != RATINGS_HEADER:
        raise SchemaError(f"ratings header must be {','.join(RATINGS_HEADER)}", 1, source)
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(RATINGS_HEADER):
            raise ParseError(f"expected {len(RATINGS_HEADER)} columns, got {len(row)}", lineno, source)
        try:
            nums = [int(c) for c in row[2:]]
        except ValueError:
            raise ParseError("non-integer score", lineno, source) from None
        try:
            records.append(RatingRecord(row[0].strip(), row[1].strip(), *nums))
        except ValidationError as exc:
            raise ValidationError(f"{source or 'ratings'}:{lineno}: {exc}") from None
    return records


def write_ratings(records: Iterable[RatingRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATINGS_HEADER)
    for r in records:
        w.writerow([r.reader_id, r.doc_id, r.organization, r.coherence, r.cohesion, r.questions_correct])
    return buf.getvalue()


def partition_by_comprehension(records: Sequence[RatingRecord]) -> dict[ComprehensionLevel, list[RatingRecord]]:
    out: dict[ComprehensionLevel, list[RatingRecord]] = {lvl: [] for lvl in ComprehensionLevel}
    for r in records:
        out[comprehension_level(r)].append(r)
    return out
