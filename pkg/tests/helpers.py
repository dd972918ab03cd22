"""Small builders shared by the test modules."""

from gazerate.corpus import parse_document

TAGS = {
    "the": "DET", "a": "DET", ".": "PUNCT", ",": "PUNCT", "it": "PRON", "they": "PRON",
    "sat": "VERB", "ran": "VERB", "saw": "VERB", "is": "VERB", "in": "ADP", "on": "ADP",
    "big": "ADJ", "red": "ADJ", "quickly": "ADV", "and": "CONJ",
}


def conll(*paragraphs, coref=None) -> str:
    """Paragraphs are lists of sentences; a sentence is a whitespace string.

    Untagged words default to NOUN; the lemma is the lowercased surface.
    """
    lines = []
    for p, para in enumerate(paragraphs):
        if p:
            lines.append("#PARA")
        for sent in para:
            for w in sent.split():
                lines.append(f"{w}\t{w.lower()}\t{TAGS.get(w.lower(), 'NOUN')}")
            lines.append("")
    if coref:
        lines.append("#COREF")
        lines.extend(coref)
    return "\n".join(lines) + "\n"


def doc(*paragraphs, coref=None, doc_id="doc"):
    return parse_document(conll(*paragraphs, coref=coref), doc_id)
