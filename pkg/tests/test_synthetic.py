import numpy as np

from gazerate.corpus import ComprehensionLevel, parse_document
from gazerate.experiment import TEXT_COLUMNS
from gazerate.gaze import GAZE_FEATURE_NAMES
from gazerate.synthetic import SIGNAL_FEATURES, TEXT_SIGNAL_FEATURE, make_synthetic_instances, write_toy_corpus


def test_synthetic_shape_and_labels():
    inst = make_synthetic_instances(0)
    assert len(inst) == 600
    assert len({i.reader_id for i in inst}) == 20 and len({i.doc_id for i in inst}) == 30
    assert all(i.quality == i.organization + i.coherence + i.cohesion - 2 for i in inst)
    levels = {lvl: sum(i.comprehension is lvl for i in inst) for lvl in ComprehensionLevel}
    assert all(n > 20 for n in levels.values())


def test_synthetic_is_deterministic():
    a, b = make_synthetic_instances(4, 3, 4), make_synthetic_instances(4, 3, 4)
    assert all(np.array_equal(x.features(), y.features()) and x.quality == y.quality for x, y in zip(a, b))


def test_labels_follow_gaze_signal():
    inst = make_synthetic_instances(1)
    g = np.array([i.gaze_features for i in inst])
    q = np.array([i.quality for i in inst], dtype=float)
    for name, sign in SIGNAL_FEATURES.items():
        r = np.corrcoef(g[:, GAZE_FEATURE_NAMES.index(name)], q)[0, 1]
        assert sign * r > 0.2
    t = np.array([i.text_features[TEXT_COLUMNS.index(TEXT_SIGNAL_FEATURE)] for i in inst])
    assert 0.0 < np.corrcoef(t, q)[0, 1] < 0.5


def test_toy_corpus_files(tmp_path):
    cfg = write_toy_corpus(tmp_path, n_docs=3, n_readers=2)
    assert cfg.name == "config.ini"
    docs = sorted((tmp_path / "docs").glob("*.conll"))
    assert len(docs) == 3
    for d in docs:
        assert parse_document(d.read_text(), d.stem).tokens
    assert len((tmp_path / "ratings.csv").read_text().splitlines()) == 1 + 6
    first = {p.name: p.read_bytes() for p in tmp_path.rglob("*") if p.is_file()}
    write_toy_corpus(tmp_path, n_docs=3, n_readers=2)
    assert first == {p.name: p.read_bytes() for p in tmp_path.rglob("*") if p.is_file()}
