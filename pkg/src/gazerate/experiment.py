"""Dataset assembly, stratified splits, training runs and ablations."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .agreement import quadratic_weighted_kappa
from .corpus import ComprehensionLevel, RatingRecord, PROPERTIES, comprehension_level, quality_score
from .errors import DomainError, ValidationError
from .gaze import GAZE_FEATURE_NAMES, GAZE_GROUPS, GazeFeatureVector
from .network import Network, Standardizer, TrainConfig, decode_ordinal, forward, train
from .text_features import TextFeatureVector, text_feature_names

log = logging.getLogger(__name__)

TEXT_COLUMNS = text_feature_names()
GAZE_COLUMNS = GAZE_FEATURE_NAMES
FEATURE_SETS = {
    "text": TEXT_COLUMNS,
    "gaze": GAZE_COLUMNS,
    "both": TEXT_COLUMNS + GAZE_COLUMNS,
}
ALL_COLUMNS = TEXT_COLUMNS + GAZE_COLUMNS
COMPREHENSION_FILTERS = ("all", "full", "partial")
PROPERTY_NAMES = tuple(PROPERTIES)
SCALES = {"org": (1, 4), "coh": (1, 4), "chs": (1, 4), "quality": (1, 10)}


class AssemblyError(ValidationError):
    pass


@dataclass(frozen=True)
class Instance:
    reader_id: str
    doc_id: str
    text_features: np.ndarray
    gaze_features: np.ndarray
    organization: int
    coherence: int
    cohesion: int
    quality: int
    comprehension: ComprehensionLevel

    def __post_init__(self):
        if len(self.text_features) != len(TEXT_COLUMNS):
            raise ValidationError(f"expected {len(TEXT_COLUMNS)} text features, got {len(self.text_features)}")
        if len(self.gaze_features) != len(GAZE_COLUMNS):
            raise ValidationError(f"expected {len(GAZE_COLUMNS)} gaze features, got {len(self.gaze_features)}")
        if self.quality != quality_score(self.organization, self.coherence, self.cohesion):
            raise ValidationError("quality does not equal organization + coherence + cohesion - 2")

    def label(self, prop: str) -> int:
        return getattr(self, PROPERTIES[prop])

    def features(self) -> np.ndarray:
        return np.concatenate([self.text_features, self.gaze_features])


def derive_seed(seed: int, *parts) -> int:
    """Stage seed: first 8 bytes of SHA-256 over ``seed:part1:part2...``, as a 63-bit int."""
    key = ":".join([str(seed)] + [str(p) for p in parts]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def assemble_instances(ratings: Sequence[RatingRecord],
                       gaze_vectors: Mapping[tuple[str, str], GazeFeatureVector | np.ndarray],
                       text_vectors: Mapping[str, TextFeatureVector | np.ndarray]) -> list[Instance]:
    """One instance per rating, joined with its document's text features and its trial's gaze features."""
    missing_gaze = [(r.reader_id, r.doc_id) for r in ratings if (r.reader_id, r.doc_id) not in gaze_vectors]
    if missing_gaze:
        pairs = ", ".join(f"({a}, {b})" for a, b in missing_gaze)
        raise AssemblyError(f"no gaze trial for rating(s): {pairs}")
    missing_docs = sorted({r.doc_id for r in ratings if r.doc_id not in text_vectors})
    if missing_docs:
        raise AssemblyError(f"no text features for document(s): {', '.join(missing_docs)}")
    seen = set()
    out = []
    for r in ratings:
        key = (r.reader_id, r.doc_id)
        if key in seen:
            raise AssemblyError(f"duplicate rating for reader {r.reader_id!r}, document {r.doc_id!r}")
        seen.add(key)
        g = gaze_vectors[key]
        t = text_vectors[r.doc_id]
        out.append(Instance(
            r.reader_id, r.doc_id,
            t.to_array() if hasattr(t, "to_array") else np.asarray(t, dtype=float),
            g.to_array() if hasattr(g, "to_array") else np.asarray(g, dtype=float),
            r.organization, r.coherence, r.cohesion, r.quality, comprehension_level(r),
        ))
    return out


def filter_comprehension(instances: Sequence[Instance], which: str) -> list[Instance]:
    if which == "all":
        return list(instances)
    if which not in COMPREHENSION_FILTERS:
        raise DomainError(f"unknown comprehension filter {which!r}")
    level = ComprehensionLevel(which)
    return [i for i in instances if i.comprehension is level]


def merge_sparse_classes(labels: Sequence[int], min_size: int = 2) -> list[int]:
    """Fold classes with fewer than ``min_size`` members into the nearest class.

    The smallest offending class is folded first; distance ties go to the
    lower class.
    """
    labels = list(labels)
    while True:
        counts = {c: labels.count(c) for c in sorted(set(labels))}
        small = [c for c, n in counts.items() if n < min_size]
        if not small or len(counts) == 1:
            return labels
        c = small[0]
        others = [o for o in counts if o != c]
        target = min(others, key=lambda o: (abs(o - c), o))
        labels = [target if v == c else v for v in labels]


@dataclass(frozen=True)
class SplitPlan:
    train: tuple[int, ...]
    test: tuple[int, ...]
    seed: int
    labels: tuple[int, ...]


def stratified_split(labels: Sequence[int], train_fraction: float = 0.7, seed: int = 0) -> SplitPlan:
    """Per-class shuffled split with largest-remainder rounding.

    Class ``c`` sends ``floor(f * n_c)`` or one more instance to train; the
    extra instances go to the classes with the largest fractional parts
    (ties: lower class first) until the global train size is
    ``round(f * N)``. A class with a single instance always goes to train.
    """
    labels = tuple(int(x) for x in labels)
    if not labels:
        raise DomainError("cannot split an empty dataset")
    if not 0 < train_fraction < 1:
        raise DomainError("train_fraction must lie strictly between 0 and 1")
    frac = Fraction(str(train_fraction))
    classes = sorted(set(labels))
    members = {c: [i for i, v in enumerate(labels) if v == c] for c in classes}
    target = math.floor(frac * len(labels) + Fraction(1, 2))

    take = {}
    for c in classes:
        n = len(members[c])
        take[c] = math.floor(frac * n)
        if n == 1:
            log.warning("class %s has a single instance; it goes to train and the test split cannot cover it", c)
            take[c] = 1
    spare = target - sum(take.values())
    order = sorted((c for c in classes if len(members[c]) > 1),
                   key=lambda c: (-(frac * len(members[c]) - math.floor(frac * len(members[c]))), c))
    for c in order[:max(0, spare)]:
        if frac * len(members[c]) != take[c]:
            take[c] += 1

    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in classes:
        idx = np.array(members[c])
        rng.shuffle(idx)
        train_idx.extend(int(i) for i in idx[:take[c]])
        test_idx.extend(int(i) for i in idx[take[c]:])
    return SplitPlan(tuple(sorted(train_idx)), tuple(sorted(test_idx)), seed, labels)


def stratification_labels(instances: Sequence[Instance], prop: str) -> list[int]:
    labels = [i.label(prop) for i in instances]
    return merge_sparse_classes(labels) if prop == "quality" else labels


@dataclass(frozen=True)
class ExperimentConfig:
    prop: str = "quality"
    feature_set: str = "both"
    comprehension: str = "all"
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.prop not in PROPERTIES:
            raise DomainError(f"unknown property {self.prop!r}")
        if self.feature_set not in FEATURE_SETS:
            raise DomainError(f"unknown feature set {self.feature_set!r}")
        if self.comprehension not in COMPREHENSION_FILTERS:
            raise DomainError(f"unknown comprehension filter {self.comprehension!r}")

    @property
    def name(self) -> str:
        return f"{self.prop}-{self.feature_set}-{self.comprehension}"


def feature_columns(feature_set: str) -> tuple[str, ...]:
    try:
        return FEATURE_SETS[feature_set]
    except KeyError:
        raise DomainError(f"unknown feature set {feature_set!r}") from None


def design_matrix(instances: Sequence[Instance], feature_set: str) -> np.ndarray:
    if feature_set == "text":
        return np.array([i.text_features for i in instances], dtype=float)
    if feature_set == "gaze":
        return np.array([i.gaze_features for i in instances], dtype=float)
    feature_columns(feature_set)
    return np.array([i.features() for i in instances], dtype=float)


def audit_columns(columns: Sequence[str], feature_set: str) -> None:
    """Raise if ``columns`` carry a label or a column outside ``feature_set``."""
    allowed = set(feature_columns(feature_set))
    leaked = [c for c in columns if c not in allowed]
    if leaked:
        raise ValidationError(f"columns outside feature set {feature_set!r}: {', '.join(leaked[:5])}")


@dataclass
class Prediction:
    reader_id: str
    doc_id: str
    gold: int
    predicted: int
    raw: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    qwk: float
    network: Network
    standardizer: Standardizer
    split: SplitPlan
    columns: tuple[str, ...]
    masked: tuple[str, ...]
    instances: list[Instance]
    predictions: list[Prediction]


def split_for(cfg: ExperimentConfig, instances: Sequence[Instance]) -> SplitPlan:
    """The split shared by every feature set for one (property, filter, seed)."""
    seed = derive_seed(cfg.seed, "split", cfg.prop, cfg.comprehension)
    return stratified_split(stratification_labels(instances, cfg.prop), 0.7, seed)


def run_experiment(cfg: ExperimentConfig, instances: Sequence[Instance], mask: Sequence[str] = ()) -> ExperimentResult:
    """Filter, split, standardize, train and score one configuration.

    ``mask`` names columns whose standardized values are replaced by zero,
    which removes them from the model: a zero input neither affects the
    output nor receives a weight update.
    """
    data = filter_comprehension(instances, cfg.comprehension)
    if not data:
        raise DomainError(f"no instances left after filter {cfg.comprehension!r}")
    columns = feature_columns(cfg.feature_set)
    unknown = [m for m in mask if m not in columns]
    if unknown:
        raise DomainError(f"cannot mask columns outside the feature set: {', '.join(unknown)}")
    lo, hi = SCALES[cfg.prop]
    X = design_matrix(data, cfg.feature_set)
    y = np.array([i.label(cfg.prop) for i in data], dtype=float)
    plan = split_for(cfg, data)
    tr = np.array(plan.train)
    te = np.array(plan.test)

    std = Standardizer.fit(X[tr]) if cfg.train.standardize else Standardizer.identity(X.shape[1])
    Xs = std.transform(X)
    active = X[tr].max(axis=0) != X[tr].min(axis=0)
    if mask:
        idx = [columns.index(m) for m in mask]
        Xs[:, idx] = 0.0
        active[idx] = False

    stream = (cfg.prop, cfg.comprehension)
    tcfg = replace(cfg.train, seed=derive_seed(cfg.seed, "shuffle", *stream))
    net = init_keyed_network(columns, active, derive_seed(cfg.seed, "init", *stream), tcfg)
    net = train(net, Xs[tr], y[tr], tcfg)

    preds = []
    qwk = float("nan")
    if len(te):
        raw = np.atleast_1d(forward(net, Xs[te]))
        pred = decode_ordinal(raw, lo, hi)
        gold = y[te].astype(int)
        qwk = quadratic_weighted_kappa(gold, pred, hi)
        preds = [Prediction(data[i].reader_id, data[i].doc_id, int(g), int(p), float(r))
                 for i, g, p, r in zip(te, gold, pred, raw)]
    return ExperimentResult(cfg, qwk, net, std, plan, columns, tuple(mask), data, preds)


def init_keyed_network(columns: Sequence[str], active, seed: int, cfg: TrainConfig) -> Network:
    """Glorot-uniform network whose input weights are drawn per column name.

    Column ``c`` always gets the same weight vector for a given seed, whatever
    other columns are present, and the fan-in counts only ``active`` columns
    (masked or constant inputs are exactly zero and carry no variance). So a
    run with some columns zeroed starts from the same weights as a run
    without those columns.
    """
    active = np.asarray(active, dtype=bool)
    fan_in = max(int(active.sum()), 1)
    lim1 = np.sqrt(6.0 / (fan_in + cfg.hidden))
    lim2 = np.sqrt(6.0 / (cfg.hidden + 1))
    W1 = np.empty((cfg.hidden, len(columns)))
    for j, c in enumerate(columns):
        W1[:, j] = np.random.default_rng(derive_seed(seed, "w1", c)).uniform(-lim1, lim1, cfg.hidden)
    w2 = np.random.default_rng(derive_seed(seed, "w2")).uniform(-lim2, lim2, cfg.hidden)
    net = Network(W1, np.zeros(cfg.hidden), w2, 0.0, seed, cfg.activation, "float64")
    return net.astype(cfg.dtype) if cfg.dtype != "float64" else net


def ablation_columns(group: str) -> tuple[str, ...]:
    if group in GAZE_GROUPS:
        return GAZE_GROUPS[group]
    if group in GAZE_FEATURE_NAMES:
        return (group,)
    raise DomainError(f"unknown ablation group {group!r}")


def ablation(cfg: ExperimentConfig, instances: Sequence[Instance], group: str,
             baseline: ExperimentResult | None = None) -> float:
    """QWK with ``group`` removed minus QWK with all of ``cfg.feature_set``."""
    if cfg.feature_set == "text":
        raise DomainError("ablation needs a feature set that includes gaze features")
    cols = ablation_columns(group)
    if baseline is None:
        baseline = run_experiment(cfg, instances)
    return run_experiment(cfg, instances, mask=cols).qwk - baseline.qwk


ABLATION_GROUPS = tuple(GAZE_GROUPS) + GAZE_FEATURE_NAMES


def ablation_table(cfg: ExperimentConfig, instances: Sequence[Instance]) -> list[tuple[str, float]]:
    """Deltas for the three gaze groups followed by each single gaze feature."""
    base = run_experiment(cfg, instances)
    return [(g, ablation(cfg, instances, g, baseline=base)) for g in ABLATION_GROUPS]


# ---- feature matrix and report files ----------------------------------------

MATRIX_ID_COLUMNS = ("reader_id", "doc_id")


def feature_matrix_header() -> tuple[str, ...]:
    return MATRIX_ID_COLUMNS + TEXT_COLUMNS + GAZE_COLUMNS + ("label",)


def write_feature_matrix(instances: Sequence[Instance], prop: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(feature_matrix_header())
    for i in instances:
        w.writerow([i.reader_id, i.doc_id] + [repr(float(v)) for v in i.features()] + [i.label(prop)])
    return buf.getvalue()


def read_feature_matrix(text: str):
    """Rows of ``(reader_id, doc_id, text_features, gaze_features, label)``."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != feature_matrix_header():
        raise ValidationError("feature matrix header does not match the expected column layout")
    nt, ng = len(TEXT_COLUMNS), len(GAZE_COLUMNS)
    rows = []
    for row in reader:
        vals = np.array([float(v) for v in row[2:2 + nt + ng]])
        rows.append((row[0], row[1], vals[:nt], vals[nt:], int(row[-1])))
    return rows


def instances_from_matrix(rows, ratings: Sequence[RatingRecord]) -> list[Instance]:
    by_key = {(r.reader_id, r.doc_id): r for r in ratings}
    out = []
    for reader_id, doc_id, t, g, _ in rows:
        r = by_key.get((reader_id, doc_id))
        if r is None:
            raise AssemblyError(f"feature row ({reader_id}, {doc_id}) has no rating")
        out.append(Instance(reader_id, doc_id, t, g, r.organization, r.coherence, r.cohesion, r.quality,
                            comprehension_level(r)))
    return out


def split_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("index", "reader_id", "doc_id", "stratum", "part"))
    train_set = set(result.split.train)
    for i, inst in enumerate(result.instances):
        w.writerow((i, inst.reader_id, inst.doc_id, result.split.labels[i], "train" if i in train_set else "test"))
    return buf.getvalue()


def predictions_csv(preds: Sequence[Prediction]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("reader_id", "doc_id", "gold", "predicted", "raw"))
    for p in preds:
        w.writerow((p.reader_id, p.doc_id, p.gold, p.predicted, repr(p.raw)))
    return buf.getvalue()


def format_table(title: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Aligned text table; floats are printed with 3 decimals."""
    cells = [[str(h) for h in header]]
    for row in rows:
        cells.append([f"{v:.3f}" if isinstance(v, float) else str(v) for v in row])
    widths = [max(len(r[c]) for r in cells) for c in range(len(header))]
    lines = [title]
    for n, r in enumerate(cells):
        lines.append("  ".join(r[0].ljust(widths[0]) if c == 0 else r[c].rjust(widths[c])
                               for c in range(len(r))))
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
