"""Command-line pipeline: ingest, features, train, eval, ablate, agreement, report.

All commands read one INI config (sections ``[paths]``, ``[experiment]``,
``[train]``); relative paths resolve against the config file's directory.
Every flag overrides the matching config key. Exit status is 0 on success,
2 on invalid input and 1 on any other failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .agreement import WEIGHTS, build_rating_table, gwet_ac2, quadratic_weighted_kappa
from .corpus import AnnotatedDocument, ComprehensionLevel, fallback_coreference, parse_document, read_ratings
from .errors import DomainError, GazeRateError, ParseError, ValidationError
from .experiment import (
    ABLATION_GROUPS, COMPREHENSION_FILTERS, FEATURE_SETS, PROPERTY_NAMES, SCALES,
    ExperimentConfig, Prediction, ablation, assemble_instances, design_matrix, filter_comprehension,
    format_table, instances_from_matrix, predictions_csv, read_feature_matrix, run_experiment,
    split_csv, split_for, write_feature_matrix,
)
from .gaze import GazeFeatureVector, aggregate_gaze, gaze_score_report, group_trials, parse_ia_report
from .network import TrainConfig, decode_ordinal, forward, load_model, save_model
from .resources import (
    EmbeddingTable, Lexicons, Resources, default_transitions, load_dictionary, load_glove_text,
    load_ngram_lm, load_polysemy, load_transitions, load_word2vec_binary, read_lm_corpus, train_ngram_lm,
)
from .text_features import extract_text_features

log = logging.getLogger("gazerate")

PATH_KEYS = ("corpus_dir", "ratings", "ia_report", "mean_embeddings", "sim_embeddings",
             "polysemy", "dictionary", "lm_corpus")
OPTIONAL_PATH_KEYS = ("transitions", "lm_counts")


class MissingArtifactError(GazeRateError):
    pass


@dataclass
class CliConfig:
    paths: dict[str, Path]
    out: Path
    seed: int = 0
    properties: tuple[str, ...] = ("quality",)
    feature_sets: tuple[str, ...] = ("both",)
    comprehension: tuple[str, ...] = ("all",)
    train: TrainConfig = field(default_factory=TrainConfig)
    weights: str = "quadratic"
    source: Path | None = None

    def experiments(self) -> list[ExperimentConfig]:
        return [ExperimentConfig(p, f, c, self.seed, self.train)
                for p in self.properties for c in self.comprehension for f in self.feature_sets]


def _choices(value: str, allowed, key: str) -> tuple[str, ...]:
    items = tuple(v.strip() for v in value.split(",") if v.strip())
    bad = [v for v in items if v not in allowed]
    if not items or bad:
        raise ValidationError(f"{key}: expected a comma-separated subset of {{{', '.join(allowed)}}}, got {value!r}")
    return items


def load_config(path, overrides: dict | None = None) -> CliConfig:
    """Read the INI config and apply command-line overrides."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file {path} does not exist")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0], source=str(path)) from None
    o = {k: v for k, v in (overrides or {}).items() if v is not None}
    base = path.parent

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key).strip()
        return default

    paths = {}
    for key in PATH_KEYS + OPTIONAL_PATH_KEYS:
        v = get("paths", key)
        if v is None:
            if key in PATH_KEYS:
                raise ValidationError(f"{path}: [paths] lacks required key {key!r}")
            continue
        p = Path(v)
        paths[key] = p if p.is_absolute() else base / p
        if not paths[key].exists():
            raise ValidationError(f"{path}: [paths] {key} = {v} does not exist")
    out = Path(o.get("out") or get("paths", "out", "out"))
    out = out if out.is_absolute() or "out" in o else base / out

    try:
        seed = int(o.get("seed", get("experiment", "seed", "0")))
        t = {}
        for key, conv in (("epochs", int), ("learning_rate", float), ("batches", int), ("hidden", int),
                          ("activation", str), ("dtype", str)):
            v = o.get(key, get("train", key))
            if v is not None:
                t[key] = conv(v)
        if get("train", "standardize") is not None:
            t["standardize"] = cp.getboolean("train", "standardize")
        train = TrainConfig(**t)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None

    return CliConfig(
        paths=paths, out=out, seed=seed,
        properties=_choices(o.get("property", get("experiment", "property", "quality")), PROPERTY_NAMES, "property"),
        feature_sets=_choices(o.get("feature_set", get("experiment", "feature_set", "both")), tuple(FEATURE_SETS),
                              "feature_set"),
        comprehension=_choices(o.get("comprehension", get("experiment", "comprehension", "all")),
                               COMPREHENSION_FILTERS, "comprehension"),
        train=train,
        weights=_choices(o.get("weights", get("experiment", "weights", "quadratic")), tuple(WEIGHTS), "weights")[0],
        source=path,
    )


# ---- ingestion ---------------------------------------------------------------

@dataclass
class Dataset:
    docs: dict[str, AnnotatedDocument]
    ratings: list
    trials: dict


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def load_dataset(cfg: CliConfig) -> Dataset:
    corpus = cfg.paths["corpus_dir"]
    files = sorted(p for p in corpus.iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise ValidationError(f"corpus directory {corpus} holds no documents")
    docs = {}
    for f in files:
        if f.stem in docs:
            raise ValidationError(f"{f}: duplicate document id {f.stem!r}")
        docs[f.stem] = parse_document(_read(f), f.stem, source=str(f))
    ratings_path = cfg.paths["ratings"]
    ratings = read_ratings(_read(ratings_path), source=str(ratings_path))
    seen = set()
    for row, r in enumerate(ratings, start=2):
        where = f"{ratings_path}:{row}"
        if r.doc_id not in docs:
            raise ValidationError(f"{where}: rating references unknown doc_id {r.doc_id!r}")
        if (r.reader_id, r.doc_id) in seen:
            raise ValidationError(f"{where}: second rating for reader {r.reader_id!r}, doc {r.doc_id!r}")
        seen.add((r.reader_id, r.doc_id))
    ia_path = cfg.paths["ia_report"]
    trials = group_trials(parse_ia_report(_read(ia_path), source=str(ia_path)))
    for (reader, doc_id) in trials:
        if doc_id not in docs:
            raise ValidationError(f"{ia_path}: trial ({reader}, {doc_id}) references unknown doc_id")
    missing = [f"({r.reader_id}, {r.doc_id})" for r in ratings if (r.reader_id, r.doc_id) not in trials]
    if missing:
        raise ValidationError(f"{ia_path}: no gaze trial for rating(s) {', '.join(missing)}")
    return Dataset(docs, ratings, trials)


def ingest_summary(data: Dataset) -> str:
    levels = {lvl: 0 for lvl in ComprehensionLevel}
    for r in data.ratings:
        levels[r.comprehension] += 1
    readers = {r.reader_id for r in data.ratings}
    return (f"documents: {len(data.docs)}\n"
            f"readers: {len(readers)}\n"
            f"instances: {len(data.ratings)}\n"
            f"full: {levels[ComprehensionLevel.FULL]}\n"
            f"partial: {levels[ComprehensionLevel.PARTIAL]}\n"
            f"none: {levels[ComprehensionLevel.NONE]}\n")


def load_resources(cfg: CliConfig) -> Resources:
    def table(path: Path) -> EmbeddingTable:
        try:
            if path.suffix == ".bin":
                return load_word2vec_binary(path.read_bytes())
            return load_glove_text(_read(path))
        except ParseError as exc:
            raise type(exc)(exc.message, exc.line, str(path)) from None

    p = cfg.paths
    if "lm_counts" in p:
        lm = _with_source(load_ngram_lm, p["lm_counts"])
    else:
        lm = train_ngram_lm(read_lm_corpus(_read(p["lm_corpus"])))
    transitions = _with_source(load_transitions, p["transitions"]) if "transitions" in p else default_transitions()
    lex = Lexicons(_with_source(load_polysemy, p["polysemy"]), _with_source(load_dictionary, p["dictionary"]), transitions)
    return Resources(table(p["mean_embeddings"]), table(p["sim_embeddings"]), lm, lex)


def _with_source(fn, path: Path):
    try:
        return fn(_read(path))
    except ParseError as exc:
        raise type(exc)(exc.message, exc.line, str(path)) from None


# ---- helpers -------------------------------------------------------------------

def _write(path: Path, content) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(content, bytes):
        path.write_bytes(content)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"{path} not found; run `gazerate {producer}` first")
    return path


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def load_instances(cfg: CliConfig):
    path = _require(cfg.out / "features.csv", "features")
    ratings = read_ratings(_read(cfg.paths["ratings"]), source=str(cfg.paths["ratings"]))
    return instances_from_matrix(read_feature_matrix(_read(path)), ratings)


def run_dir(cfg: CliConfig, exp: ExperimentConfig) -> Path:
    return cfg.out / "runs" / exp.name


def config_echo(exp: ExperimentConfig) -> str:
    t = exp.train
    return (
        "[experiment]\n"
        f'property = "{exp.prop}"\n'
        f'feature_set = "{exp.feature_set}"\n'
        f'comprehension = "{exp.comprehension}"\n'
        f"seed = {exp.seed}\n"
        "\n[train]\n"
        f"epochs = {t.epochs}\n"
        f"learning_rate = {t.learning_rate!r}\n"
        f"batches = {t.batches}\n"
        f"hidden = {t.hidden}\n"
        f'activation = "{t.activation}"\n'
        f'dtype = "{t.dtype}"\n'
        f"standardize = {'true' if t.standardize else 'false'}\n"
    )


# ---- commands ------------------------------------------------------------------

def cmd_ingest(cfg: CliConfig) -> str:
    summary = ingest_summary(load_dataset(cfg))
    _write(cfg.out / "ingest.txt", summary)
    return summary


def cmd_features(cfg: CliConfig) -> str:
    data = load_dataset(cfg)
    res = load_resources(cfg)
    text = {}
    for doc_id, doc in data.docs.items():
        if not doc.coref_chains:
            doc = fallback_coreference(doc)
        vec = extract_text_features(doc, res)
        if len(vec) != len(FEATURE_SETS["text"]):
            raise ValidationError(f"text features for {doc_id} have {len(vec)} columns; "
                                  f"embeddings must be {len(FEATURE_SETS['text']) - 49}-dimensional")
        text[doc_id] = vec
    gaze = {key: aggregate_gaze(recs) for key, recs in data.trials.items()}
    instances = assemble_instances(data.ratings, gaze, text)
    prop = cfg.properties[0]
    _write(cfg.out / "features.csv", write_feature_matrix(instances, prop))
    return f"features: {len(instances)} rows x {len(FEATURE_SETS['both'])} features, label = {prop}\n"


def cmd_train(cfg: CliConfig) -> str:
    instances = load_instances(cfg)
    lines = []
    for exp in cfg.experiments():
        res = run_experiment(exp, instances)
        d = run_dir(cfg, exp)
        _write(d / "config.toml", config_echo(exp))
        _write(d / "split.csv", split_csv(res))
        _write(d / "model.bin", save_model(res.network, res.standardizer))
        lines.append(f"trained {exp.name}: {len(res.split.train)} train / {len(res.split.test)} test, "
                     f"final loss {res.network.loss_trace[-1]:.4f}")
    return "\n".join(lines) + "\n"


def evaluate_run(cfg: CliConfig, exp: ExperimentConfig, instances) -> tuple[float, list[Prediction]]:
    d = run_dir(cfg, exp)
    net, std = load_model(_require(d / "model.bin", "train").read_bytes())
    data = filter_comprehension(instances, exp.comprehension)
    plan = split_for(exp, data)
    test = list(plan.test)
    if not test:
        raise DomainError(f"{exp.name}: empty test split")
    X = std.transform(design_matrix([data[i] for i in test], exp.feature_set))
    lo, hi = SCALES[exp.prop]
    raw = np.atleast_1d(forward(net, X))
    pred = decode_ordinal(raw, lo, hi)
    gold = np.array([data[i].label(exp.prop) for i in test])
    qwk = quadratic_weighted_kappa(gold, pred, hi)
    preds = [Prediction(data[i].reader_id, data[i].doc_id, int(g), int(p), float(r))
             for i, g, p, r in zip(test, gold, pred, raw)]
    return qwk, preds


METRICS_HEADER = ("property", "feature_set", "comprehension", "n_train", "n_test", "qwk")


def cmd_eval(cfg: CliConfig) -> str:
    instances = load_instances(cfg)
    rows = []
    for exp in cfg.experiments():
        qwk, preds = evaluate_run(cfg, exp, instances)
        n_all = len(filter_comprehension(instances, exp.comprehension))
        row = (exp.prop, exp.feature_set, exp.comprehension, n_all - len(preds), len(preds), _fmt(qwk))
        d = run_dir(cfg, exp)
        _write(d / "predictions.csv", predictions_csv(preds))
        _write(d / "metrics.csv", _csv(METRICS_HEADER, [row]))
        _write(d / "report.txt", format_table(f"QWK for {exp.name}", METRICS_HEADER,
                                             [row[:5] + (qwk,)]))
        rows.append(row)
    _write(cfg.out / "metrics.csv", _csv(METRICS_HEADER, rows))
    return format_table("QWK", METRICS_HEADER, [r[:5] + (float(r[5]),) for r in rows])


ABLATION_HEADER = ("property", "feature_set", "comprehension", "ablated", "delta_qwk")


def cmd_ablate(cfg: CliConfig) -> str:
    instances = load_instances(cfg)
    rows = []
    exps = [e for e in cfg.experiments() if e.feature_set != "text"]
    if not exps:
        raise ValidationError("ablate needs --feature-set gaze or both")
    for exp in exps:
        base = run_experiment(exp, instances)
        for g in ABLATION_GROUPS:
            rows.append((exp.prop, exp.feature_set, exp.comprehension, g,
                         ablation(exp, instances, g, baseline=base)))
    _write(cfg.out / "ablation.csv", _csv(ABLATION_HEADER, [r[:4] + (_fmt(r[4]),) for r in rows]))
    text = format_table("Difference in QWK after ablation", ABLATION_HEADER, rows)
    _write(cfg.out / "ablation.txt", text)
    return text


AGREEMENT_HEADER = ("property", "full", "overall")


def cmd_agreement(cfg: CliConfig) -> str:
    ratings = read_ratings(_read(cfg.paths["ratings"]), source=str(cfg.paths["ratings"]))
    rows = []
    for prop in ("org", "coh", "chs"):
        vals = []
        for full_only in (True, False):
            table = build_rating_table(ratings, prop, full_only=full_only)
            try:
                vals.append(gwet_ac2(table, WEIGHTS[cfg.weights](table.k)))
            except DomainError:
                vals.append(float("nan"))
        rows.append((prop, *vals))
    _write(cfg.out / "agreement.csv", _csv(AGREEMENT_HEADER, [(p, _fmt(a), _fmt(b)) for p, a, b in rows]))
    text = format_table(f"Gwet AC2 ({cfg.weights} weights)", AGREEMENT_HEADER, rows)
    _write(cfg.out / "agreement.txt", text)
    return text


def cmd_report(cfg: CliConfig) -> str:
    metrics = list(csv.DictReader(io.StringIO(_read(_require(cfg.out / "metrics.csv", "eval")))))
    parts = []
    for comp in dict.fromkeys(m["comprehension"] for m in metrics):
        sets = list(dict.fromkeys(m["feature_set"] for m in metrics if m["comprehension"] == comp))
        props = list(dict.fromkeys(m["property"] for m in metrics if m["comprehension"] == comp))
        lookup = {(m["property"], m["feature_set"]): float(m["qwk"]) for m in metrics if m["comprehension"] == comp}
        rows = [(p, *[lookup.get((p, s), float("nan")) for s in sets]) for p in props]
        parts.append(format_table(f"QWK by feature set (comprehension: {comp})", ("property", *sets), rows))
    for name in ("ablation.txt", "agreement.txt"):
        if (cfg.out / name).exists():
            parts.append(_read(cfg.out / name))

    instances = load_instances(cfg)
    gaze_rows = []
    for prop in cfg.properties:
        pairs = [(GazeFeatureVector.from_array(i.gaze_features), i.label(prop)) for i in instances]
        for row in gaze_score_report(pairs):
            gaze_rows.append({"property": prop, **row})
    _write(cfg.out / "gaze_by_score.csv", _gaze_rows_csv(gaze_rows))
    text = "\n".join(parts)
    _write(cfg.out / "report.txt", text)
    return text


def _gaze_rows_csv(rows) -> str:
    if not rows:
        return ""
    header = list(rows[0])
    return _csv(header, [[_fmt(r[h]) if isinstance(r[h], float) else r[h] for h in header] for r in rows])


COMMANDS = {
    "ingest": cmd_ingest,
    "features": cmd_features,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "agreement": cmd_agreement,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazerate", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI config file")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--feature-set", dest="feature_set", help="text, gaze or both (comma list allowed)")
    common.add_argument("--property", help="org, coh, chs or quality (comma list allowed)")
    common.add_argument("--comprehension", help="all, full or partial (comma list allowed)")
    common.add_argument("--weights", help="agreement weights: identity, linear or quadratic")
    common.add_argument("--epochs", type=int, help="training epochs")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__name__[4:])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    overrides = {k: getattr(args, k) for k in ("seed", "out", "feature_set", "property", "comprehension",
                                                "weights", "epochs")}
    try:
        cfg = load_config(args.config, overrides)
        sys.stdout.write(COMMANDS[args.command](cfg))
    except (ParseError, ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GazeRateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
