"""Interest-area reports and trial-level gaze features.

An interest area (IA) is one word on screen. The eye tracker reports, per
IA, the first/second/last fixation durations, dwell time, fixation count,
regression flags and skip flag. :func:`aggregate_gaze` reduces all IAs of
one (reader, document) trial to eleven numbers: durations are averaged over
the IAs for which they are defined, counts become ratios to the number of
IAs.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ParseError, SchemaError, ValidationError

IA_COLUMNS = (
    "reader_id",
    "doc_id",
    "ia_index",
    "token",
    "first_fix_dur",
    "second_fix_dur",
    "last_fix_dur",
    "dwell_time",
    "fix_count",
    "regression_out",
    "regression_out_full",
    "regression_out_count",
    "regression_out_time",
    "skipped",
)

GAZE_FEATURE_NAMES = ("ffd", "sfd", "lfd", "dt", "fc", "ir", "irf", "reg_count", "rt", "sc", "run")

# column groups used for ablation; together they partition GAZE_FEATURE_NAMES
GAZE_GROUPS = {
    "fixation": ("ffd", "sfd", "lfd", "dt", "fc"),
    "regression": ("ir", "irf", "reg_count", "rt"),
    "interest_area": ("sc", "run"),
}

_BOOL_COLS = {"regression_out", "regression_out_full", "skipped"}
_STR_COLS = {"reader_id", "doc_id", "token"}


@dataclass(frozen=True)
class InterestAreaRecord:
    reader_id: str
    doc_id: str
    ia_index: int
    token: str
    first_fix_dur: int
    second_fix_dur: int
    last_fix_dur: int
    dwell_time: int
    fix_count: int
    regression_out: bool
    regression_out_full: bool
    regression_out_count: int
    regression_out_time: int
    skipped: bool

    def __post_init__(self):
        for name in ("ia_index", "first_fix_dur", "second_fix_dur", "last_fix_dur", "dwell_time",
                     "fix_count", "regression_out_count", "regression_out_time"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        if self.skipped and (self.fix_count != 0 or self.dwell_time != 0):
            raise ValidationError("skipped interest area has fixations or dwell time")
        if self.fix_count == 0 and not self.skipped:
            raise ValidationError("interest area without fixations must be marked skipped")
        if self.fix_count >= 1 and self.first_fix_dur <= 0:
            raise ValidationError("fixated interest area needs first_fix_dur > 0")
        if self.dwell_time < self.first_fix_dur:
            raise ValidationError("dwell_time shorter than first_fix_dur")
        if self.regression_out and not self.regression_out_full:
            raise ValidationError("regression_out set without regression_out_full")
        if (self.regression_out_count >= 1) != self.regression_out_full:
            raise ValidationError("regression_out_count >= 1 must coincide with regression_out_full")

    @property
    def trial(self) -> tuple[str, str]:
        return (self.reader_id, self.doc_id)


@dataclass(frozen=True)
class GazeFeatureVector:
    ffd: float
    sfd: float
    lfd: float
    dt: float
    fc: float
    ir: float
    irf: float
    reg_count: float
    rt: float
    sc: float
    run: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in GAZE_FEATURE_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "GazeFeatureVector":
        return cls(*(float(v) for v in values))


def parse_ia_report(content: str, source=None) -> list[InterestAreaRecord]:
    """Read the canonical TSV interest-area report."""
    rows = content.splitlines()
    if not rows:
        raise SchemaError("empty interest-area report", 1, source)
    header = tuple(h.strip() for h in rows[0].split("\t"))
    if header != IA_COLUMNS:
        missing = [c for c in IA_COLUMNS if c not in header]
        detail = f"missing columns: {', '.join(missing)}" if missing else "columns out of order or unexpected"
        raise SchemaError(f"interest-area header mismatch ({detail})", 1, source)
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row.strip():
            continue
        cells = row.split("\t")
        if len(cells) != len(IA_COLUMNS):
            raise ParseError(f"expected {len(IA_COLUMNS)} columns, got {len(cells)}", lineno, source)
        values = {}
        for name, cell in zip(IA_COLUMNS, cells):
            if name in _STR_COLS:
                values[name] = cell
                continue
            try:
                v = int(cell)
            except ValueError:
                raise ParseError(f"column {name}: expected integer, got {cell!r}", lineno, source) from None
            if name in _BOOL_COLS:
                if v not in (0, 1):
                    raise ParseError(f"column {name}: expected 0/1, got {cell!r}", lineno, source)
                v = bool(v)
            values[name] = v
        try:
            records.append(InterestAreaRecord(**values))
        except ValidationError as exc:
            raise ValidationError(f"{source or 'ia report'}: row {lineno}: {exc}") from None
    return records


def serialize_ia_report(records: Iterable[InterestAreaRecord]) -> str:
    out = ["\t".join(IA_COLUMNS)]
    for r in records:
        cells = []
        for name in IA_COLUMNS:
            v = getattr(r, name)
            cells.append(str(int(v)) if isinstance(v, bool) else str(v))
        out.append("\t".join(cells))
    return "\n".join(out) + "\n"


def group_trials(records: Iterable[InterestAreaRecord]) -> dict[tuple[str, str], list[InterestAreaRecord]]:
    trials: dict[tuple[str, str], list[InterestAreaRecord]] = defaultdict(list)
    for r in records:
        trials[r.trial].append(r)
    return dict(trials)


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else 0.0


def aggregate_gaze(records: Sequence[InterestAreaRecord]) -> GazeFeatureVector:
    if not records:
        raise DomainError("cannot aggregate an empty trial")
    trial = records[0].trial
    if any(r.trial != trial for r in records):
        raise ValidationError("records from more than one (reader, document) trial")
    seen = set()
    for r in records:
        if r.ia_index in seen:
            raise ValidationError(f"duplicate ia_index {r.ia_index} in trial {trial}")
        seen.add(r.ia_index)

    # sorting makes float summation order independent of input order
    recs = sorted(records, key=lambda r: r.ia_index)
    n = len(recs)
    fixated = [r for r in recs if r.fix_count >= 1]
    regressing = [r for r in recs if r.regression_out_full]
    sc = sum(r.skipped for r in recs) / n
    return GazeFeatureVector(
        ffd=_mean([r.first_fix_dur for r in fixated]),
        sfd=_mean([r.second_fix_dur for r in recs if r.second_fix_dur > 0]),
        lfd=_mean([r.last_fix_dur for r in fixated]),
        dt=_mean([r.dwell_time for r in fixated]),
        fc=sum(r.fix_count for r in recs) / n,
        ir=sum(r.regression_out for r in recs) / n,
        irf=len(regressing) / n,
        reg_count=sum(r.regression_out_count for r in recs) / n,
        rt=_mean([r.regression_out_time for r in regressing]),
        sc=sc,
        run=1.0 - sc,
    )


def gaze_score_report(vectors: Sequence[tuple[GazeFeatureVector, int]]) -> list[dict]:
    """Per-score means of every gaze feature, one row per score present."""
    if not vectors:
        raise DomainError("gaze score report needs at least one vector")
    by_score: dict[int, list[np.ndarray]] = defaultdict(list)
    for vec, score in vectors:
        by_score[int(score)].append(vec.to_array())
    rows = []
    for score in sorted(by_score):
        mean = np.mean(by_score[score], axis=0)
        row = {"score": score, "n": len(by_score[score])}
        row.update(zip(GAZE_FEATURE_NAMES, (float(v) for v in mean)))
        rows.append(row)
    return rows


def gaze_report_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("score", "n") + GAZE_FEATURE_NAMES)
    for row in rows:
        w.writerow([row["score"], row["n"]] + [repr(row[n]) for n in GAZE_FEATURE_NAMES])
    return buf.getvalue()

