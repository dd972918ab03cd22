"""Inter-rater agreement: quadratic weighted kappa and Gwet's AC1/AC2.

References
----------
Cohen, J. (1968). Weighted kappa.
Gwet, K. L. (2014). Handbook of Inter-Rater Reliability, 4th ed., ch. 2-3
    (multi-rater coefficients with missing ratings).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import PROPERTIES, ComprehensionLevel, RatingRecord, comprehension_level
from .errors import DomainError, ValidationError


def _as_ratings(x, k, name):
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if arr.size and (arr.min() < 1 or arr.max() > k or np.any(arr != np.round(arr))):
        raise DomainError(f"{name} must hold integers in 1..{k}")
    return arr.astype(int)


def quadratic_weighted_kappa(a: Sequence[int], b: Sequence[int], k: int) -> float:
    """Cohen's kappa with quadratic disagreement weights.

    Parameters
    ----------
    a, b : sequences of int
        Ratings on the ordinal scale 1..k for the same items.
    k : int
        Number of categories.

    Returns
    -------
    float
        ``1 - sum(O * d) / sum(E * d)`` with ``d = (i - j)**2``, ``O`` the
        observed joint distribution and ``E`` the product of marginals.
        Two identical constant vectors give 1.0.
    """
    if k < 2:
        raise DomainError("ordinal scale needs k >= 2")
    a = _as_ratings(a, k, "a")
    b = _as_ratings(b, k, "b")
    if len(a) != len(b):
        raise DomainError(f"rating vectors differ in length ({len(a)} vs {len(b)})")
    if len(a) == 0:
        raise DomainError("need at least one rated item")
    n = len(a)
    observed = np.zeros((k, k))
    np.add.at(observed, (a - 1, b - 1), 1.0)
    observed /= n
    p = observed.sum(axis=1)
    q = observed.sum(axis=0)
    idx = np.arange(k)
    d = (idx[:, None] - idx[None, :]) ** 2
    num = float((observed * d).sum())
    den = float((np.outer(p, q) * d).sum())
    if den == 0.0:
        if num > 0.0:
            raise AssertionError("zero expected disagreement with positive observed disagreement")
        return 1.0
    return 1.0 - num / den


def identity_weights(k: int) -> np.ndarray:
    return np.eye(k)


def linear_weights(k: int) -> np.ndarray:
    idx = np.arange(k)
    return 1.0 - np.abs(idx[:, None] - idx[None, :]) / (k - 1)


def quadratic_weights(k: int) -> np.ndarray:
    idx = np.arange(k)
    return 1.0 - (idx[:, None] - idx[None, :]) ** 2 / (k - 1) ** 2


WEIGHTS = {"identity": identity_weights, "linear": linear_weights, "quadratic": quadratic_weights}


@dataclass(frozen=True)
class AgreementTable:
    """Items x raters matrix; ``nan`` marks a missing rating."""

    items: tuple[str, ...]
    raters: tuple[str, ...]
    values: np.ndarray
    k: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.items), len(self.raters)):
            raise ValidationError(f"table shape {v.shape} does not match {len(self.items)} items x {len(self.raters)} raters")
        present = v[~np.isnan(v)]
        if present.size and (present.min() < 1 or present.max() > self.k or np.any(present != np.round(present))):
            raise ValidationError(f"ratings must be integers in 1..{self.k}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_matrix(cls, values, k: int) -> "AgreementTable":
        v = np.asarray(values, dtype=float)
        return cls(tuple(str(i) for i in range(v.shape[0])), tuple(str(j) for j in range(v.shape[1])), v, k)

    def category_counts(self) -> np.ndarray:
        """``r[i, q]``: number of raters putting item i in category q+1."""
        counts = np.zeros((self.values.shape[0], self.k))
        for q in range(self.k):
            counts[:, q] = (self.values == q + 1).sum(axis=1)
        return counts


def _gwet_terms(table: AgreementTable, weights: np.ndarray):
    k = table.k
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (k, k):
        raise DomainError(f"weight matrix must be {k}x{k}")
    r_iq = table.category_counts()
    r_i = r_iq.sum(axis=1)
    rated = r_i >= 1
    multi = r_i >= 2
    if not multi.any():
        raise DomainError("agreement needs at least one item rated by two or more raters")
    # weighted counts r*_iq = sum_l w_ql r_il
    r_star = r_iq @ weights.T
    rm = r_i[multi]
    pa = float(np.mean((r_iq[multi] * (r_star[multi] - 1.0)).sum(axis=1) / (rm * (rm - 1.0))))
    pi = (r_iq[rated] / r_i[rated, None]).mean(axis=0)
    return pa, pi


def gwet_ac2(table: AgreementTable, weights=None) -> float:
    """Gwet's weighted agreement coefficient for many raters with gaps.

    ``weights`` defaults to quadratic weights. Items rated by a single rater
    contribute to the category prevalences but not to observed agreement.
    Returns ``nan`` when the chance agreement equals 1.
    """
    k = table.k
    if weights is None:
        weights = quadratic_weights(k)
    weights = np.asarray(weights, dtype=float)
    pa, pi = _gwet_terms(table, weights)
    t_w = float(weights.sum())
    pe = t_w / (k * (k - 1)) * float((pi * (1.0 - pi)).sum())
    if pe == 1.0:
        return float("nan")
    return (pa - pe) / (1.0 - pe)


def gwet_ac1(table: AgreementTable) -> float:
    """Unweighted AC1, computed from exact-match agreement directly."""
    k = table.k
    r_iq = table.category_counts()
    r_i = r_iq.sum(axis=1)
    multi = r_i >= 2
    if not multi.any():
        raise DomainError("agreement needs at least one item rated by two or more raters")
    rm = r_i[multi]
    pa = float(np.mean((r_iq[multi] * (r_iq[multi] - 1.0)).sum(axis=1) / (rm * (rm - 1.0))))
    rated = r_i >= 1
    pi = (r_iq[rated] / r_i[rated, None]).mean(axis=0)
    pe = float((pi * (1.0 - pi)).sum()) / (k - 1)
    if pe == 1.0:
        return float("nan")
    return (pa - pe) / (1.0 - pe)


def build_rating_table(records: Sequence[RatingRecord], prop: str, full_only: bool = False) -> AgreementTable:
    """Documents x readers table for one property (``org``, ``coh``, ``chs`` or ``quality``)."""
    if not records:
        raise DomainError("no rating records")
    attr = PROPERTIES.get(prop, prop)
    seen = set()
    for r in records:
        key = (r.reader_id, r.doc_id)
        if key in seen:
            raise ValidationError(f"duplicate rating for reader {r.reader_id!r}, document {r.doc_id!r}")
        seen.add(key)
    items = tuple(sorted({r.doc_id for r in records}))
    raters = tuple(sorted({r.reader_id for r in records}))
    ii = {d: i for i, d in enumerate(items)}
    jj = {u: j for j, u in enumerate(raters)}
    values = np.full((len(items), len(raters)), np.nan)
    for r in records:
        if full_only and comprehension_level(r) is not ComprehensionLevel.FULL:
            continue
        values[ii[r.doc_id], jj[r.reader_id]] = getattr(r, attr)
    # the comprehension filter can leave documents or readers without ratings
    keep_i = ~np.isnan(values).all(axis=1)
    keep_j = ~np.isnan(values).all(axis=0)
    values = values[keep_i][:, keep_j]
    items = tuple(d for d, keep in zip(items, keep_i) if keep)
    raters = tuple(u for u, keep in zip(raters, keep_j) if keep)
    k = 10 if attr == "quality" else 4
    return AgreementTable(items, raters, values, k)
