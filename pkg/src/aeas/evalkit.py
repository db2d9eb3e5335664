"""Ranking metrics against manual labels and score-agreement statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .corpus import GroundTruthLabel, Maturity

LIMIT_Z = 1.96


@dataclass(frozen=True)
class RankingCase:
    cve_id: str
    predicted_order: tuple[str, ...]
    labels: Mapping[str, GroundTruthLabel]

    def __post_init__(self):
        order = tuple(self.predicted_order)
        object.__setattr__(self, "predicted_order", order)
        if len(set(order)) != len(order) or set(order) != set(self.labels):
            raise ValueError(f"{self.cve_id}: predicted_order must be a permutation of the labeled artifacts")

    def has_functional(self) -> bool:
        return any(lb.maturity_observed is Maturity.FUNCTIONAL for lb in self.labels.values())

    def top(self, k: int) -> tuple[str, ...]:
        return self.predicted_order[:k]


def _label_key(label: GroundTruthLabel):
    # best first: maturity, then faster completion, then fewer errors, then id
    minutes = label.completion_minutes if label.completion_minutes is not None else math.inf
    errors = label.error_count if label.error_count is not None else math.inf
    return (-label.maturity_observed.rank, minutes, errors, label.artifact_id)


def ground_truth_order(case: RankingCase) -> list[str]:
    return [lb.artifact_id for lb in sorted(case.labels.values(), key=_label_key)]


def _check_k(name: str, value: int) -> None:
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")


def _rate(hits: Sequence[bool]) -> float:
    if not hits:
        raise ValueError("no eligible cases")
    return sum(hits) / len(hits)


def top_k_success(cases: Sequence[RankingCase], k: int) -> float:
    """Share of cases with a Functional artifact in the top k; cases without one are excluded."""
    _check_k("k", k)
    return _rate([
        any(c.labels[a].maturity_observed is Maturity.FUNCTIONAL for a in c.top(k))
        for c in cases if c.has_functional()
    ])


def precision_at_k(cases: Sequence[RankingCase], k: int) -> float:
    """Share of cases whose best manually verified artifact is in the top k."""
    _check_k("k", k)
    return _rate([ground_truth_order(c)[0] in c.top(k) for c in cases if c.labels])


def recall_k_for_top_j(cases: Sequence[RankingCase], k: int, j: int) -> float:
    """Share of cases where the top k intersects the top j of the manual ordering."""
    _check_k("k", k)
    _check_k("j", j)
    return _rate([bool(set(c.top(k)) & set(ground_truth_order(c)[:j])) for c in cases if c.labels])


def random_select_top_k(cases: Sequence[RankingCase], k: int) -> float:
    """Expected top-k success of a uniformly random ordering (analytic)."""
    _check_k("k", k)
    rates = []
    for c in cases:
        if not c.has_functional():
            continue
        n = len(c.labels)
        f = sum(1 for lb in c.labels.values() if lb.maturity_observed is Maturity.FUNCTIONAL)
        kk = min(k, n)
        rates.append(1.0 - math.comb(n - f, kk) / math.comb(n, kk))
    return _rate(rates) if rates else _rate([])


@dataclass(frozen=True)
class AgreementStats:
    n: int
    mean_diff: float
    sd_diff: float
    limits: tuple[float, float]
    n_outside: int
    pct_outside: float
    mae: float
    rmse: float
    pearson: Optional[float] = None
    spearman: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean_diff": self.mean_diff,
            "sd_diff": self.sd_diff,
            "limits": list(self.limits),
            "n_outside": self.n_outside,
            "pct_outside": self.pct_outside,
            "pearson": self.pearson,
            "spearman": self.spearman,
            "mae": self.mae,
            "rmse": self.rmse,
        }


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"score vectors must be 1-D and equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("need at least two paired scores")
    return x, y


def bland_altman(a, b) -> AgreementStats:
    """Differences are ``b - a``; limits use the sample (n-1) standard deviation."""
    x, y = _pair(a, b)
    diffs = y - x
    mean = float(np.mean(diffs))
    sd = float(np.std(diffs, ddof=1))
    lo, hi = mean - LIMIT_Z * sd, mean + LIMIT_Z * sd
    outside = int(np.count_nonzero((diffs < lo) | (diffs > hi)))
    abs_d = np.abs(diffs)
    return AgreementStats(
        n=int(x.size),
        mean_diff=mean,
        sd_diff=sd,
        limits=(lo, hi),
        n_outside=outside,
        pct_outside=100.0 * outside / x.size,
        mae=float(np.mean(abs_d)),
        rmse=float(np.sqrt(np.mean(diffs ** 2))),
    )


def _constant(v: np.ndarray) -> bool:
    return bool(np.all(v == v[0]))


def score_agreement(a, b) -> AgreementStats:
    """Bland-Altman statistics plus Pearson/Spearman (absent for constant input), MAE and RMSE."""
    x, y = _pair(a, b)
    ba = bland_altman(x, y)
    pearson = spearman = None
    if not (_constant(x) or _constant(y)):
        pearson = float(np.clip(stats.pearsonr(x, y)[0], -1.0, 1.0))
        spearman = float(np.clip(stats.spearmanr(x, y)[0], -1.0, 1.0))
    return AgreementStats(
        n=ba.n, mean_diff=ba.mean_diff, sd_diff=ba.sd_diff, limits=ba.limits, n_outside=ba.n_outside,
        pct_outside=ba.pct_outside, mae=ba.mae, rmse=ba.rmse, pearson=pearson, spearman=spearman,
    )


def bland_altman_plot_data(a, b) -> dict:
    """Points (pairwise mean, difference) and limit lines for external plotting."""
    x, y = _pair(a, b)
    ba = bland_altman(x, y)
    return {
        "x": ((x + y) / 2).tolist(),
        "y": (y - x).tolist(),
        "mean_diff": ba.mean_diff,
        "lower_limit": ba.limits[0],
        "upper_limit": ba.limits[1],
    }


def load_baseline_csv(path, scale: float = 1.0) -> dict[str, float]:
    """Read ``cve_id,score`` rows; scores are divided by ``scale`` (10 for CVSS)."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"cve_id", "score"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'cve_id,score'")
        for row in reader:
            cve = row["cve_id"].strip()
            if cve in out:
                raise ValueError(f"{path}: duplicate cve_id {cve}")
            out[cve] = float(row["score"]) / scale
    return out
