"""Detection metrics, attack Impact, and paired significance testing."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .dataset import PHISHING, Dataset
from .errors import EmptyMaliciousSet, SchemaMismatch, TooFewPairs, ZeroBaselineMetric

EXACT_MAX_N = 25
MIN_PAIRS = 5


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class Metrics:
    f1: float
    accuracy: float
    fpr: float
    tpr: float

    @property
    def recall(self) -> float:
        return self.tpr


@dataclass(frozen=True)
class ImpactReport:
    attack: str
    classifier: str
    dataset: str
    metric: str
    value_no_attack: float
    value_under_attack: float
    impact: float
    trial_impacts: tuple[float, ...] = ()
    seed: int | None = None


@dataclass(frozen=True)
class StatReport:
    comparison: str
    p_value: float
    effect_size: float
    n: int
    alpha_adjusted: float
    w_plus: float = 0.0
    w_minus: float = 0.0
    method: str = "exact"

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha_adjusted


def confusion_from_labels(y_true, y_pred) -> Confusion:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    pos_t = y_true == PHISHING
    pos_p = y_pred == PHISHING
    return Confusion(
        int(np.sum(pos_t & pos_p)),
        int(np.sum(~pos_t & pos_p)),
        int(np.sum(~pos_t & ~pos_p)),
        int(np.sum(pos_t & ~pos_p)),
    )


def confusion(model, dataset: Dataset) -> Confusion:
    """(tp, fp, tn, fn) with phishing as the positive class."""
    return confusion_from_labels(dataset.y, model.predict_dataset(dataset))


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def metrics(counts) -> Metrics:
    """Standard rates; any ratio with a zero denominator is 0."""
    tp, fp, tn, fn = counts
    total = tp + fp + tn + fn
    return Metrics(
        f1=_ratio(2 * tp, 2 * tp + fp + fn),
        accuracy=_ratio(tp + tn, total),
        fpr=_ratio(fp, fp + tn),
        tpr=_ratio(tp, tp + fn),
    )


def _decimal(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def impact(mu_no_attack: float, mu_attack: float) -> float:
    """Relative drop of a metric under attack; negative when the attack helps the detector.

    Evaluated exactly on the decimal values of the inputs and rounded once,
    so e.g. (0.8, 0.6) gives exactly 0.25.
    """
    if not mu_no_attack > 0:
        raise ZeroBaselineMetric(f"baseline metric must be positive, got {mu_no_attack}")
    a, b = _decimal(mu_no_attack), _decimal(mu_attack)
    return float((a - b) / a)


def recall_on(model, X: np.ndarray) -> float:
    """Fraction of rows (all phishing) that the model flags."""
    return float(np.mean(model.predict(X) == PHISHING))


def attack_impact(
    model,
    clean_test: Dataset,
    perturbed,
    classifier: str = "",
    dataset: str | None = None,
) -> ImpactReport:
    """Recall-based Impact over the phishing rows; trial impacts are averaged."""
    mal = clean_test.phishing_rows()
    if len(mal) == 0:
        raise EmptyMaliciousSet("the clean test set has no phishing rows")
    if perturbed.source.schema.fingerprint() != clean_test.schema.fingerprint():
        raise SchemaMismatch("perturbed set and clean test set use different schemas")
    if not np.array_equal(perturbed.source.row_ids, mal.row_ids):
        raise SchemaMismatch("perturbed set is not aligned with the clean test set's phishing rows")
    mu0 = recall_on(model, mal.X)
    per_trial = [recall_on(model, Xt) for Xt in perturbed.trials]
    impacts = tuple(impact(mu0, mu1) for mu1 in per_trial)
    return ImpactReport(
        attack=perturbed.attack_id,
        classifier=classifier,
        dataset=dataset or clean_test.name,
        metric="recall",
        value_no_attack=mu0,
        value_under_attack=float(np.mean(per_trial)),
        impact=float(np.mean(impacts)),
        trial_impacts=impacts,
    )


def impact_difference(baseline: ImpactReport | float, hardened: ImpactReport | float) -> float:
    """Positive when the hardened detector suffered less from the attack."""
    b = baseline.impact if isinstance(baseline, ImpactReport) else baseline
    h = hardened.impact if isinstance(hardened, ImpactReport) else hardened
    return b - h


def bonferroni(alpha: float, comparisons: int) -> float:
    if comparisons < 1:
        raise ValueError("comparisons must be >= 1")
    return alpha / comparisons


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean of their positions."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return np.zeros(0)
    _, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    return ((starts + ends) / 2.0)[inv.reshape(-1)]


def _signed_differences(paired, b=None) -> np.ndarray:
    if b is None:
        arr = np.asarray(list(paired), dtype=float).reshape(-1, 2)
        d = arr[:, 0] - arr[:, 1]
    else:
        d = np.asarray(paired, dtype=float) - np.asarray(b, dtype=float)
    return d[d != 0]


def _exact_tail(doubled: Sequence[int], observed: int) -> Fraction:
    """P(|T - mean| >= |t - mean|) under random signs, T summed over doubled ranks."""
    total = sum(doubled)
    dist = {0: 1}
    for r in doubled:
        nxt = dict(dist)
        for s, c in dist.items():
            nxt[s + r] = nxt.get(s + r, 0) + c
        dist = nxt
    dev = abs(2 * observed - total)
    hits = sum(c for s, c in dist.items() if abs(2 * s - total) >= dev)
    return Fraction(hits, 2 ** len(doubled))


class WilcoxonResult(NamedTuple):
    p_value: float
    effect_size: float


def wilcoxon_test(paired, b=None, alpha_adjusted: float = 0.05, comparison: str = "") -> StatReport:
    """Two-sided signed-rank test on pairs (a, b) with zero differences dropped.

    Exact for up to 25 non-zero pairs, otherwise a tie-corrected normal
    approximation with continuity correction. Effect size is the matched-pairs
    rank-biserial correlation.
    """
    d = _signed_differences(paired, b)
    n = len(d)
    if n < MIN_PAIRS:
        raise TooFewPairs(f"{n} non-zero differences; need at least {MIN_PAIRS}")
    ranks = average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    effect = (w_plus - w_minus) / (w_plus + w_minus)
    if n <= EXACT_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        t2 = int(round(2 * w_plus))
        p = float(_exact_tail(doubled, t2))
        method = "exact"
    else:
        mean = n * (n + 1) / 4.0
        _, counts = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(counts**3 - counts)) / 48.0
        dev = max(abs(w_plus - mean) - 0.5, 0.0)
        p = 1.0 if var <= 0 else math.erfc(dev / math.sqrt(var) / math.sqrt(2.0))
        method = "normal"
    return StatReport(comparison, min(1.0, p), effect, n, alpha_adjusted, w_plus, w_minus, method)


def wilcoxon_signed_rank(paired, b=None) -> WilcoxonResult:
    """(p_value, effect_size) of the two-sided signed-rank test; see ``wilcoxon_test``."""
    r = wilcoxon_test(paired, b)
    return WilcoxonResult(r.p_value, r.effect_size)


# -- report tables -------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def pivot(rows: Iterable[dict], row_key: str, col_key: str, value_key: str, average: bool = True):
    """Arrange records into (header, body) with one row per ``row_key`` and an 'average' footer."""
    rows = list(rows)
    row_ids = list(dict.fromkeys(r[row_key] for r in rows))
    col_ids = list(dict.fromkeys(r[col_key] for r in rows))
    cell = {(r[row_key], r[col_key]): r[value_key] for r in rows}
    body = [[rid] + [cell.get((rid, c), float("nan")) for c in col_ids] for rid in row_ids]
    if average and body:
        means = []
        for j in range(len(col_ids)):
            vals = [row[j + 1] for row in body if not math.isnan(row[j + 1])]
            means.append(float(np.mean(vals)) if vals else float("nan"))
        body.append(["average"] + means)
    return [row_key] + col_ids, body


def to_csv(header: Sequence[str], body: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in body:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def to_markdown(header: Sequence[str], body: Sequence[Sequence]) -> str:
    lines = ["| " + " | ".join(str(h) for h in header) + " |", "|" + "---|" * len(header)]
    for row in body:
        lines.append("| " + " | ".join(_fmt(v) for v in row) + " |")
    return "\n".join(lines) + "\n"


def records(items: Iterable) -> list[dict]:
    return [asdict(x) for x in items]
