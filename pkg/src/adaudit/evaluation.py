"""Classifier evaluation, the strict NB-and-rules filter, and seeded splits."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field

import numpy as np

from .core import AdClass
from .exceptions import EmptyInput, InvalidFraction, LengthMismatch
from .validation import check_labels

METRIC_COLUMNS = ("class", "precision", "recall", "f1", "support")


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class PerClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    zero_division: bool = False


@dataclass(frozen=True)
class ClassMetrics:
    per_class: dict  # AdClass -> PerClassMetrics
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    confusion: np.ndarray = field(repr=False, compare=False)

    @property
    def zero_division_flags(self):
        return {c for c, m in self.per_class.items() if m.zero_division}

    def rows(self):
        """Table rows ``(class, precision, recall, f1, support)`` with 4-decimal f1."""
        return [
            (c.value, round(m.precision, 4), round(m.recall, 4), round(m.f1, 4), m.support)
            for c, m in self.per_class.items()
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        for cls, p, r, f, s in self.rows():
            writer.writerow([cls, f"{p:.4f}", f"{r:.4f}", f"{f:.4f}", s])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'class':<12}{'precision':>11}{'recall':>9}{'f1':>9}{'support':>9}"]
        for cls, p, r, f, s in self.rows():
            lines.append(f"{cls:<12}{p:>11.4f}{r:>9.4f}{f:>9.4f}{s:>9d}")
        lines.append(
            f"{'macro':<12}{self.macro_precision:>11.4f}{self.macro_recall:>9.4f}"
            f"{self.macro_f1:>9.4f}"
        )
        lines.append(f"accuracy {self.accuracy:.4f}")
        return "\n".join(lines) + "\n"


def confusion_matrix(gold, predicted) -> np.ndarray:
    """5x5 counts, rows = gold class, columns = predicted class (AdClass order)."""
    classes = list(AdClass)
    index = {c: i for i, c in enumerate(classes)}
    matrix = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for g, p in zip(gold, predicted):
        matrix[index[g], index[p]] += 1
    return matrix


def metrics(gold, predicted) -> ClassMetrics:
    """Per-class precision/recall/F1 plus macro averages and accuracy.

    Classes that never occur in ``gold`` nor ``predicted`` are left out of
    the per-class table and the macro averages.  A zero denominator yields
    0 and sets ``zero_division`` on that class.
    """
    if len(gold) != len(predicted):
        raise LengthMismatch(f"{len(gold)} gold labels vs {len(predicted)} predictions")
    if len(gold) == 0:
        raise EmptyInput("no labels to evaluate")
    gold = check_labels(gold, "gold")
    predicted = check_labels(predicted, "predicted")
    matrix = confusion_matrix(gold, predicted)

    per_class = {}
    for i, c in enumerate(AdClass):
        tp = int(matrix[i, i])
        n_pred = int(matrix[:, i].sum())
        n_gold = int(matrix[i, :].sum())
        if n_pred == 0 and n_gold == 0:
            continue
        flag = n_pred == 0 or n_gold == 0
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_gold if n_gold else 0.0
        per_class[c] = PerClassMetrics(precision, recall, f1_score(precision, recall), n_gold, flag)

    n = len(per_class)
    return ClassMetrics(
        per_class=per_class,
        macro_precision=sum(m.precision for m in per_class.values()) / n,
        macro_recall=sum(m.recall for m in per_class.values()) / n,
        macro_f1=sum(m.f1 for m in per_class.values()) / n,
        accuracy=float(np.trace(matrix)) / len(gold),
        confusion=matrix,
    )


def strict_filter(nb_label, rule_labels):
    """Keep the NB label only when the rules model agrees (OTHER passes through)."""
    if nb_label is AdClass.OTHER or nb_label in rule_labels:
        return nb_label
    return None


def filtered_precision(gold, filtered) -> dict:
    """Precision per class over items that survived the strict filter.

    ``filtered`` holds an :class:`AdClass` or ``None`` per item; ``None``
    items are excluded.  Classes never kept are omitted.
    """
    if len(gold) != len(filtered):
        raise LengthMismatch(f"{len(gold)} gold labels vs {len(filtered)} filtered labels")
    kept = {}
    hits = {}
    for g, f in zip(gold, filtered):
        if f is None:
            continue
        kept[f] = kept.get(f, 0) + 1
        hits[f] = hits.get(f, 0) + (g == f)
    return {c: hits[c] / kept[c] for c in sorted(kept)}


def stratified_split(labeled, test_fraction, seed, label_of=lambda item: item[1]):
    """Split ``labeled`` into ``(train, test)`` class by class.

    Each class contributes ``round(n * test_fraction)`` items to the test
    side, clamped to ``[1, n - 1]`` when ``n >= 2`` so both sides see the
    class; singleton classes stay in train.  Items keep their input order
    within each partition.  The same seed always gives the same split.
    """
    if not 0 < test_fraction < 1:
        raise InvalidFraction(f"test_fraction must lie in (0, 1), got {test_fraction!r}")
    items = list(labeled)
    by_class = {}
    for i, item in enumerate(items):
        by_class.setdefault(label_of(item), []).append(i)

    rng = random.Random(seed)
    test_idx = set()
    for label in sorted(by_class, key=str):
        idx = by_class[label]
        n = len(idx)
        k = int(n * test_fraction + 0.5)
        if n >= 2:
            k = min(max(k, 1), n - 1)
        else:
            k = 0
        shuffled = idx[:]
        rng.shuffle(shuffled)
        test_idx.update(shuffled[:k])

    train = [item for i, item in enumerate(items) if i not in test_idx]
    test = [item for i, item in enumerate(items) if i in test_idx]
    return train, test
