"""Multinomial Naive Bayes over unigram+bigram bags of words.

All probabilities are kept as natural logs.  Classes that have no training
documents keep a prior of zero (log prior ``-inf``) and never win a
prediction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .core import AdClass
from .exceptions import EmptyTrainingSet, NonPositiveAlpha, SchemaMismatch
from .validation import check_bags, check_consistent_length, check_labels

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class NbModel:
    classes: tuple
    class_log_prior: dict
    token_log_likelihood: dict  # AdClass -> {token: log P(token | class)}
    vocabulary: frozenset
    smoothing_alpha: float
    schema_version: int = SCHEMA_VERSION

    @property
    def eligible_classes(self):
        """Classes seen in training, in tie-break order."""
        return tuple(c for c in self.classes if self.class_log_prior[c] > -math.inf)


def train(labeled, alpha=1.0) -> NbModel:
    """Fit class priors and smoothed token likelihoods.

    ``labeled`` is an iterable of ``(bag_of_words, AdClass)`` pairs.  Token
    likelihoods use Lidstone smoothing over the union vocabulary:
    ``(count(t, c) + alpha) / (total(c) + alpha * |V|)``.
    """
    if isinstance(alpha, bool) or not alpha > 0 or not math.isfinite(alpha):
        raise NonPositiveAlpha(f"alpha must be a positive finite number, got {alpha!r}")
    alpha = float(alpha)
    labeled = list(labeled)
    if not labeled:
        raise EmptyTrainingSet("cannot train on an empty corpus")

    bags = check_bags([bag for bag, _ in labeled])
    labels = check_labels([label for _, label in labeled])

    doc_counts = {c: 0 for c in AdClass}
    token_counts = {c: {} for c in AdClass}
    vocabulary = set()
    for bag, label in zip(bags, labels):
        doc_counts[label] += 1
        counts = token_counts[label]
        for token, n in bag.items():
            counts[token] = counts.get(token, 0) + int(n)
            vocabulary.add(token)

    n_docs = len(labeled)
    log_prior = {
        c: math.log(doc_counts[c] / n_docs) if doc_counts[c] else -math.inf
        for c in AdClass
    }
    v = len(vocabulary)
    log_likelihood = {}
    for c in AdClass:
        counts = token_counts[c]
        if v == 0:  # every training document was empty
            log_likelihood[c] = {}
            continue
        log_denom = math.log(sum(counts.values()) + alpha * v)
        log_likelihood[c] = {
            t: math.log(counts.get(t, 0) + alpha) - log_denom for t in sorted(vocabulary)
        }

    return NbModel(
        classes=tuple(AdClass),
        class_log_prior=log_prior,
        token_log_likelihood=log_likelihood,
        vocabulary=frozenset(vocabulary),
        smoothing_alpha=alpha,
    )


def joint_log_scores(model: NbModel, bow) -> dict:
    """Unnormalized log P(c) + sum_t n_t log P(t|c) for each eligible class.

    Tokens outside the vocabulary are skipped.
    """
    known = [(t, n) for t, n in bow.items() if t in model.vocabulary]
    scores = {}
    for c in model.eligible_classes:
        table = model.token_log_likelihood[c]
        terms = [n * table[t] for t, n in known]
        terms.append(model.class_log_prior[c])
        scores[c] = math.fsum(terms)
    return scores


def predict(model: NbModel, bow):
    """Return ``(label, log_posterior)`` for one bag of words.

    ``log_posterior`` covers the eligible classes and is normalized with
    log-sum-exp.  Ties on the score go to the earliest class in
    :class:`AdClass` order.
    """
    scores = joint_log_scores(model, bow)
    label = None
    for c in model.eligible_classes:
        if label is None or scores[c] > scores[label]:
            label = c
    top = scores[label]
    log_norm = top + math.log(math.fsum(math.exp(s - top) for s in scores.values()))
    return label, {c: s - log_norm for c, s in scores.items()}


# --- persistence ----------------------------------------------------------------


def model_to_dict(model: NbModel) -> dict:
    return {
        "schema_version": model.schema_version,
        "alpha": model.smoothing_alpha,
        "classes": [c.value for c in model.classes],
        "priors": {
            c.value: (None if lp == -math.inf else lp)
            for c, lp in model.class_log_prior.items()
        },
        "token_log_likelihood": {
            c.value: dict(sorted(table.items()))
            for c, table in model.token_log_likelihood.items()
        },
        "vocabulary": sorted(model.vocabulary),
    }


def model_from_dict(doc: dict) -> NbModel:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"model schema_version {version!r} is not supported (expected {SCHEMA_VERSION})"
        )
    classes = tuple(AdClass.parse(c) for c in doc["classes"])
    priors = {
        AdClass.parse(c): (-math.inf if lp is None else float(lp))
        for c, lp in doc["priors"].items()
    }
    tables = {
        AdClass.parse(c): {t: float(v) for t, v in table.items()}
        for c, table in doc["token_log_likelihood"].items()
    }
    return NbModel(
        classes=classes,
        class_log_prior=priors,
        token_log_likelihood=tables,
        vocabulary=frozenset(doc["vocabulary"]),
        smoothing_alpha=float(doc["alpha"]),
        schema_version=version,
    )


def save_model(model: NbModel, path) -> None:
    text = json.dumps(model_to_dict(model), ensure_ascii=False, indent=None, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path) -> NbModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise SchemaMismatch("model file is not a JSON object")
    return model_from_dict(doc)


def model_roundtrip(model: NbModel, path) -> NbModel:
    save_model(model, path)
    return load_model(path)


class NaiveBayesAdClassifier(BaseEstimator, ClassifierMixin):
    """Estimator wrapper around :func:`train` and :func:`predict`.

    Parameters
    ----------
    alpha : float, default=1.0
        Additive smoothing applied to token counts.

    Attributes
    ----------
    model_ : NbModel
        The fitted parameters.
    classes_ : ndarray of AdClass
        Classes that received training documents, in tie-break order.
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y):
        bags = check_bags(X)
        labels = check_labels(y)
        check_consistent_length(bags, labels)
        self.model_ = train(zip(bags, labels), self.alpha)
        self.classes_ = np.array(self.model_.eligible_classes, dtype=object)
        return self

    @classmethod
    def from_model(cls, model: NbModel):
        est = cls(alpha=model.smoothing_alpha)
        est.model_ = model
        est.classes_ = np.array(model.eligible_classes, dtype=object)
        return est

    def predict(self, X):
        check_is_fitted(self, "model_")
        return np.array(
            [predict(self.model_, bag)[0] for bag in check_bags(X)], dtype=object
        )

    def predict_log_proba(self, X):
        check_is_fitted(self, "model_")
        rows = []
        for bag in check_bags(X):
            _, post = predict(self.model_, bag)
            rows.append([post[c] for c in self.classes_])
        return np.array(rows, dtype=float).reshape(-1, len(self.classes_))

    def predict_proba(self, X):
        return np.exp(self.predict_log_proba(X))

    def score(self, X, y, sample_weight=None):
        pred = self.predict(X)
        gold = check_labels(y)
        check_consistent_length(pred, gold)
        hits = np.array([p == g for p, g in zip(pred, gold)], dtype=float)
        return float(np.average(hits, weights=sample_weight))
