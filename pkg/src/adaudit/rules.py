"""Term-matching classifier used to confirm classes and label credit sub-classes.

A rule fires when one of its terms (a unigram, or a bigram of adjacent
tokens) occurs in the tokenized ad text.  Matching never looks at raw
substrings, so ``job`` does not match ``jobless``.  Every rule runs
independently and the output is a set of labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from sklearn.base import BaseEstimator

from .core import AdClass, CreditSubclass
from .exceptions import DuplicateLabel, EmptyTermList, InvalidTerm, RuleConfigError, UnknownLabel
from .textproc import bigrams, tokenize


@dataclass(frozen=True)
class TermTopicVector:
    label: str
    terms: frozenset

    def __post_init__(self):
        if not self.terms:
            raise EmptyTermList(self.label)


@dataclass(frozen=True)
class RuleSet:
    class_vectors: dict  # AdClass -> TermTopicVector
    subclass_vectors: dict  # CreditSubclass -> TermTopicVector


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise DuplicateLabel(key)
        seen[key] = value
    return seen


def _compile_vectors(document, enum_cls, excluded):
    if not isinstance(document, dict):
        raise RuleConfigError("rules config must map labels to arrays of terms")
    vectors = {}
    for raw_label, terms in document.items():
        try:
            label = enum_cls.parse(raw_label)
        except ValueError:
            raise UnknownLabel(raw_label) from None
        if label is excluded:
            raise UnknownLabel(raw_label)
        if label in vectors:
            raise DuplicateLabel(raw_label)
        if not isinstance(terms, list) or not terms:
            raise EmptyTermList(raw_label)
        normalized = set()
        for term in terms:
            if not isinstance(term, str):
                raise InvalidTerm(raw_label, term)
            tokens = tokenize(term)
            if len(tokens) not in (1, 2):
                raise InvalidTerm(raw_label, term)
            normalized.add(" ".join(tokens))
        vectors[label] = TermTopicVector(label.value, frozenset(normalized))
    return vectors


def compile_rules(document, subclass_document=None) -> RuleSet:
    """Validate rules configs into a :class:`RuleSet`.

    ``document`` maps class names to term lists; ``subclass_document`` does
    the same for credit sub-classes.  Terms are normalized through the
    tokenizer, so ``"Credit-Card"`` becomes ``"credit card"``.
    """
    return RuleSet(
        class_vectors=_compile_vectors(document, AdClass, AdClass.OTHER),
        subclass_vectors=_compile_vectors(
            subclass_document or {}, CreditSubclass, CreditSubclass.OTHER_CREDIT
        ),
    )


def _read_config(path):
    with open(path, encoding="utf-8-sig") as fh:
        return json.load(fh, object_pairs_hook=_reject_duplicate_keys)


def load_rules(rules_path=None, subrules_path=None) -> RuleSet:
    """Load rules from JSON files, falling back to the bundled starter lists."""
    data = resources.files("adaudit") / "data"
    if rules_path is None:
        classes = json.loads((data / "rules.json").read_text(encoding="utf-8"))
    else:
        classes = _read_config(Path(rules_path))
    if subrules_path is None:
        subclasses = json.loads((data / "subrules.json").read_text(encoding="utf-8"))
    else:
        subclasses = _read_config(Path(subrules_path))
    return compile_rules(classes, subclasses)


def _term_stream(text):
    tokens = tokenize(text)
    return set(tokens) | set(bigrams(tokens))


def _match(vectors, text):
    present = _term_stream(text)
    return {label for label, vec in vectors.items() if not vec.terms.isdisjoint(present)}


def classify_all(rules: RuleSet, ad_text: str) -> set:
    """All classes whose term vector matches ``ad_text``; never ``OTHER``."""
    return _match(rules.class_vectors, ad_text)


def subclassify_credit(rules: RuleSet, ad_text: str) -> set:
    """Credit sub-classes matched by ``ad_text``, or ``{OTHER_CREDIT}``."""
    return _match(rules.subclass_vectors, ad_text) or {CreditSubclass.OTHER_CREDIT}


class RulesClassifier(BaseEstimator):
    """Multi-label term matcher with an estimator-style interface.

    ``predict`` returns one ``frozenset`` of :class:`AdClass` per document.
    Nothing is learned in ``fit``; the term lists are configuration.
    """

    def __init__(self, rules=None, subrules=None):
        self.rules = rules
        self.subrules = subrules

    def fit(self, X=None, y=None):
        if isinstance(self.rules, RuleSet):
            self.ruleset_ = self.rules
        elif isinstance(self.rules, dict):
            self.ruleset_ = compile_rules(self.rules, self.subrules)
        else:
            self.ruleset_ = load_rules(self.rules, self.subrules)
        return self

    def _ruleset(self):
        if not hasattr(self, "ruleset_"):
            self.fit()
        return self.ruleset_

    def predict(self, X):
        rules = self._ruleset()
        return [frozenset(classify_all(rules, text)) for text in X]

    def predict_subclass(self, X):
        rules = self._ruleset()
        return [frozenset(subclassify_credit(rules, text)) for text in X]
