"""Audit toolkit for regulated-category ads: ingest, classify, augment, report."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AdClass,
    AdRecord,
    AgeBucket,
    CreditSubclass,
    DemographicShare,
    Gender,
    normalize_demographics,
    parse_ad_record,
    record_to_document,
)
from .naive_bayes import NaiveBayesAdClassifier, NbModel  # noqa: E402
from .rules import RulesClassifier, RuleSet, compile_rules  # noqa: E402
from .textproc import BagOfWordsVectorizer, tokenize, vectorize  # noqa: E402
from .augment import AdAugmenter, AugmentedAd  # noqa: E402

__all__ = [
    "AdAugmenter",
    "AdClass",
    "AdRecord",
    "AgeBucket",
    "AugmentedAd",
    "BagOfWordsVectorizer",
    "CreditSubclass",
    "DemographicShare",
    "Gender",
    "NaiveBayesAdClassifier",
    "NbModel",
    "RuleSet",
    "RulesClassifier",
    "compile_rules",
    "normalize_demographics",
    "parse_ad_record",
    "record_to_document",
    "tokenize",
    "vectorize",
]
