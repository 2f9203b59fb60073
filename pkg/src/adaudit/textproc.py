"""Tokenization and unigram+bigram bag-of-words features."""

from __future__ import annotations

import unicodedata
from collections import Counter

from sklearn.base import BaseEstimator, TransformerMixin

#: A bag of words maps unigram and bigram strings to positive counts.
BagOfWords = dict


def _is_word_char(ch: str) -> bool:
    # Unicode letters (L*) and digits (Nd); everything else is a boundary
    cat = unicodedata.category(ch)
    return cat[0] == "L" or cat == "Nd"


def tokenize(text: str) -> list:
    """Lowercase ``text`` and split it on every non letter/digit character.

    No stemming, lemmatization or stop-word removal is applied.

    >>> tokenize("Now Hiring!")
    ['now', 'hiring']
    """
    tokens = []
    current = []
    for ch in unicodedata.normalize("NFC", text).lower():
        if _is_word_char(ch):
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def bigrams(tokens: list) -> list:
    return [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


def vectorize(tokens: list) -> BagOfWords:
    """Count every unigram and every adjacent-pair bigram of ``tokens``."""
    counts = Counter(tokens)
    counts.update(bigrams(tokens))
    return dict(counts)


def text_to_bow(text: str) -> BagOfWords:
    return vectorize(tokenize(text))


class BagOfWordsVectorizer(BaseEstimator, TransformerMixin):
    """Stateless transformer from raw ad texts to unigram+bigram bags.

    Fits nothing; exists so the classifiers compose in a
    :class:`sklearn.pipeline.Pipeline`.
    """

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        out = []
        for text in X:
            if not isinstance(text, str):
                raise TypeError(f"expected str documents, got {type(text).__name__}")
            out.append(text_to_bow(text))
        return out
