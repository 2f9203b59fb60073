"""Input validation helpers shared by the estimators."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from .core import AdClass
from .exceptions import EmptyInput, LengthMismatch


def check_bags(X, name="X"):
    """Return ``X`` as a list of bag-of-words mappings with positive int counts."""
    if isinstance(X, (str, bytes)) or isinstance(X, Mapping):
        raise TypeError(f"{name} must be a sequence of bags of words, not a single document")
    bags = list(X)
    for i, bag in enumerate(bags):
        if not isinstance(bag, Mapping):
            raise TypeError(
                f"{name}[{i}] is {type(bag).__name__}; vectorize raw text with "
                "BagOfWordsVectorizer first"
            )
        for token, count in bag.items():
            if not isinstance(token, str):
                raise TypeError(f"{name}[{i}] has a non-string token {token!r}")
            if isinstance(count, bool) or int(count) != count or count < 1:
                raise ValueError(f"{name}[{i}] count for {token!r} must be a positive integer")
    return bags


def check_labels(y, name="y"):
    """Coerce labels (enum members or their string names) to :class:`AdClass`."""
    if isinstance(y, (str, bytes)):
        raise TypeError(f"{name} must be a sequence of labels")
    out = []
    for label in (y.tolist() if isinstance(y, np.ndarray) else y):
        try:
            out.append(AdClass.parse(label))
        except ValueError:
            raise ValueError(f"unknown ad class {label!r} in {name}") from None
    return out


def check_consistent_length(*arrays):
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise LengthMismatch(f"inconsistent input lengths: {sorted(lengths)}")


def check_nonempty(seq, name="input"):
    if len(seq) == 0:
        raise EmptyInput(f"{name} is empty")
    return seq
