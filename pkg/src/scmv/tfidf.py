"""TF-IDF featurization with top-k feature selection, one view at a time.

Convention (recorded in model metadata as ``FEATURIZATION_TAG``): tf is the
raw term count, idf is ``ln(n / df)``, no length normalization.  Features are
ranked by the sum of their weights over all documents, ties broken by
lexicographic term order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import TwoViewDataset
from .errors import ValidationError

FEATURIZATION_TAG = "tfidf-rawcount-lnidf-v1"
DEFAULT_K = 400


@dataclass(frozen=True)
class Vocabulary:
    """Selected terms in column order, with document frequencies."""

    terms: tuple
    df: tuple
    n_docs: int

    def __post_init__(self):
        if len(self.terms) != len(self.df):
            raise ValidationError("terms and df must have equal length")
        if len(set(self.terms)) != len(self.terms):
            raise ValidationError("vocabulary terms must be unique")

    def __len__(self):
        return len(self.terms)

    @property
    def index(self) -> dict:
        return {t: i for i, t in enumerate(self.terms)}

    @property
    def idf(self) -> np.ndarray:
        return np.array([math.log(self.n_docs / df) for df in self.df])

    def transform(self, docs: Sequence[Sequence[str]]) -> np.ndarray:
        """Weight new documents with the stored idf; unknown terms are dropped."""
        index = self.index
        idf = self.idf
        out = np.zeros((len(docs), len(self.terms)))
        for r, doc in enumerate(docs):
            for term, count in Counter(doc).items():
                j = index.get(term)
                if j is not None:
                    out[r, j] = count * idf[j]
        return out

    def to_dict(self):
        return {"terms": list(self.terms), "df": list(self.df), "n_docs": self.n_docs}

    @classmethod
    def from_dict(cls, d):
        return cls(terms=tuple(d["terms"]), df=tuple(int(x) for x in d["df"]), n_docs=int(d["n_docs"]))


def tokenize(text: str) -> list:
    return text.split()


def fit_view(docs: Sequence[Sequence[str]], k: int = DEFAULT_K) -> tuple[np.ndarray, Vocabulary]:
    """TF-IDF matrix of the ``k`` top-scoring terms for one view."""
    if k < 1:
        raise ValidationError("k must be positive")
    n = len(docs)
    if n == 0:
        raise ValidationError("no documents")
    counts = [Counter(doc) for doc in docs]
    df = Counter()
    total = Counter()
    for c in counts:
        df.update(c.keys())
        total.update(c)
    # score = sum_docs tf * idf = idf * total count
    scored = [(-(total[t] * math.log(n / df[t])), t) for t in df]
    scored.sort()
    chosen = [t for _, t in scored[:k]]
    vocab = Vocabulary(terms=tuple(chosen), df=tuple(df[t] for t in chosen), n_docs=n)
    return vocab.transform(docs), vocab


def featurize_corpus(docs_view1, docs_view2, labels, k: int = DEFAULT_K) -> TwoViewDataset:
    """Featurize parallel token lists; ``labels`` covers the first ``len(labels)`` docs."""
    if len(docs_view1) != len(docs_view2):
        raise ValidationError(
            f"dimension mismatch: {len(docs_view1)} view-1 docs vs {len(docs_view2)} view-2 docs"
        )
    if len(labels) > len(docs_view1):
        raise ValidationError("more labels than documents")
    x1, v1 = fit_view(docs_view1, k)
    x2, v2 = fit_view(docs_view2, k)
    return TwoViewDataset(x1=x1, x2=x2, y=np.asarray(labels, dtype=float), vocab=(v1, v2))
