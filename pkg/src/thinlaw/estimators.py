"""scikit-learn transformers acting on matrices of row pmfs.

Each row of X is a pmf on {0, ..., n_columns - 1}; a row summing to less
than one carries the deficit as opaque mass beyond the last column. Output
rows keep the input width, so transformers chain inside a ``Pipeline``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_int, check_pmf_array, check_probability
from .dist import DiscreteDist
from .thinning import TransformParams, condition_at_least, thin, transform

__all__ = ["BinomialThinning", "ConditionAtLeast", "ThinConditionTransformer"]


def _rows(X):
    for row in X:
        yield DiscreteDist(0, row, max(0.0, 1.0 - row.sum()))


def _dense(dist, width):
    return dist.dense(0, width - 1)


class _RowPmfTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = check_pmf_array(X)
        self._validate_params()
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_pmf_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        width = X.shape[1]
        return np.vstack([_dense(self._apply(d, width - 1), width) for d in _rows(X)])


class BinomialThinning(_RowPmfTransformer):
    """Replace each row's law D by the law of Bin(D, p)."""

    def __init__(self, p=0.5):
        self.p = p

    def _validate_params(self):
        check_probability(self.p, "p")

    def _apply(self, dist, upto):
        return thin(dist, self.p, upto)


class ConditionAtLeast(_RowPmfTransformer):
    """Condition each row's law on D >= m."""

    def __init__(self, m=1):
        self.m = m

    def _validate_params(self):
        check_int(self.m, "m", min_value=0)

    def _apply(self, dist, upto):
        return condition_at_least(dist, self.m)


class ThinConditionTransformer(_RowPmfTransformer):
    """T_{p,m} applied row by row."""

    def __init__(self, p=0.5, m=1):
        self.p = p
        self.m = m

    def _validate_params(self):
        TransformParams(self.p, self.m)

    def _apply(self, dist, upto):
        return transform(dist, TransformParams(self.p, self.m), upto)
