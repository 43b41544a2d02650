"""scikit-learn style facade over :func:`natop.classifier.classify`.

``fit(sources, target)`` solves for the natural operators; ``transform`` applies
every basis operator to argument tuples.  Hyperparameters follow the usual
``get_params`` / ``set_params`` protocol so the classifier can be swept with
standard tooling.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from natop.classifier import OperatorScheme, classify, evaluate, match_against, pretty_print
from natop.validation import check_bundle, check_bundles, check_dimension, check_order, check_sections


class NaturalOperatorClassifier(TransformerMixin, BaseEstimator):
    """Find all natural multilinear operators of order <= ``r`` between fixed bundles over ``R^m``.

    Parameters
    ----------
    r : int
        Maximal derivative order in each argument.
    m : int
        Dimension of the base.
    reduce_weights : bool
        Drop coefficients excluded by the torus weights before elimination.
    max_unknowns : int or None
        Resource cap; None uses ``NATOP_MAX_UNKNOWNS`` or the built-in default.
    n_jobs : int
        Worker processes for row generation.
    """

    def __init__(self, r=1, m=2, reduce_weights=True, max_unknowns=None, n_jobs=1):
        self.r = r
        self.m = m
        self.reduce_weights = reduce_weights
        self.max_unknowns = max_unknowns
        self.n_jobs = n_jobs

    def fit(self, X, y):
        """``X``: source bundles (expressions or ``BundleSpec``); ``y``: the target bundle."""
        sources = check_bundles(X)
        target = check_bundle(y)
        r, m = check_order(self.r), check_dimension(self.m)
        self.result_ = classify(sources, target, r, m, reduce_weights=self.reduce_weights,
                                max_unknowns=self.max_unknowns, n_jobs=self.n_jobs)
        self.sources_ = sources
        self.target_ = target
        self.basis_ = list(self.result_.basis)
        self.dimension_ = self.result_.dimension
        return self

    def transform(self, X):
        """Apply each basis operator to each argument tuple in ``X``.

        Returns a list (one entry per tuple) of lists of ``PolySection``.
        """
        check_is_fitted(self, "result_")
        out = []
        for args in X:
            args = check_sections(args, self.sources_, self.result_.m)
            out.append([evaluate(D, args) for D in self.basis_])
        return out

    def match(self, candidate: OperatorScheme):
        """Coordinates of ``candidate`` in the fitted basis, or None."""
        check_is_fitted(self, "result_")
        return match_against(self.result_, candidate)

    def describe(self) -> list[str]:
        check_is_fitted(self, "result_")
        return [pretty_print(D) for D in self.basis_]
