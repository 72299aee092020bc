"""Scikit-learn style estimator wrapping the approximation pipeline.

``GranularApproximator.fit(X, y)`` computes, for the training instances
themselves, the membership assignment closest to the observed labels that is
still representable by granules of the chosen fuzzy relation (a transductive
model, like label-propagation style estimators).  The fitted attributes
expose the per-instance memberships and the solver diagnostics;
``fit_predict`` returns the labels with low-membership instances relabeled to
their strongest competing class.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .dataset import LabeledDataset
from .pipeline import RunConfig, run_approximation, suggest_relabels
from .geometry import export_geometry
from .tolerances import Tolerances


class GranularApproximator(BaseEstimator):
    """Multi-class granular approximation of a labeled dataset.

    Parameters mirror the run configuration: the fuzzy relation family
    ("similarity", "dominance", "euclidean", "mahalanobis") with its
    parameter (``gamma`` for the triangular families, ``a`` and optionally
    ``sigma`` for the metric ones), the connective triplet, and the loss
    ("mse" solves the quadratic program, "mae" the linear one).

    Attributes after ``fit``: ``membership_`` (own-class membership beta per
    training instance), ``alpha_`` (transformed scale), ``objective_``,
    ``partition_``, ``tight_partner_``, ``max_violation_``,
    ``kkt_residual_``, ``classes_`` and the full ``run_`` bundle.
    """

    def __init__(self, relation="similarity", gamma=1.0, a=1.0, sigma=None,
                 tnorm="lukasiewicz", isomorphism="identity", loss="mse",
                 alpha_level=0.5, relabel_threshold=0.5,
                 scale_metric_attributes=False, attribute_ranges=None,
                 allow_asymmetric=False, tolerances=None):
        self.relation = relation
        self.gamma = gamma
        self.a = a
        self.sigma = sigma
        self.tnorm = tnorm
        self.isomorphism = isomorphism
        self.loss = loss
        self.alpha_level = alpha_level
        self.relabel_threshold = relabel_threshold
        self.scale_metric_attributes = scale_metric_attributes
        self.attribute_ranges = attribute_ranges
        self.allow_asymmetric = allow_asymmetric
        self.tolerances = tolerances

    def _config(self) -> RunConfig:
        return RunConfig(
            relation_family=self.relation, gamma=self.gamma, a=self.a,
            sigma=None if self.sigma is None else np.asarray(self.sigma, float),
            scale_metric_attributes=self.scale_metric_attributes,
            tnorm=self.tnorm, isomorphism=self.isomorphism, loss=self.loss,
            alpha_level=self.alpha_level,
            relabel_threshold=self.relabel_threshold,
            allow_asymmetric=self.allow_asymmetric,
            attribute_ranges=self.attribute_ranges,
            tolerances=self.tolerances or Tolerances())

    def fit(self, X, y):
        X = check_array(X, dtype=float, ensure_2d=True)
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError("y must be one label per row of X")
        config = self._config()
        dataset = LabeledDataset.from_arrays(X, y)
        run = run_approximation(dataset, config)

        self.run_ = run
        self.config_ = config
        self.dataset_ = run.dataset  # carries declared ranges when given
        self.relation_ = run.relation
        self.bounds_ = run.bounds
        self.result_ = run.result
        self.membership_ = run.result.beta
        self.alpha_ = run.result.alpha
        self.objective_ = run.result.objective
        self.partition_ = run.result.partition
        self.tight_partner_ = run.result.tight_partner
        self.max_violation_ = run.feasibility.max_violation
        self.kkt_residual_ = run.result.kkt_residual
        self.labels_ = y.copy()
        self.classes_ = np.asarray(dataset.classes, dtype=object)
        self.n_features_in_ = X.shape[1]
        return self

    def fit_predict(self, X, y):
        """Fit and return the labels with suggested relabels applied.

        Instances with membership strictly below the threshold take their
        strongest competing class; exact ties keep the original label.
        """
        self.fit(X, y)
        report = suggest_relabels(self.run_)
        return report.relabeled_labels(self.labels_)

    def suggest_relabels(self, threshold=None):
        check_is_fitted(self, "run_")
        return suggest_relabels(self.run_, threshold=threshold)

    def export_geometry(self, alpha_level=None):
        check_is_fitted(self, "run_")
        return export_geometry(self.result_, self.dataset_, self.config_,
                               alpha_level=alpha_level)
