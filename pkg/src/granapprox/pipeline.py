"""End-to-end workflow: config, relation building, solving, relabeling.

A run is driven by a :class:`RunConfig` (usually loaded from JSON): it names
the relation family and its parameters, the connective triplet, the loss, and
the reporting knobs.  ``run_approximation`` assembles relation, bound matrix,
solver and verification into a :class:`PipelineRun`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry as _geometry
from .connectives import ResidualTriplet
from .dataset import LabeledDataset
from .geometry import DOMINANCE, EUCLIDEAN, MAHALANOBIS, SIMILARITY
from .relations import (AttributeTable, RelationMatrix, euclidean_metric,
                        mahalanobis_metric, metric_relation,
                        triangular_dominance, triangular_similarity)
from .solver import (ApproximationResult, BoundMatrix, FeasibilityReport,
                     TightnessReport, build_bounds, solve_lp, solve_qp,
                     verify_constraints, verify_tightness)
from .tolerances import Tolerances


class ConfigError(ValueError):
    """Invalid run configuration."""


_FAMILIES = (SIMILARITY, DOMINANCE, EUCLIDEAN, MAHALANOBIS)
_LOSSES = ("mae", "mse")


@dataclass
class RunConfig:
    """Validated run parameters.

    ``sigma`` is given in config files as a row-major list (flat or nested)
    and must be symmetric positive-definite.  The gamma / a parameters are
    global for the run, one value across all attributes.
    """

    relation_family: str = SIMILARITY
    gamma: float = 1.0
    a: float = 1.0
    sigma: Optional[np.ndarray] = None
    scale_metric_attributes: bool = False
    tnorm: str = "lukasiewicz"
    isomorphism: str = "identity"
    loss: str = "mse"
    label_column: str = "label"
    id_column: Optional[str] = None
    seed: int = 0
    alpha_level: float = 0.5
    relabel_threshold: float = 0.5
    allow_asymmetric: bool = False
    attribute_ranges: Optional[tuple] = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.relation_family not in _FAMILIES:
            raise ConfigError(f"unknown relation family "
                              f"{self.relation_family!r}; expected one of "
                              f"{_FAMILIES}")
        if self.relation_family in (SIMILARITY, DOMINANCE) and not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.relation_family in (EUCLIDEAN, MAHALANOBIS) and not self.a > 0:
            raise ConfigError(f"a must be positive, got {self.a}")
        if self.relation_family == MAHALANOBIS:
            if self.sigma is None:
                raise ConfigError("mahalanobis relation requires sigma")
            try:
                mahalanobis_metric(self.sigma)
            except ValueError as exc:
                raise ConfigError(f"invalid sigma: {exc}")
        if self.loss not in _LOSSES:
            raise ConfigError(f"loss must be one of {_LOSSES}, got "
                              f"{self.loss!r} (only the scaled absolute and "
                              "squared errors are wired to the multi-class "
                              "reduction)")
        try:
            trip = ResidualTriplet.from_names(self.tnorm, self.isomorphism)
        except ValueError as exc:
            raise ConfigError(str(exc))
        if not trip.is_left_continuous:
            raise ConfigError("non-residuated triplet: the drastic t-norm is "
                              "rejected by the solvers")
        if not trip.is_lukasiewicz_family:
            raise ConfigError(f"triplet {trip.describe()} is not in the "
                              "Lukasiewicz family; the LP/QP reductions do "
                              "not apply")
        if not 0.0 < self.alpha_level < 1.0:
            raise ConfigError(f"alpha_level must be in (0, 1), got "
                              f"{self.alpha_level}")
        if not 0.0 < self.relabel_threshold <= 1.0:
            raise ConfigError(f"relabel_threshold must be in (0, 1], got "
                              f"{self.relabel_threshold}")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        data = dict(raw)
        kwargs = {}
        rel = data.pop("relation", {})
        if not isinstance(rel, dict):
            raise ConfigError("'relation' must be an object")
        rel = dict(rel)
        if "family" in rel:
            kwargs["relation_family"] = str(rel.pop("family"))
        for key in ("gamma", "a"):
            if key in rel:
                kwargs[key] = float(rel.pop(key))
        if "sigma" in rel:
            kwargs["sigma"] = _parse_sigma(rel.pop("sigma"))
        if "scale_attributes" in rel:
            kwargs["scale_metric_attributes"] = bool(rel.pop("scale_attributes"))
        if "ranges" in rel:
            kwargs["attribute_ranges"] = tuple(float(x) for x in rel.pop("ranges"))
        if rel:
            raise ConfigError(f"unknown relation keys: {sorted(rel)}")
        trip = data.pop("triplet", {})
        if not isinstance(trip, dict):
            raise ConfigError("'triplet' must be an object")
        trip = dict(trip)
        if "kind" in trip:
            kwargs["tnorm"] = str(trip.pop("kind"))
        if "isomorphism" in trip:
            kwargs["isomorphism"] = str(trip.pop("isomorphism"))
        if trip:
            raise ConfigError(f"unknown triplet keys: {sorted(trip)}")
        for key, cast in (("loss", str), ("label_column", str),
                          ("id_column", str), ("seed", int),
                          ("alpha_level", float), ("relabel_threshold", float),
                          ("allow_asymmetric", bool)):
            if key in data:
                val = data.pop(key)
                kwargs[key] = None if val is None else cast(val)
        if "tolerances" in data:
            tol = data.pop("tolerances")
            if not isinstance(tol, dict):
                raise ConfigError("'tolerances' must be an object")
            try:
                kwargs["tolerances"] = Tolerances.from_dict(tol)
            except ValueError as exc:
                raise ConfigError(str(exc))
        if data:
            raise ConfigError(f"unknown config keys: {sorted(data)}")
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc))

    @classmethod
    def from_json_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}")
        return cls.from_dict(raw)

    def triplet(self) -> ResidualTriplet:
        return ResidualTriplet.from_names(self.tnorm, self.isomorphism)

    def build_relation(self, table) -> RelationMatrix:
        if self.relation_family == SIMILARITY:
            return triangular_similarity(table, self.gamma)
        if self.relation_family == DOMINANCE:
            return triangular_dominance(table, self.gamma)
        if self.relation_family == EUCLIDEAN:
            return metric_relation(table, euclidean_metric, self.a,
                                   scale_attributes=self.scale_metric_attributes)
        return metric_relation(table, mahalanobis_metric(self.sigma), self.a,
                               scale_attributes=self.scale_metric_attributes)


def _parse_sigma(raw) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 1:
        k = int(round(arr.shape[0] ** 0.5))
        if k * k != arr.shape[0]:
            raise ConfigError("flat sigma must have a square number of entries")
        arr = arr.reshape(k, k)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError("sigma must be a square matrix")
    return arr


@dataclass
class PipelineRun:
    """Everything produced by one approximation run."""

    dataset: LabeledDataset
    config: RunConfig
    relation: RelationMatrix
    bounds: BoundMatrix
    result: ApproximationResult
    feasibility: FeasibilityReport
    tightness: TightnessReport


def run_approximation(dataset: LabeledDataset, config: RunConfig) -> PipelineRun:
    """Build the relation and bounds, solve, and attach verification reports.

    When the config declares attribute ranges, the run (and everything
    downstream: granule geometry, relabel coverage) uses a dataset rebuilt
    with those ranges instead of the observed max - min.
    """
    if config.attribute_ranges is not None:
        table = AttributeTable.from_array(
            dataset.table.values, names=dataset.table.names,
            ranges=config.attribute_ranges)
        dataset = LabeledDataset(dataset.ids, table, dataset.labels.copy())
    trip = config.triplet()
    relation = config.build_relation(dataset.table)
    bounds = build_bounds(relation, dataset.labels, trip,
                          eps=config.tolerances.rel)
    if config.loss == "mae":
        result = solve_lp(bounds, allow_asymmetric=config.allow_asymmetric)
    else:
        result = solve_qp(bounds, allow_asymmetric=config.allow_asymmetric)
    feas = verify_constraints(result, bounds, eps=config.tolerances.feas)
    tight = verify_tightness(result, bounds, relation=relation,
                             eps=config.tolerances.feas)
    return PipelineRun(dataset, config, relation, bounds, result, feas, tight)


# ---------------------------------------------------------------------------
# relabeling


@dataclass(frozen=True)
class RelabelSuggestion:
    instance_id: str
    index: int
    current_label: str
    beta: float
    suggested_label: str
    coverage: float


@dataclass(frozen=True)
class RelabelReport:
    """Instances whose own-class membership fell below the threshold.

    ``relabels`` holds strict threshold violations with the competing class
    covering them most strongly; ``ambiguous`` holds exact ties (membership
    equal to the threshold, e.g. duplicate points with conflicting labels),
    which are reported but not relabeled since no class dominates.
    """

    threshold: float
    relabels: tuple
    ambiguous: tuple

    def relabeled_labels(self, labels) -> np.ndarray:
        out = np.asarray(labels, dtype=object).copy()
        for s in self.relabels:
            out[s.index] = s.suggested_label
        return out


def suggest_relabels(run: PipelineRun, threshold: float = None) -> RelabelReport:
    """Instances with beta below the threshold plus their strongest competitor.

    The competing class of u maximizes max_{v in class} T(R(u, v), beta_v),
    the degree to which that class's granules cover u.  Ties on the coverage
    are broken by sorted class order for determinism.
    """
    cfg = run.config
    thr = cfg.relabel_threshold if threshold is None else float(threshold)
    if not 0.0 < thr <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {thr}")
    trip = cfg.triplet()
    beta = run.result.beta
    labels = run.dataset.labels
    rvals = run.relation.values
    cover = np.asarray(trip._t_raw(rvals, beta[None, :]))  # [u, v] = T(R(u,v), b_v)
    classes = run.dataset.classes
    tol = run.config.tolerances.rel

    relabels, ambiguous = [], []
    for u in range(run.dataset.n):
        b = float(beta[u])
        if b > thr + tol:
            continue
        best_cls, best_cov = None, -1.0
        for cls in classes:
            if cls == labels[u]:
                continue
            members = np.flatnonzero(labels == cls)
            if members.size == 0:
                continue
            cov = float(np.max(cover[u, members]))
            if cov > best_cov + tol:
                best_cls, best_cov = cls, cov
        if best_cls is None:
            continue
        item = RelabelSuggestion(run.dataset.ids[u], u, str(labels[u]), b,
                                 str(best_cls), best_cov)
        if b < thr - tol:
            relabels.append(item)
        else:
            ambiguous.append(item)
    return RelabelReport(thr, tuple(relabels), tuple(ambiguous))


def export_geometry(run: PipelineRun, alpha_level: float = None):
    return _geometry.export_geometry(run.result, run.dataset, run.config,
                                     alpha_level=alpha_level)


# ---------------------------------------------------------------------------
# result file IO (CSV keyed by instance id)

RESULT_COLUMNS = ("id", "label", "beta", "alpha", "partition", "tight_partner")


def write_result_csv(path, run: PipelineRun):
    res = run.result
    ds = run.dataset
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for i in range(ds.n):
            partner = res.tight_partner[i]
            partner_id = ds.ids[partner] if partner >= 0 else ""
            fh.write(",".join([
                ds.ids[i], str(ds.labels[i]), repr(float(res.beta[i])),
                repr(float(res.alpha[i])), res.partition[i], partner_id,
            ]) + "\n")


def read_result_csv(path) -> dict:
    """Result rows keyed by instance id: {id: (label, beta, alpha, tag, partner)}."""
    import csv as _csv
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"result file {path} lacks columns "
                             f"{sorted(missing)}")
        for row in reader:
            out[row["id"]] = (row["label"], float(row["beta"]),
                              float(row["alpha"]), row["partition"],
                              row["tight_partner"])
    if not out:
        raise ValueError(f"result file {path} has no rows")
    return out
