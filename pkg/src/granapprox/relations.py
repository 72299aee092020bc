"""Fuzzy relations over a finite universe, built from numeric attribute data.

Builders return dense ``n x n`` matrices of degrees in [0, 1] with a declared
property set (reflexive / symmetric / T-transitive).  All builders aggregate
per-attribute relations with the pointwise minimum.  Matrices are marked
read-only after construction; ``check_properties`` re-verifies declarations
by exhaustive scan.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .connectives import ResidualTriplet
from .tolerances import EPS_REL

REFLEXIVE = "reflexive"
SYMMETRIC = "symmetric"
T_TRANSITIVE = "t_transitive"


@dataclass(frozen=True)
class AttributeTable:
    """Instances described by named numeric attributes.

    ``ranges`` is the per-attribute scale used by the triangular relation
    formulas.  It defaults to the observed max - min but can be declared
    explicitly (useful when the data are a sample from an attribute whose
    range is known, e.g. two points drawn from a unit-range attribute).
    """

    values: np.ndarray
    names: tuple
    ranges: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("attribute values must be a 2-d array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("attribute values must be finite")
        if len(self.names) != self.values.shape[1]:
            raise ValueError("one name per attribute column required")
        if self.ranges.shape != (self.values.shape[1],):
            raise ValueError("one range per attribute column required")
        if np.any(self.ranges < 0) or not np.all(np.isfinite(self.ranges)):
            raise ValueError("attribute ranges must be finite and >= 0")
        self.values.setflags(write=False)
        self.ranges.setflags(write=False)

    @classmethod
    def from_array(cls, values, names=None, ranges=None) -> "AttributeTable":
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        vals = vals.copy()
        if names is None:
            names = tuple(f"q{i}" for i in range(vals.shape[1]))
        if ranges is None:
            ranges = vals.max(axis=0) - vals.min(axis=0)
        ranges = np.asarray(ranges, dtype=float).copy()
        return cls(vals, tuple(names), ranges)

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.values.shape[1]

    def scaled_values(self) -> np.ndarray:
        """Min-max scaled copy of the attribute columns (constant columns map to 0)."""
        lo = self.values.min(axis=0)
        span = self.values.max(axis=0) - lo
        span = np.where(span > 0, span, 1.0)
        return (self.values - lo) / span


@dataclass(frozen=True)
class RelationMatrix:
    """Dense fuzzy relation with its declared properties.

    ``values[i, j]`` is the degree to which instance ``i`` relates to ``j``.
    Construction validates the [0, 1] range only; declared properties are
    checked on demand by :func:`check_properties`.
    """

    values: np.ndarray
    declared: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("relation must be a square matrix")
        if not np.all(np.isfinite(v)):
            raise ValueError("relation degrees must be finite")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("relation degrees must lie in [0, 1]")
        v.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def transpose(self) -> "RelationMatrix":
        return RelationMatrix(self.values.T.copy(), self.declared)

    def is_declared(self, prop: str) -> bool:
        return prop in self.declared


def _per_attribute_deltas(table: AttributeTable):
    """Yields (delta matrix, range) per attribute; constant attributes yield None."""
    for q in range(table.n_attributes):
        rng = table.ranges[q]
        col = table.values[:, q]
        if rng == 0.0:
            warnings.warn(
                f"attribute {table.names[q]!r} has zero range; it discerns "
                "nothing and its per-attribute relation is taken to be 1",
                stacklevel=3)
            yield None, rng
        else:
            yield col[None, :] - col[:, None], rng


def triangular_dominance(table: AttributeTable, gamma: float) -> RelationMatrix:
    """Triangular dominance relation, min-aggregated over attributes.

    Per attribute q: R_q(u, v) = max(min(1 - gamma * (v_q - u_q) / range(q), 1), 0).
    Reflexive and Lukasiewicz-transitive, not symmetric.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    out = np.ones((table.n_instances, table.n_instances))
    for delta, rng in _per_attribute_deltas(table):
        if delta is None:
            continue
        rq = np.clip(1.0 - gamma * delta / rng, 0.0, 1.0)
        np.minimum(out, rq, out=out)
    np.fill_diagonal(out, 1.0)
    return RelationMatrix(out, frozenset({REFLEXIVE, T_TRANSITIVE}))


def triangular_similarity(table: AttributeTable, gamma: float) -> RelationMatrix:
    """Triangular similarity relation, min-aggregated over attributes.

    Per attribute q: R_q(u, v) = max(1 - gamma * |u_q - v_q| / range(q), 0).
    Reflexive, symmetric and Lukasiewicz-transitive.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    out = np.ones((table.n_instances, table.n_instances))
    for delta, rng in _per_attribute_deltas(table):
        if delta is None:
            continue
        rq = np.maximum(1.0 - gamma * np.abs(delta) / rng, 0.0)
        np.minimum(out, rq, out=out)
    np.fill_diagonal(out, 1.0)
    # enforce exact symmetry against one-ulp asymmetries of |a-b| vs |b-a|
    out = np.minimum(out, out.T)
    return RelationMatrix(out, frozenset({REFLEXIVE, SYMMETRIC, T_TRANSITIVE}))


def metric_relation(table: AttributeTable, metric, a: float,
                    scale_attributes: bool = False) -> RelationMatrix:
    """Relation R(u, v) = max(1 - d(u, v) / a, 0) for a metric ``d``.

    ``metric`` maps two coordinate vectors to a distance; it must be
    symmetric, nonnegative and zero on the diagonal (triangle inequality is
    the caller's responsibility and is what makes the result transitive).
    """
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    pts = table.scaled_values() if scale_attributes else table.values
    n = table.n_instances
    out = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = float(metric(pts[i], pts[j]))
            if not np.isfinite(d) or d < 0:
                raise ValueError(f"metric returned invalid distance {d!r} "
                                 f"for instances {i}, {j}")
            r = max(1.0 - d / a, 0.0)
            out[i, j] = r
            out[j, i] = r
    return RelationMatrix(out, frozenset({REFLEXIVE, SYMMETRIC, T_TRANSITIVE}))


def euclidean_metric(u, v) -> float:
    return float(np.linalg.norm(np.asarray(u, float) - np.asarray(v, float)))


def mahalanobis_metric(sigma):
    """Distance d(u, v) = sqrt((u-v)^T Sigma (u-v)) for SPD ``Sigma``.

    Equals the Euclidean distance when Sigma is the identity.  Rejects
    matrices that are not symmetric positive-definite (Cholesky test).
    """
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("sigma must be a square matrix")
    if not np.all(np.isfinite(s)):
        raise ValueError("sigma must be finite")
    if not np.allclose(s, s.T, atol=1e-12, rtol=0.0):
        raise ValueError("sigma must be symmetric")
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        raise ValueError("sigma must be positive-definite")

    def metric(u, v):
        d = np.asarray(u, float) - np.asarray(v, float)
        return float(np.sqrt(d @ s @ d))

    metric.sigma = s.copy()
    return metric


@dataclass(frozen=True)
class PropertyReport:
    """Max violations of the three relational properties."""

    reflexivity: float
    symmetry: float
    transitivity: float

    def satisfies(self, declared, eps: float = EPS_REL) -> bool:
        checks = {REFLEXIVE: self.reflexivity,
                  SYMMETRIC: self.symmetry,
                  T_TRANSITIVE: self.transitivity}
        return all(checks[p] <= eps for p in declared)


def check_properties(rel: RelationMatrix, triplet: ResidualTriplet) -> PropertyReport:
    """Exhaustively measure reflexivity, symmetry and T-transitivity.

    Transitivity scans all n^3 triples: max over (u, v, w) of
    T(R(u, v), R(v, w)) - R(u, w).  Intended for desk-scale matrices.
    """
    r = rel.values
    refl = float(np.max(np.abs(1.0 - np.diag(r)))) if rel.n else 0.0
    sym = float(np.max(np.abs(r - r.T))) if rel.n else 0.0
    trans = 0.0
    for v in range(rel.n):
        via = triplet._t_raw(r[:, v][:, None], r[v, :][None, :]) - r
        trans = max(trans, float(via.max()))
    return PropertyReport(refl, sym, max(trans, 0.0))
