"""Analytic level-set geometry of granules and its line-delimited export.

A granule of instance u with association degree beta is drawn through its
alpha-level set in attribute space.  For the supported relation families that
set has a closed form governed by the threshold degree

    c = phi^-1(1 + phi(alpha) - phi(beta))          (Lukasiewicz family)

i.e. the region is {x : R(x, u) >= c}:

* triangular similarity  -> interval (1 attribute) or axis-aligned rectangle,
  per-attribute half-width range(q) * (1 - c) / gamma;
* triangular dominance   -> half-line / quarter-plane with corner at
  u_q - range(q) * (1 - c) / gamma, unbounded upward;
* metric (euclidean)     -> ball of radius a * (1 - c);
* metric (mahalanobis)   -> ellipse with semi-axes a * (1 - c) / sqrt(eig)
  along the eigenvectors of sigma (2 attributes only).

With the identity isomorphism 1 - c reduces to beta - alpha_level.  A granule
is drawable only when beta exceeds the level strictly; at beta <= alpha_level
the level set has empty interior and the record is emitted non-drawable.

Export format: one JSON object per line with fields ``id``, ``label``,
``beta``, ``alpha_level``, ``drawable``, ``shape`` and the shape parameters
(``center`` plus ``half_widths`` / ``corner``+``offsets`` / ``radius`` /
``semi_axes``+``rotation_deg``).  Floats are written with full round-trip
precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .connectives import ResidualTriplet

SIMILARITY = "similarity"
DOMINANCE = "dominance"
EUCLIDEAN = "euclidean"
MAHALANOBIS = "mahalanobis"

_FAMILIES = (SIMILARITY, DOMINANCE, EUCLIDEAN, MAHALANOBIS)


@dataclass(frozen=True)
class GranuleGeometry:
    instance_id: str
    label: str
    beta: float
    alpha_level: float
    drawable: bool
    shape: str
    center: tuple
    params: dict

    def to_record(self) -> dict:
        rec = {"id": self.instance_id, "label": self.label, "beta": self.beta,
               "alpha_level": self.alpha_level, "drawable": self.drawable,
               "shape": self.shape, "center": list(self.center)}
        rec.update(self.params)
        return rec


def _level_threshold(triplet: ResidualTriplet, beta: float, alpha: float) -> float:
    """Smallest relation degree c with T(c, beta) >= alpha; the level set is
    {x : R(x, u) >= c}.  Returns a value > 1 when the set is empty."""
    f, finv = triplet.iso.forward, triplet.iso.inverse
    inner = 1.0 + float(f(alpha)) - float(f(beta))
    if inner > 1.0:
        return np.inf
    return float(finv(np.clip(inner, 0.0, 1.0)))


def _shape_tag(family: str, n_attrs: int) -> str:
    if family == SIMILARITY:
        return "interval" if n_attrs == 1 else "rectangle"
    if family == DOMINANCE:
        return "half_line" if n_attrs == 1 else "quarter_plane"
    if family == EUCLIDEAN:
        return "ball"
    return "ellipse"


def granule_geometry(family: str, triplet: ResidualTriplet, center,
                     beta: float, alpha_level: float, ranges=None,
                     gamma: float = None, a: float = None, sigma=None,
                     instance_id: str = "", label: str = "") -> GranuleGeometry:
    """Geometry record of one granule; ``drawable`` is False when the level
    set degenerates (beta <= alpha_level)."""
    if family not in _FAMILIES:
        raise ValueError(f"unsupported relation family {family!r} for "
                         f"geometry export; expected one of {_FAMILIES}")
    center = tuple(float(x) for x in np.atleast_1d(np.asarray(center, float)))
    n_attrs = len(center)
    shape = _shape_tag(family, n_attrs)
    c = _level_threshold(triplet, beta, alpha_level)
    drawable = bool(c < 1.0)

    params: dict = {}
    if drawable:
        extent = 1.0 - c
        if family in (SIMILARITY, DOMINANCE):
            widths = []
            for q in range(n_attrs):
                rng = float(ranges[q])
                widths.append(rng * extent / gamma if rng > 0 else None)
            if family == SIMILARITY:
                params["half_widths"] = widths
            else:
                params["offsets"] = widths
                params["corner"] = [
                    center[q] - widths[q] if widths[q] is not None else None
                    for q in range(n_attrs)]
        elif family == EUCLIDEAN:
            params["radius"] = a * extent
        else:
            if n_attrs != 2:
                raise ValueError("mahalanobis ellipse export requires exactly "
                                 "two attributes")
            eigvals, eigvecs = np.linalg.eigh(np.asarray(sigma, float))
            axes = a * extent / np.sqrt(eigvals)
            order = np.argsort(axes)[::-1]  # major first
            axes = axes[order]
            major = eigvecs[:, order[0]]
            angle = float(np.degrees(np.arctan2(major[1], major[0]))) % 180.0
            params["semi_axes"] = [float(axes[0]), float(axes[1])]
            params["rotation_deg"] = angle
    return GranuleGeometry(str(instance_id), str(label), float(beta),
                           float(alpha_level), drawable, shape, center, params)


def export_geometry(result, dataset, config, alpha_level: float = None):
    """One geometry record per instance for a finished approximation run."""
    alpha = config.alpha_level if alpha_level is None else float(alpha_level)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha level must be in (0, 1), got {alpha}")
    trip = config.triplet()
    fam = config.relation_family
    table = dataset.table
    pts = table.scaled_values() if (
        fam in (EUCLIDEAN, MAHALANOBIS) and config.scale_metric_attributes
    ) else table.values
    out = []
    for i in range(dataset.n):
        out.append(granule_geometry(
            fam, trip, pts[i], float(result.beta[i]), alpha,
            ranges=table.ranges, gamma=config.gamma, a=config.a,
            sigma=config.sigma, instance_id=dataset.ids[i],
            label=str(dataset.labels[i])))
    return out


def continuous_relation_degree(family: str, center, points, ranges=None,
                               gamma: float = None, a: float = None,
                               sigma=None) -> np.ndarray:
    """Degree R(x, center) for arbitrary points x of attribute space.

    This is the first argument of the plus-granule membership T(R(x, u), beta);
    for the dominance family the formula is oriented so that points dominating
    the center keep degree 1.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ctr = np.asarray(center, dtype=float)
    if family in (SIMILARITY, DOMINANCE):
        rng = np.asarray(ranges, dtype=float)
        deg = np.ones(pts.shape[0])
        for q in range(ctr.shape[0]):
            if rng[q] == 0:
                continue
            if family == SIMILARITY:
                rq = 1.0 - gamma * np.abs(pts[:, q] - ctr[q]) / rng[q]
            else:
                rq = 1.0 - gamma * (ctr[q] - pts[:, q]) / rng[q]
            deg = np.minimum(deg, np.clip(rq, 0.0, 1.0))
        return deg
    if family == EUCLIDEAN:
        d = np.linalg.norm(pts - ctr[None, :], axis=1)
    elif family == MAHALANOBIS:
        s = np.asarray(sigma, dtype=float)
        diff = pts - ctr[None, :]
        d = np.sqrt(np.einsum("ij,jk,ik->i", diff, s, diff))
    else:
        raise ValueError(f"unsupported relation family {family!r}")
    return np.clip(1.0 - d / a, 0.0, 1.0)


def granule_point_membership(family: str, triplet: ResidualTriplet, center,
                             beta: float, points, **relparams) -> np.ndarray:
    """Membership of arbitrary attribute-space points in a plus granule."""
    deg = continuous_relation_degree(family, center, points, **relparams)
    return np.asarray(triplet._t_raw(deg, float(beta)))


def write_geometry(path, geometries):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for geom in geometries:
            fh.write(json.dumps(geom.to_record(), sort_keys=True))
            fh.write("\n")


def read_geometry(path):
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
