"""Fuzzy granules, granular representability and rough approximations.

A fuzzy set over the universe is represented as a plain membership vector
(numpy array of degrees).  A granule is a parametric fuzzy set attached to a
center instance u: the plus orientation has membership T(R(v, u), lambda) at
v, the minus orientation T(R(u, v), lambda).  Everything here is pure and
operates on immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connectives import ResidualTriplet
from .relations import RelationMatrix
from .tolerances import EPS_REL

PLUS = "plus"
MINUS = "minus"


def as_membership_vector(values, n: int = None) -> np.ndarray:
    """Validate a fuzzy-set membership vector: 1-d, finite, within [0, 1]."""
    a = np.asarray(values, dtype=float)
    if a.ndim != 1:
        raise ValueError("membership vector must be 1-d")
    if n is not None and a.shape[0] != n:
        raise ValueError(f"membership vector has length {a.shape[0]}, "
                         f"expected {n}")
    if a.size and (not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0):
        raise ValueError("memberships must be finite degrees in [0, 1]")
    return a


@dataclass(frozen=True)
class Granule:
    """Granule centered at instance ``center`` with association degree ``parameter``."""

    center: int
    parameter: float
    orientation: str
    relation: RelationMatrix
    triplet: ResidualTriplet

    def __post_init__(self):
        if self.orientation not in (PLUS, MINUS):
            raise ValueError(f"orientation must be {PLUS!r} or {MINUS!r}")
        if not 0 <= self.center < self.relation.n:
            raise IndexError(f"center {self.center} out of range")
        if not 0.0 <= self.parameter <= 1.0:
            raise ValueError("granule parameter must be in [0, 1]")

    def membership(self, v: int) -> float:
        if not 0 <= v < self.relation.n:
            raise IndexError(f"instance {v} out of range")
        r = (self.relation.values[v, self.center] if self.orientation == PLUS
             else self.relation.values[self.center, v])
        return float(self.triplet._t_raw(r, self.parameter))

    def membership_vector(self) -> np.ndarray:
        r = (self.relation.values[:, self.center] if self.orientation == PLUS
             else self.relation.values[self.center, :])
        return np.asarray(self.triplet._t_raw(r, self.parameter))

    def level_set(self, alpha: float) -> np.ndarray:
        """Indices of instances with membership >= alpha, for alpha in (0, 1]."""
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        return np.flatnonzero(self.membership_vector() >= alpha)


def granule_membership(g: Granule, v: int) -> float:
    return g.membership(v)


def level_set(g: Granule, alpha: float) -> np.ndarray:
    return g.level_set(alpha)


@dataclass(frozen=True)
class RepresentabilityReport:
    max_violation: float
    worst_pair: tuple
    eps: float

    @property
    def is_representable(self) -> bool:
        return self.max_violation <= self.eps


def is_granularly_representable(memberships, rel: RelationMatrix,
                                triplet: ResidualTriplet,
                                eps: float = EPS_REL) -> RepresentabilityReport:
    """Check T(R(v, u), A(u)) <= A(v) for all pairs.

    A fuzzy set is granularly representable exactly when it equals the union
    of its own granules, which reduces to the pairwise condition above.
    """
    a = as_membership_vector(memberships, rel.n)
    # grid[v, u] = T(R(v, u), A(u))
    grid = triplet._t_raw(rel.values, a[None, :])
    gaps = grid - a[:, None]
    idx = np.unravel_index(int(np.argmax(gaps)), gaps.shape)
    return RepresentabilityReport(float(gaps[idx]), (int(idx[0]), int(idx[1])), eps)


def lower_approximation(memberships, rel: RelationMatrix,
                        triplet: ResidualTriplet) -> np.ndarray:
    """min over v of I(R(v, u), A(v)); the largest representable set inside A."""
    a = as_membership_vector(memberships, rel.n)
    vals = triplet._i_raw(rel.values, a[:, None])  # [v, u] = I(R(v,u), A(v))
    return np.asarray(vals.min(axis=0))


def upper_approximation(memberships, rel: RelationMatrix,
                        triplet: ResidualTriplet) -> np.ndarray:
    """max over v of T(R(u, v), A(v)); the smallest representable set containing A."""
    a = as_membership_vector(memberships, rel.n)
    vals = triplet._t_raw(rel.values, a[None, :])  # [u, v] = T(R(u,v), A(v))
    return np.asarray(vals.max(axis=1))


def complement(memberships, triplet: ResidualTriplet) -> np.ndarray:
    """Pointwise negation of a fuzzy set with the triplet's negator."""
    a = as_membership_vector(memberships)
    return np.asarray(triplet._n_raw(a))


def _cross_pair(g_plus: Granule, g_minus: Granule):
    if g_plus.orientation != PLUS or g_minus.orientation != MINUS:
        raise ValueError("expected a plus-oriented and a minus-oriented granule")
    if g_plus.relation is not g_minus.relation and \
            g_plus.relation.values is not g_minus.relation.values:
        raise ValueError("granules must share the same relation")
    # bound N(R(v, u)) with u the plus center and v the minus center
    r = g_plus.relation.values[g_minus.center, g_plus.center]
    return float(r)


@dataclass(frozen=True)
class DisjointnessReport:
    disjoint: bool
    margin: float


def are_t_disjoint(g_plus: Granule, g_minus: Granule,
                   eps: float = EPS_REL) -> DisjointnessReport:
    """T-disjointness of a plus granule at u and a minus granule at v.

    Holds iff T(lambda1, lambda2) <= N(R(v, u)); the margin is the slack of
    that inequality (negative when the granules overlap).
    """
    r = _cross_pair(g_plus, g_minus)
    trip = g_plus.triplet
    bound = float(trip._n_raw(r))
    tval = float(trip._t_raw(g_plus.parameter, g_minus.parameter))
    margin = bound - tval
    return DisjointnessReport(margin >= -eps, margin)


def is_adjacent(g_from: Granule, g_to: Granule, eps: float = EPS_REL) -> bool:
    """Whether ``g_from`` is adjacent to ``g_to`` (directional).

    For a minus granule at v adjacent to a plus granule at u this is
    lambda1 = I(lambda2, N(R(v, u))); swapping orientations swaps the roles
    of the parameters.  Adjacent granules are disjoint but any parameter
    increase makes them overlap.
    """
    if {g_from.orientation, g_to.orientation} != {PLUS, MINUS}:
        raise ValueError("adjacency requires granules of opposite orientation")
    if g_from.orientation == MINUS:
        g_plus, g_minus = g_to, g_from
        lam_target, lam_other = g_plus.parameter, g_minus.parameter
    else:
        g_plus, g_minus = g_from, g_to
        lam_target, lam_other = g_minus.parameter, g_plus.parameter
    r = _cross_pair(g_plus, g_minus)
    trip = g_plus.triplet
    bound = trip._n_raw(r)
    return abs(float(trip._i_raw(lam_other, bound)) - lam_target) <= eps
