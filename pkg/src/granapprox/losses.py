"""Loss functions for granular approximation and their structural checks.

Three families: the p-quantile loss, the squared error and the absolute
error, each optionally evaluated in an isomorphism's scale (the "scaled"
variants apply phi to both arguments).  The absolute error is the p = 1/2
quantile loss up to a constant factor, kept as its own kind because the
linear reduction of the solver is stated for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connectives import IDENTITY, Isomorphism, ResidualTriplet, _unit_grid

QUANTILE = "quantile"
MSE = "mse"
MAE = "mae"


@dataclass(frozen=True)
class LossFunction:
    kind: str
    p: float = 0.5
    iso: Isomorphism = IDENTITY

    def __post_init__(self):
        if self.kind not in (QUANTILE, MSE, MAE):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == QUANTILE and not 0.0 < self.p < 1.0:
            raise ValueError("quantile loss requires p in (0, 1) to be of "
                             "vee type")

    @classmethod
    def from_name(cls, name: str, iso: Isomorphism = IDENTITY) -> "LossFunction":
        key = str(name).strip().lower()
        if key in (MSE, "squared", "l2"):
            return cls(MSE, iso=iso)
        if key in (MAE, "absolute", "l1"):
            return cls(MAE, iso=iso)
        if key.startswith("quantile"):
            # "quantile:0.25"
            _, _, ptxt = key.partition(":")
            return cls(QUANTILE, p=float(ptxt) if ptxt else 0.5, iso=iso)
        raise ValueError(f"unknown loss {name!r}")

    @property
    def is_symmetric(self) -> bool:
        return self.kind in (MSE, MAE) or (self.kind == QUANTILE and self.p == 0.5)

    def __call__(self, y, y_hat):
        a = self.iso.forward(np.asarray(y, dtype=float))
        b = self.iso.forward(np.asarray(y_hat, dtype=float))
        diff = a - b
        if self.kind == MSE:
            out = diff * diff
        elif self.kind == MAE:
            out = np.abs(diff)
        else:
            out = diff * (self.p - (diff < 0))
        if np.ndim(y) == 0 and np.ndim(y_hat) == 0:
            return float(out)
        return out

    def total(self, y, y_hat) -> float:
        return float(np.sum(self(np.asarray(y), np.asarray(y_hat))))

    def describe(self) -> str:
        base = self.kind if self.kind != QUANTILE else f"quantile(p={self.p})"
        return base if self.iso.is_identity else f"{base}/{self.iso.name}"


def vee_type_violation(loss: LossFunction, grid_step: float = 0.05) -> float:
    """Max violation of the vee-type conditions on a grid.

    Requires L(a, a) = 0 and both partial maps to strictly increase with the
    distance from the diagonal.  Returns the largest diagonal residual or
    non-increase found.
    """
    g = _unit_grid(grid_step)
    worst = float(np.max(np.abs([loss(a, a) for a in g])))
    for a in g:
        row = np.asarray([loss(x, a) for x in g])
        col = np.asarray([loss(a, x) for x in g])
        for vals in (row, col):
            right = vals[g > a + 1e-12]
            left = vals[g < a - 1e-12]
            if right.size > 1:
                worst = max(worst, float(np.max(-np.diff(right))))
            if left.size > 1:
                worst = max(worst, float(np.max(np.diff(left))))
    return max(worst, 0.0)


def duality_violation(loss: LossFunction, triplet: ResidualTriplet,
                      grid_step: float = 0.05) -> float:
    """Max gap of N-duality preservation L(y, yh) = L(N(yh), N(y)) on a grid."""
    g = _unit_grid(grid_step)
    y, yh = np.meshgrid(g, g, indexing="ij")
    lhs = loss(y, yh)
    rhs = loss(triplet._n_raw(yh), triplet._n_raw(y))
    return float(np.max(np.abs(lhs - rhs)))


def symmetry_violation(loss: LossFunction, grid_step: float = 0.05) -> float:
    g = _unit_grid(grid_step)
    y, yh = np.meshgrid(g, g, indexing="ij")
    return float(np.max(np.abs(loss(y, yh) - loss(yh, y))))


def quantile_reflection_violation(p: float, iso: Isomorphism = IDENTITY,
                                  grid_step: float = 0.05) -> float:
    """Max gap of L_p(y, yh) = L_{1-p}(yh, y) on a grid."""
    lp = LossFunction(QUANTILE, p=p, iso=iso)
    lq = LossFunction(QUANTILE, p=1.0 - p, iso=iso)
    g = _unit_grid(grid_step)
    y, yh = np.meshgrid(g, g, indexing="ij")
    return float(np.max(np.abs(lp(y, yh) - lq(yh, y))))
