"""Residual triplets: t-norms, their R-implicators, and induced negators.

Five built-in t-norm families (minimum, product, Lukasiewicz, drastic,
nilpotent minimum) are paired with their residual implicators.  A triplet may
be rescaled by an order isomorphism ``phi`` of the unit interval, which
conjugates every connective::

    T_phi(x, y) = phi^-1(T(phi(x), phi(y)))
    I_phi(x, y) = phi^-1(I(phi(x), phi(y)))
    N_phi(x)    = phi^-1(N(phi(x)))

All evaluation methods accept scalars or numpy arrays (broadcasting) and
return values clipped to [0, 1].  Triplets are immutable after construction
and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .tolerances import EPS_ISO, EPS_LAW


class TNormKind(Enum):
    MINIMUM = "minimum"
    PRODUCT = "product"
    LUKASIEWICZ = "lukasiewicz"
    DRASTIC = "drastic"
    NILPOTENT_MINIMUM = "nilpotent_minimum"

    @classmethod
    def from_name(cls, name: str) -> "TNormKind":
        key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {
            "min": cls.MINIMUM,
            "godel": cls.MINIMUM,
            "prod": cls.PRODUCT,
            "luk": cls.LUKASIEWICZ,
            "nilpotent": cls.NILPOTENT_MINIMUM,
            "nilpotent_min": cls.NILPOTENT_MINIMUM,
        }
        if key in aliases:
            return aliases[key]
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown t-norm kind {name!r}; expected one of "
                         f"{[k.value for k in cls]}")


def _t_base(kind: TNormKind, x, y):
    if kind is TNormKind.MINIMUM:
        return np.minimum(x, y)
    if kind is TNormKind.PRODUCT:
        return x * y
    if kind is TNormKind.LUKASIEWICZ:
        return np.maximum(0.0, x + y - 1.0)
    if kind is TNormKind.DRASTIC:
        return np.where(np.maximum(x, y) == 1.0, np.minimum(x, y), 0.0)
    if kind is TNormKind.NILPOTENT_MINIMUM:
        return np.where(x + y > 1.0, np.minimum(x, y), 0.0)
    raise AssertionError(kind)


def _i_base(kind: TNormKind, x, y):
    le = x <= y
    if kind is TNormKind.MINIMUM:
        return np.where(le, 1.0, y)
    if kind is TNormKind.PRODUCT:
        # on the false branch x > y >= 0, so the division is safe
        return np.where(le, 1.0, np.divide(y, np.where(le, 1.0, x)))
    if kind is TNormKind.LUKASIEWICZ:
        return np.minimum(1.0, 1.0 - x + y)
    if kind is TNormKind.DRASTIC:
        return np.where(x == 1.0, y, 1.0)
    if kind is TNormKind.NILPOTENT_MINIMUM:
        return np.where(le, 1.0, np.maximum(1.0 - x, y))
    raise AssertionError(kind)


def _as_degrees(value, what: str):
    a = np.asarray(value, dtype=float)
    if a.size:
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{what} contains non-finite values")
        lo, hi = float(np.min(a)), float(np.max(a))
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"{what} outside [0, 1]: range [{lo}, {hi}]")
    return a


def _maybe_scalar(result, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(result)
    return result


def _unit_grid(step: float) -> np.ndarray:
    """Grid {0, step, 2*step, ..., 1} with 1 always included."""
    grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)
    if grid[-1] < 1.0 - 1e-9:
        grid = np.append(grid, 1.0)
    else:
        grid[-1] = 1.0
    return grid


@dataclass(frozen=True)
class Isomorphism:
    """Monotone bijection of [0, 1] given as paired forward/inverse callables.

    Validated at construction on a sampled grid: endpoints are fixed, the
    forward map is strictly increasing, and ``inverse(forward(x))`` returns
    ``x`` within ``EPS_ISO`` (the inverse may be numerical).
    """

    name: str
    forward: Callable
    inverse: Callable

    def __post_init__(self):
        grid = np.linspace(0.0, 1.0, 201)
        fwd = np.asarray(self.forward(grid), dtype=float)
        if fwd.shape != grid.shape or not np.all(np.isfinite(fwd)):
            raise ValueError(f"isomorphism {self.name!r}: forward map is not "
                             "a finite elementwise function on [0, 1]")
        if abs(fwd[0]) > 1e-12 or abs(fwd[-1] - 1.0) > 1e-12:
            raise ValueError(f"isomorphism {self.name!r} must fix 0 and 1")
        if np.any(np.diff(fwd) <= 0):
            raise ValueError(f"isomorphism {self.name!r} is not strictly "
                             "increasing on the validation grid")
        back = np.asarray(self.inverse(fwd), dtype=float)
        err = float(np.max(np.abs(back - grid)))
        if err > EPS_ISO:
            raise ValueError(f"isomorphism {self.name!r}: inverse round-trip "
                             f"error {err:.3e} exceeds {EPS_ISO:.1e}")

    @property
    def is_identity(self) -> bool:
        return self.name == "identity"


def _ident(x):
    return np.asarray(x, dtype=float)


IDENTITY = Isomorphism("identity", _ident, _ident)
SQUARE = Isomorphism("square", np.square, np.sqrt)
SQRT = Isomorphism("sqrt", np.sqrt, np.square)

_NAMED_ISOMORPHISMS = {"identity": IDENTITY, "square": SQUARE, "sqrt": SQRT}


def named_isomorphism(name: str) -> Isomorphism:
    try:
        return _NAMED_ISOMORPHISMS[str(name).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown isomorphism {name!r}; expected one of "
                         f"{sorted(_NAMED_ISOMORPHISMS)}")


# kinds whose connectives are continuous on [0,1]^2
_CONTINUOUS = {TNormKind.MINIMUM, TNormKind.PRODUCT, TNormKind.LUKASIEWICZ}
# kinds whose induced negator is involutive
_IMTL = {TNormKind.LUKASIEWICZ, TNormKind.NILPOTENT_MINIMUM}


@dataclass(frozen=True)
class ResidualTriplet:
    """A t-norm, its residual implicator, and the induced negator N(x) = I(x, 0),
    optionally conjugated by an order isomorphism."""

    kind: TNormKind
    iso: Isomorphism = IDENTITY

    def __post_init__(self):
        # construction-time spot checks of the defining algebra; the modus
        # ponens check is meaningful in floating point only for continuous
        # kinds (discontinuous connectives jump under one-ulp input noise,
        # see verify_laws for the exact-lattice treatment)
        grid = np.round(np.arange(0.0, 1.0001, 0.05), 12)
        if self.is_imtl:
            n = self.negator(self.negator(grid))
            if float(np.max(np.abs(n - grid))) > EPS_LAW:
                raise ValueError(f"{self.kind.value}: induced negator is not "
                                 "involutive on the validation grid")
        if self.is_continuous:
            x, y = np.meshgrid(grid, grid, indexing="ij")
            mp = self.t_norm(x, self.implicator(x, y)) - y
            if float(np.max(mp)) > 10 * EPS_ISO:
                raise ValueError(f"{self.kind.value}: modus ponens spot check "
                                 "failed at construction")

    @classmethod
    def from_names(cls, kind: str, iso: str = "identity") -> "ResidualTriplet":
        return cls(TNormKind.from_name(kind), named_isomorphism(iso))

    @property
    def is_left_continuous(self) -> bool:
        return self.kind is not TNormKind.DRASTIC

    @property
    def is_continuous(self) -> bool:
        return self.kind in _CONTINUOUS

    @property
    def is_imtl(self) -> bool:
        return self.kind in _IMTL

    @property
    def is_lukasiewicz_family(self) -> bool:
        """True when the t-norm is the Lukasiewicz one up to the isomorphism,
        i.e. the pairwise constraints linearize in the transformed scale."""
        return self.kind is TNormKind.LUKASIEWICZ

    @property
    def is_strongly_max_definable(self) -> bool:
        # holds exactly for continuous IMTL kinds
        return self.is_imtl and self.is_continuous

    def describe(self) -> str:
        return f"{self.kind.value}/{self.iso.name}"

    # -- evaluation -------------------------------------------------------

    def t_norm(self, x, y):
        xa = _as_degrees(x, "t-norm first argument")
        ya = _as_degrees(y, "t-norm second argument")
        out = self._t_raw(xa, ya)
        return _maybe_scalar(out, x, y)

    def implicator(self, x, y):
        xa = _as_degrees(x, "implicator first argument")
        ya = _as_degrees(y, "implicator second argument")
        out = self._i_raw(xa, ya)
        return _maybe_scalar(out, x, y)

    def negator(self, x):
        xa = _as_degrees(x, "negator argument")
        out = self._i_raw(xa, np.zeros_like(xa))
        return _maybe_scalar(out, x)

    # unchecked kernels for hot loops on already-validated arrays
    def _t_raw(self, x, y):
        if self.iso.is_identity:
            return _t_base(self.kind, x, y)
        v = _t_base(self.kind, self.iso.forward(x), self.iso.forward(y))
        return np.clip(self.iso.inverse(v), 0.0, 1.0)

    def _i_raw(self, x, y):
        if self.iso.is_identity:
            return _i_base(self.kind, x, y)
        v = _i_base(self.kind, self.iso.forward(x), self.iso.forward(y))
        return np.clip(self.iso.inverse(v), 0.0, 1.0)

    def _n_raw(self, x):
        return self._i_raw(x, np.zeros_like(np.asarray(x, dtype=float)))


LUKASIEWICZ = ResidualTriplet(TNormKind.LUKASIEWICZ)


# ---------------------------------------------------------------------------
# law verification


@dataclass(frozen=True)
class LawCheck:
    name: str
    applicable: bool
    max_violation: float


@dataclass(frozen=True)
class LawReport:
    """Outcome of :func:`verify_laws`.

    Violations are measured in the triplet's base coordinates (grid points are
    pushed through ``phi`` and the base connectives evaluated there).  The two
    are equivalent statements of the same laws, but base coordinates avoid the
    catastrophic precision loss of ``phi^-1`` near 0 for curved isomorphisms:
    e.g. with phi(x) = x^2 a one-ulp error of 2e-16 under a square root
    becomes 1.5e-8, three orders of magnitude above the law tolerance, while
    the identity being tested is exact in the base scale.

    When ``exact`` is True the evaluation ran in integer lattice arithmetic
    (possible when the grid step divides 1 and the isomorphism maps the
    lattice to a lattice, so all intermediate degrees are exact rationals).
    This matters for the discontinuous kinds: a one-ulp floating-point error
    in ``1 - x`` can cross a branch of the nilpotent-minimum connectives and
    report an O(1) artifact for a law that holds exactly.
    """

    triplet_description: str
    grid_step: float
    checks: tuple
    exact: bool = False

    def __getitem__(self, name: str) -> LawCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def names(self):
        return [c.name for c in self.checks]

    def max_applicable_violation(self) -> float:
        vals = [c.max_violation for c in self.checks if c.applicable]
        return max(vals) if vals else 0.0

    def passes(self, eps: float = EPS_LAW) -> bool:
        return self.max_applicable_violation() <= eps

    def lines(self, eps: float = EPS_LAW):
        out = []
        for c in self.checks:
            if not c.applicable:
                status = "not applicable"
            else:
                status = "pass" if c.max_violation <= eps else "FAIL"
            out.append(f"{self.triplet_description:>28}  {c.name:<24} "
                       f"{status:<16} max violation {c.max_violation:.3e}")
        return out


def _int_t(kind: TNormKind, i, j, d: int):
    """Base t-norm on the lattice {0, 1/d, ..., 1} as integer numerators."""
    if kind is TNormKind.MINIMUM:
        return np.minimum(i, j)
    if kind is TNormKind.LUKASIEWICZ:
        return np.maximum(0, i + j - d)
    if kind is TNormKind.DRASTIC:
        return np.where(np.maximum(i, j) == d, np.minimum(i, j), 0)
    if kind is TNormKind.NILPOTENT_MINIMUM:
        return np.where(i + j > d, np.minimum(i, j), 0)
    raise AssertionError(kind)


def _int_i(kind: TNormKind, i, j, d: int):
    if kind is TNormKind.MINIMUM:
        return np.where(i <= j, d, j)
    if kind is TNormKind.LUKASIEWICZ:
        return np.minimum(d, d - i + j)
    if kind is TNormKind.DRASTIC:
        return np.where(i == d, j, d)
    if kind is TNormKind.NILPOTENT_MINIMUM:
        return np.where(i <= j, d, np.maximum(d - i, j))
    raise AssertionError(kind)


def _exact_lattice(triplet: ResidualTriplet, grid_step: float):
    """Integer lattice (denominator, numerators) of the transformed grid, or
    None when exact evaluation is not available (grid step not dividing 1,
    product kind, or an isomorphism without exact rational transport)."""
    if triplet.kind is TNormKind.PRODUCT:
        return None
    steps = round(1.0 / grid_step)
    if abs(steps * grid_step - 1.0) > 1e-9:
        return None
    k = np.arange(steps + 1, dtype=np.int64)
    if triplet.iso.is_identity:
        return steps, k
    if triplet.iso.name == "square":
        return steps * steps, k * k
    if triplet.iso.name == "sqrt":
        # forward(k/steps) = sqrt(k)/sqrt(steps): irrational in general
        return None
    return None


def verify_laws(triplet: ResidualTriplet, grid_step: float = 0.05) -> LawReport:
    """Evaluate the residual-triplet laws on the grid {0, step, ..., 1}^3.

    Reports the maximal violation per law together with an applicability flag:
    residuation, modus ponens, the ordering property, the exchange bound and
    the negation bound require left-continuity (they fail for the drastic
    t-norm); contraposition and involutivity require an IMTL kind; strong
    max-definability additionally requires continuity, so among the built-in
    kinds it holds only for the Lukasiewicz family.  Non-applicable laws are
    still evaluated and reported, they simply do not count as failures.
    """
    if not 0.0 < grid_step <= 0.1:
        raise ValueError(f"grid_step must be in (0, 0.1], got {grid_step}")
    kind = triplet.kind

    lattice = _exact_lattice(triplet, grid_step)
    if lattice is not None:
        d, idx = lattice
        g = idx
        one = d
        T = lambda a, b: _int_t(kind, a, b, d)
        I = lambda a, b: _int_i(kind, a, b, d)
        N = lambda a: _int_i(kind, a, np.zeros_like(a), d)
        to_unit = lambda v: float(v) / d
    else:
        grid = _unit_grid(grid_step)
        g = np.asarray(triplet.iso.forward(grid), dtype=float)
        one = 1.0
        T = lambda a, b: _t_base(kind, a, b)
        I = lambda a, b: _i_base(kind, a, b)
        N = lambda a: _i_base(kind, a, np.zeros_like(a))
        to_unit = float

    x2, y2 = np.meshgrid(g, g, indexing="ij")
    x3, y3, z3 = np.meshgrid(g, g, g, indexing="ij")

    left = triplet.is_left_continuous
    imtl = triplet.is_imtl
    maxdef = triplet.is_strongly_max_definable

    def law(name, applicable, violation):
        return LawCheck(name, applicable, max(to_unit(violation), 0.0))

    checks = [
        law("tnorm_below_arguments", True,
            (T(x2, y2) - np.minimum(x2, y2)).max()),
        law("implicator_above_second", True,
            (y2 - I(x2, y2)).max()),
        law("modus_ponens", left,
            (T(x2, I(x2, y2)) - y2).max()),
    ]

    # ordering property: I(x,y)=1 iff x<=y
    ivals = I(x2, y2)
    full = one if lattice is not None else 1.0 - 1e-12
    below = np.where(x2 <= y2, one - ivals, 0).max()
    above = np.where((x2 > y2) & (ivals >= full), x2 - y2, 0).max()
    checks.append(law("ordering", left, max(below, above)))

    checks.extend([
        law("exchange_bound", left,
            (T(x3, I(y3, z3)) - I(I(x3, y3), z3)).max()),
        law("import_export", True,
            np.abs(I(T(x3, y3), z3) - I(x3, I(y3, z3))).max()),
        law("negation_bound", left,
            (T(x2, N(y2)) - N(I(x2, y2))).max()),
        law("negation_exchange", True,
            np.abs(N(T(x2, y2)) - I(x2, N(y2))).max()),
    ])

    # residuation biconditional T(x,y) <= z  <=>  x <= I(y,z)
    txy = T(x3, y3)
    iyz = I(y3, z3)
    fwd = np.where(txy <= z3, np.maximum(x3 - iyz, 0), 0).max()
    bwd = np.where(x3 <= iyz, np.maximum(txy - z3, 0), 0).max()
    checks.append(law("residuation", left, max(fwd, bwd)))

    checks.append(law("involutive_negator", imtl,
                      np.abs(N(N(g)) - g).max()))
    checks.append(law("contraposition", imtl,
                      np.abs(I(N(x2), N(y2)) - I(y2, x2)).max()))
    mx = np.maximum(x2, y2)
    checks.append(law("max_definability", maxdef,
                      max(np.abs(I(I(x2, y2), y2) - mx).max(),
                          np.abs(I(I(y2, x2), x2) - mx).max())))

    return LawReport(triplet.describe(), float(grid_step), tuple(checks),
                     exact=lattice is not None)


def coherence_violation(triplet: ResidualTriplet, grid_step: float = 0.05) -> float:
    """Max gap between the conjugated connectives and the pointwise
    ``phi^-1(base(phi(x), phi(y)))`` composition, in the output scale."""
    grid = _unit_grid(grid_step)
    x, y = np.meshgrid(grid, grid, indexing="ij")
    f, finv = triplet.iso.forward, triplet.iso.inverse
    ref_t = np.clip(finv(_t_base(triplet.kind, f(x), f(y))), 0.0, 1.0)
    ref_i = np.clip(finv(_i_base(triplet.kind, f(x), f(y))), 0.0, 1.0)
    ref_n = np.clip(finv(_i_base(triplet.kind, f(grid), f(np.zeros_like(grid)))), 0.0, 1.0)
    return float(max(np.abs(triplet.t_norm(x, y) - ref_t).max(),
                     np.abs(triplet.implicator(x, y) - ref_i).max(),
                     np.abs(triplet.negator(grid) - ref_n).max()))
