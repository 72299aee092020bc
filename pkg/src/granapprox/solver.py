"""Membership-assignment solvers for granular approximation.

The multi-class problem: given per-instance class labels and a symmetric
fuzzy relation R, find own-class membership degrees beta maximizing closeness
to full membership subject to

    T(beta_u, beta_v) <= M(u, v),   M(u, v) = I(R(u, v), S(u, v)),

where S is the crisp same-class equivalence.  For triplets in the Lukasiewicz
family the constraints linearize in the transformed scale alpha = phi(beta):

    alpha_u + alpha_v <= 1 + phi(M(u, v)),

and the scaled absolute-error loss yields a linear program (maximize
sum(alpha)), while the scaled squared-error loss yields a strictly convex
quadratic program (minimize sum((1 - alpha)^2)), solved here by projecting
the all-ones point onto the constraint polytope with a dense active-set
method.  A grid-search oracle covers tiny instances with arbitrary
left-continuous triplets and is the reference the fast paths are tested
against.

Same-class pairs have M = 1 and their constraints are implied by the box
0 <= alpha <= 1, so only cross-class pairs are materialized.

A solve call is single-threaded and deterministic; independent calls on
distinct inputs can run concurrently (all shared inputs are read-only).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog

from .connectives import ResidualTriplet, TNormKind, _unit_grid
from .granules import MINUS, PLUS, Granule, is_adjacent, is_granularly_representable
from .losses import MAE, MSE, LossFunction
from .relations import RelationMatrix
from .tolerances import EPS_FEAS, EPS_REL

MULTICLASS = "multiclass"
BINARY = "binary"

# feasibility slack of the grid oracle: admits boundary grid points whose
# exact-arithmetic constraint value ties the bound but lands one ulp above it
# in floating point (e.g. T(0.8, 0.8) = 0.6 + 1e-16 against a bound of 0.6);
# three orders of magnitude below any sensible grid step
_ORACLE_TOL = 1e-12


class SolverError(RuntimeError):
    """Internal solver failure (e.g. reported infeasibility, which the
    feasibility construction guarantees cannot legitimately happen)."""


# ---------------------------------------------------------------------------
# decision relation and bound matrix


@dataclass(frozen=True)
class DecisionRelation:
    """Crisp same-class equivalence S(u, v) = 1 iff labels match."""

    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @classmethod
    def from_labels(cls, labels) -> "DecisionRelation":
        lab = np.asarray(labels)
        if lab.ndim != 1:
            raise ValueError("labels must be a 1-d sequence")
        s = (lab[:, None] == lab[None, :]).astype(float)
        return cls(s)


@dataclass(frozen=True)
class BoundMatrix:
    """Pairwise upper bounds M(u, v) = I(R(u, v), S(u, v)) and their
    transformed values phi(M)."""

    values: np.ndarray
    values_phi: np.ndarray
    labels: np.ndarray
    triplet: ResidualTriplet
    symmetric: bool

    def __post_init__(self):
        self.values.setflags(write=False)
        self.values_phi.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def effective(self) -> np.ndarray:
        """Bound implied by keeping both orders of each constraint."""
        if self.symmetric:
            return self.values
        return np.minimum(self.values, self.values.T)

    def effective_phi(self) -> np.ndarray:
        if self.symmetric:
            return self.values_phi
        return np.minimum(self.values_phi, self.values_phi.T)


def build_bounds(rel: RelationMatrix, labels, triplet: ResidualTriplet,
                 eps: float = EPS_REL) -> BoundMatrix:
    """Bound matrix of the multi-class problem.

    Warns when the relation is asymmetric beyond ``eps``: the multi-class
    reduction is stated for symmetric relations, and the solvers then demand
    an explicit opt-in.
    """
    lab = np.asarray(labels)
    if lab.shape[0] != rel.n:
        raise ValueError("labels and relation size mismatch")
    asym = float(np.max(np.abs(rel.values - rel.values.T))) if rel.n else 0.0
    symmetric = asym <= eps
    if not symmetric:
        warnings.warn(
            f"relation is asymmetric (max gap {asym:.3e}); the multi-class "
            "reduction assumes a symmetric relation", stacklevel=2)
    s = DecisionRelation.from_labels(lab).values
    m = np.asarray(triplet._i_raw(rel.values, s), dtype=float)
    m_phi = np.clip(np.asarray(triplet.iso.forward(m), dtype=float), 0.0, 1.0)
    return BoundMatrix(m, m_phi, lab.copy(), triplet, symmetric)


def _resolve_triplet(bounds: BoundMatrix, triplet) -> ResidualTriplet:
    if triplet is None:
        return bounds.triplet
    if triplet != bounds.triplet:
        raise ValueError("triplet differs from the one the bounds were built with")
    return triplet


def _require_reduction_triplet(trip: ResidualTriplet):
    if trip.kind is TNormKind.DRASTIC:
        raise ValueError("non-residuated triplet: the drastic t-norm is not "
                         "left-continuous and is rejected by all solvers")
    if not trip.is_lukasiewicz_family:
        raise ValueError(
            f"the LP/QP reduction requires a Lukasiewicz-family triplet, got "
            f"{trip.describe()}; use solve_bruteforce for tiny instances")


def _require_left_continuous(trip: ResidualTriplet):
    if not trip.is_left_continuous:
        raise ValueError("non-residuated triplet: the drastic t-norm is not "
                         "left-continuous and is rejected by all solvers")


# ---------------------------------------------------------------------------
# feasible point construction


def feasible_solution(bounds: BoundMatrix, ordering=None, seed=None,
                      first_value: Optional[float] = None) -> np.ndarray:
    """Sequential feasible point of the multi-class problem.

    The first instance in the ordering receives ``first_value`` (default 1;
    with ``seed`` given and no explicit value, a seeded uniform draw), and
    every later instance the largest degree its predecessors allow:
    beta_i = min_j I(beta_j, M(j, i)).  The output satisfies every constraint
    with nonpositive violation exactly (a few one-ulp decrements absorb
    floating-point rounding of the residuation identity).
    """
    trip = bounds.triplet
    _require_left_continuous(trip)
    n = bounds.n
    if ordering is None:
        order = np.arange(n)
    else:
        order = np.asarray(ordering, dtype=int)
        if sorted(order.tolist()) != list(range(n)):
            raise ValueError("ordering must be a permutation of range(n)")
    if first_value is None:
        first_value = 1.0 if seed is None else float(np.random.default_rng(seed).uniform())
    if not 0.0 <= first_value <= 1.0:
        raise ValueError("first value must be a degree in [0, 1]")

    meff = bounds.effective()
    beta = np.zeros(n)
    for pos, i in enumerate(order):
        prev = order[:pos]
        if pos == 0:
            b = first_value
        else:
            b = float(np.min(trip._i_raw(beta[prev], meff[prev, i])))
        for _ in range(64):
            if pos == 0:
                break
            t = np.asarray(trip._t_raw(np.full(prev.shape, b), beta[prev]))
            if float(np.max(t - meff[prev, i])) <= 0.0 and \
                    float(np.max(t - meff[i, prev])) <= 0.0:
                break
            b = np.nextafter(b, 0.0)
        beta[i] = min(max(b, 0.0), 1.0)
    return beta


# ---------------------------------------------------------------------------
# constraint lists


@dataclass(frozen=True)
class _PairConstraints:
    """Cross-class pair constraints: alpha[iu] + alpha[iv] <= rhs_phi,
    equivalently T(beta[iu], beta[iv]) <= bound (original scale)."""

    iu: np.ndarray
    iv: np.ndarray
    rhs_phi: np.ndarray
    bound: np.ndarray

    @property
    def m(self) -> int:
        return self.iu.shape[0]


def _multiclass_pairs(bounds: BoundMatrix, allow_asymmetric: bool) -> _PairConstraints:
    if not bounds.symmetric and not allow_asymmetric:
        raise ValueError(
            "asymmetric bound matrix: the multi-class reduction is stated for "
            "T-equivalences; pass allow_asymmetric=True to run anyway "
            "(experimental, no optimality guarantees from the theory)")
    meff = bounds.effective()
    meff_phi = bounds.effective_phi()
    iu, iv = np.triu_indices(bounds.n, k=1)
    bound = meff[iu, iv]
    rhs = 1.0 + meff_phi[iu, iv]
    keep = rhs < 2.0
    return _PairConstraints(iu[keep], iv[keep], rhs[keep], bound[keep])


def _binary_pairs(rel: RelationMatrix, labels, trip: ResidualTriplet):
    lab = np.asarray(labels)
    classes = np.unique(lab)
    if classes.shape[0] != 2:
        raise ValueError(f"binary solver requires exactly two classes, got "
                         f"{classes.shape[0]}")
    in_a = lab == classes[0]
    ia = np.flatnonzero(in_a)
    ib = np.flatnonzero(~in_a)
    iu = np.repeat(ia, ib.shape[0])
    iv = np.tile(ib, ia.shape[0])
    # constraint T(beta_u, beta_v) <= N(R(v, u)) for u in A, v in coA
    bound = np.asarray(trip._n_raw(rel.values[iv, iu]), dtype=float)
    rhs = 1.0 + np.clip(np.asarray(trip.iso.forward(bound), dtype=float), 0.0, 1.0)
    keep = rhs < 2.0
    return _PairConstraints(iu[keep], iv[keep], rhs[keep], bound[keep]), classes, in_a


# ---------------------------------------------------------------------------
# LP / QP cores on pair constraints


def _solve_lp_core(n: int, pairs: _PairConstraints) -> np.ndarray:
    if pairs.m == 0:
        return np.ones(n)
    rows = np.repeat(np.arange(pairs.m), 2)
    cols = np.stack([pairs.iu, pairs.iv], axis=1).ravel()
    a_ub = sparse.csr_matrix(
        (np.ones(2 * pairs.m), (rows, cols)), shape=(pairs.m, n))
    res = linprog(
        c=-np.ones(n), A_ub=a_ub, b_ub=pairs.rhs_phi, bounds=(0.0, 1.0),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10,
                 "dual_feasibility_tolerance": 1e-10})
    if res.status == 2:
        raise SolverError("LP reported infeasible; the problem is feasible "
                          "by construction, so this is an internal error")
    if not res.success:
        raise SolverError(f"LP failed: {res.message}")
    return np.clip(np.asarray(res.x, dtype=float), 0.0, 1.0)


def _solve_qp_core(n: int, pairs: _PairConstraints, x0: np.ndarray):
    """Minimize sum((1 - x)^2) over the constraint polytope.

    The objective is the squared distance to the all-ones point, so every
    working-set subproblem is an orthogonal projection: p is the projection
    of (1 - x) onto the null space of the active rows, and the multipliers
    solve (G_W G_W^T) mu = 2 G_W (1 - x).  Rows are pair sums, upper bounds
    and lower bounds.  A blocking row is admitted to the working set only if
    it is linearly independent of it (rank guard); degenerate blockers, which
    arise on data with many ties, are stepped onto without being added, which
    keeps the Gram matrix well conditioned and the set at most n rows.
    Returns the solution and the multipliers over pair/upper/lower rows.
    """
    m = pairs.m
    x = np.clip(x0.astype(float).copy(), 0.0, 1.0)
    in_w_pair = np.zeros(m, dtype=bool)
    in_w_up = np.zeros(n, dtype=bool)
    in_w_lo = np.zeros(n, dtype=bool)
    w_rows: list = []  # (kind, index) with kind in {"pair", "up", "lo"}
    a_work = np.zeros((0, n))

    flags = {"pair": in_w_pair, "up": in_w_up, "lo": in_w_lo}

    def row_vector(kind, idx):
        g = np.zeros(n)
        if kind == "pair":
            g[pairs.iu[idx]] += 1.0
            g[pairs.iv[idx]] += 1.0
        elif kind == "up":
            g[idx] = 1.0
        else:
            g[idx] = -1.0
        return g

    target = np.ones(n)
    max_iter = 500 + 80 * n
    mu = np.zeros(0)
    aat = np.zeros((0, 0))  # Gram matrix of the working rows, kept in sync
    for _ in range(max_iter):
        d = target - x
        if w_rows:
            try:
                factor = cho_factor(aat, check_finite=False)
            except np.linalg.LinAlgError:
                factor = cho_factor(
                    aat + 1e-12 * np.eye(aat.shape[0]), check_finite=False)
            solve_w = lambda rhs: cho_solve(factor, rhs, check_finite=False)
            y = solve_w(a_work @ d)
            p = d - a_work.T @ y
        else:
            solve_w = None
            p = d.copy()
        if float(np.max(np.abs(p))) <= 1e-12:
            if not w_rows:
                break
            mu = solve_w(a_work @ (2.0 * d))
            k_min = int(np.argmin(mu))
            if mu[k_min] >= -1e-11:
                break
            kind, idx = w_rows.pop(k_min)
            flags[kind][idx] = False
            a_work = np.delete(a_work, k_min, axis=0)
            aat = np.delete(np.delete(aat, k_min, axis=0), k_min, axis=1)
            continue

        # largest feasible step toward the projection
        best_t, best_row = 1.0, None
        if m:
            gp = p[pairs.iu] + p[pairs.iv]
            cand = (gp > 1e-12) & ~in_w_pair
            if cand.any():
                slack = np.maximum(pairs.rhs_phi - (x[pairs.iu] + x[pairs.iv]), 0.0)
                ratio = np.where(cand, slack / np.where(cand, gp, 1.0), np.inf)
                k = int(np.argmin(ratio))
                if ratio[k] < best_t:
                    best_t, best_row = float(ratio[k]), ("pair", k)
        cand = (p > 1e-12) & ~in_w_up
        if cand.any():
            ratio = np.where(cand, np.maximum(1.0 - x, 0.0) / np.where(cand, p, 1.0), np.inf)
            k = int(np.argmin(ratio))
            if ratio[k] < best_t:
                best_t, best_row = float(ratio[k]), ("up", k)
        cand = (p < -1e-12) & ~in_w_lo
        if cand.any():
            ratio = np.where(cand, np.maximum(x, 0.0) / np.where(cand, -p, 1.0), np.inf)
            k = int(np.argmin(ratio))
            if ratio[k] < best_t:
                best_t, best_row = float(ratio[k]), ("lo", k)

        x = x + best_t * p
        if best_row is not None:
            kind, idx = best_row
            g = row_vector(kind, idx)
            independent = True
            col = None
            if w_rows:
                col = a_work @ g
                y_g = solve_w(col)
                independent = float(np.max(np.abs(g - a_work.T @ y_g))) > 1e-9
            if independent:
                w_rows.append(best_row)
                flags[kind][idx] = True
                a_work = np.vstack([a_work, g[None, :]])
                k = aat.shape[0]
                grown = np.empty((k + 1, k + 1))
                grown[:k, :k] = aat
                if k:
                    grown[:k, k] = col
                    grown[k, :k] = col
                grown[k, k] = g @ g
                aat = grown
    else:
        raise SolverError("active-set QP did not converge within the "
                          "iteration budget")

    x = np.clip(x, 0.0, 1.0)
    mu_pair = np.zeros(m)
    mu_up = np.zeros(n)
    mu_lo = np.zeros(n)
    for k, (kind, idx) in enumerate(w_rows):
        val = float(mu[k]) if k < len(mu) else 0.0
        if kind == "pair":
            mu_pair[idx] = max(val, 0.0)
        elif kind == "up":
            mu_up[idx] = max(val, 0.0)
        else:
            mu_lo[idx] = max(val, 0.0)
    return x, (mu_pair, mu_up, mu_lo)


def _kkt_residual(x, pairs: _PairConstraints, multipliers) -> float:
    """Max KKT residual: stationarity, primal/dual feasibility, complementarity."""
    mu_pair, mu_up, mu_lo = multipliers
    grad = 2.0 * (x - 1.0)
    if pairs.m:
        np.add.at(grad, pairs.iu, mu_pair)
        np.add.at(grad, pairs.iv, mu_pair)
    grad += mu_up
    grad -= mu_lo
    res = float(np.max(np.abs(grad)))
    if pairs.m:
        slack = pairs.rhs_phi - (x[pairs.iu] + x[pairs.iv])
        res = max(res, float(np.max(-slack)), float(np.max(np.abs(mu_pair * slack))))
    res = max(res, float(np.max(np.abs(mu_up * (1.0 - x)))),
              float(np.max(np.abs(mu_lo * x))),
              float(np.max(-x)), float(np.max(x - 1.0)))
    return res


# ---------------------------------------------------------------------------
# result packaging


@dataclass
class ApproximationResult:
    """Solution of a granular-approximation problem.

    ``beta`` holds the own-class membership per instance, ``alpha`` its value
    in the triplet's transformed scale.  ``objective`` follows the stated
    problem: sum of alpha for the linear reduction (maximized), total loss for
    the quadratic reduction and the grid oracle (minimized).  ``partition``
    tags instances ("tight"/"slack" for multi-class results, "U-"/"U0"/"U+"
    for binary ones) and ``tight_partner`` names a witness instance for every
    binding constraint (-1 when none).
    """

    beta: np.ndarray
    alpha: np.ndarray
    objective: float
    loss: str
    mode: str
    partition: tuple
    tight_partner: np.ndarray
    max_violation: float
    kkt_residual: Optional[float] = None
    a_hat: Optional[np.ndarray] = None
    positive_class: object = None
    gr_violation: Optional[float] = None
    solver: str = ""

    @property
    def n(self) -> int:
        return self.beta.shape[0]

    @property
    def sum_alpha(self) -> float:
        return float(np.sum(self.alpha))


def _nudge_feasible(beta, pairs: _PairConstraints, trip: ResidualTriplet):
    """Decrease memberships until every pair constraint holds exactly.

    Violated endpoints are first clamped to the residuation bound
    I(beta_v, M) (the largest admissible degree), then lowered by single
    ulps to absorb the rounding of that evaluation itself.  Decreasing a
    membership can never break another constraint.
    """
    if pairs.m == 0:
        return beta
    for _ in range(64):
        t = np.asarray(trip._t_raw(beta[pairs.iu], beta[pairs.iv]))
        excess = t - pairs.bound
        bad = np.flatnonzero(excess > 0.0)
        if bad.size == 0:
            return beta
        for k in bad:
            u, v = int(pairs.iu[k]), int(pairs.iv[k])
            cap = float(trip._i_raw(beta[v], pairs.bound[k]))
            beta[u] = min(beta[u], cap)
            beta[u] = np.nextafter(beta[u], 0.0)
            beta[v] = np.nextafter(beta[v], 0.0)
    raise SolverError("could not restore exact feasibility by rounding down")


def _activity_partition(viol, meff, n, eps):
    """Tight/slack tags and the active partner per instance from the signed
    constraint residuals (viol = T(beta_u, beta_v) - M, diagonal -inf)."""
    real = (meff < 1.0) & ~np.eye(n, dtype=bool)
    activity = np.where(real, viol, -np.inf)
    tags = []
    partner = np.full(n, -1, dtype=int)
    for u in range(n):
        v = int(np.argmax(activity[u])) if n > 1 else -1
        if v >= 0 and activity[u, v] >= -eps:
            tags.append("tight")
            partner[u] = v
        else:
            tags.append("slack")
    return tuple(tags), partner


def _certificates(beta, meff, trip: ResidualTriplet):
    """Per-instance largest admissible degree t_u = min_{v != u} I(beta_v, M(u, v))
    and the arg-min partner, restricted to genuinely binding bounds (M < 1)."""
    n = beta.shape[0]
    t_u = np.ones(n)
    partner = np.full(n, -1, dtype=int)
    # lim[u, v] = I(beta_v, M(u, v))
    lim = np.asarray(trip._i_raw(np.broadcast_to(beta[None, :], meff.shape), meff))
    mask = (meff < 1.0) & ~np.eye(n, dtype=bool)
    lim_masked = np.where(mask, lim, np.inf)
    if n:
        idx = np.argmin(lim_masked, axis=1)
        vals = lim_masked[np.arange(n), idx]
        has = np.isfinite(vals)
        t_u[has] = vals[has]
        partner[has] = idx[has]
        partner[~has] = -1
    return t_u, partner


def _package_multiclass(alpha, bounds: BoundMatrix, trip: ResidualTriplet,
                        pairs: _PairConstraints, loss: LossFunction,
                        objective_kind: str, kkt: Optional[float],
                        solver: str, eps: float = EPS_FEAS) -> ApproximationResult:
    alpha = _repair_alpha(np.clip(alpha, 0.0, 1.0), pairs)
    beta = np.clip(np.asarray(trip.iso.inverse(alpha), dtype=float), 0.0, 1.0)
    beta = _nudge_feasible(beta, pairs, trip)
    alpha = np.clip(np.asarray(trip.iso.forward(beta), dtype=float), 0.0, 1.0)

    meff = bounds.effective()
    tmat = np.asarray(trip._t_raw(beta[:, None], beta[None, :]))
    viol = tmat - meff
    np.fill_diagonal(viol, -np.inf)
    max_violation = float(np.max(viol)) if bounds.n > 1 else 0.0

    # an instance is "tight" when one of its real constraints (bound < 1)
    # holds with equality; the partner is the instance on the other side;
    # measured in the linear scale so curved isomorphisms do not distort eps
    scale, base = _linear_scale(trip)
    if trip.iso.is_identity:
        viol_act, meff_act = viol, meff
    else:
        bs, ms = scale(beta), scale(meff)
        viol_act = np.asarray(base._t_raw(bs[:, None], bs[None, :])) - ms
        np.fill_diagonal(viol_act, -np.inf)
        meff_act = ms
    tags, partner = _activity_partition(viol_act, meff_act, bounds.n, eps)

    if objective_kind == "sum_alpha":
        objective = float(np.sum(alpha))
    else:
        objective = loss.total(np.ones(bounds.n), beta)

    beta.setflags(write=False)
    alpha.setflags(write=False)
    return ApproximationResult(
        beta=beta, alpha=alpha, objective=objective, loss=loss.describe(),
        mode=MULTICLASS, partition=tags, tight_partner=partner,
        max_violation=max_violation, kkt_residual=kkt, solver=solver)


# ---------------------------------------------------------------------------
# public solvers


def solve_lp(bounds: BoundMatrix, triplet: ResidualTriplet = None,
             allow_asymmetric: bool = False) -> ApproximationResult:
    """Scaled-absolute-error multi-class approximation via linear programming.

    Maximizes sum(alpha) subject to the pairwise constraints.  The optimal
    vertex is generally not unique; the objective value is, and the
    deterministic pivoting of the backend makes repeated runs identical.
    """
    trip = _resolve_triplet(bounds, triplet)
    _require_reduction_triplet(trip)
    pairs = _multiclass_pairs(bounds, allow_asymmetric)
    alpha = _solve_lp_core(bounds.n, pairs)
    return _package_multiclass(alpha, bounds, trip, pairs,
                               LossFunction(MAE, iso=trip.iso),
                               "sum_alpha", None, "lp")


def solve_qp(bounds: BoundMatrix, triplet: ResidualTriplet = None,
             allow_asymmetric: bool = False) -> ApproximationResult:
    """Scaled-squared-error multi-class approximation via an active-set QP.

    Minimizes sum((1 - alpha)^2); the optimum is unique (strictly convex
    objective over a convex polytope).  The reported KKT residual certifies
    stationarity, feasibility and complementarity of the returned point.
    """
    trip = _resolve_triplet(bounds, triplet)
    _require_reduction_triplet(trip)
    pairs = _multiclass_pairs(bounds, allow_asymmetric)
    x0 = np.clip(np.asarray(
        trip.iso.forward(feasible_solution(bounds)), dtype=float), 0.0, 1.0)
    x0 = _repair_alpha(x0, pairs)
    alpha, multipliers = _solve_qp_core(bounds.n, pairs, x0)
    kkt = _kkt_residual(alpha, pairs, multipliers)
    return _package_multiclass(alpha, bounds, trip, pairs,
                               LossFunction(MSE, iso=trip.iso),
                               "loss", kkt, "qp")


def _repair_alpha(alpha, pairs: _PairConstraints):
    """Decrease endpoints of violated pair constraints until feasible in the
    transformed scale; decreasing never breaks other rows."""
    a = alpha.copy()
    if pairs.m == 0:
        return a
    for _ in range(64):
        excess = a[pairs.iu] + a[pairs.iv] - pairs.rhs_phi
        bad = np.flatnonzero(excess > 0.0)
        if bad.size == 0:
            return a
        for k in bad:
            u, v = int(pairs.iu[k]), int(pairs.iv[k])
            e = a[u] + a[v] - pairs.rhs_phi[k]
            if e <= 0:
                continue
            a[u] = max(a[u] - e / 2, 0.0)
            a[v] = max(a[v] - e / 2, 0.0)
            while a[u] + a[v] > pairs.rhs_phi[k]:
                a[u] = np.nextafter(a[u], 0.0)
                a[v] = np.nextafter(a[v], 0.0)
    raise SolverError("could not repair transformed-scale feasibility")


def solve_binary(labels, rel: RelationMatrix, triplet: ResidualTriplet,
                 loss) -> ApproximationResult:
    """Two-class approximation with constraints across classes only.

    Accepts a reflexive T-transitive relation that need not be symmetric.
    The loss must be the (scaled) absolute or squared error: the reduction to
    a one-variable-per-instance problem needs a symmetric, duality-preserving
    vee-type loss.  Reconstructs the full membership assignment a_hat of the
    first class in sorted label order: a_hat(u) = beta_u on that class and
    N(beta_u) on the other.
    """
    _require_reduction_triplet(triplet)
    if isinstance(loss, str):
        loss = LossFunction.from_name(loss, iso=triplet.iso)
    if loss.kind not in (MAE, MSE):
        raise ValueError("binary reduction requires the absolute or squared "
                         "error loss (symmetric and duality-preserving)")
    if loss.iso != triplet.iso:
        loss = LossFunction(loss.kind, iso=triplet.iso)
    lab = np.asarray(labels)
    if lab.shape[0] != rel.n:
        raise ValueError("labels and relation size mismatch")
    pairs, classes, in_a = _binary_pairs(rel, lab, triplet)

    if loss.kind == MAE:
        alpha = _solve_lp_core(rel.n, pairs)
        kkt = None
        objective_kind = "sum_alpha"
        solver = "lp"
    else:
        x0 = np.zeros(rel.n)
        alpha, multipliers = _solve_qp_core(rel.n, pairs, x0)
        kkt = _kkt_residual(alpha, pairs, multipliers)
        objective_kind = "loss"
        solver = "qp"

    trip = triplet
    alpha = _repair_alpha(np.clip(alpha, 0.0, 1.0), pairs)
    beta = np.clip(np.asarray(trip.iso.inverse(alpha), dtype=float), 0.0, 1.0)
    beta = _nudge_feasible(beta, pairs, trip)
    alpha = np.clip(np.asarray(trip.iso.forward(beta), dtype=float), 0.0, 1.0)

    if pairs.m:
        viol = float(np.max(np.asarray(
            trip._t_raw(beta[pairs.iu], beta[pairs.iv])) - pairs.bound))
    else:
        viol = 0.0

    a_hat = np.where(in_a, beta, np.asarray(trip._n_raw(beta)))
    a_crisp = in_a.astype(float)
    tags, partner = _binary_partition(a_hat, a_crisp, rel, trip)

    objective = (float(np.sum(alpha)) if objective_kind == "sum_alpha"
                 else loss.total(np.ones(rel.n), beta))

    gr = is_granularly_representable(a_hat, rel, trip).max_violation

    beta.setflags(write=False)
    alpha.setflags(write=False)
    a_hat.setflags(write=False)
    return ApproximationResult(
        beta=beta, alpha=alpha, objective=objective, loss=loss.describe(),
        mode=BINARY, partition=tuple(tags), tight_partner=partner,
        max_violation=viol, kkt_residual=kkt, a_hat=a_hat,
        positive_class=classes[0], gr_violation=float(gr), solver=solver)


def _binary_partition(a_hat, a_crisp, rel: RelationMatrix,
                      trip: ResidualTriplet, eps: float = EPS_FEAS):
    """U-/U0/U+ split of a binary solution plus the witness instance from the
    optimality characterization (the attaining v of the max/min)."""
    n = a_hat.shape[0]
    tags = []
    partner = np.full(n, -1, dtype=int)
    minus = a_hat < a_crisp - eps
    plus = a_hat > a_crisp + eps
    t_grid = np.asarray(trip._t_raw(rel.values, a_hat[None, :]))  # [u, v] = T(R(u,v), ah_v)
    i_grid = np.asarray(trip._i_raw(rel.values, a_hat[:, None]))  # [v, u] = I(R(v,u), ah_v)
    for u in range(n):
        if plus[u]:
            tags.append("U+")
            allowed = np.flatnonzero(~plus)
            if allowed.size:
                partner[u] = int(allowed[np.argmax(t_grid[u, allowed])])
        elif minus[u]:
            tags.append("U-")
            allowed = np.flatnonzero(~minus)
            if allowed.size:
                partner[u] = int(allowed[np.argmin(i_grid[allowed, u])])
        else:
            tags.append("U0")
    return tags, partner


# ---------------------------------------------------------------------------
# grid-search oracle


def _enumeration_guard(n_enum: int, g: int, limit: float = 4e7):
    if float(g) ** n_enum > limit:
        raise ValueError(
            f"grid search over {n_enum} coordinates with {g} levels exceeds "
            "the desk-scale budget; coarsen the grid or shrink the universe")


def solve_bruteforce(bounds: BoundMatrix, triplet: ResidualTriplet = None,
                     loss=None, grid_step: float = 0.01) -> ApproximationResult:
    """Exhaustive grid-search oracle for the multi-class problem.

    Enumerates all grid vectors for the first n - 1 coordinates; the last
    coordinate is then taken at its largest feasible grid value, which is
    closed-form by residuation (beta <= I(beta_v, M)) and loses nothing
    because the loss decreases toward full membership.  The minimum over this
    restricted set equals the minimum over the full grid.  Works for any
    left-continuous triplet; this is the reference implementation the LP/QP
    reductions are validated against.
    """
    trip = _resolve_triplet(bounds, triplet)
    _require_left_continuous(trip)
    if loss is None:
        raise ValueError("the oracle needs an explicit loss")
    if isinstance(loss, str):
        loss = LossFunction.from_name(loss, iso=trip.iso)
    n = bounds.n
    g = _unit_grid(grid_step)
    ng = g.shape[0]
    if n == 0:
        raise ValueError("empty universe")
    _enumeration_guard(max(n - 1, 1), ng)

    meff = bounds.effective()
    lv = np.asarray(loss(np.ones(ng), g), dtype=float)  # loss(1, g)

    if n == 1:
        beta = np.array([1.0])
        return _oracle_result(beta, bounds, trip, loss, grid_step)

    last = n - 1
    total = ng ** (n - 1)
    chunk = min(total, 1 << 19)
    best_obj = np.inf
    best = None

    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total))
        coords = []
        for k in range(n - 1):
            coords.append((idx // ng ** (n - 2 - k)) % ng)
        vals = [g[c] for c in coords]

        mask = np.ones(idx.shape[0], dtype=bool)
        for i in range(n - 1):
            for j in range(i + 1, n - 1):
                mask &= np.asarray(
                    trip._t_raw(vals[i], vals[j])) <= meff[i, j] + _ORACLE_TOL
        if not mask.any():
            continue

        # closed-form last coordinate: largest grid value under all bounds
        limit = np.full(idx.shape[0], 1.0)
        for i in range(n - 1):
            limit = np.minimum(limit, np.asarray(
                trip._i_raw(vals[i], np.full(idx.shape[0], meff[i, last]))))
        ki = np.clip(np.searchsorted(g, limit + 1e-9, side="right") - 1,
                     0, ng - 1)
        for _ in range(4):
            cand = g[ki]
            bad = np.zeros(idx.shape[0], dtype=bool)
            for i in range(n - 1):
                bad |= np.asarray(
                    trip._t_raw(cand, vals[i])) > meff[i, last] + _ORACLE_TOL
            bad &= ki > 0
            if not bad.any():
                break
            ki = np.where(bad, ki - 1, ki)

        obj = lv[ki].astype(float)
        for c in coords:
            obj += lv[c]
        obj = np.where(mask, obj, np.inf)
        k = int(np.argmin(obj))
        if obj[k] < best_obj:
            best_obj = float(obj[k])
            best = np.array([float(v[k]) for v in vals] + [float(g[ki[k]])])

    if best is None:
        raise SolverError("oracle found no feasible grid point; the zero "
                          "vector is always feasible, so this is a bug")
    return _oracle_result(best, bounds, trip, loss, grid_step)


def _oracle_result(beta, bounds: BoundMatrix, trip: ResidualTriplet,
                   loss: LossFunction, grid_step: float) -> ApproximationResult:
    pairs = _multiclass_pairs(bounds, allow_asymmetric=True)
    beta = _nudge_feasible(beta.copy(), pairs, trip)
    alpha = np.clip(np.asarray(trip.iso.forward(beta), dtype=float), 0.0, 1.0)
    meff = bounds.effective()
    tmat = np.asarray(trip._t_raw(beta[:, None], beta[None, :]))
    viol = tmat - meff
    np.fill_diagonal(viol, -np.inf)
    # grid argmins certify activity only up to the grid resolution
    tags, partner = _activity_partition(viol, meff, bounds.n, grid_step)
    beta.setflags(write=False)
    alpha.setflags(write=False)
    return ApproximationResult(
        beta=beta, alpha=alpha,
        objective=loss.total(np.ones(bounds.n), beta),
        loss=loss.describe(), mode=MULTICLASS, partition=tags,
        tight_partner=partner,
        max_violation=float(np.max(viol)) if bounds.n > 1 else 0.0,
        solver="bruteforce")


def bruteforce_general(memberships, rel: RelationMatrix,
                       triplet: ResidualTriplet, loss,
                       grid_step: float = 0.02):
    """Grid-search oracle for the general approximation problem.

    Minimizes sum(L(A(u), a_hat(u))) over grid vectors satisfying the
    representability constraints T(R(u, v), a_hat(v)) <= a_hat(u).  Full
    enumeration (no coordinate can be collapsed: the loss is not monotone
    around A).  Returns (a_hat, objective).
    """
    _require_left_continuous(triplet)
    if isinstance(loss, str):
        loss = LossFunction.from_name(loss, iso=triplet.iso)
    a = np.asarray(memberships, dtype=float)
    n = rel.n
    if a.shape != (n,):
        raise ValueError("membership vector and relation size mismatch")
    g = _unit_grid(grid_step)
    ng = g.shape[0]
    _enumeration_guard(n, ng)

    lmat = np.stack([np.asarray(loss(np.full(ng, a[u]), g), dtype=float)
                     for u in range(n)])
    r = rel.values
    total = ng ** n
    chunk = min(total, 1 << 19)
    best_obj = np.inf
    best = None
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total))
        coords = [(idx // ng ** (n - 1 - k)) % ng for k in range(n)]
        vals = [g[c] for c in coords]
        mask = np.ones(idx.shape[0], dtype=bool)
        for u in range(n):
            for v in range(n):
                if u == v:
                    continue
                mask &= np.asarray(
                    triplet._t_raw(np.full(idx.shape[0], r[u, v]),
                                   vals[v])) <= vals[u] + _ORACLE_TOL
        if not mask.any():
            continue
        obj = np.zeros(idx.shape[0])
        for u in range(n):
            obj += lmat[u][coords[u]]
        obj = np.where(mask, obj, np.inf)
        k = int(np.argmin(obj))
        if obj[k] < best_obj:
            best_obj = float(obj[k])
            best = np.array([float(v[k]) for v in vals])
    return best, best_obj


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class FeasibilityReport:
    max_violation: float
    worst_pair: tuple
    eps: float

    @property
    def feasible(self) -> bool:
        return self.max_violation <= self.eps


def verify_constraints(result: ApproximationResult, bounds: BoundMatrix,
                       triplet: ResidualTriplet = None,
                       eps: float = EPS_FEAS) -> FeasibilityReport:
    """Max over pairs of T(beta_u, beta_v) - M(u, v) (both orders)."""
    trip = _resolve_triplet(bounds, triplet)
    beta = np.asarray(result.beta, dtype=float)
    if beta.shape[0] != bounds.n:
        raise ValueError("result and bounds size mismatch")
    if bounds.n <= 1:
        return FeasibilityReport(0.0, (-1, -1), eps)
    tmat = np.asarray(trip._t_raw(beta[:, None], beta[None, :]))
    viol = tmat - bounds.effective()
    np.fill_diagonal(viol, -np.inf)
    u, v = np.unravel_index(int(np.argmax(viol)), viol.shape)
    return FeasibilityReport(float(viol[u, v]), (int(u), int(v)), eps)


@dataclass(frozen=True)
class TightnessReport:
    mode: str
    max_gap: float
    eps: float
    partner: np.ndarray = None
    eq_upper_gap: float = 0.0
    eq_lower_gap: float = 0.0
    adjacency_ok: bool = True
    partition: tuple = ()

    @property
    def ok(self) -> bool:
        return (self.max_gap <= self.eps
                and self.eq_upper_gap <= self.eps
                and self.eq_lower_gap <= self.eps
                and self.adjacency_ok)


def _linear_scale(trip: ResidualTriplet):
    """Work in the transformed scale for Lukasiewicz-family triplets, where
    the arithmetic of the tightness identities is linear and float noise is
    not amplified by the inverse isomorphism near 0."""
    if trip.is_lukasiewicz_family and not trip.iso.is_identity:
        base = ResidualTriplet(TNormKind.LUKASIEWICZ)
        fwd = lambda x: np.clip(np.asarray(trip.iso.forward(
            np.asarray(x, dtype=float)), dtype=float), 0.0, 1.0)
        return fwd, base
    return (lambda x: np.asarray(x, dtype=float)), trip


def verify_tightness(result: ApproximationResult, bounds: BoundMatrix,
                     triplet: ResidualTriplet = None,
                     relation: RelationMatrix = None,
                     eps: float = EPS_FEAS) -> TightnessReport:
    """Certify that the solution cannot be improved pointwise.

    Multi-class mode: every instance with beta_u < 1 attains its certificate
    t_u = min over v of I(beta_v, M(u, v)) within ``eps`` (an optimal point
    with beta_u < t_u could raise beta_u and lower the loss).

    Binary mode (needs ``relation``): splits instances into U-/U0/U+ against
    the crisp labels and certifies the two optimality identities: on U+ the
    membership equals the max of T(R(u, v), a_hat(v)) over U- and U0, on U-
    the min of I(R(v, u), a_hat(v)) over U+ and U0.  Additionally certifies
    cross-class granule adjacency: every instance has an opposite-class
    witness whose granule is adjacent to its own.
    """
    trip = _resolve_triplet(bounds, triplet)
    scale, base = _linear_scale(trip)

    if result.mode == BINARY:
        if relation is None:
            raise ValueError("binary tightness verification needs the relation")
        return _verify_tightness_binary(result, bounds, relation, trip,
                                        scale, base, eps)

    beta = scale(result.beta)
    meff = scale(bounds.effective())
    t_u, partner = _certificates(beta, meff, base)
    free = beta < 1.0 - eps
    gaps = np.abs(beta - np.minimum(t_u, 1.0))
    max_gap = float(np.max(gaps[free])) if free.any() else 0.0
    return TightnessReport(MULTICLASS, max_gap, eps, partner=partner,
                           partition=result.partition)


def _verify_tightness_binary(result, bounds, relation, trip, scale, base, eps):
    labels = bounds.labels
    in_a = labels == result.positive_class
    a_crisp = in_a.astype(float)
    a_hat = np.asarray(result.a_hat, dtype=float)

    ah = scale(a_hat)
    ac = scale(a_crisp)
    r = scale(relation.values)

    minus = ah < ac - eps
    plus = ah > ac + eps
    zero = ~minus & ~plus
    partition = tuple("U-" if m else ("U+" if p else "U0")
                      for m, p in zip(minus, plus))

    eq_upper = 0.0
    eq_lower = 0.0
    t_grid = np.asarray(base._t_raw(r, ah[None, :]))  # [u, v] = T(R(u,v), ah_v)
    i_grid = np.asarray(base._i_raw(r, ah[:, None]))  # [v, u] = I(R(v,u), ah_v)
    for u in range(labels.shape[0]):
        if plus[u]:
            allowed = np.flatnonzero(minus | zero)
            if allowed.size:
                eq_upper = max(eq_upper,
                               abs(float(np.max(t_grid[u, allowed])) - float(ah[u])))
        elif minus[u]:
            allowed = np.flatnonzero(plus | zero)
            if allowed.size:
                eq_lower = max(eq_lower,
                               abs(float(np.min(i_grid[allowed, u])) - float(ah[u])))

    # cross-class adjacency witnesses via the granule predicate; for curved
    # isomorphisms granules are built in the transformed scale, where the
    # adjacency identity is the same statement without precision loss
    if base is trip:
        rel_check, ah_check = relation, a_hat
    else:
        rel_check = RelationMatrix(np.asarray(r), relation.declared)
        ah_check = ah
    adjacency_ok = True
    n_neg = np.asarray(base._n_raw(ah_check))
    idx_a = np.flatnonzero(in_a)
    idx_b = np.flatnonzero(~in_a)
    for u in idx_a:
        g_u = Granule(int(u), float(ah_check[u]), PLUS, rel_check, base)
        found = any(
            is_adjacent(Granule(int(v), float(n_neg[v]), MINUS, rel_check, base),
                        g_u, eps=max(eps, 1e-9))
            for v in idx_b)
        if not found:
            adjacency_ok = False
            break
    if adjacency_ok:
        for u in idx_b:
            g_u = Granule(int(u), float(n_neg[u]), MINUS, rel_check, base)
            found = any(
                is_adjacent(Granule(int(v), float(ah_check[v]), PLUS, rel_check, base),
                            g_u, eps=max(eps, 1e-9))
                for v in idx_a)
            if not found:
                adjacency_ok = False
                break

    return TightnessReport(BINARY, 0.0, eps, partner=result.tight_partner,
                           eq_upper_gap=eq_upper, eq_lower_gap=eq_lower,
                           adjacency_ok=adjacency_ok, partition=partition)
