"""Relaxed sparse-subset-selection solver.

The discrete problem: pick rows of a distance matrix D (I, J) to represent
all columns, minimizing

    sum_j d(rep(j), j)  +  sum_{i in S} w_i  +  sum_{i<l in S} P_il

where w are per-row sparsity weights and P an optional pairwise penalty
between jointly selected rows. The binary assignment is relaxed to a
nonnegative matrix Z with unit column sums; the row-max terms
``sum_i w_i max_j z_ij`` make selected rows sparse. The relaxation is solved
by an alternating-direction splitting: one block projects columns onto the
simplex, the other applies the proximal operator of the weighted row-max
norm, with a scaled dual and residual-balanced penalty parameter.

The pairwise term is nonconvex (a product of row maxima), so it is handled
by an outer linearization loop: fold ``sum_l P_kl * s_l`` with ``s`` from the
previous iterate into the row weights, re-solve the convex inner problem,
and stop when the rounded selection is stable.

``brute_force_oracle`` enumerates all nonempty row subsets and is the exact
reference for small instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import SolverError


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    tol: float = 1e-5
    max_iters: int = 2000
    round_threshold: float = 0.1
    outer_iters: int = 10
    over_relax: float = 1.0
    collect_trace: bool = False

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "tol": self.tol,
            "max_iters": self.max_iters,
            "round_threshold": self.round_threshold,
            "outer_iters": self.outer_iters,
            "over_relax": self.over_relax,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


@dataclass(frozen=True)
class SelectionProblem:
    """Distance matrix, per-row sparsity weights, optional pairwise penalty."""

    distances: np.ndarray  # (I, J), finite, >= 0
    sparsity_weights: np.ndarray  # (I,), >= 0
    pairwise_penalty: np.ndarray | None = None  # (I, I) symmetric, zero diag

    @property
    def num_rows(self) -> int:
        return self.distances.shape[0]

    @property
    def num_cols(self) -> int:
        return self.distances.shape[1]

    def validate(self) -> None:
        d = self.distances
        w = self.sparsity_weights
        if d.ndim != 2:
            raise SolverError("distance matrix must be 2-D")
        if not np.all(np.isfinite(d)) or d.size and d.min() < 0:
            raise SolverError("distances must be finite and nonnegative")
        if w.shape != (d.shape[0],):
            raise SolverError("one sparsity weight per row required")
        if not np.all(np.isfinite(w)) or w.size and w.min() < 0:
            raise SolverError("sparsity weights must be finite and nonnegative")
        p = self.pairwise_penalty
        if p is not None:
            if p.shape != (d.shape[0], d.shape[0]):
                raise SolverError("pairwise penalty must be (I, I)")
            if not np.allclose(p, p.T):
                raise SolverError("pairwise penalty must be symmetric")
            if np.any(np.diag(p) != 0):
                raise SolverError("pairwise penalty diagonal must be zero")
            if not np.all(np.isfinite(p)) or p.min() < 0:
                raise SolverError("pairwise penalty must be finite and nonnegative")


@dataclass
class RelaxedSolution:
    z: np.ndarray  # (I, J), columns on the simplex
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    objective: float
    trace: list = field(default_factory=list)


@dataclass
class SelectionResult:
    selected: list[int]  # sorted row indices
    assignment: np.ndarray  # (J,) column -> selected row
    objective: float
    relaxed: RelaxedSolution | None = None


def relaxed_objective(problem: SelectionProblem, z: np.ndarray) -> float:
    """Objective of the continuous relaxation at Z (pairwise term included)."""
    row_max = z.max(axis=1) if z.shape[1] else np.zeros(z.shape[0])
    val = float(np.sum(problem.distances * z) + problem.sparsity_weights @ row_max)
    if problem.pairwise_penalty is not None:
        val += 0.5 * float(row_max @ problem.pairwise_penalty @ row_max)
    return val


def solve_relaxed(problem: SelectionProblem, config: SolverConfig | None = None) -> RelaxedSolution:
    """Run the splitting method on the relaxed problem (pairwise term ignored
    during iterations; see ``solve_selection`` for the outer linearization).

    Deterministic for fixed inputs and config. Non-convergence within
    ``max_iters`` is reported via the ``converged`` flag, not an error.
    """
    config = config or SolverConfig()
    problem.validate()
    i_dim, j_dim = problem.distances.shape
    if j_dim == 0:
        z = np.zeros((i_dim, 0))
        return RelaxedSolution(z, 0, 0.0, 0.0, True, 0.0)

    d = np.ascontiguousarray(problem.distances, dtype=np.float64)
    w = np.ascontiguousarray(problem.sparsity_weights, dtype=np.float64)
    rho = float(config.rho)
    if rho <= 0:
        raise SolverError("rho must be positive")

    z = np.full((i_dim, j_dim), 1.0 / i_dim)
    c = z.copy()
    u = np.zeros((i_dim, j_dim))
    d_scaled = d / rho
    t = w / rho
    scale = float(np.sqrt(i_dim * j_dim))

    trace = []
    r = s = np.inf
    converged = False
    iterations = 0
    for it in range(1, config.max_iters + 1):
        r2, s2 = kernels.admm_step(d_scaled, z, c, u, t, config.over_relax)
        r = np.sqrt(r2) / scale
        s = rho * np.sqrt(s2) / scale
        iterations = it
        if config.collect_trace:
            col_sums = z.sum(axis=0)
            trace.append(
                {
                    "iter": it,
                    "primal": r,
                    "dual": s,
                    "col_sum_err": float(np.abs(col_sums - 1.0).max()),
                    "min_entry": float(z.min()),
                }
            )
        if max(r, s) < config.tol:
            converged = True
            break
        # Residual balancing: keep primal/dual within a factor of 10.
        if r > 10.0 * s and s > 0:
            rho *= 2.0
            u /= 2.0
            d_scaled = d / rho
            t = w / rho
        elif s > 10.0 * r and r > 0:
            rho /= 2.0
            u *= 2.0
            d_scaled = d / rho
            t = w / rho

    np.maximum(z, 0.0, out=z)
    sub = replace(problem, pairwise_penalty=None)
    return RelaxedSolution(
        z=z,
        iterations=iterations,
        primal_residual=float(r),
        dual_residual=float(s),
        converged=converged,
        objective=relaxed_objective(sub, z),
        trace=trace,
    )


def round_selection(
    relaxed: RelaxedSolution,
    problem: SelectionProblem,
    threshold: float = 0.1,
) -> SelectionResult:
    """Discretize a relaxed solution.

    Rows whose maximum column mass reaches ``threshold`` are selected, every
    column is reassigned to its nearest selected row (ties to the lowest row
    index), and selected rows left representing no column are dropped. An
    empty selection falls back to the single row with the largest row max.
    """
    z = relaxed.z
    if z.shape[1] == 0:
        return SelectionResult([], np.zeros(0, dtype=np.int64), 0.0, relaxed)
    row_max = z.max(axis=1)
    selected = np.flatnonzero(row_max >= threshold)
    if selected.size == 0:
        selected = np.array([int(np.argmax(row_max))])
    assignment_local = problem.distances[selected].argmin(axis=0)
    assignment = selected[assignment_local]
    used = np.unique(assignment)
    result = SelectionResult(
        selected=[int(i) for i in used],
        assignment=assignment,
        objective=0.0,
        relaxed=relaxed,
    )
    result.objective = objective_value(result, problem)
    return result


def objective_value(selection: SelectionResult, problem: SelectionProblem) -> float:
    """Discrete objective of a selection under a problem."""
    sel = np.asarray(selection.selected, dtype=np.int64)
    assignment = np.asarray(selection.assignment, dtype=np.int64)
    if assignment.size and not np.isin(assignment, sel).all():
        raise SolverError("assignment references an unselected row")
    val = float(problem.distances[assignment, np.arange(assignment.size)].sum())
    val += float(problem.sparsity_weights[sel].sum())
    if problem.pairwise_penalty is not None and sel.size > 1:
        sub = problem.pairwise_penalty[np.ix_(sel, sel)]
        val += 0.5 * float(sub.sum())  # symmetric, zero diagonal
    return val


def _round_sweep(relaxed: RelaxedSolution, problem: SelectionProblem) -> SelectionResult:
    """Best-prefix discretization: order rows by relaxed row maxima and keep
    the prefix with the lowest discrete objective (evaluated incrementally),
    then reassign columns and drop rows representing none.

    Subsumes single-threshold rounding (any threshold cut is some prefix) and
    is what ``solve_selection`` uses; ``round_selection`` remains the plain
    thresholding primitive.
    """
    d = problem.distances
    w = problem.sparsity_weights
    p = problem.pairwise_penalty
    i_dim, j_dim = d.shape
    if j_dim == 0:
        return SelectionResult([], np.zeros(0, dtype=np.int64), 0.0, relaxed)
    row_max = relaxed.z.max(axis=1)
    order = np.lexsort((np.arange(i_dim), -row_max))
    cur_min = np.full(j_dim, np.inf)
    w_sum = 0.0
    pair_sum = 0.0
    best_obj = np.inf
    best_k = 1
    for k, r in enumerate(order):
        np.minimum(cur_min, d[r], out=cur_min)
        w_sum += w[r]
        if p is not None and k > 0:
            pair_sum += float(p[r, order[:k]].sum())
        obj = float(cur_min.sum()) + w_sum + pair_sum
        if obj < best_obj - 1e-12:
            best_obj = obj
            best_k = k + 1
    sel = np.sort(order[:best_k])
    assignment = sel[d[sel].argmin(axis=0)]
    used = np.unique(assignment)
    result = SelectionResult(
        selected=[int(i) for i in used],
        assignment=assignment,
        objective=0.0,
        relaxed=relaxed,
    )
    result.objective = objective_value(result, problem)
    return result


def brute_force_oracle(problem: SelectionProblem, max_rows: int = 16) -> SelectionResult:
    """Exact minimizer by enumerating all nonempty row subsets.

    Ties resolve to the lexicographically smallest index tuple. Exponential
    in the number of rows; refuses instances with more than ``max_rows``.
    """
    problem.validate()
    i_dim, j_dim = problem.distances.shape
    if i_dim > max_rows:
        raise SolverError(f"oracle limited to {max_rows} rows, got {i_dim}")
    if j_dim == 0:
        return SelectionResult([], np.zeros(0, dtype=np.int64), 0.0)

    d = problem.distances
    w = problem.sparsity_weights
    p = problem.pairwise_penalty
    best_cost = np.inf
    best_rows: tuple[int, ...] | None = None
    for mask in range(1, 1 << i_dim):
        rows = tuple(i for i in range(i_dim) if mask >> i & 1)
        idx = np.array(rows)
        cost = float(d[idx].min(axis=0).sum()) + float(w[idx].sum())
        if p is not None and len(rows) > 1:
            cost += 0.5 * float(p[np.ix_(idx, idx)].sum())
        if cost < best_cost - 1e-12 or (
            abs(cost - best_cost) <= 1e-12
            and (best_rows is None or rows < best_rows)
        ):
            best_cost = cost
            best_rows = rows
    assert best_rows is not None
    idx = np.array(best_rows)
    assignment = idx[d[idx].argmin(axis=0)]
    result = SelectionResult(
        selected=list(best_rows), assignment=assignment, objective=0.0
    )
    result.objective = objective_value(result, problem)
    return result


def solve_selection(
    problem: SelectionProblem, config: SolverConfig | None = None
) -> SelectionResult:
    """Full pipeline: relax, iterate the pairwise linearization, round.

    Without a pairwise penalty this is one relaxed solve plus rounding. With
    one, the penalty is folded into the row weights using the previous
    iterate's row maxima (initialized to 1), re-solved until the rounded
    selection stops changing or ``outer_iters`` is hit. The reported
    objective is always the true discrete objective of ``problem``.
    """
    config = config or SolverConfig()
    problem.validate()
    if problem.pairwise_penalty is None:
        relaxed = solve_relaxed(problem, config)
        return _round_sweep(relaxed, problem)

    s = np.ones(problem.num_rows)
    prev_selected: list[int] | None = None
    best: SelectionResult | None = None
    for _ in range(max(1, config.outer_iters)):
        w_eff = problem.sparsity_weights + problem.pairwise_penalty @ s
        sub = SelectionProblem(problem.distances, w_eff)
        relaxed = solve_relaxed(sub, config)
        result = _round_sweep(relaxed, problem)
        if best is None or result.objective < best.objective - 1e-12:
            best = result
        s = relaxed.z.max(axis=1) if relaxed.z.shape[1] else s
        if result.selected == prev_selected:
            break
        prev_selected = result.selected
    assert best is not None
    return best
