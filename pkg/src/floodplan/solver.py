"""Bounded-variable revised simplex and branch-and-bound.

LP core: ``min c'x  s.t.  A x (<=,>=,==) b,  l <= x <= u`` is put in
computational standard form by appending one slack per row (with bounds
chosen so every row reads ``A x + s = b``) and solved with a revised
simplex over the joint column set.  The basis inverse is never formed
explicitly: a sparse LU factorisation of the basis matrix is combined
with product-form eta updates and refactorised periodically.  Phase 1
minimises the sum of primal infeasibilities with dynamically re-signed
unit costs on violating basic variables (the composite method); each
step stops at the first breakpoint of the piecewise objective, so a
variable regains feasibility exactly at the bound it violated.  Phase 2
runs the same iteration with the true costs.  Dantzig pricing switches
to Bland's least-index rule after a stall, which restores the
termination guarantee under degeneracy.

MIP driver: best-bound branch and bound over the binary variables with
most-fractional branching.  Decision binaries (protection flags and crew
assignments) take priority over the availability binaries they imply;
child LPs warm-start from the parent basis; ties in the node heap break
by insertion order so repeated runs explore identical trees.

``warm_start_check`` verifies a caller-supplied binary assignment: rows
that touch only binaries are checked arithmetically (violations are
reported by constraint family), then the continuous remainder is split
into independent blocks (union-find over shared columns) and each block
is solved as a small LP.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .milp import DECISION_ROLES, EQUAL, GREATER, LESS, MilpInstance

AT_BASIC, AT_LOWER, AT_UPPER, AT_FREE = 0, 1, 2, 3

FEAS_TOL = 1e-7
DUAL_TOL = 1e-8
PIVOT_TOL = 1e-10
INT_TOL = 1e-6
GAP_TOL = 1e-6


# ----------------------------------------------------------------------
# standard form
# ----------------------------------------------------------------------
class StandardForm:
    """Rows as equalities over structural + slack columns."""

    def __init__(
        self,
        A_struct: sp.spmatrix,
        senses: list[str],
        rhs: np.ndarray,
        lower: np.ndarray,
        upper: np.ndarray,
        cost: np.ndarray,
        binary: np.ndarray,
        roles: list[str] | None = None,
    ) -> None:
        m, n = A_struct.shape
        self.m = m
        self.n_struct = n
        self.A_struct = A_struct.tocsc()
        self.A = sp.hstack([self.A_struct, sp.identity(m, format="csc")]).tocsc()
        self.b = np.asarray(rhs, dtype=float)
        slack_lo = np.empty(m)
        slack_up = np.empty(m)
        for i, sense in enumerate(senses):
            if sense == LESS:
                slack_lo[i], slack_up[i] = 0.0, math.inf
            elif sense == GREATER:
                slack_lo[i], slack_up[i] = -math.inf, 0.0
            elif sense == EQUAL:
                slack_lo[i], slack_up[i] = 0.0, 0.0
            else:
                raise ValueError(f"unknown sense {sense!r}")
        self.lower = np.concatenate([np.asarray(lower, dtype=float), slack_lo])
        self.upper = np.concatenate([np.asarray(upper, dtype=float), slack_up])
        self.c = np.concatenate([np.asarray(cost, dtype=float), np.zeros(m)])
        self.binary = np.asarray(binary, dtype=bool)
        self.roles = roles or ["var"] * n
        self.senses = list(senses)

    @classmethod
    def from_instance(cls, instance: MilpInstance) -> "StandardForm":
        m = instance.num_constraints
        n = instance.num_vars
        data: list[float] = []
        ri: list[int] = []
        ci: list[int] = []
        senses: list[str] = []
        rhs = np.zeros(m)
        for i, con in enumerate(instance.constraints):
            senses.append(con.sense)
            rhs[i] = con.rhs
            for j, v in con.coeffs:
                ri.append(i)
                ci.append(j)
                data.append(v)
        A = sp.coo_matrix((data, (ri, ci)), shape=(m, n))
        lower = np.array([v.lower for v in instance.catalog])
        upper = np.array([v.upper for v in instance.catalog])
        binary = np.array([v.is_binary for v in instance.catalog])
        roles = [v.role for v in instance.catalog]
        return cls(A, senses, rhs, lower, upper, instance.objective.copy(), binary, roles)


@dataclass
class Basis:
    basic: np.ndarray  # column index occupying each basis position
    status: np.ndarray  # per-column AT_* code

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.status.copy())


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | numerical | iteration_limit
    objective: float | None
    x: np.ndarray  # structural values (phase-1 point when infeasible)
    basis: Basis | None
    iterations: int
    infeasibility: float
    violated_rows: list[int] = field(default_factory=list)
    violated_bounds: list[int] = field(default_factory=list)


# ----------------------------------------------------------------------
# factorisation with eta updates
# ----------------------------------------------------------------------
class _Factor:
    def __init__(self, A: sp.csc_matrix, basic: np.ndarray) -> None:
        B = A[:, basic].tocsc()
        self.lu = splu(B)
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(v)
        for r, alpha in self.etas:
            wr = w[r] / alpha[r]
            w = w - alpha * wr
            w[r] = wr
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        w = v.copy()
        for r, alpha in reversed(self.etas):
            w[r] = (w[r] - alpha @ w + alpha[r] * w[r]) / alpha[r]
        return self.lu.solve(w, trans="T")

    def push(self, r: int, alpha: np.ndarray) -> None:
        self.etas.append((r, alpha.copy()))


# ----------------------------------------------------------------------
# simplex engine
# ----------------------------------------------------------------------
class _Simplex:
    REFACTOR_EVERY = 60

    def __init__(
        self,
        std: StandardForm,
        lower: np.ndarray | None = None,
        upper: np.ndarray | None = None,
    ) -> None:
        self.std = std
        self.m = std.m
        self.n_total = std.A.shape[1]
        self.lower = std.lower if lower is None else lower
        self.upper = std.upper if upper is None else upper
        self.AT = std.A.T.tocsr()
        self.iterations = 0
        self.status_msg = ""

    # -- basis management ------------------------------------------------
    def _slack_basis(self, hint: dict[int, float] | None) -> Basis:
        n, m = self.std.n_struct, self.m
        status = np.empty(self.n_total, dtype=np.int8)
        for j in range(n):
            lo, up = self.lower[j], self.upper[j]
            if math.isinf(lo) and math.isinf(up):
                status[j] = AT_FREE
            elif math.isinf(up):
                status[j] = AT_LOWER
            elif math.isinf(lo):
                status[j] = AT_UPPER
            else:
                if hint is not None and j in hint:
                    h = hint[j]
                    status[j] = AT_LOWER if abs(h - lo) <= abs(up - h) else AT_UPPER
                else:
                    status[j] = AT_LOWER
        basic = np.arange(n, n + m, dtype=np.int64)
        status[n:] = AT_BASIC
        return Basis(basic, status)

    def _install(self, basis: Basis) -> bool:
        """Build x and the factorisation for ``basis``; False if singular."""
        self.basic = basis.basic.copy()
        self.vstat = basis.status.copy()
        self.vstat[self.basic] = AT_BASIC
        x = np.zeros(self.n_total)
        nonbasic = self.vstat != AT_BASIC
        lo_mask = nonbasic & (self.vstat == AT_LOWER)
        up_mask = nonbasic & (self.vstat == AT_UPPER)
        x[lo_mask] = self.lower[lo_mask]
        x[up_mask] = self.upper[up_mask]
        # a remembered bound that is now infinite falls back to zero
        bad = nonbasic & ~np.isfinite(x)
        x[bad] = 0.0
        self.x = x
        try:
            self.factor = _Factor(self.std.A, self.basic)
        except (RuntimeError, ValueError):
            return False
        self._recompute_basics()
        return True

    def _recompute_basics(self) -> None:
        xn = self.x.copy()
        xn[self.basic] = 0.0
        resid = self.std.b - self.std.A @ xn
        self.x[self.basic] = self.factor.ftran(resid)

    def _refactor(self) -> bool:
        try:
            self.factor = _Factor(self.std.A, self.basic)
        except (RuntimeError, ValueError):
            return False
        self._recompute_basics()
        return True

    # -- helpers -----------------------------------------------------------
    def _violations(self) -> tuple[np.ndarray, np.ndarray]:
        xb = self.x[self.basic]
        lo = self.lower[self.basic]
        up = self.upper[self.basic]
        below = xb < lo - FEAS_TOL
        above = xb > up + FEAS_TOL
        return below, above

    def _infeasibility(self) -> float:
        xb = self.x[self.basic]
        lo = self.lower[self.basic]
        up = self.upper[self.basic]
        return float(
            np.sum(np.maximum(lo - xb, 0.0)[np.isfinite(lo)])
            + np.sum(np.maximum(xb - up, 0.0)[np.isfinite(up)])
        )

    def _entering(self, d: np.ndarray, bland: bool) -> int:
        movable = (self.upper - self.lower > 1e-12) | (
            ~np.isfinite(self.lower) & ~np.isfinite(self.upper)
        )
        eligible = movable & (
            ((self.vstat == AT_LOWER) & (d < -DUAL_TOL))
            | ((self.vstat == AT_UPPER) & (d > DUAL_TOL))
            | ((self.vstat == AT_FREE) & (np.abs(d) > DUAL_TOL))
        )
        idx = np.nonzero(eligible)[0]
        if idx.size == 0:
            return -1
        if bland:
            return int(idx[0])
        score = np.where(
            self.vstat[idx] == AT_UPPER, d[idx], -d[idx]
        )
        score = np.where(self.vstat[idx] == AT_FREE, np.abs(d[idx]), score)
        return int(idx[np.argmax(score)])

    # -- main loop -----------------------------------------------------------
    def run(
        self,
        basis: Basis | None,
        hint: dict[int, float] | None,
        iteration_limit: int,
    ) -> LpResult:
        installed = False
        if basis is not None and basis.basic.shape == (self.m,):
            installed = self._install(basis)
        if not installed:
            if not self._install(self._slack_basis(hint)):
                return self._result("numerical")

        status = self._phase(1, iteration_limit)
        if status == "feasible":
            status = self._phase(2, iteration_limit)
        if status == "feasible":
            status = "optimal"
        return self._result(status)

    def _result(self, status: str) -> LpResult:
        infeas = self._infeasibility() if hasattr(self, "x") else math.inf
        violated_rows: list[int] = []
        violated_bounds: list[int] = []
        if status == "infeasible":
            below, above = self._violations()
            for pos in np.nonzero(below | above)[0]:
                col = int(self.basic[pos])
                if col >= self.std.n_struct:
                    violated_rows.append(col - self.std.n_struct)
                else:
                    violated_bounds.append(col)
        obj = None
        if status == "optimal":
            obj = float(self.std.c @ self.x)
        x_struct = (
            self.x[: self.std.n_struct].copy()
            if hasattr(self, "x")
            else np.zeros(self.std.n_struct)
        )
        basis = (
            Basis(self.basic.copy(), self.vstat.copy()) if hasattr(self, "basic") else None
        )
        return LpResult(
            status=status,
            objective=obj,
            x=x_struct,
            basis=basis,
            iterations=self.iterations,
            infeasibility=infeas,
            violated_rows=violated_rows,
            violated_bounds=violated_bounds,
        )

    def _phase(self, phase: int, iteration_limit: int) -> str:
        m = self.m
        bland = False
        stall = 0
        stall_limit = 3 * (m + self.n_total)
        best_obj = math.inf
        retried_numerics = False

        while True:
            if self.iterations >= iteration_limit:
                return "iteration_limit"
            self.iterations += 1

            below, above = self._violations()
            if phase == 1:
                if not below.any() and not above.any():
                    return "feasible"
                cb = above.astype(float) - below.astype(float)
                obj_now = self._infeasibility()
            else:
                cb = self.std.c[self.basic]
                obj_now = float(self.std.c @ self.x)

            if obj_now < best_obj - 1e-10 * (1.0 + abs(best_obj)):
                best_obj = obj_now
                stall = 0
            else:
                stall += 1
                if stall > stall_limit:
                    bland = True

            y = self.factor.btran(cb)
            d = (self.std.c if phase == 2 else np.zeros(self.n_total)) - self.AT @ y
            q = self._entering(d, bland)
            if q < 0:
                if phase == 1:
                    return "feasible" if self._infeasibility() <= 1e-6 else "infeasible"
                return "feasible"

            if self.vstat[q] == AT_UPPER:
                direction = -1.0
            elif self.vstat[q] == AT_FREE:
                direction = 1.0 if d[q] < 0 else -1.0
            else:
                direction = 1.0

            a_q = np.asarray(self.std.A[:, q].todense()).ravel()
            alpha = self.factor.ftran(a_q)
            delta = direction * alpha  # basics move as x_B - t*delta

            t, leave_pos, leave_to = self._ratio(phase, delta, below, above, bland)
            if t is None:
                # every blocking pivot was numerically tiny: refactor once
                if self.factor.etas and self._refactor():
                    self.iterations -= 1
                    continue
                if not retried_numerics and self._refactor():
                    retried_numerics = True
                    self.iterations -= 1
                    continue
                return "numerical"

            flip = math.inf
            if self.vstat[q] in (AT_LOWER, AT_UPPER):
                span = self.upper[q] - self.lower[q]
                if math.isfinite(span):
                    flip = span

            if math.isinf(t) and math.isinf(flip):
                return "unbounded" if phase == 2 else "numerical"

            if flip < t - 1e-12:
                # bound flip, basis unchanged
                self.x[self.basic] -= flip * delta
                if self.vstat[q] == AT_LOWER:
                    self.vstat[q] = AT_UPPER
                    self.x[q] = self.upper[q]
                else:
                    self.vstat[q] = AT_LOWER
                    self.x[q] = self.lower[q]
                continue

            # pivot: q enters at position leave_pos
            leaving = int(self.basic[leave_pos])
            self.x[self.basic] -= t * delta
            start = self.x[q]
            self.x[q] = start + direction * t
            self.x[leaving] = (
                self.lower[leaving] if leave_to == AT_LOWER else self.upper[leaving]
            )
            self.vstat[leaving] = leave_to
            self.vstat[q] = AT_BASIC
            self.basic[leave_pos] = q
            self.factor.push(leave_pos, alpha)
            if len(self.factor.etas) >= self.REFACTOR_EVERY:
                if not self._refactor():
                    return "numerical"

    def _ratio(
        self,
        phase: int,
        delta: np.ndarray,
        below: np.ndarray,
        above: np.ndarray,
        bland: bool,
    ):
        """First-breakpoint ratio test.

        Returns (t, leaving position, bound the leaver lands on); t may be
        +inf with no leaver (caller handles flips/unboundedness), or None
        when all near-minimal pivots are below the pivot tolerance.
        """
        xb = self.x[self.basic]
        lo = self.lower[self.basic]
        up = self.upper[self.basic]
        pos = delta > PIVOT_TOL
        neg = delta < -PIVOT_TOL
        t_lo = np.full(self.m, math.inf)
        t_up = np.full(self.m, math.inf)
        if phase == 1:
            feas = ~below & ~above
            m_up = (above & pos) | (feas & neg)
            m_lo = (below & neg) | (feas & pos)
        else:
            m_lo = pos
            m_up = neg
        with np.errstate(divide="ignore", invalid="ignore"):
            t_lo[m_lo] = (xb[m_lo] - lo[m_lo]) / delta[m_lo]
            t_up[m_up] = (xb[m_up] - up[m_up]) / delta[m_up]
        t_lo = np.where(np.isnan(t_lo), math.inf, np.maximum(t_lo, 0.0))
        t_up = np.where(np.isnan(t_up), math.inf, np.maximum(t_up, 0.0))
        t_all = np.minimum(t_lo, t_up)
        tmin = float(t_all.min()) if self.m else math.inf
        if math.isinf(tmin):
            return math.inf, -1, AT_LOWER
        near = t_all <= tmin + 1e-9
        cand = np.nonzero(near)[0]
        if bland:
            order = np.argsort(self.basic[cand], kind="stable")
            for k in order:
                p = int(cand[k])
                if abs(delta[p]) >= PIVOT_TOL:
                    return self._pack(p, t_all, t_lo, t_up)
            return None
        p = int(cand[np.argmax(np.abs(delta[cand]))])
        if abs(delta[p]) < PIVOT_TOL:
            return None
        return self._pack(p, t_all, t_lo, t_up)

    @staticmethod
    def _pack(p: int, t_all, t_lo, t_up):
        to = AT_LOWER if t_lo[p] <= t_up[p] else AT_UPPER
        return float(t_all[p]), p, to


def solve_lp(
    std: StandardForm,
    *,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
    basis: Basis | None = None,
    hint: dict[int, float] | None = None,
    iteration_limit: int | None = None,
) -> LpResult:
    """Solve the LP relaxation of ``std`` (optionally with overridden
    bounds, a warm-start basis, or a point hint for the initial nonbasic
    bound choice)."""
    engine = _Simplex(std, lower, upper)
    limit = iteration_limit if iteration_limit is not None else 20_000 + 30 * std.m
    return engine.run(basis, hint, limit)


# ----------------------------------------------------------------------
# branch and bound
# ----------------------------------------------------------------------
@dataclass
class MipResult:
    status: str  # optimal | infeasible | node_limit | numerical
    objective: float | None
    x: np.ndarray | None
    bound: float
    gap: float
    nodes: int
    lp_iterations: int


def verify_point(std: StandardForm, x: np.ndarray, *, tol: float = 1e-6) -> float | None:
    """Objective of ``x`` if it satisfies all rows, bounds and binary
    integrality within ``tol``; None otherwise.  Used to vet externally
    supplied incumbents so a bad hint can never corrupt the search."""
    n = std.n_struct
    if x.shape != (n,):
        return None
    lo, up = std.lower[:n], std.upper[:n]
    if np.any(x < lo - tol) or np.any(x > up + tol):
        return None
    if np.any(np.abs(x[std.binary] - np.round(x[std.binary])) > tol):
        return None
    lhs = std.A_struct @ x
    for i, sense in enumerate(std.senses):
        if sense == LESS and lhs[i] > std.b[i] + tol:
            return None
        if sense == GREATER and lhs[i] < std.b[i] - tol:
            return None
        if sense == EQUAL and abs(lhs[i] - std.b[i]) > tol:
            return None
    return float(std.c[:n] @ x)


def _branch_variable(std: StandardForm, x: np.ndarray, int_tol: float) -> int:
    """Most-fractional branching within the highest-priority role.

    Decision binaries are fixed in role order (protection flags before
    crew assignment, crew assignment before dispatch edges) because the
    downstream binaries are implied once the earlier ones are integral;
    branching on implied binaries first just deepens the tree.
    """
    bidx = np.nonzero(std.binary)[0]
    frac = np.abs(x[bidx] - np.round(x[bidx]))
    cand = bidx[frac > int_tol]
    if cand.size == 0:
        return -1
    rank = {role: r for r, role in enumerate(DECISION_ROLES)}
    ranks = np.array([rank.get(std.roles[j], len(DECISION_ROLES)) for j in cand])
    pool = cand[ranks == ranks.min()]
    dist = np.abs(np.abs(x[pool] - np.floor(x[pool])) - 0.5)
    order = np.lexsort((pool, dist))
    return int(pool[order[0]])


def solve_mip(
    instance: MilpInstance,
    *,
    gap_tol: float = GAP_TOL,
    int_tol: float = INT_TOL,
    node_limit: int | None = None,
    log=None,
    mip_start: np.ndarray | None = None,
    heuristic=None,
) -> MipResult:
    """Branch-and-bound over the instance's binary variables.

    ``mip_start`` optionally seeds the incumbent with a full structural
    point; it is re-verified against rows/bounds/integrality before use.
    ``heuristic`` optionally maps a node's fractional LP point to a
    candidate integral point (or None); candidates are verified the same
    way, so neither hook can compromise correctness -- they only prune.
    """
    std = StandardForm.from_instance(instance)
    return _solve_mip_std(
        std, instance.start_hint, gap_tol, int_tol, node_limit, log, mip_start, heuristic
    )


def _solve_mip_std(std, hint, gap_tol, int_tol, node_limit, log, mip_start, heuristic) -> MipResult:
    def emit(msg: str) -> None:
        if log is None:
            return
        if callable(log):
            log(msg)
        else:
            log.write(msg + "\n")

    incumbent: np.ndarray | None = None
    inc_obj = math.inf
    counter = 0
    nodes_done = 0
    lp_iters = 0
    # heap entries: (bound, tie, overrides {col: (lo, up)}, basis, depth)
    heap: list = []

    if mip_start is not None:
        started = verify_point(std, np.asarray(mip_start, dtype=float))
        if started is not None:
            incumbent = np.asarray(mip_start, dtype=float).copy()
            inc_obj = started
            emit(f"start incumbent={inc_obj:.6f}")

    root = solve_lp(std, hint=hint)
    lp_iters += root.iterations
    if root.status == "unbounded":
        raise ValueError("LP relaxation is unbounded; the model is missing bounds")
    if root.status == "infeasible":
        return MipResult("infeasible", None, None, math.inf, math.inf, 1, lp_iters)
    if root.status != "optimal":
        return MipResult("numerical", None, None, -math.inf, math.inf, 1, lp_iters)
    heapq.heappush(heap, (root.objective, counter, {}, root.basis, 0))
    counter += 1

    def gap_of(bound: float) -> float:
        if incumbent is None:
            return math.inf
        return (inc_obj - bound) / max(1.0, abs(inc_obj))

    best_bound = root.objective
    status = "optimal"
    exhausted = True  # loop ran the whole tree (vs. stopped at a break)
    while heap:
        bound, _, overrides, basis, depth = heapq.heappop(heap)
        best_bound = bound
        if incumbent is not None and gap_of(bound) <= gap_tol:
            exhausted = False
            break
        if node_limit is not None and nodes_done >= node_limit:
            status = "node_limit"
            exhausted = False
            break
        nodes_done += 1

        lower = std.lower.copy()
        upper = std.upper.copy()
        for j, (lo, up) in overrides.items():
            lower[j], upper[j] = lo, up
        res = solve_lp(std, lower=lower, upper=upper, basis=basis)
        if res.status == "numerical":
            res = solve_lp(std, lower=lower, upper=upper)  # cold retry
        lp_iters += res.iterations
        if res.status == "infeasible":
            emit(f"node={nodes_done} depth={depth} pruned=infeasible")
            continue
        if res.status != "optimal":
            status = "numerical"
            exhausted = False
            emit(f"node={nodes_done} depth={depth} abort={res.status}")
            break
        if res.objective >= inc_obj - 1e-9:
            emit(
                f"node={nodes_done} depth={depth} pruned=bound "
                f"lp={res.objective:.6f} bound={bound:.6f}"
            )
            continue

        if heuristic is not None:
            cand = heuristic(res.x)
            if cand is not None:
                cand = np.asarray(cand, dtype=float)
                cobj = verify_point(std, cand)
                if cobj is not None and cobj < inc_obj - 1e-9:
                    incumbent = cand.copy()
                    inc_obj = cobj
                    emit(
                        f"node={nodes_done} depth={depth} heuristic "
                        f"incumbent={inc_obj:.6f}"
                    )
            if res.objective >= inc_obj - 1e-9:
                emit(f"node={nodes_done} depth={depth} pruned=heuristic-closed")
                continue

        frac_bits = np.abs(res.x[std.binary] - np.round(res.x[std.binary]))
        if frac_bits.size and frac_bits.max() > int_tol:
            rounded = res.x.copy()
            rounded[std.binary] = np.round(rounded[std.binary])
            cobj = verify_point(std, rounded)
            if cobj is not None and cobj < inc_obj - 1e-9:
                incumbent = rounded
                inc_obj = cobj
                emit(
                    f"node={nodes_done} depth={depth} rounding "
                    f"incumbent={inc_obj:.6f}"
                )
                if res.objective >= inc_obj - 1e-9:
                    emit(f"node={nodes_done} depth={depth} pruned=rounding-closed")
                    continue

        j = _branch_variable(std, res.x, int_tol)
        if j < 0:
            if res.objective < inc_obj - 1e-9:
                incumbent = res.x.copy()
                inc_obj = res.objective
                emit(
                    f"node={nodes_done} depth={depth} incumbent={inc_obj:.6f} "
                    f"bound={bound:.6f}"
                )
            continue
        emit(
            f"node={nodes_done} depth={depth} lp={res.objective:.6f} "
            f"bound={bound:.6f} inc={inc_obj:.6f} branch=col{j} value={res.x[j]:.4f}"
        )
        for lo, up in ((0.0, 0.0), (1.0, 1.0)):
            child = dict(overrides)
            child[j] = (lo, up)
            heapq.heappush(heap, (res.objective, counter, child, res.basis, depth + 1))
            counter += 1

    if incumbent is None:
        if status == "optimal":
            status = "infeasible"
        return MipResult(status, None, None, best_bound, math.inf, nodes_done, lp_iters)
    if exhausted:
        # every node was fathomed, so the incumbent is proven optimal
        best_bound = inc_obj
    else:
        # a break left the popped node open; its bound (the heap minimum)
        # caps every open subtree and the incumbent caps the optimum
        best_bound = min(best_bound, inc_obj)
    return MipResult(
        status,
        inc_obj,
        incumbent,
        best_bound,
        max(0.0, gap_of(best_bound)),
        nodes_done,
        lp_iters,
    )


# ----------------------------------------------------------------------
# warm-start feasibility check for explicit plans
# ----------------------------------------------------------------------
@dataclass
class CheckResult:
    feasible: bool
    objective: float | None
    violations: list[str] = field(default_factory=list)
    violated_families: tuple[str, ...] = ()
    values: np.ndarray | None = None  # completed point (binaries + LP fill-in)


def warm_start_check(instance: MilpInstance, assignment: dict[str, float]) -> CheckResult:
    """Validate a caller-supplied 0/1 assignment of every binary variable.

    Pure-binary rows are evaluated arithmetically and reported by family
    when violated.  With the binaries fixed, the continuous remainder
    decomposes into independent blocks (no shared columns); each block is
    solved as a small LP and infeasibilities are again reported by family.
    On success the objective of the completed solution is returned.
    """
    cat = instance.catalog
    binaries = {cat[j].name: j for j in cat.binary_indices()}
    missing = sorted(set(binaries) - set(assignment))
    if missing:
        raise ValueError(
            "assignment is missing binary variables: " + ", ".join(missing[:10])
            + ("..." if len(missing) > 10 else "")
        )
    values = np.full(len(cat), np.nan)
    for name, j in binaries.items():
        v = float(assignment[name])
        if abs(v - round(v)) > 1e-9 or round(v) not in (0, 1):
            raise ValueError(f"binary variable {name} assigned non-binary value {v}")
        values[j] = round(v)

    is_binary = np.array([v.is_binary for v in cat])
    violations: list[str] = []
    families: set[str] = set()
    cont_rows: list[int] = []
    for i, con in enumerate(instance.constraints):
        if any(not is_binary[j] for j, _ in con.coeffs):
            cont_rows.append(i)
            continue
        lhs = sum(coef * values[j] for j, coef in con.coeffs)
        ok = (
            lhs <= con.rhs + 1e-9
            if con.sense == LESS
            else lhs >= con.rhs - 1e-9
            if con.sense == GREATER
            else abs(lhs - con.rhs) <= 1e-9
        )
        if not ok:
            families.add(con.family)
            violations.append(
                f"{con.family}: row {con.name} has {lhs:g} {con.sense} {con.rhs:g}"
            )
    if violations:
        return CheckResult(False, None, violations, tuple(sorted(families)))

    # objective contribution of the fixed binaries
    fixed_obj = float(
        sum(instance.objective[j] * values[j] for j in cat.binary_indices())
    )

    # union-find over continuous columns
    cont_cols = [j for j in range(len(cat)) if not is_binary[j]]
    parent = {j: j for j in cont_cols}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    row_cont: dict[int, list[int]] = {}
    for i in cont_rows:
        cols = [j for j, _ in instance.constraints[i].coeffs if not is_binary[j]]
        row_cont[i] = cols
        for a, b in zip(cols, cols[1:]):
            union(a, b)

    comp_rows: dict[int, list[int]] = {}
    for i in cont_rows:
        root = find(row_cont[i][0])
        comp_rows.setdefault(root, []).append(i)
    comp_cols: dict[int, list[int]] = {}
    for j in cont_cols:
        comp_cols.setdefault(find(j), []).append(j)

    total = fixed_obj
    for root, rows in sorted(comp_rows.items()):
        cols = sorted(comp_cols[root])
        cmap = {j: k for k, j in enumerate(cols)}
        data, ri, ci = [], [], []
        rhs = np.zeros(len(rows))
        senses = []
        for r, i in enumerate(rows):
            con = instance.constraints[i]
            senses.append(con.sense)
            shift = 0.0
            for j, coef in con.coeffs:
                if is_binary[j]:
                    shift += coef * values[j]
                else:
                    ri.append(r)
                    ci.append(cmap[j])
                    data.append(coef)
            rhs[r] = con.rhs - shift
        A = sp.coo_matrix((data, (ri, ci)), shape=(len(rows), len(cols)))
        sub = StandardForm(
            A,
            senses,
            rhs,
            np.array([cat[j].lower for j in cols]),
            np.array([cat[j].upper for j in cols]),
            np.array([instance.objective[j] for j in cols]),
            np.zeros(len(cols), dtype=bool),
        )
        res = solve_lp(sub)
        if res.status == "infeasible":
            for rr in res.violated_rows:
                con = instance.constraints[rows[rr]]
                families.add(con.family)
                violations.append(f"{con.family}: row {con.name} cannot be met")
            if not res.violated_rows:
                fams = sorted({instance.constraints[i].family for i in rows})
                families.update(fams)
                violations.append(
                    "continuous block infeasible (families: " + ", ".join(fams) + ")"
                )
            return CheckResult(False, None, violations, tuple(sorted(families)))
        if res.status != "optimal":
            raise RuntimeError(f"LP block ended with status {res.status}")
        total += res.objective
        for j in cols:
            values[j] = res.x[cmap[j]]

    # columns in no row at all sit at their cheapest bound
    for j in cont_cols:
        if np.isnan(values[j]):
            c = instance.objective[j]
            values[j] = cat[j].upper if c < 0 else cat[j].lower
            total += instance.objective[j] * values[j]

    return CheckResult(True, total, [], (), values)
