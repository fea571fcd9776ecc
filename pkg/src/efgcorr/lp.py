"""Exact linear programming over the rationals.

HiGHS proposes a basis in floating point; the basis is then re-solved and
certified with exact rational arithmetic (primal feasibility, and dual
feasibility when there is an objective). Infeasibility is certified through an
exact optimal phase-1 problem with positive value. Whenever a certificate
cannot be produced the problem is handed to a dense-tableau simplex with
Bland's rule, which is exact throughout.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import highspy
from gmpy2 import mpq

from .linsys import LinearSystem

ZERO = mpq(0)
ONE = mpq(1)


@dataclass(frozen=True)
class LPOutcome:
    status: str  # "feasible", "infeasible" or "unbounded"
    assignment: dict[str, Fraction] | None = None
    value: Fraction | None = None
    method: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


# A row is (coefficients by column index, sense, rhs).
Row = tuple[dict[int, mpq], str, mpq]


@dataclass
class _Problem:
    """min cost·x subject to rows; columns in ``nonneg`` are >= 0, others free."""

    ncols: int
    rows: list[Row]
    nonneg: list[bool]
    cost: list[mpq]


def solve(system: LinearSystem, method: str = "auto") -> LPOutcome:
    """Solve ``system`` exactly. ``method`` is "auto" or "exact" (tableau only)."""
    names = list(system.variables)
    index = {v: k for k, v in enumerate(names)}
    rows: list[Row] = []
    for c in system.constraints:
        coeffs: dict[int, mpq] = {}
        for v, a in c.coeffs:
            if a:
                coeffs[index[v]] = coeffs.get(index[v], ZERO) + mpq(a)
        rows.append(({k: a for k, a in coeffs.items() if a}, c.sense, mpq(c.rhs)))
    sign = -1 if system.objective is not None else 0
    cost = [ZERO] * len(names)
    for v, a in system.objective or ():
        cost[index[v]] += sign * mpq(a)
    nonneg = [v not in system.free for v in names]

    status, x = _solve_with_presolve(_Problem(len(names), rows, nonneg, cost), method)
    if status != "feasible":
        return LPOutcome(status, method=method)
    assignment = {v: to_fraction(x[k]) for k, v in enumerate(names)}
    violated = system.violations(assignment)
    if violated:
        raise ArithmeticError(f"internal error: exact check failed on {violated[:3]}")
    value = system.objective_value(assignment) if system.objective is not None else None
    return LPOutcome("feasible", assignment, value, method)


# -- presolve: eliminate free columns through equality rows -------------------------

def _solve_with_presolve(p: _Problem, method: str):
    rows = [(dict(r), s, b) for r, s, b in p.rows]
    cost = {k: c for k, c in enumerate(p.cost) if c}
    occ: dict[int, set[int]] = defaultdict(set)
    for ri, (r, _, _) in enumerate(rows):
        for k in r:
            occ[k].add(ri)
    alive = [True] * len(rows)
    eliminated: list[tuple[int, dict[int, mpq], mpq]] = []

    for ri in range(len(rows)):
        r, s, b = rows[ri]
        if s != "=" or not alive[ri]:
            continue
        cands = [k for k in r if not p.nonneg[k]]
        if not cands:
            continue
        k = min(cands, key=lambda c: (len(occ[c]), c))
        piv = r[k]
        expr = {j: -a / piv for j, a in r.items() if j != k}
        const = b / piv
        alive[ri] = False
        for j in r:
            occ[j].discard(ri)
        for si in list(occ[k]):
            rs, ss, bs = rows[si]
            f = rs.pop(k)
            occ[k].discard(si)
            for j, a in expr.items():
                val = rs.get(j, ZERO) + f * a
                if val:
                    if j not in rs:
                        occ[j].add(si)
                    rs[j] = val
                elif j in rs:
                    del rs[j]
                    occ[j].discard(si)
            rows[si] = (rs, ss, bs - f * const)
        if k in cost:
            f = cost.pop(k)
            for j, a in expr.items():
                val = cost.get(j, ZERO) + f * a
                if val:
                    cost[j] = val
                else:
                    cost.pop(j, None)
        eliminated.append((k, expr, const))

    keep_cols = sorted({k for ri, (r, _, _) in enumerate(rows) if alive[ri] for k in r} | set(cost))
    remap = {k: n for n, k in enumerate(keep_cols)}
    red_rows: list[Row] = []
    for ri, (r, s, b) in enumerate(rows):
        if not alive[ri]:
            continue
        if not r:
            if not _holds(ZERO, s, b):
                return "infeasible", None
            continue
        red_rows.append(({remap[k]: a for k, a in r.items()}, s, b))
    red = _Problem(
        len(keep_cols), red_rows, [p.nonneg[k] for k in keep_cols], [cost.get(k, ZERO) for k in keep_cols]
    )
    status, xr = _solve_reduced(red, method)
    if status != "feasible":
        return status, None
    x = [ZERO] * p.ncols
    for n, k in enumerate(keep_cols):
        x[k] = xr[n]
    for k, expr, const in reversed(eliminated):
        x[k] = const + sum((a * x[j] for j, a in expr.items()), ZERO)
    return "feasible", x


def _holds(lhs: mpq, sense: str, rhs: mpq) -> bool:
    if sense == "=":
        return lhs == rhs
    if sense == ">=":
        return lhs >= rhs
    return lhs <= rhs


def _solve_reduced(p: _Problem, method: str):
    if method == "exact":
        return _tableau(p)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if not p.rows:
        return _no_rows(p)
    result = _highs_certified(p)
    if result is not None:
        return result
    return _tableau(p)


def _no_rows(p: _Problem):
    for k in range(p.ncols):
        if p.cost[k] < 0 or (p.cost[k] and not p.nonneg[k]):
            return "unbounded", None
    return "feasible", [ZERO] * p.ncols


# -- HiGHS basis proposal and exact certification -------------------------------------

def _run_highs(p: _Problem):
    inf = highspy.kHighsInf
    lp = highspy.HighsLp()
    lp.num_col_ = p.ncols
    lp.num_row_ = len(p.rows)
    lp.col_cost_ = [float(c) for c in p.cost]
    lp.col_lower_ = [0.0 if nn else -inf for nn in p.nonneg]
    lp.col_upper_ = [inf] * p.ncols
    lower, upper = [], []
    for _, s, b in p.rows:
        fb = float(b)
        lower.append(fb if s in (">=", "=") else -inf)
        upper.append(fb if s in ("<=", "=") else inf)
    lp.row_lower_ = lower
    lp.row_upper_ = upper
    cols: list[list[tuple[int, float]]] = [[] for _ in range(p.ncols)]
    for ri, (r, _, _) in enumerate(p.rows):
        for k, a in r.items():
            cols[k].append((ri, float(a)))
    start, idx, val = [0], [], []
    for col in cols:
        for ri, a in col:
            idx.append(ri)
            val.append(a)
        start.append(len(idx))
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = start
    lp.a_matrix_.index_ = idx
    lp.a_matrix_.value_ = val
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("solver", "simplex")
    h.setOptionValue("random_seed", 0)
    h.passModel(lp)
    h.run()
    status = h.getModelStatus()
    basis = h.getBasis()
    return status, basis


def _highs_certified(p: _Problem):
    """("feasible", x) / ("infeasible", None) with exact certificates, or None."""
    ms = highspy.HighsModelStatus
    try:
        status, basis = _run_highs(p)
    except Exception:  # pragma: no cover - solver failure falls back to the tableau
        return None
    if status == ms.kOptimal:
        x = _certify(p, basis)
        if x is not None:
            return "feasible", x
        return None
    if status in (ms.kInfeasible, ms.kUnboundedOrInfeasible):
        if _phase_one_positive(p):
            return "infeasible", None
    return None


def _basis_sets(p: _Problem, basis):
    B = highspy.HighsBasisStatus.kBasic
    basic_cols = [k for k, st in enumerate(basis.col_status) if st == B]
    active = [ri for ri, st in enumerate(basis.row_status) if st != B]
    if len(basic_cols) != len(active):
        return None
    return basic_cols, active


def _certify(p: _Problem, basis, want_dual: bool = True) -> list[mpq] | None:
    sets = _basis_sets(p, basis)
    if sets is None:
        return None
    basic_cols, active = sets
    pos = {k: n for n, k in enumerate(basic_cols)}
    system = [{pos[k]: a for k, a in p.rows[ri][0].items() if k in pos} for ri in active]
    xb = solve_square(system, [p.rows[ri][2] for ri in active], len(basic_cols))
    if xb is None:
        return None
    x = [ZERO] * p.ncols
    for n, k in enumerate(basic_cols):
        if p.nonneg[k] and xb[n] < 0:
            return None
        x[k] = xb[n]
    for r, s, b in p.rows:
        if not _holds(sum((a * x[k] for k, a in r.items()), ZERO), s, b):
            return None
    if not want_dual or not any(p.cost):
        return x
    # Dual: y on active rows with A_B^T y = c_B.
    trans: list[dict[int, mpq]] = [dict() for _ in basic_cols]
    for n, ri in enumerate(active):
        for k, a in p.rows[ri][0].items():
            if k in pos:
                trans[pos[k]][n] = a
    y = solve_square(trans, [p.cost[k] for k in basic_cols], len(active))
    if y is None:
        return None
    for n, ri in enumerate(active):
        s = p.rows[ri][1]
        if (s == ">=" and y[n] < 0) or (s == "<=" and y[n] > 0):
            return None
    reduced = list(p.cost)
    for n, ri in enumerate(active):
        if y[n]:
            for k, a in p.rows[ri][0].items():
                reduced[k] -= y[n] * a
    for k in range(p.ncols):
        if k in pos:
            continue
        if p.nonneg[k] and reduced[k] < 0:
            return None
        if not p.nonneg[k] and reduced[k] != 0:
            return None
    return x


def _phase_one_problem(p: _Problem) -> _Problem:
    rows: list[Row] = []
    ncols = p.ncols
    for r, s, b in p.rows:
        r = dict(r)
        if s == ">=":
            r[ncols] = ONE
            ncols += 1
        elif s == "<=":
            r[ncols] = -ONE
            ncols += 1
        else:
            r[ncols] = ONE
            r[ncols + 1] = -ONE
            ncols += 2
        rows.append((r, s, b))
    cost = [ZERO] * p.ncols + [ONE] * (ncols - p.ncols)
    return _Problem(ncols, rows, list(p.nonneg) + [True] * (ncols - p.ncols), cost)


def _phase_one_positive(p: _Problem) -> bool:
    q = _phase_one_problem(p)
    status, basis = _run_highs(q)
    if status != highspy.HighsModelStatus.kOptimal:
        return False
    x = _certify(q, basis)
    if x is None:
        return False
    return sum((x[k] for k in range(p.ncols, q.ncols)), ZERO) > 0


def solve_square(rows: list[dict[int, mpq]], rhs: list[mpq], n: int) -> list[mpq] | None:
    """Exact solution of a square sparse system, or None when singular."""
    if len(rows) != n:
        return None
    rows = [dict(r) for r in rows]
    rhs = list(rhs)
    colrows: dict[int, set[int]] = defaultdict(set)
    for ri, r in enumerate(rows):
        for c in r:
            colrows[c].add(ri)
    pivot_of: dict[int, int] = {}
    for ri in sorted(range(n), key=lambda k: len(rows[k])):
        r = rows[ri]
        if not r:
            return None
        c = min(r, key=lambda k: (len(colrows[k]), k))
        inv = ONE / r[c]
        for k in r:
            r[k] *= inv
        rhs[ri] *= inv
        for si in list(colrows[c]):
            if si == ri:
                continue
            rs = rows[si]
            f = rs[c]
            for k, a in r.items():
                val = rs.get(k, ZERO) - f * a
                if val:
                    if k not in rs:
                        colrows[k].add(si)
                    rs[k] = val
                else:
                    rs.pop(k, None)
                    colrows[k].discard(si)
            rhs[si] -= f * rhs[ri]
        pivot_of[c] = ri
    if len(pivot_of) != n:
        return None
    return [rhs[pivot_of[c]] for c in range(n)]


# -- dense tableau simplex with Bland's rule -----------------------------------------------

def _tableau(p: _Problem):
    """Two-phase primal simplex over mpq; Bland's rule guarantees termination."""
    # Standard form: free columns split, slacks added, rhs made nonnegative.
    split: list[tuple[int, int]] = []
    ncols = 0
    for k in range(p.ncols):
        if p.nonneg[k]:
            split.append((ncols, -1))
            ncols += 1
        else:
            split.append((ncols, ncols + 1))
            ncols += 2
    m = len(p.rows)
    slack_count = sum(1 for _, s, _ in p.rows if s != "=")
    n_struct = ncols + slack_count
    width = n_struct + m  # artificials last
    T: list[list[mpq]] = []
    rhs: list[mpq] = []
    slack = ncols
    for ri, (r, s, b) in enumerate(p.rows):
        row = [ZERO] * width
        for k, a in r.items():
            pcol, ncol = split[k]
            row[pcol] = a
            if ncol >= 0:
                row[ncol] = -a
        if s == ">=":
            row[slack] = -ONE
            slack += 1
        elif s == "<=":
            row[slack] = ONE
            slack += 1
        if b < 0:
            row = [-a for a in row]
            b = -b
        row[n_struct + ri] = ONE
        T.append(row)
        rhs.append(b)
    basis = [n_struct + ri for ri in range(m)]

    cost2 = [ZERO] * width
    for k in range(p.ncols):
        pcol, ncol = split[k]
        cost2[pcol] = p.cost[k]
        if ncol >= 0:
            cost2[ncol] = -p.cost[k]

    cost1 = [ZERO] * n_struct + [ONE] * m
    if not _simplex(T, rhs, basis, cost1, width):  # phase 1 is never unbounded
        raise ArithmeticError("phase 1 reported unbounded")
    if sum((rhs[ri] for ri in range(m) if basis[ri] >= n_struct), ZERO) > 0:
        return "infeasible", None
    # Drive remaining (zero-valued) artificials out of the basis.
    ri = 0
    while ri < len(T):
        if basis[ri] >= n_struct:
            col = next((j for j in range(n_struct) if T[ri][j] != 0), None)
            if col is None:
                del T[ri], rhs[ri], basis[ri]
                continue
            _pivot(T, rhs, basis, ri, col)
        ri += 1
    for row in T:
        del row[n_struct:]
    if not _simplex(T, rhs, basis, cost2[:n_struct], n_struct):
        return "unbounded", None
    xs = [ZERO] * n_struct
    for ri, j in enumerate(basis):
        xs[j] = rhs[ri]
    x = []
    for k in range(p.ncols):
        pcol, ncol = split[k]
        x.append(xs[pcol] - (xs[ncol] if ncol >= 0 else ZERO))
    return "feasible", x


def _pivot(T, rhs, basis, r, c) -> None:
    row = T[r]
    inv = ONE / row[c]
    T[r] = row = [a * inv for a in row]
    rhs[r] *= inv
    for k in range(len(T)):
        if k != r:
            f = T[k][c]
            if f:
                Tk = T[k]
                for j, a in enumerate(row):
                    if a:
                        Tk[j] -= f * a
                rhs[k] -= f * rhs[r]
    basis[r] = c


def _simplex(T, rhs, basis, cost, width) -> bool:
    """Minimize cost over the tableau in place. False when unbounded."""
    while True:
        dual = {}
        for ri, j in enumerate(basis):
            if cost[j]:
                dual[ri] = cost[j]
        entering = None
        for j in range(width):
            d = cost[j] - sum((c * T[ri][j] for ri, c in dual.items()), ZERO)
            if d < 0:
                entering = j
                break
        if entering is None:
            return True
        best = None
        for ri, row in enumerate(T):
            a = row[entering]
            if a > 0:
                ratio = rhs[ri] / a
                key = (ratio, basis[ri])
                if best is None or key < best[0]:
                    best = (key, ri)
        if best is None:
            return False
        _pivot(T, rhs, basis, best[1], entering)


def check_assignment(system: LinearSystem, assignment: dict[str, Fraction]) -> bool:
    return not system.violations(assignment)

