"""Exact linear programming over the rationals.

A small two-phase tableau simplex with Bland's rule. Inputs are inequality
rows (a, b) meaning a.x <= b and equality rows meaning a.x == b, over free
variables. Everything is exact, so feasibility answers and optima are
decisions, not approximations. Intended for the small systems produced by
the polyhedral kernel (tens of rows, dimension <= 6).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .exact import QZERO, qvec, to_q

_MAX_PIVOTS = 50_000


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Optional[object] = None
    point: Optional[tuple] = None


class _Tableau:
    def __init__(self, dim: int, ineqs, eqs):
        self.dim = dim
        rows = []
        basis = []
        nslack = len(ineqs)
        base = 2 * dim
        art_cols = []
        # inequality rows: a.x + s = b
        for i, (a, b) in enumerate(ineqs):
            a = qvec(a)
            b = to_q(b)
            coeffs = {}
            for j, v in enumerate(a):
                if v != 0:
                    coeffs[j] = v
                    coeffs[dim + j] = -v
            coeffs[base + i] = to_q(1)
            if b < 0:
                coeffs = {j: -v for j, v in coeffs.items()}
                b = -b
                rows.append((coeffs, b))
                basis.append(None)  # needs artificial
            else:
                rows.append((coeffs, b))
                basis.append(base + i)
        for a, b in eqs:
            a = qvec(a)
            b = to_q(b)
            coeffs = {}
            for j, v in enumerate(a):
                if v != 0:
                    coeffs[j] = v
                    coeffs[dim + j] = -v
            if b < 0:
                coeffs = {j: -v for j, v in coeffs.items()}
                b = -b
            rows.append((coeffs, b))
            basis.append(None)
        ncols = base + nslack
        for i, bvar in enumerate(basis):
            if bvar is None:
                art_cols.append(ncols)
                coeffs, b = rows[i]
                coeffs[ncols] = to_q(1)
                basis[i] = ncols
                ncols += 1
        self.ncols = ncols
        self.art_start = base + nslack
        self.basis = basis
        self.rhs = [b for (_, b) in rows]
        # dense rows for pivoting speed
        self.rows = []
        for coeffs, _ in rows:
            dense = [QZERO] * ncols
            for j, v in coeffs.items():
                dense[j] = v
            self.rows.append(dense)

    def pivot(self, r: int, c: int) -> None:
        rows = self.rows
        rhs = self.rhs
        prow = rows[r]
        inv = 1 / prow[c]
        if inv != 1:
            rows[r] = prow = [x * inv for x in prow]
            rhs[r] = rhs[r] * inv
        ncols = self.ncols
        for i in range(len(rows)):
            if i == r:
                continue
            f = rows[i][c]
            if f != 0:
                row = rows[i]
                rows[i] = [row[j] - f * prow[j] for j in range(ncols)]
                rhs[i] -= f * rhs[r]
        self.basis[r] = c

    def run(self, obj, allowed_end: int) -> str:
        """Maximize obj (dense list over columns) with Bland's rule.

        Columns at index >= allowed_end never enter the basis.
        Returns "optimal" or "unbounded".
        """
        rows = self.rows
        rhs = self.rhs
        basis = self.basis
        nrows = len(rows)
        for _ in range(_MAX_PIVOTS):
            weights = [(i, obj[basis[i]]) for i in range(nrows) if obj[basis[i]] != 0]
            enter = -1
            for j in range(allowed_end):
                red = obj[j]
                for i, w in weights:
                    v = rows[i][j]
                    if v != 0:
                        red -= w * v
                if red > 0:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            leave = -1
            best = None
            for i in range(nrows):
                coef = rows[i][enter]
                if coef > 0:
                    ratio = rhs[i] / coef
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                return "unbounded"
            self.pivot(leave, enter)
        raise RuntimeError("simplex did not terminate within the pivot cap")

    def objective_value(self, obj) -> object:
        acc = QZERO
        for i, b in enumerate(self.basis):
            if obj[b] != 0:
                acc += obj[b] * self.rhs[i]
        return acc

    def extract_point(self) -> tuple:
        vals = {}
        for i, b in enumerate(self.basis):
            vals[b] = self.rhs[i]
        return tuple(vals.get(j, QZERO) - vals.get(self.dim + j, QZERO) for j in range(self.dim))


def _phase1(tab: _Tableau) -> bool:
    if tab.art_start == tab.ncols:
        return True
    obj = [QZERO] * tab.ncols
    for j in range(tab.art_start, tab.ncols):
        obj[j] = to_q(-1)
    status = tab.run(obj, allowed_end=tab.art_start)
    assert status == "optimal"  # phase 1 objective is bounded above by 0
    if tab.objective_value(obj) != 0:
        return False
    # drive leftover zero-valued artificials out of the basis
    for i in range(len(tab.rows)):
        if tab.basis[i] >= tab.art_start:
            pivot_col = next(
                (j for j in range(tab.art_start) if tab.rows[i][j] != 0), None
            )
            if pivot_col is not None:
                tab.pivot(i, pivot_col)
            # else: redundant zero row; harmless to keep, artificial stays at 0
    return True


def lp_solve(objective: Sequence, ineqs, eqs=(), maximize: bool = True) -> LPResult:
    """Optimize objective.x over {x : ineq rows hold, eq rows hold}."""
    ineqs = list(ineqs)
    eqs = list(eqs)
    if ineqs:
        dim = len(ineqs[0][0])
    elif eqs:
        dim = len(eqs[0][0])
    else:
        dim = len(objective)
    obj_x = qvec(objective) if len(objective) else tuple()
    if len(obj_x) != dim:
        raise ValueError("objective dimension mismatch")
    for a, _ in list(ineqs) + list(eqs):
        if len(a) != dim:
            raise ValueError("dimension mismatch among constraints")
    tab = _Tableau(dim, ineqs, eqs)
    if not _phase1(tab):
        return LPResult("infeasible")
    obj = [QZERO] * tab.ncols
    for j in range(dim):
        c = obj_x[j] if maximize else -obj_x[j]
        obj[j] = c
        obj[dim + j] = -c
    status = tab.run(obj, allowed_end=tab.art_start)
    if status == "unbounded":
        return LPResult("unbounded", point=None)
    value = tab.objective_value(obj)
    if not maximize:
        value = -value
    return LPResult("optimal", value=value, point=tab.extract_point())


def lp_feasible(ineqs, eqs=()) -> Optional[tuple]:
    """Exact feasibility of {a.x <= b} and {a.x == b} rows; witness or None."""
    ineqs = list(ineqs)
    eqs = list(eqs)
    if not ineqs and not eqs:
        return tuple()
    dim = len(ineqs[0][0]) if ineqs else len(eqs[0][0])
    for a, _ in ineqs + eqs:
        if len(a) != dim:
            raise ValueError("dimension mismatch among constraints")
    tab = _Tableau(dim, ineqs, eqs)
    if not _phase1(tab):
        return None
    return tab.extract_point()


def linear_range(direction: Sequence, ineqs, eqs=()):
    """Range (lo, hi) of direction.x over the feasible set.

    Returns (status, lo, hi); lo or hi is None when unbounded on that side.
    """
    hi_res = lp_solve(direction, ineqs, eqs, maximize=True)
    if hi_res.status == "infeasible":
        return "infeasible", None, None
    lo_res = lp_solve(direction, ineqs, eqs, maximize=False)
    hi = hi_res.value if hi_res.status == "optimal" else None
    lo = lo_res.value if lo_res.status == "optimal" else None
    return "ok", lo, hi
