"""Exact two-phase primal simplex over Fractions with Bland's rule.

Rows of the tableau are sparse dicts (column -> Fraction).  The LP layer's
models are very sparse, so this is much cheaper than a dense tableau.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import BudgetExceeded, Infeasible, Unbounded
from .lp import LinearProgram

ZERO = Fraction(0)


class _Tableau:
    def __init__(self, rows, rhs, basis, ncols):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.ncols = ncols
        self.obj = {}
        self.obj_val = ZERO
        self.pivots = 0

    def set_objective(self, c: dict):
        """Reduced costs r = c - c_B B^-1 A for the current basis (maximize)."""
        r = dict(c)
        val = ZERO
        for i, bj in enumerate(self.basis):
            cb = c.get(bj, ZERO)
            if cb:
                for j, a in self.rows[i].items():
                    r[j] = r.get(j, ZERO) - cb * a
                val += cb * self.rhs[i]
        self.obj = {j: v for j, v in r.items() if v}
        self.obj_val = val

    def pivot(self, i: int, j: int):
        row = self.rows[i]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for col in row:
                row[col] *= inv
            self.rhs[i] *= inv
        row[j] = Fraction(1)
        rhs_i = self.rhs[i]
        for r, other in enumerate(self.rows):
            if r == i:
                continue
            f = other.get(j)
            if not f:
                continue
            for col, a in row.items():
                v = other.get(col, ZERO) - f * a
                if v:
                    other[col] = v
                else:
                    other.pop(col, None)
            self.rhs[r] -= f * rhs_i
        f = self.obj.get(j)
        if f:
            for col, a in row.items():
                v = self.obj.get(col, ZERO) - f * a
                if v:
                    self.obj[col] = v
                else:
                    self.obj.pop(col, None)
            self.obj_val += f * rhs_i
        self.basis[i] = j
        self.pivots += 1

    def run(self, allowed: int, max_pivots: int):
        """Maximize the current objective over columns < allowed."""
        while True:
            enter = min((j for j, v in self.obj.items() if v > 0 and j < allowed), default=None)
            if enter is None:
                return
            best = None
            for i, row in enumerate(self.rows):
                a = row.get(enter)
                if a is not None and a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                raise Unbounded("objective is unbounded")
            if self.pivots >= max_pivots:
                raise BudgetExceeded("simplex pivots", self.pivots, max_pivots)
            self.pivot(best[1], enter)


def _standard_form(lp: LinearProgram):
    """Map lp to max c'y, Ay = b, y >= 0, b >= 0.

    Returns (rows, rhs, c, nstruct, recover) where recover maps y back to x.
    """
    # column layout for structural variables
    cols = []  # per original var: list of (ycol, sign)
    offsets = []
    extra_rows = []
    ncol = 0
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is None and hi is None:
            cols.append([(ncol, 1), (ncol + 1, -1)])
            offsets.append(ZERO)
            ncol += 2
        elif lo is None:
            cols.append([(ncol, -1)])  # x = hi - y
            offsets.append(hi)
            ncol += 1
        else:
            cols.append([(ncol, 1)])
            offsets.append(lo)
            if hi is not None:
                extra_rows.append(({ncol: Fraction(1)}, "<=", hi - lo))
            ncol += 1
    nstruct = ncol
    sign = 1 if lp.sense == "max" else -1
    c = {}
    for j, v in lp.objective.items():
        for col, s in cols[j]:
            c[col] = c.get(col, ZERO) + sign * s * v

    raw = []
    for r in lp.rows:
        coeffs = {}
        rhs = r.rhs
        for j, a in r.coeffs.items():
            rhs -= a * offsets[j]
            for col, s in cols[j]:
                coeffs[col] = coeffs.get(col, ZERO) + s * a
        raw.append(({k: v for k, v in coeffs.items() if v}, r.sense, rhs))
    raw.extend(extra_rows)

    rows, rhs_list = [], []
    for coeffs, sense, rhs in raw:
        row = dict(coeffs)
        if sense != "=":
            row[ncol] = Fraction(1 if sense == "<=" else -1)
            ncol += 1
        if rhs < 0:
            row = {k: -v for k, v in row.items()}
            rhs = -rhs
        rows.append(row)
        rhs_list.append(rhs)

    def recover(y):
        x = []
        for j in range(lp.num_vars):
            v = offsets[j]
            for col, s in cols[j]:
                v += s * y.get(col, ZERO)
            x.append(v)
        return x

    return rows, rhs_list, c, nstruct, ncol, recover


def solve_lp(lp: LinearProgram, max_pivots: int = 200000):
    """Exact optimum (value, x) of lp; raises Infeasible or Unbounded."""
    rows, rhs, c, _, ncol, recover = _standard_form(lp)
    nreal = ncol
    basis = []
    # use a slack column as the starting basic variable when it is +1 in its row
    count = {}
    for row in rows:
        for col in row:
            count[col] = count.get(col, 0) + 1
    slack_owner = {}
    for i, row in enumerate(rows):
        for col, a in row.items():
            if a == 1 and count[col] == 1 and col not in slack_owner:
                slack_owner[col] = i
    start = [None] * len(rows)
    for col, i in slack_owner.items():
        if start[i] is None:
            start[i] = col
    for i, row in enumerate(rows):
        if start[i] is None:
            row[ncol] = Fraction(1)
            start[i] = ncol
            ncol += 1
        basis.append(start[i])
    tab = _Tableau(rows, rhs, basis, ncol)
    if ncol > nreal:
        tab.set_objective({j: Fraction(-1) for j in range(nreal, ncol)})
        tab.run(ncol, max_pivots)
        if tab.obj_val < 0:
            raise Infeasible(f"phase 1 optimum {tab.obj_val} < 0")
        # drive remaining artificial columns out of the basis
        drop = []
        for i, bj in enumerate(tab.basis):
            if bj >= nreal:
                col = min((j for j in tab.rows[i] if j < nreal), default=None)
                if col is None:
                    drop.append(i)
                else:
                    tab.pivot(i, col)
        for i in reversed(drop):
            del tab.rows[i]
            del tab.rhs[i]
            del tab.basis[i]
        for row in tab.rows:
            for j in [j for j in row if j >= nreal]:
                del row[j]
    tab.set_objective(c)
    tab.run(nreal, max_pivots)
    y = {bj: tab.rhs[i] for i, bj in enumerate(tab.basis)}
    x = recover(y)
    return lp.objective_value(x), x
