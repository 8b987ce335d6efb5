#!/usr/bin/env python3
"""Solve MPS files with SciPy's HiGHS backend and print/record objectives.

Usage: reference_lp.py OUT.json FILE.mps [FILE.mps ...]

Reads the free-format subset written by `chargeplan` (ROWS, COLUMNS, RHS,
BOUNDS) and writes {"<file stem>": objective, ...} to OUT.json.
"""
import json
import os
import sys

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix


def read_mps(path):
    section = None
    obj = None
    rows, sense = {}, []
    cols, cost, lo, up = {}, [], [], []
    ri, ci, vals = [], [], []
    rhs = None
    for raw in open(path):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            section = raw.split()[0]
            if section == "COLUMNS":
                rhs = np.zeros(len(sense))
            continue
        f = raw.split()
        if section == "ROWS":
            if f[0] == "N":
                obj = obj or f[1]
            else:
                rows[f[1]] = len(sense)
                sense.append(f[0])
        elif section == "COLUMNS":
            if f[0] not in cols:
                cols[f[0]] = len(cost)
                cost.append(0.0)
                lo.append(0.0)
                up.append(None)
            j = cols[f[0]]
            for r, v in zip(f[1::2], f[2::2]):
                if r == obj:
                    cost[j] = float(v)
                else:
                    ri.append(rows[r]); ci.append(j); vals.append(float(v))
        elif section == "RHS":
            for r, v in zip(f[1::2], f[2::2]):
                if r != obj:
                    rhs[rows[r]] = float(v)
        elif section == "BOUNDS":
            j = cols[f[2]]
            kind = f[0]
            if kind == "UP":
                up[j] = float(f[3])
            elif kind == "LO":
                lo[j] = float(f[3])
            elif kind == "FX":
                lo[j] = up[j] = float(f[3])
            elif kind == "FR":
                lo[j], up[j] = None, None
            elif kind == "MI":
                lo[j] = None
    A = csr_matrix((vals, (ri, ci)), shape=(len(sense), len(cost)))
    return np.array(cost), A, np.array(sense), rhs, list(zip(lo, up))


def solve(path):
    c, A, sense, b, bounds = read_mps(path)
    le, ge, eq = sense == "L", sense == "G", sense == "E"
    A_ub = csr_matrix(np.vstack([A[le].toarray(), -A[ge].toarray()])) if (le | ge).any() else None
    b_ub = np.concatenate([b[le], -b[ge]]) if (le | ge).any() else None
    A_eq = A[eq] if eq.any() else None
    b_eq = b[eq] if eq.any() else None
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options={"primal_feasibility_tolerance": 1e-10,
                                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise SystemExit(f"{path}: {res.message}")
    return res.fun


def main():
    out, files = sys.argv[1], sys.argv[2:]
    result = {}
    for p in files:
        result[os.path.splitext(os.path.basename(p))[0]] = solve(p)
        print(p, repr(result[os.path.basename(p)[:-4]]))
    with open(out, "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
