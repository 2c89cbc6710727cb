#!/usr/bin/env python3
"""Random small linear programs with HiGHS reference optima.

Each problem maximizes c.x subject to mixed <=, >=, = rows and finite,
half-infinite or free variable bounds.

    python3 lp_reference.py ../fixtures/lp_instances.json
"""
import json
import sys

import numpy as np
from scipy.optimize import linprog


def make(rng, idx):
    n = int(rng.integers(2, 9))
    m = int(rng.integers(1, 9))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    A[rng.random((m, n)) < 0.3] = 0.0
    x0 = rng.uniform(-3, 3, size=n)  # interior-ish point keeps most instances feasible
    rel = rng.choice(["LE", "GE", "EQ"], size=m, p=[0.5, 0.3, 0.2])
    act = A @ x0
    rhs = np.where(rel == "LE", act + rng.uniform(0, 4, m), np.where(rel == "GE", act - rng.uniform(0, 4, m), act))
    rhs = rhs.round(3)
    lo, hi = [], []
    for j in range(n):
        kind = rng.integers(0, 4)
        if kind == 0:
            lo.append(-10.0); hi.append(10.0)
        elif kind == 1:
            lo.append(0.0); hi.append(None)
        elif kind == 2:
            lo.append(None); hi.append(5.0)
        else:
            lo.append(None); hi.append(None)
    c = rng.integers(-6, 7, size=n).astype(float)
    if idx % 7 == 3:  # force infeasibility with a contradictory pair
        A = np.vstack([A, A[0], A[0]])
        rel = np.concatenate([rel, ["LE", "GE"]])
        rhs = np.concatenate([rhs, [0.0, 1.0]])
    return {"c": c.tolist(), "A": A.tolist(), "relations": rel.tolist(), "rhs": rhs.tolist(),
            "lower": lo, "upper": hi}


def solve(p):
    A = np.array(p["A"])
    rel = np.array(p["relations"])
    rhs = np.array(p["rhs"])
    le, ge, eq = rel == "LE", rel == "GE", rel == "EQ"
    A_ub = np.vstack([A[le], -A[ge]])
    b_ub = np.concatenate([rhs[le], -rhs[ge]])
    res = linprog(-np.array(p["c"]), A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=A[eq] if eq.any() else None, b_eq=rhs[eq] if eq.any() else None,
                  bounds=list(zip(p["lower"], p["upper"])), method="highs")
    status = {0: "Optimal", 2: "Infeasible", 3: "Unbounded"}[res.status]
    return status, (-res.fun if res.status == 0 else None)


def main():
    out_path = sys.argv[1] if len(sys.argv) > 1 else "lp_instances.json"
    rng = np.random.default_rng(77)
    problems = []
    for i in range(120):
        p = make(rng, i)
        p["status"], p["objective"] = solve(p)
        problems.append(p)
    counts = {s: sum(p["status"] == s for p in problems) for s in ("Optimal", "Infeasible", "Unbounded")}
    print(counts, file=sys.stderr)
    with open(out_path, "w") as fh:
        json.dump({"format": "lp-instances", "version": 1, "problems": problems}, fh)
        fh.write("\n")


if __name__ == "__main__":
    main()
