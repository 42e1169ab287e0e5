#!/usr/bin/env python3
"""Solve a free-format MPS file with scipy's MILP solver (HiGHS).

Usage: solve_mps.py MPS_FILE SOL_FILE [MIP_REL_GAP] [TIME_LIMIT_S]

Writes a solution file with a `status` line, an `objective` line and one
`name value` line per variable.
"""

import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp


def parse_mps(path):
    rows = {}          # name -> sense ('N', 'L', 'E', 'G')
    row_order = []
    obj_row = None
    var_order = []
    var_index = {}
    var_integer = []
    var_lb = []
    var_ub = []
    obj_coeffs = {}    # var -> coeff
    entries = []       # (row_name, var, coeff)
    rhs = {}           # row_name -> value

    section = None
    integer_block = False

    with open(path) as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("*"):
                continue
            # section headers are unindented, data lines are indented
            if not raw[0].isspace():
                word = line.split()[0].upper()
                if word in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS",
                            "ENDATA", "OBJSENSE"):
                    section = word
                    continue
                if word == "NAME":
                    continue
            tokens = line.split()
            if section == "OBJSENSE":
                if tokens[0].upper() not in ("MIN", "MINIMIZE"):
                    raise ValueError(f"unsupported objective sense {tokens[0]}")
                continue
            if section == "ROWS":
                sense, name = tokens[0].upper(), tokens[1]
                rows[name] = sense
                if sense == "N":
                    if obj_row is None:
                        obj_row = name
                else:
                    row_order.append(name)
                continue
            if section == "COLUMNS":
                if "'MARKER'" in line:
                    if "'INTORG'" in line:
                        integer_block = True
                    elif "'INTEND'" in line:
                        integer_block = False
                    continue
                name = tokens[0]
                if name not in var_index:
                    var_index[name] = len(var_order)
                    var_order.append(name)
                    var_integer.append(integer_block)
                    var_lb.append(0.0)
                    var_ub.append(np.inf)
                for i in range(1, len(tokens) - 1, 2):
                    row, value = tokens[i], float(tokens[i + 1])
                    if row == obj_row:
                        obj_coeffs[name] = obj_coeffs.get(name, 0.0) + value
                    else:
                        entries.append((row, name, value))
                continue
            if section == "RHS":
                for i in range(1, len(tokens) - 1, 2):
                    rhs[tokens[i]] = float(tokens[i + 1])
                continue
            if section == "RANGES":
                raise ValueError("RANGES section not supported")
            if section == "BOUNDS":
                kind = tokens[0].upper()
                name = tokens[2]
                idx = var_index[name]
                if kind == "UP":
                    var_ub[idx] = float(tokens[3])
                elif kind == "LO":
                    var_lb[idx] = float(tokens[3])
                elif kind == "FX":
                    var_lb[idx] = var_ub[idx] = float(tokens[3])
                elif kind == "BV":
                    var_lb[idx], var_ub[idx] = 0.0, 1.0
                    var_integer[idx] = True
                elif kind == "FR":
                    var_lb[idx], var_ub[idx] = -np.inf, np.inf
                else:
                    raise ValueError(f"unsupported bound kind {kind}")
                continue

    n = len(var_order)
    c = np.zeros(n)
    for name, coeff in obj_coeffs.items():
        c[var_index[name]] = coeff

    row_pos = {name: i for i, name in enumerate(row_order)}
    data, r_idx, c_idx = [], [], []
    for row, var, value in entries:
        data.append(value)
        r_idx.append(row_pos[row])
        c_idx.append(var_index[var])
    a = sparse.coo_matrix((data, (r_idx, c_idx)), shape=(len(row_order), n))

    lb = np.full(len(row_order), -np.inf)
    ub = np.full(len(row_order), np.inf)
    for name in row_order:
        i = row_pos[name]
        b = rhs.get(name, 0.0)
        sense = rows[name]
        if sense == "L":
            ub[i] = b
        elif sense == "G":
            lb[i] = b
        elif sense == "E":
            lb[i] = ub[i] = b

    return {
        "vars": var_order,
        "c": c,
        "integrality": np.array(var_integer, dtype=int),
        "bounds": Bounds(np.array(var_lb), np.array(var_ub)),
        "a": a.tocsr(),
        "row_lb": lb,
        "row_ub": ub,
    }


def main():
    if len(sys.argv) < 3:
        sys.exit(__doc__)
    mps_path, sol_path = sys.argv[1], sys.argv[2]
    gap = float(sys.argv[3]) if len(sys.argv) > 3 else 1e-6
    time_limit = float(sys.argv[4]) if len(sys.argv) > 4 else 600.0

    p = parse_mps(mps_path)
    lines = []
    if len(p["vars"]) == 0:
        lines.append("status optimal")
        lines.append("objective 0")
    else:
        constraints = []
        if p["a"].shape[0] > 0:
            constraints.append(LinearConstraint(p["a"], p["row_lb"], p["row_ub"]))
        res = milp(
            c=p["c"],
            constraints=constraints,
            integrality=p["integrality"],
            bounds=p["bounds"],
            options={"mip_rel_gap": gap, "time_limit": time_limit},
        )
        if res.status == 0:
            status = "optimal"
        elif res.status == 2:
            status = "infeasible"
        elif res.x is not None:
            status = "feasible"
        else:
            status = "unknown"
        lines.append(f"status {status}")
        if res.x is not None:
            lines.append(f"objective {res.fun!r}")
            for name, value in zip(p["vars"], res.x):
                lines.append(f"{name} {float(value)!r}")

    with open(sol_path, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
