#!/usr/bin/env python3
"""Solve an LP-format MILP with HiGHS and write a `bss-sol 1` file.

usage: highs_solve.py MODEL.lp OUT.sol --mip-gap G [--time-limit SECONDS]

Exit codes: 0 solved (any status written), 4 HiGHS unavailable, 1 other error.
"""

import argparse
import sys


def fmt(v):
    if v is None:
        return "none"
    v = float(v)
    if v != v or v in (float("inf"), float("-inf")):
        return "none"
    return repr(v)


def run(highspy, args, presolve=True):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", args.mip_gap / (1.0 + args.mip_gap))
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("dual_feasibility_tolerance", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    if not presolve:
        h.setOptionValue("presolve", "off")
    if args.time_limit is not None:
        h.setOptionValue("time_limit", float(args.time_limit))
    status = h.readModel(args.model)
    if status == highspy.HighsStatus.kError:
        raise RuntimeError("HiGHS could not read " + args.model)
    h.run()
    return h, h.getModelStatus()


def main():
    p = argparse.ArgumentParser()
    p.add_argument("model")
    p.add_argument("out")
    p.add_argument("--mip-gap", type=float, default=0.05)
    p.add_argument("--time-limit", type=float, default=None)
    args = p.parse_args()
    try:
        import highspy
    except ImportError as e:
        print("highspy is not installed: %s" % e, file=sys.stderr)
        return 4

    ms = highspy.HighsModelStatus
    h, st = run(highspy, args)
    if st == ms.kUnboundedOrInfeasible:
        h, st = run(highspy, args, presolve=False)

    info = h.getInfo()
    has_sol = info.primal_solution_status == 2
    if st == ms.kOptimal:
        status = "optimal"
    elif st == ms.kInfeasible:
        status, has_sol = "infeasible", False
    elif st in (ms.kUnbounded, ms.kUnboundedOrInfeasible):
        status, has_sol = "unbounded", False
    elif st == ms.kTimeLimit:
        status = "time_limit"
    elif st in (ms.kSolutionLimit, ms.kIterationLimit, ms.kInterrupt):
        status = "node_limit"
    else:
        print("unexpected HiGHS status: %s" % h.modelStatusToString(st), file=sys.stderr)
        return 1

    lines = ["bss-sol 1", "status " + status]
    if has_sol:
        lp = h.getLp()
        names = list(lp.col_names_)
        values = list(h.getSolution().col_value)
        lines.append("objective " + fmt(info.objective_function_value))
        is_mip = info.mip_node_count >= 0 and lp.integrality_ and len(lp.integrality_) > 0
        if is_mip:
            lines.append("bound " + fmt(info.mip_dual_bound))
            lines.append("gap " + fmt(info.mip_gap))
        else:
            lines.append("bound " + fmt(info.objective_function_value))
            lines.append("gap 0")
        for n, v in zip(names, values):
            lines.append("var %s %s" % (n, fmt(v) if fmt(v) != "none" else "0"))
    else:
        lines += ["objective none", "bound none", "gap none"]
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
