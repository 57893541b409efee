"""Command-line front end.

Every subcommand writes either UTF-8 CSV (header row first) or a single JSON
document.  Exit codes: 0 success, 1 assertion failure, 2 input error,
3 resource cap.  Errors are reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import cancellation, full_sim, optimizer, perturbation, reduced_sim
from .errors import NoRootError, PartialSearchError, ProblemError, RegimeError, ResourceError
from .problem import angles, is_power_of_two, make_problem, problem_from_json

EXIT_OK, EXIT_ASSERT, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3

SIMULATE_COLUMNS = ("engine", "j1", "j2", "mode", "success_probability", "nontarget_residual",
                    "discrepancy", "state")
OPTIMIZE_COLUMNS = ("method", "alpha_star", "eta_star", "f_star", "queries_leading", "gap")
SWEEP_COLUMNS = ("kind", "beta", "g")
ORACLE_COLUMNS = ("K", "b", "taus", "schedules", "max_discrepancy")
VALIDATE_COLUMNS = ("K", "b", "N", "t", "z", "tau_bar", "epsilons", "variance", "beta",
                    "theta", "thetas", "power_of_two")

EPILOG = f"""\
CSV columns (JSON mirrors them 1:1):
  simulate       {', '.join(SIMULATE_COLUMNS)}
  optimize       {', '.join(OPTIMIZE_COLUMNS)}
  sweep-beta     {', '.join(SWEEP_COLUMNS)}
  perturb-check  {', '.join(perturbation.CSV_COLUMNS)}
  oracle-compare {', '.join(ORACLE_COLUMNS)}
  validate       {', '.join(VALIDATE_COLUMNS)}
exit codes: 0 ok, 1 assertion failure, 2 input error, 3 resource cap
"""


class AssertionFailure(Exception):
    pass


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def emit(args, columns, rows, meta=None):
    if args.format == "json":
        doc = {"columns": list(columns), "rows": [{c: _jsonable(r.get(c)) for c in columns} for r in rows]}
        if meta:
            doc.update({k: _jsonable(v) for k, v in meta.items()})
        text = json.dumps(doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
        text = buf.getvalue()
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def parse_taus(text: str):
    try:
        vals = [x.strip() for x in text.split(",")]
        if any(not v for v in vals):
            raise ValueError
        return [int(v) if v.lstrip("-").isdigit() else float(v) for v in vals]
    except ValueError:
        raise ProblemError(f"malformed --taus {text!r}; expected comma-separated numbers") from None


def parse_floats(text: str, name: str):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ProblemError(f"malformed {name} {text!r}") from None


def load_problem(args):
    regime = getattr(args, "regime", "algorithm")
    if getattr(args, "problem", None):
        with open(args.problem, encoding="utf-8") as fh:
            return problem_from_json(fh.read(), regime=regime)
    if args.K is None or args.taus is None or (args.b is None and regime == "algorithm"):
        raise ProblemError("need --K, --b and --taus (or --problem FILE)")
    p = make_problem(args.K, args.b, parse_taus(args.taus), regime=regime)
    if p.N is not None and not is_power_of_two(p.N):
        print(f"warning: N={p.N} is not a power of two", file=sys.stderr)
    return p


# -- simulate ----------------------------------------------------------------

def cmd_simulate(args):
    p = load_problem(args)
    if args.optimal:
        sched = optimizer.optimal_schedule(p, integer=(args.mode == "integer"))
        j1, j2 = sched.j1, sched.j2
    else:
        if args.j1 is None or args.j2 is None:
            raise ProblemError("need --j1 and --j2 (or --optimal)")
        j1, j2 = args.j1, args.j2
    mode = args.mode or ("integer" if float(j1).is_integer() and float(j2).is_integer() else "real")
    if mode == "integer" and not (float(j1).is_integer() and float(j2).is_integer()):
        raise ProblemError("integer mode needs integral --j1/--j2")
    if args.engine in ("full", "both") and mode != "integer":
        raise ProblemError("the full engine runs integer schedules only")

    rows, states = [], {}
    if args.engine in ("reduced", "both"):
        op_mode = "operator" if mode == "integer" else "analytic"
        jj = (int(j1), int(j2)) if mode == "integer" else (float(j1), float(j2))
        states["reduced"] = reduced_sim.run(p, *jj, mode=op_mode)
    if args.engine in ("full", "both"):
        mask = full_sim.target_mask(p)
        full = full_sim.run_partial_search(p, int(j1), int(j2), mask=mask, cap=args.cap)
        states["full"] = full_sim.project_to_reduced(p, full, mask)
    disc = None
    if len(states) == 2:
        disc = float(np.max(np.abs(states["full"] - states["reduced"])))
    for engine, st in states.items():
        rows.append({"engine": engine, "j1": float(j1), "j2": float(j2), "mode": mode,
                     "success_probability": reduced_sim.success_probability(p, st),
                     "nontarget_residual": abs(float(st[-1])),
                     "discrepancy": disc, "state": [float(x) for x in st]})
    emit(args, SIMULATE_COLUMNS, rows, {"problem": p.to_dict()})
    if disc is not None and disc > args.tol_equiv:
        raise AssertionFailure(f"engine discrepancy {disc:.3e} exceeds {args.tol_equiv:g}")


# -- optimize ----------------------------------------------------------------

def cmd_optimize(args):
    p = load_problem(args)
    failures = []
    res = optimizer.solve_uneven_optimum(p)
    results = [(res, None)]
    if p.distribution.even:
        cf = optimizer.even_optimum(p)
        gap = abs(cf.f_star - res.f_star)
        results.append((cf, gap))
        if max(abs(cf.alpha_star - res.alpha_star), abs(cf.eta_star - res.eta_star)) > args.tol_closed_form:
            failures.append(f"closed form disagrees with root solve by {gap:.3e}")
    if args.oracle == "grid":
        grid = optimizer.grid_oracle(p, args.grid_points)
        gap = abs(grid.f_star - res.f_star)
        results.append((grid, gap))
        if gap > args.tol_grid:
            failures.append(f"grid oracle gap {gap:.3e} exceeds {args.tol_grid:g}")
    rows = [{"method": r.method, "alpha_star": r.alpha_star, "eta_star": r.eta_star,
             "f_star": r.f_star, "queries_leading": r.queries_leading, "gap": g} for r, g in results]
    emit(args, OPTIMIZE_COLUMNS, rows, {"problem": p.to_dict(),
                                        "root_brackets": [list(b) for b in res.root_brackets],
                                        "multiple_roots": res.multiple_roots})
    if res.multiple_roots:
        print(f"warning: {len(res.root_brackets)} sign changes of the optimality condition; "
              "smallest root used", file=sys.stderr)
    if failures:
        raise AssertionFailure("; ".join(failures))


# -- sweep-beta --------------------------------------------------------------

def cmd_sweep_beta(args):
    if args.points < 2:
        raise ProblemError("--points must be >= 2")
    rows = [{"kind": "curve", "beta": perturbation.BETA_MAX * k / args.points,
             "g": perturbation.g_of_beta(perturbation.BETA_MAX * k / args.points)}
            for k in range(args.points)]
    bc = perturbation.beta_critical()
    rows.append({"kind": "beta_c", "beta": bc, "g": perturbation.g_of_beta(bc)})
    emit(args, SWEEP_COLUMNS, rows)


# -- perturb-check -----------------------------------------------------------

def instance_for_beta(beta: float, t_min: int = 2):
    """Smallest (t, K) with t >= t_min and t/K == beta exactly (beta rational, denominator <= 1000)."""
    frac = Fraction(beta).limit_denominator(1000)
    if frac <= 0 or frac >= 1:
        raise ProblemError(f"beta must lie in (0, 1), got {beta}")
    m = -(-t_min // frac.numerator)
    return frac.numerator * m, frac.denominator * m


def _perturb_row(job):
    theorem, beta, eps, tau_bar, t_min, shape, assert_ineq = job
    shaper = perturbation.one_heavy_block if shape == "heavy" else perturbation.symmetric_pair
    if theorem == 1:
        t = max(t_min, 2)
        p = perturbation.perturbed_problem(10**8, tau_bar, shaper(t, eps))
        return perturbation.theorem1_check(p)
    t, K = instance_for_beta(beta, t_min)
    p = perturbation.perturbed_problem(K, tau_bar, shaper(t, eps))
    return perturbation.theorem2_check(p, assert_inequality=assert_ineq)


def _pool_map(func, jobs, n):
    if n <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(func, jobs))


def cmd_perturb_check(args):
    betas = parse_floats(args.betas, "--betas")
    eps_list = parse_floats(args.eps, "--eps")
    assert_ineq = not args.no_assert
    if args.theorem == 2 and assert_ineq:
        bc = perturbation.beta_critical()
        bad = [b for b in betas if b >= bc]
        if bad:
            raise RegimeError(f"inequality requested for beta >= beta_c={bc:.4f}: {bad}")
    if args.theorem == 1:
        betas = [0.0]
    jobs = [(args.theorem, b, e, args.tau_bar, args.t, args.shape, assert_ineq)
            for b in betas for e in eps_list]
    reports = _pool_map(_perturb_row, jobs, args.jobs)
    text = perturbation.reports_to_csv(reports)
    if args.format == "json":
        text = json.dumps({"columns": list(perturbation.CSV_COLUMNS),
                           "rows": [{k: _jsonable(v) for k, v in r.to_dict().items()} for r in reports]},
                          indent=2) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    failures = []
    for job, r in zip(jobs, reports):
        if r.inequality == "fails":
            failures.append(f"inequality fails at beta={r.beta:g}, eps={r.eps_scale:g}")
        if abs(r.ratio - 1.0) > args.tol_ratio * job[2]:
            failures.append(f"ratio {r.ratio:.6f} off by more than {args.tol_ratio:g}*eps "
                            f"at beta={r.beta:g}, eps={r.eps_scale:g}")
    if failures:
        raise AssertionFailure("; ".join(failures))


# -- oracle-compare ----------------------------------------------------------

def random_instances(seed: int, count: int, max_N: int = 2**16, K_range=(8, 64)):
    """Random algorithm-mode instances with N <= max_N (b >= 4)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        K = int(rng.integers(K_range[0], K_range[1] + 1))
        b_max = max_N // K
        if b_max < 4:
            continue
        b = int(rng.integers(4, b_max + 1))
        t = int(rng.integers(1, (K - 1) // 4 + 1))
        taus = [int(x) for x in rng.integers(1, b, size=t)]
        out.append(make_problem(K, b, taus))
    return out


def compare_engines(problem, max_j: int = 8, mask=None) -> tuple[float, int]:
    """Max per-coordinate gap between projected full and reduced states over j1, j2 <= max_j."""
    worst, n = 0.0, 0
    for j1 in range(max_j + 1):
        for j2 in range(max_j + 1):
            full = full_sim.run_partial_search(problem, j1, j2, mask=mask)
            proj = full_sim.project_to_reduced(problem, full, mask)
            red = reduced_sim.run(problem, j1, j2, mode="operator")
            worst = max(worst, float(np.max(np.abs(proj - red))))
            n += 1
    return worst, n


def _oracle_row(job):
    (K, b, taus), max_j = job
    p = make_problem(K, b, list(taus))
    worst, n = compare_engines(p, max_j)
    return {"K": K, "b": b, "taus": list(taus), "schedules": n, "max_discrepancy": worst}


def cmd_oracle_compare(args):
    if args.K is not None or args.problem:
        probs = [load_problem(args)]
    else:
        probs = random_instances(args.seed, args.count, args.max_N)
    for p in probs:
        if p.N > args.cap:
            raise ResourceError(f"N={p.N} exceeds cap {args.cap}")
    jobs = [((p.K, p.b, tuple(p.taus)), args.max_j) for p in probs]
    rows = _pool_map(_oracle_row, jobs, args.jobs)
    emit(args, ORACLE_COLUMNS, rows)
    worst = max(r["max_discrepancy"] for r in rows)
    if worst > args.tol_equiv:
        raise AssertionFailure(f"max discrepancy {worst:.3e} exceeds {args.tol_equiv:g}")


# -- validate ----------------------------------------------------------------

def cmd_validate(args):
    p = load_problem(args)
    row = {"K": p.K, "b": p.b, "N": p.N, "t": p.t, "z": p.z, "tau_bar": p.tau_bar,
           "epsilons": list(p.distribution.epsilons), "variance": p.variance, "beta": p.beta,
           "power_of_two": None if p.N is None else is_power_of_two(p.N)}
    if p.b is not None and p.distribution.integral:
        ang = angles(p)
        row["theta"], row["thetas"] = ang.theta, list(ang.thetas)
    emit(args, VALIDATE_COLUMNS, [row])


# -- parser ------------------------------------------------------------------

def _add_output(sp):
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--output", "-o", default=None, help="output path (default stdout)")


def _add_problem(sp, regime=False):
    sp.add_argument("--K", type=int)
    sp.add_argument("--b", type=int)
    sp.add_argument("--taus", help="comma-separated targets per marked block, e.g. 1,3")
    sp.add_argument("--problem", help='JSON file {"K":..,"b":..,"taus":[..]}')
    if regime:
        sp.add_argument("--regime", choices=("algorithm", "analysis"), default="algorithm")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="partial-search", description=__doc__.splitlines()[0],
                                 epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run both search phases plus the final reflection and report the final state",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_problem(sp)
    sp.add_argument("--j1", type=float)
    sp.add_argument("--j2", type=float)
    sp.add_argument("--optimal", action="store_true", help="use the optimal schedule")
    sp.add_argument("--mode", choices=("integer", "real"))
    sp.add_argument("--engine", choices=("full", "reduced", "both"), default="reduced")
    sp.add_argument("--cap", type=int, default=full_sim.DEFAULT_CAP)
    sp.add_argument("--tol-equiv", type=float, default=1e-10)
    _add_output(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("optimize", help="solve the large-b optimum",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_problem(sp, regime=True)
    sp.add_argument("--oracle", choices=("none", "grid"), default="none")
    sp.add_argument("--grid-points", type=int, default=4000)
    sp.add_argument("--tol-grid", type=float, default=1e-6)
    sp.add_argument("--tol-closed-form", type=float, default=1e-10)
    _add_output(sp)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("sweep-beta", help="tabulate g(beta) on [0, 0.75) plus beta_c",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--points", type=int, default=150)
    _add_output(sp)
    sp.set_defaults(func=cmd_sweep_beta)

    sp = sub.add_parser("perturb-check", help="check the penalty theorems against the optimizer",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--theorem", type=int, choices=(1, 2), default=2)
    sp.add_argument("--betas", default="0.05,0.1,0.2")
    sp.add_argument("--eps", default="0.1,0.05,0.025")
    sp.add_argument("--tau-bar", type=float, default=4.0)
    sp.add_argument("--t", type=int, default=2, help="minimum number of marked blocks")
    sp.add_argument("--shape", choices=("symmetric", "heavy"), default="symmetric")
    sp.add_argument("--no-assert", action="store_true", help="report without asserting the inequality")
    sp.add_argument("--tol-ratio", type=float, default=1.0,
                    help="require |measured/predicted - 1| <= TOL * eps")
    sp.add_argument("--jobs", type=int, default=1)
    _add_output(sp)
    sp.set_defaults(func=cmd_perturb_check)

    sp = sub.add_parser("oracle-compare", help="batch full-vs-reduced comparison",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_problem(sp)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-N", type=int, default=2**16)
    sp.add_argument("--max-j", type=int, default=8)
    sp.add_argument("--cap", type=int, default=full_sim.DEFAULT_CAP)
    sp.add_argument("--tol-equiv", type=float, default=1e-10)
    sp.add_argument("--jobs", type=int, default=1)
    _add_output(sp)
    sp.set_defaults(func=cmd_oracle_compare)

    sp = sub.add_parser("validate", help="validate a problem and print derived quantities",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_problem(sp, regime=True)
    _add_output(sp)
    sp.set_defaults(func=cmd_validate)
    return ap


def _error(kind, exc, code):
    print(json.dumps({"error": kind, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except AssertionFailure as exc:
        return _error("assertion", exc, EXIT_ASSERT)
    except ResourceError as exc:
        return _error("resource", exc, EXIT_RESOURCE)
    except NoRootError as exc:
        print(json.dumps({"error": "no-root", "message": str(exc),
                          "brackets": [list(b) for b in exc.brackets], "exit_code": EXIT_INPUT}),
              file=sys.stderr)
        return EXIT_INPUT
    except (PartialSearchError, OSError) as exc:
        return _error("input", exc, EXIT_INPUT)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
