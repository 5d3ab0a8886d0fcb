"""Command-line interface: ``qgaf <group> <verb> [options]``.

Exit codes: 0 when the verdict passes (or no verdict applies), 1 when a
residual exceeds its tolerance (the report is still written), 2 on usage or
validation errors.  Numbers are written with 17 significant digits; files are
written atomically.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import abel, explorer, solutions as so, verify
from . import funcalg as fa
from .errors import MonotonicityError, QgafError
from .specs import csv_text, dumps, function_from_spec, grid_from_spec, load_json_arg, trace_csv, write_atomic

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _function_arg(value: str) -> fa.RealFunction:
    return function_from_spec(load_json_arg(value))


def _has_interpolant(spec) -> bool:
    if isinstance(spec, dict):
        return spec.get("kind") == "interpolant" or any(_has_interpolant(v) for v in spec.values())
    if isinstance(spec, list):
        return any(_has_interpolant(v) for v in spec)
    return False


def _solve_tol(args, spec_value: str) -> float:
    if args.tol is not None:
        return args.tol
    spec = load_json_arg(spec_value)
    return so.INTERPOLANT_TOL if _has_interpolant(spec) else so.CLOSED_FORM_TOL


def _grid(args, kind: str) -> fa.Grid:
    """The grid for a verb: ``--grid`` spec, explicit bounds, or the verb's default."""
    custom = any(getattr(args, k) is not None for k in ("grid_min", "grid_max", "grid_points", "grid_spacing"))
    if args.grid not in (None, "default"):
        if custom:
            raise UsageError("give either --grid or --grid-min/--grid-max/--grid-points/--grid-spacing")
        grid = grid_from_spec(load_json_arg(args.grid))
    elif custom:
        lo = args.grid_min if args.grid_min is not None else fa.WORKING_MIN
        hi = args.grid_max if args.grid_max is not None else fa.WORKING_MAX
        n = args.grid_points if args.grid_points is not None else fa.WORKING_POINTS
        spacing = args.grid_spacing or "log"
        try:
            grid = fa.log_grid(lo, hi, n) if spacing == "log" else fa.linear_grid(lo, hi, n)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        return {"symmetric": fa.default_symmetric_grid, "positive": fa.default_positive_grid,
                "negative": fa.default_negative_grid, "explorer": explorer.default_grid}[kind]()
    if kind == "symmetric" and grid.min > 0:
        grid = fa.symmetric_grid(grid)
    elif kind in ("positive", "explorer") and grid.min <= 0:
        grid = grid.positive_part()
    return grid


def _verdict(report: dict, sup: float, tol: float) -> bool:
    report["tol"] = tol
    report["passes"] = bool(sup <= tol)
    return report["passes"]


def _write(path, text: str):
    write_atomic(path, text)


def _trace(args, report: fa.ResidualReport):
    if args.trace:
        _write(args.trace, trace_csv(report))


# ---------------------------------------------------------------------------
# handlers: each returns (report dict, artifact text or None, passed or None)
# ---------------------------------------------------------------------------


def _candidate_summary(cand: so.CandidateSolution, grid: fa.Grid, tol: float):
    eq1 = so.eq1_residual(cand, grid)
    report = {"provenance": cand.provenance, "cone": cand.cone.to_dict(),
              "generator_strict": cand.generator.strict, "eq1": eq1.to_dict(), "notes": list(cand.notes)}
    passed = _verdict(report, eq1.sup, tol)
    return report, eq1, passed


def cmd_construct_corollary1(args):
    phi = _function_arg(args.phi)
    tol = _solve_tol(args, args.phi)
    cand = so.corollary1_extend(phi)
    report, eq1, passed = _candidate_summary(cand, _grid(args, "symmetric"), tol)
    _trace(args, eq1)
    return report, dumps(cand.f.to_spec()), passed


def cmd_construct_homogeneous(args):
    cand = so.homogeneous_solution(args.a, args.b)
    tol = args.tol if args.tol is not None else so.CLOSED_FORM_TOL
    report, eq1, passed = _candidate_summary(cand, _grid(args, "symmetric"), tol)
    _trace(args, eq1)
    return report, dumps(cand.f.to_spec()), passed


def cmd_construct_theorem2(args):
    psi = _function_arg(args.psi)
    P2 = abel.PeriodicFunction.from_json(load_json_arg(args.p2))
    grid = _grid(args, "positive")
    tol = args.tol if args.tol is not None else so.CLOSED_FORM_TOL
    result = abel.theorem2_construct(psi, P2, grid, x0=args.x0, seed=args.seed_profile)
    # the positive branch is exported as a tabulation over the grid, power-law beyond it
    pos = fa.tabulate(result.candidate.pos, grid.points, extension="asymptotic-linear-in-log")
    f = fa.Piecewise(result.candidate.generator.branch, pos, 0.0)
    report = {"provenance": "theorem2", "x0": result.conjugacy.x0, "omega": result.conjugacy.omega,
              "cone": result.candidate.cone.to_dict(),
              "first_commutator": result.first.to_dict(), "second_commutator": result.second.to_dict(),
              "exported_branch": "tabulated on the grid nodes, power-law extension beyond"}
    passed = _verdict(report, max(result.first.sup, result.second.sup), tol)
    _trace(args, result.second)
    return report, dumps(f.to_spec()), passed


def cmd_verify_eq1(args):
    f = _function_arg(args.f)
    tol = _solve_tol(args, args.f)
    rep = so.eq1_residual(f, _grid(args, "symmetric"))
    _trace(args, rep)
    report = rep.to_dict()
    return report, None, _verdict(report, rep.sup, tol)


def cmd_verify_lemma(args):
    f = _function_arg(args.f)
    tol = _solve_tol(args, args.f)
    r1, r2 = so.lemma_residuals(f, _grid(args, "positive"))
    if args.trace:
        _write(args.trace, csv_text(["x", "residual_first", "residual_second"],
                                    zip(r1.xs.tolist(), r1.values.tolist(), r2.values.tolist())))
    report = {"first": r1.to_dict(), "second": r2.to_dict()}
    return report, None, _verdict(report, max(r1.sup, r2.sup), tol)


def cmd_verify_eq12(args):
    cA = abel.AbelConjugacy.from_json(load_json_arg(args.alpha))
    cB = abel.AbelConjugacy.from_json(load_json_arg(args.beta))
    P = abel.PeriodicFunction.from_json(load_json_arg(args.p))
    Q = abel.PeriodicFunction.from_json(load_json_arg(args.q))
    tol = args.tol if args.tol is not None else so.CLOSED_FORM_TOL
    rep = abel.eq12_residual(cA, P, cB, Q, _grid(args, "positive"))
    _trace(args, rep)
    report = rep.to_dict()
    return report, None, _verdict(report, rep.sup, tol)


def cmd_verify_sablik(args):
    F = _function_arg(args.F)
    r1 = _function_arg(args.r1)
    pair = verify.DecompositionPair(r1, _function_arg(args.r2)) if args.r2 else \
        verify.DecompositionPair.complement(r1)
    tol = args.tol if args.tol is not None else so.CLOSED_FORM_TOL
    rep = verify.sablik_residual(F, pair, _grid(args, "positive"))
    _trace(args, rep)
    report = {"residual": rep.to_dict(), "limit_evidence": verify.limit_evidence(F).to_dict()}
    return report, None, _verdict(report, rep.sup, tol)


def cmd_verify_eq13(args):
    g = _function_arg(args.g)
    tol = args.tol if args.tol is not None else verify.DEFAULT_TOL
    rep = verify.eq13_residual(g, _grid(args, "positive"))
    _trace(args, rep)
    report = rep.to_dict()
    return report, None, _verdict(report, rep.sup, tol)


def cmd_verify_prop5(args):
    g = _function_arg(args.g)
    tol = args.tol if args.tol is not None else verify.DEFAULT_TOL
    rep = verify.proposition5_check(g, _grid(args, "positive"), tol, witness=args.witness)
    _trace(args, rep.eq13)
    report = rep.to_dict()
    return report, None, rep.common_abel_plausible


def _dual(args, op):
    f = _function_arg(args.f)
    cand = op(so.as_candidate(f))
    tol = _solve_tol(args, args.f)
    report, eq1, passed = _candidate_summary(cand, _grid(args, "symmetric"), tol)
    _trace(args, eq1)
    return report, dumps(cand.f.to_spec()), passed


def cmd_dual_displacement(args):
    return _dual(args, so.displacement_dual)


def cmd_dual_rotate(args):
    return _dual(args, so.rotate_dual)


def cmd_abel_solve(args):
    g = _function_arg(args.g)
    grid = _grid(args, "positive")
    x0 = args.x0 if args.x0 is not None else abel.balanced_base_point(g, grid.min, grid.max)
    c = abel.solve_abel(g, args.omega, x0, args.seed_profile, args.max_steps)
    tol = args.tol if args.tol is not None else so.CLOSED_FORM_TOL
    rep = c.abel_residual(grid)
    _trace(args, rep)
    report = {"x0": c.x0, "omega": c.omega, "seed_profile": c.seed_profile,
              "closed_form": c.closed_form, "abel_residual": rep.to_dict()}
    return report, dumps(c.to_json()), _verdict(report, rep.sup, tol)


def cmd_abel_reconstruct(args):
    c = abel.AbelConjugacy.from_json(load_json_arg(args.conj))
    tol = args.tol if args.tol is not None else so.CLOSED_FORM_TOL
    rg = abel.reconstruct_g(c)
    rep = fa.pointwise_residual(lambda x: rg(x) - c.g(x), _grid(args, "positive"), "reconstruct")
    _trace(args, rep)
    report = rep.to_dict()
    return report, None, _verdict(report, rep.sup, tol)


def cmd_branch_build(args):
    c = abel.AbelConjugacy.from_json(load_json_arg(args.conj))
    P = abel.PeriodicFunction.from_json(load_json_arg(args.p))
    grid = _grid(args, "positive")
    tol = args.tol if args.tol is not None else verify.DEFAULT_TOL
    h = abel.build_branch(c, P)
    rep = fa.commutator_residual(c.g, h, grid)
    _trace(args, rep)
    report = {"commutator": rep.to_dict(), "P_certified_positive": P.certified_positive()}
    try:
        tab = fa.tabulate(h, grid.points, extension="asymptotic-linear-in-log")
    except (MonotonicityError, ValueError) as exc:
        # u + P(u) is not increasing: h commutes with g but is no homeomorphism
        report["exported_branch"] = f"not exported: {exc}"
        passed = _verdict(report, rep.sup, tol)
        if args.out:
            sys.stdout.write(dumps(report))
            raise UsageError(f"branch cannot be exported as a monotone interpolant: {exc}") from exc
        return report, None, passed
    report["exported_branch"] = "tabulated on the grid nodes, power-law extension beyond"
    return report, dumps(tab.to_spec()), _verdict(report, rep.sup, tol)


def cmd_branch_extract(args):
    c = abel.AbelConjugacy.from_json(load_json_arg(args.conj))
    h = _function_arg(args.h)
    tol = args.tol if args.tol is not None else verify.DEFAULT_TOL
    P, rep = abel.extract_periodic(h, c, args.samples)
    _trace(args, rep)
    report = {"periodicity": rep.to_dict()}
    if args.fixed_points:
        report["fixed_zero"] = abel.fixed_zero_correspondence(h, c, _grid(args, "positive")).to_dict()
    return report, dumps(P.to_json()), _verdict(report, rep.sup, tol)


def cmd_analyze_theorem1(args):
    psi = _function_arg(args.psi)
    grid = _grid(args, "positive")
    tol = args.tol if args.tol is not None else verify.DEFAULT_TOL
    a, hom = verify.infer_homogeneity(psi, grid, args.x_small)
    report = {"slope_estimate": a, "homogeneity": hom.to_dict(), "linear_generator": hom.sup <= tol}
    main = hom
    if args.f:
        dec = verify.theorem1_decomposition(psi, _function_arg(args.f), grid)
        report["decomposition"] = dec.to_dict()
        main = dec
    _trace(args, main)
    return report, None, _verdict(report, main.sup, tol)


def _search_config(args) -> explorer.SearchConfig:
    grid = _grid(args, "explorer")
    kw = dict(objective=args.objective, grid=grid, coeffs=args.coeffs, amplitude=args.amplitude,
              restarts=args.restarts, seed=args.seed if args.seed is not None else 42,
              delta=args.delta, penalty=args.penalty, max_iter=args.max_iter)
    if args.tol is not None:
        kw["threshold"] = args.tol
    try:
        return explorer.SearchConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_explore_search(args):
    config = _search_config(args)
    outcome = explorer.search(config)
    if args.trace:
        _write(args.trace, outcome.trace_csv())
    return outcome.to_dict(), None, None


def cmd_explore_scan(args):
    config = _search_config(args)
    try:
        amps = [float(v) for v in args.amplitudes.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--amplitudes must be comma-separated numbers: {exc}") from exc
    rows = explorer.perturbation_scan(args.a, amps, config)
    return None, explorer.scan_csv(rows), None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, out_help: str = "write the report here instead of stdout"):
    g = p.add_argument_group("grid and output")
    g.add_argument("--grid", help='"default" or a grid spec (inline JSON or file)')
    g.add_argument("--grid-min", type=float)
    g.add_argument("--grid-max", type=float)
    g.add_argument("--grid-points", type=int)
    g.add_argument("--grid-spacing", choices=("log", "linear"))
    g.add_argument("--tol", type=float, help="verdict tolerance on the sup residual")
    g.add_argument("--seed", type=int, help="random seed (explorer)")
    g.add_argument("--out", help=out_help)
    g.add_argument("--trace", help="write the pointwise residual trace (CSV) here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgaf", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True, metavar="group")
    artifact = "write the constructed object here (JSON); the report goes to stdout"

    def leaf(group_parsers, name, handler, help_, out_help=None):
        p = group_parsers.add_parser(name, help=help_, description=help_)
        p.set_defaults(handler=handler, artifact=out_help is not None)
        _common(p, out_help or "write the report here instead of stdout")
        return p

    construct = groups.add_parser("construct", help="build solutions").add_subparsers(
        dest="verb", required=True, metavar="verb")
    p = leaf(construct, "corollary1", cmd_construct_corollary1,
             "extend a negative branch by x - (-phi(-x)) on the positive side", artifact)
    p.add_argument("--phi", required=True, help="negative-branch function spec")
    p = leaf(construct, "homogeneous", cmd_construct_homogeneous, "the two-slope solution", artifact)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p = leaf(construct, "theorem2", cmd_construct_theorem2,
             "positive branch from an Abel function and a positive periodic P2", artifact)
    p.add_argument("--psi", required=True, help="negative-branch function spec")
    p.add_argument("--p2", required=True, help="periodic spec for P2")
    p.add_argument("--x0", type=float, help="Abel base point (default: orbit-balanced)")
    p.add_argument("--seed-profile", choices=("log", "linear"), default="log")

    ver = groups.add_parser("verify", help="residual checks").add_subparsers(
        dest="verb", required=True, metavar="verb")
    p = leaf(ver, "eq1", cmd_verify_eq1, "residual of f(f(-x)+x) = f(-f(x)) + f(x)")
    p.add_argument("--f", required=True)
    p = leaf(ver, "lemma", cmd_verify_lemma, "the two commutator residuals on the positive side")
    p.add_argument("--f", required=True)
    p = leaf(ver, "eq12", cmd_verify_eq12, "residual of the sum of two Abel branches against id")
    for name in ("--alpha", "--beta"):
        p.add_argument(name, required=True, help="conjugacy JSON")
    for name in ("--p", "--q"):
        p.add_argument(name, required=True, help="periodic JSON")
    p = leaf(ver, "sablik", cmd_verify_sablik, "residual of F = F(r1) + F(r2)")
    p.add_argument("--F", required=True)
    p.add_argument("--r1", required=True)
    p.add_argument("--r2", help="defaults to id - r1")
    p = leaf(ver, "eq13", cmd_verify_eq13, "residual of g = g(id - g) + g(g)")
    p.add_argument("--g", required=True)
    p = leaf(ver, "prop5", cmd_verify_prop5, "commutation of g and id - g against the single-map equation")
    p.add_argument("--g", required=True)
    p.add_argument("--witness", action="store_true", help="also build an Abel function of g as witness")

    dual = groups.add_parser("dual", help="solution-preserving transforms").add_subparsers(
        dest="verb", required=True, metavar="verb")
    p = leaf(dual, "displacement", cmd_dual_displacement, "id - f", artifact)
    p.add_argument("--f", required=True)
    p = leaf(dual, "rotate", cmd_dual_rotate, "x -> -f(-x)", artifact)
    p.add_argument("--f", required=True)

    ab = groups.add_parser("abel", help="Abel conjugacies").add_subparsers(
        dest="verb", required=True, metavar="verb")
    p = leaf(ab, "solve", cmd_abel_solve, "build an Abel function of g", artifact)
    p.add_argument("--g", required=True)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--x0", type=float, help="base point (default: orbit-balanced over the grid)")
    p.add_argument("--seed-profile", choices=("linear", "log"), default="linear")
    p.add_argument("--max-steps", type=int, default=abel.DEFAULT_MAX_STEPS)
    p = leaf(ab, "reconstruct", cmd_abel_reconstruct, "compare alpha^-1(alpha + omega) with g")
    p.add_argument("--conj", required=True)

    br = groups.add_parser("branch", help="maps commuting with g").add_subparsers(
        dest="verb", required=True, metavar="verb")
    p = leaf(br, "build", cmd_branch_build, "alpha^-1(P(alpha) + alpha)", artifact)
    p.add_argument("--conj", required=True)
    p.add_argument("--p", required=True)
    p = leaf(br, "extract", cmd_branch_extract, "recover the periodic displacement of h", artifact)
    p.add_argument("--conj", required=True)
    p.add_argument("--h", required=True)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--fixed-points", action="store_true", help="also pair fixed points with zeros of P")

    an = groups.add_parser("analyze", help="structure of solutions").add_subparsers(
        dest="verb", required=True, metavar="verb")
    p = leaf(an, "theorem1", cmd_analyze_theorem1,
             "homogeneity of a generator and additivity of its reflection along a solution")
    p.add_argument("--psi", required=True)
    p.add_argument("--f", help="solution to decompose along")
    p.add_argument("--x-small", type=float, default=verify.X_SMALL)

    ex = groups.add_parser("explore", help="search for non-homogeneous solutions").add_subparsers(
        dest="verb", required=True, metavar="verb")
    for name, handler, help_ in (("eq13", cmd_explore_search, "penalised search on g = g(id-g) + g(g)"),
                                 ("eq12", cmd_explore_search, "penalised search on the two-branch sum"),
                                 ("scan", cmd_explore_scan, "residual versus perturbation amplitude (CSV)")):
        p = leaf(ex, name, handler, help_)
        p.set_defaults(objective="eq12" if name == "eq12" else "eq13")
        p.add_argument("--coeffs", type=int, default=4)
        p.add_argument("--amplitude", type=float, default=0.15)
        p.add_argument("--restarts", type=int, default=20)
        p.add_argument("--delta", type=float, default=0.05)
        p.add_argument("--penalty", type=float, default=1e3)
        p.add_argument("--max-iter", type=int, default=2000)
        if name == "scan":
            p.add_argument("--a", type=float, required=True)
            p.add_argument("--amplitudes", required=True, help="comma-separated amplitudes")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        report, artifact, passed = args.handler(args)
        if args.artifact:
            if args.out:
                _write(args.out, artifact)
            elif report is not None and artifact is not None:
                report["object"] = json.loads(artifact)
            if report is not None:
                sys.stdout.write(dumps(report))
        else:
            text = dumps(report) if report is not None else artifact
            if args.out:
                _write(args.out, text)
            else:
                sys.stdout.write(text)
    except (UsageError, QgafError, ValueError, OSError) as exc:
        print(f"qgaf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if passed is None or passed:
        return EXIT_OK
    return EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
