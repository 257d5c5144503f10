"""Command-line entry point.

Subcommands: ``solve``, ``spectrum``, ``continue``, ``expand`` and ``verify``.
Exit status is 0 on success, 1 when a diagnostic fails (non-convergence,
inadmissible parameters, a branch stopping short of its target, a failed
identity check) and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path


from . import config
from .asymptotics import closure_json, decay_report, expansion_fit
from .babenko import (
    AdmissibilityError,
    PhysicalParams,
    SolverError,
    SolverOptions,
    criticality_test,
    fixed_point_solve,
    rescale_to_physical,
    solve_metadata,
    truncation_floor,
    write_metadata,
    write_profile,
)
from .continuation import BranchControls, trace_branch
from .spectral import make_grid
from .spectrum import (
    assemble_operator_matrix,
    eig_sym,
    translation_mode_rho,
)
from .verify import format_table, run_identity_suite

LOGGER = logging.getLogger("babenko_solitary")

EXIT_OK = 0
EXIT_DIAGNOSTIC = 1
EXIT_USAGE = 2


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


# -- argument parsing ----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, grid: bool = True, solver: bool = True) -> None:
    if grid:
        p.add_argument("--L", type=float, default=config.DEFAULT_PERIOD_L, help="period of the computational box")
        p.add_argument("--n", type=int, default=config.DEFAULT_SIZE_N, help="number of nodes (power of two)")
    if solver:
        d = SolverOptions()
        p.add_argument("--eta", type=float, default=d.eta, help="weight of alpha u in the X-norm")
        p.add_argument("--ball-k", type=float, default=d.ball_factor_k, help="ball radius factor k (radius k*eps)")
        p.add_argument("--fp-tol", type=float, default=d.fp_tolerance, help="X-norm tolerance on the iterate gap")
        p.add_argument("--max-iter", type=int, default=d.max_iterations)
        p.add_argument("--linear-tol", type=float, default=d.linear_solve_tolerance)
        p.add_argument("--torus-correction", action="store_true", default=None,
                       help="remove the periodic-box defect of rho from the iteration")
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="seed for randomized diagnostics")
    p.add_argument("--manifest", type=Path, default=None, help="path of the run manifest")
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="babenko-solitary", description="Solitary waves with constant vorticity.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve for one solitary wave")
    p.add_argument("--epsilon", type=float, help="shorthand for g=1, gamma=-1, c=1+epsilon")
    p.add_argument("--g", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--out", type=Path, default=Path("profile.csv"))
    _common(p)

    p = sub.add_parser("spectrum", help="spectrum of the linearized operator")
    p.add_argument("--epsilon", type=float, default=0.0, help="0 selects the Benjamin-Ono operator")
    p.add_argument("--modes", type=int, default=config.DEFAULT_SPECTRUM_MODES)
    p.add_argument("--basis", choices=["even", "full"], default="even")
    p.add_argument("--out", type=Path, default=Path("spectrum.json"))
    _common(p)

    p = sub.add_parser("continue", help="trace the branch in the wave speed")
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=-1.0)
    p.add_argument("--from-epsilon", type=float, required=True)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--to-epsilon", type=float)
    target.add_argument("--to-c", type=float)
    p.add_argument("--modes", type=int, default=BranchControls().spectrum_modes)
    p.add_argument("--out", type=Path, default=Path("branch.json"))
    _common(p)

    p = sub.add_parser("expand", help="fit the far-field expansion of a solved profile")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--fit-min", type=float, default=config.DEFAULT_FIT_REGION[0])
    p.add_argument("--fit-max", type=float, default=config.DEFAULT_FIT_REGION[1])
    p.add_argument("--out", type=Path, default=Path("expansion.json"))
    _common(p)

    p = sub.add_parser("verify", help="run the identity suite")
    _common(p, solver=False)
    return parser


def solver_options(args, torus_default: bool = False) -> SolverOptions:
    torus = torus_default if args.torus_correction is None else args.torus_correction
    return SolverOptions(
        ball_factor_k=args.ball_k,
        eta=args.eta,
        fp_tolerance=args.fp_tol,
        max_iterations=args.max_iter,
        linear_solve_tolerance=args.linear_tol,
        torus_correction=torus,
    )


def speed_for_epsilon(g: float, gamma: float, epsilon: float) -> float:
    """Speed on the admissible side with ``|g + c gamma| = eps g``."""
    return -g * (1 + epsilon) / gamma


def resolve_params(args, parser) -> PhysicalParams:
    explicit = [args.g, args.gamma, args.c]
    if args.epsilon is not None:
        if any(x is not None for x in explicit):
            parser.error("--epsilon cannot be combined with --g/--gamma/--c")
        if args.epsilon < 0:
            parser.error("--epsilon must be nonnegative")
        return PhysicalParams.normalized(args.epsilon)
    if any(x is None for x in explicit):
        parser.error("give either --epsilon or all of --g, --gamma, --c")
    try:
        return PhysicalParams(args.g, args.gamma, args.c)
    except ValueError as exc:
        parser.error(str(exc))


def _manifest_path(args, default: Path) -> Path:
    return args.manifest if args.manifest is not None else default


def _config_echo(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func",):
            continue
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _manifest(args, grid, opts: SolverOptions | None, extra: dict) -> dict:
    payload = {
        "command": args.command,
        "config": _config_echo(args),
        "tolerances": config.tolerances(),
        "truncation_floor": truncation_floor(grid),
    }
    if opts is not None:
        payload["solver_options"] = asdict(opts)
    payload.update(extra)
    return payload


# -- commands ----------------------------------------------------------------------


def cmd_solve(args, parser) -> int:
    params = resolve_params(args, parser)
    grid = make_grid(args.L, args.n)
    opts = solver_options(args)
    manifest_path = _manifest_path(args, args.out.with_suffix(".manifest.json"))
    if not params.sign_ok:
        write_json(manifest_path, _manifest(args, grid, opts, {"status": "sign condition violated"}))
        print(f"sign condition g + c gamma < 0 violated ({params.detuning:.6g})", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    try:
        epsilon = args.epsilon if args.epsilon is not None else params.epsilon
        sol = fixed_point_solve(epsilon, grid, opts)
        profile = rescale_to_physical(sol, params)
    except (SolverError, AdmissibilityError) as exc:
        write_json(manifest_path, _manifest(args, grid, opts, {"status": f"failed: {exc}"}))
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    write_profile(args.out, sol, profile)
    meta = solve_metadata(sol, profile)
    write_metadata(args.out.with_suffix(".json"), meta)
    crit = criticality_test(profile, config.CRITICALITY_DIRECTIONS, config.CRITICALITY_FD_STEP, seed=args.seed)
    write_json(manifest_path, _manifest(args, grid, opts, {
        "status": "ok",
        "params": asdict(params),
        "result": meta,
        "criticality": crit,
        "outputs": [str(args.out), str(args.out.with_suffix(".json"))],
    }))
    print(json.dumps(meta, indent=2))
    return EXIT_OK if meta["sign_ok"] and meta["height_margin"] > 0 else EXIT_DIAGNOSTIC


def cmd_spectrum(args, parser) -> int:
    if args.epsilon < 0:
        parser.error("--epsilon must be nonnegative")
    grid = make_grid(args.L, args.n)
    if not 1 <= args.modes <= args.n // 2:
        parser.error(f"--modes must lie in [1, {args.n // 2}]")
    basis = "even_cosine" if args.basis == "even" else "full"
    opts = solver_options(args)
    margin = None
    if args.epsilon == 0:
        matrix = assemble_operator_matrix("L_rho", basis, args.modes, grid=grid)
        mode = translation_mode_rho(grid) if basis == "full" else None
    else:
        params = PhysicalParams.normalized(args.epsilon)
        try:
            profile = rescale_to_physical(fixed_point_solve(args.epsilon, grid, opts), params)
        except SolverError as exc:
            write_json(_manifest_path(args, args.out.with_suffix(".manifest.json")),
                       _manifest(args, grid, opts, {"status": f"failed: {exc}"}))
            print(f"solve failed: {exc}", file=sys.stderr)
            return EXIT_DIAGNOSTIC
        matrix = assemble_operator_matrix("L_U", basis, args.modes, profile=profile)
        mode = profile.grid.deriv(profile.U.values) if basis == "full" else None
        margin = params.max_height - profile.sup_U()
    report = eig_sym(matrix, mode)
    payload = report.to_dict()
    payload["height_margin"] = margin
    write_json(args.out, payload)
    write_json(_manifest_path(args, args.out.with_suffix(".manifest.json")), _manifest(args, grid, opts, {
        "status": "ok",
        "operator": matrix.kind,
        "asymmetry": matrix.asymmetry,
        "translation_correlation": report.translation_correlation,
        "outputs": [str(args.out)],
    }))
    print(f"lambda_min_nontrivial = {report.lambda_min_nontrivial:.10g}, continuous edge {report.continuous_edge:.6g}")
    return EXIT_OK


def cmd_continue(args, parser) -> int:
    try:
        base = PhysicalParams(args.g, args.gamma, speed_for_epsilon(args.g, args.gamma, args.from_epsilon))
    except ValueError as exc:
        parser.error(str(exc))
    if args.from_epsilon <= 0:
        parser.error("--from-epsilon must be positive")
    c_target = args.to_c if args.to_c is not None else speed_for_epsilon(args.g, args.gamma, args.to_epsilon)
    grid = make_grid(args.L, args.n)
    opts = solver_options(args, torus_default=True)
    controls = BranchControls(spectrum_modes=args.modes)
    manifest_path = _manifest_path(args, args.out.with_suffix(".manifest.json"))
    try:
        start = rescale_to_physical(fixed_point_solve(args.from_epsilon, grid, opts), base)
    except SolverError as exc:
        write_json(manifest_path, _manifest(args, grid, opts, {"status": f"failed: {exc}"}))
        print(f"starting solve failed: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    branch = trace_branch(start, c_target, controls, opts)
    branch.write_json(args.out)
    csv_path = args.out.with_suffix(".csv")
    branch.write_csv(csv_path)
    write_json(manifest_path, _manifest(args, grid, opts, {
        "status": branch.stop_reason,
        "c_start": base.c,
        "c_target": c_target,
        "branch_controls": asdict(controls),
        "outputs": [str(args.out), str(csv_path)],
    }))
    where = f" (c = {branch.points[-1].c:.10g}, eps = {branch.points[-1].epsilon:.6g})" if branch.points else ""
    print(f"stop_reason = {branch.stop_reason} after {len(branch.points)} points{where} {branch.message}")
    return EXIT_OK if branch.stop_reason == "reached_target" else EXIT_DIAGNOSTIC


def cmd_expand(args, parser) -> int:
    if args.epsilon < 0:
        parser.error("--epsilon must be nonnegative")
    grid = make_grid(args.L, args.n)
    opts = solver_options(args)
    manifest_path = _manifest_path(args, args.out.with_suffix(".manifest.json"))
    try:
        sol = fixed_point_solve(args.epsilon, grid, opts)
        fit = expansion_fit(sol.phi, args.order, (args.fit_min, args.fit_max), epsilon=args.epsilon)
    except SolverError as exc:
        write_json(manifest_path, _manifest(args, grid, opts, {"status": f"failed: {exc}"}))
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    except ValueError as exc:
        parser.error(str(exc))
    payload = fit.to_dict()
    payload["decay"] = decay_report(sol.v, args.fit_min).to_dict()
    payload["closure"] = [closure_json(k) for k in range(1, args.order + 1)]
    write_json(args.out, payload)
    write_json(manifest_path, _manifest(args, grid, opts, {"status": "ok", "outputs": [str(args.out)]}))
    print(json.dumps({"a": payload["a"], "condition_number": payload["condition_number"]}))
    return EXIT_OK


def cmd_verify(args, parser) -> int:
    grid = make_grid(args.L, args.n)
    results = run_identity_suite(args.L, args.n)
    print(format_table(results))
    passed = all(r.passed for r in results)
    write_json(_manifest_path(args, Path("verify.json")), _manifest(args, grid, None, {
        "status": "pass" if passed else "fail",
        "checks": [r.to_dict() for r in results],
    }))
    return EXIT_OK if passed else EXIT_DIAGNOSTIC


COMMANDS = {
    "solve": cmd_solve,
    "spectrum": cmd_spectrum,
    "continue": cmd_continue,
    "expand": cmd_expand,
    "verify": cmd_verify,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    try:
        make_grid(args.L, args.n)
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
