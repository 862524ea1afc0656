"""Command dispatch over instance files with machine-readable reports.

Subcommands: `solve` (nominal, robust market, robust planner, expected-cost
solves), `poa` (price-of-anarchy reports for an instance or a generated tight
family), `subsidy` (welfare-restoring subsidies with equilibrium checks),
`tau` and `validate-set` (uncertainty-set diagnostics).

Exit codes: 0 success, 1 input error (bad flags, schema violations, parameter
validation), 2 infeasible or unbounded program, 3 subsidy verification
failure.  JSON reports are canonical: re-parsing and re-emitting reproduces
the bytes, and identical inputs produce identical reports apart from the
timing field.  The environment variable ROBUST_PEAKLOAD_SEED overrides any
--seed flag or instance-file seed.
"""

import argparse
import dataclasses
import os
import sys
import time

import numpy as np

from robust_peakload.geometry import (DimensionTooLarge, EmptySet,
                                      enumerate_vertices, simplex, tau)
from robust_peakload.instancefile import (SCHEMA_VERSION, SchemaError,
                                          canonical_dumps, instance_digest,
                                          instance_to_data, load_instance,
                                          write_instance)
from robust_peakload.market import (AffineElastic, BadMean, Fixed,
                                    solve_expected, solve_nominal_elastic,
                                    solve_nominal_fixed, total_cost, welfare)
from robust_peakload.poa import (ZeroCost, elastic_family_values,
                                 gen_elastic_family, gen_tight_instance_fixed,
                                 gen_tight_instance_restricted, poa_elastic,
                                 poa_fixed, tight_fixed_values,
                                 tight_restricted_values)
from robust_peakload.risk import poa_with_risk_set
from robust_peakload.robust import (Infeasible, Unbounded,
                                    solve_robust_cp_elastic,
                                    solve_robust_cp_fixed,
                                    solve_robust_market_elastic,
                                    solve_robust_market_fixed,
                                    worst_case_scenario)
from robust_peakload.subsidy import (DEFAULT_AUDIT_SAMPLES, DEFAULT_GRID,
                                     DEFAULT_SEED, NotEquilibrium,
                                     build_price_functions, compute_subsidies,
                                     kkt_residuals,
                                     verify_subsidized_equilibrium)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NOT_EQUILIBRIUM = 3

SEED_ENV = "ROBUST_PEAKLOAD_SEED"
WITNESS_TOL = 1e-9


class CliError(ValueError):
    """Bad flags or flag combinations; maps to the input-error exit code."""


class _Parser(argparse.ArgumentParser):
    """Parser that reports flag errors through exceptions instead of exiting,
    so the exit-code contract stays in one place."""

    def error(self, message):
        raise CliError(message)


# ---------------------------------------------------------------------------
# flag parsing helpers


def _parse_floats(name, text):
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise CliError(f"--{name} must be a comma-separated list of numbers, "
                       f"got {text!r}") from None


def _parse_mean(text, N, T):
    """Scalar, per-producer list, or full N*T list, broadcast to N x T."""
    values = _parse_floats("mean-u", text)
    if len(values) == 1:
        return np.full((N, T), values[0])
    if len(values) == N:
        return np.tile(np.array(values)[:, None], (1, T))
    if len(values) == N * T:
        return np.array(values).reshape(N, T)
    raise CliError(f"--mean-u must list 1, {N}, or {N * T} values, "
                   f"got {len(values)}")


def _resolve_seed(flag_seed, file_seed):
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"{SEED_ENV} must be an integer, got {env!r}") \
                from None
    if flag_seed is not None:
        return flag_seed
    if file_seed is not None:
        return file_seed
    return DEFAULT_SEED


def _first(*values):
    for value in values:
        if value is not None:
            return value
    return None


# ---------------------------------------------------------------------------
# report assembly


def _report(command, flags, digest, results, certificates):
    return {
        "command": command,
        "flags": flags,
        "schema_version": SCHEMA_VERSION,
        "instance_digest": digest,
        "results": results,
        "certificates": certificates,
    }


def _solution_fields(solution):
    return {
        "prices": solution.prices.tolist(),
        "capacities": solution.capacities.tolist(),
        "production": solution.production.tolist(),
        "objective": float(solution.objective),
    }


def _poa_fields(report):
    return {
        "E": report.E,
        "C": report.C,
        "ratio": report.ratio,
        "tau": report.tau,
        "bound": report.bound,
        "rho": report.rho,
        "within_bound": report.within_bound,
        "demand_mode": report.demand_mode,
    }


def _closed_form_gap(report, closed):
    gaps = []
    for key, expected in closed.items():
        actual = getattr(report, key)
        if np.isnan(expected) and np.isnan(actual):
            continue
        if np.isinf(expected) and np.isinf(actual):
            continue
        gaps.append(abs(actual - expected))
    return float(max(gaps)) if gaps else 0.0


def _text_lines(report, prefix=""):
    lines = []
    for key, value in report.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.extend(_text_lines(value, prefix=name + "."))
        else:
            lines.append(f"{name}: {canonical_dumps(value)}")
    return lines


def _emit(report, fmt):
    if fmt == "json":
        print(canonical_dumps(report))
    else:
        for line in _text_lines(report):
            print(line)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_solve(args):
    inst, _, digest, _, _ = load_instance(args.instance)
    fixed = isinstance(inst.demand, Fixed)
    flags = {"instance": args.instance, "mode": args.mode,
             "mean_u": args.mean_u, "format": args.format}
    results = {"mode": args.mode,
               "demand_mode": "fixed" if fixed else "elastic"}
    certificates = {}

    if args.mode == "nominal":
        solution = (solve_nominal_fixed(inst) if fixed
                    else solve_nominal_elastic(inst))
        results.update(_solution_fields(solution))
    elif args.mode == "expected":
        mean = _parse_mean(args.mean_u, inst.N, inst.T)
        solution = solve_expected(inst, mean)
        results.update(_solution_fields(solution))
        results["mean_scenario"] = mean.tolist()
    elif args.mode == "robust":
        if fixed:
            solution, value = solve_robust_market_fixed(inst)
        else:
            solution, value = solve_robust_market_elastic(inst)
        results.update(_solution_fields(solution))
        results["worst_case_value"] = float(value)
        _, worst = worst_case_scenario(inst, solution.production)
        evaluate = total_cost if fixed else welfare
        at_worst = evaluate(inst, solution.production, solution.capacities,
                            worst)
        certificates["worst_scenario"] = worst.tolist()
        certificates["worst_case_gap"] = abs(float(at_worst) - float(value))
    else:
        if fixed:
            solution, value, worst = solve_robust_cp_fixed(inst)
        else:
            solution, value, worst = solve_robust_cp_elastic(inst)
        results.update(_solution_fields(solution))
        results["worst_case_value"] = float(value)
        evaluate = total_cost if fixed else welfare
        at_worst = evaluate(inst, solution.production, solution.capacities,
                            worst)
        certificates["worst_scenario"] = worst.tolist()
        certificates["saddle_gap"] = abs(float(at_worst) - float(value))

    return _report("solve", flags, digest, results, certificates), EXIT_OK


_GENERATORS = ("tight-fixed", "tight-restricted", "elastic-family")


def _generate_instance(args):
    """Build the requested family member and its closed-form values (closed
    forms cover the 2-simplex tight families and the elastic family)."""
    if args.generate == "tight-fixed":
        if args.delta is None:
            raise CliError("--generate tight-fixed requires --delta")
        inst = gen_tight_instance_fixed(simplex(args.producers), args.delta)
        closed = tight_fixed_values(args.delta) if args.producers == 2 else None
    elif args.generate == "tight-restricted":
        if args.delta is None or args.rho is None:
            raise CliError("--generate tight-restricted requires "
                           "--delta and --rho")
        inst = gen_tight_instance_restricted(simplex(args.producers),
                                             args.rho, args.delta)
        closed = (tight_restricted_values(args.rho, args.delta)
                  if args.producers == 2 else None)
    else:
        if args.alpha is None:
            raise CliError("--generate elastic-family requires --alpha")
        inst = gen_elastic_family(args.alpha)
        closed = elastic_family_values(args.alpha)
    return inst, closed


def _cmd_poa(args):
    if (args.instance is None) == (args.generate is None):
        raise CliError("exactly one of --instance and --generate is required")
    flags = {"instance": args.instance, "generate": args.generate,
             "delta": args.delta, "rho": args.rho, "alpha": args.alpha,
             "producers": args.producers,
             "emit_instance": args.emit_instance, "format": args.format}
    certificates = {}

    if args.instance is not None:
        inst, _, digest, _, risk_spec = load_instance(args.instance)
        if risk_spec is not None:
            report = poa_with_risk_set(inst, risk_spec)
        elif isinstance(inst.demand, Fixed):
            report = poa_fixed(inst)
        else:
            report = poa_elastic(inst)
        results = _poa_fields(report)
        results["risk_set_applied"] = risk_spec is not None
    else:
        inst, closed = _generate_instance(args)
        digest = instance_digest(instance_to_data(inst))
        if args.emit_instance is not None:
            write_instance(args.emit_instance, instance_to_data(inst))
        report = (poa_fixed(inst) if isinstance(inst.demand, Fixed)
                  else poa_elastic(inst))
        results = _poa_fields(report)
        results["risk_set_applied"] = False
        if closed is not None:
            certificates["closed_form"] = closed
            certificates["max_closed_form_gap"] = _closed_form_gap(report,
                                                                   closed)

    return _report("poa", flags, digest, results, certificates), EXIT_OK


def _cmd_subsidy(args):
    inst, _, digest, options, _ = load_instance(args.instance)
    grid = _first(args.grid, options["grid"], DEFAULT_GRID)
    samples = _first(args.samples, options["sample_count"],
                     DEFAULT_AUDIT_SAMPLES)
    seed = _resolve_seed(args.seed, options["seed"])
    flags = {"instance": args.instance, "grid": grid, "samples": samples,
             "seed": seed, "eta": args.eta, "format": args.format}

    bundle = compute_subsidies(inst, grid=grid, audit_samples=samples,
                               seed=seed)
    if args.eta is not None:
        override = _parse_floats("eta", args.eta)
        if len(override) != inst.N:
            raise CliError(f"--eta must list {inst.N} values, "
                           f"got {len(override)}")
        bundle = dataclasses.replace(bundle, eta=np.array(override))

    code = EXIT_OK
    try:
        record = verify_subsidized_equilibrium(inst, bundle, grid=grid)
        violation = None
    except NotEquilibrium as exc:
        code = EXIT_NOT_EQUILIBRIUM
        record = {"is_equilibrium": False, "grid": int(grid)}
        violation = {"producer": int(exc.producer),
                     "scenario": int(exc.scenario),
                     "deviation": (None if exc.deviation is None
                                   else float(exc.deviation)),
                     "message": str(exc)}

    table = build_price_functions(bundle)
    price_table = [{"scenario": list(key), "prices": table[key].tolist()}
                   for key in sorted(table)]
    results = {
        "eta": bundle.eta.tolist(),
        "y_star": bundle.y_star.tolist(),
        "price_table": price_table,
        "is_equilibrium": bool(record["is_equilibrium"]),
        "grid": int(record["grid"]),
        "audit": bundle.audit,
    }
    if violation is None:
        results["worst_case_profits"] = record["worst_case_profits"].tolist()
        results["max_deviation_gain"] = record["max_deviation_gain"].tolist()
    else:
        results["violation"] = violation

    residual_max = 0.0
    for res in bundle.scenario_results:
        residuals = kkt_residuals(inst, bundle.y_star, res)
        residual_max = max(residual_max, max(residuals.values()))
    certificates = {"kkt_residual_max": float(residual_max)}
    if violation is None:
        certificates["worst_profit_abs_max"] = float(
            np.max(np.abs(record["worst_case_profits"]))
            if len(record["worst_case_profits"]) else 0.0)

    return _report("subsidy", flags, digest, results, certificates), code


def _cmd_set_report(args, command):
    inst, _, digest, _, _ = load_instance(args.instance)
    U = inst.uncertainty
    value, witness = tau(U)
    rep = inst.uncertainty_report
    flags = {"instance": args.instance, "format": args.format}
    results = {
        "tau": float(value),
        "witness": witness.tolist(),
        "vertex_count": len(enumerate_vertices(U)),
        "contains_zero": rep.contains_zero,
        "inside_unit_box": rep.inside_unit_box,
        "axis_projections": rep.axis_projections.tolist(),
        "is_valid_uncertainty_set": rep.is_valid_uncertainty_set,
    }
    certificates = {
        "witness_in_set": bool(U.contains(witness, tol=WITNESS_TOL)),
        "witness_min_gap": abs(float(np.min(witness)) - float(value)),
    }
    return _report(command, flags, digest, results, certificates), EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _build_parser():
    parser = _Parser(prog="robust-peakload",
                     description="Robust peak-load-pricing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve an instance file")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--mode", default="robust",
                       choices=["nominal", "robust", "robust-cp", "expected"])
    solve.add_argument("--mean-u", default="0",
                       help="mean scenario for --mode expected: scalar, "
                            "per-producer list, or full N*T list")
    solve.add_argument("--format", default="text", choices=["text", "json"])

    poa = sub.add_parser("poa", help="price-of-anarchy report")
    poa.add_argument("--instance")
    poa.add_argument("--generate", choices=list(_GENERATORS))
    poa.add_argument("--delta", type=float)
    poa.add_argument("--rho", type=float)
    poa.add_argument("--alpha", type=float)
    poa.add_argument("--producers", type=int, default=2,
                     help="simplex dimension for the tight generators")
    poa.add_argument("--emit-instance",
                     help="write the generated instance to this path")
    poa.add_argument("--format", default="text", choices=["text", "json"])

    subsidy = sub.add_parser("subsidy",
                             help="welfare-restoring subsidies with "
                                  "equilibrium verification")
    subsidy.add_argument("--instance", required=True)
    subsidy.add_argument("--grid", type=int)
    subsidy.add_argument("--samples", type=int)
    subsidy.add_argument("--seed", type=int)
    subsidy.add_argument("--eta",
                         help="override the computed subsidies "
                              "(comma-separated, one per producer)")
    subsidy.add_argument("--format", default="text", choices=["text", "json"])

    for name in ("tau", "validate-set"):
        diag = sub.add_parser(name, help="uncertainty-set diagnostics")
        diag.add_argument("--instance", required=True)
        diag.add_argument("--format", default="text", choices=["text", "json"])

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    start = time.perf_counter()
    try:
        if args.command == "solve":
            report, code = _cmd_solve(args)
        elif args.command == "poa":
            report, code = _cmd_poa(args)
        elif args.command == "subsidy":
            report, code = _cmd_subsidy(args)
        else:
            report, code = _cmd_set_report(args, args.command)
    except (ValueError, BadMean, ZeroCost, EmptySet, DimensionTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (Infeasible, Unbounded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    report["timing"] = {"seconds": time.perf_counter() - start}
    _emit(report, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
