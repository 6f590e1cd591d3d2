"""Command-line front end.

Exit codes: 0 on success, 1 when a verification ran and came out negative
(invalid rule, not-found search, violated constraints, failed inequality),
2 on usage or parse errors.  Reports are JSON with sorted keys; apart from
the wall-time field of search reports, identical inputs produce byte
identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import (
    Region,
    Torus,
    ValidationError,
    config_from_text,
    config_to_text,
    format_cell,
    parse_cells,
    restrict,
    complement_region,
)
from .rules import RuleParseError, RuleValidationError, parse_rule, rule_hash, validate_rule
from .engine import parse_trajectory_text, trajectory, trajectory_to_text
from .universality import (
    EnumerationCapError,
    Program,
    SearchBudget,
    cellwise_map,
    induced_map,
    search_program,
    search_report,
    universality_survey,
    SINGLE_CELL_TABLES,
)
from .macro import (
    check_constraints,
    constraints_from_text,
    densities,
    no_go_witness,
    partition_from_text,
    witness_report,
)
from . import quantum
from .engine import light_cone


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("MARGOLAB_THREADS", "1")))
    except ValueError:
        return 1


def _emit(doc, out_path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    return Path(path).read_text()


def _parse_torus(text: str) -> Torus:
    return Torus(int(p.strip()) for p in text.replace("x", " ").split())


def _beta_from_names(names: str, target: Region, k: int):
    tables = []
    for name in names.split(","):
        name = name.strip().upper()
        if name == "FLIP":
            tables.append(tuple((i + 1) % k for i in range(k)))
        elif name in SINGLE_CELL_TABLES and k == 2:
            tables.append(SINGLE_CELL_TABLES[name])
        elif name == "ID":
            tables.append(tuple(range(k)))
        else:
            raise ValidationError(f"unknown map name {name!r}")
    if len(tables) != len(target):
        raise ValidationError(
            f"{len(tables)} map names for {len(target)} target cells; names align with "
            "cells in canonical order"
        )
    return cellwise_map(target, k, dict(zip(target.cells, tables)))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simulate(args) -> int:
    rule = parse_rule(_read(args.rule))
    config = config_from_text(_read(args.config))
    traj = trajectory(config, rule, args.steps)
    text = trajectory_to_text(traj)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_validate_rule(args) -> int:
    try:
        rule = parse_rule(_read(args.rule))
    except RuleValidationError as exc:
        print(f"invalid: {exc}")
        return 1
    report = validate_rule(rule)
    print(report.summary())
    return 0


def _cmd_induced_map(args) -> int:
    rule = parse_rule(_read(args.rule))
    config = config_from_text(_read(args.config))
    target = Region(parse_cells(args.target))
    comp = complement_region(config.torus, target)
    program = Program(config.torus, restrict(config, comp), args.time)
    rmap = induced_map(rule, program)
    doc = {
        "report": "induced-map",
        "tool_version": __version__,
        "rule_hash": rule_hash(rule),
        "target": [format_cell(c) for c in target.cells],
        "time": args.time,
        "table": rmap.word_strings(rule.alphabet),
        "torus_only": rmap.torus_only,
    }
    _emit(doc, args.out)
    return 0


def _cmd_search(args) -> int:
    rule = parse_rule(_read(args.rule))
    torus = _parse_torus(args.torus)
    target = Region(parse_cells(args.target))
    beta = _beta_from_names(args.beta, target, rule.alphabet.size)
    budget = SearchBudget(Region(parse_cells(args.halo)), args.tmax, args.max_candidates)
    try:
        outcome = search_program(rule, beta, budget, torus, workers=args.threads)
    except EnumerationCapError:
        _emit(search_report(rule, beta, budget, None, __version__, capped=True), args.out)
        return 2
    _emit(search_report(rule, beta, budget, outcome, __version__), args.out)
    return 0 if outcome.found else 1


def _cmd_survey(args) -> int:
    rule = parse_rule(_read(args.rule))
    torus = _parse_torus(args.torus)
    target = Region(parse_cells(args.target))
    budget = SearchBudget(Region(parse_cells(args.halo)), args.tmax, args.max_candidates)
    betas = None
    if args.betas:
        betas = {
            name.strip().upper(): _beta_from_names(name, target, rule.alphabet.size)
            for name in args.betas.split(";")
        }
    result = universality_survey(rule, target, budget, torus, betas=betas, workers=args.threads)
    doc = {
        "report": "universality-survey",
        "tool_version": __version__,
        "rule_hash": rule_hash(rule),
        "target": [format_cell(c) for c in target.cells],
        "budget": {
            "halo": [format_cell(c) for c in budget.halo.cells],
            "t_max": budget.t_max,
        },
        "coverage": {},
    }
    for name, outcome in result.outcomes.items():
        if outcome.found:
            from .universality import program_report

            doc["coverage"][name] = {
                "outcome": "found",
                "program": program_report(outcome.program, rule.alphabet),
                "candidates_tested": outcome.candidates_tested,
            }
        else:
            doc["coverage"][name] = {
                "outcome": "not-found",
                "candidates_tested": outcome.candidates_tested,
            }
    doc["note"] = "not-found reflects the search budget, not nonexistence"
    _emit(doc, args.out)
    return 0


def _cmd_macro_check(args) -> int:
    config = config_from_text(_read(args.config))
    partition = partition_from_text(_read(args.partition))
    constraints = constraints_from_text(_read(args.constraints), partition, config.alphabet)
    slack = Fraction(args.slack) if args.slack else constraints.epsilon
    violation = check_constraints(config, constraints, slack)
    doc = {
        "report": "macro-check",
        "tool_version": __version__,
        "epsilon": str(constraints.epsilon),
        "slack": str(slack),
        "satisfied": violation is None,
        "densities": {
            name: {
                config.alphabet.symbols[i]: str(value)
                for i, value in enumerate(densities(config, region))
            }
            for name, region in zip(partition.names, partition.regions)
        },
    }
    if violation is not None:
        doc["violation"] = {
            "region": violation.region_name,
            "symbol": violation.symbol,
            "value": str(violation.value),
            "target": str(violation.target),
        }
    _emit(doc, args.out)
    return 0 if violation is None else 1


def _cmd_nogo_demo(args) -> int:
    rule = parse_rule(_read(args.rule))
    partition = partition_from_text(_read(args.partition))
    epsilon = Fraction(args.epsilon)
    constraints = None
    if args.constraints:
        constraints = constraints_from_text(_read(args.constraints), partition, rule.alphabet)
        if args.epsilon and constraints.epsilon != epsilon:
            raise ValidationError(
                f"--epsilon {epsilon} conflicts with the constraint file's {constraints.epsilon}"
            )
    if args.halo:
        halo = Region(parse_cells(args.halo))
    else:
        cone = light_cone(partition.target, args.tmax, partition.torus)
        halo = cone.region.difference(partition.target)
    budget = SearchBudget(halo, args.tmax, args.max_candidates)
    result = no_go_witness(rule, partition, epsilon, budget, constraints, workers=args.threads)
    _emit(witness_report(result, rule, partition, __version__), args.out)
    return 0 if result.found else 1


def _cmd_quantum_demo(args) -> int:
    doc, ok = _quantum_demo_report(args.cells, args.trials, args.seed)
    _emit(doc, args.out)
    return 0 if ok else 1


def _quantum_demo_report(cells: int, trials: int, seed: int):
    """Run the quantum lemma suite; every inequality in the shift-robustness
    argument is checked on concrete states."""
    if cells < 4 or cells % 2:
        raise ValidationError("--cells must be an even number of at least 4")
    rng = np.random.default_rng(seed)
    checks = {}
    doc = {"report": "quantum-demo", "tool_version": __version__, "cells": cells, "seed": seed}

    # mean-field laws: commutator decay and product-state variance decay
    torus = Torus((cells,))
    law_rows = []
    for m in range(2, cells + 1):
        region = Region((x,) for x in range(m))
        comm = quantum.commutator_norm(quantum.SX, quantum.SZ, region)
        plus = quantum.product_state(torus, [np.array([1, 1]) / np.sqrt(2)] * cells)
        var = quantum.constraint_value(plus, quantum.SZ, region, 0.0)
        law_rows.append(
            {"size": m, "commutator_times_size": comm * m, "variance_times_size": var * m}
        )
    checks["commutator_law"] = all(abs(r["commutator_times_size"] - 2) < 1e-9 for r in law_rows)
    checks["variance_law"] = all(abs(r["variance_times_size"] - 1) < 1e-9 for r in law_rows)
    doc["mean_field_laws"] = law_rows

    # cat-state statistics
    cat = quantum.cat_state(cells)
    full = Region((x,) for x in range(cells))
    zbar = quantum.mean_field(quantum.SZ, full)
    cat_mean = quantum.expectation(cat, zbar)
    cat_sq = quantum.constraint_value(cat, quantum.SZ, full, 0.0)
    doc["cat_state"] = {"mean_z": cat_mean, "squared_z": cat_sq}
    checks["cat_statistics"] = abs(cat_mean) < 1e-9 and abs(cat_sq - 1) < 1e-9

    # shift bounds
    bound_rows = []
    worst_gap = 1.0
    for a_name in ("sx", "sy", "sz"):
        a = quantum.PAULI[a_name]
        for m, v in ((cells - 2, (2,)), (2, (2,)), (4, (4,))):
            region = Region((x,) for x in range(m))
            sb = quantum.shift_bound(a, region, v, torus)
            bound_rows.append(
                {"observable": a_name, "size": m, "shift": list(v), "lhs": sb.lhs, "bound": sb.bound}
            )
            worst_gap = min(worst_gap, sb.bound - sb.lhs)
    doc["shift_bounds"] = bound_rows
    checks["shift_bounds"] = all(r["lhs"] <= r["bound"] + 1e-9 for r in bound_rows)

    # robustness implication on random product states and cat states
    eps = 1.0
    v = (2,)
    evens = Region((x,) for x in range(0, cells, 2))
    odds = Region((x,) for x in range(1, cells, 2))
    regions = [evens, odds]
    if cells >= 10:
        # a prefix region loses two cells under the shift; its deficit
        # 2/(cells-2) obeys the eps/4 precondition from ten cells up
        regions.append(Region((x,) for x in range(cells - 2)))
    failures = 0
    vacuous = 0
    for trial in range(trials):
        if trial % 5 == 4:
            state = quantum.cat_state(cells)
        else:
            kets = []
            for _ in range(cells):
                z = rng.normal(size=2) + 1j * rng.normal(size=2)
                kets.append(z)
            state = quantum.product_state(torus, kets)
        observables = [quantum.SX, quantum.SZ]
        levels = [
            [quantum.expectation(state, quantum.mean_field(a, r)) for r in regions]
            for a in observables
        ]
        record = quantum.quantum_shift_robustness(state, observables, regions, levels, eps, v)
        if not record.holds:
            failures += 1
        if not record.premise_satisfied:
            vacuous += 1
    doc["robustness"] = {"trials": trials, "failures": failures, "vacuous_premises": vacuous}
    checks["robustness_implication"] = failures == 0

    # channel checks: identity rule and a global bit flip
    from .rules import identity_rule
    from .lattice import BINARY, make_config

    small = Torus((4,))
    qid = quantum.quantum_rule_from_block_rule(identity_rule(BINARY, 1))
    target1 = Region([(0,)])
    comp1 = restrict(make_config(small, BINARY), complement_region(small, target1))
    check_id = quantum.implements_unitary(qid, comp1, small, target1, np.eye(2), 1, 1e-9)
    x_block = np.kron(quantum.SX, quantum.SX)
    qx = quantum.QuantumRule(2, qid.shape, x_block, x_block)
    target2 = Region([(0,), (1,)])
    comp2 = restrict(make_config(small, BINARY), complement_region(small, target2))
    check_xx = quantum.implements_unitary(qx, comp2, small, target2, x_block, 1, 1e-9)
    check_mismatch = quantum.implements_unitary(qx, comp2, small, target2, np.eye(4), 1, 1.9)
    doc["channels"] = {
        "identity_choi_distance": check_id.choi_distance,
        "identity_sampled_worst": check_id.sampled_worst,
        "global_x_choi_distance": check_xx.choi_distance,
        "global_x_sampled_worst": check_xx.sampled_worst,
        "mismatched_choi_distance": check_mismatch.choi_distance,
        "mismatched_sampled_worst": check_mismatch.sampled_worst,
    }
    checks["channel_identity"] = check_id.ok
    checks["channel_global_x"] = check_xx.ok
    checks["channel_mismatch_detected"] = not check_mismatch.ok

    doc["checks"] = checks
    return doc, all(checks.values())


def _cmd_render(args) -> int:
    entries = parse_trajectory_text(_read(args.trajectory))
    for n, label, config in entries:
        print(f"--- step {n} ({label}) ---")
        if config.torus.ndim == 1:
            print(" ".join(config.alphabet.symbols[v] for v in config.values))
        elif config.torus.ndim == 2:
            for row in config.values:
                print(" ".join(config.alphabet.symbols[v] for v in row))
        else:
            sys.stdout.write(config_to_text(config))
        if args.pgm:
            _write_pgm(config, f"{args.pgm}_{n:03d}.pgm")
    return 0


def _write_pgm(config, path: str) -> None:
    if config.torus.ndim != 2:
        raise ValidationError("PGM output needs a two-axis torus")
    k = config.alphabet.size
    scale = 255 // (k - 1)
    rows, cols = config.torus.dims
    lines = [f"P2", f"{cols} {rows}", "255"]
    for row in config.values:
        lines.append(" ".join(str(int(v) * scale) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="margolab",
        description="reversible block cellular automata: simulation, search, verification",
    )
    parser.add_argument("--version", action="version", version=f"margolab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="dump a trajectory")
    p.add_argument("--rule", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate-rule", help="check a rule file for reversibility")
    p.add_argument("rule")
    p.set_defaults(func=_cmd_validate_rule)

    p = sub.add_parser("induced-map", help="map induced on a target region by a configuration")
    p.add_argument("--rule", required=True)
    p.add_argument("--config", required=True, help="configuration supplying the complement values")
    p.add_argument("--target", required=True, help='cells, e.g. "(0,0) (2,0)"')
    p.add_argument("--time", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_induced_map)

    p = sub.add_parser("search", help="search for a program implementing a map")
    p.add_argument("--rule", required=True)
    p.add_argument("--torus", required=True, help='e.g. "8 x 8"')
    p.add_argument("--target", required=True)
    p.add_argument("--beta", required=True, help="comma list of per-cell maps (ID, NOT, CONST0, CONST1, FLIP)")
    p.add_argument("--halo", required=True, help="complement cells allowed to vary")
    p.add_argument("--tmax", type=int, required=True)
    p.add_argument("--max-candidates", type=int, default=1 << 24)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--out")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("survey", help="which target maps are realized within a budget")
    p.add_argument("--rule", required=True)
    p.add_argument("--torus", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--betas", help='semicolon list of comma lists, e.g. "ID;NOT;CONST0,ID"')
    p.add_argument("--halo", required=True)
    p.add_argument("--tmax", type=int, required=True)
    p.add_argument("--max-candidates", type=int, default=1 << 24)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--out")
    p.set_defaults(func=_cmd_survey)

    p = sub.add_parser("macro-check", help="check density constraints on a configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--constraints", required=True)
    p.add_argument("--slack", help="override the checking slack (default: epsilon)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_macro_check)

    p = sub.add_parser("nogo-demo", help="produce the macroscopic-control counterexample")
    p.add_argument("--rule", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--epsilon", required=True)
    p.add_argument("--constraints", help="density targets; derived from the found program if omitted")
    p.add_argument("--halo", help="search halo; light cone of the target minus the target if omitted")
    p.add_argument("--tmax", type=int, default=1)
    p.add_argument("--max-candidates", type=int, default=1 << 24)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--out")
    p.set_defaults(func=_cmd_nogo_demo)

    p = sub.add_parser("quantum-demo", help="verify the quantum lemma suite")
    p.add_argument("--cells", type=int, default=10)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_quantum_demo)

    p = sub.add_parser("render", help="pretty-print a trajectory dump")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--pgm", help="prefix for one PGM image per snapshot")
    p.set_defaults(func=_cmd_render)

    return parser


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return args.func(args)
    except (ValidationError, RuleParseError, RuleValidationError, EnumerationCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
