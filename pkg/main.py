# -*- coding: utf-8 -*-

"""
SCSL Toolchain - Main Entry Point

Commands:
1. check     - parse and typecheck a specification
2. gen       - generate a test suite from the stimulus scenarios
3. monitor   - check one temporal formula over a recorded trace
4. simulate  - run a system test in this process
5. systest   - run a system test on agents over a transport
6. report    - summarize a finished run

Exit codes: 0 all PASS, 1 any FAIL, 2 usage or specification error,
3 infrastructure abort (config.ExitCode).
"""
import argparse
import json
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, List, Optional

import config
from config import ExitCode
from engine.evaluator import RuntimeFault, eval_expr
from engine.ltlf import Monitor, eval_finite, formula_text, to_formula
from exporters.excel_exporter import ExcelExporter
from exporters.text_exporter import TextExporter
from language.parser import ParseError, parse_expression
from managers.systest_manager import SystestManager
from models.enums import TransportMode
from models.run_report import RunReport
from models.source import Diagnostic
from models.specification import Specification
from models.values import EnumLit, Record
from persistence.artifact_store import ArtifactStore
from testgen.generator import GenerationBudget, generate, measure_builds
from testgen.suite_io import write_suite
from utils.logger import setup_logger
from utils.settings_manager import SettingsManager

logger = setup_logger('main')


def _print_diagnostics(diagnostics: List[Diagnostic]):
    for d in diagnostics:
        print(str(d), file=sys.stderr)


def _load_spec(manager: SystestManager, path: str, append: str = "") -> Optional[Specification]:
    """Specification or None (diagnostics printed)"""
    if not Path(path).is_file():
        print(f"{path}: no such file", file=sys.stderr)
        return None
    spec, diagnostics = manager.load_spec(path, append)
    if spec is None:
        _print_diagnostics(diagnostics)
    return spec


def _load_overrides(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


# ════════════════════════════════════════════════════════
# CHECK / GEN
# ════════════════════════════════════════════════════════

def cmd_check(args) -> int:
    manager = SystestManager()
    if not Path(args.spec).is_file():
        print(f"{args.spec}: no such file", file=sys.stderr)
        return ExitCode.USAGE
    spec, diagnostics = manager.load_spec(args.spec)
    _print_diagnostics(diagnostics)
    if spec is None:
        return ExitCode.FAIL
    _, problems = manager.resolve_consts(spec)
    for problem in problems:
        print(f"{args.spec}: error: {problem}", file=sys.stderr)
    if problems:
        return ExitCode.FAIL
    SettingsManager().set_last_spec(str(Path(args.spec).resolve()))
    print(f"{args.spec}: OK ({len(spec.scenarios)} scenario types, {len(spec.instances)} instances)")
    return ExitCode.PASS


def cmd_gen(args) -> int:
    manager = SystestManager()
    spec = _load_spec(manager, args.spec)
    if spec is None:
        return ExitCode.USAGE
    try:
        consts, problems = manager.resolve_consts(spec, _load_overrides(args.consts))
    except (OSError, ValueError) as e:
        print(f"cannot read constants: {e}", file=sys.stderr)
        return ExitCode.USAGE
    if consts is None:
        for problem in problems:
            print(problem, file=sys.stderr)
        return ExitCode.USAGE

    budget = GenerationBudget(
        max_paths=args.max_paths,
        max_depth=args.max_depth,
        max_cases=args.budget,
        solver_effort=args.solver_effort,
    )
    suite = generate(spec, consts, budget, seed=args.seed, embed_conditions=args.conditions, cycle=args.cycle)
    suite.generated_at = datetime.now().strftime(config.DATETIME_FORMAT)
    if not suite.cases:
        logger.warning("Generated suite is empty")
    for entry in suite.unsat:
        print(f"UNSAT: {entry}", file=sys.stderr)
    if args.timings:
        for instance, seconds in measure_builds(spec, consts, args.cycle, args.solver_effort).items():
            flag = " (over soft bound)" if seconds > config.GENERATION_SOFT_BOUND_S else ""
            print(f"build {instance}: {seconds:.3f}s{flag}", file=sys.stderr)

    if args.out:
        if not write_suite(suite, args.out):
            return ExitCode.INFRASTRUCTURE
        print(f"{args.out}: {len(suite.cases)} case(s){' (incomplete)' if suite.incomplete else ''}")
    else:
        print(json.dumps(suite.to_dict(), indent=2, ensure_ascii=False))
    return ExitCode.PASS


# ════════════════════════════════════════════════════════
# MONITOR
# ════════════════════════════════════════════════════════

def plain_value(data: Any, spec: Specification) -> Any:
    """Runtime value of untyped JSON (enum literal names become literals)"""
    if isinstance(data, str):
        decl = spec.enum_of_literal(data)
        if decl is not None:
            return EnumLit(decl.name, data, decl.literals.index(data))
        return data
    if isinstance(data, list):
        return tuple(plain_value(v, spec) for v in data)
    if isinstance(data, dict):
        return Record.from_mapping({k: plain_value(v, spec) for k, v in data.items()})
    return data


def read_trace(path: str, spec: Specification) -> List[dict]:
    """
    Valuations of a trace file.

    Accepts a JSON list of symbol maps or the NDJSON trace of a run.
    """
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        rows = json.loads(text)
    else:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        rows = [row.get('valuation', row) for row in rows]
    return [{k: plain_value(v, spec) for k, v in row.items()} for row in rows]


def cmd_monitor(args) -> int:
    manager = SystestManager()
    spec = _load_spec(manager, args.spec)
    if spec is None:
        return ExitCode.USAGE
    consts, problems = manager.resolve_consts(spec)
    if consts is None:
        for problem in problems:
            print(problem, file=sys.stderr)
        return ExitCode.USAGE
    try:
        formula = to_formula(parse_expression(args.formula), consts, spec)
        trace = read_trace(args.trace, spec)
    except ParseError as e:
        print(f"formula: {e}", file=sys.stderr)
        return ExitCode.USAGE
    except (OSError, ValueError) as e:
        print(f"{args.trace}: {e}", file=sys.stderr)
        return ExitCode.USAGE
    if not trace:
        print(f"{args.trace}: empty trace", file=sys.stderr)
        return ExitCode.USAGE

    def holds(expr, valuation) -> bool:
        return eval_expr(expr, valuation, consts, {}, spec) is True

    monitor = Monitor(formula, args.cycle, "formula")
    try:
        for k, valuation in enumerate(trace):
            verdict = monitor.step(valuation, holds)
            if args.verbose:
                print(f"{k:5d} {verdict.value}")
        final = monitor.finalize()
        reference = eval_finite(formula, trace, 0, args.cycle, holds)
    except RuntimeFault as fault:
        print(f"{fault.kind.value}: {fault.message}", file=sys.stderr)
        return ExitCode.INFRASTRUCTURE
    if (final.value == "PASS") != reference:
        logger.error("Online verdict disagrees with the reference evaluation")
        return ExitCode.INFRASTRUCTURE
    print(f"{formula_text(formula)}: {final.value} ({len(trace)} valuations)")
    return ExitCode.PASS if final.value == "PASS" else ExitCode.FAIL


# ════════════════════════════════════════════════════════
# SIMULATE / SYSTEST
# ════════════════════════════════════════════════════════

def _run(args, distributed: bool) -> int:
    store = None if args.no_store else ArtifactStore(args.store)
    manager = SystestManager(store)
    overrides = {'seed': args.seed, 'stress': args.stress}
    if distributed:
        overrides.update(mode=args.mode, loss=args.loss, tick_ms=args.tick_ms, pace=args.pace)

    if args.experiment:
        experiments = manager.load_experiments(args.experiments_file)
        experiment = experiments.get(args.experiment)
        if experiment is None:
            print(f"unknown experiment '{args.experiment}' (known: {', '.join(experiments)})", file=sys.stderr)
            return ExitCode.USAGE
        if args.spec:
            experiment.spec = args.spec
        cfg, problems = manager.config_for(experiment, **overrides)
        if cfg is None:
            for problem in problems:
                print(problem, file=sys.stderr)
            return ExitCode.USAGE
    else:
        if not args.spec:
            print("a specification or --experiment is required", file=sys.stderr)
            return ExitCode.USAGE
        spec = _load_spec(manager, args.spec)
        if spec is None:
            return ExitCode.USAGE
        if spec.systemtest is None:
            print(f"{args.spec}: no systemtest configuration", file=sys.stderr)
            return ExitCode.USAGE
        experiment = None
        try:
            consts, problems = manager.resolve_consts(spec, _load_overrides(args.consts))
        except (OSError, ValueError) as e:
            print(f"cannot read constants: {e}", file=sys.stderr)
            return ExitCode.USAGE
        if consts is None:
            for problem in problems:
                print(problem, file=sys.stderr)
            return ExitCode.USAGE
        suite = None
        if args.suite:
            suite, diagnostics = manager.load_suite(args.suite)
            if suite is None:
                _print_diagnostics(diagnostics)
                return ExitCode.USAGE
        from agents.rover_stub import RoverModel
        from agents.runtime import RunConfig
        sut = RoverModel(spin_up=args.spin_up) if spec.object_type("Rover") is not None else None
        cfg = RunConfig(spec=spec, consts=consts, suite=suite, sut=sut, **overrides)

    if args.cycletime is not None:
        cfg.cycletime = args.cycletime
    if args.seconds_per_tick is not None:
        cfg.seconds_per_tick = args.seconds_per_tick
    if args.max_ticks is not None:
        cfg.max_ticks = args.max_ticks

    report = manager.systest(cfg) if distributed else manager.simulate(cfg)
    if args.echo_log:
        for line in report.log:
            print(line)
    print(TextExporter().render(report))
    if manager.last_run_dir is not None:
        print(f"Artifacts: {manager.last_run_dir}")
    if experiment is not None and experiment.expected:
        for problem in manager.check_expectations(experiment, report):
            print(f"expectation: {problem}", file=sys.stderr)
    return report.exit_code


def cmd_simulate(args) -> int:
    return _run(args, distributed=False)


def cmd_systest(args) -> int:
    return _run(args, distributed=True)


# ════════════════════════════════════════════════════════
# REPORT
# ════════════════════════════════════════════════════════

def cmd_report(args) -> int:
    path = Path(args.run)
    if not path.exists():
        print(f"{args.run}: no such run", file=sys.stderr)
        return ExitCode.USAGE
    report: Optional[RunReport] = ArtifactStore(str(path.parent) if path.is_dir() else None).load_report(str(path))
    if report is None:
        print(f"{args.run}: no report.json", file=sys.stderr)
        return ExitCode.USAGE
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
    else:
        print(TextExporter().render(report, show_log=args.log))
    if args.xlsx:
        exporter = ExcelExporter()
        xlsx = exporter.generate_filename(report, args.xlsx) if Path(args.xlsx).is_dir() else args.xlsx
        if not exporter.export_report(report, xlsx):
            return ExitCode.INFRASTRUCTURE
    return report.exit_code


# ════════════════════════════════════════════════════════
# ARGUMENTS
# ════════════════════════════════════════════════════════

def _add_run_arguments(p: argparse.ArgumentParser, settings: SettingsManager):
    p.add_argument("spec", nargs="?", help="specification file (.scsl)")
    p.add_argument("--suite", help="stimulation suite (JSON)")
    p.add_argument("--consts", help="JSON file with constant overrides")
    p.add_argument("--experiment", help="experiment id from the experiments file")
    p.add_argument("--experiments-file", default=config.EXPERIMENTS_FILE)
    p.add_argument("--seed", type=int, default=settings.get_default_seed())
    p.add_argument("--stress", action="store_true", help="permute mutation arrival order with the seed")
    p.add_argument("--cycletime", type=int, help="cycle time applied to every object type")
    p.add_argument("--seconds-per-tick", type=float)
    p.add_argument("--max-ticks", type=int)
    p.add_argument("--spin-up", type=int, default=2, help="rover spin-up cycles")
    p.add_argument("--store", help="artifact store root (default from app_settings.json)")
    p.add_argument("--no-store", action="store_true", help="do not write run artifacts")
    p.add_argument("--echo-log", action="store_true", help="print the run log")


def build_parser() -> argparse.ArgumentParser:
    settings = SettingsManager()
    parser = argparse.ArgumentParser(prog="scsl", description="SCSL scenario specification toolchain")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and typecheck a specification")
    p.add_argument("spec")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate a test suite")
    p.add_argument("spec")
    p.add_argument("--out", help="suite file (stdout when omitted)")
    p.add_argument("--seed", type=int, default=settings.get_default_seed())
    p.add_argument("--consts", help="JSON file with constant overrides")
    p.add_argument("--budget", type=int, default=config.DEFAULT_MAX_CASES, help="maximum number of test cases")
    p.add_argument("--max-paths", type=int, default=config.DEFAULT_MAX_PATHS)
    p.add_argument("--max-depth", type=int, default=config.DEFAULT_MAX_DEPTH)
    p.add_argument("--solver-effort", type=int, default=config.DEFAULT_SOLVER_EFFORT)
    p.add_argument("--cycle", type=int, help="cycle bound override")
    p.add_argument("--conditions", action="store_true", help="embed the scenario specs as step conditions")
    p.add_argument("--timings", action="store_true", help="report the automaton build time of every instance")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("monitor", help="check a formula over a trace")
    p.add_argument("spec")
    p.add_argument("--formula", required=True)
    p.add_argument("--trace", required=True, help="JSON list of valuations or a run's trace.ndjson")
    p.add_argument("--cycle", type=int, default=1)
    p.add_argument("--verbose", action="store_true", help="print the verdict after every valuation")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("simulate", help="run a system test in this process")
    _add_run_arguments(p, settings)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("systest", help="run a system test on agents")
    _add_run_arguments(p, settings)
    p.add_argument("--mode", choices=[m.value for m in TransportMode], default=TransportMode.INPROC.value)
    p.add_argument("--loss", type=float, default=0.0, help="datagram loss probability")
    p.add_argument("--tick-ms", type=int, default=settings.get_tick_ms())
    p.add_argument("--pace", action="store_true", help="hold every tick for its full period")
    p.set_defaults(func=cmd_systest)

    p = sub.add_parser("report", help="summarize a finished run")
    p.add_argument("run", help="run directory or report.json")
    p.add_argument("--json", action="store_true")
    p.add_argument("--xlsx", help="Excel workbook path, or a directory for a generated name")
    p.add_argument("--log", action="store_true", help="include the run log")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ExitCode.USAGE if e.code else ExitCode.PASS
    try:
        return args.func(args)
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return ExitCode.INFRASTRUCTURE
    except Exception as e:
        logger.error(f"Unhandled error in {args.command}: {e}")
        return ExitCode.INFRASTRUCTURE


if __name__ == '__main__':
    sys.exit(main())
