"""
Command-line interface for persist-check.

Commands:
    run              Terminal register outcomes and the outcome query
    crash            Every NVM a crash may leave behind
    check-invariant  Crash invariant at every reachable state
    check-outline    Validity of a proof outline
    test-rules       Falsification testing of the proof-rule catalogue
    watch            Re-check litmus files when they change
    status           Version, bundled corpus and defaults

Exit codes: 0 pass, 1 property failure, 2 usage, parse or configuration error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from persist_check import __version__, config, utils
from persist_check.errors import PersistCheckError

logger = logging.getLogger("persist_check")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


# =============================================================================
# OUTPUT HELPERS
# =============================================================================


def _banner(title: str) -> List[str]:
    rule = "=" * config.SUMMARY_WIDTH
    return [rule, title, rule]


def _listed(items: List[str], limit: int = config.MAX_LISTED_ITEMS) -> List[str]:
    lines = [f"  - {item}" for item in items[:limit]]
    if len(items) > limit:
        lines.append(f"  ... and {len(items) - limit} more")
    return lines


def _emit(args: argparse.Namespace, payload: Dict[str, Any], lines: List[str]) -> None:
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def _show_progress(args: argparse.Namespace) -> bool:
    return not getattr(args, "quiet", False) and sys.stderr.isatty()


def _nvm_text(nvm) -> str:
    return " ".join(f"{loc}={val}" for loc, val in nvm)


def _options(args: argparse.Namespace, program):
    from persist_check.explorer import ExploreOptions, default_options

    opts = ExploreOptions(
        max_steps=getattr(args, "max_steps", None),
        strict_cas_read=getattr(args, "strict_cas_read", False),
        show_progress=_show_progress(args),
    )
    return default_options(program, opts)


def _trace_lines(trace) -> List[str]:
    lines = []
    for tid, state in trace[-config.MAX_LISTED_ITEMS :]:
        step = "start" if tid is None else f"thread {tid}"
        lines.append(f"  {step:>10}: {utils.format_state(state)}")
    if len(trace) > config.MAX_LISTED_ITEMS:
        lines.insert(0, f"  ... {len(trace) - config.MAX_LISTED_ITEMS} earlier steps")
    return lines


# =============================================================================
# COMMANDS
# =============================================================================


def cmd_run(args: argparse.Namespace) -> int:
    """Print terminal register outcomes and whether the outcome query is reachable."""
    from persist_check.assertions import evaluate, to_text
    from persist_check.explorer import explore, final_states, outcomes
    from persist_check.litmus import load_litmus
    from persist_check.wellformed import initial_state

    lit = load_litmus(args.file)
    program = lit.program
    graph = explore(program, initial_state(lit.spec, program), _options(args, program))
    registers = [r for t in program.tids for r in program.registers(t)]
    results = outcomes(graph, registers)

    reachable = None
    if lit.outcome is not None:
        reachable = any(evaluate(lit.outcome, s) for s in final_states(graph))

    failed = lit.expect is not None and reachable is not None and reachable != lit.expect
    payload = {
        "file": str(args.file),
        "states": len(graph.states),
        "transitions": len(graph.edges),
        "truncated": graph.truncated,
        "registers": registers,
        "outcomes": results,
        "outcome": to_text(lit.outcome) if lit.outcome is not None else None,
        "outcome_reachable": reachable,
        "expect": None if lit.expect is None else ("reachable" if lit.expect else "unreachable"),
        "status": "fail" if failed else "pass",
    }

    lines = _banner(f"Outcomes: {lit.name} ({len(graph.states)} states)")
    if not results:
        lines.append("  (no final state reached)")
    for result in results:
        text = " ".join(f"{r}={v}" for r, v in result.items())
        lines.append(f"  - {text or '(no registers)'}")
    if lit.outcome is not None:
        verdict = "reachable" if reachable else "unreachable"
        line = f"\nOutcome {to_text(lit.outcome)}: {verdict}"
        if lit.expect is not None:
            line += f" (expected {payload['expect']})"
        lines.append(line)
    if graph.truncated:
        lines.append("\nExploration truncated: outcomes are a lower bound")
    lines.append("=" * config.SUMMARY_WIDTH)
    _emit(args, payload, lines)
    return EXIT_FAIL if failed else EXIT_PASS


def cmd_crash(args: argparse.Namespace) -> int:
    """Print every NVM a crash at some reachable state may leave behind."""
    from persist_check.explorer import crash_reachable_nvms, explore
    from persist_check.litmus import load_litmus
    from persist_check.wellformed import initial_state

    lit = load_litmus(args.file)
    program = lit.program
    graph = explore(program, initial_state(lit.spec, program), _options(args, program))
    nvms = sorted(crash_reachable_nvms(graph, oracle=args.oracle))

    payload = {
        "file": str(args.file),
        "states": len(graph.states),
        "truncated": graph.truncated,
        "nvms": [utils.nvm_to_dict(n) for n in nvms],
    }
    lines = _banner(f"Crash-reachable NVMs: {lit.name} ({len(nvms)})")
    lines += [f"  - {_nvm_text(n)}" for n in nvms]
    lines.append("=" * config.SUMMARY_WIDTH)
    _emit(args, payload, lines)
    return EXIT_PASS


def cmd_check_invariant(args: argparse.Namespace) -> int:
    """Check the file's crash invariant at every reachable state."""
    from persist_check.assertions import to_text
    from persist_check.explorer import check_crash_invariant, explore
    from persist_check.litmus import load_litmus
    from persist_check.wellformed import initial_state

    lit = load_litmus(args.file)
    if lit.invariant is None:
        raise PersistCheckError(f"{args.file} has no crash-invariant section")
    program = lit.program
    graph = explore(program, initial_state(lit.spec, program), _options(args, program))
    verdict = check_crash_invariant(graph, lit.invariant)

    status = "fail" if not verdict else ("bounded" if verdict.truncated else "pass")
    payload: Dict[str, Any] = {
        "file": str(args.file),
        "invariant": to_text(lit.invariant.assertion),
        "states": len(graph.states),
        "status": status,
        "truncated": verdict.truncated,
    }
    lines = _banner(f"Crash invariant: {lit.name}")
    lines.append(f"  {to_text(lit.invariant.assertion)}")
    lines.append(f"  Checked {len(graph.states)} states: {status.upper()}")
    if not verdict:
        payload["counterexample"] = {
            "state_index": verdict.state_index,
            "state": utils.state_to_dict(verdict.state),
            "nvm": utils.nvm_to_dict(verdict.nvm),
            "trace": utils.trace_to_list(verdict.trace),
        }
        lines.append(f"\nCounterexample NVM: {_nvm_text(verdict.nvm)}")
        lines.append("Trace:")
        lines += _trace_lines(verdict.trace)
    lines.append("=" * config.SUMMARY_WIDTH)
    _emit(args, payload, lines)
    return EXIT_PASS if verdict else EXIT_FAIL


def _verdict_dict(verdict, outline) -> Dict[str, Any]:
    from persist_check.outline import describe

    data: Dict[str, Any] = {
        "status": verdict.status.value,
        "obligations": verdict.obligations,
    }
    if verdict.witnesses:
        data["witnesses"] = verdict.witnesses
    cex = verdict.counterexample
    if cex is not None:
        data["counterexample"] = {
            "description": describe(cex, outline),
            "thread": cex.tid,
            "label": cex.label,
            "interferer": list(cex.interferer) if cex.interferer else None,
            "state": utils.state_to_dict(cex.state),
            "successor": utils.state_to_dict(cex.successor) if cex.successor else None,
        }
    return data


def cmd_check_outline(args: argparse.Namespace) -> int:
    """Check the five validity conditions of the file's proof outline."""
    from persist_check.litmus import load_litmus
    from persist_check.outline import Status, check_outline, describe

    lit = load_litmus(args.file)
    if lit.outline is None:
        raise PersistCheckError(f"{args.file} has no outline section")
    report = check_outline(
        lit.program,
        lit.outline,
        lit.spec,
        _options(args, lit.program),
        universe_kind=args.universe,
        trials=args.trials,
        seed=args.seed,
        program_points=args.program_points,
    )

    payload = {
        "file": str(args.file),
        "universe": report.universe,
        "states": report.states,
        "bounded": report.bounded,
        "status": report.status.value,
        "witness": report.witness,
        "conditions": {k: _verdict_dict(v, lit.outline) for k, v in report.conditions.items()},
        "conclusions": {k: _verdict_dict(v, lit.outline) for k, v in report.theorem.items()},
    }

    lines = _banner(f"Proof outline: {lit.name} ({report.states} {report.universe} states)")
    for group, verdicts in (("Conditions", report.conditions), ("Conclusions", report.theorem)):
        lines.append(f"\n{group}:")
        for name, verdict in verdicts.items():
            extra = ""
            if verdict.witnesses:
                extra = f" (witness thread {', '.join(str(t) for t in verdict.witnesses)})"
            lines.append(f"  {name:<22} {verdict.status.value.upper()}{extra}")
            if verdict.counterexample is not None:
                cex = verdict.counterexample
                lines.append(f"    at {describe(cex, lit.outline)}")
                lines.append(f"    state: {utils.format_state(cex.state)}")
                if cex.successor is not None:
                    lines.append(f"    after: {utils.format_state(cex.successor)}")
    if report.universe == "generated":
        lines.append("\nGenerated universe: evidence, not proof")
    lines.append(f"\nOverall: {report.status.value.upper()}")
    lines.append("=" * config.SUMMARY_WIDTH)
    _emit(args, payload, lines)
    return EXIT_FAIL if report.status is Status.FAIL else EXIT_PASS


def cmd_test_rules(args: argparse.Namespace) -> int:
    """Falsification-test the rule catalogue, or the mutation list with --mutations."""
    from persist_check import rules
    from persist_check.wellformed import GenBounds

    pool = rules.mutations() if args.mutations else rules.catalogue()
    if args.rule:
        wanted = set(args.rule)
        unknown = wanted - {r.name for r in pool}
        if unknown:
            raise PersistCheckError(f"Unknown rule(s): {sorted(unknown)}")
        pool = [r for r in pool if r.name in wanted]

    verdicts = rules.test_rules(
        pool,
        bounds=GenBounds(seed=args.seed),
        trials=args.trials,
        show_progress=_show_progress(args),
    )
    # Mutations are expected to be falsified
    bad = [v for v in verdicts if v.passed == args.mutations]

    by_name = {r.name: r for r in pool}
    entries = []
    lines = _banner(f"{'Mutations' if args.mutations else 'Rules'}: {len(verdicts)} tested")
    for verdict in verdicts:
        entry: Dict[str, Any] = {
            "name": verdict.name,
            "rule": by_name[verdict.name].text,
            "table": by_name[verdict.name].table,
            "instantiations": verdict.tried,
            "states": verdict.states,
            "falsified": not verdict.passed,
        }
        status = "falsified" if not verdict.passed else "passed"
        lines.append(f"  {verdict.name:<20} {status:<10} {verdict.tried} instantiations")
        if verdict.falsified is not None:
            found = verdict.falsified
            entry["counterexample"] = {
                "binding": rules.describe(found.binding),
                "state": utils.state_to_dict(found.state),
                "successor": utils.state_to_dict(found.successor),
            }
            lines.append(f"    with {rules.describe(found.binding)}")
        entries.append(entry)

    expectation = "not falsified" if args.mutations else "falsified"
    lines.append(f"\n{len(bad)} {expectation}")
    lines += _listed([v.name for v in bad])
    lines.append("=" * config.SUMMARY_WIDTH)
    payload = {"mutations": args.mutations, "trials": args.trials, "seed": args.seed,
               "rules": entries, "status": "fail" if bad else "pass"}
    _emit(args, payload, lines)
    return EXIT_FAIL if bad else EXIT_PASS


def check_file(path: Path, args: Optional[argparse.Namespace] = None) -> int:
    """Run the strongest check a litmus file supports and return its exit code."""
    from persist_check.litmus import load_litmus

    args = args or argparse.Namespace()
    defaults = {
        "format": "text",
        "max_steps": None,
        "strict_cas_read": False,
        "quiet": True,
        "universe": "reachable",
        "trials": config.DEFAULT_TRIALS,
        "seed": config.DEFAULT_SEED,
        "program_points": False,
        "oracle": False,
    }
    for key, value in defaults.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    args.file = path

    lit = load_litmus(path)
    if lit.outline is not None:
        return cmd_check_outline(args)
    if lit.invariant is not None:
        return cmd_check_invariant(args)
    return cmd_run(args)


def cmd_watch(args: argparse.Namespace) -> int:
    from persist_check import watcher

    watcher.run(Path(args.path), recursive=args.recursive, args=args, verbose=args.verbose)
    return EXIT_PASS


def cmd_status(args: argparse.Namespace) -> int:
    """Print version, bundled corpus and defaults."""
    from persist_check.litmus import load_litmus

    corpus = []
    for path in utils.corpus_files():
        try:
            lit = load_litmus(path)
        except PersistCheckError as e:
            corpus.append({"file": path.name, "error": str(e)})
            continue
        sections = ["program"]
        sections += [name for name, present in (
            ("outcome", lit.outcome is not None),
            ("crash-invariant", lit.invariant is not None),
            ("outline", lit.outline is not None),
        ) if present]
        corpus.append({"file": path.name, "sections": sections})

    defaults = {
        "max_steps": config.DEFAULT_MAX_STEPS,
        "trials": config.DEFAULT_TRIALS,
        "seed": config.DEFAULT_SEED,
    }
    payload = {"version": __version__, "corpus_dir": str(config.CORPUS_DIR),
               "corpus": corpus, "defaults": defaults}

    lines = _banner(f"persist-check {__version__}")
    lines.append(f"\nCorpus: {config.CORPUS_DIR}")
    for item in corpus:
        detail = item.get("error") or ", ".join(item["sections"])
        lines.append(f"  - {item['file']}: {detail}")
    lines.append("\nDefaults:")
    lines += [f"  {key}: {value}" for key, value in defaults.items()]
    lines.append("=" * config.SUMMARY_WIDTH)
    _emit(args, payload, lines)
    return EXIT_PASS


# =============================================================================
# ARGUMENT PARSING
# =============================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="persist-check",
        description="Checker for persistent x86 litmus tests, crash invariants and proof outlines",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", help="Verbose output")
    common.add_argument("--quiet", "-q", action="store_true", help="Warnings only, no progress")
    common.add_argument("--log-file", type=Path, default=None, help="Also log to this file")
    common.add_argument("--format", choices=["text", "json"], default="text")

    exploring = argparse.ArgumentParser(add_help=False)
    exploring.add_argument("file", type=Path, help="Litmus file")
    exploring.add_argument("--max-steps", type=int, default=None,
                           help="Bound on transitions per path (required semantics for loops)")
    exploring.add_argument("--strict-cas-read", action="store_true",
                           help="Failed CAS reads must be observable, as loads are")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    subparsers.add_parser("run", parents=[common, exploring], help="Terminal register outcomes")

    crash = subparsers.add_parser("crash", parents=[common, exploring],
                                  help="Crash-reachable NVMs")
    crash.add_argument("--oracle", action="store_true",
                       help="Enumerate NVMs by brute force over memory values")

    subparsers.add_parser("check-invariant", parents=[common, exploring],
                          help="Check the crash invariant")

    outline = subparsers.add_parser("check-outline", parents=[common, exploring],
                                    help="Check a proof outline")
    outline.add_argument("--universe", choices=["reachable", "generated"], default="reachable")
    outline.add_argument("--trials", type=int, default=config.DEFAULT_TRIALS)
    outline.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    outline.add_argument("--program-points", action="store_true",
                         help="Check triples only where the stepping threads are at the label")

    test_rules = subparsers.add_parser("test-rules", parents=[common],
                                       help="Falsification-test the proof rules")
    test_rules.add_argument("--trials", type=int, default=config.DEFAULT_TRIALS)
    test_rules.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    test_rules.add_argument("--rule", action="append", help="Only this rule (repeatable)")
    test_rules.add_argument("--mutations", action="store_true",
                            help="Test the deliberately unsound variants instead")

    watch = subparsers.add_parser("watch", parents=[common], help="Re-check files on change")
    watch.add_argument("path", help="Directory of litmus files")
    watch.add_argument("--recursive", action="store_true")
    watch.add_argument("--max-steps", type=int, default=None)
    watch.add_argument("--strict-cas-read", action="store_true")

    subparsers.add_parser("status", parents=[common], help="Show version and bundled corpus")
    return parser


COMMANDS = {
    "run": cmd_run,
    "crash": cmd_crash,
    "check-invariant": cmd_check_invariant,
    "check-outline": cmd_check_outline,
    "test-rules": cmd_test_rules,
    "watch": cmd_watch,
    "status": cmd_status,
}


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for the CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        sys.exit(EXIT_PASS)

    log = utils.setup_logging("persist_check", args.verbose, args.log_file)
    if args.quiet:
        log.setLevel(logging.WARNING)

    try:
        code = COMMANDS[args.command](args)
    except PersistCheckError as e:
        logger.error(str(e))
        code = EXIT_ERROR
    except OSError as e:
        logger.error(f"Cannot read input: {e}")
        code = EXIT_ERROR
    except Exception:
        logger.exception(f"Unexpected error in {args.command}")
        code = EXIT_ERROR
    sys.exit(code)


if __name__ == "__main__":
    main()
