"""
Command line entry point: `cfgkat equiv | check | dot | crosscheck`.

Exit codes: 0 equivalent or valid, 1 inequivalent or disagreeing, 2 usage,
parse or validity errors.
"""
import functools
import json
import logging
import sys
from typing import Optional, Tuple

import click

from config import CheckerConfig
from services.boolean import ContextSpace
from services.dot_export import write_dot_files
from services.driver import (
    SourceComparison, crosscheck, equiv, lift_pair, lower_all, pair_functions, select_functions,
)
from services.automata import add_start_state
from services.errors import CfgkatError
from services.frontend import SourceFunction, analyze_indicator_candidates, auto_blind, detect_indicator, lift_to_exp
from services.syntax import Exp, collect_alphabets, require_valid, validate
from services.thompson import thompson

logger = logging.getLogger('cfgkat')

EXIT_OK, EXIT_DIFFERENT, EXIT_ERROR = 0, 1, 2


def _read(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def _handle_errors(command):
    """Report checker failures with their location and exit 2."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except CfgkatError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_ERROR)
    return wrapper


def _lift_single(fn: SourceFunction, blind: bool) -> Tuple[Exp, Optional[str]]:
    rules = CheckerConfig.indicator_rules()
    if blind:
        _, fn, _ = auto_blind(fn, fn, rules)
    indicator = detect_indicator(fn, rules)
    return lift_to_exp(fn, indicator), indicator


@click.group()
@click.option('-v', '--verbose', is_flag=True, help='Log pipeline stages at DEBUG level')
def cli(verbose: bool):
    """Trace equivalence of C functions with goto, break, return and one indicator variable."""
    level = logging.DEBUG if verbose else getattr(logging, CheckerConfig.LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')


@cli.command('equiv')
@click.argument('file_a', type=click.Path(exists=True, dir_okay=False))
@click.argument('file_b', type=click.Path(exists=True, dir_okay=False))
@click.option('--fn', 'function', default=None, help='Only compare this function')
@click.option('--auto-blind', is_flag=True, help='Number opaque statements and conditions as pact/pbool')
@click.option('--json', 'as_json', is_flag=True, help='Emit the report as JSON')
@click.option('--max-tests', type=int, default=None, help='Cap on primitive tests (2^n atoms)')
@click.option('--workers', type=int, default=None, help='Threads for the per-indicator checks')
@click.option('--stage-log', type=click.Path(dir_okay=False), default=None, help='Append per-stage timings as JSON lines')
@click.option('--compare-labels', is_flag=True, hidden=True)
@_handle_errors
def cmd_equiv(file_a: str, file_b: str, function: Optional[str], auto_blind: bool, as_json: bool,
              max_tests: Optional[int], workers: Optional[int], stage_log: Optional[str], compare_labels: bool):
    """Check that functions paired by name have the same traces."""
    options = CheckerConfig.get_run_config('equiv')
    if max_tests is not None:
        options['max_tests'] = max_tests
    if workers is not None:
        options['workers'] = workers
    if stage_log is not None:
        options['stage_log'] = stage_log
    options['compare_labels'] = options['compare_labels'] or compare_labels
    rules = CheckerConfig.indicator_rules()

    pairs, unpaired = pair_functions(_read(file_a), _read(file_b), function)
    comparison = SourceComparison({}, unpaired)
    if not as_json:
        for name in unpaired:
            click.echo(f"warning: {name} is defined in only one file; skipped", err=True)

    for fn_a, fn_b in pairs:
        e, f, table = lift_pair(fn_a, fn_b, auto_blind, rules)
        alphabets = collect_alphabets(e, f)
        if not as_json:
            click.echo(f"{fn_a.name}: {len(alphabets.tests)} tests, {alphabets.atom_count} atoms, "
                       f"{len(alphabets.indicators)} indicator values")
        if table is not None:
            comparison.blinding[fn_a.name] = table.to_dict()
        comparison.reports[fn_a.name] = equiv(e, f, alphabets, function=fn_a.name, **options)

    if as_json:
        click.echo(comparison.to_json())
    else:
        for name, report in comparison.reports.items():
            if report.verdict:
                click.echo(f"{name}: equivalent")
                continue
            click.echo(f"{name}: NOT equivalent")
            value, verdict = report.first_counterexample() or (None, None)
            if verdict is not None:
                shown = verdict.to_dict(report.space.show_atom)
                click.echo(f"  start indicator {value}: {shown['description']}")
                click.echo(f"  counterexample: {shown['counterexample']}")
                click.echo(f"  witness (accepted by {'first' if verdict.accepted_by == 0 else 'second'}): "
                           f"{shown['witness']}")
    if not comparison.reports:
        click.echo("error: no function is defined in both files", err=True)
        sys.exit(EXIT_ERROR)
    sys.exit(EXIT_OK if comparison.verdict else EXIT_DIFFERENT)


@cli.command('check')
@click.argument('path', type=click.Path(exists=True, dir_okay=False))
@click.option('--fn', 'function', default=None, help='Only check this function')
@click.option('--auto-blind', is_flag=True, help='Number opaque statements and conditions as pact/pbool')
@click.option('--json', 'as_json', is_flag=True, help='Emit the results as JSON')
@_handle_errors
def cmd_check(path: str, function: Optional[str], auto_blind: bool, as_json: bool):
    """Parse and validate functions; report the indicator and the alphabets."""
    rules = CheckerConfig.indicator_rules()
    results = {}
    valid = True
    for name, fn in select_functions(_read(path), function).items():
        candidates = analyze_indicator_candidates(fn, rules)
        e, indicator = _lift_single(fn, auto_blind)
        report = validate(e)
        valid = valid and report.is_valid
        results[name] = {
            'valid': report.is_valid,
            'violations': report.to_dict(),
            'indicator': indicator,
            'candidates': [c.to_dict() for c in candidates],
            'alphabets': collect_alphabets(e, e).to_dict(),
        }

    if as_json:
        click.echo(json.dumps(results, indent=2, ensure_ascii=False))
    else:
        for name, result in results.items():
            click.echo(f"{name}: {'valid' if result['valid'] else 'INVALID'}")
            for violation in result['violations']['violations']:
                where = ":".join(map(str, violation["location"])) if violation["location"] else "?:?"
                click.echo(f"  {where}: {violation['message']}")
            click.echo(f"  indicator: {result['indicator'] or 'none'}")
            for candidate in result['candidates']:
                mark = 'chosen' if candidate['name'] == result['indicator'] else 'rejected'
                if candidate['qualifies'] and mark == 'rejected':
                    mark = 'qualifies, not chosen'
                click.echo(f"    {candidate['name']}: {mark} ({candidate['reason']})")
            alphabets = result['alphabets']
            for key in ('actions', 'tests', 'labels', 'indicators'):
                click.echo(f"  {key}: {', '.join(alphabets[key]) or '-'}")
            click.echo(f"  atoms: {alphabets['atoms']}")
    sys.exit(EXIT_OK if valid else EXIT_ERROR)


@cli.command('dot')
@click.argument('path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), required=True, help='Output folder')
@click.option('--fn', 'function', default=None, help='Only export this function')
@click.option('--auto-blind', is_flag=True, help='Number opaque statements and conditions as pact/pbool')
@click.option('--max-tests', type=int, default=None, help='Cap on primitive tests (2^n atoms)')
@_handle_errors
def cmd_dot(path: str, out_dir: str, function: Optional[str], auto_blind: bool, max_tests: Optional[int]):
    """Write <fn>.dot for the CF-GKAT automaton and <fn>.i<k>.dot per indicator value."""
    options = CheckerConfig.get_run_config('dot')
    if max_tests is not None:
        options['max_tests'] = max_tests
    for name, fn in select_functions(_read(path), function).items():
        e, _ = _lift_single(fn, auto_blind)
        require_valid(e)
        space = ContextSpace(collect_alphabets(e, e), options['max_tests'])
        A = thompson(e, space)
        lowered = lower_all(add_start_state(A), options['prune'])
        for written in write_dot_files(A, lowered, out_dir, name):
            click.echo(written)
    sys.exit(EXIT_OK)


@cli.command('crosscheck')
@click.argument('path', type=click.Path(exists=True, dir_okay=False))
@click.option('--bound', type=click.IntRange(min=0), default=None, help='Maximum actions per trace')
@click.option('--fn', 'function', default=None, help='Only check this function')
@click.option('--auto-blind', is_flag=True, help='Number opaque statements and conditions as pact/pbool')
@click.option('--max-tests', type=int, default=None, help='Cap on primitive tests (2^n atoms)')
@click.option('--mutate', is_flag=True, hidden=True)
@_handle_errors
def cmd_crosscheck(path: str, bound: Optional[int], function: Optional[str], auto_blind: bool,
                   max_tests: Optional[int], mutate: bool):
    """Compare the automaton pipeline with the denotational semantics up to a bound."""
    options = CheckerConfig.get_run_config('crosscheck')
    bound = options['bound'] if bound is None else bound
    max_tests = options['max_tests'] if max_tests is None else max_tests
    agree = True
    for name, fn in select_functions(_read(path), function).items():
        e, _ = _lift_single(fn, auto_blind)
        alphabets = collect_alphabets(e, e)
        result = crosscheck(e, bound, alphabets, mutate=mutate, max_tests=max_tests)
        agree = agree and result.agree
        if result.agree:
            click.echo(f"{name}: agree up to {bound} actions")
            continue
        shown = result.to_dict(ContextSpace(alphabets, max_tests).show_atom)['difference']
        click.echo(f"{name}: DISAGREE from indicator {shown['indicator']}")
        click.echo(f"  {shown['word']} only in the {shown['only_in']} language")
    sys.exit(EXIT_OK if agree else EXIT_DIFFERENT)


if __name__ == '__main__':
    cli()
