import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

import util.misc as misc
from engine_evaluate import compare_profiles, exact_expected_cost, monte_carlo_cost, reports_to_frame, \
    sample_trajectories
from engine_solver import (best_response, brute_force_best_response, person_by_person, threshold_rule_sweep,
                           value_series)
from models_detection import (DEFAULT_MU_FACTOR, SPECIAL_CASES, counterexample_scenario, is_counterexample,
                              load_scenario, max_operational_cost, random_scenario)
from strategies import (PRESETS, StrategyProfile, TabularStrategy, format_decision, load_profile, preset_closed_forms,
                        random_profile, rollout, seeded_rng)
from structure_checks import extract_intervals, verify_concavity, verify_info_state_sufficiency
from util.config import load_document, load_preset_params, retrieve, to_int, to_probability
from util.errors import ConfigError, CounterexampleMismatch, SigdetError, VerificationFailed

GOLDEN_TOL = 1e-10
ORACLE_TOL = 1e-10
# r1 below this makes the non-threshold rule strictly better
R1_CRITICAL = 2.0 / 3.0
GRID_K = (1.1, 1.5, 1.9)


def _scenario_args(parser):
    parser.add_argument('--preset', default='counterexample', type=str,
                        help='counterexample, no-comm, one-way, two-way, tree or random')
    parser.add_argument('--scenario', default=None, type=str,
                        help='scenario YAML file; overrides --preset')
    parser.add_argument('--params', default=None, type=str,
                        help='YAML file with parameter overrides for the preset')
    parser.add_argument('--K', default=None, type=float, help='counterexample: cost of both sensors active')
    parser.add_argument('--r1', default=None, type=str, help='counterexample: P(informative first observation)')
    parser.add_argument('--mu', default=None, type=float, help='mistake cost')
    parser.add_argument('--scenario_seed', default=0, type=int,
                        help='seed of the random preset')
    parser.add_argument('--budget', default=None, type=float,
                        help='enumeration budget (default: $SIGDET_BUDGET or 1e7)')
    parser.add_argument('--output', default=None, type=str,
                        help='CSV file for the main table, stdout when empty')
    parser.add_argument('--output_dir', default=None, type=str,
                        help='directory for auxiliary tables')
    parser.add_argument('--verbose', action='store_true')


def get_args_parser():
    parser = argparse.ArgumentParser('Sequential decentralized detection experiments')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    evaluate = commands.add_parser('evaluate', help='expected cost of strategy profiles')
    _scenario_args(evaluate)
    evaluate.add_argument('--profiles', default=','.join(PRESETS), type=str,
                          help='comma separated preset names, strategy YAML files, random or default')
    evaluate.add_argument('--method', default='exact', choices=['exact', 'mc'])
    evaluate.add_argument('--samples', default=100000, type=int)
    evaluate.add_argument('--seed', default=0, type=int)

    simulate = commands.add_parser('simulate', help='sampled trajectories of one profile')
    _scenario_args(simulate)
    simulate.add_argument('--profiles', default='non_threshold', type=str)
    simulate.add_argument('--samples', default=10, type=int)
    simulate.add_argument('--seed', default=0, type=int)

    respond = commands.add_parser('best-response', help='dynamic program for one sensor plus structural checks')
    _scenario_args(respond)
    respond.add_argument('--profiles', default=None, type=str,
                         help='profile the other sensors keep (default: non_threshold or default)')
    respond.add_argument('--sensor', default=1, type=int, help='1-based sensor index')
    respond.add_argument('--oracle', action='store_true', help='compare with exhaustive search')
    respond.add_argument('--iterate', default=0, type=int, help='person-by-person rounds afterwards')
    respond.add_argument('--seed', default=0, type=int)
    respond.add_argument('--tol', default=1e-10, type=float)

    iterate = commands.add_parser('iterate', help='person-by-person iteration')
    _scenario_args(iterate)
    iterate.add_argument('--profiles', default=None, type=str)
    iterate.add_argument('--rounds', default=10, type=int)
    iterate.add_argument('--tol', default=1e-10, type=float)
    iterate.add_argument('--seed', default=0, type=int)

    counter = commands.add_parser('counterexample', help='closed forms against enumeration')
    counter.add_argument('--K', default=1.5, type=float)
    counter.add_argument('--r1', default='0.4', type=str)
    counter.add_argument('--mu', default=100.0, type=float)
    counter.add_argument('--grid', action='store_true', help='sweep (K, r1) and emit the cost gap')
    counter.add_argument('--sweep', action='store_true', help='also run the two-threshold sweep')
    counter.add_argument('--budget', default=None, type=float)
    counter.add_argument('--output', default=None, type=str)
    counter.add_argument('--output_dir', default=None, type=str)
    counter.add_argument('--verbose', action='store_true')

    scenario = commands.add_parser('scenario', help='scenario utilities')
    scenario_commands = scenario.add_subparsers(dest='scenario_command', metavar='action')
    scenario_commands.required = True
    validate = scenario_commands.add_parser('validate', help='load a scenario and print its summary')
    _scenario_args(validate)

    return parser


def _budget(args):
    return None if args.budget is None else int(args.budget)


def _overrides(args):
    overrides = load_document(args.params) if args.params else {}
    for key in ('K', 'r1', 'mu'):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def build_scenario_from_args(args):
    if args.scenario:
        return load_scenario(args.scenario, _overrides(args) or None)
    if args.preset == 'random':
        params = load_document(args.params) if args.params else {}
        sizes = [to_int(retrieve(params, key, default=2), key)
                 for key in ('n_sensors', 'horizon', 'alphabet', 'message_alphabet')]
        return random_scenario(seeded_rng(args.scenario_seed), *sizes)
    return load_scenario(args.preset, _overrides(args) or None)


def _profile_from_reference(reference, scenario, seed):
    reference = reference.strip()
    if reference in PRESETS:
        return load_profile(reference, scenario)
    if reference == 'random':
        return random_profile(scenario, seeded_rng(seed))
    if reference == 'default':
        return StrategyProfile([TabularStrategy(i, scenario.horizon, name='default')
                                for i in range(scenario.n_sensors)], 'default')
    name = os.path.splitext(os.path.basename(reference))[0]
    return load_profile(load_document(reference), scenario, name=name)


def build_profiles(args, scenario, default=None):
    references = args.profiles or default or ('non_threshold' if is_counterexample(scenario) else 'default')
    profiles = [_profile_from_reference(ref, scenario, args.seed) for ref in references.split(',') if ref.strip()]
    if not profiles:
        raise ConfigError("no strategy profile given")
    for profile in profiles:
        profile.check(scenario)
    return profiles


def _save(frame, args, filename):
    """Write an auxiliary table into --output_dir; without one only the main table is written."""
    if args.output_dir:
        misc.write_csv(frame, os.path.join(args.output_dir, filename))


def cmd_evaluate(args):
    scenario = build_scenario_from_args(args)
    profiles = build_profiles(args, scenario)
    reports = []
    for profile in profiles:
        if args.method == 'exact':
            reports.append(exact_expected_cost(scenario, profile, _budget(args), progress=args.verbose))
        else:
            reports.append(monte_carlo_cost(scenario, profile, args.samples, args.seed, progress=args.verbose))
        if args.verbose:
            print('{}: {:.12g}'.format(profile.name, reports[-1].expected_cost), file=sys.stderr)
    misc.write_csv(reports_to_frame(reports), args.output)
    if args.method == 'exact' and len(profiles) > 1 and args.output_dir:
        _save(compare_profiles(scenario, profiles, _budget(args)), args, 'ranking.csv')
    return 0


def cmd_simulate(args):
    scenario = build_scenario_from_args(args)
    profile = build_profiles(args, scenario)[0]
    rng = np.random.Generator(np.random.Philox(args.seed))
    h, observations = sample_trajectories(scenario, args.samples, rng)
    rows = []
    for k in range(args.samples):
        joint_obs = tuple(tuple(int(y) for y in obs[k]) for obs in observations)
        outcome = rollout(scenario, profile, joint_obs)
        operational, terminal = scenario.costs.split(int(h[k]), outcome.decisions, outcome.taus, scenario.horizon)
        rows.append({
            'sample': k,
            'h': int(h[k]),
            'observations': '|'.join(''.join(str(y) for y in seq) for seq in joint_obs),
            'taus': ' '.join(str(tau) for tau in outcome.taus),
            'decisions': ' '.join(format_decision(d) for d in outcome.decisions),
            'operational': operational,
            'terminal': terminal,
            'cost': operational + terminal,
        })
    misc.write_csv(pd.DataFrame(rows), args.output)
    return 0


def _structure_checks(scenario, profile, sensor, response, args):
    history = best_response(scenario, profile, sensor, group_info_states=False, budget=_budget(args))
    reports = [verify_concavity(response.table), extract_intervals(response.table),
               verify_info_state_sufficiency(history.table)]
    for report in reports:
        verdict = 'pass' if report.passed else 'FAIL'
        print('{}: {} ({}; {} violations)'.format(report.check, verdict, report.scope, len(report.violations)),
              file=sys.stderr)
        for violation in report.violations[:5]:
            print('  t={} {}'.format(violation.t, violation.detail), file=sys.stderr)
    _save(pd.concat([r.to_frame() for r in reports], ignore_index=True), args, 'structure.csv')
    return reports


def cmd_best_response(args):
    scenario = build_scenario_from_args(args)
    profile = build_profiles(args, scenario)[0]
    sensor = args.sensor - 1
    if not 0 <= sensor < scenario.n_sensors:
        raise ConfigError("--sensor must lie in 1..{}".format(scenario.n_sensors))
    response = best_response(scenario, profile, sensor, budget=_budget(args))
    print('sensor {}: DP value {:.17g}, profile cost {:.17g}'.format(
        args.sensor, response.value, response.report.expected_cost), file=sys.stderr)
    misc.write_csv(response.table.to_frame(), args.output)
    _save(value_series(response.table), args, 'value_series.csv')
    reports = _structure_checks(scenario, profile, sensor, response, args)
    failed = [r.check for r in reports if not r.passed]

    if args.oracle:
        oracle = brute_force_best_response(scenario, profile, sensor, budget=_budget(args),
                                           enumeration_budget=_budget(args))
        diff = abs(oracle.value - response.value)
        _save(pd.DataFrame([{'sensor': args.sensor, 'dp_value': response.value,
                             'brute_force_value': oracle.value, 'difference': diff}]), args, 'oracle.csv')
        if diff > ORACLE_TOL:
            failed.append('oracle')

    if args.iterate > 0:
        result = person_by_person(scenario, response.profile, args.iterate, args.tol, _budget(args), args.verbose)
        _save(pd.DataFrame({'step': np.arange(len(result.trace)), 'cost': result.trace}), args, 'trace.csv')

    if failed:
        raise VerificationFailed("structural checks failed: {}".format(', '.join(failed)))
    return 0


def cmd_iterate(args):
    scenario = build_scenario_from_args(args)
    profile = build_profiles(args, scenario)[0]
    result = person_by_person(scenario, profile, args.rounds, args.tol, _budget(args), args.verbose)
    print('rounds: {}, converged: {}, final cost {:.17g}'.format(
        result.rounds, result.converged, result.trace[-1]), file=sys.stderr)
    misc.write_csv(pd.DataFrame({'step': np.arange(len(result.trace)), 'cost': result.trace}), args.output)
    return 0


def counterexample_rows(K, r1, mu, budget=None):
    scenario = counterexample_scenario(K, r1, mu)
    closed = preset_closed_forms(K, r1)
    rows = []
    for name in PRESETS:
        exact = exact_expected_cost(scenario, load_profile(name, scenario), budget).expected_cost
        rows.append({'K': K, 'r1': r1, 'profile': name, 'closed_form': closed[name], 'exact': exact,
                     'difference': exact - closed[name]})
    return scenario, pd.DataFrame(rows)


def _verdict(frame, r1):
    costs = dict(zip(frame['profile'], frame['exact']))
    gap = min(costs['ex1'], costs['ex2']) - costs['non_threshold']
    if r1 < R1_CRITICAL:
        return gap, 'non-threshold strictly better' if gap > 1e-12 else 'NO STRICT IMPROVEMENT'
    return gap, 'no strict improvement required'


def cmd_counterexample(args):
    r1 = to_probability(args.r1)
    if args.grid:
        frames = []
        for K in GRID_K:
            for r in np.round(np.linspace(0.05, 0.95, 19), 10):
                _, frame = counterexample_rows(K, float(r), args.mu, _budget(args))
                gap, _ = _verdict(frame, float(r))
                frames.append(frame.assign(gap=gap))
        table = pd.concat(frames, ignore_index=True)
    else:
        scenario, table = counterexample_rows(args.K, r1, args.mu, _budget(args))
        gap, verdict = _verdict(table, r1)
        print('K={} r1={} mu={}: gap {:.17g}, {}'.format(args.K, r1, args.mu, gap, verdict), file=sys.stderr)
        if args.sweep:
            sweep = threshold_rule_sweep(scenario, load_profile('ex1', scenario), 1, _budget(args))
            print('best two-threshold rule: {} at {:.17g}'.format(
                sweep.loc[sweep['expected_cost'].idxmin(), 'rule'], sweep['expected_cost'].min()), file=sys.stderr)
            _save(sweep, args, 'sweep.csv')
    misc.write_csv(table, args.output)
    worst = float(table['difference'].abs().max())
    if worst >= GOLDEN_TOL:
        raise CounterexampleMismatch("enumeration differs from the closed forms by {:.3g}".format(worst))
    return 0


def _mu_derived(args):
    """True when the terminal cost falls back to the default mistake cost."""
    if args.scenario:
        params = retrieve(load_document(args.scenario), 'cost/terminal/params', default={}) or {}
        form = retrieve(load_document(args.scenario), 'cost/terminal/form', default=None)
        if form == 'table':
            return False
    elif args.preset in SPECIAL_CASES:
        params = load_preset_params(args.preset, _overrides(args) or None)
    else:
        return False
    return params.get('mu') is None and params.get('decision_costs') is None


def cmd_scenario_validate(args):
    scenario = build_scenario_from_args(args)
    summary = scenario.summary()
    if _mu_derived(args):
        n, T = scenario.n_sensors, scenario.horizon
        summary['default_mu'] = DEFAULT_MU_FACTOR * max_operational_cost(scenario.costs.operational, n, T)
    sys.stdout.write(json.dumps(summary, indent=2, default=str) + "\n")
    return 0


COMMANDS = {
    'evaluate': cmd_evaluate,
    'simulate': cmd_simulate,
    'best-response': cmd_best_response,
    'iterate': cmd_iterate,
    'counterexample': cmd_counterexample,
    'scenario': cmd_scenario_validate,
}


def main(args):
    if getattr(args, 'output_dir', None):
        Path(args.output_dir).mkdir(parents=True, exist_ok=True)
    if getattr(args, 'verbose', False):
        print("{}".format(args).replace(', ', ',\n'), file=sys.stderr)
    return COMMANDS[args.command](args)


def cli(argv=None):
    misc.setup_for_printing()
    args = get_args_parser().parse_args(argv)
    try:
        return main(args)
    except SigdetError as e:
        print('error: {}'.format(e), file=sys.stderr)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(cli())
