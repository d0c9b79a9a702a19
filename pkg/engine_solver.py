"""Best responses of one sensor against fixed rules of the others.

The dynamic program runs backwards over the sensor's reachable information
states (t, received messages, pi). Stopping costs are expectations of the
final system cost under the joint belief rho; continuing averages V_{t+1}
over the next messages (through sigma) and the next own observation.
"""
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

import util.misc as misc
from belief import SensorView, bayes_step, propagate_decisions
from engine_evaluate import CostReport, exact_expected_cost, trajectory_count
from models_detection import BLANK
from strategies import (ANY_MESSAGES, StrategyProfile, TabularStrategy, ThresholdStrategy, compile_profile,
                        format_messages, reachable_histories)
from util.errors import BudgetExceeded, ParameterOutOfRange

# pi keys of information states are rounded to this many decimals
PI_DECIMALS = 9
STATE_TOL = 1e-8
TIE_TOL = 1e-12


@dataclass(frozen=True)
class InfoState:
    t: int
    messages: tuple
    pi: float


def info_state(t, messages, pi):
    return InfoState(t, tuple(messages), round(float(pi), PI_DECIMALS))


def action_label(d):
    return 'continue' if d == BLANK else 'stop{}'.format(d)


@dataclass(frozen=True)
class ValueEntry:
    t: int
    messages: tuple
    pi: float
    weight: float
    value: float
    stop_costs: tuple
    continue_cost: Optional[float]
    action: int
    observations: Optional[tuple] = None

    @property
    def state(self):
        return info_state(self.t, self.messages, self.pi)

    def costs(self):
        """Per-action expected costs in tie-break order, continue last when available."""
        return self.stop_costs + (() if self.continue_cost is None else (self.continue_cost,))

    def optimal_actions(self, tol):
        best = min(self.costs())
        return {(a if a < len(self.stop_costs) else BLANK) for a, c in enumerate(self.costs()) if c <= best + tol}


class ValueTable(object):
    """V^i_t and the per-action costs at every reachable state of one sensor.

    Grouped tables key entries by InfoState; history tables by the private
    history (observations, messages).
    """

    def __init__(self, sensor, horizon, message_alphabet, grouped=True):
        self.sensor = sensor
        self.horizon = horizon
        self.message_alphabet = message_alphabet
        self.grouped = grouped
        self.entries = {t: {} for t in range(1, horizon + 1)}

    def add(self, key, entry):
        self.entries[entry.t][key] = entry

    def __iter__(self):
        for t in range(1, self.horizon + 1):
            yield from self.entries[t].values()

    def __len__(self):
        return sum(len(e) for e in self.entries.values())

    @property
    def root_value(self):
        """E[V_1] over the reachable states at t=1."""
        return math.fsum(e.weight * e.value for e in self.entries[1].values())

    def groups(self):
        """(t, messages) -> entries sorted by pi, one per distinct pi."""
        grouped = defaultdict(dict)
        for e in self:
            grouped[(e.t, e.messages)].setdefault(round(e.pi, PI_DECIMALS), e)
        return {k: [v[p] for p in sorted(v)] for k, v in sorted(grouped.items(), key=lambda kv: (kv[0][0], kv[0][1]))}

    def to_frame(self):
        M = self.message_alphabet
        rows = []
        for e in self:
            row = {'t': e.t, 'message_history': format_messages(e.messages), 'pi': e.pi, 'V': e.value}
            for d in range(M):
                row['cost_stop{}'.format(d)] = e.stop_costs[d]
            row['cost_continue'] = np.nan if e.continue_cost is None else e.continue_cost
            row['argmin'] = action_label(e.action)
            rows.append(row)
        columns = ['t', 'message_history', 'pi', 'V'] + ['cost_stop{}'.format(d) for d in range(M)] + \
            ['cost_continue', 'argmin']
        frame = pd.DataFrame(rows, columns=columns)
        return frame.sort_values(['t', 'message_history', 'pi'], kind='stable').reset_index(drop=True)


def value_series(table):
    """pi vs V per (t, message history), ready for plotting."""
    frame = table.to_frame()[['t', 'message_history', 'pi', 'V']]
    return frame.drop_duplicates(['t', 'message_history', 'pi']).reset_index(drop=True)


@dataclass(frozen=True)
class BestResponse:
    sensor: int
    strategy: TabularStrategy
    profile: StrategyProfile
    report: CostReport
    value: float
    table: Optional[ValueTable]
    method: str


class _ResponseProblem(object):
    """Sensor i against the (compiled) rules of the others."""

    def __init__(self, scenario, profile, sensor, budget=None):
        if not 0 <= sensor < scenario.n_sensors:
            raise ParameterOutOfRange("sensor {} does not exist".format(sensor + 1))
        size = trajectory_count(scenario)
        budget = misc.get_budget(budget)
        if size > budget:
            raise BudgetExceeded('best response of sensor {}'.format(sensor + 1), size, budget)
        self.scenario = scenario
        self.sensor = sensor
        self.T = scenario.horizon
        self.M = scenario.message_alphabet
        self.compiled = compile_profile(scenario, profile)
        self.view = SensorView(scenario, self.compiled, sensor)
        self.system_map = self.view.system_map
        self.forced_costs = self._forced_costs()
        self.prefix_costs = self._prefix_costs()

    def _forced_costs(self):
        """J(h, y^{-i}_{1:T}) for every first stop (t, d) of sensor i, as a (T, M) array."""
        scenario, i, T, M = self.scenario, self.sensor, self.T, self.M
        costs = {}
        for h in (0, 1):
            for others_obs, _ in self.view.prefixes(h, T):
                joint = [()] * scenario.n_sensors
                for j, seq in zip(self.view.others, others_obs):
                    joint[j] = seq
                J = np.empty((T, M))
                for t in range(1, T + 1):
                    for d in range(M):
                        own = (BLANK,) * (t - 1) + (d,) + (BLANK,) * (T - t)
                        trajectory = propagate_decisions(scenario, self.compiled, joint, T, forced={i: own})
                        taus = tuple(next(s for s, u in enumerate(seq, 1) if u != BLANK) for seq in trajectory)
                        decisions = tuple(seq[tau - 1] for seq, tau in zip(trajectory, taus))
                        J[t - 1, d] = scenario.cost(h, decisions, taus)
                costs[(h, others_obs)] = J
        return costs

    def _prefix_costs(self):
        """E[J | h, y^{-i}_{1:t}, first stop (t, d)] averaged over the others' future observations."""
        prefix_costs = {}
        for t in range(1, self.T + 1):
            acc = defaultdict(lambda: np.zeros(self.M))
            for h in (0, 1):
                prefix_prob = dict(self.view.prefixes(h, t))
                for others_obs, p in self.view.prefixes(h, self.T):
                    prefix = tuple(seq[:t] for seq in others_obs)
                    acc[(h, prefix)] += (p / prefix_prob[prefix]) * self.forced_costs[(h, others_obs)][t - 1]
            prefix_costs[t] = dict(acc)
        return prefix_costs

    def nodes(self, t):
        """Reachable private histories at t with joint weights P(H=h, history)."""
        scenario, obs = self.scenario, self.scenario.observations
        out = []
        for hist in reachable_histories(self.view, t):
            weights = tuple(scenario.prior_of(h) * obs.sequence_prob(self.sensor, h, hist.observations)
                            * self.view.compatible_mass(h, hist.messages) for h in (0, 1))
            if weights[0] + weights[1] > 0.0:
                out.append((hist, weights))
        return out

    def stop_costs(self, t, rho):
        total = np.zeros(self.M)
        for key, p in rho.items():
            total += p * self.prefix_costs[t][key]
        return tuple(float(c) for c in total)

    def choose(self, stop_costs, continue_cost):
        costs = stop_costs + (() if continue_cost is None else (continue_cost,))
        best = min(costs)
        action = next(a for a, c in enumerate(costs) if c <= best + TIE_TOL)
        return (BLANK if action == self.M else action), best

    def message_split(self, t, rho):
        """Next messages u_t -> (P(u_t, H=0), P(u_t, H=1)) under rho."""
        split = defaultdict(lambda: [0.0, 0.0])
        for (h, others_obs), p in rho.items():
            split[self.system_map.current(others_obs, t)][h] += p
        return split

    def solve_grouped(self):
        table = ValueTable(self.sensor, self.T, self.M, grouped=True)
        states = {t: {} for t in range(1, self.T + 1)}
        by_messages = defaultdict(list)
        self.node_states = {}
        for t in range(1, self.T + 1):
            for hist, (w0, w1) in self.nodes(t):
                pi = w0 / (w0 + w1)
                key = info_state(t, hist.messages, pi)
                if key not in states[t]:
                    states[t][key] = [pi, 0.0]
                    by_messages[(t, key.messages)].append(key)
                states[t][key][1] += w0 + w1
                self.node_states[hist.key()] = key

        def lookup(t, messages, pi):
            key = info_state(t, messages, pi)
            if key in states[t]:
                return key
            near = min(by_messages[(t, key.messages)], key=lambda k: abs(states[t][k][0] - pi))
            assert abs(states[t][near][0] - pi) <= STATE_TOL, (t, messages, pi)
            return near

        pmfs = self.scenario.observations.pmfs[self.sensor]
        for t in range(self.T, 0, -1):
            for key, (pi, weight) in states[t].items():
                rho = self.view.rho(pi, key.messages)
                stop = self.stop_costs(t, rho)
                cont = None
                if t < self.T:
                    terms = []
                    for u, (m0, m1) in self.message_split(t, rho).items():
                        mass = m0 + m1
                        s0 = m0 / mass
                        for y in range(pmfs.shape[2]):
                            p_y = s0 * pmfs[t, 0, y] + (1.0 - s0) * pmfs[t, 1, y]
                            if p_y <= 0.0:
                                continue
                            nxt = bayes_step(s0, y, pmfs[t, 0, y], pmfs[t, 1, y]).pi
                            child = table.entries[t + 1][lookup(t + 1, key.messages + (u,), nxt)]
                            terms.append(mass * p_y * child.value)
                    cont = math.fsum(terms)
                action, value = self.choose(stop, cont)
                table.add(key, ValueEntry(t, key.messages, pi, weight, value, stop, cont, action))
        return table

    def solve_histories(self):
        table = ValueTable(self.sensor, self.T, self.M, grouped=False)
        nodes = {t: {hist.key(): (hist, w) for hist, w in self.nodes(t)} for t in range(1, self.T + 1)}
        Y = self.scenario.alphabet_size(self.sensor)
        for t in range(self.T, 0, -1):
            for key, (hist, (w0, w1)) in nodes[t].items():
                pi = w0 / (w0 + w1)
                rho = self.view.rho(pi, hist.messages)
                stop = self.stop_costs(t, rho)
                cont = None
                if t < self.T:
                    terms = []
                    for u in self.message_split(t, rho):
                        for y in range(Y):
                            child_key = (hist.observations + (y,), hist.messages + (u,))
                            if child_key not in nodes[t + 1]:
                                continue
                            c0, c1 = nodes[t + 1][child_key][1]
                            terms.append((c0 + c1) / (w0 + w1) * table.entries[t + 1][child_key].value)
                    cont = math.fsum(terms)
                action, value = self.choose(stop, cont)
                table.add(key, ValueEntry(t, hist.messages, pi, w0 + w1, value, stop, cont, action,
                                          hist.observations))
        return table

    def respond(self, strategy, table, method, value, budget=None):
        name = '{}+br{}'.format(self.compiled.name, self.sensor + 1) if self.compiled.name else \
            'br{}'.format(self.sensor + 1)
        strategy.name = name
        profile = self.compiled.replace(self.sensor, strategy, name=name)
        report = exact_expected_cost(self.scenario, profile, budget)
        return BestResponse(self.sensor, strategy, profile, report, value, table, method)


def best_response(scenario, profile, sensor, group_info_states=True, budget=None):
    """Optimal rule of `sensor` when every other sensor keeps its rule.

    Rules of the others are compiled to tables first, so threshold rules are
    held fixed as functions of their histories. With group_info_states=False
    the program runs over private histories instead of information states.
    """
    problem = _ResponseProblem(scenario, profile, sensor, budget)
    strategy = TabularStrategy(sensor, scenario.horizon)
    if group_info_states:
        table = problem.solve_grouped()
        for hist_key, state in problem.node_states.items():
            entry = table.entries[state.t][state]
            strategy.set_key(state.t, hist_key, entry.action)
    else:
        table = problem.solve_histories()
        for t in range(1, scenario.horizon + 1):
            for hist_key, entry in table.entries[t].items():
                strategy.set_key(t, hist_key, entry.action)
    return problem.respond(strategy, table, 'dp', table.root_value, budget)


def brute_force_best_response(scenario, profile, sensor, budget=None, enumeration_budget=None):
    """Exhaustive search over the sensor's rules on its reachable histories.

    Candidates are ordered lexicographically over canonically ordered
    histories with actions stop-0 < stop-1 < ... < blank; the first candidate
    within TIE_TOL of the minimum wins.
    """
    problem = _ResponseProblem(scenario, profile, sensor, enumeration_budget)
    T, M = problem.T, problem.M
    nodes = [hist for t in range(1, T + 1) for hist, _ in problem.nodes(t)]
    radix = [M + 1 if hist.t < T else M for hist in nodes]
    count = math.prod(radix)
    budget = misc.get_budget(budget, default=misc.DEFAULT_BRUTE_FORCE_BUDGET, env_var=None)
    if count > budget:
        raise BudgetExceeded('brute-force rules of sensor {}'.format(sensor + 1), count, budget)

    index = {hist.key(): k for k, hist in enumerate(nodes)}
    candidates = np.arange(count, dtype=np.int64)
    digits = []
    stride = count
    for base in radix:
        stride //= base
        digits.append(((candidates // stride) % base).astype(np.int16))

    view, obs = problem.view, scenario.observations
    total = np.zeros(count)
    for h in (0, 1):
        for others_obs, p_others in view.prefixes(h, T):
            J = problem.forced_costs[(h, others_obs)]
            for own, p_own in obs.sequences(sensor, h, T):
                weight = scenario.prior_of(h) * p_others * p_own
                cost = np.zeros(count)
                undecided = np.ones(count, dtype=bool)
                for t in range(1, T + 1):
                    v = digits[index[(own[:t], view.system_map(others_obs, t - 1))]]
                    stop = undecided & (v < M)
                    cost[stop] = J[t - 1][v[stop]]
                    undecided &= ~stop
                total += weight * cost

    best = int(np.flatnonzero(total <= total.min() + TIE_TOL)[0])
    strategy = TabularStrategy(sensor, T)
    for k, hist in enumerate(nodes):
        v = int(digits[k][best])
        strategy.set_key(hist.t, hist.key(), v if v < M else BLANK)
    return problem.respond(strategy, None, 'brute_force', float(total[best]), enumeration_budget)


@dataclass(frozen=True)
class IterationResult:
    profile: StrategyProfile
    trace: tuple
    rounds: int
    converged: bool


def person_by_person(scenario, initial_profile, max_rounds=10, tol=1e-10, budget=None, verbose=False):
    """Cyclic best responses until a full round gains less than tol.

    The trace holds the exact cost before the first round and after every
    accepted replacement; it never increases.
    """
    if max_rounds < 1:
        raise ParameterOutOfRange("max_rounds must be >= 1")
    profile = compile_profile(scenario, initial_profile)
    cost = exact_expected_cost(scenario, profile, budget).expected_cost
    trace = [cost]
    metric_logger = misc.MetricLogger(delimiter="  ")
    rounds = range(max_rounds)
    if verbose:
        rounds = metric_logger.log_every(rounds, 1, header='Round:')
    converged, done = False, 0
    for _ in rounds:
        done += 1
        start = cost
        for i in range(scenario.n_sensors):
            response = best_response(scenario, profile, i, budget=budget)
            if response.report.expected_cost <= cost:
                profile = StrategyProfile(response.profile.strategies, initial_profile.name)
                cost = response.report.expected_cost
            trace.append(cost)
        metric_logger.update(cost=cost, gain=start - cost)
        if start - cost < tol:
            converged = True
            break
    return IterationResult(profile, tuple(trace), done, converged)


def _first_step_points(scenario, profile, sensor):
    compiled = compile_profile(scenario, profile)
    view = SensorView(scenario, compiled, sensor)
    pis = {round(view.posterior(hist).pi, PI_DECIMALS) for hist in reachable_histories(view, 1)}
    return sorted(pis)


def threshold_rule_sweep(scenario, profile, sensor=1, budget=None):
    """Exact cost of every two-threshold rule of `sensor` at t=1.

    Over the reachable pi at t=1 (ascending) the rule reads stop-1, blank,
    stop-0 in three possibly empty runs; from t=2 the sensor stops with 0.
    All other sensors best-respond once, in index order.
    """
    if scenario.horizon < 2:
        raise ParameterOutOfRange("the sweep needs a horizon of at least 2")
    points = _first_step_points(scenario, profile, sensor)
    k = len(points)
    rows = []
    for a in range(k + 1):
        for c in range(k - a + 1):
            d = k - a - c
            regions = {}
            if a:
                regions[1] = (points[0], points[a - 1])
            if d:
                regions[0] = (points[a + c], points[-1])
            entries = {(1, ANY_MESSAGES): regions}
            for t in range(2, scenario.horizon + 1):
                entries[(t, ANY_MESSAGES)] = {0: (0.0, 1.0)}
            label = '1' * a + 'b' * c + '0' * d
            rule = ThresholdStrategy(sensor, scenario.horizon, entries, name=label)
            current = compile_profile(scenario, profile.replace(sensor, rule, name=label))
            for j in range(scenario.n_sensors):
                if j != sensor:
                    current = best_response(scenario, current, j, budget=budget).profile
            report = exact_expected_cost(scenario, current, budget)
            rows.append({'rule': label,
                         'stop1_lo': regions.get(1, (np.nan,))[0], 'stop1_hi': regions.get(1, (np.nan, np.nan))[1],
                         'stop0_lo': regions.get(0, (np.nan,))[0], 'stop0_hi': regions.get(0, (np.nan, np.nan))[1],
                         'expected_cost': report.expected_cost})
    return pd.DataFrame(rows)
