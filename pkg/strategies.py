"""Decision rules of the sensors.

A rule maps a sensor's private history (own observations, messages received
so far) to a decision: stop with a message in 0..M-1, or BLANK to continue.
Tabular rules look the history up; threshold rules look at the posterior pi
and the received message history and test closed intervals of [0, 1].
"""
import itertools
from dataclasses import dataclass

import numpy as np

from belief import PrivateHistory, SensorView, observation_posterior, propagate_decisions
from models_detection import BLANK, is_counterexample
from util.config import retrieve, to_float, to_int, to_list
from util.errors import (BlankAtHorizon, BudgetExceeded, ConfigError, ParameterOutOfRange, WrongScenario,
                         ZeroProbabilityHistory)
from util.misc import get_budget

# message history key that matches every history at its time step
ANY_MESSAGES = '*'
INTERVAL_TOL = 1e-12
PRESETS = ('ex1', 'ex2', 'non_threshold')


def parse_decision(value):
    """Decision symbol from a config value: an integer or 'b' for blank."""
    if isinstance(value, str) and value.strip().lower() in ('b', 'blank'):
        return BLANK
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError("not a decision: {!r}".format(value))


def format_decision(d):
    return 'b' if d == BLANK else str(d)


def format_messages(messages):
    """Canonical text form of a message history, e.g. "b,1|b,b"."""
    if messages == ANY_MESSAGES:
        return ANY_MESSAGES
    return '|'.join(','.join(format_decision(u) for u in step) for step in messages)


class TabularStrategy(object):
    """gamma^i_t as a table over private histories.

    Histories missing from the table get the default: BLANK for t < T and
    stop with 0 at t = T.
    """

    kind = 'tabular'

    def __init__(self, sensor, horizon, table=None, name=''):
        self.sensor = sensor
        self.horizon = horizon
        self.name = name
        self.table = {t: {} for t in range(1, horizon + 1)}
        for t, entries in (table or {}).items():
            for key, d in entries.items():
                self.set_key(t, key, d)

    def set_key(self, t, key, d):
        d = int(d)
        if not 1 <= t <= self.horizon:
            raise ParameterOutOfRange("time {} outside 1..{}".format(t, self.horizon))
        if d == BLANK and t == self.horizon:
            raise BlankAtHorizon("sensor {}: blank at t=T for history {}".format(self.sensor + 1, key))
        self.table[t][key] = d

    def default(self, t):
        return 0 if t == self.horizon else BLANK

    def set(self, hist, d):
        self.set_key(hist.t, hist.key(), d)

    def decide(self, hist, pi=None):
        return self.table[hist.t].get(hist.key(), self.default(hist.t))

    def __len__(self):
        return sum(len(entries) for entries in self.table.values())

    @classmethod
    def from_rule(cls, scenario, sensor, rule, name='', budget=None):
        """Tabulate `rule(hist)` over every history of the sensor."""
        strategy = cls(sensor, scenario.horizon, name=name)
        for t in range(1, scenario.horizon + 1):
            for hist in enumerate_histories(scenario, sensor, t, budget=budget):
                strategy.set(hist, rule(hist))
        return strategy


def _check_interval(interval, what):
    lo, hi = (to_float(v, what) for v in to_list(interval, what, 2))
    if not (0.0 <= lo <= hi <= 1.0):
        raise ParameterOutOfRange("{}: interval [{}, {}] must satisfy 0 <= lo <= hi <= 1".format(what, lo, hi))
    return lo, hi


class ThresholdStrategy(object):
    """Stop regions over pi per (t, received message history).

    `entries` maps (t, message history) to {decision: (lo, hi)}; the message
    history may be ANY_MESSAGES. Membership is closed on both ends and checked
    in the order stop-1, stop-0, then 2..M-1. Where no region contains pi the
    rule answers BLANK.
    """

    kind = 'threshold'

    def __init__(self, sensor, horizon, entries, name=''):
        self.sensor = sensor
        self.horizon = horizon
        self.name = name
        self.entries = {}
        for (t, messages), regions in entries.items():
            if not 1 <= t <= horizon:
                raise ParameterOutOfRange("time {} outside 1..{}".format(t, horizon))
            if messages != ANY_MESSAGES:
                messages = tuple(tuple(int(u) for u in step) for step in messages)
            what = "sensor {} t={} messages {}".format(sensor + 1, t, format_messages(messages))
            checked = {to_int(d, what): _check_interval(iv, what) for d, iv in regions.items()}
            if any(d < 0 for d in checked):
                raise ParameterOutOfRange("{}: only stop decisions take intervals".format(what))
            spans = sorted(checked.values())
            for (_, hi), (lo, _) in zip(spans, spans[1:]):
                if lo < hi:
                    raise ParameterOutOfRange("{}: stop intervals overlap".format(what))
            if t == horizon:
                reach = 0.0
                for lo, hi in spans:
                    if lo > reach + INTERVAL_TOL:
                        break
                    reach = max(reach, hi)
                if reach < 1.0 - INTERVAL_TOL:
                    raise BlankAtHorizon("{}: stop intervals do not cover [0, 1] at t=T".format(what))
            self.entries[(t, messages)] = checked

    def regions(self, t, messages):
        exact = self.entries.get((t, tuple(messages)))
        if exact is not None:
            return exact
        return self.entries.get((t, ANY_MESSAGES), {})

    def decide_pi(self, t, messages, pi):
        regions = self.regions(t, messages)
        for d in sorted(regions, key=lambda d: (d > 1, d != 1, d)):
            lo, hi = regions[d]
            if lo - INTERVAL_TOL <= pi <= hi + INTERVAL_TOL:
                return d
        if t == self.horizon:
            raise BlankAtHorizon("sensor {}: pi={} at t=T lies in no stop interval".format(self.sensor + 1, pi))
        return BLANK

    def decide(self, hist, pi=None):
        if pi is None:
            raise ValueError("threshold rule needs the posterior; compile the profile first")
        return self.decide_pi(hist.t, hist.messages, float(pi))

    def constant_decision(self, t, messages):
        """The decision at (t, messages) when it does not depend on pi, else None."""
        regions = self.regions(t, messages)
        if not regions:
            return BLANK if t < self.horizon else None
        cuts = sorted({0.0, 1.0} | {v for interval in regions.values() for v in interval})
        points = cuts + [(a + b) / 2.0 for a, b in zip(cuts, cuts[1:])]
        decisions = {self.decide_pi(t, messages, pi) for pi in points}
        return decisions.pop() if len(decisions) == 1 else None


class StrategyProfile(object):
    """One rule per sensor."""

    def __init__(self, strategies, name=''):
        self.strategies = tuple(strategies)
        self.name = name

    def __getitem__(self, i):
        return self.strategies[i]

    def __len__(self):
        return len(self.strategies)

    def __iter__(self):
        return iter(self.strategies)

    def replace(self, i, strategy, name=None):
        strategies = list(self.strategies)
        strategies[i] = strategy
        return StrategyProfile(strategies, self.name if name is None else name)

    def is_tabular(self):
        return all(isinstance(s, TabularStrategy) for s in self.strategies)

    def check(self, scenario):
        if len(self.strategies) != scenario.n_sensors:
            raise ConfigError("profile '{}' has {} rules for {} sensors".format(
                self.name, len(self.strategies), scenario.n_sensors))
        for i, s in enumerate(self.strategies):
            if s.horizon != scenario.horizon:
                raise ConfigError("rule of sensor {} has horizon {}, scenario has {}".format(
                    i + 1, s.horizon, scenario.horizon))


@dataclass(frozen=True)
class StoppingOutcome:
    taus: tuple
    decisions: tuple
    trajectory: tuple = ()

    def of(self, i):
        """(tau^i, U^i_{tau^i})."""
        return self.taus[i], self.decisions[i]


def decide(strategy, hist, pi=None, scenario=None, profile=None):
    """Decision of `strategy` on `hist`.

    A threshold rule without an explicit pi answers through the compiled
    profile in which it replaces its sensor's rule, so histories of
    probability 0 follow the off-path convention of `compile_profile`.
    """
    if isinstance(strategy, ThresholdStrategy) and pi is None:
        if scenario is None or profile is None:
            raise ValueError("threshold rule needs pi or the scenario and profile")
        compiled = compile_profile(scenario, profile.replace(strategy.sensor, strategy))
        return compiled[strategy.sensor].decide(hist)
    return strategy.decide(hist, pi)


def rollout(scenario, profile, joint_obs):
    """Run the message-passing dynamics on one joint observation sequence."""
    if len(joint_obs) != scenario.n_sensors:
        raise ParameterOutOfRange("joint observations cover {} sensors, scenario has {}".format(
            len(joint_obs), scenario.n_sensors))
    for j, seq in enumerate(joint_obs):
        if len(seq) != scenario.horizon or any(not 0 <= y < scenario.alphabet_size(j) for y in seq):
            raise ParameterOutOfRange("observations of sensor {} do not match the scenario".format(j + 1))
    if not profile.is_tabular():
        profile = compile_profile(scenario, profile)
    joint_obs = tuple(tuple(int(y) for y in seq) for seq in joint_obs)
    trajectory = propagate_decisions(scenario, profile, joint_obs, scenario.horizon)
    taus, decisions = [], []
    for seq in trajectory:
        tau = next(t for t, d in enumerate(seq, 1) if d != BLANK)
        taus.append(tau)
        decisions.append(seq[tau - 1])
    return StoppingOutcome(tuple(taus), tuple(decisions), tuple(tuple(seq) for seq in trajectory))


def _message_sequences(n_preds, length, message_alphabet):
    """Per-predecessor message columns: blank, or one stop symbol then blank."""
    column = [(BLANK,) * length]
    for s in range(length):
        for d in range(message_alphabet):
            column.append((BLANK,) * s + (d,) + (BLANK,) * (length - s - 1))
    for cols in itertools.product(column, repeat=n_preds):
        yield tuple(tuple(col[s] for col in cols) for s in range(length))


def enumerate_histories(scenario, sensor, t, budget=None):
    """Every private history of `sensor` at time t, in canonical order."""
    n_preds = len(scenario.predecessors(sensor))
    size = scenario.alphabet_size(sensor) ** t * (1 + (t - 1) * scenario.message_alphabet) ** n_preds
    budget = get_budget(budget)
    if size > budget:
        raise BudgetExceeded('histories of sensor {} at t={}'.format(sensor + 1, t), size, budget)
    message_histories = list(_message_sequences(n_preds, t - 1, scenario.message_alphabet))
    for obs in itertools.product(range(scenario.alphabet_size(sensor)), repeat=t):
        for messages in message_histories:
            yield PrivateHistory(sensor, obs, messages)


def reachable_histories(view, t):
    """Histories of the view's sensor at t with positive probability, given it stayed blank."""
    scenario = view.scenario
    found = set()
    for h in (0, 1):
        if scenario.prior_of(h) <= 0.0:
            continue
        messages = {view.system_map(y, t - 1) for y, _ in view.prefixes(h, t - 1)}
        for obs, _ in scenario.observations.sequences(view.sensor, h, t):
            for msgs in messages:
                found.add((obs, msgs))
    return [PrivateHistory(view.sensor, obs, msgs) for obs, msgs in sorted(found)]


def off_path_decision(scenario, rule, hist):
    """Decision of a threshold rule on a history of probability 0.

    The rule's own answer when it does not depend on pi there; otherwise the
    rule applied to the posterior of the own observations alone. A time-T
    history the rule leaves uncovered stops with 0.
    """
    d = rule.constant_decision(hist.t, hist.messages)
    if d is not None:
        return d
    pi = observation_posterior(scenario, hist.sensor, hist.observations).pi
    try:
        return rule.decide_pi(hist.t, hist.messages, pi)
    except BlankAtHorizon:
        return 0


def compile_profile(scenario, profile, budget=None):
    """Tabular profile that acts like `profile` on every history.

    Threshold rules are resolved time step by time step: pi at t only
    depends on the other rules at times before t. Histories of probability 0
    get `off_path_decision`, so a deviating sensor meets the same rule.
    """
    profile.check(scenario)
    if profile.is_tabular():
        return profile
    pending = [i for i, s in enumerate(profile) if not isinstance(s, TabularStrategy)]
    working = list(profile)
    for i in pending:
        working[i] = TabularStrategy(i, scenario.horizon, name=profile[i].name)
    compiled = StrategyProfile(working, profile.name)
    for t in range(1, scenario.horizon + 1):
        for i in pending:
            view = SensorView(scenario, compiled, i)
            for hist in enumerate_histories(scenario, i, t, budget=budget):
                try:
                    pi = view.posterior(hist).pi
                except ZeroProbabilityHistory:
                    d = off_path_decision(scenario, profile[i], hist)
                else:
                    d = profile[i].decide_pi(t, hist.messages, pi)
                working[i].set(hist, d)
    return compiled


def random_tabular_strategy(scenario, sensor, rng, stop_prob=0.5, name='random'):
    """Uniformly random stop symbols; before T the sensor stops with probability stop_prob."""
    strategy = TabularStrategy(sensor, scenario.horizon, name=name)
    M = scenario.message_alphabet
    for t in range(1, scenario.horizon + 1):
        for hist in enumerate_histories(scenario, sensor, t):
            if t < scenario.horizon and rng.random() >= stop_prob:
                strategy.set(hist, BLANK)
            else:
                strategy.set(hist, int(rng.integers(M)))
    return strategy


# --------------------------------------------------------------------------
# counterexample presets

def _received(hist):
    return hist.messages[0][0]


def _companion_ex1(hist):
    if hist.t == 1:
        return BLANK
    if hist.t == 2:
        return _received(hist)
    return hist.observations[2]


def _companion_ex2(hist):
    if hist.t == 1:
        return BLANK
    if hist.t == 2:
        # blank from sensor 2 never happens under this rule
        return BLANK if _received(hist) == 1 else 0
    return hist.observations[2]


def _companion_non_threshold(hist):
    if hist.t == 1:
        return BLANK
    if hist.t == 2:
        u = _received(hist)
        return BLANK if u == 0 else (1 if u == 1 else 0)
    return hist.observations[2]


_SENSOR2_FIRST_STEP = {
    'ex1': {1: (0.0, 0.0), 0: (1.0, 1.0)},
    'ex2': {1: (0.0, 0.75), 0: (1.0, 1.0)},
    'non_threshold': {1: (0.0, 0.0), 0: (0.25, 0.75)},
}

_COMPANIONS = {
    'ex1': _companion_ex1,
    'ex2': _companion_ex2,
    'non_threshold': _companion_non_threshold,
}


def preset_strategies(name, scenario):
    """Two-sensor profiles of the counterexample.

    Sensor 2 applies the named rule to pi at t=1 and stops with 0 at t=2.
    Sensor 1 stays blank at t=1, reacts to sensor 2's message at t=2 and
    otherwise reports its exact observation at t=3.
    """
    if name not in PRESETS:
        raise ConfigError("unknown preset rule '{}', expected one of {}".format(name, PRESETS))
    if not is_counterexample(scenario):
        raise WrongScenario("preset rule '{}' needs the counterexample scenario".format(name))
    T = scenario.horizon
    entries = {(1, ANY_MESSAGES): _SENSOR2_FIRST_STEP[name]}
    for t in range(2, T + 1):
        entries[(t, ANY_MESSAGES)] = {0: (0.0, 1.0)}
    sensor2 = ThresholdStrategy(1, T, entries, name=name)
    sensor1 = TabularStrategy.from_rule(scenario, 0, _COMPANIONS[name], name=name)
    return StrategyProfile((sensor1, sensor2), name)


# --------------------------------------------------------------------------
# config documents

def _messages_from_config(value):
    if value == ANY_MESSAGES or value is None:
        return ANY_MESSAGES
    return tuple(tuple(parse_decision(u) for u in to_list(step, 'message_history'))
                 for step in to_list(value, 'message_history'))


def _tabular_from_config(doc, scenario, sensor, name):
    strategy = TabularStrategy(sensor, scenario.horizon, name=name)
    for entry in to_list(retrieve(doc, 'entries', default=[]) or [], 'entries'):
        t = to_int(retrieve(entry, 't'), 't')
        messages = _messages_from_config(retrieve(entry, 'message_history', default=[]))
        if messages == ANY_MESSAGES:
            raise ConfigError("tabular entries need an explicit message history")
        try:
            hist = PrivateHistory(sensor, tuple(to_list(retrieve(entry, 'observations'), 'observations')), messages)
        except (TypeError, ValueError) as e:
            raise ConfigError("sensor {}: {}".format(sensor + 1, e))
        if hist.t != t:
            raise ConfigError("sensor {}: entry at t={} lists {} observations".format(sensor + 1, t, hist.t))
        strategy.set(hist, parse_decision(retrieve(entry, 'decision')))
    return strategy


def _threshold_from_config(doc, scenario, sensor, name):
    entries = {}
    for entry in to_list(retrieve(doc, 'entries'), 'entries'):
        t = to_int(retrieve(entry, 't'), 't')
        messages = _messages_from_config(retrieve(entry, 'message_history', default=ANY_MESSAGES))
        regions = {}
        for d in range(scenario.message_alphabet):
            interval = retrieve(entry, 'stop{}'.format(d), default=None)
            if interval is not None:
                regions[d] = tuple(to_list(interval, 'stop{} interval'.format(d), 2))
        entries[(t, messages)] = regions
    return ThresholdStrategy(sensor, scenario.horizon, entries, name=name)


def load_profile(document, scenario, name=''):
    """StrategyProfile from a strategy document.

    The document names a preset (`preset: ex1`) or lists one sub-document per
    sensor with `type` tabular, threshold or preset.
    """
    if isinstance(document, str):
        return preset_strategies(document, scenario)
    name = str(retrieve(document, 'name', default=name))
    preset = retrieve(document, 'preset', default=None)
    if preset is not None:
        profile = preset_strategies(preset, scenario)
        return StrategyProfile(profile.strategies, name or preset)
    sensors = to_list(retrieve(document, 'sensors'), 'sensors')
    if len(sensors) != scenario.n_sensors:
        raise ConfigError("strategy document has {} rules for {} sensors".format(len(sensors), scenario.n_sensors))
    strategies = []
    for i, doc in enumerate(sensors):
        kind = retrieve(doc, 'type')
        if kind == 'tabular':
            strategies.append(_tabular_from_config(doc, scenario, i, name))
        elif kind == 'threshold':
            strategies.append(_threshold_from_config(doc, scenario, i, name))
        elif kind == 'preset':
            strategies.append(preset_strategies(retrieve(doc, 'name'), scenario)[i])
        else:
            raise ConfigError("sensor {}: unknown strategy type '{}'".format(i + 1, kind))
    profile = StrategyProfile(strategies, name)
    profile.check(scenario)
    return profile


def random_profile(scenario, rng, stop_prob=0.5, name='random'):
    return StrategyProfile([random_tabular_strategy(scenario, i, rng, stop_prob, name)
                            for i in range(scenario.n_sensors)], name)


def seeded_rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def preset_closed_forms(K, r1):
    """Expected costs of the preset profiles when mistakes are never worth making."""
    return {
        'ex1': K + r1 + (1.0 - r1) * (K + 1.0),
        'ex2': K + 2.0 - r1 / 2.0,
        'non_threshold': K + 2.0 * (1.0 - r1) + r1 * (K + 1.0) / 2.0,
    }
