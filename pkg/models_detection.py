"""Problem instances for sequential decentralized binary detection.

A scenario fixes the prior on H, the horizon T, each sensor's finite
observation pmfs f^i_t(y|h), the directed communication graph and the
system cost J = O(stopping times) + A(H, decisions, stopping times).

Sensors are 0-based here; configuration documents use 1-based labels.
"""
import itertools
from dataclasses import dataclass, field
from typing import ClassVar, Mapping

import numpy as np

from util.config import load_document, load_preset_params, retrieve, to_float, to_int, to_list, to_probability
from util.errors import (ConfigError, CostTableIncomplete, GraphInconsistent, InvalidPrior,
                         ParameterOutOfRange, PmfNotNormalized)

BLANK = -1
PMF_TOL = 1e-12
# "sufficiently high" mistake cost when a config leaves mu out
DEFAULT_MU_FACTOR = 100.0


def _frozen_array(values, dtype=np.float64):
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def _check_cost_values(values, what):
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)) or (values < 0).any():
        raise ParameterOutOfRange("{}: cost parameters must be finite and >= 0".format(what))


@dataclass(frozen=True, eq=False)
class ObservationModel:
    """Per sensor an array of shape (T, 2, |Y^i|) holding f^i_t(y|h)."""
    pmfs: tuple
    _sequences: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        frozen = []
        for i, pmf in enumerate(self.pmfs):
            try:
                arr = np.array(pmf, dtype=np.float64)
            except (TypeError, ValueError):
                raise PmfNotNormalized("sensor {}: pmf is not a (T, 2, |Y|) array of numbers".format(i + 1))
            if arr.ndim != 3 or arr.shape[0] == 0 or arr.shape[1] != 2 or arr.shape[2] == 0:
                raise PmfNotNormalized("sensor {}: pmf must have shape (T, 2, |Y|), got {}".format(i + 1, arr.shape))
            if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
                raise PmfNotNormalized("sensor {}: probabilities must lie in [0, 1]".format(i + 1))
            bad = np.abs(arr.sum(axis=2) - 1.0) > PMF_TOL
            if bad.any():
                t, h = np.argwhere(bad)[0]
                raise PmfNotNormalized("sensor {}: f_{}(.|H={}) sums to {!r}".format(
                    i + 1, t + 1, h, float(arr[t, h].sum())))
            arr.setflags(write=False)
            frozen.append(arr)
        if not frozen:
            raise GraphInconsistent("at least one sensor is required")
        if len({a.shape[0] for a in frozen}) > 1:
            raise PmfNotNormalized("sensors disagree on the number of time steps")
        object.__setattr__(self, 'pmfs', tuple(frozen))

    @property
    def n_sensors(self):
        return len(self.pmfs)

    @property
    def horizon(self):
        return self.pmfs[0].shape[0]

    def alphabet_size(self, i):
        return self.pmfs[i].shape[2]

    def prob(self, i, t, y, h):
        return self.pmfs[i][t - 1, h, y]

    def sequences(self, i, h, length):
        """Positive-probability observation sequences y_{1:length} of sensor i under H=h."""
        key = (i, h, length)
        if key not in self._sequences:
            seqs = [((), 1.0)]
            pmf = self.pmfs[i]
            for t in range(length):
                seqs = [(s + (y,), p * pmf[t, h, y])
                        for s, p in seqs for y in range(pmf.shape[2]) if pmf[t, h, y] > 0.0]
            self._sequences[key] = seqs
        return self._sequences[key]

    def sequence_prob(self, i, h, seq):
        p = 1.0
        for t, y in enumerate(seq):
            p *= self.pmfs[i][t, h, y]
        return p


@dataclass(frozen=True)
class CommGraph:
    n_sensors: int
    edges: frozenset
    _preds: tuple = field(default=(), init=False, repr=False, compare=False)
    _succs: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        for a, b in edges:
            if not (0 <= a < self.n_sensors and 0 <= b < self.n_sensors):
                raise GraphInconsistent("edge ({}, {}) references an unknown sensor".format(a + 1, b + 1))
            if a == b:
                raise GraphInconsistent("self-loop at sensor {}".format(a + 1))
        object.__setattr__(self, 'edges', edges)
        object.__setattr__(self, '_preds', tuple(
            tuple(sorted(a for a, b in edges if b == i)) for i in range(self.n_sensors)))
        object.__setattr__(self, '_succs', tuple(
            tuple(sorted(b for a, b in edges if a == i)) for i in range(self.n_sensors)))

    def predecessors(self, i):
        """P(i): sensors whose final decisions sensor i receives."""
        return self._preds[i]

    def successors(self, i):
        return self._succs[i]


def active_set(taus, t):
    """A_t = {j : tau^j >= t}."""
    return frozenset(j for j, tau in enumerate(taus) if tau >= t)


def _mask(sensors):
    m = 0
    for j in sensors:
        m |= 1 << j
    return m


# --------------------------------------------------------------------------
# operational costs

@dataclass(frozen=True)
class LinearOperationalCost:
    form: ClassVar[str] = 'linear'
    rates: tuple

    def __call__(self, taus, horizon):
        return float(sum(c * tau for c, tau in zip(self.rates, taus)))

    def check(self, n_sensors, message_alphabet, horizon):
        if len(self.rates) != n_sensors:
            raise CostTableIncomplete("linear cost lists {} rates for {} sensors".format(len(self.rates), n_sensors))
        _check_cost_values(self.rates, 'linear')

    @classmethod
    def from_params(cls, params, n_sensors):
        costs = to_list(retrieve(params, 'costs'), 'linear costs')
        return cls(tuple(to_float(c, 'linear costs') for c in costs))

    def describe(self):
        return {'form': self.form, 'costs': list(self.rates)}


@dataclass(frozen=True)
class ActiveSetOperationalCost:
    """O = sum_t c(A_t), with c stored by bitmask of the active set."""
    form: ClassVar[str] = 'active_set'
    table: tuple

    def cost_of(self, sensors):
        return self.table[_mask(sensors)]

    def __call__(self, taus, horizon):
        total = 0.0
        for t in range(1, horizon + 1):
            total += self.table[_mask(active_set(taus, t))]
        return total

    def check(self, n_sensors, message_alphabet, horizon):
        if len(self.table) != 2 ** n_sensors:
            raise CostTableIncomplete("active-set table needs {} subsets, has {}".format(2 ** n_sensors, len(self.table)))
        _check_cost_values(self.table, 'active_set')

    @classmethod
    def from_params(cls, params, n_sensors):
        table = [None] * (2 ** n_sensors)
        for entry in to_list(retrieve(params, 'table'), 'active-set table'):
            listed = to_list(retrieve(entry, 'sensors'), 'active-set sensors')
            sensors = [to_int(s, 'active-set sensors') - 1 for s in listed]
            if any(not 0 <= s < n_sensors for s in sensors):
                raise CostTableIncomplete("active-set entry {} names an unknown sensor".format(entry))
            table[_mask(sensors)] = to_float(retrieve(entry, 'cost'), 'active-set cost')
        missing = [m for m, c in enumerate(table) if c is None]
        if missing:
            names = [[j + 1 for j in range(n_sensors) if m >> j & 1] for m in missing]
            raise CostTableIncomplete("active-set table misses subsets {}".format(names))
        return cls(tuple(table))

    def describe(self):
        return {'form': self.form, 'table': list(self.table)}


# --------------------------------------------------------------------------
# terminal costs

def _decision_costs(params, message_alphabet, default_mu):
    """a(h, d): an explicit 2 x M table or mu * 1{d != h}."""
    table = retrieve(params, 'decision_costs', default=None)
    if table is not None:
        return _frozen_array([[to_float(v, 'decision_costs') for v in to_list(row, 'decision_costs')]
                              for row in to_list(table, 'decision_costs', 2)])
    mu = retrieve(params, 'mu', default=None)
    mu = default_mu if mu is None else to_float(mu, 'mu')
    if mu is None:
        raise ConfigError("terminal cost needs 'mu' or 'decision_costs'")
    if not mu > 0:
        raise ParameterOutOfRange("mu must be > 0, got {}".format(mu))
    return mistake_costs(mu, message_alphabet)


def mistake_costs(mu, message_alphabet=2):
    return _frozen_array([[0.0 if d == h else mu for d in range(message_alphabet)] for h in (0, 1)])


def _check_decision_costs(costs, message_alphabet):
    if costs.shape != (2, message_alphabet):
        raise CostTableIncomplete("decision cost table must have shape (2, {}), got {}".format(message_alphabet, costs.shape))
    _check_cost_values(costs, 'decision costs')


@dataclass(frozen=True, eq=False)
class LastStopperTerminalCost:
    """a(H, decision of the sensor that stops last); ties go to the lower index."""
    form: ClassVar[str] = 'last_stopper'
    decision_costs: np.ndarray

    def __call__(self, h, decisions, taus):
        last = max(range(len(taus)), key=lambda j: (taus[j], -j))
        return self.decision_costs[h, decisions[last]]

    def check(self, n_sensors, message_alphabet, horizon):
        _check_decision_costs(self.decision_costs, message_alphabet)

    @classmethod
    def from_params(cls, params, n_sensors, message_alphabet, default_mu=None):
        return cls(_decision_costs(params, message_alphabet, default_mu))

    def describe(self):
        return {'form': self.form, 'decision_costs': self.decision_costs.tolist()}


@dataclass(frozen=True, eq=False)
class FusionTerminalCost:
    """A(H, U^s): only the designated fusion sensor's decision is scored."""
    form: ClassVar[str] = 'fusion'
    sensor: int
    decision_costs: np.ndarray

    def __call__(self, h, decisions, taus):
        return self.decision_costs[h, decisions[self.sensor]]

    def check(self, n_sensors, message_alphabet, horizon):
        if not 0 <= self.sensor < n_sensors:
            raise CostTableIncomplete("fusion sensor {} does not exist".format(self.sensor + 1))
        _check_decision_costs(self.decision_costs, message_alphabet)

    @classmethod
    def from_params(cls, params, n_sensors, message_alphabet, default_mu=None):
        sensor = to_int(retrieve(params, 'sensor', default=1), 'fusion sensor') - 1
        return cls(sensor, _decision_costs(params, message_alphabet, default_mu))

    def describe(self):
        return {'form': self.form, 'sensor': self.sensor + 1, 'decision_costs': self.decision_costs.tolist()}


@dataclass(frozen=True, eq=False)
class TableTerminalCost:
    """A(h, U^1..U^N) or A(h, U^1..U^N, tau^1..tau^N) as a dense array."""
    form: ClassVar[str] = 'table'
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'table', _frozen_array(self.table))

    def __call__(self, h, decisions, taus):
        index = (h,) + tuple(decisions)
        if self.table.ndim > 1 + len(decisions):
            index += tuple(tau - 1 for tau in taus)
        return self.table[index]

    def check(self, n_sensors, message_alphabet, horizon):
        shape = self.table.shape
        with_times = (2,) + (message_alphabet,) * n_sensors + (horizon,) * n_sensors
        without_times = (2,) + (message_alphabet,) * n_sensors
        if shape not in (with_times, without_times):
            raise CostTableIncomplete("terminal table has shape {}, expected {} or {}".format(
                shape, without_times, with_times))
        _check_cost_values(self.table, 'terminal table')

    @classmethod
    def from_params(cls, params, n_sensors, message_alphabet, default_mu=None):
        try:
            return cls(np.array(retrieve(params, 'table'), dtype=np.float64))
        except (TypeError, ValueError) as e:
            raise CostTableIncomplete("terminal table is not a numeric array: {}".format(e))

    def describe(self):
        return {'form': self.form, 'shape': list(self.table.shape)}


OPERATIONAL_FORMS = {
    'linear': LinearOperationalCost,
    'active_set': ActiveSetOperationalCost,
}

TERMINAL_FORMS = {
    'last_stopper': LastStopperTerminalCost,
    'fusion': FusionTerminalCost,
    'table': TableTerminalCost,
}


@dataclass(frozen=True)
class CostSpec:
    operational: object
    terminal: object

    def check(self, n_sensors, message_alphabet, horizon):
        self.operational.check(n_sensors, message_alphabet, horizon)
        self.terminal.check(n_sensors, message_alphabet, horizon)

    def split(self, h, decisions, taus, horizon):
        """(operational, terminal) parts of J."""
        return float(self.operational(taus, horizon)), float(self.terminal(h, decisions, taus))


def max_operational_cost(operational, n_sensors, horizon):
    return max(operational(taus, horizon)
               for taus in itertools.product(range(1, horizon + 1), repeat=n_sensors))


# --------------------------------------------------------------------------
# scenario

@dataclass(frozen=True, eq=False)
class Scenario:
    prior: float
    horizon: int
    observations: ObservationModel
    graph: CommGraph
    costs: CostSpec
    message_alphabet: int = 2
    name: str = ''

    def __post_init__(self):
        if not (isinstance(self.prior, (float, int)) and 0.0 < self.prior < 1.0):
            raise InvalidPrior("prior P(H=0) must lie in (0, 1), got {!r}".format(self.prior))
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ParameterOutOfRange("horizon must be a positive integer, got {!r}".format(self.horizon))
        if int(self.message_alphabet) != self.message_alphabet or self.message_alphabet < 2:
            raise ParameterOutOfRange("message alphabet must have at least 2 symbols")
        if self.observations.horizon != self.horizon:
            raise PmfNotNormalized("pmfs cover {} time steps, horizon is {}".format(
                self.observations.horizon, self.horizon))
        if self.graph.n_sensors != self.observations.n_sensors:
            raise GraphInconsistent("graph has {} sensors, observation model has {}".format(
                self.graph.n_sensors, self.observations.n_sensors))
        self.costs.check(self.n_sensors, self.message_alphabet, self.horizon)

    @property
    def n_sensors(self):
        return self.observations.n_sensors

    def prior_of(self, h):
        return self.prior if h == 0 else 1.0 - self.prior

    def predecessors(self, i):
        return self.graph.predecessors(i)

    def alphabet_size(self, i):
        return self.observations.alphabet_size(i)

    def cost(self, h, decisions, taus):
        operational, terminal = self.costs.split(h, decisions, taus, self.horizon)
        return operational + terminal

    def summary(self):
        return {
            'name': self.name,
            'sensors': self.n_sensors,
            'horizon': self.horizon,
            'prior': self.prior,
            'message_alphabet': self.message_alphabet,
            'alphabets': [self.alphabet_size(i) for i in range(self.n_sensors)],
            'edges': sorted([a + 1, b + 1] for a, b in self.graph.edges),
            'operational': self.costs.operational.describe(),
            'terminal': self.costs.terminal.describe(),
        }


def total_cost(scenario, h, decisions):
    """J(h, {(U^i, tau^i)}) for per-sensor (final decision, stopping time) pairs.

    `decisions` is a mapping sensor -> (decision, tau), a sequence of pairs,
    or an outcome exposing `decisions` and `taus`.
    """
    if hasattr(decisions, 'taus'):
        us, taus = tuple(decisions.decisions), tuple(decisions.taus)
    else:
        if isinstance(decisions, Mapping):
            pairs = [decisions[j] for j in range(scenario.n_sensors)]
        else:
            pairs = list(decisions)
        us = tuple(int(d) for d, _ in pairs)
        taus = tuple(int(tau) for _, tau in pairs)
    if len(taus) != scenario.n_sensors:
        raise ParameterOutOfRange("expected {} sensors, got {}".format(scenario.n_sensors, len(taus)))
    for d, tau in zip(us, taus):
        if not 1 <= tau <= scenario.horizon or not 0 <= d < scenario.message_alphabet:
            raise ParameterOutOfRange("invalid (decision, tau) = ({}, {})".format(d, tau))
    return scenario.cost(int(h), us, taus)


# --------------------------------------------------------------------------
# builders

def _read_pmfs(sensor_pmfs, horizon, label):
    what = '{} pmf'.format(label)
    pmf = [[[to_probability(p) for p in to_list(row, what)] for row in to_list(step, what)]
           for step in to_list(sensor_pmfs, what)]
    if len(pmf) == 1 and horizon > 1:
        pmf = pmf * horizon
    if len(pmf) != horizon:
        raise PmfNotNormalized("{}: {} pmf steps for horizon {}".format(label, len(pmf), horizon))
    for step in pmf:
        if len(step) != 2 or len(step[0]) != len(step[1]):
            raise PmfNotNormalized("{}: each step needs two rows of equal length".format(label))
    return pmf


def _build_costs(cost_doc, n_sensors, message_alphabet, horizon):
    op_form = retrieve(cost_doc, 'operational/form')
    if op_form not in OPERATIONAL_FORMS:
        raise ConfigError("unknown operational form '{}', expected one of {}".format(op_form, sorted(OPERATIONAL_FORMS)))
    operational = OPERATIONAL_FORMS[op_form].from_params(retrieve(cost_doc, 'operational/params', default={}), n_sensors)
    operational.check(n_sensors, message_alphabet, horizon)

    term_form = retrieve(cost_doc, 'terminal/form')
    if term_form not in TERMINAL_FORMS:
        raise ConfigError("unknown terminal form '{}', expected one of {}".format(term_form, sorted(TERMINAL_FORMS)))
    default_mu = DEFAULT_MU_FACTOR * max_operational_cost(operational, n_sensors, horizon)
    default_mu = default_mu if default_mu > 0 else DEFAULT_MU_FACTOR
    terminal = TERMINAL_FORMS[term_form].from_params(retrieve(cost_doc, 'terminal/params', default={}),
                                                     n_sensors, message_alphabet, default_mu)
    return CostSpec(operational, terminal)


def build_scenario(config):
    """Validated Scenario from a key/value tree (a loaded YAML document)."""
    prior = to_probability(retrieve(config, 'prior'))
    if not 0.0 < prior < 1.0:
        raise InvalidPrior("prior P(H=0) must lie in (0, 1), got {!r}".format(prior))
    horizon = to_int(retrieve(config, 'horizon'), 'horizon')
    if horizon < 1:
        raise ParameterOutOfRange("horizon must be >= 1")
    message_alphabet = to_int(retrieve(config, 'message_alphabet', default=2), 'message_alphabet')
    sensors = to_list(retrieve(config, 'sensors'), 'sensors')
    pmfs = [_read_pmfs(retrieve(s, 'pmf'), horizon, 'sensor {}'.format(i + 1)) for i, s in enumerate(sensors)]
    n = len(pmfs)
    edges = []
    for edge in to_list(retrieve(config, 'edges', default=[]) or [], 'edges'):
        if not isinstance(edge, (list, tuple)) or len(edge) != 2:
            raise GraphInconsistent("edge {} must be a [sender, receiver] pair".format(edge))
        edges.append((to_int(edge[0], 'edge') - 1, to_int(edge[1], 'edge') - 1))
    graph = CommGraph(n, frozenset(edges))
    costs = _build_costs(retrieve(config, 'cost'), n, message_alphabet, horizon)
    return Scenario(prior, horizon, ObservationModel(tuple(pmfs)), graph, costs,
                    message_alphabet, str(retrieve(config, 'name', default='')))


def counterexample_scenario(K, r1, mu):
    """Two sensors, T=3, both hear each other, the later stopper decides."""
    if not 1.0 < K < 2.0:
        raise ParameterOutOfRange("K must lie in (1, 2), got {}".format(K))
    if not 0.0 < r1 < 1.0:
        raise ParameterOutOfRange("r1 must lie in (0, 1), got {}".format(r1))
    if not mu > 0.0:
        raise ParameterOutOfRange("mu must be > 0, got {}".format(mu))
    q = (0.5, 0.5, 1.0)
    r = (r1, 0.0, 0.0)
    sensor1 = [[[qt, 1.0 - qt], [1.0 - qt, qt]] for qt in q]
    sensor2 = [[[rt, 1.0 - rt, 0.0], [0.0, 1.0 - rt, rt]] for rt in r]
    costs = CostSpec(ActiveSetOperationalCost((0.0, 1.0, 1.0, float(K))),
                     LastStopperTerminalCost(mistake_costs(float(mu))))
    return Scenario(0.5, 3, ObservationModel((sensor1, sensor2)), CommGraph(2, frozenset({(0, 1), (1, 0)})),
                    costs, 2, 'counterexample')


SPECIAL_CASES = ('no-comm', 'one-way', 'two-way', 'tree')


def _tree_edges(parents, n):
    parents = to_list(parents, 'parents')
    if len(parents) != n:
        raise GraphInconsistent("tree needs one parent entry per sensor")
    edges = set()
    for j in range(1, n):
        if parents[j] is None:
            raise GraphInconsistent("sensor {} has no parent".format(j + 1))
        edges.add((j, to_int(parents[j], 'parents') - 1))
    for j in range(n):
        seen, k = set(), j
        while k != 0:
            if k in seen or not 0 <= k < n:
                raise GraphInconsistent("parents do not form a tree rooted at sensor 1")
            seen.add(k)
            k = to_int(parents[k], 'parents') - 1
    return edges


def special_case_scenario(kind, params):
    """Scenarios with the graph and cost shape of the classical special cases."""
    if kind not in SPECIAL_CASES:
        raise ParameterOutOfRange("unknown special case '{}', expected one of {}".format(kind, SPECIAL_CASES))
    horizon = to_int(retrieve(params, 'horizon'), 'horizon')
    if horizon < 1:
        raise ParameterOutOfRange("horizon must be >= 1")
    prior = to_probability(retrieve(params, 'prior', default=0.5))
    if not 0.0 < prior < 1.0:
        raise InvalidPrior("prior P(H=0) must lie in (0, 1), got {!r}".format(prior))
    message_alphabet = to_int(retrieve(params, 'message_alphabet', default=2), 'message_alphabet')
    pmfs = [_read_pmfs(p, horizon, 'sensor {}'.format(i + 1))
            for i, p in enumerate(to_list(retrieve(params, 'pmfs'), 'pmfs'))]
    n = len(pmfs)
    rates = tuple(to_float(c, 'costs') for c in to_list(retrieve(params, 'costs'), 'costs'))
    if len(rates) != n:
        raise ParameterOutOfRange("{} needs one cost per sensor".format(kind))
    operational = LinearOperationalCost(rates)
    operational.check(n, message_alphabet, horizon)
    default_mu = DEFAULT_MU_FACTOR * max_operational_cost(operational, n, horizon) or DEFAULT_MU_FACTOR
    a = _decision_costs(params, message_alphabet, default_mu)

    if kind == 'no-comm':
        edges = set()
        table = np.zeros((2,) + (message_alphabet,) * n)
        for h in (0, 1):
            for us in itertools.product(range(message_alphabet), repeat=n):
                table[(h,) + us] = sum(a[h, d] for d in us)
        terminal = TableTerminalCost(table)
    elif kind == 'one-way':
        edges = {(j, 0) for j in range(1, n)}
        terminal = FusionTerminalCost(0, a)
    elif kind == 'two-way':
        if n != 2:
            raise ParameterOutOfRange("two-way communication is defined for 2 sensors, got {}".format(n))
        edges = {(0, 1), (1, 0)}
        terminal = LastStopperTerminalCost(a)
    else:
        edges = _tree_edges(retrieve(params, 'parents'), n)
        terminal = FusionTerminalCost(0, a)
    return Scenario(prior, horizon, ObservationModel(tuple(pmfs)), CommGraph(n, frozenset(edges)),
                    CostSpec(operational, terminal), message_alphabet, kind)


def random_scenario(rng, n_sensors, horizon, alphabet, message_alphabet=2, edge_prob=0.5,
                    operational=None, terminal=None):
    """Small random instance with rational pmfs (integer weights normalized)."""
    pmfs = []
    for _ in range(n_sensors):
        steps = []
        for _ in range(horizon):
            rows = []
            for _ in (0, 1):
                weights = rng.integers(0, 4, size=alphabet).astype(np.float64)
                if weights.sum() == 0:
                    weights[rng.integers(alphabet)] = 1.0
                rows.append(weights / weights.sum())
            steps.append(rows)
        pmfs.append(steps)
    edges = {(a, b) for a in range(n_sensors) for b in range(n_sensors) if a != b and rng.random() < edge_prob}

    operational = operational or ('active_set' if rng.random() < 0.5 else 'linear')
    if operational == 'active_set':
        table = rng.integers(0, 5, size=2 ** n_sensors) / 2.0
        table[0] = 0.0
        op_cost = ActiveSetOperationalCost(tuple(float(c) for c in table))
    else:
        op_cost = LinearOperationalCost(tuple(float(c) for c in rng.integers(1, 4, size=n_sensors) / 4.0))

    terminal = terminal or ('table' if rng.random() < 0.5 else 'last_stopper')
    if terminal == 'table':
        shape = (2,) + (message_alphabet,) * n_sensors + (horizon,) * n_sensors
        term_cost = TableTerminalCost(rng.integers(0, 9, size=shape) / 2.0)
    elif terminal == 'fusion':
        term_cost = FusionTerminalCost(0, _frozen_array(rng.integers(0, 9, size=(2, message_alphabet)) / 2.0))
    else:
        term_cost = LastStopperTerminalCost(_frozen_array(rng.integers(0, 9, size=(2, message_alphabet)) / 2.0))

    prior = float(rng.integers(1, 4)) / 4.0
    return Scenario(prior, horizon, ObservationModel(tuple(pmfs)), CommGraph(n_sensors, frozenset(edges)),
                    CostSpec(op_cost, term_cost), message_alphabet, 'random')


def load_scenario(reference, overrides=None):
    """Scenario from a preset name or a YAML file path."""
    if reference == 'counterexample':
        params = load_preset_params('counterexample', overrides)
        return counterexample_scenario(to_float(params['K'], 'K'), to_probability(params['r1']),
                                       to_float(params['mu'], 'mu'))
    if reference in SPECIAL_CASES:
        return special_case_scenario(reference, load_preset_params(reference, overrides))
    document = load_document(reference)
    if overrides:
        document.update(overrides)
    return build_scenario(document)


def is_counterexample(scenario):
    return (scenario.n_sensors == 2 and scenario.horizon == 3 and scenario.message_alphabet == 2
            and scenario.alphabet_size(0) == 2 and scenario.alphabet_size(1) == 3
            and scenario.graph.edges == frozenset({(0, 1), (1, 0)})
            and isinstance(scenario.costs.terminal, LastStopperTerminalCost))
