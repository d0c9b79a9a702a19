import math
import os

import numpy as np
import pytest

from models_detection import (BLANK, CommGraph, FusionTerminalCost, LastStopperTerminalCost, TableTerminalCost,
                              active_set, build_scenario, counterexample_scenario, is_counterexample, load_scenario,
                              max_operational_cost, random_scenario, special_case_scenario, total_cost)
from strategies import seeded_rng
from util.config import load_preset_params
from util.errors import (ConfigError, CostTableIncomplete, GraphInconsistent, InvalidPrior, ParameterOutOfRange,
                         PmfNotNormalized)

TOL = 1e-10


def _config(**changes):
    config = {
        'prior': '1/2',
        'horizon': 2,
        'sensors': [
            {'pmf': [[['3/4', '1/4'], ['1/4', '3/4']]]},
            {'pmf': [[['2/3', '1/3'], ['1/3', '2/3']]]},
        ],
        'edges': [[2, 1]],
        'cost': {
            'operational': {'form': 'linear', 'params': {'costs': [1.0, 1.0]}},
            'terminal': {'form': 'fusion', 'params': {'sensor': 1, 'mu': 10.0}},
        },
    }
    config.update(changes)
    return config


class TestBuildScenario:

    def test_minimal_document(self):
        scenario = build_scenario(_config())
        assert scenario.n_sensors == 2
        assert scenario.horizon == 2
        assert scenario.predecessors(0) == (1,)
        assert scenario.predecessors(1) == ()
        # a single pmf step is reused at every step
        assert scenario.observations.prob(0, 2, 0, 0) == pytest.approx(0.75)

    @pytest.mark.parametrize('prior', [0, 1, 1.5, '0/3'])
    def test_invalid_prior(self, prior):
        with pytest.raises(InvalidPrior):
            build_scenario(_config(prior=prior))

    def test_pmf_not_normalized(self):
        sensors = [{'pmf': [[[0.5, 0.4], [0.5, 0.5]]]}, {'pmf': [[[0.5, 0.5], [0.5, 0.5]]]}]
        with pytest.raises(PmfNotNormalized):
            build_scenario(_config(sensors=sensors))

    def test_edge_to_unknown_sensor(self):
        with pytest.raises(GraphInconsistent):
            build_scenario(_config(edges=[[1, 3]]))

    def test_self_loop(self):
        with pytest.raises(GraphInconsistent):
            build_scenario(_config(edges=[[1, 1]]))

    def test_active_set_table_incomplete(self):
        cost = {
            'operational': {'form': 'active_set', 'params': {'table': [
                {'sensors': [], 'cost': 0}, {'sensors': [1], 'cost': 1}, {'sensors': [2], 'cost': 1}]}},
            'terminal': {'form': 'last_stopper', 'params': {'mu': 10}},
        }
        with pytest.raises(CostTableIncomplete):
            build_scenario(_config(cost=cost))

    def test_unknown_cost_form(self):
        cost = {'operational': {'form': 'quadratic', 'params': {}},
                'terminal': {'form': 'fusion', 'params': {'mu': 1}}}
        with pytest.raises(ConfigError):
            build_scenario(_config(cost=cost))

    def test_default_mu_from_operational_costs(self):
        cost = {'operational': {'form': 'linear', 'params': {'costs': [1.0, 0.5]}},
                'terminal': {'form': 'last_stopper', 'params': {}}}
        scenario = build_scenario(_config(cost=cost))
        # largest operational cost is 1.0 * 2 + 0.5 * 2
        assert scenario.costs.terminal.decision_costs[0, 1] == pytest.approx(300.0)

    def test_example_file(self, config_dir):
        scenario = load_scenario(os.path.join(config_dir, 'scenario_example.yaml'))
        assert scenario.name == 'one-way-example'
        assert scenario.graph.edges == frozenset({(1, 0)})
        assert isinstance(scenario.costs.terminal, FusionTerminalCost)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario(str(tmp_path / 'nope.yaml'))

    @pytest.mark.parametrize('changes', [
        {'horizon': 'three'},
        {'horizon': 1.5},
        {'message_alphabet': 'two'},
        {'sensors': 3},
        {'edges': [[1, 'x']]},
    ])
    def test_malformed_values(self, changes):
        with pytest.raises(ParameterOutOfRange):
            build_scenario(_config(**changes))

    @pytest.mark.parametrize('pmf', [0.5, [0.5, 0.5], [[0.5, 0.5]], [[['a', 'b'], [0.5, 0.5]]]])
    def test_malformed_pmf(self, pmf):
        sensors = [{'pmf': pmf}, {'pmf': [[[0.5, 0.5], [0.5, 0.5]]]}]
        with pytest.raises(ConfigError):
            build_scenario(_config(sensors=sensors))

    @pytest.mark.parametrize('costs', [['abc', 1.0], 1.0, [None, 1.0]])
    def test_malformed_linear_costs(self, costs):
        cost = {'operational': {'form': 'linear', 'params': {'costs': costs}},
                'terminal': {'form': 'fusion', 'params': {'mu': 10.0}}}
        with pytest.raises(ParameterOutOfRange):
            build_scenario(_config(cost=cost))

    def test_malformed_terminal_table(self):
        cost = {'operational': {'form': 'linear', 'params': {'costs': [1.0, 1.0]}},
                'terminal': {'form': 'table', 'params': {'table': [[1, 2], [3]]}}}
        with pytest.raises(CostTableIncomplete):
            build_scenario(_config(cost=cost))


class TestCounterexample:

    def test_shape(self, counterexample):
        assert is_counterexample(counterexample)
        assert counterexample.alphabet_size(0) == 2
        assert counterexample.alphabet_size(1) == 3
        assert counterexample.predecessors(0) == (1,)
        assert counterexample.predecessors(1) == (0,)

    def test_sensor2_first_observation(self, counterexample):
        obs = counterexample.observations
        assert obs.prob(1, 1, 0, 0) == pytest.approx(0.4)
        assert obs.prob(1, 1, 2, 0) == 0.0
        assert obs.prob(1, 1, 2, 1) == pytest.approx(0.4)
        assert obs.prob(1, 2, 1, 0) == 1.0

    @pytest.mark.parametrize('K, r1, mu', [(1.0, 0.4, 100), (2.5, 0.4, 100), (1.5, 0.0, 100),
                                           (1.5, 1.0, 100), (1.5, 0.4, 0)])
    def test_parameters_out_of_range(self, K, r1, mu):
        with pytest.raises(ParameterOutOfRange):
            counterexample_scenario(K, r1, mu)

    def test_preset_overrides(self):
        scenario = load_scenario('counterexample', {'K': 1.2, 'r1': '1/4'})
        assert scenario.costs.operational.cost_of({0, 1}) == pytest.approx(1.2)
        assert scenario.observations.prob(1, 1, 0, 0) == pytest.approx(0.25)

    def test_sequences_sum_to_one(self, counterexample):
        for i in range(2):
            for h in (0, 1):
                seqs = counterexample.observations.sequences(i, h, 3)
                assert math.fsum(p for _, p in seqs) == pytest.approx(1.0, abs=TOL)
                assert all(p > 0 for _, p in seqs)


class TestTotalCost:

    def test_both_stop_at_once(self, counterexample):
        assert total_cost(counterexample, 0, [(0, 1), (0, 1)]) == pytest.approx(1.5)

    def test_sensor1_one_step_later(self, counterexample):
        assert total_cost(counterexample, 1, [(1, 2), (1, 1)]) == pytest.approx(2.5)

    def test_last_stopper_decides(self, counterexample):
        # sensor 2 is wrong but sensor 1 stops later and is right
        assert total_cost(counterexample, 0, [(0, 3), (1, 1)]) == pytest.approx(3.5)
        assert total_cost(counterexample, 0, [(1, 3), (0, 1)]) == pytest.approx(103.5)

    def test_tie_goes_to_lower_index(self, counterexample):
        assert total_cost(counterexample, 0, [(1, 2), (0, 2)]) == pytest.approx(103.0)
        assert total_cost(counterexample, 0, [(0, 2), (1, 2)]) == pytest.approx(3.0)

    def test_mapping_input(self, counterexample):
        assert total_cost(counterexample, 0, {0: (0, 2), 1: (0, 1)}) == pytest.approx(2.5)

    @pytest.mark.parametrize('seed', range(10))
    def test_order_of_supplied_decisions(self, seed):
        rng = seeded_rng(seed)
        scenario = random_scenario(rng, 3, 3, 2, message_alphabet=3)
        pairs = [(int(rng.integers(3)), int(rng.integers(1, 4))) for _ in range(3)]
        expected = total_cost(scenario, seed % 2, pairs)
        for order in ([2, 1, 0], [1, 0, 2], [0, 2, 1]):
            shuffled = {j: pairs[j] for j in order}
            assert total_cost(scenario, seed % 2, shuffled) == expected

    @pytest.mark.parametrize('decisions', [[(0, 0), (0, 1)], [(0, 4), (0, 1)], [(2, 1), (0, 1)],
                                           [(BLANK, 1), (0, 1)], [(0, 1)]])
    def test_invalid_decisions(self, counterexample, decisions):
        with pytest.raises(ParameterOutOfRange):
            total_cost(counterexample, 0, decisions)


class TestActiveSet:

    def test_definition(self):
        assert active_set((1, 3, 2), 1) == {0, 1, 2}
        assert active_set((1, 3, 2), 2) == {1, 2}
        assert active_set((1, 3, 2), 3) == {1}
        assert active_set((1, 3, 2), 4) == frozenset()

    @pytest.mark.parametrize('seed', range(10))
    def test_shrinks_over_time(self, seed):
        rng = seeded_rng(seed)
        horizon = 4
        taus = tuple(int(t) for t in rng.integers(1, horizon + 1, size=4))
        sets = [active_set(taus, t) for t in range(1, horizon + 2)]
        assert sets[0] == set(range(4))
        for now, later in zip(sets, sets[1:]):
            assert later <= now
        assert sets[-1] == frozenset()

    def test_operational_cost_follows_active_set(self, counterexample):
        operational = counterexample.costs.operational
        # both active at t = 1, sensor 1 alone at t = 2 and 3
        assert operational((3, 1), 3) == pytest.approx(1.5 + 1.0 + 1.0)


class TestCommGraph:

    def test_successors_and_predecessors(self):
        graph = CommGraph(4, frozenset({(1, 0), (2, 0), (3, 1)}))
        assert graph.successors(1) == (0,)
        assert graph.successors(0) == ()
        assert graph.predecessors(0) == (1, 2)
        for a in range(4):
            for b in graph.successors(a):
                assert a in graph.predecessors(b)

    def test_two_way(self, counterexample):
        assert counterexample.graph.successors(0) == (1,)
        assert counterexample.graph.successors(1) == (0,)


class TestSpecialCases:

    def test_no_comm(self):
        scenario = special_case_scenario('no-comm', load_preset_params('no-comm'))
        assert scenario.graph.edges == frozenset()
        terminal = scenario.costs.terminal
        assert isinstance(terminal, TableTerminalCost)
        assert terminal(0, (1, 1), (1, 1)) == pytest.approx(20.0)
        assert terminal(1, (1, 0), (1, 1)) == pytest.approx(10.0)

    def test_no_comm_default_mu(self):
        params = load_preset_params('no-comm')
        del params['mu']
        scenario = special_case_scenario('no-comm', params)
        # 100 * (0.25 * 2 + 0.25 * 2) per wrong sensor
        assert scenario.costs.terminal(0, (1, 1), (2, 2)) == pytest.approx(200.0)

    def test_one_way(self):
        scenario = special_case_scenario('one-way', load_preset_params('one-way'))
        assert scenario.graph.edges == frozenset({(1, 0), (2, 0)})
        assert scenario.costs.terminal.sensor == 0
        assert scenario.alphabet_size(2) == 3

    def test_two_way(self):
        scenario = special_case_scenario('two-way', load_preset_params('two-way'))
        assert scenario.graph.edges == frozenset({(0, 1), (1, 0)})
        assert isinstance(scenario.costs.terminal, LastStopperTerminalCost)

    def test_two_way_needs_two_sensors(self):
        params = load_preset_params('one-way')
        with pytest.raises(ParameterOutOfRange):
            special_case_scenario('two-way', params)

    def test_tree(self):
        scenario = special_case_scenario('tree', load_preset_params('tree'))
        assert scenario.graph.edges == frozenset({(1, 0), (2, 0), (3, 1)})
        assert scenario.predecessors(0) == (1, 2)

    def test_tree_with_cycle(self):
        params = load_preset_params('tree', {'parents': [None, 3, 2, 2]})
        with pytest.raises(GraphInconsistent):
            special_case_scenario('tree', params)

    def test_unknown_kind(self):
        with pytest.raises(ParameterOutOfRange):
            special_case_scenario('ring', {'horizon': 2})


class TestRandomScenario:

    def test_reproducible(self):
        a = random_scenario(seeded_rng(3), 2, 2, 3)
        b = random_scenario(seeded_rng(3), 2, 2, 3)
        assert a.summary() == b.summary()
        for i in range(2):
            np.testing.assert_array_equal(a.observations.pmfs[i], b.observations.pmfs[i])

    def test_valid_instance(self):
        scenario = random_scenario(seeded_rng(5), 3, 3, 2, message_alphabet=3, terminal='table')
        assert scenario.message_alphabet == 3
        assert scenario.costs.terminal.table.shape == (2, 3, 3, 3, 3, 3, 3)

    def test_max_operational_cost(self, counterexample):
        # both sensors active at t = 1, 2, 3
        assert max_operational_cost(counterexample.costs.operational, 2, 3) == pytest.approx(4.5)
