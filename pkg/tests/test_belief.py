import pytest

from belief import (Belief, PrivateHistory, SensorView, SystemMap, UpdateContext, bayes_step, lemma1_update,
                    observation_posterior, posterior_from_history, rho_from_pi)
from models_detection import BLANK, random_scenario
from strategies import compile_profile, random_profile, reachable_histories, seeded_rng
from util.errors import NoCompatibleHistory, ZeroLikelihood, ZeroProbabilityHistory

TOL = 1e-10

# (sensors, horizon, observation alphabet, message alphabet)
BATTERY = [
    (1, 3, 3, 2),
    (2, 2, 3, 2),
    (2, 3, 2, 2),
    (2, 3, 3, 2),
    (3, 2, 2, 2),
    (3, 3, 2, 2),
    (2, 2, 2, 3),
]


class TestBayesStep:

    def test_informative(self):
        assert bayes_step(Belief(0.5), 0, 0.75, 0.25).pi == pytest.approx(0.75)
        assert bayes_step(0.5, 1, 0.25, 0.75).pi == pytest.approx(0.25)

    def test_uninformative(self):
        assert bayes_step(0.3, 0, 0.5, 0.5).pi == pytest.approx(0.3)

    def test_certain(self):
        assert bayes_step(0.5, 2, 0.0, 0.4).pi == 0.0
        assert bayes_step(1.0, 1, 0.6, 0.6).pi == 1.0

    def test_zero_likelihood(self):
        with pytest.raises(ZeroLikelihood):
            bayes_step(0.5, 0, 0.0, 0.0)
        with pytest.raises(ZeroLikelihood):
            bayes_step(1.0, 2, 0.0, 0.4)

    def test_belief_range(self):
        with pytest.raises(ValueError):
            Belief(1.5)

    @pytest.mark.parametrize('pmf0, pmf1', [(0.75, 0.25), (0.25, 0.75), (0.4, 0.4), (1.0, 0.2), (0.0, 0.3)])
    def test_monotone_in_prior_belief(self, pmf0, pmf1):
        grid = [k / 20 for k in range(21)]
        values = [bayes_step(pi, 0, pmf0, pmf1).pi for pi in grid]
        for lower, upper in zip(values, values[1:]):
            assert lower <= upper + TOL


class TestPrivateHistory:

    def test_message_steps(self):
        with pytest.raises(ValueError):
            PrivateHistory(0, (0, 1), ())

    def test_send_after_stop(self):
        with pytest.raises(ValueError):
            PrivateHistory(0, (0, 1, 1), ((0,), (1,)))

    def test_extend(self):
        hist = PrivateHistory(0, (0,)).extend(1, (BLANK,)).extend(0, (1,))
        assert hist.t == 3
        assert hist.key() == ((0, 1, 0), ((BLANK,), (1,)))


class TestPosterior:

    def test_prior_at_t0(self, counterexample, compiled_presets):
        hist = PrivateHistory(1)
        assert posterior_from_history(counterexample, compiled_presets['ex1'], hist).pi == 0.5

    @pytest.mark.parametrize('y, pi', [(0, 1.0), (1, 0.5), (2, 0.0)])
    def test_sensor2_first_step(self, counterexample, compiled_presets, y, pi):
        hist = PrivateHistory(1, (y,))
        assert posterior_from_history(counterexample, compiled_presets['ex1'], hist).pi == pytest.approx(pi)

    @pytest.mark.parametrize('u, pi', [(BLANK, 0.5), (0, 1.0), (1, 0.0)])
    def test_sensor1_hears_sensor2(self, counterexample, compiled_presets, u, pi):
        hist = PrivateHistory(0, (0, 1), ((u,),))
        assert posterior_from_history(counterexample, compiled_presets['ex1'], hist).pi == pytest.approx(pi)

    def test_perfect_last_observation(self, counterexample, compiled_presets):
        hist = PrivateHistory(0, (1, 1, 1), ((BLANK,), (0,)))
        assert posterior_from_history(counterexample, compiled_presets['ex1'], hist).pi == pytest.approx(0.0)

    def test_observation_posterior(self, counterexample):
        assert observation_posterior(counterexample, 1, (0,)).pi == pytest.approx(1.0)
        assert observation_posterior(counterexample, 0, (0, 0)).pi == pytest.approx(0.5)
        assert observation_posterior(counterexample, 0, (0, 0, 1)).pi == pytest.approx(0.0)
        # y^2_2 = 2 never happens, so only the prior is left
        assert observation_posterior(counterexample, 1, (0, 2)).pi == pytest.approx(0.5)

    def test_zero_probability_history(self, counterexample, compiled_presets):
        # under ex2 sensor 2 never stays blank at t=1
        hist = PrivateHistory(0, (0, 0), ((BLANK,),))
        with pytest.raises(ZeroProbabilityHistory):
            posterior_from_history(counterexample, compiled_presets['ex2'], hist)


class TestRhoSigma:

    def test_rho_after_blank(self, counterexample, compiled_presets):
        rho = rho_from_pi(counterexample, compiled_presets['ex1'], 0, 0.5, ((BLANK,),))
        assert rho.t == 2
        assert dict(rho.items()) == pytest.approx({(0, ((1, 1),)): 0.5, (1, ((1, 1),)): 0.5})
        assert rho.total() == pytest.approx(1.0, abs=TOL)

    def test_rho_after_stop(self, counterexample, compiled_presets):
        rho = rho_from_pi(counterexample, compiled_presets['ex1'], 0, 1.0, ((0,),))
        assert dict(rho.items()) == pytest.approx({(0, ((0, 1),)): 1.0})
        assert rho.marginal() == pytest.approx((1.0, 0.0))

    def test_rho_incompatible_messages(self, counterexample, compiled_presets):
        with pytest.raises(NoCompatibleHistory):
            rho_from_pi(counterexample, compiled_presets['ex2'], 0, 0.5, ((BLANK,),))

    def test_sigma(self, counterexample, compiled_presets):
        view = SensorView(counterexample, compiled_presets['ex1'], 0)
        rho = view.rho(0.5, ((BLANK,),))
        sigma = view.sigma(rho, (0,))
        assert sigma.total() == pytest.approx(1.0, abs=TOL)
        assert sigma.marginal() == pytest.approx((0.5, 0.5))
        with pytest.raises(NoCompatibleHistory):
            view.sigma(rho, (1,))

    def test_update_through_messages(self, counterexample, compiled_presets):
        context = UpdateContext(counterexample, compiled_presets['ex1'], 0, ((BLANK,),), 2)
        assert lemma1_update(0.5, 0, (0,), context).pi == pytest.approx(1.0)
        assert lemma1_update(0.5, 1, (0,), context).pi == pytest.approx(0.0)

    def test_update_at_t0(self, counterexample, compiled_presets):
        context = UpdateContext(counterexample, compiled_presets['non_threshold'], 1, (), 0)
        assert lemma1_update(0.5, 0, (), context).pi == pytest.approx(1.0)
        assert lemma1_update(0.5, 1, (), context).pi == pytest.approx(0.5)


def _check_recursion(scenario, profile):
    """Composed updates along every reachable history match the direct posterior."""
    checked = 0
    for sensor in range(scenario.n_sensors):
        view = SensorView(scenario, profile, sensor)
        for t in range(1, scenario.horizon + 1):
            for hist in reachable_histories(view, t):
                try:
                    direct = view.posterior(hist).pi
                except ZeroProbabilityHistory:
                    continue
                pi = view.update(scenario.prior, hist.observations[0], (), (), 0).pi
                for s in range(1, t):
                    messages = hist.messages[:s - 1]
                    rho = view.rho(pi, messages)
                    assert rho.total() == pytest.approx(1.0, abs=TOL)
                    sigma = view.sigma(rho, hist.messages[s - 1])
                    assert sigma.total() == pytest.approx(1.0, abs=TOL)
                    pi = view.update(pi, hist.observations[s], hist.messages[s - 1], messages, s).pi
                assert pi == pytest.approx(direct, abs=TOL), (sensor, hist.key())
                checked += 1
    return checked


class TestSystemMap:

    @pytest.mark.parametrize('seed', range(6))
    def test_deterministic(self, seed):
        rng = seeded_rng(seed)
        scenario = random_scenario(rng, 3, 3, 2)
        profile = compile_profile(scenario, random_profile(scenario, rng))
        for sensor in range(scenario.n_sensors):
            view = SensorView(scenario, profile, sensor)
            first, second = SystemMap(scenario, profile, sensor), SystemMap(scenario, profile, sensor)
            for h in (0, 1):
                for others_obs, _ in view.prefixes(h, scenario.horizon):
                    for upto in range(scenario.horizon + 1):
                        messages = first(others_obs, upto)
                        assert len(messages) == upto
                        assert second(others_obs, upto) == messages
                        assert first(others_obs, upto) == messages
                        # prefixes of the observations fix the prefix of the messages
                        assert first(others_obs, scenario.horizon)[:upto] == messages

    def test_counterexample(self, counterexample, compiled_presets):
        system_map = SystemMap(counterexample, compiled_presets['ex1'], 0)
        # sensor 2 stops at t=1 on y=0 and y=2 only
        assert system_map.current(((0,),), 1) == (0,)
        assert system_map.current(((1,),), 1) == (BLANK,)
        assert system_map.current(((2,),), 1) == (1,)


class TestRhoMarginal:

    @pytest.mark.parametrize('n, horizon, alphabet, message_alphabet', BATTERY)
    @pytest.mark.parametrize('seed', range(3))
    def test_hypothesis_marginal_is_pi(self, n, horizon, alphabet, message_alphabet, seed):
        rng = seeded_rng(1000 + 100 * seed + n * 10 + horizon)
        scenario = random_scenario(rng, n, horizon, alphabet, message_alphabet=message_alphabet)
        profile = compile_profile(scenario, random_profile(scenario, rng))
        checked = 0
        for sensor in range(n):
            view = SensorView(scenario, profile, sensor)
            for t in range(1, horizon + 1):
                for messages in {hist.messages for hist in reachable_histories(view, t)}:
                    if min(view.compatible_mass(h, messages) for h in (0, 1)) <= 0.0:
                        continue
                    for pi in (0.0, 0.2, 0.5, 0.9, 1.0):
                        rho = view.rho(pi, messages)
                        assert rho.marginal()[0] == pytest.approx(pi, abs=TOL)
                        assert rho.total() == pytest.approx(1.0, abs=TOL)
                    checked += 1
        assert checked > 0


class TestRecursion:

    def test_counterexample_presets(self, counterexample, compiled_presets):
        for profile in compiled_presets.values():
            assert _check_recursion(counterexample, profile) > 0

    @pytest.mark.parametrize('n, horizon, alphabet, message_alphabet', BATTERY)
    @pytest.mark.parametrize('seed', range(4))
    def test_random_battery(self, n, horizon, alphabet, message_alphabet, seed):
        rng = seeded_rng(100 * seed + n * 10 + horizon)
        scenario = random_scenario(rng, n, horizon, alphabet, message_alphabet=message_alphabet)
        profile = compile_profile(scenario, random_profile(scenario, rng))
        assert _check_recursion(scenario, profile) > 0
