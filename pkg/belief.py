"""Beliefs of an active sensor.

With the other sensors' rules fixed, sensor i's posterior pi = P(H=0 | own
observations, received messages, own decisions blank so far) is updated in
three steps: form the joint belief rho over (H, others' observations) from
pi and the message history, condition it on this step's messages (sigma),
then fold in the next own observation by Bayes' rule.

Rules passed in here must answer `decide(hist)` without a belief, i.e. be
compiled to tables first (see `strategies.compile_profile`).
"""
from dataclasses import dataclass

from models_detection import BLANK
from util.errors import BlankAtHorizon, NoCompatibleHistory, ZeroLikelihood, ZeroProbabilityHistory

BELIEF_TOL = 1e-12


@dataclass(frozen=True)
class Belief:
    pi: float

    def __post_init__(self):
        pi = float(self.pi)
        if not -BELIEF_TOL <= pi <= 1.0 + BELIEF_TOL:
            raise ValueError("belief must lie in [0, 1], got {!r}".format(pi))
        object.__setattr__(self, 'pi', min(max(pi, 0.0), 1.0))

    def __float__(self):
        return self.pi


def _messages_valid(messages):
    width = len(messages[0]) if messages else 0
    for k in range(width):
        stopped = False
        for step in messages:
            if stopped and step[k] != BLANK:
                return False
            stopped = stopped or step[k] != BLANK
    return True


@dataclass(frozen=True)
class PrivateHistory:
    """I^i_t: own observations y_{1:t} and messages u^{P(i)}_{1:t-1}.

    `messages[s]` holds what the predecessors (in sorted order) sent at time
    s + 1; BLANK marks no message.
    """
    sensor: int
    observations: tuple = ()
    messages: tuple = ()

    def __post_init__(self):
        observations = tuple(int(y) for y in self.observations)
        messages = tuple(tuple(int(u) for u in step) for step in self.messages)
        if len(messages) != max(len(observations) - 1, 0):
            raise ValueError("history at t={} needs {} message steps, got {}".format(
                len(observations), max(len(observations) - 1, 0), len(messages)))
        if len({len(step) for step in messages}) > 1:
            raise ValueError("message steps differ in width")
        if not _messages_valid(messages):
            raise ValueError("a predecessor sends after it stopped: {}".format(messages))
        object.__setattr__(self, 'observations', observations)
        object.__setattr__(self, 'messages', messages)

    @property
    def t(self):
        return len(self.observations)

    def key(self):
        return (self.observations, self.messages)

    def extend(self, y, messages_t=()):
        """History at t+1 after receiving `messages_t` at t and observing y."""
        messages = self.messages + (tuple(messages_t),) if self.t >= 1 else ()
        return PrivateHistory(self.sensor, self.observations + (int(y),), messages)


def propagate_decisions(scenario, profile, joint_obs, upto, forced=None):
    """Decisions U^j_{1:upto} of every sensor under the message-passing dynamics.

    `forced` maps a sensor to a fixed decision sequence that replaces its rule.
    Stopped sensors emit BLANK. Returns one list per sensor.
    """
    forced = forced or {}
    n = scenario.n_sensors
    decisions = [[] for _ in range(n)]
    stopped = [False] * n
    for t in range(1, upto + 1):
        current = []
        for j in range(n):
            if j in forced:
                d = forced[j][t - 1]
            elif stopped[j]:
                d = BLANK
            else:
                preds = scenario.predecessors(j)
                msgs = tuple(tuple(decisions[k][s] for k in preds) for s in range(t - 1))
                d = profile[j].decide(PrivateHistory(j, joint_obs[j][:t], msgs))
                if d == BLANK and t == scenario.horizon:
                    raise BlankAtHorizon("sensor {} answered blank at t=T".format(j + 1))
            current.append(d)
        for j, d in enumerate(current):
            decisions[j].append(d)
            if d != BLANK and j not in forced:
                stopped[j] = True
    return decisions


class SystemMap(object):
    """Messages received by `sensor` as a function of the others' observations.

    Sensor i's own decisions are held at blank, so for fixed rules of the other
    sensors this is a deterministic map y^{-i}_{1:t} -> u^{P(i)}_{1:t}.
    """

    def __init__(self, scenario, profile, sensor):
        self.scenario = scenario
        self.profile = profile
        self.sensor = sensor
        self.others = tuple(j for j in range(scenario.n_sensors) if j != sensor)
        self.preds = scenario.predecessors(sensor)
        self._cache = {}

    def __call__(self, others_obs, upto):
        """u^{P(i)}_{1:upto} as a tuple of per-time message tuples."""
        key = (tuple(seq[:upto] for seq in others_obs), upto)
        if key not in self._cache:
            joint = [()] * self.scenario.n_sensors
            for j, seq in zip(self.others, key[0]):
                joint[j] = seq
            decisions = propagate_decisions(self.scenario, self.profile, joint, upto,
                                             forced={self.sensor: (BLANK,) * upto})
            self._cache[key] = tuple(tuple(decisions[k][s] for k in self.preds) for s in range(upto))
        return self._cache[key]

    def received(self, others_obs, t):
        """M_t: messages available to the sensor at time t (times 1..t-1)."""
        return self(others_obs, t - 1)

    def current(self, others_obs, t):
        """L_t: messages sent to the sensor at time t."""
        return self(others_obs, t)[t - 1]


@dataclass(frozen=True)
class JointBelief:
    """Sparse posterior over (h, y^{-i}_{1:t}); absent entries are exactly 0."""
    t: int
    support: dict

    def prob(self, h, others_obs):
        return self.support.get((h, others_obs), 0.0)

    def marginal(self):
        """(P(H=0), P(H=1)) under this belief."""
        m = [0.0, 0.0]
        for (h, _), p in self.support.items():
            m[h] += p
        return m[0], m[1]

    def total(self):
        return sum(self.support.values())

    def items(self):
        return self.support.items()


def bayes_step(belief, y, pmf0, pmf1):
    """pi' = f(y|0) pi / (f(y|0) pi + f(y|1) (1 - pi)); pmf0, pmf1 are f(y|0), f(y|1)."""
    pi = float(belief)
    num = pmf0 * pi
    den = num + pmf1 * (1.0 - pi)
    if den <= 0.0:
        raise ZeroLikelihood("observation {} has zero likelihood under belief {}".format(y, pi))
    return Belief(num / den)


class SensorView(object):
    """Belief machinery of one sensor against fixed rules of the others.

    Enumerations of the others' observation prefixes and message maps are
    cached, so one view serves many histories of the same sensor.
    """

    def __init__(self, scenario, profile, sensor):
        self.scenario = scenario
        self.sensor = sensor
        self.system_map = SystemMap(scenario, profile, sensor)
        self.others = self.system_map.others
        self._prefixes = {}
        self._mass = {}

    def prefixes(self, h, t):
        """Positive-probability y^{-i}_{1:t} under H=h with their probabilities."""
        key = (h, t)
        if key not in self._prefixes:
            joint = [((), 1.0)]
            for j in self.others:
                joint = [(obs + (seq,), p * q)
                         for obs, p in joint
                         for seq, q in self.scenario.observations.sequences(j, h, t)]
            self._prefixes[key] = joint
        return self._prefixes[key]

    def compatible_mass(self, h, messages):
        """P(u^{P(i)}_{1:t-1} = messages | H=h) with the sensor blank throughout."""
        key = (h, messages)
        if key not in self._mass:
            t = len(messages) + 1
            self._mass[key] = sum(p for y, p in self.prefixes(h, t - 1)
                                  if self.system_map(y, t - 1) == messages)
        return self._mass[key]

    def posterior(self, hist):
        if hist.t == 0:
            return Belief(self.scenario.prior)
        obs = self.scenario.observations
        weights = [self.scenario.prior_of(h)
                   * obs.sequence_prob(self.sensor, h, hist.observations)
                   * self.compatible_mass(h, hist.messages) for h in (0, 1)]
        total = weights[0] + weights[1]
        if total <= 0.0:
            raise ZeroProbabilityHistory("history {} has probability 0".format(hist.key()))
        return Belief(weights[0] / total)

    def rho(self, pi, messages):
        """rho_t over (h, y^{-i}_{1:t}) with t = len(messages) + 1."""
        pi = float(pi)
        t = len(messages) + 1
        support = {}
        for h, weight in ((0, pi), (1, 1.0 - pi)):
            if weight <= 0.0:
                continue
            candidates = [(y, p) for y, p in self.prefixes(h, t)
                          if self.system_map(y, t - 1) == messages]
            norm = sum(p for _, p in candidates)
            if norm <= 0.0:
                raise NoCompatibleHistory("no observation history of the others under H={} "
                                          "yields messages {}".format(h, messages))
            for y, p in candidates:
                support[(h, y)] = weight * p / norm
        return JointBelief(t, support)

    def sigma(self, rho, messages_t):
        return sigma_update(rho, tuple(messages_t), self.system_map)

    def update(self, pi, y_next, messages_t, messages, t):
        """eta_t: pi_t, messages at t and y_{t+1} -> pi_{t+1}."""
        if t == 0:
            s0, s1 = float(pi), 1.0 - float(pi)
        else:
            s0, s1 = self.sigma(self.rho(pi, messages), messages_t).marginal()
        pmf = self.scenario.observations.pmfs[self.sensor][t, :, y_next]
        return bayes_step(s0 / (s0 + s1), y_next, pmf[0], pmf[1])


def sigma_update(rho, messages_t, system_map):
    """Condition rho on the messages of time t: sigma ∝ 1{L_t(y) = u_t} rho."""
    t = rho.t
    kept = {key: p for key, p in rho.items() if system_map.current(key[1], t) == tuple(messages_t)}
    norm = sum(kept.values())
    if norm <= 0.0:
        raise NoCompatibleHistory("messages {} at t={} are incompatible with the belief".format(messages_t, t))
    return JointBelief(t, {key: p / norm for key, p in kept.items()})


def posterior_from_history(scenario, profile, hist, view=None):
    """Exact P(H=0 | hist) by enumerating the others' observation histories."""
    view = view or SensorView(scenario, profile, hist.sensor)
    return view.posterior(hist)


def observation_posterior(scenario, sensor, observations):
    """P(H=0 | own observations) with the received messages left out.

    Falls back to the prior when the observations have probability 0 under
    both hypotheses.
    """
    obs = scenario.observations
    weights = [scenario.prior_of(h) * obs.sequence_prob(sensor, h, tuple(observations)) for h in (0, 1)]
    total = weights[0] + weights[1]
    if total <= 0.0:
        return Belief(scenario.prior)
    return Belief(weights[0] / total)


def rho_from_pi(scenario, profile, sensor, pi, messages, view=None):
    view = view or SensorView(scenario, profile, sensor)
    return view.rho(pi, tuple(messages))


@dataclass(frozen=True)
class UpdateContext:
    """Everything the update needs besides pi, y_{t+1} and u_t."""
    scenario: object
    profile: object
    sensor: int
    messages: tuple
    t: int


def lemma1_update(pi, y_next, messages_t, context, view=None):
    """pi_{t+1} = eta_t(pi_t, y_{t+1}, u_{1:t}) through rho, sigma and Bayes."""
    view = view or SensorView(context.scenario, context.profile, context.sensor)
    return view.update(pi, y_next, tuple(messages_t), tuple(context.messages), context.t)
