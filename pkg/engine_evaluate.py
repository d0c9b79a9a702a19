import itertools
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

import util.misc as misc
from strategies import compile_profile, rollout
from util.errors import BudgetExceeded, ParameterOutOfRange

REPORT_COLUMNS = ['profile', 'method', 'expected_cost', 'operational', 'terminal', 'error_prob', 'stderr', 'samples']
# exact runs above this many trajectories show a progress bar when asked
PROGRESS_THRESHOLD = 10 ** 5


@dataclass(frozen=True)
class CostReport:
    profile: str
    method: str
    expected_cost: float
    operational: float
    terminal: float
    error_prob: float
    stderr: Optional[float] = None
    samples: Optional[int] = None
    # probability mass covered by the enumeration
    mass: float = 1.0


def trajectory_count(scenario):
    """prod_i |Y^i|^T, the size of the joint observation space."""
    return math.prod(scenario.alphabet_size(i) ** scenario.horizon for i in range(scenario.n_sensors))


def joint_paths(scenario, h):
    """Positive-probability joint observation sequences under H=h with their probabilities."""
    per_sensor = [scenario.observations.sequences(i, h, scenario.horizon) for i in range(scenario.n_sensors)]
    for combo in itertools.product(*per_sensor):
        yield tuple(seq for seq, _ in combo), math.prod(p for _, p in combo)


def exact_expected_cost(scenario, profile, budget=None, progress=False):
    """E[J] by enumerating H and every joint observation sequence."""
    size = trajectory_count(scenario)
    budget = misc.get_budget(budget)
    if size > budget:
        raise BudgetExceeded('exact evaluation', size, budget)
    compiled = compile_profile(scenario, profile)
    weights, operational, terminal = [], [], []
    for h in (0, 1):
        paths = joint_paths(scenario, h)
        if progress and size > PROGRESS_THRESHOLD:
            paths = tqdm(paths, desc='H={}'.format(h))
        for joint_obs, p in paths:
            w = scenario.prior_of(h) * p
            if w == 0.0:
                continue
            outcome = rollout(scenario, compiled, joint_obs)
            op, term = scenario.costs.split(h, outcome.decisions, outcome.taus, scenario.horizon)
            weights.append(w)
            operational.append(w * op)
            terminal.append(w * term)
    expected_op = math.fsum(operational)
    expected_term = math.fsum(terminal)
    error_prob = math.fsum(w for w, t in zip(weights, terminal) if t > 0.0)
    return CostReport(profile.name, 'exact', math.fsum(operational + terminal), expected_op, expected_term,
                      error_prob, mass=math.fsum(weights))


def sample_trajectories(scenario, samples, rng):
    """Draw H and every sensor's observations; returns (h, list of (samples, T) arrays)."""
    h = (rng.random(samples) >= scenario.prior).astype(np.int64)
    observations = []
    for i in range(scenario.n_sensors):
        pmf = scenario.observations.pmfs[i]
        ys = np.empty((samples, scenario.horizon), dtype=np.int64)
        for t in range(scenario.horizon):
            cdf = np.cumsum(pmf[t], axis=1)[h]
            u = rng.random(samples)
            ys[:, t] = np.minimum((u[:, None] >= cdf).sum(axis=1), pmf.shape[2] - 1)
        observations.append(ys)
    return h, observations


def _unique_trajectories(h, observations):
    """Distinct rows of (h, y^1_{1:T}, ..., y^N_{1:T}) and the inverse index."""
    rows = np.column_stack([h] + observations)
    radix = [2] + [int(obs.max()) + 1 for obs in observations for _ in range(obs.shape[1])]
    if math.prod(radix) < 2 ** 62:
        codes = np.zeros(rows.shape[0], dtype=np.int64)
        for k, base in enumerate(radix):
            codes = codes * base + rows[:, k]
        _, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        return rows[first], inverse.reshape(-1)
    unique, inverse = np.unique(rows, axis=0, return_inverse=True)
    return unique, inverse.reshape(-1)


def monte_carlo_cost(scenario, profile, samples, seed, progress=False):
    """Sample mean of J over i.i.d. draws; reproducible per seed."""
    if int(samples) != samples or samples < 1:
        raise ParameterOutOfRange("samples must be a positive integer, got {!r}".format(samples))
    samples = int(samples)
    rng = np.random.Generator(np.random.Philox(seed))
    compiled = compile_profile(scenario, profile)
    h, observations = sample_trajectories(scenario, samples, rng)
    unique, inverse = _unique_trajectories(h, observations)

    T = scenario.horizon
    costs = np.empty((unique.shape[0], 2), dtype=np.float64)
    rows = tqdm(enumerate(unique), total=unique.shape[0], desc='rollouts') if progress else enumerate(unique)
    for k, row in rows:
        joint_obs = tuple(tuple(int(y) for y in row[1 + i * T:1 + (i + 1) * T]) for i in range(scenario.n_sensors))
        outcome = rollout(scenario, compiled, joint_obs)
        costs[k] = scenario.costs.split(int(row[0]), outcome.decisions, outcome.taus, T)

    per_sample = costs[inverse]
    total = per_sample.sum(axis=1)
    stderr = float(total.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return CostReport(profile.name, 'mc', float(total.mean()), float(per_sample[:, 0].mean()),
                      float(per_sample[:, 1].mean()), float((per_sample[:, 1] > 0.0).mean()),
                      stderr, samples)


def reports_to_frame(reports):
    frame = pd.DataFrame([asdict(r) for r in reports], columns=REPORT_COLUMNS + ['mass'])
    frame['samples'] = frame['samples'].astype('Int64')
    return frame[REPORT_COLUMNS]


def compare_profiles(scenario, profiles, budget=None):
    """Exact costs ranked ascending, with the gap to the best and to the next profile."""
    if not profiles:
        raise ParameterOutOfRange("compare_profiles needs at least one profile")
    reports = sorted((exact_expected_cost(scenario, p, budget) for p in profiles),
                     key=lambda r: r.expected_cost)
    frame = reports_to_frame(reports)
    frame.insert(0, 'rank', np.arange(1, len(reports) + 1))
    costs = frame['expected_cost'].to_numpy()
    frame['gap_to_best'] = costs - costs[0]
    frame['gap_to_next'] = np.append(costs[1:] - costs[:-1], np.nan)
    return frame


def pairwise_differences(reports):
    """Matrix of expected_cost(row) - expected_cost(column)."""
    names = [r.profile for r in reports]
    costs = np.array([r.expected_cost for r in reports])
    return pd.DataFrame(costs[:, None] - costs[None, :], index=names, columns=names)
