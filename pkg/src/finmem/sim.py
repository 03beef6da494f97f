"""Monte Carlo estimate of the time-averaged error, for checking ``chain``.

Randomness: trial ``i`` under hypothesis ``h`` draws from a Philox-4x64
counter-based generator keyed by ``SeedSequence([seed, h, i])``. A trial's
stream depends only on those three integers, so results are bit-identical
regardless of how trials are spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numba
import numpy as np

from .errors import InvalidArgument
from .model import H0, H1, HypothesisPair, Machine


@dataclass(frozen=True)
class SimulationReport:
    empirical_pe: float
    std_error: float
    steps: int
    trials: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


@numba.njit(cache=True, nogil=True)
def _time_average(trans, wrong, initial, bits):
    state = initial
    errors = 0
    for i in range(bits.shape[0]):
        state = trans[state, bits[i]]
        errors += wrong[state]
    return errors / bits.shape[0]


def _trial_stream(seed: int, hypothesis: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, hypothesis, trial])))


def _trial_averages(m: Machine, theta: float, hypothesis: int, steps: int, trials: int, seed: int, workers: int):
    trans = np.asarray(m.transitions, dtype=np.int64)
    wrong = np.asarray([int(d != hypothesis) for d in m.decision], dtype=np.int64)

    def one(i: int) -> float:
        bits = (_trial_stream(seed, hypothesis, i).random(steps) < theta).astype(np.int64)
        return _time_average(trans, wrong, m.initial, bits)

    if workers <= 1:
        vals = [one(i) for i in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(one, range(trials)))
    return np.asarray(vals)


def _report(per_trial: np.ndarray, steps: int, trials: int, seed: int) -> SimulationReport:
    mean = float(np.mean(per_trial))
    se = float(np.std(per_trial, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SimulationReport(mean, se, steps, trials, seed)


def _check(steps: int, trials: int, theta: float | None = None):
    if steps < 1 or trials < 1:
        raise InvalidArgument("steps and trials must be >= 1")
    if theta is not None and not 0.0 < theta < 1.0:
        raise InvalidArgument(f"theta must lie in (0, 1), got {theta!r}")


def simulate_time_average(
    m: Machine,
    theta: float,
    steps: int,
    trials: int,
    seed: int,
    hypothesis: int = H0,
    workers: int = 1,
) -> SimulationReport:
    """Average of 1{d(M_i) != hypothesis} over i = 1..steps, with Bern(theta) input."""
    _check(steps, trials, theta)
    vals = _trial_averages(m, theta, hypothesis, steps, trials, seed, workers)
    return _report(vals, steps, trials, seed)


def simulate_bayes(
    m: Machine, pair: HypothesisPair, steps: int, trials: int, seed: int, workers: int = 1
) -> SimulationReport:
    """Equal-prior error: trial ``i`` averages one run under each hypothesis."""
    _check(steps, trials)
    v0 = _trial_averages(m, pair.p, H0, steps, trials, seed, workers)
    v1 = _trial_averages(m, pair.q, H1, steps, trials, seed, workers)
    return _report(0.5 * (v0 + v1), steps, trials, seed)
