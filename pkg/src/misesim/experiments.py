"""Multi-run experiments: model comparison and QoS bound sweeps."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence

from .config import ExperimentConfig
from .errors import ConfigurationError
from .oracle import AloneCache, OracleResult, evaluate, harmonic_speedup, max_slowdown
from .policies import ALWAYS_PRIORITIZE, MISE_QOS, UNMEETABLE, make_policy, qos_bound_met_prediction
from .sim import SimResult, Simulator


def simulate(exp: ExperimentConfig, policy: Optional[str] = None, qos=None) -> SimResult:
    pol = make_policy(policy or exp.policy, qos or exp.qos, exp.fair, use_stfm=exp.estimator == "stfm")
    sim = Simulator(exp.dram, exp.apps, pol, exp.seed, exp.epoch_len, exp.interval_len,
                    hp_row_interference=exp.hp_row_interference)
    sim.run(exp.horizon)
    return sim.result()


def compare_models(exp: ExperimentConfig, cache: Optional[AloneCache] = None,
                   policy: Optional[str] = None) -> tuple:
    """Shared run plus alone replays; returns ``(SimResult, OracleResult)``."""
    if exp.horizon < 2 * exp.interval_len:
        raise ConfigurationError("model comparison needs a post-warmup interval (horizon >= 2 intervals)")
    result = simulate(exp, policy)
    return result, evaluate(result, exp.dram, cache=cache)


@dataclass(frozen=True)
class SweepRow:
    policy: str
    bound: Optional[float]
    aoi_actual_slowdown: float
    bound_met_actual: Optional[bool]
    bound_met_predicted: Optional[bool]
    nonaoi_harmonic_speedup: Optional[float]
    nonaoi_max_slowdown: Optional[float]
    final_aoi_share: float
    unmeetable: bool
    actual_slowdowns: tuple


def _sweep_row(policy, bound, result: SimResult, oracle: OracleResult, aoi: int, qos_cfg) -> SweepRow:
    actual = oracle.actual_slowdowns
    others = [s for i, s in enumerate(actual) if i != aoi]
    predicted = None
    if policy == MISE_QOS:
        predicted = qos_bound_met_prediction(result.app_estimates(aoi), qos_cfg, warmup=1)
    final_share = result.shares_history[-1][aoi] if result.shares_history else 0.0
    return SweepRow(
        policy=policy,
        bound=bound,
        aoi_actual_slowdown=actual[aoi],
        bound_met_actual=None if bound is None else actual[aoi] <= bound,
        bound_met_predicted=predicted,
        nonaoi_harmonic_speedup=harmonic_speedup(others) if others else None,
        nonaoi_max_slowdown=max_slowdown(others) if others else None,
        final_aoi_share=final_share,
        unmeetable=UNMEETABLE in result.bound_status,
        actual_slowdowns=tuple(actual),
    )


def sweep_bounds(exp: ExperimentConfig, bounds: Sequence[float],
                 cache: Optional[AloneCache] = None) -> list:
    """One MISE-QoS run per bound followed by the Always-Prioritize reference.

    Rows come back in the order of ``bounds``; the reference is last. The
    AoI is left out of the system metrics.
    """
    if not bounds:
        raise ConfigurationError("bounds list is empty")
    if cache is None:
        cache = AloneCache()
    aoi = exp.qos.aoi
    rows = []
    for bound in bounds:
        qos = dataclasses.replace(exp.qos, bound=bound)
        result = simulate(exp, MISE_QOS, qos)
        rows.append(_sweep_row(MISE_QOS, bound, result, evaluate(result, exp.dram, cache=cache), aoi, qos))
    result = simulate(exp, ALWAYS_PRIORITIZE)
    rows.append(_sweep_row(ALWAYS_PRIORITIZE, None, result, evaluate(result, exp.dram, cache=cache), aoi, exp.qos))
    return rows
