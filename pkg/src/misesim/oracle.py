"""Alone-run ground truth, estimation error and system-level metrics."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence

from .dram import DramConfig
from .errors import InsufficientData, UndefinedSlowdown
from .sim import INTERVAL_LEN, SimResult, Simulator, Trajectory, stream_seed
from .workloads import AppSpec

WARMUP_INTERVALS = 1


def actual_slowdown(alone_ipc: float, shared_ipc: float) -> float:
    if shared_ipc <= 0:
        raise UndefinedSlowdown("shared IPC is zero")
    return alone_ipc / shared_ipc


def estimation_error(estimated: float, actual: float) -> float:
    """Absolute error in percent of the actual slowdown."""
    if actual <= 0:
        raise ValueError(f"actual slowdown must be positive, got {actual}")
    return abs(estimated - actual) / actual * 100.0


def _check(slowdowns):
    if len(slowdowns) == 0:
        raise ValueError("need at least one slowdown")
    if any(s <= 0 for s in slowdowns):
        raise ValueError("slowdowns must be positive")


def harmonic_speedup(slowdowns: Sequence[float]) -> float:
    _check(slowdowns)
    return len(slowdowns) / sum(slowdowns)


def weighted_speedup(slowdowns: Sequence[float]) -> float:
    _check(slowdowns)
    return sum(1.0 / s for s in slowdowns)


def max_slowdown(slowdowns: Sequence[float]) -> float:
    _check(slowdowns)
    return max(slowdowns)


class AloneCache:
    """Alone-run trajectories keyed by (app, DRAM config, stream seed).

    A cached trajectory is reused while it covers the requested instruction
    count and re-simulated further otherwise.
    """

    def __init__(self):
        self._runs = {}

    def trajectory(self, app: AppSpec, cfg: DramConfig, seed: int, instructions: int,
                   max_cycles: int) -> Trajectory:
        key = (app, cfg, seed)
        tr = self._runs.get(key)
        if tr is not None and tr.retired >= instructions:
            return tr
        sim = Simulator(cfg, [app], seed=seed, stream_seeds=[seed], interval_len=max_cycles,
                        epoch_len=max_cycles)
        sim.run(max_cycles, stop_instructions=instructions)
        tr = sim.trajectory(0)
        if tr.retired < instructions:
            raise InsufficientData(
                f"alone run retired {tr.retired} of {instructions} instructions in {max_cycles} cycles"
            )
        self._runs[key] = tr
        return tr


_default_cache = AloneCache()


def replay_alone(app: AppSpec, cfg: DramConfig, seed: int, horizon: int = 2 * INTERVAL_LEN,
                 app_index: int = 0, warmup_cycles: int = INTERVAL_LEN) -> float:
    """Alone IPC of ``app`` over the post-warmup window of a ``horizon`` run.

    ``seed`` and ``app_index`` identify the shared run the app came from,
    so the replay regenerates its exact request stream.
    """
    if horizon <= warmup_cycles:
        raise InsufficientData("horizon leaves no post-warmup window")
    sim = Simulator(cfg, [app], seed=seed, stream_seeds=[stream_seed(seed, app_index)],
                    interval_len=horizon, epoch_len=horizon)
    sim.run(horizon)
    tr = sim.trajectory(0)
    # instruction window bounded by the retirements at the two cycle marks
    start = _retired_by(tr, warmup_cycles)
    end = tr.retired
    cycles = tr.elapsed(end) - tr.elapsed(start)
    if cycles <= 0:
        raise InsufficientData("no instructions retired after warmup")
    return (end - start) / cycles


def _retired_by(tr: Trajectory, cycles: int) -> int:
    lo, hi = 0, tr.retired
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if tr.elapsed(mid) <= cycles:
            lo = mid
        else:
            hi = mid - 1
    return lo


@dataclass(frozen=True)
class AppOutcome:
    app_id: int
    alone_ipc: float
    shared_ipc: float
    actual_slowdown: float
    interval_slowdowns: tuple


@dataclass(frozen=True)
class OracleResult:
    apps: tuple
    estimates: tuple
    mise_error_pct: float
    stfm_error_pct: float
    per_app_mise_error: tuple
    per_app_stfm_error: tuple

    @property
    def actual_slowdowns(self) -> list:
        return [a.actual_slowdown for a in self.apps]


def _window(tr: Trajectory, lo: int, hi: int) -> int:
    return tr.elapsed(hi) - tr.elapsed(lo)


def evaluate(result: SimResult, cfg: DramConfig, warmup: int = WARMUP_INTERVALS,
             cache: Optional[AloneCache] = None, use_raw: bool = True) -> OracleResult:
    """Attach alone-run ground truth to a shared run and score both models.

    Slowdowns compare the cycles each side needs for the same instruction
    window, so alone and shared runs are aligned on work, not on time.
    Model errors average over apps and post-warmup intervals.
    """
    if cache is None:
        cache = _default_cache
    n = result.num_apps
    bounds = result.boundary_instructions
    if len(bounds) <= warmup + 1:
        raise InsufficientData("no post-warmup interval to evaluate")
    outcomes = []
    new_rows = [list(row) for row in result.estimates]
    mise_errs, stfm_errs = [[] for _ in range(n)], [[] for _ in range(n)]
    for i in range(n):
        shared_tr = result.trajectories[i]
        need = max(b[i] for b in bounds)
        alone_tr = cache.trajectory(result.apps[i], cfg, stream_seed(result.seed, i), need,
                                    max_cycles=max(4 * result.total_cycles, 1))
        per_interval = []
        for k in range(len(bounds) - 1):
            lo, hi = bounds[k][i], bounds[k + 1][i]
            if hi <= lo:
                per_interval.append(None)
                continue
            s = _window(shared_tr, lo, hi) / _window(alone_tr, lo, hi)
            per_interval.append(s)
            est = new_rows[k][i]
            new_rows[k][i] = dataclasses.replace(est, actual_slowdown=s)
            if k >= warmup:
                m = est.mise_raw if use_raw else est.mise_slowdown
                f = est.stfm_raw if use_raw else est.stfm_slowdown
                mise_errs[i].append(estimation_error(m, s))
                stfm_errs[i].append(estimation_error(f, s))
        lo, hi = bounds[warmup][i], bounds[-1][i]
        if hi <= lo:
            raise UndefinedSlowdown(f"app {i} made no progress after warmup")
        shared_cycles = _window(shared_tr, lo, hi)
        alone_cycles = _window(alone_tr, lo, hi)
        outcomes.append(AppOutcome(
            app_id=i,
            alone_ipc=(hi - lo) / alone_cycles,
            shared_ipc=(hi - lo) / shared_cycles,
            actual_slowdown=shared_cycles / alone_cycles,
            interval_slowdowns=tuple(per_interval),
        ))

    def mean(xs):
        return sum(xs) / len(xs) if xs else float("nan")

    return OracleResult(
        apps=tuple(outcomes),
        estimates=tuple(tuple(r) for r in new_rows),
        mise_error_pct=mean([e for errs in mise_errs for e in errs]),
        stfm_error_pct=mean([e for errs in stfm_errs for e in errs]),
        per_app_mise_error=tuple(mean(e) for e in mise_errs),
        per_app_stfm_error=tuple(mean(e) for e in stfm_errs),
    )
