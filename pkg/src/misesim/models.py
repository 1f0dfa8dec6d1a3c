"""MISE and STFM-style slowdown estimators over per-interval counters."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import EstimateUnavailable

SMOOTHING = 0.5


@dataclass
class EpochCounters:
    """Per-app tallies for one estimation interval."""

    hp_requests: int = 0
    hp_cycles: int = 0
    interference_cycles_hp: int = 0
    shared_requests: int = 0
    interval_cycles: int = 0
    stall_cycles: int = 0
    total_cycles: int = 0
    stfm_interference_cycles: int = 0

    def check(self):
        assert self.hp_requests <= self.shared_requests, self
        assert self.interference_cycles_hp <= self.hp_cycles, self
        assert self.stall_cycles <= self.total_cycles, self
        assert self.stfm_interference_cycles <= self.total_cycles, self


@dataclass(frozen=True)
class SlowdownEstimate:
    app_id: int
    interval: int
    arsr: float
    srsr: float
    alpha: float
    mise_slowdown: float
    stfm_slowdown: float
    mise_raw: float
    stfm_raw: float
    carried_forward: bool = False
    actual_slowdown: Optional[float] = None


def compute_arsr(c: EpochCounters) -> float:
    """Requests served per cycle while the app held top priority.

    Cycles in which other apps still blocked it are taken out of the
    denominator.
    """
    cycles = c.hp_cycles - c.interference_cycles_hp
    if cycles <= 0:
        raise EstimateUnavailable("no interference-free high-priority cycles")
    return c.hp_requests / cycles


def compute_srsr(c: EpochCounters) -> float:
    if c.interval_cycles <= 0:
        raise ValueError("interval_cycles must be positive")
    return c.shared_requests / c.interval_cycles


def estimate_alpha(c: EpochCounters) -> float:
    """Fraction of cycles the core spent stalled on memory, clamped to [0, 1]."""
    if c.total_cycles <= 0:
        raise ValueError("total_cycles must be positive")
    return min(1.0, max(0.0, c.stall_cycles / c.total_cycles))


def estimate_slowdown_mise(alpha: float, arsr: float, srsr: float) -> float:
    if alpha == 0:
        return 1.0
    if srsr <= 0:
        raise EstimateUnavailable("no requests served in the interval")
    return (1.0 - alpha) + alpha * (arsr / srsr)


def estimate_slowdown_stfm(c: EpochCounters) -> float:
    """Shared time over shared time minus counted interference cycles."""
    alone = c.total_cycles - c.stfm_interference_cycles
    if alone <= 0:
        raise EstimateUnavailable("interference covers the whole interval")
    return c.total_cycles / alone


@dataclass
class _AppHistory:
    arsr: Optional[float] = None
    mise_raw: Optional[float] = None
    stfm_raw: Optional[float] = None
    mise: Optional[float] = None
    stfm: Optional[float] = None


@dataclass
class IntervalEstimator:
    """Carries per-app state across intervals: fallbacks, smoothing, history."""

    num_apps: int
    smoothing: float = SMOOTHING
    history: list = field(default_factory=list)

    def __post_init__(self):
        self._state = [_AppHistory() for _ in range(self.num_apps)]

    def _one(self, app: int, interval: int, c: EpochCounters) -> SlowdownEstimate:
        st = self._state[app]
        flagged = False
        if c.total_cycles <= 0:
            # nothing measured at all: repeat the last estimate
            mise = st.mise_raw if st.mise_raw is not None else 1.0
            stfm = st.stfm_raw if st.stfm_raw is not None else 1.0
            return self._emit(app, interval, st.arsr or 0.0, 0.0, 0.0, mise, stfm, True)

        srsr = compute_srsr(c)
        alpha = estimate_alpha(c)
        try:
            arsr = compute_arsr(c)
        except EstimateUnavailable:
            flagged = True
            arsr = st.arsr if st.arsr is not None else srsr
        try:
            mise = estimate_slowdown_mise(alpha, arsr, srsr)
        except EstimateUnavailable:
            flagged = True
            mise = st.mise_raw if st.mise_raw is not None else 1.0
        try:
            stfm = estimate_slowdown_stfm(c)
        except EstimateUnavailable:
            flagged = True
            stfm = st.stfm_raw if st.stfm_raw is not None else 1.0
        if not flagged:
            st.arsr = arsr
        return self._emit(app, interval, arsr, srsr, alpha, mise, stfm, flagged)

    def _emit(self, app, interval, arsr, srsr, alpha, mise, stfm, flagged):
        st = self._state[app]
        w = self.smoothing
        mise_s = mise if st.mise is None else w * st.mise + (1 - w) * mise
        stfm_s = stfm if st.stfm is None else w * st.stfm + (1 - w) * stfm
        st.mise_raw, st.stfm_raw, st.mise, st.stfm = mise, stfm, mise_s, stfm_s
        return SlowdownEstimate(
            app_id=app,
            interval=interval,
            arsr=arsr,
            srsr=srsr,
            alpha=alpha,
            mise_slowdown=mise_s,
            stfm_slowdown=stfm_s,
            mise_raw=mise,
            stfm_raw=stfm,
            carried_forward=flagged,
        )

    def finalize_interval(self, counters: list) -> list:
        """Estimate every app for the finished interval and reset its counters."""
        interval = len(self.history)
        ests = [self._one(i, interval, c) for i, c in enumerate(counters)]
        for i in range(len(counters)):
            counters[i] = EpochCounters()
        self.history.append(ests)
        return ests


def finalize_interval(counters: list, estimator: Optional[IntervalEstimator] = None) -> list:
    """Functional entry point; builds a fresh estimator when none is supplied."""
    if estimator is None:
        estimator = IntervalEstimator(len(counters))
    return estimator.finalize_interval(counters)
