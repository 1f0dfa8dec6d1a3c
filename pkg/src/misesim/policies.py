"""Interval-boundary bandwidth controllers: MISE-QoS, MISE-Fair, Always-Prioritize.

The step rules (additive QoS steps with a hysteresis band, shares
proportional to slowdown, patience-gated bound moves) are deliberately
simple controllers that only fix the direction of each adjustment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import ConfigurationError, InsufficientData
from .scheduling import BandwidthShares

MET = "met"
AT_RISK = "at-risk"
UNMEETABLE = "unmeetable"

FRFCFS = "frfcfs"
ALWAYS_PRIORITIZE = "always-prioritize"
MISE_QOS = "mise-qos"
MISE_FAIR = "mise-fair"
POLICIES = (FRFCFS, ALWAYS_PRIORITIZE, MISE_QOS, MISE_FAIR)


@dataclass(frozen=True)
class QosConfig:
    aoi: int = 0
    bound: float = 2.0
    step: float = 1.0 / 16
    hysteresis: float = 0.05
    unmeetable_patience: int = 3

    def __post_init__(self):
        if not self.bound > 1:
            raise ConfigurationError("QoS bound must exceed 1")
        if not 0 < self.step <= 1:
            raise ConfigurationError("QoS step must be in (0, 1]")
        if not 0 <= self.hysteresis < 1:
            raise ConfigurationError("hysteresis must be in [0, 1)")
        if self.unmeetable_patience < 1:
            raise ConfigurationError("unmeetable_patience must be >= 1")


@dataclass(frozen=True)
class FairConfig:
    initial_bound_B: float = 3.0
    delta: float = 0.1
    patience: int = 2
    min_share: float = 0.02
    exponent: float = 1.0

    def __post_init__(self):
        if not self.initial_bound_B > 1:
            raise ConfigurationError("initial_bound_B must exceed 1")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if self.patience < 1:
            raise ConfigurationError("patience must be >= 1")
        if self.min_share < 0:
            raise ConfigurationError("min_share must be >= 0")


@dataclass(frozen=True)
class PolicyOutcome:
    shares: BandwidthShares
    bound_status: Optional[str] = None
    current_B: Optional[float] = None
    full_share_streak: int = 0
    over_streak: int = 0
    under_streak: int = 0


def _with_aoi_share(aoi: int, n: int, share: float) -> BandwidthShares:
    if n == 1:
        return BandwidthShares((1.0,))
    rest = (1.0 - share) / (n - 1)
    weights = [rest] * n
    weights[aoi] = share
    return BandwidthShares(weights)


def qos_adjust(est, cfg: QosConfig, shares: BandwidthShares, full_share_streak: int = 0) -> PolicyOutcome:
    """Nudge the AoI's share toward just enough bandwidth to meet its bound.

    ``est`` is the AoI's estimate (a SlowdownEstimate or a bare slowdown).
    ``full_share_streak`` counts prior consecutive intervals the AoI already
    held the whole bandwidth while still missing the bound.
    """
    n = len(shares)
    if not 0 <= cfg.aoi < n:
        raise ConfigurationError(f"aoi {cfg.aoi} not in 0..{n - 1}")
    slowdown = est if isinstance(est, (int, float)) else est.mise_slowdown
    current = shares[cfg.aoi]
    missing = slowdown > cfg.bound

    if missing and current >= 1.0 - 1e-12:
        full_share_streak += 1
    else:
        full_share_streak = 0

    share = current
    if missing:
        share = min(1.0, current + cfg.step)
    elif slowdown < cfg.bound * (1.0 - cfg.hysteresis):
        share = max(1.0 / n, current - cfg.step)

    if full_share_streak >= cfg.unmeetable_patience:
        status = UNMEETABLE
    elif missing:
        status = AT_RISK
    else:
        status = MET
    return PolicyOutcome(_with_aoi_share(cfg.aoi, n, share), bound_status=status,
                         full_share_streak=full_share_streak)


def qos_bound_met_prediction(history: Sequence, cfg: QosConfig, warmup: int = 0) -> bool:
    """Predict whether the AoI meets its bound from its estimate history.

    ``history`` holds the AoI's per-interval estimates (objects or floats);
    the first ``warmup`` entries are ignored.
    """
    values = [h if isinstance(h, (int, float)) else h.mise_slowdown for h in history][warmup:]
    if not values:
        raise InsufficientData("no post-warmup estimates to predict from")
    return sum(values) / len(values) <= cfg.bound


def always_prioritize_shares(aoi: int, n: int) -> BandwidthShares:
    if n < 1 or not 0 <= aoi < n:
        raise ConfigurationError(f"aoi {aoi} invalid for {n} apps")
    w = [0.0] * n
    w[aoi] = 1.0
    return BandwidthShares(w)


def fair_adjust(ests: Sequence, cfg: FairConfig, shares: BandwidthShares, B: float,
                streaks: tuple = (0, 0)) -> PolicyOutcome:
    """Give more bandwidth to the apps slowed down the most and move the bound B.

    ``streaks`` is ``(over, under)``: consecutive intervals the worst
    slowdown sat above B, or below B - delta.
    """
    n = len(shares)
    values = [e if isinstance(e, (int, float)) else e.mise_slowdown for e in ests]
    if len(values) != n or any(v is None for v in values):
        raise ConfigurationError(f"need one estimate per app ({n}), got {len(values)}")

    powered = [max(v, 0.0) ** cfg.exponent for v in values]
    total = sum(powered)
    if total <= 0:
        new_shares = BandwidthShares.equal(n)
    else:
        floored = [max(cfg.min_share, p / total) for p in powered]
        new_shares = BandwidthShares.normalized(floored)

    over, under = streaks
    worst = max(values)
    over = over + 1 if worst > B else 0
    under = under + 1 if worst < B - cfg.delta else 0
    if over >= cfg.patience:
        B, over = B + cfg.delta, 0
    elif under >= cfg.patience:
        B, under = max(1.0, B - cfg.delta), 0
    return PolicyOutcome(new_shares, current_B=B, over_streak=over, under_streak=under)


class Policy:
    """Stateful controller driven by the simulator at interval boundaries."""

    name = FRFCFS

    def initial_shares(self, n: int) -> BandwidthShares:
        return BandwidthShares.equal(n)

    def update(self, ests: list, shares: BandwidthShares) -> PolicyOutcome:
        return PolicyOutcome(shares)


class FrFcfsPolicy(Policy):
    """Equal-share lottery with fixed shares; the FR-FCFS baseline."""


class AlwaysPrioritizePolicy(Policy):
    name = ALWAYS_PRIORITIZE

    def __init__(self, aoi: int = 0):
        self.aoi = aoi

    def initial_shares(self, n):
        return always_prioritize_shares(self.aoi, n)

    def update(self, ests, shares):
        return PolicyOutcome(shares, bound_status=None)


def _pick(est, use_stfm: bool) -> float:
    return est.stfm_slowdown if use_stfm else est.mise_slowdown


class MiseQosPolicy(Policy):
    name = MISE_QOS

    def __init__(self, cfg: QosConfig, use_stfm: bool = False):
        self.cfg = cfg
        self.use_stfm = use_stfm
        self.streak = 0
        self.outcomes = []

    def initial_shares(self, n):
        if not 0 <= self.cfg.aoi < n:
            raise ConfigurationError(f"aoi {self.cfg.aoi} not in 0..{n - 1}")
        return BandwidthShares.equal(n)

    def update(self, ests, shares):
        out = qos_adjust(_pick(ests[self.cfg.aoi], self.use_stfm), self.cfg, shares, self.streak)
        self.streak = out.full_share_streak
        self.outcomes.append(out)
        return out


class MiseFairPolicy(Policy):
    name = MISE_FAIR

    def __init__(self, cfg: FairConfig, use_stfm: bool = False):
        self.cfg = cfg
        self.use_stfm = use_stfm
        self.B = cfg.initial_bound_B
        self.streaks = (0, 0)
        self.outcomes = []

    def update(self, ests, shares):
        out = fair_adjust([_pick(e, self.use_stfm) for e in ests], self.cfg, shares, self.B, self.streaks)
        self.B = out.current_B
        self.streaks = (out.over_streak, out.under_streak)
        self.outcomes.append(out)
        return out


def make_policy(name: str, qos: Optional[QosConfig] = None, fair: Optional[FairConfig] = None,
                use_stfm: bool = False) -> Policy:
    if name == FRFCFS:
        return FrFcfsPolicy()
    if name == ALWAYS_PRIORITIZE:
        return AlwaysPrioritizePolicy((qos or QosConfig()).aoi)
    if name == MISE_QOS:
        return MiseQosPolicy(qos or QosConfig(), use_stfm)
    if name == MISE_FAIR:
        return MiseFairPolicy(fair or FairConfig(), use_stfm)
    raise ConfigurationError(f"unknown policy {name!r}; expected one of {', '.join(POLICIES)}")
