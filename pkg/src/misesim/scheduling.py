"""Request selection (FR-FCFS, highest-priority overlay) and lottery share enforcement."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .dram import BankState, MemRequest
from .errors import ConfigurationError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
TWO_64 = float(1 << 64)


def splitmix_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; returns ``(new_state, value)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, stream: int) -> int:
    """Independent 64-bit seed for sub-stream ``stream`` of a run seed."""
    _, value = splitmix_next((seed ^ ((stream + 1) * GOLDEN_GAMMA)) & MASK64)
    return value


def uniform(value: int) -> float:
    return value / TWO_64


@dataclass(frozen=True)
class BandwidthShares:
    """Per-app lottery weights, indexed by app id."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise ConfigurationError("shares need at least one app")
        if any(x < 0 for x in w):
            raise ConfigurationError(f"negative share in {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ConfigurationError(f"shares must sum to 1, got {sum(w)!r}")

    @classmethod
    def equal(cls, n: int) -> "BandwidthShares":
        return cls((1.0 / n,) * n)

    @classmethod
    def normalized(cls, raw: Sequence[float]) -> "BandwidthShares":
        total = float(sum(raw))
        if total <= 0:
            raise ConfigurationError("cannot normalize all-zero weights")
        # plain division keeps equal inputs exactly equal; the residue is far below the 1e-9 check
        return cls(tuple(x / total for x in raw))

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    def __iter__(self):
        return iter(self.weights)


def _order_key(req: MemRequest, pos: int, open_row) -> tuple:
    return (req.row != open_row, req.arrival_cycle, req.app_id, pos)


def frfcfs_pick(
    queue: Sequence[MemRequest],
    banks: Mapping[tuple, BankState],
    now: int,
) -> Optional[MemRequest]:
    """Row hits first, then oldest, then lowest app id, then queue position.

    ``banks`` maps ``(channel, bank)`` to its state; only requests whose bank
    is free at ``now`` are eligible.
    """
    best = None
    best_key = None
    for pos, req in enumerate(queue):
        bank = banks[req.channel, req.bank]
        if bank.busy_until > now:
            continue
        key = _order_key(req, pos, bank.open_row)
        if best_key is None or key < best_key:
            best, best_key = req, key
    return best


def priority_overlay_pick(
    queue: Sequence[MemRequest],
    banks: Mapping[tuple, BankState],
    now: int,
    hp_app: Optional[int],
) -> Optional[MemRequest]:
    """FR-FCFS restricted to ``hp_app`` when it has a serviceable request.

    Falls back to plain FR-FCFS over the whole queue otherwise, so the
    scheduler stays work-conserving.
    """
    best = None
    best_key = None
    for pos, req in enumerate(queue):
        bank = banks[req.channel, req.bank]
        if bank.busy_until > now:
            continue
        key = (req.app_id != hp_app,) + _order_key(req, pos, bank.open_row)
        if best_key is None or key < best_key:
            best, best_key = req, key
    return best


def lottery_draw(shares, rng: int) -> tuple[int, int]:
    """Pick an app with probability equal to its weight.

    ``u = value / 2**64`` is located on the cumulative weights in ascending
    app order. Returns ``(app, new_rng)``.
    """
    weights = shares.weights if isinstance(shares, BandwidthShares) else tuple(shares)
    if not weights or not any(w > 0 for w in weights):
        raise ConfigurationError("lottery needs at least one positive weight")
    rng, value = splitmix_next(rng)
    u = uniform(value)
    acc = 0.0
    last = 0
    for app, w in enumerate(weights):
        if w <= 0:
            continue
        last = app
        acc += w
        if u < acc:
            return app, rng
    # u landed in the rounding gap above the final cumulative sum
    return last, rng
