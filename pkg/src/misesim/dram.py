"""DRAM timing model: three-latency open-page banks behind a shared channel bus."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigurationError

CLOSED = None


@dataclass(frozen=True)
class DramConfig:
    num_channels: int = 1
    banks_per_channel: int = 8
    row_hit_latency: int = 50
    row_closed_latency: int = 100
    row_conflict_latency: int = 150
    bus_occupancy: int = 4

    def __post_init__(self):
        if self.num_channels < 1 or self.banks_per_channel < 1:
            raise ConfigurationError("need at least one channel and one bank")
        if min(self.row_hit_latency, self.row_closed_latency, self.row_conflict_latency) < 1:
            raise ConfigurationError("DRAM latencies must be >= 1 cycle")
        if not self.row_hit_latency < self.row_closed_latency < self.row_conflict_latency:
            raise ConfigurationError("latencies must satisfy hit < closed < conflict")
        if self.bus_occupancy < 1:
            raise ConfigurationError("bus_occupancy must be >= 1")

    @property
    def num_banks(self) -> int:
        return self.num_channels * self.banks_per_channel

    def decompose(self, address: int) -> tuple[int, int, int]:
        """Map a block address to ``(channel, bank, row)``.

        channel = addr mod C, bank = (addr // C) mod B, row = addr // (B*C).
        """
        c = self.num_channels
        b = self.banks_per_channel
        return address % c, (address // c) % b, address // (b * c)


@dataclass(slots=True)
class MemRequest:
    app_id: int
    channel: int
    bank: int
    row: int
    arrival_cycle: int
    completion_cycle: Optional[int] = None
    seq: int = 0


@dataclass(slots=True)
class BankState:
    """Per-bank row buffer and occupancy.

    The simulator mutates its banks in place; :func:`service_request` is the
    pure variant used by callers that want a fresh state back.
    """

    open_row: Optional[int] = CLOSED
    busy_until: int = 0
    current_owner: Optional[int] = None

    def is_free(self, now: int) -> bool:
        return self.busy_until <= now


def access_latency(open_row, row, cfg: DramConfig) -> int:
    if open_row is CLOSED:
        return cfg.row_closed_latency
    if open_row == row:
        return cfg.row_hit_latency
    return cfg.row_conflict_latency


def service_request(bank: BankState, req: MemRequest, cfg: DramConfig, now: int):
    """Start servicing ``req`` on ``bank`` at cycle ``now``.

    Returns ``(latency, new_bank)``. The row stays open afterwards.
    """
    if bank.busy_until > now:
        raise ValueError(f"bank busy until {bank.busy_until}, cannot start at {now}")
    latency = access_latency(bank.open_row, req.row, cfg)
    new_bank = dataclasses.replace(
        bank, open_row=req.row, busy_until=now + latency, current_owner=req.app_id
    )
    return latency, new_bank
