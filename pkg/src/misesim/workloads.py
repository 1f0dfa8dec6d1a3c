"""Deterministic per-app request streams: synthetic generators and text traces."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Optional

from .dram import DramConfig
from .errors import ConfigurationError, TraceParseError, TraceRangeError
from .scheduling import MASK64, derive_seed, splitmix_next, uniform

SYNTHETIC = "synthetic"
TRACE = "trace"

# compute gap per microbenchmark intensity level, 1 (lightest) .. 8 (heaviest)
MICROBENCH_GAPS = (2000, 1000, 500, 250, 120, 60, 20, 0)
MICROBENCH_LOCALITY = 0.95
MICROBENCH_ROWS = 64
ADDRESS_MAPPING = "channel = addr % C; bank = (addr // C) % B; row = addr // (B * C)"


@dataclass(frozen=True)
class AppSpec:
    kind: str = SYNTHETIC
    compute_gap: int = 100
    row_locality: float = 0.5
    working_rows: int = 16
    mlp_limit: int = 1
    trace_path: Optional[str] = None
    instruction_budget: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in (SYNTHETIC, TRACE):
            raise ConfigurationError(f"unknown app kind {self.kind!r}")
        if not 0.0 <= self.row_locality <= 1.0:
            raise ConfigurationError(f"row_locality {self.row_locality} outside [0, 1]")
        if self.compute_gap < 0:
            raise ConfigurationError("compute_gap must be >= 0")
        if self.mlp_limit < 1:
            raise ConfigurationError("mlp_limit must be >= 1")
        if self.working_rows < 1:
            raise ConfigurationError("working_rows must be >= 1")
        if self.kind == TRACE and not self.trace_path:
            raise ConfigurationError("trace apps need a trace_path")
        if self.instruction_budget is not None and self.instruction_budget < 1:
            raise ConfigurationError("instruction_budget must be positive")


class StreamEntry(NamedTuple):
    gap: int
    channel: int
    bank: int
    row: int


@dataclass(frozen=True)
class RequestStream:
    entries: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


def synthetic_entries(spec: AppSpec, seed: int, dram: DramConfig) -> Iterator[StreamEntry]:
    """Endless synthetic stream; the address sequence depends only on (spec, seed).

    Rows are drawn from ``working_rows`` slots. Each request reuses the
    current slot with probability ``row_locality``, otherwise jumps to a
    uniformly chosen different slot. Slot ``j`` is placed by the fixed
    address decomposition of ``base + j``.
    """
    rng = seed & MASK64
    rng, value = splitmix_next(rng)
    span = dram.num_banks
    # app-private row region; collisions between apps need equal 20-bit draws
    base = ((value >> 44) << 10) * span
    rows = spec.working_rows
    rng, value = splitmix_next(rng)
    slot = value % rows
    first = True
    gap = spec.compute_gap
    decompose = dram.decompose
    while True:
        if not first:
            rng, value = splitmix_next(rng)
            if rows > 1 and uniform(value) >= spec.row_locality:
                rng, value = splitmix_next(rng)
                step = 1 + value % (rows - 1)
                slot = (slot + step) % rows
        first = False
        channel, bank, row = decompose(base + slot)
        yield StreamEntry(gap, channel, bank, row)


def gen_app_stream(spec: AppSpec, seed: int, dram: DramConfig, length: Optional[int] = None) -> RequestStream:
    """Materialize the first ``length`` requests of a synthetic app.

    Without ``length`` the stream is cut at ``instruction_budget``.
    """
    if spec.kind != SYNTHETIC:
        raise ConfigurationError("gen_app_stream only handles synthetic apps")
    if length is None:
        if spec.instruction_budget is None:
            raise ConfigurationError("need a length or an instruction_budget to bound the stream")
        length = -(-spec.instruction_budget // (spec.compute_gap + 1))
    entries = tuple(itertools.islice(synthetic_entries(spec, seed, dram), length))
    return RequestStream(entries, {"kind": SYNTHETIC, "seed": seed})


def app_entries(spec: AppSpec, seed: int, dram: DramConfig) -> Iterator[StreamEntry]:
    """Stream iterator used by the simulator for either app kind."""
    if spec.kind == SYNTHETIC:
        return synthetic_entries(spec, seed, dram)
    return iter(parse_trace(spec.trace_path, dram).entries)


def microbench_spec(intensity_level: int) -> AppSpec:
    """Streaming microbenchmark; higher levels compute less between accesses."""
    if not 1 <= intensity_level <= len(MICROBENCH_GAPS):
        raise ConfigurationError(
            f"intensity level {intensity_level} outside 1..{len(MICROBENCH_GAPS)}"
        )
    return AppSpec(
        compute_gap=MICROBENCH_GAPS[intensity_level - 1],
        row_locality=MICROBENCH_LOCALITY,
        working_rows=MICROBENCH_ROWS,
        mlp_limit=2,
        name=f"ubench{intensity_level}",
    )


def parse_trace(path, dram: DramConfig) -> RequestStream:
    """Read an ``instruction_gap,address`` text trace.

    ``#`` starts a comment line and blank lines are skipped. Fields are
    unsigned decimal integers below 2**64.
    """
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != 2:
                raise TraceParseError(lineno, f"expected 'instruction_gap,address', got {line!r}")
            values = []
            for name, text in zip(("instruction_gap", "address"), fields):
                if not text.isdigit() or not text.isascii():
                    raise TraceParseError(lineno, f"{name} {text!r} is not an unsigned decimal integer")
                v = int(text)
                if v > MASK64:
                    raise TraceRangeError(lineno, f"{name} {v} does not fit in 64 bits")
                values.append(v)
            gap, address = values
            entries.append(StreamEntry(gap, *dram.decompose(address)))
    return RequestStream(
        tuple(entries), {"kind": TRACE, "path": str(Path(path)), "mapping": ADDRESS_MAPPING}
    )


def synthetic_mix(seed: int, n_apps: int = 4) -> list:
    """Random multiprogrammed mix of synthetic apps, reproducible from ``seed``."""
    gaps = (0, 10, 30, 60, 120, 250, 500, 1000)
    localities = (0.0, 0.3, 0.6, 0.8, 0.9, 0.95)
    rows = (8, 16, 64)
    mlps = (1, 1, 2)
    rng = derive_seed(seed, 0xA11)
    apps = []
    for i in range(n_apps):
        picks = []
        for choices in (gaps, localities, rows, mlps):
            rng, value = splitmix_next(rng)
            picks.append(choices[value % len(choices)])
        gap, loc, nrows, mlp = picks
        apps.append(AppSpec(compute_gap=gap, row_locality=loc, working_rows=nrows,
                            mlp_limit=mlp, name=f"mix{seed}-{i}"))
    return apps
