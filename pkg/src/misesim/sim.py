"""Cycle-level multicore memory simulator.

Every cycle runs three phases in order:

1. cores: a core with ``mlp_limit`` requests outstanding stalls; otherwise it
   retires one instruction, which is a memory instruction (issuing a request
   that joins the controller queue the same cycle) once its compute gap is
   used up;
2. scheduler: each channel whose bus is idle starts at most one request on
   a free bank, chosen by FR-FCFS under the epoch's highest-priority app;
   the bus is then held for ``bus_occupancy`` cycles;
3. completions: requests finishing this cycle release their core slot,
   which takes effect from the next cycle.

A request issued at cycle t to an idle bank with latency L therefore costs
its core exactly L stall cycles.

:meth:`Simulator.run` jumps over spans in which nothing can change state and
bulk-accounts them; :meth:`Simulator.step` executes a single cycle. Both
produce identical counters.
"""
from __future__ import annotations

import heapq
import json
from bisect import bisect_left
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Sequence

from .dram import BankState, DramConfig, MemRequest, access_latency
from .errors import ConfigurationError, InsufficientData
from .models import EpochCounters, IntervalEstimator, SlowdownEstimate
from .policies import FrFcfsPolicy, Policy
from .scheduling import BandwidthShares, derive_seed, lottery_draw, priority_overlay_pick
from .workloads import AppSpec, app_entries

EPOCH_LEN = 10_000
INTERVAL_LEN = 1_000_000
LOTTERY_STREAM = 0x10770


class ServiceRecord(NamedTuple):
    start: int
    end: int
    channel: int
    bank: int
    row: int
    app_id: int
    seq: int


def stream_seed(seed: int, app_index: int) -> int:
    """Seed of app ``app_index``'s address stream within a run seeded ``seed``."""
    return derive_seed(seed, app_index)


@dataclass(frozen=True)
class Trajectory:
    """Cycle cost of a core's instruction progress.

    ``stall_at[k]`` is the retired-instruction count when stall ``k`` began,
    ``stall_prefix[k]`` the total stall cycles before it.
    """

    stall_at: tuple
    stall_prefix: tuple
    retired: int

    def elapsed(self, instructions: int) -> int:
        """Cycles from reset until the ``instructions``-th retirement."""
        if instructions > self.retired:
            raise InsufficientData(f"only {self.retired} instructions retired, asked for {instructions}")
        if instructions <= 0:
            return 0
        k = bisect_left(self.stall_at, instructions)
        return instructions + self.stall_prefix[k]


@dataclass
class CoreState:
    app_id: int
    spec: AppSpec
    instructions_retired: int = 0
    outstanding_requests: int = 0
    stall_cycles: int = 0
    total_cycles: int = 0
    done: bool = False

    @property
    def stalled(self) -> bool:
        return not self.done and self.outstanding_requests >= self.spec.mlp_limit


class _Core:
    __slots__ = ("app_id", "mlp", "budget", "entries", "pending", "gap_left", "outstanding",
                 "retired", "stalls", "done", "stall_from", "stall_at_instr", "stall_at", "stall_lens")

    def __init__(self, app_id, spec, entries):
        self.app_id = app_id
        self.mlp = spec.mlp_limit
        self.budget = spec.instruction_budget
        self.entries = entries
        self.outstanding = 0
        self.retired = 0
        self.stalls = 0
        self.stall_from = None
        self.stall_at_instr = 0
        self.stall_at = []
        self.stall_lens = []
        self.pending = next(entries, None)
        self.done = self.pending is None
        self.gap_left = self.pending.gap if self.pending is not None else 0


@dataclass(frozen=True)
class SimResult:
    seed: int
    total_cycles: int
    apps: tuple
    policy: str
    epoch_len: int
    interval_len: int
    instructions_retired: tuple
    ipc: tuple
    stall_cycles: tuple
    counters_history: tuple
    estimates: tuple
    shares_history: tuple
    boundary_instructions: tuple
    bound_status: tuple
    fair_bound: tuple
    generated: int
    serviced: int
    pending: int
    trajectories: tuple = field(repr=False, compare=True)

    @property
    def num_apps(self) -> int:
        return len(self.apps)

    @property
    def num_intervals(self) -> int:
        return len(self.estimates)

    def app_estimates(self, app: int) -> list:
        return [row[app] for row in self.estimates]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trajectories"] = [
            {"stall_at": list(t.stall_at), "stall_prefix": list(t.stall_prefix), "retired": t.retired}
            for t in self.trajectories
        ]
        d["shares_history"] = [list(s.weights) for s in self.shares_history]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class Simulator:
    """One shared-memory multicore run.

    ``stream_seeds`` pins each app's address stream; by default they are
    derived from ``seed`` and the app's position, which is what lets an
    alone replay regenerate the identical stream.
    """

    def __init__(
        self,
        cfg: DramConfig,
        apps: Sequence[AppSpec],
        policy: Optional[Policy] = None,
        seed: int = 0,
        epoch_len: int = EPOCH_LEN,
        interval_len: int = INTERVAL_LEN,
        stream_seeds: Optional[Sequence[int]] = None,
        smoothing: float = 0.5,
        hp_row_interference: bool = True,
        record_service: bool = False,
    ):
        if not apps:
            raise ConfigurationError("need at least one app")
        if epoch_len < 1 or interval_len < 1 or interval_len % epoch_len:
            raise ConfigurationError("interval_len must be a positive multiple of epoch_len")
        self.cfg = cfg
        self.apps = tuple(apps)
        self.policy = policy if policy is not None else FrFcfsPolicy()
        self.seed = seed
        self.epoch_len = epoch_len
        self.interval_len = interval_len
        n = len(self.apps)
        if stream_seeds is None:
            stream_seeds = [stream_seed(seed, i) for i in range(n)]
        if len(stream_seeds) != n:
            raise ConfigurationError("one stream seed per app required")
        self.stream_seeds = tuple(stream_seeds)
        self.cores = [_Core(i, a, app_entries(a, s, cfg)) for i, (a, s) in enumerate(zip(self.apps, stream_seeds))]

        C, B = cfg.num_channels, cfg.banks_per_channel
        self.banks = [[BankState() for _ in range(B)] for _ in range(C)]
        self.bank_map = {(c, b): self.banks[c][b] for c in range(C) for b in range(B)}
        self.queues = [[] for _ in range(C)]
        self.bus_busy_until = [0] * C
        self.bus_owner = [None] * C
        self.inflight = []
        self.hp_row_interference = hp_row_interference
        self._shadow_rows = {}
        # [start, end) stretches an hp request spends in service only
        # because another app closed its row
        self._row_windows = []
        self.service_log = [] if record_service else None
        self._seq = 0
        self.generated = 0
        self.serviced = 0

        self.rng = derive_seed(seed, LOTTERY_STREAM)
        self.shares = self.policy.initial_shares(n)
        self.hp_app = None
        self.now = 0
        self._next_epoch = 0
        self._next_interval = interval_len
        self._hp_blocked = False
        self._stfm_blocked = ()

        self.counters = [EpochCounters() for _ in range(n)]
        self.estimator = IntervalEstimator(n, smoothing=smoothing)
        self.counters_history = []
        self.shares_history = []
        self.boundary_instructions = [[0] * n]
        self.bound_status = []
        self.fair_bound = []

    # -- per-cycle phases -------------------------------------------------

    def _boundaries(self, t):
        if t == self._next_interval:
            self._end_interval()
            self._next_interval += self.interval_len
        if t == self._next_epoch:
            self.hp_app, self.rng = lottery_draw(self.shares, self.rng)
            self.counters[self.hp_app].hp_cycles += self.epoch_len
            self._next_epoch += self.epoch_len

    def _end_interval(self):
        length = self.interval_len
        snapshot = []
        for c in self.counters:
            c.interval_cycles = length
            c.total_cycles = length
            c.interference_cycles_hp = min(c.interference_cycles_hp, c.hp_cycles)
            c.check()
            snapshot.append(EpochCounters(**asdict(c)))
        self.counters_history.append(tuple(snapshot))
        self.shares_history.append(self.shares)
        ests = self.estimator.finalize_interval(self.counters)
        self.boundary_instructions.append([c.retired for c in self.cores])
        outcome = self.policy.update(ests, self.shares)
        self.bound_status.append(outcome.bound_status)
        self.fair_bound.append(outcome.current_B)
        self.shares = outcome.shares

    def _cycle(self, t):
        self._boundaries(t)
        counters = self.counters
        hp = self.hp_app

        for core in self.cores:
            if core.done:
                continue
            if core.outstanding >= core.mlp:
                core.stalls += 1
                counters[core.app_id].stall_cycles += 1
                continue
            core.retired += 1
            if core.gap_left > 0:
                core.gap_left -= 1
            else:
                self._issue(core, t)
            if core.budget is not None and core.retired >= core.budget:
                core.done = True

        cfg = self.cfg
        for ch, queue in enumerate(self.queues):
            if not queue or self.bus_busy_until[ch] > t:
                continue
            req = priority_overlay_pick(queue, self.bank_map, t, hp)
            if req is None:
                continue
            queue.remove(req)
            bank = self.banks[ch][req.bank]
            latency = access_latency(bank.open_row, req.row, cfg)
            if self.hp_row_interference:
                # latency the app would have seen with only its own rows opened
                key = (req.app_id, ch, req.bank)
                own = access_latency(self._shadow_rows.get(key), req.row, cfg)
                self._shadow_rows[key] = req.row
                if req.app_id == hp and latency > own:
                    self._row_windows.append((t + own, t + latency, hp))
            bank.open_row = req.row
            bank.busy_until = t + latency
            bank.current_owner = req.app_id
            self.bus_busy_until[ch] = t + cfg.bus_occupancy
            self.bus_owner[ch] = req.app_id
            req.completion_cycle = t + latency
            heapq.heappush(self.inflight, (req.completion_cycle, req.seq, req))
            if self.service_log is not None:
                self.service_log.append(ServiceRecord(t, t + latency, ch, req.bank, req.row, req.app_id, req.seq))
            c = counters[req.app_id]
            c.shared_requests += 1
            if req.app_id == hp:
                c.hp_requests += 1

        inflight = self.inflight
        while inflight and inflight[0][0] <= t:
            _, _, req = heapq.heappop(inflight)
            self.serviced += 1
            core = self.cores[req.app_id]
            was_stalled = core.outstanding >= core.mlp
            core.outstanding -= 1
            if was_stalled and core.stall_from is not None:
                core.stall_at.append(core.stall_at_instr)
                core.stall_lens.append(t - core.stall_from)
                core.stall_from = None

        self._scan_interference(t)
        self._charge_interference(1)

    def _issue(self, core, t):
        e = core.pending
        req = MemRequest(core.app_id, e.channel, e.bank, e.row, t, seq=self._seq)
        self._seq += 1
        self.generated += 1
        self.queues[e.channel].append(req)
        core.outstanding += 1
        nxt = next(core.entries, None)
        if nxt is None:
            core.done = True
        else:
            core.pending = nxt
            core.gap_left = nxt.gap
        if core.outstanding >= core.mlp and not core.done:
            core.stall_from = t
            core.stall_at_instr = core.retired

    def _blocked_by_other(self, req, app, now):
        bank = self.banks[req.channel][req.bank]
        if bank.busy_until > now:
            return bank.current_owner != app
        return self.bus_busy_until[req.channel] > now and self.bus_owner[req.channel] != app

    def _scan_interference(self, t):
        """Find who is held up by other apps at the end of cycle ``t``.

        The high-priority app counts while its core is stalled and either one
        of its waiting requests is blocked by another app's bank or bus
        occupancy, or one of its requests sits in a row-conflict stretch
        caused by another app. The STFM-style counter looks only at each
        app's oldest waiting request.
        """
        hp = self.hp_app
        oldest = {}
        hp_blocked = False
        core = self.cores[hp]
        # delays only cost the hp app progress while its core is stalled
        hp_stalled = not core.done and core.outstanding >= core.mlp
        for queue in self.queues:
            for req in queue:
                a = req.app_id
                prev = oldest.get(a)
                if prev is None or req.seq < prev.seq:
                    oldest[a] = req
                if a == hp and hp_stalled and not hp_blocked and self._blocked_by_other(req, hp, t):
                    hp_blocked = True
        if self._row_windows:
            self._row_windows = [w for w in self._row_windows if w[1] > t]
            if hp_stalled and not hp_blocked:
                hp_blocked = any(start <= t and app == hp for start, _, app in self._row_windows)
        self._hp_blocked = hp_blocked
        self._stfm_blocked = tuple(a for a, r in oldest.items() if self._blocked_by_other(r, a, t))

    def _charge_interference(self, span):
        if self._hp_blocked:
            self.counters[self.hp_app].interference_cycles_hp += span
        for a in self._stfm_blocked:
            self.counters[a].stfm_interference_cycles += span

    # -- event skipping ---------------------------------------------------

    def _next_event(self, t, limit):
        nxt = min(limit, self._next_epoch if self._next_epoch > t else t + 1, self._next_interval)
        for core in self.cores:
            if core.done or core.outstanding >= core.mlp:
                continue
            when = t + 1 + core.gap_left
            if core.budget is not None:
                when = min(when, t + core.budget - core.retired)
            if when < nxt:
                nxt = when
        for start, end, _ in self._row_windows:
            if t < start < nxt:
                nxt = start
            if t < end < nxt:
                nxt = end
        if self.inflight and self.inflight[0][0] < nxt:
            nxt = self.inflight[0][0]
        for ch, queue in enumerate(self.queues):
            if not queue:
                continue
            bus = self.bus_busy_until[ch]
            if t < bus < nxt:
                nxt = bus
            banks = self.banks[ch]
            for req in queue:
                b = banks[req.bank].busy_until
                if t < b < nxt:
                    nxt = b
        return max(nxt, t + 1)

    def _quiet(self, span):
        counters = self.counters
        for core in self.cores:
            if core.done:
                continue
            if core.outstanding >= core.mlp:
                core.stalls += span
                counters[core.app_id].stall_cycles += span
            else:
                core.retired += span
                core.gap_left -= span
        # nothing changed since the last scan, by choice of span
        self._charge_interference(span)

    # -- driving ----------------------------------------------------------

    def step(self):
        """Execute exactly one cycle."""
        self._cycle(self.now)
        self.now += 1

    def run(self, horizon: int, skip: bool = True, stop_instructions: Optional[int] = None):
        """Advance to cycle ``horizon`` (exclusive).

        With ``stop_instructions`` the run may end early, as soon as app 0
        has retired at least that many instructions.
        """
        t = self.now
        core0 = self.cores[0]
        while t < horizon:
            self._cycle(t)
            if stop_instructions is not None and core0.retired >= stop_instructions:
                t += 1
                break
            if skip:
                nxt = self._next_event(t, horizon)
                if nxt > t + 1:
                    self._quiet(nxt - t - 1)
                t = nxt
            else:
                t += 1
        self.now = t
        if t == self._next_interval and stop_instructions is None:
            self._end_interval()
            self._next_interval += self.interval_len
        return self

    def trajectory(self, app: int) -> Trajectory:
        core = self.cores[app]
        prefix = [0]
        for s in core.stall_lens:
            prefix.append(prefix[-1] + s)
        return Trajectory(tuple(core.stall_at), tuple(prefix), core.retired)

    def core_state(self, app: int) -> CoreState:
        core = self.cores[app]
        return CoreState(app, self.apps[app], core.retired, core.outstanding, core.stalls, self.now, core.done)

    def pending_requests(self) -> int:
        return sum(len(q) for q in self.queues) + len(self.inflight)

    def result(self) -> SimResult:
        n = len(self.apps)
        total = self.now
        retired = tuple(c.retired for c in self.cores)
        return SimResult(
            seed=self.seed,
            total_cycles=total,
            apps=self.apps,
            policy=self.policy.name,
            epoch_len=self.epoch_len,
            interval_len=self.interval_len,
            instructions_retired=retired,
            ipc=tuple(r / total if total else 0.0 for r in retired),
            stall_cycles=tuple(c.stalls for c in self.cores),
            counters_history=tuple(self.counters_history),
            estimates=tuple(tuple(row) for row in self.estimator.history),
            shares_history=tuple(self.shares_history),
            boundary_instructions=tuple(tuple(b) for b in self.boundary_instructions),
            bound_status=tuple(self.bound_status),
            fair_bound=tuple(self.fair_bound),
            generated=self.generated,
            serviced=self.serviced,
            pending=self.pending_requests(),
            trajectories=tuple(self.trajectory(i) for i in range(n)),
        )


def run_simulation(
    cfg: DramConfig,
    apps: Sequence[AppSpec],
    policy: Optional[Policy] = None,
    seed: int = 0,
    horizon: int = 2 * INTERVAL_LEN,
    epoch_len: int = EPOCH_LEN,
    interval_len: int = INTERVAL_LEN,
    skip: bool = True,
) -> SimResult:
    if not apps:
        raise ConfigurationError("need at least one app")
    if horizon < interval_len:
        raise ConfigurationError(f"horizon {horizon} shorter than one interval ({interval_len})")
    sim = Simulator(cfg, apps, policy, seed, epoch_len, interval_len)
    sim.run(horizon, skip=skip)
    return sim.result()
