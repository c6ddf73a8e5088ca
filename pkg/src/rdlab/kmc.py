"""Event-driven kinetic Monte Carlo for the lattice annihilation models.

One run simulates the continuous-time Markov jump process defined by
the hop and contact-reaction rates of a ModelSpec.  Per-particle hop
rate is 2d*D_X (one channel per lattice direction); a site with n_A
particles carries an A+A channel of rate lam*n_A*(n_A-1)/2 and an A+B
channel of rate delta*n_A*n_B.  Under single occupancy reactions fire
between nearest-neighbor pairs instead, at the same rate per neighbor
channel, since same-site contact is excluded.

An optional per-species occupancy cap mirrors the truncation used by
the exact master-equation oracle: hops into a site already holding
`cap` particles of that species are blocked.  Capped runs exist only
for oracle comparisons.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import Absorbed, ValidationError
from .lattice import LatticeSpec, ModelKind, ModelSpec, Occupancy, SimState, SiteGraph, build_lattice
from .timeseries import TimeSeries

_KIND_CODE = {ModelKind.AA: _kernels.KIND_AA,
              ModelKind.AB: _kernels.KIND_AB,
              ModelKind.ABBA: _kernels.KIND_ABBA}


@dataclass(frozen=True)
class EventSchedule:
    """When to sample the trajectory and when to dump snapshots."""

    t_end: float
    sample_times: np.ndarray
    snapshot_times: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        object.__setattr__(self, "sample_times",
                           np.asarray(self.sample_times, dtype=np.float64))
        object.__setattr__(self, "snapshot_times",
                           np.asarray(self.snapshot_times, dtype=np.float64))
        st = self.sample_times
        if st.ndim != 1 or len(st) == 0:
            raise ValidationError("sample_times must be a nonempty 1-d sequence")
        if np.any(np.diff(st) <= 0):
            raise ValidationError("sample_times must be strictly increasing")
        for arr in (st, self.snapshot_times):
            if len(arr) and (arr.min() < 0 or arr.max() > self.t_end):
                raise ValidationError("schedule times must lie in [0, t_end]")


def log_schedule(t_min: float, t_end: float, n: int,
                 snapshot_times=()) -> EventSchedule:
    """Log-spaced sampling, the default for anything fitted on log axes."""
    if not (0 < t_min < t_end):
        raise ValidationError("need 0 < t_min < t_end")
    return EventSchedule(
        t_end=t_end,
        sample_times=np.geomspace(t_min, t_end, n),
        snapshot_times=np.asarray(snapshot_times, dtype=np.float64),
    )


@dataclass
class RngStream:
    """Deterministic replica RNG: (seed, stream_id) fixes the sequence."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        ss = np.random.SeedSequence(
            (self.seed & 0xFFFFFFFFFFFFFFFF, self.stream_id & 0xFFFFFFFFFFFFFFFF))
        state = ss.generate_state(4, np.uint64)
        if not state.any():  # all-zero state is the one forbidden xoshiro seed
            state[0] = np.uint64(0x9E3779B97F4A7C15)
        self._state = state

    @property
    def state(self) -> np.ndarray:
        return self._state


def _checkpoints(schedule: EventSchedule):
    """Merge sample and snapshot times into one sorted flagged list."""
    times = {}
    for t in schedule.sample_times:
        times[float(t)] = times.get(float(t), 0) | 1
    for t in schedule.snapshot_times:
        times[float(t)] = times.get(float(t), 0) | 2
    ordered = sorted(times)
    ck_t = np.array(ordered, dtype=np.float64)
    ck_f = np.array([times[t] for t in ordered], dtype=np.int64)
    return ck_t, ck_f


def _kernel_args(state: SimState, model: ModelSpec, graph: SiteGraph | None, cap: int):
    if graph is None:
        graph = build_lattice(state.lattice)
    single = state.lattice.occupancy is Occupancy.SINGLE
    if single and cap:
        raise ValidationError("occupancy cap applies to multiple occupancy only")
    return graph, _KIND_CODE[model.kind], single, int(cap)


def step(state: SimState, model: ModelSpec, rng: RngStream, cap: int = 0):
    """Execute exactly one event in place; returns (state, dt).

    Raises Absorbed when the total event rate is zero (or every hop is
    blocked by exclusion and no reaction can fire).
    """
    graph, kind, single, cap = _kernel_args(state, model, None, cap)
    empty_f = np.empty(0, dtype=np.float64)
    empty_i = np.empty(0, dtype=np.int64)
    empty_grid = np.empty((0, state.lattice.total_sites), dtype=np.int64)
    t0 = state.time
    t, absorbed, n_events, _ = _kernels.run_kernel(
        state.n_a, state.n_b, graph.neighbors, kind, single, cap,
        model.D_A, model.D_B, model.lam, model.delta,
        rng.state, t0, empty_f, empty_i,
        empty_i.copy(), empty_i.copy(), empty_grid, empty_grid.copy(),
        1)
    state.refresh_totals()
    if absorbed or n_events == 0:
        raise Absorbed(f"no executable event at t={t0}")
    state.time = t
    return state, t - t0


def run(state: SimState, model: ModelSpec, schedule: EventSchedule,
        rng: RngStream, cap: int = 0, graph: SiteGraph | None = None,
        on_snapshot=None) -> TimeSeries:
    """Simulate until every scheduled sample is recorded.

    The value recorded at a sample time is the state after the last
    event at or before it (right-continuous step interpolation).  If
    the dynamics freezes, remaining samples repeat the frozen state.
    When the schedule has snapshot_times, on_snapshot(t, SimState copy)
    is called for each, in time order, after the run.
    """
    graph, kind, single, cap = _kernel_args(state, model, graph, cap)
    ck_t, ck_f = _checkpoints(schedule)
    n_samp = len(schedule.sample_times)
    n_snap = int(np.count_nonzero(ck_f & 2))
    out_na = np.zeros(n_samp, dtype=np.int64)
    out_nb = np.zeros(n_samp, dtype=np.int64)
    v = state.lattice.total_sites
    snap_a = np.zeros((n_snap, v), dtype=np.int64)
    snap_b = np.zeros((n_snap, v), dtype=np.int64)

    _kernels.run_kernel(
        state.n_a, state.n_b, graph.neighbors, kind, single, cap,
        model.D_A, model.D_B, model.lam, model.delta,
        rng.state, state.time, ck_t, ck_f,
        out_na, out_nb, snap_a, snap_b,
        -1)
    state.refresh_totals()
    state.time = float(ck_t[-1])  # the state is exact as of the last checkpoint

    if on_snapshot is not None and n_snap:
        snap_times = ck_t[(ck_f & 2).astype(bool)]
        for i, ts in enumerate(snap_times):
            snap_state = SimState(lattice=state.lattice, time=float(ts),
                                  n_a=snap_a[i].copy(), n_b=snap_b[i].copy())
            on_snapshot(float(ts), snap_state)

    return TimeSeries(t=schedule.sample_times.copy(),
                      n_a=out_na, n_b=out_nb, volume=v)


def replica_init_seed(base_seed: int, stream_id: int) -> int:
    """Seed for the initial placement of one replica."""
    ss = np.random.SeedSequence(
        (base_seed & 0xFFFFFFFFFFFFFFFF, 0x1717, stream_id & 0xFFFFFFFFFFFFFFFF))
    return int(ss.generate_state(1, np.uint64)[0])


def run_ensemble(lattice: LatticeSpec, model: ModelSpec, schedule: EventSchedule,
                 rho0_a: float, rho0_b: float, base_seed: int, n_replicas: int,
                 threads: int = 1, initial_state: SimState | None = None,
                 cap: int = 0, on_snapshot=None) -> list[TimeSeries]:
    """Run n_replicas independent trajectories; replica r uses stream_id r.

    Each replica draws a fresh uniform initial condition unless a fixed
    initial_state is supplied (then all replicas start from it).  Results
    come back in stream_id order regardless of thread scheduling, so the
    ensemble output is deterministic in (base_seed, n_replicas).
    """
    from .lattice import init_uniform

    graph = build_lattice(lattice)

    def one(r: int) -> TimeSeries:
        if initial_state is not None:
            st = initial_state.copy()
        else:
            st = init_uniform(lattice, rho0_a, rho0_b, replica_init_seed(base_seed, r))
        cb = None if on_snapshot is None else (lambda t, s, r=r: on_snapshot(r, t, s))
        return run(st, model, schedule, RngStream(base_seed, r), cap=cap,
                   graph=graph, on_snapshot=cb)

    if threads <= 1 or n_replicas == 1:
        return [one(r) for r in range(n_replicas)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(n_replicas)))
