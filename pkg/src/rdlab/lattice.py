"""Lattice geometry, model parameters, and occupancy state.

Sites of a d-dimensional periodic lattice (d in {1,2,3}) are indexed
row-major: for sides [s0, s1, s2] the site at integer coordinates
(x0, x1, x2) has index x0 + s0*(x1 + s1*x2).  Every site has exactly
2*d neighbor channels (one per axis direction); on an axis of side 2
the two channels point to the same site and are kept as independent
hop channels.

The lattice spacing is fixed to 1 internally; mapping to physical
units is up to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ValidationError


class Occupancy(str, Enum):
    MULTIPLE = "multiple"  # any number of particles per site
    SINGLE = "single"      # at most one particle per site


class ModelKind(str, Enum):
    AA = "AA"      # A+A -> 0
    AB = "AB"      # A+B -> 0
    ABBA = "ABBA"  # A+A, B+B at rate lam; A+B at rate delta


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of a periodic lattice."""

    dimension: int
    sides: tuple[int, ...]
    occupancy: Occupancy = Occupancy.MULTIPLE

    def __post_init__(self):
        object.__setattr__(self, "sides", tuple(int(s) for s in self.sides))
        if self.dimension not in (1, 2, 3):
            raise ValidationError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if len(self.sides) != self.dimension:
            raise ValidationError(
                f"sides has length {len(self.sides)}, expected {self.dimension}"
            )
        if any(s < 2 for s in self.sides):
            raise ValidationError(f"every side must be >= 2, got {self.sides}")
        if not isinstance(self.occupancy, Occupancy):
            object.__setattr__(self, "occupancy", Occupancy(self.occupancy))

    @property
    def total_sites(self) -> int:
        n = 1
        for s in self.sides:
            n *= s
        return n

    def coords(self, index: int) -> tuple[int, ...]:
        """Integer coordinates of a site index."""
        out = []
        for s in self.sides:
            out.append(index % s)
            index //= s
        return tuple(out)


@dataclass(frozen=True)
class ModelSpec:
    """Reaction model: hop rates and contact reaction rates, all in 1/s.

    lam is the same-species pair rate (A+A, and B+B for ABBA); delta is
    the cross-species rate.  Rates that a model kind does not use must
    be zero.
    """

    kind: ModelKind
    D_A: float = 0.0
    D_B: float = 0.0
    lam: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, ModelKind):
            object.__setattr__(self, "kind", ModelKind(self.kind))
        for name in ("D_A", "D_B", "lam", "delta"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.kind is ModelKind.AA and self.delta != 0:
            raise ValidationError("AA model does not use delta; set it to 0")
        if self.kind is ModelKind.AB and self.lam != 0:
            raise ValidationError("AB model does not use lam; set it to 0")

    @property
    def has_b(self) -> bool:
        return self.kind is not ModelKind.AA


@dataclass(frozen=True)
class SiteGraph:
    """Site index <-> coordinates plus periodic neighbor lists.

    neighbors has shape (total_sites, 2*dimension); channel 2*axis is
    the -1 step along that axis and 2*axis+1 the +1 step.
    """

    spec: LatticeSpec
    neighbors: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.spec.total_sites

    @property
    def n_channels(self) -> int:
        return 2 * self.spec.dimension


def build_lattice(spec: LatticeSpec) -> SiteGraph:
    """Build the periodic neighbor table for a lattice spec."""
    sides = spec.sides
    dim = spec.dimension
    v = spec.total_sites
    idx = np.arange(v)
    coords = []
    rest = idx
    for s in sides:
        coords.append(rest % s)
        rest = rest // s
    strides = np.ones(dim, dtype=np.int64)
    for ax in range(1, dim):
        strides[ax] = strides[ax - 1] * sides[ax - 1]

    neighbors = np.empty((v, 2 * dim), dtype=np.int64)
    for ax in range(dim):
        down = (coords[ax] - 1) % sides[ax]
        up = (coords[ax] + 1) % sides[ax]
        base = idx - coords[ax] * strides[ax]
        neighbors[:, 2 * ax] = base + down * strides[ax]
        neighbors[:, 2 * ax + 1] = base + up * strides[ax]
    return SiteGraph(spec=spec, neighbors=neighbors)


@dataclass
class SimState:
    """Occupancy of every site plus cached totals and the current time.

    A state is owned by one running solver at a time; copy() before
    handing it to a second consumer.
    """

    lattice: LatticeSpec
    time: float = 0.0
    n_a: np.ndarray = field(default=None)
    n_b: np.ndarray = field(default=None)
    total_a: int = 0
    total_b: int = 0

    def __post_init__(self):
        v = self.lattice.total_sites
        if self.n_a is None:
            self.n_a = np.zeros(v, dtype=np.int64)
        if self.n_b is None:
            self.n_b = np.zeros(v, dtype=np.int64)
        self.n_a = np.asarray(self.n_a, dtype=np.int64)
        self.n_b = np.asarray(self.n_b, dtype=np.int64)
        if self.n_a.shape != (v,) or self.n_b.shape != (v,):
            raise ValidationError("occupancy arrays must have one entry per site")
        self.refresh_totals()

    def refresh_totals(self):
        self.total_a = int(self.n_a.sum())
        self.total_b = int(self.n_b.sum())

    def copy(self) -> "SimState":
        return SimState(
            lattice=self.lattice,
            time=self.time,
            n_a=self.n_a.copy(),
            n_b=self.n_b.copy(),
        )

    def validate(self):
        """Check occupancy invariants; raises ValidationError on breach."""
        if self.n_a.min() < 0 or self.n_b.min() < 0:
            raise ValidationError("negative site occupancy")
        if self.lattice.occupancy is Occupancy.SINGLE:
            if int((self.n_a + self.n_b).max()) > 1:
                raise ValidationError("single-occupancy lattice holds a doubly occupied site")
        if self.total_a != int(self.n_a.sum()) or self.total_b != int(self.n_b.sum()):
            raise ValidationError("cached totals out of sync with site sums")

    @property
    def rho_a(self) -> float:
        return self.total_a / self.lattice.total_sites

    @property
    def rho_b(self) -> float:
        return self.total_b / self.lattice.total_sites


def init_uniform(
    lattice: LatticeSpec | SimState, rho0_a: float, rho0_b: float, seed: int
) -> SimState:
    """Uniform random initial condition at t=0 (the perfectly mixed start).

    Places round(rho0*V) particles of each species.  Multiple occupancy
    draws each particle's site independently; single occupancy picks
    distinct sites.  The same seed reproduces the state bit for bit.
    Accepts either a LatticeSpec or an existing SimState (whose geometry
    is reused; its contents are not).
    """
    if isinstance(lattice, SimState):
        lattice = lattice.lattice
    if not (0.0 <= rho0_a <= 1.0) or not (0.0 <= rho0_b <= 1.0):
        raise ValidationError("densities must lie in [0, 1]")
    v = lattice.total_sites
    na = int(round(rho0_a * v))
    nb = int(round(rho0_b * v))
    rng = np.random.default_rng(np.random.SeedSequence((0x1D1A, seed & 0xFFFFFFFFFFFFFFFF)))
    state = SimState(lattice=lattice)

    if lattice.occupancy is Occupancy.SINGLE:
        if rho0_a + rho0_b > 1.0 or na + nb > v:
            raise ValidationError("single occupancy cannot hold rho_A + rho_B > 1")
        sites = rng.choice(v, size=na + nb, replace=False)
        state.n_a[sites[:na]] = 1
        state.n_b[sites[na:]] = 1
    else:
        if na:
            state.n_a[:] = np.bincount(rng.integers(0, v, size=na), minlength=v)
        if nb:
            state.n_b[:] = np.bincount(rng.integers(0, v, size=nb), minlength=v)
    state.refresh_totals()
    return state
