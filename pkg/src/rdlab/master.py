"""Exact master equation on exhaustively enumerated small lattices.

This is the oracle the stochastic engine is validated against: both
define the identical Markov jump process, so ensemble means from KMC
must agree with the integrated probability vector.

Multiple occupancy needs a finite per-site, per-species cap to keep
the configuration space finite.  The capped model blocks hops into a
site already holding `cap` particles of the hopping species; the KMC
engine mirrors this with its `cap` argument, and the truncation is
exact whenever initial occupancies never need to exceed the cap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import IntegratorError, StateSpaceOverflow, ValidationError
from .lattice import LatticeSpec, ModelKind, ModelSpec, Occupancy, SimState, build_lattice

MAX_ENUM_STATES = 10_000_000
MAX_DENSE_DIM = 5_000


@dataclass(frozen=True)
class StateSpace:
    """Bijection between configuration arrays and indices 0..n_states-1.

    Each site is one digit of a radix-`radix` integer; for two-species
    models with cap m the digit is n_A*(m+1) + n_B.
    """

    lattice: LatticeSpec
    two_species: bool
    cap: int  # per-site, per-species occupancy cap (Multiple mode)
    radix: int
    n_states: int

    @property
    def n_sites(self) -> int:
        return self.lattice.total_sites

    def digit_counts(self, digit: int) -> tuple[int, int]:
        if self.lattice.occupancy is Occupancy.SINGLE:
            if self.two_species:
                return (1, 0) if digit == 1 else (0, 1) if digit == 2 else (0, 0)
            return (digit, 0)
        if self.two_species:
            return digit // (self.cap + 1), digit % (self.cap + 1)
        return digit, 0

    def counts_digit(self, n_a: int, n_b: int) -> int:
        if self.lattice.occupancy is Occupancy.SINGLE:
            if self.two_species:
                return 1 if n_a else 2 if n_b else 0
            return n_a
        if self.two_species:
            return n_a * (self.cap + 1) + n_b
        return n_a

    def decode(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        v = self.n_sites
        n_a = np.zeros(v, dtype=np.int64)
        n_b = np.zeros(v, dtype=np.int64)
        for s in range(v):
            n_a[s], n_b[s] = self.digit_counts(index % self.radix)
            index //= self.radix
        return n_a, n_b

    def encode(self, n_a, n_b) -> int:
        index = 0
        for s in reversed(range(self.n_sites)):
            index = index * self.radix + self.counts_digit(int(n_a[s]), int(n_b[s]))
        return index

    def index_of_state(self, state: SimState) -> int:
        return self.encode(state.n_a, state.n_b)

    def occupancy_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """N_A and N_B per configuration, as float vectors."""
        idx = np.arange(self.n_states, dtype=np.int64)
        tot_a = np.zeros(self.n_states)
        tot_b = np.zeros(self.n_states)
        per_digit = np.array([self.digit_counts(d) for d in range(self.radix)])
        rest = idx
        for _ in range(self.n_sites):
            digit = rest % self.radix
            tot_a += per_digit[digit, 0]
            tot_b += per_digit[digit, 1]
            rest //= self.radix
        return tot_a, tot_b


def enumerate_states(lattice: LatticeSpec, model: ModelSpec, cap: int = 2,
                     max_sites: int = 12,
                     max_states: int = MAX_ENUM_STATES) -> StateSpace:
    """Exhaustive duplicate-free enumeration of the configuration space."""
    if lattice.total_sites > max_sites:
        raise StateSpaceOverflow(
            f"{lattice.total_sites} sites exceeds the {max_sites}-site guard")
    two = model.kind is not ModelKind.AA
    if lattice.occupancy is Occupancy.SINGLE:
        radix = 3 if two else 2
    else:
        if cap < 1:
            raise ValidationError("multiple-occupancy enumeration needs cap >= 1")
        radix = (cap + 1) ** 2 if two else cap + 1
    n_states = radix ** lattice.total_sites
    if n_states > max_states:
        raise StateSpaceOverflow(
            f"{n_states} configurations exceeds the {max_states} guard")
    return StateSpace(lattice=lattice, two_species=two, cap=cap,
                      radix=radix, n_states=n_states)


@dataclass(frozen=True)
class Generator:
    """Dense rate matrix: entry (c', c) is the rate of c -> c'."""

    space: StateSpace
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def build_generator(space: StateSpace, model: ModelSpec,
                    max_dim: int = MAX_DENSE_DIM) -> Generator:
    """Fill the dense generator with the same channel rates as the KMC
    engine: per-channel hop rate D_X * n_X(source), same-site pair rates
    lam*n(n-1)/2 and delta*n_A*n_B under multiple occupancy, per-channel
    neighbor-pair rates under single occupancy."""
    if space.n_states > max_dim:
        raise StateSpaceOverflow(
            f"dense generator of dimension {space.n_states} exceeds {max_dim}")
    lat = space.lattice
    graph = build_lattice(lat)
    single = lat.occupancy is Occupancy.SINGLE
    g = np.zeros((space.n_states, space.n_states))
    n_ch = graph.n_channels

    def add(c_from: int, n_a, n_b, rate: float):
        c_to = space.encode(n_a, n_b)
        g[c_to, c_from] += rate
        g[c_from, c_from] -= rate

    for c in range(space.n_states):
        n_a, n_b = space.decode(c)
        for s in range(lat.total_sites):
            for ch in range(n_ch):
                p = graph.neighbors[s, ch]
                # hops
                if n_a[s] > 0 and model.D_A > 0:
                    ok = (n_a[p] + n_b[p] == 0) if single else (n_a[p] < space.cap)
                    if ok:
                        n_a[s] -= 1; n_a[p] += 1
                        add(c, n_a, n_b, model.D_A * (n_a[s] + 1))
                        n_a[s] += 1; n_a[p] -= 1
                if n_b[s] > 0 and model.D_B > 0:
                    ok = (n_a[p] + n_b[p] == 0) if single else (n_b[p] < space.cap)
                    if ok:
                        n_b[s] -= 1; n_b[p] += 1
                        add(c, n_a, n_b, model.D_B * (n_b[s] + 1))
                        n_b[s] += 1; n_b[p] -= 1
                # single-occupancy reactions: rate/2 per directed channel
                if single:
                    if model.lam > 0 and model.kind is not ModelKind.AB:
                        if n_a[s] == 1 and n_a[p] == 1:
                            n_a[s] = 0; n_a[p] = 0
                            add(c, n_a, n_b, 0.5 * model.lam)
                            n_a[s] = 1; n_a[p] = 1
                        if model.kind is ModelKind.ABBA and n_b[s] == 1 and n_b[p] == 1:
                            n_b[s] = 0; n_b[p] = 0
                            add(c, n_a, n_b, 0.5 * model.lam)
                            n_b[s] = 1; n_b[p] = 1
                    if model.delta > 0 and model.kind is not ModelKind.AA:
                        if n_a[s] == 1 and n_b[p] == 1:
                            n_a[s] = 0; n_b[p] = 0
                            add(c, n_a, n_b, 0.5 * model.delta)
                            n_a[s] = 1; n_b[p] = 1
                        if n_b[s] == 1 and n_a[p] == 1:
                            n_b[s] = 0; n_a[p] = 0
                            add(c, n_a, n_b, 0.5 * model.delta)
                            n_b[s] = 1; n_a[p] = 1
            if not single:
                if model.lam > 0 and model.kind is not ModelKind.AB and n_a[s] >= 2:
                    rate = model.lam * n_a[s] * (n_a[s] - 1) / 2.0
                    n_a[s] -= 2
                    add(c, n_a, n_b, rate)
                    n_a[s] += 2
                if (model.kind is ModelKind.ABBA and model.lam > 0 and n_b[s] >= 2):
                    rate = model.lam * n_b[s] * (n_b[s] - 1) / 2.0
                    n_b[s] -= 2
                    add(c, n_a, n_b, rate)
                    n_b[s] += 2
                if (model.delta > 0 and model.kind is not ModelKind.AA
                        and n_a[s] >= 1 and n_b[s] >= 1):
                    rate = model.delta * n_a[s] * n_b[s]
                    n_a[s] -= 1; n_b[s] -= 1
                    add(c, n_a, n_b, rate)
                    n_a[s] += 1; n_b[s] += 1
    return Generator(space=space, matrix=g)


def point_mass(space: StateSpace, state: SimState) -> np.ndarray:
    p0 = np.zeros(space.n_states)
    p0[space.index_of_state(state)] = 1.0
    return p0


@dataclass
class EvolveResult:
    t: np.ndarray
    probabilities: np.ndarray  # (n_times, n_states)
    mean_na: np.ndarray
    mean_nb: np.ndarray


def evolve(p0: np.ndarray, gen: Generator, t_grid,
           rtol: float = 1e-10, atol: float = 1e-13) -> EvolveResult:
    """Integrate dP/dt = G P on t_grid with a stiff-safe adaptive method."""
    t_grid = np.asarray(t_grid, dtype=np.float64)
    p0 = np.asarray(p0, dtype=np.float64)
    if abs(p0.sum() - 1.0) > 1e-9 or p0.min() < 0:
        raise ValidationError("p0 must be a normalized probability vector")
    g = gen.matrix
    t0 = 0.0 if t_grid[0] > 0 else float(t_grid[0])
    sol = scipy.integrate.solve_ivp(
        lambda t, p: g @ p, (t0, float(t_grid[-1])), p0,
        t_eval=t_grid, method="BDF", jac=g, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegratorError(f"master-equation integration failed: {sol.message}")
    probs = sol.y.T
    sums = probs.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > 1e-9 or probs.min() < -1e-9:
        raise IntegratorError("probability vector left the simplex beyond tolerance")
    na_vec, nb_vec = gen.space.occupancy_vectors()
    return EvolveResult(t=t_grid, probabilities=probs,
                        mean_na=probs @ na_vec, mean_nb=probs @ nb_vec)


@dataclass(frozen=True)
class DecaySpectrum:
    """Slowest decay rates E_1 <= E_2 <= ... and the zero-mode count."""

    rates: np.ndarray
    zero_multiplicity: int


def decay_spectrum(gen: Generator, k: int = 1,
                   max_dim: int = MAX_DENSE_DIM) -> DecaySpectrum:
    """Real parts of the k slowest nonzero decay modes of the generator."""
    if gen.dim > max_dim:
        raise ValidationError(f"dense eigensolve refused above {max_dim} states")
    w = scipy.linalg.eigvals(gen.matrix)
    scale = max(1.0, float(np.abs(np.diag(gen.matrix)).max()))
    ztol = 1e-8 * scale
    if np.max(w.real) > ztol:
        raise IntegratorError("generator has an eigenvalue with positive real part")
    zero = np.abs(w) <= ztol
    nonzero = w[~zero]
    if np.any(np.abs(nonzero.imag) > ztol):
        warnings.warn("complex decay modes present; reporting real parts")
    rates = np.sort(-nonzero.real)
    return DecaySpectrum(rates=rates[:k], zero_multiplicity=int(zero.sum()))


def fit_decay_rate(t, n, c1: float = 0.0, tail_fraction: float = 0.35,
                   floor: float = 1e-10) -> float:
    """Late-time exponential rate of n(t) ~ c1 + c2*exp(-E1*t).

    Fits log(n - c1) linearly in t over the trailing tail_fraction of
    the grid, dropping points below the floor.
    """
    t = np.asarray(t, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    excess = n - c1
    start = int(len(t) * (1.0 - tail_fraction))
    keep = np.zeros(len(t), dtype=bool)
    keep[start:] = True
    keep &= excess > floor
    if keep.sum() < 3:
        raise ValidationError("not enough tail points above the floor to fit")
    slope = np.polyfit(t[keep], np.log(excess[keep]), 1)[0]
    return -slope
