"""Constructors for the benchmark states used by the tests and the CLI.

Covers noisy projected pure states, the five-mode three-particle
partial-separability example, geometric-amplitude GHZ-type states on
relabeled modes, and their uniformly dephased mixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroProjectionError
from .sectors import sector_basis_vectors
from .tensor import (DensityOperator, SpaceConfig, StateVector, Statistics,
                     basis_product_vector, project, subspace_dimension)


def sinc(x: float) -> float:
    """sin(x)/x with sinc(0) = 1 (unnormalized convention)."""
    return 1.0 if x == 0.0 else math.sin(x) / x


@dataclass(frozen=True)
class NoisyPureState:
    """A projected pure state mixed with white noise on its sector:
    rho = p |psi~><psi~| + (1 - p) P / tr(P)."""

    psi: StateVector
    stats: Statistics
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise parameter p={self.p} outside [0, 1]")

    def to_density_operator(self) -> DensityOperator:
        projected = project(self.stats, self.psi)
        if projected.norm() < 1e-12:
            raise ZeroProjectionError("pure part projects to zero")
        pure = projected.normalized()
        dim = subspace_dimension(self.stats, self.psi.space)
        pairs = []
        if self.p > 0.0:
            pairs.append((self.p, pure))
        if self.p < 1.0:
            weight = (1.0 - self.p) / dim
            basis = sector_basis_vectors(self.stats, self.psi.space)
            pairs.extend((weight, StateVector(self.psi.space, basis[:, col]))
                         for col in range(basis.shape[1]))
        return DensityOperator.from_mixture(pairs)


def noisy_state(psi: StateVector, stats: Statistics, p: float) -> DensityOperator:
    """Mixture of the projected, normalized pure part (weight p) with the
    maximally mixed state of the sector (weight 1 - p)."""
    return NoisyPureState(psi, stats, p).to_density_operator()


def fig1_state_family(d: int, stats: Statistics) -> StateVector:
    """Maximally balanced two-particle state for each statistics.

    Distinguishable and boson: all d Schmidt-type coefficients equal to
    d**-0.5.  Fermion: floor(d/2) Slater pairs with equal weights, so
    odd dimensions leave one unused mode.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    space = SpaceConfig(d, 2)
    amps = np.zeros(space.total_dim, dtype=np.complex128)
    if stats is Statistics.FERMION:
        pairs = d // 2
        coeff = 1.0 / math.sqrt(2 * pairs)
        for idx in range(pairs):
            a, b = 2 * idx, 2 * idx + 1
            amps[a * d + b] = coeff
            amps[b * d + a] = -coeff
    else:
        coeff = 1.0 / math.sqrt(d)
        for mode in range(d):
            amps[mode * d + mode] = coeff
    return StateVector(space, amps)


def fig1_bound(d: int, selector: Statistics | int) -> tuple[float, int]:
    """(separable bound G, sector dimension D) for the balanced family.

    ``selector`` is a Statistics member, or an integer r for the
    distinguishable Schmidt-rank-r bound.
    """
    if isinstance(selector, int):
        if not 1 <= selector <= d:
            raise ValueError(f"Schmidt level {selector} outside 1..{d}")
        return selector / d, d * d
    if selector is Statistics.DISTINGUISHABLE:
        return 1.0 / d, d * d
    if selector is Statistics.BOSON:
        return 2.0 / d, d * (d + 1) // 2
    pairs = d // 2
    return 1.0 / pairs, d * (d - 1) // 2


def detection_threshold(d: int, selector: Statistics | int) -> float:
    """Noise threshold p* below which the balanced state's own witness
    stops detecting: solves p + (1 - p)/D = G.  Returns 1.0 (flagged
    undetectable) when the bound reaches 1."""
    bound, dim = fig1_bound(d, selector)
    if bound >= 1.0 - 1e-12 or dim <= 1:
        return 1.0
    return (bound * dim - 1.0) / (dim - 1.0)


def appendix_b_states() -> tuple[StateVector, StateVector]:
    """Symmetrized and antisymmetrized copies of the three-particle,
    five-mode vector |0> x (|1,2> + |3,4>): partially separable states
    that are provably not fully separable."""
    space = SpaceConfig(5, 3)
    raw = (basis_product_vector(space, (0, 1, 2)).amplitudes
           + basis_product_vector(space, (0, 3, 4)).amplitudes)
    psi = StateVector(space, raw)
    return (project(Statistics.BOSON, psi), project(Statistics.FERMION, psi))


@dataclass(frozen=True)
class GhzFamily:
    """Geometric-amplitude GHZ-type family on relabeled modes.

    Term n occupies the n-th block of N consecutive modes; the
    single-mode dimension is N * (n_max + 1).  The truncation deficit
    of the norm is bounded by |q| ** (2 * (n_max + 1)).
    """

    n_parties: int
    q: complex
    stats: Statistics
    n_max: int
    space: SpaceConfig = field(init=False)
    tail_bound: float = field(init=False)

    def __post_init__(self):
        if abs(self.q) >= 1.0:
            raise ValueError(f"|q| = {abs(self.q)} must be < 1")
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        d = self.n_parties * (self.n_max + 1)
        object.__setattr__(self, "space", SpaceConfig(d, self.n_parties))
        object.__setattr__(self, "tail_bound",
                           abs(self.q) ** (2 * (self.n_max + 1)))

    def term_labels(self, n: int) -> tuple[int, ...]:
        start = n * self.n_parties
        return tuple(range(start, start + self.n_parties))

    def term_vector(self, n: int) -> StateVector:
        """Projected, unit-norm n-th product term."""
        raw = basis_product_vector(self.space, self.term_labels(n))
        nu = self.stats.norm_factor(self.n_parties)
        return StateVector(self.space,
                           math.sqrt(nu) * project(self.stats, raw).amplitudes)

    def amplitude(self, n: int) -> complex:
        return math.sqrt(1.0 - abs(self.q) ** 2) * self.q ** n

    def state(self) -> StateVector:
        amps = np.zeros(self.space.total_dim, dtype=np.complex128)
        for n in range(self.n_max + 1):
            amps += self.amplitude(n) * self.term_vector(n).amplitudes
        return StateVector(self.space, amps).normalized()


def ghz_state(n_parties: int, q: complex, stats: Statistics,
              n_max: int = 8) -> StateVector:
    """Normalized truncated GHZ-type state; see GhzFamily for labeling."""
    return GhzFamily(n_parties, q, stats, n_max).state()


@dataclass(frozen=True)
class DephasedGhz:
    """GHZ-type state with amplitude r = |q| fixed and the phase averaged
    uniformly over [-delta, +delta]."""

    family: GhzFamily
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= math.pi:
            raise ValueError(f"delta={self.delta} outside [0, pi]")

    def kernel(self) -> np.ndarray:
        """Coefficient matrix in the orthonormal projected term basis."""
        r = abs(self.family.q)
        count = self.family.n_max + 1
        out = np.empty((count, count))
        for row in range(count):
            for col in range(count):
                out[row, col] = ((1.0 - r * r) * r ** (row + col)
                                 * sinc(self.delta * (row - col)))
        return out

    def to_density_operator(self) -> DensityOperator:
        kernel = self.kernel()
        eigvals, eigvecs = np.linalg.eigh(kernel)
        terms = [self.family.term_vector(n).amplitudes
                 for n in range(self.family.n_max + 1)]
        pairs = []
        for idx in range(eigvals.size):
            weight = float(eigvals[idx])
            if weight <= 1e-14:
                continue
            amps = np.zeros(self.family.space.total_dim, dtype=np.complex128)
            for n, term in enumerate(terms):
                amps += eigvecs[n, idx] * term
            pairs.append((weight, StateVector(self.family.space, amps)))
        # trace is 1 minus the truncation tail, deliberately not rescaled
        return DensityOperator.from_mixture(pairs, normalized=False)


def dephased_ghz(family: GhzFamily, delta: float) -> DensityOperator:
    """Uniformly dephased GHZ-type mixture, truncated at family.n_max."""
    return DephasedGhz(family, delta).to_density_operator()


def ghz_expectation(r: float, delta: float) -> float:
    """Closed-form interference signal of the dephased family:
    2 (1 - r**2) r sinc(delta).  Independent of the particle number, the
    statistics, and the truncation order."""
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r={r} outside [0, 1)")
    return 2.0 * (1.0 - r * r) * r * sinc(delta)
