"""Dense complex tensor algebra on N-fold products of a d-dimensional mode space.

Conventions used by every module in this package:

* Composite indices are flattened big-endian: the multi-index
  (i_1, ..., i_N) maps to sum_j i_j * d**(N-1-j).  This is exactly
  numpy's C-order flattening of an N-axis tensor whose axes all have
  size d, so reshaping a state of length d**N to shape (d,)*N gives
  one axis per particle slot, slot 0 first.
* Exchange projectors are applied matrix-free, as signed sums over all
  N! slot permutations acting on reshaped amplitude arrays.  Explicit
  projector matrices are only built for small spaces (side <= MATRIX_CAP).
* Mode labels are 0-based everywhere.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache, reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionCapError, HermiticityError

# Size caps.  Violations are construction-time errors, never silent truncation.
PERM_CAP = 720            # largest allowed N!
VECTOR_CAP = 2_000_000    # largest allowed d**N for amplitude vectors
MATRIX_CAP = 4096         # largest side for explicitly built operator matrices

TOL_HERM = 1e-10
TOL_TRACE = 1e-10


class Statistics(Enum):
    """Exchange statistics of the N particles.

    Selects which operator plays the role of the identity on physical
    states: the full identity (distinguishable subsystems), the
    symmetrizer (bosons), or the antisymmetrizer (fermions).
    """

    DISTINGUISHABLE = "distinguishable"
    BOSON = "boson"
    FERMION = "fermion"

    @property
    def exchange_sign(self) -> int:
        """+1 for bosons, -1 for fermions, +1 (unused) for distinguishable."""
        return -1 if self is Statistics.FERMION else 1

    @property
    def is_projected(self) -> bool:
        return self is not Statistics.DISTINGUISHABLE

    def norm_factor(self, n: int) -> int:
        """Sector normalization nu: N! for bosons/fermions, 1 otherwise."""
        return math.factorial(n) if self.is_projected else 1

    @classmethod
    def parse(cls, text: str) -> "Statistics":
        key = text.strip().lower()
        aliases = {"d": cls.DISTINGUISHABLE, "b": cls.BOSON, "f": cls.FERMION}
        if key in aliases:
            return aliases[key]
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown statistics {text!r}; "
                         f"use distinguishable, boson, or fermion")


@dataclass(frozen=True)
class SpaceConfig:
    """Shape of the composite space: n particles, each of dimension d."""

    d: int
    n: int

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError(f"d and n must be positive, got d={self.d}, n={self.n}")
        if math.factorial(self.n) > PERM_CAP:
            raise DimensionCapError(
                f"n={self.n} gives {math.factorial(self.n)} permutations, "
                f"cap is {PERM_CAP}")
        if self.d ** self.n > VECTOR_CAP:
            raise DimensionCapError(
                f"d**n = {self.d ** self.n} exceeds the vector cap {VECTOR_CAP}")

    @property
    def total_dim(self) -> int:
        return self.d ** self.n

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.d,) * self.n


def _cycle_parity(mapping0: Sequence[int]) -> int:
    """Parity (transposition count mod 2) of a 0-based permutation."""
    n = len(mapping0)
    seen = [False] * n
    cycles = 0
    for start in range(n):
        if seen[start]:
            continue
        cycles += 1
        pos = start
        while not seen[pos]:
            seen[pos] = True
            pos = mapping0[pos]
    return (n - cycles) % 2


@dataclass(frozen=True)
class Permutation:
    """A permutation of the n particle slots, stored as 1-based images.

    mapping[j] is the slot whose content ends up in slot j+1, matching
    the action  slot j  <-  content of slot mapping[j]  on product
    vectors: the permuted product of (a_1, ..., a_n) is
    (a_mapping[0], ..., a_mapping[n-1]).
    """

    mapping: tuple[int, ...]
    parity: int = field(init=False)

    def __post_init__(self):
        mapping = tuple(int(m) for m in self.mapping)
        object.__setattr__(self, "mapping", mapping)
        n = len(mapping)
        if sorted(mapping) != list(range(1, n + 1)):
            raise ValueError(f"{mapping} is not a bijection on 1..{n}")
        object.__setattr__(self, "parity",
                           _cycle_parity([m - 1 for m in mapping]))

    @property
    def n(self) -> int:
        return len(self.mapping)

    @property
    def axes(self) -> tuple[int, ...]:
        """0-based axes tuple for numpy transpose."""
        return tuple(m - 1 for m in self.mapping)

    @property
    def sign(self) -> int:
        return -1 if self.parity else 1

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))


@dataclass(frozen=True)
class StateVector:
    """A (generally unnormalized) vector on the composite space."""

    space: SpaceConfig
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.space.total_dim,):
            raise ValueError(
                f"amplitude length {amps.shape} does not match "
                f"total_dim {self.space.total_dim}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / nrm)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per particle slot (read-only view)."""
        return self.amplitudes.reshape(self.space.dims)


@dataclass(frozen=True)
class DensityOperator:
    """A density operator, stored dense or as a mixture of pure states.

    Exactly one of ``matrix`` / ``mixture`` is set.  Mixture entries are
    (weight, StateVector) pairs with unit-norm vectors; the represented
    operator is sum_i w_i |v_i><v_i|.
    """

    space: SpaceConfig
    matrix: np.ndarray | None = None
    mixture: tuple[tuple[float, StateVector], ...] | None = None
    normalized: bool = True

    def __post_init__(self):
        if (self.matrix is None) == (self.mixture is None):
            raise ValueError("exactly one of matrix/mixture must be given")
        if self.matrix is not None:
            m = np.array(self.matrix, dtype=np.complex128)
            dim = self.space.total_dim
            if m.shape != (dim, dim):
                raise ValueError(f"matrix shape {m.shape}, expected {(dim, dim)}")
            scale = max(1.0, float(np.abs(m).max(initial=0.0)))
            if np.abs(m - m.conj().T).max(initial=0.0) > TOL_HERM * scale:
                raise HermiticityError("density matrix is not Hermitian")
            if self.normalized and abs(np.trace(m).real - 1.0) > TOL_TRACE:
                raise ValueError(f"trace {np.trace(m):.3e} is not 1")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        else:
            pairs = []
            for w, v in self.mixture:
                w = float(w)
                if w < -TOL_TRACE:
                    raise ValueError(f"negative mixture weight {w}")
                if abs(v.norm() - 1.0) > 1e-9:
                    v = v.normalized()
                pairs.append((max(w, 0.0), v))
            if self.normalized and abs(sum(w for w, _ in pairs) - 1.0) > TOL_TRACE:
                raise ValueError("mixture weights do not sum to 1")
            object.__setattr__(self, "mixture", tuple(pairs))

    @classmethod
    def from_matrix(cls, space: SpaceConfig, matrix: np.ndarray,
                    normalized: bool = True) -> "DensityOperator":
        return cls(space, matrix=matrix, normalized=normalized)

    @classmethod
    def from_pure(cls, state: StateVector) -> "DensityOperator":
        return cls(state.space, mixture=((1.0, state.normalized()),))

    @classmethod
    def from_mixture(cls, pairs: Iterable[tuple[float, StateVector]],
                     normalized: bool = True) -> "DensityOperator":
        pairs = tuple(pairs)
        if not pairs:
            raise ValueError("empty mixture")
        return cls(pairs[0][1].space, mixture=pairs, normalized=normalized)

    def trace(self) -> float:
        if self.matrix is not None:
            return float(np.trace(self.matrix).real)
        return float(sum(w for w, _ in self.mixture))

    def to_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        dim = self.space.total_dim
        if dim > MATRIX_CAP:
            raise DimensionCapError(
                f"densifying a mixture of side {dim} exceeds cap {MATRIX_CAP}")
        out = np.zeros((dim, dim), dtype=np.complex128)
        for w, v in self.mixture:
            out += w * np.outer(v.amplitudes, v.amplitudes.conj())
        return out


# ---------------------------------------------------------------------------
# index flattening

def flatten_index(multi_index: Sequence[int], space: SpaceConfig) -> int:
    """Big-endian flat index of a multi-index, slot 0 most significant."""
    if len(multi_index) != space.n:
        raise ValueError(f"expected {space.n} components, got {len(multi_index)}")
    flat = 0
    for component in multi_index:
        c = int(component)
        if not 0 <= c < space.d:
            raise ValueError(f"component {c} out of range [0, {space.d})")
        flat = flat * space.d + c
    return flat


def unflatten_index(index: int, space: SpaceConfig) -> tuple[int, ...]:
    """Inverse of :func:`flatten_index`."""
    if not 0 <= index < space.total_dim:
        raise ValueError(f"index {index} out of range [0, {space.total_dim})")
    out = []
    for _ in range(space.n):
        index, rem = divmod(index, space.d)
        out.append(rem)
    return tuple(reversed(out))


def basis_product_vector(space: SpaceConfig, labels: Sequence[int]) -> StateVector:
    """The computational basis product vector |labels[0], ..., labels[n-1]>."""
    amps = np.zeros(space.total_dim, dtype=np.complex128)
    amps[flatten_index(labels, space)] = 1.0
    return StateVector(space, amps)


def product_vector(space: SpaceConfig,
                   factors: Sequence[np.ndarray]) -> StateVector:
    """Tensor product of n single-particle vectors."""
    if len(factors) != space.n:
        raise ValueError(f"expected {space.n} factors, got {len(factors)}")
    for f in factors:
        if np.shape(f) != (space.d,):
            raise ValueError("factor dimension mismatch")
    amps = reduce(np.kron, [np.asarray(f, dtype=np.complex128) for f in factors])
    return StateVector(space, amps)


# ---------------------------------------------------------------------------
# permutations and projectors

@lru_cache(maxsize=8)
def _signed_permutations(n: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """All (axes, parity) pairs for S_n, identity first."""
    return tuple((perm, _cycle_parity(perm))
                 for perm in itertools.permutations(range(n)))


def apply_permutation(sigma: Permutation, v: StateVector) -> StateVector:
    """Permute particle slots: the product of (a_1,...,a_n) becomes the
    product of (a_sigma(1),...,a_sigma(n)).  Matrix-free."""
    if sigma.n != v.space.n:
        raise ValueError(f"permutation acts on {sigma.n} slots, "
                         f"state has {v.space.n}")
    out = v.tensor().transpose(sigma.axes).reshape(-1).copy()
    return StateVector(v.space, out)


def project_amplitudes(stats: Statistics, amplitudes: np.ndarray,
                       space: SpaceConfig) -> np.ndarray:
    """Apply the exchange projector to raw amplitudes.

    Accepts a vector of length total_dim or a 2-D array whose columns
    are vectors (batched).  Returns a new array of the same shape.

    Uses the coset recursion: symmetrizing slots (m, ..., n-1) and then
    averaging the n-m+1 signed swaps of slot m-1 into that window
    symmetrizes slots (m-1, ..., n-1).  This needs n(n-1)/2 axis swaps
    instead of n! transpositions and agrees with the full signed
    permutation sum exactly.
    """
    arr = np.asarray(amplitudes, dtype=np.complex128)
    if not stats.is_projected:
        return arr.copy()
    batched = arr.ndim == 2
    shape = space.dims + ((arr.shape[1],) if batched else ())
    tens = arr.reshape(shape).copy()
    n = space.n
    sign = stats.exchange_sign
    for first in range(n - 2, -1, -1):
        acc = tens.copy()
        for other in range(first + 1, n):
            swapped = np.swapaxes(tens, first, other)
            if sign < 0:
                acc -= swapped
            else:
                acc += swapped
        acc /= (n - first)
        tens = acc
    return tens.reshape(arr.shape)


def _project_full_sum(stats: Statistics, amplitudes: np.ndarray,
                      space: SpaceConfig) -> np.ndarray:
    """Reference projector: the explicit signed sum over all n!
    permutations.  Kept as an independent cross-check of the coset
    recursion used by :func:`project_amplitudes`."""
    arr = np.asarray(amplitudes, dtype=np.complex128)
    if not stats.is_projected:
        return arr.copy()
    batched = arr.ndim == 2
    shape = space.dims + ((arr.shape[1],) if batched else ())
    tens = arr.reshape(shape)
    n = space.n
    extra = (n,) if batched else ()
    acc = np.zeros_like(tens)
    sign = stats.exchange_sign
    for axes, parity in _signed_permutations(n):
        term = tens.transpose(axes + extra)
        if sign < 0 and parity:
            acc -= term
        else:
            acc += term
    acc /= math.factorial(n)
    return acc.reshape(arr.shape)


def project(stats: Statistics, v: StateVector) -> StateVector:
    """Exchange projector: symmetrize (bosons), antisymmetrize (fermions),
    or return the vector unchanged (distinguishable).

    A fermionic input with a repeated factor projects to the zero
    vector; callers that need a nonzero physical state must check.
    """
    if math.factorial(v.space.n) > PERM_CAP:
        raise DimensionCapError("permutation count exceeds cap")
    if not stats.is_projected:
        return v
    return StateVector(v.space, project_amplitudes(stats, v.amplitudes, v.space))


def projector_matrix(stats: Statistics, space: SpaceConfig) -> np.ndarray:
    """Explicit dense projector matrix.  Only for small spaces."""
    dim = space.total_dim
    if dim > MATRIX_CAP:
        raise DimensionCapError(
            f"projector matrix of side {dim} exceeds cap {MATRIX_CAP}")
    return project_amplitudes(stats, np.eye(dim, dtype=np.complex128), space)


def project_operator(stats: Statistics, operator: np.ndarray,
                     space: SpaceConfig) -> np.ndarray:
    """Sandwich a dense operator between exchange projectors."""
    op = np.asarray(operator, dtype=np.complex128)
    if not stats.is_projected:
        return op.copy()
    cols = project_amplitudes(stats, op, space)
    rows = project_amplitudes(stats, cols.conj().T, space)
    return rows.conj().T


def symmetrize_operator(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Average of Y_sigma(1) x ... x Y_sigma(n) over all slot permutations.

    Each factor must be Hermitian; the result commutes with both
    exchange projectors.
    """
    n = len(factors)
    if n < 1:
        raise ValueError("need at least one factor")
    mats = [np.asarray(f, dtype=np.complex128) for f in factors]
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise ValueError("factors must be square and of equal size")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > TOL_HERM * scale:
            raise HermiticityError("factors must be Hermitian")
    if math.factorial(n) > PERM_CAP:
        raise DimensionCapError("permutation count exceeds cap")
    if d ** n > MATRIX_CAP:
        raise DimensionCapError(
            f"operator side {d ** n} exceeds matrix cap {MATRIX_CAP}")
    out = np.zeros((d ** n, d ** n), dtype=np.complex128)
    for axes, _parity in _signed_permutations(n):
        out += reduce(np.kron, [mats[a] for a in axes])
    out /= math.factorial(n)
    return out


def partial_trace_first(rho: DensityOperator) -> DensityOperator:
    """Trace out the first particle slot, returning an operator on the
    remaining n-1 slots.  Preserves the trace."""
    space = rho.space
    if space.n < 2:
        raise ValueError("partial trace needs at least two slots")
    rest = space.d ** (space.n - 1)
    small = SpaceConfig(space.d, space.n - 1)
    if rho.matrix is not None:
        t = rho.matrix.reshape(space.d, rest, space.d, rest)
        reduced = np.trace(t, axis1=0, axis2=2)
    else:
        reduced = np.zeros((rest, rest), dtype=np.complex128)
        for w, v in rho.mixture:
            block = v.amplitudes.reshape(space.d, rest)
            reduced += w * (block.T @ block.conj())
    return DensityOperator.from_matrix(small, reduced, normalized=rho.normalized)


def subspace_dimension(stats: Statistics, space: SpaceConfig) -> int:
    """Trace of the sector identity: the number of physical basis states."""
    d, n = space.d, space.n
    if stats is Statistics.BOSON:
        return math.comb(d + n - 1, n)
    if stats is Statistics.FERMION:
        return math.comb(d, n)
    return d ** n
