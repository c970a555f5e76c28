"""Hermitian observables in dense and low-rank form.

Large composite spaces make dense operator matrices impractical, so the
two observables with known closed-form bounds are carried around as
short lists of |ket><bra| terms.  The solver and witness code accept
either representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionCapError, HermiticityError
from .tensor import (MATRIX_CAP, SpaceConfig, StateVector, Statistics,
                     basis_product_vector, project)

_HERM_TOL = 1e-10


@dataclass(frozen=True)
class LowRankObservable:
    """Hermitian operator sum_r coeff_r |ket_r><bra_r| on the composite space.

    The term list as a whole must be Hermitian; this is validated on a
    compressed copy at construction time.  ``kind`` tags operators with
    known analytic separability bounds ("rank_one", "interference").
    """

    space: SpaceConfig
    terms: tuple[tuple[complex, np.ndarray, np.ndarray], ...]
    kind: str | None = None

    def __post_init__(self):
        dim = self.space.total_dim
        frozen = []
        for coeff, ket, bra in self.terms:
            k = np.array(ket, dtype=np.complex128)
            b = np.array(bra, dtype=np.complex128)
            if k.shape != (dim,) or b.shape != (dim,):
                raise ValueError("term vector dimension mismatch")
            k.setflags(write=False)
            b.setflags(write=False)
            frozen.append((complex(coeff), k, b))
        object.__setattr__(self, "terms", tuple(frozen))
        self._validate_hermitian()

    def _validate_hermitian(self):
        vecs = []
        for _c, k, b in self.terms:
            vecs.extend([k, b])
        basis = scipy.linalg.orth(np.column_stack(vecs))
        compressed = np.zeros((basis.shape[1],) * 2, dtype=np.complex128)
        for c, k, b in self.terms:
            compressed += c * np.outer(basis.conj().T @ k,
                                       (basis.conj().T @ b).conj())
        scale = max(1.0, float(np.abs(compressed).max(initial=0.0)))
        defect = np.abs(compressed - compressed.conj().T).max(initial=0.0)
        if defect > _HERM_TOL * scale:
            raise HermiticityError(
                f"low-rank term list is not Hermitian (defect {defect:.2e})")

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.complex128)
        for c, k, b in self.terms:
            out += (c * (b.conj() @ vec)) * k
        return out

    def expectation_pure(self, vec: np.ndarray) -> complex:
        """<v|L|v> for a raw amplitude vector."""
        return sum(c * (vec.conj() @ k) * (b.conj() @ vec)
                   for c, k, b in self.terms)

    def projected(self, stats: Statistics) -> "LowRankObservable":
        """The sandwich projector L projector, term by term."""
        new_terms = []
        for c, k, b in self.terms:
            kp = project(stats, StateVector(self.space, k)).amplitudes
            bp = project(stats, StateVector(self.space, b)).amplitudes
            new_terms.append((c, kp, bp))
        return LowRankObservable(self.space, tuple(new_terms), kind=self.kind)

    def to_matrix(self) -> np.ndarray:
        if self.dim > MATRIX_CAP:
            raise DimensionCapError(
                f"densifying side {self.dim} exceeds cap {MATRIX_CAP}")
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for c, k, b in self.terms:
            out += c * np.outer(k, b.conj())
        return out


def hermiticity_defect(matrix: np.ndarray) -> float:
    """Largest entrywise deviation from Hermitian symmetry."""
    m = np.asarray(matrix)
    return float(np.abs(m - m.conj().T).max(initial=0.0))


def require_hermitian(matrix: np.ndarray, label: str = "operator") -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128)
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    defect = hermiticity_defect(m)
    if defect > _HERM_TOL * scale:
        raise HermiticityError(f"{label} is not Hermitian "
                               f"(max asymmetry {defect:.3e})")
    return m


def rank_one_observable(psi: StateVector, stats: Statistics) -> LowRankObservable:
    """Projected rank-one observable built from a state vector.

    The fidelity-style test operator: sandwich of |psi><psi| between the
    exchange projectors of the given statistics.
    """
    f = project(stats, psi).amplitudes
    if np.linalg.norm(f) < 1e-14:
        raise ValueError("state projects to zero in the requested sector")
    return LowRankObservable(psi.space, ((1.0 + 0.0j, f, f),), kind="rank_one")


def interference_observable(space: SpaceConfig,
                            stats: Statistics) -> LowRankObservable:
    """Off-diagonal interference probe between two orthogonal product terms.

    Uses 2n distinct mode labels.  For bosons/fermions the two kets are
    projected and rescaled to unit sector norm, which keeps the
    separability bound (1/2)**(K-1) independent of the statistics.
    Requires d >= 2n so the labels exist.
    """
    if space.d < 2 * space.n:
        raise ValueError(f"need d >= 2n = {2 * space.n}, got d={space.d}")
    nu = stats.norm_factor(space.n)
    low = basis_product_vector(space, tuple(range(space.n)))
    high = basis_product_vector(space, tuple(range(space.n, 2 * space.n)))
    v = np.sqrt(nu) * project(stats, low).amplitudes
    w = np.sqrt(nu) * project(stats, high).amplitudes
    terms = ((1.0 + 0.0j, v, w), (1.0 + 0.0j, w, v))
    return LowRankObservable(space, terms, kind="interference")
