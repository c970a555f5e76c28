"""Orthonormal bases of the exchange-symmetry sectors.

Built combinatorially from multisets (bosons) or subsets (fermions) of
mode labels, not from the permutation-sum projector, so the two routes
can cross-check each other.  The isometry S has the sector basis as its
columns and satisfies S S^dagger = projector, S^dagger S = identity.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
import scipy.sparse as sp

from .tensor import SpaceConfig, Statistics, flatten_index, _cycle_parity


def sector_basis_labels(stats: Statistics, space: SpaceConfig) -> list[tuple[int, ...]]:
    """Canonical label tuples indexing the sector basis, sorted."""
    modes = range(space.d)
    if stats is Statistics.BOSON:
        return list(itertools.combinations_with_replacement(modes, space.n))
    if stats is Statistics.FERMION:
        return list(itertools.combinations(modes, space.n))
    return list(itertools.product(modes, repeat=space.n))


def sector_isometry(stats: Statistics, space: SpaceConfig) -> sp.csr_matrix:
    """Sparse isometry from sector coordinates into the full product space."""
    dim = space.total_dim
    if not stats.is_projected:
        return sp.identity(dim, dtype=np.complex128, format="csr")
    labels = sector_basis_labels(stats, space)
    rows, cols, data = [], [], []
    nfact = math.factorial(space.n)
    for col, label in enumerate(labels):
        if stats is Statistics.FERMION:
            # labels strictly increasing; all n! arrangements distinct
            coeff = 1.0 / math.sqrt(nfact)
            for perm in itertools.permutations(range(space.n)):
                arrangement = tuple(label[p] for p in perm)
                sign = -1.0 if _cycle_parity(perm) else 1.0
                rows.append(flatten_index(arrangement, space))
                cols.append(col)
                data.append(sign * coeff)
        else:
            multiplicity = 1
            for count in Counter(label).values():
                multiplicity *= math.factorial(count)
            coeff = math.sqrt(multiplicity / nfact)
            for arrangement in set(itertools.permutations(label)):
                rows.append(flatten_index(arrangement, space))
                cols.append(col)
                data.append(coeff)
    mat = sp.csr_matrix(
        (np.asarray(data, dtype=np.complex128), (rows, cols)),
        shape=(dim, len(labels)))
    return mat


def sector_basis_vectors(stats: Statistics, space: SpaceConfig) -> np.ndarray:
    """Dense (total_dim, sector_dim) array of orthonormal sector vectors."""
    return sector_isometry(stats, space).toarray()
