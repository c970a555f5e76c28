"""Separability-eigenvalue solver.

The separable bound of an observable is the supremum of the Rayleigh
quotient

    g(b_1, ..., b_K) = <b|P L P|b> / <b|P|b>,   |b> = |b_1> x ... x |b_K>,

over K-party product vectors with nonvanishing projection, where P is
the exchange projector of the chosen statistics (the identity for
distinguishable subsystems).  Stationary points satisfy one coupled
generalized eigenvalue equation per party; the numerical solver fixes
all parties but one, solves that party's generalized Hermitian
eigenproblem restricted to the range of the overlap operator, and
cycles until the quotient and the stationarity residual settle.  The
quotient never decreases along the sweep (in "max" mode), so multistart
ascent plus an independent random-sampling oracle brackets the bound.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import reduce

import numpy as np

from .decompositions import schmidt, slater_boson, slater_fermion
from .errors import (ConvergenceError, DimensionCapError, ZeroProjectionError)
from .operators import LowRankObservable, require_hermitian
from .sectors import sector_isometry
from .tensor import (SpaceConfig, StateVector, Statistics,
                     basis_product_vector, project, project_amplitudes)

DEFAULT_STARTS = 64
MAX_SWEEPS = 500
VALUE_TOL = 1e-11          # change of the quotient between sweeps
RESIDUAL_TOL = 1e-9
B_RANGE_CUTOFF = 1e-12     # relative cutoff on the overlap operator
INIT_PROJECTION_TOL = 1e-8
PARTY_DENSE_CAP = 512      # largest party dimension solved densely
_ORACLE_CHUNK = 256


# ---------------------------------------------------------------------------
# partitions

@dataclass(frozen=True)
class Partition:
    """An ordered split (N_1, ..., N_K) of the n particle slots into K
    consecutive blocks.  Two partitions describe the same partitioning
    exactly when they are equal as multisets."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if not parts or any(p < 1 for p in parts):
            raise ValueError(f"parts must be positive integers, got {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def n(self) -> int:
        return sum(self.parts)

    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for p in self.parts:
            out.append(acc)
            acc += p
        return tuple(out)

    def slots(self, party: int) -> range:
        off = self.offsets()[party]
        return range(off, off + self.parts[party])

    def block_dims(self, d: int) -> tuple[int, ...]:
        return tuple(d ** p for p in self.parts)

    def same_partitioning(self, other: "Partition") -> bool:
        return sorted(self.parts) == sorted(other.parts)

    def __str__(self) -> str:
        return ",".join(str(p) for p in self.parts)


def partitions_into(n: int, k: int) -> tuple[Partition, ...]:
    """All multiset-distinct partitions of n slots into k parts,
    each given as a nonincreasing tuple."""
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")

    def rec(remaining, parts_left, maxpart):
        if parts_left == 0:
            if remaining == 0:
                yield ()
            return
        upper = min(maxpart, remaining - parts_left + 1)
        for first in range(upper, 0, -1):
            for rest in rec(remaining - first, parts_left - 1, first):
                yield (first,) + rest

    return tuple(Partition(p) for p in rec(n, k, n))


def all_partitions(n: int) -> tuple[Partition, ...]:
    out = []
    for k in range(1, n + 1):
        out.extend(partitions_into(n, k))
    return tuple(out)


# ---------------------------------------------------------------------------
# problem and solution records

@dataclass(frozen=True)
class SevalueProblem:
    """An observable together with the statistics and partition against
    which its separable bound is sought."""

    operator: LowRankObservable | np.ndarray
    stats: Statistics
    partition: Partition
    space: SpaceConfig

    def __post_init__(self):
        if self.partition.n != self.space.n:
            raise ValueError(
                f"partition {self.partition} does not sum to n={self.space.n}")
        if isinstance(self.operator, LowRankObservable):
            if self.operator.space != self.space:
                raise ValueError("operator space mismatch")
        else:
            dim = self.space.total_dim
            op = require_hermitian(self.operator, "observable")
            if op.shape != (dim, dim):
                raise ValueError(f"operator shape {op.shape}, expected {(dim, dim)}")
            op.setflags(write=False)
            object.__setattr__(self, "operator", op)


@dataclass(frozen=True)
class SevalueSolution:
    """A stationary point of the constrained Rayleigh quotient.

    ``residual`` is the worst per-party stationarity defect
    ||A_j b_j - g B_j b_j|| / ||B_j b_j||; ``chi_norm`` is the norm of
    the in-sector perturbation P[L P - g]|b_1,...,b_K>.
    """

    value: float
    party_vectors: tuple[np.ndarray, ...]
    projected_vector: StateVector
    residual: float
    chi_norm: float
    converged: bool
    sweeps: int
    partition: Partition
    statistics: Statistics


@dataclass(frozen=True)
class SupremumResult:
    """Outcome of a multistart search for the extremal quotient."""

    value: float
    best: SevalueSolution
    solutions: tuple[SevalueSolution, ...]
    fraction_at_value: float
    n_converged: int
    n_failed: int
    starts: int
    seed: int


# ---------------------------------------------------------------------------
# internal machinery

def _crandn(rng: np.random.Generator, size) -> np.ndarray:
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) \
        / math.sqrt(2.0)


def _apply_local(mat: np.ndarray, amplitudes: np.ndarray,
                 n_slots: int) -> np.ndarray:
    """Apply the same single-mode matrix to every slot of a block."""
    d = mat.shape[0]
    tens = amplitudes.reshape((d,) * n_slots)
    for slot in range(n_slots):
        tens = np.moveaxis(np.tensordot(mat, tens, axes=(1, slot)), 0, slot)
    return tens.reshape(-1)


def _kron_chain(blocks) -> np.ndarray:
    vecs = [np.asarray(b, dtype=np.complex128) for b in blocks]
    if not vecs:
        return np.ones(1, dtype=np.complex128)
    return reduce(np.kron, vecs)


class _Solver:
    """Per-problem workspace: projected low-rank factors and the
    party-wise operator builders."""

    def __init__(self, problem: SevalueProblem):
        self.problem = problem
        self.space = problem.space
        self.stats = problem.stats
        self.partition = problem.partition
        self.block_dims = problem.partition.block_dims(problem.space.d)
        if isinstance(problem.operator, LowRankObservable):
            proj = problem.operator.projected(problem.stats)
            self.terms = proj.terms
            self.dense = None
        else:
            self.terms = None
            self.dense = problem.operator

    # -- full-space helpers ------------------------------------------------

    def projected_product(self, blocks) -> np.ndarray:
        return project_amplitudes(self.stats, _kron_chain(blocks), self.space)

    def sandwich_matvec(self, in_sector: np.ndarray) -> np.ndarray:
        """(P L P) v for an already projected vector v."""
        if self.terms is not None:
            out = np.zeros(self.space.total_dim, dtype=np.complex128)
            for c, k, b in self.terms:
                out += (c * (b.conj() @ in_sector)) * k
            return out
        return project_amplitudes(self.stats, self.dense @ in_sector, self.space)

    def chi_vector(self, blocks, value: float) -> np.ndarray:
        p = self.projected_product(blocks)
        return self.sandwich_matvec(p) - value * p

    # -- party-wise operators ----------------------------------------------

    def party_matrices(self, blocks, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Contracted (numerator, overlap) pair for party j with the
        other blocks held fixed."""
        dj = self.block_dims[j]
        if dj > PARTY_DENSE_CAP:
            raise DimensionCapError(
                f"party dimension {dj} exceeds the dense cap {PARTY_DENSE_CAP}")
        left = _kron_chain(blocks[:j])
        right = _kron_chain(blocks[j + 1:])
        eye = np.eye(dj, dtype=np.complex128)
        q = np.einsum("l,xy,r->lxry", left, eye, right).reshape(-1, dj)
        p = project_amplitudes(self.stats, q, self.space)
        p4 = p.reshape(left.size, dj, right.size, dj)
        overlap = np.einsum("l,lxry,r->xy", left.conj(), p4, right.conj(),
                            optimize=True)
        if self.terms is not None:
            numer = np.zeros((dj, dj), dtype=np.complex128)
            for c, kvec, bvec in self.terms:
                ka = self._contract_fixed(kvec, left, right, dj)
                ba = self._contract_fixed(bvec, left, right, dj)
                numer += c * np.outer(ka, ba.conj())
        else:
            numer = p.conj().T @ (self.dense @ p)
        numer = (numer + numer.conj().T) / 2.0
        overlap = (overlap + overlap.conj().T) / 2.0
        return numer, overlap

    def _contract_fixed(self, full_vec, left, right, dj) -> np.ndarray:
        t = full_vec.reshape(left.size, dj, right.size)
        return np.einsum("l,lmr,r->m", left.conj(), t, right.conj(),
                         optimize=True)

    def residual(self, blocks, value: float) -> float:
        worst = 0.0
        for j in range(self.partition.k):
            numer, overlap = self.party_matrices(blocks, j)
            bv = overlap @ blocks[j]
            defect = numer @ blocks[j] - value * bv
            scale = np.linalg.norm(bv)
            if scale <= 0.0:
                raise ZeroProjectionError("overlap annihilates a party vector")
            worst = max(worst, float(np.linalg.norm(defect) / scale))
        return worst

    def overlap_defects(self, blocks, value: float) -> list[float]:
        """Per-party norms of the unnormalized stationarity defect."""
        out = []
        for j in range(self.partition.k):
            numer, overlap = self.party_matrices(blocks, j)
            out.append(float(np.linalg.norm(
                numer @ blocks[j] - value * (overlap @ blocks[j]))))
        return out

    # -- single full-space party (K = 1) ------------------------------------

    def solve_single_lowrank(self, mode: str) -> SevalueSolution:
        """K = 1 with a low-rank observable: the nonzero part of the
        spectrum lives in the span of the projected term vectors."""
        vecs = []
        for _c, k, b in self.terms:
            vecs.extend([k, b])
        stacked = np.column_stack(vecs)
        u, s, _ = np.linalg.svd(stacked, full_matrices=False)
        keep = s > max(s[0], 1e-300) * 1e-12
        basis = u[:, keep]
        small = np.zeros((basis.shape[1],) * 2, dtype=np.complex128)
        for c, k, b in self.terms:
            small += c * np.outer(basis.conj().T @ k, (basis.conj().T @ b).conj())
        small = (small + small.conj().T) / 2.0
        vals, vecs_small = np.linalg.eigh(small)
        idx = -1 if mode == "max" else 0
        value = float(vals[idx])
        vector = basis @ vecs_small[:, idx]
        vector /= np.linalg.norm(vector)
        p = StateVector(self.space, vector)
        chi = self.sandwich_matvec(vector) - value * vector
        res = float(np.linalg.norm(chi))
        return SevalueSolution(
            value=value, party_vectors=(vector,), projected_vector=p,
            residual=res, chi_norm=res, converged=True, sweeps=1,
            partition=self.partition, statistics=self.stats)


def _generalized_step(numer: np.ndarray, overlap: np.ndarray,
                      previous: np.ndarray, mode: str) -> tuple[float, np.ndarray]:
    """Extremal eigenpair of numer x = g overlap x on range(overlap)."""
    w, e = np.linalg.eigh(overlap)
    wmax = float(w[-1])
    if wmax <= 1e-14:
        raise ZeroProjectionError("projected overlap operator is numerically zero")
    keep = w > wmax * B_RANGE_CUTOFF
    basis = e[:, keep] / np.sqrt(w[keep])
    reduced = basis.conj().T @ numer @ basis
    reduced = (reduced + reduced.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(reduced)
    target = vals[-1] if mode == "max" else vals[0]
    tol = max(1e-12, 1e-9 * abs(target))
    candidates = np.nonzero(np.abs(vals - target) <= tol)[0]
    best_overlap, best_vec = -1.0, None
    for idx in candidates:
        cand = basis @ vecs[:, idx]
        cand /= np.linalg.norm(cand)
        score = abs(previous.conj() @ cand)
        if score > best_overlap:
            best_overlap, best_vec = score, cand
    phase = previous.conj() @ best_vec
    if abs(phase) > 1e-12:
        best_vec = best_vec * (phase.conjugate() / abs(phase))
    return float(target), best_vec


def sweep_solve(problem: SevalueProblem, init,
                max_sweeps: int = MAX_SWEEPS, tol: float = RESIDUAL_TOL,
                mode: str = "max",
                value_tol: float = VALUE_TOL) -> SevalueSolution:
    """Cyclic per-party ascent (or descent) from a given initialization.

    ``init`` is one vector per party.  Raises ZeroProjectionError when
    the initialization (or an intermediate step) has numerically zero
    projection; an unconverged run is returned flagged, not raised.
    """
    if mode not in ("max", "min"):
        raise ValueError("mode must be 'max' or 'min'")
    ws = _Solver(problem)
    k = problem.partition.k
    if len(init) != k:
        raise ValueError(f"need {k} party vectors, got {len(init)}")
    if k == 1 and ws.terms is not None \
            and problem.space.total_dim > PARTY_DENSE_CAP:
        return ws.solve_single_lowrank(mode)
    blocks = []
    for b, dim in zip(init, problem.partition.block_dims(problem.space.d)):
        arr = np.asarray(b, dtype=np.complex128)
        if arr.shape != (dim,):
            raise ValueError("party vector dimension mismatch")
        nrm = np.linalg.norm(arr)
        if nrm == 0.0:
            raise ZeroProjectionError("zero party vector in initialization")
        blocks.append(arr / nrm)
    if np.linalg.norm(ws.projected_product(blocks)) < INIT_PROJECTION_TOL:
        raise ZeroProjectionError("initialization projects to zero")

    value = math.nan
    previous = math.nan
    for sweep in range(1, max_sweeps + 1):
        for j in range(k):
            numer, overlap = ws.party_matrices(blocks, j)
            value, blocks[j] = _generalized_step(numer, overlap, blocks[j], mode)
        if sweep > 1 and abs(value - previous) <= value_tol:
            res = ws.residual(blocks, value)
            if res <= tol:
                return SevalueSolution(
                    value=value, party_vectors=tuple(blocks),
                    projected_vector=StateVector(
                        problem.space, ws.projected_product(blocks)),
                    residual=res,
                    chi_norm=float(np.linalg.norm(ws.chi_vector(blocks, value))),
                    converged=True, sweeps=sweep,
                    partition=problem.partition, statistics=problem.stats)
        previous = value
    res = ws.residual(blocks, value)
    return SevalueSolution(
        value=value, party_vectors=tuple(blocks),
        projected_vector=StateVector(problem.space,
                                     ws.projected_product(blocks)),
        residual=res,
        chi_norm=float(np.linalg.norm(ws.chi_vector(blocks, value))),
        converged=False, sweeps=max_sweeps,
        partition=problem.partition, statistics=problem.stats)


def _run_start(problem: SevalueProblem, seed: int, start: int, mode: str,
               max_sweeps: int, tol: float,
               value_tol: float) -> SevalueSolution | None:
    rng = np.random.default_rng([seed, start])
    dims = problem.partition.block_dims(problem.space.d)
    for _attempt in range(8):
        init = [_crandn(rng, dim) for dim in dims]
        try:
            return sweep_solve(problem, init, max_sweeps=max_sweeps,
                               tol=tol, mode=mode, value_tol=value_tol)
        except ZeroProjectionError:
            continue
    return None


def solve_sup_g(problem: SevalueProblem, starts: int = DEFAULT_STARTS,
                seed: int = 0, *, mode: str = "max",
                max_sweeps: int = MAX_SWEEPS, tol: float = RESIDUAL_TOL,
                value_tol: float = VALUE_TOL,
                threads: int | None = None) -> SupremumResult:
    """Multistart search for the extremal separability eigenvalue.

    Deterministic for a fixed (seed, starts) pair: every start derives
    its own generator from the pair, so the thread count does not
    change the result.  Raises ConvergenceError when no start converges
    (distinct from a converged bound that simply fails to detect).
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    if problem.partition.k == 1:
        if isinstance(problem.operator, LowRankObservable) \
                and problem.space.total_dim > PARTY_DENSE_CAP:
            sol = _Solver(problem).solve_single_lowrank(mode)
        else:
            rng = np.random.default_rng([seed, 0])
            sol = sweep_solve(problem,
                              [_crandn(rng, problem.space.total_dim)],
                              max_sweeps=max_sweeps, tol=tol, mode=mode,
                              value_tol=value_tol)
        return SupremumResult(value=sol.value, best=sol, solutions=(sol,),
                              fraction_at_value=1.0, n_converged=1,
                              n_failed=0, starts=starts, seed=seed)

    if threads is None:
        threads = int(os.environ.get("SEVALUE_THREADS", "1"))
    indices = list(range(starts))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda i: _run_start(problem, seed, i, mode, max_sweeps,
                                     tol, value_tol),
                indices))
    else:
        results = [_run_start(problem, seed, i, mode, max_sweeps, tol,
                              value_tol)
                   for i in indices]

    solutions = tuple(r for r in results if r is not None)
    n_failed = starts - len(solutions)
    converged = [s for s in solutions if s.converged]
    if not converged:
        raise ConvergenceError(
            f"no start converged ({n_failed} failed on zero projections, "
            f"{len(solutions) - n_failed} hit the sweep limit)")
    key = (lambda s: s.value) if mode == "max" else (lambda s: -s.value)
    best = max(converged, key=key)
    at_value = sum(1 for s in converged if abs(s.value - best.value) <= 1e-8)
    return SupremumResult(
        value=best.value, best=best, solutions=solutions,
        fraction_at_value=at_value / starts,
        n_converged=len(converged), n_failed=n_failed,
        starts=starts, seed=seed)


def sup_over_partitions(operator, stats: Statistics, space: SpaceConfig,
                        k: int, starts: int = DEFAULT_STARTS, seed: int = 0,
                        **kwargs) -> tuple[float, dict]:
    """Largest bound over every multiset-distinct partition into k parts.

    A claim of "not K-separable" must clear all of them, so the witness
    bound is the maximum.
    """
    per_partition = {}
    for partition in partitions_into(space.n, k):
        problem = SevalueProblem(operator, stats, partition, space)
        per_partition[partition] = solve_sup_g(problem, starts=starts,
                                               seed=seed, **kwargs)
    value = max(r.value for r in per_partition.values())
    return value, per_partition


# ---------------------------------------------------------------------------
# contracted operator (public, dense route)

def contracted_operator(operator: np.ndarray, party_vectors, j: int,
                        partition: Partition, space: SpaceConfig) -> np.ndarray:
    """Operator on party j obtained by fixing all other parties:
    <x| X_j |y> = <b_1,...,x,...,b_K| X |b_1,...,y,...,b_K>.

    Party indices are 0-based.  Hermitian whenever X is.
    """
    if not 0 <= j < partition.k:
        raise IndexError(f"party index {j} out of range for {partition}")
    n, d = space.n, space.d
    x = np.asarray(operator, dtype=np.complex128)
    if x.shape != (space.total_dim,) * 2:
        raise ValueError("operator shape mismatch")
    tens = x.reshape(space.dims * 2)
    operands = [tens, list(range(2 * n))]
    for party, block in enumerate(party_vectors):
        if party == j:
            continue
        nk = partition.parts[party]
        bt = np.asarray(block, dtype=np.complex128).reshape((d,) * nk)
        slots = list(partition.slots(party))
        operands.extend([bt.conj(), slots])
        operands.extend([bt, [n + s for s in slots]])
    out_axes = list(partition.slots(j)) + [n + s for s in partition.slots(j)]
    result = np.einsum(*operands, out_axes, optimize=True)
    dj = d ** partition.parts[j]
    return result.reshape(dj, dj)


# ---------------------------------------------------------------------------
# analytic solutions

def _rank_one_diagnostics(problem: SevalueProblem, value: float,
                          blocks) -> SevalueSolution:
    ws = _Solver(problem)
    blocks = [np.asarray(b, dtype=np.complex128) for b in blocks]
    blocks = [b / np.linalg.norm(b) for b in blocks]
    p = ws.projected_product(blocks)
    if np.linalg.norm(p) < 1e-12:
        raise ZeroProjectionError("analytic party vectors project to zero")
    return SevalueSolution(
        value=float(value), party_vectors=tuple(blocks),
        projected_vector=StateVector(problem.space, p),
        residual=ws.residual(blocks, value),
        chi_norm=float(np.linalg.norm(ws.chi_vector(blocks, value))),
        converged=True, sweeps=0,
        partition=problem.partition, statistics=problem.stats)


def analytic_rank_one(psi: StateVector, stats: Statistics) -> list[SevalueSolution]:
    """Closed-form stationary points for the projected rank-one
    observable built from a two-particle state.

    Distinguishable: one solution per Schmidt coefficient, value
    lambda_n**2.  Fermions: value 2*kappa_n**2 on each Slater pair.
    Bosons: values kappa_n**2 on the diagonal family plus
    kappa_k**2 + kappa_l**2 on the two-mode mixtures
    sqrt(kappa_k)|w_k> +/- i sqrt(kappa_l)|w_l>.
    """
    if psi.space.n != 2:
        raise ValueError("analytic solutions cover two-particle states only")
    from .operators import rank_one_observable
    observable = rank_one_observable(psi, stats)
    partition = Partition((1, 1))
    problem = SevalueProblem(observable, stats, partition, psi.space)
    solutions: list[SevalueSolution] = []
    if stats is Statistics.DISTINGUISHABLE:
        dec = schmidt(psi)
        for idx, lam in enumerate(dec.coefficients):
            solutions.append(_rank_one_diagnostics(
                problem, lam ** 2,
                [dec.left_basis[:, idx], dec.right_basis[:, idx]]))
    elif stats is Statistics.FERMION:
        dec = slater_fermion(project(stats, psi))
        for idx, kappa in enumerate(dec.coefficients):
            if kappa <= 1e-14:
                continue
            solutions.append(_rank_one_diagnostics(
                problem, 2.0 * kappa ** 2,
                [dec.basis[:, 2 * idx], dec.basis[:, 2 * idx + 1]]))
    else:
        dec = slater_boson(project(stats, psi))
        kappas = dec.coefficients
        for idx, kappa in enumerate(kappas):
            if kappa <= 1e-14:
                continue
            solutions.append(_rank_one_diagnostics(
                problem, kappa ** 2,
                [dec.basis[:, idx], dec.basis[:, idx]]))
        d = psi.space.d
        for a in range(d):
            for b in range(a + 1, d):
                if kappas[a] <= 1e-14 and kappas[b] <= 1e-14:
                    continue
                plus = (np.sqrt(kappas[a]) * dec.basis[:, a]
                        + 1j * np.sqrt(kappas[b]) * dec.basis[:, b])
                minus = (np.sqrt(kappas[a]) * dec.basis[:, a]
                         - 1j * np.sqrt(kappas[b]) * dec.basis[:, b])
                solutions.append(_rank_one_diagnostics(
                    problem, kappas[a] ** 2 + kappas[b] ** 2, [plus, minus]))
    solutions.sort(key=lambda s: -s.value)
    return solutions


@dataclass(frozen=True)
class InterferenceAnalysis:
    """Closed-form account of the interference observable's spectrum of
    stationary quotients: extremes +/- (1/2)**(K-1) on balanced
    superpositions, plus a trivial g = 0 family."""

    bound: float
    solutions: tuple[SevalueSolution, ...]
    trivial_value: float


def analytic_interference(space: SpaceConfig, stats: Statistics,
                          partition: Partition) -> InterferenceAnalysis:
    """Closed-form value (1/2)**(K-1) of the interference observable on
    the balanced stationary family, with a representative solution per
    party.

    Caveat: this is the supremum over all product vectors for
    distinguishable subsystems and bosons, and for fermion partitions
    with at most one block of size >= 2.  For fermion partitions with
    two blocks of equal even size (the smallest case is (2, 2)), exact
    product states exist whose quotient reaches 1: with A, C the two
    label groups and omega_A, omega_C antisymmetric two-particle states
    supported on them, even-degree components commute, so the cross
    terms of (omega_A + i omega_C) x (omega_A - i omega_C) cancel under
    antisymmetrization and the projected product lands exactly on the
    balanced superposition of the two interference kets.  The sweep
    solver finds those solutions; use it rather than this value when
    that pattern applies.
    """
    if space.d < 2 * space.n:
        raise ValueError(f"need d >= 2n = {2 * space.n}, got d={space.d}")
    from .operators import interference_observable
    observable = interference_observable(space, stats)
    problem = SevalueProblem(observable, stats, partition, space)
    k = partition.k
    bound = 0.5 ** (k - 1)
    blocks = []
    for party in range(k):
        sub = SpaceConfig(space.d, partition.parts[party])
        low = basis_product_vector(sub, [s for s in partition.slots(party)])
        high = basis_product_vector(sub, [space.n + s
                                          for s in partition.slots(party)])
        blocks.append((low.amplitudes + high.amplitudes) / math.sqrt(2.0))
    if k == 1 and isinstance(problem.operator, LowRankObservable) \
            and space.total_dim > PARTY_DENSE_CAP:
        ws = _Solver(problem)
        rep = ws.solve_single_lowrank("max")
    else:
        rep = _rank_one_diagnostics(problem, bound, blocks)
    return InterferenceAnalysis(bound=bound, solutions=(rep,),
                                trivial_value=0.0)


# ---------------------------------------------------------------------------
# sampling oracle

def brute_force_bound(problem: SevalueProblem, samples: int,
                      seed: int = 0) -> float:
    """Largest Rayleigh quotient found over random K-separable product
    vectors.

    A lower bound on the separable supremum by construction: every
    evaluated point is a valid product vector, and only the maximum of
    their quotients is returned.  Half the sample budget explores with
    independent Gaussian draws; the other half refines the incumbent
    best by annealed Gaussian perturbations of its party vectors, so
    the bound comes close to the supremum instead of stalling at the
    bulk of the distribution.

    Independent of the sweep solver on purpose: quotients are evaluated
    through the combinatorial sector basis, never through the
    permutation-sum projector and never through per-party eigensolves.
    Samples with numerically zero projection are skipped.  Deterministic
    for a fixed seed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    space, stats = problem.space, problem.stats
    isometry = sector_isometry(stats, space) if stats.is_projected else None
    if isinstance(problem.operator, LowRankObservable):
        proj = problem.operator.projected(stats)
        if isometry is not None:
            compressed = [(c, (isometry.getH() @ k), (isometry.getH() @ b))
                          for c, k, b in proj.terms]
        else:
            compressed = [(c, k, b) for c, k, b in proj.terms]
        dense_sec = None
    else:
        if isometry is not None:
            dense_cols = isometry.toarray()
            dense_sec = dense_cols.conj().T @ problem.operator @ dense_cols
        else:
            dense_sec = np.asarray(problem.operator)
        compressed = None
    dims = problem.partition.block_dims(space.d)
    adjoint = isometry.getH().tocsr() if isometry is not None else None
    term_kets = None
    if compressed is not None:
        term_kets = [(c, np.asarray(k).ravel().conj(),
                      np.asarray(b).ravel()) for c, k, b in compressed]

    def evaluate(blocks):
        """Quotients of a batch of product vectors.

        Each per-party block has shape (party_dim, batch): keeping the
        batch on the trailing, contiguous axis lets the sparse sector
        compression run without copies."""
        count = blocks[0].shape[1]
        vecs = blocks[0]
        for block in blocks[1:]:
            vecs = (vecs[:, None, :] * block[None, :, :]).reshape(-1, count)
        coords = adjoint @ vecs if adjoint is not None else vecs
        denom = np.einsum("dc,dc->c", coords.real, coords.real) \
            + np.einsum("dc,dc->c", coords.imag, coords.imag)
        quotients = np.full(count, -math.inf)
        valid = denom > 1e-14
        if not np.any(valid):
            return quotients
        if term_kets is not None:
            numer = np.zeros(count, dtype=np.complex128)
            for c, k_conj, b in term_kets:
                numer += c * (k_conj @ coords).conj() * (b.conj() @ coords)
            numer = numer.real
        else:
            numer = np.einsum("dc,de,ec->c", coords.conj(), dense_sec,
                              coords, optimize=True).real
        quotients[valid] = numer[valid] / denom[valid]
        return quotients

    rng = np.random.default_rng([seed, 11])
    best = -math.inf
    best_blocks = None
    remaining = samples - samples // 2
    while remaining > 0:
        count = min(_ORACLE_CHUNK, remaining)
        remaining -= count
        blocks = []
        for dim in dims:
            block = _crandn(rng, (dim, count))
            block /= np.linalg.norm(block, axis=0, keepdims=True)
            blocks.append(block)
        quotients = evaluate(blocks)
        top = int(np.argmax(quotients))
        if quotients[top] > best:
            best = float(quotients[top])
            best_blocks = [block[:, top].copy() for block in blocks]
    if best_blocks is None:
        raise ZeroProjectionError("every sample projected to zero")

    # refinement: cycle through the parties, perturbing one at a time
    # around the incumbent with an adaptive relative step
    steps = [0.5] * len(dims)
    party = 0
    remaining = samples // 2
    while remaining > 0:
        count = min(_ORACLE_CHUNK, remaining)
        remaining -= count
        blocks = []
        for j, (center, dim) in enumerate(zip(best_blocks, dims)):
            if j == party:
                noise = _crandn(rng, (dim, count)) \
                    * (steps[j] / math.sqrt(dim))
                block = center[:, None] + noise
                block /= np.linalg.norm(block, axis=0, keepdims=True)
            else:
                block = np.broadcast_to(center[:, None], (dim, count))
            blocks.append(block)
        quotients = evaluate(blocks)
        top = int(np.argmax(quotients))
        if quotients[top] > best:
            best = float(quotients[top])
            best_blocks = [np.array(block[:, top]) for block in blocks]
            steps[party] = min(steps[party] * 1.5, 2.0)
        else:
            steps[party] = max(steps[party] * 0.8, 1e-4)
        party = (party + 1) % len(dims)
    return best


# ---------------------------------------------------------------------------
# covariance and the perturbed single-equation form

def transformed_observable(operator, lambda1: float, lambda2: float,
                           unitary: np.ndarray, stats: Statistics,
                           space: SpaceConfig):
    """The observable U^dagger...U [lambda1 L + lambda2 P] rotated by a
    local unitary applied to every slot.  Low-rank inputs stay low-rank
    when lambda2 = 0; otherwise a dense matrix is required."""
    udag = np.asarray(unitary, dtype=np.complex128).conj().T
    if isinstance(operator, LowRankObservable):
        if lambda2 == 0.0:
            terms = tuple(
                (lambda1 * c,
                 _apply_local(udag, k, space.n),
                 _apply_local(udag, b, space.n))
                for c, k, b in operator.terms)
            return LowRankObservable(space, terms, kind=operator.kind)
        operator = operator.to_matrix()
    from .tensor import projector_matrix
    dim = space.total_dim
    if dim > PARTY_DENSE_CAP:
        raise DimensionCapError(
            f"dense transformed observable of side {dim} exceeds "
            f"{PARTY_DENSE_CAP}")
    shifted = lambda1 * np.asarray(operator, dtype=np.complex128) \
        + lambda2 * projector_matrix(stats, space)
    full = reduce(np.kron, [np.asarray(unitary, dtype=np.complex128)] * space.n)
    return full.conj().T @ shifted @ full


def transform_solution(sol: SevalueSolution, lambda1: float, lambda2: float,
                       unitary: np.ndarray) -> SevalueSolution:
    """Carry a solution over to the rotated and affinely reparameterized
    observable: the quotient becomes lambda1 * g + lambda2 and every
    party vector is rotated slot-wise by U^dagger."""
    if lambda1 == 0.0:
        raise ValueError("lambda1 must be nonzero")
    u = np.asarray(unitary, dtype=np.complex128)
    d = sol.projected_vector.space.d
    if u.shape != (d, d) or \
            np.abs(u.conj().T @ u - np.eye(d)).max() > 1e-10:
        raise ValueError("unitary must be a d x d unitary matrix")
    udag = u.conj().T
    new_blocks = tuple(
        _apply_local(udag, np.asarray(b), nk)
        for b, nk in zip(sol.party_vectors, sol.partition.parts))
    new_projected = StateVector(
        sol.projected_vector.space,
        _apply_local(udag, sol.projected_vector.amplitudes,
                     sol.projected_vector.space.n))
    return replace(sol,
                   value=lambda1 * sol.value + lambda2,
                   party_vectors=new_blocks,
                   projected_vector=new_projected,
                   residual=abs(lambda1) * sol.residual,
                   chi_norm=abs(lambda1) * sol.chi_norm)


def verify_second_form(sol: SevalueSolution,
                       problem: SevalueProblem) -> tuple[StateVector, float]:
    """Perturbed single-equation check of a solution.

    Returns the in-sector perturbation chi = P L P|b> - g P|b> together
    with the largest overlap of chi against single-party variations of
    the product vector; both vanish at an exact stationary point.
    """
    ws = _Solver(problem)
    blocks = [np.asarray(b, dtype=np.complex128) for b in sol.party_vectors]
    chi = ws.chi_vector(blocks, sol.value)
    if problem.partition.k == 1:
        max_overlap = float(np.linalg.norm(chi))
    else:
        max_overlap = max(ws.overlap_defects(blocks, sol.value))
    return StateVector(problem.space, chi), max_overlap
