"""Witness construction, expectation values, and detection verdicts.

An upper-form witness is  W = G * P - P L P  with G the separable
bound: nonnegative on every K-separable state of the matching
statistics, negative somewhere exactly when the observable detects.
The equivalent scalar test used throughout is  <L> > G.  A lower-form
witness uses the smallest stationary quotient instead and detects
states with  <L> below it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionCapError, SectorError
from .operators import LowRankObservable
from .solver import (Partition, SevalueProblem, analytic_interference,
                     analytic_rank_one, brute_force_bound, solve_sup_g,
                     sup_over_partitions)
from .tensor import (MATRIX_CAP, DensityOperator, SpaceConfig, StateVector,
                     Statistics, project, project_operator, projector_matrix)
from .decompositions import schmidt

DETECTION_MARGIN = 1e-9
SECTOR_TOL = 1e-8


class WitnessForm(Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class Witness:
    """A separability bound packaged with its observable and provenance."""

    observable: LowRankObservable | np.ndarray
    stats: Statistics
    space: SpaceConfig
    k: int
    bound: float
    partition: Partition | None = None      # None: bound maximized over all
    form: WitnessForm = WitnessForm.UPPER
    bound_source: str = "analytic"
    margin: float = DETECTION_MARGIN


@dataclass(frozen=True)
class WitnessVerdict:
    verdict: str                 # "entangled" or "inconclusive"
    expectation: float
    bound: float
    margin: float
    k: int
    statistics: Statistics

    @property
    def entangled(self) -> bool:
        return self.verdict == "entangled"


def expectation(rho: DensityOperator, observable) -> float:
    """tr(rho X) for a Hermitian observable, real up to float noise.

    Mixtures are evaluated term by term, without densifying."""
    if isinstance(observable, LowRankObservable):
        if observable.space != rho.space:
            raise ValueError("dimension mismatch")
        if rho.mixture is not None:
            total = sum(w * observable.expectation_pure(v.amplitudes)
                        for w, v in rho.mixture)
        else:
            total = sum(c * (b.conj() @ rho.matrix @ k)
                        for c, k, b in observable.terms)
    else:
        x = np.asarray(observable, dtype=np.complex128)
        if x.shape != (rho.space.total_dim,) * 2:
            raise ValueError("dimension mismatch")
        if rho.mixture is not None:
            total = sum(w * (v.amplitudes.conj() @ x @ v.amplitudes)
                        for w, v in rho.mixture)
        else:
            total = np.einsum("ij,ji->", rho.matrix, x)
    total = complex(total)
    if abs(total.imag) > 1e-9 * max(1.0, abs(total)):
        raise ValueError(f"expectation has a large imaginary part "
                         f"({total.imag:.2e}); observable not Hermitian?")
    return float(total.real)


def sector_deviation(rho: DensityOperator, stats: Statistics) -> float:
    """How far the state sticks out of the exchange sector."""
    if not stats.is_projected:
        return 0.0
    if rho.mixture is not None:
        worst = 0.0
        for _w, v in rho.mixture:
            delta = project(stats, v).amplitudes - v.amplitudes
            worst = max(worst, float(np.linalg.norm(delta)))
        return worst
    sandwiched = project_operator(stats, rho.matrix, rho.space)
    return float(np.abs(rho.matrix - sandwiched).max(initial=0.0))


def build_witness(problem: SevalueProblem, bound_source: str = "analytic", *,
                  form: WitnessForm = WitnessForm.UPPER,
                  starts: int = 64, seed: int = 0, samples: int = 100_000,
                  **solver_kwargs) -> Witness:
    """Witness for one specific partition.

    ``bound_source`` picks how the separable bound is obtained:
    "analytic" (closed forms for the tagged observables), "numeric"
    (multistart sweep solver), or "oracle" (random sampling; a lower
    bound, for comparison runs only).
    """
    mode = "max" if form is WitnessForm.UPPER else "min"
    if bound_source == "analytic":
        bound = _analytic_bound(problem, mode)
    elif bound_source == "numeric":
        result = solve_sup_g(problem, starts=starts, seed=seed, mode=mode,
                             **solver_kwargs)
        bound = result.value
    elif bound_source == "oracle":
        sign = 1.0 if mode == "max" else -1.0
        flipped = problem if mode == "max" else SevalueProblem(
            _negated(problem.operator), problem.stats, problem.partition,
            problem.space)
        bound = sign * brute_force_bound(flipped, samples=samples, seed=seed)
    else:
        raise ValueError(f"unknown bound source {bound_source!r}")
    return Witness(observable=problem.operator, stats=problem.stats,
                   space=problem.space, k=problem.partition.k,
                   partition=problem.partition, bound=bound, form=form,
                   bound_source=bound_source)


def build_k_witness(operator, stats: Statistics, space: SpaceConfig, k: int,
                    bound_source: str = "numeric", *, starts: int = 64,
                    seed: int = 0, samples: int = 100_000,
                    **solver_kwargs) -> Witness:
    """Witness against K-separability: the bound is maximized over every
    multiset-distinct partition into k parts."""
    from .solver import partitions_into
    if bound_source == "analytic":
        bounds = [
            _analytic_bound(SevalueProblem(operator, stats, p, space), "max")
            for p in partitions_into(space.n, k)]
        bound = max(bounds)
    elif bound_source == "numeric":
        bound, _ = sup_over_partitions(operator, stats, space, k,
                                       starts=starts, seed=seed,
                                       **solver_kwargs)
    elif bound_source == "oracle":
        bound = max(
            brute_force_bound(SevalueProblem(operator, stats, p, space),
                              samples=samples, seed=seed)
            for p in partitions_into(space.n, k))
    else:
        raise ValueError(f"unknown bound source {bound_source!r}")
    return Witness(observable=operator, stats=stats, space=space, k=k,
                   partition=None, bound=bound, form=WitnessForm.UPPER,
                   bound_source=bound_source)


def _negated(operator):
    if isinstance(operator, LowRankObservable):
        return LowRankObservable(
            operator.space,
            tuple((-c, k, b) for c, k, b in operator.terms),
            kind=operator.kind)
    return -np.asarray(operator)


def _has_equal_even_blocks(partition: Partition) -> bool:
    evens = [p for p in partition.parts if p >= 2 and p % 2 == 0]
    return any(evens.count(size) >= 2 for size in set(evens))


def _analytic_bound(problem: SevalueProblem, mode: str) -> float:
    op = problem.operator
    if not isinstance(op, LowRankObservable) or op.kind is None:
        raise ValueError("no analytic bound known for this observable; "
                         "use the numeric source")
    if op.kind == "interference":
        if problem.stats is Statistics.FERMION and \
                _has_equal_even_blocks(problem.partition):
            # exact product states beat the balanced-family value here;
            # see analytic_interference.  A too-small bound would turn
            # the witness into a false-positive detector.
            raise ValueError(
                "the balanced-family bound is not the separable supremum "
                "for fermion partitions with two blocks of equal even "
                "size; use the numeric source")
        analysis = analytic_interference(problem.space, problem.stats,
                                         problem.partition)
        return analysis.bound if mode == "max" else -analysis.bound
    if op.kind == "rank_one":
        if problem.partition.k != 2 or problem.space.n != 2:
            raise ValueError("rank-one analytic bound covers the bipartite "
                             "partition (1,1) only")
        coeff, ket, _ = op.terms[0]
        psi = StateVector(problem.space, ket)
        solutions = analytic_rank_one(psi, problem.stats)
        values = [s.value * coeff.real for s in solutions]
        # g = 0 is always attained (analytic lists omit trivial zeros)
        values.append(0.0)
        return max(values) if mode == "max" else min(values)
    raise ValueError(f"no analytic bound for kind {op.kind!r}")


def witness_matrix(witness: Witness) -> np.ndarray:
    """Dense matrix of the witness operator, for small spaces."""
    dim = witness.space.total_dim
    if dim > MATRIX_CAP:
        raise DimensionCapError(f"witness matrix side {dim} exceeds cap")
    if isinstance(witness.observable, LowRankObservable):
        sandwiched = witness.observable.projected(witness.stats).to_matrix()
    else:
        sandwiched = project_operator(witness.stats, witness.observable,
                                      witness.space)
    proj = projector_matrix(witness.stats, witness.space)
    if witness.form is WitnessForm.UPPER:
        return witness.bound * proj - sandwiched
    return sandwiched - witness.bound * proj


def detect(rho: DensityOperator, witness: Witness) -> WitnessVerdict:
    """Entanglement verdict for a state against a witness.

    "entangled" means the state cannot be K-separable for the witness's
    statistics and K.  The state must live on the matching exchange
    sector; anything else is an input error, not a verdict.
    """
    if rho.space != witness.space:
        raise ValueError("dimension mismatch")
    deviation = sector_deviation(rho, witness.stats)
    if deviation > SECTOR_TOL:
        raise SectorError(
            f"state leaks out of the {witness.stats.value} sector "
            f"(deviation {deviation:.2e})")
    value = expectation(rho, witness.observable)
    if witness.form is WitnessForm.UPPER:
        hit = value > witness.bound + witness.margin
    else:
        hit = value < witness.bound - witness.margin
    return WitnessVerdict(
        verdict="entangled" if hit else "inconclusive",
        expectation=value, bound=witness.bound, margin=witness.margin,
        k=witness.k, statistics=witness.stats)


def schmidt_number_bound(psi: StateVector, r: int) -> float:
    """Separable bound of |psi><psi| against states of Schmidt rank <= r:
    the sum of the r largest squared Schmidt coefficients.  Exceeding it
    certifies Schmidt rank > r."""
    if psi.space.n != 2:
        raise ValueError("Schmidt-rank bounds cover bipartite states only")
    if not 1 <= r <= psi.space.d:
        raise ValueError(f"r must be in 1..{psi.space.d}, got {r}")
    dec = schmidt(psi)
    squares = np.sort(dec.coefficients ** 2)[::-1]
    return float(np.sum(squares[:r]))
