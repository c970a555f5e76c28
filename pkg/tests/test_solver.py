import dataclasses

import numpy as np
import pytest

from sepwit import (Partition, SevalueProblem, SpaceConfig, StateVector,
                    Statistics, all_partitions, analytic_interference,
                    analytic_rank_one, basis_product_vector,
                    brute_force_bound, contracted_operator,
                    interference_observable, partitions_into, product_vector,
                    project, projector_matrix, rank_one_observable,
                    solve_sup_g, sup_over_partitions, sweep_solve,
                    transform_solution, transformed_observable,
                    verify_second_form)
from sepwit.errors import ZeroProjectionError

from conftest import crandn, random_hermitian, random_unitary


def _random_sector_state(rng, d, stats):
    space = SpaceConfig(d, 2)
    raw = StateVector(space, crandn(rng, d * d))
    return project(stats, raw).normalized()


def _rank_one_problem(psi, stats):
    return SevalueProblem(rank_one_observable(psi, stats), stats,
                          Partition((1, 1)), psi.space)


# ---------------------------------------------------------------------------
# partitions

def test_partitions_into_enumeration():
    parts = {p.parts for p in partitions_into(4, 2)}
    assert parts == {(3, 1), (2, 2)}
    assert {p.parts for p in partitions_into(3, 3)} == {(1, 1, 1)}
    assert len(all_partitions(4)) == 5


def test_partition_same_partitioning():
    assert Partition((2, 3, 1)).same_partitioning(Partition((1, 2, 3)))
    assert not Partition((2, 2, 2)).same_partitioning(Partition((1, 2, 3)))


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition((2, 0))
    with pytest.raises(ValueError):
        SevalueProblem(np.eye(4), Statistics.BOSON, Partition((1, 1, 1)),
                       SpaceConfig(2, 2))


# ---------------------------------------------------------------------------
# contracted operator

def test_contracted_operator_product_observable(rng):
    d = 3
    space = SpaceConfig(d, 2)
    a = random_hermitian(rng, d)
    b = random_hermitian(rng, d)
    b2 = crandn(rng, d)
    out = contracted_operator(np.kron(a, b), [None, b2], 0,
                              Partition((1, 1)), space)
    assert np.allclose(out, a * (b2.conj() @ b @ b2))


def test_contracted_operator_symmetrizer():
    space = SpaceConfig(2, 2)
    proj = projector_matrix(Statistics.BOSON, space)
    ket0 = np.array([1.0, 0.0], dtype=complex)
    out = contracted_operator(proj, [None, ket0], 0, Partition((1, 1)), space)
    expected = 0.5 * (np.eye(2) + np.outer(ket0, ket0))
    assert np.allclose(out, expected)


def test_contracted_operator_identity(rng):
    d = 3
    space = SpaceConfig(d, 2)
    b2 = crandn(rng, d)
    out = contracted_operator(np.eye(d * d), [None, b2], 0,
                              Partition((1, 1)), space)
    assert np.allclose(out, np.eye(d) * np.vdot(b2, b2))


def test_contracted_operator_hermitian_multiblock(rng):
    space = SpaceConfig(2, 3)
    x = random_hermitian(rng, 8)
    blocks = [crandn(rng, 4), crandn(rng, 2)]
    out = contracted_operator(x, blocks, 0, Partition((2, 1)), space)
    assert np.abs(out - out.conj().T).max() < 1e-12
    with pytest.raises(IndexError):
        contracted_operator(x, blocks, 2, Partition((2, 1)), space)


# ---------------------------------------------------------------------------
# sweep solver on closed-form cases

def test_sweep_single_slater_pair_any_init(rng):
    space = SpaceConfig(2, 2)
    amps = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2)
    f = StateVector(space, amps)
    problem = _rank_one_problem(f, Statistics.FERMION)
    for _ in range(5):
        init = [crandn(rng, 2), crandn(rng, 2)]
        sol = sweep_solve(problem, init)
        assert sol.converged
        assert abs(sol.value - 1.0) < 1e-9      # 2 kappa^2 with kappa^2 = 1/2


def test_sweep_identity_observable_fixed_point(rng):
    space = SpaceConfig(3, 2)
    problem = SevalueProblem(np.eye(9), Statistics.BOSON, Partition((1, 1)),
                             space)
    sol = sweep_solve(problem, [crandn(rng, 3), crandn(rng, 3)])
    assert sol.converged
    assert abs(sol.value - 1.0) < 1e-10


def test_sweep_boson_balanced_pair_hits_both_branches(rng):
    space = SpaceConfig(2, 2)
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 1 / np.sqrt(2)
    problem = _rank_one_problem(StateVector(space, amps), Statistics.BOSON)
    seen = set()
    for trial in range(12):
        init = [crandn(rng, 2), crandn(rng, 2)]
        sol = sweep_solve(problem, init)
        assert sol.converged
        branch = min((0.5, 1.0), key=lambda x: abs(x - sol.value))
        assert abs(sol.value - branch) < 1e-8
        seen.add(branch)
    assert 1.0 in seen


def test_sweep_zero_projection_raises():
    space = SpaceConfig(3, 2)
    amps = np.zeros(9, dtype=complex)
    amps[1], amps[3] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    problem = _rank_one_problem(StateVector(space, amps), Statistics.FERMION)
    same = np.array([1.0, 0.0, 0.0], dtype=complex)
    with pytest.raises(ZeroProjectionError):
        sweep_solve(problem, [same, same.copy()])


def test_solution_projected_vector_nonzero_and_diagnostics(rng):
    psi = _random_sector_state(rng, 4, Statistics.FERMION)
    problem = _rank_one_problem(psi, Statistics.FERMION)
    sol = sweep_solve(problem, [crandn(rng, 4), crandn(rng, 4)])
    assert sol.projected_vector.norm() > 1e-8
    assert sol.residual <= 1e-9
    assert sol.chi_norm < 1.0


# ---------------------------------------------------------------------------
# multistart against the closed forms

@pytest.mark.parametrize("stats,formula", [
    (Statistics.FERMION, "fermion"),
    (Statistics.BOSON, "boson"),
    (Statistics.DISTINGUISHABLE, "distinguishable"),
])
def test_solve_sup_g_matches_analytic_rank_one(rng, stats, formula):
    for d in (3, 4):
        psi = _random_sector_state(rng, d, stats)
        expected = analytic_rank_one(psi, stats)[0].value
        result = solve_sup_g(_rank_one_problem(psi, stats), starts=24, seed=7)
        assert abs(result.value - expected) < 1e-8
        assert result.fraction_at_value > 0.0


def test_interference_bound_small_systems():
    for n, d in ((2, 4), (3, 6)):
        space = SpaceConfig(d, n)
        for stats in Statistics:
            observable = interference_observable(space, stats)
            for partition in all_partitions(n):
                if stats is Statistics.FERMION and \
                        partition.parts.count(2) >= 2:
                    continue    # supremum genuinely exceeds the formula
                problem = SevalueProblem(observable, stats, partition, space)
                result = solve_sup_g(problem, starts=10, seed=3)
                expected = 0.5 ** (partition.k - 1)
                assert abs(result.value - expected) < 1e-7, \
                    (stats, partition.parts)


def test_fermion_two_two_partition_reaches_unity():
    # two equal even blocks: commuting even-degree components make the
    # projected product land exactly on the balanced interference
    # superposition, so the supremum is 1, not 1/2
    space = SpaceConfig(8, 4)
    observable = interference_observable(space, Statistics.FERMION)
    problem = SevalueProblem(observable, Statistics.FERMION,
                             Partition((2, 2)), space)

    def two_form(pairs):
        mat = np.zeros((8, 8), dtype=complex)
        for i, j, c in pairs:
            mat[i, j] += c
            mat[j, i] -= c
        return mat.reshape(-1)

    omega_a = two_form([(0, 1, 0.5), (2, 3, 0.5)])
    omega_c = two_form([(4, 5, 0.5), (6, 7, 0.5)])
    init = [omega_a + 1j * omega_c, omega_a - 1j * omega_c]
    sol = sweep_solve(problem, init)
    assert sol.converged
    assert abs(sol.value - 1.0) < 1e-9


def test_monotone_bound_in_k(rng):
    space = SpaceConfig(6, 3)
    observable = interference_observable(space, Statistics.BOSON)
    values = []
    for k in (1, 2, 3):
        bound, _ = sup_over_partitions(observable, Statistics.BOSON, space,
                                       k, starts=8, seed=2)
        values.append(bound)
        assert abs(bound - 0.5 ** (k - 1)) < 1e-7
    assert values[0] > values[1] > values[2]


def test_analytic_interference_values_and_independence():
    for n, d in ((2, 4), (3, 6)):
        space = SpaceConfig(d, n)
        for stats in Statistics:
            for partition in all_partitions(n):
                analysis = analytic_interference(space, stats, partition)
                assert analysis.bound == 0.5 ** (partition.k - 1)
                assert analysis.trivial_value == 0.0
                rep = analysis.solutions[0]
                assert abs(rep.value - analysis.bound) < 1e-10
                assert rep.residual < 1e-9


def test_analytic_interference_requires_enough_modes():
    with pytest.raises(ValueError):
        analytic_interference(SpaceConfig(3, 2), Statistics.BOSON,
                              Partition((1, 1)))


def test_analytic_rank_one_examples(rng):
    # two equal Slater blocks -> top value 2 * (1/2)^2 = 1/2
    space = SpaceConfig(5, 2)
    amps = np.zeros(25, dtype=complex)
    amps[1 * 5 + 2], amps[2 * 5 + 1] = 0.5, -0.5
    amps[3 * 5 + 4], amps[4 * 5 + 3] = 0.5, -0.5
    top = analytic_rank_one(StateVector(space, amps), Statistics.FERMION)[0]
    assert abs(top.value - 0.5) < 1e-12

    # three equal symmetric coefficients -> kappa_k^2 + kappa_l^2 = 2/3
    space3 = SpaceConfig(3, 2)
    balanced = np.zeros(9, dtype=complex)
    for mode in range(3):
        balanced[mode * 3 + mode] = 1 / np.sqrt(3)
    top_b = analytic_rank_one(StateVector(space3, balanced),
                              Statistics.BOSON)[0]
    assert abs(top_b.value - 2.0 / 3.0) < 1e-12

    # balanced distinguishable pair -> lambda^2 = 1/2
    space2 = SpaceConfig(2, 2)
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    top_d = analytic_rank_one(StateVector(space2, bell),
                              Statistics.DISTINGUISHABLE)[0]
    assert abs(top_d.value - 0.5) < 1e-12


def test_statistics_reduction_to_distinguishable(rng):
    # with the identity in place of the projectors the solver must find
    # the squared Schmidt coefficients
    from sepwit import schmidt
    for d in (3, 4):
        space = SpaceConfig(d, 2)
        psi = StateVector(space, crandn(rng, d * d)).normalized()
        lams = schmidt(psi).coefficients
        result = solve_sup_g(_rank_one_problem(psi, Statistics.DISTINGUISHABLE),
                             starts=16, seed=11)
        assert abs(result.value - lams[0] ** 2) < 1e-8


# ---------------------------------------------------------------------------
# sampling oracle

def test_brute_force_identity_is_exactly_one(rng):
    space = SpaceConfig(3, 2)
    problem = SevalueProblem(np.eye(9), Statistics.BOSON, Partition((1, 1)),
                             space)
    value = brute_force_bound(problem, samples=500, seed=1)
    assert abs(value - 1.0) < 1e-12


def test_brute_force_interference_stays_below_bound():
    space = SpaceConfig(4, 2)
    for stats in Statistics:
        observable = interference_observable(space, stats)
        problem = SevalueProblem(observable, stats, Partition((1, 1)), space)
        value = brute_force_bound(problem, samples=100_000, seed=5)
        assert value <= 0.5 + 1e-12
        assert value > 0.45


def test_oracle_dominance_rank_one(rng):
    for stats in (Statistics.FERMION, Statistics.BOSON):
        psi = _random_sector_state(rng, 4, stats)
        problem = _rank_one_problem(psi, stats)
        solved = solve_sup_g(problem, starts=24, seed=7).value
        sampled = brute_force_bound(problem, samples=100_000, seed=7)
        assert solved >= sampled - 1e-9
        assert solved - sampled <= 0.05


def test_fermion_rank_one_oracle_example():
    space = SpaceConfig(4, 2)
    amps = np.zeros(16, dtype=complex)
    norm = np.sqrt(2 * (0.8 ** 2 + 0.6 ** 2))
    amps[0 * 4 + 1], amps[1 * 4 + 0] = 0.8 / norm, -0.8 / norm
    amps[2 * 4 + 3], amps[3 * 4 + 2] = 0.6 / norm, -0.6 / norm
    problem = _rank_one_problem(StateVector(space, amps), Statistics.FERMION)
    expected = 2 * (0.8 / norm) ** 2
    sampled = brute_force_bound(problem, samples=100_000, seed=3)
    assert sampled <= expected + 1e-12
    assert expected - sampled < 0.05


# ---------------------------------------------------------------------------
# covariance and the second form

def test_transform_identity_is_noop(rng):
    psi = _random_sector_state(rng, 3, Statistics.BOSON)
    problem = _rank_one_problem(psi, Statistics.BOSON)
    sol = sweep_solve(problem, [crandn(rng, 3), crandn(rng, 3)])
    moved = transform_solution(sol, 1.0, 0.0, np.eye(3))
    assert abs(moved.value - sol.value) < 1e-14
    for old, new in zip(sol.party_vectors, moved.party_vectors):
        assert np.allclose(old, new)


def test_transform_affine_shift(rng):
    psi = _random_sector_state(rng, 3, Statistics.FERMION)
    problem = _rank_one_problem(psi, Statistics.FERMION)
    sol = sweep_solve(problem, [crandn(rng, 3), crandn(rng, 3)])
    moved = transform_solution(sol, 2.0, -1.0, np.eye(3))
    assert abs(moved.value - (2.0 * sol.value - 1.0)) < 1e-12
    for old, new in zip(sol.party_vectors, moved.party_vectors):
        assert np.allclose(old, new)


def test_transform_solution_solves_transformed_problem(rng):
    psi = _random_sector_state(rng, 3, Statistics.BOSON)
    problem = _rank_one_problem(psi, Statistics.BOSON)
    sol = sweep_solve(problem, [crandn(rng, 3), crandn(rng, 3)])
    unitary = random_unitary(rng, 3)
    lam1, lam2 = 1.7, -0.3
    moved = transform_solution(sol, lam1, lam2, unitary)
    new_op = transformed_observable(problem.operator, lam1, lam2, unitary,
                                    Statistics.BOSON, psi.space)
    new_problem = SevalueProblem(new_op, Statistics.BOSON, Partition((1, 1)),
                                 psi.space)
    _, overlap = verify_second_form(moved, new_problem)
    assert overlap < 1e-9
    # re-solving from the transformed point stays put
    resolved = sweep_solve(new_problem, list(moved.party_vectors))
    assert abs(resolved.value - moved.value) < 1e-8


def test_matched_inits_give_unitarily_invariant_values(rng):
    psi = _random_sector_state(rng, 4, Statistics.FERMION)
    problem = _rank_one_problem(psi, Statistics.FERMION)
    unitary = random_unitary(rng, 4)
    rotated_op = transformed_observable(problem.operator, 1.0, 0.0, unitary,
                                        Statistics.FERMION, psi.space)
    rotated = SevalueProblem(rotated_op, Statistics.FERMION, Partition((1, 1)),
                             psi.space)
    for _ in range(4):
        init = [crandn(rng, 4), crandn(rng, 4)]
        sol = sweep_solve(problem, init)
        mirrored = sweep_solve(rotated,
                               [unitary.conj().T @ b for b in init])
        assert abs(sol.value - mirrored.value) < 1e-8


def test_transform_rejects_zero_scale(rng):
    psi = _random_sector_state(rng, 3, Statistics.BOSON)
    sol = sweep_solve(_rank_one_problem(psi, Statistics.BOSON),
                      [crandn(rng, 3), crandn(rng, 3)])
    with pytest.raises(ValueError):
        transform_solution(sol, 0.0, 1.0, np.eye(3))


def test_second_form_on_converged_solutions(rng):
    for stats in (Statistics.BOSON, Statistics.FERMION):
        psi = _random_sector_state(rng, 4, stats)
        problem = _rank_one_problem(psi, stats)
        sol = sweep_solve(problem, [crandn(rng, 4), crandn(rng, 4)])
        chi, overlap = verify_second_form(sol, problem)
        assert overlap <= 1e-8
        stays = project(stats, chi)
        assert np.linalg.norm(stays.amplitudes - chi.amplitudes) < 1e-10


def test_second_form_analytic_fermion_chi():
    # the perturbation of the n-th closed-form solution collects the
    # other Slater blocks with weights kappa_n * kappa_m
    d = 6
    space = SpaceConfig(d, 2)
    kappas = np.array([0.7, 0.5, 0.1])
    kappas = kappas / np.sqrt(2 * np.sum(kappas ** 2))
    amps = np.zeros(d * d, dtype=complex)
    for idx, k in enumerate(kappas):
        a, b = 2 * idx, 2 * idx + 1
        amps[a * d + b] += k
        amps[b * d + a] -= k
    f = StateVector(space, amps)
    problem = _rank_one_problem(f, Statistics.FERMION)
    solutions = analytic_rank_one(f, Statistics.FERMION)
    top = solutions[0]
    chi, overlap = verify_second_form(top, problem)
    assert overlap < 1e-12
    expected = np.zeros(d * d, dtype=complex)
    for m, k in enumerate(kappas):
        if m == 0:
            continue
        a, b = 2 * m, 2 * m + 1
        expected[a * d + b] += kappas[0] * k
        expected[b * d + a] -= kappas[0] * k
    assert np.linalg.norm(chi.amplitudes - expected) < 1e-10


def test_second_form_detects_broken_eigenrelation(rng):
    psi = _random_sector_state(rng, 3, Statistics.BOSON)
    problem = _rank_one_problem(psi, Statistics.BOSON)
    sol = sweep_solve(problem, [crandn(rng, 3), crandn(rng, 3)])
    broken = dataclasses.replace(sol, value=sol.value + 0.1)
    _, overlap = verify_second_form(broken, problem)
    assert overlap > 1e-3
