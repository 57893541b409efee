import numpy as np
import pytest

from partial_search import ResourceError, SymmetryError, make_problem
from partial_search import full_sim as fs
from partial_search import reduced_sim as rs
from partial_search.optimizer import optimal_schedule


@pytest.fixture
def problem():
    return make_problem(16, 64, [1, 3])


def test_oracle_reflect(problem):
    mask = fs.target_mask(problem)
    s = fs.uniform_state(problem.N)
    r = fs.oracle_reflect(s, mask)
    np.testing.assert_array_equal(r[mask], -s[mask])
    np.testing.assert_array_equal(r[~mask], s[~mask])
    np.testing.assert_array_equal(fs.oracle_reflect(r, mask), s)


def test_global_diffusion_basic(problem):
    s = fs.uniform_state(problem.N)
    np.testing.assert_allclose(fs.global_diffusion(s), s, atol=1e-15)
    v = np.random.default_rng(1).normal(size=problem.N)
    assert fs.global_diffusion(v).mean() == pytest.approx(v.mean(), abs=1e-14)


def test_global_diffusion_matches_dense():
    v = np.random.default_rng(2).normal(size=64)
    np.testing.assert_allclose(fs.global_diffusion(v), fs.dense_global_diffusion(64) @ v, atol=1e-13)
    with pytest.raises(ResourceError):
        fs.dense_global_diffusion(128)


def test_local_diffusion_basic():
    v = np.random.default_rng(3).normal(size=32)
    np.testing.assert_allclose(fs.local_diffusion(v, 32), fs.global_diffusion(v), atol=1e-14)
    block_uniform = np.repeat([0.1, -0.3, 0.2, 0.5], 8)
    np.testing.assert_allclose(fs.local_diffusion(block_uniform, 8), block_uniform, atol=1e-15)


def test_oracle_commutes_with_local_diffusion_on_unmarked_blocks(problem):
    mask = fs.target_mask(problem)
    v = np.random.default_rng(4).normal(size=problem.N)
    v[: 2 * problem.b] = 0.0  # support on unmarked blocks only
    a = fs.local_diffusion(fs.oracle_reflect(v, mask), problem.b)
    b = fs.oracle_reflect(fs.local_diffusion(v, problem.b), mask)
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_local_diffusion_matches_g2(problem):
    mask = fs.target_mask(problem)
    s = fs.uniform_state(problem.N)
    for _ in range(3):
        s = fs.global_diffusion(fs.oracle_reflect(s, mask))
    before = fs.project_to_reduced(problem, s, mask)
    after = fs.project_to_reduced(problem, fs.local_diffusion(fs.oracle_reflect(s, mask), problem.b), mask)
    np.testing.assert_allclose(after, rs.g2_matrix(problem, 1) @ before, atol=1e-12)


def test_projection_of_uniform_is_initial_state(problem):
    proj = fs.project_to_reduced(problem, fs.uniform_state(problem.N))
    np.testing.assert_allclose(proj, rs.initial_state(problem), atol=1e-15)


def test_zero_schedule(problem):
    s = fs.run_partial_search(problem, 0, 0)
    assert fs.success_probability(problem, s) == pytest.approx(problem.t / problem.K, abs=1e-14)


@pytest.mark.parametrize("K, b, taus", [(16, 64, [1, 3]), (9, 7, [6, 2]), (33, 128, [5, 1, 127, 64, 2, 9, 11])])
def test_equivalence_with_reduced(K, b, taus):
    p = make_problem(K, b, taus)
    mask = fs.target_mask(p)
    for j1 in range(11):
        for j2 in range(11):
            full = fs.run_partial_search(p, j1, j2, mask=mask, check_symmetry=(j1 + j2) % 7 == 0)
            proj = fs.project_to_reduced(p, full, mask)
            np.testing.assert_allclose(proj, rs.run(p, j1, j2, "operator"), atol=1e-10, rtol=0)
            assert float(full @ full) == pytest.approx(1.0, abs=1e-12)
            assert float(proj @ proj) == pytest.approx(1.0, abs=1e-12)


def test_permuted_placement_gives_same_reduced_state():
    p = make_problem(12, 32, [3, 7])
    rng = np.random.default_rng(7)
    for _ in range(4):
        mask = fs.target_mask(p, rng)
        full = fs.run_partial_search(p, 4, 3, mask=mask, check_symmetry=True)
        np.testing.assert_allclose(fs.project_to_reduced(p, full, mask),
                                   rs.run(p, 4, 3, "operator"), atol=1e-12)


def test_rounded_optimal_schedule_succeeds(problem):
    sched = optimal_schedule(problem, integer=True)
    full = fs.run_partial_search(problem, int(sched.j1), int(sched.j2))
    prob = fs.success_probability(problem, full)
    assert prob > 0.9
    assert prob == pytest.approx(rs.success_probability(problem, sched.run(problem)), abs=1e-12)


def test_cap(problem):
    with pytest.raises(ResourceError):
        fs.run_partial_search(problem, 1, 1, cap=512)


def test_symmetry_violation_detected(problem):
    s = fs.uniform_state(problem.N)
    s[1] += 1e-3  # a non-target of block 0
    with pytest.raises(SymmetryError):
        fs.project_to_reduced(problem, s)
