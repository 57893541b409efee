"""Acceptance suite: one test (or group) per primary criterion, at its stated tolerance.

A per-criterion PASS/FAIL summary is printed at the end of the pytest run.
"""

import math

import numpy as np
import pytest

from partial_search import analysis_problem, make_problem
from partial_search import perturbation as pt
from partial_search import reduced_sim
from partial_search.cancellation import eta_large_b, solve_j1_finite_b
from partial_search.cli import compare_engines, instance_for_beta, random_instances
from partial_search.optimizer import (even_optimum, grid_oracle, optimality_residual,
                                      solve_uneven_optimum)

EVEN_GRID = [(K, t, tau) for K in (8, 16, 50, 257, 4096) for t in (1, 2, 3, 7, 30)
             for tau in (1, 2, 9, 64) if 4 * t < K]


def uneven_instances(seed, count):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        K = int(rng.integers(8, 1025))
        t = int(rng.integers(2, min(12, (K - 1) // 4) + 1))
        taus = [int(x) for x in rng.integers(1, 64, size=t)]
        if len(set(taus)) > 1:
            out.append(make_problem(K, 4096, taus))
    return out


UNEVEN = uneven_instances(2024, 50)


@pytest.mark.criterion(1, "reduced/full equivalence within 1e-10")
def test_c1_reduced_full_equivalence():
    instances = random_instances(seed=7, count=50, max_N=2**16, K_range=(8, 64))
    assert all(p.N <= 2**16 and 8 <= p.K <= 64 and 4 * p.t < p.K for p in instances)
    worst = max(compare_engines(p, max_j=8)[0] for p in instances)
    print(f"max per-coordinate discrepancy {worst:.2e}")
    assert worst < 1e-10


@pytest.mark.criterion(2, "cancellation gives residual < 1e-9 and success > 1 - 1e-9")
def test_c2_cancellation_success():
    rng = np.random.default_rng(3)
    cases = random_instances(seed=11, count=20, max_N=2**20, K_range=(8, 256))
    worst_u, worst_p = 0.0, 1.0
    for p in cases:
        alpha = solve_uneven_optimum(p).alpha_star
        for j2 in (alpha * math.sqrt(p.b), rng.uniform(0.2, 1.0) * alpha * math.sqrt(p.b)):
            j1 = solve_j1_finite_b(p, j2)
            final = reduced_sim.run(p, j1, j2, mode="analytic")
            worst_u = max(worst_u, abs(final[-1]))
            worst_p = min(worst_p, reduced_sim.success_probability(p, final))
    print(f"worst residual {worst_u:.2e}, worst success {worst_p!r}")
    assert worst_u < 1e-9
    assert worst_p > 1 - 1e-9


@pytest.mark.criterion(3, "even closed forms satisfy both equations; alpha0 sqrt(tau) -> pi/6")
@pytest.mark.parametrize("K, t, tau", EVEN_GRID)
def test_c3_even_closed_forms(K, t, tau):
    p = make_problem(K, 4096, [tau] * t)
    res = even_optimum(p)
    assert abs(optimality_residual(p, res.alpha_star)) < 1e-9
    assert abs(res.eta_star - eta_large_b(p, res.alpha_star)) < 1e-10


@pytest.mark.criterion(3, "even closed forms satisfy both equations; alpha0 sqrt(tau) -> pi/6")
@pytest.mark.parametrize("tau", [1.0, 4.0, 100.0])
def test_c3_large_K_limit(tau):
    res = even_optimum(analysis_problem(10**8, [tau] * 3))
    assert abs(res.alpha_star * math.sqrt(tau) - math.pi / 6) < 1e-6


@pytest.mark.criterion(4, "root solve agrees with grid oracle on f_star within 1e-6")
def test_c4_grid_oracle():
    gaps = [abs(solve_uneven_optimum(p).f_star - grid_oracle(p).f_star) for p in UNEVEN]
    print(f"max f_star gap {max(gaps):.2e}")
    assert max(gaps) < 1e-6


@pytest.mark.criterion(5, "large-K penalty constant and second-order convergence")
def test_c5_constant():
    assert abs(pt.theorem1_constant() - 0.1615) <= 5e-5


@pytest.mark.criterion(5, "large-K penalty constant and second-order convergence")
@pytest.mark.parametrize("tau_bar", [1.0, 4.0, 100.0])
def test_c5_convergence(tau_bar):
    # one heavy block against three light ones, large-K model
    dev = []
    for eps in (0.1, 0.01):
        r = pt.theorem1_check(pt.perturbed_problem(10**8, tau_bar, pt.one_heavy_block(4, eps)))
        dev.append(abs(r.ratio - 1.0))
    factor = dev[0] / dev[1]
    print(f"tau_bar={tau_bar}: deviation shrink factor {factor:.2f}")
    assert 5 <= factor <= 20


@pytest.mark.criterion(6, "beta_c, g(0), and the finite-K penalty bound")
def test_c6_beta_c_and_g0():
    assert abs(pt.beta_critical() - 0.6281) <= 5e-4
    c = pt.theorem1_constant()
    assert abs(pt.g_of_beta(0.0) - c) <= 4 * np.finfo(float).eps * c


@pytest.mark.criterion(6, "beta_c, g(0), and the finite-K penalty bound")
@pytest.mark.parametrize("beta", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("tau_bar", [1.0, 4.0, 100.0])
@pytest.mark.parametrize("shape", [pt.symmetric_pair, pt.one_heavy_block])
def test_c6_inequality(beta, tau_bar, shape):
    t, K = instance_for_beta(beta)
    assert 4 * t < K
    r = pt.theorem2_check(pt.perturbed_problem(K, tau_bar, shape(t, 0.05)))
    assert r.inequality == "holds"
    assert r.measured > r.bound


@pytest.mark.criterion(7, "closed-form shifts match finite differences; P/Q match direct sums")
@pytest.mark.parametrize("K, t, tau_bar", [(40, 2, 1.0), (20, 2, 4.0), (1000, 3, 2.0), (50, 5, 9.0)])
@pytest.mark.parametrize("eps", [0.05, 0.01])
def test_c7_finite_differences(K, t, tau_bar, eps):
    p = pt.perturbed_problem(K, tau_bar, pt.symmetric_pair(t, eps))
    base = even_optimum(p.evened())
    res = solve_uneven_optimum(p)
    tol = max(10 * eps, 1e-3)
    da, de = pt.delta_alpha(p), pt.delta_eta(p)
    assert abs((res.alpha_star - base.alpha_star) - da) <= tol * abs(da)
    assert abs((res.eta_star - base.eta_star) - de) <= tol * abs(de)


@pytest.mark.criterion(7, "closed-form shifts match finite differences; P/Q match direct sums")
@pytest.mark.parametrize("K, t, tau_bar", [(40, 2, 1.0), (20, 2, 4.0), (1000, 3, 2.0), (50, 5, 9.0)])
def test_c7_P_Q(K, t, tau_bar):
    p = pt.perturbed_problem(K, tau_bar, pt.symmetric_pair(t, 1e-3))
    var, tb = float(p.variance), float(p.tau_bar)
    st = np.sqrt(np.array(p.taus, dtype=float))
    a0 = even_optimum(p.evened()).alpha_star
    aK = solve_uneven_optimum(p).alpha_star
    P = (np.sum(st * np.sin(2 * aK * st)) - t * math.sqrt(tb) * math.sin(2 * a0 * math.sqrt(tb))) / var
    Q = (np.sum(np.cos(2 * aK * st)) - t * math.cos(2 * a0 * math.sqrt(tb))) / var
    assert abs(P - pt.coeff_P(p)) <= 1e-2 * abs(pt.coeff_P(p))
    assert abs(Q - pt.coeff_Q(p)) <= 1e-2 * abs(pt.coeff_Q(p))


@pytest.mark.criterion(8, "f_star > 0 on every valid instance")
def test_c8_partial_search_advantage():
    instances = UNEVEN + random_instances(seed=5, count=100, max_N=2**24, K_range=(5, 2000))
    instances += [make_problem(K, 4096, [tau] * t) for K, t, tau in EVEN_GRID]
    for p in instances:
        res = solve_uneven_optimum(p)
        assert res.f_star > 0, p.to_dict()
        assert res.queries_leading < math.pi / 4 * math.sqrt(p.N / p.z)
