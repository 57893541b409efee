"""The cancellation constraint in three regimes.

After the global and local Grover phases the final reflection must zero every amplitude in the
unmarked blocks.  This is written out exactly for finite ``b``, in tangent
form for ``b -> infinity`` and in linearized form for ``K -> infinity``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NoRootError, ProblemError, RegimeError
from .problem import Problem, TargetDistribution, angles

REGIMES = ("finite-b", "large-b", "large-K")


@dataclass(frozen=True)
class CancellationResidual:
    value: float
    regime: str


def _arrays(taus):
    taus = np.asarray([float(x) for x in taus])
    return taus, np.sqrt(taus)


def residual_finite_b(problem: Problem, j1: float, j2: float) -> float:
    """LHS - RHS of the finite-b cancellation equation.

    Equals ``N/2 * (a_nt - 2*mean)``, so the u-coordinate after the final
    reflection is ``2*sqrt(b(K-t))/N`` times this value.
    """
    problem.require_finite_b()
    ang = angles(problem)
    N, K, t, z, b = problem.N, problem.K, problem.t, problem.z, problem.b
    phi = (2.0 * j1 + 1.0) * ang.theta
    sp, cp = math.sin(phi), math.cos(phi)
    lhs = N / math.sqrt(N - z) * (t / K - 0.5) * cp
    rhs = 0.0
    for tau, th in zip(problem.taus, ang.thetas):
        c2, s2 = math.cos(2 * j2 * th), math.sin(2 * j2 * th)
        cross = math.sqrt(tau * (b - tau))
        rhs += (tau / math.sqrt(z) * c2 * sp
                + cross / math.sqrt(N - z) * s2 * cp
                - cross / math.sqrt(z) * s2 * sp
                + (b - tau) / math.sqrt(N - z) * c2 * cp)
    return lhs - rhs


def solve_j1_finite_b(problem: Problem, j2: float, xtol: float = 1e-15) -> float:
    """Smallest j1 > 0 satisfying the finite-b cancellation equation.

    In ``phi = (2 j1 + 1) theta`` the residual is a single sinusoid, so the
    half-open window ``(theta, theta + pi]`` holds exactly one root.
    """
    if j2 < 0:
        raise ProblemError("j2 must be nonnegative")
    theta = angles(problem).theta

    def f(phi):
        return residual_finite_b(problem, (phi / theta - 1.0) / 2.0, j2)

    # scan so that a root sitting exactly on the window edge is still bracketed
    grid = np.linspace(theta, theta + math.pi, 65)
    vals = [f(x) for x in grid]
    for lo, hi, flo, fhi in zip(grid, grid[1:], vals, vals[1:]):
        if flo == 0.0 and lo > theta:
            return (lo / theta - 1.0) / 2.0
        if flo * fhi < 0.0 or (fhi == 0.0 and hi > theta):
            phi = hi if fhi == 0.0 else brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
            return (phi / theta - 1.0) / 2.0
    raise NoRootError("cancellation residual does not change sign in (theta, theta+pi]",
                      brackets=[(theta, theta + math.pi)])


def denominator_large_b(problem: Problem, alpha: float) -> float:
    """K - 4 sum sin^2(alpha sqrt(tau_i)); positive whenever t < K/4."""
    _, st = _arrays(problem.taus)
    return problem.K - 4.0 * float(np.sum(np.sin(alpha * st) ** 2))


def eta_large_b(problem: Problem, alpha: float, strict: bool = True) -> float:
    """eta solving the b -> infinity cancellation equation for a given alpha.

    ``strict`` enforces t < K/4 and the principal arctan branch.  With
    ``strict=False`` (analysis use only) the angle is taken in (0, pi) via
    atan2, which agrees with the principal branch while the denominator is
    positive.
    """
    K, z = problem.K, float(problem.z)
    if strict and 4 * problem.t >= K:
        raise RegimeError(f"large-b cancellation needs t < K/4 (t={problem.t}, K={K})")
    taus, st = _arrays(problem.taus)
    num = 2.0 * math.sqrt(K) * float(np.sum(st * np.sin(2.0 * alpha * st)))
    den = math.sqrt(z) * denominator_large_b(problem, alpha)
    angle = math.atan(num / den) if strict else math.atan2(num, den)
    return 0.5 * math.sqrt(K / z) * angle


def residual_large_b(problem: Problem, eta: float, alpha: float) -> float:
    """sin/cos form (no division): zero iff (eta, alpha) satisfy the large-b equation."""
    K, z, t = problem.K, float(problem.z), problem.t
    taus, st = _arrays(problem.taus)
    x = 2.0 * eta * math.sqrt(z / K)
    lhs = (t / math.sqrt(K) - math.sqrt(K) / 2.0) * math.sin(x)
    rhs = float(np.sum(np.cos(2 * alpha * st) * math.sin(x) / math.sqrt(K)
                       - np.sqrt(taus / z) * np.sin(2 * alpha * st) * math.cos(x)))
    return lhs - rhs


def eta_large_K(distribution: TargetDistribution, alpha: float) -> float:
    """eta = (1/z) sum sqrt(tau_i) sin(2 alpha sqrt(tau_i)) (K -> infinity)."""
    if alpha <= 0:
        raise ProblemError("alpha must be positive")
    _, st = _arrays(distribution.taus)
    return float(np.sum(st * np.sin(2.0 * alpha * st))) / float(distribution.z)


def cancellation_residual(problem: Problem, regime: str, *, j1=None, j2=None,
                          eta=None, alpha=None) -> CancellationResidual:
    if regime == "finite-b":
        return CancellationResidual(residual_finite_b(problem, j1, j2), regime)
    if regime == "large-b":
        return CancellationResidual(residual_large_b(problem, eta, alpha), regime)
    if regime == "large-K":
        return CancellationResidual(eta - eta_large_K(problem.distribution, alpha), regime)
    raise ProblemError(f"unknown regime {regime!r}; expected one of {REGIMES}")
