"""Query minimization in the large-block limit.

Total queries are ``j1 + j2 = (pi/4) sqrt(N/z) - (eta - alpha) sqrt(b)``,
so the optimizer maximizes ``f = eta - alpha`` along the large-b
cancellation curve ``eta(alpha)``.  Eliminating the multiplier from the
Lagrange conditions leaves a single equation in alpha (see
:func:`optimality_residual`), whose smallest positive root is the optimum.
The grid oracle maximizes ``f`` directly and shares no code with the root
solver beyond ``eta_large_b``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .cancellation import eta_large_b, eta_large_K, solve_j1_finite_b
from .errors import NoRootError, ProblemError, RegimeError
from .problem import Problem
from .reduced_sim import Schedule

METHODS = ("closed-form-even", "condition-root", "grid-oracle", "large-K-root")
SCAN_POINTS = 2048


@dataclass(frozen=True)
class OptimizationResult:
    alpha_star: float
    eta_star: float
    f_star: float
    queries_leading: float | None
    method: str
    problem: dict = field(default_factory=dict)
    root_brackets: tuple = ()

    @property
    def multiple_roots(self) -> bool:
        return len(self.root_brackets) > 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["root_brackets"] = [list(b) for b in self.root_brackets]
        d["multiple_roots"] = self.multiple_roots
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _taus(problem):
    taus = np.asarray([float(x) for x in problem.taus])
    return taus, np.sqrt(taus)


def _require_regime(problem: Problem, strict: bool):
    if strict and 4 * problem.t >= problem.K:
        raise RegimeError(f"optimizer needs t < K/4 (t={problem.t}, K={problem.K})")


def alpha_bracket(problem: Problem) -> tuple[float, float]:
    """(0, pi / (2 sqrt(tau_max))): the search window 2 alpha sqrt(tau_max) in (0, pi)."""
    return 0.0, math.pi / (2.0 * math.sqrt(float(max(problem.taus))))


def first_factor(problem: Problem, alpha: float) -> float:
    """2 sum cos(2 alpha sqrt(tau_i)) + K - 2t; exceeds K - 4t > 0 in regime."""
    _, st = _taus(problem)
    return 2.0 * float(np.sum(np.cos(2.0 * alpha * st))) + problem.K - 2 * problem.t


def optimality_residual(problem: Problem, alpha: float) -> float:
    """2 sum (K tau_i - z) cos(2 alpha sqrt(tau_i)) - z (K - 2t)."""
    taus, st = _taus(problem)
    z = float(taus.sum())
    K, t = problem.K, problem.t
    return 2.0 * float(np.sum((K * taus - z) * np.cos(2.0 * alpha * st))) - z * (K - 2 * t)


def total_queries(problem: Problem, eta: float, alpha: float) -> float:
    if eta < 0 or alpha < 0:
        raise ProblemError("eta and alpha must be nonnegative")
    if problem.b is None:
        raise ProblemError("query count needs a finite b")
    return math.pi / 4 * math.sqrt(problem.N / problem.z) - (eta - alpha) * math.sqrt(problem.b)


def _queries(problem, f):
    if problem.b is None:
        return None
    return math.pi / 4 * math.sqrt(problem.N / problem.z) - f * math.sqrt(problem.b)


def _sign_change_brackets(func, lo, hi, points):
    grid = np.linspace(lo, hi, points + 1)[1:]
    vals = np.array([func(a) for a in grid])
    out = []
    for k in range(len(grid) - 1):
        if vals[k] > 0 >= vals[k + 1] or vals[k] < 0 <= vals[k + 1]:
            out.append((float(grid[k]), float(grid[k + 1])))
    return out


def _first_descending_root(func, lo, hi, points):
    brackets = _sign_change_brackets(func, lo, hi, points)
    descending = [br for br in brackets if func(br[0]) > 0]
    if not descending:
        raise NoRootError(f"no sign change of the optimality condition in alpha in ({lo}, {hi})",
                          brackets=[(lo, hi)])
    a, c = descending[0]
    root = c if func(c) == 0 else brentq(func, a, c, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return root, tuple(brackets)


def even_optimum(problem: Problem) -> OptimizationResult:
    """Closed forms for tau_i = tau_bar:

    cos(2 alpha0 sqrt(tau_bar)) = (K - 2t) / (2 (K - t)),
    tan(2 eta0 sqrt(z/K)) = sqrt(3tK - 4t^2) / (K - 2t).
    """
    if not problem.distribution.even:
        raise ProblemError("even_optimum needs an even distribution (delta^2 = 0)")
    K, t = problem.K, problem.t
    if 4 * t >= 3 * K:
        raise RegimeError("closed form needs t < 3K/4")
    tau_bar = float(problem.tau_bar)
    z = t * tau_bar
    alpha0 = math.acos((K - 2 * t) / (2.0 * (K - t))) / (2.0 * math.sqrt(tau_bar))
    # atan2 keeps the angle in (0, pi); identical to atan for t < K/2
    eta0 = math.atan2(math.sqrt(3.0 * t * K - 4.0 * t * t), K - 2 * t) / (2.0 * math.sqrt(z / K))
    f = eta0 - alpha0
    return OptimizationResult(alpha0, eta0, f, _queries(problem, f), "closed-form-even", problem.to_dict())


def solve_uneven_optimum(problem: Problem, strict: bool = True,
                         scan_points: int = SCAN_POINTS) -> OptimizationResult:
    """alpha_K = smallest root of the optimality condition, eta_K from cancellation.

    ``root_brackets`` lists every sign-change interval found in the window so
    callers can detect multiple roots.
    """
    _require_regime(problem, strict)
    lo, hi = alpha_bracket(problem)
    func = lambda a: optimality_residual(problem, a)
    alpha, brackets = _first_descending_root(func, lo, hi, scan_points)
    ff = first_factor(problem, alpha)
    if strict and ff <= 0:
        raise RegimeError(f"first factor of the optimality equation is {ff} <= 0")
    eta = eta_large_b(problem, alpha, strict=strict)
    f = eta - alpha
    return OptimizationResult(alpha, eta, f, _queries(problem, f), "condition-root",
                              problem.to_dict(), brackets)


def grid_oracle(problem: Problem, grid_points: int = 4000, refine: bool = True,
                strict: bool = True) -> OptimizationResult:
    """Maximize f(alpha) = eta_large_b(alpha) - alpha by scanning, then golden section."""
    if grid_points < 1000:
        raise ProblemError("grid_points must be >= 1000")
    _require_regime(problem, strict)
    lo, hi = alpha_bracket(problem)
    grid = np.linspace(lo, hi, grid_points + 1)[1:]
    f = lambda a: eta_large_b(problem, a, strict=strict) - a
    vals = np.array([f(a) for a in grid])
    k = int(np.argmax(vals))
    alpha = float(grid[k])
    if refine and 0 < k < len(grid) - 1:
        res = minimize_scalar(lambda a: -f(a), bracket=(grid[k - 1], grid[k], grid[k + 1]),
                              method="golden", tol=1e-12)
        if -res.fun >= vals[k]:
            alpha = float(res.x)
    eta = eta_large_b(problem, alpha, strict=strict)
    fs = eta - alpha
    return OptimizationResult(alpha, eta, fs, _queries(problem, fs), "grid-oracle", problem.to_dict())


def large_K_optimality_residual(problem: Problem, alpha: float) -> float:
    """K -> infinity optimality condition: 2 sum tau_i cos(2 alpha sqrt(tau_i)) - z."""
    taus, st = _taus(problem)
    return 2.0 * float(np.sum(taus * np.cos(2.0 * alpha * st))) - float(taus.sum())


def large_K_optimum(problem: Problem, scan_points: int = SCAN_POINTS) -> OptimizationResult:
    """Maximize f = eta_large_K(alpha) - alpha; K only labels the instance."""
    lo, hi = alpha_bracket(problem)
    alpha, brackets = _first_descending_root(lambda a: large_K_optimality_residual(problem, a),
                                             lo, hi, scan_points)
    eta = eta_large_K(problem.distribution, alpha)
    f = eta - alpha
    return OptimizationResult(alpha, eta, f, None, "large-K-root", problem.to_dict(), brackets)


def optimal_schedule(problem: Problem, integer: bool = False) -> Schedule:
    """Finite-b schedule at the large-b optimum: j2 = alpha_K sqrt(b), j1 from exact cancellation.

    With ``integer=True`` both counts are rounded (exact cancellation is then lost).
    """
    problem.require_finite_b()
    res = solve_uneven_optimum(problem)
    j2 = res.alpha_star * math.sqrt(problem.b)
    if integer:
        j2 = float(round(j2))
        return Schedule(float(round(solve_j1_finite_b(problem, j2))), j2, "operator")
    return Schedule(solve_j1_finite_b(problem, j2), j2)
