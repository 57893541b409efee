"""Second-order perturbation of the optimum around an even distribution.

Writing ``tau_i = tau_bar (1 + eps_i)`` with ``sum eps_i = 0``, the optimum
moves by ``delta_alpha`` and ``delta_eta``, both proportional to the variance
``delta^2 = (tau_bar^2 / t) sum eps_i^2``.  The query penalty
``f(even) - f(uneven) = delta_alpha - delta_eta`` is bounded below by
``g(beta) delta^2 / tau_bar^(5/2)`` for ``beta = t/K < beta_c``, and tends to
``theorem1_constant() * delta^2 / tau_bar^(5/2)`` as ``K -> infinity``.

Closed forms are checked here against the optimizer, which is the
finite-difference oracle.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import bisect

from .errors import ProblemError, RegimeError
from .optimizer import even_optimum, large_K_optimum, solve_uneven_optimum
from .problem import Problem, analysis_problem

BETA_MAX = 0.75
CSV_COLUMNS = ("K", "t", "tau_bar", "beta", "eps_scale", "variance", "delta_alpha",
               "delta_eta", "predicted", "measured", "ratio", "bound", "inequality")


def theorem1_constant() -> float:
    """(sqrt(3) pi^2 - 3 pi + 9 sqrt(3)) / 144, about 0.1615."""
    r3 = math.sqrt(3.0)
    return (r3 * math.pi**2 - 3.0 * math.pi + 9.0 * r3) / 144.0


def theorem1_prediction(tau_bar: float, variance: float) -> float:
    if tau_bar <= 0 or variance < 0:
        raise ProblemError("need tau_bar > 0 and variance >= 0")
    return theorem1_constant() * variance / tau_bar**2.5


def g_of_beta(beta: float) -> float:
    if not 0.0 <= beta < BETA_MAX:
        raise ProblemError(f"g(beta) is defined on [0, 0.75), got {beta}")
    b = beta
    pi = math.pi
    num = math.sqrt(3 - 4 * b) * (1 - 2 * b) * (pi**2 * (1 - b) + 9) + 3 * pi * (-8 * b * b + 7 * b - 1)
    return num / (144.0 * (1 - b))


def g_polynomial() -> Polynomial:
    """Degree-5 polynomial obtained by squaring away the radical in g's numerator.

    Its roots contain every zero of g (plus spurious ones from squaring).
    """
    pi2 = math.pi**2
    lin = Polynomial([3.0, -4.0])
    radical_cofactor = Polynomial([1.0, -2.0]) * Polynomial([pi2 + 9.0, -pi2])
    rest = 3.0 * math.pi * Polynomial([-1.0, 7.0, -8.0])
    return lin * radical_cofactor**2 - rest**2


def beta_critical(xtol: float = 1e-12) -> float:
    """Root of g in (0, 0.75), by bisection."""
    lo, hi = 0.25, 0.74
    return bisect(g_of_beta, lo, hi, xtol=xtol)


def _shape(problem: Problem):
    beta = problem.t / problem.K
    if not 0 < beta < BETA_MAX:
        raise RegimeError(f"closed forms need beta = t/K < 0.75, got {beta}")
    tau_bar = float(problem.tau_bar)
    alpha0 = even_optimum(problem.evened()).alpha_star
    return beta, tau_bar, alpha0, float(problem.variance)


def _unit_delta_alpha(b, tb, a0):
    return -((1 - 2 * b) / (4 * math.sqrt(3 - 4 * b)) * a0**2 / tb**1.5
             + (3 + b) / (8 * (1 - b)) * a0 / tb**2)


def delta_alpha(problem: Problem) -> float:
    """First-order shift of the optimal alpha in delta^2."""
    b, tb, a0, var = _shape(problem)
    return _unit_delta_alpha(b, tb, a0) * var


def delta_eta(problem: Problem) -> float:
    """First-order shift of the optimal eta in delta^2."""
    b, tb, a0, var = _shape(problem)
    r = math.sqrt(3 - 4 * b)
    return -((1 - b) * (1 - 2 * b) / r * a0**2 / tb**1.5
             + (4 * b**3 - 8 * b**2 + 3 * b + 1) / (4 * (1 - b) ** 2) * a0 / tb**2
             + (1 - 2 * b) * r / (16 * (1 - b)) / tb**2.5) * var


def coeff_P(problem: Problem) -> float:
    """Coefficient of delta^2 in sum sqrt(tau_i) sin(2 alpha_K sqrt(tau_i)).

    Simplified form; the constant term carries a minus sign (see
    :func:`coeff_P_expanded` for the unsimplified expression it reduces to).
    """
    b, tb, a0, _ = _shape(problem)
    t = problem.t
    r = math.sqrt(3 - 4 * b)
    return (-(1 - b) / r * t * a0**2 / math.sqrt(tb)
            - (1 - 2 * b) * (1 + b) / (4 * (1 - b) ** 2) * t * a0 / tb
            - r / (16 * (1 - b)) * t / tb**1.5)


def coeff_P_expanded(problem: Problem) -> float:
    """P before substituting the even-optimum trigonometric values."""
    b, tb, a0, _ = _shape(problem)
    t = problem.t
    c = 2 * a0 * math.sqrt(tb)
    da = _unit_delta_alpha(b, tb, a0)
    return (-0.5 * math.sin(c) * t * a0**2 / math.sqrt(tb)
            + 0.25 * math.cos(c) * t * a0 / tb
            - math.sin(c) * t / (8 * tb**1.5)
            + 2 * t * tb * math.cos(c) * da)


def coeff_Q(problem: Problem) -> float:
    """Coefficient of delta^2 in sum cos(2 alpha_K sqrt(tau_i))."""
    b, tb, a0, _ = _shape(problem)
    return math.sqrt(3 - 4 * b) / (2 * (1 - b) ** 2) * problem.t * a0 / tb**1.5


def delta_eta_from_PQ(problem: Problem) -> float:
    """delta_eta assembled from P and Q: ((1-2b) P/(t tau_bar) - b sqrt(3-4b) Q/(t sqrt(tau_bar))) delta^2."""
    b, tb, _, var = _shape(problem)
    t = problem.t
    return ((1 - 2 * b) * coeff_P(problem) / (t * tb)
            - b * math.sqrt(3 - 4 * b) * coeff_Q(problem) / (t * math.sqrt(tb))) * var


def perturbed_problem(K: int, tau_bar: float, epsilons: Sequence[float], b: int | None = None) -> Problem:
    """Analysis-mode instance with tau_i = tau_bar (1 + eps_i); sum(eps) must be 0."""
    if abs(sum(epsilons)) > 1e-12:
        raise ProblemError("perturbations must sum to zero")
    return analysis_problem(K, [tau_bar * (1.0 + e) for e in epsilons], b=b)


def one_heavy_block(t: int, eps: float) -> list[float]:
    """eps * (-1/(t-1), ..., -1/(t-1), 1): one block carries the surplus."""
    if t < 2:
        raise ProblemError("need t >= 2 to perturb")
    return [-eps / (t - 1)] * (t - 1) + [eps]


def symmetric_pair(t: int, eps: float) -> list[float]:
    """(+eps, -eps, 0, ..., 0)."""
    if t < 2:
        raise ProblemError("need t >= 2 to perturb")
    return [eps, -eps] + [0.0] * (t - 2)


@dataclass(frozen=True)
class PerturbationReport:
    K: int
    t: int
    tau_bar: float
    beta: float
    eps_scale: float
    variance: float
    delta_alpha: float
    delta_eta: float
    predicted: float
    measured: float
    ratio: float
    bound: float
    inequality: str  # "holds", "fails", "unchecked" or "degenerate"

    @property
    def degenerate(self) -> bool:
        return self.inequality == "degenerate"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r.csv_row()])
    return buf.getvalue()


def measured_penalty(problem: Problem, strict: bool | None = None) -> float:
    """f(eta0, alpha0) - f(eta_K, alpha_K) from the large-b optimizer."""
    if strict is None:
        strict = 4 * problem.t < problem.K
    f0 = even_optimum(problem.evened()).f_star
    return f0 - solve_uneven_optimum(problem, strict=strict).f_star


def measured_penalty_large_K(problem: Problem) -> float:
    """Penalty in the K -> infinity model (linearized cancellation)."""
    return large_K_optimum(problem.evened()).f_star - large_K_optimum(problem).f_star


def theorem1_check(problem: Problem) -> PerturbationReport:
    """Large-K penalty against theorem1_prediction."""
    tb, var = float(problem.tau_bar), float(problem.variance)
    beta = problem.t / problem.K
    pred = theorem1_prediction(tb, var)
    if var == 0:
        return PerturbationReport(problem.K, problem.t, tb, beta, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                                  math.nan, 0.0, "degenerate")
    meas = measured_penalty_large_K(problem)
    return PerturbationReport(problem.K, problem.t, tb, beta, problem.distribution.epsilon_scale,
                              var, math.nan, math.nan, pred, meas, meas / pred, pred,
                              "unchecked")


def theorem2_check(problem: Problem, assert_inequality: bool = True) -> PerturbationReport:
    """Compare the measured penalty with the second-order prediction and the g bound.

    The inequality is asserted only when beta < beta_c and t < K/4; for
    1/4 <= beta < beta_c the measurement is reported unchecked.  Requesting
    the assertion with beta >= beta_c is a :class:`RegimeError`.
    """
    beta = problem.t / problem.K
    tb, var = float(problem.tau_bar), float(problem.variance)
    if assert_inequality and beta >= beta_critical():
        raise RegimeError(f"inequality only claimed for beta < beta_c, got {beta}")
    if var == 0:
        return PerturbationReport(problem.K, problem.t, tb, beta, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                                  math.nan, 0.0, "degenerate")
    da, de = delta_alpha(problem), delta_eta(problem)
    predicted = da - de
    bound = g_of_beta(beta) * var / tb**2.5
    in_regime = 4 * problem.t < problem.K
    measured = measured_penalty(problem, strict=in_regime)
    if assert_inequality and in_regime:
        status = "holds" if (measured > bound and measured > 0) else "fails"
    else:
        status = "unchecked"
    return PerturbationReport(problem.K, problem.t, tb, beta, problem.distribution.epsilon_scale,
                              var, da, de, predicted, measured, measured / predicted, bound, status)
