"""Search-problem instances: database geometry, target distribution, angles.

A problem is ``K`` blocks of ``b`` items each (``N = b*K``) and a list of
per-block target counts ``taus`` for the ``t`` marked blocks.  Derived
rational quantities (mean, relative deviations, variance, ``beta = t/K``)
are kept as :class:`fractions.Fraction` so that the deviations sum to zero
exactly.

Two regimes are supported:

``"algorithm"``
    Integer ``taus`` with ``1 <= tau_i <= b-1`` and ``t < K/4``.  Required by
    the simulators and the cancellation/optimization solvers.
``"analysis"``
    Real-valued ``taus`` are allowed, ``t`` may reach ``K`` and ``b`` may be
    ``None`` (the large-block limit).  Used by the perturbation checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Real
from typing import Sequence

from .errors import ProblemError, RegimeError

REGIMES = ("algorithm", "analysis")


@dataclass(frozen=True)
class DatabaseGeometry:
    K: int
    b: int | None
    N: int | None = field(init=False)

    def __post_init__(self):
        if isinstance(self.K, bool) or not isinstance(self.K, Integral):
            raise ProblemError(f"K must be an integer, got {self.K!r}")
        if self.K < 2:
            raise ProblemError(f"K must be >= 2, got {self.K}")
        if self.b is not None:
            if isinstance(self.b, bool) or not isinstance(self.b, Integral):
                raise ProblemError(f"b must be an integer, got {self.b!r}")
            if self.b < 2:
                raise ProblemError(f"b must be >= 2, got {self.b}")
        object.__setattr__(self, "N", None if self.b is None else int(self.b) * int(self.K))

    @property
    def finite(self) -> bool:
        return self.b is not None


@dataclass(frozen=True)
class TargetDistribution:
    taus: tuple

    def __post_init__(self):
        taus = tuple(self.taus)
        if not taus:
            raise ProblemError("taus must be nonempty")
        for tau in taus:
            if isinstance(tau, bool) or not isinstance(tau, Real) or not math.isfinite(tau):
                raise ProblemError(f"tau values must be finite numbers, got {tau!r}")
            if tau <= 0:
                raise ProblemError(f"tau values must be positive, got {tau!r}")
        object.__setattr__(self, "taus", taus)

    @property
    def t(self) -> int:
        return len(self.taus)

    @property
    def integral(self) -> bool:
        return all(isinstance(tau, Integral) for tau in self.taus)

    @property
    def z(self):
        """Total number of targets (int for integer taus, float otherwise)."""
        if self.integral:
            return sum(int(tau) for tau in self.taus)
        return float(sum(Fraction(tau) for tau in self.taus))

    @property
    def exact_taus(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(tau) for tau in self.taus)

    @property
    def tau_bar(self) -> Fraction:
        return sum(self.exact_taus) / self.t

    @property
    def epsilons(self) -> tuple[Fraction, ...]:
        tb = self.tau_bar
        return tuple(tau / tb - 1 for tau in self.exact_taus)

    @property
    def variance(self) -> Fraction:
        """delta^2 = (tau_bar^2 / t) * sum(eps_i^2)."""
        tb = self.tau_bar
        return tb * tb / self.t * sum(e * e for e in self.epsilons)

    @property
    def epsilon_scale(self) -> float:
        return float(max(abs(e) for e in self.epsilons))

    @property
    def even(self) -> bool:
        return len(set(self.exact_taus)) == 1


@dataclass(frozen=True)
class RotationAngles:
    theta: float
    thetas: tuple[float, ...]


@dataclass(frozen=True)
class Problem:
    """A validated (geometry, distribution) pair."""

    geometry: DatabaseGeometry
    distribution: TargetDistribution
    regime: str = "algorithm"

    def __iter__(self):
        # allows ``geometry, distribution = make_problem(...)``
        yield self.geometry
        yield self.distribution

    @property
    def K(self) -> int:
        return self.geometry.K

    @property
    def b(self):
        return self.geometry.b

    @property
    def N(self):
        return self.geometry.N

    @property
    def taus(self) -> tuple:
        return self.distribution.taus

    @property
    def t(self) -> int:
        return self.distribution.t

    @property
    def z(self):
        return self.distribution.z

    @property
    def tau_bar(self) -> Fraction:
        return self.distribution.tau_bar

    @property
    def variance(self) -> Fraction:
        return self.distribution.variance

    @property
    def beta(self) -> Fraction:
        return beta(self)

    @property
    def in_algorithm_regime(self) -> bool:
        return 4 * self.t < self.K

    def require_finite_b(self):
        if self.b is None:
            raise ProblemError("operation needs a finite block size b")
        if not self.distribution.integral:
            raise ProblemError("operation needs integer tau values")

    def evened(self) -> "Problem":
        """Same K, b, t with every block holding tau_bar targets."""
        tb = self.tau_bar
        tau = int(tb) if tb.denominator == 1 else float(tb)
        regime = self.regime
        if not isinstance(tau, int):
            regime = "analysis"
        return make_problem(self.K, self.b, [tau] * self.t, regime=regime)

    def to_dict(self) -> dict:
        return {"K": self.K, "b": self.b, "taus": list(self.taus)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def make_problem(K: int, b: int | None, taus: Sequence, regime: str = "algorithm") -> Problem:
    """Validate and build a problem instance.

    Raises :class:`ProblemError` for malformed input and :class:`RegimeError`
    when an algorithm-mode instance has ``t >= K/4``.
    """
    if regime not in REGIMES:
        raise ProblemError(f"unknown regime {regime!r}")
    if b is None and regime == "algorithm":
        raise ProblemError("algorithm-mode problems need a finite b")
    geometry = DatabaseGeometry(K, b)
    distribution = TargetDistribution(tuple(taus))
    t = distribution.t

    if regime == "algorithm":
        if not distribution.integral:
            raise ProblemError("algorithm-mode tau values must be integers")
        if 4 * t >= K:
            raise RegimeError(f"t={t} blocks violates t < K/4 = {K / 4:g}")
    elif t > K:
        raise ProblemError(f"t={t} marked blocks exceeds K={K}")

    if b is not None:
        for tau in distribution.taus:
            if not 1 <= tau <= b - 1:
                raise ProblemError(f"tau={tau} outside [1, b-1] = [1, {b - 1}]")
    return Problem(geometry, distribution, regime)


def analysis_problem(K: int, taus: Sequence, b: int | None = None) -> Problem:
    return make_problem(K, b, taus, regime="analysis")


def problem_from_dict(data: dict, regime: str = "algorithm") -> Problem:
    """Rebuild from ``{"K", "b", "taus"}``; derived fields are always recomputed."""
    try:
        K, b, taus = data["K"], data["b"], data["taus"]
    except (KeyError, TypeError) as exc:
        raise ProblemError(f"problem JSON needs keys K, b, taus: {exc}") from None
    if not isinstance(taus, list):
        raise ProblemError("taus must be a JSON array")
    return make_problem(K, b, taus, regime=regime)


def problem_from_json(text: str, regime: str = "algorithm") -> Problem:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"malformed problem JSON: {exc}") from None
    return problem_from_dict(data, regime=regime)


def angles(problem: Problem) -> RotationAngles:
    """Global angle with sin^2(theta) = z/N and local angles sin^2(theta_i) = tau_i/b."""
    if problem.b is None:
        raise ProblemError("rotation angles need a finite b")
    theta = math.asin(math.sqrt(problem.z / problem.N))
    thetas = tuple(math.asin(math.sqrt(tau / problem.b)) for tau in problem.taus)
    return RotationAngles(theta, thetas)


def beta(problem: Problem) -> Fraction:
    return Fraction(problem.t, problem.K)


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0
