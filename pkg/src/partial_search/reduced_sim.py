"""Exact evolution in the (2t+1)-dimensional invariant subspace.

Basis order (a wire-format contract)::

    (t_1, ntt_1, t_2, ntt_2, ..., t_t, ntt_t, u)

where ``t_i`` is the normalized sum of targets in marked block ``i``,
``ntt_i`` the normalized sum of its non-targets and ``u`` the normalized
sum over all unmarked blocks.  States are plain float64 numpy vectors.

Integer schedules can be run in operator mode (matrix powers); real
schedules only through :func:`evolve_analytic`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ProblemError
from .problem import Problem, angles


def _check(problem: Problem):
    problem.require_finite_b()


def dimension(problem: Problem) -> int:
    return 2 * problem.t + 1


def initial_state(problem: Problem) -> np.ndarray:
    """Coordinates of the uniform superposition in the reduced basis."""
    _check(problem)
    N, b, K, t = problem.N, problem.b, problem.K, problem.t
    amps = np.empty(2 * t + 1)
    for i, tau in enumerate(problem.taus):
        amps[2 * i] = math.sqrt(tau / N)
        amps[2 * i + 1] = math.sqrt((b - tau) / N)
    amps[-1] = math.sqrt(b * (K - t) / N)
    return amps


def _oracle_signs(problem: Problem) -> np.ndarray:
    d = np.ones(dimension(problem))
    d[0:-1:2] = -1.0
    return d


def g1_matrix(problem: Problem) -> np.ndarray:
    """Global iteration -I_{s1} I_T restricted to the subspace."""
    s = initial_state(problem)
    n = s.size
    reflect_s = np.eye(n) - 2.0 * np.outer(s, s)
    return -reflect_s * _oracle_signs(problem)[np.newaxis, :]


def g2_matrix(problem: Problem, j2: int) -> np.ndarray:
    """Block-diagonal matrix of G2^j2 (2x2 rotation per marked block, 1 for u)."""
    if int(j2) != j2 or j2 < 0:
        raise ProblemError(f"g2_matrix needs a nonnegative integer j2, got {j2!r}")
    _check(problem)
    m = np.eye(dimension(problem))
    for i, th in enumerate(angles(problem).thetas):
        c, s = math.cos(2 * j2 * th), math.sin(2 * j2 * th)
        k = 2 * i
        m[k, k], m[k, k + 1] = c, s
        m[k + 1, k], m[k + 1, k + 1] = -s, c
    return m


def local_iteration_matrix(problem: Problem) -> np.ndarray:
    """One G2 built from its reflections, -(direct sum of I_{s2}) I_T.

    Independent of :func:`g2_matrix`; within marked block ``i`` the block
    average is ``sin(theta_i) t_i + cos(theta_i) ntt_i`` and ``u`` is a sum
    of block averages, so it is left fixed.
    """
    _check(problem)
    n = dimension(problem)
    m = np.eye(n)
    for i, tau in enumerate(problem.taus):
        v = np.array([math.sqrt(tau / problem.b), math.sqrt((problem.b - tau) / problem.b)])
        m[2 * i:2 * i + 2, 2 * i:2 * i + 2] = -(np.eye(2) - 2.0 * np.outer(v, v))
    # -I_{s2} on unmarked blocks: each block average is fixed
    return m * _oracle_signs(problem)[np.newaxis, :]


def evolve_operator(problem: Problem, j1: int, j2: int) -> np.ndarray:
    """G2^j2 G1^j1 |s1> by repeated matrix application (integer schedules)."""
    for name, j in (("j1", j1), ("j2", j2)):
        if int(j) != j or j < 0:
            raise ProblemError(f"operator mode needs nonnegative integer {name}, got {j!r}")
    state = initial_state(problem)
    g1 = g1_matrix(problem)
    for _ in range(int(j1)):
        state = g1 @ state
    return g2_matrix(problem, int(j2)) @ state


def evolve_analytic(problem: Problem, j1: float, j2: float) -> np.ndarray:
    """Closed-form G2^j2 G1^j1 |s1>; valid for real j1, j2 >= 0."""
    if j1 < 0 or j2 < 0:
        raise ProblemError("j1 and j2 must be nonnegative")
    _check(problem)
    ang = angles(problem)
    N, b, K, t, z = problem.N, problem.b, problem.K, problem.t, problem.z
    phi = (2.0 * j1 + 1.0) * ang.theta
    sp, cp = math.sin(phi), math.cos(phi)
    amps = np.empty(2 * t + 1)
    for i, (tau, th) in enumerate(zip(problem.taus, ang.thetas)):
        c2, s2 = math.cos(2 * j2 * th), math.sin(2 * j2 * th)
        tgt = math.sqrt(tau / z)
        non = math.sqrt((b - tau) / (N - z))
        amps[2 * i] = tgt * c2 * sp + non * s2 * cp
        amps[2 * i + 1] = -tgt * s2 * sp + non * c2 * cp
    a_nt = cp / math.sqrt(N - z)
    amps[-1] = a_nt * math.sqrt(b * (K - t))
    return amps


def final_reflection(problem: Problem, state: np.ndarray) -> np.ndarray:
    """Apply I_{s1} = I - 2|s1><s1| (the last operator; note: not -I_{s1})."""
    s = initial_state(problem)
    state = np.asarray(state, dtype=float)
    return state - 2.0 * (s @ state) * s


def success_probability(problem: Problem, state: np.ndarray) -> float:
    """Probability that measurement lands in a marked block."""
    state = np.asarray(state, dtype=float)
    return float(np.sum(state[:-1] ** 2))


def u_coordinate(state: np.ndarray) -> float:
    return float(state[-1])


def run(problem: Problem, j1, j2, mode: str = "analytic") -> np.ndarray:
    """Full pipeline returning the state just before measurement."""
    if mode == "operator":
        state = evolve_operator(problem, j1, j2)
    elif mode == "analytic":
        state = evolve_analytic(problem, j1, j2)
    else:
        raise ProblemError(f"unknown mode {mode!r}")
    return final_reflection(problem, state)


@dataclass(frozen=True)
class Schedule:
    """Iteration counts; ``mode`` is ``"operator"`` (integers) or ``"analytic"``."""

    j1: float
    j2: float
    mode: str = "analytic"

    def __post_init__(self):
        if self.j1 < 0 or self.j2 < 0:
            raise ProblemError("schedule counts must be nonnegative")
        if self.mode == "operator" and (int(self.j1) != self.j1 or int(self.j2) != self.j2):
            raise ProblemError("operator-mode schedules need integer counts")
        if self.mode not in ("operator", "analytic"):
            raise ProblemError(f"unknown schedule mode {self.mode!r}")

    @classmethod
    def from_eta_alpha(cls, problem: Problem, eta: float, alpha: float) -> "Schedule":
        """j1 = (pi/4) sqrt(N/z) - eta sqrt(b), j2 = alpha sqrt(b)."""
        if eta <= 0 or alpha <= 0:
            raise ProblemError("eta and alpha must be positive")
        problem.require_finite_b()
        rb = math.sqrt(problem.b)
        return cls(math.pi / 4 * math.sqrt(problem.N / problem.z) - eta * rb, alpha * rb)

    def eta_alpha(self, problem: Problem) -> tuple[float, float]:
        rb = math.sqrt(problem.b)
        return (math.pi / 4 * math.sqrt(problem.N / problem.z) - self.j1) / rb, self.j2 / rb

    def rounded(self) -> "Schedule":
        return Schedule(float(round(self.j1)), float(round(self.j2)), "operator")

    def run(self, problem: Problem) -> np.ndarray:
        j1, j2 = (int(self.j1), int(self.j2)) if self.mode == "operator" else (self.j1, self.j2)
        return run(problem, j1, j2, self.mode)


def state_to_json(state: np.ndarray) -> str:
    return json.dumps([float(x) for x in state])


def state_from_json(text: str) -> np.ndarray:
    data = json.loads(text)
    if not isinstance(data, list) or len(data) % 2 != 1:
        raise ProblemError("reduced state must be a JSON array of odd length 2t+1")
    return np.asarray(data, dtype=float)
