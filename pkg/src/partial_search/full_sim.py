"""Brute-force statevector simulation on all N amplitudes.

This module never touches the reduced representation; it exists to validate
:mod:`partial_search.reduced_sim`.  Amplitudes are stored block-major
(``index = block * b + item``).  By default marked block ``i`` is block ``i``
and its first ``tau_i`` slots are the targets.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ResourceError, SymmetryError
from .problem import Problem

DEFAULT_CAP = 2**20


def target_mask(problem: Problem, rng: np.random.Generator | None = None) -> np.ndarray:
    """Boolean mask of target items.

    With ``rng`` the marked blocks are drawn at random and targets are placed
    at random slots inside each; otherwise the canonical placement is used.
    """
    problem.require_finite_b()
    K, b = problem.K, problem.b
    mask = np.zeros((K, b), dtype=bool)
    blocks = np.arange(problem.t) if rng is None else rng.choice(K, size=problem.t, replace=False)
    for blk, tau in zip(blocks, problem.taus):
        slots = np.arange(tau) if rng is None else rng.choice(b, size=tau, replace=False)
        mask[blk, slots] = True
    return mask.ravel()


def marked_blocks(problem: Problem, mask: np.ndarray) -> np.ndarray:
    """Marked block indices ordered to match ``problem.taus``."""
    per_block = mask.reshape(problem.K, problem.b).sum(axis=1)
    blocks = list(np.flatnonzero(per_block))
    ordered = []
    for tau in problem.taus:
        # greedy match on target count keeps the taus order for any placement
        for blk in blocks:
            if per_block[blk] == tau:
                ordered.append(blk)
                blocks.remove(blk)
                break
    return np.asarray(ordered)


def uniform_state(N: int) -> np.ndarray:
    return np.full(N, 1.0 / math.sqrt(N))


def oracle_reflect(state: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """I_T: negate every target amplitude."""
    out = state.copy()
    out[mask] = -out[mask]
    return out


def global_diffusion(state: np.ndarray) -> np.ndarray:
    """-I_{s1}: a_y -> 2*mean - a_y."""
    return 2.0 * state.mean() - state


def local_diffusion(state: np.ndarray, b: int) -> np.ndarray:
    """Direct sum of -I_{s2}: inversion about the mean inside each block."""
    blocks = state.reshape(-1, b)
    return (2.0 * blocks.mean(axis=1, keepdims=True) - blocks).ravel()


def dense_global_diffusion(N: int) -> np.ndarray:
    """-(I - 2|s1><s1|) as a dense matrix; only meant for small self-checks."""
    if N > 64:
        raise ResourceError("dense diffusion is limited to N <= 64")
    s = uniform_state(N)
    return -(np.eye(N) - 2.0 * np.outer(s, s))


def class_amplitudes(problem: Problem, state: np.ndarray, mask: np.ndarray, tol: float = 1e-9):
    """Per-class representative amplitudes, checking class equality.

    Returns ``(targets, non_targets, unmarked)`` where the first two are arrays
    indexed like ``problem.taus``.
    """
    K, b = problem.K, problem.b
    grid = state.reshape(K, b)
    mgrid = mask.reshape(K, b)
    blocks = marked_blocks(problem, mask)
    tgt = np.empty(problem.t)
    non = np.empty(problem.t)
    for i, blk in enumerate(blocks):
        for out, sel in ((tgt, mgrid[blk]), (non, ~mgrid[blk])):
            vals = grid[blk, sel]
            if np.ptp(vals) > tol:
                raise SymmetryError(f"amplitudes in block {blk} differ by {np.ptp(vals):.3e}")
            out[i] = vals[0]
    unmarked = np.ones(K, dtype=bool)
    unmarked[blocks] = False
    rest = grid[unmarked].ravel()
    if np.ptp(rest) > tol:
        raise SymmetryError(f"unmarked-block amplitudes differ by {np.ptp(rest):.3e}")
    return tgt, non, rest[0]


def project_to_reduced(problem: Problem, state: np.ndarray, mask: np.ndarray | None = None,
                       tol: float = 1e-9) -> np.ndarray:
    """Coordinates of a symmetric full state in the reduced basis."""
    if mask is None:
        mask = target_mask(problem)
    tgt, non, rest = class_amplitudes(problem, state, mask, tol)
    out = np.empty(2 * problem.t + 1)
    for i, tau in enumerate(problem.taus):
        out[2 * i] = math.sqrt(tau) * tgt[i]
        out[2 * i + 1] = math.sqrt(problem.b - tau) * non[i]
    out[-1] = math.sqrt(problem.b * (problem.K - problem.t)) * rest
    return out


def run_partial_search(problem: Problem, j1: int, j2: int, *, mask: np.ndarray | None = None,
                       cap: int = DEFAULT_CAP, check_symmetry: bool = False,
                       tol: float = 1e-12) -> np.ndarray:
    """Global phase, local phase and final reflection on the full statevector starting from the uniform state.

    ``check_symmetry`` verifies norm and class equality after every operator.
    """
    problem.require_finite_b()
    if problem.N > cap:
        raise ResourceError(f"N={problem.N} exceeds the simulation cap {cap}")
    if int(j1) != j1 or int(j2) != j2 or j1 < 0 or j2 < 0:
        raise ValueError("j1 and j2 must be nonnegative integers")
    if mask is None:
        mask = target_mask(problem)

    def checked(state):
        if check_symmetry:
            norm = float(state @ state)
            if abs(norm - 1.0) > tol:
                raise SymmetryError(f"norm drifted to {norm!r}")
            class_amplitudes(problem, state, mask, tol)
        return state

    state = checked(uniform_state(problem.N))
    for _ in range(int(j1)):
        state = checked(global_diffusion(oracle_reflect(state, mask)))
    for _ in range(int(j2)):
        state = checked(local_diffusion(oracle_reflect(state, mask), problem.b))
    return checked(-global_diffusion(state))


def success_probability(problem: Problem, state: np.ndarray, mask: np.ndarray | None = None) -> float:
    if mask is None:
        mask = target_mask(problem)
    blocks = marked_blocks(problem, mask)
    grid = state.reshape(problem.K, problem.b)
    return float(np.sum(grid[blocks] ** 2))
