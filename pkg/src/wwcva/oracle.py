"""Brute-force verifiers for the worst-case assignment machinery.

Everything here is deliberately independent of the production code
paths: the bounded-variable LP is solved both by the fractional-knapsack
greedy rule and by a generic two-phase dense simplex, and the
largest-to-largest pairing is checked against exhaustive permutation
search. Used only by tests and the ``verify`` CLI command.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "SmallInstance",
    "lp_max",
    "best_permutation",
    "random_instances",
]

_AGREEMENT_TOL = 1e-12


@dataclass(frozen=True)
class SmallInstance:
    """A tiny scenario set for exhaustive verification (n <= 8)."""

    values: tuple[float, ...]
    weights: tuple[float, ...]
    q: float
    dp_levels: tuple[float, ...] | None = None

    def __post_init__(self):
        n = len(self.values)
        if n == 0 or n > 8:
            raise ValueError(f"instance size must be 1..8, got {n}")
        if len(self.weights) != n:
            raise ValueError("values and weights must have equal length")
        if any(w < 0.0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if not 0.0 < self.q <= 1.0 + 1e-12:
            raise ValueError(f"tail mass must lie in (0, 1], got {self.q}")
        if self.dp_levels is not None and len(self.dp_levels) != n:
            raise ValueError("dp levels must match the number of scenarios")

    def digest(self) -> str:
        h = hashlib.sha256()
        for part in (self.values, self.weights, (self.q,), self.dp_levels or ()):
            h.update(np.asarray(part, dtype=float).tobytes())
        return h.hexdigest()[:16]


def _greedy_fill(values: np.ndarray, weights: np.ndarray, q: float) -> np.ndarray:
    """Fractional-knapsack solution: fill the largest values first."""
    p = np.zeros_like(weights)
    remaining = q
    for j in sorted(range(len(values)), key=lambda j: (-values[j], j)):
        take = min(weights[j], remaining)
        p[j] = take
        remaining -= take
        if remaining <= 0.0:
            break
    return p


def _simplex_max(values: np.ndarray, weights: np.ndarray, q: float) -> tuple[float, np.ndarray]:
    """Two-phase dense tableau simplex for max v.p s.t. p + s = w, sum(p) = q.

    Bland's rule throughout, so the pivot sequence is deterministic and
    cycling-free. Sized for n <= 8; no attempt at sparse efficiency.
    """
    n = len(values)
    m = n + 1  # n bound rows + 1 mass row
    # columns: p_0..p_{n-1}, s_0..s_{n-1}, artificial a, rhs
    tableau = np.zeros((m, 2 * n + 2))
    tableau[:n, :n] = np.eye(n)
    tableau[:n, n : 2 * n] = np.eye(n)
    tableau[:n, -1] = weights
    tableau[n, :n] = 1.0
    tableau[n, 2 * n] = 1.0
    tableau[n, -1] = q
    basis = list(range(n, 2 * n)) + [2 * n]

    def pivot(objective: np.ndarray, allowed: int) -> None:
        for _ in range(500):
            # reduced costs of non-basic columns
            cb = objective[basis]
            reduced = objective[:allowed] - cb @ tableau[:, :allowed]
            enter = -1
            for j in range(allowed):
                if j not in basis and reduced[j] > 1e-11:
                    enter = j
                    break
            if enter < 0:
                return
            col = tableau[:, enter]
            best_row, best_ratio = -1, np.inf
            for i in range(m):
                if col[i] > 1e-11:
                    ratio = tableau[i, -1] / col[i]
                    if ratio < best_ratio - 1e-13 or (
                        abs(ratio - best_ratio) <= 1e-13
                        and (best_row < 0 or basis[i] < basis[best_row])
                    ):
                        best_row, best_ratio = i, ratio
            if best_row < 0:
                raise RuntimeError("unbounded LP in simplex oracle")
            tableau[best_row] /= tableau[best_row, enter]
            for i in range(m):
                if i != best_row and tableau[i, enter] != 0.0:
                    tableau[i] -= tableau[i, enter] * tableau[best_row]
            basis[best_row] = enter
        raise RuntimeError("simplex oracle failed to converge")

    # phase 1: drive the artificial variable out
    phase1 = np.zeros(2 * n + 1)
    phase1[2 * n] = -1.0
    pivot(phase1, allowed=2 * n + 1)
    infeas = tableau[basis.index(2 * n), -1] if 2 * n in basis else 0.0
    if infeas > 1e-9:
        raise ValueError(f"infeasible: tail mass {q} exceeds total scenario mass")
    # phase 2: maximize v.p with the artificial column frozen out
    phase2 = np.zeros(2 * n + 1)
    phase2[:n] = values
    pivot(phase2, allowed=2 * n)
    p = np.zeros(n)
    for i, b in enumerate(basis):
        if b < n:
            p[b] = tableau[i, -1]
    return float(values @ p), p


def lp_max(values, weights, q: float) -> tuple[float, np.ndarray]:
    """Maximize sum p_j v_j subject to 0 <= p_j <= w_j and sum p_j = q.

    Solved independently by the greedy fractional-knapsack rule and by a
    dense simplex; the two objectives must agree to 1e-12, otherwise a
    RuntimeError flags the discrepancy.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be equal-length 1-d arrays")
    if np.any(weights < 0.0):
        raise ValueError("weights must be non-negative")
    if q <= 0.0:
        raise ValueError(f"tail mass must be positive, got {q}")
    if q > weights.sum() + 1e-12:
        raise ValueError(f"infeasible: tail mass {q} exceeds total scenario mass")
    p_greedy = _greedy_fill(values, weights, q)
    obj_greedy = float(values @ p_greedy)
    obj_simplex, _ = _simplex_max(values, weights, q)
    scale = max(1.0, abs(obj_greedy))
    if abs(obj_greedy - obj_simplex) > _AGREEMENT_TOL * scale:
        raise RuntimeError(
            f"simplex and greedy optima disagree: {obj_simplex!r} vs {obj_greedy!r}"
        )
    return obj_greedy, p_greedy


@lru_cache(maxsize=16)
def _perm_matrix(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def best_permutation(values, dp_levels, weights) -> tuple[float, tuple[int, ...]]:
    """Exhaustively maximize sum_j w_j * dp_{pi(j)} * v_j over pairings pi.

    The optimum must coincide with the sorted pairing (largest dp level
    onto the scenario with the largest combined score w*v, and so on
    down), which is the rearrangement-inequality solution.
    """
    values = np.asarray(values, dtype=float)
    dp = np.asarray(dp_levels, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = values.shape[0]
    if n > 7:
        raise ValueError(f"exhaustive search is limited to n <= 7, got {n}")
    if dp.shape[0] != n or weights.shape[0] != n:
        raise ValueError("values, dp levels and weights must have equal length")
    scores = weights * values
    perms = _perm_matrix(n)
    objectives = dp[perms] @ scores
    best = int(np.argmax(objectives))
    best_obj = float(objectives[best])
    sorted_obj = float(np.sort(scores) @ np.sort(dp))
    if abs(best_obj - sorted_obj) > _AGREEMENT_TOL * max(1.0, abs(best_obj)):
        raise RuntimeError(
            f"sorted pairing is not permutation-optimal: {sorted_obj!r} vs {best_obj!r}"
        )
    return best_obj, tuple(int(j) for j in perms[best])


def random_instances(
    seed: int, count: int, max_n: int = 8, with_dp: bool = False
) -> list[SmallInstance]:
    """Reproducible adversarial instances: lognormal values, Dirichlet weights."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        values = rng.lognormal(mean=0.0, sigma=1.0, size=n)
        weights = rng.dirichlet(np.ones(n))
        q = float(rng.uniform(0.02, 1.0))
        dp = tuple(rng.uniform(0.0, 1.0, size=n)) if with_dp else None
        out.append(
            SmallInstance(
                values=tuple(values), weights=tuple(weights), q=q, dp_levels=dp
            )
        )
    return out
