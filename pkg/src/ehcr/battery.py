"""Battery-level Markov chain: transition structure and steady state.

The battery is a birth-death-with-jumps chain over {0..K} cells.  In a
sensed-idle frame the user burns the probe reserve plus the policy spend
and then harvests; in a sensed-busy frame it only harvests.  Harvest
overflow piles up on the full state and deficits clamp at empty, so each
column of the transition matrix is the next-level distribution given the
current level.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .policy import PolicyPmf
from .sensing import SensingStats


class ChainNotErgodicError(RuntimeError):
    """Steady state is not unique/reachable for this chain."""


class TransitionBuilder:
    """Precomputed clamp-shift distributions for one harvest law.

    Row ``s`` of the table is the distribution of ``clip(s + H, 0, K)``
    where ``H`` is the harvested-cell count.  Building the table once lets
    many policies be priced against the same harvest law cheaply.
    """

    def __init__(self, harvest: np.ndarray, cells: int, probe_cells: int):
        harvest = np.asarray(harvest, dtype=float)
        if harvest.shape != (cells + 1,):
            raise ValueError("harvest pmf must have cells+1 entries")
        self.cells = cells
        self.probe_cells = probe_cells
        self.shift_min = -cells - probe_cells
        k = cells
        below = np.concatenate(([0.0], np.cumsum(harvest)))      # Pr{H <= i-1}
        above = np.concatenate((np.cumsum(harvest[::-1])[::-1], [0.0]))  # Pr{H >= i}
        n_shift = k - self.shift_min + 1
        table = np.zeros((n_shift, k + 1))
        for row, s in enumerate(range(self.shift_min, k + 1)):
            # state 0 absorbs every harvest outcome H <= -s
            t0 = -s
            table[row, 0] = 1.0 if t0 >= k else (below[t0 + 1] if t0 >= 0 else 0.0)
            # state K absorbs every outcome H >= K - s
            tk = k - s
            if tk <= 0:
                table[row, k] = 1.0
            elif tk <= k:
                table[row, k] = above[tk]
            # interior states map one-to-one onto harvest outcomes
            i_lo = max(1, s)
            i_hi = min(k - 1, k + s)
            if i_hi >= i_lo:
                table[row, i_lo:i_hi + 1] = harvest[i_lo - s:i_hi - s + 1]
        self._table = table

    def matrix(self, psi_idle: np.ndarray, idle_prob: float,
               busy_prob: float) -> np.ndarray:
        """Column-stochastic transition matrix for one spend distribution.

        ``psi_idle[j, i]`` is the chance of spending i data cells from
        level j in a sensed-idle frame (the idle-conditional policy law);
        sensed-busy frames harvest without spending.
        """
        k = self.cells
        js = np.arange(k + 1)
        phi = busy_prob * self._table[js - self.shift_min].T
        # psi_idle is indexed [level j, spend i]; fold the spend axis in
        # one contraction over the precomputed clamp-shift rows
        psi = np.asarray(psi_idle, dtype=float)
        spends = np.flatnonzero(psi.any(axis=0))
        if spends.size:
            rows = self._table[js[None, :] - self.probe_cells
                               - spends[:, None] - self.shift_min]
            phi += idle_prob * np.einsum("sji,js->ij", rows,
                                         psi[:, spends])
        return phi


def build_transition_matrix(pmf: PolicyPmf, sensing: SensingStats,
                            harvest: np.ndarray) -> np.ndarray:
    """Battery transition matrix for one policy, sensing point and harvest law."""
    builder = TransitionBuilder(harvest, pmf.cells, pmf.probe_cells)
    return builder.matrix(pmf.psi[0], sensing.pi_hat_idle, sensing.pi_hat_busy)


def steady_state(matrix: np.ndarray, *, agree_tol: float = 1e-6,
                 step_tol: float = 1e-13, max_doublings: int = 60) -> np.ndarray:
    """Stationary distribution of a column-stochastic chain.

    Solved in closed form by replacing one redundant balance constraint
    with normalization, then cross-checked against power iteration from
    uniform (run in squared form, so `max_doublings` steps cover chain
    powers up to 2**max_doublings); disagreement beyond `agree_tol` (or
    a singular system) means the chain has no unique reachable steady
    state.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    system = matrix - np.eye(n) + 1.0
    try:
        z = np.linalg.solve(system, np.ones(n))
    except np.linalg.LinAlgError as exc:
        raise ChainNotErgodicError("chain not ergodic: singular balance system") from exc

    u = np.full(n, 1.0 / n)
    power = matrix
    v = power @ u
    converged = False
    for _ in range(max_doublings):
        power = power @ power
        # renormalize columns so rounding drift never compounds
        power /= power.sum(axis=0, keepdims=True)
        nxt = power @ u
        if np.max(np.abs(nxt - v)) < step_tol:
            v = nxt
            converged = True
            break
        v = nxt
    if np.max(np.abs(z - v)) > agree_tol:
        raise ChainNotErgodicError(
            "chain not ergodic: closed form and power iteration disagree"
            + ("" if converged else " (iteration not converged)"))

    z = np.clip(z, 0.0, None)
    z /= z.sum()
    resid = float(np.max(np.abs(matrix @ z - z)))
    if resid > 1e-9:
        raise ChainNotErgodicError(f"chain not ergodic: fixed-point residual {resid:.2e}")
    return z


def battery_outage(dist: np.ndarray, probe_cells: int) -> float:
    """Probability the battery cannot even cover the probe reserve."""
    return float(np.sum(dist[:probe_cells + 1]))


def avg_energy(dist: np.ndarray) -> float:
    """Mean battery level in cells."""
    return float(np.dot(dist, np.arange(dist.size)))


@dataclass(frozen=True)
class BatteryChain:
    """Transition matrix with its solved steady state and summary scalars."""

    matrix: np.ndarray
    steady_state: np.ndarray
    avg_energy: float   # mean level [cells]
    outage: float       # Pr{level <= probe reserve}

    @classmethod
    def build(cls, pmf: PolicyPmf, sensing: SensingStats,
              harvest: np.ndarray) -> "BatteryChain":
        phi = build_transition_matrix(pmf, sensing, harvest)
        zeta = steady_state(phi)
        return cls(matrix=phi, steady_state=zeta,
                   avg_energy=avg_energy(zeta),
                   outage=battery_outage(zeta, pmf.probe_cells))
