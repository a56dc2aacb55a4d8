"""NumPy fallback for the backward-DP inner loop.

Kept operation-for-operation aligned with the compiled kernel so both
backends produce bit-identical value tables and action choices: branch
contributions accumulate in the same left-to-right order (padded
zero-probability branches included, not skipped) and ties resolve by the
same action priority.
"""

from __future__ import annotations

import numpy as np

# Tie-break order: USER2, USER1, IDLE (indices 1, 0, 2).
_ORDER = np.array([1, 0, 2], dtype=np.int8)


def solve_backward(
    cost_const: np.ndarray,
    cost_z: np.ndarray,
    feasible: np.ndarray,
    next_idx: np.ndarray,
    probs: np.ndarray,
    frozen_z: float,
    discount: float,
    values: np.ndarray,
    actions: np.ndarray,
) -> None:
    """Fill `values` ((T+1, S)) and `actions` ((T, S)) in place."""
    T = actions.shape[0]
    S = cost_const.shape[0]
    n_branches = probs.shape[2]
    cost = cost_const + frozen_z * cost_z
    cost = np.where(feasible.astype(bool), cost, np.inf)
    cost_ord = cost[:, _ORDER]
    next_ord = next_idx[:, _ORDER, :]
    probs_ord = probs[:, _ORDER, :]
    rows = np.arange(S)
    values[T, :] = 0.0
    for t in range(T - 1, -1, -1):
        vnext = values[t + 1]
        # Explicit branch-order accumulation (matches the compiled kernel).
        cont = np.zeros((S, 3))
        for b in range(n_branches):
            cont = cont + probs_ord[:, :, b] * vnext[next_ord[:, :, b]]
        q = cost_ord + discount * cont
        pick = np.argmin(q, axis=1)
        values[t, :] = q[rows, pick]
        actions[t, :] = _ORDER[pick]
