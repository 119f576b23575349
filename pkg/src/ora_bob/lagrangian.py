"""Instantaneous Lagrangian evaluation and exact best response.

The penalty inner products are accumulated in constraint-index order with no
reassociation, so evaluating the same (input, dual) pair twice is
bit-identical on a platform; the dominance audit relies on that exact
equality.  Ties in the best response break toward the lowest action index,
which keeps traces reproducible.
"""

from __future__ import annotations

import numpy as np

from .core import DualVector, InputTuple, UnifiedConstraints, ValidationError


def penalties(unified: np.ndarray, dual_values: np.ndarray) -> np.ndarray:
    """<lambda, g~(x)> for every action x, accumulated in index order.

    ``unified`` is the (M, K) unified constraint matrix; returns a (K,)
    vector.  Each output element is the running sum lambda_1*g~_1 + ... in
    constraint order, matching the scalar path in :func:`lagrangian_value`
    term for term.
    """
    out = np.zeros(unified.shape[1])
    for i in range(unified.shape[0]):
        out += dual_values[i] * unified[i]
    return out


def lagrangian_value(
    inp: InputTuple, unified: UnifiedConstraints, action: int, dual: DualVector
) -> float:
    """f_t(x) - <lambda, g~_t(x)> for a single action."""
    if not 0 <= action < inp.num_actions:
        raise ValidationError(f"action {action} outside [0, {inp.num_actions})")
    if dual.num_constraints != unified.num_constraints:
        raise ValidationError(
            f"dual has {dual.num_constraints} components, "
            f"unified matrix has {unified.num_constraints} rows"
        )
    col = unified.matrix[:, action]
    penalty = np.float64(0.0)
    for i in range(col.shape[0]):
        penalty += dual.values[i] * col[i]
    return float(inp.rewards[action] - penalty)


def best_response(
    inp: InputTuple, unified: UnifiedConstraints, dual: DualVector
) -> tuple[int, float]:
    """The Lagrangian argmax over all actions and its value.

    Exact enumeration over the K actions, O(K*M) per call; K is treated as a
    free parameter.  Ties break toward the lowest index (np.argmax returns
    the first maximizer).
    """
    if dual.num_constraints != unified.num_constraints:
        raise ValidationError(
            f"dual has {dual.num_constraints} components, "
            f"unified matrix has {unified.num_constraints} rows"
        )
    values = inp.rewards - penalties(unified.matrix, dual.values)
    idx = int(np.argmax(values))
    return idx, float(values[idx])
