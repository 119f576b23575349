"""Offline ground truth: exact optima, LP upper bounds, and Slater margins.

Everything here is deliberately exact at desk scale: the dynamic optimum is
enumerated over all K^T action sequences (behind a hard size guard that
fails loudly), the LP relaxation runs on a dense simplex, and the Slater
parameters enumerate actions or policies outright.  The brute-force and LP
routes are kept independent so they can cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .core import Instance, ValidationError
from .environments import StochasticModel, sample_instance
from .simplex import solve_lp

ENUMERATION_GUARD = 10_000_000
_CHUNK = 1 << 15

#: Stream id for deriving per-sample seeds in Monte Carlo estimation.
_MC_STREAM_SALT = 0x5EED


class SizeGuardError(ValueError):
    """Enumeration would exceed the configured node guard."""


@dataclass(frozen=True)
class OracleReport:
    """Offline quantities with the method that produced them."""

    opt_value: float
    method: str
    opt_actions: tuple[int, ...] | None = None
    stderr: float | None = None
    rho: float | None = None
    alpha: float | None = None
    per_draw_method: str | None = None

    def to_dict(self) -> dict:
        return {
            "opt_value": self.opt_value,
            "method": self.method,
            "opt_actions": list(self.opt_actions) if self.opt_actions is not None else None,
            "stderr": self.stderr,
            "rho": self.rho,
            "alpha": self.alpha,
            "per_draw_method": self.per_draw_method,
        }


def _guard(count: int, guard: int, what: str):
    if count > guard:
        raise SizeGuardError(
            f"{what} needs {count} nodes, above the guard of {guard}; "
            "refusing rather than silently approximating"
        )


def _sequence_chunks(T: int, K: int):
    """Yield (codes, digits) blocks covering all K^T sequences in
    lexicographic order; digit t is round t+1's action."""
    total = K**T
    place = K ** np.arange(T - 1, -1, -1, dtype=np.int64)
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        digits = (codes[:, None] // place[None, :]) % K
        yield codes, digits


def _gather_sum(stacked: np.ndarray, digits: np.ndarray) -> np.ndarray:
    """Sum stacked[t, digits[:, t]] over rounds; stacked is (T, K)."""
    T, K = stacked.shape
    flat = stacked.reshape(-1)
    offsets = (np.arange(T, dtype=np.int64) * K)[None, :]
    return flat[digits + offsets].sum(axis=1)


def opt_bruteforce(instance: Instance, guard: int = ENUMERATION_GUARD) -> OracleReport:
    """Exact dynamic optimum by enumeration of all K^T action sequences.

    Feasibility is sum_t g_{t,i}(x_t) <= 0 for every cost and
    sum_t h_{t,j}(x_t) <= beta_j * T for every resource.  Ties resolve to the
    lexicographically smallest optimal sequence.  The all-void sequence is
    always feasible, so the value is at least 0.
    """
    T, K = instance.horizon, instance.num_actions
    _guard(K**T, guard, f"brute-force optimum over {K}^{T} sequences")
    m, n = instance.num_general, instance.num_resources
    rewards = instance.rewards_stack
    limits = instance.budget.limits

    best_value = -np.inf
    best_code = -1
    for codes, digits in _sequence_chunks(T, K):
        values = _gather_sum(rewards, digits)
        feasible = np.ones(codes.shape[0], dtype=bool)
        for i in range(m):
            feasible &= _gather_sum(instance.general_stack[:, i, :], digits) <= 0.0
        for j in range(n):
            feasible &= _gather_sum(instance.consumption_stack[:, j, :], digits) <= limits[j]
        if not feasible.any():
            continue
        masked = np.where(feasible, values, -np.inf)
        k = int(np.argmax(masked))
        if masked[k] > best_value:
            best_value = float(masked[k])
            best_code = int(codes[k])

    if best_code < 0:  # unreachable on validated instances (void is feasible)
        raise ValidationError("no feasible action sequence found")

    place = K ** np.arange(T - 1, -1, -1, dtype=np.int64)
    actions = tuple(int(d) for d in (best_code // place) % K)
    return OracleReport(opt_value=best_value, method="brute_force", opt_actions=actions)


def _grouped_rounds(instance: Instance):
    """Group identical rounds (bitwise-equal tuples) for the LP.

    By symmetry the LP has an optimum that puts the same per-round
    distribution on identical rounds, so aggregating them into one convexity
    row with the group count as mass is exact, not an approximation.
    """
    groups: dict[bytes, int] = {}
    counts: list[int] = []
    reps: list[int] = []
    for t, r in enumerate(instance.rounds):
        key = r.rewards.tobytes() + r.general_costs.tobytes() + r.consumptions.tobytes()
        g = groups.get(key)
        if g is None:
            groups[key] = len(counts)
            counts.append(1)
            reps.append(t)
        else:
            counts[g] += 1
    return np.asarray(reps, dtype=np.int64), np.asarray(counts, dtype=np.float64)


def opt_lp_relax(instance: Instance) -> OracleReport:
    """Upper bound on the dynamic optimum via per-round action distributions.

    maximize  sum_t sum_x f_t(x) z_{t,x}
    s.t.      z >= 0,  sum_x z_{t,x} = 1 for every t,
              sum_{t,x} g_{t,i}(x) z_{t,x} <= 0,
              sum_{t,x} h_{t,j}(x) z_{t,x} <= beta_j T.

    Always at least the brute-force optimum.  Identical rounds are merged
    exactly before solving (see _grouped_rounds).
    """
    K = instance.num_actions
    m, n = instance.num_general, instance.num_resources
    reps, counts = _grouped_rounds(instance)
    G = reps.shape[0]
    nvars = G * K

    c = (instance.rewards_stack[reps]).reshape(-1)
    A_eq = np.zeros((G, nvars))
    for g in range(G):
        A_eq[g, g * K : (g + 1) * K] = 1.0
    b_eq = counts

    M = m + n
    A_ub = np.zeros((M, nvars))
    for i in range(m):
        A_ub[i] = instance.general_stack[reps][:, i, :].reshape(-1)
    for j in range(n):
        A_ub[m + j] = instance.consumption_stack[reps][:, j, :].reshape(-1)
    b_ub = np.concatenate([np.zeros(m), instance.budget.limits])

    result = solve_lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq)
    return OracleReport(opt_value=result.value, method="lp_relaxation")


def opt_stoc_estimate(
    model: StochasticModel,
    T: int,
    num_samples: int,
    seed,
    guard: int = ENUMERATION_GUARD,
) -> OracleReport:
    """Monte Carlo estimate of E[OPT(gamma)] over sampled length-T sequences.

    Each sample i uses the seed derived from (seed, i), so growing
    num_samples extends the draw stream without changing earlier draws.
    Per-draw optima are exact enumeration when K^T fits the guard and the LP
    upper bound otherwise; the fallback is flagged in ``per_draw_method``.
    """
    if num_samples < 1:
        raise ValidationError(f"num_samples must be >= 1, got {num_samples}")
    sd = seed.value if hasattr(seed, "value") else int(seed)
    K = model.actions.count
    use_bruteforce = K**T <= guard
    values = np.empty(num_samples)
    for i in range(num_samples):
        draw_seed = rng.derive_seed(sd, _MC_STREAM_SALT + i)
        inst = sample_instance(model, T, draw_seed)
        if use_bruteforce:
            values[i] = opt_bruteforce(inst, guard).opt_value
        else:
            values[i] = opt_lp_relax(inst).opt_value
    stderr = (
        float(values.std(ddof=1) / np.sqrt(num_samples)) if num_samples > 1 else None
    )
    return OracleReport(
        opt_value=float(values.mean()),
        method="monte_carlo",
        stderr=stderr,
        per_draw_method="brute_force" if use_bruteforce else "lp_relaxation",
    )


def _per_round_minmax(instance: Instance) -> np.ndarray:
    """min over actions of max over constraints of the unified matrix, per
    round: the round-t contribution to the adversarial Slater parameter."""
    return instance.unified_stack.max(axis=1).min(axis=1)


def slater_adv(instance: Instance) -> float:
    """Adversarial Slater parameter by per-round decomposition.

    The minimum over action sequences of the max over rounds separates
    across rounds, so rho_adv = -max_t min_x max_i g~_{t,i}(x).
    """
    return float(-_per_round_minmax(instance).max())


def slater_safe_sequence(instance: Instance) -> np.ndarray:
    """Per-round argmin actions certifying slater_adv (lowest index on ties)."""
    return instance.unified_stack.max(axis=1).argmin(axis=1)


def slater_adv_bruteforce(instance: Instance, guard: int = ENUMERATION_GUARD) -> float:
    """Adversarial Slater parameter by enumeration over full sequences.

    Independent route for cross-validating the per-round decomposition:
    rho_adv = -min over sequences of max over t of max_i g~_{t,i}(x_t).
    """
    T, K = instance.horizon, instance.num_actions
    _guard(K**T, guard, f"brute-force Slater over {K}^{T} sequences")
    colmax = instance.unified_stack.max(axis=1)  # (T, K)
    flat = colmax.reshape(-1)
    offsets = (np.arange(T, dtype=np.int64) * K)[None, :]
    worst = np.inf
    for _, digits in _sequence_chunks(T, K):
        seq_scores = flat[digits + offsets].max(axis=1)
        worst = min(worst, float(seq_scores.min()))
    return -worst


def slater_stoc(model: StochasticModel, guard: int = ENUMERATION_GUARD) -> float:
    """Stochastic Slater parameter by exact enumeration of deterministic
    policies pi: support -> actions.

    rho_stoc = -min over policies of max over constraints of the
    probability-weighted expected unified constraint value.
    """
    S, K = model.support_size, model.actions.count
    _guard(K**S, guard, f"policy enumeration over {K}^{S} policies")
    M = model.num_constraints
    beta = model.budget.per_round_budget
    # weighted[s, x, i] = p_s * g~_i(x) under support tuple s
    weighted = np.empty((S, K, M))
    for s, tup in enumerate(model.support):
        shifted = tup.consumptions - beta[:, None]
        unified = np.concatenate([tup.general_costs, shifted], axis=0)
        weighted[s] = model.probs[s] * unified.T

    flat = weighted.reshape(S * K, M)
    offsets = (np.arange(S, dtype=np.int64) * K)[None, :]
    best = np.inf
    place = K ** np.arange(S - 1, -1, -1, dtype=np.int64)
    total = K**S
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        digits = (codes[:, None] // place[None, :]) % K
        expect = flat[digits + offsets].sum(axis=1)  # (chunk, M)
        scores = expect.max(axis=1)
        best = min(best, float(scores.min()))
    return -best


def alpha(rho_adv: float) -> float:
    """The competitive fraction rho / (1 + rho)."""
    if rho_adv < 0.0:
        raise ValidationError(f"rho must be >= 0, got {rho_adv!r}")
    return rho_adv / (1.0 + rho_adv)
