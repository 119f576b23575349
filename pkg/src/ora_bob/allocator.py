"""The allocation controller: greedy Lagrangian primal step behind a hard
budget gate, with a projected-gradient dual update.

Per round: compute the candidate action maximizing the instantaneous
Lagrangian at the current duals; play it if every resource's cumulative
consumption through the previous round is at most beta_j*T - 1, otherwise
play the void action; then update the duals with the unified constraint
vector of the action actually played.  The -1 slack plus h <= 1 per round
makes the hard caps beta_j*T unbreakable.

The gate comparison is evaluated in exact rational arithmetic over the
stored values (every float is an exact rational), so the hard caps hold in
real arithmetic, not merely up to float rounding: otherwise a budget like
1/3 whose cap beta*T rounds upward could admit one play too many.  Recorded
consumptions stay ordinary floats.

A run is strictly sequential (the dual state is a chain); distinct runs are
independent and may execute in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    ActionSet,
    BudgetSpec,
    DualVector,
    InputTuple,
    Instance,
    RoundRecord,
    Trajectory,
    unify_constraints,
)
from .dual_ogd import OgdConfig, learning_rate, ogd_step
from .lagrangian import best_response, penalties


def gate_thresholds(budget: BudgetSpec) -> tuple[Fraction, ...]:
    """The exact per-resource gate cutoffs beta_j * T - 1."""
    T = budget.horizon
    return tuple(
        Fraction(float(b)) * T - 1 for b in budget.per_round_budget
    )


@dataclass(frozen=True)
class AllocatorState:
    """Dual state and consumption bookkeeping between rounds.

    ``gate_forced_closed`` is monotone: once the gate closes, consumption is
    frozen (the void action consumes nothing), so it can never reopen.
    ``exact_consumption`` carries the rational-exact running sums the gate
    compares; when absent (hand-built states) the float totals are used as
    their exact rational values.
    """

    round: int
    dual: DualVector
    cumulative_consumption: np.ndarray
    gate_forced_closed: bool = False
    exact_consumption: tuple[Fraction, ...] | None = None

    def exact_totals(self) -> tuple[Fraction, ...]:
        if self.exact_consumption is not None:
            return self.exact_consumption
        return tuple(Fraction(float(c)) for c in self.cumulative_consumption)


def initial_state(num_constraints: int, num_resources: int) -> AllocatorState:
    """Round-1 state: lambda_1 = 0 (fixed by the algorithm, not configurable)."""
    return AllocatorState(
        round=1,
        dual=DualVector.zeros(num_constraints),
        cumulative_consumption=np.zeros(num_resources),
        gate_forced_closed=False,
        exact_consumption=(Fraction(0),) * num_resources,
    )


def gate_open(state: AllocatorState, budget: BudgetSpec) -> bool:
    """True iff sum_{s<t} h_{s,j}(x_s) <= beta_j*T - 1 for every resource j,
    compared in exact arithmetic.  Vacuously true with no budget resources.
    """
    if budget.num_resources == 0:
        return True
    totals = state.exact_totals()
    return all(c <= thr for c, thr in zip(totals, gate_thresholds(budget)))


def default_config(instance: Instance, delta: float = 0.05) -> OgdConfig:
    """OgdConfig with the closed-form learning-rate schedule."""
    return OgdConfig(
        eta=learning_rate(instance.horizon, instance.num_constraints, delta),
        delta=delta,
    )


def step(
    state: AllocatorState,
    inp: InputTuple,
    budget: BudgetSpec,
    actions: ActionSet,
    config: OgdConfig,
) -> tuple[RoundRecord, AllocatorState]:
    """One round: candidate, gate, play, dual update.

    The dual update uses the unified vector of the action actually played
    (the void action when the gate is closed), not the candidate's.
    """
    unified = unify_constraints(inp, budget)
    candidate, _ = best_response(inp, unified, state.dual)
    is_open = gate_open(state, budget)
    action = candidate if is_open else actions.void_index
    gvec = unified.matrix[:, action].copy()
    new_dual = ogd_step(state.dual, gvec, config.eta)
    new_cum = state.cumulative_consumption + inp.consumptions[:, action]
    new_exact = tuple(
        c + Fraction(float(h)) if h else c
        for c, h in zip(state.exact_totals(), inp.consumptions[:, action])
    )
    record = RoundRecord(
        round=state.round,
        action=action,
        candidate_action=candidate,
        reward=float(inp.rewards[action]),
        unified_values=gvec,
        dual_before=state.dual,
        gate_open=is_open,
        cumulative_consumption=new_cum.copy(),
    )
    new_state = AllocatorState(
        round=state.round + 1,
        dual=new_dual,
        cumulative_consumption=new_cum,
        gate_forced_closed=state.gate_forced_closed or not is_open,
        exact_consumption=new_exact,
    )
    return record, new_state


def run(instance: Instance, config: OgdConfig) -> Trajectory:
    """Execute the full horizon from lambda_1 = 0.

    Validates the instance first and aborts before round 1 on any issue.
    The loop is an inlined equivalent of repeated :func:`step` (same helper
    functions, same arithmetic), kept flat for speed; the two paths are held
    bit-identical by tests.
    """
    instance.validate().raise_if_invalid()

    T = instance.horizon
    K = instance.num_actions
    m = instance.num_general
    n = instance.num_resources
    M = m + n
    void = instance.actions.void_index
    eta = config.eta

    rewards = instance.rewards_stack
    unified = instance.unified_stack
    cons = instance.consumption_stack
    thresholds = gate_thresholds(instance.budget)
    # Float pre-filter for the gate: below thr_fast the exact comparison is
    # guaranteed to pass (band dominates the worst-case accumulation drift
    # of the float totals plus the threshold's own rounding), so the exact
    # rational bookkeeping only starts once a resource nears its cutoff.
    caps = instance.budget.limits
    band = (4.0 * T + 8.0) * np.spacing(caps + T)
    thr_fast = np.array([float(thr) for thr in thresholds]) - band

    out_actions = np.empty(T, dtype=np.int64)
    out_candidates = np.empty(T, dtype=np.int64)
    out_rewards = np.empty(T)
    out_gvals = np.empty((T, M))
    out_duals = np.zeros((T + 1, M))
    out_gate = np.empty(T, dtype=bool)
    out_cum = np.empty((T, n))

    lam = np.zeros(M)
    cum = np.zeros(n)
    exact_cum: list[Fraction] | None = None
    is_open = True

    for t in range(T):
        g_t = unified[t]
        values = rewards[t] - penalties(g_t, lam)
        candidate = int(np.argmax(values))
        if is_open and n and not np.all(cum <= thr_fast):
            if exact_cum is None:
                past = np.arange(t)
                exact_cum = [
                    sum(
                        (Fraction(float(h)) for h in cons[past, j, out_actions[:t]] if h),
                        Fraction(0),
                    )
                    for j in range(n)
                ]
            if any(c > thr for c, thr in zip(exact_cum, thresholds)):
                is_open = False
        action = candidate if is_open else void
        gvec = g_t[:, action]
        out_actions[t] = action
        out_candidates[t] = candidate
        out_rewards[t] = rewards[t, action]
        out_gvals[t] = gvec
        out_gate[t] = is_open
        lam = np.maximum(0.0, lam + eta * gvec)
        out_duals[t + 1] = lam
        if n:
            col = cons[t, :, action]
            cum = cum + col
            if exact_cum is not None and is_open:
                for j in range(n):
                    h = col[j]
                    if h:
                        exact_cum[j] += Fraction(float(h))
        out_cum[t] = cum

    open_rounds = np.nonzero(out_gate)[0]
    tau = int(open_rounds[-1] + 1) if open_rounds.size else 0

    return Trajectory(
        actions=out_actions,
        candidates=out_candidates,
        rewards=out_rewards,
        unified_values=out_gvals,
        duals=out_duals,
        gate_open=out_gate,
        cumulative_consumption=out_cum,
        stopping_time=tau,
        num_general=m,
        num_resources=n,
        eta=eta,
        delta=config.delta,
    )


def stopping_time(trajectory: Trajectory) -> int:
    """The last gate-open round; 0 if the gate was never open, T if it never
    closed.  Every round after it plays the void action."""
    open_rounds = np.nonzero(trajectory.gate_open)[0]
    return int(open_rounds[-1] + 1) if open_rounds.size else 0
