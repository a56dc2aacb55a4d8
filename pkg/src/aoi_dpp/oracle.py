"""Independent verification of the frame solver.

evaluate_policy_exact pushes the state distribution forward through the
transition kernel; brute_force_optimal is a deliberately naive backward
induction over dictionaries with its own outcome enumeration and its own
tie-breaking, so a solver bug cannot confirm itself; monte_carlo_value
bridges the exact numbers and the stochastic simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .channel import BAD, GOOD, ChannelModel, GilbertElliotChannel, IIDChannel
from .model import Action, FrameConfig, SystemState, feasible_actions, step_aoi, step_queue
from .solver import PolicyTable, StateSpace, build_kernel, stage_cost

DecisionRule = Callable[[int, SystemState], Action]


class TooLargeError(ValueError):
    """Instance exceeds the naive enumeration guard."""


@dataclass
class EvaluationResult:
    expected_cost: float
    state_distribution_by_slot: list[dict[SystemState, float]]


def as_rule(policy) -> DecisionRule:
    """Normalize a policy argument into a (slot, state) -> Action callable.

    Accepts a PolicyTable, a {(slot, state): action} mapping, a per-slot
    action sequence, or an already-callable rule.
    """
    if isinstance(policy, PolicyTable):
        return policy.action
    if isinstance(policy, Mapping):
        return lambda t, s: policy[(t, s)]
    if isinstance(policy, Sequence):
        actions = [Action(a) for a in policy]
        return lambda t, s: actions[t]
    if callable(policy):
        return policy
    raise TypeError(f"cannot interpret {policy!r} as a decision rule")


def evaluate_policy_exact(
    policy,
    initial_state: SystemState,
    frozen_z: float,
    cfg: FrameConfig,
    model: ChannelModel,
) -> EvaluationResult:
    """Exact expected frame cost of a policy, by forward recursion."""
    rule = as_rule(policy)
    dist: dict[SystemState, float] = {initial_state: 1.0}
    by_slot = [dict(dist)]
    expected = 0.0
    weight = 1.0
    for t in range(cfg.T):
        nxt: dict[SystemState, float] = {}
        for state, prob in dist.items():
            action = rule(t, state)
            expected += weight * prob * stage_cost(state, action, frozen_z, cfg, model)
            for entry in build_kernel(state, action, model, cfg):
                nxt[entry.state] = nxt.get(entry.state, 0.0) + prob * entry.probability
        dist = nxt
        by_slot.append(dict(dist))
        weight *= cfg.discount
    return EvaluationResult(expected, by_slot)


def _outcome_branches(
    state: SystemState, action: Action, model: ChannelModel
) -> list[tuple[float, int, int, tuple[int, int] | None]]:
    """(prob, d1, d2, next channel memory) per channel outcome.

    Enumerated from the channel laws directly, on purpose not through the
    solver's kernel.
    """
    if isinstance(model, IIDChannel):
        if action == Action.USER1:
            branches = [(model.p1, 1, 0, None), (1.0 - model.p1, 0, 0, None)]
        elif action == Action.USER2:
            branches = [(model.p2, 0, 1, None), (1.0 - model.p2, 0, 0, None)]
        else:
            branches = [(1.0, 0, 0, None)]
    else:
        m1, m2 = state.channel_mem
        g1 = model.good_prob(1, m1)
        g2 = model.good_prob(2, m2)
        branches = []
        for h1 in (GOOD, BAD):
            for h2 in (GOOD, BAD):
                prob = (g1 if h1 else 1.0 - g1) * (g2 if h2 else 1.0 - g2)
                d1 = 1 if (action == Action.USER1 and h1 == GOOD) else 0
                d2 = 1 if (action == Action.USER2 and h2 == GOOD) else 0
                branches.append((prob, d1, d2, (h1, h2)))
    return [b for b in branches if b[0] > 0.0]


def brute_force_optimal(
    initial_state: SystemState,
    frozen_z: float,
    cfg: FrameConfig,
    model: ChannelModel,
) -> tuple[float, dict[tuple[int, SystemState], Action]]:
    """Exact optimum over deterministic Markov policies, naively.

    Dict-based backward induction: per branch the realized cost
    z*(rho - d2) + V*A' accumulates with the discounted continuation. Ties
    resolve in USER1, USER2, IDLE order, intentionally different from the
    solver's preference.
    """
    space = StateSpace(cfg, model)
    if space.n_states * cfg.T > 100_000:
        raise TooLargeError(
            f"{space.n_states} states x {cfg.T} slots exceeds the enumeration guard"
        )
    rho = cfg.rho
    states = list(space.states())
    value: dict[SystemState, float] = {s: 0.0 for s in states}
    rule: dict[tuple[int, SystemState], Action] = {}
    for t in range(cfg.T - 1, -1, -1):
        new_value: dict[SystemState, float] = {}
        for state in states:
            best = math.inf
            best_action = None
            for action in (Action.USER1, Action.USER2, Action.IDLE):
                if action not in feasible_actions(state):
                    continue
                total = 0.0
                for prob, d1, d2, mem in _outcome_branches(state, action, model):
                    nxt = SystemState(
                        step_aoi(state.aoi, d1, cfg.A_max),
                        step_queue(state.queue, d2, False, cfg.K),
                        mem,
                    )
                    realized = frozen_z * (rho - d2) + cfg.V * nxt.aoi
                    total += prob * (realized + cfg.discount * value[nxt])
                if total < best:
                    best = total
                    best_action = action
            new_value[state] = best
            rule[(t, state)] = best_action
        value = new_value
    return value[initial_state], rule


def monte_carlo_value(
    policy,
    initial_state: SystemState,
    frozen_z: float,
    cfg: FrameConfig,
    model: ChannelModel,
    n_runs: int,
    seed: int,
) -> tuple[float, float]:
    """Sample mean and standard error of the realized frame cost.

    Run i draws its stream from the derived seed (seed, i), so runs are
    independent and the whole estimate is reproducible.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    rule = as_rule(policy)
    rho = cfg.rho
    ge = isinstance(model, GilbertElliotChannel)
    costs = np.empty(n_runs)
    for i in range(n_runs):
        rng = np.random.default_rng([seed, i])
        state = initial_state
        total = 0.0
        weight = 1.0
        for t in range(cfg.T):
            action = rule(t, state)
            d1 = d2 = 0
            if ge:
                u = rng.random(2)
                h1 = GOOD if u[0] < model.good_prob(1, state.channel_mem[0]) else BAD
                h2 = GOOD if u[1] < model.good_prob(2, state.channel_mem[1]) else BAD
                if action == Action.USER1:
                    d1 = 1 if h1 == GOOD else 0
                elif action == Action.USER2:
                    d2 = 1 if h2 == GOOD else 0
                mem = (h1, h2)
            else:
                if action == Action.USER1:
                    d1 = 1 if rng.random() < model.p1 else 0
                elif action == Action.USER2:
                    d2 = 1 if rng.random() < model.p2 else 0
                mem = None
            aoi = step_aoi(state.aoi, d1, cfg.A_max)
            total += weight * (frozen_z * (rho - d2) + cfg.V * aoi)
            state = SystemState(aoi, step_queue(state.queue, d2, False, cfg.K), mem)
            weight *= cfg.discount
        costs[i] = total
    mean = float(costs.mean())
    stderr = float(costs.std(ddof=1) / math.sqrt(n_runs)) if n_runs > 1 else 0.0
    return mean, stderr


def stationary_aoi_mean(model: ChannelModel, a_max: int, user: int = 1) -> float:
    """Exact long-run mean AoI when the given user transmits every slot.

    Solves the stationary law of the induced chain on (AoI, previous channel
    state); requires an ergodic channel chain.
    """
    if isinstance(model, IIDChannel):
        p = model.p1 if user == 1 else model.p2
        chain_states = [(a, None) for a in range(1, a_max + 1)]

        def branches(a, h):
            return [(p, 1, None), (1.0 - p, 0, None)]

    else:
        chain_states = [
            (a, h) for a in range(1, a_max + 1) for h in (BAD, GOOD)
        ]

        def branches(a, h):
            g = model.good_prob(user, h)
            return [(g, 1, GOOD), (1.0 - g, 0, BAD)]

    index = {s: i for i, s in enumerate(chain_states)}
    n = len(chain_states)
    P = np.zeros((n, n))
    for (a, h), i in index.items():
        for prob, success, h_next in branches(a, h):
            a_next = 1 if success else min(a + 1, a_max)
            P[i, index[(a_next, h_next)]] += prob
    # pi P = pi with sum(pi) = 1, as a least-squares system
    lhs = np.vstack([P.T - np.eye(n), np.ones(n)])
    rhs = np.concatenate([np.zeros(n), [1.0]])
    pi = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    ages = np.array([a for a, _ in chain_states], dtype=float)
    return float(pi @ ages)
