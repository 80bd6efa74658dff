"""Delivery-time scheduling: the max-min-gap LP and the relaxed minimax problem.

The LP spaces ``K`` pending prebunks as widely as possible after the last
delivery ``t_0`` while each stays at or before its deadline::

    max u  s.t.  u <= t_i - t_{i-1}  (i = 1..K),   t_i <= d_i

With only upper-bound deadlines the optimum is ``u* = min_i (d_i - t_0) / i``
and the equispaced times ``t_i = t_0 + i*u*`` attain it.

The relaxed problem places ``K + 1`` deliveries on ``[0, T]`` minimising the
peak accumulated cost ``max_n sum_{i<=n} beta**(t_n - t_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp


@dataclass(frozen=True)
class LpInstance:
    """Sorted deadlines ``d_1 <= ... <= d_K`` (``inf`` = unconstrained)."""

    t_now: float
    t_0: float
    deadlines: tuple[float, ...]
    order: tuple[int, ...] = ()

    def __post_init__(self):
        d = tuple(float(x) for x in self.deadlines)
        if not d:
            raise ValueError("at least one deadline is required")
        if any(b < a for a, b in zip(d, d[1:])):
            raise ValueError("deadlines must be sorted nondecreasing")
        if self.order and len(self.order) != len(d):
            raise ValueError("order must match deadlines in length")
        object.__setattr__(self, "deadlines", d)

    @classmethod
    def from_estimates(cls, t_now: float, t_0: float, estimates: dict[int, float]) -> "LpInstance":
        """Sort arrival estimates and turn them into deadlines ``x - 1``."""
        ranked = sorted(estimates.items(), key=lambda kv: (kv[1], kv[0]))
        return cls(
            t_now,
            t_0,
            tuple(x - 1.0 for _, x in ranked),
            tuple(k for k, _ in ranked),
        )


@dataclass(frozen=True)
class ScheduleSolution:
    times: tuple[float, ...]
    u: float
    feasible: bool
    order: tuple[int, ...] = ()

    def due(self, t: float, eps: float = 1e-9) -> list[int]:
        """Ids (or positions when no order) scheduled at or before ``t``."""
        keys = self.order or tuple(range(len(self.times)))
        return [k for k, ti in zip(keys, self.times) if ti <= t + eps]


def solve_equidistant_lp(inst: LpInstance) -> ScheduleSolution:
    d = np.asarray(inst.deadlines)
    idx = np.arange(1, d.size + 1)
    u = float(np.min((d - inst.t_0) / idx))
    feasible = bool(d[0] >= inst.t_0)
    if math.isinf(u):
        return ScheduleSolution(tuple(math.inf for _ in idx), u, feasible, inst.order)
    t = np.minimum(inst.t_0 + idx * u, d)
    # report the realized min gap so both constraint families hold bit-exactly
    u = float(min(u, np.diff(t, prepend=inst.t_0).min()))
    return ScheduleSolution(tuple(float(v) for v in t), u, feasible, inst.order)


def schedule_cost(times: Sequence[float], beta: float) -> tuple[np.ndarray, float]:
    """Per-delivery accumulated cost ``sum_{i<=n} beta**(t_n - t_i)`` and its max."""
    t = np.asarray(times, dtype=np.float64)
    if t.size == 0:
        return np.empty(0), 0.0
    if np.any(np.diff(t) < 0):
        raise ValueError("times must be nondecreasing")
    costs = np.empty(t.size)
    costs[0] = 1.0
    for n in range(1, t.size):
        costs[n] = 1.0 + beta ** (t[n] - t[n - 1]) * costs[n - 1]
    return costs, float(costs.max())


def plateau_gaps(alpha: float, beta: float, h: int) -> tuple[float, float]:
    """Closed-form ``(head gap, interior gap)`` of a plateau schedule.

    With ``h`` deliveries stacked at time zero and every later accumulated
    cost equal to ``alpha``: the first positive time is
    ``log_b(alpha - 1) - log_b(h)`` and later gaps are
    ``log_b(alpha - 1) - log_b(alpha)``.
    """
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if h < 1:
        raise ValueError("h must be positive")
    lb = math.log(beta)
    head = (math.log(alpha - 1) - math.log(h)) / lb
    interior = (math.log(alpha - 1) - math.log(alpha)) / lb
    return head, interior


@dataclass(frozen=True)
class RelaxedInstance:
    horizon: float
    eps: float
    beta: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")

    @property
    def count(self) -> int:
        return math.floor(self.eps * self.horizon) + 1


@dataclass(frozen=True)
class RelaxedSolution:
    times: tuple[float, ...]
    alpha: float
    h: int
    costs: tuple[float, ...]
    converged: bool
    info: dict = field(default_factory=dict, compare=False)

    @property
    def plateau_spread(self) -> float:
        tail = self.costs[self.h:]
        return max(tail) - min(tail) if tail else 0.0

    @property
    def gaps(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.times, self.times[1:]))


class NotConverged(RuntimeError):
    pass


def _relaxed_problem(K: int, T: float, beta: float):
    """Objective and constraints over ``x = (t_1..t_{K-1}, s)``.

    For n >= 1, ``log(cost_n - 1) = logsumexp_{i<n} (t_n - t_i) * log(beta)``
    is convex in the times, so ``min s  s.t.  s >= log(cost_n - 1)`` is a
    smooth convex program.
    """
    lb = math.log(beta)

    def full_times(x):
        return np.concatenate(([0.0], x[:-1], [T]))

    def lse_terms(x):
        t = full_times(x)
        vals = np.empty(K)
        jac = np.zeros((K, K))
        for n in range(1, K + 1):
            z = (t[n] - t[:n]) * lb
            v = logsumexp(z)
            w = np.exp(z - v)
            vals[n - 1] = v
            grad_t = np.zeros(K + 1)
            grad_t[n] += lb
            grad_t[:n] -= lb * w
            jac[n - 1, : K - 1] = -grad_t[1:K]
            jac[n - 1, K - 1] = 1.0
        return x[-1] - vals, jac

    def order(x):
        t = full_times(x)
        return np.diff(t)

    def order_jac(x):
        J = np.zeros((K, K))
        for i in range(K):
            # d(t_{i+1} - t_i)/dx; x[j] is t_{j+1}
            if i < K - 1:
                J[i, i] = 1.0
            if i >= 1:
                J[i, i - 1] = -1.0
        return J

    cons = [
        {"type": "ineq", "fun": lambda x: lse_terms(x)[0], "jac": lambda x: lse_terms(x)[1]},
        {"type": "ineq", "fun": order, "jac": order_jac},
    ]
    obj = (lambda x: x[-1], lambda x: np.eye(K)[-1])
    return full_times, obj, cons


def relaxed_minimax_solve(
    inst: RelaxedInstance,
    tolerance: float = 1e-10,
    restarts: int = 5,
    seed: int = 0,
    maxiter: int = 2000,
) -> RelaxedSolution:
    """Minimise the peak accumulated cost of ``inst.count`` deliveries on [0, T].

    The endpoints are pinned at 0 and T; interior times are solved from
    ``restarts`` random sorted starts and the lowest peak wins (ties go to the
    earliest start).  ``h`` is the first index whose time exceeds zero by
    more than ``1e-6 * T``.
    """
    count = inst.count
    if count < 2:
        raise ValueError("need at least two deliveries")
    T, beta = float(inst.horizon), inst.beta
    K = count - 1
    if K == 1:
        times = (0.0, T)
        costs, alpha = schedule_cost(times, beta)
        return RelaxedSolution(times, alpha, 1, tuple(costs), True)

    full_times, (fun, grad), cons = _relaxed_problem(K, T, beta)
    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        inner = np.sort(rng.uniform(0, T, K - 1)) if r else np.linspace(0, T, K + 1)[1:-1]
        t_init = np.concatenate(([0.0], inner, [T]))
        s0 = max(
            logsumexp((t_init[n] - t_init[:n]) * math.log(beta)) for n in range(1, K + 1)
        )
        res = minimize(
            fun, np.concatenate((inner, [s0])), jac=grad, method="SLSQP",
            constraints=cons, options={"ftol": tolerance * 1e-3, "maxiter": maxiter},
        )
        t = np.maximum.accumulate(np.clip(full_times(res.x), 0.0, T))
        costs, peak = schedule_cost(t, beta)
        if best is None or peak < best[1]:
            best = (t, peak, costs, res)
    t, alpha, costs, res = best
    if not res.success:
        raise NotConverged(f"relaxed solver did not converge: {res.message}")
    positive = np.flatnonzero(t > 1e-6 * T)
    h = int(positive[0]) if positive.size else K
    return RelaxedSolution(
        tuple(float(v) for v in t), alpha, h, tuple(float(c) for c in costs), True,
        {"iterations": int(res.nit), "message": res.message},
    )
