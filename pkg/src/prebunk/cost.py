"""Leaky-bucket cost of prebunk deliveries and the feasibility check."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cascade import Trace


@dataclass(frozen=True)
class ActionLog:
    """Prebunk sets ``A_1..A_T`` delivered to the guarded user.

    ``actions[t - 1]`` is ``A_t``.  Prebunk ids equal the cascade ids they
    counter, and no id may be delivered twice.
    """

    actions: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(frozenset(a) for a in self.actions))
        seen: set[int] = set()
        for t, a in enumerate(self.actions, start=1):
            again = seen & a
            if again:
                raise ValueError(f"prebunks {sorted(again)} re-delivered at t={t}")
            seen |= a

    @classmethod
    def from_trace(cls, trace: Trace, policy: str) -> "ActionLog":
        return cls(tuple(trace.actions(policy)))

    @property
    def horizon(self) -> int:
        return len(self.actions)

    @property
    def counts(self) -> np.ndarray:
        return np.array([len(a) for a in self.actions], dtype=np.float64)

    def delivery_time(self) -> dict[int, int]:
        return {k: t for t, a in enumerate(self.actions, start=1) for k in a}


def _check_beta(beta: float) -> None:
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")


def instantaneous_cost(log: ActionLog, t: int, beta: float) -> float:
    """``c(A, t) = sum_{tau=1..t} beta**(t - tau) * |A_tau|``."""
    _check_beta(beta)
    if not 1 <= t <= log.horizon:
        raise ValueError(f"t={t} outside 1..{log.horizon}")
    counts = log.counts[:t]
    powers = beta ** np.arange(t - 1, -1, -1, dtype=np.float64)
    return float(counts @ powers)


def cost_series(log: ActionLog, beta: float) -> np.ndarray:
    """All of ``c(A, 1..T)`` via the recurrence ``c_t = beta*c_{t-1} + |A_t|``."""
    _check_beta(beta)
    out = np.empty(log.horizon)
    acc = 0.0
    for i, k in enumerate(log.counts):
        acc = beta * acc + k
        out[i] = acc
    return out


def max_cost(log: ActionLog, beta: float) -> float:
    """``C(A) = max_t c(A, t)``; zero for an empty horizon."""
    series = cost_series(log, beta)
    return float(series.max()) if series.size else 0.0


def early_response_expected_cost(q_sum: float, beta: float, t: int) -> float:
    """Expected ``c(pi, t)`` of the early-response policy under constant q.

    ``(1 - beta**t) / (1 - beta) * q_sum``; at ``beta == 1`` the geometric sum
    becomes ``t * q_sum``.
    """
    _check_beta(beta)
    if t < 1:
        raise ValueError("t must be at least 1")
    if q_sum < 0:
        raise ValueError("q_sum must be nonnegative")
    if beta == 1:
        return t * q_sum
    return (1 - beta**t) / (1 - beta) * q_sum


@dataclass(frozen=True)
class FeasibilityReport:
    verdicts: dict[int, bool]

    @property
    def all_feasible(self) -> bool:
        return all(self.verdicts.values())

    @property
    def violations(self) -> list[int]:
        return [k for k, ok in self.verdicts.items() if not ok]


def feasibility_check(trace: Trace, log: ActionLog) -> FeasibilityReport:
    """Cascade ``k`` passes iff ``P_k`` was delivered strictly before ``X_k``.

    Cascades that never reached the guarded user pass vacuously.
    """
    if trace.horizon != log.horizon:
        raise ValueError(f"trace horizon {trace.horizon} != action log horizon {log.horizon}")
    delivered = log.delivery_time()
    verdicts = {}
    for k in trace.cascades:
        x = trace.arrivals.get(k)
        if x is None:
            verdicts[k] = True
        else:
            verdicts[k] = k in delivered and delivered[k] < x
    return FeasibilityReport(verdicts)


def write_cost_csv(series: Sequence[float], path: str | Path, beta: float | None = None) -> None:
    """Columns ``t,c_of_A_t``; a final ``max`` row carries ``C(A)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "c_of_A_t"])
        for t, v in enumerate(series, start=1):
            w.writerow([t, repr(float(v))])
        w.writerow(["max", repr(float(max(series, default=0.0)))])
        if beta is not None:
            w.writerow(["beta", repr(float(beta))])


def read_cost_csv(path: str | Path) -> tuple[list[float], float]:
    series, peak = [], 0.0
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["t"] == "max":
                peak = float(row["c_of_A_t"])
            elif row["t"] != "beta":
                series.append(float(row["c_of_A_t"]))
    return series, peak
