"""Prebunk delivery policies and the Monte Carlo arrival-time estimator."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Protocol

import numpy as np

from .cascade import ESTIMATE_STREAM, CascadeState, substream
from .netgraph import LocalNeighborhood, WeightedDigraph, undirected_diameter
from .schedule import LpInstance, ScheduleSolution, solve_equidistant_lp

POLICY_NAMES = ("early", "delayed", "equidistant")


@dataclass(frozen=True)
class PolicyObservation:
    """What a policy sees at step ``t``: every active cascade's infected mask."""

    t: int
    infected: Mapping[int, np.ndarray]
    in_neighbors: np.ndarray
    center: int
    delivered: frozenset[int]

    def undelivered(self) -> list[int]:
        return [k for k in sorted(self.infected) if k not in self.delivered]

    def near_center(self, k: int) -> bool:
        mask = self.infected[k]
        return bool((mask & self.in_neighbors).any() or mask[self.center - 1])


class Policy(Protocol):
    name: str

    def decide(self, obs: PolicyObservation) -> frozenset[int]: ...


class EarlyResponse:
    """Deliver a prebunk the first step its cascade is visible."""

    name = "early"

    def decide(self, obs: PolicyObservation) -> frozenset[int]:
        return frozenset(k for k in obs.undelivered() if obs.infected[k].any())


class DelayedResponse:
    """Deliver once a cascade reaches an in-neighbor of the guarded user."""

    name = "delayed"

    def decide(self, obs: PolicyObservation) -> frozenset[int]:
        return frozenset(
            k for k in obs.undelivered() if (obs.infected[k] & obs.in_neighbors).any()
        )


@dataclass(frozen=True)
class ArrivalEstimate:
    """Estimated steps until the center is infected.

    ``steps`` is ``inf`` when none of the sampled runs reached the center
    within ``cap`` steps.
    """

    steps: float
    samples: int
    hits: int
    statistic: str

    @property
    def reachable(self) -> bool:
        return not math.isinf(self.steps)


def hitting_times(
    g: WeightedDigraph,
    infected: np.ndarray,
    c: int,
    samples: int,
    cap: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Forward-simulate SI ``samples`` times; ``inf`` marks runs that missed ``c``."""
    lt = g.log_survival_in
    state = np.repeat(infected[None, :], samples, axis=0)
    hit = np.full(samples, np.inf)
    live = np.arange(samples)
    for step in range(1, cap + 1):
        x = state[live]
        log_surv = (lt @ x.T.astype(np.float64)).T
        new = (rng.random(x.shape) < -np.expm1(log_surv)) & ~x
        x |= new
        state[live] = x
        reached = new[:, c - 1]
        hit[live[reached]] = step
        live = live[~reached]
        if live.size == 0:
            break
    return hit


def estimate_arrival(
    g_c: LocalNeighborhood | WeightedDigraph,
    infected: np.ndarray | set[int],
    c: int,
    samples: int,
    rng: np.random.Generator,
    statistic: str = "mean",
    quantile: float = 0.1,
    cap: int | None = None,
) -> ArrivalEstimate:
    """Monte Carlo estimate of how many SI steps until ``c`` is infected.

    ``statistic`` is ``"mean"`` or ``"quantile"`` (the ``quantile`` level of
    the hitting times).  Runs that miss ``c`` within ``cap`` steps (default
    four times the neighborhood diameter) are left out of the statistic.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if isinstance(g_c, LocalNeighborhood):
        g, diam = g_c.subgraph, g_c.diameter
    else:
        g, diam = g_c, None
    if cap is None:
        if diam is None:
            diam = undirected_diameter(g).value
        cap = 4 * max(diam, 1)
    if not isinstance(infected, np.ndarray):
        mask = np.zeros(g.n, dtype=bool)
        mask[[i - 1 for i in infected]] = True
        infected = mask
    if not infected.any():
        raise ValueError("infected set is empty")
    if infected[c - 1]:
        raise ValueError("center is already infected")
    hits = hitting_times(g, infected, c, samples, cap, rng)
    finite = hits[np.isfinite(hits)]
    if finite.size == 0:
        value = math.inf
    elif statistic == "mean":
        value = float(finite.mean())
    elif statistic == "quantile":
        value = float(np.quantile(finite, quantile))
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    return ArrivalEstimate(value, samples, int(finite.size), statistic)


class TemporallyEquidistant:
    """Space deliveries evenly ahead of estimated arrival deadlines.

    Each step: cascades touching an in-neighbor of the center (or the center
    itself) are delivered at once.  Otherwise every undelivered cascade's
    arrival is estimated, the max-min-gap LP is solved from the last delivery
    time ``t0``, and prebunks whose planned time has come are delivered.
    ``t0`` moves to the current step on any delivery.
    """

    name = "equidistant"

    def __init__(
        self,
        graph: LocalNeighborhood | WeightedDigraph,
        center: int,
        seed: int,
        samples: int = 100,
        statistic: str = "mean",
        quantile: float = 0.1,
        cap: int | None = None,
        cap_factor: int = 4,
        resolve_every: int = 1,
        initial_t0: float = 0.0,
    ):
        if isinstance(graph, LocalNeighborhood):
            self.graph = graph.subgraph
            diam = graph.diameter
        else:
            self.graph = graph
            diam = None
        if cap is None:
            if diam is None:
                diam = undirected_diameter(self.graph).value
            cap = cap_factor * max(diam, 1)
        self.center = center
        self.seed = seed
        self.samples = samples
        self.statistic = statistic
        self.quantile = quantile
        self.cap = cap
        self.resolve_every = resolve_every
        self.t0 = initial_t0
        self.plan: ScheduleSolution | None = None
        self._estimates: dict[int, tuple[int, float]] = {}

    def _arrival(self, k: int, mask: np.ndarray, t: int) -> float:
        cached = self._estimates.get(k)
        if cached is not None and t - cached[0] < self.resolve_every:
            return cached[1]
        est = estimate_arrival(
            self.graph, mask, self.center, self.samples,
            substream(self.seed, ESTIMATE_STREAM, t, k),
            statistic=self.statistic, quantile=self.quantile, cap=self.cap,
        )
        x = t + est.steps
        self._estimates[k] = (t, x)
        return x

    def decide(self, obs: PolicyObservation) -> frozenset[int]:
        t = obs.t
        pending = obs.undelivered()
        urgent = frozenset(k for k in pending if obs.near_center(k))
        if urgent:
            self.t0 = t
            return urgent
        if not pending:
            return frozenset()
        estimates = {k: self._arrival(k, obs.infected[k], t) for k in pending}
        self.plan = solve_equidistant_lp(LpInstance.from_estimates(t, self.t0, estimates))
        due = frozenset(self.plan.due(t))
        if due:
            self.t0 = t
        return due


def make_policy(name: str, graph: LocalNeighborhood | WeightedDigraph, center: int, seed: int, **estimator) -> Policy:
    if name == "early":
        return EarlyResponse()
    if name == "delayed":
        return DelayedResponse()
    if name == "equidistant":
        return TemporallyEquidistant(graph, center, seed, **estimator)
    raise ValueError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")


class PolicyHook:
    """Drive several policies off one simulation, tracking each one's deliveries."""

    def __init__(self, policies: Mapping[str, Policy], in_neighbors: np.ndarray):
        self.policies = dict(policies)
        self.in_neighbors = in_neighbors
        self.delivered = {name: set() for name in self.policies}

    def __call__(self, state: CascadeState) -> dict[str, frozenset[int]]:
        out = {}
        for name, policy in self.policies.items():
            obs = PolicyObservation(
                state.t, state.infected, self.in_neighbors, state.center,
                frozenset(self.delivered[name]),
            )
            chosen = frozenset(policy.decide(obs))
            self.delivered[name] |= chosen
            out[name] = chosen
        return out
