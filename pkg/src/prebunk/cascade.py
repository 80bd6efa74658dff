"""Discrete-time SI propagation of concurrent misinformation cascades.

Time steps run ``t = 1..T``.  One call to :func:`advance` processes step
``t`` in a fixed order: new cascades originate, the policy hook observes every
infected set and returns the prebunks delivered at ``t``, every cascade takes
one SI step, and the clock moves to ``t + 1``.  Acting before infecting lets a
policy deliver while a cascade sits at an in-neighbor of the guarded user,
strictly before the user can be reached.

Cascade ids encode origin time and node: a cascade started by node ``i`` at
step ``t`` on an ``N``-node graph has id ``k = N*t + i``.  With 1-based nodes
the inverse is ``i = (k - 1) % N + 1`` and ``t = (k - i) // N``.

Randomness comes from substreams keyed by ``(seed, stream, t[, k])`` so a
cascade's trajectory depends only on the master seed and its own id, never on
which other cascades exist.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .netgraph import WeightedDigraph

log = logging.getLogger(__name__)

ORIGIN_STREAM = 0
SI_STREAM = 1
ESTIMATE_STREAM = 2


def substream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


def cascade_id(t: int, node: int, n: int) -> int:
    return n * t + node


def decode_cascade_id(k: int, n: int) -> tuple[int, int]:
    """Return ``(origin_time, origin_node)`` for cascade id ``k``."""
    node = (k - 1) % n + 1
    return (k - node) // n, node


@dataclass
class OriginationParams:
    """Per-node origination probability and the active-cascade cap.

    ``q`` is a scalar or a length-N array of per-step probabilities.  When
    ``center`` is given and ``q_center_zero`` is on, that node never starts
    a cascade.  ``max_active=None`` disables the cap.
    """

    q: float | np.ndarray = 0.0
    max_active: int | None = None
    center: int | None = None
    q_center_zero: bool = True
    allow_infected_origin: bool = True

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64)
        if np.any(q < 0) or np.any(q > 1):
            raise ValueError("origination probabilities must lie in [0, 1]")
        if self.max_active is not None and self.max_active < 1:
            raise ValueError("cascade cap must be at least 1")

    def q_vector(self, n: int) -> np.ndarray:
        q = np.broadcast_to(np.asarray(self.q, dtype=np.float64), (n,)).copy()
        if self.center is not None and self.q_center_zero:
            q[self.center - 1] = 0.0
        return q


@dataclass
class CascadeState:
    """Infected sets ``I_t^k`` of every cascade at the current step ``t``.

    Infected sets are boolean masks over nodes (index 0 is node 1).  The
    susceptible set is the complement and is never stored.
    """

    n: int
    center: int
    t: int = 1
    infected: dict[int, np.ndarray] = field(default_factory=dict)
    origin_time: dict[int, int] = field(default_factory=dict)
    arrivals: dict[int, int] = field(default_factory=dict)

    def copy(self) -> "CascadeState":
        return CascadeState(
            self.n,
            self.center,
            self.t,
            {k: m.copy() for k, m in self.infected.items()},
            dict(self.origin_time),
            dict(self.arrivals),
        )

    def infected_nodes(self, k: int) -> set[int]:
        return {int(i) + 1 for i in np.flatnonzero(self.infected[k])}

    def start_cascade(self, k: int, node: int, t: int) -> None:
        mask = np.zeros(self.n, dtype=bool)
        mask[node - 1] = True
        self.infected[k] = mask
        self.origin_time[k] = t
        if node == self.center:
            self.arrivals[k] = t


def si_step_mask(
    g: WeightedDigraph,
    infected: np.ndarray,
    rng: np.random.Generator,
    blocked: np.ndarray | None = None,
) -> np.ndarray:
    """One SI step on a boolean mask; returns the newly infected mask.

    Susceptible ``j`` is infected with probability
    ``1 - prod(1 - p_ij)`` over its infected in-neighbors ``i``.  One uniform
    is drawn per node in node order, so results depend only on ``rng``.
    """
    active = infected[g.src]
    log_surv = np.bincount(g.dst[active], weights=g.edge_log_survival[active], minlength=g.n)
    p_inf = -np.expm1(log_surv)
    new = (rng.random(g.n) < p_inf) & ~infected
    if blocked is not None:
        new &= ~blocked
    return new


def si_step(g: WeightedDigraph, infected: set[int], rng: np.random.Generator) -> set[int]:
    mask = np.zeros(g.n, dtype=bool)
    mask[[i - 1 for i in infected]] = True
    return {int(i) + 1 for i in np.flatnonzero(si_step_mask(g, mask, rng))}


def originate(
    state: CascadeState,
    params: OriginationParams,
    rng: np.random.Generator,
    blocked: np.ndarray | None = None,
) -> list[tuple[int, int]]:
    """Start new cascades at step ``state.t``; returns ``(node, k)`` pairs.

    Events beyond the cap are dropped in ascending node order.  Does not
    mutate ``state``.
    """
    n = state.n
    q = params.q_vector(n)
    fire = rng.random(n) < q
    if blocked is not None:
        fire &= ~blocked
    if not params.allow_infected_origin and state.infected:
        fire &= ~np.logical_or.reduce(list(state.infected.values()))
    nodes = np.flatnonzero(fire) + 1
    if params.max_active is not None:
        room = max(0, params.max_active - len(state.infected))
        if nodes.size > room:
            log.debug("cascade cap reached at t=%d, dropping %d events", state.t, nodes.size - room)
        nodes = nodes[:room]
    return [(int(i), cascade_id(state.t, int(i), n)) for i in nodes]


@dataclass
class StepRecord:
    t: int
    originations: list[tuple[int, int]]
    actions: dict[str, frozenset[int]]
    infections: dict[int, frozenset[int]]
    arrivals: dict[int, int]


# Hook called with the post-origination state; returns prebunk ids per policy.
DecisionHook = Callable[[CascadeState], Mapping[str, frozenset[int]]]


def advance(
    g: WeightedDigraph,
    state: CascadeState,
    params: OriginationParams,
    hook: DecisionHook | None,
    seed: int,
    blocked: np.ndarray | None = None,
) -> tuple[CascadeState, StepRecord]:
    """Process one step and return the next state with its record."""
    nxt = state.copy()
    t = state.t
    events = originate(nxt, params, substream(seed, ORIGIN_STREAM, t), blocked)
    arrivals = {}
    for node, k in events:
        nxt.start_cascade(k, node, t)
        if k in nxt.arrivals:
            arrivals[k] = t

    actions = dict(hook(nxt)) if hook is not None else {}

    infections = {}
    c = nxt.center - 1
    for k in sorted(nxt.infected):
        mask = nxt.infected[k]
        new = si_step_mask(g, mask, substream(seed, SI_STREAM, t, k), blocked)
        if new.any():
            mask |= new
            infections[k] = frozenset(int(i) + 1 for i in np.flatnonzero(new))
            if new[c] and k not in nxt.arrivals:
                nxt.arrivals[k] = t + 1
                arrivals[k] = t + 1
    nxt.t = t + 1
    return nxt, StepRecord(t, events, actions, infections, arrivals)


@dataclass
class Trace:
    """Event log of one run plus the realized arrival times ``X_k``.

    ``arrivals`` maps every cascade that reached the center to its first
    infected step; missing ids never reached it.  An arrival can equal
    ``horizon + 1`` when the last SI step infects the center.
    """

    n: int
    center: int
    horizon: int
    seed: int
    records: list[StepRecord] = field(default_factory=list)
    arrivals: dict[int, int] = field(default_factory=dict)

    @property
    def cascades(self) -> list[int]:
        return [k for r in self.records for _, k in r.originations]

    def actions(self, policy: str) -> list[frozenset[int]]:
        return [r.actions.get(policy, frozenset()) for r in self.records]

    @property
    def policies(self) -> list[str]:
        names = []
        for r in self.records:
            for name in r.actions:
                if name not in names:
                    names.append(name)
        return names

    def infected_history(self, k: int) -> dict[int, frozenset[int]]:
        """Rebuild ``I_t^k`` for every step from the recorded events."""
        t0, node = decode_cascade_id(k, self.n)
        if k not in self.cascades:
            raise KeyError(f"unknown cascade {k}")
        current = {node}
        history = {t0: frozenset(current)}
        for r in self.records:
            if r.t < t0:
                continue
            current |= r.infections.get(k, frozenset())
            history[r.t + 1] = frozenset(current)
        return history


NOT_REACHED = None


def arrival_time(trace: Trace, k: int, c: int | None = None) -> int | None:
    """First step at which ``c`` (default: the trace's center) is in ``I_t^k``."""
    if k not in trace.cascades:
        raise KeyError(f"unknown cascade {k}")
    if c is None or c == trace.center:
        return trace.arrivals.get(k, NOT_REACHED)
    for t, nodes in sorted(trace.infected_history(k).items()):
        if c in nodes:
            return t
    return NOT_REACHED


def simulate(
    g: WeightedDigraph,
    center: int,
    params: OriginationParams,
    horizon: int,
    seed: int,
    hook: DecisionHook | None = None,
    blocked: np.ndarray | None = None,
    on_step: Callable[[CascadeState], None] | None = None,
) -> Trace:
    """Run steps ``1..horizon`` from an empty state and return the trace."""
    g.check_node(center)
    state = CascadeState(g.n, center)
    trace = Trace(g.n, center, horizon, seed)
    for _ in range(horizon):
        state, record = advance(g, state, params, hook, seed, blocked)
        trace.records.append(record)
        if on_step is not None:
            on_step(state)
    trace.arrivals = dict(state.arrivals)
    return trace


def _ints(values: Sequence[int]) -> str:
    return " ".join(str(v) for v in sorted(values))


def write_trace(trace: Trace, path: str | Path) -> None:
    """Line-oriented dump: ``t kind id nodes...`` plus an ``X`` summary block."""
    with open(path, "w") as fh:
        fh.write(f"# trace nodes {trace.n} center {trace.center} horizon {trace.horizon} seed {trace.seed}\n")
        for r in trace.records:
            for node, k in r.originations:
                fh.write(f"{r.t} originate {k} {node}\n")
            for name, prebunks in r.actions.items():
                fh.write(f"{r.t} deliver {name} {_ints(prebunks)}".rstrip() + "\n")
            for k, nodes in sorted(r.infections.items()):
                fh.write(f"{r.t} infect {k} {_ints(nodes)}\n")
        fh.write("# summary\n")
        for k in trace.cascades:
            x = trace.arrivals.get(k)
            fh.write(f"X {k} {'none' if x is None else x}\n")


def read_trace(path: str | Path) -> Trace:
    with open(path) as fh:
        head = fh.readline().split()
        if head[:2] != ["#", "trace"]:
            raise ValueError(f"{path}: not a trace file")
        meta = dict(zip(head[2::2], (int(v) for v in head[3::2])))
        trace = Trace(meta["nodes"], meta["center"], meta["horizon"], meta["seed"])
        by_t = {t: StepRecord(t, [], {}, {}, {}) for t in range(1, trace.horizon + 1)}
        for line in fh:
            parts = line.split()
            if not parts or parts[0] == "#":
                continue
            if parts[0] == "X":
                if parts[2] != "none":
                    trace.arrivals[int(parts[1])] = int(parts[2])
                continue
            rec = by_t[int(parts[0])]
            kind = parts[1]
            if kind == "originate":
                rec.originations.append((int(parts[3]), int(parts[2])))
            elif kind == "deliver":
                rec.actions[parts[2]] = frozenset(int(v) for v in parts[3:])
            elif kind == "infect":
                rec.infections[int(parts[2])] = frozenset(int(v) for v in parts[3:])
            else:
                raise ValueError(f"{path}: unknown event kind {kind!r}")
    for t in sorted(by_t):
        rec = by_t[t]
        rec.arrivals = {k: x for k, x in trace.arrivals.items()
                        if x == t and decode_cascade_id(k, trace.n)[0] == t
                        or x == t + 1 and k in rec.infections}
        trace.records.append(rec)
    return trace
