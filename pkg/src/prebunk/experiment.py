"""Policy comparison and inoculation experiments on Chung-Lu networks.

Seeds are derived deterministically from the master seed and replicate index,
so results do not depend on execution order or the number of workers.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cascade import SI_STREAM, OriginationParams, si_step_mask, simulate, substream
from .config import ExperimentConfig
from .cost import ActionLog, cost_series, feasibility_check
from .netgraph import (
    WeightedDigraph,
    chung_lu_generate,
    local_neighborhood,
    power_law_weights,
    undirected_diameter,
)
from .policy import PolicyHook, make_policy

log = logging.getLogger(__name__)

GRAPH_STREAM = 10
CENTER_STREAM = 11
ORIGINS_STREAM = 12


def derive_seed(*keys: int) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def build_graph(cfg: ExperimentConfig, seed: int) -> WeightedDigraph:
    gc = cfg.graph
    w = power_law_weights(gc.n, gc.C, gc.gamma)
    return chung_lu_generate(w, substream(seed, GRAPH_STREAM), prune_threshold=gc.prune)


def pick_center(g: WeightedDigraph, seed: int) -> int:
    """Uniform random node with at least one neighbor."""
    deg = np.bincount(np.concatenate((g.src, g.dst)), minlength=g.n)
    candidates = np.flatnonzero(deg > 0) + 1
    if candidates.size == 0:
        raise ValueError("graph has no edges; cannot choose a guarded user")
    return int(substream(seed, CENTER_STREAM).choice(candidates))


@dataclass(frozen=True)
class ComparisonRow:
    policy: str
    m: int
    replicate: int
    seed: int
    C_A: float
    feasible: bool
    count: int


@dataclass(frozen=True)
class AggregateRow:
    policy: str
    m: int
    n: int
    mean_C_A: float
    std_C_A: float
    stderr_C_A: float
    C_pi_hat: float


@dataclass
class ComparisonResult:
    rows: list[ComparisonRow]
    beta: float
    # max_t of the replicate-mean c(A, t), per (policy, m)
    expected_peaks: dict[tuple[str, int], float] = field(default_factory=dict)

    def aggregates(self) -> list[AggregateRow]:
        groups: dict[tuple[str, int], list[float]] = {}
        for r in self.rows:
            groups.setdefault((r.policy, r.m), []).append(r.C_A)
        out = []
        for (policy, m), values in sorted(groups.items()):
            v = np.array(values)
            std = float(v.std(ddof=1)) if v.size > 1 else 0.0
            out.append(AggregateRow(
                policy, m, v.size, float(v.mean()), std, std / math.sqrt(v.size),
                self.expected_peaks.get((policy, m), math.nan),
            ))
        return out

    def mean_cost(self, policy: str, m: int) -> float:
        return float(np.mean([r.C_A for r in self.rows if r.policy == policy and r.m == m]))

    def select(self, policy: str, m: int) -> list[ComparisonRow]:
        return sorted(
            (r for r in self.rows if r.policy == policy and r.m == m),
            key=lambda r: r.replicate,
        )


def run_guarded(cfg: ExperimentConfig, g: WeightedDigraph, center: int, m: int, seed: int):
    """Simulate one trace on the m-neighborhood of ``center`` under every policy.

    Returns ``(trace, {policy: ActionLog}, neighborhood)``.  Policies only
    observe; the trace is the same whichever policies are attached.
    """
    nb = local_neighborhood(g, center, m, directed=cfg.guard.neighborhood == "directed")
    dyn = cfg.dynamics
    params = OriginationParams(
        q=dyn.q, max_active=dyn.cap, center=nb.center,
        q_center_zero=dyn.assumption3, allow_infected_origin=dyn.allow_infected_origin,
    )
    est = cfg.estimator
    policies = {
        name: make_policy(
            name, nb, nb.center, seed, samples=est.samples, statistic=est.statistic,
            quantile=est.quantile, cap_factor=est.cap_factor, resolve_every=est.resolve_every,
        )
        for name in cfg.guard.policies
    }
    hook = PolicyHook(policies, nb.subgraph.in_neighbor_mask(nb.center))
    trace = simulate(nb.subgraph, nb.center, params, dyn.horizon, seed, hook)
    logs = {name: ActionLog.from_trace(trace, name) for name in policies}
    return trace, logs, nb


def _comparison_replicate(cfg: ExperimentConfig, r: int):
    rep_seed = derive_seed(cfg.seed, r)
    g = build_graph(cfg, rep_seed)
    center = pick_center(g, rep_seed)
    diam = undirected_diameter(g)
    rows, series = [], {}
    for m in cfg.guard.ms:
        if m > diam.value:
            log.warning("replicate %d: m=%d exceeds graph diameter %d, skipped", r, m, diam.value)
            continue
        run_seed = derive_seed(rep_seed, m)
        trace, logs, _ = run_guarded(cfg, g, center, m, run_seed)
        for name, alog in logs.items():
            s = cost_series(alog, cfg.guard.beta)
            series[(name, m)] = s
            rows.append(ComparisonRow(
                name, m, r, run_seed, float(s.max()) if s.size else 0.0,
                feasibility_check(trace, alog).all_feasible,
                sum(len(a) for a in alog.actions),
            ))
    return rows, series


def run_comparison(cfg: ExperimentConfig, jobs: int | None = None) -> ComparisonResult:
    jobs = cfg.jobs if jobs is None else jobs
    reps = range(cfg.replicates)
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_comparison_replicate, [cfg] * len(reps), reps))
    else:
        results = [_comparison_replicate(cfg, r) for r in reps]
    rows = sorted(
        (row for rep_rows, _ in results for row in rep_rows),
        key=lambda r: (r.policy, r.m, r.replicate),
    )
    stacked: dict[tuple[str, int], list[np.ndarray]] = {}
    for _, series in results:
        for key, s in series.items():
            stacked.setdefault(key, []).append(s)
    peaks = {key: float(np.mean(v, axis=0).max()) for key, v in stacked.items()}
    return ComparisonResult(rows, cfg.guard.beta, peaks)


@dataclass(frozen=True)
class InoculationRow:
    ratio: float
    cascade_id: int
    t: int
    percent: float


@dataclass
class InoculationResult:
    rows: list[InoculationRow]

    @property
    def ratios(self) -> list[float]:
        return sorted({r.ratio for r in self.rows})

    def curves(self, ratio: float) -> dict[int, np.ndarray]:
        out: dict[int, list[tuple[int, float]]] = {}
        for r in self.rows:
            if r.ratio == ratio:
                out.setdefault(r.cascade_id, []).append((r.t, r.percent))
        return {k: np.array([p for _, p in sorted(v)]) for k, v in sorted(out.items())}

    def mean_curve(self, ratio: float) -> np.ndarray:
        return np.mean(list(self.curves(ratio).values()), axis=0)

    def time_to_percent(self, ratio: float, level: float = 50.0) -> np.ndarray:
        """First step each cascade reaches ``level`` percent.

        Cascades that never get there within the horizon are censored at
        ``horizon + 1``.
        """
        out = []
        for curve in self.curves(ratio).values():
            idx = np.flatnonzero(curve >= level)
            out.append(float(idx[0]) if idx.size else float(curve.size))
        return np.array(out)


def run_inoculation(cfg: ExperimentConfig, ratios: list[float] | None = None) -> InoculationResult:
    """SI cascades with the top-weight nodes inoculated (never infected, never spreading).

    The same graph, origins and random substreams are used for every ratio.
    Origins are drawn among nodes that have an out-edge and are not
    inoculated at the largest ratio.  Percentages count infected users among
    the non-inoculated ones, from the step the cascade appears.
    """
    ratios = list(cfg.inoculation.ratios if ratios is None else ratios)
    if any(not 0 <= r < 1 for r in ratios):
        raise ValueError("inoculation ratios must lie in [0, 1)")
    seed = derive_seed(cfg.seed, 0)
    g = build_graph(cfg, seed)
    n = g.n
    top = max((math.ceil(r * n) for r in ratios), default=0)
    has_out = np.zeros(n, dtype=bool)
    has_out[g.src] = True
    eligible = np.flatnonzero(has_out & (np.arange(n) >= top)) + 1
    rng = substream(seed, ORIGINS_STREAM)
    origins = rng.choice(eligible, size=cfg.inoculation.cascades, replace=eligible.size < cfg.inoculation.cascades)
    horizon = cfg.inoculation.horizon
    rows = []
    for ratio in ratios:
        # weights decrease with node id, so the highest expected degrees are 1..k
        k_block = math.ceil(ratio * n)
        blocked = np.zeros(n, dtype=bool)
        blocked[:k_block] = True
        denom = n - k_block
        for cid, origin in enumerate(origins, start=1):
            mask = np.zeros(n, dtype=bool)
            mask[origin - 1] = True
            rows.append(InoculationRow(ratio, cid, 0, float(100.0 * mask.sum() / denom)))
            for t in range(1, horizon + 1):
                mask |= si_step_mask(g, mask, substream(seed, SI_STREAM, t, cid), blocked)
                rows.append(InoculationRow(ratio, cid, t, float(100.0 * mask.sum() / denom)))
    return InoculationResult(rows)


COMPARISON_COLUMNS = ["policy", "m", "replicate", "seed", "C_A", "feasible", "count", "beta"]
AGGREGATE_COLUMNS = ["policy", "m", "n", "mean_C_A", "std_C_A", "stderr_C_A", "C_pi_hat", "beta"]
INOCULATION_COLUMNS = ["ratio", "cascade_id", "t", "percent"]


def emit_comparison_csv(result: ComparisonResult, path: str | Path) -> None:
    """Raw rows, then a ``# aggregate`` line and the per-(policy, m) block."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COMPARISON_COLUMNS)
        for r in sorted(result.rows, key=lambda r: (r.policy, r.m, r.replicate)):
            w.writerow([r.policy, r.m, r.replicate, r.seed, repr(r.C_A), int(r.feasible), r.count, repr(result.beta)])
        aggs = result.aggregates()
        if aggs:
            fh.write("# aggregate\n")
            w.writerow(AGGREGATE_COLUMNS)
            for a in aggs:
                w.writerow([a.policy, a.m, a.n, repr(a.mean_C_A), repr(a.std_C_A),
                            repr(a.stderr_C_A), repr(a.C_pi_hat), repr(result.beta)])


def parse_comparison_csv(path: str | Path) -> ComparisonResult:
    rows, peaks, beta = [], {}, math.nan
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if "# aggregate" in lines:
        cut = lines.index("# aggregate")
        raw, agg = lines[:cut], lines[cut + 1:]
    else:
        raw, agg = lines, []
    for rec in csv.DictReader(raw):
        beta = float(rec["beta"])
        rows.append(ComparisonRow(
            rec["policy"], int(rec["m"]), int(rec["replicate"]), int(rec["seed"]),
            float(rec["C_A"]), rec["feasible"] == "1", int(rec["count"]),
        ))
    for rec in csv.DictReader(agg):
        beta = float(rec["beta"])
        peaks[(rec["policy"], int(rec["m"]))] = float(rec["C_pi_hat"])
    return ComparisonResult(rows, beta, peaks)


def emit_inoculation_csv(result: InoculationResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(INOCULATION_COLUMNS)
        for r in sorted(result.rows, key=lambda r: (r.ratio, r.cascade_id, r.t)):
            w.writerow([repr(r.ratio), r.cascade_id, r.t, repr(r.percent)])


def parse_inoculation_csv(path: str | Path) -> InoculationResult:
    with open(path, newline="") as fh:
        return InoculationResult([
            InoculationRow(float(r["ratio"]), int(r["cascade_id"]), int(r["t"]), float(r["percent"]))
            for r in csv.DictReader(fh)
        ])
