"""
Result tables of a set of runs, one CSV per table family. Ratios without a
denominator and columns of an absent agent type are written as ``---``.
"""
import csv
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from coauthor import GREEDY, STRATEGIC, AgentRecord, MetricsParams, Outcome, PaperRecord, UltimatumEvent, VoteRecord
from coauthor.metrics import CoreOutcomes, FitResult, core_outcomes, productivity_stats, ultimatum_aggregates

ABSENT = "---"
AGENT_TYPES = (STRATEGIC, GREEDY)

CORE_OUTCOMES_CSV = "core_outcomes.csv"
ULTIMATUM_DYNAMICS_CSV = "ultimatum_dynamics.csv"
LOTKA_STATS_CSV = "lotka_stats.csv"
GAP_ACCEPTANCE_CSV = "gap_acceptance.csv"
TIMING_CSV = "timing.csv"
UTILITY_DISTRIBUTION_CSV = "utility_distribution.csv"


@dataclass
class Composition:
    """
    Pooled records of every replicate run at one strategic share.
    """

    strategic_pct: float
    events: List[UltimatumEvent] = field(default_factory=list)
    votes: List[VoteRecord] = field(default_factory=list)
    papers: List[PaperRecord] = field(default_factory=list)
    agents: List[AgentRecord] = field(default_factory=list)
    runs: int = 0

    def of_type(self, tag: str) -> List[AgentRecord]:
        return [a for a in self.agents if a.policy == tag]


def fmt(value) -> str:
    if value is None:
        return ABSENT
    if isinstance(value, float):
        if np.isnan(value):
            return ABSENT
        return f"{value:.6g}"
    return str(value)


def _write(path: str, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _pct(c: Composition) -> str:
    return f"{c.strategic_pct:g}"


def core_outcomes_rows(compositions: Sequence[Composition],
                       horizon: Optional[int] = None) -> List[List[object]]:
    rows = []
    for c in compositions:
        o: CoreOutcomes = core_outcomes(c.events, c.papers, c.agents, horizon)
        rows.append([
            _pct(c), o.papers, o.ultimatums_per_paper, o.accepted_per_paper, o.withdrawn_per_paper,
            o.terminated_per_paper, o.completion_rate, o.destruction_rate, o.papers_per_agent,
            o.mean_utility[STRATEGIC], o.mean_utility[GREEDY], o.std_utility[STRATEGIC],
            o.std_utility[GREEDY], o.abs_advantage, o.rel_advantage_pct, o.gini["all"],
            o.gini[STRATEGIC], o.gini[GREEDY],
        ])
    return rows


CORE_OUTCOMES_COLUMNS = (
    "strategic_pct", "papers", "ultimatums_per_paper", "accepted_per_paper", "withdrawn_per_paper",
    "terminated_per_paper", "completion_rate", "destruction_rate", "papers_per_agent",
    "mean_utility_strategic", "mean_utility_greedy", "std_utility_strategic", "std_utility_greedy",
    "abs_advantage", "rel_advantage_pct", "gini_all", "gini_strategic", "gini_greedy",
)
ULTIMATUM_DYNAMICS_COLUMNS = (
    "strategic_pct", "agent_type", "raised", "initiation_rate", "accepted_share", "withdrawn_share",
    "terminated_share", "restraint", "destruction_rate", "votes", "responder_acceptance", "median_week",
)
LOTKA_STATS_COLUMNS = (
    "strategic_pct", "agent_type", "agents", "excluded", "mean_papers", "alpha", "alpha_r_squared",
    "fit_x_min", "fit_x_max", "mu", "sigma", "lognormal_r_squared", "top_share", "flagged",
)


def write_tables(compositions: Sequence[Composition], out_dir: str,
                 metrics: Optional[MetricsParams] = None, horizon: Optional[int] = None) -> List[str]:
    """
    Write every table; returns the paths written. ``horizon`` restricts the
    per-paper rates of the core outcomes to papers scheduled to end within it.
    """
    metrics = metrics or MetricsParams()
    os.makedirs(out_dir, exist_ok=True)
    compositions = sorted(compositions, key=lambda c: c.strategic_pct)

    dynamics, lotka, gaps, timing, utility = [], [], [], [], []
    for c in compositions:
        agg = ultimatum_aggregates(c.events, c.votes, c.agents, metrics.gap_buckets, metrics.timing_bin_weeks)
        for tag in AGENT_TYPES:
            members = c.of_type(tag)
            t = agg.by_type[tag]
            if not members:
                dynamics.append([_pct(c), tag] + [None] * (len(ULTIMATUM_DYNAMICS_COLUMNS) - 2))
                lotka.append([_pct(c), tag] + [None] * (len(LOTKA_STATS_COLUMNS) - 2))
                continue
            dynamics.append([
                _pct(c), tag, t.raised, t.initiation_rate, t.accepted_share, t.withdrawn_share,
                t.terminated_share, t.restraint, t.destruction_rate, t.votes, t.responder_acceptance,
                t.median_week,
            ])
            lotka.append([_pct(c), tag] + _lotka_row(members, metrics))
            utility.extend(_utility_rows(c, tag, members, metrics.utility_bins))

        for gap, share in agg.gap_acceptance.items():
            label = f"{gap}+" if gap == metrics.gap_buckets else str(gap)
            gaps.append([_pct(c), label, share])

        weeks = sorted(set(agg.by_type[GREEDY].week_histogram) | set(agg.by_type[STRATEGIC].week_histogram))
        for week in weeks:
            shares = agg.outcome_by_week.get(week, {})
            timing.append([
                _pct(c), week,
                agg.by_type[GREEDY].week_histogram.get(week, 0),
                agg.by_type[STRATEGIC].week_histogram.get(week, 0),
            ] + [shares.get(o.value) for o in Outcome])

    written = []
    for name, header, rows in (
        (CORE_OUTCOMES_CSV, CORE_OUTCOMES_COLUMNS, core_outcomes_rows(compositions, horizon)),
        (ULTIMATUM_DYNAMICS_CSV, ULTIMATUM_DYNAMICS_COLUMNS, dynamics),
        (LOTKA_STATS_CSV, LOTKA_STATS_COLUMNS, lotka),
        (GAP_ACCEPTANCE_CSV, ("strategic_pct", "gap", "acceptance"), gaps),
        (TIMING_CSV, ("strategic_pct", "week_start", "greedy_issued", "strategic_issued")
         + tuple(f"{o.value}_share" for o in Outcome), timing),
        (UTILITY_DISTRIBUTION_CSV, ("strategic_pct", "agent_type", "bin_low", "bin_high", "density"), utility),
    ):
        path = os.path.join(out_dir, name)
        _write(path, header, rows)
        written.append(path)
    return written


def _lotka_row(members: Sequence[AgentRecord], metrics: MetricsParams) -> List[object]:
    stats = productivity_stats([a.papers_completed for a in members], metrics.power_law_tail,
                               metrics.top_fraction)
    power: Optional[FitResult] = stats.power_law
    logn: Optional[FitResult] = stats.lognormal
    flagged = any(f is not None and f.flagged for f in (power, logn))
    return [
        stats.agents,
        stats.excluded,
        stats.mean_papers,
        power.params[0] if power else None,
        power.r_squared if power else None,
        power.x_range[0] if power else None,
        power.x_range[1] if power else None,
        logn.params[0] if logn else None,
        logn.params[1] if logn else None,
        logn.r_squared if logn else None,
        stats.top_share,
        int(flagged),
    ]


def _utility_rows(c: Composition, tag: str, members: Sequence[AgentRecord], bins: int) -> List[List[object]]:
    """
    Histogram density of U_total over a range shared by both agent types.
    """
    top = max((a.utility for a in c.agents), default=0.0)
    if top <= 0.0:
        return []
    density, edges = np.histogram([a.utility for a in members], bins=bins, range=(0.0, top), density=True)
    return [[_pct(c), tag, float(edges[k]), float(edges[k + 1]), float(density[k])] for k in range(bins)]


def group_compositions(runs: Sequence[Dict[str, object]]) -> List[Composition]:
    """
    Pool runs (``{"strategic_pct": ..., "log": EventLog}``) by strategic share.
    """
    pooled: Dict[float, Composition] = {}
    for run in runs:
        pct = float(run["strategic_pct"])
        log = run["log"]
        c = pooled.setdefault(pct, Composition(strategic_pct=pct))
        c.events.extend(log.ultimatums)
        c.votes.extend(log.votes)
        c.papers.extend(log.papers[k] for k in sorted(log.papers))
        c.agents.extend(log.agents)
        c.runs += 1
    return [pooled[k] for k in sorted(pooled)]
