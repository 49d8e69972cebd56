import logging
import math
import statistics
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .collab import GREEDY, POLICY_TAGS, STRATEGIC
from .events import AgentRecord, Outcome, PaperRecord, UltimatumEvent, VoteRecord
from .exceptions import InsufficientDataError

logger = logging.getLogger(__name__)

POWER_LAW = "power-law"
LOGNORMAL = "lognormal"


@dataclass
class MetricsRecord:
    """
    System indicators after one simulation step.
    """

    step: int
    spawned: int
    active: int
    completed: int
    terminated: int
    mean_utility: float
    utility_std: float
    gini: Optional[float]
    "None while every agent's utility is zero."
    clustering: Optional[float] = None
    components: Optional[int] = None
    density: Optional[float] = None
    avg_path_length: Optional[float] = None

    COLUMNS = ("step", "spawned", "active", "completed", "terminated", "mean_utility",
               "utility_std", "gini", "clustering", "components", "density", "avg_path_length")

    def to_row(self) -> List[object]:
        return ["" if getattr(self, name) is None else getattr(self, name) for name in self.COLUMNS]


@dataclass(frozen=True)
class FitResult:
    model: str
    params: Tuple[float, ...]
    "(alpha,) for the power law, (mu, sigma) for the lognormal."
    r_squared: float
    x_range: Tuple[float, float]
    points: int

    @property
    def flagged(self) -> bool:
        return math.isnan(self.r_squared) or not 0.0 <= self.r_squared <= 1.0


@dataclass(frozen=True)
class TrendFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass
class TypeAggregates:
    """
    Ultimatum statistics of one agent type. Ratios without a denominator are None.
    """

    raised: int = 0
    initiation_rate: Optional[float] = None
    accepted_share: Optional[float] = None
    withdrawn_share: Optional[float] = None
    terminated_share: Optional[float] = None
    restraint: Optional[float] = None
    destruction_rate: Optional[float] = None
    votes: int = 0
    responder_acceptance: Optional[float] = None
    median_week: Optional[float] = None
    week_histogram: Dict[int, int] = field(default_factory=dict)
    "Issuance count per bin, keyed by the first week of the bin."


@dataclass
class UltimatumAggregates:
    total: int
    by_type: Dict[str, TypeAggregates]
    gap_acceptance: Dict[int, Optional[float]]
    "Accepted share per position gap; the last bucket holds every larger gap."
    outcome_by_week: Dict[int, Dict[str, float]]


def _ratio(numerator: float, denominator: float) -> Optional[float]:
    return numerator / denominator if denominator else None


def gini(values: Iterable[float]) -> float:
    """
    Population Gini coefficient, sum |x_i - x_j| / (2 n^2 mean).
    """
    x = np.sort(np.asarray(list(values), dtype=float))
    if x.size == 0:
        raise InsufficientDataError("gini of an empty sample")
    if np.any(x < 0):
        raise ValueError("gini expects non-negative values")
    total = x.sum()
    if total <= 0.0:
        raise InsufficientDataError("gini needs at least one positive value")
    n = x.size
    ranks = np.arange(1, n + 1)
    return float(np.sum((2 * ranks - n - 1) * x) / (n * total))


def ccdf(values: Iterable[float]) -> List[Tuple[float, float]]:
    x = np.asarray(list(values), dtype=float)
    if x.size == 0:
        raise InsufficientDataError("ccdf of an empty sample")
    unique, counts = np.unique(x, return_counts=True)
    below = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return [(float(u), float((x.size - b) / x.size)) for u, b in zip(unique, below)]


def fit_power_law(points: Sequence[Tuple[float, float]], tail_fraction: float = 0.5) -> FitResult:
    """
    OLS of log P on log x over the upper ``tail_fraction`` of the CCDF points.
    """
    usable = sorted((x, p) for x, p in points if x > 0 and p > 0)
    k = int(math.ceil(len(usable) * tail_fraction))
    tail = usable[len(usable) - k:]
    if len(tail) < 3:
        raise InsufficientDataError(f"power-law fit needs 3 tail points, got {len(tail)}")
    lx = np.log([x for x, _ in tail])
    lp = np.log([p for _, p in tail])
    result = stats.linregress(lx, lp)
    return FitResult(
        model=POWER_LAW,
        params=(float(-result.slope),),
        r_squared=float(result.rvalue ** 2),
        x_range=(tail[0][0], tail[-1][0]),
        points=len(tail),
    )


def fit_lognormal(counts: Iterable[float]) -> FitResult:
    """
    Maximum-likelihood lognormal; R^2 compares log CCDFs, empirical against fitted.
    """
    x = np.asarray(list(counts), dtype=float)
    if x.size == 0:
        raise InsufficientDataError("lognormal fit of an empty sample")
    if np.any(x <= 0):
        raise ValueError("lognormal fit expects positive counts")
    logs = np.log(x)
    mu, sigma = float(logs.mean()), float(logs.std())
    points = ccdf(x)
    r_squared = math.nan
    if sigma > 0 and len(points) >= 2:
        xs = np.array([p[0] for p in points])
        observed = np.log([p[1] for p in points])
        fitted = np.log(np.clip(stats.lognorm.sf(xs, s=sigma, scale=math.exp(mu)), 1e-300, None))
        total = np.sum((observed - observed.mean()) ** 2)
        if total > 0:
            r_squared = float(1.0 - np.sum((observed - fitted) ** 2) / total)
    return FitResult(
        model=LOGNORMAL,
        params=(mu, sigma),
        r_squared=r_squared,
        x_range=(float(x.min()), float(x.max())),
        points=len(points),
    )


def er_baselines(n: int, mean_degree: float) -> Tuple[float, float]:
    """
    Clustering and path length of an Erdos-Renyi graph of the same size and density.
    """
    if mean_degree <= 1:
        raise ValueError(f"mean degree must exceed 1, got {mean_degree}")
    return mean_degree / n, math.log(n) / math.log(mean_degree)


def top_share(counts: Iterable[float], fraction: float = 0.10) -> float:
    x = sorted((float(c) for c in counts), reverse=True)
    if not x:
        raise InsufficientDataError("top share of an empty sample")
    total = sum(x)
    if total <= 0:
        return 0.0
    return sum(x[:int(math.ceil(fraction * len(x)))]) / total


def linear_trend(series: Sequence[float]) -> TrendFit:
    if len(series) < 2:
        raise InsufficientDataError("trend needs at least two points")
    result = stats.linregress(np.arange(len(series), dtype=float), np.asarray(series, dtype=float))
    return TrendFit(slope=float(result.slope), intercept=float(result.intercept),
                    r_squared=float(result.rvalue ** 2))


def moving_average(series: Sequence[float], window: int) -> List[float]:
    if len(series) < window:
        return []
    kernel = np.ones(window) / window
    return [float(v) for v in np.convolve(np.asarray(series, dtype=float), kernel, mode="valid")]


def ultimatum_aggregates(events: Sequence[UltimatumEvent], votes: Sequence[VoteRecord],
                         agents: Sequence[AgentRecord], gap_buckets: int = 7,
                         bin_weeks: int = 4) -> UltimatumAggregates:
    by_type: Dict[str, TypeAggregates] = {}
    for tag in POLICY_TAGS:
        own = [e for e in events if e.issuer_policy == tag]
        counts = {o: sum(1 for e in own if e.outcome is o) for o in Outcome}
        failed = counts[Outcome.WITHDRAWN] + counts[Outcome.TERMINATED]
        rates = [a.n_raise / a.papers_joined for a in agents if a.policy == tag and a.papers_joined > 0]
        own_votes = [v for v in votes if v.responder_policy == tag]
        histogram: Dict[int, int] = {}
        for e in own:
            start = (e.week - 1) // bin_weeks * bin_weeks + 1
            histogram[start] = histogram.get(start, 0) + 1
        by_type[tag] = TypeAggregates(
            raised=len(own),
            initiation_rate=statistics.fmean(rates) if rates else None,
            accepted_share=_ratio(counts[Outcome.ACCEPTED], len(own)),
            withdrawn_share=_ratio(counts[Outcome.WITHDRAWN], len(own)),
            terminated_share=_ratio(counts[Outcome.TERMINATED], len(own)),
            restraint=_ratio(counts[Outcome.WITHDRAWN], failed),
            destruction_rate=_ratio(counts[Outcome.TERMINATED], len(own)),
            votes=len(own_votes),
            responder_acceptance=_ratio(sum(1 for v in own_votes if v.accepted), len(own_votes)),
            median_week=float(statistics.median(e.week for e in own)) if own else None,
            week_histogram=dict(sorted(histogram.items())),
        )

    gap_acceptance: Dict[int, Optional[float]] = {}
    for gap in range(1, gap_buckets + 1):
        bucket = [e for e in events if min(e.gap, gap_buckets) == gap]
        gap_acceptance[gap] = _ratio(sum(1 for e in bucket if e.outcome is Outcome.ACCEPTED), len(bucket))

    outcome_by_week: Dict[int, Dict[str, float]] = {}
    for e in events:
        start = (e.week - 1) // bin_weeks * bin_weeks + 1
        cell = outcome_by_week.setdefault(start, {o.value: 0.0 for o in Outcome})
        cell[e.outcome.value] += 1
    for cell in outcome_by_week.values():
        total = sum(cell.values())
        for key in cell:
            cell[key] /= total

    return UltimatumAggregates(
        total=len(events),
        by_type=by_type,
        gap_acceptance=gap_acceptance,
        outcome_by_week=dict(sorted(outcome_by_week.items())),
    )


@dataclass
class CoreOutcomes:
    """
    Paper throughput and utility indicators of one population composition.
    """

    strategic_pct: float
    papers: int
    ultimatums_per_paper: Optional[float]
    accepted_per_paper: Optional[float]
    withdrawn_per_paper: Optional[float]
    terminated_per_paper: Optional[float]
    completion_rate: Optional[float]
    destruction_rate: Optional[float]
    papers_per_agent: Optional[float]
    mean_utility: Dict[str, Optional[float]]
    std_utility: Dict[str, Optional[float]]
    abs_advantage: Optional[float]
    rel_advantage_pct: Optional[float]
    gini: Dict[str, Optional[float]]


def _maybe_gini(values: List[float]) -> Optional[float]:
    try:
        return gini(values)
    except InsufficientDataError:
        return None


def matured_papers(papers: Sequence[PaperRecord], horizon: int) -> List[PaperRecord]:
    """
    Papers whose scheduled end falls within ``horizon`` steps.
    """
    return [p for p in papers if p.scheduled_end <= horizon]


def core_outcomes(events: Sequence[UltimatumEvent], papers: Sequence[PaperRecord],
                  agents: Sequence[AgentRecord], horizon: Optional[int] = None) -> CoreOutcomes:
    """
    Rates are per paper. With ``horizon`` only papers whose scheduled end
    falls within it (``start_step + duration <= horizon``) and their
    ultimatums count, so papers cut off by the horizon do not read as
    unfinished; without it every spawned paper counts.
    """
    if horizon is not None:
        papers = matured_papers(papers, horizon)
        events = [e for e in events if e.scheduled_end <= horizon]
    n_papers = len(papers)
    groups = {
        "all": [a.utility for a in agents],
        STRATEGIC: [a.utility for a in agents if a.policy == STRATEGIC],
        GREEDY: [a.utility for a in agents if a.policy == GREEDY],
    }
    mean = {k: float(np.mean(v)) if v else None for k, v in groups.items()}
    std = {k: float(np.std(v)) if v else None for k, v in groups.items()}
    advantage = None
    relative = None
    if mean[STRATEGIC] is not None and mean[GREEDY] is not None:
        advantage = mean[STRATEGIC] - mean[GREEDY]
        relative = _ratio(100.0 * advantage, mean[GREEDY])
    outcome = {o: sum(1 for e in events if e.outcome is o) for o in Outcome}
    return CoreOutcomes(
        strategic_pct=100.0 * len(groups[STRATEGIC]) / len(agents) if agents else 0.0,
        papers=n_papers,
        ultimatums_per_paper=_ratio(len(events), n_papers),
        accepted_per_paper=_ratio(outcome[Outcome.ACCEPTED], n_papers),
        withdrawn_per_paper=_ratio(outcome[Outcome.WITHDRAWN], n_papers),
        terminated_per_paper=_ratio(outcome[Outcome.TERMINATED], n_papers),
        completion_rate=_ratio(sum(1 for p in papers if p.status == "completed"), n_papers),
        destruction_rate=_ratio(sum(1 for p in papers if p.status == "terminated"), n_papers),
        papers_per_agent=float(np.mean([a.papers_completed for a in agents])) if agents else None,
        mean_utility=mean,
        std_utility=std,
        abs_advantage=advantage,
        rel_advantage_pct=relative,
        gini={k: _maybe_gini(v) if v else None for k, v in groups.items()},
    )


@dataclass
class ProductivityStats:
    agents: int
    "Agents with at least one completed paper, the ones the fits use."
    excluded: int
    "Agents without completed papers."
    mean_papers: Optional[float]
    power_law: Optional[FitResult]
    lognormal: Optional[FitResult]
    top_share: Optional[float]


def productivity_stats(counts: Sequence[int], tail_fraction: float = 0.5,
                       top_fraction: float = 0.1) -> ProductivityStats:
    positive = [c for c in counts if c > 0]
    power_law = lognormal = None
    if positive:
        try:
            power_law = fit_power_law(ccdf(positive), tail_fraction)
        except InsufficientDataError:
            logger.debug("too few distinct productivities for a power-law fit")
        lognormal = fit_lognormal(positive)
    return ProductivityStats(
        agents=len(positive),
        excluded=len(counts) - len(positive),
        mean_papers=float(np.mean(counts)) if counts else None,
        power_law=power_law,
        lognormal=lognormal,
        top_share=top_share(counts, top_fraction) if counts else None,
    )
