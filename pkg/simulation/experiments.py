import csv
import json
import logging
import multiprocessing as mp
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from scipy import stats

from coauthor import (
    GREEDY,
    STRATEGIC,
    EventLog,
    RandomSource,
    Simulation,
    SimulationConfig,
    __version__,
    assign_strategic,
    load_config,
)
from coauthor.exceptions import CheckpointNotFoundError, InsufficientDataError
from coauthor.metrics import (
    MetricsRecord,
    core_outcomes,
    er_baselines,
    linear_trend,
    matured_papers,
    ultimatum_aggregates,
)
from coauthor.network import network_stats, write_snapshot
from policy import Featurizer, GreedyPolicy, QNetwork, StrategicPolicy, load_checkpoint, run_training

from .tables import group_compositions, write_tables

logger = logging.getLogger(__name__)

MANIFEST_JSON = "manifest.json"
CONFIG_JSON = "config.json"
RUN_JSON = "run.json"
TIMESERIES_CSV = "timeseries.csv"
NETWORK_CSV = "network.csv"
BASELINE_SUMMARY_JSON = "baseline_summary.json"
CALIBRATION_REPORT_JSON = "calibration_report.json"
SWEEP_SUMMARY_JSON = "sweep_summary.json"

CALIBRATION_BANDS: Dict[str, Tuple[float, float]] = {
    "ultimatums_per_paper": (0.7, 1.2),
    "completion_rate": (0.80, 0.90),
    "destruction_rate": (0.08, 0.16),
    "greedy_initiation_rate": (0.2, 0.4),
    "greedy_responder_acceptance": (0.6, 0.8),
    "greedy_terminated_share": (0.10, 0.16),
}


@dataclass
class RunInfo:
    name: str
    path: str
    strategic_pct: float
    replicate: int
    steps: int
    seconds: float


@dataclass
class ExperimentManifest:
    """
    Everything needed to re-execute an experiment, plus where its outputs went.
    """

    kind: str
    seed: int
    config: Dict[str, Any]
    version: str = __version__
    checkpoint: Optional[str] = None
    runs: List[RunInfo] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    seconds: float = 0.0

    def write(self, out_dir: str) -> str:
        path = os.path.join(out_dir, MANIFEST_JSON)
        with open(path, "w", encoding="utf-8") as fd:
            json.dump(asdict(self), fd, indent=2, sort_keys=True)
        return path


def _prepare(config: SimulationConfig, out_dir: str, kind: str) -> ExperimentManifest:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, CONFIG_JSON), "w", encoding="utf-8") as fd:
        fd.write(config.to_json())
    return ExperimentManifest(kind=kind, seed=config.seed, config=config.to_dict())


def build_simulation(config: SimulationConfig, rs: RandomSource, strategic_pct: float = 0.0,
                     qnet: Optional[QNetwork] = None, run_id: str = "run") -> Simulation:
    """
    A simulation with a uniformly drawn strategic share acting on a frozen network.
    """
    strategic = assign_strategic(config.population.n, strategic_pct / 100.0, rs.stream("population-assignment"))
    if strategic and qnet is None:
        raise CheckpointNotFoundError(f"{run_id} has strategic agents but no trained network")
    sim = Simulation(config, rs, strategic=strategic, run_id=run_id)
    sim.set_policy(GREEDY, GreedyPolicy(config.greedy, sim.streams.play))
    if qnet is not None:
        exploration = sim.stream("policy-exploration")
        sim.set_policy(STRATEGIC, StrategicPolicy(qnet, Featurizer(config, exploration), exploration,
                                                  epsilon=config.drl.eval_epsilon,
                                                  raise_hazard=config.greedy.raise_hazard))
    return sim


def write_timeseries(records: Sequence[MetricsRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(MetricsRecord.COLUMNS)
        writer.writerows(r.to_row() for r in records)


def execute_run(config: SimulationConfig, rs: RandomSource, out_dir: str, strategic_pct: float = 0.0,
                replicate: int = 0, qnet: Optional[QNetwork] = None) -> Tuple[RunInfo, Simulation, List[MetricsRecord]]:
    """
    One run with its per-run records written to ``out_dir``.
    """
    started = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    name = os.path.basename(os.path.normpath(out_dir))
    sim = build_simulation(config, rs, strategic_pct, qnet, run_id=name)
    log = EventLog().attach(sim)
    if config.metrics.snapshot_every:
        sim.snapshot_dir = os.path.join(out_dir, "snapshots")
        os.makedirs(sim.snapshot_dir, exist_ok=True)
    records = sim.run()

    log.write(out_dir)
    write_timeseries(records, os.path.join(out_dir, TIMESERIES_CSV))
    write_snapshot(sim.network, os.path.join(out_dir, NETWORK_CSV))
    with open(os.path.join(out_dir, RUN_JSON), "w", encoding="utf-8") as fd:
        json.dump({"run_id": name, "strategic_pct": strategic_pct, "replicate": replicate,
                   "steps": len(records)}, fd, indent=2, sort_keys=True)
    info = RunInfo(name=name, path=out_dir, strategic_pct=strategic_pct, replicate=replicate,
                   steps=len(records), seconds=time.monotonic() - started)
    return info, sim, records


def _production_slope(records: Sequence[MetricsRecord], late: bool) -> Optional[float]:
    quarter = max(len(records) // 4, 2)
    window = records[-quarter:] if late else records[:quarter]
    try:
        return linear_trend([float(r.completed) for r in window]).slope
    except InsufficientDataError:
        return None


def baseline_summary(sim: Simulation, records: Sequence[MetricsRecord]) -> Dict[str, Any]:
    diag = network_stats(sim.network, sim.config.metrics.path_length_sources)
    try:
        c_er, l_er = er_baselines(sim.network.n, diag.mean_degree)
    except ValueError:
        c_er = l_er = None
    ginis = [r.gini for r in records if r.gini is not None]
    return {
        "components": diag.components,
        "giant_size": diag.giant_size,
        "clustering": diag.clustering,
        "clustering_er": c_er,
        "avg_path_length": diag.avg_path_length,
        "avg_path_length_er": l_er,
        "density": diag.density,
        "mean_degree": diag.mean_degree,
        "initial_gini": ginis[0] if ginis else None,
        "final_gini": ginis[-1] if ginis else None,
        "early_production_rate": _production_slope(records, late=False),
        "late_production_rate": _production_slope(records, late=True),
    }


def run_baseline(config: SimulationConfig, out_dir: str) -> ExperimentManifest:
    """
    One pure-greedy longitudinal run.
    """
    started = time.monotonic()
    manifest = _prepare(config, out_dir, "baseline")
    info, sim, records = execute_run(config, RandomSource(config.seed), out_dir)
    manifest.runs.append(info)
    summary_path = os.path.join(out_dir, BASELINE_SUMMARY_JSON)
    with open(summary_path, "w", encoding="utf-8") as fd:
        json.dump(baseline_summary(sim, records), fd, indent=2, sort_keys=True)
    manifest.outputs = [TIMESERIES_CSV, NETWORK_CSV, BASELINE_SUMMARY_JSON]
    manifest.seconds = time.monotonic() - started
    manifest.write(out_dir)
    return manifest


def compositions(config: SimulationConfig) -> List[float]:
    return [float(p) for p in range(0, 101, config.sweep.step_pct)]


def _sweep_task(task: Tuple[SimulationConfig, Optional[str], float, int, int, str]) -> RunInfo:
    config, checkpoint, pct, index, replicate, path = task
    qnet = load_checkpoint(checkpoint, config.drl) if pct > 0 else None
    rs = RandomSource(config.seed).spawn(index).spawn(replicate)
    info, _, _ = execute_run(config, rs, path, strategic_pct=pct, replicate=replicate, qnet=qnet)
    return info


def run_sweep(config: SimulationConfig, checkpoint: Optional[str], out_dir: str, parallel: int = 1,
              replicates: Optional[int] = None) -> ExperimentManifest:
    """
    One set of runs per strategic share, all strategic agents sharing the
    frozen network in ``checkpoint``; then the result tables.
    """
    started = time.monotonic()
    shares = compositions(config)
    if any(p > 0 for p in shares):
        if checkpoint is None:
            raise CheckpointNotFoundError("a sweep with strategic agents needs --checkpoint")
        # fail before any run starts
        load_checkpoint(checkpoint, config.drl)
    manifest = _prepare(config, out_dir, "sweep")
    manifest.checkpoint = checkpoint
    replicates = replicates or config.sweep.replicates
    tasks = []
    for index, pct in enumerate(shares):
        for r in range(replicates):
            path = os.path.join(out_dir, "runs", f"pct{int(pct):03d}_rep{r}")
            tasks.append((config, checkpoint, pct, index, r, path))

    if parallel > 1:
        with mp.Pool(min(parallel, len(tasks))) as pool:
            manifest.runs = pool.map(_sweep_task, tasks)
    else:
        manifest.runs = [_sweep_task(task) for task in tasks]
    logger.info("sweep: %d runs over %d compositions", len(manifest.runs), len(shares))

    manifest.outputs = [os.path.basename(p) for p in analyze(out_dir, out_dir, config)]
    with open(os.path.join(out_dir, SWEEP_SUMMARY_JSON), "w", encoding="utf-8") as fd:
        json.dump({"completion_spearman": sweep_trend(out_dir)}, fd, indent=2, sort_keys=True)
    manifest.outputs.append(SWEEP_SUMMARY_JSON)
    manifest.seconds = time.monotonic() - started
    manifest.write(out_dir)
    return manifest


def run_train(config: SimulationConfig, out_dir: str) -> ExperimentManifest:
    started = time.monotonic()
    manifest = _prepare(config, out_dir, "train")
    result = run_training(config, out_dir)
    manifest.checkpoint = result.checkpoint
    manifest.outputs = sorted(name for name in os.listdir(out_dir) if name not in (MANIFEST_JSON, CONFIG_JSON))
    manifest.seconds = time.monotonic() - started
    manifest.write(out_dir)
    return manifest


def discover_runs(logdir: str) -> List[str]:
    found = []
    for root, dirs, files in os.walk(logdir):
        dirs.sort()
        if "events.csv" in files and "agents.csv" in files:
            found.append(root)
    return found


def _run_share(path: str) -> float:
    meta = os.path.join(path, RUN_JSON)
    if os.path.isfile(meta):
        with open(meta, encoding="utf-8") as fd:
            return float(json.load(fd)["strategic_pct"])
    log = EventLog.read(path)
    strategic = sum(1 for a in log.agents if a.policy == STRATEGIC)
    return round(100.0 * strategic / len(log.agents)) if log.agents else 0.0


def analyze(logdir: str, out_dir: Optional[str] = None,
            config: Optional[SimulationConfig] = None) -> List[str]:
    """
    Rebuild every result table from the per-run records under ``logdir``.
    """
    if config is None:
        saved = os.path.join(logdir, CONFIG_JSON)
        config = load_config(saved) if os.path.isfile(saved) else SimulationConfig()
    paths = discover_runs(logdir)
    if not paths:
        raise FileNotFoundError(f"no run records under {logdir}")
    runs = [{"strategic_pct": _run_share(p), "log": EventLog.read(p)} for p in paths]
    written = write_tables(group_compositions(runs), out_dir or logdir, config.metrics,
                           config.population.horizon_T)
    logger.info("analyzed %d runs into %s", len(runs), out_dir or logdir)
    return written


def sweep_trend(logdir: str) -> Optional[float]:
    """
    Spearman correlation between strategic share and completion rate.
    """
    table = os.path.join(logdir, "core_outcomes.csv")
    with open(table, encoding="utf-8", newline="") as fd:
        rows = [r for r in csv.DictReader(fd) if r["completion_rate"] != "---"]
    if len(rows) < 3:
        return None
    rho, _ = stats.spearmanr([float(r["strategic_pct"]) for r in rows],
                             [float(r["completion_rate"]) for r in rows])
    return float(rho)


def calibration_measures(logs: Sequence[EventLog], horizon: Optional[int] = None) -> Dict[str, Optional[float]]:
    """
    Pooled greedy measures. With ``horizon`` the per-paper rates and the
    ultimatum shares cover only papers scheduled to end within it; initiation
    rates and responder acceptance use every record.
    """
    events = [e for log in logs for e in log.ultimatums]
    if horizon is not None:
        events = [e for e in events if e.scheduled_end <= horizon]
    votes = [v for log in logs for v in log.votes]
    papers = [p for log in logs for p in log.papers.values()]
    agents = [a for log in logs for a in log.agents]
    if horizon is not None:
        papers = matured_papers(papers, horizon)
    core = core_outcomes(events, papers, agents)
    greedy = ultimatum_aggregates(events, votes, agents).by_type[GREEDY]
    return {
        "ultimatums_per_paper": core.ultimatums_per_paper,
        "accepted_per_paper": core.accepted_per_paper,
        "withdrawn_per_paper": core.withdrawn_per_paper,
        "terminated_per_paper": core.terminated_per_paper,
        "completion_rate": core.completion_rate,
        "destruction_rate": core.destruction_rate,
        "greedy_initiation_rate": greedy.initiation_rate,
        "greedy_responder_acceptance": greedy.responder_acceptance,
        "greedy_terminated_share": greedy.terminated_share,
    }


def calibrate(config: SimulationConfig, out_dir: str, seeds: int = 5) -> ExperimentManifest:
    """
    Pure-greedy runs over ``seeds`` seeds, measured against the target bands
    of the greedy parameters.
    """
    started = time.monotonic()
    manifest = _prepare(config, out_dir, "calibrate")
    root = RandomSource(config.seed)
    logs = []
    for k in range(seeds):
        info, _, _ = execute_run(config, root.spawn(k), os.path.join(out_dir, "runs", f"seed{k}"), replicate=k)
        manifest.runs.append(info)
        logs.append(EventLog.read(info.path))

    measures = calibration_measures(logs, config.population.horizon_T)
    report: Dict[str, Any] = {"greedy": asdict(config.greedy), "seeds": seeds, "measures": {}}
    for name, value in measures.items():
        entry: Dict[str, Any] = {"value": value}
        if name in CALIBRATION_BANDS:
            low, high = CALIBRATION_BANDS[name]
            entry["band"] = [low, high]
            entry["pass"] = value is not None and low <= value <= high
        report["measures"][name] = entry
    report["pass"] = all(e.get("pass", True) for e in report["measures"].values())
    with open(os.path.join(out_dir, CALIBRATION_REPORT_JSON), "w", encoding="utf-8") as fd:
        json.dump(report, fd, indent=2, sort_keys=True)
    logger.info("calibration %s", "passed" if report["pass"] else "outside target bands")

    manifest.outputs = [CALIBRATION_REPORT_JSON]
    manifest.seconds = time.monotonic() - started
    manifest.write(out_dir)
    return manifest

