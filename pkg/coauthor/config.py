import configparser
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Mapping, Optional, get_type_hints

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

CONTRIBUTION_MODES = ("equal", "dirichlet")


def _check(condition: bool, name: str, constraint: str) -> None:
    if not condition:
        raise ConfigError(name, constraint)


@dataclass(frozen=True)
class PopulationParams:
    n: int = 10000
    "Number of agents."
    horizon_T: int = 1565
    "Number of simulation steps (weeks)."
    paper_spawn_rate_per_agent: float = 0.001
    "Expected new papers per idle-capable agent per step."
    max_concurrent_papers_per_agent: int = 5
    "An agent on this many active papers is saturated."

    def validate(self) -> None:
        _check(self.n >= 2, "population.n", "n >= 2")
        _check(self.horizon_T >= 1, "population.horizon_T", "horizon_T >= 1")
        _check(0.0 <= self.paper_spawn_rate_per_agent <= 1.0,
               "population.paper_spawn_rate_per_agent", "spawn rate in [0, 1]")
        _check(self.max_concurrent_papers_per_agent >= 1,
               "population.max_concurrent_papers_per_agent", "capacity >= 1")


@dataclass(frozen=True)
class NetworkParams:
    lambda_friendship: float = 3.0
    "Poisson mean of the desired friendship degree."
    mu_w: float = 0.5
    "Mean of the initial edge-weight normal, clamped into (0, 1]."
    sigma_w: float = 0.2
    "Standard deviation of the initial edge-weight normal."
    exploration_mean: float = 0.05
    "Mean exploration probability e_i."
    exploration_std: float = 0.02
    "Standard deviation of e_i, clamped into [0, 1]."

    def validate(self) -> None:
        _check(self.lambda_friendship > 0, "network.lambda_friendship", "lambda_friendship > 0")
        _check(self.sigma_w >= 0, "network.sigma_w", "sigma_w >= 0")
        _check(self.exploration_std >= 0, "network.exploration_std", "exploration_std >= 0")


@dataclass(frozen=True)
class CollabParams:
    lambda_K: float = 3.0
    "Poisson mean of the clique size before projection."
    K_max: int = 8
    "Maximal clique size."
    duration_min: int = 8
    "Shortest paper duration t1 in weeks."
    duration_max: int = 88
    "Longest paper duration t2 in weeks."
    contribution_mode: str = "equal"
    "Weekly contribution generator: ``equal`` or ``dirichlet``."
    dirichlet_concentration: float = 5.0
    "Symmetric Dirichlet concentration of the ``dirichlet`` mode."

    def validate(self) -> None:
        _check(self.lambda_K > 0, "collab.lambda_K", "lambda_K > 0")
        _check(self.K_max >= 2, "collab.K_max", "K_max >= 2")
        _check(self.duration_min >= 1, "collab.duration_min", "duration_min >= 1")
        _check(self.duration_max > self.duration_min, "collab.duration_max",
               "duration_max > duration_min")
        _check(self.contribution_mode in CONTRIBUTION_MODES, "collab.contribution_mode",
               "one of {}".format(", ".join(CONTRIBUTION_MODES)))
        _check(self.dirichlet_concentration > 0, "collab.dirichlet_concentration",
               "dirichlet_concentration > 0")


@dataclass(frozen=True)
class UtilityParams:
    u0_min: float = 10.0
    "Lower end of the base utility range."
    u0_max: float = 100.0
    "Upper end of the base utility range."
    eta_min: float = 0.5
    "Lower end of the position-utility decay range."
    eta_max: float = 0.8
    "Upper end of the position-utility decay range."
    xi: float = 0.1
    "Position-utility offset."
    rho: float = 0.05
    "Economic discount rate per discount period."
    discount_period: int = 52
    "Weeks per discount period; 1 discounts every step."

    def validate(self) -> None:
        _check(0 < self.u0_min <= self.u0_max, "utility.u0_min", "0 < u0_min <= u0_max")
        _check(0 < self.eta_min <= self.eta_max < 1, "utility.eta_min",
               "0 < eta_min <= eta_max < 1")
        _check(self.xi > 0, "utility.xi", "xi > 0")
        _check(0 <= self.rho <= 1, "utility.rho", "rho in [0, 1]")
        _check(self.discount_period >= 1, "utility.discount_period", "discount_period >= 1")


@dataclass(frozen=True)
class ReputationParams:
    delta_success: float = 0.1
    "Weight increment between co-authors of a completed paper."
    delta_withdraw: float = 0.05
    "Weight decrement between a withdrawing issuer and its co-authors."
    gamma_base: float = 0.2
    "Base reputation penalty of a destructive issuer."
    theta_scale: float = 0.5
    "Penalty scale applied to the largest co-member contribution."
    alpha_decay: float = 1.0
    "Exponential decay of the spillover with path strength."
    epsilon_cut: float = 0.01
    "Weights at or below this threshold are removed."

    def validate(self) -> None:
        for name in ("delta_success", "delta_withdraw", "gamma_base", "theta_scale", "alpha_decay"):
            _check(getattr(self, name) > 0, f"reputation.{name}", f"{name} > 0")
        _check(0 < self.epsilon_cut < 1, "reputation.epsilon_cut", "epsilon_cut in (0, 1)")


@dataclass(frozen=True)
class GreedyParams:
    raise_hazard: float = 0.012
    "Weekly probability that an author gets the opportunity to raise, for both policies."
    p_insist: float = 0.5
    "Prior probability that a refused issuer insists, as perceived by responders."
    lambda_loss: float = 3.0
    "Weight of invested contribution in escalation losses."
    p_commit: float = 0.22
    "Probability that a refused greedy issuer is committed to insisting."

    def validate(self) -> None:
        for name in ("raise_hazard", "p_insist", "p_commit"):
            _check(0 <= getattr(self, name) <= 1, f"greedy.{name}", f"{name} in [0, 1]")
        _check(self.lambda_loss >= 0, "greedy.lambda_loss", "lambda_loss >= 0")


@dataclass(frozen=True)
class DrlParams:
    learning_rate: float = 1e-4
    "Adam step size."
    gamma_rl: float = 0.99
    "Discount of the Bellman target."
    eps0: float = 1.0
    "Initial exploration rate."
    eps_final: float = 0.01
    "Exploration floor."
    eps_decay: float = 0.9825
    "Per-episode multiplicative exploration decay."
    replay_capacity: int = 100000
    "Replay buffer capacity."
    batch_size: int = 32
    "Minibatch size."
    target_update_every: int = 1000
    "Gradient steps between target-network syncs."
    episodes: int = 500
    "Training episodes."
    lambda_destr: float = 1.0
    "Destruction penalty per unit of invested contribution."
    lambda_deg: float = 0.0
    "Weighted-degree shaping coefficient."
    hidden_dim: int = 128
    "Width of the fusion trunk."
    encoder_dim: int = 64
    "Width of each feature-group encoder layer."
    paper_dim: int = 14
    "Paper feature block width."
    agent_dim: int = 8
    "Agent feature block width."
    network_dim: int = 5
    "Network feature block width."
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    conversion_every: int = 10
    "Episodes between greedy-to-strategic conversions."
    conversion_target: float = 0.8
    "Strategic fraction reached after conversion_target of the episodes."
    train_every: int = 1
    "Simulation steps between gradient updates."
    updates_per_train: int = 1
    "Gradient updates per training call."
    learning_starts: int = 1000
    "Transitions required before the first update."
    ego_sample_cap: int = 50
    "Largest two-hop ego set used for the mean path strength feature."
    record_greedy_transitions: bool = True
    "Store decisions of greedy agents in the replay buffer during training."
    checkpoint_every: int = 50
    "Episodes between intermediate checkpoints."
    eval_epsilon: float = 0.0
    "Exploration rate of frozen strategic agents in evaluation runs."

    def validate(self) -> None:
        _check(self.learning_rate > 0, "drl.learning_rate", "learning_rate > 0")
        _check(0 < self.gamma_rl < 1, "drl.gamma_rl", "gamma_rl in (0, 1)")
        _check(0 <= self.eps_final <= self.eps0 <= 1, "drl.eps_final", "0 <= eps_final <= eps0 <= 1")
        _check(0 < self.eps_decay <= 1, "drl.eps_decay", "eps_decay in (0, 1]")
        _check(self.batch_size >= 1, "drl.batch_size", "batch_size >= 1")
        _check(self.replay_capacity >= self.batch_size, "drl.replay_capacity",
               "replay_capacity >= batch_size")
        _check(self.target_update_every >= 1, "drl.target_update_every", "target_update_every >= 1")
        _check(self.episodes >= 1, "drl.episodes", "episodes >= 1")
        _check(self.lambda_destr >= 0, "drl.lambda_destr", "lambda_destr >= 0")
        for name in ("hidden_dim", "encoder_dim", "paper_dim", "agent_dim", "network_dim",
                     "conversion_every", "train_every", "updates_per_train", "ego_sample_cap",
                     "checkpoint_every"):
            _check(getattr(self, name) > 0, f"drl.{name}", f"{name} > 0")
        _check(0 < self.conversion_target <= 1, "drl.conversion_target", "conversion_target in (0, 1]")
        _check(0 <= self.eval_epsilon <= 1, "drl.eval_epsilon", "eval_epsilon in [0, 1]")
        _check(0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1, "drl.adam_beta1",
               "adam betas in [0, 1)")


@dataclass(frozen=True)
class MetricsParams:
    network_every: int = 10
    "Steps between network diagnostics in the time series."
    path_length_sources: int = 500
    "BFS sources for the giant-component path length; exact when 0 or when the component is no larger."
    snapshot_every: int = 0
    "Steps between intermediate network snapshots, 0 disables them."
    power_law_tail: float = 0.5
    "Upper fraction of unique productivity values used for the power-law fit."
    top_fraction: float = 0.1
    "Fraction of most productive agents for the top-share statistic."
    timing_bin_weeks: int = 4
    "Width of the issuance-week histogram bins."
    gap_buckets: int = 7
    "Largest position gap reported on its own."
    utility_bins: int = 20
    "Bins of the utility distribution histograms."

    def validate(self) -> None:
        _check(self.network_every >= 1, "metrics.network_every", "network_every >= 1")
        _check(self.snapshot_every >= 0, "metrics.snapshot_every", "snapshot_every >= 0")
        _check(self.path_length_sources >= 0, "metrics.path_length_sources",
               "path_length_sources >= 0")
        _check(0 < self.power_law_tail <= 1, "metrics.power_law_tail", "power_law_tail in (0, 1]")
        _check(0 < self.top_fraction <= 1, "metrics.top_fraction", "top_fraction in (0, 1]")
        for name in ("timing_bin_weeks", "gap_buckets", "utility_bins"):
            _check(getattr(self, name) >= 1, f"metrics.{name}", f"{name} >= 1")


@dataclass(frozen=True)
class SweepParams:
    step_pct: int = 10
    "Strategic percentage increment between compositions."
    replicates: int = 1
    "Independent runs per composition."

    def validate(self) -> None:
        _check(1 <= self.step_pct <= 100 and 100 % self.step_pct == 0, "sweep.step_pct",
               "step_pct divides 100")
        _check(self.replicates >= 1, "sweep.replicates", "replicates >= 1")


SECTIONS = {
    "population": PopulationParams,
    "network": NetworkParams,
    "collab": CollabParams,
    "utility": UtilityParams,
    "reputation": ReputationParams,
    "greedy": GreedyParams,
    "drl": DrlParams,
    "metrics": MetricsParams,
    "sweep": SweepParams,
}

# desk presets raise the spawn rate so that agents publish about as many papers over the
# shorter horizon as they do over the full one
PROFILES: Dict[str, Dict[str, Dict[str, Any]]] = {
    "eval": {"population": {"n": 10000, "horizon_T": 1565}},
    "train": {"population": {"n": 1000, "horizon_T": 1565}, "drl": {"episodes": 500}},
    "desk-eval": {
        "population": {"n": 500, "horizon_T": 400, "paper_spawn_rate_per_agent": 0.015},
    },
    "desk-train": {
        "population": {"n": 200, "horizon_T": 300, "paper_spawn_rate_per_agent": 0.015},
        "metrics": {"network_every": 100},
        "drl": {
            "episodes": 50,
            "eps_decay": 0.89,
            "learning_rate": 1e-3,
            "replay_capacity": 20000,
            "target_update_every": 100,
            "learning_starts": 256,
            "checkpoint_every": 25,
        },
    },
}


@dataclass(frozen=True)
class SimulationConfig:
    """
    The full, immutable parameter aggregate of one experiment.
    """

    population: PopulationParams = field(default_factory=PopulationParams)
    network: NetworkParams = field(default_factory=NetworkParams)
    collab: CollabParams = field(default_factory=CollabParams)
    utility: UtilityParams = field(default_factory=UtilityParams)
    reputation: ReputationParams = field(default_factory=ReputationParams)
    greedy: GreedyParams = field(default_factory=GreedyParams)
    drl: DrlParams = field(default_factory=DrlParams)
    metrics: MetricsParams = field(default_factory=MetricsParams)
    sweep: SweepParams = field(default_factory=SweepParams)
    seed: int = 0
    "Master seed of every random stream."

    def validate(self) -> "SimulationConfig":
        for name in SECTIONS:
            getattr(self, name).validate()
        _check(isinstance(self.seed, int) and self.seed >= 0, "seed", "seed is a non-negative integer")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def override(self, values: Mapping[str, Any]) -> "SimulationConfig":
        """
        Return a copy with ``{section: {key: value}}`` applied; ``seed`` may be
        given at the top level.
        """
        changes: Dict[str, Any] = {}
        for section, entries in values.items():
            if section == "seed":
                changes["seed"] = _coerce("seed", entries, int)
                continue
            if section not in SECTIONS:
                raise ConfigError(section, "unknown section")
            if not isinstance(entries, Mapping):
                raise ConfigError(section, "section must hold key/value pairs")
            params = changes.get(section, getattr(self, section))
            hints = get_type_hints(SECTIONS[section])
            known = {f.name for f in fields(SECTIONS[section])}
            coerced = {}
            for key, raw in entries.items():
                if key not in known:
                    raise ConfigError(f"{section}.{key}", "unknown key")
                coerced[key] = _coerce(f"{section}.{key}", raw, hints[key])
            changes[section] = replace(params, **coerced)
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimulationConfig":
        return cls().override(data).validate()


def _coerce(name: str, raw: Any, typ: type) -> Any:
    try:
        if typ is bool:
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError(raw)
            return int(raw)
        if typ is float:
            if isinstance(raw, bool):
                raise ValueError(raw)
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {typ.__name__}, got {raw!r}")


def apply_profile(config: SimulationConfig, profile: str) -> SimulationConfig:
    if profile not in PROFILES:
        raise ConfigError("profile", "one of {}".format(", ".join(sorted(PROFILES))))
    return config.override(PROFILES[profile])


def _read_ini(path: str) -> Dict[str, Any]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fd:
            parser.read_file(fd)
    except configparser.Error as exc:
        raise ConfigError(path, f"cannot parse: {exc}")
    values: Dict[str, Any] = {}
    for section in parser.sections():
        entries = dict(parser.items(section))
        if section == "run":
            for key, raw in entries.items():
                if key != "seed":
                    raise ConfigError(f"run.{key}", "unknown key")
                values["seed"] = raw
        else:
            values[section] = entries
    return values


def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fd:
            values = json.load(fd)
    except ValueError as exc:
        raise ConfigError(path, f"cannot parse: {exc}")
    if not isinstance(values, dict):
        raise ConfigError(path, "top level must be an object")
    return values


def load_config(path: Optional[str] = None, profile: Optional[str] = None,
                seed: Optional[int] = None) -> SimulationConfig:
    """
    Build the effective configuration: defaults, then ``profile``, then the
    file at ``path`` (INI, or JSON as written by :meth:`SimulationConfig.to_json`),
    then ``seed``.
    """
    config = SimulationConfig()
    if profile is not None:
        config = apply_profile(config, profile)
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(path, "file does not exist")
        values = _read_json(path) if path.endswith(".json") else _read_ini(path)
        config = config.override(values)
        logger.debug("loaded %s with sections %s", path, sorted(values))
    if seed is not None:
        config = config.override({"seed": seed})
    return config.validate()
