# flake8: noqa
import logging
from .about import __version__
from .collab import (
    GREEDY,
    STRATEGIC,
    Agent,
    AuthorTerms,
    Paper,
    PaperStatus,
    UltimatumState,
    advance_week,
    create_agents,
    recruit_clique,
    sample_clique_size,
    spawn_papers,
)
from .config import (
    CollabParams,
    DrlParams,
    GreedyParams,
    MetricsParams,
    NetworkParams,
    PopulationParams,
    ReputationParams,
    SimulationConfig,
    SweepParams,
    UtilityParams,
    load_config,
)
from .engine import Simulation, assign_strategic
from .events import AgentRecord, EventLog, Outcome, PaperRecord, UltimatumEvent, VoteRecord
from .exceptions import (
    CheckpointDimensionError,
    CheckpointError,
    CheckpointNotFoundError,
    CheckpointVersionError,
    ConfigError,
    InsufficientDataError,
    InvalidAccessError,
    InvalidStateError,
    RecruitmentAbandoned,
    UnknownStreamError,
)
from .network import (
    FriendshipNetwork,
    PathStrength,
    apply_destruction,
    apply_success,
    apply_withdraw,
    init_network,
    network_stats,
)
from .rng import RandomSource, derive_stream
from .ultimatum import (
    TickStreams,
    choose_demand,
    myopic_gain,
    paper_payoff,
    position_utility,
    weekly_tick,
)

# Set default logging handler to avoid "No handler found" warnings.
logging.getLogger(__name__).addHandler(logging.NullHandler())
