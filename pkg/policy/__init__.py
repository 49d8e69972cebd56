# flake8: noqa
import logging

from .base import Decision, Policy
from .checkpoint import CheckpointHeader, load_checkpoint, save_checkpoint
from .experience import ExperienceRecorder, RewardContext, RewardKind, compute_reward
from .features import STATE_DIM, Featurizer
from .greedy import (
    GreedyDecisionContext,
    GreedyPolicy,
    Role,
    greedy_accept_probability,
    greedy_pull,
    greedy_raise,
    greedy_respond,
)
from .qnet import Adam, NetworkDims, QNetwork, act, double_dqn_targets
from .replay import Batch, ReplayBuffer, Transition
from .strategic import StrategicPolicy
from .trainer import (
    DoubleDQN,
    EpisodeStats,
    Trainer,
    TrainingResult,
    conversion_batch,
    epsilon_at,
    run_training,
)

# Set default logging handler to avoid "No handler found" warnings.
logging.getLogger(__name__).addHandler(logging.NullHandler())
