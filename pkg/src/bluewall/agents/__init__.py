"""Heterogeneous defense agents: observation projection, value networks,
replay, separated pre-training, and checkpoint IO."""

from .io import CheckpointError, load_agent, network_checksum, save_agent
from .mlp import HIDDEN_UNITS, Adam, ValueNetwork, numerical_gradients
from .obs import (AGENT_TYPES, DEFAULT_CAPACITY, FEATURE_SETS, OPERATION_SETS,
                  CapacityError, LocalObservation, action_dim, observation_dim,
                  project_observation)
from .replay import ReplayBuffer
from .train import (DefenseAgent, Hyperparams, SpecializedRewardConfig,
                    TrainingDiverged, TrainingResult, TrainingScenarioTriple,
                    TRAINING_SUBNET, default_hyperparams, epsilon_schedule,
                    evaluate_agent, specialized_reward, train_agent,
                    training_triple, triple_from_config)

__all__ = [
    "AGENT_TYPES", "Adam", "CapacityError", "CheckpointError", "DEFAULT_CAPACITY",
    "DefenseAgent", "FEATURE_SETS", "HIDDEN_UNITS", "Hyperparams",
    "LocalObservation", "OPERATION_SETS", "ReplayBuffer",
    "SpecializedRewardConfig", "TRAINING_SUBNET", "TrainingDiverged",
    "TrainingResult", "TrainingScenarioTriple", "ValueNetwork", "action_dim",
    "default_hyperparams", "epsilon_schedule", "evaluate_agent", "load_agent",
    "network_checksum",
    "numerical_gradients", "observation_dim", "project_observation",
    "save_agent", "specialized_reward", "train_agent", "training_triple",
    "triple_from_config",
]
