"""Two-level policy learning: shared sub-policies selected by per-task masters."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import MlshConfig
from .evaluate import EvalReport, SequenceStats, evaluate, run_episode, subpolicy_sequence_stats
from .flat_ppo import FlatResult, flat_ppo_train
from .gae import compute_gae
from .policies import PolicyArch, PolicySet, init_master, init_policy_set
from .ppo import PpoBatch, PpoSettings, PpoUpdateError, ppo_loss, ppo_update
from .rollout import RolloutBuffer, act_hierarchical, collect_rollout
from .train import (
    IterationRecord,
    TrainerState,
    TrainingAborted,
    TrainLog,
    TrainResult,
    joint_phase,
    mlsh_train,
    warmup_phase,
)

__all__ = [
    "CheckpointError", "load_checkpoint", "save_checkpoint", "MlshConfig", "EvalReport",
    "SequenceStats", "evaluate", "run_episode", "subpolicy_sequence_stats", "FlatResult",
    "flat_ppo_train", "compute_gae", "PolicyArch", "PolicySet", "init_master",
    "init_policy_set", "PpoBatch", "PpoSettings", "PpoUpdateError", "ppo_loss", "ppo_update",
    "RolloutBuffer", "act_hierarchical", "collect_rollout", "IterationRecord", "TrainerState",
    "TrainingAborted", "TrainLog", "TrainResult", "joint_phase", "mlsh_train", "warmup_phase",
]
