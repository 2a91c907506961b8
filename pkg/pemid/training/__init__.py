"""PEM training: losses, l1 splitting, optimizers, multistart and structure selection."""

from pemid.training.config import AdamOptions, QnOptions, SelectionConfig, TrainConfig
from pemid.training.l1split import L1Split, split_l1
from pemid.training.losses import PemProblem, group_penalty, pem_loss, regularizer
from pemid.training.optimizers import AdamResult, QnResult, adam_run, qn_run
from pemid.training.selection import SelectionResult, structure_select
from pemid.training.trainer import (
    Evaluation,
    RunSummary,
    Trainer,
    TrainReport,
    TrainResult,
    bootstrap_train,
    multistart,
    reconstruct_initial_state,
    train,
)

__all__ = [
    "AdamOptions",
    "AdamResult",
    "Evaluation",
    "L1Split",
    "PemProblem",
    "QnOptions",
    "QnResult",
    "RunSummary",
    "SelectionConfig",
    "SelectionResult",
    "TrainConfig",
    "TrainReport",
    "TrainResult",
    "Trainer",
    "adam_run",
    "bootstrap_train",
    "group_penalty",
    "multistart",
    "pem_loss",
    "qn_run",
    "reconstruct_initial_state",
    "regularizer",
    "split_l1",
    "structure_select",
    "train",
]
