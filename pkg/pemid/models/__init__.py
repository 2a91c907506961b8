"""Model structures, one-step maps, rollouts and the process/noise separation."""

from pemid.models.maps import (
    LpvMatrices,
    enforce_separation,
    lpv_matrices,
    noise_forward_step,
    noise_inverse_step,
    plant_step,
    scheduling_map,
)
from pemid.models.nets import FeedforwardNet, NetShape, NetSpec, ffn_forward, init_ffn
from pemid.models.rollout import (
    RolloutResult,
    noise_forward_rollout,
    noise_inverse_rollout,
    predictor_rollout,
    simulation_rollout,
)
from pemid.models.separation import SeparatedSystem, separate_system
from pemid.models.structure import (
    ModelStructure,
    OracleScheduling,
    StateSpaceModel,
    build_layout,
    group_index_sets,
    reduce_model,
)

__all__ = [
    "FeedforwardNet",
    "LpvMatrices",
    "ModelStructure",
    "NetShape",
    "NetSpec",
    "OracleScheduling",
    "RolloutResult",
    "SeparatedSystem",
    "StateSpaceModel",
    "build_layout",
    "enforce_separation",
    "ffn_forward",
    "group_index_sets",
    "init_ffn",
    "lpv_matrices",
    "noise_forward_rollout",
    "noise_forward_step",
    "noise_inverse_rollout",
    "noise_inverse_step",
    "plant_step",
    "predictor_rollout",
    "reduce_model",
    "scheduling_map",
    "separate_system",
    "simulation_rollout",
]
