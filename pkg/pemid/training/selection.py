"""Group-lasso structure selection: sparsify, prune, re-estimate."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from pemid.core.exceptions import AllGroupsPrunedError
from pemid.metrics.dataset import Dataset
from pemid.models.init import init_params
from pemid.models.structure import ModelStructure, StateSpaceModel, reduce_model
from pemid.training.config import SelectionConfig, TrainConfig
from pemid.training.trainer import Trainer, TrainReport, TrainResult

Keep = Dict[str, List[int]]


@dataclass
class SelectionResult:
    structure: ModelStructure
    model: StateSpaceModel
    report: TrainReport
    norms_before: Dict[str, float]
    norms_after: Dict[str, float]
    eps_g: float
    pruned: List[str] = field(default_factory=list)
    reweight_rounds: int = 1
    rejected: List[str] = field(default_factory=list)


def _roles(ms: ModelStructure) -> Dict[str, int]:
    roles = {"x": ms.nx, "z": ms.nz}
    if ms.family == "lpv_self":
        roles["p"] = ms.n_p
    return roles


def _kept_indices(ms: ModelStructure, kept: Set[str], norms: Dict[str, float]) -> Keep:
    keep: Keep = {}
    for role, n in _roles(ms).items():
        keep[role] = [i for i in range(n) if f"{role}{i}" in kept]
        if role != "z" and not keep[role] and n > 0:
            # at least one process state and one scheduling entry survive
            largest = max(range(n), key=lambda i: norms.get(f"{role}{i}", 0.0))
            keep[role] = [largest]
    return keep


def _droppable(keep: Keep, norms: Dict[str, float], required: Set[str]) -> List[str]:
    """Kept groups that may still go, smallest norm first."""
    names = [
        f"{role}{i}"
        for role, idx in keep.items()
        if role == "z" or len(idx) > 1
        for i in idx
    ]
    names = [name for name in names if name not in required]
    return sorted(names, key=lambda name: norms.get(name, 0.0))


def _without(keep: Keep, name: str) -> Keep:
    role, index = name[0], int(name[1:])
    return {r: [i for i in idx if not (r == role and i == index)] for r, idx in keep.items()}


def _reestimate(
    trainer: Trainer,
    reduced: StateSpaceModel,
    data: Dataset,
    seed: int,
    data_test: Optional[Dataset],
    cfg: TrainConfig,
    restarts: int,
) -> TrainResult:
    """Train the reduced model from its surviving parameters and ``restarts`` fresh draws."""
    ms = reduced.structure
    best = trainer.train(ms, data, seed, init=reduced, data_test=data_test, cfg=cfg)
    for offset in range(1, restarts + 1):
        fresh = init_params(ms, seed + offset, cfg.init)
        result = trainer.train(ms, data, seed + offset, init=fresh, data_test=data_test, cfg=cfg)
        if result.report.final_loss < best.report.final_loss:
            best = result
    return best


def structure_select(
    ms: ModelStructure,
    data: Dataset,
    trainer: Trainer,
    selection: Optional[SelectionConfig] = None,
    seed: int = 0,
    data_test: Optional[Dataset] = None,
) -> Tuple[ModelStructure, SelectionResult]:
    """Train with the group penalty, drop groups with norm below ``eps_g``, re-train.

    With ``selection.reweight`` the sparse phase is repeated with weights
    ``1/(||theta_g|| + delta)`` from the previous estimate until the kept set
    stops changing or ``reweight_iters`` rounds have run. With
    ``selection.loss_tolerance`` the surviving groups are then tried in order of
    increasing norm: a group is dropped when the re-estimated reduced model's
    loss stays within ``(1 + loss_tolerance)`` times the loss after thresholding.
    With ``tau_g = 0`` nothing is pruned and the structure is returned unchanged.
    """
    selection = selection or SelectionConfig()
    cfg = trainer.cfg

    if cfg.tau_g == 0:
        result = trainer.train(ms, data, seed, data_test=data_test)
        norms = result.report.group_norms
        return ms, SelectionResult(
            ms, result.model, result.report, norms, norms, eps_g=0.0
        )

    weights: Dict[str, float] = dict(selection.group_weights)
    rounds = selection.reweight_iters if selection.reweight else 1
    model: Optional[StateSpaceModel] = None
    kept: Optional[Set[str]] = None
    norms: Dict[str, float] = {}
    eps_g = 0.0
    done = 0
    for done in range(1, rounds + 1):
        sparse = trainer.train(ms, data, seed, init=model, group_weights=weights)
        model = sparse.model
        norms = sparse.report.group_norms
        largest = max(norms.values(), default=0.0)
        eps_g = selection.threshold(largest)
        if largest <= 0.0 or eps_g <= 0.0:
            # the sparse phase zeroed every group
            raise AllGroupsPrunedError(eps_g, norms)
        current = {name for name, norm in norms.items() if norm >= eps_g}
        if not current:
            raise AllGroupsPrunedError(eps_g, norms)
        if current == kept:
            break
        kept = current
        weights = {
            name: 1.0 / (norm + selection.reweight_delta) for name, norm in norms.items()
        }
    assert model is not None and kept is not None

    plain = cfg.model_copy(update={"tau_g": 0.0})
    keep = _kept_indices(ms, kept, norms)
    reduced = reduce_model(model, keep)
    final = _reestimate(trainer, reduced, data, seed, data_test, plain, selection.restarts)

    rejected: List[str] = []
    if selection.loss_tolerance is not None:
        limit = final.report.final_loss * (1.0 + selection.loss_tolerance)
        required: Set[str] = set()
        candidates = _droppable(keep, norms, required)
        while candidates:
            name = candidates[0]
            trial_keep = _without(keep, name)
            trial_model = reduce_model(model, trial_keep)
            trial = _reestimate(
                trainer, trial_model, data, seed, data_test, plain, selection.restarts
            )
            if trial.report.final_loss <= limit:
                keep, reduced, final = trial_keep, trial_model, trial
            else:
                required.add(name)
                rejected.append(name)
            candidates = _droppable(keep, norms, required)

    # report re-estimated norms under the original group names
    renamed = {
        f"{role}{old}": f"{role}{new}"
        for role, idx in keep.items()
        for new, old in enumerate(idx)
    }
    after = {
        name: final.report.group_norms[new]
        for name, new in renamed.items()
        if new in final.report.group_norms
    }
    pruned = sorted(name for name in norms if name not in renamed)
    return reduced.structure, SelectionResult(
        structure=reduced.structure,
        model=final.model,
        report=final.report,
        norms_before=norms,
        norms_after=after,
        eps_g=eps_g,
        pruned=pruned,
        reweight_rounds=done,
        rejected=rejected,
    )
