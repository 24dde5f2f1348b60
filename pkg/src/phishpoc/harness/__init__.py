"""Experiment pipeline: configuration, staged runs, reports and the CLI."""

from .config import (
    AttackParams,
    ClassifierEntry,
    DatasetSource,
    ExperimentConfig,
    PocParams,
    PrevalenceParams,
    derive_seed,
)
from .pipeline import (
    Experiment,
    HardenedModel,
    MapSelection,
    candidate_seed,
    load_detector,
    load_source,
    rerun_manifest,
    run_all,
    run_attack_sweep,
    run_baseline,
    run_prevalence_sweep,
    run_significance,
    select_poc_map,
)

__all__ = [
    "AttackParams",
    "ClassifierEntry",
    "DatasetSource",
    "Experiment",
    "ExperimentConfig",
    "HardenedModel",
    "MapSelection",
    "PocParams",
    "PrevalenceParams",
    "candidate_seed",
    "derive_seed",
    "load_detector",
    "load_source",
    "rerun_manifest",
    "run_all",
    "run_attack_sweep",
    "run_baseline",
    "run_prevalence_sweep",
    "run_significance",
    "select_poc_map",
]
