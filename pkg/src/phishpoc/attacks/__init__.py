"""Gray-box evasion attacks in feature space."""

from .gray_box import (
    DEFAULT_DELTAS,
    DEFAULT_TRIALS,
    SIMPLE_ATTACKS,
    AttackProfile,
    AttackSpec,
    PerturbedSet,
    apply_steps,
    attack_suite,
    builtin_profile,
    delta_subset,
    delta_subset_size,
    gba1,
    gba2,
    gba3,
    gba_delta,
    load_profile,
    parse_profile,
    perturb,
)

__all__ = [
    "DEFAULT_DELTAS",
    "DEFAULT_TRIALS",
    "SIMPLE_ATTACKS",
    "AttackProfile",
    "AttackSpec",
    "PerturbedSet",
    "apply_steps",
    "attack_suite",
    "builtin_profile",
    "delta_subset",
    "delta_subset_size",
    "gba1",
    "gba2",
    "gba3",
    "gba_delta",
    "load_profile",
    "parse_profile",
    "perturb",
]
