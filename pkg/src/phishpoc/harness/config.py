"""Experiment configuration (JSON) and deterministic seed derivation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from ..attacks import DEFAULT_DELTAS, DEFAULT_TRIALS, SIMPLE_ATTACKS, AttackSpec
from ..classifiers import ALGORITHMS, DEFAULTS
from ..errors import ConfigError

DEFAULT_PREVALENCE_TARGETS = (65, 70, 75, 80, 85, 90)
DATASET_KINDS = ("csv", "uci_arff", "builtin", "synthetic")


def derive_seed(master: int, *stage: Any) -> int:
    """Seed for a named pipeline stage: the first 8 bytes of sha256("master/stage/...")."""
    text = "/".join([str(int(master))] + [str(s) for s in stage])
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class DatasetSource:
    name: str
    kind: str = "csv"
    path: str | None = None
    schema: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ConfigError(f"dataset {self.name!r}: kind must be one of {DATASET_KINDS}")
        if self.kind in ("csv", "uci_arff") and not self.path:
            raise ConfigError(f"dataset {self.name!r}: a path is required")
        if self.kind == "csv" and not self.schema:
            raise ConfigError(f"dataset {self.name!r}: csv datasets need a schema")


@dataclass(frozen=True)
class ClassifierEntry:
    algorithm: str
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown classifier {self.algorithm!r}")
        bad = set(self.grid) - set(DEFAULTS[self.algorithm])
        if bad:
            raise ConfigError(f"{self.algorithm}: unknown grid keys {sorted(bad)}")
        for k, v in self.grid.items():
            if not isinstance(v, list) or not v:
                raise ConfigError(f"{self.algorithm}: grid entry {k!r} must be a non-empty list")


@dataclass(frozen=True)
class PocParams:
    psi: int = 20
    max_size: int = 3
    prevalence_target: float = 100.0
    candidate_maps: int = 100
    validation_fraction: float = 0.2
    regrid: bool = False

    def __post_init__(self):
        if self.candidate_maps < 1:
            raise ConfigError("candidate_maps must be >= 1")
        if self.psi < 1 or self.max_size < 1:
            raise ConfigError("psi and max_size must be >= 1")
        if not 0 < self.prevalence_target <= 100:
            raise ConfigError("prevalence_target must lie in (0, 100]")
        if not 0 < self.validation_fraction < 1:
            raise ConfigError("validation_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class AttackParams:
    simple: tuple = SIMPLE_ATTACKS
    deltas: tuple = DEFAULT_DELTAS
    trials: int = DEFAULT_TRIALS

    def __post_init__(self):
        object.__setattr__(self, "simple", tuple(self.simple))
        object.__setattr__(self, "deltas", tuple(self.deltas))
        if any(a not in SIMPLE_ATTACKS for a in self.simple):
            raise ConfigError(f"simple attacks must be among {SIMPLE_ATTACKS}")
        if any(not 0 <= d <= 100 for d in self.deltas):
            raise ConfigError("delta values must lie in [0, 100]")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")

    def specs(self, seed: int) -> list[AttackSpec]:
        return [AttackSpec(k, seed=seed) for k in self.simple] + [
            AttackSpec("GBADelta", d, self.trials, seed) for d in self.deltas
        ]


@dataclass(frozen=True)
class PrevalenceParams:
    targets: tuple = DEFAULT_PREVALENCE_TARGETS
    classifier: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if any(not 0 < t <= 100 for t in self.targets):
            raise ConfigError("prevalence targets must lie in (0, 100]")


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    classifiers: tuple
    seed: int = 0
    train_fraction: float = 0.8
    folds: int = 3
    poc: PocParams = PocParams()
    attacks: AttackParams = AttackParams()
    prevalence: PrevalenceParams = PrevalenceParams()
    alpha: float = 0.05
    comparisons: int | None = None
    attack_profiles: dict = field(default_factory=dict)
    workers: int = 1
    output_dir: str = "runs/default"

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        if not self.classifiers:
            raise ConfigError("the classifier list is empty")
        if not self.datasets:
            raise ConfigError("the dataset list is empty")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError("dataset names must be unique")
        algs = [c.algorithm for c in self.classifiers]
        if len(set(algs)) != len(algs):
            raise ConfigError("each classifier may appear once")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def bonferroni_comparisons(self) -> int:
        return self.comparisons or len(self.datasets)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["attacks"]["simple"] = list(self.attacks.simple)
        d["attacks"]["deltas"] = list(self.attacks.deltas)
        d["prevalence"]["targets"] = list(self.prevalence.targets)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str | Path | None = None) -> "ExperimentConfig":
        doc = dict(doc)
        known = {
            "datasets", "classifiers", "seed", "train_fraction", "folds", "poc", "attacks",
            "prevalence", "alpha", "comparisons", "attack_profiles", "workers", "output_dir",
        }
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        base = Path(base_dir) if base_dir else None

        def resolve(p):
            if p is None or base is None or Path(p).is_absolute():
                return p
            return str(base / p)

        try:
            datasets = []
            for d in doc.get("datasets", []):
                d = dict(d)
                d["path"] = resolve(d.get("path"))
                if d.get("schema") and d["schema"].endswith(".json"):
                    d["schema"] = resolve(d["schema"])
                datasets.append(DatasetSource(**d))
            classifiers = [
                ClassifierEntry(c) if isinstance(c, str) else ClassifierEntry(**c)
                for c in doc.get("classifiers", [])
            ]
            kwargs = {k: doc[k] for k in ("seed", "train_fraction", "folds", "alpha", "comparisons", "workers")
                      if k in doc}
            if "output_dir" in doc:
                kwargs["output_dir"] = resolve(doc["output_dir"])
            profiles = {k: resolve(v) for k, v in doc.get("attack_profiles", {}).items()}
            return cls(
                datasets=datasets,
                classifiers=classifiers,
                poc=PocParams(**doc.get("poc", {})),
                attacks=AttackParams(**doc.get("attacks", {})),
                prevalence=PrevalenceParams(**doc.get("prevalence", {})),
                attack_profiles=profiles,
                **kwargs,
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(doc, path.parent)
