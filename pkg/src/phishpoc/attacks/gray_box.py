"""Feature-space evasion attacks against phishing detectors.

Every attack only touches phishing rows and only the features it designates;
a designated feature is overwritten either with the benign reference value or
with a literal from the attack profile.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..dataset import PHISHING, Dataset, FeatureSchema, Sample, canonical_schema
from ..errors import PocError, SchemaMismatch

SIMPLE_ATTACKS = ("GBA1", "GBA2", "GBA3")
DEFAULT_TRIALS = 10
DEFAULT_DELTAS = (10, 20, 30, 40, 50, 60, 70)

_BUILTIN_PROFILES = {
    "canonical-27": "canonical.json",
    "website-phishing-9": "website_phishing.json",
    "uci-phishing-30": "uci_phishing.json",
}


@dataclass(frozen=True)
class AttackProfile:
    """Named attacks as (feature index, target) lists; target None means 'benign reference'."""

    schema: FeatureSchema
    attacks: Mapping[str, tuple[tuple[int, float | None], ...]]

    def features(self, name: str) -> tuple[int, ...]:
        return tuple(i for i, _ in self.steps(name))

    def steps(self, name: str) -> tuple[tuple[int, float | None], ...]:
        if name == "GBA3":
            return self.steps("GBA1") + self.steps("GBA2")
        try:
            return self.attacks[name]
        except KeyError:
            raise PocError(f"attack {name!r} is not defined for schema {self.schema.name!r}") from None


def parse_profile(doc: Mapping, schema: FeatureSchema) -> AttackProfile:
    attacks = {}
    for name, entries in doc["attacks"].items():
        steps = []
        for e in entries:
            try:
                idx = schema.index(e["feature"])
            except (KeyError, ValueError):
                raise SchemaMismatch(f"attack {name}: unknown feature {e.get('feature')!r}") from None
            target = e["target"]
            if target == "reference":
                steps.append((idx, None))
            else:
                target = float(target)
                if not schema.features[idx].admits(target):
                    raise PocError(f"attack {name}: target {target} outside the domain of {e['feature']!r}")
                steps.append((idx, target))
        attacks[name] = tuple(steps)
    if "GBA1" in attacks and "GBA2" in attacks:
        overlap = {i for i, _ in attacks["GBA1"]} & {i for i, _ in attacks["GBA2"]}
        if overlap:
            raise PocError(f"GBA1 and GBA2 must touch disjoint features; both touch {sorted(overlap)}")
    return AttackProfile(schema, attacks)


def load_profile(path: str | Path, schema: FeatureSchema) -> AttackProfile:
    return parse_profile(json.loads(Path(path).read_text(encoding="utf-8")), schema)


def builtin_profile(schema: FeatureSchema) -> AttackProfile:
    fname = _BUILTIN_PROFILES.get(schema.name)
    if fname is None:
        raise SchemaMismatch(f"no built-in attack profile for schema {schema.name!r}")
    text = resources.files("phishpoc.attacks.profiles").joinpath(fname).read_text(encoding="utf-8")
    return parse_profile(json.loads(text), schema)


def _resolve(profile, schema):
    if profile is not None:
        if profile.schema.fingerprint() != schema.fingerprint():
            raise SchemaMismatch("attack profile was written for a different schema")
        return profile
    return builtin_profile(schema)


def apply_steps(X: np.ndarray, steps, reference) -> np.ndarray:
    out = np.array(X, dtype=float, copy=True)
    reference = np.asarray(reference, dtype=float)
    for idx, target in steps:
        out[..., idx] = reference[idx] if target is None else target
    return out


def _simple(sample: Sample, reference, name: str, profile: AttackProfile | None) -> Sample:
    schema = sample.schema if sample.schema is not None else canonical_schema()
    if len(sample.values) != len(schema):
        raise SchemaMismatch(f"sample has {len(sample.values)} values, schema has {len(schema)}")
    profile = _resolve(profile, schema)
    if sample.label != PHISHING:
        raise PocError("evasion attacks apply to phishing samples only")
    return Sample(apply_steps(sample.values, profile.steps(name), reference), sample.label, sample.schema)


def gba1(sample: Sample, reference, profile: AttackProfile | None = None) -> Sample:
    """URL shortening: URL-lexical features look benign, shortener and redirect switch on."""
    return _simple(sample, reference, "GBA1", profile)


def gba2(sample: Sample, reference, profile: AttackProfile | None = None) -> Sample:
    """Internal-link stuffing: link/resource-origin HTML features look benign."""
    return _simple(sample, reference, "GBA2", profile)


def gba3(sample: Sample, reference, profile: AttackProfile | None = None) -> Sample:
    return gba2(gba1(sample, reference, profile), reference, profile)


def delta_subset_size(delta: float, n_features: int) -> int:
    if not 0 <= delta <= 100:
        raise ValueError(f"delta must lie in [0, 100], got {delta}")
    # exact floor of delta*n/100 for decimal inputs like 30 or 12.5
    return math.floor(Fraction(repr(float(delta))) * n_features / 100)


def delta_subset(delta: float, n_features: int, seed: int, trial: int) -> np.ndarray:
    """Features known to the attacker in one trial.

    The subset is a prefix of a per-(seed, trial) permutation, so a larger
    delta always extends a smaller one.
    """
    perm = np.random.default_rng([seed, trial]).permutation(n_features)
    return np.sort(perm[: delta_subset_size(delta, n_features)])


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    delta: float | None = None
    trials: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SIMPLE_ATTACKS + ("GBADelta",):
            raise PocError(f"unknown attack kind {self.kind!r}")
        if self.kind == "GBADelta":
            if self.delta is None or not 0 <= self.delta <= 100:
                raise ValueError("GBADelta needs delta in [0, 100]")
            trials = DEFAULT_TRIALS if self.trials is None else self.trials
        else:
            trials = 1 if self.trials is None else self.trials
        if trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "trials", int(trials))

    @property
    def id(self) -> str:
        if self.kind == "GBADelta":
            return f"GBAd{self.delta:g}"
        return self.kind

    @classmethod
    def parse(cls, text: str, seed: int = 0, trials: int | None = None) -> "AttackSpec":
        """Accept ``GBA1``..``GBA3`` or ``GBAd<delta>`` / ``GBADelta:<delta>``."""
        t = text.strip()
        if t in SIMPLE_ATTACKS:
            return cls(t, seed=seed)
        for prefix in ("GBADelta:", "GBAd", "delta:"):
            if t.startswith(prefix):
                return cls("GBADelta", float(t[len(prefix):]), trials, seed)
        raise PocError(f"cannot parse attack {text!r}")


@dataclass(frozen=True)
class PerturbedSet:
    """Adversarial versions of a malicious set, one matrix per trial, row-aligned with ``source``."""

    attack_id: str
    source: Dataset
    trials: tuple[np.ndarray, ...]
    modified: tuple[tuple[int, ...], ...]
    reference: np.ndarray = field(repr=False)

    def trial_dataset(self, t: int) -> Dataset:
        return self.source.with_matrix(self.trials[t], name=f"{self.source.name}:{self.attack_id}:{t}")

    def __len__(self):
        return len(self.trials)


def _malicious(data) -> Dataset:
    if isinstance(data, Dataset):
        return data.phishing_rows()
    samples = [s for s in data if s.label == PHISHING]
    schema = samples[0].schema if samples and samples[0].schema is not None else canonical_schema()
    return Dataset.from_samples(schema, samples, name="malicious")


def gba_delta(
    samples,
    delta: float,
    schema: FeatureSchema | None = None,
    reference=None,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
) -> PerturbedSet:
    """Per trial, one shared random subset of features is forced to the benign reference."""
    mal = _malicious(samples)
    schema = schema or mal.schema
    if schema.fingerprint() != mal.schema.fingerprint():
        raise SchemaMismatch("samples do not match the schema")
    reference = np.asarray(reference, dtype=float)
    mats, mods = [], []
    for t in range(trials):
        S = delta_subset(delta, len(schema), seed, t)
        out = np.array(mal.X, copy=True)
        out[:, S] = reference[S]
        mats.append(out)
        mods.append(tuple(int(i) for i in S))
    return PerturbedSet(AttackSpec("GBADelta", delta, trials, seed).id, mal, tuple(mats), tuple(mods), reference)


def perturb(
    spec: AttackSpec,
    data: Dataset,
    reference,
    profile: AttackProfile | None = None,
) -> PerturbedSet:
    """Run any attack against the phishing rows of ``data``."""
    if spec.kind == "GBADelta":
        return gba_delta(data, spec.delta, data.schema, reference, spec.trials, spec.seed)
    mal = data.phishing_rows()
    profile = _resolve(profile, data.schema)
    steps = profile.steps(spec.kind)
    out = apply_steps(mal.X, steps, reference)
    mods = tuple(sorted({i for i, _ in steps}))
    ref = np.asarray(reference, dtype=float)
    return PerturbedSet(spec.id, mal, tuple(out for _ in range(spec.trials)), (mods,) * spec.trials, ref)


def attack_suite(deltas: Sequence[float] = DEFAULT_DELTAS, trials: int = DEFAULT_TRIALS, seed: int = 0):
    """GBA1..GBA3 followed by one GBADelta per delta."""
    return [AttackSpec(k, seed=seed) for k in SIMPLE_ATTACKS] + [
        AttackSpec("GBADelta", d, trials, seed) for d in deltas
    ]
