"""Feature schemas, labeled datasets, CSV I/O and stratified splitting.

Labels are encoded as 0 (benign) and 1 (phishing). Discrete features follow
the three-valued convention -1 = legitimate-indicating, 0 = suspicious,
1 = phishing-indicating.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DegenerateSplit,
    DomainViolation,
    MissingColumn,
    NoBenignSamples,
    PocError,
    SchemaMismatch,
    UnparsableValue,
)

BENIGN = 0
PHISHING = 1
GROUPS = ("URL", "REP", "HTML")
DISCRETE = "discrete"
REAL = "real"
DISCRETE_VALUES = (-1.0, 0.0, 1.0)

_LABEL_WORDS = {"0": BENIGN, "1": PHISHING, "benign": BENIGN, "phishing": PHISHING}


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    group: str
    domain: str = DISCRETE
    benign_reference: float | None = None

    def __post_init__(self):
        if not self.name.isidentifier():
            raise ValueError(f"feature name {self.name!r} is not an identifier")
        if self.group not in GROUPS:
            raise ValueError(f"unknown feature group {self.group!r}")
        if self.domain not in (DISCRETE, REAL):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.benign_reference is not None and not self.admits(self.benign_reference):
            raise ValueError(f"benign reference of {self.name!r} outside its domain")

    def admits(self, value: float) -> bool:
        if not math.isfinite(value):
            return False
        return self.domain == REAL or value in DISCRETE_VALUES


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureDescriptor, ...]
    name: str = "schema"

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = self.names
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")

    def __len__(self):
        return len(self.features)

    def __iter__(self) -> Iterator[FeatureDescriptor]:
        return iter(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def group_indices(self, group: str) -> list[int]:
        return [i for i, f in enumerate(self.features) if f.group == group]

    @property
    def discrete_mask(self) -> np.ndarray:
        return np.array([f.domain == DISCRETE for f in self.features])

    def fingerprint(self) -> str:
        """Stable hash of names and domains; used to match models to data."""
        text = ";".join(f"{f.name}:{f.domain}" for f in self.features)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "features": [
                {
                    "name": f.name,
                    "group": f.group,
                    "domain": f.domain,
                    **({"benign_reference": f.benign_reference} if f.benign_reference is not None else {}),
                }
                for f in self.features
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FeatureSchema":
        doc = json.loads(text)
        feats = [
            FeatureDescriptor(
                name=d["name"],
                group=d["group"],
                domain=d.get("domain", DISCRETE),
                benign_reference=d.get("benign_reference"),
            )
            for d in doc["features"]
        ]
        return cls(tuple(feats), name=doc.get("name", "schema"))

    @classmethod
    def real_valued(cls, names: Sequence[str], group: str = "HTML", name: str = "schema") -> "FeatureSchema":
        return cls(tuple(FeatureDescriptor(n, group, REAL) for n in names), name=name)


def load_schema(path: str | Path) -> FeatureSchema:
    return FeatureSchema.from_json(Path(path).read_text(encoding="utf-8"))


def builtin_schema(name: str) -> FeatureSchema:
    """Load a bundled schema: ``canonical``, ``uci_phishing`` or ``website_phishing``."""
    text = resources.files("phishpoc.schemas").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return FeatureSchema.from_json(text)


def canonical_schema() -> FeatureSchema:
    """The 27-feature URL/REP/HTML schema (9 + 7 + 11)."""
    return builtin_schema("canonical")


@dataclass(frozen=True)
class Sample:
    values: np.ndarray
    label: int
    schema: FeatureSchema | None = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.label not in (BENIGN, PHISHING):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        if self.schema is not None:
            if len(values) != len(self.schema):
                raise SchemaMismatch(f"sample has {len(values)} values, schema has {len(self.schema)}")
            for f, v in zip(self.schema, values):
                if not f.admits(float(v)):
                    raise ValueError(f"value {v} outside the domain of {f.name!r}")

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.label, self.values.tobytes()))


class Dataset:
    """An immutable labeled feature matrix bound to a schema.

    ``row_ids`` track the identity of rows through splits and subsets.
    """

    def __init__(self, schema: FeatureSchema, X, y, name: str = "dataset", row_ids=None, validate: bool = True):
        X = np.array(X, dtype=float, copy=True)
        y = np.array(y, dtype=np.int8, copy=True)
        if X.ndim != 2:
            X = X.reshape(len(y), -1)
        if X.shape[1] != len(schema):
            raise SchemaMismatch(f"matrix has {X.shape[1]} columns, schema has {len(schema)}")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        row_ids = np.arange(len(y)) if row_ids is None else np.array(row_ids, dtype=np.int64, copy=True)
        if validate:
            _check_domains(schema, X)
            if not np.isin(y, (BENIGN, PHISHING)).all():
                raise ValueError("labels must be 0 or 1")
        for a in (X, y, row_ids):
            a.setflags(write=False)
        self.schema = schema
        self.X = X
        self.y = y
        self.name = name
        self.row_ids = row_ids

    def __len__(self):
        return len(self.y)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schema == other.schema
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    def __repr__(self):
        n_phish = int(self.y.sum())
        return f"Dataset({self.name!r}, rows={len(self)}, phishing={n_phish}, benign={len(self) - n_phish})"

    @property
    def samples(self) -> list[Sample]:
        return [self.sample(i) for i in range(len(self))]

    def sample(self, i: int) -> Sample:
        return Sample(self.X[i], int(self.y[i]), self.schema)

    def class_counts(self) -> tuple[int, int]:
        """(phishing, benign) counts."""
        n_phish = int(self.y.sum())
        return n_phish, len(self) - n_phish

    def take(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.schema, self.X[idx], self.y[idx], name or self.name, self.row_ids[idx], validate=False)

    def phishing_rows(self) -> "Dataset":
        return self.take(np.flatnonzero(self.y == PHISHING), name=f"{self.name}:phishing")

    def with_matrix(self, X, schema: FeatureSchema | None = None, name: str | None = None) -> "Dataset":
        return Dataset(schema or self.schema, X, self.y, name or self.name, self.row_ids)

    @classmethod
    def from_samples(cls, schema: FeatureSchema, samples: Sequence[Sample], name: str = "dataset") -> "Dataset":
        X = np.array([s.values for s in samples], dtype=float).reshape(len(samples), len(schema))
        y = [s.label for s in samples]
        return cls(schema, X, y, name)


def _check_domains(schema: FeatureSchema, X: np.ndarray) -> None:
    bad = ~np.isfinite(X)
    disc = schema.discrete_mask
    if disc.any():
        bad[:, disc] |= ~np.isin(X[:, disc], DISCRETE_VALUES)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DomainViolation(int(r), schema.features[c].name, float(X[r, c]))


def _parse_label(text: str, row: int) -> int:
    try:
        return _LABEL_WORDS[text.strip().lower()]
    except KeyError:
        raise UnparsableValue(row, "label", text) from None


def load_csv(path: str | Path, schema: FeatureSchema, name: str | None = None) -> Dataset:
    """Read ``<feature names...>,label`` rows. Row numbers in errors are 0-based data rows."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn("label") from None
        for col in schema.names + ["label"]:
            if col not in header:
                raise MissingColumn(col)
        cols = [header.index(n) for n in schema.names]
        label_col = header.index("label")
        X, y = [], []
        for r, row in enumerate(reader):
            if not row:
                continue
            vals = []
            for feat, c in zip(schema.features, cols):
                text = row[c] if c < len(row) else ""
                try:
                    v = float(text)
                except ValueError:
                    raise UnparsableValue(r, feat.name, text) from None
                if not feat.admits(v):
                    raise DomainViolation(r, feat.name, v)
                vals.append(v)
            X.append(vals)
            y.append(_parse_label(row[label_col] if label_col < len(row) else "", r))
    X = np.array(X, dtype=float).reshape(len(y), len(schema))
    return Dataset(schema, X, y, name or path.stem, validate=False)


def _fmt(value: float, discrete: bool) -> str:
    if discrete:
        return str(int(value))
    return repr(float(value))


def write_csv(dataset: Dataset, path: str | Path) -> None:
    disc = dataset.schema.discrete_mask
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(dataset.schema.names + ["label"]) + "\n")
        for x, label in zip(dataset.X, dataset.y):
            cells = [_fmt(v, d) for v, d in zip(x, disc)]
            fh.write(",".join(cells + [str(int(label))]) + "\n")


def _allocate(counts: list[int], fraction: float) -> list[int]:
    """Largest-remainder per-class train sizes with at least one row on each side when possible."""
    total = sum(counts)
    n_train = int(round(fraction * total))
    quotas = [fraction * c for c in counts]
    alloc = [int(math.floor(q)) for q in quotas]
    order = sorted(range(len(counts)), key=lambda k: (-(quotas[k] - alloc[k]), k))
    for k in order[: max(0, n_train - sum(alloc))]:
        alloc[k] += 1
    for k, c in enumerate(counts):
        # a singleton class goes to train
        hi = c - 1 if c >= 2 else c
        alloc[k] = min(max(alloc[k], 1), hi)
    return alloc


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified shuffle split; both partitions keep the original row order.

    A class with a single row is always placed in the training partition.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    by_class = [np.flatnonzero(dataset.y == c) for c in (BENIGN, PHISHING)]
    counts = [len(ix) for ix in by_class]
    if min(counts) == 0:
        raise DegenerateSplit("both classes must be present")
    alloc = _allocate(counts, train_fraction)
    train_idx, test_idx = [], []
    for ix, k in zip(by_class, alloc):
        perm = rng.permutation(ix)
        train_idx.append(perm[:k])
        test_idx.append(perm[k:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    if len(test_idx) == 0:
        raise DegenerateSplit("test partition would be empty")
    return (
        dataset.take(train_idx, name=f"{dataset.name}:train"),
        dataset.take(test_idx, name=f"{dataset.name}:test"),
    )


def benign_reference_profile(train: Dataset) -> np.ndarray:
    """Per-feature typical benign value: mode for discrete features, median for real ones.

    Mode ties resolve toward -1.
    """
    benign = train.X[train.y == BENIGN]
    if len(benign) == 0:
        raise NoBenignSamples("training data contains no benign samples")
    ref = np.empty(len(train.schema))
    for j, feat in enumerate(train.schema):
        col = benign[:, j]
        if feat.domain == DISCRETE:
            counts = [np.count_nonzero(col == v) for v in DISCRETE_VALUES]
            ref[j] = DISCRETE_VALUES[int(np.argmax(counts))]
        else:
            ref[j] = float(np.median(col))
    return ref


def import_uci_arff(path: str | Path, phishing_result: int = 1, negate: bool = False) -> Dataset:
    """Convert the UCI 'Phishing Websites' ARFF (30 features + ``Result``) into a Dataset.

    ``phishing_result`` is the ``Result`` value that denotes phishing; ``negate``
    flips feature signs if the source uses 1 = legitimate.
    """
    schema = builtin_schema("uci_phishing")
    text = Path(path).read_text(encoding="utf-8", errors="replace")
    attrs, rows, in_data = [], [], False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        low = line.lower()
        if low.startswith("@attribute"):
            attrs.append(line.split()[1])
        elif low.startswith("@data"):
            in_data = True
        elif in_data:
            rows.append([c.strip() for c in line.split(",")])
    if "Result" not in attrs:
        raise MissingColumn("Result")
    cols = [attrs.index(n) for n in schema.names]
    res = attrs.index("Result")
    X = np.array([[float(r[c]) for c in cols] for r in rows])
    if negate:
        X = -X
    y = np.array([PHISHING if int(float(r[res])) == phishing_result else BENIGN for r in rows])
    return Dataset(schema, X + 0.0, y, name="uci")


def synthetic_phishing(
    n_phishing: int = 1000,
    n_benign: int = 1000,
    seed: int = 0,
    schema: FeatureSchema | None = None,
    separation: float = 1.0,
    archetypes: int = 4,
    world_seed: int = 20210,
    name: str = "synthetic",
) -> Dataset:
    """Draw a labeled dataset from a fixed mixture of class archetypes.

    Each class is a mixture of ``archetypes`` campaign profiles; within a profile
    features are independent three-valued draws leaning toward the class pole.
    ``world_seed`` fixes the profiles, ``seed`` the drawn rows.
    """
    schema = schema or canonical_schema()
    d = len(schema)
    world = np.random.default_rng(world_seed)
    strength = world.uniform(0.1, 1.2, size=d) * separation
    # rare indicators: some features sit at the legitimate pole for most rows
    rarity = world.uniform(0.0, 1.5, size=d)
    values = np.array(DISCRETE_VALUES)

    def profiles(sign):
        lean = sign * strength[None, :] + world.normal(0.0, 0.8, size=(archetypes, d))
        logits = lean[:, :, None] * values[None, None, :]
        logits = logits - rarity[None, :, None] * (values[None, None, :] != -1)
        logits[:, :, 1] -= 0.7
        p = np.exp(logits - logits.max(axis=2, keepdims=True))
        return p / p.sum(axis=2, keepdims=True)

    prof = {BENIGN: profiles(-1.0), PHISHING: profiles(1.0)}
    weights = {c: world.dirichlet(np.full(archetypes, 3.0)) for c in (BENIGN, PHISHING)}
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for c, n in ((PHISHING, n_phishing), (BENIGN, n_benign)):
        arch = rng.choice(archetypes, size=n, p=weights[c])
        cum = prof[c][arch].cumsum(axis=2)
        u = rng.random((n, d, 1))
        idx = np.minimum((u > cum).sum(axis=2), 2)
        blocks.append(values[idx])
        labels.append(np.full(n, c))
    X = np.vstack(blocks)
    y = np.concatenate(labels)
    perm = rng.permutation(len(y))
    return Dataset(schema, X[perm], y[perm], name=name)


def load_builtin_dataset(name: str) -> Dataset:
    """Load a bundled dataset (currently only ``website_phishing``)."""
    if name != "website_phishing":
        raise PocError(f"unknown builtin dataset {name!r}")
    with resources.as_file(resources.files("phishpoc.data").joinpath("website_phishing.csv")) as path:
        return load_csv(path, builtin_schema("website_phishing"), name="website_phishing")
