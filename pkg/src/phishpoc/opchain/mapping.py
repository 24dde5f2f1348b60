"""Random generation of mapped feature spaces (POC) and their text format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..dataset import Dataset, FeatureSchema
from ..errors import (
    EmptyFeatureSet,
    ParseError,
    PrevalenceUnreachable,
    RepairBudgetExceeded,
    SchemaMismatch,
)
from .chain import Binary, Chain, Leaf, Unary, evaluate, leaves, parse_chain, replace_leaf
from .ops import FmopSet

FORMAT_VERSION = 1
DEFAULT_PSI = 20
DEFAULT_MAX_SIZE = 3


def _as_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(int(rng)), int(rng)


@dataclass(frozen=True)
class FeatureMap:
    source_schema: FeatureSchema
    chains: tuple[Chain, ...]
    seed: int | None
    fbar: tuple[int, ...]
    max_size: int
    prevalence_target: float
    fmop: FmopSet = FmopSet()

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(self.chains))
        object.__setattr__(self, "fbar", tuple(int(i) for i in self.fbar))
        if not self.chains:
            raise ValueError("a feature map needs at least one chain")
        n = len(self.source_schema)
        for ch in self.chains:
            if any(not 0 <= i < n for i in leaves(ch)):
                raise ValueError("chain leaf outside the source schema")

    @property
    def psi(self) -> int:
        return len(self.chains)

    def covered(self) -> set[int]:
        return {i for ch in self.chains for i in leaves(ch)}

    def output_schema(self) -> FeatureSchema:
        names = [f"oc_{i}" for i in range(self.psi)]
        return FeatureSchema.real_valued(names, name=f"poc-{self.source_schema.fingerprint()}")

    def transform_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != len(self.source_schema):
            raise SchemaMismatch(f"expected {len(self.source_schema)} features, got {X.shape[-1]}")
        return np.stack([evaluate(ch, X) for ch in self.chains], axis=-1)


def choose_features(fbar: Sequence[int], max_size: int, rng) -> list[int]:
    """Draw a block of 1..max_size feature indices uniformly (with replacement) from ``fbar``."""
    fbar = list(fbar)
    if not fbar:
        raise EmptyFeatureSet("the candidate feature set is empty")
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    rng, _ = _as_rng(rng)
    length = int(rng.integers(1, max_size + 1))
    return [fbar[int(k)] for k in rng.integers(0, len(fbar), size=length)]


def _draw(rng: np.random.Generator, options: Sequence[str]) -> str:
    return options[int(rng.integers(len(options)))]


def compute_new_feature(fbar: Sequence[int], max_size: int, fmop: FmopSet | None, rng) -> Chain:
    """One chain: a feature block, one unary per element, then a left fold of binaries."""
    fmop = fmop or FmopSet()
    if not fmop.unary or not fmop.binary:
        raise ValueError("both operator urns must be non-empty")
    rng, _ = _as_rng(rng)
    block: list[Chain] = [Leaf(i) for i in choose_features(fbar, max_size, rng)]
    block = [Unary(_draw(rng, fmop.unary), leaf) for leaf in block]
    acc = block[0]
    for item in block[1:]:
        acc = Binary(_draw(rng, fmop.binary), acc, item)
    return acc


def required_coverage(n_features: int, target: float) -> int:
    """Number of distinct features a map needs for ``target`` percent prevalence."""
    return math.ceil(Fraction(repr(float(target))) * n_features / 100)


def generate_map(
    schema: FeatureSchema,
    psi: int = DEFAULT_PSI,
    max_size: int = DEFAULT_MAX_SIZE,
    fmop: FmopSet | None = None,
    prevalence_target: float = 100.0,
    rng=0,
    fbar: Sequence[int] | None = None,
    exact_prevalence: bool = True,
) -> FeatureMap:
    """Draw ``psi`` chains over ``fbar`` and repair them to meet the prevalence target.

    Repairs substitute leaves (or, when every leaf is already distinct, append
    one more folded element to a chain shorter than ``max_size``). With
    ``exact_prevalence`` the map covers exactly ``ceil(target * |F| / 100)``
    features; otherwise at least that many.
    """
    fmop = fmop or FmopSet()
    n = len(schema)
    fbar = tuple(range(n)) if fbar is None else tuple(sorted(set(int(i) for i in fbar)))
    if not fbar:
        raise EmptyFeatureSet("the candidate feature set is empty")
    if psi < 1:
        raise ValueError("psi must be >= 1")
    if not 0 <= prevalence_target <= 100:
        raise PrevalenceUnreachable(f"prevalence target {prevalence_target} outside [0, 100]")
    required = required_coverage(n, prevalence_target)
    if exact_prevalence and required == 0:
        raise PrevalenceUnreachable("a map always covers at least one feature")
    required = max(required, 1)
    if required > min(len(fbar), psi * max_size):
        raise PrevalenceUnreachable(
            f"{required} features needed but at most {min(len(fbar), psi * max_size)} can be covered"
        )
    rng, seed = _as_rng(rng)
    chains = [compute_new_feature(fbar, max_size, fmop, rng) for _ in range(psi)]

    budget = 10 * n
    repairs = 0

    def spend():
        nonlocal repairs
        repairs += 1
        if repairs > budget:
            raise RepairBudgetExceeded(f"prevalence repair exceeded {budget} steps")

    covered = {i for ch in chains for i in leaves(ch)}
    while len(covered) < required:
        spend()
        missing = sorted(set(fbar) - covered)
        counts: dict[int, int] = {}
        for ch in chains:
            for i in leaves(ch):
                counts[i] = counts.get(i, 0) + 1
        dup_chains = [c for c, ch in enumerate(chains) if any(counts[i] > 1 for i in leaves(ch))]
        new = missing[int(rng.integers(len(missing)))]
        if dup_chains:
            c = dup_chains[int(rng.integers(len(dup_chains)))]
            spots = [k for k, i in enumerate(leaves(chains[c])) if counts[i] > 1]
            k = spots[int(rng.integers(len(spots)))]
            chains[c] = replace_leaf(chains[c], k, new)
        else:
            growable = [c for c, ch in enumerate(chains) if len(leaves(ch)) < max_size]
            c = growable[int(rng.integers(len(growable)))]
            item = Unary(_draw(rng, fmop.unary), Leaf(new))
            chains[c] = Binary(_draw(rng, fmop.binary), chains[c], item)
        covered = {i for ch in chains for i in leaves(ch)}

    while exact_prevalence and len(covered) > required:
        ordered = sorted(covered)
        drop = ordered[int(rng.integers(len(ordered)))]
        keep = [i for i in ordered if i != drop]
        for c, ch in enumerate(chains):
            for k, i in enumerate(leaves(ch)):
                if i == drop:
                    spend()
                    chains[c] = replace_leaf(chains[c], k, keep[int(rng.integers(len(keep)))])
        covered = {i for ch in chains for i in leaves(ch)}

    return FeatureMap(schema, tuple(chains), seed, fbar, max_size, float(prevalence_target), fmop)


def prevalence(schema: FeatureSchema, fmap: FeatureMap) -> float:
    """Percentage of the schema's features that appear in at least one chain."""
    if schema.fingerprint() != fmap.source_schema.fingerprint():
        raise SchemaMismatch("map was generated for a different schema")
    return 100.0 * len(fmap.covered()) / len(schema)


def transform(dataset: Dataset, fmap: FeatureMap) -> Dataset:
    """Map every row into the chain space; labels, order and row ids are kept."""
    if dataset.schema.fingerprint() != fmap.source_schema.fingerprint():
        raise SchemaMismatch("dataset schema does not match the map's source schema")
    Z = fmap.transform_matrix(dataset.X)
    return Dataset(fmap.output_schema(), Z, dataset.y, f"{dataset.name}:poc", dataset.row_ids)


def serialize_map(fmap: FeatureMap) -> str:
    header = {
        "format": FORMAT_VERSION,
        "seed": fmap.seed,
        "psi": fmap.psi,
        "max_size": fmap.max_size,
        "prevalence_target": fmap.prevalence_target,
        "prevalence": prevalence(fmap.source_schema, fmap),
        "fbar": " ".join(map(str, fmap.fbar)),
        "unary": " ".join(fmap.fmop.unary),
        "binary": " ".join(fmap.fmop.binary),
        "schema_hash": fmap.source_schema.fingerprint(),
    }
    lines = ["# phishpoc feature map"]
    lines += [f"{k}: {'none' if v is None else v}" for k, v in header.items()]
    lines.append("schema: " + json.dumps(json.loads(fmap.source_schema.to_json()), separators=(",", ":")))
    lines.append("chains:")
    lines += [str(ch) for ch in fmap.chains]
    return "\n".join(lines) + "\n"


def deserialize_map(text: str) -> FeatureMap:
    header: dict[str, str] = {}
    pos = 0
    chains: list[Chain] = []
    in_chains = False
    for line in text.splitlines(keepends=True):
        body = line.strip()
        start = pos + (len(line) - len(line.lstrip()))
        pos += len(line)
        if not body or body.startswith("#"):
            continue
        if in_chains:
            chains.append(parse_chain(body, offset=start))
            continue
        if body == "chains:":
            in_chains = True
            continue
        key, sep, value = body.partition(":")
        if not sep:
            raise ParseError(f"expected 'key: value', got {body!r}", start)
        header[key.strip()] = value.strip()
    if not in_chains:
        raise ParseError("missing 'chains:' section", len(text))
    for key in ("seed", "max_size", "prevalence_target", "fbar", "unary", "binary", "schema"):
        if key not in header:
            raise ParseError(f"missing header field {key!r}", len(text))
    schema = FeatureSchema.from_json(header["schema"])
    if "schema_hash" in header and header["schema_hash"] != schema.fingerprint():
        raise ParseError("schema hash does not match embedded schema", 0)
    seed = None if header["seed"] == "none" else int(header["seed"])
    fmop = FmopSet(tuple(header["unary"].split()), tuple(header["binary"].split()))
    return FeatureMap(
        schema,
        tuple(chains),
        seed,
        tuple(int(i) for i in header["fbar"].split()),
        int(header["max_size"]),
        float(header["prevalence_target"]),
        fmop,
    )
