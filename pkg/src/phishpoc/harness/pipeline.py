"""End-to-end experiment stages: baselines, map selection, attack and prevalence sweeps, statistics.

All stages hang off one ``Experiment`` object that memoises splits, models and
maps, so e.g. the significance stage reuses the sweep's detectors. Every
random choice is seeded from the master seed via ``derive_seed``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import platform
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .. import __version__
from ..attacks import AttackSpec, PerturbedSet, builtin_profile, load_profile, perturb
from ..classifiers import ClassifierSpec, TrainedModel, grid_search, train
from ..dataset import (
    Dataset,
    benign_reference_profile,
    builtin_schema,
    import_uci_arff,
    load_builtin_dataset,
    load_csv,
    load_schema,
    split,
    synthetic_phishing,
)
from ..errors import PocError, SchemaMismatch, TooFewPairs
from ..evaluation import (
    ImpactReport,
    Metrics,
    StatReport,
    attack_impact,
    bonferroni,
    confusion,
    impact_difference,
    metrics,
    pivot,
    to_csv,
    to_markdown,
    wilcoxon_test,
)
from ..opchain import FeatureMap, deserialize_map, generate_map, required_coverage, serialize_map, transform
from .config import DatasetSource, ExperimentConfig, PocParams, derive_seed

log = logging.getLogger(__name__)


class HardenedModel:
    """A detector that first maps raw features through a chain map."""

    def __init__(self, fmap: FeatureMap, model: TrainedModel):
        if model.schema_fingerprint != fmap.output_schema().fingerprint():
            raise SchemaMismatch("model was not trained on this map's output space")
        self.fmap = fmap
        self.model = model

    @property
    def spec(self) -> ClassifierSpec:
        return self.model.spec

    def predict(self, X) -> np.ndarray:
        return self.model.predict(self.fmap.transform_matrix(X))

    def predict_proba(self, X) -> np.ndarray:
        return self.model.predict_proba(self.fmap.transform_matrix(X))

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        if dataset.schema.fingerprint() != self.fmap.source_schema.fingerprint():
            raise SchemaMismatch("dataset schema differs from the map's source schema")
        return self.predict(dataset.X)

    def to_json(self) -> str:
        return json.dumps({"format": "phishpoc-hardened/1", "map": serialize_map(self.fmap),
                           "model": json.loads(self.model.to_json())})

    @classmethod
    def from_json(cls, text: str) -> "HardenedModel":
        doc = json.loads(text)
        return cls(deserialize_map(doc["map"]), TrainedModel.from_json(json.dumps(doc["model"])))


def load_detector(path: str | Path):
    """Load either a plain or a hardened model file."""
    text = Path(path).read_text(encoding="utf-8")
    fmt = json.loads(text).get("format", "")
    return HardenedModel.from_json(text) if fmt.startswith("phishpoc-hardened") else TrainedModel.from_json(text)


def load_source(src: DatasetSource) -> Dataset:
    if src.kind == "builtin":
        d = load_builtin_dataset(src.params.get("dataset", src.name))
    elif src.kind == "synthetic":
        params = dict(src.params)
        if src.schema:
            params["schema"] = _schema(src.schema)
        d = synthetic_phishing(**params)
    elif src.kind == "uci_arff":
        d = import_uci_arff(src.path, **src.params)
    else:
        d = load_csv(src.path, _schema(src.schema))
    return Dataset(d.schema, d.X, d.y, name=src.name, validate=False)


def _schema(ref: str):
    return load_schema(ref) if ref.endswith(".json") else builtin_schema(ref)


def _f1(model, data: Dataset) -> float:
    return metrics(confusion(model, data)).f1


def candidate_seed(selection_seed: int, index: int) -> int:
    return derive_seed(selection_seed, "candidate", index)


@dataclass(frozen=True)
class MapSelection:
    fmap: FeatureMap
    index: int
    scores: tuple[float, ...]
    seed: int

    @property
    def map_seed(self) -> int:
        return self.fmap.seed


def select_poc_map(spec: ClassifierSpec, train_set: Dataset, poc: PocParams, seed: int) -> MapSelection:
    """Best of ``poc.candidate_maps`` random maps by validation F1; ties go to the lowest index.

    The validation split holds out ``poc.validation_fraction`` of ``train_set``.
    """
    fit, val = split(train_set, 1.0 - poc.validation_fraction, derive_seed(seed, "validation"))
    scores = []
    best = None
    for c in range(poc.candidate_maps):
        fmap = generate_map(
            train_set.schema, poc.psi, poc.max_size, None, poc.prevalence_target, candidate_seed(seed, c)
        )
        try:
            model = train(spec, transform(fit, fmap))
            score = _f1(model, transform(val, fmap))
        except PocError as exc:
            log.info("candidate %d failed: %s", c, exc)
            score = -1.0
        scores.append(score)
        if best is None or score > scores[best[0]]:
            best = (c, fmap)
    return MapSelection(best[1], best[0], tuple(scores), seed)


class Outputs:
    """Writes report files under one directory and keeps their digests."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.digests: dict[str, str] = {}

    def write(self, name: str, text: str) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.digests[name] = hashlib.sha256(data).hexdigest()
        return path

    def table(self, stem: str, header, body, title: str | None = None) -> None:
        self.write(f"{stem}.csv", to_csv(header, body))
        md = to_markdown(header, body)
        self.write(f"{stem}.md", (f"### {title}\n\n" if title else "") + md)


def _num(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


class Experiment:
    """Runs and memoises every stage for one configuration."""

    def __init__(self, config: ExperimentConfig, output_dir: str | Path | None = None):
        self.config = config
        self.out = Outputs(output_dir or config.output_dir)
        self.seed = config.seed
        self.failures: list[dict] = []
        self.stage_seeds: dict[str, int] = {}
        self._data: dict = {}
        self._splits: dict = {}
        self._refs: dict = {}
        self._specs: dict = {}
        self._models: dict = {}
        self._poc: dict = {}
        self._attacks: dict = {}
        self._profiles: dict = {}
        self.baseline_rows: list[dict] | None = None
        self.poc_rows: list[dict] | None = None
        self.impacts: list[dict] | None = None
        self.stats: list[StatReport] | None = None
        self.prevalence_rows: list[dict] | None = None

    # -- seeds and cells -------------------------------------------------------

    def stage_seed(self, *stage) -> int:
        s = derive_seed(self.seed, *stage)
        self.stage_seeds["/".join(str(x) for x in stage)] = s
        return s

    def _cell(self, coords: dict, fn: Callable):
        try:
            return fn()
        except Exception as exc:  # one failing cell must not end the sweep
            self.failures.append({**coords, "error": type(exc).__name__, "message": str(exc)})
            log.warning("cell %s failed: %s", coords, exc)
            log.debug("%s", traceback.format_exc())
            return None

    def _each(self, fn, items: Sequence):
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]

    @property
    def dataset_names(self) -> list[str]:
        return [d.name for d in self.config.datasets]

    @property
    def algorithms(self) -> list[str]:
        return [c.algorithm for c in self.config.classifiers]

    # -- memoised building blocks ----------------------------------------------

    def data(self, ds: str) -> Dataset:
        if ds not in self._data:
            src = next(d for d in self.config.datasets if d.name == ds)
            self._data[ds] = load_source(src)
        return self._data[ds]

    def split(self, ds: str) -> tuple[Dataset, Dataset]:
        if ds not in self._splits:
            self._splits[ds] = split(self.data(ds), self.config.train_fraction, self.stage_seed(ds, "split"))
        return self._splits[ds]

    def reference(self, ds: str) -> np.ndarray:
        if ds not in self._refs:
            self._refs[ds] = benign_reference_profile(self.split(ds)[0])
        return self._refs[ds]

    def spec(self, ds: str, alg: str) -> ClassifierSpec:
        key = (ds, alg)
        if key not in self._specs:
            entry = next(c for c in self.config.classifiers if c.algorithm == alg)
            train_seed = self.stage_seed(ds, alg, "train")
            if entry.grid:
                found = grid_search(alg, self.split(ds)[0], entry.grid, self.config.folds,
                                    self.stage_seed(ds, alg, "grid"))
                spec = ClassifierSpec(alg, found.hyperparams, train_seed)
            else:
                spec = ClassifierSpec(alg, {}, train_seed)
            self._specs[key] = spec
        return self._specs[key]

    def baseline_model(self, ds: str, alg: str) -> TrainedModel:
        key = (ds, alg)
        if key not in self._models:
            self._models[key] = train(self.spec(ds, alg), self.split(ds)[0])
        return self._models[key]

    def poc_spec(self, ds: str, alg: str, mapped_train: Dataset) -> ClassifierSpec:
        base = self.spec(ds, alg)
        entry = next(c for c in self.config.classifiers if c.algorithm == alg)
        if self.config.poc.regrid and entry.grid:
            found = grid_search(alg, mapped_train, entry.grid, self.config.folds,
                                self.stage_seed(ds, alg, "poc-grid"))
            return ClassifierSpec(alg, found.hyperparams, base.seed)
        return base

    def poc_model(self, ds: str, alg: str, target: float | None = None):
        """(HardenedModel, MapSelection) for a prevalence target (default: the config's)."""
        target = float(self.config.poc.prevalence_target if target is None else target)
        key = (ds, alg, target)
        if key not in self._poc:
            train_set = self.split(ds)[0]
            params = PocParams(**{**self.config.poc.__dict__, "prevalence_target": target})
            sel_seed = self.stage_seed(ds, alg, "poc", f"{target:g}")
            spec = self.spec(ds, alg)
            if self.config.poc.regrid:
                # regrid on a provisional map, then select with the tuned spec
                probe = generate_map(train_set.schema, params.psi, params.max_size, None, target,
                                     candidate_seed(sel_seed, 0))
                spec = self.poc_spec(ds, alg, transform(train_set, probe))
            selection = select_poc_map(spec, train_set, params, sel_seed)
            model = train(spec, transform(train_set, selection.fmap))
            self._poc[key] = (HardenedModel(selection.fmap, model), selection)
        return self._poc[key]

    def profile(self, ds: str):
        schema = self.data(ds).schema
        if schema.name not in self._profiles:
            path = self.config.attack_profiles.get(schema.name)
            self._profiles[schema.name] = load_profile(path, schema) if path else builtin_profile(schema)
        return self._profiles[schema.name]

    def attack_specs(self, ds: str) -> list[AttackSpec]:
        return self.config.attacks.specs(self.stage_seed(ds, "attack"))

    def perturbed(self, ds: str, spec: AttackSpec) -> PerturbedSet:
        key = (ds, spec.id)
        if key not in self._attacks:
            test = self.split(ds)[1]
            profile = None if spec.kind == "GBADelta" else self.profile(ds)
            self._attacks[key] = perturb(spec, test, self.reference(ds), profile)
        return self._attacks[key]

    # -- stages ----------------------------------------------------------------

    def _metric_row(self, ds, alg, variant, model, extra=None):
        test = self.split(ds)[1]
        m: Metrics = metrics(confusion(model, test))
        row = {"dataset": ds, "classifier": alg, "variant": variant, "f1": m.f1, "accuracy": m.accuracy,
               "fpr": m.fpr, "tpr": m.tpr, "seed": self.seed}
        row.update(extra or {})
        return row

    def run_baseline(self) -> list[dict]:
        if self.baseline_rows is None:
            cells = [(ds, alg) for ds in self.dataset_names for alg in self.algorithms]

            def one(cell):
                ds, alg = cell
                return self._cell(
                    {"stage": "baseline", "dataset": ds, "classifier": alg},
                    lambda: self._metric_row(ds, alg, "baseline", self.baseline_model(ds, alg),
                                             {"hyperparams": json.dumps(self.spec(ds, alg).hyperparams,
                                                                        sort_keys=True)}),
                )

            self.baseline_rows = [r for r in self._each(one, cells) if r is not None]
        return self.baseline_rows

    def run_poc(self) -> list[dict]:
        if self.poc_rows is None:
            cells = [(ds, alg) for ds in self.dataset_names for alg in self.algorithms]

            def one(cell):
                ds, alg = cell

                def go():
                    hm, sel = self.poc_model(ds, alg)
                    return self._metric_row(ds, alg, "poc", hm, {
                        "map_seed": sel.map_seed, "candidate": sel.index,
                        "validation_f1": sel.scores[sel.index],
                        "prevalence": 100.0 * len(sel.fmap.covered()) / len(self.data(ds).schema),
                    })

                return self._cell({"stage": "poc", "dataset": ds, "classifier": alg}, go)

            self.poc_rows = [r for r in self._each(one, cells) if r is not None]
        return self.poc_rows

    def run_attack_sweep(self) -> list[dict]:
        if self.impacts is None:
            rows = []
            for ds in self.dataset_names:
                for spec in self.attack_specs(ds):
                    for alg in self.algorithms:
                        for variant in ("baseline", "poc"):
                            coords = {"stage": "attack", "dataset": ds, "classifier": alg,
                                      "attack": spec.id, "variant": variant}

                            def go(ds=ds, spec=spec, alg=alg, variant=variant):
                                model = (self.baseline_model(ds, alg) if variant == "baseline"
                                         else self.poc_model(ds, alg)[0])
                                rep: ImpactReport = attack_impact(model, self.split(ds)[1],
                                                                  self.perturbed(ds, spec), alg, ds)
                                return {"dataset": ds, "classifier": alg, "attack": spec.id,
                                        "variant": variant, "recall_no_attack": rep.value_no_attack,
                                        "recall_under_attack": rep.value_under_attack,
                                        "impact": rep.impact, "trials": len(rep.trial_impacts),
                                        "seed": spec.seed}

                            r = self._cell(coords, go)
                            if r is not None:
                                rows.append(r)
            self.impacts = rows
        return self.impacts

    def impact_tables(self, ds: str):
        """(baseline, poc, difference) pivot tables for one dataset."""
        rows = [r for r in self.run_attack_sweep() if r["dataset"] == ds]
        base = [r for r in rows if r["variant"] == "baseline"]
        poc = [r for r in rows if r["variant"] == "poc"]
        poc_by = {(r["classifier"], r["attack"]): r["impact"] for r in poc}
        diff = [
            {"classifier": r["classifier"], "attack": r["attack"],
             "difference": impact_difference(r["impact"], poc_by[(r["classifier"], r["attack"])])}
            for r in base if (r["classifier"], r["attack"]) in poc_by
        ]
        return (
            pivot(base, "classifier", "attack", "impact"),
            pivot(poc, "classifier", "attack", "impact"),
            pivot(diff, "classifier", "attack", "difference"),
        )

    def run_significance(self) -> list[StatReport]:
        if self.stats is None:
            alpha_adj = bonferroni(self.config.alpha, self.config.bonferroni_comparisons)
            impacts = self.run_attack_sweep()
            reports = []

            def test(name, pairs):
                pairs = list(pairs)
                try:
                    reports.append(wilcoxon_test(pairs, alpha_adjusted=alpha_adj, comparison=name))
                except TooFewPairs:
                    n = sum(1 for a, b in pairs if a != b)
                    reports.append(StatReport(name, 1.0, 0.0, n, alpha_adj, method="too-few-pairs"))

            index = {(r["dataset"], r["classifier"], r["attack"], r["variant"]): r for r in impacts}
            for ds in self.dataset_names:
                keys = [(c, a) for (d, c, a, v) in index if d == ds and v == "baseline"
                        and (d, c, a, "poc") in index]
                test(f"impact:{ds}", [(index[(ds, c, a, "baseline")]["impact"],
                                       index[(ds, c, a, "poc")]["impact"]) for c, a in keys])
                base = [index[(ds, c, a, "baseline")] for c, a in keys]
                test(f"attack-effect:{ds}", [(r["recall_no_attack"], r["recall_under_attack"]) for r in base])
            attacks = list(dict.fromkeys(r["attack"] for r in impacts))
            for att in attacks:
                base = [r for r in impacts if r["attack"] == att and r["variant"] == "baseline"]
                test(f"attack-effect:{att}", [(r["recall_no_attack"], r["recall_under_attack"]) for r in base])
            base_rows = {(r["dataset"], r["classifier"]): r for r in self.run_baseline()}
            poc_rows = {(r["dataset"], r["classifier"]): r for r in self.run_poc()}
            common = [k for k in base_rows if k in poc_rows]
            for metric in ("tpr", "f1"):
                label = "recall" if metric == "tpr" else metric
                test(f"no-attack:{label}", [(base_rows[k][metric], poc_rows[k][metric]) for k in common])
            self.stats = reports
        return self.stats

    def best_baseline(self, ds: str) -> str:
        chosen = self.config.prevalence.classifier
        if chosen:
            return chosen
        rows = [r for r in self.run_baseline() if r["dataset"] == ds]
        if not rows:
            raise PocError(f"no baseline detector trained on {ds}")
        return max(rows, key=lambda r: r["f1"])["classifier"]

    def run_prevalence_sweep(self, targets: Sequence[float] | None = None) -> list[dict]:
        targets = list(self.config.prevalence.targets if targets is None else targets)
        if 100 not in targets and 100.0 not in targets:
            targets.append(100.0)
        rows = []
        for ds in self.dataset_names:
            alg = self._cell({"stage": "prevalence", "dataset": ds}, lambda: self.best_baseline(ds))
            if alg is None:
                continue
            n = len(self.data(ds).schema)
            specs = self.attack_specs(ds)

            def series(model, label, covered, required):
                test = self.split(ds)[1]
                m = metrics(confusion(model, test))
                row = {"dataset": ds, "classifier": alg, "variant": label, "covered": covered,
                       "required": required, "fpr": m.fpr, "detection:none": m.tpr, "seed": self.seed}
                for spec in specs:
                    p = self.perturbed(ds, spec)
                    row[f"detection:{spec.id}"] = float(np.mean([np.mean(model.predict(Xt)) for Xt in p.trials]))
                return row

            r = self._cell({"stage": "prevalence", "dataset": ds, "classifier": alg, "variant": "baseline"},
                           lambda: series(self.baseline_model(ds, alg), "baseline", n, n))
            if r:
                rows.append(r)
            for t in targets:
                def go(t=t):
                    hm, sel = self.poc_model(ds, alg, t)
                    return series(hm, f"poc-{float(t):g}", len(sel.fmap.covered()), required_coverage(n, t))

                r = self._cell({"stage": "prevalence", "dataset": ds, "classifier": alg,
                                "variant": f"poc-{float(t):g}"}, go)
                if r:
                    rows.append(r)
        self.prevalence_rows = rows
        return rows

    # -- report emission -------------------------------------------------------

    def _write_metric_rows(self, stem: str, rows: list[dict]) -> None:
        header = list(rows[0]) if rows else ["dataset", "classifier", "f1", "accuracy", "fpr", "tpr"]
        self.out.write(f"{stem}.csv", to_csv(header, [list(r.values()) for r in rows]))
        parts = []
        for ds in self.dataset_names:
            body = [[r["classifier"], r["f1"], r["accuracy"], r["fpr"], r["tpr"]]
                    for r in rows if r["dataset"] == ds]
            parts.append(f"### {ds}\n\n" + to_markdown(["classifier", "F1-score", "Acc", "FPR", "TPR"], body))
        self.out.write(f"{stem}.md", "\n".join(parts))

    def write_baseline(self) -> None:
        self._write_metric_rows("baseline", self.run_baseline())

    def write_poc(self) -> None:
        self._write_metric_rows("poc", self.run_poc())

    def write_metrics(self) -> None:
        self.write_baseline()
        self.write_poc()

    def write_attacks(self) -> None:
        rows = self.run_attack_sweep()
        if rows:
            self.out.write("impacts.csv", to_csv(list(rows[0]), [list(r.values()) for r in rows]))
        for ds in self.dataset_names:
            (hb, bb), (hp, bp), (hd, bd) = self.impact_tables(ds)
            self.out.table(f"impact_baseline_{ds}", hb, bb, f"Impact on baseline detectors ({ds})")
            self.out.table(f"impact_poc_{ds}", hp, bp, f"Impact on hardened detectors ({ds})")
            self.out.table(f"impact_difference_{ds}", hd, bd, f"Impact difference, baseline minus hardened ({ds})")
        box = [[r["dataset"], r["variant"], r["attack"], r["classifier"], r["impact"]] for r in rows]
        self.out.write("boxplot_series.csv", to_csv(["dataset", "variant", "attack", "classifier", "impact"], box))

    def write_stats(self) -> None:
        reps = self.run_significance()
        header = ["comparison", "n", "p_value", "effect_size", "alpha_adjusted", "w_plus", "w_minus", "method"]
        body = [[r.comparison, r.n, r.p_value, r.effect_size, r.alpha_adjusted, r.w_plus, r.w_minus, r.method]
                for r in reps]
        self.out.table("significance", header, body, "Wilcoxon signed-rank tests")

    def write_prevalence(self) -> None:
        rows = self.prevalence_rows if self.prevalence_rows is not None else self.run_prevalence_sweep()
        if rows:
            header = list(rows[0])
            self.out.table("prevalence", header, [[r.get(h) for h in header] for r in rows],
                           "Detection with reduced prevalence")

    def manifest(self) -> dict:
        maps = {}
        for (ds, alg, target), (hm, sel) in sorted(self._poc.items()):
            text = serialize_map(sel.fmap)
            name = f"maps/{ds}_{alg}_{target:g}.map"
            self.out.write(name, text)
            maps[f"{ds}/{alg}/{target:g}"] = {"file": name, "map_seed": sel.map_seed, "candidate": sel.index,
                                              "selection_seed": sel.seed}
        return {
            "format": "phishpoc-manifest/1",
            "config": self.config.to_dict(),
            "stage_seeds": dict(sorted(self.stage_seeds.items())),
            "selected_maps": maps,
            "specs": {f"{ds}/{alg}": s.to_dict() for (ds, alg), s in sorted(self._specs.items())},
            "versions": {"phishpoc": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "failures": self.failures,
            "outputs": dict(sorted(self.out.digests.items())),
        }

    def write_manifest(self) -> Path:
        doc = self.manifest()
        return self.out.write("manifest.json", json.dumps(doc, indent=2, sort_keys=True, default=_num) + "\n")


def run_baseline(config: ExperimentConfig, output_dir=None) -> Experiment:
    exp = Experiment(config, output_dir)
    exp.write_baseline()
    exp.write_manifest()
    return exp


def run_attack_sweep(config: ExperimentConfig, output_dir=None) -> Experiment:
    exp = Experiment(config, output_dir)
    exp.write_metrics()
    exp.write_attacks()
    exp.write_manifest()
    return exp


def run_significance(config: ExperimentConfig, output_dir=None) -> Experiment:
    exp = Experiment(config, output_dir)
    exp.write_metrics()
    exp.write_attacks()
    exp.write_stats()
    exp.write_manifest()
    return exp


def run_prevalence_sweep(config: ExperimentConfig, targets=None, output_dir=None) -> Experiment:
    if targets is not None:
        # recorded in the manifest so that ``report`` replays the same sweep
        config = replace(config, prevalence=replace(config.prevalence, targets=tuple(targets)))
    exp = Experiment(config, output_dir)
    exp.run_prevalence_sweep()
    exp.write_prevalence()
    exp.write_manifest()
    return exp


def run_all(config: ExperimentConfig, output_dir=None, prevalence: bool = False) -> Experiment:
    exp = Experiment(config, output_dir)
    exp.write_metrics()
    exp.write_attacks()
    exp.write_stats()
    if prevalence:
        exp.run_prevalence_sweep()
        exp.write_prevalence()
    exp.write_manifest()
    return exp


def rerun_manifest(manifest_path: str | Path, output_dir: str | Path) -> tuple[Experiment, dict[str, bool]]:
    """Re-run the recorded configuration and compare every report digest."""
    doc = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    config = ExperimentConfig.from_dict(doc["config"])
    names = set(doc["outputs"])
    prevalence = any(n.startswith("prevalence") for n in names)
    exp = Experiment(config, output_dir)
    if "baseline.csv" in names:
        exp.write_baseline()
    if "poc.csv" in names:
        exp.write_poc()
    if "impacts.csv" in names:
        exp.write_attacks()
    if "significance.csv" in names:
        exp.write_stats()
    if prevalence:
        exp.run_prevalence_sweep()
        exp.write_prevalence()
    exp.write_manifest()
    same = {n: exp.out.digests.get(n) == d for n, d in doc["outputs"].items()}
    return exp, same
