"""Command-line entry point: ``phishpoc <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

from ..attacks import AttackSpec, load_profile, perturb
from ..classifiers import ClassifierSpec, grid_search, train
from ..dataset import benign_reference_profile, load_csv, write_csv
from ..errors import PocError
from ..evaluation import attack_impact, bonferroni, confusion, metrics, wilcoxon_test
from ..featextract import build_dataset, fetch_many, load_snapshot_dir, read_url_list, save_snapshot
from ..featextract.snapshot import DEFAULT_IN_FLIGHT, DEFAULT_TIMEOUT, UdpResolver
from ..opchain import deserialize_map, serialize_map, transform
from .config import ExperimentConfig, PocParams
from .pipeline import (
    HardenedModel,
    _schema,
    load_detector,
    rerun_manifest,
    run_attack_sweep,
    run_prevalence_sweep,
    run_significance,
    select_poc_map,
)


def _load(args):
    return load_csv(args.data, _schema(args.schema))


def _json_arg(text):
    if text is None:
        return {}
    p = Path(text)
    return json.loads(p.read_text(encoding="utf-8") if p.exists() else text)


def cmd_extract(args):
    entries = read_url_list(args.urls)
    snaps = load_snapshot_dir(args.snapshots) if args.snapshots else {}
    if args.fetch:
        missing = [u for u, _ in entries if u not in snaps]
        resolver = UdpResolver.from_env(args.timeout)
        for snap in fetch_many(missing, resolver, args.timeout, args.max_in_flight):
            snaps[snap.url] = snap
            if args.snapshots:
                name = hashlib.sha256(snap.url.encode("utf-8")).hexdigest()[:16] + ".json"
                save_snapshot(snap, Path(args.snapshots) / name)
    data = build_dataset(entries, snaps, name=Path(args.out).stem)
    write_csv(data, args.out)
    phish, benign = data.class_counts()
    print(f"wrote {len(data)} rows ({phish} phishing, {benign} benign) to {args.out}")


def cmd_train(args):
    data = _load(args)
    fmap = deserialize_map(Path(args.map).read_text(encoding="utf-8")) if args.map else None
    fit_data = transform(data, fmap) if fmap else data
    if args.grid:
        spec = grid_search(args.algorithm, fit_data, _json_arg(args.grid), args.folds, args.seed)
        spec = ClassifierSpec(args.algorithm, spec.hyperparams, args.seed)
    else:
        spec = ClassifierSpec(args.algorithm, _json_arg(args.params), args.seed)
    model = train(spec, fit_data)
    detector = HardenedModel(fmap, model) if fmap else model
    Path(args.out).write_text(detector.to_json(), encoding="utf-8")
    print(f"trained {spec.algorithm} {json.dumps(spec.hyperparams, sort_keys=True)} -> {args.out}")


def cmd_predict(args):
    detector = load_detector(args.model)
    data = _load(args)
    pred = detector.predict_dataset(data)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "label", "prediction"])
            for i, (y, p) in enumerate(zip(data.y, pred)):
                w.writerow([i, int(y), int(p)])
    m = metrics(confusion(detector, data))
    print(f"f1={m.f1:.4f} accuracy={m.accuracy:.4f} fpr={m.fpr:.4f} tpr={m.tpr:.4f}")


def cmd_select_map(args):
    data = _load(args)
    spec = ClassifierSpec(args.algorithm, _json_arg(args.params), args.seed)
    poc = PocParams(args.psi, args.max_size, args.prevalence, args.candidates)
    sel = select_poc_map(spec, data, poc, args.seed)
    Path(args.out).write_text(serialize_map(sel.fmap), encoding="utf-8")
    print(f"selected candidate {sel.index} (map seed {sel.map_seed}, validation F1 "
          f"{sel.scores[sel.index]:.4f}) -> {args.out}")


def cmd_attack(args):
    data = _load(args)
    ref_source = load_csv(args.reference_from, data.schema) if args.reference_from else data
    reference = benign_reference_profile(ref_source)
    spec = AttackSpec.parse(args.attack, seed=args.seed, trials=args.trials)
    profile = load_profile(args.profile, data.schema) if args.profile else None
    pset = perturb(spec, data, reference, profile)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for t in range(len(pset)):
        write_csv(pset.trial_dataset(t), out / f"{pset.attack_id}_trial{t}.csv")
    (out / f"{pset.attack_id}_modified.json").write_text(
        json.dumps({"attack": pset.attack_id, "reference": reference.tolist(),
                    "modified": [list(m) for m in pset.modified]}, indent=1), encoding="utf-8")
    print(f"{pset.attack_id}: {len(pset)} trial(s), {len(pset.source)} phishing rows -> {out}")
    if args.model:
        rep = attack_impact(load_detector(args.model), data, pset)
        print(f"recall {rep.value_no_attack:.4f} -> {rep.value_under_attack:.4f}, impact {rep.impact:.4f}")


def _config(args):
    cfg = ExperimentConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _report_failures(exp):
    for f in exp.failures:
        print(f"FAILED cell {f}", file=sys.stderr)


def cmd_sweep(args):
    exp = run_attack_sweep(_config(args), args.out)
    _report_failures(exp)
    print(f"attack sweep written to {exp.out.root}")


def cmd_prevalence(args):
    exp = run_prevalence_sweep(_config(args), args.targets, args.out)
    _report_failures(exp)
    for r in exp.prevalence_rows:
        print(f"{r['dataset']} {r['variant']}: covered {r['covered']}/{r['required']} fpr {r['fpr']:.4f}")


def cmd_stats(args):
    if args.pairs:
        with open(args.pairs, encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
        pairs = [(float(a), float(b)) for a, b, *_ in rows]
        alpha = bonferroni(args.alpha, args.comparisons)
        rep = wilcoxon_test(pairs, alpha_adjusted=alpha, comparison=Path(args.pairs).stem)
        print(f"n={rep.n} p={rep.p_value:.6g} effect={rep.effect_size:.4f} alpha={alpha:g} "
              f"{'different' if rep.significant else 'equivalent'}")
        return
    if not args.config:
        raise PocError("stats needs --config or --pairs")
    exp = run_significance(_config(args), args.out)
    _report_failures(exp)
    for r in exp.stats:
        print(f"{r.comparison}: n={r.n} p={r.p_value:.6g} effect={r.effect_size:.4f}")


def cmd_report(args):
    exp, same = rerun_manifest(args.manifest, args.out)
    diff = sorted(n for n, ok in same.items() if not ok)
    for n in diff:
        print(f"MISMATCH {n}")
    print(f"{len(same) - len(diff)}/{len(same)} report files reproduced byte-identically in {exp.out.root}")
    return 1 if diff else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phishpoc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("--data", required=True, help="dataset CSV")
        sp.add_argument("--schema", default="canonical", help="builtin schema name or schema JSON path")

    sp = sub.add_parser("extract", help="build a canonical-schema CSV from URLs and snapshots")
    sp.add_argument("--urls", required=True, help="file of 'url,label' lines")
    sp.add_argument("--snapshots", help="directory of snapshot JSON files")
    sp.add_argument("--out", required=True)
    sp.add_argument("--fetch", action="store_true", help="fetch snapshots for URLs that have none")
    sp.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    sp.add_argument("--max-in-flight", type=int, default=DEFAULT_IN_FLIGHT)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("train", help="train a detector (optionally on a feature map)")
    data_args(sp)
    sp.add_argument("--algorithm", required=True)
    sp.add_argument("--params", help="hyperparameters as JSON text or file")
    sp.add_argument("--grid", help="grid as JSON text or file; overrides --params")
    sp.add_argument("--folds", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--map", help="feature map file; trains a hardened detector")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="score a dataset with a model file")
    data_args(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("select-map", help="pick the best of N random feature maps")
    data_args(sp)
    sp.add_argument("--algorithm", required=True)
    sp.add_argument("--params")
    sp.add_argument("--candidates", type=int, default=100)
    sp.add_argument("--psi", type=int, default=20)
    sp.add_argument("--max-size", type=int, default=3)
    sp.add_argument("--prevalence", type=float, default=100.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_select_map)

    sp = sub.add_parser("attack", help="perturb the phishing rows of a dataset")
    data_args(sp)
    sp.add_argument("--attack", required=True, help="GBA1, GBA2, GBA3 or GBAd<delta>")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reference-from", help="CSV whose benign rows define the reference profile")
    sp.add_argument("--profile", help="attack profile JSON")
    sp.add_argument("--model", help="report the Impact on this model")
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_attack)

    for name, func, hlp in (("sweep", cmd_sweep, "baselines, hardened detectors and all attacks"),
                            ("prevalence", cmd_prevalence, "prevalence sweep"),
                            ("stats", cmd_stats, "significance tests")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", required=name != "stats")
        sp.add_argument("--out", help="output directory (default: from config)")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.set_defaults(func=func)
        if name == "prevalence":
            sp.add_argument("--targets", type=float, nargs="+")
        if name == "stats":
            sp.add_argument("--pairs", help="CSV of paired values (a,b)")
            sp.add_argument("--alpha", type=float, default=0.05)
            sp.add_argument("--comparisons", type=int, default=1)

    sp = sub.add_parser("report", help="re-run a manifest and verify byte-identical reports")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return int(args.func(args) or 0)
    except (PocError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
