"""Command-line surface: train populations, measure, build vocabularies, compare.

Exit codes are a stable contract: 0 success, 1 partial failure (work
continued but something went wrong), 2 usage or configuration error, 3 data
or I/O error.  Every command writes a run record (resolved parameters, seeds,
and sha256 hashes of written artifacts) next to its main output.
"""

import argparse
import datetime
import hashlib
import json
import math
import os
import re
import sys

import numpy as np

from . import bon, centrality, descriptors, plots, trainer
from .errors import (
    FormatError,
    NeurotopoError,
    NumericalError,
    ResourceBudgetError,
    StructuralError,
)
from .model import load_model

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_DATA = 3


class _UsageError(NeurotopoError):
    pass


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_record(anchor, command, params, artifacts):
    """run.json beside the main output: {anchor}/run.json for directories,
    {anchor}.run.json for files."""
    record = {
        "command": command,
        "parameters": params,
        "artifacts": {os.path.basename(p): _sha256(p) for p in artifacts if os.path.exists(p)},
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = os.path.join(anchor, "run.json") if os.path.isdir(anchor) else f"{anchor}.run.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _find_idx_pair(data_dir, images_base, labels_base):
    if not os.path.isdir(data_dir):
        raise FileNotFoundError(f"data directory {data_dir!r} does not exist")
    pair = []
    for base in (images_base, labels_base):
        for candidate in (base, base + ".gz"):
            path = os.path.join(data_dir, candidate)
            if os.path.exists(path):
                pair.append(path)
                break
        else:
            raise FileNotFoundError(f"{data_dir}: missing {base}[.gz]")
    return pair


def _parse_arch(text):
    try:
        arch = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise _UsageError(f"--arch must be a comma-separated integer list, got {text!r}")
    if len(arch) < 2 or any(x < 1 for x in arch):
        raise _UsageError(f"--arch needs >= 2 positive layer sizes, got {text!r}")
    return arch


def cmd_train(args):
    arch = _parse_arch(args.arch)
    if args.count < 1:
        raise _UsageError("--count must be >= 1")
    train_images, train_labels = _find_idx_pair(
        args.data, "train-images-idx3-ubyte", "train-labels-idx1-ubyte"
    )
    test_images, test_labels = _find_idx_pair(
        args.data, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"
    )
    train_set = trainer.load_idx(train_images, train_labels, split="train")
    test_set = trainer.load_idx(test_images, test_labels, split="test")
    if args.train_limit:
        train_set = train_set.subset(args.train_limit)
    if args.test_limit:
        test_set = test_set.subset(args.test_limit)
    config = trainer.TrainingConfig(
        arch=arch,
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        init_half_range=args.init_range,
        seed=args.data_seed,
    )
    seeds = list(range(args.weight_seed_base, args.weight_seed_base + args.count))
    manifest = trainer.generate_population(
        train_set,
        test_set,
        config,
        seeds,
        args.out,
        dataset_id=args.dataset_id,
        workers=args.workers,
    )
    artifacts = [os.path.join(args.out, "manifest.json")] + [
        os.path.join(args.out, e["model_path"]) for e in manifest if e["model_path"]
    ]
    _write_run_record(
        args.out,
        "train",
        {
            "data": args.data,
            "count": args.count,
            "weight_seed_base": args.weight_seed_base,
            "data_seed": args.data_seed,
            "arch": list(arch),
            "epochs": args.epochs,
            "lr": args.lr,
            "batch": args.batch,
            "init_range": args.init_range,
            "dataset_id": args.dataset_id,
            "train_limit": args.train_limit,
            "test_limit": args.test_limit,
        },
        artifacts,
    )
    failed = [e for e in manifest if e["status"].startswith("failed")]
    for e in failed:
        print(f"seed {e['seed']}: {e['status']}", file=sys.stderr)
    print(f"trained {len(manifest) - len(failed)}/{len(manifest)} networks into {args.out}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _model_paths(models_dir):
    if not os.path.isdir(models_dir):
        raise FileNotFoundError(f"models directory {models_dir!r} does not exist")
    names = [
        n
        for n in os.listdir(models_dir)
        if n.endswith(".json") and n not in ("manifest.json", "run.json")
    ]
    if not names:
        raise FormatError(f"{models_dir}: no model files found")

    def key(name):
        m = re.fullmatch(r"model_seed(\d+)\.json", name)
        return (0, int(m.group(1)), name) if m else (1, 0, name)

    return [os.path.join(models_dir, n) for n in sorted(names, key=key)]


def _parse_measures(text):
    if text == "all":
        return centrality.MEASURE_ORDER
    requested = tuple(m.strip() for m in text.split(","))
    unknown = [m for m in requested if m not in centrality.MEASURES]
    if unknown:
        raise _UsageError(
            f"unknown measures {unknown}; valid ids: {', '.join(centrality.MEASURE_ORDER)}"
        )
    return requested


def cmd_measure(args):
    measures = _parse_measures(args.measures)
    tables = []
    for path in _model_paths(args.models):
        net = load_model(path)
        tables.append(
            centrality.measure_all(net, measures=measures, cfc_mode=args.cfc_mode)
        )
    centrality.write_measures_csv(tables, args.out)
    _write_run_record(
        args.out,
        "measure",
        {"models": args.models, "measures": list(measures), "cfc_mode": args.cfc_mode},
        [args.out],
    )
    print(f"measured {len(tables)} networks -> {args.out}")
    return EXIT_OK


def _load_accuracies(manifest_path):
    if manifest_path is None:
        return None
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{manifest_path}: not valid JSON ({exc})")
    accs = {}
    for entry in manifest:
        if entry.get("test_acc") is not None:
            accs[f"seed{entry['seed']}"] = float(entry["test_acc"])
    return accs


def cmd_vocab_build(args):
    tables = centrality.read_measures_csv(args.measures_csv)
    measures = _parse_measures(args.measures) if args.measures else tables[0].measures
    fm = descriptors.build_feature_matrix(tables, measures)
    curve_out = None
    if args.elbow:
        kmin, kmax = args.elbow
        result = bon.elbow_scan(
            fm, kmin, kmax, restarts=args.restarts, seed=args.seed
        )
        k = result.k_star
        note = " (low confidence)" if result.low_confidence else ""
        print(f"elbow scan chose k*={k}{note}")
        curve_out = args.curve_out or f"{args.out}.curve.csv"
        with open(curve_out, "w", encoding="utf-8") as fh:
            fh.write("k,inertia\n")
            for kk, inertia in zip(result.ks, result.inertias):
                fh.write(f"{int(kk)},{repr(float(inertia))}\n")
    else:
        k = args.k
    vocab = bon.kmeans(
        fm, k, restarts=args.restarts, seed=args.seed, benchmark_id=args.benchmark_id
    )
    bon.save_vocabulary(vocab, args.out)
    artifacts = [args.out] + ([curve_out] if curve_out else [])
    _write_run_record(
        args.out,
        "vocab build",
        {
            "measures_csv": args.measures_csv,
            "measures": list(measures),
            "k": int(k),
            "elbow": list(args.elbow) if args.elbow else None,
            "restarts": args.restarts,
            "seed": args.seed,
            "benchmark_id": args.benchmark_id,
        },
        artifacts,
    )
    print(f"vocabulary with k={k} -> {args.out}")
    return EXIT_OK


def cmd_vocab_assign(args):
    vocab = bon.load_vocabulary(args.vocab)
    accs = _load_accuracies(args.manifest)
    tables = centrality.read_measures_csv(args.measures_csv, accuracies=accs)
    records = []
    for t in tables:
        records.append(
            bon.PopulationRecord(
                network_id=t.network_id,
                test_acc=t.test_acc,
                occurrence=bon.occurrence(vocab, t),
            )
        )
    bon.write_occurrence_csv(vocab, records, args.out)
    _write_run_record(
        args.out,
        "vocab assign",
        {"vocab": args.vocab, "measures_csv": args.measures_csv, "manifest": args.manifest},
        [args.out],
    )
    print(f"occurrence histograms for {len(records)} networks -> {args.out}")
    return EXIT_OK


def _population_csv(path):
    if os.path.isdir(path):
        candidate = os.path.join(path, "measures.csv")
        if not os.path.exists(candidate):
            raise FileNotFoundError(f"{path}: no measures.csv in population directory")
        return candidate
    if not os.path.exists(path):
        raise FileNotFoundError(f"{path}: population measures CSV does not exist")
    return path


def cmd_compare(args):
    vocab_a = bon.load_vocabulary(args.vocab_a)
    vocab_b = bon.load_vocabulary(args.vocab_b)
    tables = centrality.read_measures_csv(_population_csv(args.population))
    result = bon.cross_benchmark_jsd(vocab_a, vocab_b, tables)
    doc = {
        "vocab_a": args.vocab_a,
        "vocab_b": args.vocab_b,
        "count": len(result.per_network),
        "jsd_mean": result.mean,
        "jsd_std": result.std,
        "per_network": result.per_network,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_run_record(
        args.out,
        "compare",
        {"vocab_a": args.vocab_a, "vocab_b": args.vocab_b, "population": args.population},
        [args.out],
    )
    print(f"JSD mean {result.mean:.4f} (std {result.std:.4f}) over {doc['count']} networks")
    return EXIT_OK


def _fmt_float(x):
    return "NaN" if math.isnan(x) else repr(float(x))


def cmd_plot(args):
    if args.what == "scatter":
        if not args.measures_csv or not args.measure:
            raise _UsageError("scatter needs --measures-csv and --measure")
        accs = _load_accuracies(args.manifest)
        tables = centrality.read_measures_csv(args.measures_csv, accuracies=accs)
        points = descriptors.scatter_points(tables, args.measure)
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write("network_id,x,y,test_acc\n")
            for p in points:
                fh.write(f"{p.network_id},{_fmt_float(p.x)},{_fmt_float(p.y)},{_fmt_float(p.test_acc)}\n")
        if args.out_svg:
            svg = plots.svg_scatter(
                points,
                f"layer means of {args.measure}",
                f"layer-1 mean {args.measure}",
                f"layer-2 mean {args.measure}",
            )
            with open(args.out_svg, "w", encoding="utf-8") as fh:
                fh.write(svg)
    elif args.what == "hist":
        if not args.occurrence_csv:
            raise _UsageError("hist needs --occurrence-csv")
        records = bon.read_occurrence_csv(args.occurrence_csv)
        worst, median, top = bon.accuracy_groups(
            [(r.network_id, r.test_acc) for r in records], args.group_size
        )
        by_id = {r.network_id: r for r in records}
        names = ("worst", "median", "top")
        freqs = np.stack(
            [
                np.mean([by_id[nid].occurrence for nid in group], axis=0)
                for group in (worst, median, top)
            ]
        )
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write("group,type,frequency\n")
            for g, name in enumerate(names):
                for j in range(freqs.shape[1]):
                    fh.write(f"{name},{j + 1},{repr(float(freqs[g, j]))}\n")
        if args.out_svg:
            svg = plots.svg_group_bars(names, freqs, "neuron type occurrence by accuracy group")
            with open(args.out_svg, "w", encoding="utf-8") as fh:
                fh.write(svg)
    elif args.what == "corr":
        if not args.measures_csv:
            raise _UsageError("corr needs --measures-csv")
        tables = centrality.read_measures_csv(args.measures_csv)
        measures = tables[0].measures
        raw = np.vstack([t.values for t in tables])
        raw = raw[~np.isnan(raw).any(axis=1)]
        corr = descriptors.pearson_matrix(raw)
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write("measure," + ",".join(measures) + "\n")
            for i, m in enumerate(measures):
                fh.write(m + "," + ",".join(_fmt_float(v) for v in corr[i]) + "\n")
        if args.out_svg:
            svg = plots.svg_heatmap(corr, measures, "measure correlation")
            with open(args.out_svg, "w", encoding="utf-8") as fh:
                fh.write(svg)
    artifacts = [p for p in (args.out_csv, args.out_svg) if p]
    _write_run_record(args.out_csv, f"plot {args.what}", vars(args) | {"func": None}, artifacts)
    print(f"plot data -> {args.out_csv}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="neurotopo",
        description="Complex-network analysis of fully connected neural networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a seeded population of networks")
    p.add_argument("--data", required=True, help="directory with IDX train/t10k files")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--weight-seed-base", type=int, default=0)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--arch", default="784,200,100,10")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--init-range", type=float, default=0.9)
    p.add_argument("--dataset-id", default="")
    p.add_argument("--train-limit", type=int, default=0)
    p.add_argument("--test-limit", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("measure", help="compute centrality measures for trained models")
    p.add_argument("--models", required=True)
    p.add_argument("--measures", default="all", help="comma list or 'all'")
    p.add_argument("--cfc-mode", choices=("raw", "absolute"), default="raw")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_measure)

    vocab = sub.add_parser("vocab", help="build or apply a Bag-of-Neurons vocabulary")
    vsub = vocab.add_subparsers(dest="vocab_command", required=True)

    p = vsub.add_parser("build")
    p.add_argument("--measures-csv", required=True)
    p.add_argument("--measures", default=None, help="subset of the CSV's measure columns")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--k", type=int)
    group.add_argument("--elbow", nargs=2, type=int, metavar=("KMIN", "KMAX"))
    p.add_argument("--curve-out", default=None)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--benchmark-id", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vocab_build)

    p = vsub.add_parser("assign")
    p.add_argument("--vocab", required=True)
    p.add_argument("--measures-csv", required=True)
    p.add_argument("--manifest", default=None, help="population manifest for test accuracies")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vocab_assign)

    p = sub.add_parser("compare", help="cross-vocabulary JSD over a population")
    p.add_argument("--vocab-a", required=True, help="source vocabulary")
    p.add_argument("--vocab-b", required=True, help="native vocabulary of the population")
    p.add_argument("--population", required=True, help="measures CSV (or directory with measures.csv)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", help="emit plot-ready CSV and optional static SVG")
    p.add_argument("--what", choices=("scatter", "hist", "corr"), required=True)
    p.add_argument("--measures-csv", default=None)
    p.add_argument("--measure", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--occurrence-csv", default=None)
    p.add_argument("--group-size", type=int, default=10)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg", default=None)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except (_UsageError, StructuralError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, FileNotFoundError, NotADirectoryError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ResourceBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


def entrypoint():
    sys.exit(main())
