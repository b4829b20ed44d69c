"""Command-line pipeline: generate, profile, featurize, train, evaluate,
study, recommend, and the end-to-end pipeline runner.

Every subcommand writes a manifest (tool version, resolved config,
sha256 of inputs) beside its outputs; all outputs are byte-stable for a
fixed seed, independent of thread count.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, evalkit, mlcore, recommend as rec
from .corpus import Corpus, load_corpus, write_corpus
from .pairfeat import SampleTable, build_training_set, read_samples, write_samples
from .profiling import KINDS, ProfileIndex, self_similarity_series
from .synthgen import GenConfig, generate

PRESETS = {
    "paper-desk": {
        "users": 5000,
        "videos": 2000,
        "tags": 300,
        "topics": 20,
        "cities": 12,
        "groups": 40,
        "pairs": 100_000,
        "rec_targets": 300,
        "rec_candidates": 600,
    },
}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(target, command: str, config: dict, inputs: list[Path], outputs: list[Path] = ()) -> None:
    """Config snapshot + input/output checksums + tool version, beside
    outputs.

    The thread count is deliberately not part of the snapshot: results
    must be byte-identical for any value.
    """
    target = Path(target)
    path = target / "manifest.json" if target.is_dir() else target.with_name(target.name + ".manifest.json")
    payload = {
        "tool_version": __version__,
        "command": command,
        "config": {k: v for k, v in sorted(config.items()) if k not in ("threads", "config")},
        "inputs": {str(p): _sha256(Path(p)) for p in sorted(str(x) for x in inputs)},
        "outputs": {str(p): _sha256(Path(p)) for p in sorted(str(x) for x in outputs)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like '-7:-1', got {text!r}") from None


def _parse_int_list(text: str) -> tuple[int, ...]:
    if ".." in text:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
        step = 10 if hi - lo >= 10 else 1
        return tuple(range(lo, hi + 1, step))
    return tuple(int(tok) for tok in text.split(","))


def _read_config_tokens(path: str) -> list[str]:
    tokens: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        tokens.append(f"--{key.strip().replace('_', '-')}")
        tokens.append(value.strip())
    return tokens


def _corpus_files(directory: Path) -> list[Path]:
    from .corpus import CSV_NAMES

    return [directory / name for name in CSV_NAMES.values()]


# -- subcommand implementations ---------------------------------------------


def cmd_generate(args) -> int:
    cfg = GenConfig(
        seed=args.seed,
        n_users=args.users,
        n_videos=args.videos,
        n_tags=args.tags,
        n_topics=args.topics,
        n_cities=args.cities,
        n_groups=args.groups,
        zipf_exponent=args.zipf,
        friend_interest=args.friend_interest,
        message_interest=args.message_interest,
        group_topic=args.group_topic,
        gender_topic_skew=args.gender_skew,
        daily_view_rate=args.view_rate,
        inactive_fraction=args.inactive_fraction,
        interest_drift=args.drift,
    )
    corpus, _ = generate(cfg)
    out = Path(args.out)
    write_corpus(corpus, out)
    write_manifest(out, "generate", dataclasses.asdict(cfg), [], _corpus_files(out))
    print(f"generate: wrote {corpus!r} to {out}")
    return 0


def cmd_profile(args) -> int:
    corpus = load_corpus(args.corpus)
    window = args.window
    idx = ProfileIndex(corpus, window, args.kind)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for row, uid in enumerate(idx.user_ids):
            start = idx.W.indptr[row]
            stop = idx.W.indptr[row + 1]
            items = idx.item_ids[idx.W.indices[start:stop]]
            weights = idx.W.data[start:stop]
            order = np.argsort(items)
            obj = {
                "id": int(uid),
                "window": list(window),
                "kind": args.kind,
                "weights": {str(int(items[i])): float(weights[i]) for i in order},
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    write_manifest(out, "profile", {"kind": args.kind, "window": list(window), "corpus": str(args.corpus)}, _corpus_files(Path(args.corpus)), [out])
    print(f"profile: wrote {len(idx.user_ids)} {args.kind} profiles to {out}")
    return 0


def cmd_featurize(args) -> int:
    corpus = load_corpus(args.corpus)
    table = build_training_set(corpus, args.pairs, args.kind, args.seed, threads=args.threads)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_samples(table, out)
    write_manifest(
        out,
        "featurize",
        {"kind": args.kind, "pairs": args.pairs, "seed": args.seed, "corpus": str(args.corpus)},
        _corpus_files(Path(args.corpus)),
        [out],
    )
    print(f"featurize: wrote {len(table)} {args.kind} samples to {out}")
    return 0


def _train_model(samples: SampleTable, model_kind: str, task: str, seed: int, folds: int):
    sims = samples.labels
    if sims is None:
        raise ValueError("training samples carry no labels")
    label_mean = float(np.mean(sims))
    if task == "clf":
        y = (sims > label_mean).astype(float)
        if y.min() == y.max():
            raise ValueError("degenerate labels: all on one side of the mean")
    else:
        y = sims
    data = samples.to_design(labels=y)
    model = evalkit.fit_model(model_kind, data, task, folds=folds, seed=seed)
    return model, label_mean


def cmd_train(args) -> int:
    samples = read_samples(args.infile)
    model, label_mean = _train_model(samples, args.model, args.task, args.seed, args.folds)
    payload = mlcore.model_to_dict(model)
    payload["train_meta"] = {
        "model_kind": args.model,
        "task": args.task,
        "profile_kind": samples.kind,
        "label_mean": label_mean,
        "n_samples": len(samples),
        "seed": args.seed,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    write_manifest(
        out,
        "train",
        {"model": args.model, "task": args.task, "seed": args.seed, "folds": args.folds, "in": str(args.infile)},
        [Path(args.infile)],
        [out],
    )
    print(f"train: {args.model}/{args.task} on {len(samples)} samples -> {out}")
    return 0


def load_model_file(path) -> tuple[object, dict]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    meta = payload.get("train_meta", {})
    return mlcore.model_from_dict(payload), meta


def cmd_evaluate(args) -> int:
    model, meta = load_model_file(args.model)
    samples = read_samples(args.test)
    if samples.labels is None:
        raise ValueError("test samples carry no labels")
    X, _, _ = samples.feature_matrix()
    scores = mlcore.predict(model, X)
    sims = samples.labels
    label_mean = meta.get("label_mean")
    if label_mean is None:
        raise ValueError("model file lacks train_meta.label_mean; was it written by `train`?")
    report = {
        "task": args.task,
        "model_kind": meta.get("model_kind"),
        "profile_kind": samples.kind,
        "n_test": len(samples),
    }
    if args.task == "clf":
        labels = sims > label_mean
        report["threshold"] = label_mean
        report["auc"] = evalkit.auc(scores, labels)
    else:
        report["train_mean"] = label_mean
        report["reduced_mae_pct"] = evalkit.reduced_mae_ratio(scores, sims, label_mean)
    out = Path(args.report)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_manifest(out, "evaluate", {"task": args.task, "model": str(args.model), "test": str(args.test)}, [Path(args.model), Path(args.test)], [out])
    metric = report.get("auc", report.get("reduced_mae_pct"))
    print(f"evaluate: {args.task} metric = {metric:.4f} -> {out}")
    return 0


def cmd_study(args) -> int:
    corpus = load_corpus(args.corpus)
    among = args.among
    if among == "auto":
        among = "friends" if args.key in ("msgcount", "msgdays") else "random"
    pairs = evalkit.sample_pairs(corpus, args.pairs, args.seed, among)
    table = evalkit.bucket_similarity(corpus, pairs, args.key, args.kind, n_bins=args.bins)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out)
    write_manifest(
        out,
        "study",
        {"key": args.key, "kind": args.kind, "pairs": args.pairs, "seed": args.seed, "bins": args.bins, "among": among, "corpus": str(args.corpus)},
        _corpus_files(Path(args.corpus)),
        [out],
    )
    print(f"study: {args.key}/{args.kind} over {len(pairs[0])} pairs ({among}) -> {out}")
    return 0


STRATEGY_NAMES = (
    "predicted-ptp",
    "predicted-rtp",
    "predicted-vbp",
    "oracle-ptp",
    "oracle-rtp",
    "oracle-vbp",
    "demo",
    "friends",
    "past",
    "random",
    "popular",
)


def _make_strategy(name: str, model_path=None):
    if name.startswith("predicted-"):
        kind = name.split("-", 1)[1]
        if model_path is None:
            raise ValueError(f"strategy {name} needs --model")
        model, _ = load_model_file(model_path)
        return rec.PredictedSim(kind, model)
    if name.startswith("oracle-"):
        return rec.OracleSim(name.split("-", 1)[1])
    return {
        "demo": rec.DemographicSim(),
        "friends": rec.FriendFilter(),
        "past": rec.PastLongTerm(),
        "random": rec.RandomK(),
        "popular": rec.GlobalPopularity(),
    }[name]


def cmd_recommend(args) -> int:
    corpus = load_corpus(args.corpus)
    strategy = _make_strategy(args.strategy, args.model)
    cfg = rec.ExperimentConfig(
        n_targets=args.targets,
        n_candidates=args.candidates,
        k_values=args.K,
        n_values=args.N,
        seed=args.seed,
    )
    rows = rec.run_experiment(corpus, cfg, [strategy])
    out = Path(args.report)
    out.parent.mkdir(parents=True, exist_ok=True)
    rec.write_report(rows, out)
    inputs = _corpus_files(Path(args.corpus))
    if args.model:
        inputs.append(Path(args.model))
    write_manifest(
        out,
        "recommend",
        {
            "strategy": args.strategy,
            "K": list(args.K),
            "N": list(args.N),
            "targets": args.targets,
            "candidates": args.candidates,
            "seed": args.seed,
            "corpus": str(args.corpus),
        },
        inputs,
        [out],
    )
    print(f"recommend: {args.strategy} grid ({len(rows)} rows) -> {out}")
    return 0


# -- pipeline -----------------------------------------------------------------


def _pipeline_models(out: Path, samples, seed: int, log) -> dict:
    """Train/evaluate the model table and the per-kind hybrids."""
    from .evalkit import run_protocol

    results = []
    models_dir = out / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    hybrids = {}
    for task in ("clf", "reg"):
        for kind_name in mlcore.MODEL_KINDS:
            report, model = run_protocol(samples["ptp"], kind_name, task, seed=seed)
            metric = report.get("auc", report.get("reduced_mae_pct"))
            log(f"  {kind_name:8s} {task} ptp -> {metric:.4f}")
            results.append(report)
            if kind_name == "hybrid":
                mlcore.save_model(model, models_dir / f"hybrid_{task}_ptp.json")
                if task == "reg":
                    hybrids["ptp"] = model
    for kind in ("rtp", "vbp"):
        report, model = run_protocol(samples[kind], "hybrid", "reg", seed=seed)
        log(f"  hybrid   reg {kind} -> {report['reduced_mae_pct']:.4f}")
        results.append(report)
        mlcore.save_model(model, models_dir / f"hybrid_reg_{kind}.json")
        hybrids[kind] = model
    with open(out / "reports" / "models.json", "w", encoding="utf-8") as fh:
        json.dump(results, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return hybrids


def cmd_pipeline(args) -> int:
    preset = PRESETS[args.preset]
    out = Path(args.out)
    (out / "reports").mkdir(parents=True, exist_ok=True)

    def log(msg: str) -> None:
        print(msg, flush=True)

    seed = args.seed
    cfg = GenConfig(
        seed=seed,
        n_users=preset["users"],
        n_videos=preset["videos"],
        n_tags=preset["tags"],
        n_topics=preset["topics"],
        n_cities=preset["cities"],
        n_groups=preset["groups"],
    )
    log(f"pipeline[{args.preset}]: generating corpus (seed {seed})")
    corpus, _ = generate(cfg)
    write_corpus(corpus, out / "corpus")

    log("pipeline: profiling day-0 PTP/RTP")
    for kind in ("ptp", "rtp"):
        prof_args = argparse.Namespace(corpus=out / "corpus", kind=kind, window=(0, 0), out=out / "profiles" / f"day0_{kind}.jsonl")
        cmd_profile(prof_args)

    samples_dir = out / "samples"
    samples_dir.mkdir(parents=True, exist_ok=True)
    samples_full: dict[str, SampleTable] = {}
    for kind in KINDS:
        log(f"pipeline: featurizing {preset['pairs']} {kind} pairs")
        table = build_training_set(corpus, preset["pairs"], kind, seed, threads=args.threads)
        samples_full[kind] = table
        # persist the same 70/30 split run_protocol derives from this seed
        split = evalkit.train_test_split(len(table), 0.7, seed)
        for part, idx in (("train", split.train), ("test", split.test)):
            cols = {k: v[idx] for k, v in table.columns.items()}
            write_samples(SampleTable(kind, cols, table.labels[idx]), samples_dir / f"{part}_{kind}.csv")

    log("pipeline: training the model table")
    hybrids = _pipeline_models(out, samples_full, seed, log)

    log("pipeline: feature-combination ablation (clf, ptp)")
    ablation = evalkit.ablation_sweep(samples_full["ptp"], task="clf", seed=seed)
    with open(out / "reports" / "ablation.json", "w", encoding="utf-8") as fh:
        json.dump(ablation, fh, sort_keys=True, indent=2)
        fh.write("\n")

    log("pipeline: correlation study tables")
    study_dir = out / "study"
    study_dir.mkdir(parents=True, exist_ok=True)
    random_pairs = evalkit.sample_pairs(corpus, 60_000, seed, "random")
    friend_pairs = evalkit.sample_pairs(corpus, 30_000, seed, "friends")
    for key in ("gender", "friendship", "msgdays", "friendratio", "individuality", "samecity"):
        pairs = friend_pairs if key in ("msgcount", "msgdays") else random_pairs
        for kind in ("ptp", "rtp"):
            table = evalkit.bucket_similarity(corpus, pairs, key, kind)
            table.to_csv(study_dir / f"{key}_{kind}.csv")
    _selfsim_table(corpus, seed, study_dir / "selfsim.csv")

    log("pipeline: recommendation grid")
    strategies = [rec.PredictedSim(k, hybrids[k]) for k in KINDS]
    strategies += [rec.OracleSim("ptp"), rec.OracleSim("rtp"), rec.DemographicSim(), rec.FriendFilter(), rec.PastLongTerm(), rec.RandomK(), rec.GlobalPopularity()]
    cfg_rec = rec.ExperimentConfig(
        n_targets=preset["rec_targets"],
        n_candidates=preset["rec_candidates"],
        k_values=(10, 15),
        n_values=tuple(range(10, 101, 10)),
        seed=seed,
    )
    rows = rec.run_experiment(corpus, cfg_rec, strategies)
    rec.write_report(rows, out / "reports" / "recommend.csv")

    write_manifest(
        out,
        "pipeline",
        {"preset": args.preset, "seed": seed, **preset},
        [],
        sorted((out / "reports").glob("*")) + sorted((out / "samples").glob("*.csv")) + sorted((out / "study").glob("*.csv")),
    )
    log(f"pipeline: done -> {out}")
    return 0


def _selfsim_table(corpus: Corpus, seed: int, path: Path) -> None:
    import csv as _csv

    from .corpus import active_users

    lags = [1, 3, 7, 14, 21, 30]
    actives = sorted(active_users(corpus, (0, 0)))
    rng = np.random.default_rng(seed)
    cohort = rng.choice(np.asarray(actives), size=min(400, len(actives)), replace=False)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "lag", "mean_self_similarity", "count", "stderr"])
        for kind in ("ptp", "rtp"):
            series = {lag: [] for lag in lags}
            for u in cohort:
                vals = self_similarity_series(corpus, int(u), kind, lags)
                for lag, v in zip(lags, vals):
                    if v is not None:
                        series[lag].append(v)
            for lag in lags:
                vals = np.asarray(series[lag])
                se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
                writer.writerow([kind, lag, "%.9g" % vals.mean(), len(vals), "%.9g" % se])


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interestsim",
        description="Tag-profile interest similarity: synthetic corpora, correlation studies, similarity models, cold-start recommendation.",
    )
    parser.add_argument("--version", action="version", version=f"interestsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a seeded synthetic corpus")
    p.add_argument("--config", help="key=value config file; flags override")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--videos", type=int, default=400)
    p.add_argument("--tags", type=int, default=120)
    p.add_argument("--topics", type=int, default=12)
    p.add_argument("--cities", type=int, default=8)
    p.add_argument("--groups", type=int, default=24)
    p.add_argument("--zipf", type=float, default=1.1)
    p.add_argument("--friend-interest", type=float, default=0.8)
    p.add_argument("--message-interest", type=float, default=0.8)
    p.add_argument("--group-topic", type=float, default=0.8)
    p.add_argument("--gender-skew", type=float, default=0.6)
    p.add_argument("--view-rate", type=float, default=4.0)
    p.add_argument("--inactive-fraction", type=float, default=0.1)
    p.add_argument("--drift", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("profile", help="write per-user profiles as JSONL")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kind", choices=KINDS, default="ptp")
    p.add_argument("--window", type=_parse_window, default=(0, 0), help="day window, e.g. -7:-1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("featurize", help="sample training pairs and write features")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kind", choices=KINDS, default="ptp")
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit a similarity model on sample CSV")
    p.add_argument("--model", choices=mlcore.MODEL_KINDS, required=True)
    p.add_argument("--task", choices=("clf", "reg"), required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model on held-out samples")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--task", choices=("clf", "reg"), required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("study", help="bucketed similarity table for one feature")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kind", choices=("ptp", "rtp", "vbp"), default="ptp")
    p.add_argument("--key", choices=evalkit.BUCKET_KEYS, required=True)
    p.add_argument("--pairs", type=int, default=20_000)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--among", choices=("auto", "random", "friends"), default="auto",
                   help="pair population; msg keys default to friend pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("recommend", help="cold-start top-N experiment for one strategy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategy", choices=STRATEGY_NAMES, required=True)
    p.add_argument("--model", help="model.json for predicted-* strategies")
    p.add_argument("--K", type=_parse_int_list, default=(15,))
    p.add_argument("--N", type=_parse_int_list, default=tuple(range(10, 101, 10)))
    p.add_argument("--targets", type=int, default=2000)
    p.add_argument("--candidates", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("pipeline", help="end-to-end run over a preset")
    p.add_argument("--preset", choices=sorted(PRESETS), default="paper-desk")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # expand a --config file into leading flags so explicit flags override
    if "--config" in argv:
        i = argv.index("--config")
        try:
            cfg_path = argv[i + 1]
        except IndexError:
            print("error: --config needs a path", file=sys.stderr)
            return 2
        head, tail = argv[: i + 2], argv[i + 2 :]
        argv = head[:1] + _read_config_tokens(cfg_path) + head[1:] + tail
    # argparse rejects option values with a leading dash ("-7:-1"); fuse them
    fused: list[str] = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok == "--window" and i + 1 < len(argv):
            fused.append(f"--window={argv[i + 1]}")
            skip = True
        else:
            fused.append(tok)
    argv = fused
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # structured failure, exit 1
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
