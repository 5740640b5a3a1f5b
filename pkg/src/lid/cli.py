"""Command line entry point: one executable, one config tree.

Every value a subcommand needs lives in the JSON config; flags override
config fields (flag > file > default) and ``--set section.field=value``
reaches anything without a dedicated flag. Artifact-producing commands
write a ``run_manifest.json`` recording the config digest, input
digests, and artifact digests, so a run is reproducible and auditable
from its output directory alone.

Exit codes: 0 success, 1 usage, 2 data problem, 3 training failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import CONFIG_SCHEMA_VERSION, MODEL_FORMAT_VERSION, __version__
from .codeswitch import SpanPredictor, extract_phrases, tag_words, verify_phrase
from .compress import CompressionConfig, compress_train, size_report
from .config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    config_digest,
    default_config,
    load_config,
    to_canonical_json,
)
from .corpus import (
    ManifestError,
    build_samples,
    clean_text,
    load_manifest,
    manifest_sources,
    read_split_file,
    split_dataset,
    write_split_files,
)
from .evaluation import StabilityError, evaluate, inventory_sweep, stability_run
from .features import HashedSpace, select_top_k
from .models import (
    ModelFormatError,
    NoSignalError,
    TrainConfig,
    TrainingDivergedError,
    load_model,
    predict_topk,
    save_model,
    train_embed,
    train_linear,
    train_mlp,
    train_nb,
)
from .models.embed import EmbeddingClassifier
from .synth import generate_corpus, make_language_specs

log = logging.getLogger("lid")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAIN = 0, 1, 2, 3

ARCHES = ("nb", "svm", "mlp-select", "mlp-hash", "embed")
_DEFAULT_LR = {"svm": 0.5, "mlp-select": 1e-3, "mlp-hash": 1e-3, "embed": 0.05}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract here is 1.
    def error(self, message):
        raise UsageError(message)


# --- small helpers -----------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _csv_numbers(text: str, kind, what: str):
    try:
        return tuple(kind(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"{what} must be comma-separated {kind.__name__}s, got {text!r}")


def _load_pairs(data_dir: str, split: str) -> list[tuple[str, str]]:
    path = Path(data_dir) / f"{split}.tsv"
    if not path.exists():
        raise ManifestError(f"split file not found: {path}")
    return [(s.text, s.label) for s in read_split_file(path)]


def _write_run_manifest(
    out_dir: Path, command: str, cfg: RunConfig, inputs: dict[str, Path], artifacts: list[Path]
) -> None:
    doc = {
        "command": command,
        "config_digest": config_digest(cfg),
        "config": json.loads(to_canonical_json(cfg)),
        "inputs": {name: _sha256(p) for name, p in sorted(inputs.items())},
        "artifacts": {p.name: _sha256(p) for p in artifacts},
    }
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _train_config(cfg: RunConfig, arch: str) -> TrainConfig:
    lr = cfg.train.lr if cfg.train.lr is not None else _DEFAULT_LR.get(arch, 0.1)
    return TrainConfig(
        epochs=cfg.train.epochs,
        lr=lr,
        batch_size=cfg.train.batch_size,
        seed=cfg.seed,
        subset_cap=cfg.train.subset_cap,
        patience=cfg.train.patience,
        l2=cfg.train.l2,
    )


def _feature_space(cfg: RunConfig, pairs, forced: str | None = None):
    space = forced or cfg.features.space
    if space == "selected":
        return select_top_k(pairs, n=cfg.features.n, k=cfg.features.k)
    if space == "hashed":
        return HashedSpace(bins=cfg.features.bins, n_range=tuple(cfg.features.n_range))
    raise ConfigError(f"features.space must be 'hashed' or 'selected', got {space!r}")


def _train_model(arch, cfg, train_pairs, valid_pairs=None, labels=None):
    tc = _train_config(cfg, arch)
    log.info("training %s on %d samples", arch, len(train_pairs))
    if arch == "nb":
        return train_nb(train_pairs, _feature_space(cfg, train_pairs), cfg.nb.alpha, labels)
    if arch == "svm":
        return train_linear(train_pairs, _feature_space(cfg, train_pairs), tc, labels)
    if arch in ("mlp-select", "mlp-hash"):
        forced = "selected" if arch == "mlp-select" else "hashed"
        return train_mlp(
            train_pairs,
            _feature_space(cfg, train_pairs, forced),
            tc,
            eval_pairs=valid_pairs,
            labels=labels,
        )
    if arch == "embed":
        e = cfg.embed
        return train_embed(
            train_pairs,
            tc,
            dim=e.dim,
            n_range=tuple(e.n_range),
            buckets=e.buckets,
            neg_samples=e.neg_samples,
            min_count=e.min_count,
            labels=labels,
        )
    raise UsageError(f"unknown architecture {arch!r}")


# --- subcommand handlers -----------------------------------------------------


def _cmd_corpus(args, cfg: RunConfig) -> int:
    workers = 1 if args.deterministic else max(1, args.workers)
    docs = load_manifest(args.manifest, workers=workers)
    log.info("loaded %d documents from %s", len(docs), args.manifest)
    samples = build_samples(docs, width=cfg.corpus.width)
    split = split_dataset(samples, ratios=tuple(cfg.corpus.ratios), seed=cfg.seed)
    out_dir = Path(args.out)
    paths = write_split_files(split, out_dir)
    log.info(
        "wrote %d/%d/%d train/test/valid samples to %s",
        len(split.train), len(split.test), len(split.valid), out_dir,
    )
    inputs = {"manifest": Path(args.manifest)}
    for src in manifest_sources(args.manifest):
        inputs[f"source:{src.name}"] = src
    _write_run_manifest(out_dir, "corpus build", cfg, inputs, list(paths.values()))
    return EXIT_OK


def _cmd_synth(args, cfg: RunConfig) -> int:
    s = cfg.synth
    specs = make_language_specs(s.n_langs, s.overlap, seed=cfg.seed)
    corpus = generate_corpus(
        specs, s.samples_per_lang, seed=cfg.seed, words_range=tuple(s.words_range)
    )
    split = split_dataset(corpus, ratios=tuple(cfg.corpus.ratios), seed=cfg.seed)
    out_dir = Path(args.out)
    paths = write_split_files(split, out_dir)
    log.info(
        "synthesized %d samples over %d languages (overlap %.2f)",
        len(corpus), s.n_langs, s.overlap,
    )
    _write_run_manifest(out_dir, "synth", cfg, {}, list(paths.values()))
    return EXIT_OK


def _cmd_train(args, cfg: RunConfig) -> int:
    train_pairs = _load_pairs(args.data, "train")
    valid_path = Path(args.data) / "valid.tsv"
    valid_pairs = _load_pairs(args.data, "valid") if valid_path.exists() else None
    model = _train_model(args.arch, cfg, train_pairs, valid_pairs)
    model.config_digest = config_digest(cfg)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    log.info("saved %s model with %d labels to %s", args.arch, len(model.labels), out)
    inputs = {"train": Path(args.data) / "train.tsv"}
    if valid_pairs is not None:
        inputs["valid"] = valid_path
    _write_run_manifest(out.parent, "train", cfg, inputs, [out])
    return EXIT_OK


def _cmd_predict(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    if args.topk < 1:
        raise UsageError("--topk must be >= 1")
    for line in sys.stdin:
        text = line.rstrip("\n")
        try:
            ranked = predict_topk(model, text, args.topk)
        except NoSignalError:
            print()  # keep the 1:1 line mapping; nothing to say about this one
            continue
        print("\t".join(f"{label}\t{prob:.17g}" for label, prob in ranked))
    return EXIT_OK


def _cmd_evaluate(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    pairs = _load_pairs(args.data, args.split)
    report = evaluate(model, pairs)
    doc = json.loads(report.to_json())
    if cfg.eval.groups:
        doc["groups"] = {}
        for name, members in sorted(cfg.eval.groups.items()):
            p, r, f = report.group(members)
            doc["groups"][name] = {"precision": p, "recall": r, "f1": f}

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / "report.json"
        report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        _write_run_manifest(
            out_dir, "evaluate", cfg,
            {"model": Path(args.model), "data": Path(args.data) / f"{args.split}.tsv"},
            [report_path],
        )
        print(report.to_table())
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_codeswitch(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    predictor = SpanPredictor(model, width=cfg.codeswitch.span_width)
    algorithm = {"1": "alg1", "2": "alg2", "baseline": "baseline"}[args.algorithm]
    threshold = cfg.codeswitch.threshold if args.threshold is None else args.threshold
    min_len = cfg.codeswitch.min_len if args.min_len is None else args.min_len

    for line in sys.stdin:
        text = clean_text(line.rstrip("\n"))
        if not text:
            print()
            continue
        tagging = tag_words(predictor, text, algorithm, threshold)
        phrases = [
            {
                "start": ph.start,
                "end": ph.end,
                "text": ph.text,
                "verified": verify_phrase(predictor, ph, threshold),
            }
            for ph in extract_phrases(tagging, min_len)
        ]
        print(
            json.dumps(
                {
                    "algorithm": tagging.algorithm_id,
                    "words": list(tagging.words),
                    "p_english": list(tagging.probabilities),
                    "labels": list(tagging.labels),
                    "phrases": phrases,
                },
                ensure_ascii=False,
                sort_keys=True,
            )
        )
    return EXIT_OK


def _cmd_compress(args, cfg: RunConfig) -> int:
    original = load_model(args.model)
    if not isinstance(original, EmbeddingClassifier):
        raise ModelFormatError("compression applies to embedding models only")
    comp = CompressionConfig(
        dim=cfg.compress.dim if args.dim is None else args.dim,
        min_count=cfg.compress.min_count if args.min_count is None else args.min_count,
        quantize=cfg.compress.quantize if args.quantize is None else args.quantize,
    )
    pairs = _load_pairs(args.data, "train")
    small = compress_train(
        pairs,
        comp,
        cfg=_train_config(cfg, "embed"),
        buckets=original.buckets,
        n_range=original.n_range,
        neg_samples=original.neg_samples,
        labels=original.labels,
    )
    small.config_digest = config_digest(cfg)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(small, out)
    before, after = size_report(original), size_report(small)
    print(
        json.dumps(
            {
                "original": {"params": before.params, "tensor_bytes": before.tensor_bytes},
                "compressed": {"params": after.params, "tensor_bytes": after.tensor_bytes},
            },
            sort_keys=True,
        )
    )
    _write_run_manifest(
        out.parent, "compress", cfg,
        {"model": Path(args.model), "train": Path(args.data) / "train.tsv"},
        [out],
    )
    return EXIT_OK


def _cmd_sweep(args, cfg: RunConfig) -> int:
    sizes = _csv_numbers(args.sizes, int, "--sizes")
    train_pairs = _load_pairs(args.data, "train")
    test_pairs = _load_pairs(args.data, "test")

    def train_fn(pairs, labels):
        return _train_model(args.arch, cfg, pairs, labels=labels)

    points = inventory_sweep(train_pairs, test_pairs, sizes, train_fn)
    doc = [
        {
            "size": p.size,
            "labels": p.labels,
            "weighted_f1": p.report.weighted_f1,
            "accuracy": p.report.accuracy,
        }
        for p in points
    ]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep_path = out_dir / "sweep.json"
    sweep_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for p in points:
        log.info("size %d: weighted F1 %.4f", p.size, p.report.weighted_f1)
    _write_run_manifest(
        out_dir, "sweep", cfg,
        {"train": Path(args.data) / "train.tsv", "test": Path(args.data) / "test.tsv"},
        [sweep_path],
    )
    return EXIT_OK


def _cmd_stability(args, cfg: RunConfig) -> int:
    seeds = _csv_numbers(args.seeds, int, "--seeds")
    if args.deterministic:
        seeds = tuple(cfg.seed for _ in seeds)
    train_pairs = _load_pairs(args.data, "train")
    test_pairs = _load_pairs(args.data, "test")

    def run(seed: int) -> float:
        seeded = replace(cfg, seed=seed)
        model = _train_model(args.arch, seeded, train_pairs)
        return evaluate(model, test_pairs).weighted_f1

    result = stability_run(run, seeds)
    doc = {
        "runs": [{"seed": seed, "weighted_f1": score} for seed, score in result.runs],
        "min": result.low,
        "max": result.high,
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stability_path = out_dir / "stability.json"
    stability_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("stability %s", result.as_range())
    _write_run_manifest(
        out_dir, "stability", cfg,
        {"train": Path(args.data) / "train.tsv", "test": Path(args.data) / "test.tsv"},
        [stability_path],
    )
    return EXIT_OK


# --- argument wiring ---------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="lid", description="Character n-gram language identification.")
    parser.add_argument(
        "--version",
        action="version",
        version=(
            f"lid {__version__} "
            f"(model format {MODEL_FORMAT_VERSION}, config schema {CONFIG_SCHEMA_VERSION})"
        ),
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        help="override a config field by dotted path (repeatable)",
    )
    parser.add_argument("--seed", type=int, help="override config seed")
    parser.add_argument("--workers", type=int, default=1, help="parallel ingestion workers")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="single-worker reference behavior; stability reruns one seed",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")

    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    corpus = sub.add_parser("corpus", help="corpus operations")
    corpus_sub = corpus.add_subparsers(dest="corpus_action", metavar="ACTION")
    build = corpus_sub.add_parser("build", help="manifest -> cleaned stratified splits")
    build.add_argument("--manifest", required=True)
    build.add_argument("--width", type=int, help="chunk width (config corpus.width)")
    build.add_argument("--ratios", help="train,test,valid fractions (config corpus.ratios)")
    build.add_argument("--out", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    synth.add_argument("--n-langs", type=int, help="config synth.n_langs")
    synth.add_argument("--samples-per-lang", type=int, help="config synth.samples_per_lang")
    synth.add_argument("--overlap", type=float, help="config synth.overlap")
    synth.add_argument("--out", required=True)

    train = sub.add_parser("train", help="train a classifier on a split directory")
    train.add_argument("--arch", required=True, choices=ARCHES)
    train.add_argument("--data", required=True, help="directory with train/test/valid.tsv")
    train.add_argument("--out", required=True, help="model file to write")

    pred = sub.add_parser("predict", help="classify stdin lines")
    pred.add_argument("--model", required=True)
    pred.add_argument("--topk", type=int, default=1)

    ev = sub.add_parser("evaluate", help="score a model on a split")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--split", default="test", choices=("train", "test", "valid"))
    ev.add_argument("--out", help="directory for report.json (prints JSON when omitted)")

    cs = sub.add_parser("codeswitch", help="word-level English tagging of stdin lines")
    cs.add_argument("--model", required=True, help="binary eng-vs-target model")
    cs.add_argument("--algorithm", default="2", choices=("1", "2", "baseline"))
    cs.add_argument("--threshold", type=float, help="config codeswitch.threshold")
    cs.add_argument("--min-len", type=int, help="config codeswitch.min_len")

    comp = sub.add_parser("compress", help="retrain small + quantize an embedding model")
    comp.add_argument("--model", required=True)
    comp.add_argument("--data", required=True)
    comp.add_argument("--dim", type=int, help="config compress.dim")
    comp.add_argument("--min-count", type=int, help="config compress.min_count")
    comp.add_argument("--quantize", action="store_true", default=None)
    comp.add_argument("--no-quantize", dest="quantize", action="store_false")
    comp.add_argument("--out", required=True)

    sweep = sub.add_parser("sweep", help="retrain over nested label subsets")
    sweep.add_argument("--data", required=True)
    sweep.add_argument("--sizes", required=True, help="comma-separated subset sizes")
    sweep.add_argument("--arch", default="embed", choices=ARCHES)
    sweep.add_argument("--out", required=True)

    stab = sub.add_parser("stability", help="multi-seed retraining protocol")
    stab.add_argument("--data", required=True)
    stab.add_argument("--seeds", default="0,1,2,3,4")
    stab.add_argument("--arch", default="embed", choices=ARCHES)
    stab.add_argument("--out", required=True)

    return parser


_FLAG_TO_CONFIG = {
    # subcommand flags that shadow config fields, applied as overrides
    "width": "corpus.width",
    "n_langs": "synth.n_langs",
    "samples_per_lang": "synth.samples_per_lang",
    "overlap": "synth.overlap",
}


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    cfg = apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    for attr, dotted in _FLAG_TO_CONFIG.items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg = apply_overrides(cfg, [f"{dotted}={value}"])
    if getattr(args, "ratios", None) is not None:
        ratios = _csv_numbers(args.ratios, float, "--ratios")
        cfg = apply_overrides(cfg, [f"corpus.ratios={list(ratios)}"])
    return cfg


_HANDLERS = {
    "corpus": _cmd_corpus,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "codeswitch": _cmd_codeswitch,
    "compress": _cmd_compress,
    "sweep": _cmd_sweep,
    "stability": _cmd_stability,
}


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.command == "corpus" and getattr(args, "corpus_action", None) != "build":
            raise UsageError("usage: lid corpus build ...")
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.WARNING if args.quiet else logging.INFO,
            format="%(message)s",
        )
        cfg = _resolve_config(args)
        return _HANDLERS[args.command](args, cfg)
    except SystemExit as exc:  # argparse --help/--version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ManifestError, ModelFormatError, ConfigError, NoSignalError) as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError) as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDivergedError, StabilityError) as exc:
        print(f"error: training: {exc}", file=sys.stderr)
        return EXIT_TRAIN


if __name__ == "__main__":
    sys.exit(main())
