"""Operator CLI: ingest, index, verify, train-judge, evaluate.

Every command prints its fully resolved configuration (flags beat config-file
values, which beat built-in defaults) to stderr before doing any work; results
go to stdout. Exit code 0 means the requested operation fully succeeded,
2 means invalid usage, 1 means an operational failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import evaluation, judge, pipeline, retrieval
from .corpus import ingest_corpus, load_store, save_store
from .encoders import DEFAULT_DIMENSION, HashingEncoder, HttpEncoder
from .llm import LlmClient, ReplayCache

logger = logging.getLogger(__name__)


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with default option values")
    parser.add_argument("--seed", type=int, default=None, help="seed for all randomness")
    parser.add_argument("--llm-mode", choices=("live", "replay", "record"), default=None)
    parser.add_argument("--llm-cache", default=None, help="replay cache path")
    parser.add_argument("--format", dest="out_format", choices=("text", "json", "tsv"), default=None)
    parser.add_argument("-v", "--verbose", action="store_true")


_DEFAULTS = {
    "seed": 0,
    "llm_mode": "replay",
    "llm_cache": None,
    "out_format": "text",
    "k1": retrieval.DEFAULT_K1,
    "b": retrieval.DEFAULT_B,
    "per_entity": retrieval.DEFAULT_PER_ENTITY,
    "dim": DEFAULT_DIMENSION,
    "hidden": 32,
    "epochs": 30,
    "batch_size": 16,
    "learning_rate": 0.05,
}


def _resolve(args: argparse.Namespace) -> dict:
    """Flag > config file > default, materialized for the config printout."""
    file_values = {}
    if getattr(args, "config", None):
        file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
    resolved = {}
    for key, value in vars(args).items():
        if key in ("config", "func", "verbose"):
            continue
        if value is None:
            value = file_values.get(key, _DEFAULTS.get(key))
        resolved[key] = value
    return resolved


def _print_config(command: str, resolved: dict) -> None:
    print(f"config[{command}]: {json.dumps(resolved, sort_keys=True, default=str)}", file=sys.stderr)


def _make_llm(cfg: dict) -> LlmClient:
    mode = cfg["llm_mode"]
    cache = ReplayCache(cfg["llm_cache"]) if cfg["llm_cache"] else None
    if mode in ("replay", "record") and cache is None:
        raise CliError(f"--llm-mode {mode} requires --llm-cache", code=2)
    return LlmClient(mode=mode, cache=cache)


def _make_provider(cfg: dict):
    if cfg.get("provider", "hashing") == "http":
        url = cfg.get("encoder_url")
        if not url:
            raise CliError("--provider http requires --encoder-url", code=2)
        return HttpEncoder(url)
    return HashingEncoder(dimension=cfg.get("dim") or DEFAULT_DIMENSION)


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _print_config("ingest", cfg)
    try:
        store = ingest_corpus(cfg["corpus"])
    except OSError as exc:
        raise CliError(f"cannot read corpus: {exc}") from exc
    save_store(store, cfg["out"])
    print(
        f"pages={store.page_count} paragraphs={store.paragraph_count} "
        f"malformed={store.malformed_count} snapshot={cfg['out']}"
    )
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _print_config("index", cfg)
    store = load_store(cfg["snapshot"])
    index = retrieval.build_index(store.all_paragraphs(), k1=cfg["k1"], b=cfg["b"])
    retrieval.save_index(index, cfg["out"])
    print(f"paragraphs={index.size} avgdl={index.avgdl:.4f} index={cfg['out']}")
    return 0


def _format_verdict_text(result: pipeline.VerificationResult) -> str:
    verdict = result.verdict
    lines = [
        f"label: {verdict.label.word}",
        f"p_true: {verdict.p_true:.6f}",
        f"p_false: {verdict.p_false:.6f}",
        f"explanation: {verdict.explanation}",
        "sources:",
    ]
    lines.extend(f"  - {title} <{url}>" for title, url in verdict.sources)
    if not verdict.sources:
        lines.append("  (none)")
    return "\n".join(lines)


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _print_config("verify", cfg)
    from .claim import Claim

    store = load_store(cfg["corpus"])
    index = retrieval.load_index(cfg["index"])
    model = judge.load_model(cfg["model"])
    resources = pipeline.Resources(
        store=store,
        llm=_make_llm(cfg),
        index=index,
        judge=model,
        provider=_make_provider(cfg),
    )
    config = pipeline.RunConfig(
        setting="open",
        per_entity=cfg["per_entity"],
        llm_mode=cfg["llm_mode"],
        seed=cfg["seed"],
    )
    result = pipeline.verify_claim(Claim(text=cfg["claim"], id="cli"), resources, config)
    if cfg["out_format"] == "json":
        verdict = result.verdict
        print(
            json.dumps(
                {
                    "label": verdict.label.word,
                    "p_true": verdict.p_true,
                    "p_false": verdict.p_false,
                    "explanation": verdict.explanation,
                    "sources": [[t, u] for t, u in verdict.sources],
                },
                sort_keys=True,
                ensure_ascii=False,
            )
        )
    else:
        print(_format_verdict_text(result))
    return 0


def cmd_train_judge(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _print_config("train-judge", cfg)
    examples = judge.load_judge_examples(cfg["data"])
    provider = _make_provider(cfg)
    model = judge.init_model(provider.dimension, hidden=cfg["hidden"], seed=cfg["seed"])
    config = judge.TrainConfig(
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        learning_rate=cfg["learning_rate"],
        seed=cfg["seed"],
    )
    model, trace = judge.train(model, examples, provider, config)
    judge.save_model(model, cfg["out"])
    final = trace[-1] if trace else float("nan")
    print(f"examples={len(examples)} epochs={cfg['epochs']} final_loss={final:.6f} checkpoint={cfg['out']}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _print_config("evaluate", cfg)
    disabled = set(cfg.get("disable") or ())
    config = pipeline.RunConfig(
        setting=cfg["setting"],
        ambiguity_elimination="ae" not in disabled,
        entity_retrieval="er" not in disabled,
        summary_selection="ers" not in disabled,
        llm_reasoning="llm" not in disabled,
        slm_judge="slm" not in disabled,
        per_entity=cfg["per_entity"],
        llm_mode=cfg["llm_mode"],
        seed=cfg["seed"],
    )
    store = load_store(cfg["corpus"])
    index = retrieval.load_index(cfg["index"]) if cfg.get("index") else None
    if config.setting == "open" and index is None:
        raise CliError("open setting requires --index", code=2)
    model = judge.load_model(cfg["model"]) if cfg.get("model") else None
    provider = _make_provider(cfg) if config.slm_judge else None
    if config.slm_judge and model is None:
        raise CliError("--model is required unless the judge stage is disabled (--disable slm)", code=2)
    dataset = evaluation.load_dataset(cfg["dataset"], cfg["dataset_format"])
    resources = pipeline.Resources(
        store=store, llm=_make_llm(cfg), index=index, judge=model, provider=provider
    )
    report = evaluation.run_pipeline(dataset.claims, config, resources)
    if cfg.get("out"):
        out_fmt = "tsv" if cfg["out_format"] == "tsv" else "json"
        evaluation.write_report(report, cfg["out"], fmt=out_fmt)
    print(
        f"claims={len(dataset.claims)} skipped_rows={dataset.skipped} "
        f"failed={report.failed_claims} accuracy={report.accuracy} "
        f"evidence_ratio={report.evidence_ratio} claim_ratio={report.claim_ratio}"
    )
    if cfg.get("reference"):
        reference = evaluation.load_reference_metrics()["accuracy"].get(cfg["reference"])
        if reference is None:
            raise CliError(f"unknown reference key {cfg['reference']!r}", code=2)
        if report.accuracy is not None:
            published = reference[config.setting] / 100.0
            print(
                f"reference[{cfg['reference']}/{config.setting}]={published:.4f} "
                f"delta={report.accuracy - published:+.4f}"
            )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="claimcheck", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a corpus snapshot from line-delimited records")
    p.add_argument("--corpus", required=True, help="line-delimited record file")
    p.add_argument("--out", required=True, help="snapshot output path")
    _common_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="build the BM25 index from a corpus snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--per-entity", dest="per_entity", type=int, default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("verify", help="verify a single claim")
    p.add_argument("claim", help="claim text")
    p.add_argument("--corpus", required=True, help="corpus snapshot path")
    p.add_argument("--index", required=True, help="BM25 index path")
    p.add_argument("--model", required=True, help="judge checkpoint path")
    p.add_argument("--provider", choices=("hashing", "http"), default="hashing")
    p.add_argument("--encoder-url", dest="encoder_url", default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--per-entity", dest="per_entity", type=int, default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("train-judge", help="train the judge head on rationale pairs")
    p.add_argument("--data", required=True, help="JSONL training examples")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--provider", choices=("hashing", "http"), default="hashing")
    p.add_argument("--encoder-url", dest="encoder_url", default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_train_judge)

    p = sub.add_parser("evaluate", help="run a dataset through the pipeline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--dataset-format", dest="dataset_format", choices=("hover", "feverous"), required=True)
    p.add_argument("--setting", choices=("open", "gold"), default="open")
    p.add_argument("--corpus", required=True)
    p.add_argument("--index", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--provider", choices=("hashing", "http"), default="hashing")
    p.add_argument("--encoder-url", dest="encoder_url", default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--per-entity", dest="per_entity", type=int, default=None)
    p.add_argument(
        "--disable",
        action="append",
        choices=("ae", "er", "ers", "llm", "slm"),
        help="ablate a stage (repeatable)",
    )
    p.add_argument(
        "--reference",
        default=None,
        help="published-results key (e.g. hover-2hop) for delta reporting",
    )
    p.add_argument("--out", default=None, help="report output path")
    _common_flags(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, never tracebacks
        logger.debug("unhandled failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
