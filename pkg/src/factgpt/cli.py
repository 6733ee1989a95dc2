"""Batch command-line driver for the full pipeline.

Subcommands: ingest-claims, pair, generate, export-finetune, finetune,
classify, aggregate, evaluate, report, serve. Every output gets a sibling
<out>.manifest.json recording inputs, config, and content hashes; all
wall-clock timestamps live there, so identical inputs plus the mock
provider reproduce byte-identical outputs.

Exit codes: 0 success, 1 validation failure, 2 provider failure.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import matcher, metrics, synth, votes
from .classify import ClassifyConfig, classify_batch, resolve_pairs
from .gateway import (
    API_BASE_ENV,
    API_KEY_ENV,
    FINETUNE_DEFAULT_EPOCHS,
    FineTuneValidationError,
    GatewayError,
    TERMINAL_STATUSES,
    make_provider,
)
from .records import (
    Claim,
    GoldLabel,
    PairCandidate,
    Post,
    Prediction,
    SchemaError,
    SyntheticExample,
    VoteSet,
    content_id,
    encode_records,
    read_jsonl,
    record_from_dict,
    write_jsonl,
)
from .store import Store
from .synth import SplitConfig
from .votes import aggregate_votes, distribution_report, render_distribution


class CliError(Exception):
    """Validation failure: bad flags, missing files, unreadable records."""


def _load_config_file(path):
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}") from None


def _setting(args, name, config, default=None):
    # precedence: flag > environment > config file > default
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    env_value = os.environ.get(f"FACTGPT_{name.upper().replace('-', '_')}")
    if env_value is not None:
        return env_value
    if name in config:
        return config[name]
    return default


def _provider_from_args(args, config):
    provider_id = _setting(args, "provider", config, "mock")
    if provider_id == "mock":
        return make_provider("mock")
    base_url = getattr(args, "api_base", None) or os.environ.get(API_BASE_ENV) or config.get("api_base")
    api_key = os.environ.get(API_KEY_ENV) or config.get("api_key")
    floor = float(config.get("temperature_floor", 0.0))
    try:
        return make_provider(provider_id, base_url=base_url, api_key=api_key, temperature_floor=floor)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _read_records(path, record_type, what):
    try:
        records, errors = read_jsonl(path, record_type)
    except FileNotFoundError:
        raise CliError(f"{what} file not found: {path}") from None
    if errors:
        details = "; ".join(f"line {e.line}: {e.message}" for e in errors[:5])
        raise CliError(f"{what} file {path} has {len(errors)} bad lines ({details})")
    return records


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(command, outputs, inputs, config_values):
    manifest = {
        "command": command,
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()},
        "config": config_values,
        "outputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in outputs.items()},
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    primary = next(iter(outputs.values()))
    manifest_path = Path(str(primary) + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return manifest_path


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest_claims(args, config):
    path = Path(args.claims)
    if not path.exists():
        raise CliError(f"claims file not found: {path}")
    claims = []
    errors = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(f"line {line_no}: malformed JSON: {exc}")
            continue
        if isinstance(obj, dict) and not obj.get("id"):
            text = obj.get("text")
            if isinstance(text, str) and text.strip():
                obj = {**obj, "id": content_id("c", text)}
        try:
            claims.append(record_from_dict(obj, Claim))
        except (SchemaError, TypeError) as exc:
            errors.append(f"line {line_no}: {exc}")
    if errors:
        raise CliError(f"claims file {path} has {len(errors)} bad lines: " + "; ".join(errors[:5]))
    if args.dry_run:
        print(f"dry run: {len(claims)} claims validate")
        return 0
    store = Store(args.store)
    ingested, skipped = store.upsert_claims(claims)
    print(f"ingested {ingested}, skipped {skipped} duplicates -> {store.root / 'claims.jsonl'}")
    return 0


def cmd_pair(args, config):
    posts = _read_records(args.posts, Post, "posts")
    claims = _read_records(args.claims, Claim, "claims")
    matcher_config = matcher.MatcherConfig(
        alpha=args.alpha if args.alpha is not None else float(config.get("alpha", 0.5)),
        top_k=args.top_k if args.top_k is not None else int(config.get("top_k", 1)),
        min_combined_score=args.min_score if args.min_score is not None else float(config.get("min_combined_score", 0.0)),
        embedder_id=args.embedder or config.get("embedder_id", "offline"),
    )
    if args.dry_run:
        print(f"dry run: {len(posts)} posts x {len(claims)} claims validate")
        return 0
    provider = _provider_from_args(args, config) if matcher_config.embedder_id.startswith("remote:") else None
    try:
        pairs = matcher.pair_candidates(posts, claims, matcher_config, provider)
    except matcher.EmptyClaimStore as exc:
        raise CliError(str(exc)) from None
    write_jsonl(args.out, pairs)
    _write_manifest(
        "pair",
        {"pairs": args.out},
        {"posts": args.posts, "claims": args.claims},
        {"alpha": matcher_config.alpha, "top_k": matcher_config.top_k,
         "min_combined_score": matcher_config.min_combined_score,
         "embedder_id": matcher_config.embedder_id},
    )
    print(f"wrote {len(pairs)} pairs -> {args.out}")
    return 0


def cmd_generate(args, config):
    claims = _read_records(args.claims, Claim, "claims")
    if not claims:
        raise CliError("claims file is empty")
    if args.dry_run:
        print(f"dry run: {len(claims)} claims validate ({3 * len(claims)} examples would be generated)")
        return 0
    provider = _provider_from_args(args, config)
    examples = synth.generate_balanced_set(
        claims, provider, args.model, temperature=args.temperature
    )
    write_jsonl(args.out, examples)
    _write_manifest(
        "generate", {"examples": args.out}, {"claims": args.claims},
        {"model": args.model, "temperature": args.temperature},
    )
    print(f"wrote {len(examples)} synthetic examples -> {args.out}")
    return 0


def cmd_export_finetune(args, config):
    examples = _read_records(args.examples, SyntheticExample, "examples")
    claims = _read_records(args.claims, Claim, "claims")
    try:
        text = synth.export_finetune_jsonl(examples, claims)
    except synth.UnresolvedClaim as exc:
        raise CliError(str(exc)) from None
    if args.dry_run:
        print(f"dry run: {len(examples)} examples export cleanly")
        return 0
    Path(args.out).write_text(text, encoding="utf-8")
    _write_manifest(
        "export-finetune", {"finetune": args.out},
        {"examples": args.examples, "claims": args.claims}, {},
    )
    print(f"wrote {len(examples)} fine-tune records -> {args.out}")
    return 0


def cmd_finetune(args, config):
    claims = _read_records(args.claims, Claim, "claims")
    if not claims:
        raise CliError("claims file is empty")
    if args.dry_run:
        print(f"dry run: {len(claims)} claims validate")
        return 0
    provider = _provider_from_args(args, config)
    split = SplitConfig(train_fraction=args.train_fraction, seed=args.seed)
    job = synth.run_finetune_pipeline(
        claims, provider, args.generator_model, args.base_model, args.out_dir,
        split=split, epochs=args.epochs,
    )
    job_path = Path(args.out_dir) / synth.PIPELINE_FILES["job"]
    if args.no_wait:
        print(f"job {job.job_id} submitted (status {job.status})")
        return 0
    while job.status not in TERMINAL_STATUSES:
        time.sleep(args.poll_interval)
        job = provider.poll_finetune(job.job_id)
        synth.write_job(job_path, job)
    if job.status != "succeeded":
        print(f"job {job.job_id} finished with status {job.status}", file=sys.stderr)
        return 2
    print(f"job {job.job_id} succeeded: fine-tuned model {job.fine_tuned_model_id}")
    return 0


def cmd_classify(args, config):
    pairs = _read_records(args.pairs, PairCandidate, "pairs")
    posts = _read_records(args.posts, Post, "posts")
    claims = _read_records(args.claims, Claim, "claims")
    try:
        resolved = resolve_pairs(pairs, posts, claims)
    except KeyError as exc:
        raise CliError(str(exc)) from None
    if args.dry_run:
        print(f"dry run: {len(resolved)} pairs resolve to texts")
        return 0
    provider = _provider_from_args(args, config)
    cls_config = ClassifyConfig(
        model_id=args.model, temperature=args.temperature, parallelism=args.parallelism
    )
    predictions, failures = classify_batch(
        resolved, cls_config, provider, checkpoint_path=args.checkpoint
    )
    write_jsonl(args.out, predictions)
    _write_manifest(
        "classify", {"predictions": args.out},
        {"pairs": args.pairs, "posts": args.posts, "claims": args.claims},
        {"model": args.model, "temperature": args.temperature},
    )
    print(f"wrote {len(predictions)} predictions -> {args.out}")
    if failures:
        for failure in failures[:10]:
            print(f"failed pair {failure.pair_id}: {failure.message}", file=sys.stderr)
        print(f"{len(failures)} pairs failed; rerun with --checkpoint to retry only those", file=sys.stderr)
        return 2
    return 0


def cmd_aggregate(args, config):
    vote_sets = _read_records(args.votes, VoteSet, "votes")
    if args.dry_run:
        print(f"dry run: {len(vote_sets)} vote sets validate")
        return 0
    try:
        gold = [aggregate_votes(vs) for vs in vote_sets]
    except votes.EmptyVotes as exc:
        raise CliError(str(exc)) from None
    write_jsonl(args.out, gold)
    outputs = {"gold": args.out}
    if args.distribution:
        rows = distribution_report(gold)
        Path(args.distribution).write_text(render_distribution(rows), encoding="utf-8")
        outputs["distribution"] = args.distribution
    _write_manifest("aggregate", outputs, {"votes": args.votes}, {})
    print(f"wrote {len(gold)} gold labels -> {args.out}")
    return 0


def cmd_evaluate(args, config):
    gold = _read_records(args.gold, GoldLabel, "gold")
    predictions = _read_records(args.pred, Prediction, "predictions")
    if args.dry_run:
        print(f"dry run: {len(gold)} gold labels, {len(predictions)} predictions validate")
        return 0
    try:
        report = metrics.evaluate(
            gold, predictions, tie_policy=args.tie_policy, unparseable_policy=args.unparseable_policy
        )
    except (metrics.MissingGold, metrics.DuplicatePrediction, ValueError) as exc:
        raise CliError(str(exc)) from None
    named = metrics.NamedReport(model=args.model, train_set_from=args.train_set, report=report)
    Path(args.out).write_text(metrics.render_report([named]), encoding="utf-8")
    outputs = {"report_md": args.out}
    manifest_info = {
        "model": args.model,
        "train_set_from": args.train_set,
        "gold_sha256": _sha256(args.gold),
        "predictions_sha256": _sha256(args.pred),
    }
    if args.json_out:
        metrics.write_report_json(args.json_out, named, manifest=manifest_info)
        outputs["report_json"] = args.json_out
    if args.store:
        store = Store(args.store)
        store.save_report(
            {
                "model": args.model,
                "train_set_from": args.train_set,
                "report": metrics.report_to_dict(report),
                "manifest": manifest_info,
            }
        )
    _write_manifest(
        "evaluate", outputs, {"gold": args.gold, "predictions": args.pred},
        {"tie_policy": args.tie_policy, "unparseable_policy": args.unparseable_policy},
    )
    print(
        f"accuracy {report.accuracy:.3f}, macro P {report.macro_precision:.3f}, "
        f"macro R {report.macro_recall:.3f} over {report.n_scored} scored pairs -> {args.out}"
    )
    return 0


def cmd_report(args, config):
    named_reports = []
    inputs = {}
    for index, path in enumerate(args.reports):
        if not Path(path).exists():
            raise CliError(f"report file not found: {path}")
        try:
            named, _manifest = metrics.read_report_json(path)
        except (KeyError, json.JSONDecodeError) as exc:
            raise CliError(f"report file {path} is malformed: {exc}") from None
        named_reports.append(named)
        inputs[f"report_{index}"] = path
    if args.dry_run:
        print(f"dry run: {len(named_reports)} reports validate")
        return 0
    Path(args.out).write_text(metrics.render_report(named_reports), encoding="utf-8")
    _write_manifest("report", {"report_md": args.out}, inputs, {})
    print(f"wrote combined report for {len(named_reports)} runs -> {args.out}")
    return 0


def cmd_serve(args, config):
    import uvicorn

    from .service import create_app

    store = Store(args.store or config.get("store_dir", "./store"))
    provider = _provider_from_args(args, config)
    if args.dry_run:
        print(f"dry run: store at {store.root} loads ({len(store.claims)} claims, {len(store.pairs)} pairs)")
        return 0
    matcher_section = config.get("matcher", {})
    matcher_config = matcher.MatcherConfig(
        alpha=float(matcher_section.get("alpha", 0.5)),
        top_k=int(matcher_section.get("top_k", 1)),
        min_combined_score=float(matcher_section.get("min_combined_score", 0.0)),
        embedder_id=matcher_section.get("embedder_id", "offline"),
    )
    app = create_app(
        store,
        provider,
        matcher_config,
        classify_model=args.model or config.get("model_id", "mock-classifier"),
        ui_dir=args.ui_dir,
        api_base=config.get("api_base_url", ""),
    )
    port = args.port or int(config.get("port", 8000))
    uvicorn.run(app, host=args.host, port=port)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    parser = argparse.ArgumentParser(prog="factgpt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--provider", help="provider id: mock (default) or a live provider name")
        p.add_argument("--api-base", help=f"provider base URL (or {API_BASE_ENV})")
        p.add_argument("--config", help="JSON config file; precedence flag > env > config > default")
        p.add_argument("--seed", type=int, default=0, help="seed for any randomized step")
        p.add_argument("--json", action="store_true", help="machine-readable error JSON on stderr")
        p.add_argument("--dry-run", action="store_true", help="validate inputs, write nothing")

    p = sub.add_parser("ingest-claims", help="ingest claims into a store directory")
    p.add_argument("--claims", required=True)
    p.add_argument("--store", required=True)
    common(p)
    p.set_defaults(func=cmd_ingest_claims)

    p = sub.add_parser("pair", help="pair posts with claims by hybrid similarity")
    p.add_argument("--posts", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, help="token-score weight in [0,1] (default 0.5)")
    p.add_argument("--top-k", type=int, help="candidates kept per post (default 1)")
    p.add_argument("--min-score", type=float, help="combined-score threshold (default 0)")
    p.add_argument("--embedder", help="embedder id (default offline)")
    common(p)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("generate", help="generate the balanced synthetic training set")
    p.add_argument("--claims", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--temperature", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("export-finetune", help="export examples as fine-tune chat records")
    p.add_argument("--examples", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_export_finetune)

    p = sub.add_parser("finetune", help="generate, split, export, and submit a fine-tune job")
    p.add_argument("--claims", required=True)
    p.add_argument("--generator-model", required=True)
    p.add_argument("--base-model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--epochs", type=int, default=FINETUNE_DEFAULT_EPOCHS)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--no-wait", action="store_true", help="return the job id without polling")
    p.add_argument("--poll-interval", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("classify", help="classify pairs with a model")
    p.add_argument("--pairs", required=True)
    p.add_argument("--posts", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--checkpoint", help="JSON-lines checkpoint; resume skips finished pairs")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("aggregate", help="aggregate votes into gold labels")
    p.add_argument("--votes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--distribution", help="also write the distribution table (markdown)")
    common(p)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True, help="markdown report path")
    p.add_argument("--json-out", help="machine-readable report JSON path")
    p.add_argument("--model", default="unnamed-model")
    p.add_argument("--train-set", default=None, help="training-set provenance label")
    p.add_argument("--tie-policy", choices=metrics.TIE_POLICIES, default="exclude")
    p.add_argument("--unparseable-policy", choices=metrics.UNPARSEABLE_POLICIES, default="wrong")
    p.add_argument("--store", help="also persist the report into this store directory")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render combined tables from report JSON files")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", help="store directory (default ./store)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.add_argument("--model", help="default classification model id")
    p.add_argument("--ui-dir", help="static review-UI build to mount at /ui")
    common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config_file(getattr(args, "config", None))
        return args.func(args, config)
    except (CliError, FineTuneValidationError) as exc:
        _emit_error(args, "validation_error", str(exc))
        return 1
    except GatewayError as exc:
        _emit_error(args, "provider_error", str(exc))
        return 2


def _emit_error(args, code, message):
    if getattr(args, "json", False):
        print(json.dumps({"error": {"code": code, "message": message}}), file=sys.stderr)
    else:
        print(f"error: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
