"""Balanced synthetic tweet generation, train/validation split, fine-tune export.

For every claim the generator produces exactly one tweet per label (three
per claim), so a fully successful run is balanced by construction. The
80/20 split is stratified by target label and seeded, so a given seed
always reproduces the same partition.
"""

import json
import logging
import math
import random
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .gateway import (
    FINETUNE_DEFAULT_EPOCHS,
    GatewayError,
    GenerationConfig,
    job_from_dict,
    job_to_dict,
)
from .prompts import build_entailment_prompt, build_generation_prompt
from .records import (
    LABEL_ORDER,
    SyntheticExample,
    decode_records,
    encode_records,
)

logger = logging.getLogger(__name__)


class TooFewExamples(ValueError):
    """Splitting needs at least two examples."""


class UnresolvedClaim(KeyError):
    """An example references a claim id missing from the claim store."""


class GenerationFailed(GatewayError):
    """Every generation cell failed; nothing was produced."""


@dataclass
class SplitConfig:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass
class GenerationFailure:
    claim_id: str
    label: str
    message: str


def generate_balanced_set(
    claims,
    provider,
    model_id,
    *,
    temperature=1.0,
    created_at=None,
    attempts=2,
    failures=None,
):
    """Generate one tweet per (claim, label) cell: 3 x len(claims) examples.

    Temperature defaults to 1.0 for stylistic variety. Cells that keep
    failing after transport retries are logged and omitted; when that breaks
    label balance a warning is emitted. created_at is stamped onto every
    example as given (None keeps outputs byte-identical across reruns).
    """
    if not claims:
        raise ValueError("generation requires at least one claim")
    config = GenerationConfig(model_id=model_id, temperature=temperature)
    failures = failures if failures is not None else []
    examples = []
    for claim in claims:
        for label in LABEL_ORDER:
            prompt = build_generation_prompt(claim.text, label)
            tweet = None
            error = None
            for _ in range(attempts):
                try:
                    raw = provider.chat(prompt, config)
                except GatewayError as exc:
                    error = str(exc)
                    continue
                if raw and raw.strip():
                    tweet = raw
                    break
                error = "provider returned empty text"
            if tweet is None:
                logger.warning("generation cell failed (claim=%s, label=%s): %s", claim.id, label.value, error)
                failures.append(GenerationFailure(claim.id, label.value, error or "unknown"))
                continue
            examples.append(
                SyntheticExample(
                    claim_id=claim.id,
                    target_label=label,
                    tweet_text=tweet,
                    generator_model=model_id,
                    created_at=created_at,
                )
            )
    if failures:
        logger.warning(
            "label balance broken: %d of %d generation cells failed", len(failures), 3 * len(claims)
        )
    if not examples:
        raise GenerationFailed("all generation cells failed")
    return examples


def split_sizes(per_label_counts, train_fraction):
    """Per-label train quotas, largest-remainder allocation.

    The total train size is always floor(n * train_fraction); the remainder
    seats go to the labels with the largest fractional parts so a balanced
    input stays balanced in both parts.
    """
    labels = [label for label in LABEL_ORDER if per_label_counts.get(label, 0) > 0]
    total = sum(per_label_counts[label] for label in labels)
    target = math.floor(total * train_fraction)
    base = {label: math.floor(per_label_counts[label] * train_fraction) for label in labels}
    remainders = {label: per_label_counts[label] * train_fraction - base[label] for label in labels}
    extra = target - sum(base.values())
    for label in sorted(labels, key=lambda l: (-remainders[l], LABEL_ORDER.index(l)))[:extra]:
        base[label] += 1
    return base


def split_train_validation(examples, config):
    """Deterministic stratified split into (train, validation).

    The two parts partition the input exactly; len(train) is always
    floor(n * train_fraction). Within each label the examples are shuffled
    by the seeded RNG before the cut.
    """
    if len(examples) < 2:
        raise TooFewExamples(f"need at least 2 examples to split, got {len(examples)}")
    groups = {label: [] for label in LABEL_ORDER}
    for example in examples:
        groups[example.target_label].append(example)
    counts = {label: len(group) for label, group in groups.items()}
    quotas = split_sizes(counts, config.train_fraction)
    rng = random.Random(config.seed)
    train, validation = [], []
    for label in LABEL_ORDER:
        group = list(groups[label])
        if not group:
            continue
        rng.shuffle(group)
        cut = quotas[label]
        train.extend(group[:cut])
        validation.extend(group[cut:])
    return train, validation


@dataclass
class FineTuneRecord:
    """One chat-format training record: the entailment prompt plus the
    target label as the assistant turn."""

    system: str
    user: str
    assistant: str


def build_finetune_records(examples, claims):
    """Map examples to fine-tune records using the inference-time prompt."""
    claims_by_id = {c.id: c for c in claims}
    records = []
    for example in examples:
        claim = claims_by_id.get(example.claim_id)
        if claim is None:
            raise UnresolvedClaim(f"example references unknown claim {example.claim_id}")
        prompt = build_entailment_prompt(example.tweet_text, claim.text)
        records.append(
            FineTuneRecord(system=prompt.system, user=prompt.user, assistant=example.target_label.value)
        )
    return records


def finetune_records_to_jsonl(records):
    lines = []
    for record in records:
        lines.append(
            json.dumps(
                {
                    "messages": [
                        {"role": "system", "content": record.system},
                        {"role": "user", "content": record.user},
                        {"role": "assistant", "content": record.assistant},
                    ]
                },
                ensure_ascii=False,
            )
        )
        lines.append("\n")
    return "".join(lines)


def export_finetune_jsonl(examples, claims):
    """JSON-lines fine-tune dataset for the given examples, order preserved."""
    return finetune_records_to_jsonl(build_finetune_records(examples, claims))


PIPELINE_FILES = {
    "synthetic": "synthetic.jsonl",
    "train": "train.jsonl",
    "validation": "validation.jsonl",
    "finetune_train": "finetune_train.jsonl",
    "finetune_validation": "finetune_validation.jsonl",
    "job": "job.json",
    "manifest": "manifest.json",
}


def _label_counts(examples):
    counts = {label.value: 0 for label in LABEL_ORDER}
    for example in examples:
        counts[example.target_label.value] += 1
    return counts


def run_finetune_pipeline(
    claims,
    provider,
    generator_model,
    base_model,
    out_dir,
    *,
    split=None,
    epochs=FINETUNE_DEFAULT_EPOCHS,
):
    """generate -> split -> export -> submit, persisting every stage.

    Stages whose artifact files already exist under out_dir are loaded
    instead of recomputed, so an interrupted run resumes where it stopped.
    The validation part is written out but never submitted. Returns the
    submitted (or previously recorded) fine-tune job.
    """
    split = split or SplitConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {key: out_dir / name for key, name in PIPELINE_FILES.items()}

    if paths["synthetic"].exists():
        examples, errors = decode_records(paths["synthetic"].read_text(encoding="utf-8"), SyntheticExample)
        if errors:
            raise ValueError(f"corrupt synthetic artifact {paths['synthetic']}: line {errors[0].line}")
        logger.info("reusing %s (%d examples)", paths["synthetic"], len(examples))
    else:
        examples = generate_balanced_set(claims, provider, generator_model)
        paths["synthetic"].write_text(encode_records(examples), encoding="utf-8")

    if paths["train"].exists() and paths["validation"].exists():
        train, _ = decode_records(paths["train"].read_text(encoding="utf-8"), SyntheticExample)
        validation, _ = decode_records(paths["validation"].read_text(encoding="utf-8"), SyntheticExample)
        logger.info("reusing split artifacts (%d train / %d validation)", len(train), len(validation))
    else:
        train, validation = split_train_validation(examples, split)
        paths["train"].write_text(encode_records(train), encoding="utf-8")
        paths["validation"].write_text(encode_records(validation), encoding="utf-8")

    if paths["finetune_train"].exists():
        train_jsonl = paths["finetune_train"].read_text(encoding="utf-8")
    else:
        train_jsonl = export_finetune_jsonl(train, claims)
        paths["finetune_train"].write_text(train_jsonl, encoding="utf-8")
    if not paths["finetune_validation"].exists():
        paths["finetune_validation"].write_text(export_finetune_jsonl(validation, claims), encoding="utf-8")

    if paths["job"].exists():
        job = job_from_dict(json.loads(paths["job"].read_text(encoding="utf-8")))
        logger.info("reusing recorded job %s (status %s)", job.job_id, job.status)
    else:
        job = provider.submit_finetune(train_jsonl, base_model, epochs=epochs)
        paths["job"].write_text(json.dumps(job_to_dict(job), indent=2) + "\n", encoding="utf-8")

    manifest = {
        "generator_model": generator_model,
        "base_model": base_model,
        "seed": split.seed,
        "train_fraction": split.train_fraction,
        "counts": {
            "total": len(examples),
            "per_label": _label_counts(examples),
            "train": len(train),
            "validation": len(validation),
        },
        "artifact_paths": {key: str(paths[key]) for key in PIPELINE_FILES if key != "manifest"},
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return job


def write_job(path, job):
    Path(path).write_text(json.dumps(job_to_dict(job), indent=2) + "\n", encoding="utf-8")
