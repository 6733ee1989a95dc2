"""Run the entailment task against a provider and parse responses to labels."""

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .gateway import GatewayError, GenerationConfig
from .prompts import build_entailment_prompt
from .records import (
    EntailmentLabel,
    Prediction,
    decode_records,
    encode_records,
)

logger = logging.getLogger(__name__)


class UnparseableResponse(ValueError):
    """The raw response contains none of the three label tokens."""


@dataclass
class ClassifyConfig:
    model_id: str
    temperature: float = 0.0  # provider floor may lift this on the wire
    parallelism: int = 4

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


_LABEL_TOKEN_RE = re.compile(r"\b(entailment|neutral|contradiction)\b", re.IGNORECASE)


def parse_label(raw_response):
    """Extract (label, ambiguous) from a raw model response.

    Scans case-insensitively for the three label tokens as whole words; the
    first occurrence wins, and ambiguous is set when a different token also
    appears later. Whole-word matching keeps e.g. "NEUTRALITY" from hitting.
    """
    hits = [m.group(1).upper() for m in _LABEL_TOKEN_RE.finditer(raw_response)]
    if not hits:
        raise UnparseableResponse(f"no label token in response: {raw_response!r}")
    first = EntailmentLabel(hits[0])
    ambiguous = any(token != hits[0] for token in hits[1:])
    return first, ambiguous


def classify_pair(pair_id, tweet_text, claim_text, config, provider):
    """Classify one (tweet, claim) pair; the raw response is kept verbatim.

    Unparseable responses yield a Prediction with label None rather than an
    exception, so batch runs keep going.
    """
    prompt = build_entailment_prompt(tweet_text, claim_text)
    raw = provider.chat(prompt, GenerationConfig(model_id=config.model_id, temperature=config.temperature))
    try:
        label, ambiguous = parse_label(raw)
    except UnparseableResponse:
        label, ambiguous = None, False
    return Prediction(
        pair_id=pair_id,
        model_id=config.model_id,
        label=label,
        raw_response=raw,
        ambiguous=ambiguous,
    )


@dataclass
class ResolvedPair:
    """A pair candidate joined with its post and claim texts."""

    pair_id: str
    tweet_text: str
    claim_text: str


class UnresolvedPair(KeyError):
    """A pair references a post or claim id missing from the given stores."""


def resolve_pairs(pairs, posts, claims):
    """Join pair candidates with their texts; raises UnresolvedPair on gaps."""
    posts_by_id = {p.id: p for p in posts}
    claims_by_id = {c.id: c for c in claims}
    resolved = []
    for pair in pairs:
        if pair.post_id not in posts_by_id:
            raise UnresolvedPair(f"pair {pair.pair_id}: unknown post {pair.post_id}")
        if pair.claim_id not in claims_by_id:
            raise UnresolvedPair(f"pair {pair.pair_id}: unknown claim {pair.claim_id}")
        resolved.append(
            ResolvedPair(
                pair_id=pair.pair_id,
                tweet_text=posts_by_id[pair.post_id].text,
                claim_text=claims_by_id[pair.claim_id].text,
            )
        )
    return resolved


@dataclass
class BatchFailure:
    pair_id: str
    message: str


def classify_batch(pairs, config, provider, *, checkpoint_path=None, checkpoint_every=10):
    """Classify resolved pairs, order-preserving, best-effort.

    Returns (predictions, failures). With a checkpoint path, completed
    predictions are appended there every checkpoint_every completions, and a
    later run with the same checkpoint re-queries only the missing pairs.
    """
    seen = set()
    for pair in pairs:
        if pair.pair_id in seen:
            raise ValueError(f"duplicate pair_id in batch: {pair.pair_id}")
        seen.add(pair.pair_id)

    done = {}
    if checkpoint_path is not None:
        try:
            with open(checkpoint_path, encoding="utf-8") as fh:
                previous, errors = decode_records(fh.read(), Prediction)
        except FileNotFoundError:
            previous, errors = [], []
        if errors:
            logger.warning("checkpoint %s: skipped %d unreadable lines", checkpoint_path, len(errors))
        done = {p.pair_id: p for p in previous}

    todo = [pair for pair in pairs if pair.pair_id not in done]
    failures = []
    buffer = []

    def flush():
        if checkpoint_path is not None and buffer:
            with open(checkpoint_path, "a", encoding="utf-8") as fh:
                fh.write(encode_records(buffer))
            buffer.clear()

    try:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [(pair, pool.submit(classify_pair, pair.pair_id, pair.tweet_text, pair.claim_text, config, provider)) for pair in todo]
            for pair, future in futures:
                try:
                    prediction = future.result()
                except GatewayError as exc:
                    failures.append(BatchFailure(pair_id=pair.pair_id, message=str(exc)))
                    continue
                done[pair.pair_id] = prediction
                buffer.append(prediction)
                if len(buffer) >= checkpoint_every:
                    flush()
    finally:
        flush()

    predictions = [done[pair.pair_id] for pair in pairs if pair.pair_id in done]
    return predictions, failures
