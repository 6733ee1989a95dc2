"""Core domain records, the three-class label set, and JSON-lines codecs.

Every dataset in the pipeline (claims, posts, pair candidates, synthetic
examples, predictions, vote sets, gold labels) is exchanged as JSON-lines:
one object per line, streamable and append-friendly. Field names are part
of the wire contract and must not change.
"""

import hashlib
import json
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum


class EntailmentLabel(str, Enum):
    """The three relations a post can hold to a debunked claim."""

    ENTAILMENT = "ENTAILMENT"
    NEUTRAL = "NEUTRAL"
    CONTRADICTION = "CONTRADICTION"


# Canonical ordering used everywhere a stable label order matters
# (reports, confusion matrices, tie normalization).
LABEL_ORDER = (
    EntailmentLabel.ENTAILMENT,
    EntailmentLabel.NEUTRAL,
    EntailmentLabel.CONTRADICTION,
)

LABEL_TOKENS = tuple(label.value for label in LABEL_ORDER)


def label_from_token(token):
    """Parse one of the three uppercase tokens; anything else raises SchemaError."""
    if isinstance(token, str):
        for label in LABEL_ORDER:
            if token == label.value:
                return label
    raise SchemaError(f"not a label token: {token!r}")


class SchemaError(ValueError):
    """A record dict violates its type's schema or invariants."""


@dataclass
class Claim:
    """A debunked false claim with optional fact-checking provenance."""

    id: str
    text: str
    source: str | None = None
    debunked_on: str | None = None  # ISO calendar date


@dataclass
class Post:
    """A social media post to be matched against the claim store."""

    id: str
    text: str
    created_at: str | None = None  # ISO timestamp
    origin: str | None = None


@dataclass
class PairCandidate:
    """A scored (post, claim) pair produced by the matcher."""

    pair_id: str
    post_id: str
    claim_id: str
    token_score: float
    semantic_score: float
    combined_score: float


@dataclass
class SyntheticExample:
    """A generated tweet targeting one label for one claim.

    created_at is None for deterministic runs; wall-clock time lives in run
    manifests so reruns stay byte-identical.
    """

    claim_id: str
    target_label: EntailmentLabel
    tweet_text: str
    generator_model: str
    created_at: str | None = None


@dataclass
class Prediction:
    """A model-assigned label for a pair. label is None when the raw
    response contained no label token (unparseable)."""

    pair_id: str
    model_id: str
    label: EntailmentLabel | None
    raw_response: str
    ambiguous: bool = False


@dataclass
class Vote:
    annotator_id: str
    label: EntailmentLabel


@dataclass
class VoteSet:
    """Ordered human annotation votes for one pair."""

    pair_id: str
    votes: list[Vote] = field(default_factory=list)


@dataclass
class GoldLabel:
    """Majority-vote outcome for a pair: a decided label, or the set of
    labels sharing the maximal vote count (a tie, always >= 2 labels)."""

    pair_id: str
    decided: EntailmentLabel | None = None
    tie: tuple[EntailmentLabel, ...] = ()

    def __post_init__(self):
        if self.decided is not None:
            if self.tie:
                raise ValueError("gold label cannot be both decided and tied")
            return
        labels = tuple(sorted(set(self.tie), key=LABEL_ORDER.index))
        if len(labels) < 2:
            raise ValueError("tie outcome needs at least 2 distinct labels")
        self.tie = labels

    @property
    def is_tie(self):
        return self.decided is None


def content_id(prefix, text):
    """Deterministic content-hash id, so re-ingesting the same text is idempotent."""
    digest = hashlib.sha256(text.strip().encode("utf-8")).hexdigest()
    return f"{prefix}-{digest[:12]}"


# ---------------------------------------------------------------------------
# per-type dict codecs


def _require_str(obj, key, allow_empty=False):
    if key not in obj:
        raise SchemaError(f"missing required field {key!r}")
    value = obj[key]
    if not isinstance(value, str):
        raise SchemaError(f"field {key!r} must be a string")
    if not allow_empty and not value.strip():
        raise SchemaError(f"field {key!r} must be non-empty")
    return value


def _optional_str(obj, key):
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaError(f"field {key!r} must be a string or null")
    return value


def _require_number(obj, key, lo=None, hi=None):
    if key not in obj:
        raise SchemaError(f"missing required field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"field {key!r} must be a number")
    value = float(value)
    if lo is not None and value < lo or hi is not None and value > hi:
        raise SchemaError(f"field {key!r} out of range [{lo}, {hi}]: {value}")
    return value


def _check_date(value, key):
    if value is None:
        return None
    try:
        date.fromisoformat(value)
    except ValueError as exc:
        raise SchemaError(f"field {key!r} is not an ISO date: {value!r}") from exc
    return value


def _check_timestamp(value, key):
    if value is None:
        return None
    try:
        datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise SchemaError(f"field {key!r} is not an ISO timestamp: {value!r}") from exc
    return value


def _claim_to_dict(c):
    return {"id": c.id, "text": c.text, "source": c.source, "debunked_on": c.debunked_on}


def _claim_from_dict(obj):
    return Claim(
        id=_require_str(obj, "id"),
        text=_require_str(obj, "text"),
        source=_optional_str(obj, "source"),
        debunked_on=_check_date(_optional_str(obj, "debunked_on"), "debunked_on"),
    )


def _post_to_dict(p):
    return {"id": p.id, "text": p.text, "created_at": p.created_at, "origin": p.origin}


def _post_from_dict(obj):
    return Post(
        id=_require_str(obj, "id"),
        text=_require_str(obj, "text"),
        created_at=_check_timestamp(_optional_str(obj, "created_at"), "created_at"),
        origin=_optional_str(obj, "origin"),
    )


def _pair_to_dict(p):
    return {
        "pair_id": p.pair_id,
        "post_id": p.post_id,
        "claim_id": p.claim_id,
        "token_score": p.token_score,
        "semantic_score": p.semantic_score,
        "combined_score": p.combined_score,
    }


def _pair_from_dict(obj):
    return PairCandidate(
        pair_id=_require_str(obj, "pair_id"),
        post_id=_require_str(obj, "post_id"),
        claim_id=_require_str(obj, "claim_id"),
        token_score=_require_number(obj, "token_score", 0.0, 1.0),
        semantic_score=_require_number(obj, "semantic_score", -1.0, 1.0),
        combined_score=_require_number(obj, "combined_score"),
    )


def _synth_to_dict(s):
    return {
        "claim_id": s.claim_id,
        "target_label": s.target_label.value,
        "tweet_text": s.tweet_text,
        "generator_model": s.generator_model,
        "created_at": s.created_at,
    }


def _synth_from_dict(obj):
    return SyntheticExample(
        claim_id=_require_str(obj, "claim_id"),
        target_label=label_from_token(obj.get("target_label")),
        tweet_text=_require_str(obj, "tweet_text"),
        generator_model=_require_str(obj, "generator_model"),
        created_at=_check_timestamp(_optional_str(obj, "created_at"), "created_at"),
    )


def _prediction_to_dict(p):
    return {
        "pair_id": p.pair_id,
        "model_id": p.model_id,
        "label": p.label.value if p.label is not None else None,
        "raw_response": p.raw_response,
        "ambiguous": p.ambiguous,
    }


def _prediction_from_dict(obj):
    raw_label = obj.get("label")
    label = None if raw_label is None else label_from_token(raw_label)
    ambiguous = obj.get("ambiguous", False)
    if not isinstance(ambiguous, bool):
        raise SchemaError("field 'ambiguous' must be a boolean")
    return Prediction(
        pair_id=_require_str(obj, "pair_id"),
        model_id=_require_str(obj, "model_id"),
        label=label,
        raw_response=_require_str(obj, "raw_response", allow_empty=True),
        ambiguous=ambiguous,
    )


def _voteset_to_dict(v):
    return {
        "pair_id": v.pair_id,
        "votes": [{"annotator_id": vote.annotator_id, "label": vote.label.value} for vote in v.votes],
    }


def _voteset_from_dict(obj):
    pair_id = _require_str(obj, "pair_id")
    raw_votes = obj.get("votes")
    if not isinstance(raw_votes, list) or not raw_votes:
        raise SchemaError("field 'votes' must be a non-empty list")
    votes = []
    seen = set()
    for entry in raw_votes:
        if not isinstance(entry, dict):
            raise SchemaError("each vote must be an object")
        annotator = _require_str(entry, "annotator_id")
        if annotator in seen:
            raise SchemaError(f"duplicate annotator_id {annotator!r} in vote set")
        seen.add(annotator)
        votes.append(Vote(annotator_id=annotator, label=label_from_token(entry.get("label"))))
    return VoteSet(pair_id=pair_id, votes=votes)


def _gold_to_dict(g):
    if g.decided is not None:
        outcome = {"decided": g.decided.value}
    else:
        outcome = {"tie": [label.value for label in g.tie]}
    return {"pair_id": g.pair_id, "outcome": outcome}


def _gold_from_dict(obj):
    pair_id = _require_str(obj, "pair_id")
    outcome = obj.get("outcome")
    if not isinstance(outcome, dict) or len(outcome) != 1:
        raise SchemaError("field 'outcome' must be {'decided': ...} or {'tie': [...]}")
    if "decided" in outcome:
        return GoldLabel(pair_id=pair_id, decided=label_from_token(outcome["decided"]))
    if "tie" in outcome:
        raw = outcome["tie"]
        if not isinstance(raw, list):
            raise SchemaError("'tie' must be a list of labels")
        labels = tuple(label_from_token(token) for token in raw)
        try:
            return GoldLabel(pair_id=pair_id, tie=labels)
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
    raise SchemaError("outcome must contain 'decided' or 'tie'")


_CODECS = {
    Claim: (_claim_to_dict, _claim_from_dict),
    Post: (_post_to_dict, _post_from_dict),
    PairCandidate: (_pair_to_dict, _pair_from_dict),
    SyntheticExample: (_synth_to_dict, _synth_from_dict),
    Prediction: (_prediction_to_dict, _prediction_from_dict),
    VoteSet: (_voteset_to_dict, _voteset_from_dict),
    GoldLabel: (_gold_to_dict, _gold_from_dict),
}


def record_to_dict(record):
    try:
        to_dict, _ = _CODECS[type(record)]
    except KeyError:
        raise TypeError(f"not a domain record type: {type(record).__name__}") from None
    return to_dict(record)


def record_from_dict(obj, record_type):
    try:
        _, from_dict = _CODECS[record_type]
    except KeyError:
        raise TypeError(f"not a domain record type: {record_type.__name__}") from None
    return from_dict(obj)


# ---------------------------------------------------------------------------
# JSON-lines framing


@dataclass
class LineError:
    """A decoding failure, addressable by 1-based source line number."""

    line: int
    kind: str  # "malformed_json" | "schema_violation"
    message: str


def encode_records(records):
    """Serialize records to JSON-lines text; each record on one physical line."""
    chunks = []
    for record in records:
        chunks.append(json.dumps(record_to_dict(record), ensure_ascii=False))
        chunks.append("\n")
    return "".join(chunks)


def decode_records(text, record_type):
    """Decode JSON-lines text into (records, per-line errors).

    Blank lines are skipped silently; malformed or schema-violating lines are
    reported with their 1-based line number and skipped.
    """
    records = []
    errors = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(LineError(line_no, "malformed_json", str(exc)))
            continue
        if not isinstance(obj, dict):
            errors.append(LineError(line_no, "schema_violation", "line is not a JSON object"))
            continue
        try:
            records.append(record_from_dict(obj, record_type))
        except SchemaError as exc:
            errors.append(LineError(line_no, "schema_violation", str(exc)))
    return records, errors


def read_jsonl(path, record_type):
    """Decode a JSON-lines file; returns (records, errors)."""
    with open(path, encoding="utf-8") as fh:
        return decode_records(fh.read(), record_type)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(encode_records(records))
