"""Claim-matching pipeline: pair social posts with previously debunked
claims, classify the relation (entailment / neutral / contradiction),
generate balanced synthetic training data, orchestrate hosted fine-tuning,
aggregate human votes into gold labels, and score predictions."""

from .records import (  # noqa: F401
    Claim,
    EntailmentLabel,
    GoldLabel,
    LABEL_ORDER,
    PairCandidate,
    Post,
    Prediction,
    SyntheticExample,
    Vote,
    VoteSet,
)

__version__ = "0.1.0"
