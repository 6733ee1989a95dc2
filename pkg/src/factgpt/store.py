"""Single-directory JSON-lines persistence for the HTTP service.

Layout under the store root:
    claims.jsonl / posts.jsonl / pairs.jsonl / predictions.jsonl
    adjudications.jsonl   append-only review log
    reports/              evaluation report JSON files, newest last

Readers are lock-free over in-memory views; all writes serialize through
one lock. Adjudication conflicts surface as AlreadyAdjudicated (the service
maps them to 409), never last-write-wins.
"""

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .records import (
    Claim,
    GoldLabel,
    PairCandidate,
    Post,
    Prediction,
    decode_records,
    encode_records,
    label_from_token,
)

PENDING = "pending"
CONFIRMED = "confirmed"
OVERRIDDEN = "overridden"


class UnknownPair(KeyError):
    pass


class AlreadyAdjudicated(ValueError):
    def __init__(self, pair_id, status):
        super().__init__(f"pair {pair_id} already adjudicated ({status})")
        self.status = status


@dataclass
class Adjudication:
    pair_id: str
    decision: str  # "confirm" | "override"
    label: str | None  # label token for overrides
    reviewer: str
    created_at: str


class Store:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "reports").mkdir(exist_ok=True)
        self._lock = threading.Lock()
        self.claims = {}
        self.posts = {}
        self.pairs = {}
        self.predictions = {}
        self.adjudications = {}  # pair_id -> list[Adjudication]
        self._load()

    # -- loading ------------------------------------------------------------

    def _read(self, name, record_type):
        path = self.root / name
        if not path.exists():
            return []
        records, errors = decode_records(path.read_text(encoding="utf-8"), record_type)
        if errors:
            raise ValueError(f"{path}: {len(errors)} unreadable lines (first at line {errors[0].line})")
        return records

    def _load(self):
        self.claims = {c.id: c for c in self._read("claims.jsonl", Claim)}
        self.posts = {p.id: p for p in self._read("posts.jsonl", Post)}
        self.pairs = {p.pair_id: p for p in self._read("pairs.jsonl", PairCandidate)}
        self.predictions = {p.pair_id: p for p in self._read("predictions.jsonl", Prediction)}
        log_path = self.root / "adjudications.jsonl"
        if log_path.exists():
            for line in log_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                record = Adjudication(**obj)
                self.adjudications.setdefault(record.pair_id, []).append(record)

    # -- writes -------------------------------------------------------------

    def _rewrite(self, name, records):
        (self.root / name).write_text(encode_records(records), encoding="utf-8")

    def _append(self, name, records):
        with open(self.root / name, "a", encoding="utf-8") as fh:
            fh.write(encode_records(records))

    def upsert_claims(self, claims):
        """Idempotent upsert: exact duplicates are skipped, changed or new
        claims are written. Returns (ingested, skipped_duplicates)."""
        ingested = 0
        skipped = 0
        with self._lock:
            for claim in claims:
                existing = self.claims.get(claim.id)
                if existing == claim:
                    skipped += 1
                    continue
                self.claims[claim.id] = claim
                ingested += 1
            if ingested:
                self._rewrite("claims.jsonl", list(self.claims.values()))
        return ingested, skipped

    def add_post(self, post):
        with self._lock:
            if post.id not in self.posts:
                self.posts[post.id] = post
                self._append("posts.jsonl", [post])

    def add_pair(self, pair, prediction=None):
        with self._lock:
            if pair.pair_id not in self.pairs:
                self.pairs[pair.pair_id] = pair
                self._append("pairs.jsonl", [pair])
            if prediction is not None and prediction.pair_id not in self.predictions:
                self.predictions[prediction.pair_id] = prediction
                self._append("predictions.jsonl", [prediction])

    # -- review queue -------------------------------------------------------

    def status_of(self, pair_id):
        history = self.adjudications.get(pair_id)
        if not history:
            return PENDING
        return CONFIRMED if history[-1].decision == "confirm" else OVERRIDDEN

    def queue_items(self, status=None, sort="score"):
        """Queue rows, stable-ordered: combined_score descending for "score",
        insertion order (newest first) for "recency"."""
        pairs = list(self.pairs.values())
        if sort == "recency":
            pairs.reverse()
        else:
            pairs.sort(key=lambda p: (-p.combined_score, p.pair_id))
        items = []
        for pair in pairs:
            item_status = self.status_of(pair.pair_id)
            if status and status != "all" and item_status != status:
                continue
            items.append(self.item_view(pair.pair_id))
        return items

    def item_view(self, pair_id):
        pair = self.pairs.get(pair_id)
        if pair is None:
            raise UnknownPair(pair_id)
        post = self.posts.get(pair.post_id)
        claim = self.claims.get(pair.claim_id)
        prediction = self.predictions.get(pair_id)
        return {
            "pair_id": pair_id,
            "post": None if post is None else {"id": post.id, "text": post.text},
            "claim": None
            if claim is None
            else {"id": claim.id, "text": claim.text, "source": claim.source, "debunked_on": claim.debunked_on},
            "scores": {
                "token_score": pair.token_score,
                "semantic_score": pair.semantic_score,
                "combined_score": pair.combined_score,
            },
            "prediction": None
            if prediction is None
            else {
                "model_id": prediction.model_id,
                "label": prediction.label.value if prediction.label else None,
                "ambiguous": prediction.ambiguous,
            },
            "status": self.status_of(pair_id),
            "history": [
                {
                    "decision": a.decision,
                    "label": a.label,
                    "reviewer": a.reviewer,
                    "created_at": a.created_at,
                }
                for a in self.adjudications.get(pair_id, [])
            ],
        }

    def adjudicate(self, pair_id, decision, reviewer, label=None, force=False):
        with self._lock:
            if pair_id not in self.pairs:
                raise UnknownPair(pair_id)
            current = self.status_of(pair_id)
            if current != PENDING and not force:
                raise AlreadyAdjudicated(pair_id, current)
            record = Adjudication(
                pair_id=pair_id,
                decision=decision,
                label=label,
                reviewer=reviewer,
                created_at=datetime.now(timezone.utc).isoformat(),
            )
            self.adjudications.setdefault(pair_id, []).append(record)
            with open(self.root / "adjudications.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.__dict__, ensure_ascii=False) + "\n")
        return self.item_view(pair_id)

    def export_gold_labels(self):
        """One GoldLabel per adjudicated pair: confirm freezes the model
        label, override freezes the reviewer's."""
        out = []
        for pair_id in self.pairs:
            history = self.adjudications.get(pair_id)
            if not history:
                continue
            last = history[-1]
            if last.decision == "confirm":
                prediction = self.predictions.get(pair_id)
                if prediction is None or prediction.label is None:
                    continue
                out.append(GoldLabel(pair_id=pair_id, decided=prediction.label))
            else:
                out.append(GoldLabel(pair_id=pair_id, decided=label_from_token(last.label)))
        return out

    # -- reports ------------------------------------------------------------

    def save_report(self, payload):
        with self._lock:
            existing = sorted((self.root / "reports").glob("report-*.json"))
            seq = len(existing) + 1
            path = self.root / "reports" / f"report-{seq:05d}.json"
            path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return path

    def latest_report(self):
        reports = sorted((self.root / "reports").glob("report-*.json"))
        if not reports:
            return None
        return json.loads(reports[-1].read_text(encoding="utf-8"))
