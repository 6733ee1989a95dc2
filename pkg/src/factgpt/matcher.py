"""Hybrid token/semantic pairing of posts against the claim store.

Token similarity is Jaccard over normalized word sets; semantic similarity
is cosine over embeddings from a pluggable backend. The built-in offline
embedder (hashed character n-gram counts, L2-normalized) is deterministic
and needs no network, so pairing runs are reproducible end to end.
"""

import hashlib
import re
import zlib
from dataclasses import dataclass

import numpy as np

from .records import PairCandidate


class EmptyClaimStore(ValueError):
    """pair_candidates needs at least one claim."""


class UnknownEmbedder(ValueError):
    """embedder_id does not name a registered embedding backend."""


class DimensionMismatch(ValueError):
    """cosine() was given vectors of different dimensions."""


@dataclass
class MatcherConfig:
    alpha: float = 0.5  # weight on the token score
    top_k: int = 1  # candidates kept per post
    min_combined_score: float = 0.0
    embedder_id: str = "offline"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_WORD_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text):
    """Lowercased word-token set: URLs and @-mentions dropped, '#' stripped."""
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    return set(_WORD_RE.findall(text.lower()))


def token_similarity(a, b):
    """Jaccard index of two token sets; 0.0 when both are empty."""
    if not a and not b:
        return 0.0
    union = a | b
    return len(a & b) / len(union)


class OfflineEmbedder:
    """Deterministic text embedding: hashed character n-gram counts.

    Each n-gram is bucketed by CRC32 into a fixed-dimension count vector,
    which is then L2-normalized. Same text always gives the same vector,
    in any process, with no model download.
    """

    def __init__(self, dim=256, ngram_sizes=(2, 3)):
        self.dim = dim
        self.ngram_sizes = ngram_sizes

    def __call__(self, text):
        vec = np.zeros(self.dim, dtype=np.float64)
        stripped = text.strip()
        if not stripped:
            return vec
        lowered = stripped.lower()
        seen_any = False
        for n in self.ngram_sizes:
            for i in range(len(lowered) - n + 1):
                gram = lowered[i : i + n]
                vec[zlib.crc32(gram.encode("utf-8")) % self.dim] += 1.0
                seen_any = True
        if not seen_any:  # text shorter than every n-gram size
            vec[zlib.crc32(lowered.encode("utf-8")) % self.dim] += 1.0
        return vec / np.linalg.norm(vec)


class RemoteEmbedder:
    """Delegates to a provider's embeddings endpoint."""

    def __init__(self, provider, model_id):
        self.provider = provider
        self.model_id = model_id

    def __call__(self, text):
        return np.asarray(self.provider.embed([text], self.model_id)[0], dtype=np.float64)


def get_embedder(embedder_id, provider=None):
    """Resolve an embedder_id to a callable text -> vector."""
    if embedder_id == "offline":
        return OfflineEmbedder()
    if embedder_id.startswith("remote:"):
        if provider is None:
            raise UnknownEmbedder("remote embedder requires a provider")
        return RemoteEmbedder(provider, embedder_id.split(":", 1)[1])
    raise UnknownEmbedder(f"no embedder registered under {embedder_id!r}")


def cosine(u, v):
    """Cosine similarity; 0.0 when either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"vector dimensions differ: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def make_pair_id(post_id, claim_id):
    """Deterministic pair id derived from the (post, claim) identity."""
    digest = hashlib.sha256(f"{post_id}\x1f{claim_id}".encode("utf-8")).hexdigest()
    return f"pair-{digest[:12]}"


def combined_score(token_score, semantic_score, alpha):
    # negative cosine clamps to 0 so the mix stays in [0, 1]
    return alpha * token_score + (1.0 - alpha) * max(semantic_score, 0.0)


def pair_candidates(posts, claims, config=None, provider=None):
    """Score every post against every claim, keep top_k per post above the
    threshold, and emit pairs sorted by combined_score descending (ties by
    post_id then claim_id, so runs are reproducible).
    """
    config = config or MatcherConfig()
    unique_claims = list({c.id: c for c in claims}.values())
    if not unique_claims:
        raise EmptyClaimStore("claim store is empty")
    unique_posts = list({p.id: p for p in posts}.values())

    embed = get_embedder(config.embedder_id, provider)
    claim_tokens = {c.id: tokenize(c.text) for c in unique_claims}
    claim_vecs = {c.id: embed(c.text) for c in unique_claims}

    out = []
    for post in unique_posts:
        post_tok = tokenize(post.text)
        post_vec = embed(post.text)
        scored = []
        for claim in unique_claims:
            t = token_similarity(post_tok, claim_tokens[claim.id])
            s = cosine(post_vec, claim_vecs[claim.id])
            c = combined_score(t, s, config.alpha)
            if c >= config.min_combined_score:
                scored.append((claim.id, t, s, c))
        scored.sort(key=lambda item: (-item[3], item[0]))
        for claim_id, t, s, c in scored[: config.top_k]:
            out.append(
                PairCandidate(
                    pair_id=make_pair_id(post.id, claim_id),
                    post_id=post.id,
                    claim_id=claim_id,
                    token_score=t,
                    semantic_score=s,
                    combined_score=c,
                )
            )
    out.sort(key=lambda pc: (-pc.combined_score, pc.post_id, pc.claim_id))
    return out
