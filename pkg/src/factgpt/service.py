"""HTTP facade: claim ingestion, live matching, the review queue, and reports.

All endpoints live under /v1 and return errors in a uniform envelope
{"code", "message", "detail"}. The review UI is a pure client of this API;
its static build can be mounted at /ui and discovers the API base via
GET /v1/ui-config.
"""

import logging
from dataclasses import replace

from fastapi import Body, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import matcher
from .classify import ClassifyConfig, classify_pair
from .gateway import GatewayError
from .records import (
    Claim,
    PairCandidate,
    Post,
    SchemaError,
    content_id,
    record_from_dict,
)
from .store import AlreadyAdjudicated, UnknownPair

logger = logging.getLogger(__name__)

DEFAULT_QUEUE_LIMIT = 20
MAX_QUEUE_LIMIT = 200


class ApiError(Exception):
    def __init__(self, status, code, message, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def _claim_payload(claim):
    return {"id": claim.id, "text": claim.text, "source": claim.source, "debunked_on": claim.debunked_on}


def create_app(store, provider, matcher_config=None, *, classify_model="mock-classifier",
               ui_dir=None, api_base="", cors_origins=("*",)):
    app = FastAPI(title="factgpt service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    config = matcher_config or matcher.MatcherConfig()

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    # -- claims ---------------------------------------------------------

    @app.post("/v1/claims")
    def ingest_claims(payload: list = Body(...)):
        claims = []
        item_errors = []
        for index, obj in enumerate(payload):
            if not isinstance(obj, dict):
                item_errors.append({"index": index, "message": "claim must be a JSON object"})
                continue
            if not obj.get("id"):
                text = obj.get("text")
                if isinstance(text, str) and text.strip():
                    obj = {**obj, "id": content_id("c", text)}
            try:
                claims.append(record_from_dict(obj, Claim))
            except SchemaError as exc:
                item_errors.append({"index": index, "message": str(exc)})
        if item_errors:
            raise ApiError(400, "invalid_claims", "some claims failed validation", item_errors)
        ingested, skipped = store.upsert_claims(claims)
        return {"ingested": ingested, "skipped_duplicates": skipped}

    # -- matching ---------------------------------------------------------

    def _match_candidates(post_text, top_k):
        post = Post(id=content_id("p", post_text), text=post_text)
        run_config = replace(config, top_k=top_k)
        pairs = matcher.pair_candidates([post], store.claims.values(), run_config, provider)
        return post, pairs

    def _candidate_payload(pair):
        return {
            "claim": _claim_payload(store.claims[pair.claim_id]),
            "token_score": pair.token_score,
            "semantic_score": pair.semantic_score,
            "combined_score": pair.combined_score,
        }

    @app.post("/v1/match")
    def match(payload: dict = Body(...)):
        post_text = payload.get("post_text")
        if not isinstance(post_text, str) or not post_text.strip():
            raise ApiError(400, "invalid_request", "post_text must be a non-empty string")
        top_k = payload.get("top_k", config.top_k)
        if not isinstance(top_k, int) or top_k < 1:
            raise ApiError(400, "invalid_request", "top_k must be a positive integer")
        if not store.claims:
            raise ApiError(409, "empty_claim_store", "ingest claims before matching")
        post, pairs = _match_candidates(post_text, top_k)
        candidates = [_candidate_payload(pair) for pair in pairs]
        if not payload.get("classify", False):
            return {"candidates": candidates}

        model_id = payload.get("model_id", classify_model)
        cls_config = ClassifyConfig(model_id=model_id)
        try:
            for pair, candidate in zip(pairs, candidates):
                prediction = classify_pair(
                    pair.pair_id, post.text, store.claims[pair.claim_id].text, cls_config, provider
                )
                candidate["label"] = prediction.label.value if prediction.label else None
                candidate["ambiguous"] = prediction.ambiguous
        except GatewayError as exc:
            for candidate in candidates:
                candidate.setdefault("label", None)
            raise ApiError(
                502, "provider_error", f"classification failed: {exc}", {"candidates": candidates}
            ) from exc
        return {"candidates": candidates}

    # -- review queue -------------------------------------------------------

    @app.post("/v1/review/queue")
    def push_to_queue(payload: dict = Body(...)):
        post_text = payload.get("post_text")
        claim_id = payload.get("claim_id")
        if not isinstance(post_text, str) or not post_text.strip():
            raise ApiError(400, "invalid_request", "post_text must be a non-empty string")
        claim = store.claims.get(claim_id)
        if claim is None:
            raise ApiError(404, "unknown_claim", f"no claim with id {claim_id!r}")
        post = Post(id=content_id("p", post_text), text=post_text)
        store.add_post(post)
        embed = matcher.get_embedder(config.embedder_id, provider)
        token = matcher.token_similarity(matcher.tokenize(post.text), matcher.tokenize(claim.text))
        semantic = matcher.cosine(embed(post.text), embed(claim.text))
        pair = PairCandidate(
            pair_id=matcher.make_pair_id(post.id, claim.id),
            post_id=post.id,
            claim_id=claim.id,
            token_score=token,
            semantic_score=semantic,
            combined_score=matcher.combined_score(token, semantic, config.alpha),
        )
        prediction = None
        if payload.get("classify", False):
            model_id = payload.get("model_id", classify_model)
            try:
                prediction = classify_pair(pair.pair_id, post.text, claim.text,
                                           ClassifyConfig(model_id=model_id), provider)
            except GatewayError as exc:
                logger.warning("classification failed for queued pair %s: %s", pair.pair_id, exc)
        store.add_pair(pair, prediction)
        return store.item_view(pair.pair_id)

    @app.get("/v1/review/queue")
    def review_queue(status: str = "pending", limit: int = DEFAULT_QUEUE_LIMIT,
                     cursor: str | None = None, sort: str = "score"):
        if limit < 1 or limit > MAX_QUEUE_LIMIT:
            raise ApiError(400, "invalid_pagination", f"limit must be in [1, {MAX_QUEUE_LIMIT}]")
        if status not in ("pending", "confirmed", "overridden", "all"):
            raise ApiError(400, "invalid_request", f"unknown status filter {status!r}")
        if sort not in ("score", "recency"):
            raise ApiError(400, "invalid_request", f"unknown sort {sort!r}")
        offset = 0
        if cursor is not None:
            try:
                offset = int(cursor)
            except ValueError:
                raise ApiError(400, "invalid_pagination", f"bad cursor {cursor!r}") from None
            if offset < 0:
                raise ApiError(400, "invalid_pagination", "cursor must be >= 0")
        items = store.queue_items(status=status, sort=sort)
        page = items[offset : offset + limit]
        next_cursor = str(offset + limit) if offset + limit < len(items) else None
        return {"items": page, "next_cursor": next_cursor, "total": len(items)}

    @app.post("/v1/review/{pair_id}")
    def review_submit(pair_id: str, payload: dict = Body(...)):
        decision = payload.get("decision")
        if decision not in ("confirm", "override"):
            raise ApiError(400, "invalid_request", "decision must be 'confirm' or 'override'")
        reviewer = payload.get("reviewer")
        if not isinstance(reviewer, str) or not reviewer.strip():
            raise ApiError(400, "invalid_request", "reviewer must be a non-empty string")
        if pair_id not in store.pairs:
            raise ApiError(404, "unknown_pair", f"no pair with id {pair_id!r}")
        label = payload.get("label")
        if decision == "override":
            if label not in ("ENTAILMENT", "NEUTRAL", "CONTRADICTION"):
                raise ApiError(400, "invalid_request", "override requires a label token")
        else:
            prediction = store.predictions.get(pair_id)
            if prediction is None or prediction.label is None:
                raise ApiError(400, "invalid_request", "confirm requires an existing model label")
            label = None
        try:
            return store.adjudicate(
                pair_id, decision, reviewer, label=label, force=bool(payload.get("force", False))
            )
        except UnknownPair:
            raise ApiError(404, "unknown_pair", f"no pair with id {pair_id!r}") from None
        except AlreadyAdjudicated as exc:
            raise ApiError(
                409, "already_adjudicated", str(exc), {"item": store.item_view(pair_id)}
            ) from None

    # -- reports --------------------------------------------------------

    @app.get("/v1/reports/latest")
    def latest_report():
        payload = store.latest_report()
        if payload is None:
            raise ApiError(404, "no_reports", "no evaluation report has been persisted yet")
        return payload

    @app.get("/v1/ui-config")
    def ui_config():
        return {"api_base": api_base}

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
