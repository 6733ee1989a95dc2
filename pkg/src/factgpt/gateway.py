"""Provider gateway: chat completion, embeddings, and hosted fine-tune jobs.

One wire protocol (the chat-completions JSON format shared by the major
hosted providers) serves every remote model, selected by base URL + model
id. Provider id "mock" yields a fully deterministic offline stand-in that
is normative for tests: no network, no credentials, stable outputs.

Credentials come from FACTGPT_API_KEY, the base URL from FACTGPT_API_BASE
(or explicit arguments).
"""

import hashlib
import json
import logging
import os
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, replace

import httpx

from . import matcher
from .prompts import LABEL_FRAMES
from .records import LABEL_ORDER, LABEL_TOKENS, EntailmentLabel

logger = logging.getLogger(__name__)

API_KEY_ENV = "FACTGPT_API_KEY"
API_BASE_ENV = "FACTGPT_API_BASE"

FINETUNE_DEFAULT_EPOCHS = 3  # provider default: three fine-tuning epochs

JOB_STATUSES = ("queued", "running", "succeeded", "failed", "cancelled")
TERMINAL_STATUSES = ("succeeded", "failed", "cancelled")


class GatewayError(Exception):
    """Base class for provider/transport failures."""


class AuthError(GatewayError):
    """Credentials rejected; never retried."""


class RateLimited(GatewayError):
    """HTTP 429 persisted beyond the retry budget."""


class GatewayTimeout(GatewayError):
    """Request timed out beyond the retry budget."""


class ProviderError(GatewayError):
    def __init__(self, status, body, message=None):
        super().__init__(message or f"provider returned HTTP {status}")
        self.status = status
        self.body = body


class EmptyBatch(GatewayError):
    """embed() requires at least one input text."""


class UnknownJob(GatewayError):
    """poll_finetune() was given an unknown job id."""


class FineTuneValidationError(GatewayError):
    """Training records failed validation; nothing was uploaded."""

    def __init__(self, errors):
        self.errors = errors  # list of (line_number, message)
        first = errors[0] if errors else (0, "empty file")
        super().__init__(f"invalid fine-tune record at line {first[0]}: {first[1]}")


@dataclass
class GenerationConfig:
    model_id: str
    temperature: float = 0.0
    max_tokens: int | None = None
    request_timeout: float = 30.0
    max_retries: int = 3

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be in [0, 2], got {self.temperature}")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class FineTuneJob:
    job_id: str
    base_model: str
    status: str
    epochs: int = FINETUNE_DEFAULT_EPOCHS
    fine_tuned_model_id: str | None = None

    def __post_init__(self):
        if self.status not in JOB_STATUSES:
            raise ValueError(f"unknown job status {self.status!r}")
        if (self.fine_tuned_model_id is not None) != (self.status == "succeeded"):
            raise ValueError("fine_tuned_model_id must be present exactly when succeeded")


def job_to_dict(job):
    return {
        "job_id": job.job_id,
        "base_model": job.base_model,
        "status": job.status,
        "epochs": job.epochs,
        "fine_tuned_model_id": job.fine_tuned_model_id,
    }


def job_from_dict(obj):
    return FineTuneJob(
        job_id=obj["job_id"],
        base_model=obj["base_model"],
        status=obj["status"],
        epochs=obj.get("epochs", FINETUNE_DEFAULT_EPOCHS),
        fine_tuned_model_id=obj.get("fine_tuned_model_id"),
    )


def validate_finetune_jsonl(text):
    """Validate fine-tune training records; returns (line, message) errors.

    Each line must be {"messages": [system, user, assistant]} with non-empty
    system/user content and an assistant turn that is one of the three label
    tokens.
    """
    errors = []
    saw_record = False
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        saw_record = True
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append((line_no, f"malformed JSON: {exc}"))
            continue
        messages = obj.get("messages") if isinstance(obj, dict) else None
        if not isinstance(messages, list) or len(messages) != 3:
            errors.append((line_no, "record must contain exactly 3 messages"))
            continue
        roles = [m.get("role") if isinstance(m, dict) else None for m in messages]
        if roles != ["system", "user", "assistant"]:
            errors.append((line_no, f"roles must be system/user/assistant, got {roles}"))
            continue
        contents = [m.get("content") for m in messages]
        if not all(isinstance(c, str) for c in contents):
            errors.append((line_no, "every message needs string content"))
            continue
        if not contents[0].strip() or not contents[1].strip():
            errors.append((line_no, "system and user content must be non-empty"))
            continue
        if contents[2] not in LABEL_TOKENS:
            errors.append((line_no, f"assistant content must be a label token, got {contents[2]!r}"))
    if not saw_record:
        errors.append((1, "training file contains no records"))
    return errors


def _stable_hash(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_SENTINELS = {f"[[{label.value}]]": label for label in LABEL_ORDER}


class MockProvider:
    """Deterministic offline provider.

    Chat contract:
      * a "[[ENTAILMENT]]" / "[[NEUTRAL]]" / "[[CONTRADICTION]]" sentinel in
        the user message wins (earliest occurrence) and is echoed as the bare
        label token;
      * generation prompts (system starts with "Generate TWEET") yield
        "MOCK TWEET <hash> <label frame>";
      * anything else is treated as an entailment prompt and answered with
        the label picked by a stable hash of the user message modulo 3.

    Embeddings delegate to the offline hashed n-gram embedder. Fine-tune jobs
    advance queued -> running -> succeeded across successive polls and mint a
    deterministic model id.
    """

    provider_id = "mock"
    temperature_floor = 0.0

    def __init__(self):
        self._embedder = matcher.OfflineEmbedder()
        self._jobs = {}
        self._job_stage = {}
        self._lock = threading.Lock()

    def chat(self, messages, config):
        sentinel_hits = [
            (messages.user.index(token), label)
            for token, label in _SENTINELS.items()
            if token in messages.user
        ]
        if sentinel_hits:
            return min(sentinel_hits)[1].value
        digest = _stable_hash(messages.user)
        if messages.system.startswith("Generate TWEET"):
            frame = next(
                (f for f in LABEL_FRAMES.values() if f in messages.system),
                LABEL_FRAMES[EntailmentLabel.ENTAILMENT],
            )
            return f"MOCK TWEET {digest[:8]} {frame}"
        return LABEL_ORDER[int(digest, 16) % 3].value

    def embed(self, texts, model_id):
        if not texts:
            raise EmptyBatch("embed requires at least one text")
        return [self._embedder(t).tolist() for t in texts]

    def submit_finetune(self, training_jsonl, base_model, epochs=FINETUNE_DEFAULT_EPOCHS):
        errors = validate_finetune_jsonl(training_jsonl)
        if errors:
            raise FineTuneValidationError(errors)
        digest = _stable_hash(training_jsonl)[:12]
        job_id = f"mock-ft-{digest}"
        job = FineTuneJob(job_id=job_id, base_model=base_model, status="queued", epochs=epochs)
        with self._lock:
            self._jobs[job_id] = job
            self._job_stage[job_id] = 0
        return job

    def poll_finetune(self, job_id):
        with self._lock:
            if job_id not in self._jobs:
                raise UnknownJob(f"no such fine-tune job: {job_id}")
            job = self._jobs[job_id]
            if job.status in TERMINAL_STATUSES:
                return job
            stage = self._job_stage[job_id]
            # report the current stage, then advance for the next poll
            current = ("queued", "running", "succeeded")[min(stage, 2)]
            self._job_stage[job_id] = stage + 1
            if current == "succeeded":
                digest = job.job_id.removeprefix("mock-ft-")
                job = replace(job, status="succeeded", fine_tuned_model_id=f"mock-ft-model-{digest}")
            else:
                job = replace(job, status=current)
            self._jobs[job_id] = job
            return job


class TransportTimeout(Exception):
    """Raised by transports when a request times out (retryable)."""


class TransportConnectionError(Exception):
    """Raised by transports on connection failures (retryable)."""


class HttpxTransport:
    """Default transport: httpx with per-request timeout."""

    def __call__(self, method, url, headers=None, json_body=None, files=None, timeout=None):
        try:
            response = httpx.request(
                method, url, headers=headers, json=json_body, files=files, timeout=timeout
            )
        except httpx.TimeoutException as exc:
            raise TransportTimeout(str(exc)) from exc
        except httpx.TransportError as exc:
            raise TransportConnectionError(str(exc)) from exc
        try:
            body = response.json()
        except ValueError:
            body = response.text
        return response.status_code, body


class RateLimiter:
    """Token bucket over requests/minute plus a bounded in-flight budget."""

    def __init__(self, requests_per_minute=None, max_in_flight=8):
        self._rpm = requests_per_minute
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self._lock = threading.Lock()
        self._allowance = float(requests_per_minute) if requests_per_minute else 0.0
        self._last = time.monotonic()

    @contextmanager
    def slot(self):
        with self._sem:
            self._wait_for_token()
            yield

    def _wait_for_token(self):
        if not self._rpm:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self._allowance = min(self._rpm, self._allowance + (now - self._last) * self._rpm / 60.0)
                self._last = now
                if self._allowance >= 1.0:
                    self._allowance -= 1.0
                    return
                wait = (1.0 - self._allowance) * 60.0 / self._rpm
            time.sleep(wait)


_STATUS_MAP = {
    "validating_files": "queued",
    "queued": "queued",
    "created": "queued",
    "pending": "queued",
    "running": "running",
    "succeeded": "succeeded",
    "failed": "failed",
    "cancelled": "cancelled",
}


class HttpProvider:
    """Live provider over the chat-completions wire protocol.

    Transient failures (HTTP 429/5xx, timeouts, connection errors) are
    retried with exponential backoff; auth failures and other 4xx surface
    immediately. Prompt content is forwarded byte-for-byte.
    """

    def __init__(
        self,
        base_url,
        api_key=None,
        *,
        provider_id="live",
        temperature_floor=0.0,
        max_retries=3,
        backoff_base=0.5,
        request_timeout=30.0,
        limiter=None,
        transport=None,
        audit_path=None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.provider_id = provider_id
        self.temperature_floor = temperature_floor
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.request_timeout = request_timeout
        self.limiter = limiter or RateLimiter()
        self.transport = transport or HttpxTransport()
        self.audit_path = audit_path
        self._audit_lock = threading.Lock()

    # -- plumbing -----------------------------------------------------------

    def _headers(self):
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _audit(self, method, url, status, request_body, response_body):
        if not self.audit_path:
            return
        entry = {
            "ts": time.time(),
            "method": method,
            "url": url,
            "status": status,
            "request": request_body,
            "response": response_body,
        }
        with self._audit_lock, open(self.audit_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def _request(self, method, path, json_body=None, files=None, max_retries=None, timeout=None):
        url = f"{self.base_url}{path}"
        retries = self.max_retries if max_retries is None else max_retries
        timeout = self.request_timeout if timeout is None else timeout
        last_failure = None
        for attempt in range(retries + 1):
            if attempt:
                time.sleep(self.backoff_base * 2 ** (attempt - 1))
            with self.limiter.slot():
                try:
                    status, body = self.transport(
                        method, url, headers=self._headers(), json_body=json_body,
                        files=files, timeout=timeout,
                    )
                except TransportTimeout as exc:
                    last_failure = ("timeout", str(exc))
                    continue
                except TransportConnectionError as exc:
                    last_failure = ("connection", str(exc))
                    continue
            self._audit(method, url, status, json_body, body)
            if 200 <= status < 300:
                return body
            if status in (401, 403):
                raise AuthError(f"provider rejected credentials (HTTP {status})")
            if status == 429 or status >= 500:
                last_failure = ("status", status, body)
                continue
            raise ProviderError(status, body)
        # retry budget exhausted
        if last_failure[0] == "timeout":
            raise GatewayTimeout(f"request timed out after {retries + 1} attempts")
        if last_failure[0] == "connection":
            raise ProviderError(0, last_failure[1], "connection failed after retries")
        status, body = last_failure[1], last_failure[2]
        if status == 429:
            raise RateLimited(f"rate limited after {retries + 1} attempts")
        raise ProviderError(status, body)

    # -- operations ---------------------------------------------------------

    def chat(self, messages, config):
        payload = {
            "model": config.model_id,
            "messages": [
                {"role": "system", "content": messages.system},
                {"role": "user", "content": messages.user},
            ],
            "temperature": max(config.temperature, self.temperature_floor),
        }
        if config.max_tokens is not None:
            payload["max_tokens"] = config.max_tokens
        body = self._request(
            "POST", "/chat/completions", json_body=payload,
            max_retries=config.max_retries, timeout=config.request_timeout,
        )
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(200, body, f"malformed chat response: {exc}") from exc

    def embed(self, texts, model_id):
        if not texts:
            raise EmptyBatch("embed requires at least one text")
        body = self._request("POST", "/embeddings", json_body={"model": model_id, "input": list(texts)})
        try:
            data = sorted(body["data"], key=lambda item: item["index"])
            return [item["embedding"] for item in data]
        except (KeyError, TypeError) as exc:
            raise ProviderError(200, body, f"malformed embeddings response: {exc}") from exc

    def submit_finetune(self, training_jsonl, base_model, epochs=FINETUNE_DEFAULT_EPOCHS):
        errors = validate_finetune_jsonl(training_jsonl)
        if errors:
            raise FineTuneValidationError(errors)
        upload = self._request(
            "POST", "/files",
            files={
                "file": ("training.jsonl", training_jsonl.encode("utf-8")),
                "purpose": (None, "fine-tune"),
            },
        )
        try:
            file_id = upload["id"]
        except (KeyError, TypeError) as exc:
            raise ProviderError(200, upload, f"malformed upload response: {exc}") from exc
        body = self._request(
            "POST", "/fine_tuning/jobs",
            json_body={
                "model": base_model,
                "training_file": file_id,
                "hyperparameters": {"n_epochs": epochs},
            },
        )
        return self._job_from_body(body, base_model, epochs)

    def poll_finetune(self, job_id):
        try:
            body = self._request("GET", f"/fine_tuning/jobs/{job_id}")
        except ProviderError as exc:
            if exc.status == 404:
                raise UnknownJob(f"no such fine-tune job: {job_id}") from exc
            raise
        return self._job_from_body(body, body.get("model", ""), body.get("epochs", FINETUNE_DEFAULT_EPOCHS))

    def _job_from_body(self, body, base_model, epochs):
        try:
            raw_status = body.get("status", "queued")
            status = _STATUS_MAP[raw_status]
        except KeyError:
            raise ProviderError(200, body, f"unexpected job status {body.get('status')!r}") from None
        except AttributeError:
            raise ProviderError(200, body, "malformed job response") from None
        return FineTuneJob(
            job_id=body["id"],
            base_model=base_model,
            status=status,
            epochs=epochs,
            fine_tuned_model_id=body.get("fine_tuned_model") if status == "succeeded" else None,
        )


def make_provider(
    provider_id,
    *,
    base_url=None,
    api_key=None,
    temperature_floor=0.0,
    transport=None,
    limiter=None,
    audit_path=None,
):
    """Build a provider. "mock" is the offline deterministic stand-in; any
    other id is served over the HTTP wire protocol and requires a base URL
    (argument or FACTGPT_API_BASE), with credentials from FACTGPT_API_KEY.
    """
    if provider_id == "mock":
        return MockProvider()
    base_url = base_url or os.environ.get(API_BASE_ENV)
    api_key = api_key or os.environ.get(API_KEY_ENV)
    if not base_url:
        raise ValueError(f"provider {provider_id!r} requires a base URL (set {API_BASE_ENV})")
    return HttpProvider(
        base_url,
        api_key,
        provider_id=provider_id,
        temperature_floor=temperature_floor,
        transport=transport,
        limiter=limiter,
        audit_path=audit_path,
    )
