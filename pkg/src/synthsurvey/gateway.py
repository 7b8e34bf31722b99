"""Chat-completions access, reply parsing, response caching and a mock respondent."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping

import httpx
import numpy as np

from .domain import (
    BASKET_SHARES,
    COMPONENTS,
    AnswerScale,
    DemographicProfile,
    Persona,
    ResponseRecord,
    Scenario,
    SurveyQuestion,
    SurveySample,
    TreatmentVector,
    default_answer_scale,
    map_option_to_value,
)
from .prompting import PromptBundle, build_prompt, respondent_seed

log = logging.getLogger(__name__)

ENV_ENDPOINT = "SYNTHSURVEY_ENDPOINT"
ENV_API_KEY = "SYNTHSURVEY_API_KEY"
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
TEMPERATURE_CAP = 1.5
RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


class GatewayError(RuntimeError):
    def __init__(self, message: str, persona_id: str | None = None):
        self.persona_id = persona_id
        super().__init__(message if persona_id is None else f"[{persona_id}] {message}")


class TransportError(GatewayError):
    """Network failure, or retryable failures that outlasted the retry budget."""


class HTTPStatusError(GatewayError):
    def __init__(self, status: int, body: str, persona_id: str | None = None):
        self.status = status
        super().__init__(f"HTTP {status}: {body[:200]}", persona_id)


class MalformedResponseError(GatewayError):
    pass


class OfflineCacheMiss(GatewayError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    model_id: str = "gpt-3.5-turbo-0613"
    temperature: float = 0.0
    endpoint: str = ""
    max_retries: int = 3
    max_concurrency: int = 8
    timeout: float = 60.0
    allow_high_temperature: bool = False

    def __post_init__(self):
        cap = 2.0 if self.allow_high_temperature else TEMPERATURE_CAP
        if not 0 <= self.temperature <= cap:
            raise ValueError(f"temperature {self.temperature} outside [0, {cap}]")
        if self.max_retries < 0 or self.max_concurrency < 1:
            raise ValueError("max_retries must be >= 0 and max_concurrency >= 1")

    def with_temperature(self, temperature: float) -> "ModelConfig":
        return replace(self, temperature=float(temperature))

    def resolved_endpoint(self) -> str:
        return self.endpoint or os.environ.get(ENV_ENDPOINT) or DEFAULT_ENDPOINT


@dataclass(frozen=True)
class ChatRequest:
    system_text: str
    user_text: str
    model_id: str
    temperature: float
    permutation_seed: int = 0
    # Structured context; only the mock backend reads it.
    persona: Persona | None = None
    treatment: TreatmentVector | None = None
    question: SurveyQuestion | None = None

    def cache_key(self) -> str:
        payload = json.dumps(
            [self.model_id, float(self.temperature), self.system_text, self.user_text, int(self.permutation_seed)],
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatExchange:
    request: ChatRequest
    reply_text: str
    latency: float = 0.0
    attempt_count: int = 1
    timestamp: str = ""
    cached: bool = False


# --------------------------------------------------------------------------
# Cache
# --------------------------------------------------------------------------


class ResponseCache:
    """Append-only reply store, optionally persisted as JSON lines."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        if self.path and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        self._entries.setdefault(rec["key"], rec)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, request: ChatRequest) -> dict | None:
        with self._lock:
            rec = self._entries.get(request.cache_key())
            if rec is None:
                self.misses += 1
            else:
                self.hits += 1
            return rec

    def put(self, request: ChatRequest, reply: str, timestamp: str) -> dict:
        key = request.cache_key()
        rec = {
            "key": key,
            "model_id": request.model_id,
            "temperature": float(request.temperature),
            "system_text": request.system_text,
            "user_text": request.user_text,
            "permutation_seed": int(request.permutation_seed),
            "reply": reply,
            "timestamp": timestamp,
        }
        with self._lock:
            if key in self._entries:
                return self._entries[key]
            self._entries[key] = rec
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
        return rec


# --------------------------------------------------------------------------
# Backends
# --------------------------------------------------------------------------


class HttpBackend:
    """Chat-completions style endpoint with exponential-backoff retries."""

    remote = True

    def __init__(
        self,
        config: ModelConfig,
        api_key: str | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        backoff: float = 0.5,
    ):
        self.config = config
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY) or os.environ.get("OPENAI_API_KEY", "")
        self.client = httpx.Client(transport=transport, timeout=config.timeout)
        self.sleep = sleep
        self.backoff = backoff
        self.calls = 0

    def payload(self, request: ChatRequest) -> dict:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        return {"model": request.model_id, "messages": messages, "temperature": request.temperature}

    def chat(self, request: ChatRequest) -> ChatExchange:
        pid = request.persona.id if request.persona else None
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = self.config.resolved_endpoint()
        attempts = 0
        last = "no attempt made"
        start = time.monotonic()
        while attempts <= self.config.max_retries:
            if attempts:
                self.sleep(self.backoff * 2 ** (attempts - 1))
            attempts += 1
            self.calls += 1
            try:
                resp = self.client.post(url, headers=headers, json=self.payload(request))
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.debug("attempt %d failed: %s", attempts, last)
                continue
            if resp.status_code in RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                log.debug("attempt %d got %s", attempts, last)
                continue
            if resp.status_code >= 400:
                raise HTTPStatusError(resp.status_code, resp.text, pid)
            try:
                reply = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponseError(f"unexpected response body: {resp.text[:200]}", pid) from exc
            if not isinstance(reply, str):
                raise MalformedResponseError("message content is not a string", pid)
            return ChatExchange(
                request, reply, time.monotonic() - start, attempts,
                datetime.now(timezone.utc).isoformat(timespec="seconds"),
            )
        raise TransportError(f"giving up after {attempts} attempts ({last})", pid)

    def close(self) -> None:
        self.client.close()


@dataclass(frozen=True)
class MockParams:
    """Coefficients of the mock respondent's latent answer (percentage points).

    latent = intercept + horizon_intercepts[h] + model_offsets[model]
             + sum_k shares[k] * t_k + sum interactions[(a, b)] * t_a * t_b
             + offsets[category[value]] + jitter * (u - 1/2) + T * noise_scale * z

    with u ~ U(0, 1) and z ~ N(0, 1) drawn from the respondent seed. Inactive
    components contribute nothing. The latent is snapped to the nearest
    answer option.
    """

    intercept: float = 0.0
    shares: Mapping[str, float] = field(default_factory=lambda: dict(BASKET_SHARES))
    interactions: Mapping[tuple[str, str], float] = field(default_factory=dict)
    offsets: Mapping[str, float] = field(default_factory=dict)
    horizon_intercepts: Mapping[int, float] = field(default_factory=dict)
    model_offsets: Mapping[str, float] = field(default_factory=dict)
    noise_scale: float = 0.0
    jitter: float = 0.0

    @classmethod
    def from_mapping(cls, m: Mapping) -> "MockParams":
        m = dict(m or {})
        if "interactions" in m:
            m["interactions"] = {tuple(k.split("*")) if isinstance(k, str) else tuple(k): float(v)
                                 for k, v in m["interactions"].items()}
        if "horizon_intercepts" in m:
            m["horizon_intercepts"] = {int(k): float(v) for k, v in m["horizon_intercepts"].items()}
        if "shares" in m:
            m["shares"] = {**BASKET_SHARES, **m["shares"]}
        return cls(**m)

    def latent(self, profile: DemographicProfile | None, t: TreatmentVector | None, temperature: float,
               seed: int, horizon: int = 0, model_id: str = "") -> float:
        x = self.intercept + self.horizon_intercepts.get(horizon, 0.0) + self.model_offsets.get(model_id, 0.0)
        if t is not None:
            vals = {c: (t.value(c) if t.is_active(c) else 0.0) for c in COMPONENTS}
            x += sum(self.shares.get(c, 0.0) * vals[c] for c in COMPONENTS)
            x += sum(coef * vals[a] * vals[b] for (a, b), coef in self.interactions.items())
        if profile is not None:
            for cat, value in profile.as_dict().items():
                x += self.offsets.get(f"{cat}[{value}]", 0.0)
        rng = np.random.default_rng(seed)
        u, z = rng.uniform(), rng.standard_normal()
        return x + self.jitter * (u - 0.5) + temperature * self.noise_scale * z


def mock_respondent(
    profile: DemographicProfile | None,
    t: TreatmentVector | None,
    temperature: float,
    seed: int,
    params: MockParams | None = None,
    horizon: int = 0,
    scale: AnswerScale | None = None,
    model_id: str = "",
) -> str:
    """Deterministic reply text: the option label nearest the mock latent."""
    params = params or MockParams()
    scale = scale or default_answer_scale()
    return scale.snap(params.latent(profile, t, temperature, seed, horizon, model_id)).label


class MockBackend:
    """Offline stand-in answering survey prompts through :func:`mock_respondent`."""

    remote = False

    def __init__(self, params: MockParams | None = None, fail_ids: frozenset[str] = frozenset()):
        self.params = params or MockParams()
        self.fail_ids = frozenset(fail_ids)
        self.calls = 0
        self._lock = threading.Lock()

    def chat(self, request: ChatRequest) -> ChatExchange:
        with self._lock:
            self.calls += 1
        if request.persona is not None and request.persona.id in self.fail_ids:
            raise TransportError("mock failure", request.persona.id)
        if request.question is None:
            digest = hashlib.sha256(request.user_text.encode("utf-8")).hexdigest()[:8]
            reply = f"[mock {request.model_id}] I do not have information about that ({digest})."
        else:
            reply = mock_respondent(
                request.persona.profile if request.persona else None,
                request.treatment,
                request.temperature,
                request.permutation_seed,
                self.params,
                request.question.horizon_years,
                request.question.scale,
                request.model_id,
            )
        return ChatExchange(request, reply)


class Gateway:
    """Backend plus cache; in offline mode a remote backend is never contacted."""

    def __init__(self, backend, cache: ResponseCache | None = None, offline: bool = False):
        self.backend = backend
        self.cache = cache if cache is not None else ResponseCache()
        self.offline = offline

    def ask(self, request: ChatRequest) -> ChatExchange:
        rec = self.cache.get(request)
        if rec is not None:
            return ChatExchange(request, rec["reply"], 0.0, 0, rec.get("timestamp", ""), cached=True)
        if self.offline and getattr(self.backend, "remote", True):
            pid = request.persona.id if request.persona else None
            raise OfflineCacheMiss("no cached reply and offline mode is on", pid)
        ex = self.backend.chat(request)
        self.cache.put(request, ex.reply_text, ex.timestamp)
        return ex


def complete(
    config: ModelConfig,
    system_text: str,
    user_text: str,
    gateway: Gateway | None = None,
    permutation_seed: int = 0,
) -> str:
    """Assistant reply for one system/user exchange (cache first, then network)."""
    gw = gateway or Gateway(HttpBackend(config))
    req = ChatRequest(system_text, user_text, config.model_id, config.temperature, permutation_seed)
    return gw.ask(req).reply_text


# --------------------------------------------------------------------------
# Parsing and batch runs
# --------------------------------------------------------------------------

_INDEX_RE = re.compile(r"^\s*(?:option\s*)?(\d+)\s*(?:[.):]\s*(.*))?$", re.IGNORECASE | re.DOTALL)


def _norm(s: str) -> str:
    return " ".join(s.lower().split())


def match_option(reply_text: str, presented_options) -> str | None:
    """Option label chosen by a reply, or ``None`` when unmatched or ambiguous."""
    options = list(presented_options)
    m = _INDEX_RE.match(reply_text or "")
    if m:
        idx = int(m.group(1))
        if 1 <= idx <= len(options):
            rest = _norm(m.group(2) or "").rstrip(".")
            if not rest or rest == _norm(options[idx - 1]) or _norm(options[idx - 1]) in rest:
                return options[idx - 1]
    text = _norm(reply_text or "")
    hits = [o for o in options if _norm(o) in text]
    # Drop labels contained in a longer matched label.
    hits = [o for o in hits if not any(o != h and _norm(o) in _norm(h) for h in hits)]
    return hits[0] if len(hits) == 1 else None


def parse_choice(reply_text: str, presented_options, scale: AnswerScale) -> float | None:
    label = match_option(reply_text, presented_options)
    return None if label is None else map_option_to_value(label, scale)


@dataclass(frozen=True)
class SampleRun:
    records: tuple[ResponseRecord, ...]
    errors: tuple[tuple[str, str], ...]

    @property
    def values(self) -> list[float | None]:
        return [r.value for r in self.records]

    @property
    def n_miss(self) -> int:
        return sum(r.value is None for r in self.records)


def ask_persona(
    gateway: Gateway,
    persona: Persona,
    treatment: TreatmentVector | None,
    question: SurveyQuestion,
    config: ModelConfig,
    seed: int,
) -> tuple[ResponseRecord, PromptBundle]:
    bundle = build_prompt(persona, treatment, question, seed)
    req = ChatRequest(bundle.system_text, bundle.user_text, config.model_id, config.temperature, seed,
                      persona, treatment, question)
    ex = gateway.ask(req)
    value = parse_choice(ex.reply_text, bundle.presented_options, question.scale)
    rec = ResponseRecord(persona.id, question.horizon_years, ex.reply_text, value, config.model_id,
                         config.temperature, seed, ex.timestamp)
    return rec, bundle


def run_sample(
    sample: SurveySample,
    scenario: Scenario | TreatmentVector | None,
    question: SurveyQuestion,
    config: ModelConfig,
    gateway: Gateway | None = None,
    fail_fast: bool = False,
    draw: int = 0,
) -> SampleRun:
    """Ask every persona once; records keep sample order whatever the completion order."""
    gw = gateway or Gateway(HttpBackend(config))
    treatment = scenario.treatment if isinstance(scenario, Scenario) else scenario

    def one(p: Persona) -> ResponseRecord:
        seed = respondent_seed(sample.master_seed, p.id, question.horizon_years, draw)
        try:
            return ask_persona(gw, p, treatment, question, config, seed)[0]
        except GatewayError as exc:
            if fail_fast:
                raise
            return ResponseRecord(p.id, question.horizon_years, "", None, config.model_id,
                                  config.temperature, seed, "", error=str(exc))

    if config.max_concurrency > 1 and len(sample) > 1:
        with ThreadPoolExecutor(config.max_concurrency) as pool:
            records = list(pool.map(one, sample.personas))
    else:
        records = [one(p) for p in sample.personas]
    errors = tuple((r.persona_id, r.error) for r in records if r.error)
    return SampleRun(tuple(records), errors)


def make_responder(
    gateway: Gateway,
    question: SurveyQuestion,
    config: ModelConfig,
    master_seed: int,
    draws: int = 1,
) -> Callable[[Persona, TreatmentVector], float | None]:
    """Response function for the effects engine.

    Each respondent keeps one derived seed (hence one option order) across
    all treatment configurations; ``draws`` > 1 averages repeated asks.
    """

    def respond(persona: Persona, t: TreatmentVector) -> float | None:
        vals = []
        for d in range(draws):
            seed = respondent_seed(master_seed, persona.id, question.horizon_years, d)
            try:
                rec, _ = ask_persona(gateway, persona, t, question, config, seed)
            except GatewayError as exc:
                log.warning("%s", exc)
                continue
            if rec.value is not None:
                vals.append(rec.value)
        return sum(vals) / len(vals) if vals else None

    return respond
