import logging
import os
import threading
import time
from typing import Any, Callable, Dict, List, Optional, Tuple

import requests
from tenacity import RetryCallState, Retrying, retry_if_exception, stop_after_attempt, wait_exponential

from ..errors import BackendError, BackendTimeout, MissingCredentials
from .backend import BackendProfile, CallInfo, Message, ModelBackend, Usage
from .scripted import estimate_tokens

logger = logging.getLogger(__name__)

API_KEY_ENV = "PROMPT_GRAPH_API_KEY"
FALLBACK_API_KEY_ENV = "OPENAI_API_KEY"


class TokenBucket:
    """Limitador por perfil: `rate_per_minute` peticiones con ráfaga igual a la tasa."""

    def __init__(self, rate_per_minute: int,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate_per_minute <= 0:
            raise ValueError("rate_per_minute debe ser positivo")
        self._capacity = float(rate_per_minute)
        self._tokens = float(rate_per_minute)
        self._refill_per_second = rate_per_minute / 60.0
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    @property
    def available(self) -> float:
        with self._lock:
            self._refill()
            return self._tokens

    def _refill(self) -> None:
        now = self._clock()
        self._tokens = min(self._capacity, self._tokens + (now - self._last) * self._refill_per_second)
        self._last = now

    def acquire(self) -> float:
        """Consume un token; devuelve los segundos esperados."""
        waited = 0.0
        while True:
            with self._lock:
                self._refill()
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return waited
                delay = (1.0 - self._tokens) / self._refill_per_second
            self._sleep(delay)
            waited += delay


class _TransientFailure(Exception):
    def __init__(self, status: Optional[int], body: Any, timeout: bool = False):
        super().__init__(f"status={status}")
        self.status = status
        self.body = body
        self.timeout = timeout


def _is_transient(exc: BaseException) -> bool:
    return isinstance(exc, _TransientFailure)


def resolve_api_key() -> str:
    key = os.environ.get(API_KEY_ENV) or os.environ.get(FALLBACK_API_KEY_ENV)
    if not key:
        raise MissingCredentials(API_KEY_ENV)
    return key


class HTTPBackend(ModelBackend):
    """
    Cliente de chat-completions compatible con OpenAI.

    Reintenta errores de transporte, 429 y 5xx con backoff exponencial
    (tenacity); cualquier otro 4xx falla de inmediato. La API key sale
    solo del entorno.
    """

    def __init__(self, profile: BackendProfile, session: Optional[requests.Session] = None,
                 sleep: Callable[[float], None] = time.sleep):
        super().__init__(profile)
        self._session = session or requests.Session()
        self._sleep = sleep
        self._bucket = TokenBucket(profile.requests_per_minute) if profile.requests_per_minute else None

    @property
    def url(self) -> str:
        return self._profile.endpoint.rstrip("/") + "/chat/completions"

    def _payload(self, messages: List[Message]) -> Dict[str, Any]:
        return {
            "model": self._profile.model,
            "messages": messages,
            "temperature": self._profile.temperature,
            "max_tokens": self._profile.max_tokens,
        }

    def _post_once(self, headers: Dict[str, str], payload: Dict[str, Any]) -> Dict[str, Any]:
        if self._bucket is not None:
            self._bucket.acquire()
        try:
            response = self._session.post(self.url, json=payload, headers=headers,
                                          timeout=self._profile.timeout)
        except requests.Timeout as exc:
            raise _TransientFailure(None, str(exc), timeout=True) from exc
        except requests.RequestException as exc:
            raise _TransientFailure(None, str(exc)) from exc

        if response.status_code == 429 or response.status_code >= 500:
            raise _TransientFailure(response.status_code, response.text)
        if response.status_code >= 400:
            raise BackendError(response.status_code, response.text)
        try:
            return response.json()
        except ValueError as exc:
            raise BackendError(response.status_code, f"Respuesta no JSON: {response.text[:200]}") from exc

    def _before_sleep(self, state: RetryCallState) -> None:
        self._stats.retries += 1
        exc = state.outcome.exception() if state.outcome else None
        logger.warning("Fallo transitorio del backend '%s' (%s); reintento %d",
                       self._profile.id, exc, state.attempt_number)

    def _complete(self, messages: List[Message], call: CallInfo) -> Tuple[str, Usage]:
        headers = {
            "Authorization": f"Bearer {resolve_api_key()}",
            "Content-Type": "application/json",
        }
        payload = self._payload(messages)
        policy = self._profile.retry
        retrying = Retrying(
            stop=stop_after_attempt(policy.max_attempts),
            wait=wait_exponential(multiplier=policy.backoff_initial, max=policy.backoff_max),
            retry=retry_if_exception(_is_transient),
            before_sleep=self._before_sleep,
            sleep=self._sleep,
            reraise=True,
        )
        try:
            body = retrying(self._post_once, headers, payload)
        except _TransientFailure as exc:
            if exc.timeout:
                raise BackendTimeout(exc.body) from exc
            raise BackendError(exc.status, exc.body) from exc

        try:
            text = body["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(200, f"Respuesta sin choices: {str(body)[:200]}") from exc

        reported = body.get("usage") or {}
        prompt_text = "\n".join(m["content"] for m in messages)
        usage = Usage(
            prompt_tokens=int(reported.get("prompt_tokens", estimate_tokens(prompt_text))),
            completion_tokens=int(reported.get("completion_tokens", estimate_tokens(text))),
        )
        logger.debug("HTTP %s: nodo=%s tokens=%d", self._profile.model, call.node_id, usage.total_tokens)
        return text, usage

    def close(self) -> None:
        self._session.close()
