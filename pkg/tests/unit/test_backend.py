import pytest
from prompt_graph.errors import (
    AmbiguousScriptMatch,
    BackendError,
    MissingCredentials,
    UnknownModelRate,
    UnknownProfile,
    UnmatchedScriptCall,
)
from prompt_graph.models.backend import (
    BackendProfile,
    BackendRouter,
    CallInfo,
    ProfileKind,
    RetryPolicy,
    Usage,
    load_backend_config,
)
from prompt_graph.models.http_client import HTTPBackend, TokenBucket
from prompt_graph.models.pricing import PriceTable, estimate_cost
from prompt_graph.models.scripted import Script, ScriptedBackend, ScriptRule, estimate_tokens

from tests.conftest import completion_payload


USER = [{"role": "user", "content": "hola mundo"}]


class TestPricing:
    """Tests de la tabla de precios (tarifas por cada 1000 tokens)."""

    def test_estimate_cost(self):
        table = PriceTable.from_dict({"gpt-4-turbo": {"input": 0.01, "output": 0.03}})
        cost = estimate_cost(Usage(1000, 500), table, "gpt-4-turbo")
        assert cost == pytest.approx(0.025)

    def test_unknown_model(self):
        with pytest.raises(UnknownModelRate):
            PriceTable().rate("nada")

    def test_negative_rates_rejected(self):
        with pytest.raises(ValueError):
            PriceTable(rates={"m": (-1.0, 0.0)})

    def test_usage_arithmetic(self):
        total = Usage(10, 5, 0.1) + Usage(1, 2, 0.2)
        assert total.total_tokens == 18
        assert total.cost == pytest.approx(0.3)
        with pytest.raises(ValueError):
            Usage(prompt_tokens=-1)


class TestProfiles:

    def test_kind_from_string(self):
        profile = BackendProfile(id="x", kind="http", endpoint="http://localhost/v1", model="m")
        assert profile.kind is ProfileKind.HTTP
        assert "HTTP" in profile.description

    def test_http_requires_endpoint(self):
        with pytest.raises(ValueError):
            BackendProfile(id="x", kind="http")

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            BackendProfile(id="x", temperature=-0.1)
        with pytest.raises(ValueError):
            RetryPolicy(max_attempts=0)


class TestScriptedBackend:
    """
    Tests del modelo guionado.

    Cada llamada se resuelve por la regla más específica que coincide; el
    ordinal cuenta las llamadas del mismo nodo dentro de la misma pasada.
    """

    def test_most_specific_rule_wins(self, scripted_backend):
        backend = scripted_backend([
            {"node": "gate", "response": "general"},
            {"node": "gate", "pass": 2, "response": "pasada 2"},
        ])
        text, _ = backend.complete(USER, CallInfo("gate", 1))
        assert text == "general"
        text, _ = backend.complete(USER, CallInfo("gate", 2))
        assert text == "pasada 2"

    def test_ordinal_counts_retries(self, scripted_backend):
        backend = scripted_backend([
            {"node": "a", "ordinal": 1, "response": "mal"},
            {"node": "a", "ordinal": 2, "response": "bien"},
        ])
        assert backend.complete(USER, CallInfo("a", 1))[0] == "mal"
        assert backend.complete(USER, CallInfo("a", 1))[0] == "bien"
        assert backend.complete(USER, CallInfo("a", 2))[0] == "mal", \
            "El ordinal se reinicia en cada pasada"
        assert [c["ordinal"] for c in backend.call_log] == [1, 2, 1]

    def test_contains_constraint(self, scripted_backend):
        backend = scripted_backend([
            {"contains": "mundo", "response": "sí"},
            {"contains": "luna", "response": "no"},
        ])
        assert backend.complete(USER)[0] == "sí"

    def test_unmatched_and_ambiguous(self, scripted_backend):
        backend = scripted_backend([
            {"node": "a", "response": "1"},
            {"pass": 1, "response": "2"},
        ])
        with pytest.raises(UnmatchedScriptCall):
            backend.complete(USER, CallInfo("b", 2))
        with pytest.raises(AmbiguousScriptMatch):
            backend.complete(USER, CallInfo("a", 1))
        assert backend.stats.failures == 2

    def test_token_estimate(self, scripted_backend):
        backend = scripted_backend([{"response": "12345"}])
        _, usage = backend.complete(USER)
        assert usage.prompt_tokens == estimate_tokens("hola mundo") == 3
        assert usage.completion_tokens == 2

    def test_structured_response_serialized(self):
        rule = ScriptRule.from_dict({"node": "a", "response": {"replan": "no"}})
        assert rule.response == '{"replan": "no"}'
        assert rule.to_dict()["node"] == "a"

    def test_empty_messages_rejected(self, scripted_backend):
        with pytest.raises(ValueError):
            scripted_backend([{"response": "x"}]).complete([])


class TestBackendRouter:
    """Tests del router de perfiles y el cálculo de costo."""

    @pytest.fixture
    def router(self, scripted_backend):
        cheap = scripted_backend([{"response": "barato"}], profile_id="cheap")
        other = ScriptedBackend(BackendProfile(id="other", model="sin-tarifa"), Script([ScriptRule("otro")]))
        cheap.profile.model = "cheap-model"
        prices = PriceTable(rates={"cheap-model": (1.0, 2.0)})
        return BackendRouter({"cheap": cheap, "other": other}, "cheap", prices)

    def test_default_profile(self, router):
        assert router.resolve("default").profile.id == "cheap"
        assert router.has_profile("default")
        assert not router.has_profile("nada")
        with pytest.raises(UnknownProfile):
            router.resolve("nada")

    def test_cost_from_price_table(self, router):
        _, usage = router.complete(USER, "default")
        expected = (usage.prompt_tokens * 1.0 + usage.completion_tokens * 2.0) / 1000
        assert usage.cost == pytest.approx(expected)

    def test_unknown_rate_costs_zero(self, router):
        _, usage = router.complete(USER, "other")
        assert usage.cost == 0.0
        assert router.total_calls() == 1

    def test_unknown_default_rejected(self, scripted_backend):
        with pytest.raises(UnknownProfile):
            BackendRouter({"a": scripted_backend([])}, "b")

    def test_load_shipped_config(self, assets_dir, monkeypatch):
        monkeypatch.delenv("PROMPT_GRAPH_BASE_URL", raising=False)
        router = load_backend_config(script=assets_dir / "scripts" / "miniforage_demo.json")
        assert router.default_profile == "scripted"
        assert set(router.profiles) == {"scripted", "gpt-4-turbo", "gpt-3.5-turbo"}
        assert router.prices.rate("gpt-4-turbo") == (0.01, 0.03)

    def test_base_url_override(self, assets_dir, monkeypatch):
        monkeypatch.setenv("PROMPT_GRAPH_BASE_URL", "http://127.0.0.1:9/v1")
        router = load_backend_config()
        assert router.resolve("gpt-4-turbo").profile.endpoint == "http://127.0.0.1:9/v1"


class TestHTTPBackend:
    """
    Tests del cliente chat-completions contra un servidor local.

    Los 429 y 5xx se reintentan con backoff; cualquier otro 4xx falla sin
    reintentar. Las esperas se sustituyen por una función que no duerme.
    """

    @pytest.fixture(autouse=True)
    def api_key(self, monkeypatch):
        monkeypatch.setenv("PROMPT_GRAPH_API_KEY", "clave-de-prueba")

    def _backend(self, url, attempts=3):
        profile = BackendProfile(id="local", kind="http", endpoint=url, model="modelo-local",
                                 retry=RetryPolicy(max_attempts=attempts, backoff_initial=0.01))
        return HTTPBackend(profile, sleep=lambda seconds: None)

    def test_successful_call(self, stub_server):
        url, state = stub_server([(200, completion_payload("respuesta", 12, 4))])
        backend = self._backend(url)
        text, usage = backend.complete(USER)

        assert text == "respuesta"
        assert usage == Usage(12, 4)
        request = state.requests[0]
        assert request["path"] == "/v1/chat/completions"
        assert request["body"]["model"] == "modelo-local"
        assert request["body"]["messages"] == USER
        assert request["authorization"] == "Bearer clave-de-prueba"

    def test_retries_429_then_succeeds(self, stub_server):
        """Un 429 seguido de un 200 termina bien con un reintento registrado."""
        url, state = stub_server([
            (429, {"error": "rate limit"}),
            (200, completion_payload("ok")),
        ])
        backend = self._backend(url)
        text, _ = backend.complete(USER)

        assert text == "ok"
        assert len(state.requests) == 2
        assert backend.stats.retries == 1

    def test_persistent_5xx_gives_backend_error(self, stub_server):
        url, state = stub_server([(503, {"error": "caído"})])
        backend = self._backend(url, attempts=2)
        with pytest.raises(BackendError) as exc_info:
            backend.complete(USER)
        assert exc_info.value.status == 503
        assert len(state.requests) == 2

    def test_client_error_not_retried(self, stub_server):
        url, state = stub_server([(400, {"error": "mal pedido"})])
        with pytest.raises(BackendError) as exc_info:
            self._backend(url).complete(USER)
        assert exc_info.value.status == 400
        assert len(state.requests) == 1

    def test_missing_choices(self, stub_server):
        url, _ = stub_server([(200, {"nada": True})])
        with pytest.raises(BackendError):
            self._backend(url).complete(USER)

    def test_missing_credentials(self, stub_server, monkeypatch):
        monkeypatch.delenv("PROMPT_GRAPH_API_KEY", raising=False)
        monkeypatch.delenv("OPENAI_API_KEY", raising=False)
        url, state = stub_server([(200, completion_payload("x"))])
        with pytest.raises(MissingCredentials):
            self._backend(url).complete(USER)
        assert state.requests == []

    def test_unreachable_endpoint(self):
        backend = self._backend("http://127.0.0.1:9/v1", attempts=2)
        with pytest.raises(BackendError):
            backend.complete(USER)


class TestTokenBucket:
    """Tests del limitador de peticiones por perfil con un reloj simulado."""

    def test_burst_then_wait(self):
        now = [0.0]
        slept = []

        def _sleep(seconds):
            slept.append(seconds)
            now[0] += seconds

        bucket = TokenBucket(60, clock=lambda: now[0], sleep=_sleep)
        for _ in range(60):
            assert bucket.acquire() == 0.0
        waited = bucket.acquire()

        assert waited == pytest.approx(1.0), \
            "Con 60 req/min, agotada la ráfaga se espera un segundo"
        assert sum(slept) == pytest.approx(1.0)

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            TokenBucket(0)
