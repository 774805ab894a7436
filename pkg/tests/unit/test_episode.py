import pytest
from prompt_graph.agent.episode import EpisodeResult, run_episode
from prompt_graph.config import AgentSettings, RuntimeLimits, Settings
from prompt_graph.core.base import NodeDef
from prompt_graph.core.graph import Graph
from prompt_graph.env.base import Environment, StepResult
from prompt_graph.env.miniforage import MiniForage
from prompt_graph.errors import AfterQueryExhausted, EpisodeError, NodeEvaluationFailed
from prompt_graph.store.database import Database
from prompt_graph.store.trace import import_trace


class BrokenEnvironment(Environment):
    """Entorno que falla en el segundo paso."""

    def __init__(self):
        self.calls = 0

    @property
    def actions(self):
        return ["noop"]

    @property
    def manual(self):
        return "Solo existe noop."

    def reset(self, seed=0):
        return "nada"

    def step(self, action, repeats=1):
        self.calls += 1
        if self.calls == 2:
            raise OSError("tubería rota")
        return StepResult("nada")


class TestRunEpisode:
    """
    Tests del bucle de episodio.

    Grafo mínimo de dos nodos: `obs` resume la observación y `actor-final`
    emite el comando. Una pasada por paso del entorno.
    """

    @pytest.fixture
    def graph(self):
        graph = Graph(name="mini")
        graph.add_node(NodeDef(id="obs", prompt="Resume:\n$db.environment.observation$"))
        graph.add_node(NodeDef(id="actor-final", prompt="Elige la acción", deps=("obs",),
                               after_query="action_emit"))
        return graph

    @pytest.fixture
    def settings(self):
        return Settings(
            limits=RuntimeLimits(max_retries=2),
            agent=AgentSettings(obs_summary_nodes=["obs"]),
        )

    @pytest.fixture
    def backend(self, scripted_backend):
        return scripted_backend([
            {"node": "obs", "response": "árbol al oeste"},
            {"node": "actor-final", "pass": 1, "response": {"action": "move_west"}},
            {"node": "actor-final", "pass": 2, "response": {"action": "do", "repeats": 2}},
            {"node": "actor-final", "response": {"action": "noop"}},
        ])

    def test_three_steps(self, graph, settings, backend):
        database = Database()
        result = run_episode(graph, MiniForage(), backend, database=database, settings=settings,
                             seed=0, max_steps=3)

        assert result.steps == 3
        assert [str(a) for a in result.actions] == ["move_west 1 step(s)", "do 2 step(s)", "noop 1 step(s)"]
        assert result.total_reward == 1.0
        assert result.achievements == ["collect_wood"]
        assert len(result.traces) == 3
        assert result.model_calls == 6
        assert result.usage.total_tokens == backend.stats.total_tokens

        assert [h.step for h in result.history] == [1, 2, 3]
        assert result.history[0].s_obs == "árbol al oeste"
        assert result.history[1].s_action["applied"] == 2
        assert result.history[1].s_action["reward"] == 1.0

    def test_observation_and_manual_written(self, graph, settings, backend):
        database = Database()
        run_episode(graph, MiniForage(), backend, database=database, settings=settings, max_steps=2)

        assert database.get("environment.step") == 2
        assert database.get("environment.last_action") == "move_west 1 step(s)"
        assert database.get("environment.observation").startswith("== Gamestep 1 ==")
        assert database.get("instruction_manual").startswith("MiniForage instruction manual")
        assert "place_table" in database.get("allowed_actions")

    def test_prompt_sees_observation(self, graph, settings, scripted_backend):
        backend = scripted_backend([
            {"node": "obs", "contains": "== Gamestep 0 ==", "response": "vi el paso 0"},
            {"node": "obs", "response": "otro paso"},
            {"node": "actor-final", "response": {"action": "noop"}},
        ])
        result = run_episode(graph, MiniForage(), backend, settings=settings, max_steps=2)
        assert [h.s_obs for h in result.history] == ["vi el paso 0", "otro paso"]

    def test_zero_steps(self, graph, settings, backend, tmp_path):
        trace_path = tmp_path / "trace.jsonl"
        result = run_episode(graph, MiniForage(), backend, settings=settings, max_steps=0,
                             trace_path=trace_path)
        assert result.steps == 0
        assert backend.stats.calls == 0
        assert import_trace(trace_path) == []

    def test_negative_steps(self, graph, settings, backend):
        with pytest.raises(ValueError):
            run_episode(graph, MiniForage(), backend, settings=settings, max_steps=-1)

    def test_trace_file(self, graph, settings, backend, tmp_path):
        trace_path = tmp_path / "trace.jsonl"
        result = run_episode(graph, MiniForage(), backend, settings=settings, max_steps=2,
                             trace_path=trace_path)
        traces = import_trace(trace_path)
        assert [t.pass_index for t in traces] == [1, 2]
        assert traces[1].order == result.traces[1].order

    def test_node_failure_keeps_partial_result(self, graph, settings, scripted_backend):
        """El actor nunca da una acción válida en el paso 2: el episodio se corta ahí."""
        backend = scripted_backend([
            {"node": "obs", "response": "ok"},
            {"node": "actor-final", "pass": 1, "response": {"action": "noop"}},
            {"node": "actor-final", "response": {"action": "volar"}},
        ])
        with pytest.raises(NodeEvaluationFailed) as exc_info:
            run_episode(graph, MiniForage(), backend, settings=settings, max_steps=5)

        exc = exc_info.value
        assert exc.node_id == "actor-final"
        assert isinstance(exc.cause, AfterQueryExhausted)
        partial = exc.partial_result
        assert isinstance(partial, EpisodeResult)
        assert partial.steps == 1
        assert len(partial.traces) == 2
        assert partial.failure.startswith("actor-final")

    def test_environment_failure(self, graph, settings, scripted_backend):
        backend = scripted_backend([
            {"node": "obs", "response": "nada"},
            {"node": "actor-final", "response": {"action": "noop"}},
        ])
        with pytest.raises(EpisodeError) as exc_info:
            run_episode(graph, BrokenEnvironment(), backend, settings=settings, max_steps=3)
        assert exc_info.value.partial_result.steps == 1
        assert isinstance(exc_info.value.cause, OSError)

    def test_missing_action_node(self, settings, scripted_backend):
        graph = Graph()
        graph.add_node(NodeDef(id="obs", prompt="x"))
        backend = scripted_backend([{"response": "nada"}])
        with pytest.raises(EpisodeError):
            run_episode(graph, MiniForage(), backend, settings=settings, max_steps=1)
