import random

import pytest
from prompt_graph.core.base import DynamicOp, NodeDef
from prompt_graph.core.graph import Graph
from prompt_graph.core.traversal import run_pass
from prompt_graph.errors import NodeEvaluationFailed
from prompt_graph.models.backend import Usage
from prompt_graph.runtime.compose import ComposedPrompt, NodeOutput
from prompt_graph.runtime.evaluator import NodeEvaluation
from prompt_graph.store.database import Database


class FakeRuntime:
    """
    Runtime de prueba: no consulta ningún modelo.

    `ops` asocia un id de nodo con las DynamicOps que devuelve al
    evaluarse; `fail` es el id de un nodo que lanza al evaluarse.
    """

    def __init__(self, ops=None, fail=None):
        self.ops = ops or {}
        self.fail = fail
        self.calls = []

    def evaluate_node(self, node, graph, database, dep_outputs, pass_index=0, step=None):
        self.calls.append((node.id, [o.node_id for o in dep_outputs]))
        if node.id == self.fail:
            raise RuntimeError(f"fallo en {node.id}")
        evaluation = NodeEvaluation(node.id, composed=ComposedPrompt(node.id), attempts=1,
                                    usage=Usage(3, 2))
        evaluation.output = NodeOutput(node.id, f"salida {node.id}", f"salida {node.id}", 0, Usage(3, 2))
        evaluation.ops = list(self.ops.get(node.id, []))
        return evaluation


def _node(node_id, *deps):
    return NodeDef(id=node_id, prompt=node_id, deps=deps)


class TestRunPass:
    """
    Tests del recorrido de una pasada.

    Cada nodo se evalúa una vez, después de todas sus dependencias
    vigentes, y las operaciones dinámicas se aplican antes de liberar a
    los sucesores del nodo que las emitió.
    """

    @pytest.fixture
    def graph(self):
        graph = Graph(name="agente")
        graph.add_node(_node("obs"))
        graph.add_node(_node("gate", "obs"))
        graph.add_node(_node("subgoal", "gate"))
        graph.add_node(_node("kb-add", "gate"))
        graph.add_node(_node("actor", "subgoal", "kb-add"))
        return graph

    def test_order_and_trace(self, graph):
        trace = run_pass(graph, FakeRuntime(), Database(), pass_index=4, step=4)

        assert trace.order == ["obs", "gate", "kb-add", "subgoal", "actor"], \
            "Los hermanos listos a la vez se evalúan por id"
        assert trace.pass_index == 4 and trace.step == 4
        assert trace.total_tokens == 25
        assert not trace.aborted

    def test_dependency_outputs_follow_declaration_order(self, graph):
        runtime = FakeRuntime()
        run_pass(graph, runtime, Database())
        deps = dict(runtime.calls)
        assert deps["actor"] == ["subgoal", "kb-add"], \
            "Las salidas llegan en el orden de `deps`"

    def test_gate_skip_removes_nodes(self, graph):
        """Retirar nodos en la pasada los omite y sus sucesores igual se evalúan."""
        runtime = FakeRuntime(ops={"gate": [DynamicOp.remove_node("subgoal"), DynamicOp.remove_node("kb-add")]})
        trace = run_pass(graph, runtime, Database())

        assert trace.order == ["obs", "gate", "actor"]
        assert dict(runtime.calls)["actor"] == [], \
            "Una dependencia retirada no aporta salida"
        assert all(result.accepted for result in trace.entry("gate").ops)
        assert graph.node_ids() == ["obs", "gate", "subgoal", "kb-add", "actor"], \
            "La pasada siguiente vuelve a tener el grafo completo"

    def test_added_node_runs_after_emitter(self, graph):
        """Un nodo agregado con dep en el emisor se evalúa antes que lo que espera por él."""
        runtime = FakeRuntime(ops={"subgoal": [
            DynamicOp.add_node(_node("feedback", "subgoal")),
            DynamicOp.add_edge("feedback", "actor"),
        ]})
        trace = run_pass(graph, runtime, Database())

        assert trace.order.index("feedback") > trace.order.index("subgoal")
        assert trace.order.index("feedback") < trace.order.index("actor")
        assert dict(runtime.calls)["actor"] == ["subgoal", "kb-add", "feedback"]
        assert not graph.has_node("feedback")

    def test_rejected_ops_recorded(self, graph):
        runtime = FakeRuntime(ops={"gate": [DynamicOp.remove_node("obs")]})
        trace = run_pass(graph, runtime, Database())

        result = trace.entry("gate").ops[0]
        assert not result.accepted
        assert result.reason.startswith("RejectedEvaluatedTarget")
        assert len(trace.order) == 5

    def test_failure_aborts_and_reverts(self, graph):
        """
        Un nodo que falla aborta la pasada.

        La excepción lleva la traza parcial y el grafo vuelve a su estado
        permanente.
        """
        runtime = FakeRuntime(ops={"obs": [DynamicOp.add_node(_node("zz_extra", "obs"))]}, fail="gate")
        with pytest.raises(NodeEvaluationFailed) as exc_info:
            run_pass(graph, runtime, Database(), pass_index=2)

        trace = exc_info.value.trace
        assert exc_info.value.node_id == "gate"
        assert trace.aborted_at == "gate"
        assert trace.order == ["obs"]
        assert trace.entries[-1].failed
        assert not graph.in_pass
        assert not graph.has_node("zz_extra")


class TestRandomDags:
    """
    Oráculo por posición de aristas sobre DAGs aleatorios.

    Para cada arista efectiva (u, v) de la pasada, u debe aparecer antes
    que v en el orden de evaluación, y cada nodo no omitido se evalúa
    exactamente una vez.
    """

    def _random_graph(self, rng):
        size = rng.randint(1, 12)
        graph = Graph(name="aleatorio", max_dynamic_nodes=64)
        for index in range(size):
            candidates = [f"n{j}" for j in range(index)]
            deps = rng.sample(candidates, k=min(len(candidates), rng.randint(0, 3)))
            graph.add_node(_node(f"n{index}", *deps))
        return graph

    def _random_ops(self, rng, graph):
        ids = graph.node_ids()
        ops = {}
        for emitter in ids:
            chosen = []
            for number in range(rng.randint(0, 2)):
                kind = rng.random()
                if kind < 0.35:
                    chosen.append(DynamicOp.add_node(_node(f"t_{emitter}_{number}", emitter)))
                elif kind < 0.6 and len(ids) > 1:
                    chosen.append(DynamicOp.add_edge(*rng.sample(ids, 2)))
                elif kind < 0.8:
                    chosen.append(DynamicOp.remove_node(rng.choice(ids)))
                elif len(ids) > 1:
                    chosen.append(DynamicOp.remove_edge(*rng.sample(ids, 2)))
            ops[emitter] = chosen
        return ops

    @pytest.mark.slow
    def test_thousand_random_dags(self):
        rng = random.Random(2024)
        for _ in range(1000):
            graph = self._random_graph(rng)
            runtime = CheckingRuntime(ops=self._random_ops(rng, graph))
            trace = run_pass(graph, runtime, Database())

            order = trace.order
            assert len(order) == len(set(order)), "Ningún nodo se evalúa dos veces"
            assert runtime.violations == [], \
                f"Aristas vivas con el origen sin evaluar: {runtime.violations}"
            position = {node_id: index for index, node_id in enumerate(order)}
            for node_id, dep_ids in runtime.calls:
                for dep in dep_ids:
                    assert position[dep] < position[node_id]
            assert not graph.in_pass and graph.temp_nodes == {}


class CheckingRuntime(FakeRuntime):
    """Anota cada arista viva (u, v) cuyo origen no estaba evaluado al evaluar v."""

    def __init__(self, ops=None):
        super().__init__(ops=ops)
        self.violations = []

    def evaluate_node(self, node, graph, database, dep_outputs, pass_index=0, step=None):
        evaluated = graph.evaluated_this_pass
        for pred in graph.predecessors(node.id):
            if pred not in evaluated:
                self.violations.append((pred, node.id))
        return super().evaluate_node(node, graph, database, dep_outputs, pass_index, step)
