import random
from collections import Counter

import pytest
from prompt_graph.agent.patterns import (
    ActionCommand,
    GateDecision,
    active_skill,
    build_feedback_context,
    conditional_branch,
    emit_action,
    feedback_due,
    gate_branch,
    normalize_action_name,
)
from prompt_graph.config import AgentSettings
from prompt_graph.core.base import DynamicOp, NodeDef, OpKind
from prompt_graph.core.graph import Graph
from prompt_graph.errors import (
    MisconfiguredNodeSet,
    NonPositiveRepeats,
    SchemaViolation,
    UnknownAction,
)
from prompt_graph.store.database import Database
from prompt_graph.store.history import StepSummary, append_step


NO_UPDATE = {
    "unexpected_encounters": "no",
    "mistake": "no",
    "correction_planned": "no",
    "confused": "no",
    "top_subgoal_completed": "no",
    "top_subgoal_changed": "no",
    "replan": "no",
}


class TestGate:
    """
    Tests del gate.

    Si ninguno de los campos de actualización es yes, planner y KB se
    retiran de la pasada; cualquier yes los mantiene.
    """

    @pytest.fixture
    def graph(self):
        graph = Graph()
        for node_id in ("gate", "subgoals", "kb-add"):
            graph.add_node(NodeDef(id=node_id, prompt=node_id))
        return graph

    @pytest.fixture
    def settings(self):
        return AgentSettings(planner_nodes=["subgoals"], kb_nodes=["kb-add"])

    def test_parse_decision(self):
        decision = GateDecision.from_answer({**NO_UPDATE, "mistake": "Yes, wrong direction"})
        assert decision.mistake is True
        assert decision.to_dict()["replan"] is False

    def test_missing_field(self):
        answer = dict(NO_UPDATE)
        del answer["replan"]
        with pytest.raises(SchemaViolation):
            GateDecision.from_answer(answer)

    def test_all_no_skips_planner_and_kb(self, graph, settings):
        ops = gate_branch(GateDecision.from_answer(NO_UPDATE), graph, settings)
        assert ops == [DynamicOp.remove_node("subgoals"), DynamicOp.remove_node("kb-add")]

    @pytest.mark.parametrize("field_name", [
        "unexpected_encounters", "mistake", "confused",
        "top_subgoal_completed", "top_subgoal_changed", "replan",
    ])
    def test_any_update_keeps_nodes(self, graph, settings, field_name):
        decision = GateDecision.from_answer({**NO_UPDATE, field_name: "yes"})
        assert gate_branch(decision, graph, settings) == []

    def test_correction_planned_alone_still_skips(self, graph, settings):
        """Una corrección ya planificada no obliga a replanificar."""
        decision = GateDecision.from_answer({**NO_UPDATE, "correction_planned": "yes"})
        assert len(gate_branch(decision, graph, settings)) == 2

    def test_misconfigured_node_set(self, graph):
        settings = AgentSettings(planner_nodes=["no_existe"])
        with pytest.raises(MisconfiguredNodeSet):
            gate_branch(GateDecision(), graph, settings)

    def test_non_boolean_field_rejected(self):
        with pytest.raises(ValueError):
            GateDecision(mistake="yes")


class TestConditionalBranch:

    def test_yes_and_no(self):
        yes = NodeDef(id="n-plus", prompt="Cede el paso")
        no = NodeDef(id="n-minus", prompt="Mantén la velocidad")

        op = conditional_branch("yes, intends to cross", yes, no, after="crossing-check")
        assert op.kind is OpKind.ADD_NODE
        assert op.target == "n-plus"
        assert op.payload.deps == ("crossing-check",)
        assert op.payload.temporary

        assert conditional_branch("no", yes, no).target == "n-minus"


def _brute_force_due(sequence, index, every):
    skill = sequence[index]
    count = sum(1 for s in sequence[:index + 1] if s == skill)
    return count % every == 0


class TestFeedbackCadence:
    """
    Tests de la cadencia del feedback por skill.

    El feedback se dispara cuando los pasos acumulados del skill activo
    son múltiplo de 3, sin importar cuántos pasos de otros skills haya
    en el medio.
    """

    def _database(self, skills):
        return Database({"skills": {name: {} for name in skills}})

    def test_interleaved_sequence(self):
        """A,B,A,B,A,B: A llega a 3 pasos en el paso global 5."""
        database = self._database("AB")
        fired = []
        for step, skill in enumerate("ABABAB", start=1):
            if feedback_due(database, skill, step):
                fired.append((step, skill))
            append_step(database, StepSummary(step=step, skill=skill))
        assert fired == [(5, "A"), (6, "B")]

    def test_current_step_counted_once(self):
        """Da igual que el paso actual ya esté en el historial o no."""
        database = self._database("A")
        append_step(database, StepSummary(step=1, skill="A"))
        append_step(database, StepSummary(step=2, skill="A"))
        assert feedback_due(database, "A", 3)
        append_step(database, StepSummary(step=3, skill="A"))
        assert feedback_due(database, "A", 3)

    @pytest.mark.slow
    def test_random_interleavings_match_counter(self):
        rng = random.Random(3)
        fired = Counter()
        for _ in range(10000):
            length = rng.randint(1, 10)
            sequence = [rng.choice("ABC") for _ in range(length)]
            history = []
            for index, skill in enumerate(sequence):
                database = Database({"history": list(history)})
                expected = _brute_force_due(sequence, index, 3)
                assert feedback_due(database, skill, index + 1) == expected, \
                    f"Secuencia {''.join(sequence)} en el paso {index + 1}"
                fired[expected] += 1
                history.append(StepSummary(step=index + 1, skill=skill).to_dict())
        assert fired[True] > 0 and fired[False] > 0

    def test_other_cadence(self):
        database = self._database("A")
        assert feedback_due(database, "A", 1, every=1)
        assert not feedback_due(database, "A", 1, every=2)

    def test_context_and_active_skill(self):
        database = self._database("A")
        append_step(database, StepSummary(step=1, s_obs="árbol", skill="A"))
        assert active_skill(database) is None
        database.set("active_skill", "A")
        assert active_skill(database) == "A"
        assert build_feedback_context(database, "A").startswith("Step 1:\nObservation: árbol")


class TestActionEmission:
    """
    Tests de la emisión de acciones con repetición.

    El nombre se normaliza, debe pertenecer al conjunto de acciones del
    entorno y las repeticiones se recortan al máximo configurado.
    """

    ACTIONS = ("noop", "move_west", "do", "place_table")

    def test_normalize(self):
        assert normalize_action_name("  Move West ") == "move_west"
        assert normalize_action_name("`place-table`.") == "place_table"

    def test_emit(self):
        command = emit_action({"action": "Move West", "repeats": "3 steps", "hazard": "no"}, self.ACTIONS)
        assert command == ActionCommand("move_west", 3, False)
        assert str(command) == "move_west 3 step(s)"

    def test_repeats_capped(self):
        command = emit_action({"action": "do", "repeats": 20}, self.ACTIONS, max_repeats=9)
        assert command.repeats == 9

    def test_unknown_action(self):
        with pytest.raises(UnknownAction):
            emit_action({"action": "fly"}, self.ACTIONS)

    def test_non_positive_repeats(self):
        with pytest.raises(NonPositiveRepeats):
            emit_action({"action": "do", "repeats": 0}, self.ACTIONS)
        with pytest.raises(NonPositiveRepeats):
            ActionCommand("do", repeats=-1)

    def test_bad_shapes(self):
        with pytest.raises(SchemaViolation):
            emit_action("do", self.ACTIONS)
        with pytest.raises(SchemaViolation):
            emit_action({"action": "do", "repeats": "muchas"}, self.ACTIONS)

    def test_fractional_repeats_rejected(self):
        with pytest.raises(SchemaViolation):
            emit_action({"action": "do", "repeats": 2.5}, self.ACTIONS)
        with pytest.raises(SchemaViolation):
            emit_action({"action": "do", "repeats": "2.5"}, self.ACTIONS)
        assert emit_action({"action": "do", "repeats": 2.0}, self.ACTIONS).repeats == 2

    def test_unparseable_hazard_rejected(self):
        with pytest.raises(SchemaViolation) as exc_info:
            emit_action({"action": "do", "hazard": "tal vez"}, self.ACTIONS)
        assert "hazard" in exc_info.value.message

    def test_hazard_flag(self):
        command = emit_action({"action": "do", "hazard": "yes, zombie nearby"}, self.ACTIONS)
        assert command.hazard
        assert ActionCommand.from_dict(command.to_dict()) == command
