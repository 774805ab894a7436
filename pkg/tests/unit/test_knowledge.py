import pytest
from prompt_graph.agent.knowledge import (
    KnowledgeState,
    SkillEntry,
    kb_commit,
    select_skill,
    unknown_merge,
)
from prompt_graph.errors import SchemaViolation
from prompt_graph.store.database import Database


ALL_YES = {
    "discovered": "yes",
    "general": "yes",
    "unknown": "yes",
    "concrete_and_precise": "yes",
    "solid": "yes",
}


class TestKnowledgeBase:
    """
    Tests del ciclo información desconocida -> base de conocimiento.

    Un item pasa a la KB solo cuando los cinco flags son yes; una vez en
    la KB nunca se sobreescribe.
    """

    @pytest.fixture
    def state(self):
        return KnowledgeState(
            unknown={"WoodPerDoAction": {"info": "cuánta madera da un Do"},
                     "TableWoodConsumption": {"info": "madera para la mesa"}},
            kb={},
        )

    def test_commit_moves_item(self, state):
        answer = {"WoodPerDoAction": {**ALL_YES, "discovery_short": "1 wood per Do action"}}
        new_state = kb_commit(answer, state)

        assert new_state.kb == {"WoodPerDoAction": "1 wood per Do action"}
        assert "WoodPerDoAction" not in new_state.unknown
        assert "TableWoodConsumption" in new_state.unknown
        assert new_state.is_consistent
        assert state.kb == {}, "El estado original no se modifica"

    def test_any_no_flag_blocks_commit(self, state):
        answer = {"WoodPerDoAction": {**ALL_YES, "solid": "no", "discovery_short": "1 wood"}}
        assert kb_commit(answer, state).kb == {}

    def test_missing_flag_blocks_commit(self, state):
        flags = dict(ALL_YES)
        del flags["general"]
        answer = {"WoodPerDoAction": {**flags, "discovery_short": "1 wood"}}
        assert kb_commit(answer, state).kb == {}

    def test_na_value_blocks_commit(self, state):
        answer = {"WoodPerDoAction": {**ALL_YES, "discovery_short": "NA"}}
        assert kb_commit(answer, state).kb == {}

    def test_existing_entry_not_overwritten(self, state):
        state.kb["WoodPerDoAction"] = "1 wood per Do action"
        answer = {"WoodPerDoAction": {**ALL_YES, "discovery_short": "2 wood"}}
        assert kb_commit(answer, state).kb["WoodPerDoAction"] == "1 wood per Do action"

    def test_invalid_flag_value(self, state):
        answer = {"WoodPerDoAction": {**ALL_YES, "solid": "quizás"}}
        with pytest.raises(SchemaViolation):
            kb_commit(answer, state)

    def test_answer_must_be_map(self, state):
        with pytest.raises(SchemaViolation):
            kb_commit(["WoodPerDoAction"], state)
        with pytest.raises(SchemaViolation):
            kb_commit({"WoodPerDoAction": "yes"}, state)

    def test_database_roundtrip(self, state):
        database = Database()
        state.to_database(database)
        assert KnowledgeState.from_database(database).to_dict() == state.to_dict()

    def test_empty_kb_value_rejected(self):
        with pytest.raises(ValueError):
            KnowledgeState(kb={"x": "  "})


class TestUnknownMerge:
    """Tests de la incorporación de información desconocida nueva."""

    def test_new_items_added(self):
        state = KnowledgeState()
        answer = {"SaplingUse": {"info": "para qué sirve", "novel": "yes", "relevant": "yes"}}
        assert "SaplingUse" in unknown_merge(answer, state).unknown

    def test_filtered_items(self):
        state = KnowledgeState(kb={"WoodPerDoAction": "1 wood"})
        answer = {
            "Irrelevant": {"novel": "yes", "relevant": "no"},
            "Old": {"novel": "no"},
            "WoodPerDoAction": {"info": "ya está en la KB"},
        }
        assert unknown_merge(answer, state).unknown == {}, \
            "Items no novedosos, irrelevantes o ya conocidos no se agregan"

    def test_flags_default_to_yes(self):
        merged = unknown_merge({"X": {"info": "sin flags"}}, KnowledgeState())
        assert merged.unknown == {"X": {"info": "sin flags"}}


class TestSkills:
    """Tests de la biblioteca de skills: recuperación por nombre exacto o creación."""

    def test_from_answer_list(self):
        entry = SkillEntry.from_answer({"collect_wood": ["Collect wood", "count", "Face a tree, Do"]})
        assert entry.name == "collect_wood"
        assert entry.guide == "Face a tree, Do"

    def test_from_answer_requires_single_skill(self):
        with pytest.raises(SchemaViolation):
            SkillEntry.from_answer({"a": "x", "b": "y"})

    def test_select_creates_then_retrieves(self):
        library, skill, created = select_skill({}, SkillEntry("collect_wood", "Collect wood"))
        assert created
        assert library == {"collect_wood": {"description": "Collect wood", "parameters": "", "guide": ""}}

        library, skill, created = select_skill(library, SkillEntry("collect_wood", "otra descripción"))
        assert not created
        assert skill.description == "Collect wood", \
            "Un skill existente se recupera sin cambios"

    def test_invalid_skill_format(self):
        with pytest.raises(SchemaViolation):
            SkillEntry.from_dict("x", 42)
