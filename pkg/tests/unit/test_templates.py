import pytest
from prompt_graph.errors import UnresolvedTemplateKey
from prompt_graph.store.database import Database
from prompt_graph.store.templates import (
    find_placeholders,
    leading_placeholders,
    render_value,
    resolve_template,
)


class TestRenderValue:
    """Texto canónico de los valores de la base dentro de un prompt."""

    def test_scalars(self):
        assert render_value(None) == ""
        assert render_value(True) == "true"
        assert render_value(False) == "false"
        assert render_value(7) == "7"
        assert render_value(0.5) == "0.5"
        assert render_value("texto") == "texto"

    def test_containers_are_compact_sorted_json(self):
        assert render_value({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'
        assert render_value({"ñ": "á"}) == '{"ñ":"á"}', \
            "Los caracteres no ASCII se conservan"


class TestResolveTemplate:
    """
    Tests de sustitución de placeholders `$db.ruta$`.

    `$$` es un `$` literal y un `$` suelto se deja tal cual.
    """

    @pytest.fixture
    def database(self):
        return Database({
            "environment": {"observation": "tree 2 steps to west"},
            "kb": {"WoodPerDoAction": "1 wood"},
        })

    def test_substitution(self, database):
        text = "Obs: $db.environment.observation$ | KB: $db.kb$"
        assert resolve_template(text, database) == \
            'Obs: tree 2 steps to west | KB: {"WoodPerDoAction":"1 wood"}'

    def test_dollar_escape(self, database):
        assert resolve_template("Cuesta $$5 y $ suelto", database) == "Cuesta $5 y $ suelto"
        assert resolve_template("$$db.kb$$", database) == "$db.kb$", \
            "El escape se procesa antes de reconocer placeholders"

    def test_missing_key_lenient(self, database):
        warnings = []
        result = resolve_template("[$db.subgoals.subgoal$]", database, warnings=warnings)
        assert result == "[]"
        assert warnings == ["subgoals.subgoal"]

    def test_missing_key_strict(self, database):
        with pytest.raises(UnresolvedTemplateKey) as exc_info:
            resolve_template("$db.subgoals.subgoal$", database, strict=True)
        assert exc_info.value.path == "subgoals.subgoal"

    def test_repeated_placeholder(self):
        """Cada aparición se resuelve por separado."""
        assert resolve_template("$db.a$-$db.a$", Database({"a": 1})) == "1-1"

    def test_resolving_twice_is_stable(self, database):
        text = "Obs: $db.environment.observation$ \n$db.kb.WoodPerDoAction$ y $ suelto"
        once = resolve_template(text, database)
        assert once == "Obs: tree 2 steps to west \n1 wood y $ suelto"
        assert resolve_template(once, database) == once

    def test_find_placeholders(self):
        text = "$db.a.b$ y $db.c$ pero no $$db.d$$"
        assert find_placeholders(text) == ["a.b", "c"]


class TestLeadingPlaceholders:
    """Las líneas iniciales que son solo un placeholder son material de base de datos."""

    def test_split(self):
        prompt = "$db.environment.observation$\n$db.kb$\n\nList the objects."
        paths, rest = leading_placeholders(prompt)
        assert paths == ["environment.observation", "kb"]
        assert rest == "List the objects."

    def test_no_leading_placeholders(self):
        prompt = "Observation: $db.environment.observation$"
        assert leading_placeholders(prompt) == ([], prompt)
