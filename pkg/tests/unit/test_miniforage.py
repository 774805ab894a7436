import numpy as np
import pytest
from prompt_graph.env.base import StepResult, create_environment
from prompt_graph.env.miniforage import (
    DIRECTIONS,
    MAX_VITAL,
    TABLE,
    TREE,
    MiniForage,
    Ruleset,
    WorldState,
    generate_world,
    render_observation,
)
from prompt_graph.errors import NonPositiveRepeats, UnknownAction


class TestMiniForage:
    """
    Tests del entorno MiniForage.

    Mundo determinista a partir de la semilla: el jugador empieza en (4, 4)
    mirando al sur, con un árbol fijo dos celdas al oeste.
    """

    @pytest.fixture
    def env(self):
        env = MiniForage()
        env.reset(seed=0)
        return env

    def test_same_seed_same_world(self):
        first, second = MiniForage(), MiniForage()
        assert first.reset(seed=7) == second.reset(seed=7)
        assert np.array_equal(first.state.grid, second.state.grid)
        assert np.array_equal(generate_world(7), generate_world(7))

    def test_different_seeds_place_trees_differently(self):
        first, second = MiniForage(), MiniForage()
        first.reset(seed=0)
        second.reset(seed=1)
        assert not np.array_equal(first.state.grid == TREE, second.state.grid == TREE)

    def test_step_before_reset(self):
        with pytest.raises(RuntimeError):
            MiniForage().step("noop")

    def test_storyline_place_table(self, env):
        """Un solo `do` no alcanza para la mesa; con dos de madera sí."""
        assert env.step("move_west").info["message"] == "moved west"

        result = env.step("do")
        assert result.reward == 1.0
        assert env.state.inventory["wood"] == 1

        failed = env.step("place_table")
        assert failed.info["failed"]
        assert failed.info["applied"] == 0
        assert "not enough wood" in failed.info["message"]
        assert failed.reward == 0.0

        env.step("do")
        placed = env.step("place_table")
        assert not placed.info["failed"]
        assert placed.info["new_achievements"] == ["place_table"]
        assert env.state.inventory["wood"] == 0
        assert placed.info["achievements"] == ["collect_wood", "place_table"]

    def test_wood_ledger(self, env):
        """La madera en el inventario es la juntada menos la gastada en mesas."""
        rules = env.ruleset
        collected = consumed = 0
        trajectory = [("move_west", 1), ("do", 3), ("place_table", 1), ("do", 1),
                      ("place_table", 1), ("place_table", 1), ("do", 2)]
        for action, repeats in trajectory:
            info = env.step(action, repeats).info
            if action == "do" and info["message"] == "collected wood":
                collected += info["applied"] * rules.wood_per_do
            if action == "place_table" and not info["failed"]:
                consumed += rules.table_wood
            assert env.state.inventory["wood"] == collected - consumed

        assert (collected, consumed) == (6, 4)
        assert int((env.state.grid == TABLE).sum()) == 2, "Dos mesas puestas"

    def test_repeats_applied(self, env):
        env.step("move_west")
        result = env.step("do", repeats=3)
        assert result.info["applied"] == 3
        assert env.state.inventory["wood"] == 3
        assert result.reward == 1.0, "Un logro solo se premia la primera vez"

    def test_failure_stops_repeats(self, env):
        """move_west x3 choca con el árbol tras el primer paso."""
        result = env.step("move_west", repeats=3)
        assert result.info["applied"] == 1
        assert result.info["failed"]
        assert "blocked by tree" in result.info["message"]
        assert env.state.position == (3, 4)

    def test_boundary(self):
        env = MiniForage(size=5)
        env.reset(seed=0)
        result = env.step("move_east")
        assert "boundary" in result.info["message"]

    def test_furnace_requires_table(self, env):
        result = env.step("place_furnace")
        assert "no table nearby" in result.info["message"]

    def test_vitals_decay(self, env):
        env.step("noop", repeats=20)
        assert env.state.vitals["drink"] == MAX_VITAL - 1
        assert env.state.vitals["food"] == MAX_VITAL
        assert env.state.ticks == 20
        assert env.state.step == 1, "Un paso con repeticiones cuenta como un paso"

    def test_invalid_commands(self, env):
        with pytest.raises(UnknownAction):
            env.step("fly")
        with pytest.raises(NonPositiveRepeats):
            env.step("do", repeats=0)

    def test_step_result_unpacks(self, env):
        observation, reward, done, info = env.step("noop")
        assert isinstance(observation, str)
        assert not done
        assert StepResult.from_dict(env.step("noop").to_dict()).info["action"] == "noop"

    def test_small_map_rejected(self):
        with pytest.raises(ValueError):
            MiniForage(size=4)


class TestObservation:
    """Tests del texto de observación."""

    def test_initial_observation(self):
        env = MiniForage()
        text = env.reset(seed=0)
        lines = text.splitlines()

        assert lines[0] == "== Gamestep 0 =="
        assert "  - grass: south, 1S (facing)" in lines
        assert "  - tree 2 steps to west, 2W" in lines
        assert "  - health: 9/9" in lines
        assert lines[-1] == "  - empty"

    def test_distinct_states_render_differently(self):
        grid = generate_world(0)
        states = [
            WorldState(grid=grid.copy()),
            WorldState(grid=grid.copy(), facing=DIRECTIONS["west"]),
            WorldState(grid=grid.copy(), position=(4, 3)),
            WorldState(grid=grid.copy(), step=1),
            WorldState(grid=grid.copy(), inventory={"wood": 1, "stone": 0, "sapling": 0}),
            WorldState(grid=grid.copy(), inventory={"wood": 0, "stone": 1, "sapling": 0}),
            WorldState(grid=grid.copy(), vitals={"health": 9, "food": 8, "drink": 9, "energy": 9}),
            WorldState(grid=generate_world(1)),
        ]
        texts = [render_observation(state) for state in states]
        assert len(set(texts)) == len(states)

    def test_inventory_listed(self):
        env = MiniForage()
        env.reset(seed=0)
        env.step("move_west")
        env.step("do")
        text = render_observation(env.state)
        assert text.startswith("== Gamestep 2 ==")
        assert text.splitlines()[-1] == "  - wood: 1"
        assert "  - tree: west, 1W (facing)" in text.splitlines()


class TestManual:
    """
    Tests del manual de instrucciones.

    El manual omite las cantidades de madera (mesa y madera por `do`)
    para que el agente las descubra jugando.
    """

    def test_shipped_manual_omits_quantities(self):
        env = MiniForage()
        assert env.ruleset.manual_violations(env.manual) == []

    def test_violations_detected(self):
        rules = Ruleset()
        assert rules.manual_violations("A table costs 2 wood.") == [
            "2 wood", "4 stone", "1 stone", "1 drink",
        ]

    def test_invalid_rules(self):
        with pytest.raises(ValueError):
            Ruleset(table_wood=0)
        with pytest.raises(ValueError):
            Ruleset(omitted=("sapling_cost",))

    def test_create_environment(self):
        assert isinstance(create_environment("miniforage"), MiniForage)
        with pytest.raises(ValueError):
            create_environment("atari")
        with pytest.raises(ValueError):
            create_environment("stdio:")
