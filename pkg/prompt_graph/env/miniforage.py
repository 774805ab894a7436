import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from ..config import ASSETS_DIR
from ..errors import NonPositiveRepeats, UnknownAction
from .base import Environment, StepResult

logger = logging.getLogger(__name__)

MATERIALS = ("grass", "tree", "water", "stone", "table", "furnace")
GRASS, TREE, WATER, STONE, TABLE, FURNACE = range(len(MATERIALS))

ACTIONS = (
    "noop",
    "move_west",
    "move_east",
    "move_north",
    "move_south",
    "do",
    "sleep",
    "place_table",
    "place_furnace",
)

# (dx, dy); y crece hacia el sur
DIRECTIONS = {
    "north": (0, -1),
    "east": (1, 0),
    "south": (0, 1),
    "west": (-1, 0),
}
_LETTERS = {"north": "N", "south": "S", "west": "W", "east": "E"}

VITALS = ("health", "food", "drink", "energy")
MAX_VITAL = 9

# Ticks entre cada descenso de vital
DECAY_EVERY = {"food": 25, "drink": 20, "energy": 30}

START = (4, 4)
START_TREE = (2, 4)


@dataclass(frozen=True)
class Ruleset:
    table_wood: int = 2
    furnace_stone: int = 4
    wood_per_do: int = 1
    stone_per_do: int = 1
    drink_per_do: int = 1
    omitted: Tuple[str, ...] = ("table_wood", "wood_per_do")

    UNITS = {
        "table_wood": "wood",
        "furnace_stone": "stone",
        "wood_per_do": "wood",
        "stone_per_do": "stone",
        "drink_per_do": "drink",
    }

    def __post_init__(self):
        for f in fields(self):
            if f.name != "omitted" and getattr(self, f.name) < 1:
                raise ValueError(f"La regla '{f.name}' debe ser positiva")
        unknown = set(self.omitted) - set(self.UNITS)
        if unknown:
            raise ValueError(f"Campos omitidos desconocidos: {sorted(unknown)}")

    def _phrase(self, name: str) -> str:
        return f"{getattr(self, name)} {self.UNITS[name]}"

    def omitted_phrases(self) -> List[str]:
        return [self._phrase(name) for name in self.omitted]

    def stated_phrases(self) -> List[str]:
        return [self._phrase(name) for name in self.UNITS if name not in self.omitted]

    def manual_violations(self, manual: str) -> List[str]:
        """Cantidades omitidas que aparecen y cantidades declaradas que faltan ([] si el manual es correcto)."""
        lowered = manual.lower()
        leaked = [phrase for phrase in self.omitted_phrases() if phrase in lowered]
        missing = [phrase for phrase in self.stated_phrases() if phrase not in lowered]
        return leaked + missing


@dataclass
class WorldState:
    grid: np.ndarray
    position: Tuple[int, int] = START
    facing: Tuple[int, int] = DIRECTIONS["south"]
    inventory: Dict[str, int] = field(default_factory=lambda: {"wood": 0, "stone": 0, "sapling": 0})
    vitals: Dict[str, int] = field(default_factory=lambda: {v: MAX_VITAL for v in VITALS})
    step: int = 0
    ticks: int = 0
    achievements: Set[str] = field(default_factory=set)

    def __post_init__(self):
        height, width = self.grid.shape
        x, y = self.position
        if not (0 <= x < width and 0 <= y < height):
            raise ValueError(f"Posición fuera del mapa: {self.position}")
        if any(not 0 <= value <= MAX_VITAL for value in self.vitals.values()):
            raise ValueError("Los vitales deben estar entre 0 y 9")
        if any(count < 0 for count in self.inventory.values()):
            raise ValueError("El inventario no puede tener cantidades negativas")

    @property
    def size(self) -> Tuple[int, int]:
        height, width = self.grid.shape
        return width, height

    def in_bounds(self, x: int, y: int) -> bool:
        width, height = self.size
        return 0 <= x < width and 0 <= y < height

    def material(self, x: int, y: int) -> Optional[str]:
        return MATERIALS[int(self.grid[y, x])] if self.in_bounds(x, y) else None

    @property
    def target(self) -> Tuple[int, int]:
        return self.position[0] + self.facing[0], self.position[1] + self.facing[1]

    def copy(self) -> "WorldState":
        return WorldState(
            grid=self.grid.copy(), position=self.position, facing=self.facing,
            inventory=dict(self.inventory), vitals=dict(self.vitals), step=self.step,
            ticks=self.ticks, achievements=set(self.achievements),
        )


def generate_world(seed: int, size: int = 9) -> np.ndarray:
    rng = np.random.default_rng(seed)
    grid = rng.choice([GRASS, TREE, WATER, STONE], size=(size, size), p=[0.62, 0.14, 0.08, 0.16])
    x, y = START
    grid[y - 1:y + 2, x - 1:x + 2] = GRASS
    grid[START_TREE[1], START_TREE[0]] = TREE
    return grid.astype(np.int8)


def _direction_name(dx: int, dy: int) -> str:
    vertical = "north" if dy < 0 else "south" if dy > 0 else ""
    horizontal = "west" if dx < 0 else "east" if dx > 0 else ""
    return "-".join(part for part in (vertical, horizontal) if part)


def _offset(dx: int, dy: int) -> str:
    parts = []
    if dy:
        parts.append(f"{abs(dy)}{'N' if dy < 0 else 'S'}")
    if dx:
        parts.append(f"{abs(dx)}{'W' if dx < 0 else 'E'}")
    return " ".join(parts)


def render_observation(state: WorldState, per_kind: int = 2) -> str:
    """Superficie a 1 paso, objetos cercanos (ventana 7x9), vitales e inventario."""
    lines = [f"== Gamestep {state.step} ==", "", "* Observation (1-step):"]
    x, y = state.position
    for name in ("west", "east", "north", "south"):
        dx, dy = DIRECTIONS[name]
        material = state.material(x + dx, y + dy) or "boundary"
        facing = " (facing)" if (dx, dy) == state.facing else ""
        lines.append(f"  - {material}: {name}, 1{_LETTERS[name]}{facing}")

    lines += ["", "* Near-by objects (7x9 grid):"]
    found: Dict[str, List[Tuple[int, int, int]]] = {}
    for dy in range(-3, 4):
        for dx in range(-4, 5):
            material = state.material(x + dx, y + dy)
            if material is None or material == "grass" or (dx, dy) == (0, 0):
                continue
            found.setdefault(material, []).append((abs(dx) + abs(dy), dy, dx))
    nearby = []
    for material in MATERIALS:
        for distance, dy, dx in sorted(found.get(material, []))[:per_kind]:
            nearby.append((distance, MATERIALS.index(material), dy, dx, material))
    if nearby:
        for distance, _, dy, dx, material in sorted(nearby):
            lines.append(f"  - {material} {distance} steps to {_direction_name(dx, dy)}, {_offset(dx, dy)}")
    else:
        lines.append("  - nothing but grass")

    lines += ["", "* Vitals:"]
    lines += [f"  - {vital}: {state.vitals[vital]}/{MAX_VITAL}" for vital in VITALS]

    lines += ["", "* Inventory:"]
    items = [(item, count) for item, count in state.inventory.items() if count > 0]
    lines += [f"  - {item}: {count}" for item, count in items] or ["  - empty"]
    return "\n".join(lines)


class MiniForage(Environment):
    """
    Mundo de supervivencia 9x9, determinista a partir de la semilla.

    Reglas: mesa = 2 de madera, horno = 4 de piedra (con mesa cerca),
    1 de madera por cada `do` sobre un árbol. El manual omite las
    cantidades marcadas en el Ruleset para que el agente las descubra.
    """

    name = "miniforage"

    def __init__(self, size: int = 9, ruleset: Optional[Ruleset] = None,
                 manual_path: Optional[Path] = None):
        if size < 5:
            raise ValueError("El mapa debe tener al menos 5x5 celdas")
        self._size = size
        self._ruleset = ruleset or Ruleset()
        self._manual_path = Path(manual_path) if manual_path else ASSETS_DIR / "manuals" / "miniforage.txt"
        self._manual: Optional[str] = None
        self._state: Optional[WorldState] = None

    @property
    def actions(self) -> List[str]:
        return list(ACTIONS)

    @property
    def manual(self) -> str:
        if self._manual is None:
            self._manual = self._manual_path.read_text(encoding="utf-8")
        return self._manual

    @property
    def ruleset(self) -> Ruleset:
        return self._ruleset

    @property
    def state(self) -> WorldState:
        if self._state is None:
            raise RuntimeError("Llamar a reset() antes de usar el entorno")
        return self._state

    def reset(self, seed: int = 0) -> str:
        self._state = WorldState(grid=generate_world(seed, self._size))
        logger.debug("MiniForage reiniciado con semilla %d", seed)
        return render_observation(self._state)

    def step(self, action: str, repeats: int = 1) -> StepResult:
        if action not in ACTIONS:
            raise UnknownAction(action)
        if repeats < 1:
            raise NonPositiveRepeats(repeats)
        state = self.state
        before = set(state.achievements)

        applied, failed, message = 0, False, ""
        for _ in range(repeats):
            ok, message = self._apply(state, action)
            self._tick(state)
            if not ok:
                failed = True
                break
            applied += 1
        state.step += 1

        unlocked = sorted(state.achievements - before)
        info = {
            "action": action,
            "repeats": repeats,
            "applied": applied,
            "failed": failed,
            "message": message,
            "new_achievements": unlocked,
            "achievements": sorted(state.achievements),
            "inventory": dict(state.inventory),
        }
        done = state.vitals["health"] <= 0
        return StepResult(render_observation(state), float(len(unlocked)), done, info)

    def _apply(self, state: WorldState, action: str) -> Tuple[bool, str]:
        if action == "noop":
            return True, "noop"
        if action.startswith("move_"):
            return self._move(state, action[len("move_"):])
        if action == "do":
            return self._do(state)
        if action == "sleep":
            state.vitals["energy"] = min(MAX_VITAL, state.vitals["energy"] + 1)
            return True, "slept"
        if action == "place_table":
            return self._place_table(state)
        return self._place_furnace(state)

    def _move(self, state: WorldState, direction: str) -> Tuple[bool, str]:
        dx, dy = DIRECTIONS[direction]
        state.facing = (dx, dy)
        x, y = state.position[0] + dx, state.position[1] + dy
        material = state.material(x, y)
        if material != "grass":
            return False, f"move_{direction} blocked by {material or 'boundary'}"
        state.position = (x, y)
        return True, f"moved {direction}"

    def _do(self, state: WorldState) -> Tuple[bool, str]:
        x, y = state.target
        material = state.material(x, y)
        rules = self._ruleset
        if material == "tree":
            state.inventory["wood"] += rules.wood_per_do
            state.achievements.add("collect_wood")
            return True, "collected wood"
        if material == "stone":
            state.inventory["stone"] += rules.stone_per_do
            state.grid[y, x] = GRASS
            state.achievements.add("collect_stone")
            return True, "collected stone"
        if material == "water":
            state.vitals["drink"] = min(MAX_VITAL, state.vitals["drink"] + rules.drink_per_do)
            state.achievements.add("collect_drink")
            return True, "drank water"
        return False, f"do: nothing to interact with ({material or 'boundary'})"

    def _placement_cell(self, state: WorldState) -> Optional[Tuple[int, int]]:
        x, y = state.target
        if state.material(x, y) == "grass":
            return x, y
        for name in ("north", "east", "south", "west"):
            dx, dy = DIRECTIONS[name]
            cell = (state.position[0] + dx, state.position[1] + dy)
            if state.material(*cell) == "grass":
                return cell
        return None

    def _place_table(self, state: WorldState) -> Tuple[bool, str]:
        if state.inventory["wood"] < self._ruleset.table_wood:
            return False, "place_table failed: not enough wood"
        cell = self._placement_cell(state)
        if cell is None:
            return False, "place_table failed: no free grass nearby"
        state.inventory["wood"] -= self._ruleset.table_wood
        state.grid[cell[1], cell[0]] = TABLE
        state.achievements.add("place_table")
        return True, "placed table"

    def _place_furnace(self, state: WorldState) -> Tuple[bool, str]:
        x, y = state.position
        near_table = any(
            state.material(x + dx, y + dy) == "table"
            for dx in range(-3, 4) for dy in range(-3, 4)
        )
        if not near_table:
            return False, "place_furnace failed: no table nearby"
        if state.inventory["stone"] < self._ruleset.furnace_stone:
            return False, "place_furnace failed: not enough stone"
        cell = self._placement_cell(state)
        if cell is None:
            return False, "place_furnace failed: no free grass nearby"
        state.inventory["stone"] -= self._ruleset.furnace_stone
        state.grid[cell[1], cell[0]] = FURNACE
        state.achievements.add("place_furnace")
        return True, "placed furnace"

    def _tick(self, state: WorldState) -> None:
        state.ticks += 1
        for vital, every in DECAY_EVERY.items():
            if state.ticks % every == 0:
                state.vitals[vital] = max(0, state.vitals[vital] - 1)
        if any(state.vitals[v] == 0 for v in DECAY_EVERY):
            state.vitals["health"] = max(0, state.vitals["health"] - 1)


if __name__ == "__main__":
    print("=== Demostración de MiniForage ===\n")
    env = MiniForage()
    print(env.reset(seed=0))
    for action, repeats in [("move_west", 1), ("do", 1), ("place_table", 1), ("do", 1), ("place_table", 1)]:
        result = env.step(action, repeats)
        print(f"\n>>> {action} x{repeats}: {result.info['message']} (recompensa {result.reward})")
    print(f"\nLogros: {env.state.achievements}")
