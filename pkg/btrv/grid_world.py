"""
Occupancy grid for the service-robot scenario

Maps are ASCII: `#` obstacle, `.` free, `D` destination, `R` recharging
station, `@` robot start. Cells are (row, column) pairs; inside program
graphs they travel as the integer row * width + column.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from btrv.errors import ScenarioBuildError

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

DESTINATION = "Destination"
RECHARGING_STATION = "RechargingStation"

# neighbour order decides ties between equally short moves
HEADINGS = (("N", (-1, 0)), ("E", (0, 1)), ("S", (1, 0)), ("W", (0, -1)))

_MARKS = {"D": DESTINATION, "R": RECHARGING_STATION}


@dataclass(frozen=True)
class Pose:
    cell: Cell
    heading: str = "E"


class GridWorld:
    """Free cells, named locations and breadth-first distances"""

    def __init__(self, rows: Sequence[str]):
        rows = [r.rstrip("\n") for r in rows if r.strip()]
        if not rows:
            raise ScenarioBuildError("empty map")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ScenarioBuildError("map rows have different widths")
        self.rows = rows
        self.height = len(rows)
        self.width = width
        self.locations: Dict[str, Cell] = {}
        start: List[Cell] = []
        self.graph = nx.Graph()
        for r, line in enumerate(rows):
            for c, mark in enumerate(line):
                if mark not in "#.DR@":
                    raise ScenarioBuildError(f"unknown map character '{mark}' at row {r}, column {c}")
                if mark == "#":
                    continue
                self.graph.add_node((r, c))
                if mark == "@":
                    start.append((r, c))
                elif mark in _MARKS:
                    if _MARKS[mark] in self.locations:
                        raise ScenarioBuildError(f"map marks {_MARKS[mark]} twice")
                    self.locations[_MARKS[mark]] = (r, c)
        for r, c in list(self.graph.nodes):
            for _, (dr, dc) in HEADINGS:
                if (r + dr, c + dc) in self.graph:
                    self.graph.add_edge((r, c), (r + dr, c + dc))
        if len(start) != 1:
            raise ScenarioBuildError(f"map needs exactly one robot start '@', found {len(start)}")
        for name in _MARKS.values():
            if name not in self.locations:
                raise ScenarioBuildError(f"map has no {name}")
        self.start = Pose(start[0])
        self._distances: Dict[Cell, Dict[Cell, int]] = {}

    @classmethod
    def from_text(cls, text: str) -> "GridWorld":
        return cls(text.splitlines())

    def index(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def cell(self, index: int) -> Cell:
        return divmod(index, self.width)

    def is_free(self, cell: Cell) -> bool:
        return cell in self.graph

    @property
    def free_cells(self) -> List[Cell]:
        return sorted(self.graph.nodes)

    @property
    def max_index(self) -> int:
        return self.height * self.width - 1

    def distances_to(self, goal: Cell) -> Dict[Cell, int]:
        """Shortest path lengths from every reachable cell to goal"""
        cached = self._distances.get(goal)
        if cached is None:
            cached = dict(nx.single_source_shortest_path_length(self.graph, goal))
            self._distances[goal] = cached
        return cached

    def distance(self, source: Cell, goal: Cell) -> Optional[int]:
        if not self.is_free(source) or not self.is_free(goal):
            return None
        return self.distances_to(goal).get(source)

    def next_step(self, current: Cell, goal: Cell) -> Optional[Tuple[Cell, str]]:
        """Neighbour one step closer to goal, with the heading of the move"""
        distances = self.distances_to(goal)
        here = distances.get(current)
        if here is None or here == 0:
            return None
        for heading, (dr, dc) in HEADINGS:
            neighbour = (current[0] + dr, current[1] + dc)
            if distances.get(neighbour) == here - 1:
                return neighbour, heading
        return None

    def path(self, source: Cell, goal: Cell) -> List[Cell]:
        cells = [source]
        while cells[-1] != goal:
            step = self.next_step(cells[-1], goal)
            if step is None:
                return []
            cells.append(step[0])
        return cells

    def check_reserve(self, station: str, max_moves: int):
        """Every free cell reaches the station within max_moves"""
        distances = self.distances_to(self.locations[station])
        for cell in self.free_cells:
            d = distances.get(cell)
            if d is None:
                raise ScenarioBuildError(f"{station} is unreachable from cell {cell}")
            if d > max_moves:
                raise ScenarioBuildError(f"{station} is {d} moves from cell {cell}; the battery reserve covers "
                                         f"{max_moves}")

    def render(self, robot: Optional[Cell] = None) -> str:
        lines = []
        for r, line in enumerate(self.rows):
            chars = list(line.replace("@", "."))
            if robot is not None and robot[0] == r:
                chars[robot[1]] = "@"
            lines.append("".join(chars))
        return "\n".join(lines)
