"""Procedural and manual map generation with placement constraints.

Generation is rejection sampling: mountains are dropped i.i.d., castles and
generals are placed uniformly on free cells, and the candidate is kept only
if it passes every constraint in :func:`validate`. Maps can also be written
by hand in a small text format (see :func:`parse_map_text`).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import CellKind

DEFAULT_GARRISON = 45

_KIND_TO_CHAR = {
    int(CellKind.PLAIN): ".",
    int(CellKind.MOUNTAIN): "#",
    int(CellKind.CASTLE): "C",
}


class GenerationExhausted(Exception):
    """Raised when no candidate map passed validation within max_attempts."""


class ParseError(Exception):
    """Malformed map text; carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class MapSpec:
    height: int = 24
    width: int = 24
    mountain_density: float = 0.20
    mountain_density_tolerance: float = 0.03
    castle_count_range: tuple[int, int] = (9, 11)
    castle_garrison_range: tuple[int, int] = (40, 50)
    min_general_bfs_distance: int = 15
    castle_within_radius: int = 6
    max_attempts: int = 1000

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("grid dimensions must be positive")
        if not 0.0 <= self.mountain_density < 1.0:
            raise ValueError("mountain_density must be in [0, 1)")
        if self.castle_count_range[0] > self.castle_count_range[1]:
            raise ValueError("castle_count_range is empty")
        if self.castle_garrison_range[0] > self.castle_garrison_range[1]:
            raise ValueError("castle_garrison_range is empty")
        if self.min_general_bfs_distance < 1:
            raise ValueError("min_general_bfs_distance must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


MOUNTAIN_FRACTION = "mountain_fraction_out_of_range"
CASTLE_COUNT = "castle_count_out_of_range"
CASTLE_GARRISON = "castle_garrison_out_of_range"
GENERAL_STRUCTURE = "bad_general_structure"
GENERALS_TOO_CLOSE = "generals_too_close"
GENERALS_UNREACHABLE = "generals_unreachable"
NO_CASTLE_NEAR_GENERAL = "no_castle_near_general"


@dataclass
class GridLayout:
    """Static terrain: cell kinds, two general positions, castle garrisons."""

    cells: np.ndarray
    general_positions: tuple[tuple[int, int], tuple[int, int]]
    castle_garrisons: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GridLayout):
            return NotImplemented
        return (
            np.array_equal(self.cells, other.cells)
            and self.general_positions == other.general_positions
            and self.castle_garrisons == other.castle_garrisons
        )


def generate(spec: MapSpec, seed: int) -> GridLayout:
    """Sample a layout satisfying the spec; pure in (spec, seed).

    Raises GenerationExhausted after ``spec.max_attempts`` rejected
    candidates, which normally signals an infeasible spec.
    """
    rng = np.random.default_rng(seed)
    n_cells = spec.height * spec.width
    for _ in range(spec.max_attempts):
        cells = np.full((spec.height, spec.width), int(CellKind.PLAIN), dtype=np.int8)
        mountains = rng.random((spec.height, spec.width)) < spec.mountain_density
        cells[mountains] = int(CellKind.MOUNTAIN)
        free = np.flatnonzero(~mountains.ravel())
        castle_count = int(rng.integers(spec.castle_count_range[0],
                                        spec.castle_count_range[1] + 1))
        if len(free) < castle_count + 2:
            continue
        picks = rng.choice(free, size=castle_count + 2, replace=False)
        positions = [(int(f) // spec.width, int(f) % spec.width) for f in picks]
        g0, g1 = positions[0], positions[1]
        castles = positions[2:]
        cells[g0] = int(CellKind.GENERAL)
        cells[g1] = int(CellKind.GENERAL)
        garrisons = {}
        for pos in castles:
            cells[pos] = int(CellKind.CASTLE)
            garrisons[pos] = int(rng.integers(spec.castle_garrison_range[0],
                                              spec.castle_garrison_range[1] + 1))
        layout = GridLayout(cells=cells, general_positions=(g0, g1),
                            castle_garrisons=garrisons)
        if not validate(layout, spec):
            return layout
    raise GenerationExhausted(
        f"no valid layout in {spec.max_attempts} attempts for {spec.height}x{spec.width} spec"
    )


def validate(layout: GridLayout, spec: MapSpec) -> list[Violation]:
    """Check every spec constraint; returns an empty list when valid."""
    violations = []
    cells = layout.cells
    n_cells = cells.size

    fraction = float((cells == int(CellKind.MOUNTAIN)).sum()) / n_cells
    lo = spec.mountain_density - spec.mountain_density_tolerance
    hi = spec.mountain_density + spec.mountain_density_tolerance
    if not lo <= fraction <= hi:
        violations.append(Violation(
            MOUNTAIN_FRACTION,
            f"mountain fraction {fraction:.3f} outside [{lo:.3f}, {hi:.3f}]"))

    castles = [tuple(pos) for pos in np.argwhere(cells == int(CellKind.CASTLE))]
    cmin, cmax = spec.castle_count_range
    if not cmin <= len(castles) <= cmax:
        violations.append(Violation(
            CASTLE_COUNT, f"{len(castles)} castles outside [{cmin}, {cmax}]"))
    gmin, gmax = spec.castle_garrison_range
    for pos in castles:
        garrison = layout.castle_garrisons.get(pos, DEFAULT_GARRISON)
        if not gmin <= garrison <= gmax:
            violations.append(Violation(
                CASTLE_GARRISON,
                f"castle {pos} garrison {garrison} outside [{gmin}, {gmax}]"))

    generals = [tuple(pos) for pos in np.argwhere(cells == int(CellKind.GENERAL))]
    g0, g1 = layout.general_positions
    if sorted(generals) != sorted([tuple(g0), tuple(g1)]) or g0 == g1:
        violations.append(Violation(
            GENERAL_STRUCTURE,
            "grid generals do not match the two declared general positions"))
        return violations

    dist = bfs_distance(layout, g0, g1)
    if dist is None:
        violations.append(Violation(
            GENERALS_UNREACHABLE, "no mountain-free path between generals"))
    elif dist < spec.min_general_bfs_distance:
        violations.append(Violation(
            GENERALS_TOO_CLOSE,
            f"generals {dist} BFS steps apart, need >= {spec.min_general_bfs_distance}"))

    castle_set = set(castles)
    for player, g in enumerate((g0, g1)):
        reach = _bfs_field(layout, g, max_depth=spec.castle_within_radius)
        if not any(pos in reach for pos in castle_set):
            violations.append(Violation(
                NO_CASTLE_NEAR_GENERAL,
                f"player {player} has no castle within BFS {spec.castle_within_radius}"))
    return violations


def _bfs_field(layout: GridLayout, start: tuple[int, int],
               max_depth: Optional[int] = None) -> dict[tuple[int, int], int]:
    """BFS distances from start over non-mountain cells, 4-connected."""
    h, w = layout.cells.shape
    mountains = layout.cells == int(CellKind.MOUNTAIN)
    dist = {tuple(start): 0}
    queue = deque([tuple(start)])
    while queue:
        i, j = queue.popleft()
        d = dist[(i, j)]
        if max_depth is not None and d >= max_depth:
            continue
        for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if 0 <= ni < h and 0 <= nj < w and not mountains[ni, nj] \
                    and (ni, nj) not in dist:
                dist[(ni, nj)] = d + 1
                queue.append((ni, nj))
    return dist


def bfs_distance(layout: GridLayout, a: tuple[int, int],
                 b: tuple[int, int]) -> Optional[int]:
    """Shortest 4-connected path length avoiding mountains; None if unreachable."""
    a, b = tuple(a), tuple(b)
    if a == b:
        return 0
    h, w = layout.cells.shape
    mountains = layout.cells == int(CellKind.MOUNTAIN)
    dist = {a: 0}
    queue = deque([a])
    while queue:
        i, j = queue.popleft()
        d = dist[(i, j)]
        for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if (ni, nj) == b:
                return d + 1
            if 0 <= ni < h and 0 <= nj < w and not mountains[ni, nj] \
                    and (ni, nj) not in dist:
                dist[(ni, nj)] = d + 1
                queue.append((ni, nj))
    return None


def parse_map_text(text: str) -> GridLayout:
    """Parse the text map format.

    Grammar: one row per line built from '.' (plain), '#' (mountain),
    'A'/'B' (the two generals), 'C' (castle, default garrison 45). An
    optional '---' line may follow, then one 'C i j garrison' line per
    castle garrison override. Rows must be rectangular.
    """
    lines = text.split("\n")
    rows: list[str] = []
    sep_index = None
    for idx, line in enumerate(lines):
        if line == "---":
            sep_index = idx
            break
        if line == "" and (idx == len(lines) - 1 or all(l == "" for l in lines[idx:])):
            break
        rows.append(line)
    if not rows:
        raise ParseError("empty map", 1)

    width = len(rows[0])
    generals: dict[str, tuple[int, int]] = {}
    castles: list[tuple[int, int]] = []
    cells = np.full((len(rows), width), int(CellKind.PLAIN), dtype=np.int8)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"row length {len(row)} != {width}", i + 1, len(row) + 1)
        for j, ch in enumerate(row):
            if ch == ".":
                pass
            elif ch == "#":
                cells[i, j] = int(CellKind.MOUNTAIN)
            elif ch == "C":
                cells[i, j] = int(CellKind.CASTLE)
                castles.append((i, j))
            elif ch in ("A", "B"):
                if ch in generals:
                    raise ParseError(f"duplicate general '{ch}'", i + 1, j + 1)
                generals[ch] = (i, j)
                cells[i, j] = int(CellKind.GENERAL)
            else:
                raise ParseError(f"unknown cell character {ch!r}", i + 1, j + 1)
    for name in ("A", "B"):
        if name not in generals:
            raise ParseError(f"missing general '{name}'", len(rows))

    garrisons = {pos: DEFAULT_GARRISON for pos in castles}
    if sep_index is not None:
        for offset, line in enumerate(lines[sep_index + 1:]):
            lineno = sep_index + 2 + offset
            if line == "":
                continue
            parts = line.split()
            if len(parts) != 4 or parts[0] != "C":
                raise ParseError("expected 'C i j garrison'", lineno)
            try:
                i, j, garrison = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError("non-integer garrison annotation", lineno) from None
            if (i, j) not in garrisons:
                raise ParseError(f"garrison annotation for non-castle cell ({i}, {j})", lineno)
            if garrison < 0:
                raise ParseError("garrison must be non-negative", lineno)
            garrisons[(i, j)] = garrison

    return GridLayout(cells=cells, general_positions=(generals["A"], generals["B"]),
                      castle_garrisons=garrisons)


def serialize_map_text(layout: GridLayout) -> str:
    """Canonical text form; parse(serialize(layout)) == layout.

    Garrison sidecar lines are emitted (for every castle, sorted by
    position) only when at least one garrison differs from the default.
    """
    g0, g1 = layout.general_positions
    rows = []
    for i in range(layout.height):
        chars = []
        for j in range(layout.width):
            if (i, j) == tuple(g0):
                chars.append("A")
            elif (i, j) == tuple(g1):
                chars.append("B")
            else:
                chars.append(_KIND_TO_CHAR[int(layout.cells[i, j])])
        rows.append("".join(chars))
    text = "\n".join(rows) + "\n"
    garrisons = layout.castle_garrisons
    if any(g != DEFAULT_GARRISON for g in garrisons.values()):
        text += "---\n"
        for (i, j) in sorted(garrisons):
            text += f"C {i} {j} {garrisons[(i, j)]}\n"
    return text
