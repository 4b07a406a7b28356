"""
Occupancy-grid text files.

One row of cells per line: '.' free, '#' blocked, 'S' and 'G' free cells
marking the start and goal. Blank lines are ignored; row 0 is the top line.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from ..core.corridor import BLOCKED, FREE, Cell, cell_center
from ..utils.exceptions import ScenarioError, ValidationError

START = "S"
GOAL = "G"


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    free: np.ndarray
    start: Optional[Cell] = None
    goal: Optional[Cell] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.free.shape

    def center(self, cell: Cell, cell_size: float) -> np.ndarray:
        return cell_center(self.shape, cell, cell_size)

    def to_text(self) -> str:
        lines = []
        for r, row in enumerate(self.free):
            chars = [FREE if f else BLOCKED for f in row]
            for marker, cell in ((START, self.start), (GOAL, self.goal)):
                if cell is not None and cell[0] == r:
                    chars[cell[1]] = marker
            lines.append("".join(chars))
        return "\n".join(lines) + "\n"


def parse_grid(text: str) -> OccupancyGrid:
    """Parse grid text, anchoring errors to the offending line."""
    rows = []
    start = goal = None
    width = None

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue

        if width is None:
            width = len(line)
        elif len(line) != width:
            raise ScenarioError(
                f"Error parsing line {line_number}: {line} "
                f"(expected {width} cells, found {len(line)})"
            )

        r = len(rows)
        cells = []
        for c, ch in enumerate(line):
            if ch == START:
                if start is not None:
                    raise ScenarioError(f"Error parsing line {line_number}: second start marker")
                start = (r, c)
            elif ch == GOAL:
                if goal is not None:
                    raise ScenarioError(f"Error parsing line {line_number}: second goal marker")
                goal = (r, c)
            elif ch not in (FREE, BLOCKED):
                raise ScenarioError(
                    f"Error parsing line {line_number}: {line} (unknown cell '{ch}')"
                )
            cells.append(ch != BLOCKED)
        rows.append(cells)

    if not rows:
        raise ScenarioError("Grid file contains no rows")
    return OccupancyGrid(np.array(rows, dtype=bool), start, goal)


def load_grid(path) -> OccupancyGrid:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ValidationError(f"Cannot read grid file {path}: {e}") from e
    return parse_grid(text)
