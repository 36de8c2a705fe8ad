"""Santa Fe Trail artificial ant.

Programs are read from the terminal yield of an ant-grammar tree using the
tokens ``move()``, ``left()``, ``right()`` and
``if(food_ahead()) { ... } else { ... }``; juxtaposition is sequencing.
``move``/``left``/``right`` cost one time step each and the food test is
free.  The program restarts from the top until the step budget is spent
or all food has been eaten.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from ..derivation import DerivationTree, leaves

MOVE, LEFT, RIGHT, IF, JUMP = range(5)
_ACTIONS = {"move()": MOVE, "left()": LEFT, "right()": RIGHT}
# N, E, S, W as (d_row, d_col)
_HEADINGS = ((-1, 0), (0, 1), (1, 0), (0, -1))
HEADING_NAMES = "NESW"


class AntProgramError(ValueError):
    pass


@dataclass(frozen=True)
class TrailWorld:
    food: frozenset
    rows: int = 32
    cols: int = 32
    max_steps: int = 600
    start: Tuple[int, int, int] = (0, 0, 1)  # row, col, heading (east)

    @property
    def food_total(self) -> int:
        return len(self.food)

    def with_budget(self, max_steps: int) -> "TrailWorld":
        return TrailWorld(self.food, self.rows, self.cols, max_steps, self.start)


def parse_trail(text: str, max_steps: int = 600) -> TrailWorld:
    """Grid of ``#`` (food) and ``.`` (empty); an ``S`` marks an empty start cell."""
    lines = [ln.rstrip("\n") for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trail")
    cols = len(lines[0])
    food = set()
    start = (0, 0, 1)
    for r, line in enumerate(lines):
        if len(line) != cols:
            raise ValueError(f"trail row {r} has {len(line)} cells, expected {cols}")
        for c, ch in enumerate(line):
            if ch == "#":
                food.add((r, c))
            elif ch == "S":
                start = (r, c, 1)
            elif ch != ".":
                raise ValueError(f"bad trail cell {ch!r} at row {r}, column {c}")
    return TrailWorld(frozenset(food), len(lines), cols, max_steps, start)


def santa_fe_trail(max_steps: int = 600, path: Optional[Union[str, Path]] = None) -> TrailWorld:
    if path is None:
        text = resources.files("ggec").joinpath("data", "santafe.trail").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_trail(text, max_steps)


def compile_program(t: Union[DerivationTree, str, Sequence[str]]) -> List[Tuple[int, int]]:
    """Flatten a program into ``(opcode, argument)`` pairs with jump targets."""
    if isinstance(t, DerivationTree):
        toks = [n.symbol.text for n in leaves(t)]
    elif isinstance(t, str):
        toks = t.split()
    else:
        toks = list(t)
    code: List[List[int]] = []
    pos = 0

    def expect(tok):
        nonlocal pos
        if pos >= len(toks) or toks[pos] != tok:
            got = toks[pos] if pos < len(toks) else "end of program"
            raise AntProgramError(f"expected {tok!r}, found {got!r}")
        pos += 1

    def block(closing):
        nonlocal pos
        while pos < len(toks) and toks[pos] != closing:
            tok = toks[pos]
            pos += 1
            if tok in _ACTIONS:
                code.append([_ACTIONS[tok], 0])
            elif tok == "if(food_ahead())":
                branch = len(code)
                code.append([IF, 0])
                expect("{")
                block("}")
                expect("}")
                jump = len(code)
                code.append([JUMP, 0])
                code[branch][1] = len(code)
                expect("else")
                expect("{")
                block("}")
                expect("}")
                code[jump][1] = len(code)
            else:
                raise AntProgramError(f"unknown ant terminal {tok!r}")

    block(None)
    if pos != len(toks):
        raise AntProgramError(f"unbalanced {toks[pos]!r}")
    return [tuple(c) for c in code]


@dataclass
class AntResult:
    eaten: int
    steps: int
    row: int
    col: int
    heading: int
    trace: List[Tuple[int, int, int, int]] = field(default_factory=list)


def simulate(program, world: TrailWorld, trace: bool = False) -> AntResult:
    """Run a program (tree, phenotype or compiled code) on a fresh copy of ``world``."""
    code = program if isinstance(program, list) else compile_program(program)
    rows, cols = world.rows, world.cols
    grid = bytearray(rows * cols)
    for r, c in world.food:
        grid[r * cols + c] = 1
    r, c, h = world.start
    total, budget = world.food_total, world.max_steps
    eaten = steps = pc = 0
    last_wrap_steps = -1
    n = len(code)
    log = []
    while steps < budget and eaten < total:
        if pc >= n:
            if steps == last_wrap_steps:
                break  # a pass with no actions would loop forever
            last_wrap_steps = steps
            pc = 0
            if n == 0:
                break
        op, arg = code[pc]
        if op == IF:
            dr, dc = _HEADINGS[h]
            pc = pc + 1 if grid[((r + dr) % rows) * cols + (c + dc) % cols] else arg
            continue
        if op == JUMP:
            pc = arg
            continue
        steps += 1
        if op == MOVE:
            dr, dc = _HEADINGS[h]
            r, c = (r + dr) % rows, (c + dc) % cols
            k = r * cols + c
            if grid[k]:
                grid[k] = 0
                eaten += 1
        elif op == LEFT:
            h = (h - 1) % 4
        else:
            h = (h + 1) % 4
        if trace:
            log.append((steps, r, c, h))
        pc += 1
    return AntResult(eaten, steps, r, c, h, log)


def run_ant(t, world: TrailWorld) -> int:
    """Food eaten by the program within the world's step budget."""
    return simulate(t, world).eaten


@dataclass
class SantaFeProblem:
    world: TrailWorld
    name: str = "santafe"
    kind: str = field(default="ant", init=False)

    def fitness(self, t: DerivationTree) -> float:
        return float(self.world.food_total - run_ant(t, self.world))

    def test_error(self, t: DerivationTree) -> Optional[float]:
        return None
