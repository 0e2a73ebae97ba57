"""Priority-constrained token-budget allocation and composed-context assembly.

A request declares segments (scene intro, cards, preceding entry, ...) with
their available token counts, plus linear constraints carrying priorities.
``solve`` finds the unique allocation under a strict total order:

1. satisfy all REQUIRED constraints (box bounds, the budget cap, and any
   user-declared required constraints);
2. lexicographically minimize, over descending priority levels, the per-level
   sum of absolute soft-constraint violations;
3. maximize the total allocated length;
4. lexicographically maximize the lengths in declaration order.

Segments with nothing available collapse to zero. The implementation runs a
sequence of exact rational integer programs (one per tier), so it matches a
brute-force enumeration of the same order exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import milp
from .milp import EQ, GE, LE, Row

REQUIRED = "required"


class PackingError(Exception):
    """Base class for allocation failures."""


class Infeasible(PackingError):
    """The REQUIRED constraint set admits no integer allocation."""


class UnknownSegment(PackingError):
    """A constraint references a segment that was not declared."""


class IdOutOfRange(PackingError):
    """A token, position, or segment id falls outside its embedding table."""


class TrimSide(Enum):
    HEAD = "head"
    TAIL = "tail"


@dataclass(frozen=True)
class SegmentSpec:
    """One declared context segment.

    ``segment_ids`` is the ordered set of segment-vocabulary identifiers every
    token of this segment carries (e.g. a card title carries both the card
    kind id and the title id).
    """

    name: str
    segment_ids: tuple
    available: int
    trim: TrimSide = TrimSide.HEAD
    declared_index: int = 0


@dataclass(frozen=True)
class Constraint:
    terms: tuple[tuple[str, Fraction], ...]
    relation: str  # "le" | "ge" | "eq"
    bound: Fraction
    priority: int | str = REQUIRED  # positive int (larger = stronger) or REQUIRED
    name: str = ""


def constraint(
    terms: Iterable[tuple[str, object]],
    relation: str,
    bound,
    priority: int | str = REQUIRED,
    name: str = "",
) -> Constraint:
    return Constraint(
        tuple((seg, Fraction(coef)) for seg, coef in terms),
        relation,
        Fraction(bound),
        priority,
        name,
    )


@dataclass(frozen=True)
class Allocation:
    lengths: Mapping[str, int]

    def __getitem__(self, name: str) -> int:
        return self.lengths[name]

    def total(self) -> int:
        return sum(self.lengths.values())


@dataclass(frozen=True)
class ContextItem:
    token: int | str  # abstract vocabulary id; embedding composition needs ints
    position: int
    segment_ids: frozenset


@dataclass(frozen=True)
class ComposedContext:
    items: tuple[ContextItem, ...]

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class EmbeddingTables:
    """Token / position / segment embedding matrices of a shared width."""

    token_table: np.ndarray
    position_table: np.ndarray
    segment_table: np.ndarray

    def __post_init__(self) -> None:
        widths = {
            self.token_table.shape[1],
            self.position_table.shape[1],
            self.segment_table.shape[1],
        }
        if len(widths) != 1:
            raise ValueError("embedding tables must share one width")

    @property
    def width(self) -> int:
        return self.token_table.shape[1]


def _validate(specs: Sequence[SegmentSpec], constraints: Sequence[Constraint], budget: int):
    if budget < 0:
        raise ValueError("budget must be >= 0")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("segment names must be unique")
    indexes = [s.declared_index for s in specs]
    if len(set(indexes)) != len(indexes):
        raise ValueError("declared_index must be unique per request")
    for s in specs:
        if s.available < 0:
            raise ValueError(f"segment {s.name}: available must be >= 0")
        if not s.segment_ids:
            raise ValueError(f"segment {s.name}: segment_ids must be nonempty")
    known = set(names)
    for c in constraints:
        if not c.terms:
            raise ValueError(f"constraint {c.name or c}: needs at least one term")
        if c.relation not in (LE, GE, EQ):
            raise ValueError(f"constraint {c.name or c}: bad relation {c.relation!r}")
        if c.priority != REQUIRED and (not isinstance(c.priority, int) or c.priority < 1):
            raise ValueError(f"constraint {c.name or c}: bad priority {c.priority!r}")
        for seg, _ in c.terms:
            if seg not in known:
                raise UnknownSegment(f"constraint references unknown segment {seg!r}")


def solve(
    specs: Sequence[SegmentSpec],
    constraints: Sequence[Constraint],
    budget: int,
) -> Allocation:
    """Allocate integer token counts to segments under the priority order."""
    _validate(specs, constraints, budget)
    ordered = sorted(specs, key=lambda s: s.declared_index)
    index = {s.name: i for i, s in enumerate(ordered)}
    n = len(ordered)
    soft = [c for c in constraints if c.priority != REQUIRED]
    width = n + len(soft)

    def coeffs_for(c: Constraint) -> list[Fraction]:
        line = [Fraction(0)] * width
        for seg, coef in c.terms:
            line[index[seg]] += coef
        return line

    rows: list[Row] = []
    for i, s in enumerate(ordered):
        rows.append(milp.unit_row(width, i, LE, s.available))
    rows.append(Row(tuple([Fraction(1)] * n + [Fraction(0)] * len(soft)), LE, Fraction(budget)))
    for c in constraints:
        if c.priority == REQUIRED:
            rows.append(Row(tuple(coeffs_for(c)), c.relation, c.bound))

    # Violation variable j measures how far soft constraint j misses its bound.
    for j, c in enumerate(soft):
        line = coeffs_for(c)
        if c.relation in (LE, EQ):
            over = list(line)
            over[n + j] = Fraction(-1)
            rows.append(Row(tuple(over), LE, c.bound))
        if c.relation in (GE, EQ):
            under = list(line)
            under[n + j] = Fraction(1)
            rows.append(Row(tuple(under), GE, c.bound))

    int_vars = range(n)

    def run_stage(objective: list[Fraction]) -> tuple[Fraction, list[Fraction]]:
        result = milp.solve_milp(objective, rows, int_vars)
        if result is None:
            raise Infeasible("required constraints admit no integer allocation")
        return result

    def pin(coeffs: list[Fraction], value: Fraction) -> None:
        rows.append(Row(tuple(coeffs), EQ, value))

    levels = sorted({c.priority for c in soft}, reverse=True)
    for level in levels:
        objective = [Fraction(0)] * width
        for j, c in enumerate(soft):
            if c.priority == level:
                objective[n + j] = Fraction(1)
        value, _ = run_stage(objective)
        pin(objective, value)

    objective = [Fraction(-1)] * n + [Fraction(0)] * len(soft)
    value, _ = run_stage(objective)
    pin(objective, value)

    solution: list[Fraction] | None = None
    for i in range(n):
        objective = [Fraction(0)] * width
        objective[i] = Fraction(-1)
        value, solution = run_stage(objective)
        pin(objective, value)

    assert solution is not None or n == 0
    lengths = {
        s.name: int(solution[i]) if solution is not None else 0
        for i, s in enumerate(ordered)
    }
    return Allocation(lengths)


def pack(
    bundle: Sequence[tuple[SegmentSpec, Sequence]],
    constraints: Sequence[Constraint],
    budget: int,
    separators: Mapping[str, int | str],
) -> ComposedContext:
    """Solve the allocation and assemble the packed (token, position, ids) list.

    Every segment with source text reserves one budget token up front for its
    separator; the separator is prefixed to the segment's tokens and carries
    the segment's full id set.
    """
    specs = [spec for spec, _ in bundle]
    for spec, tokens in bundle:
        if len(tokens) != spec.available:
            raise ValueError(
                f"segment {spec.name}: {len(tokens)} source tokens != available {spec.available}"
            )
        if spec.available > 0 and spec.name not in separators:
            raise ValueError(f"segment {spec.name}: no separator token assigned")
    overhead = sum(1 for spec in specs if spec.available > 0)
    inner_budget = budget - overhead
    if inner_budget < 0:
        raise Infeasible("budget cannot cover per-segment separators")
    allocation = solve(specs, constraints, inner_budget)

    items: list[ContextItem] = []
    position = 0
    for spec, tokens in sorted(bundle, key=lambda pair: pair[0].declared_index):
        length = allocation[spec.name]
        if length == 0:
            continue
        kept = tokens[:length] if spec.trim is TrimSide.HEAD else tokens[-length:]
        ids = frozenset(spec.segment_ids)
        items.append(ContextItem(separators[spec.name], position, ids))
        position += 1
        for token in kept:
            items.append(ContextItem(token, position, ids))
            position += 1
    return ComposedContext(tuple(items))


def compose_embeddings(ctx: ComposedContext, tables: EmbeddingTables) -> np.ndarray:
    """Row i = position embedding + token embedding + sum of segment embeddings."""
    out = np.zeros((len(ctx.items), tables.width), dtype=tables.token_table.dtype)
    n_tokens = tables.token_table.shape[0]
    n_positions = tables.position_table.shape[0]
    n_segments = tables.segment_table.shape[0]
    for r, item in enumerate(ctx.items):
        if not 0 <= item.token < n_tokens:
            raise IdOutOfRange(f"token id {item.token} outside table of {n_tokens}")
        if not 0 <= item.position < n_positions:
            raise IdOutOfRange(f"position {item.position} outside table of {n_positions}")
        vec = tables.position_table[item.position] + tables.token_table[item.token]
        for seg in item.segment_ids:
            if not 0 <= seg < n_segments:
                raise IdOutOfRange(f"segment id {seg} outside table of {n_segments}")
            vec = vec + tables.segment_table[seg]
        out[r] = vec
    return out


# ---------------------------------------------------------------------------
# Policy files: a declarative description of segments, constraints and budget.
#
#   budget 1024
#   reserve 0
#   segment intro head
#   constraint intro_min: intro ge 30 @ 3
#   constraint cap: intro + 2*entry le 900 @ required
# ---------------------------------------------------------------------------

_TERM = re.compile(r"^(?:(?P<coef>-?\d+(?:/\d+)?|-?\d*\.\d+)\s*\*\s*)?(?P<name>[A-Za-z_][\w-]*)$")


@dataclass
class PackingPolicy:
    budget: int
    reserve: int = 0
    segments: list[tuple[str, TrimSide]] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)

    @property
    def effective_budget(self) -> int:
        return self.budget - self.reserve

    def specs(self, lengths: Mapping[str, int]) -> list[SegmentSpec]:
        """Build SegmentSpecs from declared segments and measured source lengths.

        Undeclared names in ``lengths`` are rejected; declared segments with
        no measured length collapse to zero.
        """
        declared = {name for name, _ in self.segments}
        for name in lengths:
            if name not in declared:
                raise UnknownSegment(f"--lengths names unknown segment {name!r}")
        return [
            SegmentSpec(
                name=name,
                segment_ids=(name,),
                available=int(lengths.get(name, 0)),
                trim=trim,
                declared_index=i,
            )
            for i, (name, trim) in enumerate(self.segments)
        ]


def _parse_expr(expr: str) -> list[tuple[str, Fraction]]:
    # normalize "a + 2*b - c" into signed terms
    pieces = expr.replace("-", "+-").split("+")
    terms: list[tuple[str, Fraction]] = []
    for piece in pieces:
        piece = piece.strip()
        if not piece:
            continue
        negative = piece.startswith("-")
        if negative:
            piece = piece[1:].strip()
        m = _TERM.match(piece)
        if not m:
            raise ValueError(f"cannot parse constraint term {piece!r}")
        coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
        if negative:
            coef = -coef
        terms.append((m.group("name"), coef))
    if not terms:
        raise ValueError(f"empty constraint expression {expr!r}")
    return terms


def parse_policy(text: str) -> PackingPolicy:
    policy = PackingPolicy(budget=0)
    seen_budget = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if keyword == "budget":
                policy.budget = int(rest)
                seen_budget = True
            elif keyword == "reserve":
                policy.reserve = int(rest)
            elif keyword == "segment":
                parts = rest.split()
                name = parts[0]
                trim = TrimSide(parts[1].lower()) if len(parts) > 1 else TrimSide.HEAD
                policy.segments.append((name, trim))
            elif keyword == "constraint":
                name, _, body = rest.partition(":")
                body, _, pri_text = body.partition("@")
                m = re.match(r"^(.*?)\s+(le|ge|eq)\s+(-?\d+(?:/\d+)?|-?\d*\.\d+)\s*$", body.strip())
                if not m:
                    raise ValueError(f"cannot parse constraint body {body.strip()!r}")
                pri_text = pri_text.strip().lower()
                priority: int | str = REQUIRED if pri_text == REQUIRED else int(pri_text)
                policy.constraints.append(
                    constraint(
                        _parse_expr(m.group(1)),
                        m.group(2),
                        Fraction(m.group(3)),
                        priority,
                        name=name.strip(),
                    )
                )
            else:
                raise ValueError(f"unknown directive {keyword!r}")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"policy line {lineno}: {exc}") from exc
    if not seen_budget:
        raise ValueError("policy must declare a budget")
    return policy


def load_policy(path) -> PackingPolicy:
    with open(path, encoding="utf-8") as handle:
        return parse_policy(handle.read())


def builtin_policy(name: str) -> PackingPolicy:
    """Load a policy shipped with the package ("default" or "example")."""
    from importlib import resources

    text = resources.files("storyeval.resources").joinpath(f"policies/{name}.pol").read_text("utf-8")
    return parse_policy(text)
