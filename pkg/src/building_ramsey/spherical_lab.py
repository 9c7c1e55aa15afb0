"""Rank-2 spherical buildings as point-line flag complexes, with Weyl distances.

Two explicit thick models at q = 2: the seven-point projective plane (type A2)
and the duad-syntheme generalized quadrangle (type C2). Chambers are incident
point-line pairs; two chambers are 1-adjacent when they share the line (the
point moves) and 2-adjacent when they share the point (the line moves).
Weyl-group-valued distances come from multiplying generators along shortest
galleries; independence of the chosen gallery is asserted, not assumed.
"""

from __future__ import annotations

import csv
import functools
import io
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .errors import ConsistencyError, InputError
from .root_system import (
    RootDatum,
    WeylElement,
    build_root_datum,
    enumerate_weyl,
    longest_element,
)

Chamber = tuple[int, int]  # (point index, line index)


@dataclass(frozen=True)
class FlagComplex:
    """Finite thick point-line geometry with its Weyl type."""

    name: str
    weyl_label: str
    q: int
    points: tuple[str, ...]
    lines: tuple[str, ...]
    incidence: frozenset[tuple[int, int]]
    chambers: tuple[Chamber, ...]

    @property
    def datum(self) -> RootDatum:
        return build_root_datum(self.weyl_label)

    def chamber_index(self, chamber: Chamber) -> int:
        try:
            return self.chambers.index(chamber)
        except ValueError as exc:
            raise InputError(f"{chamber} is not an incident point-line pair") from exc

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "weyl_type": self.weyl_label,
            "q": self.q,
            "points": list(self.points),
            "lines": list(self.lines),
            "incidence": sorted(list(pair) for pair in self.incidence),
            "chambers": [list(c) for c in self.chambers],
        }


def _finish(name: str, weyl_label: str, q: int, points: list[str], lines: list[str],
            incidence: set[tuple[int, int]]) -> FlagComplex:
    chambers = tuple(sorted(incidence))
    cx = FlagComplex(
        name=name,
        weyl_label=weyl_label,
        q=q,
        points=tuple(points),
        lines=tuple(lines),
        incidence=frozenset(incidence),
        chambers=chambers,
    )
    _check_thickness(cx)
    return cx


def _check_thickness(cx: FlagComplex) -> None:
    # Every panel (point or line) must lie in exactly q + 1 chambers.
    per_point = [0] * len(cx.points)
    per_line = [0] * len(cx.lines)
    for p, l in cx.chambers:
        per_point[p] += 1
        per_line[l] += 1
    if set(per_point) != {cx.q + 1} or set(per_line) != {cx.q + 1}:
        raise ConsistencyError("complex is not thick of the stated order")


@lru_cache(maxsize=None)
def build_fano() -> FlagComplex:
    """Seven points and seven lines: nonzero vectors of F_2^3, lines = triples
    {a, b, a xor b}; 21 chambers, Weyl type A2."""
    masks = list(range(1, 8))
    points = [format(m, "03b") for m in masks]
    line_sets = sorted(
        {frozenset((a, b, a ^ b)) for a, b in combinations(masks, 2)},
        key=sorted,
    )
    if len(line_sets) != 7:
        raise ConsistencyError("projective plane construction failed")
    lines = ["-".join(str(m) for m in sorted(s)) for s in line_sets]
    incidence = {
        (pi, li)
        for pi, m in enumerate(masks)
        for li, s in enumerate(line_sets)
        if m in s
    }
    return _finish("fano", "A2", 2, points, lines, incidence)


@lru_cache(maxsize=None)
def build_gq22() -> FlagComplex:
    """Duads and synthemes of a six-element set: 15 points, 15 lines, 45
    chambers, Weyl type C2."""
    duads = list(combinations(range(1, 7), 2))
    points = ["".join(str(x) for x in d) for d in duads]
    synthemes = []
    pool = list(range(1, 7))
    first_opts = [(1, x) for x in range(2, 7)]
    for a in first_opts:
        remaining = [x for x in pool if x not in a]
        b0 = remaining[0]
        for other in remaining[1:]:
            b = (b0, other)
            c = tuple(x for x in remaining if x not in b)
            synthemes.append(frozenset({a, b, c}))
    if len({*synthemes}) != 15:
        raise ConsistencyError("syntheme construction failed")
    synthemes = sorted({*synthemes}, key=lambda s: sorted(s))
    lines = ["|".join("".join(map(str, d)) for d in sorted(s)) for s in synthemes]
    incidence = {
        (pi, li)
        for pi, d in enumerate(duads)
        for li, s in enumerate(synthemes)
        if d in s
    }
    return _finish("gq22", "C2", 2, points, lines, incidence)


def build_complex(name: str) -> FlagComplex:
    if name == "fano":
        return build_fano()
    if name == "gq22":
        return build_gq22()
    raise InputError(f"unknown complex {name!r} (use 'fano' or 'gq22')")


def _adjacency(cx: FlagComplex) -> list[list[tuple[int, int]]]:
    """Neighbors as (chamber index, generator): 1 moves the point, 2 the line."""
    by_line: dict[int, list[int]] = {}
    by_point: dict[int, list[int]] = {}
    for idx, (p, l) in enumerate(cx.chambers):
        by_line.setdefault(l, []).append(idx)
        by_point.setdefault(p, []).append(idx)
    adj: list[list[tuple[int, int]]] = [[] for _ in cx.chambers]
    for members in by_line.values():
        for idx in members:
            adj[idx].extend((other, 1) for other in members if other != idx)
    for members in by_point.values():
        for idx in members:
            adj[idx].extend((other, 2) for other in members if other != idx)
    return adj


def _mat_mul(a, b):
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n)
    )


@lru_cache(maxsize=None)
def _distance_table(name: str) -> tuple[tuple[int, ...], ...]:
    """All-pairs Weyl distances as indices into enumerate_weyl(datum).

    Breadth-first search over galleries; every shortest gallery between two
    chambers must spell the same reduced word, and the spelled word's length
    must equal the gallery distance. Both are asserted.
    """
    cx = build_complex(name)
    datum = cx.datum
    elements = enumerate_weyl(datum)
    by_matrix = {e.matrix: i for i, e in enumerate(elements)}
    gen_matrix = {i: datum.simple_reflection_matrix(i) for i in (1, 2)}
    adj = _adjacency(cx)

    table: list[tuple[int, ...]] = []
    for source in range(len(cx.chambers)):
        dist = {source: 0}
        elem = {source: by_matrix[elements[0].matrix]}
        order = [source]
        for u in order:
            for v, gen in adj[u]:
                cand_matrix = _mat_mul(elements[elem[u]].matrix, gen_matrix[gen])
                cand = by_matrix.get(cand_matrix)
                if cand is None:
                    raise ConsistencyError("gallery product left the Weyl group")
                if v not in dist:
                    if elements[cand].length != dist[u] + 1:
                        raise ConsistencyError("shortest gallery spells a non-reduced word")
                    dist[v] = dist[u] + 1
                    elem[v] = cand
                    order.append(v)
                elif dist[v] == dist[u] + 1 and elem[v] != cand:
                    raise ConsistencyError("two shortest galleries disagree")
        if len(dist) != len(cx.chambers):
            raise ConsistencyError("chamber graph is not connected")
        table.append(tuple(elem[v] for v in range(len(cx.chambers))))
    return tuple(table)


def weyl_distance(cx: FlagComplex, c: Chamber, d: Chamber) -> WeylElement:
    """Weyl-group-valued distance between two chambers."""
    table = _distance_table(cx.name)
    elements = enumerate_weyl(cx.datum)
    return elements[table[cx.chamber_index(c)][cx.chamber_index(d)]]


def opposite_count(cx: FlagComplex, c: Chamber) -> int:
    """Number of chambers at maximal Weyl distance from c."""
    table = _distance_table(cx.name)
    elements = enumerate_weyl(cx.datum)
    w0 = longest_element(cx.weyl_label)
    row = table[cx.chamber_index(c)]
    return sum(1 for idx in row if elements[idx] == w0)


def opposite_pairs(cx: FlagComplex) -> list[tuple[int, int]]:
    """All ordered chamber-index pairs at maximal distance."""
    table = _distance_table(cx.name)
    elements = enumerate_weyl(cx.datum)
    w0 = longest_element(cx.weyl_label)
    return [
        (i, j)
        for i in range(len(cx.chambers))
        for j in range(len(cx.chambers))
        if elements[table[i][j]] == w0
    ]


def double_opposite_count(cx: FlagComplex, c1: Chamber, c2: Chamber) -> int:
    """Chambers opposite both members of an opposite pair."""
    w0 = longest_element(cx.weyl_label)
    if weyl_distance(cx, c1, c2) != w0:
        raise InputError("chambers are not opposite")
    table = _distance_table(cx.name)
    elements = enumerate_weyl(cx.datum)
    i1, i2 = cx.chamber_index(c1), cx.chamber_index(c2)
    target = next(i for i, e in enumerate(elements) if e == w0)
    return sum(
        1
        for j in range(len(cx.chambers))
        if table[i1][j] == target and table[i2][j] == target
    )


def projection_uniqueness(cx: FlagComplex, c1: Chamber, c2: Chamber) -> bool:
    """In each panel of c2, exactly one chamber is nearer to c1; q stay opposite.

    Requires c1 and c2 opposite. The nearer chamber is the panel's projection
    toward c1 and witnesses the gate property used in the noise bound.
    """
    w0 = longest_element(cx.weyl_label)
    if weyl_distance(cx, c1, c2) != w0:
        raise InputError("chambers are not opposite")
    table = _distance_table(cx.name)
    elements = enumerate_weyl(cx.datum)
    adj = _adjacency(cx)
    i1, i2 = cx.chamber_index(c1), cx.chamber_index(c2)
    top = w0.length
    for gen in (1, 2):
        panel = [j for j, g in adj[i2] if g == gen] + [i2]
        lengths = sorted(elements[table[i1][j]].length for j in panel)
        if lengths != [top - 1] + [top] * cx.q:
            return False
    return True


def _pair_census(cx: FlagComplex, pair: tuple[int, int]) -> tuple[int, bool]:
    i, j = pair
    c1, c2 = cx.chambers[i], cx.chambers[j]
    return double_opposite_count(cx, c1, c2), projection_uniqueness(cx, c1, c2)


def noise_summary(cx: FlagComplex, map_fn=map) -> dict:
    """Opposition census: per-chamber counts, pair minima, and the q bounds.

    ``map_fn`` may be an executor's ``map``; results are keyed by pair, so the
    summary is identical for any worker count.
    """
    w0 = longest_element(cx.weyl_label)
    expected_opposite = cx.q ** w0.length
    lower = (cx.q - 1) ** w0.length
    per_chamber = [opposite_count(cx, c) for c in cx.chambers]
    pairs = opposite_pairs(cx)
    unordered = sorted((i, j) for i, j in pairs if i < j)
    census = list(map_fn(functools.partial(_pair_census, cx), unordered))
    double_counts = {pair: count for pair, (count, _) in zip(unordered, census)}
    projections_ok = all(ok for _, ok in census)
    return {
        "name": cx.name,
        "weyl_type": cx.weyl_label,
        "q": cx.q,
        "chambers": len(cx.chambers),
        "diameter": w0.length,
        "expected_opposite": expected_opposite,
        "per_chamber_opposite": per_chamber,
        "opposite_count_ok": all(c == expected_opposite for c in per_chamber),
        "ordered_opposite_pairs": len(pairs),
        "double_opposite_min": min(double_counts.values()),
        "double_opposite_max": max(double_counts.values()),
        "double_opposite_lower_bound": lower,
        "double_opposite_ok": all(v >= lower for v in double_counts.values()),
        "projection_uniqueness_ok": projections_ok,
        "pair_counts": {f"{i},{j}": v for (i, j), v in sorted(double_counts.items())},
    }


def pair_counts_csv(cx: FlagComplex, summary: dict | None = None) -> str:
    """CSV of double-opposite counts for every unordered opposite pair."""
    if summary is None:
        summary = noise_summary(cx)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["chamber_1", "chamber_2", "double_opposite_count"])
    for key, value in summary["pair_counts"].items():
        i, j = key.split(",")
        writer.writerow([i, j, value])
    return buf.getvalue()
