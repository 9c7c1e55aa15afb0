"""Finite homogeneous-tree balls: spheres, atoms, balanced stars, densities.

Vertices are digit strings: the root is "", a level-1 vertex is one letter in
{0,...,q}, and each deeper letter is in {1,...,q}. Every non-root vertex
therefore has exactly q children inside the ball and the root has q + 1.
"""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Sequence

from .errors import ConsistencyError, InputError


@dataclass(frozen=True)
class TreeBall:
    """Ball of radius `depth` in the (q+1)-regular tree, 2 <= q <= 9."""

    q: int
    depth: int

    def __post_init__(self) -> None:
        if not 2 <= self.q <= 9:
            raise InputError("q must be between 2 and 9 (single-digit vertex codes)")
        if self.depth < 1:
            raise InputError("depth must be at least 1")

    def root_letters(self) -> str:
        return "".join(str(d) for d in range(self.q + 1))

    def deep_letters(self) -> str:
        return "".join(str(d) for d in range(1, self.q + 1))

    def validate(self, code: str) -> str:
        if len(code) > self.depth:
            raise InputError(f"code {code!r} deeper than ball depth {self.depth}")
        if code and code[0] not in self.root_letters():
            raise InputError(f"code {code!r} has invalid first letter")
        for ch in code[1:]:
            if ch not in self.deep_letters():
                raise InputError(f"code {code!r} has invalid letter {ch!r}")
        return code

    def level(self, code: str) -> int:
        return len(code)

    def sphere_size(self, n: int) -> int:
        if n < 0 or n > self.depth:
            raise InputError(f"level {n} outside ball")
        if n == 0:
            return 1
        return (self.q + 1) * self.q ** (n - 1)

    def sphere(self, n: int) -> tuple[str, ...]:
        """All level-n codes in lexicographic order."""
        if n < 0 or n > self.depth:
            raise InputError(f"level {n} outside ball")
        if n == 0:
            return ("",)
        tails = product(self.deep_letters(), repeat=n - 1)
        out = ["".join((first,) + tail) for first, tail in product(self.root_letters(), tails)]
        out.sort()
        if len(out) != self.sphere_size(n):
            raise ConsistencyError("sphere enumeration size mismatch")
        return tuple(out)

    def distance(self, x: str, y: str) -> int:
        """Graph distance: levels minus twice the longest common prefix."""
        self.validate(x)
        self.validate(y)
        m = 0
        for a, b in zip(x, y):
            if a != b:
                break
            m += 1
        return (len(x) - m) + (len(y) - m)

    def children(self, v: str, k: int = 1) -> tuple[str, ...]:
        """All descendants exactly k levels below v, in lexicographic order."""
        self.validate(v)
        if k < 0 or len(v) + k > self.depth:
            raise InputError("descendant level outside ball")
        if k == 0:
            return (v,)
        if v == "":
            return self.sphere(k)
        tails = product(self.deep_letters(), repeat=k)
        return tuple(v + "".join(t) for t in tails)

    def parent_at(self, v: str, level: int) -> str:
        if level > len(v):
            raise InputError("ancestor level above vertex level")
        return v[:level]


@dataclass(frozen=True)
class AtomPartition:
    """Partition of the level-n sphere into descendant cones of level n - t."""

    ball: TreeBall
    n: int
    t: int
    atoms: tuple[tuple[str, tuple[str, ...]], ...]  # (projection vertex, members)

    def projection(self, x: str) -> str:
        return x[: self.n - self.t]


def atoms(ball: TreeBall, n: int, t: int) -> AtomPartition:
    """Cones C(v, t) over v in S_{n-t}; sizes q^t (and (q+1)q^{t-1} for v = root)."""
    if not 0 < t <= n <= ball.depth:
        raise InputError("need 0 < t <= n <= depth")
    parts = tuple((v, ball.children(v, t)) for v in ball.sphere(n - t))
    total = sum(len(members) for _, members in parts)
    if total != ball.sphere_size(n):
        raise ConsistencyError("atoms do not cover the sphere")
    return AtomPartition(ball=ball, n=n, t=t, atoms=parts)


class VertexSet:
    """A set of vertices stored per level, each level sorted lexicographically."""

    def __init__(self, ball: TreeBall, vertices: Iterable[str] = ()):
        self.ball = ball
        by_level: dict[int, set[str]] = {}
        for v in vertices:
            ball.validate(v)
            by_level.setdefault(len(v), set()).add(v)
        self._levels: dict[int, tuple[str, ...]] = {
            n: tuple(sorted(vs)) for n, vs in sorted(by_level.items())
        }
        self._lookup: dict[int, frozenset[str]] = {
            n: frozenset(vs) for n, vs in self._levels.items()
        }

    @classmethod
    def full_spheres(cls, ball: TreeBall, levels: Iterable[int]) -> "VertexSet":
        out = cls(ball)
        out._levels = {n: ball.sphere(n) for n in sorted(set(levels))}
        out._lookup = {n: frozenset(vs) for n, vs in out._levels.items()}
        return out

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(self._levels)

    def at_level(self, n: int) -> tuple[str, ...]:
        return self._levels.get(n, ())

    def count(self, n: int) -> int:
        return len(self._levels.get(n, ()))

    def __contains__(self, v: str) -> bool:
        return v in self._lookup.get(len(v), frozenset())

    def __len__(self) -> int:
        return sum(len(vs) for vs in self._levels.values())

    def __iter__(self) -> Iterator[str]:
        for n in self._levels:
            yield from self._levels[n]

    def union(self, other: "VertexSet") -> "VertexSet":
        if other.ball != self.ball:
            raise InputError("vertex sets live in different balls")
        return VertexSet(self.ball, list(self) + list(other))

    def to_json(self) -> dict:
        return {
            "q": self.ball.q,
            "depth": self.ball.depth,
            "levels": {str(n): list(self._levels[n]) for n in self._levels},
        }

    @classmethod
    def from_json(cls, payload: dict) -> "VertexSet":
        for key in ("q", "depth", "levels"):
            if key not in payload:
                raise InputError(f"vertex-set JSON missing field {key!r}")
        if not isinstance(payload["levels"], dict):
            raise InputError("vertex-set field 'levels' must be an object")
        ball = TreeBall(q=int(payload["q"]), depth=int(payload["depth"]))
        vertices: list[str] = []
        for key, codes in payload["levels"].items():
            try:
                n = int(key)
            except ValueError as exc:
                raise InputError(f"level key {key!r} is not an integer") from exc
            for code in codes:
                if not isinstance(code, str) or len(code) != n:
                    raise InputError(f"code {code!r} does not match level {n}")
                vertices.append(code)
        return cls(ball, vertices)


def load_vertex_set(path: str) -> VertexSet:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed vertex-set JSON: {exc}") from exc
    return VertexSet.from_json(payload)


@dataclass(frozen=True)
class DensityReport:
    """Per-level densities a_n and their running suffix maxima b_n."""

    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]
    estimate: Fraction

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["n", "a_n", "b_n"])
        for n, (an, bn) in enumerate(zip(self.a, self.b)):
            writer.writerow([n, str(an), str(bn)])
        return buf.getvalue()


def upper_density(ball: TreeBall, xs: VertexSet) -> DensityReport:
    """Sphere densities up to the ball depth; estimate is the last suffix max."""
    a = [Fraction(xs.count(n), ball.sphere_size(n)) for n in range(ball.depth + 1)]
    b = list(a)
    for n in range(len(b) - 2, -1, -1):
        b[n] = max(b[n], b[n + 1])
    return DensityReport(a=tuple(a), b=tuple(b), estimate=b[-1])


def _prefix_counts(codes: Sequence[str], length: int) -> Counter:
    return Counter(code[:length] for code in codes)


def equidistant_pair_exists(
    ball: TreeBall, xs: VertexSet, t: int, level: int | None = None
) -> tuple[str, str] | None:
    """Lexicographically first same-level pair at distance exactly 2t, if any."""
    if t < 1:
        raise InputError("t must be at least 1")
    levels = [level] if level is not None else [n for n in xs.levels if n >= t]
    for n in levels:
        if n < t or n > ball.depth:
            if level is not None:
                raise InputError(f"level {n} cannot host distance {2 * t}")
            continue
        first_of_group: dict[str, str] = {}
        for code in xs.at_level(n):
            prefix = code[: n - t]
            head = first_of_group.get(prefix)
            if head is None:
                first_of_group[prefix] = code
            elif head[n - t] != code[n - t]:
                return head, code
    return None


@dataclass(frozen=True)
class StarSpec:
    """Distance profile (t_1 < ... < t_k) and tier sizes (r_1, ..., r_k)."""

    t: tuple[int, ...]
    r: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.t or len(self.t) != len(self.r):
            raise InputError("t and r must be nonempty and of equal length")
        if any(ti < 1 for ti in self.t) or any(self.t[i] >= self.t[i + 1] for i in range(len(self.t) - 1)):
            raise InputError("t must be strictly increasing and positive")
        if any(ri < 1 for ri in self.r):
            raise InputError("multiplicities must be positive")

    @property
    def k(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class BalancedStar:
    """Center plus tiers Y_i on one sphere with d(center, Y_i) = 2 t_i."""

    spec: StarSpec
    level: int
    center: str
    tiers: tuple[tuple[str, ...], ...]

    def all_vertices(self) -> tuple[str, ...]:
        return (self.center,) + tuple(v for tier in self.tiers for v in tier)


def verify_star(ball: TreeBall, star: BalancedStar) -> bool:
    """Recheck every defining distance of a balanced star from scratch."""
    spec = star.spec
    vs = star.all_vertices()
    if len(set(vs)) != len(vs):
        return False
    if any(len(v) != star.level for v in vs):
        return False
    for i, tier in enumerate(star.tiers):
        if len(tier) != spec.r[i]:
            return False
        if any(ball.distance(star.center, y) != 2 * spec.t[i] for y in tier):
            return False
    for i in range(len(star.tiers)):
        for j in range(i + 1, len(star.tiers)):
            for x in star.tiers[i]:
                for y in star.tiers[j]:
                    if ball.distance(x, y) != 2 * spec.t[j]:
                        return False
    return True


def find_balanced_star(ball: TreeBall, xs: VertexSet, spec: StarSpec) -> BalancedStar | None:
    """Complete search for a balanced star inside one sphere of xs.

    Scans levels in increasing order and candidate centers lexicographically;
    tier members are the lexicographically smallest eligible vertices, so the
    result is deterministic. Uses prefix counts: a center v0 at level n admits
    r_i vertices at distance 2 t_i iff at least r_i members of X_n share its
    (n - t_i)-prefix but not its (n - t_i + 1)-prefix.
    """
    for n in xs.levels:
        if n < spec.t[-1]:
            continue
        codes = xs.at_level(n)
        lengths = sorted({n - ti for ti in spec.t} | {n - ti + 1 for ti in spec.t})
        counts = {length: _prefix_counts(codes, length) for length in lengths}
        for v0 in codes:
            ok = True
            for ti, ri in zip(spec.t, spec.r):
                m = n - ti
                divergent = counts[m][v0[:m]] - counts[m + 1][v0[: m + 1]]
                if divergent < ri:
                    ok = False
                    break
            if not ok:
                continue
            tiers = []
            for ti, ri in zip(spec.t, spec.r):
                m = n - ti
                eligible = [y for y in codes if y[:m] == v0[:m] and y[m] != v0[m]]
                tiers.append(tuple(eligible[:ri]))
            star = BalancedStar(spec=spec, level=n, center=v0, tiers=tuple(tiers))
            if not verify_star(ball, star):
                raise ConsistencyError("constructed star failed re-verification")
            return star
    return None


def brute_force_star_search(ball: TreeBall, xs: VertexSet, spec: StarSpec) -> BalancedStar | None:
    """Independent all-pairs oracle with the same deterministic tie-breaking."""
    for n in xs.levels:
        if n < spec.t[-1]:
            continue
        codes = xs.at_level(n)
        for v0 in codes:
            tiers = []
            for ti, ri in zip(spec.t, spec.r):
                members = [y for y in codes if ball.distance(v0, y) == 2 * ti][:ri]
                if len(members) < ri:
                    tiers = None
                    break
                tiers.append(tuple(members))
            if tiers is not None:
                return BalancedStar(spec=spec, level=n, center=v0, tiers=tuple(tiers))
    return None


def classify_branching_type(ball: TreeBall, xs: VertexSet, x: str, s: int, r: int) -> str:
    """"A" if at least two children of x head cones holding >= r members of X.

    Cones are read s - 1 levels below the children, so members live at
    level(x) + s; requires s >= 1 and the target level inside the ball.
    """
    ball.validate(x)
    if s < 1 or len(x) + s > ball.depth:
        raise InputError("need 1 <= s with level(x) + s inside the ball")
    if r < 1:
        raise InputError("r must be positive")
    n = len(x) + s
    counts = _prefix_counts(xs.at_level(n), len(x) + 1)
    heavy = sum(
        1 for child in ball.children(x, 1) if counts[child] >= r
    )
    return "A" if heavy >= 2 else "B"


@dataclass(frozen=True)
class AtomHitReport:
    """Proportion of small atoms inside one cone that meet X."""

    hypothesis_ok: bool
    message: str
    atoms_total: int
    atoms_meeting: int
    proportion: Fraction
    bound: Fraction
    ok: bool


def check_atom_hit_bound(
    ball: TreeBall, xs: VertexSet, t1: int, v: str, t: int, n: int
) -> AtomHitReport:
    """Check the sparse-atom bound inside the cone C(v, t) at level n.

    If X has no same-level pair at distance 2 t1 on level n, then among the
    level-(n - t1 + 1) cones partitioning C(v, t) at level n, at most a 1/q
    proportion can meet X. A failed hypothesis is reported, not raised.
    """
    if not 1 <= t1 <= t < n or n > ball.depth:
        raise InputError("need 1 <= t1 <= t < n <= depth")
    ball.validate(v)
    if len(v) != n - t:
        raise InputError(f"cone vertex must lie at level {n - t}")
    pair = equidistant_pair_exists(ball, xs, t1, level=n)
    hypothesis_ok = pair is None
    message = "" if hypothesis_ok else (
        f"hypothesis fails: pair {pair} at distance {2 * t1} on level {n}"
    )
    projections = ball.children(v, t - t1 + 1)
    counts = _prefix_counts(xs.at_level(n), n - t1 + 1)
    meeting = sum(1 for w in projections if counts[w] > 0)
    proportion = Fraction(meeting, len(projections))
    bound = Fraction(1, ball.q)
    return AtomHitReport(
        hypothesis_ok=hypothesis_ok,
        message=message,
        atoms_total=len(projections),
        atoms_meeting=meeting,
        proportion=proportion,
        bound=bound,
        ok=hypothesis_ok and proportion <= bound,
    )


def atom_hit_scan(
    ball: TreeBall, xs: VertexSet, t1: int, t: int, n: int
) -> dict[str, AtomHitReport]:
    """check_atom_hit_bound for every cone vertex at level n - t.

    The pair hypothesis and the prefix counts are level-wide, so they are
    computed once and shared; each per-cone report equals what
    check_atom_hit_bound would return for that cone.
    """
    if not 1 <= t1 <= t < n or n > ball.depth:
        raise InputError("need 1 <= t1 <= t < n <= depth")
    pair = equidistant_pair_exists(ball, xs, t1, level=n)
    hypothesis_ok = pair is None
    message = "" if hypothesis_ok else (
        f"hypothesis fails: pair {pair} at distance {2 * t1} on level {n}"
    )
    counts = _prefix_counts(xs.at_level(n), n - t1 + 1)
    bound = Fraction(1, ball.q)
    out: dict[str, AtomHitReport] = {}
    for v in ball.sphere(n - t):
        projections = ball.children(v, t - t1 + 1)
        meeting = sum(1 for w in projections if counts[w] > 0)
        proportion = Fraction(meeting, len(projections))
        out[v] = AtomHitReport(
            hypothesis_ok=hypothesis_ok,
            message=message,
            atoms_total=len(projections),
            atoms_meeting=meeting,
            proportion=proportion,
            bound=bound,
            ok=hypothesis_ok and proportion <= bound,
        )
    return out


@dataclass(frozen=True)
class DensityBoundReport:
    """Sphere-density comparison against the star-free upper bound."""

    hypothesis_ok: bool
    message: str
    lhs: Fraction
    rhs: Fraction
    ok: bool


def check_density_bound(
    ball: TreeBall, xs: VertexSet, chains: Sequence[StarSpec], n: int
) -> DensityBoundReport:
    """Compare |X at level n| / |S_n| with q^{-ell} + r q^{1 - t_{1,1}}.

    chains is the star family: ell specs sharing one multiplicity vector, with
    the largest distance of each chain below the smallest of the next. The
    bound applies when X contains no balanced star for any chain; a failed
    hypothesis is reported, not raised.
    """
    if not chains:
        raise InputError("need at least one star spec")
    r_vec = chains[0].r
    if any(spec.r != r_vec for spec in chains):
        raise InputError("all star specs must share one multiplicity vector")
    for j in range(len(chains) - 1):
        if chains[j].t[-1] >= chains[j + 1].t[0]:
            raise InputError("chain distances must be strictly staggered")
    if not chains[-1].t[-1] < n <= ball.depth:
        raise InputError("need t_max < n <= depth")

    message = ""
    hypothesis_ok = True
    for idx, spec in enumerate(chains):
        star = find_balanced_star(ball, xs, spec)
        if star is not None:
            hypothesis_ok = False
            message = f"hypothesis fails: chain {idx} has a balanced star at level {star.level}"
            break

    ell = len(chains)
    q = ball.q
    r = max(r_vec)
    lhs = Fraction(xs.count(n), ball.sphere_size(n))
    rhs = Fraction(1, q**ell) + r * Fraction(q, q ** chains[0].t[0])
    return DensityBoundReport(
        hypothesis_ok=hypothesis_ok,
        message=message,
        lhs=lhs,
        rhs=rhs,
        ok=hypothesis_ok and lhs < rhs,
    )


def one_child_filter_set(
    ball: TreeBall,
    n: int,
    blocked: Sequence[int],
    seed: int,
    keep: float = 1.0,
) -> VertexSet:
    """Level-n set with no same-level pair at distance 2t for each blocked t.

    At each level n - t (t blocked), every vertex keeps exactly one child,
    chosen by a per-prefix seeded draw, so the construction is independent of
    enumeration order. With keep == 1.0 and every blocked t < n, the sphere
    density at level n is exactly q^{-len(blocked)}; keep < 1 additionally
    thins vertices at the final level.
    """
    if n < 1 or n > ball.depth:
        raise InputError("level outside ball")
    blocked_levels = set()
    for t in blocked:
        if not 1 <= t <= n:
            raise InputError(f"blocked distance {t} incompatible with level {n}")
        blocked_levels.add(n - t)
    if not 0.0 < keep <= 1.0:
        raise InputError("keep must be in (0, 1]")

    prefixes = [""]
    for m in range(n):
        letters = ball.root_letters() if m == 0 else ball.deep_letters()
        expanded = []
        if m in blocked_levels:
            for p in prefixes:
                rnd = random.Random(f"{seed}:child:{p}")
                expanded.append(p + rnd.choice(letters))
        else:
            for p in prefixes:
                expanded.extend(p + ch for ch in letters)
        prefixes = expanded
    if keep < 1.0:
        prefixes = [
            v for v in prefixes if random.Random(f"{seed}:keep:{v}").random() < keep
        ]
    return VertexSet(ball, prefixes)


def derived_set(ball: TreeBall, xs: VertexSet, t: int) -> VertexSet:
    """Members of X at distance exactly t from some other member of X."""
    if t < 1:
        raise InputError("t must be at least 1")
    codes = list(xs)
    hits: set[str] = set()
    for i, x in enumerate(codes):
        for y in codes[i + 1 :]:
            if ball.distance(x, y) == t:
                hits.add(x)
                hits.add(y)
    return VertexSet(ball, hits)


@dataclass(frozen=True)
class WeightedTree:
    """Rooted tree with positive integer edge-weights to each non-root vertex.

    parents[j - 1] is the parent index of vertex j (vertices 0..N, root 0) and
    must be smaller than j; weights[j - 1] is the weight wt(j).
    """

    parents: tuple[int, ...]
    weights: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.parents) != len(self.weights) or not self.parents:
            raise InputError("parents and weights must be nonempty and of equal length")
        for j, p in enumerate(self.parents, start=1):
            if not 0 <= p < j:
                raise InputError(f"parent of vertex {j} must be an earlier index")
        if any(w < 1 for w in self.weights):
            raise InputError("weights must be positive")

    @property
    def size(self) -> int:
        return len(self.parents) + 1

    def depth(self, j: int) -> int:
        d = 0
        while j != 0:
            j = self.parents[j - 1]
            d += 1
        return d

    def check_well_ordered(self) -> None:
        """Weights must increase strictly with depth across the whole tree."""
        by_depth: dict[int, list[int]] = {}
        for j in range(1, self.size):
            by_depth.setdefault(self.depth(j), []).append(self.weights[j - 1])
        depths = sorted(by_depth)
        for d1, d2 in zip(depths, depths[1:]):
            if max(by_depth[d1]) >= min(by_depth[d2]):
                raise InputError("weights do not increase strictly with depth")

    def star_spec(self) -> StarSpec:
        self.check_well_ordered()
        tally = Counter(self.weights)
        ts = tuple(sorted(tally))
        return StarSpec(t=ts, r=tuple(tally[t] for t in ts))


@dataclass(frozen=True)
class Embedding:
    """Assignment of weighted-tree vertices to tree-ball vertices."""

    tree: WeightedTree
    star: BalancedStar
    assignment: tuple[str, ...]  # images of vertices 0..N


def embed_weighted_tree(ball: TreeBall, xs: VertexSet, tree: WeightedTree) -> Embedding | None:
    """Embed a well-ordered weighted tree into X on one sphere, if possible.

    Vertex j goes to distance 2 wt(j) from the image of the root; because the
    weights are well-ordered, d(image_i, image_j) = 2 wt(j) holds for every
    pair with depth(i) < depth(j), regardless of the tree's edge structure.
    """
    spec = tree.star_spec()
    star = find_balanced_star(ball, xs, spec)
    if star is None:
        return None
    pools = {t: list(tier) for t, tier in zip(spec.t, star.tiers)}
    assignment = [star.center]
    for j in range(1, tree.size):
        assignment.append(pools[tree.weights[j - 1]].pop(0))
    emb = Embedding(tree=tree, star=star, assignment=tuple(assignment))
    if not verify_embedding(ball, emb):
        raise ConsistencyError("embedding failed distance re-verification")
    return emb


def verify_embedding(ball: TreeBall, emb: Embedding) -> bool:
    """Recheck d(v_i, v_j) = 2 wt(j) whenever depth(i) < depth(j)."""
    tree = emb.tree
    depths = [tree.depth(j) for j in range(tree.size)]
    for j in range(1, tree.size):
        for i in range(tree.size):
            if depths[i] < depths[j]:
                if ball.distance(emb.assignment[i], emb.assignment[j]) != 2 * tree.weights[j - 1]:
                    return False
    return True
