"""Tree balls, atoms, balanced stars, density bounds, and embeddings."""

import json
import random
from collections import deque
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from building_ramsey.errors import ConsistencyError, InputError
from building_ramsey.tree_lab import (
    StarSpec,
    TreeBall,
    VertexSet,
    WeightedTree,
    atom_hit_scan,
    atoms,
    brute_force_star_search,
    check_atom_hit_bound,
    check_density_bound,
    classify_branching_type,
    derived_set,
    embed_weighted_tree,
    equidistant_pair_exists,
    find_balanced_star,
    load_vertex_set,
    one_child_filter_set,
    upper_density,
    verify_embedding,
    verify_star,
)


def bfs_distances(ball: TreeBall, source: str) -> dict[str, int]:
    """Graph-edge breadth-first search, independent of the code arithmetic."""
    adjacency: dict[str, list[str]] = {}
    stack = [""]
    while stack:
        v = stack.pop()
        adjacency.setdefault(v, [])
        if len(v) < ball.depth:
            for child in ball.children(v, 1):
                adjacency[v].append(child)
                adjacency.setdefault(child, []).append(v)
                stack.append(child)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def random_vertex_set(ball: TreeBall, rng: random.Random, levels, per_level) -> VertexSet:
    picked = []
    for n in levels:
        sphere = ball.sphere(n)
        picked.extend(rng.sample(sphere, min(per_level, len(sphere))))
    return VertexSet(ball, picked)


def test_sphere_sizes_match_bfs():
    for q in (2, 3):
        ball = TreeBall(q=q, depth=5)
        dist = bfs_distances(ball, "")
        for n in range(6):
            assert ball.sphere_size(n) == sum(1 for d in dist.values() if d == n)
            assert len(ball.sphere(n)) == ball.sphere_size(n)


def test_distance_matches_bfs_exhaustively():
    ball = TreeBall(q=2, depth=4)
    vertices = [v for n in range(5) for v in ball.sphere(n)]
    for x in vertices:
        oracle = bfs_distances(ball, x)
        for y in vertices:
            assert ball.distance(x, y) == oracle[y]


@given(st.integers(2, 4), st.data())
def test_distance_is_a_metric(q, data):
    ball = TreeBall(q=q, depth=6)
    levels = st.integers(0, 6)
    pick = lambda: data.draw(levels).__rmul__(1)
    def vertex():
        n = data.draw(levels)
        return data.draw(st.sampled_from(ball.sphere(n)))
    x, y, z = vertex(), vertex(), vertex()
    assert ball.distance(x, y) == ball.distance(y, x)
    assert (ball.distance(x, y) == 0) == (x == y)
    assert ball.distance(x, z) <= ball.distance(x, y) + ball.distance(y, z)


def test_rank_one_double_distance_exhaustive():
    """Divergent descendants: d(x1, x2) = d(x1, z) + d(z, x2), q=2, depth 6."""
    ball = TreeBall(q=2, depth=6)
    for zn in range(5):
        for z in ball.sphere(zn):
            kids = ball.children(z, 1)
            for i in range(len(kids)):
                for j in range(i + 1, len(kids)):
                    for x1 in ball.children(kids[i], 1) + (kids[i],):
                        for x2 in ball.children(kids[j], 1) + (kids[j],):
                            assert ball.distance(x1, x2) == ball.distance(x1, z) + ball.distance(z, x2)


def test_atom_partition_identity():
    for q in (2, 3):
        ball = TreeBall(q=q, depth=6)
        for n in range(1, 7):
            for t in range(1, n + 1):
                part = atoms(ball, n, t)
                members = [m for _, ms in part.atoms for m in ms]
                assert len(members) == len(set(members)) == ball.sphere_size(n)
                for v, ms in part.atoms:
                    expected = (q + 1) * q ** (t - 1) if v == "" else q**t
                    assert len(ms) == expected


def test_atoms_validates_range():
    ball = TreeBall(q=2, depth=4)
    with pytest.raises(InputError):
        atoms(ball, 5, 1)
    with pytest.raises(InputError):
        atoms(ball, 3, 0)


def test_vertex_set_json_roundtrip(tmp_path):
    ball = TreeBall(q=2, depth=5)
    xs = VertexSet(ball, ["01", "02", "111", ""])
    payload = xs.to_json()
    again = VertexSet.from_json(payload)
    assert list(again) == list(xs)
    path = tmp_path / "set.json"
    path.write_text(json.dumps(payload))
    assert list(load_vertex_set(str(path))) == list(xs)


def test_vertex_set_json_errors_name_fields(tmp_path):
    with pytest.raises(InputError, match="depth"):
        VertexSet.from_json({"q": 2, "levels": {}})
    with pytest.raises(InputError, match="levels"):
        VertexSet.from_json({"q": 2, "depth": 3, "levels": [1]})
    with pytest.raises(InputError, match="not an integer"):
        VertexSet.from_json({"q": 2, "depth": 3, "levels": {"x": []}})
    with pytest.raises(InputError, match="does not match level"):
        VertexSet.from_json({"q": 2, "depth": 3, "levels": {"2": ["011"]}})
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(InputError, match="malformed"):
        load_vertex_set(str(path))


def test_vertex_set_rejects_codes_outside_ball():
    ball = TreeBall(q=2, depth=3)
    with pytest.raises(InputError):
        VertexSet(ball, ["0123"])
    with pytest.raises(InputError):
        VertexSet(ball, ["31"])  # deep letter out of range


def test_upper_density_full_spheres():
    ball = TreeBall(q=2, depth=4)
    xs = VertexSet.full_spheres(ball, [2, 4])
    report = upper_density(ball, xs)
    assert report.a[2] == 1 and report.a[3] == 0 and report.a[4] == 1
    assert report.b[0] == 1  # suffix maximum
    assert report.estimate == report.b[-1] == 1
    csv_text = report.to_csv()
    assert csv_text.splitlines()[0] == "n,a_n,b_n"
    assert len(csv_text.splitlines()) == 6


def test_equidistant_pairs_on_full_spheres():
    """Union of full spheres at n0..N admits pairs at every distance 2t, t <= N - n0."""
    ball = TreeBall(q=2, depth=6)
    n0 = 3
    xs = VertexSet.full_spheres(ball, range(n0, 7))
    for t in range(1, ball.depth - n0 + 1):
        assert equidistant_pair_exists(ball, xs, t) is not None
    assert equidistant_pair_exists(ball, xs, 1, level=n0) is not None


def test_equidistant_pair_requires_positive_t():
    ball = TreeBall(q=2, depth=4)
    xs = VertexSet.full_spheres(ball, [2])
    with pytest.raises(InputError):
        equidistant_pair_exists(ball, xs, 0)


def test_one_child_filter_blocks_distances_and_hits_exact_density():
    ball = TreeBall(q=2, depth=10)
    for seed in (0, 1, 2):
        xs = one_child_filter_set(ball, 10, [2, 3], seed=seed)
        for t in (2, 3):
            assert equidistant_pair_exists(ball, xs, t, level=10) is None
        # distances that were not blocked survive
        assert equidistant_pair_exists(ball, xs, 5, level=10) is not None
        assert Fraction(xs.count(10), ball.sphere_size(10)) == Fraction(1, 4)


def test_one_child_filter_is_seed_deterministic():
    ball = TreeBall(q=2, depth=8)
    a = one_child_filter_set(ball, 8, [3], seed=5)
    b = one_child_filter_set(ball, 8, [3], seed=5)
    c = one_child_filter_set(ball, 8, [3], seed=6)
    assert list(a) == list(b)
    assert list(a) != list(c)


def test_one_child_filter_validates():
    ball = TreeBall(q=2, depth=6)
    with pytest.raises(InputError):
        one_child_filter_set(ball, 7, [2], seed=0)
    with pytest.raises(InputError):
        one_child_filter_set(ball, 6, [7], seed=0)
    with pytest.raises(InputError):
        one_child_filter_set(ball, 6, [2], seed=0, keep=0.0)


def test_star_spec_validation():
    with pytest.raises(InputError):
        StarSpec(t=(3, 2), r=(1, 1))
    with pytest.raises(InputError):
        StarSpec(t=(2, 3), r=(1, 0))
    with pytest.raises(InputError):
        StarSpec(t=(), r=())
    spec = StarSpec(t=(2, 3), r=(2, 1))
    assert spec.k == 2


def test_find_balanced_star_on_full_sphere():
    ball = TreeBall(q=2, depth=8)
    xs = VertexSet.full_spheres(ball, [6])
    spec = StarSpec(t=(2, 3), r=(1, 1))
    star = find_balanced_star(ball, xs, spec)
    assert star is not None and star.level == 6
    assert verify_star(ball, star)
    assert star == brute_force_star_search(ball, xs, spec)


def test_find_balanced_star_absent_on_blocked_set():
    ball = TreeBall(q=2, depth=8)
    xs = one_child_filter_set(ball, 8, [2, 3], seed=9)
    spec = StarSpec(t=(2, 3), r=(1, 1))
    assert find_balanced_star(ball, xs, spec) is None
    assert brute_force_star_search(ball, xs, spec) is None


def test_star_search_matches_brute_force_on_random_sets():
    for seed in range(30):
        rng = random.Random(seed)
        depth = rng.randint(5, 9)
        ball = TreeBall(q=2, depth=depth)
        level = rng.randint(4, depth)
        xs = random_vertex_set(ball, rng, [level], rng.randint(4, 40))
        tiers = rng.randint(1, 2)
        ts = sorted(rng.sample(range(1, level + 1), tiers))
        spec = StarSpec(t=tuple(ts), r=tuple(rng.randint(1, 2) for _ in ts))
        fast = find_balanced_star(ball, xs, spec)
        slow = brute_force_star_search(ball, xs, spec)
        assert fast == slow, (seed, spec.t, spec.r)
        if fast is not None:
            assert verify_star(ball, fast)


def test_verify_star_rejects_corrupted():
    ball = TreeBall(q=2, depth=8)
    xs = VertexSet.full_spheres(ball, [6])
    star = find_balanced_star(ball, xs, StarSpec(t=(2,), r=(2,)))
    assert star is not None and verify_star(ball, star)
    broken = type(star)(
        spec=star.spec,
        level=star.level,
        center=star.tiers[0][0],
        tiers=star.tiers,
    )
    assert not verify_star(ball, broken)


def test_classify_branching_type():
    ball = TreeBall(q=2, depth=8)
    full = VertexSet.full_spheres(ball, [6])
    member = full.at_level(6)[0]
    x = member[:4]
    # a full sphere fills every cone two levels below x
    assert classify_branching_type(ball, full, x, 2, 1) == "A"
    sparse = VertexSet(ball, [member])
    assert classify_branching_type(ball, sparse, x, 2, 1) == "B"
    with pytest.raises(InputError):
        classify_branching_type(ball, full, member, 3, 1)


def test_atom_hit_scan_equals_single_cone_reference():
    ball = TreeBall(q=2, depth=9)
    xs = one_child_filter_set(ball, 9, [2], seed=4)
    scan = atom_hit_scan(ball, xs, 2, 3, 9)
    assert set(scan) == set(ball.sphere(6))
    for v in list(scan)[:40]:
        assert scan[v] == check_atom_hit_bound(ball, xs, 2, v, 3, 9)


def test_atom_hit_bound_exact_equality_case():
    ball = TreeBall(q=2, depth=10)
    xs = one_child_filter_set(ball, 10, [2], seed=0)
    scan = atom_hit_scan(ball, xs, 2, 2, 10)
    assert all(rep.hypothesis_ok and rep.ok for rep in scan.values())
    assert {rep.proportion for rep in scan.values()} == {Fraction(1, 2)}


def test_atom_hit_bound_reports_failed_hypothesis():
    ball = TreeBall(q=2, depth=8)
    xs = VertexSet.full_spheres(ball, [8])
    rep = check_atom_hit_bound(ball, xs, 2, "011", 5, 8)
    assert not rep.hypothesis_ok and "distance 4" in rep.message and not rep.ok


def test_atom_hit_bound_validates_cone_vertex():
    ball = TreeBall(q=2, depth=8)
    xs = VertexSet.full_spheres(ball, [8])
    with pytest.raises(InputError):
        check_atom_hit_bound(ball, xs, 3, "011", 2, 8)
    with pytest.raises(InputError):
        check_atom_hit_bound(ball, xs, 2, "01", 5, 8)


def test_density_bound_golden_case():
    ball = TreeBall(q=2, depth=10)
    xs = one_child_filter_set(ball, 10, [2, 3, 5, 6], seed=3)
    chains = [StarSpec(t=(2, 3), r=(1, 1)), StarSpec(t=(5, 6), r=(1, 1))]
    rep = check_density_bound(ball, xs, chains, 10)
    assert rep.hypothesis_ok and rep.ok
    assert rep.lhs == Fraction(1, 16)
    assert rep.rhs == Fraction(1, 4) + Fraction(1, 2)


def test_density_bound_reports_star_in_hypothesis():
    ball = TreeBall(q=2, depth=8)
    xs = VertexSet.full_spheres(ball, [6])
    rep = check_density_bound(ball, xs, [StarSpec(t=(2,), r=(1,))], 8)
    assert not rep.hypothesis_ok and "chain 0" in rep.message


def test_density_bound_validates_chain_structure():
    ball = TreeBall(q=2, depth=10)
    xs = VertexSet.full_spheres(ball, [10])
    with pytest.raises(InputError, match="share"):
        check_density_bound(
            ball, xs, [StarSpec(t=(2,), r=(1,)), StarSpec(t=(4,), r=(2,))], 10
        )
    with pytest.raises(InputError, match="staggered"):
        check_density_bound(
            ball, xs, [StarSpec(t=(2, 5), r=(1, 1)), StarSpec(t=(4, 6), r=(1, 1))], 10
        )
    with pytest.raises(InputError, match="depth"):
        check_density_bound(ball, xs, [StarSpec(t=(2,), r=(1,))], 11)


def test_derived_set():
    ball = TreeBall(q=2, depth=4)
    xs = VertexSet(ball, ["01", "02", "1"])
    der = derived_set(ball, xs, 2)
    assert set(der) == {"01", "02"}


def test_weighted_tree_validation_and_spec():
    with pytest.raises(InputError):
        WeightedTree(parents=(1,), weights=(2,))
    with pytest.raises(InputError):
        WeightedTree(parents=(0,), weights=(0,))
    tree = WeightedTree(parents=(0, 0, 1, 1), weights=(2, 3, 5, 6))
    tree.check_well_ordered()
    spec = tree.star_spec()
    assert spec.t == (2, 3, 5, 6) and spec.r == (1, 1, 1, 1)
    bad = WeightedTree(parents=(0, 1), weights=(3, 2))
    with pytest.raises(InputError):
        bad.check_well_ordered()


def test_embed_weighted_tree_into_full_sphere():
    ball = TreeBall(q=2, depth=12)
    xs = VertexSet.full_spheres(ball, [12])
    tree = WeightedTree(parents=(0, 0, 1, 1), weights=(2, 3, 5, 6))
    emb = embed_weighted_tree(ball, xs, tree)
    assert emb is not None
    assert verify_embedding(ball, emb)
    for j in range(1, tree.size):
        assert ball.distance(emb.assignment[0], emb.assignment[j]) == 2 * tree.weights[j - 1]


def test_embed_absent_when_distances_blocked():
    ball = TreeBall(q=2, depth=8)
    xs = one_child_filter_set(ball, 8, [2], seed=1)
    tree = WeightedTree(parents=(0,), weights=(2,))
    assert embed_weighted_tree(ball, xs, tree) is None


def test_tree_ball_validates_parameters():
    with pytest.raises(InputError):
        TreeBall(q=1, depth=3)
    with pytest.raises(InputError):
        TreeBall(q=10, depth=3)
    with pytest.raises(InputError):
        TreeBall(q=2, depth=0)
