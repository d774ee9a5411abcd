import itertools
import json
from math import comb, factorial

import pytest

from lvelab.errors import CapacityError, DomainError
from lvelab.perm_algebra import IntegerPartition
from lvelab.ribbon_maps import (
    Quadrangulation,
    RibbonMap,
    aut_order,
    automorphism_discrepancies,
    census,
    enumerate_maps,
    euler_characteristic,
    faces,
    from_quadrangulation,
    genus,
    labeled_code,
    to_medial,
    to_quadrangulation,
)

CILIATED_VERTEX = RibbonMap([[1]], [], [1])
PLANAR_LOOP = RibbonMap([[1, 2]], [(1, 2)])
PLANAR_LOOP_CILIATED = RibbonMap([[1, 2, 3]], [(1, 2)], [3])
INTERLEAVED = RibbonMap([[1, 2, 3, 4]], [(1, 3), (2, 4)])
INTERLEAVED_CILIATED = RibbonMap([[1, 2, 3, 4, 5]], [(1, 3), (2, 4)], [5])
EDGE_TREE = RibbonMap([[1, 3], [2]], [(1, 2)], [3])
DOUBLE_EDGE = RibbonMap([[1, 2], [3, 4]], [(1, 3), (2, 4)])


def all_maps(n_max, k_max):
    for n in range(n_max + 1):
        for k in range(min(k_max, n + 1) + 1):
            for m, aut in enumerate_maps(n, k):
                yield n, k, m, aut


def test_faces_examples():
    fs = faces(CILIATED_VERTEX)
    assert fs.n_faces == 1 and len(fs.broken) == 1 and fs.cilia_per_face == (1,)
    fs = faces(PLANAR_LOOP)
    assert fs.n_faces == 2 and not fs.broken
    assert faces(INTERLEAVED).n_faces == 1


def test_genus_examples():
    assert genus(CILIATED_VERTEX) == 0
    assert euler_characteristic(CILIATED_VERTEX) == 1
    assert genus(INTERLEAVED_CILIATED) == 1
    assert euler_characteristic(INTERLEAVED_CILIATED) == -1
    assert genus(EDGE_TREE) == 0


def test_aut_examples():
    assert aut_order(CILIATED_VERTEX) == 1
    assert aut_order(DOUBLE_EDGE) == 4
    assert aut_order(PLANAR_LOOP_CILIATED) == 1


def test_invalid_maps():
    with pytest.raises(DomainError):
        RibbonMap([[1, 2], [3, 4]], [(1, 2), (3, 4)])  # disconnected
    with pytest.raises(DomainError):
        RibbonMap([[1, 2, 3]], [(1, 2)], [3, 4])
    with pytest.raises(DomainError):
        RibbonMap([[1, 2]], [(1, 2), (2, 1)])
    with pytest.raises(DomainError):
        RibbonMap([[1, 2, 3, 4]], [(1, 2)], [3, 4])  # two cilia on a vertex


def test_json_roundtrip():
    obj = json.loads(json.dumps(INTERLEAVED_CILIATED.to_json()))
    assert set(obj) >= {"rotation", "pairing", "cilia"}
    assert RibbonMap.from_json(obj) == INTERLEAVED_CILIATED


def test_isomorphism_ignores_labels():
    relabeled = RibbonMap([[20, 30, 10]], [(10, 20)], [30])
    assert relabeled.is_isomorphic(PLANAR_LOOP_CILIATED)
    assert not PLANAR_LOOP.is_isomorphic(PLANAR_LOOP_CILIATED)


def test_enumeration_examples():
    assert len(enumerate_maps(1, 1, genus=0)) == 2
    assert len(enumerate_maps(2, 1, genus=0)) == 9
    assert len(enumerate_maps(2, 1, genus=1)) == 1


@pytest.mark.parametrize("n", range(6))
def test_planar_rooted_counts(n):
    expected = 2 * 3 ** n * comb(2 * n, n) // ((n + 1) * (n + 2))
    assert len(enumerate_maps(n, 1, genus=0)) == expected


def test_enumeration_capacity():
    with pytest.raises(CapacityError):
        enumerate_maps(7, 1)
    with pytest.raises(CapacityError):
        enumerate_maps(1, 3)


def test_partition_filter():
    total = len(enumerate_maps(3, 2))
    parts = len(enumerate_maps(3, 2, partition=(1, 1))) + len(enumerate_maps(3, 2, partition=(2,)))
    assert parts == total
    assert enumerate_maps(3, 2, partition=IntegerPartition.of([3])) == []


def test_enumeration_parallel_matches_serial():
    a = [m.canonical_code() for m, _ in enumerate_maps(4, 1)]
    b = [m.canonical_code() for m, _ in enumerate_maps(4, 1, workers=2)]
    assert a == b


def test_representatives_are_distinct_and_canonical():
    for n, k, m, aut in all_maps(4, 2):
        assert m.canonical() == m
    codes = [m.canonical_code() for _, _, m, _ in all_maps(4, 2)]
    assert len(codes) == len(set(codes))


def test_euler_relation_for_every_map():
    for n, k, m, aut in all_maps(4, 3):
        fs = faces(m)
        g = genus(m)
        assert g >= 0
        assert euler_characteristic(m) == 2 - 2 * g - len(fs.broken)
        assert sum(fs.cilia_per_face) == k


def test_aut_matches_bruteforce():
    # brute force over dart relabelings preserving sigma, alpha and cilia
    for n, k, m, aut in all_maps(3, 1):
        darts = m.darts
        count = 0
        for p in itertools.permutations(darts):
            f = dict(zip(darts, p))
            if all(f[m.sigma(x)] == m.sigma(f[x]) and f[m.alpha(x)] == m.alpha(f[x]) for x in darts):
                count += 1
        assert count == aut


def test_labelings_times_aut():
    for n, k, m, aut in all_maps(3, 2):
        if k == 0:
            continue
        v = m.n_vertices
        codes = {labeled_code(m, p) for p in itertools.permutations(range(v))}
        assert len(codes) * aut == factorial(v)


def test_census_rows():
    rows = census(2, 1)
    planar = sum(r["count"] for r in rows if r["n"] == 2 and r["k"] == 1 and r["g"] == 0)
    assert planar == 9
    assert all(set(r) == {"n", "k", "g", "B", "partition", "count"} for r in rows)


def test_automorphism_discrepancies_reported():
    rows = automorphism_discrepancies(2, 1)
    for r in rows:
        assert r["rotation_aut"] != r["adjacency_aut"]
    # the bare planar loop: rotation group of order 2, adjacency group trivial
    assert any(r["n"] == 1 and r["k"] == 0 for r in rows)


def test_quadrangulation_example():
    q = to_quadrangulation(PLANAR_LOOP_CILIATED)
    assert q.n_faces == 1
    assert len(q.marked) == 1
    assert genus(q.map) == 0
    assert all(len(f) == 4 for f in faces(q.map).faces)


def test_quadrangulation_roundtrip():
    for n, k, m, aut in all_maps(3, 1):
        if n == 0:
            continue
        q = to_quadrangulation(m)
        assert q.n_faces == n
        assert len(q.marked) == k
        assert from_quadrangulation(q).is_isomorphic(m)


def test_quadrangulation_genus():
    for n, k, m, aut in all_maps(4, 1):
        if n:
            assert genus(to_quadrangulation(m).map) == genus(m)


def test_quadrangulation_errors():
    with pytest.raises(DomainError):
        to_quadrangulation(CILIATED_VERTEX)
    q = to_quadrangulation(PLANAR_LOOP_CILIATED)
    with pytest.raises(DomainError):
        from_quadrangulation(Quadrangulation(q.map, frozenset(range(len(q.map.rotation))), q.marked))


LEG = {"J": -1, "Jdag": -2}


def _canon_edges(edges, nv):
    """Minimum edge list under vertex relabeling and half-turns of each vertex."""
    best = None
    for p in itertools.permutations(range(nv)):
        for shifts in itertools.product((0, 2), repeat=nv):
            def f(s):
                return s if s[0] < 0 else (p[s[0]], (s[1] + shifts[s[0]]) % 4)
            key = tuple(sorted((f(a), f(b)) for a, b in edges))
            if best is None or key < best:
                best = key
    return best


def _medial_canon(med):
    slot = {}
    for v, cyc in enumerate(med.vertices):
        for pos, s in enumerate(cyc):
            slot[s] = (v, pos)
    for s in med.legs:
        slot[s] = (LEG[s[0]], 0)
    return _canon_edges([(slot[a], slot[b]) for a, b in med.edges], len(med.vertices))


def _all_medials(nv):
    """Connected alternating graphs with nv vertices and one J, J-dagger leg pair."""
    tails = [(v, pos) for v in range(nv) for pos in (1, 3)] + [(LEG["J"], 0)]
    heads = [(v, pos) for v in range(nv) for pos in (0, 2)] + [(LEG["Jdag"], 0)]
    out = set()
    for img in itertools.permutations(heads):
        edges = list(zip(tails, img))
        parent = list(range(nv + 1))

        def find(i):
            while parent[i] != i:
                i = parent[i]
            return i

        for a, b in edges:
            parent[find(max(a[0], -1) % (nv + 1))] = find(max(b[0], -1) % (nv + 1))
        if len({find(i) for i in range(nv + 1)}) == 1:
            out.add(_canon_edges(edges, nv))
    return out


def test_medial_single_ciliated_vertex():
    med = to_medial(CILIATED_VERTEX)
    assert med.vertices == ()
    assert med.edges == ((("J", 1), ("Jdag", 1)),)
    assert set(med.legs) == {("J", 1), ("Jdag", 1)}


def test_medial_planar_loop():
    med = to_medial(PLANAR_LOOP)
    assert len(med.vertices) == 1 and not med.legs
    assert len(med.edges) == 2


@pytest.mark.parametrize("n", [1, 2])
def test_medial_classes_match_maps(n):
    maps = [m for m, _ in enumerate_maps(n, 1)]
    images = {_medial_canon(to_medial(m)) for m in maps}
    assert len(images) == len(maps)
    assert images == _all_medials(n)


def test_medial_degrees():
    for n, k, m, aut in all_maps(3, 2):
        med = to_medial(m)
        assert len(med.vertices) == n
        assert len(med.legs) == 2 * k
        tails = [a for a, _ in med.edges]
        heads = [b for _, b in med.edges]
        assert len(set(tails)) == len(tails) and len(set(heads)) == len(heads)
