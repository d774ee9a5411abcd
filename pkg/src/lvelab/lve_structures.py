"""LVE trees and graphs, loop-edge growth, tree covariances, Hepp sectors, BKAR.

Vertices of an :class:`LveGraph` are labelled ``1..V`` in the order of the
underlying map's rotation cycles.  Edges are referred to by their dart pairs
in the map and, for covariance and Hepp computations, by vertex-label pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import sympy

from lvelab.errors import CapacityError, DomainError
from lvelab.ribbon_maps import RibbonMap, genus as map_genus

N_MAX_TREES = 6
HEPP_MAX_EDGES = 7


# ---------------------------------------------------------------------------
# counting formulas

def count_lve_trees(n: int, k: int) -> int:
    """Number of LVE trees with ``n`` edges and ``k`` cilia.

    ``(2n+k-1)! (n+1)! / ((n+k)! (n+1-k)! k!)``; zero when ``k > n + 1``.
    The edge case ``n = k = 0`` (one bare vertex) counts as 1.
    """
    if n < 0 or k < 0:
        raise DomainError("n and k must be non-negative")
    if k > n + 1:
        return 0
    if n == 0 and k == 0:
        return 1
    num = factorial(2 * n + k - 1) * factorial(n + 1)
    den = factorial(n + k) * factorial(n + 1 - k) * factorial(k)
    q, r = divmod(num, den)
    assert r == 0
    return q


def count_lve_graphs(n_tree: int, n_loop: int, k: int) -> int:
    """Number of LVE graphs with the given tree edges, loop edges and cilia.

    ``(2n'+2n''+k-1)! (n'+1)! / ((n'+k)! 2^{n''} k! (n'+1-k)!)``.
    """
    if min(n_tree, n_loop, k) < 0:
        raise DomainError("counts must be non-negative")
    if k > n_tree + 1:
        return 0
    if n_tree == 0 and k == 0:
        if n_loop == 0:
            return 1
        raise DomainError("a single vertex without cilium has symmetric loop insertions")
    num = factorial(2 * n_tree + 2 * n_loop + k - 1) * factorial(n_tree + 1)
    den = factorial(n_tree + k) * 2 ** n_loop * factorial(k) * factorial(n_tree + 1 - k)
    q, r = divmod(num, den)
    assert r == 0
    return q


# ---------------------------------------------------------------------------
# LVE graphs

class LveGraph:
    """Ribbon graph with labelled vertices, a spanning tree and ordered loop edges."""

    __slots__ = ("map", "tree_edges", "loop_order", "_code")

    def __init__(self, map: RibbonMap, tree_edges: Iterable[Sequence[int]],
                 loop_order: Iterable[Sequence[int]] = ()):
        self.map = map
        self.tree_edges = tuple(tuple(sorted(e)) for e in tree_edges)
        self.loop_order = tuple(tuple(sorted(e)) for e in loop_order)
        self._code = None
        self._validate()

    def _validate(self):
        m = self.map
        edges = set(m.pairing)
        tree = set(self.tree_edges)
        loops = self.loop_order
        if len(tree) != len(self.tree_edges) or len(set(loops)) != len(loops):
            raise DomainError("repeated edge in tree_edges or loop_order")
        if not tree <= edges or not set(loops) <= edges or tree & set(loops):
            raise DomainError("tree and loop edges must partition the map's edges")
        if tree | set(loops) != edges:
            raise DomainError("tree and loop edges must cover all edges")
        v = m.n_vertices
        if len(tree) != v - 1:
            raise DomainError("tree_edges is not a spanning tree")
        parent = list(range(v))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.vertex_pairs(self.tree_edges):
            ra, rb = find(a - 1), find(b - 1)
            if ra == rb:
                raise DomainError("tree_edges contains a cycle")
            parent[ra] = rb

    # views --------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return self.map.n_vertices

    @property
    def n_edges(self) -> int:
        return self.map.n_edges

    @property
    def n_loops(self) -> int:
        return len(self.loop_order)

    @property
    def n_cilia(self) -> int:
        return self.map.n_cilia

    def vertex_pairs(self, edges) -> list[tuple[int, int]]:
        """Vertex labels (1-based) of the ends of dart-pair edges."""
        vo = self.map.vertex_of
        return [(vo(a) + 1, vo(b) + 1) for a, b in edges]

    def genus(self) -> int:
        return map_genus(self.map)

    def without_last_loop(self) -> "LveGraph":
        if not self.loop_order:
            raise DomainError("no loop edge to remove")
        a, b = self.loop_order[-1]
        rotation = [tuple(x for x in cyc if x not in (a, b)) for cyc in self.map.rotation]
        pairing = [p for p in self.map.pairing if p != (a, b)]
        return LveGraph(RibbonMap(rotation, pairing, self.map.cilia), self.tree_edges,
                        self.loop_order[:-1])

    # canonical key --------------------------------------------------------
    def code(self) -> tuple:
        """Complete invariant under dart relabelling (vertex and loop labels fixed)."""
        if self._code is not None:
            return self._code
        m = self.map
        vo = m.vertex_of
        tree = set(self.tree_edges)
        loop_label = {e: i + 1 for i, e in enumerate(self.loop_order)}
        desc = {}
        for a, b in m.pairing:
            e = (a, b)
            for x, y in ((a, b), (b, a)):
                if e in tree:
                    desc[x] = ("t", vo(y) + 1)
                else:
                    desc[x] = ("l", loop_label[e], vo(y) + 1)
        for c in m.cilia:
            desc[c] = ("c",)
        out = []
        for cyc in m.rotation:
            if not cyc:
                out.append(())
                continue
            starts = [i for i, x in enumerate(cyc) if x in m.cilia]
            if not starts:
                tree_darts = [(desc[x][1], i) for i, x in enumerate(cyc) if desc[x][0] == "t"]
                if not tree_darts:
                    raise DomainError("vertex without cilium or tree edge has no canonical start")
                starts = [min(tree_darts)[1]]
            s = starts[0]
            out.append(tuple(desc[cyc[(s + j) % len(cyc)]] for j in range(len(cyc))))
        self._code = tuple(out)
        return self._code

    def __eq__(self, other):
        return isinstance(other, LveGraph) and self.code() == other.code()

    def __hash__(self):
        return hash(self.code())

    # serialization --------------------------------------------------------
    def to_json(self) -> dict:
        obj = self.map.to_json()
        obj["tree_edges"] = [list(e) for e in self.tree_edges]
        obj["loop_order"] = [list(e) for e in self.loop_order]
        return obj

    @classmethod
    def from_json(cls, obj: Mapping) -> "LveGraph":
        return cls(RibbonMap.from_json(obj), obj["tree_edges"], obj.get("loop_order", ()))

    def __repr__(self):
        return f"LveGraph({self.to_json()})"


# ---------------------------------------------------------------------------
# LVE trees

def _prufer_trees(v: int) -> Iterator[list[tuple[int, int]]]:
    """All labelled trees on vertices ``0..v-1`` as edge lists."""
    if v == 1:
        yield []
        return
    if v == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(v), repeat=v - 2):
        degree = [1] * v
        for x in seq:
            degree[x] += 1
        edges = []
        for x in seq:
            leaf = next(i for i in range(v) if degree[i] == 1)
            edges.append((leaf, x))
            degree[leaf] -= 1
            degree[x] -= 1
        u, w = [i for i in range(v) if degree[i] == 1]
        edges.append((u, w))
        yield edges


def _cyclic_orders(items: Sequence[int]) -> list[tuple[int, ...]]:
    if len(items) <= 1:
        return [tuple(items)]
    first, rest = items[0], items[1:]
    return [(first,) + p for p in itertools.permutations(rest)]


def iter_lve_trees(n: int, k: int) -> Iterator[LveGraph]:
    """Generate vertex-labelled plane trees with ``n`` edges and ``k`` cilia.

    Each vertex of degree ``d`` gets one of its ``(d-1)!`` cyclic orders; a
    cilium is placed in one of its ``max(d, 1)`` corners.
    """
    if n < 0 or k < 0:
        raise DomainError("n and k must be non-negative")
    if n > N_MAX_TREES:
        raise CapacityError(f"n={n} exceeds the LVE tree limit {N_MAX_TREES}")
    v = n + 1
    if k > v:
        return
    for edges in _prufer_trees(v):
        darts_at = [[] for _ in range(v)]
        pairing = []
        for i, (a, b) in enumerate(edges):
            darts_at[a].append(2 * i)
            darts_at[b].append(2 * i + 1)
            pairing.append((2 * i, 2 * i + 1))
        cil_base = 2 * n
        orders = [_cyclic_orders(d) for d in darts_at]
        for ciliated in itertools.combinations(range(v), k):
            cilium_of = {u: cil_base + j for j, u in enumerate(ciliated)}
            per_vertex = []
            for u in range(v):
                options = []
                for rot in orders[u]:
                    if u in cilium_of:
                        c = cilium_of[u]
                        for pos in range(max(len(rot), 1)):
                            options.append(rot[:pos + 1] + (c,) + rot[pos + 1:] if rot else (c,))
                    else:
                        options.append(rot)
                per_vertex.append(options)
            for rotation in itertools.product(*per_vertex):
                m = RibbonMap(rotation, pairing, cilium_of.values())
                yield LveGraph(m, pairing, ())


def enumerate_lve_trees(n: int, k: int) -> list[LveGraph]:
    return list(iter_lve_trees(n, k))


# ---------------------------------------------------------------------------
# loop growth

@dataclass(frozen=True)
class OrderStop:
    """Grow until the total edge count reaches ``n``."""

    n: int


@dataclass(frozen=True)
class GenusStop:
    """Grow while the genus stays ``<= g``; ``max_edges`` bounds the explicit set."""

    g: int
    max_edges: int


@dataclass
class Growth:
    explicit: list[LveGraph]
    frontier: list[LveGraph]


def add_loop_edge(g: LveGraph) -> list[LveGraph]:
    """All LVE graphs obtained by adding one loop edge with the next label."""
    m = g.map
    darts = m.darts
    a = max(darts, default=-1) + 1
    b = a + 1
    out = {}
    if not darts:
        rotations = [[(a, b)]]
    else:
        rotations = []
        for x in darts:
            rot1 = [_insert_after(cyc, x, a) for cyc in m.rotation]
            for cyc in rot1:
                for y in cyc:
                    rotations.append([_insert_after(c, y, b) for c in rot1])
    for rot in rotations:
        child = LveGraph(RibbonMap(rot, m.pairing + ((a, b),), m.cilia), g.tree_edges,
                         g.loop_order + ((a, b),))
        out.setdefault(child.code(), child)
    return [out[c] for c in sorted(out)]


def _insert_after(cyc, x, new):
    if x not in cyc:
        return tuple(cyc)
    i = cyc.index(x)
    return tuple(cyc[:i + 1]) + (new,) + tuple(cyc[i + 1:])


def grow_loops(seed: LveGraph, stop) -> Growth:
    """Recursive loop-edge addition with an order or a genus stop rule.

    With :class:`OrderStop` ``n`` the explicit set holds every descendant with
    fewer than ``n`` edges and the frontier those reaching exactly ``n``.  With
    :class:`GenusStop` ``g`` the frontier holds the graphs whose genus first
    reaches ``g + 1``; descendants of genus ``<= g`` are explicit and stop
    growing once they have ``max_edges`` edges.
    """
    explicit: dict = {}
    frontier: dict = {}
    if isinstance(stop, OrderStop):
        if seed.n_edges >= stop.n:
            return Growth([], [seed])
        explicit[seed.code()] = seed
        current = [seed]
        while current:
            nxt = {}
            for g in current:
                for child in add_loop_edge(g):
                    nxt.setdefault(child.code(), child)
            current = []
            for c in sorted(nxt):
                child = nxt[c]
                if child.n_edges >= stop.n:
                    frontier[c] = child
                else:
                    explicit[c] = child
                    current.append(child)
    elif isinstance(stop, GenusStop):
        if seed.genus() > stop.g:
            return Growth([], [seed])
        explicit[seed.code()] = seed
        current = [seed] if seed.n_edges < stop.max_edges else []
        while current:
            nxt = {}
            for g in current:
                for child in add_loop_edge(g):
                    nxt.setdefault(child.code(), child)
            current = []
            for c in sorted(nxt):
                child = nxt[c]
                if child.genus() > stop.g:
                    frontier[c] = child
                else:
                    explicit[c] = child
                    if child.n_edges < stop.max_edges:
                        current.append(child)
    else:
        raise DomainError("stop must be OrderStop or GenusStop")
    return Growth([explicit[c] for c in sorted(explicit)], [frontier[c] for c in sorted(frontier)])


# ---------------------------------------------------------------------------
# tree covariance

def _as_tree(T, t) -> tuple[int, list[tuple[int, int]], list[float]]:
    if isinstance(T, LveGraph):
        if T.loop_order:
            raise DomainError("tree_covariance needs a graph without loop edges")
        v = T.n_vertices
        edges = T.vertex_pairs(T.tree_edges)
        keys = list(T.tree_edges)
    else:
        v, edges = T
        edges = [tuple(e) for e in edges]
        keys = edges
    if isinstance(t, Mapping):
        values = []
        for key, e in zip(keys, edges):
            if key in t:
                values.append(t[key])
            elif e in t:
                values.append(t[e])
            elif e[::-1] in t:
                values.append(t[e[::-1]])
            else:
                raise DomainError(f"no weakening parameter for edge {e}")
    else:
        values = list(t)
    if len(values) != len(edges):
        raise DomainError("one weakening parameter per tree edge is needed")
    if any(not 0 <= x <= 1 for x in values):
        raise DomainError("weakening parameters must lie in [0, 1]")
    return v, edges, values


def tree_covariance(T, t) -> np.ndarray:
    """``C_ij = min t_e`` over the tree path from ``i`` to ``j``; ``C_ii = 1``.

    ``T`` is an :class:`LveGraph` without loops or a pair ``(V, edges)`` with
    1-based vertex labels.  ``t`` is a sequence aligned with the tree edges or
    a mapping keyed by edge.
    """
    v, edges, values = _as_tree(T, t)
    if len(edges) != v - 1:
        raise DomainError("not a tree: wrong number of edges")
    adj = [[] for _ in range(v)]
    for (a, b), w in zip(edges, values):
        if a == b:
            raise DomainError("not a tree: self-loop")
        adj[a - 1].append((b - 1, w))
        adj[b - 1].append((a - 1, w))
    C = np.ones((v, v))
    for i in range(v):
        best = {i: 1.0}
        stack = [i]
        while stack:
            x = stack.pop()
            for y, w in adj[x]:
                if y not in best:
                    best[y] = min(best[x], w)
                    stack.append(y)
        if len(best) != v:
            raise DomainError("not a tree: disconnected")
        for j, val in best.items():
            C[i, j] = val
    return C


def path_infimum(T, t, i: int, j: int) -> float:
    """Infimum of ``t`` along the tree path between vertices ``i`` and ``j``."""
    return float(tree_covariance(T, t)[i - 1, j - 1])


# ---------------------------------------------------------------------------
# Hepp sectors

def dominant_tree(n_vertices: int, edges: Sequence[tuple[int, int]], ranks: Sequence[int]) -> frozenset[int]:
    """Greedy max-first spanning tree: scan edges by decreasing rank, skip cycles."""
    parent = list(range(n_vertices + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    chosen = []
    for idx in sorted(range(len(edges)), key=lambda i: -ranks[i]):
        a, b = edges[idx]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            chosen.append(idx)
    return frozenset(chosen)


def hepp_weights(n_vertices: int, edges: Sequence[tuple[int, int]]) -> dict[frozenset[int], Fraction]:
    """Fraction of edge orders in which each spanning tree is dominant."""
    if len(edges) > HEPP_MAX_EDGES:
        raise CapacityError(f"{len(edges)} edges exceed the Hepp limit {HEPP_MAX_EDGES}")
    counts: dict[frozenset[int], int] = {}
    for ranks in itertools.permutations(range(len(edges))):
        tree = dominant_tree(n_vertices, edges, ranks)
        counts[tree] = counts.get(tree, 0) + 1
    total = factorial(len(edges))
    return {tree: Fraction(c, total) for tree, c in counts.items()}


def hepp_weight(G, tree: Iterable[int] | None = None) -> Fraction:
    """Hepp weight of a spanning tree.

    ``G`` is either an :class:`LveGraph` (its distinguished tree is used) or a
    pair ``(V, edges)`` with 1-based vertex labels, in which case ``tree``
    lists edge indices.
    """
    if isinstance(G, LveGraph):
        edges = G.vertex_pairs(G.tree_edges + G.loop_order)
        v = G.n_vertices
        tree_idx = frozenset(range(len(G.tree_edges)))
    else:
        v, edges = G
        edges = [tuple(e) for e in edges]
        tree_idx = frozenset(tree)
        if len(tree_idx) != v - 1:
            raise DomainError("tree must have V-1 edges")
    return hepp_weights(v, edges).get(tree_idx, Fraction(0))


# ---------------------------------------------------------------------------
# BKAR forest formula

def complete_graph_edges(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


def edge_symbols(n: int) -> dict[tuple[int, int], sympy.Symbol]:
    """Symbols ``x_ij`` for the edges of the complete graph on ``n`` vertices."""
    return {e: sympy.Symbol(f"x{e[0]}{e[1]}") for e in complete_graph_edges(n)}


def forests(n: int) -> list[tuple[tuple[int, int], ...]]:
    edges = complete_graph_edges(n)
    out = []
    for r in range(n):
        for sub in itertools.combinations(edges, r):
            parent = list(range(n + 1))
            ok = True
            for a, b in sub:
                while parent[a] != a:
                    a = parent[a]
                while parent[b] != b:
                    b = parent[b]
                if a == b:
                    ok = False
                    break
                parent[a] = b
            if ok:
                out.append(sub)
    return out


def _forest_path(forest, i, j):
    adj = {}
    for e in forest:
        adj.setdefault(e[0], []).append((e[1], e))
        adj.setdefault(e[1], []).append((e[0], e))
    stack = [(i, ())]
    seen = {i}
    while stack:
        x, path = stack.pop()
        if x == j:
            return path
        for y, e in adj.get(x, []):
            if y not in seen:
                seen.add(y)
                stack.append((y, path + (e,)))
    return None


def bkar_rhs(n: int, phi) -> sympy.Rational:
    """Exact forest-sum side of the BKAR formula for a polynomial ``phi``."""
    if n not in (2, 3):
        raise CapacityError("the BKAR verifier supports n = 2 and n = 3")
    xs = edge_symbols(n)
    phi = sympy.sympify(phi)
    if not phi.free_symbols <= set(xs.values()):
        raise DomainError("phi depends on symbols outside the edge variables")
    poly = sympy.Poly(phi, *xs.values()) if phi.free_symbols else None
    if poly is not None and poly.total_degree() > 4:
        raise CapacityError("phi must have total degree <= 4")
    total = sympy.Integer(0)
    for forest in forests(n):
        deriv = phi
        for e in forest:
            deriv = sympy.diff(deriv, xs[e])
        if deriv == 0:
            continue
        us = {e: sympy.Symbol(f"u{e[0]}{e[1]}") for e in forest}
        # split [0,1]^|F| by the order of the u variables
        for order in itertools.permutations(forest):
            rank = {e: r for r, e in enumerate(order)}
            subs = {}
            for e, x in xs.items():
                path = _forest_path(forest, e[0], e[1])
                if path is None:
                    subs[x] = sympy.Integer(0)
                else:
                    subs[x] = us[min(path, key=lambda f: rank[f])]
            expr = deriv.subs(subs, simultaneous=True)
            # region u_{order[0]} < u_{order[1]} < ... < 1
            for r in range(len(order)):
                upper = us[order[r + 1]] if r + 1 < len(order) else sympy.Integer(1)
                expr = sympy.integrate(expr, (us[order[r]], 0, upper))
            total += expr
    return sympy.nsimplify(total)


def bkar_verify(n: int, phi) -> Fraction:
    """``|phi(1,...,1) - sum over forests|`` as an exact rational."""
    if n not in (2, 3):
        raise CapacityError("the BKAR verifier supports n = 2 and n = 3")
    xs = edge_symbols(n)
    lhs = sympy.sympify(phi).subs({x: 1 for x in xs.values()})
    res = sympy.Rational(lhs - bkar_rhs(n, phi))
    return abs(Fraction(int(res.p), int(res.q)))


# fixed polynomial suite for the forest-formula check (n, phi)
BKAR_SUITE = (
    (2, "x12"),
    (2, "3*x12**4 - x12**2 + 7"),
    (3, "5"),
    (3, "x12*x23 + x13**2"),
    (3, "x12*x13*x23"),
    (3, "x12**2*x13**2"),
    (3, "x12**4 + x23**3 - 2*x13"),
    (3, "x12*x13 + x13*x23 + x12*x23"),
    (3, "(x12 + 2*x13 - x23)**2*x12*x23"),
    (3, "x12**3*x13 - x23**2*x12 + x13*x23 + 1"),
)
