"""Ciliated combinatorial maps (ribbon graphs).

A map is a rotation system on darts (half-edges).  Each vertex is a cycle
of the rotation, edges are pairs of darts, and a cilium is a dart with no
partner.  Internally darts are integers and the edge involution sends a
cilium to itself.

Corner convention: the dart ``x`` names the corner between ``x`` and
``sigma(x)`` at its vertex.  Walking along a face moves from corner ``x``
to corner ``alpha(sigma(x))``, so a face is an orbit of ``alpha o sigma``.
A corner is followed by a cilium when ``sigma(x)`` is a cilium.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from lvelab.errors import CapacityError, DomainError, InvariantError
from lvelab.perm_algebra import IntegerPartition

N_MAX_ENUM = 6


# ---------------------------------------------------------------------------
# array level helpers (darts 0..H-1, alpha[c] == c for cilia)

def _orbits(perm: Sequence[int]) -> list[list[int]]:
    seen = [False] * len(perm)
    out = []
    for s in range(len(perm)):
        if seen[s]:
            continue
        orb = []
        x = s
        while not seen[x]:
            seen[x] = True
            orb.append(x)
            x = perm[x]
        out.append(orb)
    return out


def _n_orbits(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    n = 0
    for s in range(len(perm)):
        if not seen[s]:
            n += 1
            x = s
            while not seen[x]:
                seen[x] = True
                x = perm[x]
    return n


def _face_perm(sigma, alpha):
    return [alpha[sigma[x]] for x in range(len(sigma))]


def _array_genus(sigma, alpha) -> int:
    if not sigma:
        return 0
    v = _n_orbits(sigma)
    e = sum(1 for x in range(len(alpha)) if alpha[x] != x) // 2
    f = _n_orbits(_face_perm(sigma, alpha))
    two_g = 2 - (v - e + f)
    if two_g < 0 or two_g % 2:
        raise InvariantError(f"non-integral genus from V={v}, E={e}, F={f}")
    return two_g // 2


def _code_from(sigma, alpha, root) -> tuple[int, ...]:
    h = len(sigma)
    label = [-1] * h
    order = [root]
    label[root] = 0
    code = []
    i = 0
    while i < len(order):
        x = order[i]
        for y in (sigma[x], alpha[x]):
            if label[y] < 0:
                label[y] = len(order)
                order.append(y)
        code.append(label[sigma[x]])
        code.append(label[alpha[x]])
        i += 1
    if len(order) != h:
        raise DomainError("map is not connected")
    return tuple(code)


def _canon(sigma, alpha) -> tuple[tuple[int, ...], int]:
    """Minimal BFS code over an isomorphism-invariant root set, and |Aut|."""
    h = len(sigma)
    if h == 0:
        return (), 1
    roots = [x for x in range(h) if alpha[x] == x] or range(h)
    best = None
    count = 0
    for r in roots:
        c = _code_from(sigma, alpha, r)
        if best is None or c < best:
            best, count = c, 1
        elif c == best:
            count += 1
    return best, count


def _arrays_from_code(code):
    return list(code[0::2]), list(code[1::2])


# ---------------------------------------------------------------------------
# public types

@dataclass(frozen=True)
class FaceStructure:
    """Faces as corner cycles (each corner named by its first dart)."""

    faces: tuple[tuple[int, ...], ...]
    broken: frozenset[int]
    cilia_per_face: tuple[int, ...]

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def broken_partition(self) -> IntegerPartition:
        return IntegerPartition.of(c for c in self.cilia_per_face if c > 0)


class RibbonMap:
    """Connected ciliated ribbon graph.

    Parameters
    ----------
    rotation : vertex cycles of darts (cyclic corner order).  A single empty
        cycle denotes the bare vertex with no darts.
    pairing : edges as pairs of darts.
    cilia : darts not covered by ``pairing``; at most one per vertex.
    """

    __slots__ = ("rotation", "pairing", "cilia", "_sigma", "_alpha", "_vertex", "_code")

    def __init__(self, rotation: Iterable[Sequence[int]], pairing: Iterable[Sequence[int]] = (),
                 cilia: Iterable[int] = ()):
        self.rotation = tuple(tuple(int(x) for x in cyc) for cyc in rotation)
        self.pairing = tuple(sorted(tuple(sorted(int(x) for x in p)) for p in pairing))
        self.cilia = frozenset(int(c) for c in cilia)
        self._code = None
        self._validate()

    def _validate(self):
        if not self.rotation:
            raise DomainError("a map needs at least one vertex")
        darts = [x for cyc in self.rotation for x in cyc]
        if len(set(darts)) != len(darts):
            raise DomainError("a dart appears twice in the rotation")
        if any(len(cyc) == 0 for cyc in self.rotation) and len(self.rotation) > 1:
            raise DomainError("map is not connected")
        dset = set(darts)
        self._sigma = {}
        self._vertex = {}
        for v, cyc in enumerate(self.rotation):
            for i, x in enumerate(cyc):
                self._sigma[x] = cyc[(i + 1) % len(cyc)]
                self._vertex[x] = v
        self._alpha = {}
        for p in self.pairing:
            if len(p) != 2 or p[0] == p[1]:
                raise DomainError(f"bad edge {p}")
            for x in p:
                if x not in dset:
                    raise DomainError(f"edge dart {x} is not in the rotation")
                if x in self._alpha:
                    raise DomainError(f"dart {x} is paired twice")
            self._alpha[p[0]], self._alpha[p[1]] = p[1], p[0]
        for c in self.cilia:
            if c not in dset:
                raise DomainError(f"cilium {c} is not in the rotation")
            if c in self._alpha:
                raise DomainError(f"cilium {c} is also paired")
            self._alpha[c] = c
        if set(self._alpha) != dset:
            raise DomainError("every dart must be paired or be a cilium")
        for cyc in self.rotation:
            if sum(1 for x in cyc if x in self.cilia) > 1:
                raise DomainError("more than one cilium on a vertex")
        if darts:
            seen = {darts[0]}
            stack = [darts[0]]
            while stack:
                x = stack.pop()
                for y in (self._sigma[x], self._alpha[x]):
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if len(seen) != len(darts):
                raise DomainError("map is not connected")

    # basic data ---------------------------------------------------------
    @property
    def darts(self) -> list[int]:
        return [x for cyc in self.rotation for x in cyc]

    @property
    def n_vertices(self) -> int:
        return len(self.rotation)

    @property
    def n_edges(self) -> int:
        return len(self.pairing)

    @property
    def n_cilia(self) -> int:
        return len(self.cilia)

    def sigma(self, x: int) -> int:
        return self._sigma[x]

    def alpha(self, x: int) -> int:
        return self._alpha[x]

    def vertex_of(self, x: int) -> int:
        return self._vertex[x]

    def arrays(self) -> tuple[list[int], list[int], list[int]]:
        """``(sigma, alpha, darts)`` re-indexed on ``0..H-1``."""
        darts = self.darts
        idx = {x: i for i, x in enumerate(darts)}
        sigma = [idx[self._sigma[x]] for x in darts]
        alpha = [idx[self._alpha[x]] for x in darts]
        return sigma, alpha, darts

    @classmethod
    def from_arrays(cls, sigma: Sequence[int], alpha: Sequence[int]) -> "RibbonMap":
        if not sigma:
            return cls([()])
        rotation = _orbits(sigma)
        pairing = {tuple(sorted((x, alpha[x]))) for x in range(len(alpha)) if alpha[x] != x}
        cilia = [x for x in range(len(alpha)) if alpha[x] == x]
        return cls(rotation, sorted(pairing), cilia)

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        return {"rotation": [list(c) for c in self.rotation],
                "pairing": [list(p) for p in self.pairing],
                "cilia": sorted(self.cilia)}

    @classmethod
    def from_json(cls, obj: dict) -> "RibbonMap":
        return cls(obj["rotation"], obj.get("pairing", ()), obj.get("cilia", ()))

    # canonical form -----------------------------------------------------
    def canonical_code(self) -> tuple[int, ...]:
        if self._code is None:
            sigma, alpha, _ = self.arrays()
            self._code = _canon(sigma, alpha)
        return self._code[0]

    def canonical(self) -> "RibbonMap":
        return RibbonMap.from_arrays(*_arrays_from_code(self.canonical_code()))

    def is_isomorphic(self, other: "RibbonMap") -> bool:
        return self.canonical_code() == other.canonical_code()

    def __eq__(self, other):
        if not isinstance(other, RibbonMap):
            return NotImplemented
        return (self.rotation, self.pairing, self.cilia) == (other.rotation, other.pairing, other.cilia)

    def __hash__(self):
        return hash((self.rotation, self.pairing, self.cilia))

    def __repr__(self):
        return f"RibbonMap(rotation={list(self.rotation)}, pairing={list(self.pairing)}, cilia={sorted(self.cilia)})"


def faces(m: RibbonMap) -> FaceStructure:
    """Trace the faces of ``m``; broken faces are those carrying cilia."""
    if not isinstance(m, RibbonMap):
        raise DomainError("faces() needs a RibbonMap")
    if m.n_vertices == 1 and not m.rotation[0]:
        return FaceStructure(((),), frozenset(), (0,))
    seen = set()
    out = []
    for start in m.darts:
        if start in seen:
            continue
        face = []
        x = start
        while x not in seen:
            seen.add(x)
            face.append(x)
            x = m.alpha(m.sigma(x))
        out.append(tuple(face))
    counts = tuple(sum(1 for x in f if x in m.cilia) for f in out)
    broken = frozenset(i for i, c in enumerate(counts) if c > 0)
    return FaceStructure(tuple(out), broken, counts)


def euler_characteristic(m: RibbonMap) -> int:
    """``|V| - |E| + |F| - |B|``."""
    fs = faces(m)
    return m.n_vertices - m.n_edges + fs.n_faces - len(fs.broken)


def genus(m: RibbonMap) -> int:
    fs = faces(m)
    two_g = 2 - (m.n_vertices - m.n_edges + fs.n_faces)
    if two_g < 0 or two_g % 2:
        raise InvariantError(f"corrupted map: 2g = {two_g}")
    return two_g // 2


def aut_order(m: RibbonMap) -> int:
    """Order of the rotation-preserving automorphism group (cilia setwise)."""
    m.canonical_code()
    return m._code[1]


def adjacency_aut_order(m: RibbonMap) -> int:
    """Vertex permutations preserving the edge multiset and ciliated vertices.

    This ignores the cyclic orders; compare with :func:`aut_order`.
    """
    v = m.n_vertices
    edges = sorted(tuple(sorted((m.vertex_of(a), m.vertex_of(b)))) for a, b in m.pairing)
    cil = [any(x in m.cilia for x in cyc) for cyc in m.rotation]
    count = 0
    for p in itertools.permutations(range(v)):
        if any(cil[i] != cil[p[i]] for i in range(v)):
            continue
        if sorted(tuple(sorted((p[a], p[b]))) for a, b in edges) == edges:
            count += 1
    return count


def labeled_code(m: RibbonMap, labels: Sequence[int]) -> tuple:
    """Canonical code of ``m`` with vertex ``v`` carrying ``labels[v]``."""
    sigma, alpha, darts = m.arrays()
    vlab = [labels[m.vertex_of(x)] for x in darts]
    if not darts:
        return (labels[0],)
    best = None
    for r in range(len(darts)):
        c = _code_from(sigma, alpha, r)
        order = _bfs_order(sigma, alpha, r)
        key = (c, tuple(vlab[x] for x in order))
        if best is None or key < best:
            best = key
    return best


def _bfs_order(sigma, alpha, root):
    label = {root: 0}
    order = [root]
    i = 0
    while i < len(order):
        x = order[i]
        for y in (sigma[x], alpha[x]):
            if y not in label:
                label[y] = len(order)
                order.append(y)
        i += 1
    return order


# ---------------------------------------------------------------------------
# enumeration by edge growth

def _children(code, kind):
    """Child codes of a canonical parent.

    ``kind`` is ``"plain"`` (loop edges and bare leaves) or ``"cilium"``
    (leaves carrying a new cilium).
    """
    sigma, alpha = _arrays_from_code(code)
    h = len(sigma)
    out = []
    if kind == "plain":
        if h == 0:
            out.append(_canon([1, 0], [1, 0]))
            out.append(_canon([0, 1], [1, 0]))
            return out
        # new loop edge: insert dart a after x, then dart b after y
        for x in range(h):
            s1 = sigma + [sigma[x]]
            s1[x] = h
            for y in range(h + 1):
                s2 = s1 + [s1[y]]
                s2[y] = h + 1
                a2 = alpha + [h + 1, h]
                out.append(_canon(s2, a2))
        # leaf without cilium
        for x in range(h):
            s = sigma + [sigma[x], h + 1]
            s[x] = h
            a = alpha + [h + 1, h]
            out.append(_canon(s, a))
    else:
        if h == 0:
            out.append(_canon([0, 2, 1], [1, 0, 2]))
            return out
        for x in range(h):
            s = sigma + [sigma[x], h + 2, h + 1]
            s[x] = h
            a = alpha + [h + 1, h, h + 2]
            out.append(_canon(s, a))
    return out


def _expand(args):
    codes, kind, gmax = args
    found = {}
    for code in codes:
        for c, aut in _children(code, kind):
            if c in found:
                continue
            if gmax is not None and _array_genus(*_arrays_from_code(c)) > gmax:
                continue
            found[c] = aut
    return found


def _grow(parents, kind, gmax, workers):
    parents = sorted(parents)
    if workers <= 1 or len(parents) < 64:
        return _expand((parents, kind, gmax))
    n_chunks = 4 * workers
    chunks = [parents[i::n_chunks] for i in range(n_chunks)]
    merged = {}
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for part in ex.map(_expand, [(c, kind, gmax) for c in chunks]):
            merged.update(part)
    return merged


@lru_cache(maxsize=None)
def _level(n: int, k: int, gmax, workers: int = 1) -> dict:
    """Canonical codes (with |Aut|) of all connected maps with n edges, k cilia."""
    if k < 0 or k > n + 1:
        return {}
    if n == 0:
        return {(): 1} if k == 0 else ({(0, 0): 1} if k == 1 else {})
    out = {}
    # Every map reduces to a smaller one by deleting a non-bridge edge or a
    # leaf; a ciliated leaf only has to be removed when all leaves carry
    # cilia, which needs k >= 2.
    if k <= n:
        out.update(_grow(_level(n - 1, k, gmax, workers).keys(), "plain", gmax, workers))
    if k >= 2:
        out.update(_grow(_level(n - 1, k - 1, gmax, workers).keys(), "cilium", gmax, workers))
    return out


def enumerate_maps(n: int, k: int, genus: int | None = None,
                   partition: Sequence[int] | IntegerPartition | None = None,
                   workers: int = 1) -> list[tuple[RibbonMap, int]]:
    """One canonical representative per isomorphism class, with ``|Aut|``.

    Parameters
    ----------
    n : number of edges (at most 6).
    k : number of cilia (at most ``n + 1``).
    genus : keep only maps of this genus.
    partition : keep only maps whose broken faces carry these cilium counts.
    workers : process count for the growth step.
    """
    if n < 0 or k < 0:
        raise DomainError("n and k must be non-negative")
    if n > N_MAX_ENUM:
        raise CapacityError(f"n={n} exceeds the enumeration limit {N_MAX_ENUM}")
    if k > n + 1:
        raise CapacityError(f"k={k} cilia need at least k vertices (n+1={n + 1})")
    if partition is not None:
        partition = partition if isinstance(partition, IntegerPartition) else IntegerPartition.of(partition)
        if partition.k != k:
            return []
    level = _level(n, k, genus, max(1, workers))
    out = []
    for code in sorted(level):
        sigma, alpha = _arrays_from_code(code)
        if genus is not None and _array_genus(sigma, alpha) != genus:
            continue
        m = RibbonMap.from_arrays(sigma, alpha)
        if partition is not None and faces(m).broken_partition() != partition:
            continue
        out.append((m, level[code]))
    return out


# ---------------------------------------------------------------------------
# census

def census(n_max: int, k_max: int, workers: int = 1) -> list[dict]:
    """Class counts grouped by ``(n, k, g, |B|, partition)``."""
    rows = {}
    for n in range(n_max + 1):
        for k in range(min(k_max, n + 1) + 1):
            for m, aut in enumerate_maps(n, k, workers=workers):
                fs = faces(m)
                key = (n, k, genus(m), len(fs.broken), fs.broken_partition().parts)
                rows[key] = rows.get(key, 0) + 1
    return [{"n": n, "k": k, "g": g, "B": b, "partition": list(p), "count": c}
            for (n, k, g, b, p), c in sorted(rows.items())]


def automorphism_discrepancies(n_max: int = 4, k_max: int = 2) -> list[dict]:
    """Classes whose rotation and adjacency automorphism counts differ."""
    out = []
    for n in range(n_max + 1):
        for k in range(min(k_max, n + 1) + 1):
            for m, aut in enumerate_maps(n, k):
                adj = adjacency_aut_order(m)
                if adj != aut:
                    out.append({"n": n, "k": k, "map": m.to_json(),
                                "rotation_aut": aut, "adjacency_aut": adj})
    return out


# ---------------------------------------------------------------------------
# bijections

@dataclass(frozen=True)
class Quadrangulation:
    """Bipartite map with coloured vertices and marked edges.

    ``black`` holds indices into ``map.rotation``; every edge must join a black
    and a white vertex.  ``marked`` is a set of edges, each given as the
    ``(black dart, white dart)`` pair.
    """

    map: RibbonMap
    black: frozenset[int]
    marked: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    @property
    def n_faces(self) -> int:
        return faces(self.map).n_faces


def _plain_rotation(m: RibbonMap):
    """Rotation restricted to non-cilium darts and the cilium corner map."""
    sigma0 = {}
    cilium_corner = {}
    for cyc in m.rotation:
        plain = [x for x in cyc if x not in m.cilia]
        for i, x in enumerate(plain):
            sigma0[x] = plain[(i + 1) % len(plain)]
        for i, x in enumerate(cyc):
            if x in m.cilia:
                # the cilium sits in the corner opened by the previous plain dart
                cilium_corner[x] = cyc[(i - 1) % len(cyc)]
    return sigma0, cilium_corner


def to_quadrangulation(m: RibbonMap) -> Quadrangulation:
    """Map with ``n >= 1`` edges to its bipartite quadrangulation.

    Black vertices are the vertices of ``m``, white vertices its faces and
    edges its corners; each cilium marks the edge of the corner it sits in.
    """
    if m.n_edges == 0:
        raise DomainError("an edgeless map has no quadrangulation")
    sigma0, cilium_corner = _plain_rotation(m)
    plain = sorted(sigma0)
    idx = {x: i for i, x in enumerate(plain)}
    b = {x: 2 * idx[x] for x in plain}
    w = {x: 2 * idx[x] + 1 for x in plain}
    rotation = []
    black = set()
    for cyc in m.rotation:
        pc = [x for x in cyc if x not in m.cilia]
        black.add(len(rotation))
        rotation.append([b[x] for x in pc])
    seen = set()
    for start in plain:
        if start in seen:
            continue
        face = []
        x = start
        while x not in seen:
            seen.add(x)
            face.append(x)
            x = m.alpha(sigma0[x])
        rotation.append([w[x] for x in reversed(face)])
    pairing = [(b[x], w[x]) for x in plain]
    marked = frozenset((b[x], w[x]) for x in cilium_corner.values())
    return Quadrangulation(RibbonMap(rotation, pairing), frozenset(black), marked)


def from_quadrangulation(q: Quadrangulation) -> RibbonMap:
    """Inverse of :func:`to_quadrangulation`."""
    qm = q.map
    if qm.cilia:
        raise DomainError("quadrangulations carry no cilia")
    colour = {}
    for v, cyc in enumerate(qm.rotation):
        for x in cyc:
            colour[x] = v in q.black
    for a, c in qm.pairing:
        if colour[a] == colour[c]:
            raise DomainError("edge joins two vertices of the same colour")
    fs = faces(qm)
    if any(len(f) != 4 for f in fs.faces):
        raise DomainError("not every face has degree 4")
    black_darts = [x for x in qm.darts if colour[x]]
    sigma = {x: qm.sigma(x) for x in black_darts}
    sigma_inv = {y: x for x, y in sigma.items()}

    def nxt(x):
        # black dart -> its white partner -> previous white dart -> black partner
        wd = qm.alpha(x)
        cyc = qm.rotation[qm.vertex_of(wd)]
        prev = cyc[(cyc.index(wd) - 1) % len(cyc)]
        return qm.alpha(prev)

    alpha = {z: nxt(sigma_inv[z]) for z in black_darts}
    for z, y in alpha.items():
        if y == z or alpha[y] != z:
            raise DomainError("white rotations do not define an edge involution")
    marked_black = {}
    for bd, wd in q.marked:
        if not colour.get(bd, False) or qm.alpha(bd) != wd:
            raise DomainError(f"marked edge {(bd, wd)} is not a black-white edge")
        v = qm.vertex_of(bd)
        if v in marked_black:
            raise DomainError("two marked edges on one black vertex")
        marked_black[v] = bd
    next_label = max(qm.darts) + 1
    rotation = []
    cilia = []
    for v in sorted(q.black):
        cyc = list(qm.rotation[v])
        if v in marked_black:
            pos = cyc.index(marked_black[v])
            cyc.insert(pos + 1, next_label)
            cilia.append(next_label)
            next_label += 1
        rotation.append(cyc)
    pairing = {tuple(sorted((z, alpha[z]))) for z in black_darts}
    return RibbonMap(rotation, sorted(pairing), cilia)


@dataclass(frozen=True)
class MedialGraph:
    """Alternating 2-in/2-out ribbon graph.

    ``vertices[i]`` is the cyclic slot order ``(in_x, out_x, in_y, out_y)`` of
    the tetravalent vertex sitting on edge ``{x, y}``.  Slots are
    ``("in"|"out", dart)``; external legs are ``("J"|"Jdag", cilium)``.
    ``edges`` are directed ``(tail slot, head slot)`` pairs, one per corner.
    """

    vertices: tuple[tuple[tuple[str, int], ...], ...]
    edges: tuple[tuple[tuple[str, int], tuple[str, int]], ...]
    legs: tuple[tuple[str, int], ...]


def to_medial(m: RibbonMap) -> MedialGraph:
    """Medial construction: edges become 4-valent vertices, corners edges."""
    verts = tuple((("in", x), ("out", x), ("in", y), ("out", y)) for x, y in m.pairing)
    edges = []
    legs = []
    for x in m.darts:
        y = m.sigma(x)
        tail = ("J", x) if x in m.cilia else ("out", x)
        head = ("Jdag", y) if y in m.cilia else ("in", y)
        edges.append((tail, head))
    for c in sorted(m.cilia):
        legs.extend([("J", c), ("Jdag", c)])
    return MedialGraph(verts, tuple(sorted(edges)), tuple(legs))
