"""Component census: extraction, canonical classification, automorphisms, copy counts."""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .confmodel import Multigraph

DEFAULT_CAP = 32
COPY_BUDGET = 4
MAX_SEARCH_LEAVES = 200_000


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CanonGraph:
    """Isomorphism class of a small connected multigraph.

    ``edges`` is one representative labelling on vertices 0..v-1. ``vertex_aut`` counts
    vertex permutations preserving all multiplicities; ``aut`` additionally counts
    half-edge relabellings (loop flips, permutations of parallel edges).
    """

    code: bytes
    v: int
    e: int
    nk: dict
    aut: int
    vertex_aut: int
    kind: str
    edges: tuple = ()
    loops: int = 0

    def __eq__(self, other):
        return isinstance(other, CanonGraph) and self.code == other.code

    def __hash__(self):
        return hash(self.code)

    def __repr__(self):
        return f"CanonGraph({self.code.decode()!r}, v={self.v}, e={self.e}, aut={self.aut})"

    @property
    def is_tree(self) -> bool:
        return self.kind == "tree"

    def degrees(self) -> list[int]:
        deg = [0] * self.v
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg


@dataclass(frozen=True)
class LargeComponent:
    """Stand-in passed to graph functionals for components above the cap."""

    v: int
    e: int
    nk: dict | None = None


def _kind(v: int, e: int) -> str:
    if e == v - 1:
        return "tree"
    if e == v:
        return "unicyclic"
    return "multicyclic"


def _multiplicities(v: int, edges) -> tuple[list[dict[int, int]], list[int]]:
    nbr = [defaultdict(int) for _ in range(v)]
    loops = [0] * v
    for a, b in edges:
        if a == b:
            loops[a] += 1
        else:
            nbr[a][b] += 1
            nbr[b][a] += 1
    return nbr, loops


def _is_connected(v: int, nbr) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in nbr[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == v


def _group_aut(child_codes: list[str], child_auts: list[int]) -> tuple[str, int]:
    """AHU code of a node from its children and the rooted automorphism count."""
    aut = 1
    for a in child_auts:
        aut *= a
    for m in Counter(child_codes).values():
        aut *= math.factorial(m)
    return "(" + "".join(sorted(child_codes)) + ")", aut


def _strip_leaves(v: int, nbr, loops, stop_at_two: bool):
    """Layered leaf stripping. Returns (remaining vertices, code per vertex, rooted aut per vertex).

    Each stripped vertex's code is the AHU code of the subtree hanging below it; each
    remaining vertex gets the code of everything that was hung on it.
    """
    deg = [sum(nbr[x].values()) + 2 * loops[x] for x in range(v)]
    alive = set(range(v))
    kids: list[list[int]] = [[] for _ in range(v)]
    code = [""] * v
    raut = [1] * v
    while True:
        if stop_at_two and len(alive) <= 2:
            break
        layer = [x for x in alive if deg[x] == 1]
        if not layer:
            break
        for x in layer:
            code[x], raut[x] = _group_aut([code[c] for c in kids[x]], [raut[c] for c in kids[x]])
        for x in layer:
            alive.discard(x)
        for x in layer:
            for y in nbr[x]:
                if y in alive:
                    kids[y].append(x)
                    deg[y] -= nbr[x][y]
    for x in alive:
        code[x], raut[x] = _group_aut([code[c] for c in kids[x]], [raut[c] for c in kids[x]])
    return sorted(alive), code, raut


def _tree_class(v, nbr, loops):
    centers, code, raut = _strip_leaves(v, nbr, loops, stop_at_two=True)
    if len(centers) == 1:
        c = centers[0]
        return "T1" + code[c], raut[c]
    a, b = centers
    # halves: each center's code excludes the other center (it was never stripped)
    la, lb = sorted((code[a], code[b]))
    aut = raut[a] * raut[b] * (2 if la == lb else 1)
    return "T2" + la + lb, aut


def _unicyclic_class(v, nbr, loops):
    core, code, raut = _strip_leaves(v, nbr, loops, stop_at_two=False)
    cs = set(core)
    L = len(core)
    if L <= 2:
        order = list(core)
    else:
        start = core[0]
        order = [start]
        prev, cur = -1, start
        while True:
            y = next(w for w in nbr[cur] if w in cs and w != prev)
            if y == start:
                break
            order.append(y)
            prev, cur = cur, y
    labels = [code[x] for x in order]
    variants = []
    for seq in (labels, labels[::-1]):
        for r in range(L):
            variants.append(tuple(seq[r:] + seq[:r]))
    best = min(variants)
    if L == 1:
        sym = 1
    elif L == 2:
        sym = 2 if labels[0] == labels[1] else 1
    else:
        sym = sum(1 for s in variants if s == best)
    aut = sym
    for x in core:
        aut *= raut[x]
    return f"U{L}:" + "|".join(best), aut


def _refine(colors, adj):
    k = len(colors)
    while True:
        sigs = [
            (colors[i], tuple(sorted((colors[j], m) for j, m in adj[i].items())))
            for i in range(k)
        ]
        ranks = {s: r for r, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == len(set(colors)):
            return new
        colors = new


def _ir_canonical(labels: list, adj: list[dict[int, int]], loops: list[int]):
    """Minimal adjacency code over individualization-refinement leaves and the number of
    leaves attaining it (= number of label-preserving vertex automorphisms)."""
    k = len(labels)
    init = [(labels[i], loops[i]) for i in range(k)]
    ranks = {s: r for r, s in enumerate(sorted(set(init)))}
    best = None
    count = 0
    leaves = 0

    def leaf_code(colors):
        order = sorted(range(k), key=lambda i: colors[i])
        pos = {x: i for i, x in enumerate(order)}
        rows = tuple(
            tuple(sorted((pos[j], m) for j, m in adj[x].items())) for x in order
        )
        return (tuple(init[x] for x in order), rows)

    def search(colors):
        nonlocal best, count, leaves
        colors = _refine(colors, adj)
        if len(set(colors)) == k:
            leaves += 1
            if leaves > MAX_SEARCH_LEAVES:
                raise CapExceeded("canonical search budget exhausted")
            c = leaf_code(colors)
            if best is None or c < best:
                best, count = c, 1
            elif c == best:
                count += 1
            return
        cells = Counter(colors)
        target = min(c for c, s in cells.items() if s > 1)
        for x in range(k):
            if colors[x] == target:
                nc = [2 * c + 1 for c in colors]
                nc[x] -= 1
                search(nc)

    search([ranks[s] for s in init])
    return best, count


def _multicyclic_class(v, nbr, loops):
    core, code, raut = _strip_leaves(v, nbr, loops, stop_at_two=False)
    idx = {x: i for i, x in enumerate(core)}
    adj = [{idx[y]: m for y, m in nbr[x].items() if y in idx} for x in core]
    best, vaut = _ir_canonical([code[x] for x in core], adj, [loops[x] for x in core])
    aut = vaut
    for x in core:
        aut *= raut[x]
    return "M" + repr(best), aut


def canonical_code(H, cap: int = DEFAULT_CAP) -> CanonGraph:
    """Classify a small connected multigraph.

    ``H`` is a Multigraph or a pair (v, edges) with vertices 0..v-1.
    """
    if isinstance(H, Multigraph):
        v, edges = H.n, H.edge_list()
    elif isinstance(H, CanonGraph):
        v, edges = H.v, list(H.edges)
    else:
        v, edges = H
        edges = [tuple(sorted(map(int, e))) for e in edges]
    e = len(edges)
    if e > cap:
        raise CapExceeded(f"{e} edges exceeds cap {cap}")
    if v < 1:
        raise ValueError("empty graph")
    nbr, loops = _multiplicities(v, edges)
    if not _is_connected(v, nbr):
        raise ValueError("graph is not connected")
    kind = _kind(v, e)
    if kind == "tree":
        code, vaut = _tree_class(v, nbr, loops)
    elif kind == "unicyclic":
        code, vaut = _unicyclic_class(v, nbr, loops)
    else:
        code, vaut = _multicyclic_class(v, nbr, loops)
    half = 1
    for x in range(v):
        half *= 2 ** loops[x] * math.factorial(loops[x])
        for y, m in nbr[x].items():
            if x < y:
                half *= math.factorial(m)
    deg = [sum(nbr[x].values()) + 2 * loops[x] for x in range(v)]
    return CanonGraph(
        code=code.encode(),
        v=v,
        e=e,
        nk=dict(sorted(Counter(deg).items())),
        aut=vaut * half,
        vertex_aut=vaut,
        kind=kind,
        edges=tuple(sorted(edges)),
        loops=sum(loops),
    )


def aut_count(H) -> int:
    if not isinstance(H, CanonGraph):
        H = canonical_code(H)
    return H.aut


# --- named small graphs ----------------------------------------------------------


def star(r: int) -> CanonGraph:
    return canonical_code((r + 1, [(0, i) for i in range(1, r + 1)]))


def path(k: int) -> CanonGraph:
    return canonical_code((k, [(i, i + 1) for i in range(k - 1)]))


def cycle(k: int) -> CanonGraph:
    if k == 1:
        return canonical_code((1, [(0, 0)]))
    return canonical_code((k, [(i, (i + 1) % k) for i in range(k)]))


def named_graph(name: str) -> CanonGraph:
    """K1, K2, K1,r (or star:r), Pk (or path:k), Ck (or cycle:k), loop, double."""
    s = name.strip().replace(" ", "")
    aliases = {"loop": "C1", "double": "C2", "K13": "K1,3", "K12": "K1,2"}
    s = aliases.get(s, s)
    if s == "K1":
        return canonical_code((1, []))
    if s == "K2":
        return path(2)
    if m := re.fullmatch(r"(?:K1,|star:)(\d+)", s):
        return star(int(m.group(1)))
    if m := re.fullmatch(r"(?:P|path:)(\d+)", s):
        return path(int(m.group(1)))
    if m := re.fullmatch(r"(?:C|cycle:)(\d+)", s):
        return cycle(int(m.group(1)))
    raise ValueError(f"unknown graph name {name!r}")


# --- components --------------------------------------------------------------------


class ComponentIndex:
    """Component labels of a multigraph with per-component vertex and edge slices."""

    def __init__(self, G: Multigraph):
        self.G = G
        n = G.n
        e = G.edges
        if n == 0:
            self.labels = np.zeros(0, dtype=np.int64)
            self.count = 0
        else:
            adj = coo_matrix(
                (np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])), shape=(n, n)
            )
            self.count, labels = connected_components(adj, directed=False)
            self.labels = labels.astype(np.int64)
        self.sizes = np.bincount(self.labels, minlength=self.count)
        elab = self.labels[e[:, 0]] if len(e) else np.zeros(0, dtype=np.int64)
        self.edge_counts = np.bincount(elab, minlength=self.count)
        self._vorder = np.argsort(self.labels, kind="stable")
        self._vstart = np.concatenate([[0], np.cumsum(self.sizes)])
        self._eorder = np.argsort(elab, kind="stable")
        self._estart = np.concatenate([[0], np.cumsum(self.edge_counts)])

    def vertices(self, c: int) -> np.ndarray:
        return self._vorder[self._vstart[c] : self._vstart[c + 1]]

    def edges(self, c: int) -> np.ndarray:
        return self.G.edges[self._eorder[self._estart[c] : self._estart[c + 1]]]

    def local(self, c: int) -> tuple[int, tuple[tuple[int, int], ...]]:
        verts = self.vertices(c)
        loc = np.searchsorted(verts, self.edges(c))
        return len(verts), tuple(map(tuple, loc.tolist()))

    def ranking(self) -> np.ndarray:
        """Component ids sorted by size, then edge count (both descending), then discovery."""
        return np.lexsort((np.arange(self.count), -self.edge_counts, -self.sizes))


def components(G: Multigraph) -> list[tuple[np.ndarray, np.ndarray]]:
    """(vertices, edges) of every component, in discovery order."""
    idx = ComponentIndex(G)
    return [(idx.vertices(c), idx.edges(c)) for c in range(idx.count)]


@dataclass
class ComponentCensus:
    n: int
    counts: dict[bytes, int]
    classes: dict[bytes, CanonGraph]
    large: list[tuple[int, int]]
    kappa: int
    c1: int
    c2: int
    chi_hat: float
    c1_edges: int = 0
    c1_code: bytes | None = None

    def count(self, H: CanonGraph) -> int:
        return self.counts.get(H.code, 0)

    def to_json(self) -> dict:
        return {
            "classes": [
                {"code": code.decode(), "v": self.classes[code].v, "e": self.classes[code].e, "count": cnt}
                for code, cnt in sorted(self.counts.items(), key=lambda kv: (self.classes[kv[0]].v, kv[0]))
            ],
            "large": [list(x) for x in self.large],
            "c1": self.c1,
            "c2": self.c2,
            "chi_hat": self.chi_hat,
            "kappa": self.kappa,
        }


_MEMO: dict = {}


def classify_local(v: int, edges: tuple, cap: int = DEFAULT_CAP) -> CanonGraph:
    key = (v, edges)
    hit = _MEMO.get(key)
    if hit is None:
        hit = canonical_code((v, edges), cap=cap)
        if len(_MEMO) < 200_000:
            _MEMO[key] = hit
    return hit


def census(G: Multigraph, cap: int = DEFAULT_CAP, index: ComponentIndex | None = None) -> ComponentCensus:
    idx = index or ComponentIndex(G)
    counts: Counter = Counter()
    classes: dict[bytes, CanonGraph] = {}
    large = []
    order = idx.ranking()
    c1 = int(idx.sizes[order[0]]) if idx.count else 0
    c2 = int(idx.sizes[order[1]]) if idx.count > 1 else 0
    c1_code = None
    for rank, c in enumerate(order.tolist()):
        if idx.edge_counts[c] > cap:
            large.append((int(idx.sizes[c]), int(idx.edge_counts[c])))
            continue
        cls = classify_local(*idx.local(c), cap=cap)
        counts[cls.code] += 1
        classes.setdefault(cls.code, cls)
        if rank == 0:
            c1_code = cls.code
    sq = float(np.sum(idx.sizes.astype(np.float64) ** 2))
    return ComponentCensus(
        n=G.n,
        counts=dict(counts),
        classes=classes,
        large=large,
        kappa=idx.count,
        c1=c1,
        c2=c2,
        chi_hat=(sq - c1 * c1) / G.n if G.n else 0.0,
        c1_edges=int(idx.edge_counts[order[0]]) if idx.count else 0,
        c1_code=c1_code,
    )


def merge_counts(tables: Iterable[dict[bytes, int]]) -> dict[bytes, int]:
    out: Counter = Counter()
    for t in tables:
        out.update(t)
    return dict(out)


def psi_functional(cen: ComponentCensus, psi: Callable, exclude_largest: bool = True) -> float:
    """Sum of |C| psi(C) over components, skipping exactly one largest component."""
    total = 0.0
    for code, cnt in cen.counts.items():
        cls = cen.classes[code]
        total += cnt * cls.v * psi(cls)
    for size, edges in cen.large:
        total += size * psi(LargeComponent(size, edges))
    if exclude_largest and cen.kappa:
        first = cen.classes[cen.c1_code] if cen.c1_code is not None else LargeComponent(cen.c1, cen.c1_edges)
        total -= cen.c1 * psi(first)
    return total


def count_class(G: Multigraph, H: CanonGraph, index: ComponentIndex | None = None) -> int:
    """Number of components isomorphic to H, classifying only signature-compatible ones."""
    idx = index or ComponentIndex(G)
    cand = np.flatnonzero((idx.sizes == H.v) & (idx.edge_counts == H.e))
    if len(cand) == 0:
        return 0
    if H.v == 1:
        return len(cand)  # one vertex with e loops: unique class
    if H.v == 2 and H.kind == "tree":
        return len(cand)
    total = 0
    for c in cand.tolist():
        if classify_local(*idx.local(c)).code == H.code:
            total += 1
    return total


# --- copies of small trees -----------------------------------------------------------


def _simple_adjacency(G: Multigraph) -> list[dict[int, int]]:
    e = G.edges
    e = e[e[:, 0] != e[:, 1]]
    adj: list[dict[int, int]] = [dict() for _ in range(G.n)]
    if len(e) == 0:
        return adj
    keys, mult = np.unique(e[:, 0] * G.n + e[:, 1], return_counts=True)
    for key, m in zip(keys.tolist(), mult.tolist()):
        a, b = divmod(key, G.n)
        adj[a][b] = m
        adj[b][a] = m
    return adj


def count_copies(T: CanonGraph, G: Multigraph, budget: int = COPY_BUDGET) -> int:
    """Unlabelled copies (not necessarily isolated) of the tree T in G.

    Counts injective embeddings weighted by edge multiplicities, divided by aut(T).
    """
    if not T.is_tree:
        raise ValueError("count_copies handles trees only")
    if T.e > budget:
        raise CapExceeded(f"tree with {T.e} edges exceeds budget {budget}")
    if T.v == 1:
        return G.n
    tn, _ = _multiplicities(T.v, T.edges)
    # order T's vertices by BFS from 0 so every vertex after the first has a placed parent
    order, parent = [0], {0: None}
    for x in order:
        for y in tn[x]:
            if y not in parent:
                parent[y] = x
                order.append(y)
    adj = _simple_adjacency(G)
    image = [0] * T.v

    def extend(i: int, used: set) -> int:
        if i == T.v:
            return 1
        x = order[i]
        px = image[parent[x]]
        total = 0
        for y, m in adj[px].items():
            if y in used:
                continue
            image[x] = y
            used.add(y)
            total += m * extend(i + 1, used)
            used.discard(y)
        return total

    labelled = 0
    for root in range(G.n):
        if not adj[root] and T.v > 1:
            continue
        image[0] = root
        labelled += extend(1, {root})
    assert labelled % T.aut == 0
    return labelled // T.aut
