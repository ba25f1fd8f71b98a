"""Configuration-model samplers: half-edge matching, the cuff variant, simple-graph rejection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .degrees import DegreeSequence, ParityViolation

MAX_ENUM_HALF_EDGES = 12
DEFAULT_MIN_TRIES = 10_000


class TriesExhausted(RuntimeError):
    def __init__(self, attempts: int):
        super().__init__(f"no simple graph after {attempts} attempts")
        self.attempts = attempts


@dataclass(frozen=True, eq=False)
class Multigraph:
    """Loop- and multi-edge-capable graph on vertices 0..n-1.

    ``edges`` is an (m, 2) int array with u <= v in every row; a loop is (v, v).
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        e = np.sort(e, axis=1)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Multigraph":
        return cls(n, np.asarray(list(edges), dtype=np.int64).reshape(-1, 2))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def edge_list(self) -> list[tuple[int, int]]:
        return [tuple(r) for r in self.edges.tolist()]

    def canonical_edges(self) -> tuple[tuple[int, int], ...]:
        """Sorted edge multiset; equal for identical labelled multigraphs."""
        return tuple(sorted(self.edge_list()))

    def __eq__(self, other):
        return isinstance(other, Multigraph) and self.n == other.n and self.canonical_edges() == other.canonical_edges()

    def __hash__(self):
        return hash((self.n, self.canonical_edges()))


def half_edge_owners(seq: DegreeSequence) -> np.ndarray:
    # half-edges of vertex i occupy one contiguous block, vertices in input order
    return np.repeat(np.arange(seq.n, dtype=np.int64), seq.as_array())


def _require_even(seq: DegreeSequence):
    if seq.N % 2:
        raise ParityViolation(f"total degree {seq.N} is odd")


def sample_matching(N: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform perfect matching of half-edges 0..N-1 as an (N/2, 2) array of index pairs."""
    if N % 2:
        raise ParityViolation(f"cannot match {N} half-edges")
    return rng.permutation(N).reshape(-1, 2)


def sample_multigraph(seq: DegreeSequence, rng: np.random.Generator) -> Multigraph:
    _require_even(seq)
    owners = half_edge_owners(seq)
    pairs = sample_matching(seq.N, rng)
    return Multigraph(seq.n, owners[pairs])


def sample_via_cuffs(seq: DegreeSequence, rng: np.random.Generator) -> Multigraph:
    """Join vertex half-edge alpha_i to cuff half-edge beta_pi(i); cuff j owns beta_2j, beta_2j+1.

    Merging the two edges at every cuff gives the multigraph.
    """
    _require_even(seq)
    owners = half_edge_owners(seq)
    pi = rng.permutation(seq.N)
    alpha_at = np.empty_like(pi)
    alpha_at[pi] = np.arange(seq.N)
    cuff_ends = alpha_at.reshape(-1, 2)
    return Multigraph(seq.n, owners[cuff_ends])


def loop_and_parallel_counts(G: Multigraph) -> tuple[int, int]:
    """(number of loops, sum over distinct vertex pairs of C(multiplicity, 2))."""
    u, v = G.edges[:, 0], G.edges[:, 1]
    is_loop = u == v
    loops = int(is_loop.sum())
    keys = u[~is_loop] * G.n + v[~is_loop]
    if len(keys) == 0:
        return loops, 0
    _, mult = np.unique(keys, return_counts=True)
    return loops, int((mult * (mult - 1) // 2).sum())


def is_simple(G: Multigraph) -> bool:
    return loop_and_parallel_counts(G) == (0, 0)


def default_max_tries(acceptance_hint: float | None = None) -> int:
    if not acceptance_hint:
        return DEFAULT_MIN_TRIES
    return max(DEFAULT_MIN_TRIES, math.ceil(1000 / acceptance_hint))


def sample_simple(
    seq: DegreeSequence,
    rng: np.random.Generator,
    max_tries: int | None = None,
    acceptance_hint: float | None = None,
) -> tuple[Multigraph, int]:
    """Rejection sampler: redraw the configuration model until it is simple.

    Returns the graph and the number of attempts used. Raises TriesExhausted.
    """
    _require_even(seq)
    if max_tries is None:
        max_tries = default_max_tries(acceptance_hint)
    owners = half_edge_owners(seq)
    for attempt in range(1, max_tries + 1):
        G = Multigraph(seq.n, owners[sample_matching(seq.N, rng)])
        if is_simple(G):
            return G, attempt
    raise TriesExhausted(max_tries)


def _pairings(items: list[int]):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for j, partner in enumerate(rest):
        for tail in _pairings(rest[:j] + rest[j + 1 :]):
            yield ((first, partner),) + tail


def enumerate_matchings(seq: DegreeSequence) -> list[tuple[tuple[tuple[int, int], ...], Multigraph]]:
    """All (N-1)!! pairings of the half-edges with the multigraph each induces."""
    _require_even(seq)
    if seq.N > MAX_ENUM_HALF_EDGES:
        raise ValueError(f"N={seq.N} exceeds enumeration limit {MAX_ENUM_HALF_EDGES}")
    owners = half_edge_owners(seq)
    out = []
    for matching in _pairings(list(range(seq.N))):
        arr = np.asarray(matching, dtype=np.int64).reshape(-1, 2)
        out.append((matching, Multigraph(seq.n, owners[arr])))
    return out
