"""Finite multigraphs with positional edge identity, plus subset combinatorics.

Vertex subsets are int bitmasks (bit v = vertex v), edge subsets are int
bitmasks over edge indices.  Parallel edges and loops are allowed everywhere;
edges are identified by their index in the edge list, so parallel edges stay
distinguishable.  All enumerating operations return deterministically ordered
lists (ascending bitmask or ascending edge index).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import InstanceTooLargeError, PreconditionError

MAX_ENUM_VERTICES = 20
MAX_ENUM_EDGES = 20


def mask_of(vertices) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def bits(mask: int):
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class Graph:
    """A finite multigraph on vertices ``0..n-1`` with an ordered edge list.

    ``genera`` carries an optional nonnegative integer per vertex (used by the
    nodal-curve dictionary); it defaults to all zeros and does not affect any
    purely graph-theoretic operation.
    """

    def __init__(self, vertex_count: int, edges, genera=None):
        if vertex_count < 1:
            raise PreconditionError("graph needs at least one vertex")
        self.n = vertex_count
        norm = []
        for (u, v) in edges:
            if not (0 <= u < vertex_count and 0 <= v < vertex_count):
                raise PreconditionError(f"edge ({u},{v}) out of vertex range")
            norm.append((u, v) if u <= v else (v, u))
        self.edges = tuple(norm)
        if genera is None:
            genera = (0,) * vertex_count
        genera = tuple(genera)
        if len(genera) != vertex_count:
            raise PreconditionError("genera length must equal vertex count")
        if any(g < 0 for g in genera):
            raise PreconditionError("genera must be nonnegative")
        self.genera = genera

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.edges == other.edges
            and self.genera == other.genera
        )

    def __hash__(self):
        return hash((self.n, self.edges, self.genera))

    def __repr__(self):
        return f"Graph({self.n}, {list(self.edges)})"

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def full_vertex_mask(self) -> int:
        return (1 << self.n) - 1

    @cached_property
    def full_edge_mask(self) -> int:
        return (1 << len(self.edges)) - 1

    @cached_property
    def neighbor_masks(self) -> tuple:
        """Per-vertex mask of distinct neighbors through non-loop edges."""
        nbr = [0] * self.n
        for (u, v) in self.edges:
            if u != v:
                nbr[u] |= 1 << v
                nbr[v] |= 1 << u
        return tuple(nbr)

    @cached_property
    def loop_counts(self) -> tuple:
        cnt = [0] * self.n
        for (u, v) in self.edges:
            if u == v:
                cnt[u] += 1
        return tuple(cnt)

    @cached_property
    def nonloop_edge_mask(self) -> int:
        m = 0
        for i, (u, v) in enumerate(self.edges):
            if u != v:
                m |= 1 << i
        return m

    def is_connected_induced(self, vertex_mask: int) -> bool:
        """Connectivity of the induced subgraph on ``vertex_mask``."""
        if vertex_mask == 0:
            return False
        start = vertex_mask & -vertex_mask
        seen = start
        frontier = start
        nbr = self.neighbor_masks
        while frontier:
            nxt = 0
            for v in bits(frontier):
                nxt |= nbr[v] & vertex_mask
            frontier = nxt & ~seen
            seen |= frontier
        return seen == vertex_mask

    def is_connected(self) -> bool:
        return self.is_connected_induced(self.full_vertex_mask)

    def components(self, vertex_mask: int | None = None, edge_mask: int | None = None):
        """Connected components (as vertex masks, ascending by lowest bit).

        Vertices default to all of them and edges to the full edge set, so
        ``components(edge_mask=m)`` gives the components of a spanning
        subgraph while ``components(vertex_mask=w)`` gives those of an
        induced subgraph.
        """
        if vertex_mask is None:
            vertex_mask = self.full_vertex_mask
        if edge_mask is None:
            edge_mask = self.full_edge_mask
        nbr = [0] * self.n
        for i in bits(edge_mask):
            u, v = self.edges[i]
            if u != v and (vertex_mask >> u) & 1 and (vertex_mask >> v) & 1:
                nbr[u] |= 1 << v
                nbr[v] |= 1 << u
        comps = []
        remaining = vertex_mask
        while remaining:
            start = remaining & -remaining
            seen = start
            frontier = start
            while frontier:
                nxt = 0
                for v in bits(frontier):
                    nxt |= nbr[v]
                frontier = nxt & ~seen
                seen |= frontier
            comps.append(seen)
            remaining &= ~seen
        return comps

    def b0(self, edge_mask: int | None = None) -> int:
        return len(self.components(edge_mask=edge_mask))

    def b1(self, edge_mask: int | None = None) -> int:
        """First Betti number |E| - |V| + b0 of a spanning subgraph."""
        if edge_mask is None:
            edge_mask = self.full_edge_mask
        return popcount(edge_mask) - self.n + self.b0(edge_mask)

    def induced_edge_mask(self, vertex_mask: int) -> int:
        """Edges (including loops) with both endpoints inside ``vertex_mask``."""
        m = 0
        for i, (u, v) in enumerate(self.edges):
            if (vertex_mask >> u) & 1 and (vertex_mask >> v) & 1:
                m |= 1 << i
        return m

    def induced_b1(self, vertex_mask: int) -> int:
        em = self.induced_edge_mask(vertex_mask)
        return popcount(em) - popcount(vertex_mask) + len(
            self.components(vertex_mask=vertex_mask)
        )

    def subcurve_genus(self, vertex_mask: int) -> int:
        """Arithmetic genus of the subcurve dual to ``Γ[W]`` (uses genera)."""
        g = self.induced_b1(vertex_mask)
        for v in bits(vertex_mask):
            g += self.genera[v]
        return g

    def genus(self) -> int:
        return self.subcurve_genus(self.full_vertex_mask)


@dataclass(frozen=True)
class SpanningSubgraph:
    """A spanning subgraph ``Γ \\ S``, kept edges given as a bitmask."""

    graph: Graph
    edge_mask: int

    def __post_init__(self):
        if self.edge_mask & ~self.graph.full_edge_mask:
            raise PreconditionError("edge mask outside the graph's edge range")

    @property
    def removed_mask(self) -> int:
        return self.graph.full_edge_mask & ~self.edge_mask

    def components(self):
        return self.graph.components(edge_mask=self.edge_mask)

    def is_forest(self) -> bool:
        return is_acyclic(self.graph, self.edge_mask)


@dataclass(frozen=True)
class PartialOrientation:
    """An orientation of a subset of edges, as (edge index, head vertex) pairs.

    A loop may only be oriented with head equal to its own vertex.
    """

    graph: Graph
    heads: tuple  # sorted tuple of (edge_index, head_vertex)

    def __post_init__(self):
        seen = 0
        for (i, h) in self.heads:
            u, v = self.graph.edges[i]
            if h not in (u, v):
                raise PreconditionError(f"head {h} is not an endpoint of edge {i}")
            if (seen >> i) & 1:
                raise PreconditionError(f"edge {i} oriented twice")
            seen |= 1 << i
        if self.heads != tuple(sorted(self.heads)):
            raise PreconditionError("orientation pairs must be sorted by edge index")

    @property
    def support(self) -> int:
        m = 0
        for (i, _) in self.heads:
            m |= 1 << i
        return m


def orientation(graph: Graph, pairs) -> PartialOrientation:
    return PartialOrientation(graph, tuple(sorted(pairs)))


@dataclass(frozen=True)
class OrderedPartition:
    """An ordered partition of V(Γ) into disjoint nonempty vertex masks."""

    graph: Graph
    blocks: tuple

    def __post_init__(self):
        union = 0
        for b in self.blocks:
            if b == 0:
                raise PreconditionError("empty block in ordered partition")
            if union & b:
                raise PreconditionError("overlapping blocks in ordered partition")
            union |= b
        if union != self.graph.full_vertex_mask:
            raise PreconditionError("blocks do not cover the vertex set")


@dataclass(frozen=True)
class GraphMorphism:
    """A contraction morphism: collapse the edges of ``contracted_mask``.

    ``vertex_map[v]`` is the target vertex of source vertex ``v`` and
    ``edge_map[j]`` is the source edge index realizing target edge ``j``
    (kept edges keep their relative order).
    """

    source: Graph
    target: Graph
    contracted_mask: int
    vertex_map: tuple
    edge_map: tuple

    def fiber(self, target_vertex_mask: int) -> int:
        """Preimage of a target vertex mask under the vertex surjection."""
        m = 0
        for v in range(self.source.n):
            if (target_vertex_mask >> self.vertex_map[v]) & 1:
                m |= 1 << v
        return m

    def edge_preimage_mask(self, target_edge_mask: int) -> int:
        m = 0
        for j in bits(target_edge_mask):
            m |= 1 << self.edge_map[j]
        return m


def identity_morphism(g: Graph) -> GraphMorphism:
    return GraphMorphism(
        source=g,
        target=g,
        contracted_mask=0,
        vertex_map=tuple(range(g.n)),
        edge_map=tuple(range(len(g.edges))),
    )


def contract(g: Graph, t_mask: int) -> GraphMorphism:
    """Contract the edges in ``t_mask``.

    Target vertices are the components of (V, T), numbered by ascending
    minimal source vertex.  A merged vertex inherits the sum of the component
    genera plus the cycle rank of the contracted piece, so the total curve
    genus is preserved.
    """
    comps = g.components(edge_mask=t_mask & g.full_edge_mask)
    comp_index = {}
    for idx, c in enumerate(comps):
        comp_index[c] = idx
    vmap = [0] * g.n
    for idx, c in enumerate(comps):
        for v in bits(c):
            vmap[v] = idx
    new_genera = []
    for c in comps:
        piece_edges = t_mask & g.induced_edge_mask(c)
        piece_b1 = popcount(piece_edges) - popcount(c) + len(
            g.components(vertex_mask=c, edge_mask=piece_edges)
        )
        new_genera.append(sum(g.genera[v] for v in bits(c)) + piece_b1)
    new_edges = []
    edge_map = []
    for i, (u, v) in enumerate(g.edges):
        if (t_mask >> i) & 1:
            continue
        new_edges.append((vmap[u], vmap[v]))
        edge_map.append(i)
    target = Graph(len(comps), new_edges, new_genera)
    return GraphMorphism(
        source=g,
        target=target,
        contracted_mask=t_mask & g.full_edge_mask,
        vertex_map=tuple(vmap),
        edge_map=tuple(edge_map),
    )


def _gate_vertices(g: Graph):
    if g.n > MAX_ENUM_VERTICES:
        raise InstanceTooLargeError(
            f"subset enumeration supports at most {MAX_ENUM_VERTICES} vertices, got {g.n}"
        )


def _gate_edges(g: Graph):
    if len(g.edges) > MAX_ENUM_EDGES:
        raise InstanceTooLargeError(
            f"edge-subset enumeration supports at most {MAX_ENUM_EDGES} edges,"
            f" got {len(g.edges)}"
        )


def connected_subsets(g: Graph):
    """All nonempty W with Γ[W] connected, ascending bitmask order."""
    _gate_vertices(g)
    return [
        w for w in range(1, g.full_vertex_mask + 1) if g.is_connected_induced(w)
    ]


def biconnected_subsets(g: Graph):
    """The nontrivial W with both Γ[W] and Γ[W^c] connected.

    The result is closed under complement and listed in ascending bitmask
    order.  Rejects disconnected graphs.
    """
    if not g.is_connected():
        raise PreconditionError("biconnected subsets require a connected graph")
    _gate_vertices(g)
    full = g.full_vertex_mask
    out = []
    for w in range(1, full):
        if g.is_connected_induced(w) and g.is_connected_induced(full & ~w):
            out.append(w)
    return out


def valence(g: Graph, s_mask: int, w1: int, w2: int) -> int:
    """Number of edges of ``s_mask`` joining ``w1`` to ``w2`` (loops never count)."""
    if w1 & w2:
        raise PreconditionError("valence requires disjoint vertex subsets")
    total = 0
    for i in bits(s_mask & g.full_edge_mask):
        u, v = g.edges[i]
        if u == v:
            continue
        bu, bv = 1 << u, 1 << v
        if (bu & w1 and bv & w2) or (bu & w2 and bv & w1):
            total += 1
    return total


def boundary_valence(g: Graph, s_mask: int, w: int) -> int:
    """val_S(W, W^c): edges of ``s_mask`` crossing out of ``w``."""
    return valence(g, s_mask, w, g.full_vertex_mask & ~w)


def interior_edges(g: Graph, s_mask: int, w: int) -> int:
    """e_S(W): edges of ``s_mask`` with both endpoints (loops included) in ``w``."""
    total = 0
    for i in bits(s_mask & g.full_edge_mask):
        u, v = g.edges[i]
        if (w >> u) & 1 and (w >> v) & 1:
            total += 1
    return total


def is_acyclic(g: Graph, edge_mask: int) -> bool:
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in bits(edge_mask):
        u, v = g.edges[i]
        if u == v:
            return False
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def spanning_forests(g: Graph):
    """All acyclic edge subsets (as masks, ascending). Loops are excluded."""
    _gate_edges(g)
    out = []
    nonloop = g.nonloop_edge_mask
    for m in range(g.full_edge_mask + 1):
        if m & ~nonloop:
            continue
        if is_acyclic(g, m):
            out.append(m)
    return out


def spanning_trees(g: Graph):
    """Spanning trees of a connected graph, as edge masks in ascending order."""
    if not g.is_connected():
        raise PreconditionError("spanning trees require a connected graph")
    want = g.n - 1
    return [m for m in spanning_forests(g) if popcount(m) == want]


def tree_count(g: Graph) -> int:
    return len(spanning_trees(g))


def forest_count(g: Graph) -> int:
    return len(spanning_forests(g))


def kirchhoff_count(g: Graph) -> int:
    """Spanning-tree count via the reduced Laplacian determinant.

    Independent of the enumeration route: integer-exact Bareiss elimination
    on the Laplacian with row/column 0 deleted.
    """
    if not g.is_connected():
        raise PreconditionError("Kirchhoff count requires a connected graph")
    n = g.n
    if n == 1:
        return 1
    lap = [[0] * n for _ in range(n)]
    for (u, v) in g.edges:
        if u == v:
            continue
        lap[u][u] += 1
        lap[v][v] += 1
        lap[u][v] -= 1
        lap[v][u] -= 1
    m = [row[1:] for row in lap[1:]]
    return _bareiss_det(m)


def _bareiss_det(m) -> int:
    n = len(m)
    if n == 0:
        return 1
    m = [row[:] for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def subgraph_tree_count(g: Graph, vertex_mask: int, edge_mask: int) -> int:
    """Number of maximal forests of the subgraph (vertex_mask, edge_mask).

    Multiplicative over its connected components; loops are ignored.
    """
    total = 1
    for comp in g.components(vertex_mask=vertex_mask, edge_mask=edge_mask):
        edges_in = [
            i
            for i in bits(edge_mask)
            if g.edges[i][0] != g.edges[i][1]
            and (comp >> g.edges[i][0]) & 1
            and (comp >> g.edges[i][1]) & 1
        ]
        k = popcount(comp) - 1
        if k == 0:
            continue
        cnt = 0
        for combo_mask in _size_k_subsets(edges_in, k):
            if is_acyclic(g, combo_mask) and len(
                g.components(vertex_mask=comp, edge_mask=combo_mask)
            ) == 1:
                cnt += 1
        total *= cnt
    return total


def _size_k_subsets(indices, k):
    from itertools import combinations

    for combo in combinations(indices, k):
        yield mask_of_edges(combo)


def mask_of_edges(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


# -- common model graphs ------------------------------------------------------

def cycle_graph(n: int, genera=None) -> Graph:
    """The cycle C_n: edge i joins vertices i and i+1 (indices mod n)."""
    if n < 2:
        raise PreconditionError("cycle graph needs at least 2 vertices")
    if n == 2:
        edges = [(0, 1), (0, 1)]
    else:
        edges = [(i, (i + 1) % n) for i in range(n)]
    return Graph(n, edges, genera)


def vine_graph(k: int, genera=None) -> Graph:
    """Two vertices joined by k parallel edges."""
    if k < 1:
        raise PreconditionError("vine graph needs at least one edge")
    return Graph(2, [(0, 1)] * k, genera)


def path_graph(n: int, genera=None) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)], genera)


def star_graph(leaves: int, genera=None) -> Graph:
    """Center vertex 0 joined to ``leaves`` outer vertices."""
    return Graph(leaves + 1, [(0, i + 1) for i in range(leaves)], genera)
