"""Divisors, chip-firing, Picard classes and the poset of divisors on
spanning subgraphs, together with upper sets of that poset.

Divisors are integer tuples indexed by vertices.  Everything is exact: class
computations use Dhar-style reduction, principality uses fraction-free
elimination, and the two routes cross-check each other in the test suite.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .degeneracy import DegeneracySubset, validate_degeneracy
from .errors import BudgetExceededError, InstanceTooLargeError, PreconditionError
from .graphs import (
    Graph,
    GraphMorphism,
    OrderedPartition,
    PartialOrientation,
    SpanningSubgraph,
    bits,
    boundary_valence,
    interior_edges,
    orientation,
    popcount,
    subgraph_tree_count,
)

DEFAULT_CLOSURE_BUDGET = 10**6


def _as_subgraph(g) -> SpanningSubgraph:
    if isinstance(g, SpanningSubgraph):
        return g
    if isinstance(g, Graph):
        return SpanningSubgraph(g, g.full_edge_mask)
    raise PreconditionError(f"expected Graph or SpanningSubgraph, got {type(g)!r}")


def degree(divisor) -> int:
    return sum(divisor)


def divisor_sum(divisor, vertex_mask: int) -> int:
    return sum(divisor[v] for v in bits(vertex_mask))


def principal_divisor(g, f) -> tuple:
    """div(f): at each vertex, the inflow of f-differences along incident edges.

    Loops contribute nothing; the result always has degree zero and equals the
    negative Laplacian of the subgraph applied to f.
    """
    sub = _as_subgraph(g)
    graph = sub.graph
    if len(f) != graph.n:
        raise PreconditionError("function length must equal vertex count")
    out = [0] * graph.n
    for i in bits(sub.edge_mask):
        u, v = graph.edges[i]
        if u == v:
            continue
        out[u] += f[v] - f[u]
        out[v] += f[u] - f[v]
    return tuple(out)


def _fire(graph: Graph, edge_mask: int, d, f, block_mask: int, times: int):
    """Fire ``block_mask`` ``times`` times, updating divisor d and potential f."""
    for i in bits(edge_mask):
        u, v = graph.edges[i]
        if u == v:
            continue
        u_in = (block_mask >> u) & 1
        v_in = (block_mask >> v) & 1
        if u_in and not v_in:
            d[u] -= times
            d[v] += times
        elif v_in and not u_in:
            d[v] -= times
            d[u] += times
    for v in bits(block_mask):
        f[v] += times


def q_reduce(g, divisor) -> tuple:
    """Reduce a divisor to its canonical representative, per component.

    The base vertex of each component is its lowest index.  Returns
    ``(reduced, f)`` with ``reduced = divisor + div(f)``.  Two divisors reduce
    to the same representative exactly when their difference is principal on
    the subgraph.
    """
    sub = _as_subgraph(g)
    graph = sub.graph
    if len(divisor) != graph.n:
        raise PreconditionError("divisor length must equal vertex count")
    d = list(divisor)
    f = [0] * graph.n
    for comp in sub.components():
        _q_reduce_component(graph, sub.edge_mask, comp, d, f)
    return tuple(d), tuple(f)


def _q_reduce_component(graph, edge_mask, comp, d, f):
    q = comp & -comp
    q_idx = q.bit_length() - 1
    if comp == q:
        return
    dist = _distances(graph, edge_mask, comp, q_idx)

    def crossing(v, target_mask):
        cnt = 0
        for i in bits(edge_mask):
            a, b = graph.edges[i]
            if a == b:
                continue
            if a == v and (target_mask >> b) & 1:
                cnt += 1
            elif b == v and (target_mask >> a) & 1:
                cnt += 1
        return cnt

    # Stage 1: pull debt toward the base, farthest vertices first.  Unfiring
    # the outer layer set {dist >= k} feeds every indebted vertex on its rim
    # from the layer below, so the weighted deficit strictly drops.
    while True:
        worst = None
        for v in bits(comp & ~q):
            if d[v] < 0 and (worst is None or dist[v] > dist[worst]):
                worst = v
        if worst is None:
            break
        k = dist[worst]
        outer = 0
        for v in bits(comp):
            if dist[v] >= k:
                outer |= 1 << v
        gain = crossing(worst, comp & ~outer)
        times = (-d[worst] + gain - 1) // gain
        _fire(graph, edge_mask, d, f, comp & ~outer, times)

    # Stage 2: Dhar burning from the base; fire the unburnt set until all burn.
    while True:
        burnt = q
        progress = True
        while progress:
            progress = False
            for v in bits(comp & ~burnt):
                if crossing(v, burnt) > d[v]:
                    burnt |= 1 << v
                    progress = True
        if burnt == comp:
            return
        unburnt = comp & ~burnt
        times = None
        for v in bits(unburnt):
            out = crossing(v, burnt)
            if out > 0:
                t = d[v] // out
                times = t if times is None else min(times, t)
        _fire(graph, edge_mask, d, f, unburnt, max(times, 1))


def _distances(graph, edge_mask, comp, start):
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for i in bits(edge_mask):
                a, b = graph.edges[i]
                if a == b:
                    continue
                other = None
                if a == v and (comp >> b) & 1:
                    other = b
                elif b == v and (comp >> a) & 1:
                    other = a
                if other is not None and other not in dist:
                    dist[other] = dist[v] + 1
                    nxt.append(other)
        frontier = nxt
    return dist


def pic_class(g, divisor) -> tuple:
    """Canonical representative of the divisor class on the subgraph."""
    reduced, _ = q_reduce(g, divisor)
    return reduced


def is_principal(g, divisor):
    """Integral witness f with div(f) = divisor, or None.

    Decided per connected component by exact elimination on the Laplacian
    with the lowest-index vertex pinned to zero; a rational solution exists
    whenever the component degree vanishes, and the divisor is principal
    exactly when that solution is integral.
    """
    sub = _as_subgraph(g)
    graph = sub.graph
    if len(divisor) != graph.n:
        raise PreconditionError("divisor length must equal vertex count")
    witness = [0] * graph.n
    for comp in sub.components():
        if divisor_sum(divisor, comp) != 0:
            raise PreconditionError(
                "principality requires degree zero on every component"
            )
        verts = list(bits(comp))
        if len(verts) == 1:
            continue
        others = verts[1:]
        idx = {v: i for i, v in enumerate(others)}
        m = len(others)
        a = [[Fraction(0)] * (m + 1) for _ in range(m)]
        for i in bits(sub.edge_mask):
            u, v = graph.edges[i]
            if u == v or not ((comp >> u) & 1):
                continue
            for (x, y) in ((u, v), (v, u)):
                if x in idx:
                    r = idx[x]
                    a[r][r] -= 1
                    if y in idx:
                        a[r][idx[y]] += 1
        for v in others:
            a[idx[v]][m] = Fraction(divisor[v])
        sol = _solve_exact(a, m)
        if sol is None:
            return None
        for v, val in zip(others, sol):
            if val.denominator != 1:
                return None
            witness[v] = int(val)
    if principal_divisor(sub, witness) != tuple(divisor):
        return None
    return tuple(witness)


def _solve_exact(a, m):
    for col in range(m):
        pivot = next((r for r in range(col, m) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        pv = a[col][col]
        a[col] = [x / pv for x in a[col]]
        for r in range(m):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [a[r][m] for r in range(m)]


def pic_order(g) -> int:
    """Order of the divisor class group: product of component tree counts."""
    sub = _as_subgraph(g)
    return subgraph_tree_count(sub.graph, sub.graph.full_vertex_mask, sub.edge_mask)


def outgoing_divisor(o: PartialOrientation) -> tuple:
    out = [0] * o.graph.n
    for (_, head) in o.heads:
        out[head] += 1
    return tuple(out)


@dataclass(frozen=True)
class OrbitElement:
    """A pair (spanning subgraph, divisor), one point of the orbit poset."""

    graph: Graph
    edge_mask: int
    divisor: tuple

    def __post_init__(self):
        if len(self.divisor) != self.graph.n:
            raise PreconditionError("divisor length must equal vertex count")
        if self.edge_mask & ~self.graph.full_edge_mask:
            raise PreconditionError("edge mask outside the graph's edge range")

    @property
    def removed_mask(self) -> int:
        return self.graph.full_edge_mask & ~self.edge_mask

    @property
    def ambient_degree(self) -> int:
        return degree(self.divisor) + popcount(self.removed_mask)

    def key(self):
        return (self.edge_mask, self.divisor)


def poset_leq(lower: OrbitElement, upper: OrbitElement):
    """Witness orientation for lower <= upper in the orbit poset, or None.

    The witness orients exactly the edges of upper absent from lower, with
    head counts matching the divisor difference.  The search is a bounded
    backtracking over head assignments, preferring the smaller endpoint, so
    the returned witness is deterministic.
    """
    if lower.graph != upper.graph:
        raise PreconditionError("orbit elements live on different graphs")
    if lower.ambient_degree != upper.ambient_degree:
        raise PreconditionError("orbit elements have different ambient degrees")
    if lower.edge_mask & ~upper.edge_mask:
        return None
    for heads in _head_assignments(upper, lower):
        return orientation(upper.graph, heads)
    return None


def orientations_between(upper: OrbitElement, lower: OrbitElement):
    """All witness orientations with upper >= lower, in deterministic order."""
    if lower.edge_mask & ~upper.edge_mask:
        return
    for heads in _head_assignments(upper, lower):
        yield orientation(upper.graph, heads)


def _head_assignments(upper: OrbitElement, lower: OrbitElement):
    graph = upper.graph
    to_orient = upper.edge_mask & ~lower.edge_mask
    need = [u - l for u, l in zip(upper.divisor, lower.divisor)]
    if any(x < 0 for x in need) or sum(need) != popcount(to_orient):
        return
    edges = list(bits(to_orient))
    # loops are forced onto their own vertex
    for i in edges:
        u, v = graph.edges[i]
        if u == v:
            need[u] -= 1
            if need[u] < 0:
                return
    free = [i for i in edges if graph.edges[i][0] != graph.edges[i][1]]
    chosen = []

    def backtrack(pos):
        if pos == len(free):
            if all(x == 0 for x in need):
                loops = [
                    (i, graph.edges[i][0])
                    for i in edges
                    if graph.edges[i][0] == graph.edges[i][1]
                ]
                yield tuple(sorted(loops + chosen))
            return
        i = free[pos]
        u, v = graph.edges[i]
        for h in (u, v):
            if need[h] > 0:
                need[h] -= 1
                chosen.append((i, h))
                yield from backtrack(pos + 1)
                chosen.pop()
                need[h] += 1

    yield from backtrack(0)


def pushforward_orbit(m: GraphMorphism, x: OrbitElement) -> OrbitElement:
    """Image of an orbit element under a contraction morphism."""
    if x.graph != m.source:
        raise PreconditionError("orbit element does not live on the morphism source")
    removed = x.removed_mask
    new_mask = 0
    for j in range(len(m.target.edges)):
        if not (removed >> m.edge_map[j]) & 1:
            new_mask |= 1 << j
    new_div = []
    for w in range(m.target.n):
        fiber = m.fiber(1 << w)
        val = divisor_sum(x.divisor, fiber)
        val += interior_edges(m.source, removed & m.contracted_mask, fiber)
        new_div.append(val)
    return OrbitElement(m.target, new_mask, tuple(new_div))


class UpperSet:
    """A finite upward-closed set of orbit elements of one ambient degree.

    Elements are stored as (edge mask, divisor) pairs.  Upward closure is
    checked on construction by verifying closure under all single oriented
    edge additions, which generate the covering relations of the poset.
    """

    def __init__(self, graph: Graph, degree_: int, elements):
        self.graph = graph
        self.degree = degree_
        elems = set()
        for item in elements:
            if isinstance(item, OrbitElement):
                mask, div = item.edge_mask, item.divisor
            else:
                mask, div = item
            elems.add((mask, tuple(div)))
        for (mask, div) in elems:
            removed = popcount(graph.full_edge_mask & ~mask)
            if degree(div) + removed != degree_:
                raise PreconditionError(
                    f"element (mask={mask:#x}, D={list(div)}) has ambient degree "
                    f"{degree(div) + removed}, expected {degree_}"
                )
        self.elements = frozenset(elems)
        self._check_upward_closed()

    def _check_upward_closed(self):
        full = self.graph.full_edge_mask
        for (mask, div) in self.elements:
            for i in bits(full & ~mask):
                u, v = self.graph.edges[i]
                for h in {u, v}:
                    up = list(div)
                    up[h] += 1
                    if (mask | (1 << i), tuple(up)) not in self.elements:
                        raise PreconditionError(
                            f"not upward closed at (mask={mask:#x}, D={list(div)})"
                            f" adding edge {i} with head {h}"
                        )

    def __contains__(self, item):
        if isinstance(item, OrbitElement):
            item = item.key()
        return (item[0], tuple(item[1])) in self.elements

    def __len__(self):
        return len(self.elements)

    def __eq__(self, other):
        return (
            isinstance(other, UpperSet)
            and self.graph == other.graph
            and self.degree == other.degree
            and self.elements == other.elements
        )

    def __hash__(self):
        return hash((self.graph, self.degree, self.elements))

    def sorted_elements(self):
        return sorted(self.elements)

    def divisors_at(self, edge_mask: int):
        """P(G): the divisors attached to one spanning subgraph, sorted."""
        return sorted(d for (m, d) in self.elements if m == edge_mask)

    def orbit_elements(self):
        for (mask, div) in self.sorted_elements():
            yield OrbitElement(self.graph, mask, div)


def upper_closure(seeds, ambient_edge_mask=None, budget=DEFAULT_CLOSURE_BUDGET):
    """Smallest upward-closed superset of the seed orbit elements.

    Breadth-first addition of single oriented edges; ``ambient_edge_mask``
    restricts which edges may ever be added (used to close inside a spanning
    subgraph).  Raises BudgetExceededError past ``budget`` elements.
    """
    seeds = list(seeds)
    if not seeds:
        raise PreconditionError("upper closure needs at least one seed")
    graph = seeds[0].graph
    amb_deg = seeds[0].ambient_degree
    if ambient_edge_mask is None:
        ambient_edge_mask = graph.full_edge_mask
    for s in seeds:
        if s.graph != graph:
            raise PreconditionError("seeds live on different graphs")
        if s.ambient_degree != amb_deg:
            raise PreconditionError("seeds have inconsistent ambient degrees")
        if s.edge_mask & ~ambient_edge_mask:
            raise PreconditionError("seed uses edges outside the ambient mask")
    seen = set()
    queue = deque()
    for s in seeds:
        key = s.key()
        if key not in seen:
            seen.add(key)
            queue.append(key)
    while queue:
        mask, div = queue.popleft()
        for i in bits(ambient_edge_mask & ~mask):
            u, v = graph.edges[i]
            for h in {u, v}:
                up = list(div)
                up[h] += 1
                key = (mask | (1 << i), tuple(up))
                if key not in seen:
                    seen.add(key)
                    queue.append(key)
                    if len(seen) > budget:
                        raise BudgetExceededError(
                            f"upper closure exceeded {budget} elements", budget
                        )
    return UpperSet(graph, amb_deg, seen)


def maximal_elements(p: UpperSet):
    """Divisors sitting on the full ambient subgraph; these are the maxima."""
    full = _ambient_mask(p)
    return sorted(d for (m, d) in p.elements if m == full)


def _ambient_mask(p: UpperSet) -> int:
    mask = 0
    for (m, _) in p.elements:
        mask |= m
    return mask


def degeneracy_of_upper_set(p: UpperSet) -> DegeneracySubset:
    """Subsets split by some element of the upper set (no kept crossing edge)."""
    if not p.elements:
        raise PreconditionError("degeneracy of an empty upper set is undefined")
    graph = p.graph
    found = set()
    from .graphs import biconnected_subsets

    for w in biconnected_subsets(graph):
        for (mask, _) in p.elements:
            if boundary_valence(graph, mask, w) == 0:
                found.add(w)
                break
    return validate_degeneracy(graph, found)


def partition_orientation(graph: Graph, edge_mask: int, blocks) -> PartialOrientation:
    """Orient the crossing edges of an ordered partition toward later blocks."""
    block_of = {}
    for idx, b in enumerate(blocks):
        for v in bits(b):
            block_of[v] = idx
    heads = []
    for i in bits(edge_mask):
        u, v = graph.edges[i]
        if u == v:
            continue
        a, b = block_of[u], block_of[v]
        if a < b:
            heads.append((i, v))
        elif a > b:
            heads.append((i, u))
    return orientation(graph, heads)


@lru_cache(maxsize=None)
def _ordered_partitions_cached(n: int):
    elements = list(range(n))

    unordered = []

    def gen(idx, blocks):
        if idx == n:
            unordered.append([b for b in blocks])
            return
        v = elements[idx]
        for b in blocks:
            b.append(v)
            gen(idx + 1, blocks)
            b.pop()
        blocks.append([v])
        gen(idx + 1, blocks)
        blocks.pop()

    gen(0, [])
    from itertools import permutations

    out = []
    for blocks in unordered:
        masks = [sum(1 << v for v in b) for b in blocks]
        for perm in permutations(masks):
            out.append(tuple(perm))
    out.sort()
    return tuple(out)


def ordered_partitions(graph: Graph):
    """Every ordered partition of V(Γ), as tuples of blocks, sorted."""
    if graph.n > 9:
        raise InstanceTooLargeError(
            f"ordered partition enumeration supports at most 9 vertices, got {graph.n}"
        )
    return _ordered_partitions_cached(graph.n)


def partition_difference_principal(g, p: OrderedPartition):
    """Detect when the two partition orientations differ by chip firing.

    If the difference of the outgoing divisors of the partition and its
    reverse is principal on the subgraph, returns the ordered partition whose
    blocks are the descending level sets of the chip-firing witness; edges of
    the subgraph then only join consecutive blocks.  Returns None otherwise.
    """
    sub = _as_subgraph(g)
    graph = sub.graph
    fwd = partition_orientation(graph, sub.edge_mask, p.blocks)
    rev = partition_orientation(graph, sub.edge_mask, tuple(reversed(p.blocks)))
    diff = tuple(
        a - b for a, b in zip(outgoing_divisor(fwd), outgoing_divisor(rev))
    )
    f = is_principal(sub, diff)
    if f is None:
        return None
    lo = min(f)
    f = [x - lo for x in f]
    q = max(f)
    blocks = []
    for level in range(q, -1, -1):
        m = 0
        for v in range(graph.n):
            if f[v] == level:
                m |= 1 << v
        if m:
            blocks.append(m)
    result = OrderedPartition(graph, tuple(blocks))
    new = partition_orientation(graph, sub.edge_mask, result.blocks)
    if new.heads != fwd.heads:
        raise PreconditionError(
            "level-set partition does not reproduce the original orientation"
        )
    for ai in range(len(blocks)):
        for bi in range(ai + 2, len(blocks)):
            if _crossing_edges(graph, sub.edge_mask, blocks[ai], blocks[bi]):
                raise PreconditionError(
                    "level-set partition joins non-consecutive blocks"
                )
    if principal_divisor(sub, f) != diff:
        raise PreconditionError("level-set identity failed to verify")
    return result


def _crossing_edges(graph, edge_mask, w1, w2) -> bool:
    for i in bits(edge_mask):
        u, v = graph.edges[i]
        if u == v:
            continue
        bu, bv = 1 << u, 1 << v
        if (bu & w1 and bv & w2) or (bu & w2 and bv & w1):
            return True
    return False


@dataclass(frozen=True)
class ThetaViolation:
    element: tuple
    partition: tuple
    orientation_heads: tuple
    reason: str
    target: tuple | None = None


def theta_complete_check(p: UpperSet):
    """Concordance criterion over all degeneration triangles of the set.

    For every element (G, D) of p, every partition-induced degeneration of it
    landing in p and every poset degeneration of it landing in p, the two
    orientations must agree on common edges and their union must push (G, D)
    to another element of p.  Returns None on success, else the first
    violation found in deterministic order.
    """
    graph = p.graph
    parts = ordered_partitions(graph)
    elems = p.sorted_elements()
    for (mask, div) in elems:
        upper = OrbitElement(graph, mask, div)
        part_orients = []
        for blocks in parts:
            o1 = partition_orientation(graph, mask, blocks)
            tgt_mask = mask & ~o1.support
            tgt_div = tuple(a - b for a, b in zip(div, outgoing_divisor(o1)))
            if (tgt_mask, tgt_div) in p.elements:
                part_orients.append((blocks, o1))
        if not part_orients:
            continue
        for (mask2, div2) in elems:
            if mask2 & ~mask:
                continue
            lower = OrbitElement(graph, mask2, div2)
            for o in orientations_between(upper, lower):
                o_map = dict(o.heads)
                for blocks, o1 in part_orients:
                    conflict = False
                    for (i, h) in o1.heads:
                        if i in o_map and o_map[i] != h:
                            conflict = True
                            break
                    if conflict:
                        return ThetaViolation(
                            element=(mask, div),
                            partition=blocks,
                            orientation_heads=o.heads,
                            reason="orientations not concordant",
                        )
                    merged = dict(o_map)
                    merged.update(o1.heads)
                    support = 0
                    heads_div = [0] * graph.n
                    for i, h in merged.items():
                        support |= 1 << i
                        heads_div[h] += 1
                    tgt_mask = mask & ~support
                    tgt_div = tuple(a - b for a, b in zip(div, heads_div))
                    if (tgt_mask, tgt_div) not in p.elements:
                        return ThetaViolation(
                            element=(mask, div),
                            partition=blocks,
                            orientation_heads=o.heads,
                            reason="combined degeneration leaves the set",
                            target=(tgt_mask, tgt_div),
                        )
    return None
