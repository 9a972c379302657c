"""Degeneracy subsets: complement- and union-closed families of biconnected
vertex subsets, their extension to connected subsets, admissible spanning
subgraphs and the associated forest-counting complexity."""

from __future__ import annotations

from functools import cached_property

from .errors import PreconditionError, ValidationError
from .graphs import (
    Graph,
    GraphMorphism,
    SpanningSubgraph,
    biconnected_subsets,
    bits,
    connected_subsets,
    contract,
    is_acyclic,
    popcount,
    spanning_forests,
)


class DegeneracySubset:
    """A validated degeneracy family on a connected graph.

    Closed under complement, and under disjoint unions that stay biconnected.
    Values are immutable once validated.
    """

    def __init__(self, graph: Graph, subsets: frozenset):
        self.graph = graph
        self.subsets = subsets

    def __eq__(self, other):
        return (
            isinstance(other, DegeneracySubset)
            and self.graph == other.graph
            and self.subsets == other.subsets
        )

    def __hash__(self):
        return hash((self.graph, self.subsets))

    def __contains__(self, mask: int) -> bool:
        return mask in self.subsets

    def __repr__(self):
        return f"DegeneracySubset({sorted(self.subsets)})"

    @cached_property
    def extended(self) -> frozenset:
        """Connected subsets whose complement components all lie in the family,
        together with the full vertex set."""
        graph = self.graph
        full = graph.full_vertex_mask
        out = {full}
        for w in connected_subsets(graph):
            if w == full:
                continue
            comps = graph.components(vertex_mask=full & ~w)
            if all(c in self.subsets for c in comps):
                out.add(w)
        return frozenset(out)

    def sorted_subsets(self):
        return sorted(self.subsets)


def validate_degeneracy(graph: Graph, subsets) -> DegeneracySubset:
    """Check both closure axioms exhaustively and freeze the family."""
    if not graph.is_connected():
        raise PreconditionError("degeneracy subsets live on connected graphs")
    bcon = set(biconnected_subsets(graph))
    fam = frozenset(subsets)
    full = graph.full_vertex_mask
    for w in fam:
        if w not in bcon:
            raise ValidationError(
                f"subset {w:#x} is not biconnected", witness=w
            )
        if (full & ~w) not in fam:
            raise ValidationError(
                f"complement of {w:#x} is missing from the family", witness=w
            )
    members = sorted(fam)
    for a in members:
        for b in members:
            if b <= a or a & b:
                continue
            union = a | b
            if union in bcon and union not in fam:
                raise ValidationError(
                    f"union {union:#x} of disjoint members {a:#x}, {b:#x} missing",
                    witness=(a, b),
                )
    return DegeneracySubset(graph, fam)


def empty_degeneracy(graph: Graph) -> DegeneracySubset:
    return validate_degeneracy(graph, frozenset())


def full_degeneracy(graph: Graph) -> DegeneracySubset:
    return validate_degeneracy(graph, frozenset(biconnected_subsets(graph)))


def extended_degeneracy(d: DegeneracySubset) -> frozenset:
    return d.extended


def is_admissible(g: SpanningSubgraph, d: DegeneracySubset) -> bool:
    """Every connected component's vertex set lies in the extended family."""
    ext = d.extended
    return all(c in ext for c in g.components())


def admissible_forests(graph: Graph, d: DegeneracySubset):
    """All admissible spanning forests, as edge masks in ascending order."""
    ext = d.extended
    out = []
    for m in spanning_forests(graph):
        comps = graph.components(edge_mask=m)
        if all(c in ext for c in comps):
            out.append(m)
    return out


def complexity(g: SpanningSubgraph, d: DegeneracySubset) -> int:
    """Number of admissible spanning forests contained in the subgraph.

    Reduces to the spanning-tree count for the empty family and to the
    spanning-forest count for the full family.
    """
    if not is_admissible(g, d):
        raise PreconditionError("complexity requires an admissible subgraph")
    return sum(1 for f in admissible_forests(g.graph, d) if not (f & ~g.edge_mask))


def complexity_recursive(g: SpanningSubgraph, d: DegeneracySubset) -> int:
    """Deletion/contraction evaluation of the same count.

    Recurses on any non-loop edge whose deletion stays admissible.  When no
    such edge exists the working subgraph is a forest (a cycle edge never
    changes components, so it would be removable) and the remaining subsets
    are counted directly.
    """
    if not is_admissible(g, d):
        raise PreconditionError("complexity requires an admissible subgraph")
    graph = g.graph
    work = g.edge_mask & graph.nonloop_edge_mask  # forests never contain loops
    for i in bits(work):
        deleted = SpanningSubgraph(graph, work & ~(1 << i))
        if not is_admissible(deleted, d):
            continue
        morph = contract(graph, 1 << i)
        pushed = pushforward_degeneracy(morph, d)
        new_mask = 0
        for j in range(len(morph.target.edges)):
            src = morph.edge_map[j]
            if src != i and (work >> src) & 1:
                new_mask |= 1 << j
        contracted = SpanningSubgraph(morph.target, new_mask)
        return complexity_recursive(deleted, d) + complexity_recursive(
            contracted, pushed
        )
    if not is_acyclic(graph, work):
        raise PreconditionError("irreducible subgraph unexpectedly has a cycle")
    ext = d.extended
    count = 0
    sub_edges = list(bits(work))
    for pick in range(1 << len(sub_edges)):
        m = 0
        for j, e in enumerate(sub_edges):
            if (pick >> j) & 1:
                m |= 1 << e
        if all(c in ext for c in graph.components(edge_mask=m)):
            count += 1
    return count


def minimal_admissible(graph: Graph, d: DegeneracySubset):
    """Minimal admissible spanning subgraphs; all of them are forests."""
    if not graph.is_connected():
        raise PreconditionError("minimal admissible subgraphs need a connected graph")
    forests = admissible_forests(graph, d)
    out = []
    for f in forests:
        if any(g != f and not (g & ~f) for g in forests):
            continue
        out.append(f)
    return out


def minimal_below(graph: Graph, d: DegeneracySubset, forest_mask: int) -> int:
    """The unique minimal admissible forest contained in an admissible forest."""
    candidates = [
        f
        for f in admissible_forests(graph, d)
        if not (f & ~forest_mask)
    ]
    minima = [
        f for f in candidates if not any(g != f and not (g & ~f) for g in candidates)
    ]
    if len(minima) != 1:
        raise ValidationError(
            f"expected a unique minimal admissible forest below {forest_mask:#x},"
            f" found {len(minima)}",
            witness=tuple(minima),
        )
    return minima[0]


def deletion_contraction_check(g: SpanningSubgraph, d: DegeneracySubset, edge: int) -> bool:
    """Exact deletion/contraction identity for the admissible-forest count."""
    graph = g.graph
    u, v = graph.edges[edge]
    if u == v:
        raise PreconditionError("deletion/contraction needs a non-loop edge")
    if not (g.edge_mask >> edge) & 1:
        raise PreconditionError("edge is not part of the subgraph")
    deleted = SpanningSubgraph(graph, g.edge_mask & ~(1 << edge))
    if not is_admissible(deleted, d):
        raise PreconditionError("deleting the edge leaves admissibility")
    morph = contract(graph, 1 << edge)
    pushed = pushforward_degeneracy(morph, d)
    new_mask = 0
    for j in range(len(morph.target.edges)):
        src = morph.edge_map[j]
        if src != edge and (g.edge_mask >> src) & 1:
            new_mask |= 1 << j
    contracted = SpanningSubgraph(morph.target, new_mask)
    lhs = complexity(g, d)
    rhs = complexity(deleted, d) + complexity(contracted, pushed)
    return lhs == rhs


def pushforward_degeneracy(m: GraphMorphism, d: DegeneracySubset) -> DegeneracySubset:
    """Family on the target whose members pull back into the family."""
    target = m.target
    out = set()
    for z in biconnected_subsets(target):
        if m.fiber(z) in d.subsets:
            out.add(z)
    return validate_degeneracy(target, out)


def restrict_degeneracy(d: DegeneracySubset, vertex_mask: int, edge_mask: int):
    """Family induced on a connected admissible subgraph.

    The subgraph is Γ[W] minus the edges outside ``edge_mask``; returns the
    restricted family on a freshly indexed graph plus the vertex/edge maps
    back into the ambient graph.
    """
    graph = d.graph
    if vertex_mask not in d.extended:
        raise PreconditionError("restriction target is not admissible")
    sub, vmap, emap = induced_subgraph(graph, vertex_mask, edge_mask)
    ext = d.extended
    out = set()
    for z in biconnected_subsets(sub):
        ambient = 0
        for v in bits(z):
            ambient |= 1 << vmap[v]
        if ambient in ext:
            out.add(z)
    return validate_degeneracy(sub, out), vmap, emap


