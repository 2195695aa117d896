"""Tree structure toolkit: edge-list parsing, leaf-peeling layers, rooted
subtree shape enumeration, edge-symmetry detection, and a balanced
parentheses encoding for unlabeled rooted trees.

Vertices are dense 0-based integers and carry no identity beyond their
index. Ports are local per vertex, assigned in adjacency order, so all
protocol-visible structure is derived from the shape of the tree alone.
"""

from __future__ import annotations

from functools import lru_cache


LESS, EQUAL, GREATER = -1, 0, 1


class ParseError(ValueError):
    """Base class for edge-list and parenthesis parsing failures."""


class BadTokenError(ParseError):
    pass


class DuplicateEdgeError(ParseError):
    pass


class CycleError(ParseError):
    pass


class DisconnectedError(ParseError):
    pass


class ParensError(ParseError):
    pass


class TreeTopology:
    """Immutable undirected tree with per-vertex port numbering.

    neighbors[v] is the ordered tuple of v's neighbors; the position of a
    neighbor in that tuple is the local port index at v. Ports follow the
    first-appearance order of the input edge list, so identical input
    text always yields identical port assignments.
    """

    __slots__ = ("n", "neighbors", "_port_of")

    def __init__(self, n, edges):
        if n < 1:
            raise ParseError("need at least one vertex")
        adj = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise BadTokenError("vertex label out of range: %r" % ((u, v),))
            if u == v:
                raise CycleError("self loop at vertex %d" % u)
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise DuplicateEdgeError("duplicate edge %r" % (key,))
            seen.add(key)
            adj[u].append(v)
            adj[v].append(u)
        if len(seen) > n - 1:
            raise CycleError("%d edges on %d vertices" % (len(seen), n))
        # Reachability from vertex 0. With exactly n-1 edges, connected
        # is equivalent to acyclic, so this is the whole tree check.
        reached = [False] * n
        reached[0] = True
        frontier = [0]
        while frontier:
            v = frontier.pop()
            for u in adj[v]:
                if not reached[u]:
                    reached[u] = True
                    frontier.append(u)
        if not all(reached):
            raise DisconnectedError(
                "vertices unreachable from 0: %s"
                % [v for v in range(n) if not reached[v]]
            )
        if len(seen) < n - 1:
            raise CycleError("impossible: connected with fewer than n-1 edges")
        self.n = n
        self.neighbors = tuple(tuple(a) for a in adj)
        self._port_of = {}
        for v in range(n):
            for p, u in enumerate(self.neighbors[v]):
                self._port_of[(v, u)] = p

    def degree(self, v):
        return len(self.neighbors[v])

    def neighbor_on(self, v, port):
        return self.neighbors[v][port]

    def port_to(self, v, u):
        """Local port index at v of the edge leading to u."""
        return self._port_of[(v, u)]

    def edges(self):
        """All edges as sorted (min, max) pairs, in ascending order."""
        return sorted(
            (v, u) if v < u else (u, v)
            for v in range(self.n)
            for u in self.neighbors[v]
            if v < u
        )

    def directed_edges(self):
        """Canonical directed edge list: grouped by source, port order."""
        return [(v, u) for v in range(self.n) for u in self.neighbors[v]]

    def __repr__(self):
        return "TreeTopology(n=%d, edges=%r)" % (self.n, self.edges())


def parse_edge_list(text):
    """Parse whitespace-separated "u v" pairs into a TreeTopology.

    Labels must be 0-based integers; n is inferred as max label + 1.
    Empty input denotes the single-vertex tree. Raises a distinct
    ParseError subclass for bad tokens, duplicate edges, cycles, and
    disconnected input.
    """
    tokens = text.split()
    if not tokens:
        return TreeTopology(1, [])
    if len(tokens) % 2 != 0:
        raise BadTokenError("odd token count, expected u v pairs")
    labels = []
    for tok in tokens:
        try:
            x = int(tok)
        except ValueError:
            raise BadTokenError("non-integer token %r" % tok) from None
        if x < 0:
            raise BadTokenError("negative vertex label %r" % tok)
        labels.append(x)
    n = max(labels) + 1
    edges = [(labels[i], labels[i + 1]) for i in range(0, len(labels), 2)]
    return TreeTopology(n, edges)


class Layering:
    """Leaf-peeling decomposition of a tree.

    layers[i] holds the vertices removed in peeling round i; the last
    layer holds the one or two central vertices. Every non-root vertex
    has exactly one neighbor in a strictly higher layer, its parent; for
    an odd diameter the two central vertices are ordered by the subtree
    comparator and the loser (co_root) is parented to the winner. When
    the two central subtrees are isomorphic no canonical choice exists
    and arbitrary_root is set; the lower vertex index is used then.
    """

    __slots__ = (
        "layers",
        "layer_of",
        "parent_of",
        "children_of",
        "root",
        "co_root",
        "diameter",
        "radius",
        "arbitrary_root",
        "_class_of",
        "_canon",
    )

    def __init__(self, layers, layer_of, parent_of, children_of, root,
                 co_root, diameter, radius, arbitrary_root, class_of, canon):
        self.layers = layers
        self.layer_of = layer_of
        self.parent_of = parent_of
        self.children_of = children_of
        self.root = root
        self.co_root = co_root
        self.diameter = diameter
        self.radius = radius
        self.arbitrary_root = arbitrary_root
        self._class_of = class_of
        self._canon = canon

    def __repr__(self):
        return "Layering(radius=%d, diameter=%d, root=%d, co_root=%r)" % (
            self.radius, self.diameter, self.root, self.co_root)


class SubtreeIndex:
    """Enumeration of the distinct rooted subtree shapes of one tree.

    Shapes are numbered 1..count in comparator order (lower peel layer
    first, then fewer children, then recursively by the sorted child
    shape lists). class_of maps each vertex to the shape index of the
    subtree hanging at it; quota_of gives the derived send quota
    count - class_of(v).
    """

    __slots__ = ("count", "canon", "class_of")

    def __init__(self, count, canon, class_of):
        self.count = count
        self.canon = canon
        self.class_of = class_of

    def quota(self, index):
        return self.count - index

    def quota_of(self, v):
        return self.count - self.class_of[v]

    def __repr__(self):
        return "SubtreeIndex(count=%d)" % self.count


class SymmetryReport:
    __slots__ = ("symmetric", "witness_edge")

    def __init__(self, symmetric, witness_edge):
        self.symmetric = symmetric
        self.witness_edge = witness_edge

    def __repr__(self):
        return "SymmetryReport(symmetric=%r, witness_edge=%r)" % (
            self.symmetric, self.witness_edge)


def _peel(t):
    """Iterated leaf removal. Returns (layers, layer_of)."""
    n = t.n
    if n == 1:
        return (frozenset([0]),), (0,)
    deg = [t.degree(v) for v in range(n)]
    layer_of = [-1] * n
    layers = []
    current = [v for v in range(n) if deg[v] == 1]
    i = 0
    while current:
        layers.append(frozenset(current))
        for v in current:
            layer_of[v] = i
        nxt = []
        for v in current:
            for u in t.neighbors[v]:
                if layer_of[u] == -1:
                    deg[u] -= 1
                    if deg[u] == 1:
                        nxt.append(u)
        current = sorted(nxt)
        i += 1
    return tuple(layers), tuple(layer_of)


def _shape_classes(t, layers, layer_of):
    """Assign 1-based shape indices bottom-up, one block per layer.

    Within a layer, shapes are ordered by (child count, sorted child
    shape tuple); across layers lower peel rounds come first. Children
    here are the strictly lower-layer neighbors, so the two central
    vertices of an odd-diameter tree do not contain each other.
    Also builds the canonical parenthesis string of each shape.
    """
    n = t.n
    class_of = [0] * n
    enc = [None] * n
    canon = []
    for i, layer in enumerate(layers):
        keyed = []
        for v in sorted(layer):
            kids = [u for u in t.neighbors[v] if layer_of[u] < i]
            key = (len(kids), tuple(sorted(class_of[u] for u in kids)))
            enc[v] = "(" + "".join(sorted(enc[u] for u in kids)) + ")"
            keyed.append((key, v))
        distinct = sorted(set(k for k, _ in keyed))
        base = len(canon)
        rank = {k: base + j + 1 for j, k in enumerate(distinct)}
        reps = {}
        for key, v in keyed:
            class_of[v] = rank[key]
            reps.setdefault(rank[key], v)
        for j, k in enumerate(distinct):
            canon.append(enc[reps[base + j + 1]])
    return tuple(class_of), tuple(canon)


@lru_cache(maxsize=None)
def layer_decomposition(t):
    """Decompose t into peeling layers with parent/children maps.

    The diameter is 2r when one vertex survives to the last round and
    2r+1 when two do. In the odd case the root is the central vertex
    whose subtree compares greater; ties (edge-symmetric trees) fall
    back to the lower vertex index with arbitrary_root set.
    """
    layers, layer_of = _peel(t)
    n = t.n
    r = len(layers) - 1
    top = sorted(layers[-1])
    class_of, canon = _shape_classes(t, layers, layer_of)
    arbitrary = False
    if len(top) == 1:
        root, co_root = top[0], None
        diameter = 2 * r
    elif len(top) == 2:
        a, b = top
        if b not in t.neighbors[a]:
            raise AssertionError("central pair %r not adjacent" % (top,))
        diameter = 2 * r + 1
        ca, cb = class_of[a], class_of[b]
        if ca == cb:
            root, co_root, arbitrary = a, b, True
        elif ca > cb:
            root, co_root = a, b
        else:
            root, co_root = b, a
    else:
        raise AssertionError("peeling left %d central vertices" % len(top))
    parent_of = [None] * n
    for v in range(n):
        if v == root:
            continue
        if v == co_root:
            parent_of[v] = root
            continue
        ups = [u for u in t.neighbors[v] if layer_of[u] > layer_of[v]]
        if len(ups) != 1:
            raise AssertionError(
                "vertex %d has %d higher-layer neighbors" % (v, len(ups)))
        parent_of[v] = ups[0]
    children = [set() for _ in range(n)]
    for v in range(n):
        if parent_of[v] is not None:
            children[parent_of[v]].add(v)
    return Layering(
        layers=layers,
        layer_of=layer_of,
        parent_of=tuple(parent_of),
        children_of=tuple(frozenset(c) for c in children),
        root=root,
        co_root=co_root,
        diameter=diameter,
        radius=r,
        arbitrary_root=arbitrary,
        class_of=class_of,
        canon=canon,
    )


@lru_cache(maxsize=None)
def enumerate_subtrees(t, layering):
    """Index the distinct rooted subtree shapes of t.

    The root's subtree is always the last shape; with an odd diameter
    and an asymmetric tree the co-root's shape is the one before it.
    """
    idx = SubtreeIndex(
        count=len(layering._canon),
        canon=layering._canon,
        class_of=layering._class_of,
    )
    if idx.class_of[layering.root] != idx.count:
        raise AssertionError("root subtree is not the final shape")
    return idx


def compare_subtrees(t, layering, a, b):
    """Order the subtrees hanging at vertices a and b.

    Returns LESS, EQUAL, or GREATER. Equal means the two rooted
    subtrees are isomorphic; otherwise lower peel layer wins, then
    fewer children, then the recursive comparison of the child lists.
    """
    idx = enumerate_subtrees(t, layering)
    ca, cb = idx.class_of[a], idx.class_of[b]
    if ca < cb:
        return LESS
    if ca > cb:
        return GREATER
    return EQUAL


def _encode_rooted(t, root, banned=None):
    """Canonical parenthesis string of the component of root.

    banned, if given, is an edge (x, y) that must not be crossed, which
    restricts the encoding to one side of that edge. Iterative so deep
    paths cannot hit the recursion limit.
    """
    blocked = set()
    if banned is not None:
        x, y = banned
        blocked = {(x, y), (y, x)}
    parent = {root: None}
    order = [root]
    for v in order:
        for u in t.neighbors[v]:
            if u != parent[v] and (v, u) not in blocked:
                parent[u] = v
                order.append(u)
    enc = {}
    for v in reversed(order):
        kids = sorted(
            enc[u] for u in t.neighbors[v]
            if u != parent[v] and (v, u) not in blocked
        )
        enc[v] = "(" + "".join(kids) + ")"
    return enc[root]


def encode_parens(t, root):
    """Canonical balanced-parentheses encoding of t rooted at root.

    Child substrings are sorted lexicographically before concatenation,
    so isomorphic rooted trees encode to the identical string.
    """
    return _encode_rooted(t, root)


def decode_parens(text):
    """Rebuild a tree from a parenthesis encoding.

    Vertices are numbered in preorder, the root becoming vertex 0, so
    encode_parens(decode_parens(s), 0) returns the canonicalized form
    of s. Raises ParensError on empty, unbalanced, or multi-root input.
    """
    if not text:
        raise ParensError("empty encoding")
    edges = []
    stack = []
    next_vertex = 0
    for ch in text:
        if ch == "(":
            if next_vertex > 0 and not stack:
                raise ParensError("content after the root group closed")
            v = next_vertex
            next_vertex += 1
            if stack:
                edges.append((stack[-1], v))
            stack.append(v)
        elif ch == ")":
            if not stack:
                raise ParensError("unbalanced: close without open")
            stack.pop()
        else:
            raise ParensError("unexpected character %r" % ch)
    if stack:
        raise ParensError("unbalanced: %d groups left open" % len(stack))
    return TreeTopology(next_vertex, edges)


def is_edge_symmetric(t):
    """Detect whether t is symmetric about some edge.

    For each edge {u, v} in ascending order, the two components left by
    removing it are canonically encoded from u and v; a string match
    means an isomorphism mapping u to v exists. The first matching edge
    is reported as the witness.
    """
    for u, v in t.edges():
        if _encode_rooted(t, u, (u, v)) == _encode_rooted(t, v, (u, v)):
            return SymmetryReport(True, (u, v))
    return SymmetryReport(False, None)
