"""Core domain types: plane trees, odd compositions, signed odd-cycle
permutations, marked trees, quotient multigraphs and exploration traces.

All values are immutable after construction and safe to share between
concurrent workers.  Vertex ids are dense integers starting at 1; a tree is
canonical when ids coincide with the first-visit order of the depth-first
contour from the root.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "RootedPlaneTree",
    "OddComposition",
    "CPermutation",
    "MarkedTree",
    "QuotientGraph",
    "StepRecord",
    "RoundRecord",
    "ExplorationTrace",
    "genus_of_cpermutation",
    "canonical_numbering",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class RootedPlaneTree:
    """Ordered rooted tree on ``n`` edges, vertices numbered 1..n+1 in
    depth-first contour order (so the root is vertex 1 and every parent id
    is smaller than its children's ids).

    The primary representation is the parent array; child lists are a
    derived index built on demand.
    """

    __slots__ = ("_parent", "_children", "_depth", "_subtree")

    def __init__(self, parent: Sequence[int], validate: bool = True):
        p = np.asarray(parent, dtype=np.int64)
        if p.ndim != 1 or len(p) < 2:
            raise ValueError("parent array must cover vertices 1..n+1")
        self._parent = _frozen(p.copy())
        self._children = None
        self._depth = None
        self._subtree = None
        if validate:
            self._validate()

    def _validate(self):
        p = self._parent
        if p[0] != 0 or p[1] != 0:
            raise ValueError("index 0 is unused and the root has parent 0")
        if len(p) > 2 and not ((p[2:] >= 1).all() and (p[2:] < np.arange(2, len(p))).all()):
            raise ValueError("every non-root vertex needs a lower-numbered parent")
        # canonical numbering: ids must equal DFS first-visit order
        relabel = _dfs_order(self.children, 1)
        if any(relabel[v] != v for v in self.vertices()):
            raise ValueError("vertex ids are not in depth-first contour order")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_contour(cls, word: str) -> "RootedPlaneTree":
        """Build a tree from its balanced-parenthesis contour word."""
        parent = [0, 0]
        stack = [1]
        nxt = 2
        for ch in word.strip():
            if ch == "(":
                parent.append(stack[-1])
                stack.append(nxt)
                nxt += 1
            elif ch == ")":
                stack.pop()
                if not stack:
                    raise ValueError("unbalanced contour word")
            else:
                raise ValueError(f"unexpected character {ch!r} in contour word")
        if len(stack) != 1:
            raise ValueError("unbalanced contour word")
        return cls(parent, validate=False)

    @classmethod
    def from_children(cls, children: Mapping, root) -> "RootedPlaneTree":
        """Build from an ordered children mapping with arbitrary hashable
        vertex ids; ids are relabeled canonically."""
        mapping = canonical_numbering(children, root)
        parent = [0] * (len(mapping) + 1)
        for v, kids in children.items():
            for c in kids:
                parent[mapping[c]] = mapping[v]
        return cls(parent, validate=False)

    # -- basic accessors ---------------------------------------------------

    @property
    def n(self) -> int:
        """Edge count."""
        return len(self._parent) - 2

    @property
    def num_vertices(self) -> int:
        return len(self._parent) - 1

    @property
    def root(self) -> int:
        return 1

    @property
    def parent_array(self) -> np.ndarray:
        """Read-only parent ids indexed by vertex id (index 0 unused)."""
        return self._parent

    def parent(self, v: int) -> int:
        return int(self._parent[v])

    def vertices(self) -> range:
        return range(1, self.num_vertices + 1)

    @property
    def children(self) -> tuple:
        """Tuple of child tuples indexed by vertex id (index 0 empty).

        In canonical numbering the contour order of the children of any
        vertex coincides with ascending id order.
        """
        if self._children is None:
            kids = [[] for _ in range(self.num_vertices + 1)]
            p = self._parent
            for v in range(2, self.num_vertices + 1):
                kids[p[v]].append(v)
            self._children = tuple(tuple(k) for k in kids)
        return self._children

    @property
    def depths(self) -> np.ndarray:
        """Depth of each vertex (root depth 0), indexed by vertex id."""
        if self._depth is None:
            d = np.zeros(self.num_vertices + 1, dtype=np.int64)
            p = self._parent
            for v in range(2, self.num_vertices + 1):
                d[v] = d[p[v]] + 1
            self._depth = _frozen(d)
        return self._depth

    @property
    def subtree_sizes(self) -> np.ndarray:
        """Number of vertices in the subtree rooted at each vertex."""
        if self._subtree is None:
            s = np.ones(self.num_vertices + 1, dtype=np.int64)
            s[0] = 0
            p = self._parent
            for v in range(self.num_vertices, 1, -1):
                s[p[v]] += s[v]
            self._subtree = _frozen(s)
        return self._subtree

    def edges(self) -> Iterable[tuple]:
        """All edges as (child, parent) pairs."""
        p = self._parent
        return ((v, int(p[v])) for v in range(2, self.num_vertices + 1))

    def path_to_root(self, v: int) -> list:
        path = [v]
        while path[-1] != 1:
            path.append(int(self._parent[path[-1]]))
        return path

    def distance(self, u: int, v: int) -> int:
        """Tree distance via the deepest common ancestor."""
        d = self.depths
        du, dv = int(d[u]), int(d[v])
        dist = 0
        while du > dv:
            u = int(self._parent[u]); du -= 1; dist += 1
        while dv > du:
            v = int(self._parent[v]); dv -= 1; dist += 1
        while u != v:
            u = int(self._parent[u]); v = int(self._parent[v]); dist += 2
        return dist

    def lca(self, u: int, v: int) -> int:
        d = self.depths
        du, dv = int(d[u]), int(d[v])
        while du > dv:
            u = int(self._parent[u]); du -= 1
        while dv > du:
            v = int(self._parent[v]); dv -= 1
        while u != v:
            u = int(self._parent[u]); v = int(self._parent[v])
        return u

    def diameter(self) -> int:
        """Exact diameter by double sweep (exact on trees)."""
        far, _ = self._farthest_from([1])
        far2, dist = self._farthest_from([far])
        return dist

    def _farthest_from(self, sources) -> tuple:
        dist = self.distances_from(sources)
        v = int(np.argmax(dist[1:])) + 1
        return v, int(dist[v])

    def distances_from(self, sources) -> np.ndarray:
        """BFS distances from a set of sources, indexed by vertex id."""
        nv = self.num_vertices
        dist = np.full(nv + 1, -1, dtype=np.int64)
        frontier = list(sources)
        for s in frontier:
            dist[s] = 0
        kids = self.children
        p = self._parent
        d = 0
        while frontier:
            d += 1
            nxt = []
            for v in frontier:
                for u in kids[v]:
                    if dist[u] < 0:
                        dist[u] = d
                        nxt.append(u)
                pu = int(p[v])
                if pu >= 1 and dist[pu] < 0:
                    dist[pu] = d
                    nxt.append(pu)
            frontier = nxt
        return dist

    # -- serialization -----------------------------------------------------

    def to_contour(self) -> str:
        """Balanced-parenthesis contour word, e.g. ``(()())``."""
        out = []
        kids = self.children
        stack = [(1, 0)]
        while stack:
            v, i = stack.pop()
            if i < len(kids[v]):
                stack.append((v, i + 1))
                out.append("(")
                stack.append((kids[v][i], 0))
            elif v != 1:
                out.append(")")
        return "".join(out)

    def __eq__(self, other):
        return isinstance(other, RootedPlaneTree) and np.array_equal(
            self._parent, other._parent)

    def __hash__(self):
        return hash(self._parent.tobytes())

    def __repr__(self):
        return f"RootedPlaneTree(n={self.n})"


def _dfs_order(children, root) -> dict:
    """First-visit order of an ordered rooted tree; ids start at 1."""
    if isinstance(children, Mapping):
        kids_of = lambda v: children.get(v, ())
    else:
        kids_of = lambda v: children[v]
    order = {}
    stack = [root]
    while stack:
        v = stack.pop()
        order[v] = len(order) + 1
        stack.extend(reversed(list(kids_of(v))))
    return order


def canonical_numbering(children, root=1) -> dict:
    """Relabeling old-id -> new-id so that ids follow the depth-first
    contour from the root.  Idempotent: canonical input yields the identity
    map.  ``children`` is an ordered children mapping (or the child-tuple
    index of a RootedPlaneTree)."""
    if isinstance(children, RootedPlaneTree):
        children = children.children
        root = 1
    return _dfs_order(children, root)


class OddComposition:
    """Ordered tuple of odd positive integers; the cycle-type datum.

    Parts sum to ``n + 1`` and the implied genus ``(n + 1 - N) / 2`` is a
    non-negative integer (automatic once every part is odd and >= 1).
    """

    __slots__ = ("_parts", "_n")

    def __init__(self, parts: Sequence[int]):
        arr = np.asarray(parts, dtype=np.int64)
        if arr.ndim != 1 or len(arr) == 0:
            raise ValueError("composition needs at least one part")
        if ((arr < 1) | (arr % 2 == 0)).any():
            bad = int(arr[(arr < 1) | (arr % 2 == 0)][0])
            raise ValueError(f"part {bad} is not an odd positive integer")
        self._parts = tuple(arr.tolist())
        self._n = int(arr.sum()) - 1

    @property
    def parts(self) -> tuple:
        return self._parts

    @property
    def N(self) -> int:
        return len(self._parts)

    @property
    def n(self) -> int:
        """Edge count of the associated trees: parts sum to n + 1."""
        return self._n

    @property
    def genus(self) -> int:
        g2 = self.n + 1 - self.N
        assert g2 % 2 == 0
        return g2 // 2

    def __iter__(self):
        return iter(self._parts)

    def __len__(self):
        return len(self._parts)

    def __getitem__(self, i):
        return self._parts[i]

    def __eq__(self, other):
        return isinstance(other, OddComposition) and self._parts == other._parts

    def __hash__(self):
        return hash(self._parts)

    def __repr__(self):
        return f"OddComposition{self._parts}"


class CPermutation:
    """Cycle-signed permutation with all cycles of odd length.

    ``cycles`` partition {1..order}; every cycle carries a sign in {+1,-1}.
    The genus is ``(order - #cycles) / 2``.
    """

    __slots__ = ("_cycles", "_signs", "_order")

    def __init__(self, cycles: Sequence[Sequence[int]], signs: Sequence[int]):
        cycles = tuple(tuple(int(x) for x in c) for c in cycles)
        signs = tuple(int(s) for s in signs)
        if len(cycles) != len(signs):
            raise ValueError("one sign per cycle required")
        if any(s not in (1, -1) for s in signs):
            raise ValueError("signs must be +1 or -1")
        seen = set()
        for c in cycles:
            if len(c) % 2 == 0:
                raise ValueError(f"cycle {c} has even length")
            seen.update(c)
        order = sum(len(c) for c in cycles)
        if len(seen) != order or seen != set(range(1, order + 1)):
            raise ValueError("cycles must partition {1..order}")
        self._cycles = cycles
        self._signs = signs
        self._order = order

    @property
    def cycles(self) -> tuple:
        return self._cycles

    @property
    def signs(self) -> tuple:
        return self._signs

    @property
    def order(self) -> int:
        return self._order

    @property
    def num_cycles(self) -> int:
        return len(self._cycles)

    @property
    def genus(self) -> int:
        g2 = self._order - len(self._cycles)
        assert g2 % 2 == 0, "odd cycle lengths force an integer genus"
        return g2 // 2

    def cycle_type(self) -> OddComposition:
        return OddComposition([len(c) for c in self._cycles])

    def __repr__(self):
        return f"CPermutation(order={self._order}, cycles={len(self._cycles)})"


def genus_of_cpermutation(p: CPermutation) -> int:
    """Genus of a signed odd-cycle permutation: (order - #cycles) / 2."""
    return p.genus


class MarkedTree:
    """A plane tree plus a mark function hitting mark ``i`` exactly
    ``lambda_i`` times; gluing same-mark vertices yields the quotient."""

    __slots__ = ("tree", "marks", "lam")

    def __init__(self, tree: RootedPlaneTree, marks: Sequence[int],
                 lam: Optional[OddComposition] = None, validate: bool = True):
        m = np.asarray(marks, dtype=np.int64)
        if len(m) == tree.num_vertices:  # allow 0-unpadded input
            m = np.concatenate([[0], m])
        if len(m) != tree.num_vertices + 1:
            raise ValueError("need one mark per vertex")
        self.tree = tree
        self.marks = _frozen(m.copy())
        if lam is None:
            counts = np.bincount(m[1:])
            if counts[0] if len(counts) else 0:
                raise ValueError("marks must be >= 1")
            lam = OddComposition(counts[1:])
        self.lam = lam
        if validate:
            counts = np.bincount(m[1:], minlength=lam.N + 1)[1:]
            if len(counts) != lam.N or tuple(int(c) for c in counts) != lam.parts:
                raise ValueError("mark histogram does not match the composition")

    @property
    def n(self) -> int:
        return self.tree.n

    def mark_classes(self) -> list:
        """Vertex lists per mark, indexed by mark id (index 0 empty)."""
        classes = [[] for _ in range(self.lam.N + 1)]
        for v in self.tree.vertices():
            classes[int(self.marks[v])].append(v)
        return classes

    # -- serialization: contour word plus a whitespace-separated mark line
    def to_text(self) -> str:
        line = " ".join(str(int(self.marks[v])) for v in self.tree.vertices())
        return self.tree.to_contour() + "\n" + line

    @classmethod
    def from_text(cls, text: str) -> "MarkedTree":
        contour, markline = text.strip().split("\n")
        tree = RootedPlaneTree.from_contour(contour)
        marks = [int(x) for x in markline.split()]
        return cls(tree, marks)

    def __repr__(self):
        return f"MarkedTree(n={self.n}, N={self.lam.N})"


class QuotientGraph:
    """Rooted multigraph (loops and parallel edges allowed) obtained by
    gluing same-mark vertices of a marked tree.

    Satisfies the one-face Euler identity v - n = 1 - 2g.
    """

    __slots__ = ("v", "root", "genus", "_eu", "_ev", "_adj")

    def __init__(self, v: int, edges, root: int, genus: Optional[int] = None,
                 validate: bool = True):
        eu, ev = _edge_arrays(edges)
        self.v = int(v)
        self.root = int(root)
        self._eu = _frozen(eu)
        self._ev = _frozen(ev)
        self._adj = None
        n = len(eu)
        if genus is None:
            genus = (1 - self.v + n) // 2
        self.genus = int(genus)
        if validate:
            if self.v - n != 1 - 2 * self.genus:
                raise ValueError(
                    f"Euler identity violated: v={self.v} n={n} g={self.genus}")
            if not (1 <= self.root <= self.v):
                raise ValueError("root outside vertex range")
            if n and not ((self._eu >= 1).all() and (self._eu <= self.v).all()
                          and (self._ev >= 1).all() and (self._ev <= self.v).all()):
                raise ValueError("edge endpoint outside vertex range")
            if not self.is_connected():
                raise ValueError("quotient graph must be connected")

    @property
    def n(self) -> int:
        """Edge count (loops and parallels included)."""
        return len(self._eu)

    @property
    def edge_arrays(self) -> tuple:
        return self._eu, self._ev

    def edges(self) -> Iterable[tuple]:
        return zip(self._eu.tolist(), self._ev.tolist())

    def degrees(self) -> np.ndarray:
        """Vertex degrees with loops counted twice, indexed by vertex id."""
        deg = np.bincount(self._eu, minlength=self.v + 1)
        deg += np.bincount(self._ev, minlength=self.v + 1)
        return deg

    def simple_adjacency(self):
        """CSR adjacency of the simple support graph: loops dropped,
        parallel edges collapsed (the distance semantics)."""
        if self._adj is None:
            from scipy.sparse import csr_matrix
            mask = self._eu != self._ev
            u = self._eu[mask]
            w = self._ev[mask]
            uu = np.concatenate([u, w])
            ww = np.concatenate([w, u])
            pairs = np.unique(np.stack([uu, ww], axis=1), axis=0) if len(uu) else \
                np.empty((0, 2), dtype=np.int64)
            data = np.ones(len(pairs), dtype=np.int8)
            self._adj = csr_matrix(
                (data, (pairs[:, 0] - 1, pairs[:, 1] - 1)),
                shape=(self.v, self.v))
        return self._adj

    def is_connected(self) -> bool:
        if self.v == 1:
            return True
        from scipy.sparse.csgraph import connected_components
        ncomp, _ = connected_components(self.simple_adjacency(), directed=False)
        return ncomp == 1

    def edge_multiset(self) -> dict:
        """Multiset of unordered endpoint pairs -> multiplicity."""
        out = {}
        for a, b in self.edges():
            key = (a, b) if a <= b else (b, a)
            out[key] = out.get(key, 0) + 1
        return out

    # -- serialization: "v n g root" header then one "a b" line per edge
    def to_text(self) -> str:
        lines = [f"{self.v} {self.n} {self.genus} {self.root}"]
        lines += [f"{a} {b}" for a, b in self.edges()]
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "QuotientGraph":
        lines = [ln for ln in text.strip().split("\n") if ln.strip()]
        v, n, g, root = (int(x) for x in lines[0].split())
        edges = [tuple(int(x) for x in ln.split()) for ln in lines[1:]]
        if len(edges) != n:
            raise ValueError("edge count does not match header")
        return cls(v, edges, root, genus=g)

    def __repr__(self):
        return f"QuotientGraph(v={self.v}, n={self.n}, g={self.genus})"


def _edge_arrays(edges):
    if isinstance(edges, tuple) and len(edges) == 2 and isinstance(edges[0], np.ndarray):
        eu = np.asarray(edges[0], dtype=np.int64).copy()
        ev = np.asarray(edges[1], dtype=np.int64).copy()
    else:
        pairs = list(edges)
        eu = np.asarray([a for a, _ in pairs], dtype=np.int64)
        ev = np.asarray([b for _, b in pairs], dtype=np.int64)
    if len(eu) != len(ev):
        raise ValueError("mismatched edge arrays")
    return eu, ev


# -- exploration traces ----------------------------------------------------

@dataclass(frozen=True)
class StepRecord:
    """One reveal step of an exploration process."""
    step: int
    explored: int                       # vertex being explored when the step ran
    revealed: tuple                     # newly revealed vertices (this step)
    seeds: tuple                        # seeds revealed this step, in uniform order
    v_minus: Optional[int] = None       # stage II: nearest live far-side ancestor
    death: bool = False                 # stage II: death rule fired
    dead: tuple = ()                    # stage II: vertices declared dead


@dataclass(frozen=True)
class RoundRecord:
    r: int
    tau: int            # step count when the round completed
    e_size: int         # |E_r|


@dataclass(frozen=True)
class ExplorationTrace:
    """Step-by-step record of an exploration run.

    ``terminal`` is one of step-threshold / round-threshold / self-hit /
    collision / exhausted; ``stage`` is 1 or 2.
    """
    stage: int
    start: int
    steps: tuple
    rounds: tuple
    terminal: str
    revealed: tuple          # R_delta in reveal order
    dead: tuple = ()         # Q_delta
    e_sets: tuple = ()       # E_0, E_1, ... as tuples of vertex ids
    worms: tuple = ()        # explore module WormState records

    def check_nesting(self) -> bool:
        """Revealed sets nested across steps and tau_r non-decreasing."""
        seen = set()
        for rec in self.steps:
            if seen & set(rec.revealed):
                return False
            seen.update(rec.revealed)
        taus = [r.tau for r in self.rounds]
        return all(a <= b for a, b in zip(taus, taus[1:]))
