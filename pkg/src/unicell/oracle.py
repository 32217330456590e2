"""Exhaustive enumeration and exact arithmetic for small instances.

Everything here is ground truth: plane trees by contour words, one-face maps
in the dart model (a rooted one-face map with n edges is a perfect matching
of the sides of a 2n-gon), signed odd-cycle permutations by direct listing,
and exact rational distributions over rooted multigraphs.  No floating point
anywhere.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

from .core import OddComposition, QuotientGraph, RootedPlaneTree

__all__ = [
    "enumerate_plane_trees",
    "enumerate_odd_compositions",
    "exact_lambda_pmf",
    "count_unicellular_maps",
    "count_c_decorated",
    "count_c_permutations",
    "count_forests",
    "forests_by_generation",
    "root_degree_pmf",
    "marked_tree_distribution",
    "uniform_unicellular_graph_distribution",
    "canonical_rooted_graph",
    "catalan",
]

MAX_TREE_EDGES = 12
MAX_MAP_EDGES = 6
MAX_DIST_EDGES = 5


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


# -- plane trees -------------------------------------------------------------

def _dyck_words(n: int):
    """All balanced words of n '(' and n ')' in lexicographic order,
    with '(' < ')'."""
    word = []

    def rec(opens, closes):
        if opens == 0 and closes == 0:
            yield "".join(word)
            return
        if opens > 0:
            word.append("(")
            yield from rec(opens - 1, closes)
            word.pop()
        if closes > opens:
            word.append(")")
            yield from rec(opens, closes - 1)
            word.pop()

    yield from rec(n, n)


def enumerate_plane_trees(n: int) -> list:
    """All Catalan(n) rooted plane trees with n edges, each exactly once,
    in lexicographic contour-word order."""
    if n > MAX_TREE_EDGES:
        raise ValueError(f"n={n} above enumeration cap {MAX_TREE_EDGES}")
    if n == 0:
        return [RootedPlaneTree([0, 0], validate=False)]
    return [RootedPlaneTree.from_contour(w) for w in _dyck_words(n)]


# -- odd compositions --------------------------------------------------------

def enumerate_odd_compositions(n: int, N: int) -> list:
    """All ordered N-tuples of odd positive integers summing to n + 1."""
    total = n + 1
    if N < 1 or total < N or (total - N) % 2 != 0:
        raise ValueError(f"no odd compositions of {total} into {N} parts")

    out = []

    def rec(prefix, remaining, parts_left):
        if parts_left == 1:
            if remaining >= 1 and remaining % 2 == 1:
                out.append(OddComposition(prefix + [remaining]))
            return
        # leave at least 1 per remaining part, keep parity feasible
        x = 1
        while remaining - x >= parts_left - 1:
            rec(prefix + [x], remaining - x, parts_left - 1)
            x += 2

    rec([], total, N)
    return out


def exact_lambda_pmf(n: int, N: int) -> dict:
    """Exact distribution proportional to prod(1/lambda_i) over the ordered
    odd compositions of n + 1 into N parts, as Fractions."""
    comps = enumerate_odd_compositions(n, N)
    weights = {c: Fraction(1, math.prod(c.parts)) for c in comps}
    z = sum(weights.values())
    return {c: w / z for c, w in weights.items()}


# -- rooted-graph canonical form ---------------------------------------------

def canonical_rooted_graph(gq: QuotientGraph) -> tuple:
    """Isomorphism-invariant key of a rooted multigraph: the minimum
    adjacency-matrix encoding over all vertex permutations fixing the root.
    Feasible for v <= 8."""
    v = gq.v
    if v > 8:
        raise ValueError("canonical form is brute force; v <= 8 required")
    mat = [[0] * v for _ in range(v)]
    for a, b in gq.edges():
        mat[a - 1][b - 1] += 1
        if a != b:
            mat[b - 1][a - 1] += 1
    others = [i for i in range(v) if i != gq.root - 1]
    best = None
    for perm in itertools.permutations(others):
        order = (gq.root - 1,) + perm
        enc = tuple(mat[order[i]][order[j]]
                    for i in range(v) for j in range(i, v))
        if best is None or enc < best:
            best = enc
    return (v, best)


# -- one-face maps in the dart model ------------------------------------------

def _matchings(elems: tuple):
    """Perfect matchings of an even-sized tuple, as tuples of pairs."""
    if not elems:
        yield ()
        return
    a = elems[0]
    rest = elems[1:]
    for i, b in enumerate(rest):
        reduced = rest[:i] + rest[i + 1:]
        for m in _matchings(reduced):
            yield ((a, b),) + m


def _one_face_maps(n: int):
    """All rooted one-face maps with n edges: for each side-gluing of the
    2n-gon, yield (genus, underlying QuotientGraph).

    Darts 1..2n are the polygon sides in face order; a matching alpha glues
    them in pairs, the vertex permutation is the face cycle composed with
    alpha, and vertices are its cycles.  The root is the vertex containing
    dart 1.
    """
    darts = tuple(range(1, 2 * n + 1))
    for alpha_pairs in _matchings(darts):
        alpha = {}
        for a, b in alpha_pairs:
            alpha[a] = b
            alpha[b] = a
        # sigma = face_cycle o alpha with face cycle d -> d+1 (mod 2n)
        sigma = {d: alpha[d] % (2 * n) + 1 for d in darts}
        cyc_of = {}
        cycles = []
        for d in darts:
            if d in cyc_of:
                continue
            cid = len(cycles)
            cur = d
            members = []
            while cur not in cyc_of:
                cyc_of[cur] = cid
                members.append(cur)
                cur = sigma[cur]
            cycles.append(members)
        v = len(cycles)
        genus2 = 1 - v + n
        assert genus2 % 2 == 0
        g = genus2 // 2
        edges = [(cyc_of[a] + 1, cyc_of[b] + 1) for a, b in alpha_pairs]
        gq = QuotientGraph(v, edges, root=cyc_of[1] + 1, genus=g)
        yield g, gq


def count_unicellular_maps(n: int, g: int):
    """Exact |U_{g,n}| plus the multiset of rooted underlying graphs,
    keyed by canonical form."""
    if n > MAX_MAP_EDGES:
        raise ValueError(f"n={n} above dart-model cap {MAX_MAP_EDGES}")
    count = 0
    graphs = {}
    for gg, gq in _one_face_maps(n):
        if gg != g:
            continue
        count += 1
        key = canonical_rooted_graph(gq)
        graphs[key] = graphs.get(key, 0) + 1
    return count, graphs


def uniform_unicellular_graph_distribution(n: int, g: int) -> dict:
    """Distribution of the rooted underlying graph of a uniform one-face
    map, as exact Fractions keyed by canonical form."""
    count, graphs = count_unicellular_maps(n, g)
    if count == 0:
        return {}
    return {k: Fraction(c, count) for k, c in graphs.items()}


# -- signed odd-cycle permutations --------------------------------------------

def count_c_permutations(order: int, g: int) -> int:
    """Number of signed all-odd-cycle permutations of the given order and
    genus, by exact cycle-type summation; cross-checked against direct
    enumeration of the symmetric group for order <= 7."""
    target_cycles = order - 2 * g
    if target_cycles < 1:
        return 0
    total = 0
    for comp in _odd_partitions(order, target_cycles):
        # permutations with this unordered cycle type
        mult = {}
        for x in comp:
            mult[x] = mult.get(x, 0) + 1
        perms = math.factorial(order)
        for x, m in mult.items():
            perms //= (x ** m) * math.factorial(m)
        total += perms * 2 ** target_cycles
    if order <= 7:
        assert total == _count_c_permutations_direct(order, g)
    return total


def _odd_partitions(total: int, parts: int):
    """Unordered partitions of ``total`` into ``parts`` odd parts,
    non-increasing."""
    out = []

    def rec(prefix, remaining, k, cap):
        if k == 1:
            if remaining <= cap and remaining % 2 == 1:
                out.append(tuple(prefix + [remaining]))
            return
        x = min(cap, remaining - (k - 1))
        if x % 2 == 0:
            x -= 1
        while x >= 1 and remaining - x >= k - 1:
            rec(prefix + [x], remaining - x, k - 1, x)
            x -= 2

    rec([], total, parts, total)
    return out


def _count_c_permutations_direct(order: int, g: int) -> int:
    total = 0
    for perm in itertools.permutations(range(1, order + 1)):
        seen = [False] * (order + 1)
        ncyc = 0
        ok = True
        for s in range(1, order + 1):
            if seen[s]:
                continue
            ncyc += 1
            length = 0
            cur = s
            while not seen[cur]:
                seen[cur] = True
                length += 1
                cur = perm[cur - 1]
            if length % 2 == 0:
                ok = False
                break
        if ok and order - ncyc == 2 * g:
            total += 2 ** ncyc
    return total


def count_c_decorated(n: int, g: int) -> int:
    """|C_{g,n}| = Catalan(n) * #(signed odd-cycle permutations of order
    n + 1 with genus g)."""
    if n > MAX_MAP_EDGES:
        raise ValueError(f"n={n} above cap {MAX_MAP_EDGES}")
    return catalan(n) * count_c_permutations(n + 1, g)


# -- forests ------------------------------------------------------------------

def count_forests(sigma: int, e: int) -> int:
    """Number of ordered forests of ``sigma`` rooted plane trees with ``e``
    edges in total: sigma/(2e+sigma) * C(2e+sigma, e), exact."""
    if sigma < 1 or e < 0:
        raise ValueError("need sigma >= 1 and e >= 0")
    val = Fraction(sigma, 2 * e + sigma) * math.comb(2 * e + sigma, e)
    assert val.denominator == 1
    return int(val)


def forests_by_generation(sigma: int, e: int) -> int:
    """Forest count by explicit composition of trees; the independent check
    of the closed formula (feasible for 2e + sigma <= 14)."""
    if 2 * e + sigma > 14:
        raise ValueError("exhaustive forest generation capped at 2e+sigma <= 14")
    total = 0
    for split in itertools.product(range(e + 1), repeat=sigma):
        if sum(split) == e:
            total += math.prod(catalan(k) for k in split)
    return total


@lru_cache(maxsize=None)
def _phi(sigma: int, e: int) -> int:
    if sigma == 0:
        return 1 if e == 0 else 0
    if e < 0:
        return 0
    return count_forests(sigma, e)


def root_degree_pmf(sigma: int, e: int) -> dict:
    """Exact pmf of the root degree of the first tree in a uniform ordered
    forest with ``sigma`` trees and ``e`` edges:
    P(d0 = j) = Phi(sigma+j-1, e-j) / Phi(sigma, e)."""
    if sigma < 1 or e < 0:
        raise ValueError("need sigma >= 1 and e >= 0")
    denom = _phi(sigma, e)
    pmf = {}
    for j in range(e + 1):
        num = _phi(sigma + j - 1, e - j)
        if num:
            pmf[j] = Fraction(num, denom)
    return pmf


def root_degree_pair_pmf(sigma: int, e: int) -> dict:
    """Exact pmf of d0 + d1, the summed root degrees of the first two trees
    (requires sigma >= 2): P(d0 + d1 = j) = (j+1) Phi(sigma+j-2, e-j) / Phi."""
    if sigma < 2:
        raise ValueError("two root degrees need sigma >= 2")
    denom = _phi(sigma, e)
    pmf = {}
    for j in range(e + 1):
        num = (j + 1) * _phi(sigma + j - 2, e - j)
        if num:
            pmf[j] = Fraction(num, denom)
    return pmf


def check_degree_bounds(sigma: int, e: int) -> bool:
    """True when P(d0=j) <= 4j/2^j and P(d0+d1=j) <= 4j(j+1)/2^j hold for
    every j >= 1 (the j = 0 atom carries no bound)."""
    pmf0 = root_degree_pmf(sigma, e)
    for j, p in pmf0.items():
        if j >= 1 and p > Fraction(4 * j, 2 ** j):
            return False
    if sigma >= 2:
        for j, p in root_degree_pair_pmf(sigma, e).items():
            if j >= 1 and p > Fraction(4 * j * (j + 1), 2 ** j):
                return False
    return True


# -- marked-tree distribution --------------------------------------------------

def _odd_set_partitions(elems: tuple, blocks: int):
    """Set partitions of ``elems`` into exactly ``blocks`` odd-sized blocks.

    The first remaining element anchors its block, so each partition is
    produced once.
    """
    if not elems:
        if blocks == 0:
            yield ()
        return
    if blocks <= 0 or len(elems) < blocks:
        return
    first, rest = elems[0], elems[1:]
    for size in range(1, len(elems) - blocks + 2, 2):
        for others in itertools.combinations(rest, size - 1):
            block = (first,) + others
            remaining = tuple(x for x in rest if x not in others)
            for tail in _odd_set_partitions(remaining, blocks - 1):
                yield (block,) + tail


def marked_tree_distribution(n: int, g: int) -> dict:
    """Exact distribution of the rooted underlying graph of a marked tree
    with the composition drawn proportional to prod(1/lambda_i), the tree
    uniform, and the marking uniform.  Fractions keyed by canonical form.

    Marks only matter through the vertex partition they induce, so the sum
    runs over odd-block set partitions; a partition with block sizes s_i
    aggregates N! * prod((s_i - 1)!) / (Z * (n+1)!) of composition-and-
    marking probability.
    """
    if n > MAX_DIST_EDGES:
        raise ValueError(f"n={n} above cap {MAX_DIST_EDGES}")
    N = n + 1 - 2 * g
    comps = enumerate_odd_compositions(n, N)
    z = sum(Fraction(1, math.prod(c.parts)) for c in comps)
    trees = enumerate_plane_trees(n)
    p_tree = Fraction(1, len(trees))
    base = Fraction(math.factorial(N), math.factorial(n + 1)) / z
    dist = {}
    for part in _odd_set_partitions(tuple(range(1, n + 2)), N):
        p_part = base * math.prod(math.factorial(len(b) - 1) for b in part)
        block_of = {}
        for i, block in enumerate(part):
            for x in block:
                block_of[x] = i + 1
        for tree in trees:
            edges = [(block_of[a], block_of[b]) for a, b in tree.edges()]
            gq = QuotientGraph(N, edges, root=block_of[1], genus=g)
            key = canonical_rooted_graph(gq)
            dist[key] = dist.get(key, 0) + p_part * p_tree
    return dist
