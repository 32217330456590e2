"""Random generation: odd compositions, plane trees, markings, signed
odd-cycle permutations, and the composite sampler for the underlying graph
of a uniform one-face map.

All samplers take an explicit seeded numpy Generator; nothing here reads
ambient randomness.  The composition sampler draws i.i.d. odd offspring
variables and conditions on their sum.  Below a part-count threshold this
is a physical rejection loop (expected attempts grow like sqrt(N)); above
it, an exact divide-and-conquer conditional sampler produces the same
output law and the attempt count is drawn from its exact geometric
distribution instead of being paid for.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import CPermutation, MarkedTree, OddComposition, QuotientGraph, RootedPlaneTree
from .quotient import glue

__all__ = [
    "OffspringLaw",
    "solve_offspring_parameter",
    "sample_odd_composition",
    "sample_odd_compositions_batch",
    "acceptance_rate_prediction",
    "exact_acceptance_probability",
    "sample_plane_tree",
    "sample_marking",
    "sample_c_permutation",
    "sample_unicellular_graph",
    "SampleError",
]

_TAIL_EPS = 1e-15          # stop pmf tables once the geometric tail bound drops below this
_SERIES_TOL = 1e-12
_DEFAULT_ATTEMPT_CAP = 10 ** 6
_SPLIT_THRESHOLD = 2048    # part counts above this use the split sampler
_SMALL_SUM_CAP = 127       # node sums up to this use complete cached cumulatives
_MEAN_CAP = 64.0


class SampleError(RuntimeError):
    """Sampling failed; carries the attempt count when relevant."""

    def __init__(self, message, attempts=None):
        super().__init__(message)
        self.attempts = attempts


class OffspringLaw:
    """Law of one odd part: P(xi = 2i+1) = beta^(2i+1) / (B(beta) (2i+1))
    with B(beta) = log((1+beta)/(1-beta)) / 2.

    ``degenerate`` marks the beta -> 0 limit where all mass sits at 1.
    """

    def __init__(self, beta: float, degenerate: bool = False):
        if degenerate:
            beta = 0.0
        elif not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        self.beta = float(beta)
        self.degenerate = bool(degenerate)
        self.B = 0.5 * math.log((1 + beta) / (1 - beta)) if not degenerate else 0.0

    def pmf(self, k: int) -> float:
        if k < 1 or k % 2 == 0:
            return 0.0
        if self.degenerate:
            return 1.0 if k == 1 else 0.0
        return self.beta ** k / (self.B * k)

    def support_table(self, cap: Optional[int] = None):
        """(values, pmf) arrays over odd k, truncated once the exact
        geometric tail bound falls below the series cutoff, or at ``cap``
        (values above the cap cannot occur in the context of the caller)."""
        if self.degenerate:
            return np.array([1], dtype=np.int64), np.array([1.0])
        b2 = self.beta ** 2
        vals, probs = [], []
        k = 1
        while True:
            p = self.pmf(k)
            vals.append(k)
            probs.append(p)
            # sum_{j >= k+2 odd} beta^j / (B j) < p * b2 / (1 - b2)
            if p * b2 / (1 - b2) < _TAIL_EPS:
                break
            if cap is not None and k + 2 > cap:
                break
            k += 2
        return np.array(vals, dtype=np.int64), np.array(probs)

    def mean(self) -> float:
        """Series evaluation of E(xi) = sum beta^k / B over odd k."""
        if self.degenerate:
            return 1.0
        b2 = self.beta ** 2
        total = 0.0
        k = 1
        while True:
            term = self.beta ** k / self.B
            total += term
            if term * b2 / (1 - b2) < _SERIES_TOL * 1e-2:
                return total
            k += 2

    def mean_closed_form(self) -> float:
        if self.degenerate:
            return 1.0
        return self.beta / ((1 - self.beta ** 2) * self.B)

    def variance(self) -> float:
        """Series evaluation of Var(xi); E(xi^2) = sum k beta^k / B."""
        if self.degenerate:
            return 0.0
        m = self.mean_closed_form()
        b2 = self.beta ** 2
        total = 0.0
        k = 1
        while True:
            term = k * self.beta ** k / self.B
            total += term
            # exact tail: sum_{i>=0} (k+2+2i) b^(k+2+2i) / B
            tail = (self.beta ** (k + 2) / self.B) * ((k + 2) / (1 - b2)
                                                      + 2 * b2 / (1 - b2) ** 2)
            if tail < _SERIES_TOL * 1e-2:
                return total - m * m
            k += 2

    def __repr__(self):
        return f"OffspringLaw(beta={self.beta:.12g}, degenerate={self.degenerate})"


def _mean_of_beta(beta: float) -> float:
    b = 0.5 * math.log((1 + beta) / (1 - beta))
    return beta / ((1 - beta * beta) * b)


def solve_offspring_parameter(n: int, N: int, mean_cap: float = _MEAN_CAP) -> OffspringLaw:
    """The unique beta with E(xi) = (n+1)/N, by bisection to 1e-12 absolute.

    The mean is strictly increasing on (0,1) with limits 1 and infinity, so
    the root is unique; m = 1 returns the degenerate law (all parts forced
    to 1) and m above ``mean_cap`` is an error.
    """
    _check_feasible(n, N)
    m = (n + 1) / N
    if m == 1.0:
        return OffspringLaw(0.0, degenerate=True)
    if m > mean_cap:
        raise SampleError(f"target mean {m:.3g} exceeds cap {mean_cap}")
    lo, hi = 1e-15, 1.0 - 1e-15
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if _mean_of_beta(mid) < m:
            lo = mid
        else:
            hi = mid
    return OffspringLaw(0.5 * (lo + hi))


def _check_feasible(n: int, N: int):
    if not 1 <= N <= n + 1:
        raise ValueError(f"need 1 <= N <= n+1, got N={N}, n={n}")
    if (n + 1 - N) % 2 != 0:
        raise ValueError(f"parity violated: N={N} and n+1={n + 1} differ mod 2")


def acceptance_rate_prediction(n: int, N: int) -> float:
    """Local-CLT prediction 2 / (sqrt(2 pi N) sigma) for the probability
    that N i.i.d. odd parts sum to n + 1."""
    law = solve_offspring_parameter(n, N)
    var = law.variance()
    if var <= 0:
        raise SampleError("degenerate offspring law has no CLT prediction")
    return 2.0 / (math.sqrt(2 * math.pi * N) * math.sqrt(var))


def exact_acceptance_probability(n: int, N: int) -> float:
    """P(xi_1 + ... + xi_N = n+1) by dynamic-programming convolution of the
    single-part pmf: the non-asymptotic counterpart of the prediction."""
    law = solve_offspring_parameter(n, N)
    if law.degenerate:
        return 1.0
    target = n + 1
    vals, probs = law.support_table()
    pmf = np.zeros(target + 1)
    keep = vals <= target
    pmf[vals[keep]] = probs[keep]
    acc = np.zeros(target + 1)
    acc[0] = 1.0
    for _ in range(N):
        acc = np.convolve(acc, pmf)[: target + 1]
    return float(acc[target])


# -- composition sampling -----------------------------------------------------

def sample_odd_composition(n: int, N: int, rng: np.random.Generator,
                           attempt_cap: int = _DEFAULT_ATTEMPT_CAP,
                           method: str = "auto"):
    """Exact sample from P(lambda = z) proportional to prod(1/z_i) over the
    ordered odd compositions of n + 1 into N parts.

    Returns (OddComposition, attempts).  ``method``:

    - "rejection": draw xi_1..xi_N i.i.d., accept when the sum hits n + 1;
    - "split": exact divide-and-conquer conditional sampler, attempt count
      drawn from its exact geometric law;
    - "auto": rejection up to the part-count threshold, split above.
    """
    _check_feasible(n, N)
    law = solve_offspring_parameter(n, N)
    if law.degenerate:
        return OddComposition([1] * N), 1
    if method == "auto":
        method = "split" if N > _SPLIT_THRESHOLD else "rejection"
    if method == "rejection":
        parts, attempts = _rejection_composition(n, N, law, rng, attempt_cap)
    elif method == "split":
        parts, attempts = _split_composition(n, N, law, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    comp = OddComposition(parts)
    assert comp.n == n, "accepted draw must sum to n + 1"
    return comp, attempts


def sample_odd_compositions_batch(n: int, N: int, rng: np.random.Generator,
                                  count: int,
                                  attempt_cap: Optional[int] = None):
    """``count`` independent rejection-sampled compositions at once.

    Returns (matrix count x N of parts, total attempts consumed).  The
    attempt total counts every drawn vector up to and including the one
    that produced the last accepted sample.
    """
    _check_feasible(n, N)
    law = solve_offspring_parameter(n, N)
    if law.degenerate:
        return np.ones((count, N), dtype=np.int64), count
    target = n + 1
    vals, cdf = _rejection_table(law, target, N)
    rate = acceptance_rate_prediction(n, N)
    out = np.empty((count, N), dtype=np.int64)
    got = 0
    attempts = 0
    cap = attempt_cap if attempt_cap is not None else max(
        _DEFAULT_ATTEMPT_CAP, int(20 * count / max(rate, 1e-12)))
    while got < count:
        need = count - got
        chunk = int(min(max(64, 1.3 * need / max(rate, 1e-12)), 2 ** 22 // N + 1))
        draws = vals[np.searchsorted(cdf, rng.random((chunk, N)))]
        hits = np.flatnonzero(draws.sum(axis=1) == target)
        take = hits[:need]
        out[got:got + len(take)] = draws[take]
        got += len(take)
        attempts += int(take[-1]) + 1 if got == count else chunk
        if attempts > cap and got < count:
            raise SampleError(f"batch sampler exhausted {attempts} attempts",
                              attempts=attempts)
    return out, attempts


def _rejection_table(law: OffspringLaw, target: int, N: int):
    # full tail-truncated support: capping at the largest usable value would
    # keep the conditional law exact but distort the attempt statistics
    vals, probs = law.support_table()
    probs = probs / probs.sum()
    return vals, np.cumsum(probs)


def _rejection_composition(n: int, N: int, law: OffspringLaw, rng, attempt_cap):
    target = n + 1
    vals, cdf = _rejection_table(law, target, N)
    rate = acceptance_rate_prediction(n, N)
    attempts = 0
    while attempts < attempt_cap:
        chunk = int(min(max(8, 4.0 / max(rate, 1e-12)),
                        65536, attempt_cap - attempts))
        draws = vals[np.searchsorted(cdf, rng.random((chunk, N)))]
        hits = np.flatnonzero(draws.sum(axis=1) == target)
        if len(hits):
            attempts += int(hits[0]) + 1
            return draws[hits[0]], attempts
        attempts += chunk
    raise SampleError(f"rejection sampler exhausted {attempt_cap} attempts",
                      attempts=attempt_cap)


# The split sampler works on eta = (xi - 1)/2 >= 0; conditioning on
# sum(xi) = n+1 becomes sum(eta) = g.  Exact pmf tables of partial sums are
# built for the halving sizes of N, and each internal node of the halving
# tree draws "sum of the left half" from its exact conditional law.

class _SplitTables:
    def __init__(self, law: OffspringLaw, N: int, g: int):
        from scipy.signal import fftconvolve
        vals, probs = law.support_table(cap=2 * g + 1)
        q = np.zeros(g + 1)
        eta = (vals - 1) // 2
        keep = eta <= g
        q[eta[keep]] = probs[keep]
        self.g = g
        self.eta_var = max(law.variance() / 4.0, 1e-12)
        self.levels = _halving_levels(N)
        sizes = {1}
        for level in self.levels:
            sizes.update(level.tolist())
        self.tables = {1: q}
        for j in sorted(sizes):
            if j == 1:
                continue
            a, b = j // 2, j - j // 2
            conv = fftconvolve(self.tables[a], self.tables[b])[: g + 1]
            self.tables[j] = np.maximum(conv, 0.0)
        self._cum_cache: dict = {}

    def prob(self, j: int, s: np.ndarray) -> np.ndarray:
        t = self.tables[j]
        s = np.asarray(s)
        out = np.zeros(s.shape)
        ok = (s >= 0) & (s <= self.g)
        out[ok] = t[s[ok]]
        return out

    def small_cum(self, j: int, s: int) -> np.ndarray:
        """Cumulative of the complete conditional support [0..s] at a node
        of size j; cached."""
        key = (j, s)
        cum = self._cum_cache.get(key)
        if cum is None:
            a = j // 2
            b = j - a
            f = self.tables[a][: s + 1] * self.tables[b][s::-1]
            cum = np.cumsum(f)
            self._cum_cache[key] = cum
        return cum


def _halving_levels(N: int) -> list:
    """Node sizes per level of the halving tree, root level first."""
    levels = [np.array([N], dtype=np.int64)]
    while levels[-1].max() > 1:
        cur = levels[-1]
        nxt = []
        for j in cur.tolist():
            if j > 1:
                nxt += [j // 2, j - j // 2]
            else:
                nxt.append(1)
        levels.append(np.array(nxt, dtype=np.int64))
    return levels


_table_cache: dict = {}


def _split_composition(n: int, N: int, law: OffspringLaw, rng):
    g = (n + 1 - N) // 2
    key = (round(law.beta, 14), N, g)
    tables = _table_cache.get(key)
    if tables is None:
        _table_cache.clear()   # keep at most one large table set alive
        tables = _SplitTables(law, N, g)
        _table_cache[key] = tables
    p_accept = float(tables.tables[N][g])
    if not p_accept > 0:
        raise SampleError("conditioned-sum probability underflowed")
    attempts = int(rng.geometric(min(p_accept, 1.0)))
    eta = _split_vector(tables, g, rng)
    return 2 * eta + 1, attempts


def _split_vector(tables: _SplitTables, g: int, rng) -> np.ndarray:
    sums = np.array([g], dtype=np.int64)
    for depth in range(len(tables.levels) - 1):
        sizes = tables.levels[depth]
        split = sizes > 1
        if not split.any():
            break
        j = sizes[split]
        a = j // 2
        left = _conditional_split_draw(tables, j, a, sums[split], rng)
        nxt = np.empty(len(tables.levels[depth + 1]), dtype=np.int64)
        pos = np.cumsum(np.where(split, 2, 1)) - np.where(split, 2, 1)
        nxt[pos[~split]] = sums[~split]
        nxt[pos[split]] = left
        nxt[pos[split] + 1] = sums[split] - left
        sums = nxt
    return sums


def _conditional_split_draw(tables, j, a, s, rng) -> np.ndarray:
    """Vector draw of x ~ P(first-half sum = x | node sum = s), exact.

    Cells are scanned outward from the conditional mean; a row whose draw
    is not resolved inside the scanned window falls back to a full-support
    scan in the same cell order, so windowing never biases the draw.
    """
    out = np.zeros(len(s), dtype=np.int64)
    todo = s > 0                     # a zero node sum forces all-zero halves
    if not todo.any():
        return out
    jt, at, st = j[todo], a[todo], s[todo]
    x = np.empty(len(st), dtype=np.int64)
    small = st <= _SMALL_SUM_CAP
    if small.any():
        x[small] = _grouped_small_draw(tables, jt[small], st[small], rng)
    big = ~small
    if big.any():
        x[big] = _windowed_draw(tables, jt[big], at[big], st[big], rng)
    out[todo] = x
    return out


def _grouped_small_draw(tables, j, s, rng) -> np.ndarray:
    """Rows with a small node sum share full-support cumulative tables per
    (size, sum) pair; one inverse-CDF searchsorted per group."""
    out = np.empty(len(s), dtype=np.int64)
    keys = j * (_SMALL_SUM_CAP + 1) + s
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    boundaries = np.flatnonzero(np.diff(sorted_keys)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(s)]])
    for lo, hi in zip(starts.tolist(), ends.tolist()):
        rows = order[lo:hi]
        jj = int(j[rows[0]])
        ss = int(s[rows[0]])
        cum = tables.small_cum(jj, ss)
        u = rng.random(hi - lo) * cum[-1]
        out[rows] = np.searchsorted(cum, u, side="left")
    return out


def _windowed_draw(tables, jt, at, st, rng) -> np.ndarray:
    """Rows with a large node sum: scan cells outward from the conditional
    mean; rows not resolved inside the window fall back to a full-support
    scan in the same cell order, so windowing never biases the draw."""
    bt = jt - at
    sigma = math.sqrt(tables.eta_var * float((at * bt / jt).max()))
    hw = int(math.ceil(6 * sigma)) + 8
    offsets = np.zeros(2 * hw + 1, dtype=np.int64)
    offsets[1::2] = np.arange(1, hw + 1)
    offsets[2::2] = -np.arange(1, hw + 1)
    center = (st * at) // jt
    cells = center[:, None] + offsets[None, :]
    valid = (cells >= 0) & (cells <= st[:, None])
    safe = np.where(valid, cells, 0)     # stays within [0, g]: 0 <= c <= s <= g
    f = np.empty(cells.shape)
    z = np.empty(len(st))
    for jj in np.unique(jt):
        sel = jt == jj
        aa = int(jj) // 2
        bb = int(jj) - aa
        left = tables.tables[aa][safe[sel]]
        right = tables.tables[bb][st[sel][:, None] - safe[sel]]
        f[sel] = left * right
        z[sel] = tables.tables[int(jj)][st[sel]]
    f[~valid] = 0.0
    cum = np.cumsum(f, axis=1)
    target = rng.random(len(st)) * z
    idx = (cum < target[:, None]).sum(axis=1)
    x = np.empty(len(st), dtype=np.int64)
    resolved = idx < cells.shape[1]
    rows = np.flatnonzero(resolved)
    x[rows] = cells[rows, idx[rows]]
    for i in np.flatnonzero(~resolved):
        x[i] = _full_scan_draw(tables, int(jt[i]), int(at[i]), int(st[i]),
                               float(target[i]))
    return x


def _scan_offsets(k: int) -> int:
    """Cell order shared by window and fallback: 0, +1, -1, +2, -2, ..."""
    if k == 0:
        return 0
    return (k + 1) // 2 if k % 2 == 1 else -(k // 2)


def _full_scan_draw(tables, j: int, a: int, s: int, target: float) -> int:
    b = j - a
    center = (s * a) // j
    acc = 0.0
    last_valid = None
    for k in range(2 * s + 5):
        x = center + _scan_offsets(k)
        if not 0 <= x <= s:
            continue
        p = float(tables.prob(a, np.array([x]))[0]
                  * tables.prob(b, np.array([s - x]))[0])
        if p > 0:
            last_valid = x
        acc += p
        if acc >= target:
            return x
    if last_valid is None:
        raise SampleError("conditioned split has empty support")
    return last_valid   # target slightly above the float total; take the tail


# -- plane trees ---------------------------------------------------------------

def sample_plane_tree(n: int, rng: np.random.Generator) -> RootedPlaneTree:
    """Uniform rooted plane tree with n edges.

    A uniform word of n up-steps and n+1 down-steps has exactly one cyclic
    rotation whose proper prefixes stay non-negative; cutting right after
    the first minimum of the prefix sums and dropping the final down-step
    leaves a uniform balanced contour word.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    steps = np.full(2 * n + 1, -1, dtype=np.int64)
    ups = rng.choice(2 * n + 1, size=n, replace=False)
    steps[ups] = 1
    prefix = np.cumsum(steps)
    cut = int(np.argmin(prefix)) + 1
    word = np.concatenate([steps[cut:], steps[:cut]])[: 2 * n]
    return _tree_from_steps(word)


def _tree_from_steps(word: np.ndarray) -> RootedPlaneTree:
    """Parent array from a +-1 contour word, vectorized per depth level:
    the vertex opened at position p sits under the latest vertex opened
    one level higher before p."""
    n = len(word) // 2
    depth_after = np.cumsum(word)
    opens = np.flatnonzero(word == 1)
    open_depth = depth_after[opens]
    parent = np.zeros(n + 2, dtype=np.int64)
    vertex_ids = np.arange(2, n + 2)
    by_depth = {}
    for d in np.unique(open_depth):
        sel = open_depth == d
        by_depth[int(d)] = (opens[sel], vertex_ids[sel])
    for d, (pos, vid) in by_depth.items():
        if d == 1:
            parent[vid] = 1
            continue
        prev_pos, prev_vid = by_depth[d - 1]
        idx = np.searchsorted(prev_pos, pos) - 1
        parent[vid] = prev_vid[idx]
    return RootedPlaneTree(parent, validate=False)


# -- markings and permutations ---------------------------------------------------

def sample_marking(tree: RootedPlaneTree, lam: OddComposition,
                   rng: np.random.Generator) -> MarkedTree:
    """Uniform assignment with exactly lambda_i vertices of mark i: the mark
    multiset laid onto vertex ids through a uniform permutation."""
    if lam.n != tree.n:
        raise ValueError(
            f"composition sums to {lam.n + 1}, tree has {tree.n + 1} vertices")
    pool = np.repeat(np.arange(1, lam.N + 1), lam.parts)
    marks = pool[rng.permutation(len(pool))]
    return MarkedTree(tree, marks, lam, validate=False)


def sample_c_permutation(lam: OddComposition, rng: np.random.Generator) -> CPermutation:
    """Uniform signed odd-cycle permutation with ordered cycle type lambda:
    uniform assignment of {1..n+1} into blocks, uniform cyclic order within
    each block, independent uniform signs."""
    n1 = lam.n + 1
    perm = rng.permutation(n1) + 1
    cycles = []
    pos = 0
    for size in lam.parts:
        block = perm[pos:pos + size]
        pos += size
        # rotating the smallest element to the front picks the canonical
        # representative; the (size-1)! cyclic orders stay uniform
        k = int(np.argmin(block))
        cycles.append(tuple(np.roll(block, -k).tolist()))
    signs = rng.choice(np.array([1, -1]), size=lam.N).tolist()
    return CPermutation(cycles, signs)


def sample_unicellular_graph(n: int, g: int, rng: np.random.Generator,
                             method: str = "auto"):
    """Underlying graph of a uniform one-face map with n edges and genus g:
    composition, tree and marking sampled independently, then glued.

    Returns (QuotientGraph, info) where info carries the composition, the
    marked tree and the attempt count.
    """
    if not 0 <= 2 * g <= n:
        raise ValueError(f"need 0 <= g <= n/2, got g={g}, n={n}")
    N = n + 1 - 2 * g
    lam, attempts = sample_odd_composition(n, N, rng, method=method)
    tree = sample_plane_tree(n, rng)
    mt = sample_marking(tree, lam, rng)
    gq = glue(mt)
    assert gq.v - gq.n == 1 - 2 * g
    return gq, {"lambda": lam, "attempts": attempts, "marked_tree": mt}
