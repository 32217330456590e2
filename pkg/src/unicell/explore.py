"""Instrumented exploration processes on marked trees.

Process I reveals whole mark classes breadth-first; the classes revealed
during round r, glued, are exactly the quotient vertices at distance r
from the start class.  Process II reveals, for each explored vertex, the
mark class of its nearest live ancestor on the path toward a far vertex,
with a death rule that kills classes landing too close to the revealed
region; stage 2 stops as soon as it touches the stage-1 region (a
collision), certifying a short quotient path between the two start marks.

Deterministic choices: active vertices are explored in ascending id order,
neighbours in child order with the parent last, ties for the far vertex
break toward the smallest id.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ExplorationTrace, MarkedTree, RootedPlaneTree, RoundRecord, StepRecord

__all__ = [
    "explore_one",
    "explore_two",
    "compute_web",
    "find_bad_pairs",
    "seeds_vs_iid_distance",
    "coupling_tree_levels",
    "WormState",
    "EventLog",
    "SeedTVReport",
    "default_thresholds_one",
    "default_thresholds_two",
    "DISASTER_DEATHS",
]

DISASTER_DEATHS = 16
_BAD_PAIR_SEED_CAP = 512


@dataclass(frozen=True)
class WormState:
    """A growing path from a seed toward the far vertex.

    ``deaths_faced`` counts the dead vertices skipped along the traversed
    path from the seed to the current head; segments between consecutive
    body vertices are fully dead when hopped and dead vertices stay dead,
    so this equals the number of dead vertices strictly between seed and
    head at any later time.
    """
    seed: int
    body: tuple
    deaths_faced: int
    head: int


@dataclass(frozen=True)
class EventLog:
    """Observable events of a two-stage run.

    ``disasters`` holds (stage, step) pairs where some worm faced its 16th
    death; ``bad_pairs`` is None when the seed list was too long to scan.
    """
    bad_pairs: Optional[tuple]
    disasters: tuple
    collision_step: Optional[int]
    termination: str


@dataclass(frozen=True)
class SeedTVReport:
    tv: float           # plug-in TV between seed statistic and i.i.d. statistic
    null_tv: float      # same estimator between two independent i.i.d. samples
    bins: int
    trials: int


class _MarkIndex:
    """Mark-class lookup built from one stable argsort of the mark array."""

    def __init__(self, mt: MarkedTree):
        marks = mt.marks
        order = np.argsort(marks[1:], kind="stable") + 1
        sorted_marks = marks[order]
        self.order = order
        self.bounds = np.searchsorted(sorted_marks, np.arange(1, mt.lam.N + 2))
        self.marks = marks

    def members(self, mark: int) -> np.ndarray:
        return self.order[self.bounds[mark - 1]:self.bounds[mark]]

    def class_of(self, v: int) -> np.ndarray:
        return self.members(int(self.marks[v]))


def default_thresholds_one(n: int) -> dict:
    """Stop once steps exceed ceil(n^(1/10)) or rounds exceed ceil(log n)."""
    return {"max_steps": math.ceil(n ** 0.1),
            "max_rounds": math.ceil(math.log(max(n, 2)))}


def default_thresholds_two(n: int) -> dict:
    """Stop once steps exceed floor(n^(3/4)) or rounds exceed log^2 n."""
    return {"max_steps": math.floor(n ** 0.75),
            "max_rounds": math.floor(math.log(max(n, 2)) ** 2)}


# -- process I ----------------------------------------------------------------

def explore_one(mt: MarkedTree, rng: np.random.Generator,
                thresholds="default",
                start_mark: Optional[int] = None) -> ExplorationTrace:
    """Breadth-first mark-class exploration from a uniform start mark.

    Each step reveals the whole mark class of one unrevealed neighbour of
    the vertex under exploration.  ``thresholds`` may be "default", None
    (run to exhaustion) or a {max_steps, max_rounds} dict; stopping is
    strict-exceed on both counts.  Seeds revealed within one step are
    uniformly shuffled.
    """
    n = mt.n
    if thresholds == "default":
        thresholds = default_thresholds_one(n)
    max_steps = math.inf if thresholds is None else thresholds["max_steps"]
    max_rounds = math.inf if thresholds is None else thresholds["max_rounds"]

    tree = mt.tree
    idx = _MarkIndex(mt)
    if start_mark is None:
        start_mark = int(rng.integers(1, mt.lam.N + 1))
    kids = tree.children
    parent = tree.parent_array

    revealed = np.zeros(tree.num_vertices + 1, dtype=bool)
    reveal_order: list = []

    def reveal_class(u):
        members = idx.class_of(u)
        new = members[~revealed[members]]
        revealed[new] = True
        reveal_order.extend(new.tolist())
        return new

    e0 = reveal_class(int(idx.members(start_mark)[0]))
    seeds0 = tuple(rng.permutation(e0).tolist())
    steps = [StepRecord(step=0, explored=0, revealed=tuple(e0.tolist()), seeds=seeds0)]
    rounds = [RoundRecord(r=0, tau=0, e_size=len(e0))]
    e_sets = [tuple(sorted(e0.tolist()))]

    frontier = sorted(e0.tolist())
    k = 0
    r = 0
    terminal = None
    while terminal is None:
        if not frontier:
            terminal = "exhausted"
            break
        new_frontier: list = []
        for v in frontier:
            s_v = [u for u in kids[v] if not revealed[u]]
            pu = int(parent[v])
            if pu >= 1 and not revealed[pu]:
                s_v.append(pu)
            for u in s_v:
                k += 1
                new = reveal_class(u) if not revealed[u] else np.empty(0, dtype=np.int64)
                seeds = new[new != u]
                seeds = tuple(rng.permutation(seeds).tolist()) if len(seeds) else ()
                steps.append(StepRecord(step=k, explored=v,
                                        revealed=tuple(new.tolist()), seeds=seeds))
                new_frontier.extend(new.tolist())
                if k > max_steps:
                    terminal = "step-threshold"
                    break
            if terminal:
                break
        if terminal:
            break
        r += 1
        rounds.append(RoundRecord(r=r, tau=k, e_size=len(reveal_order)))
        e_sets.append(tuple(sorted(reveal_order)))
        frontier = sorted(new_frontier)
        if r > max_rounds:
            terminal = "round-threshold"
    return ExplorationTrace(
        stage=1, start=int(idx.members(start_mark)[0]), steps=tuple(steps),
        rounds=tuple(rounds), terminal=terminal,
        revealed=tuple(reveal_order), e_sets=tuple(e_sets))


# -- process II ---------------------------------------------------------------

class _SetDistance:
    """Capped distance to a growing vertex set.

    Distances only decrease, so breadth-first relaxation from inserted
    vertices is amortized; with the cap at or above the tree diameter
    every vertex is trivially within range.
    """

    def __init__(self, tree: RootedPlaneTree, cap: int, always_near: bool):
        self.cap = cap
        self.always = always_near
        if not always_near:
            self.dist = np.full(tree.num_vertices + 1, cap + 1, dtype=np.int64)
            self.kids = tree.children
            self.parent = tree.parent_array

    def add(self, vertices):
        if self.always:
            return
        q = deque()
        for v in vertices:
            if self.dist[v] > 0:
                self.dist[v] = 0
                q.append(v)
        while q:
            v = q.popleft()
            d = self.dist[v] + 1
            if d > self.cap:
                continue
            for u in self.kids[v]:
                if self.dist[u] > d:
                    self.dist[u] = d
                    q.append(u)
            pu = int(self.parent[v])
            if pu >= 1 and self.dist[pu] > d:
                self.dist[pu] = d
                q.append(pu)

    def within(self, v: int) -> bool:
        return True if self.always else bool(self.dist[v] <= self.cap)


class _Worm:
    __slots__ = ("seed", "body", "deaths")

    def __init__(self, seed: int):
        self.seed = seed
        self.body = [seed]
        self.deaths = 0


def _pairwise_close(tree: RootedPlaneTree, vertices, cap: int) -> bool:
    vs = list(vertices)
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            if tree.distance(vs[i], vs[j]) <= cap:
                return True
    return False


def _parents_toward(tree: RootedPlaneTree, vstar: int) -> np.ndarray:
    """Next vertex on the path toward ``vstar`` for every vertex
    (0 at vstar itself)."""
    nv = tree.num_vertices
    par = np.zeros(nv + 1, dtype=np.int64)
    kids = tree.children
    parent = tree.parent_array
    visited = np.zeros(nv + 1, dtype=bool)
    visited[vstar] = True
    q = deque([vstar])
    while q:
        v = q.popleft()
        for u in kids[v]:
            if not visited[u]:
                visited[u] = True
                par[u] = v
                q.append(u)
        pu = int(parent[v])
        if pu >= 1 and not visited[pu]:
            visited[pu] = True
            par[pu] = v
            q.append(pu)
    return par


def _run_stage(mt, idx, rng, thresholds, start, parent_star,
               death_radius, always_near, stage, other_near):
    tree = mt.tree
    max_steps = thresholds["max_steps"]
    max_rounds = thresholds["max_rounds"]
    nv = tree.num_vertices

    revealed = np.zeros(nv + 1, dtype=bool)
    dead = np.zeros(nv + 1, dtype=bool)
    reveal_order = [start]
    revealed[start] = True
    q0 = idx.class_of(start)
    q0 = q0[q0 != start]
    dead[q0] = True
    dead_order = q0.tolist()

    near = _SetDistance(tree, death_radius, always_near)
    near.add([_vstar_of(parent_star)])
    near.add([start])
    near.add(dead_order)

    worm0 = _Worm(start)
    worms = [worm0]
    worm_of = {start: worm0}
    disasters: list = []
    collision_step = None

    steps = [StepRecord(step=0, explored=0, revealed=(start,), seeds=(start,),
                        dead=tuple(dead_order))]
    rounds = [RoundRecord(r=0, tau=0, e_size=1)]
    e_sets = [(start,)]

    terminal = None
    if other_near is not None and other_near[start]:
        terminal = "collision"
        collision_step = 0

    frontier = [start]
    k = 0
    r = 0
    while terminal is None:
        if not frontier:
            terminal = "exhausted"
            break
        new_frontier: list = []
        for v in sorted(frontier):
            k += 1
            u = int(parent_star[v])
            skipped = 0
            while u != 0 and dead[u]:
                skipped += 1
                u = int(parent_star[u])
            if u == 0:
                steps.append(StepRecord(step=k, explored=v, revealed=(), seeds=()))
                terminal = "exhausted"
                break
            if revealed[u]:
                steps.append(StepRecord(step=k, explored=v, revealed=(), seeds=(),
                                        v_minus=u))
                terminal = "self-hit"
                break
            wrm = worm_of[v]
            before = wrm.deaths
            wrm.deaths += skipped
            wrm.body.append(u)
            worm_of[u] = wrm
            if before < DISASTER_DEATHS <= wrm.deaths:
                disasters.append((stage, k))
            members = idx.class_of(u)
            lam_set = members[members != u]
            if other_near is not None and other_near[members].any():
                collision_step = k
                steps.append(StepRecord(step=k, explored=v, revealed=(), seeds=(),
                                        v_minus=u))
                terminal = "collision"
                break
            assert not revealed[lam_set].any() and not dead[lam_set].any(), \
                "mark classes are revealed atomically"
            if len(lam_set) == 0:
                death = False
            elif always_near:
                death = True
            else:
                death = any(near.within(int(x)) for x in lam_set) or \
                    _pairwise_close(tree, lam_set.tolist(), death_radius)
            revealed[u] = True
            reveal_order.append(u)
            if death:
                dead[lam_set] = True
                dead_order.extend(lam_set.tolist())
                near.add([u])
                near.add(lam_set.tolist())
                newly = (u,)
                seeds: tuple = ()
            else:
                revealed[lam_set] = True
                reveal_order.extend(lam_set.tolist())
                near.add([u] + lam_set.tolist())
                seeds = tuple(rng.permutation(lam_set).tolist()) if len(lam_set) else ()
                for s in seeds:
                    w = _Worm(int(s))
                    worms.append(w)
                    worm_of[int(s)] = w
                newly = (u,) + tuple(lam_set.tolist())
            steps.append(StepRecord(step=k, explored=v, revealed=newly, seeds=seeds,
                                    v_minus=u, death=death,
                                    dead=tuple(lam_set.tolist()) if death else ()))
            new_frontier.extend(newly)
            if k > max_steps:
                terminal = "step-threshold"
                break
        if terminal:
            break
        r += 1
        rounds.append(RoundRecord(r=r, tau=k, e_size=len(reveal_order)))
        e_sets.append(tuple(sorted(reveal_order)))
        frontier = new_frontier
        if r > max_rounds:
            terminal = "round-threshold"

    worm_states = tuple(
        WormState(seed=w.seed, body=tuple(w.body), deaths_faced=w.deaths,
                  head=w.body[-1]) for w in worms)
    trace = ExplorationTrace(
        stage=stage, start=start, steps=tuple(steps), rounds=tuple(rounds),
        terminal=terminal, revealed=tuple(reveal_order), dead=tuple(dead_order),
        e_sets=tuple(e_sets), worms=worm_states)
    return trace, disasters, collision_step


def _vstar_of(parent_star: np.ndarray) -> int:
    return int(np.flatnonzero(parent_star[1:] == 0)[0]) + 1


def explore_two(mt: MarkedTree, rng: np.random.Generator, thresholds="default",
                death_radius: Optional[int] = None):
    """Two-stage far-vertex exploration.

    Stage 1 starts from the smallest vertex of mark 1 and stage 2 from mark
    2; the far vertex maximizes the tree distance to the pair of starts.
    Returns (stage1 trace, stage2 trace, EventLog).  ``death_radius``
    defaults to floor(log^3 n); overriding it is a diagnostic device (the
    default exceeds the tree diameter until n is astronomically large, in
    which case every revealed class dies and each stage grows one worm).
    """
    tree = mt.tree
    n = tree.n
    if thresholds == "default":
        thresholds = default_thresholds_two(n)
    idx = _MarkIndex(mt)
    if mt.lam.N < 2 or len(idx.members(1)) == 0 or len(idx.members(2)) == 0:
        raise ValueError("process II needs marks 1 and 2 present")
    v1 = int(idx.members(1).min())
    v2 = int(idx.members(2).min())
    dist_starts = tree.distances_from([v1, v2])
    vstar = int(np.argmax(dist_starts[1:])) + 1
    if death_radius is None:
        death_radius = int(math.log(max(n, 2)) ** 3)
    parent_star = _parents_toward(tree, vstar)
    always_near = tree.diameter() <= death_radius

    stage1, dis1, _ = _run_stage(mt, idx, rng, thresholds, v1, parent_star,
                                 death_radius, always_near, 1, None)

    near1 = np.zeros(tree.num_vertices + 1, dtype=bool)
    s1 = np.array(stage1.revealed + stage1.dead, dtype=np.int64)
    near1[s1] = True
    kids = tree.children
    parent = tree.parent_array
    for v in s1.tolist():
        for u in kids[v]:
            near1[u] = True
        pu = int(parent[v])
        if pu >= 1:
            near1[pu] = True

    stage2, dis2, collision_step = _run_stage(mt, idx, rng, thresholds, v2,
                                              parent_star, death_radius,
                                              always_near, 2, near1)

    all_seeds = [s for rec in stage1.steps + stage2.steps for s in rec.seeds]
    bad_pairs = tuple(find_bad_pairs(tree, all_seeds)) \
        if len(all_seeds) <= _BAD_PAIR_SEED_CAP else None
    events = EventLog(bad_pairs=bad_pairs, disasters=tuple(dis1 + dis2),
                      collision_step=collision_step, termination=stage2.terminal)
    return stage1, stage2, events


# -- webs, bad pairs, coupling trees ------------------------------------------

def compute_web(t: RootedPlaneTree, revealed) -> set:
    """Union of the root-to-component paths: for each connected component of
    the revealed set, the tree path joining the root and the component's
    vertex closest to the root (inclusive)."""
    rev = set(int(v) for v in revealed)
    depths = t.depths
    parent = t.parent_array
    # components of the induced forest: a revealed vertex joins its parent's
    # component when the parent is revealed; scanning by id sees parents first
    comp = {}
    tops = {}
    for v in sorted(rev):
        p = int(parent[v])
        if p >= 1 and p in rev:
            comp[v] = comp[p]
        else:
            comp[v] = v
            tops[v] = v
    web: set = set()
    for top in tops:
        cur = top
        web.add(cur)
        while cur != 1:
            cur = int(parent[cur])
            web.add(cur)
    return web


def find_bad_pairs(t: RootedPlaneTree, vertices, threshold: Optional[float] = None) -> list:
    """Unordered pairs (u, v) whose deepest common ancestor sits within
    log^2 n of u, v or the root: min of the three distances below the
    threshold (natural log of the edge count by default)."""
    if threshold is None:
        threshold = math.log(max(t.n, 2)) ** 2
    depths = t.depths
    vs = [int(v) for v in vertices]
    out = []
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            u, v = vs[i], vs[j]
            if u == v:
                continue
            a = t.lca(u, v)
            c = min(int(depths[u] - depths[a]), int(depths[v] - depths[a]),
                    int(depths[a]))
            if c < threshold:
                out.append((u, v))
    return out


def coupling_tree_levels(trace: ExplorationTrace) -> list:
    """Level sizes of the coupling tree of a stage of process II: offspring
    of an explored vertex are the vertices revealed at its step (the whole
    class of the live ancestor, or just that ancestor under the death rule).
    """
    depth = {trace.start: 0}
    for rec in trace.steps[1:]:
        if rec.v_minus is None or not rec.revealed:
            continue
        d = depth[rec.explored] + 1
        for child in rec.revealed:
            depth[child] = d
    if not depth:
        return [1]
    maxd = max(depth.values())
    z = [0] * (maxd + 1)
    for d in depth.values():
        z[d] += 1
    return z


# -- seed-sequence diagnostics ---------------------------------------------------

def _subtree_rank_statistic(tree: RootedPlaneTree, dims: int = 3, buckets: int = 4):
    """Projection of a seed sequence to subtree-size rank buckets of its
    first ``dims`` entries (-1 pads missing ones)."""
    ranks = np.argsort(np.argsort(tree.subtree_sizes[1:]))
    nv = tree.num_vertices

    def stat(seeds):
        out = [min(int(ranks[s - 1] / nv * buckets), buckets - 1)
               for s in seeds[:dims]]
        while len(out) < dims:
            out.append(-1)
        return tuple(out)

    return stat


def seeds_vs_iid_distance(mt: MarkedTree, rng: np.random.Generator,
                          trials: int, statistic=None) -> SeedTVReport:
    """Plug-in total-variation estimate between the projected seed sequence
    of process I and an i.i.d. uniform vertex sample of the same length.

    Each trial re-draws the marking (same composition and tree).  The
    report carries a null estimate (two independent i.i.d. samples through
    the same histogram) as the estimator's bias floor; this is a
    diagnostic, not an acceptance gate.
    """
    if trials < 1000:
        raise ValueError("need at least 1e3 trials for a meaningful estimate")
    from .sample import sample_marking
    tree = mt.tree
    stat = statistic or _subtree_rank_statistic(tree)
    nv = tree.num_vertices
    counts_s: dict = {}
    counts_i: dict = {}
    counts_i2: dict = {}
    for _ in range(trials):
        mt_t = sample_marking(tree, mt.lam, rng)
        trace = explore_one(mt_t, rng)
        seeds = [s for rec in trace.steps for s in rec.seeds]
        key = stat(seeds)
        counts_s[key] = counts_s.get(key, 0) + 1
        for bucket in (counts_i, counts_i2):
            iid = (rng.integers(0, nv, size=len(seeds)) + 1).tolist()
            key = stat(iid)
            bucket[key] = bucket.get(key, 0) + 1
    keys = set(counts_s) | set(counts_i) | set(counts_i2)
    tv = 0.5 * sum(abs(counts_s.get(k, 0) - counts_i.get(k, 0)) / trials for k in keys)
    null = 0.5 * sum(abs(counts_i2.get(k, 0) - counts_i.get(k, 0)) / trials for k in keys)
    return SeedTVReport(tv=tv, null_tv=null, bins=len(keys), trials=trials)
