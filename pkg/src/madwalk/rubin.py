"""Exponential-clock realisation of the walk, extensions on path subtrees,
and the green branching process.

Each ordered (directed) edge carries an i.i.d. sequence of mean-1
exponential clocks, a pure function of ``(seed, edge, index)``, so any
number of walks can share one store and consume identical variates.  A
walk at a vertex steps to the neighbour whose cumulative weighted clock
sum is minimal; the memoryless property makes the jump chain exactly the
reinforced-walk kernel.  Directed edges are keyed by the path hash of
their child-side vertex plus an upward/downward flag, and the clock index
counts prior departures along that directed edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .formulas import psi
from .rng import child_seed, exp_from_hash, mix
from .trees import LazyTree, ROOT, ROOT_PARENT
from .walk import Configuration, OMEGA_STAR, ParamError, WalkParams

_PATH_SALT = 0x9A7E5


class ClockStore:
    """Memoised exponential clocks indexed by (directed edge, crossing index).

    Values are pure in ``(seed, edge_hash, upward, index)``; the memo is an
    optimisation for walks that re-query shared edges.
    """

    __slots__ = ("seed", "_memo")

    def __init__(self, seed: int):
        self.seed = seed
        self._memo: dict = {}

    def exp(self, edge_hash: int, upward: bool, index: int) -> float:
        key = (edge_hash, upward, index)
        v = self._memo.get(key)
        if v is None:
            v = exp_from_hash(mix(self.seed, edge_hash, 1 if upward else 0, index))
            self._memo[key] = v
        return v


def clock_weight(params: WalkParams, omega: Configuration, child_path: tuple,
                 upward: bool, index: int) -> float:
    """Weight dividing the clock at the given crossing index.

    Upward (toward the parent) crossings always weigh 1.  The first
    downward crossing weighs u0 unless the edge is pre-reinforced, every
    later one weighs u1.
    """
    if upward:
        return 1.0
    if index >= 1:
        return params.u1
    return params.u1 if child_path in omega else params.u0


class RubinWalk:
    """Clock-driven walk on a lazy tree, sharing a ClockStore."""

    __slots__ = ("tree", "clocks", "u0", "u1", "omega_set", "position",
                 "_pend", "_kdep")

    def __init__(self, tree: LazyTree, params: WalkParams, clocks: ClockStore,
                 omega: Configuration = OMEGA_STAR):
        self.tree = tree
        self.clocks = clocks
        self.u0 = params.u0
        self.u1 = params.u1
        self.omega_set = omega.resolve(tree)
        self.position = ROOT_PARENT
        self._pend: dict = {}   # (child_handle, upward) -> pending alarm value
        self._kdep: dict = {}   # (child_handle, upward) -> departures so far

    def step(self) -> int:
        v = self.position
        if v == ROOT_PARENT:
            self.position = ROOT
            return ROOT
        tree = self.tree
        pend = self._pend
        clocks = self.clocks

        key = (v, True)
        best = pend.get(key)
        if best is None:
            best = clocks.exp(tree.path_hash(v), True, 0)
            pend[key] = best
        best_key = key
        best_child = -1
        base, ar = tree.children_range(v)
        for c in range(base, base + ar):
            key = (c, False)
            s = pend.get(key)
            if s is None:
                w0 = self.u1 if c in self.omega_set else self.u0
                s = clocks.exp(tree.path_hash(c), False, 0) / w0
                pend[key] = s
            if s < best:
                best = s
                best_key = key
                best_child = c
        # consume the winning alarm: its next crossing weighs 1 upward, u1 downward
        k = self._kdep.get(best_key, 0) + 1
        self._kdep[best_key] = k
        child, upward = best_key
        w = 1.0 if upward else self.u1
        pend[best_key] = best + clocks.exp(tree.path_hash(child), upward, k) / w
        nxt = tree.parent(v) if upward else best_child
        self.position = nxt
        return nxt


# ---------------------------------------------------------------------------
# extensions on special path subtrees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpecialSubtree:
    """A path subtree [bottom, top]; the end closest to the root parent has
    degree one inside the subtree, which is what makes it special.

    ``edge_hashes[i]`` identifies the edge between path positions i and
    i+1 (keyed by its child-side vertex); ``reinforced[i]`` marks edges of
    the starting configuration.
    """

    edge_hashes: tuple
    reinforced: tuple

    def __post_init__(self):
        if len(self.edge_hashes) < 1:
            raise ParamError("a path subtree needs at least one edge")
        if len(self.reinforced) != len(self.edge_hashes):
            raise ParamError("one reinforcement flag per edge is required")

    @property
    def length(self) -> int:
        return len(self.edge_hashes)

    @classmethod
    def tree_path(cls, tree: LazyTree, bottom: int, top: int,
                  omega: Configuration = OMEGA_STAR) -> "SpecialSubtree":
        """Path from ``bottom`` (an ancestor, closest to the root parent) down
        to ``top`` on a concrete tree."""
        if not tree.is_ancestor(bottom, top):
            raise ParamError("bottom must be an ancestor of top")
        omega_set = omega.resolve(tree)
        hashes, marks = [], []
        v = top
        while v != bottom:
            hashes.append(tree.path_hash(v))
            marks.append(v in omega_set)
            v = tree.parent(v)
        return cls(tuple(reversed(hashes)), tuple(reversed(marks)))

    @classmethod
    def abstract(cls, length: int, reinforced_prefix: int = 1, tag: int = 0) -> "SpecialSubtree":
        """Stand-alone path with synthetic edge identities (no backing tree)."""
        hashes = tuple(mix(_PATH_SALT, tag, i) for i in range(length))
        marks = tuple(i < reinforced_prefix for i in range(length))
        return cls(hashes, marks)


class PathExtensionWalk:
    """Extension of the walk to a special path subtree.

    The walk starts at path position 0 (the degree-one end) and steps from
    both path endpoints deterministically; interior steps race the two
    incident directed-edge clocks.  Sharing the ClockStore with the full
    walk, or with other extensions overlapping only at leaves, reproduces
    the consistency and independence of the construction.
    """

    __slots__ = ("subtree", "clocks", "u0", "u1", "pos",
                 "_down_pend", "_down_k", "_up_pend", "_up_k")

    def __init__(self, subtree: SpecialSubtree, params: WalkParams, clocks: ClockStore):
        m = subtree.length
        self.subtree = subtree
        self.clocks = clocks
        self.u0 = params.u0
        self.u1 = params.u1
        self.pos = 0
        self._down_pend = [None] * m
        self._down_k = [0] * m
        self._up_pend = [None] * m
        self._up_k = [0] * m

    def step(self) -> int:
        pos = self.pos
        m = self.subtree.length
        if pos == 0:
            self.pos = 1
            return 1
        if pos == m:
            self.pos = m - 1
            return self.pos
        hashes = self.subtree.edge_hashes
        clocks = self.clocks

        down = self._down_pend[pos]
        if down is None:
            w0 = self.u1 if self.subtree.reinforced[pos] else self.u0
            down = clocks.exp(hashes[pos], False, 0) / w0
            self._down_pend[pos] = down
        up_edge = pos - 1
        up = self._up_pend[up_edge]
        if up is None:
            up = clocks.exp(hashes[up_edge], True, 0)
            self._up_pend[up_edge] = up
        if down < up:
            k = self._down_k[pos] + 1
            self._down_k[pos] = k
            self._down_pend[pos] = down + clocks.exp(hashes[pos], False, k) / self.u1
            self.pos = pos + 1
        else:
            k = self._up_k[up_edge] + 1
            self._up_k[up_edge] = k
            self._up_pend[up_edge] = up + clocks.exp(hashes[up_edge], True, k)
            self.pos = pos - 1
        return self.pos

    def hits_top_before_return(self, max_steps: int = 10**7) -> bool:
        """Run from position 0 until the far end or the first return to 0."""
        if self.pos != 0:
            raise ParamError("absorption run must start at path position 0")
        m = self.subtree.length
        self.step()
        for _ in range(max_steps):
            p = self.step()
            if p == m:
                return True
            if p == 0:
                return False
        raise RuntimeError("absorption run exceeded the step budget")


def path_monotonicity_check(params: WalkParams, omega_high: Configuration,
                            omega_low: Configuration, n: int, samples: int,
                            seed: int) -> int:
    """Count shared-clock samples where the lower environment reaches level n
    before returning while the higher one does not (expected: zero).

    Both configurations are read along the leftmost path of length n; the
    domination precondition follows the environment ordering, which
    reverses set inclusion when u1 < u0.
    """
    if not omega_high.dominates(omega_low, params):
        raise ParamError("omega_high must dominate omega_low for these weights")
    edges = [(1,) * k for k in range(n + 1)]   # child paths: (), (1,), (1,1), ...
    hi_marks = tuple(e in omega_high for e in edges)
    lo_marks = tuple(e in omega_low for e in edges)
    hashes = tuple(mix(_PATH_SALT, 1, i) for i in range(n + 1))
    violations = 0
    for i in range(samples):
        clocks = ClockStore(child_seed(seed, i))
        hi = PathExtensionWalk(SpecialSubtree(hashes, hi_marks), params, clocks)
        lo = PathExtensionWalk(SpecialSubtree(hashes, lo_marks), params, clocks)
        if lo.hits_top_before_return() and not hi.hits_top_before_return():
            violations += 1
    return violations


# ---------------------------------------------------------------------------
# green branching process
# ---------------------------------------------------------------------------


@dataclass
class GreenProcess:
    """Per-generation green-vertex counts of the level coloring."""

    n_star: int
    counts: list
    survived: bool
    generation_cap: int
    truncated: bool = False


def _descendants_at_depth(tree: LazyTree, v: int, depth: int) -> list[int]:
    layer = [v]
    for _ in range(depth):
        nxt = []
        for w in layer:
            base, ar = tree.children_range(w)
            nxt.extend(range(base, base + ar))
        layer = nxt
    return layer


def green_process(tree: LazyTree, params: WalkParams, n_star: int,
                  generation_cap: int, clocks: ClockStore,
                  omega: Configuration = OMEGA_STAR,
                  max_per_generation: int = 256) -> GreenProcess:
    """Color vertices at levels k * n_star green when the path extension from
    their green ancestor's parent reaches them before returning.

    Generations beyond ``max_per_generation`` green vertices are truncated
    (only that many parents are expanded), which can only undercount, so
    survival frequencies estimated from truncated runs are conservative.
    """
    if n_star < 1:
        raise ParamError(f"need n_star >= 1, got {n_star}")
    greens = [ROOT]
    counts = [1]
    truncated = False
    for _ in range(generation_cap):
        if not greens:
            counts.append(0)
            continue
        if len(greens) > max_per_generation:
            greens = greens[:max_per_generation]
            truncated = True
        nxt = []
        for nu in greens:
            for mu in _descendants_at_depth(tree, nu, n_star):
                sub = SpecialSubtree.tree_path(tree, tree.parent(nu), mu, omega)
                if PathExtensionWalk(sub, params, clocks).hits_top_before_return():
                    nxt.append(mu)
        counts.append(len(nxt))
        greens = nxt
    return GreenProcess(n_star=n_star, counts=counts, survived=counts[-1] > 0,
                        generation_cap=generation_cap, truncated=truncated)


def mean_green_offspring(law, params: WalkParams, n_star: int, samples: int,
                         seed: int) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the root's green offspring
    count over independent (tree, clock) samples."""
    total = 0.0
    total_sq = 0.0
    for i in range(samples):
        tree = LazyTree(law, child_seed(seed, 2 * i))
        clocks = ClockStore(child_seed(seed, 2 * i + 1))
        g = green_process(tree, params, n_star, 1, clocks)
        c = g.counts[1]
        total += c
        total_sq += c * c
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, (var / samples) ** 0.5


def expected_green_offspring(law, params: WalkParams, n_star: int) -> float:
    """Annealed expected green offspring: d**n_star * psi(n_star)."""
    return law.mean ** n_star * psi(params, n_star)
