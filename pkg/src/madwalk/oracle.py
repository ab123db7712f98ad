"""Independent ground truth on small instances.

Nothing here shares code with the closed-form or simulation paths: hitting
probabilities come from linear solves over the (position, maximum) chain,
and step distributions from exhaustive trajectory enumeration with its own
weight bookkeeping.  Exact rational arithmetic is used where feasible,
dense floating solves with a residual check otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .trees import LazyTree, OffspringLaw, ROOT, ROOT_PARENT
from .walk import Configuration, OMEGA_STAR, WalkParams

_EXACT_MAX_LEVEL = 12
_RESIDUAL_TOL = 1e-12
_TRAJECTORY_BUDGET = 10**7
_STATE_BUDGET = 200_000


class OracleError(RuntimeError):
    pass


class BudgetError(OracleError):
    pass


# ---------------------------------------------------------------------------
# linear-solve hitting probabilities for the (position, maximum) chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathChain:
    """Half-line walk absorbed at -1 and n; up-probability b at the running
    maximum and a elsewhere."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise OracleError(f"need target level n >= 1, got {self.n}")
        if not (0 < self.a < 1 and 0 < self.b < 1):
            raise OracleError(f"need a, b in (0, 1), got a={self.a}, b={self.b}")


def _chain_states(n: int, start_max: int):
    top = max(n - 1, start_max)
    states = [(pos, m) for pos in range(n) for m in range(pos, top + 1)]
    return states, {s: i for i, s in enumerate(states)}


def _solve_fraction(chain: PathChain, start_pos: int, start_max: int) -> Fraction:
    a, b = Fraction(chain.a), Fraction(chain.b)
    n = chain.n
    states, idx = _chain_states(n, start_max)
    m = len(states)
    rows = [[Fraction(0)] * (m + 1) for _ in range(m)]
    for i, (pos, mx) in enumerate(states):
        up = b if pos == mx else a
        rows[i][i] = Fraction(1)
        up_state = (pos + 1, max(mx, pos + 1))
        if pos + 1 == n:
            rows[i][m] += up
        else:
            rows[i][idx[up_state]] -= up
        if pos - 1 >= 0:
            rows[i][idx[(pos - 1, mx)]] -= 1 - up
        # pos-1 == -1 contributes 0
    # gaussian elimination with partial (first nonzero) pivoting
    for col in range(m):
        piv = next(r for r in range(col, m) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        prow = rows[col]
        inv = 1 / prow[col]
        for j in range(col, m + 1):
            prow[j] *= inv
        for r in range(m):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                for j in range(col, m + 1):
                    rows[r][j] -= f * prow[j]
    return rows[idx[(start_pos, start_max)]][m]


def _solve_float(chain: PathChain, start_pos: int, start_max: int) -> float:
    a, b, n = chain.a, chain.b, chain.n
    states, idx = _chain_states(n, start_max)
    m = len(states)
    mat = np.eye(m)
    rhs = np.zeros(m)
    for i, (pos, mx) in enumerate(states):
        up = b if pos == mx else a
        if pos + 1 == n:
            rhs[i] += up
        else:
            mat[i, idx[(pos + 1, max(mx, pos + 1))]] -= up
        if pos - 1 >= 0:
            mat[i, idx[(pos - 1, mx)]] -= 1 - up
    sol = np.linalg.solve(mat, rhs)
    residual = np.max(np.abs(mat @ sol - rhs))
    if residual > _RESIDUAL_TOL:
        raise OracleError(f"hitting-probability solve residual {residual:g} above tolerance")
    return float(sol[idx[(start_pos, start_max)]])


def exact_path_hit(chain: PathChain, start_pos: int = 0, start_max: int = 0):
    """Absorption probability at n before -1 from (start_pos, start_max).

    Returns a Fraction (exact) when n <= 12 and both a and b are Fractions,
    a float from a residual-checked dense solve otherwise.
    """
    if not (-1 <= start_pos <= start_max <= chain.n):
        raise OracleError(f"need -1 <= start_pos <= start_max <= n, got "
                          f"({start_pos}, {start_max}), n={chain.n}")
    if start_pos == -1:
        return Fraction(0) if isinstance(chain.a, Fraction) else 0.0
    if start_pos == chain.n:
        return Fraction(1) if isinstance(chain.a, Fraction) else 1.0
    exact = isinstance(chain.a, Fraction) and isinstance(chain.b, Fraction)
    if exact and chain.n <= _EXACT_MAX_LEVEL:
        return _solve_fraction(chain, start_pos, start_max)
    return _solve_float(chain, start_pos, start_max)


def path_hit_for_walk(params: WalkParams, n: int, reinforced_prefix: int = 1):
    """Hit-level-n-before-return probability of the tree walk restricted to a
    path, with the first ``reinforced_prefix`` path edges pre-reinforced.

    The pre-reinforced prefix acts exactly like an already-achieved running
    maximum, so this reduces to the (position, maximum) chain started at
    (0, max(prefix - 1, 0)).
    """
    a = params.u1 / (1.0 + params.u1)
    b = params.u0 / (1.0 + params.u0)
    return exact_path_hit(PathChain(a=a, b=b, n=n), 0, max(reinforced_prefix - 1, 0))


# ---------------------------------------------------------------------------
# exhaustive trajectory enumeration on truncated trees
# ---------------------------------------------------------------------------


@dataclass
class EnumTree:
    """A lazily built tree truncated at ``depth``: deeper vertices are leaves."""

    tree: LazyTree
    depth: int

    @classmethod
    def regular(cls, d: int, depth: int, seed: int = 0) -> "EnumTree":
        return cls(tree=LazyTree(OffspringLaw.regular(d), seed), depth=depth)

    @classmethod
    def from_law(cls, law: OffspringLaw, depth: int, seed: int) -> "EnumTree":
        return cls(tree=LazyTree(law, seed), depth=depth)

    def children(self, v: int) -> list[int]:
        if self.tree.level(v) >= self.depth:
            return []
        return self.tree.children(v)


def _neighbour_probs(enum_tree: EnumTree, v: int, visited: frozenset,
                     u0: float, u1: float) -> list[tuple[int, float]]:
    # independent re-statement of the kernel: parent weight 1, child weight
    # u1 iff the edge (keyed by child) was crossed or pre-reinforced
    kids = enum_tree.children(v)
    weights = [(enum_tree.tree.parent(v), 1.0)]
    weights += [(c, u1 if c in visited else u0) for c in kids]
    total = math.fsum(w for _, w in weights)
    return [(nb, w / total) for nb, w in weights]


def enumerate_step_distribution(enum_tree: EnumTree, params: WalkParams, length: int,
                                omega: Configuration = OMEGA_STAR) -> dict[tuple, float]:
    """Exhaustive distribution of length-``length`` trajectories from the
    root parent; keys are tuples of vertex handles including the start."""
    if length > 12:
        raise BudgetError(f"trajectory length capped at 12, got {length}")
    u0, u1 = params.u0, params.u1
    start_visited = frozenset(omega.resolve(enum_tree.tree))
    out: dict[tuple, float] = {}
    count = 0

    def rec(v, visited, prob, traj, remaining):
        nonlocal count
        if remaining == 0:
            out[traj] = out.get(traj, 0.0) + prob
            count += 1
            if count > _TRAJECTORY_BUDGET:
                raise BudgetError("trajectory budget exceeded")
            return
        if v == ROOT_PARENT:
            nxt = visited if ROOT in visited else visited | {ROOT}
            rec(ROOT, nxt, prob, traj + (ROOT,), remaining - 1)
            return
        for nb, p in _neighbour_probs(enum_tree, v, visited, u0, u1):
            if p == 0.0:
                continue
            edge = nb if nb != enum_tree.tree.parent(v) else v
            nxt = visited if edge in visited else visited | {edge}
            rec(nb, nxt, prob * p, traj + (nb,), remaining - 1)

    rec(ROOT_PARENT, start_visited, 1.0, (ROOT_PARENT,), length)
    return out


# ---------------------------------------------------------------------------
# exact expected range before the first return to the root parent
# ---------------------------------------------------------------------------


def exact_mean_return_range(enum_tree: EnumTree, params: WalkParams) -> float:
    """Expected number of distinct vertices visited before returning to the
    root parent, on the depth-truncated tree (leaves reflect), under the
    canonical starting configuration.

    Works on the full (position, visited-edge-set) chain; the range equals
    1 + the number of crossed edges at the return time, since on a tree
    each newly visited vertex is reached through exactly one new edge.
    """
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    u0, u1 = params.u0, params.u1
    tree = enum_tree.tree
    start_visited = frozenset((ROOT,))

    # breadth-first enumeration of reachable (position, visited) states
    start = (ROOT, start_visited)
    index = {start: 0}
    states = [start]
    transitions = []   # (i, j, prob, new_edge_flag); j == -1 means absorbed
    head = 0
    while head < len(states):
        v, visited = states[head]
        i = head
        head += 1
        for nb, p in _neighbour_probs(enum_tree, v, visited, u0, u1):
            if p == 0.0:
                continue
            if nb == ROOT_PARENT:
                transitions.append((i, -1, p, 0))
                continue
            edge = nb if nb != tree.parent(v) else v
            new_edge = 0 if edge in visited else 1
            nxt = (nb, visited if not new_edge else visited | {edge})
            j = index.get(nxt)
            if j is None:
                j = len(states)
                if j > _STATE_BUDGET:
                    raise BudgetError("state-space budget exceeded")
                index[nxt] = j
                states.append(nxt)
            transitions.append((i, j, p, new_edge))

    # g[i] = expected new edges crossed before absorption from state i
    m = len(states)
    rows, cols, vals = [], [], []
    rhs = np.zeros(m)
    for i in range(m):
        rows.append(i)
        cols.append(i)
        vals.append(1.0)
    for i, j, p, new_edge in transitions:
        rhs[i] += p * new_edge
        if j >= 0:
            rows.append(i)
            cols.append(j)
            vals.append(-p)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    g = spla.spsolve(mat, rhs)
    # range = root parent + root (forced first crossing) + new edges after
    return 2.0 + float(g[0])
