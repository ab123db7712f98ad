"""Transition kernel of the once-reinforced walk and its parameterisations.

A walk carries two weights relative to the parent edge: ``u0`` for a
never-crossed child edge and ``u1`` for a previously crossed one.  The
walk starts at the root parent and always steps to the root from there.
Visited edges are stored by their child-side vertex; the starting
configuration marks edges as already reinforced before any step is taken.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import trees
from .trees import LazyTree, ROOT, ROOT_PARENT


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class WalkParams:
    u0: float
    u1: float

    def __post_init__(self):
        if not (self.u0 > 0 and self.u1 > 0):
            raise ParamError(f"walk weights must be positive, got {self}")


def multiplicative_params(alpha: float, beta: float) -> WalkParams:
    """Multiplicative reinforcement: visited child weight alpha, unvisited alpha/(1+beta)."""
    if alpha <= 0:
        raise ParamError(f"alpha must be positive, got {alpha}")
    if beta <= -1:
        raise ParamError(f"multiplicative reinforcement needs beta > -1, got {beta}")
    return WalkParams(u0=alpha / (1.0 + beta), u1=alpha)


def additive_params(alpha: float, beta: float) -> WalkParams:
    """Additive reinforcement: u0 = alpha/(1+beta), u1 = (alpha+beta)/(1+beta)."""
    if alpha <= 0:
        raise ParamError(f"alpha must be positive, got {alpha}")
    if beta <= -min(alpha, 1.0):
        raise ParamError(f"additive reinforcement needs beta > -min(alpha, 1), got {beta}")
    return WalkParams(u0=alpha / (1.0 + beta), u1=(alpha + beta) / (1.0 + beta))


class Configuration:
    """A coherent set of pre-reinforced edges, each keyed by its child vertex path.

    Coherence: the set of paths is closed under truncation, i.e. a marked
    edge below the root forces its parent edge to be marked too.  The
    canonical configuration marks exactly the (root parent, root) edge,
    whose child-side path is the empty tuple.
    """

    __slots__ = ("edges",)

    def __init__(self, edges=((),)):
        paths = frozenset(tuple(p) for p in edges)
        for p in paths:
            if len(p) >= 1 and p[:-1] not in paths:
                raise ParamError(f"incoherent configuration: {p} marked but {p[:-1]} is not")
        self.edges = paths

    def __contains__(self, path) -> bool:
        return tuple(path) in self.edges

    def __eq__(self, other) -> bool:
        return isinstance(other, Configuration) and self.edges == other.edges

    def __hash__(self) -> int:
        return hash(self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __repr__(self) -> str:
        return f"Configuration({sorted(self.edges)})"

    def pointwise_leq(self, other: "Configuration") -> bool:
        return self.edges <= other.edges

    def dominates(self, other: "Configuration", params: WalkParams) -> bool:
        """Environment ordering: set inclusion, reversed when u1 < u0."""
        if params.u1 >= params.u0:
            return other.pointwise_leq(self)
        return self.pointwise_leq(other)

    def resolve(self, tree: LazyTree) -> set[int]:
        """Vertex handles of the marked edges on a concrete tree."""
        return {tree.vertex(p) for p in self.edges}


OMEGA_STAR = Configuration()


@dataclass
class WalkState:
    """Mutable state of one trajectory: position, visited edges, step count."""

    position: int
    visited: set[int] = field(default_factory=set)
    steps: int = 0

    @classmethod
    def initial(cls, tree: LazyTree, omega: Configuration = OMEGA_STAR) -> "WalkState":
        return cls(position=ROOT_PARENT, visited=omega.resolve(tree))


def step_weights(state: WalkState, params: WalkParams, tree: LazyTree) -> list[tuple[int, float]]:
    """Neighbour weights at the current position: parent first, children ascending.

    The parent edge always weighs 1; child edges weigh u1 if crossed (or
    pre-reinforced) and u0 otherwise.  Not defined at the root parent,
    where the step is forced.
    """
    v = state.position
    if v == ROOT_PARENT:
        raise ParamError("step_weights is undefined at the root parent (forced step)")
    u0, u1 = params.u0, params.u1
    visited = state.visited
    base, ar = tree.children_range(v)
    out = [(tree.parent(v), 1.0)]
    for c in range(base, base + ar):
        out.append((c, u1 if c in visited else u0))
    return out


def step(state: WalkState, params: WalkParams, tree: LazyTree, u: float) -> WalkState:
    """Advance one step using a single uniform in [0, 1); mutates and returns state.

    The next position follows the cumulative normalised weights in fixed
    order (parent, children ascending); the crossed edge joins the visited
    set.  From the root parent the walk always steps to the root.
    """
    v = state.position
    visited = state.visited
    if v == ROOT_PARENT:
        visited.add(ROOT)
        state.position = ROOT
        state.steps += 1
        return state

    u0, u1 = params.u0, params.u1
    base, ar = tree.children_range(v)
    total = 1.0
    for c in range(base, base + ar):
        total += u1 if c in visited else u0
    x = u * total
    if x < 1.0:
        state.position = tree.parent(v)
    else:
        x -= 1.0
        nxt = -1
        for c in range(base, base + ar):
            w = u1 if c in visited else u0
            if x < w:
                nxt = c
                break
            x -= w
        if nxt < 0:
            # u at the top of the unit interval: take the last neighbour
            nxt = base + ar - 1
        if nxt not in visited:
            visited.add(nxt)
        state.position = nxt
    state.steps += 1
    return state


def run_levels(tree: LazyTree, params: WalkParams, omega: Configuration,
               n_steps: int, uniforms) -> list[int]:
    """Drive a trajectory for n_steps and return the visited level sequence.

    ``uniforms`` must expose ``next() -> float in [0,1)``.  The returned
    list has length n_steps + 1 and starts at level -1.
    """
    state = WalkState.initial(tree, omega)
    levels = [-1]
    for _ in range(n_steps):
        step(state, params, tree, uniforms.next())
        levels.append(tree.level(state.position))
    return levels


def dump_trajectory(tree: LazyTree, params: WalkParams, omega: Configuration,
                    n_steps: int, uniforms) -> list[tuple[int, int, str]]:
    """Rows ``(step, level, vertex_path)`` for trajectory CSV dumps."""
    state = WalkState.initial(tree, omega)
    rows = [(0, -1, tree.path_str(ROOT_PARENT))]
    for n in range(1, n_steps + 1):
        step(state, params, tree, uniforms.next())
        rows.append((n, tree.level(state.position), tree.path_str(state.position)))
    return rows
