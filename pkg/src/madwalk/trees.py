"""Lazy rooted trees with an augmented root parent.

Vertices are integer handles into growing arrays.  Handle 0 is the root
parent (level -1), handle 1 is the root (level 0).  The arity of a vertex
is a pure function of ``(seed, path)`` through a counter-based hash, so
exploration order never changes the tree and two trees built from equal
``(law, seed)`` agree on every vertex.

Instances are not safe for concurrent materialisation; parallel callers
should build their own tree from the same ``(law, seed)``, which is free
and yields the identical tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .rng import mix, unit_from_hash

ROOT_PARENT = 0
ROOT = 1

MAX_ARITY = 2**32 - 1

_ARITY_SALT = 0xA117
_ROOT_SALT = 0x52007


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class OffspringLaw:
    """Distribution of child counts: regular(d), finite table, or shifted geometric."""

    kind: str
    degree: int = 0
    probs: tuple[tuple[int, float], ...] = ()
    p: float = 0.0

    @classmethod
    def regular(cls, d: int) -> "OffspringLaw":
        if d < 1 or d > MAX_ARITY:
            raise TreeError(f"regular law needs 1 <= d <= {MAX_ARITY}, got {d}")
        return cls(kind="regular", degree=d)

    @classmethod
    def table(cls, table: dict[int, float]) -> "OffspringLaw":
        items = tuple(sorted((int(k), float(v)) for k, v in table.items() if v != 0.0))
        if not items:
            raise TreeError("table law needs at least one positive-probability arity")
        if any(k < 0 or k > MAX_ARITY for k, _ in items):
            raise TreeError("table arities must lie in [0, 2**32 - 1]")
        if any(v < 0 for _, v in items):
            raise TreeError("table probabilities must be non-negative")
        total = math.fsum(v for _, v in items)
        if abs(total - 1.0) > 1e-12:
            raise TreeError(f"table probabilities sum to {total!r}, not 1")
        return cls(kind="table", probs=items)

    @classmethod
    def geometric(cls, p: float) -> "OffspringLaw":
        """Shifted geometric on {1, 2, ...}: P(k) = p (1-p)^(k-1), mean 1/p."""
        if not 0.0 < p <= 1.0:
            raise TreeError(f"geometric law needs p in (0, 1], got {p}")
        return cls(kind="geometric", p=p)

    @classmethod
    def parse(cls, text: str) -> "OffspringLaw":
        """Parse ``regular:d`` / ``table:k1=p1,k2=p2,...`` / ``geom:p``."""
        kind, _, arg = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind == "regular":
            return cls.regular(int(arg))
        if kind == "geom":
            return cls.geometric(float(arg))
        if kind == "table":
            entries = {}
            for item in arg.split(","):
                k, _, v = item.partition("=")
                entries[int(k)] = float(v)
            return cls.table(entries)
        raise TreeError(f"unknown offspring law {text!r}")

    def __str__(self) -> str:
        if self.kind == "regular":
            return f"regular:{self.degree}"
        if self.kind == "geometric":
            return f"geom:{self.p:g}"
        body = ",".join(f"{k}={v:g}" for k, v in self.probs)
        return f"table:{body}"

    @property
    def mean(self) -> float:
        if self.kind == "regular":
            return float(self.degree)
        if self.kind == "geometric":
            return 1.0 / self.p
        return math.fsum(k * v for k, v in self.probs)

    @property
    def no_leaves(self) -> bool:
        """True iff the law puts zero mass on childless vertices."""
        if self.kind in ("regular", "geometric"):
            return True
        return all(k >= 1 for k, _ in self.probs)

    def sample_from_unit(self, u: float) -> int:
        """Inverse-CDF sample from one uniform in [0, 1)."""
        if self.kind == "regular":
            return self.degree
        if self.kind == "geometric":
            k = 1 + int(math.log1p(-u) / math.log1p(-self.p)) if self.p < 1.0 else 1
            return min(k, MAX_ARITY)
        acc = 0.0
        for k, v in self.probs:
            acc += v
            if u < acc:
                return k
        return self.probs[-1][0]


@dataclass
class LazyTree:
    """On-demand tree exploration under an offspring law.

    ``arity``/``children`` materialise vertices as needed; all sampled
    values are memoised and deterministic in ``(law, seed, path)``.
    """

    law: OffspringLaw
    seed: int
    _parent: list = field(default_factory=list, repr=False)
    _index: list = field(default_factory=list, repr=False)
    _level: list = field(default_factory=list, repr=False)
    _phash: list = field(default_factory=list, repr=False)
    _arity: list = field(default_factory=list, repr=False)
    _cbase: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        root_hash = mix(self.seed, _ROOT_SALT)
        # handle 0: root parent, handle 1: root
        self._parent[:] = [-1, ROOT_PARENT]
        self._index[:] = [0, 1]
        self._level[:] = [-1, 0]
        self._phash[:] = [mix(root_hash, 0), root_hash]
        self._arity[:] = [1, -1]
        self._cbase[:] = [ROOT, -1]

    # -- structure queries ------------------------------------------------

    def parent(self, v: int) -> int:
        return self._parent[v]

    def level(self, v: int) -> int:
        return self._level[v]

    def index_in_parent(self, v: int) -> int:
        return self._index[v]

    def path_hash(self, v: int) -> int:
        return self._phash[v]

    def arity(self, v: int) -> int:
        """Number of children of v.  The root parent always has exactly one."""
        a = self._arity[v]
        if a < 0:
            u = unit_from_hash(mix(self._phash[v], _ARITY_SALT))
            a = self.law.sample_from_unit(u)
            self._arity[v] = a
        return a

    def children_range(self, v: int) -> tuple[int, int]:
        """(first child handle, arity); children are contiguous handles."""
        base = self._cbase[v]
        if base < 0:
            ar = self.arity(v)
            base = len(self._parent)
            self._cbase[v] = base
            lvl = self._level[v] + 1
            ph = self._phash[v]
            for i in range(1, ar + 1):
                self._parent.append(v)
                self._index.append(i)
                self._level.append(lvl)
                self._phash.append(mix(ph, i))
                self._arity.append(-1)
                self._cbase.append(-1)
            return base, ar
        return base, self._arity[v]

    def children(self, v: int) -> list[int]:
        base, ar = self.children_range(v)
        return list(range(base, base + ar))

    def child(self, v: int, i: int) -> int:
        """The i-th child (1-based, matching path indices)."""
        base, ar = self.children_range(v)
        if not 1 <= i <= ar:
            raise TreeError(f"vertex {v} has arity {ar}, no child {i}")
        return base + i - 1

    # -- path addressing ---------------------------------------------------

    def vertex(self, path: tuple[int, ...]) -> int:
        """Handle of the vertex addressed by 1-based child indices from the root."""
        v = ROOT
        for i in path:
            v = self.child(v, i)
        return v

    def path(self, v: int) -> tuple[int, ...]:
        if v == ROOT_PARENT:
            raise TreeError("the root parent has no path from the root")
        out = []
        while v != ROOT:
            out.append(self._index[v])
            v = self._parent[v]
        return tuple(reversed(out))

    def path_str(self, v: int) -> str:
        if v == ROOT_PARENT:
            return "-1"
        if v == ROOT:
            return "r"
        return "r/" + "/".join(str(i) for i in self.path(v))

    def is_ancestor(self, u: int, v: int) -> bool:
        """True iff u lies on the path from the root parent to v (u <= v)."""
        while v != -1 and self._level[v] > self._level[u]:
            v = self._parent[v]
        return v == u

    def size(self) -> int:
        """Number of materialised vertices (diagnostic)."""
        return len(self._parent)
