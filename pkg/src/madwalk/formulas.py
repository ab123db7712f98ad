"""Closed-form quantities: hitting products, phase criterion, line speeds,
coupling probabilities and the monotonicity threshold function.

Products are accumulated in log space once they get long, since the
level-hitting probabilities decay geometrically in the recurrent regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .walk import ParamError, WalkParams

_LOG_SPACE_CUTOFF = 30
_CRITICAL_TOL = 1e-12
_U1_ONE_TOL = 1e-12


class FormulaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# walks on the half line whose step law changes at the running maximum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MadPathParams:
    """Up-step probabilities of the path walk: ``a`` off the maximum, ``b`` at it."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a < 1.0 and 0.0 < self.b < 1.0):
            raise FormulaError(f"path walk needs a, b in (0, 1), got {self}")

    @property
    def zeta(self) -> float:
        return (1.0 - self.a) / self.a

    @classmethod
    def from_walk(cls, params: WalkParams) -> "MadPathParams":
        """Path projection of a tree walk: a = u1/(1+u1), b = u0/(1+u0)."""
        return cls(a=params.u1 / (1.0 + params.u1), b=params.u0 / (1.0 + params.u0))


def _phi_term(params: MadPathParams, j: int) -> float:
    """Probability of reaching j+1 before -1, starting from a fresh maximum at j."""
    b = params.b
    if abs(params.a - 0.5) < 1e-12:
        return b * (j + 1) / (b * j + 1.0)
    zeta = params.zeta
    c = 1.0 - (1.0 - b) / zeta
    if zeta <= 1.0:
        zj = zeta ** (j + 1)
        return (b - b * zj) / (b - zj * c)
    # zeta > 1: divide through by zeta**(j+1) to avoid overflow
    zj = zeta ** (-(j + 1))
    return b * (1.0 - zj) / (c - b * zj)


def phi(params: MadPathParams, ell: int, n: int) -> float:
    """Probability that the path walk started at level ell hits n before -1."""
    if ell < 0:
        raise FormulaError(f"need ell >= 0, got {ell}")
    if n <= ell:
        raise FormulaError(f"need n > ell, got n={n}, ell={ell}")
    if n - ell > _LOG_SPACE_CUTOFF:
        return math.exp(math.fsum(math.log(_phi_term(params, j)) for j in range(ell, n)))
    out = 1.0
    for j in range(ell, n):
        out *= _phi_term(params, j)
    return out


def _psi_term(u0: float, u1: float, j: int) -> float:
    if abs(u1 - 1.0) < _U1_ONE_TOL:
        return u0 * (j + 1) / (u0 * (j + 1) + 1.0)
    # u0(u1^m - 1) / (u0 u1^m + u1 - u0 - 1) with m = j+1, via expm1 for
    # stability near u1 = 1 and at large m
    m = j + 1
    log_u1 = math.log(u1)
    if u1 > 1.0:
        # denominator rewritten as u0 + E1/Em, with E1/Em free of overflow
        e1_over_em = math.expm1(log_u1) * math.exp(-m * log_u1) / (-math.expm1(-m * log_u1))
        return u0 / (u0 + e1_over_em)
    em = math.expm1(m * log_u1)
    return u0 * em / (u0 * em + math.expm1(log_u1))


def psi(params: WalkParams, n: int) -> float:
    """Probability that the path walk from the root parent reaches level n
    before returning, under the canonical configuration."""
    if n < 1:
        raise FormulaError(f"need n >= 1, got {n}")
    u0, u1 = params.u0, params.u1
    if n > _LOG_SPACE_CUTOFF:
        return math.exp(math.fsum(math.log(_psi_term(u0, u1, j)) for j in range(n)))
    out = 1.0
    for j in range(n):
        out *= _psi_term(u0, u1, j)
    return out


# ---------------------------------------------------------------------------
# phase criterion
# ---------------------------------------------------------------------------

TRANSIENT = "transient"
RECURRENT = "recurrent"
CRITICAL = "critical"


@dataclass(frozen=True)
class PhaseVerdict:
    verdict: str
    margin: float

    def __str__(self) -> str:
        return f"{self.verdict} (margin {self.margin:+.6g})"


def phase(params: WalkParams, d: float) -> PhaseVerdict:
    """Classify by the sign of d*u0 - (1 - u1 + u0) at mean offspring d > 1."""
    if d <= 1:
        raise FormulaError(f"phase criterion needs mean offspring d > 1, got {d}")
    margin = d * params.u0 - (1.0 - params.u1 + params.u0)
    if abs(margin) <= _CRITICAL_TOL:
        return PhaseVerdict(CRITICAL, margin)
    return PhaseVerdict(TRANSIENT if margin > 0 else RECURRENT, margin)


def smallest_supercritical_level(params: WalkParams, d: float, max_n: int = 400) -> int:
    """Smallest spacing n with d**n * psi(n) > 1 (used to size the level
    coloring of the embedded branching process).  Only exists in the
    transient phase."""
    for n in range(1, max_n + 1):
        if d**n * psi(params, n) > 1.0:
            return n
    raise FormulaError(f"no supercritical spacing up to {max_n}; parameters look subcritical")


# ---------------------------------------------------------------------------
# closed-form speeds on the single path (one child per vertex)
# ---------------------------------------------------------------------------


def speed_z(mode: str, alpha: float, beta: float) -> float:
    """Asymptotic speed of the reinforced walk on the half line."""
    if alpha < 1:
        raise FormulaError(f"line speed formulas need alpha >= 1, got {alpha}")
    if beta < 0:
        raise FormulaError(f"line speed formulas need beta >= 0, got {beta}")
    if mode == "multiplicative":
        return (alpha - 1.0) / (alpha + 1.0 + 2.0 * beta)
    if mode == "additive":
        return alpha * (alpha - 1.0) / (alpha * (alpha + 1.0 + beta) + 2.0 * beta * (1.0 + beta))
    raise FormulaError(f"mode must be 'multiplicative' or 'additive', got {mode!r}")


# ---------------------------------------------------------------------------
# coupled-walk step probabilities
# ---------------------------------------------------------------------------


def _pqbar(alpha: float, d: int, beta: float, k: int) -> tuple[float, float, float]:
    denom = alpha * (d + k * beta) + 1.0 + beta
    p = alpha / denom if k < d else 0.0
    pbar = alpha * (1.0 + beta) / denom if k > 0 else 0.0
    q = (1.0 + beta) / denom
    return p, pbar, q


@dataclass(frozen=True)
class CouplingProbs:
    """Per-k step probabilities for both reinforcement strengths plus their gaps.

    Index k counts previously visited children of the current vertex.
    ``p``/``pbar``/``q`` are the probabilities of stepping to one fixed
    unvisited child, one fixed visited child, and the parent.
    """

    alpha: float
    d: int
    beta: float
    eps: float
    p: tuple          # weaker reinforcement, indexed by k = 0..d
    pbar: tuple
    q: tuple
    pe: tuple         # stronger reinforcement
    pbare: tuple
    qe: tuple
    dp: tuple         # p[k] - pe[k]
    dq: tuple         # qe[k] - q[k]
    dbar: tuple       # k * (pbare[k] - pbar[k])
    eta: float
    p_inf: float

    @property
    def r(self) -> float:
        return (1.0 + self.beta + self.eps) / (self.alpha * self.d)

    def forward_prob(self) -> float:
        """Per-step probability that the driving line walk moves up."""
        return 1.0 - self.qe[0]


def coupling_probs(alpha: float, d: int, beta: float, eps: float) -> CouplingProbs:
    if alpha <= 0 or d < 1:
        raise FormulaError(f"need alpha > 0 and integer d >= 1, got alpha={alpha}, d={d}")
    if beta < 0 or eps < 0:
        raise FormulaError(f"need beta >= 0 and eps >= 0, got beta={beta}, eps={eps}")
    p_inf = (alpha * d - (1.0 + beta + eps)) / (alpha * d)
    if p_inf <= 0:
        raise FormulaError(
            f"regeneration structure needs alpha*d > 1 + beta + eps "
            f"(alpha*d={alpha * d}, 1+beta+eps={1 + beta + eps})")
    lo = [_pqbar(alpha, d, beta, k) for k in range(d + 1)]
    hi = [_pqbar(alpha, d, beta + eps, k) for k in range(d + 1)]
    return CouplingProbs(
        alpha=alpha, d=d, beta=beta, eps=eps,
        p=tuple(t[0] for t in lo), pbar=tuple(t[1] for t in lo), q=tuple(t[2] for t in lo),
        pe=tuple(t[0] for t in hi), pbare=tuple(t[1] for t in hi), qe=tuple(t[2] for t in hi),
        dp=tuple(lo[k][0] - hi[k][0] for k in range(d + 1)),
        dq=tuple(hi[k][2] - lo[k][2] for k in range(d + 1)),
        dbar=tuple(k * (hi[k][1] - lo[k][1]) for k in range(d + 1)),
        eta=1.0 + beta + alpha * d,
        p_inf=p_inf,
    )


# ---------------------------------------------------------------------------
# threshold function controlling when the discrepancy argument closes
# ---------------------------------------------------------------------------


def f_threshold(r: float, variant: str = "base") -> float:
    if not 0.0 < r < 4.0 / 23.0:
        raise FormulaError(f"threshold function defined on (0, 4/23), got {r}")
    common = (1.0 + r) ** 6 / (2.0 * (1.0 - r) * (1.0 - 23.0 * r / 4.0) ** 3)
    if variant == "base":
        return r * 3**5 * common
    if variant == "improved":
        return r**2 * 3**7 / 8.0 * common
    raise FormulaError(f"variant must be 'base' or 'improved', got {variant!r}")
