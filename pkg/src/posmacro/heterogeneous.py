"""Two-class economy: Kelly investors and liquidity-constrained consumers.

Fees are zero here, so the yield is ``y = c / sqrt(S)``.  Investors stake
``S_i = (W_i / sigma_r^2)(c / sqrt(S) - delta)``.  Consumers with utility
``W_c + gamma ln(L_c)`` hold liquidity until ``gamma / L_c = y``, which gives
the stake map ``S_c = W_c - (gamma / c) sqrt(S)``.  Adding the two and
substituting ``x = sqrt(S)`` yields the master cubic

    x^3 + (gamma/c) x^2 - (W_c - W_i delta / sigma_r^2) x - W_i c / sigma_r^2 = 0.

Two corners are handled explicitly.  When the consumer map goes negative,
consumers hold everything liquid and ``S`` solves the investor-only cubic
``sigma_r^2 x^3 + W_i delta x - W_i c = 0``.  When ``delta > 0`` and the
yield falls below ``delta``, investor demand is floored at zero and ``S``
solves the consumer-only quadratic ``x^2 + (gamma/c) x - W_c = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError
from .poly import DEFAULT_MAX_ITER, PolynomialCoeffs, unique_positive_root

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class HeterogeneousParams:
    """Wealths of the two classes plus the shared environment (no fees)."""

    W_i: float
    W_c: float
    gamma: float
    c: float
    mu_r: float
    sigma_r_sq: float

    def __post_init__(self):
        isfinite = math.isfinite
        if not (isfinite(self.W_i) and isfinite(self.W_c) and isfinite(self.gamma)
                and isfinite(self.c) and isfinite(self.mu_r) and isfinite(self.sigma_r_sq)):
            raise DomainError(f"parameters must be finite: {self!r}")
        if self.W_i < 0 or self.W_c < 0:
            raise DomainError("wealths must be non-negative")
        if not self.W_i + self.W_c > 0:
            raise DomainError("total wealth must be positive")
        if self.gamma <= 0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")
        if self.c <= 0:
            raise DomainError(f"c must be > 0, got {self.c}")
        if self.sigma_r_sq <= 0:
            raise DomainError(f"sigma_r_sq must be > 0, got {self.sigma_r_sq}")

    @property
    def delta(self) -> float:
        return self.mu_r - self.sigma_r_sq

    def with_wealth(self, W_i: float, W_c: float) -> "HeterogeneousParams":
        return HeterogeneousParams(W_i, W_c, self.gamma, self.c, self.mu_r, self.sigma_r_sq)


@dataclass(frozen=True)
class HeterogeneousEquilibrium:
    """Allocation of the two-class economy.

    ``S == S_i + S_c`` and ``L_c == W_c - S_c`` hold exactly in floating
    point: ``S`` and ``L_c`` are computed from the stakes, not the other way.

    ``corner`` means consumers stake nothing; ``investors_out`` means the
    investor no-short floor binds (only possible for ``delta > 0``).
    ``residual_mrs`` is ``None`` at the consumer corner, where the first-order
    condition does not hold with equality.
    """

    S: float
    S_i: float
    S_c: float
    L_c: float
    y: float
    corner: bool
    residual_mrs: Optional[float]
    residual_clearance: float
    investors_out: bool = False


def from_supply(
    M: float, alpha: float, gamma: float, c: float, mu_r: float, sigma_r_sq: float
) -> HeterogeneousParams:
    """Split a total supply ``M`` with investor share ``alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if not M > 0:
        raise DomainError(f"total supply must be positive, got {M}")
    return HeterogeneousParams(alpha * M, (1.0 - alpha) * M, gamma, c, mu_r, sigma_r_sq)


def consumer_stake_map(S: float, p: HeterogeneousParams) -> float:
    """Consumer stake at total stake ``S``; negative values signal the corner."""
    if not S > 0:
        raise DomainError(f"total stake must be positive, got {S}")
    return p.W_c - (p.gamma / p.c) * math.sqrt(S)


def investor_demand(S: float, p: HeterogeneousParams) -> float:
    if not S > 0:
        raise DomainError(f"total stake must be positive, got {S}")
    return max(0.0, (p.W_i / p.sigma_r_sq) * (p.c / math.sqrt(S) - p.delta))


def build_master_cubic(p: HeterogeneousParams) -> PolynomialCoeffs:
    if not p.W_i > 0:
        raise DomainError("the master cubic needs W_i > 0")
    s2 = p.sigma_r_sq
    return PolynomialCoeffs(
        (-p.W_i * p.c / s2, -(p.W_c - p.W_i * p.delta / s2), p.gamma / p.c, 1.0)
    )


def build_investor_cubic(p: HeterogeneousParams) -> PolynomialCoeffs:
    """``sigma_r^2 x^3 + W_i delta x - W_i c``: clearance with consumers fully liquid."""
    if not p.W_i > 0:
        raise DomainError("the investor-only cubic needs W_i > 0")
    return PolynomialCoeffs((-p.W_i * p.c, p.W_i * p.delta, 0.0, p.sigma_r_sq))


def _consumer_only_root(p: HeterogeneousParams) -> float:
    # positive root of x^2 + g x - W_c, written to avoid cancellation
    g = p.gamma / p.c
    return 2.0 * p.W_c / (g + math.sqrt(g * g + 4.0 * p.W_c))


def solve_heterogeneous(
    p: HeterogeneousParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    guess: Optional[float] = None,
) -> HeterogeneousEquilibrium:
    """Equilibrium of the two-class economy.

    Which branch applies is read off the sign of the master cubic at two
    landmarks, since the cubic is negative below its positive root and
    positive above it.  At ``x0 = c W_c / gamma`` the consumer stake is zero
    and the cubic equals the investor-only cubic divided by ``sigma_r^2``; if
    that is negative the interior consumer stake would be negative, so the
    corner binds.  For ``delta > 0``, at ``x = c / delta`` investor demand is
    zero and the cubic reduces to ``x`` times the consumer-only quadratic; if
    that is negative the interior investor stake would be negative.
    Otherwise the interior root of the master cubic is used.

    ``guess`` is an optional starting value for ``sqrt(S)``, such as the
    previous period's, handed to the root finder.
    """
    g = p.gamma / p.c
    s2 = p.sigma_r_sq
    delta = p.delta
    root_tol = min(tol, 1e-12)

    if p.W_i == 0.0:
        return _investors_out(p)

    x0 = p.W_c / g
    if p.W_c == 0.0 or s2 * x0 * x0 * x0 + p.W_i * (delta * x0 - p.c) < 0.0:
        x = unique_positive_root(build_investor_cubic(p), root_tol, max_iter, guess).root
        S_i = x * x
        S = S_i + 0.0
        y = p.c / math.sqrt(S)
        return HeterogeneousEquilibrium(
            S=S,
            S_i=S_i,
            S_c=0.0,
            L_c=p.W_c,
            y=y,
            corner=True,
            residual_mrs=None,
            residual_clearance=abs(S_i - investor_demand(S, p)),
        )

    if delta > 0:
        xd = p.c / delta
        if xd * xd + g * xd - p.W_c < 0.0:
            return _investors_out(p)

    x = unique_positive_root(build_master_cubic(p), root_tol, max_iter, guess).root
    # The smaller stake comes from its own map at the root and the larger one
    # is x^2 minus it; subtracting the other way would lose the smaller one
    # to cancellation.
    S_c = p.W_c - g * x
    S_i = max(0.0, (p.W_i / s2) * (p.c / x - delta))
    if S_i >= S_c:
        S_i = x * x - S_c
    else:
        S_c = x * x - S_i
    L_c = p.W_c - S_c
    S = S_i + S_c
    y = p.c / math.sqrt(S)
    return HeterogeneousEquilibrium(
        S=S,
        S_i=S_i,
        S_c=S_c,
        L_c=L_c,
        y=y,
        corner=False,
        residual_mrs=abs(p.gamma / L_c - y),
        residual_clearance=abs(S_i - investor_demand(S, p)),
    )


def _investors_out(p: HeterogeneousParams) -> HeterogeneousEquilibrium:
    x = _consumer_only_root(p)
    S_c = p.W_c - (p.gamma / p.c) * x
    L_c = p.W_c - S_c
    S = 0.0 + S_c
    y = p.c / math.sqrt(S)
    return HeterogeneousEquilibrium(
        S=S,
        S_i=0.0,
        S_c=S_c,
        L_c=L_c,
        y=y,
        corner=False,
        residual_mrs=abs(p.gamma / L_c - y),
        residual_clearance=investor_demand(S, p),
        investors_out=True,
    )


def asymptotic_heterogeneous(p: HeterogeneousParams) -> tuple[float, float, float]:
    """Large-``W_i`` limits ``(S, S_i, S_c)`` in the variance-dominated regime.

    Total and investor stake approach the variance-hedging amount
    ``-delta W_i / sigma_r^2``; the consumer value may be negative, which
    predicts the corner.
    """
    if not p.delta < 0:
        raise DomainError("asymptotic limits are defined only for delta < 0")
    S = -p.delta / p.sigma_r_sq * p.W_i
    S_c = p.W_c - (p.gamma / p.c) * math.sqrt(S)
    return S, S, S_c
