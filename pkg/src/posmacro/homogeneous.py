"""Pure-investor staking economy.

Investors split wealth between staking and an uncorrelated outside asset
using the log-optimal (Kelly) fraction.  The staking return depends on the
total stake ``S`` through issuance ``c / sqrt(S)`` and fees ``mu_F / S``, so
the market clears where ``S = W * w(S)``.  With ``x = sqrt(S)`` that is the
quartic

    sigma_r^2 x^4 + W (mu_r - sigma_r^2) x^2 - W c x + (sigma_F^2 - W mu_F) = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, EquilibriumError
from .poly import DEFAULT_MAX_ITER, PolynomialCoeffs, unique_positive_root

DEFAULT_TOL = 1e-10
DEFAULT_EPS_CRITICAL = 1e-12
DEFAULT_FD_STEP = 1e-7


@dataclass(frozen=True)
class MarketParams:
    """Exogenous environment of the staking economy.

    Returns are per period and dimensionless; ``c`` has units token^(1/2) per
    period so that ``c / sqrt(S)`` is a rate.  Fee moments are in tokens.
    Staking and outside returns are uncorrelated.
    """

    mu_r: float
    sigma_r_sq: float
    c: float
    mu_F: float = 0.0
    sigma_F_sq: float = 0.0

    rho = 0.0

    def __post_init__(self):
        for name in ("mu_r", "sigma_r_sq", "c", "mu_F", "sigma_F_sq"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.sigma_r_sq <= 0:
            raise DomainError(f"sigma_r_sq must be > 0, got {self.sigma_r_sq}")
        if self.c <= 0:
            raise DomainError(f"c must be > 0, got {self.c}")
        if self.mu_F < 0:
            raise DomainError(f"mu_F must be >= 0, got {self.mu_F}")
        if self.sigma_F_sq < 0:
            raise DomainError(f"sigma_F_sq must be >= 0, got {self.sigma_F_sq}")

    @property
    def delta(self) -> float:
        """Risk-adjusted opportunity cost ``mu_r - sigma_r^2``."""
        return self.mu_r - self.sigma_r_sq

    def with_delta(self, delta: float) -> "MarketParams":
        """Same environment with ``mu_r`` shifted so that ``mu_r - sigma_r^2 = delta``."""
        return MarketParams(
            mu_r=self.sigma_r_sq + delta,
            sigma_r_sq=self.sigma_r_sq,
            c=self.c,
            mu_F=self.mu_F,
            sigma_F_sq=self.sigma_F_sq,
        )


class RegimeKind(enum.Enum):
    VARIANCE_DOMINATED = "variance-dominated"
    CRITICAL = "critical"
    YIELD_DOMINATED = "yield-dominated"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    delta: float


@dataclass(frozen=True)
class HomogeneousEquilibrium:
    """Solved pure-investor market.

    ``boundary`` marks the corner where investors would want more than all of
    their wealth in staking; there ``S_star == W`` and ``w_star == 1``.
    ``residual`` is the clearance error ``|S* - W w(S*)|`` (with ``w`` capped
    at one on the boundary).
    """

    W: float
    S_star: float
    x_star: float
    w_star: float
    y_star: float
    residual: float
    boundary: bool


def kelly_fraction(mu_s: float, mu_r: float, sigma_s_sq: float, sigma_r_sq: float) -> float:
    """Log-optimal share of wealth in staking against an uncorrelated asset.

    The value is not clamped to [0, 1].
    """
    total_var = sigma_s_sq + sigma_r_sq
    if total_var <= 0:
        raise DomainError("total variance must be positive")
    return (mu_s - mu_r + sigma_r_sq) / total_var


def staking_moments(S: float, params: MarketParams) -> tuple[float, float]:
    """Mean and variance of the per-token staking return at total stake ``S``."""
    if not S > 0:
        raise DomainError(f"total stake must be positive, got {S}")
    mu_s = params.c / math.sqrt(S) + params.mu_F / S
    sigma_s_sq = params.sigma_F_sq / (S * S)
    return mu_s, sigma_s_sq


def staking_fraction(S: float, params: MarketParams) -> float:
    """Kelly fraction evaluated at the yield implied by total stake ``S``."""
    mu_s, sigma_s_sq = staking_moments(S, params)
    return kelly_fraction(mu_s, params.mu_r, sigma_s_sq, params.sigma_r_sq)


def build_quartic(params: MarketParams, W: float) -> PolynomialCoeffs:
    if not W > 0:
        raise DomainError(f"wealth must be positive, got {W}")
    return PolynomialCoeffs(
        (
            params.sigma_F_sq - W * params.mu_F,
            -W * params.c,
            W * params.delta,
            0.0,
            params.sigma_r_sq,
        )
    )


def _exact_clearance_residual(params: MarketParams, W: float, x: float) -> float:
    # S - W w(S) = p(x) / (sigma_r^2 S + sigma_F^2 / S), with p the quartic.
    # p(x) is evaluated in exact rational arithmetic: near the yield-dominated
    # cap the float expression S - W w(S) cancels catastrophically.
    X = Fraction(x)
    S = X * X
    poly = build_quartic(params, W).coeffs
    p = sum(Fraction(a) * X**k for k, a in enumerate(poly))
    denom = Fraction(params.sigma_r_sq) * S + Fraction(params.sigma_F_sq) / S
    return abs(float(p / denom))


def solve_equilibrium(
    params: MarketParams,
    W: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> HomogeneousEquilibrium:
    """Clear the pure-investor market for total wealth ``W``.

    The interior problem is solved first.  If its root implies a staking
    fraction above one, investors are at the no-shorting corner and the
    economy sits at ``S* = W``.

    When ``mu_F == sigma_F_sq == 0`` the quartic has the spurious root
    ``x = 0``; it is divided out and the cubic
    ``sigma_r^2 x^3 + W delta x - W c`` is solved instead.

    Raises:
        DescartesPreconditionError: the quartic does not have exactly one
            sign change (e.g. fee variance exceeding ``W * mu_F``).
        EquilibriumError: the interior root implies a negative staking
            fraction, which cannot happen for a correct root.
    """
    quartic = build_quartic(params, W)
    coeffs = quartic.coeffs
    if coeffs[0] == 0.0:
        coeffs = coeffs[1:]
    root = unique_positive_root(PolynomialCoeffs(coeffs), tol=min(tol, 1e-12), max_iter=max_iter)
    x = root.root
    S = x * x

    if S > W:
        S = W
        x = math.sqrt(W)
        mu_s, _ = staking_moments(S, params)
        w_unclamped = staking_fraction(S, params)
        return HomogeneousEquilibrium(
            W=W,
            S_star=S,
            x_star=x,
            w_star=1.0,
            y_star=mu_s,
            residual=abs(S - W * min(1.0, w_unclamped)),
            boundary=True,
        )

    if staking_fraction(S, params) < -tol:
        raise EquilibriumError(f"negative staking fraction at S*={S!r} (W={W!r})")
    mu_s, _ = staking_moments(S, params)
    return HomogeneousEquilibrium(
        W=W,
        S_star=S,
        x_star=x,
        w_star=S / W,
        y_star=mu_s,
        residual=_exact_clearance_residual(params, W, x),
        boundary=False,
    )


def classify_regime(params: MarketParams, eps: float = DEFAULT_EPS_CRITICAL) -> Regime:
    delta = params.delta
    if abs(delta) <= eps:
        kind = RegimeKind.CRITICAL
    elif delta < 0:
        kind = RegimeKind.VARIANCE_DOMINATED
    else:
        kind = RegimeKind.YIELD_DOMINATED
    return Regime(kind, delta)


def limiting_root(params: MarketParams) -> float:
    """Positive root of ``delta x^2 - c x - mu_F = 0`` (yield-dominated cap on sqrt(S))."""
    delta = params.delta
    if not delta > 0:
        raise DomainError("the wealth-independent cap exists only for delta > 0")
    c, mu_F = params.c, params.mu_F
    return (c + math.sqrt(c * c + 4.0 * delta * mu_F)) / (2.0 * delta)


def asymptotic_stake(
    params: MarketParams, W: float, eps: float = DEFAULT_EPS_CRITICAL
) -> tuple[float, Regime]:
    """Large-wealth approximation to ``S*`` in the regime selected by ``delta``.

    * variance-dominated: ``(1 - mu_r / sigma_r^2) W``
    * critical: ``(c W / sigma_r^2) ** (2/3)``
    * yield-dominated: ``x_inf ** 2``, independent of ``W``
    """
    if not W > 0:
        raise DomainError(f"wealth must be positive, got {W}")
    regime = classify_regime(params, eps)
    if regime.kind is RegimeKind.VARIANCE_DOMINATED:
        S = (1.0 - params.mu_r / params.sigma_r_sq) * W
    elif regime.kind is RegimeKind.CRITICAL:
        S = (params.c * W / params.sigma_r_sq) ** (2.0 / 3.0)
    else:
        S = limiting_root(params) ** 2
    return S, regime


def sensitivity_closed_form(params: MarketParams, W: float, S_star: float) -> float:
    """Implicit-function derivative ``dS*/d(delta)`` at an interior equilibrium.

    Differentiating the clearance quartic in ``S`` gives

        dS*/d(delta) = -W / (sigma_r^2 + W c / (2 S^1.5) + (W mu_F - sigma_F^2) / S^2)

    which is negative whenever ``W mu_F >= sigma_F^2``.
    """
    if not S_star > 0:
        raise DomainError(f"S_star must be positive, got {S_star}")
    if S_star >= W:
        raise DomainError("sensitivity is defined for interior equilibria only (w* < 1)")
    denom = (
        params.sigma_r_sq
        + W * params.c / (2.0 * S_star**1.5)
        + (W * params.mu_F - params.sigma_F_sq) / (S_star * S_star)
    )
    return -W / denom


def sensitivity_fd(
    params: MarketParams,
    W: float,
    h: float = DEFAULT_FD_STEP,
    tol: float = DEFAULT_TOL,
) -> float:
    """Central difference of ``S*`` in ``delta``, shifting ``mu_r`` by ``+/- h``."""
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    up = solve_equilibrium(params.with_delta(params.delta + h), W, tol)
    down = solve_equilibrium(params.with_delta(params.delta - h), W, tol)
    if up.boundary != down.boundary:
        raise DomainError("boundary status differs between delta - h and delta + h")
    return (up.S_star - down.S_star) / (2.0 * h)
