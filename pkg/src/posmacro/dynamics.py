"""Discrete-time wealth dynamics of the two-class economy.

Each period the market first relaxes to the static equilibrium for the
current wealths, then wealth is updated::

    W_c[t+1] = W_c[t] + S_c[t] y[t]
    W_i[t+1] = S_i[t] (1 + y[t]) + (W_i[t] - S_i[t]) (1 + R[t])

Consumers only earn staking yield.  Investors earn the yield on their stake
and the outside return on the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, SolverError
from .heterogeneous import DEFAULT_TOL, HeterogeneousParams, solve_heterogeneous
from .rng import RNG_NAME, ReturnModel, draw_return, make_rng

# Lower truncation for normal draws so that 1 + R stays positive.
MIN_RETURN = -0.999
GROWTH_WINDOW = 0.25
YIELD_WINDOW = 0.5


class StepError(SolverError):
    """Equilibrium failure inside a simulation, tagged with the period."""

    def __init__(self, message, period):
        super().__init__(message)
        self.period = period


@dataclass(frozen=True)
class SimConfig:
    params: HeterogeneousParams
    horizon: int
    seed: int = 0
    return_model: Optional[ReturnModel] = None
    record_every: int = 1
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {self.horizon}")
        if self.record_every < 1:
            raise DomainError(f"record_every must be >= 1, got {self.record_every}")
        if self.return_model is None:
            p = self.params
            object.__setattr__(
                self, "return_model", ReturnModel.normal(p.mu_r, math.sqrt(p.sigma_r_sq))
            )


@dataclass(frozen=True)
class EconomyState:
    """Wealths and equilibrium allocation at the start of period ``t``.

    ``R_t`` is the outside return realized over period ``t`` (NaN for the
    last state of a run, whose return was never drawn).
    """

    t: int
    W_i: float
    W_c: float
    S: float
    S_i: float
    S_c: float
    L_c: float
    y: float
    R_t: float
    corner: bool

    @property
    def alpha(self) -> float:
        """Investor share of wealth."""
        # 1 / (1 + W_c / W_i) is monotone in both wealths under rounding;
        # W_i / (W_i + W_c) jitters by an ulp once W_c is negligible.
        if self.W_i == 0.0:
            return 0.0
        return 1.0 / (1.0 + self.W_c / self.W_i)

    def with_return(self, R_t: float) -> "EconomyState":
        return EconomyState(self.t, self.W_i, self.W_c, self.S, self.S_i, self.S_c,
                            self.L_c, self.y, R_t, self.corner)


@dataclass
class Trajectory:
    """A simulated path.

    ``states`` holds the recorded (possibly thinned) states.  The ``*_path``
    arrays hold every period ``0..horizon`` and are what the diagnostics are
    computed from.
    """

    states: list[EconomyState]
    W_i_path: np.ndarray
    W_c_path: np.ndarray
    S_c_path: np.ndarray
    y_path: np.ndarray
    extinction_time: Optional[int]
    log_growth_estimate: float
    yield_log_slope: float
    consumer_bound: Optional[float]
    truncations: int = 0
    reentered: bool = False
    rng_name: str = RNG_NAME
    meta: dict = field(default_factory=dict)

    @property
    def alpha_path(self) -> np.ndarray:
        ratio = np.divide(self.W_c_path, self.W_i_path,
                          out=np.full_like(self.W_c_path, np.inf), where=self.W_i_path > 0)
        return 1.0 / (1.0 + ratio)


def equilibrium_state(t: int, env: HeterogeneousParams, W_i: float, W_c: float,
                      tol: float = DEFAULT_TOL, guess: Optional[float] = None) -> EconomyState:
    """State at period ``t`` after the market relaxes for wealths ``(W_i, W_c)``."""
    try:
        eq = solve_heterogeneous(env.with_wealth(W_i, W_c), tol, guess=guess)
    except SolverError as exc:
        raise StepError(f"period {t}: {exc}", t) from exc
    return EconomyState(t, W_i, W_c, eq.S, eq.S_i, eq.S_c, eq.L_c, eq.y, math.nan, eq.corner)


def step(state: EconomyState, env: HeterogeneousParams, R_t: float,
         tol: float = DEFAULT_TOL) -> EconomyState:
    """Advance one period with outside return ``R_t``; ``env`` wealths are ignored."""
    if not 1.0 + R_t > 0.0:
        raise DomainError(f"return {R_t} would wipe out investor wealth")
    y = state.y
    W_c = state.W_c + state.S_c * y
    W_i = state.S_i * (1.0 + y) + (state.W_i - state.S_i) * (1.0 + R_t)
    # last period's sqrt(S) warm-starts the root finder
    return equilibrium_state(state.t + 1, env, W_i, W_c, tol, math.sqrt(state.S))


def log_slope(values: Sequence[float], window: float) -> float:
    """Least-squares slope of ``ln(values)`` against index over the trailing window."""
    v = np.asarray(values, dtype=float)
    n = int(math.floor(len(v) * window))
    if n < 10:
        raise DomainError(f"window holds {n} points, need at least 10")
    tail = v[-n:]
    t = np.arange(len(v) - n, len(v), dtype=float)
    return float(np.polyfit(t, np.log(tail), 1)[0])


def estimate_log_growth(traj: Union[Trajectory, Sequence[float]],
                        window: float = GROWTH_WINDOW) -> float:
    """Fitted exponential growth rate of investor wealth over the trailing window."""
    values = traj.W_i_path if isinstance(traj, Trajectory) else traj
    return log_slope(values, window)


def detect_extinction(traj: Union[Trajectory, Sequence[EconomyState]]) -> Optional[int]:
    """First recorded period with zero consumer stake, or ``None``."""
    states = traj.states if isinstance(traj, Trajectory) else traj
    for s in states:
        if s.S_c == 0.0:
            return s.t
    return None


def consumer_wealth_bound(config: SimConfig) -> float:
    """Upper bound on consumer wealth from the decaying-yield envelope.

    ``W_max = W_c0 * prod_{k>=1} (1 + C0 exp(-mu_r^2 k / (4 sigma_r^2)))`` with
    ``C0 = c sqrt(sigma_r^2 / (-delta W_i0))``, truncated once a factor is
    below ``1 + 1e-15``.
    """
    p = config.params
    if not p.delta < 0:
        raise DomainError("the consumer wealth bound needs delta < 0")
    if not p.W_i > 0:
        raise DomainError("the consumer wealth bound needs W_i0 > 0")
    if not p.mu_r > 0:
        raise DomainError("the consumer wealth bound needs mu_r > 0")
    C0 = p.c * math.sqrt(p.sigma_r_sq / (-p.delta * p.W_i))
    rate = p.mu_r**2 / (4.0 * p.sigma_r_sq)
    n_terms = max(0, math.ceil(math.log(C0 / 1e-15) / rate))
    k = np.arange(1, n_terms + 1, dtype=float)
    return p.W_c * math.exp(math.fsum(np.log1p(C0 * np.exp(-rate * k))))


def simulate(config: SimConfig) -> Trajectory:
    """Run the recursion for ``config.horizon`` periods from the t=0 equilibrium."""
    env = config.params
    model = config.return_model
    rng = make_rng(config.seed)
    horizon = config.horizon
    every = config.record_every

    W_i = np.empty(horizon + 1)
    W_c = np.empty(horizon + 1)
    S_c = np.empty(horizon + 1)
    y = np.empty(horizon + 1)
    states = []
    truncations = 0
    extinction = None

    state = equilibrium_state(0, env, env.W_i, env.W_c, config.tol)
    for t in range(horizon + 1):
        W_i[t], W_c[t], S_c[t], y[t] = state.W_i, state.W_c, state.S_c, state.y
        first_extinct = extinction is None and state.S_c == 0.0
        if first_extinct:
            extinction = t
        if t == horizon:
            states.append(state)
            break
        R = draw_return(rng, model)
        if R < MIN_RETURN:
            R = MIN_RETURN
            truncations += 1
        if t % every == 0 or first_extinct:
            states.append(state.with_return(R))
        state = step(state, env, R, config.tol)

    reentered = extinction is not None and bool(np.any(S_c[extinction:] > 0.0))
    try:
        bound = consumer_wealth_bound(config)
    except DomainError:
        bound = None
    n_tail = int(math.floor((horizon + 1) * GROWTH_WINDOW))
    growth = log_slope(W_i, GROWTH_WINDOW) if n_tail >= 10 else math.nan
    n_yield = int(math.floor((horizon + 1) * YIELD_WINDOW))
    yield_slope = log_slope(y, YIELD_WINDOW) if n_yield >= 10 else math.nan
    return Trajectory(
        states=states,
        W_i_path=W_i,
        W_c_path=W_c,
        S_c_path=S_c,
        y_path=y,
        extinction_time=extinction,
        log_growth_estimate=growth,
        yield_log_slope=yield_slope,
        consumer_bound=bound,
        truncations=truncations,
        reentered=reentered,
    )
