"""Equilibria, scaling regimes and wealth dynamics of a proof-of-stake staking economy."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    DegeneratePolynomialError,
    DescartesPreconditionError,
    DomainError,
    EquilibriumError,
    NoRootError,
    PosMacroError,
    SolverError,
)
from .poly import PolynomialCoeffs, RootResult, count_sign_changes, evaluate, unique_positive_root
from .homogeneous import (
    HomogeneousEquilibrium,
    MarketParams,
    Regime,
    RegimeKind,
    asymptotic_stake,
    build_quartic,
    classify_regime,
    kelly_fraction,
    limiting_root,
    sensitivity_closed_form,
    sensitivity_fd,
    solve_equilibrium,
    staking_fraction,
    staking_moments,
)
from .heterogeneous import (
    HeterogeneousEquilibrium,
    HeterogeneousParams,
    asymptotic_heterogeneous,
    build_master_cubic,
    consumer_stake_map,
    from_supply,
    investor_demand,
    solve_heterogeneous,
)
from .rng import ReturnModel, make_rng, split_seed
from .dynamics import (
    EconomyState,
    SimConfig,
    Trajectory,
    consumer_wealth_bound,
    detect_extinction,
    estimate_log_growth,
    simulate,
    step,
)
from .analysis import (
    EnsembleSummary,
    SweepResult,
    delta_sweep,
    fit_scaling_exponent,
    monte_carlo_ensemble,
    wealth_sweep,
)
