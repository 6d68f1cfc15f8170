"""Popularity-driven posting on social media: equilibria, thresholds and welfare."""

from .core import (
    PVM,
    RA,
    BudgetExceeded,
    ConsistencyFailure,
    EmptyAudience,
    ExplicitNetwork,
    NoDeviationRegion,
    OddIndifferentGroup,
    OpinionSpace,
    PopsimError,
    Regime,
    Representative,
    Society,
    ThreeOpinionScenario,
    UnknownOpinion,
    UnsupportedProfile,
    UtilityWeights,
    ValidationError,
    WrongRegime,
    build_scenario,
    regime_of,
)
from .equilibrium import best_response, equilibrium_posts, scenario_equilibrium
from .analytics import classify_regime, threshold_set
from .welfare import aggregate_welfare, feed_utilities, sweep
from .algorithms import AlgorithmConfig, AlgorithmKind, compare_algorithms, equilibrium_under, likes_under
from .oracle import ExplicitInstance, cross_validate, enumerate_equilibria, full_utility

__version__ = "0.1.0"
