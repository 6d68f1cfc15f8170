"""Domain types shared by every part of the model.

Opinions are labels drawn from a finite realized set inside ``[-b, +b]``;
they are compared by exact equality after canonicalisation against that set.
Group sizes and audience counts are kept as plain numbers and may be
fractional where the closed-form algebra needs it (``a * G`` posts).
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence


class PopsimError(Exception):
    """Base class for all errors raised by the package."""


@dataclass(frozen=True)
class Issue:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ValidationError(PopsimError, ValueError):
    """One or more invariants are violated; ``issues`` lists all of them."""

    def __init__(self, issues: Iterable[Issue]):
        self.issues = tuple(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(i.code for i in self.issues)


class UnknownOpinion(PopsimError, ValueError):
    pass


class EmptyAudience(PopsimError, ValueError):
    pass


class OddIndifferentGroup(PopsimError, ValueError):
    pass


class WrongRegime(PopsimError, ValueError):
    pass


class NoDeviationRegion(WrongRegime):
    pass


class UnsupportedProfile(PopsimError, ValueError):
    pass


class ConsistencyFailure(PopsimError, AssertionError):
    pass


class BudgetExceeded(PopsimError, RuntimeError):
    pass


# Issue codes reported by validation.
ODD_POPULATION = "OddPopulation"
ODD_NEUTRAL_GROUP = "OddNeutralGroup"
DENSITY_OUT_OF_RANGE = "DensityOutOfRange"
NON_POSITIVE_WEIGHT = "NonPositiveWeight"
NON_POSITIVE_INTENSITY = "NonPositiveIntensity"
NEUTRAL_GROUP_OUT_OF_RANGE = "NeutralGroupOutOfRange"
INVALID_OPINION_SPACE = "InvalidOpinionSpace"
INVALID_SOCIETY = "InvalidSociety"
INVALID_EXPOSURE = "InvalidExposure"


def _is_positive_finite(x) -> bool:
    try:
        return math.isfinite(x) and x > 0
    except TypeError:
        return False


@dataclass(frozen=True)
class OpinionSpace:
    intensity_b: float
    realized: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "realized", tuple(self.realized))
        issues = []
        b_ok = _is_positive_finite(self.intensity_b)
        if not b_ok:
            issues.append(Issue(NON_POSITIVE_INTENSITY, f"intensity_b={self.intensity_b!r} must be > 0"))
        if not self.realized:
            issues.append(Issue(INVALID_OPINION_SPACE, "at least one realized opinion is required"))
        for v in self.realized:
            if not math.isfinite(v) or (b_ok and abs(v) > self.intensity_b):
                issues.append(Issue(INVALID_OPINION_SPACE, f"opinion {v!r} outside [-b, +b]"))
        if any(x >= y for x, y in zip(self.realized, self.realized[1:])):
            issues.append(Issue(INVALID_OPINION_SPACE, "realized opinions must be strictly increasing"))
        if issues:
            raise ValidationError(issues)

    def __contains__(self, value) -> bool:
        return value in self.realized

    def canonical(self, value) -> float:
        """Return the realized opinion equal to ``value`` or raise UnknownOpinion."""
        for r in self.realized:
            if r == value:
                return r
        raise UnknownOpinion(f"{value!r} is not a realized opinion {self.realized}")

    def index(self, value) -> int:
        return self.realized.index(self.canonical(value))

    def off_menu_probe(self) -> float:
        """A post value outside the realized set (midpoint of the two nearest opinions)."""
        r = self.realized
        if len(r) >= 2:
            return (r[0] + r[1]) / 2
        # single realized opinion: step halfway towards the farther boundary
        v = r[0]
        edge = -self.intensity_b if v > 0 else self.intensity_b
        return (v + edge) / 2


@dataclass(frozen=True)
class Society:
    n: int
    group_sizes: Mapping[float, int]
    per_agent_opinions: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "group_sizes", dict(sorted(self.group_sizes.items())))
        if self.per_agent_opinions is not None:
            object.__setattr__(self, "per_agent_opinions", tuple(self.per_agent_opinions))
        issues = []
        if not isinstance(self.n, int) or self.n <= 0:
            issues.append(Issue(INVALID_SOCIETY, f"n={self.n!r} must be a positive integer"))
        if any((not isinstance(g, int)) or g <= 0 for g in self.group_sizes.values()):
            issues.append(Issue(INVALID_SOCIETY, "group sizes must be positive integers"))
        elif sum(self.group_sizes.values()) != self.n:
            issues.append(Issue(INVALID_SOCIETY, f"group sizes sum to {sum(self.group_sizes.values())}, not n={self.n}"))
        if self.per_agent_opinions is not None:
            if len(self.per_agent_opinions) != self.n:
                issues.append(Issue(INVALID_SOCIETY, "per_agent_opinions must have length n"))
            elif dict(Counter(self.per_agent_opinions)) != dict(self.group_sizes):
                issues.append(Issue(INVALID_SOCIETY, "per_agent_opinions disagree with group_sizes"))
        if issues:
            raise ValidationError(issues)

    @classmethod
    def from_opinions(cls, opinions: Sequence[float]) -> "Society":
        opinions = tuple(opinions)
        return cls(len(opinions), dict(Counter(opinions)), opinions)

    def agent_opinions(self) -> tuple[float, ...]:
        """Per-agent opinions; without an explicit list agents are laid out in ascending blocks."""
        if self.per_agent_opinions is not None:
            return self.per_agent_opinions
        out: list[float] = []
        for v, g in self.group_sizes.items():
            out.extend([v] * g)
        return tuple(out)

    def size_of(self, opinion) -> int:
        return self.group_sizes.get(opinion, 0)

    def check_against(self, space: OpinionSpace) -> None:
        issues = []
        for v in self.group_sizes:
            if v not in space:
                issues.append(Issue(INVALID_SOCIETY, f"group opinion {v!r} is not in the opinion space"))
        if len(space.realized) >= self.n:
            issues.append(Issue(INVALID_SOCIETY, "number of realized opinions must be less than n"))
        if issues:
            raise ValidationError(issues)


@dataclass(frozen=True)
class UtilityWeights:
    w_pop: float
    w_align: float
    w_dist: float
    baseline: float = 0.0

    def __post_init__(self):
        issues = [
            Issue(NON_POSITIVE_WEIGHT, f"{name}={value!r} must lie in (0, inf)")
            for name, value in (("w_pop", self.w_pop), ("w_align", self.w_align), ("w_dist", self.w_dist))
            if not _is_positive_finite(value)
        ]
        if not isinstance(self.baseline, (int, float)) or not math.isfinite(self.baseline):
            issues.append(Issue(NON_POSITIVE_WEIGHT, f"baseline={self.baseline!r} must be finite"))
        if issues:
            raise ValidationError(issues)

    def misalignment_cost(self, intensity_b: float) -> float:
        """D = w_dist * |b|, the per-like, per-unit-distance exposure cost."""
        return self.w_dist * intensity_b


# -- exposure structures ---------------------------------------------------


@dataclass(frozen=True)
class Representative:
    density_a: float

    def __post_init__(self):
        if not (isinstance(self.density_a, (int, float)) and 0 < self.density_a < 1):
            raise ValidationError([Issue(DENSITY_OUT_OF_RANGE, f"density_a={self.density_a!r} must lie in (0, 1)")])


@dataclass(frozen=True)
class RA:
    cap_k: int

    def __post_init__(self):
        if not isinstance(self.cap_k, int) or self.cap_k < 1:
            raise ValidationError([Issue(INVALID_EXPOSURE, f"cap_k={self.cap_k!r} must be a positive integer")])


@dataclass(frozen=True)
class PVM:
    cap_k: int

    def __post_init__(self):
        if not isinstance(self.cap_k, int) or self.cap_k < 1:
            raise ValidationError([Issue(INVALID_EXPOSURE, f"cap_k={self.cap_k!r} must be a positive integer")])


@dataclass(frozen=True)
class ExplicitNetwork:
    """followers[i] lists the agents who see agent i's post."""

    followers: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "followers", tuple(tuple(f) for f in self.followers))
        n = len(self.followers)
        issues = []
        for i, fs in enumerate(self.followers):
            if i in fs:
                issues.append(Issue(INVALID_EXPOSURE, f"agent {i} follows itself"))
            if len(set(fs)) != len(fs):
                issues.append(Issue(INVALID_EXPOSURE, f"agent {i} has duplicate followers"))
            if any(not (0 <= j < n) for j in fs):
                issues.append(Issue(INVALID_EXPOSURE, f"agent {i} has an out-of-range follower id"))
        if issues:
            raise ValidationError(issues)

    @property
    def n(self) -> int:
        return len(self.followers)

    def exposure_sets(self) -> tuple[frozenset[int], ...]:
        """N_i = {i} plus every j whose post i sees."""
        sees = [{i} for i in range(self.n)]
        for j, fs in enumerate(self.followers):
            for i in fs:
                sees[i].add(j)
        return tuple(frozenset(s) for s in sees)


ExposureModel = Representative | RA | PVM | ExplicitNetwork


def check_exposure(exposure: ExposureModel, n: int) -> None:
    if isinstance(exposure, (RA, PVM)) and exposure.cap_k > n:
        raise ValidationError([Issue(INVALID_EXPOSURE, f"cap_k={exposure.cap_k} exceeds n={n}")])
    if isinstance(exposure, ExplicitNetwork) and exposure.n != n:
        raise ValidationError([Issue(INVALID_EXPOSURE, f"network has {exposure.n} agents, society has {n}")])


# -- three-opinion scenario -------------------------------------------------


class Regime(enum.Enum):
    HIGH_POLARIZATION = "HighPolarization"
    KNIFE_N3 = "Knife_n3"
    LOW_POLARIZATION = "LowPolarization"


@dataclass(frozen=True)
class ThreeOpinionScenario:
    """Symmetric society on {-b, 0, +b} with G- = G+ = (n - G0) / 2."""

    n: int
    g0: int
    weights: UtilityWeights
    intensity_b: float
    density_a: float

    @property
    def g_side(self) -> float:
        return (self.n - self.g0) / 2

    @property
    def misalignment_cost(self) -> float:
        return self.weights.misalignment_cost(self.intensity_b)

    D = misalignment_cost

    def replace(self, **changes) -> "ThreeOpinionScenario":
        return replace(self, **changes)

    def with_misalignment_cost(self, d: float) -> "ThreeOpinionScenario":
        """Same scenario with w_dist rescaled so that w_dist * |b| == d."""
        return self.replace(weights=replace(self.weights, w_dist=d / self.intensity_b))

    def group_sizes(self) -> dict[float, int]:
        b = self.intensity_b
        side = (self.n - self.g0) // 2
        sizes = {-b: side, 0.0: self.g0, b: side}
        return {k: v for k, v in sizes.items() if v > 0}

    def space(self) -> OpinionSpace:
        return OpinionSpace(self.intensity_b, tuple(self.group_sizes()))

    def society(self) -> Society:
        return Society(self.n, self.group_sizes())

    def exposure(self) -> Representative:
        return Representative(self.density_a)


def scenario_issues(s: ThreeOpinionScenario) -> list[Issue]:
    issues = []
    if not isinstance(s.n, int) or s.n <= 0 or s.n % 2:
        issues.append(Issue(ODD_POPULATION, f"n={s.n!r} must be an even positive integer"))
    if not isinstance(s.g0, int) or s.g0 % 2:
        issues.append(Issue(ODD_NEUTRAL_GROUP, f"G0={s.g0!r} must be an even integer"))
    elif isinstance(s.n, int) and not (0 <= s.g0 <= s.n):
        issues.append(Issue(NEUTRAL_GROUP_OUT_OF_RANGE, f"G0={s.g0} must lie in [0, n]"))
    if not (isinstance(s.density_a, (int, float)) and 0 < s.density_a < 1):
        issues.append(Issue(DENSITY_OUT_OF_RANGE, f"a={s.density_a!r} must lie in (0, 1)"))
    if not _is_positive_finite(s.intensity_b):
        issues.append(Issue(NON_POSITIVE_INTENSITY, f"|b|={s.intensity_b!r} must be > 0"))
    w = s.weights
    if not isinstance(w, UtilityWeights):
        issues.append(Issue(NON_POSITIVE_WEIGHT, "weights must be a UtilityWeights instance"))
    else:
        for name in ("w_pop", "w_align", "w_dist"):
            if not _is_positive_finite(getattr(w, name)):
                issues.append(Issue(NON_POSITIVE_WEIGHT, f"{name} must lie in (0, inf)"))
    return issues


def validate_scenario(s: ThreeOpinionScenario) -> ThreeOpinionScenario:
    """Return ``s`` unchanged if it satisfies every invariant, else raise with all violations."""
    issues = scenario_issues(s)
    if issues:
        raise ValidationError(issues)
    return s


def build_scenario(n, g0, w_pop, w_align, w_dist, intensity_b, density_a, baseline=0.0) -> ThreeOpinionScenario:
    """Construct and validate a scenario from raw numbers, reporting weight and shape problems together."""
    issues: list[Issue] = []
    try:
        weights = UtilityWeights(w_pop, w_align, w_dist, baseline)
    except ValidationError as exc:
        issues.extend(exc.issues)
        weights = None
    s = ThreeOpinionScenario(n, g0, weights, intensity_b, density_a)
    issues.extend(i for i in scenario_issues(s) if not (weights is None and i.code == NON_POSITIVE_WEIGHT))
    if issues:
        raise ValidationError(issues)
    return s


def regime_of(s: ThreeOpinionScenario) -> Regime:
    """High polarization iff 3 G0 < n, low iff 3 G0 > n; exact equality is the knife edge."""
    three_g0 = 3 * s.g0
    if three_g0 < s.n:
        return Regime.HIGH_POLARIZATION
    if three_g0 > s.n:
        return Regime.LOW_POLARIZATION
    return Regime.KNIFE_N3


# -- equilibrium outputs ----------------------------------------------------


class PolarizationOrder(enum.Enum):
    MORE_POLARIZED = "MorePolarized"
    EQUAL = "Equal"
    LESS_POLARIZED = "LessPolarized"


def compare_polarization(c0, g0) -> PolarizationOrder:
    if c0 < g0:
        return PolarizationOrder.MORE_POLARIZED
    if c0 > g0:
        return PolarizationOrder.LESS_POLARIZED
    return PolarizationOrder.EQUAL


@dataclass(frozen=True)
class TieBreak:
    agent: int
    options: tuple[float, ...]
    resolution: float


@dataclass(frozen=True)
class PostProfile:
    posts: tuple[float, ...]
    tie_break_log: tuple[TieBreak, ...] = ()

    def check_realized(self, space: OpinionSpace) -> None:
        bad = [p for p in self.posts if p not in space]
        if bad:
            raise UnknownOpinion(f"posts outside the realized set: {sorted(set(bad))}")


@dataclass(frozen=True)
class EquilibriumSummary:
    platform_sizes: Mapping[float, float]
    likes: tuple[float, ...] = ()
    polarization_order: PolarizationOrder | None = None

    def size(self, opinion) -> float:
        return self.platform_sizes.get(opinion, 0)

    def three_way(self, intensity_b: float) -> tuple[float, float, float]:
        """(C-, C0, C+)."""
        return (self.size(-intensity_b), self.size(0.0), self.size(intensity_b))


@dataclass(frozen=True)
class UtilityBreakdown:
    baseline: float
    popularity: float
    aligned: float
    misaligned: float
    total: float
    exposure_excl_self: float

    @classmethod
    def build(cls, baseline, popularity, aligned, misaligned, aligned_self=0.0, misaligned_self=0.0):
        """``aligned``/``misaligned`` include the self-exposure parts given separately."""
        return cls(
            baseline=baseline,
            popularity=popularity,
            aligned=aligned,
            misaligned=misaligned,
            total=baseline + popularity + aligned - misaligned,
            exposure_excl_self=(aligned - aligned_self) - (misaligned - misaligned_self),
        )

    @property
    def gain(self) -> float:
        """Utility relative to autarky (total minus baseline)."""
        return self.total - self.baseline

    @property
    def gain_exact(self) -> float:
        """Same as ``gain`` but summed from the components, free of baseline rounding."""
        return self.popularity + self.aligned - self.misaligned
