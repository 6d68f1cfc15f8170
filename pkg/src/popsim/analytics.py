"""Closed-form thresholds and regime classification for the symmetric
three-opinion society with homogeneous weights.

Every threshold is returned as a :class:`Threshold`, which carries its
numeric value (when one exists) and a status flag. Negative values are
kept verbatim and flagged rather than replaced by a sentinel.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

from .core import (
    NoDeviationRegion,
    Regime,
    ThreeOpinionScenario,
    UtilityWeights,
    WrongRegime,
    regime_of,
    validate_scenario,
)

TIE_TOL = 1e-12


class Status(enum.Enum):
    OK = "ok"
    NEGATIVE = "negative"
    NO_REGION = "no_region"
    UNDEFINED = "undefined"
    OUTSIDE_GUARANTEE = "outside_guarantee"


@dataclass(frozen=True)
class Threshold:
    value: float | None
    status: Status = Status.OK

    @classmethod
    def of(cls, value: float, status: Status | None = None) -> "Threshold":
        if status is None:
            status = Status.NEGATIVE if value < 0 else Status.OK
        return cls(float(value), status)

    @classmethod
    def ratio(cls, num: float, den: float, status: Status | None = None) -> "Threshold":
        if den == 0:
            return cls.undefined()
        return cls.of(num / den, status)

    @classmethod
    def undefined(cls) -> "Threshold":
        return cls(None, Status.UNDEFINED)

    @property
    def defined(self) -> bool:
        return self.value is not None

    def __float__(self) -> float:
        if self.value is None:
            raise ValueError("threshold is undefined")
        return self.value

    def __str__(self) -> str:
        return "undefined" if self.value is None else repr(self.value)


def below(x: float, t: Threshold) -> bool:
    """x strictly below t; values within the tie tolerance count as equal."""
    if not t.defined:
        return False
    return x < t.value and not math.isclose(x, t.value, rel_tol=TIE_TOL)


def above(x: float, t: Threshold) -> bool:
    if not t.defined:
        return False
    return x > t.value and not math.isclose(x, t.value, rel_tol=TIE_TOL)


_UNDEF = Threshold.undefined()


@dataclass(frozen=True)
class ThresholdSet:
    g0_star: Threshold = _UNDEF
    g0_starstar: Threshold = _UNDEF
    d_star: Threshold = _UNDEF
    d_starstar: Threshold = _UNDEF
    d0_high: Threshold = _UNDEF
    dpm_high: Threshold = _UNDEF
    dpm_low: Threshold = _UNDEF
    wp_underline: Threshold = _UNDEF
    wp_overline: Threshold = _UNDEF
    wp_tilde: Threshold = _UNDEF
    wp_starstar: Threshold = _UNDEF
    d_hat_high: Threshold = _UNDEF
    d_hat_low: Threshold = _UNDEF
    ratio_star: Threshold = _UNDEF
    ratio_prime: Threshold = _UNDEF
    ratio_starstar: Threshold = _UNDEF
    ratio_doubleprime: Threshold = _UNDEF

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


# -- polarization thresholds ------------------------------------------------


def g0_thresholds(w: UtilityWeights, intensity_b: float, n: float) -> tuple[Threshold, Threshold]:
    """Neutral-deviation bound G0* and opinionated-deviation bound G0**.

    Both need w_pop > D for the deviation region to exist; otherwise the
    formula value is still reported, flagged NO_REGION.
    """
    d = w.misalignment_cost(intensity_b)
    wp, wa = w.w_pop, w.w_align
    region = None if wp > d else Status.NO_REGION
    g_star = Threshold.ratio((wp - d) * n, 3 * wp - d + 2 * wa, region)
    g_starstar = Threshold.ratio((wp + wa) * n, 3 * wp - 2 * d + wa, region)
    return g_star, g_starstar


def opinion_gap(w: UtilityWeights, intensity_b: float, n: float) -> tuple[float, float, float]:
    """(G_neutral, G_opin, G_opin - G_neutral) with G_opin = n - G0**."""
    if not w.w_pop > w.misalignment_cost(intensity_b):
        raise NoDeviationRegion("w_pop <= w_dist |b|: neither group ever deviates")
    g_star, g_starstar = g0_thresholds(w, intensity_b, n)
    g_neutral = g_star.value
    g_opin = n - g_starstar.value
    return g_neutral, g_opin, g_opin - g_neutral


def _require(s: ThreeOpinionScenario, regime: Regime) -> None:
    actual = regime_of(s)
    if actual is not regime:
        raise WrongRegime(f"requires {regime.value}, scenario is {actual.value}")


def d_star(s: ThreeOpinionScenario) -> Threshold:
    """Misalignment cost below which neutrals post opinionated content (high polarization)."""
    _require(s, Regime.HIGH_POLARIZATION)
    n, g0, wp, wa = s.n, s.g0, s.weights.w_pop, s.weights.w_align
    return Threshold.of((wp * (n - 3 * g0) - 2 * wa * g0) / (n - g0))


def d_thresholds_high(s: ThreeOpinionScenario) -> tuple[Threshold, Threshold, Threshold, Threshold]:
    """(D0_high, Dpm_high, w_pop underline, w_pop overline)."""
    _require(s, Regime.HIGH_POLARIZATION)
    n, g0, a = s.n, s.g0, s.density_a
    wp, wa = s.weights.w_pop, s.weights.w_align
    ag1 = a * g0 + 1
    d0 = Threshold.of((wp * (n - 3 * g0) - 2 * wa * g0 * ag1) / ((n - g0) * ag1))
    dpm = Threshold.ratio(wa * g0 * (n - g0), 2 * n * g0 - 6 * g0 ** 2)
    wp_over = Threshold.of(2 * wa * g0 * ag1 / (n - 3 * g0))
    wp_d_star = 2 * wa * g0 / (n - 3 * g0)
    if dpm.defined:
        wp_under = Threshold.of(max(((n - g0) * dpm.value + 2 * wa * g0) / (n - 3 * g0), wp_d_star))
    else:
        wp_under = Threshold.undefined()
    return d0, dpm, wp_under, wp_over


def d_thresholds_low(s: ThreeOpinionScenario) -> tuple[Threshold, Threshold, Threshold, Threshold]:
    """(D**, Dpm_low, (w_pop)**, w_pop tilde)."""
    _require(s, Regime.LOW_POLARIZATION)
    n, g0, a = s.n, s.g0, s.density_a
    wp, wa = s.weights.w_pop, s.weights.w_align
    d_ss = Threshold.of((wp * (3 * g0 - n) - wa * (n - g0)) / (2 * g0))
    dpm = Threshold.of(
        (wp * (3 * g0 - n) - wa * (a * (n - g0) / 2 + 1) * (n - g0))
        / (2 * g0 + a * (n - g0) * (3 * g0 - n))
    )
    if d_ss.value > 0 and g0 < n:
        assert dpm.value < d_ss.value, "Dpm_low must lie below D** whenever the PE region exists"
    wp_ss = Threshold.of(wa * (n - g0) / (3 * g0 - n))
    wp_tilde = Threshold.of(wa * (a * (n - g0) / 2 + 1) * (n - g0) / (3 * g0 - n))
    return d_ss, dpm, wp_ss, wp_tilde


def welfare_d_hat_high(s: ThreeOpinionScenario) -> Threshold:
    n, g0, a = s.n, s.g0, s.density_a
    wp, wa = s.weights.w_pop, s.weights.w_align
    num = wp * (n - 3 * g0) + wa / 2 * (a * (n - 3 * g0) * (n + g0) - 4 * g0)
    return Threshold.ratio(num, (n - g0) * (a * (n - 2 * g0) + 1))


def welfare_d_hat_low(s: ThreeOpinionScenario) -> Threshold:
    n, g0, a = s.n, s.g0, s.density_a
    wp, wa = s.weights.w_pop, s.weights.w_align
    num = wp * (3 * g0 - n) + wa / 2 * (a * (3 * g0 - n) * (n + g0) - 2 * (n - g0))
    den = 2 * g0 + a * (n - g0) * (2 * g0 - n)
    if den <= 0:
        return Threshold.undefined()
    value = num / den
    if 2 * g0 <= n:
        return Threshold(value, Status.OUTSIDE_GUARANTEE)
    return Threshold.of(value)


def welfare_thresholds(s: ThreeOpinionScenario) -> tuple[Threshold, Threshold, Threshold]:
    """(welfare cost threshold, existence ratio threshold, welfare ratio threshold).

    High polarization gives (D_hat, ratio*, ratio'); low polarization gives
    (D_hat_low, ratio**, ratio''). The low branch is only guaranteed for a
    neutral strict majority; below that it is flagged OUTSIDE_GUARANTEE or
    left undefined when its denominator is not positive.
    """
    n, g0 = s.n, s.g0
    regime = regime_of(s)
    if regime is Regime.HIGH_POLARIZATION:
        ratio_star = Threshold.of(2 * g0 / (n - 3 * g0))
        ratio_prime = Threshold.of(
            ((n - 3 * g0) * (n + g0) + 4 * g0 * (n - 2 * g0)) / (2 * (n - 3 * g0) * (n - 2 * g0))
        )
        return welfare_d_hat_high(s), ratio_star, ratio_prime
    if regime is Regime.LOW_POLARIZATION:
        ratio_ss = Threshold.of((n - g0) / (3 * g0 - n))
        if 2 * g0 == n or g0 == n:
            ratio_dp = Threshold.undefined()
        else:
            status = None if 2 * g0 > n else Status.OUTSIDE_GUARANTEE
            ratio_dp = Threshold.of(
                (n - g0) / (3 * g0 - n) + g0 * (n + g0) / ((n - g0) * (2 * g0 - n)), status
            )
        return welfare_d_hat_low(s), ratio_ss, ratio_dp
    raise WrongRegime("welfare thresholds are not defined on the knife edge 3 G0 = n")


def threshold_set(s: ThreeOpinionScenario) -> ThresholdSet:
    """Every threshold applicable to ``s``; the others stay undefined."""
    validate_scenario(s)
    g_star, g_ss = g0_thresholds(s.weights, s.intensity_b, s.n)
    regime = regime_of(s)
    if regime is Regime.HIGH_POLARIZATION:
        d0, dpm, wp_u, wp_o = d_thresholds_high(s)
        d_hat, r_star, r_prime = welfare_thresholds(s)
        return ThresholdSet(g0_star=g_star, g0_starstar=g_ss, d_star=d_star(s), d0_high=d0, dpm_high=dpm,
                            wp_underline=wp_u, wp_overline=wp_o, d_hat_high=d_hat,
                            ratio_star=r_star, ratio_prime=r_prime)
    if regime is Regime.LOW_POLARIZATION:
        d_ss, dpm, wp_ss, wp_t = d_thresholds_low(s)
        d_hat, r_ss, r_dp = welfare_thresholds(s)
        return ThresholdSet(g0_star=g_star, g0_starstar=g_ss, d_starstar=d_ss, dpm_low=dpm,
                            wp_starstar=wp_ss, wp_tilde=wp_t, d_hat_low=d_hat,
                            ratio_starstar=r_ss, ratio_doubleprime=r_dp)
    return ThresholdSet(g0_star=g_star, g0_starstar=g_ss)


# -- regime classification --------------------------------------------------


class EquilibriumKind(enum.Enum):
    AUTHENTIC_ALL = "AuthenticAll"
    PE_HIGH_POL = "PE_HighPol"
    PE_LOW_POL = "PE_LowPol"


class UtilityRegion(enum.Enum):
    ALL_BETTER = "AllBetter"
    ONLY_NEUTRAL_WORSE = "OnlyNeutralWorse"
    ONLY_OPINIONATED_WORSE = "OnlyOpinionatedWorse"
    ALL_WORSE = "AllWorse"
    NOT_APPLICABLE = "NotApplicable"


class WelfareComparison(enum.Enum):
    HIGHER = "Higher"
    LOWER = "Lower"
    EQUAL = "Equal"


@dataclass(frozen=True)
class Comparison:
    label: str
    lhs: float
    rhs: float | None
    holds: bool


@dataclass(frozen=True)
class RegimeReport:
    equilibrium_kind: EquilibriumKind
    utility_region: UtilityRegion
    welfare_vs_authentic: WelfareComparison
    active_thresholds: tuple[Comparison, ...]


def _cmp(label: str, d: float, t: Threshold, op) -> Comparison:
    return Comparison(label, d, t.value, op(d, t))


def _welfare_side(d: float, d_hat: Threshold, delta_w_sign: float) -> WelfareComparison:
    if d_hat.defined:
        if below(d, d_hat):
            return WelfareComparison.HIGHER
        if above(d, d_hat):
            return WelfareComparison.LOWER
        return WelfareComparison.EQUAL
    if delta_w_sign > 0:
        return WelfareComparison.HIGHER
    if delta_w_sign < 0:
        return WelfareComparison.LOWER
    return WelfareComparison.EQUAL


def classify_regime(s: ThreeOpinionScenario) -> RegimeReport:
    """Equilibrium kind, who gains or loses against the authentic benchmark,
    and the aggregate welfare comparison for scenario ``s``.

    Exact threshold ties fall on the no-deviation / not-worse side.
    """
    from .welfare import delta_w_closed_form

    validate_scenario(s)
    regime = regime_of(s)
    if regime is Regime.KNIFE_N3:
        raise WrongRegime("3 G0 = n: neither group is the strict minority or majority")
    d = s.misalignment_cost
    none = UtilityRegion.NOT_APPLICABLE

    if regime is Regime.HIGH_POLARIZATION:
        t_star = d_star(s)
        active = [_cmp("D < D*", d, t_star, below)]
        if s.g0 == 0 or not below(d, t_star):
            return RegimeReport(EquilibriumKind.AUTHENTIC_ALL, none, WelfareComparison.EQUAL, tuple(active))
        d0, dpm, _, _ = d_thresholds_high(s)
        neutral_worse = above(d, d0)
        opin_worse = above(d, dpm)
        active += [_cmp("D > D0_high", d, d0, above), _cmp("D > Dpm_high", d, dpm, above)]
        region = {
            (False, False): UtilityRegion.ALL_BETTER,
            (True, False): UtilityRegion.ONLY_NEUTRAL_WORSE,
            (False, True): UtilityRegion.ONLY_OPINIONATED_WORSE,
            (True, True): UtilityRegion.ALL_WORSE,
        }[(neutral_worse, opin_worse)]
        d_hat = welfare_d_hat_high(s)
        active.append(_cmp("D < D_hat", d, d_hat, below))
        welfare = _welfare_side(d, d_hat, delta_w_closed_form(s, EquilibriumKind.PE_HIGH_POL))
        return RegimeReport(EquilibriumKind.PE_HIGH_POL, region, welfare, tuple(active))

    d_ss, dpm, _, _ = d_thresholds_low(s)
    active = [_cmp("D < D**", d, d_ss, below)]
    if s.g0 == s.n or not below(d, d_ss):
        return RegimeReport(EquilibriumKind.AUTHENTIC_ALL, none, WelfareComparison.EQUAL, tuple(active))
    active.append(_cmp("D > Dpm_low", d, dpm, above))
    region = UtilityRegion.ONLY_OPINIONATED_WORSE if above(d, dpm) else UtilityRegion.ALL_BETTER
    d_hat = welfare_d_hat_low(s)
    active.append(_cmp("D < D_hat_low", d, d_hat, below))
    welfare = _welfare_side(d, d_hat, delta_w_closed_form(s, EquilibriumKind.PE_LOW_POL))
    return RegimeReport(EquilibriumKind.PE_LOW_POL, region, welfare, tuple(active))


def equilibrium_kind(s: ThreeOpinionScenario) -> EquilibriumKind:
    """Analytic equilibrium kind (no utility or welfare comparisons)."""
    return classify_regime(s).equilibrium_kind
