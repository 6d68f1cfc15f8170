"""Per-agent utilities and aggregate welfare under autarky, authentic
expression and equilibrium, for representative exposure.

Feeds use expected counts: an agent sees their own post plus ``a * C_m``
posts of each platform opinion ``m``, and a post ``c`` carries ``a * G_c``
likes. Counts stay fractional so the accounting matches the closed forms.
Aggregate welfare is computed twice, by summing agent utilities and from
the closed-form welfare differences, and the two must agree.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .analytics import (
    EquilibriumKind,
    RegimeReport,
    classify_regime,
    equilibrium_kind,
)
from .core import (
    ConsistencyFailure,
    PopsimError,
    PostProfile,
    Regime,
    Society,
    ThreeOpinionScenario,
    UnsupportedProfile,
    UtilityBreakdown,
    UtilityWeights,
    ValidationError,
    WrongRegime,
    regime_of,
    validate_scenario,
)
from .equilibrium import scenario_equilibrium

WELFARE_RTOL = 1e-9


def representative_utility(own: float, post: float, platform_sizes: Mapping[float, float],
                           society: Society, density_a: float, w: UtilityWeights) -> UtilityBreakdown:
    """Utility of one agent holding ``own`` and posting ``post``."""
    a = density_a

    def likes(c):
        return a * society.size_of(c)

    r_own = likes(post)
    popularity = w.w_pop * r_own
    aligned_self = w.w_align * r_own if post == own else 0.0
    misaligned_self = 0.0 if post == own else w.w_dist * abs(own - post) * r_own
    aligned = aligned_self
    misaligned = misaligned_self
    for m, c_m in platform_sizes.items():
        if not c_m:
            continue
        seen = a * c_m
        if m == own:
            aligned += w.w_align * seen * likes(m)
        else:
            misaligned += w.w_dist * abs(own - m) * seen * likes(m)
    return UtilityBreakdown.build(w.baseline, popularity, aligned, misaligned, aligned_self, misaligned_self)


def agent_utilities(posts: Sequence[float], society: Society, density_a: float,
                    w: UtilityWeights) -> list[UtilityBreakdown]:
    platform: dict[float, int] = {}
    for c in posts:
        platform[c] = platform.get(c, 0) + 1
    cache: dict = {}
    out = []
    for b_i, c_i in zip(society.agent_opinions(), posts):
        if (b_i, c_i) not in cache:
            cache[b_i, c_i] = representative_utility(b_i, c_i, platform, society, density_a, w)
        out.append(cache[b_i, c_i])
    return out


def _mean(items: Sequence[UtilityBreakdown]) -> UtilityBreakdown:
    k = len(items)
    return UtilityBreakdown(*(sum(getattr(u, f) for u in items) / k for f in
                              ("baseline", "popularity", "aligned", "misaligned", "total", "exposure_excl_self")))


def benchmark_posts(kind: EquilibriumKind, s: ThreeOpinionScenario) -> PostProfile:
    """Posts of the benchmark profile; deviating neutrals split evenly by agent id."""
    b = s.intensity_b
    opinions = s.society().agent_opinions()
    if kind is EquilibriumKind.AUTHENTIC_ALL:
        return PostProfile(opinions)
    if kind is EquilibriumKind.PE_HIGH_POL:
        neutrals = [i for i, v in enumerate(opinions) if v == 0.0]
        half = len(neutrals) // 2
        lower = set(neutrals[:half])
        return PostProfile(tuple((-b if i in lower else b) if v == 0.0 else v for i, v in enumerate(opinions)))
    if kind is EquilibriumKind.PE_LOW_POL:
        return PostProfile((0.0,) * s.n)
    raise UnsupportedProfile(f"unsupported profile {kind!r}")


def _hypothetical(own: float, s: ThreeOpinionScenario, posts: PostProfile) -> UtilityBreakdown:
    # utility of a type with no members, evaluated as it would post under the profile's rule
    platform: dict[float, int] = {}
    for c in posts.posts:
        platform[c] = platform.get(c, 0) + 1
    return representative_utility(own, own, platform, s.society(), s.density_a, s.weights)


def feed_utilities(profile, s: ThreeOpinionScenario) -> dict[str, UtilityBreakdown]:
    """Average utility breakdown for the neutral and opinionated types.

    ``profile`` is an EquilibriumKind benchmark or an explicit PostProfile.
    An empty type is reported as a hypothetical authentic poster.
    """
    if isinstance(profile, EquilibriumKind):
        posts = benchmark_posts(profile, s)
    elif isinstance(profile, PostProfile):
        posts = profile
        space = s.space()
        if len(posts.posts) != s.n or any(p not in space for p in posts.posts):
            raise UnsupportedProfile("post profile does not match the scenario")
    else:
        raise UnsupportedProfile(f"unsupported profile {profile!r}")
    society = s.society()
    utils = agent_utilities(posts.posts, society, s.density_a, s.weights)
    opinions = society.agent_opinions()
    neutral = [u for u, v in zip(utils, opinions) if v == 0.0]
    opin = [u for u, v in zip(utils, opinions) if v != 0.0]
    return {
        "neutral": _mean(neutral) if neutral else _hypothetical(0.0, s, posts),
        "opinionated": _mean(opin) if opin else _hypothetical(s.intensity_b, s, posts),
    }


@dataclass(frozen=True)
class TypeBenchmarks:
    u_autarky: float
    u_authentic: float
    u_equilibrium: float
    delta_auth: float
    delta_eq: float

    @property
    def strategic(self) -> float:
        """U_eq - U_auth."""
        return self.delta_eq - self.delta_auth


@dataclass(frozen=True)
class BenchmarkUtilities:
    neutral: TypeBenchmarks
    opinionated: TypeBenchmarks


@dataclass(frozen=True)
class WelfareReport:
    kind: EquilibriumKind
    w_autarky: float
    w_authentic: float
    w_equilibrium: float
    delta_w: float
    delta_w_closed: float
    per_type: BenchmarkUtilities


def _type_benchmarks(auth: UtilityBreakdown, eq: UtilityBreakdown) -> TypeBenchmarks:
    return TypeBenchmarks(auth.baseline, auth.total, eq.total, auth.gain_exact, eq.gain_exact)


# -- closed forms -----------------------------------------------------------


def w_authentic_closed_form(s: ThreeOpinionScenario) -> float:
    """Aggregate authentic welfare relative to autarky."""
    n, g0, a, d = s.n, s.g0, s.density_a, s.misalignment_cost
    wp, wa = s.weights.w_pop, s.weights.w_align
    h = (n - g0) ** 2 / 2
    return (wp * a * (g0 ** 2 + h)
            + wa * a * (g0 ** 2 * (a * g0 + 1) + h * (a * (n - g0) / 2 + 1))
            - d * a ** 2 * (n * (n - g0) ** 2 / 2 + g0 ** 2 * (n - g0)))


def delta_w_closed_form(s: ThreeOpinionScenario, kind: EquilibriumKind | None = None) -> float:
    """W_eq - W_auth from the factored closed forms (zero when no PE)."""
    if kind is None:
        kind = equilibrium_kind(s)
    n, g0, a, d = s.n, s.g0, s.density_a, s.misalignment_cost
    wp, wa = s.weights.w_pop, s.weights.w_align
    if kind is EquilibriumKind.PE_HIGH_POL:
        return a * g0 / 2 * (
            wp * (n - 3 * g0)
            + wa / 2 * (a * (n - 3 * g0) * (n + g0) - 4 * g0)
            - d * (n - g0) * (a * (n - 2 * g0) + 1)
        )
    if kind is EquilibriumKind.PE_LOW_POL:
        return a * (n - g0) / 2 * (
            wp * (3 * g0 - n)
            + wa / 2 * (a * (3 * g0 - n) * (n + g0) - 2 * (n - g0))
            - d * (2 * g0 + a * (n - g0) * (2 * g0 - n))
        )
    return 0.0


def _rel_err(x: float, y: float, gross: float = 0.0) -> float:
    # gross bounds the cancellation error when the net value is near zero
    scale = max(abs(x), abs(y), gross)
    return 0.0 if scale == 0 else abs(x - y) / scale


def _gross(utils) -> float:
    return math.fsum(u.popularity + u.aligned + u.misaligned for u in utils)


def aggregate_welfare(s: ThreeOpinionScenario, strict_ties: bool = True) -> WelfareReport:
    validate_scenario(s)
    if regime_of(s) is Regime.KNIFE_N3:
        raise WrongRegime("3 G0 = n: welfare closed forms are not defined on the knife edge")
    _, summary = scenario_equilibrium(s, strict_ties)
    c0 = summary.size(0.0)
    if c0 < s.g0:
        kind = EquilibriumKind.PE_HIGH_POL
    elif c0 > s.g0:
        kind = EquilibriumKind.PE_LOW_POL
    else:
        kind = EquilibriumKind.AUTHENTIC_ALL

    society = s.society()
    auth_posts = benchmark_posts(EquilibriumKind.AUTHENTIC_ALL, s)
    eq_posts = benchmark_posts(kind, s)
    auth_utils = agent_utilities(auth_posts.posts, society, s.density_a, s.weights)
    eq_utils = agent_utilities(eq_posts.posts, society, s.density_a, s.weights)
    h_total = s.n * s.weights.baseline
    w_auth = h_total + math.fsum(u.gain_exact for u in auth_utils)
    w_eq = h_total + math.fsum(u.gain_exact for u in eq_utils)
    delta_sum = math.fsum(e.gain_exact - u.gain_exact for e, u in zip(eq_utils, auth_utils))

    delta_closed = delta_w_closed_form(s, kind)
    auth_closed = w_authentic_closed_form(s)
    checks = (("delta_w", delta_sum, delta_closed, 0.0),
              ("w_authentic", w_auth - h_total, auth_closed, _gross(auth_utils)))
    for label, x, y, gross in checks:
        if _rel_err(x, y, gross) > WELFARE_RTOL:
            raise ConsistencyFailure(f"{label}: summation {x!r} != closed form {y!r}")

    per_auth = feed_utilities(auth_posts, s)
    per_eq = feed_utilities(eq_posts, s)
    per_type = BenchmarkUtilities(
        neutral=_type_benchmarks(per_auth["neutral"], per_eq["neutral"]),
        opinionated=_type_benchmarks(per_auth["opinionated"], per_eq["opinionated"]),
    )
    return WelfareReport(kind, h_total, w_auth, w_eq, delta_sum, delta_closed, per_type)


# -- sweeps -----------------------------------------------------------------

AXES = ("g0", "d", "b", "a", "w_pop")

SWEEP_COLUMNS = (
    "axis_value", "regime", "eq_kind", "utility_region", "u_auth_neutral", "u_auth_opin",
    "u_eq_neutral", "u_eq_opin", "strategic_neutral", "strategic_opin", "w_auth", "w_eq", "delta_w",
)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    scenario: ThreeOpinionScenario | None
    report: RegimeReport | None = None
    welfare: WelfareReport | None = None
    error: str | None = None

    @property
    def benchmarks(self) -> BenchmarkUtilities | None:
        return None if self.welfare is None else self.welfare.per_type


def apply_axis(template: ThreeOpinionScenario, axis: str, value) -> ThreeOpinionScenario:
    if axis == "g0":
        g0 = int(value) if float(value).is_integer() else value
        return template.replace(g0=g0)
    if axis == "d":
        return template.with_misalignment_cost(value)
    if axis == "b":
        return template.replace(intensity_b=value)
    if axis == "a":
        return template.replace(density_a=value)
    if axis == "w_pop":
        return template.replace(weights=UtilityWeights(value, template.weights.w_align,
                                                       template.weights.w_dist, template.weights.baseline))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {AXES}")


def sweep_point(template: ThreeOpinionScenario, axis: str, value, strict_ties: bool = True) -> SweepRow:
    try:
        s = validate_scenario(apply_axis(template, axis, value))
        report = classify_regime(s)
        welfare = aggregate_welfare(s, strict_ties)
    except ValidationError as exc:
        return SweepRow(value, None, error="+".join(exc.codes))
    except PopsimError as exc:
        return SweepRow(value, None, error=type(exc).__name__)
    return SweepRow(value, s, report, welfare)


def sweep(template: ThreeOpinionScenario, axis: str, grid: Iterable, threads: int = 1,
          strict_ties: bool = True) -> list[SweepRow]:
    """One row per grid value, in grid order regardless of ``threads``."""
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
    grid = list(grid)
    if threads <= 1:
        return [sweep_point(template, axis, v, strict_ties) for v in grid]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda v: sweep_point(template, axis, v, strict_ties), grid))


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return repr(x + 0.0)
    return str(x)


def write_csv(header: Sequence[str], rows: Iterable[Sequence], out: io.TextIOBase) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def sweep_records(rows: Sequence[SweepRow]) -> list[list]:
    out = []
    for r in rows:
        if r.error is not None:
            out.append([r.axis_value, "error", r.error] + [None] * (len(SWEEP_COLUMNS) - 3))
            continue
        pt = r.welfare.per_type
        out.append([
            r.axis_value, regime_of(r.scenario).value, r.report.equilibrium_kind.value,
            r.report.utility_region.value,
            pt.neutral.u_authentic, pt.opinionated.u_authentic,
            pt.neutral.u_equilibrium, pt.opinionated.u_equilibrium,
            pt.neutral.strategic, pt.opinionated.strategic,
            r.welfare.w_authentic, r.welfare.w_equilibrium, r.welfare.delta_w,
        ])
    return out


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    write_csv(SWEEP_COLUMNS, sweep_records(rows), buf)
    return buf.getvalue()
