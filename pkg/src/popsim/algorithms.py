"""Platform exposure rules with a homogeneous visibility cap ``k``.

RA shows each post to ``k`` viewers drawn in societal proportions, so a post
``c`` collects ``k * G_c / n`` likes. PVM shows it only to matching viewers,
up to the cap, so it collects ``min(k, G_c)``. Posting incentives keep the
own-post payoff structure of the representative model with the audience
replaced by these like counts.
"""

from __future__ import annotations

import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .analytics import Comparison, g0_thresholds
from .core import (
    EquilibriumSummary,
    PopsimError,
    Regime,
    Society,
    ThreeOpinionScenario,
    UnknownOpinion,
    ValidationError,
    WrongRegime,
    regime_of,
    validate_scenario,
)
from .equilibrium import AudienceProfile, best_responses, resolve_posts, summarize


class AlgorithmKind(enum.Enum):
    RA = "RA"
    PVM = "PVM"


@dataclass(frozen=True)
class AlgorithmConfig:
    kind: AlgorithmKind
    cap_k: int

    def __post_init__(self):
        if not isinstance(self.kind, AlgorithmKind):
            object.__setattr__(self, "kind", AlgorithmKind(self.kind))
        if isinstance(self.cap_k, bool) or not isinstance(self.cap_k, int) or self.cap_k < 1:
            raise ValueError(f"cap_k must be a positive integer, got {self.cap_k!r}")


def likes_under(algorithm: AlgorithmConfig, post_value: float, society: Society) -> float:
    if post_value not in society.group_sizes:
        raise UnknownOpinion(f"{post_value!r} is not a realized opinion")
    g = society.size_of(post_value)
    if algorithm.kind is AlgorithmKind.RA:
        return algorithm.cap_k * g / society.n
    return min(algorithm.cap_k, g)


def _audience(algorithm: AlgorithmConfig, s: ThreeOpinionScenario) -> AudienceProfile:
    society = s.society()
    return AudienceProfile({m: likes_under(algorithm, m, society) for m in s.space().realized})


def equilibrium_under(algorithm: AlgorithmConfig, s: ThreeOpinionScenario,
                      strict_ties: bool = True) -> EquilibriumSummary:
    validate_scenario(s)
    if algorithm.cap_k > s.n:
        raise ValueError(f"cap_k={algorithm.cap_k} exceeds n={s.n}")
    if regime_of(s) is Regime.KNIFE_N3:
        raise WrongRegime("3 G0 = n")
    society, space = s.society(), s.space()
    audience = _audience(algorithm, s)
    audiences = [audience] * s.n
    responses = best_responses(society, space, s.weights, None, audiences)
    profile = resolve_posts(responses, strict_ties)
    return summarize(profile.posts, society, space, audiences)


def deviated_group(summary: EquilibriumSummary, s: ThreeOpinionScenario) -> str:
    c0 = summary.size(0.0)
    if c0 < s.g0:
        return "neutral"
    if c0 > s.g0:
        return "opinionated"
    return "none"


@dataclass(frozen=True)
class AlgorithmComparison:
    c0_ra: int
    c0_pvm: int
    strict: bool
    predicted_strict: bool
    conditions: tuple[Comparison, ...]

    @property
    def consistent(self) -> bool:
        return self.strict == self.predicted_strict


def cap_bound(s: ThreeOpinionScenario) -> float:
    """Largest cap at which PVM still blocks the deviation RA induces."""
    wp, wa, d = s.weights.w_pop, s.weights.w_align, s.misalignment_cost
    if wp <= d:
        return math.inf
    minority = s.g0 if regime_of(s) is Regime.HIGH_POLARIZATION else s.g_side
    return minority * (wp + wa) / (wp - d)


def compare_algorithms(s: ThreeOpinionScenario, k: int, strict_ties: bool = True) -> AlgorithmComparison:
    """Neutral platform counts under RA and PVM, plus the iff conditions predicting a strict gap."""
    validate_scenario(s)
    regime = regime_of(s)
    if regime is Regime.KNIFE_N3:
        raise WrongRegime("3 G0 = n")
    ra = equilibrium_under(AlgorithmConfig(AlgorithmKind.RA, k), s, strict_ties).size(0.0)
    pvm = equilibrium_under(AlgorithmConfig(AlgorithmKind.PVM, k), s, strict_ties).size(0.0)
    g_star, g_ss = g0_thresholds(s.weights, s.intensity_b, s.n)
    bound = cap_bound(s)
    if regime is Regime.HIGH_POLARIZATION:
        dev = Comparison("G0 < G*", s.g0, g_star.value, g_star.defined and s.g0 < g_star.value)
        strict = ra < pvm
    else:
        dev = Comparison("G0 > G**", s.g0, g_ss.value, g_ss.defined and s.g0 > g_ss.value)
        strict = ra > pvm
    cap = Comparison("k <= cap bound", k, bound, k <= bound)
    return AlgorithmComparison(ra, pvm, strict, dev.holds and cap.holds, (dev, cap))


def experimental_pvm_utilities(s: ThreeOpinionScenario, k: int) -> dict[str, float]:
    """Experimental extension, not part of the model's stated results.

    Per-type utility gains in the PVM equilibrium when feeds carry no
    cross-type posts: each holder of ``m`` sees their own post plus, on
    average, ``C_m * min(k, G_m) / G_m`` posts of value ``m``.
    """
    cfg = AlgorithmConfig(AlgorithmKind.PVM, k)
    summ = equilibrium_under(cfg, s)
    society = s.society()
    w = s.weights
    gain = {}
    for label, own in (("neutral", 0.0), ("opinionated", s.intensity_b)):
        if society.size_of(own) == 0:
            gain[label] = math.nan
            continue
        posts = _type_posts(summ, s, own)
        r_match = likes_under(cfg, own, society)
        seen = summ.size(own) * min(k, society.size_of(own)) / society.size_of(own)
        total = 0.0
        for c in posts:
            r = likes_under(cfg, c, society)
            u = w.w_pop * r + w.w_align * seen * r_match
            if c == own:
                u += w.w_align * r
            else:
                u -= w.w_dist * abs(own - c) * r
            total += u
        gain[label] = total / len(posts)
    return gain


def _type_posts(summary: EquilibriumSummary, s: ThreeOpinionScenario, own: float) -> list[float]:
    # the equilibrium is symmetric across types, so recover the posts of type `own`
    b = s.intensity_b
    if own == 0.0:
        if summary.size(0.0) >= s.g0:
            return [0.0]
        return [-b, b]
    if summary.size(0.0) > s.g0:
        return [0.0]
    return [own]


# -- sweeps -----------------------------------------------------------------

ALGORITHM_COLUMNS = ("g0", "k", "algorithm", "c_minus", "c_zero", "c_plus", "deviated_group")


def algorithm_row(template: ThreeOpinionScenario, g0, k: int, kind: AlgorithmKind,
                  strict_ties: bool = True) -> list:
    try:
        s = validate_scenario(template.replace(g0=g0))
        summ = equilibrium_under(AlgorithmConfig(kind, k), s, strict_ties)
    except ValidationError as exc:
        return [g0, k, kind.value, None, None, None, "error:" + "+".join(exc.codes)]
    except PopsimError as exc:
        return [g0, k, kind.value, None, None, None, "error:" + type(exc).__name__]
    c_minus, c_zero, c_plus = summ.three_way(s.intensity_b)
    return [g0, k, kind.value, c_minus, c_zero, c_plus, deviated_group(summ, s)]


def algorithm_sweep(template: ThreeOpinionScenario, g0_grid: Iterable, caps: Sequence[int],
                    kinds: Sequence[AlgorithmKind] = (AlgorithmKind.RA, AlgorithmKind.PVM),
                    threads: int = 1, strict_ties: bool = True) -> list[list]:
    """Rows ordered by cap, then algorithm, then G0."""
    tasks = [(g0, k, kind) for k in caps for kind in kinds for g0 in g0_grid]

    def run(task):
        return algorithm_row(template, *task, strict_ties=strict_ties)

    if threads <= 1:
        return [run(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, tasks))


def algorithm_csv(rows: Sequence[Sequence]) -> str:
    from .welfare import write_csv

    buf = io.StringIO()
    write_csv(ALGORITHM_COLUMNS, rows, buf)
    return buf.getvalue()
