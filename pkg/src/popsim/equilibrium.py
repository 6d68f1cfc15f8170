"""Reaction rule, posting best responses and equilibrium posts.

Viewers like a post exactly when it matches their own opinion, so a post
``c`` earns ``A_{i,c}`` likes and the poster's own-post payoff separates from
everything contributed by other agents. Best responses are therefore
computed agent by agent; no iteration over profiles is needed.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import (
    EmptyAudience,
    EquilibriumSummary,
    ExplicitNetwork,
    OddIndifferentGroup,
    OpinionSpace,
    PostProfile,
    Representative,
    Society,
    TieBreak,
    UnknownOpinion,
    UtilityWeights,
    check_exposure,
    compare_polarization,
)

REL_TOL = 1e-12


class Reaction(enum.Enum):
    LIKE = "Like"
    NO_REACTION = "NoReaction"


def reaction(viewer_opinion: float, post_value: float) -> Reaction:
    return Reaction.LIKE if post_value == viewer_opinion else Reaction.NO_REACTION


@dataclass(frozen=True)
class AudienceProfile:
    """Followers of one agent, counted per realized opinion."""

    counts: Mapping[float, float]

    def __post_init__(self):
        object.__setattr__(self, "counts", dict(self.counts))
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("audience counts must be non-negative")

    @property
    def total(self) -> float:
        return sum(self.counts.values())

    def of(self, opinion) -> float:
        try:
            return self.counts[opinion]
        except KeyError:
            raise UnknownOpinion(f"{opinion!r} is not a realized opinion") from None

    def scaled(self, factor: float) -> "AudienceProfile":
        return AudienceProfile({k: v * factor for k, v in self.counts.items()})

    @classmethod
    def representative(cls, density_a: float, society: Society, space: OpinionSpace) -> "AudienceProfile":
        return cls({m: density_a * society.size_of(m) for m in space.realized})

    @classmethod
    def from_followers(cls, followers: Sequence[int], opinions: Sequence[float], space: OpinionSpace) -> "AudienceProfile":
        counts = {m: 0 for m in space.realized}
        for j in followers:
            counts[space.canonical(opinions[j])] += 1
        return cls(counts)


def post_payoff(agent_opinion: float, candidate: float, audience: AudienceProfile, w: UtilityWeights) -> float:
    """Own-post payoff A_c * (w_pop + w_align [c = b_i] - w_dist |b_i - c| [c != b_i])."""
    likes = audience.of(candidate)
    if candidate == agent_opinion:
        return likes * (w.w_pop + w.w_align)
    return likes * (w.w_pop - w.w_dist * abs(agent_opinion - candidate))


@dataclass(frozen=True)
class BestResponse:
    options: tuple[float, ...]
    payoff: float
    authentic: float

    @property
    def is_authentic(self) -> bool:
        return self.authentic in self.options

    @property
    def is_tie(self) -> bool:
        return not self.is_authentic and len(self.options) > 1


def _close(x: float, y: float, rel_tol: float) -> bool:
    return math.isclose(x, y, rel_tol=rel_tol, abs_tol=0.0) or x == y


def best_response(agent_opinion: float, audience: AudienceProfile, w: UtilityWeights,
                  rel_tol: float = REL_TOL) -> BestResponse:
    """All payoff-maximising realized posts, in ascending order.

    Payoffs within ``rel_tol`` of the maximum count as tied. The authentic
    opinion is kept whenever it weakly dominates.
    """
    if not any(c > 0 for c in audience.counts.values()):
        raise EmptyAudience("agent has no followers")
    candidates = sorted(audience.counts)
    if agent_opinion not in audience.counts:
        raise UnknownOpinion(f"{agent_opinion!r} is not a realized opinion")
    payoffs = {c: post_payoff(agent_opinion, c, audience, w) for c in candidates}
    best = max(payoffs.values())
    options = tuple(c for c in candidates if _close(payoffs[c], best, rel_tol))
    return BestResponse(options, best, agent_opinion)


def _weights_for(weights, n: int) -> tuple[UtilityWeights, ...]:
    if isinstance(weights, UtilityWeights):
        return (weights,) * n
    weights = tuple(weights)
    if len(weights) != n:
        raise ValueError(f"expected {n} weight records, got {len(weights)}")
    return weights


def audiences_for(society: Society, space: OpinionSpace, exposure) -> list[AudienceProfile]:
    check_exposure(exposure, society.n)
    opinions = society.agent_opinions()
    if isinstance(exposure, Representative):
        shared = AudienceProfile.representative(exposure.density_a, society, space)
        return [shared] * society.n
    if isinstance(exposure, ExplicitNetwork):
        return [AudienceProfile.from_followers(exposure.followers[i], opinions, space) for i in range(society.n)]
    raise TypeError(f"equilibrium_posts supports Representative and ExplicitNetwork exposure, not {type(exposure).__name__}")


def best_responses(society: Society, space: OpinionSpace, weights, exposure,
                   audiences: Sequence[AudienceProfile] | None = None) -> list[BestResponse]:
    society.check_against(space)
    opinions = society.agent_opinions()
    ws = _weights_for(weights, society.n)
    if audiences is None:
        audiences = audiences_for(society, space, exposure)
    cache: dict = {}
    out = []
    for i, b_i in enumerate(opinions):
        key = (b_i, ws[i], id(audiences[i]))
        if key not in cache:
            cache[key] = best_response(b_i, audiences[i], ws[i])
        out.append(cache[key])
    return out


def equilibrium_sets(society: Society, space: OpinionSpace, weights, exposure) -> list[tuple[float, ...]]:
    """Per-agent equilibrium post sets; the equilibrium profiles are their Cartesian product."""
    return [br.options for br in best_responses(society, space, weights, exposure)]


def resolve_posts(responses: Sequence[BestResponse], strict_ties: bool = True) -> PostProfile:
    """Pick one post per agent.

    Authentic wins whenever it is optimal. Agents sharing the same
    non-authentic tie are split evenly across the tied options in agent-id
    order; an uneven split raises OddIndifferentGroup unless
    ``strict_ties`` is False, in which case the remainder goes to the lowest
    opinions.
    """
    posts: list[float | None] = [None] * len(responses)
    tied: dict[tuple[float, ...], list[int]] = defaultdict(list)
    for i, br in enumerate(responses):
        if br.is_authentic:
            posts[i] = br.authentic
        elif len(br.options) == 1:
            posts[i] = br.options[0]
        else:
            tied[br.options].append(i)

    log = []
    for options in sorted(tied):
        members = sorted(tied[options])
        q, r = divmod(len(members), len(options))
        if r and strict_ties:
            raise OddIndifferentGroup(
                f"{len(members)} agents tied over {options} cannot be split evenly"
            )
        pos = 0
        for slot, option in enumerate(options):
            share = q + (1 if slot < r else 0)
            for agent in members[pos:pos + share]:
                posts[agent] = option
                log.append(TieBreak(agent, options, option))
            pos += share
    log.sort(key=lambda t: t.agent)
    return PostProfile(tuple(posts), tuple(log))


def summarize(posts: Sequence[float], society: Society, space: OpinionSpace,
              audiences: Sequence[AudienceProfile]) -> EquilibriumSummary:
    sizes = {m: 0 for m in space.realized}
    for c in posts:
        sizes[c] += 1
    likes = tuple(audiences[i].of(c) for i, c in enumerate(posts))
    order = None
    realized = space.realized
    if tuple(sorted(-v for v in realized)) == realized or 0.0 in realized:
        order = compare_polarization(sizes.get(0.0, 0), society.size_of(0.0))
    return EquilibriumSummary(sizes, likes, order)


def equilibrium_posts(society: Society, space: OpinionSpace, weights, exposure,
                      strict_ties: bool = True) -> tuple[PostProfile, EquilibriumSummary]:
    """Equilibrium posts, platform group sizes, like counts and polarization order."""
    audiences = audiences_for(society, space, exposure)
    responses = best_responses(society, space, weights, exposure, audiences)
    profile = resolve_posts(responses, strict_ties)
    profile.check_realized(space)
    return profile, summarize(profile.posts, society, space, audiences)


def scenario_equilibrium(s, strict_ties: bool = True) -> tuple[PostProfile, EquilibriumSummary]:
    """Equilibrium of a three-opinion scenario under representative exposure."""
    return equilibrium_posts(s.society(), s.space(), s.weights, s.exposure(), strict_ties)
