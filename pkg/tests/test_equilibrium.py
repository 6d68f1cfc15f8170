import pytest
from hypothesis import given, strategies as st

from popsim.core import (
    EmptyAudience,
    ExplicitNetwork,
    OddIndifferentGroup,
    OpinionSpace,
    PolarizationOrder,
    Representative,
    Society,
    UnknownOpinion,
    UtilityWeights,
    build_scenario,
)
from popsim.equilibrium import (
    AudienceProfile,
    Reaction,
    best_response,
    equilibrium_posts,
    post_payoff,
    reaction,
    scenario_equilibrium,
)

BASE = UtilityWeights(2, 1, 1)


def scenario(g0, **kw):
    params = dict(n=100, g0=g0, w_pop=2, w_align=1, w_dist=1, intensity_b=1.0, density_a=0.25)
    params.update(kw)
    return build_scenario(**params)


def test_reaction_is_exact_match():
    assert reaction(1.0, 1.0) is Reaction.LIKE
    assert reaction(0.0, 1.0) is Reaction.NO_REACTION


def test_post_payoff_structure():
    aud = AudienceProfile({-1.0: 10.0, 0.0: 4.0, 1.0: 10.0})
    assert post_payoff(0.0, 0.0, aud, BASE) == 12.0
    assert post_payoff(0.0, 1.0, aud, BASE) == 10.0
    assert post_payoff(1.0, -1.0, aud, BASE) == 0.0


def test_best_response_deviates_to_larger_audience():
    aud = AudienceProfile({-1.0: 10.0, 0.0: 2.0, 1.0: 10.0})
    br = best_response(0.0, aud, BASE)
    assert br.options == (-1.0, 1.0)
    assert br.is_tie and not br.is_authentic


def test_best_response_keeps_authentic_on_exact_tie():
    # (2 + 1) * 2 == (2 - 1) * 6
    aud = AudienceProfile({-1.0: 6.0, 0.0: 2.0, 1.0: 6.0})
    br = best_response(0.0, aud, BASE)
    assert br.is_authentic
    assert 0.0 in br.options


def test_best_response_errors():
    with pytest.raises(EmptyAudience):
        best_response(0.0, AudienceProfile({0.0: 0, 1.0: 0}), BASE)
    with pytest.raises(UnknownOpinion):
        best_response(0.5, AudienceProfile({0.0: 1, 1.0: 1}), BASE)


@pytest.mark.parametrize("g0, expected", [(10, (50, 0, 50)), (40, (30, 40, 30)), (70, (0, 100, 0))])
def test_scenario_equilibrium_sizes(g0, expected):
    _, summary = scenario_equilibrium(scenario(g0))
    assert summary.three_way(1.0) == expected


def test_neutral_split_is_even_and_logged():
    profile, summary = scenario_equilibrium(scenario(10))
    assert len(profile.tie_break_log) == 10
    assert summary.polarization_order is PolarizationOrder.MORE_POLARIZED
    resolved = [t.resolution for t in profile.tie_break_log]
    assert resolved.count(-1.0) == resolved.count(1.0) == 5


def test_uneven_tie_group_raises_or_splits():
    opinions = (-1.0, -1.0, 0.0, 1.0, 1.0)
    society = Society.from_opinions(opinions)
    space = OpinionSpace(1.0, (-1.0, 0.0, 1.0))
    followers = [[j for j in range(5) if j != i] for i in range(5)]
    net = ExplicitNetwork(followers)
    with pytest.raises(OddIndifferentGroup):
        equilibrium_posts(society, space, BASE, net)
    profile, _ = equilibrium_posts(society, space, BASE, net, strict_ties=False)
    assert profile.posts[2] == -1.0


def test_explicit_and_representative_agree_on_matched_audiences():
    # complete graph on (2, 2, 2): everyone keeps their own opinion
    opinions = (-1.0, -1.0, 0.0, 0.0, 1.0, 1.0)
    society = Society.from_opinions(opinions)
    space = OpinionSpace(1.0, (-1.0, 0.0, 1.0))
    net = ExplicitNetwork([[j for j in range(6) if j != i] for i in range(6)])
    profile, _ = equilibrium_posts(society, space, BASE, net)
    assert profile.posts == opinions
    rep_profile, _ = equilibrium_posts(Society(6, {-1.0: 2, 0.0: 2, 1.0: 2}), space, BASE, Representative(0.5))
    assert rep_profile.posts == opinions


@given(st.sampled_from([0.5, 1.0, 2.0, 3.0]), st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from([0.5, 1.0, 2.0]),
       st.integers(0, 50).map(lambda x: 2 * x))
def test_posts_always_realized(wp, wa, wd, g0):
    s = build_scenario(n=100, g0=g0, w_pop=wp, w_align=wa, w_dist=wd, intensity_b=1.0, density_a=0.3)
    if 3 * g0 == 100:
        return
    profile, summary = scenario_equilibrium(s, strict_ties=False)
    assert all(p in s.space() for p in profile.posts)
    assert sum(summary.platform_sizes.values()) == 100
