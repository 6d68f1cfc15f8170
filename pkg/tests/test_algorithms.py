import pytest
from hypothesis import given, strategies as st

from popsim.algorithms import (
    ALGORITHM_COLUMNS,
    AlgorithmConfig,
    AlgorithmKind,
    algorithm_csv,
    algorithm_sweep,
    compare_algorithms,
    equilibrium_under,
    experimental_pvm_utilities,
    likes_under,
)
from popsim.core import Society, UnknownOpinion, WrongRegime, build_scenario

RA, PVM = AlgorithmKind.RA, AlgorithmKind.PVM


def base(g0, **kw):
    params = dict(n=100, g0=g0, w_pop=2, w_align=1, w_dist=1, intensity_b=1.0, density_a=0.25)
    params.update(kw)
    return build_scenario(**params)


def c0(kind, k, g0):
    return equilibrium_under(AlgorithmConfig(kind, k), base(g0)).size(0.0)


def test_like_counts():
    society = Society(100, {-1.0: 45, 0.0: 10, 1.0: 45})
    assert likes_under(AlgorithmConfig(PVM, 5), 0.0, society) == 5
    assert likes_under(AlgorithmConfig(PVM, 60), 0.0, society) == 10
    assert likes_under(AlgorithmConfig(RA, 60), 1.0, Society(100, {0.0: 50, 1.0: 50})) == 30
    with pytest.raises(UnknownOpinion):
        likes_under(AlgorithmConfig(RA, 5), 0.5, society)


def test_config_validation():
    with pytest.raises(ValueError):
        AlgorithmConfig(RA, 0)
    assert AlgorithmConfig("PVM", 3).kind is PVM


def test_cap_examples():
    assert c0(RA, 20, 10) == 0
    assert c0(PVM, 5, 10) == 10
    assert c0(PVM, 60, 10) == 0


def test_knife_edge():
    with pytest.raises(WrongRegime):
        equilibrium_under(AlgorithmConfig(RA, 5), base(30, n=90))


def test_compare_examples():
    high = compare_algorithms(base(10), 20)
    assert (high.c0_ra, high.c0_pvm, high.strict) == (0, 10, True)
    low = compare_algorithms(base(70), 20)
    assert (low.c0_ra, low.c0_pvm, low.strict) == (100, 70, True)
    assert low.conditions[1].rhs == 45.0
    none = compare_algorithms(base(20), 20)
    assert none.c0_ra == none.c0_pvm and not none.strict


@given(st.integers(0, 50).map(lambda x: 2 * x), st.integers(1, 100))
def test_verdict_matches_iff_conditions(g0, k):
    assert compare_algorithms(base(g0), k).consistent


@given(st.integers(0, 50).map(lambda x: 2 * x), st.integers(1, 100), st.integers(1, 100))
def test_ra_invariant_in_cap(g0, k1, k2):
    s = base(g0)
    a = equilibrium_under(AlgorithmConfig(RA, k1), s)
    b = equilibrium_under(AlgorithmConfig(RA, k2), s)
    assert a.platform_sizes == b.platform_sizes


@pytest.mark.parametrize("g0", range(2, 100, 2))
def test_pvm_below_min_group_is_authentic(g0):
    s = base(g0)
    k = min(s.society().group_sizes.values())
    assert equilibrium_under(AlgorithmConfig(PVM, k), s).size(0.0) == g0


@pytest.mark.parametrize("g0", range(0, 101, 2))
def test_pvm_full_cap_matches_ra(g0):
    s = base(g0)
    assert (equilibrium_under(AlgorithmConfig(PVM, 100), s).platform_sizes
            == equilibrium_under(AlgorithmConfig(RA, 100), s).platform_sizes)


def test_sweep_rows_and_csv():
    rows = algorithm_sweep(base(10), [10, 11], [5], [PVM])
    assert rows[0] == [10, 5, "PVM", 45, 10, 45, "none"]
    assert rows[1][-1] == "error:OddNeutralGroup"
    text = algorithm_csv(rows)
    assert text.splitlines()[0] == ",".join(ALGORITHM_COLUMNS)
    assert text.endswith("\n") and "\r" not in text


def test_sweep_threads_deterministic():
    grid = range(0, 101, 2)
    a = algorithm_csv(algorithm_sweep(base(10), grid, [5, 20, 60], threads=1))
    b = algorithm_csv(algorithm_sweep(base(10), grid, [5, 20, 60], threads=8))
    assert a == b


def test_experimental_pvm_utilities_shape():
    u = experimental_pvm_utilities(base(10), 20)
    # authentic posting under PVM: no cross-type posts in any feed
    assert u["neutral"] == pytest.approx(2 * 10 + 1 * 10 * 10 + 1 * 10)
    assert set(u) == {"neutral", "opinionated"}
