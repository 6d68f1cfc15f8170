"""Acceptance criteria, one check per criterion at its stated tolerance.

Run under pytest, or directly with ``python3 tests/test_acceptance.py``.
Each check prints a single PASS/FAIL line.
"""

import io
import random
import tempfile
import time
from pathlib import Path

import pytest

from popsim.algorithms import AlgorithmConfig, AlgorithmKind, cap_bound, compare_algorithms, equilibrium_under
from popsim.analytics import (
    EquilibriumKind,
    UtilityRegion,
    classify_regime,
    d_star,
    d_thresholds_high,
    g0_thresholds,
    opinion_gap,
)
from popsim.cli import main
from popsim.core import ConsistencyFailure, UtilityWeights, build_scenario
from popsim.equilibrium import scenario_equilibrium
from popsim.oracle import engine_profiles, enumerate_equilibria, random_instance
from popsim.welfare import aggregate_welfare

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RA, PVM = AlgorithmKind.RA, AlgorithmKind.PVM
EVEN_G0 = range(0, 101, 2)


def make(g0, wp=2.0, wa=1.0, wd=1.0, b=1.0, a=0.25, n=100):
    return build_scenario(n=n, g0=g0, w_pop=wp, w_align=wa, w_dist=wd, intensity_b=b, density_a=a)


def close(x, y, tol):
    return abs(x - y) <= tol


def rel_err(x, y):
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


def check_1():
    start = time.perf_counter()
    g_star, g_ss = g0_thresholds(UtilityWeights(2, 1, 1), 1.0, 100)
    bad = []
    for g0 in EVEN_G0:
        c0 = scenario_equilibrium(make(g0))[1].size(0.0)
        expected = 0 if g0 <= 14 else g0 if g0 <= 60 else 100
        if c0 != expected:
            bad.append((g0, c0, expected))
    elapsed = time.perf_counter() - start
    ok = close(g_star.value, 100 / 7, 1e-9) and g_ss.value == 60 and not bad and elapsed < 1.0
    return ok, f"G0*={g_star.value!r} G0**={g_ss.value!r} sweep_mismatches={bad} runtime={elapsed:.3f}s"


def check_2():
    problems = []
    expected = {
        0.1: dict(d0=0.9444, auth=(-24.0, -55.75), eq_neutral=-60.75, eq_opin=-27.0),
        0.4: dict(d0=0.2444, auth=(-600.0, -940.0), eq_neutral=-1053.0, eq_opin=-648.0),
    }
    for a, want in expected.items():
        s = make(10, wp=3, wd=1.5, a=a)
        ds = d_star(s).value
        d0 = d_thresholds_high(s)[0].value
        pt = aggregate_welfare(s).per_type
        got = dict(
            auth=(pt.opinionated.delta_auth, pt.neutral.delta_auth),
            eq_neutral=pt.neutral.delta_eq,
            eq_opin=pt.opinionated.delta_eq,
        )
        if not close(ds, 19 / 9, 1e-6):
            problems.append(f"a={a} D*={ds!r}")
        if not close(d0, want["d0"], 1e-3):
            problems.append(f"a={a} D0high={d0!r}")
        for key in ("auth", "eq_neutral", "eq_opin"):
            if got[key] != want[key]:
                problems.append(f"a={a} {key}={got[key]!r}")
        if classify_regime(s).utility_region is not UtilityRegion.ALL_WORSE:
            problems.append(f"a={a} region={classify_regime(s).utility_region}")
    return not problems, "all values reproduced" if not problems else "; ".join(problems)


def check_3():
    rng = random.Random(20261014)
    violations = draws = 0
    while draws < 200:
        wp, wa, wd, b = rng.uniform(0.05, 10), rng.uniform(0.05, 10), rng.uniform(0.05, 10), rng.uniform(0.05, 2)
        if wp <= wd * b:
            continue
        draws += 1
        g_neutral, g_opin, _ = opinion_gap(UtilityWeights(wp, wa, wd), b, 100)
        violations += not g_neutral < g_opin
    return violations == 0, f"draws={draws} violations={violations}"


def check_4():
    points = worst = failures = 0
    kinds = {}
    for g0 in EVEN_G0:
        for d in [0.05 + 0.25 * i for i in range(12)]:
            for a in (0.05, 0.3, 0.6, 0.9):
                s = make(g0, wp=3.0, wd=d, a=a)
                points += 1
                try:
                    rep = aggregate_welfare(s)
                except ConsistencyFailure:
                    failures += 1
                    continue
                kinds[rep.kind.value] = kinds.get(rep.kind.value, 0) + 1
                err = rel_err(rep.delta_w, rep.delta_w_closed)
                worst = max(worst, err)
                failures += err > 1e-9
    both = kinds.get(EquilibriumKind.PE_HIGH_POL.value, 0) > 0 and kinds.get(EquilibriumKind.PE_LOW_POL.value, 0) > 0
    ok = points >= 1000 and failures == 0 and both
    return ok, f"points={points} kinds={dict(sorted(kinds.items()))} max_rel_err={worst:.3g}"


def check_5():
    points = failures = 0
    worst = 0.0
    example = None
    for g0 in range(36, 101, 2):
        for d in (0.1, 0.5, 1.0):
            for a in (0.1, 0.5, 0.9):
                s = make(g0, wp=5.0, wd=d, a=a)
                if classify_regime(s).equilibrium_kind is not EquilibriumKind.PE_LOW_POL:
                    continue
                points += 1
                got = aggregate_welfare(s).per_type.neutral.strategic
                stated = d * a ** 2 * (s.n - g0) ** 2 / 2
                err = rel_err(got, stated)
                if err > 1e-12:
                    failures += 1
                    if err > worst:
                        worst, example = err, (g0, d, a, got, stated)
    detail = f"points={points} mismatches={failures} max_rel_err={worst:.3g}"
    if example:
        detail += " e.g. (G0, D, a)=({}, {}, {}) computed={!r} stated={!r}".format(*example)
    return points > 0 and failures == 0, detail


def _deviation_region():
    # high-polarization points with G0 >= 2 where RA moves neutrals off their opinion
    return [g0 for g0 in range(2, 34, 2)
            if equilibrium_under(AlgorithmConfig(RA, 20), make(g0)).size(0.0) < g0]


def check_6a():
    bad = []
    for g0 in EVEN_G0:
        sizes = {tuple(sorted(equilibrium_under(AlgorithmConfig(RA, k), make(g0)).platform_sizes.items()))
                 for k in (5, 20, 60)}
        if len(sizes) != 1:
            bad.append(g0)
    return not bad, f"G0 with cap-dependent RA outcome: {bad}"


def _pvm_authentic(k):
    region = _deviation_region()
    bad = [g0 for g0 in region if equilibrium_under(AlgorithmConfig(PVM, k), make(g0)).size(0.0) != g0]
    return not bad and bool(region), f"region={region} PVM k={k} deviates at G0={bad}"


def check_6b():
    return _pvm_authentic(5)


def check_6c():
    return _pvm_authentic(20)


def check_6d():
    tested, bad = [], []
    for g0 in _deviation_region():
        if 60 > cap_bound(make(g0)):
            tested.append(g0)
            if equilibrium_under(AlgorithmConfig(PVM, 60), make(g0)).size(0.0) >= g0:
                bad.append(g0)
    return not bad and bool(tested), f"above-cap points={tested} PVM k=60 authentic at G0={bad}"


def check_6e():
    bad = [(g0, k) for g0 in EVEN_G0 for k in (5, 20, 60) if not compare_algorithms(make(g0), k).consistent]
    return not bad, f"points={len(EVEN_G0) * 3} inconsistent={bad}"


def check_7():
    rng = random.Random(0)
    start = time.perf_counter()
    mismatches = failed_checks = 0
    count = 500
    for _ in range(count):
        inst = random_instance(rng, max_n=6, max_opinions=3)
        res = enumerate_equilibria(inst)
        mismatches += res.profiles != engine_profiles(inst)
        failed_checks += not res.checks_pass
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and failed_checks == 0 and elapsed < 60
    return ok, f"instances={count} mismatches={mismatches} failed_checks={failed_checks} runtime={elapsed:.2f}s"


CLI_RUNS = [
    ("equilibrium", "posting_sweep.ini"),
    ("thresholds", "trap_a01.ini"),
    ("sweep", "posting_sweep.ini"),
    ("sweep", "authentic_b01.ini"),
    ("algorithms", "algorithms.ini"),
    ("verify", "verify.ini"),
]


def check_8():
    bad = []
    with tempfile.TemporaryDirectory() as tmp:
        for command, config in CLI_RUNS:
            outputs = []
            for i, threads in enumerate(("1", "8", "1", "8")):
                out = Path(tmp) / f"{command}_{i}.csv"
                code = main([command, "--config", str(CONFIGS / config), "--threads", threads, "--out", str(out)],
                            stdout=io.StringIO())
                outputs.append(out.read_bytes() if code == 0 else None)
            if None in outputs or len(set(outputs)) != 1:
                bad.append(f"{command}:{config}")
    return not bad, f"runs={len(CLI_RUNS)} differing={bad}"


CRITERIA = [
    ("1", "threshold reproduction", check_1),
    ("2", "trap example reproduction", check_2),
    ("3", "neutral gap below opinionated gap", check_3),
    ("4", "dual-path welfare identity", check_4),
    ("5", "low-polarization neutral strategic effect", check_5),
    ("6a", "RA invariant in cap", check_6a),
    ("6b", "PVM k=5 keeps posting authentic", check_6b),
    ("6c", "PVM k=20 keeps posting authentic", check_6c),
    ("6d", "PVM k=60 restores deviation", check_6d),
    ("6e", "comparison verdict matches conditions", check_6e),
    ("7", "oracle equivalence", check_7),
    ("8", "thread determinism", check_8),
]


def report(cid, title, fn):
    ok, detail = fn()
    print(f"{'PASS' if ok else 'FAIL'} criterion {cid} ({title}): {detail}")
    return ok, detail


@pytest.mark.parametrize("cid, title, fn", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(cid, title, fn, capsys):
    with capsys.disabled():
        print()
        ok, detail = report(cid, title, fn)
    assert ok, detail


if __name__ == "__main__":
    results = [report(*c)[0] for c in CRITERIA]
    raise SystemExit(0 if all(results) else 1)
