"""Brute-force equilibrium verification on small explicit networks.

Every post profile over the realized opinions plus one off-menu probe is
enumerated. Reactions are re-derived for each profile, and a profile is kept
when no single agent gains strictly by changing their post. The result is
independent of the per-agent best-response shortcut in the engine, which
makes it a useful cross-check.
"""

from __future__ import annotations

import configparser
import itertools
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

import numpy as np

from .core import (
    BudgetExceeded,
    ExplicitNetwork,
    OpinionSpace,
    Society,
    ThreeOpinionScenario,
    UtilityWeights,
    validate_scenario,
)
from .equilibrium import equilibrium_sets, scenario_equilibrium

DEFAULT_MAX_AGENTS = 8
DEFAULT_MAX_EVALUATIONS = 2_000_000
TOL = 1e-12


@dataclass(frozen=True)
class ExplicitInstance:
    """``followers[i]`` is the audience of agent i (agents who see i's post)."""

    opinions: tuple[float, ...]
    followers: tuple[frozenset[int], ...]
    weights: tuple[UtilityWeights, ...]

    def __post_init__(self):
        object.__setattr__(self, "opinions", tuple(float(v) for v in self.opinions))
        object.__setattr__(self, "followers", tuple(frozenset(f) for f in self.followers))
        w = self.weights
        if isinstance(w, UtilityWeights):
            w = (w,) * len(self.opinions)
        object.__setattr__(self, "weights", tuple(w))
        if not (len(self.opinions) == len(self.followers) == len(self.weights)):
            raise ValueError("opinions, followers and weights must have one entry per agent")
        ExplicitNetwork(tuple(sorted(f) for f in self.followers))  # validates follower sets

    @property
    def n(self) -> int:
        return len(self.opinions)

    def space(self) -> OpinionSpace:
        b = max(abs(v) for v in self.opinions) or 1.0
        return OpinionSpace(b, tuple(sorted(set(self.opinions))))

    def society(self) -> Society:
        return Society.from_opinions(self.opinions)

    def network(self) -> ExplicitNetwork:
        return ExplicitNetwork(tuple(tuple(sorted(f)) for f in self.followers))

    def exposure_sets(self) -> tuple[frozenset[int], ...]:
        return self.network().exposure_sets()


def default_reactions(instance: ExplicitInstance, posts: Sequence[float]) -> dict[tuple[int, int], int]:
    """r[(j, i)] = 1 when follower j likes i's post."""
    return {(j, i): int(posts[i] == instance.opinions[j])
            for i in range(instance.n) for j in instance.followers[i]}


def full_utility(instance: ExplicitInstance, posts: Sequence[float],
                 reactions: dict[tuple[int, int], int] | None = None) -> list[float]:
    """Utility of every agent given posts and (by default) optimal reactions."""
    if reactions is None:
        reactions = default_reactions(instance, posts)
    n = instance.n
    likes = [0] * n
    for (j, i), r in reactions.items():
        likes[i] += r
    out = []
    for i, sees in enumerate(instance.exposure_sets()):
        w, b = instance.weights[i], instance.opinions[i]
        u = w.baseline + w.w_pop * likes[i]
        for j in sorted(sees):
            if posts[j] == b:
                u += w.w_align * likes[j]
            else:
                u -= w.w_dist * likes[j] * abs(b - posts[j])
        out.append(u)
    return out


@dataclass(frozen=True)
class EnumerationResult:
    profiles: frozenset[tuple[float, ...]]
    menu: tuple[float, ...]
    probe: float
    profiles_checked: int
    probe_in_retained: bool
    reaction_violations: tuple[tuple, ...]

    @property
    def checks_pass(self) -> bool:
        return not self.probe_in_retained and not self.reaction_violations


def check_budget(n: int, menu_size: int, max_agents: int = DEFAULT_MAX_AGENTS,
                 max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> None:
    cost = n * menu_size ** n
    if n > max_agents or cost > max_evaluations:
        raise BudgetExceeded(
            f"n={n} with {menu_size} candidate posts needs {cost} evaluations "
            f"(limits: n <= {max_agents}, {max_evaluations} evaluations)"
        )


def _utility_table(instance: ExplicitInstance, menu: np.ndarray, digits: np.ndarray) -> np.ndarray:
    n = instance.n
    b = np.array(instance.opinions)
    posts = menu[digits]  # (P, n)
    likes = np.zeros(posts.shape)
    for i in range(n):
        for j in instance.followers[i]:
            likes[:, i] += posts[:, i] == b[j]
    u = np.empty(posts.shape)
    for i, sees in enumerate(instance.exposure_sets()):
        w = instance.weights[i]
        idx = sorted(sees)
        seen_posts, seen_likes = posts[:, idx], likes[:, idx]
        match = seen_posts == b[i]
        aligned = (seen_likes * match).sum(axis=1)
        misaligned = (seen_likes * np.abs(b[i] - seen_posts) * ~match).sum(axis=1)
        u[:, i] = w.baseline + w.w_pop * likes[:, i] + w.w_align * aligned - w.w_dist * misaligned
    return u


def _stable(u: np.ndarray, digits: np.ndarray, m: int, rows: np.ndarray) -> np.ndarray:
    n = digits.shape[1]
    ok = np.ones(len(rows), dtype=bool)
    for i in range(n):
        stride = m ** i
        base = rows - digits[rows, i] * stride
        current = u[rows, i]
        scale = np.maximum(1.0, np.abs(current))
        for alt in range(m):
            ok &= u[base + alt * stride, i] <= current + TOL * scale
    return ok


def reaction_flip_violations(instance: ExplicitInstance, posts: Sequence[float]) -> list[tuple]:
    """Single reaction flips that strictly help the reacting follower."""
    base_r = default_reactions(instance, posts)
    base_u = full_utility(instance, posts, base_r)
    bad = []
    for key in base_r:
        flipped = dict(base_r)
        flipped[key] = 1 - flipped[key]
        j = key[0]
        if full_utility(instance, posts, flipped)[j] > base_u[j]:
            bad.append((tuple(posts), key))
    return bad


def enumerate_equilibria(instance: ExplicitInstance, max_agents: int = DEFAULT_MAX_AGENTS,
                         max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
                         threads: int = 1) -> EnumerationResult:
    space = instance.space()
    probe = space.off_menu_probe()
    menu = np.array(space.realized + (probe,))
    m, n = len(menu), instance.n
    check_budget(n, m, max_agents, max_evaluations)
    total = m ** n
    # digit i of a profile index is agent i's menu position
    idx = np.arange(total)
    digits = np.stack([(idx // m ** i) % m for i in range(n)], axis=1)
    u = _utility_table(instance, menu, digits)

    chunks = np.array_split(idx, max(1, threads))
    if threads <= 1:
        masks = [_stable(u, digits, m, chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            masks = list(pool.map(lambda rows: _stable(u, digits, m, rows), chunks))
    kept_rows = np.concatenate([rows[mask] for rows, mask in zip(chunks, masks)])

    profiles = frozenset(tuple(float(v) for v in menu[digits[r]]) for r in kept_rows)
    probe_in = any(probe in p for p in profiles)
    violations = []
    for p in sorted(profiles):
        violations.extend(reaction_flip_violations(instance, p))
    return EnumerationResult(profiles, tuple(float(v) for v in menu), float(probe), total,
                             probe_in, tuple(violations))


def engine_profiles(instance: ExplicitInstance) -> frozenset[tuple[float, ...]]:
    """Cartesian product of the engine's per-agent equilibrium post sets."""
    sets = equilibrium_sets(instance.society(), instance.space(), instance.weights, instance.network())
    return frozenset(itertools.product(*sets))


# -- random instances ---------------------------------------------------------

DYADIC_WEIGHTS = (0.5, 1.0, 2.0, 3.0)


def random_instance(rng: random.Random, max_n: int = 6, max_opinions: int = 3,
                    heterogeneous_weights: bool = True) -> ExplicitInstance:
    """Small instance where every agent has a like-minded follower.

    Weights are dyadic so that payoff ties are exact.
    """
    k = rng.randint(1, max_opinions)
    n = rng.randint(max(2, 2 * k), max_n)
    values = sorted(rng.sample((-1.0, 0.0, 1.0), k)) if k < 3 else [-1.0, 0.0, 1.0]
    # every group gets at least two members
    opinions = [v for v in values for _ in range(2)]
    opinions += [rng.choice(values) for _ in range(n - len(opinions))]
    rng.shuffle(opinions)
    followers = []
    for i in range(n):
        same = [j for j in range(n) if j != i and opinions[j] == opinions[i]]
        fs = {rng.choice(same)}
        fs |= {j for j in range(n) if j != i and rng.random() < 0.5}
        followers.append(frozenset(fs))

    def draw():
        return UtilityWeights(*(rng.choice(DYADIC_WEIGHTS) for _ in range(3)))

    weights = tuple(draw() for _ in range(n)) if heterogeneous_weights else draw()
    return ExplicitInstance(tuple(opinions), tuple(followers), weights)


# -- cross validation -----------------------------------------------------------


def round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def downscale(s: ThreeOpinionScenario, small_n: int) -> ExplicitInstance:
    """Explicit instance with ``small_n`` agents mimicking scenario ``s``.

    Each side keeps ``round_half_up(G_side * small_n / n)`` members and the
    rest are neutral. Agent i's audience of opinion m is
    ``clamp(round_half_up(a * G'_m), 1, G'_m - [b_i = m])``, where G'_m is
    the downscaled group size, filled by the lowest agent ids of that group.
    """
    validate_scenario(s)
    b = s.intensity_b
    side = min(round_half_up(s.g_side * small_n / s.n), small_n // 2)
    sizes = {-b: side, 0.0: small_n - 2 * side, b: side}
    opinions = [v for v in (-b, 0.0, b) for _ in range(sizes[v])]
    members = {v: [i for i, o in enumerate(opinions) if o == v] for v in sizes}
    followers = []
    for i, own in enumerate(opinions):
        fs: list[int] = []
        for v, ids in members.items():
            pool = [j for j in ids if j != i]
            if not pool:
                continue
            want = min(max(round_half_up(s.density_a * sizes[v]), 1), len(pool))
            fs.extend(pool[:want])
        followers.append(frozenset(fs))
    return ExplicitInstance(tuple(opinions), tuple(followers), s.weights)


@dataclass(frozen=True)
class Mismatch:
    profile: tuple[float, ...]
    agent: int
    deviation: float
    source: str  # which side retained the profile


@dataclass(frozen=True)
class CrossValidationReport:
    instance: ExplicitInstance
    engine: frozenset[tuple[float, ...]]
    oracle: EnumerationResult
    mismatches: tuple[Mismatch, ...]
    scenario_direction: int  # sign of C0 - G0 in the full scenario
    downscaled_directions: tuple[int, ...]

    @property
    def agree(self) -> bool:
        return self.engine == self.oracle.profiles and self.oracle.checks_pass

    @property
    def kind_preserved(self) -> bool:
        """Whether the downscaled equilibria deviate in the same direction as the scenario."""
        return set(self.downscaled_directions) == {self.scenario_direction}


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _explain(instance: ExplicitInstance, profile: tuple[float, ...], menu: Iterable[float], source: str) -> Mismatch:
    base = full_utility(instance, profile)
    for i in range(instance.n):
        for c in menu:
            alt = list(profile)
            alt[i] = c
            if full_utility(instance, alt)[i] > base[i] + TOL * max(1.0, abs(base[i])):
                return Mismatch(profile, i, float(c), source)
    return Mismatch(profile, -1, math.nan, source)


def cross_validate(s: ThreeOpinionScenario, small_n: int, max_agents: int = DEFAULT_MAX_AGENTS,
                   max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> CrossValidationReport:
    validate_scenario(s)
    instance = downscale(s, small_n)
    check_budget(instance.n, len(instance.space().realized) + 1, max_agents, max_evaluations)
    oracle = enumerate_equilibria(instance, max_agents, max_evaluations)
    engine = engine_profiles(instance)
    mismatches = [_explain(instance, p, oracle.menu, "engine") for p in sorted(engine - oracle.profiles)]
    mismatches += [_explain(instance, p, oracle.menu, "oracle") for p in sorted(oracle.profiles - engine)]
    _, summary = scenario_equilibrium(s, strict_ties=False)
    g0_small = sum(1 for v in instance.opinions if v == 0.0)
    directions = tuple(sorted({_sign(sum(1 for v in p if v == 0.0) - g0_small) for p in engine}))
    return CrossValidationReport(instance, engine, oracle, tuple(mismatches),
                                 _sign(summary.size(0.0) - s.g0), directions)


# -- golden fixtures ------------------------------------------------------------


@dataclass(frozen=True)
class Fixture:
    name: str
    instance: ExplicitInstance
    equilibria: frozenset[tuple[float, ...]] | None
    profile: tuple[float, ...] | None = None
    utilities: tuple[float, ...] | None = None


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split())


def parse_fixtures(text: str) -> list[Fixture]:
    """Parse ``[instance NAME]`` blocks.

    Keys: opinions, followers (audiences separated by ``|``, ``-`` for none),
    w_pop, w_align, w_dist (one value or one per agent), optional baseline,
    equilibria (profiles separated by ``;``), profile and utilities.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    out = []
    for section in cp.sections():
        if not section.startswith("instance "):
            raise ValueError(f"unexpected section [{section}]")
        sec = cp[section]
        known = {"opinions", "followers", "w_pop", "w_align", "w_dist", "baseline",
                 "equilibria", "profile", "utilities"}
        unknown = set(sec) - known
        if unknown:
            raise ValueError(f"[{section}]: unknown keys {sorted(unknown)}")
        opinions = _floats(sec["opinions"])
        n = len(opinions)
        followers = []
        for part in sec["followers"].split("|"):
            part = part.strip()
            followers.append(frozenset() if part == "-" else frozenset(int(x) for x in part.split()))

        def per_agent(key, default=None):
            if key not in sec:
                return (default,) * n
            vals = _floats(sec[key])
            return vals * n if len(vals) == 1 else vals

        cols = zip(per_agent("w_pop"), per_agent("w_align"), per_agent("w_dist"), per_agent("baseline", 0.0))
        weights = tuple(UtilityWeights(*c) for c in cols)
        eq = None
        if "equilibria" in sec:
            raw = sec["equilibria"].strip()
            eq = frozenset() if raw == "-" else frozenset(_floats(p) for p in raw.split(";"))
        profile = _floats(sec["profile"]) if "profile" in sec else None
        utilities = _floats(sec["utilities"]) if "utilities" in sec else None
        out.append(Fixture(section[len("instance "):], ExplicitInstance(opinions, tuple(followers), weights),
                           eq, profile, utilities))
    return out
