"""Command-line entry point: ``popsim <command> --config FILE``.

Config files are INI-style. ``[scenario]`` holds the scenario fields and
each command reads its own section. Keys must be lowercase snake case and
unknown keys are rejected.

Exit codes: 0 success, 1 verification failure, 2 invalid input or budget
overflow, 3 regime error.
"""

from __future__ import annotations

import argparse
import configparser
import io
import os
import random
import re
import sys
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Callable

from . import algorithms as alg
from . import oracle, welfare
from .analytics import classify_regime, threshold_set
from .core import (
    BudgetExceeded,
    OddIndifferentGroup,
    PopsimError,
    ThreeOpinionScenario,
    ValidationError,
    WrongRegime,
    build_scenario,
    regime_of,
    validate_scenario,
)
from .equilibrium import scenario_equilibrium

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_REGIME = 0, 1, 2, 3

SCENARIO_REQUIRED = ("n", "g0", "w_pop", "w_align", "w_dist", "intensity_b", "density_a")
SCENARIO_OPTIONAL = ("baseline",)
GRID_KEYS = ("grid", "grid_min", "grid_max", "grid_step")
COMMAND_KEYS = {
    "equilibrium": ("strict_ties",),
    "thresholds": (),
    "sweep": ("axis", "table", "strict_ties") + GRID_KEYS,
    "algorithms": ("caps", "algorithms", "strict_ties") + GRID_KEYS,
    "verify": ("instances", "seed", "max_n", "max_opinions", "fixtures", "cross_validate_n",
               "max_agents", "max_evaluations"),
}
SNAKE = re.compile(r"^[a-z][a-z0-9_]*$")


class ConfigError(PopsimError):
    pass


@dataclass
class RunConfig:
    command: str
    scenario: ThreeOpinionScenario | None
    options: dict[str, str] = field(default_factory=dict)
    strict_ties: bool = True
    base_dir: Path = Path(".")

    def get(self, key: str, default=None) -> str | None:
        return self.options.get(key, default)

    def int_opt(self, key: str, default: int) -> int:
        raw = self.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{self.command}] {key} must be an integer, got {raw!r}") from None


def _number(raw: str, key: str):
    try:
        d = Decimal(raw.strip())
    except InvalidOperation:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    return int(d) if d == d.to_integral_value() and "." not in raw and "e" not in raw.lower() else float(d)


def _bool(raw: str, key: str) -> bool:
    v = raw.strip().lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be true or false, got {raw!r}")


def load_config(path: str | Path, command: str, allow_odd_split: bool = False) -> RunConfig:
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None

    for section in cp.sections():
        if section != "scenario" and section not in COMMAND_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        allowed = SCENARIO_REQUIRED + SCENARIO_OPTIONAL if section == "scenario" else COMMAND_KEYS[section]
        for key in cp[section]:
            if not SNAKE.match(key):
                raise ConfigError(f"[{section}] key {key!r} is not lowercase snake case")
            if key not in allowed:
                raise ConfigError(f"[{section}] unknown key {key!r}")

    scenario = None
    if cp.has_section("scenario"):
        sec = cp["scenario"]
        missing = [k for k in SCENARIO_REQUIRED if k not in sec]
        if missing:
            raise ConfigError(f"[scenario] missing keys {missing}")
        vals = {k: _number(sec[k], k) for k in SCENARIO_REQUIRED + SCENARIO_OPTIONAL if k in sec}
        scenario = build_scenario(**vals)
    elif command != "verify":
        raise ConfigError("config has no [scenario] section")

    options = dict(cp[command]) if cp.has_section(command) else {}
    strict = True
    if "strict_ties" in options:
        strict = _bool(options["strict_ties"], "strict_ties")
    if allow_odd_split:
        strict = False
    return RunConfig(command, scenario, options, strict, path.parent)


def grid_values(cfg: RunConfig) -> list:
    if cfg.get("grid") is not None:
        if any(cfg.get(k) is not None for k in GRID_KEYS[1:]):
            raise ConfigError("give either grid or grid_min/grid_max/grid_step, not both")
        return [_number(v, "grid") for v in cfg.get("grid").replace(",", " ").split()]
    try:
        lo, hi, step = (Decimal(cfg.get(k)) for k in GRID_KEYS[1:])
    except TypeError:
        raise ConfigError("grid_min, grid_max and grid_step are required") from None
    except InvalidOperation:
        raise ConfigError("grid bounds must be numbers") from None
    if step <= 0:
        raise ConfigError("grid_step must be positive")
    if lo > hi:
        raise ConfigError("grid_min must not exceed grid_max")
    count = int((hi - lo) / step) + 1
    integral = not any(c in cfg.get(k).lower() for k in GRID_KEYS[1:] for c in ".e")
    return [int(lo + i * step) if integral else float(lo + i * step) for i in range(count)]


def _open_out(path: str | None):
    if path is None:
        return None
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None


def _emit_csv(text: str, out_path: str | None, stdout) -> None:
    fh = _open_out(out_path)
    if fh is None:
        stdout.write(text)
        return
    with fh:
        fh.write(text)


# -- commands -----------------------------------------------------------------


def cmd_equilibrium(cfg: RunConfig, out_path, threads, stdout) -> int:
    s = cfg.scenario
    profile, summary = scenario_equilibrium(s, cfg.strict_ties)
    c = summary.three_way(s.intensity_b)
    order = summary.polarization_order.value if summary.polarization_order else ""
    stdout.write(f"C=({c[0]},{c[1]},{c[2]})\n")
    stdout.write(f"regime = {regime_of(s).value}\npolarization_order = {order}\n")
    stdout.write(f"tie_breaks = {len(profile.tie_break_log)}\n")
    if out_path:
        buf = io.StringIO()
        welfare.write_csv(("c_minus", "c_zero", "c_plus", "regime", "polarization_order"),
                          [[*c, regime_of(s).value, order]], buf)
        _emit_csv(buf.getvalue(), out_path, stdout)
    return EXIT_OK


def cmd_thresholds(cfg: RunConfig, out_path, threads, stdout) -> int:
    s = cfg.scenario
    report = classify_regime(s)
    rows = [(name, t.value, t.status.value) for name, t in threshold_set(s).items()]
    labels = [
        ("regime", regime_of(s).value),
        ("eq_kind", report.equilibrium_kind.value),
        ("utility_region", report.utility_region.value),
        ("welfare_vs_authentic", report.welfare_vs_authentic.value),
    ]
    for name, value, status in rows:
        shown = "undefined" if value is None else repr(value)
        stdout.write(f"{name} = {shown}" + ("" if status == "ok" else f" [{status}]") + "\n")
    for name, value in labels:
        stdout.write(f"{name} = {value}\n")
    for comp in report.active_thresholds:
        stdout.write(f"check {comp.label}: {'true' if comp.holds else 'false'}\n")
    if out_path:
        buf = io.StringIO()
        welfare.write_csv(("name", "value", "status"),
                          [list(r) for r in rows] + [[n, v, ""] for n, v in labels], buf)
        _emit_csv(buf.getvalue(), out_path, stdout)
    return EXIT_OK


POSTS_COLUMNS = ("axis_value", "regime", "c_minus", "c_zero", "c_plus", "polarization_order")


def _posts_row(template: ThreeOpinionScenario, axis: str, value, strict: bool) -> list:
    try:
        s = validate_scenario(welfare.apply_axis(template, axis, value))
        _, summary = scenario_equilibrium(s, strict)
    except ValidationError as exc:
        return [value, "error", *([None] * 3), "+".join(exc.codes)]
    except PopsimError as exc:
        return [value, "error", *([None] * 3), type(exc).__name__]
    order = summary.polarization_order.value if summary.polarization_order else None
    return [value, regime_of(s).value, *summary.three_way(s.intensity_b), order]


def cmd_sweep(cfg: RunConfig, out_path, threads, stdout) -> int:
    axis = cfg.get("axis", "g0")
    if axis not in welfare.AXES:
        raise ConfigError(f"axis must be one of {welfare.AXES}, got {axis!r}")
    table = cfg.get("table", "welfare")
    grid = grid_values(cfg)
    if table == "welfare":
        rows = welfare.sweep(cfg.scenario, axis, grid, threads, cfg.strict_ties)
        text = welfare.sweep_csv(rows)
    elif table == "posts":
        fn = lambda v: _posts_row(cfg.scenario, axis, v, cfg.strict_ties)  # noqa: E731
        records = _map(fn, grid, threads)
        buf = io.StringIO()
        welfare.write_csv(POSTS_COLUMNS, records, buf)
        text = buf.getvalue()
    else:
        raise ConfigError(f"table must be welfare or posts, got {table!r}")
    _emit_csv(text, out_path, stdout)
    return EXIT_OK


def _map(fn: Callable, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def cmd_algorithms(cfg: RunConfig, out_path, threads, stdout) -> int:
    caps = [int(x) for x in cfg.get("caps", "5 20 60").split()]
    try:
        kinds = [alg.AlgorithmKind(x) for x in cfg.get("algorithms", "RA PVM").split()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if any(k < 1 for k in caps):
        raise ConfigError("caps must be positive integers")
    if not any(cfg.get(k) is not None for k in GRID_KEYS):
        grid = list(range(0, cfg.scenario.n + 1, 2))
    else:
        grid = grid_values(cfg)
    rows = alg.algorithm_sweep(cfg.scenario, grid, caps, kinds, threads, cfg.strict_ties)
    _emit_csv(alg.algorithm_csv(rows), out_path, stdout)
    return EXIT_OK


VERIFY_COLUMNS = ("check", "subject", "result", "detail")


def cmd_verify(cfg: RunConfig, out_path, threads, stdout) -> int:
    count = cfg.int_opt("instances", 500)
    seed = cfg.int_opt("seed", 0)
    max_n = cfg.int_opt("max_n", 6)
    max_op = cfg.int_opt("max_opinions", 3)
    max_agents = cfg.int_opt("max_agents", oracle.DEFAULT_MAX_AGENTS)
    max_evals = cfg.int_opt("max_evaluations", oracle.DEFAULT_MAX_EVALUATIONS)
    records = []

    rng = random.Random(seed)
    instances = [oracle.random_instance(rng, max_n, max_op) for _ in range(count)]

    def check(inst):
        res = oracle.enumerate_equilibria(inst, max_agents, max_evals)
        same = res.profiles == oracle.engine_profiles(inst)
        return same and res.checks_pass

    failures = [i for i, ok in enumerate(_map(check, instances, threads)) if not ok]
    records.append(["random_suite", f"seed={seed} count={count}", "pass" if not failures else "fail",
                    " ".join(map(str, failures))])

    for spec in (cfg.get("fixtures") or "").split():
        path = (cfg.base_dir / spec) if not Path(spec).is_absolute() else Path(spec)
        try:
            fixtures = oracle.parse_fixtures(path.read_text(encoding="utf-8"))
        except (OSError, ValueError, KeyError, configparser.Error) as exc:
            records.append(["fixture_file", spec, "fail", f"{type(exc).__name__}: {exc}"])
            continue
        for fx in fixtures:
            records.append(_check_fixture(fx, max_agents, max_evals))

    sizes = [int(x) for x in (cfg.get("cross_validate_n") or "").split()]
    if sizes and cfg.scenario is None:
        raise ConfigError("cross_validate_n needs a [scenario] section")
    for small_n in sizes:
        rep = oracle.cross_validate(cfg.scenario, small_n, max_agents, max_evals)
        detail = "; ".join(f"{m.source} profile {m.profile} agent {m.agent} -> {m.deviation}"
                           for m in rep.mismatches)
        records.append(["cross_validate", f"small_n={small_n}", "pass" if rep.agree else "fail", detail])

    buf = io.StringIO()
    welfare.write_csv(VERIFY_COLUMNS, records, buf)
    _emit_csv(buf.getvalue(), out_path, stdout)
    failed = sum(r[2] == "fail" for r in records)
    print(f"verify: {len(records) - failed} passed, {failed} failed", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def _check_fixture(fx: oracle.Fixture, max_agents: int, max_evals: int) -> list:
    try:
        problems = _fixture_problems(fx, max_agents, max_evals)
    except PopsimError as exc:
        problems = [f"{type(exc).__name__}: {exc}"]
    return ["fixture", fx.name, "fail" if problems else "pass", "; ".join(problems)]


def _fixture_problems(fx: oracle.Fixture, max_agents: int, max_evals: int) -> list[str]:
    problems = []
    if fx.equilibria is not None:
        res = oracle.enumerate_equilibria(fx.instance, max_agents, max_evals)
        if res.profiles != fx.equilibria:
            problems.append(f"oracle equilibria {sorted(res.profiles)} != expected")
        if oracle.engine_profiles(fx.instance) != fx.equilibria:
            problems.append("engine equilibria != expected")
        if not res.checks_pass:
            problems.append("reaction or probe check failed")
    if fx.profile is not None and fx.utilities is not None:
        got = oracle.full_utility(fx.instance, fx.profile)
        if any(abs(g - e) > 1e-9 * max(1.0, abs(e)) for g, e in zip(got, fx.utilities)) or len(got) != len(fx.utilities):
            problems.append(f"utilities {got} != expected {list(fx.utilities)}")
    return problems


COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "thresholds": cmd_thresholds,
    "sweep": cmd_sweep,
    "algorithms": cmd_algorithms,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="popsim", description="Popularity-driven posting simulator.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--out", metavar="PATH", help="write CSV here instead of stdout")
    p.add_argument("--threads", type=int, metavar="N", help="worker threads (default: $POPSIM_THREADS or 1)")
    p.add_argument("--allow-odd-split", action="store_true",
                   help="resolve uneven tie groups instead of failing")
    return p


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        value = flag
    else:
        raw = os.environ.get("POPSIM_THREADS", "1")
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"POPSIM_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError("thread count must be at least 1")
    return value


def main(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        threads = resolve_threads(args.threads)
        cfg = load_config(args.config, args.command, args.allow_odd_split)
        return COMMANDS[args.command](cfg, args.out, threads, stdout)
    except ValidationError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, BudgetExceeded, OddIndifferentGroup) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except WrongRegime as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REGIME


if __name__ == "__main__":
    sys.exit(main())
