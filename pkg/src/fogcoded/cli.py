"""Command-line experiment driver: single runs, sweeps, verification, tables.

Subcommands:
  simulate   one placement+delivery+measurement cycle, worst case over trials
  sweep      CSV over an axis (l, m or deltab), one row per value per delta_b
  verify     run the oracle/invariant suite and report pass/fail per check
  tables     dump the per-slot transmission table of a configuration

Flags may also be supplied through a flat key=value config file
(--config); explicit flags override file entries.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analytics, core, delivery
from .analytics import FixedLConfig
from .errors import FogcodedError, InvalidParams

CSV_COLUMNS = [
    "K", "N", "M", "F", "B", "deltaB", "L", "mode", "trials", "seed",
    "measured_load", "closed_form_load", "lower_bound", "upper_bound",
    "uncoded_load", "mn_sync_load", "transmission_count", "error",
]

BITEXACT_MAX_F = 2_000_000  # larger files are analytic-mode only


@dataclass(frozen=True)
class ExperimentConfig:
    K: int = 10
    N: int = 20
    M: float = 5.0
    F: int = 10_000
    B: int = 5
    delta_b: int = 2
    L: int | None = None  # None selects random schedules
    mode: str = "analytic"
    trials: int = 50
    seed: int = 0
    sweep: str | None = None
    values: tuple[float, ...] = ()
    delta_b_list: tuple[int, ...] = ()
    out: str | None = None

    @property
    def random_schedule(self) -> bool:
        return self.L is None

    def system_params(self) -> core.SystemParams:
        return core.SystemParams(
            K=self.K, N=self.N, M=self.M, F=self.F, B=self.B, delta_b=self.delta_b
        )


@dataclass
class ResultRow:
    config: ExperimentConfig
    measured_load: float | None = None
    mean_load: float | None = None
    closed_form_load: float | None = None
    lower_bound: float | None = None
    upper_bound: float | None = None
    uncoded_load: float | None = None
    mn_sync_load: float | None = None
    transmission_count: int | None = None
    error: str = ""

    def csv_values(self) -> list[str]:
        c = self.config
        def fmt(x):
            return "" if x is None else str(x)
        return [
            str(c.K), str(c.N), str(c.M), str(c.F), str(c.B), str(c.delta_b),
            "" if c.L is None else str(c.L), c.mode, str(c.trials), str(c.seed),
            fmt(self.measured_load), fmt(self.closed_form_load),
            fmt(self.lower_bound), fmt(self.upper_bound),
            fmt(self.uncoded_load), fmt(self.mn_sync_load),
            fmt(self.transmission_count), self.error,
        ]


def _trial_seeds(seed: int, trial: int) -> tuple[int, int, int]:
    # One root seed split into independent library/placement/schedule streams.
    ss = np.random.SeedSequence([seed, trial])
    lib, place, sched = (int(x) for x in ss.generate_state(3))
    return lib, place, sched


def _one_trial(config: ExperimentConfig, trial: int) -> delivery.DeliveryResult:
    params = config.system_params()
    lib_seed, place_seed, sched_seed = _trial_seeds(config.seed, trial)
    if config.random_schedule:
        schedule = core.make_random_schedule(config.K, config.B, sched_seed)
    else:
        schedule = core.make_fixed_L_schedule(config.K, config.B, config.L, sched_seed)
    if config.mode == "analytic":
        records = core.analytic_subfile_table(params, schedule)
    else:
        if config.F > BITEXACT_MAX_F:
            raise InvalidParams(
                f"bit-exact mode is limited to F <= {BITEXACT_MAX_F}; "
                "use --mode analytic for larger files"
            )
        library = core.generate_library(params, lib_seed)
        caches = core.place_caches(library, params, place_seed)
        records = core.partition_into_subfiles(library, caches, schedule)
    return delivery.run_delivery(schedule, records, params)


def run_single(config: ExperimentConfig) -> ResultRow:
    """Full cycle; with trials > 1 the measured load is the worst case."""
    if config.trials < 1:
        raise InvalidParams("trials must be >= 1")
    if config.mode not in ("analytic", "bitexact"):
        raise InvalidParams(f"unknown mode {config.mode!r}")
    if not config.random_schedule and config.K != config.B * config.L:
        raise InvalidParams(
            f"fixed-L schedules need K = B*L, got K={config.K}, "
            f"B={config.B}, L={config.L}"
        )
    config.system_params()  # validate early
    loads = []
    worst = None
    for t in range(config.trials):
        result = _one_trial(config, t)
        loads.append(result.report.normalized_load)
        if worst is None or result.report.normalized_load > worst.report.normalized_load:
            worst = result
    row = ResultRow(config)
    row.measured_load = worst.report.normalized_load
    row.mean_load = float(np.mean(loads))
    row.transmission_count = worst.report.transmission_count
    lower, upper = analytics.load_bounds(
        config.M, config.N, config.K, config.B, config.delta_b
    )
    row.lower_bound = lower
    row.upper_bound = upper
    row.uncoded_load = analytics.uncoded_load(config.M, config.N, config.K)
    row.mn_sync_load = analytics.mn_sync_load(config.M, config.N, config.K)
    if not config.random_schedule:
        params = config.system_params()
        if config.mode == "bitexact" and params.rounding_error() > 1e-6:
            row.error = "closed-form comparison skipped: M*F/N too far from integer"
        else:
            row.closed_form_load = analytics.closed_form_load(
                FixedLConfig(
                    K=config.K, N=config.N, M=config.M, F=config.F,
                    B=config.B, L=config.L, delta_b=config.delta_b,
                )
            )
    return row


def _sweep_configs(config: ExperimentConfig) -> list[ExperimentConfig]:
    if config.sweep not in ("l", "m", "deltab"):
        raise InvalidParams(f"sweep axis must be l, m or deltab, got {config.sweep!r}")
    if not config.values:
        raise InvalidParams("sweep needs --values")
    delta_bs = config.delta_b_list or (config.delta_b,)
    cells = []
    for v in config.values:
        if config.sweep == "l":
            base = replace(config, L=int(v), K=config.B * int(v))
        elif config.sweep == "m":
            base = replace(config, M=float(v))
        else:
            base = replace(config, delta_b=int(v))
        if config.sweep == "deltab":
            cells.append(base)
        else:
            cells.extend(replace(base, delta_b=db) for db in delta_bs)
    return cells


def run_sweep(config: ExperimentConfig) -> list[ResultRow]:
    """One ResultRow per sweep value per delta_b; failures become error rows."""
    rows = []
    for cell in _sweep_configs(config):
        try:
            rows.append(run_single(cell))
        except FogcodedError as exc:
            rows.append(ResultRow(cell, error=str(exc)))
    return rows


def write_csv(rows: list[ResultRow], path: str | None) -> str:
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_values())
    finally:
        if out is not sys.stdout:
            out.close()
    return path or "-"


# ---------------------------------------------------------------------------
# verification suite


@dataclass
class CheckResult:
    name: str
    ok: bool | None  # None means skipped
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.ok is False


def _fixed_l_shapes(max_k: int) -> list[tuple[int, int]]:
    shapes = []
    for b in range(2, max_k + 1):
        for l in range(1, max_k // b + 1):
            shapes.append((b, l))
    return shapes


def check_counting_oracle(
    max_k: int = 8, shapes: list[tuple[int, int]] | None = None
) -> list[CheckResult]:
    """Q_count vs exhaustive enumeration, plus sum_Y q = C(K, s)."""
    results = []
    for b, l in shapes if shapes is not None else _fixed_l_shapes(max_k):
        k = b * l
        if k > analytics.BRUTE_FORCE_MAX_K:
            results.append(CheckResult(
                f"q-count oracle B={b} L={l}", None,
                f"skipped: K={k} exceeds brute-force limit (TooLarge)",
            ))
            continue
        bad = []
        for delta_b in range(1, b + 1):
            cfg = FixedLConfig(K=k, N=k, M=k / 2, F=1, B=b, L=l, delta_b=delta_b)
            for s in range(1, k + 1):
                if analytics.Q_count(s, cfg) != analytics.brute_force_Q(s, cfg):
                    bad.append(("Q", s, delta_b))
                total = sum(
                    analytics.q_count(s, y, cfg) for y in analytics.y_range(s, cfg)
                )
                if total != math.comb(k, s):
                    bad.append(("sum_q", s, delta_b))
        results.append(CheckResult(
            f"q-count oracle B={b} L={l}", not bad,
            "" if not bad else f"mismatches at (kind, s, delta_b): {bad[:5]}",
        ))
    return results


def _brute_force_b(Y: int, alpha: int, L: int) -> int:
    from itertools import combinations as icombinations
    groups = [list(range(g * L, (g + 1) * L)) for g in range(Y)]
    count = 0
    for picked in icombinations(range(Y * L), alpha):
        ps = set(picked)
        if all(ps & set(g) for g in groups):
            count += 1
    return count


def check_b_count(max_y: int = 4, max_l: int = 4) -> CheckResult:
    bad = []
    for y in range(1, max_y + 1):
        for l in range(1, max_l + 1):
            for alpha in range(y, y * l + 1):
                if analytics.b_count(y, alpha, l) != _brute_force_b(y, alpha, l):
                    bad.append((y, alpha, l))
    return CheckResult(
        "b-count oracle", not bad,
        "" if not bad else f"mismatches at (Y, alpha, L): {bad[:5]}",
    )


def check_sync_equality(max_k: int = 8) -> CheckResult:
    bad = []
    for b, l in _fixed_l_shapes(max_k):
        k = b * l
        for ratio in (0.25, 0.5, 0.75):
            cfg = FixedLConfig(K=k, N=k, M=ratio * k, F=1, B=b, L=l, delta_b=b)
            cf = analytics.closed_form_load(cfg)
            sync = analytics.mn_sync_load(cfg.M, cfg.N, cfg.K)
            if abs(cf - sync) > 1e-12 * max(abs(sync), 1e-300):
                bad.append((b, l, ratio))
    return CheckResult(
        "synchronous-limit equality", not bad,
        "" if not bad else f"mismatches at (B, L, M/N): {bad[:5]}",
    )


def check_bounds_sandwich(max_k: int = 8) -> CheckResult:
    bad = []
    slack = 1e-9
    for b, l in _fixed_l_shapes(max_k):
        k = b * l
        for ratio in (0.25, 0.5, 0.75):
            for delta_b in range(1, b + 1):
                cfg = FixedLConfig(K=k, N=k, M=ratio * k, F=1, B=b, L=l, delta_b=delta_b)
                cf = analytics.closed_form_load(cfg)
                lower, upper = analytics.load_bounds(cfg.M, cfg.N, k, b, delta_b)
                windows = -(-b // delta_b)
                ratio_ok = 1 - slack <= cf / lower <= windows + slack
                if not (lower * (1 - slack) <= cf <= upper * (1 + slack) and ratio_ok):
                    bad.append((b, l, ratio, delta_b))
    return CheckResult(
        "load-bound sandwich", not bad,
        "" if not bad else f"violations at (B, L, M/N, delta_b): {bad[:5]}",
    )


def check_delivery_closed_form(seed: int = 0) -> CheckResult:
    bad = []
    for b, l in ((3, 1), (4, 1), (5, 1), (3, 2)):
        k = b * l
        for delta_b in range(1, b + 1):
            cfg = ExperimentConfig(
                K=k, N=k, M=k / 4, F=1000, B=b, delta_b=delta_b, L=l,
                mode="analytic", trials=2, seed=seed,
            )
            row = run_single(cfg)
            if abs(row.measured_load - row.closed_form_load) > 1e-9 * max(
                row.closed_form_load, 1e-300
            ):
                bad.append((b, l, delta_b))
    return CheckResult(
        "delivery matches closed form", not bad,
        "" if not bad else f"mismatches at (B, L, delta_b): {bad[:5]}",
    )


def check_decodability(seed: int = 0) -> CheckResult:
    bad = []
    for k, b in ((4, 2), (5, 3), (6, 4)):
        for delta_b in range(1, b + 1):
            params = core.SystemParams(K=k, N=k, M=k / 2, F=512, B=b, delta_b=delta_b)
            lib_seed, place_seed, sched_seed = _trial_seeds(seed, delta_b)
            schedule = core.make_random_schedule(k, b, sched_seed)
            library = core.generate_library(params, lib_seed)
            caches = core.place_caches(library, params, place_seed)
            records = core.partition_into_subfiles(library, caches, schedule)
            try:
                result = delivery.run_delivery(schedule, records, params)
                for fap in range(1, k + 1):
                    deadline = schedule.deadline_slot(fap, delta_b)
                    decoded = delivery.decode_fap(
                        fap, result.events, library, caches, records,
                        upto_slot=deadline,
                    )
                    if not np.array_equal(decoded, library.file(schedule.demand[fap])):
                        bad.append((k, b, delta_b, fap))
            except FogcodedError as exc:
                bad.append((k, b, delta_b, str(exc)))
    return CheckResult(
        "decodability at deadline", not bad,
        "" if not bad else f"failures: {bad[:5]}",
    )


def check_delay_monotonicity(seed: int = 0) -> CheckResult:
    bad = []
    for trial in range(5):
        schedule = core.make_random_schedule(8, 4, seed * 100 + trial)
        prev = None
        for delta_b in range(1, 5):
            params = core.SystemParams(K=8, N=8, M=2, F=1000, B=4, delta_b=delta_b)
            records = core.analytic_subfile_table(params, schedule)
            load = delivery.run_delivery(schedule, records, params).report.normalized_load
            if prev is not None and load > prev + 1e-9:
                bad.append((trial, delta_b))
            prev = load
    return CheckResult(
        "load non-increasing in delta_b", not bad,
        "" if not bad else f"violations at (trial, delta_b): {bad[:5]}",
    )


def run_verification(max_k: int = 8, seed: int = 0) -> list[CheckResult]:
    checks: list[CheckResult] = []
    checks.extend(check_counting_oracle(max_k))
    checks.append(check_b_count())
    checks.append(check_sync_equality(min(max_k, 8)))
    checks.append(check_bounds_sandwich(min(max_k, 8)))
    checks.append(check_delivery_closed_form(seed))
    checks.append(check_decodability(seed))
    checks.append(check_delay_monotonicity(seed))
    return checks


# ---------------------------------------------------------------------------
# transmission tables


def format_fap_set(ids) -> str:
    return "{" + ",".join(str(k) for k in sorted(ids)) + "}"


def format_content(record: delivery.TransmissionRecord) -> str:
    if not record.transmitted:
        return "-"
    return "^".join(
        f"W[{k},{format_fap_set(core.set_of(mask))}]" for k, mask in record.included
    )


def render_tables(config: ExperimentConfig) -> list[str]:
    """Tab-separated transmission table, one line per enumerated candidate."""
    if config.random_schedule:
        raise InvalidParams("tables need a fixed-L schedule (--l)")
    params = config.system_params()
    schedule = core.make_fixed_L_schedule(config.K, config.B, config.L)
    if config.mode == "bitexact":
        lib_seed, place_seed, _ = _trial_seeds(config.seed, 0)
        library = core.generate_library(params, lib_seed)
        caches = core.place_caches(library, params, place_seed)
        records = core.partition_into_subfiles(library, caches, schedule)
    else:
        records = core.analytic_subfile_table(params, schedule)
    result = delivery.run_delivery(schedule, records, params)
    lines = ["slot\ts\tchi\tS1\tS2\tcollapsed\tpayload_bits\tcontent"]
    for e in result.events:
        lines.append("\t".join([
            str(e.slot), str(e.s), str(e.chi),
            format_fap_set(core.set_of(e.s1_mask)),
            format_fap_set(core.set_of(e.s2_mask)),
            format_fap_set(e.collapsed_set),
            str(e.payload_bits),
            format_content(e),
        ]))
    return lines


# ---------------------------------------------------------------------------
# argument handling


def _read_config_file(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidParams(f"bad config line (want key=value): {line!r}")
        key, value = line.split("=", 1)
        entries[key.strip().lower().replace("-", "_")] = value.strip()
    return entries


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fogcoded",
        description="Coded-caching delivery simulator for delayed requests",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--k", type=int, help="number of F-APs")
        p.add_argument("--n", type=int, help="number of files")
        p.add_argument("--m", type=float, help="normalized cache size")
        p.add_argument("--f", type=int, help="file size in bits")
        p.add_argument("--b", type=int, help="number of time slots")
        p.add_argument("--delta-b", help="maximum request delay in slots "
                       "(comma list allowed in sweeps)")
        group = p.add_mutually_exclusive_group()
        group.add_argument("--l", type=int, help="requesters per slot (fixed-L)")
        group.add_argument("--random", action="store_true",
                           help="random request schedule (default)")
        p.add_argument("--trials", type=int, help="trials per cell")
        p.add_argument("--seed", type=int, help="root seed")
        p.add_argument("--mode", choices=["bitexact", "analytic"])
        p.add_argument("--out", help="output path (- for stdout)")

    p_sim = sub.add_parser("simulate", help="run one configuration")
    add_common(p_sim)

    p_sweep = sub.add_parser("sweep", help="sweep one axis and emit CSV")
    add_common(p_sweep)
    p_sweep.add_argument("--sweep", choices=["l", "m", "deltab"])
    p_sweep.add_argument("--values", help="comma-separated sweep values")

    p_verify = sub.add_parser("verify", help="run the invariant suite")
    p_verify.add_argument("--max-k", type=int, default=8)
    p_verify.add_argument("--seed", type=int, default=0)

    p_tables = sub.add_parser("tables", help="dump per-slot transmission tables")
    add_common(p_tables)
    return parser


DEFAULTS = ExperimentConfig()

# Bare `fogcoded tables` dumps the canonical four-F-AP demo configuration.
TABLES_DEFAULTS = ExperimentConfig(
    K=4, N=4, M=2.0, F=16, B=4, delta_b=2, L=1, mode="analytic", trials=1
)


def _merge_config(
    args: argparse.Namespace, defaults: ExperimentConfig = DEFAULTS
) -> ExperimentConfig:
    file_entries: dict[str, str] = {}
    if getattr(args, "config", None):
        file_entries = _read_config_file(args.config)

    def pick(key: str, cast, default):
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            return cast(cli_value)
        if key in file_entries:
            return cast(file_entries[key])
        return default

    if getattr(args, "random", False):
        l_value = None
    elif getattr(args, "l", None) is not None:
        l_value = args.l
    elif "l" in file_entries:
        l_value = int(file_entries["l"])
    elif file_entries.get("random", "").lower() in ("1", "true", "yes"):
        l_value = None
    else:
        l_value = defaults.L

    delta_raw = pick("delta_b", str, str(defaults.delta_b))
    delta_list = tuple(int(x) for x in str(delta_raw).split(",") if x != "")
    if not delta_list:
        raise InvalidParams("--delta-b needs at least one value")
    values_raw = pick("values", str, "")
    values = tuple(float(x) for x in values_raw.split(",") if x != "")
    return ExperimentConfig(
        K=pick("k", int, defaults.K),
        N=pick("n", int, defaults.N),
        M=pick("m", float, defaults.M),
        F=pick("f", int, defaults.F),
        B=pick("b", int, defaults.B),
        delta_b=delta_list[0],
        delta_b_list=delta_list,
        L=l_value,
        mode=pick("mode", str, defaults.mode),
        trials=pick("trials", int, defaults.trials),
        seed=pick("seed", int, defaults.seed),
        sweep=pick("sweep", str, None),
        values=values,
        out=pick("out", str, None),
    )


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            config = _merge_config(args)
            row = run_single(config)
            schedule_desc = "random" if config.random_schedule else f"fixed L={config.L}"
            print(
                f"K={config.K} N={config.N} M={config.M} F={config.F} "
                f"B={config.B} delta_b={config.delta_b} schedule={schedule_desc} "
                f"mode={config.mode} trials={config.trials} seed={config.seed}"
            )
            print(f"measured load (worst case): {row.measured_load}")
            print(f"measured load (mean):       {row.mean_load}")
            if row.closed_form_load is not None:
                print(f"closed-form load:           {row.closed_form_load}")
            print(f"bounds:                     [{row.lower_bound}, {row.upper_bound}]")
            print(f"uncoded / synchronous:      {row.uncoded_load} / {row.mn_sync_load}")
            print(f"transmissions:              {row.transmission_count}")
            if row.error:
                print(f"note: {row.error}")
            if config.out:
                write_csv([row], config.out)
            return 0
        if args.command == "sweep":
            config = _merge_config(args)
            rows = run_sweep(config)
            write_csv(rows, config.out)
            return 0
        if args.command == "verify":
            checks = run_verification(max_k=args.max_k, seed=args.seed)
            failed = 0
            for check in checks:
                status = "PASS" if check.ok else ("SKIP" if check.ok is None else "FAIL")
                failed += check.failed
                line = f"{status}  {check.name}"
                if check.detail:
                    line += f"  ({check.detail})"
                print(line)
            print(f"{len(checks) - failed}/{len(checks)} checks passed")
            return 1 if failed else 0
        if args.command == "tables":
            config = _merge_config(args, TABLES_DEFAULTS)
            lines = render_tables(config)
            if config.out and config.out != "-":
                Path(config.out).write_text("\n".join(lines) + "\n")
            else:
                for line in lines:
                    print(line)
            return 0
    except FogcodedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
