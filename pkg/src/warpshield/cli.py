"""Batch pipeline driver: profile -> classify -> remap -> protect -> report.

Every command consumes the previous command's files from the output directory
and writes plain CSV/JSON artifacts there; the run configuration is embedded
in each artifact so results are reproducible byte-for-byte from the same
flags.  Exit codes: 0 success, 2 configuration error, 3 artifact error,
4 execution error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import fixtures as fx
from .classify import classify_threads, classify_warps, format_pct, kernel_stats, scatter_rows, stats_to_json, write_scatter_csv
from .costs import REFERENCE_FIGURES, account
from .errors import ArtifactError, ExecutionError, ValidationError, WarpshieldError
from .interp import CostTable, DEFAULT_BUDGET, DEFAULT_COST_TABLE, load_cost_table, seeded_inputs
from .ir import KernelProgram, parse_kernel, program_to_source
from .profiling import load_profile, profile_digest, profile_kernel, save_profile, to_fraction
from .protect import build_protection_plan, protection_report, run_protected
from .remap import build_plan, load_plan, remapped_stats, save_plan

_EXIT_CONFIG = 2
_EXIT_ARTIFACT = 3
_EXIT_EXECUTION = 4


class _ConfigError(WarpshieldError):
    pass


def _load_program(args) -> tuple[KernelProgram, dict[str, list[int]]]:
    if getattr(args, "fixture", None):
        fixture = fx.generate_fixture(args.fixture, seed=args.seed)
        return fixture.program, fixture.inputs
    if getattr(args, "kernel", None):
        path = Path(args.kernel)
        if not path.exists():
            raise ArtifactError(f"kernel file {path} does not exist")
        program = parse_kernel(path.read_text())
        if args.inputs:
            raw = json.loads(Path(args.inputs).read_text())
            inputs = {name: [int(v) for v in words] for name, words in raw.items()}
        else:
            inputs = seeded_inputs(program, args.seed)
        return program, inputs
    raise _ConfigError("one of --fixture or --kernel is required")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cost_table(args) -> CostTable:
    if getattr(args, "cost_table", None):
        return load_cost_table(args.cost_table)
    return DEFAULT_COST_TABLE


def _tau(args) -> Fraction:
    tau = to_fraction(args.tau)
    if not 0 <= tau <= 1:
        raise _ConfigError(f"--tau {args.tau} outside [0, 1]")
    return tau


def _config_dict(args, command: str) -> dict:
    keep = (
        "fixture",
        "kernel",
        "inputs",
        "tau",
        "mode",
        "profile_mode",
        "sample",
        "seed",
        "budget",
        "cost_table",
        "remap_overhead",
        "out",
    )
    cfg = {"command": command}
    for key in keep:
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    return cfg


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise ArtifactError(f"missing artifact {path} (run the upstream command first)")
    return json.loads(path.read_text())


def cmd_profile(args) -> int:
    out = _out_dir(args)
    program, inputs = _load_program(args)
    if args.sample is not None and not 0 < args.sample <= 1:
        raise _ConfigError(f"--sample {args.sample} outside (0, 1]")
    profile = profile_kernel(
        program,
        inputs,
        mode=args.profile_mode,
        sample_fraction=args.sample if args.sample is not None else 1.0,
        seed=args.seed,
        budget=args.budget,
        tau=_tau(args),
    )
    save_profile(profile, out / "profile.csv")
    _write_json(
        out / "profile_meta.json",
        {
            "config": _config_dict(args, "profile"),
            "kernel": program.name,
            "geometry": list(program.geometry),
            "profile_sha256": profile_digest(profile),
        },
    )
    print(f"profiled {program.name}: {program.total_threads} threads -> {out / 'profile.csv'}")
    return 0


def cmd_classify(args) -> int:
    out = _out_dir(args)
    profile = load_profile(out / "profile.csv")
    tau = _tau(args)
    flags = classify_threads(profile, tau)
    num_ctas, cta_size = profile.geometry
    from .ir import warps_for

    warps = warps_for(num_ctas, cta_size)
    stats = kernel_stats(classify_warps(flags, warps), flags, tau)
    payload = stats_to_json(stats, profile.kernel)
    payload["config"] = _config_dict(args, "classify")
    _write_json(out / "stats.json", payload)
    write_scatter_csv(scatter_rows(profile, flags, warps), out / "scatter.csv")
    print(
        f"{profile.kernel}: {format_pct(stats.pct_reliable_warps)}% reliable warps, "
        f"{format_pct(stats.pct_reliable_threads)}% reliable threads (tau={float(tau)})"
    )
    return 0


def cmd_remap(args) -> int:
    out = _out_dir(args)
    profile = load_profile(out / "profile.csv")
    tau = _tau(args)
    flags = classify_threads(profile, tau)
    plan = build_plan(
        flags,
        profile.geometry,
        tau=tau,
        kernel=profile.kernel,
        profile_sha256=profile_digest(profile),
    )
    save_plan(plan, out / "plan.json")
    stats = remapped_stats(plan, flags)
    payload = stats_to_json(stats, profile.kernel)
    payload["config"] = _config_dict(args, "remap")
    _write_json(out / "stats_remapped.json", payload)
    write_scatter_csv(scatter_rows(profile, flags, plan.warps()), out / "scatter_remapped.csv")
    print(
        f"{profile.kernel}: {format_pct(stats.pct_reliable_warps)}% reliable warps after regrouping"
    )
    return 0


def cmd_protect(args) -> int:
    out = _out_dir(args)
    if args.mode == "none":
        raise _ConfigError("--mode none leaves nothing for the protect step to do")
    program, inputs = _load_program(args)
    profile = load_profile(out / "profile.csv")
    plan = load_plan(out / "plan.json")
    if plan.profile_sha256 != profile_digest(profile):
        raise ArtifactError("plan.json was built from a different profile.csv")
    from .remap import apply_plan

    remapped = apply_plan(program, plan)
    flags = classify_threads(profile, plan.tau)
    classifications = classify_warps(flags, remapped.warps())
    protection = build_protection_plan(classifications, args.mode)
    result = run_protected(
        remapped,
        inputs,
        protection,
        budget=args.budget,
        cost_table=_cost_table(args),
    )
    payload = protection_report(result, protection)
    payload["config"] = _config_dict(args, "protect")
    _write_json(out / "protection.json", payload)
    print(
        f"{program.name}: {len(protection.protected_warps)} of {len(protection.factors)} "
        f"warps protected ({args.mode}), {result.cycles} cycles"
    )
    return 0


def cmd_report(args) -> int:
    out = _out_dir(args)
    program, inputs = _load_program(args)
    profile = load_profile(out / "profile.csv")
    stats_before = _read_json(out / "stats.json")
    report = {
        "config": _config_dict(args, "report"),
        "kernel": profile.kernel,
        "reference_figures": REFERENCE_FIGURES,
        "before": stats_before,
    }
    if args.mode != "none":
        plan = load_plan(out / "plan.json")
        if plan.profile_sha256 != profile_digest(profile):
            raise ArtifactError("plan.json was built from a different profile.csv")
        flags = classify_threads(profile, plan.tau)
        cost = account(
            program,
            inputs,
            flags,
            plan=plan,
            cost_table=_cost_table(args),
            remap_overhead=to_fraction(args.remap_overhead),
            budget=args.budget,
        )
        report["after"] = _read_json(out / "stats_remapped.json")
        report["cost"] = cost.to_json()
        bars = [
            {
                "kernel": profile.kernel,
                "pct_reliable_warps_before": stats_before["pct_reliable_warps"],
                "pct_reliable_warps_after": report["after"]["pct_reliable_warps"],
                "savings_detect_pct": report["cost"]["savings_detect_pct"],
                "savings_correct_pct": report["cost"]["savings_correct_pct"],
            }
        ]
        _write_bars(out / "bars.csv", bars)
    else:
        flags = classify_threads(profile)
        cost = account(
            program,
            inputs,
            flags,
            cost_table=_cost_table(args),
            budget=args.budget,
        )
        report["cost"] = {
            "kernel": cost.kernel,
            "cycles_base": cost.cycles_base,
            "cycles_remapped": float(cost.cycles_remapped),
        }
    _write_json(out / "report.json", report)
    print(f"report for {profile.kernel} -> {out / 'report.json'}")
    return 0


def _write_bars(path: Path, rows: list[dict]) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    profile = load_profile(out / "profile.csv")
    taus = [to_fraction(t.strip()) for t in args.taus.split(",") if t.strip()]
    if not taus:
        raise _ConfigError("--taus produced an empty threshold list")
    from .ir import warps_for

    geometry = profile.geometry
    warps = warps_for(*geometry)
    rows = []
    for tau in sorted(taus):
        flags = classify_threads(profile, tau)
        before = kernel_stats(classify_warps(flags, warps), flags, tau)
        plan = build_plan(flags, geometry, tau=tau, kernel=profile.kernel)
        after = remapped_stats(plan, flags)
        rows.append(
            (
                float(tau),
                float(before.pct_reliable_warps * 100),
                float(after.pct_reliable_warps * 100),
            )
        )
    import csv

    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "pct_reliable_warps_before", "pct_reliable_warps_after"])
        writer.writerows(rows)
    print(f"sweep over {len(rows)} thresholds -> {out / 'sweep.csv'}")
    return 0


def cmd_suite(args) -> int:
    """Run the full pipeline over the regroup-eligible fixtures and aggregate."""
    out = _out_dir(args)
    table = _cost_table(args)
    rows = []
    for fixture in fx.remappable_suite(seed=args.seed):
        flags = list(fixture.flags)
        profile = fixture.profile
        warps = fixture.program.warps()
        before = kernel_stats(classify_warps(flags, warps), flags, profile.tau)
        plan = build_plan(
            flags,
            fixture.program.geometry,
            tau=profile.tau,
            kernel=fixture.name,
            profile_sha256=profile_digest(profile),
        )
        after = remapped_stats(plan, flags)
        cost = account(
            fixture.program,
            fixture.inputs,
            flags,
            plan=plan,
            cost_table=table,
            remap_overhead=to_fraction(args.remap_overhead),
        )
        rows.append(
            {
                "kernel": fixture.name,
                "pct_reliable_warps_before": format_pct(before.pct_reliable_warps),
                "pct_reliable_warps_after": format_pct(after.pct_reliable_warps),
                "savings_detect_pct": float(cost.savings_detect * 100),
                "savings_correct_pct": float(cost.savings_correct * 100),
            }
        )
    mean_before = sum(Fraction(r["pct_reliable_warps_before"]) for r in rows) / len(rows)
    mean_after = sum(Fraction(r["pct_reliable_warps_after"]) for r in rows) / len(rows)
    payload = {
        "config": _config_dict(args, "suite"),
        "kernels": rows,
        "mean_pct_reliable_warps_before": format_pct(mean_before / 100),
        "mean_pct_reliable_warps_after": format_pct(mean_after / 100),
        "mean_savings_detect_pct": float(sum(r["savings_detect_pct"] for r in rows) / len(rows)),
        "mean_savings_correct_pct": float(sum(r["savings_correct_pct"] for r in rows) / len(rows)),
        "reference_figures": REFERENCE_FIGURES,
    }
    _write_json(out / "suite_report.json", payload)
    _write_bars(out / "suite_bars.csv", rows)
    print(
        f"suite: reliable warps {payload['mean_pct_reliable_warps_before']}% -> "
        f"{payload['mean_pct_reliable_warps_after']}% "
        f"(reference: {REFERENCE_FIGURES['mean_pct_reliable_warps_before']} -> "
        f"{REFERENCE_FIGURES['mean_pct_reliable_warps_after']}); "
        f"savings {payload['mean_savings_detect_pct']:.2f}%/"
        f"{payload['mean_savings_correct_pct']:.2f}% "
        f"(reference: {REFERENCE_FIGURES['mean_savings_detect_pct']}/"
        f"{REFERENCE_FIGURES['mean_savings_correct_pct']})"
    )
    return 0


def cmd_fixtures(args) -> int:
    print(f"{'name':24} {'geometry':>12} {'pattern':>18} {'warps%':>8} {'threads%':>9}  flags")
    for spec in fx.suite_specs():
        warps_pct, threads_pct = spec.expected
        tag = "remappable" if spec.remappable else ""
        print(
            f"{spec.name:24} {spec.num_ctas:>5}x{spec.cta_size:<6} {spec.pattern:>18} "
            f"{warps_pct:>8} {threads_pct:>9}  {tag}"
        )
    return 0


def cmd_emit(args) -> int:
    out = _out_dir(args)
    fixture = fx.generate_fixture(args.fixture, seed=args.seed)
    (out / f"{fixture.name}.wir").write_text(program_to_source(fixture.program))
    _write_json(out / f"{fixture.name}_inputs.json", {k: v for k, v in fixture.inputs.items()})
    save_profile(fixture.profile, out / f"{fixture.name}_profile.csv")
    print(f"emitted {fixture.name} kernel, inputs, and profile under {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpshield",
        description="Profile per-thread soft-error resilience, regroup threads into "
        "reliability-homogeneous warps, and cost selective warp replication.",
    )
    parser.add_argument("--error-json", action="store_true", help="emit errors as JSON on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, kernel_source=False, tau=True, mode=False):
        p.add_argument("--out", required=True, help="artifact directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        if kernel_source:
            p.add_argument("--fixture", help="built-in fixture name (see `fixtures`)")
            p.add_argument("--kernel", help="path to an IR kernel file")
            p.add_argument("--inputs", help="JSON file of input buffer contents")
        if tau:
            p.add_argument("--tau", default="0.05", help="SDC threshold (inclusive)")
        if mode:
            p.add_argument("--mode", choices=["detect", "correct", "none"], default="detect")
        p.add_argument("--cost-table", dest="cost_table", help="JSON cost table")

    p = sub.add_parser("profile", help="run the fault-injection profiler")
    common(p, kernel_source=True)
    p.add_argument("--profile-mode", dest="profile_mode", choices=["pruned", "exhaustive"], default="pruned")
    p.add_argument("--sample", type=float, default=None, help="site sample fraction in (0, 1]")
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("classify", help="classify threads and warps at a threshold")
    common(p)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("remap", help="build and evaluate a regrouping plan")
    common(p)
    p.set_defaults(fn=cmd_remap)

    p = sub.add_parser("protect", help="run replicated execution under the plan")
    common(p, kernel_source=True, mode=True)
    p.set_defaults(fn=cmd_protect)

    p = sub.add_parser("report", help="aggregate artifacts and cost the protection")
    common(p, kernel_source=True, mode=True)
    p.add_argument("--remap-overhead", dest="remap_overhead", default="0")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("sweep", help="reliable-warp percentages across thresholds")
    common(p, tau=False)
    p.add_argument("--taus", required=True, help="comma-separated threshold list")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("suite", help="pipeline + aggregate over the regroupable fixtures")
    common(p, tau=False)
    p.add_argument("--remap-overhead", dest="remap_overhead", default="0")
    p.set_defaults(fn=cmd_suite)

    p = sub.add_parser("fixtures", help="list the built-in fixture table")
    p.set_defaults(fn=cmd_fixtures)

    p = sub.add_parser("emit", help="write a fixture's kernel/inputs/profile to files")
    p.add_argument("--fixture", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_emit)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except WarpshieldError as err:
        code = _EXIT_EXECUTION
        if isinstance(err, (_ConfigError, ValidationError)):
            code = _EXIT_CONFIG
        elif isinstance(err, ArtifactError):
            code = _EXIT_ARTIFACT
        elif isinstance(err, ExecutionError):
            code = _EXIT_EXECUTION
        if args.error_json:
            print(
                json.dumps({"error": {"type": type(err).__name__, "message": str(err), "exit_code": code}}),
                file=sys.stderr,
            )
        else:
            print(f"error: {err}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
