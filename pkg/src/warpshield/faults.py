"""Single-bit fault-space enumeration, injection campaigns, and outcome triage.

A fault site is a ``(thread, dynamic instruction, bit)`` coordinate.  The
space is trace-driven: enumeration walks the fault-free run and yields one
site per bit of every dynamic instruction that wrote a destination register,
so user-supplied lists are the only way a site can reference something that
never executes (those classify as masked with detail ``not-executed``).
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

from .errors import CampaignRefused, ValidationError
from .interp import COMPLETED, CRASHED, DEFAULT_BUDGET, ExecutionResult, execute
from .ir import KernelProgram

MASKED = "masked"
SDC = "sdc"
OTHER = "other"

_OUTCOME_KINDS = (MASKED, SDC, OTHER)
_DETAILS = (None, "crashed", "hung", "not-executed")


@dataclass(frozen=True, order=True)
class FaultSite:
    thread_id: int
    dyn_instr: int  # 1-based ordinal in the thread's dynamic instruction stream
    bit: int

    def __post_init__(self):
        if not (0 <= self.bit <= 31):
            raise ValidationError(f"bit {self.bit} outside [0, 31]")
        if self.dyn_instr < 1:
            raise ValidationError("dyn_instr is 1-based")
        if self.thread_id < 0:
            raise ValidationError("thread_id must be non-negative")


@dataclass(frozen=True)
class Outcome:
    kind: str  # masked | sdc | other
    detail: str | None = None  # crashed | hung | not-executed

    def __post_init__(self):
        if self.kind not in _OUTCOME_KINDS or self.detail not in _DETAILS:
            raise ValidationError(f"bad outcome {self.kind!r}/{self.detail!r}")


@dataclass
class CampaignResult:
    per_site: dict[FaultSite, Outcome]
    per_thread_counts: dict[int, tuple[int, int, int]]  # tid -> (masked, sdc, other)
    seed: int | None = None

    def counts(self, thread_id: int) -> tuple[int, int, int]:
        return self.per_thread_counts.get(thread_id, (0, 0, 0))


def default_budget(golden: ExecutionResult) -> int:
    """Hang threshold for injected runs: 10x the fault-free peak iCnt, floor 10,000."""
    return max(10_000, 10 * golden.max_icnt())


def golden_run(
    program: KernelProgram, inputs: dict[str, list[int]], budget: int = DEFAULT_BUDGET
) -> ExecutionResult:
    """Fault-free reference run with the write trace recorded.

    Raises :class:`CampaignRefused` if the kernel itself crashes or hangs,
    since outcomes are only defined against a clean golden output.
    """
    golden = execute(program, inputs, budget=budget, record_writes=True)
    if not golden.completed:
        raise CampaignRefused(
            f"golden run of {program.name!r} terminated {golden.termination}: {golden.error}"
        )
    return golden


def classify_outcome(golden: ExecutionResult, result: ExecutionResult) -> Outcome:
    if result.termination != COMPLETED:
        return Outcome(OTHER, "crashed" if result.termination == CRASHED else "hung")
    if result.outputs == golden.outputs:
        return Outcome(MASKED, None if result.fault_applied else "not-executed")
    return Outcome(SDC)


def enumerate_fault_space(
    program: KernelProgram,
    inputs: dict[str, list[int]],
    threads: list[int] | None = None,
    *,
    golden: ExecutionResult | None = None,
    budget: int = DEFAULT_BUDGET,
) -> list[FaultSite]:
    """Every (thread, register-writing dynamic instruction, bit) site, in
    (thread, dyn_instr, bit) lexicographic order."""
    if golden is None:
        golden = golden_run(program, inputs, budget)
    if golden.register_writes is None:
        raise ValidationError("golden result lacks the register write trace")
    if threads is None:
        threads = list(range(program.total_threads))
    sites = []
    for t in sorted(threads):
        for dyn in golden.register_writes[t]:
            for bit in range(32):
                sites.append(FaultSite(t, dyn, bit))
    return sites


def sample_sites(sites: list[FaultSite], fraction: float, seed: int) -> list[FaultSite]:
    """Uniform sample without replacement; deterministic per seed, sorted output.

    ``fraction=1`` returns the input unchanged.  Smaller fractions keep at
    least one site so a sampled campaign always measures something.
    """
    if not 0 < fraction <= 1:
        raise ValidationError(f"sample fraction {fraction} outside (0, 1]")
    if fraction == 1:
        return list(sites)
    if not sites:
        return []
    k = max(1, round(fraction * len(sites)))
    rng = random.Random(f"sites:{seed}")
    return sorted(rng.sample(sites, k))


def run_campaign(
    program: KernelProgram,
    inputs: dict[str, list[int]],
    sites: list[FaultSite],
    *,
    budget: int | None = None,
    golden: ExecutionResult | None = None,
    seed: int | None = None,
) -> CampaignResult:
    """One execution per site, each classified against the golden output.

    Runs are independent and may be reordered or parallelised; aggregation is
    commutative counting, so the result does not depend on schedule.
    """
    if golden is None:
        golden = golden_run(program, inputs)
    if budget is None:
        budget = default_budget(golden)
    per_site: dict[FaultSite, Outcome] = {}
    tallies: dict[int, list[int]] = {}
    for site in sites:
        result = execute(program, inputs, fault=site, budget=budget)
        outcome = classify_outcome(golden, result)
        per_site[site] = outcome
        tally = tallies.setdefault(site.thread_id, [0, 0, 0])
        tally[_OUTCOME_KINDS.index(outcome.kind)] += 1
    return CampaignResult(
        per_site=per_site,
        per_thread_counts={t: tuple(v) for t, v in sorted(tallies.items())},
        seed=seed,
    )


# ---------------------------------------------------------------------------
# persistence

CAMPAIGN_HEADER = ["thread_id", "dyn_instr", "bit", "outcome", "detail"]
AGGREGATE_HEADER = ["thread_id", "sites", "masked", "sdc", "other"]


def write_campaign_csv(result: CampaignResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CAMPAIGN_HEADER)
        for site in sorted(result.per_site):
            oc = result.per_site[site]
            w.writerow([site.thread_id, site.dyn_instr, site.bit, oc.kind, oc.detail or ""])


def read_campaign_csv(path) -> dict[FaultSite, Outcome]:
    out = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CAMPAIGN_HEADER:
            raise ValidationError(f"unexpected campaign CSV header {reader.fieldnames}")
        for row in reader:
            site = FaultSite(int(row["thread_id"]), int(row["dyn_instr"]), int(row["bit"]))
            out[site] = Outcome(row["outcome"], row["detail"] or None)
    return out


def write_aggregate_csv(result: CampaignResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AGGREGATE_HEADER)
        for t, (m, s, o) in sorted(result.per_thread_counts.items()):
            w.writerow([t, m + s + o, m, s, o])
