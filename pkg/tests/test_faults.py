import pytest

from warpshield.errors import CampaignRefused, ValidationError
from warpshield.faults import (
    FaultSite,
    Outcome,
    classify_outcome,
    enumerate_fault_space,
    golden_run,
    read_campaign_csv,
    run_campaign,
    sample_sites,
    write_aggregate_csv,
    write_campaign_csv,
)
from warpshield.fixtures import (
    add_one_inputs,
    add_one_kernel,
    address_probe_kernel,
    dead_write_kernel,
)
from warpshield.ir import parse_kernel


@pytest.fixture(scope="module")
def add_one():
    program = add_one_kernel()
    return program, add_one_inputs(program)


def test_enumeration_one_thread_96_sites(add_one):
    program, inputs = add_one
    sites = enumerate_fault_space(program, inputs, threads=[3])
    assert len(sites) == 96  # 3 register-writing dynamic instructions x 32 bits
    assert sites == sorted(sites)
    assert {s.dyn_instr for s in sites} == {1, 2, 3}


def test_enumeration_empty_thread_set(add_one):
    program, inputs = add_one
    assert enumerate_fault_space(program, inputs, threads=[]) == []


def test_thread_without_register_writes_has_no_sites():
    src = """.kernel storeonly
.ctas 1
.ctasize 4
.out out 4
    st out[tid], r5
    exit
"""
    program = parse_kernel(src)
    assert enumerate_fault_space(program, {}, threads=[0, 1]) == []


def test_all_add_one_sites_are_sdc(add_one):
    """Every write feeds the stored sum, so no site on thread 3 can be masked."""
    program, inputs = add_one
    sites = enumerate_fault_space(program, inputs, threads=[3])
    campaign = run_campaign(program, inputs, sites)
    assert campaign.counts(3) == (0, 96, 0)
    assert all(o.kind == "sdc" for o in campaign.per_site.values())


def test_dead_register_sites_are_masked():
    program, inputs = dead_write_kernel()
    sites = [FaultSite(2, 1, bit) for bit in range(32)]  # the overwritten movi
    campaign = run_campaign(program, inputs, sites)
    assert campaign.counts(2) == (32, 0, 0)
    assert all(o == Outcome("masked") for o in campaign.per_site.values())


def test_empty_campaign(add_one):
    program, inputs = add_one
    campaign = run_campaign(program, inputs, [])
    assert campaign.per_site == {}
    assert campaign.per_thread_counts == {}


def test_address_corruption_classified_other_crashed():
    program, inputs = address_probe_kernel()
    campaign = run_campaign(program, inputs, [FaultSite(5, 3, 31)])
    assert campaign.per_site[FaultSite(5, 3, 31)] == Outcome("other", "crashed")


def test_user_supplied_site_never_executed_is_masked(add_one):
    program, inputs = add_one
    campaign = run_campaign(program, inputs, [FaultSite(0, 4, 0), FaultSite(0, 50, 7)])
    # dyn 4 is the store (no destination register), dyn 50 is past the trace
    assert all(
        o == Outcome("masked", "not-executed") for o in campaign.per_site.values()
    )


def test_partition_counts_sum_to_sites(add_one):
    program, inputs = add_one
    sites = enumerate_fault_space(program, inputs, threads=[0, 1, 63])
    campaign = run_campaign(program, inputs, sites)
    for tid in (0, 1, 63):
        assert sum(campaign.counts(tid)) == 96


def test_campaign_deterministic_across_repetitions(add_one):
    program, inputs = add_one
    sites = enumerate_fault_space(program, inputs, threads=[7, 40])
    first = run_campaign(program, inputs, sites)
    second = run_campaign(program, inputs, sites)
    assert first.per_site == second.per_site
    assert first.per_thread_counts == second.per_thread_counts


def test_campaign_refused_when_golden_crashes():
    program, inputs = address_probe_kernel()
    inputs = dict(inputs, idx=[100] * 32)  # out-of-bounds golden addresses
    with pytest.raises(CampaignRefused, match="crashed"):
        golden_run(program, inputs)


def test_sampling_identity_and_determinism(add_one):
    program, inputs = add_one
    sites = enumerate_fault_space(program, inputs, threads=[3, 4, 5])
    assert sample_sites(sites, 1.0, seed=1) == sites
    quarter = sample_sites(sites[:96], 0.25, seed=42)
    assert len(quarter) == 24
    assert quarter == sample_sites(sites[:96], 0.25, seed=42)
    assert quarter != sample_sites(sites[:96], 0.25, seed=43)
    assert set(quarter) <= set(sites[:96])
    with pytest.raises(ValidationError):
        sample_sites(sites, 0.0, seed=1)
    with pytest.raises(ValidationError):
        sample_sites(sites, 1.5, seed=1)


def test_site_validation():
    with pytest.raises(ValidationError):
        FaultSite(0, 1, 32)
    with pytest.raises(ValidationError):
        FaultSite(0, 0, 3)


def test_csv_round_trips(add_one, tmp_path):
    program, inputs = add_one
    sites = enumerate_fault_space(program, inputs, threads=[2])
    campaign = run_campaign(program, inputs, sites)
    results = tmp_path / "campaign.csv"
    write_campaign_csv(campaign, results)
    assert read_campaign_csv(results) == campaign.per_site
    agg = tmp_path / "aggregate.csv"
    write_aggregate_csv(campaign, agg)
    lines = agg.read_text().strip().splitlines()
    assert lines[0] == "thread_id,sites,masked,sdc,other"
    assert lines[1] == "2,96,0,96,0"


def test_classify_outcome_rules(add_one):
    program, inputs = add_one
    golden = golden_run(program, inputs)
    assert classify_outcome(golden, golden) == Outcome("masked", "not-executed")
