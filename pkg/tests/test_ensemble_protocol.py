import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from dipolatt.ensemble_protocol import (EMPTY, LOST, RNG_ALGORITHM, CycleCounts, ErrorModel, cnot_flush_cycle,
                               estimate_fidelity, fill_lattice, paired_probability, run_protocol,
                               run_replicas)
from dipolatt.errors import DomainError, EstimationError, InputError


def test_fill_extremes():
    empty = fill_lattice(1000, 0.0, seed=1)
    assert empty.counts() == {"control": 0, "target": 0, "paired": 0}
    assert np.all(empty.control == EMPTY)
    full = fill_lattice(1000, 1.0, seed=1)
    assert full.counts() == {"control": 500, "target": 500, "paired": 500}
    assert np.all(full.control == 1) and np.all(full.target == 0)
    assert full.n_sites == 1000 and full.n_cells == 500
    assert full.rng_algorithm == RNG_ALGORITHM == "PCG64"


@pytest.mark.parametrize("p", [0.1, 0.3, 0.7])
def test_paired_fraction_is_binomial(p):
    ens = fill_lattice(200_000, p, seed=7)
    n = ens.n_cells
    q = paired_probability(p)
    assert q == pytest.approx(p * p)
    k = ens.counts()["paired"]
    assert abs(k - n * q) < 3 * math.sqrt(n * q * (1 - q))


def test_fill_validation():
    with pytest.raises(DomainError):
        fill_lattice(11, 0.5)
    with pytest.raises(DomainError):
        fill_lattice(10, 1.5)


def test_perfect_gate_keeps_every_pair():
    run = run_protocol(20_000, 0.5, ErrorModel(1.0), seed=3)
    c1, c2 = run.cycles
    assert c1.retained == c1.paired == c2.retained
    assert run.estimate.value == 1.0 and run.estimate.sigma == 0.0
    # every unpaired target is flushed in the first cycle
    assert c1.flushed == c1.unpaired_targets
    assert c2.unpaired_targets == 0


def test_total_failure_removes_everything():
    m = ErrorModel(0.0, error_split=(0, 1, 0))
    ens = fill_lattice(10_000, 0.8, seed=5)
    c = cnot_flush_cycle(ens, m)
    assert c.both_lost == c.paired and c.retained == 0
    assert np.count_nonzero(ens.target >= 0) == 0
    with pytest.raises(EstimationError):
        estimate_fidelity(c, c)


def test_survivors_are_binomial():
    F = 0.9
    ens = fill_lattice(400_000, 1.0, seed=11)
    cnot_flush_cycle(ens, ErrorModel(1.0))
    c = cnot_flush_cycle(ens, ErrorModel(F, error_split=(0, 1, 0)))
    n = c.paired
    lo, hi = stats.binom.interval(0.9999, n, F)
    assert lo <= c.retained <= hi


def test_estimator_on_fixed_counts():
    # [DERIVED] 8100 / 9000 with sigma sqrt(0.9 * 0.1 / 9000)
    est = estimate_fidelity(9000, 8100)
    assert est.value == pytest.approx(0.9)
    assert est.sigma == pytest.approx(math.sqrt(0.09 / 9000))
    assert est.contains(0.9) and not est.contains(0.85)
    assert est.interval(1) == pytest.approx((0.9 - est.sigma, 0.9 + est.sigma))
    with pytest.raises(EstimationError):
        estimate_fidelity(0, 0)
    with pytest.raises(EstimationError):
        estimate_fidelity(10, -1)


def test_seeded_runs_are_bit_reproducible():
    m = ErrorModel(0.92, error_split=(1, 1, 1), target_survives=0.5, unpaired_flip_probability=0.01)
    a = run_protocol(50_000, 0.3, m, seed=42, pre_cycles=1)
    b = run_protocol(50_000, 0.3, m, seed=42, pre_cycles=1)
    assert [c.as_dict() for c in a.cycles] == [c.as_dict() for c in b.cycles]
    assert a.estimate == b.estimate
    c = run_protocol(50_000, 0.3, m, seed=43, pre_cycles=1)
    assert [x.as_dict() for x in c.cycles] != [x.as_dict() for x in a.cycles]


@given(st.floats(0.5, 1.0), st.floats(0.0, 1.0), st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3),
       st.floats(0.0, 1.0), st.floats(0.0, 0.2), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_atom_bookkeeping_is_conserved(F, fill, split, ts, u, seed):
    if sum(split) == 0:
        split = [1.0, 0.0, 0.0]
    m = ErrorModel(F, tuple(split), ts, u)
    ens = fill_lattice(2000, fill, seed=seed)
    for _ in range(3):
        c = cnot_flush_cycle(ens, m)
        assert c.targets_before == c.retained + c.flushed + c.lost
        assert c.controls_before == c.controls_retained + c.controls_flushed + c.controls_lost
        assert c.paired == c.success + c.partner_lost + c.both_lost + c.wrong_state
        assert c.unpaired_targets >= c.unpaired_flipped
        assert set(np.unique(ens.target)) <= {0, EMPTY, LOST}


@pytest.mark.parametrize("n_sites", [200_000, 2_000_000])
def test_estimator_unbiased_across_sizes(n_sites):
    m = ErrorModel(0.92, error_split=(2, 1, 1), target_survives=0.3)
    run = run_protocol(n_sites, 0.5, m, seed=2024)
    assert run.estimate.contains(0.92)


def test_unpaired_flips_bias_and_precycle_cures():
    m = ErrorModel(0.92, unpaired_flip_probability=0.01)
    biased = run_protocol(2_000_000, 0.1, m, seed=9)
    cured = run_protocol(2_000_000, 0.1, m, seed=9, pre_cycles=1)
    assert not biased.estimate.contains(0.92)
    assert biased.estimate.value < 0.9
    assert cured.estimate.contains(0.92)


def test_replicas_pool_and_are_worker_independent():
    m = ErrorModel(0.92)
    est1, pairs1 = run_replicas(4, 100_000, 0.5, m, seed=1, workers=1)
    est2, pairs2 = run_replicas(4, 100_000, 0.5, m, seed=1, workers=2)
    assert pairs1 == pairs2 and est1 == est2
    assert est1.n == sum(p[0] for p in pairs1)
    assert est1.contains(0.92)


def test_error_model_validation():
    m = ErrorModel(0.9, error_split=(2, 1, 1))
    assert m.error_split == pytest.approx((0.5, 0.25, 0.25))
    assert m.outcome_probabilities == pytest.approx([0.9, 0.05, 0.025, 0.025])
    with pytest.raises(InputError):
        ErrorModel(0.9, error_split=(0, 0, 0))
    with pytest.raises(DomainError):
        ErrorModel(1.2)
    with pytest.raises(DomainError):
        ErrorModel(0.9, target_survives=2)
    with pytest.raises(DomainError):
        run_protocol(100, 0.5, m, pre_cycles=-1)
    assert LOST != EMPTY
    assert isinstance(run_protocol(100, 1.0, ErrorModel(1.0), seed=0).cycles[0], CycleCounts)
