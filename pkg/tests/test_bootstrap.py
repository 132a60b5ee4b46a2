import math

import numpy as np
import pytest

from conftest import gaussian_pair
from tailcor.bootstrap import (
    BootstrapSpec,
    block_indices,
    bootstrap_matrix,
    bootstrap_pair,
)
from tailcor.errors import InvalidInputError, UnstableBootstrapError
from tailcor.pair import TailConfig
from tailcor.simulation import equicorrelated, sample


def test_spec_validation():
    BootstrapSpec()
    assert BootstrapSpec().block_length == 50 and BootstrapSpec().replications == 500
    for kwargs in ({"block_length": 0}, {"replications": 1}, {"seed": -1}, {"seed": 2**64}, {"block_length": 2.5}):
        with pytest.raises(InvalidInputError):
            BootstrapSpec(**kwargs)


def test_block_indices_forced_single_block():
    idx = block_indices(60, BootstrapSpec(block_length=60, seed=4), 0)
    np.testing.assert_array_equal(idx, np.arange(60))


def test_block_indices_length_one_is_iid():
    spec = BootstrapSpec(block_length=1, seed=9)
    idx = np.concatenate([block_indices(100, spec, r) for r in range(200)])
    assert idx.min() == 0 and idx.max() == 99
    counts = np.bincount(idx, minlength=100)
    # multinomial(20000, 1/100): counts near 200
    assert np.all(np.abs(counts - 200) < 80)


def test_block_indices_structure():
    spec = BootstrapSpec(block_length=7, seed=3)
    idx = block_indices(50, spec, 5)
    assert idx.size == 50
    blocks = [idx[i:i + 7] for i in range(0, 50, 7)]
    for b in blocks:
        np.testing.assert_array_equal(np.diff(b), np.ones(b.size - 1))
        assert 0 <= b[0] <= 50 - 7


def test_block_indices_deterministic_and_replicate_specific():
    spec = BootstrapSpec(block_length=5, seed=123)
    a = block_indices(100, spec, 3)
    np.testing.assert_array_equal(a, block_indices(100, spec, 3))
    assert not np.array_equal(a, block_indices(100, spec, 4))
    assert not np.array_equal(a, block_indices(100, BootstrapSpec(block_length=5, seed=124), 3))


def test_block_indices_error():
    with pytest.raises(InvalidInputError):
        block_indices(10, BootstrapSpec(block_length=50), 0)


def test_bootstrap_is_bit_reproducible():
    x, y = gaussian_pair(0.5, 2000, 1)
    spec = BootstrapSpec(block_length=50, replications=60, seed=77)
    a = bootstrap_pair(x, y, TailConfig(), spec)
    b = bootstrap_pair(x, y, TailConfig(), spec)
    c = bootstrap_pair(x, y, TailConfig(), spec, jobs=4)
    assert a.to_dict() == b.to_dict() == c.to_dict()
    np.testing.assert_array_equal(a.replicates, c.replicates)


def test_two_replications():
    x, y = gaussian_pair(0.5, 500, 2)
    bs = bootstrap_pair(x, y, spec=BootstrapSpec(block_length=25, replications=2, seed=5))
    r1, r2 = bs.replicates
    assert bs.std_error == pytest.approx(abs(r1 - r2) / math.sqrt(2), rel=1e-12)


def test_location_shift_gives_same_distribution():
    x, y = gaussian_pair(0.5, 1000, 3)
    spec = BootstrapSpec(replications=40, seed=6)
    a = bootstrap_pair(x, y, spec=spec)
    b = bootstrap_pair(x + 3.5, y - 100.0, spec=spec)
    np.testing.assert_allclose(a.replicates, b.replicates, rtol=1e-12)


def test_quantiles_ordered_and_fields_present():
    x, y = gaussian_pair(0.5, 1000, 4)
    bs = bootstrap_pair(x, y, spec=BootstrapSpec(replications=50, seed=7))
    for name in ("tailcor", "linear", "nonlinear", "rho", "downside", "upside", "alt"):
        est = bs[name]
        assert est is not None
        assert est.quantiles[0] <= est.quantiles[1]
        assert math.isfinite(est.std_error) and est.std_error >= 0
        assert est.replicates_kept == 50


def test_se_within_factor_two_of_mc_sd():
    x, y = gaussian_pair(0.5, 10_000, 8)
    bs = bootstrap_pair(x, y, spec=BootstrapSpec(seed=8))
    assert 0.5 * 0.011 <= bs.std_error <= 2 * 0.011


def test_failed_replicates_are_dropped_then_unstable():
    # 26% positive values in a sea of zeros: the sample IQR is barely positive
    # and resamples often lose it
    rng = np.random.default_rng(0)
    x = np.zeros(200)
    x[rng.choice(200, 52, replace=False)] = np.abs(rng.standard_normal(52)) + 0.1
    y = rng.standard_normal(200)
    with pytest.raises(UnstableBootstrapError):
        bootstrap_pair(x, y, spec=BootstrapSpec(block_length=100, replications=50, seed=1))


def test_matrix_bootstrap():
    panel = sample(equicorrelated("gaussian", 3, 0.5), 2000, 11)
    spec = BootstrapSpec(replications=30, seed=2)
    a = bootstrap_matrix(panel, TailConfig(), spec)
    b = bootstrap_matrix(panel, TailConfig(), spec, jobs=3)
    np.testing.assert_array_equal(a.tailcor_se, b.tailcor_se)
    np.testing.assert_array_equal(a.tailcor_se, a.tailcor_se.T)
    assert np.all(a.tailcor_se > 0)
    np.testing.assert_allclose(np.diag(a.linear_se), 0.0, atol=1e-15)
    assert a.replicates_kept == 30 and a.failed == 0
    assert a.pooled_nonlinear.std_error > 0


@pytest.mark.slow
def test_coverage_sanity():
    # 200 Gaussian worlds at T=2000; the 95% percentile interval should cover 1.225 often
    truth = 1.2247
    covered = 0
    for w in range(200):
        x, y = gaussian_pair(0.5, 2000, 50_000 + w)
        est = bootstrap_pair(x, y, spec=BootstrapSpec(replications=200, seed=w))["tailcor"]
        covered += est.quantiles[0] <= truth <= est.quantiles[1]
    assert covered / 200 >= 0.85


def test_failed_replicates_below_threshold_are_counted():
    rng = np.random.default_rng(0)
    x = np.zeros(200)
    x[rng.choice(200, 56, replace=False)] = np.abs(rng.standard_normal(56)) + 0.1
    y = rng.standard_normal(200)
    bs = bootstrap_pair(x, y, spec=BootstrapSpec(block_length=10, replications=50, seed=1))
    assert 0 < bs.failed <= 10
    assert bs["tailcor"].replicates_kept == 50 - bs.failed
    assert bs["tailcor"].failed == bs.failed
