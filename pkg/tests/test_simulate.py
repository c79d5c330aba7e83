import math

import numpy as np
import pytest

from apqsm.modulation import ApqScheme, PowerVector
from apqsm.simulate import (SweepSpec, point_seed, run_point, run_sweep, sigma_from_snr_db,
                            two_step_decomposition, wilson_interval, with_detector)

from conftest import snr_sigma


def test_sigma_from_snr():
    assert sigma_from_snr_db(120.0) == pytest.approx(1e-6, rel=1e-15)
    assert sigma_from_snr_db(20.0, gamma=2.0, p_opt=3.0) == pytest.approx(0.6)
    assert sigma_from_snr_db(math.inf) == 0.0
    with pytest.raises(ValueError):
        sigma_from_snr_db(math.nan)
    with pytest.raises(ValueError):
        sigma_from_snr_db(-math.inf)


@pytest.mark.parametrize("k, n", [(0, 100), (7, 1000), (500, 1000), (1000, 1000)])
def test_wilson_matches_closed_form(k, n):
    z = 1.959963984540054
    p = k / n
    c = (p + z * z / (2 * n)) / (1 + z * z / n)
    h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    lo, hi = wilson_interval(k, n)
    assert lo == pytest.approx(max(0.0, c - h), abs=1e-12)
    assert hi == pytest.approx(min(1.0, c + h), abs=1e-12)


def test_point_seed_depends_only_on_snr():
    a = np.random.default_rng(point_seed(1, 80.0)).random()
    b = np.random.default_rng(point_seed(1, 80.0)).random()
    c = np.random.default_rng(point_seed(1, 82.0)).random()
    d = np.random.default_rng(point_seed(2, 80.0)).random()
    assert a == b and a != c and a != d


@pytest.fixture(scope="module")
def small_spec(small_scheme, unit_H):
    return SweepSpec(small_scheme.codebook(), unit_H, [24.0, 28.0, 32.0], "joint",
                     min_errors=100, max_trials=50_000, master_seed=5, batch_size=4096)


def test_same_seed_same_counts(small_spec):
    a = run_sweep(small_spec)
    b = run_sweep(small_spec)
    assert [(p.trials, p.errors) for p in a] == [(p.trials, p.errors) for p in b]


def test_worker_count_does_not_change_counts(small_spec):
    a = run_sweep(small_spec, workers=1)
    b = run_sweep(small_spec, workers=3)
    assert a.to_csv() == b.to_csv()


def test_snr_order_does_not_change_counts(small_spec):
    from dataclasses import replace
    shuffled = replace(small_spec, snr_db_list=[32.0, 24.0, 28.0])
    assert run_sweep(shuffled).to_csv() == run_sweep(small_spec).to_csv()


def test_empty_snr_list_rejected(small_spec):
    from dataclasses import replace
    with pytest.raises(ValueError):
        run_sweep(replace(small_spec, snr_db_list=[]))


def test_spec_validation(small_scheme, unit_H):
    with pytest.raises(ValueError):
        SweepSpec(small_scheme.codebook(), unit_H, [1.0], "sphere")
    with pytest.raises(ValueError):
        SweepSpec(small_scheme.codebook(), unit_H, [1.0], min_errors=0)


def test_noiseless_point(small_spec):
    pt = run_point(small_spec, math.inf)
    assert pt.errors == 0 and not pt.unreliable and pt.trials == small_spec.batch_size


def test_unreliable_flag(small_spec):
    from dataclasses import replace
    pt = run_point(replace(small_spec, max_trials=1000, min_errors=10 ** 6), 30.0)
    assert pt.unreliable and pt.trials == 1000


def test_csv_layout(small_spec):
    curve = run_sweep(small_spec)
    lines = curve.to_csv(with_bound=True).splitlines()
    assert lines[0] == "snr_db,trials,errors,ser,ci_lo,ci_hi,bound"
    assert curve.to_csv().splitlines()[0] == "snr_db,trials,errors,ser,ci_lo,ci_hi"
    assert len(lines) == 4


def naive_ser(cb, H, sigma, n, seed):
    """Independent loop-per-symbol simulator."""
    rng = np.random.default_rng(seed)
    pts = cb.flat @ H.T
    errors = 0
    for _ in range(n):
        k = rng.integers(cb.size)
        y = pts[k] + sigma * rng.standard_normal(H.shape[0])
        if int(np.argmin(np.sum((pts - y) ** 2, axis=1))) != k:
            errors += 1
    return errors


def test_against_naive_simulator(small_scheme, unit_H):
    cb = small_scheme.codebook()
    n = 20_000
    spec = SweepSpec(cb, unit_H, [30.0], "joint", min_errors=10 ** 9, max_trials=n, master_seed=9)
    pt = run_sweep(spec)[0]
    k = naive_ser(cb, unit_H, snr_sigma(30.0), n, 77)
    lo, hi = wilson_interval(k, n)
    assert pt.ci_lo <= hi and lo <= pt.ci_hi


def test_two_step_not_better_than_joint(ref_H):
    cb = ApqScheme(4, (2, 4, 2), PowerVector.lattice((2, 4, 2))).codebook()
    spec = SweepSpec(cb, ref_H, [80.0, 84.0], "joint", min_errors=500, max_trials=200_000, master_seed=3)
    joint = run_sweep(spec)
    two = run_sweep(with_detector(spec, "two-step"))
    for a, b in zip(joint, two):
        assert b.ci_hi >= a.ci_lo


def test_two_step_decomposition_is_consistent(small_scheme, unit_H):
    d = two_step_decomposition(small_scheme.codebook(), unit_H, 1.0, snr_sigma(18.0), 100_000,
                               np.random.default_rng(1))
    e, c = d["index_error_rate"], d["symbol_error_given_correct"]
    assert d["ser"] == pytest.approx(e + (1 - e) * c, rel=1e-12)
    assert d["symbol_error_given_wrong"] <= 1.0
