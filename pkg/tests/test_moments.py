import math

import numpy as np
import pytest

from tddmimo import MomentCache, MomentKey, eta_moments, phi_f_moments
from tddmimo.moments import eta_samples, f_fingerprint


def test_closed_form_single_row_moments():
    # ||z||^2 ~ Gamma(M, 1) for a unit-variance complex row
    est = eta_moments(4, 1, 1, 100_000, seed=1)
    mean_exact = math.gamma(4.5) / math.gamma(4)
    var_exact = 4 - mean_exact ** 2
    assert abs(est.mean - mean_exact) < 3 * est.std_error_of_mean
    vals = eta_samples(4, 1, 1, 100_000, seed=1)
    se_var = np.sqrt((np.mean((vals - vals.mean()) ** 4) - est.variance ** 2)
                     / vals.size)
    assert abs(est.variance - var_exact) < 3 * se_var


def test_wishart_trace_inverse_identity():
    # E[tr((Z Z^H)^{-1})] = N / (M - N) for a square-free complex Wishart
    vals = eta_samples(4, 2, 2, 100_000, seed=2)
    inv_sq = vals[~np.isnan(vals)] ** -2
    se = inv_sq.std() / np.sqrt(inv_sq.size)
    assert abs(inv_sq.mean() - 1.0) < 3 * se


def test_scheduling_gain_in_k():
    a = eta_moments(8, 2, 2, 100_000, seed=3)
    b = eta_moments(8, 4, 2, 100_000, seed=4)
    gap = b.mean - a.mean
    assert gap > 3 * np.hypot(a.std_error_of_mean, b.std_error_of_mean)


def test_mean_nonincreasing_in_n():
    ests = [eta_moments(8, 8, n, 100_000, seed=5 + n) for n in (2, 4, 8)]
    for lo, hi in zip(ests[1:], ests[:-1]):
        gap = hi.mean - lo.mean
        assert gap > 3 * np.hypot(lo.std_error_of_mean, hi.std_error_of_mean)


def test_jensen_consistency():
    est = eta_moments(6, 3, 2, 5000, seed=6)
    assert est.variance >= 0.0
    assert est.std_error_of_mean == pytest.approx(
        np.sqrt(est.variance / (est.samples - est.singular_events)), abs=1e-15)


def test_phi_reduces_to_eta_at_identity_f():
    eta = eta_moments(6, 3, 3, 20_000, seed=7)
    phi = phi_f_moments(np.ones(3), 6, 20_000, seed=7)
    assert abs(phi.mean - eta.mean) < 3 * np.hypot(eta.std_error_of_mean,
                                                   phi.std_error_of_mean)


def test_phi_homogeneity():
    f = np.array([0.5, 1.5, 1.0])
    a = phi_f_moments(f, 6, 20_000, seed=8)
    b = phi_f_moments(3.0 * f, 6, 20_000, seed=8)
    assert b.mean == pytest.approx(3.0 * a.mean, rel=1e-10)
    assert b.variance == pytest.approx(9.0 * a.variance, rel=1e-9)


def test_phi_m_large_approximation():
    f = np.array([0.7, 1.0, 1.3, 2.0])
    est = phi_f_moments(f, 256, 10_000, seed=9)
    approx = np.sqrt(256 / np.sum(f ** -2.0))
    assert abs(est.mean - approx) / est.mean < 0.05


def test_dimension_errors():
    with pytest.raises(IndexError):
        eta_moments(4, 5, 2, 100, seed=0)
    with pytest.raises(IndexError):
        eta_moments(4, 2, 3, 100, seed=0)
    with pytest.raises(IndexError):
        phi_f_moments(np.ones(5), 4, 100, seed=0)


def test_worker_count_independence():
    ests = [eta_moments(6, 4, 2, 6000, seed=10, workers=w) for w in (1, 2, 8)]
    for other in ests[1:]:
        assert other == ests[0]


def test_cache_miss_then_hit(tmp_path):
    cache = MomentCache(tmp_path / "cache.txt")
    a = eta_moments(5, 3, 2, 2000, seed=11, cache=cache)
    b = eta_moments(5, 3, 2, 2000, seed=11, cache=cache)
    assert a == b
    assert cache.hits == 1 and cache.misses == 1


def test_cache_keys_include_seed(tmp_path):
    cache = MomentCache(tmp_path / "cache.txt")
    a = eta_moments(5, 3, 2, 2000, seed=12, cache=cache)
    b = eta_moments(5, 3, 2, 2000, seed=13, cache=cache)
    assert a != b
    assert len(cache) == 2


def test_cache_persistence_round_trip(tmp_path):
    path = tmp_path / "cache.txt"
    a = eta_moments(5, 3, 2, 2000, seed=14, cache=MomentCache(path))
    reloaded = MomentCache(path)
    b = eta_moments(5, 3, 2, 2000, seed=14, cache=reloaded)
    assert a == b
    assert reloaded.hits == 1 and reloaded.misses == 0
    assert path.read_text().splitlines()[0] == MomentCache.VERSION


def test_fingerprint_sensitivity():
    f = np.array([0.5, 1.0])
    g = f.copy()
    g[1] += 1e-9
    assert f_fingerprint(f) != f_fingerprint(g)
    assert f_fingerprint(f) == f_fingerprint(f.copy())


def test_moment_key_identity():
    k1 = MomentKey("eta", 4, 2, 1, "-", 100, 7)
    k2 = MomentKey("eta", 4, 2, 1, "-", 100, 7)
    assert k1 == k2 and hash(k1) == hash(k2)
