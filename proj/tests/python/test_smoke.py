import math

import numpy as np
import pytest

import rbperm


@pytest.fixture
def samples():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(40, 2))
    y = rng.normal(size=(40, 2)) + np.array([1.5, 0.0])
    return x, y


def test_statistics_match_numpy(samples):
    x, y = samples
    np.testing.assert_allclose(rbperm.mean_diff(x, y), x.mean(axis=0) - y.mean(axis=0), atol=1e-12)

    bw = 1.3
    z = np.vstack([x, y])
    k = np.exp(-((z[:, None, :] - z[None, :, :]) ** 2).sum(-1) / (2 * bw**2))
    n1 = len(x)
    kxx, kyy, kxy = k[:n1, :n1], k[n1:, n1:], k[:n1, n1:]
    expected = (
        (kxx.sum() - np.trace(kxx)) / (n1 * (n1 - 1))
        + (kyy.sum() - np.trace(kyy)) / (n1 * (n1 - 1))
        - 2 * kxy.mean()
    )
    assert rbperm.mmd2(x, y, bandwidth=bw) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("scheme", ["block", "single", "full"])
@pytest.mark.parametrize("statistic", ["mean", "mmd"])
def test_run_test(samples, scheme, statistic):
    x, y = samples
    r = rbperm.test(x, y, statistic=statistic, scheme=scheme, perms=99, rho=0.5, blocks=2, seed=3)
    assert len(r.perm_stats) == 99
    assert r.n1 == 40 and r.n2 == 40
    hits = sum(s >= r.observed for s in r.perm_stats)
    assert r.p_value == pytest.approx((1 + hits) / 100)
    assert r.reject == (r.p_value <= 0.05)
    again = rbperm.test(x, y, statistic=statistic, scheme=scheme, perms=99, rho=0.5, blocks=2, seed=3)
    assert again.perm_stats == r.perm_stats


def test_one_dimensional_input():
    r = rbperm.test(np.arange(10.0), np.arange(10.0) + 20, scheme="full", perms=199, seed=1)
    assert r.p_value == pytest.approx(1 / 200)


def test_diagnose(samples):
    x, y = samples
    d = rbperm.diagnose(x, y, rho=0.5, blocks=2, perms=49, variance_replicates=50, stress_prefixes=5)
    assert d.v_star >= 0 and d.m_bound >= 0
    assert d.l_max > 0
    assert 0 < d.p_value <= 1


def test_diagnostic_formulas():
    f = rbperm.rho_feasibility(0.25, 128, 0.05, 0.2)
    assert f.rho_min == pytest.approx((8 / 9) * math.log(20) / 32, rel=1e-12)
    assert f.feasible
    q = rbperm.quantile_bound(8, 0.01, 0.05, 0.0, 0.1)
    assert q.bound == pytest.approx(2 * math.sqrt(0.08 * math.log(20)), rel=1e-12)
    assert rbperm.freedman_tail(1.0, 8, 0.01, 0.1).bound < rbperm.freedman_tail(0.5, 8, 0.01, 0.1).bound


def test_errors(samples):
    x, y = samples
    with pytest.raises(ValueError):
        rbperm.test(x, y, scheme="nope")
    with pytest.raises(ValueError):
        rbperm.test(x, y[:, :1])
    with pytest.raises(rbperm.RbpermError):
        rbperm.test(x, y, alpha=2.0)


def test_simulate(tmp_path):
    spec = tmp_path / "spec.ini"
    spec.write_text(
        "[experiment]\nstatistic = mean\nd = 1\nn_grid = 16\nshift = 1.0\nn_sim = 8\n"
        "schemes = block, full\nseed = 2\n\n[test]\nperms = 19\n\n[blocks]\n16 = 2\n"
    )
    rbperm.simulate(str(spec), str(tmp_path / "out"), threads=1)
    lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
    assert lines[0].startswith("stat,d,n,scheme,scenario,rejection_rate")
    assert len(lines) == 5
