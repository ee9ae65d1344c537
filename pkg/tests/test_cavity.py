import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavityorbits.cavity import (
    CavityConfig,
    RateCurve,
    background_rate,
    golden_rule_curve,
    golden_rule_rate,
    mode_count,
    sample_rate_curve,
    uniform_grid,
)


def brute_rate(n, alpha, r):
    # term-by-term loop, no vectorisation
    total = 0.0
    for j in range(1, int(2 * n * alpha) + 1):
        total += (1 + j * j / (4 * n * n * alpha * alpha)) * math.sin(j * math.pi * (r - 1) / 2) ** 2
    return 0.75 / alpha * total


class TestConfig:
    def test_geometry(self):
        cfg = CavityConfig(1.49, 2.0, 0.25)
        assert cfg.d1 == pytest.approx(0.75)
        assert cfg.d2 == pytest.approx(1.25)
        assert cfg.d1 + cfg.d2 == pytest.approx(cfg.d)
        assert cfg.z == pytest.approx(0.25)

    def test_from_distances_round_trip(self):
        cfg = CavityConfig.from_distances(1.2, 0.3, 0.9)
        assert cfg.r_asym == pytest.approx(0.5)
        assert cfg.d1 == pytest.approx(0.3)

    @pytest.mark.parametrize("kw", [dict(n=0.9), dict(alpha=0.0), dict(r_asym=1.2)])
    def test_rejects(self, kw):
        args = dict(n=1.49, alpha=1.0, r_asym=0.0) | kw
        with pytest.raises(ValueError):
            CavityConfig(**args)


@pytest.mark.parametrize("alpha, expected", [(1.0, 2), (0.3, 0), (16.0, 47)])
def test_mode_count(alpha, expected):
    assert mode_count(CavityConfig(1.49, alpha, 0.0)) == expected


@pytest.mark.parametrize(
    "alpha, r, expected, tol",
    [
        (0.3, 0.0, 0.0, 0.0),
        (1.0, 1.0, 0.0, 0.0),
        (1.0, 0.0, 0.83446, 5e-6),
        (1.0, 1 / 3, 1.44172, 2e-5),
    ],
)
def test_golden_rule_examples(alpha, r, expected, tol):
    assert golden_rule_rate(CavityConfig(1.49, alpha, r)) == pytest.approx(expected, abs=tol)


def test_golden_rule_matches_loop():
    for alpha in (0.7, 1.0, 2.35, 9.9):
        for r in (-0.4, 0.0, 0.3, 0.77):
            assert golden_rule_rate(CavityConfig(1.3, alpha, r)) == pytest.approx(brute_rate(1.3, alpha, r), rel=1e-12)


@pytest.mark.parametrize("n", [1.0, 1.49, 2.0])
def test_background(n):
    assert background_rate(n) == n


def test_background_rejects():
    with pytest.raises(ValueError):
        background_rate(0.5)


def test_curve_sample_count():
    curve = sample_rate_curve(1.49, 0.0, 1.0, 16.0, 0.01)
    assert len(curve) == 1501
    assert curve.alphas[-1] == pytest.approx(16.0)
    assert np.all(curve.rates >= 0)


def test_curve_empty_window():
    with pytest.raises(ValueError):
        sample_rate_curve(1.49, 0.0, 1.0, 1.0, 0.01)


def test_curve_mean_near_background():
    n = 1.49
    period = 1 / (2 * n)
    alphas = np.linspace(10.0, 10.0 + 12 * period, 20001)
    mean = np.mean(golden_rule_curve(n, 0.0, alphas))
    assert mean == pytest.approx(n, abs=0.02)


def test_uniform_grid_endpoint():
    assert uniform_grid(1.0, 2.0, 0.1).size == 11
    g = uniform_grid(1.0, 2.05, 0.1)
    assert g.size == 11 and g[-1] < 2.05


def test_csv_round_trip(tmp_path):
    curve = sample_rate_curve(1.49, 0.2, 1.0, 3.0, 0.01)
    path = tmp_path / "curve.csv"
    curve.to_csv(path)
    assert path.read_text().splitlines()[0] == "alpha,rate"
    back = RateCurve.from_csv(path, n=1.49)
    np.testing.assert_array_equal(back.rates, curve.rates)
    np.testing.assert_array_equal(back.alphas, curve.alphas)


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,w\n1,2\n2,3\n")
    with pytest.raises(ValueError):
        RateCurve.from_csv(path, n=1.49)


def test_csv_non_uniform(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("alpha,rate\n1,1\n1.1,1\n1.3,1\n")
    with pytest.raises(ValueError):
        RateCurve.from_csv(path, n=1.49)


alphas_st = st.floats(0.05, 20.0, allow_nan=False)
n_st = st.floats(1.0, 3.0)


@given(n=n_st, alpha=alphas_st, r=st.floats(-1.0, 1.0))
def test_even_in_r(n, alpha, r):
    a = golden_rule_rate(CavityConfig(n, alpha, r))
    b = golden_rule_rate(CavityConfig(n, alpha, -r))
    assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


@given(n=n_st, alpha=alphas_st)
def test_quench_at_mirrors(n, alpha):
    assert golden_rule_rate(CavityConfig(n, alpha, 1.0)) == 0.0
    assert golden_rule_rate(CavityConfig(n, alpha, -1.0)) == 0.0


@given(n=n_st, frac=st.floats(0.01, 0.999))
def test_cutoff(n, frac):
    alpha = frac / (2 * n)
    assert golden_rule_rate(CavityConfig(n, alpha, 0.3)) == 0.0


@given(n=n_st, alpha=alphas_st, r=st.floats(-1.0, 1.0))
def test_non_negative(n, alpha, r):
    assert golden_rule_rate(CavityConfig(n, alpha, r)) >= 0.0


@given(n=n_st, alpha=st.floats(0.5, 20.0), r=st.floats(-0.9, 0.9))
def test_smooth_between_thresholds(n, alpha, r):
    # no jump unless 2 n alpha crosses an integer
    h = 1e-7
    lo, hi = 2 * n * (alpha - h), 2 * n * (alpha + h)
    if math.floor(lo) != math.floor(hi):
        return
    a = golden_rule_rate(CavityConfig(n, alpha - h, r))
    b = golden_rule_rate(CavityConfig(n, alpha + h, r))
    assert abs(a - b) < 1e-4
