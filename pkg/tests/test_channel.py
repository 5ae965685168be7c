import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_bdma.channel import (
    AngularSpread,
    ChannelError,
    ChannelSet,
    UlaGeometry,
    bdma_estimate,
    dft_beam_angle,
    dft_column,
    make_channel_set,
    sample_all_true_channels,
    sample_error,
    sample_true_channel,
    steering_vector,
    synthesize_channel,
)
from robust_bdma.config import ConfigError, ScenarioConfig, SpreadSpec


def test_steering_examples():
    g4 = UlaGeometry(4, 0.5)
    np.testing.assert_allclose(steering_vector(g4, 0.0), np.ones(4))
    # theta = pi/2 is excluded by the open interval; approach it
    np.testing.assert_allclose(steering_vector(g4, np.pi / 2 - 1e-9), [1, -1, 1, -1], atol=1e-7)
    v = steering_vector(UlaGeometry(8, 0.5), np.pi / 6)
    expect = [complex(np.cos(-np.pi * n / 2), np.sin(-np.pi * n / 2)) for n in range(8)]
    np.testing.assert_allclose(v, expect, atol=1e-14)
    with pytest.raises(ChannelError):
        steering_vector(g4, 2.0)


def test_geometry_and_spread_validation():
    with pytest.raises(ChannelError):
        UlaGeometry(8, 0.6)
    with pytest.raises(ChannelError):
        AngularSpread(1.5, 0.3)
    with pytest.raises(ChannelError):
        AngularSpread(0.0, 0.1, "truncated_gaussian")


def test_point_source_is_steering_vector():
    geom = UlaGeometry(16)
    h = synthesize_channel(geom, AngularSpread(0.3, 0.0))
    np.testing.assert_allclose(h, steering_vector(geom, 0.3))


@pytest.mark.parametrize("width_deg", [2.0, 5.0, 10.0])
@pytest.mark.parametrize("jitter", [0.0, 1.0])
def test_quadrature_refinement(width_deg, jitter):
    geom = UlaGeometry(64)
    sp = AngularSpread(0.2, np.deg2rad(width_deg))
    a = synthesize_channel(geom, sp, 256, 11, jitter)
    b = synthesize_channel(geom, sp, 512, 11, jitter)
    assert np.linalg.norm(a - b) < 1e-3 * np.linalg.norm(b)


def test_uniform_spectrum_geometric_series():
    geom = UlaGeometry(32, 0.5)
    sp = AngularSpread(-0.4, np.deg2rad(8.0))
    q = 256
    h = synthesize_channel(geom, sp, q)
    thetas = sp.center - sp.width / 2 + (np.arange(q) + 0.5) * sp.width / q
    z = np.exp(-1j * np.pi * np.sin(thetas))
    col_sums = (1 - z**32) / (1 - z)  # sum over antennas of each ray
    assert h.sum() == pytest.approx(col_sums.mean(), rel=1e-12)


def test_bdma_estimate_examples():
    n = 16
    f3 = dft_column(n, 3)
    est, res = bdma_estimate(2.0 * f3, [3])
    np.testing.assert_allclose(est, 2.0 * f3, atol=1e-14)
    assert res < 1e-14
    est, _ = bdma_estimate(dft_column(n, 5), [3])
    assert np.linalg.norm(est) < 1e-14
    with pytest.raises(ChannelError):
        bdma_estimate(f3, [])


def test_bdma_estimate_gram_schmidt():
    rng = np.random.default_rng(5)
    n = 16
    h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    idx = [2, 9]
    est, res = bdma_estimate(h, idx)
    # Gram-Schmidt on the raw (unnormalised) columns
    basis = []
    for m in idx:
        v = np.exp(-2j * np.pi * m * np.arange(n) / n)
        for b in basis:
            v = v - np.vdot(b, v) * b
        basis.append(v / np.linalg.norm(v))
    proj = sum(np.vdot(b, h) * b for b in basis)
    np.testing.assert_allclose(est, proj, atol=1e-12)
    assert res == pytest.approx(np.linalg.norm(h - proj))


def test_synthetic_set():
    cs = make_channel_set(ScenarioConfig(n_antennas=128, n_users=30, g=0.5))
    np.testing.assert_allclose(cs.error_radii, 0.5 * np.sqrt(128))
    assert cs.error_radii[0] == pytest.approx(5.65685, abs=1e-5)
    np.testing.assert_allclose(cs.estimate_norms**2, 128.0)
    cs0 = make_channel_set(ScenarioConfig(n_antennas=16, n_users=3, g=0.0))
    assert np.all(cs0.error_radii == 0) and cs0.eve_error_radius == 0


def test_physical_aligned_point_sources():
    n, k = 16, 3
    geom = UlaGeometry(n)
    idx = [1, 4, 12, 14]
    spreads = tuple(SpreadSpec(float(np.rad2deg(dft_beam_angle(geom, m)))) for m in idx)
    cfg = ScenarioConfig(n_antennas=n, n_users=k, g=0.1, channel_mode="physical", spreads=spreads)
    cs = make_channel_set(cfg)
    np.testing.assert_allclose(cs.all_estimates, cs.true_channels, atol=1e-12)
    np.testing.assert_allclose(cs.error_radii, 0.1 * np.sqrt(n))


def test_physical_set_with_spread_is_valid():
    cfg = ScenarioConfig(n_antennas=32, n_users=4, g=0.2, channel_mode="physical",
                         spread_width_deg=3.0, phase_jitter=0.5)
    a = make_channel_set(cfg, trial=3)
    b = make_channel_set(cfg, trial=3)
    np.testing.assert_array_equal(a.true_channels, b.true_channels)
    assert np.all(np.linalg.norm(a.true_channels - a.all_estimates, axis=1)
                  <= np.append(a.error_radii, a.eve_error_radius) * (1 + 1e-12))


def test_channel_set_validation():
    n = 8
    cols = np.array([dft_column(n, m) for m in (0, 1, 2)]) * 2
    with pytest.raises(ChannelError, match="user 1"):
        ChannelSet(cols[:2], cols[2], [0.1, 2.5], 0.1, 1.0, 1.0)
    bad = cols.copy()
    bad[1] += 0.1 * cols[0]
    with pytest.raises(ChannelError, match="orthogonal"):
        ChannelSet(bad[:2], bad[2], 0.1, 0.1, 1.0, 1.0)
    with pytest.raises(ConfigError, match="n_users"):
        ScenarioConfig(n_antennas=4, n_users=4)


def test_channel_set_round_trip():
    cs = make_channel_set(ScenarioConfig(n_antennas=8, n_users=2, g=0.3))
    back = ChannelSet.from_dict(cs.to_dict())
    np.testing.assert_array_equal(back.all_estimates, cs.all_estimates)
    np.testing.assert_array_equal(back.error_radii, cs.error_radii)


def test_sampling_examples():
    cs = make_channel_set(ScenarioConfig(n_antennas=8, n_users=2, g=0.0))
    np.testing.assert_array_equal(sample_true_channel(cs, 0, 1), cs.estimates[0])
    cs = make_channel_set(ScenarioConfig(n_antennas=8, n_users=2, g=0.4))
    a = sample_all_true_channels(cs, 99)
    np.testing.assert_array_equal(a, sample_all_true_channels(cs, 99))
    np.testing.assert_array_equal(sample_true_channel(cs, "eve", 4), sample_true_channel(cs, "eve", 4))


@pytest.mark.parametrize("n", [1, 4, 16])
def test_ball_sampler_moments(n):
    rng = np.random.default_rng(n)
    r = np.array([np.linalg.norm(sample_error(n, 1.0, rng)) for _ in range(10_000)])
    assert r.max() <= 1.0
    expect = 2 * n / (2 * n + 1)
    se = np.sqrt(2 * n / ((2 * n + 2) * (2 * n + 1) ** 2) / r.size)
    assert abs(r.mean() - expect) < 5 * se


def test_sphere_sampler():
    rng = np.random.default_rng(0)
    assert np.linalg.norm(sample_error(6, 2.0, rng, "sphere")) == pytest.approx(2.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.floats(0.0, 0.95), st.integers(0, 10**6))
def test_true_channels_stay_in_ball(n, g, seed):
    k = max(1, n // 3)
    cs = make_channel_set(ScenarioConfig(n_antennas=n, n_users=k, g=g))
    tc = sample_all_true_channels(cs, seed)
    dist = np.linalg.norm(tc - cs.all_estimates, axis=1)
    assert np.all(dist <= np.append(cs.error_radii, cs.eve_error_radius) * (1 + 1e-12))
