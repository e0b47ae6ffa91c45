"""Covariance exactness and determinism of the noise generator."""
import numpy as np
import pytest

from fracvol.errors import ParameterError
from fracvol.fgn import (FgnSeries, fbm_covariance, fbm_from_fgn,
                         fgn_autocovariance, generate_fgn)
from fracvol.rng import substream


def test_autocovariance_matches_fbm_increments():
    # gamma(k) must equal cov(B(t+1)-B(t), B(s+1)-B(s)) at |t-s| = k
    h = 0.8
    for k in range(6):
        c = (fbm_covariance(1, k + 1, h) - fbm_covariance(1, k, h)
             - fbm_covariance(0, k + 1, h) + fbm_covariance(0, k, h))
        assert fgn_autocovariance(k, h) == pytest.approx(c, rel=1e-12)


def test_half_hurst_is_white():
    gamma = fgn_autocovariance(np.arange(1, 10), 0.5)
    np.testing.assert_allclose(gamma, 0.0, atol=1e-12)
    assert fgn_autocovariance(0, 0.5) == 1.0


def test_long_memory_sign():
    lags = np.arange(1, 50)
    assert np.all(fgn_autocovariance(lags, 0.8) > 0)
    assert np.all(fgn_autocovariance(lags, 0.3) < 0)


def test_spacing_enters_as_power():
    a = generate_fgn(64, 0.7, spacing=1.0, seed=4).values
    b = generate_fgn(64, 0.7, spacing=2.0, seed=4).values
    np.testing.assert_allclose(b, a * 2.0 ** 0.7, rtol=1e-12)


def test_determinism_and_seed_sensitivity():
    x = generate_fgn(128, 0.83, seed=7).values
    y = generate_fgn(128, 0.83, seed=7).values
    z = generate_fgn(128, 0.83, seed=8).values
    np.testing.assert_array_equal(x, y)
    assert not np.array_equal(x, z)


def test_sample_covariance_tracks_theory():
    h, n, paths = 0.8, 512, 400
    est = np.empty((paths, 9))
    for s in range(paths):
        x = generate_fgn(n, h, seed=s).values
        for k in range(9):
            est[s, k] = (x[: n - k] @ x[k:]) / n
    z = (est.mean(0) - fgn_autocovariance(np.arange(9), h)) / (
        est.std(0, ddof=1) / np.sqrt(paths))
    assert np.abs(z).max() < 5.0


def test_hurst_one_is_a_single_shared_draw():
    x = generate_fgn(32, 1.0, seed=1).values
    assert np.ptp(x) == 0.0


def test_fallback_sampler_agrees_in_law():
    # compare second moments of the sequential sampler with the fft one
    from fracvol.fgn import _fgn_durbin_levinson, _sample_unit_fgn
    h, n, paths = 0.75, 64, 800
    dl = _fgn_durbin_levinson(n, h, substream(123), paths)
    ci = _sample_unit_fgn(n, h, substream(321), paths)
    lag1 = fgn_autocovariance(1, h)
    for x in (dl, ci):
        assert (x * x).mean() == pytest.approx(1.0, abs=0.03)
        assert (x[:, :-1] * x[:, 1:]).mean() == pytest.approx(lag1, abs=0.03)


def test_fbm_accumulation():
    noise = generate_fgn(50, 0.7, seed=2)
    path = fbm_from_fgn(noise)
    assert path.values[0] == 0.0
    assert len(path.values) == 50
    # partial sums round, so differencing recovers the noise only to fp noise
    np.testing.assert_allclose(np.diff(path.values), noise.values[:-1],
                               rtol=0, atol=1e-12)
    np.testing.assert_allclose(path.values[1:],
                               np.cumsum(noise.values)[:-1], rtol=0, atol=0)


def test_domain_errors():
    with pytest.raises(ParameterError):
        fgn_autocovariance(1, 1.2)
    with pytest.raises(ParameterError):
        fgn_autocovariance(-1, 0.5)
    with pytest.raises(ParameterError):
        generate_fgn(0, 0.5)
    with pytest.raises(ParameterError):
        generate_fgn(8, 0.5, spacing=0.0)
    with pytest.raises(ParameterError):
        fbm_from_fgn(FgnSeries(values=np.array([]), spacing=1.0, hurst=0.5,
                               seed=0))
