"""Price-path generator contracts: shapes, determinism, grid rules."""
import numpy as np
import pytest

from fracvol.errors import GridMismatchError, ParameterError
from fracvol.estimation import leverage
from fracvol.simulate import (IDENTIFIED_DRIVERS, MarketPath, ModelParams,
                              calibrated_kprime, identified_return_ensemble,
                              logvol_marginal_moments, path_ensemble,
                              simulate_identified, simulate_path)


def test_path_shape_and_grid():
    path = simulate_path(ModelParams(), 256, 1.0, seed=0)
    assert len(path.prices) == 257
    np.testing.assert_allclose(path.times, np.arange(257.0))
    assert np.all(path.prices > 0)
    path.validate()


def test_replay_is_identical():
    a = simulate_path(ModelParams(), 128, 1.0, seed=5)
    b = simulate_path(ModelParams(), 128, 1.0, seed=5)
    np.testing.assert_array_equal(a.prices, b.prices)
    np.testing.assert_array_equal(a.logvol, b.logvol)


def test_seed_changes_both_streams():
    a = simulate_path(ModelParams(), 128, 1.0, seed=1)
    b = simulate_path(ModelParams(), 128, 1.0, seed=2)
    assert not np.array_equal(a.logvol, b.logvol)
    assert not np.array_equal(a.prices, b.prices)


def test_logvol_marginal_moments():
    mean, var = logvol_marginal_moments(ModelParams())
    assert mean == -5.0
    assert var == pytest.approx(0.59 ** 2)
    path = simulate_path(ModelParams(), 2 ** 15, 1.0, seed=3)
    # long memory makes the sample mean converge slowly; bands are loose
    assert path.logvol.mean() == pytest.approx(-5.0, abs=0.35)
    assert path.logvol.std() == pytest.approx(0.59, abs=0.1)


def test_constant_vol_reduces_to_diffusion():
    params = ModelParams(k=0.0, beta=-2.0, mu=0.005)
    path = simulate_path(params, 20000, 1.0, seed=11)
    np.testing.assert_allclose(path.logvol, -2.0)
    r = np.diff(np.log(path.prices))
    sigma = np.exp(-2.0)
    assert r.mean() == pytest.approx(0.005 - sigma ** 2 / 2,
                                     abs=4 * sigma / np.sqrt(20000))
    assert r.std() == pytest.approx(sigma, rel=0.03)


def test_grid_mismatch_rejected():
    with pytest.raises(GridMismatchError):
        simulate_path(ModelParams(delta=1.0), 64, 0.3, seed=0)


def test_identified_coupling_needs_ma_form():
    with pytest.raises(ParameterError):
        simulate_path(ModelParams(coupling=IDENTIFIED_DRIVERS), 64, 1.0)
    with pytest.raises(ParameterError):
        path_ensemble(ModelParams(coupling=IDENTIFIED_DRIVERS), 64, 1.0)


def test_ensemble_prefix_stable_in_path_count():
    params = ModelParams()
    _, p4, _ = path_ensemble(params, 64, 1.0, seed=9, n_paths=4)
    _, p8, _ = path_ensemble(params, 64, 1.0, seed=9, n_paths=8)
    np.testing.assert_array_equal(p4, p8[:4])


def test_ensemble_terminal_mean_at_zero_drift():
    _, prices, _ = path_ensemble(ModelParams(), 200, 1.0, seed=17, n_paths=2000)
    terminal = prices[:, -1]
    z = (terminal.mean() - 1.0) / (terminal.std(ddof=1) / np.sqrt(2000))
    assert abs(z) < 4.0


def test_identified_ensemble_shape_and_replay():
    params = ModelParams(coupling=IDENTIFIED_DRIVERS)
    a = identified_return_ensemble(params, 500, 1.0, seed=3, n_paths=8)
    b = identified_return_ensemble(params, 500, 1.0, seed=3, n_paths=8)
    assert a.shape == (8, 500)
    np.testing.assert_array_equal(a, b)


def test_identified_coupling_produces_leverage():
    params = ModelParams(beta=-6.0, coupling=IDENTIFIED_DRIVERS)
    rets = identified_return_ensemble(params, 2000, 1.0, seed=3, n_paths=64)
    lev = leverage(rets, 3)
    taus = lev[:, 0]
    assert lev[taus == 1, 1][0] < 0
    assert lev[taus == 2, 1][0] < 0


def test_simulate_identified_path():
    path = simulate_identified(ModelParams(coupling=IDENTIFIED_DRIVERS),
                               512, 1.0, seed=2)
    path.validate()
    assert len(path.prices) == 513


def test_calibrated_kernel_amplitude():
    v = calibrated_kprime(ModelParams(), 1.0, 512)
    assert v > 0
    assert calibrated_kprime(ModelParams(k=0.0), 1.0, 512) == 0.0


def test_param_validation():
    for bad in (ModelParams(hurst=0.0), ModelParams(delta=-1.0),
                ModelParams(k=-0.1), ModelParams(coupling="other")):
        with pytest.raises(ParameterError):
            bad.validate()
    with pytest.raises(ParameterError):
        simulate_path(ModelParams(), 0, 1.0)
    with pytest.raises(ParameterError):
        simulate_path(ModelParams(), 64, 1.0, s0=0.0)


def test_market_path_validation():
    with pytest.raises(ParameterError):
        MarketPath(times=np.array([0.0, 1.0]), prices=np.array([1.0, -1.0]),
                   logvol=np.zeros(2), seed=0).validate()
    with pytest.raises(ParameterError):
        MarketPath(times=np.array([0.0, 0.0]), prices=np.ones(2),
                   logvol=np.zeros(2), seed=0).validate()
    with pytest.raises(ParameterError):
        MarketPath(times=np.arange(3.0), prices=np.ones(3),
                   logvol=np.zeros(2), seed=0).validate()
