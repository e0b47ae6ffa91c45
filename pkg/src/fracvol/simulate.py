"""Path simulation for the fractional-volatility price model.

Two constructions are provided.

``simulate_path`` draws log-volatility as exact fractional Gaussian noise at
the observation spacing delta,

    log sigma_t = beta + (k / delta) * (B_H(t) - B_H(t - delta)),

holds it piecewise-constant on the price grid, and advances the log price by
the exact conditional-Gaussian step. The volatility and price drivers are
always independent streams here.

``simulate_identified`` builds log-volatility as a truncated moving average
of past Brownian increments with the power-law kernel (t - s)^(H - 3/2). The
price equation can reuse the volatility increments (identified drivers, the
configuration that produces a leverage effect) or draw its own (independent
drivers, no leverage).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import GridMismatchError, ParameterError
from .fgn import _sample_unit_fgn, check_hurst
from .rng import substream

INDEPENDENT_DRIVERS = "independent_drivers"
IDENTIFIED_DRIVERS = "identified_drivers"

# substream ids: volatility driver, price driver, per-chunk ensemble variants
_VOL, _PRICE, _ENS_VOL, _ENS_PRICE = 0, 1, 2, 3
_CHUNK = 256  # fixed ensemble chunk size; part of the determinism contract


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the fractional volatility model."""

    mu: float = 0.0
    beta: float = -5.0
    k: float = 0.59
    delta: float = 1.0
    hurst: float = 0.83
    coupling: str = INDEPENDENT_DRIVERS
    # Kernel amplitude of the moving-average form. None means "calibrate so
    # the stationary variance of log sigma matches the fGn form", k^2 d^(2H-2).
    kprime: float | None = None

    def validate(self) -> None:
        check_hurst(self.hurst)
        if self.delta <= 0:
            raise ParameterError(f"delta must be positive, got {self.delta!r}")
        if self.k < 0:
            raise ParameterError(f"k must be nonnegative, got {self.k!r}")
        if self.kprime is not None and self.kprime < 0:
            raise ParameterError(f"kprime must be nonnegative, got {self.kprime!r}")
        if self.coupling not in (INDEPENDENT_DRIVERS, IDENTIFIED_DRIVERS):
            raise ParameterError(f"unknown coupling {self.coupling!r}")


@dataclass(frozen=True)
class MarketPath:
    """A simulated (or ingested) price path with aligned log-volatility."""

    times: np.ndarray
    prices: np.ndarray
    logvol: np.ndarray
    seed: int

    def validate(self) -> None:
        n = len(self.times)
        if len(self.prices) != n or len(self.logvol) != n:
            raise ParameterError("times, prices and logvol must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ParameterError("times must be strictly increasing")
        if np.any(self.prices <= 0):
            raise ParameterError("prices must be strictly positive")


def logvol_marginal_moments(params: ModelParams) -> tuple[float, float]:
    """Mean and variance of log sigma_t: (beta, k^2 delta^(2H - 2))."""
    params.validate()
    return params.beta, params.k**2 * params.delta ** (2.0 * params.hurst - 2.0)


def _grid_ratio(num: float, den: float) -> int | None:
    """num/den as an exact-ish integer >= 1, or None."""
    ratio = num / den
    r = round(ratio)
    if r >= 1 and abs(ratio - r) <= 1e-9 * r:
        return int(r)
    return None


def _logvol_grid(params: ModelParams, n_values: int, dt: float,
                 rng: np.random.Generator, n_paths: int) -> np.ndarray:
    """(n_paths, n_values) samples of log sigma on the dt grid.

    The underlying noise lives at spacing delta. For dt < delta each value is
    held for delta/dt grid steps; for dt > delta the delta-grid noise is
    subsampled every dt/delta values, which is exact because the subsampled
    entries are themselves the delta-increments at the coarse times.
    """
    if params.k == 0.0:
        return np.full((n_paths, n_values), params.beta)
    scale = params.k * params.delta ** (params.hurst - 1.0)
    hold = _grid_ratio(params.delta, dt)
    if hold is not None:
        n_vol = -(-n_values // hold)  # ceil
        g = _sample_unit_fgn(n_vol, params.hurst, rng, n_paths)
        return params.beta + scale * np.repeat(g, hold, axis=1)[:, :n_values]
    sub = _grid_ratio(dt, params.delta)
    if sub is not None:
        n_fine = (n_values - 1) * sub + 1
        g = _sample_unit_fgn(n_fine, params.hurst, rng, n_paths)
        return params.beta + scale * g[:, ::sub]
    raise GridMismatchError(
        f"dt={dt!r} and delta={params.delta!r} have no integer ratio either way"
    )


def _advance_prices(logvol: np.ndarray, eps: np.ndarray, mu: float, dt: float,
                    s0: float) -> np.ndarray:
    """Exact log-Euler: eps are the Brownian increments over each dt step."""
    sig = np.exp(logvol[..., :-1])
    incr = (mu - 0.5 * sig**2) * dt + sig * eps
    log_s = np.concatenate(
        [np.zeros(incr.shape[:-1] + (1,)), np.cumsum(incr, axis=-1)], axis=-1
    )
    return s0 * np.exp(log_s)


def _check_path_args(params: ModelParams, n_steps: int, dt: float, s0: float) -> None:
    params.validate()
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    if s0 <= 0:
        raise ParameterError(f"s0 must be positive, got {s0!r}")


def simulate_path(params: ModelParams, n_steps: int, dt: float, s0: float = 1.0,
                  seed: int = 0) -> MarketPath:
    """Simulate one path of the fGn-form model.

    This form has no mechanism to share drivers, so identified coupling is
    rejected; use simulate_identified for leverage studies.
    """
    _check_path_args(params, n_steps, dt, s0)
    if params.coupling == IDENTIFIED_DRIVERS:
        raise ParameterError(
            "identified drivers require the moving-average form; "
            "use simulate_identified"
        )
    logvol = _logvol_grid(params, n_steps + 1, dt, substream(seed, _VOL), 1)[0]
    eps = np.sqrt(dt) * substream(seed, _PRICE).standard_normal(n_steps)
    prices = _advance_prices(logvol, eps, params.mu, dt, s0)
    times = np.arange(n_steps + 1) * dt
    return MarketPath(times=times, prices=prices, logvol=logvol, seed=int(seed))


def path_ensemble(params: ModelParams, n_steps: int, dt: float, s0: float = 1.0,
                  seed: int = 0, n_paths: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ensemble of fGn-form paths: (times, prices, logvol).

    prices and logvol have shape (n_paths, n_steps + 1). Everything is held
    in memory, so keep n_paths * n_steps within budget.
    """
    _check_path_args(params, n_steps, dt, s0)
    if params.coupling == IDENTIFIED_DRIVERS:
        raise ParameterError(
            "identified drivers require the moving-average form; "
            "use identified_return_ensemble"
        )
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    logvol = _logvol_grid(params, n_steps + 1, dt, substream(seed, _VOL), n_paths)
    eps = np.sqrt(dt) * substream(seed, _PRICE).standard_normal((n_paths, n_steps))
    prices = _advance_prices(logvol, eps, params.mu, dt, s0)
    return np.arange(n_steps + 1) * dt, prices, logvol


def _kernel(history: int, dt: float, hurst: float) -> np.ndarray:
    return (np.arange(1, history + 1) * dt) ** (hurst - 1.5)


def calibrated_kprime(params: ModelParams, dt: float, history: int) -> float:
    """Kernel amplitude matching the fGn-form stationary log-vol variance."""
    w = _kernel(history, dt, params.hurst)
    return params.k * params.delta ** (params.hurst - 1.0) / np.sqrt(np.sum(w**2) * dt)


def _identified_logvol_eps(params: ModelParams, n_steps: int, dt: float,
                           history: int, rng_vol: np.random.Generator,
                           rng_price: np.random.Generator | None,
                           n_paths: int) -> tuple[np.ndarray, np.ndarray]:
    """Moving-average log-vol plus the matching price increments.

    The kernel needs `history` increments of warm-up before t = 0; they are
    generated and discarded internally, so outputs start fully warmed up.
    """
    kp = params.kprime
    if kp is None:
        kp = calibrated_kprime(params, dt, history)
    e = np.sqrt(dt) * rng_vol.standard_normal((n_paths, history + n_steps))
    w = _kernel(history, dt, params.hurst)
    core = fftconvolve(e, w[None, :], mode="valid", axes=1)  # (n_paths, n_steps + 1)
    logvol = params.beta + kp * core
    if rng_price is None:
        # Identified drivers: the price is pushed by the negative of the
        # volatility driver, which is what makes rising volatility accompany
        # falling prices (the leverage effect).
        eps = -e[:, history:]
    else:
        eps = np.sqrt(dt) * rng_price.standard_normal((n_paths, n_steps))
    return logvol, eps


def simulate_identified(params: ModelParams, n_steps: int, dt: float,
                        s0: float = 1.0, history: int = 4096,
                        seed: int = 0) -> MarketPath:
    """Simulate one path of the moving-average form.

    With coupling = identified_drivers the price shares the volatility
    driver; with independent_drivers the two streams are separate and the
    model is statistically equivalent to simulate_path up to kernel
    truncation.
    """
    _check_path_args(params, n_steps, dt, s0)
    if history < 1:
        raise ParameterError(f"history must be >= 1, got {history}")
    rng_price = None
    if params.coupling == INDEPENDENT_DRIVERS:
        rng_price = substream(seed, _PRICE)
    logvol, eps = _identified_logvol_eps(
        params, n_steps, dt, history, substream(seed, _VOL), rng_price, 1
    )
    prices = _advance_prices(logvol[0], eps[0], params.mu, dt, s0)
    times = np.arange(n_steps + 1) * dt
    return MarketPath(times=times, prices=prices, logvol=logvol[0], seed=int(seed))


def identified_return_ensemble(params: ModelParams, n_steps: int, dt: float,
                               history: int = 4096, seed: int = 0,
                               n_paths: int = 1) -> np.ndarray:
    """(n_paths, n_steps) log-returns from the moving-average form.

    Paths are generated in fixed-size chunks with per-chunk substreams, so
    the output depends only on (params, n_steps, dt, history, seed, n_paths).
    """
    _check_path_args(params, n_steps, dt, 1.0)
    if history < 1:
        raise ParameterError(f"history must be >= 1, got {history}")
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    out = np.empty((n_paths, n_steps))
    for start in range(0, n_paths, _CHUNK):
        stop = min(start + _CHUNK, n_paths)
        idx = start // _CHUNK
        rng_price = None
        if params.coupling == INDEPENDENT_DRIVERS:
            rng_price = substream(seed, _ENS_PRICE, idx)
        logvol, eps = _identified_logvol_eps(
            params, n_steps, dt, history, substream(seed, _ENS_VOL, idx),
            rng_price, stop - start,
        )
        sig = np.exp(logvol[:, :-1])
        out[start:stop] = (params.mu - 0.5 * sig**2) * dt + sig * eps
    return out
