"""Volatility statistics reconstructed from a price series.

The pipeline is: windowed variance of the log price (induced volatility),
cumulative sum of its logarithm split into a linear trend plus a residual
process, and the scaling exponent of that residual from the growth of its
mean absolute increments. Leverage (the cross-correlation between returns
and later squared returns) and the plain return autocorrelation complete the
report.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GridMismatchError, InsufficientDataError, ParameterError


def _sliding_sums(x: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    c1 = np.concatenate([[0.0], np.cumsum(x)])
    c2 = np.concatenate([[0.0], np.cumsum(x * x)])
    return c1[window:] - c1[:-window], c2[window:] - c2[:-window]


def induced_volatility(log_prices, window: int, dt: float = 1.0,
                       detrend: bool = False, debias: bool = True) -> np.ndarray:
    """Window-variance volatility estimate, one value per window center.

    The raw statistic is the sample variance of the log price over a sliding
    window of `window` points, divided by the window length window*dt. For a
    diffusive path that statistic underestimates sigma^2 by the exact factor
    (window + 1)/(6*window) (the within-window random-walk wander is much
    smaller than the increment scale), so by default the output is rescaled
    to make the estimator unbiased for constant-volatility diffusion.
    Pass debias=False for the raw statistic, and detrend=True to remove the
    best-fit line inside each window before taking the variance.
    """
    x = np.asarray(log_prices, dtype=float)
    w = int(window)
    if w < 8:
        raise ParameterError(f"window must be at least 8 samples, got {window}")
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    if len(x) <= w:
        raise InsufficientDataError(
            f"need more than window={w} samples, got {len(x)}"
        )
    s1, s2 = _sliding_sums(x, w)
    ss = s2 - s1 * s1 / w
    if detrend:
        # subtract the within-window OLS line; grid moments are constants
        j = np.arange(w, dtype=float)
        t_ss = w * (w * w - 1.0) / 12.0
        cross = np.convolve(x, j[::-1], mode="valid") - (w - 1.0) / 2.0 * s1
        ss = ss - cross * cross / t_ss
    var = np.clip(ss, 0.0, None) / (w - 1.0)
    scale = var / (w * dt)
    if debias:
        scale *= 6.0 * w / (w + 1.0)
    return np.sqrt(scale)


class LogvolDecomposition(NamedTuple):
    beta_hat: float
    r_sigma: np.ndarray
    intercept: float


def integrated_logvol_decompose(vol, delta: float = 1.0) -> LogvolDecomposition:
    """Split the cumulative log-volatility into trend plus residual.

    The cumulative sums of log vol are regressed on time in delta-step units
    (the i-th partial sum sits at t = i + 1, so a constant volatility gives a
    zero intercept and slope log sigma). beta_hat is the fitted slope per
    delta step; r_sigma holds the residuals, which have exactly zero mean.
    The fitted line plus r_sigma reconstructs the cumulative series exactly.
    """
    v = np.asarray(vol, dtype=float)
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta!r}")
    bad = np.flatnonzero(~(v > 0))
    if bad.size:
        raise ParameterError(
            f"volatility must be strictly positive; first offender at index {bad[0]}"
        )
    c = np.cumsum(np.log(v))
    t = np.arange(1.0, len(c) + 1.0)
    t_c = t - t.mean()
    slope = (t_c @ (c - c.mean())) / (t_c @ t_c)
    intercept = c.mean() - slope * t.mean()
    return LogvolDecomposition(
        beta_hat=float(slope),
        r_sigma=c - slope * t - intercept,
        intercept=float(intercept),
    )


def default_scaling_lags(n: int) -> np.ndarray:
    """Powers of two from 1 up to n//64."""
    top = n // 64
    if top < 8:
        raise InsufficientDataError(f"series of {n} points is too short to scale")
    return 2 ** np.arange(0, int(np.log2(top)) + 1)


def scaling_exponent(r_sigma, lags=None) -> tuple[float, float]:
    """Slope of log E|R(t + lag) - R(t)| against log lag, with its stderr."""
    r = np.asarray(r_sigma, dtype=float)
    n = len(r)
    if lags is None:
        lags = default_scaling_lags(n)
    lags = np.unique(np.asarray(lags, dtype=int))
    lags = lags[(lags >= 1) & (lags < n)]
    if len(lags) < 4:
        raise InsufficientDataError(
            f"need at least 4 usable lags below the series length {n}"
        )
    mean_abs = np.array([np.mean(np.abs(r[lag:] - r[:-lag])) for lag in lags])
    if np.any(mean_abs <= 0):
        raise InsufficientDataError("degenerate residual: zero mean increment")
    x = np.log(lags.astype(float))
    y = np.log(mean_abs)
    x_c = x - x.mean()
    slope = (x_c @ (y - y.mean())) / (x_c @ x_c)
    resid = y - y.mean() - slope * x_c
    dof = len(lags) - 2
    stderr = float(np.sqrt((resid @ resid) / dof / (x_c @ x_c))) if dof else np.inf
    return float(slope), stderr


def leverage(returns, max_lag: int) -> np.ndarray:
    """Cross-moment <|r(t+tau)|^2 r(t)> - <|r(t+tau)|^2><r(t)> per lag.

    `returns` is one series or a (paths, time) ensemble; the average runs
    over time and paths. Rows are columns of (tau, L) for tau in
    [-max_lag, max_lag].
    """
    r = np.atleast_2d(np.asarray(returns, dtype=float))
    n = r.shape[1]
    if n <= 2 * max_lag:
        raise InsufficientDataError(
            f"series length {n} must exceed twice max_lag={max_lag}"
        )
    r2 = r * r
    out = np.empty((2 * max_lag + 1, 2))
    for i, tau in enumerate(range(-max_lag, max_lag + 1)):
        h = abs(tau)
        if tau >= 0:
            a, b = r[:, : n - h], r2[:, h:]
        else:
            a, b = r[:, h:], r2[:, : n - h]
        out[i] = tau, np.mean(a * b) - np.mean(a) * np.mean(b)
    return out


def autocorrelation(series, lags) -> np.ndarray:
    """Sample autocorrelation normalized by the lag-0 variance."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    n = len(x)
    denom = x @ x
    if denom == 0.0:
        raise ParameterError("series has zero variance; autocorrelation undefined")
    lags = np.asarray(lags, dtype=int)
    if np.any(lags >= n / 2) or np.any(lags < 0):
        raise ParameterError("lags must lie in [0, length/2)")
    out = np.empty((len(lags), 2))
    for i, k in enumerate(lags):
        out[i] = k, (x[: n - k] @ x[k:]) / denom if k else 1.0
    return out


@dataclass(frozen=True)
class EstimationReport:
    induced_vol: np.ndarray
    beta_hat: float
    trend_intercept: float
    r_sigma: np.ndarray
    hurst_hat: float
    hurst_stderr: float
    leverage: np.ndarray
    acf: np.ndarray
    n_floored: int


def _subsample_step(delta: float, dt: float) -> int:
    ratio = delta / dt
    step = round(ratio)
    if step < 1 or abs(ratio - step) > 1e-9 * step:
        raise GridMismatchError(
            f"volatility spacing delta={delta!r} is not an integer multiple of dt={dt!r}"
        )
    return int(step)


def estimate_report(prices, dt: float = 1.0, window: int = 21,
                    delta: float = 1.0, detrend: bool = False,
                    debias: bool = True, scaling_lags=None, max_lag: int = 10,
                    acf_lags: int = 20) -> EstimationReport:
    """Run the full pipeline on a price series.

    Windows with zero variance (as flat stretches of quantized prices
    produce) would make the log-volatility sum diverge, so they are floored
    at the smallest positive estimate; n_floored reports how many.
    """
    p = np.asarray(prices, dtype=float)
    if np.any(p <= 0):
        raise ParameterError("prices must be strictly positive")
    log_p = np.log(p)
    sigma = induced_volatility(log_p, window, dt, detrend=detrend, debias=debias)
    step = _subsample_step(delta, dt)
    vol = sigma[::step]
    positive = vol[vol > 0]
    if positive.size == 0:
        raise InsufficientDataError("volatility is identically zero")
    n_floored = int(np.sum(vol == 0))
    if n_floored:
        vol = np.where(vol > 0, vol, positive.min())
    decomp = integrated_logvol_decompose(vol, delta)
    hurst_hat, hurst_stderr = scaling_exponent(decomp.r_sigma, scaling_lags)
    returns = np.diff(log_p)
    lev = leverage(returns, max_lag)
    acf = autocorrelation(returns, np.arange(1, acf_lags + 1))
    return EstimationReport(
        induced_vol=sigma,
        beta_hat=decomp.beta_hat,
        trend_intercept=decomp.intercept,
        r_sigma=decomp.r_sigma,
        hurst_hat=hurst_hat,
        hurst_stderr=hurst_stderr,
        leverage=lev,
        acf=acf,
        n_floored=n_floored,
    )
