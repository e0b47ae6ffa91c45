"""Fractional Gaussian noise and fractional Brownian motion.

Fractional Brownian motion with Hurst exponent H is the zero-mean Gaussian
process with covariance

    cov(B(s), B(t)) = (|t|^(2H) + |s|^(2H) - |t - s|^(2H)) / 2,

and fractional Gaussian noise (fGn) is its stationary increment sequence on a
regular grid. The generator here is exact in distribution: circulant
embedding of the fGn covariance (O(n log n)) with a spectral nonnegativity
check, falling back to the sequential Durbin-Levinson recursion (O(n^2),
exact for every admissible H) if the embedding fails.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GenerationError, ParameterError
from .rng import substream

# Circulant eigenvalues this far below zero (relative to the largest) are
# treated as roundoff and clipped; anything lower triggers the fallback.
_EIG_CLIP_REL = 1e-10


def check_hurst(hurst: float) -> float:
    """Validate 0 < H <= 1 and return H as a float."""
    h = float(hurst)
    if not np.isfinite(h) or not 0.0 < h <= 1.0:
        raise ParameterError(f"Hurst exponent must satisfy 0 < H <= 1, got {hurst!r}")
    return h


def fbm_covariance(s, t, hurst: float):
    """Covariance of fractional Brownian motion at times s and t.

    Accepts scalars or broadcastable arrays; times may be negative (the
    two-sided process).
    """
    h = check_hurst(hurst)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    two_h = 2.0 * h
    out = 0.5 * (np.abs(t) ** two_h + np.abs(s) ** two_h - np.abs(t - s) ** two_h)
    return out if out.ndim else float(out)


def fgn_autocovariance(lag, hurst: float, spacing: float = 1.0):
    """Autocovariance of fGn at integer lag(s) for the given grid spacing.

    gamma(k) = (spacing^(2H) / 2) (|k+1|^(2H) - 2|k|^(2H) + |k-1|^(2H))
    """
    h = check_hurst(hurst)
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing!r}")
    k = np.asarray(lag, dtype=float)
    if np.any(k < 0):
        raise ParameterError("lag must be >= 0")
    two_h = 2.0 * h
    out = 0.5 * spacing**two_h * (
        np.abs(k + 1) ** two_h - 2.0 * np.abs(k) ** two_h + np.abs(k - 1) ** two_h
    )
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FgnSeries:
    """A realization of fractional Gaussian noise on a regular grid."""

    values: np.ndarray
    spacing: float
    hurst: float
    seed: int


@dataclass(frozen=True)
class FbmSeries:
    """A fractional Brownian motion path; values[0] is always 0."""

    values: np.ndarray
    spacing: float
    hurst: float


def _circulant_eigenvalues(n: int, hurst: float) -> np.ndarray | None:
    """Eigenvalues of the 2n-circulant embedding, or None if it fails.

    The first row is the even extension [gamma(0..n), gamma(n-1..1)] of the
    unit-spacing autocovariance; its DFT is real.
    """
    gamma = fgn_autocovariance(np.arange(n + 1), hurst)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eigs = np.fft.fft(row).real
    floor = -_EIG_CLIP_REL * eigs.max()
    if eigs.min() < floor:
        return None
    return np.clip(eigs, 0.0, None)


def _fgn_circulant(n: int, eigs: np.ndarray, rng: np.random.Generator,
                   n_paths: int) -> np.ndarray:
    """Sample (n_paths, n) unit-spacing fGn given the embedding eigenvalues."""
    m = 2 * n
    z = rng.standard_normal((n_paths, m))
    v = np.empty((n_paths, m), dtype=complex)
    # Hermitian spectral vector: real at frequencies 0 and n, conjugate pairs
    # elsewhere, with E|v_j|^2 = eigs[j] / m so that fft(v) has covariance gamma.
    v[:, 0] = np.sqrt(eigs[0] / m) * z[:, 0]
    v[:, n] = np.sqrt(eigs[n] / m) * z[:, 1]
    half = np.sqrt(eigs[1:n] / (2.0 * m))
    v[:, 1:n] = half * (z[:, 2 : n + 1] + 1j * z[:, n + 1 : m])
    v[:, n + 1 :] = np.conj(v[:, n - 1 : 0 : -1])
    return np.fft.fft(v, axis=1).real[:, :n]


def _fgn_durbin_levinson(n: int, hurst: float, rng: np.random.Generator,
                         n_paths: int) -> np.ndarray:
    """Exact sequential sampler; quadratic cost, used only as a fallback."""
    gamma = fgn_autocovariance(np.arange(n), hurst)
    z = rng.standard_normal((n_paths, n))
    out = np.empty((n_paths, n))
    out[:, 0] = np.sqrt(gamma[0]) * z[:, 0]
    if n == 1:
        return out
    phi = np.zeros(n)
    var = gamma[0]
    for i in range(1, n):
        reflect = gamma[i] - phi[1:i] @ gamma[i - 1 : 0 : -1]
        reflect /= var
        phi[i] = reflect
        phi[1:i] -= reflect * phi[i - 1 : 0 : -1]
        var *= 1.0 - reflect * reflect
        if var <= 0.0:
            raise GenerationError(
                "Durbin-Levinson recursion lost positive definiteness "
                f"at step {i} (innovation variance {var!r})"
            )
        out[:, i] = out[:, :i] @ phi[i:0:-1] + np.sqrt(var) * z[:, i]
    return out


def _sample_unit_fgn(n: int, hurst: float, rng: np.random.Generator,
                     n_paths: int) -> np.ndarray:
    if hurst == 1.0:
        # Perfectly correlated noise: one normal repeated along the path.
        return np.repeat(rng.standard_normal((n_paths, 1)), n, axis=1)
    eigs = _circulant_eigenvalues(n, hurst)
    if eigs is not None:
        return _fgn_circulant(n, eigs, rng, n_paths)
    return _fgn_durbin_levinson(n, hurst, rng, n_paths)


def generate_fgn(n: int, hurst: float, spacing: float = 1.0,
                 seed: int = 0) -> FgnSeries:
    """Generate n samples of fGn with the requested Hurst exponent.

    Output is deterministic in (n, hurst, spacing, seed). Spacing enters only
    through the self-similar scale factor spacing^H.
    """
    h = check_hurst(hurst)
    if n < 1:
        raise ParameterError(f"need at least one sample, got n={n}")
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing!r}")
    rng = substream(seed)
    values = _sample_unit_fgn(int(n), h, rng, 1)[0] * spacing**h
    return FgnSeries(values=values, spacing=float(spacing), hurst=h, seed=int(seed))


def fbm_from_fgn(noise: FgnSeries) -> FbmSeries:
    """Accumulate noise increments into an fBm path starting at 0.

    The output has the same length as the input, so the final partial sum
    (the full displacement sum(noise.values)) is dropped; differencing the
    output recovers noise.values[:-1] up to summation rounding.
    """
    if len(noise.values) == 0:
        raise ParameterError("noise series is empty")
    values = np.concatenate([[0.0], np.cumsum(noise.values)[:-1]])
    return FbmSeries(values=values, spacing=noise.spacing, hurst=noise.hurst)
