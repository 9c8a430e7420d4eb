"""Log-distance path-loss link model with optional log-normal shadowing.

Received power follows ``P_r = P_t - K - 10 * gamma * log10(d / d0)`` in dBm,
with an additive zero-mean Gaussian term of ``shadowing_sigma`` dB when a
noise draw is supplied. Reception is a hard threshold against the receiver
sensitivity; no partial-loss region is modeled. The module holds no random
state: callers pass unit-normal draws explicitly, which keeps every function
pure and simulations reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError, RankDeficiencyError


@dataclass(frozen=True)
class LinkParams:
    """Constants of the path-loss model. Defaults are a fitted 2.4 GHz air link."""

    p_t: float = 19.5            # transmit power, dBm
    k_loss: float = 3.55         # fixed path-loss constant K, dB
    d0: float = 0.0147           # far-field reference distance, m
    gamma: float = 2.118         # path-loss exponent
    shadowing_sigma: float = 0.0  # log-normal shadowing std dev, dB (0 disables)
    sensitivity: float = -90.0   # reception threshold, dBm

    def __post_init__(self) -> None:
        if self.d0 <= 0:
            raise InvalidParameterError("d0 must be positive")
        if self.gamma <= 0:
            raise InvalidParameterError("gamma must be positive")
        if self.shadowing_sigma < 0:
            raise InvalidParameterError("shadowing_sigma must be >= 0")


def rssi(params: LinkParams, distance, noise_draw=None):
    """Received signal strength in dBm at the given distance(s).

    Parameters
    ----------
    params : LinkParams
        Model constants.
    distance : float or array_like
        Transmitter-receiver distance in meters, must be >= ``params.d0``
        (the model is undefined inside the far-field reference).
    noise_draw : float or array_like, optional
        Unit-normal draw(s) scaled by ``shadowing_sigma`` and added to the
        deterministic value. Omitted or sigma 0 means no noise term.

    Returns
    -------
    float or numpy.ndarray
        dBm value(s), scalar in, scalar out.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d < params.d0):
        raise InvalidParameterError(
            f"distance below far-field reference d0={params.d0} m")
    value = params.p_t - params.k_loss - 10.0 * params.gamma * np.log10(d / params.d0)
    if noise_draw is not None:
        value = value + params.shadowing_sigma * np.asarray(noise_draw, dtype=float)
    if value.ndim == 0:
        return float(value)
    return value


def is_received(params: LinkParams, rssi_value):
    """True where the RSSI clears the receiver sensitivity threshold."""
    result = np.asarray(rssi_value, dtype=float) >= params.sensitivity
    if result.ndim == 0:
        return bool(result)
    return result


def max_range(params: LinkParams) -> float:
    """Largest distance still received with no shadowing (threshold inverse)."""
    exponent = (params.p_t - params.k_loss - params.sensitivity) / (10.0 * params.gamma)
    return params.d0 * 10.0 ** exponent


@dataclass(frozen=True)
class PathLossFit:
    """Result of fitting the path-loss exponent to distance/RSSI samples."""

    gamma_hat: float
    rmse: float
    residuals: np.ndarray  # measured minus modeled, dB, one per sample


def fit_path_loss(samples, p_t: float = 19.5, k_loss: float = 3.55,
                  d0: float = 0.0147) -> PathLossFit:
    """Least-squares estimate of gamma from (distance_m, rssi_dbm) samples.

    With ``p_t``, ``k_loss`` and ``d0`` fixed, the model is linear in gamma:
    ``p_t - k_loss - rssi = gamma * 10 * log10(d / d0)``. The estimate is
    the single-parameter least-squares slope through the origin. The
    defaults are the measured bench constants of :class:`LinkParams`.

    Raises
    ------
    InsufficientDataError
        Fewer than 2 samples.
    RankDeficiencyError
        All samples at one distance (gamma is not identifiable against
        constant offsets).
    InvalidParameterError
        Any distance below ``d0``.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidParameterError("samples must be (distance_m, rssi_dbm) pairs")
    if arr.shape[0] < 2:
        raise InsufficientDataError("need at least 2 samples to fit gamma")
    distances, measured = arr[:, 0], arr[:, 1]
    if np.any(distances < d0):
        raise InvalidParameterError(f"all distances must be >= d0={d0} m")
    if np.unique(distances).size < 2:
        raise RankDeficiencyError("samples span a single distance")
    x = 10.0 * np.log10(distances / d0)
    y = p_t - k_loss - measured  # modeled as gamma * x
    gamma_hat = float(np.dot(x, y) / np.dot(x, x))
    residuals = measured - (p_t - k_loss - gamma_hat * x)
    rmse = float(np.sqrt(np.mean(residuals**2)))
    return PathLossFit(gamma_hat=gamma_hat, rmse=rmse, residuals=residuals)
