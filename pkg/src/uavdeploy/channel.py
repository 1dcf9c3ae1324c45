"""Radio-layer math: path loss, SINR, LoS probability, rate and hover time.

All functions are pure and operate on an immutable :class:`ChannelParams`.
Internally everything is computed in linear units (watts); the public
parameter surface uses the customary dB / dBm units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0


class InvalidLinkError(ValueError):
    """Raised for physically impossible link geometry (zero distance)."""


class UnservableUserError(ValueError):
    """Raised when a user's data load cannot be delivered (rate <= 0)."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    return 10.0 * math.log10(linear)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class ChannelParams:
    """Radio constants for the downlink model.

    ``path_loss_ref_gain`` is the dimensionless constant multiplying
    ``tx_power * d**-alpha``; when None it defaults to the free-space gain
    at 1 m for the configured carrier, (c / (4 pi f_c))**2.  The NLoS
    penalty is extra attenuation in dB applied when a link is blocked.
    """

    tx_power_w: float = 1.0
    path_loss_exponent: float = 2.0
    path_loss_ref_gain: float | None = None
    noise_psd_dbm_hz: float = -170.0
    bandwidth_hz: float = 1e6
    carrier_hz: float = 2e9
    sinr_threshold_db: float = 5.0
    nlos_penalty_db: float = 20.0
    plos_b1: float = 0.36
    plos_b2: float = 0.21

    def __post_init__(self) -> None:
        if self.tx_power_w <= 0:
            raise ValueError("tx_power_w must be > 0")
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be > 0")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be > 0")
        if self.nlos_penalty_db < 0:
            raise ValueError("nlos_penalty_db must be >= 0")
        if self.plos_b1 <= 0 or self.plos_b2 <= 0:
            raise ValueError("plos_b1 and plos_b2 must be > 0")
        if self.path_loss_ref_gain is not None and self.path_loss_ref_gain <= 0:
            raise ValueError("path_loss_ref_gain must be > 0")

    @property
    def ref_gain(self) -> float:
        """Effective path-loss constant (free-space at 1 m unless overridden)."""
        if self.path_loss_ref_gain is not None:
            return self.path_loss_ref_gain
        return (SPEED_OF_LIGHT / (4.0 * math.pi * self.carrier_hz)) ** 2

    @property
    def nlos_factor(self) -> float:
        """Multiplicative power attenuation of a blocked link."""
        return 10.0 ** (-self.nlos_penalty_db / 10.0)

    @property
    def sinr_threshold_linear(self) -> float:
        return db_to_linear(self.sinr_threshold_db)


@dataclass(frozen=True)
class LinkState:
    """One drone-user link: 3D distance and whether it has line of sight."""

    distance_m: float
    los: bool = True

    def __post_init__(self) -> None:
        if self.distance_m <= 0:
            raise InvalidLinkError(f"link distance must be > 0, got {self.distance_m}")


def noise_power(params: ChannelParams) -> float:
    """Total noise power over the configured bandwidth, in watts."""
    return dbm_to_watts(params.noise_psd_dbm_hz) * params.bandwidth_hz


def received_power(params: ChannelParams, link: LinkState) -> float:
    """Received power of a link in watts: gain * P * d**-alpha, with the
    NLoS attenuation applied when the link is blocked."""
    p = params.ref_gain * params.tx_power_w * link.distance_m ** (-params.path_loss_exponent)
    if not link.los:
        p *= params.nlos_factor
    return p


def sinr(params: ChannelParams, serving: LinkState, interferers=()) -> float:
    """Downlink SINR in dB for a serving link against a set of interferers."""
    num = received_power(params, serving)
    interference = sum(received_power(params, l) for l in interferers)
    return linear_to_db(num / (interference + noise_power(params)))


def p_los(params: ChannelParams, elevation_rad: float) -> float:
    """Probabilistic LoS model: b1 * (theta_deg - 15)**b2, clamped to [0, 1].

    Returns 0 at or below 15 degrees of elevation, where the power-law
    base would go negative.
    """
    if not 0.0 <= elevation_rad <= math.pi / 2 + 1e-12:
        raise ValueError(f"elevation must be in [0, pi/2], got {elevation_rad}")
    base = math.degrees(elevation_rad) - 15.0
    if base <= 0.0:
        return 0.0
    return min(1.0, params.plos_b1 * base**params.plos_b2)


def rate(params: ChannelParams, sinr_db: float) -> float:
    """Shannon rate B * log2(1 + sinr) in bits/second, from SINR in dB."""
    return params.bandwidth_hz * math.log2(1.0 + db_to_linear(sinr_db))


def hover_time(loads_bits, rates_bps) -> float:
    """Total service time sum(beta_i / b_i) in seconds.

    Raises :class:`UnservableUserError` if any rate is non-positive.
    """
    loads = np.asarray(list(loads_bits), dtype=float)
    rates = np.asarray(list(rates_bps), dtype=float)
    if loads.shape != rates.shape:
        raise ValueError("loads and rates must have the same length")
    if loads.size == 0:
        return 0.0
    if (rates <= 0).any():
        raise UnservableUserError("cannot serve a user at zero rate")
    return float(np.sum(loads / rates))
