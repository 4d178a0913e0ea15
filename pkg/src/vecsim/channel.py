"""Distance-based signal quality between road cells and APs.

Log-distance path loss with a configurable exponent; no fading realizations
here. Channel randomness is folded into the decode error curve in the MAC
layer so the two stay separable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["ChannelParams", "SignalQuality", "signal_quality", "candidate_aps"]


@dataclass(frozen=True)
class ChannelParams:
    tx_power_dbm: float = 23.0
    pl0_db: float = 47.86          # reference path loss at d0
    pathloss_exp: float = 2.0
    ref_distance_m: float = 1.0
    noise_dbm: float = -95.0


@dataclass(frozen=True)
class SignalQuality:
    snr_db: float


def signal_quality(
    vehicle_xy: tuple[float, float],
    ap_xy: tuple[float, float],
    params: ChannelParams,
) -> SignalQuality:
    """SNR in dB at an AP for a vehicle at the given position.

    snr = tx_power - [PL0 + 10*n*log10(max(d, d0)/d0)] - noise. Distances
    below the reference distance are clamped to it.
    """
    d = math.hypot(vehicle_xy[0] - ap_xy[0], vehicle_xy[1] - ap_xy[1])
    d = max(d, params.ref_distance_m)
    path_loss = params.pl0_db + 10.0 * params.pathloss_exp * math.log10(d / params.ref_distance_m)
    return SignalQuality(snr_db=params.tx_power_dbm - path_loss - params.noise_dbm)


def candidate_aps(
    vehicle_xy: tuple[float, float],
    ap_positions: dict[int, tuple[float, float]],
    params: ChannelParams,
    threshold_db: float,
) -> list[tuple[int, float]]:
    """APs whose SNR clears the threshold, ordered by descending SNR then AP id.

    Returns (ap_id, snr_db) pairs; an empty list is a legal result and means
    the vehicle is out of coverage this slot.
    """
    reachable = []
    for ap_id in sorted(ap_positions):
        snr = signal_quality(vehicle_xy, ap_positions[ap_id], params).snr_db
        if snr >= threshold_db:
            reachable.append((ap_id, snr))
    reachable.sort(key=lambda pair: (-pair[1], pair[0]))
    return reachable
