"""
Per-slot channel gains and the OFDMA achievable rate.

Large-scale fading follows the 128.1 + 37.6 log10(d[km]) path-loss model;
small-scale fading is Rayleigh with a unit-variance complex coefficient, so
the power gain is exponential with mean 1. Gains are redrawn independently
for every slot, user and subchannel.
"""
from __future__ import generator_stop

from dataclasses import dataclass

import numpy as np

from crowdcache.constants import PATH_LOSS_INTERCEPT_DB, PATH_LOSS_SLOPE_DB


def path_loss_db(distance_m):
    """Path loss in dB at DISTANCE_M meters."""
    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * np.log10(np.asarray(distance_m, dtype=float) / 1000.0)


def path_gain(distance_m):
    """Linear large-scale power gain at DISTANCE_M meters."""
    return 10.0 ** (-path_loss_db(distance_m) / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    """Linear power gains, one row per user and one column per subchannel."""
    gains: np.ndarray

    @property
    def num_users(self) -> int:
        return self.gains.shape[0]

    @property
    def num_subchannels(self) -> int:
        return self.gains.shape[1]


def draw_channels(users, num_subchannels, rng, fading=None) -> ChannelRealization:
    """
    Realize the gains of one slot.

    :argument users: sequence of UserProfile (only ``distance`` is read)
    :argument num_subchannels: N
    :argument rng: numpy Generator; exactly K*N exponential draws are consumed
    :argument fading: optional K x N small-scale power gains to use instead of drawing
    """
    large_scale = path_gain([u.distance for u in users])
    if fading is None:
        fading = rng.exponential(1.0, size=(len(users), num_subchannels))
    # An exact zero draw would break the positive-gain invariant.
    fading = np.maximum(np.asarray(fading, dtype=float), np.finfo(float).tiny)
    return ChannelRealization(gains=large_scale[:, np.newaxis] * fading)


def subchannel_rate(power, gain, bandwidth, noise_density):
    """
    Achievable rate in bit/s of one subchannel: W log2(1 + P g / (N0 W)).
    Broadcasts over numpy arrays.
    """
    snr = np.asarray(power, dtype=float) * np.asarray(gain, dtype=float) / (noise_density * bandwidth)
    return bandwidth * np.log1p(snr) / np.log(2.0)
