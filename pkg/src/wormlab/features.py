"""Spectral features for multichannel recordings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InputError


def _channel(x, name: str = "channel") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ContractError(f"{name} must be 1-D, got shape {x.shape}")
    if x.shape[0] < 2:
        raise ContractError(f"{name} needs at least 2 samples, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} contains non-finite samples")
    return x


@dataclass(frozen=True)
class MultichannelSignal:
    channels: tuple[np.ndarray, ...]
    sample_rate: float = 1.0

    def __post_init__(self):
        chans = tuple(_channel(c, f"channel {i}") for i, c in enumerate(self.channels))
        if not chans:
            raise ContractError("a signal needs at least one channel")
        if len({c.shape[0] for c in chans}) != 1:
            raise ContractError("all channels must have the same length")
        if not self.sample_rate > 0:
            raise ContractError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "channels", chans)

    @classmethod
    def from_array(cls, X, sample_rate: float = 1.0) -> "MultichannelSignal":
        """Build from a ``(channels, samples)`` array."""
        return cls(tuple(np.atleast_2d(np.asarray(X, dtype=np.float64))), sample_rate)


def magnitude_spectrum(x) -> np.ndarray:
    return np.abs(np.fft.fft(_channel(x)))


def differential_spectrum(channel) -> np.ndarray:
    """First difference of the DFT magnitude, ``|X[k+1]| - |X[k]|``, length ``N - 1``.

    >>> differential_spectrum([1.0, 1.0, 1.0, 1.0])
    array([-4.,  0.,  0.])
    """
    return np.diff(magnitude_spectrum(channel))


def adjacent_channel_fourier_correlation(ch1, ch2) -> float:
    """Pearson correlation between the magnitude spectra of two channels.

    Returns 0.0 when either magnitude spectrum is constant.
    """
    a = magnitude_spectrum(_channel(ch1, "ch1"))
    b = magnitude_spectrum(_channel(ch2, "ch2"))
    if a.shape != b.shape:
        raise ContractError(f"channel lengths differ: {a.shape[0]} vs {b.shape[0]}")
    a = a - a.mean()
    b = b - b.mean()
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip((a / na) @ (b / nb), -1.0, 1.0))


def feature_vector(signal: MultichannelSignal) -> np.ndarray:
    """Concatenate the differential spectrum of each channel, in channel order,
    followed by the Fourier correlation of each adjacent pair ``(0, 1), (1, 2), ...``.

    Output length is ``C * (N - 1) + (C - 1)``.
    """
    chans = signal.channels
    parts = [differential_spectrum(c) for c in chans]
    corr = [adjacent_channel_fourier_correlation(a, b) for a, b in zip(chans[:-1], chans[1:])]
    parts.append(np.asarray(corr, dtype=np.float64))
    return np.concatenate(parts)
