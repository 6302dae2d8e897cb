"""Two-user flat-fading MIMO interference channel.

User ``i`` receives ``y_i = H_ii x_i + H_ij x_j + v_i``. All randomness comes
from explicitly passed :class:`numpy.random.Generator` objects built by
:func:`make_rng`; there is no module-level RNG state.
"""

from dataclasses import dataclass, replace

import numpy as np

from .cmatrix import ShapeError, as_vector


def make_rng(seed, *stream):
    """Philox (counter-based) generator for sub-stream ``stream`` of ``seed``.

    Distinct ``stream`` tuples give statistically independent streams, so
    per-trial generators can be created in any order or process.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def noise_power_from_snr(snr_db, tx_power=1.0):
    # unit-variance channel entries: expected per-antenna received power equals tx_power
    return tx_power / db_to_linear(snr_db)


@dataclass(frozen=True)
class AntennaConfig:
    t1: int
    r1: int
    t2: int
    r2: int

    def __post_init__(self):
        for name in ("t1", "r1", "t2", "r2"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class ChannelSet:
    h11: np.ndarray
    h12: np.ndarray
    h21: np.ndarray
    h22: np.ndarray
    noise_power_1: float = 0.0
    noise_power_2: float = 0.0
    interference_gain: float = 1.0

    def __post_init__(self):
        r1, t1 = self.h11.shape
        r2, t2 = self.h22.shape
        if self.h12.shape != (r1, t2) or self.h21.shape != (r2, t1):
            raise ShapeError(
                f"inconsistent channel shapes h11={self.h11.shape} h12={self.h12.shape} "
                f"h21={self.h21.shape} h22={self.h22.shape}"
            )
        if self.noise_power_1 < 0 or self.noise_power_2 < 0:
            raise ValueError("noise powers must be non-negative")

    @property
    def antennas(self):
        r1, t1 = self.h11.shape
        r2, t2 = self.h22.shape
        return AntennaConfig(t1, r1, t2, r2)

    def direct(self, i):
        return self.h11 if i == 1 else self.h22

    def cross(self, i):
        """Channel from the other transmitter into receiver ``i``."""
        return self.h12 if i == 1 else self.h21

    def noise_power(self, i):
        return self.noise_power_1 if i == 1 else self.noise_power_2

    def with_noise(self, noise_power_1, noise_power_2=None):
        if noise_power_2 is None:
            noise_power_2 = noise_power_1
        return replace(self, noise_power_1=float(noise_power_1), noise_power_2=float(noise_power_2))


def sample_zmsw(rows, cols, rng):
    """I.i.d. circular complex Gaussian entries with unit variance."""
    if rows < 1 or cols < 1:
        raise ValueError(f"rows and cols must be >= 1, got {rows}x{cols}")
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) * np.sqrt(0.5)


def sample_channel_set(cfg, noise_power_1, noise_power_2, interference_gain, rng):
    g = np.sqrt(interference_gain)
    h11 = sample_zmsw(cfg.r1, cfg.t1, rng)
    h12 = g * sample_zmsw(cfg.r1, cfg.t2, rng)
    h21 = g * sample_zmsw(cfg.r2, cfg.t1, rng)
    h22 = sample_zmsw(cfg.r2, cfg.t2, rng)
    return ChannelSet(h11, h12, h21, h22, float(noise_power_1), float(noise_power_2), float(interference_gain))


def received_signal(cs, x1, x2, rng):
    x1 = as_vector(x1)
    x2 = as_vector(x2)
    cfg = cs.antennas
    if x1.shape[0] != cfg.t1 or x2.shape[0] != cfg.t2:
        raise ShapeError(f"expected x1 of length {cfg.t1} and x2 of length {cfg.t2}, got {x1.shape[0]} and {x2.shape[0]}")
    v1 = np.sqrt(cs.noise_power_1) * sample_zmsw(cfg.r1, 1, rng)[:, 0]
    v2 = np.sqrt(cs.noise_power_2) * sample_zmsw(cfg.r2, 1, rng)[:, 0]
    y1 = cs.h11 @ x1 + cs.h12 @ x2 + v1
    y2 = cs.h22 @ x2 + cs.h21 @ x1 + v2
    return y1, y2
