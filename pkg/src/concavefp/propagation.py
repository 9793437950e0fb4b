"""Okumura-Hata urban path loss."""

from __future__ import annotations

import numpy as np

D_MIN = 35.0


def mobile_antenna_correction(f_mhz, h_m, city="small_medium"):
    """Correction term a(h_m) in dB."""
    logf = np.log10(f_mhz)
    if city == "small_medium":
        return (1.1 * logf - 0.7) * h_m - (1.56 * logf - 0.8)
    if city == "large":
        if f_mhz >= 300:
            return 3.2 * np.log10(11.75 * h_m) ** 2 - 4.97
        return 8.29 * np.log10(1.54 * h_m) ** 2 - 1.1
    raise ValueError(f"unknown city size {city!r}")


def hata_path_loss_db(f_mhz, h_b, h_m, distance, city="small_medium", d_min=D_MIN):
    """Urban Okumura-Hata path loss; ``distance`` in meters, clamped below at ``d_min``."""
    if f_mhz <= 0 or h_b <= 0 or h_m <= 0:
        raise ValueError("frequency and antenna heights must be positive")
    d_km = np.maximum(np.asarray(distance, dtype=float), d_min) / 1000.0
    return (
        69.55
        + 26.16 * np.log10(f_mhz)
        - 13.82 * np.log10(h_b)
        - mobile_antenna_correction(f_mhz, h_m, city)
        + (44.9 - 6.55 * np.log10(h_b)) * np.log10(d_km)
    )


def hata_gain(f_mhz, h_b, h_m, distance, city="small_medium", d_min=D_MIN):
    """Linear power gain ``10**(-PL/10)``."""
    return 10.0 ** (-hata_path_loss_db(f_mhz, h_b, h_m, distance, city, d_min) / 10.0)
