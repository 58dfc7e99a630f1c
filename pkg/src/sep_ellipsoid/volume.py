"""Ellipsoid-to-ball volume ratios, kept in log10 to avoid overflow."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VolumeReport:
    log10_ratio: float
    log10_ratio_normalized: float
    dim: int
    eigenvalues: tuple

    def to_dict(self) -> dict:
        return {
            "log10_ratio": self.log10_ratio,
            "log10_ratio_normalized": self.log10_ratio_normalized,
            "dim": self.dim,
            "eigenvalues": list(self.eigenvalues),
        }


def log_volume_ratio(eigenvalues) -> VolumeReport:
    """Volume of the separable ellipsoid over that of the inscribed ball, as log10.

    For a reference spectrum ``l_1 >= ... >= l_D`` the ratio is
    ``prod_{i<D} (l_i / l_D)**D``.  The normalized value multiplies the
    exponent by ``1 - 1/D**2``, the expected scaling for unit-trace states.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float).ravel())[::-1]
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if lam[-1] <= 0:
        raise ValueError(f"eigenvalues must be positive, smallest is {lam[-1]:.3e}")
    D = lam.size
    logs = np.log10(lam[:-1]) - np.log10(lam[-1])
    total = float(D * logs.sum())
    return VolumeReport(total, total * (1 - 1 / D ** 2), D, tuple(float(x) for x in lam))


def eigenvalue_spread(eigenvalues) -> float:
    """``lambda_max / lambda_min``."""
    lam = np.asarray(eigenvalues, dtype=float)
    return float(lam.max() / lam.min())
