"""Shared value containers: spectra, unfolded spectra, statistic curves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPECTRUM_UNITS = ("Hz", "rad/m", "dimensionless")


def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d sequence, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SpectrumSeries:
    """Ordered eigenvalue (or eigenfrequency) sequence with a unit tag."""

    values: np.ndarray
    unit: str = "dimensionless"
    provenance: str = "simulated"

    def __post_init__(self):
        arr = _as_float_array(self.values)
        if not np.all(np.isfinite(arr)):
            raise ValueError("spectrum contains non-finite values")
        if arr.size > 1 and np.any(np.diff(arr) < 0):
            raise ValueError("spectrum values must be ascending")
        if self.unit not in SPECTRUM_UNITS:
            raise ValueError(f"unknown unit {self.unit!r}, expected one of {SPECTRUM_UNITS}")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class UnfoldedSpectrum:
    """Spectrum rescaled to unit mean spacing."""

    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        arr = _as_float_array(self.values)
        if arr.size > 1 and np.any(np.diff(arr) < 0):
            raise ValueError("unfolded values must be ascending")
        object.__setattr__(self, "values", arr)

    def spacings(self) -> np.ndarray:
        return np.diff(self.values)

    def mean_spacing(self) -> float:
        s = self.spacings()
        if s.size == 0:
            raise ValueError("need at least two levels for a spacing")
        return float(np.mean(s))

    def __len__(self) -> int:
        return self.values.size


CURVE_KINDS = (
    "nnsd",
    "cnnsd",
    "sigma2",
    "delta3",
    "ratio-pdf",
    "ratio-cdf",
    "y2",
    "length-spectrum",
    "strength-pdf",
    "intensity-pdf",
    "reference",
)


@dataclass(frozen=True)
class StatCurve:
    """Sampled curve (histogram or analytic reference) on an ascending grid."""

    x: np.ndarray
    y: np.ndarray
    kind: str = "reference"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = _as_float_array(self.x)
        y = _as_float_array(self.y)
        if x.size != y.size:
            raise ValueError("abscissa and ordinate lengths differ")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValueError("abscissa grid must be strictly ascending")
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.kind.endswith("pdf") and y.size and np.min(y) < -1e-12:
            raise ValueError("pdf ordinates must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def integral(self) -> float:
        """Integral over the grid: exact bin sum for histograms, trapezoid otherwise."""
        width = self.meta.get("bin_width")
        if width is not None:
            return float(np.sum(self.y) * width)
        return float(np.trapz(self.y, self.x))


@dataclass(frozen=True)
class ViolationParameter:
    """Time-reversal violation strength xi and its spacing-formula companion."""

    xi: float

    def __post_init__(self):
        if not (self.xi >= 0.0 and math.isfinite(self.xi)):
            raise ValueError("xi must be a finite nonnegative real")

    @property
    def lam(self) -> float:
        return math.pi * self.xi / math.sqrt(2.0)
