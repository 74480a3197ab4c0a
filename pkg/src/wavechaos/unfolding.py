"""Waveguide dispersion relations and spectrum unfolding.

A rectangular waveguide of width w supports transversal modes with cutoff
wavenumbers n pi / w; between the first and second cutoff the propagation is
effectively one dimensional and the integrated spectral density follows the
dispersion-corrected counting functions implemented here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .containers import SpectrumSeries, UnfoldedSpectrum

SPEED_OF_LIGHT = 299792458.0  # m/s

REGIMES = ("single-mode", "two-mode")


@dataclass(frozen=True)
class WaveguideGeometry:
    """Cross-section (width, height) and total metric length of the network."""

    width: float
    height: float
    total_length: float

    def __post_init__(self):
        if not (0 < self.height < self.width):
            raise ValueError("need 0 < height < width")
        if not (self.total_length > 0):
            raise ValueError("total_length must be positive")

    @property
    def cutoff_tm10(self) -> float:
        return SPEED_OF_LIGHT / (2.0 * self.width)

    @property
    def cutoff_tm20(self) -> float:
        return SPEED_OF_LIGHT / self.width

    @property
    def cutoff_tm01(self) -> float:
        return SPEED_OF_LIGHT / (2.0 * self.height)


#: cross-section used throughout the bundled demos (WR-90 waveguide, 5.814 m network)
DEFAULT_GEOMETRY = WaveguideGeometry(width=22.86e-3, height=10.16e-3, total_length=5.814)


def ky_from_frequency(f, mode: int, geom: WaveguideGeometry):
    """Longitudinal wavenumber sqrt((2 pi f / c)^2 - (n pi / w)^2).

    Scalar in, scalar out; arrays are broadcast.  Below the mode-n cutoff the
    wave is evanescent and a ValueError names the offending cutoff.
    """
    if mode < 1:
        raise ValueError("mode index must be >= 1")
    f = np.asarray(f, dtype=float)
    cutoff = mode * SPEED_OF_LIGHT / (2.0 * geom.width)
    if np.any(f < cutoff * (1.0 - 1e-12)):
        raise ValueError(f"frequency below the mode-{mode} cutoff {cutoff:.6g} Hz")
    k_free = 2.0 * math.pi * f / SPEED_OF_LIGHT
    arg = np.maximum(k_free**2 - (mode * math.pi / geom.width) ** 2, 0.0)
    out = np.sqrt(arg)
    return float(out) if out.ndim == 0 else out


def smooth_count(k, geom: WaveguideGeometry, regime: str = "single-mode"):
    """Smooth integrated spectral density at free-space wavenumber k.

    single-mode: (L/pi) sqrt(k^2 - (pi/w)^2)
    two-mode:    (L/pi) [sqrt(k^2 - (2 pi/w)^2) + sqrt(k^2 - (pi/w)^2)]
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    k = np.asarray(k, dtype=float)
    k1 = math.pi / geom.width
    k2 = 2.0 * math.pi / geom.width
    lead = geom.total_length / math.pi
    if regime == "single-mode":
        if np.any(k < k1 * (1.0 - 1e-12)):
            raise ValueError(f"k below the single-mode threshold {k1:.6g} rad/m")
        out = lead * np.sqrt(np.maximum(k**2 - k1**2, 0.0))
    else:
        if np.any(k < k2 * (1.0 - 1e-12)):
            raise ValueError(f"k below the two-mode threshold {k2:.6g} rad/m")
        out = lead * (np.sqrt(np.maximum(k**2 - k2**2, 0.0))
                      + np.sqrt(np.maximum(k**2 - k1**2, 0.0)))
    return float(out) if out.ndim == 0 else out


def regime_window(geom: WaveguideGeometry, regime: str = "single-mode",
                  guard_spacings: float = 5.0) -> tuple[float, float]:
    """Frequency window of a regime with a guard band trimmed at each cutoff.

    The guard is expressed in local mean level spacings; the spectral density
    diverges at a cutoff, so the guard collapses onto it smoothly.
    """
    if regime == "single-mode":
        lo, hi = geom.cutoff_tm10, geom.cutoff_tm20
    elif regime == "two-mode":
        lo, hi = geom.cutoff_tm20, geom.cutoff_tm01
    else:
        raise ValueError(f"regime must be one of {REGIMES}")

    def count_at(f):
        return smooth_count(2.0 * math.pi * f / SPEED_OF_LIGHT, geom, regime)

    # invert the counting function for the guard offsets by bisection
    def invert(target, a, b):
        for _ in range(200):
            mid = 0.5 * (a + b)
            if count_at(mid) < target:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    n_lo = count_at(lo * (1 + 1e-12))
    n_hi = count_at(hi)
    if n_hi - n_lo <= 2 * guard_spacings:
        raise ValueError("guard bands exhaust the regime window")
    f_lo = invert(n_lo + guard_spacings, lo, hi)
    f_hi = invert(n_hi - guard_spacings, lo, hi)
    return f_lo, f_hi


def unfold_dispersion(spectrum: SpectrumSeries, geom: WaveguideGeometry,
                      regime: str = "single-mode") -> UnfoldedSpectrum:
    """Map eigenfrequencies through the smooth counting function."""
    if spectrum.unit != "Hz":
        raise ValueError("dispersion unfolding expects a spectrum in Hz")
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    if regime == "single-mode":
        lo, hi = geom.cutoff_tm10, geom.cutoff_tm20
    else:
        lo, hi = geom.cutoff_tm20, geom.cutoff_tm01
    f = spectrum.values
    if f.size and (f[0] < lo * (1 - 1e-12) or f[-1] > hi * (1 + 1e-12)):
        raise ValueError(
            f"spectrum [{f[0]:.6g}, {f[-1]:.6g}] Hz leaves the {regime} window "
            f"[{lo:.6g}, {hi:.6g}] Hz")
    k = 2.0 * math.pi * f / SPEED_OF_LIGHT
    x = smooth_count(k, geom, regime) if f.size else np.array([])
    return UnfoldedSpectrum(np.atleast_1d(x), source=f"dispersion/{regime}")


def unfold_polynomial(spectrum: SpectrumSeries, degree: int = 5) -> UnfoldedSpectrum:
    """Unfold by fitting a degree-n polynomial to the counting staircase."""
    x = spectrum.values
    if x.size <= degree + 1:
        raise ValueError(f"need more than degree+1={degree + 1} levels, got {x.size}")
    staircase = np.arange(1, x.size + 1, dtype=float)
    fit = np.polynomial.Polynomial.fit(x, staircase, deg=degree)
    y = fit(x)
    y = np.maximum.accumulate(y)  # guard against non-monotone fit wiggles
    return UnfoldedSpectrum(y, source=f"polynomial/{degree}")


def unfold_weyl(spectrum: SpectrumSeries, total_length: float,
                offset: float = 0.0) -> UnfoldedSpectrum:
    """Unfold a metric-graph wavenumber spectrum by its exact linear density."""
    if spectrum.unit != "rad/m":
        raise ValueError("Weyl unfolding expects a spectrum in rad/m")
    x = total_length * spectrum.values / math.pi + offset
    return UnfoldedSpectrum(x, source="weyl")
