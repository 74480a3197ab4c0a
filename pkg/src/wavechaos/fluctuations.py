"""Fluctuation measures of eigenvalue sequences.

Short-range: nearest-neighbor spacing histograms and spacing-ratio statistics
(the latter need no unfolding).  Long-range: number variance and spectral
rigidity over sliding windows.  Diagnostics: missing-level scans of the
counting staircase and length spectra of the fluctuating spectral density.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .containers import SpectrumSeries, StatCurve, UnfoldedSpectrum

WINDOW_STEP_FRACTION = 0.25  # sliding-window advance in units of L


# ---------------------------------------------------------------------------
# Short-range statistics
# ---------------------------------------------------------------------------

def nnsd(u: UnfoldedSpectrum, bins: int = 40, s_max: float = 4.0) -> tuple[StatCurve, StatCurve]:
    """Spacing histogram P(s), unit area, plus its cumulative I(s).

    Spacings beyond s_max are dropped from the histogram (the returned meta
    records how many); the cumulative curve is the running integral of P.
    """
    if len(u) < 2:
        raise ValueError("need at least two levels for spacings")
    s = u.spacings()
    dropped = int(np.count_nonzero(s > s_max))
    hist, edges = np.histogram(s, bins=bins, range=(0.0, s_max), density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    cum = np.cumsum(hist) * width
    meta = {"n_spacings": int(s.size), "dropped": dropped, "bin_width": float(width)}
    return (StatCurve(centers, hist, "nnsd", meta),
            StatCurve(centers, cum, "cnnsd", meta))


def ratio_statistics(raw: SpectrumSeries | np.ndarray,
                     bins: int = 25) -> tuple[StatCurve, StatCurve, float]:
    """Distribution of r~ = min(r, 1/r) for consecutive spacing ratios.

    Works on the raw (non-unfolded) spectrum; invariant under affine
    rescaling.  Pairs with a vanishing first spacing are skipped and counted
    in the curve meta.
    """
    values = raw.values if isinstance(raw, SpectrumSeries) else np.asarray(raw, dtype=float)
    if values.size < 3:
        raise ValueError("need at least three levels for a spacing ratio")
    s = np.diff(values)
    denom, numer = s[:-1], s[1:]
    ok = denom > 0
    skipped = int(np.count_nonzero(~ok))
    r = numer[ok] / denom[ok]
    rtilde = np.minimum(r, np.divide(1.0, r, out=np.full_like(r, np.inf), where=r > 0))
    hist, edges = np.histogram(rtilde, bins=bins, range=(0.0, 1.0), density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    cum = np.cumsum(hist) * width
    meta = {"n_ratios": int(rtilde.size), "skipped": skipped, "bin_width": float(width)}
    return (StatCurve(centers, hist, "ratio-pdf", meta),
            StatCurve(centers, cum, "ratio-cdf", meta),
            float(np.mean(rtilde)))


def mean_rtilde(values) -> float:
    """Mean of min(r, 1/r) without building histograms."""
    return ratio_statistics(np.asarray(values, dtype=float), bins=2)[2]


# ---------------------------------------------------------------------------
# Long-range statistics (sliding windows)
# ---------------------------------------------------------------------------

def _window_starts(x: np.ndarray, L: float) -> np.ndarray:
    span = x[-1] - x[0]
    n = max(1, int(math.floor((span - L) / (WINDOW_STEP_FRACTION * L))) + 1)
    return x[0] + np.arange(n) * (WINDOW_STEP_FRACTION * L)


def _check_window_guard(x: np.ndarray, L_max: float) -> None:
    span = x[-1] - x[0]
    if L_max > span / 10.0:
        raise ValueError(f"largest window L={L_max:g} exceeds span/10={span / 10:g}")


def number_variance(u: UnfoldedSpectrum, L_grid) -> StatCurve:
    """Sigma^2(L) = <(n(L) - L)^2> over sliding windows of length L."""
    x = u.values
    L_grid = np.atleast_1d(np.asarray(L_grid, dtype=float))
    _check_window_guard(x, float(L_grid.max()))
    out = np.empty(L_grid.size)
    for i, L in enumerate(L_grid):
        a = _window_starts(x, L)
        counts = np.searchsorted(x, a + L, side="right") - np.searchsorted(x, a, side="right")
        out[i] = np.mean((counts - L) ** 2)
    return StatCurve(L_grid, out, "sigma2")


def spectral_rigidity(u: UnfoldedSpectrum, L_grid) -> StatCurve:
    """Dyson-Mehta Delta_3(L): least-squares line deviation of the staircase.

    The per-window least-squares problem is solved in closed form from prefix
    sums of the level positions, so the sliding-window average is exact (no
    quadrature on the staircase).
    """
    x = u.values - u.values[0]
    L_grid = np.atleast_1d(np.asarray(L_grid, dtype=float))
    _check_window_guard(x, float(L_grid.max()))

    # prefix sums for integrals of the global staircase N(t) = #{x_i <= t}
    px = np.concatenate([[0.0], np.cumsum(x)])
    px2 = np.concatenate([[0.0], np.cumsum(x * x)])
    podd = np.concatenate([[0.0], np.cumsum((2 * np.arange(1, x.size + 1) - 1) * x)])

    def stair_integrals(t: np.ndarray):
        n = np.searchsorted(x, t, side="right")
        g = n * t - px[n]                    # int N dt
        h = 0.5 * (n * t * t - px2[n])       # int N t dt
        q = n * n * t - podd[n]              # int N^2 dt
        return n, g, h, q

    out = np.empty(L_grid.size)
    for i, L in enumerate(L_grid):
        a = _window_starts(x, L)
        b = a + L
        n_a, g_a, h_a, q_a = stair_integrals(a)
        n_b, g_b, h_b, q_b = stair_integrals(b)
        t0 = (g_b - g_a) - n_a * L                       # int (N - n_a) dt
        t1 = (h_b - h_a) - (a + 0.5 * L) * (g_b - g_a)   # int (N - n_a) u du, u centered
        q = (q_b - q_a) - 2 * n_a * (g_b - g_a) + n_a * n_a * L
        slope = t1 / (L**3 / 12.0)
        intercept = t0 / L
        out[i] = np.mean((q - slope * t1 - intercept * t0) / L)
    return StatCurve(L_grid, out, "delta3")


# ---------------------------------------------------------------------------
# Missing-level scan
# ---------------------------------------------------------------------------

def missing_level_scan(raw: SpectrumSeries,
                       smooth: Callable[[np.ndarray], np.ndarray] | None = None, *,
                       window_spacings: float = 5.0,
                       threshold: float = 0.5,
                       poly_degree: int = 5) -> list[tuple[float, float]]:
    """Locate jumps of the locally averaged fluctuating counting function.

    The spectrum is mapped through the smooth counting model (a polynomial
    staircase fit when none is given); in that coordinate a missing level is
    a unit downward step of N^fluc.  The smoothed step profile is scanned for
    plateau changes of at least `threshold`, and each flagged location is
    reported in the original units together with the jump size.
    """
    values = raw.values
    if values.size < 50:
        raise ValueError("need at least 50 levels for a missing-level scan")
    if smooth is None:
        fit = np.polynomial.Polynomial.fit(values, np.arange(1, values.size + 1), poly_degree)
        smooth = fit
    u = np.asarray(smooth(values), dtype=float)
    if np.any(np.diff(u) <= 0):
        u = np.maximum.accumulate(u)

    du = 0.125  # grid step in mean spacings
    grid = np.arange(u[0], u[-1], du)
    n_of_u = np.searchsorted(u, grid, side="right")
    fluc = n_of_u - grid

    w = max(2, int(round(window_spacings / du)))
    csum = np.concatenate([[0.0], np.cumsum(fluc)])
    idx = np.arange(w, grid.size - w)
    if idx.size == 0:
        return []
    left = (csum[idx] - csum[idx - w]) / w
    right = (csum[idx + w] - csum[idx]) / w
    jump = right - left

    flags: list[tuple[float, float]] = []
    over = np.abs(jump) >= threshold
    i = 0
    while i < idx.size:
        if not over[i]:
            i += 1
            continue
        j = i
        while j < idx.size and over[j]:
            j += 1
        seg = slice(i, j)
        best = i + int(np.argmax(np.abs(jump[seg])))
        u_pos = grid[idx[best]]
        pos = float(np.interp(u_pos, u, values))
        flags.append((pos, float(jump[best])))
        i = j
    return flags


# ---------------------------------------------------------------------------
# Length spectrum
# ---------------------------------------------------------------------------

def _taper(kind: str, k: np.ndarray, a: float, b: float) -> np.ndarray:
    if kind == "hann":
        return np.sin(math.pi * (k - a) / (b - a)) ** 2
    if kind == "rect":
        return np.ones_like(k)
    raise ValueError("taper must be 'hann' or 'rect'")


def length_spectrum(spectrum: SpectrumSeries, density, length_grid, *,
                    taper: str = "hann", k_window: tuple[float, float] | None = None,
                    oversample: int = 16) -> StatCurve:
    """|Fourier transform| of the fluctuating spectral density over a k window.

    F(l) = sum_m w(k_m) exp(i k_m l) - integral w(k) rho(k) exp(i k l) dk,
    with taper w over the window.  `density` is the smooth modal density
    rho(k), either a constant or a callable; peaks of |F| sit at the metric
    lengths of the periodic orbits.
    """
    k = spectrum.values
    if k.size == 0:
        raise ValueError("empty spectrum")
    lengths = np.atleast_1d(np.asarray(length_grid, dtype=float))
    if np.any(lengths <= 0):
        raise ValueError("length grid must be positive")
    a, b = k_window if k_window is not None else (float(k[0]), float(k[-1]))
    sel = (k >= a) & (k <= b)
    k = k[sel]

    rho = density if callable(density) else (lambda kk, c=float(density): np.full_like(kk, c))

    w_lev = _taper(taper, k, a, b)
    osc_sum = (w_lev[None, :] * np.exp(1j * np.outer(lengths, k))).sum(axis=1)

    n_nodes = max(2048, int(oversample * (b - a) * lengths.max() / (2 * math.pi)))
    kk = np.linspace(a, b, n_nodes)
    smooth_weight = _taper(taper, kk, a, b) * rho(kk)
    out = np.empty(lengths.size, dtype=complex)
    chunk = max(1, int(4e6 // n_nodes))
    for i0 in range(0, lengths.size, chunk):
        ell = lengths[i0:i0 + chunk]
        integrand = smooth_weight[None, :] * np.exp(1j * np.outer(ell, kk))
        out[i0:i0 + chunk] = np.trapz(integrand, kk, axis=1)
    return StatCurve(lengths, np.abs(osc_sum - out), "length-spectrum",
                     {"k_window": (a, b), "taper": taper, "n_levels": int(k.size)})


def top_peaks(curve: StatCurve, n: int = 5, min_separation: float = 0.0) -> list[tuple[float, float]]:
    """Positions and heights of the n tallest local maxima of a curve."""
    y = curve.y
    x = curve.x
    inner = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    order = inner[np.argsort(y[inner])[::-1]]
    picked: list[int] = []
    for i in order:
        if all(abs(x[i] - x[j]) >= min_separation for j in picked):
            picked.append(i)
        if len(picked) == n:
            break
    picked.sort()
    return [(float(x[i]), float(y[i])) for i in picked]
