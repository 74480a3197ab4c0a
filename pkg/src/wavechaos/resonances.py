"""Complex Breit-Wigner resonance extraction from scattering traces.

Near an isolated or weakly overlapping resonance the trace follows

    S(f) = delta_ba + e^{i phi} [ B - i sum_m c_m / (f - f_m + i Gamma_m / 2) ],

with a complex window background B, a window phase phi absorbing global
rotations of the data, and real signed amplitudes c_m whose squares are the
nonnegative resonance strengths y_m = gamma_ma gamma_mb.  With one term,
phi = 0 and B = 0 this is the textbook single-resonance form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.special import k0

from .containers import StatCurve


@dataclass(frozen=True)
class Resonance:
    """One fitted resonance: position, total width, signed amplitude."""

    f: float
    gamma: float
    amplitude: float

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValueError("width must be positive")

    @property
    def strength(self) -> float:
        """y = gamma_a gamma_b, nonnegative by the square parametrization."""
        return self.amplitude * self.amplitude

    @property
    def quality_factor(self) -> float:
        return self.f / self.gamma


@dataclass(frozen=True)
class FitReport:
    window: tuple[float, float]
    residual_norm: float
    iterations: int
    converged: bool
    message: str = ""
    narrow_width_warning: bool = False
    covariance: np.ndarray | None = None


def breit_wigner_eval(resonances, f, background: complex = 0.0,
                      phase: float = 0.0, diagonal: bool = False):
    """Evaluate the multi-resonance Breit-Wigner model on f (scalar or array)."""
    f = np.asarray(f, dtype=float)
    total = np.zeros(f.shape, dtype=complex)
    for r in resonances:
        total += r.amplitude / (f - r.f + 0.5j * r.gamma)
    out = (1.0 if diagonal else 0.0) + np.exp(1j * phase) * (background - 1j * total)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Initial guesses
# ---------------------------------------------------------------------------

def peak_pick(freqs, values, *, noise_mads: float = 3.0) -> list[Resonance]:
    """Local maxima of |S| above median + noise_mads * MAD, as crude resonances.

    A peak only qualifies when its half maximum also clears the floor, which
    rejects bare noise maxima (they top out near the floor itself).  Width
    guesses come from half-maximum crossings, amplitudes from the
    on-resonance modulus |S| = 2 c / Gamma.  An empty list is a valid result.
    """
    f = np.asarray(freqs, dtype=float)
    mag = np.abs(np.asarray(values))
    if f.size < 3:
        return []
    med = float(np.median(mag))
    mad = float(np.median(np.abs(mag - med)))
    floor = med + noise_mads * mad
    # point-noise scale from first differences; smooth resonance structure
    # contributes little to the median increment
    sigma = 1.4826 * float(np.median(np.abs(np.diff(mag)))) / math.sqrt(2.0)
    cut = max(floor, med + 6.0 * sigma)
    guesses: list[Resonance] = []
    for i in range(1, f.size - 1):
        if not (mag[i] > cut and mag[i] >= mag[i - 1] and mag[i] > mag[i + 1]):
            continue
        half = 0.5 * mag[i]
        j = i
        while j > 0 and mag[j] > half:
            j -= 1
        left = f[j]
        j = i
        while j < f.size - 1 and mag[j] > half:
            j += 1
        right = f[j]
        gamma = max(right - left, 2.0 * (f[1] - f[0]))
        amp = mag[i] * gamma / 2.0
        guesses.append(Resonance(float(f[i]), float(gamma), float(amp)))
    return guesses


# ---------------------------------------------------------------------------
# Windowed least squares
# ---------------------------------------------------------------------------

def _pack(resonances, background, phase):
    p = [phase, background.real, background.imag]
    for r in resonances:
        p.extend([r.f, r.gamma, r.amplitude])
    return np.array(p)


def _unpack(p):
    phase = p[0]
    background = complex(p[1], p[2])
    res = [Resonance(p[i], p[i + 1], p[i + 2]) for i in range(3, p.size, 3)]
    return res, background, phase


def fit_window(freqs, values, guesses, *, diagonal: bool = False,
               max_nfev: int = 2000) -> tuple[list[Resonance], complex, float, FitReport]:
    """Damped least squares on stacked real/imaginary residuals in one window.

    Returns (resonances, background, phase, report).  Convergence follows the
    relative-residual (1e-10) and step-norm (1e-12) criteria; a width fitted
    below two grid steps is flagged as ill conditioned, never silently fixed.
    """
    f = np.asarray(freqs, dtype=float)
    s = np.asarray(values, dtype=complex)
    if f.size != s.size or f.size < 4:
        raise ValueError("need matching frequency/value arrays with >= 4 points")
    if not guesses:
        raise ValueError("need at least one resonance guess")
    n_par = 3 + 3 * len(guesses)
    if s.size * 2 < 5 * n_par:
        raise ValueError(f"window has {s.size} points for {n_par} parameters; "
                         "need >= 5 data points per free parameter "
                         "(2 residuals per point)")
    df = float(np.median(np.diff(f)))

    def residual(p):
        res, bg, ph = _unpack_raw(p)
        model = _eval_raw(res, bg, ph, f, diagonal)
        d = model - s
        return np.concatenate([d.real, d.imag])

    def _unpack_raw(p):
        bg = complex(p[1], p[2])
        res = [(p[i], p[i + 1], p[i + 2]) for i in range(3, p.size, 3)]
        return res, bg, p[0]

    def _eval_raw(res, bg, ph, fv, diag):
        tot = np.zeros(fv.shape, dtype=complex)
        for (fm, gm, cm) in res:
            tot += cm / (fv - fm + 0.5j * gm)
        return (1.0 if diag else 0.0) + np.exp(1j * ph) * (bg - 1j * tot)

    p0 = _pack(guesses, 0.0 + 0.0j, 0.0)
    lower = np.full(p0.size, -np.inf)
    upper = np.full(p0.size, np.inf)
    for i in range(3, p0.size, 3):
        lower[i + 1] = 1e-12 * max(df, 1.0)  # widths stay positive
    sol = least_squares(residual, p0, bounds=(lower, upper), method="trf",
                        ftol=1e-10, xtol=1e-12, gtol=None, max_nfev=max_nfev)
    res, background, phase = _unpack(sol.x)
    converged = bool(sol.status > 0)
    narrow = any(r.gamma < 2.0 * df for r in res)

    cov = None
    dof = sol.fun.size - sol.x.size
    if converged and dof > 0:
        jtj = sol.jac.T @ sol.jac
        try:
            cov = np.linalg.inv(jtj) * (2.0 * sol.cost / dof)
        except np.linalg.LinAlgError:
            cov = None
    report = FitReport(window=(float(f[0]), float(f[-1])),
                       residual_norm=float(np.linalg.norm(sol.fun)),
                       iterations=int(sol.nfev),
                       converged=converged,
                       message=str(sol.message),
                       narrow_width_warning=narrow,
                       covariance=cov)
    res = sorted(res, key=lambda r: r.f)
    return res, background, phase, report


def cluster_windows(guesses, width_factor: float = 10.0):
    """Group guessed resonances whose spacing is below width_factor * Gamma."""
    if not guesses:
        return []
    gs = sorted(guesses, key=lambda r: r.f)
    groups = [[gs[0]]]
    for g in gs[1:]:
        prev = groups[-1][-1]
        scale = width_factor * max(prev.gamma, g.gamma)
        if g.f - prev.f <= scale:
            groups[-1].append(g)
        else:
            groups.append([g])
    return groups


def fit_trace(freqs, values, *, diagonal: bool = False, pad_widths: float = 5.0):
    """Peak-pick, cluster into windows, and fit each window independently.

    Returns (resonances, reports); windows that fail to converge keep their
    report flag false and contribute no resonances.
    """
    f = np.asarray(freqs, dtype=float)
    s = np.asarray(values, dtype=complex)
    guesses = peak_pick(f, s)
    all_res: list[Resonance] = []
    reports: list[FitReport] = []
    for group in cluster_windows(guesses):
        gmax = max(g.gamma for g in group)
        lo = group[0].f - pad_widths * gmax
        hi = group[-1].f + pad_widths * gmax
        sel = (f >= lo) & (f <= hi)
        if np.count_nonzero(sel) * 2 < 5 * (3 + 3 * len(group)):
            grow = np.argsort(np.abs(f - 0.5 * (lo + hi)))[: 5 * (3 + 3 * len(group))]
            sel = np.zeros(f.size, dtype=bool)
            sel[grow] = True
        try:
            res, _, _, report = fit_window(f[sel], s[sel], group, diagonal=diagonal)
        except ValueError:
            continue
        reports.append(report)
        if report.converged:
            all_res.extend(res)
    all_res.sort(key=lambda r: r.f)
    return all_res, reports


# ---------------------------------------------------------------------------
# Strength statistics
# ---------------------------------------------------------------------------

def strength_reference_pdf(z):
    """Chaotic-limit density of z = log10 of the rescaled strength:
    p(z) = ln(10)/pi * 10^(z/2) K0(10^(z/2))."""
    z = np.asarray(z, dtype=float)
    u = np.power(10.0, z / 2.0)
    out = (math.log(10.0) / math.pi) * u * k0(u)
    return float(out) if out.ndim == 0 else out


def strength_log_distribution(strengths, bins: int = 40,
                              z_range: tuple[float, float] = (-6.0, 2.0)
                              ) -> tuple[StatCurve, StatCurve]:
    """Histogram of z = log10(y / <y>) against the K0 reference curve.

    Nonpositive strengths are excluded; the exclusion count is in the meta.
    """
    y = np.asarray(strengths, dtype=float)
    pos = y > 0
    excluded = int(np.count_nonzero(~pos))
    y = y[pos]
    if y.size == 0:
        raise ValueError("no positive strengths")
    z = np.log10(y / y.mean())
    hist, edges = np.histogram(z, bins=bins, range=z_range, density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    meta = {"n": int(y.size), "excluded": excluded, "bin_width": float(width)}
    return (StatCurve(centers, hist, "strength-pdf", meta),
            StatCurve(centers, strength_reference_pdf(centers), "reference"))


def quality_factors(resonances) -> np.ndarray:
    """Q = f / Gamma per resonance."""
    return np.array([r.quality_factor for r in resonances])
