"""Resonator scattering: channel coupling, S-matrix ensembles, correlations.

The scattering matrix of a resonator coupled to M open channels and Lambda
weakly coupled absorption channels is

    S(f) = 1 - 2 pi i W^T (f - H + i pi W W^T)^(-1) W,

with real Gaussian channel vectors obeying sum_mu W_c,mu W_c',mu = N v_c^2
delta_cc'.  The coupling strength of channel c is the transmission
coefficient T_c = 1 - |<S_cc>|^2 = 4 x_c / (1 + x_c)^2 with x_c = pi^2 v_c^2/d
and d the mean level spacing at the band center.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rmt import (EnsembleConfig, HamiltonianSample, interpolating_matrix,
                  mean_spacing_center, substream)

CHANNEL_ROLES = ("open", "fictitious")


# ---------------------------------------------------------------------------
# Coupling matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingMatrix:
    """Channel vectors W (rows) with roles and per-channel strengths v_c^2."""

    w: np.ndarray          # (M + Lambda, N)
    roles: tuple[str, ...]
    v2: np.ndarray         # per-channel v_c^2

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        v2 = np.asarray(self.v2, dtype=float)
        if w.ndim != 2 or w.shape[0] != len(self.roles) or v2.size != w.shape[0]:
            raise ValueError("coupling shape mismatch")
        for r in self.roles:
            if r not in CHANNEL_ROLES:
                raise ValueError(f"unknown channel role {r!r}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "v2", v2)

    @property
    def n_channels(self) -> int:
        return self.w.shape[0]

    @property
    def n(self) -> int:
        return self.w.shape[1]

    @property
    def open_indices(self) -> np.ndarray:
        return np.flatnonzero([r == "open" for r in self.roles])

    def orthogonality_defect(self) -> float:
        gram = self.w @ self.w.T
        target = np.diag(self.n * self.v2)
        return float(np.max(np.abs(gram - target)))


def build_coupling(n: int, channels, seed: int = 0, index: int = 0) -> CouplingMatrix:
    """Gaussian channel vectors, orthogonalized and rescaled to N v_c^2.

    `channels` is a sequence of (role, v2) pairs; roles are "open" or
    "fictitious".  Requires M + Lambda <= N.
    """
    channels = list(channels)
    if len(channels) > n:
        raise ValueError(f"{len(channels)} channels exceed matrix dimension {n}")
    if len(channels) == 0:
        raise ValueError("need at least one channel")
    roles = tuple(r for r, _ in channels)
    v2 = np.array([float(v) for _, v in channels])
    if np.any(v2 < 0):
        raise ValueError("channel strengths v^2 must be nonnegative")
    rng = substream(seed, index)
    g = rng.standard_normal((len(channels), n))
    # Gram-Schmidt across channels, then rescale rows to sum W^2 = N v^2
    q = np.zeros_like(g)
    for c in range(g.shape[0]):
        vec = g[c].copy()
        for p in range(c):
            vec -= (q[p] @ vec) * q[p]
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise RuntimeError("degenerate Gaussian draw during orthogonalization")
        q[c] = vec / norm
    w = q * np.sqrt(n * v2)[:, None]
    return CouplingMatrix(w, roles, v2)


# ---------------------------------------------------------------------------
# Transmission algebra
# ---------------------------------------------------------------------------

def transmission_from_average(mean_s_cc: complex) -> float:
    """T_c = 1 - |<S_cc>|^2 from the ensemble/frequency-averaged element."""
    return 1.0 - abs(mean_s_cc) ** 2


def transmission_from_v2(v2: float, d: float) -> float:
    """Forward relation T = 4 x / (1 + x)^2, x = pi^2 v^2 / d."""
    x = math.pi**2 * v2 / d
    return 4.0 * x / (1.0 + x) ** 2


def v2_from_transmission(t: float, d: float) -> float:
    """Invert T = 4x/(1+x)^2 on the sub-critical branch x <= 1.

    x = (2/T)(1 - sqrt(1-T)) - 1, continuous with v^2(0) = 0.
    """
    if not (0.0 <= t <= 1.0):
        raise ValueError("transmission coefficient must lie in [0, 1]")
    if t == 0.0:
        return 0.0
    x = (2.0 / t) * (1.0 - math.sqrt(1.0 - t)) - 1.0
    return x * d / math.pi**2


def weisskopf_absorption(gamma_over_d: float, t1: float, t2: float) -> tuple[float, bool]:
    """tau_abs = 2 pi Gamma/d - T1 - T2, clamped at zero.

    Returns (tau_abs, clamped_flag); the flag warns that the width budget
    fell below the open-channel transmissions.
    """
    if gamma_over_d <= 0:
        raise ValueError("Gamma/d must be positive")
    tau = 2.0 * math.pi * gamma_over_d - t1 - t2
    if tau < 0.0:
        return 0.0, True
    return tau, False


# ---------------------------------------------------------------------------
# S-matrix evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeidelbergModel:
    """Hamiltonian sample plus channel coupling; d is the central mean spacing."""

    hamiltonian: HamiltonianSample
    coupling: CouplingMatrix
    d: float

    def __post_init__(self):
        if self.hamiltonian.n != self.coupling.n:
            raise ValueError("Hamiltonian and coupling dimensions disagree")
        if not (self.d > 0):
            raise ValueError("mean spacing d must be positive")


def smatrix(model: HeidelbergModel, f: float) -> np.ndarray:
    """Direct evaluation of S(f) by one linear solve in the N-dimensional space."""
    h = model.hamiltonian.matrix
    w = model.coupling.w
    n = h.shape[0]
    ww = w.T @ w
    a = f * np.eye(n) - h + 1j * math.pi * ww
    try:
        x = np.linalg.solve(a, w.T.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"singular resolvent at f={f:g}") from exc
    return np.eye(w.shape[0]) - 2j * math.pi * (w @ x)


class SMatrixSweep:
    """Fast frequency sweep: eigenbasis of H plus a channel-space solve per f.

    With H = U diag(e) U^T and B = U^T W^T, the channel Green matrix is
    C(f) = B^T diag(1/(f - e)) B and S(f) = 1 - 2 pi i C (1 + i pi C)^(-1),
    which matches the direct solve to machine precision away from the poles.
    """

    def __init__(self, model: HeidelbergModel):
        self.model = model
        ev = model.hamiltonian.eigenvalues
        vec = model.hamiltonian.eigenvectors
        self.eigenvalues = ev
        self._b = vec.conj().T @ model.coupling.w.T  # (N, channels)

    def at(self, f: float) -> np.ndarray:
        b = self._b
        c = b.T.conj() @ (b / (f - self.eigenvalues)[:, None])
        m = np.eye(c.shape[0]) + 1j * math.pi * c
        # C and (1 + i pi C)^(-1) commute, so the one-sided solve is exact
        return np.eye(c.shape[0]) - 2j * math.pi * np.linalg.solve(m, c)

    def open_block(self, freqs: np.ndarray) -> np.ndarray:
        """Open-channel S elements, shape (n_freq, M, M)."""
        idx = self.model.coupling.open_indices
        out = np.empty((len(freqs), idx.size, idx.size), dtype=complex)
        for i, f in enumerate(freqs):
            s = self.at(float(f))
            out[i] = s[np.ix_(idx, idx)]
        return out


def effective_widths(model: HeidelbergModel) -> np.ndarray:
    """Resonance widths: -2 Im eigenvalues of H - i pi W^T W, ascending by position."""
    h = model.hamiltonian.matrix
    w = model.coupling.w
    heff = h.astype(complex) - 1j * math.pi * (w.T @ w)
    poles = np.linalg.eigvals(heff)
    order = np.argsort(poles.real)
    return -2.0 * poles.imag[order]


# ---------------------------------------------------------------------------
# Correlation functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationResult:
    """Autocorrelation on a lag grid plus the zero-lag normalization."""

    eps: np.ndarray
    values: np.ndarray
    c0: float

    def normalized(self) -> np.ndarray:
        return self.values / self.c0 if self.c0 != 0 else self.values


def autocorrelation(traces: np.ndarray, df: float, eps_grid=None, *,
                    max_lag_fraction: float = 0.25) -> CorrelationResult:
    """C(eps) = <S^fl(f) S^fl*(f + eps)> over frequency (and trace ensemble).

    `traces` is (n_traces, n_freq) or (n_freq,) on a uniform grid of step df.
    The fluctuating part subtracts each trace's own mean.  `eps_grid` defaults
    to multiples of df up to a quarter of the span.
    """
    tr = np.atleast_2d(np.asarray(traces, dtype=complex))
    n_f = tr.shape[1]
    max_lag = int(n_f * max_lag_fraction)
    if max_lag < 1:
        raise ValueError("trace span is too short for an autocorrelation")
    fl = tr - tr.mean(axis=1, keepdims=True)
    if eps_grid is None:
        lags = np.arange(max_lag + 1)
    else:
        lags = np.unique(np.rint(np.asarray(eps_grid, dtype=float) / df).astype(int))
        if lags.size == 0 or lags.max() >= n_f:
            raise ValueError("eps grid outside the trace span")
    vals = np.empty(lags.size, dtype=complex)
    for i, lag in enumerate(lags):
        prod = fl[:, : n_f - lag] * np.conj(fl[:, lag:])
        vals[i] = prod.mean()
    c0 = float(np.mean(np.abs(fl) ** 2))
    return CorrelationResult(lags * df, vals, c0)


def cross_correlation(trace_12: np.ndarray, trace_21: np.ndarray) -> float:
    """Re <S12^fl S21^fl*> / sqrt(<|S12^fl|^2> <|S21^fl|^2>); 1 when symmetric."""
    a = np.atleast_2d(np.asarray(trace_12, dtype=complex))
    b = np.atleast_2d(np.asarray(trace_21, dtype=complex))
    if a.shape != b.shape:
        raise ValueError("traces must share their frequency grid")
    afl = a - a.mean(axis=1, keepdims=True)
    bfl = b - b.mean(axis=1, keepdims=True)
    va = float(np.mean(np.abs(afl) ** 2))
    vb = float(np.mean(np.abs(bfl) ** 2))
    if va == 0.0 or vb == 0.0:
        raise ValueError("zero variance in a trace; cross-correlation undefined")
    num = float(np.real(np.mean(afl * np.conj(bfl))))
    return num / math.sqrt(va * vb)


# ---------------------------------------------------------------------------
# Ensemble simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleSweepResult:
    """Open-channel traces and summary statistics of an ensemble sweep."""

    freqs: np.ndarray                 # shared frequency grid in units of d
    s_open: np.ndarray                # (realizations, n_freq, M, M)
    d: float
    mean_s: np.ndarray                # (M, M) ensemble+frequency average
    config: EnsembleConfig
    channels: tuple = ()

    def trace(self, a: int, b: int) -> np.ndarray:
        return self.s_open[:, :, a, b]

    def transmission(self, c: int) -> float:
        return transmission_from_average(self.mean_s[c, c])


def simulate_ensemble(config: EnsembleConfig, channels, *,
                      band_fraction: float = 0.5,
                      step_fraction: float = 0.1,
                      points_cap: int = 20_000_000) -> EnsembleSweepResult:
    """Sweep the open-channel S matrix over the spectral bulk of an ensemble.

    Per realization the Hamiltonian and coupling are drawn from substreams of
    the configured seed; frequencies cover the central `band_fraction` of the
    semicircle in steps of `step_fraction` * d.  Traces are recorded for the
    open channels only.
    """
    channels = tuple(channels)
    n = config.n
    d = mean_spacing_center(n)
    # central fraction of the semicircle span [-2 sqrt(N), 2 sqrt(N)]
    half_band = band_fraction * 2.0 * math.sqrt(n) / 2.0
    freqs = np.arange(-half_band, half_band, step_fraction * d)
    m_open = sum(1 for r, _ in channels if r == "open")
    if m_open == 0:
        raise ValueError("need at least one open channel")
    total = config.realizations * freqs.size
    if total > points_cap:
        raise RuntimeError(
            f"sweep of {total} resolvent points exceeds cap {points_cap}")
    s_open = np.empty((config.realizations, freqs.size, m_open, m_open), dtype=complex)
    for i in range(config.realizations):
        rng = substream(config.seed, i)
        h = HamiltonianSample(interpolating_matrix(n, config.xi, rng))
        coupling = build_coupling(n, channels, seed=config.seed + 1, index=i)
        model = HeidelbergModel(h, coupling, d)
        s_open[i] = SMatrixSweep(model).open_block(freqs)
    mean_s = s_open.mean(axis=(0, 1))
    return EnsembleSweepResult(freqs / d, s_open, d, mean_s, config, channels)
