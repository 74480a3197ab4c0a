"""Gaussian random-matrix ensembles and the orthogonal-unitary interpolation.

Variance convention: the symmetric (orthogonal-class) part has off-diagonal
variance 1 and diagonal variance 2; the unitary-class sampler has unit
variance per complex off-diagonal entry.  The semicircle radius is then
2 sqrt(N) and the mean level spacing at the band center pi / sqrt(N).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .containers import SpectrumSeries, UnfoldedSpectrum


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble of `realizations` matrices of size n with violation strength xi.

    Realization i draws from a deterministic substream keyed by (seed, i).
    """

    n: int
    xi: float = 0.0
    realizations: int = 1
    seed: int = 0
    bulk_fraction: float = 0.5

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("matrix dimension must be >= 2")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if not (0.0 < self.bulk_fraction <= 1.0):
            raise ValueError("bulk_fraction must be in (0, 1]")
        if self.xi < 0:
            raise ValueError("xi must be nonnegative")


class HamiltonianSample:
    """Hermitian matrix with a lazily cached eigendecomposition."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = matrix
        self._eigenvalues: np.ndarray | None = None
        self._eigenvectors: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def _decompose(self):
        if self._eigenvalues is None:
            self._eigenvalues, self._eigenvectors = np.linalg.eigh(self.matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        self._decompose()
        return self._eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        self._decompose()
        return self._eigenvectors


def substream(seed: int, index: int) -> np.random.Generator:
    """Deterministic generator for realization `index` of a seeded ensemble."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def goe_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return (a + a.T) / math.sqrt(2.0)


def antisymmetric_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return (a - a.T) / math.sqrt(2.0)


def gue_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (x + x.conj().T) / 2.0


def sample_goe(n: int, seed: int = 0, index: int = 0) -> HamiltonianSample:
    return HamiltonianSample(goe_matrix(n, substream(seed, index)))


def sample_gue(n: int, seed: int = 0, index: int = 0) -> HamiltonianSample:
    return HamiltonianSample(gue_matrix(n, substream(seed, index)))


def interpolating_matrix(n: int, xi: float, rng: np.random.Generator) -> np.ndarray:
    """H = H_sym + i (pi xi / sqrt(N)) H_antisym; xi = 0 stays real symmetric."""
    h = goe_matrix(n, rng)
    if xi == 0.0:
        return h
    return h + 1j * (math.pi * xi / math.sqrt(n)) * antisymmetric_matrix(n, rng)


def sample_interpolating(config: EnsembleConfig) -> Iterator[HamiltonianSample]:
    """Stream of interpolating-ensemble samples, one matrix in memory at a time."""
    for i in range(config.realizations):
        rng = substream(config.seed, i)
        yield HamiltonianSample(interpolating_matrix(config.n, config.xi, rng))


def bulk_spectrum(sample: HamiltonianSample | np.ndarray,
                  bulk_fraction: float = 0.5) -> SpectrumSeries:
    """Central ceil(fraction * N) eigenvalues, ascending."""
    if not (0.0 < bulk_fraction <= 1.0):
        raise ValueError("bulk_fraction must be in (0, 1]")
    ev = sample.eigenvalues if isinstance(sample, HamiltonianSample) else np.sort(
        np.asarray(sample, dtype=float))
    n = ev.size
    keep = int(math.ceil(bulk_fraction * n))
    lo = (n - keep) // 2
    return SpectrumSeries(ev[lo:lo + keep], unit="dimensionless", provenance="simulated")


def mean_spacing_center(n: int) -> float:
    """Mean level spacing at the band center for the unit-variance convention."""
    return math.pi / math.sqrt(n)


def semicircle_count(e, n: int):
    """Integrated semicircle density: expected number of levels below e."""
    r = 2.0 * math.sqrt(n)
    x = np.clip(np.asarray(e, dtype=float) / r, -1.0, 1.0)
    out = n * (0.5 + (x * np.sqrt(1.0 - x * x) + np.arcsin(x)) / math.pi)
    return float(out) if out.ndim == 0 else out


def unfold_semicircle(spectrum: SpectrumSeries | np.ndarray, n: int) -> UnfoldedSpectrum:
    """Unfold Gaussian-ensemble eigenvalues by the analytic semicircle law."""
    values = spectrum.values if isinstance(spectrum, SpectrumSeries) else np.asarray(spectrum)
    return UnfoldedSpectrum(semicircle_count(values, n), source="semicircle")
