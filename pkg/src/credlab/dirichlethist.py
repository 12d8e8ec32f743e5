"""Dirichlet histogram density demo: conjugate posterior from iid samples of
the truncated Laplace density, with exact Haar coefficient extraction for the
multiscale credible set of the introduction example.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seqmodel import BasisSpec, HAAR_WAVELET, SignalCoefficients, TruncatedLaplace


@dataclass(frozen=True)
class HistogramModel:
    """2^L dyadic bins (k 2^-L, (k+1) 2^-L] with a flat Dirichlet prior."""

    L: int

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("resolution L must be >= 1")

    @property
    def bins(self) -> int:
        return 2 ** self.L

    @property
    def prior_concentration(self) -> np.ndarray:
        return np.ones(self.bins)


@dataclass(frozen=True)
class DirichletPosterior:
    concentrations: np.ndarray
    sample_size: int

    def __post_init__(self):
        c = np.asarray(self.concentrations, dtype=float)
        object.__setattr__(self, "concentrations", c)
        if np.any(c < 1.0):
            raise ValueError("posterior concentrations must be >= 1")

    def mean_heights(self) -> np.ndarray:
        return self.concentrations / self.concentrations.sum()


def default_resolution(n: int, s: float = 1.4) -> int:
    """L with 2^L nearest (n/log n)^{1/(2s+1)}; the demo truth lies in the
    L2-Sobolev scale just below smoothness 3/2."""
    target = (n / math.log(n)) ** (1.0 / (2.0 * s + 1.0))
    L = max(1, round(math.log2(target)))
    if abs(2.0 ** L - target) > abs(2.0 ** (L + 1) - target):
        L += 1
    return L


def sample_iid_laplace(n: int, seed: int, loc: float = 0.5, scale: float = 5.0) -> np.ndarray:
    """iid draws from the truncated Laplace density by exact inverse CDF."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    return TruncatedLaplace(loc, scale).ppf(rng.uniform(size=n))


def bin_counts(samples, L: int) -> np.ndarray:
    """Counts over the 2^L bins; the boundary point 0 goes to bin 0."""
    x = np.asarray(samples, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("samples must lie in [0,1]")
    idx = np.ceil(x * 2 ** L).astype(int) - 1
    idx = np.clip(idx, 0, 2 ** L - 1)
    return np.bincount(idx, minlength=2 ** L)


def posterior(counts) -> DirichletPosterior:
    c = np.asarray(counts)
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    return DirichletPosterior(1.0 + c.astype(float), int(c.sum()))


def sample_heights(post: DirichletPosterior, M: int, seed: int) -> np.ndarray:
    """M rows of simplex heights h; each histogram 2^L sum h_k 1_bin integrates
    to one exactly."""
    rng = np.random.default_rng(seed)
    return rng.dirichlet(post.concentrations, size=M)


def haar_coefficients(heights, L: int) -> np.ndarray:
    """Exact Haar inner products of the density 2^L sum_k h_k 1_{I_Lk}.

    The density is piecewise constant, so each inner product is a signed sum
    of block masses: with S the cumulative bin mass, the (l,k) coefficient is
    2^{l/2} (2 S(mid) - S(a) - S(b)).  Output uses the flattened layout of
    the wavelet modules (scaling coefficient first, levels 0..L-1); with the
    left-positive Haar convention a density concentrated on the left half has
    a positive level-0 coefficient.  Accepts one simplex point or a stack.
    """
    h = np.atleast_2d(np.asarray(heights, dtype=float))
    if h.shape[1] != 2 ** L:
        raise ValueError("heights length must equal 2^L")
    if np.any(h < -1e-12) or np.any(np.abs(h.sum(axis=1) - 1.0) > 1e-8):
        raise ValueError("heights must lie on the unit simplex")
    css = np.concatenate([np.zeros((h.shape[0], 1)), np.cumsum(h, axis=1)], axis=1)
    out = np.empty((h.shape[0], 2 ** L))
    out[:, 0] = css[:, -1]  # total mass = 1
    for l in range(L):
        k = np.arange(2 ** l)
        width = 2 ** (L - l)          # bins per level-l interval
        a = k * width
        mid = a + width // 2
        b = a + width
        out[:, 2 ** l: 2 ** (l + 1)] = 2.0 ** (l / 2.0) * (2 * css[:, mid] - css[:, a] - css[:, b])
    if np.ndim(heights) == 1:
        return out[0]
    return out


def haar_basis_for(L: int) -> BasisSpec:
    """Basis spec matching the flattened output of ``haar_coefficients``."""
    return BasisSpec(HAAR_WAVELET, L - 1)


def density_coefficients(heights, L: int) -> SignalCoefficients:
    return SignalCoefficients(haar_basis_for(L), haar_coefficients(heights, L))
