"""Bases, signals, norms, self-similarity checks and synthetic data for the
Gaussian sequence model  y_k = f_k + z_k / sqrt(n).

Fourier-type bases are indexed k = 1, 2, ... and stored in that order.
Haar coefficient arrays are stored flattened: position 0 holds the scaling
coefficient (the constant function on (0,1]) and position m >= 1 holds the
wavelet (l, k) with l = floor(log2 m), k = m - 2**l, i.e. level l occupies
positions [2**l, 2**(l+1)).  The Haar mother wavelet is +1 on the left half
of its support and -1 on the right half; coefficient signs depend on this.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

FOURIER_SINE = "fourier_sine"
VOLTERRA_SVD = "volterra_svd"
HAAR_WAVELET = "haar_wavelet"

_BASIS_KINDS = (FOURIER_SINE, VOLTERRA_SVD, HAAR_WAVELET)

COEFFS_SCHEMA = "credlab-coeffs-v1"


# ---------------------------------------------------------------------------
# bases and coefficient containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisSpec:
    """Orthonormal basis of L2[0,1] with a finite truncation.

    ``max_index`` is K_max for the Fourier-type bases and the maximal wavelet
    resolution J_max for the Haar basis.
    """

    kind: str
    max_index: int

    def __post_init__(self):
        if self.kind not in _BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.max_index < 1:
            raise ValueError("max_index must be >= 1")

    @property
    def is_wavelet(self) -> bool:
        return self.kind == HAAR_WAVELET

    @property
    def size(self) -> int:
        """Length of a coefficient array for this truncation."""
        if self.is_wavelet:
            return 2 ** (self.max_index + 1)
        return self.max_index


def wavelet_levels(basis: BasisSpec) -> np.ndarray:
    """Level of each flattened position; the scaling coefficient gets -1."""
    if not basis.is_wavelet:
        raise ValueError("wavelet layout undefined for Fourier-type bases")
    lev = np.empty(basis.size, dtype=int)
    lev[0] = -1
    for l in range(basis.max_index + 1):
        lev[2 ** l: 2 ** (l + 1)] = l
    return lev


def level_slice(l: int) -> slice:
    """Positions of wavelet level l (l = -1 is the scaling coefficient)."""
    if l == -1:
        return slice(0, 1)
    return slice(2 ** l, 2 ** (l + 1))


@dataclass(frozen=True)
class SignalCoefficients:
    """Truncated coefficient array of a function against a declared basis."""

    basis: BasisSpec
    coeffs: np.ndarray
    declared_beta: Optional[float] = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)
        if c.shape != (self.basis.size,):
            raise ValueError(
                f"coefficient length {c.shape} does not match basis size {self.basis.size}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")


@dataclass(frozen=True)
class NoisyObservation:
    """Sequence data y = f0 + z/sqrt(n) with RNG provenance."""

    basis: BasisSpec
    y: np.ndarray
    n: float
    seed: int

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "y", y)
        if y.shape != (self.basis.size,):
            raise ValueError("observation length does not match basis size")
        if not self.n > 0:
            raise ValueError("noise level n must be positive")


def observe(f0: SignalCoefficients, n: float, seed: int) -> NoisyObservation:
    """Draw y = f0 + z/sqrt(n), z iid standard normal, reproducibly per seed."""
    if not n > 0:
        raise ValueError("noise level n must be positive")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(f0.basis.size)
    return NoisyObservation(f0.basis, f0.coeffs + z / math.sqrt(n), float(n), int(seed))


def default_fourier_truncation(n: float) -> int:
    """Default K_max; tail posterior variance below 1e-12 for alpha >= 0.1."""
    return max(int(2 * n), 2 ** 14)


def default_wavelet_truncation(n: float) -> int:
    """Default J_max = floor(log2 n) + 3."""
    return int(math.floor(math.log2(n))) + 3


# ---------------------------------------------------------------------------
# weights and norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSequence:
    """Multiscale weights w_0..w_Jmax, monotone nondecreasing with w_l >= 1.

    The paper-style sup runs over levels l >= 0 but only defines weights for
    l >= 1; we set w_0 = w_1 and let the scaling coefficient share w_0.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("need weights for levels 0..J with J >= 1")
        if np.any(v < 1.0):
            raise ValueError("weights must satisfy w_l >= 1")
        if np.any(np.diff(v) < -1e-12):
            raise ValueError("weights must be monotone nondecreasing")

    @classmethod
    def power_law(cls, eps: float, j_max: int, u: float = 0.0) -> "WeightSequence":
        """w_l = l^(1/2+eps) * (1 + log l)^u for l >= 1, w_0 = w_1."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        l = np.arange(1, j_max + 1, dtype=float)
        w = l ** (0.5 + eps) * (1.0 + np.log(l)) ** u
        w = np.maximum(w, 1.0)
        return cls(np.concatenate(([w[0]], w)))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "WeightSequence":
        return cls(np.asarray(values, dtype=float))

    def is_admissible(self) -> bool:
        """Check w_l/sqrt(l) strictly increasing over the stored range.

        Unboundedness cannot be certified from a finite array; this is the
        finite surrogate and reports should state the checked range.
        """
        l = np.arange(1, self.values.size, dtype=float)
        r = self.values[1:] / np.sqrt(l)
        return bool(np.all(np.diff(r) > 0))

    @property
    def j_max(self) -> int:
        return self.values.size - 1

    def per_position(self, basis: BasisSpec) -> np.ndarray:
        """Weight of each flattened wavelet position (scaling gets w_0)."""
        lev = wavelet_levels(basis)
        if basis.max_index > self.j_max:
            raise ValueError("weight sequence shorter than basis resolution")
        return self.values[np.maximum(lev, 0)]


@dataclass(frozen=True)
class NormSpec:
    """Descriptor of one of the norms used throughout the laboratory."""

    kind: str
    s: float = 0.0
    delta: float = 0.0
    weights: Optional[WeightSequence] = None
    grid_level: Optional[int] = None

    @classmethod
    def l2(cls) -> "NormSpec":
        return cls("l2")

    @classmethod
    def sobolev_log(cls, s: float, delta: float = 0.0) -> "NormSpec":
        if delta < 0:
            raise ValueError("delta must be nonnegative")
        return cls("sobolev_log", s=s, delta=delta)

    @classmethod
    def h_delta(cls, delta: float) -> "NormSpec":
        """The H(delta) = H^{-1/2,delta} norm of the weak-convergence theory."""
        return cls("sobolev_log", s=-0.5, delta=delta)

    @classmethod
    def multiscale(cls, weights: WeightSequence) -> "NormSpec":
        return cls("multiscale", weights=weights)

    @classmethod
    def sup(cls, grid_level: Optional[int] = None) -> "NormSpec":
        return cls("sup", grid_level=grid_level)


def sobolev_log_weights(size: int, s: float, delta: float) -> np.ndarray:
    """k^{2s} (log k)^{-2 delta} with the k=1 singularity resolved by
    (max(log k, 1))^{-2 delta}, so the k = 1 weight equals 1."""
    k = np.arange(1, size + 1, dtype=float)
    return k ** (2 * s) * np.maximum(np.log(k), 1.0) ** (-2 * delta)


def norm(x, spec: NormSpec, basis: Optional[BasisSpec] = None) -> float:
    """Evaluate ``spec`` on a SignalCoefficients or a raw coefficient array.

    ``basis`` is required for the wavelet norms when ``x`` is a bare array.
    Values computed for a 2-d array are per-row.
    """
    if isinstance(x, SignalCoefficients):
        basis = x.basis
        arr = x.coeffs
    else:
        arr = np.asarray(x, dtype=float)
    size = arr.shape[-1]

    if spec.kind == "l2":
        return np.sqrt(np.sum(arr * arr, axis=-1))
    if spec.kind == "sobolev_log":
        if basis is not None and basis.is_wavelet:
            raise ValueError("sobolev_log norms apply to Fourier-type coefficients")
        w = sobolev_log_weights(size, spec.s, spec.delta)
        return np.sqrt((arr * arr) @ w)
    if spec.kind == "multiscale":
        if basis is None or not basis.is_wavelet:
            raise ValueError("multiscale norm requires a wavelet basis")
        w = spec.weights.per_position(basis)
        return np.max(np.abs(arr) / w, axis=-1)
    if spec.kind == "sup":
        if basis is None or not basis.is_wavelet:
            raise ValueError("sup norm requires a wavelet basis")
        level = spec.grid_level if spec.grid_level is not None else basis.max_index + 1
        vals = haar_cell_values(arr, basis, level)
        return np.max(np.abs(vals), axis=-1)
    raise ValueError(f"unknown norm kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def haar_cell_values(coeffs, basis: BasisSpec, grid_level: Optional[int] = None) -> np.ndarray:
    """Values of the Haar partial sum on the 2**grid_level dyadic cells.

    Exact because partial sums up to level J_max are constant on the cells of
    any finer dyadic partition; the default grid level is J_max + 1.
    Accepts a single coefficient array or a stack of them (rows).
    """
    arr = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if grid_level is None:
        grid_level = basis.max_index + 1
    if grid_level < basis.max_index + 1:
        raise ValueError("grid level too coarse for exact evaluation")
    vals = arr[:, :1].copy()
    for l in range(basis.max_index + 1):
        c = arr[:, 2 ** l: 2 ** (l + 1)] * 2.0 ** (l / 2.0)
        nxt = np.empty((arr.shape[0], 2 ** (l + 1)))
        nxt[:, 0::2] = vals + c
        nxt[:, 1::2] = vals - c
        vals = nxt
    reps = 2 ** (grid_level - basis.max_index - 1)
    if reps > 1:
        vals = np.repeat(vals, reps, axis=1)
    if np.ndim(coeffs) == 1:
        return vals[0]
    return vals


def evaluate_function(coeffs, grid, basis: Optional[BasisSpec] = None) -> np.ndarray:
    """Pointwise partial-sum values sum_k f_k e_k(x) on grid points in [0,1].

    Haar partial sums are evaluated as piecewise-constant functions with
    right-closed dyadic cells; x = 0 takes the value of the first cell.
    """
    if isinstance(coeffs, SignalCoefficients):
        basis = coeffs.basis
        arr = coeffs.coeffs
    else:
        arr = np.asarray(coeffs, dtype=float)
    x = np.asarray(grid, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("grid points must lie in [0,1]")

    if basis.is_wavelet:
        level = basis.max_index + 1
        cells = haar_cell_values(arr, basis, level)
        # cell i covers (i/2^level, (i+1)/2^level]; map x=0 into cell 0
        idx = np.ceil(x * 2 ** level).astype(int) - 1
        idx = np.clip(idx, 0, 2 ** level - 1)
        return cells[..., idx]

    k = np.arange(1, basis.size + 1, dtype=float)
    if basis.kind == FOURIER_SINE:
        design = np.sqrt(2.0) * np.sin(np.pi * np.outer(x, k))
    else:
        design = np.sqrt(2.0) * np.cos(np.pi * np.outer(x, (k - 0.5)))
    return design @ arr if arr.ndim == 1 else arr @ design.T


# ---------------------------------------------------------------------------
# signal recipes
# ---------------------------------------------------------------------------

def power_sine_signal(a: float, b: float, basis: BasisSpec) -> SignalCoefficients:
    """f_k = k^{-a} sin(b k) on a Fourier-type basis; a = 3/2, b = 1 gives the
    smoothness-one test signal used in the simulations."""
    if basis.is_wavelet:
        raise ValueError("power_sine requires a Fourier-type basis")
    k = np.arange(1, basis.size + 1, dtype=float)
    return SignalCoefficients(basis, k ** (-a) * np.sin(b * k), declared_beta=a - 0.5)


class TruncatedLaplace:
    """Density proportional to exp(-scale*|x-loc|) on [0,1], exactly normalized."""

    def __init__(self, loc: float = 0.5, scale: float = 5.0):
        if not 0 < loc < 1 or scale <= 0:
            raise ValueError("need 0 < loc < 1 and scale > 0")
        self.loc = loc
        self.scale = scale
        self.const = scale / (2.0 - math.exp(-scale * loc) - math.exp(-scale * (1 - loc)))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.const * np.exp(-self.scale * np.abs(x - self.loc))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        c, s, m = self.const, self.scale, self.loc
        lo = (c / s) * (np.exp(-s * (m - x)) - math.exp(-s * m))
        hi = (c / s) * (1 - math.exp(-s * m)) + (c / s) * (1 - np.exp(-s * (x - m)))
        return np.where(x <= m, lo, hi)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        c, s, m = self.const, self.scale, self.loc
        um = (c / s) * (1 - math.exp(-s * m))  # cdf at the peak
        lo = m + np.log(np.maximum(u * s / c + math.exp(-s * m), 1e-300)) / s
        hi = m - np.log(np.maximum(1 - (u - um) * s / c, 1e-300)) / s
        return np.where(u <= um, lo, hi)


def truncated_laplace_signal(loc: float, scale: float, basis: BasisSpec) -> SignalCoefficients:
    """Exact Haar coefficients of the truncated Laplace density.

    Every inner product is a closed-form difference of the density's CDF over
    dyadic blocks, so the coefficients carry no quadrature error.
    """
    if not basis.is_wavelet:
        raise ValueError("truncated_laplace requires the Haar basis")
    dist = TruncatedLaplace(loc, scale)
    out = np.empty(basis.size)
    out[0] = float(dist.cdf(1.0) - dist.cdf(0.0))  # integral of the density = 1
    for l in range(basis.max_index + 1):
        k = np.arange(2 ** l, dtype=float)
        a = k / 2 ** l
        mid = (k + 0.5) / 2 ** l
        b = (k + 1.0) / 2 ** l
        out[level_slice(l)] = 2.0 ** (l / 2.0) * (2 * dist.cdf(mid) - dist.cdf(a) - dist.cdf(b))
    # Lipschitz density, so the coefficients sit in a beta = 1 Hoelder ball
    return SignalCoefficients(basis, out, declared_beta=1.0)


def holder_spike_signal(beta: float, R: float, r: float, subsequence,
                        basis: BasisSpec) -> SignalCoefficients:
    """Counterexample signal for the thresholding prior without a fitted zone.

    Position m >= 1 of the flattened Haar array receives r*sqrt(log n_m / n_m)
    for the supplied increasing sequence (n_m), except that one reserved index
    per level (the last position, k_l = 2^l - 1) carries R * 2^{-l(beta+1/2)}
    to pin the signal's sup-norm self-similarity.  The scaling coefficient is
    zero.  ``subsequence`` is extended geometrically (last observed ratio)
    when shorter than the coefficient array; entries must exceed 1 and
    increase strictly.
    """
    if not basis.is_wavelet:
        raise ValueError("holder_spike requires the Haar basis")
    if beta <= 0 or R <= 0 or r <= 0:
        raise ValueError("beta, R, r must be positive")
    sub = np.asarray(subsequence, dtype=float)
    if sub.ndim != 1 or sub.size < 2 or np.any(sub <= 1.0) or np.any(np.diff(sub) <= 0):
        raise ValueError("subsequence must be strictly increasing with entries > 1")

    m_count = basis.size - 1
    log_n = np.empty(m_count)
    have = min(sub.size, m_count)
    log_n[:have] = np.log(sub[:have])
    if have < m_count:
        step = math.log(sub[-1] / sub[-2])
        log_n[have:] = log_n[have - 1] + step * np.arange(1, m_count - have + 1)

    # r * sqrt(log n_m / n_m) computed in log space to survive huge n_m
    coefs = r * np.exp(0.5 * (np.log(log_n) - log_n))
    out = np.empty(basis.size)
    out[0] = 0.0
    out[1:] = coefs
    for l in range(basis.max_index + 1):
        out[2 ** (l + 1) - 1] = R * 2.0 ** (-l * (beta + 0.5))
    cap = R * 2.0 ** (-(np.floor(np.log2(np.arange(1, basis.size))) * (beta + 0.5)))
    if np.any(np.abs(out[1:]) > cap + 1e-12):
        raise ValueError("subsequence grows too slowly for the Hoelder ball")
    return SignalCoefficients(basis, out, declared_beta=beta)


def custom_signal(values, basis: BasisSpec) -> SignalCoefficients:
    return SignalCoefficients(basis, np.asarray(values, dtype=float))


def synthesize_signal(recipe: str, basis: BasisSpec, **params) -> SignalCoefficients:
    """Dispatch by recipe name: power_sine(a, b), truncated_laplace(loc, scale),
    holder_spike(beta, R, r, subsequence), custom(values)."""
    if recipe == "power_sine":
        return power_sine_signal(params["a"], params["b"], basis)
    if recipe == "truncated_laplace":
        return truncated_laplace_signal(params["loc"], params["scale"], basis)
    if recipe == "holder_spike":
        return holder_spike_signal(params["beta"], params["R"], params["r"],
                                   params["subsequence"], basis)
    if recipe == "custom":
        return custom_signal(params["values"], basis)
    raise ValueError(f"unknown signal recipe {recipe!r}")


# ---------------------------------------------------------------------------
# self-similarity checks
# ---------------------------------------------------------------------------

def check_self_similar_l2(f: SignalCoefficients, beta: float, R: float, rho: float,
                          eps: float, N0: int, N_max: Optional[int] = None):
    """Block-energy self-similarity over the checked range [N0, N_max].

    Requires sum_{k=N}^{ceil(rho N)} f_k^2 >= eps * R * N^{-2 beta} for every
    N in the range (finite surrogate for the all-N condition; coefficients
    beyond the truncation count as zero).  Returns (ok, first_violating_N).
    """
    if rho <= 1 or not (0 < eps < 1) or N0 < 2:
        raise ValueError("need rho > 1, eps in (0,1), N0 >= 2")
    if f.basis.is_wavelet:
        raise ValueError("the block-energy condition applies to Fourier-type bases")
    K = f.basis.size
    if N_max is None:
        N_max = min(K, 10 ** 4)
    if N_max < N0:
        raise ValueError("N_max must be >= N0")
    sq = f.coeffs * f.coeffs
    css = np.concatenate(([0.0], np.cumsum(sq)))
    N = np.arange(N0, N_max + 1)
    hi = np.minimum(np.ceil(rho * N).astype(int), K)
    lo = np.minimum(N - 1, K)
    block = css[hi] - css[lo]
    thresh = eps * R * N.astype(float) ** (-2 * beta)
    bad = block < thresh
    if np.any(bad):
        return False, int(N[np.argmax(bad)])
    return True, None


def sup_selfsim_margin(f: SignalCoefficients, beta: float, j0: int,
                       j_hi: Optional[int] = None) -> float:
    """min over j0 <= j < j_hi of 2^{j beta} * ||K_j f - f||_inf, the largest
    eps certifying sup-norm self-similarity on the checked level range."""
    if not f.basis.is_wavelet:
        raise ValueError("sup-norm self-similarity requires the Haar basis")
    if j0 < 1:
        raise ValueError("j0 must be >= 1")
    J = f.basis.max_index
    if j_hi is None:
        j_hi = J
    best = math.inf
    for j in range(j0, j_hi):
        tail = f.coeffs.copy()
        tail[: 2 ** (j + 1)] = 0.0
        err = norm(tail, NormSpec.sup(), f.basis)
        best = min(best, 2.0 ** (j * beta) * err)
    return best


def check_self_similar_sup(f: SignalCoefficients, beta: float, R: float, eps: float,
                           j0: int, j_hi: Optional[int] = None) -> bool:
    """||K_j f - f||_inf >= eps * 2^{-j beta} for all j0 <= j < j_hi."""
    return sup_selfsim_margin(f, beta, j0, j_hi) >= eps


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def coeffs_to_csv(x: SignalCoefficients, path) -> None:
    """index,value for Fourier-type or level,position,value for Haar
    (the scaling coefficient is written as level -1)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if x.basis.is_wavelet:
            w.writerow(["level", "position", "value"])
            lev = wavelet_levels(x.basis)
            pos = np.arange(x.basis.size) - 2 ** np.maximum(lev, 0) * (lev >= 0)
            for l, p, v in zip(lev, pos, x.coeffs):
                w.writerow([l, p, repr(float(v))])
        else:
            w.writerow(["index", "value"])
            for i, v in enumerate(x.coeffs, start=1):
                w.writerow([i, repr(float(v))])


def coeffs_to_json(x: SignalCoefficients, n: Optional[float] = None,
                   seed: Optional[int] = None) -> str:
    env = {
        "schema": COEFFS_SCHEMA,
        "basis": {"kind": x.basis.kind, "max_index": x.basis.max_index},
        "coeffs": [float(v) for v in x.coeffs],
    }
    if n is not None:
        env["n"] = float(n)
    if seed is not None:
        env["seed"] = int(seed)
    return json.dumps(env)


def coeffs_from_json(text: str):
    """Returns (SignalCoefficients, n, seed); n/seed are None when absent."""
    env = json.loads(text)
    if env.get("schema") != COEFFS_SCHEMA:
        raise ValueError(f"unsupported schema {env.get('schema')!r}")
    basis = BasisSpec(env["basis"]["kind"], int(env["basis"]["max_index"]))
    sc = SignalCoefficients(basis, np.asarray(env["coeffs"], dtype=float))
    return sc, env.get("n"), env.get("seed")


def evaluation_to_csv(grid, values, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, v in zip(grid, values):
            w.writerow([repr(float(x)), repr(float(v))])
