"""Quantile calibration of credible radii and every credible-set geometry:
plain balls in H(delta), l2, M(w) and sup norms, the smoothness-intersected
variants, the two-stage multiscale band, and pointwise bands.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import seqmodel
from .seqmodel import (
    BasisSpec,
    NormSpec,
    NoisyObservation,
    WeightSequence,
    haar_cell_values,
    norm,
    wavelet_levels,
)
from .gaussprior import PosteriorDrawSet
from .slabspike import ThresholdEstimate

L2_BALL = "L2Ball"
H_DELTA_BALL = "HDeltaBall"
H_DELTA_EB = "HDeltaIntersectEB"
H_DELTA_HB = "HDeltaIntersectHB"
MULTISCALE_BALL = "MultiscaleBall"
MULTISCALE_BAND = "MultiscaleBand"
SUP_BALL = "SupBall"
POINTWISE_BAND = "PointwiseBand"

_VARIANTS = (L2_BALL, H_DELTA_BALL, H_DELTA_EB, H_DELTA_HB,
             MULTISCALE_BALL, MULTISCALE_BAND, SUP_BALL, POINTWISE_BAND)

CENTER_SHIFT = "shift_estimator_Y"
CENTER_POSTERIOR_MEAN = "posterior_mean"
CENTER_EFFICIENT = "efficient_estimator"

DEFAULT_DELTA = 2.1
# Undersmoothing eps_n = SMOOTH_EPS_NUM / log n with radius constant SMOOTH_C.
# The theory requires SMOOTH_C > 1/SMOOTH_EPS_NUM; 1 > 1/4 holds with margin,
# and eps_n = 4/log n keeps the data-driven exponent below the true
# smoothness against the upward spread of the likelihood maximizer.
SMOOTH_C = 1.0
SMOOTH_EPS_NUM = 4.0
HB_SHIFT_C = 1.0  # beta_hat = alpha_median - (HB_SHIFT_C + 1)/log n


@dataclass(frozen=True)
class CredibleSetSpec:
    """Declares geometry variant, significance, and centering rule."""

    variant: str
    gamma: float
    center_rule: str = CENTER_SHIFT
    delta: float = DEFAULT_DELTA
    weights: Optional[WeightSequence] = None
    vn_power: float = 0.25          # v_n = (log n)^vn_power for the band width
    smooth_C: float = SMOOTH_C
    smooth_eps_num: float = SMOOTH_EPS_NUM
    hb_Mn: Optional[float] = None   # default log log n
    grid: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown credible set variant {self.variant!r}")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0,1)")
        if self.variant in (MULTISCALE_BALL, MULTISCALE_BAND) and self.weights is None:
            raise ValueError(f"{self.variant} requires a weight sequence")
        if self.variant == POINTWISE_BAND and self.grid is None:
            raise ValueError("PointwiseBand requires an evaluation grid")


@dataclass(frozen=True)
class PosteriorByproducts:
    """Fitted quantities a geometry may need besides the draws."""

    obs: NoisyObservation
    posterior_mean: Optional[np.ndarray] = None
    alpha_hat: Optional[float] = None
    alpha_median: Optional[float] = None
    threshold: Optional[ThresholdEstimate] = None
    efficient_center: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SecondConstraint:
    norm_spec: NormSpec
    center: np.ndarray
    radius: float
    label: str


@dataclass(frozen=True)
class BandConstraint:
    center: np.ndarray       # pi_med(Y) coefficients
    sigma: float
    support: np.ndarray      # boolean mask of selected coefficients


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    binding_constraint: Optional[str]
    distances: dict


@dataclass(frozen=True)
class CalibratedCredibleSet:
    spec: CredibleSetSpec
    basis: BasisSpec
    center: np.ndarray
    radius: float
    primary_norm: NormSpec
    second: Optional[SecondConstraint] = None
    band: Optional[BandConstraint] = None
    pointwise_lo: Optional[np.ndarray] = None
    pointwise_hi: Optional[np.ndarray] = None

    # -- membership ---------------------------------------------------------

    def primary_distance(self, f):
        return norm(np.asarray(f) - self.center, self.primary_norm, self.basis)

    def membership(self, draws) -> np.ndarray:
        """Vectorized membership for a draw matrix (rows are draws)."""
        arr = np.atleast_2d(np.asarray(draws, dtype=float))
        ok = self.primary_distance(arr) <= self.radius
        if self.second is not None:
            d2 = norm(arr - self.second.center, self.second.norm_spec, self.basis)
            ok &= d2 <= self.second.radius
        if self.band is not None:
            dsup = norm(arr - self.band.center, NormSpec.sup(), self.basis)
            ok &= dsup <= self.band.sigma
        if self.spec.variant == POINTWISE_BAND:
            vals = seqmodel.evaluate_function(arr, self.spec.grid, self.basis)
            ok &= np.all((vals >= self.pointwise_lo) & (vals <= self.pointwise_hi), axis=-1)
        return ok if np.ndim(draws) > 1 else bool(ok[0])

    def contains(self, f) -> MembershipReport:
        f = np.asarray(f, dtype=float)
        distances = {}
        d = float(self.primary_distance(f))
        distances["primary"] = d
        if d > self.radius:
            return MembershipReport(False, "primary", distances)
        if self.second is not None:
            d2 = float(norm(f - self.second.center, self.second.norm_spec, self.basis))
            distances[self.second.label] = d2
            if d2 > self.second.radius:
                return MembershipReport(False, self.second.label, distances)
        if self.band is not None:
            dsup = float(norm(f - self.band.center, NormSpec.sup(), self.basis))
            distances["band"] = dsup
            if dsup > self.band.sigma:
                return MembershipReport(False, "band", distances)
        if self.spec.variant == POINTWISE_BAND:
            vals = seqmodel.evaluate_function(f, self.spec.grid, self.basis)
            inside = np.all((vals >= self.pointwise_lo) & (vals <= self.pointwise_hi))
            distances["pointwise"] = float(np.max(np.maximum(self.pointwise_lo - vals,
                                                             vals - self.pointwise_hi)))
            if not inside:
                return MembershipReport(False, "pointwise", distances)
        return MembershipReport(True, None, distances)

    def to_json(self) -> str:
        out = {
            "schema": "credlab-credset-v1",
            "variant": self.spec.variant,
            "gamma": self.spec.gamma,
            "radius": self.radius,
        }
        if self.second is not None:
            out["second_constraint"] = {
                "label": self.second.label,
                "norm": {"kind": self.second.norm_spec.kind,
                         "s": self.second.norm_spec.s,
                         "delta": self.second.norm_spec.delta},
                "radius": self.second.radius,
            }
        if self.band is not None:
            out["sigma"] = self.band.sigma
            out["support"] = [int(i) for i in np.flatnonzero(self.band.support)]
        return json.dumps(out)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

def calibrate_radius(draws, center, norm_spec: NormSpec, gamma: float,
                     basis: Optional[BasisSpec] = None) -> float:
    """Radius as the ceil((1-gamma) M)-th order statistic of the draw-center
    distances (lower empirical quantile convention)."""
    arr = draws.draws if isinstance(draws, PosteriorDrawSet) else np.asarray(draws)
    if arr.shape[0] < 20:
        raise ValueError("need at least 20 draws to calibrate a radius")
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0,1)")
    d = norm(arr - np.asarray(center), norm_spec, basis)
    r = math.ceil((1.0 - gamma) * arr.shape[0])
    return float(np.sort(d)[r - 1])


def sigma_band_width(support: np.ndarray, basis: BasisSpec, n: float, vn: float,
                     j_cap: Optional[int] = None) -> float:
    """Data-driven band width: vn sqrt(log n / n) times the sup over x of the
    sum of |psi_lk(x)| over the selected coefficients (levels <= j_cap).

    Exact for Haar: |psi| is constant on dyadic cells one level finer, so the
    sup over cell midpoints is the true sup.  Empty support gives zero.
    """
    lev = wavelet_levels(basis)
    if j_cap is not None:
        support = support & (lev <= j_cap)
    if not np.any(support):
        return 0.0
    G = basis.max_index + 1
    cells = np.zeros(2 ** G)
    if support[0]:
        cells += 1.0  # scaling function is constant 1
    for l in range(basis.max_index + 1):
        sel = support[2 ** l: 2 ** (l + 1)]
        if np.any(sel):
            width = 2 ** (G - l)
            cells += np.repeat(sel.astype(float) * 2.0 ** (l / 2.0), width)
    return float(vn * math.sqrt(math.log(n) / n) * np.max(cells))


def pointwise_band(draws, basis: BasisSpec, grid, gamma: float):
    """Per-point empirical (gamma/2, 1-gamma/2) quantiles of draw curves."""
    arr = draws.draws if isinstance(draws, PosteriorDrawSet) else np.asarray(draws)
    vals = seqmodel.evaluate_function(arr, np.asarray(grid, dtype=float), basis)
    lo = np.quantile(vals, gamma / 2.0, axis=0)
    hi = np.quantile(vals, 1.0 - gamma / 2.0, axis=0)
    return lo, hi


def build_set(spec: CredibleSetSpec, draws, byproducts: PosteriorByproducts) -> CalibratedCredibleSet:
    """Assemble the declared geometry.

    The primary radius is always calibrated before intersecting, so a plain
    ball and its intersected variant share the same primary radius.
    """
    obs = byproducts.obs
    basis = obs.basis
    arr = draws.draws if isinstance(draws, PosteriorDrawSet) else np.asarray(draws)
    n = obs.n
    logn = math.log(n)

    def center_for(rule):
        if rule == CENTER_SHIFT:
            return obs.y
        if rule == CENTER_POSTERIOR_MEAN:
            if byproducts.posterior_mean is None:
                raise ValueError("posterior_mean byproduct missing")
            return byproducts.posterior_mean
        if rule == CENTER_EFFICIENT:
            if byproducts.efficient_center is None:
                raise ValueError("efficient_center byproduct missing")
            return byproducts.efficient_center
        raise ValueError(f"unknown center rule {rule!r}")

    variant = spec.variant
    if variant == L2_BALL:
        center = center_for(spec.center_rule if spec.center_rule != CENTER_SHIFT
                            else CENTER_POSTERIOR_MEAN)
        pnorm = NormSpec.l2()
        radius = calibrate_radius(arr, center, pnorm, spec.gamma, basis)
        return CalibratedCredibleSet(spec, basis, center, radius, pnorm)

    if variant in (H_DELTA_BALL, H_DELTA_EB, H_DELTA_HB):
        center = center_for(spec.center_rule)
        pnorm = NormSpec.h_delta(spec.delta)
        radius = calibrate_radius(arr, center, pnorm, spec.gamma, basis)
        second = None
        if variant == H_DELTA_EB:
            if byproducts.alpha_hat is None or byproducts.posterior_mean is None:
                raise ValueError("HDeltaIntersectEB needs alpha_hat and posterior_mean")
            eps_n = min(spec.smooth_eps_num / logn, byproducts.alpha_hat / 2.0)
            second = SecondConstraint(
                NormSpec.sobolev_log(byproducts.alpha_hat - eps_n, 0.0),
                byproducts.posterior_mean, spec.smooth_C * math.sqrt(logn), "smoothness")
        elif variant == H_DELTA_HB:
            if byproducts.alpha_median is None or byproducts.posterior_mean is None:
                raise ValueError("HDeltaIntersectHB needs alpha_median and posterior_mean")
            beta_hat = byproducts.alpha_median - (HB_SHIFT_C + 1.0) / logn
            Mn = spec.hb_Mn if spec.hb_Mn is not None else math.log(logn)
            second = SecondConstraint(NormSpec.sobolev_log(beta_hat, 0.0),
                                      byproducts.posterior_mean,
                                      Mn * math.sqrt(logn), "smoothness")
        return CalibratedCredibleSet(spec, basis, center, radius, pnorm, second=second)

    if variant == MULTISCALE_BALL:
        center = center_for(spec.center_rule)
        pnorm = NormSpec.multiscale(spec.weights)
        radius = calibrate_radius(arr, center, pnorm, spec.gamma, basis)
        return CalibratedCredibleSet(spec, basis, center, radius, pnorm)

    if variant == MULTISCALE_BAND:
        if byproducts.threshold is None:
            raise ValueError("MultiscaleBand needs the posterior-median threshold")
        center = center_for(spec.center_rule)
        pnorm = NormSpec.multiscale(spec.weights)
        radius = calibrate_radius(arr, center, pnorm, spec.gamma, basis)
        est = byproducts.threshold
        pi_med = np.where(est.support, obs.y, 0.0)
        jn = int(math.floor(math.log2(n)))
        vn = logn ** spec.vn_power
        sigma = sigma_band_width(est.support, basis, n, vn, j_cap=jn)
        return CalibratedCredibleSet(spec, basis, center, radius, pnorm,
                                     band=BandConstraint(pi_med, sigma, est.support))

    if variant == SUP_BALL:
        center = center_for(spec.center_rule)
        pnorm = NormSpec.sup()
        radius = calibrate_radius(arr, center, pnorm, spec.gamma, basis)
        return CalibratedCredibleSet(spec, basis, center, radius, pnorm)

    if variant == POINTWISE_BAND:
        center = center_for(spec.center_rule if spec.center_rule != CENTER_SHIFT
                            else CENTER_POSTERIOR_MEAN)
        lo, hi = pointwise_band(arr, basis, spec.grid, spec.gamma)
        return CalibratedCredibleSet(spec, basis, center, float("nan"),
                                     NormSpec.sup(), pointwise_lo=lo, pointwise_hi=hi)

    raise ValueError(f"unhandled variant {variant!r}")


def contains(cs: CalibratedCredibleSet, f) -> MembershipReport:
    return cs.contains(f)


def credibility(cs: CalibratedCredibleSet, fresh_draws) -> float:
    """Fraction of fresh draws inside the set; fresh draws must be independent
    of the calibration draws for an unbiased reading."""
    arr = fresh_draws.draws if isinstance(fresh_draws, PosteriorDrawSet) else np.asarray(fresh_draws)
    return float(np.mean(cs.membership(arr)))


def diameter_estimate(cs: CalibratedCredibleSet, draws, norm_spec: NormSpec,
                      max_members: int = 500, seed: int = 0) -> float:
    """Maximum pairwise distance among member draws (a lower bound on the set
    diameter), subsampled for the quadratic scan."""
    arr = draws.draws if isinstance(draws, PosteriorDrawSet) else np.asarray(draws)
    members = arr[cs.membership(arr)]
    if members.shape[0] < 2:
        raise ValueError("need at least two member draws")
    if norm_spec.kind in ("multiscale", "sup"):
        max_members = min(max_members, 200)
    if members.shape[0] > max_members:
        rng = np.random.default_rng(seed)
        members = members[rng.choice(members.shape[0], max_members, replace=False)]

    if norm_spec.kind in ("l2", "sobolev_log"):
        if norm_spec.kind == "l2":
            w = np.ones(members.shape[1])
        else:
            w = seqmodel.sobolev_log_weights(members.shape[1], norm_spec.s, norm_spec.delta)
        U = members * np.sqrt(w)
        sq = (U * U).sum(axis=1)
        G = U @ U.T
        d2 = sq[:, None] + sq[None, :] - 2.0 * G
        return float(math.sqrt(max(d2.max(), 0.0)))

    # max-type norms: transform once so pairwise distances are plain max-abs
    if norm_spec.kind == "sup":
        feats = haar_cell_values(members, cs.basis)
    else:
        feats = members / norm_spec.weights.per_position(cs.basis)
    best = 0.0
    for i in range(feats.shape[0] - 1):
        best = max(best, float(np.max(np.abs(feats[i + 1:] - feats[i]))))
    return best
