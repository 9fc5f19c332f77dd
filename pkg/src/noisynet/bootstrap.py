"""Variance-matching bootstrap and the joint covariance of subgraph densities.

The limiting covariance of sqrt(N)(C_hat - C) over several patterns splits as
V = V1 + V2 + V3:

* V1, the variance of the leading linear term S_V, is estimated by
  resampling Y-dagger from Y with keep / set-to-one / set-to-zero
  probabilities (gamma1, gamma2) chosen so the conditional variance of
  Y-dagger equals Y(beta - alpha) + alpha(1 - beta);
* V2 = Delta G Sigma G' Delta' is the error propagated from estimated rates;
* V3 = (H G' Delta' + Delta G H') / 2 is the cross term between the two.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .densities import DensityEstimate, c_hat, kappa3, phi_matrices
from .errors import DegenerateDenominator, NegativeVariance, NoValidGamma, ShapeMismatch, ZeroTwoStars
from .graph import AdjacencyMatrix, as_matrix
from .moments import (DENOM_TOL, MomentTriple, RateEstimate, estimate, kappas, sigma_matrix,
                      z_quantile)
from .patterns import SubgraphPattern, pattern_sum

DEFAULT_B = 500
GAMMA_TOL = 1e-12
NEG_VAR_TOL = 1e-8
UNSTABLE_KAPPA3 = 0.1
# plug-in rates at or below zero make the target conditional variance
# non-positive; the resampler then uses rates projected onto [RATE_FLOOR, 1 - RATE_FLOOR]
RATE_FLOOR = 1e-6


# resampling probabilities

@dataclass(frozen=True)
class GammaPair:
    gamma1: float
    gamma2: float

    def residuals(self, alpha: float, beta: float) -> tuple[float, float]:
        g1, g2 = self.gamma1, self.gamma2
        return g1 * (1 - g1 - 2 * g2) - (beta - alpha), g2 * (1 - g2) - alpha * (1 - beta)


def solve_gamma(alpha: float, beta: float) -> GammaPair:
    """Smallest admissible (gamma1, gamma2) solving both variance-matching equations."""
    disc2 = 1 - 4 * alpha * (1 - beta)
    if disc2 < 0:
        raise NoValidGamma(alpha, beta, "4 alpha (1 - beta) exceeds 1")
    g2 = (1 - math.sqrt(disc2)) / 2
    if g2 <= 0:
        raise NoValidGamma(alpha, beta, "gamma2 must be positive (alpha(1 - beta) = 0)")
    b = 1 - 2 * g2
    disc1 = b * b - 4 * (beta - alpha)
    if disc1 < 0:
        raise NoValidGamma(alpha, beta, f"gamma1 quadratic has no real root (discriminant {disc1:.3g})")
    sq = math.sqrt(disc1)
    for g1 in sorted(((b - sq) / 2, (b + sq) / 2)):
        if g1 <= 0 or g1 + g2 >= 1:
            continue
        pair = GammaPair(g1, g2)
        if max(abs(r) for r in pair.residuals(alpha, beta)) <= GAMMA_TOL:
            return pair
    raise NoValidGamma(alpha, beta, "no root satisfies gamma1 > 0, gamma1 + gamma2 < 1")


def sample_dagger(y, g: GammaPair, rng_seed) -> AdjacencyMatrix:
    """Per pair: keep Y with prob gamma1, set to 1 with prob gamma2, else 0."""
    y = as_matrix(y)
    p = y.shape[0]
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    iu = np.triu_indices(p, 1)
    u = rng.random(iu[0].shape[0])
    keep = u < g.gamma1
    one = (u >= g.gamma1) & (u < g.gamma1 + g.gamma2)
    up = np.where(keep, y[iu], one).astype(np.uint8)
    return AdjacencyMatrix.from_upper(p, up)


# bootstrap statistic

def _offdiag(m) -> np.ndarray:
    m = np.array(m, dtype=float)
    np.fill_diagonal(m, 0.0)
    return m


def _replaced_sum(pattern: SubgraphPattern, mats, j: int, repl: np.ndarray) -> float:
    swapped = list(mats)
    swapped[j] = repl
    return pattern_sum(pattern, swapped)


def _signed_slot_sum(pattern: SubgraphPattern, mats, repl: np.ndarray) -> float:
    """sum_j (-1)^(1 - tau_j) * pattern_sum with slot j replaced by ``repl``."""
    total = 0.0
    for j, tau in enumerate(pattern.taus):
        total += (1.0 if tau else -1.0) * _replaced_sum(pattern, mats, j, repl)
    return total


def s_dagger(y, ydag, pattern: SubgraphPattern, alpha: float, beta: float, g: GammaPair) -> float:
    """Bootstrap replicate of the linear term S_V, driven by Y-dagger - gamma1 Y - gamma2."""
    k3 = kappa3(alpha, beta)
    y = as_matrix(y)
    p = y.shape[0]
    n = p * (p - 1) / 2
    resid = _offdiag(np.asarray(as_matrix(ydag), dtype=float) - g.gamma1 * y - g.gamma2)
    mats = phi_matrices(y, pattern, alpha, beta)
    return math.sqrt(n) / k3**pattern.k * _signed_slot_sum(pattern, mats, resid) / pattern.cardinality(p)


def solve_gamma_projected(alpha: float, beta: float) -> tuple[GammaPair, bool]:
    """solve_gamma, retrying with rates clipped away from 0 and 1; the flag reports a retry."""
    try:
        return solve_gamma(alpha, beta), False
    except NoValidGamma:
        a = min(max(alpha, RATE_FLOOR), 1 - RATE_FLOOR)
        b = min(max(beta, RATE_FLOOR), 1 - RATE_FLOOR)
        if (a, b) == (alpha, beta):
            raise
        return solve_gamma(a, b), True


def bootstrap_samples(y, patterns, alpha: float, beta: float, B: int = DEFAULT_B, rng_seed=0,
                      gamma: GammaPair | None = None) -> np.ndarray:
    """B x m array of bootstrap statistics, replicate i seeded from (rng_seed, i).

    ``gamma`` overrides the resampling probabilities solved from (alpha, beta).
    """
    if B < 1:
        raise ValueError("B must be positive")
    g = gamma if gamma is not None else solve_gamma(alpha, beta)
    y = as_matrix(y)
    p = y.shape[0]
    k3 = kappa3(alpha, beta)
    root_n = math.sqrt(p * (p - 1) / 2)
    iu = np.triu_indices(p, 1)
    y_up = y[iu].astype(float)
    prepared = [(pat, phi_matrices(y, pat, alpha, beta), root_n / k3**pat.k / pat.cardinality(p)) for pat in patterns]
    seq = np.random.SeedSequence(rng_seed)
    out = np.empty((B, len(patterns)))
    resid = np.zeros((p, p))
    for i in range(B):
        rng = np.random.default_rng(np.random.SeedSequence(seq.entropy, spawn_key=(i,)))
        u = rng.random(y_up.shape[0])
        ydag = np.where(u < g.gamma1, y_up, (u < g.gamma1 + g.gamma2).astype(float))
        r = ydag - g.gamma1 * y_up - g.gamma2
        resid[iu] = r
        resid.T[iu] = r
        for q, (pat, mats, scale) in enumerate(prepared):
            out[i, q] = scale * _signed_slot_sum(pat, mats, resid)
    return out


def bootstrap_v1(y, patterns, alpha: float, beta: float, B: int = DEFAULT_B, rng_seed=0,
                 dump_csv=None, gamma: GammaPair | None = None) -> np.ndarray:
    """Sample covariance (divisor B - 1) of the bootstrap statistics."""
    if B < 2:
        raise ValueError("B must be at least 2 for a sample covariance")
    samples = bootstrap_samples(y, patterns, alpha, beta, B, rng_seed, gamma)
    if dump_csv is not None:
        with Path(dump_csv).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate"] + [pat.name for pat in patterns])
            for i, row in enumerate(samples):
                w.writerow([i] + [repr(float(v)) for v in row])
    centred = samples - samples.mean(axis=0)
    return centred.T @ centred / (B - 1)


# analytic plug-ins

def leave_one_out(y, pattern: SubgraphPattern, alpha: float, beta: float) -> np.ndarray:
    """L_j = |V|^-1 sum_V prod_{l != j} phi_l(Y), one entry per slot."""
    y = as_matrix(y)
    p = y.shape[0]
    mats = phi_matrices(y, pattern, alpha, beta)
    ones = _offdiag(np.ones((p, p)))
    card = pattern.cardinality(p)
    return np.array([_replaced_sum(pattern, mats, j, ones) / card for j in range(pattern.k)])


def delta_hats(y, pattern: SubgraphPattern, alpha: float, beta: float) -> tuple[float, float]:
    """Sensitivities of C_hat to the plugged-in alpha and beta."""
    k3 = kappa3(alpha, beta)
    c = c_hat(y, pattern, alpha, beta).c_hat
    loo = leave_one_out(y, pattern, alpha, beta)
    taus = np.array(pattern.taus)
    base = pattern.k * c / k3
    return base - loo[taus == 1].sum() / k3**pattern.k, base - loo[taus == 0].sum() / k3**pattern.k


def h_hat(y, pattern: SubgraphPattern, alpha: float, beta: float) -> np.ndarray:
    """Plug-in h_V: twice the covariance of the moment statistics with S_V."""
    a, b = alpha, beta
    k1, k2, k3, k4 = kappas(a, b)
    kappa3(a, b)  # raises when 1 - alpha - beta is ~0
    k = pattern.k
    first = np.array([
        6 * k4,
        3 * (k4**2 - k1 - k2),
        2 * (k4 * (-6 * a * b + 3 * k3**2 - 4 * k3) + (1 - a) * (b - 2 * a)),
    ])
    second = np.array([6 * k1, 3 * k1 * (1 - 2 * a), 2 * k1 * (1 - a) * (1 - 3 * a)])
    signs = np.array([1.0 if t else -1.0 for t in pattern.taus])
    flipped = 0.0
    for j, s in enumerate(signs):
        taus = list(pattern.taus)
        taus[j] = 1
        flipped += s * c_hat(y, pattern.with_taus(taus), a, b).c_hat
    loo = leave_one_out(y, pattern, a, b)
    return first * flipped / 3 + second * float(signs @ loo) / (3 * k3**k)


def g_matrix(alpha: float, beta: float, delta: float, mode: str) -> np.ndarray:
    """2x3 Jacobian of (alpha_tilde, beta_tilde) with respect to (u1, u2, u3)."""
    k1, k2, k3, _ = kappas(alpha, beta)
    g = np.zeros((2, 3))
    if mode == "both_known":
        return g
    if abs(k3) <= DENOM_TOL:
        raise DegenerateDenominator("1 - alpha - beta", k3)
    if mode in ("alpha_known", "both_unknown") and abs(delta) <= DENOM_TOL:
        raise DegenerateDenominator("delta", delta)
    if mode in ("beta_known", "both_unknown") and abs(1 - delta) <= DENOM_TOL:
        raise DegenerateDenominator("1 - delta", 1 - delta)
    a, b, d = alpha, beta, delta
    if mode == "alpha_known":
        g[1] = [(k1 - k2) / (d * k3**2), 1 / (d * k3), 0.0]
    elif mode == "beta_known":
        g[0] = [(k1 - k2) / ((1 - d) * k3**2), 1 / ((1 - d) * k3), 0.0]
    elif mode == "both_unknown":
        ra, rb = (1 - d) * k3**2, d * k3**2
        g[0] = [((1 - 2 * b) * a + b * b) / ra, (a - 2 * b) / ra, 1 / ra]
        g[1] = [-((1 - 2 * a) * b + a * a) / rb, (b - 2 * a + 1) / rb, -1 / rb]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return g


@dataclass
class JointCovariance:
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    v_total: np.ndarray
    delta_hat: np.ndarray
    h_hat: np.ndarray
    g_hat: np.ndarray
    sigma_hat: np.ndarray
    bootstrap_B: int = 0

    @property
    def m(self) -> int:
        return self.v1.shape[0]


def assemble_vp(v1, delta_hat, g, sigma, h, bootstrap_B: int = 0) -> JointCovariance:
    v1 = np.atleast_2d(np.asarray(v1, dtype=float))
    dl = np.atleast_2d(np.asarray(delta_hat, dtype=float))
    g = np.asarray(g, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    h = np.atleast_2d(np.asarray(h, dtype=float))
    m = v1.shape[0]
    if v1.shape != (m, m) or dl.shape != (m, 2) or g.shape != (2, 3) or sigma.shape != (3, 3) or h.shape != (m, 3):
        raise ShapeMismatch(
            f"shapes v1 {v1.shape}, delta {dl.shape}, G {g.shape}, Sigma {sigma.shape}, H {h.shape} are not conformable")
    dg = dl @ g
    v2 = dg @ sigma @ dg.T
    v3 = 0.5 * (h @ dg.T + dg @ h.T)
    total = v1 + v2 + v3
    total = (total + total.T) / 2
    return JointCovariance(v1, v2, v3, total, dl, h, g, sigma, bootstrap_B)


# intervals

@dataclass
class Interval:
    estimate: float
    lower: float
    upper: float
    se: float

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass
class JointIntervals:
    level: float
    densities: list[Interval]
    counts: list[Interval | None]
    clustering: Interval | None
    flags: list[str] = field(default_factory=list)


_COUNT_DIV = {"two_star": 2, "triangle": 6}


def _floor_variances(v: np.ndarray, flags: list[str], strict: bool) -> np.ndarray:
    v = v.copy()
    d = np.diag(v).copy()
    if np.any(d < -NEG_VAR_TOL):
        if strict:
            raise NegativeVariance(f"assembled variances {d} contain values below {-NEG_VAR_TOL}")
        warnings.warn(f"negative assembled variance(s) {d[d < 0]} floored at 0", RuntimeWarning, stacklevel=3)
        flags.append("negative_variance_floored")
    elif np.any(d < 0):
        flags.append("negative_variance_clamped")
    np.fill_diagonal(v, np.maximum(d, 0.0))
    return v


def joint_cis(estimates: list[DensityEstimate], vp: JointCovariance, p: int, level: float = 0.95,
              strict: bool = False) -> JointIntervals:
    """Wald intervals for each density and count, and a delta-method interval for clustering.

    Negative diagonal entries of V (possible in small samples through the
    cross term) are floored at zero and flagged; ``strict=True`` raises
    :class:`NegativeVariance` below -1e-8 instead.
    """
    if vp.m != len(estimates):
        raise ShapeMismatch(f"{len(estimates)} estimates but covariance is {vp.m}x{vp.m}")
    flags: list[str] = []
    v = _floor_variances(vp.v_total, flags, strict) / (p * (p - 1) / 2)
    z = z_quantile(level)
    dens, counts = [], []
    for q, est in enumerate(estimates):
        se = math.sqrt(v[q, q])
        dens.append(Interval(est.c_hat, est.c_hat - z * se, est.c_hat + z * se, se))
        div = _COUNT_DIV.get(est.pattern.kind)
        if div is None:
            counts.append(None)
        else:
            scale = p * (p - 1) * (p - 2) / div
            c = est.c_hat * scale
            counts.append(Interval(c, c - z * se * scale, c + z * se * scale, se * scale))
    if any(1 - e.alpha_used - e.beta_used < UNSTABLE_KAPPA3 for e in estimates):
        flags.append("unstable_kappa3")
    clustering = None
    kinds = [e.pattern.kind for e in estimates]
    if "two_star" in kinds and "triangle" in kinds:
        i2, i3 = kinds.index("two_star"), kinds.index("triangle")
        c2, c3 = estimates[i2].c_hat, estimates[i3].c_hat
        if c2 == 0:
            raise ZeroTwoStars("estimated two-star density is zero")
        grad = np.array([-c3 / c2**2, 1 / c2])
        block = v[np.ix_([i2, i3], [i2, i3])]
        var = float(grad @ block @ grad)
        if var < 0:
            flags.append("negative_variance_floored")
            var = 0.0
        se = math.sqrt(var)
        gam = c3 / c2
        clustering = Interval(gam, gam - z * se, gam + z * se, se)
    return JointIntervals(level, dens, counts, clustering, flags)


# full pipeline

@dataclass
class SubgraphReport:
    rates: RateEstimate
    estimates: list[DensityEstimate]
    covariance: JointCovariance | None
    intervals: JointIntervals | None
    flags: list[str] = field(default_factory=list)


def analyze(replicates, patterns: list[SubgraphPattern], mode: str, alpha: float | None = None,
            beta: float | None = None, B: int = DEFAULT_B, rng_seed=0, level: float = 0.95,
            dump_csv=None, **fixed_point) -> SubgraphReport:
    """Rates, densities, joint covariance and intervals from 1 to 3 replicates.

    Densities are computed on the first replicate; the others only feed the
    rate estimators.  ``B=0`` skips the bootstrap (no density intervals).
    """
    reps = [as_matrix(r) for r in replicates]
    m = MomentTriple.from_replicates(reps)
    rates = estimate(m, mode, alpha=alpha, beta=beta, level=level, **fixed_point)
    a_t, b_t = rates.alpha_hat, rates.beta_hat
    y = reps[0]
    p = y.shape[0]
    ests = [c_hat(y, pat, a_t, b_t) for pat in patterns]
    flags = list(rates.flags)
    if 1 - a_t - b_t < UNSTABLE_KAPPA3:
        flags.append("unstable_kappa3")
    if B == 0 or not patterns:
        return SubgraphReport(rates, ests, None, None, flags)
    g_pair, projected = solve_gamma_projected(a_t, b_t)
    if projected:
        flags.append("bootstrap_rates_projected")
    v1 = bootstrap_v1(y, patterns, a_t, b_t, B, rng_seed, dump_csv, g_pair)
    dl = np.array([delta_hats(y, pat, a_t, b_t) for pat in patterns])
    hh = np.array([h_hat(y, pat, a_t, b_t) for pat in patterns])
    g = g_matrix(a_t, b_t, rates.delta_hat, mode)
    sig = sigma_matrix(a_t, b_t, rates.delta_hat)
    vp = assemble_vp(v1, dl, g, sig, hh, B)
    cis = joint_cis(ests, vp, p, level)
    flags += [f for f in cis.flags if f not in flags]
    return SubgraphReport(rates, ests, vp, cis, flags)
