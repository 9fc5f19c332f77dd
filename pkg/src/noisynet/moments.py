"""Moment statistics from noisy replicates and the (alpha, beta, delta) estimators.

Three population moments identify the model when the true density is delta::

    u1 = (1-d) a + d (1-b)
    u2 = (1-d) a(1-a) + d b(1-b)
    u3 = (1-d) a(1-a)^2 + d b^2(1-b)

One replicate gives u1, two give u2, three give u3.  With one rate known two
moments suffice (closed form); with both unknown a fixed-point iteration on
alpha solves the three-equation system.  All covariances returned here are for
sqrt(N)-scaled errors, N = p(p-1)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import DegenerateDenominator, DimensionMismatch, NoConvergence
from .graph import as_matrix, edge_density

DENOM_TOL = 1e-10
ALPHA0 = 0.2
TOL = 1e-4
MAX_ITER = 500

MODES = ("alpha_known", "beta_known", "both_unknown", "both_known")


def z_quantile(level: float) -> float:
    """Two-sided standard-normal critical value, e.g. 1.959964 at level 0.95."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return NormalDist().inv_cdf((1.0 + level) / 2.0)


def _check(value: float, what: str) -> float:
    if abs(value) <= DENOM_TOL:
        raise DegenerateDenominator(what, value)
    return value


def _same_shape(*ys) -> list[np.ndarray]:
    mats = [as_matrix(y) for y in ys]
    if any(m.shape != mats[0].shape for m in mats[1:]):
        raise DimensionMismatch(f"replicates differ in size: {[m.shape for m in mats]}")
    return mats


def _upper(m: np.ndarray) -> np.ndarray:
    return m[np.triu_indices(m.shape[0], 1)].astype(np.int64)


# moment statistics

def u1_hat(y) -> float:
    return edge_density(y)


def u2_hat(y, ystar) -> float:
    a, b = _same_shape(y, ystar)
    p = a.shape[0]
    return float(np.abs(_upper(b) - _upper(a)).sum()) / (p * (p - 1))


def u3_hat(y, ystar, ystarstar) -> float:
    a, b, c = _same_shape(y, ystar, ystarstar)
    p = a.shape[0]
    d = _upper(c) - 2 * _upper(b) + _upper(a)
    hits = np.count_nonzero((d == 1) | (d == -2))
    return 2.0 * hits / (3.0 * p * (p - 1))


@dataclass(frozen=True)
class MomentTriple:
    u1: float
    u2: float | None = None
    u3: float | None = None
    n_pairs: int = 1

    def __post_init__(self):
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be at least 1")
        for name in ("u1", "u2", "u3"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def from_replicates(cls, replicates) -> "MomentTriple":
        """Moments from 1, 2 or 3 replicates, in the order Y, Y*, Y**."""
        reps = list(replicates)
        if not 1 <= len(reps) <= 3:
            raise ValueError(f"expected 1 to 3 replicates, got {len(reps)}")
        mats = _same_shape(*reps)
        p = mats[0].shape[0]
        u2 = u2_hat(mats[0], mats[1]) if len(mats) >= 2 else None
        u3 = u3_hat(*mats) if len(mats) == 3 else None
        return cls(u1_hat(mats[0]), u2, u3, p * (p - 1) // 2)


def population_moments(alpha: float, beta: float, delta: float, n_pairs: int = 1) -> MomentTriple:
    a, b, d = alpha, beta, delta
    return MomentTriple(
        (1 - d) * a + d * (1 - b),
        (1 - d) * a * (1 - a) + d * b * (1 - b),
        (1 - d) * a * (1 - a) ** 2 + d * b * b * (1 - b),
        n_pairs,
    )


# estimates

@dataclass
class RateEstimate:
    """Point estimates, raw and clamped, with their asymptotic covariance.

    ``cov`` is indexed by the estimated parameters named in ``params``
    (e.g. ``("beta", "delta")`` when alpha is known).
    """

    mode: str
    alpha_hat: float
    beta_hat: float
    delta_hat: float
    cov: np.ndarray
    params: tuple[str, ...]
    n_pairs: int
    level: float = 0.95
    ci_delta: tuple[float, float] = (float("nan"), float("nan"))
    iterations: int = 0
    flags: list[str] = field(default_factory=list)

    @property
    def raw(self) -> dict[str, float]:
        return {"alpha": self.alpha_hat, "beta": self.beta_hat, "delta": self.delta_hat}

    @property
    def clamped(self) -> dict[str, float]:
        return {k: min(1.0, max(0.0, v)) for k, v in self.raw.items()}

    @property
    def out_of_range(self) -> bool:
        return any(not 0.0 <= v <= 1.0 for v in self.raw.values())

    def se(self, name: str) -> float:
        if name not in self.params:
            return 0.0
        i = self.params.index(name)
        return float(np.sqrt(max(self.cov[i, i], 0.0) / self.n_pairs))


def _finish(mode, a, b, d, cov, params, m: MomentTriple, level, iterations=0) -> RateEstimate:
    est = RateEstimate(mode, a, b, d, cov, params, m.n_pairs, level, iterations=iterations)
    var_d = cov[params.index("delta"), params.index("delta")] if "delta" in params else 0.0
    if var_d < 0:
        est.flags.append("negative_variance_floored")
        var_d = 0.0
    est.ci_delta = ci_delta(d, float(np.sqrt(var_d)), m.n_pairs, level)
    if est.out_of_range:
        est.flags.append("estimate_out_of_range")
    return est


def _beta_delta_given_alpha(alpha: float, u1: float, u2: float) -> tuple[float, float]:
    den_b = _check(u1 - alpha, "u1 - alpha")
    den_d = _check(u1 - u2 - 2 * u1 * alpha + alpha * alpha, "delta denominator (alpha known)")
    return (u2 - alpha + u1 * alpha) / den_b, (u1 - alpha) ** 2 / den_d


def _need(m: MomentTriple, *names):
    for n in names:
        if getattr(m, n) is None:
            raise ValueError(f"moment {n} is required for this estimator (supply more replicates)")


def estimate_alpha_known(alpha: float, m: MomentTriple, level: float = 0.95) -> RateEstimate:
    _need(m, "u2")
    beta, delta = _beta_delta_given_alpha(alpha, m.u1, m.u2)
    cov = cov_known_alpha(alpha, beta, delta)
    return _finish("alpha_known", alpha, beta, delta, cov, ("beta", "delta"), m, level)


def estimate_beta_known(beta: float, m: MomentTriple, level: float = 0.95) -> RateEstimate:
    _need(m, "u2")
    u1, u2 = m.u1, m.u2
    den_a = _check(u1 + beta - 1, "u1 + beta - 1")
    den_d = _check(u1 + u2 - 2 * u1 * beta - (1 - beta) ** 2, "delta denominator (beta known)")
    alpha = (u1 * beta - u2) / den_a
    delta = (u1 * u1 - u1 + u2) / den_d
    cov = cov_known_beta(alpha, beta, delta)
    return _finish("beta_known", alpha, beta, delta, cov, ("alpha", "delta"), m, level)


def estimate_both_known(alpha: float, beta: float, m: MomentTriple, level: float = 0.95) -> RateEstimate:
    """Bias-corrected edge density (Ybar - alpha)/(1 - alpha - beta)."""
    k3 = _check(1 - alpha - beta, "1 - alpha - beta")
    delta = (m.u1 - alpha) / k3
    s = sigma_matrix(alpha, beta, delta)
    cov = np.array([[s[0, 0] / k3**2]])
    return _finish("both_known", alpha, beta, delta, cov, ("delta",), m, level)


def estimate_all_unknown(m: MomentTriple, alpha0: float = ALPHA0, tol: float = TOL,
                         max_iter: int = MAX_ITER, level: float = 0.95) -> RateEstimate:
    """Fixed-point iteration on alpha; (beta, delta) follow in closed form.

    Each step solves the known-alpha system for (beta, delta) and then
    updates alpha from the third moment.  Stops once successive alpha values
    differ by less than ``tol``.
    """
    _need(m, "u2", "u3")
    u1, u2, u3 = m.u1, m.u2, m.u3
    alpha = alpha0
    iterates = [alpha]
    for it in range(1, max_iter + 1):
        beta, delta = _beta_delta_given_alpha(alpha, u1, u2)
        den = _check((1 - delta) * (1 - alpha) ** 2, "(1 - delta)(1 - alpha)^2")
        new = (u3 - delta * beta * beta * (1 - beta)) / den
        iterates.append(new)
        if not np.isfinite(new):
            raise NoConvergence(iterates)
        if abs(new - alpha) < tol:
            alpha = new
            beta, delta = _beta_delta_given_alpha(alpha, u1, u2)
            cov = cov_all_unknown(alpha, beta, delta)
            return _finish("both_unknown", alpha, beta, delta, cov, ("alpha", "beta", "delta"), m, level, it)
        alpha = new
    raise NoConvergence(iterates)


def estimate(m: MomentTriple, mode: str, alpha: float | None = None, beta: float | None = None,
             level: float = 0.95, **fixed_point) -> RateEstimate:
    if mode == "alpha_known":
        return estimate_alpha_known(alpha, m, level)
    if mode == "beta_known":
        return estimate_beta_known(beta, m, level)
    if mode == "both_known":
        return estimate_both_known(alpha, beta, m, level)
    if mode == "both_unknown":
        return estimate_all_unknown(m, level=level, **fixed_point)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


# asymptotic covariance

def kappas(alpha: float, beta: float) -> tuple[float, float, float, float]:
    return alpha * (1 - alpha), beta * (1 - beta), 1 - alpha - beta, beta - alpha


def sigma_matrix(alpha: float, beta: float, delta: float) -> np.ndarray:
    """Limiting covariance of sqrt(N)(u1_hat, u2_hat, u3_hat)."""
    a, b, d = alpha, beta, delta
    k1, k2, _, _ = kappas(a, b)
    s11 = d * k2 + (1 - d) * k1
    s22 = d * k2 * (0.5 - k2) + (1 - d) * k1 * (0.5 - k1)
    s33 = d * b * k2 * (1 / 3 - b * k2) + (1 - d) * k1 * (1 - a) * (1 / 3 - k1 * (1 - a))
    s12 = d * k2 * (b - 0.5) + (1 - d) * k1 * (0.5 - a)
    s13 = d * k2 * (b * b / 3 - 2 * k2 / 3) + (1 - d) * k1 * ((1 - a) ** 2 / 3 - 2 * k1 / 3)
    s23 = d * b * k2 * (1 / 3 - k2) + (1 - d) * (1 - a) * k1 * (1 / 3 - k1)
    return np.array([[s11, s12, s13], [s12, s22, s23], [s13, s23, s33]])


def w_known_alpha(alpha, beta, delta) -> np.ndarray:
    k1, k2, k3, _ = kappas(alpha, beta)
    _check(k3, "1 - alpha - beta")
    _check(delta, "delta")
    return np.array([
        [(k2 - k1) / (delta * k3**2), -1 / (delta * k3)],
        [(2 * beta - 1) / k3**2, -1 / k3**2],
    ])


def w_known_beta(alpha, beta, delta) -> np.ndarray:
    k1, k2, k3, _ = kappas(alpha, beta)
    _check(k3, "1 - alpha - beta")
    _check(1 - delta, "1 - delta")
    return np.array([
        [(k2 - k1) / ((1 - delta) * k3**2), -1 / ((1 - delta) * k3)],
        [(2 * alpha - 1) / k3**2, 1 / k3**2],
    ])


def w_all_unknown(alpha, beta, delta) -> np.ndarray:
    a, b, d = alpha, beta, delta
    k3 = _check(1 - a - b, "1 - alpha - beta")
    _check(d, "delta")
    _check(1 - d, "1 - delta")
    ra = (1 - d) * k3**2
    rb = d * k3**2
    return np.array([
        [((1 - 2 * b) * a + b * b) / ra, (a - 2 * b) / ra, 1 / ra],
        [-((1 - 2 * a) * b + a * a) / rb, (b - 2 * a + 1) / rb, -1 / rb],
        [(3 * k3 + 6 * a * b - 2) / k3**3, (3 * k3 + 6 * b - 2) / k3**3, -2 / k3**3],
    ])


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2


def cov_known_alpha(alpha, beta, delta) -> np.ndarray:
    """2x2 covariance of sqrt(N)(beta_hat, delta_hat)."""
    w = w_known_alpha(alpha, beta, delta)
    return _sym(w @ sigma_matrix(alpha, beta, delta)[:2, :2] @ w.T)


def cov_known_beta(alpha, beta, delta) -> np.ndarray:
    """2x2 covariance of sqrt(N)(alpha_hat, delta_hat)."""
    w = w_known_beta(alpha, beta, delta)
    return _sym(w @ sigma_matrix(alpha, beta, delta)[:2, :2] @ w.T)


def cov_all_unknown(alpha, beta, delta) -> np.ndarray:
    """3x3 covariance of sqrt(N)(alpha_hat, beta_hat, delta_hat)."""
    w = w_all_unknown(alpha, beta, delta)
    return _sym(w @ sigma_matrix(alpha, beta, delta) @ w.T)


def ci_delta(delta_hat: float, sigma_hat: float, n_pairs: int, level: float = 0.95) -> tuple[float, float]:
    if sigma_hat < 0:
        raise ValueError("sigma_hat must be non-negative")
    half = z_quantile(level) * sigma_hat / math.sqrt(n_pairs)
    return float(delta_hat - half), float(delta_hat + half)
