"""Exception types raised across the package."""

from __future__ import annotations


class NoisyNetError(Exception):
    """Base class for all computation errors raised by noisynet."""


class DimensionMismatch(NoisyNetError, ValueError):
    pass


class ZeroTwoStars(NoisyNetError, ZeroDivisionError):
    """The graph (or estimate) has no two-stars, so clustering is undefined."""


class DegenerateDenominator(NoisyNetError, ZeroDivisionError):
    def __init__(self, what: str, value: float):
        super().__init__(f"{what} is numerically zero ({value:.3e}); estimator is not identified")
        self.what = what
        self.value = value


class NoConvergence(NoisyNetError):
    def __init__(self, iterates):
        self.iterates = list(iterates)
        last = self.iterates[-1] if self.iterates else float("nan")
        super().__init__(f"fixed-point iteration did not converge after {len(self.iterates)} steps (last alpha={last!r})")


class TargetNotReached(NoisyNetError):
    def __init__(self, best_distance, iterations: int):
        self.best_distance = best_distance
        self.iterations = iterations
        super().__init__(f"generator stopped after {iterations} proposals; best distance {best_distance}")


class NoValidGamma(NoisyNetError):
    def __init__(self, alpha: float, beta: float, reason: str):
        self.alpha = alpha
        self.beta = beta
        super().__init__(f"no admissible bootstrap probabilities for alpha={alpha:.6g}, beta={beta:.6g}: {reason}")


class PatternTooLarge(NoisyNetError, ValueError):
    pass


class WorkBudgetExceeded(NoisyNetError):
    pass


class UnsupportedKind(NoisyNetError, ValueError):
    pass


class ShapeMismatch(NoisyNetError, ValueError):
    pass


class NegativeVariance(NoisyNetError):
    pass


class InsufficientSamples(NoisyNetError, ValueError):
    pass


class ConstantGene(NoisyNetError, ValueError):
    pass
