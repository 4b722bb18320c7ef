"""Sparsity priors and the regularizers they induce.

Each prior is a symmetric density on the coefficient line. Three families are
provided besides the plain Laplacian:

* ``Moe`` mixes zero-mean Laplacians whose rates follow a Gamma(kappa, beta)
  distribution, giving the heavy-tailed density
  ``f(a) = (kappa/2) * beta^kappa / (|a| + beta)^(kappa+1)``.
* ``Joe`` mixes exponential rates under a normalized Jeffreys weight confined
  to ``[theta1, theta2]``.
* ``cmoe_from_samples`` builds a Moe whose Gamma weight has been conditioned
  on a handful of observed coefficient magnitudes.

The negative log-density (up to constants) acts as the sparsity regularizer:
``reg_value`` gives psi(t) for magnitudes t >= 0, ``reg_deriv`` its
derivative, which is what reweighted-l1 coding consumes. All array arguments
broadcast elementwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EstimationError",
    "Laplacian",
    "Moe",
    "Joe",
    "PriorModel",
    "laplacian_mle",
    "moe_fit_moments",
    "moe_fit_samples",
    "joe_fit_moments",
    "joe_fit_fixed_ratio",
    "cmoe_from_samples",
]


class EstimationError(ValueError):
    """Raised when a parameter fit is undefined for the given data."""


def _ret(x: np.ndarray):
    """Return scalars for scalar input, arrays otherwise."""
    if x.ndim == 0:
        return float(x)
    return x


def _check_magnitudes(t: np.ndarray) -> None:
    if (t < 0).any():
        raise ValueError("regularizers take magnitudes; got a negative argument")


def _check_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class Laplacian:
    """Laplacian prior with rate ``theta``: f(a) = (theta/2) exp(-theta |a|)."""

    theta: float

    def __post_init__(self) -> None:
        _check_positive(theta=self.theta)

    @property
    def kind(self) -> str:
        return "laplacian"

    def log_pdf(self, a):
        a = np.asarray(a, dtype=np.float64)
        return _ret(math.log(self.theta / 2.0) - self.theta * np.abs(a))

    def pdf(self, a):
        a = np.asarray(a, dtype=np.float64)
        return _ret(np.exp(np.asarray(self.log_pdf(a))))

    def reg_value(self, t):
        t = np.asarray(t, dtype=np.float64)
        _check_magnitudes(t)
        return _ret(t + 0.0)

    def reg_deriv(self, t):
        t = np.asarray(t, dtype=np.float64)
        _check_magnitudes(t)
        return _ret(np.ones_like(t))

    def expected_rate(self) -> float:
        return self.theta

    def moment(self, i: int) -> float:
        _check_moment_order(i)
        return math.factorial(i) / self.theta**i

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.laplace(0.0, 1.0 / self.theta, size)


@dataclass(frozen=True)
class Moe:
    """Gamma-mixture-of-Laplacians prior with shape ``kappa``, scale ``beta``.

    The induced regularizer is psi(t) = log(t + beta), whose derivative
    1/(t + beta) shrinks small coefficients hard while leaving large ones
    nearly untouched.
    """

    kappa: float
    beta: float

    def __post_init__(self) -> None:
        _check_positive(kappa=self.kappa, beta=self.beta)

    @property
    def kind(self) -> str:
        return "moe"

    def log_pdf(self, a):
        a = np.asarray(a, dtype=np.float64)
        k, b = self.kappa, self.beta
        out = math.log(k / 2.0) + k * math.log(b) - (k + 1.0) * np.log(np.abs(a) + b)
        return _ret(out)

    def pdf(self, a):
        a = np.asarray(a, dtype=np.float64)
        return _ret(np.exp(np.asarray(self.log_pdf(a))))

    def reg_value(self, t):
        t = np.asarray(t, dtype=np.float64)
        _check_magnitudes(t)
        return _ret(np.log(t + self.beta))

    def reg_deriv(self, t):
        t = np.asarray(t, dtype=np.float64)
        _check_magnitudes(t)
        return _ret(1.0 / (t + self.beta))

    def expected_rate(self) -> float:
        """Mean exponential rate under the Gamma mixing weight."""
        return self.kappa / self.beta

    def moment(self, i: int) -> float:
        """E|a|^i = beta^i * i! / prod_{j=1..i}(kappa - j); needs kappa > i."""
        _check_moment_order(i)
        if self.kappa <= i:
            raise EstimationError(
                f"moment {i} undefined for kappa = {self.kappa} (needs kappa > {i})"
            )
        denom = 1.0
        for j in range(1, i + 1):
            denom *= self.kappa - j
        return self.beta**i * math.factorial(i) / denom

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Inverse-CDF draw: |a| = beta * (u^(-1/kappa) - 1), sign uniform."""
        u = 1.0 - rng.random(size)  # in (0, 1]
        mags = self.beta * (u ** (-1.0 / self.kappa) - 1.0)
        signs = rng.integers(0, 2, size) * 2.0 - 1.0
        return mags * signs


@dataclass(frozen=True)
class Joe:
    """Jeffreys mixture of exponentials with rates confined to [theta1, theta2].

    f(a) = (exp(-theta1 |a|) - exp(-theta2 |a|)) / (2 |a| log(theta2/theta1)),
    extended by continuity at a = 0. The regularizer interpolates between
    slope (theta1+theta2)/2 at the origin and the straight line theta1 * t +
    log t far out.
    """

    theta1: float
    theta2: float

    def __post_init__(self) -> None:
        _check_positive(theta1=self.theta1, theta2=self.theta2)
        if self.theta2 <= self.theta1:
            raise ValueError(
                f"need theta1 < theta2, got ({self.theta1}, {self.theta2})"
            )

    @property
    def kind(self) -> str:
        return "joe"

    @property
    def _log_ratio(self) -> float:
        return math.log(self.theta2 / self.theta1)

    def log_pdf(self, a):
        a = np.asarray(a, dtype=np.float64)
        t = np.abs(a)
        delta = self.theta2 - self.theta1
        t_safe = np.where(t > 0, t, 1.0)
        # exp(-t1 t) - exp(-t2 t) = exp(-t1 t) * (-expm1(-delta t)), stable for all t
        body = -self.theta1 * t_safe + np.log(-np.expm1(-delta * t_safe))
        body -= np.log(2.0 * t_safe * self._log_ratio)
        peak = math.log(delta / (2.0 * self._log_ratio))
        return _ret(np.where(t > 0, body, peak))

    def pdf(self, a):
        a = np.asarray(a, dtype=np.float64)
        return _ret(np.exp(np.asarray(self.log_pdf(a))))

    def reg_value(self, t):
        t = np.asarray(t, dtype=np.float64)
        _check_magnitudes(t)
        delta = self.theta2 - self.theta1
        t_safe = np.where(t > 0, t, 1.0)
        body = self.theta1 * t_safe + np.log(t_safe) - np.log(-np.expm1(-delta * t_safe))
        at_zero = -math.log(delta)
        return _ret(np.where(t > 0, body, at_zero))

    def reg_deriv(self, t):
        t = np.asarray(t, dtype=np.float64)
        _check_magnitudes(t)
        delta = self.theta2 - self.theta1
        u = delta * np.where(t > 0, t, 1.0)
        # 1/t - delta/expm1(delta t) = g(u)/t with g(u) = 1 - u/expm1(u);
        # series for tiny u avoids the cancellation, clipping avoids overflow
        u_gen = np.clip(u, 1e-6, 700.0)
        g = np.where(u < 1e-6, u / 2.0 - u * u / 12.0, 1.0 - u_gen / np.expm1(u_gen))
        body = self.theta1 + g / np.where(t > 0, t, 1.0)
        at_zero = 0.5 * (self.theta1 + self.theta2)
        return _ret(np.where(t > 0, body, at_zero))

    def expected_rate(self) -> float:
        """Mean exponential rate under the Jeffreys weight on [theta1, theta2]."""
        return (self.theta2 - self.theta1) / self._log_ratio

    def moment(self, i: int) -> float:
        """E|a|^i = (i-1)! * (theta1^-i - theta2^-i) / log(theta2/theta1)."""
        _check_moment_order(i)
        return (
            math.factorial(i - 1)
            * (self.theta1**-i - self.theta2**-i)
            / self._log_ratio
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw a rate log-uniformly from [theta1, theta2], then a signed exponential."""
        v = rng.random(size)
        rates = self.theta1 * (self.theta2 / self.theta1) ** v
        mags = rng.exponential(1.0 / rates)
        signs = rng.integers(0, 2, size) * 2.0 - 1.0
        return mags * signs


PriorModel = Laplacian | Moe | Joe


def _check_moment_order(i: int) -> None:
    if not isinstance(i, (int, np.integer)) or i < 1:
        raise ValueError(f"moment order must be an integer >= 1, got {i!r}")


def laplacian_mle(values) -> Laplacian:
    """Maximum-likelihood Laplacian rate: nonzero count / sum of magnitudes."""
    values = np.abs(np.asarray(values, dtype=np.float64)).ravel()
    values = values[values > 0]
    if values.size == 0:
        raise EstimationError("laplacian_mle needs at least one nonzero value")
    return Laplacian(values.size / float(values.sum()))


def moe_fit_moments(mu1: float, mu2: float) -> Moe:
    """Fit a Moe from the first two absolute moments.

    Inverts mu1 = beta/(kappa-1), mu2 = 2 beta^2/((kappa-1)(kappa-2)); the fit
    exists only when mu2 > 2*mu1^2, i.e. when the sample is heavier-tailed
    than any single exponential.
    """
    if not (mu1 > 0 and mu2 > 0):
        raise EstimationError(f"moments must be positive, got mu1={mu1}, mu2={mu2}")
    denom = mu2 - 2.0 * mu1 * mu1
    if denom <= 0:
        raise EstimationError(
            f"tail too light for a Moe fit: mu2 - 2*mu1^2 = {denom:.6g} <= 0"
        )
    kappa = 2.0 * (mu2 - mu1 * mu1) / denom
    return Moe(kappa=kappa, beta=(kappa - 1.0) * mu1)


def moe_fit_samples(values, max_kappa: float = 100.0) -> Moe:
    """Driver-grade Moe fit from raw coefficients, capped at ``max_kappa``.

    Zero entries are ignored. When the strict moment fit is undefined (data
    indistinguishable from a single exponential) or lands above the cap, the
    shape is pinned at ``max_kappa`` and the scale is matched to the mean,
    which degrades gracefully toward the Laplacian.
    """
    values = np.abs(np.asarray(values, dtype=np.float64)).ravel()
    values = values[values > 0]
    if values.size == 0:
        raise EstimationError("moe_fit_samples needs at least one nonzero value")
    mu1 = float(values.mean())
    mu2 = float((values**2).mean())
    try:
        fit = moe_fit_moments(mu1, mu2)
        if fit.kappa <= max_kappa:
            return fit
    except EstimationError:
        pass
    return Moe(kappa=max_kappa, beta=(max_kappa - 1.0) * mu1)


def _joe_gap(r: float, mu1: float, mu2: float) -> float:
    log_r = math.log(r)
    return r * (mu2 - mu1 * mu1 * log_r) - (mu2 + mu1 * mu1 * log_r)


def joe_fit_moments(mu1: float, mu2: float, max_ratio: float = 1e9) -> Joe:
    """Fit a Joe from the first two absolute moments.

    The rate ratio r = theta2/theta1 solves
    r * (mu2 - mu1^2 log r) = mu2 + mu1^2 log r, found by bisection on
    (1, max_ratio]; theta1 = 2*mu1 / (mu2 + mu1^2 log r) then fixes the scale.
    """
    if not (mu1 > 0 and mu2 > 0):
        raise EstimationError(f"moments must be positive, got mu1={mu1}, mu2={mu2}")
    if mu2 - 2.0 * mu1 * mu1 <= 0:
        raise EstimationError(
            f"tail too light for a Joe fit: mu2 - 2*mu1^2 = {mu2 - 2 * mu1 * mu1:.6g} <= 0"
        )
    lo = 1.0 + 1e-9
    hi = 2.0
    while _joe_gap(hi, mu1, mu2) > 0:
        hi *= 2.0
        if hi > max_ratio:
            raise EstimationError(
                f"no rate ratio below {max_ratio:g} balances the moments"
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _joe_gap(mid, mu1, mu2) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    r = 0.5 * (lo + hi)
    return joe_fit_fixed_ratio(mu1, mu2, r)


def joe_fit_fixed_ratio(mu1: float, mu2: float, ratio: float) -> Joe:
    """Fit a Joe with the rate ratio pinned: theta1 = 2*mu1/(mu2 + mu1^2 log r)."""
    if ratio <= 1.0:
        raise EstimationError(f"rate ratio must exceed 1, got {ratio}")
    theta1 = 2.0 * mu1 / (mu2 + mu1 * mu1 * math.log(ratio))
    if not (theta1 > 0 and math.isfinite(theta1)):
        raise EstimationError(f"degenerate scale from mu1={mu1}, mu2={mu2}, r={ratio}")
    return Joe(theta1=theta1, theta2=ratio * theta1)


def cmoe_from_samples(samples) -> Moe:
    """Moe conditioned on observed magnitudes: kappa = count, beta = their sum."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size == 0:
        raise EstimationError("cmoe_from_samples needs at least one magnitude")
    if (samples < 0).any():
        raise EstimationError("cmoe_from_samples expects absolute magnitudes")
    total = float(samples.sum())
    if total <= 0:
        raise EstimationError("cmoe_from_samples needs a positive magnitude sum")
    return Moe(kappa=float(samples.size), beta=total)
