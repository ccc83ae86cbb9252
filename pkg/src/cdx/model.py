"""Gaussian observation model and log-likelihood-ratio (LLR) transform.

Observations are X ~ N(v, sigma^2) with a common known sigma.  Monitoring
compares a pre-change mean v0 against a reference post-change mean v1; the
per-observation LLR is

    Z = log[p_v1(X) / p_v0(X)] = [(v1 - v0) X + (v0^2 - v1^2)/2] / sigma^2,

which for the canonical v0=0, v1=1, sigma=1 setup reduces to Z = X - 1/2.
All quantities downstream (drifts, KL distances, MGFs, regime labels) are
closed-form in this family.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "GaussianChangeSpec",
    "Regime",
    "llr_transform",
    "llr_sd",
    "drift",
    "kl_pair",
    "classify_regime",
    "log_mgf_h",
    "mgf_h",
    "log_mgf_h_tilde",
    "mgf_h_tilde",
]

# Largest exponent exp() can take without overflowing a double.
_MAX_EXP = math.log(math.floor(2.0 ** 1023))

# Drifts smaller than this in magnitude are treated as exactly zero when
# classifying regimes; drift is closed-form so only representation error
# can occur.
ZERO_DRIFT_TOL = 1e-12


class Regime(enum.Enum):
    """Sign of the expected LLR under the true post-change mean.

    V_MINUS: E_v(Z) < 0 — the true distribution is KL-closer to pre-change.
    V_ZERO:  E_v(Z) = 0 — equidistant boundary.
    V_PLUS:  E_v(Z) > 0 — KL-closer to the reference post-change density.
    """

    V_MINUS = "V-"
    V_ZERO = "V0"
    V_PLUS = "V+"


@dataclass(frozen=True)
class GaussianChangeSpec:
    """Equal-variance Gaussian change model.

    Parameters
    ----------
    v0 : pre-change mean.
    v1 : reference post-change mean used to form the LLR (v1 != v0).
    sigma : common standard deviation, > 0.
    v : true post-change mean used for evaluation; defaults to v1.
    """

    v0: float = 0.0
    v1: float = 1.0
    sigma: float = 1.0
    v: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.v1 == self.v0:
            raise ValueError("v1 == v0 makes the LLR identically zero")

    @property
    def mu0(self) -> float:
        """Pre-change LLR drift E_{v0}(Z), always negative."""
        return drift(self, self.v0)


def llr_transform(spec: GaussianChangeSpec, x: float) -> float:
    """LLR of a single observation x under post- vs pre-change densities."""
    return ((spec.v1 - spec.v0) * x + (spec.v0 * spec.v0 - spec.v1 * spec.v1) / 2.0) / (
        spec.sigma * spec.sigma
    )


def llr_sd(spec: GaussianChangeSpec) -> float:
    """Standard deviation of Z under any mean: |v1 - v0| / sigma."""
    return abs(spec.v1 - spec.v0) / spec.sigma


def drift(spec: GaussianChangeSpec, v: float) -> float:
    """Expected LLR E_v(Z) when the data mean is v.

    Equals I(P_v|P_v0) - I(P_v|P_v1), the difference of the two KL
    distances, so its sign says which reference density P_v is closer to.
    """
    return llr_transform(spec, v)


def kl_pair(spec: GaussianChangeSpec, v: float) -> tuple[float, float]:
    """(I(P_v|P_v0), I(P_v|P_v1)) — Gaussian KL is a squared distance."""
    two_var = 2.0 * spec.sigma * spec.sigma
    return ((v - spec.v0) ** 2 / two_var, (v - spec.v1) ** 2 / two_var)


def classify_regime(spec: GaussianChangeSpec, v: float) -> Regime:
    """Label v by the sign of its drift (tolerance ZERO_DRIFT_TOL at zero)."""
    mu = drift(spec, v)
    if abs(mu) <= ZERO_DRIFT_TOL:
        return Regime.V_ZERO
    return Regime.V_MINUS if mu < 0 else Regime.V_PLUS


def log_mgf_h(spec: GaussianChangeSpec, v: float, theta: float) -> float:
    """log h_v(theta) where h_v(theta) = E_v(exp(theta Z)).

    Z ~ N(drift(v), llr_sd^2), so log h = theta*mu + theta^2 s^2 / 2.
    """
    s = llr_sd(spec)
    return theta * drift(spec, v) + 0.5 * theta * theta * s * s


def mgf_h(spec: GaussianChangeSpec, v: float, theta: float) -> float:
    """MGF h_v(theta); raises OverflowError if the exponent is out of range."""
    return _safe_exp(log_mgf_h(spec, v, theta))


def log_mgf_h_tilde(
    spec: GaussianChangeSpec, v: float, theta: float, gprime_at_mu: float, a: float
) -> float:
    """log MGF of the tilted variable Z~ = Z + |g'(mu)| (Z - mu) / a.

    Z~ is an affine image of Z, hence Gaussian with the same mean mu and
    inflated sd (1 + |g'(mu)|/a) s.  a is the sliding-window scale, > 0.
    """
    if not a > 0:
        raise ValueError(f"window scale a must be > 0, got {a}")
    mu = drift(spec, v)
    s_tilde = (1.0 + abs(gprime_at_mu) / a) * llr_sd(spec)
    return theta * mu + 0.5 * theta * theta * s_tilde * s_tilde


def mgf_h_tilde(
    spec: GaussianChangeSpec, v: float, theta: float, gprime_at_mu: float, a: float
) -> float:
    """MGF of Z~; overflow-guarded like mgf_h."""
    return _safe_exp(log_mgf_h_tilde(spec, v, theta, gprime_at_mu, a))


def _safe_exp(log_value: float) -> float:
    if log_value > _MAX_EXP:
        raise OverflowError(f"MGF exponent {log_value:.6g} exceeds double range")
    return math.exp(log_value)
