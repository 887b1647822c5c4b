r"""Option products, path simulation and per-path Greek estimators.

Paths are simulated in variable-separated form.  With equally spaced
monitoring dates :math:`t_j = jT/d` and :math:`\omega = r - \sigma^2/2`,

.. math::
   S(t_j) = \widetilde S(t_j)\, e^{\omega t_1 + \sigma\sqrt{t_1} x_1},
   \qquad
   \widetilde S(t_j) = S_0\, e^{\omega (t_j - t_1) + \sigma \widetilde W(t_j - t_1)},

where :math:`\widetilde W(t) = W(t + t_1) - W(t_1)` is independent of
:math:`x_1`.  Each payoff indicator becomes :math:`\{x_1 > \psi_d\}`, the
:math:`x_1` integral is done in closed form, and the resulting smooth
function of :math:`\widetilde W` is differentiated directly (conditional
pathwise, CPW).  The likelihood-ratio (LR) estimators multiply the raw
discounted payoff by the score of the Gaussian driving vector.

Every function here vectorises over leading array axes; the monitoring-date
axis is always last.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, log, sqrt

import numpy as np
from scipy.special import ndtr

from .exceptions import PathRejectionError

__all__ = [
    "ARITHMETIC",
    "BINARY",
    "LOOKBACK",
    "EUROPEAN",
    "PATH_PRODUCTS",
    "MarketParams",
    "ProductSpec",
    "PathState",
    "GreekSample",
    "simulate_path",
    "psi_d",
    "cpw_greeks",
    "cpw_greeks_binary",
    "cpw_greeks_arithmetic",
    "cpw_greeks_lookback",
    "discounted_payoff",
    "lr_greeks",
    "european_call_sample",
]

ARITHMETIC = "arithmetic-asian"
BINARY = "binary-asian"
LOOKBACK = "lookback"
EUROPEAN = "european-call"
PATH_PRODUCTS = (ARITHMETIC, BINARY, LOOKBACK)
GREEKS = ("delta", "vega", "gamma")

_INV_SQRT_2PI = 1.0 / sqrt(2.0 * np.pi)


def _pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market: spot, volatility, short rate and maturity."""

    s0: float = 100.0
    sigma: float = 0.2
    r: float = 0.1
    T: float = 1.0

    def __post_init__(self):
        if self.s0 <= 0 or self.sigma <= 0 or self.T <= 0:
            raise ValueError("s0, sigma and T must be positive")

    @property
    def omega(self) -> float:
        """Risk-neutral log drift ``r - sigma**2 / 2``."""
        return self.r - 0.5 * self.sigma**2

    def bumped(self, s0=None, sigma=None) -> "MarketParams":
        return MarketParams(self.s0 if s0 is None else s0, self.sigma if sigma is None else sigma, self.r, self.T)


@dataclass(frozen=True)
class ProductSpec:
    kind: str
    strike: float
    steps: int

    def __post_init__(self):
        if self.kind not in PATH_PRODUCTS + (EUROPEAN,):
            raise ValueError(f"unknown product kind {self.kind!r}")
        if self.strike <= 0:
            raise ValueError("strike must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    def dt(self, mp: MarketParams) -> float:
        return mp.T / self.steps

    def times(self, mp: MarketParams) -> np.ndarray:
        return mp.T * np.arange(1, self.steps + 1) / self.steps


@dataclass
class PathState:
    """Per-path quantities the estimators need; arrays share leading shape.

    ``vega_sum`` is :math:`\\sum_j \\widetilde S(t_j)(\\widetilde W(t_j - t_1) - \\sigma(t_j - t_1))`
    and ``vega_sum_max`` the same sum restricted to the dates where
    :math:`\\widetilde S` attains its maximum.
    """

    x1: np.ndarray
    s_avg: np.ndarray
    s_max: np.ndarray
    vega_sum: np.ndarray
    vega_sum_max: np.ndarray


@dataclass
class GreekSample:
    price: np.ndarray
    delta: np.ndarray
    vega: np.ndarray
    gamma: np.ndarray

    def as_dict(self) -> dict:
        return {"price": self.price, "delta": self.delta, "vega": self.vega, "gamma": self.gamma}


def simulate_path(mp: MarketParams, spec: ProductSpec, x1, dW) -> PathState:
    """Simulate :math:`\\widetilde S` from the increments of :math:`\\widetilde W` on ``(t_1, t_d]``.

    ``dW`` has ``steps - 1`` entries on its last axis.  Raises
    :class:`PathRejectionError` if any path produces a non-finite value.
    """
    dW = np.asarray(dW, dtype=float)
    d = spec.steps
    if dW.shape[-1] != d - 1:
        raise ValueError(f"expected {d - 1} increments per path, got {dW.shape[-1]}")
    dt = mp.T / d
    lead = dW.shape[:-1]
    w = np.empty(lead + (d,))
    w[..., 0] = 0.0
    np.cumsum(dW, axis=-1, out=w[..., 1:])
    tau = dt * np.arange(d)
    s = mp.s0 * np.exp(mp.omega * tau + mp.sigma * w)
    s_avg = s.mean(axis=-1)
    s_max = s.max(axis=-1)
    w -= mp.sigma * tau
    w *= s
    vega_sum = w.sum(axis=-1)
    vega_sum_max = np.where(s == s_max[..., None], w, 0.0).sum(axis=-1)
    x1 = np.broadcast_to(np.asarray(x1, dtype=float), lead)
    bad = ~(np.isfinite(s_avg) & np.isfinite(s_max) & np.isfinite(vega_sum) & np.isfinite(x1))
    if bad.any():
        n = int(bad.sum())
        raise PathRejectionError(f"{n} path(s) produced non-finite values", count=n)
    return PathState(x1, s_avg, s_max, vega_sum, vega_sum_max)


def psi_d(spec: ProductSpec, mp: MarketParams, statistic):
    """Lower limit of the separated coordinate: ``{payoff > 0} = {x_1 > psi_d}``."""
    statistic = np.asarray(statistic, dtype=float)
    if np.any(statistic <= 0):
        raise ValueError("statistic must be positive")
    t1 = mp.T / spec.steps
    out = (log(spec.strike) - np.log(statistic) - mp.omega * t1) / (mp.sigma * sqrt(t1))
    return float(out) if out.ndim == 0 else out


def cpw_greeks_binary(ps: PathState, mp: MarketParams, spec: ProductSpec) -> GreekSample:
    t1 = mp.T / spec.steps
    a = mp.sigma * sqrt(t1)
    disc = exp(-mp.r * mp.T)
    psi = psi_d(spec, mp, ps.s_avg)
    dens = disc * _pdf(psi)
    price = disc * ndtr(-psi)
    delta = dens / (mp.s0 * a)
    gamma = dens / (mp.s0**2 * a) * (psi / a - 1.0)
    vega = dens * (ps.vega_sum / (spec.steps * a * ps.s_avg) + psi / mp.sigma - sqrt(t1))
    return GreekSample(price, delta, vega, gamma)


def _cpw_call_like(stat, dstat_dsigma, mp: MarketParams, spec: ProductSpec) -> GreekSample:
    # smoothed payoff e^{r(t1-T)} stat [1 - Phi(psi - a)] - e^{-rT} K [1 - Phi(psi)]
    t1 = mp.T / spec.steps
    a = mp.sigma * sqrt(t1)
    K = spec.strike
    disc = exp(-mp.r * mp.T)
    fwd = exp(mp.r * (t1 - mp.T))
    psi = psi_d(spec, mp, stat)
    upper = ndtr(a - psi)
    k_dens = K * disc * _pdf(psi)
    price = fwd * stat * upper - disc * K * ndtr(-psi)
    delta = fwd * stat / mp.s0 * upper
    gamma = k_dens / (mp.s0**2 * a)
    vega = fwd * upper * dstat_dsigma + k_dens * sqrt(t1)
    return GreekSample(price, delta, vega, gamma)


def cpw_greeks_arithmetic(ps: PathState, mp: MarketParams, spec: ProductSpec) -> GreekSample:
    return _cpw_call_like(ps.s_avg, ps.vega_sum / spec.steps, mp, spec)


def cpw_greeks_lookback(ps: PathState, mp: MarketParams, spec: ProductSpec) -> GreekSample:
    # d(max)/d(sigma) is the derivative at the argmax date, no 1/d average
    return _cpw_call_like(ps.s_max, ps.vega_sum_max, mp, spec)


_CPW = {ARITHMETIC: cpw_greeks_arithmetic, BINARY: cpw_greeks_binary, LOOKBACK: cpw_greeks_lookback}


def cpw_greeks(ps: PathState, mp: MarketParams, spec: ProductSpec) -> GreekSample:
    try:
        fn = _CPW[spec.kind]
    except KeyError:
        raise ValueError(f"no CPW estimator for {spec.kind!r}") from None
    return fn(ps, mp, spec)


def discounted_payoff(ps: PathState, mp: MarketParams, spec: ProductSpec):
    """Raw discounted payoff rebuilt from the separated path and ``x_1``."""
    t1 = mp.T / spec.steps
    factor = np.exp(mp.omega * t1 + mp.sigma * sqrt(t1) * ps.x1)
    disc = exp(-mp.r * mp.T)
    K = spec.strike
    if spec.kind == ARITHMETIC:
        return disc * np.maximum(ps.s_avg * factor - K, 0.0)
    if spec.kind == BINARY:
        return disc * (ps.s_avg * factor > K).astype(float)
    if spec.kind == LOOKBACK:
        return disc * np.maximum(ps.s_max * factor - K, 0.0)
    raise ValueError(f"no path payoff for {spec.kind!r}")


def lr_scores(z, mp: MarketParams, spec: ProductSpec):
    """(delta, vega, gamma) scores of the driving normals ``z`` (last axis = dates)."""
    z = np.asarray(z, dtype=float)
    t1 = mp.T / spec.steps
    a = mp.sigma * sqrt(t1)
    z1 = z[..., 0]
    s0 = mp.s0
    delta = z1 / (s0 * a)
    gamma = (z1 * z1 - 1.0) / (s0**2 * a * a) - z1 / (s0**2 * a)
    vega = ((z * z - 1.0) / mp.sigma - z * sqrt(t1)).sum(axis=-1)
    return delta, vega, gamma


def lr_greeks(payoff, z, mp: MarketParams, spec: ProductSpec, scores=None) -> GreekSample:
    """Likelihood-ratio estimates: discounted payoff times the score.

    ``scores`` can carry precomputed :func:`lr_scores` when several
    payoffs share the same draws.
    """
    payoff = np.asarray(payoff, dtype=float)
    s_delta, s_vega, s_gamma = lr_scores(z, mp, spec) if scores is None else scores
    return GreekSample(payoff, payoff * s_delta, payoff * s_vega, payoff * s_gamma)


def european_call_sample(mp: MarketParams, spec: ProductSpec, z1) -> GreekSample:
    """Terminal-draw call price and pathwise delta; vega and gamma are NaN."""
    z1 = np.asarray(z1, dtype=float)
    st = mp.s0 * np.exp(mp.omega * mp.T + mp.sigma * sqrt(mp.T) * z1)
    disc = exp(-mp.r * mp.T)
    price = disc * np.maximum(st - spec.strike, 0.0)
    delta = disc * st / mp.s0 * (st > spec.strike)
    nan = np.full_like(price, np.nan)
    return GreekSample(price, delta, nan, nan)
