"""Oracle and consistency checks.

* European call: Monte Carlo price and pathwise delta against the
  Black-Scholes closed form.
* CPW unbiasedness: the mean CPW Greek against a central finite difference
  of the smoothed price, re-simulated with common random numbers at bumped
  ``S0`` (0.5%) and ``sigma`` (1%).
* Smoothing: the mean smoothed price against the mean raw discounted payoff
  on the same draws.
* LR against CPW: both are unbiased, so their means must agree.

Every check passes when the two estimates differ by at most ``3`` combined
standard errors ``sqrt(se_a**2 + se_b**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .products import (
    EUROPEAN,
    PATH_PRODUCTS,
    MarketParams,
    ProductSpec,
    cpw_greeks,
    discounted_payoff,
    european_call_sample,
    lr_greeks,
    simulate_path,
)
from .rng import PseudoStream, StreamSpec

__all__ = [
    "CheckResult",
    "black_scholes_call",
    "check_european",
    "check_product",
    "run_validation",
]

S0_BUMP = 0.005
SIGMA_BUMP = 0.01
N_SE = 3.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    estimate: float
    reference: float
    se: float

    @property
    def deviation(self) -> float:
        return abs(self.estimate - self.reference)

    @property
    def passed(self) -> bool:
        return self.deviation <= N_SE * self.se

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: estimate={self.estimate:.6g} reference={self.reference:.6g} "
            f"|diff|={self.deviation:.3g} <= {N_SE:g}*se={N_SE * self.se:.3g}"
        )


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def black_scholes_call(mp: MarketParams, strike: float) -> tuple[float, float]:
    """Closed-form call price and delta."""
    vol = mp.sigma * math.sqrt(mp.T)
    d1 = (math.log(mp.s0 / strike) + (mp.r + 0.5 * mp.sigma**2) * mp.T) / vol
    d2 = d1 - vol
    price = mp.s0 * _norm_cdf(d1) - strike * math.exp(-mp.r * mp.T) * _norm_cdf(d2)
    return price, _norm_cdf(d1)


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _combined(a, b) -> tuple[float, float, float]:
    (ma, sa), (mb, sb) = _mean_se(a), _mean_se(b)
    return ma, mb, math.hypot(sa, sb)


def check_european(mp: MarketParams, strike: float = 100.0, paths: int = 2**17, seed: int = 0) -> list[CheckResult]:
    stream = PseudoStream(StreamSpec(seed, "pseudo", 1, tag=99))
    z1 = stream.normals(0, 0, paths)[0]
    sample = european_call_sample(mp, ProductSpec(EUROPEAN, strike, 1), z1)
    price, delta = black_scholes_call(mp, strike)
    out = []
    for name, values, ref in (("price", sample.price, price), ("delta", sample.delta, delta)):
        m, se = _mean_se(values)
        out.append(CheckResult(f"european-call {name} vs Black-Scholes", m, ref, se))
    return out


def _draws(steps: int, paths: int, seed: int, chunk: int = 8192):
    stream = PseudoStream(StreamSpec(seed, "pseudo", steps, tag=98))
    for start in range(0, paths, chunk):
        yield stream.normals(0, start, min(chunk, paths - start)).T


def _state(mp: MarketParams, spec: ProductSpec, z):
    dt = mp.T / spec.steps
    dW = math.sqrt(dt) * z
    return simulate_path(mp, spec, z[:, 0], dW[:, 1:])


def check_product(
    kind: str,
    mp: MarketParams | None = None,
    strike: float = 100.0,
    steps: int = 64,
    paths: int = 2**16,
    seed: int = 0,
) -> list[CheckResult]:
    """FD, smoothing and LR consistency for one path-dependent product."""
    if kind not in PATH_PRODUCTS:
        raise ValueError(f"{kind!r} is not a path-dependent product")
    mp = mp or MarketParams()
    spec = ProductSpec(kind, strike, steps)
    hs, hv = S0_BUMP * mp.s0, SIGMA_BUMP * mp.sigma
    bumps = {
        "s_up": mp.bumped(s0=mp.s0 + hs),
        "s_dn": mp.bumped(s0=mp.s0 - hs),
        "v_up": mp.bumped(sigma=mp.sigma + hv),
        "v_dn": mp.bumped(sigma=mp.sigma - hv),
    }
    acc = {k: [] for k in ("delta", "vega", "gamma", "fd_delta", "fd_vega", "fd_gamma",
                           "price", "raw", "lr_delta", "lr_vega", "lr_gamma")}
    for z in _draws(steps, paths, seed):
        ps = _state(mp, spec, z)
        g = cpw_greeks(ps, mp, spec)
        p = {k: cpw_greeks(_state(b, spec, z), b, spec).price for k, b in bumps.items()}
        raw = discounted_payoff(ps, mp, spec)
        lr = lr_greeks(raw, z, mp, spec)
        acc["delta"].append(g.delta)
        acc["vega"].append(g.vega)
        acc["gamma"].append(g.gamma)
        acc["price"].append(g.price)
        acc["raw"].append(raw)
        acc["fd_delta"].append((p["s_up"] - p["s_dn"]) / (2 * hs))
        acc["fd_vega"].append((p["v_up"] - p["v_dn"]) / (2 * hv))
        acc["fd_gamma"].append((p["s_up"] - 2 * g.price + p["s_dn"]) / hs**2)
        acc["lr_delta"].append(lr.delta)
        acc["lr_vega"].append(lr.vega)
        acc["lr_gamma"].append(lr.gamma)
    acc = {k: np.concatenate(v) for k, v in acc.items()}

    out = []
    for greek in ("delta", "vega", "gamma"):
        m, ref, se = _combined(acc[greek], acc[f"fd_{greek}"])
        out.append(CheckResult(f"{kind} CPW {greek} vs central FD", m, ref, se))
    for greek in ("delta", "vega", "gamma"):
        m, ref, se = _combined(acc[f"lr_{greek}"], acc[greek])
        out.append(CheckResult(f"{kind} LR {greek} vs CPW {greek}", m, ref, se))
    m, ref, se = _combined(acc["price"], acc["raw"])
    out.append(CheckResult(f"{kind} smoothed price vs raw payoff", m, ref, se))
    return out


def run_validation(mp: MarketParams | None = None, seed: int = 0, paths: int = 2**16, steps: int = 64) -> list[CheckResult]:
    mp = mp or MarketParams()
    results = check_european(mp, paths=2 * paths, seed=seed)
    for kind in PATH_PRODUCTS:
        results += check_product(kind, mp, steps=steps, paths=paths, seed=seed)
    return results
