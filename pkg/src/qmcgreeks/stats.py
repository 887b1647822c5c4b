"""Run aggregation, error bars and variance reduction factors.

A method is run ``L`` times with ``P`` paths each.  The final estimate is the
mean of the run means and the error is their spread with divisor ``L``:

    C     = (1/L) sum_l C_P^(l)
    sigma = sqrt((1/L) sum_l (C - C_P^(l))**2)

The divisor-``L`` form is biased low by a factor ``sqrt((L-1)/L)`` against
the usual sample standard deviation (about 1% at L=50);
:func:`sample_std` exposes the unbiased-variance version for comparison.
The VRF of a method is ``sigma_LR**2 / sigma**2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InsufficientDataError

log = logging.getLogger(__name__)

__all__ = [
    "GREEKS",
    "RunSummary",
    "VrfTable",
    "aggregate",
    "sample_std",
    "vrf",
    "efficiency",
    "build_vrf_table",
]

GREEKS = ("delta", "vega", "gamma")


@dataclass(frozen=True)
class RunSummary:
    """Greek estimates averaged over the ``paths`` paths of one run."""

    method: str
    product: str
    strike: float
    steps: int
    paths: int
    run: int
    estimates: dict = field(hash=False)
    seconds: float = field(default=0.0, compare=False, hash=False)

    def __getitem__(self, greek: str) -> float:
        return self.estimates[greek]


def _values(runs) -> np.ndarray:
    vals = np.asarray([float(r) for r in runs], dtype=float)
    if vals.size < 2:
        raise InsufficientDataError(f"need at least 2 runs for an error estimate, got {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("run estimates must be finite")
    return vals


def aggregate(runs: Iterable[float]) -> tuple[float, float]:
    """Mean of run estimates and their root-mean-square spread (divisor L)."""
    vals = np.sort(_values(runs))  # sorted: result independent of run order
    c = float(math.fsum(vals) / vals.size)
    sigma = math.sqrt(math.fsum((vals - c) ** 2) / vals.size)
    return c, sigma


def sample_std(runs: Iterable[float]) -> float:
    """Standard deviation with divisor ``L - 1``."""
    vals = np.sort(_values(runs))
    c = math.fsum(vals) / vals.size
    return math.sqrt(math.fsum((vals - c) ** 2) / (vals.size - 1))


def vrf(sigma0: float, sigma: float) -> float:
    """Variance reduction factor ``sigma0**2 / sigma**2``; ``inf`` when sigma is 0."""
    if sigma < 0 or sigma0 < 0:
        raise ValueError("errors must be non-negative")
    if sigma == 0:
        log.warning("zero error in method estimate; VRF reported as inf")
        return math.inf
    return (sigma0 / sigma) ** 2


def efficiency(sigma: float, cost: float) -> float:
    """Work-normalised variance ``sigma**2 * cost``; lower is better."""
    return sigma**2 * cost


@dataclass
class VrfTable:
    """VRFs keyed by ``(greek, strike, steps, method)``.

    ``baseline`` holds the LR variance for each ``(greek, strike, steps)``;
    ``errors`` the aggregated ``(estimate, sigma)`` of every cell and
    ``seconds`` the mean wall-clock per run for each ``(strike, steps, method)``.
    """

    product: str
    methods: tuple
    rows: dict = field(default_factory=dict)
    baseline: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)

    def efficiency_ratio(self, greek, strike, steps, method) -> float:
        """LR efficiency over method efficiency (cost-adjusted VRF)."""
        sig0 = self.errors[(greek, strike, steps, "lr-mc")][1]
        sig = self.errors[(greek, strike, steps, method)][1]
        e0 = efficiency(sig0, self.seconds[(strike, steps, "lr-mc")])
        e = efficiency(sig, self.seconds[(strike, steps, method)])
        return math.inf if e == 0 else e0 / e


def build_vrf_table(product: str, results: dict, methods: Sequence[str]) -> VrfTable:
    """``results`` maps ``(strike, steps, method)`` to that cell's RunSummary list.

    The LR baseline (``lr-mc``) must be present for every strike/steps pair.
    """
    table = VrfTable(product, tuple(methods))
    for (strike, steps, method), runs in results.items():
        table.seconds[(strike, steps, method)] = float(np.mean([r.seconds for r in runs]))
        for greek in GREEKS:
            table.errors[(greek, strike, steps, method)] = aggregate(r[greek] for r in runs)
    for (greek, strike, steps, method), (_, sigma) in table.errors.items():
        base = table.errors.get((greek, strike, steps, "lr-mc"))
        if base is None:
            raise KeyError(f"missing lr-mc baseline for K={strike}, d={steps}")
        table.baseline[(greek, strike, steps)] = base[1] ** 2
        table.rows[(greek, strike, steps, method)] = 1.0 if method == "lr-mc" else vrf(base[1], sigma)
    return table
