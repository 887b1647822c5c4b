"""Brownian increments from standard normals.

Two constructions are offered.  :func:`standard_increments` scales each
normal by ``sqrt(dt)`` (left-to-right recursion).  :func:`bridge_increments`
spends the first normal on the terminal value and then halves every
interval level by level, so that the leading (best distributed) coordinates
of a Sobol' point decide the coarse shape of the path.

Both functions vectorise over leading axes; the time axis is the last one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError

__all__ = ["BridgePlan", "standard_increments", "bridge_increments", "is_power_of_two"]


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def standard_increments(z, dt: float) -> np.ndarray:
    """``dW_i = sqrt(dt) * z_i``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return np.sqrt(dt) * np.asarray(z, dtype=float)


@dataclass(frozen=True)
class BridgePlan:
    """Precomputed fill order for a ``2**m``-step bridge on ``[0, maturity]``.

    ``fill_order`` lists, level by level, tuples
    ``(normal_index, parent_interval, left_child, right_child)``.  Level ``k``
    splits each of the ``2**(k-1)`` current increments into two halves with
    conditional standard deviation ``scales[k-1] = sqrt(T / 2**(k+1))``.
    """

    steps: int
    maturity: float = 1.0
    levels: int = field(init=False)
    scales: tuple[float, ...] = field(init=False)
    fill_order: tuple[tuple[tuple[int, int, int, int], ...], ...] = field(init=False)

    def __post_init__(self):
        if not is_power_of_two(self.steps):
            raise ConfigurationError(f"Brownian bridge needs a power-of-two step count, got {self.steps}")
        if self.maturity <= 0:
            raise ConfigurationError("maturity must be positive")
        m = self.steps.bit_length() - 1
        object.__setattr__(self, "levels", m)
        object.__setattr__(
            self, "scales", tuple(float(np.sqrt(self.maturity / 2 ** (k + 1))) for k in range(1, m + 1))
        )
        order, idx = [], 0
        for k in range(1, m + 1):
            level = []
            for j in range(2 ** (k - 1) - 1, -1, -1):
                idx += 1
                level.append((idx, j, 2 * j, 2 * j + 1))
            order.append(tuple(level))
        object.__setattr__(self, "fill_order", tuple(order))


def bridge_increments(z, plan: BridgePlan) -> np.ndarray:
    """Brownian increments whose sum is ``sqrt(T) * z[..., 0]`` exactly.

    Normals are consumed in the order of ``plan.fill_order``: ``z_1`` for the
    terminal value, ``z_2`` for the midpoint, then the quarter points
    (right-hand interval first), and so on.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != plan.steps:
        raise ConfigurationError(f"expected {plan.steps} normals per path, got {z.shape[-1]}")
    x = np.sqrt(plan.maturity) * z[..., :1]
    for k, b in enumerate(plan.scales, start=1):
        width = 2 ** (k - 1)
        # parent j takes normal index width + (width-1-j)
        zk = z[..., width : 2 * width][..., ::-1]
        half = 0.5 * x
        nxt = np.empty(x.shape[:-1] + (2 * width,))
        nxt[..., 0::2] = half + b * zk
        nxt[..., 1::2] = half - b * zk
        x = nxt
    return x
