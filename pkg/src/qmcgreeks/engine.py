"""Simulation driver for the five Greek estimation methods.

=============  =================  ==============  ==========
method         variates           increments      estimator
=============  =================  ==============  ==========
``lr-mc``      Philox             left to right   LR
``mc-cpw``     Philox             left to right   CPW
``mc-av-cpw``  Philox, z and -z   left to right   CPW
``qmc-cpw``    scrambled Sobol'   left to right   CPW
``qmc-bb-cpw`` scrambled Sobol'   bridge          CPW
=============  =================  ==============  ==========

Every path consumes ``d`` normals.  Path ``p`` of run ``l`` uses pseudo
variates addressed by ``(seed, method, l, p)`` or Sobol' point ``p`` of the
``l``-th independent scramble, with Sobol' dimension ``i`` feeding normal
``z_(i+1)``.  The ``d`` normals become ``d`` Brownian increments on
``[0, T]``; the first gives ``x_1 = W(t_1)/sqrt(t_1)`` and the rest are the
increments of the shifted motion on ``(t_1, T]``.

Work is split into fixed-size chunks of paths.  Chunk sums are merged by a
fixed pairwise tree, so results are bit-identical for any worker count.
For ``mc-av-cpw`` the path count ``P`` counts antithetic pairs; each run
simulates ``2P`` paths.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bridge import BridgePlan, bridge_increments, is_power_of_two
from .exceptions import ConfigurationError
from .products import (
    PATH_PRODUCTS,
    GreekSample,
    MarketParams,
    ProductSpec,
    cpw_greeks,
    discounted_payoff,
    lr_greeks,
    lr_scores,
    simulate_path,
)
from .rng import StreamSpec, make_stream
from .stats import RunSummary

__all__ = [
    "METHODS",
    "METHOD_LABELS",
    "MethodSpec",
    "VariateBlock",
    "layout_transform",
    "inverse_layout_transform",
    "antithetic_pair",
    "run_method",
    "run_methods",
    "pairwise_sum",
]

METHODS = ("lr-mc", "mc-cpw", "mc-av-cpw", "qmc-cpw", "qmc-bb-cpw")
METHOD_LABELS = {
    "lr-mc": "LR+MC",
    "mc-cpw": "MC-CPW",
    "mc-av-cpw": "MC+AV-CPW",
    "qmc-cpw": "QMC-CPW",
    "qmc-bb-cpw": "QMC+BB-CPW",
}
_FIELDS = ("price", "delta", "vega", "gamma")


@dataclass(frozen=True)
class MethodSpec:
    method: str
    paths: int
    runs: int
    seed: int = 0
    block_size: int = 64
    chunk_size: int = 2048

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.paths < 1 or self.runs < 1:
            raise ConfigurationError("paths and runs must be positive")
        if self.block_size < 1 or self.chunk_size < 1:
            raise ConfigurationError("block and chunk sizes must be positive")

    @property
    def antithetic(self) -> bool:
        return self.method == "mc-av-cpw"

    @property
    def bridge(self) -> bool:
        return self.method == "qmc-bb-cpw"

    def stream_spec(self, steps: int) -> StreamSpec:
        kind = "sobol-scrambled" if self.method.startswith("qmc") else "pseudo"
        return StreamSpec(self.seed, kind, steps, tag=METHODS.index(self.method))


@dataclass
class VariateBlock:
    """Normals regrouped so each block of ``block`` paths reads step ``k`` contiguously.

    ``data`` is flat with layout ``[group][step][path in group]``.
    """

    data: np.ndarray
    paths: int
    dims: int
    block: int

    def blocks(self) -> np.ndarray:
        return self.data.reshape(self.paths // self.block, self.dims, self.block)

    def per_path(self) -> np.ndarray:
        """View with shape (groups, block, dims): path-indexed, steps last."""
        return self.blocks().swapaxes(1, 2)


def layout_transform(buffer, paths: int, dims: int, block: int) -> VariateBlock:
    """Reorder a dimension-major buffer (``buffer[k * paths + p]``) into block groups.

    Element ``(p, k)`` moves to ``(p // block) * dims * block + k * block + p % block``.
    """
    buffer = np.asarray(buffer)
    if buffer.size != paths * dims:
        raise ConfigurationError(f"buffer has {buffer.size} values, expected {paths}*{dims}")
    if block < 1 or paths % block:
        raise ConfigurationError(f"block size {block} must divide path count {paths}")
    out = buffer.reshape(dims, paths // block, block).transpose(1, 0, 2)
    return VariateBlock(np.ascontiguousarray(out).ravel(), paths, dims, block)


def inverse_layout_transform(vb: VariateBlock) -> np.ndarray:
    return np.ascontiguousarray(vb.blocks().transpose(1, 0, 2)).ravel()


def antithetic_pair(sample: GreekSample, mirror: GreekSample) -> GreekSample:
    """Average the estimates from ``z`` and ``-z``."""
    return GreekSample(
        *(0.5 * (getattr(sample, f) + getattr(mirror, f)) for f in _FIELDS)
    )


def pairwise_sum(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Sum in a fixed balanced tree so the rounding does not depend on scheduling."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to sum")
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _check(mp: MarketParams, specs: Sequence[ProductSpec], ms: MethodSpec) -> int:
    if not specs:
        raise ConfigurationError("no products given")
    steps = {s.steps for s in specs}
    if len(steps) != 1:
        raise ConfigurationError("all products in one call must share the step count")
    for s in specs:
        if s.kind not in PATH_PRODUCTS:
            raise ConfigurationError(f"{s.kind!r} is not a path-dependent product")
    (d,) = steps
    if ms.bridge and not is_power_of_two(d):
        raise ConfigurationError(f"{ms.method} needs a power-of-two step count, got {d}")
    return d


class _Simulator:
    def __init__(self, mp, specs, ms, stream, d):
        self.mp, self.specs, self.ms, self.stream, self.d = mp, list(specs), ms, stream, d
        self.dt = mp.T / d
        self.plan = BridgePlan(d, mp.T) if ms.bridge else None
        self.sim_spec = self.specs[0]

    def chunks(self):
        size = self.ms.chunk_size
        return [(s, min(size, self.ms.paths - s)) for s in range(0, self.ms.paths, size)]

    def _estimates(self, z) -> list[GreekSample]:
        dW = bridge_increments(z, self.plan) if self.plan is not None else math.sqrt(self.dt) * z
        x1 = dW[..., 0] / math.sqrt(self.dt)
        ps = simulate_path(self.mp, self.sim_spec, x1, dW[..., 1:])
        if self.ms.method == "lr-mc":
            scores = lr_scores(z, self.mp, self.sim_spec)
            return [lr_greeks(discounted_payoff(ps, self.mp, s), z, self.mp, s, scores) for s in self.specs]
        return [cpw_greeks(ps, self.mp, s) for s in self.specs]

    def chunk(self, run: int, start: int, count: int) -> np.ndarray:
        """Per-product sums of (price, delta, vega, gamma) over one chunk of paths."""
        normals = self.stream.normals(run, start, count)
        block = math.gcd(self.ms.block_size, count)
        z = layout_transform(normals, count, self.d, block).per_path()
        samples = self._estimates(z)
        if self.ms.antithetic:
            samples = [antithetic_pair(a, b) for a, b in zip(samples, self._estimates(-z))]
        return np.array([[np.sum(getattr(g, f)) for f in _FIELDS] for g in samples])


def run_methods(
    mp: MarketParams,
    specs: Sequence[ProductSpec],
    ms: MethodSpec,
    workers: int = 1,
    stream=None,
) -> dict[ProductSpec, list[RunSummary]]:
    """Run ``ms.runs`` independent runs, evaluating every product on the same paths.

    ``stream`` overrides the variate source (anything with a
    ``normals(run, start, count)`` method returning a (d, count) array).
    """
    d = _check(mp, specs, ms)
    if stream is None:
        stream = make_stream(ms.stream_spec(d))
    sim = _Simulator(mp, specs, ms, stream, d)
    chunks = sim.chunks()
    tasks = [(run, start, count) for run in range(ms.runs) for start, count in chunks]

    t0 = time.perf_counter()
    if workers <= 1:
        sums = [sim.chunk(*t) for t in tasks]
    else:
        if hasattr(stream, "generator"):
            for run in range(ms.runs):
                stream.generator(run)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sums = list(pool.map(lambda t: sim.chunk(*t), tasks))
    per_run = (time.perf_counter() - t0) / ms.runs

    n = len(chunks)
    out = {s: [] for s in specs}
    for run in range(ms.runs):
        total = pairwise_sum(sums[run * n : (run + 1) * n]) / ms.paths
        for i, s in enumerate(specs):
            est = {f: float(total[i, j]) for j, f in enumerate(_FIELDS)}
            out[s].append(RunSummary(ms.method, s.kind, s.strike, s.steps, ms.paths, run, est, per_run))
    return out


def run_method(mp: MarketParams, spec: ProductSpec, ms: MethodSpec, workers: int = 1, stream=None) -> list[RunSummary]:
    """One product; returns ``ms.runs`` summaries."""
    return run_methods(mp, [spec], ms, workers=workers, stream=stream)[spec]
