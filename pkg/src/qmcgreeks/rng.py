"""Reproducible uniform and normal variates.

Two families of source are provided:

* a counter-based pseudorandom stream (Philox4x64, period 2**256) whose
  variates are addressed by ``(seed, run, path, dimension)``, and
* a base-2 Sobol' sequence built from a bundled table of primitive
  polynomials and initial direction integers, optionally randomised by a
  linear matrix scramble plus a random digital shift.

Both map uniforms to normals through the inverse normal CDF only, so the
dimension structure of a low-discrepancy point set survives the transform.

Sobol' points are produced in natural order, ``x_k = a_0(k) g_1 xor a_1(k) g_2
xor ...``.  Gray-code order would only permute the points inside every
aligned block of ``2**m`` indices.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np
from scipy.special import ndtri

__all__ = [
    "BITS",
    "StreamSpec",
    "PrimitivePolynomial",
    "DirectionEntry",
    "SobolGenerator",
    "PseudoStream",
    "SobolStream",
    "radical_inverse",
    "expand_direction_numbers",
    "load_direction_table",
    "sobol_point",
    "scramble",
    "uniform_to_normal",
    "make_stream",
]

BITS = 32
_SCALE = 2.0 ** -BITS
_KINDS = ("pseudo", "sobol", "sobol-scrambled")


@dataclass(frozen=True)
class StreamSpec:
    """Everything needed to reproduce a variate stream.

    ``tag`` separates otherwise identical streams (one per simulation
    method) that share a user seed.
    """

    seed: int
    kind: str
    dimensions: int
    tag: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}; expected one of {_KINDS}")
        if self.dimensions < 1:
            raise ValueError("dimensions must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def radical_inverse(k: int, b: int = 2) -> float:
    """Reflect the base-``b`` digits of ``k`` about the radix point."""
    if b < 2:
        raise ValueError(f"base must be >= 2, got {b}")
    if k < 0:
        raise ValueError(f"index must be non-negative, got {k}")
    result, scale = 0.0, 1.0 / b
    while k:
        k, digit = divmod(k, b)
        result += digit * scale
        scale /= b
    return result


@dataclass(frozen=True)
class PrimitivePolynomial:
    """``x^q + c_1 x^(q-1) + ... + c_(q-1) x + 1`` over GF(2).

    ``degree == 0`` is used for the first Sobol' dimension, whose generator
    matrix is the identity.
    """

    degree: int
    coefficients: tuple[int, ...] = ()

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        if len(self.coefficients) != max(self.degree - 1, 0):
            raise ValueError(
                f"degree {self.degree} needs {max(self.degree - 1, 0)} coefficients, "
                f"got {len(self.coefficients)}"
            )
        if any(c not in (0, 1) for c in self.coefficients):
            raise ValueError("coefficients must be bits")

    @classmethod
    def from_code(cls, degree: int, code: int) -> "PrimitivePolynomial":
        """Decode the Joe-Kuo integer ``a`` whose bits are ``c_1 .. c_(q-1)``."""
        n = max(degree - 1, 0)
        return cls(degree, tuple((code >> (n - 1 - i)) & 1 for i in range(n)))

    @property
    def code(self) -> int:
        value = 0
        for c in self.coefficients:
            value = (value << 1) | c
        return value

    def as_int(self) -> int:
        """Full bit pattern including the leading and constant terms."""
        if self.degree == 0:
            return 1
        return (1 << self.degree) | (self.code << 1) | 1


def expand_direction_numbers(
    poly: PrimitivePolynomial, initial: Sequence[int], count: int = BITS
) -> list[int]:
    """Extend the initial direction integers ``m_1..m_q`` to ``m_1..m_count``.

    Uses ``m_j = 2 c_1 m_(j-1) xor 4 c_2 m_(j-2) xor ... xor 2^q m_(j-q) xor m_(j-q)``.
    """
    q = poly.degree
    initial = [int(m) for m in initial]
    if q == 0:
        if initial and any(m != 1 for m in initial):
            raise ValueError("identity dimension takes no initial values other than 1")
        return [1] * count
    if len(initial) != q:
        raise ValueError(f"expected {q} initial values, got {len(initial)}")
    for j, m in enumerate(initial, start=1):
        if m % 2 == 0 or not 0 < m < 2**j:
            raise ValueError(f"m_{j} = {m} must be odd and less than 2^{j}")
    m = initial[:count]
    for j in range(q, count):
        value = (m[j - q] << q) ^ m[j - q]
        for i, c in enumerate(poly.coefficients, start=1):
            if c:
                value ^= m[j - i] << i
        m.append(value)
    return m


@dataclass(frozen=True)
class DirectionEntry:
    dim: int
    poly: PrimitivePolynomial
    initial: tuple[int, ...]

    def expanded(self, count: int = BITS) -> list[int]:
        return expand_direction_numbers(self.poly, self.initial, count)


@lru_cache(maxsize=None)
def load_direction_table() -> tuple[DirectionEntry, ...]:
    """Parse the bundled ``dim q a m1..mq`` table."""
    text = resources.files("qmcgreeks").joinpath("data/sobol_directions.txt").read_text()
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [int(f) for f in line.split()]
        dim, q, code, initial = fields[0], fields[1], fields[2], tuple(fields[3:])
        if len(initial) != q:
            raise ValueError(f"direction table line {lineno}: expected {q} initial values")
        entries.append(DirectionEntry(dim, PrimitivePolynomial.from_code(q, code), initial))
    for i, e in enumerate(entries, start=1):
        if e.dim != i:
            raise ValueError(f"direction table out of order at dimension {e.dim}")
    return tuple(entries)


def _direction_integers(dimensions: int) -> np.ndarray:
    table = load_direction_table()
    if dimensions > len(table):
        raise ValueError(f"only {len(table)} Sobol' dimensions are bundled, asked for {dimensions}")
    v = np.empty((dimensions, BITS), dtype=np.uint32)
    for i in range(dimensions):
        m = table[i].expanded(BITS)
        v[i] = [mj << (BITS - j) for j, mj in enumerate(m, start=1)]
    return v


class SobolGenerator:
    """Sobol' point set with optional linear scramble and digital shift.

    ``directions[i, j]`` holds the 32-bit fixed-point direction number
    ``g_(j+1)`` of dimension ``i`` (after scrambling, if any).  Apart from
    ``counter``, used by :meth:`next_points`, instances are read-only and
    can be shared between threads.
    """

    def __init__(self, dimensions: int, directions=None, shift=None):
        if dimensions < 1:
            raise ValueError("dimensions must be >= 1")
        self.dimensions = dimensions
        if directions is None:
            directions = _direction_integers(dimensions)
        self.directions = np.asarray(directions, dtype=np.uint32)
        if self.directions.shape != (dimensions, BITS):
            raise ValueError("direction array has the wrong shape")
        self.shift = (
            np.zeros(dimensions, dtype=np.uint32) if shift is None else np.asarray(shift, dtype=np.uint32)
        )
        self.directions.setflags(write=False)
        self.shift.setflags(write=False)
        self.counter = 0

    def point_bits(self, start: int, count: int) -> np.ndarray:
        """Integer points ``start .. start+count-1`` as a (dimensions, count) array."""
        if start < 0 or count < 0:
            raise ValueError("start and count must be non-negative")
        if count == 0:
            return np.empty((self.dimensions, 0), dtype=np.uint32)
        if start + count - 1 >= 2**BITS:
            raise ValueError(f"point index exceeds 2^{BITS}")
        first = self.shift.copy()
        k, j = start, 0
        while k:
            if k & 1:
                first ^= self.directions[:, j]
            k >>= 1
            j += 1
        # x_k = x_(k-1) xor (g_1 xor ... xor g_(c+1)), c = trailing zeros of k
        prefix = np.bitwise_xor.accumulate(self.directions, axis=1)
        k = np.arange(start + 1, start + count, dtype=np.int64)
        ctz = np.bitwise_count((k & -k) - 1).astype(np.intp)
        steps = np.empty((self.dimensions, count), dtype=np.uint32)
        steps[:, 0] = first
        steps[:, 1:] = prefix[:, ctz]
        return np.bitwise_xor.accumulate(steps, axis=1)

    def points(self, start: int, count: int) -> np.ndarray:
        """Points as exact binary fractions in [0, 1), dimension-major."""
        return self.point_bits(start, count) * _SCALE

    def next_points(self, count: int) -> np.ndarray:
        pts = self.points(self.counter, count)
        self.counter += count
        return pts


def sobol_point(gen: SobolGenerator, dim: int, k: int) -> float:
    """Coordinate ``dim`` (0-based) of point ``k``."""
    if not 0 <= dim < gen.dimensions:
        raise IndexError(f"dimension {dim} out of range for {gen.dimensions}-dimensional generator")
    if k < 0:
        raise ValueError("point index must be non-negative")
    x = int(gen.shift[dim])
    j = 0
    while k:
        if k & 1:
            x ^= int(gen.directions[dim, j])
        k >>= 1
        j += 1
    return x * _SCALE


def _random_lower_triangular(rng: np.random.Generator, dims: int) -> np.ndarray:
    # Row i produces output digit i+1 (bit 31-i): unit diagonal plus random
    # dependence on the more significant input digits only.
    rows = np.zeros((dims, BITS), dtype=np.uint32)
    for i in range(BITS):
        diag = np.uint32(1 << (BITS - 1 - i))
        if i == 0:
            rows[:, i] = diag
            continue
        above = rng.integers(0, 1 << i, size=dims, dtype=np.uint64).astype(np.uint32)
        rows[:, i] = (above << np.uint32(BITS - i)) | diag
    return rows


def _apply_rows(rows: np.ndarray, columns: np.ndarray) -> np.ndarray:
    # y bit (31-i) = parity(rows[i] & column), per dimension
    parity = np.bitwise_count(rows[:, :, None] & columns[:, None, :]) & 1
    weights = (np.uint32(1) << np.arange(BITS - 1, -1, -1, dtype=np.uint32))[None, :, None]
    return np.bitwise_or.reduce(parity.astype(np.uint32) * weights, axis=1)


def scramble(gen: SobolGenerator, seed, rows=None, shift=None) -> SobolGenerator:
    """Return a randomised copy of ``gen``.

    Each dimension gets an independent lower-triangular bit matrix with unit
    diagonal and a uniform 32-bit XOR shift.  ``rows``/``shift`` may be given
    explicitly, which is how tests pin the identity scramble.  Elementary
    dyadic intervals are mapped onto elementary intervals, so net
    stratification is kept.
    """
    rng = np.random.default_rng(seed)
    if rows is None:
        rows = _random_lower_triangular(rng, gen.dimensions)
    if shift is None:
        shift = rng.integers(0, 2**BITS, size=gen.dimensions, dtype=np.uint64).astype(np.uint32)
    rows = np.asarray(rows, dtype=np.uint32)
    directions = _apply_rows(rows, gen.directions)
    new_shift = _apply_rows(rows, gen.shift[:, None])[:, 0] ^ np.asarray(shift, dtype=np.uint32)
    return SobolGenerator(gen.dimensions, directions, new_shift)


def identity_rows(dims: int) -> np.ndarray:
    diag = np.uint32(1) << np.arange(BITS - 1, -1, -1, dtype=np.uint32)
    return np.broadcast_to(diag, (dims, BITS)).copy()


def uniform_to_normal(u):
    """Inverse standard normal CDF, for ``u`` strictly inside (0, 1)."""
    arr = np.asarray(u, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("uniform_to_normal needs 0 < u < 1")
    out = ndtri(arr)
    return float(out) if np.ndim(out) == 0 else out


def _derive_key(*words: int) -> np.ndarray:
    return np.random.SeedSequence(list(words)).generate_state(2, dtype=np.uint64)


class PseudoStream:
    """Philox4x64 variates addressed by (run, path, dimension).

    Path ``p`` of run ``r`` reads the Philox blocks starting at counter
    ``p * ceil(d / 4)`` under a key derived from ``(seed, tag, r)``, so any
    slice of paths can be produced independently and the result does not
    depend on how a run is split across workers.
    """

    def __init__(self, spec: StreamSpec):
        if spec.kind != "pseudo":
            raise ValueError("PseudoStream needs kind='pseudo'")
        self.spec = spec
        self.dimensions = spec.dimensions
        self._blocks = -(-spec.dimensions // 4)

    def uniforms(self, run: int, start: int, count: int) -> np.ndarray:
        d, q = self.dimensions, self._blocks
        counter = np.array([start * q, 0, 0, 0], dtype=np.uint64)
        bitgen = np.random.Philox(key=_derive_key(self.spec.seed, self.spec.tag, run), counter=counter)
        raw = bitgen.random_raw(count * q * 4).reshape(count, 4 * q)[:, :d]
        return ((raw.T >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def normals(self, run: int, start: int, count: int) -> np.ndarray:
        return ndtri(self.uniforms(run, start, count))


class SobolStream:
    """Sobol' variates; path ``p`` is point index ``p``, dimension ``i`` feeds step ``i``.

    For ``sobol-scrambled`` each run gets its own independent scramble, so
    runs are independent randomised QMC replicates.  Uniforms are taken at
    the centre of each 2**-32 cell, which keeps them inside (0, 1) without
    disturbing the dyadic structure.
    """

    def __init__(self, spec: StreamSpec):
        if spec.kind not in ("sobol", "sobol-scrambled"):
            raise ValueError("SobolStream needs a sobol kind")
        self.spec = spec
        self.dimensions = spec.dimensions
        self._base = SobolGenerator(spec.dimensions)
        self._cache: dict[int, SobolGenerator] = {}
        self._lock = threading.Lock()

    def generator(self, run: int) -> SobolGenerator:
        if self.spec.kind == "sobol":
            return self._base
        with self._lock:
            gen = self._cache.get(run)
            if gen is None:
                seed = np.random.SeedSequence([self.spec.seed, self.spec.tag, run])
                gen = self._cache[run] = scramble(self._base, seed)
            return gen

    def uniforms(self, run: int, start: int, count: int) -> np.ndarray:
        bits = self.generator(run).point_bits(start, count)
        return (bits.astype(np.float64) + 0.5) * _SCALE

    def normals(self, run: int, start: int, count: int) -> np.ndarray:
        return ndtri(self.uniforms(run, start, count))


def make_stream(spec: StreamSpec):
    if spec.kind == "pseudo":
        return PseudoStream(spec)
    return SobolStream(spec)
