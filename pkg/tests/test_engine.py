import math
import threading

import numpy as np
import pytest

from qmcgreeks.engine import (
    METHODS,
    MethodSpec,
    antithetic_pair,
    inverse_layout_transform,
    layout_transform,
    pairwise_sum,
    run_method,
    run_methods,
)
from qmcgreeks.exceptions import ConfigurationError
from qmcgreeks.products import (
    ARITHMETIC,
    BINARY,
    EUROPEAN,
    LOOKBACK,
    GreekSample,
    MarketParams,
    ProductSpec,
    cpw_greeks,
    european_call_sample,
    simulate_path,
)
from qmcgreeks.rng import PseudoStream, StreamSpec

MP = MarketParams()


def _walk_oracle(buf, P, d, B):
    # literal index walk: group by group, dimension by dimension, path by path
    out = [None] * (P * d)
    desired = 0
    for g in range(P // B):
        for k in range(d):
            for i in range(B):
                out[desired] = buf[k * P + g * B + i]
                desired += 1
    return out


# --- layout ----------------------------------------------------------------

def test_layout_example():
    vb = layout_transform(np.array(["d1p1", "d1p2", "d2p1", "d2p2"]), 2, 2, 1)
    assert list(vb.data) == ["d1p1", "d2p1", "d1p2", "d2p2"]


def test_layout_single_dimension_is_identity():
    buf = np.arange(12.0)
    np.testing.assert_array_equal(layout_transform(buf, 12, 1, 4).data, buf)


@pytest.mark.parametrize("P, d, B", [(8, 4, 2), (16, 3, 4), (64, 5, 64), (6, 2, 3)])
def test_layout_matches_index_walk_and_round_trips(P, d, B):
    buf = np.arange(P * d)
    vb = layout_transform(buf, P, d, B)
    assert list(vb.data) == _walk_oracle(list(buf), P, d, B)
    np.testing.assert_array_equal(inverse_layout_transform(vb), buf)
    assert sorted(vb.data) == list(buf)  # every cell exactly once
    # per-path view recovers (path, dim)
    per = vb.per_path().reshape(P, d)
    np.testing.assert_array_equal(per, buf.reshape(d, P).T)


def test_layout_errors():
    with pytest.raises(ConfigurationError):
        layout_transform(np.zeros(7), 2, 4, 1)
    with pytest.raises(ConfigurationError):
        layout_transform(np.zeros(12), 6, 2, 4)


# --- stub streams ----------------------------------------------------------

class ZeroStream:
    def __init__(self, d):
        self.d = d

    def normals(self, run, start, count):
        return np.zeros((self.d, count))


class CountingStream:
    """Wraps a real stream and records every (run, path) it hands out."""

    def __init__(self, inner):
        self.inner = inner
        self.seen = {}
        self.cells = 0
        self._lock = threading.Lock()

    def normals(self, run, start, count):
        out = self.inner.normals(run, start, count)
        with self._lock:
            for p in range(start, start + count):
                self.seen[(run, p)] = self.seen.get((run, p), 0) + 1
            self.cells += out.size
        return out


@pytest.mark.parametrize("kind", [ARITHMETIC, BINARY, LOOKBACK])
def test_single_zero_path_equals_estimator(kind):
    d = 8
    spec = ProductSpec(kind, 100, d)
    runs = run_method(MP, spec, MethodSpec("mc-cpw", 1, 2), stream=ZeroStream(d))
    g = cpw_greeks(simulate_path(MP, spec, 0.0, np.zeros(d - 1)), MP, spec)
    for r in runs:
        for f in ("price", "delta", "vega", "gamma"):
            assert r[f] == float(getattr(g, f))


@pytest.mark.parametrize("method", METHODS)
def test_stream_hygiene(method):
    d, P, L = 8, 1000, 3
    ms = MethodSpec(method, P, L, seed=9, chunk_size=128)
    counter = CountingStream(PseudoStream(StreamSpec(9, "pseudo", d)))
    run_method(MP, ProductSpec(ARITHMETIC, 100, d), ms, workers=3, stream=counter)
    assert set(counter.seen) == {(r, p) for r in range(L) for p in range(P)}
    assert set(counter.seen.values()) == {1}
    assert counter.cells == L * P * d


def test_runs_and_methods_draw_distinct_variates():
    d = 4
    a = MethodSpec("mc-cpw", 8, 2, seed=1).stream_spec(d)
    b = MethodSpec("lr-mc", 8, 2, seed=1).stream_spec(d)
    sa, sb = PseudoStream(a), PseudoStream(b)
    assert not np.array_equal(sa.normals(0, 0, 8), sa.normals(1, 0, 8))
    assert not np.array_equal(sa.normals(0, 0, 8), sb.normals(0, 0, 8))


# --- antithetic ------------------------------------------------------------

def _sample(x):
    return GreekSample(x, 2 * x, 3 * x, 4 * x)


def test_antithetic_odd_and_even():
    z = np.linspace(-2, 2, 9)
    odd = antithetic_pair(_sample(z**3), _sample((-z) ** 3))
    assert np.all(odd.price == 0) and np.all(odd.gamma == 0)
    even = antithetic_pair(_sample(z**2), _sample((-z) ** 2))
    np.testing.assert_array_equal(even.delta, 2 * z**2)


def test_antithetic_linear_payoff_has_zero_variance():
    z = PseudoStream(StreamSpec(4, "pseudo", 16)).normals(0, 0, 4096).T
    w = np.linspace(0.5, 1.5, 16)
    linear = lambda x: 3.0 + x @ w
    pair = antithetic_pair(_sample(linear(z)), _sample(linear(-z)))
    assert np.var(pair.price) <= 1e-24
    assert np.var(pair.vega) <= 1e-24


def test_antithetic_reduces_european_variance():
    n = 2**14
    spec = ProductSpec(EUROPEAN, 100, 1)
    z = PseudoStream(StreamSpec(8, "pseudo", 1)).normals(0, 0, 2 * n)[0]
    pairs = antithetic_pair(european_call_sample(MP, spec, z[:n]), european_call_sample(MP, spec, -z[:n]))
    plain = european_call_sample(MP, spec, z).price
    # same cost: one pair against two independent draws
    assert np.var(pairs.price) <= np.var(plain) / 2


# --- determinism and validation --------------------------------------------

@pytest.mark.parametrize("method", METHODS)
def test_worker_count_does_not_change_results(method):
    specs = [ProductSpec(k, K, 16) for k in (ARITHMETIC, LOOKBACK) for K in (90, 110)]
    ms = MethodSpec(method, 3000, 3, seed=77, chunk_size=256)
    one = run_methods(MP, specs, ms, workers=1)
    four = run_methods(MP, specs, ms, workers=4)
    for s in specs:
        assert [r.estimates for r in one[s]] == [r.estimates for r in four[s]]


def test_pairwise_sum_shape_is_fixed():
    parts = [np.array([x]) for x in (1e16, 1.0, -1e16, 1.0, 3.0)]
    assert pairwise_sum(parts)[0] == ((1e16 + 1.0) + (-1e16 + 1.0)) + 3.0
    with pytest.raises(ValueError):
        pairwise_sum([])


def test_bridge_needs_power_of_two():
    with pytest.raises(ConfigurationError):
        run_method(MP, ProductSpec(ARITHMETIC, 100, 12), MethodSpec("qmc-bb-cpw", 8, 2))
    # the other methods accept any step count
    run_method(MP, ProductSpec(ARITHMETIC, 100, 12), MethodSpec("qmc-cpw", 8, 2))


def test_invalid_requests():
    with pytest.raises(ConfigurationError):
        MethodSpec("pw-mc", 8, 2)
    with pytest.raises(ConfigurationError):
        MethodSpec("mc-cpw", 0, 2)
    with pytest.raises(ConfigurationError):
        run_method(MP, ProductSpec(EUROPEAN, 100, 1), MethodSpec("mc-cpw", 8, 2))
    with pytest.raises(ConfigurationError):
        run_methods(MP, [ProductSpec(ARITHMETIC, 100, 8), ProductSpec(ARITHMETIC, 100, 16)], MethodSpec("mc-cpw", 8, 2))


def test_run_summaries_are_labelled():
    runs = run_method(MP, ProductSpec(BINARY, 110, 8), MethodSpec("qmc-bb-cpw", 64, 3, seed=1))
    assert [r.run for r in runs] == [0, 1, 2]
    assert {(r.method, r.product, r.strike, r.steps, r.paths) for r in runs} == {
        ("qmc-bb-cpw", BINARY, 110, 8, 64)
    }
    assert len({r["delta"] for r in runs}) == 3  # independent scrambles
    assert all(math.isfinite(r["gamma"]) for r in runs)
