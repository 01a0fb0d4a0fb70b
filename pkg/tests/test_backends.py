"""Compiled and pure step kernels must be interchangeable.

Every test runs the public API twice under KALZAK_BACKEND and compares.
The two implementations share the exact splitting, so agreement is at
rounding level, not at discretization level.
"""

import numpy as np
import pytest

import kalzak as kz
from kalzak import _backends

pytestmark = pytest.mark.skipif(not _backends.HAVE_COMPILED,
                                reason="compiled extension not built")


def both(monkeypatch, fn):
    out = {}
    for name in ("pure", "compiled"):
        monkeypatch.setenv("KALZAK_BACKEND", name)
        assert _backends.active_name() == name
        out[name] = fn()
    return out["pure"], out["compiled"]


def test_env_var_is_read_per_call(monkeypatch):
    monkeypatch.setenv("KALZAK_BACKEND", "pure")
    assert _backends.active_name() == "pure"
    monkeypatch.setenv("KALZAK_BACKEND", "auto")
    assert _backends.active_name() == "compiled"
    monkeypatch.setenv("KALZAK_BACKEND", "bogus")
    with pytest.raises(ValueError, match="KALZAK_BACKEND"):
        _backends.active_name()


def test_simulated_paths_agree(classic, monkeypatch):
    a, b = both(monkeypatch,
                lambda: kz.simulate_paths(classic, 0.5, 0.001, seed=12)[0])
    assert np.max(np.abs(a.z - b.z)) < 1e-12
    assert np.array_equal(a.dW, b.dW)


def test_filter_triples_agree(monkeypatch):
    spec = kz.scalar_correlated(0.5)

    def run():
        path = kz.simulate_paths(spec, 0.5, 0.001, seed=12)[0]
        return kz.run_filter(spec, path)

    a, b = both(monkeypatch, run)
    assert np.max(np.abs(a.W - b.W)) < 1e-10
    assert np.max(np.abs(a.V - b.V)) < 1e-10
    assert np.max(np.abs(a.U - b.U)) < 1e-10


def test_densities_agree(classic, monkeypatch):
    def run():
        path = kz.simulate_paths(classic, 0.25, 0.001, seed=19)[0]
        frun = kz.run_filter(classic, path)
        direct = kz.run_zakai(classic, path, h=0.05, filter_run=frun)
        reduced = kz.run_reduced(classic, path, filter_run=frun, h=0.05,
                                 L=direct.L)
        return direct.series, reduced.series

    (da, ra), (db, rb) = both(monkeypatch, run)
    assert np.max(np.abs(da - db)) < 1e-10
    assert np.max(np.abs(ra - rb)) < 1e-10


def test_each_backend_replays_bit_for_bit(classic, monkeypatch):
    for name in ("pure", "compiled"):
        monkeypatch.setenv("KALZAK_BACKEND", name)
        path = kz.simulate_paths(classic, 0.2, 0.001, seed=33)[0]
        r1 = kz.run_zakai(classic, path, h=0.1)
        r2 = kz.run_zakai(classic, path, h=0.1)
        assert np.array_equal(r1.series, r2.series), name
