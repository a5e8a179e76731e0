"""Dual-path kernel equivalence and the env-flag fallback switch."""

import os
import subprocess
import sys

import numpy as np
import pytest

from sebrange import kernels
from sebrange.rng import Rng

MASK = (1 << 64) - 1


def splitmix64_reference(seed, i):
    """Independent big-int implementation of the stream word."""
    z = (seed + (i + 1) * 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def test_splitmix64_matches_bigint_reference():
    for seed in (0, 1, 42, 2**63 + 12345, MASK):
        got = kernels.splitmix64(seed, np.arange(20, dtype=np.uint64))
        expected = [splitmix64_reference(seed, i) for i in range(20)]
        assert [int(x) for x in got] == expected


def test_splitmix64_block_rows_match_streams():
    seeds = np.array([3, 999, 2**40], dtype=np.uint64)
    block = kernels.splitmix64_block(seeds, 17)
    for row, seed in zip(block, seeds):
        assert np.array_equal(row, kernels.splitmix64(int(seed), np.arange(17)))


@pytest.mark.skipif(not kernels.NUMBA_ENABLED, reason="numba disabled")
class TestPathsBitIdentical:
    def test_mix64(self):
        z = Rng(5).raw(10_000)
        assert np.array_equal(kernels.mix64_numba(z), kernels.mix64_numpy(z))

    def test_scatter_add_rows(self):
        r = Rng(9)
        x = r.normal(size=(200, 8))
        take = r.integers(200, size=(5_000,))
        put = r.integers(120, size=(5_000,))
        a = kernels.scatter_add_rows_numba(x, take, put, 120)
        b = kernels.scatter_add_rows_numpy(x, take, put, 120)
        assert np.array_equal(a, b)

    def test_temperature_scan(self):
        r = Rng(13)
        power = r.uniform(0.0, 6.0, size=(50, 64))
        ambient = r.uniform(12.0, 28.0, size=(50,))
        a = kernels.temperature_scan_numba(power, ambient, 0.75, 0.15, ambient)
        b = kernels.temperature_scan_numpy(power, ambient, 0.75, 0.15, ambient)
        assert np.array_equal(a, b)


def test_env_flag_forces_numpy_path():
    env = dict(os.environ, SEBRANGE_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c",
         "from sebrange import kernels; print(kernels.NUMBA_ENABLED)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "False"


def test_scatter_empty_edges():
    out = kernels.scatter_add_rows(np.ones((3, 2)), np.array([], dtype=np.int64),
                                   np.array([], dtype=np.int64), 3)
    assert np.array_equal(out, np.zeros((3, 2)))
