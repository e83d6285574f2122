import os
import subprocess
import sys

import numpy as np
import pytest

from vdfcommittee import kernels

needs_numba = pytest.mark.skipif(kernels.numba_kernels is None, reason="numba not available")


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(5)
    sks = rng.integers(0, 2 ** 63, size=257, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
    words = rng.integers(0, 2 ** 63, size=33, dtype=np.uint64)
    mask = rng.random(257) < 0.7
    return sks, words, mask


def test_numpy_mix_matches_scalar_reference(data):
    sks, words, _ = data
    w = int(words[0])
    ref = np.array([kernels.mix_scalar(int(s), w) for s in sks], dtype=np.uint64)
    assert np.array_equal(kernels.numpy_kernels.mix_batch(sks, w), ref)


def test_count_below_matches_direct_count(data):
    sks, words, mask = data
    top = kernels.unit_threshold(0.2)
    got = kernels.numpy_kernels.count_below(sks, words, top, mask)
    for j, w in enumerate(words.tolist()):
        m = kernels.numpy_kernels.mantissas(sks, w)
        assert got[j] == int(np.sum((m <= top) & mask))


@needs_numba
def test_backends_identical(data):
    sks, words, mask = data
    nb, npk = kernels.numba_kernels, kernels.numpy_kernels
    w = int(words[3])
    assert np.array_equal(nb.mix_batch(sks, w), npk.mix_batch(sks, w))
    assert np.array_equal(nb.mantissas(sks, w), npk.mantissas(sks, w))
    top = kernels.unit_threshold(0.05)
    assert np.array_equal(nb.count_below(sks, words, top, mask), npk.count_below(sks, words, top, mask))
    u = np.random.default_rng(1).random((40, 300))
    assert np.array_equal(nb.bernoulli_sums(u, 0.3), npk.bernoulli_sums(u, 0.3))


def test_unit_threshold_exact():
    assert kernels.unit_threshold(-0.1) == -1
    assert kernels.unit_threshold(0.0) == 0
    assert kernels.unit_threshold(0.0, strict=True) == -1
    assert kernels.unit_threshold(1.0) == 2 ** 53 - 1
    assert kernels.unit_threshold(0.5) == 2 ** 52
    assert kernels.unit_threshold(0.5, strict=True) == 2 ** 52 - 1


def test_env_flag_selects_numpy():
    env = dict(os.environ, VDFCOMMITTEE_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from vdfcommittee import kernels; print(kernels.BACKEND, kernels.numba_kernels)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split() == ["numpy", "None"]
