import hashlib

import numpy as np
import pytest
from scipy import stats

from vdfcommittee import sortition as srt
from vdfcommittee.errors import ConfigurationError

M64 = (1 << 64) - 1


def _oracle_word(sk: int, ctx: bytes) -> int:
    """Independent re-statement of the keyed mix, written from the constants alone."""
    w = int.from_bytes(hashlib.blake2b(ctx, digest_size=8, person=b"fmine-ctx").digest(), "big")

    def fmix(x):
        x ^= x >> 33
        x = (x * 0xFF51AFD7ED558CCD) & M64
        x ^= x >> 33
        x = (x * 0xC4CEB9FE1A85EC53) & M64
        return x ^ (x >> 33)

    x = fmix(((w ^ sk) + 0x9E3779B97F4A7C15) & M64)
    return fmix(x ^ ((sk * 0xD6E8FEB86659FD93) & M64))


@pytest.fixture(scope="module")
def keys():
    return srt.gen_keys(7, 16)


def test_gen_keys_deterministic_and_seed_sensitive():
    a, b = srt.gen_keys(7, 4), srt.gen_keys(7, 4)
    assert a == b
    assert [k.sk for k in a] != [k.sk for k in srt.gen_keys(8, 4)]


def test_gen_keys_distinct_public_keys():
    pairs = srt.gen_keys(7, 1024)
    assert len({p.pk for p in pairs}) == 1024
    assert [p.replica_id for p in pairs] == list(range(1024))


def test_gen_keys_rejects_zero():
    with pytest.raises(ConfigurationError):
        srt.gen_keys(7, 0)


def test_mine_matches_oracle(keys):
    for k in keys[:4]:
        for ctx in (srt.context("epoch", 5), srt.context("bba", "Propose", 3, 1), b""):
            out = srt.mine(k.sk, ctx)
            word = _oracle_word(k.sk, ctx)
            assert out.proof == word.to_bytes(8, "big")
            assert out.value == (word >> 11) / 2.0 ** 53
            assert 0.0 <= out.value < 1.0


def test_mine_deterministic(keys):
    ctx = srt.context("epoch", 5)
    assert srt.mine(keys[0].sk, ctx) == srt.mine(keys[0].sk, ctx)


def test_context_encoding_unambiguous():
    assert srt.context("ab", "c") != srt.context("a", "bc")
    assert srt.context(1) != srt.context("1")
    assert srt.context(True) != srt.context(1)
    with pytest.raises(TypeError):
        srt.context(1.5)


def test_uniformity_ks():
    sk = srt.gen_keys(0, 1)[0].sk
    vals = [srt.mine(sk, srt.context("ks", i)).value for i in range(100_000)]
    assert stats.kstest(vals, "uniform").statistic < 0.01


def test_distinct_keys_rarely_collide(keys):
    ctxs = [srt.context("col", i) for i in range(10_000)]
    same = sum(srt.mine(keys[0].sk, c).value == srt.mine(keys[1].sk, c).value for c in ctxs)
    assert same == 0


def test_verify_round_trip_and_rejections(keys):
    ring = srt.KeyRing(keys)
    c, c2 = srt.context("x", 1), srt.context("x", 2)
    out = srt.mine(keys[0].sk, c)
    assert srt.verify(ring, keys[0].pk, c, out)
    assert not srt.verify(ring, keys[1].pk, c, out)
    assert not srt.verify(ring, keys[0].pk, c2, out)
    forged = srt.SortitionOutput(0.0, out.proof, c)
    assert not srt.verify(ring, keys[0].pk, c, forged)
    assert not srt.verify(ring, b"unknown", c, out)


def test_verify_exhaustive_small_n():
    keys = srt.gen_keys(3, 8)
    ring = srt.KeyRing(keys)
    ctxs = [srt.context("ex", j) for j in range(4)]
    for i, ki in enumerate(keys):
        for a, ca in enumerate(ctxs):
            out = srt.mine(ki.sk, ca)
            for j, kj in enumerate(keys):
                for b, cb in enumerate(ctxs):
                    assert ring.verify(kj.pk, cb, out) == (i == j and a == b)


def test_is_elected_boundaries():
    zero = srt.SortitionOutput(0.0, bytes(8), b"")
    assert srt.is_elected(zero, 0.0)
    assert not srt.is_elected(zero, 0.0, strict=True)
    word = int(0.6 * 2 ** 53) << 11
    assert not srt.is_elected(srt.SortitionOutput(0.6, word.to_bytes(8, "big"), b""), 1 / 200)
    with pytest.raises(ConfigurationError):
        srt.is_elected(zero, 1.5)


def test_election_rate_binomial_band():
    sks = np.array([k.sk for k in srt.gen_keys(11, 1000)], dtype=np.uint64)
    t = 0.01
    elected = sum(int(srt.elected_mask(sks, srt.context("rate", j), t).sum()) for j in range(1000))
    total = 10 ** 6
    sigma = (total * t * (1 - t)) ** 0.5
    assert abs(elected - total * t) <= 3 * sigma


def test_vector_paths_agree_with_scalar(keys):
    sks = np.array([k.sk for k in keys], dtype=np.uint64)
    ctx = srt.context("vec", 9)
    scalar = np.array([srt.mine(k.sk, ctx).value for k in keys])
    assert np.array_equal(srt.mine_values(sks, ctx), scalar)
    t = float(np.median(scalar))
    assert np.array_equal(srt.elected_mask(sks, ctx, t), scalar <= t)
    counts = srt.committee_counts(sks, [ctx, srt.context("vec", 10)], t)
    assert counts[0] == int((scalar <= t).sum())
