"""Hot numeric kernels: keyed 64-bit mixing for sortition and Monte-Carlo counts.

Every kernel has a numba loop implementation and a vectorised numpy
implementation with identical results. ``BACKEND`` names the one bound to the
public names; ``numpy_kernels`` and ``numba_kernels`` (``None`` when numba is
off) expose both for benchmarking and cross-checking.
"""

from types import SimpleNamespace

import numpy as np

from ._accel import NUMBA_AVAILABLE, njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
KEY_MULT = 0xD6E8FEB86659FD93
FMIX_C1 = 0xFF51AFD7ED558CCD
FMIX_C2 = 0xC4CEB9FE1A85EC53
UNIT_SCALE = 2.0 ** -53


def mix_scalar(sk: int, word: int) -> int:
    """Reference keyed mix on Python ints; the array kernels must agree with it."""
    x = (word ^ sk) & MASK64
    x = _fmix_int((x + GOLDEN) & MASK64)
    x = _fmix_int(x ^ ((sk * KEY_MULT) & MASK64))
    return x


def _fmix_int(x: int) -> int:
    x ^= x >> 33
    x = (x * FMIX_C1) & MASK64
    x ^= x >> 33
    x = (x * FMIX_C2) & MASK64
    x ^= x >> 33
    return x


def unit_threshold(threshold: float, strict: bool = False) -> int:
    """Largest 53-bit mantissa m with m * 2^-53 <= threshold (or < when strict).

    Returns -1 when nothing qualifies. Scaling by 2^53 is exact in binary64,
    so the integer comparison reproduces the real-valued one bit for bit.
    """
    if threshold < 0.0:
        return -1
    scaled = threshold * 2.0 ** 53
    if scaled >= 2.0 ** 53:
        return (1 << 53) - 1
    top = int(np.floor(scaled))
    if strict and float(top) == scaled:
        top -= 1
    return top


# ---------------------------------------------------------------------------
# numpy implementations

_U33 = np.uint64(33)
_U11 = np.uint64(11)


def _fmix_np(x):
    x = x ^ (x >> _U33)
    x = x * np.uint64(FMIX_C1)
    x = x ^ (x >> _U33)
    x = x * np.uint64(FMIX_C2)
    x = x ^ (x >> _U33)
    return x


def _mix_batch_np(sks, word):
    sks = np.asarray(sks, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = sks ^ np.uint64(word)
        x = _fmix_np(x + np.uint64(GOLDEN))
        x = _fmix_np(x ^ (sks * np.uint64(KEY_MULT)))
    return x


def _mantissas_np(sks, word):
    return _mix_batch_np(sks, word) >> _U11


def _count_below_np(sks, words, top, member_mask):
    sks = np.asarray(sks, dtype=np.uint64)[np.asarray(member_mask, dtype=bool)]
    words = np.asarray(words, dtype=np.uint64)
    out = np.empty(words.shape[0], dtype=np.int64)
    # chunk rows so the temporary stays below ~32 MB
    step = max(1, 4_000_000 // max(1, sks.shape[0]))
    keyed = None
    with np.errstate(over="ignore"):
        keyed = sks * np.uint64(KEY_MULT)
        for start in range(0, words.shape[0], step):
            w = words[start:start + step, None]
            x = sks[None, :] ^ w
            x = _fmix_np(x + np.uint64(GOLDEN))
            x = _fmix_np(x ^ keyed[None, :])
            out[start:start + step] = np.count_nonzero((x >> _U11) <= np.uint64(top), axis=1)
    return out


def _bernoulli_sums_np(uniforms, p):
    return np.count_nonzero(np.asarray(uniforms) < p, axis=1)


numpy_kernels = SimpleNamespace(
    mix_batch=_mix_batch_np,
    mantissas=_mantissas_np,
    count_below=_count_below_np,
    bernoulli_sums=_bernoulli_sums_np,
)


# ---------------------------------------------------------------------------
# numba implementations

numba_kernels = None

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _fmix_nb(x):
        x ^= x >> np.uint64(33)
        x *= np.uint64(FMIX_C1)
        x ^= x >> np.uint64(33)
        x *= np.uint64(FMIX_C2)
        x ^= x >> np.uint64(33)
        return x

    @njit(cache=True)
    def _mix_one_nb(sk, word):
        x = sk ^ word
        x = _fmix_nb(x + np.uint64(GOLDEN))
        return _fmix_nb(x ^ (sk * np.uint64(KEY_MULT)))

    @njit(cache=True)
    def _mix_batch_loop(sks, word):
        out = np.empty(sks.shape[0], dtype=np.uint64)
        for i in range(sks.shape[0]):
            out[i] = _mix_one_nb(sks[i], word)
        return out

    @njit(cache=True)
    def _count_below_loop(sks, words, top, member_mask):
        out = np.zeros(words.shape[0], dtype=np.int64)
        for j in range(words.shape[0]):
            w = words[j]
            c = 0
            for i in range(sks.shape[0]):
                if member_mask[i] and (_mix_one_nb(sks[i], w) >> np.uint64(11)) <= top:
                    c += 1
            out[j] = c
        return out

    @njit(cache=True)
    def _bernoulli_sums_loop(uniforms, p):
        out = np.zeros(uniforms.shape[0], dtype=np.int64)
        for j in range(uniforms.shape[0]):
            c = 0
            for i in range(uniforms.shape[1]):
                if uniforms[j, i] < p:
                    c += 1
            out[j] = c
        return out

    def _mix_batch_nb(sks, word):
        return _mix_batch_loop(np.ascontiguousarray(sks, dtype=np.uint64), np.uint64(word))

    def _mantissas_nb(sks, word):
        return _mix_batch_nb(sks, word) >> _U11

    def _count_below_nb(sks, words, top, member_mask):
        return _count_below_loop(
            np.ascontiguousarray(sks, dtype=np.uint64),
            np.ascontiguousarray(words, dtype=np.uint64),
            np.uint64(top),
            np.ascontiguousarray(member_mask, dtype=np.bool_),
        )

    def _bernoulli_sums_nb(uniforms, p):
        return _bernoulli_sums_loop(np.ascontiguousarray(uniforms, dtype=np.float64), float(p))

    numba_kernels = SimpleNamespace(
        mix_batch=_mix_batch_nb,
        mantissas=_mantissas_nb,
        count_below=_count_below_nb,
        bernoulli_sums=_bernoulli_sums_nb,
    )

_active = numba_kernels if numba_kernels is not None else numpy_kernels
BACKEND = "numba" if numba_kernels is not None else "numpy"

mix_batch = _active.mix_batch
mantissas = _active.mantissas
count_below = _active.count_below
bernoulli_sums = _active.bernoulli_sums


def to_unit(mantissa):
    """Map 53-bit mantissas to [0, 1)."""
    return np.asarray(mantissa, dtype=np.float64) * UNIT_SCALE
