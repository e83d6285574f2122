"""Simulated sortition oracle (F_mine).

A replica's lottery ticket for a context is a keyed 64-bit pseudorandom word
whose top 53 bits give a value in [0, 1). The "proof" is the word itself;
verification recomputes it from a simulator-held table that maps public keys
to secret seeds, so forgery is impossible rather than merely hard. Adversary
code only ever sees the secret seeds of replicas it has corrupted.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError

__all__ = [
    "KeyPair",
    "SortitionOutput",
    "KeyRing",
    "gen_keys",
    "context",
    "context_word",
    "mine",
    "verify",
    "is_elected",
    "elected_mask",
    "mine_values",
]


@dataclass(frozen=True)
class KeyPair:
    replica_id: int
    pk: bytes
    sk: int = field(repr=False)


@dataclass(frozen=True)
class SortitionOutput:
    value: float
    proof: bytes
    context: bytes

    @property
    def mantissa(self) -> int:
        return int.from_bytes(self.proof, "big") >> 11


def _encode_field(item) -> bytes:
    if isinstance(item, (bytes, bytearray)):
        tag, body = b"b", bytes(item)
    elif isinstance(item, str):
        tag, body = b"s", item.encode()
    elif isinstance(item, (bool, np.bool_)):
        tag, body = b"?", b"\x01" if item else b"\x00"
    elif isinstance(item, (int, np.integer)):
        tag, body = b"i", int(item).to_bytes(16, "big", signed=True)
    else:
        raise TypeError(f"unsupported context field {item!r}")
    return tag + struct.pack(">I", len(body)) + body


def context(*fields) -> bytes:
    """Unambiguous byte encoding of a context tuple: tagged, length-prefixed fields."""
    return b"".join(_encode_field(f) for f in fields)


def context_word(ctx: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(ctx, digest_size=8, person=b"fmine-ctx").digest(), "big")


def gen_keys(trial_seed: int, n: int) -> list[KeyPair]:
    """Deterministic key pairs for replicas 0..n-1."""
    if n < 1:
        raise ConfigurationError(f"need at least one replica, got n={n}")
    seed = int(trial_seed) & kernels.MASK64
    pairs = []
    seen_sk = set()
    for i in range(n):
        words = np.random.SeedSequence([seed, i, 0x5EED]).generate_state(2, dtype=np.uint32)
        sk = (int(words[0]) << 32) | int(words[1])
        # a 64-bit collision is astronomically unlikely but would break pk uniqueness
        while sk in seen_sk:
            sk = kernels.mix_scalar(sk, i + 1)
        seen_sk.add(sk)
        pk = hashlib.blake2b(sk.to_bytes(8, "big") + i.to_bytes(8, "big"), digest_size=16, person=b"fmine-pk").digest()
        pairs.append(KeyPair(i, pk, sk))
    return pairs


def mine(sk: int, ctx: bytes) -> SortitionOutput:
    word = kernels.mix_scalar(int(sk), context_word(ctx))
    return SortitionOutput((word >> 11) * kernels.UNIT_SCALE, word.to_bytes(8, "big"), bytes(ctx))


def is_elected(output: SortitionOutput, threshold: float, strict: bool = False) -> bool:
    """``value <= threshold`` (``<`` when strict); compared on the integer mantissa."""
    if not 0.0 <= threshold <= 1.0:
        raise ConfigurationError(f"threshold must lie in [0, 1], got {threshold}")
    return output.mantissa <= kernels.unit_threshold(threshold, strict)


class KeyRing:
    """Simulator-side verification table: pk -> (replica_id, sk).

    Honest protocol code holds a KeyRing only to *verify*; the secret seeds
    are reachable through ``secret_for`` which the adversary interface never
    calls for uncorrupted replicas.
    """

    def __init__(self, pairs: Sequence[KeyPair]):
        self.pairs = list(pairs)
        self._by_pk = {p.pk: p for p in self.pairs}
        if len(self._by_pk) != len(self.pairs):
            raise ConfigurationError("public keys are not unique")
        self.sks = np.array([p.sk for p in self.pairs], dtype=np.uint64)

    def __len__(self) -> int:
        return len(self.pairs)

    def pk(self, replica_id: int) -> bytes:
        return self.pairs[replica_id].pk

    def replica_of(self, pk: bytes) -> int | None:
        pair = self._by_pk.get(pk)
        return None if pair is None else pair.replica_id

    def secret_for(self, replica_id: int) -> int:
        return self.pairs[replica_id].sk

    def verify(self, pk: bytes, ctx: bytes, output: SortitionOutput) -> bool:
        pair = self._by_pk.get(pk)
        if pair is None or output.context != ctx:
            return False
        return mine(pair.sk, ctx) == output

    def verify_replica(self, replica_id: int, ctx: bytes, output: SortitionOutput) -> bool:
        if not 0 <= replica_id < len(self.pairs):
            return False
        return self.verify(self.pairs[replica_id].pk, ctx, output)


def verify(ring: KeyRing, pk: bytes, ctx: bytes, output: SortitionOutput) -> bool:
    return ring.verify(pk, ctx, output)


def mine_values(sks, ctx: bytes) -> np.ndarray:
    """Sortition values in [0, 1) for every secret in ``sks`` on one context."""
    return kernels.to_unit(kernels.mantissas(np.asarray(sks, dtype=np.uint64), context_word(ctx)))


def elected_mask(sks, ctx: bytes, threshold: float, strict: bool = False) -> np.ndarray:
    """Boolean mask of replicas whose ticket on ``ctx`` clears ``threshold``."""
    top = kernels.unit_threshold(threshold, strict)
    if top < 0:
        return np.zeros(len(sks), dtype=bool)
    return kernels.mantissas(np.asarray(sks, dtype=np.uint64), context_word(ctx)) <= np.uint64(top)


def committee_counts(sks, contexts: Iterable[bytes], threshold: float, member_mask=None, strict: bool = False) -> np.ndarray:
    """Number of elected replicas (restricted to ``member_mask``) for each context."""
    sks = np.asarray(sks, dtype=np.uint64)
    words = np.array([context_word(c) for c in contexts], dtype=np.uint64)
    mask = np.ones(sks.shape[0], dtype=bool) if member_mask is None else np.asarray(member_mask, dtype=bool)
    top = kernels.unit_threshold(threshold, strict)
    if top < 0:
        return np.zeros(words.shape[0], dtype=np.int64)
    return kernels.count_below(sks, words, top, mask)
