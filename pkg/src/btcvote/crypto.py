"""Hashing, Schnorr signatures, key-private hybrid encryption and onions."""

from __future__ import annotations

import hashlib
import hmac
import itertools
import struct
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

from Crypto.Hash import RIPEMD160

from .encoding import Reader, u16, u32, u64
from .errors import DecryptionError, PlaintextTooLarge
from .group import GroupParams

MAX_PLAINTEXT = 4096
TAG_LEN = 32


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def hash160(data: bytes) -> bytes:
    """RIPEMD-160(SHA-256(data)), the digest OP_HASH160 commits to."""
    return RIPEMD160.new(sha256(data)).digest()


# -- Schnorr -----------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    R: int
    s: int

    def to_bytes(self, params: GroupParams) -> bytes:
        return params.encode_element(self.R) + params.encode_scalar(self.s)

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> Signature:
        n = params.element_len
        if len(data) != n + params.scalar_len:
            raise ValueError("bad signature length")
        return cls(params.decode_element(data[:n]), params.decode_scalar(data[n:]))


def challenge(params: GroupParams, pk: int, R: int, message: bytes) -> int:
    return params.hash_to_scalar(
        b"btcvote/schnorr", params.encode_element(pk), params.encode_element(R), message
    )


def sign_with_nonce(params: GroupParams, sk: int, k: int, message: bytes) -> Signature:
    pk = params.base_exp(sk)
    R = params.base_exp(k)
    c = challenge(params, pk, R, message)
    return Signature(R, (k + c * sk) % params.q)


def sign(params: GroupParams, sk: int, message: bytes, nonce_randomness: bytes) -> Signature:
    # Nonce binds key and message so reusing randomness across messages cannot leak sk.
    k = params.scalar_from_seed(
        nonce_randomness + params.encode_scalar(sk) + sha256(message), b"nonce"
    )
    return sign_with_nonce(params, sk, k, message)


def verify(params: GroupParams, pk: int, message: bytes, sig: Signature) -> bool:
    try:
        R, s = int(sig.R), int(sig.s)
    except (AttributeError, TypeError, ValueError):
        return False
    if not (0 <= s < params.q and params.is_element(R) and params.is_element(pk)):
        return False
    c = challenge(params, pk, R, message)
    return params.base_exp(s) == params.mul(R, params.exp(pk, c))


# -- key-private hybrid encryption -------------------------------------------


@dataclass(frozen=True)
class VoteCiphertext:
    """Hybrid ciphertext; ``ephemeral`` holds the encoded element e·G."""

    ephemeral: bytes
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return u16(len(self.ephemeral)) + self.ephemeral + u32(len(self.body)) + self.body + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> VoteCiphertext:
        r = Reader(data)
        eph = r.take(r.u16())
        body = r.take(r.u32())
        tag = r.take(TAG_LEN)
        r.done()
        return cls(eph, body, tag)


def _derive_keys(params: GroupParams, eph: bytes, shared: int) -> tuple[bytes, bytes]:
    base = sha256(b"btcvote/pke" + eph + params.encode_element(shared))
    return sha256(base + b"enc"), sha256(base + b"mac")


def _keystream_xor(key: bytes, data: bytes) -> bytes:
    stream = bytearray()
    for ctr in itertools.count():
        if len(stream) >= len(data):
            break
        stream += sha256(key + u64(ctr))
    return bytes(a ^ b for a, b in zip(data, stream))


def _mac(key: bytes, eph: bytes, body: bytes) -> bytes:
    return hmac.new(key, u16(len(eph)) + eph + u32(len(body)) + body, hashlib.sha256).digest()


def pke_encrypt(params: GroupParams, pk: int, plaintext: bytes, randomness: bytes) -> VoteCiphertext:
    if len(plaintext) > MAX_PLAINTEXT:
        raise PlaintextTooLarge()
    e = params.scalar_from_seed(randomness, b"ephemeral")
    eph = params.encode_element(params.base_exp(e))
    enc_key, mac_key = _derive_keys(params, eph, params.exp(pk, e))
    body = _keystream_xor(enc_key, plaintext)
    return VoteCiphertext(eph, body, _mac(mac_key, eph, body))


def pke_decrypt(params: GroupParams, sk: int, ct: VoteCiphertext) -> bytes:
    """Return the plaintext, or raise DecryptionError if ``sk`` is not the recipient."""
    try:
        E = params.decode_element(ct.ephemeral)
    except ValueError:
        raise DecryptionError() from None
    enc_key, mac_key = _derive_keys(params, ct.ephemeral, params.exp(E, sk))
    if not hmac.compare_digest(_mac(mac_key, ct.ephemeral, ct.body), ct.tag):
        raise DecryptionError()
    return _keystream_xor(enc_key, ct.body)


def onion_encrypt(
    params: GroupParams, ct: VoteCiphertext, pks: Sequence[int], randomness: bytes
) -> VoteCiphertext:
    """Wrap ``ct`` so that pks[0]'s holder peels first, pks[-1]'s last."""
    for layer in range(len(pks) - 1, -1, -1):
        ct = pke_encrypt(params, pks[layer], ct.to_bytes(), randomness + u32(layer))
    return ct


def onion_peel(params: GroupParams, sk: int, ct: VoteCiphertext) -> VoteCiphertext:
    inner = pke_decrypt(params, sk, ct)
    try:
        return VoteCiphertext.from_bytes(inner)
    except ValueError:
        raise DecryptionError("layer does not contain a ciphertext") from None


# -- seeded permutations -----------------------------------------------------


def _hash_counter_words(seed: bytes) -> Iterator[int]:
    for k in itertools.count():
        yield from struct.unpack(">4Q", sha256(seed + u64(k)))


def derive_permutation(seed: bytes, n: int) -> tuple[int, ...]:
    """Seeded Fisher-Yates permutation of 1..n.

    Draws big-endian 64-bit words from the stream SHA-256(seed || k), k an
    8-byte big-endian counter, four words per block. For i = n-1 down to 1 a
    word u is rejected while u >= 2^64 - (2^64 mod (i+1)); otherwise
    j = u mod (i+1) and positions i and j are swapped.
    """
    if n < 1:
        raise ValueError("empty permutation")
    items = list(range(1, n + 1))
    words = _hash_counter_words(seed)
    for i in range(n - 1, 0, -1):
        bound = i + 1
        limit = (1 << 64) - (1 << 64) % bound
        u = next(words)
        while u >= limit:
            u = next(words)
        j = u % bound
        items[i], items[j] = items[j], items[i]
    return tuple(items)


def apply_permutation(perm: Sequence[int], items: Sequence):
    """Position k of the result takes items[perm[k] - 1]."""
    if sorted(perm) != list(range(1, len(items) + 1)):
        raise ValueError("permutation does not match item count")
    return [items[p - 1] for p in perm]
