"""Prime-order subgroups of Z_p^* and the hashing helpers built on them.

Group elements are plain ints in [1, p). The group law is written
multiplicatively here (``mul``/``exp``); the additive ``sk·G`` notation used
in protocol descriptions maps to ``exp(g, sk)``.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

try:
    from gmpy2 import powmod as _powmod

    def _pow(base: int, exp: int, mod: int) -> int:
        return int(_powmod(base, exp, mod))

except ImportError:  # pragma: no cover
    _pow = pow


@dataclass(frozen=True)
class GroupParams:
    name: str
    p: int
    q: int
    g: int

    @property
    def element_len(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def scalar_len(self) -> int:
        return (self.q.bit_length() + 7) // 8

    def exp(self, base: int, k: int) -> int:
        return _pow(base, k % self.q, self.p)

    def base_exp(self, k: int) -> int:
        return _pow(self.g, k % self.q, self.p)

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def inv(self, a: int) -> int:
        return pow(a, -1, self.p)

    def is_element(self, a: int) -> bool:
        return 1 <= a < self.p and _pow(a, self.q, self.p) == 1

    def encode_element(self, a: int) -> bytes:
        return a.to_bytes(self.element_len, "big")

    def decode_element(self, data: bytes) -> int:
        if len(data) != self.element_len:
            raise ValueError("bad element encoding length")
        a = int.from_bytes(data, "big")
        if not self.is_element(a):
            raise ValueError("not a group element")
        return a

    def encode_scalar(self, k: int) -> bytes:
        return (k % self.q).to_bytes(self.scalar_len, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_len:
            raise ValueError("bad scalar encoding length")
        k = int.from_bytes(data, "big")
        if k >= self.q:
            raise ValueError("scalar out of range")
        return k

    def hash_to_scalar(self, *parts: bytes) -> int:
        """SHA-512 over length-prefixed parts, reduced mod q."""
        h = hashlib.sha512()
        for part in parts:
            h.update(struct.pack(">I", len(part)))
            h.update(part)
        return int.from_bytes(h.digest(), "big") % self.q

    def scalar_from_seed(self, seed: bytes, label: bytes = b"scalar") -> int:
        """Derive a nonzero scalar from seed bytes; zero draws are retried."""
        counter = 0
        while True:
            k = self.hash_to_scalar(label, seed, counter.to_bytes(4, "big"))
            if k:
                return k
            counter += 1


# 2048-bit p with a 256-bit prime-order subgroup; g = 2^((p-1)/q) mod p.
CRYPTO = GroupParams(
    name="crypto",
    p=int(
        "9f2333fdea31257b209cb18fa32fc3e1e5fa0f6203181594cc348d196af69661"
        "2a19590aba0dd478e92ae5379dd0980d5d060b0c0b3e46758e149a4eb5183751"
        "b8360eb0ddaa473e9aae592fb75d19b2e7850f4be44a18cdc984abc127927f67"
        "5afa827c09b52ff7d286676d3c4060bfea0370c4aa2fd4914461329e30edc061"
        "b3ed6893e6c3c3bc91bfda0907084177d1a5818e87ac57f7b88e18baeb4ec4e9"
        "1eec6d82668d375dceb999471c8769ec98a75f6f63f1b73005dbed3c864094e6"
        "c53dbebbb80c491139dc5d464032f1098b2c5d0216a80e5e7eabe28a5b8759bb"
        "395de0e4a72ca67f3704b257192ff37fe0260add1df9ec78bee5c30651e95847",
        16,
    ),
    q=0x87410B438B18CA1EECAF3E01DE6663ACE3617F353A8E7473EA0F2F8383DBB88F,
    g=int(
        "3e6dcc95198dc213eaa8a4b088cd24009347e414d759aed3020c0f39f75ebbea"
        "3ac028a15207d902e1e92b20c236fcd822c7fb9085664ca419acdb17ab0f5d8d"
        "84ce5d6c7f1e7e3d7863a362e598b5edfd3c07aa2b460476b6e478fd2718a8b3"
        "9f78037b5abe3363900e389e26709d3b77a23e3fa93f230b5bcec810841aca4e"
        "adb0e06086913c06ed7ce6d01e665297265a903309fbdb7fbaeba72a842e0d94"
        "2900acd3553765db3b5c1460bce8d3b8202e30fa3a9b78801a06b4b6c414b07a"
        "2ba9372cfba26af6b490dd040ebd493ec8107ee21ae5ceea49413d973f6ec06c"
        "631da95667d770c92efc6eace7f7cfe1bebb3cde8146ab4cacec60cf6c719b6b",
        16,
    ),
)

# Discrete log is feasible in both of these; they back the brute-force checks.
TEST = GroupParams(name="test", p=655211, q=65521, g=1024)
TINY = GroupParams(name="tiny", p=503, q=251, g=4)

GROUPS = {grp.name: grp for grp in (CRYPTO, TEST, TINY)}


def get_group(name: str) -> GroupParams:
    try:
        return GROUPS[name]
    except KeyError:
        raise ValueError(f"unknown group {name!r}; choose from {sorted(GROUPS)}") from None


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: int


def keygen(params: GroupParams, randomness: bytes) -> KeyPair:
    """Deterministic key pair from seed bytes: sk in [1, q-1], pk = g^sk."""
    sk = params.scalar_from_seed(randomness, b"keygen")
    return KeyPair(sk, params.base_exp(sk))
