"""Dealerless t-of-n key generation and threshold Schnorr signing.

Every participant deals a random degree-(t-1) polynomial, publishes Feldman
commitments to its coefficients and hands participant j the evaluation at j.
A participant's share is the sum of what it received; the joint public key
T is the product of all constant-term commitments. No party ever holds the
joint secret unless t shares are pooled.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .crypto import Signature, challenge, verify
from .encoding import u32
from .errors import DkgAbort, ThresholdError
from .group import GroupParams


@dataclass(frozen=True, order=True)
class SecretShare:
    index: int
    value: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("share index must be positive")


@dataclass(frozen=True)
class ThresholdAddress:
    public_key: int
    t: int
    n: int

    def __post_init__(self):
        if not 1 <= self.t <= self.n:
            raise ValueError("need 1 <= t <= n")


@dataclass(frozen=True)
class FeldmanCommitments:
    """Coefficient commitments per dealer: dealers[i] = (A_i0, ..., A_i,t-1)."""

    dealers: Mapping[int, tuple[int, ...]]

    @property
    def t(self) -> int:
        return len(next(iter(self.dealers.values())))

    def combined(self, params: GroupParams) -> list[int]:
        """Per-degree products over dealers; entry 0 is the joint public key."""
        out = [1] * self.t
        for comms in self.dealers.values():
            for k, a in enumerate(comms):
                out[k] = params.mul(out[k], a)
        return out

    def joint_public_key(self, params: GroupParams) -> int:
        return self.combined(params)[0]


def poly_eval(coeffs: Sequence[int], x: int, q: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % q
    return acc


def lagrange_at_zero(indices: Iterable[int], i: int, q: int) -> int:
    num, den = 1, 1
    for j in indices:
        if j != i:
            num = num * j % q
            den = den * (j - i) % q
    return num * pow(den, -1, q) % q


def _commitment_eval(params: GroupParams, comms: Sequence[int], index: int) -> int:
    acc = 1
    for k, a in enumerate(comms):
        acc = params.mul(acc, params.exp(a, pow(index, k, params.q)))
    return acc


def verify_share(params: GroupParams, share: SecretShare, commitments: FeldmanCommitments) -> bool:
    if not 0 <= share.value < params.q:
        return False
    expected = _commitment_eval(params, commitments.combined(params), share.index)
    return params.base_exp(share.value) == expected


def _check_distinct(indices: Sequence[int], t: int) -> None:
    if len(set(indices)) != len(indices):
        raise ThresholdError("duplicate share")
    if len(indices) < t:
        raise ThresholdError("insufficient shares")


def reconstruct_secret(shares: Sequence[SecretShare], t: int, q: int) -> int:
    indices = [s.index for s in shares]
    _check_distinct(indices, t)
    return sum(s.value * lagrange_at_zero(indices, s.index, q) for s in shares) % q


# -- DKG participant ---------------------------------------------------------


@dataclass
class DkgParticipant:
    """One party of the joint-Feldman exchange.

    Round 1: broadcast ``commitments()``. Round 2: send ``share_for(j)`` to
    each j. Incoming data is fed through ``receive_commitments`` and
    ``receive_share``; ``finalize`` yields this party's secret share.
    """

    params: GroupParams
    index: int
    n: int
    t: int
    randomness: bytes
    _coeffs: list[int] = field(init=False, repr=False)
    _received_comms: dict[int, tuple[int, ...]] = field(init=False, default_factory=dict)
    _received_shares: dict[int, int] = field(init=False, default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.t <= self.n:
            raise ValueError("need 1 <= t <= n")
        self._coeffs = [
            self.params.scalar_from_seed(self.randomness + u32(k), b"dkg-coeff") for k in range(self.t)
        ]

    def commitments(self) -> tuple[int, ...]:
        return tuple(self.params.base_exp(a) for a in self._coeffs)

    def share_for(self, j: int) -> int:
        return poly_eval(self._coeffs, j, self.params.q)

    def receive_commitments(self, dealer: int, comms: Sequence[int]) -> None:
        if len(comms) != self.t or not all(self.params.is_element(a) for a in comms):
            raise DkgAbort(dealer, "malformed commitments")
        self._received_comms[dealer] = tuple(comms)

    def receive_share(self, dealer: int, value: int) -> None:
        comms = self._received_comms.get(dealer)
        if comms is None:
            raise DkgAbort(dealer, "share arrived before commitments")
        if self.params.base_exp(value) != _commitment_eval(self.params, comms, self.index):
            raise DkgAbort(dealer)
        self._received_shares[dealer] = value % self.params.q

    def missing_dealers(self) -> list[int]:
        return [
            i
            for i in range(1, self.n + 1)
            if i not in self._received_comms or i not in self._received_shares
        ]

    def finalize(self) -> tuple[SecretShare, FeldmanCommitments, ThresholdAddress]:
        missing = self.missing_dealers()
        if missing:
            raise DkgAbort(missing[0], "no contribution received")
        value = sum(self._received_shares.values()) % self.params.q
        comms = FeldmanCommitments(dict(sorted(self._received_comms.items())))
        address = ThresholdAddress(comms.joint_public_key(self.params), self.t, self.n)
        return SecretShare(self.index, value), comms, address


def dkg_run(
    params: GroupParams, n: int, t: int, randomness: Sequence[bytes]
) -> tuple[ThresholdAddress, FeldmanCommitments, list[SecretShare]]:
    """Run the whole exchange in-process (participants 1..n, honest transport)."""
    if n < 2:
        raise ValueError("need n >= 2")
    if len(randomness) != n:
        raise ValueError("need one randomness string per participant")
    parties = [DkgParticipant(params, i + 1, n, t, randomness[i]) for i in range(n)]
    for dealer in parties:
        comms = dealer.commitments()
        for p in parties:
            p.receive_commitments(dealer.index, comms)
    for dealer in parties:
        for p in parties:
            p.receive_share(dealer.index, dealer.share_for(p.index))
    results = [p.finalize() for p in parties]
    address, comms = results[0][2], results[0][1]
    return address, comms, [r[0] for r in results]


# -- threshold signing -------------------------------------------------------


def signing_nonce(params: GroupParams, share: SecretShare, randomness: bytes) -> tuple[int, int]:
    """First round: secret nonce k_i and its public commitment R_i."""
    k = params.scalar_from_seed(randomness + params.encode_scalar(share.value), b"tsig-nonce")
    return k, params.base_exp(k)


def partial_sign(
    params: GroupParams,
    share: SecretShare,
    nonce: int,
    signer_indices: Sequence[int],
    group_R: int,
    message: bytes,
    address: ThresholdAddress,
) -> int:
    c = challenge(params, address.public_key, group_R, message)
    lam = lagrange_at_zero(signer_indices, share.index, params.q)
    return (nonce + c * lam * share.value) % params.q


def combine_nonces(params: GroupParams, commitments: Iterable[int]) -> int:
    R = 1
    for Ri in commitments:
        R = params.mul(R, Ri)
    return R


def aggregate(params: GroupParams, group_R: int, partials: Iterable[int]) -> Signature:
    return Signature(group_R, sum(partials) % params.q)


def threshold_sign(
    params: GroupParams,
    signers: Sequence[tuple[SecretShare, bytes]],
    message: bytes,
    address: ThresholdAddress,
) -> Signature:
    """Two-round threshold Schnorr over ``signers``, run in-process."""
    indices = [share.index for share, _ in signers]
    _check_distinct(indices, address.t)
    nonces = [signing_nonce(params, share, rnd) for share, rnd in signers]
    R = combine_nonces(params, (Ri for _, Ri in nonces))
    partials = [
        partial_sign(params, share, k, indices, R, message, address)
        for (share, _), (k, _) in zip(signers, nonces)
    ]
    sig = aggregate(params, R, partials)
    if not verify(params, address.public_key, message, sig):
        raise ThresholdError("aggregate signature failed verification")
    return sig
