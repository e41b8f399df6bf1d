"""Voting protocol roles: registration, vote construction, the decryption
mixnet, and the commitment / claim / win / seizure / refund transactions."""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace

from . import crypto
from .crypto import VoteCiphertext, hash160, sha256
from .encoding import Reader, lp, u16, u32
from .errors import CosignRefusal, DecryptionError, ProtocolError, RegistrationError, ShuffleAbort
from .group import GroupParams
from .ledger import (
    After,
    Branch,
    HashLock,
    KeyLock,
    LedgerState,
    Or,
    OutPoint,
    Preimage,
    Sig,
    Transaction,
    TxInput,
    TxOutput,
)
from .threshold import (
    FeldmanCommitments,
    SecretShare,
    ThresholdAddress,
    reconstruct_secret,
    verify_share,
)

log = logging.getLogger(__name__)


# -- bulletin board ----------------------------------------------------------


@dataclass(frozen=True)
class VoterEntry:
    voter_id: int
    address_pk: int
    shuffle_pk: int


@dataclass(frozen=True)
class CandidateEntry:
    candidate_id: int
    payout_pk: int
    vote_pk: int


@dataclass(frozen=True)
class BulletinBoard:
    t: int
    x: int
    z: int
    t1: int
    t2: int
    voters: tuple[VoterEntry, ...] = ()
    candidates: tuple[CandidateEntry, ...] = ()
    closed: bool = False
    address: ThresholdAddress | None = None
    commitments: FeldmanCommitments | None = None

    def __post_init__(self):
        if not 0 <= self.t1 < self.t2:
            raise ValueError("need 0 <= t1 < t2")
        if self.x < 1 or self.z < 1:
            raise ValueError("amounts x and z must be positive")

    @property
    def n(self) -> int:
        return len(self.voters)

    @property
    def m(self) -> int:
        return len(self.candidates)

    def voter(self, voter_id: int) -> VoterEntry:
        for v in self.voters:
            if v.voter_id == voter_id:
                return v
        raise KeyError(voter_id)

    def candidate(self, candidate_id: int) -> CandidateEntry:
        for c in self.candidates:
            if c.candidate_id == candidate_id:
                return c
        raise ProtocolError("unknown candidate id")

    def close(self) -> BulletinBoard:
        if self.n < 2:
            raise ProtocolError("need at least two voters")
        if self.m < 1:
            raise ProtocolError("need at least one candidate")
        if not 1 <= self.t <= self.n:
            raise ProtocolError("need 1 <= t <= n")
        return replace(self, closed=True)

    def publish_key(self, address: ThresholdAddress, commitments: FeldmanCommitments) -> BulletinBoard:
        if not self.closed:
            raise ProtocolError("registration still open")
        if self.address is not None:
            raise ProtocolError("threshold key already published")
        return replace(self, address=address, commitments=commitments)


def register(
    board: BulletinBoard, entry: VoterEntry | CandidateEntry, ledger: LedgerState | None = None
) -> BulletinBoard:
    if board.closed:
        raise RegistrationError("phase-closed")
    if isinstance(entry, CandidateEntry):
        if any(c.candidate_id == entry.candidate_id for c in board.candidates):
            raise RegistrationError("duplicate-id")
        return replace(board, candidates=board.candidates + (entry,))
    if any(v.voter_id == entry.voter_id for v in board.voters):
        raise RegistrationError("duplicate-id")
    if ledger is None or ledger.balance(entry.address_pk) < board.x + board.z:
        raise RegistrationError("insufficient-funds")
    return replace(board, voters=board.voters + (entry,))


# -- votes -------------------------------------------------------------------


@dataclass(frozen=True)
class VotePlaintext:
    share: SecretShare
    candidate_id: int

    def encode(self, params: GroupParams) -> bytes:
        return u16(self.share.index) + params.encode_scalar(self.share.value) + u16(self.candidate_id)

    @classmethod
    def decode(cls, params: GroupParams, data: bytes) -> VotePlaintext:
        r = Reader(data)
        index = r.u16()
        value = params.decode_scalar(r.take(params.scalar_len))
        cid = r.u16()
        r.done()
        return cls(SecretShare(index, value), cid)


def build_vote(
    params: GroupParams, board: BulletinBoard, share: SecretShare, candidate_id: int, randomness: bytes
) -> VoteCiphertext:
    cand = board.candidate(candidate_id)
    plaintext = VotePlaintext(share, candidate_id).encode(params)
    return crypto.pke_encrypt(params, cand.vote_pk, plaintext, randomness)


# -- decryption mixnet -------------------------------------------------------


def encode_vote_set(cts: Sequence[VoteCiphertext]) -> bytes:
    return u32(len(cts)) + b"".join(lp(ct.to_bytes()) for ct in cts)


def decode_vote_set(data: bytes) -> list[VoteCiphertext]:
    r = Reader(data)
    out = [VoteCiphertext.from_bytes(r.lp()) for _ in range(r.u32())]
    r.done()
    return out


@dataclass
class ShuffleState:
    position: int
    n: int
    own_vote: VoteCiphertext
    incoming: list[VoteCiphertext] = field(default_factory=list)
    permutation: tuple[int, ...] = ()
    consistency_hash: bytes | None = None


def shuffle_step(
    params: GroupParams,
    state: ShuffleState,
    sk: int,
    later_pks: Sequence[int],
    randomness: bytes,
) -> list[VoteCiphertext]:
    """Peel one layer off every incoming item, add our own onion, permute."""
    i = state.position
    if len(state.incoming) != i - 1:
        raise ShuffleAbort("malformed shuffle input from predecessor")
    if len(later_pks) != state.n - i:
        raise ValueError("need the public keys of every later voter")
    try:
        peeled = [crypto.onion_peel(params, sk, ct) for ct in state.incoming]
    except DecryptionError:
        raise ShuffleAbort("malformed shuffle input from predecessor") from None
    mine = crypto.onion_encrypt(params, state.own_vote, later_pks, randomness + b"/onion")
    items = peeled + [mine]
    state.permutation = crypto.derive_permutation(randomness + b"/perm", i)
    return crypto.apply_permutation(state.permutation, items)


def consistency_hash(votes: Sequence[VoteCiphertext]) -> bytes:
    """SHA-256 over the lexicographically sorted canonical encodings."""
    return sha256(b"".join(lp(b) for b in sorted(ct.to_bytes() for ct in votes)))


def finalize_shuffle(votes: Sequence[VoteCiphertext], broadcast_hashes: Sequence[bytes]) -> list[VoteCiphertext]:
    h = consistency_hash(votes)
    if any(b != h for b in broadcast_hashes):
        raise ShuffleAbort("consistency-failure")
    ordered = sorted(votes, key=VoteCiphertext.to_bytes)
    return crypto.apply_permutation(crypto.derive_permutation(h, len(ordered)), ordered)


# -- transactions ------------------------------------------------------------


def deposit_predicate(board: BulletinBoard, vote: VoteCiphertext, T: int):
    return Or(HashLock(hash160(vote.to_bytes())), After(board.t1, KeyLock(T)))


def build_commitment_tx(
    board: BulletinBoard,
    canonical_votes: Sequence[VoteCiphertext],
    address: ThresholdAddress,
    funding: Mapping[int, tuple[OutPoint, int]],
) -> Transaction:
    """One input per voter; deposits in canonical order, then the pool, then change.

    ``funding`` maps voter id to the (outpoint, value) it spends; value above
    x + z returns to the voter's address as change.
    """
    need = board.x + board.z
    inputs, change = [], []
    for v in board.voters:
        outpoint, value = funding[v.voter_id]
        if value < need:
            raise ProtocolError(f"voter {v.voter_id} funding below x + z")
        inputs.append(TxInput(outpoint))
        if value > need:
            change.append(TxOutput(value - need, KeyLock(v.address_pk)))
    outputs = [TxOutput(board.z, deposit_predicate(board, ct, address.public_key)) for ct in canonical_votes]
    outputs.append(TxOutput(board.n * board.x, KeyLock(address.public_key)))
    return Transaction(tuple(inputs), tuple(outputs + change))


def pool_index(tx: Transaction, address: ThresholdAddress) -> int:
    hits = [k for k, o in enumerate(tx.outputs) if o.predicate == KeyLock(address.public_key)]
    if len(hits) != 1:
        raise ProtocolError("commitment has no unique pool output")
    return hits[0]


def build_refund_tx(
    board: BulletinBoard, commitment_txid: bytes, pool: int, signature: crypto.Signature | None = None
) -> Transaction:
    tx = Transaction(
        (TxInput(OutPoint(commitment_txid, pool)),),
        tuple(TxOutput(board.x, KeyLock(v.address_pk)) for v in board.voters),
        locktime=board.t2,
    )
    return tx if signature is None else tx.with_witnesses([Sig(signature)])


def cosign_commitment(
    params: GroupParams,
    tx: Transaction,
    board: BulletinBoard,
    voter_id: int,
    address_sk: int,
    own_vote: VoteCiphertext,
    funding: Mapping[int, tuple[OutPoint, int]],
    refund: Transaction | None,
    randomness: bytes,
) -> crypto.Signature:
    """Sign our input of ``tx`` or raise CosignRefusal with the reason."""
    T = board.address.public_key
    digest = hash160(own_vote.to_bytes())
    hits = sum(
        1
        for o in tx.outputs
        if isinstance(o.predicate, Or) and o.predicate.left == HashLock(digest)
    )
    if hits == 0:
        raise CosignRefusal("own-vote-missing")
    if hits > 1:
        raise CosignRefusal("own-vote-duplicated")

    pools = [o for o in tx.outputs if o.predicate == KeyLock(T)]
    deposits = [o for o in tx.outputs if isinstance(o.predicate, Or)]
    own_outpoint, own_value = funding[voter_id]
    own_change = [
        o.value for o in tx.outputs if o.predicate == KeyLock(board.voter(voter_id).address_pk)
    ]
    spent = {i.outpoint for i in tx.inputs}
    in_value = sum(value for op, value in funding.values() if op in spent)
    if (
        len(pools) != 1
        or pools[0].value != board.n * board.x
        or any(o.value != board.z for o in deposits)
        or own_outpoint not in spent
        or sum(own_change) != own_value - board.x - board.z
        or in_value != sum(o.value for o in tx.outputs)
    ):
        raise CosignRefusal("amounts-wrong")

    pool = tx.outputs.index(pools[0])
    if (
        refund is None
        or refund.inputs[0].outpoint != OutPoint(tx.txid, pool)
        or refund.locktime != board.t2
        or not isinstance(refund.inputs[0].witness, Sig)
        or not crypto.verify(params, T, refund.signing_bytes(), refund.inputs[0].witness.signature)
    ):
        raise CosignRefusal("refund-unsigned")
    return crypto.sign(params, address_sk, tx.signing_bytes(), randomness)


@dataclass
class VoteRecord:
    position: int
    vote: VoteCiphertext
    deposit: OutPoint
    revealed: bool = False
    claim_txid: bytes | None = None


def vote_records(tx: Transaction, canonical_votes: Sequence[VoteCiphertext]) -> list[VoteRecord]:
    return [VoteRecord(k, ct, tx.outpoint(k)) for k, ct in enumerate(canonical_votes)]


def build_claim_tx(board: BulletinBoard, record: VoteRecord, pay_to_pk: int, preimage: bytes | None = None) -> Transaction:
    """Reveal the vote to take the deposit back through the hash-lock branch."""
    data = record.vote.to_bytes() if preimage is None else preimage
    return Transaction(
        (TxInput(record.deposit, Branch("left", Preimage(data))),),
        (TxOutput(board.z, KeyLock(pay_to_pk)),),
    )


def seizure_split(total: int, k: int) -> list[int]:
    base, rem = divmod(total, k)
    return [base + rem] + [base] * (k - 1)


def build_seizure_tx(
    board: BulletinBoard,
    deposits: Sequence[OutPoint],
    payout_pks: Sequence[int],
    signature: crypto.Signature | None = None,
) -> Transaction:
    """Spend unclaimed deposits via the T-after-t1 branch, split over ``payout_pks``.

    ``payout_pks`` is ordered by signer index; the first takes any remainder.
    """
    if not deposits:
        raise ProtocolError("nothing to seize")
    if not payout_pks:
        raise ProtocolError("no cooperating signers")
    split = seizure_split(board.z * len(deposits), len(payout_pks))
    outputs = tuple(TxOutput(v, KeyLock(pk)) for v, pk in zip(split, payout_pks) if v > 0)
    tx = Transaction(tuple(TxInput(op) for op in deposits), outputs)
    if signature is None:
        return tx
    return tx.with_witnesses([Branch("right", Sig(signature))] * len(deposits))


def collect_votes(
    params: GroupParams,
    board: BulletinBoard,
    candidate_id: int,
    sk: int,
    preimages: Sequence[bytes],
    on_skip: Callable[[int, str], None] | None = None,
) -> list[SecretShare]:
    """Trial-decrypt every revealed vote and keep valid shares addressed to us."""

    def skip(k: int, why: str) -> None:
        log.debug("candidate %d skips reveal %d: %s", candidate_id, k, why)
        if on_skip is not None:
            on_skip(k, why)

    shares: dict[int, SecretShare] = {}
    for k, data in enumerate(preimages):
        try:
            plain = crypto.pke_decrypt(params, sk, VoteCiphertext.from_bytes(data))
        except (ValueError, DecryptionError):
            skip(k, "not-addressed")
            continue
        try:
            vote = VotePlaintext.decode(params, plain)
        except ValueError:
            skip(k, "malformed-plaintext")
            continue
        if vote.candidate_id != candidate_id:
            skip(k, "wrong-candidate-id")
        elif board.commitments is None or not verify_share(params, vote.share, board.commitments):
            skip(k, "invalid-share")
        elif vote.share.index in shares:
            skip(k, "duplicate-share")
        else:
            shares[vote.share.index] = vote.share
    return list(shares.values())


def build_win_tx(
    params: GroupParams,
    board: BulletinBoard,
    candidate_id: int,
    shares: Sequence[SecretShare],
    address: ThresholdAddress,
    pool_outpoint: OutPoint,
    randomness: bytes,
) -> Transaction:
    secret = reconstruct_secret(shares, address.t, params.q)
    if params.base_exp(secret) != address.public_key:
        raise ProtocolError("reconstructed key does not match T")
    cand = board.candidate(candidate_id)
    tx = Transaction(
        (TxInput(pool_outpoint),),
        (TxOutput(board.n * board.x, KeyLock(cand.payout_pk)),),
    )
    return tx.with_witnesses([Sig(crypto.sign(params, secret, tx.signing_bytes(), randomness))])
