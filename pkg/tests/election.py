"""Protocol-level fixture: an election wired by hand, without the simulator."""

from dataclasses import dataclass, field

from btcvote import protocol
from btcvote.crypto import Signature
from btcvote.group import TEST, keygen
from btcvote.ledger import KeyLock, LedgerState, Sig, TxOutput, apply_tx, validate_tx
from btcvote.protocol import BulletinBoard, CandidateEntry, ShuffleState, VoterEntry
from btcvote.threshold import dkg_run, threshold_sign


@dataclass
class Election:
    params: object
    votes: dict
    x: int = 2
    z: int = 1
    t: int = 2
    t1: int = 10
    t2: int = 20
    tag: str = "e"
    m: int = 2
    voter_keys: dict = field(default_factory=dict)
    shuffle_keys: dict = field(default_factory=dict)
    cand_keys: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.votes)
        self.voter_keys = {v: keygen(self.params, f"{self.tag}/addr/{v}".encode()) for v in self.votes}
        self.shuffle_keys = {v: keygen(self.params, f"{self.tag}/mix/{v}".encode()) for v in self.votes}
        self.cand_keys = {
            c: (keygen(self.params, f"{self.tag}/pay/{c}".encode()), keygen(self.params, f"{self.tag}/vk/{c}".encode()))
            for c in range(1, self.m + 1)
        }
        self.ledger = LedgerState.genesis(
            self.params, [TxOutput(self.x + self.z, KeyLock(self.voter_keys[v].pk)) for v in sorted(self.votes)]
        )
        board = BulletinBoard(self.t, self.x, self.z, self.t1, self.t2)
        for c, (pay, vk) in self.cand_keys.items():
            board = protocol.register(board, CandidateEntry(c, pay.pk, vk.pk))
        for v in sorted(self.votes):
            board = protocol.register(
                board, VoterEntry(v, self.voter_keys[v].pk, self.shuffle_keys[v].pk), self.ledger
            )
        board = board.close()
        self.address, comms, shares = dkg_run(
            self.params, n, self.t, [f"{self.tag}/dkg/{v}".encode() for v in sorted(self.votes)]
        )
        self.board = board.publish_key(self.address, comms)
        self.shares = {v: shares[k] for k, v in enumerate(sorted(self.votes))}
        self.cast = {
            v: protocol.build_vote(self.params, self.board, self.shares[v], c, f"{self.tag}/vote/{v}".encode())
            for v, c in self.votes.items()
        }
        self.funding = {
            v: (op, out.value)
            for v in self.votes
            for op, out in self.ledger.outputs_for(self.voter_keys[v].pk)
        }

    @property
    def order(self):
        return sorted(self.votes)

    def shuffle(self, tamper=None):
        """Run the mixnet; returns (O_n, per-voter hashes)."""
        incoming = []
        n = len(self.order)
        for pos, v in enumerate(self.order, start=1):
            state = ShuffleState(pos, n, self.cast[v], list(incoming))
            later = [self.shuffle_keys[w].pk for w in self.order[pos:]]
            incoming = protocol.shuffle_step(
                self.params, state, self.shuffle_keys[v].sk, later, f"{self.tag}/mix/{v}".encode()
            )
        final = incoming
        hashes = [protocol.consistency_hash(final) for _ in self.order]
        if tamper is not None:
            hashes[tamper] = protocol.consistency_hash(final[:-1])
        return final, hashes

    def commitment(self):
        final, hashes = self.shuffle()
        canonical = protocol.finalize_shuffle(final, hashes)
        tx = protocol.build_commitment_tx(self.board, canonical, self.address, self.funding)
        return canonical, tx

    def signed_refund(self, tx):
        pool = protocol.pool_index(tx, self.address)
        refund = protocol.build_refund_tx(self.board, tx.txid, pool)
        sig = self.tsign(refund.signing_bytes())
        return refund.with_witnesses([Sig(sig)])

    def tsign(self, message, signers=None) -> Signature:
        signers = signers or self.order[: self.t]
        return threshold_sign(
            self.params, [(self.shares[v], f"{self.tag}/ts/{v}".encode()) for v in signers], message, self.address
        )

    def accept(self, tx):
        verdict = validate_tx(tx, self.ledger)
        assert verdict, verdict.reason
        self.ledger = apply_tx(tx, self.ledger)


def election(votes, params=TEST, **kw):
    return Election(params, dict(votes), **kw)
