"""Deterministic discrete-event harness for whole voting runs.

All randomness is derived from the scenario's master seed, messages are
delivered in the fixed order (phase, sender, sequence number), and the
ledger clock only moves at scripted points. Replaying a config therefore
reproduces its transcript byte for byte.
"""

from __future__ import annotations

import heapq
import itertools
import json
import logging
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from . import crypto, ledger, protocol, threshold
from .crypto import VoteCiphertext, sha256
from .encoding import lp, u64
from .errors import ConfigError, CosignRefusal, DkgAbort, ProtocolError, ShuffleAbort
from .group import GroupParams, KeyPair, get_group, keygen
from .ledger import KeyLock, LedgerState, OutPoint, Transaction, TxOutput

log = logging.getLogger(__name__)

TRANSCRIPT_FORMAT = "btcvote-transcript/1"

# Delivery order across phases; within a phase, by sender then sequence.
PHASES = (
    "registration",
    "dkg-commit",
    "dkg-share",
    "shuffle",
    "shuffle-final",
    "consistency",
    "proposal",
    "refund-nonce",
    "refund-partial",
    "refund-signed",
    "cosign",
    "reveal",
    "seizure-nonce",
    "seizure-partial",
)
PHASE_RANK = {p: k for k, p in enumerate(PHASES)}

ADVERSARIES = (
    "none",
    "dropout",
    "tamper-last-shuffler",
    "double-claim",
    "garbage-vote",
    "withhold-reveal",
)
DROPOUT_PHASES = ("registration", "dkg", "shuffle", "signing", "reveal")


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class Adversary:
    kind: str = "none"
    voter: int | None = None
    phase: str | None = None

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind}
        if self.voter is not None:
            d["voter"] = self.voter
        if self.phase is not None:
            d["phase"] = self.phase
        return d

    def targets(self, voter: int, kind: str, phase: str | None = None) -> bool:
        return self.kind == kind and self.voter == voter and (phase is None or self.phase == phase)


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    m: int
    t: int
    x: int
    z: int
    t1: int
    t2: int
    votes: Mapping[int, int]
    master_seed: bytes
    adversary: Adversary = Adversary()
    group: str = "crypto"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("n", "m", "t", "x", "z", "t1", "t2"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(name, "must be an integer")
        if self.n < 2:
            raise ConfigError("n", "need at least two voters")
        if self.m < 1:
            raise ConfigError("m", "need at least one candidate")
        if not 1 <= self.t <= self.n:
            raise ConfigError("t", "need 1 <= t <= n")
        if self.x < 1:
            raise ConfigError("x", "must be positive")
        if self.z < 1:
            raise ConfigError("z", "must be positive")
        if self.t1 < 1:
            raise ConfigError("t1", "must be at least 1")
        if self.t2 <= self.t1:
            raise ConfigError("t2", "must be later than t1")
        for v in range(1, self.n + 1):
            if v not in self.votes:
                raise ConfigError(f"votes.{v}", "missing vote entry")
            if not 1 <= self.votes[v] <= self.m:
                raise ConfigError(f"votes.{v}", "unknown candidate")
        extra = set(self.votes) - set(range(1, self.n + 1))
        if extra:
            raise ConfigError(f"votes.{min(extra)}", "no such voter")
        if not self.master_seed:
            raise ConfigError("master_seed", "must be non-empty")
        adv = self.adversary
        if adv.kind not in ADVERSARIES:
            raise ConfigError("adversary.kind", f"must be one of {', '.join(ADVERSARIES)}")
        needs_voter = adv.kind in ("dropout", "double-claim", "garbage-vote", "withhold-reveal")
        if needs_voter and (adv.voter is None or not 1 <= adv.voter <= self.n):
            raise ConfigError("adversary.voter", "must name a voter in 1..n")
        if adv.kind == "dropout" and adv.phase not in DROPOUT_PHASES:
            raise ConfigError("adversary.phase", f"must be one of {', '.join(DROPOUT_PHASES)}")
        try:
            get_group(self.group)
        except ValueError as exc:
            raise ConfigError("group", str(exc)) from None

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ScenarioConfig:
        if not isinstance(d, Mapping):
            raise ConfigError("config", "must be a JSON object")
        for name in ("n", "m", "t", "x", "t1", "t2", "votes", "master_seed"):
            if name not in d:
                raise ConfigError(name, "missing field")
        votes_raw = d["votes"]
        if isinstance(votes_raw, list):
            votes_raw = {str(k + 1): v for k, v in enumerate(votes_raw)}
        if not isinstance(votes_raw, Mapping):
            raise ConfigError("votes", "must map voter id to candidate id")
        votes = {}
        for key, value in votes_raw.items():
            try:
                votes[int(key)] = int(value)
            except (TypeError, ValueError):
                raise ConfigError(f"votes.{key}", "must be an integer candidate id") from None
        try:
            seed = bytes.fromhex(d["master_seed"])
        except (TypeError, ValueError):
            raise ConfigError("master_seed", "must be a hex string") from None
        adv_raw = d.get("adversary", "none")
        if isinstance(adv_raw, str):
            adv_raw = {"kind": adv_raw}
        if not isinstance(adv_raw, Mapping):
            raise ConfigError("adversary", "must be a string or an object")
        adversary = Adversary(adv_raw.get("kind", "none"), adv_raw.get("voter"), adv_raw.get("phase"))
        return cls(
            n=d["n"],
            m=d["m"],
            t=d["t"],
            x=d["x"],
            z=d.get("z", d["x"]),
            t1=d["t1"],
            t2=d["t2"],
            votes=votes,
            master_seed=seed,
            adversary=adversary,
            group=d.get("group", "crypto"),
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "t": self.t,
            "x": self.x,
            "z": self.z,
            "t1": self.t1,
            "t2": self.t2,
            "votes": {str(v): self.votes[v] for v in sorted(self.votes)},
            "master_seed": self.master_seed.hex(),
            "adversary": self.adversary.to_dict(),
            "group": self.group,
        }


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
    return ScenarioConfig.from_dict(data)


# -- randomness and transport ------------------------------------------------


class SeedStream:
    """Per-role randomness: SHA-256(master || role || counter)."""

    def __init__(self, master: bytes):
        self.master = master
        self._counters: dict[str, int] = defaultdict(int)

    def draw(self, role: str) -> bytes:
        k = self._counters[role]
        self._counters[role] = k + 1
        return sha256(self.master + lp(role.encode()) + u64(k))


@dataclass(order=True)
class Message:
    rank: int
    sender: int
    seq: int
    phase: str = field(compare=False)
    recipient: int | str = field(compare=False)
    kind: str = field(compare=False)
    payload: bytes = field(compare=False, default=b"")
    private: bool = field(compare=False, default=False)
    data: Any = field(compare=False, default=None, repr=False)


class Scheduler:
    """Reliable ordered channels; ``deliver`` pops the smallest pending key."""

    def __init__(self):
        self._heap: list[Message] = []
        self._seq = itertools.count()

    def post(self, phase, sender, recipient, kind, payload=b"", *, data=None, private=False) -> Message:
        msg = Message(PHASE_RANK[phase], sender, next(self._seq), phase, recipient, kind, payload, private, data)
        heapq.heappush(self._heap, msg)
        return msg

    def deliver(self) -> Message | None:
        return heapq.heappop(self._heap) if self._heap else None

    @property
    def pending(self) -> int:
        return len(self._heap)


# -- roles -------------------------------------------------------------------


@dataclass(eq=False)
class Voter:
    voter_id: int
    address: KeyPair
    shuffle_key: KeyPair
    choice: int
    position: int = 0
    dkg: threshold.DkgParticipant | None = None
    share: threshold.SecretShare | None = None
    vote: VoteCiphertext | None = None
    shuffle: protocol.ShuffleState | None = None
    final_set: list[VoteCiphertext] | None = None
    hashes: dict[int, bytes] = field(default_factory=dict)
    canonical: list[VoteCiphertext] | None = None
    nonce: int | None = None
    funding: tuple[OutPoint, int] | None = None

    @property
    def name(self) -> str:
        return f"voter-{self.voter_id}"


@dataclass(eq=False)
class Candidate:
    candidate_id: int
    payout: KeyPair
    vote_key: KeyPair
    shares: list[threshold.SecretShare] = field(default_factory=list)

    @property
    def name(self) -> str:
        return f"candidate-{self.candidate_id}"


class Stall(Exception):
    def __init__(self, role: str, waiting_for: str):
        super().__init__(f"{role} blocked waiting for {waiting_for}")
        self.role = role
        self.waiting_for = waiting_for


class Abort(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# -- transcript --------------------------------------------------------------


def _hex(v: int) -> str:
    return f"{v:x}"


def dump_transcript(transcript: Mapping) -> str:
    return json.dumps(transcript, indent=2, ensure_ascii=True) + "\n"


# -- the run -----------------------------------------------------------------


class Simulation:
    """One scenario run. ``run()`` returns the transcript as a JSON-ready dict.

    After a run, attributes such as ``voters``, ``candidates``, ``board``,
    ``ledger`` and ``canonical_votes`` are available for inspection.
    """

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.params: GroupParams = get_group(config.group)
        self.rng = SeedStream(config.master_seed)
        self.sched = Scheduler()
        self.events: list[dict] = []
        self.voters: dict[int, Voter] = {}
        self.candidates: dict[int, Candidate] = {}
        self.active: list[Voter] = []
        self.board: protocol.BulletinBoard | None = None
        self.ledger: LedgerState | None = None
        self.canonical_votes: list[VoteCiphertext] = []
        self.records: list[protocol.VoteRecord] = []
        self.commitment: Transaction | None = None
        self.refund: Transaction | None = None
        self.cast_votes: dict[int, VoteCiphertext] = {}
        self._identities: dict[int, str] = {}
        self._genesis: list[dict] = []
        self._initial: dict[str, int] = {}

    # -- plumbing ------------------------------------------------------------

    def _event(self, name: str, /, **fields) -> None:
        ev = {"event": name}
        ev.update(fields)
        self.events.append(ev)

    def _post(self, phase, sender, recipient, kind, payload=b"", *, data=None, private=False):
        self.sched.post(phase, sender, recipient, kind, payload, data=data, private=private)

    def _drain(self, handler) -> None:
        while (msg := self.sched.deliver()) is not None:
            ev = {
                "phase": msg.phase,
                "from": msg.sender,
                "to": msg.recipient,
                "kind": msg.kind,
            }
            if msg.private:
                ev["digest"] = sha256(msg.payload).hex()
                ev["size"] = len(msg.payload)
            else:
                ev["payload"] = msg.payload.hex()
            self._event("message", **ev)
            recipients = (
                [v for v in self.active if v.voter_id != msg.sender]
                if msg.recipient == "*"
                else [self.voters[msg.recipient]]
            )
            for r in recipients:
                handler(r, msg)

    def _dropped(self, voter: Voter, phase: str) -> bool:
        return self.config.adversary.targets(voter.voter_id, "dropout", phase)

    def _owner(self, out: TxOutput) -> str:
        if isinstance(out.predicate, KeyLock):
            return self._identities.get(out.predicate.pk, "locked")
        return "locked"

    def balances(self) -> dict[str, int]:
        bal = {name: 0 for name in self._identities.values()}
        bal["locked"] = 0
        for out in self.ledger.utxos.values():
            bal[self._owner(out)] += out.value
        return dict(sorted(bal.items(), key=lambda kv: _identity_key(kv[0])))

    def _submit(self, kind: str, tx: Transaction) -> bool:
        verdict = ledger.validate_tx(tx, self.ledger)
        ev = {"kind": kind, "status": "accepted" if verdict else "rejected"}
        if not verdict:
            ev["reason"] = verdict.reason
        ev["clock"] = self.ledger.clock
        ev["tx"] = ledger.tx_to_json(tx)
        self._event("ledger", **ev)
        if verdict:
            self.ledger = ledger.apply_tx(tx, self.ledger)
        return bool(verdict)

    def _advance_to(self, tick: int) -> None:
        if tick > self.ledger.clock:
            self.ledger = ledger.advance_clock(self.ledger, tick - self.ledger.clock)
            self._event("clock", now=self.ledger.clock)

    # -- phases --------------------------------------------------------------

    def _setup(self) -> None:
        cfg, P = self.config, self.params
        for v in range(1, cfg.n + 1):
            self.voters[v] = Voter(
                v,
                keygen(P, self.rng.draw(f"voter-{v}/address")),
                keygen(P, self.rng.draw(f"voter-{v}/shuffle")),
                cfg.votes[v],
            )
            self._identities[self.voters[v].address.pk] = self.voters[v].name
        for c in range(1, cfg.m + 1):
            self.candidates[c] = Candidate(
                c,
                keygen(P, self.rng.draw(f"candidate-{c}/payout")),
                keygen(P, self.rng.draw(f"candidate-{c}/vote")),
            )
            self._identities[self.candidates[c].payout.pk] = self.candidates[c].name
        funding = [TxOutput(cfg.x + cfg.z, KeyLock(v.address.pk)) for v in self.voters.values()]
        self.ledger = LedgerState.genesis(P, funding)
        gid = ledger.genesis_txid(funding)
        for k, v in enumerate(self.voters.values()):
            v.funding = (OutPoint(gid, k), cfg.x + cfg.z)
        self._genesis = [
            {"txid": gid.hex(), "index": k, **ledger.output_to_json(out)} for k, out in enumerate(funding)
        ]
        self._initial = self.balances()

    def _registration(self) -> None:
        cfg = self.config
        board = protocol.BulletinBoard(t=cfg.t, x=cfg.x, z=cfg.z, t1=cfg.t1, t2=cfg.t2)
        for c in self.candidates.values():
            board = protocol.register(board, protocol.CandidateEntry(c.candidate_id, c.payout.pk, c.vote_key.pk))
        for v in self.voters.values():
            if self._dropped(v, "registration"):
                self._event("dropout", role=v.name, phase="registration")
                continue
            entry = protocol.VoterEntry(v.voter_id, v.address.pk, v.shuffle_key.pk)
            board = protocol.register(board, entry, self.ledger)
            self.active.append(v)
        try:
            self.board = board.close()
        except ProtocolError as exc:
            raise Abort("registration-failed") from exc
        self._event(
            "board",
            t=cfg.t,
            x=cfg.x,
            z=cfg.z,
            t1=cfg.t1,
            t2=cfg.t2,
            voters=[
                {"id": e.voter_id, "address": _hex(e.address_pk), "shuffle_pk": _hex(e.shuffle_pk)}
                for e in self.board.voters
            ],
            candidates=[
                {"id": e.candidate_id, "payout": _hex(e.payout_pk), "vote_pk": _hex(e.vote_pk)}
                for e in self.board.candidates
            ],
        )

    def _dkg(self) -> None:
        P, t = self.params, self.config.t
        participants = list(self.active)
        while True:
            n = len(participants)
            if n < 2 or t > n:
                raise Abort("dkg-failed")
            for pos, v in enumerate(participants, start=1):
                v.position = pos
                v.dkg = threshold.DkgParticipant(P, pos, n, t, self.rng.draw(f"{v.name}/dkg"))
            by_pos = {v.position: v for v in participants}
            self.active = participants
            silent = [v for v in participants if self._dropped(v, "dkg")]
            for v in participants:
                if v in silent:
                    continue
                comms = v.dkg.commitments()
                payload = b"".join(P.encode_element(a) for a in comms)
                self._post("dkg-commit", v.voter_id, "*", "commitments", payload, data=comms)
                for w in participants:
                    value = v.dkg.share_for(w.position)
                    if w is v:
                        v.dkg.receive_commitments(v.position, comms)
                        continue
                    self._post(
                        "dkg-share", v.voter_id, w.voter_id, "share",
                        P.encode_scalar(value), data=value, private=True,
                    )

            def handle(r: Voter, msg: Message) -> None:
                dealer = self.voters[msg.sender].position
                if msg.kind == "commitments":
                    r.dkg.receive_commitments(dealer, msg.data)
                else:
                    r.dkg.receive_share(dealer, msg.data)

            try:
                self._drain(handle)
                for v in participants:
                    if v not in silent:
                        v.dkg.receive_share(v.position, v.dkg.share_for(v.position))
            except DkgAbort as exc:
                raise Abort("dkg-failed") from exc
            missing = sorted({d for v in participants if v not in silent for d in v.dkg.missing_dealers()})
            if not missing:
                break
            dropped = [by_pos[d] for d in missing]
            self._event("dkg-restart", excluded=[v.name for v in dropped])
            for v in dropped:
                self._event("dropout", role=v.name, phase="dkg")
            participants = [v for v in participants if v not in dropped]

        results = [v.dkg.finalize() for v in participants]
        address, comms = results[0][2], results[0][1]
        if any(r[2] != address for r in results):
            raise Abort("dkg-failed")
        for v, r in zip(participants, results):
            v.share = r[0]
        # Re-register only the voters who finished the key setup.
        board = self.board
        keep = {v.voter_id for v in participants}
        board = protocol.BulletinBoard(
            t=board.t, x=board.x, z=board.z, t1=board.t1, t2=board.t2,
            voters=tuple(e for e in board.voters if e.voter_id in keep),
            candidates=board.candidates, closed=True,
        )
        self.board = board.publish_key(address, comms)
        self._event(
            "threshold-key",
            T=_hex(address.public_key),
            t=address.t,
            n=address.n,
            commitments={str(i): [_hex(a) for a in c] for i, c in comms.dealers.items()},
        )

    def _build_votes(self) -> None:
        P = self.params
        for v in self.active:
            rnd = self.rng.draw(f"{v.name}/vote")
            if self.config.adversary.targets(v.voter_id, "garbage-vote"):
                stray = keygen(P, self.rng.draw(f"{v.name}/garbage-key"))
                junk = sha256(rnd) * 4
                v.vote = crypto.pke_encrypt(P, stray.pk, junk[: 4 + P.scalar_len], rnd)
            else:
                v.vote = protocol.build_vote(P, self.board, v.share, v.choice, rnd)
            self.cast_votes[v.voter_id] = v.vote

    def _shuffle(self) -> None:
        P, n = self.params, len(self.active)
        order = self.active
        last = order[-1]
        for v in order:
            v.shuffle = protocol.ShuffleState(v.position, n, v.vote)

        def forward(v: Voter) -> None:
            later = [w.shuffle_key.pk for w in order[v.position:]]
            out = protocol.shuffle_step(P, v.shuffle, v.shuffle_key.sk, later, self.rng.draw(f"{v.name}/shuffle"))
            if v is last:
                v.final_set = out
                for w in order[:-1]:
                    sent = out
                    if w.position == 1 and self.config.adversary.kind == "tamper-last-shuffler":
                        # Equivocate: swap someone else's vote for a copy of our own.
                        k = next(k for k, ct in enumerate(out) if ct != v.vote)
                        sent = out[:k] + [v.vote] + out[k + 1:]
                    self._send_set("shuffle-final", v, w, sent)
            else:
                self._send_set("shuffle", v, order[v.position], out)

        def handle(r: Voter, msg: Message) -> None:
            body, sig = msg.data
            sender = self.voters[msg.sender]
            if not crypto.verify(P, sender.shuffle_key.pk, body, sig):
                raise Abort("bad-shuffle-signature")
            cts = protocol.decode_vote_set(body)
            if msg.phase == "shuffle-final":
                r.final_set = cts
            else:
                r.shuffle.incoming = cts
                if self._dropped(r, "shuffle"):
                    self._event("dropout", role=r.name, phase="shuffle")
                else:
                    forward(r)

        if self._dropped(order[0], "shuffle"):
            self._event("dropout", role=order[0].name, phase="shuffle")
        else:
            forward(order[0])
        try:
            self._drain(handle)
        except ShuffleAbort as exc:
            raise Abort(exc.reason) from exc
        for v in order[1:]:
            if not v.shuffle.incoming and v.final_set is None:
                raise Stall(v.name, "shuffle input")
        for v in order:
            if v.final_set is None:
                raise Stall(v.name, "final vote set")

        for v in order:
            v.shuffle.consistency_hash = protocol.consistency_hash(v.final_set)
            self._post("consistency", v.voter_id, "*", "hash", v.shuffle.consistency_hash)

        def on_hash(r: Voter, msg: Message) -> None:
            r.hashes[msg.sender] = msg.payload

        self._drain(on_hash)
        try:
            for v in order:
                others = [v.hashes[w.voter_id] for w in order if w is not v]
                v.canonical = protocol.finalize_shuffle(v.final_set, others)
        except ShuffleAbort as exc:
            self._event("abort-check", role=v.name, reason=exc.reason)
            raise Abort(exc.reason) from exc
        canon = order[0].canonical
        if any([c.to_bytes() for c in v.canonical] != [c.to_bytes() for c in canon] for v in order):
            raise Abort("consistency-failure")
        self.canonical_votes = canon
        self._event("shuffle-final", votes=[ct.to_bytes().hex() for ct in canon])

    def _send_set(self, phase: str, sender: Voter, recipient: Voter, cts) -> None:
        body = protocol.encode_vote_set(cts)
        sig = crypto.sign(self.params, sender.shuffle_key.sk, body, self.rng.draw(f"{sender.name}/msg-sig"))
        self._post(phase, sender.voter_id, recipient.voter_id, "vote-set",
                   body + sig.to_bytes(self.params), data=(body, sig))

    def _threshold_round(self, label: str, signers: list[Voter], coordinator: Voter, message: bytes):
        """Two-round threshold Schnorr over the channels; returns the signature."""
        P, address = self.params, self.board.address
        if len(signers) < address.t:
            raise Abort(f"{label}-signing-failed")
        nonces: dict[int, int] = {}
        for v in signers:
            k, R = threshold.signing_nonce(P, v.share, self.rng.draw(f"{v.name}/{label}-nonce"))
            v.nonce = k
            self._post(f"{label}-nonce", v.voter_id, "*", "nonce", P.encode_element(R), data=R)
            nonces[v.voter_id] = R

        seen: dict[int, set[int]] = defaultdict(set)

        def on_nonce(r: Voter, msg: Message) -> None:
            seen[r.voter_id].add(msg.sender)

        self._drain(on_nonce)
        indices = [v.position for v in signers]
        R = threshold.combine_nonces(P, (nonces[v.voter_id] for v in signers))
        partials: dict[int, int] = {}
        for v in signers:
            if seen[v.voter_id] | {v.voter_id} != {w.voter_id for w in signers}:
                raise Stall(v.name, f"{label} nonces")
            s_i = threshold.partial_sign(P, v.share, v.nonce, indices, R, message, address)
            v.nonce = None
            if v is coordinator:
                partials[v.voter_id] = s_i
            else:
                self._post(f"{label}-partial", v.voter_id, coordinator.voter_id, "partial",
                           P.encode_scalar(s_i), data=s_i)

        def on_partial(r: Voter, msg: Message) -> None:
            partials[msg.sender] = msg.data

        self._drain(on_partial)
        sig = threshold.aggregate(P, R, (partials[v.voter_id] for v in signers))
        if not crypto.verify(P, address.public_key, message, sig):
            raise Abort(f"{label}-signing-failed")
        return sig

    def _transactions(self) -> None:
        P, board = self.params, self.board
        coord = self.active[0]
        funding = {v.voter_id: v.funding for v in self.active}
        commit = protocol.build_commitment_tx(board, self.canonical_votes, board.address, funding)
        pool = protocol.pool_index(commit, board.address)
        refund = protocol.build_refund_tx(board, commit.txid, pool)
        self._post("proposal", coord.voter_id, "*", "commitment", commit.signing_bytes())
        self._post("proposal", coord.voter_id, "*", "refund", refund.signing_bytes())
        self._drain(lambda r, msg: None)

        signers = [v for v in self.active if not self._dropped(v, "signing")]
        for v in self.active:
            if v not in signers:
                self._event("dropout", role=v.name, phase="signing")
        sig = self._threshold_round("refund", signers, coord, refund.signing_bytes())
        refund = protocol.build_refund_tx(board, commit.txid, pool, sig)
        self._post("refund-signed", coord.voter_id, "*", "refund-witness", sig.to_bytes(P))
        self._drain(lambda r, msg: None)

        cosigs: dict[int, crypto.Signature] = {}
        for v in signers:
            try:
                s = protocol.cosign_commitment(
                    P, commit, board, v.voter_id, v.address.sk, v.vote, funding, refund,
                    self.rng.draw(f"{v.name}/cosign"),
                )
            except CosignRefusal as exc:
                self._event("cosign-refusal", role=v.name, reason=exc.reason)
                raise Abort("cosign-refused") from exc
            if v is coord:
                cosigs[v.voter_id] = s
            else:
                self._post("cosign", v.voter_id, coord.voter_id, "signature", s.to_bytes(P), data=s)

        def on_cosig(r: Voter, msg: Message) -> None:
            cosigs[msg.sender] = msg.data

        self._drain(on_cosig)
        missing = [v for v in self.active if v.voter_id not in cosigs]
        if missing:
            self._event("stall", role=coord.name, waiting_for=f"cosignature of {missing[0].name}")
            raise Abort("cosign-incomplete")
        by_outpoint = {v.funding[0]: v for v in self.active}
        witnesses = [ledger.Sig(cosigs[by_outpoint[i.outpoint].voter_id]) for i in commit.inputs]
        commit = commit.with_witnesses(witnesses)
        if not self._submit("commitment", commit):
            raise Abort("commitment-rejected")
        self.commitment, self.refund = commit, refund
        self.records = protocol.vote_records(commit, self.canonical_votes)

    def _reveal(self) -> None:
        adv = self.config.adversary
        slot = {r.vote.to_bytes(): r for r in self.records}
        for v in self.active:
            if adv.targets(v.voter_id, "withhold-reveal") or self._dropped(v, "reveal"):
                self._event("withheld", role=v.name)
                continue
            rec = slot[v.vote.to_bytes()]
            claim = protocol.build_claim_tx(self.board, rec, v.address.pk)
            self._post("reveal", v.voter_id, "*", "reveal", v.vote.to_bytes())
            if self._submit("claim", claim):
                rec.revealed, rec.claim_txid = True, claim.txid
            if adv.targets(v.voter_id, "double-claim"):
                self._submit("claim", claim)
        self._drain(lambda r, msg: None)

    def _tally_and_win(self) -> None:
        P = self.params
        preimages = [
            ledger.tx_from_json(ev["tx"]).inputs[0].witness.inner.data
            for ev in self.events
            if ev["event"] == "ledger" and ev["kind"] == "claim" and ev["status"] == "accepted"
        ]
        pool = OutPoint(self.commitment.txid, protocol.pool_index(self.commitment, self.board.address))
        for c in self.candidates.values():
            skipped = []
            c.shares = protocol.collect_votes(
                P, self.board, c.candidate_id, c.vote_key.sk, preimages,
                on_skip=lambda k, why: skipped.append({"reveal": k, "reason": why}),
            )
            self._event("tally", role=c.name, shares=len(c.shares),
                        skipped=[s for s in skipped if s["reason"] != "not-addressed"])
        for c in self.candidates.values():
            if len(c.shares) >= self.board.address.t:
                win = protocol.build_win_tx(
                    P, self.board, c.candidate_id, c.shares, self.board.address, pool,
                    self.rng.draw(f"{c.name}/win"),
                )
                self._submit("win", win)

    def _seize(self) -> None:
        self._advance_to(self.board.t1)
        unclaimed = [r for r in self.records if r.deposit in self.ledger.utxos]
        if not unclaimed:
            return
        claimed_ids = set()
        for v in self.active:
            rec = next(r for r in self.records if r.vote.to_bytes() == v.vote.to_bytes())
            if rec.revealed:
                claimed_ids.add(v.voter_id)
        coop = [v for v in self.active if v.voter_id in claimed_ids]
        if len(coop) < self.board.address.t:
            self._event("seizure-skipped", reason="not enough cooperating signers")
            return
        deposits = [r.deposit for r in unclaimed]
        unsigned = protocol.build_seizure_tx(self.board, deposits, [v.address.pk for v in coop])
        try:
            sig = self._threshold_round("seizure", coop, coop[0], unsigned.signing_bytes())
        except (Abort, Stall) as exc:
            self._event("seizure-skipped", reason=str(exc))
            return
        self._submit("seizure", protocol.build_seizure_tx(
            self.board, deposits, [v.address.pk for v in coop], sig))

    def _refund(self) -> None:
        self._advance_to(self.board.t2)
        if self.refund.inputs[0].outpoint in self.ledger.utxos:
            self._submit("refund", self.refund)

    def _outcome(self) -> dict:
        for ev in self.events:
            if ev["event"] == "ledger" and ev["status"] == "accepted" and ev["kind"] == "win":
                payee = int(ev["tx"]["outputs"][0]["predicate"]["pk"], 16)
                name = self._identities[payee]
                return {"kind": "winner", "candidate": int(name.split("-")[1])}
        if any(ev["event"] == "ledger" and ev["status"] == "accepted" and ev["kind"] == "refund"
               for ev in self.events):
            return {"kind": "refunded"}
        return {"kind": "unresolved"}

    def run(self) -> dict:
        self._setup()
        try:
            self._registration()
            self._dkg()
            self._build_votes()
            self._shuffle()
            self._transactions()
            self._reveal()
            self._tally_and_win()
            self._seize()
            self._refund()
            outcome = self._outcome()
        except Stall as exc:
            self._event("stall", role=exc.role, waiting_for=exc.waiting_for)
            self._event("abort", reason="stall")
            outcome = {"kind": "aborted", "reason": "stall"}
        except Abort as exc:
            self._event("abort", reason=exc.reason)
            outcome = {"kind": "aborted", "reason": exc.reason}
        final = self.balances()
        accepted = sum(1 for ev in self.events if ev["event"] == "ledger" and ev["status"] == "accepted")
        return {
            "format": TRANSCRIPT_FORMAT,
            "config": self.config.to_dict(),
            "identities": {name: _hex(pk) for pk, name in
                           sorted(self._identities.items(), key=lambda kv: _identity_key(kv[1]))},
            "genesis": self._genesis,
            "initial_balances": self._initial,
            "events": self.events,
            "final_balances": final,
            "accepted_transactions": accepted,
            "outcome": outcome,
        }


def _identity_key(name: str) -> tuple:
    role, _, idx = name.partition("-")
    return ({"voter": 0, "candidate": 1}.get(role, 2), int(idx) if idx.isdigit() else 0)


def run_scenario(config: ScenarioConfig) -> dict:
    return Simulation(config).run()
