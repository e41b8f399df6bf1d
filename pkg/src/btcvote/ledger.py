"""Simulated UTXO ledger with a tick clock and typed spending predicates.

Predicates replace a stack script language: a spending condition is a small
tree of hash-locks, key-locks, absolute timelocks and boolean combinators.
There are no fees and no blocks; the ledger is a flat ordered history.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import NamedTuple, Union

from .crypto import Signature, hash160, sha256, verify
from .encoding import lp, lp_int, u32, u64
from .errors import LedgerError
from .group import GroupParams

MAX_DEPTH = 8


# -- predicates --------------------------------------------------------------


@dataclass(frozen=True)
class HashLock:
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 20:
            raise ValueError("HashLock digest must be 20 bytes")


@dataclass(frozen=True)
class KeyLock:
    pk: int


@dataclass(frozen=True)
class After:
    """Satisfied from tick ``time`` onward, and only if ``inner`` is."""

    time: int
    inner: Predicate

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("negative timelock")


@dataclass(frozen=True)
class Or:
    left: Predicate
    right: Predicate


@dataclass(frozen=True)
class And:
    left: Predicate
    right: Predicate


Predicate = Union[HashLock, KeyLock, After, Or, And]


def depth(pred: Predicate) -> int:
    match pred:
        case HashLock() | KeyLock():
            return 1
        case After(inner=inner):
            return 1 + depth(inner)
        case Or(left=a, right=b) | And(left=a, right=b):
            return 1 + max(depth(a), depth(b))
    raise TypeError(f"not a predicate: {pred!r}")


def serialize_predicate(pred: Predicate) -> bytes:
    match pred:
        case HashLock(digest=d):
            return b"H" + d
        case KeyLock(pk=pk):
            return b"K" + lp_int(pk)
        case After(time=t, inner=inner):
            return b"T" + u64(t) + lp(serialize_predicate(inner))
        case Or(left=a, right=b):
            return b"O" + lp(serialize_predicate(a)) + lp(serialize_predicate(b))
        case And(left=a, right=b):
            return b"A" + lp(serialize_predicate(a)) + lp(serialize_predicate(b))
    raise TypeError(f"not a predicate: {pred!r}")


def render_predicate(pred: Predicate) -> str:
    match pred:
        case HashLock(digest=d):
            return f"HASH160 <{d.hex()}> EQUAL"
        case KeyLock(pk=pk):
            h = f"{pk:x}"
            return f"KEY <{h[:16]}..>" if len(h) > 16 else f"KEY <{h}>"
        case After(time=t, inner=inner):
            return f"AFTER({t}) AND {render_predicate(inner)}"
        case Or(left=a, right=b):
            return f"({render_predicate(a)}) OR ({render_predicate(b)})"
        case And(left=a, right=b):
            return f"({render_predicate(a)}) AND ({render_predicate(b)})"
    raise TypeError(f"not a predicate: {pred!r}")


# -- witnesses ---------------------------------------------------------------


@dataclass(frozen=True)
class Preimage:
    data: bytes


@dataclass(frozen=True)
class Sig:
    signature: Signature


@dataclass(frozen=True)
class Branch:
    side: str
    inner: Witness

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("branch side must be 'left' or 'right'")


@dataclass(frozen=True)
class Pair:
    first: Witness
    second: Witness


Witness = Union[Preimage, Sig, Branch, Pair]


def eval_predicate(
    params: GroupParams, pred: Predicate, witness: Witness, message: bytes, now: int
) -> bool:
    """True iff ``witness`` satisfies ``pred`` at tick ``now``; shape mismatch is False."""
    match pred, witness:
        case HashLock(digest=d), Preimage(data=data):
            return hash160(data) == d
        case KeyLock(pk=pk), Sig(signature=sig):
            return verify(params, pk, message, sig)
        case After(time=t, inner=inner), _:
            return now >= t and eval_predicate(params, inner, witness, message, now)
        case Or(left=a, right=b), Branch(side=side, inner=w):
            return eval_predicate(params, a if side == "left" else b, w, message, now)
        case And(left=a, right=b), Pair(first=w1, second=w2):
            return eval_predicate(params, a, w1, message, now) and eval_predicate(
                params, b, w2, message, now
            )
    return False


# -- transactions ------------------------------------------------------------


class OutPoint(NamedTuple):
    txid: bytes
    index: int


@dataclass(frozen=True)
class TxOutput:
    value: int
    predicate: Predicate

    def __post_init__(self):
        if not isinstance(self.value, int) or self.value < 1:
            raise ValueError("output value must be a positive integer")
        if depth(self.predicate) > MAX_DEPTH:
            raise ValueError("predicate deeper than 8")


@dataclass(frozen=True)
class TxInput:
    outpoint: OutPoint
    witness: Witness | None = None


@dataclass(frozen=True)
class Transaction:
    inputs: tuple[TxInput, ...]
    outputs: tuple[TxOutput, ...]
    locktime: int = 0

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not self.inputs or not self.outputs:
            raise ValueError("transaction needs at least one input and one output")
        if self.locktime < 0:
            raise ValueError("negative locktime")

    def signing_bytes(self) -> bytes:
        """Canonical serialization with witnesses blanked; this is what KeyLocks sign."""
        parts = [b"btcvote-tx/1", u32(len(self.inputs))]
        for txin in self.inputs:
            parts.append(lp(txin.outpoint.txid) + u32(txin.outpoint.index))
        parts.append(u32(len(self.outputs)))
        for out in self.outputs:
            parts.append(u64(out.value) + lp(serialize_predicate(out.predicate)))
        parts.append(u64(self.locktime))
        return b"".join(parts)

    @property
    def txid(self) -> bytes:
        return sha256(self.signing_bytes())

    def with_witnesses(self, witnesses: Sequence[Witness | None]) -> Transaction:
        if len(witnesses) != len(self.inputs):
            raise ValueError("one witness per input")
        return replace(
            self, inputs=tuple(TxInput(i.outpoint, w) for i, w in zip(self.inputs, witnesses))
        )

    def outpoint(self, index: int) -> OutPoint:
        if not 0 <= index < len(self.outputs):
            raise IndexError(index)
        return OutPoint(self.txid, index)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


ACCEPT = Verdict(True)


@dataclass(frozen=True)
class LedgerState:
    params: GroupParams
    utxos: Mapping[OutPoint, TxOutput] = field(default_factory=dict)
    clock: int = 0
    history: tuple[bytes, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "utxos", MappingProxyType(dict(self.utxos)))

    @classmethod
    def genesis(cls, params: GroupParams, outputs: Iterable[TxOutput], clock: int = 0) -> LedgerState:
        outputs = list(outputs)
        gid = genesis_txid(outputs)
        return cls(params, {OutPoint(gid, i): out for i, out in enumerate(outputs)}, clock)

    def total_value(self) -> int:
        return sum(out.value for out in self.utxos.values())

    def balance(self, pk: int) -> int:
        return sum(
            out.value
            for out in self.utxos.values()
            if isinstance(out.predicate, KeyLock) and out.predicate.pk == pk
        )

    def outputs_for(self, pk: int) -> list[tuple[OutPoint, TxOutput]]:
        return [
            (op, out)
            for op, out in self.utxos.items()
            if isinstance(out.predicate, KeyLock) and out.predicate.pk == pk
        ]


def genesis_txid(outputs: Sequence[TxOutput]) -> bytes:
    body = b"".join(u64(o.value) + lp(serialize_predicate(o.predicate)) for o in outputs)
    return sha256(b"btcvote-genesis" + body)


def validate_tx(tx: Transaction, state: LedgerState) -> Verdict:
    outpoints = [i.outpoint for i in tx.inputs]
    if len(set(outpoints)) != len(outpoints):
        return Verdict(False, "double-spend-within-tx")
    if any(op not in state.utxos for op in outpoints):
        return Verdict(False, "missing-utxo")
    if tx.locktime > state.clock:
        return Verdict(False, "locktime-not-reached")
    message = tx.signing_bytes()
    for k, txin in enumerate(tx.inputs):
        spent = state.utxos[txin.outpoint]
        if txin.witness is None or not eval_predicate(
            state.params, spent.predicate, txin.witness, message, state.clock
        ):
            return Verdict(False, f"script-failure({k})")
    if sum(state.utxos[op].value for op in outpoints) != sum(o.value for o in tx.outputs):
        return Verdict(False, "value-mismatch")
    return ACCEPT


def apply_tx(tx: Transaction, state: LedgerState) -> LedgerState:
    verdict = validate_tx(tx, state)
    if not verdict:
        raise LedgerError(f"apply_tx on a rejected transaction: {verdict.reason}")
    utxos = dict(state.utxos)
    for txin in tx.inputs:
        del utxos[txin.outpoint]
    txid = tx.txid
    for k, out in enumerate(tx.outputs):
        utxos[OutPoint(txid, k)] = out
    return replace(state, utxos=utxos, history=state.history + (txid,))


def advance_clock(state: LedgerState, ticks: int) -> LedgerState:
    if ticks < 0:
        raise ValueError("clock cannot run backwards")
    if ticks == 0:
        return state
    return replace(state, clock=state.clock + ticks)


# -- JSON export -------------------------------------------------------------


def predicate_to_json(pred: Predicate) -> dict:
    match pred:
        case HashLock(digest=d):
            return {"type": "hashlock", "digest": d.hex()}
        case KeyLock(pk=pk):
            return {"type": "keylock", "pk": f"{pk:x}"}
        case After(time=t, inner=inner):
            return {"type": "after", "time": t, "inner": predicate_to_json(inner)}
        case Or(left=a, right=b):
            return {"type": "or", "left": predicate_to_json(a), "right": predicate_to_json(b)}
        case And(left=a, right=b):
            return {"type": "and", "left": predicate_to_json(a), "right": predicate_to_json(b)}
    raise TypeError(f"not a predicate: {pred!r}")


def predicate_from_json(obj: dict) -> Predicate:
    kind = obj["type"]
    if kind == "hashlock":
        return HashLock(bytes.fromhex(obj["digest"]))
    if kind == "keylock":
        return KeyLock(int(obj["pk"], 16))
    if kind == "after":
        return After(int(obj["time"]), predicate_from_json(obj["inner"]))
    if kind in ("or", "and"):
        cls = Or if kind == "or" else And
        return cls(predicate_from_json(obj["left"]), predicate_from_json(obj["right"]))
    raise ValueError(f"unknown predicate type {kind!r}")


def witness_to_json(w: Witness | None) -> dict | None:
    match w:
        case None:
            return None
        case Preimage(data=data):
            return {"type": "preimage", "data": data.hex()}
        case Sig(signature=sig):
            return {"type": "sig", "R": f"{sig.R:x}", "s": f"{sig.s:x}"}
        case Branch(side=side, inner=inner):
            return {"type": "branch", "side": side, "inner": witness_to_json(inner)}
        case Pair(first=a, second=b):
            return {"type": "pair", "first": witness_to_json(a), "second": witness_to_json(b)}
    raise TypeError(f"not a witness: {w!r}")


def witness_from_json(obj: dict | None) -> Witness | None:
    if obj is None:
        return None
    kind = obj["type"]
    if kind == "preimage":
        return Preimage(bytes.fromhex(obj["data"]))
    if kind == "sig":
        return Sig(Signature(int(obj["R"], 16), int(obj["s"], 16)))
    if kind == "branch":
        return Branch(obj["side"], witness_from_json(obj["inner"]))
    if kind == "pair":
        return Pair(witness_from_json(obj["first"]), witness_from_json(obj["second"]))
    raise ValueError(f"unknown witness type {kind!r}")


def output_to_json(out: TxOutput) -> dict:
    return {
        "value": out.value,
        "predicate": predicate_to_json(out.predicate),
        "script": render_predicate(out.predicate),
    }


def tx_to_json(tx: Transaction) -> dict:
    return {
        "txid": tx.txid.hex(),
        "locktime": tx.locktime,
        "inputs": [
            {
                "txid": i.outpoint.txid.hex(),
                "index": i.outpoint.index,
                "witness": witness_to_json(i.witness),
            }
            for i in tx.inputs
        ],
        "outputs": [output_to_json(o) for o in tx.outputs],
    }


def tx_from_json(obj: dict) -> Transaction:
    """Rebuild a transaction; the recorded txid is not trusted, recompute ``.txid``."""
    return Transaction(
        inputs=tuple(
            TxInput(OutPoint(bytes.fromhex(i["txid"]), int(i["index"])), witness_from_json(i["witness"]))
            for i in obj["inputs"]
        ),
        outputs=tuple(
            TxOutput(int(o["value"]), predicate_from_json(o["predicate"])) for o in obj["outputs"]
        ),
        locktime=int(obj["locktime"]),
    )
