"""Seeded generator of predicate/witness pairs whose spend time is known by construction."""

import random
from dataclasses import dataclass

from btcvote.crypto import hash160, sign
from btcvote.group import TEST, keygen
from btcvote.ledger import After, And, Branch, HashLock, KeyLock, Or, Pair, Preimage, Sig

KEYS = [keygen(TEST, f"script-key-{i}".encode()) for i in range(4)]
MESSAGE = b"spending digest"


@dataclass
class Case:
    predicate: object
    witness: object
    earliest: int | None  # None: the witness never satisfies the predicate
    preimages: list  # committed (digest, preimage) pairs along the satisfied path


def _leaf(rng, valid):
    if rng.random() < 0.5:
        secret = rng.randbytes(rng.randint(0, 24))
        given = secret if valid else secret + b"\x00"
        return HashLock(hash160(secret)), Preimage(given), [(hash160(secret), secret)]
    key = rng.choice(KEYS)
    msg = MESSAGE if valid else MESSAGE + b"!"
    return KeyLock(key.pk), Sig(sign(TEST, key.sk, msg, rng.randbytes(8))), []


def _build(rng, depth, valid):
    """Return (predicate, witness, earliest, preimages); earliest is the
    largest After bound on the path the witness takes."""
    kind = rng.choice(["leaf", "after", "or", "and"]) if depth > 1 else "leaf"
    if kind == "leaf":
        pred, wit, pre = _leaf(rng, valid)
        return pred, wit, 0, pre
    if kind == "after":
        t = rng.randint(0, 50)
        pred, wit, e, pre = _build(rng, depth - 1, valid)
        return After(t, pred), wit, max(t, e), pre
    if kind == "or":
        side = rng.choice(["left", "right"])
        taken = _build(rng, depth - 1, valid)
        # The untaken branch is always satisfiable on its own, with a decoy witness that is discarded.
        other = _build(rng, depth - 1, True)
        left, right = (taken, other) if side == "left" else (other, taken)
        return Or(left[0], right[0]), Branch(side, taken[1]), taken[2], taken[3]
    bad_side = rng.choice([0, 1]) if not valid else None
    a = _build(rng, depth - 1, bad_side != 0)
    b = _build(rng, depth - 1, bad_side != 1)
    return And(a[0], b[0]), Pair(a[1], b[1]), max(a[2], b[2]), a[3] + b[3]


def generate(seed: int) -> Case:
    rng = random.Random(seed)
    valid = rng.random() < 0.75
    pred, wit, earliest, pre = _build(rng, rng.randint(1, 5), valid)
    return Case(pred, wit, earliest if valid else None, pre)
