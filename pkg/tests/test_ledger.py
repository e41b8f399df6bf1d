import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btcvote.crypto import Signature, hash160, sign
from btcvote.errors import LedgerError
from btcvote.group import TEST, keygen
from btcvote.ledger import (
    After,
    And,
    Branch,
    HashLock,
    KeyLock,
    LedgerState,
    Or,
    OutPoint,
    Pair,
    Preimage,
    Sig,
    Transaction,
    TxInput,
    TxOutput,
    advance_clock,
    apply_tx,
    depth,
    eval_predicate,
    predicate_from_json,
    predicate_to_json,
    render_predicate,
    tx_from_json,
    tx_to_json,
    validate_tx,
    witness_from_json,
    witness_to_json,
)

from .scriptgen import MESSAGE, generate

ALICE = keygen(TEST, b"alice")
BOB = keygen(TEST, b"bob")
T = keygen(TEST, b"threshold")


def keyspend(tx: Transaction, *keys) -> Transaction:
    msg = tx.signing_bytes()
    return tx.with_witnesses([Sig(sign(TEST, k.sk, msg, b"w")) for k in keys])


def funded(*values, owner=ALICE, clock=0):
    state = LedgerState.genesis(TEST, [TxOutput(v, KeyLock(owner.pk)) for v in values], clock)
    return state, sorted(state.utxos)


# -- eval_predicate ----------------------------------------------------------


def test_hashlock():
    assert eval_predicate(TEST, HashLock(hash160(b"v")), Preimage(b"v"), b"", 0)
    assert not eval_predicate(TEST, HashLock(hash160(b"v")), Preimage(b"w"), b"", 0)


def test_threshold_after_t1_blocks_early_spend():
    t1 = 10
    pred = After(t1, KeyLock(T.pk))
    sig = Sig(sign(TEST, T.sk, MESSAGE, b"r"))
    assert not eval_predicate(TEST, pred, sig, MESSAGE, t1 - 1)
    assert eval_predicate(TEST, pred, sig, MESSAGE, t1)
    # Same condition written as a conjunction with a separate timelocked leaf.
    conj = And(KeyLock(T.pk), After(t1, KeyLock(T.pk)))
    assert not eval_predicate(TEST, conj, Pair(sig, sig), MESSAGE, t1 - 1)
    assert eval_predicate(TEST, conj, Pair(sig, sig), MESSAGE, t1)


def test_deposit_hash_branch_any_time():
    h = hash160(b"vote")
    pred = Or(HashLock(h), After(10, KeyLock(T.pk)))
    for now in (0, 9, 10, 10_000):
        assert eval_predicate(TEST, pred, Branch("left", Preimage(b"vote")), MESSAGE, now)


def test_shape_mismatch_is_false():
    assert not eval_predicate(TEST, HashLock(hash160(b"v")), Sig(Signature(1, 1)), b"", 0)
    assert not eval_predicate(TEST, KeyLock(T.pk), Preimage(b"v"), b"", 0)
    assert not eval_predicate(TEST, Or(KeyLock(1), KeyLock(1)), Preimage(b""), b"", 0)
    assert not eval_predicate(TEST, And(KeyLock(1), KeyLock(1)), Branch("left", Preimage(b"")), b"", 0)


def test_predicate_validation():
    with pytest.raises(ValueError):
        HashLock(b"\x00" * 19)
    with pytest.raises(ValueError):
        After(-1, KeyLock(1))
    deep = KeyLock(1)
    for _ in range(8):
        deep = After(0, deep)
    assert depth(deep) == 9
    with pytest.raises(ValueError):
        TxOutput(1, deep)
    with pytest.raises(ValueError):
        TxOutput(0, KeyLock(1))


@pytest.mark.parametrize("seed", range(300))
def test_generated_scripts(seed):
    case = generate(seed)
    for now in range(0, 56, 5):
        ok = eval_predicate(TEST, case.predicate, case.witness, MESSAGE, now)
        assert ok == (case.earliest is not None and now >= case.earliest)


# -- validate / apply ---------------------------------------------------------


def test_commitment_shape_accepts_n3():
    n, x, z = 3, 2, 1
    state = LedgerState.genesis(
        TEST, [TxOutput(x + z, KeyLock(k.pk)) for k in (ALICE, BOB, T)]
    )
    ops = sorted(state.utxos, key=lambda op: op.index)
    outputs = [TxOutput(z, Or(HashLock(hash160(bytes([k]))), After(10, KeyLock(T.pk)))) for k in range(n)]
    outputs.append(TxOutput(n * x, KeyLock(T.pk)))
    tx = keyspend(Transaction(tuple(TxInput(op) for op in ops), tuple(outputs)), ALICE, BOB, T)
    assert [state.utxos[op].value for op in ops] == [3, 3, 3]
    assert [o.value for o in tx.outputs] == [1, 1, 1, 6]
    assert validate_tx(tx, state)


def test_reject_reasons():
    state, (a, b) = funded(5, 7)
    spend = keyspend(Transaction((TxInput(a),), (TxOutput(5, KeyLock(BOB.pk)),)), ALICE)
    assert validate_tx(spend, state)

    dup = keyspend(Transaction((TxInput(a), TxInput(a)), (TxOutput(10, KeyLock(BOB.pk)),)), ALICE, ALICE)
    assert validate_tx(dup, state).reason == "double-spend-within-tx"

    ghost = keyspend(Transaction((TxInput(OutPoint(b"\x00" * 32, 0)),), (TxOutput(5, KeyLock(BOB.pk)),)), ALICE)
    assert validate_tx(ghost, state).reason == "missing-utxo"

    late = keyspend(Transaction((TxInput(a),), (TxOutput(5, KeyLock(BOB.pk)),), locktime=20), ALICE)
    assert validate_tx(late, advance_clock(state, 19)).reason == "locktime-not-reached"
    assert validate_tx(late, advance_clock(state, 20))

    wrong = keyspend(Transaction((TxInput(a), TxInput(b)), (TxOutput(12, KeyLock(BOB.pk)),)), ALICE, BOB)
    assert validate_tx(wrong, state).reason == "script-failure(1)"

    unsigned = Transaction((TxInput(a),), (TxOutput(5, KeyLock(BOB.pk)),))
    assert validate_tx(unsigned, state).reason == "script-failure(0)"

    greedy = keyspend(Transaction((TxInput(a),), (TxOutput(6, KeyLock(BOB.pk)),)), ALICE)
    assert validate_tx(greedy, state).reason == "value-mismatch"


def test_apply_and_replay():
    state, (a, _) = funded(5, 7)
    tx = keyspend(Transaction((TxInput(a),), (TxOutput(2, KeyLock(BOB.pk)), TxOutput(3, KeyLock(ALICE.pk)))), ALICE)
    after = apply_tx(tx, state)
    assert after.total_value() == state.total_value() == 12
    assert len(after.history) == len(state.history) + 1 == 1
    assert a not in after.utxos and OutPoint(tx.txid, 1) in after.utxos
    assert after.balance(BOB.pk) == 2
    assert validate_tx(tx, after).reason == "missing-utxo"
    with pytest.raises(LedgerError):
        apply_tx(tx, after)
    # The original state is untouched.
    assert a in state.utxos and not state.history


def test_win_then_refund_exclusive():
    state = LedgerState.genesis(TEST, [TxOutput(6, KeyLock(T.pk))])
    (pool,) = state.utxos
    win = keyspend(Transaction((TxInput(pool),), (TxOutput(6, KeyLock(BOB.pk)),)), T)
    refund = keyspend(
        Transaction((TxInput(pool),), (TxOutput(3, KeyLock(ALICE.pk)), TxOutput(3, KeyLock(BOB.pk))), locktime=20), T
    )
    state = apply_tx(win, state)
    assert validate_tx(refund, advance_clock(state, 20)).reason == "missing-utxo"


def test_advance_clock():
    state, _ = funded(1)
    assert advance_clock(state, 0) is state
    later = advance_clock(state, 5)
    assert later.clock == 5 and later.utxos == state.utxos and later.history == state.history
    with pytest.raises(ValueError):
        advance_clock(state, -1)


def test_clock_enables_seizure_and_refund():
    t1, t2 = 10, 20
    state = LedgerState.genesis(
        TEST, [TxOutput(1, Or(HashLock(hash160(b"v")), After(t1, KeyLock(T.pk)))), TxOutput(4, KeyLock(T.pk))]
    )
    deposit, pool = sorted(state.utxos, key=lambda op: op.index)
    seize = Transaction((TxInput(deposit),), (TxOutput(1, KeyLock(BOB.pk)),))
    seize = seize.with_witnesses([Branch("right", Sig(sign(TEST, T.sk, seize.signing_bytes(), b"s")))])
    refund = keyspend(Transaction((TxInput(pool),), (TxOutput(4, KeyLock(ALICE.pk)),), locktime=t2), T)
    assert validate_tx(seize, advance_clock(state, t1 - 1)).reason == "script-failure(0)"
    assert validate_tx(seize, advance_clock(state, t1))
    assert validate_tx(refund, advance_clock(state, t2 - 1)).reason == "locktime-not-reached"
    assert validate_tx(refund, advance_clock(state, t2))


def test_state_is_immutable():
    state, _ = funded(1)
    with pytest.raises(TypeError):
        state.utxos[OutPoint(b"x", 0)] = TxOutput(1, KeyLock(1))


# -- properties --------------------------------------------------------------


def _random_spend(data, state):
    ops = data.draw(st.lists(st.sampled_from(sorted(state.utxos)), min_size=1, unique=True))
    total = sum(state.utxos[op].value for op in ops)
    cut = data.draw(st.integers(0, total - 1))
    outs = [TxOutput(total - cut, KeyLock(BOB.pk))] + ([TxOutput(cut, KeyLock(ALICE.pk))] if cut else [])
    return keyspend(Transaction(tuple(TxInput(op) for op in ops), tuple(outs)), *[ALICE] * len(ops))


@settings(max_examples=40, deadline=None)
@given(values=st.lists(st.integers(1, 1000), min_size=1, max_size=5), data=st.data())
def test_conservation_property(values, data):
    state, _ = funded(*values)
    tx = _random_spend(data, state)
    assert validate_tx(tx, state)
    after = apply_tx(tx, state)
    assert after.total_value() == sum(values)
    assert validate_tx(tx, after).reason == "missing-utxo"


@settings(max_examples=40, deadline=None)
@given(locktime=st.integers(0, 100), clock=st.integers(0, 100))
def test_timelock_monotone(locktime, clock):
    state, (a,) = funded(3, clock=clock)
    tx = keyspend(Transaction((TxInput(a),), (TxOutput(3, KeyLock(BOB.pk)),), locktime=locktime), ALICE)
    verdict = validate_tx(tx, state)
    if not verdict:
        assert verdict.reason == "locktime-not-reached"
        assert validate_tx(tx, advance_clock(state, locktime - clock))
    for extra in (0, 1, 50):
        if verdict:
            assert validate_tx(tx, advance_clock(state, extra))


@settings(max_examples=40, deadline=None)
@given(data=st.binary(max_size=32), seed=st.integers(0, 10_000))
def test_txid_ignores_witnesses(data, seed):
    tx = Transaction((TxInput(OutPoint(b"\x01" * 32, 0)),), (TxOutput(1, KeyLock(BOB.pk)),), locktime=seed)
    a = tx.with_witnesses([Preimage(data)])
    b = tx.with_witnesses([Branch("right", Sig(sign(TEST, ALICE.sk, data, b"x")))])
    assert tx.txid == a.txid == b.txid


def test_json_round_trip():
    for seed in range(50):
        case = generate(seed)
        assert predicate_from_json(predicate_to_json(case.predicate)) == case.predicate
        assert witness_from_json(witness_to_json(case.witness)) == case.witness
        assert render_predicate(case.predicate)
    tx = Transaction(
        (TxInput(OutPoint(b"\x02" * 32, 3), Branch("left", Preimage(b"v"))),),
        (TxOutput(4, Or(HashLock(hash160(b"v")), After(5, KeyLock(T.pk)))),),
        locktime=7,
    )
    obj = tx_to_json(tx)
    assert obj["txid"] == tx.txid.hex()
    assert tx_from_json(obj) == tx


def test_transaction_needs_inputs_and_outputs():
    with pytest.raises(ValueError):
        Transaction((), (TxOutput(1, KeyLock(1)),))
    with pytest.raises(ValueError):
        Transaction((TxInput(OutPoint(b"\x00" * 32, 0)),), ())
