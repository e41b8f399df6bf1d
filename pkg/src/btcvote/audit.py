"""Transcript auditing: every check reads only the transcript, never re-runs
the protocol. The expected outcome and balance sheet are recomputed from the
embedded scenario config by plain counting."""

from __future__ import annotations

from collections import Counter
from collections.abc import Callable, Mapping
from dataclasses import dataclass

from . import ledger
from .crypto import hash160
from .errors import BtcVoteError
from .group import get_group
from .ledger import KeyLock, LedgerState, OutPoint, TxOutput
from .sim import TRANSCRIPT_FORMAT, ScenarioConfig

REQUIRED_KEYS = (
    "format",
    "config",
    "identities",
    "genesis",
    "initial_balances",
    "events",
    "final_balances",
    "accepted_transactions",
    "outcome",
)


# -- config-only oracle ------------------------------------------------------


def _participants(cfg: ScenarioConfig) -> list[int]:
    adv = cfg.adversary
    gone = adv.voter if adv.kind == "dropout" and adv.phase in ("registration", "dkg") else None
    return [v for v in range(1, cfg.n + 1) if v != gone]


def _revealers(cfg: ScenarioConfig) -> list[int]:
    adv = cfg.adversary
    silent = adv.kind == "withhold-reveal" or (adv.kind == "dropout" and adv.phase == "reveal")
    return [v for v in _participants(cfg) if not (silent and v == adv.voter)]


def expected_outcome(cfg: ScenarioConfig) -> dict:
    adv = cfg.adversary
    active = _participants(cfg)
    if len(active) < 2 or cfg.t > len(active):
        return {"kind": "aborted", "reason": "dkg-failed"}
    if adv.kind == "tamper-last-shuffler":
        return {"kind": "aborted", "reason": "consistency-failure"}
    if adv.kind == "dropout" and adv.phase == "shuffle":
        return {"kind": "aborted", "reason": "stall"}
    if adv.kind == "dropout" and adv.phase == "signing":
        return {"kind": "aborted", "reason": "cosign-incomplete"}
    garbage = adv.voter if adv.kind == "garbage-vote" else None
    counts = Counter(cfg.votes[v] for v in _revealers(cfg) if v != garbage)
    for cand in range(1, cfg.m + 1):
        if counts[cand] >= cfg.t:
            return {"kind": "winner", "candidate": cand}
    return {"kind": "refunded"}


def expected_deltas(cfg: ScenarioConfig) -> dict[str, int]:
    deltas = {f"voter-{v}": 0 for v in range(1, cfg.n + 1)}
    deltas.update({f"candidate-{c}": 0 for c in range(1, cfg.m + 1)})
    deltas["locked"] = 0
    outcome = expected_outcome(cfg)
    if outcome["kind"] == "aborted":
        return deltas
    active, revealers = _participants(cfg), _revealers(cfg)
    for v in active:
        deltas[f"voter-{v}"] -= cfg.x + cfg.z
    for v in revealers:
        deltas[f"voter-{v}"] += cfg.z
    unclaimed = cfg.z * (len(active) - len(revealers))
    if unclaimed:
        if len(revealers) >= cfg.t:
            each, rem = divmod(unclaimed, len(revealers))
            for k, v in enumerate(revealers):
                deltas[f"voter-{v}"] += each + (rem if k == 0 else 0)
        else:
            deltas["locked"] += unclaimed
    if outcome["kind"] == "winner":
        deltas[f"candidate-{outcome['candidate']}"] += len(active) * cfg.x
    else:
        for v in active:
            deltas[f"voter-{v}"] += cfg.x
    return deltas


# -- checks ------------------------------------------------------------------


class CheckFailed(Exception):
    pass


def _ledger_events(tr: Mapping, status: str | None = None, kind: str | None = None) -> list[dict]:
    return [
        ev
        for ev in tr["events"]
        if ev.get("event") == "ledger"
        and (status is None or ev["status"] == status)
        and (kind is None or ev["kind"] == kind)
    ]


def check_schema(tr: Mapping) -> None:
    missing = [k for k in REQUIRED_KEYS if k not in tr]
    if missing:
        raise CheckFailed(f"missing keys: {', '.join(missing)}")
    if tr["format"] != TRANSCRIPT_FORMAT:
        raise CheckFailed(f"unknown format {tr['format']!r}")
    ScenarioConfig.from_dict(tr["config"])


def check_conservation(tr: Mapping) -> None:
    genesis = sum(int(g["value"]) for g in tr["genesis"])
    initial = sum(tr["initial_balances"].values())
    final = sum(tr["final_balances"].values())
    if not genesis == initial == final:
        raise CheckFailed(f"genesis {genesis}, initial {initial}, final {final}")
    for ev in _ledger_events(tr, "accepted"):
        if any(int(o["value"]) < 1 for o in ev["tx"]["outputs"]):
            raise CheckFailed(f"non-positive output in {ev['tx']['txid']}")


def check_census(tr: Mapping) -> None:
    cfg = ScenarioConfig.from_dict(tr["config"])
    accepted = _ledger_events(tr, "accepted")
    if len(accepted) != tr["accepted_transactions"]:
        raise CheckFailed("accepted_transactions disagrees with the event log")
    kinds = Counter(ev["kind"] for ev in accepted)
    if tr["outcome"]["kind"] == "aborted":
        if accepted:
            raise CheckFailed("aborted run moved funds")
        return
    if kinds["commitment"] != 1 or kinds["win"] + kinds["refund"] != 1 or kinds["seizure"] > 1:
        raise CheckFailed(f"unexpected transaction mix {dict(kinds)}")
    if cfg.adversary.kind == "none" and len(accepted) != cfg.n + 2:
        raise CheckFailed(f"honest run has {len(accepted)} transactions, expected {cfg.n + 2}")


def check_txids(tr: Mapping) -> None:
    for ev in _ledger_events(tr):
        if ledger.tx_from_json(ev["tx"]).txid.hex() != ev["tx"]["txid"]:
            raise CheckFailed(f"txid mismatch for {ev['tx']['txid']}")


def check_reveal_binding(tr: Mapping) -> None:
    commits = _ledger_events(tr, "accepted", "commitment")
    deposits = {}
    for ev in commits:
        for k, out in enumerate(ev["tx"]["outputs"]):
            pred = out["predicate"]
            if pred["type"] == "or" and pred["left"]["type"] == "hashlock":
                deposits[(ev["tx"]["txid"], k)] = pred["left"]["digest"]
    for ev in _ledger_events(tr, "accepted", "claim"):
        txin = ev["tx"]["inputs"][0]
        digest = deposits.get((txin["txid"], txin["index"]))
        if digest is None:
            raise CheckFailed(f"claim {ev['tx']['txid']} spends no deposit")
        preimage = bytes.fromhex(txin["witness"]["inner"]["data"])
        if hash160(preimage).hex() != digest:
            raise CheckFailed(f"claim {ev['tx']['txid']} preimage does not match its deposit")


def check_no_double_spend(tr: Mapping) -> None:
    seen: dict[tuple, str] = {}
    for ev in _ledger_events(tr, "accepted"):
        for txin in ev["tx"]["inputs"]:
            key = (txin["txid"], txin["index"])
            if key in seen:
                raise CheckFailed(f"outpoint spent by {seen[key]} and {ev['tx']['txid']}")
            seen[key] = ev["tx"]["txid"]


def _replay(tr: Mapping) -> LedgerState:
    params = get_group(tr["config"].get("group", "crypto"))
    state = LedgerState(
        params,
        {
            OutPoint(bytes.fromhex(g["txid"]), int(g["index"])): TxOutput(
                int(g["value"]), ledger.predicate_from_json(g["predicate"])
            )
            for g in tr["genesis"]
        },
    )
    for ev in tr["events"]:
        if ev.get("event") == "clock":
            state = ledger.advance_clock(state, int(ev["now"]) - state.clock)
        elif ev.get("event") == "ledger":
            tx = ledger.tx_from_json(ev["tx"])
            if int(ev["clock"]) != state.clock:
                raise CheckFailed(f"clock drift at {ev['tx']['txid']}")
            verdict = ledger.validate_tx(tx, state)
            if ev["status"] == "accepted":
                if not verdict:
                    raise CheckFailed(f"{ev['kind']} {ev['tx']['txid']} fails replay: {verdict.reason}")
                state = ledger.apply_tx(tx, state)
            elif verdict or verdict.reason != ev.get("reason"):
                raise CheckFailed(f"rejection of {ev['tx']['txid']} does not replay")
    return state


def check_ledger_replay(tr: Mapping) -> None:
    _replay(tr)


def check_balances(tr: Mapping) -> None:
    state = _replay(tr)
    owners = {int(pk, 16): name for name, pk in tr["identities"].items()}
    replayed = {name: 0 for name in tr["identities"]}
    replayed["locked"] = 0
    for out in state.utxos.values():
        name = owners.get(out.predicate.pk, "locked") if isinstance(out.predicate, KeyLock) else "locked"
        replayed[name] += out.value
    if replayed != dict(tr["final_balances"]):
        raise CheckFailed("final balances disagree with the replayed ledger")


def check_outcome(tr: Mapping) -> None:
    cfg = ScenarioConfig.from_dict(tr["config"])
    want = expected_outcome(cfg)
    if dict(tr["outcome"]) != want:
        raise CheckFailed(f"outcome {tr['outcome']} but tally oracle says {want}")


def check_balance_sheet(tr: Mapping) -> None:
    cfg = ScenarioConfig.from_dict(tr["config"])
    got = {k: tr["final_balances"][k] - tr["initial_balances"].get(k, 0) for k in tr["final_balances"]}
    want = expected_deltas(cfg)
    if got != want:
        diff = {k: (got.get(k), want.get(k)) for k in set(got) | set(want) if got.get(k) != want.get(k)}
        raise CheckFailed(f"balance deltas differ (got, want): {diff}")


CHECKS: tuple[tuple[str, Callable[[Mapping], None]], ...] = (
    ("schema", check_schema),
    ("conservation", check_conservation),
    ("census", check_census),
    ("txid-integrity", check_txids),
    ("reveal-binding", check_reveal_binding),
    ("no-double-spend", check_no_double_spend),
    ("ledger-replay", check_ledger_replay),
    ("balances", check_balances),
    ("outcome", check_outcome),
    ("balance-sheet", check_balance_sheet),
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def verify_transcript(tr: Mapping) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        try:
            fn(tr)
        except CheckFailed as exc:
            results.append(CheckResult(name, False, str(exc)))
        except (BtcVoteError, KeyError, TypeError, ValueError, AttributeError) as exc:
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
        else:
            results.append(CheckResult(name, True))
    return results


def census(tr: Mapping) -> dict:
    cfg = tr["config"]
    outcome = tr["outcome"]
    if outcome["kind"] == "winner":
        label = f"winner({outcome['candidate']})"
    elif outcome["kind"] == "aborted":
        label = f"aborted({outcome['reason']})"
    else:
        label = outcome["kind"]
    return {
        "n": cfg["n"],
        "m": cfg["m"],
        "t": cfg["t"],
        "accepted_txs": len(_ledger_events(tr, "accepted")),
        "outcome": label,
        "deltas": {
            k: v - tr["initial_balances"].get(k, 0) for k, v in tr["final_balances"].items()
        },
    }
