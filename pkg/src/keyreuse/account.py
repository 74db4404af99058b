"""Sender public-key recovery for Ethereum and Tron transactions."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Iterator, List, Optional

import rlp

from .addresses import eth_payload
from .curve import (
    PublicKey,
    RecoverableSignature,
    recover_candidate,
    recover_public_keys,
)
from .errors import (
    InvalidSignatureScalars,
    NoCandidateRecoverable,
    UnrecoverablePoint,
    UnsupportedTxType,
)
from .hashing import keccak256, sha256


class TxType(str, enum.Enum):
    LEGACY = "legacy"
    EIP155_LEGACY = "eip155"
    ACCESS_LIST = "access_list"  # type 0x01
    DYNAMIC_FEE = "dynamic_fee"  # type 0x02
    TRON = "tron"


EVM_TYPES = (TxType.LEGACY, TxType.EIP155_LEGACY, TxType.ACCESS_LIST, TxType.DYNAMIC_FEE)

# unsigned payload layout per schema
SCHEMAS = {
    TxType.LEGACY: ("nonce", "gas_price", "gas", "to", "value", "data"),
    TxType.EIP155_LEGACY: ("nonce", "gas_price", "gas", "to", "value", "data"),
    TxType.ACCESS_LIST: ("chain_id", "nonce", "gas_price", "gas", "to", "value", "data",
                         "access_list"),
    TxType.DYNAMIC_FEE: ("chain_id", "nonce", "max_priority_fee_per_gas", "max_fee_per_gas",
                         "gas", "to", "value", "data", "access_list"),
    TxType.TRON: ("raw_data",),
}

_TYPE_BYTE = {TxType.ACCESS_LIST: b"\x01", TxType.DYNAMIC_FEE: b"\x02"}


@dataclass
class AccountTx:
    chain_id: str
    tx_type: Any
    fields: Dict[str, Any]
    signature: RecoverableSignature
    claimed_sender: bytes
    timestamp: int = 0
    txid: str = ""
    block: int = 0
    tx_index: int = 0
    recipient: Optional[bytes] = None


@dataclass(frozen=True)
class RecoveredSender:
    key: PublicKey
    derived_address: bytes
    matched: bool
    tried_all: bool = False
    recovery_id: Optional[int] = None


def _tx_type(tx: AccountTx) -> TxType:
    try:
        return TxType(tx.tx_type)
    except ValueError:
        raise UnsupportedTxType(f"transaction type {tx.tx_type!r} is not supported") from None


def _eip155_chain_id(tx: AccountTx) -> int:
    cid = tx.fields.get("chain_id")
    if cid is None:
        v = tx.signature.v_raw
        if v < 35:
            raise UnsupportedTxType("EIP-155 transaction without a chain id")
        cid = (v - 35) // 2
    return int(cid)


def _access_list(items) -> List:
    return [[bytes(addr), [bytes(k) for k in keys]] for addr, keys in items or ()]


def unsigned_payload(tx: AccountTx) -> List:
    t = _tx_type(tx)
    f = tx.fields
    if t is TxType.TRON:
        raise UnsupportedTxType("Tron transactions have no RLP payload")
    missing = [k for k in SCHEMAS[t] if k not in f and k not in ("chain_id", "access_list")]
    if missing:
        raise ValueError(f"{t.value} transaction lacks fields {missing}")
    items = []
    for name in SCHEMAS[t]:
        if name == "access_list":
            items.append(_access_list(f.get("access_list")))
        elif name == "chain_id":
            items.append(_eip155_chain_id(tx))
        elif name in ("to", "data"):
            items.append(bytes(f.get(name) or b""))
        else:
            items.append(int(f[name]))
    if t is TxType.EIP155_LEGACY:
        items += [_eip155_chain_id(tx), 0, 0]
    return items


def signing_hash(tx: AccountTx) -> bytes:
    """The 32-byte digest the sender signed."""
    t = _tx_type(tx)
    if t is TxType.TRON:
        return sha256(bytes(tx.fields["raw_data"]))
    encoded = rlp.encode(unsigned_payload(tx))
    return keccak256(_TYPE_BYTE.get(t, b"") + encoded)


def normalize_recovery_id(v_raw: int, tx_type, chain_id: Optional[int] = None) -> Optional[int]:
    """Map a chain-encoded v to a recovery id, or None meaning "try all four"."""
    try:
        t = TxType(tx_type)
    except ValueError:
        return None
    if t is TxType.EIP155_LEGACY:
        if chain_id is None:
            return None
        rid = v_raw - (2 * chain_id + 35)
    elif t is TxType.LEGACY:
        rid = v_raw - 27
    elif t is TxType.TRON:
        rid = v_raw - 27 if v_raw in (27, 28) else v_raw
    else:
        rid = v_raw
    return rid if rid in (0, 1) else None


def encode_v(recid: int, tx_type, chain_id: Optional[int] = None) -> int:
    t = TxType(tx_type)
    if t is TxType.EIP155_LEGACY:
        return 2 * chain_id + 35 + recid
    if t in (TxType.LEGACY, TxType.TRON):
        return 27 + recid
    return recid


def recover_sender(tx: AccountTx) -> RecoveredSender:
    """Recover the signing key and check it against the ledger's sender.

    The normalized recovery id is tried first; when it is unknown or its
    key does not match, all four candidates are tried against the claimed
    address (at most one can match a 20-byte address).
    """
    digest = signing_hash(tx)
    sig = tx.signature
    t = _tx_type(tx)
    cid = _eip155_chain_id(tx) if t is TxType.EIP155_LEGACY else None
    rid = normalize_recovery_id(sig.v_raw, t, cid)
    first: Optional[RecoveredSender] = None
    if rid is not None:
        try:
            key = recover_candidate(digest, sig.r, sig.s, rid)
        except InvalidSignatureScalars as exc:
            raise NoCandidateRecoverable(str(exc)) from None
        except UnrecoverablePoint:
            key = None
        if key is not None:
            addr = eth_payload(key)
            first = RecoveredSender(key, addr, addr == tx.claimed_sender, False, rid)
            if first.matched:
                return first
    try:
        candidates = recover_public_keys(digest, sig)
    except InvalidSignatureScalars as exc:
        raise NoCandidateRecoverable(str(exc)) from None
    for key in candidates:
        addr = eth_payload(key)
        if addr == tx.claimed_sender:
            return RecoveredSender(key, addr, True, True, None)
    if first is not None:
        return first
    if not candidates:
        raise NoCandidateRecoverable("no recovery id yields a curve point")
    key = candidates[0]
    return RecoveredSender(key, eth_payload(key), False, True, None)


def select_for_recovery(txs: Iterable[AccountTx], exhaustive: bool = False) -> Iterator[AccountTx]:
    """Tron fast path: only the first transaction of each new sender.

    Order is (block, tx_index), so the choice is deterministic; input must
    already be sorted that way.
    """
    seen = set()
    for tx in txs:
        if exhaustive:
            yield tx
            continue
        if tx.claimed_sender in seen:
            continue
        seen.add(tx.claimed_sender)
        yield tx
