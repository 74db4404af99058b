"""Normalized transaction files, key-usage events and the key index.

File format (schema v1)
-----------------------
Line-delimited JSON. The first line is a header::

    {"format": "keyreuse-tx", "schema_version": 1, "chain": "BTC", "model": "UTXO"}

UTXO records::

    {"txid": hex, "block_height": int, "tx_index": int, "timestamp": int,
     "inputs": [{"prev_txid": hex|null, "prev_vout": int, "script": hex,
                 "witness": [hex, ...], "prev_script": hex (optional)}],
     "outputs": [{"script": hex, "value": int}]}

A null ``prev_txid`` marks a coinbase input.

Account records::

    {"txid": hex, "block_height": int, "tx_index": int, "timestamp": int,
     "tx_type": "legacy"|"eip155"|"access_list"|"dynamic_fee"|"tron",
     "fields": {...}, "v": int, "r": hex, "s": hex,
     "from": hex20, "to": hex20|null}

Byte-valued fields are hex strings (``0x`` optional); integer fields may be
JSON ints or ``0x`` hex strings.

Event files use the header format ``keyreuse-events`` and index shards use
``keyreuse-index``; see :func:`write_events` and :func:`write_index`.
"""

from __future__ import annotations

import heapq
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from . import account as acct
from .addresses import eth_payload, hash160_key, p2sh_p2wpkh_payload
from .chains import AccountFormat, ScriptType, default_registry
from .curve import Encoding, PublicKey, RecoverableSignature, parse_public_key
from .errors import (
    DataError,
    MalformedScript,
    NoCandidateRecoverable,
    SchemaVersionMismatch,
    UnreadableFile,
    UnsupportedTxType,
)
from .script import (
    Role,
    SpendEvidence,
    classify_output,
    extract_keys,
    infer_prev_output,
    output_keys,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TX_FORMAT = "keyreuse-tx"
EVENT_FORMAT = "keyreuse-events"
INDEX_FORMAT = "keyreuse-index"


# -- records -----------------------------------------------------------------

@dataclass
class UtxoInput:
    prev_txid: Optional[str]
    prev_vout: int = 0
    input_script: bytes = b""
    witness_stack: List[bytes] = field(default_factory=list)
    prev_script: Optional[bytes] = None

    @property
    def is_coinbase(self) -> bool:
        return self.prev_txid is None


@dataclass
class UtxoOutput:
    script: bytes
    value: int = 0


@dataclass
class NormalizedUtxoTx:
    chain_id: str
    txid: str
    block_height: int
    timestamp: int
    inputs: List[UtxoInput]
    outputs: List[UtxoOutput]
    tx_index: int = 0


NormalizedAccountTx = acct.AccountTx


def _hex(s) -> bytes:
    if s is None:
        return b""
    if isinstance(s, (bytes, bytearray)):
        return bytes(s)
    return bytes.fromhex(s[2:] if s[:2] in ("0x", "0X") else s)


def _int(v) -> int:
    if isinstance(v, str):
        return int(v, 16) if v[:2] in ("0x", "0X") else int(v)
    return int(v)


_BYTE_FIELDS = {"to", "data", "raw_data"}


def _decode_fields(raw: dict) -> dict:
    out = {}
    for k, v in raw.items():
        if k in _BYTE_FIELDS:
            out[k] = _hex(v) if v is not None else b""
        elif k == "access_list":
            out[k] = [(_hex(a), [_hex(s) for s in keys]) for a, keys in v or ()]
        else:
            out[k] = _int(v)
    return out


def _encode_fields(fields: dict) -> dict:
    out = {}
    for k, v in fields.items():
        if k in _BYTE_FIELDS:
            out[k] = bytes(v).hex()
        elif k == "access_list":
            out[k] = [[bytes(a).hex(), [bytes(s).hex() for s in keys]] for a, keys in v or ()]
        else:
            out[k] = int(v)
    return out


def utxo_from_json(obj: dict, chain_id: str) -> NormalizedUtxoTx:
    inputs = []
    for i in obj["inputs"]:
        prev_script = i.get("prev_script")
        inputs.append(UtxoInput(
            prev_txid=i.get("prev_txid"),
            prev_vout=int(i.get("prev_vout", 0)),
            input_script=_hex(i.get("script")),
            witness_stack=[_hex(w) for w in i.get("witness") or ()],
            prev_script=_hex(prev_script) if prev_script is not None else None,
        ))
    outputs = [UtxoOutput(_hex(o["script"]), int(o.get("value", 0))) for o in obj["outputs"]]
    return NormalizedUtxoTx(chain_id, obj["txid"], int(obj["block_height"]), int(obj["timestamp"]),
                            inputs, outputs, int(obj.get("tx_index", 0)))


def utxo_to_json(tx: NormalizedUtxoTx) -> dict:
    ins = []
    for i in tx.inputs:
        d = {"prev_txid": i.prev_txid, "prev_vout": i.prev_vout, "script": i.input_script.hex(),
             "witness": [w.hex() for w in i.witness_stack]}
        if i.prev_script is not None:
            d["prev_script"] = i.prev_script.hex()
        ins.append(d)
    return {"txid": tx.txid, "block_height": tx.block_height, "tx_index": tx.tx_index,
            "timestamp": tx.timestamp, "inputs": ins,
            "outputs": [{"script": o.script.hex(), "value": o.value} for o in tx.outputs]}


def account_from_json(obj: dict, chain_id: str) -> acct.AccountTx:
    sig = RecoverableSignature(_int(obj["r"]), _int(obj["s"]), _int(obj["v"]))
    to = obj.get("to")
    return acct.AccountTx(
        chain_id=chain_id,
        tx_type=obj["tx_type"],
        fields=_decode_fields(obj.get("fields", {})),
        signature=sig,
        claimed_sender=_hex(obj["from"]),
        timestamp=int(obj["timestamp"]),
        txid=obj["txid"],
        block=int(obj["block_height"]),
        tx_index=int(obj.get("tx_index", 0)),
        recipient=_hex(to) if to else None,
    )


def account_to_json(tx: acct.AccountTx) -> dict:
    t = tx.tx_type.value if isinstance(tx.tx_type, acct.TxType) else tx.tx_type
    return {"txid": tx.txid, "block_height": tx.block, "tx_index": tx.tx_index,
            "timestamp": tx.timestamp, "tx_type": t, "fields": _encode_fields(tx.fields),
            "v": tx.signature.v_raw, "r": hex(tx.signature.r), "s": hex(tx.signature.s),
            "from": tx.claimed_sender.hex(),
            "to": tx.recipient.hex() if tx.recipient else None}


# -- files -------------------------------------------------------------------

def atomic_write_lines(path, lines: Iterable[str]) -> None:
    """Write to a temp file next to ``path`` and rename over it."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_transactions(path, chain_id: str, txs: Iterable) -> None:
    spec = default_registry().lookup(chain_id)
    header = {"format": TX_FORMAT, "schema_version": SCHEMA_VERSION, "chain": chain_id,
              "model": spec.model.value}
    enc = utxo_to_json if spec.is_utxo else account_to_json
    atomic_write_lines(path, [_dumps(header)] + [_dumps(enc(tx)) for tx in txs])


def _read_header(fh, path, expected_format: str) -> dict:
    first = fh.readline()
    try:
        header = json.loads(first)
    except json.JSONDecodeError:
        raise SchemaVersionMismatch(f"{path}: missing or unreadable header line") from None
    if not isinstance(header, dict) or header.get("format") != expected_format:
        raise SchemaVersionMismatch(f"{path}: expected a {expected_format} file")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: schema version {header.get('schema_version')}, expected {SCHEMA_VERSION}")
    return header


def _open(path):
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc.strerror}") from None


class TxStream:
    """Iterate normalized transactions of one chain from several files.

    Records come out in (block_height, tx_index) order. Lines that fail to
    parse are skipped and counted in ``skipped``.
    """

    def __init__(self, paths: Sequence, chain_id: str):
        self.paths = [os.fspath(p) for p in paths]
        self.chain_id = chain_id
        self.spec = default_registry().lookup(chain_id)
        self.skipped = 0
        self.read = 0

    def _load(self, path) -> List:
        decode = utxo_from_json if self.spec.is_utxo else account_from_json
        out = []
        with _open(path) as fh:
            header = _read_header(fh, path, TX_FORMAT)
            if header.get("chain") != self.chain_id:
                raise DataError(f"{path}: file holds {header.get('chain')}, not {self.chain_id}")
            for lineno, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                try:
                    tx = decode(json.loads(line), self.chain_id)
                except (ValueError, KeyError, TypeError) as exc:
                    log.warning("%s:%d: skipping malformed record (%s)", path, lineno, exc)
                    self.skipped += 1
                    continue
                out.append(tx)
        return out

    @staticmethod
    def _order(tx):
        if isinstance(tx, NormalizedUtxoTx):
            return (tx.block_height, tx.tx_index, tx.txid)
        return (tx.block, tx.tx_index, tx.txid)

    def __iter__(self) -> Iterator:
        per_file = [sorted(self._load(p), key=self._order) for p in self.paths]
        for tx in heapq.merge(*per_file, key=self._order):
            self.read += 1
            yield tx


def stream_transactions(paths: Sequence, chain_id: str) -> TxStream:
    return TxStream(paths, chain_id)


def read_header(path) -> dict:
    with _open(path) as fh:
        first = fh.readline()
    try:
        return json.loads(first)
    except json.JSONDecodeError:
        raise SchemaVersionMismatch(f"{path}: missing or unreadable header line") from None


# -- importers ---------------------------------------------------------------

def import_bitcoin_etl(obj: dict, chain_id: str) -> NormalizedUtxoTx:
    """One bitcoin-etl transaction record (with witness fields) to schema v1."""
    inputs = []
    for i in obj.get("inputs", []):
        inputs.append(UtxoInput(
            prev_txid=i.get("spent_transaction_hash"),
            prev_vout=int(i.get("spent_output_index") or 0),
            input_script=_hex(i.get("script_hex")),
            witness_stack=[_hex(w) for w in i.get("txinwitness") or ()],
        ))
    if obj.get("is_coinbase") and not inputs:
        inputs.append(UtxoInput(None))
    outputs = [UtxoOutput(_hex(o.get("script_hex")), int(o.get("value") or 0))
               for o in obj.get("outputs", [])]
    return NormalizedUtxoTx(chain_id, obj["hash"], int(obj["block_number"]),
                            int(obj["block_timestamp"]), inputs, outputs,
                            int(obj.get("index", 0)))


def import_rpc_block(block: dict, chain_id: str) -> List[NormalizedUtxoTx]:
    """A ``getblock <hash> 2`` (or 3) result to schema v1 transactions."""
    out = []
    for idx, tx in enumerate(block["tx"]):
        inputs = []
        for vin in tx["vin"]:
            if "coinbase" in vin:
                inputs.append(UtxoInput(None))
                continue
            prevout = vin.get("prevout") or {}
            prev_spk = prevout.get("scriptPubKey", {}).get("hex")
            inputs.append(UtxoInput(
                prev_txid=vin["txid"],
                prev_vout=int(vin["vout"]),
                input_script=_hex(vin.get("scriptSig", {}).get("hex")),
                witness_stack=[_hex(w) for w in vin.get("txinwitness") or ()],
                prev_script=_hex(prev_spk) if prev_spk is not None else None,
            ))
        outputs = [UtxoOutput(_hex(v["scriptPubKey"]["hex"]), round(float(v.get("value", 0)) * 10**8))
                   for v in tx["vout"]]
        out.append(NormalizedUtxoTx(chain_id, tx["txid"], int(block["height"]), int(block["time"]),
                                    inputs, outputs, idx))
    return out


_ETH_TYPES = {0: None, 1: acct.TxType.ACCESS_LIST, 2: acct.TxType.DYNAMIC_FEE}


def import_eth_rpc_block(block: dict, chain_id: str = "ETH") -> List[acct.AccountTx]:
    """An ``eth_getBlockByNumber(n, true)`` result to schema v1 records.

    Unsupported transaction types (blobs, set-code, ...) are kept with their
    raw type so that downstream counting reports them.
    """
    out = []
    ts = _int(block["timestamp"])
    height = _int(block["number"])
    for tx in block["transactions"]:
        type_num = _int(tx.get("type", "0x0"))
        v = _int(tx.get("v", tx.get("yParity", 0)))
        fields = {"nonce": _int(tx["nonce"]), "gas": _int(tx["gas"]), "value": _int(tx["value"]),
                  "to": _hex(tx.get("to")), "data": _hex(tx.get("input"))}
        if type_num == 0:
            fields["gas_price"] = _int(tx["gasPrice"])
            if v >= 35:
                tx_type = acct.TxType.EIP155_LEGACY
                fields["chain_id"] = _int(tx["chainId"]) if tx.get("chainId") else (v - 35) // 2
            else:
                tx_type = acct.TxType.LEGACY
        elif type_num in _ETH_TYPES:
            tx_type = _ETH_TYPES[type_num]
            fields["chain_id"] = _int(tx["chainId"])
            fields["access_list"] = [(_hex(e["address"]), [_hex(k) for k in e["storageKeys"]])
                                     for e in tx.get("accessList", [])]
            if type_num == 1:
                fields["gas_price"] = _int(tx["gasPrice"])
            else:
                fields["max_priority_fee_per_gas"] = _int(tx["maxPriorityFeePerGas"])
                fields["max_fee_per_gas"] = _int(tx["maxFeePerGas"])
        else:
            tx_type = f"type-{type_num}"
        out.append(acct.AccountTx(
            chain_id, tx_type, fields, RecoverableSignature(_int(tx["r"]), _int(tx["s"]), v),
            _hex(tx["from"]), ts, tx["hash"], height, _int(tx["transactionIndex"]),
            _hex(tx.get("to")) or None))
    return out


def import_tron_tx(obj: dict, block_height: int, tx_index: int, timestamp: int) -> acct.AccountTx:
    """One Tron API transaction (``txID``, ``raw_data_hex``, ``signature``)."""
    sig = _hex(obj["signature"][0])
    if len(sig) != 65:
        raise DataError("Tron signature must be 65 bytes")
    value = obj["raw_data"]["contract"][0]["parameter"]["value"]
    owner = _hex(value["owner_address"])
    to = value.get("to_address")
    return acct.AccountTx(
        "TRX", acct.TxType.TRON, {"raw_data": _hex(obj["raw_data_hex"])},
        RecoverableSignature(int.from_bytes(sig[:32], "big"), int.from_bytes(sig[32:64], "big"), sig[64]),
        owner[-20:], timestamp, obj["txID"], block_height, tx_index,
        _hex(to)[-20:] if to else None)


# -- events ------------------------------------------------------------------

@dataclass(frozen=True)
class KeyUsageEvent:
    key: PublicKey
    chain_id: str
    txid: str
    timestamp: int
    role: Role
    source_type: str
    opportunistic: bool = False
    quarantined: bool = False

    @property
    def encoding(self) -> Encoding:
        return self.key.encoding


def event_to_json(e: KeyUsageEvent) -> dict:
    d = {"key": e.key.serialize().hex(), "chain": e.chain_id, "txid": e.txid,
         "timestamp": e.timestamp, "role": e.role.value, "source_type": e.source_type}
    if e.opportunistic:
        d["opportunistic"] = True
    if e.quarantined:
        d["quarantined"] = True
    return d


def event_from_json(d: dict) -> KeyUsageEvent:
    return KeyUsageEvent(parse_public_key(bytes.fromhex(d["key"])), d["chain"], d["txid"],
                         int(d["timestamp"]), Role(d["role"]), d["source_type"],
                         bool(d.get("opportunistic")), bool(d.get("quarantined")))


def _event_order(e: KeyUsageEvent):
    return (e.chain_id, e.timestamp, e.txid, e.key.hex(), e.role.value, e.source_type,
            e.key.encoding.value)


def write_events(path, events: Iterable[KeyUsageEvent]) -> None:
    header = {"format": EVENT_FORMAT, "schema_version": SCHEMA_VERSION}
    rows = sorted(events, key=_event_order)
    atomic_write_lines(path, [_dumps(header)] + [_dumps(event_to_json(e)) for e in rows])


def read_events(paths: Sequence) -> Iterator[KeyUsageEvent]:
    for path in paths:
        with _open(path) as fh:
            _read_header(fh, path, EVENT_FORMAT)
            for line in fh:
                if line.strip():
                    yield event_from_json(json.loads(line))


@dataclass
class ExtractionStats:
    transactions: int = 0
    coinbase_skipped: int = 0
    malformed: int = 0
    unresolved: int = 0
    inferred: int = 0
    anomalies: List[str] = field(default_factory=list)
    unsupported: int = 0
    quarantined: int = 0
    unrecoverable: int = 0
    skipped_fast_path: int = 0
    passive_per_format: int = 0
    passive_per_payload: int = 0

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["anomalies"] = len(self.anomalies)
        return d


def extract_utxo_events(txs: Iterable[NormalizedUtxoTx], chain_id: str,
                        stats: Optional[ExtractionStats] = None) -> List[KeyUsageEvent]:
    """Pass 1 for a UTXO chain: keys revealed by spends and P2PK/P2MS outputs."""
    stats = stats if stats is not None else ExtractionStats()
    outpoints: Dict[Tuple[str, int], bytes] = {}
    events: List[KeyUsageEvent] = []
    for tx in txs:
        stats.transactions += 1
        for i, inp in enumerate(tx.inputs):
            if inp.is_coinbase:
                stats.coinbase_skipped += 1
                continue
            prev_script = inp.prev_script
            if prev_script is None:
                prev_script = outpoints.pop((inp.prev_txid, inp.prev_vout), None)
            if prev_script is not None:
                prev = classify_output(prev_script)
            else:
                prev = infer_prev_output(inp.input_script, inp.witness_stack)
                if prev is None:
                    stats.unresolved += 1
                    continue
                stats.inferred += 1
            try:
                keys = extract_keys(SpendEvidence(inp.input_script, inp.witness_stack, prev))
            except MalformedScript as exc:
                log.info("%s %s:%d skipped: %s", chain_id, tx.txid, i, exc)
                stats.malformed += 1
                continue
            for k in keys:
                if k.anomaly:
                    stats.anomalies.append(f"{tx.txid}:{i}: {k.anomaly}")
                events.append(KeyUsageEvent(k.key, chain_id, tx.txid, tx.timestamp, k.role,
                                            k.script_type.value, k.opportunistic))
        for vout, out in enumerate(tx.outputs):
            outpoints[(tx.txid, vout)] = out.script
            parsed = classify_output(out.script)
            for k in output_keys(parsed):
                events.append(KeyUsageEvent(k.key, chain_id, tx.txid, tx.timestamp, k.role,
                                            k.script_type.value))
    return events


def extract_account_events(txs: Iterable[acct.AccountTx], chain_id: str, exhaustive: bool = True,
                           stats: Optional[ExtractionStats] = None) -> List[KeyUsageEvent]:
    """Pass 1 for an account chain: one active event per recovered sender.

    With ``exhaustive=False`` only the first transaction of every sender is
    recovered (the Tron fast path).
    """
    stats = stats if stats is not None else ExtractionStats()
    fmt = AccountFormat.TRX.value if chain_id == "TRX" else AccountFormat.ETH.value
    events = []
    txs = list(txs)
    stats.transactions += len(txs)
    selected = list(acct.select_for_recovery(txs, exhaustive=exhaustive))
    stats.skipped_fast_path += len(txs) - len(selected)
    for tx in selected:
        try:
            rec = acct.recover_sender(tx)
        except UnsupportedTxType:
            stats.unsupported += 1
            continue
        except NoCandidateRecoverable:
            stats.unrecoverable += 1
            continue
        if not rec.matched:
            stats.quarantined += 1
        events.append(KeyUsageEvent(rec.key, chain_id, tx.txid, tx.timestamp, Role.ACTIVE, fmt,
                                    quarantined=not rec.matched))
    return events


def _payload_maps(keys: Iterable[PublicKey]):
    """Per-format payload -> key maps for pass 2 (derived bundles)."""
    p2pkh: Dict[bytes, PublicKey] = {}
    p2wpkh: Dict[bytes, PublicKey] = {}
    p2sh: Dict[bytes, PublicKey] = {}
    account: Dict[bytes, PublicKey] = {}
    for k in keys:
        for enc in (Encoding.COMPRESSED, Encoding.UNCOMPRESSED):
            p2pkh[hash160_key(k, enc)] = k.with_encoding(enc)
        p2wpkh[hash160_key(k, Encoding.COMPRESSED)] = k.with_encoding(Encoding.COMPRESSED)
        p2sh[p2sh_p2wpkh_payload(k)] = k.with_encoding(Encoding.COMPRESSED)
        account[eth_payload(k)] = k.with_encoding(Encoding.UNCOMPRESSED)
    return p2pkh, p2wpkh, p2sh, account


class PassiveMatcher:
    """Pass 2: attribute receiving-side usage to already revealed keys."""

    def __init__(self, keys: Iterable[PublicKey]):
        self.p2pkh, self.p2wpkh, self.p2sh, self.account = _payload_maps(set(keys))
        self._any20 = {**self.p2pkh, **self.p2wpkh, **self.p2sh}

    def utxo(self, txs: Iterable[NormalizedUtxoTx], chain_id: str,
             stats: Optional[ExtractionStats] = None) -> List[KeyUsageEvent]:
        stats = stats if stats is not None else ExtractionStats()
        events = []
        for tx in txs:
            for out in tx.outputs:
                parsed = classify_output(out.script)
                st = parsed.script_type
                key = None
                if st is ScriptType.P2PKH:
                    key = self.p2pkh.get(parsed.payload)
                    label = ScriptType.P2PKH.value
                elif st is ScriptType.P2WPKH:
                    key = self.p2wpkh.get(parsed.payload)
                    label = ScriptType.P2WPKH.value
                elif st is ScriptType.P2SH:
                    key = self.p2sh.get(parsed.payload)
                    label = ScriptType.P2SH_P2WPKH.value
                if len(parsed.payload) == 20 and parsed.payload in self._any20:
                    stats.passive_per_payload += 1
                if key is not None:
                    stats.passive_per_format += 1
                    events.append(KeyUsageEvent(key, chain_id, tx.txid, tx.timestamp,
                                                Role.PASSIVE, label))
        return events

    def account_txs(self, txs: Iterable[acct.AccountTx], chain_id: str,
                    stats: Optional[ExtractionStats] = None) -> List[KeyUsageEvent]:
        stats = stats if stats is not None else ExtractionStats()
        fmt = AccountFormat.TRX.value if chain_id == "TRX" else AccountFormat.ETH.value
        events = []
        for tx in txs:
            if tx.recipient is None:
                continue
            key = self.account.get(tx.recipient)
            if key is not None:
                stats.passive_per_format += 1
                stats.passive_per_payload += 1
                events.append(KeyUsageEvent(key, chain_id, tx.txid, tx.timestamp,
                                            Role.PASSIVE, fmt))
        return events


# -- key index ---------------------------------------------------------------

def _min(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return a if a <= b else b


@dataclass
class ChainSummary:
    first_active: Optional[int] = None
    first_passive: Optional[int] = None
    active_count: int = 0
    passive_count: int = 0
    # (source_type, encoding value) -> first active timestamp
    type_first_use: Dict[Tuple[str, str], int] = field(default_factory=dict)

    @property
    def first_use(self) -> Optional[int]:
        return _min(self.first_active, self.first_passive)

    def add(self, e: KeyUsageEvent) -> None:
        if e.role is Role.ACTIVE:
            self.active_count += 1
            self.first_active = _min(self.first_active, e.timestamp)
            fk = (e.source_type, e.key.encoding.value)
            self.type_first_use[fk] = _min(self.type_first_use.get(fk), e.timestamp)
        else:
            self.passive_count += 1
            self.first_passive = _min(self.first_passive, e.timestamp)

    def merged(self, other: "ChainSummary") -> "ChainSummary":
        tfu = dict(self.type_first_use)
        for k, v in other.type_first_use.items():
            tfu[k] = _min(tfu.get(k), v)
        return ChainSummary(_min(self.first_active, other.first_active),
                            _min(self.first_passive, other.first_passive),
                            self.active_count + other.active_count,
                            self.passive_count + other.passive_count, tfu)


@dataclass
class KeyIndex:
    entries: Dict[PublicKey, Dict[str, ChainSummary]] = field(default_factory=dict)
    quarantined: int = 0
    excluded_opportunistic: int = 0

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def __getitem__(self, key) -> Dict[str, ChainSummary]:
        return self.entries[key]

    def keys(self):
        return self.entries.keys()

    def items(self):
        return self.entries.items()

    def add(self, e: KeyUsageEvent, strict: bool = False) -> None:
        if e.quarantined:
            self.quarantined += 1
            return
        if strict and e.opportunistic:
            self.excluded_opportunistic += 1
            return
        per_chain = self.entries.setdefault(e.key.with_encoding(Encoding.COMPRESSED), {})
        per_chain.setdefault(e.chain_id, ChainSummary()).add(e)

    def merge(self, other: "KeyIndex") -> "KeyIndex":
        out = KeyIndex({}, self.quarantined + other.quarantined,
                       self.excluded_opportunistic + other.excluded_opportunistic)
        for src in (self, other):
            for key, chains in src.entries.items():
                dst = out.entries.setdefault(key, {})
                for chain, summ in chains.items():
                    dst[chain] = dst[chain].merged(summ) if chain in dst else summ.merged(ChainSummary())
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, KeyIndex):
            return NotImplemented
        return self.entries == other.entries and self.quarantined == other.quarantined


def index_events(events: Iterable[KeyUsageEvent], strict: bool = False) -> KeyIndex:
    """Fold events into per-key, per-chain summaries (order independent)."""
    idx = KeyIndex()
    for e in events:
        idx.add(e, strict=strict)
    return idx


def _summary_to_json(key: PublicKey, chain: str, s: ChainSummary) -> dict:
    return {"key": key.hex(), "chain": chain, "first_active": s.first_active,
            "first_passive": s.first_passive, "active_count": s.active_count,
            "passive_count": s.passive_count,
            "type_first_use": {f"{t}/{enc}": ts for (t, enc), ts in sorted(s.type_first_use.items())}}


def write_index(path, index: KeyIndex) -> None:
    """Text shard: header line then rows sorted by (key hex, chain)."""
    header = {"format": INDEX_FORMAT, "schema_version": SCHEMA_VERSION,
              "quarantined": index.quarantined}
    rows = []
    for key in sorted(index.entries, key=lambda k: k.hex()):
        for chain in sorted(index.entries[key]):
            rows.append(_dumps(_summary_to_json(key, chain, index.entries[key][chain])))
    atomic_write_lines(path, [_dumps(header)] + rows)


def read_index(paths: Sequence) -> KeyIndex:
    """Load and merge index shards."""
    total = KeyIndex()
    for path in paths:
        shard = KeyIndex()
        with _open(path) as fh:
            header = _read_header(fh, path, INDEX_FORMAT)
            shard.quarantined = int(header.get("quarantined", 0))
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                key = parse_public_key(bytes.fromhex(d["key"]))
                tfu = {}
                for label, ts in d["type_first_use"].items():
                    t, enc = label.rsplit("/", 1)
                    tfu[(t, enc)] = ts
                shard.entries.setdefault(key, {})[d["chain"]] = ChainSummary(
                    d["first_active"], d["first_passive"], d["active_count"], d["passive_count"], tfu)
        total = total.merge(shard)
    return total


def build_index_from_corpus(corpus: Dict[str, Sequence], strict: bool = False,
                            exhaustive: bool = True) -> Tuple[KeyIndex, Dict[str, ExtractionStats]]:
    """Both passes over in-memory transactions keyed by chain."""
    reg = default_registry()
    stats = {c: ExtractionStats() for c in corpus}
    events: List[KeyUsageEvent] = []
    for chain in sorted(corpus):
        if reg.lookup(chain).is_utxo:
            events += extract_utxo_events(corpus[chain], chain, stats[chain])
        else:
            events += extract_account_events(corpus[chain], chain, exhaustive, stats[chain])
    events += passive_events(corpus, {e.key for e in events if not e.quarantined}, stats)
    return index_events(events, strict=strict), stats


def passive_events(corpus: Dict[str, Sequence], keys, stats: Optional[Dict[str, ExtractionStats]] = None
                   ) -> List[KeyUsageEvent]:
    reg = default_registry()
    matcher = PassiveMatcher(keys)
    out = []
    for chain in sorted(corpus):
        st = stats.get(chain) if stats else None
        if reg.lookup(chain).is_utxo:
            out += matcher.utxo(corpus[chain], chain, st)
        else:
            out += matcher.account_txs(corpus[chain], chain, st)
    return out
