import json
import random

import pytest

from keyreuse import account as acct
from keyreuse.curve import Encoding, public_key_from_private
from keyreuse.errors import DataError, SchemaVersionMismatch, UnreadableFile
from keyreuse.ingest import (
    KeyUsageEvent,
    NormalizedUtxoTx,
    UtxoInput,
    UtxoOutput,
    account_from_json,
    account_to_json,
    build_index_from_corpus,
    import_bitcoin_etl,
    import_eth_rpc_block,
    import_rpc_block,
    import_tron_tx,
    index_events,
    read_events,
    read_index,
    stream_transactions,
    utxo_from_json,
    utxo_to_json,
    write_events,
    write_index,
    write_transactions,
)
from keyreuse.script import Role, p2pkh_script, p2pk_script, push_script
from keyreuse.synth import generate

from helpers import signed_tx


def utxo(txid, height, idx=0, key=None):
    ins = [UtxoInput(None)]
    outs = [UtxoOutput(p2pk_script(key.compressed) if key else b"\x6a", 5)]
    return NormalizedUtxoTx("BTC", txid, height, 1_500_000_000 + height, ins, outs, idx)


def test_json_round_trips():
    tx = NormalizedUtxoTx("LTC", "aa", 3, 10,
                          [UtxoInput("bb", 1, b"\x01\x02", [b"\x03"], b"\x6a")], [UtxoOutput(b"\x51", 7)], 2)
    assert utxo_from_json(json.loads(json.dumps(utxo_to_json(tx))), "LTC") == tx
    rng = random.Random(0)
    for t in (acct.TxType.DYNAMIC_FEE, acct.TxType.TRON):
        a = signed_tx(t, 99, rng)
        back = account_from_json(json.loads(json.dumps(account_to_json(a))), a.chain_id)
        assert back == a and acct.recover_sender(back).matched


def test_stream_order_and_skips(tmp_path):
    write_transactions(tmp_path / "a.jsonl", "BTC", [utxo("t3", 3), utxo("t1", 1)])
    write_transactions(tmp_path / "b.jsonl", "BTC", [utxo("t2", 2, 1), utxo("t2b", 2, 0)])
    with open(tmp_path / "b.jsonl", "a") as fh:
        fh.write("{not json\n{\"txid\": 5}\n")
    s = stream_transactions([tmp_path / "a.jsonl", tmp_path / "b.jsonl"], "BTC")
    assert [t.txid for t in s] == ["t1", "t2b", "t2", "t3"]
    assert s.skipped == 2


def test_header_errors(tmp_path):
    p = tmp_path / "x.jsonl"
    p.write_text(json.dumps({"format": "keyreuse-tx", "schema_version": 99, "chain": "BTC"}) + "\n")
    with pytest.raises(SchemaVersionMismatch):
        list(stream_transactions([p], "BTC"))
    write_transactions(p, "BTC", [utxo("t", 1)])
    with pytest.raises(DataError):
        list(stream_transactions([p], "LTC"))
    with pytest.raises(UnreadableFile):
        list(stream_transactions([tmp_path / "missing.jsonl"], "BTC"))


def test_events_round_trip(tmp_path):
    k = public_key_from_private(4, Encoding.UNCOMPRESSED)
    ev = [KeyUsageEvent(k, "BTC", "t", 5, Role.ACTIVE, "P2PKH"),
          KeyUsageEvent(k.with_encoding(Encoding.COMPRESSED), "ETH", "u", 4, Role.PASSIVE,
                        "ETH_ACCOUNT", quarantined=True)]
    write_events(tmp_path / "e.jsonl", ev)
    back = list(read_events([tmp_path / "e.jsonl"]))
    assert sorted(back, key=lambda e: e.chain_id) == ev
    assert back[0].encoding is Encoding.UNCOMPRESSED


def _random_events(seed, n=300):
    rng = random.Random(seed)
    keys = [public_key_from_private(d) for d in range(1, 30)]
    return [KeyUsageEvent(rng.choice(keys).with_encoding(rng.choice(list(Encoding))),
                          rng.choice(["BTC", "LTC", "ETH"]), f"t{i}", rng.randrange(10**6),
                          rng.choice(list(Role)), rng.choice(["P2PKH", "P2WPKH", "ETH_ACCOUNT"]))
            for i in range(n)]


def test_index_merge_laws():
    a, b, c = (index_events(_random_events(s)) for s in (1, 2, 3))
    assert a.merge(b) == b.merge(a)
    assert a.merge(b).merge(c) == a.merge(b.merge(c))
    assert a.merge(b) == index_events(_random_events(1) + _random_events(2))
    ev = _random_events(4)
    random.Random(0).shuffle(ev)
    assert index_events(ev) == index_events(_random_events(4))


def test_index_shards(tmp_path):
    ev = _random_events(5)
    write_index(tmp_path / "a.jsonl", index_events(ev[:150]))
    write_index(tmp_path / "b.jsonl", index_events(ev[150:]))
    assert read_index([tmp_path / "a.jsonl", tmp_path / "b.jsonl"]) == index_events(ev)


def test_strict_and_quarantine():
    k = public_key_from_private(3)
    ev = [KeyUsageEvent(k, "BTC", "a", 1, Role.PASSIVE, "P2SH", opportunistic=True),
          KeyUsageEvent(k, "ETH", "b", 1, Role.ACTIVE, "ETH_ACCOUNT", quarantined=True)]
    assert len(index_events(ev)) == 1
    strict = index_events(ev, strict=True)
    assert len(strict) == 0 and strict.excluded_opportunistic == 1 and strict.quarantined == 1


def test_passive_attribution_from_corpus():
    c = generate(4, n_keys=200, n_active=20, n_passive=10, n_unrevealed=5, n_internal=5,
                 n_wallets=3, n_multisig=2, n_hd=1)
    idx, stats = build_index_from_corpus(c.txs)
    for h in c.truth["passive_reuse_keys"]:
        k = next(k for k in idx.keys() if k.hex() == h)
        assert any(s.passive_count for s in idx[k].values())
    assert sum(s.unresolved for s in stats.values()) == 0


def test_importers():
    k = public_key_from_private(21)
    spk = p2pkh_script(bytes(20))
    etl = {"hash": "h", "block_number": 7, "block_timestamp": 99, "index": 1,
           "inputs": [{"spent_transaction_hash": "p", "spent_output_index": 0,
                       "script_hex": push_script(b"\x30" * 70, k.compressed).hex()}],
           "outputs": [{"script_hex": spk.hex(), "value": 5}]}
    tx = import_bitcoin_etl(etl, "BTC")
    assert tx.inputs[0].prev_vout == 0 and tx.outputs[0].script == spk
    block = {"height": 5, "time": 100, "tx": [
        {"txid": "c", "vin": [{"coinbase": "00"}], "vout": [{"value": 1.5, "scriptPubKey": {"hex": spk.hex()}}]},
        {"txid": "d", "vin": [{"txid": "c", "vout": 0, "scriptSig": {"hex": ""}, "txinwitness": ["aa"],
                               "prevout": {"scriptPubKey": {"hex": spk.hex()}}}],
         "vout": [{"value": 1, "scriptPubKey": {"hex": "6a"}}]}]}
    txs = import_rpc_block(block, "BTC")
    assert txs[0].inputs[0].is_coinbase and txs[0].outputs[0].value == 150_000_000
    assert txs[1].inputs[0].prev_script == spk and txs[1].inputs[0].witness_stack == [b"\xaa"]

    rng = random.Random(1)
    t = signed_tx(acct.TxType.DYNAMIC_FEE, 77, rng)
    rpc = {"number": "0x10", "timestamp": "0x20", "transactions": [{
        "type": "0x2", "nonce": hex(t.fields["nonce"]), "gas": hex(t.fields["gas"]),
        "value": hex(t.fields["value"]), "to": "0x" + t.fields["to"].hex(),
        "input": "0x" + t.fields["data"].hex(), "chainId": "0x1",
        "maxPriorityFeePerGas": hex(t.fields["max_priority_fee_per_gas"]),
        "maxFeePerGas": hex(t.fields["max_fee_per_gas"]),
        "accessList": [{"address": "0x" + a.hex(), "storageKeys": ["0x" + s.hex() for s in ks]}
                       for a, ks in t.fields["access_list"]],
        "v": hex(t.signature.v_raw), "r": hex(t.signature.r), "s": hex(t.signature.s),
        "from": "0x" + t.claimed_sender.hex(), "hash": "0xabc", "transactionIndex": "0x0"},
        {"type": "0x3", "nonce": "0x0", "gas": "0x0", "value": "0x0", "v": "0x0", "r": "0x1",
         "s": "0x1", "from": "0x" + "00" * 20, "hash": "0xdef", "transactionIndex": "0x1"}]}
    got = import_eth_rpc_block(rpc)
    assert acct.recover_sender(got[0]).matched
    assert got[1].tx_type == "type-3"

    tr = signed_tx(acct.TxType.TRON, 55, rng)
    sig = tr.signature
    obj = {"txID": "e", "raw_data_hex": tr.fields["raw_data"].hex(),
           "signature": [(sig.r.to_bytes(32, "big") + sig.s.to_bytes(32, "big") +
                          bytes([sig.v_raw - 27])).hex()],
           "raw_data": {"contract": [{"parameter": {"value": {
               "owner_address": "41" + tr.claimed_sender.hex()}}}]}}
    assert acct.recover_sender(import_tron_tx(obj, 1, 0, 5)).matched
