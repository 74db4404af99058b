import random

import pytest

from keyreuse.addresses import (
    decode_address,
    derive_bundle,
    eth_payload,
    eth_to_tron,
    hash160_key,
    normalize_address,
    to_checksum_address,
    tron_to_eth,
)
from keyreuse.curve import Encoding, public_key_from_private, random_public_key
from keyreuse.errors import BadChecksum, BadPrefix

# computed with libsecp256k1 plus a standalone base58check
GOLDEN = {
    1: {
        ("BTC", "P2PKH", "compressed"): "1BgGZ9tcN4rm9KBzDn7KprQz87SZ26SAMH",
        ("BTC", "P2PKH", "uncompressed"): "1EHNa6Q4Jz2uvNExL497mE43ikXhwF6kZm",
        ("BTC", "P2WPKH", "compressed"): "bc1qw508d6qejxtdg4y5r3zarvary0c5xw7kv8f3t4",
        ("BTC", "P2SH_P2WPKH", ""): "3JvL6Ymt8MVWiCNHC7oWU6nLeHNJKLZGLN",
        ("LTC", "P2PKH", "compressed"): "LVuDpNCSSj6pQ7t9Pv6d6sUkLKoqDEVUnJ",
        ("LTC", "P2PKH", "uncompressed"): "LYWKqJhtPeGyBAw7WC8R3F7ovxtzAiubdM",
        ("DOGE", "P2PKH", "compressed"): "DFpN6QqFfUm3gKNaxN6tNcab1FArL9cZLE",
        ("DOGE", "P2PKH", "uncompressed"): "DJRU7MLhcPwCTNRZ4e8gJzDebtG1H5M7pc",
        ("ZEC", "P2PKH", "compressed"): "t1UYsZVJkLPeMjxEtACvSxfWuNmddpWfxzs",
        ("ETH", "ETH_ACCOUNT", ""): "0x7e5f4552091a69125d5dfcb7b8c2659029395bdf",
        ("TRX", "TRX_ACCOUNT", ""): "TMVQGm1qAQYVdetCeGRRkTWYYrLXuHK2HC",
    },
    0xDEADBEEF: {
        ("BTC", "P2PKH", "compressed"): "16Y48h9KAzppPPER9weEcuzHFEagjkPZh7",
        ("DOGE", "P2PKH", "uncompressed"): "DPWwtqJK2FEGxCGGjJ1FPDop5GpgXcdQru",
        ("ETH", "ETH_ACCOUNT", ""): "0xe8a78b476ae1403b7fd39b662545ae608aced7c7",
        ("TRX", "TRX_ACCOUNT", ""): "TXBNUjEMY7DPe3XZ8apA9vrwHV9FiHtCw6",
    },
}


@pytest.mark.parametrize("d", sorted(GOLDEN))
def test_golden_addresses(d):
    b = derive_bundle(public_key_from_private(d), ["BTC", "LTC", "DOGE", "ZEC", "ETH", "TRX"])
    got = {(a.chain_id, a.format, a.encoding.value if a.encoding else ""): a.encoded
           for a in b.addresses}
    for k, v in GOLDEN[d].items():
        assert got[k] == v


def test_bundle_shape():
    k = public_key_from_private(5)
    b = derive_bundle(k, ["DOGE", "BTC"])
    assert len(b.by_chain("BTC")) == 4 and len(b.by_chain("DOGE")) == 2
    assert any("segwit" in reason for _, _, reason in b.skipped)


def test_decode_round_trip():
    k = public_key_from_private(77)
    for a in derive_bundle(k, ["BTC", "LTC", "DOGE", "ZEC", "ETH", "TRX"]).addresses:
        back = decode_address(a.chain_id, a.encoded)
        assert back.payload == a.payload


def test_decode_errors():
    good = GOLDEN[1][("BTC", "P2PKH", "compressed")]
    with pytest.raises(BadChecksum):
        decode_address("BTC", good[:-1] + ("j" if good[-1] != "j" else "k"))
    with pytest.raises(BadPrefix):
        decode_address("LTC", good)
    with pytest.raises(BadPrefix):
        tron_to_eth("A" + GOLDEN[1][("TRX", "TRX_ACCOUNT", "")][1:])


def test_checksum_and_normalize():
    payload = eth_payload(public_key_from_private(1))
    assert to_checksum_address(payload) == "0x7E5F4552091A69125d5DfCb7b8C2659029395Bdf"
    assert normalize_address("ETH", "0x7E5F4552091A69125d5DfCb7b8C2659029395Bdf") == \
        "0x7e5f4552091a69125d5dfcb7b8c2659029395bdf"


def test_conversions_and_payloads():
    rng = random.Random(8)
    for _ in range(100):
        k = random_public_key(rng)
        e = derive_bundle(k, ["ETH"]).addresses[0]
        assert tron_to_eth(eth_to_tron(e)).encoded == e.encoded
        assert hash160_key(k, Encoding.COMPRESSED) != hash160_key(k, Encoding.UNCOMPRESSED)
