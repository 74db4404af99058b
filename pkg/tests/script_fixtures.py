"""One spending transaction per output template.

Scripts are assembled byte by byte here rather than through the package's
builders, so the fixtures double as an independent check of the parser.
"""

import hashlib

from Crypto.Hash import RIPEMD160

from keyreuse.curve import Encoding, public_key_from_private
from keyreuse.ingest import NormalizedUtxoTx, UtxoInput, UtxoOutput


def h160(b):
    return RIPEMD160.new(hashlib.sha256(b).digest()).digest()


def sha(b):
    return hashlib.sha256(b).digest()


def push(b):
    assert len(b) < 76
    return bytes([len(b)]) + b


def multisig(m, blobs):
    return bytes([0x50 + m]) + b"".join(push(b) for b in blobs) + bytes([0x50 + len(blobs), 0xAE])


SIG = bytes.fromhex("3044" + "0220" + "11" * 32 + "0220" + "22" * 32) + b"\x01"


def keys(*ds, enc=Encoding.COMPRESSED):
    return [public_key_from_private(d, enc) for d in ds]


def _tx(name, prev_script, input_script=b"", witness=()):
    inp = UtxoInput("ab" * 32, 0, input_script, list(witness), prev_script)
    return NormalizedUtxoTx("BTC", sha(name.encode()).hex(), 1, 1_600_000_000, [inp],
                            [UtxoOutput(b"\x6a", 0)])


def build():
    """{template: (tx, {(key_hex, role)})}"""
    out = {}
    (k,) = keys(11, enc=Encoding.UNCOMPRESSED)
    out["P2PK"] = (_tx("p2pk", push(k.uncompressed) + b"\xac", push(SIG)), {(k.hex(), "active")})

    a, b = keys(12, 13)
    out["P2MS"] = (_tx("p2ms", multisig(1, [a.compressed, b.compressed]), b"\x00" + push(SIG)),
                   {(a.hex(), "passive"), (b.hex(), "passive")})

    (k,) = keys(14)
    spk = b"\x76\xa9" + push(h160(k.compressed)) + b"\x88\xac"
    out["P2PKH"] = (_tx("p2pkh", spk, push(SIG) + push(k.compressed)), {(k.hex(), "active")})

    ms = keys(15, 16, 17)
    redeem = multisig(2, [x.compressed for x in ms])
    spk = b"\xa9" + push(h160(redeem)) + b"\x87"
    out["P2SH-multisig"] = (_tx("p2sh-ms", spk, b"\x00" + push(SIG) + push(SIG) + bytes([0x4C, len(redeem)]) + redeem),
                            {(x.hex(), "passive") for x in ms})

    (k,) = keys(18, enc=Encoding.UNCOMPRESSED)
    redeem = b"\x76\xa9" + push(h160(k.uncompressed)) + b"\x88\xac"
    spk = b"\xa9" + push(h160(redeem)) + b"\x87"
    out["P2SH-P2PKH"] = (_tx("p2sh-p2pkh", spk, push(SIG) + push(k.uncompressed) + push(redeem)),
                         {(k.hex(), "active")})

    (k,) = keys(19)
    redeem = b"\x00" + push(h160(k.compressed))
    spk = b"\xa9" + push(h160(redeem)) + b"\x87"
    out["P2SH-P2WPKH"] = (_tx("p2sh-p2wpkh", spk, push(redeem), [SIG, k.compressed]),
                          {(k.hex(), "active")})

    ms = keys(20, 21)
    ws = multisig(1, [x.compressed for x in ms])
    redeem = b"\x00" + push(sha(ws))
    spk = b"\xa9" + push(h160(redeem)) + b"\x87"
    out["P2SH-P2WSH"] = (_tx("p2sh-p2wsh", spk, push(redeem), [b"", SIG, ws]),
                         {(x.hex(), "passive") for x in ms})

    (k,) = keys(22)
    spk = b"\x00" + push(h160(k.compressed))
    out["P2WPKH"] = (_tx("p2wpkh", spk, b"", [SIG, k.compressed]), {(k.hex(), "active")})

    ms = keys(23, 24)
    ws = multisig(2, [x.compressed for x in ms])
    spk = b"\x00" + push(sha(ws))
    out["P2WSH"] = (_tx("p2wsh", spk, b"", [b"", SIG, SIG, ws]), {(x.hex(), "passive") for x in ms})
    return out
