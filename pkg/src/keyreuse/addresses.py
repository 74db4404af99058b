"""Address derivation from public keys and conversion between formats."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import base58
import bech32

from .chains import AccountFormat, ChainSpec, Registry, ScriptType, default_registry
from .curve import Encoding, PublicKey
from .errors import BadChecksum, BadPrefix, DataError, UnknownChain
from .hashing import hash160, keccak256, sha256

TRON_PREFIX = 0x41


@dataclass(frozen=True)
class Address:
    chain_id: str
    format: str
    encoded: str
    payload: bytes
    encoding: Optional[Encoding] = None  # key encoding, for hash160 formats


@dataclass
class AddressBundle:
    key: PublicKey
    addresses: List[Address] = field(default_factory=list)
    # formats deliberately not derived, e.g. bech32 from an uncompressed key
    skipped: List[Tuple[str, str, str]] = field(default_factory=list)

    def encoded(self) -> List[str]:
        return [a.encoded for a in self.addresses]

    def by_chain(self, chain_id: str) -> List[Address]:
        return [a for a in self.addresses if a.chain_id == chain_id]

    def __len__(self):
        return len(self.addresses)


# -- primitives --------------------------------------------------------------

def hash160_key(key: PublicKey, encoding: Encoding) -> bytes:
    return hash160(key.serialize(encoding))


def eth_payload(key: PublicKey) -> bytes:
    return keccak256(key.uncompressed[1:])[-20:]


def p2wpkh_script(pkh: bytes) -> bytes:
    return b"\x00\x14" + pkh


def p2sh_p2wpkh_payload(key: PublicKey) -> bytes:
    return hash160(p2wpkh_script(hash160_key(key, Encoding.COMPRESSED)))


def p2wsh_payload(witness_script: bytes) -> bytes:
    return sha256(witness_script)


def base58check(version: bytes, payload: bytes) -> str:
    return base58.b58encode_check(version + payload).decode("ascii")


def decode_base58check(s: str) -> bytes:
    try:
        return base58.b58decode_check(s)
    except ValueError as exc:
        raise BadChecksum(f"base58check failure for {s!r}: {exc}") from None


def segwit_address(hrp: str, witver: int, program: bytes) -> str:
    out = bech32.encode(hrp, witver, program)
    if out is None:
        raise ValueError("invalid witness program")
    return out


def eth_hex(payload: bytes) -> str:
    return "0x" + payload.hex()


def to_checksum_address(payload: bytes) -> str:
    """Mixed-case display form; the canonical form stays lowercase."""
    h = payload.hex()
    digest = keccak256(h.encode("ascii")).hex()
    return "0x" + "".join(c.upper() if int(digest[i], 16) >= 8 else c for i, c in enumerate(h))


def parse_eth_address(s: str) -> bytes:
    t = s[2:] if s[:2].lower() == "0x" else s
    if len(t) != 40:
        raise BadPrefix(f"not a 20-byte hex address: {s!r}")
    try:
        return bytes.fromhex(t)
    except ValueError:
        raise BadPrefix(f"not a hex address: {s!r}") from None


# -- per-format constructors -------------------------------------------------

def p2pkh_address(spec: ChainSpec, pkh: bytes, encoding: Optional[Encoding] = None) -> Address:
    return Address(spec.chain_id, ScriptType.P2PKH.value,
                   base58check(spec.p2pkh_version, pkh), pkh, encoding)


def p2sh_address(spec: ChainSpec, sh: bytes, fmt: str = ScriptType.P2SH.value) -> Address:
    return Address(spec.chain_id, fmt, base58check(spec.p2sh_version, sh), sh)


def p2wpkh_address(spec: ChainSpec, pkh: bytes) -> Address:
    return Address(spec.chain_id, ScriptType.P2WPKH.value,
                   segwit_address(spec.bech32_hrp, 0, pkh), pkh, Encoding.COMPRESSED)


def p2wsh_address(spec: ChainSpec, witness_script: bytes) -> Address:
    """P2WSH exists only for a concrete witness script, never for a bare key."""
    if spec.bech32_hrp is None:
        raise UnknownChain(f"{spec.chain_id} has no segwit encoding")
    wsh = p2wsh_payload(witness_script)
    return Address(spec.chain_id, ScriptType.P2WSH.value, segwit_address(spec.bech32_hrp, 0, wsh), wsh)


def eth_address(key: PublicKey, chain_id: str = "ETH") -> Address:
    payload = eth_payload(key)
    return Address(chain_id, AccountFormat.ETH.value, eth_hex(payload), payload)


def tron_address_from_payload(payload: bytes, chain_id: str = "TRX") -> Address:
    return Address(chain_id, AccountFormat.TRX.value,
                   base58check(bytes([TRON_PREFIX]), payload), payload)


# -- fan-out -----------------------------------------------------------------

def utxo_addresses(key: PublicKey, spec: ChainSpec) -> Tuple[List[Address], List[Tuple[str, str, str]]]:
    out = []
    skipped = []
    for enc in (Encoding.COMPRESSED, Encoding.UNCOMPRESSED):
        out.append(p2pkh_address(spec, hash160_key(key, enc), enc))
    if spec.bech32_hrp is not None:
        pkh = hash160_key(key, Encoding.COMPRESSED)
        out.append(p2wpkh_address(spec, pkh))
        out.append(p2sh_address(spec, p2sh_p2wpkh_payload(key), ScriptType.P2SH_P2WPKH.value))
        skipped.append((spec.chain_id, ScriptType.P2WPKH.value, "uncompressed keys are not valid in segwit"))
    else:
        skipped.append((spec.chain_id, ScriptType.P2WPKH.value, "chain has no segwit"))
    return out, skipped


def derive_bundle(key: PublicKey, chains: Iterable[str], registry: Optional[Registry] = None) -> AddressBundle:
    reg = registry or default_registry()
    bundle = AddressBundle(key)
    for chain in sorted(set(chains)):
        spec = reg.lookup(chain)
        if spec.is_utxo:
            addrs, skipped = utxo_addresses(key, spec)
            bundle.addresses.extend(addrs)
            bundle.skipped.extend(skipped)
        elif spec.account_prefix is not None:
            bundle.addresses.append(
                Address(chain, AccountFormat.TRX.value,
                        base58check(bytes([spec.account_prefix]), eth_payload(key)), eth_payload(key)))
        else:
            bundle.addresses.append(eth_address(key, chain))
    return bundle


# -- conversion --------------------------------------------------------------

def _as_string(addr) -> str:
    return addr.encoded if isinstance(addr, Address) else addr


def tron_to_eth(addr) -> Address:
    s = _as_string(addr)
    if not s.startswith("T"):
        raise BadPrefix(f"Tron addresses start with 'T': {s!r}")
    raw = decode_base58check(s)
    if len(raw) != 21 or raw[0] != TRON_PREFIX:
        raise BadPrefix(f"expected 0x41 prefix and 20-byte payload in {s!r}")
    return Address("ETH", AccountFormat.ETH.value, eth_hex(raw[1:]), raw[1:])


def eth_to_tron(addr) -> Address:
    payload = addr.payload if isinstance(addr, Address) else parse_eth_address(addr)
    return tron_address_from_payload(payload)


def decode_address(chain_id: str, s: str, registry: Optional[Registry] = None) -> Address:
    """Parse an encoded address of ``chain_id`` back into format and payload."""
    spec = (registry or default_registry()).lookup(chain_id)
    if not spec.is_utxo:
        if spec.account_prefix is not None:
            a = tron_to_eth(s)
            return tron_address_from_payload(a.payload, chain_id)
        payload = parse_eth_address(s)
        return Address(chain_id, AccountFormat.ETH.value, eth_hex(payload), payload)
    if spec.bech32_hrp and s.lower().startswith(spec.bech32_hrp + "1"):
        ver, prog = bech32.decode(spec.bech32_hrp, s)
        if ver is None:
            raise BadChecksum(f"bech32 failure for {s!r}")
        prog = bytes(prog)
        if ver != 0 or len(prog) not in (20, 32):
            raise BadPrefix(f"unsupported witness version/program in {s!r}")
        fmt = ScriptType.P2WPKH if len(prog) == 20 else ScriptType.P2WSH
        return Address(chain_id, fmt.value, s.lower(), prog)
    raw = decode_base58check(s)
    for ver in (spec.p2pkh_version,) + spec.p2pkh_aliases:
        if raw.startswith(ver) and len(raw) == len(ver) + 20:
            return Address(chain_id, ScriptType.P2PKH.value, s, raw[len(ver):])
    for ver in (spec.p2sh_version,) + spec.p2sh_aliases:
        if raw.startswith(ver) and len(raw) == len(ver) + 20:
            return Address(chain_id, ScriptType.P2SH.value, s, raw[len(ver):])
    raise BadPrefix(f"unknown version prefix for {chain_id}: {s!r}")


def normalize_address(chain_id: str, s: str) -> str:
    """Canonical string form used for joins (lowercase hex for ETH)."""
    try:
        return decode_address(chain_id, s).encoded
    except (DataError, UnknownChain):
        return s
