"""Template-based classification of UTXO scripts and public key extraction.

This is not a script interpreter: outputs and spends are matched against
opcode skeletons of the standard script types, and keys are pulled from
the positions those templates define.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .chains import ScriptType
from .curve import Encoding, PublicKey, looks_like_key, try_parse_public_key
from .errors import MalformedScript
from .hashing import hash160, sha256

log = logging.getLogger(__name__)

OP_0 = 0x00
OP_PUSHDATA1 = 0x4C
OP_PUSHDATA2 = 0x4D
OP_PUSHDATA4 = 0x4E
OP_1NEGATE = 0x4F
OP_1 = 0x51
OP_16 = 0x60
OP_RETURN = 0x6A
OP_DUP = 0x76
OP_EQUAL = 0x87
OP_EQUALVERIFY = 0x88
OP_HASH160 = 0xA9
OP_CHECKSIG = 0xAC
OP_CHECKMULTISIG = 0xAE

MAX_MULTISIG_KEYS = 20


class Role(str, enum.Enum):
    ACTIVE = "active"
    PASSIVE = "passive"


class Source(str, enum.Enum):
    INPUT_SCRIPT = "input_script"
    WITNESS = "witness"
    REDEEM_SCRIPT = "redeem_script"
    OUTPUT_SCRIPT = "output_script"


@dataclass(frozen=True)
class MultisigPolicy:
    m: int
    n: int
    keys: Tuple[PublicKey, ...]


@dataclass(frozen=True)
class ParsedOutput:
    script_type: ScriptType
    payload: bytes = b""
    embedded_keys: Tuple[PublicKey, ...] = ()
    policy: Optional[MultisigPolicy] = None
    inferred: bool = False  # reconstructed from spend shape, prev script unknown


@dataclass(frozen=True)
class SpendEvidence:
    input_script: bytes
    witness_stack: Sequence[bytes]
    prev_output: ParsedOutput


@dataclass(frozen=True)
class ExtractedKey:
    key: PublicKey
    role: Role
    source: Source
    script_type: ScriptType
    subkind: str = ""  # e.g. "multisig", "p2pkh", "unknown" for script-hash spends
    opportunistic: bool = False
    anomaly: Optional[str] = None


# -- tokenizer ---------------------------------------------------------------

def tokenize(script: bytes) -> List[Tuple[int, Optional[bytes]]]:
    """Split a script into (opcode, pushed-data) tuples.

    Raises MalformedScript if a push runs past the end of the script.
    """
    out = []
    i = 0
    n = len(script)
    while i < n:
        op = script[i]
        i += 1
        if op == OP_0:
            out.append((op, b""))
            continue
        if op < OP_PUSHDATA1:
            size = op
        elif op == OP_PUSHDATA1:
            if i + 1 > n:
                raise MalformedScript("truncated PUSHDATA1")
            size = script[i]
            i += 1
        elif op == OP_PUSHDATA2:
            if i + 2 > n:
                raise MalformedScript("truncated PUSHDATA2")
            size = int.from_bytes(script[i:i + 2], "little")
            i += 2
        elif op == OP_PUSHDATA4:
            if i + 4 > n:
                raise MalformedScript("truncated PUSHDATA4")
            size = int.from_bytes(script[i:i + 4], "little")
            i += 4
        else:
            out.append((op, None))
            continue
        if i + size > n:
            raise MalformedScript(f"push of {size} bytes overruns script at offset {i}")
        out.append((op, script[i:i + size]))
        i += size
    return out


def push_script(*items: bytes) -> bytes:
    """Serialize a push-only script (used to build fixtures and synthetic data)."""
    out = bytearray()
    for d in items:
        n = len(d)
        if n == 0:
            out.append(OP_0)
        elif n < OP_PUSHDATA1:
            out.append(n)
        elif n <= 0xFF:
            out += bytes([OP_PUSHDATA1, n])
        elif n <= 0xFFFF:
            out.append(OP_PUSHDATA2)
            out += n.to_bytes(2, "little")
        else:
            out.append(OP_PUSHDATA4)
            out += n.to_bytes(4, "little")
        out += d
    return bytes(out)


def _small_int(op: int) -> Optional[int]:
    if OP_1 <= op <= OP_16:
        return op - OP_1 + 1
    return None


def _pushes(tokens) -> Optional[List[bytes]]:
    if any(d is None for _, d in tokens):
        return None
    return [d for _, d in tokens]


# -- templates ---------------------------------------------------------------

def p2pkh_script(pkh: bytes) -> bytes:
    return bytes([OP_DUP, OP_HASH160, 20]) + pkh + bytes([OP_EQUALVERIFY, OP_CHECKSIG])


def p2sh_script(sh: bytes) -> bytes:
    return bytes([OP_HASH160, 20]) + sh + bytes([OP_EQUAL])


def p2wpkh_script(pkh: bytes) -> bytes:
    return bytes([OP_0, 20]) + pkh


def p2wsh_script(wsh: bytes) -> bytes:
    return bytes([OP_0, 32]) + wsh


def p2pk_script(key_bytes: bytes) -> bytes:
    return push_script(key_bytes) + bytes([OP_CHECKSIG])


def multisig_script(m: int, key_blobs: Sequence[bytes]) -> bytes:
    return (bytes([OP_1 + m - 1]) + push_script(*key_blobs)
            + bytes([OP_1 + len(key_blobs) - 1, OP_CHECKMULTISIG]))


def _parse_multisig(tokens) -> Optional[Tuple[int, int, List[bytes]]]:
    if len(tokens) < 4 or tokens[-1][0] != OP_CHECKMULTISIG:
        return None
    m = _small_int(tokens[0][0])
    n = _small_int(tokens[-2][0])
    if m is None or n is None or not 1 <= m <= n <= MAX_MULTISIG_KEYS:
        return None
    blobs = tokens[1:-2]
    if len(blobs) != n or any(d is None or not looks_like_key(d) for _, d in blobs):
        return None
    return m, n, [d for _, d in blobs]


def classify_output(script: bytes) -> ParsedOutput:
    """Total classification of an output (locking) script."""
    s = bytes(script)
    n = len(s)
    if n == 25 and s[:3] == bytes([OP_DUP, OP_HASH160, 20]) and s[23:] == bytes([OP_EQUALVERIFY, OP_CHECKSIG]):
        return ParsedOutput(ScriptType.P2PKH, s[3:23])
    if n == 23 and s[:2] == bytes([OP_HASH160, 20]) and s[22] == OP_EQUAL:
        return ParsedOutput(ScriptType.P2SH, s[2:22])
    if n == 22 and s[:2] == bytes([OP_0, 20]):
        return ParsedOutput(ScriptType.P2WPKH, s[2:])
    if n == 34 and s[:2] == bytes([OP_0, 32]):
        return ParsedOutput(ScriptType.P2WSH, s[2:])
    if n and s[0] == OP_RETURN:
        return ParsedOutput(ScriptType.OP_RETURN)
    try:
        tokens = tokenize(s)
    except MalformedScript:
        return ParsedOutput(ScriptType.NON_STANDARD)
    if len(tokens) == 2 and tokens[1][0] == OP_CHECKSIG and tokens[0][1] is not None \
            and looks_like_key(tokens[0][1]):
        key = try_parse_public_key(tokens[0][1])
        if key is not None:
            return ParsedOutput(ScriptType.P2PK, tokens[0][1], (key,))
        return ParsedOutput(ScriptType.NON_STANDARD)
    ms = _parse_multisig(tokens)
    if ms is not None:
        m, nkeys, blobs = ms
        keys = tuple(k for k in map(try_parse_public_key, blobs) if k is not None)
        if keys:
            policy = MultisigPolicy(m, nkeys, keys) if len(keys) == nkeys else None
            return ParsedOutput(ScriptType.P2MS, b"", keys, policy)
    return ParsedOutput(ScriptType.NON_STANDARD)


@dataclass(frozen=True)
class RedeemScript:
    kind: str  # "multisig" | "p2wpkh" | "p2wsh" | "p2pkh" | "unknown"
    policy: Optional[MultisigPolicy] = None
    hash: bytes = b""
    harvested: Tuple[PublicKey, ...] = field(default=())


def parse_redeem_script(script: bytes) -> RedeemScript:
    """Recognize the redeem/witness script shapes keys are extracted from.

    Anything else is ``unknown``; valid-point pushes inside it are still
    returned in ``harvested``.
    """
    s = bytes(script)
    if len(s) == 22 and s[:2] == bytes([OP_0, 20]):
        return RedeemScript("p2wpkh", hash=s[2:])
    if len(s) == 34 and s[:2] == bytes([OP_0, 32]):
        return RedeemScript("p2wsh", hash=s[2:])
    if len(s) == 25 and s[:3] == bytes([OP_DUP, OP_HASH160, 20]) and s[23:] == bytes([OP_EQUALVERIFY, OP_CHECKSIG]):
        return RedeemScript("p2pkh", hash=s[3:23])
    try:
        tokens = tokenize(s)
    except MalformedScript:
        return RedeemScript("unknown")
    ms = _parse_multisig(tokens)
    if ms is not None:
        m, n, blobs = ms
        keys = [try_parse_public_key(b) for b in blobs]
        if all(k is not None for k in keys):
            return RedeemScript("multisig", policy=MultisigPolicy(m, n, tuple(keys)))
    harvested = []
    for _, d in tokens:
        if d is not None and looks_like_key(d):
            k = try_parse_public_key(d)
            if k is not None:
                harvested.append(k)
    return RedeemScript("unknown", harvested=tuple(harvested))


# -- extraction --------------------------------------------------------------

def _check_hash(key: PublicKey, expected: bytes) -> Optional[str]:
    if hash160(key.serialize()) != expected:
        return f"hash160 of key {key.hex()} does not match committed hash {expected.hex()}"
    return None


def _key_push(data: bytes, where: str) -> PublicKey:
    key = try_parse_public_key(data) if looks_like_key(data) else None
    if key is None:
        raise MalformedScript(f"expected a public key push in {where}, got {len(data)} bytes")
    return key


def _from_script(rs: RedeemScript, stack: Sequence[bytes], spend_type: ScriptType,
                 source: Source, key_pos_source: Source) -> List[ExtractedKey]:
    """Keys from a revealed redeem or witness script."""
    if rs.kind == "multisig":
        return [ExtractedKey(k, Role.PASSIVE, source, spend_type, "multisig")
                for k in rs.policy.keys]
    if rs.kind == "p2pkh":
        if len(stack) < 3:
            raise MalformedScript("wrapped P2PKH spend lacks <sig> <pubkey>")
        key = _key_push(stack[-2], "wrapped P2PKH spend")
        return [ExtractedKey(key, Role.ACTIVE, key_pos_source, spend_type, "p2pkh",
                             anomaly=_check_hash(key, rs.hash))]
    harvested = rs.harvested
    return [ExtractedKey(k, Role.PASSIVE, source, spend_type, "unknown",
                         opportunistic=k.encoding is Encoding.COMPRESSED)
            for k in harvested]


def extract_keys(ev: SpendEvidence) -> List[ExtractedKey]:
    """Public keys revealed by one spend, with their Active/Passive role.

    Multisig keys are always passive, even those whose signatures are
    present: matching signatures to keys would need full verification.
    """
    prev = ev.prev_output
    st = prev.script_type
    witness = list(ev.witness_stack)

    if st is ScriptType.P2PK:
        return [ExtractedKey(prev.embedded_keys[0], Role.ACTIVE, Source.OUTPUT_SCRIPT, st)]
    if st is ScriptType.P2MS:
        return [ExtractedKey(k, Role.PASSIVE, Source.OUTPUT_SCRIPT, st, "multisig")
                for k in prev.embedded_keys]
    if st is ScriptType.P2PKH:
        pushes = _pushes(tokenize(ev.input_script))
        if not pushes or len(pushes) < 2:
            raise MalformedScript("P2PKH spend needs <sig> <pubkey>")
        key = _key_push(pushes[-1], "P2PKH input script")
        return [ExtractedKey(key, Role.ACTIVE, Source.INPUT_SCRIPT, st,
                             anomaly=_check_hash(key, prev.payload))]
    if st is ScriptType.P2WPKH:
        if len(witness) != 2:
            raise MalformedScript("P2WPKH witness must be <sig> <pubkey>")
        key = _key_push(witness[-1], "P2WPKH witness")
        return [ExtractedKey(key, Role.ACTIVE, Source.WITNESS, st,
                             anomaly=_check_hash(key, prev.payload))]
    if st is ScriptType.P2WSH:
        if not witness:
            raise MalformedScript("P2WSH spend without witness")
        ws = witness[-1]
        if sha256(ws) != prev.payload:
            log.debug("witness script hash mismatch")
        rs = parse_redeem_script(ws)
        return _from_script(rs, witness, st, Source.WITNESS, Source.WITNESS)
    if st is ScriptType.P2SH:
        pushes = _pushes(tokenize(ev.input_script))
        if not pushes:
            raise MalformedScript("P2SH spend must be push-only with a redeem script")
        redeem = pushes[-1]
        anomaly = None
        if hash160(redeem) != prev.payload:
            anomaly = "redeem script does not hash to the P2SH payload"
        rs = parse_redeem_script(redeem)
        if rs.kind == "p2wpkh":
            if len(witness) != 2:
                raise MalformedScript("P2SH-P2WPKH witness must be <sig> <pubkey>")
            key = _key_push(witness[-1], "P2SH-P2WPKH witness")
            return [ExtractedKey(key, Role.ACTIVE, Source.WITNESS, ScriptType.P2SH_P2WPKH,
                                 anomaly=anomaly or _check_hash(key, rs.hash))]
        if rs.kind == "p2wsh":
            if not witness:
                raise MalformedScript("P2SH-P2WSH spend without witness")
            inner = parse_redeem_script(witness[-1])
            return _from_script(inner, witness, ScriptType.P2SH_P2WSH, Source.WITNESS, Source.WITNESS)
        keys = _from_script(rs, pushes, st, Source.REDEEM_SCRIPT, Source.INPUT_SCRIPT)
        if anomaly:
            keys = [ExtractedKey(k.key, k.role, k.source, k.script_type, k.subkind,
                                 k.opportunistic, k.anomaly or anomaly) for k in keys]
        return keys
    return []


def output_keys(parsed: ParsedOutput) -> List[ExtractedKey]:
    """Keys visible on the receiving side (P2PK and bare multisig only)."""
    if parsed.script_type in (ScriptType.P2PK, ScriptType.P2MS):
        sub = "multisig" if parsed.script_type is ScriptType.P2MS else ""
        return [ExtractedKey(k, Role.PASSIVE, Source.OUTPUT_SCRIPT, parsed.script_type, sub)
                for k in parsed.embedded_keys]
    return []


def infer_prev_output(input_script: bytes, witness: Sequence[bytes]) -> Optional[ParsedOutput]:
    """Guess the spent output's template from the spend itself.

    Used when the previous output is not in the corpus. Returns None when
    the shape is ambiguous (e.g. a lone signature, which is a P2PK spend
    whose key lives only in the unseen output).
    """
    try:
        pushes = _pushes(tokenize(input_script))
    except MalformedScript:
        return None
    if pushes is None:
        return None
    if witness:
        if not pushes:
            last = witness[-1]
            if len(witness) == 2 and looks_like_key(last):
                return ParsedOutput(ScriptType.P2WPKH, hash160(last), inferred=True)
            return ParsedOutput(ScriptType.P2WSH, sha256(last), inferred=True)
        if len(pushes) == 1 and len(pushes[0]) in (22, 34) and pushes[0][0] == OP_0:
            return ParsedOutput(ScriptType.P2SH, hash160(pushes[0]), inferred=True)
        return None
    if len(pushes) == 2 and looks_like_key(pushes[1]):
        return ParsedOutput(ScriptType.P2PKH, hash160(pushes[1]), inferred=True)
    if len(pushes) >= 2:
        rs = parse_redeem_script(pushes[-1])
        if rs.kind in ("multisig", "p2pkh") or rs.harvested:
            return ParsedOutput(ScriptType.P2SH, hash160(pushes[-1]), inferred=True)
    return None
