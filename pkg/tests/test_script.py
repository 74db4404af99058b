import pytest

from keyreuse.chains import ScriptType
from keyreuse.curve import Encoding, public_key_from_private
from keyreuse.errors import MalformedScript
from keyreuse.ingest import ExtractionStats, extract_utxo_events
from keyreuse.script import (
    ParsedOutput,
    Role,
    SpendEvidence,
    classify_output,
    extract_keys,
    infer_prev_output,
    multisig_script,
    p2pkh_script,
    p2pk_script,
    parse_redeem_script,
    push_script,
    tokenize,
)

import script_fixtures


@pytest.mark.parametrize("name", sorted(script_fixtures.build()))
def test_fixture_keys_and_roles(name):
    tx, want = script_fixtures.build()[name]
    st = ExtractionStats()
    got = {(e.key.hex(), e.role.value) for e in extract_utxo_events([tx], "BTC", st)}
    assert got == want
    assert st.anomalies == [] and st.malformed == 0


def test_classify_templates():
    k = public_key_from_private(3)
    assert classify_output(p2pkh_script(b"\x01" * 20)).script_type is ScriptType.P2PKH
    assert classify_output(p2pk_script(k.compressed)).embedded_keys == (k,)
    ms = classify_output(multisig_script(1, [k.compressed, public_key_from_private(4).compressed]))
    assert ms.script_type is ScriptType.P2MS and ms.policy.m == 1 and ms.policy.n == 2
    assert classify_output(b"\x6a\x04abcd").script_type is ScriptType.OP_RETURN
    # witness v1 (taproot) is not a template keys are taken from
    assert classify_output(b"\x51\x20" + b"\x02" * 32).script_type is ScriptType.NON_STANDARD
    assert classify_output(p2pk_script(b"\x02" + b"\xff" * 32)).script_type is ScriptType.NON_STANDARD


def test_tokenize_truncated():
    with pytest.raises(MalformedScript):
        tokenize(b"\x4c\x10abc")
    with pytest.raises(MalformedScript):
        tokenize(b"\x05ab")


def test_hash_mismatch_is_anomaly():
    k = public_key_from_private(5)
    other = public_key_from_private(6)
    prev = classify_output(p2pkh_script(b"\x00" * 20))
    (ek,) = extract_keys(SpendEvidence(push_script(b"\x30" * 70, k.compressed), (), prev))
    assert ek.anomaly and ek.role is Role.ACTIVE
    assert other != k


def test_malformed_spend():
    prev = classify_output(p2pkh_script(b"\x00" * 20))
    with pytest.raises(MalformedScript):
        extract_keys(SpendEvidence(push_script(b"\x30" * 70), (), prev))
    wpkh = ParsedOutput(ScriptType.P2WPKH, b"\x00" * 20)
    with pytest.raises(MalformedScript):
        extract_keys(SpendEvidence(b"", [b"\x30"], wpkh))


def test_unknown_redeem_harvest():
    comp = public_key_from_private(8)
    unc = public_key_from_private(9, Encoding.UNCOMPRESSED)
    rs = parse_redeem_script(push_script(comp.compressed, unc.uncompressed) + b"\x75\x75\x51")
    assert rs.kind == "unknown" and set(rs.harvested) == {comp, unc}


def test_infer_prev_output():
    k = public_key_from_private(10)
    assert infer_prev_output(push_script(b"\x30" * 71, k.compressed), ()).script_type is ScriptType.P2PKH
    assert infer_prev_output(b"", [b"\x30" * 71, k.compressed]).script_type is ScriptType.P2WPKH
    assert infer_prev_output(push_script(b"\x30" * 71), ()) is None


def test_fixture_parses_with_inferred_prev():
    # same spends with the previous output stripped still yield the keys
    for name, (tx, want) in script_fixtures.build().items():
        if name in ("P2PK", "P2MS"):
            continue
        tx.inputs[0].prev_script = None
        got = {(e.key.hex(), e.role.value) for e in extract_utxo_events([tx], "BTC")}
        assert got == want, name
