import random

from keyreuse.chains import default_registry
from keyreuse.clustering import (
    ClusterStats,
    DisjointSet,
    key_address_map,
    merge_by_key,
    multi_input_clusters,
    multi_input_union,
    read_partition,
    script_address,
    transfer_clusters,
    write_partition,
)
from keyreuse.curve import Encoding, public_key_from_private
from keyreuse.ingest import NormalizedUtxoTx, UtxoInput, UtxoOutput
from keyreuse.script import p2pk_script, p2pkh_script, p2wpkh_script
from keyreuse.addresses import hash160_key

from helpers import components, random_cluster_instance


def test_disjoint_set_basics():
    ds = DisjointSet("edcba")
    assert ds.num_sets == 5
    assert ds.union("e", "d") and not ds.union("d", "e")
    ds.union("c", "e")
    assert ds.canonical("e") == "c" and ds.num_sets == 3
    assert ds.clusters() == {"a": ["a"], "b": ["b"], "c": ["c", "d", "e"]}


def test_against_bfs_small():
    rng = random.Random(1)
    for _ in range(20):
        addrs, groups, key_addrs = random_cluster_instance(rng, 200, 300, 30)
        ds = DisjointSet(addrs)
        multi_input_union(ds, groups)
        before = ds.num_sets
        merges = merge_by_key(ds, key_addrs)
        assert merges == before - ds.num_sets
        edges = [(g[0], x) for g in groups for x in g[1:]]
        for ks in key_addrs.values():
            present = [a for a in ks if a in ds]
            edges += [(present[0], x) for x in present[1:]]
        assert ds.partition() == components(addrs, edges)


def _spend(txid, prevs, outs, height):
    ins = [UtxoInput(p, v) for p, v in prevs]
    return NormalizedUtxoTx("BTC", txid, height, height, ins, [UtxoOutput(s, 1) for s in outs])


def test_multi_input_from_transactions():
    k = [public_key_from_private(d) for d in range(1, 6)]
    spk = [p2pkh_script(hash160_key(x, Encoding.COMPRESSED)) for x in k]
    cb = lambda t, s: NormalizedUtxoTx("BTC", t, 0, 0, [UtxoInput(None)], [UtxoOutput(s, 1)])  # noqa: E731
    txs = [cb(f"c{i}", s) for i, s in enumerate(spk)]
    txs.append(_spend("s1", [("c0", 0), ("c1", 0)], [spk[2]], 1))
    txs.append(_spend("s2", [("c3", 0), ("c4", 0)], [b"\x6a"], 2))
    st = ClusterStats()
    ds = multi_input_clusters(txs, "BTC", {"s2"}, st)
    assert st.excluded == 1 and st.unions == 1
    spec = default_registry().lookup("BTC")
    a = [script_address(spec, s) for s in spk]
    assert ds.canonical(a[0]) == ds.canonical(a[1]) != ds.canonical(a[3])
    assert ds.canonical(a[3]) != ds.canonical(a[4])


def test_script_address_forms():
    spec = default_registry().lookup("BTC")
    k = public_key_from_private(1)
    assert script_address(spec, p2pk_script(k.compressed)) == "1BgGZ9tcN4rm9KBzDn7KprQz87SZ26SAMH"
    assert script_address(spec, p2wpkh_script(hash160_key(k, Encoding.COMPRESSED))) == \
        "bc1qw508d6qejxtdg4y5r3zarvary0c5xw7kv8f3t4"
    assert script_address(spec, b"\x6a").startswith("raw:")


def test_merge_by_key_addresses():
    k = public_key_from_private(3)
    km = key_address_map([k], "BTC")
    ds = DisjointSet(km[k.hex()][:2])
    assert merge_by_key(ds, km) == 1 and ds.num_sets == 1


def test_transfer_and_universe():
    part = {"x1": "x1", "x2": "x1", "y1": "y1"}
    src = {"k1": ["x1"], "k2": ["x2"], "k3": ["y1"], "k4": ["nowhere"]}
    dst = {"k1": "E1", "k2": "E2", "k3": "E3", "k4": "E4"}
    out = transfer_clusters(part, src, dst, {"E1", "E2", "E4"})
    assert out == {"E1": "E1", "E2": "E1"}


def test_partition_file(tmp_path):
    part = {"b": "a", "a": "a", "c": "c"}
    write_partition(tmp_path / "p.jsonl", part, "BTC", "d")
    header, back = read_partition(tmp_path / "p.jsonl")
    assert back == part and header["clusters"] == 2 and header["chain"] == "BTC"
