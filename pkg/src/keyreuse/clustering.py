"""Address clustering: multi-input heuristic, key-based merging, transfer.

A cluster's canonical identifier is its lexicographically smallest
address, so partitions compare equal regardless of union order.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Set, Tuple

from .addresses import (
    base58check,
    derive_bundle,
    eth_hex,
    eth_payload,
    hash160_key,
    segwit_address,
)
from .chains import ChainSpec, ScriptType, default_registry
from .curve import PublicKey
from .hashing import sha256
from .ingest import SCHEMA_VERSION, NormalizedUtxoTx, _open, _read_header, atomic_write_lines
from .script import classify_output

PARTITION_FORMAT = "keyreuse-partition"


class DisjointSet:
    """Union by size with path compression; tracks each set's minimum."""

    def __init__(self, items: Iterable[Hashable] = ()):
        self._parent: Dict = {}
        self._size: Dict = {}
        self._min: Dict = {}
        self._count = 0
        for x in items:
            self.add(x)

    def __len__(self) -> int:
        return len(self._parent)

    def __contains__(self, x) -> bool:
        return x in self._parent

    @property
    def num_sets(self) -> int:
        return self._count

    def add(self, x) -> None:
        if x not in self._parent:
            self._parent[x] = x
            self._size[x] = 1
            self._min[x] = x
            self._count += 1

    def find(self, x):
        parent = self._parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]
        if self._min[rb] < self._min[ra]:
            self._min[ra] = self._min[rb]
        del self._size[rb], self._min[rb]
        self._count -= 1
        return True

    def canonical(self, x):
        return self._min[self.find(x)]

    def partition(self) -> Dict:
        """Member -> canonical cluster id."""
        return {x: self.canonical(x) for x in self._parent}

    def clusters(self) -> Dict:
        out = defaultdict(list)
        for x in self._parent:
            out[self.canonical(x)].append(x)
        return {k: sorted(v) for k, v in sorted(out.items())}


# -- addresses of scripts ----------------------------------------------------

def script_address(spec: ChainSpec, script: bytes) -> str:
    """Encoded address of an output script on ``spec``'s chain.

    P2PK outputs map to the P2PKH address of the embedded key (in the
    encoding it was published with). Scripts without an address get a
    ``raw:`` identifier built from their hash.
    """
    p = classify_output(script)
    st = p.script_type
    if st is ScriptType.P2PKH:
        return base58check(spec.p2pkh_version, p.payload)
    if st is ScriptType.P2SH:
        return base58check(spec.p2sh_version, p.payload)
    if st in (ScriptType.P2WPKH, ScriptType.P2WSH) and spec.bech32_hrp:
        return segwit_address(spec.bech32_hrp, 0, p.payload)
    if st is ScriptType.P2PK:
        k = p.embedded_keys[0]
        return base58check(spec.p2pkh_version, hash160_key(k, k.encoding))
    return "raw:" + sha256(bytes(script)).hex()


def key_addresses(key: PublicKey, chain_id: str) -> List[str]:
    return [a.encoded for a in derive_bundle(key, [chain_id]).addresses]


# -- heuristics --------------------------------------------------------------

@dataclass
class ClusterStats:
    transactions: int = 0
    excluded: int = 0
    unresolved_inputs: int = 0
    unions: int = 0


def multi_input_union(ds: DisjointSet, groups: Iterable[Iterable[str]]) -> int:
    """Union every group of co-spent addresses; returns successful unions."""
    merged = 0
    for g in groups:
        g = list(g)
        for a in g:
            ds.add(a)
        for b in g[1:]:
            merged += ds.union(g[0], b)
    return merged


def input_groups(txs: Iterable[NormalizedUtxoTx], chain_id: str, exclude: Set[str] = frozenset(),
                 stats: Optional[ClusterStats] = None) -> Tuple[List[List[str]], Set[str]]:
    """Per-transaction lists of spent addresses plus the address universe."""
    spec = default_registry().lookup(chain_id)
    stats = stats if stats is not None else ClusterStats()
    outpoints: Dict[Tuple[str, int], str] = {}
    universe: Set[str] = set()
    groups = []
    for tx in txs:
        stats.transactions += 1
        g = []
        for inp in tx.inputs:
            if inp.is_coinbase:
                continue
            if inp.prev_script is not None:
                addr = script_address(spec, inp.prev_script)
            else:
                addr = outpoints.pop((inp.prev_txid, inp.prev_vout), None)
            if addr is None:
                stats.unresolved_inputs += 1
                continue
            g.append(addr)
            universe.add(addr)
        for vout, o in enumerate(tx.outputs):
            addr = script_address(spec, o.script)
            outpoints[(tx.txid, vout)] = addr
            universe.add(addr)
        if tx.txid in exclude:
            stats.excluded += 1
            continue
        if g:
            groups.append(sorted(set(g)))
    return groups, universe


def multi_input_clusters(txs: Iterable[NormalizedUtxoTx], chain_id: str,
                         exclude: Set[str] = frozenset(),
                         stats: Optional[ClusterStats] = None) -> DisjointSet:
    stats = stats if stats is not None else ClusterStats()
    groups, universe = input_groups(txs, chain_id, exclude, stats)
    ds = DisjointSet(sorted(universe))
    stats.unions = multi_input_union(ds, groups)
    return ds


def merge_by_key(ds: DisjointSet, key_addrs: Mapping[Hashable, Iterable[str]]) -> int:
    """Merge clusters holding addresses derived from one public key.

    Only addresses already in ``ds`` take part. Returns the number of
    merges, which equals the drop in cluster count.
    """
    merges = 0
    for key in sorted(key_addrs, key=str):
        present = sorted(a for a in key_addrs[key] if a in ds)
        for b in present[1:]:
            merges += ds.union(present[0], b)
    return merges


def key_address_map(keys: Iterable[PublicKey], chain_id: str) -> Dict[str, List[str]]:
    return {k.hex(): key_addresses(k, chain_id) for k in keys}


def transfer_clusters(partition: Mapping[str, str], key_src_addrs: Mapping[Hashable, Iterable[str]],
                      key_dst_addr: Mapping[Hashable, str], universe: Set[str]) -> Dict[str, str]:
    """Carry a source-chain partition over to an account chain.

    Target addresses (one per key) are grouped when their keys' source
    addresses share a cluster. Targets outside ``universe`` are dropped.
    """
    by_cluster: Dict[str, Set[str]] = defaultdict(set)
    for key, src in key_src_addrs.items():
        dst = key_dst_addr.get(key)
        if dst is None or dst not in universe:
            continue
        for a in src:
            cid = partition.get(a)
            if cid is not None:
                by_cluster[cid].add(dst)
    ds = DisjointSet()
    for cid in sorted(by_cluster):
        members = sorted(by_cluster[cid])
        for m in members:
            ds.add(m)
        for m in members[1:]:
            ds.union(members[0], m)
    return ds.partition()


def eth_address_of(key: PublicKey) -> str:
    return eth_hex(eth_payload(key))


# -- partition files ---------------------------------------------------------

def write_partition(path, partition: Mapping[str, str], chain_id: str, inputs_digest: str = "") -> None:
    header = {"format": PARTITION_FORMAT, "schema_version": SCHEMA_VERSION, "chain": chain_id,
              "inputs_digest": inputs_digest,
              "clusters": len(set(partition.values())), "addresses": len(partition)}
    rows = [json.dumps({"address": a, "cluster": partition[a]}, separators=(",", ":"))
            for a in sorted(partition)]
    atomic_write_lines(path, [json.dumps(header, sort_keys=True, separators=(",", ":"))] + rows)


def read_partition(path) -> Tuple[dict, Dict[str, str]]:
    with _open(path) as fh:
        header = _read_header(fh, path, PARTITION_FORMAT)
        out = {}
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out[d["address"]] = d["cluster"]
    return header, out


def partition_to_set(partition: Mapping[str, str]) -> DisjointSet:
    ds = DisjointSet(sorted(partition))
    groups = defaultdict(list)
    for a, c in partition.items():
        groups[c].append(a)
    for members in groups.values():
        for m in members[1:]:
            ds.union(members[0], m)
    return ds
