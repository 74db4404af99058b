"""Reuse classification, intersections, timelines and secondary analyses."""

from __future__ import annotations

import csv
import enum
import io
import json
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .addresses import derive_bundle, hash160_key, normalize_address, p2sh_p2wpkh_payload
from .chains import ScriptType, default_registry
from .curve import Encoding, PublicKey
from .errors import IncompatibleFormats, MalformedTagFile, UnreadableFile
from .ingest import ChainSummary, KeyIndex, NormalizedUtxoTx, atomic_write_lines, extract_utxo_events
from .script import Role, classify_output

TOP_K_PAIRS = 6
OTHER = "Other"


class ReuseClass(str, enum.Enum):
    ACTIVE = "ActiveReuse"
    PASSIVE = "PassiveReuse"
    NONE = "NoReuse"


@dataclass(frozen=True)
class ReuseRecord:
    key: PublicKey
    chains_active: FrozenSet[str]
    chains_passive_only: FrozenSet[str]
    cls: ReuseClass
    first_reuse_time: Optional[int] = None
    reuse_pair: Optional[Tuple[str, str]] = None
    tie: bool = False

    @property
    def chains(self) -> FrozenSet[str]:
        return self.chains_active | self.chains_passive_only


def _first_two(times: Mapping[str, int]) -> Tuple[Tuple[str, str], int, bool]:
    """Second chain by first-use time; equal times break on chain name."""
    order = sorted(times.items(), key=lambda kv: (kv[1], kv[0]))
    (c0, t0), (c1, t1) = order[0], order[1]
    tie = t0 == t1 or (len(order) > 2 and order[2][1] == t1)
    return (c0, c1), t1, tie


def classify_key(key: PublicKey, per_chain: Mapping[str, ChainSummary]) -> ReuseRecord:
    active = frozenset(c for c, s in per_chain.items() if s.active_count > 0)
    passive_only = frozenset(per_chain) - active
    if len(active) >= 2:
        pair, t, tie = _first_two({c: per_chain[c].first_active for c in active})
        return ReuseRecord(key, active, passive_only, ReuseClass.ACTIVE, t, pair, tie)
    if len(per_chain) >= 2:
        pair, t, tie = _first_two({c: s.first_use for c, s in per_chain.items()})
        return ReuseRecord(key, active, passive_only, ReuseClass.PASSIVE, t, pair, tie)
    return ReuseRecord(key, active, passive_only, ReuseClass.NONE)


def classify(index: KeyIndex) -> List[ReuseRecord]:
    """One record per indexed key, sorted by compressed key hex."""
    return [classify_key(k, index[k]) for k in sorted(index.keys(), key=lambda k: k.hex())]


def class_counts(records: Iterable[ReuseRecord]) -> Dict[ReuseClass, int]:
    c = Counter(r.cls for r in records)
    return {cls: c.get(cls, 0) for cls in ReuseClass}


def intersections(records: Iterable[ReuseRecord],
                  cls: ReuseClass = ReuseClass.ACTIVE) -> Counter:
    """Exclusive intersection counts keyed by the exact chain set.

    Active reuse is keyed by the active chains; passive reuse by all chains
    the key touched. Every record lands in exactly one set, so the counts
    sum to the number of records of that class.
    """
    out: Counter = Counter()
    for r in records:
        if r.cls is not cls:
            continue
        out[r.chains_active if cls is ReuseClass.ACTIVE else r.chains] += 1
    return out


def upset_rows(counts: Mapping[FrozenSet[str], int], chains: Sequence[str]) -> List[List]:
    chains = sorted(chains)
    rows = []
    for s, n in counts.items():
        rows.append([int(c in s) for c in chains] + [n])
    rows.sort(key=lambda r: (-r[-1], [-v for v in r[:-1]]))
    return [chains + ["count"]] + rows


# -- timelines ---------------------------------------------------------------

def quarter(ts: int) -> str:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    return f"{d.year}-Q{(d.month - 1) // 3 + 1}"


@dataclass(frozen=True)
class InternalReuseEvent:
    key: PublicKey
    chain_id: str
    pair: str
    timestamp: int
    tie: bool = False


def internal_reuse_events(index: KeyIndex, chains: Optional[Iterable[str]] = None) -> List[InternalReuseEvent]:
    """First moment a key is actively used in a second format on one chain.

    Formats are (script type, key encoding); the same type under both
    encodings yields e.g. ``P2PKH-P2PKH`` (a compressed/uncompressed split).
    """
    wanted = set(chains) if chains is not None else None
    out = []
    for key in sorted(index.keys(), key=lambda k: k.hex()):
        for chain, s in sorted(index[key].items()):
            if wanted is not None and chain not in wanted:
                continue
            if len(s.type_first_use) < 2:
                continue
            order = sorted(s.type_first_use.items(), key=lambda kv: (kv[1], kv[0]))
            (f0, t0), (f1, t1) = order[0], order[1]
            tie = t0 == t1 or (len(order) > 2 and order[2][1] == t1)
            out.append(InternalReuseEvent(key, chain, f"{f0[0]}-{f1[0]}", t1, tie))
    return out


def internal_timeline(events: Iterable[InternalReuseEvent]) -> Counter:
    """Counts keyed by (chain, quarter, pair)."""
    return Counter((e.chain_id, quarter(e.timestamp), e.pair) for e in events)


def crosschain_events(records: Iterable[ReuseRecord]) -> List[Tuple[str, int, bool]]:
    """(pair label, time, tie) for every active cross-chain reuse."""
    return [(f"{r.reuse_pair[0]}-{r.reuse_pair[1]}", r.first_reuse_time, r.tie)
            for r in records if r.cls is ReuseClass.ACTIVE]


def crosschain_timeline(records: Iterable[ReuseRecord], top_k: int = TOP_K_PAIRS) -> Counter:
    """Counts keyed by (quarter, pair); pairs outside the top ``top_k`` by
    total count are rolled into ``Other``."""
    events = crosschain_events(records)
    totals = Counter(p for p, _, _ in events)
    top = {p for p, _ in sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]}
    return Counter((quarter(t), p if p in top else OTHER) for p, t, _ in events)


def timeline_rows(counts: Counter, header: Sequence[str]) -> List[List]:
    return [list(header)] + [list(k) + [n] for k, n in sorted(counts.items())]


# -- hash- vs key-based comparison -------------------------------------------

_HASH_TYPES = (ScriptType.P2PKH, ScriptType.P2WPKH, ScriptType.P2SH)


@dataclass
class ChainCorpus:
    """What one UTXO chain exposes: output payloads and directly revealed keys."""
    chain_id: str
    payloads: Set[bytes] = field(default_factory=set)
    keys: Set[PublicKey] = field(default_factory=set)

    @classmethod
    def from_transactions(cls, chain_id: str, txs: Iterable[NormalizedUtxoTx]) -> "ChainCorpus":
        spec = default_registry().lookup(chain_id)
        if not spec.is_utxo:
            raise IncompatibleFormats(f"{chain_id} has no hash160 address formats")
        txs = list(txs)
        out = cls(chain_id)
        for tx in txs:
            for o in tx.outputs:
                p = classify_output(o.script)
                if p.script_type in _HASH_TYPES:
                    out.payloads.add(p.payload)
        out.keys = {e.key.with_encoding(Encoding.COMPRESSED)
                    for e in extract_utxo_events(txs, chain_id)}
        return out


@dataclass
class HsiComparison:
    hash_links: Set[bytes]
    key_links: Set[PublicKey]
    both: Set[PublicKey]
    key_only: Set[PublicKey]
    hash_only_revealed: Set[bytes]
    hash_only_unrevealed: Set[bytes]

    def breakdown(self) -> Dict[str, int]:
        return {"both": len(self.both), "key_only": len(self.key_only),
                "hash_only_revealed": len(self.hash_only_revealed),
                "hash_only_unrevealed": len(self.hash_only_unrevealed)}


def _key_payloads(k: PublicKey) -> Tuple[bytes, ...]:
    return (hash160_key(k, Encoding.COMPRESSED), hash160_key(k, Encoding.UNCOMPRESSED),
            p2sh_p2wpkh_payload(k))


def hsi_compare(a: ChainCorpus, b: ChainCorpus) -> HsiComparison:
    """Contrast address-hash matching with public-key matching.

    The hash comparator links equal output payloads across the two chains;
    the key comparator links keys revealed on both. Hash links are
    attributed to a revealed key when one of its payloads matches.
    """
    for c in (a, b):
        if not default_registry().lookup(c.chain_id).is_utxo:
            raise IncompatibleFormats(f"{c.chain_id} has no hash160 address formats")
    hash_links = a.payloads & b.payloads
    key_links = a.keys & b.keys
    owner: Dict[bytes, PublicKey] = {}
    for k in a.keys | b.keys:
        for p in _key_payloads(k):
            owner[p] = k
    linked_keys = {owner[p] for p in hash_links if p in owner}
    both = key_links & linked_keys
    key_only = key_links - linked_keys
    revealed = {p for p in hash_links if p in owner and owner[p] not in key_links}
    unrevealed = {p for p in hash_links if p not in owner}
    return HsiComparison(hash_links, key_links, both, key_only, revealed, unrevealed)


# -- secondary analyses ------------------------------------------------------

@dataclass(frozen=True)
class Tag:
    chain_id: str
    address: str
    entity: str
    category: str


@dataclass(frozen=True)
class LabelMatch:
    key: PublicKey
    tag: Tag


@dataclass
class LabelReport:
    matches: List[LabelMatch]
    category_counts: Dict[str, int]  # distinct reused keys per category
    unmatched_tags: int


_TAG_FIELDS = ("chain", "address", "entity", "category")


def read_tag_file(path) -> List[Tag]:
    """Tags from a JSONL (``.jsonl``) or CSV file with chain, address, entity, category."""
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc.strerror}") from None
    if path.endswith((".jsonl", ".json")):
        rows = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                rows.append({f: d[f] for f in _TAG_FIELDS})
            except (ValueError, KeyError, TypeError):
                raise MalformedTagFile(f"{path}:{n}: need {', '.join(_TAG_FIELDS)}") from None
    else:
        reader = csv.DictReader(io.StringIO(text))
        if not reader.fieldnames or not set(_TAG_FIELDS) <= set(reader.fieldnames):
            raise MalformedTagFile(f"{path}: CSV header must include {','.join(_TAG_FIELDS)}")
        rows = list(reader)
    tags = []
    for n, r in enumerate(rows, 1):
        if any(not isinstance(r.get(f), str) or not r.get(f) for f in _TAG_FIELDS):
            raise MalformedTagFile(f"{path}: record {n} has an empty or non-text field")
        tags.append(Tag(r["chain"], r["address"], r["entity"], r["category"]))
    return tags


def label_join(records: Iterable[ReuseRecord], tags: Iterable[Tag]) -> LabelReport:
    """Attach tags to reused keys through any address in their bundles."""
    reg = default_registry()
    tags = list(tags)
    by_addr: Dict[Tuple[str, str], List[Tag]] = defaultdict(list)
    chains = set()
    for t in tags:
        if t.chain_id not in reg:
            continue
        chains.add(t.chain_id)
        by_addr[(t.chain_id, normalize_address(t.chain_id, t.address))].append(t)
    matches = []
    hit: Set[Tag] = set()
    per_cat: Dict[str, Set[PublicKey]] = defaultdict(set)
    for r in records:
        if r.cls is ReuseClass.NONE:
            continue
        for a in derive_bundle(r.key, chains).addresses:
            for t in by_addr.get((a.chain_id, a.encoded), ()):
                matches.append(LabelMatch(r.key, t))
                hit.add(t)
                per_cat[t.category].add(r.key)
    matches.sort(key=lambda m: (m.key.hex(), m.tag.chain_id, m.tag.address, m.tag.category))
    return LabelReport(matches, {c: len(ks) for c, ks in sorted(per_cat.items())},
                       sum(1 for t in tags if t not in hit))


@dataclass
class DegreeHistogram:
    counts: Dict[int, int]
    marked_degrees: List[int]


def degree_histogram(edges: Iterable[Tuple[str, str]], nodes: Iterable[str],
                     marked: Iterable[str] = ()) -> DegreeHistogram:
    """Distinct-neighbour degree of every analysed node.

    Repeated edges between a pair count once and self-loops are ignored.
    Neighbours outside ``nodes`` still count.
    """
    wanted = set(nodes)
    nbrs: Dict[str, Set[str]] = {n: set() for n in wanted}
    for a, b in edges:
        if a == b:
            continue
        if a in wanted:
            nbrs[a].add(b)
        if b in wanted:
            nbrs[b].add(a)
    counts = dict(sorted(Counter(len(s) for s in nbrs.values()).items()))
    return DegreeHistogram(counts, sorted(len(nbrs[m]) for m in set(marked) if m in nbrs))


@dataclass(frozen=True)
class HdCandidate:
    input_key: str
    output_key: str
    txid_a: str
    txid_b: str


def key_spend_pairs(txs: Iterable[NormalizedUtxoTx], chain_id: str,
                    reused: Set[PublicKey]) -> Dict[Tuple[str, str], List[str]]:
    """(input key, output key) -> txids, for reused keys on both sides.

    Output keys are resolved through the payloads a reused key can have.
    A key paying itself is not a pair.
    """
    txs = list(txs)
    reused = {k.with_encoding(Encoding.COMPRESSED) for k in reused}
    owner = {p: k for k in reused for p in _key_payloads(k)}
    ins_by_tx: Dict[str, Set[PublicKey]] = defaultdict(set)
    for e in extract_utxo_events(txs, chain_id):
        k = e.key.with_encoding(Encoding.COMPRESSED)
        if e.role is Role.ACTIVE and k in reused:
            ins_by_tx[e.txid].add(k)
    pairs: Dict[Tuple[str, str], List[str]] = defaultdict(list)
    for tx in txs:
        ins = ins_by_tx.get(tx.txid)
        if not ins:
            continue
        outs = set()
        for o in tx.outputs:
            p = classify_output(o.script)
            if p.script_type in _HASH_TYPES and p.payload in owner:
                outs.add(owner[p.payload])
        for k in ins:
            for o in outs:
                if o != k:
                    pairs[(k.hex(), o.hex())].append(tx.txid)
    return pairs


def hd_reuse_indicator(txs_a: Iterable[NormalizedUtxoTx], chain_a: str,
                       txs_b: Iterable[NormalizedUtxoTx], chain_b: str,
                       reused: Set[PublicKey]) -> List[HdCandidate]:
    """Transaction pairs (one per chain) spending from the same reused key
    to the same reused key. A weak hint of a shared HD derivation, no more."""
    pa = key_spend_pairs(txs_a, chain_a, reused)
    pb = key_spend_pairs(txs_b, chain_b, reused)
    out = []
    for pair in sorted(pa.keys() & pb.keys()):
        for ta in sorted(pa[pair]):
            for tb in sorted(pb[pair]):
                out.append(HdCandidate(pair[0], pair[1], ta, tb))
    return out


def weak_key_scan(keys: Iterable[PublicKey], table) -> List[Tuple[PublicKey, int]]:
    hits = []
    for k in sorted(set(keys), key=lambda k: k.hex()):
        s = table.lookup(k)
        if s is not None:
            hits.append((k, s))
    return hits


# -- writers -----------------------------------------------------------------

def write_csv(path, rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    atomic_write_lines(path, buf.getvalue().splitlines())


def records_rows(records: Iterable[ReuseRecord]) -> List[List]:
    rows = [["key", "class", "chains_active", "chains_passive_only", "first_reuse_time",
             "first_chain", "second_chain", "tie"]]
    for r in records:
        rows.append([r.key.hex(), r.cls.value, "|".join(sorted(r.chains_active)),
                     "|".join(sorted(r.chains_passive_only)),
                     "" if r.first_reuse_time is None else r.first_reuse_time,
                     r.reuse_pair[0] if r.reuse_pair else "",
                     r.reuse_pair[1] if r.reuse_pair else "", int(r.tie)])
    return rows
