"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Every output file is written to a temporary name and renamed into place.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations
from typing import Dict, List, Optional, Sequence

from . import __version__
from . import reuse
from .addresses import (
    base58check,
    decode_address,
    derive_bundle,
    eth_hex,
    eth_payload,
    normalize_address,
)
from .chains import default_registry
from .clustering import (
    ClusterStats,
    key_address_map,
    merge_by_key,
    multi_input_clusters,
    partition_to_set,
    read_partition,
    script_address,
    transfer_clusters,
    write_partition,
)
from .curve import parse_public_key
from .errors import DataError, KeyReuseError, UsageError
from .ingest import (
    ExtractionStats,
    atomic_write_lines,
    extract_account_events,
    extract_utxo_events,
    import_bitcoin_etl,
    import_eth_rpc_block,
    import_rpc_block,
    import_tron_tx,
    index_events,
    passive_events,
    read_events,
    read_header,
    read_index,
    stream_transactions,
    write_events,
    write_index,
    write_transactions,
)
from .weakkeys import DEFAULT_MEMORY_BUDGET, WeakKeyTable, build_weak_key_table

log = logging.getLogger("keyreuse")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump_json(path, obj) -> None:
    atomic_write_lines(path, [json.dumps(obj, indent=1, sort_keys=True)])


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _inputs_digest(paths: Sequence) -> str:
    h = hashlib.sha256()
    for p in sorted(os.fspath(x) for x in paths):
        h.update(_digest(p).encode())
    return h.hexdigest()


def _chain_path(spec: str):
    if "=" not in spec:
        raise UsageError(f"expected CHAIN=PATH, got {spec!r}")
    chain, path = spec.split("=", 1)
    default_registry().lookup(chain)
    return chain, path


def _load_txs(chain: str, paths: Sequence) -> list:
    stream = stream_transactions(paths, chain)
    txs = list(stream)
    if stream.skipped:
        log.warning("%s: skipped %d malformed records", chain, stream.skipped)
    return txs


# -- subcommands -------------------------------------------------------------

def cmd_import(a) -> int:
    reg = default_registry()
    reg.lookup(a.chain)
    txs = []
    for path in a.inputs:
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc.strerror}") from None
        with fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    if a.source == "bitcoin-etl":
                        txs.append(import_bitcoin_etl(obj, a.chain))
                    elif a.source == "rpc":
                        txs.extend(import_rpc_block(obj, a.chain))
                    elif a.source == "eth-rpc":
                        txs.extend(import_eth_rpc_block(obj, a.chain))
                    else:
                        raw = obj["block_header"]["raw_data"]
                        for i, t in enumerate(obj.get("transactions", [])):
                            txs.append(import_tron_tx(t, int(raw["number"]), i, int(raw["timestamp"]) // 1000))
                except (ValueError, KeyError, TypeError) as exc:
                    log.warning("%s:%d: skipped (%s)", path, lineno, exc)
    write_transactions(a.output, a.chain, txs)
    print(f"imported {len(txs)} transactions")
    return EXIT_OK


def _extract(chain: str, paths, exhaustive: bool = True):
    stats = ExtractionStats()
    txs = _load_txs(chain, paths)
    if default_registry().lookup(chain).is_utxo:
        events = extract_utxo_events(txs, chain, stats)
    else:
        events = extract_account_events(txs, chain, exhaustive, stats)
    return txs, events, stats


def cmd_extract(a) -> int:
    spec = default_registry().lookup(a.chain)
    want_utxo = a.command == "extract-utxo"
    if spec.is_utxo != want_utxo:
        raise UsageError(f"{a.chain} is not a {'UTXO' if want_utxo else 'account'} chain")
    _, events, stats = _extract(a.chain, a.inputs, not getattr(a, "fast_path", False))
    write_events(a.output, events)
    if a.stats:
        _dump_json(a.stats, stats.as_dict())
    print(f"{len(events)} events, {len(stats.anomalies)} anomalies, {stats.malformed} malformed")
    return EXIT_OK


def cmd_index(a) -> int:
    events = list(read_events(a.events))
    if a.corpus:
        corpus = {}
        for spec in a.corpus:
            chain, path = _chain_path(spec)
            corpus.setdefault(chain, []).append(path)
        txs = {c: _load_txs(c, ps) for c, ps in corpus.items()}
        events += passive_events(txs, {e.key for e in events if not e.quarantined})
    idx = index_events(events, strict=a.strict)
    write_index(a.output, idx)
    print(f"{len(idx)} keys indexed")
    return EXIT_OK


def cmd_derive(a) -> int:
    try:
        key = parse_public_key(bytes.fromhex(a.key))
    except ValueError:
        raise DataError("key must be hex") from None
    chains = a.chains or default_registry().chains()
    bundle = derive_bundle(key, chains)
    for addr in bundle.addresses:
        enc = addr.encoding.value if addr.encoding else ""
        print(f"{addr.chain_id}\t{addr.format}\t{enc}\t{addr.encoded}")
    return EXIT_OK


def cmd_classify(a) -> int:
    recs = reuse.classify(read_index(a.index))
    reuse.write_csv(a.output, reuse.records_rows(recs))
    counts = reuse.class_counts(recs)
    print(" ".join(f"{k.value}={v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_intersect(a) -> int:
    recs = reuse.classify(read_index(a.index))
    cls = reuse.ReuseClass.ACTIVE if a.cls == "active" else reuse.ReuseClass.PASSIVE
    counts = reuse.intersections(recs, cls)
    reuse.write_csv(a.output, reuse.upset_rows(counts, default_registry().chains()))
    return EXIT_OK


def cmd_timeline_internal(a) -> int:
    ev = reuse.internal_reuse_events(read_index(a.index), a.chains or None)
    reuse.write_csv(a.output, reuse.timeline_rows(reuse.internal_timeline(ev),
                                                  ("chain", "quarter", "pair", "count")))
    ties = sum(e.tie for e in ev)
    if ties:
        print(f"{ties} tie(s) broken lexicographically")
    return EXIT_OK


def cmd_timeline_crosschain(a) -> int:
    recs = reuse.classify(read_index(a.index))
    counts = reuse.crosschain_timeline(recs, a.top_k)
    reuse.write_csv(a.output, reuse.timeline_rows(counts, ("quarter", "pair", "count")))
    ties = sum(t for _, _, t in reuse.crosschain_events(recs))
    if ties:
        print(f"{ties} tie(s) broken lexicographically")
    return EXIT_OK


def _hsi(chain_a, paths_a, chain_b, paths_b) -> dict:
    ca = reuse.ChainCorpus.from_transactions(chain_a, _load_txs(chain_a, paths_a))
    cb = reuse.ChainCorpus.from_transactions(chain_b, _load_txs(chain_b, paths_b))
    cmp_ = reuse.hsi_compare(ca, cb)
    return {"chains": [chain_a, chain_b], "hash_links": len(cmp_.hash_links),
            "key_links": len(cmp_.key_links), "breakdown": cmp_.breakdown()}


def cmd_compare_hsi(a) -> int:
    ca, pa = _chain_path(a.a)
    cb, pb = _chain_path(a.b)
    out = _hsi(ca, [pa], cb, [pb])
    _dump_json(a.output, out)
    print(json.dumps(out["breakdown"], sort_keys=True))
    return EXIT_OK


def _read_lines(path) -> set:
    if not path:
        return set()
    with open(path, encoding="utf-8") as fh:
        return {ln.strip() for ln in fh if ln.strip()}


def cmd_cluster(a) -> int:
    stats = ClusterStats()
    txs = _load_txs(a.chain, a.inputs)
    ds = multi_input_clusters(txs, a.chain, _read_lines(a.exclude), stats)
    write_partition(a.output, ds.partition(), a.chain, _inputs_digest(a.inputs))
    print(f"{len(ds)} addresses, {ds.num_sets} clusters, {stats.unresolved_inputs} unresolved inputs")
    return EXIT_OK


def cmd_merge_keys(a) -> int:
    header, part = read_partition(a.partition)
    chain = header["chain"]
    ds = partition_to_set(part)
    before = ds.num_sets
    idx = read_index(a.index)
    keys = [k for k in idx.keys() if chain in idx[k]]
    merges = merge_by_key(ds, key_address_map(keys, chain))
    write_partition(a.output, ds.partition(), chain, header.get("inputs_digest", ""))
    print(f"merges={merges} clusters_before={before} clusters_after={ds.num_sets}")
    return EXIT_OK


def _account_address(key, chain: str) -> str:
    spec = default_registry().lookup(chain)
    if spec.account_prefix is not None:
        return base58check(bytes([spec.account_prefix]), eth_payload(key))
    return eth_hex(eth_payload(key))


def _account_universe(chain: str, txs) -> set:
    spec = default_registry().lookup(chain)
    out = set()
    for tx in txs:
        for payload in (tx.claimed_sender, tx.recipient):
            if payload:
                out.add(base58check(bytes([spec.account_prefix]), payload)
                        if spec.account_prefix is not None else eth_hex(payload))
    return out


def _active_keys(idx, chain: str) -> list:
    return sorted((k for k in idx.keys() if chain in idx[k] and idx[k][chain].active_count),
                  key=lambda k: k.hex())


def cmd_transfer(a) -> int:
    header, part = read_partition(a.partition)
    chain = header["chain"]
    idx = read_index(a.index)
    keys = _active_keys(idx, chain)
    src = key_address_map(keys, chain)
    dst = {k.hex(): _account_address(k, a.target) for k in keys}
    universe = _account_universe(a.target, _load_txs(a.target, a.universe))
    out = transfer_clusters(part, src, dst, universe)
    write_partition(a.output, out, a.target, _inputs_digest([a.partition] + list(a.universe)))
    print(f"{len(out)} {a.target} addresses in {len(set(out.values()))} clusters")
    return EXIT_OK


def _label_outputs(report, path) -> None:
    rows = [["key", "chain", "address", "entity", "category"]]
    rows += [[m.key.hex(), m.tag.chain_id, m.tag.address, m.tag.entity, m.tag.category]
             for m in report.matches]
    reuse.write_csv(path, rows)


def cmd_labels(a) -> int:
    recs = reuse.classify(read_index(a.index))
    report = reuse.label_join(recs, reuse.read_tag_file(a.tags))
    _label_outputs(report, a.output)
    counts = " ".join(f"{c}={n}" for c, n in report.category_counts.items())
    print(f"{len(report.matches)} matches, {report.unmatched_tags} unmatched tags; {counts}")
    return EXIT_OK


def spend_edges(chain: str, txs):
    """Edges of the spend graph (spent address -> paid address) and its nodes."""
    spec = default_registry().lookup(chain)
    universe = set()
    edges = []
    outpoints = {}
    for tx in txs:
        ins = []
        for inp in tx.inputs:
            if inp.is_coinbase:
                continue
            addr = (script_address(spec, inp.prev_script) if inp.prev_script is not None
                    else outpoints.get((inp.prev_txid, inp.prev_vout)))
            if addr:
                ins.append(addr)
        outs = []
        for vout, o in enumerate(tx.outputs):
            addr = script_address(spec, o.script)
            outpoints[(tx.txid, vout)] = addr
            outs.append(addr)
        universe.update(ins, outs)
        edges.extend((i, o) for i in ins for o in outs)
    return edges, universe


def _reused_addresses(chain: str, recs, universe) -> set:
    out = set()
    for r in recs:
        if r.cls is not reuse.ReuseClass.NONE and chain in r.chains:
            out.update(a for a in key_address_map([r.key], chain)[r.key.hex()] if a in universe)
    return out


def _degrees(chain: str, txs, idx, marked=()) -> reuse.DegreeHistogram:
    """Histogram over reused-key addresses when an index is given, else all."""
    edges, universe = spend_edges(chain, txs)
    nodes = universe if idx is None else _reused_addresses(chain, reuse.classify(idx), universe)
    return reuse.degree_histogram(edges, nodes, marked)


def _degree_rows(hist) -> list:
    return [["degree", "count"]] + [[d, n] for d, n in hist.counts.items()]


def cmd_degrees(a) -> int:
    idx = read_index(a.index) if a.index else None
    marked = set()
    if a.tags:
        spec = default_registry().lookup(a.chain)
        marked = {normalize_address(a.chain, t.address) for t in reuse.read_tag_file(a.tags)
                  if t.chain_id == spec.chain_id}
    hist = _degrees(a.chain, _load_txs(a.chain, a.inputs), idx, marked)
    reuse.write_csv(a.output, _degree_rows(hist))
    if marked:
        print("marked degrees: " + " ".join(map(str, hist.marked_degrees)))
    return EXIT_OK


def _weak_table(a) -> WeakKeyTable:
    if a.table and os.path.exists(a.table):
        return WeakKeyTable.load(a.table)
    return build_weak_key_table(a.bound, a.weight, a.memory_budget)


def cmd_build_weak_table(a) -> int:
    t = build_weak_key_table(a.bound, a.weight, a.memory_budget)
    t.save(a.output)
    print(f"{len(t)} entries")
    return EXIT_OK


def cmd_weak_scan(a) -> int:
    idx = read_index(a.index)
    hits = reuse.weak_key_scan(idx.keys(), _weak_table(a))
    reuse.write_csv(a.output, [["key", "scalar"]] + [[k.hex(), hex(s)] for k, s in hits])
    print(f"{len(hits)} weak keys")
    return EXIT_OK


def _reused_keys(idx) -> set:
    return {r.key for r in reuse.classify(idx) if r.cls is not reuse.ReuseClass.NONE}


def _hd_rows(cands) -> list:
    return [["input_key", "output_key", "txid_a", "txid_b"]] + [
        [c.input_key, c.output_key, c.txid_a, c.txid_b] for c in cands]


def cmd_hd_indicator(a) -> int:
    ca, pa = _chain_path(a.a)
    cb, pb = _chain_path(a.b)
    reused = _reused_keys(read_index(a.index))
    cands = reuse.hd_reuse_indicator(_load_txs(ca, [pa]), ca, _load_txs(cb, [pb]), cb, reused)
    reuse.write_csv(a.output, _hd_rows(cands))
    print(f"{len(cands)} candidate transaction pairs")
    return EXIT_OK


def cmd_synth_gen(a) -> int:
    from .synth import generate, write_corpus
    corpus = generate(a.seed, n_keys=a.keys, n_active=a.active, n_passive=a.passive,
                      n_unrevealed=a.unrevealed)
    paths = write_corpus(corpus, a.out)
    print(f"wrote {len(paths)} chain files and truth.json to {a.out}")
    return EXIT_OK


# -- full pipeline -----------------------------------------------------------

def _corpus_files(directory) -> Dict[str, List[str]]:
    out: Dict[str, List[str]] = {}
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".jsonl"):
            continue
        path = os.path.join(directory, name)
        header = read_header(path)
        if header.get("format") != "keyreuse-tx":
            continue
        out.setdefault(header["chain"], []).append(path)
    if not out:
        raise DataError(f"no transaction files in {directory}")
    return out


RUN_DEFAULTS = {
    "weak_bound": 2**16,
    "weak_weight": 2,
    "memory_budget": DEFAULT_MEMORY_BUDGET,
    "top_k": reuse.TOP_K_PAIRS,
    "strict": False,
    "workers": 1,
}


def run_config(path=None, **overrides) -> dict:
    """Defaults, then the JSON config file, then non-None overrides."""
    cfg = dict(RUN_DEFAULTS)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        unknown = set(loaded) - set(RUN_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def _extract_chain(chain: str, paths: Sequence):
    st = ExtractionStats()
    txs = _load_txs(chain, paths)
    if default_registry().lookup(chain).is_utxo:
        ev = extract_utxo_events(txs, chain, st)
    else:
        ev = extract_account_events(txs, chain, True, st)
    return ev, st


def _address_payload(chain: str, addr: str):
    if addr.startswith("raw:"):
        return addr
    return decode_address(chain, addr).payload


def run_pipeline(corpus_dir, out_dir, config: Optional[dict] = None) -> dict:
    """Every analysis over one corpus directory; returns the run manifest."""
    cfg = run_config(**(config or {}))
    reg = default_registry()
    files = _corpus_files(corpus_dir)
    os.makedirs(out_dir, exist_ok=True)
    out = lambda name: os.path.join(out_dir, name)  # noqa: E731
    chains = sorted(files)
    txs = {c: _load_txs(c, files[c]) for c in chains}

    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            extracted = list(pool.map(_extract_chain, chains, [files[c] for c in chains]))
    else:
        extracted = [_extract_chain(c, files[c]) for c in chains]
    stats = {}
    events = []
    for chain, (ev, st) in zip(chains, extracted):
        write_events(out(f"events_{chain}.jsonl"), ev)
        stats[chain] = st
        events += ev
    events += passive_events(txs, {e.key for e in events if not e.quarantined}, stats)
    idx = index_events(events, strict=cfg["strict"])
    write_index(out("index.jsonl"), idx)
    _dump_json(out("extraction_stats.json"), {c: s.as_dict() for c, s in stats.items()})

    recs = reuse.classify(idx)
    reuse.write_csv(out("reuse.csv"), reuse.records_rows(recs))
    for name, cls in (("active", reuse.ReuseClass.ACTIVE), ("passive", reuse.ReuseClass.PASSIVE)):
        reuse.write_csv(out(f"intersections_{name}.csv"),
                        reuse.upset_rows(reuse.intersections(recs, cls), chains))
    reuse.write_csv(out("timeline_internal.csv"), reuse.timeline_rows(
        reuse.internal_timeline(reuse.internal_reuse_events(idx)), ("chain", "quarter", "pair", "count")))
    reuse.write_csv(out("timeline_crosschain.csv"), reuse.timeline_rows(
        reuse.crosschain_timeline(recs, cfg["top_k"]), ("quarter", "pair", "count")))

    utxo = [c for c in chains if reg.lookup(c).is_utxo]
    reused = {r.key for r in recs if r.cls is not reuse.ReuseClass.NONE}
    hsi = {}
    hd = [["chain_a", "chain_b"] + _hd_rows([])[0]]
    for ca, cb in combinations(utxo, 2):
        corp_a = reuse.ChainCorpus.from_transactions(ca, txs[ca])
        corp_b = reuse.ChainCorpus.from_transactions(cb, txs[cb])
        hsi[f"{ca}-{cb}"] = reuse.hsi_compare(corp_a, corp_b).breakdown()
        cands = reuse.hd_reuse_indicator(txs[ca], ca, txs[cb], cb, reused)
        hd += [[ca, cb] + row for row in _hd_rows(cands)[1:]]
    _dump_json(out("hsi.json"), hsi)
    reuse.write_csv(out("hd_candidates.csv"), hd)

    tags = []
    tag_path = os.path.join(corpus_dir, "tags.csv")
    if os.path.exists(tag_path):
        tags = reuse.read_tag_file(tag_path)
        report = reuse.label_join(recs, tags)
        _label_outputs(report, out("labels.csv"))
        _dump_json(out("labels.json"), {"category_counts": report.category_counts,
                                        "matches": len(report.matches),
                                        "unmatched_tags": report.unmatched_tags})

    cluster_summary = {}
    for c in utxo:
        st = ClusterStats()
        ds = multi_input_clusters(txs[c], c, frozenset(), st)
        before = ds.num_sets
        merges = merge_by_key(ds, key_address_map(_active_keys(idx, c), c))
        write_partition(out(f"clusters_{c}.jsonl"), ds.partition(), c, _inputs_digest(files[c]))
        cluster_summary[c] = {
            "addresses_per_format": len(ds),
            "addresses_per_payload": len({_address_payload(c, x) for x in ds.partition()}),
            "clusters_multi_input": before, "merges": merges, "clusters_after": ds.num_sets,
            "unresolved_inputs": st.unresolved_inputs}
        marked = {normalize_address(c, t.address) for t in tags if t.chain_id == c}
        hist = _degrees(c, txs[c], idx, marked)
        reuse.write_csv(out(f"degrees_{c}.csv"), _degree_rows(hist))
    _dump_json(out("clusters.json"), cluster_summary)

    table = build_weak_key_table(cfg["weak_bound"], cfg["weak_weight"], cfg["memory_budget"])
    hits = reuse.weak_key_scan(idx.keys(), table)
    reuse.write_csv(out("weak_keys.csv"), [["key", "scalar"]] + [[k.hex(), hex(s)] for k, s in hits])

    outputs = sorted(n for n in os.listdir(out_dir) if n != "manifest.json" and not n.startswith("."))
    # worker count does not affect results, so it stays out of the digest
    digest_cfg = {k: v for k, v in cfg.items() if k != "workers"}
    manifest = {
        "tool": "keyreuse", "version": __version__,
        "config": digest_cfg,
        "config_digest": hashlib.sha256(json.dumps(digest_cfg, sort_keys=True).encode()).hexdigest(),
        "chains": chains,
        "inputs": {os.path.basename(p): _digest(p) for ps in files.values() for p in ps},
        "outputs": {n: _digest(out(n)) for n in outputs},
        "counts": {k.value: v for k, v in reuse.class_counts(recs).items()},
    }
    _dump_json(out("manifest.json"), manifest)
    return manifest


def cmd_run(a) -> int:
    cfg = run_config(a.config, weak_bound=a.weak_bound, weak_weight=a.weak_weight,
                     memory_budget=a.memory_budget, top_k=a.top_k,
                     strict=True if a.strict else None, workers=a.workers)
    m = run_pipeline(a.corpus, a.out, cfg)
    print(" ".join(f"{k}={v}" for k, v in m["counts"].items()))
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="keyreuse", description="Cross-chain public key reuse analysis.")
    p.add_argument("--log-level", default="WARNING")
    p.add_argument("--version", action="version", version=f"keyreuse {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("import", cmd_import, "convert raw dumps to normalized transaction files")
    sp.add_argument("--chain", required=True)
    sp.add_argument("--source", required=True, choices=("bitcoin-etl", "rpc", "eth-rpc", "tron"))
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("-o", "--output", required=True)

    for name in ("extract-utxo", "extract-account"):
        sp = add(name, cmd_extract, "extract key-usage events")
        sp.add_argument("--chain", required=True)
        sp.add_argument("inputs", nargs="+")
        sp.add_argument("-o", "--output", required=True)
        sp.add_argument("--stats")
        if name == "extract-account":
            sp.add_argument("--fast-path", action="store_true",
                            help="recover only each sender's first transaction")

    sp = add("index", cmd_index, "build a key index from event files")
    sp.add_argument("events", nargs="+")
    sp.add_argument("--corpus", action="append", default=[], metavar="CHAIN=PATH",
                    help="transaction files for receiving-side attribution")
    sp.add_argument("--strict", action="store_true", help="drop opportunistic keys")
    sp.add_argument("-o", "--output", required=True)

    sp = add("derive", cmd_derive, "print the addresses of a public key")
    sp.add_argument("key")
    sp.add_argument("--chains", nargs="*")

    for name, func, extra, help_ in (
            ("classify", cmd_classify, None, "reuse class per key"),
            ("intersect", cmd_intersect, "cls", "exclusive chain-set counts"),
            ("timeline-internal", cmd_timeline_internal, "chains", "first second-format use per quarter"),
            ("timeline-crosschain", cmd_timeline_crosschain, "top_k", "first second-chain use per quarter"),
            ("labels", cmd_labels, "tags", "join entity tags onto reused keys"),
            ("weak-scan", cmd_weak_scan, "weak", "find keys with guessable private scalars")):
        sp = add(name, func, help_)
        sp.add_argument("index", nargs="+")
        sp.add_argument("-o", "--output", required=True)
        if extra == "cls":
            sp.add_argument("--class", dest="cls", choices=("active", "passive"), default="active")
        elif extra == "chains":
            sp.add_argument("--chains", nargs="*")
        elif extra == "top_k":
            sp.add_argument("--top-k", type=int, default=reuse.TOP_K_PAIRS)
        elif extra == "tags":
            sp.add_argument("--tags", required=True)
        elif extra == "weak":
            _weak_args(sp)
            sp.add_argument("--table", help="prebuilt table (.npz)")

    sp = add("compare-hsi", cmd_compare_hsi, "hash- vs key-based link comparison")
    sp.add_argument("--a", required=True, metavar="CHAIN=PATH")
    sp.add_argument("--b", required=True, metavar="CHAIN=PATH")
    sp.add_argument("-o", "--output", required=True)

    sp = add("cluster", cmd_cluster, "multi-input clustering")
    sp.add_argument("--chain", required=True)
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--exclude", help="file of txids to leave out (e.g. CoinJoins)")
    sp.add_argument("-o", "--output", required=True)

    sp = add("merge-keys", cmd_merge_keys, "merge clusters that share a public key")
    sp.add_argument("partition")
    sp.add_argument("--index", nargs="+", required=True)
    sp.add_argument("-o", "--output", required=True)

    sp = add("transfer", cmd_transfer, "carry a UTXO partition to an account chain")
    sp.add_argument("partition")
    sp.add_argument("--index", nargs="+", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--universe", nargs="+", required=True, help="target chain transaction files")
    sp.add_argument("-o", "--output", required=True)

    sp = add("degrees", cmd_degrees, "address degree histogram")
    sp.add_argument("--chain", required=True)
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--index", nargs="*")
    sp.add_argument("--tags", help="tag file; tagged addresses are reported separately")
    sp.add_argument("-o", "--output", required=True)

    sp = add("build-weak-table", cmd_build_weak_table, "precompute a weak-key table")
    _weak_args(sp)
    sp.add_argument("-o", "--output", required=True)

    sp = add("hd-indicator", cmd_hd_indicator, "identical spend pairs on two chains")
    sp.add_argument("--a", required=True, metavar="CHAIN=PATH")
    sp.add_argument("--b", required=True, metavar="CHAIN=PATH")
    sp.add_argument("--index", nargs="+", required=True)
    sp.add_argument("-o", "--output", required=True)

    sp = add("synth-gen", cmd_synth_gen, "generate a synthetic corpus with ground truth")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--keys", type=int, default=1000)
    sp.add_argument("--active", type=int, default=100)
    sp.add_argument("--passive", type=int, default=60)
    sp.add_argument("--unrevealed", type=int, default=40)
    sp.add_argument("--out", required=True)

    sp = add("run", cmd_run, "full pipeline over a corpus directory")
    sp.add_argument("corpus")
    sp.add_argument("--out", required=True)
    sp.add_argument("--config", help="JSON file of run parameters; flags override it")
    sp.add_argument("--weak-bound", type=int)
    sp.add_argument("--weak-weight", type=int)
    sp.add_argument("--memory-budget", type=int)
    sp.add_argument("--top-k", type=int)
    sp.add_argument("--strict", action="store_true")
    sp.add_argument("--workers", type=int, help="processes used for extraction")
    return p


def _weak_args(sp) -> None:
    sp.add_argument("--bound", type=int, default=2**20)
    sp.add_argument("--weight", type=int, default=3)
    sp.add_argument("--memory-budget", type=int, default=DEFAULT_MEMORY_BUDGET)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except KeyReuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return {"usage": EXIT_USAGE, "data": EXIT_DATA}.get(exc.category, EXIT_INTERNAL)
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
