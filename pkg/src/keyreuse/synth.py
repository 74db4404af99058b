"""Synthetic multi-chain corpora with planted reuse and a ground-truth sidecar.

The generator first builds a *plan*: keys with explicit uses (chain, role,
format, encoding, time). Expected results in the sidecar are computed from
the plan alone, then the plan is rendered into schema v1 transactions.
UTXO signatures are placeholders (extraction never verifies them); account
transactions are really signed so sender recovery works.
"""

from __future__ import annotations

import csv
import json
import os
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence, Tuple

from . import account as acct
from .addresses import base58check, derive_bundle, eth_payload
from .chains import default_registry
from .curve import N, Encoding, PublicKey, public_key_from_private, sign
from .hashing import hash160, sha256
from .ingest import NormalizedUtxoTx, UtxoInput, UtxoOutput, write_transactions
from .script import (
    multisig_script,
    p2pk_script,
    p2pkh_script,
    p2sh_script,
    p2wpkh_script,
    p2wsh_script,
    push_script,
)

T_START = int(datetime(2016, 1, 1, tzinfo=timezone.utc).timestamp())
T_END = int(datetime(2024, 12, 31, tzinfo=timezone.utc).timestamp())

UTXO_FORMATS_SEGWIT = ("P2PKH", "P2WPKH", "P2SH_P2WPKH", "P2PK")
UTXO_FORMATS_LEGACY = ("P2PKH", "P2PK")
HASH_FORMATS = ("P2PKH", "P2WPKH", "P2SH_P2WPKH")
ACCOUNT_FORMAT = {"ETH": "ETH_ACCOUNT", "TRX": "TRX_ACCOUNT"}
EVM_SCHEMAS = tuple(t.value for t in acct.EVM_TYPES)


@dataclass
class Use:
    chain: str
    role: str  # "active" | "passive"
    fmt: str
    encoding: Encoding
    ts: int
    wallet: Optional[int] = None  # active UTXO uses sharing a wallet are co-spent
    pay_to: Optional[PublicKey] = None  # spend output goes to this key's P2PKH


@dataclass
class Plant:
    priv: int
    key: PublicKey
    category: str
    uses: List[Use] = field(default_factory=list)


@dataclass
class Multisig:
    chain: str
    m: int
    privs: List[int]
    wrapped: str  # "P2SH" | "P2WSH"
    ts: int


@dataclass
class Plan:
    seed: int
    chains: Tuple[str, ...]
    plants: List[Plant] = field(default_factory=list)
    multisigs: List[Multisig] = field(default_factory=list)
    hd_chains: Tuple[str, ...] = ()
    n_hd: int = 0
    xwallet_chains: Tuple[str, ...] = ()


def _quarter(ts: int) -> str:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    return f"{d.year}-Q{(d.month - 1) // 3 + 1}"


class _Clock:
    """Distinct timestamps, so orderings in the plan are unambiguous."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used = set()

    def __call__(self, lo: int = T_START, hi: int = T_END) -> int:
        while True:
            t = self.rng.randrange(lo, hi)
            if t not in self.used:
                self.used.add(t)
                return t


def _new_key(rng: random.Random) -> Tuple[int, PublicKey]:
    d = rng.randrange(1, N)
    return d, public_key_from_private(d)


def _formats(chain: str) -> Sequence[str]:
    spec = default_registry().lookup(chain)
    if not spec.is_utxo:
        return (ACCOUNT_FORMAT[chain],)
    return UTXO_FORMATS_SEGWIT if spec.bech32_hrp else UTXO_FORMATS_LEGACY


def _utxo_active_format(rng, chain) -> Tuple[str, Encoding]:
    fmt = rng.choice(_formats(chain))
    if fmt in ("P2PKH", "P2PK") and rng.random() < 0.25:
        return fmt, Encoding.UNCOMPRESSED
    return fmt, Encoding.COMPRESSED


def _passive_format(rng, chain, revealing: bool = True) -> Tuple[str, Encoding]:
    spec = default_registry().lookup(chain)
    if not spec.is_utxo:
        return ACCOUNT_FORMAT[chain], Encoding.UNCOMPRESSED
    options = [f for f in _formats(chain) if revealing or f in HASH_FORMATS]
    fmt = rng.choice(options)
    if fmt in ("P2PKH", "P2PK") and rng.random() < 0.25:
        return fmt, Encoding.UNCOMPRESSED
    return fmt, Encoding.COMPRESSED


def _active_use(rng, clock, chain) -> Use:
    spec = default_registry().lookup(chain)
    if spec.is_utxo:
        fmt, enc = _utxo_active_format(rng, chain)
    else:
        fmt, enc = ACCOUNT_FORMAT[chain], Encoding.UNCOMPRESSED
    return Use(chain, "active", fmt, enc, clock())


def make_plan(seed: int, n_keys: int = 1000, n_active: int = 100, n_passive: int = 60,
              n_unrevealed: int = 40, n_internal: int = 40, n_wallets: int = 20,
              n_multisig: int = 10, n_hd: int = 3, n_xwallets: int = 3,
              chains: Sequence[str] = ("BTC", "DOGE", "ETH", "LTC", "TRX", "ZEC")) -> Plan:
    """Plan ``n_keys`` keys plus helper keys (account senders, multisig).

    ``n_active`` keys are actively used on 2-3 chains, ``n_passive`` are
    active on one chain and receive on 1-2 others, ``n_unrevealed`` only
    ever receive (on 2 chains, hash formats only), the rest are used on one
    chain. ``n_internal`` single-chain keys spend from two formats.
    ``n_hd`` of the active-reuse budget are planted as key pairs where one
    key pays the other on two UTXO chains (two keys per pattern).
    ``n_xwallets`` groups of 2-3 further active-reuse keys are co-spent on
    one UTXO chain and each also sends on ETH, giving transfer targets.
    """
    if n_active + n_passive + n_unrevealed > n_keys:
        raise ValueError("planted categories exceed n_keys")
    rng = random.Random(seed)
    clock = _Clock(rng)
    chains = tuple(sorted(chains))
    utxo = [c for c in chains if default_registry().lookup(c).is_utxo]
    plan = Plan(seed, chains)

    if n_hd and len(utxo) < 2:
        n_hd = 0
    if 2 * n_hd > n_active:
        raise ValueError("n_hd needs two active-reuse keys per pattern")
    if n_hd:
        plan.hd_chains = tuple(sorted(rng.sample(utxo, 2)))
        plan.n_hd = n_hd
    for _ in range(n_hd):
        (d_in, k_in), (d_out, k_out) = _new_key(rng), _new_key(rng)
        p_in = Plant(d_in, k_in, "active_reuse")
        p_out = Plant(d_out, k_out, "active_reuse")
        for c in plan.hd_chains:
            u = _active_use(rng, clock, c)
            u.pay_to = k_out
            p_in.uses.append(u)
            p_out.uses.append(_active_use(rng, clock, c))
        plan.plants += [p_in, p_out]

    budget = n_active - 2 * n_hd
    wallet_id = 0
    xsrc = "BTC" if "BTC" in utxo else (utxo[0] if utxo else None)
    if xsrc is None or "ETH" not in chains:
        n_xwallets = 0
    for _ in range(min(n_xwallets, budget // 3)):
        plan.xwallet_chains = (xsrc, "ETH")
        ts = clock()
        for _ in range(rng.randint(2, 3)):
            d, k = _new_key(rng)
            u = _active_use(rng, clock, xsrc)
            u.ts, u.wallet = ts, wallet_id
            plan.plants.append(Plant(d, k, "active_reuse", [u, _active_use(rng, clock, "ETH")]))
            budget -= 1
        wallet_id += 1

    for _ in range(budget):
        d, k = _new_key(rng)
        p = Plant(d, k, "active_reuse")
        for c in rng.sample(chains, rng.choice((2, 2, 3))):
            p.uses.append(_active_use(rng, clock, c))
            if rng.random() < 0.3 and default_registry().lookup(c).is_utxo:
                p.uses.append(_active_use(rng, clock, c))
        plan.plants.append(p)

    for _ in range(n_passive):
        d, k = _new_key(rng)
        p = Plant(d, k, "passive_reuse")
        picked = rng.sample(chains, rng.choice((2, 2, 3)))
        p.uses.append(_active_use(rng, clock, picked[0]))
        for c in picked[1:]:
            fmt, enc = _passive_format(rng, c)
            p.uses.append(Use(c, "passive", fmt, enc, clock()))
        plan.plants.append(p)

    for _ in range(n_unrevealed):
        d, k = _new_key(rng)
        p = Plant(d, k, "unrevealed")
        for c in rng.sample(chains, 2):
            fmt, enc = _passive_format(rng, c, revealing=False)
            p.uses.append(Use(c, "passive", fmt, enc, clock()))
        plan.plants.append(p)

    n_noise = n_keys - n_active - n_passive - n_unrevealed
    for i in range(n_noise):
        d, k = _new_key(rng)
        p = Plant(d, k, "noise")
        if i < n_internal and utxo:
            c = rng.choice(utxo)
            pairs = [(f, e) for f in _formats(c) for e in (Encoding.COMPRESSED, Encoding.UNCOMPRESSED)
                     if e is Encoding.COMPRESSED or f in ("P2PKH", "P2PK")]
            for fmt, enc in rng.sample(pairs, 2):
                p.uses.append(Use(c, "active", fmt, enc, clock()))
        else:
            c = rng.choice(chains)
            p.uses.append(_active_use(rng, clock, c))
            if rng.random() < 0.3:
                fmt, enc = _passive_format(rng, c)
                p.uses.append(Use(c, "passive", fmt, enc, clock()))
        plan.plants.append(p)

    # wallets: groups of single-chain noise keys co-spent in one transaction
    noise_by_chain = defaultdict(list)
    for p in plan.plants:
        if p.category == "noise" and len(p.uses) == 1 and p.uses[0].role == "active" \
                and p.uses[0].chain in utxo:
            noise_by_chain[p.uses[0].chain].append(p)
    for _ in range(n_wallets):
        c = rng.choice(sorted(noise_by_chain))
        pool = noise_by_chain[c]
        if len(pool) < 2:
            continue
        members = [pool.pop() for _ in range(min(len(pool), rng.randint(2, 4)))]
        ts = clock()
        for m in members:
            m.uses[0].wallet = wallet_id
            m.uses[0].ts = ts
        wallet_id += 1

    segwit = [c for c in utxo if default_registry().lookup(c).bech32_hrp]
    for _ in range(n_multisig if segwit else 0):
        n = rng.randint(2, 3)
        plan.multisigs.append(Multisig(rng.choice(segwit), rng.randint(1, n),
                                       [rng.randrange(1, N) for _ in range(n)],
                                       rng.choice(("P2SH", "P2WSH")), clock()))
    return plan


# -- expected results (computed from the plan only) ---------------------------

def expected(plan: Plan, account_senders: Sequence[Plant] = ()) -> dict:
    classes = Counter()
    inter = Counter()
    cross = Counter()
    internal = Counter()
    active_keys, passive_keys, unrevealed = [], [], []
    for p in list(plan.plants) + list(account_senders):
        active = {u.chain for u in p.uses if u.role == "active"}
        touched = {u.chain for u in p.uses}
        revealed = bool(active) or any(u.fmt == "P2PK" for u in p.uses)
        if not revealed:
            unrevealed.append(p.key.hex())
            continue
        if len(active) >= 2:
            classes["ActiveReuse"] += 1
            active_keys.append(p.key.hex())
            inter[tuple(sorted(active))] += 1
            first = sorted((min(u.ts for u in p.uses if u.role == "active" and u.chain == c), c)
                           for c in active)
            cross[(_quarter(first[1][0]), f"{first[0][1]}-{first[1][1]}")] += 1
        elif len(touched) >= 2:
            classes["PassiveReuse"] += 1
            passive_keys.append(p.key.hex())
        else:
            classes["NoReuse"] += 1
        for c in sorted(active):
            firsts: Dict[Tuple[str, str], int] = {}
            for u in p.uses:
                if u.chain == c and u.role == "active":
                    f = (u.fmt, u.encoding.value)
                    firsts[f] = min(firsts.get(f, u.ts), u.ts)
            if len(firsts) >= 2:
                (f0, _), (f1, t1) = sorted(firsts.items(), key=lambda kv: (kv[1], kv[0]))[:2]
                internal[(c, _quarter(t1), f"{f0[0]}-{f1[0]}")] += 1
    # multisig participants are passive on a single chain
    for ms in plan.multisigs:
        classes["NoReuse"] += len(ms.privs)
    return {
        "classes": {k: classes.get(k, 0) for k in ("ActiveReuse", "PassiveReuse", "NoReuse")},
        "active_reuse_keys": sorted(active_keys),
        "passive_reuse_keys": sorted(passive_keys),
        "unrevealed_keys": sorted(unrevealed),
        "intersections": [{"chains": list(k), "count": n} for k, n in sorted(inter.items())],
        "crosschain": [[q, pair, n] for (q, pair), n in sorted(cross.items())],
        "internal": [[c, q, pair, n] for (c, q, pair), n in sorted(internal.items())],
    }


# -- rendering ---------------------------------------------------------------

class _Renderer:
    def __init__(self, plan: Plan):
        self.plan = plan
        self.rng = random.Random(plan.seed ^ 0x5EED)
        self.txs: Dict[str, list] = defaultdict(list)
        self.senders: List[Plant] = []
        self.wallets: Dict[int, List[Tuple[Plant, Use]]] = defaultdict(list)

    def txid(self) -> str:
        return self.rng.randbytes(32).hex()

    def fake_sig(self) -> bytes:
        return b"\x30\x44" + self.rng.randbytes(68) + b"\x01"

    # UTXO side
    @staticmethod
    def output_script(key: PublicKey, fmt: str, enc: Encoding) -> bytes:
        if fmt == "P2PKH":
            return p2pkh_script(hash160(key.serialize(enc)))
        if fmt == "P2WPKH":
            return p2wpkh_script(hash160(key.compressed))
        if fmt == "P2SH_P2WPKH":
            return p2sh_script(hash160(p2wpkh_script(hash160(key.compressed))))
        if fmt == "P2PK":
            return p2pk_script(key.serialize(enc))
        raise ValueError(fmt)

    def spend_input(self, key: PublicKey, fmt: str, enc: Encoding, prev: str) -> UtxoInput:
        sig = self.fake_sig()
        if fmt == "P2PKH":
            return UtxoInput(prev, 0, push_script(sig, key.serialize(enc)))
        if fmt == "P2WPKH":
            return UtxoInput(prev, 0, b"", [sig, key.compressed])
        if fmt == "P2SH_P2WPKH":
            return UtxoInput(prev, 0, push_script(p2wpkh_script(hash160(key.compressed))),
                             [sig, key.compressed])
        if fmt == "P2PK":
            return UtxoInput(prev, 0, push_script(sig))
        raise ValueError(fmt)

    def coinbase(self, chain: str, ts: int, script: bytes) -> str:
        txid = self.txid()
        self.txs[chain].append(NormalizedUtxoTx(chain, txid, 0, ts, [UtxoInput(None)],
                                                [UtxoOutput(script, 50_000)]))
        return txid

    def noise_output(self) -> UtxoOutput:
        return UtxoOutput(p2pkh_script(self.rng.randbytes(20)), 10_000)

    def utxo_use(self, p: Plant, u: Use) -> None:
        script = self.output_script(p.key, u.fmt, u.encoding)
        if u.role == "passive":
            self.coinbase(u.chain, u.ts, script)
            return
        if u.wallet is not None:
            self.wallets[u.wallet].append((p, u))
            return
        fund = self.coinbase(u.chain, u.ts - self.rng.randint(3600, 30 * 86400), script)
        out = (UtxoOutput(p2pkh_script(hash160(u.pay_to.compressed)), 10_000) if u.pay_to
               else self.noise_output())
        self.txs[u.chain].append(NormalizedUtxoTx(
            u.chain, self.txid(), 0, u.ts, [self.spend_input(p.key, u.fmt, u.encoding, fund)], [out]))

    def wallet_spends(self) -> None:
        for wid in sorted(self.wallets):
            members = self.wallets[wid]
            chain, ts = members[0][1].chain, members[0][1].ts
            ins = []
            for p, u in members:
                fund = self.coinbase(chain, ts - self.rng.randint(3600, 30 * 86400),
                                     self.output_script(p.key, u.fmt, u.encoding))
                ins.append(self.spend_input(p.key, u.fmt, u.encoding, fund))
            self.txs[chain].append(NormalizedUtxoTx(chain, self.txid(), 0, ts, ins, [self.noise_output()]))

    def multisig(self, ms: Multisig) -> None:
        blobs = [public_key_from_private(d).compressed for d in ms.privs]
        redeem = multisig_script(ms.m, blobs)
        sigs = [self.fake_sig() for _ in range(ms.m)]
        if ms.wrapped == "P2SH":
            fund = self.coinbase(ms.chain, ms.ts - 86400, p2sh_script(hash160(redeem)))
            inp = UtxoInput(fund, 0, push_script(b"", *sigs, redeem))
        else:
            fund = self.coinbase(ms.chain, ms.ts - 86400, p2wsh_script(sha256(redeem)))
            inp = UtxoInput(fund, 0, b"", [b""] + sigs + [redeem])
        self.txs[ms.chain].append(NormalizedUtxoTx(ms.chain, self.txid(), 0, ms.ts, [inp],
                                                   [self.noise_output()]))

    # account side
    def account_tx(self, chain: str, priv: int, ts: int, to: bytes) -> acct.AccountTx:
        sender = public_key_from_private(priv)
        if chain == "TRX":
            tx_type = acct.TxType.TRON
            fields = {"raw_data": self.rng.randbytes(48)}
            cid = None
        else:
            tx_type = acct.TxType(self.rng.choice(EVM_SCHEMAS))
            cid = default_registry().lookup(chain).eip155_chain_id or 1
            fields = {"nonce": self.rng.randrange(1000), "gas": 21000, "to": to,
                      "value": self.rng.randrange(10**18), "data": b""}
            if tx_type is acct.TxType.DYNAMIC_FEE:
                fields.update(max_priority_fee_per_gas=2 * 10**9, max_fee_per_gas=50 * 10**9)
            else:
                fields["gas_price"] = 20 * 10**9
            if tx_type is not acct.TxType.LEGACY:
                fields["chain_id"] = cid
            if tx_type in (acct.TxType.ACCESS_LIST, acct.TxType.DYNAMIC_FEE):
                fields["access_list"] = []
        tx = acct.AccountTx(chain, tx_type, fields, None, eth_payload(sender), ts, self.txid(),
                            0, 0, to)
        sig = sign(acct.signing_hash(tx), priv)
        tx.signature = type(sig)(sig.r, sig.s, acct.encode_v(sig.v_raw, tx_type, cid))
        return tx

    def account_use(self, p: Plant, u: Use) -> None:
        if u.role == "active":
            self.txs[u.chain].append(self.account_tx(u.chain, p.priv, u.ts, self.rng.randbytes(20)))
            return
        d = self.rng.randrange(1, N)
        helper = Plant(d, public_key_from_private(d), "sender",
                       [Use(u.chain, "active", ACCOUNT_FORMAT[u.chain], Encoding.UNCOMPRESSED, u.ts)])
        self.senders.append(helper)
        self.txs[u.chain].append(self.account_tx(u.chain, d, u.ts, eth_payload(p.key)))

    def render(self) -> Dict[str, list]:
        reg = default_registry()
        for p in self.plan.plants:
            for u in p.uses:
                if reg.lookup(u.chain).is_utxo:
                    self.utxo_use(p, u)
                else:
                    self.account_use(p, u)
        self.wallet_spends()
        for ms in self.plan.multisigs:
            self.multisig(ms)
        out = {}
        for chain in self.plan.chains:
            txs = sorted(self.txs.get(chain, []), key=lambda t: (t.timestamp, t.txid))
            for height, tx in enumerate(txs):
                if isinstance(tx, NormalizedUtxoTx):
                    tx.block_height = height
                else:
                    tx.block = height
            out[chain] = txs
        return out


@dataclass
class Corpus:
    plan: Plan
    txs: Dict[str, list]
    truth: dict
    tags: List[Tuple[str, str, str, str]] = field(default_factory=list)


DEFAULT_TAG_PLANTS = {"NameService": 5, "Bridge": 3}


def transfer_truth(plan: Plan) -> dict:
    """Expected target-chain grouping: keys active on the source chain and
    seen on the target, grouped when co-spent on the source."""
    if not plan.xwallet_chains:
        return {}
    src, dst = plan.xwallet_chains
    groups: Dict[object, List[str]] = defaultdict(list)
    for i, p in enumerate(plan.plants):
        src_uses = [u for u in p.uses if u.chain == src and u.role == "active"]
        if not src_uses or not any(u.chain == dst for u in p.uses):
            continue
        wid = next((u.wallet for u in src_uses if u.wallet is not None), None)
        groups[("w", wid) if wid is not None else ("k", i)].append("0x" + eth_payload(p.key).hex())
    return {"source": src, "target": dst,
            "clusters": sorted(sorted(g) for g in groups.values())}


def plant_tags(plan: Plan, truth: dict, categories: Dict[str, int], n_unmatched: int = 5
               ) -> List[Tuple[str, str, str, str]]:
    """Tag one derived address of distinct reused keys per category, plus
    tags on addresses no key derives."""
    rng = random.Random(plan.seed ^ 0x7A65)
    reused = set(truth["active_reuse_keys"]) | set(truth["passive_reuse_keys"])
    pool = sorted((p for p in plan.plants if p.key.hex() in reused), key=lambda p: p.key.hex())
    picked = rng.sample(pool, min(len(pool), sum(categories.values())))
    rows = []
    it = iter(picked)
    for cat in sorted(categories):
        for i in range(categories[cat]):
            p = next(it, None)
            if p is None:
                break
            chain = rng.choice(sorted({u.chain for u in p.uses}))
            addr = rng.choice(derive_bundle(p.key, [chain]).addresses)
            rows.append((chain, addr.encoded, f"{cat.lower()}-{i}", cat))
    btc = default_registry().lookup("BTC")
    for i in range(n_unmatched):
        rows.append(("BTC", base58check(btc.p2pkh_version, rng.randbytes(20)), f"unknown-{i}", "Exchange"))
    truth["label_categories"] = {c: n for c, n in sorted(categories.items())}
    truth["unmatched_tags"] = n_unmatched
    return sorted(rows)


def generate(seed: int, tag_plants: Optional[Dict[str, int]] = None, **kwargs) -> Corpus:
    plan = make_plan(seed, **kwargs)
    r = _Renderer(plan)
    txs = r.render()
    truth = expected(plan, r.senders)
    truth["seed"] = seed
    truth["chains"] = list(plan.chains)
    truth["wallets"] = sorted(
        sorted(p.key.hex() for p, _ in members) for members in r.wallets.values())
    truth["multisig_keys"] = sorted(public_key_from_private(d).hex()
                                    for ms in plan.multisigs for d in ms.privs)
    truth["hd_chains"] = list(plan.hd_chains)
    truth["hd_candidates"] = plan.n_hd
    truth["transfer"] = transfer_truth(plan)
    tags = plant_tags(plan, truth, DEFAULT_TAG_PLANTS if tag_plants is None else tag_plants)
    return Corpus(plan, txs, truth, tags)


def write_corpus(corpus: Corpus, out_dir) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for chain, txs in sorted(corpus.txs.items()):
        path = os.path.join(out_dir, f"{chain}.jsonl")
        write_transactions(path, chain, txs)
        paths.append(path)
    if corpus.tags:
        with open(os.path.join(out_dir, "tags.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["chain", "address", "entity", "category"])
            w.writerows(corpus.tags)
    with open(os.path.join(out_dir, "truth.json"), "w") as fh:
        json.dump(corpus.truth, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return paths


# -- two-chain corpus for hash- vs key-based comparison -----------------------

def hsi_corpus(seed: int, n_same: int = 30, n_split: int = 30, n_passive: int = 30,
               n_noise: int = 200, chains: Tuple[str, str] = ("BTC", "LTC")) -> Corpus:
    """Two UTXO chains with three planted link kinds.

    ``same``: compressed P2PKH spends on both chains (visible to both
    comparators). ``split``: compressed on one chain, uncompressed on the
    other (keys match, hashes do not). ``passive``: one never-revealed key
    receiving on both chains (hashes match, no key is ever seen).
    """
    rng = random.Random(seed)
    clock = _Clock(rng)
    a, b = chains
    plan = Plan(seed, tuple(sorted(chains)))
    C, U = Encoding.COMPRESSED, Encoding.UNCOMPRESSED
    for _ in range(n_same):
        d, k = _new_key(rng)
        plan.plants.append(Plant(d, k, "same", [Use(a, "active", "P2PKH", C, clock()),
                                                Use(b, "active", "P2PKH", C, clock())]))
    for _ in range(n_split):
        d, k = _new_key(rng)
        plan.plants.append(Plant(d, k, "split", [Use(a, "active", "P2PKH", C, clock()),
                                                 Use(b, "active", "P2PKH", U, clock())]))
    for _ in range(n_passive):
        d, k = _new_key(rng)
        plan.plants.append(Plant(d, k, "passive", [Use(a, "passive", "P2PKH", C, clock()),
                                                   Use(b, "passive", "P2PKH", C, clock())]))
    for _ in range(n_noise):
        d, k = _new_key(rng)
        c = rng.choice(chains)
        fmt, enc = _utxo_active_format(rng, c)
        plan.plants.append(Plant(d, k, "noise", [Use(c, "active", fmt, enc, clock())]))
    r = _Renderer(plan)
    txs = r.render()
    truth = {"seed": seed, "chains": list(plan.chains),
             "breakdown": {"both": n_same, "key_only": n_split,
                           "hash_only_revealed": 0, "hash_only_unrevealed": n_passive},
             "hash_links": n_same + n_passive, "key_links": n_same + n_split}
    return Corpus(plan, txs, truth)
