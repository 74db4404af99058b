"""Shared builders for tests."""

import random

from keyreuse import account as acct
from keyreuse.addresses import eth_payload
from keyreuse.curve import RecoverableSignature, public_key_from_private, sign

EVM = (acct.TxType.LEGACY, acct.TxType.EIP155_LEGACY, acct.TxType.ACCESS_LIST, acct.TxType.DYNAMIC_FEE)


def signed_tx(tx_type, priv: int, rng: random.Random, chain_id: int = 1, chain: str = "ETH"):
    """A transaction of ``tx_type`` signed by ``priv`` with chain-encoded v."""
    sender = eth_payload(public_key_from_private(priv))
    tx_type = acct.TxType(tx_type)
    if tx_type is acct.TxType.TRON:
        fields = {"raw_data": rng.randbytes(rng.randrange(20, 200))}
        chain = "TRX"
    else:
        fields = {"nonce": rng.randrange(2**20), "gas": 21000, "to": rng.randbytes(20),
                  "value": rng.randrange(2**64), "data": rng.randbytes(rng.randrange(4))}
        if tx_type is acct.TxType.DYNAMIC_FEE:
            fields.update(max_priority_fee_per_gas=rng.randrange(10**10), max_fee_per_gas=10**11)
        else:
            fields["gas_price"] = rng.randrange(1, 10**11)
        if tx_type is not acct.TxType.LEGACY:
            fields["chain_id"] = chain_id
        if tx_type in (acct.TxType.ACCESS_LIST, acct.TxType.DYNAMIC_FEE):
            fields["access_list"] = [(rng.randbytes(20), [rng.randbytes(32)])]
    tx = acct.AccountTx(chain, tx_type, fields, None, sender, 0, rng.randbytes(32).hex())
    sig = sign(acct.signing_hash(tx), priv)
    cid = chain_id if tx_type is acct.TxType.EIP155_LEGACY else None
    tx.signature = RecoverableSignature(sig.r, sig.s, acct.encode_v(sig.v_raw, tx_type, cid))
    return tx


def random_cluster_instance(rng: random.Random, n_addr: int, n_edges: int, n_keys: int):
    """Co-spend groups and key -> address lists over ``a0..a{n-1}``.

    Group sizes are drawn so the implied edge count (size - 1 per group,
    plus key links) stays within ``n_edges``.
    """
    addrs = [f"a{i:05d}" for i in range(n_addr)]
    groups = []
    budget = n_edges - n_keys
    while budget > 0:
        size = min(rng.randint(2, 5), budget + 1)
        groups.append(rng.sample(addrs, size))
        budget -= size - 1
    key_addrs = {f"k{j}": rng.sample(addrs, rng.randint(1, 2)) + ["ghost%d" % j]
                 for j in range(n_keys)}
    return addrs, groups, key_addrs


def components(nodes, edges):
    """Connected components by breadth-first search; node -> min member."""
    adj = {n: [] for n in nodes}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    label = {}
    for start in sorted(adj):
        if start in label:
            continue
        seen = [start]
        label[start] = start
        i = 0
        while i < len(seen):
            for m in adj[seen[i]]:
                if m not in label:
                    label[m] = start
                    seen.append(m)
            i += 1
    return label
