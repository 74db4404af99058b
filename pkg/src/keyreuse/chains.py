"""Per-chain parameters for the six supported networks."""

from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Optional, Tuple

from .errors import SchemaVersionMismatch, UnknownChain

SCHEMA_VERSION = 1


class Model(enum.Enum):
    UTXO = "UTXO"
    ACCOUNT = "Account"


class ScriptType(str, enum.Enum):
    P2PK = "P2PK"
    P2MS = "P2MS"
    P2PKH = "P2PKH"
    P2SH = "P2SH"
    P2WPKH = "P2WPKH"
    P2WSH = "P2WSH"
    P2SH_P2WPKH = "P2SH_P2WPKH"
    P2SH_P2WSH = "P2SH_P2WSH"
    NON_STANDARD = "NonStandard"
    OP_RETURN = "OpReturn"


class AccountFormat(str, enum.Enum):
    ETH = "ETH_ACCOUNT"
    TRX = "TRX_ACCOUNT"


@dataclass(frozen=True)
class ChainSpec:
    chain_id: str
    model: Model
    p2pkh_version: Optional[bytes] = None
    p2sh_version: Optional[bytes] = None
    bech32_hrp: Optional[str] = None
    account_prefix: Optional[int] = None
    eip155_chain_id: Optional[int] = None
    p2pkh_aliases: Tuple[bytes, ...] = field(default=())
    p2sh_aliases: Tuple[bytes, ...] = field(default=())

    @property
    def is_utxo(self) -> bool:
        return self.model is Model.UTXO

    def __post_init__(self):
        if self.is_utxo:
            if self.p2pkh_version is None or self.p2sh_version is None:
                raise ValueError(f"{self.chain_id}: UTXO chains need p2pkh and p2sh versions")
        elif self.p2pkh_version is not None or self.p2sh_version is not None:
            raise ValueError(f"{self.chain_id}: account chains carry no script versions")


def _hex_list(value: str) -> Tuple[bytes, ...]:
    return tuple(bytes.fromhex(v) for v in value.replace(",", " ").split())


def _parse(cfg: configparser.ConfigParser) -> Dict[str, ChainSpec]:
    version = cfg.getint("registry", "schema_version", fallback=None)
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"chain registry schema {version}, expected {SCHEMA_VERSION}")
    out = {}
    for name in cfg.sections():
        if name == "registry":
            continue
        sec = cfg[name]
        opt_hex = lambda k: bytes.fromhex(sec[k]) if k in sec else None  # noqa: E731
        out[name] = ChainSpec(
            chain_id=name,
            model=Model(sec["model"]),
            p2pkh_version=opt_hex("p2pkh_version"),
            p2sh_version=opt_hex("p2sh_version"),
            bech32_hrp=sec.get("bech32_hrp"),
            account_prefix=int(sec["account_prefix"], 16) if "account_prefix" in sec else None,
            eip155_chain_id=sec.getint("eip155_chain_id") if "eip155_chain_id" in sec else None,
            p2pkh_aliases=_hex_list(sec.get("p2pkh_aliases", "")),
            p2sh_aliases=_hex_list(sec.get("p2sh_aliases", "")),
        )
    return out


class Registry:
    def __init__(self, specs: Dict[str, ChainSpec]):
        self._specs = dict(specs)

    @classmethod
    def from_file(cls, path=None) -> "Registry":
        cfg = configparser.ConfigParser()
        if path is None:
            text = resources.files("keyreuse").joinpath("data/chains.ini").read_text()
            cfg.read_string(text)
        else:
            with open(path) as fh:
                cfg.read_file(fh)
        return cls(_parse(cfg))

    def lookup(self, chain_id: str) -> ChainSpec:
        try:
            return self._specs[chain_id]
        except KeyError:
            raise UnknownChain(f"unsupported chain {chain_id!r}") from None

    def chains(self) -> Tuple[str, ...]:
        return tuple(self._specs)

    def utxo_chains(self) -> Tuple[str, ...]:
        return tuple(c for c, s in self._specs.items() if s.is_utxo)

    def __contains__(self, chain_id) -> bool:
        return chain_id in self._specs


_DEFAULT: Optional[Registry] = None


def default_registry() -> Registry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Registry.from_file()
    return _DEFAULT


def lookup(chain_id: str) -> ChainSpec:
    return default_registry().lookup(chain_id)
