"""Cross-chain public key reuse analysis for UTXO and account blockchains."""

__version__ = "0.1.0"

from .curve import Encoding, PublicKey, parse_public_key  # noqa: E402,F401
from .errors import KeyReuseError  # noqa: E402,F401

__all__ = ["Encoding", "KeyReuseError", "PublicKey", "parse_public_key", "__version__"]
