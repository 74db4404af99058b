"""secp256k1 arithmetic, public key parsing and ECDSA public key recovery.

Points are plain ``(x, y)`` tuples of ints in affine form, ``None`` is the
point at infinity. Internally scalar multiplication runs in Jacobian
coordinates; nothing here is constant time.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import random
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

from .errors import (
    InvalidPrefix,
    InvalidSignatureScalars,
    NotOnCurve,
    PointAtInfinity,
    UnrecoverablePoint,
    WrongLength,
)

Point = Optional[Tuple[int, int]]


@dataclass(frozen=True)
class CurveParams:
    p: int
    n: int
    h: int
    b: int
    G: Tuple[int, int]


P = 2**256 - 2**32 - 2**9 - 2**8 - 2**7 - 2**6 - 2**4 - 1
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8
B = 7
G = (GX, GY)

SECP256K1 = CurveParams(p=P, n=N, h=1, b=B, G=G)

_SQRT_EXP = (P + 1) // 4  # p % 4 == 3


class Encoding(enum.Enum):
    COMPRESSED = "compressed"
    UNCOMPRESSED = "uncompressed"


@dataclass(frozen=True)
class PublicKey:
    """A validated curve point.

    Equality and hashing only look at the coordinates; ``encoding`` records
    how the key was observed on chain.
    """

    x: int
    y: int
    encoding: Encoding = field(default=Encoding.COMPRESSED, compare=False)

    def serialize(self, encoding: Optional[Encoding] = None) -> bytes:
        enc = encoding or self.encoding
        xb = self.x.to_bytes(32, "big")
        if enc is Encoding.COMPRESSED:
            return bytes([2 + (self.y & 1)]) + xb
        return b"\x04" + xb + self.y.to_bytes(32, "big")

    @property
    def compressed(self) -> bytes:
        return self.serialize(Encoding.COMPRESSED)

    @property
    def uncompressed(self) -> bytes:
        return self.serialize(Encoding.UNCOMPRESSED)

    @property
    def point(self) -> Tuple[int, int]:
        return (self.x, self.y)

    def with_encoding(self, encoding: Encoding) -> "PublicKey":
        return PublicKey(self.x, self.y, encoding)

    def hex(self) -> str:
        """Canonical text form (compressed), used as the join key in files."""
        return self.compressed.hex()

    def __repr__(self) -> str:
        return f"PublicKey({self.hex()}, {self.encoding.value})"


@dataclass(frozen=True)
class RecoverableSignature:
    r: int
    s: int
    v_raw: int = 0


# -- field / group helpers ---------------------------------------------------

def is_valid_point(x: int, y: int, paranoid: bool = False) -> bool:
    """True iff (x, y) is a finite point of secp256k1.

    With cofactor 1 the curve equation already implies subgroup membership;
    ``paranoid`` additionally checks n*Q == O.
    """
    if not (0 <= x < P and 0 <= y < P):
        return False
    if (y * y - x * x * x - B) % P:
        return False
    if paranoid and point_mul(N, (x, y)) is not None:
        return False
    return True


def lift_x(x: int, odd: bool) -> Optional[Tuple[int, int]]:
    """Point with the given x and y parity, or None if x is not on the curve."""
    if not 0 <= x < P:
        return None
    alpha = (pow(x, 3, P) + B) % P
    y = pow(alpha, _SQRT_EXP, P)
    if y * y % P != alpha:
        return None
    if (y & 1) != odd:
        y = P - y
    return (x, y)


def parse_public_key(data: bytes, paranoid: bool = False) -> PublicKey:
    data = bytes(data)
    if not data:
        raise WrongLength("empty public key")
    prefix = data[0]
    if prefix in (2, 3):
        if len(data) != 33:
            raise WrongLength(f"compressed key must be 33 bytes, got {len(data)}")
        x = int.from_bytes(data[1:], "big")
        pt = lift_x(x, prefix == 3)
        if pt is None:
            raise NotOnCurve("x coordinate has no curve point")
        if paranoid and not is_valid_point(*pt, paranoid=True):
            raise NotOnCurve("point outside prime-order subgroup")
        return PublicKey(pt[0], pt[1], Encoding.COMPRESSED)
    if prefix == 4:
        if len(data) != 65:
            raise WrongLength(f"uncompressed key must be 65 bytes, got {len(data)}")
        x = int.from_bytes(data[1:33], "big")
        y = int.from_bytes(data[33:], "big")
        if not is_valid_point(x, y, paranoid=paranoid):
            raise NotOnCurve("point does not satisfy y^2 = x^3 + 7")
        return PublicKey(x, y, Encoding.UNCOMPRESSED)
    if prefix == 0 and len(data) == 1:
        raise PointAtInfinity("0x00 encodes the point at infinity")
    raise InvalidPrefix(f"invalid public key prefix 0x{prefix:02x}")


def try_parse_public_key(data: bytes) -> Optional[PublicKey]:
    try:
        return parse_public_key(data)
    except (InvalidPrefix, WrongLength, NotOnCurve, PointAtInfinity):
        return None


def looks_like_key(data: bytes) -> bool:
    """Cheap shape check (length and prefix) before attempting a parse."""
    n = len(data)
    return (n == 33 and data[0] in (2, 3)) or (n == 65 and data[0] == 4)


def key_from_point(pt: Point, encoding: Encoding = Encoding.COMPRESSED) -> PublicKey:
    if pt is None:
        raise PointAtInfinity("point at infinity is not a public key")
    return PublicKey(pt[0], pt[1], encoding)


# -- Jacobian arithmetic -----------------------------------------------------

def _jdouble(X, Y, Z):
    if Y == 0:
        return (0, 1, 0)
    YY = Y * Y % P
    S = 4 * X * YY % P
    M = 3 * X * X % P
    X3 = (M * M - 2 * S) % P
    Y3 = (M * (S - X3) - 8 * YY * YY) % P
    Z3 = 2 * Y * Z % P
    return (X3, Y3, Z3)


def _jadd_affine(X1, Y1, Z1, x2, y2):
    if Z1 == 0:
        return (x2, y2, 1)
    Z1Z1 = Z1 * Z1 % P
    U2 = x2 * Z1Z1 % P
    S2 = y2 * Z1 * Z1Z1 % P
    H = (U2 - X1) % P
    R = (S2 - Y1) % P
    if H == 0:
        if R == 0:
            return _jdouble(X1, Y1, Z1)
        return (0, 1, 0)
    HH = H * H % P
    HHH = H * HH % P
    V = X1 * HH % P
    X3 = (R * R - HHH - 2 * V) % P
    Y3 = (R * (V - X3) - Y1 * HHH) % P
    Z3 = Z1 * H % P
    return (X3, Y3, Z3)


def _to_affine(X, Y, Z) -> Point:
    if Z == 0:
        return None
    zi = pow(Z, -1, P)
    zi2 = zi * zi % P
    return (X * zi2 % P, Y * zi2 * zi % P)


def batch_inverse(values: List[int], mod: int = P) -> List[int]:
    """Montgomery's trick: all inverses for the price of one."""
    n = len(values)
    if n == 0:
        return []
    prefix = [0] * n
    acc = 1
    for i, v in enumerate(values):
        prefix[i] = acc
        acc = acc * v % mod
    inv = pow(acc, -1, mod)
    out = [0] * n
    for i in range(n - 1, -1, -1):
        out[i] = prefix[i] * inv % mod
        inv = inv * values[i] % mod
    return out


def _batch_to_affine(jpoints) -> List[Point]:
    finite = [i for i, q in enumerate(jpoints) if q[2] != 0]
    invs = batch_inverse([jpoints[i][2] for i in finite])
    out: List[Point] = [None] * len(jpoints)
    for i, zi in zip(finite, invs):
        X, Y, _ = jpoints[i]
        zi2 = zi * zi % P
        out[i] = (X * zi2 % P, Y * zi2 * zi % P)
    return out


def point_add(a: Point, b: Point) -> Point:
    if a is None:
        return b
    if b is None:
        return a
    return _to_affine(*_jadd_affine(a[0], a[1], 1, b[0], b[1]))


def point_neg(a: Point) -> Point:
    if a is None:
        return None
    return (a[0], (P - a[1]) % P)


def batch_add(pairs: Iterable[Tuple[Tuple[int, int], Tuple[int, int]]]) -> List[Point]:
    """Affine additions a+b for many independent pairs, one shared inversion.

    Pairs with equal x (doubling or inverse points) fall back to the generic
    path.
    """
    pairs = list(pairs)
    dens = []
    special = []
    for i, (a, b) in enumerate(pairs):
        d = (b[0] - a[0]) % P
        if d == 0:
            special.append(i)
            d = 1
        dens.append(d)
    invs = batch_inverse(dens)
    out: List[Point] = [None] * len(pairs)
    for i, ((x1, y1), (x2, y2)) in enumerate(pairs):
        lam = (y2 - y1) * invs[i] % P
        x3 = (lam * lam - x1 - x2) % P
        out[i] = (x3, (lam * (x1 - x3) - y1) % P)
    for i in special:
        out[i] = point_add(*pairs[i])
    return out


def _wnaf(k: int, w: int) -> List[int]:
    digits = []
    half = 1 << (w - 1)
    full = 1 << w
    while k:
        if k & 1:
            d = k % full
            if d >= half:
                d -= full
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def point_mul(k: int, pt: Point) -> Point:
    """Variable-base scalar multiplication (wNAF, width 5)."""
    if pt is None:
        return None
    k %= N
    if k == 0:
        return None
    if pt == G:
        return base_mul(k)
    w = 5
    # odd multiples P, 3P, ..., 15P
    two_p = _jdouble(pt[0], pt[1], 1)
    two_pa = _to_affine(*two_p)
    jtab = [(pt[0], pt[1], 1)]
    for _ in range((1 << (w - 2)) - 1):
        prev = jtab[-1]
        if two_pa is None:
            jtab.append((0, 1, 0))
        else:
            jtab.append(_jadd_affine(*prev, *two_pa))
    table = _batch_to_affine(jtab)
    acc = (0, 1, 0)
    for d in reversed(_wnaf(k, w)):
        acc = _jdouble(*acc)
        if d > 0:
            q = table[d >> 1]
            if q is not None:
                acc = _jadd_affine(*acc, q[0], q[1])
        elif d < 0:
            q = table[(-d) >> 1]
            if q is not None:
                acc = _jadd_affine(*acc, q[0], P - q[1])
    return _to_affine(*acc)


# Fixed-base table for G: _G_TABLE[i][j] = j * 256**i * G, j in 1..255.
_G_TABLE: Optional[List[List[Tuple[int, int]]]] = None


def _build_g_table() -> List[List[Tuple[int, int]]]:
    rows = []
    base: Tuple[int, int] = G
    for _ in range(32):
        jrow = [(base[0], base[1], 1)]
        for _ in range(254):
            jrow.append(_jadd_affine(*jrow[-1], base[0], base[1]))
        row = _batch_to_affine(jrow)
        rows.append(row)
        nxt = _jadd_affine(*jrow[-1], base[0], base[1])  # 256 * base
        base = _to_affine(*nxt)
    return rows


def base_mul(k: int) -> Point:
    """k*G using a byte-windowed precomputed table."""
    global _G_TABLE
    k %= N
    if k == 0:
        return None
    if _G_TABLE is None:
        _G_TABLE = _build_g_table()
    acc = (0, 1, 0)
    i = 0
    while k:
        b = k & 0xFF
        if b:
            q = _G_TABLE[i][b - 1]
            acc = _jadd_affine(*acc, q[0], q[1])
        k >>= 8
        i += 1
    return _to_affine(*acc)


def _lincomb_g(a: int, b: int, pt: Tuple[int, int]) -> Point:
    """a*G + b*pt."""
    return point_add(base_mul(a), point_mul(b, pt))


# -- ECDSA -------------------------------------------------------------------

def public_key_from_private(d: int, encoding: Encoding = Encoding.COMPRESSED) -> PublicKey:
    if not 1 <= d < N:
        raise ValueError("private key out of range")
    return key_from_point(base_mul(d), encoding)


def _rfc6979_nonce(d: int, h: bytes) -> Iterable[int]:
    x = d.to_bytes(32, "big")
    h1 = (int.from_bytes(h, "big") % N).to_bytes(32, "big")
    V = b"\x01" * 32
    K = b"\x00" * 32
    K = hmac.new(K, V + b"\x00" + x + h1, hashlib.sha256).digest()
    V = hmac.new(K, V, hashlib.sha256).digest()
    K = hmac.new(K, V + b"\x01" + x + h1, hashlib.sha256).digest()
    V = hmac.new(K, V, hashlib.sha256).digest()
    while True:
        V = hmac.new(K, V, hashlib.sha256).digest()
        k = int.from_bytes(V, "big")
        if 1 <= k < N:
            yield k
        K = hmac.new(K, V + b"\x00", hashlib.sha256).digest()
        V = hmac.new(K, V, hashlib.sha256).digest()


def sign(msg_hash: bytes, d: int, low_s: bool = True) -> RecoverableSignature:
    """Deterministic ECDSA signature with recovery id in ``v_raw`` (0..3).

    Only used to produce synthetic corpora and test fixtures.
    """
    if len(msg_hash) != 32:
        raise ValueError("message hash must be 32 bytes")
    e = int.from_bytes(msg_hash, "big")
    for k in _rfc6979_nonce(d, msg_hash):
        R = base_mul(k)
        r = R[0] % N
        if r == 0:
            continue
        s = pow(k, -1, N) * (e + r * d) % N
        if s == 0:
            continue
        recid = (R[1] & 1) | (2 if R[0] >= N else 0)
        if low_s and s > N // 2:
            s = N - s
            recid ^= 1
        return RecoverableSignature(r, s, recid)
    raise AssertionError("unreachable")


def verify(msg_hash: bytes, sig: RecoverableSignature, key: PublicKey) -> bool:
    r, s = sig.r, sig.s
    if not (1 <= r < N and 1 <= s < N):
        return False
    e = int.from_bytes(msg_hash, "big")
    w = pow(s, -1, N)
    R = _lincomb_g(e * w % N, r * w % N, key.point)
    return R is not None and R[0] % N == r


def recover_candidate(msg_hash: bytes, r: int, s: int, recid: int) -> PublicKey:
    """Public key for one recovery id; raises if that id has no point."""
    if not (1 <= r < N and 1 <= s < N):
        raise InvalidSignatureScalars("r and s must lie in [1, n)")
    if recid not in (0, 1, 2, 3):
        raise ValueError(f"recovery id must be 0..3, got {recid}")
    x = r + (recid >> 1) * N
    if x >= P:
        raise UnrecoverablePoint(f"x = r + n exceeds p for recovery id {recid}")
    R = lift_x(x, bool(recid & 1))
    if R is None:
        raise UnrecoverablePoint(f"no curve point with x = r for recovery id {recid}")
    e = int.from_bytes(msg_hash, "big") % N
    rinv = pow(r, -1, N)
    Q = _lincomb_g((-e * rinv) % N, s * rinv % N, R)
    if Q is None:
        raise UnrecoverablePoint("recovered point is at infinity")
    return PublicKey(Q[0], Q[1], Encoding.UNCOMPRESSED)


def recover_public_keys(
    msg_hash: bytes, sig: RecoverableSignature, recid: Optional[int] = None
) -> List[PublicKey]:
    """Candidate signer keys.

    With ``recid`` given, returns exactly that candidate. Otherwise ids 0..3
    are tried in order and every recoverable point is returned.
    """
    if len(msg_hash) != 32:
        raise ValueError("message hash must be 32 bytes")
    if not (1 <= sig.r < N and 1 <= sig.s < N):
        raise InvalidSignatureScalars("r and s must lie in [1, n)")
    if recid is not None:
        return [recover_candidate(msg_hash, sig.r, sig.s, recid)]
    out = []
    for rid in range(4):
        if rid >= 2 and sig.r + N >= P:
            break
        try:
            out.append(recover_candidate(msg_hash, sig.r, sig.s, rid))
        except UnrecoverablePoint:
            continue
    return out


# -- validity statistics -----------------------------------------------------

def compressed_validity_rate(
    samples: int, seed: int = 0, uncompressed: bool = False
) -> float:
    """Fraction of random candidate encodings that parse as a curve point."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = random.Random(seed)
    ok = 0
    for _ in range(samples):
        if uncompressed:
            blob = b"\x04" + rng.randbytes(64)
        else:
            blob = bytes([rng.choice((2, 3))]) + rng.randbytes(32)
        if try_parse_public_key(blob) is not None:
            ok += 1
    return ok / samples


def random_public_key(rng: random.Random, encoding: Encoding = Encoding.COMPRESSED) -> PublicKey:
    """Uniformly distributed valid key without a scalar multiplication.

    Every finite curve point is a multiple of G (cofactor 1), so sampling x
    and lifting is equivalent to sampling a private key.
    """
    while True:
        pt = lift_x(rng.randrange(P), bool(rng.getrandbits(1)))
        if pt is not None:
            return PublicKey(pt[0], pt[1], encoding)
