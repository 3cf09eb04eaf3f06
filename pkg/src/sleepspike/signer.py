"""Hashing, deterministic nonces, ECDSA sign/verify, and nonce search.

The nonce is derived per RFC 6979 (HMAC-DRBG construction over
SHA-256) unless an explicit nonce is injected for scenario building.
Deterministic derivation means the same (key, message) pair always
yields the same nonce, hence the same signature and the same leakage
trace; that repetition is what makes single-point spike measurement
viable, and what the experiment plans exploit.

Signing routes the [k]G multiplication through one of the instrumented
engines when asked to, so a probe can capture the activity trace of
exactly the computation that produced the signature.
"""

import hashlib
import hmac as _hmac
from dataclasses import dataclass

from . import engines
from .curves import (
    AffinePoint,
    CurveParams,
    affine_add,
    get_curve,
    is_on_curve,
    mod_inv,
    scalar_mul,
)

__all__ = [
    "Signature",
    "PrivateKey",
    "PublicKey",
    "NoncePolicy",
    "SigningError",
    "sha256",
    "hmac_sha256",
    "message_hash",
    "bits2int",
    "rfc6979_nonce",
    "generate_key",
    "public_key",
    "ecdsa_sign",
    "ecdsa_verify",
    "recover_key_known_nonce",
    "leading_zero_bits",
    "trailing_zero_bits",
    "nonce_zero_bits",
    "search_messages",
    "SearchResult",
    "FoundMessage",
    "write_key_file",
    "read_key_file",
    "signature_to_hex",
    "signature_from_hex",
]


class SigningError(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    r: int
    s: int


@dataclass(frozen=True)
class PrivateKey:
    d: int


@dataclass(frozen=True)
class PublicKey:
    Q: AffinePoint


@dataclass(frozen=True)
class NoncePolicy:
    mode: str
    k: int | None = None

    @classmethod
    def deterministic(cls) -> "NoncePolicy":
        return cls("rfc6979")

    @classmethod
    def injected(cls, k: int) -> "NoncePolicy":
        return cls("injected", k)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def hmac_sha256(key: bytes, msg: bytes) -> bytes:
    return _hmac.new(key, msg, hashlib.sha256).digest()


def bits2int(data: bytes, qlen: int) -> int:
    """Leftmost qlen bits of data as an integer (RFC 6979 section 2.3.2)."""
    x = int.from_bytes(data, "big")
    blen = len(data) * 8
    if blen > qlen:
        x >>= blen - qlen
    return x


def message_hash(message: bytes, curve: CurveParams) -> int:
    """H(m) truncated to the order's bit length and reduced mod n."""
    return bits2int(sha256(message), curve.bits) % curve.n


def _int2octets(x: int, curve: CurveParams) -> bytes:
    return x.to_bytes((curve.bits + 7) // 8, "big")


def _bits2octets(data: bytes, curve: CurveParams) -> bytes:
    z1 = bits2int(data, curve.bits)
    z2 = z1 - curve.n
    if z2 < 0:
        z2 = z1
    return _int2octets(z2, curve)


def _rfc6979_candidates(d: int, h1: bytes, curve: CurveParams):
    """Yield successive nonce candidates per RFC 6979 section 3.2.

    The first yielded value in [1, n-1] is the standard nonce; further
    values implement the retry path used when r or s degenerates.
    """
    seed = _int2octets(d, curve) + _bits2octets(h1, curve)
    v = b"\x01" * 32
    key = b"\x00" * 32
    key = hmac_sha256(key, v + b"\x00" + seed)
    v = hmac_sha256(key, v)
    key = hmac_sha256(key, v + b"\x01" + seed)
    v = hmac_sha256(key, v)
    rlen = (curve.bits + 7) // 8
    while True:
        t = b""
        while len(t) < rlen:
            v = hmac_sha256(key, v)
            t += v
        k = bits2int(t[:rlen], curve.bits)
        if 1 <= k < curve.n:
            yield k
        key = hmac_sha256(key, v + b"\x00")
        v = hmac_sha256(key, v)


def rfc6979_nonce(priv: PrivateKey, message: bytes, curve: CurveParams) -> int:
    """Deterministic nonce for (key, message) using SHA-256 everywhere."""
    return next(_rfc6979_candidates(priv.d, sha256(message), curve))


def generate_key(curve: CurveParams, rng) -> tuple[PrivateKey, PublicKey]:
    d = rng.randrange(1, curve.n)
    priv = PrivateKey(d)
    return priv, public_key(priv, curve)


def public_key(priv: PrivateKey, curve: CurveParams) -> PublicKey:
    if not 1 <= priv.d < curve.n:
        raise SigningError("private key out of range")
    return PublicKey(scalar_mul(priv.d, curve.G, curve))


def ecdsa_sign(
    message: bytes,
    priv: PrivateKey,
    curve: CurveParams,
    policy: NoncePolicy | None = None,
    engine: str | None = None,
    probe: engines.ActivityProbe | None = None,
) -> Signature:
    """Sign message; returns (r, s) with r = x([k]G) mod n.

    With the deterministic policy a degenerate r or s triggers the RFC
    retry loop (fresh derived k); an injected nonce that degenerates is
    an error since there is nothing to retry with.
    """
    if policy is None:
        policy = NoncePolicy.deterministic()
    if not 1 <= priv.d < curve.n:
        raise SigningError("private key out of range")
    h = message_hash(message, curve)
    n = curve.n

    def attempt(k: int) -> Signature | None:
        if engine is None:
            R = scalar_mul(k, curve.G, curve)
        else:
            R = engines.run_engine(engine, k, curve, probe)
        if R.infinity:
            return None
        r = R.x % n
        if r == 0:
            return None
        s = mod_inv(k, n) * (h + priv.d * r) % n
        if s == 0:
            return None
        return Signature(r, s)

    if policy.mode == "injected":
        k = policy.k
        if k is None or not 1 <= k < n:
            raise SigningError("injected nonce must be in [1, n-1]")
        sig = attempt(k)
        if sig is None:
            raise SigningError("injected nonce produced a degenerate signature")
        return sig
    if policy.mode != "rfc6979":
        raise SigningError(f"unknown nonce policy {policy.mode!r}")
    for k in _rfc6979_candidates(priv.d, sha256(message), curve):
        sig = attempt(k)
        if sig is not None:
            return sig
    raise AssertionError("unreachable")


def ecdsa_verify(message: bytes, sig: Signature, pub: PublicKey, curve: CurveParams) -> bool:
    n = curve.n
    if not (1 <= sig.r < n and 1 <= sig.s < n):
        return False
    Q = pub.Q
    if Q.infinity or not is_on_curve(Q, curve):
        return False
    h = message_hash(message, curve)
    w = mod_inv(sig.s, n)
    u1 = h * w % n
    u2 = sig.r * w % n
    R = affine_add(scalar_mul(u1, curve.G, curve), scalar_mul(u2, Q, curve), curve)
    if R.infinity:
        return False
    return R.x % n == sig.r


def recover_key_known_nonce(sig: Signature, h: int, k: int, curve: CurveParams) -> int:
    """Private key from one signature with known nonce: (s*k - h) / r."""
    n = curve.n
    if sig.r % n == 0:
        raise SigningError("r is not invertible")
    d = (sig.s * k - h) * mod_inv(sig.r, n) % n
    if d == 0:
        raise SigningError("degenerate recovery: key would be zero")
    return d


def leading_zero_bits(k: int, bits: int) -> int:
    """Zero bits at the top of the `bits`-wide frame of k."""
    if k == 0:
        return bits
    return bits - k.bit_length()


def trailing_zero_bits(k: int, bits: int) -> int:
    if k == 0:
        return bits
    return (k & -k).bit_length() - 1


def nonce_zero_bits(k: int, curve: CurveParams, end: str) -> int:
    if end == "leading":
        return leading_zero_bits(k, curve.bits)
    if end == "trailing":
        return trailing_zero_bits(k, curve.bits)
    raise SigningError(f"unknown end {end!r} (use 'leading' or 'trailing')")


@dataclass(frozen=True)
class FoundMessage:
    message: bytes
    nonce: int
    zero_bits: int


@dataclass
class SearchResult:
    found: list[FoundMessage]
    draws: int
    complete: bool


def search_messages(
    target_zero_bits: int,
    count: int,
    end: str,
    priv: PrivateKey,
    curve: CurveParams,
    rng,
    budget: int | None = None,
) -> SearchResult:
    """Random messages whose derived nonce has >= target zero bits.

    Expected cost is about count * 2^target draws, so the default
    budget is 32 * count * 2^target; an exhausted budget returns the
    partial result with complete = False so callers can fall back to
    injected nonces.
    """
    if target_zero_bits < 0 or count < 1:
        raise SigningError("target_zero_bits must be >= 0 and count >= 1")
    if budget is None:
        if target_zero_bits > 40:
            budget = 1 << 24  # plainly infeasible targets get a token budget
        else:
            budget = 32 * count * (1 << target_zero_bits)
    found: list[FoundMessage] = []
    draws = 0
    while len(found) < count and draws < budget:
        message = rng.getrandbits(128).to_bytes(16, "big")
        draws += 1
        k = rfc6979_nonce(priv, message, curve)
        zb = nonce_zero_bits(k, curve, end)
        if zb >= target_zero_bits:
            found.append(FoundMessage(message, k, zb))
    return SearchResult(found, draws, len(found) >= count)


# file and hex interfaces


def write_key_file(path, priv: PrivateKey, curve: CurveParams) -> None:
    from ._fsio import atomic_write_text

    atomic_write_text(path, f"{curve.name}\n{format(priv.d, f'0{(curve.bits + 3) // 4}x')}\n")


def read_key_file(path) -> tuple[PrivateKey, CurveParams]:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) != 2:
        raise SigningError(f"{path}: expected curve name line plus hex key line")
    curve = get_curve(lines[0])
    d = int(lines[1], 16)
    if not 1 <= d < curve.n:
        raise SigningError(f"{path}: key out of range for {curve.name}")
    return PrivateKey(d), curve


def signature_to_hex(sig: Signature, curve: CurveParams) -> str:
    w = (curve.bits + 3) // 4
    return format(sig.r, f"0{w}x") + format(sig.s, f"0{w}x")


def signature_from_hex(s: str, curve: CurveParams) -> Signature:
    s = s.strip().lower()
    w = (curve.bits + 3) // 4
    if len(s) != 2 * w:
        raise SigningError("bad signature hex length")
    return Signature(int(s[:w], 16), int(s[w:], 16))
