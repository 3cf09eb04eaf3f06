"""Prime-field short-Weierstrass curves and group operations.

Scalars and field elements are plain Python integers. Points come in
two shapes: ``AffinePoint`` (with an explicit infinity flag) and
``JacobianPoint`` (X, Y, Z with x = X/Z^2, y = Y/Z^3). The identity has
two encodings on purpose: affine infinity, and the all-zero Jacobian
triple. The engines in :mod:`sleepspike.engines` rely on the all-zero
triple surviving doubling and addition bit-exactly, which the kernels
guarantee.

Registered curves: ``toy16`` (order 32831, generated by
:func:`find_toy_curve` and frozen here so tests can re-derive it),
``secp128r1`` and ``p256`` (constants from the public standards; see
:func:`validate_curve` for the self-certification argument).
"""

from dataclasses import dataclass
from functools import lru_cache

from ._backend import jac_add, jac_add_mixed, jac_double


class CurveError(ValueError):
    """Invalid curve parameters, point encodings, or group inputs."""


@dataclass(frozen=True)
class AffinePoint:
    x: int
    y: int
    infinity: bool = False


INFINITY = AffinePoint(0, 0, True)


@dataclass(frozen=True)
class JacobianPoint:
    X: int
    Y: int
    Z: int

    def is_identity(self) -> bool:
        return self.Z == 0


JAC_ZERO = JacobianPoint(0, 0, 0)


@dataclass(frozen=True)
class CurveParams:
    name: str
    p: int
    a: int
    b: int
    gx: int
    gy: int
    n: int

    @property
    def bits(self) -> int:
        """Bit length of the group order (the nonce frame width)."""
        return self.n.bit_length()

    @property
    def G(self) -> AffinePoint:
        return AffinePoint(self.gx, self.gy)


def mod_inv(a: int, m: int) -> int:
    """Inverse of a modulo m; raises CurveError if gcd(a, m) != 1."""
    try:
        return pow(a, -1, m)
    except ValueError as exc:
        raise CurveError(f"not invertible modulo {m}") from exc


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for the sizes used here (< 2^64 proven,
    larger inputs get a fixed strong-base screen)."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_on_curve(P: AffinePoint, curve: CurveParams) -> bool:
    if P.infinity:
        return True
    if not (0 <= P.x < curve.p and 0 <= P.y < curve.p):
        return False
    return (P.y * P.y - (P.x * P.x * P.x + curve.a * P.x + curve.b)) % curve.p == 0


def jacobian(P: AffinePoint) -> JacobianPoint:
    return JAC_ZERO if P.infinity else JacobianPoint(P.x, P.y, 1)


def point_double(P: JacobianPoint, curve: CurveParams) -> JacobianPoint:
    return JacobianPoint(*jac_double(P.X, P.Y, P.Z, curve.p, curve.a))


def point_add(P: JacobianPoint, Q: JacobianPoint, curve: CurveParams) -> JacobianPoint:
    return JacobianPoint(*jac_add(P.X, P.Y, P.Z, Q.X, Q.Y, Q.Z, curve.p, curve.a))


def mixed_add(P: JacobianPoint, Q: AffinePoint, curve: CurveParams) -> JacobianPoint:
    if Q.infinity:
        raise CurveError("mixed_add requires a finite affine operand")
    return JacobianPoint(*jac_add_mixed(P.X, P.Y, P.Z, Q.x, Q.y, curve.p, curve.a))


def to_affine(P: JacobianPoint, curve: CurveParams) -> AffinePoint:
    if P.Z == 0:
        return INFINITY
    p = curve.p
    zinv = mod_inv(P.Z, p)
    zinv2 = zinv * zinv % p
    return AffinePoint(P.X * zinv2 % p, P.Y * zinv2 * zinv % p)


def negate(P: AffinePoint, curve: CurveParams) -> AffinePoint:
    if P.infinity:
        return INFINITY
    return AffinePoint(P.x, (curve.p - P.y) % curve.p)


def affine_add(P: AffinePoint, Q: AffinePoint, curve: CurveParams) -> AffinePoint:
    """Textbook affine chord-and-tangent addition (reference oracle)."""
    if P.infinity:
        return Q
    if Q.infinity:
        return P
    p = curve.p
    if P.x == Q.x:
        if (P.y + Q.y) % p == 0:
            return INFINITY
        lam = (3 * P.x * P.x + curve.a) * mod_inv(2 * P.y, p) % p
    else:
        lam = (Q.y - P.y) * mod_inv(Q.x - P.x, p) % p
    x3 = (lam * lam - P.x - Q.x) % p
    y3 = (lam * (P.x - x3) - P.y) % p
    return AffinePoint(x3, y3)


def scalar_mul_naive(k: int, P: AffinePoint, curve: CurveParams) -> AffinePoint:
    """Left-to-right double-and-add using only affine formulas.

    Deliberately independent of the Jacobian kernels: this is the
    correctness oracle for the constant-shape engines.
    """
    if k < 0:
        raise CurveError("negative scalar")
    R = INFINITY
    for bit in bin(k)[2:] if k else "":
        R = affine_add(R, R, curve)
        if bit == "1":
            R = affine_add(R, P, curve)
    return R


def scalar_mul(k: int, P: AffinePoint, curve: CurveParams) -> AffinePoint:
    """Fast (non-instrumented) Jacobian double-and-add for plumbing use."""
    if k < 0:
        raise CurveError("negative scalar")
    if P.infinity or k == 0:
        return INFINITY
    p, a = curve.p, curve.a
    X, Y, Z = 0, 0, 0
    for bit in bin(k)[2:]:
        X, Y, Z = jac_double(X, Y, Z, p, a)
        if bit == "1":
            X, Y, Z = jac_add_mixed(X, Y, Z, P.x, P.y, p, a)
    return to_affine(JacobianPoint(X, Y, Z), curve)


def validate_curve(curve: CurveParams) -> None:
    """Full parameter check; raises CurveError on any failure.

    Besides the usual sanity checks this certifies prime group order
    with cofactor 1 without trusting any published cardinality: when n
    is prime, n*G is the identity, and n lies in the Hasse interval
    [p + 1 - 2*sqrt(p), p + 1 + 2*sqrt(p)], then <G> has order exactly n
    and n must equal the full curve cardinality.
    """
    p, a, b, n = curve.p, curve.a, curve.b, curve.n
    if not is_prime(p):
        raise CurveError(f"{curve.name}: p is not prime")
    if not (0 <= a < p and 0 <= b < p):
        raise CurveError(f"{curve.name}: coefficients out of range")
    if (4 * a * a * a + 27 * b * b) % p == 0:
        raise CurveError(f"{curve.name}: singular curve")
    if not is_prime(n):
        raise CurveError(f"{curve.name}: n is not prime")
    if not is_on_curve(curve.G, curve) or curve.G.infinity:
        raise CurveError(f"{curve.name}: generator not on curve")
    import math

    if abs(n - (p + 1)) > 2 * math.isqrt(p):
        raise CurveError(f"{curve.name}: n violates the Hasse bound")
    if not scalar_mul(n, curve.G, curve).infinity:
        raise CurveError(f"{curve.name}: n*G is not the identity")


# Generated with find_toy_curve(32749); order 32831 is prime and small
# enough for exhaustive [1, n-1] engine sweeps.
_TOY16 = CurveParams(name="toy16", p=32771, a=1, b=26, gx=2, gy=6, n=32831)

_SECP128R1 = CurveParams(
    name="secp128r1",
    p=0xFFFFFFFDFFFFFFFFFFFFFFFFFFFFFFFF,
    a=0xFFFFFFFDFFFFFFFFFFFFFFFFFFFFFFFC,
    b=0xE87579C11079F43DD824993C2CEE5ED3,
    gx=0x161FF7528B899B2D0C28607CA52C5B86,
    gy=0xCF5AC8395BAFEB13C02DA292DDED7A83,
    n=0xFFFFFFFE0000000075A30D1B9038A115,
)

_P256 = CurveParams(
    name="p256",
    p=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF,
    a=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFC,
    b=0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B,
    gx=0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
    gy=0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
    n=0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
)

_REGISTRY = {c.name: c for c in (_TOY16, _SECP128R1, _P256)}
_ALIASES = {"secp256r1": "p256", "nistp256": "p256"}


@lru_cache(maxsize=None)
def get_curve(name: str) -> CurveParams:
    key = _ALIASES.get(name.lower(), name.lower())
    if key not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY))
        raise CurveError(f"unknown curve {name!r} (known: {known})")
    curve = _REGISTRY[key]
    validate_curve(curve)
    return curve


def list_curves() -> list[str]:
    return sorted(_REGISTRY)


def find_toy_curve(p_start: int = 32749, max_coeff: int = 80) -> CurveParams:
    """Search for a small curve with prime order by brute-force counting.

    Scans primes p >= p_start with p % 4 == 3, coefficients a, b up to
    max_coeff, counts points via the quadratic character, and returns
    the first curve whose order is prime, with the smallest-x generator.
    """
    p = p_start
    while True:
        while not (is_prime(p) and p % 4 == 3):
            p += 1
        for a in range(1, max_coeff):
            for b in range(1, max_coeff):
                if (4 * a * a * a + 27 * b * b) % p == 0:
                    continue
                order = p + 1
                for x in range(p):
                    rhs = (x * x * x + a * x + b) % p
                    if rhs == 0:
                        continue
                    order += 1 if pow(rhs, (p - 1) // 2, p) == 1 else -1
                if not is_prime(order):
                    continue
                for x in range(p):
                    rhs = (x * x * x + a * x + b) % p
                    if rhs and pow(rhs, (p - 1) // 2, p) == 1:
                        y = pow(rhs, (p + 1) // 4, p)
                        curve = CurveParams("toy", p, a, b, x, min(y, p - y), order)
                        validate_curve(curve)
                        return curve
        p += 1


# hex encodings: lowercase, fixed width derived from the bit length


def int_to_hex(x: int, bits: int) -> str:
    if x < 0 or x.bit_length() > bits:
        raise CurveError(f"value does not fit in {bits} bits")
    return format(x, f"0{(bits + 3) // 4}x")


def int_from_hex(s: str) -> int:
    try:
        return int(s, 16)
    except ValueError as exc:
        raise CurveError(f"bad hex value: {s!r}") from exc


def scalar_to_hex(k: int, curve: CurveParams) -> str:
    return int_to_hex(k, curve.bits)


def point_to_hex(P: AffinePoint, curve: CurveParams) -> str:
    """Uncompressed encoding 04 || x || y, fixed field width."""
    if P.infinity:
        raise CurveError("cannot encode the point at infinity")
    w = curve.p.bit_length()
    return "04" + int_to_hex(P.x, w) + int_to_hex(P.y, w)


def point_from_hex(s: str, curve: CurveParams) -> AffinePoint:
    s = s.strip().lower()
    w = (curve.p.bit_length() + 3) // 4
    if len(s) != 2 + 2 * w or not s.startswith("04"):
        raise CurveError("bad uncompressed point encoding")
    P = AffinePoint(int_from_hex(s[2 : 2 + w]), int_from_hex(s[2 + w :]))
    if not is_on_curve(P, curve):
        raise CurveError("point is not on the curve")
    return P
