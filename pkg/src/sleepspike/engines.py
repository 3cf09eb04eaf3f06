"""Constant-shape windowed scalar-multiplication engines with activity probes.

Three engines, named by mechanism rather than provenance:

* ``w4_identity_table``: fixed 4-bit window, left-to-right, lookup table
  indexed 0..15 whose slot 0 is the all-zero identity triple. While the
  processed nibbles of the scalar are zero the accumulator stays the
  all-zero triple.
* ``w4_qz_flag``: fixed 4-bit window over a 15-entry affine table with a
  flag tracking whether the accumulator is still all-zero; the first
  non-zero nibble copies the selected point in, later ones use mixed
  addition.
* ``w6_booth``: fixed 6-bit signed windows (Booth recoding, digits in
  -32..32), right-to-left over per-window affine tables of base-point
  multiples; trailing zero digits keep the accumulator all-zero, and a
  zero scalar ends as the identity.

Every engine processes a fixed number of windows for a given curve and
reports one ``IterationActivity`` per window to an optional probe:
Hamming weight of the accumulator, Hamming distance to the previous
window's accumulator, Hamming weight of the selected table entry, and
whether the window digit was zero. Weights are taken over the canonical
little-endian limb encoding of the coordinates, which for nonnegative
integers is just ``int.bit_count``.
"""

from dataclasses import dataclass
from functools import lru_cache

from ._backend import jac_add, jac_add_mixed, jac_double
from .curves import (
    AffinePoint,
    CurveError,
    CurveParams,
    JacobianPoint,
    scalar_mul,
    to_affine,
)

W4_TABLE = "w4_identity_table"
W4_QZ = "w4_qz_flag"
W6_BOOTH = "w6_booth"
ENGINES = (W4_TABLE, W4_QZ, W6_BOOTH)


@dataclass(frozen=True)
class IterationActivity:
    window_index: int
    hw_acc: int
    hd_acc: int
    hw_selected: int
    zero_window: bool


@dataclass
class ActivityTrace:
    engine: str
    records: list[IterationActivity]
    final_snapshot_hw: int


class ActivityProbe:
    """Collects per-window activity emitted by an engine run."""

    __slots__ = ("records", "final_snapshot_hw")

    def __init__(self) -> None:
        self.records: list[IterationActivity] = []
        self.final_snapshot_hw = 0

    def record(self, window_index, hw_acc, hd_acc, hw_selected, zero_window) -> None:
        self.records.append(
            IterationActivity(window_index, hw_acc, hd_acc, hw_selected, zero_window)
        )

    def trace(self, engine: str) -> ActivityTrace:
        return ActivityTrace(engine, list(self.records), self.final_snapshot_hw)


def write_trace_csv(trace: ActivityTrace, fileobj) -> None:
    fileobj.write("engine,window_index,hw_acc,hd_acc,hw_selected,zero_window\n")
    for r in trace.records:
        fileobj.write(
            f"{trace.engine},{r.window_index},{r.hw_acc},{r.hd_acc},"
            f"{r.hw_selected},{1 if r.zero_window else 0}\n"
        )


def _hw3(P) -> int:
    return P[0].bit_count() + P[1].bit_count() + P[2].bit_count()


def _hd3(P, Q) -> int:
    return (
        (P[0] ^ Q[0]).bit_count()
        + (P[1] ^ Q[1]).bit_count()
        + (P[2] ^ Q[2]).bit_count()
    )


def frame_bytes(curve: CurveParams) -> int:
    """Scalar frame in bytes: bit length of n rounded up to whole bytes."""
    return (curve.bits + 7) // 8


def window_count(engine: str, curve: CurveParams) -> int:
    if engine in (W4_TABLE, W4_QZ):
        return frame_bytes(curve) * 2
    if engine == W6_BOOTH:
        return booth_window_count(curve.bits)
    raise CurveError(f"unknown engine {engine!r}")


def _check_scalar(k: int, curve: CurveParams) -> None:
    if not 0 <= k < curve.n:
        raise CurveError("scalar out of range [0, n-1]")


# w4_identity_table


def build_w4_table(P: AffinePoint, curve: CurveParams):
    """16-entry Jacobian table: pc[0] = identity, pc[i] = [i]P."""
    p, a = curve.p, curve.a
    pc = [(0, 0, 0)] * 16
    if not P.infinity:
        pc[1] = (P.x, P.y, 1)
    for i in range(2, 16):
        if i % 2 == 0:
            h = pc[i // 2]
            pc[i] = jac_double(h[0], h[1], h[2], p, a)
        else:
            h = pc[i - 1]
            g = pc[1]
            pc[i] = jac_add(h[0], h[1], h[2], g[0], g[1], g[2], p, a)
    return pc


def mul_w4_identity_table(
    k: int, P: AffinePoint, curve: CurveParams, probe: ActivityProbe | None = None
) -> AffinePoint:
    """[k]P, fixed 4-bit windows scanned from the top nibble down.

    The scalar is framed as a little-endian byte array of frame_bytes
    length; every window performs one table add and (except the last)
    four doublings, so one iteration computes q = [16](q + [slot]P).
    """
    _check_scalar(k, curve)
    p, a = curve.p, curve.a
    kb = k.to_bytes(frame_bytes(curve), "little")
    pc = build_w4_table(P, curve)
    q = (0, 0, 0)
    prev = q
    pos = len(kb) * 8 - 4
    widx = 0
    while True:
        slot = (kb[pos >> 3] >> (pos & 7)) & 0xF
        t = pc[slot]
        q = jac_add(q[0], q[1], q[2], t[0], t[1], t[2], p, a)
        last = pos == 0
        if not last:
            for _ in range(4):
                q = jac_double(q[0], q[1], q[2], p, a)
        if probe is not None:
            probe.record(widx, _hw3(q), _hd3(prev, q), _hw3(t), slot == 0)
            prev = q
        if last:
            break
        pos -= 4
        widx += 1
    if probe is not None:
        probe.final_snapshot_hw = _hw3(q)
    return to_affine(JacobianPoint(*q), curve)


# w4_qz_flag


def build_affine_window15(P: AffinePoint, curve: CurveParams) -> tuple[AffinePoint, ...]:
    """Affine window (W[j] = [j+1]P for j = 0..14)."""
    if P.infinity:
        raise CurveError("window base point must be finite")
    pts = []
    acc = P
    for j in range(15):
        pts.append(acc)
        acc = to_affine(
            JacobianPoint(*jac_add_mixed(acc.x, acc.y, 1, P.x, P.y, curve.p, curve.a)),
            curve,
        )
    return tuple(pts)


@lru_cache(maxsize=8)
def _window15_for_base(curve: CurveParams) -> tuple[AffinePoint, ...]:
    return build_affine_window15(curve.G, curve)


def mul_w4_qz_flag(
    k_bytes: bytes,
    window: tuple[AffinePoint, ...],
    curve: CurveParams,
    probe: ActivityProbe | None = None,
) -> JacobianPoint:
    """[k]P from big-endian scalar bytes and the 15-entry window of P.

    Per nibble (high half of each byte first): four doublings, masked
    window lookup, then either a flag-guarded copy (while the
    accumulator is still the all-zero triple) or a mixed addition. The
    all-zero state therefore persists exactly while all processed
    nibbles are zero.
    """
    if len(window) != 15:
        raise CurveError("window must hold the 15 odd multiples [1]P..[15]P")
    p, a = curve.p, curve.a
    wxy = [(pt.x, pt.y) for pt in window]
    Q = (0, 0, 0)
    prev = Q
    qz = 1
    widx = 0
    for bk in k_bytes:
        for shift in (4, 0):
            for _ in range(4):
                Q = jac_double(Q[0], Q[1], Q[2], p, a)
            bits = (bk >> shift) & 0xF
            if bits:
                tx, ty = wxy[bits - 1]
                if qz:
                    Q = (tx, ty, 1)
                    qz = 0
                else:
                    Q = jac_add_mixed(Q[0], Q[1], Q[2], tx, ty, p, a)
            else:
                tx, ty = 0, 0
            if probe is not None:
                probe.record(
                    widx,
                    _hw3(Q),
                    _hd3(prev, Q),
                    tx.bit_count() + ty.bit_count(),
                    bits == 0,
                )
                prev = Q
            widx += 1
    if probe is not None:
        probe.final_snapshot_hw = _hw3(Q)
    return JacobianPoint(*Q)


# w6_booth


@dataclass(frozen=True)
class BoothDigit:
    sel: int
    sign: bool

    @property
    def value(self) -> int:
        return -self.sel if self.sign else self.sel


def _booth_recode(window7: int) -> tuple[int, int]:
    if window7 >= 64:
        sign, d = 1, 127 - window7
    else:
        sign, d = 0, window7
    return (d >> 1) + (d & 1), sign


def booth_recode_w6(window7: int) -> BoothDigit:
    """Signed digit for a 7-bit overlapping window (borrow bit lowest)."""
    if not 0 <= window7 <= 127:
        raise CurveError("booth window must be a 7-bit value")
    sel, sign = _booth_recode(window7)
    return BoothDigit(sel, bool(sign))


def booth_window_count(bits: int) -> int:
    """Fixed digit count for a `bits`-wide scalar (43 when bits = 256)."""
    return (bits + 6) // 6


def booth_digits(k: int, bits: int) -> list[BoothDigit]:
    """All signed digits of k, lowest weight first; sum(d_i * 2^(6i)) = k."""
    out = []
    for i in range(booth_window_count(bits)):
        w7 = ((k << 1) & 0x7F) if i == 0 else ((k >> (6 * i - 1)) & 0x7F)
        out.append(booth_recode_w6(w7))
    return out


@lru_cache(maxsize=8)
def _booth_tables(curve: CurveParams):
    """Per-window affine tables: tables[i][j] = [(j+1) * 2^(6i)]G."""
    p, a = curve.p, curve.a
    tables = []
    for i in range(booth_window_count(curve.bits)):
        base = scalar_mul(pow(2, 6 * i, curve.n), curve.G, curve)
        row = []
        acc = (base.x, base.y, 1)
        for j in range(32):
            pt = to_affine(JacobianPoint(*acc), curve)
            if pt.infinity:
                raise CurveError("degenerate table entry; group order too small")
            row.append((pt.x, pt.y))
            acc = jac_add_mixed(acc[0], acc[1], acc[2], base.x, base.y, p, a)
        tables.append(tuple(row))
    return tuple(tables)


def mul_w6_booth(
    k: int, curve: CurveParams, probe: ActivityProbe | None = None
) -> AffinePoint:
    """[k]G, fixed signed 6-bit windows processed low-order first.

    Base-point multiplication only: each window selects from its own
    precomputed table of multiples, negates on the digit sign, and
    mixed-adds into the accumulator. The accumulator stays the all-zero
    triple until the first non-zero digit, so k = 0 falls through to
    the identity.
    """
    _check_scalar(k, curve)
    tables = _booth_tables(curve)
    p, a = curve.p, curve.a
    acc = (0, 0, 0)
    prev = acc
    for i in range(booth_window_count(curve.bits)):
        w7 = ((k << 1) & 0x7F) if i == 0 else ((k >> (6 * i - 1)) & 0x7F)
        sel, sign = _booth_recode(w7)
        if sel:
            tx, ty = tables[i][sel - 1]
            if sign:
                ty = (p - ty) % p
            acc = jac_add_mixed(acc[0], acc[1], acc[2], tx, ty, p, a)
        else:
            tx, ty = 0, 0
        if probe is not None:
            probe.record(
                i,
                _hw3(acc),
                _hd3(prev, acc),
                tx.bit_count() + ty.bit_count(),
                sel == 0,
            )
            prev = acc
    if probe is not None:
        probe.final_snapshot_hw = _hw3(acc)
    return to_affine(JacobianPoint(*acc), curve)


# shared entry points


def run_engine(
    engine: str, k: int, curve: CurveParams, probe: ActivityProbe | None = None
) -> AffinePoint:
    """[k]G through the named engine (the signing hot path)."""
    if engine == W4_TABLE:
        return mul_w4_identity_table(k, curve.G, curve, probe)
    if engine == W4_QZ:
        _check_scalar(k, curve)
        kb = k.to_bytes(frame_bytes(curve), "big")
        Q = mul_w4_qz_flag(kb, _window15_for_base(curve), curve, probe)
        return to_affine(Q, curve)
    if engine == W6_BOOTH:
        return mul_w6_booth(k, curve, probe)
    raise CurveError(f"unknown engine {engine!r}")


def capture_trace(engine: str, k: int, curve: CurveParams) -> tuple[AffinePoint, ActivityTrace]:
    probe = ActivityProbe()
    point = run_engine(engine, k, curve, probe)
    return point, probe.trace(engine)


def leading_zero_windows(k: int, curve: CurveParams, width: int, order: str = "msb_first") -> int:
    """Consecutive zero windows of k counted from the stated end.

    width 4 scans the byte-padded nibble frame; width 6 scans the Booth
    digits (a digit is zero when its 7-bit window is zero).
    """
    if order not in ("msb_first", "lsb_first"):
        raise CurveError(f"unknown window order {order!r}")
    if width == 4:
        nwin = frame_bytes(curve) * 2
        nibbles = [(k >> (4 * (nwin - 1 - i))) & 0xF for i in range(nwin)]
    elif width == 6:
        digits = booth_digits(k, curve.bits)
        # booth digits are generated low-order first
        nibbles = [d.sel for d in reversed(digits)]
    else:
        raise CurveError("window width must be 4 or 6")
    if order == "lsb_first":
        nibbles.reverse()
    count = 0
    for v in nibbles:
        if v != 0:
            break
        count += 1
    return count
