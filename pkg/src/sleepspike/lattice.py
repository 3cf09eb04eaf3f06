"""Hidden-number-problem construction and lattice key recovery.

Each signature (r, s) on a message with hash h gives the relation
s*k = h + r*d (mod n). Dividing by s turns it into

    k = u + t*d (mod n),   t = r/s,  u = h/s,

and a claimed bound "the top `ell` bits of k are zero" makes k small
(0 < k < 2^(lambda - ell)). Collecting d such relations, the embedding
built here places the vector

    (2^(ell+1)*k_1 + n, ..., 2^(ell+1)*k_d + n, d_key, n)

inside an integer lattice of dimension d + 2, where the coordinate
next to last is the private key itself. That vector has norm on the
order of n * sqrt(d + 2), far below the Gaussian heuristic for the
lattice when sum(ell) comfortably exceeds lambda, so LLL finds it and
the key falls out of a row scan.

Subset resampling wraps the whole pipeline to tolerate misclassified
samples: draw a subset, reduce, test candidates against the public
key, repeat. The first try uses the samples in the given order (the
spike classifier emits them most-confident first), later tries draw
uniformly.
"""

import math
import time
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._backend import lll_reduce_rows
from .curves import CurveParams, mod_inv, scalar_mul
from .signer import PublicKey, Signature


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class HnpSample:
    t: int
    u: int
    ell: int


@dataclass
class HnpInstance:
    n: int
    lam: int
    samples: list[HnpSample]


@dataclass(frozen=True)
class LLLParams:
    delta: float = 0.99

    def as_fraction(self) -> Fraction:
        f = Fraction(self.delta).limit_denominator(10**6)
        if not Fraction(1, 4) < f < 1:
            raise LatticeError("delta must lie in (0.25, 1)")
        return f


@dataclass
class RecoveryResult:
    success: bool
    key: int | None
    tries: int
    seconds: float


def build_instance(
    sigs: list[tuple[Signature, int]], ells: list[int], curve: CurveParams
) -> HnpInstance:
    """Turn (signature, message-hash) pairs into HNP samples.

    ells[i] is the claimed count of known-zero leading bits of the i-th
    nonce. Samples whose s is not invertible are skipped with a notice.
    """
    if len(sigs) != len(ells):
        raise LatticeError("one ell per signature required")
    n = curve.n
    samples = []
    skipped = 0
    for (sig, h), ell in zip(sigs, ells):
        if not 0 <= ell <= curve.bits:
            raise LatticeError(f"ell={ell} out of range for a {curve.bits}-bit order")
        try:
            sinv = mod_inv(sig.s, n)
        except Exception:
            skipped += 1
            continue
        samples.append(HnpSample(t=sig.r * sinv % n, u=h * sinv % n, ell=ell))
    if skipped:
        warnings.warn(f"skipped {skipped} samples with non-invertible s", stacklevel=2)
    return HnpInstance(n=n, lam=curve.bits, samples=samples)


def build_lattice(inst: HnpInstance) -> list[list[int]]:
    """Integer basis of dimension d+2; per-sample columns scaled by
    2^(ell_i + 1) so mixed ell values embed consistently."""
    d = len(inst.samples)
    if d < 2:
        raise LatticeError("need at least 2 samples")
    n = inst.n
    rows = [[0] * (d + 2) for _ in range(d + 2)]
    for i, smp in enumerate(inst.samples):
        scale = 1 << (smp.ell + 1)
        rows[i][i] = scale * n
        rows[d][i] = scale * smp.t
        rows[d + 1][i] = scale * smp.u + n
    rows[d][d] = 1
    rows[d + 1][d + 1] = n
    return rows


def _float_prereduce(b: list[list[int]], delta: float) -> None:
    """Heuristic floating-point reduction pass, mutating b in place.

    Only exact integer operations touch the basis (row swaps and
    subtractions of integer multiples), so the spanned lattice is
    preserved no matter how inaccurate the float Gram-Schmidt data
    gets. The pass bails out on any numerical trouble or when a step
    budget runs out; the exact integer reduction that follows is the
    sole authority on the output conditions. Its job is purely to make
    that exact pass cheap on large, wide-entry bases.
    """
    m = len(b)
    if m <= 2:
        return
    ncols = len(b[0])
    max_bits = max((abs(x).bit_length() for row in b for x in row), default=0)
    if max_bits > 960:  # float64 overflows at 1024 bits
        return
    growth_limit = max_bits + 128

    def refresh():
        A = np.array(b, dtype=np.float64).T
        if not np.isfinite(A).all():
            return None
        R = np.linalg.qr(A, mode="r")
        if not np.isfinite(R).all() or np.abs(np.diag(R)).min() <= 0.0:
            return None
        return R

    R = refresh()
    if R is None:
        return
    budget = 512 * m * m
    refresh_every = 4 * m
    steps = 0
    since_refresh = 0
    k = 1
    while k < m and steps < budget:
        steps += 1
        for j in range(k - 1, -1, -1):
            mu = R[j, k] / R[j, j]
            if not math.isfinite(mu):
                return
            if abs(mu) > 0.5 + 1e-9:
                q = round(mu)
                if abs(q) > 2**52:
                    return
                bk, bj = b[k], b[j]
                for c in range(ncols):
                    bk[c] -= q * bj[c]
                R[:, k] -= q * R[:, j]
        mu = R[k - 1, k] / R[k - 1, k - 1]
        if R[k, k] ** 2 < (delta - mu * mu) * R[k - 1, k - 1] ** 2:
            b[k - 1], b[k] = b[k], b[k - 1]
            Rk = R[:, k].copy()
            R[:, k] = R[:, k - 1]
            R[:, k - 1] = Rk
            # one Givens rotation restores the triangular shape
            x, y = R[k - 1, k - 1], R[k, k - 1]
            r = math.hypot(x, y)
            if r <= 0.0 or not math.isfinite(r):
                return
            c, s = x / r, y / r
            upper = c * R[k - 1, :] + s * R[k, :]
            lower = -s * R[k - 1, :] + c * R[k, :]
            R[k - 1, :] = upper
            R[k, :] = lower
            R[k, k - 1] = 0.0
            k = max(k - 1, 1)
            since_refresh += 1
            if since_refresh >= refresh_every:
                since_refresh = 0
                if max(abs(x).bit_length() for row in b for x in row) > growth_limit:
                    return
                R = refresh()
                if R is None:
                    return
        else:
            k += 1


def lll_reduce(basis: list[list[int]], params: LLLParams | None = None) -> list[list[int]]:
    """Reduce: float-guided pre-pass, then the exact integer kernel.

    The pre-pass only rearranges the basis with unimodular integer
    steps; the exact kernel guarantees the size-reduction and Lovasz
    postconditions regardless of what the pre-pass achieved.
    """
    if params is None:
        params = LLLParams()
    f = params.as_fraction()
    work = [list(row) for row in basis]
    _float_prereduce(work, f.numerator / f.denominator)
    return lll_reduce_rows(work, f.numerator, f.denominator)


def recover_key(
    reduced: list[list[int]], inst: HnpInstance, pub: PublicKey, curve: CurveParams
) -> int | None:
    """Scan reduced rows for a key coordinate that verifies against Q."""
    d = len(inst.samples)
    n = inst.n
    seen = set()
    for row in reduced:
        cand = abs(row[d]) % n
        for c in (cand, (n - cand) % n):
            if c == 0 or c in seen:
                continue
            seen.add(c)
            if scalar_mul(c, curve.G, curve) == pub.Q:
                return c
    return None


def default_subset_size(curve: CurveParams, ell: int) -> int:
    """ceil(lambda / ell) + 7: empirical reduction slack over the
    information-theoretic minimum."""
    if ell < 1:
        raise LatticeError("ell must be >= 1")
    return -(-curve.bits // ell) + 7


def _subset_schedule(samples: list[HnpSample], d: int, rng):
    """Subsets to try, most promising first.

    1. the ranked prefix (callers pass samples best-first);
    2. a leave-one-out ladder over the top d+1 ranks, dropping the
       boundary-most member first - this repairs the common failure of
       a single misclassified sample sitting just inside the prefix;
    3. uniform random subsets of the whole pool.
    """
    yield samples[:d]
    if len(samples) > d:
        window = samples[: d + 1]
        for drop in range(d - 1, -1, -1):
            yield window[:drop] + window[drop + 1 :]
    while True:
        yield rng.sample(samples, d)


def attack_with_resampling(
    samples: list[HnpSample],
    pub: PublicKey,
    curve: CurveParams,
    d_subset: int,
    max_tries: int,
    rng,
    params: LLLParams | None = None,
) -> RecoveryResult:
    """Repeat {subset, build, reduce, scan} until the key verifies.

    Subsets follow :func:`_subset_schedule`; misclassified samples in
    the ranked input are absorbed by the ladder and the random tail.
    """
    if d_subset > len(samples):
        raise LatticeError("d_subset larger than the sample pool")
    floor_info = sum(sorted(s.ell for s in samples)[:d_subset])
    if d_subset >= 2 and floor_info <= curve.bits:
        raise LatticeError(
            f"subset carries at most {floor_info} known bits <= {curve.bits};"
            " enlarge d_subset or improve ell"
        )
    start = time.perf_counter()
    tries = 0
    for subset in _subset_schedule(list(samples), d_subset, rng):
        if tries >= max_tries:
            break
        tries += 1
        inst = HnpInstance(curve.n, curve.bits, list(subset))
        reduced = lll_reduce(build_lattice(inst), params)
        key = recover_key(reduced, inst, pub, curve)
        if key is not None:
            return RecoveryResult(True, key, tries, time.perf_counter() - start)
    return RecoveryResult(False, None, tries, time.perf_counter() - start)


# exact-arithmetic reduction checkers (independent of the reduction path)


def gram_schmidt(rows: list[list[int]]):
    """Exact Gram-Schmidt: returns (mu, Bstar) as Fractions."""
    m = len(rows)
    star: list[list[Fraction]] = []
    norms: list[Fraction] = []
    mu = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        v = [Fraction(x) for x in rows[i]]
        for j in range(i):
            num = sum(Fraction(rows[i][c]) * star[j][c] for c in range(len(v)))
            mu[i][j] = num / norms[j]
            v = [v[c] - mu[i][j] * star[j][c] for c in range(len(v))]
        star.append(v)
        norms.append(sum(x * x for x in v))
        if norms[i] == 0:
            raise LatticeError("rows are linearly dependent")
    return mu, norms


def check_reduction(rows: list[list[int]], params: LLLParams | None = None) -> None:
    """Assert size reduction and the Lovasz condition; raises on failure."""
    if params is None:
        params = LLLParams()
    delta = params.as_fraction()
    mu, norms = gram_schmidt(rows)
    for i in range(len(rows)):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                raise LatticeError(f"not size-reduced at ({i}, {j})")
    for k in range(1, len(rows)):
        if norms[k] < (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            raise LatticeError(f"Lovasz condition fails at row {k}")


def is_same_lattice(a: list[list[int]], b: list[list[int]]) -> bool:
    """True when the row spans coincide (integer coordinates both ways)."""
    return _integer_span_contains(a, b) and _integer_span_contains(b, a)


def _integer_span_contains(basis: list[list[int]], vectors: list[list[int]]) -> bool:
    m = len(basis)
    cols = len(basis[0])
    for target in vectors:
        # solve x * basis = target by Gaussian elimination over Q
        aug = [[Fraction(basis[r][c]) for c in range(cols)] + [Fraction(0)] * m for r in range(m)]
        for r in range(m):
            aug[r][cols + r] = Fraction(1)
        rhs = [Fraction(x) for x in target]
        piv_rows = []
        col = 0
        r = 0
        while r < m and col < cols:
            piv = next((i for i in range(r, m) if aug[i][col] != 0), None)
            if piv is None:
                col += 1
                continue
            aug[r], aug[piv] = aug[piv], aug[r]
            for i in range(m):
                if i != r and aug[i][col] != 0:
                    f = aug[i][col] / aug[r][col]
                    aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
            piv_rows.append((r, col))
            r += 1
            col += 1
        coeffs = [Fraction(0)] * m
        residual = list(rhs)
        for r, col in piv_rows:
            f = residual[col] / aug[r][col]
            residual = [x - f * y for x, y in zip(residual, aug[r][:cols])]
            for i in range(m):
                coeffs[i] += f * aug[r][cols + i]
        if any(x != 0 for x in residual):
            return False
        if any(c.denominator != 1 for c in coeffs):
            return False
    return True


# instance files: header line, then one `t,u,ell` row per sample
# (t and u fixed-width lowercase hex, ell decimal)


def write_instance(path, inst: HnpInstance) -> None:
    from ._fsio import atomic_write_text

    w = (inst.lam + 3) // 4
    lines = ["t,u,ell"]
    for s in inst.samples:
        lines.append(f"{s.t:0{w}x},{s.u:0{w}x},{s.ell}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_instance(path, curve: CurveParams) -> HnpInstance:
    samples = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "t,u,ell":
            raise LatticeError(f"{path}: expected header 't,u,ell'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise LatticeError(f"{path}:{lineno}: expected 3 fields")
            try:
                t, u, ell = int(parts[0], 16), int(parts[1], 16), int(parts[2], 10)
            except ValueError as exc:
                raise LatticeError(f"{path}:{lineno}: bad field") from exc
            samples.append(HnpSample(t, u, ell))
    return HnpInstance(curve.n, curve.bits, samples)
