import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleepspike.lattice import (
    HnpInstance,
    HnpSample,
    LatticeError,
    LLLParams,
    RecoveryResult,
    attack_with_resampling,
    build_instance,
    build_lattice,
    check_reduction,
    default_subset_size,
    gram_schmidt,
    is_same_lattice,
    lll_reduce,
    read_instance,
    recover_key,
    write_instance,
)
from sleepspike.lattice import _float_prereduce
from sleepspike.signer import (
    NoncePolicy,
    ecdsa_sign,
    generate_key,
    message_hash,
    recover_key_known_nonce,
)


def _planted(curve, d, ell, seed, true_zero_bits=None):
    """Signatures with injected nonces whose top bits are zero."""
    rng = random.Random(seed)
    priv, pub = generate_key(curve, rng)
    zero = true_zero_bits if true_zero_bits is not None else ell
    sigs, ks = [], []
    for i in range(d):
        k = rng.randrange(1, 1 << (curve.bits - zero))
        m = f"planted {seed} {i}".encode()
        sigs.append((ecdsa_sign(m, priv, curve, policy=NoncePolicy.injected(k)),
                     message_hash(m, curve)))
        ks.append(k)
    return priv, pub, sigs, ks


def test_build_instance_planted_relation_holds(p128):
    priv, _, sigs, ks = _planted(p128, 8, 16, seed=1)
    inst = build_instance(sigs, [16] * 8, p128)
    assert len(inst.samples) == 8
    for smp, k in zip(inst.samples, ks):
        assert (smp.u + smp.t * priv.d) % p128.n == k


def test_build_instance_single_signature(p128):
    _, _, sigs, _ = _planted(p128, 1, 8, seed=2)
    inst = build_instance(sigs, [8], p128)
    assert len(inst.samples) == 1


def test_fully_known_nonce_matches_direct_recovery(p128):
    # ell = lambda: the relation pins k completely, so the sample data
    # must reproduce the closed-form known-nonce recovery
    priv, _, sigs, ks = _planted(p128, 1, 8, seed=3)
    (sig, h), k = sigs[0], ks[0]
    inst = build_instance(sigs, [p128.bits], p128)
    smp = inst.samples[0]
    direct = recover_key_known_nonce(sig, h, k, p128)
    assert (k - smp.u) * pow(smp.t, -1, p128.n) % p128.n == direct == priv.d


def test_build_instance_validates(p128):
    _, _, sigs, _ = _planted(p128, 2, 8, seed=4)
    with pytest.raises(LatticeError):
        build_instance(sigs, [8], p128)
    with pytest.raises(LatticeError):
        build_instance(sigs, [8, 999], p128)


def test_build_lattice_contains_predicted_short_vector(p128):
    d, ell = 10, 16
    priv, _, sigs, ks = _planted(p128, d, ell, seed=5)
    inst = build_instance(sigs, [ell] * d, p128)
    rows = build_lattice(inst)
    n = p128.n
    scale = 1 << (ell + 1)
    # target = row_{d+2} + p * row_{d+1} - sum c_i row_i
    target = [scale * k + n for k in ks] + [priv.d, n]
    coeffs = [(inst.samples[i].u + inst.samples[i].t * priv.d - ks[i]) // n for i in range(d)]
    combo = [
        rows[d + 1][c] + priv.d * rows[d][c] - sum(coeffs[i] * rows[i][c] for i in range(d))
        for c in range(d + 2)
    ]
    assert combo == target
    norm = math.isqrt(sum(x * x for x in target))
    assert norm <= 3 * n * math.isqrt(d + 2)


def test_build_lattice_determinant_is_diagonal_product(p128):
    d, ell = 3, 16
    _, _, sigs, _ = _planted(p128, d, ell, seed=6)
    inst = build_instance(sigs, [ell] * d, p128)
    rows = build_lattice(inst)
    m = len(rows)
    mat = [[Fraction(x) for x in row] for row in rows]
    det = Fraction(1)
    for col in range(m):
        piv = next(r for r in range(col, m) if mat[r][col] != 0)
        if piv != col:
            mat[col], mat[piv] = mat[piv], mat[col]
            det = -det
        det *= mat[col][col]
        for r in range(col + 1, m):
            f = mat[r][col] / mat[col][col]
            mat[r] = [a - f * b for a, b in zip(mat[r], mat[col])]
    n = p128.n
    expect = n ** (d + 1) * math.prod(1 << (s.ell + 1) for s in inst.samples)
    assert abs(det) == expect


def test_build_lattice_needs_two_samples(p128):
    with pytest.raises(LatticeError):
        build_lattice(HnpInstance(p128.n, p128.bits, [HnpSample(1, 2, 8)]))


def test_lll_2d_identity_unchanged():
    out = lll_reduce([[1, 0], [0, 1]])
    assert sorted(tuple(map(abs, r)) for r in out) == [(0, 1), (1, 0)]


def test_lll_2d_finds_short_vector():
    basis = [[201, 37], [1648, 297]]
    out = lll_reduce(basis)
    # brute-force shortest nonzero vector in a small coefficient box
    best = None
    for a in range(-60, 61):
        for b in range(-60, 61):
            if a == b == 0:
                continue
            v = (a * 201 + b * 1648, a * 37 + b * 297)
            norm = v[0] ** 2 + v[1] ** 2
            if best is None or norm < best:
                best = norm
    got = min(r[0] ** 2 + r[1] ** 2 for r in out)
    assert got == best
    assert min(r[0] ** 2 + r[1] ** 2 for r in basis) >= got


def test_lll_planted_hnp_recovers_short_vector(p128):
    d, ell = 10, 16
    priv, pub, sigs, ks = _planted(p128, d, ell, seed=7)
    inst = build_instance(sigs, [ell] * d, p128)
    reduced = lll_reduce(build_lattice(inst))
    n = p128.n
    scale = 1 << (ell + 1)
    target = [scale * k + n for k in ks] + [priv.d, n]
    neg = [-x for x in target]
    assert target in reduced or neg in reduced
    assert recover_key(reduced, inst, pub, p128) == priv.d


def test_lll_postconditions_and_unimodularity_small(rng):
    for trial in range(20):
        m = rng.randrange(2, 6)
        rows = [[rng.randrange(-50, 51) for _ in range(m)] for _ in range(m)]
        try:
            out = lll_reduce(rows)
        except (LatticeError, ValueError):
            continue  # dependent rows
        check_reduction(out)
        assert is_same_lattice(rows, out)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_lll_postconditions_random_4d(seed):
    rng = random.Random(seed)
    rows = [[rng.randrange(-10**6, 10**6) for _ in range(4)] for _ in range(4)]
    try:
        out = lll_reduce(rows)
    except (LatticeError, ValueError):
        return
    check_reduction(out)


def test_lll_rejects_dependent_rows():
    with pytest.raises(ValueError):
        lll_reduce([[1, 2], [2, 4]])


def test_lll_delta_validation():
    with pytest.raises(LatticeError):
        lll_reduce([[1, 0], [0, 1]], LLLParams(delta=0.2))
    with pytest.raises(LatticeError):
        lll_reduce([[1, 0], [0, 1]], LLLParams(delta=1.0))


def test_float_prereduce_preserves_lattice(rng):
    for _ in range(10):
        rows = [[rng.randrange(-10**8, 10**8) for _ in range(5)] for _ in range(5)]
        work = [list(r) for r in rows]
        _float_prereduce(work, 0.99)
        assert is_same_lattice(rows, work)


def test_gram_schmidt_rejects_dependent_rows():
    with pytest.raises(LatticeError):
        gram_schmidt([[1, 0], [1, 0]])


def test_recover_key_negative_control(p128, rng):
    _, pub, sigs, _ = _planted(p128, 4, 16, seed=8)
    inst = build_instance(sigs, [16] * 4, p128)
    garbage = [[rng.randrange(1, 1 << 40) for _ in range(6)] for _ in range(6)]
    assert recover_key(garbage, inst, pub, p128) is None


def test_recover_key_overstated_ell_fails(p128):
    # nonces actually have 8 top zero bits, but we claim 16
    d = 10
    priv, pub, sigs, _ = _planted(p128, d, 16, seed=9, true_zero_bits=8)
    inst = build_instance(sigs, [16] * d, p128)
    reduced = lll_reduce(build_lattice(inst))
    assert recover_key(reduced, inst, pub, p128) is None


def test_default_subset_size(p256, p128):
    assert default_subset_size(p256, 20) == 13 + 7
    assert default_subset_size(p256, 12) == 22 + 7
    assert default_subset_size(p128, 16) == 8 + 7
    with pytest.raises(LatticeError):
        default_subset_size(p256, 0)


def test_attack_all_true_samples_first_try(p128):
    d, ell = 12, 16
    priv, pub, sigs, _ = _planted(p128, d, ell, seed=10)
    inst = build_instance(sigs, [ell] * d, p128)
    result = attack_with_resampling(
        inst.samples, pub, p128, d_subset=d, max_tries=5, rng=random.Random(0)
    )
    assert result.success and result.key == priv.d and result.tries == 1


def test_attack_tolerates_contamination(p128):
    # ~10% bad samples; resampling should pull a clean subset
    d_true, ell = 16, 16
    priv, pub, sigs, _ = _planted(p128, d_true, ell, seed=11)
    bad_rng = random.Random(99)
    bad_sigs = []
    for i in range(2):
        k = bad_rng.randrange(1 << (p128.bits - 4), p128.n)  # top bits NOT zero
        m = f"contaminated {i}".encode()
        bad_sigs.append(
            (ecdsa_sign(m, priv, p128, policy=NoncePolicy.injected(k)), message_hash(m, p128))
        )
    all_sigs = sigs + bad_sigs
    inst = build_instance(all_sigs, [ell] * len(all_sigs), p128)
    samples = list(inst.samples)
    successes = 0
    for run in range(5):
        rng = random.Random(f"mc {run}")
        rng.shuffle(samples)
        result = attack_with_resampling(
            samples, pub, p128, d_subset=12, max_tries=20, rng=rng
        )
        successes += result.success
        if result.success:
            assert result.key == priv.d
    assert successes >= 4


def test_attack_zero_tries_returns_not_found(p128):
    _, pub, sigs, _ = _planted(p128, 12, 16, seed=12)
    inst = build_instance(sigs, [16] * 12, p128)
    result = attack_with_resampling(
        inst.samples, pub, p128, d_subset=12, max_tries=0, rng=random.Random(0)
    )
    assert result == RecoveryResult(False, None, 0, result.seconds)


def test_attack_rejects_infeasible_subset(p128):
    _, pub, sigs, _ = _planted(p128, 12, 16, seed=13)
    inst = build_instance(sigs, [4] * 12, p128)  # 12 * 4 = 48 < 128 bits
    with pytest.raises(LatticeError):
        attack_with_resampling(inst.samples, pub, p128, 12, 5, random.Random(0))
    with pytest.raises(LatticeError):
        attack_with_resampling(inst.samples, pub, p128, 13, 5, random.Random(0))


def test_instance_file_round_trip(tmp_path, p128):
    _, _, sigs, _ = _planted(p128, 5, 16, seed=14)
    inst = build_instance(sigs, [16] * 5, p128)
    path = tmp_path / "inst.csv"
    write_instance(path, inst)
    text = path.read_text()
    assert text.splitlines()[0] == "t,u,ell"
    loaded = read_instance(path, p128)
    assert loaded.samples == inst.samples
    assert loaded.n == p128.n and loaded.lam == p128.bits


def test_instance_file_errors(tmp_path, p128):
    path = tmp_path / "bad.csv"
    path.write_text("wrong header\n")
    with pytest.raises(LatticeError):
        read_instance(path, p128)
    path.write_text("t,u,ell\n1,2\n")
    with pytest.raises(LatticeError, match=":2"):
        read_instance(path, p128)
    path.write_text("t,u,ell\n1,2,xyz\n")
    with pytest.raises(LatticeError):
        read_instance(path, p128)
