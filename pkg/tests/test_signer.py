import pytest

from sleepspike.curves import scalar_mul
from sleepspike.signer import (
    NoncePolicy,
    PrivateKey,
    Signature,
    SigningError,
    ecdsa_sign,
    ecdsa_verify,
    generate_key,
    hmac_sha256,
    leading_zero_bits,
    message_hash,
    nonce_zero_bits,
    public_key,
    read_key_file,
    recover_key_known_nonce,
    rfc6979_nonce,
    search_messages,
    sha256,
    signature_from_hex,
    signature_to_hex,
    trailing_zero_bits,
    write_key_file,
)

# published SHA-256 test vectors
SHA256_EMPTY = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
SHA256_ABC = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
SHA256_MILLION_A = "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0"

# RFC 6979 appendix A.2.5, P-256 with SHA-256, message "sample"
RFC6979_KEY = 0xC9AFA9D845BA75166B5C215767B1D6934E50C3DB36E89B127B8A622B120F6721
RFC6979_QX = 0x60FED4BA255A9D31C961EB74C6356D68C049B8923B61FA6CE669622E60F29FB6
RFC6979_QY = 0x7903FE1008B8BC99A41AE9E95628BC64F2F1B20C2D7E9F5177A3C294D4462299
RFC6979_K = 0xA6E3C57DD01ABE90086538398355DD4C3B17AA873382B0F24D6129493D8AAD60
RFC6979_R = 0xEFD48B2AACB6A8FD1140DD9CD45E81D69D2C877B56AAF991C34D0EA84EAF3716
RFC6979_S = 0xF7CB1C942D657C41D436C7A1B6E29F65F3E900DBB9AFF4064DC4AB2F843ACDA8

# RFC 4231 test case 1
HMAC_TC1_KEY = bytes.fromhex("0b" * 20)
HMAC_TC1_MSG = b"Hi There"
HMAC_TC1_TAG = "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"


def test_sha256_published_vectors():
    assert sha256(b"").hex() == SHA256_EMPTY
    assert sha256(b"abc").hex() == SHA256_ABC
    assert sha256(b"a" * 1_000_000).hex() == SHA256_MILLION_A


def test_hmac_published_vector_and_properties():
    assert hmac_sha256(HMAC_TC1_KEY, HMAC_TC1_MSG).hex() == HMAC_TC1_TAG
    # keys longer than the block size are pre-hashed
    long_key = bytes(range(256))
    assert hmac_sha256(long_key, b"x") == hmac_sha256(sha256(long_key), b"x")
    # single-bit flip changes the tag
    assert hmac_sha256(b"k", b"\x00") != hmac_sha256(b"k", b"\x01")


def test_rfc6979_published_vector(p256):
    priv = PrivateKey(RFC6979_KEY)
    assert rfc6979_nonce(priv, b"sample", p256) == RFC6979_K
    pub = public_key(priv, p256)
    assert (pub.Q.x, pub.Q.y) == (RFC6979_QX, RFC6979_QY)
    sig = ecdsa_sign(b"sample", priv, p256)
    assert (sig.r, sig.s) == (RFC6979_R, RFC6979_S)


def test_rfc6979_determinism_and_sensitivity(p256, rng):
    priv, _ = generate_key(p256, rng)
    assert rfc6979_nonce(priv, b"msg", p256) == rfc6979_nonce(priv, b"msg", p256)
    assert rfc6979_nonce(priv, b"msgA", p256) != rfc6979_nonce(priv, b"msgB", p256)


def test_deterministic_signature_repeats(p256, rng):
    priv, _ = generate_key(p256, rng)
    assert ecdsa_sign(b"same", priv, p256) == ecdsa_sign(b"same", priv, p256)


def test_sign_verify_round_trip(toy, p256, rng):
    for curve, rounds in ((toy, 50), (p256, 20)):
        priv, pub = generate_key(curve, rng)
        for i in range(rounds):
            m = f"round trip {i}".encode()
            sig = ecdsa_sign(m, priv, curve)
            assert ecdsa_verify(m, sig, pub, curve)


def test_verify_rejects_corruption(p256, rng):
    priv, pub = generate_key(p256, rng)
    m = b"target message"
    sig = ecdsa_sign(m, priv, p256)
    assert not ecdsa_verify(m, Signature(sig.r, sig.s ^ 1), pub, p256)
    assert not ecdsa_verify(m, Signature(sig.r ^ 1, sig.s), pub, p256)
    assert not ecdsa_verify(b"target messagf", sig, pub, p256)
    assert not ecdsa_verify(m, Signature(0, sig.s), pub, p256)
    assert not ecdsa_verify(m, Signature(sig.r, p256.n), pub, p256)


def test_verify_rejects_malformed_public_key(p256, rng):
    from sleepspike.curves import AffinePoint
    from sleepspike.signer import PublicKey

    priv, _ = generate_key(p256, rng)
    sig = ecdsa_sign(b"m", priv, p256)
    assert not ecdsa_verify(b"m", sig, PublicKey(AffinePoint(1, 2)), p256)


def test_injected_nonce_reproduces_r(p256, rng):
    priv, _ = generate_key(p256, rng)
    k = rng.randrange(1, p256.n)
    sig = ecdsa_sign(b"m", priv, p256, policy=NoncePolicy.injected(k))
    assert sig.r == scalar_mul(k, p256.G, p256).x % p256.n
    with pytest.raises(SigningError):
        ecdsa_sign(b"m", priv, p256, policy=NoncePolicy.injected(0))


def test_recover_key_known_nonce(p256, toy, rng):
    for curve in (toy, p256):
        priv, pub = generate_key(curve, rng)
        for i in range(10):
            m = f"recovery {i}".encode()
            k = rng.randrange(1, curve.n)
            sig = ecdsa_sign(m, priv, curve, policy=NoncePolicy.injected(k))
            assert recover_key_known_nonce(sig, message_hash(m, curve), k, curve) == priv.d
            wrong = recover_key_known_nonce(sig, message_hash(m, curve), k ^ 1, curve)
            assert scalar_mul(wrong, curve.G, curve) != pub.Q


def test_recover_key_rejects_degenerate(toy, rng):
    priv, _ = generate_key(toy, rng)
    m = b"deg"
    k = rng.randrange(1, toy.n)
    sig = ecdsa_sign(m, priv, toy, policy=NoncePolicy.injected(k))
    with pytest.raises(SigningError):
        recover_key_known_nonce(Signature(toy.n, sig.s), message_hash(m, toy), k, toy)
    # h chosen so that the recovered key would be 0
    h_fake = sig.s * k % toy.n
    with pytest.raises(SigningError):
        recover_key_known_nonce(sig, h_fake, k, toy)


def test_zero_bit_helpers():
    assert leading_zero_bits(0b1, 8) == 7
    assert leading_zero_bits(0, 8) == 8
    assert trailing_zero_bits(0b1000, 8) == 3
    assert trailing_zero_bits(0, 8) == 8


def test_search_target_zero_returns_first_messages(toy, rng):
    priv, _ = generate_key(toy, rng)
    res = search_messages(0, 5, "leading", priv, toy, rng)
    assert res.complete and len(res.found) == 5 and res.draws == 5


def test_search_finds_and_recounts(p256, rng):
    priv, _ = generate_key(p256, rng)
    res = search_messages(8, 4, "leading", priv, p256, rng)
    assert res.complete and len(res.found) == 4
    for fm in res.found:
        k = rfc6979_nonce(priv, fm.message, p256)
        assert k == fm.nonce
        assert nonce_zero_bits(k, p256, "leading") == fm.zero_bits >= 8


def test_search_trailing_end(p256, rng):
    priv, _ = generate_key(p256, rng)
    res = search_messages(6, 2, "trailing", priv, p256, rng)
    assert res.complete
    for fm in res.found:
        assert trailing_zero_bits(fm.nonce, p256.bits) >= 6


def test_search_infeasible_budget_signals(p256, rng):
    priv, _ = generate_key(p256, rng)
    res = search_messages(72, 4, "leading", priv, p256, rng, budget=200)
    assert not res.complete
    assert res.draws == 200
    assert isinstance(res.found, list)


def test_key_file_round_trip(tmp_path, p256, rng):
    priv, _ = generate_key(p256, rng)
    path = tmp_path / "key.txt"
    write_key_file(path, priv, p256)
    lines = path.read_text().splitlines()
    assert lines[0] == "p256" and len(lines[1]) == 64
    loaded, curve = read_key_file(path)
    assert loaded == priv and curve.name == "p256"


def test_key_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("p256\n00\nextra\n")
    with pytest.raises(SigningError):
        read_key_file(path)
    path.write_text("p256\n0000000000000000000000000000000000000000000000000000000000000000\n")
    with pytest.raises(SigningError):
        read_key_file(path)


def test_signature_hex_round_trip(p256, rng):
    priv, _ = generate_key(p256, rng)
    sig = ecdsa_sign(b"hex", priv, p256)
    s = signature_to_hex(sig, p256)
    assert len(s) == 128 and s == s.lower()
    assert signature_from_hex(s, p256) == sig


def test_matches_external_deterministic_ecdsa(p256):
    cryptography = pytest.importorskip("cryptography")
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.asymmetric import ec
    from cryptography.hazmat.primitives.asymmetric.utils import decode_dss_signature

    priv = PrivateKey(0x1CE0398A26E9F0AE7EAE6801405C4AA1B4BBA6D9E2FD21B2F71B3E7F79D1AE3A)
    ext = ec.derive_private_key(priv.d, ec.SECP256R1())
    for i in range(5):
        m = f"external oracle {i}".encode()
        der = ext.sign(m, ec.ECDSA(hashes.SHA256(), deterministic_signing=True))
        r, s = decode_dss_signature(der)
        mine = ecdsa_sign(m, priv, p256)
        assert (mine.r, mine.s) == (r, s)
