import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaoscrack.chaos import SecretKey
from chaoscrack.cipher import (
    Keystreams,
    KeystreamFormatError,
    ShapeError,
    decrypt,
    derive_keystreams,
    encrypt,
    encrypt_staged,
)

from oracles import reference_keystreams, staged_decrypt, staged_encrypt

unit = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


def random_image(rng, M, N):
    return rng.integers(0, 256, size=(M, N), dtype=np.uint8)


@pytest.mark.parametrize("M, N", [(4, 4), (5, 3), (1, 9)])
def test_weak_key_one_one(M, N):
    ks = derive_keystreams(SecretKey(1.0, 1.0), M, N)
    assert (ks.s1 == 255).all() and (ks.s2 == M - 1).all() and (ks.s3 == N - 1).all()


def test_weak_key_one_minus_one():
    ks = derive_keystreams(SecretKey(1.0, -1.0), 6, 5)
    assert (ks.s1 == 0).all() and (ks.s2 == 5).all() and (ks.s3 == 0).all()


def test_weak_key_zero_half():
    ks = derive_keystreams(SecretKey(0.0, 0.5), 4, 4)
    expected = np.zeros(16, dtype=np.uint8)
    expected[1] = 255
    np.testing.assert_array_equal(ks.s1, expected)
    assert (ks.s2 == 3).all() and (ks.s3 == 0).all()


@given(unit, unit, st.integers(1, 9), st.integers(1, 9))
@settings(max_examples=60)
def test_keystreams_match_reference(x0, y0, M, N):
    ks = derive_keystreams(SecretKey(x0, y0), M, N)
    s1, s2, s3 = reference_keystreams(x0, y0, M, N)
    assert ks.s1.tolist() == s1 and ks.s2.tolist() == s2 and ks.s3.tolist() == s3


def test_keystream_lengths_ranges_and_determinism():
    key = SecretKey(0.123, -0.456)
    a = derive_keystreams(key, 17, 31)
    b = derive_keystreams(key, 17, 31)
    assert (len(a.s1), len(a.s2), len(a.s3)) == (17 * 31, 31, 17)
    assert a.s2.max() < 17 and a.s3.max() < 31
    assert a.to_bytes() == b.to_bytes()


def test_weak_key_encryption_is_row_rotation():
    rng = np.random.default_rng(1)
    M, N = 7, 5
    p = random_image(rng, M, N)
    ks = derive_keystreams(SecretKey(1.0, -1.0), M, N)
    # every row shifted by M-1 toward larger i, no XOR, no vertical shift
    np.testing.assert_array_equal(encrypt(p, ks), np.roll(p, M - 1, axis=0))


def test_one_by_one():
    key = SecretKey(0.2, 0.3)
    ks = derive_keystreams(key, 1, 1)
    p = np.array([[77]], dtype=np.uint8)
    c = encrypt(p, ks)
    assert c[0, 0] == 77 ^ ks.s1[0]
    np.testing.assert_array_equal(decrypt(c, ks), p)


def test_three_by_two_against_brute_force():
    rng = np.random.default_rng(7)
    key = SecretKey(0.71, -0.29)
    p = random_image(rng, 3, 2)
    s1, s2, s3 = reference_keystreams(key.x0, key.y0, 3, 2)
    expected = staged_encrypt(p.tolist(), s1, s2, s3)
    ks = derive_keystreams(key, 3, 2)
    assert encrypt(p, ks).tolist() == expected
    assert encrypt_staged(p, ks).tolist() == expected
    assert decrypt(np.array(expected, dtype=np.uint8), ks).tolist() == staged_decrypt(expected, s1, s2, s3)
    assert staged_decrypt(expected, s1, s2, s3) == p.tolist()


@given(unit, unit, st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_round_trip_and_pipeline_equivalence(x0, y0, M, N, seed):
    ks = derive_keystreams(SecretKey(x0, y0), M, N)
    p = random_image(np.random.default_rng(seed), M, N)
    c = encrypt(p, ks)
    np.testing.assert_array_equal(c, encrypt_staged(p, ks))
    np.testing.assert_array_equal(decrypt(c, ks), p)


@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_without_xor_encryption_permutes_pixels(M, N, seed):
    rng = np.random.default_rng(seed)
    ks = Keystreams(np.zeros(M * N), rng.integers(0, M, N), rng.integers(0, N, M))
    p = random_image(rng, M, N)
    assert sorted(encrypt(p, ks).ravel()) == sorted(p.ravel())


def test_shape_errors():
    ks = derive_keystreams(SecretKey(0.1, 0.2), 4, 3)
    with pytest.raises(ShapeError):
        encrypt(np.zeros((3, 4), dtype=np.uint8), ks)
    with pytest.raises(ShapeError):
        decrypt(np.zeros((4, 3, 1), dtype=np.uint8), ks)
    with pytest.raises(ShapeError):
        encrypt(np.full((4, 3), 256), ks)
    with pytest.raises(ShapeError):
        derive_keystreams(SecretKey(0.1, 0.2), 0, 3)
    with pytest.raises(ShapeError):
        Keystreams(np.zeros(5), np.zeros(3), np.zeros(2))


def test_dump_layout():
    ks = derive_keystreams(SecretKey(0.5, 0.25), 3, 2)
    blob = ks.to_bytes()
    assert blob[:4] == b"CCKS" and blob[4] == 1 and blob[5:8] == b"\0\0\0"
    assert int.from_bytes(blob[8:12], "little") == 3
    assert int.from_bytes(blob[12:16], "little") == 2
    assert blob[16:22] == ks.s1.tobytes()
    assert [int.from_bytes(blob[22 + 4 * k : 26 + 4 * k], "little") for k in range(2)] == ks.s2.tolist()
    assert [int.from_bytes(blob[30 + 4 * k : 34 + 4 * k], "little") for k in range(3)] == ks.s3.tolist()
    assert len(blob) == 16 + 6 + 4 * 5
    assert Keystreams.from_bytes(blob) == ks


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b"XXXX" + b[4:],
        lambda b: b[:4] + b"\x02" + b[5:],
        lambda b: b[:5] + b"\x01" + b[6:],
        lambda b: b[:-1],
        lambda b: b[:10],
    ],
)
def test_dump_rejects_malformed(mutate):
    blob = derive_keystreams(SecretKey(0.5, 0.25), 3, 2).to_bytes()
    with pytest.raises(KeystreamFormatError):
        Keystreams.from_bytes(mutate(blob))
