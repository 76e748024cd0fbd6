import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaoscrack.attack import (
    AttackModelError,
    EncryptionOracle,
    attack_end_to_end,
    build_chosen_images,
    recover_S1,
    recover_S2,
    recover_S3,
    synthetic_image,
)
from chaoscrack.chaos import SecretKey
from chaoscrack.cipher import Keystreams, decrypt, derive_keystreams, encrypt

unit = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


def test_chosen_images_from_zero_image():
    s = build_chosen_images(np.zeros((2, 2), dtype=np.uint8))
    # rows are indexed by j: row j=0 is zero, row j=1 is 255
    assert s.i2[:, 0].tolist() == [0, 0] and s.i2[:, 1].tolist() == [255, 255]
    assert s.i3[0, :].tolist() == [0, 0] and s.i3[1, :].tolist() == [255, 255]


def test_chosen_images_from_white_image():
    s = build_chosen_images(np.full((4, 4), 255, dtype=np.uint8))
    assert (s.i2[:, 0] == 255).all() and (s.i2[:, 1:] == 0).all()


def test_differentials_follow_marker_patterns():
    s = build_chosen_images(synthetic_image(9, 6, seed=3))
    assert (s.d12[:, 0] == 0).all() and (s.d12[:, 1:] == 255).all()
    assert (s.d13[0, :] == 0).all() and (s.d13[1:, :] == 255).all()


def test_recover_s3_single_column():
    d = np.full((1, 8), 255, dtype=np.uint8)
    d[0, 5] = 0
    assert recover_S3(d, np.zeros_like(d)).tolist() == [5]


def test_recover_s2_unshifted_row():
    d = np.full((6, 1), 255, dtype=np.uint8)
    d[3, 0] = 0
    assert recover_S2(d, np.zeros_like(d), np.zeros(6)).tolist() == [3]


def test_ambiguous_pattern_rejected():
    c1 = np.zeros((4, 4), dtype=np.uint8)
    with pytest.raises(AttackModelError):
        recover_S3(c1, c1)  # every pixel of the difference is zero
    with pytest.raises(AttackModelError):
        recover_S3(c1, np.full((4, 4), 7, dtype=np.uint8))  # no zero at all


@pytest.mark.parametrize(
    "key, s1, s2, s3",
    [
        ((1.0, 1.0), 255, "M-1", "N-1"),
        ((1.0, -1.0), 0, "M-1", 0),
        ((0.0, 0.0), 128, "M-1", "N/2"),
    ],
)
def test_weak_keys_recovered(key, s1, s2, s3):
    M, N = 8, 6
    resolve = {"M-1": M - 1, "N-1": N - 1, "N/2": N // 2}
    oracle = EncryptionOracle(SecretKey(*key), M, N)
    rec = attack_end_to_end(oracle, np.zeros((M, N), dtype=np.uint8))
    assert (rec.s1 == s1).all()
    assert (rec.s2 == resolve.get(s2, s2)).all()
    assert (rec.s3 == resolve.get(s3, s3)).all()


def test_five_by_seven_exact_recovery():
    key = SecretKey(0.38196601125011, 0.57721566490153)
    oracle = EncryptionOracle(key, 5, 7)
    rec = attack_end_to_end(oracle, synthetic_image(5, 7, seed=11))
    assert rec == derive_keystreams(key, 5, 7)
    assert rec.recovered and rec.queries == 3 and oracle.queries == 3


@given(unit, unit, st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_exact_recovery_all_sizes(x0, y0, M, N, seed):
    key = SecretKey(x0, y0)
    rng = np.random.default_rng(seed)
    oracle = EncryptionOracle(key, M, N)
    rec = attack_end_to_end(oracle, rng.integers(0, 256, (M, N), dtype=np.uint8))
    assert rec == derive_keystreams(key, M, N)
    assert oracle.queries == 3
    p4 = rng.integers(0, 256, (M, N), dtype=np.uint8)
    np.testing.assert_array_equal(decrypt(oracle(p4), rec), p4)


def test_attack_sees_only_the_oracle():
    seen = []

    def opaque(img):
        seen.append(img.copy())
        return encrypt(img, derive_keystreams(SecretKey(-0.25, 0.875), 6, 4))

    rec = attack_end_to_end(opaque, np.full((6, 4), 9, dtype=np.uint8))
    assert len(seen) == 3
    assert rec == derive_keystreams(SecretKey(-0.25, 0.875), 6, 4)


def test_recover_s1_with_known_shifts():
    key = SecretKey(0.6, -0.2)
    ks = derive_keystreams(key, 4, 3)
    i1 = synthetic_image(4, 3, seed=1)
    np.testing.assert_array_equal(recover_S1(i1, encrypt(i1, ks), ks.s2, ks.s3), ks.s1)


@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**32 - 1))
@settings(max_examples=60)
def test_xor_of_ciphertexts_is_permuted_plain_difference(M, N, seed):
    rng = np.random.default_rng(seed)
    ks = Keystreams(rng.integers(0, 256, M * N), rng.integers(0, M, N), rng.integers(0, N, M))
    a = rng.integers(0, 256, (M, N), dtype=np.uint8)
    b = rng.integers(0, 256, (M, N), dtype=np.uint8)
    zero = Keystreams(np.zeros(M * N), ks.s2, ks.s3)
    np.testing.assert_array_equal(encrypt(a, ks) ^ encrypt(b, ks), encrypt(a ^ b, zero))
