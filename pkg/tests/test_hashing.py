import numpy as np
import pytest

from diqkd.hashing import ToeplitzHash, pack_bits, unpack_bits


def toeplitz_matrix(h: ToeplitzHash) -> np.ndarray:
    """Dense reference construction: T[i, j] = d[i - j + in_len - 1]."""
    t = np.empty((h.out_len, h.in_len), dtype=np.uint8)
    for i in range(h.out_len):
        for j in range(h.in_len):
            t[i, j] = h.diagonals[i - j + h.in_len - 1]
    return t


def test_deterministic_given_seed():
    a = ToeplitzHash.sample(8, 3, seed=12345)
    b = ToeplitzHash.sample(8, 3, seed=12345)
    assert np.array_equal(a.diagonals, b.diagonals)
    c = ToeplitzHash.sample(8, 3, seed=54321)
    assert not np.array_equal(a.diagonals, c.diagonals)


def test_diagonal_length():
    h = ToeplitzHash.sample(100, 40, seed=0)
    assert len(h.diagonals) == 139


def test_square_hash_allowed():
    h = ToeplitzHash.sample(16, 16, seed=1)
    y = h(np.ones(16, dtype=np.uint8))
    assert y.shape == (16,)


def test_rejects_bad_lengths():
    with pytest.raises(ValueError):
        ToeplitzHash.sample(8, 0, seed=0)
    with pytest.raises(ValueError):
        ToeplitzHash.sample(8, 9, seed=0)


def test_rejects_wrong_input_length():
    h = ToeplitzHash.sample(8, 3, seed=0)
    with pytest.raises(ValueError):
        h(np.zeros(7, dtype=np.uint8))


def test_zero_maps_to_zero():
    h = ToeplitzHash.sample(64, 16, seed=2)
    assert np.array_equal(h(np.zeros(64, dtype=np.uint8)), np.zeros(16, dtype=np.uint8))


def test_matches_dense_reference():
    rng = np.random.default_rng(3)
    for seed in range(20):
        h = ToeplitzHash.sample(37, 11, seed=seed)
        t = toeplitz_matrix(h)
        x = rng.integers(0, 2, 37, dtype=np.uint8)
        assert np.array_equal(h(x), (t @ x) % 2)


def test_linearity_exact_bulk():
    rng = np.random.default_rng(4)
    h = ToeplitzHash.sample(128, 32, seed=5)
    for _ in range(1000):
        x = rng.integers(0, 2, 128, dtype=np.uint8)
        y = rng.integers(0, 2, 128, dtype=np.uint8)
        assert np.array_equal(h(x ^ y), h(x) ^ h(y))


def test_linearity_large_input():
    rng = np.random.default_rng(5)
    h = ToeplitzHash.sample(50_000, 20_000, seed=6)
    x = rng.integers(0, 2, 50_000, dtype=np.uint8)
    y = rng.integers(0, 2, 50_000, dtype=np.uint8)
    assert np.array_equal(h(x ^ y), h(x) ^ h(y))


def collision_rate(in_len: int, out_len: int, diff: np.ndarray, samples: int, seed: int) -> float:
    """Fraction of sampled hashes with h(x) = h(x') for fixed x ^ x' = diff.

    By linearity a collision happens iff the hash of the difference vanishes,
    so the rate is estimated by hashing ``diff`` under ``samples`` members.
    """
    collisions = 0
    for s in range(samples):
        h = ToeplitzHash.sample(in_len, out_len, seed=seed + s)
        collisions += not h(diff).any()
    return collisions / samples


@pytest.mark.parametrize("out_len", [4, 8, 12])
def test_universal2_collision_bound(out_len):
    rng = np.random.default_rng(out_len)
    in_len = 32
    diff = rng.integers(0, 2, in_len, dtype=np.uint8)
    if not diff.any():
        diff[0] = 1
    samples = 30_000
    rate = collision_rate(in_len, out_len, diff, samples, seed=1000 * out_len)
    p = 2.0**-out_len
    sigma = np.sqrt(p * (1 - p) / samples)
    assert rate <= p + 3 * sigma


def test_single_bit_difference_collision_bound():
    diff = np.zeros(32, dtype=np.uint8)
    diff[17] = 1
    rate = collision_rate(32, 8, diff, 20_000, seed=77)
    p = 2.0**-8
    sigma = np.sqrt(p * (1 - p) / 20_000)
    assert rate <= p + 3 * sigma


def test_serialization_roundtrip():
    h = ToeplitzHash.sample(40, 10, seed=99)
    h2 = ToeplitzHash.from_json(h.to_json())
    assert np.array_equal(h.diagonals, h2.diagonals)
    assert h.to_json() == {"seed": 99, "in_len": 40, "out_len": 10}


def test_pack_unpack_little_endian():
    bits = np.array([1, 0, 0, 0, 0, 0, 0, 0, 1], dtype=np.uint8)
    data = pack_bits(bits)
    assert data[0] == 1  # least significant bit first within the byte
    assert np.array_equal(unpack_bits(data, 9), bits)
    with pytest.raises(ValueError):
        unpack_bits(data, 99)
