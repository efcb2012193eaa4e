import random

from hypothesis import given, settings, strategies as st

from georag.crc64 import crc64, crc64_bitwise

CHECK_VALUE = 0x6C40DF5F0B497347  # CRC-64/ECMA-182 catalogue value for b"123456789"


def test_catalogue_check_value():
    assert crc64(b"123456789") == CHECK_VALUE
    assert crc64_bitwise(b"123456789") == CHECK_VALUE


def test_empty_is_zero():
    assert crc64(b"") == 0


def test_matches_bitwise_reference_across_sizes():
    rng = random.Random(42)
    # straddle word alignment and the lane-path threshold (2 * 4096 words)
    for n in [1, 7, 8, 9, 63, 64, 65, 100, 1023, 4096, 65528, 65536, 65544, 70001]:
        data = rng.randbytes(n)
        init = rng.getrandbits(64)
        if n <= 4096:
            assert crc64(data) == crc64_bitwise(data), n
            assert crc64(data, init) == crc64_bitwise(data, init), n
        else:
            # bitwise reference is too slow here; check the split identity
            # against a small bitwise-verified prefix instead
            mid = n // 2
            assert crc64(data[mid:], crc64(data[:mid], init)) == crc64(data, init), n


def test_lane_path_against_bitwise_reference():
    data = random.Random(1).randbytes(80_000)  # well past the lane threshold
    assert crc64(data) == crc64_bitwise(data)


def test_chaining_equals_concatenation():
    rng = random.Random(3)
    for _ in range(20):
        a = rng.randbytes(rng.randrange(0, 2000))
        b = rng.randbytes(rng.randrange(0, 2000))
        assert crc64(b, crc64(a)) == crc64(a + b)


def test_single_bit_flip_changes_crc():
    data = bytearray(random.Random(5).randbytes(4096))
    base = crc64(bytes(data))
    data[1234] ^= 0x10
    assert crc64(bytes(data)) != base


@settings(max_examples=150)
@given(st.binary(max_size=600), st.integers(min_value=0, max_value=2**64 - 1))
def test_fold_equals_bitwise(data, init):
    assert crc64(data, init) == crc64_bitwise(data, init)
