import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btcvote.group import CRYPTO, GROUPS, TEST, TINY, get_group, keygen


def naive_power(params, k):
    """g^k by k-1 plain multiplications, no square-and-multiply."""
    acc = 1
    for _ in range(k):
        acc = acc * params.g % params.p
    return acc


@pytest.mark.parametrize("params", [TINY, TEST, CRYPTO], ids=lambda g: g.name)
def test_parameter_sanity(params):
    assert gmpy2.is_prime(params.q) and gmpy2.is_prime(params.p)
    assert (params.p - 1) % params.q == 0
    assert params.g != 1 and pow(params.g, params.q, params.p) == 1


def test_group_sizes():
    assert TEST.q < 2**16 and TINY.q <= 251
    assert CRYPTO.q >= 2**250


def test_get_group():
    assert get_group("test") is TEST
    assert set(GROUPS) == {"crypto", "test", "tiny"}
    with pytest.raises(ValueError):
        get_group("secp256k1")


def test_keygen_deterministic():
    assert keygen(TEST, b"A") == keygen(TEST, b"A")
    assert keygen(TEST, b"A") != keygen(TEST, b"B")


@pytest.mark.parametrize("seed", [b"A", b"seed-1", b"\x00" * 32])
def test_keygen_matches_naive_exponentiation(seed):
    kp = keygen(TEST, seed)
    assert 1 <= kp.sk < TEST.q
    assert kp.pk == naive_power(TEST, kp.sk)


@settings(max_examples=50, deadline=None)
@given(st.binary(min_size=1, max_size=64))
def test_keygen_definitional(seed):
    kp = keygen(CRYPTO, seed)
    assert 0 < kp.sk < CRYPTO.q
    assert kp.pk == pow(CRYPTO.g, kp.sk, CRYPTO.p)


def test_element_encoding_round_trip():
    kp = keygen(CRYPTO, b"enc")
    data = CRYPTO.encode_element(kp.pk)
    assert len(data) == CRYPTO.element_len
    assert CRYPTO.decode_element(data) == kp.pk


def test_decode_rejects_non_members():
    with pytest.raises(ValueError):
        TINY.decode_element(TINY.encode_element(5))  # 5 is a non-residue mod 503
    with pytest.raises(ValueError):
        TINY.decode_element(b"\x00" * (TINY.element_len + 1))


def test_scalar_from_seed_nonzero():
    scalars = {TINY.scalar_from_seed(bytes([i]), b"x") for i in range(256)}
    assert 0 not in scalars and all(s < TINY.q for s in scalars)
