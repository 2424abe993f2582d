import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixcoin.wire import MalformedPayload, bits_to_bytes, bytes_to_bits, pack, unpack

values = st.recursive(
    st.none() | st.booleans() | st.integers(-(2**200), 2**200) | st.binary(max_size=40) | st.text(max_size=20),
    lambda inner: st.lists(inner, max_size=5).map(tuple),
    max_leaves=20,
)


@given(values)
def test_round_trip(v):
    assert unpack(pack(v)) == v


@given(values)
def test_encoding_is_deterministic(v):
    assert pack(v) == pack(v)


def test_lists_come_back_as_tuples():
    assert unpack(pack([1, [2, b"x"]])) == (1, (2, b"x"))


@given(st.binary(max_size=30))
def test_garbage_never_crashes(data):
    try:
        unpack(data)
    except MalformedPayload:
        pass


def test_truncation_detected():
    with pytest.raises(MalformedPayload):
        unpack(pack((1, 2, 3))[:-1])
    with pytest.raises(TypeError):
        pack({1: 2})


def test_bit_helpers():
    assert bits_to_bytes(0b101, 3) == b"\x05"
    assert bytes_to_bits(b"\x01\x00", 16) == 256
