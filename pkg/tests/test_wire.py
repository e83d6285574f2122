import struct

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from vdfcommittee import wire

names = st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=12)
values = st.one_of(
    st.integers(min_value=-(2 ** 63), max_value=2 ** 63 - 1),
    st.floats(allow_nan=False),
    st.binary(max_size=64),
    st.text(max_size=20),
)


@settings(deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.sampled_from(list(wire.Tag)), st.dictionaries(names, values, max_size=6))
def test_round_trip(tag, fields):
    got_tag, got = wire.decode(wire.encode(tag, **fields))
    assert got_tag == tag
    assert got == fields
    assert list(got) == list(fields)


def test_layout_by_hand():
    data = wire.encode(wire.Tag.BBA_ACK, round=3)
    expected = struct.pack(">BH", 8, 1) + b"\x05round" + b"i" + struct.pack(">I", 8) + struct.pack(">q", 3)
    assert data == expected


def test_deterministic_bytes():
    a = wire.encode(wire.Tag.VOTE, epoch=1, voter=2, target=b"t")
    assert a == wire.encode(wire.Tag.VOTE, epoch=1, voter=2, target=b"t")
    assert a != wire.encode(wire.Tag.VOTE, voter=2, epoch=1, target=b"t")


def test_rejects_trailing_bytes_and_bad_types():
    with pytest.raises(ValueError):
        wire.decode(wire.encode(wire.Tag.VOTE, a=1) + b"\x00")
    with pytest.raises(TypeError):
        wire.encode(wire.Tag.VOTE, a=[1])
