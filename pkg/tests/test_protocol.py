"""Wire protocol: encode/decode round-trips, framing, clock offset."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cue_ids, directions, unit_quats
from study360 import protocol as proto
from study360 import session as sess
from study360.config import Cue
from study360.protocol import (
    MAX_FRAME_BYTES,
    PROTOCOL_VERSION,
    STATE_LABELS,
    Biometric,
    Cmd,
    CueAck,
    CueMsg,
    Err,
    FrameDecoder,
    FrameError,
    Hello,
    Ping,
    Pong,
    Pose,
    ProtocolError,
    State,
    Welcome,
    decode,
    encode,
    estimate_offset,
    frame,
    unframe,
)

# --- strategies -----------------------------------------------------------

wire_ints = st.integers(min_value=0, max_value=10**9)
wire_floats = st.floats(min_value=0.0, max_value=500.0, allow_nan=False)
labels = st.sampled_from(STATE_LABELS)


@st.composite
def wire_cues(draw):
    kind = draw(st.sampled_from(("text", "arrow", "haptic")))
    return Cue(
        id=draw(cue_ids),
        at_ms=draw(st.integers(min_value=0, max_value=600_000)),
        duration_ms=draw(st.integers(min_value=1, max_value=60_000)),
        kind=kind,
        body="look here" if kind == "text" else None,
        target=None if kind == "text" else draw(directions),
        anchor=draw(directions),
    )


commands = st.one_of(
    st.just(sess.Start()),
    st.just(sess.Pause()),
    st.just(sess.Resume()),
    st.builds(sess.Seek, to_ms=wire_ints),
    st.just(sess.Stop()),
    st.builds(sess.InjectCue, cue=wire_cues()),
)

messages = st.one_of(
    st.builds(
        Hello,
        role=st.sampled_from(proto.ROLES),
        session_id=st.none() | cue_ids,
    ),
    st.builds(
        Welcome,
        session_id=cue_ids,
        server_time_ms=wire_ints,
        state=labels,
        position_ms=wire_ints,
    ),
    st.builds(Cmd, command=commands),
    st.builds(
        State,
        state=labels,
        position_ms=wire_ints,
        skipped=st.lists(cue_ids, max_size=4).map(tuple),
    ),
    st.builds(CueMsg, cue=wire_cues(), position_ms=st.none() | wire_ints),
    st.builds(CueAck, cue_id=cue_ids, t_ms=wire_ints),
    st.builds(Pose, t_ms=wire_ints, q=unit_quats()),
    st.builds(Biometric, t_ms=wire_ints, pulse_bpm=wire_floats),
    st.builds(Ping, t0_ms=wire_ints),
    st.builds(Pong, t0_ms=wire_ints, server_time_ms=wire_ints),
    st.builds(Err, code=cue_ids, message=st.text(max_size=20)),
)


# --- encode shape -----------------------------------------------------------


def test_every_message_is_one_json_line_with_version():
    for m in (
        Hello(role="headset"),
        Welcome("s1", 10, "loaded"),
        Cmd(sess.Start()),
        State("running", 40),
        CueAck("c", 5),
        Ping(1),
        Pong(1, 2),
        Err("nope"),
    ):
        text = encode(m)
        assert "\n" not in text
        obj = json.loads(text)
        assert obj["v"] == PROTOCOL_VERSION


def test_welcome_wire_shape_nests_state():
    obj = json.loads(encode(Welcome("lab-3", 1700, "paused", position_ms=420)))
    assert obj == {
        "type": "welcome",
        "session_id": "lab-3",
        "server_time_ms": 1700,
        "state": {"state": "paused", "position_ms": 420},
        "v": 1,
    }


def test_command_wire_shape_is_flat_action():
    obj = json.loads(encode(Cmd(sess.Seek(2500))))
    assert obj == {"type": "command", "action": "seek", "to_ms": 2500, "v": 1}


def test_state_omits_empty_skipped_and_keeps_nonempty():
    assert "skipped" not in json.loads(encode(State("running", 9)))
    obj = json.loads(encode(State("running", 9, skipped=("a", "b"))))
    assert obj["skipped"] == ["a", "b"]


def test_encode_rejects_unknown_state_label():
    with pytest.raises(ValueError):
        encode(State("sleeping", 0))


# --- decode ------------------------------------------------------------------


@given(messages)
@settings(max_examples=400, deadline=None)
def test_round_trip_identity(m):
    assert decode(encode(m)) == m


def test_decode_accepts_bytes():
    m = Ping(7)
    assert decode(encode(m).encode("utf-8")) == m


def test_decode_tolerates_unknown_keys():
    text = '{"type":"ping","t0_ms":3,"v":1,"debug":"x","trace_id":9}'
    assert decode(text) == Ping(3)


@pytest.mark.parametrize(
    "text,code",
    [
        ("{not json", "bad_json"),
        ('"just a string"', "bad_json"),
        ("[1,2,3]", "bad_json"),
        (b"\xff\xfe garbage", "bad_json"),
        ('{"type":"ping","t0_ms":3}', "missing_field"),  # no v
        ('{"type":"ping","t0_ms":3,"v":2}', "bad_version"),
        ('{"type":"warp","v":1}', "unknown_type"),
        ('{"type":"ping","v":1}', "missing_field"),
        ('{"type":"ping","t0_ms":true,"v":1}', "missing_field"),
        ('{"type":"ping","t0_ms":"3","v":1}', "missing_field"),
        ('{"type":"cue_ack","cue_id":"c","v":1}', "missing_field"),
        ('{"type":"hello","role":"pilot","protocol_version":1,"v":1}', "missing_field"),
        ('{"type":"state","state":"sleeping","position_ms":1,"v":1}', "missing_field"),
        ('{"type":"welcome","session_id":"s","server_time_ms":1,'
         '"state":"running","v":1}', "missing_field"),  # state must be object
        ('{"type":"biometric","t_ms":1,"pulse_bpm":"high","v":1}', "missing_field"),
        ('{"type":"command","action":"warp","v":1}', "missing_field"),
        ('{"type":"command","action":"seek","v":1}', "missing_field"),
    ],
)
def test_decode_rejects_with_stable_codes(text, code):
    with pytest.raises(ProtocolError) as exc:
        decode(text)
    assert exc.value.code == code


def test_pose_quaternion_is_renormalized():
    text = '{"type":"pose","t_ms":1,"q":[2.0,0.0,0.0,0.0],"v":1}'
    m = decode(text)
    assert m == Pose(t_ms=1, q=(1.0, 0.0, 0.0, 0.0))


@pytest.mark.parametrize(
    "q",
    [
        "[0.0,0.0,0.0,0.0]",  # zero norm
        "[1e-12,0.0,0.0,0.0]",  # below the degenerate floor
        "[1.0,0.0,0.0]",  # wrong arity
        '[1.0,0.0,"x",0.0]',
        "[1.0,0.0,NaN,0.0]",
    ],
)
def test_bad_quaternions_rejected(q):
    with pytest.raises(ProtocolError):
        decode('{"type":"pose","t_ms":1,"q":' + q + ',"v":1}')


def test_decode_never_raises_anything_else_on_junk():
    import random

    rng = random.Random(20_260_814)
    printable = "{}[]\":,abc0123456789.-+eE \t"
    for _ in range(2000):
        junk = "".join(rng.choice(printable) for _ in range(rng.randrange(0, 60)))
        try:
            decode(junk)
        except ProtocolError:
            pass  # the only acceptable failure mode


# --- framing -----------------------------------------------------------------


def test_frame_worked_example():
    assert frame("{}") == b"\x00\x00\x00\x02{}"


def test_unframe_splits_and_preserves_rest():
    buf = frame("{}") + frame('{"a":1}') + b"\x00"
    payload, rest = unframe(buf)
    assert payload == b"{}"
    payload, rest = unframe(rest)
    assert payload == b'{"a":1}'
    assert rest == b"\x00"


def test_unframe_truncated():
    with pytest.raises(FrameError) as exc:
        unframe(b"\x00\x00")
    assert exc.value.code == "truncated"
    with pytest.raises(FrameError) as exc:
        unframe(b"\x00\x00\x00\x05abc")
    assert exc.value.code == "truncated"


def test_oversize_frames_rejected_both_directions():
    with pytest.raises(FrameError) as exc:
        frame(b"x" * (MAX_FRAME_BYTES + 1))
    assert exc.value.code == "oversize"
    declared_huge = (MAX_FRAME_BYTES + 1).to_bytes(4, "big")
    with pytest.raises(FrameError) as exc:
        unframe(declared_huge + b"irrelevant")
    assert exc.value.code == "oversize"


def test_decoder_raises_on_oversize_header_before_body_arrives():
    dec = FrameDecoder()
    with pytest.raises(FrameError):
        dec.feed((MAX_FRAME_BYTES + 1).to_bytes(4, "big"))


def test_empty_payload_frames():
    dec = FrameDecoder()
    assert dec.feed(frame(b"") * 3) == [b"", b"", b""]


@given(
    st.lists(st.binary(min_size=0, max_size=40), min_size=1, max_size=8),
    st.data(),
)
@settings(max_examples=200, deadline=None)
def test_decoder_reassembles_across_arbitrary_chunk_boundaries(payloads, data):
    stream = b"".join(frame(p) for p in payloads)
    n_cuts = data.draw(st.integers(min_value=0, max_value=6))
    cuts = sorted(
        data.draw(st.integers(min_value=0, max_value=len(stream)))
        for _ in range(n_cuts)
    )
    chunks = []
    prev = 0
    for cut in cuts + [len(stream)]:
        chunks.append(stream[prev:cut])
        prev = cut
    dec = FrameDecoder()
    got = []
    for chunk in chunks:
        got.extend(dec.feed(chunk))
    assert got == payloads
    assert dec.pending_bytes() == 0


# --- clock alignment -----------------------------------------------------------


def test_offset_worked_example():
    # sent at local 100, server stamped 1050, reply landed at local 140
    assert estimate_offset(100, 1050, 140) == (930.0, 40.0)


def test_offset_zero_rtt():
    assert estimate_offset(500, 700, 500) == (200.0, 0.0)


def test_offset_rejects_reply_before_send():
    with pytest.raises(ValueError):
        estimate_offset(100, 1050, 99)


@given(
    st.integers(min_value=0, max_value=10**8),  # send time
    st.integers(min_value=-10**6, max_value=10**6),  # true clock offset
    st.integers(min_value=0, max_value=5000),  # one-way delay
)
@settings(max_examples=300, deadline=None)
def test_offset_exact_under_symmetric_delay(t0, true_offset, delay):
    server_stamp = t0 + delay + true_offset
    t1 = t0 + 2 * delay
    offset, rtt = estimate_offset(t0, server_stamp, t1)
    assert offset == true_offset
    assert rtt == 2 * delay
