"""Online decision scheduling: buffer detected speech until 3 minutes are
available, diarize, keep the newest 2 minutes so the next decision needs only
1 new minute, and track decision latency."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .errors import NotTriggered, OutOfOrderSegment
from .segments import LabeledSegmentation

_TOL = 1e-9

DEFAULT_TARGET_S = 180.0
DEFAULT_CARRYOVER_S = 120.0


@dataclass
class _Chunk:
    start_s: float
    end_s: float
    carried: bool = False  # survived a carryover (already analyzed at least once)

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class TriggerSignal:
    buffer_span: tuple[float, float]
    buffered_speech_s: float
    new_speech_start_s: float  # source time of the oldest not-yet-analyzed speech


@dataclass(frozen=True)
class DecisionEvent:
    trigger_wall_time_s: float
    buffer_span: tuple[float, float]
    speaker_count: int | None  # None when the pipeline failed for this buffer
    latency_s: float
    error: str | None = None

    def to_json_obj(self) -> dict:
        return {
            "trigger_wall_time_s": round(self.trigger_wall_time_s, 6),
            "buffer_span": [round(self.buffer_span[0], 6), round(self.buffer_span[1], 6)],
            "speaker_count": self.speaker_count,
            "latency_s": round(self.latency_s, 6),
            "error": self.error,
        }


class SpeechBuffer:
    """Single-threaded speech accumulator with threshold trigger and carryover.

    Chunks must arrive in source-time order. push_speech returns a TriggerSignal
    once buffered speech reaches target_s; carryover() is then legal exactly once
    and retains the newest carryover_s seconds of speech, splitting a chunk at
    the boundary if needed.
    """

    def __init__(self, target_s: float = DEFAULT_TARGET_S, carryover_s: float = DEFAULT_CARRYOVER_S):
        if not (0.0 < carryover_s < target_s):
            raise ValueError(f"need 0 < carryover_s < target_s, got {carryover_s}/{target_s}")
        self.target_s = target_s
        self.carryover_s = carryover_s
        self.chunks: list[_Chunk] = []
        self.buffered_speech_s = 0.0
        self._armed = False

    @property
    def buffer_span(self) -> tuple[float, float] | None:
        if not self.chunks:
            return None
        return (self.chunks[0].start_s, self.chunks[-1].end_s)

    def push_speech(self, start_s: float, end_s: float) -> TriggerSignal | None:
        if end_s - start_s <= 0.0:
            raise ValueError(f"speech chunk must have positive duration: [{start_s}, {end_s})")
        if self.chunks and start_s < self.chunks[-1].end_s - _TOL:
            raise OutOfOrderSegment(
                f"chunk starting at {start_s} precedes buffered end {self.chunks[-1].end_s}"
            )
        self.chunks.append(_Chunk(start_s, end_s))
        self.buffered_speech_s += end_s - start_s
        if self.buffered_speech_s >= self.target_s - _TOL:
            self._armed = True
            new_chunks = [c for c in self.chunks if not c.carried]
            return TriggerSignal(
                buffer_span=self.buffer_span,
                buffered_speech_s=self.buffered_speech_s,
                new_speech_start_s=new_chunks[0].start_s if new_chunks else start_s,
            )
        return None

    def carryover(self) -> None:
        if not self._armed:
            raise NotTriggered("carryover() is only legal immediately after a trigger")
        keep: list[_Chunk] = []
        need = self.carryover_s
        for chunk in reversed(self.chunks):
            if need <= _TOL:
                break
            if chunk.duration_s <= need + _TOL:
                keep.append(chunk)
                need -= chunk.duration_s
            else:
                keep.append(_Chunk(chunk.end_s - need, chunk.end_s))
                need = 0.0
        keep.reverse()
        for chunk in keep:
            chunk.carried = True
        self.chunks = keep
        self.buffered_speech_s = self.carryover_s
        self._armed = False

    def spans(self) -> list[tuple[float, float]]:
        return [(c.start_s, c.end_s) for c in self.chunks]


def replay(
    recording,
    pipeline,
    *,
    target_s: float = DEFAULT_TARGET_S,
    carryover_s: float = DEFAULT_CARRYOVER_S,
    real_time: bool = False,
    segmenter=None,
    on_event=None,
) -> list[DecisionEvent]:
    """Feed a recording's speech through the buffer and fire the pipeline on each
    trigger.

    recording is a LabeledSegmentation, a list of (start_s, end_s) speech spans,
    or an AudioClip (then segmenter(clip) must produce the spans). Incoming spans
    are split exactly at the trigger threshold, so trigger times are exact in
    virtual time. pipeline(spans) returns a speaker count; a pipeline exception
    is recorded on the event instead of aborting the replay.
    """
    if isinstance(recording, LabeledSegmentation):
        spans = recording.spans()
    elif isinstance(recording, (list, tuple)):
        spans = [(float(a), float(b)) for a, b in recording]
    else:
        if segmenter is None:
            raise TypeError("replaying an AudioClip requires a segmenter callable")
        segmented = segmenter(recording)
        spans = segmented.spans() if isinstance(segmented, LabeledSegmentation) else list(segmented)

    buffer = SpeechBuffer(target_s=target_s, carryover_s=carryover_s)
    events: list[DecisionEvent] = []
    t_start = time.monotonic()
    for start_s, end_s in spans:
        pos = start_s
        while pos < end_s - _TOL:
            room = buffer.target_s - buffer.buffered_speech_s
            take_end = min(end_s, pos + max(room, 0.0))
            if take_end <= pos + _TOL:
                take_end = end_s
            trigger = buffer.push_speech(pos, take_end)
            pos = take_end
            if trigger is None:
                continue
            wall = take_end if not real_time else time.monotonic() - t_start
            if real_time:
                lag = take_end - (time.monotonic() - t_start)
                if lag > 0:
                    time.sleep(lag)
                    wall = take_end
            buffer_spans = buffer.spans()
            try:
                count = int(pipeline(buffer_spans))
                error = None
            except Exception as exc:  # per-event failure, replay continues
                count = None
                error = f"{type(exc).__name__}: {exc}"
            event = DecisionEvent(
                trigger_wall_time_s=wall,
                buffer_span=trigger.buffer_span,
                speaker_count=count,
                latency_s=wall - trigger.new_speech_start_s,
                error=error,
            )
            events.append(event)
            if on_event is not None:
                on_event(event)
            buffer.carryover()
    return events
