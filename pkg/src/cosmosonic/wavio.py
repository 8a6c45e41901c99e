"""Linear PCM RIFF/WAVE reading and writing (16, 24 or 32 bit, stereo)."""

from __future__ import annotations

import wave

import numpy as np

from .dsp import AudioBuffer
from .errors import ContractError

_CHUNK = 1 << 18


def _full_scale(bit_depth):
    if bit_depth not in (16, 24, 32):
        raise ContractError(f"unsupported bit depth {bit_depth}")
    return (1 << (bit_depth - 1)) - 1


def encode_pcm(left, right, bit_depth):
    """Interleaved little-endian PCM bytes; +1.0 maps to the largest code."""
    scale = _full_scale(bit_depth)
    frames = np.empty((len(left), 2))
    frames[:, 0] = left
    frames[:, 1] = right
    if not np.all(np.isfinite(frames)):
        raise ContractError("cannot encode non-finite samples")
    codes = np.rint(np.clip(frames, -1.0, 1.0) * scale).astype("<i4")
    if bit_depth == 16:
        return codes.astype("<i2").tobytes()
    if bit_depth == 32:
        return codes.tobytes()
    return codes.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()


def write_audio(buffer, path, bit_depth=24):
    """Write ``buffer`` as a stereo WAV file, in chunks to bound memory."""
    width = bit_depth // 8
    _full_scale(bit_depth)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(2)
        wf.setsampwidth(width)
        wf.setframerate(int(buffer.sample_rate))
        for start in range(0, len(buffer), _CHUNK):
            stop = start + _CHUNK
            wf.writeframes(encode_pcm(buffer.left[start:stop], buffer.right[start:stop], bit_depth))
    return path


def read_audio(path):
    """Read a PCM WAV file back into an :class:`AudioBuffer` and its bit depth."""
    with wave.open(str(path), "rb") as wf:
        channels, width, sr, n = wf.getnchannels(), wf.getsampwidth(), wf.getframerate(), wf.getnframes()
        raw = wf.readframes(n)
    bit_depth = width * 8
    scale = _full_scale(bit_depth)
    if width == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3)
        codes = (b[:, 0].astype(np.int32) | (b[:, 1].astype(np.int32) << 8) | (b[:, 2].astype(np.int32) << 16))
        codes = np.where(codes >= 1 << 23, codes - (1 << 24), codes)
    else:
        codes = np.frombuffer(raw, dtype="<i2" if width == 2 else "<i4").astype(np.int64)
    samples = codes.reshape(-1, channels) / scale
    right = samples[:, 1] if channels > 1 else samples[:, 0]
    return AudioBuffer(sr, samples[:, 0].copy(), right.copy()), bit_depth
