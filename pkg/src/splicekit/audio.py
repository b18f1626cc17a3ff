"""Audio container, WAV I/O, resampling, and FFT convolution primitives.

All pipeline audio is mono float. Files of any rate can be read; the rest of
the toolkit works at a fixed 16 kHz rate, so callers normally resample right
after loading. Every operation here is a pure function over immutable inputs.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import oaconvolve, upfirdn

from .errors import ContractError, FormatError, UnsupportedFormatError

WORKING_RATE = 16000

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class AudioSignal:
    """Mono PCM samples (float, nominally in [-1, 1]) plus their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ContractError(f"AudioSignal expects 1-D samples, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("AudioSignal samples must be finite")
        if self.sample_rate <= 0:
            raise ContractError(f"sample_rate must be positive, got {self.sample_rate}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self.samples) else 0.0


@dataclass(frozen=True)
class ImpulseResponse:
    """Room impulse response taps at a given rate.

    kind is "synthetic" (stochastic decaying-noise model, rt60 set) or
    "measured" (loaded from a recording, rt60 None).
    """

    taps: np.ndarray
    sample_rate: int
    kind: str = "synthetic"
    rt60: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.taps, dtype=np.float64)
        if arr.ndim != 1 or len(arr) == 0:
            raise ContractError("ImpulseResponse taps must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ContractError("ImpulseResponse taps must be finite")
        if self.kind not in ("synthetic", "measured"):
            raise ContractError(f"unknown impulse response kind {self.kind!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "taps", arr)


def load_wav(path) -> AudioSignal:
    """Read a RIFF/WAVE file (PCM16 or float32) as a mono AudioSignal.

    Multichannel content is downmixed by arithmetic mean; sample values are
    scaled to [-1, 1]. Raises FormatError for malformed containers and
    UnsupportedFormatError for encodings other than 16-bit PCM / 32-bit float.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if len(body) < size and cid in (b"fmt ", b"data"):
            raise FormatError(f"{path}: truncated {cid.decode(errors='replace').strip()} chunk")
        if cid == b"fmt ":
            if size < 16:
                raise FormatError(f"{path}: fmt chunk too short ({size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == _WAVE_FORMAT_EXTENSIBLE:
                # true format tag lives in the first 2 bytes of the subformat GUID
                if size < 40:
                    raise FormatError(f"{path}: extensible fmt chunk too short")
                (sub,) = struct.unpack_from("<H", body, 24)
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise FormatError(f"{path}: missing fmt chunk")
    if data is None:
        raise FormatError(f"{path}: missing data chunk")

    tag, channels, rate, _, _, bits = fmt
    if channels < 1:
        raise FormatError(f"{path}: invalid channel count {channels}")
    if tag == _WAVE_FORMAT_PCM and bits == 16:
        frames = np.frombuffer(data[: len(data) - len(data) % (2 * channels)], dtype="<i2")
        samples = frames.astype(np.float64) / 32768.0
    elif tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        frames = np.frombuffer(data[: len(data) - len(data) % (4 * channels)], dtype="<f4")
        samples = frames.astype(np.float64)
    else:
        raise UnsupportedFormatError(
            f"{path}: unsupported encoding (format tag {tag}, {bits}-bit); "
            "only 16-bit PCM and 32-bit float are handled"
        )

    if channels > 1:
        samples = samples[: len(samples) - len(samples) % channels]
        samples = samples.reshape(-1, channels).mean(axis=1)
    return AudioSignal(samples, int(rate))


def write_wav(path, sig: AudioSignal) -> None:
    """Write a mono 16-bit PCM WAV. Samples are clipped to [-1, 1] first."""
    clipped = np.clip(sig.samples, -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    data = pcm.tobytes()
    hdr = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    hdr += b"fmt " + struct.pack("<IHHIIHH", 16, _WAVE_FORMAT_PCM, 1,
                                 sig.sample_rate, sig.sample_rate * 2, 2, 16)
    hdr += b"data" + struct.pack("<I", len(data))
    Path(path).write_bytes(hdr + data)


def _design_lowpass(up: int, down: int, taps_per_phase: int = 64, beta: float = 8.0) -> tuple[np.ndarray, int]:
    """Kaiser-windowed sinc for rational resampling, normalized per phase.

    Per-phase normalization forces each polyphase branch to sum to exactly
    one, so DC passes through bit-exactly.
    """
    half = (taps_per_phase * up) // 2
    n = 2 * half + 1
    cutoff = 0.5 * min(1.0 / up, 1.0 / down)  # cycles/sample at the upsampled rate
    k = np.arange(n) - half
    h = 2.0 * cutoff * np.sinc(2.0 * cutoff * k) * np.kaiser(n, beta)
    for phase in range(up):
        s = h[phase::up].sum()
        if s != 0.0:
            h[phase::up] /= s
    return h, half


def resample(sig: AudioSignal, target_rate: int) -> AudioSignal:
    """Band-limited polyphase resampling to target_rate.

    Output length is round(len * target / source). Identity when the rates
    already match.
    """
    if target_rate <= 0:
        raise ContractError(f"target_rate must be positive, got {target_rate}")
    if target_rate == sig.sample_rate:
        return sig
    g = math.gcd(sig.sample_rate, target_rate)
    up, down = target_rate // g, sig.sample_rate // g
    h, half = _design_lowpass(up, down)

    n_out = int(round(len(sig) * target_rate / sig.sample_rate))
    # pad the filter so the group delay lands on an output sample boundary
    n_pre = (-half) % down
    n_skip = (half + n_pre) // down
    h = np.concatenate([np.zeros(n_pre), h])
    y = upfirdn(h, sig.samples, up, down)
    if len(y) < n_skip + n_out:
        y = np.concatenate([y, np.zeros(n_skip + n_out - len(y))])
    return AudioSignal(y[n_skip:n_skip + n_out], target_rate)


def convolve(sig: AudioSignal, ir: ImpulseResponse) -> AudioSignal:
    """FFT (overlap-add) convolution with an impulse response.

    The result is truncated to the input length and rescaled so its peak
    equals min(1, input peak), which keeps segment loudness comparable and
    prevents clipping.
    """
    if ir.sample_rate != sig.sample_rate:
        raise ContractError(
            f"sample rate mismatch: signal {sig.sample_rate} Hz vs impulse response {ir.sample_rate} Hz"
        )
    full = oaconvolve(sig.samples, ir.taps, mode="full")
    out = full[: len(sig)]
    peak = float(np.max(np.abs(out))) if len(out) else 0.0
    if peak > 0.0:
        out = out * (min(1.0, sig.peak) / peak)
    return AudioSignal(out, sig.sample_rate)


def synthetic_rir(rt60: float, sample_rate: int, rng: np.random.Generator) -> ImpulseResponse:
    """Stochastic room model: Gaussian noise with an exponential decay tail.

    The envelope decays 60 dB over rt60 seconds; the tail is kept until
    roughly -80 dB. Taps are peak-normalized.
    """
    if rt60 <= 0:
        raise ContractError(f"rt60 must be positive, got {rt60}")
    n = max(2, int(round(rt60 * sample_rate * 8.0 / 6.0)))
    t = np.arange(n) / sample_rate
    env = np.power(10.0, -3.0 * t / rt60)
    taps = rng.standard_normal(n) * env
    taps[0] = 1.0  # direct path
    taps /= np.max(np.abs(taps))
    return ImpulseResponse(taps, sample_rate, kind="synthetic", rt60=rt60)
