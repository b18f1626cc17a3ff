"""Per-frame audio representations feeding the detector.

Three representations are computed on non-overlapping 500 ms frames of
16 kHz audio: a 256-band log-Mel spectrogram, 20 MFCCs, and the spectral
centroid. Each representation is min-max normalized to [-1, 1] per sample,
then concatenated frame-wise into a width-277 feature stack. The 500 ms hop
matches the detector's output label grid, so a maximum-length 45 s sample
yields 90 frames.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .audio import WORKING_RATE, AudioSignal
from .errors import ContractError, FormatError

FRAME_SECONDS = 0.5
MAX_DURATION = 45.0
MAX_FRAMES = 90
MEL_BANDS = 256
MFCC_COEFFS = 20
MEL_FMIN = 0.0
MEL_FMAX = 8000.0
STACK_WIDTH = MEL_BANDS + MFCC_COEFFS + 1
LOG_EPS = 1e-10

_CACHE_MAGIC = b"SFFT"
_CACHE_VERSION = 1


@dataclass(frozen=True)
class FeatureStack:
    """Normalized per-frame features: rows are frames, columns [mel | mfcc | centroid]."""

    frames: np.ndarray
    source_duration: float
    frame_hop: float = FRAME_SECONDS

    def __post_init__(self):
        arr = np.ascontiguousarray(self.frames, dtype=np.float32)
        if arr.ndim != 2:
            raise ContractError(f"FeatureStack expects a 2-D frame matrix, got shape {arr.shape}")
        object.__setattr__(self, "frames", arr)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames.shape[1]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=4)
def mel_filterbank(n_mels: int = MEL_BANDS, n_fft: int | None = None,
                   sample_rate: int = WORKING_RATE) -> tuple[np.ndarray, np.ndarray]:
    """Triangular Mel filters on the rfft grid; returns (bank, center_freqs)."""
    if n_fft is None:
        n_fft = int(FRAME_SECONDS * sample_rate)
    mels = np.linspace(hz_to_mel(MEL_FMIN), hz_to_mel(MEL_FMAX), n_mels + 2)
    freqs = mel_to_hz(mels)
    fft_freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    bank = np.zeros((n_mels, len(fft_freqs)))
    for m in range(n_mels):
        lo, center, hi = freqs[m], freqs[m + 1], freqs[m + 2]
        rising = (fft_freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - fft_freqs) / max(hi - center, 1e-12)
        bank[m] = np.maximum(0.0, np.minimum(rising, falling))
    return bank, freqs[1:-1]


@lru_cache(maxsize=4)
def _dct_matrix(n_out: int, n_in: int) -> np.ndarray:
    # orthonormal DCT-II
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    mat = np.cos(np.pi * (2 * n + 1) * k / (2 * n_in))
    mat *= np.sqrt(2.0 / n_in)
    mat[0] *= np.sqrt(0.5)
    return mat


def _frame_signal(sig: AudioSignal) -> np.ndarray:
    if len(sig) == 0:
        raise ContractError("cannot compute features of an empty signal")
    if sig.sample_rate != WORKING_RATE:
        raise ContractError(f"features expect {WORKING_RATE} Hz audio, got {sig.sample_rate} Hz")
    frame = int(FRAME_SECONDS * sig.sample_rate)
    n_frames = -(-len(sig) // frame)  # ceil; last partial frame zero-padded
    padded = np.zeros(n_frames * frame)
    padded[: len(sig)] = sig.samples
    return padded.reshape(n_frames, frame)


def mel_spectrogram(sig: AudioSignal) -> np.ndarray:
    """Log-compressed 256-band Mel power spectrogram, one row per 500 ms frame."""
    frames = _frame_signal(sig)
    window = np.hanning(frames.shape[1])
    power = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2
    bank, _ = mel_filterbank()
    return np.log1p(power @ bank.T / LOG_EPS)


def mfcc(mel: np.ndarray) -> np.ndarray:
    """First 20 coefficients of the orthonormal DCT-II of each log-Mel frame."""
    mel = np.asarray(mel, dtype=np.float64)
    return mel @ _dct_matrix(MFCC_COEFFS, mel.shape[1]).T


def spectral_centroid(sig: AudioSignal) -> np.ndarray:
    """Magnitude-weighted mean frequency (Hz) per frame; 0 for empty frames."""
    frames = _frame_signal(sig)
    window = np.hanning(frames.shape[1])
    mag = np.abs(np.fft.rfft(frames * window, axis=1))
    freqs = np.fft.rfftfreq(frames.shape[1], 1.0 / sig.sample_rate)
    total = mag.sum(axis=1)
    weighted = mag @ freqs
    out = np.zeros((len(frames), 1))
    live = total >= 1e-12
    out[live, 0] = weighted[live] / total[live]
    return out


def _minmax_normalize(rep: np.ndarray) -> np.ndarray:
    lo, hi = float(rep.min()), float(rep.max())
    if hi - lo <= 0.0:
        return np.zeros_like(rep)
    return 2.0 * (rep - lo) / (hi - lo) - 1.0


def assemble(sig: AudioSignal, mel_only: bool = False) -> FeatureStack:
    """Build the model input: per-representation [-1,1] normalization, then
    frame-wise concatenation [mel | mfcc | centroid] (width 277), or just the
    normalized Mel rows (width 256) in single-input mode."""
    if sig.duration > MAX_DURATION + 1e-9:
        raise ContractError(f"duration {sig.duration:.2f} s exceeds the {MAX_DURATION:.0f} s limit")
    mel = mel_spectrogram(sig)
    if mel_only:
        return FeatureStack(_minmax_normalize(mel), source_duration=sig.duration)
    parts = [
        _minmax_normalize(mel),
        _minmax_normalize(mfcc(mel)),
        _minmax_normalize(spectral_centroid(sig)),
    ]
    return FeatureStack(np.concatenate(parts, axis=1), source_duration=sig.duration)


def frame_count(duration: float) -> int:
    """Number of 500 ms feature frames for a signal of the given duration."""
    return -(-int(round(duration * WORKING_RATE)) // int(FRAME_SECONDS * WORKING_RATE))


def save_features(path, stack: FeatureStack) -> None:
    """Write a feature cache file: magic, version, frames, width, f32 rows."""
    n, w = stack.frames.shape
    header = _CACHE_MAGIC + struct.pack("<HII", _CACHE_VERSION, n, w)
    Path(path).write_bytes(header + stack.frames.astype("<f4").tobytes())


def load_features(path) -> FeatureStack:
    raw = Path(path).read_bytes()
    if len(raw) < 14 or raw[:4] != _CACHE_MAGIC:
        raise FormatError(f"{path}: not a feature cache file")
    version, n, w = struct.unpack_from("<HII", raw, 4)
    if version != _CACHE_VERSION:
        raise FormatError(f"{path}: unsupported cache version {version}")
    body = raw[14:]
    if len(body) < 4 * n * w:
        raise FormatError(f"{path}: truncated cache payload")
    frames = np.frombuffer(body[: 4 * n * w], dtype="<f4").reshape(n, w)
    return FeatureStack(frames, source_duration=n * FRAME_SECONDS)
