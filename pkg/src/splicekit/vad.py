"""Energy-based voice activity detection.

A frame counts as silent when its energy (in dBFS) falls below an adaptive
threshold: four times the 10th-percentile frame level, floored at -45 dBFS.
Only runs of at least 100 ms survive as silent intervals. Cut points for
forgeries are later placed at interval midpoints, so interval boundaries only
need frame-level accuracy.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioSignal
from .errors import ContractError

FRAME_SECONDS = 0.025
HOP_SECONDS = 0.010
MIN_SILENCE_SECONDS = 0.1
FLOOR_DBFS = -45.0
FLOOR_PERCENTILE = 10.0
FLOOR_SCALE = 4.0
_ENERGY_CLAMP = 1e-12  # -120 dBFS; keeps log well-defined for digital silence


def frame_energies_db(sig: AudioSignal) -> np.ndarray:
    """Per-frame mean-square energy in dBFS (25 ms frames, 10 ms hop)."""
    frame = int(round(FRAME_SECONDS * sig.sample_rate))
    hop = int(round(HOP_SECONDS * sig.sample_rate))
    n = max(1, 1 + (len(sig) - 1) // hop) if len(sig) < frame else 1 + (len(sig) - frame + hop - 1) // hop
    energies = np.empty(n)
    x = sig.samples
    for i in range(n):
        seg = x[i * hop: i * hop + frame]
        energies[i] = np.mean(np.square(seg, dtype=np.float64)) if len(seg) else 0.0
    return 10.0 * np.log10(np.maximum(energies, _ENERGY_CLAMP))


def detect_silence(sig: AudioSignal) -> list[tuple[float, float]]:
    """Return maximal non-voice-active intervals as (start_s, end_s) pairs.

    Intervals are sorted, disjoint, and at least 100 ms long. May be empty
    (e.g. for stationary loud signals, where the adaptive threshold sits
    below every frame).
    """
    if sig.duration < MIN_SILENCE_SECONDS:
        raise ContractError(f"signal too short for silence analysis ({sig.duration:.3f} s)")
    frame = int(round(FRAME_SECONDS * sig.sample_rate))
    hop = int(round(HOP_SECONDS * sig.sample_rate))
    edb = frame_energies_db(sig)
    floor_db = float(np.percentile(edb, FLOOR_PERCENTILE))
    threshold_db = max(FLOOR_SCALE * floor_db, FLOOR_DBFS)
    silent = edb < threshold_db

    intervals = []
    i = 0
    n = len(silent)
    while i < n:
        if not silent[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and silent[j + 1]:
            j += 1
        start = i * hop / sig.sample_rate
        # a run reaching the final frame extends to the end of the signal
        end = sig.duration if j == n - 1 else (j * hop + frame) / sig.sample_rate
        if i == 0:
            start = 0.0
        if end - start >= MIN_SILENCE_SECONDS:
            intervals.append((start, min(end, sig.duration)))
        i = j + 1
    return intervals
