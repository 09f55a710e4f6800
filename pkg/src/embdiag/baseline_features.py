"""Baseline featurizer: log-mel spectrogram with temporal mean pooling.

Frames are taken fully inside the signal (no padding or centering), with a
periodic Hann window. The mel grid uses the file's own sample rate; no
resampling happens here. Natural log with an additive floor; any fixed log
base or filter scaling is absorbed downstream by probe standardization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BASELINE_MODEL_ID = "baseline-logmel"


@dataclass(frozen=True)
class MelConfig:
    n_mels: int = 128
    n_fft: int = 1024
    hop: int = 512
    f_min: float = 0.0
    f_max: float | None = None  # None -> sample_rate / 2
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.n_mels < 1:
            raise ValueError(f"n_mels must be >= 1, got {self.n_mels}")
        if not (0 < self.hop <= self.n_fft):
            raise ValueError(f"hop must satisfy 0 < hop <= n_fft, got hop={self.hop}, n_fft={self.n_fft}")
        if self.f_min < 0:
            raise ValueError(f"f_min must be >= 0, got {self.f_min}")
        if self.log_floor <= 0:
            raise ValueError(f"log_floor must be > 0, got {self.log_floor}")

    def resolve_f_max(self, sample_rate: int) -> float:
        f_max = sample_rate / 2 if self.f_max is None else self.f_max
        if not (self.f_min < f_max <= sample_rate / 2):
            raise ValueError(
                f"need f_min < f_max <= sample_rate/2, got f_min={self.f_min}, "
                f"f_max={f_max}, sample_rate={sample_rate}"
            )
        return f_max


def _hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_power(samples, n_fft: int, hop: int) -> np.ndarray:
    """Magnitude-squared one-sided spectrum of Hann-windowed frames.

    Frame count is floor((len - n_fft)/hop) + 1; inputs shorter than one
    frame are rejected.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("samples must be 1-D")
    if not (0 < hop <= n_fft):
        raise ValueError(f"hop must satisfy 0 < hop <= n_fft, got hop={hop}, n_fft={n_fft}")
    if x.shape[0] < n_fft:
        raise ValueError(f"need at least n_fft={n_fft} samples, got {x.shape[0]}")
    frames = np.lib.stride_tricks.sliding_window_view(x, n_fft)[::hop]
    spectrum = np.fft.rfft(frames * _hann_periodic(n_fft), axis=1)
    return np.abs(spectrum) ** 2


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig, sample_rate: int) -> np.ndarray:
    """Triangular filters with peaks uniformly spaced on the mel scale.

    Each row is normalized to peak value 1 on the FFT-bin grid; a row with
    no positive bin means n_mels exceeds the frequency resolution.
    """
    f_max = cfg.resolve_f_max(sample_rate)
    n_bins = cfg.n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * sample_rate / cfg.n_fft

    mel_pts = np.linspace(hz_to_mel(cfg.f_min), hz_to_mel(f_max), cfg.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    hz_pts[0], hz_pts[-1] = cfg.f_min, f_max  # undo mel round-trip rounding

    fb = np.zeros((cfg.n_mels, n_bins))
    for i in range(cfg.n_mels):
        lo, mid, hi = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            rising = np.where(mid > lo, (bin_hz - lo) / (mid - lo), 0.0)
            falling = np.where(hi > mid, (hi - bin_hz) / (hi - mid), 0.0)
        row = np.maximum(0.0, np.minimum(rising, falling))
        peak = row.max()
        if peak <= 0.0:
            raise ValueError(
                f"mel filter {i} has no positive FFT bin: n_mels={cfg.n_mels} is too "
                f"large for n_fft={cfg.n_fft} at {sample_rate} Hz"
            )
        fb[i] = row / peak
    return fb


def baseline_embedding(samples, sample_rate: int, cfg: MelConfig = MelConfig()) -> np.ndarray:
    """log(mel power + floor) per frame, mean-pooled over time."""
    power = stft_power(samples, cfg.n_fft, cfg.hop)
    fb = mel_filterbank(cfg, sample_rate)
    logmel = np.log(power @ fb.T + cfg.log_floor)
    return logmel.mean(axis=0)
