"""Extraction pipeline: WAV clips -> .emb + metadata CSV.

Per clip: read channel 0, linearly resample to the model's rate, cut into
consecutive non-overlapping windows of the model's size (zero-padding the
tail), run the model, and mean-pool every frame embedding into one vector.
Clips shorter than a single window are zero-padded and counted; the count
is reported so silent data problems stay visible.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .emb_io import read_metadata_rows, write_emb, write_metadata_rows
from .runners import make_runner
from .specs import ExtractorSpec

log = logging.getLogger("embextract")


@dataclass(frozen=True)
class ExtractResult:
    emb_path: str
    csv_path: str
    n_clips: int
    dim: int
    n_padded_short: int


def read_wav_mono(path) -> tuple[int, np.ndarray]:
    """Channel 0 of a PCM16 or float32 RIFF/WAVE file, int16 scaled by 1/32768."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ValueError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise ValueError(f"{path}: chunk {cid!r} truncated")
        if cid == b"fmt ":
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None or payload is None:
        raise ValueError(f"{path}: missing fmt or data chunk")
    audio_format, n_channels, rate, _, _, bits = fmt
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (2 * n_channels)], "<i2")
        return int(rate), raw[::n_channels].astype(np.float64) / 32768.0
    if audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (4 * n_channels)], "<f4")
        return int(rate), raw[::n_channels].astype(np.float64)
    raise ValueError(f"{path}: unsupported encoding (format={audio_format}, bits={bits})")


def resample_linear(samples: np.ndarray, rate_in: int, rate_out: int) -> np.ndarray:
    if rate_in == rate_out:
        return samples
    n_out = max(1, int(round(len(samples) * rate_out / rate_in)))
    t_out = np.arange(n_out) * (rate_in / rate_out)
    return np.interp(t_out, np.arange(len(samples)), samples)


def cut_windows(samples: np.ndarray, window: int) -> tuple[np.ndarray, bool]:
    """Consecutive windows covering the clip; the tail is zero-padded.

    Returns (windows, was_short) where was_short marks clips shorter than
    one full window.
    """
    if samples.size == 0:
        raise ValueError("empty clip")
    n = int(np.ceil(samples.size / window))
    padded = np.zeros(n * window)
    padded[: samples.size] = samples
    return padded.reshape(n, window), samples.size < window


def embed_clip(samples: np.ndarray, rate: int, spec: ExtractorSpec, run) -> tuple[np.ndarray, bool]:
    """One pooled embedding vector for a clip."""
    resampled = resample_linear(samples, rate, spec.sample_rate)
    windows, was_short = cut_windows(resampled, spec.window_samples)
    frames = np.asarray(run(windows), dtype=np.float64)
    if frames.ndim == 2:  # runner pooled each window already
        frames = frames[:, None, :]
    if frames.ndim != 3 or frames.shape[0] != windows.shape[0] or frames.shape[2] != spec.dim:
        raise ValueError(
            f"{spec.model}: runner returned shape {frames.shape}, expected "
            f"({windows.shape[0]}, n_frames, {spec.dim})"
        )
    pooled = frames.reshape(-1, spec.dim).mean(axis=0)
    return pooled, was_short


def extract(audio_dir, metadata_csv, spec: ExtractorSpec, out_emb, out_csv=None, runner=None) -> ExtractResult:
    """Run an adapter over every clip in the metadata CSV.

    Audio lives at <audio_dir>/<clip_id>.wav. The CSV is re-emitted next
    to the .emb in embedding row order so the pair is self-consistent.
    """
    rows_meta = read_metadata_rows(metadata_csv)
    if not rows_meta:
        raise ValueError(f"{metadata_csv}: no clips listed")
    run = runner if runner is not None else make_runner(spec)

    audio_dir = Path(audio_dir)
    vectors = []
    clip_ids = []
    n_short = 0
    for row in rows_meta:
        cid = row["clip_id"]
        wav = audio_dir / f"{cid}.wav"
        if not wav.exists():
            raise FileNotFoundError(f"no audio for clip {cid}: {wav}")
        rate, samples = read_wav_mono(wav)
        pooled, was_short = embed_clip(samples, rate, spec, run)
        if was_short:
            n_short += 1
        vectors.append(pooled.astype(np.float32))
        clip_ids.append(cid)
    if n_short:
        log.warning("%s: %d of %d clips shorter than one %gs window were zero-padded",
                    spec.model, n_short, len(clip_ids), spec.window_s)

    write_emb(spec.model, np.asarray(vectors, dtype=np.float32), clip_ids, out_emb)
    out_csv = out_csv or str(Path(out_emb).with_suffix(".csv"))
    write_metadata_rows(rows_meta, out_csv)
    return ExtractResult(
        emb_path=str(out_emb), csv_path=str(out_csv), n_clips=len(clip_ids),
        dim=spec.dim, n_padded_short=n_short,
    )
