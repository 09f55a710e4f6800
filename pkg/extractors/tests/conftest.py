import struct

import numpy as np
import pytest


def wav_bytes(samples, sample_rate=16000, fmt="pcm16", n_channels=1):
    samples = np.asarray(samples)
    if fmt == "pcm16":
        payload = np.asarray(np.round(samples * 32768.0), dtype="<i2").tobytes()
        audio_format, bits = 1, 16
    else:
        payload = samples.astype("<f4").tobytes()
        audio_format, bits = 3, 32
    fmt_chunk = struct.pack(
        "<HHIIHH", audio_format, n_channels, sample_rate,
        sample_rate * n_channels * bits // 8, n_channels * bits // 8, bits,
    )
    body = b"WAVE"
    body += b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) % 2:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def stub_runner(dim, frames_per_window=4):
    """Deterministic fake model: frame f of a window is a linear readout of
    the window content folded into `dim` features."""

    def run(windows):
        n, w = windows.shape
        reps = int(np.ceil(dim / w))
        folded = np.tile(windows, (1, reps))[:, :dim]
        out = np.empty((n, frames_per_window, dim))
        for f in range(frames_per_window):
            out[:, f, :] = folded * (f + 1) + np.mean(windows, axis=1, keepdims=True)
        return out

    return run


@pytest.fixture
def clip_fixture(tmp_path):
    """Three clips (two recordings, two labels) with a 0.3 s and a short 0.05 s clip."""
    audio = tmp_path / "audio"
    audio.mkdir()
    rng = np.random.default_rng(5)
    rate = 8000
    clips = {
        "clipA": 0.3 * np.sin(2 * np.pi * 300 * np.arange(int(0.3 * rate)) / rate),
        "clipB": 0.1 * rng.normal(size=int(0.3 * rate)).clip(-0.99, 0.99),
        "clipC": 0.2 * np.sin(2 * np.pi * 700 * np.arange(int(0.05 * rate)) / rate),
    }
    for cid, samples in clips.items():
        (audio / f"{cid}.wav").write_bytes(wav_bytes(samples, sample_rate=rate))
    csv = tmp_path / "meta.csv"
    csv.write_text(
        "clip_id,recording_id,label,split,dataset,start_s,duration_s\n"
        "clipA,r0,Tug,train,demo,0.0,0.3\n"
        "clipB,r1,Cargo,test,demo,0.0,0.3\n"
        "clipC,r0,Tug,train,demo,0.3,0.05\n"
    )
    return audio, csv
