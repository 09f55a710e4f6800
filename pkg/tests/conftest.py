import struct

import numpy as np
import pytest

from embdiag.data_model import ClipMetadata, EmbeddingTable, LabeledDataset


def make_table(rows, clip_ids=None, model_id="m"):
    rows = np.asarray(rows, dtype=np.float32)
    if clip_ids is None:
        clip_ids = tuple(f"c{i}" for i in range(rows.shape[0]))
    return EmbeddingTable(model_id=model_id, rows=rows, clip_ids=tuple(clip_ids))


def make_meta(clip_id, recording_id="r0", label="A", split="train", dataset="d",
              start_s=0.0, duration_s=1.0):
    return ClipMetadata(clip_id=clip_id, recording_id=recording_id, label=label,
                        split=split, dataset=dataset, start_s=start_s, duration_s=duration_s)


def make_dataset(rows, recs, labels, splits, clip_ids=None, model_id="m"):
    """Build a LabeledDataset from parallel per-clip attribute lists."""
    table = make_table(rows, clip_ids=clip_ids, model_id=model_id)
    meta = tuple(
        make_meta(cid, recording_id=r, label=l, split=s, start_s=float(i))
        for i, (cid, r, l, s) in enumerate(zip(table.clip_ids, recs, labels, splits))
    )
    return LabeledDataset(table=table, meta=meta)


def wav_bytes(samples, sample_rate=16000, fmt="pcm16", n_channels=1):
    """Minimal RIFF/WAVE encoder for test fixtures (interleaved input)."""
    samples = np.asarray(samples)
    if fmt == "pcm16":
        payload = np.asarray(np.round(samples * 32768.0), dtype="<i2").tobytes()
        audio_format, bits = 1, 16
    elif fmt == "float32":
        payload = samples.astype("<f4").tobytes()
        audio_format, bits = 3, 32
    else:
        raise ValueError(fmt)
    byte_rate = sample_rate * n_channels * bits // 8
    block_align = n_channels * bits // 8
    fmt_chunk = struct.pack("<HHIIHH", audio_format, n_channels, sample_rate,
                            byte_rate, block_align, bits)
    body = b"WAVE"
    body += b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) % 2:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
