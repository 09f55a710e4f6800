import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embdiag.data_model import AblationHistogram, DiagnosticsBlock, EvalReport
from embdiag.io_formats import (
    FormatError,
    read_embeddings,
    read_metadata_csv,
    read_report,
    read_wav,
    report_from_dict,
    report_markdown,
    report_to_dict,
    write_embeddings,
    write_metadata_csv,
    write_report,
)
from conftest import make_meta, make_table, wav_bytes


# ---------------------------------------------------------------------------
# .emb container
# ---------------------------------------------------------------------------

def test_emb_header_and_payload_size(tmp_path):
    t = make_table(np.arange(6).reshape(2, 3), model_id="demo")
    path = tmp_path / "t.emb"
    n = write_embeddings(t, path)
    raw = path.read_bytes()
    assert n == len(raw)
    header_line, rest = raw.split(b"\n", 1)
    header = json.loads(header_line)
    assert header == {"version": 1, "model": "demo", "dim": 3, "count": 2, "dtype": "f32le"}
    assert len(rest) == 2 * 3 * 4 + len(b"c0\nc1\n")


def test_emb_round_trip_identity(tmp_path):
    rows = np.array([[1.5, -2.25, 3e-8], [0.0, 7.0, -1.0]], dtype=np.float32)
    t = make_table(rows, clip_ids=("clip.a", "clip-b"), model_id="m1")
    path = tmp_path / "t.emb"
    write_embeddings(t, path)
    back = read_embeddings(path)
    assert back.model_id == t.model_id
    assert back.clip_ids == t.clip_ids
    np.testing.assert_array_equal(back.rows, t.rows)


def test_emb_write_is_byte_deterministic(tmp_path):
    t = make_table(np.random.default_rng(0).normal(size=(4, 5)))
    write_embeddings(t, tmp_path / "a.emb")
    write_embeddings(t, tmp_path / "b.emb")
    assert (tmp_path / "a.emb").read_bytes() == (tmp_path / "b.emb").read_bytes()


def test_emb_duplicate_clip_ids_rejected_on_write(tmp_path):
    t = make_table(np.eye(2), clip_ids=("x", "x"))
    with pytest.raises(FormatError, match="duplicate"):
        write_embeddings(t, tmp_path / "t.emb")


def test_emb_truncated_payload_rejected(tmp_path):
    t = make_table(np.eye(2))
    path = tmp_path / "t.emb"
    write_embeddings(t, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-10])
    with pytest.raises(FormatError):
        read_embeddings(path)


def test_emb_unsupported_dtype_rejected(tmp_path):
    path = tmp_path / "t.emb"
    header = {"version": 1, "model": "m", "dim": 1, "count": 1, "dtype": "f64le"}
    path.write_bytes(json.dumps(header).encode() + b"\n" + b"\x00" * 8 + b"c0\n")
    with pytest.raises(FormatError, match="dtype"):
        read_embeddings(path)


def test_emb_trailing_bytes_rejected(tmp_path):
    t = make_table(np.eye(2))
    path = tmp_path / "t.emb"
    write_embeddings(t, path)
    path.write_bytes(path.read_bytes() + b"extra\n")
    with pytest.raises(FormatError, match="clip ids"):
        read_embeddings(path)


def test_emb_non_finite_payload_rejected(tmp_path):
    path = tmp_path / "t.emb"
    header = {"version": 1, "model": "m", "dim": 1, "count": 1, "dtype": "f32le"}
    payload = np.array([np.inf], dtype="<f4").tobytes()
    path.write_bytes(json.dumps(header).encode() + b"\n" + payload + b"c0\n")
    with pytest.raises(FormatError, match="non-finite"):
        read_embeddings(path)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=8),
    d=st.integers(min_value=1, max_value=6),
    seed=st.integers(min_value=0, max_value=2**16),
)
def test_emb_round_trip_property(tmp_path_factory, n, d, seed):
    rng = np.random.default_rng(seed)
    t = make_table(rng.normal(scale=100, size=(n, d)).astype(np.float32),
                   model_id=f"m{seed}")
    path = tmp_path_factory.mktemp("emb") / "t.emb"
    write_embeddings(t, path)
    back = read_embeddings(path)
    assert back.model_id == t.model_id
    assert back.clip_ids == t.clip_ids
    np.testing.assert_array_equal(back.rows, t.rows)


# ---------------------------------------------------------------------------
# metadata CSV
# ---------------------------------------------------------------------------

def test_metadata_row_parses(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(
        "clip_id,recording_id,label,split,dataset,start_s,duration_s\n"
        "c1,r1,Tug,train,deepship,0.0,10.0\n"
    )
    (m,) = read_metadata_csv(p)
    assert (m.clip_id, m.recording_id, m.label, m.split) == ("c1", "r1", "Tug", "train")
    assert (m.dataset, m.start_s, m.duration_s) == ("deepship", 0.0, 10.0)


def test_metadata_strict_split_enum(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(
        "clip_id,recording_id,label,split,dataset,start_s,duration_s\n"
        "c1,r1,Tug,validation,deepship,0.0,10.0\n"
    )
    with pytest.raises(FormatError, match="split"):
        read_metadata_csv(p)


def test_metadata_zero_duration_rejected(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(
        "clip_id,recording_id,label,split,dataset,start_s,duration_s\n"
        "c1,r1,Tug,train,deepship,0.0,0\n"
    )
    with pytest.raises(FormatError, match="duration_s"):
        read_metadata_csv(p)


def test_metadata_missing_column_rejected(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("clip_id,recording_id,label,dataset,start_s,duration_s\nc,r,A,d,0,1\n")
    with pytest.raises(FormatError, match="header"):
        read_metadata_csv(p)


def test_metadata_without_split_column_allowed_when_requested(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("clip_id,recording_id,label,dataset,start_s,duration_s\nc,r,A,d,0,1\n")
    (m,) = read_metadata_csv(p, require_split=False)
    assert m.split == "train"


def test_metadata_round_trip(tmp_path):
    meta = [
        make_meta("c0", recording_id="r0", label="Tug", split="train", start_s=1.25),
        make_meta("c1", recording_id="r1", label="Cargo", split="test", duration_s=3.5),
    ]
    p = tmp_path / "m.csv"
    write_metadata_csv(meta, p)
    assert read_metadata_csv(p) == meta


def test_metadata_unparsable_number(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(
        "clip_id,recording_id,label,split,dataset,start_s,duration_s\n"
        "c1,r1,Tug,train,deepship,abc,10.0\n"
    )
    with pytest.raises(FormatError, match="unparsable"):
        read_metadata_csv(p)


_ID_ALPHABET = "abcXYZ019_.-"


@settings(max_examples=40, deadline=None)
@given(
    data=st.lists(
        st.tuples(
            st.text(_ID_ALPHABET, min_size=1, max_size=8),  # recording id
            st.sampled_from(["Tug", "Cargo", "Passenger ship"]),
            st.sampled_from(["train", "test"]),
            st.floats(min_value=0, max_value=1e6, allow_nan=False),
            st.floats(min_value=1e-3, max_value=1e4, allow_nan=False),
        ),
        min_size=1,
        max_size=10,
    )
)
def test_metadata_round_trip_property(tmp_path_factory, data):
    meta = [
        make_meta(f"c{i}", recording_id=rec, label=label, split=split,
                  start_s=start, duration_s=dur)
        for i, (rec, label, split, start, dur) in enumerate(data)
    ]
    p = tmp_path_factory.mktemp("meta") / "m.csv"
    write_metadata_csv(meta, p)
    assert read_metadata_csv(p) == meta


def test_metadata_bad_id_charset(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(
        "clip_id,recording_id,label,split,dataset,start_s,duration_s\n"
        "c 1,r1,Tug,train,deepship,0.0,10.0\n"
    )
    with pytest.raises(FormatError, match="clip_id"):
        read_metadata_csv(p)


# ---------------------------------------------------------------------------
# WAV
# ---------------------------------------------------------------------------

def test_wav_silence_pcm16(tmp_path):
    p = tmp_path / "s.wav"
    p.write_bytes(wav_bytes(np.zeros(16000), sample_rate=16000))
    rate, samples = read_wav(p)
    assert rate == 16000
    assert samples.shape == (16000,)
    assert np.all(samples == 0.0)


def test_wav_pcm16_scaling(tmp_path):
    p = tmp_path / "s.wav"
    p.write_bytes(wav_bytes(np.array([16384 / 32768.0]), sample_rate=8000))
    _, samples = read_wav(p)
    assert samples[0] == pytest.approx(0.5, abs=0)


def test_wav_stereo_takes_first_channel(tmp_path):
    left = np.array([0.25, 0.5], dtype=np.float64)
    right = np.array([-0.25, -0.5], dtype=np.float64)
    interleaved = np.empty(4)
    interleaved[0::2] = left
    interleaved[1::2] = right
    p = tmp_path / "s.wav"
    p.write_bytes(wav_bytes(interleaved, sample_rate=8000, n_channels=2))
    _, samples = read_wav(p)
    np.testing.assert_allclose(samples, left, atol=1 / 32768)


def test_wav_float32(tmp_path):
    x = np.array([0.1, -0.9, 0.5], dtype=np.float32)
    p = tmp_path / "s.wav"
    p.write_bytes(wav_bytes(x, sample_rate=22050, fmt="float32"))
    rate, samples = read_wav(p)
    assert rate == 22050
    np.testing.assert_array_equal(samples, x.astype(np.float64))


def test_wav_rejects_other_encodings(tmp_path):
    raw = bytearray(wav_bytes(np.zeros(4), sample_rate=8000))
    raw[20:22] = (85).to_bytes(2, "little")  # claim MP3 encoding
    p = tmp_path / "s.wav"
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="unsupported encoding"):
        read_wav(p)


def test_wav_rejects_malformed_chunks(tmp_path):
    p = tmp_path / "s.wav"
    p.write_bytes(wav_bytes(np.zeros(100), sample_rate=8000)[:30])
    with pytest.raises(FormatError):
        read_wav(p)


def test_wav_rejects_non_riff(tmp_path):
    p = tmp_path / "s.wav"
    p.write_bytes(b"OggS" + b"\x00" * 40)
    with pytest.raises(FormatError, match="RIFF"):
        read_wav(p)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _report(model_id="BEATS", dataset="deepship", acc=0.654, nmi=0.13, auc=0.61):
    return EvalReport(
        model_id=model_id,
        dataset=dataset,
        probe_accuracy=acc,
        per_class_accuracy={"Tug": 0.5, "Cargo": 0.75},
        nmi_class=nmi,
        mean_roc_auc=auc,
        diagnostics=DiagnosticsBlock(
            nmi_recording=0.62,
            auc_recording=0.90,
            shuffle_mean_accuracy=0.229,
            shuffle_std_accuracy=0.02,
            shuffle_accuracies=(0.21, 0.25),
            nmi_logits=0.36,
            nmi_pca=0.14,
            ablation=AblationHistogram(
                bin_width_pct=0.5, bin_edges_pct=(0.0, 0.5, 1.0), counts=(700, 68)
            ),
        ),
        config_fingerprint="ab" * 32,
        seed=7,
    )


def test_report_json_round_trip(tmp_path):
    r = _report()
    p = tmp_path / "r.json"
    write_report(r, p, format="json")
    assert read_report(p) == r


def test_report_markdown_cells(tmp_path):
    r = _report()
    p = tmp_path / "r.md"
    write_report(r, p, format="markdown")
    text = p.read_text()
    row = next(line for line in text.splitlines() if line.startswith("| BEATS"))
    cells = [c.strip() for c in row.strip("|").split("|")]
    assert cells == ["BEATS", "deepship", "65.4%", "0.13", "0.61"]


def test_report_all_zero_diagnostics_is_valid(tmp_path):
    r = EvalReport(
        model_id="m", dataset="d", probe_accuracy=0.0, per_class_accuracy={},
        nmi_class=0.0, mean_roc_auc=0.0,
        diagnostics=DiagnosticsBlock(
            nmi_recording=0.0, auc_recording=0.0, shuffle_mean_accuracy=0.0,
            shuffle_std_accuracy=0.0, shuffle_accuracies=(0.0,), nmi_logits=0.0,
            nmi_pca=0.0,
            ablation=AblationHistogram(bin_width_pct=0.5, bin_edges_pct=(0.0, 0.5), counts=(1,)),
        ),
        config_fingerprint="x", seed=0,
    )
    write_report(r, tmp_path / "r.json", format="json")
    assert read_report(tmp_path / "r.json") == r


def test_report_dict_round_trip_preserves_floats():
    r = _report(acc=1 / 3, nmi=2 / 7, auc=0.1234567890123456)
    assert report_from_dict(json.loads(json.dumps(report_to_dict(r)))) == r


def test_report_markdown_multiple_models():
    text = report_markdown([_report(), _report(model_id="BEATS", dataset="shipsear",
                                               acc=0.740, nmi=0.22, auc=0.72)])
    rows = [line for line in text.splitlines() if line.startswith("| BEATS")]
    assert len(rows) == 4  # 2 models x (metrics table + diagnostics table)


def test_report_range_validation():
    with pytest.raises(ValueError, match="probe_accuracy"):
        _report(acc=1.5)
