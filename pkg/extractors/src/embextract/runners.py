"""Frame-embedding runners: the model-specific piece of an adapter.

A runner is a callable taking a batch of fixed-length windows
(n_windows x window_samples, float in [-1, 1]) and returning per-window
frame embeddings as an (n_windows, n_frames, dim) array. The pipeline
handles everything around it (resampling, windowing, pooling, file IO),
so plugging in a new model means writing only this function.
"""

from __future__ import annotations

import numpy as np

from .specs import ExtractorSpec


class CheckpointUnavailableError(RuntimeError):
    """The model weights cannot be obtained in this environment."""


def hf_wav2vec2_family_runner(spec: ExtractorSpec):
    """Runner backed by a transformers AutoModel encoder (wav2vec2-style
    architectures: raw waveform in, hidden-state frames out)."""
    try:
        import torch
        from transformers import AutoModel
    except ImportError as e:
        raise CheckpointUnavailableError(
            f"{spec.model}: install the 'hf' extra (transformers + torch) to run this adapter"
        ) from e
    try:
        model = AutoModel.from_pretrained(spec.checkpoint)
    except Exception as e:
        raise CheckpointUnavailableError(
            f"{spec.model}: checkpoint unavailable from {spec.checkpoint!r} ({e})"
        ) from e
    model.eval()

    def run(windows: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            out = model(torch.from_numpy(np.ascontiguousarray(windows, dtype=np.float32)))
        frames = out.last_hidden_state.numpy()
        if frames.shape[-1] != spec.dim:
            raise ValueError(
                f"{spec.model}: checkpoint emits dim {frames.shape[-1]}, registry says {spec.dim}"
            )
        return frames

    return run


def external_runner(spec: ExtractorSpec):
    raise CheckpointUnavailableError(
        f"{spec.model}: no built-in loader; obtain the checkpoint from "
        f"{spec.checkpoint!r} and pass a custom runner to extract()"
    )


RUNNER_FACTORIES = {
    "hf-wav2vec2-family": hf_wav2vec2_family_runner,
    "external": external_runner,
}


def make_runner(spec: ExtractorSpec):
    try:
        factory = RUNNER_FACTORIES[spec.runner]
    except KeyError:
        raise CheckpointUnavailableError(f"{spec.model}: unknown runner kind {spec.runner!r}") from None
    return factory(spec)
