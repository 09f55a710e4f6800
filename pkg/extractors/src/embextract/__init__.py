"""embextract: adapters from pretrained audio models to embdiag files.

Each adapter pairs a registry spec (sample rate, window, embedding size,
checkpoint source) with a frame-embedding runner; the shared pipeline
resamples, windows, mean-pools and writes the .emb + CSV pair that the
evaluation engine consumes.
"""

__version__ = "0.1.0"

from .pipeline import ExtractResult, embed_clip, extract, resample_linear
from .runners import CheckpointUnavailableError, make_runner
from .specs import REGISTRY, ExtractorSpec, get_spec
