"""Model registry: one entry per supported pretrained audio model.

Each spec pins the input sample rate, analysis window and embedding size
the checkpoint was built for, plus where the checkpoint comes from. The
registry ships as JSON so adding a model is a data change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

POOLINGS = ("mean",)


@dataclass(frozen=True)
class ExtractorSpec:
    model: str
    domain: str
    sample_rate: int
    window_s: float
    dim: int
    runner: str
    checkpoint: str
    pooling: str = "mean"

    def __post_init__(self):
        if self.sample_rate < 1 or self.dim < 1 or self.window_s <= 0:
            raise ValueError(f"{self.model}: sample_rate/window_s/dim must be positive")
        if self.pooling not in POOLINGS:
            raise ValueError(f"{self.model}: pooling must be one of {POOLINGS}")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.sample_rate))


def _load_registry() -> dict[str, ExtractorSpec]:
    raw = json.loads(resources.files("embextract").joinpath("registry.json").read_text("utf-8"))
    return {name: ExtractorSpec(model=name, **entry) for name, entry in raw.items()}


REGISTRY: dict[str, ExtractorSpec] = _load_registry()


def get_spec(model: str) -> ExtractorSpec:
    try:
        return REGISTRY[model]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise KeyError(f"unknown model {model!r}; registry has: {known}") from None
