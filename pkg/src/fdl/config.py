"""Flat ``key=value`` run configuration written next to every output."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field, fields
from pathlib import Path

from .features import ExtractorSpec
from .io import fmt_float
from .losses import DEFAULT_PROJECTIONS, FdlConfig

__all__ = ["RunConfig", "CONFIG_NAME"]

CONFIG_NAME = "config.txt"


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    lam: float = 1.0
    projections: int = DEFAULT_PROJECTIONS
    extractor: str = "identity"
    depth: int = 5
    channels: tuple[int, ...] = (8, 16, 16, 32, 32)
    kernel_size: int = 3
    pyramid_seed: int = 0
    padding: str = "same-circular"
    layer_weights: tuple[float, ...] = ()
    threads: int = 1
    out: str = "."
    # toy1d
    loss: str = "freq"
    misalign: int = 8
    epochs: int = 200
    pairs: int = 128
    length: int = 128
    lr: float = 1e-2
    # shift-curve
    image: str = ""
    max_shift: int = 16
    kinds: tuple[str, ...] = ("mse", "fdl", "fdl_amplitude")
    # mix
    amp: str = ""
    phase: str = ""
    # loss
    a: str = ""
    b: str = ""
    kind: str = "fdl"
    eval_id: int = 0
    features_a: tuple[str, ...] = ()
    features_b: tuple[str, ...] = ()
    # style
    content: str = ""
    style: str = ""
    alpha: float = 1.0
    beta: float = 1.0
    steps: int = 300
    style_lr: float = 0.01
    schedule: str = "cosine"
    extra: dict = field(default_factory=dict)

    def extractor_spec(self, paths: tuple[str, ...] = ()) -> ExtractorSpec:
        return ExtractorSpec(
            kind=self.extractor,
            depth=self.depth,
            channels=self.channels,
            kernel_size=self.kernel_size,
            seed=self.pyramid_seed,
            padding=self.padding,
            paths=paths,
        )

    def fdl_config(self, paths: tuple[str, ...] = ()) -> FdlConfig:
        return FdlConfig(
            lam=self.lam,
            k_projections=self.projections,
            master_seed=self.seed,
            extractor=self.extractor_spec(paths),
            layer_weights=self.layer_weights or None,
        )

    # -------------------------------------------------------- serialization

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "extra":
                continue
            lines.append(f"{f.name}={_encode(getattr(self, f.name))}")
        for key in sorted(self.extra):
            lines.append(f"{key}={self.extra[key]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> RunConfig:
        hints = typing.get_type_hints(cls)
        known = {f.name for f in fields(cls)} - {"extra"}
        values: dict = {}
        extra: dict = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed config line {raw!r}")
            key = key.strip()
            if key in known:
                values[key] = _decode(value, hints[key])
            else:
                extra[key] = value
        if "command" not in values:
            raise ValueError("config is missing the 'command' key")
        return cls(**values, extra=extra)

    def write(self, directory) -> Path:
        path = Path(directory) / CONFIG_NAME
        path.write_text(self.to_text(), encoding="utf-8")
        return path

    @classmethod
    def read(cls, path) -> RunConfig:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


def _encode(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_float(value)
    if isinstance(value, tuple):
        return ",".join(_encode(v) for v in value)
    return str(value)


def _decode(text: str, hint):
    origin = typing.get_origin(hint)
    if origin is tuple:
        (inner, *_) = typing.get_args(hint)
        return tuple(_decode(p, inner) for p in text.split(",")) if text else ()
    if hint is bool:
        return text == "true"
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    return text
