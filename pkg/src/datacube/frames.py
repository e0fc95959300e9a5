"""Frame streams and the synthetic video descriptor.

Video decoding is out of scope; a FrameStream is anything exposing
frame_count / fps / frame_at(index) where frames are float32 luminance
grids in [0, 255]. The bundled implementation renders frames from a
JSON descriptor: a list of scenes, each a drifting sine pattern with
optional per-frame noise plus the semantic annotations the mock
providers surface (labels, style, content, viewpoint, quality scores).

Descriptor shape::

    {
      "source_url": "https://cdn.example.com/v.mp4",   # optional
      "fps": 10, "width": 64, "height": 36,
      "pixel_shift": 0,                                 # near-dup knob
      "seed": 7,                                        # noise seed
      "scenes": [
        {"duration_s": 8, "base_luma": 120, "amplitude": 55,
         "x_freq": 2.0, "x_phase": 0.25, "row_phase": 0.5, "speed": 0.5,
         "noise": 0.0, "labels": ["beach", "sunset"],
         "style": "cinematic", "content": "waves rolling onto a beach",
         "viewpoint": "aerial", "ocr_coverage": 0.02,
         "aesthetic_a": 3.5, "aesthetic_b": 70.0}
      ]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import ValidationError


@runtime_checkable
class FrameStream(Protocol):
    frame_count: int
    fps: float

    def frame_at(self, index: int) -> np.ndarray: ...


@dataclass
class Scene:
    duration_s: float
    base_luma: float = 128.0
    amplitude: float = 50.0
    x_freq: float = 2.0
    x_phase: float = 0.0
    row_phase: float = 0.25
    speed: float = 0.5  # pattern drift, cycles/second; drives motion
    noise: float = 0.0
    labels: list[str] = field(default_factory=list)
    style: str = "unspecified"
    content: str = ""
    viewpoint: str = "unspecified"
    language: str = "en"
    ocr_coverage: float = 0.0
    aesthetic_a: float = 4.0
    aesthetic_b: float = 60.0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValidationError("scene duration_s must be positive")


@dataclass
class VideoDescriptor:
    scenes: list[Scene]
    fps: float = 10.0
    width: int = 64
    height: int = 36
    source_url: str | None = None
    pixel_shift: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.scenes:
            raise ValidationError("descriptor needs at least one scene")
        if self.fps <= 0 or self.width < 1 or self.height < 1:
            raise ValidationError("fps/width/height must be positive")

    @property
    def duration_s(self) -> float:
        return sum(s.duration_s for s in self.scenes)

    def scene_at(self, t: float) -> Scene:
        acc = 0.0
        for scene in self.scenes:
            acc += scene.duration_s
            if t < acc:
                return scene
        return self.scenes[-1]

    @classmethod
    def from_dict(cls, raw: dict) -> "VideoDescriptor":
        if not isinstance(raw, dict):
            raise ValidationError("descriptor must be a JSON object")
        scenes_raw = raw.get("scenes") or []
        if not isinstance(scenes_raw, list) or not scenes_raw:
            raise ValidationError("descriptor needs a non-empty scenes list")
        known = {f for f in Scene.__dataclass_fields__}
        scenes = []
        for s in scenes_raw:
            extra = set(s) - known
            if extra:
                raise ValidationError(f"unknown scene keys: {sorted(extra)}")
            scenes.append(Scene(**s))
        return cls(
            scenes=scenes,
            fps=float(raw.get("fps", 10.0)),
            width=int(raw.get("width", 64)),
            height=int(raw.get("height", 36)),
            source_url=raw.get("source_url"),
            pixel_shift=int(raw.get("pixel_shift", 0)),
            seed=int(raw.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, text: str | bytes) -> "VideoDescriptor":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"descriptor is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = {
            "fps": self.fps,
            "width": self.width,
            "height": self.height,
            "pixel_shift": self.pixel_shift,
            "seed": self.seed,
            "scenes": [],
        }
        if self.source_url is not None:
            out["source_url"] = self.source_url
        for s in self.scenes:
            out["scenes"].append(
                {k: getattr(s, k) for k in Scene.__dataclass_fields__}
            )
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class SyntheticFrameStream:
    """Deterministic frame renderer for a VideoDescriptor.

    Pattern per scene: luminance(y, x, t) =
        base + A * sin(2*pi*(x_freq*(x+shift)/W + x_phase + row_phase*y/H
                             + speed*t)) + noise
    The sine drift over time produces genuine inter-frame motion without
    moving the per-frame average (dHash stays shift-stable); base jumps
    between scenes drive the segmenter.
    """

    def __init__(self, descriptor: VideoDescriptor):
        self.descriptor = descriptor
        self.fps = descriptor.fps
        self.frame_count = int(round(descriptor.duration_s * descriptor.fps))

    def frame_at(self, index: int) -> np.ndarray:
        if not 0 <= index < self.frame_count:
            raise IndexError(f"frame {index} out of range 0..{self.frame_count - 1}")
        d = self.descriptor
        t = index / d.fps
        scene = d.scene_at(t)
        x = np.arange(d.width, dtype=np.float32) + d.pixel_shift
        y = np.arange(d.height, dtype=np.float32)
        phase = (
            scene.x_freq * x[None, :] / d.width
            + scene.x_phase
            + scene.row_phase * y[:, None] / d.height
            + scene.speed * t
        )
        frame = scene.base_luma + scene.amplitude * np.sin(2 * np.pi * phase)
        if scene.noise > 0:
            rng = np.random.default_rng((d.seed * 1_000_003 + index) & 0xFFFFFFFF)
            frame = frame + rng.uniform(
                -scene.noise, scene.noise, size=(d.height, d.width)
            )
        return np.clip(frame, 0.0, 255.0).astype(np.float32)
