"""Deterministic desk-scale scenarios: a bright dot on a rectangular patrol.

The dot walks the perimeter of an inset rectangle at one path-unit per
frame. Segment kinds: loop_cw (the normal patrol, used for training),
loop_ccw (direction reversal), stop (frozen position), detour (smooth pull
toward the frame center before rejoining the perimeter). Ground-truth labels
are True exactly on non-loop_cw segments.
"""

from dataclasses import dataclass

import numpy as np

from .vae import Frame

SEGMENT_KINDS = ("loop_cw", "loop_ccw", "stop", "detour")
MARGIN_FRACTION = 0.2      # perimeter inset relative to min(width, height)
DETOUR_DEPTH = 0.45        # peak pull toward the center, fraction of the radius


@dataclass(frozen=True)
class ScenarioSpec:
    width: int = 16
    height: int = 16
    segments: tuple = (("loop_cw", 600),)
    dot_radius: float = 1.5
    noise_sigma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if not self.segments:
            raise ValueError("need at least one segment")
        for kind, length in self.segments:
            if kind not in SEGMENT_KINDS:
                raise ValueError(f"unknown segment kind {kind!r}")
            if length < 1:
                raise ValueError("segments must be non-empty")
        if self.total_frames < 2:
            raise ValueError("need at least 2 frames in total")

    @property
    def total_frames(self) -> int:
        return sum(length for _, length in self.segments)


def _margin(spec: ScenarioSpec) -> int:
    return max(2, round(min(spec.width, spec.height) * MARGIN_FRACTION))


def perimeter_length(spec: ScenarioSpec) -> int:
    m = _margin(spec)
    side_x = spec.width - 1 - 2 * m
    side_y = spec.height - 1 - 2 * m
    if side_x < 1 or side_y < 1:
        raise ValueError("frame too small for the patrol rectangle")
    return 2 * (side_x + side_y)


def _perimeter_position(spec: ScenarioSpec, t: float):
    """Clockwise walk of the inset rectangle, parameterized by arc length."""
    m = _margin(spec)
    side_x = spec.width - 1 - 2 * m
    side_y = spec.height - 1 - 2 * m
    total = 2 * (side_x + side_y)
    u = t % total
    if u < side_x:
        return m + u, float(m)
    u -= side_x
    if u < side_y:
        return float(m + side_x), m + u
    u -= side_y
    if u < side_x:
        return m + side_x - u, float(m + side_y)
    u -= side_x
    return float(m), m + side_y - u


def _render(spec: ScenarioSpec, cx: float, cy: float, rng) -> np.ndarray:
    ys, xs = np.mgrid[0:spec.height, 0:spec.width]
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    img = np.exp(-0.5 * d2 / spec.dot_radius ** 2)
    if spec.noise_sigma > 0.0:
        img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
    return np.clip(img, 0.0, 1.0).ravel()


def generate(spec: ScenarioSpec):
    """(frames, labels): deterministic from the seed.

    Raises ValueError when the dot (center +- radius) would leave the frame.
    """
    rng = np.random.default_rng(spec.seed)
    perimeter_length(spec)  # validates the geometry
    center = ((spec.width - 1) / 2.0, (spec.height - 1) / 2.0)
    frames, labels = [], []
    t = 0.0
    for kind, length in spec.segments:
        for i in range(length):
            if kind == "loop_cw":
                cx, cy = _perimeter_position(spec, t)
                t += 1.0
            elif kind == "loop_ccw":
                cx, cy = _perimeter_position(spec, t)
                t -= 1.0
            elif kind == "stop":
                cx, cy = _perimeter_position(spec, t)
            else:  # detour: continue the patrol, pulled toward the center
                px, py = _perimeter_position(spec, t)
                bump = DETOUR_DEPTH * np.sin(np.pi * (i + 1) / (length + 1))
                cx = center[0] + (px - center[0]) * (1.0 - bump)
                cy = center[1] + (py - center[1]) * (1.0 - bump)
                t += 1.0
            r = spec.dot_radius
            if cx - r < 0 or cy - r < 0 or cx + r > spec.width - 1 or cy + r > spec.height - 1:
                raise ValueError(f"dot leaves the frame at ({cx:.1f}, {cy:.1f})")
            frames.append(Frame(spec.width, spec.height, _render(spec, cx, cy, rng)))
            labels.append(kind != "loop_cw")
    return frames, np.asarray(labels, dtype=bool)


def preset(name: str, seed: int = 0, frame_size: int = 16) -> ScenarioSpec:
    """Named scenarios: an all-normal patrol for training and three test
    scenarios (an emergency stop, an obstacle detour, a direction reversal)."""
    specs = {
        "train": (("loop_cw", 600),),
        "stop": (("loop_cw", 120), ("stop", 60), ("loop_cw", 120),
                 ("stop", 60), ("loop_cw", 120)),
        "avoid": (("loop_cw", 120), ("detour", 72), ("loop_cw", 120),
                  ("detour", 72), ("loop_cw", 96)),
        "uturn": (("loop_cw", 180), ("loop_ccw", 300)),
    }
    if name not in specs:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(specs)}")
    return ScenarioSpec(width=frame_size, height=frame_size, segments=specs[name], seed=seed)
