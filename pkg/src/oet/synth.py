"""Deterministic synthetic sequences with ground truth for desk-scale tests.

A textured patch translates across a textured background at constant
velocity; optional ingredients are a constant-intensity occluder over a frame
range, a linear illumination-gain ramp, and per-frame Gaussian pixel noise.
Equal specs render bit-identical sequences, and toggling the occluder changes
only the occluded frames (the random stream does not depend on it).
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .features import BoundingBox, Frame

OCCLUDER_INTENSITY = 0.5

BACKGROUND_RANGE = (0.35, 0.65)
TEMPLATE_RANGE = (0.15, 0.75)


class InvalidSpecError(ValueError):
    """Raised when a sequence spec is inconsistent (e.g. patch leaves the frame)."""


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic sequence.

    frame_size    (width, height) in pixels
    patch_size    side of the square textured patch
    init_pos      top-left corner of the patch in frame 0
    velocity      (vx, vy) pixels per frame
    length        number of frames
    occlusion     optional (first_frame, last_frame, area_fraction), inclusive
    illumination  optional (gain_start, gain_end), ramped linearly over frames
    noise_std     sigma of the additive per-pixel Gaussian noise
    seed          RNG seed; equal seeds render identical pixels
    template      optional explicit patch texture (otherwise generated)
    """

    frame_size: Tuple[int, int] = (320, 240)
    patch_size: int = 48
    init_pos: Tuple[float, float] = (40.0, 60.0)
    velocity: Tuple[float, float] = (2.0, 1.0)
    length: int = 120
    occlusion: Optional[Tuple[int, int, float]] = None
    illumination: Optional[Tuple[float, float]] = None
    noise_std: float = 0.02
    seed: int = 0
    template: Optional[np.ndarray] = None

    def __post_init__(self):
        w, h = self.frame_size
        if w < 32 or h < 32:
            raise InvalidSpecError(f"frame must be at least 32 x 32, got {w} x {h}")
        if self.patch_size < 4:
            raise InvalidSpecError("patch_size must be at least 4")
        if self.length < 1:
            raise InvalidSpecError("length must be at least 1")
        if self.noise_std < 0:
            raise InvalidSpecError("noise_std must be non-negative")
        if self.occlusion is not None:
            first, last, frac = self.occlusion
            if not 0.0 <= frac <= 1.0:
                raise InvalidSpecError(f"occlusion fraction must be in [0, 1], got {frac}")
            if first > last:
                raise InvalidSpecError("occlusion range is empty")
        if self.illumination is not None:
            g0, g1 = self.illumination
            if g0 <= 0 or g1 <= 0:
                raise InvalidSpecError("illumination gains must be positive")
        if self.template is not None:
            shape = np.asarray(self.template).shape
            if shape != (self.patch_size, self.patch_size):
                raise InvalidSpecError(
                    f"template shape {shape} != patch size {self.patch_size}"
                )
        x0, y0 = self.init_pos
        vx, vy = self.velocity
        for t in (0, self.length - 1):
            x, y = x0 + t * vx, y0 + t * vy
            if x < 0 or y < 0 or x + self.patch_size > w or y + self.patch_size > h:
                raise InvalidSpecError(
                    f"patch leaves the frame at t={t}: top-left ({x:.1f}, {y:.1f})"
                )


def _box_blur_1d(a, k, axis):
    """Moving average of width k along an axis, edge-padded."""
    pad = k // 2
    a = np.moveaxis(np.asarray(a, dtype=float), axis, -1)
    widths = [(0, 0)] * (a.ndim - 1) + [(pad, pad)]
    c = np.cumsum(np.pad(a, widths, mode="edge"), axis=-1)
    c = np.concatenate([np.zeros(c.shape[:-1] + (1,)), c], axis=-1)
    out = (c[..., k:] - c[..., :-k]) / k
    return np.moveaxis(out, -1, axis)


def _smooth_noise(rng, shape, k, passes, lo, hi):
    """Seeded blurred noise rescaled into [lo, hi]."""
    a = rng.random(shape)
    for _ in range(passes):
        a = _box_blur_1d(a, k, 0)
        a = _box_blur_1d(a, k, 1)
    span = a.max() - a.min()
    if span <= 0:
        return np.full(shape, (lo + hi) / 2.0)
    return lo + (hi - lo) * (a - a.min()) / span


def _overlay_patch(canvas, template, x, y):
    """Draw the template at a (possibly fractional) top-left position."""
    ps = template.shape[0]
    h, w = canvas.shape
    r0 = max(0, int(np.floor(y)))
    r1 = min(h, int(np.ceil(y)) + ps)
    c0 = max(0, int(np.floor(x)))
    c1 = min(w, int(np.ceil(x)) + ps)
    rows = np.arange(r0, r1)
    cols = np.arange(c0, c1)
    src_y = rows - y
    src_x = cols - x
    ok_y = (src_y >= 0) & (src_y <= ps - 1)
    ok_x = (src_x >= 0) & (src_x <= ps - 1)
    if not ok_y.any() or not ok_x.any():
        return
    rows, src_y = rows[ok_y], src_y[ok_y]
    cols, src_x = cols[ok_x], src_x[ok_x]

    y0 = np.floor(src_y).astype(int)
    x0 = np.floor(src_x).astype(int)
    y1 = np.minimum(y0 + 1, ps - 1)
    x1 = np.minimum(x0 + 1, ps - 1)
    fy = (src_y - y0)[:, None]
    fx = (src_x - x0)[None, :]
    top = template[y0[:, None], x0[None, :]] * (1 - fx) + template[y0[:, None], x1[None, :]] * fx
    bot = template[y1[:, None], x0[None, :]] * (1 - fx) + template[y1[:, None], x1[None, :]] * fx
    canvas[np.ix_(rows, cols)] = top * (1 - fy) + bot * fy


def make_template(patch_size, seed):
    """Standalone seeded patch texture (same generator the renderer uses)."""
    rng = np.random.default_rng(seed)
    return _smooth_noise(rng, (patch_size, patch_size), 3, 2, *TEMPLATE_RANGE)


def generate_sequence(spec):
    """Render the sequence; returns (frames, ground_truth_boxes)."""
    w, h = spec.frame_size
    ps = spec.patch_size
    rng = np.random.default_rng(spec.seed)

    background = _smooth_noise(rng, (h, w), 9, 3, *BACKGROUND_RANGE)
    generated = _smooth_noise(rng, (ps, ps), 3, 2, *TEMPLATE_RANGE)
    if spec.template is not None:
        template = np.asarray(spec.template, dtype=float)
    else:
        template = generated

    x0, y0 = spec.init_pos
    vx, vy = spec.velocity
    frames = []
    boxes = []
    for t in range(spec.length):
        x = x0 + t * vx
        y = y0 + t * vy
        canvas = background.copy()
        _overlay_patch(canvas, template, x, y)

        if spec.occlusion is not None:
            first, last, frac = spec.occlusion
            if first <= t <= last and frac > 0:
                side = ps * np.sqrt(frac)
                cx, cy = x + ps / 2.0, y + ps / 2.0
                r0 = int(round(cy - side / 2.0))
                c0 = int(round(cx - side / 2.0))
                r1 = r0 + int(round(side))
                c1 = c0 + int(round(side))
                canvas[max(0, r0) : min(h, r1), max(0, c0) : min(w, c1)] = OCCLUDER_INTENSITY

        gain = 1.0
        if spec.illumination is not None:
            g0, g1 = spec.illumination
            frac_t = t / (spec.length - 1) if spec.length > 1 else 0.0
            gain = g0 + (g1 - g0) * frac_t

        noise = spec.noise_std * rng.standard_normal((h, w))
        pixels = np.clip(gain * canvas + noise, 0.0, 1.0)
        frames.append(Frame(pixels=pixels, index=t))
        boxes.append(BoundingBox(x, y, float(ps), float(ps)))
    return frames, boxes
