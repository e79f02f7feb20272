"""ROI cropping, resizing, and patch features (HOG or raw intensities).

All patches are 20 x 20 grayscale intensities in [0, 1].  HOG output is the
frozen 576-length layout described in `hog`; stored models depend on it.
"""

from dataclasses import dataclass

import numpy as np

PATCH_SIZE = 20
FEATURE_LENGTHS = {"hog": 576, "raw": 400}

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class OutOfFrameError(ValueError):
    """Raised when a box has no overlap with the frame at all."""


@dataclass(frozen=True)
class Frame:
    """One grayscale frame: h x w intensities in [0, 1] plus its index."""

    pixels: np.ndarray
    index: int = 0

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=float)
        object.__setattr__(self, "pixels", p)
        if p.ndim != 2:
            raise ValueError(f"frame pixels must be 2-D, got shape {p.shape}")
        h, w = p.shape
        if w < 32 or h < 32:
            raise ValueError(f"frame must be at least 32 x 32, got {w} x {h}")
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("frame intensities must be finite and within [0, 1]")

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle: top-left (x, y), extents (w, h)."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive, got w={self.w}, h={self.h}")

    @property
    def center(self):
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


def to_gray(rgb):
    """Luma conversion with weights 0.299 / 0.587 / 0.114."""
    rgb = np.asarray(rgb, dtype=float)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an h x w x 3 array, got shape {rgb.shape}")
    r, g, b = LUMA_WEIGHTS
    return r * rgb[:, :, 0] + g * rgb[:, :, 1] + b * rgb[:, :, 2]


def crop_resize(frame, box):
    """Bilinearly resample the box region onto a PATCH_SIZE grid.

    Sample points sit at output-pixel centers mapped into the box; source
    coordinates outside the frame clamp to the border pixel, so partially
    out-of-frame boxes extend their edge colors.  A box with no overlap at
    all raises OutOfFrameError.
    """
    p = frame.pixels
    h, w = p.shape
    if box.x >= w or box.x + box.w <= 0 or box.y >= h or box.y + box.h <= 0:
        raise OutOfFrameError(
            f"box ({box.x}, {box.y}, {box.w}, {box.h}) does not overlap the {w} x {h} frame"
        )

    grid = (np.arange(PATCH_SIZE) + 0.5) / PATCH_SIZE
    sx = np.clip(box.x + grid * box.w - 0.5, 0.0, w - 1.0)
    sy = np.clip(box.y + grid * box.h - 0.5, 0.0, h - 1.0)

    x0 = np.floor(sx).astype(int)
    y0 = np.floor(sy).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0

    top = p[y0[:, None], x0[None, :]] * (1 - fx)[None, :] + p[y0[:, None], x1[None, :]] * fx[None, :]
    bot = p[y1[:, None], x0[None, :]] * (1 - fx)[None, :] + p[y1[:, None], x1[None, :]] * fx[None, :]
    return top * (1 - fy)[:, None] + bot * fy[:, None]


def hog(patch):
    """Histogram-of-oriented-gradients features for a 20 x 20 patch.

    Layout (frozen):
      - central-difference gradients with edge-replicated borders;
      - 9 unsigned orientation bins over [0, 180) degrees, bin centers at
        k * 20 degrees, magnitude votes split linearly between the two
        nearest bins (wrapping 170 -> bins 8 and 0);
      - 5 x 5 grid of 4 x 4-pixel cells;
      - 2 x 2-cell blocks at stride 1 (4 x 4 = 16 blocks), each block's
        36-vector L2-normalized by sqrt(||v||^2 + eps^2), eps = 1e-6;
      - concatenation order: block row, block col, cell row, cell col, bin.

    Total length 16 * 4 * 9 = 576.  A constant patch yields all zeros.
    """
    patch = np.asarray(patch, dtype=float)
    if patch.shape != (PATCH_SIZE, PATCH_SIZE):
        raise ValueError(f"expected a {PATCH_SIZE} x {PATCH_SIZE} patch, got {patch.shape}")

    padded = np.pad(patch, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    mag = np.hypot(gx, gy)
    ang = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)

    pos = ang / 20.0
    lo = np.floor(pos).astype(int) % 9
    frac = pos - np.floor(pos)
    hi = (lo + 1) % 9

    rows, cols = np.indices(patch.shape)
    cell = (rows // 4) * 5 + (cols // 4)
    idx_lo = (cell * 9 + lo).ravel()
    idx_hi = (cell * 9 + hi).ravel()
    hist = np.bincount(idx_lo, weights=(mag * (1 - frac)).ravel(), minlength=225)
    hist += np.bincount(idx_hi, weights=(mag * frac).ravel(), minlength=225)
    cells = hist.reshape(5, 5, 9)

    eps = 1e-6
    blocks = []
    for bi in range(4):
        for bj in range(4):
            v = cells[bi : bi + 2, bj : bj + 2, :].ravel()
            blocks.append(v / np.sqrt(v @ v + eps * eps))
    return np.concatenate(blocks)


def raw_feature(patch):
    """Row-major flattening of the patch (length 400)."""
    patch = np.asarray(patch, dtype=float)
    if patch.shape != (PATCH_SIZE, PATCH_SIZE):
        raise ValueError(f"expected a {PATCH_SIZE} x {PATCH_SIZE} patch, got {patch.shape}")
    return patch.ravel().copy()


def extract_feature(patch, mode):
    """Dispatch to the configured feature ('hog' or 'raw')."""
    if mode == "hog":
        return hog(patch)
    if mode == "raw":
        return raw_feature(patch)
    raise ValueError(f"unknown feature mode {mode!r}")
