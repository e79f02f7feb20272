"""Sequence loading, result/ground-truth text formats, and config parsing.

On-disk sequence layout (the same for real and synthetic data):

    <sequence>/img/0001.png ...   numbered PNG/PGM/JPEG frames
    <sequence>/groundtruth_rect.txt   optional, one "x,y,w,h" line per frame
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
from PIL import Image

from .embedding import SolverConfig
from .features import BoundingBox, Frame, to_gray
from .synth import SynthSpec
from .tracker import TrackerConfig

IMAGE_EXTENSIONS = {".png", ".pgm", ".jpg", ".jpeg"}
GROUNDTRUTH_NAME = "groundtruth_rect.txt"


class SequenceLoadError(RuntimeError):
    """Missing/empty image directory or an undecodable frame."""


class GroundTruthMismatchError(RuntimeError):
    """Ground-truth line count differs from the frame count."""


class GroundTruthParseError(ValueError):
    """Malformed ground-truth/result line; message carries the line number."""


class ConfigError(ValueError):
    """Bad configuration key, value type, or invariant."""


@dataclass(frozen=True)
class SequenceManifest:
    """A loaded sequence: decoded frames plus optional ground truth."""

    name: str
    frame_paths: List[Path]
    frames: List[Frame]
    ground_truth: Optional[List[BoundingBox]] = None


def _numeric_key(path):
    match = re.search(r"(\d+)", path.stem)
    return (0, int(match.group(1)), path.name) if match else (1, 0, path.name)


def _decode_frame(path, index):
    try:
        with Image.open(path) as img:
            if img.mode == "L":
                arr = np.asarray(img, dtype=float) / 255.0
            elif img.mode in ("I", "I;16"):
                arr = np.asarray(img, dtype=float) / 65535.0
            else:
                arr = to_gray(np.asarray(img.convert("RGB"), dtype=float) / 255.0)
    except (OSError, ValueError) as exc:
        raise SequenceLoadError(f"cannot decode {path}: {exc}") from exc
    return Frame(pixels=np.clip(arr, 0.0, 1.0), index=index)


def load_sequence(seq_dir):
    """Load a sequence directory into a SequenceManifest."""
    seq_dir = Path(seq_dir)
    img_dir = seq_dir / "img"
    if not img_dir.is_dir():
        raise SequenceLoadError(f"no img/ directory under {seq_dir}")
    paths = sorted(
        (p for p in img_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS),
        key=_numeric_key,
    )
    if not paths:
        raise SequenceLoadError(f"no image files in {img_dir}")
    frames = [_decode_frame(p, i) for i, p in enumerate(paths)]

    gt = None
    gt_path = seq_dir / GROUNDTRUTH_NAME
    if gt_path.is_file():
        gt = parse_groundtruth(gt_path)
        if len(gt) != len(frames):
            raise GroundTruthMismatchError(
                f"{len(frames)} frames but {len(gt)} ground-truth lines in {gt_path}"
            )
    return SequenceManifest(name=seq_dir.name, frame_paths=paths, frames=frames, ground_truth=gt)


def parse_groundtruth(path):
    """Parse one x,y,w,h box per non-empty line (comma/tab/space separated)."""
    boxes = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = re.split(r"[,\s]+", line)
        if len(fields) != 4:
            raise GroundTruthParseError(f"line {lineno}: expected 4 fields, got {len(fields)}")
        try:
            x, y, w, h = (float(f) for f in fields)
        except ValueError as exc:
            raise GroundTruthParseError(f"line {lineno}: non-numeric field ({exc})") from exc
        if w <= 0 or h <= 0:
            raise GroundTruthParseError(f"line {lineno}: non-positive box extents {w} x {h}")
        boxes.append(BoundingBox(x, y, w, h))
    return boxes


def write_results(path, boxes):
    """Write one "x,y,w,h" line per box, 2 decimal places."""
    lines = [f"{b.x:.2f},{b.y:.2f},{b.w:.2f},{b.h:.2f}" for b in boxes]
    Path(path).write_text("".join(line + "\n" for line in lines))


def save_sequence(seq_dir, frames, boxes):
    """Write frames as 8-bit PNGs plus the ground-truth file."""
    seq_dir = Path(seq_dir)
    img_dir = seq_dir / "img"
    img_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        arr = np.clip(np.round(frame.pixels * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(img_dir / f"{i + 1:04d}.png")
    write_results(seq_dir / GROUNDTRUTH_NAME, boxes)


def read_key_values(path):
    """Parse a flat "key = value" file with # comments into an ordered dict."""
    out = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _typed(kv, key, kind, default):
    if key not in kv:
        return default
    raw = kv.pop(key)
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is str:
            return raw
        if kind == "int_tuple":
            return tuple(int(tok) for tok in re.split(r"[,\s]+", raw) if tok)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind}") from exc
    raise ConfigError(f"unsupported kind {kind!r}")


def load_config(path=None):
    """Build a TrackerConfig from a key=value file; missing keys use defaults.

    Recognized keys: n_candidates, trans_std, scale_std, buffer_size,
    shift_magnitudes, relearn_interval, feature_mode, seed, workers-agnostic
    solver keys lambda, mu (or 'auto'), tol, max_iter, kernel_sigma.
    Unknown keys are rejected.
    """
    kv = read_key_values(path) if path is not None else {}

    mu_raw = kv.pop("mu", None)
    if mu_raw is None or mu_raw == "auto":
        mu = None
    else:
        try:
            mu = float(mu_raw)
        except ValueError as exc:
            raise ConfigError(f"key 'mu': cannot parse {mu_raw!r} as float") from exc

    solver_kwargs = dict(
        lam=_typed(kv, "lambda", float, 1e-4),
        mu=mu,
        tol=_typed(kv, "tol", float, 1e-8),
        max_iter=_typed(kv, "max_iter", int, 500),
        kernel_sigma=_typed(kv, "kernel_sigma", float, 1.0),
    )
    tracker_kwargs = dict(
        n_candidates=_typed(kv, "n_candidates", int, 400),
        trans_std=_typed(kv, "trans_std", float, 2.0),
        scale_std=_typed(kv, "scale_std", float, 0.01),
        buffer_size=_typed(kv, "buffer_size", int, 50),
        shift_magnitudes=_typed(kv, "shift_magnitudes", "int_tuple", (5, 7, 9, 11, 13, 15)),
        relearn_interval=_typed(kv, "relearn_interval", int, 10),
        feature_mode=_typed(kv, "feature_mode", str, "hog"),
        seed=_typed(kv, "seed", int, 0),
    )
    if kv:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(kv))}")
    try:
        return TrackerConfig(solver=SolverConfig(**solver_kwargs), **tracker_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_synth_spec(path):
    """Build a SynthSpec from a key=value file.

    Keys: width, height, patch_size, x, y, vx, vy, length, noise_std, seed,
    and the optional groups (occl_first, occl_last, occl_fraction) and
    (gain_start, gain_end).
    """
    kv = read_key_values(path)
    occl_keys = ("occl_first", "occl_last", "occl_fraction")
    gain_keys = ("gain_start", "gain_end")

    occlusion = None
    present = [k for k in occl_keys if k in kv]
    if present:
        if len(present) != len(occl_keys):
            raise ConfigError(f"occlusion needs all of {occl_keys}, got only {present}")
        occlusion = (
            _typed(kv, "occl_first", int, None),
            _typed(kv, "occl_last", int, None),
            _typed(kv, "occl_fraction", float, None),
        )
    illumination = None
    present = [k for k in gain_keys if k in kv]
    if present:
        if len(present) != len(gain_keys):
            raise ConfigError(f"illumination needs all of {gain_keys}, got only {present}")
        illumination = (
            _typed(kv, "gain_start", float, None),
            _typed(kv, "gain_end", float, None),
        )

    kwargs = dict(
        frame_size=(_typed(kv, "width", int, 320), _typed(kv, "height", int, 240)),
        patch_size=_typed(kv, "patch_size", int, 48),
        init_pos=(_typed(kv, "x", float, 40.0), _typed(kv, "y", float, 60.0)),
        velocity=(_typed(kv, "vx", float, 2.0), _typed(kv, "vy", float, 1.0)),
        length=_typed(kv, "length", int, 120),
        occlusion=occlusion,
        illumination=illumination,
        noise_std=_typed(kv, "noise_std", float, 0.02),
        seed=_typed(kv, "seed", int, 0),
    )
    if kv:
        raise ConfigError(f"unknown synth key(s): {', '.join(sorted(kv))}")
    try:
        return SynthSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
