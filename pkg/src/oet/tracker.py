"""Particle-filter tracking loop driven by the learned subspace model.

Per frame: resample candidate motion states from the previous weights,
crop/featurize each candidate, project it onto the current subspace, fuse the
representation error with the classifier's discrimination error into a single
score psi, and pick the minimizer.  The appearance model (subspace +
classifier) is re-learned every relearn_interval frames from a buffer of past
targets plus freshly collected background samples.

Determinism: all RNG draws happen in the sequential sampling phase, and
candidate scoring runs over fixed-size index chunks whose contents do not
depend on the worker count, so results are identical for any --workers value.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .classifier import train_classifier
from .embedding import DegenerateSubspaceError, SolverConfig, TrainingSet, learn_embedding
from .features import BoundingBox, OutOfFrameError, crop_resize, extract_feature
from .hsic import make_labels
from .numerics import soft_threshold
from .representation import PROJECT_MAX_ITER

COMPASS = ((0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1))
JITTER_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1))
SCORE_CHUNK = 64
MIN_SIGMA = 1e-3


class LocalizationFailureError(RuntimeError):
    """Raised when every candidate in a frame failed to score."""


@dataclass(frozen=True)
class MotionState:
    """Candidate state: center position plus a scale multiplier."""

    x: float
    y: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y) and np.isfinite(self.sigma)):
            raise ValueError("motion state must be finite")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass
class Candidate:
    """One tracking hypothesis and everything computed for it."""

    state: MotionState
    box: Optional[BoundingBox] = None
    feature: Optional[np.ndarray] = None
    psi: float = np.inf


@dataclass(frozen=True)
class TrackerConfig:
    """All tracking hyperparameters in one validated record."""

    n_candidates: int = 400
    trans_std: float = 2.0
    scale_std: float = 0.01
    buffer_size: int = 50
    shift_magnitudes: Tuple[int, ...] = (5, 7, 9, 11, 13, 15)
    relearn_interval: int = 10
    feature_mode: str = "hog"
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0

    def __post_init__(self):
        if self.n_candidates < 1:
            raise ValueError(f"n_candidates must be positive, got {self.n_candidates}")
        if self.trans_std < 0 or self.scale_std < 0:
            raise ValueError("sampling stds must be non-negative")
        if self.buffer_size < 1:
            raise ValueError(f"buffer_size must be positive, got {self.buffer_size}")
        if len(self.shift_magnitudes) == 0 or min(self.shift_magnitudes) <= 0:
            raise ValueError("shift_magnitudes must be non-empty and positive")
        if self.relearn_interval < 1:
            raise ValueError(f"relearn_interval must be >= 1, got {self.relearn_interval}")
        if self.feature_mode not in ("hog", "raw"):
            raise ValueError(f"feature_mode must be 'hog' or 'raw', got {self.feature_mode!r}")

    @property
    def n_background(self):
        return 8 * len(self.shift_magnitudes)


@dataclass(frozen=True)
class TargetBuffer:
    """Bounded FIFO of past target features; the first target is pinned."""

    pinned: Tuple[int, np.ndarray]
    entries: Tuple[Tuple[int, np.ndarray], ...]
    capacity: int

    def __len__(self):
        return 1 + len(self.entries)

    @property
    def features(self):
        return [self.pinned[1]] + [f for _, f in self.entries]

    @property
    def frames(self):
        return [self.pinned[0]] + [i for i, _ in self.entries]


def make_buffer(capacity, pinned_frame, pinned_feature):
    if capacity < 1:
        raise ValueError("buffer capacity must be positive")
    return TargetBuffer(pinned=(pinned_frame, pinned_feature), entries=(), capacity=capacity)


def update_buffer(buf, target_feature, frame_idx):
    """Append the latest target; evict the oldest non-pinned entry if full."""
    entries = buf.entries + ((frame_idx, target_feature),)
    while 1 + len(entries) > buf.capacity:
        entries = entries[1:]
    return TargetBuffer(pinned=buf.pinned, entries=entries, capacity=buf.capacity)


def sample_candidates(prev, cfg, rng):
    """Resample parents by exp(-psi) weights, then perturb with Gaussian noise."""
    if len(prev) == 0:
        raise ValueError("need at least one parent candidate")
    psi = np.array([c.psi for c in prev], dtype=float)
    weights = np.exp(-psi)
    total = weights.sum()
    if total <= 0:
        weights = np.full(len(prev), 1.0 / len(prev))
    else:
        weights = weights / total
    parents = rng.choice(len(prev), size=cfg.n_candidates, p=weights)
    dx = rng.normal(0.0, cfg.trans_std, cfg.n_candidates)
    dy = rng.normal(0.0, cfg.trans_std, cfg.n_candidates)
    ds = rng.normal(0.0, cfg.scale_std, cfg.n_candidates)
    states = []
    for k, p in enumerate(parents):
        s = prev[p].state
        states.append(
            MotionState(x=s.x + dx[k], y=s.y + dy[k], sigma=max(s.sigma + ds[k], MIN_SIGMA))
        )
    return states


def state_to_box(state, base_w, base_h):
    """Pixel rectangle of a motion state given the initial target extents."""
    w = base_w * state.sigma
    h = base_h * state.sigma
    return BoundingBox(state.x - w / 2.0, state.y - h / 2.0, w, h)


def _project_block(CC, P, mu_override, tol):
    """Project a block of centered candidates (columns of CC) onto span(P).

    Vectorized version of the per-candidate alternating scheme; converged
    columns are frozen so each column's result does not depend on how long
    its neighbors keep iterating.  Returns (Z, rep_errors).
    """
    m, k = CC.shape
    peaks = np.max(np.abs(CC), axis=0)
    if mu_override is not None:
        theta = np.full(k, 1.0 / mu_override)
    else:
        with np.errstate(divide="ignore"):
            theta = np.where(peaks > 0, peaks / 10.0, 0.0)

    E = np.zeros_like(CC)
    prev_l1 = np.zeros(k)
    active = peaks > 0
    for _ in range(PROJECT_MAX_ITER):
        if not active.any():
            break
        Z = P.T @ (CC - E)
        Enew = soft_threshold(theta[None, :], CC - P @ Z)
        E[:, active] = Enew[:, active]
        l1 = np.abs(E).sum(axis=0)
        newly_done = active & (np.abs(l1 - prev_l1) < tol)
        prev_l1 = l1
        active = active & ~newly_done

    Z = P.T @ (CC - E)
    Efinal = CC - P @ Z
    return Z, np.abs(Efinal).sum(axis=0)


def _score_chunk(cands, idx, model, clf, tol):
    """Representation and discrimination errors for one index chunk."""
    cols = [i for i in idx if cands[i].feature is not None]
    if not cols:
        return []
    X = np.stack([cands[i].feature for i in cols], axis=1)
    CC = X - model.mean[:, None]
    Z, rep = _project_block(CC, model.basis, None, tol)
    responses = clf.weights @ Z + clf.bias
    disc = np.abs(responses - 1.0)
    return list(zip(cols, rep, disc))


def score_candidates(cands, model, clf, cfg=None, workers=1):
    """Fused score psi for every candidate.

    psi_i = phi_i / ||phi||_2 + varphi_i / ||varphi||_2, where phi is the
    representation error and varphi the discrimination error, both normalized
    over the finite candidates; a zero norm drops that term for everyone.
    Candidates without features (failed crops) get psi = +inf.
    """
    if len(cands) < 1:
        raise ValueError("need at least one candidate")
    solver = cfg.solver if cfg is not None else SolverConfig()
    tol = solver.tol

    n = len(cands)
    phi = np.full(n, np.inf)
    varphi = np.full(n, np.inf)
    chunks = [range(s, min(s + SCORE_CHUNK, n)) for s in range(0, n, SCORE_CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _score_chunk(cands, c, model, clf, tol), chunks))
    else:
        results = [_score_chunk(cands, c, model, clf, tol) for c in chunks]
    for triples in results:
        for i, rep, disc in triples:
            phi[i] = rep
            varphi[i] = disc

    finite = np.isfinite(phi) & np.isfinite(varphi)
    psi = np.full(n, np.inf)
    if finite.any():
        psi[finite] = 0.0
        phi_norm = np.linalg.norm(phi[finite])
        if phi_norm > 0:
            psi[finite] += phi[finite] / phi_norm
        varphi_norm = np.linalg.norm(varphi[finite])
        if varphi_norm > 0:
            psi[finite] += varphi[finite] / varphi_norm
    return psi


def localize(cands):
    """Candidate with minimal psi; ties go to the lowest index."""
    if len(cands) == 0:
        raise ValueError("no candidates to localize")
    psi = np.array([c.psi for c in cands], dtype=float)
    best = int(np.argmin(psi))
    if not np.isfinite(psi[best]):
        raise LocalizationFailureError("every candidate scored +inf")
    return cands[best]


def background_boxes(target_box, magnitudes, frame_w, frame_h):
    """Compass-shifted copies of the target box, clamped into the frame."""
    boxes = []
    for ux, uy in COMPASS:
        for mag in magnitudes:
            x = target_box.x + ux * mag
            y = target_box.y + uy * mag
            x = min(max(x, 0.0), max(0.0, frame_w - target_box.w))
            y = min(max(y, 0.0), max(0.0, frame_h - target_box.h))
            boxes.append(BoundingBox(x, y, target_box.w, target_box.h))
    return boxes


def collect_background(frame, target_box, cfg):
    """Features of the 8 x len(shift_magnitudes) shifted background boxes."""
    boxes = background_boxes(target_box, cfg.shift_magnitudes, frame.width, frame.height)
    return [extract_feature(crop_resize(frame, b), cfg.feature_mode) for b in boxes]


def _jitter_features(frame, box, cfg, count):
    """Deterministic +-1 px jittered crops of the current target."""
    feats = []
    for k in range(count):
        ox, oy = JITTER_OFFSETS[k % len(JITTER_OFFSETS)]
        jbox = BoundingBox(box.x + ox, box.y + oy, box.w, box.h)
        feats.append(extract_feature(crop_resize(frame, jbox), cfg.feature_mode))
    return feats


def _relearn(buffer, background, frame, box, cfg):
    """Learn a fresh (model, classifier) pair; None when degenerate."""
    positives = buffer.features
    fill = cfg.buffer_size - len(positives)
    if fill > 0:
        positives = positives + _jitter_features(frame, box, cfg, fill)
    n_pos = len(positives)
    n_neg = len(background)
    X = np.stack(positives + list(background), axis=1)
    train = TrainingSet(features=X, labels=make_labels(n_pos, n_neg), n_pos=n_pos, n_neg=n_neg)
    try:
        model = learn_embedding(train, cfg.solver)
    except DegenerateSubspaceError:
        return None
    Z = model.basis.T @ (X - model.mean[:, None])
    labels = np.concatenate([np.ones(n_pos), np.zeros(n_neg)])
    clf = train_classifier(Z, labels, reg=1e-3 * (n_pos + n_neg))
    if clf.degenerate:
        return None
    return model, clf


@dataclass(frozen=True)
class TrackResult:
    """Output of track_sequence.

    boxes           one BoundingBox per input frame (frame 0 = init box)
    failed_frames   frames where localization failed (previous box emitted)
    relearn_frames  frames where the model was (re)learned successfully
    dims            adaptive subspace dimension at each relearn
    mean_psi        mean fused score of the chosen candidate
    elapsed         wall-clock seconds
    """

    boxes: list
    failed_frames: Tuple[int, ...]
    relearn_frames: Tuple[int, ...]
    dims: Tuple[int, ...]
    mean_psi: float
    elapsed: float


def track_sequence(frames, init_box, cfg=None, workers=1):
    """Track the target given its first-frame box; returns a TrackResult."""
    if cfg is None:
        cfg = TrackerConfig()
    if len(frames) == 0:
        raise ValueError("empty sequence")
    t_start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)

    frame0 = frames[0]
    target_feat = extract_feature(crop_resize(frame0, init_box), cfg.feature_mode)
    buffer = make_buffer(cfg.buffer_size, 0, target_feat)
    background = collect_background(frame0, init_box, cfg)
    latest_frame, latest_box = frame0, init_box

    cx, cy = init_box.center
    parents = [Candidate(state=MotionState(cx, cy, 1.0), box=init_box, psi=0.0)]
    model = None
    clf = None

    boxes = [init_box]
    failed = []
    relearns = []
    dims = []
    chosen_psi = []
    for j in range(1, len(frames)):
        frame = frames[j]
        if (j - 1) % cfg.relearn_interval == 0:
            learned = _relearn(buffer, background, latest_frame, latest_box, cfg)
            if learned is not None:
                model, clf = learned
                relearns.append(j)
                dims.append(model.dim)

        states = sample_candidates(parents, cfg, rng)
        cands = []
        for s in states:
            cand = Candidate(state=s, box=state_to_box(s, init_box.w, init_box.h))
            try:
                patch = crop_resize(frame, cand.box)
                cand.feature = extract_feature(patch, cfg.feature_mode)
            except OutOfFrameError:
                cand.feature = None
            cands.append(cand)

        if model is not None:
            psi = score_candidates(cands, model, clf, cfg, workers=workers)
            for c, p in zip(cands, psi):
                c.psi = float(p)
        try:
            if model is None:
                raise LocalizationFailureError("no appearance model available")
            chosen = localize(cands)
        except LocalizationFailureError:
            failed.append(j)
            boxes.append(boxes[-1])
            lx, ly = boxes[-1].center
            parents = [Candidate(state=MotionState(lx, ly, parents[0].state.sigma), psi=0.0)]
            continue

        boxes.append(chosen.box)
        chosen_psi.append(chosen.psi)
        buffer = update_buffer(buffer, chosen.feature, j)
        background = collect_background(frame, chosen.box, cfg)
        latest_frame, latest_box = frame, chosen.box
        # Next frame's proposals grow from the localized candidate alone.
        # The fused score psi is normalized over the candidate set, so
        # exp(-psi) weights across hundreds of candidates are nearly uniform
        # and a full-set parent cloud would diffuse away from a moving
        # target; trans_std comfortably covers per-frame motion from one
        # parent.
        parents = [chosen]

    return TrackResult(
        boxes=boxes,
        failed_frames=tuple(failed),
        relearn_frames=tuple(relearns),
        dims=tuple(dims),
        mean_psi=float(np.mean(chosen_psi)) if chosen_psi else float("nan"),
        elapsed=time.perf_counter() - t_start,
    )
