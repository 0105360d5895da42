"""Synthetic session generator.

Each speaker is a random unit direction; profile and test vectors are
Gaussian perturbations of that direction, renormalized to the unit sphere.
A per-session bias of configurable norm is added to every test vector before
normalization to mimic a recording-channel mismatch between enrollment and
session audio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .segments import Segment, SegmentKind, SegmentSet


@dataclass(frozen=True)
class SynthConfig:
    num_speakers: int = 8
    profiles_per_speaker: int = 40
    tests_per_speaker: int = 100
    emb_dim: int = 64
    profile_noise: float = 0.4
    test_noise: float = 0.4
    domain_shift: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.num_speakers < 2:
            raise ValueError(f"num_speakers must be at least 2, got {self.num_speakers}")
        if self.emb_dim < 2:
            raise ValueError(f"emb_dim must be at least 2, got {self.emb_dim}")
        if self.profiles_per_speaker < 1 or self.tests_per_speaker < 1:
            raise ValueError("profiles_per_speaker and tests_per_speaker must be positive")
        if self.profile_noise < 0.0 or self.test_noise < 0.0 or self.domain_shift < 0.0:
            raise ValueError("noise and shift magnitudes must be nonnegative")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")


def gen_session(config: SynthConfig) -> SegmentSet:
    """Deterministic synthetic session for a given config.

    Draw order is fixed: speaker mean directions, then the shift direction,
    then per-speaker profile noise blocks, then per-speaker test noise
    blocks. Test segments keep their ground-truth label.
    """
    rng = np.random.default_rng(config.seed)
    c, d = config.num_speakers, config.emb_dim
    means = _unit_rows(rng.standard_normal((c, d)), rng, d)
    shift = config.domain_shift * _unit_rows(rng.standard_normal((1, d)), rng, d)[0]

    segments: list[Segment] = []
    for spk in range(c):
        noise = config.profile_noise * rng.standard_normal((config.profiles_per_speaker, d))
        for i, vec in enumerate(_unit_rows(means[spk] + noise, rng, d)):
            segments.append(Segment(f"p{spk:02d}-{i:04d}", SegmentKind.PROFILE, spk, vec))
    tests: list[Segment] = []
    for spk in range(c):
        noise = config.test_noise * rng.standard_normal((config.tests_per_speaker, d))
        for i, vec in enumerate(_unit_rows(means[spk] + noise + shift, rng, d)):
            tests.append(Segment(f"t{spk:02d}-{i:04d}", SegmentKind.TEST, spk, vec))

    return SegmentSet(tuple(segments + tests), emb_dim=d, num_classes=c)


def all_vectors_unit_norm(segment_set: SegmentSet, tol: float = 1e-9) -> bool:
    """True iff every vector's Euclidean norm is within tol of 1."""
    norms = np.linalg.norm(segment_set.matrix, axis=1)
    return bool(np.all(np.abs(norms - 1.0) <= tol))


def _unit_rows(rows: np.ndarray, rng: np.random.Generator, dim: int) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    norms = np.linalg.norm(rows, axis=1)
    # a perturbed vector can cancel to (near) zero; redraw such rows from the
    # same stream so generation stays deterministic
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        rows[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(rows, axis=1)
    return rows / norms[:, None]
