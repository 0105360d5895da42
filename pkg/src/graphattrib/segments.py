"""Data model and ingestion for profile/test embedding segments.

A session is an ordered collection of fixed-dimensional embedding vectors.
Profile segments carry a speaker label and always precede test segments in
the set; test segments may carry a ground-truth label for scoring, but
classifiers only ever see them through :meth:`SegmentSet.without_test_labels`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

_FILE_KEYS = ("version", "dim", "num_classes", "segments")
_SEGMENT_KEYS = ("id", "kind", "speaker", "vector")


class SegmentKind(Enum):
    PROFILE = "profile"
    TEST = "test"


@dataclass(frozen=True, eq=False)
class Segment:
    """One embedding vector with its identity and (optional) speaker label."""

    id: str
    kind: SegmentKind
    speaker: int | None
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1:
            raise ValueError(f"segment {self.id!r}: vector must be 1-D, got shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"segment {self.id!r}: invalid vector (NaN or Inf entry)")
        if float(np.linalg.norm(vec)) == 0.0:
            raise ValueError(f"segment {self.id!r}: invalid vector (zero norm)")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)
        if self.kind is SegmentKind.PROFILE and self.speaker is None:
            raise ValueError(f"segment {self.id!r}: profile segment without speaker label")

    def __eq__(self, other):
        if not isinstance(other, Segment):
            return NotImplemented
        return (
            self.id == other.id
            and self.kind is other.kind
            and self.speaker == other.speaker
            and np.array_equal(self.vector, other.vector)
        )


@dataclass(frozen=True, eq=False)
class SegmentSet:
    """Ordered segments of one session, profile block first.

    Construction validates every invariant: uniform dimension, profiles
    preceding tests, at least one profile per class, at least one test
    segment, and unique segment ids.
    """

    segments: tuple[Segment, ...]
    emb_dim: int
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.emb_dim < 1:
            raise ValueError(f"emb_dim must be positive, got {self.emb_dim}")
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be positive, got {self.num_classes}")
        if not self.segments:
            raise ValueError("segment set is empty")

        seen: set[str] = set()
        in_test_block = False
        covered: set[int] = set()
        num_profiles = 0
        for seg in self.segments:
            if seg.id in seen:
                raise ValueError(f"duplicate segment id {seg.id!r}")
            seen.add(seg.id)
            if seg.vector.shape[0] != self.emb_dim:
                raise ValueError(
                    f"segment {seg.id!r}: dimension {seg.vector.shape[0]} != emb_dim {self.emb_dim}"
                )
            if seg.speaker is not None and not 0 <= seg.speaker < self.num_classes:
                raise ValueError(
                    f"segment {seg.id!r}: speaker {seg.speaker} outside [0, {self.num_classes})"
                )
            if seg.kind is SegmentKind.TEST:
                in_test_block = True
            elif in_test_block:
                raise ValueError(f"segment {seg.id!r}: profile segment after a test segment")
            else:
                covered.add(seg.speaker)
                num_profiles += 1

        missing = sorted(set(range(self.num_classes)) - covered)
        if missing:
            raise ValueError(f"uncovered class {missing[0]}: no profile segment")
        if not in_test_block:
            raise ValueError("segment set has no test segments")

        matrix = np.stack([seg.vector for seg in self.segments])
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)
        object.__setattr__(self, "_num_profiles", num_profiles)

    @property
    def num_segments(self) -> int:
        return len(self.segments)

    @property
    def num_profiles(self) -> int:
        return self._num_profiles  # type: ignore[attr-defined]

    @property
    def profiles(self) -> tuple[Segment, ...]:
        return self.segments[: self.num_profiles]

    @property
    def tests(self) -> tuple[Segment, ...]:
        return self.segments[self.num_profiles:]

    @property
    def matrix(self) -> np.ndarray:
        """All vectors stacked row-wise, shape (num_segments, emb_dim); read-only."""
        return self._matrix  # type: ignore[attr-defined]

    @property
    def profile_labels(self) -> np.ndarray:
        """Speaker index of each profile segment, shape (num_profiles,)."""
        return np.array([s.speaker for s in self.profiles], dtype=np.int64)

    @property
    def test_truth(self) -> tuple[int | None, ...]:
        """Ground-truth speaker of each test segment (None where unknown)."""
        return tuple(s.speaker for s in self.tests)

    def profile_ids_by_speaker(self) -> dict[int, tuple[str, ...]]:
        out: dict[int, list[str]] = {c: [] for c in range(self.num_classes)}
        for seg in self.profiles:
            out[seg.speaker].append(seg.id)
        return {c: tuple(ids) for c, ids in out.items()}

    def without_test_labels(self) -> "SegmentSet":
        """Classifier-facing view: test segments with their labels erased."""
        stripped = tuple(
            Segment(s.id, s.kind, None, s.vector) if s.kind is SegmentKind.TEST else s
            for s in self.segments
        )
        return SegmentSet(stripped, self.emb_dim, self.num_classes)

    def __eq__(self, other):
        if not isinstance(other, SegmentSet):
            return NotImplemented
        return (
            self.emb_dim == other.emb_dim
            and self.num_classes == other.num_classes
            and self.segments == other.segments
        )


@dataclass(frozen=True)
class ProfileSample:
    """A per-speaker choice of consecutive profile segment ids."""

    per_speaker: dict[int, tuple[str, ...]]
    count_per_speaker: int

    def __post_init__(self):
        for speaker, ids in self.per_speaker.items():
            if len(ids) != self.count_per_speaker:
                raise ValueError(
                    f"speaker {speaker}: sample has {len(ids)} ids, expected {self.count_per_speaker}"
                )

    @property
    def all_ids(self) -> frozenset[str]:
        return frozenset(i for ids in self.per_speaker.values() for i in ids)


def load_segment_set(path) -> SegmentSet:
    """Parse and validate an embedding-set file; profiles are reordered first."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed embedding-set file: {exc}") from exc

    if not isinstance(doc, dict):
        raise ValueError(f"{path}: malformed embedding-set file: expected a JSON object")
    _check_keys(doc, _FILE_KEYS, str(path))

    version = doc["version"]
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {version!r} (expected {FORMAT_VERSION})")
    dim = _expect_int(doc["dim"], f"{path}: dim")
    num_classes = _expect_int(doc["num_classes"], f"{path}: num_classes")
    if not isinstance(doc["segments"], list):
        raise ValueError(f"{path}: segments must be an array")

    profiles: list[Segment] = []
    tests: list[Segment] = []
    for idx, obj in enumerate(doc["segments"]):
        where = f"{path}: segments[{idx}]"
        if not isinstance(obj, dict):
            raise ValueError(f"{where}: expected an object")
        _check_keys(obj, _SEGMENT_KEYS, where)
        if not isinstance(obj["id"], str):
            raise ValueError(f"{where}: id must be a string")
        try:
            kind = SegmentKind(obj["kind"])
        except ValueError:
            raise ValueError(f"{where}: kind must be 'profile' or 'test', got {obj['kind']!r}") from None
        speaker = obj["speaker"]
        if speaker is not None:
            speaker = _expect_int(speaker, f"{where}: speaker")
        vector = obj["vector"]
        if not isinstance(vector, list) or not all(isinstance(v, (int, float)) for v in vector):
            raise ValueError(f"{where}: vector must be an array of numbers")
        if len(vector) != dim:
            raise ValueError(f"{where}: vector has {len(vector)} entries, expected dim {dim}")
        seg = Segment(obj["id"], kind, speaker, np.asarray(vector, dtype=np.float64))
        (profiles if kind is SegmentKind.PROFILE else tests).append(seg)

    return SegmentSet(tuple(profiles + tests), dim, num_classes)


def save_segment_set(segment_set: SegmentSet, path) -> None:
    """Write the embedding-set file format; floats keep full double precision."""
    doc = {
        "version": FORMAT_VERSION,
        "dim": segment_set.emb_dim,
        "num_classes": segment_set.num_classes,
        "segments": [
            {
                "id": s.id,
                "kind": s.kind.value,
                "speaker": s.speaker,
                "vector": [float(v) for v in s.vector],
            }
            for s in segment_set.segments
        ],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def average_vectors(vectors) -> np.ndarray:
    """Elementwise mean of a nonempty list of equal-length vectors.

    Exposed so callers holding frame-level embeddings can pool them into a
    single per-segment vector before building a session.
    """
    if len(vectors) == 0:
        raise ValueError("average_vectors: empty list")
    arrays = [np.asarray(v, dtype=np.float64) for v in vectors]
    dims = {a.shape for a in arrays}
    if len(dims) != 1:
        raise ValueError(f"average_vectors: mixed dimensions {sorted(dims)}")
    return np.mean(arrays, axis=0)


def sample_consecutive_profiles(segment_set: SegmentSet, k: int, seed) -> ProfileSample:
    """Pick k consecutive profile segments per speaker, uniformly at random.

    The start offset is drawn independently per speaker, in speaker order,
    from ``default_rng(seed)``; runs never wrap around the end of a
    speaker's profile list. Deterministic for a fixed seed.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    by_speaker = segment_set.profile_ids_by_speaker()
    per_speaker: dict[int, tuple[str, ...]] = {}
    for speaker in range(segment_set.num_classes):
        ids = by_speaker[speaker]
        if len(ids) < k:
            raise ValueError(
                f"speaker {speaker}: insufficient profiles ({len(ids)} < {k})"
            )
        start = int(rng.integers(0, len(ids) - k + 1))
        per_speaker[speaker] = ids[start : start + k]
    return ProfileSample(per_speaker=per_speaker, count_per_speaker=k)


def restrict_to_sample(segment_set: SegmentSet, sample: ProfileSample) -> SegmentSet:
    """New set whose profiles are exactly the sampled ids; tests untouched."""
    chosen = sample.all_ids
    profile_ids = {s.id for s in segment_set.profiles}
    unknown = sorted(chosen - profile_ids)
    if unknown:
        raise ValueError(f"unknown profile segment id {unknown[0]!r}")
    kept = tuple(s for s in segment_set.profiles if s.id in chosen)
    return SegmentSet(kept + segment_set.tests, segment_set.emb_dim, segment_set.num_classes)


def _check_keys(obj: dict, allowed, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ValueError(f"{where}: unknown key {unknown[0]!r}")
    missing = sorted(set(allowed) - set(obj))
    if missing:
        raise ValueError(f"{where}: missing key {missing[0]!r}")


def _expect_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{where}: expected an integer, got {value!r}")
    return value
