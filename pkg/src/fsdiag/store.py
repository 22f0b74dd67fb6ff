"""Load and validate the data bundle: manifest, feature matrices, shots.

File formats
------------
Manifest: UTF-8 JSON with keys ``version``, ``num_samples``, ``classes``,
``learners`` (array of ``{id, features, dim}``), ``shots`` (array of
``{sample, class}``) and optional ``label_embeddings``, ``ground_truth``,
``images``. Relative paths are resolved against the manifest's directory.

Feature file (``.f32``): magic bytes ``FSD1``, little-endian u32 ``rows``,
little-endian u32 ``cols``, then ``rows * cols`` IEEE-754 f32 values in
row-major order.

Ground truth: CSV with header ``sample,class``, one integer pair per row.

Rows of every feature matrix are L2-normalized on load so that the dot
product of two rows is their cosine similarity. All-zero rows are rejected.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FeatureFileError, ManifestError

MAGIC = b"FSD1"
_HEADER = struct.Struct("<4sII")

_REQUIRED_KEYS = {"version", "num_samples", "classes", "learners", "shots"}
_OPTIONAL_KEYS = {"label_embeddings", "ground_truth", "images"}


@dataclass(frozen=True)
class LearnerEntry:
    learner_id: str
    feature_path: Path
    dim: int


@dataclass(frozen=True)
class Manifest:
    version: int
    num_samples: int
    class_names: tuple[str, ...]
    learner_entries: tuple[LearnerEntry, ...]
    shot_entries: tuple[tuple[int, int], ...]
    label_embedding_path: Path | None = None
    ground_truth_path: Path | None = None
    image_dir: Path | None = None

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True)
class FeatureMatrix:
    """Unit-row feature matrix of one learner (rows = samples)."""

    rows: int
    cols: int
    data: np.ndarray  # (rows, cols) float64, rows L2-normalized

    def __post_init__(self):
        assert self.data.shape == (self.rows, self.cols)


class ShotSet:
    """Labeled (sample, class) pairs with O(1) per-class and per-sample lookup."""

    def __init__(self, entries):
        entries = [(int(s), int(c)) for s, c in entries]
        seen = set()
        for s, _ in entries:
            if s in seen:
                raise ManifestError(
                    f"duplicate shot sample index {s}", code="duplicate_shot_sample"
                )
            seen.add(s)
        self._entries = tuple(entries)
        self._by_sample = {s: c for s, c in entries}
        self._by_class: dict[int, list[int]] = {}
        for s, c in entries:
            self._by_class.setdefault(c, []).append(s)

    @property
    def entries(self) -> tuple[tuple[int, int], ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, sample: int) -> bool:
        return sample in self._by_sample

    def class_of(self, sample: int) -> int:
        return self._by_sample[sample]

    def samples_of_class(self, class_index: int) -> list[int]:
        return list(self._by_class.get(class_index, []))

    def classes_with_shots(self) -> list[int]:
        return sorted(self._by_class)

    def sample_indices(self) -> list[int]:
        return [s for s, _ in self._entries]


def load_manifest(path) -> Manifest:
    """Parse and fully validate a manifest file.

    Referenced feature files must exist and their headers must match the
    declared ``num_samples`` and per-learner ``dim``.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}", code="missing_file")
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}", code="parse_error")

    if not isinstance(raw, dict):
        raise ManifestError("manifest root must be a JSON object", code="parse_error")
    missing = _REQUIRED_KEYS - raw.keys()
    if missing:
        raise ManifestError(
            f"manifest missing keys: {sorted(missing)}", code="parse_error"
        )
    unknown = raw.keys() - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if unknown:
        raise ManifestError(
            f"manifest has unknown keys: {sorted(unknown)}", code="parse_error"
        )

    base = path.parent
    num_samples = int(raw["num_samples"])
    if num_samples <= 0:
        raise ManifestError("num_samples must be positive", code="parse_error")

    classes = [str(c) for c in raw["classes"]]
    if len(set(classes)) != len(classes):
        raise ManifestError("class names must be unique", code="duplicate_class_name")

    entries = []
    seen_ids = set()
    for item in raw["learners"]:
        lid = str(item["id"])
        if lid in seen_ids:
            raise ManifestError(
                f"duplicate learner id {lid!r}", code="duplicate_learner_id"
            )
        seen_ids.add(lid)
        entries.append(LearnerEntry(lid, base / item["features"], int(item["dim"])))

    shots = []
    for item in raw["shots"]:
        s, c = int(item["sample"]), int(item["class"])
        if not 0 <= s < num_samples:
            raise ManifestError(
                f"shot sample index {s} out of range [0, {num_samples})",
                code="shot_sample_out_of_range",
            )
        if not 0 <= c < len(classes):
            raise ManifestError(
                f"shot class index {c} out of range [0, {len(classes)})",
                code="shot_class_out_of_range",
            )
        shots.append((s, c))
    ShotSet(shots)  # raises on duplicate samples

    manifest = Manifest(
        version=int(raw["version"]),
        num_samples=num_samples,
        class_names=tuple(classes),
        learner_entries=tuple(entries),
        shot_entries=tuple(shots),
        label_embedding_path=base / raw["label_embeddings"]
        if "label_embeddings" in raw
        else None,
        ground_truth_path=base / raw["ground_truth"] if "ground_truth" in raw else None,
        image_dir=base / raw["images"] if "images" in raw else None,
    )

    for entry in manifest.learner_entries:
        rows, cols = read_feature_header(entry.feature_path)
        if rows != num_samples:
            raise ManifestError(
                f"learner {entry.learner_id!r}: file has {rows} rows, "
                f"manifest declares {num_samples} samples",
                code="dim_mismatch",
            )
        if cols != entry.dim:
            raise ManifestError(
                f"learner {entry.learner_id!r}: file has dim {cols}, "
                f"manifest declares {entry.dim}",
                code="dim_mismatch",
            )
    if manifest.label_embedding_path is not None:
        rows, _ = read_feature_header(manifest.label_embedding_path)
        if rows != manifest.num_classes:
            raise ManifestError(
                f"label embeddings have {rows} rows, expected {manifest.num_classes}",
                code="dim_mismatch",
            )
    if manifest.ground_truth_path is not None and not manifest.ground_truth_path.exists():
        raise ManifestError(
            f"ground truth file not found: {manifest.ground_truth_path}",
            code="missing_file",
        )
    return manifest


def read_feature_header(path) -> tuple[int, int]:
    """Read (rows, cols) from a feature file without loading the payload."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            header = fh.read(_HEADER.size)
    except FileNotFoundError:
        raise ManifestError(f"feature file not found: {path}", code="missing_file")
    if len(header) < _HEADER.size:
        raise FeatureFileError(f"{path}: truncated header", code="truncated_payload")
    magic, rows, cols = _HEADER.unpack(header)
    if magic != MAGIC:
        raise FeatureFileError(
            f"{path}: bad magic {magic!r}, expected {MAGIC!r}", code="bad_magic"
        )
    return rows, cols


def load_raw_features(path) -> np.ndarray:
    """Load a feature file as the on-disk float32 matrix, unnormalized."""
    path = Path(path)
    rows, cols = read_feature_header(path)
    payload = path.read_bytes()[_HEADER.size :]
    expected = rows * cols * 4
    if len(payload) < expected:
        raise FeatureFileError(
            f"{path}: payload has {len(payload)} bytes, expected {expected}",
            code="truncated_payload",
        )
    data = np.frombuffer(payload[:expected], dtype="<f4").reshape(rows, cols)
    return data.copy()


def write_feature_file(path, matrix: np.ndarray) -> None:
    """Serialize a 2-D array to the binary feature format (as float32)."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    rows, cols = matrix.shape
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(matrix.tobytes())


def load_feature_matrix(entry: LearnerEntry) -> FeatureMatrix:
    """Load one learner's features and L2-normalize every row."""
    raw = load_raw_features(entry.feature_path).astype(np.float64)
    norms = np.linalg.norm(raw, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise FeatureFileError(
            f"{entry.feature_path}: all-zero feature row at index {zero[0]}",
            code="zero_row",
        )
    data = raw / norms[:, None]
    return FeatureMatrix(rows=raw.shape[0], cols=raw.shape[1], data=data)


def load_label_embeddings(path) -> np.ndarray:
    """Load per-class label embeddings (one row per class), unnormalized."""
    return load_raw_features(path).astype(np.float64)


def load_ground_truth(path, num_samples: int, num_classes: int) -> np.ndarray:
    """Load ground-truth labels as an int array with -1 for unlabeled samples."""
    labels = np.full(num_samples, -1, dtype=np.int64)
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["sample", "class"]:
            raise ManifestError(
                f"{path}: ground truth header must be 'sample,class'",
                code="parse_error",
            )
        for row in reader:
            s, c = int(row["sample"]), int(row["class"])
            if not 0 <= s < num_samples:
                raise ManifestError(
                    f"{path}: sample index {s} out of range", code="parse_error"
                )
            if not 0 <= c < num_classes:
                raise ManifestError(
                    f"{path}: class index {c} out of range", code="parse_error"
                )
            labels[s] = c
    return labels


@dataclass
class DataBundle:
    """Everything loaded for one manifest; immutable after construction."""

    manifest: Manifest
    features: dict[str, FeatureMatrix]
    shots: ShotSet
    label_embeddings: np.ndarray | None = None
    ground_truth: np.ndarray | None = None
    _concat_cache: dict = field(default_factory=dict, repr=False)

    @property
    def learner_ids(self) -> list[str]:
        return [e.learner_id for e in self.manifest.learner_entries]

    def concatenated_features(self, learner_ids) -> np.ndarray:
        """Horizontal concatenation of the given learners' feature blocks."""
        key = tuple(learner_ids)
        if key not in self._concat_cache:
            self._concat_cache[key] = np.hstack(
                [self.features[lid].data for lid in key]
            )
        return self._concat_cache[key]


def load_bundle(manifest: Manifest) -> DataBundle:
    """Load all matrices and side files referenced by a validated manifest."""
    features = {
        e.learner_id: load_feature_matrix(e) for e in manifest.learner_entries
    }
    embeddings = None
    if manifest.label_embedding_path is not None:
        embeddings = load_label_embeddings(manifest.label_embedding_path)
    ground_truth = None
    if manifest.ground_truth_path is not None:
        ground_truth = load_ground_truth(
            manifest.ground_truth_path, manifest.num_samples, manifest.num_classes
        )
    return DataBundle(
        manifest=manifest,
        features=features,
        shots=ShotSet(manifest.shot_entries),
        label_embeddings=embeddings,
        ground_truth=ground_truth,
    )
