"""Zero-shot collision-type classification from precomputed embeddings.

Class prompt vectors and video frame vectors arrive in EMB1 bank files
written offline by the exporter tool, which keeps any model runtime out
of this package. Per class, the normalized prompt vectors are averaged
into a centroid (not re-normalized); at inference the normalized
embeddings of eight frames around the detected peak are averaged the
same way and the class with the highest dot product wins.

EMB1 binary layout (little-endian):

    magic 'EMB1' | section u8 (0=prompts, 1=frames) | dim u32 | count u32
    then per entry: name_len u16 | name UTF-8 | dim x float32

Frame entries are keyed ``"<video_id>#<frame_index>"``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .taxonomy import CLASS_ORDER, canonical_class

__all__ = [
    "BankFormatError",
    "EmbeddingBank",
    "ClassPromptSet",
    "ClassCentroids",
    "ClassificationResult",
    "bank_bytes",
    "parse_bank",
    "read_bank",
    "write_bank",
    "frame_key",
    "l2_normalize",
    "load_prompt_sets",
    "default_prompt_sets",
    "build_class_centroids",
    "select_peak_frames",
    "aggregate_image_embedding",
    "classify",
]

_MAGIC = b"EMB1"
_SECTIONS = ("prompts", "frames")


class BankFormatError(ValueError):
    """Raised when an EMB1 byte stream or prompt-set file is malformed."""


@dataclass(eq=False)
class EmbeddingBank:
    """Named fixed-dimension vectors: one section of prompts or frames."""

    section: str
    dim: int
    entries: dict[str, np.ndarray]  # insertion-ordered, float32 vectors

    def __post_init__(self) -> None:
        if self.section not in _SECTIONS:
            raise ValueError(f"bank section must be one of {_SECTIONS}, got '{self.section}'")
        if self.dim < 1:
            raise ValueError(f"bank dim must be >= 1, got {self.dim}")
        for name, vec in self.entries.items():
            vec = np.asarray(vec, dtype=np.float32)
            if vec.shape != (self.dim,):
                raise ValueError(
                    f"bank entry '{name}' has shape {vec.shape}, expected ({self.dim},)"
                )
            self.entries[name] = vec

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def vector(self, name: str) -> np.ndarray:
        try:
            return self.entries[name]
        except KeyError:
            raise KeyError(f"bank has no entry named '{name}'") from None


def frame_key(video_id: str, frame_index: int) -> str:
    return f"{video_id}#{frame_index}"


def bank_bytes(bank: EmbeddingBank) -> bytes:
    """Serialize a bank in the EMB1 layout."""
    out = bytearray()
    out += _MAGIC
    out += struct.pack("<B", _SECTIONS.index(bank.section))
    out += struct.pack("<II", bank.dim, len(bank.entries))
    for name, vec in bank.entries.items():
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise BankFormatError(f"entry name longer than 65535 bytes: '{name[:40]}...'")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += vec.astype("<f4").tobytes()
    return bytes(out)


def parse_bank(data: bytes) -> EmbeddingBank:
    """Parse EMB1 bytes, rejecting bad magic, tags, duplicates, truncation."""
    if data[:4] != _MAGIC:
        raise BankFormatError(f"bad bank magic {data[:4]!r}, expected {_MAGIC!r}")
    if len(data) < 13:
        raise BankFormatError("truncated bank header")
    tag = data[4]
    if tag >= len(_SECTIONS):
        raise BankFormatError(f"unknown bank section tag {tag}")
    dim, count = struct.unpack_from("<II", data, 5)
    pos = 13
    vec_bytes = dim * 4
    entries: dict[str, np.ndarray] = {}
    for i in range(count):
        if pos + 2 > len(data):
            raise BankFormatError(f"truncated bank: entry {i} name length missing")
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if pos + name_len + vec_bytes > len(data):
            raise BankFormatError(f"truncated bank: entry {i} cut short")
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=pos).copy()
        pos += vec_bytes
        if name in entries:
            raise BankFormatError(f"duplicate bank entry name '{name}'")
        if not np.all(np.isfinite(vec)):
            raise BankFormatError(f"bank entry '{name}' contains non-finite values")
        entries[name] = vec
    return EmbeddingBank(section=_SECTIONS[tag], dim=int(dim), entries=entries)


def read_bank(path: Path | str) -> EmbeddingBank:
    return parse_bank(Path(path).read_bytes())


def write_bank(bank: EmbeddingBank, path: Path | str) -> None:
    Path(path).write_bytes(bank_bytes(bank))


@dataclass
class ClassPromptSet:
    """The prompt strings describing one collision class."""

    class_name: str
    prompts: list[str]

    def __post_init__(self) -> None:
        self.class_name = canonical_class(self.class_name)
        if not self.prompts:
            raise ValueError(f"class '{self.class_name}' has no prompts")


@dataclass(eq=False)
class ClassCentroids:
    """One averaged prompt vector per class, in taxonomy order."""

    dim: int
    vectors: dict[str, np.ndarray]


@dataclass
class ClassificationResult:
    predicted: str
    scores: dict[str, float]  # per-class similarity, taxonomy order


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale to unit length; a zero vector signals a corrupt bank entry."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def load_prompt_sets(path: Path | str) -> list[ClassPromptSet]:
    """Load a prompt-set JSON file covering exactly the five classes."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BankFormatError(f"cannot read prompt set {path}: {exc}") from exc
    return _prompt_sets_from_dict(raw, source=str(path))


def _prompt_sets_from_dict(raw: object, source: str) -> list[ClassPromptSet]:
    if not isinstance(raw, dict):
        raise BankFormatError(f"prompt set {source} must be a JSON object")
    by_class: dict[str, list[str]] = {}
    for key, prompts in raw.items():
        canon = canonical_class(str(key))
        if canon in by_class:
            raise BankFormatError(f"prompt set {source} repeats class '{canon}'")
        if not isinstance(prompts, list) or not all(isinstance(p, str) and p for p in prompts):
            raise BankFormatError(
                f"prompt set {source}: class '{canon}' must map to a list of non-empty strings"
            )
        by_class[canon] = list(prompts)
    missing = [c for c in CLASS_ORDER if c not in by_class]
    if missing:
        raise BankFormatError(f"prompt set {source} is missing classes {missing}")
    return [ClassPromptSet(class_name=c, prompts=by_class[c]) for c in CLASS_ORDER]


def default_prompt_sets() -> list[ClassPromptSet]:
    """The prompt sets shipped with the package (see data/default_prompts.json)."""
    raw = json.loads(
        resources.files("crashpipe").joinpath("data/default_prompts.json").read_text("utf-8")
    )
    return _prompt_sets_from_dict(raw, source="default_prompts.json")


def build_class_centroids(
    prompt_bank: EmbeddingBank, prompt_sets: list[ClassPromptSet]
) -> ClassCentroids:
    """Average each class's normalized prompt vectors (no re-normalization)."""
    vectors: dict[str, np.ndarray] = {}
    for ps in sorted(prompt_sets, key=lambda s: CLASS_ORDER.index(s.class_name)):
        acc = np.zeros(prompt_bank.dim, dtype=np.float64)
        for prompt in ps.prompts:
            if prompt not in prompt_bank:
                raise KeyError(
                    f"prompt bank has no entry for prompt '{prompt}' "
                    f"(class '{ps.class_name}')"
                )
            acc += l2_normalize(prompt_bank.vector(prompt))
        vectors[ps.class_name] = acc / len(ps.prompts)
    return ClassCentroids(dim=prompt_bank.dim, vectors=vectors)


def select_peak_frames(n_frames: int, peak_frame: int) -> list[int]:
    """Eight contiguous frame indices centered on the peak.

    The block peak-4 .. peak+3 is clamp-shifted into range; clips shorter
    than eight frames repeat their last frame to fill.
    """
    if n_frames < 1:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    if n_frames < 8:
        return list(range(n_frames)) + [n_frames - 1] * (8 - n_frames)
    start = max(0, min(peak_frame - 4, n_frames - 8))
    return list(range(start, start + 8))


def aggregate_image_embedding(
    frame_bank: EmbeddingBank, video_id: str, indices: list[int]
) -> np.ndarray:
    """Average the normalized embeddings of the selected frames."""
    acc = np.zeros(frame_bank.dim, dtype=np.float64)
    for idx in indices:
        key = frame_key(video_id, idx)
        if key not in frame_bank:
            raise KeyError(f"frame bank has no entry '{key}'")
        acc += l2_normalize(frame_bank.vector(key))
    return acc / len(indices)


def classify(v: np.ndarray, centroids: ClassCentroids) -> ClassificationResult:
    """Pick the class whose centroid has the highest dot product with ``v``.

    Ties break toward the earliest class in taxonomy order.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (centroids.dim,):
        raise ValueError(f"embedding shape {v.shape} does not match dim {centroids.dim}")
    scores = {name: float(v @ vec) for name, vec in centroids.vectors.items()}
    # max() keeps the first maximal element, i.e. the earliest class on ties.
    predicted = max(CLASS_ORDER, key=scores.__getitem__)
    return ClassificationResult(predicted=predicted, scores=scores)
