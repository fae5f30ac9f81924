"""Dictionaries structured as a union of sub-bases.

A :class:`Dictionary` is an ``m x n`` real matrix with unit-norm columns,
split left to right into ``N`` contiguous blocks by a :class:`BlockPartition`.
Column indices are 0-based throughout the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class BlockPartition:
    widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 1:
            raise InputError("partition needs at least one block")
        if any(w < 1 for w in widths):
            raise InputError(f"block widths must be >= 1, got {list(widths)}")
        object.__setattr__(self, "widths", widths)

    @classmethod
    def parse(cls, text: str) -> "BlockPartition":
        """Build a partition from ``"8,8"`` or a JSON object ``{"widths": [8, 8]}``."""
        text = text.strip()
        try:
            if text.startswith("{"):
                widths = json.loads(text)["widths"]
            else:
                widths = [int(tok) for tok in text.split(",") if tok.strip()]
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot parse partition {text!r}: {exc}") from None
        return cls(tuple(widths))

    @classmethod
    def from_json_file(cls, path: str | Path) -> "BlockPartition":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(tuple(payload["widths"]))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot read partition file {path}: {exc}") from None

    def to_json(self) -> str:
        return json.dumps({"widths": list(self.widths)})

    @property
    def n_blocks(self) -> int:
        return len(self.widths)

    @property
    def n(self) -> int:
        return sum(self.widths)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for w in self.widths:
            out.append(acc)
            acc += w
        return tuple(out)

    def block_range(self, i: int) -> range:
        if not 0 <= i < self.n_blocks:
            raise InputError(f"block index {i} out of range for {self.n_blocks} blocks")
        start = self.offsets[i]
        return range(start, start + self.widths[i])

    def block_of(self, j: int) -> int:
        """Block containing global column ``j``."""
        if not 0 <= j < self.n:
            raise InputError(f"column index {j} out of range [0, {self.n})")
        acc = 0
        for i, w in enumerate(self.widths):
            acc += w
            if j < acc:
                return i
        raise AssertionError("unreachable")

    def split(self, indices: Iterable[int]) -> tuple[tuple[int, ...], ...]:
        """Split global column indices into per-block local index tuples."""
        per_block: list[list[int]] = [[] for _ in self.widths]
        offsets = self.offsets
        for j in sorted(int(j) for j in indices):
            i = self.block_of(j)
            per_block[i].append(j - offsets[i])
        return tuple(tuple(b) for b in per_block)


@dataclass(frozen=True)
class NormalizationRecord:
    """Original column norms; ``scales[j] * normalized[:, j] == original[:, j]``."""

    scales: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Dictionary:
    matrix: np.ndarray
    partition: BlockPartition
    normalization: NormalizationRecord | None = field(default=None)

    def __post_init__(self):
        a = np.array(self.matrix, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise InputError(f"dictionary must be a non-empty 2-D matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("dictionary contains non-finite entries")
        if self.partition.n != a.shape[1]:
            raise InputError(
                f"partition widths {list(self.partition.widths)} sum to "
                f"{self.partition.n}, matrix has {a.shape[1]} columns"
            )
        norms = np.linalg.norm(a, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise InputError(
                f"column {int(bad[0])} has norm {norms[bad[0]]!r}; columns must be unit-norm "
                "(enable normalization to rescale)"
            )
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @classmethod
    def from_matrix(
        cls,
        matrix,
        widths: BlockPartition | Sequence[int] | None = None,
        normalize: bool = False,
    ) -> "Dictionary":
        a = np.asarray(matrix, dtype=np.float64)
        if a.ndim != 2:
            raise InputError(f"expected a 2-D matrix, got shape {a.shape}")
        if widths is None:
            partition = BlockPartition((a.shape[1],))
        elif isinstance(widths, BlockPartition):
            partition = widths
        else:
            partition = BlockPartition(tuple(widths))
        if partition.n != a.shape[1]:
            raise InputError(
                f"partition widths {list(partition.widths)} sum to {partition.n}, "
                f"matrix has {a.shape[1]} columns"
            )
        if not normalize:
            return cls(a, partition)
        if not np.all(np.isfinite(a)):
            raise InputError("dictionary contains non-finite entries")
        norms = np.linalg.norm(a, axis=0)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise InputError(f"column {int(zero[0])} is zero and cannot be normalized")
        record = NormalizationRecord(tuple(float(s) for s in norms))
        return cls(a / norms, partition, record)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_blocks(self) -> int:
        return self.partition.n_blocks

    def block(self, i: int) -> np.ndarray:
        r = self.partition.block_range(i)
        return self.matrix[:, r.start : r.stop]


def gram(d: Dictionary) -> np.ndarray:
    """Gram matrix ``A^T A``, stored exactly symmetric."""
    g = d.matrix.T @ d.matrix
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def columns(d: Dictionary, indices: Iterable[int]) -> np.ndarray:
    """Columns of ``d`` at ``indices``, in ascending index order."""
    idx = [int(j) for j in indices]
    if len(set(idx)) != len(idx):
        raise InputError(f"duplicate column index in {idx}")
    for j in idx:
        if not 0 <= j < d.n:
            raise InputError(f"column index {j} out of range [0, {d.n})")
    return d.matrix[:, sorted(idx)]


def read_matrix_csv(path: str | Path) -> np.ndarray:
    """Read a dense row-major CSV matrix (no header)."""
    rows: list[list[float]] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric entry in {line!r}") from None
    if not rows:
        raise InputError(f"{path}: empty matrix file")
    width = len(rows[0])
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InputError(f"{path}: row {lineno} has {len(row)} entries, expected {width}")
    return np.array(rows, dtype=np.float64)


def write_matrix_csv(path: str | Path, matrix) -> None:
    a = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lines = [",".join(format(float(v), ".17g") for v in row) for row in a]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_vector_csv(path: str | Path) -> np.ndarray:
    """Read a vector stored either as one column or as one row."""
    a = read_matrix_csv(path)
    if a.shape[0] != 1 and a.shape[1] != 1:
        raise InputError(f"{path}: expected a vector, got a {a.shape[0]}x{a.shape[1]} matrix")
    return a.ravel()


def write_vector_csv(path: str | Path, vector) -> None:
    write_matrix_csv(path, np.asarray(vector, dtype=np.float64).reshape(-1, 1))


def load_dictionary(
    matrix_path: str | Path,
    partition: BlockPartition | Sequence[int] | None = None,
    normalize: bool = False,
) -> Dictionary:
    return Dictionary.from_matrix(read_matrix_csv(matrix_path), partition, normalize)


def save_dictionary(d: Dictionary, matrix_path: str | Path, partition_path: str | Path | None = None) -> None:
    write_matrix_csv(matrix_path, d.matrix)
    if partition_path is not None:
        Path(partition_path).write_text(d.partition.to_json() + "\n", encoding="utf-8")
