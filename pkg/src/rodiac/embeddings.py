# -*- coding: utf-8 -*-
"""Pretrained word vector loading and the diacritic-stripped averaged table.

Each diacritic-free word is represented by the mean of the vectors of all
vocabulary words that strip (lowercase + diacritics removed) to it, since the
original diacritized word is unknown at inference time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .textnorm import normalize, strip_diacritics

CACHE_MAGIC = b"DIAC-EMB1"


class VectorFormatError(ValueError):
    pass


@dataclass
class RawVectorTable:
    dim: int
    entries: dict[str, np.ndarray]
    duplicate_count: int = 0


@dataclass
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray]
    zero_vec: np.ndarray = field(init=False)

    def __post_init__(self):
        self.zero_vec = np.zeros(self.dim, dtype=np.float32)

    def lookup(self, stripped_word: str) -> np.ndarray:
        """Vector for a lowercase diacritic-free word; zeros when unknown."""
        return self.entries.get(stripped_word, self.zero_vec)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def load_vectors(path: str) -> RawVectorTable:
    """Read the standard text vector format: "<count> <dim>" header, then one
    word plus ``dim`` floats per line.  Duplicate words: last wins, counted."""
    entries: dict[str, np.ndarray] = {}
    duplicates = 0
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline()
        parts = header.split()
        if len(parts) != 2:
            raise VectorFormatError(f"{path}:1: malformed header {header.strip()!r}")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise VectorFormatError(f"{path}:1: non-integer header {header.strip()!r}")
        if count < 0 or dim <= 0:
            raise VectorFormatError(f"{path}:1: invalid header values {count} {dim}")
        lineno = 1
        for line in f:
            lineno += 1
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(" ")
            # Some vector files end lines with a trailing space.
            if fields and fields[-1] == "":
                fields.pop()
            if len(fields) != dim + 1:
                raise VectorFormatError(
                    f"{path}:{lineno}: expected {dim + 1} fields, got {len(fields)}")
            word = normalize(fields[0])
            try:
                vec = np.array([float(v) for v in fields[1:]], dtype=np.float32)
            except ValueError:
                raise VectorFormatError(f"{path}:{lineno}: non-numeric vector value")
            if word in entries:
                duplicates += 1
            entries[word] = vec
        if len(entries) + duplicates != count:
            raise VectorFormatError(
                f"{path}: header declares {count} vectors, file has "
                f"{len(entries) + duplicates}")
    return RawVectorTable(dim=dim, entries=entries, duplicate_count=duplicates)


def build_stripped_table(raw: RawVectorTable) -> EmbeddingTable:
    """Average raw vectors over groups sharing a stripped lowercase form.

    Deterministic regardless of input order (sum in sorted key order).
    """
    groups: dict[str, list[str]] = {}
    for word in raw.entries:
        key = strip_diacritics(word.lower())
        groups.setdefault(key, []).append(word)
    entries: dict[str, np.ndarray] = {}
    for key in sorted(groups):
        words = sorted(groups[key])
        acc = np.zeros(raw.dim, dtype=np.float64)
        for w in words:
            acc += raw.entries[w]
        entries[key] = (acc / len(words)).astype(np.float32)
    return EmbeddingTable(dim=raw.dim, entries=entries)


def save_cache(table: EmbeddingTable, path: str) -> None:
    """Binary cache: magic, dim u32 LE, count u64 LE, then per entry the
    length-prefixed UTF-8 key and dim float32 LE values."""
    with open(path, "wb") as f:
        f.write(CACHE_MAGIC)
        f.write(struct.pack("<I", table.dim))
        f.write(struct.pack("<Q", len(table.entries)))
        for key in sorted(table.entries):
            kb = key.encode("utf-8")
            f.write(struct.pack("<I", len(kb)))
            f.write(kb)
            f.write(table.entries[key].astype("<f4").tobytes())


def load_cache(path: str) -> EmbeddingTable:
    with open(path, "rb") as f:
        magic = f.read(len(CACHE_MAGIC))
        if magic != CACHE_MAGIC:
            raise VectorFormatError(f"{path}: bad cache magic {magic!r}")
        dim = struct.unpack("<I", _read_exact(f, 4, path))[0]
        count = struct.unpack("<Q", _read_exact(f, 8, path))[0]
        entries: dict[str, np.ndarray] = {}
        for _ in range(count):
            klen = struct.unpack("<I", _read_exact(f, 4, path))[0]
            key = _read_exact(f, klen, path).decode("utf-8")
            vec = np.frombuffer(_read_exact(f, 4 * dim, path), dtype="<f4").copy()
            entries[key] = vec
        return EmbeddingTable(dim=dim, entries=entries)


def _read_exact(f, n: int, path: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise VectorFormatError(f"{path}: truncated cache file")
    return data
