"""Basis-relabeling permutations with cycle decomposition and the NBDS metric."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


class Permutation:
    """A bijection on {0, ..., size-1}; map[i] is the destination of source i."""

    __slots__ = ("size", "map", "_cycles")

    def __init__(self, mapping):
        arr = np.asarray(mapping, dtype=np.int64).copy()
        if arr.ndim != 1:
            raise ValidationError("permutation map must be a flat integer vector")
        n = arr.shape[0]
        seen = np.zeros(n, dtype=bool)
        if n and (arr.min() < 0 or arr.max() >= n):
            raise ValidationError("permutation map has out-of-range entries")
        seen[arr] = True
        if not seen.all():
            raise ValidationError("permutation map is not a bijection")
        arr.flags.writeable = False
        self.size = n
        self.map = arr
        self._cycles = None

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return cls(np.arange(size, dtype=np.int64))

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.map, np.arange(self.size)))

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Relabel: out[map[i]] = values[i]."""
        values = np.asarray(values)
        if values.shape[0] != self.size:
            raise ValidationError("vector length does not match permutation size")
        out = np.empty_like(values)
        out[self.map] = values
        return out

    def inverse(self) -> "Permutation":
        inv = np.empty(self.size, dtype=np.int64)
        inv[self.map] = np.arange(self.size, dtype=np.int64)
        return Permutation(inv)

    @property
    def cycles(self) -> list[list[int]]:
        """Disjoint cycles, each rotated to start at its minimum, sorted by minimum.

        Fixed points appear as 1-cycles, so the cycles partition the index set.
        """
        if self._cycles is None:
            mp = self.map
            visited = np.zeros(self.size, dtype=bool)
            cycles = []
            for start in range(self.size):
                if visited[start]:
                    continue
                cyc = [start]
                visited[start] = True
                nxt = int(mp[start])
                while nxt != start:
                    cyc.append(nxt)
                    visited[nxt] = True
                    nxt = int(mp[nxt])
                cycles.append(cyc)
            self._cycles = cycles
        return self._cycles

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.map, other.map)

    def __hash__(self) -> int:
        return hash(("Permutation", self.map.tobytes()))

    def __repr__(self) -> str:
        return f"Permutation({self.map.tolist()!r})"


def cycle_decomposition(perm: Permutation) -> list[list[int]]:
    """Canonical disjoint cycles of perm; see Permutation.cycles."""
    return perm.cycles


def nbds(perm: Permutation) -> tuple[int, int]:
    """Number of distinct cycle lengths: (including 1-cycles, excluding 1-cycles)."""
    lengths = {len(c) for c in perm.cycles}
    incl = len(lengths)
    excl = len(lengths - {1})
    return incl, excl
