"""
Disjoint-set forest over integer ids with union by rank and path compression.
"""
from typing import List


class UnionFind:
    """
    Elements are 0 .. size-1. `unions` counts successful merges, which is
    the work measure reported by the bisimulation check.
    """
    __slots__ = "parents", "ranks", "unions"

    def __init__(self, size: int):
        self.parents: List[int] = list(range(size))
        self.ranks: List[int] = [0] * size
        self.unions = 0

    def find(self, x: int) -> int:
        root = x
        parents = self.parents
        while parents[root] != root:
            root = parents[root]
        # path compression
        while parents[x] != root:
            parents[x], x = root, parents[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the classes of a and b. Returns False when already merged."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.ranks[ra] < self.ranks[rb]:
            ra, rb = rb, ra
        self.parents[rb] = ra
        if self.ranks[ra] == self.ranks[rb]:
            self.ranks[ra] += 1
        self.unions += 1
        return True

    def same(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def __len__(self) -> int:
        return len(self.parents)
