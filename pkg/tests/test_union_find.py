from services.union_find import UnionFind


def test_singletons():
    uf = UnionFind(4)
    assert len(uf) == 4
    assert all(uf.find(k) == k for k in range(4))
    assert not uf.same(0, 1)


def test_union_and_count():
    uf = UnionFind(6)
    assert uf.union(0, 1)
    assert uf.union(2, 3)
    assert uf.union(1, 3)
    assert not uf.union(0, 2)
    assert uf.unions == 3
    assert uf.same(0, 3)
    assert not uf.same(0, 4)


def test_path_compression_flattens():
    uf = UnionFind(64)
    for k in range(63):
        uf.union(k, k + 1)
    root = uf.find(0)
    for k in range(64):
        uf.find(k)
    assert all(uf.parents[k] == root for k in range(64))
    assert uf.unions == 63


def test_rank_stays_logarithmic():
    uf = UnionFind(1024)
    step = 1
    while step < 1024:
        for k in range(0, 1024, 2 * step):
            uf.union(k, k + step)
        step *= 2
    assert max(uf.ranks) <= 10
    assert len({uf.find(k) for k in range(1024)}) == 1
