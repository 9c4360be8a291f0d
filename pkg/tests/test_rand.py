from hypothesis import given
from hypothesis import strategies as st

from verinfer.rand import Csprng


@given(st.integers(min_value=0, max_value=2**64), st.integers(min_value=1, max_value=10**30))
def test_randbelow_range_and_determinism(seed, n):
    a, b = Csprng(seed), Csprng(seed)
    xs = [a.randbelow(n) for _ in range(5)]
    assert xs == [b.randbelow(n) for _ in range(5)]
    assert all(0 <= x < n for x in xs)


def test_seed_types_and_forks():
    assert Csprng(("a", 1)).random_bytes(16) != Csprng(("a", 2)).random_bytes(16)
    assert Csprng(("a", 1)).random_bytes(16) == Csprng(("a", 1)).random_bytes(16)
    base = Csprng(b"x")
    assert base.fork("p").random_bytes(8) != base.fork("q").random_bytes(8)
    assert 0 <= Csprng(1).random() < 1
