"""Pure-Python versions of the multiset kernels in ``_core.pyx``."""


def submultisets(counts):
    """All count vectors ``s`` with ``0 <= s[i] <= counts[i]``, in mixed-radix order."""
    n = len(counts)
    out = []
    cur = [0] * n
    while True:
        out.append(tuple(cur))
        i = 0
        while i < n:
            if cur[i] < counts[i]:
                cur[i] += 1
                break
            cur[i] = 0
            i += 1
        if i == n:
            return out


def split_pairs(counts):
    """Ordered 2-partitions ``(s, counts - s)`` of a count vector."""
    return [(s, tuple(c - x for c, x in zip(counts, s))) for s in submultisets(counts)]


def add_within(a, b, caps):
    """Component-wise sum, or ``None`` if some component exceeds its capacity."""
    out = []
    for x, y, c in zip(a, b, caps):
        z = x + y
        if z > c:
            return None
        out.append(z)
    return tuple(out)


def sub_if_contained(a, b):
    """``a - b`` when ``b <= a`` component-wise, else ``None``."""
    out = []
    for x, y in zip(a, b):
        if y > x:
            return None
        out.append(x - y)
    return tuple(out)
