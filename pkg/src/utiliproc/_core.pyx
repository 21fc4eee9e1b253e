# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled multiset kernels; see ``_core_py`` for the reference versions."""


def submultisets(tuple counts):
    cdef Py_ssize_t n = len(counts)
    cdef Py_ssize_t i
    cdef list out = []
    cdef long[64] cur
    cdef long[64] cap
    if n > 64:
        raise ValueError("at most 64 atom kinds")
    for i in range(n):
        cur[i] = 0
        cap[i] = counts[i]
    while True:
        out.append(tuple([cur[i] for i in range(n)]))
        i = 0
        while i < n:
            if cur[i] < cap[i]:
                cur[i] += 1
                break
            cur[i] = 0
            i += 1
        if i == n:
            return out


def split_pairs(tuple counts):
    cdef Py_ssize_t n = len(counts)
    cdef Py_ssize_t i
    cdef list out = []
    cdef tuple s
    for s in submultisets(counts):
        out.append((s, tuple([<long>counts[i] - <long>s[i] for i in range(n)])))
    return out


def add_within(tuple a, tuple b, tuple caps):
    cdef Py_ssize_t n = len(a)
    cdef Py_ssize_t i
    cdef long z
    cdef list out = [0] * n
    for i in range(n):
        z = <long>a[i] + <long>b[i]
        if z > <long>caps[i]:
            return None
        out[i] = z
    return tuple(out)


def sub_if_contained(tuple a, tuple b):
    cdef Py_ssize_t n = len(a)
    cdef Py_ssize_t i
    cdef long z
    cdef list out = [0] * n
    for i in range(n):
        z = <long>a[i] - <long>b[i]
        if z < 0:
            return None
        out[i] = z
    return tuple(out)
