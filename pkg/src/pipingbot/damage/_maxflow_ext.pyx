# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled max-flow kernels; same contract as the pure-Python module."""
from libc.stdlib cimport malloc, free

ctypedef long long i64


cdef struct Residual:
    int n
    int m2
    int *to
    i64 *cap
    int *nxt
    int *first


cdef int _build(Residual *r, int n, tails, heads, caps) except -1:
    cdef int m = len(tails)
    cdef int i, u, v
    r.n = n
    r.m2 = 2 * m
    r.to = <int *> malloc(max(1, 2 * m) * sizeof(int))
    r.cap = <i64 *> malloc(max(1, 2 * m) * sizeof(i64))
    r.nxt = <int *> malloc(max(1, 2 * m) * sizeof(int))
    r.first = <int *> malloc(max(1, n) * sizeof(int))
    if not r.to or not r.cap or not r.nxt or not r.first:
        _release(r)
        raise MemoryError()
    for i in range(n):
        r.first[i] = -1
    for i in range(m):
        u = tails[i]
        v = heads[i]
        if u < 0 or u >= n or v < 0 or v >= n:
            _release(r)
            raise ValueError("edge endpoint out of range")
        r.to[2 * i] = v
        r.cap[2 * i] = caps[i]
        r.to[2 * i + 1] = u
        r.cap[2 * i + 1] = 0
        r.nxt[2 * i] = r.first[u]
        r.first[u] = 2 * i
        r.nxt[2 * i + 1] = r.first[v]
        r.first[v] = 2 * i + 1
    return 0


cdef void _release(Residual *r):
    free(r.to)
    free(r.cap)
    free(r.nxt)
    free(r.first)
    r.to = NULL
    r.cap = NULL
    r.nxt = NULL
    r.first = NULL


cdef list _flows(Residual *r, caps):
    return [caps[i] - r.cap[2 * i] for i in range(len(caps))]


def dinic(int n, int s, int t, tails, heads, caps):
    if s == t:
        raise ValueError("source and sink coincide")
    cdef Residual r
    _build(&r, n, tails, heads, caps)
    cdef int *level = <int *> malloc(max(1, n) * sizeof(int))
    cdef int *queue = <int *> malloc(max(1, n) * sizeof(int))
    cdef int *it = <int *> malloc(max(1, n) * sizeof(int))
    cdef int *path = <int *> malloc(max(1, n) * sizeof(int))
    cdef int qh, qt, v, a, depth, k
    cdef i64 f, total = 0
    try:
        if not level or not queue or not it or not path:
            raise MemoryError()
        while True:
            for k in range(n):
                level[k] = -1
            level[s] = 0
            queue[0] = s
            qh = 0
            qt = 1
            while qh < qt:
                v = queue[qh]
                qh += 1
                a = r.first[v]
                while a != -1:
                    if r.cap[a] > 0 and level[r.to[a]] < 0:
                        level[r.to[a]] = level[v] + 1
                        queue[qt] = r.to[a]
                        qt += 1
                    a = r.nxt[a]
            if level[t] < 0:
                break
            for k in range(n):
                it[k] = r.first[k]
            depth = 0
            v = s
            while True:
                if v == t:
                    f = r.cap[path[0]]
                    for k in range(1, depth):
                        if r.cap[path[k]] < f:
                            f = r.cap[path[k]]
                    for k in range(depth):
                        r.cap[path[k]] -= f
                        r.cap[path[k] ^ 1] += f
                    total += f
                    depth = 0
                    v = s
                    continue
                a = it[v]
                while a != -1 and not (r.cap[a] > 0 and level[r.to[a]] == level[v] + 1):
                    a = r.nxt[a]
                it[v] = a
                if a != -1:
                    path[depth] = a
                    depth += 1
                    v = r.to[a]
                    continue
                if v == s:
                    break
                level[v] = -1
                depth -= 1
                a = path[depth]
                v = r.to[a ^ 1]
                it[v] = r.nxt[a]
        return total, _flows(&r, caps)
    finally:
        free(level)
        free(queue)
        free(it)
        free(path)
        _release(&r)


def edmonds_karp(int n, int s, int t, tails, heads, caps):
    if s == t:
        raise ValueError("source and sink coincide")
    cdef Residual r
    _build(&r, n, tails, heads, caps)
    cdef int *via = <int *> malloc(max(1, n) * sizeof(int))
    cdef int *queue = <int *> malloc(max(1, n) * sizeof(int))
    cdef int qh, qt, v, a, k
    cdef i64 f, total = 0
    try:
        if not via or not queue:
            raise MemoryError()
        while True:
            for k in range(n):
                via[k] = -1
            via[s] = -2
            queue[0] = s
            qh = 0
            qt = 1
            while qh < qt and via[t] == -1:
                v = queue[qh]
                qh += 1
                a = r.first[v]
                while a != -1:
                    if r.cap[a] > 0 and via[r.to[a]] == -1:
                        via[r.to[a]] = a
                        queue[qt] = r.to[a]
                        qt += 1
                    a = r.nxt[a]
            if via[t] == -1:
                break
            f = -1
            v = t
            while v != s:
                a = via[v]
                if f < 0 or r.cap[a] < f:
                    f = r.cap[a]
                v = r.to[a ^ 1]
            v = t
            while v != s:
                a = via[v]
                r.cap[a] -= f
                r.cap[a ^ 1] += f
                v = r.to[a ^ 1]
            total += f
        return total, _flows(&r, caps)
    finally:
        free(via)
        free(queue)
        _release(&r)
