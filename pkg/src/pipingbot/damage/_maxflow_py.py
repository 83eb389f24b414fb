"""Pure-Python max-flow kernels.

Both take ``(n, s, t, tails, heads, caps)`` with integer capacities and
return ``(value, flows)`` where ``flows[i]`` is the flow on edge ``i``.
Edge ``i`` is stored as residual arc ``2i``; its reverse is ``2i + 1``.
"""
from __future__ import annotations

from collections import deque


def _residual(n, tails, heads, caps):
    m = len(tails)
    to = [0] * (2 * m)
    cap = [0] * (2 * m)
    nxt = [-1] * (2 * m)
    first = [-1] * n
    for i in range(m):
        u, v = tails[i], heads[i]
        to[2 * i], cap[2 * i] = v, caps[i]
        to[2 * i + 1], cap[2 * i + 1] = u, 0
        nxt[2 * i] = first[u]
        first[u] = 2 * i
        nxt[2 * i + 1] = first[v]
        first[v] = 2 * i + 1
    return to, cap, nxt, first


def _flows(caps, cap):
    return [caps[i] - cap[2 * i] for i in range(len(caps))]


def dinic(n, s, t, tails, heads, caps):
    if s == t:
        raise ValueError("source and sink coincide")
    to, cap, nxt, first = _residual(n, tails, heads, caps)
    total = 0
    while True:
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            a = first[v]
            while a != -1:
                if cap[a] > 0 and level[to[a]] < 0:
                    level[to[a]] = level[v] + 1
                    q.append(to[a])
                a = nxt[a]
        if level[t] < 0:
            break
        it = list(first)
        path: list[int] = []
        v = s
        while True:
            if v == t:
                f = min(cap[a] for a in path)
                for a in path:
                    cap[a] -= f
                    cap[a ^ 1] += f
                total += f
                path.clear()
                v = s
                continue
            a = it[v]
            while a != -1 and not (cap[a] > 0 and level[to[a]] == level[v] + 1):
                a = nxt[a]
            it[v] = a
            if a != -1:
                path.append(a)
                v = to[a]
                continue
            # dead end: retreat and never come back here this phase
            if v == s:
                break
            level[v] = -1
            a = path.pop()
            v = to[a ^ 1]
            it[v] = nxt[a]
    return total, _flows(caps, cap)


def edmonds_karp(n, s, t, tails, heads, caps):
    if s == t:
        raise ValueError("source and sink coincide")
    to, cap, nxt, first = _residual(n, tails, heads, caps)
    total = 0
    while True:
        via = [-1] * n
        via[s] = -2
        q = deque([s])
        while q and via[t] == -1:
            v = q.popleft()
            a = first[v]
            while a != -1:
                if cap[a] > 0 and via[to[a]] == -1:
                    via[to[a]] = a
                    q.append(to[a])
                a = nxt[a]
        if via[t] == -1:
            break
        f = None
        v = t
        while v != s:
            a = via[v]
            f = cap[a] if f is None else min(f, cap[a])
            v = to[a ^ 1]
        v = t
        while v != s:
            a = via[v]
            cap[a] -= f
            cap[a ^ 1] += f
            v = to[a ^ 1]
        total += f
    return total, _flows(caps, cap)
